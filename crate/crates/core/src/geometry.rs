//! Cosine kernels and epsilon-ball neighborhoods.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::space::{Scalar, VectorSpace};

static ZERO_NORM_WARNED: AtomicBool = AtomicBool::new(false);

fn warn_zero_norm() {
    if !ZERO_NORM_WARNED.swap(true, Ordering::Relaxed) {
        log::warn!("zero-norm vector encountered; its cosine similarity is taken as 0");
    }
}

/// Dot product and both squared norms, accumulated in `f64` in index order.
#[inline]
pub(crate) fn dot_and_norms<T: Scalar>(a: &[T], b: &[T]) -> (f64, f64, f64) {
    debug_assert_eq!(a.len(), b.len());
    let mut dot = 0.0f64;
    let mut na = 0.0f64;
    let mut nb = 0.0f64;
    for (&x, &y) in a.iter().zip(b) {
        let x: f64 = x.into();
        let y: f64 = y.into();
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    (dot, na, nb)
}

#[inline]
pub(crate) fn similarity_from_parts(dot: f64, sq_norm_a: f64, sq_norm_b: f64) -> f64 {
    if sq_norm_a == 0.0 || sq_norm_b == 0.0 {
        warn_zero_norm();
        return 0.0;
    }
    (dot / (sq_norm_a.sqrt() * sq_norm_b.sqrt())).clamp(-1.0, 1.0)
}

/// Cosine of the angle between `a` and `b`, clamped to `[-1, 1]`. A zero
/// vector has similarity 0 with everything.
pub fn cosine_similarity<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    let (dot, na, nb) = dot_and_norms(a, b);
    similarity_from_parts(dot, na, nb)
}

/// `1 - cosine_similarity(a, b)`, in `[0, 2]`.
pub fn cosine_distance<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    1.0 - cosine_similarity(a, b)
}

/// Which rows take part in the neighborhood search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NeighborScope {
    All,
    Rows(Vec<usize>),
}

impl NeighborScope {
    fn resolve(&self, n: usize) -> Result<Vec<usize>> {
        let mut rows = match self {
            NeighborScope::All => (0..n).collect(),
            NeighborScope::Rows(rows) => rows.clone(),
        };
        rows.sort_unstable();
        rows.dedup();
        if rows.is_empty() {
            return Err(Error::Validation("neighborhood scope is empty".into()));
        }
        if let Some(&bad) = rows.iter().find(|&&r| r >= n) {
            return Err(Error::Validation(format!(
                "scope row {} out of range for {} rows",
                bad, n
            )));
        }
        Ok(rows)
    }
}

/// Symmetric epsilon-ball graph: `neighbors[i]` holds every `j != i` in scope
/// with `cosine_distance(v_i, v_j) <= radius`, ascending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodGraph {
    radius: f64,
    neighbors: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub nodes_with_neighbors: usize,
    pub edges: usize,
    /// `(degree, number of rows with that degree)`, ascending by degree.
    pub degree_histogram: Vec<(usize, usize)>,
}

impl NeighborhoodGraph {
    /// Graph with no edges over `n` rows.
    pub fn empty(n: usize, radius: f64) -> Self {
        NeighborhoodGraph {
            radius,
            neighbors: vec![Vec::new(); n],
        }
    }

    /// Builds a graph from explicit adjacency lists, checking symmetry, range
    /// and absence of self-loops.
    pub fn from_adjacency(radius: f64, mut neighbors: Vec<Vec<usize>>) -> Result<Self> {
        let n = neighbors.len();
        for (i, list) in neighbors.iter_mut().enumerate() {
            list.sort_unstable();
            list.dedup();
            if list.iter().any(|&j| j >= n || j == i) {
                return Err(Error::Validation(format!(
                    "row {} has an out-of-range or self neighbor",
                    i
                )));
            }
        }
        let graph = NeighborhoodGraph { radius, neighbors };
        if !graph.is_symmetric() {
            return Err(Error::Validation("neighbor lists are not symmetric".into()));
        }
        Ok(graph)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// All neighbor lists, indexed by row.
    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.neighbors
    }

    /// Number of rows (the vocabulary size of the space it was built on).
    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn neighbors(&self, row: usize) -> &[usize] {
        &self.neighbors[row]
    }

    /// Directed incidences `(i, j)` with `j` in `N(i)`; every edge appears in
    /// both directions.
    pub fn incidences(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().map(move |&j| (i, j)))
    }

    pub fn incidence_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum()
    }

    /// Undirected edge count.
    pub fn edge_count(&self) -> usize {
        self.incidence_count() / 2
    }

    pub fn is_symmetric(&self) -> bool {
        self.incidences()
            .all(|(i, j)| self.neighbors[j].binary_search(&i).is_ok())
    }

    pub fn stats(&self) -> GraphStats {
        let mut histogram = std::collections::BTreeMap::new();
        for list in &self.neighbors {
            *histogram.entry(list.len()).or_insert(0) += 1;
        }
        GraphStats {
            nodes: self.len(),
            nodes_with_neighbors: self.neighbors.iter().filter(|l| !l.is_empty()).count(),
            edges: self.edge_count(),
            degree_histogram: histogram.into_iter().collect(),
        }
    }
}

const BLOCK: usize = 64;

/// Epsilon-ball neighborhoods at cosine-distance `radius` among the rows in
/// `scope`.
///
/// The all-pairs pass is tiled into row blocks and spread over `threads`
/// workers. Squared norms are computed once per row and each pair's distance
/// uses the same accumulation order as [`cosine_distance`], so the result is
/// identical to a naive double loop and to itself under any thread count.
pub fn compute_neighborhoods<T: Scalar>(
    space: &VectorSpace<T>,
    radius: f64,
    scope: &NeighborScope,
    threads: usize,
) -> Result<NeighborhoodGraph> {
    if !(radius > 0.0 && radius <= 2.0) {
        return Err(Error::Config(format!(
            "radius must lie in (0, 2], got {}",
            radius
        )));
    }
    if threads == 0 {
        return Err(Error::Config("thread count must be >= 1".into()));
    }
    let rows = scope.resolve(space.len())?;
    let dim = space.dim();

    let mut data = Vec::with_capacity(rows.len() * dim);
    for &r in &rows {
        data.extend(space.vector(r).iter().map(|&v| -> f64 { v.into() }));
    }
    let data = &data;
    let sq_norms: Vec<f64> = data
        .chunks_exact(dim)
        .map(|v| v.iter().fold(0.0, |acc, &x| acc + x * x))
        .collect();
    let sq_norms = &sq_norms;

    let m = rows.len();
    let n_blocks = m.div_ceil(BLOCK);
    let tile = |bi: usize| -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        let i_range = bi * BLOCK..((bi + 1) * BLOCK).min(m);
        for bj in bi..n_blocks {
            let j_end = ((bj + 1) * BLOCK).min(m);
            for i in i_range.clone() {
                let a = &data[i * dim..(i + 1) * dim];
                let j_start = if bj == bi { i + 1 } else { bj * BLOCK };
                for j in j_start..j_end {
                    let b = &data[j * dim..(j + 1) * dim];
                    let dot = a.iter().zip(b).fold(0.0, |acc, (&x, &y)| acc + x * y);
                    let distance = 1.0 - similarity_from_parts(dot, sq_norms[i], sq_norms[j]);
                    if distance <= radius {
                        edges.push((i, j));
                    }
                }
            }
        }
        edges
    };

    let per_block: Vec<Vec<(usize, usize)>> = if threads == 1 {
        (0..n_blocks).map(tile).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {}", e)))?;
        pool.install(|| (0..n_blocks).into_par_iter().map(tile).collect())
    };

    let mut neighbors = vec![Vec::new(); space.len()];
    for (i, j) in per_block.into_iter().flatten() {
        let (ri, rj) = (rows[i], rows[j]);
        neighbors[ri].push(rj);
        neighbors[rj].push(ri);
    }
    for list in &mut neighbors {
        list.sort_unstable();
    }
    Ok(NeighborhoodGraph { radius, neighbors })
}

const CACHE_MAGIC: &[u8; 4] = b"EFNG";
const CACHE_VERSION: u32 = 1;

/// Content key for a neighborhood cache: SHA-256 over the matrix values, the
/// radius and the resolved scope.
pub fn cache_key<T: Scalar>(
    space: &VectorSpace<T>,
    radius: f64,
    scope: &NeighborScope,
) -> Result<[u8; 32]> {
    let rows = scope.resolve(space.len())?;
    let mut hasher = Sha256::new();
    hasher.update((space.len() as u64).to_le_bytes());
    hasher.update((space.dim() as u64).to_le_bytes());
    for v in space.matrix().iter() {
        let v: f64 = (*v).into();
        hasher.update(v.to_le_bytes());
    }
    hasher.update(radius.to_le_bytes());
    for r in rows {
        hasher.update((r as u64).to_le_bytes());
    }
    Ok(hasher.finalize().into())
}

/// Writes `graph` as: magic, format version, 32-byte key, radius, row count,
/// then each row's neighbor count followed by its sorted neighbor indices.
/// Integers are little-endian (`u32` for version and per-row data, `u64` for
/// the row count).
pub fn save_neighborhood_cache(
    graph: &NeighborhoodGraph,
    key: &[u8; 32],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    w.write_all(CACHE_MAGIC).map_err(io)?;
    w.write_all(&CACHE_VERSION.to_le_bytes()).map_err(io)?;
    w.write_all(key).map_err(io)?;
    w.write_all(&graph.radius.to_le_bytes()).map_err(io)?;
    w.write_all(&(graph.len() as u64).to_le_bytes())
        .map_err(io)?;
    for list in &graph.neighbors {
        w.write_all(&(list.len() as u32).to_le_bytes())
            .map_err(io)?;
        for &j in list {
            w.write_all(&(j as u32).to_le_bytes()).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

/// Loads a cached graph. Returns `Ok(None)` when the file is absent, was
/// written by another format version, or was built for a different key.
pub fn load_neighborhood_cache(
    path: impl AsRef<Path>,
    key: &[u8; 32],
) -> Result<Option<NeighborhoodGraph>> {
    let path = path.as_ref();
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(Error::io(path, e)),
    };
    let mut r = BufReader::new(file);
    let corrupt = |what: &str| {
        Error::Format(format!(
            "corrupt neighborhood cache {}: {}",
            path.display(),
            what
        ))
    };
    let mut read = |buf: &mut [u8]| r.read_exact(buf).map_err(|_| corrupt("truncated"));

    let mut magic = [0u8; 4];
    read(&mut magic)?;
    if &magic != CACHE_MAGIC {
        return Err(corrupt("bad magic"));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    read(&mut b4)?;
    if u32::from_le_bytes(b4) != CACHE_VERSION {
        return Ok(None);
    }
    let mut stored_key = [0u8; 32];
    read(&mut stored_key)?;
    if &stored_key != key {
        return Ok(None);
    }
    read(&mut b8)?;
    let radius = f64::from_le_bytes(b8);
    read(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    let mut neighbors = Vec::with_capacity(n);
    for _ in 0..n {
        read(&mut b4)?;
        let count = u32::from_le_bytes(b4) as usize;
        let mut list = Vec::with_capacity(count);
        for _ in 0..count {
            read(&mut b4)?;
            list.push(u32::from_le_bytes(b4) as usize);
        }
        neighbors.push(list);
    }
    NeighborhoodGraph::from_adjacency(radius, neighbors)
        .map(Some)
        .map_err(|_| corrupt("invalid adjacency"))
}
