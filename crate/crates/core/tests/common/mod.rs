//! Independent reference implementations and fixture helpers shared by the
//! integration tests. Nothing here calls the library's distance or objective
//! code unless the name says so.
#![allow(dead_code, clippy::needless_range_loop)]

use std::path::PathBuf;

use emofit::{ConstraintSet, NeighborhoodGraph, Pair, VectorSpace};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

/// Cosine distance written out directly: 1 - <a,b> / (|a| |b|), with a zero
/// vector treated as orthogonal to everything.
pub fn oracle_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut aa = 0.0;
    let mut bb = 0.0;
    for k in 0..a.len() {
        dot += a[k] * b[k];
        aa += a[k] * a[k];
        bb += b[k] * b[k];
    }
    if aa == 0.0 || bb == 0.0 {
        return 1.0;
    }
    let sim = (dot / (aa.sqrt() * bb.sqrt())).clamp(-1.0, 1.0);
    1.0 - sim
}

pub fn oracle_similarity(a: &[f64], b: &[f64]) -> f64 {
    1.0 - oracle_distance(a, b)
}

pub fn oracle_pr(vp: &[Vec<f64>], pos: &[(usize, usize)]) -> f64 {
    let mut total = 0.0;
    for &(w, e) in pos {
        let d = oracle_distance(&vp[w], &vp[e]);
        if d > 0.0 {
            total += d;
        }
    }
    total
}

pub fn oracle_nr(vp: &[Vec<f64>], neg: &[(usize, usize)]) -> f64 {
    let mut total = 0.0;
    for &(w, e) in neg {
        let d = oracle_distance(&vp[w], &vp[e]);
        if 1.0 - d > 0.0 {
            total += 1.0 - d;
        }
    }
    total
}

/// Double sum over rows and their neighbor lists, so each symmetric pair
/// counts twice.
pub fn oracle_vsp(v: &[Vec<f64>], vp: &[Vec<f64>], adj: &[Vec<usize>]) -> f64 {
    let mut total = 0.0;
    for i in 0..adj.len() {
        for &j in &adj[i] {
            total += (oracle_distance(&vp[i], &vp[j]) - oracle_distance(&v[i], &v[j])).abs();
        }
    }
    total
}

/// Epsilon-ball lists built from scratch with [`oracle_distance`], restricted
/// to `rows`.
pub fn oracle_neighbors(v: &[Vec<f64>], rows: &[usize], radius: f64) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); v.len()];
    for &i in rows {
        for &j in rows {
            if i != j && oracle_distance(&v[i], &v[j]) <= radius {
                adj[i].push(j);
            }
        }
    }
    for list in &mut adj {
        list.sort();
    }
    adj
}

/// Naive double loop over every pair using the library's scalar distance, the
/// reference for the blocked parallel kernel.
pub fn naive_neighbors(space: &VectorSpace<f32>, radius: f64) -> Vec<Vec<usize>> {
    let n = space.len();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if i != j && emofit::cosine_distance(space.vector(i), space.vector(j)) <= radius {
                adj[i].push(j);
            }
        }
    }
    adj
}

pub fn rows_f64<T: emofit::Scalar>(space: &VectorSpace<T>) -> Vec<Vec<f64>> {
    (0..space.len())
        .map(|i| space.vector(i).iter().map(|&x| x.into()).collect())
        .collect()
}

pub fn tokens(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("t{}", i)).collect()
}

pub fn space_f64(rows: &[Vec<f64>]) -> VectorSpace<f64> {
    VectorSpace::from_rows(tokens(rows.len()).into_iter().zip(rows.iter().cloned())).unwrap()
}

pub fn relative_error(actual: f64, expected: f64) -> f64 {
    let scale = actual.abs().max(expected.abs());
    if scale == 0.0 {
        0.0
    } else {
        (actual - expected).abs() / scale
    }
}

/// A random problem: original rows, perturbed rows, attraction and repulsion
/// pairs (duplicates allowed) and a random symmetric neighbor structure.
pub struct Instance {
    pub v: Vec<Vec<f64>>,
    pub vp: Vec<Vec<f64>>,
    pub pos: Vec<(usize, usize)>,
    pub neg: Vec<(usize, usize)>,
    pub adj: Vec<Vec<usize>>,
}

impl Instance {
    pub fn random(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Self {
        let v: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let vp = v
            .iter()
            .map(|row| {
                row.iter()
                    .map(|x| x + rng.random_range(-0.5..0.5))
                    .collect()
            })
            .collect();
        let pair = |rng: &mut ChaCha8Rng| (rng.random_range(0..n), rng.random_range(0..n));
        let pos = (0..rng.random_range(1..2 * n)).map(|_| pair(rng)).collect();
        let neg = (0..rng.random_range(1..2 * n)).map(|_| pair(rng)).collect();
        let mut adj = vec![Vec::new(); n];
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(0.3) {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        for list in &mut adj {
            list.sort();
        }
        Instance {
            v,
            vp,
            pos,
            neg,
            adj,
        }
    }

    pub fn space(&self) -> VectorSpace<f64> {
        space_f64(&self.v)
    }

    pub fn space_prime(&self) -> VectorSpace<f64> {
        space_f64(&self.vp)
    }

    pub fn constraints(&self) -> ConstraintSet {
        let to_pairs =
            |ps: &[(usize, usize)]| ps.iter().map(|&(w, e)| Pair::new(w, e)).collect::<Vec<_>>();
        ConstraintSet::new(to_pairs(&self.pos), to_pairs(&self.neg))
    }

    pub fn graph(&self) -> NeighborhoodGraph {
        NeighborhoodGraph::from_adjacency(0.2, self.adj.clone()).unwrap()
    }

    /// Total objective written out from the three oracles.
    pub fn oracle_objective(&self, vp: &[Vec<f64>]) -> f64 {
        oracle_pr(vp, &self.pos) + oracle_nr(vp, &self.neg) + oracle_vsp(&self.v, vp, &self.adj)
    }

    /// Smallest gap between any hinge or absolute-value argument and its kink.
    pub fn kink_margin(&self, vp: &[Vec<f64>]) -> f64 {
        let mut margin = f64::INFINITY;
        for &(w, e) in &self.pos {
            if w != e {
                margin = margin.min(oracle_distance(&vp[w], &vp[e]));
            }
        }
        for &(w, e) in &self.neg {
            if w != e {
                margin = margin.min((1.0 - oracle_distance(&vp[w], &vp[e])).abs());
            }
        }
        for i in 0..self.adj.len() {
            for &j in &self.adj[i] {
                let gap = oracle_distance(&vp[i], &vp[j]) - oracle_distance(&self.v[i], &self.v[j]);
                margin = margin.min(gap.abs());
            }
        }
        margin
    }
}

/// Central finite differences of the oracle objective at `vp`.
pub fn finite_difference(inst: &Instance, h: f64) -> Vec<Vec<f64>> {
    let mut grad = vec![vec![0.0; inst.vp[0].len()]; inst.vp.len()];
    let mut probe = inst.vp.clone();
    for i in 0..probe.len() {
        for k in 0..probe[i].len() {
            let x = probe[i][k];
            probe[i][k] = x + h;
            let up = inst.oracle_objective(&probe);
            probe[i][k] = x - h;
            let down = inst.oracle_objective(&probe);
            probe[i][k] = x;
            grad[i][k] = (up - down) / (2.0 * h);
        }
    }
    grad
}

/// The committed 12-word toy space and the constraints its lexicon produces.
pub fn toy() -> (VectorSpace, ConstraintSet) {
    let (space, _) = emofit::load_embeddings(
        fixture("toy_space.txt"),
        emofit::EmbeddingFormat::GloveText,
        &emofit::LoadOptions::default(),
    )
    .unwrap();
    let lexicon = emofit::parse_nrc_lexicon(fixture("toy_lexicon.tsv")).unwrap();
    let constraints =
        emofit::build_constraints(&lexicon, &emofit::EmotionModel::plutchik(), &space).unwrap();
    (space, constraints)
}

/// A reproducible random space of `n` tokens with full-precision `f32` values.
pub fn random_space(seed: u64, n: usize, dim: usize) -> VectorSpace {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n).map(|i| {
        let row: Vec<f32> = (0..dim).map(|_| rng.random_range(-3.0f32..3.0)).collect();
        (
            format!("w{}_{}", i, ["a", "ß", "é", "x-y", "1"][i % 5]),
            row,
        )
    });
    VectorSpace::from_rows(rows).unwrap()
}
