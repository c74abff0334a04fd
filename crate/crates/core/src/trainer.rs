//! Gradient descent that turns the original space into the retrofitted one.
//!
//! Two update schemes are available:
//!
//! * [`UpdateMode::Stochastic`]: every epoch shuffles one stream holding all
//!   positive pairs, negative pairs and neighbor incidences, then applies a
//!   per-item update to both rows involved.
//! * [`UpdateMode::FullBatch`]: one step along the full gradient per epoch;
//!   a step that would increase the objective is retried with half the
//!   learning rate, so the epoch log never increases.
//!
//! The working copy is kept in `f64`. With one thread a run is a pure
//! function of its inputs and seed. With more threads the stochastic stream
//! is split across workers that update a shared matrix without locking, and
//! only the statistical outcome is reproducible.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dot_and_norms, similarity_from_parts, NeighborScope, NeighborhoodGraph};
use crate::lexicon::ConstraintSet;
use crate::objective::{
    add_distance_gradient, nr_slope, pr_slope, vsp_slope, ObjectiveBreakdown, Problem, TermWeights,
};
use crate::space::{Scalar, VectorSpace};

/// Which rows get neighborhoods for the shape-preservation term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VspScope {
    /// Rows that occur in some constraint pair.
    #[default]
    Constrained,
    /// The whole vocabulary.
    All,
}

impl FromStr for VspScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constrained" => Ok(VspScope::Constrained),
            "all" => Ok(VspScope::All),
            other => Err(Error::Config(format!(
                "unknown scope '{}' (expected constrained or all)",
                other
            ))),
        }
    }
}

impl VspScope {
    /// Rows whose neighborhoods are needed for `constraints`.
    pub fn neighbor_scope(self, constraints: &ConstraintSet) -> NeighborScope {
        match self {
            VspScope::Constrained => NeighborScope::Rows(constraints.rows()),
            VspScope::All => NeighborScope::All,
        }
    }
}

impl fmt::Display for VspScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VspScope::Constrained => "constrained",
            VspScope::All => "all",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateMode {
    #[default]
    Stochastic,
    FullBatch,
}

impl FromStr for UpdateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stochastic" | "sgd" => Ok(UpdateMode::Stochastic),
            "full-batch" | "batch" => Ok(UpdateMode::FullBatch),
            other => Err(Error::Config(format!(
                "unknown update mode '{}' (expected stochastic or full-batch)",
                other
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Neighborhood radius (cosine distance). Used by callers that build the
    /// graph; the trainer itself receives the graph ready-made.
    pub radius: f64,
    pub seed: u64,
    pub freeze_anchors: bool,
    pub vsp_scope: VspScope,
    pub threads: usize,
    pub mode: UpdateMode,
    pub weights: TermWeights,
    /// Full-batch mode gives up on an epoch after this many halvings.
    pub max_halvings: u32,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            epochs: 20,
            learning_rate: 0.05,
            radius: 0.2,
            seed: 0,
            freeze_anchors: false,
            vsp_scope: VspScope::Constrained,
            threads: 1,
            mode: UpdateMode::Stochastic,
            weights: TermWeights::default(),
            max_halvings: 40,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.radius > 0.0 && self.radius <= 2.0) {
            return Err(Error::Config(format!(
                "radius must lie in (0, 2], got {}",
                self.radius
            )));
        }
        if self.threads == 0 {
            return Err(Error::Config("thread count must be >= 1".into()));
        }
        let w = self.weights;
        if [w.pr, w.nr, w.vsp]
            .iter()
            .any(|x| !(x.is_finite() && *x >= 0.0))
        {
            return Err(Error::Config("term weights must be finite and >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub objective: ObjectiveBreakdown,
    /// Rate in effect at the end of the epoch.
    pub learning_rate: f64,
}

#[derive(Clone, Debug)]
pub struct TrainingOutcome<T: Scalar = f32> {
    pub space: VectorSpace<T>,
    pub initial: ObjectiveBreakdown,
    pub log: Vec<EpochRecord>,
}

impl<T: Scalar> TrainingOutcome<T> {
    pub fn final_objective(&self) -> ObjectiveBreakdown {
        self.log.last().map(|r| r.objective).unwrap_or(self.initial)
    }
}

/// Runs the configured number of epochs and returns the retrofitted space.
pub fn train<T: Scalar>(
    space: &VectorSpace<T>,
    constraints: &ConstraintSet,
    graph: &NeighborhoodGraph,
    config: &TrainingConfig,
) -> Result<TrainingOutcome<T>> {
    train_with(space, constraints, graph, config, |_, _| Ok(()))
}

/// Like [`train`], calling `on_epoch` after every epoch with the epoch record
/// and the current working matrix (for logging or checkpoints).
pub fn train_with<T, F>(
    space: &VectorSpace<T>,
    constraints: &ConstraintSet,
    graph: &NeighborhoodGraph,
    config: &TrainingConfig,
    mut on_epoch: F,
) -> Result<TrainingOutcome<T>>
where
    T: Scalar,
    F: FnMut(&EpochRecord, ArrayView2<'_, f64>) -> Result<()>,
{
    config.validate()?;
    let problem = Problem::new(
        space,
        constraints,
        graph,
        config.weights,
        config.freeze_anchors,
    )?;
    let mut working: Array2<f64> = space.matrix().mapv(Into::into);
    let initial = problem.evaluate(working.view());
    let mut log = Vec::with_capacity(config.epochs);

    let stream = Stream::new(&problem);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<Item> = stream.items.clone();
    let mut learning_rate = config.learning_rate;
    let mut current = initial;

    for epoch in 1..=config.epochs {
        match config.mode {
            UpdateMode::Stochastic => {
                order.shuffle(&mut rng);
                if config.threads == 1 {
                    sgd_epoch(&problem, &order, &mut working, learning_rate);
                } else {
                    sgd_epoch_shared(
                        &problem,
                        &order,
                        &mut working,
                        learning_rate,
                        config.threads,
                    )?;
                }
                check_finite(space, &working, epoch)?;
                current = problem.evaluate(working.view());
            }
            UpdateMode::FullBatch => {
                let gradient = problem.gradient(working.view());
                let before = current.weighted_total(&config.weights);
                let mut halvings = 0;
                loop {
                    let candidate = &working - &(&gradient * learning_rate);
                    let evaluated = problem.evaluate(candidate.view());
                    let after = evaluated.weighted_total(&config.weights);
                    if after.is_finite() && after <= before {
                        check_finite(space, &candidate, epoch)?;
                        working = candidate;
                        current = evaluated;
                        break;
                    }
                    if halvings == config.max_halvings {
                        log::debug!(
                            "epoch {}: no decreasing step found, keeping the iterate",
                            epoch
                        );
                        break;
                    }
                    learning_rate /= 2.0;
                    halvings += 1;
                }
            }
        }
        let record = EpochRecord {
            epoch,
            objective: current,
            learning_rate,
        };
        log::info!(
            "epoch {:>3}: pr {:.6} nr {:.6} vsp {:.6} total {:.6}",
            epoch,
            current.pr,
            current.nr,
            current.vsp,
            current.total
        );
        on_epoch(&record, working.view())?;
        log.push(record);
    }

    let trained = space.with_matrix(working.mapv(T::from_f64))?;
    Ok(TrainingOutcome {
        space: trained,
        initial,
        log,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Item {
    Attract(u32),
    Repel(u32),
    Preserve(u32),
}

struct Stream {
    items: Vec<Item>,
}

impl Stream {
    fn new(problem: &Problem<'_>) -> Self {
        let items = (0..problem.positive.len() as u32)
            .map(Item::Attract)
            .chain((0..problem.negative.len() as u32).map(Item::Repel))
            .chain((0..problem.incidences.len() as u32).map(Item::Preserve))
            .collect();
        Stream { items }
    }
}

/// Rows touched by `item` and the weighted slope of its loss with respect to
/// their cosine distance.
fn item_step(problem: &Problem<'_>, item: Item, a_vals: &[f64], b_vals: &[f64]) -> f64 {
    let (dot, na, nb) = dot_and_norms(a_vals, b_vals);
    let d = 1.0 - similarity_from_parts(dot, na, nb);
    let w = problem.weights;
    match item {
        Item::Attract(_) => w.pr * pr_slope(d),
        Item::Repel(_) => w.nr * nr_slope(d),
        Item::Preserve(k) => w.vsp * vsp_slope(d, problem.incidences[k as usize].original),
    }
}

fn item_rows(problem: &Problem<'_>, item: Item) -> (usize, usize) {
    match item {
        Item::Attract(k) => {
            let p = problem.positive[k as usize];
            (p.word, p.emotion)
        }
        Item::Repel(k) => {
            let p = problem.negative[k as usize];
            (p.word, p.emotion)
        }
        Item::Preserve(k) => {
            let inc = problem.incidences[k as usize];
            (inc.i, inc.j)
        }
    }
}

fn sgd_epoch(problem: &Problem<'_>, order: &[Item], working: &mut Array2<f64>, lr: f64) {
    let dim = working.ncols();
    let data = working.as_slice_mut().expect("working copy is contiguous");
    let mut ga = vec![0.0; dim];
    let mut gb = vec![0.0; dim];

    for &item in order {
        let (a, b) = item_rows(problem, item);
        if a == b {
            continue;
        }
        let a_vals = &data[a * dim..(a + 1) * dim];
        let b_vals = &data[b * dim..(b + 1) * dim];
        let scale = item_step(problem, item, a_vals, b_vals);
        if scale == 0.0 {
            continue;
        }
        ga.iter_mut().for_each(|x| *x = 0.0);
        gb.iter_mut().for_each(|x| *x = 0.0);
        add_distance_gradient(a_vals, b_vals, scale, &mut ga, &mut gb);
        if !problem.is_frozen(a) {
            for (x, g) in data[a * dim..(a + 1) * dim].iter_mut().zip(&ga) {
                *x -= lr * g;
            }
        }
        if !problem.is_frozen(b) {
            for (x, g) in data[b * dim..(b + 1) * dim].iter_mut().zip(&gb) {
                *x -= lr * g;
            }
        }
    }
}

/// Matrix of `f64` bit patterns that several workers may read and write
/// without locks. Individual loads and stores are atomic; a row update is
/// not, and concurrent updates to the same row resolve last-write-wins.
struct SharedMatrix {
    cells: Vec<AtomicU64>,
    dim: usize,
}

impl SharedMatrix {
    fn new(m: &Array2<f64>) -> Self {
        SharedMatrix {
            cells: m.iter().map(|v| AtomicU64::new(v.to_bits())).collect(),
            dim: m.ncols(),
        }
    }

    fn load_row(&self, r: usize, out: &mut [f64]) {
        for (o, c) in out
            .iter_mut()
            .zip(&self.cells[r * self.dim..(r + 1) * self.dim])
        {
            *o = f64::from_bits(c.load(Ordering::Relaxed));
        }
    }

    fn store_row(&self, r: usize, vals: &[f64]) {
        for (v, c) in vals
            .iter()
            .zip(&self.cells[r * self.dim..(r + 1) * self.dim])
        {
            c.store(v.to_bits(), Ordering::Relaxed);
        }
    }

    fn write_back(&self, m: &mut Array2<f64>) {
        for (v, c) in m.iter_mut().zip(&self.cells) {
            *v = f64::from_bits(c.load(Ordering::Relaxed));
        }
    }
}

fn sgd_epoch_shared(
    problem: &Problem<'_>,
    order: &[Item],
    working: &mut Array2<f64>,
    lr: f64,
    threads: usize,
) -> Result<()> {
    let shared = SharedMatrix::new(working);
    let dim = shared.dim;
    let chunk = order.len().div_ceil(threads).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {}", e)))?;

    pool.scope(|scope| {
        for part in order.chunks(chunk) {
            let shared = &shared;
            scope.spawn(move |_| {
                let mut a_vals = vec![0.0; dim];
                let mut b_vals = vec![0.0; dim];
                let mut ga = vec![0.0; dim];
                let mut gb = vec![0.0; dim];
                for &item in part {
                    let (a, b) = item_rows(problem, item);
                    if a == b {
                        continue;
                    }
                    shared.load_row(a, &mut a_vals);
                    shared.load_row(b, &mut b_vals);
                    let scale = item_step(problem, item, &a_vals, &b_vals);
                    if scale == 0.0 {
                        continue;
                    }
                    ga.iter_mut().for_each(|x| *x = 0.0);
                    gb.iter_mut().for_each(|x| *x = 0.0);
                    add_distance_gradient(&a_vals, &b_vals, scale, &mut ga, &mut gb);
                    if !problem.is_frozen(a) {
                        a_vals.iter_mut().zip(&ga).for_each(|(x, g)| *x -= lr * g);
                        shared.store_row(a, &a_vals);
                    }
                    if !problem.is_frozen(b) {
                        b_vals.iter_mut().zip(&gb).for_each(|(x, g)| *x -= lr * g);
                        shared.store_row(b, &b_vals);
                    }
                }
            });
        }
    });

    shared.write_back(working);
    Ok(())
}

/// Fails when a value is non-finite or would overflow the output scalar type.
fn check_finite<T: Scalar>(space: &VectorSpace<T>, m: &Array2<f64>, epoch: usize) -> Result<()> {
    let bad = |v: &f64| !T::from_f64(*v).is_finite();
    match m.outer_iter().position(|row| row.iter().any(bad)) {
        Some(row) => Err(Error::NumericalAbort {
            epoch,
            row,
            token: space.token(row).to_owned(),
        }),
        None => Ok(()),
    }
}
