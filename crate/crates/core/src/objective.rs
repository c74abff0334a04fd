//! The retrofitting objective: an attract term over the positive pairs, a
//! repel hinge over the negative pairs, and a shape-preservation term over
//! the original neighborhoods, plus their analytic (sub)gradients.
//!
//! With `d` the cosine distance, `V` the original space and `V'` the current
//! one:
//!
//! ```text
//! pr  = sum over (u, w) in S      of max(0, d(v'_u, v'_w))
//! nr  = sum over (u, w) in O      of max(0, 1 - d(v'_u, v'_w))
//! vsp = sum over i, j in N(i)     of |d(v'_i, v'_j) - d(v_i, v_j)|
//! ```
//!
//! Every neighbor pair is visited from both ends, so each undirected edge
//! contributes twice to `vsp`. At a hinge or absolute-value kink the
//! subgradient is 0.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dot_and_norms, similarity_from_parts, NeighborhoodGraph};
use crate::lexicon::{ConstraintSet, Pair};
use crate::space::{Scalar, VectorSpace};
use crate::trainer::TrainingConfig;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    pub pr: f64,
    pub nr: f64,
    pub vsp: f64,
    pub total: f64,
}

impl ObjectiveBreakdown {
    pub fn new(pr: f64, nr: f64, vsp: f64) -> Self {
        ObjectiveBreakdown {
            pr,
            nr,
            vsp,
            total: pr + nr + vsp,
        }
    }

    pub fn weighted_total(&self, weights: &TermWeights) -> f64 {
        weights.pr * self.pr + weights.nr * self.nr + weights.vsp * self.vsp
    }
}

/// Per-term multipliers. The plain objective is the unweighted sum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermWeights {
    pub pr: f64,
    pub nr: f64,
    pub vsp: f64,
}

impl Default for TermWeights {
    fn default() -> Self {
        TermWeights {
            pr: 1.0,
            nr: 1.0,
            vsp: 1.0,
        }
    }
}

#[inline]
fn row<'a, T: Scalar>(m: &'a ArrayView2<'_, T>, i: usize) -> &'a [T] {
    // Rows of a standard-layout view are contiguous.
    let dim = m.ncols();
    &m.as_slice().expect("standard layout")[i * dim..(i + 1) * dim]
}

#[inline]
fn distance<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    let (dot, na, nb) = dot_and_norms(a, b);
    1.0 - similarity_from_parts(dot, na, nb)
}

/// Adds `scale * d(cos_dist(u, w))/du` to `grad_u` and the matching term for
/// `w` to `grad_w`, returning the distance. Zero-norm inputs contribute no
/// gradient.
pub(crate) fn add_distance_gradient<T: Scalar>(
    u: &[T],
    w: &[T],
    scale: f64,
    grad_u: &mut [f64],
    grad_w: &mut [f64],
) {
    let (dot, nu2, nw2) = dot_and_norms(u, w);
    if nu2 == 0.0 || nw2 == 0.0 {
        return;
    }
    let norms = nu2.sqrt() * nw2.sqrt();
    let sim = dot / norms;
    // d = 1 - sim, so dd/du = -(w / (|u||w|) - sim * u / |u|^2).
    for k in 0..u.len() {
        let uk: f64 = u[k].into();
        let wk: f64 = w[k].into();
        grad_u[k] -= scale * (wk / norms - sim * uk / nu2);
        grad_w[k] -= scale * (uk / norms - sim * wk / nw2);
    }
}

/// A neighbor incidence with its distance in the original space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Incidence {
    pub i: usize,
    pub j: usize,
    pub original: f64,
}

pub(crate) fn incidences<T: Scalar>(
    space: &VectorSpace<T>,
    graph: &NeighborhoodGraph,
) -> Result<Vec<Incidence>> {
    if graph.len() != space.len() {
        return Err(Error::VocabularyMismatch(format!(
            "neighborhood graph covers {} rows, space has {}",
            graph.len(),
            space.len()
        )));
    }
    Ok(graph
        .incidences()
        .map(|(i, j)| Incidence {
            i,
            j,
            original: distance(space.vector(i), space.vector(j)),
        })
        .collect())
}

/// The single-term loss of a stream item, for a given current distance.
#[inline]
pub(crate) fn pr_loss(d: f64) -> f64 {
    d.max(0.0)
}

#[inline]
pub(crate) fn nr_loss(d: f64) -> f64 {
    (1.0 - d).max(0.0)
}

#[inline]
pub(crate) fn vsp_loss(d: f64, original: f64) -> f64 {
    (d - original).abs().max(0.0)
}

/// Slope of each loss with respect to the distance, 0 at kinks.
#[inline]
pub(crate) fn pr_slope(d: f64) -> f64 {
    if d > 0.0 {
        1.0
    } else {
        0.0
    }
}

#[inline]
pub(crate) fn nr_slope(d: f64) -> f64 {
    if 1.0 - d > 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[inline]
pub(crate) fn vsp_slope(d: f64, original: f64) -> f64 {
    let diff = d - original;
    if diff > 0.0 {
        1.0
    } else if diff < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Everything needed to evaluate the objective on a candidate matrix.
pub(crate) struct Problem<'a> {
    pub positive: &'a [Pair],
    pub negative: &'a [Pair],
    pub incidences: Vec<Incidence>,
    pub weights: TermWeights,
    /// Rows whose gradient is forced to zero; empty when nothing is frozen.
    pub frozen: Vec<bool>,
}

impl<'a> Problem<'a> {
    pub fn new<T: Scalar>(
        space: &VectorSpace<T>,
        constraints: &'a ConstraintSet,
        graph: &NeighborhoodGraph,
        weights: TermWeights,
        freeze_anchors: bool,
    ) -> Result<Self> {
        check_pairs(&constraints.positive, space.len())?;
        check_pairs(&constraints.negative, space.len())?;
        let mut frozen = Vec::new();
        if freeze_anchors {
            frozen = vec![false; space.len()];
            for r in constraints.anchor_rows() {
                frozen[r] = true;
            }
        }
        Ok(Problem {
            positive: &constraints.positive,
            negative: &constraints.negative,
            incidences: incidences(space, graph)?,
            weights,
            frozen,
        })
    }

    pub fn is_frozen(&self, row: usize) -> bool {
        self.frozen.get(row).copied().unwrap_or(false)
    }

    pub fn evaluate<T: Scalar>(&self, m: ArrayView2<'_, T>) -> ObjectiveBreakdown {
        let pr = self
            .positive
            .iter()
            .map(|p| pr_loss(distance(row(&m, p.word), row(&m, p.emotion))))
            .sum();
        let nr = self
            .negative
            .iter()
            .map(|p| nr_loss(distance(row(&m, p.word), row(&m, p.emotion))))
            .sum();
        let vsp = self
            .incidences
            .iter()
            .map(|inc| vsp_loss(distance(row(&m, inc.i), row(&m, inc.j)), inc.original))
            .sum();
        ObjectiveBreakdown::new(pr, nr, vsp)
    }

    /// Full (weighted) gradient with respect to every entry of `m`.
    pub fn gradient<T: Scalar>(&self, m: ArrayView2<'_, T>) -> Array2<f64> {
        let dim = m.ncols();
        let mut grad = Array2::<f64>::zeros(m.raw_dim());
        let g = grad.as_slice_mut().expect("fresh array is contiguous");
        let mut gu = vec![0.0; dim];
        let mut gw = vec![0.0; dim];

        let mut accumulate = |a: usize, b: usize, scale: f64, g: &mut [f64]| {
            if scale == 0.0 {
                return;
            }
            gu.iter_mut().for_each(|x| *x = 0.0);
            gw.iter_mut().for_each(|x| *x = 0.0);
            add_distance_gradient(row(&m, a), row(&m, b), scale, &mut gu, &mut gw);
            for k in 0..dim {
                g[a * dim + k] += gu[k];
                g[b * dim + k] += gw[k];
            }
        };

        for p in self.positive {
            let d = distance(row(&m, p.word), row(&m, p.emotion));
            accumulate(p.word, p.emotion, self.weights.pr * pr_slope(d), g);
        }
        for p in self.negative {
            let d = distance(row(&m, p.word), row(&m, p.emotion));
            accumulate(p.word, p.emotion, self.weights.nr * nr_slope(d), g);
        }
        for inc in &self.incidences {
            let d = distance(row(&m, inc.i), row(&m, inc.j));
            accumulate(
                inc.i,
                inc.j,
                self.weights.vsp * vsp_slope(d, inc.original),
                g,
            );
        }

        for (r, frozen) in self.frozen.iter().enumerate() {
            if *frozen {
                g[r * dim..(r + 1) * dim].iter_mut().for_each(|x| *x = 0.0);
            }
        }
        grad
    }
}

fn check_pairs(pairs: &[Pair], n: usize) -> Result<()> {
    match pairs.iter().find(|p| p.word >= n || p.emotion >= n) {
        Some(p) => Err(Error::Validation(format!(
            "constraint pair ({}, {}) out of range for {} rows",
            p.word, p.emotion, n
        ))),
        None => Ok(()),
    }
}

/// Attract term over the positive pairs.
pub fn pr_term<T: Scalar>(space_prime: &VectorSpace<T>, positive: &[Pair]) -> Result<f64> {
    check_pairs(positive, space_prime.len())?;
    let m = space_prime.view();
    Ok(positive
        .iter()
        .map(|p| pr_loss(distance(row(&m, p.word), row(&m, p.emotion))))
        .sum())
}

/// Repel hinge over the negative pairs.
pub fn nr_term<T: Scalar>(space_prime: &VectorSpace<T>, negative: &[Pair]) -> Result<f64> {
    check_pairs(negative, space_prime.len())?;
    let m = space_prime.view();
    Ok(negative
        .iter()
        .map(|p| nr_loss(distance(row(&m, p.word), row(&m, p.emotion))))
        .sum())
}

/// Shape-preservation term over the neighborhoods of the original space.
pub fn vsp_term<T: Scalar, U: Scalar>(
    space: &VectorSpace<T>,
    space_prime: &VectorSpace<U>,
    graph: &NeighborhoodGraph,
) -> Result<f64> {
    space.check_same_vocabulary(space_prime)?;
    let m = space_prime.view();
    Ok(incidences(space, graph)?
        .iter()
        .map(|inc| vsp_loss(distance(row(&m, inc.i), row(&m, inc.j)), inc.original))
        .sum())
}

pub fn objective<T: Scalar, U: Scalar>(
    space: &VectorSpace<T>,
    space_prime: &VectorSpace<U>,
    constraints: &ConstraintSet,
    graph: &NeighborhoodGraph,
) -> Result<ObjectiveBreakdown> {
    space.check_same_vocabulary(space_prime)?;
    let problem = Problem::new(space, constraints, graph, TermWeights::default(), false)?;
    Ok(problem.evaluate(space_prime.view()))
}

/// Gradient of the (weighted) objective with respect to every entry of
/// `space_prime`. Emotion anchor rows get zero gradient when
/// `config.freeze_anchors` is set.
pub fn gradient<T: Scalar, U: Scalar>(
    space: &VectorSpace<T>,
    space_prime: &VectorSpace<U>,
    constraints: &ConstraintSet,
    graph: &NeighborhoodGraph,
    config: &TrainingConfig,
) -> Result<Array2<f64>> {
    space.check_same_vocabulary(space_prime)?;
    let problem = Problem::new(
        space,
        constraints,
        graph,
        config.weights,
        config.freeze_anchors,
    )?;
    Ok(problem.gradient(space_prime.view()))
}
