//! Similarity-ranking objective.
//!
//! For an anchor `i` and a positive `j`, the candidate set holds `j` plus every
//! concept strictly less similar to `i` than `j` is. The loss is the negative
//! log-probability that `j` is the nearest candidate under a softmax over
//! negative distances.

mod dataset;
mod train;

use std::collections::BTreeSet;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{self, LorentzPoint};
use crate::optimizer::EmbeddingTable;

pub use dataset::{SimilarityBuilder, SimilarityDataset};
pub use train::{train, train_with, EpochStats, TrainConfig, Trained};

/// Distance gradients vanish below this separation (`-<x,y>_L <= 1 + eps`).
pub const COINCIDENT_EPS: f64 = 1e-12;

/// The candidate set for anchor `i` and target `j`.
///
/// Indexable without materializing: the first block holds the scored
/// concepts with `X_ik < X_ij` (ascending score), the second block every
/// unscored concept other than `i`, in index order. `j` itself is not in
/// either block; it is implied.
#[derive(Debug, Clone, Copy)]
pub struct NeighborSet<'a> {
    anchor: usize,
    target: usize,
    lower: &'a [(f64, usize)],
    excluded: &'a [usize],
    total: usize,
}

impl<'a> NeighborSet<'a> {
    pub fn anchor(&self) -> usize {
        self.anchor
    }

    pub fn target(&self) -> usize {
        self.target
    }

    /// Size of the set including the target.
    pub fn len(&self) -> usize {
        self.negatives_len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of candidates other than the target.
    pub fn negatives_len(&self) -> usize {
        self.lower.len() + (self.total - self.excluded.len())
    }

    /// The `r`-th candidate other than the target, `r < negatives_len()`.
    pub fn negative(&self, r: usize) -> usize {
        if r < self.lower.len() {
            self.lower[r].1
        } else {
            nth_missing(self.excluded, r - self.lower.len())
        }
    }

    pub fn contains(&self, k: usize) -> bool {
        if k == self.target {
            return true;
        }
        if k == self.anchor || k >= self.total {
            return false;
        }
        if self.excluded.binary_search(&k).is_err() {
            return true;
        }
        self.lower.iter().any(|&(_, c)| c == k)
    }

    pub fn to_set(&self) -> BTreeSet<usize> {
        let mut s: BTreeSet<usize> = (0..self.negatives_len()).map(|r| self.negative(r)).collect();
        s.insert(self.target);
        s
    }
}

/// The `t`-th non-negative integer absent from the sorted slice `excluded`.
fn nth_missing(excluded: &[usize], t: usize) -> usize {
    // excluded[p] - p counts the gaps before excluded[p] and is non-decreasing,
    // so the answer is t + #{p : excluded[p] - p <= t}
    let mut lo = 0usize;
    let mut hi = excluded.len();
    while lo < hi {
        let mid = (lo + hi) / 2;
        if excluded[mid] - mid <= t {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    t + lo
}

/// `N(i, j) = {k : X_ik < X_ij} ∪ {j}`, with unscored pairs at similarity 0
/// and `i` excluded.
pub fn neighbor_set(ds: &SimilarityDataset, i: usize, j: usize) -> Result<NeighborSet<'_>> {
    let m = ds.len();
    if i >= m || j >= m {
        return Err(Error::Invalid(format!("concept index out of range ({i}, {j})")));
    }
    let threshold = ds.score(i, j);
    if threshold <= 0.0 {
        return Err(Error::Invalid(format!(
            "({}, {}) is not a positive pair",
            ds.concepts()[i],
            ds.concepts()[j]
        )));
    }
    let by_score = ds.by_score(i);
    let cut = by_score.partition_point(|&(s, _)| s < threshold);
    Ok(NeighborSet {
        anchor: i,
        target: j,
        lower: &by_score[..cut],
        excluded: ds.excluded(i),
        total: m,
    })
}

/// Uniform sample without replacement of `min(k, |N| - 1)` candidates other
/// than the target.
pub fn sample_negatives<R: Rng + ?Sized>(set: &NeighborSet<'_>, k: usize, rng: &mut R) -> Vec<usize> {
    let pool = set.negatives_len();
    if k >= pool {
        return (0..pool).map(|r| set.negative(r)).collect();
    }
    rand::seq::index::sample(rng, pool, k)
        .into_iter()
        .map(|r| set.negative(r))
        .collect()
}

/// One training example: anchor, positive target and sampled negatives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainBatchItem {
    pub anchor: usize,
    pub target: usize,
    pub negatives: Vec<usize>,
}

impl TrainBatchItem {
    pub fn sample<R: Rng + ?Sized>(
        ds: &SimilarityDataset,
        anchor: usize,
        target: usize,
        k: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let set = neighbor_set(ds, anchor, target)?;
        Ok(TrainBatchItem {
            anchor,
            target,
            negatives: sample_negatives(&set, k, rng),
        })
    }
}

/// Probability of the target under `softmax(-d)` over the candidate
/// distances, where `dists[target]` is the target's distance.
pub fn softmax_from_distances(dists: &[f64], target: usize) -> f64 {
    let min = dists.iter().copied().fold(f64::INFINITY, f64::min);
    let z: f64 = dists.iter().map(|d| (min - d).exp()).sum();
    (min - dists[target]).exp() / z
}

/// `Pr(phi(i,j) = j)`: `exp(-d(u_i,u_j)) / sum_k exp(-d(u_i,u_k))`.
/// `candidates` must contain `u_j`.
pub fn softmax_prob(
    anchor: &LorentzPoint,
    target: &LorentzPoint,
    candidates: &[LorentzPoint],
) -> Result<f64> {
    let pos = candidates
        .iter()
        .position(|c| c == target)
        .ok_or_else(|| Error::Invalid("target is not among the candidates".into()))?;
    let dists = candidates
        .iter()
        .map(|c| geometry::lorentz_distance(anchor, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(softmax_from_distances(&dists, pos))
}

/// Euclidean gradients of `d(x, y)` with respect to `x` and `y`.
pub fn distance_egrad(x: &LorentzPoint, y: &LorentzPoint) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.coords().len() != y.coords().len() {
        return Err(Error::DimensionMismatch {
            expected: x.coords().len(),
            actual: y.coords().len(),
        });
    }
    let n = x.coords().len();
    let mut gx = vec![0.0; n];
    let mut gy = vec![0.0; n];
    let scale = distance_grad_scale(x.coords(), y.coords());
    add_distance_grad(y.coords(), scale, &mut gx);
    add_distance_grad(x.coords(), scale, &mut gy);
    Ok((gx, gy))
}

/// `1 / sqrt(beta^2 - 1)` with `beta = -<x,y>_L`, or 0 for coincident points.
#[inline]
fn distance_grad_scale(x: &[f64], y: &[f64]) -> f64 {
    let beta = -geometry::inner(x, y);
    if beta <= 1.0 + COINCIDENT_EPS {
        0.0
    } else {
        1.0 / ((beta - 1.0) * (beta + 1.0)).sqrt()
    }
}

/// `out += coef * dd/dy`, where `dd/dy = -(g_l other) / sqrt(beta^2 - 1)`.
#[inline]
fn add_distance_grad(other: &[f64], coef: f64, out: &mut [f64]) {
    out[0] += coef * other[0];
    for (o, v) in out[1..].iter_mut().zip(&other[1..]) {
        *o -= coef * v;
    }
}

/// Loss and sparse Euclidean gradients for one item.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGrads {
    pub loss: f64,
    /// `(concept index, gradient)`: anchor, target, then negatives.
    pub grads: Vec<(usize, Vec<f64>)>,
}

pub fn loss_and_grads(item: &TrainBatchItem, table: &EmbeddingTable) -> Result<LossGrads> {
    let m = table.len();
    let rows = std::iter::once(item.anchor)
        .chain(std::iter::once(item.target))
        .chain(item.negatives.iter().copied());
    let mut buf = StepBuffer::new(table.width());
    let mut order = Vec::with_capacity(item.negatives.len() + 2);
    for r in rows {
        if r >= m {
            return Err(Error::Invalid(format!("concept index {r} out of range")));
        }
        order.push(r);
    }
    buf.load(order.iter().map(|&r| table.row(r)));
    let loss = buf.compute().map_err(|_| non_finite_loss(table, item))?;
    let grads = order
        .into_iter()
        .enumerate()
        .map(|(slot, r)| (r, buf.grad(slot).to_vec()))
        .collect();
    Ok(LossGrads { loss, grads })
}

pub(crate) fn non_finite_loss(table: &EmbeddingTable, item: &TrainBatchItem) -> Error {
    Error::NonFinite(format!(
        "loss for pair ({}, {})",
        table.id(item.anchor),
        table.id(item.target)
    ))
}

/// Reusable flat buffers for one loss evaluation: slot 0 is the anchor,
/// slot 1 the target, the remaining slots the negatives.
#[derive(Debug, Clone)]
pub(crate) struct StepBuffer {
    width: usize,
    points: Vec<f64>,
    grads: Vec<f64>,
    dists: Vec<f64>,
}

impl StepBuffer {
    pub(crate) fn new(width: usize) -> Self {
        StepBuffer {
            width,
            points: Vec::new(),
            grads: Vec::new(),
            dists: Vec::new(),
        }
    }

    pub(crate) fn load<'r>(&mut self, rows: impl Iterator<Item = &'r [f64]>) {
        self.points.clear();
        for r in rows {
            self.points.extend_from_slice(r);
        }
    }

    /// Resizes for `slots` points and hands out the point storage for
    /// callers that copy rows themselves.
    pub(crate) fn points_mut(&mut self, slots: usize) -> &mut [f64] {
        self.points.resize(slots * self.width, 0.0);
        &mut self.points
    }

    pub(crate) fn grad(&self, slot: usize) -> &[f64] {
        &self.grads[slot * self.width..(slot + 1) * self.width]
    }

    pub(crate) fn slots(&self) -> usize {
        self.points.len() / self.width
    }

    /// Computes the loss and fills the gradient buffer. Errors when the loss
    /// is not finite.
    pub(crate) fn compute(&mut self) -> Result<f64, ()> {
        let w = self.width;
        let slots = self.slots();
        debug_assert!(slots >= 2);
        let (anchor, cands) = self.points.split_at(w);
        self.dists.clear();
        // the literal form, so the loss matches its gradient off the manifold
        self.dists.extend(
            cands
                .chunks_exact(w)
                .map(|c| geometry::arcosh_clamped(-geometry::inner(anchor, c))),
        );

        let min = self.dists.iter().copied().fold(f64::INFINITY, f64::min);
        let z: f64 = self.dists.iter().map(|d| (min - d).exp()).sum();
        let log_z = z.ln();
        let loss = (self.dists[0] - min + log_z).max(0.0);
        if !loss.is_finite() {
            return Err(());
        }

        self.grads.clear();
        self.grads.resize(slots * w, 0.0);
        let (g_anchor, g_cands) = self.grads.split_at_mut(w);
        for (c, (cand, g)) in cands.chunks_exact(w).zip(g_cands.chunks_exact_mut(w)).enumerate() {
            let p = (min - self.dists[c]).exp() / z;
            // dL/dd_c
            let coef = if c == 0 { 1.0 - p } else { -p };
            let s = coef * distance_grad_scale(anchor, cand);
            if s != 0.0 {
                add_distance_grad(cand, s, g_anchor);
                add_distance_grad(anchor, s, g);
            }
        }
        Ok(loss)
    }
}
