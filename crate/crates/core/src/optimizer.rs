//! Riemannian SGD on the hyperboloid.
//!
//! One update turns a Euclidean gradient into the direction of steepest
//! descent (flip the sign of the time coordinate), projects it onto the
//! tangent space, and follows the exponential map.

use std::collections::HashMap;
use std::sync::RwLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    self, exp_map_in_place, lift, project_in_place, renormalize_in_place, LorentzPoint,
    TangentVector,
};

/// Half-width of the uniform initialization interval.
pub const INIT_RANGE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub burnin_epochs: usize,
    pub burnin_factor: f64,
    pub seed: u64,
    pub renormalize_every: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            learning_rate: 0.3,
            epochs: 300,
            burnin_epochs: 20,
            burnin_factor: 0.1,
            seed: 0,
            renormalize_every: 1,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be positive".into()));
        }
        if !(self.burnin_factor > 0.0 && self.burnin_factor <= 1.0) {
            return Err(Error::Config(format!(
                "burn-in factor must lie in (0, 1], got {}",
                self.burnin_factor
            )));
        }
        if self.renormalize_every == 0 {
            return Err(Error::Config("renormalize_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Learning rate in effect during `epoch` (0-based).
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        if epoch < self.burnin_epochs {
            self.learning_rate * self.burnin_factor
        } else {
            self.learning_rate
        }
    }
}

/// Per-concept points on the hyperboloid, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(ids: Vec<String>, points: Vec<LorentzPoint>) -> Result<Self> {
        if ids.len() != points.len() {
            return Err(Error::Invalid(format!(
                "{} ids but {} points",
                ids.len(),
                points.len()
            )));
        }
        let dim = points.first().map(|p| p.dim()).unwrap_or(2);
        let mut data = Vec::with_capacity(points.len() * (dim + 1));
        for p in &points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: p.dim(),
                });
            }
            data.extend_from_slice(p.coords());
        }
        Self::from_flat(ids, dim, data)
    }

    /// Builds a table from row-major ambient coordinates, validating every row.
    pub fn from_flat(ids: Vec<String>, dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Config(format!("dimension must be at least 2, got {dim}")));
        }
        if data.len() != ids.len() * (dim + 1) {
            return Err(Error::DimensionMismatch {
                expected: ids.len() * (dim + 1),
                actual: data.len(),
            });
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::Invalid(format!("duplicate id `{id}`")));
            }
        }
        for row in data.chunks_exact(dim + 1) {
            LorentzPoint::new(row.to_vec())?;
        }
        Ok(EmbeddingTable {
            ids,
            index,
            dim,
            data,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Hyperbolic dimension `n`; rows hold `n + 1` coordinates.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn width(&self) -> usize {
        self.dim + 1
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.data[i * w..(i + 1) * w]
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let w = self.width();
        &mut self.data[i * w..(i + 1) * w]
    }

    pub fn point(&self, i: usize) -> LorentzPoint {
        LorentzPoint::from_raw(self.row(i).to_vec())
    }

    pub fn get(&self, id: &str) -> Result<LorentzPoint> {
        self.index_of(id)
            .map(|i| self.point(i))
            .ok_or_else(|| Error::UnknownId(id.to_string()))
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.ids
            .iter()
            .map(String::as_str)
            .zip(self.data.chunks_exact(self.dim + 1))
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Largest `|<x,x>_L + 1|` over all rows.
    pub fn max_constraint_violation(&self) -> f64 {
        self.data
            .chunks_exact(self.width())
            .map(|r| (geometry::inner(r, r) + 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Draws every spatial coordinate from `U(-0.001, 0.001)` and lifts it.
pub fn init_embeddings(ids: Vec<String>, dim: usize, seed: u64) -> Result<EmbeddingTable> {
    if ids.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if dim < 2 {
        return Err(Error::Config(format!("dimension must be at least 2, got {dim}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(ids.len() * (dim + 1));
    let mut spatial = vec![0.0; dim];
    for _ in 0..ids.len() {
        for s in spatial.iter_mut() {
            *s = rng.random_range(-INIT_RANGE..INIT_RANGE);
        }
        data.extend_from_slice(lift(&spatial).coords());
    }
    EmbeddingTable::from_flat(ids, dim, data)
}

/// `g_l^{-1} egrad`: the Euclidean gradient with its time coordinate negated.
pub fn steepest_direction(x: &LorentzPoint, egrad: &[f64]) -> Result<Vec<f64>> {
    check_len(x, egrad)?;
    let mut h = egrad.to_vec();
    h[0] = -h[0];
    Ok(h)
}

pub fn riemannian_grad(x: &LorentzPoint, egrad: &[f64]) -> Result<TangentVector> {
    let h = steepest_direction(x, egrad)?;
    geometry::project_to_tangent(x, &h)
}

/// A single update `exp_x(-lr * grad f(x))` followed by renormalization.
pub fn rsgd_step(x: &LorentzPoint, egrad: &[f64], lr: f64) -> Result<LorentzPoint> {
    check_len(x, egrad)?;
    let mut rsgd = Rsgd::new(1);
    let mut out = x.coords().to_vec();
    rsgd.step(&mut out, egrad, lr)?;
    Ok(LorentzPoint::from_raw(out))
}

fn check_len(x: &LorentzPoint, v: &[f64]) -> Result<()> {
    if x.coords().len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: x.coords().len(),
            actual: v.len(),
        });
    }
    Ok(())
}

/// In-place RSGD updater with a step counter driving renormalization.
#[derive(Debug, Clone)]
pub struct Rsgd {
    renormalize_every: u64,
    steps: u64,
    scratch: Vec<f64>,
}

impl Rsgd {
    pub fn new(renormalize_every: u64) -> Self {
        Rsgd {
            renormalize_every: renormalize_every.max(1),
            steps: 0,
            scratch: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Updates `x` in place. Returns the Lorentzian norm of the Riemannian
    /// gradient that was applied.
    pub fn step(&mut self, x: &mut [f64], egrad: &[f64], lr: f64) -> Result<f64> {
        debug_assert_eq!(x.len(), egrad.len());
        if egrad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("Euclidean gradient".into()));
        }
        self.scratch.clear();
        self.scratch.extend_from_slice(egrad);
        self.scratch[0] = -self.scratch[0];
        project_in_place(x, &mut self.scratch);
        let grad_norm = geometry::lorentz_norm(&self.scratch);
        for h in self.scratch.iter_mut() {
            *h *= -lr;
        }
        exp_map_in_place(x, &self.scratch);
        self.steps += 1;
        if self.steps.is_multiple_of(self.renormalize_every) {
            renormalize_in_place(x);
        }
        if x.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("parameters after update".into()));
        }
        Ok(grad_norm)
    }
}

/// Embedding table shared between workers. Each row sits behind its own lock,
/// so a reader sees either the old or the new value of a row, never a mix.
/// Concurrent updates of the same row may overwrite each other.
pub struct SharedTable {
    ids: Vec<String>,
    dim: usize,
    rows: Vec<RwLock<Vec<f64>>>,
}

impl SharedTable {
    pub fn from_table(table: &EmbeddingTable) -> Self {
        SharedTable {
            ids: table.ids.clone(),
            dim: table.dim,
            rows: table
                .data
                .chunks_exact(table.width())
                .map(|r| RwLock::new(r.to_vec()))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn read_into(&self, i: usize, out: &mut [f64]) {
        let row = self.rows[i].read().unwrap_or_else(|e| e.into_inner());
        out.copy_from_slice(&row);
    }

    /// Applies an RSGD step to the current value of row `i` while holding its
    /// write lock.
    pub fn update(&self, i: usize, rsgd: &mut Rsgd, egrad: &[f64], lr: f64) -> Result<f64> {
        let mut row = self.rows[i].write().unwrap_or_else(|e| e.into_inner());
        rsgd.step(&mut row, egrad, lr)
    }

    pub fn snapshot(&self) -> EmbeddingTable {
        let mut data = Vec::with_capacity(self.rows.len() * (self.dim + 1));
        for r in &self.rows {
            data.extend_from_slice(&r.read().unwrap_or_else(|e| e.into_inner()));
        }
        let index = self
            .ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        EmbeddingTable {
            ids: self.ids.clone(),
            index,
            dim: self.dim,
            data,
        }
    }
}
