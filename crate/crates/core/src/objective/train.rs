use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{neighbor_set, non_finite_loss, sample_negatives, SimilarityDataset, StepBuffer, TrainBatchItem};
use crate::error::{Error, Result};
use crate::optimizer::{init_embeddings, EmbeddingTable, OptimizerConfig, Rsgd, SharedTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub dim: usize,
    pub negatives: usize,
    /// 1 selects the deterministic single-threaded trainer; more threads run
    /// lock-per-row asynchronous updates and are not reproducible.
    pub threads: usize,
    pub optimizer: OptimizerConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 10,
            negatives: 50,
            threads: 1,
            optimizer: OptimizerConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::Config(format!("dimension must be at least 2, got {}", self.dim)));
        }
        if self.negatives == 0 {
            return Err(Error::Config("at least one negative sample is required".into()));
        }
        if self.threads == 0 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        self.optimizer.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    /// 1-based epoch number.
    pub epoch: usize,
    pub mean_loss: f64,
    pub learning_rate: f64,
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub table: EmbeddingTable,
    /// Mean loss per epoch.
    pub history: Vec<f64>,
}

pub fn train(ds: &SimilarityDataset, config: &TrainConfig) -> Result<Trained> {
    train_with(ds, config, |_, _| Ok(()))
}

/// Trains and calls `on_epoch` after every epoch with the current table.
pub fn train_with<F>(ds: &SimilarityDataset, config: &TrainConfig, mut on_epoch: F) -> Result<Trained>
where
    F: FnMut(&EpochStats, &EmbeddingTable) -> Result<()>,
{
    config.validate()?;
    if ds.positives().is_empty() {
        return Err(Error::EmptyDataset);
    }
    let opt = &config.optimizer;
    let table = init_embeddings(ds.concepts().to_vec(), config.dim, opt.seed)?;

    // every positive pair, visited once from each end
    let mut items: Vec<(usize, usize)> = ds
        .positives()
        .iter()
        .flat_map(|&(i, j)| [(i, j), (j, i)])
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(opt.seed);
    rng.set_stream(1);

    if config.threads > 1 {
        return train_shared(ds, config, table, items, rng, on_epoch);
    }

    let mut table = table;
    let mut rsgd = Rsgd::new(opt.renormalize_every);
    let mut buf = StepBuffer::new(table.width());
    let mut history = Vec::with_capacity(opt.epochs);
    let mut slots: Vec<usize> = Vec::with_capacity(config.negatives + 2);

    for epoch in 0..opt.epochs {
        items.shuffle(&mut rng);
        let lr = opt.learning_rate_at(epoch);
        let mut total = 0.0;
        for &(i, j) in &items {
            let set = neighbor_set(ds, i, j)?;
            slots.clear();
            slots.push(i);
            slots.push(j);
            slots.extend(sample_negatives(&set, config.negatives, &mut rng));
            buf.load(slots.iter().map(|&r| table.row(r)));
            total += buf.compute().map_err(|_| {
                non_finite_loss(
                    &table,
                    &TrainBatchItem {
                        anchor: i,
                        target: j,
                        negatives: slots[2..].to_vec(),
                    },
                )
            })?;
            for (slot, &r) in slots.iter().enumerate() {
                rsgd.step(table.row_mut(r), buf.grad(slot), lr)?;
            }
        }
        let stats = finish_epoch(epoch, total, items.len(), lr)?;
        log::debug!("epoch {} loss {:.6} lr {}", stats.epoch, stats.mean_loss, lr);
        history.push(stats.mean_loss);
        on_epoch(&stats, &table)?;
    }
    Ok(Trained { table, history })
}

fn finish_epoch(epoch: usize, total: f64, n: usize, lr: f64) -> Result<EpochStats> {
    let mean_loss = total / n as f64;
    if !mean_loss.is_finite() {
        return Err(Error::NonFinite(format!("mean loss in epoch {}", epoch + 1)));
    }
    Ok(EpochStats {
        epoch: epoch + 1,
        mean_loss,
        learning_rate: lr,
    })
}

struct WorkerCtx<'a> {
    ds: &'a SimilarityDataset,
    shared: &'a SharedTable,
    negatives: usize,
    renormalize_every: u64,
    width: usize,
    lr: f64,
}

/// Processes one chunk of items against the shared table. Returns the summed
/// loss.
fn run_worker(ctx: &WorkerCtx<'_>, chunk: &[(usize, usize)], mut rng: ChaCha8Rng) -> Result<f64> {
    let mut rsgd = Rsgd::new(ctx.renormalize_every);
    let mut buf = StepBuffer::new(ctx.width);
    let mut slots: Vec<usize> = Vec::with_capacity(ctx.negatives + 2);
    let mut total = 0.0;
    for &(i, j) in chunk {
        let set = neighbor_set(ctx.ds, i, j)?;
        slots.clear();
        slots.push(i);
        slots.push(j);
        slots.extend(sample_negatives(&set, ctx.negatives, &mut rng));
        let points = buf.points_mut(slots.len());
        for (dst, &r) in points.chunks_exact_mut(ctx.width).zip(&slots) {
            ctx.shared.read_into(r, dst);
        }
        total += buf.compute().map_err(|_| {
            Error::NonFinite(format!(
                "loss for pair ({}, {})",
                ctx.ds.concepts()[i],
                ctx.ds.concepts()[j]
            ))
        })?;
        for (slot, &r) in slots.iter().enumerate() {
            ctx.shared.update(r, &mut rsgd, buf.grad(slot), ctx.lr)?;
        }
    }
    Ok(total)
}

fn train_shared<F>(
    ds: &SimilarityDataset,
    config: &TrainConfig,
    table: EmbeddingTable,
    mut items: Vec<(usize, usize)>,
    mut rng: ChaCha8Rng,
    mut on_epoch: F,
) -> Result<Trained>
where
    F: FnMut(&EpochStats, &EmbeddingTable) -> Result<()>,
{
    let opt = &config.optimizer;
    let threads = config.threads;
    let width = table.width();
    let shared = SharedTable::from_table(&table);
    drop(table);

    #[cfg(feature = "parallel")]
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;

    let mut history = Vec::with_capacity(opt.epochs);
    let chunk_len = items.len().div_ceil(threads).max(1);
    for epoch in 0..opt.epochs {
        items.shuffle(&mut rng);
        let lr = opt.learning_rate_at(epoch);
        let ctx = WorkerCtx {
            ds,
            shared: &shared,
            negatives: config.negatives,
            renormalize_every: opt.renormalize_every,
            width,
            lr,
        };
        let worker_rng = |w: usize| {
            let mut r = ChaCha8Rng::seed_from_u64(opt.seed);
            r.set_stream(2 + (epoch * threads + w) as u64);
            r
        };

        #[cfg(feature = "parallel")]
        let totals: Vec<Result<f64>> = {
            use rayon::prelude::*;
            pool.install(|| {
                items
                    .par_chunks(chunk_len)
                    .enumerate()
                    .map(|(w, chunk)| run_worker(&ctx, chunk, worker_rng(w)))
                    .collect()
            })
        };
        #[cfg(not(feature = "parallel"))]
        let totals: Vec<Result<f64>> = items
            .chunks(chunk_len)
            .enumerate()
            .map(|(w, chunk)| run_worker(&ctx, chunk, worker_rng(w)))
            .collect();

        let mut total = 0.0;
        for t in totals {
            total += t?;
        }
        let stats = finish_epoch(epoch, total, items.len(), lr)?;
        log::debug!("epoch {} loss {:.6} lr {}", stats.epoch, stats.mean_loss, lr);
        history.push(stats.mean_loss);
        on_epoch(&stats, &shared.snapshot())?;
    }
    Ok(Trained {
        table: shared.snapshot(),
        history,
    })
}
