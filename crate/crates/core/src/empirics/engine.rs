use std::sync::Arc;

use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

use super::{MaxSampleMatrix, Provenance};
use crate::error::{Error, Result};
use crate::models::{validate_checkpoints, ChainModel, Start};
use crate::rng::replica_rng;

/// Replicated simulation on a fixed worker pool.
///
/// Replica `r` always draws from stream `r` of the root seed and results are
/// merged by replica index, so output does not depend on the worker count.
#[derive(Clone)]
pub struct MonteCarlo {
    pool: Arc<ThreadPool>,
    workers: usize,
}

impl MonteCarlo {
    /// `None` uses the available parallelism.
    pub fn new(workers: Option<usize>) -> Result<Self> {
        let workers = workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1);
        let pool = ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
        Ok(MonteCarlo { pool: Arc::new(pool), workers })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Evaluates `task(r)` for every replica, in parallel, returning results in replica order.
    pub fn map_replicas<T, F>(&self, replicas: usize, task: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64) -> Result<T> + Sync + Send,
    {
        self.pool
            .install(|| (0..replicas as u64).into_par_iter().map(&task).collect())
    }

    /// Running-maxima matrix of `replicas` trajectories of `model` from `start`.
    pub fn run(
        &self,
        model: &ChainModel,
        start: Start,
        checkpoints: &[u64],
        replicas: usize,
        root_seed: u64,
    ) -> Result<MaxSampleMatrix> {
        validate_checkpoints(checkpoints)?;
        model.check_start(start)?;
        if replicas == 0 {
            return Err(Error::Config("at least one replica is required".into()));
        }
        let rows = self.map_replicas(replicas, |r| {
            model.simulate_with(&mut replica_rng(root_seed, r), start, checkpoints)
        })?;
        let provenance = Provenance { model_id: model.id(), start: start.to_string(), root_seed };
        MaxSampleMatrix::from_rows(checkpoints.to_vec(), rows, provenance)
    }
}

impl std::fmt::Debug for MonteCarlo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MonteCarlo").field("workers", &self.workers).finish()
    }
}

/// Geometric checkpoint grid `ceil(n0 * ratio^k)` up to and including `n_max`,
/// deduplicated after rounding.
pub fn geometric_checkpoints(n0: u64, ratio: f64, n_max: u64) -> Vec<u64> {
    assert!(n0 >= 1 && ratio > 1.0, "geometric grid needs n0 >= 1 and ratio > 1");
    let mut out = Vec::new();
    let mut x = n0 as f64;
    loop {
        let n = (x.ceil() as u64).min(n_max);
        if out.last() != Some(&n) {
            out.push(n);
        }
        if n >= n_max {
            break;
        }
        x *= ratio;
    }
    out
}
