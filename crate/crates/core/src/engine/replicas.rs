use rayon::prelude::*;

use super::config::Configuration;
use super::simulate::{simulate_extinction, ExtinctionOutcome, Horizon, ModelParams};
use crate::error::{Error, Result};
use crate::network::Network;
use crate::rng::{stream, Stream};

/// Concurrency knob: `None` uses rayon's global pool.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Workers(pub Option<usize>);

impl Workers {
    pub fn fixed(n: usize) -> Workers {
        Workers(Some(n.max(1)))
    }

    /// Runs `f(index, stream)` for `index in 0..count`, each with its own
    /// stream derived from `(master_seed, index)`. Results come back in index
    /// order whatever the thread count.
    pub fn map_replicas<T, F>(self, count: usize, master_seed: u64, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize, &mut Stream) -> T + Sync + Send,
    {
        let job = || {
            (0..count)
                .into_par_iter()
                .map(|i| f(i, &mut stream(master_seed, i as u64)))
                .collect::<Vec<T>>()
        };
        match self.0 {
            None => Ok(job()),
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::InvalidParameter(format!("cannot start {n} workers: {e}")))?;
                Ok(pool.install(job))
            }
        }
    }
}

/// Independent extinction runs, one stream per replica.
pub fn run_replicas(
    net: &Network,
    params: ModelParams,
    init: &Configuration,
    replica_count: usize,
    master_seed: u64,
    horizon: Horizon,
    workers: Workers,
) -> Result<Vec<ExtinctionOutcome>> {
    if replica_count == 0 {
        return Err(Error::InvalidParameter("replica count must be at least 1".into()));
    }
    // Validate once up front so workers never see a bad horizon.
    simulate_extinction(net, params, &Configuration::empty(net.size()), &mut stream(0, 0), horizon)?;
    workers
        .map_replicas(replica_count, master_seed, |_, rng| {
            simulate_extinction(net, params, init, rng, horizon).expect("horizon validated")
        })
}
