//! Parallel batch identification.
//!
//! Scoring is pure, so probes can be fanned out across a thread pool and the
//! collected output is byte-identical to a serial [`batch_identify`] run.
//! The `FACESIG_THREADS` environment variable sets the default pool size; it
//! changes only how work is scheduled, never the results.

use rayon::prelude::*;

use facesig_core::{identify, Gallery, MatcherConfig, RankedList, Template};

use crate::error::{CliError, Result};

/// Environment variable naming the default worker count.
pub const THREADS_ENV: &str = "FACESIG_THREADS";

/// Thread count from `FACESIG_THREADS`, if set and valid.
pub fn configured_threads() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|raw| raw.parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Identify all probes in parallel. Output order equals input order and is
/// bit-identical to the serial path.
pub fn par_batch_identify(
    probes: &[Template],
    gallery: &Gallery,
    matcher: &MatcherConfig,
) -> Vec<facesig_core::Result<RankedList>> {
    probes
        .par_iter()
        .map(|probe| identify(probe, gallery, matcher))
        .collect()
}

/// Run `op` inside a pool sized by `FACESIG_THREADS` (or rayon's default
/// when unset).
pub fn with_thread_pool<T: Send>(op: impl FnOnce() -> T + Send) -> Result<T> {
    match configured_threads() {
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| CliError::Compute(format!("thread pool: {e}")))?;
            Ok(pool.install(op))
        }
        None => Ok(op()),
    }
}
