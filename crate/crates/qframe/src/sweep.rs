//! Parameter sweeps over `N` and seeds, run in parallel.

use qframe_core::frame::{run_protocol, ProtocolConfig, ProtocolResult, Vec3};
use qframe_core::stats::loglog_slope;
use qframe_core::Spin;
use rayon::prelude::*;

use crate::error::{AppError, AppResult};
use crate::report::SweepRow;
use crate::state::StateSpec;

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub spin: Spin,
    pub alpha: Vec3,
    /// Strictly increasing.
    pub iterations: Vec<usize>,
    pub seeds: Vec<u64>,
    pub state: StateSpec,
}

#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub iterations: usize,
    pub seed: u64,
    pub result: ProtocolResult,
}

impl SweepPoint {
    pub fn row(&self) -> SweepRow {
        SweepRow::from_result(self.iterations, self.seed, &self.result)
    }
}

impl SweepConfig {
    pub fn validate(&self) -> AppResult<()> {
        if self.iterations.is_empty() {
            return Err(AppError::Usage("sweep needs at least one N".into()));
        }
        if self.iterations.contains(&0) {
            return Err(AppError::Usage(qframe_core::Error::ZeroIterations.to_string()));
        }
        if self.iterations.windows(2).any(|w| w[0] >= w[1]) {
            return Err(AppError::Usage("N values must be strictly increasing".into()));
        }
        if self.seeds.is_empty() {
            return Err(AppError::Usage("sweep needs at least one seed".into()));
        }
        Ok(())
    }
}

/// Runs every `(N, seed)` pair. Results come back in N-then-seed order no
/// matter which finishes first.
pub fn run_sweep(config: &SweepConfig) -> AppResult<Vec<SweepPoint>> {
    config.validate()?;
    // resolve and validate every input before starting any run
    let mut jobs = Vec::with_capacity(config.iterations.len() * config.seeds.len());
    for &iterations in &config.iterations {
        for &seed in &config.seeds {
            let protocol = ProtocolConfig {
                spin: config.spin,
                iterations,
                alpha: config.alpha,
                initial_state: config.state.resolve(config.spin, seed)?,
            };
            protocol.validate()?;
            jobs.push((iterations, seed, protocol));
        }
    }
    jobs.into_par_iter()
        .map(|(iterations, seed, protocol)| {
            Ok(SweepPoint { iterations, seed, result: run_protocol(&protocol)? })
        })
        .collect()
}

/// Log-log slope of the seed-averaged error against `N`.
pub fn error_slope(points: &[SweepPoint]) -> Option<f64> {
    let mut by_n: Vec<(f64, f64, usize)> = Vec::new();
    for p in points {
        match by_n.iter_mut().find(|(n, _, _)| *n == p.iterations as f64) {
            Some(entry) => {
                entry.1 += p.result.error_trace_norm;
                entry.2 += 1;
            }
            None => by_n.push((p.iterations as f64, p.result.error_trace_norm, 1)),
        }
    }
    let means: Vec<(f64, f64)> = by_n.into_iter().map(|(n, sum, count)| (n, sum / count as f64)).collect();
    loglog_slope(&means)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(iterations: Vec<usize>) -> SweepConfig {
        SweepConfig {
            spin: Spin::HALF,
            alpha: [0.3, 0.7, -0.2],
            iterations,
            seeds: vec![1, 2],
            state: StateSpec::Random,
        }
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(matches!(run_sweep(&config(vec![]) ), Err(AppError::Usage(_))));
        assert!(matches!(run_sweep(&config(vec![20, 10])), Err(AppError::Usage(_))));
        assert!(matches!(run_sweep(&config(vec![10, 10])), Err(AppError::Usage(_))));
        assert!(matches!(run_sweep(&config(vec![0, 10])), Err(AppError::Usage(_))));
        let mut c = config(vec![10]);
        c.alpha = [4.0, 0.0, 0.0];
        assert!(matches!(run_sweep(&c), Err(AppError::Usage(_))));
    }

    #[test]
    fn ordered_and_deterministic() {
        let c = config(vec![8, 16, 32]);
        let a = run_sweep(&c).unwrap();
        let b = run_sweep(&c).unwrap();
        let order: Vec<(usize, u64)> = a.iter().map(|p| (p.iterations, p.seed)).collect();
        assert_eq!(order, vec![(8, 1), (8, 2), (16, 1), (16, 2), (32, 1), (32, 2)]);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.row(), y.row());
        }
        let slope = error_slope(&a).unwrap();
        assert!(slope < -0.5, "{slope}");
    }
}
