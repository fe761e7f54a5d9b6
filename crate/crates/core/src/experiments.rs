//! Repeated runs and the two parameter sweeps.
//!
//! Repetition `i` of a batch is seeded with [`derive_seed`]`(master_seed, i)`,
//! so results are bound to indices and do not depend on the order (or thread)
//! in which repetitions execute. Every grid point of a sweep reuses the same
//! master seed, which gives all grid points the same per-repetition seeds.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine;
use crate::error::{Error, Result};
use crate::model::SimParams;
use crate::stats;

/// Positive feedback used by both published experiments.
pub const DEFAULT_BETA: f64 = 0.05;
/// Iteration cap of the user-count sweep.
pub const N_SWEEP_MAX_ITERATIONS: usize = 250;
/// Iteration cap of the attitude sweep.
pub const PHI_SWEEP_MAX_ITERATIONS: usize = 5000;

pub const TABLE_ONE_USERS: [usize; 14] = [
    20, 40, 60, 80, 100, 200, 300, 400, 500, 600, 700, 800, 900, 1000,
];

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Seed of repetition `index`: the `(index + 1)`-th output of a SplitMix64
/// generator started at `master_seed`.
///
/// The map is a bijection of `index` for a fixed master seed (an odd-constant
/// multiply, an add and an invertible finalizer), so no two repetitions of a
/// batch share a seed. This function is part of the output format and must
/// not change.
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    let mut z = master_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Outcome of one repetition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub index: usize,
    pub seed: u64,
    pub converged: bool,
    pub t_star: Option<usize>,
    pub final_avg_trust: f64,
}

pub fn run_repetition(params: &SimParams, master_seed: u64, index: usize) -> Result<RunSummary> {
    let seed = derive_seed(master_seed, index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = engine::simulate(params, &mut rng, false)?;
    Ok(RunSummary {
        index,
        seed,
        converged: r.converged,
        t_star: r.t_star,
        final_avg_trust: r.final_avg_trust(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchResult {
    pub params: SimParams,
    pub repetitions: usize,
    pub master_seed: u64,
    pub converged_count: usize,
    /// Mean convergence time over converged repetitions only.
    pub i2c_mean: Option<f64>,
    /// Sample standard deviation of the convergence time (needs two converged runs).
    pub i2c_stddev: Option<f64>,
    /// Terminal average trust of each non-converged repetition, by index.
    pub final_avg_trusts: Vec<f64>,
    pub runs: Vec<RunSummary>,
}

/// Reduces repetition outcomes, in any order, to a batch result.
pub fn aggregate(params: &SimParams, master_seed: u64, mut runs: Vec<RunSummary>) -> Result<BatchResult> {
    if runs.is_empty() {
        return Err(Error::config("a batch needs at least one repetition"));
    }
    runs.sort_by_key(|r| r.index);
    let times: Vec<f64> = runs.iter().filter_map(|r| r.t_star).map(|t| t as f64).collect();
    let i2c_mean = (!times.is_empty()).then(|| stats::mean(&times));
    let i2c_stddev = stats::mean_stddev(&times).ok().map(|(_, sd)| sd);
    Ok(BatchResult {
        params: params.clone(),
        repetitions: runs.len(),
        master_seed,
        converged_count: times.len(),
        i2c_mean,
        i2c_stddev,
        final_avg_trusts: runs
            .iter()
            .filter(|r| !r.converged)
            .map(|r| r.final_avg_trust)
            .collect(),
        runs,
    })
}

/// Runs `repetitions` independent simulations in parallel.
pub fn run_batch(params: &SimParams, repetitions: usize, master_seed: u64) -> Result<BatchResult> {
    params.validate()?;
    if repetitions == 0 {
        return Err(Error::config("repetitions must be at least 1"));
    }
    let runs = (0..repetitions)
        .into_par_iter()
        .map(|i| run_repetition(params, master_seed, i))
        .collect::<Result<Vec<_>>>()?;
    aggregate(params, master_seed, runs)
}

/// Grid coordinate of a sweep row, as configured.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "sweep", rename_all = "snake_case")]
pub enum GridPoint {
    Users { n: usize, l: usize },
    Attitude { phi: f64, gamma: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub point: GridPoint,
    pub batch: BatchResult,
}

/// `round-half-up(0.6 * n)`, in integer arithmetic.
pub fn comfort_for(n_users: usize) -> usize {
    (6 * n_users + 5) / 10
}

/// Template for the user-count sweep: `beta = gamma = 0.05`, 250 steps.
pub fn n_sweep_template() -> SimParams {
    SimParams::new(20, 12, DEFAULT_BETA, DEFAULT_BETA).with_max_iterations(N_SWEEP_MAX_ITERATIONS)
}

/// Template for the attitude sweep: `N = 100`, `L = 60`, `beta = 0.05`, 5000 steps.
pub fn phi_sweep_template() -> SimParams {
    SimParams::new(100, 60, DEFAULT_BETA, DEFAULT_BETA).with_max_iterations(PHI_SWEEP_MAX_ITERATIONS)
}

/// `{0.5, 0.6, ..., 2.0}`
pub fn coarse_phi_grid() -> Vec<f64> {
    (50..=200).step_by(10).map(|k| k as f64 / 100.0).collect()
}

/// `{1.40, 1.41, ..., 1.60}`
pub fn fine_phi_grid() -> Vec<f64> {
    (140..=160).map(|k| k as f64 / 100.0).collect()
}

/// Varies the population size with `L = round(0.6 N)`. All other
/// parameters come from `template`.
pub fn experiment_n_sweep(
    template: &SimParams,
    n_values: &[usize],
    reps: usize,
    master_seed: u64,
) -> Result<Vec<SweepRow>> {
    if let Some(n) = n_values.iter().find(|&&n| n <= 1) {
        return Err(Error::config(format!("population size {n} must exceed 1")));
    }
    n_values
        .iter()
        .map(|&n| {
            let l = comfort_for(n);
            let params = SimParams {
                n_users: n,
                comfort_level: l,
                ..template.clone()
            };
            Ok(SweepRow {
                point: GridPoint::Users { n, l },
                batch: run_batch(&params, reps, master_seed)?,
            })
        })
        .collect()
}

/// Varies the attitude with `gamma = phi * beta`. All other parameters come
/// from `template`.
pub fn experiment_phi_sweep(
    template: &SimParams,
    phi_values: &[f64],
    reps: usize,
    master_seed: u64,
) -> Result<Vec<SweepRow>> {
    if let Some(phi) = phi_values.iter().find(|&&p| p.is_nan() || p <= 0.0) {
        return Err(Error::config(format!("attitude phi = {phi} must be positive")));
    }
    phi_values
        .iter()
        .map(|&phi| {
            let params = template.clone().with_phi(phi);
            Ok(SweepRow {
                point: GridPoint::Attitude {
                    phi,
                    gamma: params.gamma,
                },
                batch: run_batch(&params, reps, master_seed)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::InitialTrust;
    use std::collections::HashSet;

    #[test]
    fn derive_seed_is_deterministic_and_distinct() {
        assert_eq!(derive_seed(42, 7), derive_seed(42, 7));
        let seen: HashSet<u64> = (0..1000).map(|i| derive_seed(42, i)).collect();
        assert_eq!(seen.len(), 1000);
        let differ = (0..1000).filter(|&i| derive_seed(1, i) != derive_seed(2, i)).count();
        assert!(differ >= 999);
    }

    #[test]
    fn derive_seed_reference_values() {
        // Reference outputs of SplitMix64 seeded with 0.
        assert_eq!(derive_seed(0, 0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(derive_seed(0, 1), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn comfort_rounding() {
        assert_eq!(comfort_for(20), 12);
        assert_eq!(comfort_for(1000), 600);
        assert_eq!(comfort_for(10), 6);
        assert_eq!(comfort_for(5), 3);
        assert_eq!(comfort_for(3), 2);
    }

    #[test]
    fn grids() {
        let c = coarse_phi_grid();
        assert_eq!(c.len(), 16);
        assert_eq!(c[0], 0.5);
        assert_eq!(c[15], 2.0);
        let f = fine_phi_grid();
        assert_eq!(f.len(), 21);
        assert_eq!(f[5], 1.45);
        assert_eq!(f[20], 1.6);
    }

    #[test]
    fn single_converged_repetition() {
        let p = SimParams::new(10, 6, 0.05, 0.05).with_initial_trust(InitialTrust::Constant(1.0));
        let b = run_batch(&p, 1, 3).unwrap();
        assert_eq!(b.converged_count, 1);
        assert_eq!(b.i2c_mean, Some(0.0));
        assert_eq!(b.i2c_stddev, None);
        assert!(b.final_avg_trusts.is_empty());
    }

    #[test]
    fn batch_rejects_zero_reps() {
        let p = SimParams::new(10, 6, 0.05, 0.05);
        assert!(run_batch(&p, 0, 3).is_err());
    }

    #[test]
    fn sweep_rejects_bad_grid() {
        assert!(experiment_n_sweep(&n_sweep_template(), &[20, 1], 1, 0).is_err());
        assert!(experiment_phi_sweep(&phi_sweep_template(), &[1.0, 0.0], 1, 0).is_err());
    }

    #[test]
    fn phi_rows_echo_configured_values() {
        let t = phi_sweep_template().with_max_iterations(5);
        let rows = experiment_phi_sweep(&t, &[1.0, 1.45, 2.0], 2, 1).unwrap();
        let pts: Vec<_> = rows.iter().map(|r| r.point).collect();
        assert_eq!(pts[0], GridPoint::Attitude { phi: 1.0, gamma: 0.05 });
        match pts[1] {
            GridPoint::Attitude { phi, gamma } => {
                assert_eq!(phi, 1.45);
                assert!((gamma - 0.0725).abs() < 1e-15);
            }
            _ => unreachable!(),
        }
        assert_eq!(pts[2], GridPoint::Attitude { phi: 2.0, gamma: 0.1 });
    }

    #[test]
    fn aggregation_ignores_order() {
        let p = SimParams::new(20, 12, 0.05, 0.05);
        let mut runs: Vec<_> = (0..12).map(|i| run_repetition(&p, 5, i).unwrap()).collect();
        let a = aggregate(&p, 5, runs.clone()).unwrap();
        runs.reverse();
        runs.swap(2, 7);
        let b = aggregate(&p, 5, runs).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, run_batch(&p, 12, 5).unwrap());
    }
}
