#![allow(dead_code)]

use cellfree_lsfd::harness::{prepare_drop, ExperimentConfig, NetworkDrop};
use cellfree_lsfd::rng::complex_normal;
use cellfree_lsfd::sglasso::{build_problem, SparseProblem};
use cellfree_lsfd::uplink::{CombinerChoice, LsfdStatistics};
use cellfree_lsfd::{CMatrix, CVector, C64};
use rand::Rng;

/// Desk-scale config restricted to L-MMSE.
pub fn desk_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::desk_scale();
    cfg.combiners = vec![CombinerChoice::Lmmse];
    cfg
}

/// L = 10, N = 2, K = 4 drop with L-MMSE statistics.
pub fn simulated(seed: u64, n_blocks: u64) -> (NetworkDrop, LsfdStatistics, SparseProblem) {
    let mut cfg = desk_config();
    cfg.seed = seed;
    let drop = prepare_drop(&cfg, &cfg.setups[0], 0).expect("drop");
    let stats = drop.statistics(CombinerChoice::Lmmse, n_blocks).expect("statistics");
    let problem = build_problem(&stats).expect("problem");
    (drop, stats, problem)
}

/// `XXᴴ/m + shift·I` with X an n×m complex Gaussian matrix.
pub fn random_pd<R: Rng>(rng: &mut R, n: usize, shift: f64) -> CMatrix {
    let m = 2 * n;
    let x = CMatrix::from_fn(n, m, |_, _| complex_normal(rng));
    &x * x.adjoint() / C64::new(m as f64, 0.0) + CMatrix::identity(n, n) * C64::new(shift, 0.0)
}

pub fn random_vector<R: Rng>(rng: &mut R, n: usize, scale: f64) -> CVector {
    CVector::from_fn(n, |_, _| complex_normal(rng) * scale)
}

/// K blocks of size L.
pub fn random_problem<R: Rng>(rng: &mut R, k: usize, l: usize) -> SparseProblem {
    let a = (0..k).map(|_| random_pd(rng, l, 0.05)).collect();
    let b = (0..k).map(|_| random_vector(rng, l, 0.5)).collect();
    SparseProblem::new(a, b).expect("PD blocks")
}

pub fn rel_gap(value: f64, reference: f64) -> f64 {
    (value - reference) / reference.abs().max(f64::MIN_POSITIVE)
}
