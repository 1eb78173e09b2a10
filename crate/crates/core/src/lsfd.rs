//! Optimal and partial LSFD and the per-UE SINR, SE and MSE metrics.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::linalg::{inner, quad_form, CMatrix, CVector, HermitianFactor, C64};
use crate::pilots::PilotPlan;
use crate::power_energy::Association;
use crate::{Error, Result};

/// LSFD weights `a_k` of one UE over all L APs.
#[derive(Debug, Clone, PartialEq)]
pub struct LsfdVector {
    pub owner: usize,
    pub a: CVector,
}

impl LsfdVector {
    pub fn new(owner: usize, a: CVector) -> Self {
        Self { owner, a }
    }

    /// APs with a nonzero weight.
    pub fn support(&self) -> Vec<usize> {
        self.a
            .iter()
            .enumerate()
            .filter(|(_, x)| **x != C64::new(0.0, 0.0))
            .map(|(l, _)| l)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UeMetrics {
    pub sinr: f64,
    pub se: f64,
    pub mse: f64,
}

/// Effective SINR `|aᴴb|² / (aᴴAa − |aᴴb|²)`.
pub fn sinr(a: &CVector, big_a: &CMatrix, b: &CVector) -> Result<f64> {
    if a.iter().all(|x| *x == C64::new(0.0, 0.0)) {
        return Err(Error::ZeroVector);
    }
    let signal = inner(a, b).norm_sqr();
    let denom = quad_form(a, big_a) - signal;
    if !(denom > 0.0) {
        return Err(Error::NonPositiveDenominator(denom));
    }
    Ok(signal / denom)
}

/// Spectral efficiency `(1 − τ_p/τ_c) log₂(1 + SINR)` in bit/s/Hz.
pub fn se(sinr: f64, tau_p: usize, tau_c: usize) -> f64 {
    (1.0 - tau_p as f64 / tau_c as f64) * (1.0 + sinr).log2()
}

/// `(A − bbᴴ)⁻¹ b`, the SINR-maximizing LSFD vector (unit scaling).
pub fn olsfd_weights(big_a: &CMatrix, b: &CVector) -> Result<CVector> {
    let reduced = big_a - b * b.adjoint();
    Ok(HermitianFactor::new(&reduced)?.solve(b))
}

/// O-LSFD restricted to the APs in `subset`; all other weights are zero.
pub fn plsfd_weights(big_a: &CMatrix, b: &CVector, subset: &[usize]) -> Result<CVector> {
    if subset.is_empty() {
        return Err(Error::ZeroVector);
    }
    let sub_a = CMatrix::from_fn(subset.len(), subset.len(), |i, j| big_a[(subset[i], subset[j])]);
    let sub_b = CVector::from_fn(subset.len(), |i, _| b[subset[i]]);
    let w = olsfd_weights(&sub_a, &sub_b)?;
    let mut a = CVector::zeros(b.len());
    for (i, &l) in subset.iter().enumerate() {
        a[l] = w[i];
    }
    Ok(a)
}

/// `aᴴAa − 2 Re(aᴴc) + p` where `c` is the linear-term vector. For the data
/// MSE of UE k, `c = √p_k b_k` (see [`data_mse`]).
pub fn mse(a: &CVector, big_a: &CMatrix, target: &CVector, p: f64) -> f64 {
    quad_form(a, big_a) - 2.0 * inner(a, target).re + p
}

/// Data-estimate MSE `E{|s_k − ŝ_k|²}` with the SINR statistics `b_k`.
pub fn data_mse(a: &CVector, big_a: &CMatrix, b: &CVector, p: f64) -> f64 {
    mse(a, big_a, &(b * C64::new(p.sqrt(), 0.0)), p)
}

/// O-LSFD scaled to minimize the data MSE: `c_k = √p_k (1 − bᴴA⁻¹b)`.
pub fn olsfd_mmse_weights(big_a: &CMatrix, b: &CVector, p: f64) -> Result<CVector> {
    let w = olsfd_weights(big_a, b)?;
    let q = inner(b, &HermitianFactor::new(big_a)?.solve(b)).re;
    Ok(w * C64::new(p.sqrt() * (1.0 - q), 0.0))
}

/// SINR, SE and data MSE of one UE for the given weights.
pub fn ue_metrics(
    a: &CVector,
    big_a: &CMatrix,
    b: &CVector,
    p: f64,
    plan: &PilotPlan,
) -> Result<UeMetrics> {
    let s = sinr(a, big_a, b)?;
    Ok(UeMetrics {
        sinr: s,
        se: se(s, plan.params.tau_p, plan.params.tau_c),
        mse: data_mse(a, big_a, b, p),
    })
}

/// Heuristic association for the P-LSFD baseline: every UE is served by its
/// strongest AP, and every AP additionally serves the strongest UE of each
/// pilot.
pub fn heuristic_association(beta: &DMatrix<f64>, plan: &PilotPlan) -> Association {
    let (k_count, l_count) = beta.shape();
    let mut serving = vec![Vec::new(); k_count];
    for k in 0..k_count {
        let master = (0..l_count)
            .max_by(|&a, &b| beta[(k, a)].total_cmp(&beta[(k, b)]))
            .expect("at least one AP");
        serving[k].push(master);
    }
    for l in 0..l_count {
        for set in &plan.copilot_sets {
            if let Some(&best) = set.iter().max_by(|&&a, &&b| beta[(a, l)].total_cmp(&beta[(b, l)])) {
                if !serving[best].contains(&l) {
                    serving[best].push(l);
                }
            }
        }
    }
    for s in &mut serving {
        s.sort_unstable();
    }
    Association::from_serving(serving, l_count)
}
