//! Pilot assignment and MMSE channel estimation.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::linalg::{hermitian_part, hermitian_sqrt, CMatrix, CVector, HermitianFactor, C64};
use crate::network::NetworkInstance;
use crate::rng::{complex_normal_vector, substream, Domain};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PilotParams {
    /// Coherence block length τ_c in channel uses.
    pub tau_c: usize,
    /// Number of orthogonal pilots τ_p.
    pub tau_p: usize,
    /// Pilot transmit power ρ_p in watts.
    pub rho_p: f64,
}

impl Default for PilotParams {
    fn default() -> Self {
        Self { tau_c: 200, tau_p: 10, rho_p: 0.1 }
    }
}

impl PilotParams {
    pub fn validate(&self) -> Result<()> {
        if self.tau_p == 0 || self.tau_p >= self.tau_c {
            return Err(Error::Config("pilot: need 1 <= tau_p < tau_c".into()));
        }
        if !(self.rho_p > 0.0) {
            return Err(Error::Config("pilot: rho_p must be positive".into()));
        }
        Ok(())
    }

    /// Fraction of each coherence block carrying data.
    pub fn prelog(&self) -> f64 {
        1.0 - self.tau_p as f64 / self.tau_c as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PilotPlan {
    pub params: PilotParams,
    /// Pilot index of every UE (0-based).
    pub pilot_of: Vec<usize>,
    /// UEs sharing each pilot, in ascending order.
    pub copilot_sets: Vec<Vec<usize>>,
}

impl PilotPlan {
    pub fn tau_p(&self) -> usize {
        self.params.tau_p
    }

    pub fn copilots_of(&self, k: usize) -> &[usize] {
        &self.copilot_sets[self.pilot_of[k]]
    }
}

/// Greedy pilot assignment: the first τ_p UEs get distinct pilots, every
/// later UE takes the pilot with the least co-pilot gain at its strongest AP.
pub fn assign_pilots(beta: &DMatrix<f64>, params: PilotParams) -> Result<PilotPlan> {
    params.validate()?;
    let (k_count, l_count) = beta.shape();
    let tau_p = params.tau_p;
    let mut pilot_of = Vec::with_capacity(k_count);
    let mut copilot_sets = vec![Vec::new(); tau_p];
    for k in 0..k_count {
        let t = if k < tau_p {
            k
        } else {
            let master = (0..l_count)
                .max_by(|&a, &b| beta[(k, a)].total_cmp(&beta[(k, b)]))
                .expect("at least one AP");
            let load = |t: usize| -> f64 { copilot_sets[t].iter().map(|&i| beta[(i, master)]).sum() };
            (0..tau_p)
                .min_by(|&a, &b| load(a).total_cmp(&load(b)))
                .expect("at least one pilot")
        };
        pilot_of.push(t);
        copilot_sets[t].push(k);
    }
    Ok(PilotPlan { params, pilot_of, copilot_sets })
}

/// MMSE estimation statistics for every AP-UE pair (UE-major storage).
#[derive(Debug, Clone)]
pub struct EstimationStats {
    /// Ψ per (pilot, AP), stored `t * L + l`.
    psi: Vec<CMatrix>,
    num_aps: usize,
    /// Estimate covariance B_kl.
    pub b: Vec<CMatrix>,
    /// Error covariance R_kl − B_kl.
    pub c: Vec<CMatrix>,
    /// Linear estimator √(τ_p ρ_p) R_kl Ψ⁻¹ applied to the pilot observation.
    pub estimator: Vec<CMatrix>,
}

impl EstimationStats {
    pub fn psi(&self, plan: &PilotPlan, k: usize, l: usize) -> &CMatrix {
        &self.psi[plan.pilot_of[k] * self.num_aps + l]
    }

    pub fn psi_of_pilot(&self, t: usize, l: usize) -> &CMatrix {
        &self.psi[t * self.num_aps + l]
    }

    pub fn b(&self, k: usize, l: usize) -> &CMatrix {
        &self.b[k * self.num_aps + l]
    }

    pub fn c(&self, k: usize, l: usize) -> &CMatrix {
        &self.c[k * self.num_aps + l]
    }
}

pub fn estimation_stats(instance: &NetworkInstance, plan: &PilotPlan) -> Result<EstimationStats> {
    let (k_count, l_count, n) = (instance.num_ues(), instance.num_aps(), instance.antennas());
    if plan.pilot_of.len() != k_count {
        return Err(Error::Config("pilot plan does not match the number of UEs".into()));
    }
    let tau_rho = plan.params.tau_p as f64 * plan.params.rho_p;
    let sigma2 = instance.config.noise_var;

    let mut psi = Vec::with_capacity(plan.tau_p() * l_count);
    let mut factors = Vec::with_capacity(plan.tau_p() * l_count);
    for set in &plan.copilot_sets {
        for l in 0..l_count {
            let mut m = CMatrix::identity(n, n) * C64::new(sigma2, 0.0);
            for &i in set {
                m += instance.corr(i, l) * C64::new(tau_rho, 0.0);
            }
            factors.push(HermitianFactor::new(&m)?);
            psi.push(m);
        }
    }

    let mut b = Vec::with_capacity(k_count * l_count);
    let mut c = Vec::with_capacity(k_count * l_count);
    let mut estimator = Vec::with_capacity(k_count * l_count);
    for k in 0..k_count {
        let t = plan.pilot_of[k];
        for l in 0..l_count {
            let r = instance.corr(k, l);
            let psi_inv_r = factors[t * l_count + l].solve_matrix(r);
            let bkl = hermitian_part(&((r * &psi_inv_r) * C64::new(tau_rho, 0.0)));
            c.push(hermitian_part(&(r - &bkl)));
            b.push(bkl);
            estimator.push(psi_inv_r.adjoint() * C64::new(tau_rho.sqrt(), 0.0));
        }
    }
    Ok(EstimationStats { psi, num_aps: l_count, b, c, estimator })
}

/// True channels and their MMSE estimates for one coherence block.
#[derive(Debug, Clone)]
pub struct BlockRealization {
    /// h_kl, UE-major.
    pub h: Vec<CVector>,
    /// ĥ_kl, UE-major.
    pub h_hat: Vec<CVector>,
}

impl BlockRealization {
    pub fn h(&self, k: usize, l: usize, num_aps: usize) -> &CVector {
        &self.h[k * num_aps + l]
    }

    pub fn h_hat(&self, k: usize, l: usize, num_aps: usize) -> &CVector {
        &self.h_hat[k * num_aps + l]
    }
}

/// Draws channel realizations and pilot observations block by block.
///
/// Block `b` at AP `l` always uses the substream `(seed, b, l)`, so any block
/// can be regenerated independently of the others.
#[derive(Debug, Clone)]
pub struct ChannelSampler<'a> {
    instance: &'a NetworkInstance,
    plan: &'a PilotPlan,
    stats: &'a EstimationStats,
    sqrt_corr: Vec<CMatrix>,
}

impl<'a> ChannelSampler<'a> {
    pub fn new(instance: &'a NetworkInstance, plan: &'a PilotPlan, stats: &'a EstimationStats) -> Self {
        let sqrt_corr = instance.corr.iter().map(hermitian_sqrt).collect();
        Self { instance, plan, stats, sqrt_corr }
    }

    pub fn draw(&self, seed: u64, block: u64) -> BlockRealization {
        let (k_count, l_count, n) =
            (self.instance.num_ues(), self.instance.num_aps(), self.instance.antennas());
        let sqrt_tau_rho = (self.plan.params.tau_p as f64 * self.plan.params.rho_p).sqrt();
        let noise_std = self.instance.config.noise_var.sqrt();
        let mut h = vec![CVector::zeros(n); k_count * l_count];
        let mut h_hat = vec![CVector::zeros(n); k_count * l_count];
        for l in 0..l_count {
            let mut rng = substream(seed, Domain::Channels, block, l as u64);
            for k in 0..k_count {
                let z = complex_normal_vector(&mut rng, n);
                h[k * l_count + l] = &self.sqrt_corr[k * l_count + l] * z;
            }
            for set in &self.plan.copilot_sets {
                let mut y = complex_normal_vector(&mut rng, n) * C64::new(noise_std, 0.0);
                for &i in set {
                    y += &h[i * l_count + l] * C64::new(sqrt_tau_rho, 0.0);
                }
                for &i in set {
                    h_hat[i * l_count + l] = &self.stats.estimator[i * l_count + l] * &y;
                }
            }
        }
        BlockRealization { h, h_hat }
    }
}

/// One block of channel realizations and MMSE estimates.
pub fn estimate_channels(
    instance: &NetworkInstance,
    plan: &PilotPlan,
    stats: &EstimationStats,
    seed: u64,
    block: u64,
) -> BlockRealization {
    ChannelSampler::new(instance, plan, stats).draw(seed, block)
}
