//! AP-UE association, fractional power control and the network power model.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::linalg::C64;
use crate::lsfd::LsfdVector;
use crate::{Error, Result};

/// Bipartite AP-UE association.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Association {
    /// `M_k`: APs serving each UE, ascending.
    pub serving: Vec<Vec<usize>>,
    /// `D_l`: UEs served by each AP, ascending.
    pub served: Vec<Vec<usize>>,
}

impl Association {
    pub fn from_serving(serving: Vec<Vec<usize>>, num_aps: usize) -> Self {
        let mut served = vec![Vec::new(); num_aps];
        for (k, aps) in serving.iter().enumerate() {
            for &l in aps {
                served[l].push(k);
            }
        }
        Self { serving, served }
    }

    /// Every AP serves every UE.
    pub fn full(num_ues: usize, num_aps: usize) -> Self {
        Self::from_serving(vec![(0..num_aps).collect(); num_ues], num_aps)
    }

    pub fn num_ues(&self) -> usize {
        self.serving.len()
    }

    pub fn num_aps(&self) -> usize {
        self.served.len()
    }

    pub fn links(&self) -> usize {
        self.serving.iter().map(Vec::len).sum()
    }

    pub fn mean_serving_aps(&self) -> f64 {
        self.links() as f64 / self.num_ues().max(1) as f64
    }

    pub fn mean_served_ues(&self) -> f64 {
        self.links() as f64 / self.num_aps().max(1) as f64
    }

    /// UEs left without any serving AP.
    pub fn unserved(&self) -> Vec<usize> {
        (0..self.num_ues()).filter(|&k| self.serving[k].is_empty()).collect()
    }

    /// `l ∈ M_k ⟺ k ∈ D_l`.
    pub fn is_consistent(&self) -> bool {
        let forward = self
            .serving
            .iter()
            .enumerate()
            .all(|(k, aps)| aps.iter().all(|&l| l < self.served.len() && self.served[l].contains(&k)));
        let backward = self
            .served
            .iter()
            .enumerate()
            .all(|(l, ues)| ues.iter().all(|&k| k < self.serving.len() && self.serving[k].contains(&l)));
        let served_total: usize = self.served.iter().map(Vec::len).sum();
        forward && backward && served_total == self.links()
    }
}

/// `M_k = {l : a_kl ≠ 0}` for every UE.
pub fn extract_association(vectors: &[LsfdVector], num_aps: usize) -> Association {
    let mut serving = vec![Vec::new(); vectors.len()];
    for v in vectors {
        serving[v.owner] = v
            .a
            .iter()
            .enumerate()
            .filter(|(_, x)| **x != C64::new(0.0, 0.0))
            .map(|(l, _)| l)
            .collect();
    }
    Association::from_serving(serving, num_aps)
}

/// Fractional power control normalized so the UE with the weakest aggregate
/// gain over its serving set transmits at `p_max`.
pub fn fractional_power(
    beta: &DMatrix<f64>,
    serving: &[Vec<usize>],
    theta: f64,
    p_max: f64,
) -> Result<Vec<f64>> {
    let gains = serving
        .iter()
        .enumerate()
        .map(|(k, aps)| {
            if aps.is_empty() {
                Err(Error::EmptyServingSet(k))
            } else {
                Ok(aps.iter().map(|&l| beta[(k, l)]).sum::<f64>())
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let weakest = gains.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(gains.iter().map(|&g| p_max * (weakest / g).powf(theta)).collect())
}

/// Per-AP power parameters (watts).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApPower {
    /// Circuit power per antenna.
    pub p_c_ap: f64,
    /// Processing power per antenna and served UE.
    pub p_proc: f64,
    /// Fixed fronthaul power.
    pub p_fix_fh: f64,
    /// Fronthaul signalling power per served UE.
    pub p_sig: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerModel {
    pub bandwidth_hz: f64,
    pub p_max: f64,
    pub theta: f64,
    /// Power amplifier efficiency.
    pub eta: f64,
    pub p_c_ue: f64,
    pub p_c_ap: f64,
    pub p_proc: f64,
    pub p_fix_fh: f64,
    pub p_sig: f64,
    pub p_fix_cpu: f64,
    pub p_lsfd: f64,
    /// Decoding power in W per bit/s.
    pub p_deco: f64,
    /// Overrides of the AP parameters keyed by AP index.
    pub ap_overrides: BTreeMap<usize, ApPower>,
}

impl Default for PowerModel {
    fn default() -> Self {
        Self {
            bandwidth_hz: 20e6,
            p_max: 0.1,
            theta: 1.0,
            eta: 0.4,
            p_c_ue: 0.1,
            p_c_ap: 0.2,
            p_proc: 0.8,
            p_fix_fh: 0.825,
            p_sig: 0.01,
            p_fix_cpu: 5.0,
            p_lsfd: 1.0,
            p_deco: 1e-9,
            ap_overrides: BTreeMap::new(),
        }
    }
}

impl PowerModel {
    pub fn validate(&self) -> Result<()> {
        let values = [
            self.bandwidth_hz,
            self.p_max,
            self.p_c_ue,
            self.p_c_ap,
            self.p_proc,
            self.p_fix_fh,
            self.p_sig,
            self.p_fix_cpu,
            self.p_lsfd,
            self.p_deco,
        ];
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::Config("power model: parameters must be nonnegative".into()));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::Config("power model: eta must lie in (0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::Config("power model: theta must lie in [0, 1]".into()));
        }
        let ap_ok = self.ap_overrides.values().all(|ap| {
            [ap.p_c_ap, ap.p_proc, ap.p_fix_fh, ap.p_sig].iter().all(|v| *v >= 0.0)
        });
        if !ap_ok {
            return Err(Error::Config("power model: AP overrides must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn ap(&self, l: usize) -> ApPower {
        self.ap_overrides.get(&l).copied().unwrap_or(ApPower {
            p_c_ap: self.p_c_ap,
            p_proc: self.p_proc,
            p_fix_fh: self.p_fix_fh,
            p_sig: self.p_sig,
        })
    }
}

/// Network power consumption in watts: UEs, APs, fronthaul and CPU.
pub fn total_power(
    assoc: &Association,
    powers: &[f64],
    ses: &[f64],
    model: &PowerModel,
    antennas: usize,
) -> f64 {
    let n = antennas as f64;
    let ue: f64 = powers.iter().map(|p| model.p_c_ue + p / model.eta).sum();
    let mut ap = 0.0;
    let mut fronthaul = 0.0;
    for (l, ues) in assoc.served.iter().enumerate() {
        let params = model.ap(l);
        let served = ues.len() as f64;
        ap += n * params.p_c_ap + n * served * params.p_proc;
        fronthaul += params.p_fix_fh + served * params.p_sig;
    }
    let cpu = model.p_fix_cpu
        + assoc.links() as f64 * model.p_lsfd
        + model.bandwidth_hz * ses.iter().sum::<f64>() * model.p_deco;
    ue + ap + fronthaul + cpu
}

/// Energy efficiency in bit/J.
pub fn energy_efficiency(ses: &[f64], power_w: f64, bandwidth_hz: f64) -> Result<f64> {
    if !(power_w > 0.0) {
        return Err(Error::NonPositivePower(power_w));
    }
    Ok(bandwidth_hz * ses.iter().sum::<f64>() / power_w)
}
