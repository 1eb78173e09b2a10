//! Local combining at the APs and Monte Carlo estimation of the LSFD
//! statistics `A_k`, `b_k`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::{hermitian_part, inner, CMatrix, CVector, HermitianFactor, C64};
use crate::network::NetworkInstance;
use crate::pilots::{BlockRealization, ChannelSampler, EstimationStats, PilotPlan};
use crate::{Error, Result};

/// Blocks summed sequentially before the deterministic cross-chunk reduction.
const CHUNK_BLOCKS: u64 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombinerChoice {
    Mr,
    Lmmse,
}

impl CombinerChoice {
    pub const ALL: [CombinerChoice; 2] = [CombinerChoice::Mr, CombinerChoice::Lmmse];

    pub fn label(self) -> &'static str {
        match self {
            CombinerChoice::Mr => "mr",
            CombinerChoice::Lmmse => "lmmse",
        }
    }
}

impl fmt::Display for CombinerChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for CombinerChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mr" => Ok(CombinerChoice::Mr),
            "lmmse" | "l-mmse" => Ok(CombinerChoice::Lmmse),
            other => Err(Error::Config(format!("unknown combiner `{other}`"))),
        }
    }
}

/// Maximum-ratio combining: the channel estimate itself.
pub fn mr_combiner(h_hat: &CVector) -> CVector {
    h_hat.clone()
}

/// Local MMSE combining at one AP. The regularized sample covariance is
/// factored once and reused for every UE.
#[derive(Debug, Clone)]
pub struct LocalMmse<'a> {
    h_hats: &'a [&'a CVector],
    powers: &'a [f64],
    factor: HermitianFactor,
}

impl<'a> LocalMmse<'a> {
    pub fn new(
        h_hats: &'a [&'a CVector],
        error_covs: &[&CMatrix],
        powers: &'a [f64],
        noise_var: f64,
    ) -> Result<Self> {
        let n = h_hats.first().map_or(0, |h| h.len());
        let mut z = CMatrix::identity(n, n) * C64::new(noise_var, 0.0);
        for ((h, c), &p) in h_hats.iter().zip(error_covs).zip(powers) {
            if p == 0.0 {
                continue;
            }
            z += (*h * h.adjoint() + *c) * C64::new(p, 0.0);
        }
        let factor = HermitianFactor::new(&hermitian_part(&z))?;
        Ok(Self { h_hats, powers, factor })
    }

    pub fn combiner(&self, k: usize) -> CVector {
        self.factor.solve(self.h_hats[k]) * C64::new(self.powers[k], 0.0)
    }
}

/// L-MMSE combiner of UE `k` at one AP.
pub fn lmmse_combiner(
    h_hats: &[&CVector],
    error_covs: &[&CMatrix],
    powers: &[f64],
    noise_var: f64,
    k: usize,
) -> Result<CVector> {
    Ok(LocalMmse::new(h_hats, error_covs, powers, noise_var)?.combiner(k))
}

/// Second-order LSFD statistics of every UE.
#[derive(Debug, Clone)]
pub struct LsfdStatistics {
    /// L×L Hermitian `A_k`.
    pub a: Vec<CMatrix>,
    /// `b_k = √p_k E{g_kk}`.
    pub b: Vec<CVector>,
    /// Transmit powers the statistics were estimated under.
    pub p: Vec<f64>,
}

impl LsfdStatistics {
    pub fn num_ues(&self) -> usize {
        self.a.len()
    }

    pub fn num_aps(&self) -> usize {
        self.a.first().map_or(0, |a| a.nrows())
    }
}

/// Per-block sums before averaging.
#[derive(Debug, Clone)]
pub struct BlockSums {
    /// `Σ_i p_i g_ki g_kiᴴ + σ² diag(‖v_kl‖²)` per UE.
    pub a: Vec<CMatrix>,
    /// `g_kk` per UE.
    pub g_own: Vec<CVector>,
}

impl BlockSums {
    fn zeros(k_count: usize, l_count: usize) -> Self {
        Self {
            a: vec![CMatrix::zeros(l_count, l_count); k_count],
            g_own: vec![CVector::zeros(l_count); k_count],
        }
    }

    fn add(&mut self, other: &BlockSums) {
        for (x, y) in self.a.iter_mut().zip(&other.a) {
            *x += y;
        }
        for (x, y) in self.g_own.iter_mut().zip(&other.g_own) {
            *x += y;
        }
    }
}

/// Combining vectors `v_kl` (UE-major) for one realization.
pub fn combiners(
    instance: &NetworkInstance,
    stats: &EstimationStats,
    realization: &BlockRealization,
    choice: CombinerChoice,
    powers: &[f64],
) -> Result<Vec<CVector>> {
    let (k_count, l_count) = (instance.num_ues(), instance.num_aps());
    let mut v = vec![CVector::zeros(instance.antennas()); k_count * l_count];
    for l in 0..l_count {
        match choice {
            CombinerChoice::Mr => {
                for k in 0..k_count {
                    v[k * l_count + l] = mr_combiner(realization.h_hat(k, l, l_count));
                }
            }
            CombinerChoice::Lmmse => {
                let h_hats: Vec<&CVector> =
                    (0..k_count).map(|i| realization.h_hat(i, l, l_count)).collect();
                let covs: Vec<&CMatrix> = (0..k_count).map(|i| stats.c(i, l)).collect();
                let local = LocalMmse::new(&h_hats, &covs, powers, instance.config.noise_var)?;
                for k in 0..k_count {
                    v[k * l_count + l] = local.combiner(k);
                }
            }
        }
    }
    Ok(v)
}

/// Contribution of a single realization to the statistics.
pub fn block_sums(
    instance: &NetworkInstance,
    stats: &EstimationStats,
    realization: &BlockRealization,
    choice: CombinerChoice,
    powers: &[f64],
) -> Result<BlockSums> {
    let (k_count, l_count) = (instance.num_ues(), instance.num_aps());
    let sigma2 = instance.config.noise_var;
    let v = combiners(instance, stats, realization, choice, powers)?;
    let mut sums = BlockSums::zeros(k_count, l_count);
    for k in 0..k_count {
        // columns of g are the receive-combined channels g_ki, scaled by √p_i
        let g = CMatrix::from_fn(l_count, k_count, |l, i| {
            inner(&v[k * l_count + l], realization.h(i, l, l_count)) * powers[i].sqrt()
        });
        let mut a = &g * g.adjoint();
        for l in 0..l_count {
            a[(l, l)] += C64::new(sigma2 * v[k * l_count + l].norm_squared(), 0.0);
        }
        sums.a[k] = a;
        sums.g_own[k] = CVector::from_fn(l_count, |l, _| {
            inner(&v[k * l_count + l], realization.h(k, l, l_count))
        });
    }
    Ok(sums)
}

/// Monte Carlo estimate of `A_k`, `b_k` over `n_blocks` coherence blocks.
///
/// Blocks are processed in parallel in fixed chunks whose partial sums are
/// reduced in chunk order, so the result is bit-identical for any thread
/// count.
pub fn estimate_lsfd_statistics(
    instance: &NetworkInstance,
    plan: &PilotPlan,
    stats: &EstimationStats,
    choice: CombinerChoice,
    powers: &[f64],
    n_blocks: u64,
    seed: u64,
) -> Result<LsfdStatistics> {
    let (k_count, l_count) = (instance.num_ues(), instance.num_aps());
    if n_blocks == 0 {
        return Err(Error::Config("n_blocks must be at least 1".into()));
    }
    if powers.len() != k_count || powers.iter().any(|&p| !(p >= 0.0)) {
        return Err(Error::Config("need one nonnegative power per UE".into()));
    }
    let sampler = ChannelSampler::new(instance, plan, stats);
    let n_chunks = n_blocks.div_ceil(CHUNK_BLOCKS);
    let partials: Vec<Result<BlockSums>> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut acc = BlockSums::zeros(k_count, l_count);
            let end = ((chunk + 1) * CHUNK_BLOCKS).min(n_blocks);
            for block in chunk * CHUNK_BLOCKS..end {
                let realization = sampler.draw(seed, block);
                acc.add(&block_sums(instance, stats, &realization, choice, powers)?);
            }
            Ok(acc)
        })
        .collect();
    let mut total = BlockSums::zeros(k_count, l_count);
    for partial in partials {
        total.add(&partial?);
    }
    let scale = C64::new(1.0 / n_blocks as f64, 0.0);
    let a = total.a.iter().map(|a| hermitian_part(&(a * scale))).collect();
    let b = total
        .g_own
        .iter()
        .zip(powers)
        .map(|(g, &p)| g * scale * C64::new(p.sqrt(), 0.0))
        .collect();
    Ok(LsfdStatistics { a, b, p: powers.to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{generate_network, NetworkConfig};
    use crate::pilots::{assign_pilots, estimation_stats, PilotParams};

    fn cv(xs: &[(f64, f64)]) -> CVector {
        CVector::from_iterator(xs.len(), xs.iter().map(|&(re, im)| C64::new(re, im)))
    }

    #[test]
    fn mr_is_identity() {
        let h = cv(&[(1.0, 1.0), (0.0, 0.0)]);
        assert_eq!(mr_combiner(&h), h);
        assert_eq!(mr_combiner(&CVector::zeros(3)), CVector::zeros(3));
        assert_eq!(mr_combiner(&h).norm(), h.norm());
    }

    #[test]
    fn lmmse_scalar() {
        let h = cv(&[(1.0, 0.0)]);
        let c = CMatrix::zeros(1, 1);
        let v = lmmse_combiner(&[&h], &[&c], &[1.0], 1.0, 0).unwrap();
        assert!((v[0] - C64::new(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn lmmse_approaches_mr_in_noise() {
        let h0 = cv(&[(1.0, 0.5), (-0.3, 2.0), (0.1, 0.1)]);
        let h1 = cv(&[(0.2, -1.0), (0.7, 0.0), (1.0, 1.0)]);
        let c = CMatrix::identity(3, 3) * C64::new(0.1, 0.0);
        let v = lmmse_combiner(&[&h0, &h1], &[&c, &c], &[1.0, 1.0], 1e9, 0).unwrap();
        let cos = inner(&v, &h0).norm() / (v.norm() * h0.norm());
        assert!((1.0 - cos).abs() < 1e-6);
    }

    #[test]
    fn zero_power_gives_noise_only_statistics() {
        let inst = generate_network(&NetworkConfig::desk_scale(), 1).unwrap();
        let plan = assign_pilots(&inst.beta, PilotParams::default()).unwrap();
        let stats = estimation_stats(&inst, &plan).unwrap();
        let p = vec![0.0; 4];
        let est = estimate_lsfd_statistics(&inst, &plan, &stats, CombinerChoice::Mr, &p, 40, 1).unwrap();
        for k in 0..4 {
            assert_eq!(est.b[k], CVector::zeros(10));
            let a = &est.a[k];
            for i in 0..10 {
                assert!(a[(i, i)].re > 0.0);
                for j in 0..10 {
                    if i != j {
                        assert_eq!(a[(i, j)], C64::new(0.0, 0.0));
                    }
                }
            }
        }
    }

    #[test]
    fn mr_signal_part_is_linear_in_power() {
        let inst = generate_network(&NetworkConfig::desk_scale(), 3).unwrap();
        let plan = assign_pilots(&inst.beta, PilotParams::default()).unwrap();
        let stats = estimation_stats(&inst, &plan).unwrap();
        let real = estimate_channels_for_test(&inst, &plan, &stats);
        let p = vec![0.1, 0.05, 0.02, 0.1];
        let p2: Vec<f64> = p.iter().map(|x| 2.0 * x).collect();
        let zero = block_sums(&inst, &stats, &real, CombinerChoice::Mr, &[0.0; 4]).unwrap();
        let one = block_sums(&inst, &stats, &real, CombinerChoice::Mr, &p).unwrap();
        let two = block_sums(&inst, &stats, &real, CombinerChoice::Mr, &p2).unwrap();
        for k in 0..4 {
            let s1 = &one.a[k] - &zero.a[k];
            let s2 = &two.a[k] - &zero.a[k];
            assert!((s2 - s1 * C64::new(2.0, 0.0)).norm() <= 1e-12 * one.a[k].norm());
        }
    }

    #[test]
    fn mr_own_term_bounded_by_diagonal() {
        let inst = generate_network(&NetworkConfig::desk_scale(), 8).unwrap();
        let plan = assign_pilots(&inst.beta, PilotParams::default()).unwrap();
        let stats = estimation_stats(&inst, &plan).unwrap();
        let p = vec![0.1; 4];
        for block in 0..5 {
            let real = crate::pilots::estimate_channels(&inst, &plan, &stats, 4, block);
            let sums = block_sums(&inst, &stats, &real, CombinerChoice::Mr, &p).unwrap();
            for k in 0..4 {
                for l in 0..10 {
                    let own = p[k] * sums.g_own[k][l].norm_sqr();
                    assert!(own <= sums.a[k][(l, l)].re * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn statistics_are_hermitian_positive_definite() {
        let inst = generate_network(&NetworkConfig::desk_scale(), 5).unwrap();
        let plan = assign_pilots(&inst.beta, PilotParams::default()).unwrap();
        let stats = estimation_stats(&inst, &plan).unwrap();
        let p = vec![0.1; 4];
        for choice in CombinerChoice::ALL {
            let est = estimate_lsfd_statistics(&inst, &plan, &stats, choice, &p, 100, 2).unwrap();
            for k in 0..4 {
                let a = &est.a[k];
                assert!((a.adjoint() - a).norm() <= 1e-12 * a.norm());
                assert!(HermitianFactor::new(a).is_ok());
                let reduced = a - &est.b[k] * est.b[k].adjoint();
                assert!(HermitianFactor::new(&reduced).is_ok());
            }
        }
    }

    #[test]
    fn estimates_do_not_depend_on_thread_count() {
        let inst = generate_network(&NetworkConfig::desk_scale(), 6).unwrap();
        let plan = assign_pilots(&inst.beta, PilotParams::default()).unwrap();
        let stats = estimation_stats(&inst, &plan).unwrap();
        let p = vec![0.1; 4];
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    estimate_lsfd_statistics(&inst, &plan, &stats, CombinerChoice::Lmmse, &p, 150, 9)
                        .unwrap()
                })
        };
        let (a, b) = (run(1), run(4));
        assert_eq!(a.a, b.a);
        assert_eq!(a.b, b.b);
    }

    #[test]
    fn combiner_names_parse() {
        assert_eq!("MR".parse::<CombinerChoice>().unwrap(), CombinerChoice::Mr);
        assert_eq!("lmmse".parse::<CombinerChoice>().unwrap(), CombinerChoice::Lmmse);
        assert!("zf".parse::<CombinerChoice>().is_err());
    }

    fn estimate_channels_for_test(
        inst: &NetworkInstance,
        plan: &PilotPlan,
        stats: &EstimationStats,
    ) -> BlockRealization {
        crate::pilots::estimate_channels(inst, plan, stats, 1, 0)
    }
}
