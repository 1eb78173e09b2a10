//! Network geometry, large-scale fading and spatial correlation.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::linalg::{hermitian_eigen, hermitian_part, spectral_map, CMatrix, C64};
use crate::rng::{substream, Domain};
use crate::{Error, Result};

/// Planar position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Thermal noise power in watts for a receiver of the given bandwidth and
/// noise figure (−174 dBm/Hz reference).
pub fn noise_power_w(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    let dbm = -174.0 + 10.0 * bandwidth_hz.log10() + noise_figure_db;
    10f64.powf(dbm / 10.0) / 1000.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub num_aps: usize,
    pub antennas_per_ap: usize,
    pub num_ues: usize,
    pub side_m: f64,
    pub ap_height_m: f64,
    pub shadow_std_db: f64,
    pub asd_deg: f64,
    pub antenna_spacing_wl: f64,
    /// Receiver noise power σ² in watts.
    pub noise_var: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            num_aps: 40,
            antennas_per_ap: 4,
            num_ues: 20,
            side_m: 500.0,
            ap_height_m: 10.0,
            shadow_std_db: 4.0,
            asd_deg: 15.0,
            antenna_spacing_wl: 0.5,
            noise_var: noise_power_w(20e6, 7.0),
        }
    }
}

impl NetworkConfig {
    /// Small network used by CI and the examples: L=10, N=2, K=4.
    pub fn desk_scale() -> Self {
        Self {
            num_aps: 10,
            antennas_per_ap: 2,
            num_ues: 4,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(format!("network: {msg}")));
        if self.num_aps == 0 || self.antennas_per_ap == 0 || self.num_ues == 0 {
            return bad("L, N and K must be at least 1");
        }
        if !(self.side_m > 0.0) {
            return bad("side_m must be positive");
        }
        if !(self.noise_var > 0.0) {
            return bad("noise_var must be positive");
        }
        if !(self.ap_height_m >= 0.0) || !(self.shadow_std_db >= 0.0) || !(self.asd_deg >= 0.0) {
            return bad("ap_height_m, shadow_std_db and asd_deg must be nonnegative");
        }
        if !(self.antenna_spacing_wl > 0.0) {
            return bad("antenna_spacing_wl must be positive");
        }
        Ok(())
    }
}

/// Minimum-image displacement `q − p` on a torus of the given side.
pub fn min_image_offset(p: Point, q: Point, side_m: f64) -> (f64, f64) {
    let wrap = |d: f64| {
        [d - side_m, d, d + side_m]
            .into_iter()
            .min_by(|a, b| a.abs().total_cmp(&b.abs()))
            .unwrap()
    };
    (wrap(q.x - p.x), wrap(q.y - p.y))
}

/// 3D distance between `p` and the nearest wrapped copy of `q`.
pub fn wrap_distance(p: Point, q: Point, side_m: f64, ap_height_m: f64) -> f64 {
    let (dx, dy) = min_image_offset(p, q, side_m);
    (dx * dx + dy * dy + ap_height_m * ap_height_m).sqrt()
}

/// Urban-microcell pathloss in dB, without shadowing.
pub fn pathloss_db(distance_m: f64) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(Error::NonPositiveDistance(distance_m));
    }
    Ok(-30.5 - 36.7 * distance_m.log10())
}

/// Local-scattering correlation matrix of a uniform linear array with a
/// Gaussian angular spread around `nominal_angle`.
pub fn correlation_matrix(
    beta: f64,
    nominal_angle: f64,
    asd: f64,
    antennas: usize,
    spacing_wl: f64,
) -> CMatrix {
    let phase = 2.0 * PI * spacing_wl;
    let mut r = CMatrix::from_fn(antennas, antennas, |m, n| {
        let dist = m as f64 - n as f64;
        let rot = C64::from_polar(1.0, phase * dist * nominal_angle.sin());
        let spread = asd * phase * dist * nominal_angle.cos();
        rot * (beta * (-spread * spread / 2.0).exp())
    });
    for m in 0..antennas {
        r[(m, m)] = C64::new(beta, 0.0);
    }
    repair_psd(&r, beta)
}

/// Clips negative eigenvalues and restores the trace `N·β`.
fn repair_psd(r: &CMatrix, beta: f64) -> CMatrix {
    let n = r.nrows();
    let (values, vectors) = hermitian_eigen(r);
    if values.first().map_or(true, |&v| v >= 0.0) {
        return hermitian_part(r);
    }
    let repaired = spectral_map(&values, &vectors, |v| v.max(0.0));
    let trace: f64 = (0..n).map(|i| repaired[(i, i)].re).sum();
    let mut out = repaired * C64::new(n as f64 * beta / trace, 0.0);
    for i in 0..n {
        out[(i, i)].im = 0.0;
    }
    out
}

/// One drop of APs and UEs with its large-scale statistics.
#[derive(Debug, Clone)]
pub struct NetworkInstance {
    pub config: NetworkConfig,
    pub ap_pos: Vec<Point>,
    pub ue_pos: Vec<Point>,
    /// K×L large-scale fading coefficients (linear).
    pub beta: DMatrix<f64>,
    /// N×N correlation matrices, UE-major (`k * L + l`).
    pub corr: Vec<CMatrix>,
}

impl NetworkInstance {
    /// Builds an instance from explicit positions and a K×L shadowing map in dB.
    pub fn from_geometry(
        config: NetworkConfig,
        ap_pos: Vec<Point>,
        ue_pos: Vec<Point>,
        shadow_db: &DMatrix<f64>,
    ) -> Result<Self> {
        config.validate()?;
        let (k_count, l_count) = (ue_pos.len(), ap_pos.len());
        if k_count != config.num_ues || l_count != config.num_aps {
            return Err(Error::Config("position counts do not match K and L".into()));
        }
        if shadow_db.shape() != (k_count, l_count) {
            return Err(Error::Config("shadowing map must be K×L".into()));
        }
        let asd = config.asd_deg.to_radians();
        let mut beta = DMatrix::zeros(k_count, l_count);
        let mut corr = Vec::with_capacity(k_count * l_count);
        for k in 0..k_count {
            for l in 0..l_count {
                let d = wrap_distance(ap_pos[l], ue_pos[k], config.side_m, config.ap_height_m);
                let gain_db = pathloss_db(d)? + shadow_db[(k, l)];
                let b = 10f64.powf(gain_db / 10.0);
                let (dx, dy) = min_image_offset(ap_pos[l], ue_pos[k], config.side_m);
                let angle = dy.atan2(dx);
                beta[(k, l)] = b;
                corr.push(correlation_matrix(
                    b,
                    angle,
                    asd,
                    config.antennas_per_ap,
                    config.antenna_spacing_wl,
                ));
            }
        }
        Ok(Self { config, ap_pos, ue_pos, beta, corr })
    }

    pub fn num_aps(&self) -> usize {
        self.config.num_aps
    }

    pub fn num_ues(&self) -> usize {
        self.config.num_ues
    }

    pub fn antennas(&self) -> usize {
        self.config.antennas_per_ap
    }

    pub fn corr(&self, k: usize, l: usize) -> &CMatrix {
        &self.corr[k * self.num_aps() + l]
    }
}

/// Drops L APs and K UEs uniformly on the square and draws i.i.d. shadowing
/// per AP-UE pair. Deterministic in `(cfg, seed)`.
pub fn generate_network(cfg: &NetworkConfig, seed: u64) -> Result<NetworkInstance> {
    cfg.validate()?;
    let mut geo = substream(seed, Domain::Geometry, 0, 0);
    let mut drop = |n: usize| -> Vec<Point> {
        (0..n)
            .map(|_| {
                let x = geo.random_range(0.0..cfg.side_m);
                let y = geo.random_range(0.0..cfg.side_m);
                Point::new(x, y)
            })
            .collect()
    };
    let ap_pos = drop(cfg.num_aps);
    let ue_pos = drop(cfg.num_ues);
    let mut shadow_rng = substream(seed, Domain::Shadowing, 0, 0);
    let normal = Normal::new(0.0, cfg.shadow_std_db)
        .map_err(|e| Error::Config(format!("shadowing: {e}")))?;
    let mut shadow = DMatrix::zeros(cfg.num_ues, cfg.num_aps);
    // row-major draw order: pair (k, l) always gets the same variate
    for k in 0..cfg.num_ues {
        for l in 0..cfg.num_aps {
            shadow[(k, l)] = normal.sample(&mut shadow_rng);
        }
    }
    NetworkInstance::from_geometry(cfg.clone(), ap_pos, ue_pos, &shadow)
}
