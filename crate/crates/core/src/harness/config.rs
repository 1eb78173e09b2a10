use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::network::NetworkConfig;
use crate::pilots::PilotParams;
use crate::power_energy::PowerModel;
use crate::sglasso::SolverOptions;
use crate::uplink::CombinerChoice;
use crate::{Error, Result};

/// One deployment: AP count and antennas per AP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Setup {
    pub name: String,
    pub num_aps: usize,
    pub antennas_per_ap: usize,
}

impl Setup {
    pub fn new(name: &str, num_aps: usize, antennas_per_ap: usize) -> Self {
        Self { name: name.to_string(), num_aps, antennas_per_ap }
    }
}

/// Solver knobs shared by every grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub max_sweeps: usize,
    pub inner_max: usize,
    pub inner_tol: f64,
    pub tol_rel: f64,
    pub backtrack_factor: f64,
    pub mu_init: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let o = SolverOptions::new(0.0, 0.0);
        Self {
            max_sweeps: o.max_sweeps,
            inner_max: o.inner_max,
            inner_tol: o.inner_tol,
            tol_rel: o.tol_rel,
            backtrack_factor: o.backtrack_factor,
            mu_init: o.mu_init,
        }
    }
}

impl SolverSettings {
    pub fn options(&self, gamma: f64, lambda: f64) -> SolverOptions {
        SolverOptions {
            gamma,
            lambda,
            max_sweeps: self.max_sweeps,
            inner_max: self.inner_max,
            inner_tol: self.inner_tol,
            tol_rel: self.tol_rel,
            backtrack_factor: self.backtrack_factor,
            mu_init: self.mu_init,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Monte Carlo coherence blocks per statistics estimate.
    pub n_blocks: u64,
    /// Independent network realizations.
    pub n_drops: usize,
    pub lambda_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    pub combiners: Vec<CombinerChoice>,
    pub setups: Vec<Setup>,
    /// Worker threads; 0 picks one per core.
    pub workers: usize,
    /// Write measured wall times into the CSV instead of zeros. Makes the
    /// CSV nondeterministic.
    pub csv_wall_time: bool,
    pub network: NetworkConfig,
    pub pilot: PilotParams,
    pub power_model: PowerModel,
    pub solver: SolverSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n_blocks: 1000,
            n_drops: 1,
            lambda_grid: vec![1e-4, 1e-3, 1e-2, 1e-1],
            gamma_grid: vec![1e-4, 1e-2],
            combiners: CombinerChoice::ALL.to_vec(),
            setups: vec![Setup::new("a", 40, 4), Setup::new("b", 160, 1)],
            workers: 0,
            csv_wall_time: false,
            network: NetworkConfig::default(),
            pilot: PilotParams::default(),
            power_model: PowerModel::default(),
            solver: SolverSettings::default(),
        }
    }
}

impl ExperimentConfig {
    /// Small preset for CI and laptops: K = 4, L = 10 / N = 2 and
    /// L = 20 / N = 1, 500 blocks, 3 drops.
    pub fn desk_scale() -> Self {
        let mut cfg = Self::default();
        cfg.apply_desk_scale();
        cfg.n_drops = 3;
        cfg
    }

    /// Shrinks the network, setups and block count to desk scale, keeping
    /// everything else.
    pub fn apply_desk_scale(&mut self) {
        let desk = NetworkConfig::desk_scale();
        self.network.num_aps = desk.num_aps;
        self.network.antennas_per_ap = desk.antennas_per_ap;
        self.network.num_ues = desk.num_ues;
        self.n_blocks = 500;
        self.setups = vec![
            Setup::new("a", desk.num_aps, desk.antennas_per_ap),
            Setup::new("b", 2 * desk.num_aps, 1),
        ];
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Network parameters of one setup.
    pub fn network_for(&self, setup: &Setup) -> NetworkConfig {
        NetworkConfig {
            num_aps: setup.num_aps,
            antennas_per_ap: setup.antennas_per_ap,
            ..self.network.clone()
        }
    }

    /// Keeps only the named setup.
    pub fn select_setup(&mut self, name: &str) -> Result<()> {
        self.setups.retain(|s| s.name == name);
        if self.setups.is_empty() {
            return Err(Error::Config(format!("no setup named {name:?}")));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda_grid.is_empty() || self.gamma_grid.is_empty() {
            return Err(Error::Config("lambda_grid and gamma_grid must be nonempty".into()));
        }
        if self.lambda_grid.iter().chain(&self.gamma_grid).any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Config("grid values must be finite and nonnegative".into()));
        }
        if self.n_drops == 0 {
            return Err(Error::Config("n_drops must be at least 1".into()));
        }
        if self.n_blocks == 0 {
            return Err(Error::Config("n_blocks must be at least 1".into()));
        }
        if self.combiners.is_empty() || self.setups.is_empty() {
            return Err(Error::Config("combiners and setups must be nonempty".into()));
        }
        for setup in &self.setups {
            self.network_for(setup).validate()?;
        }
        self.pilot.validate()?;
        self.power_model.validate()?;
        self.solver.options(0.0, 0.0).validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        ExperimentConfig::default().validate().unwrap();
        ExperimentConfig::desk_scale().validate().unwrap();
    }

    #[test]
    fn parses_dotted_sections() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
            seed = 7
            n_drops = 2
            lambda_grid = [0.001]
            combiners = ["lmmse"]
            setups = [{ name = "x", num_aps = 6, antennas_per_ap = 2 }]
            network.num_ues = 3
            power_model.p_lsfd = 0.5
            [pilot]
            tau_p = 3
            "#,
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.lambda_grid, vec![0.001]);
        assert_eq!(cfg.gamma_grid, ExperimentConfig::default().gamma_grid);
        assert_eq!(cfg.network.num_ues, 3);
        assert_eq!(cfg.power_model.p_lsfd, 0.5);
        assert_eq!(cfg.pilot.tau_p, 3);
        assert_eq!(cfg.network_for(&cfg.setups[0]).num_aps, 6);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::from_toml_str("unknown_key = 1").is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.lambda_grid.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.n_drops = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.select_setup("zzz").is_err());
    }
}
