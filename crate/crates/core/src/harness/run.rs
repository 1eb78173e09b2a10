use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::harness::config::{ExperimentConfig, Setup};
use crate::linalg::CVector;
use crate::lsfd::{heuristic_association, olsfd_weights, plsfd_weights, sinr, se, LsfdVector};
use crate::network::{generate_network, NetworkInstance};
use crate::pilots::{assign_pilots, estimation_stats, EstimationStats, PilotPlan};
use crate::power_energy::{energy_efficiency, extract_association, fractional_power, total_power, Association};
use crate::sglasso::{bcd_solve, build_problem, SparseProblem};
use crate::uplink::{estimate_lsfd_statistics, CombinerChoice, LsfdStatistics};
use crate::{Error, Result};

/// Version of the JSON diagnostics layout.
pub const SCHEMA_VERSION: u32 = 1;

/// One network realization with its pilots and powers.
#[derive(Debug)]
pub struct NetworkDrop {
    pub instance: NetworkInstance,
    pub plan: PilotPlan,
    pub estimation: EstimationStats,
    /// Fractional powers computed with every AP serving every UE.
    pub powers: Vec<f64>,
    pub seed: u64,
}

/// Builds drop `drop` of `setup`, seeded with `cfg.seed + drop`.
pub fn prepare_drop(cfg: &ExperimentConfig, setup: &Setup, drop: usize) -> Result<NetworkDrop> {
    let seed = cfg.seed.wrapping_add(drop as u64);
    let instance = generate_network(&cfg.network_for(setup), seed)?;
    let plan = assign_pilots(&instance.beta, cfg.pilot)?;
    let estimation = estimation_stats(&instance, &plan)?;
    let full = Association::full(instance.num_ues(), instance.num_aps());
    let pm = &cfg.power_model;
    let powers = fractional_power(&instance.beta, &full.serving, pm.theta, pm.p_max)?;
    Ok(NetworkDrop { instance, plan, estimation, powers, seed })
}

impl NetworkDrop {
    pub fn statistics(&self, choice: CombinerChoice, n_blocks: u64) -> Result<LsfdStatistics> {
        estimate_lsfd_statistics(
            &self.instance,
            &self.plan,
            &self.estimation,
            choice,
            &self.powers,
            n_blocks,
            self.seed,
        )
    }
}

/// Metrics shared by sparse solutions and baselines.
#[derive(Debug, Clone, Serialize)]
pub struct Evaluation {
    pub avg_se: f64,
    pub ue_se: Vec<f64>,
    pub ee: f64,
    pub mean_serving_aps: f64,
    pub mean_served_ues: f64,
    pub total_power_w: f64,
}

impl Evaluation {
    fn failed() -> Self {
        Self {
            avg_se: f64::NAN,
            ue_se: Vec::new(),
            ee: f64::NAN,
            mean_serving_aps: f64::NAN,
            mean_served_ues: f64::NAN,
            total_power_w: f64::NAN,
        }
    }
}

/// SE and EE of a set of LSFD vectors. UEs with an all-zero vector are
/// unserved and get SE 0.
pub fn evaluate(
    vectors: &[LsfdVector],
    stats: &LsfdStatistics,
    drop: &NetworkDrop,
    cfg: &ExperimentConfig,
) -> Result<Evaluation> {
    let params = drop.plan.params;
    let ue_se = vectors
        .iter()
        .map(|v| {
            if v.support().is_empty() {
                return Ok(0.0);
            }
            let k = v.owner;
            Ok(se(sinr(&v.a, &stats.a[k], &stats.b[k])?, params.tau_p, params.tau_c))
        })
        .collect::<Result<Vec<f64>>>()?;
    let assoc = extract_association(vectors, drop.instance.num_aps());
    let power = total_power(&assoc, &drop.powers, &ue_se, &cfg.power_model, drop.instance.antennas());
    let ee = energy_efficiency(&ue_se, power, cfg.power_model.bandwidth_hz)?;
    Ok(Evaluation {
        avg_se: ue_se.iter().sum::<f64>() / ue_se.len().max(1) as f64,
        ue_se,
        ee,
        mean_serving_aps: assoc.mean_serving_aps(),
        mean_served_ues: assoc.mean_served_ues(),
        total_power_w: power,
    })
}

/// Fractional powers recomputed on the sparse association; unserved UEs get
/// 0. Reported only; SE and EE use the optimization powers.
pub fn recomputed_powers(drop: &NetworkDrop, assoc: &Association, cfg: &ExperimentConfig) -> Vec<f64> {
    let served: Vec<usize> = (0..assoc.num_ues()).filter(|&k| !assoc.serving[k].is_empty()).collect();
    if served.is_empty() {
        return vec![0.0; assoc.num_ues()];
    }
    let sets: Vec<Vec<usize>> = served.iter().map(|&k| assoc.serving[k].clone()).collect();
    let beta = drop.instance.beta.select_rows(&served);
    let pm = &cfg.power_model;
    let mut out = vec![0.0; assoc.num_ues()];
    if let Ok(p) = fractional_power(&beta, &sets, pm.theta, pm.p_max) {
        for (i, &k) in served.iter().enumerate() {
            out[k] = p[i];
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct CellRecord {
    pub setup: String,
    pub combiner: CombinerChoice,
    pub lambda: f64,
    pub gamma: f64,
    pub drop: usize,
    #[serde(flatten)]
    pub eval: Evaluation,
    pub sweeps: usize,
    pub kkt_residual: f64,
    pub converged: bool,
    pub objective: f64,
    pub wall_ms: f64,
    pub objective_trace: Vec<f64>,
    pub recomputed_powers: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BaselineRecord {
    pub setup: String,
    pub combiner: CombinerChoice,
    pub method: String,
    pub drop: usize,
    #[serde(flatten)]
    pub eval: Evaluation,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DropRecord {
    pub setup: String,
    pub drop: usize,
    pub seed: u64,
    pub powers: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema: u32,
    pub seed: u64,
    pub csv_wall_time: bool,
    pub drops: Vec<DropRecord>,
    pub baselines: Vec<BaselineRecord>,
    /// Ordered by setup, combiner, λ, γ, drop.
    pub cells: Vec<CellRecord>,
}

impl RunReport {
    /// True if any grid point failed to solve.
    pub fn has_solver_failure(&self) -> bool {
        self.cells.iter().any(|c| c.error.is_some())
    }
}

fn solve_cell(
    problem: &SparseProblem,
    stats: &LsfdStatistics,
    drop: &NetworkDrop,
    cfg: &ExperimentConfig,
    (lambda, gamma): (f64, f64),
) -> Result<(Evaluation, crate::sglasso::SolverResult, Vec<f64>, f64)> {
    let start = Instant::now();
    let result = bcd_solve(problem, &cfg.solver.options(gamma, lambda))?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let vectors = problem.split(&result.a);
    let eval = evaluate(&vectors, stats, drop, cfg)?;
    let assoc = extract_association(&vectors, drop.instance.num_aps());
    let powers = recomputed_powers(drop, &assoc, cfg);
    Ok((eval, result, powers, wall_ms))
}

fn baselines(stats: &LsfdStatistics, drop: &NetworkDrop, cfg: &ExperimentConfig) -> Vec<(String, Result<Evaluation>)> {
    let olsfd = (0..stats.num_ues())
        .map(|k| Ok(LsfdVector::new(k, olsfd_weights(&stats.a[k], &stats.b[k])?)))
        .collect::<Result<Vec<_>>>();
    let heuristic = heuristic_association(&drop.instance.beta, &drop.plan);
    let plsfd = (0..stats.num_ues())
        .map(|k| Ok(LsfdVector::new(k, plsfd_weights(&stats.a[k], &stats.b[k], &heuristic.serving[k])?)))
        .collect::<Result<Vec<_>>>();
    vec![
        ("olsfd".to_string(), olsfd.and_then(|v| evaluate(&v, stats, drop, cfg))),
        ("plsfd".to_string(), plsfd.and_then(|v| evaluate(&v, stats, drop, cfg))),
    ]
}

struct DropOutput {
    record: DropRecord,
    baselines: Vec<BaselineRecord>,
    /// Indexed by combiner, then grid point in (λ, γ) order.
    cells: Vec<Vec<CellRecord>>,
}

fn run_drop(cfg: &ExperimentConfig, setup: &Setup, drop_index: usize) -> DropOutput {
    let grid: Vec<(f64, f64)> = cfg
        .lambda_grid
        .iter()
        .flat_map(|&l| cfg.gamma_grid.iter().map(move |&g| (l, g)))
        .collect();
    let failed_cell = |combiner, (lambda, gamma): (f64, f64), err: &Error| CellRecord {
        setup: setup.name.clone(),
        combiner,
        lambda,
        gamma,
        drop: drop_index,
        eval: Evaluation::failed(),
        sweeps: 0,
        kkt_residual: f64::NAN,
        converged: false,
        objective: f64::NAN,
        wall_ms: 0.0,
        objective_trace: Vec::new(),
        recomputed_powers: Vec::new(),
        error: Some(err.to_string()),
    };

    let drop = match prepare_drop(cfg, setup, drop_index) {
        Ok(d) => d,
        Err(err) => {
            return DropOutput {
                record: DropRecord {
                    setup: setup.name.clone(),
                    drop: drop_index,
                    seed: cfg.seed.wrapping_add(drop_index as u64),
                    powers: Vec::new(),
                    error: Some(err.to_string()),
                },
                baselines: Vec::new(),
                cells: cfg
                    .combiners
                    .iter()
                    .map(|&c| grid.iter().map(|&p| failed_cell(c, p, &err)).collect())
                    .collect(),
            }
        }
    };

    let mut baseline_records = Vec::new();
    let mut cells = Vec::new();
    for &combiner in &cfg.combiners {
        let prepared = drop
            .statistics(combiner, cfg.n_blocks)
            .and_then(|stats| build_problem(&stats).map(|p| (stats, p)));
        let (stats, problem) = match prepared {
            Ok(v) => v,
            Err(err) => {
                cells.push(grid.iter().map(|&p| failed_cell(combiner, p, &err)).collect());
                continue;
            }
        };
        for (method, eval) in baselines(&stats, &drop, cfg) {
            let (eval, error) = match eval {
                Ok(e) => (e, None),
                Err(err) => (Evaluation::failed(), Some(err.to_string())),
            };
            baseline_records.push(BaselineRecord {
                setup: setup.name.clone(),
                combiner,
                method,
                drop: drop_index,
                eval,
                error,
            });
        }
        let row = grid
            .par_iter()
            .map(|&point| match solve_cell(&problem, &stats, &drop, cfg, point) {
                Ok((eval, result, powers, wall_ms)) => CellRecord {
                    setup: setup.name.clone(),
                    combiner,
                    lambda: point.0,
                    gamma: point.1,
                    drop: drop_index,
                    eval,
                    sweeps: result.sweeps,
                    kkt_residual: result.kkt_residual,
                    converged: result.converged,
                    objective: result.objective,
                    wall_ms,
                    objective_trace: result.objective_trace,
                    recomputed_powers: powers,
                    error: None,
                },
                Err(err) => failed_cell(combiner, point, &err),
            })
            .collect();
        cells.push(row);
    }
    DropOutput {
        record: DropRecord {
            setup: setup.name.clone(),
            drop: drop_index,
            seed: drop.seed,
            powers: drop.powers.clone(),
            error: None,
        },
        baselines: baseline_records,
        cells,
    }
}

/// Runs every setup, drop, combiner and grid point. Drops and grid points
/// run concurrently on `cfg.workers` threads; the report is assembled in a
/// fixed order afterwards. Per-cell failures are recorded, not raised.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let jobs: Vec<(usize, usize)> = (0..cfg.setups.len())
        .flat_map(|s| (0..cfg.n_drops).map(move |d| (s, d)))
        .collect();
    let outputs: Vec<DropOutput> =
        pool.install(|| jobs.par_iter().map(|&(s, d)| run_drop(cfg, &cfg.setups[s], d)).collect());

    let mut report = RunReport {
        schema: SCHEMA_VERSION,
        seed: cfg.seed,
        csv_wall_time: cfg.csv_wall_time,
        drops: Vec::new(),
        baselines: Vec::new(),
        cells: Vec::new(),
    };
    let n_grid = cfg.lambda_grid.len() * cfg.gamma_grid.len();
    for s in 0..cfg.setups.len() {
        let per_setup = &outputs[s * cfg.n_drops..(s + 1) * cfg.n_drops];
        for out in per_setup {
            report.drops.push(out.record.clone());
            report.baselines.extend(out.baselines.iter().cloned());
        }
        for c in 0..cfg.combiners.len() {
            for g in 0..n_grid {
                for out in per_setup {
                    report.cells.push(out.cells[c][g].clone());
                }
            }
        }
    }
    Ok(report)
}

/// Per-UE O-LSFD SE of a statistics set, for comparisons.
pub fn olsfd_se(stats: &LsfdStatistics, plan: &PilotPlan) -> Result<Vec<f64>> {
    (0..stats.num_ues())
        .map(|k| {
            let w: CVector = olsfd_weights(&stats.a[k], &stats.b[k])?;
            Ok(se(sinr(&w, &stats.a[k], &stats.b[k])?, plan.params.tau_p, plan.params.tau_c))
        })
        .collect()
}
