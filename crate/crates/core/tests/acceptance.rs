//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; exits nonzero if any fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use cellfree_lsfd::harness::{run_experiment, sweep_drops, sweep_summary, ExperimentConfig};
use cellfree_lsfd::linalg::{inner, HermitianFactor};
use cellfree_lsfd::lsfd::{mse, olsfd_weights, sinr};
use cellfree_lsfd::network::{NetworkConfig, NetworkInstance, Point};
use cellfree_lsfd::pilots::{assign_pilots, estimation_stats, PilotParams};
use cellfree_lsfd::power_energy::{energy_efficiency, total_power, Association, PowerModel};
use cellfree_lsfd::sglasso::{
    bcd_solve, prox_composite, prox_l1, prox_l2, reference_solve, SolverOptions, SparseProblem,
};
use cellfree_lsfd::uplink::{estimate_lsfd_statistics, CombinerChoice};
use cellfree_lsfd::{CMatrix, C64};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{random_pd, random_problem, random_vector, rel_gap, simulated};

const GAP_TOL: f64 = 1e-4;
const UNPENALIZED_TOL: f64 = 1e-4;
const IDENTITY_TOL: f64 = 1e-10;
const PROX_TOL: f64 = 1e-12;
const KKT_TOL: f64 = 1e-4;
const STAT_TOL: f64 = 0.02;
const SCALAR_TOL: f64 = 1e-12;
const EE_TOL: f64 = 1e-9;
const PAIRS: [(f64, f64); 4] = [(1e-4, 1e-4), (1e-4, 1e-2), (1e-2, 1e-4), (1e-2, 1e-2)];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// The 50 simulated problems plus the one network instance of criteria 1/5.
fn oracle_problems() -> Vec<SparseProblem> {
    let mut problems: Vec<SparseProblem> = (0..50).map(|i| simulated(1000 + i, 200).2).collect();
    problems.push(simulated(7, 500).2);
    problems
}

fn criterion_1_and_5(problems: &[SparseProblem]) -> (Outcome, Outcome) {
    let mut worst_gap = f64::NEG_INFINITY;
    let mut worst_abs_gap = 0.0_f64;
    let mut worst_kkt_ratio = 0.0_f64;
    let mut unconverged = 0;
    for problem in problems {
        let scale = 1.0 + problem.stacked_target().norm();
        for &(lambda, gamma) in &PAIRS {
            let bcd = bcd_solve(problem, &SolverOptions::new(gamma, lambda)).expect("bcd");
            let reference = reference_solve(problem, gamma, lambda, 1e-8).expect("reference");
            if !bcd.converged || !reference.converged {
                unconverged += 1;
            }
            let gap = rel_gap(bcd.objective, reference.objective);
            worst_gap = worst_gap.max(gap);
            worst_abs_gap = worst_abs_gap.max(gap.abs());
            worst_kkt_ratio = worst_kkt_ratio.max(bcd.kkt_residual / scale);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut zero_ok = 0;
    for _ in 0..20 {
        let problem = random_problem(&mut rng, 4, 10);
        let above = problem.zero_point_lambda() * 1.001;
        let below = problem.zero_point_lambda() * 0.9;
        let zero = bcd_solve(&problem, &SolverOptions::new(0.0, above)).expect("bcd");
        let nonzero = bcd_solve(&problem, &SolverOptions::new(0.0, below)).expect("bcd");
        if zero.a.iter().all(|z| *z == C64::new(0.0, 0.0)) && nonzero.a.iter().any(|z| z.norm() > 0.0) {
            zero_ok += 1;
        }
    }

    let c1 = outcome(
        worst_gap <= GAP_TOL,
        format!(
            "{} problems x {} pairs: max gap {worst_gap:.3e} (max |gap| {worst_abs_gap:.3e}), {unconverged} unconverged runs",
            problems.len(),
            PAIRS.len()
        ),
    );
    let c5 = outcome(
        worst_kkt_ratio <= KKT_TOL && zero_ok == 20,
        format!("max kkt/(1+|b|) {worst_kkt_ratio:.3e}; zero-point test {zero_ok}/20"),
    );
    (c1, c5)
}

fn criterion_2() -> Outcome {
    let (_, stats, problem) = simulated(7, 500);
    let result = bcd_solve(&problem, &SolverOptions::new(0.0, 0.0)).expect("bcd");
    let vectors = problem.split(&result.a);
    let mut worst = 0.0_f64;
    for (k, v) in vectors.iter().enumerate() {
        let (a, b) = (&stats.a[k], &stats.b[k]);
        let closed = {
            let reduced = a - b * b.adjoint();
            inner(b, &HermitianFactor::new(&reduced).expect("PD").solve(b)).re
        };
        let s = sinr(&v.a, a, b).expect("sinr");
        worst = worst.max(((s - closed) / closed).abs());
    }
    outcome(worst <= UNPENALIZED_TOL, format!("max relative SINR deviation {worst:.3e}"))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let (mut colinear, mut minimum) = (0.0_f64, 0.0_f64);
    for _ in 0..100 {
        let m = random_pd(&mut rng, 8, 0.1);
        let b = random_vector(&mut rng, 8, 0.3);
        let a = &m + &b * b.adjoint();
        let factor = HermitianFactor::new(&a).expect("PD");
        let ainv_b = factor.solve(&b);
        let q = inner(&b, &ainv_b).re;
        let olsfd = olsfd_weights(&a, &b).expect("PD");
        let predicted = &ainv_b / C64::new(1.0 - q, 0.0);
        colinear = colinear.max((&olsfd - &predicted).norm() / olsfd.norm());

        let p = 0.1 + q;
        let closed = p - q;
        let attained = mse(&ainv_b, &a, &b, p);
        minimum = minimum.max(((attained - closed) / closed).abs());
    }
    outcome(
        colinear <= IDENTITY_TOL && minimum <= IDENTITY_TOL,
        format!("colinearity {colinear:.3e}, MSE minimum {minimum:.3e}"),
    )
}

fn criterion_4() -> Outcome {
    let v = |xs: &[f64]| DVector::from_column_slice(xs);
    let close = |a: &DVector<f64>, b: &DVector<f64>| (a - b).amax() <= PROX_TOL;
    let s = 13f64.sqrt();
    let g = v(&[3.0, -4.0, 0.2]);
    let checks = [
        close(&prox_l1(&v(&[3.0, -1.0, 0.5]), 1.0), &v(&[2.0, 0.0, 0.0])),
        close(&prox_l1(&g, 0.0), &g),
        close(&prox_l1(&v(&[0.3, -2.0, 7.0]), 7.0), &v(&[0.0, 0.0, 0.0])),
        close(&prox_l2(&v(&[0.0, 0.0, 0.0]), 0.5), &v(&[0.0, 0.0, 0.0])),
        close(&prox_l2(&v(&[3.0, 4.0]), 1.0), &v(&[2.4, 3.2])),
        close(&prox_l2(&v(&[3.0, 4.0]), 5.0), &v(&[0.0, 0.0])),
        close(&prox_composite(&g, 0.7, 1.3, 0.0), &prox_l2(&g, 0.91)),
        close(&prox_composite(&g, 0.7, 0.0, 1.3), &prox_l1(&g, 0.91)),
        close(
            &prox_composite(&v(&[3.0, 4.0]), 1.0, 1.0, 1.0),
            &v(&[2.0 * (s - 1.0) / s, 3.0 * (s - 1.0) / s]),
        ),
    ];
    let passed = checks.iter().filter(|c| **c).count();
    outcome(passed == checks.len(), format!("{passed}/{} prox examples", checks.len()))
}

fn criterion_6() -> Outcome {
    let betas = [2e-10, 3e-11, 5e-12];
    let noise = 4e-13;
    let config = NetworkConfig {
        num_aps: betas.len(),
        antennas_per_ap: 1,
        num_ues: 1,
        noise_var: noise,
        ..NetworkConfig::default()
    };
    let instance = NetworkInstance {
        config,
        ap_pos: vec![Point::new(0.0, 0.0); betas.len()],
        ue_pos: vec![Point::new(0.0, 0.0)],
        beta: DMatrix::from_row_slice(1, betas.len(), &betas),
        corr: betas.iter().map(|&b| CMatrix::from_element(1, 1, C64::new(b, 0.0))).collect(),
    };
    let params = PilotParams::default();
    let plan = assign_pilots(&instance.beta, params).expect("pilots");
    let est = estimation_stats(&instance, &plan).expect("estimation");
    let tr = params.tau_p as f64 * params.rho_p;
    let mut scalar_err = 0.0_f64;
    for (l, &beta) in betas.iter().enumerate() {
        let closed = tr * beta * beta / (tr * beta + noise);
        scalar_err = scalar_err.max(((est.b(0, l)[(0, 0)].re - closed) / closed).abs());
    }
    let p = 0.1;
    let stats = estimate_lsfd_statistics(&instance, &plan, &est, CombinerChoice::Mr, &[p], 100_000, 21)
        .expect("statistics");
    let mut mc_err = 0.0_f64;
    for l in 0..betas.len() {
        let expected = p.sqrt() * est.b(0, l).trace().re;
        mc_err = mc_err.max(((stats.b[0][l].re - expected) / expected).abs());
    }
    outcome(
        mc_err <= STAT_TOL && scalar_err <= SCALAR_TOL,
        format!("MR b error {:.3}% at 1e5 blocks; scalar B error {scalar_err:.3e}", mc_err * 100.0),
    )
}

fn criterion_7() -> Outcome {
    let mut cfg = common::desk_config();
    cfg.setups.truncate(1);
    cfg.n_drops = 3;
    let report = run_experiment(&cfg).expect("run");
    let failures = report.cells.iter().filter(|c| c.error.is_some()).count();

    let olsfd: Vec<_> = report.baselines.iter().filter(|b| b.method == "olsfd").collect();
    let mut se_ok = true;
    for cell in &report.cells {
        let base = olsfd.iter().find(|b| b.drop == cell.drop).expect("baseline");
        se_ok &= cell.eval.ue_se.iter().zip(&base.eval.ue_se).all(|(s, o)| *s <= o + 1e-9);
    }

    let avg = |lambda: f64, f: &dyn Fn(&cellfree_lsfd::harness::run::CellRecord) -> f64| {
        cfg.gamma_grid
            .iter()
            .map(|&g| {
                let xs: Vec<f64> =
                    report.cells.iter().filter(|c| c.lambda == lambda && c.gamma == g).map(f).collect();
                xs.iter().sum::<f64>() / xs.len() as f64
            })
            .collect::<Vec<f64>>()
    };
    let se_hi = avg(1e-1, &|c| c.eval.avg_se);
    let se_lo = avg(1e-4, &|c| c.eval.avg_se);
    let m_hi = avg(1e-1, &|c| c.eval.mean_serving_aps);
    let m_lo = avg(1e-4, &|c| c.eval.mean_serving_aps);
    let se_order = se_hi.iter().zip(&se_lo).all(|(h, l)| h <= l);
    let m_order = m_hi.iter().zip(&m_lo).all(|(h, l)| h <= l);

    let mut ee_ok = 0;
    let mut ee_detail = Vec::new();
    for drop in 0..cfg.n_drops {
        let sparsest = report
            .cells
            .iter()
            .filter(|c| c.drop == drop)
            .min_by(|a, b| a.eval.mean_serving_aps.total_cmp(&b.eval.mean_serving_aps))
            .expect("cells");
        let base = olsfd.iter().find(|b| b.drop == drop).expect("baseline");
        if sparsest.eval.ee >= base.eval.ee {
            ee_ok += 1;
        }
        ee_detail.push(format!("{:.3e}/{:.3e}", sparsest.eval.ee, base.eval.ee));
    }
    outcome(
        failures == 0 && se_ok && se_order && m_order && ee_ok == cfg.n_drops,
        format!(
            "(a) {} (b) SE {:.3?} <= {:.3?} (c) |M| {:.2?} <= {:.2?} (d) EE sparsest/O-LSFD per drop [{}]",
            if se_ok { "ok" } else { "violated" },
            se_hi,
            se_lo,
            m_hi,
            m_lo,
            ee_detail.join(", ")
        ),
    )
}

fn criterion_8() -> Outcome {
    const STATED_POWER_W: f64 = 7.204;
    const STATED_EE: f64 = 2.637e6;
    let model = PowerModel::default();
    let assoc = Association::from_serving(vec![vec![0]], 1);
    let ses = [0.95];
    let power = total_power(&assoc, &[0.1], &ses, &model, 1);
    let ee = energy_efficiency(&ses, power, model.bandwidth_hz).expect("power");
    let prelog = PilotParams::default().prelog();
    let power_ok = ((power - STATED_POWER_W) / STATED_POWER_W).abs() <= EE_TOL;
    // the stated EE is given to 4 digits
    let ee_ok = ((ee - STATED_EE) / STATED_EE).abs() <= 5e-4;
    outcome(
        power_ok && ee_ok && prelog == 0.95,
        format!(
            "total {power:.6} W vs stated {STATED_POWER_W} W, EE {ee:.4e} vs stated {STATED_EE:.4e}, prelog {prelog}"
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut cfg = ExperimentConfig::desk_scale();
    cfg.workers = 1;
    let one = run_experiment(&cfg).expect("run");
    cfg.workers = 4;
    let four = run_experiment(&cfg).expect("run");
    let same = sweep_summary(&one) == sweep_summary(&four) && sweep_drops(&one) == sweep_drops(&four);
    outcome(same, format!("{} rows, 1 vs 4 workers", one.cells.len()))
}

fn main() -> ExitCode {
    let mut all = true;
    let mut report = |n: u32, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        all &= o.pass;
        println!(
            "criterion {n}: {} ({:.1} s) {}",
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
    };
    let start = Instant::now();
    let problems = oracle_problems();
    let (c1, c5) = criterion_1_and_5(&problems);
    let shared = start.elapsed().as_secs_f64();
    let mut c1 = Some(c1);
    let mut c5 = Some(c5);
    report(1, &mut || c1.take().expect("once"));
    report(2, &mut criterion_2);
    report(3, &mut criterion_3);
    report(4, &mut criterion_4);
    report(5, &mut || c5.take().expect("once"));
    report(6, &mut criterion_6);
    report(7, &mut criterion_7);
    report(8, &mut criterion_8);
    report(9, &mut criterion_9);
    println!("criteria 1 and 5 share {shared:.1} s of solves");
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
