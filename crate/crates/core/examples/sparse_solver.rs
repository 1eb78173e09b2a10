//! Solves the sparse LSFD problem on one desk-scale drop along a λ path and
//! cross-checks each solution against the full-vector reference solver.

use cellfree_lsfd::harness::{prepare_drop, ExperimentConfig};
use cellfree_lsfd::power_energy::extract_association;
use cellfree_lsfd::sglasso::{bcd_solve, build_problem, reference_solve, SolverOptions};
use cellfree_lsfd::uplink::CombinerChoice;

fn main() -> cellfree_lsfd::Result<()> {
    let cfg = ExperimentConfig::desk_scale();
    let drop = prepare_drop(&cfg, &cfg.setups[0], 0)?;
    let stats = drop.statistics(CombinerChoice::Lmmse, cfg.n_blocks)?;
    let problem = build_problem(&stats)?;
    println!("zero-point lambda (gamma = 0): {:.4e}", problem.zero_point_lambda());

    let gamma = 1e-3;
    println!("{:>8} {:>12} {:>7} {:>10} {:>11} {:>6}", "lambda", "objective", "sweeps", "kkt", "ref gap", "links");
    for lambda in [0.0, 1e-4, 1e-3, 1e-2, 3e-2, 1e-1] {
        let opts = SolverOptions::new(gamma, lambda);
        let bcd = bcd_solve(&problem, &opts)?;
        let reference = reference_solve(&problem, gamma, lambda, 1e-8)?;
        let assoc = extract_association(&problem.split(&bcd.a), problem.num_aps());
        println!(
            "{lambda:>8.0e} {:>12.6e} {:>7} {:>10.2e} {:>11.2e} {:>6}",
            bcd.objective,
            bcd.sweeps,
            bcd.kkt_residual,
            (bcd.objective - reference.objective) / reference.objective.abs(),
            assoc.links()
        );
    }
    Ok(())
}
