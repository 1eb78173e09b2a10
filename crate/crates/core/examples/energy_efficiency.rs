use cellfree_lsfd::harness::run::evaluate;
use cellfree_lsfd::harness::{prepare_drop, ExperimentConfig};
use cellfree_lsfd::lsfd::{olsfd_weights, LsfdVector};
use cellfree_lsfd::power_energy::{energy_efficiency, total_power, Association, PowerModel};
use cellfree_lsfd::sglasso::{bcd_solve, build_problem};
use cellfree_lsfd::uplink::CombinerChoice;

fn main() -> cellfree_lsfd::Result<()> {
    // single link by hand
    let model = PowerModel::default();
    let link = Association::from_serving(vec![vec![0]], 1);
    let watts = total_power(&link, &[0.1], &[0.95], &model, 1);
    println!(
        "one UE, one AP: {watts:.3} W, {:.4e} bit/J",
        energy_efficiency(&[0.95], watts, model.bandwidth_hz)?
    );

    // dense O-LSFD against sparse solutions on a desk-scale drop
    let cfg = ExperimentConfig::desk_scale();
    let drop = prepare_drop(&cfg, &cfg.setups[0], 1)?;
    let stats = drop.statistics(CombinerChoice::Lmmse, cfg.n_blocks)?;
    let dense = (0..stats.num_ues())
        .map(|k| Ok(LsfdVector::new(k, olsfd_weights(&stats.a[k], &stats.b[k])?)))
        .collect::<cellfree_lsfd::Result<Vec<_>>>()?;
    let base = evaluate(&dense, &stats, &drop, &cfg)?;
    println!(
        "O-LSFD      SE {:.3}  power {:7.3} W  EE {:.4e} bit/J",
        base.avg_se, base.total_power_w, base.ee
    );

    let problem = build_problem(&stats)?;
    for lambda in [1e-4, 1e-3, 1e-2, 3e-2] {
        let result = bcd_solve(&problem, &cfg.solver.options(1e-2, lambda))?;
        let eval = evaluate(&problem.split(&result.a), &stats, &drop, &cfg)?;
        println!(
            "λ = {lambda:<6.0e} SE {:.3}  power {:7.3} W  EE {:.4e} bit/J  |M| {:.2}",
            eval.avg_se, eval.total_power_w, eval.ee, eval.mean_serving_aps
        );
    }
    Ok(())
}
