//! O-LSFD against single-AP decoding and the heuristic P-LSFD association,
//! for both local combiners.

use cellfree_lsfd::harness::{prepare_drop, ExperimentConfig, Setup};
use cellfree_lsfd::lsfd::{heuristic_association, olsfd_weights, plsfd_weights, se, sinr};
use cellfree_lsfd::uplink::CombinerChoice;

fn main() -> cellfree_lsfd::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.network.num_ues = 16;
    let setup = Setup::new("demo", 16, 2);
    let drop = prepare_drop(&cfg, &setup, 0)?;
    let heuristic = heuristic_association(&drop.instance.beta, &drop.plan);
    let (tau_p, tau_c) = (cfg.pilot.tau_p, cfg.pilot.tau_c);

    for choice in CombinerChoice::ALL {
        let stats = drop.statistics(choice, 400)?;
        let mut totals = [0.0; 3];
        for k in 0..stats.num_ues() {
            let (a, b) = (&stats.a[k], &stats.b[k]);
            let master = heuristic.serving[k][0];
            let vectors = [
                olsfd_weights(a, b)?,
                plsfd_weights(a, b, &heuristic.serving[k])?,
                plsfd_weights(a, b, &[master])?,
            ];
            for (total, v) in totals.iter_mut().zip(&vectors) {
                *total += se(sinr(v, a, b)?, tau_p, tau_c);
            }
        }
        let n = stats.num_ues() as f64;
        println!(
            "{:>5}: average SE  O-LSFD {:.3}  P-LSFD {:.3}  master AP only {:.3} bit/s/Hz",
            choice.label(),
            totals[0] / n,
            totals[1] / n,
            totals[2] / n
        );
    }
    println!("P-LSFD serves {:.1} APs per UE on average", heuristic.mean_serving_aps());
    Ok(())
}
