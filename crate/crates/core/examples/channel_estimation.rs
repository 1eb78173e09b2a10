use cellfree_lsfd::network::{generate_network, NetworkConfig};
use cellfree_lsfd::pilots::{assign_pilots, estimation_stats, ChannelSampler, PilotParams};
use cellfree_lsfd::{CMatrix, C64};

fn main() -> cellfree_lsfd::Result<()> {
    let mut cfg = NetworkConfig::desk_scale();
    cfg.num_ues = 12;
    let net = generate_network(&cfg, 3)?;
    let params = PilotParams::default();
    let plan = assign_pilots(&net.beta, params)?;
    println!("pilot of each UE: {:?}", plan.pilot_of);
    for (t, set) in plan.copilot_sets.iter().enumerate().filter(|(_, s)| s.len() > 1) {
        println!("pilot {t} shared by UEs {set:?}");
    }

    let stats = estimation_stats(&net, &plan)?;
    let (k, l) = (0, 0);
    let b = stats.b(k, l);
    let c = stats.c(k, l);
    println!(
        "UE {k} at AP {l}: tr(B)/tr(R) = {:.3} (estimation quality), tr(C) = {:.3e}",
        b.trace().re / net.corr(k, l).trace().re,
        c.trace().re
    );

    // sample covariance of the estimates approaches B
    let sampler = ChannelSampler::new(&net, &plan, &stats);
    let blocks = 20_000;
    let mut acc = CMatrix::zeros(b.nrows(), b.ncols());
    for block in 0..blocks {
        let r = sampler.draw(11, block);
        let h = r.h_hat(k, l, net.num_aps());
        acc += h * h.adjoint();
    }
    acc /= C64::new(blocks as f64, 0.0);
    println!("relative error of sample E[ĥĥᴴ]: {:.2}%", 100.0 * (&acc - b).norm() / b.norm());
    Ok(())
}
