use cellfree_lsfd::linalg::min_eigenvalue;
use cellfree_lsfd::network::{generate_network, NetworkConfig};

fn main() -> cellfree_lsfd::Result<()> {
    let cfg = NetworkConfig::default();
    let net = generate_network(&cfg, 42)?;
    println!(
        "{} APs x {} antennas, {} UEs on a {} m torus",
        net.num_aps(),
        net.antennas(),
        net.num_ues(),
        cfg.side_m
    );

    // large-scale fading relative to noise, per UE
    for k in 0..net.num_ues().min(5) {
        let row = net.beta.row(k);
        let best = row.iter().copied().fold(0.0, f64::max);
        let strong = row.iter().filter(|&&b| b / cfg.noise_var > 1.0).count();
        println!(
            "UE {k}: best AP gain {:6.1} dB over noise, {strong} APs above 0 dB",
            10.0 * (best / cfg.noise_var).log10()
        );
    }

    // correlation matrices have trace N·β and are PSD
    let r = net.corr(0, 0);
    println!(
        "R_00: trace/N = {:.3e}, beta = {:.3e}, min eigenvalue = {:.3e}",
        r.trace().re / net.antennas() as f64,
        net.beta[(0, 0)],
        min_eigenvalue(r)
    );
    Ok(())
}
