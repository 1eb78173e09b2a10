use std::fmt::Write as _;
use std::path::Path;

use crate::harness::run::{CellRecord, RunReport};
use crate::Result;

pub const CSV_HEADER: &str = "setup,combiner,lambda,gamma,drop,avg_se_bps_hz,ee_bit_per_joule,\
mean_serving_aps,mean_served_ues,solver_sweeps,kkt_residual,wall_ms";

pub const BASELINE_HEADER: &str =
    "setup,combiner,method,drop,avg_se_bps_hz,ee_bit_per_joule,mean_serving_aps,mean_served_ues";

/// Nine significant digits.
fn num(x: f64) -> String {
    format!("{x:.8e}")
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// Drop-averaged rows, one per (setup, combiner, λ, γ) in report order. The
/// drop column reads `mean`, sweeps are averaged and the KKT residual is the
/// worst over drops.
pub fn sweep_summary(report: &RunReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    let mut i = 0;
    while i < report.cells.len() {
        let head = &report.cells[i];
        let mut j = i;
        while j < report.cells.len() && same_point(&report.cells[j], head) {
            j += 1;
        }
        let group = &report.cells[i..j];
        let wall = if report.csv_wall_time { mean(group.iter().map(|c| c.wall_ms)) } else { 0.0 };
        let kkt = group.iter().map(|c| c.kkt_residual).fold(f64::NEG_INFINITY, |a, b| {
            if a.is_nan() || b.is_nan() {
                f64::NAN
            } else {
                a.max(b)
            }
        });
        let _ = writeln!(
            out,
            "{},{},{},{},mean,{},{},{},{},{},{},{}",
            head.setup,
            head.combiner.label(),
            num(head.lambda),
            num(head.gamma),
            num(mean(group.iter().map(|c| c.eval.avg_se))),
            num(mean(group.iter().map(|c| c.eval.ee))),
            num(mean(group.iter().map(|c| c.eval.mean_serving_aps))),
            num(mean(group.iter().map(|c| c.eval.mean_served_ues))),
            num(mean(group.iter().map(|c| c.sweeps as f64))),
            num(kkt),
            num(wall),
        );
        i = j;
    }
    out
}

fn same_point(a: &CellRecord, b: &CellRecord) -> bool {
    a.setup == b.setup && a.combiner == b.combiner && a.lambda == b.lambda && a.gamma == b.gamma
}

/// One row per (setup, combiner, λ, γ, drop).
pub fn sweep_drops(report: &RunReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for c in &report.cells {
        let wall = if report.csv_wall_time { c.wall_ms } else { 0.0 };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            c.setup,
            c.combiner.label(),
            num(c.lambda),
            num(c.gamma),
            c.drop,
            num(c.eval.avg_se),
            num(c.eval.ee),
            num(c.eval.mean_serving_aps),
            num(c.eval.mean_served_ues),
            c.sweeps,
            num(c.kkt_residual),
            num(wall),
        );
    }
    out
}

pub fn baselines_csv(report: &RunReport) -> String {
    let mut out = String::from(BASELINE_HEADER);
    out.push('\n');
    for b in &report.baselines {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            b.setup,
            b.combiner.label(),
            b.method,
            b.drop,
            num(b.eval.avg_se),
            num(b.eval.ee),
            num(b.eval.mean_serving_aps),
            num(b.eval.mean_served_ues),
        );
    }
    out
}

pub fn diagnostics_json(report: &RunReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}

/// Writes `sweep_summary.csv`, `sweep_drops.csv`, `baselines.csv` and
/// `diagnostics.json` into `dir`.
pub fn write_outputs(report: &RunReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("sweep_summary.csv"), sweep_summary(report))?;
    std::fs::write(dir.join("sweep_drops.csv"), sweep_drops(report))?;
    std::fs::write(dir.join("baselines.csv"), baselines_csv(report))?;
    std::fs::write(dir.join("diagnostics.json"), diagnostics_json(report)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::run::{Evaluation, SCHEMA_VERSION};
    use crate::uplink::CombinerChoice;

    fn cell(lambda: f64, drop: usize, se: f64) -> CellRecord {
        CellRecord {
            setup: "a".into(),
            combiner: CombinerChoice::Lmmse,
            lambda,
            gamma: 0.01,
            drop,
            eval: Evaluation {
                avg_se: se,
                ue_se: vec![se],
                ee: 1e6,
                mean_serving_aps: 2.0,
                mean_served_ues: 1.0,
                total_power_w: 10.0,
            },
            sweeps: 3 + drop,
            kkt_residual: 1e-9 * (drop + 1) as f64,
            converged: true,
            objective: -1.0,
            wall_ms: 12.5,
            objective_trace: vec![-1.0],
            recomputed_powers: vec![0.1],
            error: None,
        }
    }

    fn report(cells: Vec<CellRecord>) -> RunReport {
        RunReport {
            schema: SCHEMA_VERSION,
            seed: 1,
            csv_wall_time: false,
            drops: Vec::new(),
            baselines: Vec::new(),
            cells,
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        assert_eq!(sweep_summary(&report(Vec::new())), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn averages_over_drops() {
        let r = report(vec![cell(1e-4, 0, 1.0), cell(1e-4, 1, 2.0), cell(1e-2, 0, 3.0), cell(1e-2, 1, 3.0)]);
        let csv = sweep_summary(&r);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(
            lines[1],
            "a,lmmse,1.00000000e-4,1.00000000e-2,mean,1.50000000e0,1.00000000e6,2.00000000e0,\
1.00000000e0,3.50000000e0,2.00000000e-9,0.00000000e0"
        );
        assert!(!csv.contains('\r'));
        assert_eq!(sweep_drops(&r).lines().count(), 5);
    }

    #[test]
    fn json_has_schema() {
        let json = diagnostics_json(&report(vec![cell(1e-4, 0, 1.0)])).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["cells"][0]["ue_se"][0], 1.0);
    }
}
