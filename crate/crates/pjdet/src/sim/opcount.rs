//! Per-detector complexity accounting from measured multiply-accumulate
//! tallies.
//!
//! The projected-Jacobi step model is `N^2 + N` MACs per iteration (one
//! Gram matvec plus the diagonal scaling); residual-norm evaluation for
//! output selection is reported as a separate column rather than folded in.

use std::collections::BTreeMap;
use std::fmt;

use crate::sim::config::{DetectorKindTag, ExperimentConfig};
use crate::sim::sweep::SweepResult;

#[derive(Clone, Debug)]
pub struct OpcountRow {
    pub detector: String,
    pub n_users: usize,
    pub trials: u64,
    pub mean_init: f64,
    pub mean_step: f64,
    pub mean_residual: f64,
    pub mean_total: f64,
    pub mean_candidates: f64,
    /// Measured step MACs per iteration, for iterative detectors.
    pub step_per_iteration: Option<f64>,
    /// `N^2 + N` reference for the iterative step.
    pub model_step: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct OpcountReport {
    pub rows: Vec<OpcountRow>,
}

/// Aggregate measured op counts per (detector, load) across SNR points.
pub fn opcount_report(cfg: &ExperimentConfig, result: &SweepResult) -> OpcountReport {
    let iterations: BTreeMap<String, usize> = cfg
        .detectors
        .iter()
        .filter(|d| matches!(d.kind, DetectorKindTag::Pj | DetectorKindTag::Jacobi))
        .filter_map(|d| d.t.map(|t| (d.label(), t)))
        .collect();

    let mut grouped: BTreeMap<(String, usize), (u64, u64, u64, u64, u64)> = BTreeMap::new();
    for p in &result.points {
        let e = grouped
            .entry((p.detector.clone(), p.n_users))
            .or_insert((0, 0, 0, 0, 0));
        e.0 += p.trials;
        e.1 += p.op.init_macs;
        e.2 += p.op.step_macs;
        e.3 += p.op.residual_macs;
        e.4 += p.op.candidates;
    }

    let rows = grouped
        .into_iter()
        .map(|((detector, n_users), (trials, init, step, residual, candidates))| {
            let t = trials.max(1) as f64;
            let mean_step = step as f64 / t;
            let iters = iterations.get(&detector).copied();
            OpcountRow {
                detector,
                n_users,
                trials,
                mean_init: init as f64 / t,
                mean_step,
                mean_residual: residual as f64 / t,
                mean_total: (init + step + residual) as f64 / t,
                mean_candidates: candidates as f64 / t,
                step_per_iteration: iters.map(|k| mean_step / k as f64),
                model_step: iters.map(|_| (n_users * n_users + n_users) as u64),
            }
        })
        .collect();
    OpcountReport { rows }
}

impl fmt::Display for OpcountReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<12} {:>6} {:>8} {:>14} {:>14} {:>14} {:>14} {:>12} {:>12}",
            "detector",
            "N",
            "trials",
            "init/trial",
            "step/trial",
            "resid/trial",
            "total/trial",
            "step/iter",
            "model N^2+N"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<12} {:>6} {:>8} {:>14.1} {:>14.1} {:>14.1} {:>14.1} {:>12} {:>12}",
                r.detector,
                r.n_users,
                r.trials,
                r.mean_init,
                r.mean_step,
                r.mean_residual,
                r.mean_total,
                r.step_per_iteration
                    .map_or("-".to_string(), |v| format!("{v:.1}")),
                r.model_step.map_or("-".to_string(), |v| v.to_string()),
            )?;
            if r.mean_candidates > 0.0 {
                writeln!(
                    f,
                    "{:<12} {:>6} {:>8} candidates/trial: {:.1}",
                    "", r.n_users, "", r.mean_candidates
                )?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::sweep::run_sweep;

    #[test]
    fn pj_step_counts_match_the_square_order_model_exactly() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
schema_version = 1
seed = 3
snr_db = [10.0]

[channel]
model = "iid"
m = 16
n = 4

[modulation]
j = 4

[[detectors]]
kind = "pj"
t = 4
init = { kind = "rzf", rho = "zf", solver = { kind = "direct" } }

[[detectors]]
kind = "mld"

[trials]
min_trials = 8
max_trials = 8
min_errors = 1
"#,
        )
        .unwrap();
        let (result, _) = run_sweep(&cfg, None).unwrap();
        let report = opcount_report(&cfg, &result);
        let pj = report
            .rows
            .iter()
            .find(|r| r.detector == "pj-zf")
            .unwrap();
        let n = 4u64;
        assert_eq!(pj.step_per_iteration.unwrap(), (n * n + n) as f64);
        assert_eq!(pj.model_step.unwrap(), n * n + n);
        // Selection overhead: one extra matvec plus (T + 1) residual norms.
        assert_eq!(pj.mean_residual, (n * n + 5 * n) as f64);

        let mld = report.rows.iter().find(|r| r.detector == "mld").unwrap();
        assert_eq!(mld.mean_candidates, 256.0);
        let text = format!("{report}");
        assert!(text.contains("pj-zf"));
        assert!(text.contains("model N^2+N"));
    }
}
