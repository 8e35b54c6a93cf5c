//! Deterministic parallel Monte Carlo sweep engine.
//!
//! Every (point, trial) pair owns an RNG stream derived from the master seed
//! and the point index, so merged counts are bit-identical no matter how many
//! workers run or how the scheduler interleaves them. Within one trial all
//! configured detectors see the same `(H, x, v)` — comparisons are paired.
//! Adaptive stopping proceeds in fixed trial blocks: a point stops once every
//! detector has accumulated `min_errors` (and `min_trials` ran), or at
//! `max_trials`, whichever comes first. Detectors still short of
//! `min_errors` at that cap are flagged low-confidence, never dropped.

use rayon::prelude::*;

use crate::channel::{self, ChannelConfig};
use crate::detectors::{
    detect_jacobi, detect_mf, detect_mfb, detect_mld, detect_pj, detect_rzf, DetectorConfig,
    DetectorKind, OpCount, System,
};
use crate::modem::{self, Constellation};
use crate::numerics::{self, mix_seed, SeededRng};
use crate::sim::config::ExperimentConfig;
use crate::{Error, Result};

/// Accumulated statistics for one (detector, SNR, load) point.
#[derive(Clone, Debug)]
pub struct PointResult {
    pub detector: String,
    pub snr_db: f64,
    pub n_users: usize,
    pub m_antennas: usize,
    pub trials: u64,
    pub symbol_errors: u64,
    pub per_stream_errors: Vec<u64>,
    /// Op counts summed over all trials.
    pub op: OpCount,
    /// Set when the point hit `max_trials` before reaching `min_errors`.
    pub low_confidence: bool,
    pub wall_secs: f64,
}

impl PointResult {
    /// Symbol error rate: errors over decided symbols.
    pub fn ser(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        self.symbol_errors as f64 / (self.trials as f64 * self.n_users as f64)
    }

    /// Half-width of the binomial 95% confidence interval on the SER.
    pub fn ci95_half_width(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        let n = self.trials as f64 * self.n_users as f64;
        let p = self.ser();
        1.96 * (p * (1.0 - p) / n).sqrt()
    }

    /// Mean complex MACs per trial (all phases summed).
    pub fn mean_total_macs(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        self.op.total_macs() as f64 / self.trials as f64
    }
}

/// Full sweep output: one entry per (detector, SNR, load), in deterministic
/// order (loads outer, SNR next, detectors inner).
#[derive(Clone, Debug)]
pub struct SweepResult {
    pub points: Vec<PointResult>,
}

/// Reproduction record: replaying the embedded config with the recorded seed
/// yields byte-identical CSV output regardless of worker count.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    /// SHA-256 of the canonical TOML serialization of the config.
    pub config_hash: String,
    pub seed: u64,
    pub software_version: String,
    pub timestamp_unix: u64,
    /// Worker threads requested (0 = library default).
    pub workers: usize,
    /// Trials dispatched per scheduling block.
    pub trial_block: u64,
    pub points: Vec<PointStreams>,
    pub config: ExperimentConfig,
}

/// Per-point RNG derivation record: trial `t` of this point uses
/// `SeededRng::new(point_seed, t)`.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct PointStreams {
    pub point_id: u64,
    pub snr_db: f64,
    pub n_users: usize,
    pub point_seed: u64,
}

/// One point of the sweep grid, fully resolved.
struct PointPlan {
    point_id: u64,
    point_seed: u64,
    snr_db: f64,
    sigma_v_sq: f64,
    n: usize,
    chan: ChannelConfig,
    detectors: Vec<(String, DetectorConfig)>,
}

/// Per-detector outcome of a single trial.
struct TrialOutcome {
    symbol_errors: u64,
    per_stream: Vec<u64>,
    op: OpCount,
}

/// Run the full sweep. `workers` bounds the rayon pool (None = default).
pub fn run_sweep(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<(SweepResult, RunManifest)> {
    run_sweep_with_progress(cfg, workers, |_| {})
}

/// Like [`run_sweep`], invoking `on_point` after each finished point row.
pub fn run_sweep_with_progress(
    cfg: &ExperimentConfig,
    workers: Option<usize>,
    mut on_point: impl FnMut(&PointResult),
) -> Result<(SweepResult, RunManifest)> {
    cfg.validate()?;
    let constellation = Constellation::make_qam(cfg.modulation.j, cfg.modulation.sigma_x_sq)?;
    let plans = build_plans(cfg)?;
    let trial_block = block_size(cfg.channel.m);

    let mut manifest_points = Vec::with_capacity(plans.len());
    for p in &plans {
        manifest_points.push(PointStreams {
            point_id: p.point_id,
            snr_db: p.snr_db,
            n_users: p.n,
            point_seed: p.point_seed,
        });
    }

    let pool = match workers {
        Some(w) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?,
        ),
        None => None,
    };

    let mut points = Vec::new();
    for plan in &plans {
        let rows = match &pool {
            Some(p) => p.install(|| run_point(plan, cfg, &constellation, trial_block))?,
            None => run_point(plan, cfg, &constellation, trial_block)?,
        };
        for row in rows {
            on_point(&row);
            points.push(row);
        }
    }

    let manifest = RunManifest {
        schema_version: super::config::SCHEMA_VERSION,
        config_hash: super::output::config_hash(cfg),
        seed: cfg.seed,
        software_version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        workers: workers.unwrap_or(0),
        trial_block,
        points: manifest_points,
        config: cfg.clone(),
    };
    Ok((SweepResult { points }, manifest))
}

/// Scheduling block: big enough to amortize dispatch, small enough that
/// adaptive stopping stays responsive. Depends only on the config, never on
/// the worker count, so stopping decisions are reproducible.
fn block_size(m: usize) -> u64 {
    ((1usize << 18) / m.max(1)).clamp(32, 2048) as u64
}

fn build_plans(cfg: &ExperimentConfig) -> Result<Vec<PointPlan>> {
    let mut plans = Vec::new();
    let mut point_id = 0u64;
    for &n in &cfg.loads() {
        let chan = cfg.channel.to_channel_config(n)?;
        for &snr_db in &cfg.snr_db {
            let sigma_v_sq = cfg.sigma_v_sq(snr_db);
            let mut detectors = Vec::with_capacity(cfg.detectors.len());
            for d in &cfg.detectors {
                detectors.push((d.label(), d.resolve(n, sigma_v_sq, cfg.modulation.sigma_x_sq)?));
            }
            plans.push(PointPlan {
                point_id,
                point_seed: mix_seed(cfg.seed, point_id),
                snr_db,
                sigma_v_sq,
                n,
                chan: chan.clone(),
                detectors,
            });
            point_id += 1;
        }
    }
    Ok(plans)
}

fn run_point(
    plan: &PointPlan,
    cfg: &ExperimentConfig,
    constellation: &Constellation,
    trial_block: u64,
) -> Result<Vec<PointResult>> {
    let started = std::time::Instant::now();
    let n_dets = plan.detectors.len();
    let mut trials_done = 0u64;
    let mut errors = vec![0u64; n_dets];
    let mut per_stream = vec![vec![0u64; plan.n]; n_dets];
    let mut ops = vec![OpCount::default(); n_dets];

    let t = &cfg.trials;
    loop {
        let block = trial_block.min(t.max_trials - trials_done);
        if block == 0 {
            break;
        }
        let outcomes: Vec<Result<Vec<TrialOutcome>>> = (trials_done..trials_done + block)
            .into_par_iter()
            .map(|trial_idx| run_trial(plan, constellation, trial_idx))
            .collect();
        for outcome in outcomes {
            let outcome = outcome.map_err(|e| {
                Error::InvalidConfig(format!(
                    "trial failed at point {} (snr={} dB, n={}): {e}",
                    plan.point_id, plan.snr_db, plan.n
                ))
            })?;
            for (d, o) in outcome.into_iter().enumerate() {
                errors[d] += o.symbol_errors;
                for (acc, x) in per_stream[d].iter_mut().zip(&o.per_stream) {
                    *acc += x;
                }
                ops[d].init_macs += o.op.init_macs;
                ops[d].step_macs += o.op.step_macs;
                ops[d].residual_macs += o.op.residual_macs;
                ops[d].candidates += o.op.candidates;
            }
        }
        trials_done += block;
        let satisfied =
            trials_done >= t.min_trials && errors.iter().all(|&e| e >= t.min_errors);
        if satisfied || trials_done >= t.max_trials {
            break;
        }
    }

    let wall_secs = started.elapsed().as_secs_f64();
    Ok(plan
        .detectors
        .iter()
        .enumerate()
        .map(|(d, (label, _))| PointResult {
            detector: label.clone(),
            snr_db: plan.snr_db,
            n_users: plan.n,
            m_antennas: cfg.channel.m,
            trials: trials_done,
            symbol_errors: errors[d],
            per_stream_errors: per_stream[d].clone(),
            op: ops[d],
            low_confidence: errors[d] < t.min_errors,
            wall_secs,
        })
        .collect())
}

fn run_trial(
    plan: &PointPlan,
    constellation: &Constellation,
    trial_idx: u64,
) -> Result<Vec<TrialOutcome>> {
    let mut rng = SeededRng::new(plan.point_seed, trial_idx);
    let real = channel::generate(&plan.chan, &mut rng)?;
    let x = modem::draw_symbols(constellation, plan.n, &mut rng);
    let v = numerics::draw_complex_gaussian(&mut rng, plan.chan.m, plan.sigma_v_sq)?;
    let x_vals = x.values(constellation);
    let hx = numerics::matvec(&real.h, &x_vals)?;
    let y: Vec<_> = hx.iter().zip(&v).map(|(a, b)| a + b).collect();

    // Shared per-trial precompute: one Gram matrix, shifted per distinct rho.
    let needs_system = plan
        .detectors
        .iter()
        .any(|(_, d)| !matches!(d.kind, DetectorKind::Mfb | DetectorKind::Mld));
    let mut systems: Vec<(f64, System)> = Vec::new();
    if needs_system {
        let mut rhos: Vec<f64> = plan
            .detectors
            .iter()
            .filter(|(_, d)| !matches!(d.kind, DetectorKind::Mfb | DetectorKind::Mld))
            .map(|(_, d)| d.rho)
            .collect();
        rhos.sort_by(|a, b| a.partial_cmp(b).unwrap());
        rhos.dedup();
        let base_rho = rhos[0];
        let gram = numerics::gram(&real.h, base_rho)?;
        let b = numerics::adjoint_matvec(&real.h, &y)?;
        let base = System::from_parts(gram, b, base_rho)?;
        for &rho in rhos.iter().skip(1) {
            systems.push((rho, base.with_rho(rho)?));
        }
        systems.push((base_rho, base));
    }
    let system_for = |rho: f64| -> Result<&System> {
        systems
            .iter()
            .find(|(r, _)| *r == rho)
            .map(|(_, s)| s)
            .ok_or_else(|| Error::InvalidArgument(format!("no system prepared for rho {rho}")))
    };

    let mut outcomes = Vec::with_capacity(plan.detectors.len());
    for (_, det) in &plan.detectors {
        let output = match det.kind {
            DetectorKind::Mf => detect_mf(system_for(det.rho)?, constellation)?,
            DetectorKind::Rzf => detect_rzf(system_for(det.rho)?, constellation, &det.solver)?,
            DetectorKind::Jacobi => {
                detect_jacobi(system_for(det.rho)?, constellation, det.iterations)?
            }
            DetectorKind::Pj => detect_pj(system_for(det.rho)?, constellation, det)?,
            DetectorKind::Mfb => detect_mfb(&real.h, &x, &v, constellation)?,
            DetectorKind::Mld => detect_mld(&real.h, &y, constellation, det.mld_cap)?,
        };
        let (symbol_errors, per_stream) = modem::count_symbol_errors(&x, &output.decision)?;
        outcomes.push(TrialOutcome {
            symbol_errors,
            per_stream,
            op: output.op,
        });
    }
    Ok(outcomes)
}
