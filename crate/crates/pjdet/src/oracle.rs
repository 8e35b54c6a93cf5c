//! Conditioned Monte Carlo estimators of the pairwise error probabilities.
//!
//! Each estimator replays the raw decision statistic — vector noise draws and
//! full distance comparisons — without evaluating any Gaussian integral, so
//! the closed forms in [`crate::analysis`] can be cross-checked against an
//! independent route. The `validate` CLI subcommand and the acceptance suite
//! both run [`validation_suite`].

use num_complex::Complex64;

use crate::analysis::{self, PepContext};
use crate::channel::{generate_iid, ChannelConfig};
use crate::detectors::System;
use crate::modem::Constellation;
use crate::numerics::{self, CMat, CholeskyFactor, SeededRng};
use crate::Result;

/// Binomial estimate of a pairwise error probability.
#[derive(Clone, Copy, Debug)]
pub struct PepEstimate {
    pub errors: u64,
    pub trials: u64,
}

impl PepEstimate {
    pub fn p_hat(&self) -> f64 {
        self.errors as f64 / self.trials as f64
    }

    /// Binomial standard deviation of the estimator at reference probability
    /// `p_ref` (use the closed form under test).
    pub fn sigma(&self, p_ref: f64) -> f64 {
        (p_ref * (1.0 - p_ref) / self.trials as f64).sqrt()
    }

    /// |p_hat - p_ref| measured in binomial standard deviations.
    pub fn deviation_sigmas(&self, p_ref: f64) -> f64 {
        (self.p_hat() - p_ref).abs() / self.sigma(p_ref)
    }
}

/// Maximum-likelihood pairwise statistic: `x` is preferred over `z = x - e`
/// iff `||H e + v||^2 < ||v||^2`.
pub fn mc_pep_mld(
    h: &CMat,
    e: &[Complex64],
    sigma_v_sq: f64,
    trials: u64,
    rng: &mut SeededRng,
) -> Result<PepEstimate> {
    let he = numerics::matvec(h, e)?;
    let m = h.rows();
    let mut errors = 0u64;
    for _ in 0..trials {
        let v = numerics::draw_complex_gaussian(rng, m, sigma_v_sq)?;
        let shifted: f64 = he.iter().zip(&v).map(|(a, b)| (a + b).norm_sqr()).sum();
        if shifted < numerics::norm_sq(&v) {
            errors += 1;
        }
    }
    Ok(PepEstimate { errors, trials })
}

/// Matched-filter-bound pairwise statistic: with `w = D^{-1} H^H v`, the
/// wrong vector wins iff `||e + w||^2 < ||w||^2`.
pub fn mc_pep_mfb(
    h: &CMat,
    e: &[Complex64],
    sigma_v_sq: f64,
    trials: u64,
    rng: &mut SeededRng,
) -> Result<PepEstimate> {
    let n = h.cols();
    let d_inv: Vec<f64> = (0..n).map(|j| 1.0 / numerics::norm_sq(h.col(j))).collect();
    let m = h.rows();
    let mut errors = 0u64;
    for _ in 0..trials {
        let v = numerics::draw_complex_gaussian(rng, m, sigma_v_sq)?;
        let hv = numerics::adjoint_matvec(h, &v)?;
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for j in 0..n {
            let w = hv[j] * d_inv[j];
            lhs += (e[j] + w).norm_sqr();
            rhs += w.norm_sqr();
        }
        if lhs < rhs {
            errors += 1;
        }
    }
    Ok(PepEstimate { errors, trials })
}

/// One-shot projected-Jacobi pairwise statistic with a planted initializer
/// error `e_bar`: the estimate is `F e_bar + x + D^{-1} H^H v`, and `z = x - e`
/// wins iff `||e + F e_bar + w||^2 < ||F e_bar + w||^2`.
pub fn mc_pep_pj_general(
    h: &CMat,
    sys: &System,
    e: &[Complex64],
    e_bar: &[Complex64],
    sigma_v_sq: f64,
    trials: u64,
    rng: &mut SeededRng,
) -> Result<PepEstimate> {
    let shift = sys.apply_f(e_bar)?;
    let n = h.cols();
    let d_inv: Vec<f64> = (0..n).map(|j| 1.0 / numerics::norm_sq(h.col(j))).collect();
    let m = h.rows();
    let mut errors = 0u64;
    for _ in 0..trials {
        let v = numerics::draw_complex_gaussian(rng, m, sigma_v_sq)?;
        let hv = numerics::adjoint_matvec(h, &v)?;
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for j in 0..n {
            let drift = shift[j] + hv[j] * d_inv[j];
            lhs += (e[j] + drift).norm_sqr();
            rhs += drift.norm_sqr();
        }
        if lhs < rhs {
            errors += 1;
        }
    }
    Ok(PepEstimate { errors, trials })
}

/// Conditional projected-Jacobi statistic: initializer error of magnitude
/// `d_min` planted at stream `k`, detection error `d_min` at stream `n`.
///
/// The planted neighbor direction cycles through `{1, -1, i, -i}` so the
/// pooled estimate matches the four-way direction average of the closed
/// form.
pub fn mc_pep_pj_conditional(
    h: &CMat,
    sys: &System,
    c: &Constellation,
    n: usize,
    k: usize,
    sigma_v_sq: f64,
    trials: u64,
    rng: &mut SeededRng,
) -> Result<PepEstimate> {
    let dims = h.cols();
    let d = c.d_min();
    let mut e = vec![Complex64::new(0.0, 0.0); dims];
    e[n] = Complex64::new(d, 0.0);
    let directions = [
        Complex64::new(d, 0.0),
        Complex64::new(-d, 0.0),
        Complex64::new(0.0, d),
        Complex64::new(0.0, -d),
    ];
    // Precompute the four shift vectors F e_bar.
    let mut shifts = Vec::with_capacity(4);
    for dir in directions {
        let mut e_bar = vec![Complex64::new(0.0, 0.0); dims];
        e_bar[k] = dir;
        shifts.push(sys.apply_f(&e_bar)?);
    }
    let d_inv: Vec<f64> = (0..dims)
        .map(|j| 1.0 / numerics::norm_sq(h.col(j)))
        .collect();
    let m = h.rows();
    let mut errors = 0u64;
    for t in 0..trials {
        let shift = &shifts[(t % 4) as usize];
        let v = numerics::draw_complex_gaussian(rng, m, sigma_v_sq)?;
        let hv = numerics::adjoint_matvec(h, &v)?;
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for j in 0..dims {
            let drift = shift[j] + hv[j] * d_inv[j];
            lhs += (e[j] + drift).norm_sqr();
            rhs += drift.norm_sqr();
        }
        if lhs < rhs {
            errors += 1;
        }
    }
    Ok(PepEstimate { errors, trials })
}

/// Zero-forcing single-stream statistic: with `g = A^{-1} H^H v`, the
/// neighbor at distance `d_min` wins stream `k` iff
/// `2 Re{conj(c) g_k} > |c|^2`.
pub fn mc_pep_zf_single(
    h: &CMat,
    sys: &System,
    c: &Constellation,
    k: usize,
    sigma_v_sq: f64,
    trials: u64,
    rng: &mut SeededRng,
) -> Result<PepEstimate> {
    let factor = CholeskyFactor::factor(sys.a())?;
    let step = Complex64::new(c.d_min(), 0.0);
    let m = h.rows();
    let mut errors = 0u64;
    for _ in 0..trials {
        let v = numerics::draw_complex_gaussian(rng, m, sigma_v_sq)?;
        let hv = numerics::adjoint_matvec(h, &v)?;
        let g = factor.solve(&hv)?;
        if 2.0 * (step.conj() * g[k]).re > step.norm_sqr() {
            errors += 1;
        }
    }
    Ok(PepEstimate { errors, trials })
}

/// One line of the formula-versus-Monte-Carlo validation report.
#[derive(Clone, Debug)]
pub struct ValidationLine {
    pub name: &'static str,
    pub formula: f64,
    pub estimate: f64,
    pub trials: u64,
    pub deviation_sigmas: f64,
    pub pass: bool,
}

/// Run every closed form against its conditioned Monte Carlo twin on fixed
/// small systems, at operating points where the probability sits in
/// `[1e-3, 1e-1]`. A line passes when the estimate lands within three
/// binomial standard deviations of the formula.
pub fn validation_suite(trials: u64, seed: u64) -> Result<Vec<ValidationLine>> {
    let c4 = Constellation::make_qam(4, 1.0)?;
    let mut lines = Vec::new();
    // Q^{-1}(0.02) ~ 2.054: scale each noise variance so the formula sits
    // near 2e-2, comfortably inside the target band.
    let target_arg = 2.054f64;

    // Maximum-likelihood PEP, multi-stream error pattern on a 16x4 system.
    {
        let mut rng = SeededRng::new(numerics::mix_seed(seed, 1), 0);
        let h = generate_iid(&ChannelConfig::iid(16, 4, 1.0), &mut rng)?.h;
        let mut e = vec![Complex64::new(0.0, 0.0); 4];
        e[1] = Complex64::new(c4.d_min(), 0.0);
        e[3] = Complex64::new(0.0, -c4.d_min());
        let he = numerics::matvec(&h, &e)?;
        let sigma = numerics::norm_sq(&he) / (2.0 * target_arg * target_arg);
        let ctx = PepContext::new(&h, &c4, sigma)?;
        let formula = analysis::pep_mld(&ctx, &e)?;
        let est = mc_pep_mld(&h, &e, sigma, trials, &mut rng)?;
        lines.push(line("mld-pep", formula, est));
    }

    // Maximum-likelihood PEP, single nearest-neighbor error.
    {
        let mut rng = SeededRng::new(numerics::mix_seed(seed, 2), 0);
        let h = generate_iid(&ChannelConfig::iid(16, 4, 1.0), &mut rng)?.h;
        let n = 2;
        let gain = numerics::norm_sq(h.col(n));
        let sigma = gain * c4.d_min().powi(2) / (2.0 * target_arg * target_arg);
        let ctx = PepContext::new(&h, &c4, sigma)?;
        let formula = analysis::pep_mld_single(&ctx, n)?;
        let mut e = vec![Complex64::new(0.0, 0.0); 4];
        e[n] = Complex64::new(c4.d_min(), 0.0);
        let est = mc_pep_mld(&h, &e, sigma, trials, &mut rng)?;
        lines.push(line("mld-pep-single", formula, est));
    }

    // Matched-filter-bound PEP, two-stream error pattern.
    {
        let mut rng = SeededRng::new(numerics::mix_seed(seed, 3), 0);
        let h = generate_iid(&ChannelConfig::iid(16, 4, 1.0), &mut rng)?.h;
        let mut e = vec![Complex64::new(0.0, 0.0); 4];
        e[0] = Complex64::new(-c4.d_min(), 0.0);
        e[2] = Complex64::new(0.0, c4.d_min());
        let scaled: Vec<Complex64> = (0..4)
            .map(|j| e[j] / numerics::norm_sq(h.col(j)))
            .collect();
        let hde = numerics::norm_sq(&numerics::matvec(&h, &scaled)?);
        let e2 = numerics::norm_sq(&e);
        let sigma = e2 * e2 / (2.0 * target_arg * target_arg * hde);
        let ctx = PepContext::new(&h, &c4, sigma)?;
        let formula = analysis::pep_mfb(&ctx, &e)?;
        let est = mc_pep_mfb(&h, &e, sigma, trials, &mut rng)?;
        lines.push(line("mfb-pep", formula, est));
    }

    // Projected-Jacobi PEP with an arbitrary planted initializer error.
    {
        let mut rng = SeededRng::new(numerics::mix_seed(seed, 4), 0);
        let h = generate_iid(&ChannelConfig::iid(32, 8, 1.0), &mut rng)?.h;
        let sys = System::new(&h, &vec![Complex64::new(0.0, 0.0); 32], 0.0)?;
        let mut e = vec![Complex64::new(0.0, 0.0); 8];
        e[1] = Complex64::new(c4.d_min(), 0.0);
        let mut e_bar = vec![Complex64::new(0.0, 0.0); 8];
        e_bar[4] = Complex64::new(0.0, -c4.d_min());
        e_bar[6] = Complex64::new(c4.d_min(), 0.0);
        let scaled: Vec<Complex64> = (0..8)
            .map(|j| e[j] / numerics::norm_sq(h.col(j)))
            .collect();
        let hde = numerics::norm_sq(&numerics::matvec(&h, &scaled)?);
        let coupling = 2.0 * numerics::dot_conj(&e, &sys.apply_f(&e_bar)?).re;
        let num = numerics::norm_sq(&e) + coupling;
        let sigma = (num / target_arg).powi(2) / (2.0 * hde);
        let ctx = PepContext::new(&h, &c4, sigma)?;
        let formula = analysis::pep_pj_general(&ctx, &sys, &e, &e_bar)?;
        let est = mc_pep_pj_general(&h, &sys, &e, &e_bar, sigma, trials, &mut rng)?;
        lines.push(line("pj-pep-general", formula, est));
    }

    // Conditional projected-Jacobi PEP (single init error, single error).
    {
        let mut rng = SeededRng::new(numerics::mix_seed(seed, 5), 0);
        let h = generate_iid(&ChannelConfig::iid(32, 8, 1.0), &mut rng)?.h;
        let sys = System::new(&h, &vec![Complex64::new(0.0, 0.0); 32], 0.0)?;
        let (n, k) = (2, 5);
        let gain = numerics::norm_sq(h.col(n));
        let sigma = gain * c4.d_min().powi(2) / (2.0 * target_arg * target_arg);
        let ctx = PepContext::new(&h, &c4, sigma)?;
        let formula = analysis::pep_pj_conditional(&ctx, &sys, n, k)?;
        let est = mc_pep_pj_conditional(&h, &sys, &c4, n, k, sigma, trials, &mut rng)?;
        lines.push(line("pj-pep-conditional", formula, est));
    }

    // Zero-forcing initializer single-stream PEP.
    {
        let mut rng = SeededRng::new(numerics::mix_seed(seed, 6), 0);
        let h = generate_iid(&ChannelConfig::iid(16, 4, 1.0), &mut rng)?.h;
        let sys = System::new(&h, &vec![Complex64::new(0.0, 0.0); 16], 0.0)?;
        let k = 1;
        let inv_diag = CholeskyFactor::factor(sys.a())?.inverse_diagonal();
        let sigma = c4.d_min().powi(2) / (2.0 * target_arg * target_arg * inv_diag[k]);
        let ctx = PepContext::new(&h, &c4, sigma)?;
        let formula = analysis::pep_zf_single(&ctx, &sys, k)?;
        let est = mc_pep_zf_single(&h, &sys, &c4, k, sigma, trials, &mut rng)?;
        lines.push(line("zf-pep-single", formula, est));
    }

    Ok(lines)
}

fn line(name: &'static str, formula: f64, est: PepEstimate) -> ValidationLine {
    let dev = est.deviation_sigmas(formula);
    ValidationLine {
        name,
        formula,
        estimate: est.p_hat(),
        trials: est.trials,
        deviation_sigmas: dev,
        pass: dev <= 3.0,
    }
}
