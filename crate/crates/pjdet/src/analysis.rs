//! Closed-form pairwise error probabilities (PEPs) and SER approximations
//! for the maximum-likelihood detector, the matched-filter bound, projected
//! Jacobi, and linear initializers.
//!
//! Every probability returned here is clamped to `[0, 1]`: the
//! nearest-neighbor SER approximations scale a PEP by the average neighbor
//! count `K` and can exceed 1 at low SNR, where they stop being meaningful
//! bounds. Each closed form has a conditioned Monte Carlo twin in
//! [`crate::oracle`] used by the validation suite.

use num_complex::Complex64;

use crate::detectors::System;
use crate::modem::Constellation;
use crate::numerics::{self, CMat, CholeskyFactor};
use crate::{Error, Result};

/// Gaussian tail probability `Q(x) = P(N(0,1) > x) = erfc(x / sqrt(2)) / 2`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Everything the closed forms condition on: the channel realization, the
/// alphabet, and the noise power.
pub struct PepContext<'a> {
    pub h: &'a CMat,
    pub constellation: &'a Constellation,
    pub sigma_v_sq: f64,
}

impl<'a> PepContext<'a> {
    pub fn new(h: &'a CMat, constellation: &'a Constellation, sigma_v_sq: f64) -> Result<Self> {
        if !(sigma_v_sq > 0.0) || !sigma_v_sq.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "noise variance must be positive and finite, got {sigma_v_sq}"
            )));
        }
        Ok(PepContext {
            h,
            constellation,
            sigma_v_sq,
        })
    }

    fn check_error_vector(&self, e: &[Complex64]) -> Result<()> {
        if e.len() != self.h.cols() {
            return Err(Error::Dimension(format!(
                "error pattern length {} for a {}-column channel",
                e.len(),
                self.h.cols()
            )));
        }
        if numerics::norm_sq(e) == 0.0 {
            return Err(Error::InvalidArgument(
                "pairwise error probability needs a nonzero error pattern".into(),
            ));
        }
        Ok(())
    }
}

fn clamp01(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}

/// PEP of maximum-likelihood detection for error pattern `e = x - z`:
/// `Q(sqrt(||H e||^2 / (2 sigma_v^2)))`.
pub fn pep_mld(ctx: &PepContext, e: &[Complex64]) -> Result<f64> {
    ctx.check_error_vector(e)?;
    let he = numerics::matvec(ctx.h, e)?;
    Ok(q_function(
        (numerics::norm_sq(&he) / (2.0 * ctx.sigma_v_sq)).sqrt(),
    ))
}

/// PEP of maximum-likelihood detection for a single nearest-neighbor error
/// on stream `n`: `Q(sqrt(||h_n||^2 d_min^2 / (2 sigma_v^2)))`.
pub fn pep_mld_single(ctx: &PepContext, n: usize) -> Result<f64> {
    if n >= ctx.h.cols() {
        return Err(Error::InvalidArgument(format!(
            "stream index {n} out of range for {} streams",
            ctx.h.cols()
        )));
    }
    let gain = numerics::norm_sq(ctx.h.col(n));
    let d = ctx.constellation.d_min();
    Ok(q_function((gain * d * d / (2.0 * ctx.sigma_v_sq)).sqrt()))
}

/// PEP of the matched-filter bound for error pattern `e`:
/// `Q(sqrt(||e||^4 / (2 sigma_v^2 ||H D^{-1} e||^2)))` with `D` the
/// unregularized Gram diagonal (column energies).
pub fn pep_mfb(ctx: &PepContext, e: &[Complex64]) -> Result<f64> {
    ctx.check_error_vector(e)?;
    let scaled: Vec<Complex64> = (0..ctx.h.cols())
        .map(|j| {
            let djj = numerics::norm_sq(ctx.h.col(j));
            e[j] / djj
        })
        .collect();
    let hde = numerics::matvec(ctx.h, &scaled)?;
    let e2 = numerics::norm_sq(e);
    Ok(q_function(
        (e2 * e2 / (2.0 * ctx.sigma_v_sq * numerics::norm_sq(&hde))).sqrt(),
    ))
}

/// Nearest-neighbor SER approximation of the matched-filter bound:
/// the per-stream single-error PEP scaled by the average neighbor count,
/// averaged over streams and clamped.
pub fn ser_mfb(ctx: &PepContext) -> Result<f64> {
    let n = ctx.h.cols();
    let k_avg = ctx.constellation.neighbor_avg();
    let mut acc = 0.0;
    for stream in 0..n {
        acc += k_avg * pep_mld_single(ctx, stream)?;
    }
    Ok(clamp01(acc / n as f64))
}

/// PEP of the one-shot projected Jacobi statistic given an initializer error
/// `e_bar = z_init - x`:
/// `Q((||e||^2 + 2 Re{e^H F e_bar}) / sqrt(2 sigma_v^2 ||H D^{-1} e||^2))`.
///
/// `sys` must be the unregularized (`rho = 0`) system so `F` and `D` match
/// the statistic. With `e_bar = 0` this reduces exactly to [`pep_mfb`]. The
/// numerator may be negative, in which case the probability exceeds 1/2.
pub fn pep_pj_general(
    ctx: &PepContext,
    sys: &System,
    e: &[Complex64],
    e_bar: &[Complex64],
) -> Result<f64> {
    ctx.check_error_vector(e)?;
    if e_bar.len() != e.len() {
        return Err(Error::Dimension(
            "initializer error and error pattern lengths differ".into(),
        ));
    }
    let f_ebar = sys.apply_f(e_bar)?;
    let coupling = 2.0 * numerics::dot_conj(e, &f_ebar).re;
    let scaled: Vec<Complex64> = e
        .iter()
        .zip(sys.diag())
        .map(|(ei, d)| ei / d)
        .collect();
    let hde = numerics::matvec(ctx.h, &scaled)?;
    let num = numerics::norm_sq(e) + coupling;
    let den = (2.0 * ctx.sigma_v_sq * numerics::norm_sq(&hde)).sqrt();
    Ok(q_function(num / den))
}

/// Conditional PEP of projected Jacobi when the initializer makes a single
/// nearest-neighbor error at stream `k` and the detector errs at stream `n`:
/// the four relative neighbor orientations `u in {1, -1, i, -i}` average as
/// `(1/4) sum_l Q(sqrt(||h_n||^2 d_min^2 Gamma_l^2 / (2 sigma_v^2)))` with
/// `Gamma_l = 1 + 2 Re{u_l F_{n,k}}`.
///
/// The hollow diagonal makes `k == n` collapse to the single-error
/// maximum-likelihood PEP.
pub fn pep_pj_conditional(ctx: &PepContext, sys: &System, n: usize, k: usize) -> Result<f64> {
    if n >= sys.dim() || k >= sys.dim() {
        return Err(Error::InvalidArgument(format!(
            "stream indices ({n}, {k}) out of range for {} streams",
            sys.dim()
        )));
    }
    let gain = numerics::norm_sq(ctx.h.col(n));
    let d = ctx.constellation.d_min();
    let base = gain * d * d / (2.0 * ctx.sigma_v_sq);
    let f_nk = sys.f_entry(n, k);
    Ok(pj_direction_average(base, f_nk))
}

const NEIGHBOR_DIRECTIONS: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, 1.0),
    Complex64::new(0.0, -1.0),
];

#[inline]
fn pj_direction_average(base_arg_sq: f64, f_nk: Complex64) -> f64 {
    let mut acc = 0.0;
    for u in NEIGHBOR_DIRECTIONS {
        let gamma = 1.0 + 2.0 * (u * f_nk).re;
        acc += q_function((base_arg_sq * gamma * gamma).sqrt());
    }
    acc / 4.0
}

/// Single-error PEP of the zero-forcing initializer at stream `k`:
/// `Q(sqrt(d_min^2 / (2 sigma_v^2 [A^{-1}]_kk)))`.
pub fn pep_zf_single(ctx: &PepContext, sys: &System, k: usize) -> Result<f64> {
    let diag = zf_error_diagonal(sys)?;
    if k >= diag.len() {
        return Err(Error::InvalidArgument(format!(
            "stream index {k} out of range for {} streams",
            diag.len()
        )));
    }
    let d = ctx.constellation.d_min();
    Ok(q_function((d * d / (2.0 * ctx.sigma_v_sq * diag[k])).sqrt()))
}

/// All single-error initializer PEPs at once (one factorization).
pub fn zf_single_peps(ctx: &PepContext, sys: &System) -> Result<Vec<f64>> {
    let diag = zf_error_diagonal(sys)?;
    let d = ctx.constellation.d_min();
    Ok(diag
        .iter()
        .map(|&a| q_function((d * d / (2.0 * ctx.sigma_v_sq * a)).sqrt()))
        .collect())
}

fn zf_error_diagonal(sys: &System) -> Result<Vec<f64>> {
    let f = CholeskyFactor::factor(sys.a())?;
    Ok(f.inverse_diagonal())
}

/// Nearest-neighbor SER approximation of projected Jacobi.
///
/// `init_pep[k]` is the initializer's single-error PEP at stream `k` (for a
/// zero-forcing initializer, [`zf_single_peps`]). Per-stream probabilities
/// are `K`-scaled and clamped; the union-style estimate
/// `psi = E_mfb * prod_k (1 - E_k) + (1/N) sum_{n,k} E_{n|k} E_k`
/// is combined with the initializer SER as `min(E_in, psi)`. A perfect
/// initializer (all-zero `init_pep`) returns `psi` itself, which then equals
/// the matched-filter-bound SER. This is an approximation, not a strict
/// bound.
pub fn ser_pj(ctx: &PepContext, sys: &System, init_pep: &[f64]) -> Result<f64> {
    let n = sys.dim();
    if init_pep.len() != n {
        return Err(Error::Dimension(format!(
            "init_pep has length {}, system has {} streams",
            init_pep.len(),
            n
        )));
    }
    let k_avg = ctx.constellation.neighbor_avg();
    let e_in: Vec<f64> = init_pep.iter().map(|&p| clamp01(k_avg * p)).collect();
    let e_in_mean = e_in.iter().sum::<f64>() / n as f64;
    let e_mfb = ser_mfb(ctx)?;

    let no_init_error: f64 = e_in.iter().map(|p| 1.0 - p).product();
    let d = ctx.constellation.d_min();
    let mut coupling = 0.0;
    for stream_n in 0..n {
        let gain = numerics::norm_sq(ctx.h.col(stream_n));
        let base = gain * d * d / (2.0 * ctx.sigma_v_sq);
        for (stream_k, &ek) in e_in.iter().enumerate() {
            if ek == 0.0 {
                continue;
            }
            let cond = clamp01(k_avg * pj_direction_average(base, sys.f_entry(stream_n, stream_k)));
            coupling += cond * ek;
        }
    }
    let psi = clamp01(e_mfb * no_init_error + coupling / n as f64);
    if e_in_mean == 0.0 {
        return Ok(psi);
    }
    Ok(clamp01(psi.min(e_in_mean)))
}

/// Curve provenance marker.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurveKind {
    ExactForm,
    Approximation,
    UnionBound,
}

/// An analytically computed SER curve, ready to overlay on simulation output.
#[derive(Clone, Debug)]
pub struct TheoryCurve {
    pub detector: String,
    pub kind: CurveKind,
    pub snr_db: Vec<f64>,
    pub ser: Vec<f64>,
}

impl TheoryCurve {
    /// Enforce the curve invariants: probabilities in `[0, 1]`, SNR strictly
    /// increasing, SER nonincreasing in SNR.
    pub fn validate(&self) -> Result<()> {
        if self.snr_db.len() != self.ser.len() {
            return Err(Error::Dimension("theory curve axis lengths differ".into()));
        }
        for pair in self.snr_db.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::InvalidArgument(
                    "theory curve SNR axis must be strictly increasing".into(),
                ));
            }
        }
        for &p in &self.ser {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!(
                    "theory curve SER {p} outside [0, 1]"
                )));
            }
        }
        for pair in self.ser.windows(2) {
            if pair[1] > pair[0] + 1e-12 {
                return Err(Error::InvalidArgument(
                    "theory curve SER must be nonincreasing in SNR".into(),
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{generate_iid, ChannelConfig};
    use crate::numerics::SeededRng;

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Independent quadrature oracle for the Gaussian tail: composite
    /// Simpson on [x, 15] (the remainder beyond 15 is ~1e-50).
    fn q_quadrature(x: f64) -> f64 {
        let upper = 15.0f64;
        let steps = ((upper - x) / 1e-4).ceil() as usize;
        let steps = steps + steps % 2;
        let h = (upper - x) / steps as f64;
        let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut acc = phi(x) + phi(upper);
        for i in 1..steps {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * phi(x + i as f64 * h);
        }
        acc * h / 3.0
    }

    fn scaled_orthogonal_channel(m: usize, n: usize, gain_sq: f64) -> CMat {
        // Columns orthogonal with ||h_j||^2 = gain_sq.
        CMat::from_fn(m, n, |i, j| {
            if i == j {
                c64(gain_sq.sqrt(), 0.0)
            } else {
                c64(0.0, 0.0)
            }
        })
    }

    fn random_channel(m: usize, n: usize, seed: u64) -> CMat {
        let mut rng = SeededRng::new(seed, 0);
        generate_iid(&ChannelConfig::iid(m, n, 1.0), &mut rng)
            .unwrap()
            .h
    }

    #[test]
    fn q_function_basics() {
        assert_eq!(q_function(0.0), 0.5);
        let x = 1.7;
        assert!((q_function(-x) - (1.0 - q_function(x))).abs() < 1e-15);
        assert!((q_function(1.0) - 0.158655).abs() < 1e-6);
    }

    #[test]
    fn q_function_matches_quadrature_oracle() {
        for &x in &[-8.0, -4.0, -1.3, 0.0, 0.4, 1.0, 2.5, 4.0, 6.0, 8.0] {
            let q = q_function(x);
            let oracle = q_quadrature(x);
            assert!(
                (q - oracle).abs() / oracle <= 1e-12,
                "x={x}: q={q:e}, oracle={oracle:e}"
            );
        }
    }

    #[test]
    fn mld_pep_unit_argument_and_noise_scaling() {
        let c = Constellation::make_qam(4, 1.0).unwrap();
        let h = random_channel(8, 3, 5);
        let e = vec![c64(0.3, -0.2), c64(0.0, 0.0), c64(-0.1, 0.4)];
        let he = numerics::matvec(&h, &e).unwrap();
        let sigma = numerics::norm_sq(&he) / 2.0;
        let ctx = PepContext::new(&h, &c, sigma).unwrap();
        assert!((pep_mld(&ctx, &e).unwrap() - q_function(1.0)).abs() < 1e-14);

        let ctx2 = PepContext::new(&h, &c, 2.0 * sigma).unwrap();
        let expected = q_function(1.0 / 2.0f64.sqrt());
        assert!((pep_mld(&ctx2, &e).unwrap() - expected).abs() < 1e-14);

        let zero = vec![c64(0.0, 0.0); 3];
        assert!(pep_mld(&ctx, &zero).is_err());
    }

    #[test]
    fn mld_single_error_specialization_and_high_noise_limit() {
        let c = Constellation::make_qam(16, 1.0).unwrap();
        let h = random_channel(16, 4, 9);
        let ctx = PepContext::new(&h, &c, 0.05).unwrap();
        let n = 2;
        let mut e = vec![c64(0.0, 0.0); 4];
        e[n] = c64(0.0, c.d_min()); // any unit neighbor direction
        assert!(
            (pep_mld_single(&ctx, n).unwrap() - pep_mld(&ctx, &e).unwrap()).abs() < 1e-14
        );
        let noisy = PepContext::new(&h, &c, 1e14).unwrap();
        assert!((pep_mld_single(&noisy, n).unwrap() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn mfb_pep_orthogonal_channel_closed_form() {
        let c = Constellation::make_qam(4, 1.0).unwrap();
        let g = 2.7;
        let h = scaled_orthogonal_channel(6, 3, g);
        let ctx = PepContext::new(&h, &c, 0.4).unwrap();
        let e = vec![c64(0.5, 0.1), c64(-0.2, 0.3), c64(0.0, -0.4)];
        let expected = q_function((g * numerics::norm_sq(&e) / (2.0 * 0.4)).sqrt());
        assert!((pep_mfb(&ctx, &e).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn mfb_single_error_equals_mld_single_error_exactly() {
        let c = Constellation::make_qam(64, 1.0).unwrap();
        for seed in 0..20 {
            let h = random_channel(24, 8, 100 + seed);
            let ctx = PepContext::new(&h, &c, 0.02).unwrap();
            let n = (seed % 8) as usize;
            let mut e = vec![c64(0.0, 0.0); 8];
            e[n] = c64(-c.d_min(), 0.0);
            let lhs = pep_mfb(&ctx, &e).unwrap();
            let rhs = pep_mld_single(&ctx, n).unwrap();
            assert!(
                (lhs - rhs).abs() <= 1e-12 * rhs,
                "seed {seed}: {lhs:e} vs {rhs:e}"
            );
        }
    }

    #[test]
    fn pj_general_reduces_to_mfb_without_initializer_error() {
        let c = Constellation::make_qam(4, 1.0).unwrap();
        let h = random_channel(12, 4, 33);
        let ctx = PepContext::new(&h, &c, 0.1).unwrap();
        let y = vec![c64(0.0, 0.0); 12];
        let sys = System::new(&h, &y, 0.0).unwrap();
        let e = vec![c64(0.2, -0.1), c64(0.0, 0.0), c64(0.3, 0.0), c64(0.0, 0.1)];
        let zero = vec![c64(0.0, 0.0); 4];
        let lhs = pep_pj_general(&ctx, &sys, &e, &zero).unwrap();
        let rhs = pep_mfb(&ctx, &e).unwrap();
        assert!((lhs - rhs).abs() < 1e-14);
    }

    #[test]
    fn pj_general_negative_numerator_exceeds_one_half() {
        let c = Constellation::make_qam(4, 1.0).unwrap();
        let h = random_channel(12, 4, 37);
        let ctx = PepContext::new(&h, &c, 0.1).unwrap();
        let y = vec![c64(0.0, 0.0); 12];
        let sys = System::new(&h, &y, 0.0).unwrap();
        let e = vec![c64(0.2, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)];
        // Aim the initializer error against e's coupling and make it large.
        let f_ebar_target = sys.f_entry(0, 1);
        let sign = if f_ebar_target.re >= 0.0 { -1.0 } else { 1.0 };
        let mut e_bar = vec![c64(0.0, 0.0); 4];
        e_bar[1] = c64(sign * 1e4, 0.0);
        let p = pep_pj_general(&ctx, &sys, &e, &e_bar).unwrap();
        let coupling = 2.0
            * numerics::dot_conj(&e, &sys.apply_f(&e_bar).unwrap()).re;
        assert!(
            coupling + numerics::norm_sq(&e) <= 0.0,
            "construction failed to flip the numerator"
        );
        assert!(p >= 0.5);
    }

    #[test]
    fn pj_conditional_zero_coupling_matches_single_error_pep() {
        let c = Constellation::make_qam(4, 1.0).unwrap();
        let g = 1.9;
        let h = scaled_orthogonal_channel(8, 3, g); // diagonal Gram -> F = 0
        let ctx = PepContext::new(&h, &c, 0.2).unwrap();
        let y = vec![c64(0.0, 0.0); 8];
        let sys = System::new(&h, &y, 0.0).unwrap();
        for n in 0..3 {
            for k in 0..3 {
                let lhs = pep_pj_conditional(&ctx, &sys, n, k).unwrap();
                let rhs = pep_mld_single(&ctx, n).unwrap();
                assert!((lhs - rhs).abs() < 1e-14, "(n,k)=({n},{k})");
            }
        }
        // Same collapse on the hollow diagonal of a random system.
        let h = random_channel(16, 5, 41);
        let ctx = PepContext::new(&h, &c, 0.2).unwrap();
        let y = vec![c64(0.0, 0.0); 16];
        let sys = System::new(&h, &y, 0.0).unwrap();
        for n in 0..5 {
            let lhs = pep_pj_conditional(&ctx, &sys, n, n).unwrap();
            let rhs = pep_mld_single(&ctx, n).unwrap();
            assert!((lhs - rhs).abs() < 1e-14);
        }
    }

    #[test]
    fn zf_single_error_pep_closed_cases() {
        let c = Constellation::make_qam(4, 1.0).unwrap();
        let h = CMat::identity(4);
        let ctx = PepContext::new(&h, &c, 0.3).unwrap();
        let sys = System::new(&h, &vec![c64(0.0, 0.0); 4], 0.0).unwrap();
        let expected = q_function((c.d_min().powi(2) / (2.0 * 0.3)).sqrt());
        for k in 0..4 {
            assert!((pep_zf_single(&ctx, &sys, k).unwrap() - expected).abs() < 1e-14);
        }

        let g = 3.4;
        let h = scaled_orthogonal_channel(7, 3, g);
        let ctx = PepContext::new(&h, &c, 0.3).unwrap();
        let sys = System::new(&h, &vec![c64(0.0, 0.0); 7], 0.0).unwrap();
        let expected = q_function((g * c.d_min().powi(2) / (2.0 * 0.3)).sqrt());
        for p in zf_single_peps(&ctx, &sys).unwrap() {
            assert!((p - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn ser_mfb_single_stream_and_clamp() {
        let c = Constellation::make_qam(4, 1.0).unwrap();
        let h = CMat::identity(1);
        let sigma = 0.2;
        let ctx = PepContext::new(&h, &c, sigma).unwrap();
        let expected = 2.0 * q_function((c.d_min().powi(2) / (2.0 * sigma)).sqrt());
        assert!((ser_mfb(&ctx).unwrap() - expected).abs() < 1e-14);

        // 16-QAM has K = 3, so heavy noise pushes K * Q past 1 -> clamp.
        let c16 = Constellation::make_qam(16, 1.0).unwrap();
        let noisy = PepContext::new(&h, &c16, 1e12).unwrap();
        assert_eq!(ser_mfb(&noisy).unwrap(), 1.0);
    }

    #[test]
    fn ser_pj_perfect_initializer_returns_mfb_ser() {
        let c = Constellation::make_qam(16, 1.0).unwrap();
        let h = random_channel(16, 4, 71);
        let ctx = PepContext::new(&h, &c, 0.05).unwrap();
        let sys = System::new(&h, &vec![c64(0.0, 0.0); 16], 0.0).unwrap();
        let ser = ser_pj(&ctx, &sys, &[0.0; 4]).unwrap();
        let mfb = ser_mfb(&ctx).unwrap();
        assert!((ser - mfb).abs() < 1e-14);
    }

    #[test]
    fn ser_pj_saturates_under_heavy_noise() {
        let c = Constellation::make_qam(16, 1.0).unwrap();
        let h = random_channel(8, 4, 73);
        let ctx = PepContext::new(&h, &c, 1e12).unwrap();
        let sys = System::new(&h, &vec![c64(0.0, 0.0); 8], 0.0).unwrap();
        let init = zf_single_peps(&ctx, &sys).unwrap();
        assert_eq!(ser_pj(&ctx, &sys, &init).unwrap(), 1.0);
    }

    #[test]
    fn ser_pj_is_capped_by_initializer_ser() {
        let c = Constellation::make_qam(4, 1.0).unwrap();
        let h = random_channel(32, 16, 79);
        let ctx = PepContext::new(&h, &c, 0.25).unwrap();
        let sys = System::new(&h, &vec![c64(0.0, 0.0); 32], 0.0).unwrap();
        let init = zf_single_peps(&ctx, &sys).unwrap();
        let k_avg = c.neighbor_avg();
        let e_in = init.iter().map(|p| (k_avg * p).min(1.0)).sum::<f64>() / 16.0;
        let ser = ser_pj(&ctx, &sys, &init).unwrap();
        assert!(ser <= e_in + 1e-15);
    }

    #[test]
    fn theory_curve_validation_catches_violations() {
        let good = TheoryCurve {
            detector: "mfb".into(),
            kind: CurveKind::Approximation,
            snr_db: vec![0.0, 2.0, 4.0],
            ser: vec![0.5, 0.1, 0.01],
        };
        assert!(good.validate().is_ok());
        let bad = TheoryCurve {
            ser: vec![0.1, 0.5, 0.01],
            ..good.clone()
        };
        assert!(bad.validate().is_err());
        let bad_axis = TheoryCurve {
            snr_db: vec![0.0, 0.0, 4.0],
            ..good
        };
        assert!(bad_axis.validate().is_err());
    }
}
