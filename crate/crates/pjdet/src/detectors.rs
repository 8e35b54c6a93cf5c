//! Detection algorithms: matched filter, (regularized) zero forcing with
//! direct and iterative solvers, classical Jacobi, projected Jacobi with
//! residual-minimizing output selection, the matched-filter bound, and
//! exhaustive maximum-likelihood search.
//!
//! Detectors are pure given `(system, inputs)`; a [`System`] is immutable and
//! may be shared by every detector inside one trial so comparisons are
//! paired. Op counters tally complex multiply-accumulate operations actually
//! executed; additions, subtractions, and slicing are free by convention.

use num_complex::Complex64;

use crate::modem::{self, Constellation, SymbolVector};
use crate::numerics::{self, CMat, CholeskyFactor};
use crate::{Error, Result};

/// Default cap on the exhaustive-search space `J^N`.
pub const DEFAULT_MLD_CAP: u128 = 1 << 24;

/// How a regularized zero-forcing solution is obtained.
#[derive(Clone, Debug, PartialEq)]
pub enum RzfSolver {
    /// Hermitian Cholesky factorization.
    Direct,
    /// Fixed number of Jacobi sweeps from a zero start.
    JacobiIter { iters: usize },
    /// Conjugate gradient with an iteration cap and residual target.
    ConjugateGradient { iters: usize, tol: f64 },
}

impl RzfSolver {
    /// Conjugate gradient sized for square-order overall cost:
    /// `2 sqrt(N)` iterations of an `N^2` kernel.
    pub fn cg_square_order(n: usize) -> Self {
        RzfSolver::ConjugateGradient {
            iters: (2.0 * (n as f64).sqrt()).ceil() as usize,
            tol: 1e-8,
        }
    }
}

/// Initialization of the projected Jacobi iteration.
#[derive(Clone, Debug, PartialEq)]
pub enum InitKind {
    /// Start from the zero vector; the first projection is then the matched
    /// filter decision.
    Zero,
    /// Slice of the per-stream normalized matched filter estimate.
    Mf,
    /// Slice of a regularized zero-forcing solution (`rho = 0` removes the
    /// inter-stream interference entirely; `rho = sigma_v^2 / sigma_x^2` is
    /// the LMMSE detector).
    Rzf { rho: f64, solver: RzfSolver },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DetectorKind {
    Mf,
    Rzf,
    Jacobi,
    Pj,
    Mfb,
    Mld,
}

/// Fully resolved detector parameters (numeric `rho`, not a policy).
#[derive(Clone, Debug, PartialEq)]
pub struct DetectorConfig {
    pub kind: DetectorKind,
    /// Gram regularization of the detector's own system.
    pub rho: f64,
    /// Iteration count `T` for Jacobi / projected Jacobi.
    pub iterations: usize,
    /// Projected Jacobi initialization.
    pub init: InitKind,
    /// Solver used by `Rzf` detectors.
    pub solver: RzfSolver,
    /// Exhaustive-search cap for `Mld`.
    pub mld_cap: u128,
}

impl DetectorConfig {
    pub fn mf() -> Self {
        Self::base(DetectorKind::Mf)
    }

    pub fn rzf(rho: f64) -> Self {
        DetectorConfig {
            rho,
            ..Self::base(DetectorKind::Rzf)
        }
    }

    pub fn jacobi(rho: f64, iterations: usize) -> Self {
        DetectorConfig {
            rho,
            iterations,
            ..Self::base(DetectorKind::Jacobi)
        }
    }

    pub fn pj(iterations: usize, init: InitKind) -> Self {
        DetectorConfig {
            iterations,
            init,
            ..Self::base(DetectorKind::Pj)
        }
    }

    pub fn mfb() -> Self {
        Self::base(DetectorKind::Mfb)
    }

    pub fn mld() -> Self {
        Self::base(DetectorKind::Mld)
    }

    fn base(kind: DetectorKind) -> Self {
        DetectorConfig {
            kind,
            rho: 0.0,
            iterations: 1,
            init: InitKind::Zero,
            solver: RzfSolver::Direct,
            mld_cap: DEFAULT_MLD_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho >= 0.0) || !self.rho.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "detector rho must be finite and nonnegative, got {}",
                self.rho
            )));
        }
        match self.kind {
            DetectorKind::Jacobi | DetectorKind::Pj if self.iterations < 1 => Err(
                Error::InvalidArgument("iterative detectors need at least one iteration".into()),
            ),
            _ => Ok(()),
        }
    }
}

/// Complex multiply-accumulate tallies, split by role.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCount {
    /// Cost of computing the initializer (projected Jacobi only).
    pub init_macs: u64,
    /// Core step / solve cost of the detector itself.
    pub step_macs: u64,
    /// Cost of residual evaluation for output selection.
    pub residual_macs: u64,
    /// Candidate vectors evaluated (exhaustive search only).
    pub candidates: u64,
}

impl OpCount {
    pub fn total_macs(&self) -> u64 {
        self.init_macs + self.step_macs + self.residual_macs
    }
}

/// Result of one detection.
#[derive(Clone, Debug)]
pub struct DetectorOutput {
    pub decision: SymbolVector,
    /// Pre-slice estimate, where the algorithm produces one.
    pub soft: Option<Vec<Complex64>>,
    /// Iteration index of the selected candidate (0 = initializer).
    pub t_star: usize,
    /// Squared residual norms `||b - A z_t||^2` of the candidate set,
    /// in iteration order.
    pub residual_history: Vec<f64>,
    /// Achieved relative residual of an iterative linear solver, if one ran.
    pub solver_rel_residual: Option<f64>,
    pub op: OpCount,
}

impl DetectorOutput {
    fn plain(decision: SymbolVector, soft: Option<Vec<Complex64>>, op: OpCount) -> Self {
        DetectorOutput {
            decision,
            soft,
            t_star: 0,
            residual_history: Vec::new(),
            solver_rel_residual: None,
            op,
        }
    }
}

/// Precomputed per-trial quantities shared by the linear-front-end detectors:
/// the Gram matrix `A = H^H H + rho I`, its (real, positive) diagonal `D`,
/// and the matched-filter observation `b = H^H y`.
///
/// The hollow iteration matrix `F = I - D^{-1} A` is exposed entrywise and as
/// an operator rather than stored.
#[derive(Clone, Debug)]
pub struct System {
    n: usize,
    rho: f64,
    a: CMat,
    d: Vec<f64>,
    d_inv: Vec<f64>,
    b: Vec<Complex64>,
}

impl System {
    /// Build from the channel and observation.
    pub fn new(h: &CMat, y: &[Complex64], rho: f64) -> Result<Self> {
        let a = numerics::gram(h, rho)?;
        let b = numerics::adjoint_matvec(h, y)?;
        System::from_parts(a, b, rho)
    }

    /// Build from a precomputed Gram matrix (`rho` already folded in) and
    /// matched-filter vector. A zero (or negative) diagonal entry is a hard
    /// error: it breaks every `D^{-1}` in the pipeline.
    pub fn from_parts(a: CMat, b: Vec<Complex64>, rho: f64) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::Dimension("system Gram matrix must be square".into()));
        }
        if b.len() != n {
            return Err(Error::Dimension(format!(
                "system b has length {}, Gram matrix is {}x{}",
                b.len(),
                n,
                n
            )));
        }
        let mut d = Vec::with_capacity(n);
        let mut d_inv = Vec::with_capacity(n);
        for j in 0..n {
            let djj = a.get(j, j).re;
            if !(djj > 0.0) || !djj.is_finite() {
                return Err(Error::ZeroDiagonal(j));
            }
            d.push(djj);
            d_inv.push(1.0 / djj);
        }
        Ok(System { n, rho, a, d, d_inv, b })
    }

    /// Same Gram matrix under a different regularization (diagonal shift).
    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        let mut a = self.a.clone();
        a.add_real_diagonal(rho - self.rho);
        System::from_parts(a, self.b.clone(), rho)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn a(&self) -> &CMat {
        &self.a
    }

    pub fn b(&self) -> &[Complex64] {
        &self.b
    }

    pub fn diag(&self) -> &[f64] {
        &self.d
    }

    /// Entry (i, k) of the hollow matrix `F = I - D^{-1} A`.
    pub fn f_entry(&self, i: usize, k: usize) -> Complex64 {
        if i == k {
            Complex64::new(0.0, 0.0)
        } else {
            -self.a.get(i, k) * self.d_inv[i]
        }
    }

    /// Materialized `F`, for spectral diagnostics.
    pub fn f_matrix(&self) -> CMat {
        CMat::from_fn(self.n, self.n, |i, k| self.f_entry(i, k))
    }

    /// `F v` without materializing `F`.
    pub fn apply_f(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        let av = numerics::matvec(&self.a, v)?;
        Ok(v.iter()
            .zip(av.iter())
            .zip(self.d_inv.iter())
            .map(|((vi, avi), di)| vi - avi * di)
            .collect())
    }

    /// Residual `b - A z`.
    pub fn residual(&self, z: &[Complex64]) -> Result<Vec<Complex64>> {
        let az = numerics::matvec(&self.a, z)?;
        Ok(self.b.iter().zip(az.iter()).map(|(bi, ai)| bi - ai).collect())
    }
}

/// One Jacobi update `z + D^{-1}(b - A z)`: a single `A`-matvec (`N^2` MACs)
/// plus the diagonal scaling (`N` MACs).
pub fn jacobi_step(sys: &System, z: &[Complex64]) -> Result<Vec<Complex64>> {
    let r = sys.residual(z)?;
    Ok(z.iter()
        .zip(r.iter())
        .zip(sys.d_inv.iter())
        .map(|((zi, ri), di)| zi + ri * di)
        .collect())
}

/// Matched filter: slice of the per-stream normalized estimate `D^{-1} b`.
///
/// Requires a system built with `rho = 0` so `D` holds the raw column
/// energies.
pub fn detect_mf(sys: &System, c: &Constellation) -> Result<DetectorOutput> {
    if sys.rho != 0.0 {
        return Err(Error::InvalidArgument(
            "matched filter needs a rho = 0 system".into(),
        ));
    }
    let soft: Vec<Complex64> = sys
        .b
        .iter()
        .zip(sys.d_inv.iter())
        .map(|(bi, di)| bi * di)
        .collect();
    let decision = modem::slice(c, &soft)?;
    let op = OpCount {
        step_macs: sys.n as u64,
        ..OpCount::default()
    };
    Ok(DetectorOutput::plain(decision, Some(soft), op))
}

/// Soft regularized zero-forcing solution `A^{-1} b` via the chosen solver.
///
/// Returns the estimate, the MAC count, and the achieved relative residual
/// for iterative solvers (`None` for the direct factorization).
pub fn rzf_soft(sys: &System, solver: &RzfSolver) -> Result<(Vec<Complex64>, u64, Option<f64>)> {
    let n = sys.n;
    match solver {
        RzfSolver::Direct => {
            let f = CholeskyFactor::factor(&sys.a)?;
            let x = f.solve(&sys.b)?;
            Ok((x, f.factor_macs() + f.solve_macs(), None))
        }
        RzfSolver::JacobiIter { iters } => {
            let mut z = vec![Complex64::new(0.0, 0.0); n];
            let mut macs = 0u64;
            for _ in 0..*iters {
                z = jacobi_step(sys, &z)?;
                macs += (n * n + n) as u64;
            }
            let r = sys.residual(&z)?;
            macs += (n * n + n) as u64;
            let rel = (numerics::norm_sq(&r) / numerics::norm_sq(&sys.b).max(f64::MIN_POSITIVE))
                .sqrt();
            Ok((z, macs, Some(rel)))
        }
        RzfSolver::ConjugateGradient { iters, tol } => {
            let b_norm = numerics::norm_sq(&sys.b).sqrt().max(f64::MIN_POSITIVE);
            let mut x = vec![Complex64::new(0.0, 0.0); n];
            let mut r = sys.b.clone();
            let mut p = r.clone();
            let mut rs_old = numerics::norm_sq(&r);
            let mut macs = n as u64;
            let mut rel = rs_old.sqrt() / b_norm;
            for _ in 0..*iters {
                if rel <= *tol {
                    break;
                }
                let ap = numerics::matvec(&sys.a, &p)?;
                let denom = numerics::dot_conj(&p, &ap).re;
                macs += (n * n + n) as u64;
                if denom <= 0.0 || !denom.is_finite() {
                    return Err(Error::NotPositiveDefinite);
                }
                let alpha = rs_old / denom;
                for ((xi, pi), (ri, api)) in
                    x.iter_mut().zip(p.iter()).zip(r.iter_mut().zip(ap.iter()))
                {
                    *xi += alpha * pi;
                    *ri -= alpha * api;
                }
                macs += 2 * n as u64;
                let rs_new = numerics::norm_sq(&r);
                macs += n as u64;
                let beta = rs_new / rs_old;
                for (pi, ri) in p.iter_mut().zip(r.iter()) {
                    *pi = ri + beta * *pi;
                }
                macs += n as u64;
                rs_old = rs_new;
                rel = rs_new.sqrt() / b_norm;
            }
            Ok((x, macs, Some(rel)))
        }
    }
}

/// Regularized zero forcing: slice of `A^{-1} b`.
pub fn detect_rzf(sys: &System, c: &Constellation, solver: &RzfSolver) -> Result<DetectorOutput> {
    let (soft, macs, rel) = rzf_soft(sys, solver)?;
    let decision = modem::slice(c, &soft)?;
    let mut out = DetectorOutput::plain(
        decision,
        Some(soft),
        OpCount {
            step_macs: macs,
            ..OpCount::default()
        },
    );
    out.solver_rel_residual = rel;
    Ok(out)
}

/// Classical (unprojected) Jacobi detector: `T` sweeps from zero, then slice.
pub fn detect_jacobi(sys: &System, c: &Constellation, iterations: usize) -> Result<DetectorOutput> {
    if iterations < 1 {
        return Err(Error::InvalidArgument(
            "Jacobi detector needs at least one iteration".into(),
        ));
    }
    detect_rzf(sys, c, &RzfSolver::JacobiIter { iters: iterations })
}

/// Projected Jacobi.
///
/// Starting from the configured initializer decision `z_0`, each iteration
/// runs one Jacobi update on the current decision and re-slices:
/// `x_{t+1} = z_t + D^{-1}(b - A z_t)`, `z_{t+1} = S(x_{t+1})`. The output is
/// the candidate with the smallest residual `||b - A z_t||^2`. A nontrivial
/// initializer joins the candidate set, so the selected residual can never
/// exceed the initializer's; ties resolve to the earliest iteration.
///
/// Per-iteration step cost is exactly `N^2 + N` MACs; residual norms and the
/// one extra matvec needed to score the final candidate are tallied
/// separately as selection overhead.
pub fn detect_pj(sys: &System, c: &Constellation, cfg: &DetectorConfig) -> Result<DetectorOutput> {
    if cfg.kind != DetectorKind::Pj {
        return Err(Error::InvalidArgument("detect_pj needs a Pj config".into()));
    }
    cfg.validate()?;
    let n = sys.n;
    let t_max = cfg.iterations;
    let mut op = OpCount::default();
    let mut solver_rel_residual = None;

    // Initializer.
    let (mut z_vals, mut z_sym, mut soft_of_z, include_z0) = match &cfg.init {
        InitKind::Zero => (vec![Complex64::new(0.0, 0.0); n], None, None, false),
        InitKind::Mf => {
            let soft: Vec<Complex64> = sys
                .b
                .iter()
                .zip(sys.d_inv.iter())
                .map(|(bi, di)| bi * di)
                .collect();
            op.init_macs += n as u64;
            let sym = modem::slice(c, &soft)?;
            (sym.values(c), Some(sym), Some(soft), true)
        }
        InitKind::Rzf { rho, solver } => {
            let owned;
            let init_sys = if *rho == sys.rho {
                sys
            } else {
                owned = sys.with_rho(*rho)?;
                &owned
            };
            let (soft, macs, rel) = rzf_soft(init_sys, solver)?;
            op.init_macs += macs;
            solver_rel_residual = rel;
            let sym = modem::slice(c, &soft)?;
            (sym.values(c), Some(sym), Some(soft), true)
        }
    };

    struct Best {
        t: usize,
        sym: SymbolVector,
        soft: Option<Vec<Complex64>>,
        r2: f64,
    }
    let mut best: Option<Best> = None;
    let mut history = Vec::with_capacity(t_max + 1);
    let consider = |best: &mut Option<Best>, t, sym, soft, r2| {
        if best.as_ref().map_or(true, |b| r2 < b.r2) {
            *best = Some(Best { t, sym, soft, r2 });
        }
    };

    for t in 0..t_max {
        // r = b - A z_t feeds both the update and (when z_t is a candidate)
        // the selection metric.
        let r = sys.residual(&z_vals)?;
        op.step_macs += (n * n) as u64;
        if t > 0 || include_z0 {
            let r2 = numerics::norm_sq(&r);
            op.residual_macs += n as u64;
            history.push(r2);
            consider(
                &mut best,
                t,
                z_sym.take().expect("candidate decisions exist for t > 0"),
                soft_of_z.take(),
                r2,
            );
        }
        let x_next: Vec<Complex64> = z_vals
            .iter()
            .zip(r.iter())
            .zip(sys.d_inv.iter())
            .map(|((zi, ri), di)| zi + ri * di)
            .collect();
        op.step_macs += n as u64;
        let z_next = modem::slice(c, &x_next)?;
        z_vals = z_next.values(c);
        z_sym = Some(z_next);
        soft_of_z = Some(x_next);
    }

    // Score the final decision z_T (one extra matvec, selection overhead).
    let r = sys.residual(&z_vals)?;
    let r2 = numerics::norm_sq(&r);
    op.residual_macs += (n * n + n) as u64;
    history.push(r2);
    consider(
        &mut best,
        t_max,
        z_sym.take().expect("final decision exists"),
        soft_of_z.take(),
        r2,
    );

    let best = best.expect("candidate set is nonempty");
    Ok(DetectorOutput {
        decision: best.sym,
        soft: best.soft,
        t_star: best.t,
        residual_history: history,
        solver_rel_residual,
        op,
    })
}

/// Matched-filter bound: genie detector with the inter-stream interference
/// removed perfectly, `S(x + D^{-1} H^H v)` with `D` from the `rho = 0` Gram
/// diagonal. A per-detector performance floor, not a realizable receiver.
pub fn detect_mfb(
    h: &CMat,
    x: &SymbolVector,
    v: &[Complex64],
    c: &Constellation,
) -> Result<DetectorOutput> {
    let n = h.cols();
    if x.len() != n {
        return Err(Error::Dimension(format!(
            "mfb: {} symbols for a {}-column channel",
            x.len(),
            n
        )));
    }
    let mut op = OpCount::default();
    let w = numerics::adjoint_matvec(h, v)?;
    op.step_macs += (h.rows() * n) as u64;
    let mut soft = Vec::with_capacity(n);
    for j in 0..n {
        let djj = numerics::norm_sq(h.col(j));
        op.step_macs += h.rows() as u64;
        if !(djj > 0.0) || !djj.is_finite() {
            return Err(Error::ZeroDiagonal(j));
        }
        soft.push(c.point(x.indices[j]) + w[j] / djj);
    }
    op.step_macs += n as u64;
    let decision = modem::slice(c, &soft)?;
    Ok(DetectorOutput::plain(decision, Some(soft), op))
}

/// Exhaustive maximum-likelihood detection: argmin of `||y - H x||^2` over
/// the full alphabet lattice, rejected when `J^N` exceeds `cap`.
///
/// Depth-first enumeration in lexicographic index order with strictly-less
/// comparisons, so ties resolve to the lexicographically smallest candidate.
pub fn detect_mld(
    h: &CMat,
    y: &[Complex64],
    c: &Constellation,
    cap: u128,
) -> Result<DetectorOutput> {
    let m = h.rows();
    let n = h.cols();
    if y.len() != m {
        return Err(Error::Dimension(format!(
            "mld: observation length {} for a {}-row channel",
            y.len(),
            m
        )));
    }
    let space = (c.order() as u128)
        .checked_pow(n as u32)
        .unwrap_or(u128::MAX);
    if space > cap {
        return Err(Error::EnumerationCap {
            space: space as f64,
            cap: cap as f64,
        });
    }

    // layers[d] = y - sum_{j < d} h_j x_j for the current prefix.
    let mut layers = vec![vec![Complex64::new(0.0, 0.0); m]; n + 1];
    layers[0].copy_from_slice(y);
    let mut current = vec![0usize; n];
    let mut best_metric = f64::INFINITY;
    let mut best = vec![0usize; n];
    let mut op = OpCount::default();

    fn dfs(
        depth: usize,
        h: &CMat,
        c: &Constellation,
        layers: &mut [Vec<Complex64>],
        current: &mut [usize],
        best_metric: &mut f64,
        best: &mut [usize],
        op: &mut OpCount,
    ) {
        let n = h.cols();
        let m = h.rows();
        if depth == n {
            let metric = numerics::norm_sq(&layers[n]);
            op.step_macs += m as u64;
            op.candidates += 1;
            if metric < *best_metric {
                *best_metric = metric;
                best.copy_from_slice(current);
            }
            return;
        }
        let col = depth;
        for idx in 0..c.order() {
            let point = c.point(idx);
            let (head, tail) = layers.split_at_mut(depth + 1);
            let src = &head[depth];
            let dst = &mut tail[0];
            for i in 0..m {
                dst[i] = src[i] - h.get(i, col) * point;
            }
            op.step_macs += m as u64;
            current[depth] = idx;
            dfs(depth + 1, h, c, layers, current, best_metric, best, op);
        }
    }

    dfs(
        0,
        h,
        c,
        &mut layers,
        &mut current,
        &mut best_metric,
        &mut best,
        &mut op,
    );

    Ok(DetectorOutput::plain(
        SymbolVector { indices: best },
        None,
        op,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{generate_iid, ChannelConfig};
    use crate::numerics::{
        adjoint_matvec, draw_complex_gaussian, matvec, norm_sq, solve_hermitian, spectral_radius,
        SeededRng,
    };

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// One full noisy trial's worth of raw material.
    struct Trial {
        h: CMat,
        x: SymbolVector,
        v: Vec<Complex64>,
        y: Vec<Complex64>,
    }

    fn make_trial(
        m: usize,
        n: usize,
        c: &Constellation,
        sigma_v_sq: f64,
        seed: u64,
    ) -> Trial {
        let mut rng = SeededRng::new(seed, 0);
        let real = generate_iid(&ChannelConfig::iid(m, n, 1.0), &mut rng).unwrap();
        let x = modem::draw_symbols(c, n, &mut rng);
        let v = draw_complex_gaussian(&mut rng, m, sigma_v_sq).unwrap();
        let hx = matvec(&real.h, &x.values(c)).unwrap();
        let y: Vec<Complex64> = hx.iter().zip(&v).map(|(a, b)| a + b).collect();
        Trial { h: real.h, x, v, y }
    }

    #[test]
    fn mf_recovers_symbols_through_identity_channel() {
        let c = Constellation::make_qam(16, 1.0).unwrap();
        let h = CMat::identity(4);
        let mut rng = SeededRng::new(3, 0);
        let x = modem::draw_symbols(&c, 4, &mut rng);
        let y = x.values(&c);
        let sys = System::new(&h, &y, 0.0).unwrap();
        let out = detect_mf(&sys, &c).unwrap();
        assert_eq!(out.decision, x);
        assert_eq!(out.op.step_macs, 4);
    }

    #[test]
    fn mf_matches_independent_formula_reimplementation() {
        let c = Constellation::make_qam(16, 1.0).unwrap();
        let t = make_trial(8, 3, &c, 0.05, 17);
        let sys = System::new(&t.h, &t.y, 0.0).unwrap();
        let out = detect_mf(&sys, &c).unwrap();

        // Rebuild slice(diag(H^H H)^{-1} H^H y) with raw loops.
        let mut expected = Vec::new();
        for j in 0..3 {
            let mut num = c64(0.0, 0.0);
            let mut den = 0.0;
            for i in 0..8 {
                num += t.h.get(i, j).conj() * t.y[i];
                den += t.h.get(i, j).norm_sqr();
            }
            expected.push(num / den);
        }
        let expected = modem::slice(&c, &expected).unwrap();
        assert_eq!(out.decision, expected);
    }

    #[test]
    fn mf_requires_unregularized_system() {
        let c = Constellation::make_qam(4, 1.0).unwrap();
        let t = make_trial(4, 2, &c, 0.1, 5);
        let sys = System::new(&t.h, &t.y, 0.5).unwrap();
        assert!(detect_mf(&sys, &c).is_err());
    }

    #[test]
    fn zero_gram_diagonal_is_a_hard_error() {
        let mut h = CMat::zeros(4, 2);
        for i in 0..4 {
            h.set(i, 0, c64(1.0, 0.0));
        }
        // Column 1 all zero -> zero diagonal at rho = 0.
        let y = vec![c64(1.0, 0.0); 4];
        match System::new(&h, &y, 0.0) {
            Err(Error::ZeroDiagonal(1)) => {}
            other => panic!("expected ZeroDiagonal(1), got {other:?}"),
        }
    }

    #[test]
    fn rzf_noiseless_zero_forcing_is_exact() {
        let c = Constellation::make_qam(16, 1.0).unwrap();
        let t = make_trial(12, 6, &c, 0.0, 23);
        let sys = System::new(&t.h, &t.y, 0.0).unwrap();
        let out = detect_rzf(&sys, &c, &RzfSolver::Direct).unwrap();
        let soft = out.soft.unwrap();
        let truth = t.x.values(&c);
        for (s, x) in soft.iter().zip(&truth) {
            assert!((s - x).norm() < 1e-9);
        }
        assert_eq!(out.decision, t.x);
    }

    #[test]
    fn lmmse_approaches_zero_forcing_as_noise_vanishes() {
        let c = Constellation::make_qam(16, 1.0).unwrap();
        let t = make_trial(12, 6, &c, 0.01, 31);
        let zf = detect_rzf(
            &System::new(&t.h, &t.y, 0.0).unwrap(),
            &c,
            &RzfSolver::Direct,
        )
        .unwrap();
        let mut prev_gap = f64::INFINITY;
        for sigma_v_sq in [1e-2, 1e-4, 1e-6] {
            let rho = sigma_v_sq / c.sigma_x_sq();
            let lmmse = detect_rzf(
                &System::new(&t.h, &t.y, rho).unwrap(),
                &c,
                &RzfSolver::Direct,
            )
            .unwrap();
            let gap: f64 = lmmse
                .soft
                .as_ref()
                .unwrap()
                .iter()
                .zip(zf.soft.as_ref().unwrap())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(gap < prev_gap);
            prev_gap = gap;
        }
        assert!(prev_gap < 1e-5);
    }

    #[test]
    fn jacobi_solver_agrees_with_direct_on_well_conditioned_system() {
        // Jacobi only contracts when the iteration matrix has spectral
        // radius below one; regularization keeps this 16x8 system there.
        let c = Constellation::make_qam(4, 1.0).unwrap();
        let t = make_trial(16, 8, &c, 0.05, 47);
        let sys = System::new(&t.h, &t.y, 1.5).unwrap();
        let rho_f = spectral_radius(&sys.f_matrix(), 600, 2).unwrap();
        assert!(rho_f < 0.95, "test setup: spectral radius {rho_f}");
        let direct = detect_rzf(&sys, &c, &RzfSolver::Direct).unwrap();
        let jac = detect_rzf(&sys, &c, &RzfSolver::JacobiIter { iters: 400 }).unwrap();
        let gap: f64 = jac
            .soft
            .as_ref()
            .unwrap()
            .iter()
            .zip(direct.soft.as_ref().unwrap())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(gap < 1e-6, "gap {gap}");
        assert!(jac.solver_rel_residual.unwrap() < 1e-6);
    }

    #[test]
    fn conjugate_gradient_reaches_direct_solution() {
        let c = Constellation::make_qam(4, 1.0).unwrap();
        let t = make_trial(32, 8, &c, 0.05, 53);
        let sys = System::new(&t.h, &t.y, 0.05).unwrap();
        let direct = detect_rzf(&sys, &c, &RzfSolver::Direct).unwrap();
        let cg = detect_rzf(
            &sys,
            &c,
            &RzfSolver::ConjugateGradient { iters: 64, tol: 1e-12 },
        )
        .unwrap();
        let gap: f64 = cg
            .soft
            .as_ref()
            .unwrap()
            .iter()
            .zip(direct.soft.as_ref().unwrap())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(gap < 1e-8, "gap {gap}");
    }

    #[test]
    fn jacobi_step_fixed_point_and_diagonal_cases() {
        let c = Constellation::make_qam(4, 1.0).unwrap();
        let t = make_trial(8, 4, &c, 0.1, 61);
        let sys = System::new(&t.h, &t.y, 0.2).unwrap();
        let sol = solve_hermitian(sys.a(), sys.b()).unwrap();
        let stepped = jacobi_step(&sys, &sol).unwrap();
        for (a, b) in stepped.iter().zip(&sol) {
            assert!((a - b).norm() < 1e-12);
        }

        // Diagonal A: one step from anywhere reaches the solution.
        let h = CMat::from_rows(&[
            &[c64(2.0, 0.0), c64(0.0, 0.0)],
            &[c64(0.0, 0.0), c64(0.5, 0.0)],
        ]);
        let y = vec![c64(1.0, 1.0), c64(-2.0, 0.5)];
        let dsys = System::new(&h, &y, 0.0).unwrap();
        let sol = solve_hermitian(dsys.a(), dsys.b()).unwrap();
        let stepped = jacobi_step(&dsys, &[c64(5.0, -3.0), c64(0.1, 9.0)]).unwrap();
        for (a, b) in stepped.iter().zip(&sol) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn jacobi_iterates_converge_under_small_spectral_radius() {
        let c = Constellation::make_qam(4, 1.0).unwrap();
        let t = make_trial(64, 8, &c, 0.05, 71);
        let sys = System::new(&t.h, &t.y, 0.0).unwrap();
        let rho_f = spectral_radius(&sys.f_matrix(), 600, 1).unwrap();
        assert!(rho_f < 0.95, "test setup needs a contractive F, got {rho_f}");
        let sol = solve_hermitian(sys.a(), sys.b()).unwrap();
        let mut z = vec![c64(0.0, 0.0); 8];
        for _ in 0..400 {
            z = jacobi_step(&sys, &z).unwrap();
        }
        let err: f64 = z
            .iter()
            .zip(&sol)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(err / norm_sq(&sol).sqrt() < 1e-8);
    }

    #[test]
    fn jacobi_step_error_contraction_is_linear_in_f() {
        // step(z) - sol = F (z - sol): the one-step error map is exactly F.
        let c = Constellation::make_qam(4, 1.0).unwrap();
        let t = make_trial(16, 6, &c, 0.1, 83);
        let sys = System::new(&t.h, &t.y, 0.3).unwrap();
        let sol = solve_hermitian(sys.a(), sys.b()).unwrap();
        let mut rng = SeededRng::new(9, 0);
        let z = draw_complex_gaussian(&mut rng, 6, 4.0).unwrap();
        let lhs: Vec<Complex64> = jacobi_step(&sys, &z)
            .unwrap()
            .iter()
            .zip(&sol)
            .map(|(a, b)| a - b)
            .collect();
        let diff: Vec<Complex64> = z.iter().zip(&sol).map(|(a, b)| a - b).collect();
        let rhs = sys.apply_f(&diff).unwrap();
        let scale = norm_sq(&rhs).sqrt().max(1.0);
        for (l, r) in lhs.iter().zip(&rhs) {
            assert!((l - r).norm() / scale < 1e-10);
        }
    }

    #[test]
    fn pj_with_exact_initializer_and_no_noise_keeps_truth() {
        let c = Constellation::make_qam(16, 1.0).unwrap();
        let t = make_trial(12, 6, &c, 0.0, 89);
        let sys = System::new(&t.h, &t.y, 0.0).unwrap();
        let cfg = DetectorConfig::pj(
            3,
            InitKind::Rzf {
                rho: 0.0,
                solver: RzfSolver::Direct,
            },
        );
        let out = detect_pj(&sys, &c, &cfg).unwrap();
        assert_eq!(out.decision, t.x);
        assert_eq!(out.t_star, 0);
        assert!(out.residual_history[0] < 1e-18);
    }

    #[test]
    fn pj_on_identity_channel_slices_the_observation() {
        let c = Constellation::make_qam(4, 1.0).unwrap();
        let h = CMat::identity(5);
        let mut rng = SeededRng::new(7, 0);
        let x = modem::draw_symbols(&c, 5, &mut rng);
        let v = draw_complex_gaussian(&mut rng, 5, 0.3).unwrap();
        let y: Vec<Complex64> = x
            .values(&c)
            .iter()
            .zip(&v)
            .map(|(a, b)| a + b)
            .collect();
        let sys = System::new(&h, &y, 0.0).unwrap();
        let direct = modem::slice(&c, &y).unwrap();
        for t_max in [1usize, 3, 5] {
            let out =
                detect_pj(&sys, &c, &DetectorConfig::pj(t_max, InitKind::Zero)).unwrap();
            assert_eq!(out.decision, direct);
        }
    }

    #[test]
    fn pj_zero_init_first_candidate_is_the_mf_decision() {
        let c = Constellation::make_qam(16, 1.0).unwrap();
        let t = make_trial(8, 4, &c, 0.2, 97);
        let sys = System::new(&t.h, &t.y, 0.0).unwrap();
        let mf = detect_mf(&sys, &c).unwrap();
        let pj = detect_pj(&sys, &c, &DetectorConfig::pj(1, InitKind::Zero)).unwrap();
        // With T = 1 and a zero start the only candidate is z_1 = S(D^{-1} b).
        assert_eq!(pj.decision, mf.decision);
        assert_eq!(pj.t_star, 1);
        assert_eq!(pj.residual_history.len(), 1);
    }

    #[test]
    fn pj_selected_residual_never_exceeds_the_initializers() {
        let c = Constellation::make_qam(4, 1.0).unwrap();
        for seed in 0..200 {
            let t = make_trial(16, 4, &c, 0.2, 1000 + seed);
            let sys = System::new(&t.h, &t.y, 0.0).unwrap();
            let cfg = DetectorConfig::pj(
                4,
                InitKind::Rzf {
                    rho: 0.0,
                    solver: RzfSolver::Direct,
                },
            );
            let out = detect_pj(&sys, &c, &cfg).unwrap();
            let r0 = out.residual_history[0];
            let selected = out.residual_history[match out.t_star {
                t => t, // candidate list starts at t = 0 here
            }];
            assert!(selected <= r0 + 1e-15, "seed {seed}");
            assert_eq!(
                out.residual_history
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min),
                selected,
                "selected candidate must be the argmin"
            );
        }
    }

    #[test]
    fn pj_op_counts_follow_the_square_order_model() {
        let c = Constellation::make_qam(4, 1.0).unwrap();
        for n in [4usize, 16] {
            let t = make_trial(4 * n, n, &c, 0.1, 7 + n as u64);
            let sys = System::new(&t.h, &t.y, 0.0).unwrap();
            let t_max = 3;
            let cfg = DetectorConfig::pj(
                t_max,
                InitKind::Rzf {
                    rho: 0.0,
                    solver: RzfSolver::Direct,
                },
            );
            let out = detect_pj(&sys, &c, &cfg).unwrap();
            assert_eq!(out.op.step_macs, (t_max * (n * n + n)) as u64);
            // Selection: one extra matvec plus one norm per candidate.
            assert_eq!(
                out.op.residual_macs,
                (n * n + (t_max + 1) * n) as u64
            );
        }
    }

    #[test]
    fn mfb_is_exact_without_noise_and_single_stream_matches_mf() {
        let c = Constellation::make_qam(16, 1.0).unwrap();
        let t = make_trial(8, 4, &c, 0.0, 113);
        let out = detect_mfb(&t.h, &t.x, &t.v, &c).unwrap();
        assert_eq!(out.decision, t.x);

        // N = 1: interference-free, so MF, MFB (and RZF, PJ) coincide.
        let c4 = Constellation::make_qam(4, 1.0).unwrap();
        let t1 = make_trial(16, 1, &c4, 0.4, 127);
        let sys = System::new(&t1.h, &t1.y, 0.0).unwrap();
        let mf = detect_mf(&sys, &c4).unwrap();
        let mfb = detect_mfb(&t1.h, &t1.x, &t1.v, &c4).unwrap();
        let rzf = detect_rzf(&sys, &c4, &RzfSolver::Direct).unwrap();
        let pj = detect_pj(&sys, &c4, &DetectorConfig::pj(2, InitKind::Mf)).unwrap();
        assert_eq!(mf.decision, mfb.decision);
        assert_eq!(mf.decision, rzf.decision);
        assert_eq!(mf.decision, pj.decision);
    }

    #[test]
    fn mfb_per_stream_error_rate_matches_awgn_closed_form() {
        // Large aperture, single stream: error rate approaches
        // K * Q(sqrt(||h||^2 d_min^2 / (2 sigma_v^2))).
        let c = Constellation::make_qam(4, 1.0).unwrap();
        let m = 1024;
        let mut rng = SeededRng::new(201, 0);
        let real = generate_iid(&ChannelConfig::iid(m, 1, 1.0), &mut rng).unwrap();
        let gain = norm_sq(real.h.col(0));
        let sigma_v_sq = gain * c.d_min() * c.d_min() / (2.0 * 2.4f64.powi(2));
        let arg = (gain * c.d_min() * c.d_min() / (2.0 * sigma_v_sq)).sqrt();
        let q = 0.5 * libm::erfc(arg / std::f64::consts::SQRT_2);
        let predicted = c.neighbor_avg() * q - q * q; // exact per-axis QPSK SER
        let trials = 200_000u64;
        let mut errors = 0u64;
        for _ in 0..trials {
            let x = modem::draw_symbols(&c, 1, &mut rng);
            let v = draw_complex_gaussian(&mut rng, m, sigma_v_sq).unwrap();
            let out = detect_mfb(&real.h, &x, &v, &c).unwrap();
            errors += u64::from(out.decision.indices[0] != x.indices[0]);
        }
        let ser = errors as f64 / trials as f64;
        let std3 = 3.0 * (predicted * (1.0 - predicted) / trials as f64).sqrt();
        assert!(
            (ser - predicted).abs() < std3,
            "ser {ser}, predicted {predicted}, 3sigma {std3}"
        );
    }

    #[test]
    fn mld_recovers_truth_without_noise_and_matches_slice_for_one_stream() {
        let c = Constellation::make_qam(4, 1.0).unwrap();
        let t = make_trial(8, 3, &c, 0.0, 131);
        let out = detect_mld(&t.h, &t.y, &c, DEFAULT_MLD_CAP).unwrap();
        assert_eq!(out.decision, t.x);

        let t1 = make_trial(8, 1, &c, 0.3, 137);
        let sys = System::new(&t1.h, &t1.y, 0.0).unwrap();
        let mf = detect_mf(&sys, &c).unwrap();
        let mld = detect_mld(&t1.h, &t1.y, &c, DEFAULT_MLD_CAP).unwrap();
        assert_eq!(mld.decision, mf.decision);
    }

    #[test]
    fn mld_matches_independent_nested_loop_enumerator() {
        let c = Constellation::make_qam(4, 1.0).unwrap();
        for seed in 0..100 {
            let t = make_trial(8, 3, &c, 0.5, 2000 + seed);
            let fast = detect_mld(&t.h, &t.y, &c, DEFAULT_MLD_CAP).unwrap();

            // Second enumerator: plain nested loops, full metric per candidate.
            let mut best = (f64::INFINITY, [0usize; 3]);
            for i0 in 0..4 {
                for i1 in 0..4 {
                    for i2 in 0..4 {
                        let cand = [c.point(i0), c.point(i1), c.point(i2)];
                        let mut metric = 0.0;
                        for row in 0..8 {
                            let mut acc = t.y[row];
                            for (col, s) in cand.iter().enumerate() {
                                acc -= t.h.get(row, col) * s;
                            }
                            metric += acc.norm_sqr();
                        }
                        if metric < best.0 {
                            best = (metric, [i0, i1, i2]);
                        }
                    }
                }
            }
            assert_eq!(fast.decision.indices, best.1, "seed {seed}");
        }
    }

    #[test]
    fn mld_counts_candidates_and_enforces_cap() {
        let c = Constellation::make_qam(4, 1.0).unwrap();
        let t = make_trial(6, 4, &c, 0.1, 139);
        let out = detect_mld(&t.h, &t.y, &c, DEFAULT_MLD_CAP).unwrap();
        assert_eq!(out.op.candidates, 256);
        match detect_mld(&t.h, &t.y, &c, 255) {
            Err(Error::EnumerationCap { .. }) => {}
            other => panic!("expected EnumerationCap, got {other:?}"),
        }
    }

    #[test]
    fn mld_separates_points_within_half_minimum_receive_distance() {
        // With ||v|| below half the minimum codeword distance in receive
        // space, the exhaustive search must return the transmitted vector.
        let c = Constellation::make_qam(4, 1.0).unwrap();
        let mut rng = SeededRng::new(149, 0);
        let real = generate_iid(&ChannelConfig::iid(8, 2, 1.0), &mut rng).unwrap();
        let x = modem::draw_symbols(&c, 2, &mut rng);
        // Minimum receive-space distance over all candidate pairs.
        let mut dmin_rx = f64::INFINITY;
        for a0 in 0..4 {
            for a1 in 0..4 {
                for b0 in 0..4 {
                    for b1 in 0..4 {
                        if (a0, a1) == (b0, b1) {
                            continue;
                        }
                        let diff = [
                            c.point(a0) - c.point(b0),
                            c.point(a1) - c.point(b1),
                        ];
                        let hd = matvec(&real.h, &diff).unwrap();
                        dmin_rx = dmin_rx.min(norm_sq(&hd).sqrt());
                    }
                }
            }
        }
        let mut v = draw_complex_gaussian(&mut rng, 8, 1.0).unwrap();
        let scale = 0.49 * dmin_rx / norm_sq(&v).sqrt();
        for z in v.iter_mut() {
            *z *= scale;
        }
        let hx = matvec(&real.h, &x.values(&c)).unwrap();
        let y: Vec<Complex64> = hx.iter().zip(&v).map(|(a, b)| a + b).collect();
        let out = detect_mld(&real.h, &y, &c, DEFAULT_MLD_CAP).unwrap();
        assert_eq!(out.decision, x);
    }

    #[test]
    fn detector_config_validation() {
        let mut cfg = DetectorConfig::pj(0, InitKind::Zero);
        assert!(cfg.validate().is_err());
        cfg.iterations = 1;
        assert!(cfg.validate().is_ok());
        cfg.rho = -0.5;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn adjoint_consistency_between_system_and_raw_ops() {
        let c = Constellation::make_qam(4, 1.0).unwrap();
        let t = make_trial(8, 3, &c, 0.1, 151);
        let sys = System::new(&t.h, &t.y, 0.0).unwrap();
        let b = adjoint_matvec(&t.h, &t.y).unwrap();
        for (a, bb) in sys.b().iter().zip(&b) {
            assert_eq!(a, bb);
        }
    }
}
