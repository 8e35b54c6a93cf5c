//! Dense complex linear algebra and deterministic random generation.
//!
//! Everything here is double precision and dense: channel matrices are dense
//! by model, and SER targets near 1e-5 leave no room for single precision.
//! All operations are pure functions of their inputs; matrices and vectors
//! are immutable after construction and safe to share across trial workers.

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

/// Dense complex matrix, column-major.
///
/// Column-major keeps channel columns `h_n` and Gram-matrix dot products
/// contiguous, which is where the simulation spends its time.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be >= 1");
        CMat {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    /// Build from a closure over (row, col).
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = CMat::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m.data[i + j * rows] = f(i, j);
            }
        }
        m
    }

    /// Build from row-major nested slices (convenient in tests).
    pub fn from_rows(rows: &[&[Complex64]]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        CMat::from_fn(r, c, |i, j| rows[i][j])
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i + j * self.rows]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i + j * self.rows] = v;
    }

    /// Contiguous column slice.
    #[inline]
    pub fn col(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest |A[i][j] - conj(A[j][i])| over all entries.
    pub fn hermitian_defect(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let mut worst = 0.0f64;
        for j in 0..self.cols {
            for i in 0..=j {
                let d = (self.get(i, j) - self.get(j, i).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Add `rho` to every diagonal entry (real shift).
    pub fn add_real_diagonal(&mut self, rho: f64) {
        assert_eq!(self.rows, self.cols);
        for i in 0..self.rows {
            let z = self.get(i, i);
            self.set(i, i, Complex64::new(z.re + rho, z.im));
        }
    }
}

/// `sum_i conj(a[i]) * b[i]`, the Hermitian inner product.
#[inline]
pub fn dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    // Two independent accumulator pairs so the FP dependency chain halves.
    let (mut re0, mut im0, mut re1, mut im1) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let n = a.len();
    let mut i = 0;
    while i + 1 < n {
        let (x, y) = (a[i], b[i]);
        re0 += x.re * y.re + x.im * y.im;
        im0 += x.re * y.im - x.im * y.re;
        let (x, y) = (a[i + 1], b[i + 1]);
        re1 += x.re * y.re + x.im * y.im;
        im1 += x.re * y.im - x.im * y.re;
        i += 2;
    }
    if i < n {
        let (x, y) = (a[i], b[i]);
        re0 += x.re * y.re + x.im * y.im;
        im0 += x.re * y.im - x.im * y.re;
    }
    Complex64::new(re0 + re1, im0 + im1)
}

/// Squared Euclidean norm `||v||^2`.
#[inline]
pub fn norm_sq(v: &[Complex64]) -> f64 {
    let mut acc = 0.0;
    for z in v {
        acc += z.re * z.re + z.im * z.im;
    }
    acc
}

/// `A * x` for a column-major matrix.
pub fn matvec(a: &CMat, x: &[Complex64]) -> Result<Vec<Complex64>> {
    if x.len() != a.cols() {
        return Err(Error::Dimension(format!(
            "matvec: matrix is {}x{}, vector has length {}",
            a.rows(),
            a.cols(),
            x.len()
        )));
    }
    let mut y = vec![Complex64::new(0.0, 0.0); a.rows()];
    for (j, &xj) in x.iter().enumerate() {
        let col = a.col(j);
        for (yi, &aij) in y.iter_mut().zip(col) {
            // y += a_ij * x_j, expanded to plain f64 so it vectorizes.
            let re = aij.re * xj.re - aij.im * xj.im;
            let im = aij.re * xj.im + aij.im * xj.re;
            yi.re += re;
            yi.im += im;
        }
    }
    Ok(y)
}

/// `H^H * y` (adjoint applied to an observation).
pub fn adjoint_matvec(h: &CMat, y: &[Complex64]) -> Result<Vec<Complex64>> {
    if y.len() != h.rows() {
        return Err(Error::Dimension(format!(
            "adjoint_matvec: matrix is {}x{}, vector has length {}",
            h.rows(),
            h.cols(),
            y.len()
        )));
    }
    Ok((0..h.cols()).map(|j| dot_conj(h.col(j), y)).collect())
}

/// Gram matrix `A = H^H H + rho * I`.
///
/// Hermitian by construction (the lower triangle mirrors the computed upper
/// triangle, diagonals forced real). Positive definite whenever `rho > 0` or
/// `H` has full column rank. Tall matrices only: the uplink model assumes at
/// least as many service antennas as user antennas.
pub fn gram(h: &CMat, rho: f64) -> Result<CMat> {
    if h.rows() < h.cols() {
        return Err(Error::Dimension(format!(
            "gram: {}x{} matrix is wide; expected rows >= cols",
            h.rows(),
            h.cols()
        )));
    }
    if !(rho >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "gram: regularization must be nonnegative, got {rho}"
        )));
    }
    if !h.is_finite() {
        return Err(Error::NonFinite("gram input"));
    }
    let n = h.cols();
    let mut a = CMat::zeros(n, n);
    for j in 0..n {
        for i in 0..j {
            let v = dot_conj(h.col(i), h.col(j));
            a.set(i, j, v);
            a.set(j, i, v.conj());
        }
        a.set(j, j, Complex64::new(norm_sq(h.col(j)) + rho, 0.0));
    }
    Ok(a)
}

/// Cholesky factorization `A = L L^H` of a Hermitian positive-definite matrix.
///
/// The factor is kept row-major so the inner dot products stay contiguous.
pub struct CholeskyFactor {
    n: usize,
    l: Vec<Complex64>, // row-major lower triangle (full storage)
    macs: u64,
}

impl CholeskyFactor {
    pub fn factor(a: &CMat) -> Result<Self> {
        if a.rows() != a.cols() {
            return Err(Error::Dimension("cholesky: matrix must be square".into()));
        }
        let n = a.rows();
        let mut l = vec![Complex64::new(0.0, 0.0); n * n];
        let mut macs = 0u64;
        for j in 0..n {
            // Diagonal: a_jj - sum_{k<j} |l_jk|^2 must stay positive.
            let mut d = a.get(j, j).re;
            let row_j = j * n;
            for k in 0..j {
                d -= l[row_j + k].norm_sqr();
            }
            macs += j as u64;
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite);
            }
            let djj = d.sqrt();
            l[row_j + j] = Complex64::new(djj, 0.0);
            for i in (j + 1)..n {
                let row_i = i * n;
                let mut s = a.get(i, j);
                for k in 0..j {
                    s -= l[row_i + k] * l[row_j + k].conj();
                }
                macs += j as u64;
                l[row_i + j] = s / djj;
            }
        }
        Ok(CholeskyFactor { n, l, macs })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Complex multiply-accumulate count of the factorization.
    pub fn factor_macs(&self) -> u64 {
        self.macs
    }

    /// Solve `A x = b` via forward/backward substitution.
    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        if b.len() != self.n {
            return Err(Error::Dimension(format!(
                "cholesky solve: expected rhs of length {}, got {}",
                self.n,
                b.len()
            )));
        }
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let row = i * n;
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[row + k] * y[k];
            }
            y[i] = s / self.l[row + i].re;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                // (L^H)_{ik} = conj(L_{ki})
                s -= self.l[k * n + i].conj() * y[k];
            }
            y[i] = s / self.l[i * n + i].re;
        }
        Ok(y)
    }

    /// MACs consumed by one `solve` call (two triangular sweeps).
    pub fn solve_macs(&self) -> u64 {
        (self.n * self.n) as u64
    }

    /// Diagonal of `A^{-1}`: `[A^{-1}]_kk = || L^{-1} e_k ||^2`.
    pub fn inverse_diagonal(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n];
        let mut u = vec![Complex64::new(0.0, 0.0); n];
        for k in 0..n {
            for z in u.iter_mut() {
                *z = Complex64::new(0.0, 0.0);
            }
            u[k] = Complex64::new(1.0, 0.0);
            // Forward solve L u = e_k; entries before k stay zero.
            for i in k..n {
                let row = i * n;
                let mut s = u[i];
                for j in k..i {
                    s -= self.l[row + j] * u[j];
                }
                u[i] = s / self.l[row + i].re;
            }
            out[k] = norm_sq(&u[k..]);
        }
        out
    }
}

/// Solve `A x = b` for Hermitian positive-definite `A`.
///
/// Backward error `||A x - b|| / ||b||` lands near machine precision for
/// well-conditioned systems; a failed factorization reports
/// [`Error::NotPositiveDefinite`].
pub fn solve_hermitian(a: &CMat, b: &[Complex64]) -> Result<Vec<Complex64>> {
    CholeskyFactor::factor(a)?.solve(b)
}

/// Eigenvalues of a Hermitian matrix via cyclic complex Jacobi rotations.
///
/// Returned in ascending order. Quadratically convergent; intended for
/// diagnostics (condition numbers), not for the per-trial hot path.
pub fn hermitian_eigenvalues(a: &CMat) -> Result<Vec<f64>> {
    if a.rows() != a.cols() {
        return Err(Error::Dimension("eigenvalues: matrix must be square".into()));
    }
    let n = a.rows();
    let mut m = a.clone();
    let scale = m.max_abs().max(1e-300);
    let tol = 1e-14 * scale;
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m.get(p, q).norm());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let gamma = m.get(p, q);
                let g = gamma.norm();
                if g <= tol * 1e-2 {
                    continue;
                }
                let alpha = m.get(p, p).re;
                let beta = m.get(q, q).re;
                let phase = gamma / g; // e^{i phi}
                let tau = (alpha - beta) / (2.0 * g);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Columns p and q rotate; rows follow by Hermitian symmetry.
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = m.get(r, p);
                    let arq = m.get(r, q);
                    let new_rp = c * arp + s * phase.conj() * arq;
                    let new_rq = -s * phase * arp + c * arq;
                    m.set(r, p, new_rp);
                    m.set(p, r, new_rp.conj());
                    m.set(r, q, new_rq);
                    m.set(q, r, new_rq.conj());
                }
                let new_pp = c * c * alpha + s * s * beta + 2.0 * c * s * g;
                let new_qq = s * s * alpha + c * c * beta - 2.0 * c * s * g;
                m.set(p, p, Complex64::new(new_pp, 0.0));
                m.set(q, q, Complex64::new(new_qq, 0.0));
                m.set(p, q, Complex64::new(0.0, 0.0));
                m.set(q, p, Complex64::new(0.0, 0.0));
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| m.get(i, i).re).collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(eigs)
}

/// Spectral-radius estimate for a general square matrix via the power method.
///
/// Tracks the log-growth of `||M^k x||` and reports the slope over the tail
/// window, which stays stable even when the dominant eigenvalues are a
/// complex-conjugate pair.
pub fn spectral_radius(m: &CMat, iters: usize, seed: u64) -> Result<f64> {
    if m.rows() != m.cols() {
        return Err(Error::Dimension("spectral_radius: matrix must be square".into()));
    }
    let n = m.rows();
    let mut rng = SeededRng::new(seed, 0);
    let mut x = draw_complex_gaussian(&mut rng, n, 1.0)?;
    let nrm = norm_sq(&x).sqrt();
    if nrm == 0.0 {
        return Ok(0.0);
    }
    for z in x.iter_mut() {
        *z /= nrm;
    }
    let iters = iters.max(8);
    let mut log_growth = Vec::with_capacity(iters);
    for _ in 0..iters {
        let y = matvec(m, &x)?;
        let g = norm_sq(&y).sqrt();
        if g == 0.0 {
            return Ok(0.0);
        }
        log_growth.push(g.ln());
        x = y;
        for z in x.iter_mut() {
            *z /= g;
        }
    }
    let tail = &log_growth[iters / 2..];
    Ok((tail.iter().sum::<f64>() / tail.len() as f64).exp())
}

/// Deterministic, streamed random generator.
///
/// Identical `(seed, stream)` pairs replay the identical draw sequence, no
/// matter how trials are scheduled across workers. Each Monte Carlo trial
/// owns one stream.
#[derive(Clone, Debug)]
pub struct SeededRng {
    seed: u64,
    stream: u64,
    inner: ChaCha12Rng,
}

impl SeededRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha12Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        SeededRng { seed, stream, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// One standard normal draw.
    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

/// SplitMix64 step; used to derive per-point seeds from a master seed.
pub fn mix_seed(seed: u64, k: u64) -> u64 {
    let mut z = seed ^ k.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Draw `n` i.i.d. circularly symmetric complex Gaussians with total
/// per-sample variance `variance` (each real component gets `variance / 2`).
pub fn draw_complex_gaussian(
    rng: &mut SeededRng,
    n: usize,
    variance: f64,
) -> Result<Vec<Complex64>> {
    if !(variance >= 0.0) || !variance.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "complex Gaussian variance must be finite and nonnegative, got {variance}"
        )));
    }
    let scale = (variance / 2.0).sqrt();
    Ok((0..n)
        .map(|_| {
            let re: f64 = rng.standard_normal();
            let im: f64 = rng.standard_normal();
            Complex64::new(re * scale, im * scale)
        })
        .collect())
}
