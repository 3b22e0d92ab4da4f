//! Dense complex matrix helpers.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`, which stores entries in
//! column-major order. `vec` therefore stacks columns, and every identity in
//! [`check_identities`] is stated against that single stacking convention.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Stacks the columns of `a` into one vector.
pub fn vec(a: &CMatrix) -> CVector {
    CVector::from_column_slice(a.as_slice())
}

/// Inverse of [`vec`].
pub fn unvec(v: &CVector, rows: usize, cols: usize) -> Result<CMatrix> {
    if rows * cols != v.len() {
        return Err(Error::Shape {
            op: "unvec",
            left: (v.len(), 1),
            right: (rows, cols),
        });
    }
    Ok(CMatrix::from_column_slice(rows, cols, v.as_slice()))
}

/// Diagonal entries of a square matrix.
pub fn vecd(a: &CMatrix) -> Result<CVector> {
    require_square("vecd", a)?;
    Ok(a.diagonal())
}

/// Square diagonal matrix with `v` on its diagonal.
pub fn diag(v: &CVector) -> CMatrix {
    CMatrix::from_diagonal(v)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn hadamard(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.shape() != b.shape() {
        return Err(Error::Shape {
            op: "hadamard",
            left: a.shape(),
            right: b.shape(),
        });
    }
    Ok(a.component_mul(b))
}

/// Places `blocks` along the diagonal of a zero matrix.
pub fn blkdiag(blocks: &[CMatrix]) -> CMatrix {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Stacks matrices with equal column counts on top of each other.
pub fn vstack(blocks: &[CMatrix]) -> Result<CMatrix> {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    if let Some(bad) = blocks.iter().find(|b| b.ncols() != cols) {
        return Err(Error::Shape {
            op: "vstack",
            left: (0, cols),
            right: bad.shape(),
        });
    }
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        out.view_mut((r, 0), b.shape()).copy_from(b);
        r += b.nrows();
    }
    Ok(out)
}

/// Places matrices with equal row counts side by side.
pub fn hstack(blocks: &[CMatrix]) -> Result<CMatrix> {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    if let Some(bad) = blocks.iter().find(|b| b.nrows() != rows) {
        return Err(Error::Shape {
            op: "hstack",
            left: (rows, 0),
            right: bad.shape(),
        });
    }
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        out.view_mut((0, c), b.shape()).copy_from(b);
        c += b.ncols();
    }
    Ok(out)
}

pub fn trace(a: &CMatrix) -> Complex64 {
    a.diagonal().iter().sum()
}

/// Squared Frobenius norm, `Tr(A Aᴴ)`.
pub fn fro_sq(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub fn is_finite(a: &CMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `‖A − Aᴴ‖_F / ‖A‖_F`, zero for the zero matrix.
pub fn hermitian_residual(a: &CMatrix) -> f64 {
    let norm = fro_sq(a).sqrt();
    if norm == 0.0 {
        return 0.0;
    }
    fro_sq(&(a - a.adjoint())).sqrt() / norm
}

/// `(A + Aᴴ) / 2`.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// Smallest eigenvalue of the Hermitian part of `a`.
pub fn min_eigenvalue_hermitian(a: &CMatrix) -> Result<f64> {
    require_square("min_eigenvalue_hermitian", a)?;
    Ok(hermitian_part(a)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min))
}

// The complex factorization takes principal square roots of the pivots, so
// an indefinite input does not fail by itself; reject non-real pivots.
fn hpd_cholesky(
    op: &'static str,
    a: &CMatrix,
) -> Result<nalgebra::Cholesky<Complex64, nalgebra::Dyn>> {
    let chol = hermitian_part(a)
        .cholesky()
        .ok_or(Error::IllConditioned(op))?;
    let ok = chol
        .l_dirty()
        .diagonal()
        .iter()
        .all(|z| z.re > 0.0 && z.re.is_finite() && z.im.abs() <= 1e-12 * z.re);
    if ok {
        Ok(chol)
    } else {
        Err(Error::IllConditioned(op))
    }
}

/// `log det A` for Hermitian positive definite `A`, via Cholesky.
pub fn log_det_hpd(a: &CMatrix) -> Result<f64> {
    require_square("log_det_hpd", a)?;
    let chol = hpd_cholesky("log_det_hpd", a)?;
    Ok(2.0
        * chol
            .l_dirty()
            .diagonal()
            .iter()
            .map(|z| z.re.ln())
            .sum::<f64>())
}

/// `log |det A|` for a general square matrix, via LU.
pub fn log_abs_det(a: &CMatrix) -> Result<f64> {
    require_square("log_abs_det", a)?;
    Ok(a.clone().lu().determinant().norm().ln())
}

/// Solves `A X = B` for Hermitian positive definite `A`.
pub fn solve_hpd(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    require_square("solve_hpd", a)?;
    if a.nrows() != b.nrows() {
        return Err(Error::Shape {
            op: "solve_hpd",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let chol = hpd_cholesky("solve_hpd", a)?;
    Ok(chol.solve(b))
}

/// Matrix of i.i.d. circularly-symmetric complex Gaussian entries with
/// per-entry variance `variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    variance: f64,
    rng: &mut R,
) -> CMatrix {
    let s = (variance / 2.0).sqrt();
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(s * re, s * im)
    })
}

pub(crate) fn require_square(op: &'static str, a: &CMatrix) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::NonSquare {
            op,
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(())
}

/// Relative residuals of the deterministic trace/vec identities.
///
/// Each residual is `|lhs − rhs|` divided by a magnitude bound built from
/// Frobenius norms of the operands, so cancellation inside a trace does not
/// inflate it. Identical sides give exactly zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityReport {
    /// `Tr(AᵀB) = vec(A)ᵀ vec(B)`
    pub trace_vec: f64,
    /// `Tr(A ⊗ B) = Tr(A) Tr(B)`
    pub trace_kron: f64,
    /// `vec(ABC) = (Cᵀ ⊗ A) vec(B)`
    pub vec_product: f64,
    /// `Tr(A M B M) = mᵀ (A ⊙ Bᵀ) m` with `M = Diag(m)`
    pub trace_diag: f64,
    /// `A ⊙ I = Diag(vecd(A))`
    pub hadamard_identity: f64,
    /// Sample check of `E{xᴴ A x} = Tr(A Σ) + cᴴ A c`.
    pub quadratic: QuadraticCheck,
}

impl IdentityReport {
    pub fn max_deterministic(&self) -> f64 {
        [
            self.trace_vec,
            self.trace_kron,
            self.vec_product,
            self.trace_diag,
            self.hadamard_identity,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Sample mean of `xᴴ A x` over draws of `x ~ CN(c, Σ)` against the closed
/// form `Tr(A Σ) + cᴴ A c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticCheck {
    pub expected: Complex64,
    pub sample_mean: Complex64,
    /// Standard error of the real and imaginary parts of the sample mean.
    pub std_error: (f64, f64),
    pub draws: usize,
}

impl QuadraticCheck {
    /// Largest deviation in units of the standard error; a zero-variance
    /// estimator that matches exactly reports 0.
    pub fn sigmas(&self) -> f64 {
        let d = self.sample_mean - self.expected;
        let part = |dev: f64, se: f64| {
            if dev == 0.0 {
                0.0
            } else if se == 0.0 {
                f64::INFINITY
            } else {
                dev.abs() / se
            }
        };
        part(d.re, self.std_error.0).max(part(d.im, self.std_error.1))
    }
}

/// Operands for one evaluation of the identity set.
#[derive(Debug, Clone)]
pub struct IdentityInputs {
    /// `Tr(AᵀB)`: two p×q matrices.
    pub tv: (CMatrix, CMatrix),
    /// `Tr(A⊗B)`: two square matrices.
    pub tk: (CMatrix, CMatrix),
    /// `vec(ABC)`: p×q, q×r, r×s.
    pub vp: (CMatrix, CMatrix, CMatrix),
    /// `Tr(AMBM)`: two n×n matrices and a length-n vector.
    pub td: (CMatrix, CMatrix, CVector),
    /// `A⊙I`: one square matrix.
    pub hi: CMatrix,
    /// `E{xᴴAx}`: A (n×n), mean c, covariance factor L with `Σ = L Lᴴ`.
    pub quad: (CMatrix, CVector, CMatrix),
}

impl IdentityInputs {
    /// Random operands with every dimension drawn from `1..=max_dim`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, max_dim: usize) -> Self {
        let mut dim = || rng.random_range(1..=max_dim);
        let (p, q, r, s, n1, n2, n3, n4, n5) = (
            dim(),
            dim(),
            dim(),
            dim(),
            dim(),
            dim(),
            dim(),
            dim(),
            dim(),
        );
        let mut g = |rows, cols| complex_gaussian(rows, cols, 1.0, rng);
        let tv = (g(p, q), g(p, q));
        let tk = (g(n1, n1), g(n2, n2));
        let vp = (g(p, q), g(q, r), g(r, s));
        let td = (g(n3, n3), g(n3, n3), vec(&g(n3, 1)));
        let hi = g(n4, n4);
        let quad = (g(n5, n5), vec(&g(n5, 1)), g(n5, n5));
        Self {
            tv,
            tk,
            vp,
            td,
            hi,
            quad,
        }
    }

    /// Same shapes as `self` with every operand zeroed.
    pub fn zeroed(&self) -> Self {
        let z = |m: &CMatrix| CMatrix::zeros(m.nrows(), m.ncols());
        let zv = |v: &CVector| CVector::zeros(v.len());
        Self {
            tv: (z(&self.tv.0), z(&self.tv.1)),
            tk: (z(&self.tk.0), z(&self.tk.1)),
            vp: (z(&self.vp.0), z(&self.vp.1), z(&self.vp.2)),
            td: (z(&self.td.0), z(&self.td.1), zv(&self.td.2)),
            hi: z(&self.hi),
            quad: (z(&self.quad.0), zv(&self.quad.1), z(&self.quad.2)),
        }
    }
}

fn rel(diff: f64, scale: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else {
        diff / scale.max(f64::MIN_POSITIVE)
    }
}

fn norm(a: &CMatrix) -> f64 {
    fro_sq(a).sqrt()
}

/// Evaluates every identity on `inputs`; the expectation identity uses
/// `draws` Monte Carlo samples from `rng`.
pub fn evaluate_identities<R: Rng + ?Sized>(
    inputs: &IdentityInputs,
    draws: usize,
    rng: &mut R,
) -> IdentityReport {
    let (a, b) = &inputs.tv;
    let lhs = trace(&(a.transpose() * b));
    let rhs = vec(a).transpose() * vec(b);
    let trace_vec = rel((lhs - rhs[(0, 0)]).norm(), norm(a) * norm(b));

    let (a, b) = &inputs.tk;
    let lhs = trace(&kron(a, b));
    let rhs = trace(a) * trace(b);
    let scale = norm(a) * norm(b) * ((a.nrows() * b.nrows()) as f64).sqrt();
    let trace_kron = rel((lhs - rhs).norm(), scale);

    let (a, b, c) = &inputs.vp;
    let lhs = vec(&(a * b * c));
    let rhs = kron(&c.transpose(), a) * vec(b);
    let vec_product = rel((&lhs - &rhs).norm(), norm(a) * norm(b) * norm(c));

    let (a, b, m) = &inputs.td;
    let mm = diag(m);
    let lhs = trace(&(a * &mm * b * &mm));
    let hb = a.component_mul(&b.transpose());
    let rhs = (m.transpose() * hb * m)[(0, 0)];
    let mn = m.norm();
    let trace_diag = rel((lhs - rhs).norm(), norm(a) * norm(b) * mn * mn);

    let a = &inputs.hi;
    let eye = CMatrix::identity(a.nrows(), a.ncols());
    let lhs = a.component_mul(&eye);
    let rhs = diag(&a.diagonal());
    let hadamard_identity = rel(norm(&(lhs - rhs)), norm(a));

    let (a, c, l) = &inputs.quad;
    let quadratic = quadratic_expectation(a, c, l, draws, rng);

    IdentityReport {
        trace_vec,
        trace_kron,
        vec_product,
        trace_diag,
        hadamard_identity,
        quadratic,
    }
}

/// Monte Carlo check of `E{xᴴAx} = Tr(AΣ) + cᴴAc` for `x = c + L z`,
/// `z ~ CN(0, I)`.
pub fn quadratic_expectation<R: Rng + ?Sized>(
    a: &CMatrix,
    c: &CVector,
    l: &CMatrix,
    draws: usize,
    rng: &mut R,
) -> QuadraticCheck {
    let sigma = l * l.adjoint();
    let expected = trace(&(a * &sigma)) + (c.adjoint() * a * c)[(0, 0)];
    let n = c.len();
    let (mut sum, mut sum_sq_re, mut sum_sq_im) = (ZERO, 0.0, 0.0);
    for _ in 0..draws {
        let z = vec(&complex_gaussian(n, 1, 1.0, rng));
        let x = c + l * z;
        let q = (x.adjoint() * a * &x)[(0, 0)];
        sum += q;
        sum_sq_re += q.re * q.re;
        sum_sq_im += q.im * q.im;
    }
    let draws_f = draws.max(1) as f64;
    let mean = sum / draws_f;
    let se = |sq: f64, m: f64| {
        if draws < 2 {
            0.0
        } else {
            let var = (sq / draws_f - m * m).max(0.0) * draws_f / (draws_f - 1.0);
            (var / draws_f).sqrt()
        }
    };
    QuadraticCheck {
        expected,
        sample_mean: mean,
        std_error: (se(sum_sq_re, mean.re), se(sum_sq_im, mean.im)),
        draws,
    }
}

/// Evaluates the identity set on random operands (dimensions up to 5) drawn
/// from `seed`, with 10⁴ draws for the expectation identity.
pub fn check_identities(seed: u64) -> IdentityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs = IdentityInputs::random(&mut rng, 5);
    evaluate_identities(&inputs, 10_000, &mut rng)
}
