//! Dense real-matrix numerics: linear solves, eigenvalues of nonsymmetric
//! matrices, singular values, norms.
//!
//! Everything here targets the small (at most ~16x16) well-scaled matrices
//! produced by the finite-state analysis, so the implementations favor
//! robustness over speed: partial-pivoted LU, Householder Hessenberg
//! reduction followed by Francis double-shift QR, and cyclic Jacobi for
//! symmetric problems. All functions are pure and take immutable inputs.

use crate::{Error, Result};

/// Relative pivot threshold for LU: a pivot below `PIVOT_TOL * ||A||_inf`
/// flags the matrix as singular.
pub const PIVOT_TOL: f64 = 1e-12;

/// Relative subdiagonal deflation threshold for the QR eigenvalue iteration.
pub const DEFLATION_TOL: f64 = 1e-12;

/// Total QR sweep budget is `QR_SWEEPS_PER_DIM * n`; exceeding it signals a
/// pathological input.
pub const QR_SWEEPS_PER_DIM: usize = 100;

/// Sweep cap for the cyclic Jacobi iteration (quadratic convergence makes
/// anything near this unreachable for sane inputs).
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Dense row-major matrix of finite `f64` entries.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Matrix of zeros.
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        assert!(rows >= 1 && cols >= 1, "matrix must be at least 1x1");
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Identity of order `n`.
    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Build from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Matrix {
        assert!(!rows.is_empty(), "matrix must have at least one row");
        let cols = rows[0].len();
        assert!(cols >= 1, "matrix must have at least one column");
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Matrix { rows: rows.len(), cols, data }
    }

    /// Build from a generator over (row, col).
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Matrix {
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Borrow row `i` as a slice.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "matvec shape mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)] + other[(i, j)])
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)] - other[(i, j)])
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix::from_fn(self.rows, self.cols, |i, j| s * self[(i, j)])
    }

    /// `self + s * I` (square only).
    pub fn add_scaled_identity(&self, s: f64) -> Matrix {
        assert!(self.is_square());
        let mut m = self.clone();
        for i in 0..self.rows {
            m[(i, i)] += s;
        }
        m
    }

    /// Infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// One norm (max absolute column sum).
    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl std::fmt::Debug for Matrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Complex scalar used for eigenvalues of real matrices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub fn new(re: f64, im: f64) -> Complex {
        Complex { re, im }
    }

    pub fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }
}

/// Reusable LU factorization with partial pivoting.
#[derive(Clone, Debug)]
pub struct LuFactor {
    lu: Matrix,
    perm: Vec<usize>,
}

/// Factor a square matrix; fails with [`Error::SingularMatrix`] when a pivot
/// drops below `PIVOT_TOL * ||A||_inf`.
pub fn lu_factor(a: &Matrix) -> Result<LuFactor> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "lu_factor needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let tol = PIVOT_TOL * a.norm_inf();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut piv = k;
        let mut best = lu[(k, k)].abs();
        for i in k + 1..n {
            if lu[(i, k)].abs() > best {
                best = lu[(i, k)].abs();
                piv = i;
            }
        }
        if best <= tol {
            return Err(Error::SingularMatrix);
        }
        if piv != k {
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(piv, j)];
                lu[(piv, j)] = t;
            }
            perm.swap(k, piv);
        }
        for i in k + 1..n {
            let f = lu[(i, k)] / lu[(k, k)];
            lu[(i, k)] = f;
            for j in k + 1..n {
                let v = f * lu[(k, j)];
                lu[(i, j)] -= v;
            }
        }
    }
    Ok(LuFactor { lu, perm })
}

impl LuFactor {
    pub fn n(&self) -> usize {
        self.lu.rows()
    }

    /// Solve `A x = b` using the stored factors.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n();
        assert_eq!(b.len(), n, "rhs length mismatch");
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            for j in 0..i {
                x[i] -= self.lu[(i, j)] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.lu[(i, j)] * x[j];
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }
}

/// Solve `A x = b` for square nonsingular `A`.
pub fn solve_linear(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    if a.rows() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "solve_linear: A is {}x{} but rhs has length {}",
            a.rows(),
            a.cols(),
            b.len()
        )));
    }
    Ok(lu_factor(a)?.solve(b))
}

/// Eigenvalues of a real square matrix via Householder reduction to upper
/// Hessenberg form followed by Francis double-shift QR iteration. Complex
/// eigenvalues of a real matrix come out in conjugate pairs.
pub fn eigenvalues(a: &Matrix) -> Result<Vec<Complex>> {
    assert!(a.is_square(), "eigenvalues need a square matrix");
    assert!(a.all_finite(), "eigenvalues need finite entries");
    let mut h = a.clone();
    hessenberg(&mut h);
    hqr(&mut h)
}

/// In-place orthogonal reduction to upper Hessenberg form.
fn hessenberg(h: &mut Matrix) {
    let n = h.rows();
    if n <= 2 {
        return;
    }
    let high = n - 1;
    let mut ort = vec![0.0; n];
    for m in 1..high {
        let scale: f64 = (m..=high).map(|i| h[(i, m - 1)].abs()).sum();
        if scale == 0.0 {
            continue;
        }
        let mut hh = 0.0;
        for i in (m..=high).rev() {
            ort[i] = h[(i, m - 1)] / scale;
            hh += ort[i] * ort[i];
        }
        let mut g = hh.sqrt();
        if ort[m] > 0.0 {
            g = -g;
        }
        hh -= ort[m] * g;
        ort[m] -= g;
        // Householder similarity transform applied from both sides.
        for j in m..n {
            let mut f = 0.0;
            for i in (m..=high).rev() {
                f += ort[i] * h[(i, j)];
            }
            f /= hh;
            for i in m..=high {
                let v = f * ort[i];
                h[(i, j)] -= v;
            }
        }
        for i in 0..=high {
            let mut f = 0.0;
            for j in (m..=high).rev() {
                f += ort[j] * h[(i, j)];
            }
            f /= hh;
            for j in m..=high {
                let v = f * ort[j];
                h[(i, j)] -= v;
            }
        }
        h[(m, m - 1)] = scale * g;
    }
    // The entries below the subdiagonal are mathematically zero now; clear
    // any leftover Householder storage so the QR stage sees a clean band.
    for i in 2..n {
        for j in 0..i - 1 {
            h[(i, j)] = 0.0;
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix, eigenvalues only.
fn hqr(h: &mut Matrix) -> Result<Vec<Complex>> {
    let n = h.rows();
    let low = 0usize;
    let mut eig = vec![Complex::new(0.0, 0.0); n];
    let norm: f64 = {
        let mut s = 0.0;
        for i in 0..n {
            for j in i.saturating_sub(1)..n {
                s += h[(i, j)].abs();
            }
        }
        s
    };
    if norm == 0.0 {
        return Ok(eig);
    }

    let budget = QR_SWEEPS_PER_DIM * n;
    let mut sweeps = 0usize;
    let mut exshift = 0.0;
    let mut iter = 0usize;
    let mut nn = n as isize - 1;
    let (mut p, mut q, mut r, mut s, mut z);
    let (mut w, mut x, mut y);

    while nn >= low as isize {
        let en = nn as usize;
        // Look for a single small subdiagonal element.
        let mut l = en;
        while l > low {
            s = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[(l, l - 1)].abs() < DEFLATION_TOL * s {
                break;
            }
            l -= 1;
        }

        if l == en {
            // One real root found.
            eig[en] = Complex::new(h[(en, en)] + exshift, 0.0);
            nn -= 1;
            iter = 0;
        } else if l == en - 1 {
            // A pair of roots found.
            w = h[(en, en - 1)] * h[(en - 1, en)];
            p = (h[(en - 1, en - 1)] - h[(en, en)]) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            x = h[(en, en)] + exshift;
            if q >= 0.0 {
                // Real pair.
                z = if p >= 0.0 { p + z } else { p - z };
                let e1 = x + z;
                let e2 = if z != 0.0 { x - w / z } else { e1 };
                eig[en - 1] = Complex::new(e1, 0.0);
                eig[en] = Complex::new(e2, 0.0);
            } else {
                // Complex conjugate pair.
                eig[en - 1] = Complex::new(x + p, z);
                eig[en] = Complex::new(x + p, -z);
            }
            nn -= 2;
            iter = 0;
        } else {
            // No convergence yet: perform a double QR sweep.
            x = h[(en, en)];
            y = h[(en - 1, en - 1)];
            w = h[(en, en - 1)] * h[(en - 1, en)];
            if iter == 10 || iter == 20 {
                // Exceptional shift to break symmetric stagnation.
                exshift += x;
                for i in low..=en {
                    h[(i, i)] -= x;
                }
                s = h[(en, en - 1)].abs() + h[(en - 1, en - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            iter += 1;
            sweeps += 1;
            if sweeps > budget {
                return Err(Error::NoConvergence);
            }

            // Look for two consecutive small subdiagonal elements.
            let mut m = en - 2;
            loop {
                z = h[(m, m)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[(m + 1, m)] + h[(m, m + 1)];
                q = h[(m + 1, m + 1)] - z - r - s;
                r = h[(m + 2, m + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h[(m, m - 1)].abs() * (q.abs() + r.abs())
                    < DEFLATION_TOL
                        * (p.abs() * (h[(m - 1, m - 1)].abs() + z.abs() + h[(m + 1, m + 1)].abs()))
                {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=en {
                h[(i, i - 2)] = 0.0;
                if i > m + 2 {
                    h[(i, i - 3)] = 0.0;
                }
            }

            // Double QR step on rows l..=en and columns m..=en.
            for k in m..en {
                let notlast = k != en - 1;
                if k != m {
                    p = h[(k, k - 1)];
                    q = h[(k + 1, k - 1)];
                    r = if notlast { h[(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s == 0.0 {
                    continue;
                }
                if k != m {
                    h[(k, k - 1)] = -s * x;
                } else if l != m {
                    h[(k, k - 1)] = -h[(k, k - 1)];
                }
                p += s;
                x = p / s;
                y = q / s;
                z = r / s;
                q /= p;
                r /= p;

                // Row modification.
                for j in k..n {
                    p = h[(k, j)] + q * h[(k + 1, j)];
                    if notlast {
                        p += r * h[(k + 2, j)];
                        h[(k + 2, j)] -= p * z;
                    }
                    h[(k + 1, j)] -= p * y;
                    h[(k, j)] -= p * x;
                }

                // Column modification.
                let upper = if en < k + 3 { en } else { k + 3 };
                for i in 0..=upper {
                    p = x * h[(i, k)] + y * h[(i, k + 1)];
                    if notlast {
                        p += z * h[(i, k + 2)];
                        h[(i, k + 2)] -= p * r;
                    }
                    h[(i, k + 1)] -= p * q;
                    h[(i, k)] -= p;
                }
            }
        }
    }
    Ok(eig)
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(a: &Matrix) -> Result<f64> {
    Ok(eigenvalues(a)?.into_iter().map(Complex::abs).fold(0.0, f64::max))
}

/// `-max_i Re(lambda_i(G))`; positive exactly when `G` is Hurwitz.
pub fn hurwitz_margin(g: &Matrix) -> Result<f64> {
    let max_re = eigenvalues(g)?
        .into_iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(-max_re)
}

/// Eigenvalues of a symmetric matrix via cyclic Jacobi rotations.
/// The input is symmetrized as `(A + A^T)/2` before iterating.
pub fn symmetric_eigenvalues(a: &Matrix) -> Result<Vec<f64>> {
    Ok(symmetric_eigen(a)?.0)
}

/// Full symmetric eigendecomposition `A = V diag(vals) V^T` with orthonormal
/// eigenvector columns, via cyclic Jacobi rotations.
pub fn symmetric_eigen(a: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    assert!(a.is_square(), "symmetric_eigen needs a square matrix");
    let n = a.rows();
    let mut m = Matrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let mut v = Matrix::identity(n);
    if n == 1 {
        return Ok((vec![m[(0, 0)]], v));
    }
    let scale = m.max_abs();
    if scale == 0.0 {
        return Ok((vec![0.0; n], v));
    }
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off.sqrt() <= 1e-15 * scale * n as f64 {
            return Ok(((0..n).map(|i| m[(i, i)]).collect(), v));
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() <= 1e-300 {
                    m[(p, q)] = 0.0;
                    m[(q, p)] = 0.0;
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    1.0 / (2.0 * theta)
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                m[(p, p)] = c * c * app - 2.0 * s * c * apq + s * s * aqq;
                m[(q, q)] = s * s * app + 2.0 * s * c * apq + c * c * aqq;
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for i in 0..n {
                    if i != p && i != q {
                        let aip = m[(i, p)];
                        let aiq = m[(i, q)];
                        m[(i, p)] = c * aip - s * aiq;
                        m[(p, i)] = m[(i, p)];
                        m[(i, q)] = s * aip + c * aiq;
                        m[(q, i)] = m[(i, q)];
                    }
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = c * vip - s * viq;
                    v[(i, q)] = s * vip + c * viq;
                }
            }
        }
    }
    Err(Error::NoConvergence)
}

/// Singular values of `A` in descending order, computed from the symmetric
/// eigenproblem of `A^T A`.
///
/// Each value is evaluated as `||A v_i||` with `v_i` the corresponding
/// eigenvector: forming `A^T A` alone cannot resolve singular values below
/// about `sqrt(eps) * ||A||`, while the unsquared evaluation recovers them.
pub fn singular_values(a: &Matrix) -> Result<Vec<f64>> {
    let ata = a.transpose().matmul(a);
    let (_, vecs) = symmetric_eigen(&ata)?;
    let n = ata.rows();
    let mut vals: Vec<f64> = (0..n)
        .map(|j| {
            let v: Vec<f64> = (0..n).map(|i| vecs[(i, j)]).collect();
            let av = a.matvec(&v);
            av.iter().map(|x| x * x).sum::<f64>().sqrt()
        })
        .collect();
    vals.sort_by(|x, y| y.partial_cmp(x).unwrap());
    Ok(vals)
}

/// Smallest singular value of `A`.
pub fn smallest_singular_value(a: &Matrix) -> Result<f64> {
    Ok(*singular_values(a)?.last().unwrap())
}

/// Largest singular value of `A` (the induced 2-norm).
pub fn operator_norm_2(a: &Matrix) -> Result<f64> {
    Ok(singular_values(a)?[0])
}
