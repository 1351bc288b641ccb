//! Dense complex linear algebra for the small Hermitian matrices that appear
//! in the solvers (dimensions up to a few tens).
//!
//! Everything is row-major `Vec<Complex64>`. Hermitian matrices are
//! symmetrized on construction, eigendecompositions use cyclic Jacobi
//! rotations and positive-definite work goes through a Cholesky factor.

use std::cmp::Ordering;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Cholesky pivots at or below this value are treated as singular.
pub const PIVOT_FLOOR: f64 = 1e-14;

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// General rectangular complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Real diagonal matrix padded with zeros to `rows x cols`.
    pub fn real_diag(rows: usize, cols: usize, diag: &[f64]) -> Self {
        Self::from_fn(rows, cols, |i, j| {
            if i == j && i < diag.len() {
                C64::new(diag[i], 0.0)
            } else {
                ZERO
            }
        })
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
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn matmul(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self.get(i, j);
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Square matrix equal to its conjugate transpose.
#[derive(Clone, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl HermitianMatrix {
    /// Builds `(A + A^H) / 2` from the row-major entries of `A`.
    pub fn new(dim: usize, data: Vec<C64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("hermitian matrix must be at least 1x1".into()));
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "{dim}x{dim} matrix needs {} entries, got {}",
                dim * dim,
                data.len()
            )));
        }
        let mut m = Self { dim, data };
        m.symmetrize();
        Ok(m)
    }

    pub fn from_matrix(a: &ComplexMatrix) -> Result<Self> {
        if a.rows != a.cols {
            return Err(Error::DimensionMismatch(format!(
                "hermitian matrix must be square, got {}x{}",
                a.rows, a.cols
            )));
        }
        Self::new(a.rows, a.data.clone())
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, s: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = C64::new(s, 0.0);
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let dim = values.len();
        let mut m = Self::zeros(dim);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * dim + i] = C64::new(v, 0.0);
        }
        m
    }

    /// `s * v v^H`.
    pub fn outer(v: &[C64], s: f64) -> Self {
        let dim = v.len();
        let mut m = Self::zeros(dim);
        m.add_outer(v, s);
        m
    }

    /// Real symmetric matrix from row-major real entries.
    pub fn from_real(dim: usize, values: &[f64]) -> Result<Self> {
        Self::new(dim, values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.dim,
            cols: self.dim,
            data: self.data.clone(),
        }
    }

    fn symmetrize(&mut self) {
        let n = self.dim;
        for i in 0..n {
            let d = self.data[i * n + i];
            self.data[i * n + i] = C64::new(d.re, 0.0);
            for j in (i + 1)..n {
                let avg = (self.data[i * n + j] + self.data[j * n + i].conj()) * 0.5;
                self.data[i * n + j] = avg;
                self.data[j * n + i] = avg.conj();
            }
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i].re).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.data[i * self.dim + i].re).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Real part of the Frobenius inner product `tr(A B)`.
    pub fn inner(&self, other: &HermitianMatrix) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        self.data.iter().zip(&other.data).map(|(a, b)| (a * b.conj()).re).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &HermitianMatrix) -> Self {
        let mut out = self.clone();
        out.add_scaled(other, 1.0);
        out
    }

    pub fn sub(&self, other: &HermitianMatrix) -> Self {
        let mut out = self.clone();
        out.add_scaled(other, -1.0);
        out
    }

    /// `self += s * other`.
    pub fn add_scaled(&mut self, other: &HermitianMatrix, s: f64) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn add_identity(&mut self, s: f64) {
        for i in 0..self.dim {
            self.data[i * self.dim + i].re += s;
        }
    }

    /// `self += s * v v^H`.
    pub fn add_outer(&mut self, v: &[C64], s: f64) {
        let n = self.dim;
        debug_assert_eq!(v.len(), n);
        for i in 0..n {
            let vi = v[i] * s;
            for j in 0..n {
                self.data[i * n + j] += vi * v[j].conj();
            }
        }
        for i in 0..n {
            self.data[i * n + i].im = 0.0;
        }
    }

    /// `M A M^H` for a `m x dim` matrix `M`.
    pub fn congruence(&self, m: &ComplexMatrix) -> HermitianMatrix {
        debug_assert_eq!(m.cols, self.dim);
        let n = self.dim;
        let r = m.rows;
        // T = M A  (r x n)
        let mut t = vec![ZERO; r * n];
        for i in 0..r {
            for k in 0..n {
                let mik = m.data[i * n + k];
                if mik == ZERO {
                    continue;
                }
                let arow = &self.data[k * n..(k + 1) * n];
                let dst = &mut t[i * n..(i + 1) * n];
                for (d, a) in dst.iter_mut().zip(arow) {
                    *d += mik * a;
                }
            }
        }
        // out = T M^H, only the upper triangle is computed
        let mut out = vec![ZERO; r * r];
        for i in 0..r {
            for j in i..r {
                let s: C64 = t[i * n..(i + 1) * n]
                    .iter()
                    .zip(&m.data[j * n..(j + 1) * n])
                    .map(|(a, b)| a * b.conj())
                    .sum();
                out[i * r + j] = s;
                out[j * r + i] = s.conj();
            }
            out[i * r + i].im = 0.0;
        }
        HermitianMatrix { dim: r, data: out }
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let n = self.dim;
        (0..n)
            .map(|i| self.data[i * n..(i + 1) * n].iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `x^H A x`, real for Hermitian `A`.
    pub fn quadratic_form(&self, x: &[C64]) -> f64 {
        let ax = self.mul_vec(x);
        x.iter().zip(&ax).map(|(a, b)| (a.conj() * b).re).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let e = eig_hermitian(self)?;
        Ok(*e.eigenvalues.last().expect("dim >= 1"))
    }
}

impl fmt::Debug for HermitianMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "HermitianMatrix {}x{} [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self.get(i, j);
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Eigenpairs of a Hermitian matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Unit-norm eigenvectors, `eigenvectors[j]` pairs with `eigenvalues[j]`.
    pub eigenvectors: Vec<Vec<C64>>,
}

impl EigenDecomposition {
    /// `sum_j f(lambda_j) v_j v_j^H`.
    pub fn reconstruct_with(&self, mut f: impl FnMut(f64) -> f64) -> HermitianMatrix {
        let dim = self.eigenvectors.first().map_or(0, Vec::len);
        let mut out = HermitianMatrix::zeros(dim);
        for (&l, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            let s = f(l);
            if s != 0.0 {
                out.add_outer(v, s);
            }
        }
        out
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.reconstruct_with(|l| l)
    }
}

/// Eigendecomposition by cyclic Jacobi rotations.
///
/// Eigenvalues come out descending. Each eigenvector is phase-normalized so
/// that its largest-modulus entry (first one on ties) is real and positive;
/// exactly equal eigenvalues are ordered by the real parts of their
/// eigenvectors, compared lexicographically.
pub fn eig_hermitian(a: &HermitianMatrix) -> Result<EigenDecomposition> {
    if !a.is_finite() {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let n = a.dim;
    let mut m = a.data.clone();
    let mut v = vec![ZERO; n * n];
    for i in 0..n {
        v[i * n + i] = ONE;
    }

    let total: f64 = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let threshold = JACOBI_TOL * total;

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= threshold || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                let r = apq.norm();
                if r < 1e-300 {
                    continue;
                }
                let app = m[p * n + p].re;
                let aqq = m[q * n + q].re;
                let phase = apq / r; // e^{i phi}
                let zeta = (aqq - app) / (2.0 * r);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // U = [[c, s], [-s e^{-i phi}, c e^{-i phi}]] on the (p, q) plane
                let upp = C64::new(c, 0.0);
                let upq = C64::new(s, 0.0);
                let uqp = -phase.conj() * s;
                let uqq = phase.conj() * c;
                // A <- A U
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = akp * upp + akq * uqp;
                    m[k * n + q] = akp * upq + akq * uqq;
                }
                // A <- U^H A
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = upp.conj() * apk + uqp.conj() * aqk;
                    m[q * n + k] = upq.conj() * apk + uqq.conj() * aqk;
                }
                m[p * n + q] = ZERO;
                m[q * n + p] = ZERO;
                m[p * n + p].im = 0.0;
                m[q * n + q].im = 0.0;
                // V <- V U
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = vkp * upp + vkq * uqp;
                    v[k * n + q] = vkp * upq + vkq * uqq;
                }
            }
        }
    }

    let mut pairs: Vec<(f64, Vec<C64>)> = (0..n)
        .map(|j| {
            let mut col: Vec<C64> = (0..n).map(|i| v[i * n + j]).collect();
            normalize_phase(&mut col);
            (m[j * n + j].re, col)
        })
        .collect();
    pairs.sort_by(|a, b| match b.0.total_cmp(&a.0) {
        Ordering::Equal => lex_real(&a.1, &b.1),
        o => o,
    });
    let (eigenvalues, eigenvectors) = pairs.into_iter().unzip();
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn lex_real(a: &[C64], b: &[C64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.re.total_cmp(&y.re) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Renormalizes `v` to unit length and rotates its phase so the
/// largest-modulus entry is real positive.
fn normalize_phase(v: &mut [C64]) {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return;
    }
    let mut best = 0;
    let mut best_abs = -1.0;
    for (i, z) in v.iter().enumerate() {
        let a = z.norm();
        if a > best_abs * (1.0 + 1e-12) {
            best = i;
            best_abs = a;
        }
    }
    let rot = v[best].conj() / (best_abs * norm);
    for z in v.iter_mut() {
        *z *= rot;
    }
    v[best] = C64::new(v[best].re, 0.0);
}

/// Frobenius-nearest positive semidefinite matrix: negative eigenvalues are
/// clipped to zero.
pub fn psd_project(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    let e = eig_hermitian(a)?;
    Ok(e.reconstruct_with(|l| l.max(0.0)))
}

/// Lower-triangular Cholesky factor `A = L L^H`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    dim: usize,
    l: Vec<C64>,
}

impl Cholesky {
    pub fn factor(a: &HermitianMatrix) -> Result<Self> {
        let n = a.dim;
        let mut l = vec![ZERO; n * n];
        for j in 0..n {
            let mut d = a.data[j * n + j].re;
            for k in 0..j {
                d -= l[j * n + k].norm_sqr();
            }
            if !(d > PIVOT_FLOOR) {
                return Err(Error::NotPositiveDefinite { index: j, pivot: d });
            }
            let djj = d.sqrt();
            l[j * n + j] = C64::new(djj, 0.0);
            for i in (j + 1)..n {
                let mut s = a.data[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(Self { dim: n, l })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn logdet(&self) -> f64 {
        2.0 * (0..self.dim).map(|i| self.l[i * self.dim + i].re.ln()).sum::<f64>()
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.dim;
        debug_assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i].re;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[k * n + i].conj() * y[k];
            }
            y[i] = s / self.l[i * n + i].re;
        }
        y
    }

    pub fn inverse(&self) -> HermitianMatrix {
        let n = self.dim;
        let mut data = vec![ZERO; n * n];
        let mut e = vec![ZERO; n];
        for j in 0..n {
            e.iter_mut().for_each(|z| *z = ZERO);
            e[j] = ONE;
            let x = self.solve(&e);
            for i in 0..n {
                data[i * n + j] = x[i];
            }
        }
        let mut m = HermitianMatrix { dim: n, data };
        m.symmetrize();
        m
    }
}

/// Natural log of the determinant of a positive-definite matrix.
pub fn logdet_pd(a: &HermitianMatrix) -> Result<f64> {
    Ok(Cholesky::factor(a)?.logdet())
}

/// Solves `A x = b` for positive-definite `A`.
pub fn solve_pd(a: &HermitianMatrix, b: &[C64]) -> Result<Vec<C64>> {
    if b.len() != a.dim {
        return Err(Error::DimensionMismatch(format!(
            "rhs has length {}, matrix is {}x{}",
            b.len(),
            a.dim,
            a.dim
        )));
    }
    Ok(Cholesky::factor(a)?.solve(b))
}

pub fn inverse_pd(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    Ok(Cholesky::factor(a)?.inverse())
}

pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `a^H b`.
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn close(a: &HermitianMatrix, b: &HermitianMatrix, tol: f64) -> bool {
        a.sub(b).frobenius_norm() <= tol
    }

    #[test]
    fn construction_symmetrizes() {
        let a = HermitianMatrix::new(2, vec![c(1.0, 0.3), c(2.0, 1.0), c(0.0, 0.0), c(3.0, 0.0)]).unwrap();
        assert_eq!(a.get(0, 0), c(1.0, 0.0));
        assert_eq!(a.get(0, 1), c(1.0, 0.5));
        assert_eq!(a.get(1, 0), c(1.0, -0.5));
    }

    #[test]
    fn eig_identity() {
        let e = eig_hermitian(&HermitianMatrix::identity(3)).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 1.0, 1.0]);
        assert!(close(&e.reconstruct(), &HermitianMatrix::identity(3), 1e-14));
    }

    #[test]
    fn eig_diagonal() {
        let e = eig_hermitian(&HermitianMatrix::diag(&[2.0, -1.0])).unwrap();
        assert_eq!(e.eigenvalues, vec![2.0, -1.0]);
        assert_eq!(e.eigenvectors[0], vec![ONE, ZERO]);
        assert_eq!(e.eigenvectors[1], vec![ZERO, ONE]);
    }

    #[test]
    fn eig_swap_matrix() {
        let a = HermitianMatrix::from_real(2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let e = eig_hermitian(&a).unwrap();
        assert!((e.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] + 1.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (got, want) in e.eigenvectors[0].iter().zip([h, h]) {
            assert!((got - c(want, 0.0)).norm() < 1e-14);
        }
        for (got, want) in e.eigenvectors[1].iter().zip([h, -h]) {
            assert!((got - c(want, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn eig_rejects_nan() {
        let a = HermitianMatrix::diag(&[f64::NAN, 1.0]);
        assert!(matches!(eig_hermitian(&a), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn psd_projection_examples() {
        let p = psd_project(&HermitianMatrix::diag(&[2.0, -1.0])).unwrap();
        assert!(close(&p, &HermitianMatrix::diag(&[2.0, 0.0]), 1e-14));

        let p = psd_project(&HermitianMatrix::identity(4)).unwrap();
        assert!(close(&p, &HermitianMatrix::identity(4), 1e-14));

        let a = HermitianMatrix::from_real(2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let want = HermitianMatrix::from_real(2, &[0.5, 0.5, 0.5, 0.5]).unwrap();
        assert!(close(&psd_project(&a).unwrap(), &want, 1e-14));
    }

    #[test]
    fn logdet_examples() {
        assert_eq!(logdet_pd(&HermitianMatrix::identity(5)).unwrap(), 0.0);
        let l = logdet_pd(&HermitianMatrix::diag(&[2.0, 3.0])).unwrap();
        assert!((l - 6f64.ln()).abs() < 1e-15);
        assert!((l - 1.791759).abs() < 1e-6);
    }

    #[test]
    fn logdet_rejects_indefinite() {
        let err = logdet_pd(&HermitianMatrix::diag(&[1.0, -1.0])).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { index: 1, .. }));
        let err = logdet_pd(&HermitianMatrix::diag(&[1.0, 1e-15])).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { .. }));
    }

    #[test]
    fn solve_examples() {
        let b = vec![c(1.0, 2.0), c(-3.0, 0.5)];
        let x = solve_pd(&HermitianMatrix::identity(2), &b).unwrap();
        assert_eq!(x, b);

        let x = solve_pd(&HermitianMatrix::diag(&[2.0, 4.0]), &[c(2.0, 0.0), c(4.0, 0.0)]).unwrap();
        assert!((x[0] - ONE).norm() < 1e-15 && (x[1] - ONE).norm() < 1e-15);

        assert!(matches!(
            solve_pd(&HermitianMatrix::identity(2), &[ONE]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn congruence_matches_matmul() {
        let m = ComplexMatrix::from_fn(3, 2, |i, j| c(i as f64 + 0.5, j as f64 - 0.25 * i as f64));
        let a = HermitianMatrix::new(2, vec![c(2.0, 0.0), c(0.5, 0.5), c(0.5, -0.5), c(1.0, 0.0)]).unwrap();
        let want = m.matmul(&a.to_matrix()).unwrap().matmul(&m.adjoint()).unwrap();
        let got = a.congruence(&m);
        for i in 0..3 {
            for j in 0..3 {
                assert!((got.get(i, j) - want.get(i, j)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let a = HermitianMatrix::new(2, vec![c(2.0, 0.0), c(0.5, 0.5), c(0.5, -0.5), c(1.0, 0.0)]).unwrap();
        let inv = inverse_pd(&a).unwrap();
        let prod = a.to_matrix().matmul(&inv.to_matrix()).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((prod.get(i, j) - c(want, 0.0)).norm() < 1e-14);
            }
        }
    }
}
