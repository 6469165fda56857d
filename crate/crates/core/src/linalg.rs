//! Dense complex linear algebra on row-major matrices.
//!
//! All tensor-product conventions use a single fixed computational basis:
//! for a composite index over subsystems `(i_1, ..., i_k)` the first
//! subsystem is the most significant digit. Vectorization follows the same
//! rule, `|A>> = sum_{m,n} A[m,n] |m>|n>`, so the row index is the first
//! tensor factor.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

pub use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Largest dimension handled by the dense Hermitian eigensolver. Bigger
/// operators fall back to power iteration.
pub const DENSE_EIG_LIMIT: usize = 1024;

/// Relative tolerance for Hermiticity checks.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// `max` that propagates NaN instead of discarding it.
pub(crate) fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
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

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        m
    }

    /// Builds a matrix from real row slices. Handy in tests.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        Self::from_fn(r, c, |i, j| C64::new(rows[i][j], 0.0))
    }

    /// Outer product `|u><v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
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

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, nan_max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max |self - other|` entrywise. Panics on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, nan_max)
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok(self
            .data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `<u|M|v>`.
    pub fn sandwich(&self, u: &[C64], v: &[C64]) -> Result<C64> {
        Ok(inner(u, &self.matvec(v)?))
    }

    /// Deviation `max |M - M^dag|`.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = nan_max(dev, (self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol * self.max_abs().max(1.0)
    }

    /// `max |U^dag U - I|`.
    pub fn unitarity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.dagger()
            .matmul(self)
            .map(|p| p.max_abs_diff(&Self::identity(self.rows)))
            .unwrap_or(f64::INFINITY)
    }

    /// `(M + M^dag) / 2`.
    pub fn symmetrized(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()) * 0.5
        })
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    /// Panics on incompatible shapes; use [`ComplexMatrix::matmul`] for a
    /// fallible product.
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("incompatible matrix shapes")
    }
}

/// `<u|v> = sum conj(u_i) v_i`.
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Ordered subsystem dimensions of a composite space. Labels are 1-based,
/// so label `k` refers to `dims[k - 1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsystemSpec {
    dims: Vec<usize>,
}

impl SubsystemSpec {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::InvalidSubsystems(format!("bad dimensions {dims:?}")));
        }
        Ok(Self { dims })
    }

    /// `count` copies of a `d`-dimensional space.
    pub fn uniform(d: usize, count: usize) -> Result<Self> {
        Self::new(vec![d; count])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Place value of each subsystem in a flat index.
    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dims.len()];
        for k in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.dims[k + 1];
        }
        strides
    }

    /// Flat offsets of every multi-index restricted to `positions`
    /// (0-based), enumerated with the first listed position most
    /// significant.
    fn offsets(&self, positions: &[usize]) -> Vec<usize> {
        let strides = self.strides();
        let mut offs = vec![0usize];
        for &p in positions {
            let mut next = Vec::with_capacity(offs.len() * self.dims[p]);
            for &o in &offs {
                for digit in 0..self.dims[p] {
                    next.push(o + digit * strides[p]);
                }
            }
            offs = next;
        }
        offs
    }
}

/// Kronecker product: `(A (x) B)[i*p + k, j*q + l] = A[i,j] B[k,l]` for
/// `B` of shape `p x q`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (p, q) = (b.rows, b.cols);
    ComplexMatrix::from_fn(a.rows * p, a.cols * q, |r, c| {
        a[(r / p, c / q)] * b[(r % p, c % q)]
    })
}

/// Kronecker product of a list of factors, left to right.
pub fn kron_all(factors: &[&ComplexMatrix]) -> ComplexMatrix {
    factors
        .iter()
        .fold(ComplexMatrix::identity(1), |acc, f| kron(&acc, f))
}

pub fn kron_vec(u: &[C64], v: &[C64]) -> Vec<C64> {
    u.iter()
        .flat_map(|a| v.iter().map(move |b| a * b))
        .collect()
}

/// `|A>>` with component `m*d + n` equal to `A[m,n]`.
pub fn vectorize(a: &ComplexMatrix) -> Result<Vec<C64>> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    Ok(a.data.clone())
}

/// Inverse of [`vectorize`] for a `d x d` operator.
pub fn devectorize(v: &[C64], d: usize) -> Result<ComplexMatrix> {
    if v.len() != d * d {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} is not {d}^2",
            v.len()
        )));
    }
    ComplexMatrix::new(d, d, v.to_vec())
}

/// Hilbert-Schmidt product `<<A|B>> = Tr[A^dag B]`.
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<C64> {
    if (a.rows, a.cols) != (b.rows, b.cols) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    Ok(inner(&a.data, &b.data))
}

/// Traces out the subsystems with the given 1-based labels. The result acts
/// on the remaining subsystems in their original order; tracing everything
/// gives the `1x1` matrix `[Tr M]`.
pub fn partial_trace(
    m: &ComplexMatrix,
    spec: &SubsystemSpec,
    traced: &[usize],
) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    if spec.total_dim() != m.rows {
        return Err(Error::InvalidSubsystems(format!(
            "dims {:?} multiply to {}, matrix is {}x{}",
            spec.dims,
            spec.total_dim(),
            m.rows,
            m.cols
        )));
    }
    if traced.is_empty() {
        return Err(Error::InvalidSubsystems("nothing to trace".into()));
    }
    let mut is_traced = vec![false; spec.len()];
    for &label in traced {
        if label == 0 || label > spec.len() {
            return Err(Error::InvalidSubsystems(format!(
                "label {label} outside 1..={}",
                spec.len()
            )));
        }
        if std::mem::replace(&mut is_traced[label - 1], true) {
            return Err(Error::InvalidSubsystems(format!("label {label} repeated")));
        }
    }
    let kept: Vec<usize> = (0..spec.len()).filter(|&k| !is_traced[k]).collect();
    let gone: Vec<usize> = (0..spec.len()).filter(|&k| is_traced[k]).collect();
    let kept_offs = spec.offsets(&kept);
    let gone_offs = spec.offsets(&gone);
    let n = kept_offs.len();
    Ok(ComplexMatrix::from_fn(n, n, |r, c| {
        let (row, col) = (kept_offs[r], kept_offs[c]);
        gone_offs.iter().map(|t| m[(row + t, col + t)]).sum()
    }))
}

/// Applies `op` on subsystem `label` (1-based) of a state vector, identity
/// elsewhere.
pub fn apply_local_vec(
    v: &[C64],
    spec: &SubsystemSpec,
    label: usize,
    op: &ComplexMatrix,
) -> Result<Vec<C64>> {
    let (k, stride) = local_site(spec, label, op)?;
    if v.len() != spec.total_dim() {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} on a {}-dimensional space",
            v.len(),
            spec.total_dim()
        )));
    }
    let dk = spec.dims[k];
    let mut out = vec![ZERO; v.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let digit = (idx / stride) % dk;
        let base = idx - digit * stride;
        *o = (0..dk).map(|j| op[(digit, j)] * v[base + j * stride]).sum();
    }
    Ok(out)
}

/// `(op on label) M (op on label)^dag` for an operator `M` on the whole space.
pub fn conjugate_local(
    m: &ComplexMatrix,
    spec: &SubsystemSpec,
    label: usize,
    op: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    let (k, stride) = local_site(spec, label, op)?;
    let n = spec.total_dim();
    if m.rows != n || m.cols != n {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} operator on a {n}-dimensional space",
            m.rows, m.cols
        )));
    }
    let dk = spec.dims[k];
    let split = |idx: usize| {
        let digit = (idx / stride) % dk;
        (digit, idx - digit * stride)
    };
    let left = ComplexMatrix::from_fn(n, n, |r, c| {
        let (digit, base) = split(r);
        (0..dk)
            .map(|j| op[(digit, j)] * m[(base + j * stride, c)])
            .sum()
    });
    Ok(ComplexMatrix::from_fn(n, n, |r, c| {
        let (digit, base) = split(c);
        (0..dk)
            .map(|j| left[(r, base + j * stride)] * op[(digit, j)].conj())
            .sum()
    }))
}

fn local_site(spec: &SubsystemSpec, label: usize, op: &ComplexMatrix) -> Result<(usize, usize)> {
    if label == 0 || label > spec.len() {
        return Err(Error::InvalidSubsystems(format!(
            "label {label} outside 1..={}",
            spec.len()
        )));
    }
    let k = label - 1;
    if op.rows != spec.dims[k] || op.cols != spec.dims[k] {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} operator on a subsystem of dimension {}",
            op.rows, op.cols, spec.dims[k]
        )));
    }
    Ok((k, spec.strides()[k]))
}

/// Full eigendecomposition of a Hermitian matrix. Eigenvalues come back in
/// ascending order with matching eigenvectors as columns.
pub fn eigh(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let sym = checked_symmetrize(m)?;
    let n = sym.rows;
    let a = faer::Mat::<C64>::from_fn(n, n, |i, j| sym.data[i * n + j]);
    let evd = a
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|_| Error::NoConvergence {
            iterations: 0,
            residual: f64::NAN,
        })?;
    let s = evd.S().column_vector();
    let values: Vec<f64> = (0..n).map(|i| s[i].re).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NoConvergence {
            iterations: 0,
            residual: f64::NAN,
        });
    }
    let u = evd.U();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| u[(r, c)]);
    Ok((values, vectors))
}

fn checked_symmetrize(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    let deviation = m.hermitian_deviation();
    if deviation > HERMITIAN_TOL * m.max_abs().max(1.0) {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(m.symmetrized())
}

/// Largest eigenvalue of a Hermitian matrix with a unit eigenvector.
///
/// Dense decomposition up to [`DENSE_EIG_LIMIT`]; above it, shifted power
/// iteration on the symmetrized matrix.
pub fn max_eig_herm(m: &ComplexMatrix) -> Result<(f64, Vec<C64>)> {
    let sym = checked_symmetrize(m)?;
    let n = sym.rows;
    if n == 0 {
        return Err(Error::DimensionMismatch("empty matrix".into()));
    }
    if n <= DENSE_EIG_LIMIT {
        let (values, vectors) = eigh(&sym)?;
        let top = (0..n).map(|r| vectors[(r, n - 1)]).collect();
        return Ok((values[n - 1], top));
    }
    // Gershgorin bound makes M + shift*I positive semidefinite, so the
    // dominant eigenvalue is the algebraically largest one.
    let shift = sym
        .data
        .chunks_exact(n)
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let start: Vec<C64> = (0..n)
        .map(|i| C64::new(1.0 + (i as f64 * 0.618_033_988_75).fract(), 0.0))
        .collect();
    let scale = sym.max_abs().max(1.0);
    let res = power_iteration(
        |v| sym.matvec(v).expect("square"),
        start,
        shift,
        1e-10 * scale,
        200_000,
    )?;
    Ok((res.value, res.vector))
}

#[derive(Clone, Debug)]
pub struct PowerResult {
    pub value: f64,
    pub vector: Vec<C64>,
    /// `||M v - value v||` at termination.
    pub residual: f64,
    pub iterations: usize,
}

/// Power iteration for the dominant eigenpair of a Hermitian operator given
/// as a matrix-vector product. Iterates on `M + shift*I`; the reported
/// value and residual refer to `M` itself (Rayleigh quotient).
pub fn power_iteration(
    apply: impl Fn(&[C64]) -> Vec<C64>,
    start: Vec<C64>,
    shift: f64,
    tol: f64,
    max_iter: usize,
) -> Result<PowerResult> {
    let mut v = start;
    let n0 = norm(&v);
    if n0 == 0.0 {
        return Err(Error::ZeroVector);
    }
    v.iter_mut().for_each(|z| *z /= n0);
    let mut residual = f64::INFINITY;
    for it in 0..=max_iter {
        let mv = apply(&v);
        let value = inner(&v, &mv).re;
        residual = mv
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b * value).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if residual < tol {
            return Ok(PowerResult {
                value,
                vector: v,
                residual,
                iterations: it,
            });
        }
        let mut next: Vec<C64> = mv.iter().zip(&v).map(|(a, b)| a + b * shift).collect();
        let nn = norm(&next);
        if nn == 0.0 {
            return Err(Error::ZeroVector);
        }
        next.iter_mut().for_each(|z| *z /= nn);
        v = next;
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    fn pauli_z() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]])
    }

    #[test]
    fn new_rejects_wrong_length() {
        assert!(ComplexMatrix::new(2, 2, vec![ZERO; 3]).is_err());
    }

    #[test]
    fn kron_identity_and_diagonal() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4));
        let d = ComplexMatrix::from_real_diag(&[1.0, 2.0]);
        assert_eq!(
            kron(&d, &i2),
            ComplexMatrix::from_real_diag(&[1.0, 1.0, 2.0, 2.0])
        );
    }

    #[test]
    fn kron_pauli_matches_index_formula() {
        let (x, z) = (pauli_x(), pauli_z());
        let k = kron(&x, &z);
        // X (x) Z = [[0, Z], [Z, 0]]
        let expected = ComplexMatrix::from_real_rows(&[
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, 0.0, 0.0, -1.0],
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, -1.0, 0.0, 0.0],
        ]);
        assert_eq!(k, expected);
    }

    #[test]
    fn vectorize_identity() {
        let v = vectorize(&ComplexMatrix::identity(2)).unwrap();
        assert_eq!(v, vec![ONE, ZERO, ZERO, ONE]);
        assert!(vectorize(&ComplexMatrix::zeros(2, 3)).is_err());
        assert!(devectorize(&v, 3).is_err());
    }

    #[test]
    fn hs_inner_basics() {
        let i3 = ComplexMatrix::identity(3);
        assert_eq!(hs_inner(&i3, &i3).unwrap(), c(3.0, 0.0));
        assert_eq!(hs_inner(&pauli_x(), &pauli_z()).unwrap(), ZERO);
        assert!(hs_inner(&i3, &ComplexMatrix::identity(2)).is_err());
    }

    #[test]
    fn partial_trace_of_maximally_entangled_projector() {
        let v = vectorize(&ComplexMatrix::identity(2)).unwrap();
        let proj = ComplexMatrix::outer(&v, &v);
        let spec = SubsystemSpec::uniform(2, 2).unwrap();
        let reduced = partial_trace(&proj, &spec, &[2]).unwrap();
        assert_eq!(reduced, ComplexMatrix::identity(2));
        let full = partial_trace(&proj, &spec, &[1, 2]).unwrap();
        assert_eq!((full.rows(), full.cols()), (1, 1));
        assert_eq!(full[(0, 0)], c(2.0, 0.0));
    }

    #[test]
    fn partial_trace_keeps_label_order() {
        // A (x) B (x) C, trace the middle: Tr[B] * A (x) C
        let a = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = ComplexMatrix::from_real_diag(&[2.0, 5.0, 1.0]);
        let cc = ComplexMatrix::from_fn(2, 2, |i, j| c(i as f64, j as f64));
        let full = kron_all(&[&a, &b, &cc]);
        let spec = SubsystemSpec::new(vec![2, 3, 2]).unwrap();
        let got = partial_trace(&full, &spec, &[2]).unwrap();
        let want = kron(&a, &cc).scale_real(8.0);
        assert!(got.max_abs_diff(&want) < 1e-12);
        let got = partial_trace(&full, &spec, &[1, 3]).unwrap();
        let want = b.scale(a.trace() * cc.trace());
        assert!(got.max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn partial_trace_errors() {
        let m = ComplexMatrix::identity(4);
        let spec = SubsystemSpec::uniform(2, 2).unwrap();
        assert!(partial_trace(&m, &SubsystemSpec::uniform(3, 2).unwrap(), &[1]).is_err());
        assert!(partial_trace(&m, &spec, &[]).is_err());
        assert!(partial_trace(&m, &spec, &[3]).is_err());
        assert!(partial_trace(&m, &spec, &[1, 1]).is_err());
        assert!(SubsystemSpec::new(vec![2, 0]).is_err());
    }

    #[test]
    fn local_ops_match_kronecker_embedding() {
        let spec = SubsystemSpec::new(vec![2, 3, 2]).unwrap();
        let op = ComplexMatrix::from_fn(3, 3, |i, j| c((i * 3 + j) as f64, i as f64 - 0.5));
        let full = kron_all(&[
            &ComplexMatrix::identity(2),
            &op,
            &ComplexMatrix::identity(2),
        ]);
        let v: Vec<C64> = (0..12).map(|i| c(i as f64, (i * i) as f64 * 0.1)).collect();
        let got = apply_local_vec(&v, &spec, 2, &op).unwrap();
        let want = full.matvec(&v).unwrap();
        assert!(got.iter().zip(&want).all(|(a, b)| (a - b).norm() < 1e-12));
        let m = ComplexMatrix::from_fn(12, 12, |i, j| c((i + j) as f64, (i * j % 5) as f64));
        let got = conjugate_local(&m, &spec, 2, &op).unwrap();
        let want = &(&full * &m) * &full.dagger();
        assert!(got.max_abs_diff(&want) < 1e-9);
        assert!(apply_local_vec(&v, &spec, 1, &op).is_err());
        assert!(apply_local_vec(&v, &spec, 4, &op).is_err());
    }

    #[test]
    fn max_eig_of_diagonal() {
        let (val, vec) = max_eig_herm(&ComplexMatrix::from_real_diag(&[1.0, 3.0, 2.0])).unwrap();
        assert!((val - 3.0).abs() < 1e-14);
        assert!((vec[1].norm() - 1.0).abs() < 1e-14);
        assert!(vec[0].norm() < 1e-14 && vec[2].norm() < 1e-14);
    }

    #[test]
    fn max_eig_rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(max_eig_herm(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn power_iteration_finds_largest_not_dominant() {
        // eigenvalues -5, 1, 2: the most positive must win even though -5
        // dominates in magnitude.
        let n = DENSE_EIG_LIMIT + 1;
        let mut diag = vec![0.0; n];
        diag[0] = -5.0;
        diag[1] = 1.0;
        diag[2] = 2.0;
        let (val, vec) = max_eig_herm(&ComplexMatrix::from_real_diag(&diag)).unwrap();
        assert!((val - 2.0).abs() < 1e-9, "{val}");
        assert!((vec[2].norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn eigh_sorted_ascending() {
        let m = ComplexMatrix::from_fn(3, 3, |i, j| {
            if i == j {
                c(i as f64, 0.0)
            } else if i < j {
                c(0.1, 0.2)
            } else {
                c(0.1, -0.2)
            }
        });
        let (vals, vecs) = eigh(&m).unwrap();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        for k in 0..3 {
            let v: Vec<C64> = (0..3).map(|r| vecs[(r, k)]).collect();
            let mv = m.matvec(&v).unwrap();
            let res: f64 = mv
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - b * vals[k]).norm())
                .sum();
            assert!(res < 1e-12);
        }
    }
}
