//! Choi operators on `H1 (x) H2 (x) H3 (x) H4` and the eigenvalue problem
//! for the optimal covariant instrument.
//!
//! Subsystems 1 and 2 carry the instrument output, 3 and 4 the input copy.
//! A Kraus operator `A` on `H1 (x) H2` corresponds to the vector `|A>>` split
//! across `(12)|(34)`, so `|I>>_13 |I>>_24` is the identity map and
//! `|I>>_12 |I>>_34` is the Bell projector `|I>><<I|`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fidelity::{visibilities, TradeoffPoint};
use crate::haar::{mc_average, McAverage, SeededStream};
use crate::linalg::{
    apply_local_vec, conjugate_local, devectorize, eigh, inner, kron, nan_max, norm, partial_trace,
    power_iteration, vectorize, ComplexMatrix, SubsystemSpec, C64, ZERO,
};

/// Largest subsystem dimension for which `optimize` runs a full dense
/// eigensolve (operator dimension `d^4 = 256`).
pub const DENSE_OPTIMIZE_MAX_DIM: usize = 4;

/// Top eigenvalues closer than this are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// A pair of subsystem labels, 1-based.
type Pair = (usize, usize);

fn digits4(idx: usize, d: usize) -> [usize; 4] {
    [
        idx / (d * d * d),
        (idx / (d * d)) % d,
        (idx / d) % d,
        idx % d,
    ]
}

/// Entry `(r, c)` of the product of unnormalized maximally entangled
/// projectors on disjoint `pairs`, identity on every other subsystem.
fn projector_entry(d: usize, pairs: &[Pair], r: usize, c: usize) -> f64 {
    let (ri, ci) = (digits4(r, d), digits4(c, d));
    let mut touched = [false; 4];
    for &(a, b) in pairs {
        let (a, b) = (a - 1, b - 1);
        if ri[a] != ri[b] || ci[a] != ci[b] {
            return 0.0;
        }
        touched[a] = true;
        touched[b] = true;
    }
    if (0..4).any(|k| !touched[k] && ri[k] != ci[k]) {
        return 0.0;
    }
    1.0
}

/// Applies the projector `|I>>_ab <<I|` to a vector on four `d`-dimensional
/// subsystems.
fn apply_pair_projector(v: &[C64], d: usize, (a, b): Pair) -> Vec<C64> {
    let strides = [d * d * d, d * d, d, 1];
    let (sa, sb) = (strides[a - 1], strides[b - 1]);
    let mut out = vec![ZERO; v.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let dg = digits4(idx, d);
        if dg[a - 1] != dg[b - 1] {
            continue;
        }
        let base = idx - dg[a - 1] * (sa + sb);
        *o = (0..d).map(|k| v[base + k * (sa + sb)]).sum();
    }
    out
}

fn rf_prefactor(d: usize) -> f64 {
    let dd = (d * d) as f64;
    1.0 / (dd * (dd - 1.0))
}

/// `R_F v` without materializing `R_F`.
pub fn apply_rf(v: &[C64], d: usize) -> Vec<C64> {
    let k = rf_prefactor(d);
    let inv_d = 1.0 / d as f64;
    let p13 = apply_pair_projector(v, d, (1, 3));
    let p24 = apply_pair_projector(v, d, (2, 4));
    let both = apply_pair_projector(&p13, d, (2, 4));
    (0..v.len())
        .map(|i| (v[i] + both[i] - (p24[i] + p13[i]) * inv_d) * k)
        .collect()
}

/// `R_G v` without materializing `R_G`.
pub fn apply_rg(v: &[C64], d: usize) -> Vec<C64> {
    let k = rf_prefactor(d);
    let dd = (d * d) as f64;
    let p34 = apply_pair_projector(v, d, (3, 4));
    (0..v.len())
        .map(|i| (v[i] * (1.0 - 2.0 / dd) + p34[i] / d as f64) * k)
        .collect()
}

/// `C(p) v = p R_G v + (1 - p) R_F v`.
pub fn apply_objective(v: &[C64], p: f64, d: usize) -> Vec<C64> {
    let rf = apply_rf(v, d);
    let rg = apply_rg(v, d);
    rf.iter()
        .zip(&rg)
        .map(|(f, g)| g * p + f * (1.0 - p))
        .collect()
}

/// Positive operator on four `d`-dimensional subsystems.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiOperator {
    matrix: ComplexMatrix,
    spec: SubsystemSpec,
    dim: usize,
}

impl ChoiOperator {
    pub fn new(matrix: ComplexMatrix, dim: usize) -> Result<Self> {
        let n = dim.pow(4);
        if matrix.rows() != n || matrix.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} operator, expected {n}x{n} for d = {dim}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        Ok(Self {
            matrix,
            spec: SubsystemSpec::uniform(dim, 4)?,
            dim,
        })
    }

    /// `R = sum_k |A_k>><<A_k|` for a CP map with Kraus operators `A_k` on
    /// `H1 (x) H2`.
    pub fn from_kraus(kraus: &[ComplexMatrix], dim: usize) -> Result<Self> {
        let n = dim.pow(4);
        let mut m = ComplexMatrix::zeros(n, n);
        for a in kraus {
            let v = vectorize(a)?;
            m = &m + &ComplexMatrix::outer(&v, &v);
        }
        Self::new(m, dim)
    }

    /// `R_0 = d^2 |chi><chi| / <chi|chi>`.
    pub fn from_chi(chi: &ChiVector) -> Result<Self> {
        let v = chi.normalized()?;
        let d = chi.dim;
        Self::new(ComplexMatrix::outer(&v, &v).scale_real((d * d) as f64), d)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn spec(&self) -> &SubsystemSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            matrix: self.matrix.scale_real(s),
            spec: self.spec.clone(),
            dim: self.dim,
        }
    }

    /// `Tr[self * other]`.
    pub fn pairing(&self, other: &ChoiOperator) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!(
                "d = {} vs d = {}",
                self.dim, other.dim
            )));
        }
        let n = self.matrix.rows();
        let mut acc = ZERO;
        for i in 0..n {
            for j in 0..n {
                acc += self.matrix[(i, j)] * other.matrix[(j, i)];
            }
        }
        Ok(acc.re)
    }

    /// The channel encoded by this operator:
    /// `E(rho) = Tr_34[(I_12 (x) rho^T) R]`.
    pub fn apply_channel(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let dd = self.dim * self.dim;
        if rho.rows() != dd || rho.cols() != dd {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} input on a {dd}-dimensional space",
                rho.rows(),
                rho.cols()
            )));
        }
        let lifted = kron(&ComplexMatrix::identity(dd), &rho.transpose());
        partial_trace(&(&lifted * &self.matrix), &self.spec, &[3, 4])
    }

    /// `R_g = (U^(1) (x) U*^(3)) R (U^(1) (x) U*^(3))^dag`.
    pub fn rotated(&self, u: &ComplexMatrix) -> Result<ComplexMatrix> {
        let step = conjugate_local(&self.matrix, &self.spec, 1, u)?;
        conjugate_local(&step, &self.spec, 3, &u.conj())
    }
}

fn projector_sum(d: usize, terms: &[(f64, &[Pair])]) -> ComplexMatrix {
    let n = d.pow(4);
    ComplexMatrix::from_fn(n, n, |r, c| {
        let v: f64 = terms
            .iter()
            .map(|(w, pairs)| w * projector_entry(d, pairs, r, c))
            .sum();
        C64::new(v, 0.0)
    })
}

/// `R_F = [I + P13 P24 - (P13 + P24)/d] / (d^2 (d^2 - 1))`, with `Pij` the
/// unnormalized maximally entangled projector on subsystems `i, j`.
pub fn build_rf(d: usize) -> Result<ChoiOperator> {
    if d < 2 {
        return Err(Error::OutOfRange(format!("dimension {d} < 2")));
    }
    let k = rf_prefactor(d);
    let inv_d = 1.0 / d as f64;
    let m = projector_sum(
        d,
        &[
            (k, &[]),
            (k, &[(1, 3), (2, 4)]),
            (-k * inv_d, &[(2, 4)]),
            (-k * inv_d, &[(1, 3)]),
        ],
    );
    ChoiOperator::new(m, d)
}

/// `R_G = [(1 - 2/d^2) I + P34 / d] / (d^2 (d^2 - 1))`.
pub fn build_rg(d: usize) -> Result<ChoiOperator> {
    if d < 2 {
        return Err(Error::OutOfRange(format!("dimension {d} < 2")));
    }
    let k = rf_prefactor(d);
    let dd = (d * d) as f64;
    let m = projector_sum(d, &[(k * (1.0 - 2.0 / dd), &[]), (k / d as f64, &[(3, 4)])]);
    ChoiOperator::new(m, d)
}

/// `|I>>_ab |I>>_ce` as a vector on four `d`-dimensional subsystems.
pub fn entangled_pair_vector(d: usize, first: Pair, second: Pair) -> Vec<C64> {
    (0..d.pow(4))
        .map(|idx| {
            let dg = digits4(idx, d);
            let hit = dg[first.0 - 1] == dg[first.1 - 1] && dg[second.0 - 1] == dg[second.1 - 1];
            if hit {
                C64::new(1.0, 0.0)
            } else {
                ZERO
            }
        })
        .collect()
}

/// `|I>>_12 |I>>_34`, the Choi vector of the Bell projector.
pub fn bell_chi(d: usize) -> Vec<C64> {
    entangled_pair_vector(d, (1, 2), (3, 4))
}

/// `|I>>_13 |I>>_24`, the Choi vector of the identity map.
pub fn identity_chi(d: usize) -> Vec<C64> {
    entangled_pair_vector(d, (1, 3), (2, 4))
}

/// `|chi> = x |I>>_12 |I>>_34 + y |I>>_13 |I>>_24`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiVector {
    pub x: f64,
    pub y: f64,
    pub dim: usize,
}

impl ChiVector {
    pub fn new(x: f64, y: f64, dim: usize) -> Self {
        Self { x, y, dim }
    }

    /// `<chi|chi> = (x^2 + y^2) d^2 + 2xyd`; the two basis vectors overlap
    /// by `d`.
    pub fn norm_sqr(&self) -> f64 {
        let d = self.dim as f64;
        (self.x * self.x + self.y * self.y) * d * d + 2.0 * self.x * self.y * d
    }

    pub fn to_vector(&self) -> Vec<C64> {
        let b = bell_chi(self.dim);
        let i = identity_chi(self.dim);
        b.iter()
            .zip(&i)
            .map(|(p, q)| p * self.x + q * self.y)
            .collect()
    }

    pub fn normalized(&self) -> Result<Vec<C64>> {
        let n = self.norm_sqr();
        if n <= 0.0 || !n.is_finite() {
            return Err(Error::ZeroVector);
        }
        let s = 1.0 / n.sqrt();
        Ok(self.to_vector().into_iter().map(|z| z * s).collect())
    }

    /// Largest deviation `max |Tr_134[R_0] - d I|` for
    /// `R_0 = d^2 |chi><chi| / <chi|chi>`, computed on the vector.
    pub fn tp_deviation(&self) -> Result<f64> {
        let v = self.normalized()?;
        let d = self.dim;
        let dd = (d * d) as f64;
        let mut worst: f64 = 0.0;
        for i2 in 0..d {
            for j2 in 0..d {
                let mut acc = ZERO;
                for i1 in 0..d {
                    for rest in 0..d * d {
                        let a = i1 * d * d * d + i2 * d * d + rest;
                        let b = i1 * d * d * d + j2 * d * d + rest;
                        acc += v[a] * v[b].conj();
                    }
                }
                let target = if i2 == j2 { d as f64 } else { 0.0 };
                worst = nan_max(worst, (acc * dd - C64::new(target, 0.0)).norm());
            }
        }
        Ok(worst)
    }
}

/// Kraus seed `A = a |I>><<I| + b I` recovered from a Choi vector.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausSeed {
    pub kraus: ComplexMatrix,
    pub a: f64,
    pub b: f64,
}

/// Splits `|chi>` across `(12)|(34)` after scaling it so that
/// `Tr[R_0] = d^2`; the result is the instrument's Kraus operator at the
/// group identity.
pub fn chi_to_kraus(chi: &ChiVector) -> Result<KrausSeed> {
    let n = chi.norm_sqr();
    if n <= 0.0 || !n.is_finite() {
        return Err(Error::ZeroVector);
    }
    let d = chi.dim;
    let s = d as f64 / n.sqrt();
    let v: Vec<C64> = chi.to_vector().into_iter().map(|z| z * s).collect();
    Ok(KrausSeed {
        kraus: devectorize(&v, d * d)?,
        a: chi.x * s,
        b: chi.y * s,
    })
}

/// Diagnostics of the trace-preservation condition for a seed operator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TpReport {
    /// `max |Tr_134[R_0] - d I|`.
    pub tr134_deviation: f64,
    /// `|Tr[R_0] - d^2|`.
    pub trace_deviation: f64,
    pub min_eigenvalue: f64,
}

pub fn verify_tp(r0: &ChoiOperator) -> Result<TpReport> {
    let d = r0.dim;
    let reduced = partial_trace(&r0.matrix, &r0.spec, &[1, 3, 4])?;
    let target = ComplexMatrix::identity(d).scale_real(d as f64);
    let (vals, _) = eigh(&r0.matrix)?;
    Ok(TpReport {
        tr134_deviation: reduced.max_abs_diff(&target),
        trace_deviation: (r0.matrix.trace().re - (d * d) as f64).abs(),
        min_eigenvalue: vals[0],
    })
}

/// Monte-Carlo estimate of `int dg Tr_34[R_g]`, which equals `I_12` exactly
/// when `R_0` satisfies the trace-preservation condition.
pub fn tp_condition_mc(r0: &ChoiOperator, n: usize, stream: SeededStream) -> Result<McAverage> {
    let d = r0.dim;
    mc_average(
        |u| {
            let rg = r0.rotated(u).expect("dimensions fixed by the operator");
            partial_trace(&rg, &r0.spec, &[3, 4]).expect("four subsystems")
        },
        d,
        n,
        stream,
    )
}

/// Integrand of `R_F` at `U`:
/// `(1/d^2) (U^(1) (x) U*^(3)) |I>>_12|I>>_34 <<.|  (U^(1) (x) U*^(3))^dag`.
pub fn rf_integrand(u: &ComplexMatrix) -> ComplexMatrix {
    let d = u.rows();
    let spec = SubsystemSpec::uniform(d, 4).expect("d >= 1");
    let v = apply_local_vec(&bell_chi(d), &spec, 1, u).expect("shape");
    let v = apply_local_vec(&v, &spec, 3, &u.conj()).expect("shape");
    ComplexMatrix::outer(&v, &v).scale_real(1.0 / (d * d) as f64)
}

/// Integrand of `R_G` at `U`:
/// `(1/d^3) |<<I|U>>|^2 U*^(3) (I_12 (x) |I>>_34<<I|) U^T(3)`.
pub fn rg_integrand(u: &ComplexMatrix) -> ComplexMatrix {
    let d = u.rows();
    let weight = u.trace().norm_sqr() / (d * d * d) as f64;
    // U* on subsystem 3 maps |I>>_34 to |U*>>_34
    let ket = vectorize(&u.conj()).expect("square");
    kron(
        &ComplexMatrix::identity(d * d),
        &ComplexMatrix::outer(&ket, &ket).scale_real(weight),
    )
}

/// Generalized eigenproblem `M c = lambda S c` in the span of
/// `{|I>>_12|I>>_34, |I>>_13|I>>_24}` with Gram matrix
/// `S = [[d^2, d], [d, d^2]]`. Returns the larger eigenvalue and its
/// coefficient pair with the sign fixed so that `x + y >= 0`.
fn reduced_eigenproblem(m: [[f64; 2]; 2], d: usize) -> (f64, f64, f64) {
    let df = d as f64;
    let s = [[df * df, df], [df, df * df]];
    let a2 = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    let a1 = -(m[0][0] * s[1][1] + m[1][1] * s[0][0] - m[0][1] * s[1][0] - m[1][0] * s[0][1]);
    let a0 = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = (a1 * a1 - 4.0 * a2 * a0).max(0.0);
    let lambda = (-a1 + disc.sqrt()) / (2.0 * a2);
    let r1 = [m[0][0] - lambda * s[0][0], m[0][1] - lambda * s[0][1]];
    let r2 = [m[1][0] - lambda * s[1][0], m[1][1] - lambda * s[1][1]];
    let row = if r1[0].hypot(r1[1]) >= r2[0].hypot(r2[1]) {
        r1
    } else {
        r2
    };
    let (mut x, mut y) = if row[0] == 0.0 && row[1] == 0.0 {
        (0.0, 1.0)
    } else {
        (row[1], -row[0])
    };
    if x + y < 0.0 {
        x = -x;
        y = -y;
    }
    // roundoff-level negative components belong to the boundary of the
    // positive quadrant
    let scale = x.abs().max(y.abs());
    if x < 0.0 && x > -1e-12 * scale {
        x = 0.0;
    }
    if y < 0.0 && y > -1e-12 * scale {
        y = 0.0;
    }
    (lambda, x, y)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    /// Full dense eigendecomposition of `C(p)`.
    Dense,
    /// Two-dimensional reduction checked by power iteration.
    Reduced,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub p: f64,
    pub point: TradeoffPoint,
    pub chi: ChiVector,
    /// Largest eigenvalue of `C(p)`; equals `p G + (1 - p) F` / `d^2`.
    pub eigenvalue: f64,
    /// Distance of the top eigenvector from the two-dimensional span
    /// (dense path), or relative eigen-equation residual of the reduced
    /// solution (reduced path).
    pub form_residual: f64,
    /// `Some(true)` when the top eigenvalue is degenerate; only known on the
    /// dense path.
    pub degenerate: Option<bool>,
    pub method: EigenMethod,
}

/// Maximizes `p G + (1 - p) F` over covariant instruments via the top
/// eigenvector of `C(p) = p R_G + (1 - p) R_F`.
pub fn optimize(p: f64, d: usize) -> Result<OptimizeResult> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange(format!("p = {p} outside [0, 1]")));
    }
    if d < 2 {
        return Err(Error::OutOfRange(format!("dimension {d} < 2")));
    }
    let basis = [bell_chi(d), identity_chi(d)];
    let images = [
        apply_objective(&basis[0], p, d),
        apply_objective(&basis[1], p, d),
    ];
    let mut m = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = inner(&basis[i], &images[j]).re;
        }
    }
    let (lambda, x, y) = reduced_eigenproblem(m, d);
    let chi = ChiVector::new(x, y, d);
    let chi_unit = chi.normalized()?;

    let (form_residual, degenerate, method) = if d <= DENSE_OPTIMIZE_MAX_DIM {
        let (res, degen) = dense_form_residual(p, d, &basis, &chi_unit)?;
        (res, Some(degen), EigenMethod::Dense)
    } else {
        (
            reduced_form_residual(p, d, lambda, &chi_unit)?,
            None,
            EigenMethod::Reduced,
        )
    };

    let dd = (d * d) as f64;
    let f = inner(&chi_unit, &apply_rf(&chi_unit, d)).re * dd;
    let g = inner(&chi_unit, &apply_rg(&chi_unit, d)).re * dd;
    let seed = chi_to_kraus(&chi)?;
    let (info, disturbance) = visibilities(f.clamp(0.0, 1.0), g.clamp(0.0, 1.0), d)?;
    Ok(OptimizeResult {
        p,
        point: TradeoffPoint {
            a: seed.a.clamp(0.0, 1.0),
            b: seed.b.max(0.0),
            f,
            g,
            info,
            disturbance,
        },
        chi,
        eigenvalue: lambda,
        form_residual,
        degenerate,
        method,
    })
}

fn dense_form_residual(
    p: f64,
    d: usize,
    basis: &[Vec<C64>; 2],
    chi_unit: &[C64],
) -> Result<(f64, bool)> {
    let rf = build_rf(d)?;
    let rg = build_rg(d)?;
    let c = &rg.matrix.scale_real(p) + &rf.matrix.scale_real(1.0 - p);
    let (vals, vecs) = eigh(&c)?;
    let n = vals.len();
    let top = vals[n - 1];
    let column = |k: usize| (0..n).map(|r| vecs[(r, k)]).collect::<Vec<_>>();
    let degenerate = top - vals[n - 2] < DEGENERACY_TOL;
    if !degenerate {
        let v = column(n - 1);
        return Ok((span_distance(&v, basis, d), false));
    }
    // distance of the reduced solution from the top eigenspace
    let mut proj = vec![ZERO; n];
    for k in (0..n).rev().take_while(|&k| top - vals[k] < DEGENERACY_TOL) {
        let e = column(k);
        let w = inner(&e, chi_unit);
        for (pi, ei) in proj.iter_mut().zip(&e) {
            *pi += ei * w;
        }
    }
    let diff: Vec<C64> = chi_unit.iter().zip(&proj).map(|(a, b)| a - b).collect();
    Ok((norm(&diff), true))
}

/// `||v - P v||` with `P` the orthogonal projector onto the span of the two
/// (non-orthogonal) basis vectors.
fn span_distance(v: &[C64], basis: &[Vec<C64>; 2], d: usize) -> f64 {
    let df = d as f64;
    let b0 = inner(&basis[0], v);
    let b1 = inner(&basis[1], v);
    let det = df.powi(4) - df * df;
    let c0 = (b0 * df * df - b1 * df) / det;
    let c1 = (b1 * df * df - b0 * df) / det;
    let diff: Vec<C64> = (0..v.len())
        .map(|i| v[i] - basis[0][i] * c0 - basis[1][i] * c1)
        .collect();
    norm(&diff)
}

fn reduced_form_residual(p: f64, d: usize, lambda: f64, chi_unit: &[C64]) -> Result<f64> {
    let image = apply_objective(chi_unit, p, d);
    let eq: Vec<C64> = image
        .iter()
        .zip(chi_unit)
        .map(|(a, b)| a - b * lambda)
        .collect();
    let eq_residual = norm(&eq) / lambda;
    // independent power iteration from a generic start confirms that no
    // eigenvalue lies above the reduced one
    let n = chi_unit.len();
    let start: Vec<C64> = (0..n)
        .map(|i| C64::new(1.0 + (i as f64 * 0.618_033_988_75).fract(), 0.0))
        .collect();
    let power = power_iteration(
        |v| apply_objective(v, p, d),
        start,
        0.0,
        1e-12 * lambda,
        100_000,
    )?;
    let excess = ((power.value - lambda) / lambda).max(0.0);
    Ok(nan_max(eq_residual, excess))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fidelity::{closed_form_f, closed_form_g};
    use crate::instrument::werner_kraus;
    use crate::linalg::max_eig_herm;

    #[test]
    fn unit_trace_and_hermitian() {
        for d in 2..=4 {
            for r in [build_rf(d).unwrap(), build_rg(d).unwrap()] {
                assert!((r.matrix().trace().re - 1.0).abs() < 1e-12);
                assert!(r.matrix().hermitian_deviation() < 1e-15);
                let (vals, _) = eigh(r.matrix()).unwrap();
                assert!(vals[0] > -1e-12);
            }
        }
    }

    #[test]
    fn matrix_free_apply_matches_dense() {
        for d in 2..=3 {
            let rf = build_rf(d).unwrap();
            let rg = build_rg(d).unwrap();
            let v: Vec<C64> = (0..d.pow(4))
                .map(|i| C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
                .collect();
            let dense = rf.matrix().matvec(&v).unwrap();
            let free = apply_rf(&v, d);
            assert!(dense.iter().zip(&free).all(|(a, b)| (a - b).norm() < 1e-14));
            let dense = rg.matrix().matvec(&v).unwrap();
            let free = apply_rg(&v, d);
            assert!(dense.iter().zip(&free).all(|(a, b)| (a - b).norm() < 1e-14));
        }
    }

    #[test]
    fn top_eigenvalues_of_rf_and_rg() {
        let (lf, vf) = max_eig_herm(build_rf(2).unwrap().matrix()).unwrap();
        assert!((lf - 0.25).abs() < 1e-12);
        let id = identity_chi(2);
        assert!((inner(&id, &vf).norm() - 2.0).abs() < 1e-12);
        let (lg, _) = max_eig_herm(build_rg(2).unwrap().matrix()).unwrap();
        assert!((lg - 0.125).abs() < 1e-12);
    }

    #[test]
    fn identity_map_has_unit_f_and_random_g() {
        for d in 2..=4 {
            let dd = (d * d) as f64;
            let chi = ChiVector::new(0.0, 1.0, d);
            let r0 = ChoiOperator::from_chi(&chi).unwrap();
            assert!((build_rf(d).unwrap().pairing(&r0).unwrap() - 1.0).abs() < 1e-12);
            assert!((build_rg(d).unwrap().pairing(&r0).unwrap() - 1.0 / dd).abs() < 1e-12);
        }
    }

    #[test]
    fn basis_overlap_is_d() {
        for d in 2..=5 {
            let (b, i) = (bell_chi(d), identity_chi(d));
            assert_eq!(inner(&b, &i), C64::new(d as f64, 0.0));
            assert_eq!(inner(&b, &b), C64::new((d * d) as f64, 0.0));
            let chi = ChiVector::new(0.3, 0.7, d);
            assert!((norm(&chi.to_vector()).powi(2) - chi.norm_sqr()).abs() < 1e-12);
        }
    }

    #[test]
    fn chi_to_kraus_endpoints() {
        let seed = chi_to_kraus(&ChiVector::new(0.0, 1.0, 3)).unwrap();
        assert!(seed.kraus.max_abs_diff(&ComplexMatrix::identity(9)) < 1e-15);
        assert_eq!((seed.a, seed.b), (0.0, 1.0));
        let seed = chi_to_kraus(&ChiVector::new(1.0, 0.0, 2)).unwrap();
        let bell = werner_kraus(&ComplexMatrix::identity(2), 1.0, 0.0, 1.0);
        assert!(seed.kraus.max_abs_diff(&bell) < 1e-15);
        assert_eq!((seed.a, seed.b), (1.0, 0.0));
        assert!(matches!(
            chi_to_kraus(&ChiVector::new(0.0, 0.0, 2)),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn choi_of_kraus_matches_chi_form() {
        let (a, d) = (0.6, 3);
        let b = crate::instrument::b_from_a(a, d).unwrap();
        let from_kraus =
            ChoiOperator::from_kraus(&[werner_kraus(&ComplexMatrix::identity(d), a, b, 1.0)], d)
                .unwrap();
        let from_chi = ChoiOperator::from_chi(&ChiVector::new(a, b, d)).unwrap();
        assert!(from_kraus.matrix().max_abs_diff(from_chi.matrix()) < 1e-12);
        let rf = build_rf(d).unwrap();
        let rg = build_rg(d).unwrap();
        assert!((rf.pairing(&from_chi).unwrap() - closed_form_f(a, d).unwrap()).abs() < 1e-10);
        assert!((rg.pairing(&from_chi).unwrap() - closed_form_g(a, d).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn channel_round_trip() {
        let d = 2;
        let u = crate::haar::SeededStream::new(8, 0).unitary(2, 0).unwrap();
        let k = werner_kraus(&u, 0.4, 0.7, 1.0);
        let r = ChoiOperator::from_kraus(std::slice::from_ref(&k), d).unwrap();
        let rho = ComplexMatrix::from_fn(4, 4, |i, j| {
            C64::new(
                1.0 / (1.0 + i as f64 + j as f64),
                (i as f64 - j as f64) * 0.05,
            )
        });
        let direct = &(&k * &rho) * &k.dagger();
        assert!(r.apply_channel(&rho).unwrap().max_abs_diff(&direct) < 1e-13);
    }

    #[test]
    fn tp_report_flags_scaling() {
        let r0 = ChoiOperator::from_chi(&ChiVector::new(0.4, 0.9, 2)).unwrap();
        let ok = verify_tp(&r0).unwrap();
        assert!(ok.tr134_deviation < 1e-12 && ok.trace_deviation < 1e-12);
        assert!(ok.min_eigenvalue > -1e-12);
        let bad = verify_tp(&r0.scaled(2.0)).unwrap();
        assert!((bad.trace_deviation - 4.0).abs() < 1e-12);
        assert!(ChiVector::new(0.4, 0.9, 2).tp_deviation().unwrap() < 1e-12);
    }

    #[test]
    fn optimize_endpoints() {
        for d in 2..=4 {
            let dd = (d * d) as f64;
            let r = optimize(0.0, d).unwrap();
            assert!(r.point.a.abs() < 1e-12 && (r.point.f - 1.0).abs() < 1e-12);
            assert!((r.point.g - 1.0 / dd).abs() < 1e-12);
            assert!(r.form_residual < 1e-10, "{}", r.form_residual);
            let r = optimize(1.0, d).unwrap();
            assert!((r.point.f - 2.0 / dd).abs() < 1e-12);
            assert!((r.point.g - 2.0 / dd).abs() < 1e-12);
            assert_eq!(r.degenerate, Some(true));
            assert!(r.form_residual < 1e-10);
        }
        assert!(optimize(1.5, 2).is_err());
        assert!(optimize(-0.5, 2).is_err());
    }

    #[test]
    fn rg_from_rf_identity() {
        // R_G = (1/d) I_12 (x) Tr_12[(P12 (x) I_34) R_F]
        for d in 2..=3 {
            let rf = build_rf(d).unwrap();
            let p12 = projector_sum(d, &[(1.0, &[(1, 2)])]);
            let reduced = partial_trace(&(&p12 * rf.matrix()), rf.spec(), &[1, 2]).unwrap();
            let lifted = kron(&ComplexMatrix::identity(d * d), &reduced).scale_real(1.0 / d as f64);
            assert!(lifted.max_abs_diff(build_rg(d).unwrap().matrix()) < 1e-12);
        }
    }
}
