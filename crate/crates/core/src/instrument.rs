//! Measurement instruments in Kraus form on a bipartite `d x d` system.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigh, kron, vectorize, ComplexMatrix, C64, ZERO};

/// Tolerance for POVM completeness and unitarity of guesses.
pub const VALIDITY_TOL: f64 = 1e-10;

/// Outcomes with probability below this are reported as unobservable.
pub const ZERO_PROB_THRESHOLD: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub kraus: Vec<ComplexMatrix>,
    /// Unitary `U_r`; the guessed state is `|U_r>> / sqrt(d)`.
    pub guess: ComplexMatrix,
}

/// Finite instrument acting on `C^d (x) C^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausInstrument {
    dim: usize,
    outcomes: Vec<Outcome>,
}

impl KrausInstrument {
    /// Validates shapes, unitarity of the guesses and POVM completeness.
    pub fn new(dim: usize, outcomes: Vec<Outcome>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::OutOfRange(format!("subsystem dimension {dim} < 2")));
        }
        if outcomes.is_empty() {
            return Err(Error::OutOfRange("instrument has no outcomes".into()));
        }
        let n = dim * dim;
        for (r, out) in outcomes.iter().enumerate() {
            if out.kraus.is_empty() {
                return Err(Error::OutOfRange(format!(
                    "outcome {r} has no Kraus operators"
                )));
            }
            if let Some(k) = out.kraus.iter().find(|k| k.rows() != n || k.cols() != n) {
                return Err(Error::DimensionMismatch(format!(
                    "outcome {r}: Kraus operator is {}x{}, expected {n}x{n}",
                    k.rows(),
                    k.cols()
                )));
            }
            if out.guess.rows() != dim || out.guess.cols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "outcome {r}: guess is {}x{}, expected {dim}x{dim}",
                    out.guess.rows(),
                    out.guess.cols()
                )));
            }
            let dev = out.guess.unitarity_deviation();
            if dev > VALIDITY_TOL {
                return Err(Error::OutOfRange(format!(
                    "outcome {r}: guess is not unitary (deviation {dev:e})"
                )));
            }
        }
        let instr = Self { dim, outcomes };
        let dev = instr.completeness_deviation();
        if dev > VALIDITY_TOL {
            return Err(Error::OutOfRange(format!(
                "POVM is not complete (max |sum Pi_r - I| = {dev:e})"
            )));
        }
        Ok(instr)
    }

    /// Single outcome with Kraus operator `I` and guess `I`.
    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(
            dim,
            vec![Outcome {
                kraus: vec![ComplexMatrix::identity(dim * dim)],
                guess: ComplexMatrix::identity(dim),
            }],
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// `Pi_r = sum_mu A_{r mu}^dag A_{r mu}`.
    pub fn povm_element(&self, r: usize) -> ComplexMatrix {
        povm_of(&self.outcomes[r].kraus, self.dim * self.dim)
    }

    /// `max |sum_r Pi_r - I|`.
    pub fn completeness_deviation(&self) -> f64 {
        let n = self.dim * self.dim;
        let total = (0..self.len()).fold(ComplexMatrix::zeros(n, n), |acc, r| {
            &acc + &self.povm_element(r)
        });
        total.max_abs_diff(&ComplexMatrix::identity(n))
    }

    /// Smallest eigenvalue over all POVM elements.
    pub fn min_povm_eigenvalue(&self) -> Result<f64> {
        let mut min = f64::INFINITY;
        for r in 0..self.len() {
            let (vals, _) = eigh(&self.povm_element(r))?;
            min = min.min(vals[0]);
        }
        Ok(min)
    }
}

fn povm_of(kraus: &[ComplexMatrix], n: usize) -> ComplexMatrix {
    kraus.iter().fold(ComplexMatrix::zeros(n, n), |acc, a| {
        &acc + &(&a.dagger() * a)
    })
}

/// `rho -> sum_k K_k rho K_k^dag`.
pub fn apply_kraus(kraus: &[ComplexMatrix], rho: &ComplexMatrix) -> ComplexMatrix {
    let n = rho.rows();
    kraus.iter().fold(ComplexMatrix::zeros(n, n), |acc, k| {
        &acc + &(&(k * rho) * &k.dagger())
    })
}

/// Parameters `(a, b)` of the optimal instrument `A = a|U>><<U| + b I`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalParams {
    pub a: f64,
    pub b: f64,
    pub dim: usize,
}

impl OptimalParams {
    /// Fills in `b` from the trace normalization.
    pub fn new(a: f64, dim: usize) -> Result<Self> {
        let b = b_from_a(a, dim)?;
        Ok(Self { a, b, dim })
    }

    /// `(a^2 + b^2) d^2 + 2 a b d - d^2`; zero for a valid instrument.
    pub fn normalization_residual(&self) -> f64 {
        normalization_residual(self.a, self.b, self.dim)
    }
}

pub fn normalization_residual(a: f64, b: f64, d: usize) -> f64 {
    let d = d as f64;
    (a * a + b * b) * d * d + 2.0 * a * b * d - d * d
}

/// Non-negative root `b = (sqrt(d^2 (1 - a^2) + a^2) - a) / d` of the
/// normalization `(a^2 + b^2) d^2 + 2abd = d^2`.
pub fn b_from_a(a: f64, d: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::OutOfRange(format!("a = {a} outside [0, 1]")));
    }
    if d < 2 {
        return Err(Error::OutOfRange(format!("dimension {d} < 2")));
    }
    let df = d as f64;
    let b = ((df * df * (1.0 - a * a) + a * a).sqrt() - a) / df;
    // rounding can leave -0.0 or -1e-17 at a = 1
    Ok(b.max(0.0))
}

/// Shift `X|j> = |j+1>` and clock `Z|j> = w^j |j>` products `X^m Z^n`,
/// listed with index `m*d + n`. Pairwise `<<U_r|U_s>> = d delta_rs`.
pub fn weyl_basis(d: usize) -> Vec<ComplexMatrix> {
    let root = |k: usize| {
        let k = k % d;
        match (4 * k) % d {
            // exact values at quarter turns keep Pauli entries integral
            0 => match (4 * k) / d {
                0 => C64::new(1.0, 0.0),
                1 => C64::new(0.0, 1.0),
                2 => C64::new(-1.0, 0.0),
                _ => C64::new(0.0, -1.0),
            },
            _ => C64::from_polar(1.0, 2.0 * PI * k as f64 / d as f64),
        }
    };
    let mut basis = Vec::with_capacity(d * d);
    for m in 0..d {
        for n in 0..d {
            basis.push(ComplexMatrix::from_fn(d, d, |i, j| {
                if i == (j + m) % d {
                    root(n * j)
                } else {
                    ZERO
                }
            }));
        }
    }
    basis
}

/// Kraus operator `c (a |U>><<U| + b I)` on `C^d (x) C^d`.
pub fn werner_kraus(u: &ComplexMatrix, a: f64, b: f64, c: f64) -> ComplexMatrix {
    let ket = vectorize(u).expect("square unitary");
    let n = ket.len();
    let mut k = ComplexMatrix::outer(&ket, &ket).scale_real(a * c);
    for i in 0..n {
        k[(i, i)] += C64::new(b * c, 0.0);
    }
    k
}

/// The `d^2`-outcome instrument `A_r = (a|U_r>><<U_r| + b I) / d` over the
/// Weyl basis, guessing `U_r` on outcome `r`.
pub fn optimal_discrete_instrument(params: &OptimalParams) -> Result<KrausInstrument> {
    let d = params.dim;
    let outcomes = weyl_basis(d)
        .into_iter()
        .map(|u| Outcome {
            kraus: vec![werner_kraus(&u, params.a, params.b, 1.0 / d as f64)],
            guess: u,
        })
        .collect();
    KrausInstrument::new(d, outcomes)
}

/// Checks that `rho` is a density matrix on `n` dimensions.
fn validate_density(rho: &ComplexMatrix, n: usize) -> Result<()> {
    if rho.rows() != n || rho.cols() != n {
        return Err(Error::InvalidDensity(format!(
            "{}x{} state for a {n}-dimensional system",
            rho.rows(),
            rho.cols()
        )));
    }
    if !rho.is_hermitian(VALIDITY_TOL) {
        return Err(Error::InvalidDensity("not Hermitian".into()));
    }
    let tr = rho.trace();
    if (tr - C64::new(1.0, 0.0)).norm() > VALIDITY_TOL {
        return Err(Error::InvalidDensity(format!("trace {tr} != 1")));
    }
    let (vals, _) = eigh(rho)?;
    if vals[0] < -VALIDITY_TOL {
        return Err(Error::InvalidDensity(format!(
            "negative eigenvalue {:e}",
            vals[0]
        )));
    }
    Ok(())
}

/// Outcome `r` on `rho`: the conditional state and its probability.
pub fn apply(
    instr: &KrausInstrument,
    rho: &ComplexMatrix,
    r: usize,
) -> Result<(ComplexMatrix, f64)> {
    let n = instr.dim * instr.dim;
    validate_density(rho, n)?;
    let outcome = instr
        .outcomes
        .get(r)
        .ok_or_else(|| Error::OutOfRange(format!("outcome {r} of {}", instr.len())))?;
    let unnormalized = apply_kraus(&outcome.kraus, rho);
    let prob = unnormalized.trace().re;
    if prob < ZERO_PROB_THRESHOLD {
        return Err(Error::ZeroProbability { prob });
    }
    Ok((unnormalized.scale_real(1.0 / prob), prob))
}

/// Kraus operators of the covariant instrument built from `seed`, evaluated
/// at the continuous outcome `h`:
/// `{(U_h U_r^dag (x) I) A_{r mu} (U_r U_h^dag (x) I)}` over all `r, mu`.
/// The associated guess is `U_h` itself.
pub fn covariant_kraus_at(seed: &KrausInstrument, h: &ComplexMatrix) -> Result<Vec<ComplexMatrix>> {
    let d = seed.dim;
    if h.rows() != d || h.cols() != d {
        return Err(Error::DimensionMismatch(format!(
            "outcome unitary is {}x{}, expected {d}x{d}",
            h.rows(),
            h.cols()
        )));
    }
    let id = ComplexMatrix::identity(d);
    let mut ops = Vec::new();
    for out in &seed.outcomes {
        let left = kron(&(h * &out.guess.dagger()), &id);
        let right = left.dagger();
        for a in &out.kraus {
            ops.push(&(&left * a) * &right);
        }
    }
    Ok(ops)
}
