//! Haar-random unitaries and reproducible Monte-Carlo averages over U(d).
//!
//! Sampling is over U(d) rather than SU(d). Every average computed in this
//! crate depends on a sampled unitary only through `U (x) U*` or
//! `|U>><<U|`, both blind to a global phase, so the two group averages are
//! identical.
//!
//! Each sample draws its randomness from a ChaCha stream addressed by
//! `(seed, stream index, sample index)`. Samples are grouped in fixed-size
//! chunks and the chunk statistics are merged along a fixed pairwise tree,
//! so results are bit-identical for any thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{inner, kron, vectorize, ComplexMatrix, C64, ZERO};

/// Samples per reduction chunk. Part of the reproducibility contract:
/// changing it changes the floating-point summation order.
const CHUNK: usize = 512;

/// Word offset reserved for each sample inside its ChaCha stream.
const WORDS_PER_SAMPLE_LOG2: u32 = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SeededStream {
    pub seed: u64,
    pub stream: u64,
}

impl SeededStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Same seed, different stream index.
    pub fn substream(&self, stream: u64) -> Self {
        Self {
            seed: self.seed,
            stream,
        }
    }

    /// Generator for sample `index`; independent of any other sample.
    pub fn rng_for(&self, index: u64) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(u128::from(index) << WORDS_PER_SAMPLE_LOG2);
        rng
    }

    pub fn unitary(&self, d: usize, index: u64) -> Result<ComplexMatrix> {
        sample_unitary(d, &mut self.rng_for(index))
    }
}

/// Haar-random `d x d` unitary: orthonormalize the columns of a complex
/// Ginibre matrix. Gram-Schmidt leaves the triangular factor with a positive
/// real diagonal, which is the phase fix that makes the result exactly Haar.
pub fn sample_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<ComplexMatrix> {
    if d < 2 {
        return Err(Error::OutOfRange(format!("unitary dimension {d} < 2")));
    }
    let mut cols: Vec<Vec<C64>> = (0..d)
        .map(|_| {
            (0..d)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
                })
                .collect()
        })
        .collect();
    for k in 0..d {
        let (done, rest) = cols.split_at_mut(k);
        let col = &mut rest[0];
        // two passes keep the columns orthogonal to machine precision
        for _ in 0..2 {
            for q in done.iter() {
                let proj = inner(q, col);
                for (c, qi) in col.iter_mut().zip(q) {
                    *c -= qi * proj;
                }
            }
        }
        let n = crate::linalg::norm(col);
        col.iter_mut().for_each(|c| *c /= n);
    }
    Ok(ComplexMatrix::from_fn(d, d, |r, c| cols[c][r]))
}

/// Running mean and sum of squared deviations for a vector of complex
/// observables.
#[derive(Clone, Debug)]
struct Moments {
    count: usize,
    mean: Vec<C64>,
    m2: Vec<f64>,
}

impl Moments {
    fn empty(len: usize) -> Self {
        Self {
            count: 0,
            mean: vec![ZERO; len],
            m2: vec![0.0; len],
        }
    }

    fn push(&mut self, x: &[C64]) {
        self.count += 1;
        let n = self.count as f64;
        for ((m, s), xi) in self.mean.iter_mut().zip(&mut self.m2).zip(x) {
            let delta = xi - *m;
            *m += delta / n;
            *s += (delta.conj() * (xi - *m)).re;
        }
    }

    fn merge(a: Self, b: Self) -> Self {
        if a.count == 0 {
            return b;
        }
        if b.count == 0 {
            return a;
        }
        let (na, nb) = (a.count as f64, b.count as f64);
        let n = na + nb;
        let mut mean = Vec::with_capacity(a.mean.len());
        let mut m2 = Vec::with_capacity(a.mean.len());
        for k in 0..a.mean.len() {
            let delta = b.mean[k] - a.mean[k];
            mean.push(a.mean[k] + delta * (nb / n));
            m2.push(a.m2[k] + b.m2[k] + delta.norm_sqr() * na * nb / n);
        }
        Self {
            count: a.count + b.count,
            mean,
            m2,
        }
    }
}

fn pairwise_merge(mut parts: Vec<Moments>) -> Moments {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => Moments::merge(a, b),
                None => a,
            });
        }
        parts = next;
    }
    parts.pop().expect("at least one chunk")
}

/// Sample mean of a vector-valued observable with per-entry standard errors.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleMean {
    pub mean: Vec<C64>,
    /// Standard error of the mean per entry, from the complex sample
    /// variance `E|x - mean|^2`.
    pub stderr: Vec<f64>,
    pub samples: usize,
}

impl SampleMean {
    pub fn max_stderr(&self) -> f64 {
        self.stderr
            .iter()
            .copied()
            .fold(0.0, crate::linalg::nan_max)
    }
}

/// Averages `observable(rng)` over samples `0..n` of `stream`. The observable
/// must return `len` values for every sample.
pub fn mc_mean<F>(n: usize, stream: SeededStream, len: usize, observable: F) -> Result<SampleMean>
where
    F: Fn(&mut ChaCha20Rng) -> Result<Vec<C64>> + Sync,
{
    if n < 2 {
        return Err(Error::OutOfRange(format!(
            "need at least 2 samples, got {n}"
        )));
    }
    let chunks = n.div_ceil(CHUNK);
    let parts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = Moments::empty(len);
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let x = observable(&mut stream.rng_for(i as u64))?;
                if x.len() != len {
                    return Err(Error::DimensionMismatch(format!(
                        "observable returned {} values, expected {len}",
                        x.len()
                    )));
                }
                acc.push(&x);
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let total = pairwise_merge(parts);
    let nf = n as f64;
    let stderr = total
        .m2
        .iter()
        .map(|s| (s.max(0.0) / (nf - 1.0) / nf).sqrt())
        .collect();
    Ok(SampleMean {
        mean: total.mean,
        stderr,
        samples: n,
    })
}

/// Monte-Carlo group average of a matrix-valued function.
#[derive(Clone, Debug, PartialEq)]
pub struct McAverage {
    pub mean: ComplexMatrix,
    /// Largest per-entry standard error.
    pub stderr: f64,
    pub entry_stderr: Vec<f64>,
}

impl McAverage {
    /// Largest entrywise deviation from `target` measured in units of the
    /// max standard error. Returns 0 when both deviation and error vanish.
    pub fn sigmas_from(&self, target: &ComplexMatrix) -> f64 {
        let dev = self.mean.max_abs_diff(target);
        sigmas(dev, self.stderr)
    }
}

/// `|deviation| / stderr`, with exact agreement (up to roundoff) mapped to 0.
pub fn sigmas(deviation: f64, stderr: f64) -> f64 {
    if deviation.abs() <= ROUNDOFF_SLACK {
        0.0
    } else if stderr == 0.0 {
        f64::INFINITY
    } else {
        deviation.abs() / stderr
    }
}

/// Absolute deviation treated as exact agreement in statistical checks.
pub const ROUNDOFF_SLACK: f64 = 1e-12;

/// `int dU f(U)` estimated from `n` Haar draws in `U(d)`.
pub fn mc_average<F>(f: F, d: usize, n: usize, stream: SeededStream) -> Result<McAverage>
where
    F: Fn(&ComplexMatrix) -> ComplexMatrix + Sync,
{
    if d < 2 {
        return Err(Error::OutOfRange(format!("unitary dimension {d} < 2")));
    }
    let probe = f(&ComplexMatrix::identity(d));
    let (rows, cols) = (probe.rows(), probe.cols());
    let stats = mc_mean(n, stream, rows * cols, |rng| {
        let u = sample_unitary(d, rng)?;
        Ok(f(&u).into_data())
    })?;
    let stderr = stats.max_stderr();
    Ok(McAverage {
        mean: ComplexMatrix::new(rows, cols, stats.mean)?,
        stderr,
        entry_stderr: stats.stderr,
    })
}

/// Closed form of `int dU U X U^dag = Tr[X] I / d`.
pub fn twirl_irreducible(x: &ComplexMatrix) -> ComplexMatrix {
    let d = x.rows();
    ComplexMatrix::identity(d).scale(x.trace() / d as f64)
}

/// Closed form of `int dU (U (x) U*) Y (U (x) U*)^dag` for `Y` on `C^d (x) C^d`:
/// projection onto the maximally entangled projector and its complement.
pub fn twirl_reducible(y: &ComplexMatrix, d: usize) -> Result<ComplexMatrix> {
    if y.rows() != d * d || !y.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "operator {}x{} is not on C^{d} (x) C^{d}",
            y.rows(),
            y.cols()
        )));
    }
    let ket = vectorize(&ComplexMatrix::identity(d))?;
    let proj = ComplexMatrix::outer(&ket, &ket).scale_real(1.0 / d as f64);
    let comp = &ComplexMatrix::identity(d * d) - &proj;
    let along = (&proj * y).trace();
    let across = (&comp * y).trace();
    let dd = (d * d) as f64;
    Ok(&proj.scale(along) + &comp.scale(across / (dd - 1.0)))
}

/// `U (x) U*`.
pub fn u_kron_conj(u: &ComplexMatrix) -> ComplexMatrix {
    kron(u, &u.conj())
}
