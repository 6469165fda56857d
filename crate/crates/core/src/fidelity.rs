//! Operation fidelity `F` and estimation fidelity `G`: closed forms along the
//! optimal family, Monte-Carlo estimates for arbitrary instruments, and the
//! normalized information/disturbance pair `(I, D)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::haar::{mc_mean, sample_unitary, SeededStream};
use crate::instrument::{b_from_a, covariant_kraus_at, KrausInstrument};
use crate::linalg::{hs_inner, inner, norm, vectorize, ComplexMatrix, C64};

/// Absolute slack on square-root arguments and [0, 1] domain checks; curve
/// endpoints sit exactly on those boundaries.
pub const DOMAIN_SLACK: f64 = 1e-12;

/// Minimum Monte-Carlo sample count accepted by the fidelity estimators.
pub const MIN_SAMPLES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub a: f64,
    pub b: f64,
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "G")]
    pub g: f64,
    #[serde(rename = "I")]
    pub info: f64,
    #[serde(rename = "D")]
    pub disturbance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl McEstimate {
    /// Deviation from `target` in standard errors; exact agreement up to
    /// roundoff counts as zero.
    pub fn sigmas_from(&self, target: f64) -> f64 {
        crate::haar::sigmas(self.value - target, self.stderr)
    }

    /// `|value - target| <= k * stderr`, allowing roundoff-level slack for
    /// integrands that are constant.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.stderr + crate::haar::ROUNDOFF_SLACK
    }
}

fn check_domain(a: f64, d: usize) -> Result<()> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::OutOfRange(format!("a = {a} outside [0, 1]")));
    }
    if d < 2 {
        return Err(Error::OutOfRange(format!("dimension {d} < 2")));
    }
    Ok(())
}

/// `F = 1 - (d^2 - 2) a^2 / d^2`.
pub fn closed_form_f(a: f64, d: usize) -> Result<f64> {
    check_domain(a, d)?;
    let dd = (d * d) as f64;
    Ok(1.0 - (dd - 2.0) * a * a / dd)
}

/// `G = (2 - b^2) / d^2` with `b` fixed by the normalization.
pub fn closed_form_g(a: f64, d: usize) -> Result<f64> {
    let b = b_from_a(a, d)?;
    let dd = (d * d) as f64;
    Ok((2.0 - b * b) / dd)
}

/// `F = [d^2 + (d^2 - 2)(a + b d)^2] / (d^2 (d^2 - 1))`, the form before the
/// normalization is used to simplify it.
pub fn closed_form_f_expanded(a: f64, d: usize) -> Result<f64> {
    let b = b_from_a(a, d)?;
    let df = d as f64;
    let dd = df * df;
    Ok((dd + (dd - 2.0) * (a + b * df).powi(2)) / (dd * (dd - 1.0)))
}

/// `G = [d^2 - 2 + (a d + b)^2] / (d^2 (d^2 - 1))`.
pub fn closed_form_g_expanded(a: f64, d: usize) -> Result<f64> {
    let b = b_from_a(a, d)?;
    let df = d as f64;
    let dd = df * df;
    Ok((dd - 2.0 + (a * df + b).powi(2)) / (dd * (dd - 1.0)))
}

/// Per-sample integrands of `F` and `G` for a list of Kraus operators with
/// one guess each, at input `|U_g>>`.
fn fidelity_integrands<'a>(
    ops: impl Iterator<Item = (&'a ComplexMatrix, &'a ComplexMatrix)>,
    u: &ComplexMatrix,
) -> (f64, f64) {
    let d = u.rows() as f64;
    let ket = vectorize(u).expect("square");
    let (mut f, mut g) = (0.0, 0.0);
    for (k, guess) in ops {
        let image = k.matvec(&ket).expect("dimension checked by instrument");
        f += inner(&ket, &image).norm_sqr();
        let overlap = hs_inner(guess, u).expect("same dimension").norm_sqr();
        g += norm(&image).powi(2) * overlap;
    }
    (f / (d * d), g / (d * d * d))
}

fn estimates(stats: crate::haar::SampleMean, stream: SeededStream) -> (McEstimate, McEstimate) {
    let make = |k: usize| McEstimate {
        value: stats.mean[k].re.clamp(0.0, 1.0),
        stderr: stats.stderr[k],
        n_samples: stats.samples,
        seed: stream.seed,
    };
    (make(0), make(1))
}

/// Monte-Carlo `F` and `G` of a finite instrument over Haar-random
/// maximally entangled inputs, using each outcome's stored guess.
pub fn mc_fidelities(
    instr: &KrausInstrument,
    n: usize,
    stream: SeededStream,
) -> Result<(McEstimate, McEstimate)> {
    if n < MIN_SAMPLES {
        return Err(Error::OutOfRange(format!(
            "need at least {MIN_SAMPLES} samples, got {n}"
        )));
    }
    let d = instr.dim();
    let stats = mc_mean(n, stream, 2, |rng| {
        let u = sample_unitary(d, rng)?;
        let ops = instr
            .outcomes()
            .iter()
            .flat_map(|o| o.kraus.iter().map(move |k| (k, &o.guess)));
        let (f, g) = fidelity_integrands(ops, &u);
        Ok(vec![C64::new(f, 0.0), C64::new(g, 0.0)])
    })?;
    Ok(estimates(stats, stream))
}

/// Monte-Carlo `F` and `G` of the covariant instrument generated by `seed`,
/// averaging over both the input `g` and the continuous outcome `h`. The
/// outcome density is normalized against the same Haar measure.
pub fn mc_covariant_fidelities(
    seed: &KrausInstrument,
    n: usize,
    stream: SeededStream,
) -> Result<(McEstimate, McEstimate)> {
    if n < MIN_SAMPLES {
        return Err(Error::OutOfRange(format!(
            "need at least {MIN_SAMPLES} samples, got {n}"
        )));
    }
    let d = seed.dim();
    let stats = mc_mean(n, stream, 2, |rng| {
        let u = sample_unitary(d, rng)?;
        let h = sample_unitary(d, rng)?;
        let kraus = covariant_kraus_at(seed, &h)?;
        let (f, g) = fidelity_integrands(kraus.iter().map(|k| (k, &h)), &u);
        Ok(vec![C64::new(f, 0.0), C64::new(g, 0.0)])
    })?;
    Ok(estimates(stats, stream))
}

fn clamp_tiny_negative(x: f64) -> f64 {
    if (-DOMAIN_SLACK..0.0).contains(&x) {
        0.0
    } else {
        x
    }
}

/// `I = d^2 G - 1` and `D = d^2 (1 - F) / (d^2 - 2)`.
pub fn visibilities(f: f64, g: f64, d: usize) -> Result<(f64, f64)> {
    if d < 2 {
        return Err(Error::OutOfRange(format!("dimension {d} < 2")));
    }
    for (name, v) in [("F", f), ("G", g)] {
        if !(-DOMAIN_SLACK..=1.0 + DOMAIN_SLACK).contains(&v) {
            return Err(Error::OutOfRange(format!("{name} = {v} outside [0, 1]")));
        }
    }
    let dd = (d * d) as f64;
    let info = clamp_tiny_negative(dd * g - 1.0);
    let disturbance = clamp_tiny_negative(dd * (1.0 - f) / (dd - 2.0));
    Ok((info, disturbance))
}

/// The optimal instrument's operating point at parameter `a`.
pub fn tradeoff_point(a: f64, d: usize) -> Result<TradeoffPoint> {
    let b = b_from_a(a, d)?;
    let f = closed_form_f(a, d)?;
    let g = closed_form_g(a, d)?;
    let (info, disturbance) = visibilities(f, g, d)?;
    Ok(TradeoffPoint {
        a,
        b,
        f,
        g,
        info,
        disturbance,
    })
}

/// Sweeps `a` uniformly over `[0, 1]` with both endpoints included.
pub fn tradeoff_curve(d: usize, n_points: usize) -> Result<Vec<TradeoffPoint>> {
    if n_points < 2 {
        return Err(Error::OutOfRange(format!(
            "need at least 2 points, got {n_points}"
        )));
    }
    let last = (n_points - 1) as f64;
    (0..n_points)
        .map(|k| {
            tradeoff_point(
                if k + 1 == n_points {
                    1.0
                } else {
                    k as f64 / last
                },
                d,
            )
        })
        .collect()
}

fn checked_sqrt(term: &'static str, x: f64) -> Result<f64> {
    if x < -DOMAIN_SLACK {
        return Err(Error::SqrtDomain { term, value: x });
    }
    Ok(x.max(0.0).sqrt())
}

/// Signed residuals of the tradeoff relations at `(F, G)`:
///
/// * `sqrt((d^2-2)(2 - d^2 G)) - [sqrt((d^2-1) F - 1) - sqrt(1 - F)]`
/// * `d^2 (D - I)^2 - 4 D (1 - I)`
///
/// Both vanish on the optimal curve. Points strictly inside the feasible
/// region give a negative quadratic residual.
pub fn tradeoff_residuals(f: f64, g: f64, d: usize) -> Result<(f64, f64)> {
    if d < 2 {
        return Err(Error::OutOfRange(format!("dimension {d} < 2")));
    }
    let dd = (d * d) as f64;
    let lhs = checked_sqrt("(d^2-2)(2-d^2 G)", (dd - 2.0) * (2.0 - dd * g))?;
    let rhs = checked_sqrt("(d^2-1)F-1", (dd - 1.0) * f - 1.0)? - checked_sqrt("1-F", 1.0 - f)?;
    let info = dd * g - 1.0;
    let dist = dd * (1.0 - f) / (dd - 2.0);
    let quad = dd * (dist - info).powi(2) - 4.0 * dist * (1.0 - info);
    Ok((lhs - rhs, quad))
}

/// Residual of the equivalent relation solved for `F`:
/// `sqrt(d^2/(d^2-2) (F - 1/(d^2-1))) - sqrt(G - (d^2-2)/(d^2(d^2-1))) - sqrt((d^2-1)(2/d^2 - G))`.
pub fn fg_residual(f: f64, g: f64, d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::OutOfRange(format!("dimension {d} < 2")));
    }
    let dd = (d * d) as f64;
    let lhs = checked_sqrt("F-1/(d^2-1)", dd / (dd - 2.0) * (f - 1.0 / (dd - 1.0)))?;
    let r1 = checked_sqrt("G-(d^2-2)/(d^2(d^2-1))", g - (dd - 2.0) / (dd * (dd - 1.0)))?;
    let r2 = checked_sqrt("2/d^2-G", (dd - 1.0) * (2.0 / dd - g))?;
    Ok(lhs - r1 - r2)
}
