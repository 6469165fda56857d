//! The verification suite behind `tradeoff verify`.

use serde_json::{Map, Value};
use tradeoff_core::choi::{
    apply_rf, apply_rg, rf_integrand, rg_integrand, tp_condition_mc, DENSE_OPTIMIZE_MAX_DIM,
};
use tradeoff_core::haar::{twirl_irreducible, twirl_reducible, u_kron_conj};
use tradeoff_core::instrument::werner_kraus;
use tradeoff_core::linalg::{eigh, inner, partial_trace, power_iteration};
use tradeoff_core::*;

/// Largest dimension for Monte-Carlo checks on full Choi operators.
pub const CHOI_MC_MAX_DIM: usize = 3;
pub const STAT_SIGMAS: f64 = 4.0;
const EXACT_TOL: f64 = 1e-12;
const VALIDITY_TOL: f64 = 1e-10;
const FORM_TOL: f64 = 1e-8;
const TP_TOL: f64 = 1e-9;
const QUAD_TOL: f64 = 1e-10;
/// `gf` involves `sqrt(2 - d^2 G)`, which turns roundoff in `G` near
/// `2/d^2` into errors of order `sqrt(eps)`.
const GF_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub residual: f64,
    pub tolerance: f64,
}

impl Check {
    fn new(name: &'static str, residual: f64, tolerance: f64) -> Self {
        Self {
            name,
            residual,
            tolerance,
        }
    }

    pub fn passed(&self) -> bool {
        self.residual <= self.tolerance
    }
}

type MatrixFree = fn(&[C64], usize) -> Vec<C64>;

pub struct Settings {
    pub dim: usize,
    pub points: usize,
    pub samples: usize,
    pub seed: u64,
}

fn worst(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |acc, v| {
        if acc.is_nan() || v.is_nan() {
            f64::NAN
        } else {
            acc.max(v)
        }
    })
}

/// Generic (non-unitary) test operator built from two Haar draws.
fn test_matrix(stream: SeededStream, d: usize, index: u64) -> Result<ComplexMatrix> {
    let u = stream.unitary(d, 2 * index)?;
    let v = stream.unitary(d, 2 * index + 1)?;
    Ok(&u + &v.scale(C64::new(0.3, 0.7)))
}

fn vectorization(s: &Settings) -> Result<Check> {
    let d = s.dim;
    let stream = SeededStream::new(s.seed, 0);
    let spec = SubsystemSpec::uniform(d, 2)?;
    let mut res = Vec::new();
    for i in 0..20 {
        let a = test_matrix(stream, d, 3 * i)?;
        let b = test_matrix(stream, d, 3 * i + 1)?;
        let c = test_matrix(stream, d, 3 * i + 2)?;
        let (va, vb) = (vectorize(&a)?, vectorize(&b)?);
        let local = kron(&a, &b).matvec(&vectorize(&c)?)?;
        let want = vectorize(&(&(&a * &c) * &b.transpose()))?;
        res.push(worst(local.iter().zip(&want).map(|(x, y)| (x - y).norm())));
        let outer = ComplexMatrix::outer(&va, &vb);
        res.push(partial_trace(&outer, &spec, &[1])?.max_abs_diff(&(&a.transpose() * &b.conj())));
        res.push(partial_trace(&outer, &spec, &[2])?.max_abs_diff(&(&a * &b.dagger())));
        res.push((inner(&va, &vb) - (&a.dagger() * &b).trace()).norm());
        res.push(devectorize(&va, d)?.max_abs_diff(&a));
    }
    Ok(Check::new("vectorization", worst(res), EXACT_TOL))
}

fn schur_identities(s: &Settings) -> Result<Vec<Check>> {
    let d = s.dim;
    let inputs = SeededStream::new(s.seed, 1);
    let x = test_matrix(inputs, d, 0)?;
    let y = kron(&test_matrix(inputs, d, 1)?, &test_matrix(inputs, d, 2)?);
    let y = &y + &kron(&test_matrix(inputs, d, 3)?, &ComplexMatrix::identity(d));
    let irr = mc_average(
        |u| &(u * &x) * &u.dagger(),
        d,
        s.samples,
        SeededStream::new(s.seed, 2),
    )?;
    let red = mc_average(
        |u| {
            let w = u_kron_conj(u);
            &(&w * &y) * &w.dagger()
        },
        d,
        s.samples,
        SeededStream::new(s.seed, 3),
    )?;
    Ok(vec![
        Check::new(
            "twirl_irreducible",
            irr.sigmas_from(&twirl_irreducible(&x)),
            STAT_SIGMAS,
        ),
        Check::new(
            "twirl_reducible",
            red.sigmas_from(&twirl_reducible(&y, d)?),
            STAT_SIGMAS,
        ),
    ])
}

fn choi_twirls(s: &Settings) -> Result<Vec<Check>> {
    let d = s.dim;
    let rf = mc_average(rf_integrand, d, s.samples, SeededStream::new(s.seed, 4))?;
    let rg = mc_average(rg_integrand, d, s.samples, SeededStream::new(s.seed, 5))?;
    Ok(vec![
        Check::new(
            "twirl_rf",
            rf.sigmas_from(build_rf(d)?.matrix()),
            STAT_SIGMAS,
        ),
        Check::new(
            "twirl_rg",
            rg.sigmas_from(build_rg(d)?.matrix()),
            STAT_SIGMAS,
        ),
    ])
}

fn povm(s: &Settings) -> Result<Vec<Check>> {
    let (mut complete, mut negative) = (Vec::new(), Vec::new());
    for p in tradeoff_curve(s.dim, s.points)? {
        let instr = optimal_discrete_instrument(&OptimalParams::new(p.a, s.dim)?)?;
        complete.push(instr.completeness_deviation());
        negative.push(-instr.min_povm_eigenvalue()?);
    }
    Ok(vec![
        Check::new("povm_completeness", worst(complete), VALIDITY_TOL),
        Check::new("povm_positivity", worst(negative), VALIDITY_TOL),
    ])
}

/// Trace and smallest eigenvalue of `R_F` and `R_G`: dense when small,
/// otherwise from matrix-free products.
fn choi_spectra(s: &Settings) -> Result<Vec<Check>> {
    let d = s.dim;
    let (mut traces, mut negative) = (Vec::new(), Vec::new());
    if d <= DENSE_OPTIMIZE_MAX_DIM {
        for r in [build_rf(d)?, build_rg(d)?] {
            traces.push((r.matrix().trace().re - 1.0).abs());
            negative.push(-eigh(r.matrix())?.0[0]);
        }
    } else {
        let n = d.pow(4);
        let dd = (d * d) as f64;
        let ops: [MatrixFree; 2] = [apply_rf, apply_rg];
        for op in ops {
            let mut tr = 0.0;
            let mut e = vec![C64::new(0.0, 0.0); n];
            for i in 0..n {
                e[i] = C64::new(1.0, 0.0);
                tr += op(&e, d)[i].re;
                e[i] = C64::new(0.0, 0.0);
            }
            traces.push((tr - 1.0).abs());
            // both spectra lie in [0, 1/d^2]; the top of c - R is c - min
            let c = 1.0 / dd;
            let start: Vec<C64> = (0..n)
                .map(|i| C64::new(1.0 + (i as f64 * 0.618_033_988_75).fract(), 0.0))
                .collect();
            let res = power_iteration(
                |v| {
                    let rv = op(v, d);
                    v.iter().zip(&rv).map(|(x, y)| x * c - y).collect()
                },
                start,
                0.0,
                1e-13,
                200_000,
            )?;
            negative.push(-(c - res.value));
        }
    }
    Ok(vec![
        Check::new("choi_trace", worst(traces), VALIDITY_TOL),
        Check::new("choi_positivity", worst(negative), VALIDITY_TOL),
    ])
}

fn optimizer_and_curve(s: &Settings) -> Result<Vec<Check>> {
    let d = s.dim;
    let (mut form, mut gf, mut quad, mut tp) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for k in 0..=10 {
        let r = optimize(k as f64 / 10.0, d)?;
        form.push(r.form_residual);
        let (g1, q1) = tradeoff_residuals(r.point.f, r.point.g, d)?;
        gf.push(g1.abs());
        quad.push(q1.abs());
        tp.push(r.chi.tp_deviation()?);
        if d <= DENSE_OPTIMIZE_MAX_DIM {
            let rep = verify_tp(&ChoiOperator::from_chi(&r.chi)?)?;
            tp.push(rep.tr134_deviation);
            tp.push(rep.trace_deviation);
        }
    }
    for p in tradeoff_curve(d, s.points)? {
        let (g1, q1) = tradeoff_residuals(p.f, p.g, d)?;
        gf.push(g1.abs());
        quad.push(q1.abs());
    }
    Ok(vec![
        Check::new("form_residual", worst(form), FORM_TOL),
        Check::new("tradeoff_gf", worst(gf), GF_TOL),
        Check::new("tradeoff_quadratic", worst(quad), QUAD_TOL),
        Check::new("tp_condition", worst(tp), TP_TOL),
    ])
}

fn tp_average(s: &Settings) -> Result<Check> {
    let d = s.dim;
    let params = OptimalParams::new(0.5, d)?;
    let r0 = ChoiOperator::from_kraus(
        &[werner_kraus(
            &ComplexMatrix::identity(d),
            params.a,
            params.b,
            1.0,
        )],
        d,
    )?;
    let avg = tp_condition_mc(&r0, s.samples, SeededStream::new(s.seed, 6))?;
    Ok(Check::new(
        "tp_haar_average",
        avg.sigmas_from(&ComplexMatrix::identity(d * d)),
        STAT_SIGMAS,
    ))
}

pub fn run_all(s: &Settings) -> Result<Vec<Check>> {
    let mut checks = vec![vectorization(s)?];
    checks.extend(schur_identities(s)?);
    if s.dim <= CHOI_MC_MAX_DIM {
        checks.extend(choi_twirls(s)?);
    }
    checks.extend(povm(s)?);
    checks.extend(choi_spectra(s)?);
    checks.extend(optimizer_and_curve(s)?);
    if s.dim <= CHOI_MC_MAX_DIM {
        checks.push(tp_average(s)?);
    }
    Ok(checks)
}

/// Flat JSON report: run settings, overall verdict, and per check its
/// residual, tolerance and verdict.
pub fn report(s: &Settings, checks: &[Check]) -> Value {
    let mut m = Map::new();
    m.insert("dim".into(), s.dim.into());
    m.insert("points".into(), s.points.into());
    m.insert("samples".into(), s.samples.into());
    m.insert("seed".into(), s.seed.into());
    m.insert("passed".into(), checks.iter().all(Check::passed).into());
    for c in checks {
        m.insert(format!("{}_residual", c.name), json_f64(c.residual));
        m.insert(format!("{}_tolerance", c.name), json_f64(c.tolerance));
        m.insert(format!("{}_passed", c.name), c.passed().into());
    }
    Value::Object(m)
}

/// Non-finite residuals have no JSON number; they appear as `null`.
pub fn json_f64(x: f64) -> Value {
    // adding 0.0 folds -0.0 into 0.0
    serde_json::Number::from_f64(x + 0.0).map_or(Value::Null, Value::Number)
}
