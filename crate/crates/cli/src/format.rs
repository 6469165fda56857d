//! Number formatting and row serialization.

use tradeoff_core::TradeoffPoint;

pub const CSV_HEADER: &str = "a,b,F,G,I,D";

/// C-style `%.{sig}g`: shortest of fixed or exponent notation with `sig`
/// significant digits and trailing zeros removed.
pub fn fmt_g(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sig = sig.max(1);
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= sig as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn csv_row(values: &[f64]) -> String {
    values
        .iter()
        .map(|&v| fmt_g(v, 12))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn curve_csv(points: &[TradeoffPoint]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in points {
        out.push_str(&csv_row(&[p.a, p.b, p.f, p.g, p.info, p.disturbance]));
        out.push('\n');
    }
    out
}
