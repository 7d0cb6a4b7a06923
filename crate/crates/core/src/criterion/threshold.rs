//! Criterion thresholds in exact arithmetic, with a floating-point shadow.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Margin added to a threshold before a strict comparison.
pub const COMPARISON_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    /// Exact value as `p/q`, when representable.
    pub fraction: Option<String>,
    pub value: f64,
}

impl Threshold {
    fn from_ratio(r: Ratio<i64>) -> Self {
        Self { fraction: Some(format!("{}/{}", r.numer(), r.denom())), value: *r.numer() as f64 / *r.denom() as f64 }
    }

    /// A gap passes only if it exceeds the threshold rounded outward.
    pub fn is_exceeded_by(&self, gamma: f64) -> bool {
        gamma > self.value + COMPARISON_SLACK
    }
}

fn check_k(k: usize) -> Result<()> {
    if k < 4 || k % 2 != 0 {
        return domain(format!("K must be an even integer >= 4, got {k}"));
    }
    Ok(())
}

/// `1/7 + 1/(7(K-2)) = (K-1) / (7(K-2))`, exactly.
pub fn chain_threshold_exact(k: usize) -> Result<Ratio<i64>> {
    check_k(k)?;
    let k = k as i64;
    Ok(Ratio::new(k - 1, 7 * (k - 2)))
}

pub fn chain_threshold(k: usize) -> Result<Threshold> {
    Ok(Threshold::from_ratio(chain_threshold_exact(k)?))
}

/// `(7/6)(gamma_min - threshold(K))`; negative when the criterion fails.
pub fn chain_bound(gamma_min: f64, k: usize) -> Result<f64> {
    Ok(7.0 / 6.0 * (gamma_min - chain_threshold(k)?.value))
}

/// `(a^2 - 2a + 2) / (2a + 2)`.
pub fn sun_threshold(a: f64) -> Result<f64> {
    if !(a >= 1.0) || !a.is_finite() {
        return domain(format!("sun weight must satisfy a >= 1, got {a}"));
    }
    Ok((a * a - 2.0 * a + 2.0) / (2.0 * a + 2.0))
}

/// Exact sun threshold for a rational weight.
pub fn sun_threshold_exact(a: Ratio<i128>) -> Result<Ratio<i128>> {
    if a < Ratio::from_integer(1) {
        return domain(format!("sun weight must satisfy a >= 1, got {a}"));
    }
    let (p, q) = (*a.numer(), *a.denom());
    let overflow = || crate::error::Error::Domain(format!("sun weight {a} is too large for exact arithmetic"));
    let num = p
        .checked_mul(p)
        .and_then(|pp| pp.checked_sub(2 * p.checked_mul(q)?))
        .and_then(|x| x.checked_add(2 * q.checked_mul(q)?))
        .ok_or_else(overflow)?;
    let den = q.checked_mul(p.checked_add(q).ok_or_else(overflow)?).and_then(|x| x.checked_mul(2)).ok_or_else(overflow)?;
    Ok(Ratio::new(num, den))
}

/// Sun threshold for the weight as written, e.g. `1.4` is read as `7/5`.
pub fn sun_threshold_report(a: f64) -> Result<Threshold> {
    let value = sun_threshold(a)?;
    let exact = decimal_to_ratio(&format!("{a}")).ok().and_then(|r| sun_threshold_exact(r).ok());
    Ok(match exact {
        Some(r) => Threshold { fraction: Some(format!("{}/{}", r.numer(), r.denom())), value },
        None => Threshold { fraction: None, value },
    })
}

/// Parses a plain decimal literal (`"1.4"`, `"12"`, `"0.125"`) exactly.
pub fn decimal_to_ratio(text: &str) -> Result<Ratio<i128>> {
    let bad = || crate::error::Error::Domain(format!("not a plain decimal: `{text}`"));
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let numer: i128 = digits.parse().map_err(|_| bad())?;
    let denom = 10i128.checked_pow(frac.len() as u32).ok_or_else(bad)?;
    let r = Ratio::new(numer, denom);
    Ok(if neg { -r } else { r })
}

/// Minimizer of the sun threshold over `a >= 1`, by golden-section search.
pub fn sun_threshold_minimum() -> (f64, f64) {
    let f = |a: f64| sun_threshold(a).expect("search stays in range");
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (1.0f64, 10.0f64);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-12 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let a = (lo + hi) / 2.0;
    (a, f(a))
}

/// Rounds toward negative infinity at `decimals` places.
pub fn floor_to(x: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    (x * scale).floor() / scale
}
