//! Certified evaluation of power-law series.
//!
//! Everything here returns a [`SeriesValue`]: the computed sum together with
//! a rigorous bound on the truncated tail, so callers can propagate error
//! budgets instead of trusting a fixed cutoff.

use crate::error::{Error, Result};

/// A series sum plus a bound on the mass discarded by truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    /// |true value - `value`| is at most this, up to floating-point rounding.
    pub truncation_bound: f64,
}

impl SeriesValue {
    pub fn exact(value: f64) -> Self {
        SeriesValue {
            value,
            truncation_bound: 0.0,
        }
    }
}

/// Partial-sum cutoff for the Riemann zeta evaluation. With the three-term
/// Euler-Maclaurin tail the omitted correction is O(N^{-s-3}) < 1e-24 for s > 1.
const ZETA_CUTOFF: usize = 10_000;

/// Riemann zeta `sum_{r>=1} r^{-s}` for `s > 1`.
pub fn zeta(s: f64) -> Result<SeriesValue> {
    zeta_from(1, s)
}

/// Tail zeta `sum_{r>=j} r^{-s}` for `s > 1`, `j >= 1`.
///
/// Partial sum to N plus Euler-Maclaurin corrections:
/// `sum_{r>N} r^{-s} = N^{1-s}/(s-1) - N^{-s}/2 + s N^{-s-1}/12 - ...`
pub fn zeta_from(j: usize, s: f64) -> Result<SeriesValue> {
    if !(s > 1.0) {
        return Err(Error::Domain(format!("zeta tail requires s > 1, got {s}")));
    }
    if j == 0 {
        return Err(Error::Domain("zeta tail start must be >= 1".into()));
    }
    let n = ZETA_CUTOFF.max(j);
    let mut sum = 0.0;
    // Summing upward is fine: terms decrease and the EM tail dominates error.
    for r in j..=n {
        sum += (r as f64).powf(-s);
    }
    let nf = n as f64;
    let tail = nf.powf(1.0 - s) / (s - 1.0) - 0.5 * nf.powf(-s)
        + s * nf.powf(-s - 1.0) / 12.0;
    let omitted = s * (s + 1.0) * (s + 2.0) * nf.powf(-s - 3.0) / 720.0;
    Ok(SeriesValue {
        value: sum + tail,
        truncation_bound: omitted,
    })
}

/// `sum_{r>=j} r^{-alpha} u^r` for `u` in `[0,1]`, with a certified tail bound.
///
/// For `u < 1` the summand ratio is at most `u * (1+1/r)^{max(0,-alpha)}`,
/// which is eventually below 1; the remainder after the last added term is
/// bounded by a geometric series at that ratio. `u = 1` requires `alpha > 1`
/// and delegates to the zeta tail.
pub fn power_series(j: usize, alpha: f64, u: f64) -> Result<SeriesValue> {
    if j == 0 {
        return Err(Error::Domain("power series start must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&u) || u.is_nan() {
        return Err(Error::Domain(format!(
            "power series argument must lie in [0,1], got {u}"
        )));
    }
    if u == 1.0 {
        return zeta_from(j, alpha);
    }
    if u == 0.0 {
        return Ok(SeriesValue::exact(0.0));
    }
    let mut sum = 0.0;
    let mut r = j;
    loop {
        let term = (r as f64).powf(-alpha) * u.powi(r as i32);
        sum += term;
        // Ratio bound for all later terms; < 1 once r is large enough.
        let growth = if alpha < 0.0 {
            (1.0 + 1.0 / r as f64).powf(-alpha)
        } else {
            1.0
        };
        let ratio = u * growth;
        if ratio < 1.0 {
            let tail_bound = term * ratio / (1.0 - ratio);
            if tail_bound <= 1e-16 * sum.max(f64::MIN_POSITIVE) || term == 0.0 {
                return Ok(SeriesValue {
                    value: sum,
                    truncation_bound: tail_bound,
                });
            }
        }
        r += 1;
        if r - j > 100_000_000 {
            return Err(Error::NonConvergence(format!(
                "power series (alpha={alpha}, u={u}) did not settle"
            )));
        }
    }
}

/// Natural log of the factorial, exact for small n, Stirling series beyond.
pub fn ln_factorial(n: usize) -> f64 {
    const EXACT: usize = 128;
    if n < EXACT {
        let mut acc = 0.0;
        for k in 2..=n {
            acc += (k as f64).ln();
        }
        return acc;
    }
    let x = n as f64 + 1.0;
    // Stirling series for ln Gamma(x); the x^{-5} term is < 1e-13 here.
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}
