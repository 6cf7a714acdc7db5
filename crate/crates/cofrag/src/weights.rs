//! Weight sequences `(Q_r)` and their generating functions.
//!
//! A weight sequence determines the cluster-size statistics of the model:
//! the partial density series `F_j(phi) = sum_{r>=j} r Q_r phi^r`, its
//! inverse `phi_j`, the normalization constants `w = sum Q_r` and
//! `q = sum Q_r phi_c^r`, and the two canonical jump laws used throughout
//! the sampling and analysis code.

use crate::error::{Error, Result};
use crate::pmf::Pmf;
use crate::series::{power_series, zeta, zeta_from, SeriesValue};

/// Default absolute tolerance for series tails and root brackets.
pub const DEFAULT_TOL: f64 = 1e-12;

const BISECTION_MAX_ITERS: usize = 300;

/// The supported weight families.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `Q_r = r^{-b} phi_c^{-r}`, so `Q_r phi_c^r = r^{-b}` exactly.
    PowerLaw { b: f64, phi_c: f64 },
    /// `Q_r = z^r`, radius `phi_c = 1/z`.
    Geometric { z: f64 },
    /// Finitely many explicit weights, zero beyond; radius infinite.
    Explicit { head: Vec<f64> },
}

/// An immutable weight sequence; safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSequence {
    family: Family,
}

impl WeightSequence {
    pub fn power_law(b: f64, phi_c: f64) -> Result<Self> {
        if !(b > 1.0) || !b.is_finite() {
            return Err(Error::Domain(format!("power-law exponent must exceed 1, got {b}")));
        }
        if !(phi_c > 1.0) || !phi_c.is_finite() {
            return Err(Error::Domain(format!("radius must exceed 1, got {phi_c}")));
        }
        Ok(WeightSequence {
            family: Family::PowerLaw { b, phi_c },
        })
    }

    pub fn geometric(z: f64) -> Result<Self> {
        if !(z > 0.0 && z < 1.0) {
            return Err(Error::Domain(format!("geometric ratio must lie in (0,1), got {z}")));
        }
        Ok(WeightSequence {
            family: Family::Geometric { z },
        })
    }

    pub fn explicit(head: Vec<f64>) -> Result<Self> {
        if head.is_empty() {
            return Err(Error::EmptyInput("explicit weights need at least one entry".into()));
        }
        if head.iter().any(|&q| !(q > 0.0) || !q.is_finite()) {
            return Err(Error::Domain("explicit weights must all be positive".into()));
        }
        Ok(WeightSequence {
            family: Family::Explicit { head },
        })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Radius of convergence of `sum Q_r phi^r`; infinite for explicit heads.
    pub fn phi_c(&self) -> f64 {
        match &self.family {
            Family::PowerLaw { phi_c, .. } => *phi_c,
            Family::Geometric { z } => 1.0 / z,
            Family::Explicit { .. } => f64::INFINITY,
        }
    }

    /// Explicit heads support only enumeration-based oracles; every
    /// operation that needs a finite radius refuses them.
    pub fn is_oracle_only(&self) -> bool {
        matches!(self.family, Family::Explicit { .. })
    }

    /// `Q_r` for `r >= 1`; zero beyond an explicit head.
    pub fn q_r(&self, r: usize) -> f64 {
        self.log_q_r(r).exp()
    }

    /// `ln Q_r`, exact in the exponent even where `Q_r` underflows.
    pub fn log_q_r(&self, r: usize) -> f64 {
        debug_assert!(r >= 1, "weights are indexed from 1");
        let rf = r as f64;
        match &self.family {
            Family::PowerLaw { b, phi_c } => -b * rf.ln() - rf * phi_c.ln(),
            Family::Geometric { z } => rf * z.ln(),
            Family::Explicit { head } => {
                head.get(r - 1).map_or(f64::NEG_INFINITY, |q| q.ln())
            }
        }
    }

    /// `Q_r phi_c^r` (the critical gauge); refused for explicit heads.
    pub fn critical_weight(&self, r: usize) -> Result<f64> {
        Ok(self.log_critical_weight(r)?.exp())
    }

    /// `ln(Q_r phi_c^r)`; refused for explicit heads.
    pub fn log_critical_weight(&self, r: usize) -> Result<f64> {
        debug_assert!(r >= 1, "weights are indexed from 1");
        match &self.family {
            Family::PowerLaw { b, .. } => Ok(-b * (r as f64).ln()),
            Family::Geometric { .. } => Ok(0.0),
            Family::Explicit { .. } => Err(Error::Domain(
                "critical gauge undefined for oracle-only explicit weights".into(),
            )),
        }
    }

    /// `w = sum_{r>=1} Q_r`.
    pub fn w(&self) -> SeriesValue {
        match &self.family {
            Family::PowerLaw { b, phi_c } => {
                power_series(1, *b, 1.0 / phi_c).expect("u in (0,1) by construction")
            }
            Family::Geometric { z } => SeriesValue::exact(z / (1.0 - z)),
            Family::Explicit { head } => SeriesValue::exact(head.iter().sum()),
        }
    }

    /// `q = sum_{r>=1} Q_r phi_c^r`; infinite for Geometric (certified
    /// divergence), refused for explicit heads.
    pub fn q(&self) -> Result<SeriesValue> {
        match &self.family {
            Family::PowerLaw { b, .. } => zeta(*b),
            Family::Geometric { .. } => Ok(SeriesValue {
                value: f64::INFINITY,
                truncation_bound: 0.0,
            }),
            Family::Explicit { .. } => Err(Error::Domain(
                "q undefined for oracle-only explicit weights".into(),
            )),
        }
    }

    /// Boundary density `rho_{c,j} = F_j(phi_c)`, infinite when the boundary
    /// series diverges.
    pub fn rho_c_j(&self, j: usize) -> Result<SeriesValue> {
        if j == 0 {
            return Err(Error::Domain("marginal index must be >= 1".into()));
        }
        match &self.family {
            Family::PowerLaw { b, .. } => {
                if *b > 2.0 {
                    zeta_from(j, b - 1.0)
                } else {
                    Ok(SeriesValue {
                        value: f64::INFINITY,
                        truncation_bound: 0.0,
                    })
                }
            }
            // F_j explodes toward the radius for both remaining families
            // (geometric boundary terms do not decay; polynomials grow).
            Family::Geometric { .. } => Ok(SeriesValue {
                value: f64::INFINITY,
                truncation_bound: 0.0,
            }),
            Family::Explicit { head } => {
                if head.len() < j {
                    // No mass at sizes >= j: F_j is identically zero.
                    Ok(SeriesValue::exact(0.0))
                } else {
                    Ok(SeriesValue {
                        value: f64::INFINITY,
                        truncation_bound: 0.0,
                    })
                }
            }
        }
    }

    /// Critical density `rho_c = F(phi_c)`.
    pub fn rho_c(&self) -> Result<SeriesValue> {
        self.rho_c_j(1)
    }
}

/// `F_j(phi) = sum_{r>=j} r Q_r phi^r` with a certified truncation bound.
///
/// At `phi = phi_c` the boundary value `rho_{c,j}` is returned, infinite if
/// the boundary series diverges.
pub fn eval_f(w: &WeightSequence, phi: f64, j: usize, tol: f64) -> Result<SeriesValue> {
    if j == 0 {
        return Err(Error::Domain("marginal index must be >= 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    if !(phi >= 0.0) || phi.is_nan() {
        return Err(Error::Domain(format!("series argument must be >= 0, got {phi}")));
    }
    if phi > w.phi_c() {
        return Err(Error::Domain(format!(
            "series argument {phi} exceeds the radius {}",
            w.phi_c()
        )));
    }
    let sv = match w.family() {
        Family::PowerLaw { b, phi_c } => {
            let u = phi / phi_c;
            if u == 1.0 && *b <= 2.0 {
                w.rho_c_j(j)?
            } else {
                power_series(j, b - 1.0, u)?
            }
        }
        Family::Geometric { z } => {
            let u = z * phi;
            if u >= 1.0 {
                w.rho_c_j(j)?
            } else {
                // sum_{r>=j} r u^r = u^j (j - (j-1) u) / (1-u)^2.
                let jf = j as f64;
                SeriesValue::exact(
                    u.powi(j as i32) * (jf - (jf - 1.0) * u) / ((1.0 - u) * (1.0 - u)),
                )
            }
        }
        Family::Explicit { head } => {
            let sum = head
                .iter()
                .enumerate()
                .skip(j - 1)
                .map(|(i, &q)| (i + 1) as f64 * q * phi.powi((i + 1) as i32))
                .sum();
            SeriesValue::exact(sum)
        }
    };
    if sv.value.is_finite() && sv.truncation_bound > tol {
        return Err(Error::NonConvergence(format!(
            "series tail bound {} exceeds requested tolerance {tol}",
            sv.truncation_bound
        )));
    }
    Ok(sv)
}

/// Inverse of `F_j`: the unique `phi` with `F_j(phi) = x` when
/// `x < rho_{c,j}`, and exactly `phi_c` for `x >= rho_{c,j}`.
///
/// Bisection on the monotone bracket; never Newton.
pub fn phi_of_rho(w: &WeightSequence, x: f64, j: usize, tol: f64) -> Result<f64> {
    if j == 0 {
        return Err(Error::Domain("marginal index must be >= 1".into()));
    }
    if !(x >= 0.0) || x.is_nan() || x.is_infinite() {
        return Err(Error::Domain(format!("density must be finite and >= 0, got {x}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let boundary = w.rho_c_j(j)?;
    if boundary.value == 0.0 {
        return Err(Error::Domain(format!(
            "no weight mass at sizes >= {j}; density {x} unreachable"
        )));
    }
    if boundary.value.is_finite() && x >= boundary.value {
        return Ok(w.phi_c());
    }

    // Upper bracket: the radius when finite, otherwise grown by doubling.
    let mut lo = 0.0f64;
    let mut hi = if w.phi_c().is_finite() {
        w.phi_c()
    } else {
        let mut hi = 1.0f64;
        let mut grow = 0;
        while eval_f(w, hi, j, tol)?.value < x {
            hi *= 2.0;
            grow += 1;
            if grow > 200 {
                return Err(Error::NonConvergence(format!(
                    "bracket for density {x} did not close"
                )));
            }
        }
        hi
    };

    for _ in 0..BISECTION_MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        let f = eval_f(w, mid, j, tol)?.value;
        if (f - x).abs() <= tol {
            return Ok(mid);
        }
        if f < x {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi.max(1.0) {
            // Bracket exhausted at floating-point resolution.
            let f_lo = eval_f(w, lo, j, tol)?.value;
            if (f_lo - x).abs() <= tol {
                return Ok(lo);
            }
            break;
        }
    }
    Err(Error::NonConvergence(format!(
        "bisection for density {x} (marginal {j}) stalled above tolerance {tol}"
    )))
}

/// Law of the critical-gauge jump `X`: `P(X = k) = Q_k phi_c^k / q` on
/// `1..=m_max`, tail mass certified from the series remainder.
pub fn jump_pmf_x(w: &WeightSequence, m_max: usize) -> Result<Pmf> {
    if m_max == 0 {
        return Err(Error::Domain("jump law needs m_max >= 1".into()));
    }
    let q = w.q()?;
    if !q.value.is_finite() {
        return Err(Error::Domain(
            "critical-gauge jump law undefined: q diverges".into(),
        ));
    }
    let b = match w.family() {
        Family::PowerLaw { b, .. } => *b,
        _ => unreachable!("finite q implies power-law family"),
    };
    let mut probs = vec![0.0f64; m_max + 1];
    for (k, p) in probs.iter_mut().enumerate().skip(1) {
        *p = (k as f64).powf(-b) / q.value;
    }
    let tail = zeta_from(m_max + 1, b)?.value / q.value;
    Pmf::from_probs(probs)?.with_tail_mass(tail)
}

/// Law of the plain-gauge jump `Y`: `P(Y = r) = Q_r / w` on `1..=m_max`.
pub fn jump_pmf_y(w: &WeightSequence, m_max: usize) -> Result<Pmf> {
    if m_max == 0 {
        return Err(Error::Domain("jump law needs m_max >= 1".into()));
    }
    let total = w.w().value;
    let mut probs = vec![0.0f64; m_max + 1];
    for (r, p) in probs.iter_mut().enumerate().skip(1) {
        *p = (w.log_q_r(r) - total.ln()).exp();
    }
    let tail = match w.family() {
        Family::PowerLaw { b, phi_c } => {
            power_series(m_max + 1, *b, 1.0 / phi_c)?.value / total
        }
        Family::Geometric { z } => z.powi(m_max as i32 + 1) / (1.0 - z) / total,
        Family::Explicit { head } => {
            head.iter().skip(m_max).sum::<f64>() / total
        }
    };
    Pmf::from_probs(probs)?.with_tail_mass(tail)
}
