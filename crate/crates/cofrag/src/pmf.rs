//! Probability tables on `{0, 1, ..., m_max}` with a tail bucket, and the
//! Panjer recursion for compound Poisson sums.
//!
//! Tables keep exact logarithms alongside a rescaled linear view, so laws
//! whose probabilities span hundreds of orders of magnitude (compound sums
//! with intensity in the tens of thousands) stay usable: ratios of entries
//! are computed from the logs and never underflow.

use crate::error::{Error, Result};
use crate::series::ln_factorial;

/// A (sub-)probability mass function on `0..=m_max` plus the mass beyond.
///
/// `probs` holds the linear values scaled by `exp(-log_scale)`; the true
/// probability of `m` is `probs[m] * exp(log_scale)`, also available exactly
/// in log form via [`Pmf::log_p`]. `tail_mass` is the probability of values
/// above `m_max` (and, for truncated-jump compound laws, of paths using a
/// jump beyond the table; see [`panjer_pmf`]).
#[derive(Debug, Clone)]
pub struct Pmf {
    probs: Vec<f64>,
    log_probs: Vec<f64>,
    log_scale: f64,
    tail_mass: f64,
}

impl Pmf {
    /// Build from plain linear probabilities; the tail bucket absorbs
    /// whatever is missing from 1.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptyInput("pmf needs at least one entry".into()));
        }
        let mut sum = 0.0;
        for (m, &p) in probs.iter().enumerate() {
            if !(p >= 0.0) {
                return Err(Error::Domain(format!("negative probability {p} at {m}")));
            }
            sum += p;
        }
        if sum > 1.0 + 1e-9 {
            return Err(Error::Domain(format!("probabilities sum to {sum} > 1")));
        }
        let log_probs = probs.iter().map(|&p| p.ln()).collect();
        Ok(Pmf {
            probs,
            log_probs,
            log_scale: 0.0,
            tail_mass: (1.0 - sum).max(0.0),
        })
    }

    /// Build from exact log-probabilities (`NEG_INFINITY` for zero entries).
    pub fn from_log_probs(log_probs: Vec<f64>) -> Result<Self> {
        if log_probs.is_empty() {
            return Err(Error::EmptyInput("pmf needs at least one entry".into()));
        }
        let log_scale = log_probs
            .iter()
            .copied()
            .filter(|lp| lp.is_finite())
            .fold(f64::NEG_INFINITY, f64::max);
        if !log_scale.is_finite() {
            return Err(Error::NumericalDegeneracy(
                "all log-probabilities are zero or invalid".into(),
            ));
        }
        let probs: Vec<f64> = log_probs.iter().map(|&lp| (lp - log_scale).exp()).collect();
        let sum: f64 = log_probs.iter().map(|&lp| lp.exp()).sum();
        if sum > 1.0 + 1e-9 {
            return Err(Error::Domain(format!("probabilities sum to {sum} > 1")));
        }
        Ok(Pmf {
            probs,
            log_probs,
            log_scale,
            tail_mass: (1.0 - sum).max(0.0),
        })
    }

    pub fn m_max(&self) -> usize {
        self.probs.len() - 1
    }

    /// True probability of `m` (0 beyond the table).
    pub fn p(&self, m: usize) -> f64 {
        self.log_probs.get(m).map_or(0.0, |lp| lp.exp())
    }

    /// Exact natural log of the probability of `m`.
    pub fn log_p(&self, m: usize) -> f64 {
        self.log_probs.get(m).copied().unwrap_or(f64::NEG_INFINITY)
    }

    /// Linear entries scaled by `exp(-log_scale)`.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Sum of table entries plus the tail bucket; 1 for a proper law.
    pub fn total_mass(&self) -> f64 {
        self.table_mass() + self.tail_mass
    }

    /// Probability of the table range `0..=m_max`.
    pub fn table_mass(&self) -> f64 {
        self.log_probs.iter().map(|&lp| lp.exp()).sum()
    }

    /// `P(value <= m)` summed over the table.
    pub fn cdf(&self, m: usize) -> f64 {
        let hi = m.min(self.m_max());
        self.log_probs[..=hi].iter().map(|&lp| lp.exp()).sum()
    }

    /// Mean restricted to the table range.
    pub fn table_mean(&self) -> f64 {
        self.log_probs
            .iter()
            .enumerate()
            .map(|(m, &lp)| m as f64 * lp.exp())
            .sum()
    }

    /// Overwrite the tail bucket with an externally certified value.
    pub fn with_tail_mass(mut self, tail_mass: f64) -> Result<Self> {
        if !(tail_mass >= 0.0) || tail_mass > 1.0 {
            return Err(Error::Domain(format!("tail mass {tail_mass} outside [0,1]")));
        }
        self.tail_mass = tail_mass;
        Ok(self)
    }
}

/// Rescale cadence of the Panjer loop: every this many steps the linear
/// window is renormalized and the offset folded into the running log scale.
const RESCALE_EVERY: usize = 64;
/// Linear guard triggering an immediate rescale between cadence points.
const RESCALE_CEILING: f64 = 1e250;

/// Distribution of a compound Poisson sum `S = X_1 + ... + X_N`,
/// `N ~ Poisson(lambda)`, jumps i.i.d. from `jump` (which must put no mass
/// at zero), tabulated on `0..=m_max` by the Panjer recursion
/// `p(m) = (lambda/m) * sum_k k f(k) p(m-k)`, `p(0) = exp(-lambda)`.
///
/// The recursion runs on a linear window with a running log-scale offset
/// renormalized every [`RESCALE_EVERY`] steps, so intensities of any size
/// are handled; exact logs of every entry are retained.
///
/// If the jump table is truncated (positive jump tail mass), the result is
/// the defective law `P(S = m, every jump <= jump cap)`: entries with
/// `m <=` the jump cap coincide with the untruncated law, because a larger
/// jump forces a larger sum. The tail bucket absorbs the deficit.
pub fn panjer_pmf(lambda: f64, jump: &Pmf, m_max: usize) -> Result<Pmf> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("intensity must be positive, got {lambda}")));
    }
    if jump.p(0) > 0.0 {
        return Err(Error::Domain("jump law must put no mass at zero".into()));
    }
    let kmax = jump.m_max();
    // Weighted jump table k * f(k); index 0 unused.
    let g: Vec<f64> = (0..=kmax).map(|k| k as f64 * jump.p(k)).collect();

    let mut v = vec![0.0f64; m_max + 1];
    let mut log_probs = vec![f64::NEG_INFINITY; m_max + 1];
    v[0] = 1.0;
    let mut cur = -lambda;
    log_probs[0] = cur;

    for m in 1..=m_max {
        // s = sum_{k=1}^{min(m,kmax)} k f(k) v[m-k]; pair v[lo..m] upward
        // with g[1..=klim] downward so v[j] meets g[m-j].
        let klim = m.min(kmax);
        let lo = m - klim;
        let s: f64 = v[lo..m]
            .iter()
            .zip(g[1..=klim].iter().rev())
            .map(|(&vj, &gk)| vj * gk)
            .sum();
        let pm = lambda * s / m as f64;
        v[m] = pm;
        log_probs[m] = if pm > 0.0 { pm.ln() + cur } else { f64::NEG_INFINITY };

        if m % RESCALE_EVERY == 0 || pm > RESCALE_CEILING {
            let max = v[..=m].iter().cloned().fold(0.0f64, f64::max);
            if max > 0.0 && max != 1.0 {
                let inv = 1.0 / max;
                for x in &mut v[..=m] {
                    *x *= inv;
                }
                cur += max.ln();
            }
        }
    }

    let table: f64 = log_probs.iter().map(|&lp| lp.exp()).sum();
    let log_scale = log_probs
        .iter()
        .copied()
        .filter(|lp| lp.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if !log_scale.is_finite() {
        return Err(Error::NumericalDegeneracy("compound table is all zero".into()));
    }
    let probs = log_probs.iter().map(|&lp| (lp - log_scale).exp()).collect();
    Ok(Pmf {
        probs,
        log_probs,
        log_scale,
        tail_mass: (1.0 - table).max(0.0),
    })
}

/// Extend a compound law by one extra jump size: given the law of `S` built
/// from jumps excluding size `k`, return the law including a Poisson number
/// (intensity `lambda_k`) of size-`k` jumps:
/// `p_new(m) = sum_j (lambda_k^j / j!) p_old(m - j k)`.
///
/// No `exp(-lambda_k)` factor is applied: the base table built by
/// [`panjer_pmf`] at full intensity already carries the complete
/// `exp(-lambda)` normalization, so extending size by size reproduces the
/// full-jump-table law exactly (testable against a direct Panjer run).
pub fn add_size(base: &Pmf, lambda_k: f64, k: usize) -> Result<Pmf> {
    if !(lambda_k >= 0.0) || lambda_k > 300.0 {
        return Err(Error::Domain(format!(
            "per-size intensity {lambda_k} outside supported range [0, 300]"
        )));
    }
    if k == 0 {
        return Err(Error::Domain("jump size must be positive".into()));
    }
    let m_max = base.m_max();
    let v = base.probs();
    let vmax = v.iter().cloned().fold(0.0f64, f64::max);
    // Coefficient floor below which later j cannot affect any entry.
    let floor = vmax * 1e-40;

    let mut out = vec![0.0f64; m_max + 1];
    let mut coef = 1.0f64; // lambda_k^j / j!
    let mut j = 0usize;
    loop {
        let shift = j * k;
        if shift > m_max {
            break;
        }
        for m in shift..=m_max {
            out[m] += coef * v[m - shift];
        }
        j += 1;
        coef *= lambda_k / j as f64;
        if coef < floor && j as f64 > lambda_k {
            break;
        }
    }

    let log_scale = base.log_scale();
    let log_probs: Vec<f64> = out
        .iter()
        .map(|&x| if x > 0.0 { x.ln() + log_scale } else { f64::NEG_INFINITY })
        .collect();
    let table: f64 = log_probs.iter().map(|&lp| lp.exp()).sum();
    Ok(Pmf {
        probs: out,
        log_probs,
        log_scale,
        tail_mass: (1.0 - table).max(0.0),
    })
}

/// Poisson(lambda) log-pmf at `n`, computed stably for any intensity.
pub fn poisson_log_pmf(lambda: f64, n: usize) -> f64 {
    if lambda == 0.0 {
        return if n == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    n as f64 * lambda.ln() - lambda - ln_factorial(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn single_size_jump(k: usize) -> Pmf {
        let mut probs = vec![0.0; k + 1];
        probs[k] = 1.0;
        Pmf::from_probs(probs).unwrap()
    }

    #[test]
    fn panjer_single_size_reduces_to_poisson() {
        // Jumps of constant size 3: S = 3 N, so p(3n) = Poisson(lambda)(n).
        let lambda = 2.7;
        let law = panjer_pmf(lambda, &single_size_jump(3), 30).unwrap();
        for n in 0..=10 {
            let want = poisson_log_pmf(lambda, n);
            assert_relative_eq!(law.log_p(3 * n), want, max_relative = 1e-12);
        }
        assert_eq!(law.p(4), 0.0);
        assert!(law.log_p(5).is_infinite());
    }

    #[test]
    fn panjer_agrees_with_direct_convolution() {
        // Small compound law checked against explicit N-fold convolution.
        let lambda = 1.3;
        let jump = Pmf::from_probs(vec![0.0, 0.5, 0.3, 0.2]).unwrap();
        let m_max = 30;
        let law = panjer_pmf(lambda, &jump, m_max).unwrap();

        let mut direct = vec![0.0f64; m_max + 1];
        // P(S=m) = sum_n Poisson(n) f^{*n}(m).
        let mut conv = vec![0.0f64; m_max + 1];
        conv[0] = 1.0;
        direct[0] += poisson_log_pmf(lambda, 0).exp();
        for n in 1..=m_max {
            let mut next = vec![0.0f64; m_max + 1];
            for m in 0..=m_max {
                if conv[m] == 0.0 {
                    continue;
                }
                for k in 1..=3.min(m_max - m) {
                    next[m + k] += conv[m] * jump.p(k);
                }
            }
            conv = next;
            let pn = poisson_log_pmf(lambda, n).exp();
            for m in 0..=m_max {
                direct[m] += pn * conv[m];
            }
        }
        for m in 0..=m_max {
            assert_abs_diff_eq!(law.p(m), direct[m], epsilon = 1e-12);
        }
    }

    #[test]
    fn panjer_huge_intensity_stays_finite() {
        // Intensity far beyond exp-range: logs must remain exact.
        let lambda = 5e4;
        let jump = Pmf::from_probs(vec![0.0, 1.0]).unwrap();
        let law = panjer_pmf(lambda, &jump, 200).unwrap();
        for m in [0usize, 1, 50, 200] {
            assert_relative_eq!(law.log_p(m), poisson_log_pmf(lambda, m), max_relative = 1e-10);
        }
        assert!(law.table_mass() < 1e-200);
        assert_relative_eq!(law.tail_mass(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn truncated_jump_table_is_exact_below_cap() {
        // Entries at or below the jump cap match the untruncated law.
        let lambda = 3.0;
        let raw: Vec<f64> = (0..=40u32)
            .map(|k| if k == 0 { 0.0 } else { 0.5f64.powi(k as i32) })
            .collect();
        let s: f64 = raw.iter().sum();
        let full_probs: Vec<f64> = raw.iter().map(|p| p / s).collect();
        let full = Pmf::from_probs(full_probs.clone()).unwrap();
        let cap = 12;
        let cut = Pmf::from_probs(full_probs[..=cap].to_vec()).unwrap();

        let law_full = panjer_pmf(lambda, &full, 40).unwrap();
        let law_cut = panjer_pmf(lambda, &cut, 40).unwrap();
        for m in 0..=cap {
            assert_relative_eq!(law_cut.p(m), law_full.p(m), max_relative = 1e-12);
        }
        // Beyond the cap the truncated law is defective.
        assert!(law_cut.p(cap + 1) < law_full.p(cap + 1));
        assert!(law_cut.tail_mass() > law_full.tail_mass());
    }

    #[test]
    fn add_size_matches_full_panjer() {
        let lambda_of = |k: usize| 1.7 * (k as f64).powf(-2.0);
        let kmax = 9;
        let total: f64 = (1..=kmax).map(lambda_of).sum();
        let probs: Vec<f64> = (0..=kmax)
            .map(|k| if k == 0 { 0.0 } else { lambda_of(k) / total })
            .collect();
        let jump_full = Pmf::from_probs(probs.clone()).unwrap();
        let full = panjer_pmf(total, &jump_full, 25).unwrap();

        // Same law assembled by extending a truncated base one size at a time.
        // The base runs at the FULL intensity with a sub-stochastic jump
        // table, so its exp(-lambda) normalization is already complete.
        let k0 = 5;
        let mut head_probs = vec![0.0; k0 + 1];
        for (k, hp) in head_probs.iter_mut().enumerate().skip(1) {
            *hp = lambda_of(k) / total;
        }
        let jump_head = Pmf::from_probs(head_probs).unwrap();
        let mut law = panjer_pmf(total, &jump_head, 25).unwrap();
        for k in k0 + 1..=kmax {
            law = add_size(&law, lambda_of(k), k).unwrap();
        }
        for m in 0..=25 {
            assert_relative_eq!(law.p(m), full.p(m), max_relative = 1e-10);
        }
    }

    #[test]
    fn normalization_invariant_holds() {
        let jump = Pmf::from_probs(vec![0.0, 0.25, 0.25, 0.25, 0.25]).unwrap();
        for lambda in [0.4, 3.0, 47.0] {
            let law = panjer_pmf(lambda, &jump, 600).unwrap();
            assert_abs_diff_eq!(law.total_mass(), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn rejects_mass_at_zero_and_bad_intensity() {
        let bad = Pmf::from_probs(vec![0.1, 0.9]).unwrap();
        assert!(panjer_pmf(1.0, &bad, 10).is_err());
        let ok = Pmf::from_probs(vec![0.0, 1.0]).unwrap();
        assert!(panjer_pmf(0.0, &ok, 10).is_err());
        assert!(panjer_pmf(f64::NAN, &ok, 10).is_err());
    }

    #[test]
    fn from_probs_validates() {
        assert!(Pmf::from_probs(vec![]).is_err());
        assert!(Pmf::from_probs(vec![0.5, 0.7]).is_err());
        assert!(Pmf::from_probs(vec![-0.1, 0.5]).is_err());
        let p = Pmf::from_probs(vec![0.0, 0.5, 0.25]).unwrap();
        assert_abs_diff_eq!(p.tail_mass(), 0.25, epsilon = 1e-15);
    }
}
