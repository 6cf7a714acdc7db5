//! Brute-force and exact-probability oracles: partition enumeration, the
//! exact invariant measure at desk scale, exact conditional marginals at any
//! scale, local-limit ratios, and the stable-regime scale sequence `a_V`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::pmf::{panjer_pmf, poisson_log_pmf, Pmf};
use crate::series::ln_factorial;
use crate::weights::{jump_pmf_x, Family, WeightSequence};

/// Hard cap on exact state-space enumeration (37338 states at the cap).
pub const ENUMERATION_CAP: usize = 40;

/// A cluster configuration: counts per size with conserved total mass.
///
/// Stored sparsely; configurations at condensation scale hold a handful of
/// occupied sizes out of hundreds of thousands.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration {
    counts: BTreeMap<usize, u32>,
    mass: usize,
}

impl Configuration {
    /// Build from (size, count) pairs; zero counts are dropped.
    pub fn from_counts<I: IntoIterator<Item = (usize, u32)>>(pairs: I) -> Result<Self> {
        let mut counts = BTreeMap::new();
        let mut mass = 0usize;
        for (size, count) in pairs {
            if size == 0 {
                return Err(Error::Domain("cluster sizes start at 1".into()));
            }
            if count == 0 {
                continue;
            }
            mass += size * count as usize;
            *counts.entry(size).or_insert(0) += count;
        }
        Ok(Configuration { counts, mass })
    }

    /// Build from a dense table where `dense[i]` counts clusters of size `i+1`.
    pub fn from_dense(dense: &[u32]) -> Self {
        let counts: BTreeMap<usize, u32> = dense
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (i + 1, c))
            .collect();
        let mass = counts.iter().map(|(&s, &c)| s * c as usize).sum();
        Configuration { counts, mass }
    }

    pub fn empty() -> Self {
        Configuration {
            counts: BTreeMap::new(),
            mass: 0,
        }
    }

    pub fn mass(&self) -> usize {
        self.mass
    }

    pub fn count(&self, size: usize) -> u32 {
        self.counts.get(&size).copied().unwrap_or(0)
    }

    /// Size of the largest cluster; 0 for the empty configuration.
    pub fn largest(&self) -> usize {
        self.counts.keys().next_back().copied().unwrap_or(0)
    }

    /// Occupied (size, count) pairs in increasing size order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.counts.iter().map(|(&s, &c)| (s, c))
    }

    /// Total number of clusters.
    pub fn cluster_count(&self) -> usize {
        self.counts.values().map(|&c| c as usize).sum()
    }

    /// Dense count table on `1..=len` (sizes beyond are dropped).
    pub fn to_dense(&self, len: usize) -> Vec<u32> {
        let mut dense = vec![0u32; len];
        for (&s, &c) in &self.counts {
            if s <= len {
                dense[s - 1] = c;
            }
        }
        dense
    }
}

/// All configurations of mass exactly `m`, each exactly once
/// (integer-partition count many).
pub fn enumerate_partitions(m: usize) -> Result<Vec<Configuration>> {
    if m == 0 {
        return Err(Error::Domain("mass must be positive".into()));
    }
    if m > ENUMERATION_CAP {
        return Err(Error::CapExceeded {
            requested: m,
            cap: ENUMERATION_CAP,
        });
    }
    let mut out = Vec::new();
    let mut stack: Vec<(usize, u32)> = Vec::new();
    descend(m, m, &mut stack, &mut out);
    Ok(out)
}

fn descend(
    remaining: usize,
    max_part: usize,
    stack: &mut Vec<(usize, u32)>,
    out: &mut Vec<Configuration>,
) {
    if remaining == 0 {
        out.push(Configuration::from_counts(stack.iter().copied()).expect("parts are valid"));
        return;
    }
    for part in (1..=max_part.min(remaining)).rev() {
        for count in 1..=(remaining / part) as u32 {
            stack.push((part, count));
            descend(remaining - part * count as usize, part - 1, stack, out);
            stack.pop();
        }
    }
}

/// The exact invariant measure at desk scale, with its partition function.
#[derive(Debug, Clone)]
pub struct ExactMeasure {
    /// Every configuration of mass M paired with its probability
    /// (zero-probability states included).
    pub entries: Vec<(Configuration, f64)>,
    /// Partition function `Z = sum prod (V Q_i)^{eta_i} / eta_i!`.
    pub z: f64,
    /// `ln Z`, exact even when Z itself would under- or overflow.
    pub log_z: f64,
}

impl ExactMeasure {
    /// Probability of one configuration (0 if the mass differs).
    pub fn prob(&self, config: &Configuration) -> f64 {
        self.entries
            .iter()
            .find(|(c, _)| c == config)
            .map_or(0.0, |&(_, p)| p)
    }

    /// Marginal law of the count at one size, as a dense table on 0..=M/size.
    pub fn marginal(&self, size: usize) -> Vec<f64> {
        let m = self.entries[0].0.mass();
        let mut out = vec![0.0; m / size + 1];
        for (config, p) in &self.entries {
            out[config.count(size) as usize] += p;
        }
        out
    }
}

/// Exact invariant measure: `pi(eta) = (1/Z) prod_i (V Q_i)^{eta_i} / eta_i!`
/// over all configurations of mass `M`.
pub fn pi_exact(w: &WeightSequence, v: f64, m: usize) -> Result<ExactMeasure> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::Domain(format!("volume must be positive, got {v}")));
    }
    let states = enumerate_partitions(m)?;
    let ln_v = v.ln();
    let log_weights: Vec<f64> = states
        .iter()
        .map(|config| {
            config
                .iter()
                .map(|(size, count)| {
                    let lq = w.log_q_r(size);
                    if lq == f64::NEG_INFINITY {
                        return f64::NEG_INFINITY;
                    }
                    count as f64 * (ln_v + lq) - ln_factorial(count as usize)
                })
                .sum()
        })
        .collect();
    let max = log_weights
        .iter()
        .copied()
        .filter(|x| x.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::NumericalDegeneracy(
            "all configurations carry zero weight".into(),
        ));
    }
    let shifted: Vec<f64> = log_weights.iter().map(|&lw| (lw - max).exp()).collect();
    let total: f64 = shifted.iter().sum();
    let log_z = max + total.ln();
    let entries = states
        .into_iter()
        .zip(shifted.iter())
        .map(|(config, &sw)| (config, sw / total))
        .collect();
    Ok(ExactMeasure {
        entries,
        z: log_z.exp(),
        log_z,
    })
}

/// Per-size Poisson intensities and the matching jump table for the
/// conditional representation of the measure, in whichever gauge stays
/// representable: the critical gauge when the radius is finite (intensities
/// `V Q_r phi_c^r`), the plain gauge otherwise. The conditional law of the
/// configuration given the total mass is the same in every gauge.
struct GaugedJumps {
    /// Total intensity `sum_r lambda_r` including sizes beyond the table.
    lambda: f64,
    /// Jump table on 1..=m_max: `f(r) = lambda_r / lambda` (sub-stochastic).
    jump: Pmf,
    /// `ln lambda_r` per size.
    log_rates: Vec<f64>,
}

fn gauged_jumps(w: &WeightSequence, v: f64, m_max: usize) -> Result<GaugedJumps> {
    match w.family() {
        Family::PowerLaw { .. } => {
            let q = w.q()?.value;
            let lambda = q * v;
            let jump = jump_pmf_x(w, m_max)?;
            let log_rates = (0..=m_max)
                .map(|r| {
                    if r == 0 {
                        f64::NEG_INFINITY
                    } else {
                        v.ln() + w.log_critical_weight(r).expect("power law has a gauge")
                    }
                })
                .collect();
            Ok(GaugedJumps {
                lambda,
                jump,
                log_rates,
            })
        }
        Family::Geometric { .. } | Family::Explicit { .. } => {
            let total = w.w().value;
            let lambda = total * v;
            let jump = crate::weights::jump_pmf_y(w, m_max)?;
            let log_rates = (0..=m_max)
                .map(|r| {
                    if r == 0 {
                        f64::NEG_INFINITY
                    } else {
                        v.ln() + w.log_q_r(r)
                    }
                })
                .collect();
            Ok(GaugedJumps {
                lambda,
                jump,
                log_rates,
            })
        }
    }
}

/// Exact law of the count `eta_r` under the invariant measure, computed
/// without enumeration: `P(eta_r = k)` proportional to
/// `Poisson(lambda_r)(k) * P(S_without_r = M - r k)`, where `S_without_r`
/// is the compound sum with size-`r` jumps removed.
pub fn conditional_marginal_pmf(
    w: &WeightSequence,
    v: f64,
    m: usize,
    r: usize,
) -> Result<Pmf> {
    if r == 0 || r > m {
        return Err(Error::Domain(format!(
            "marginal size {r} outside 1..={m}"
        )));
    }
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::Domain(format!("volume must be positive, got {v}")));
    }
    let gauged = gauged_jumps(w, v, m)?;
    let full = panjer_pmf(gauged.lambda, &gauged.jump, m)?;
    if full.log_p(m) == f64::NEG_INFINITY {
        return Err(Error::NumericalDegeneracy(format!(
            "total mass {m} has zero probability under the compound law"
        )));
    }

    // Zero out the size-r slot: Panjer at the full intensity then yields
    // exp(-lambda_r) * P(S_without_r = s), and the exp(-lambda_r) cancels
    // against the Poisson normalization in the ratio below.
    let mut probs_without = vec![0.0f64; m + 1];
    for k in 1..=m {
        if k != r {
            probs_without[k] = gauged.jump.p(k);
        }
    }
    let without = panjer_pmf(gauged.lambda, &Pmf::from_probs(probs_without)?, m)?;

    let log_rate = gauged.log_rates[r];
    let kmax = m / r;
    let log_probs: Vec<f64> = (0..=kmax)
        .map(|k| {
            // ln[(lambda_r^k / k!) * p_without(M - r k) / p_full(M)].
            let poisson_part = if k == 0 {
                0.0
            } else {
                k as f64 * log_rate - ln_factorial(k)
            };
            poisson_part + without.log_p(m - r * k) - full.log_p(m)
        })
        .collect();
    Pmf::from_log_probs(log_probs)
}

/// Ratio `P(S = m) / (q V * P(X = ceil(m - rho_c V)))` with `S` the
/// compound sum at intensity `q V`; the local-limit statement drives this
/// to 1 for thresholds `m` beyond the condensation window.
pub fn local_limit_ratio(w: &WeightSequence, v: f64, m: usize) -> Result<f64> {
    let b = match w.family() {
        Family::PowerLaw { b, .. } => *b,
        _ => {
            return Err(Error::Domain(
                "local-limit ratio needs the power-law family".into(),
            ))
        }
    };
    if b <= 2.0 {
        return Err(Error::Domain(format!(
            "critical density diverges at exponent {b}"
        )));
    }
    if m == 0 {
        return Err(Error::Domain("threshold mass must be >= 1".into()));
    }
    let q = w.q()?.value;
    let rho_c = w.rho_c()?.value;
    let excess = m as f64 - rho_c * v;
    if excess <= 0.0 {
        return Err(Error::Domain(format!(
            "m - rho_c V = {excess} is nonpositive; ratio defined beyond the critical mass"
        )));
    }
    let k = excess.ceil() as usize;
    let jump = jump_pmf_x(w, m)?;
    let law = panjer_pmf(q * v, &jump, m)?;
    let log_num = law.log_p(m);
    let log_den = (q * v).ln() + (-b * (k as f64).ln() - q.ln());
    Ok((log_num - log_den).exp())
}

/// Scale sequence for the stable fluctuation regime: the smallest integer
/// `x` with `P(S > x) <= 1/V`, where `S` is the compound sum at intensity
/// `q` (the intensity is `q` itself, not `q V`).
pub fn compute_a_v(w: &WeightSequence, v: f64) -> Result<usize> {
    let b = match w.family() {
        Family::PowerLaw { b, .. } => *b,
        _ => {
            return Err(Error::Domain(
                "scale sequence defined for the power-law family".into(),
            ))
        }
    };
    let alpha = b - 1.0;
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::RegimeMismatch(format!(
            "stable scale needs exponent in (2,3), got {b}"
        )));
    }
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::Domain(format!("volume must be positive, got {v}")));
    }
    let q = w.q()?.value;
    let threshold = 1.0 / v;
    if threshold >= 1.0 - (-q).exp() {
        return Ok(0);
    }
    // The tail inverts like (V/alpha)^{1/alpha}; start above that and grow
    // geometrically until the quantile is certified inside the table.
    let mut cap = ((v / alpha).powf(1.0 / alpha) * 4.0) as usize + 64;
    for _ in 0..24 {
        let jump = jump_pmf_x(w, cap)?;
        let law = panjer_pmf(q, &jump, cap)?;
        let mut acc = 0.0f64;
        for x in 0..=cap {
            acc += law.p(x);
            if 1.0 - acc <= threshold {
                // Entries at or below the jump cap are exact, so the
                // quantile is certified as long as it lies inside.
                if x < cap {
                    return Ok(x);
                }
                break;
            }
        }
        cap *= 2;
    }
    Err(Error::NonConvergence(
        "tail quantile did not stabilize within the cap schedule".into(),
    ))
}

/// Poisson log-pmf re-exported for conditional-law assembly elsewhere.
pub use crate::pmf::poisson_log_pmf as poisson_log_probability;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn partition_counts_match_known_values() {
        assert_eq!(enumerate_partitions(1).unwrap().len(), 1);
        assert_eq!(enumerate_partitions(2).unwrap().len(), 2);
        assert_eq!(enumerate_partitions(5).unwrap().len(), 7);
        assert_eq!(enumerate_partitions(10).unwrap().len(), 42);
        assert_eq!(enumerate_partitions(40).unwrap().len(), 37338);
    }

    #[test]
    fn partition_cap_is_enforced() {
        match enumerate_partitions(41) {
            Err(Error::CapExceeded { requested, cap }) => {
                assert_eq!(requested, 41);
                assert_eq!(cap, 40);
            }
            other => panic!("expected CapExceeded, got {other:?}"),
        }
    }

    #[test]
    fn partitions_have_exact_mass_and_no_duplicates() {
        let parts = enumerate_partitions(12).unwrap();
        for config in &parts {
            assert_eq!(config.mass(), 12);
        }
        let mut sorted: Vec<_> = parts.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), parts.len());
    }

    #[test]
    fn configuration_accessors() {
        let c = Configuration::from_counts([(1, 2), (3, 1)]).unwrap();
        assert_eq!(c.mass(), 5);
        assert_eq!(c.count(1), 2);
        assert_eq!(c.count(2), 0);
        assert_eq!(c.largest(), 3);
        assert_eq!(c.cluster_count(), 3);
        assert_eq!(c.to_dense(3), vec![2, 0, 1]);
        assert_eq!(Configuration::empty().largest(), 0);
        assert!(Configuration::from_counts([(0, 1)]).is_err());
    }

    #[test]
    fn exact_measure_two_cluster_reference() {
        // Q = (1,1), V = 1, M = 2: weights 1/2! and 1, so (1/3, 2/3), Z = 3/2.
        let w = WeightSequence::explicit(vec![1.0, 1.0]).unwrap();
        let pi = pi_exact(&w, 1.0, 2).unwrap();
        assert_relative_eq!(pi.z, 1.5, max_relative = 1e-12);
        let two_singles = Configuration::from_counts([(1, 2)]).unwrap();
        let one_pair = Configuration::from_counts([(2, 1)]).unwrap();
        assert_relative_eq!(pi.prob(&two_singles), 1.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(pi.prob(&one_pair), 2.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn exact_measure_mass_three_reference() {
        // Q = (1,1): size 3 carries no weight; Z = 1/6 + 1 = 7/6.
        let w = WeightSequence::explicit(vec![1.0, 1.0]).unwrap();
        let pi = pi_exact(&w, 1.0, 3).unwrap();
        assert_relative_eq!(pi.z, 7.0 / 6.0, max_relative = 1e-12);
        let mixed = Configuration::from_counts([(1, 1), (2, 1)]).unwrap();
        let triple = Configuration::from_counts([(1, 3)]).unwrap();
        let giant = Configuration::from_counts([(3, 1)]).unwrap();
        assert_relative_eq!(pi.prob(&mixed), 6.0 / 7.0, max_relative = 1e-12);
        assert_relative_eq!(pi.prob(&triple), 1.0 / 7.0, max_relative = 1e-12);
        assert_eq!(pi.prob(&giant), 0.0);
    }

    #[test]
    fn exact_measure_single_state() {
        let w = WeightSequence::geometric(0.5).unwrap();
        let pi = pi_exact(&w, 1.0, 1).unwrap();
        assert_eq!(pi.entries.len(), 1);
        assert_relative_eq!(pi.entries[0].1, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn conditional_marginal_matches_enumeration_reference() {
        let w = WeightSequence::explicit(vec![1.0, 1.0]).unwrap();
        let marginal = conditional_marginal_pmf(&w, 1.0, 2, 2).unwrap();
        assert_relative_eq!(marginal.p(1), 2.0 / 3.0, max_relative = 1e-10);
        assert_relative_eq!(marginal.p(0), 1.0 / 3.0, max_relative = 1e-10);
        assert_abs_diff_eq!(marginal.total_mass(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn conditional_marginal_rejects_bad_size() {
        let w = WeightSequence::geometric(0.5).unwrap();
        assert!(conditional_marginal_pmf(&w, 1.0, 4, 5).is_err());
        assert!(conditional_marginal_pmf(&w, 1.0, 4, 0).is_err());
    }

    #[test]
    fn conditional_marginal_normalizes_at_scale() {
        // No enumeration cap: a mass far beyond desk scale still normalizes.
        let w = WeightSequence::power_law(3.5, 2.0).unwrap();
        let marginal = conditional_marginal_pmf(&w, 25.0, 300, 7).unwrap();
        assert_abs_diff_eq!(marginal.total_mass(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn local_limit_ratio_domain_checks() {
        let pw = WeightSequence::power_law(3.5, 2.0).unwrap();
        // m below the critical mass: rejected.
        assert!(local_limit_ratio(&pw, 100.0, 50).is_err());
        // Non-power-law families: rejected.
        let geo = WeightSequence::geometric(0.5).unwrap();
        assert!(local_limit_ratio(&geo, 100.0, 500).is_err());
        // Valid call returns a positive finite value.
        let r = local_limit_ratio(&pw, 50.0, 120).unwrap();
        assert!(r.is_finite() && r > 0.0);
    }

    #[test]
    fn scale_sequence_zero_case_and_monotonicity() {
        let w = WeightSequence::power_law(2.5, 2.0).unwrap();
        // q = zeta(2.5) ~ 1.3415; 1 - e^{-q} ~ 0.739, so V = 1.2 gives 0.
        assert_eq!(compute_a_v(&w, 1.2).unwrap(), 0);
        let a50 = compute_a_v(&w, 50.0).unwrap();
        let a100 = compute_a_v(&w, 100.0).unwrap();
        let a200 = compute_a_v(&w, 200.0).unwrap();
        assert!(a50 >= 1);
        assert!(a100 >= a50);
        assert!(a200 >= a100);
    }

    #[test]
    fn scale_sequence_regime_guard() {
        let gaussian_side = WeightSequence::power_law(3.5, 2.0).unwrap();
        assert!(matches!(
            compute_a_v(&gaussian_side, 100.0),
            Err(Error::RegimeMismatch(_))
        ));
        let geo = WeightSequence::geometric(0.5).unwrap();
        assert!(compute_a_v(&geo, 100.0).is_err());
    }
}
