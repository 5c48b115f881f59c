//! Exact discrete distributions over classical outcome tuples and the
//! mutual-information computation built on them.
//!
//! Leakage claims are asserted as exact zeros, so mutual information is
//! always computed from enumerated distributions, never estimated from
//! samples.

use std::collections::BTreeMap;
use thiserror::Error;

/// One classical observable: a name and its observed value.
pub type OutcomeVar = (String, u8);

/// An ordered tuple of observables, e.g. everything one party saw in a
/// scenario.
pub type Outcome = Vec<OutcomeVar>;

/// Map from outcome tuples to exact probabilities. Probabilities of a
/// complete enumeration sum to 1 within 1e-12.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutcomeDistribution {
    entries: BTreeMap<Outcome, f64>,
}

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("distributions are over mismatched outcome spaces")]
    MismatchedOutcomeSpaces,
    #[error("distribution is empty")]
    Empty,
}

impl OutcomeDistribution {
    pub fn add(&mut self, outcome: Outcome, probability: f64) {
        if probability > 0.0 {
            *self.entries.entry(outcome).or_insert(0.0) += probability;
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Outcome, f64)> {
        self.entries.iter().map(|(k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    /// Probability of the outcome, zero if absent.
    pub fn probability(&self, outcome: &Outcome) -> f64 {
        self.entries.get(outcome).copied().unwrap_or(0.0)
    }

    /// Probability assigned to outcomes satisfying the predicate.
    pub fn probability_where<F: Fn(&Outcome) -> bool>(&self, pred: F) -> f64 {
        self.entries
            .iter()
            .filter(|(k, _)| pred(k))
            .map(|(_, &v)| v)
            .sum()
    }

    /// The variable-name schema: every outcome in one enumeration records
    /// the same ordered names.
    fn schema(&self) -> Option<Vec<&str>> {
        let mut names: Option<Vec<&str>> = None;
        for key in self.entries.keys() {
            let this: Vec<&str> = key.iter().map(|(n, _)| n.as_str()).collect();
            match &names {
                None => names = Some(this),
                Some(prev) if *prev == this => {}
                Some(_) => return None,
            }
        }
        names
    }

    /// Joint distribution of two independent enumerations (outcome tuples
    /// concatenated).
    pub fn product(&self, other: &OutcomeDistribution) -> OutcomeDistribution {
        let mut out = OutcomeDistribution::default();
        for (ka, pa) in self.entries() {
            for (kb, pb) in other.entries() {
                let mut key = ka.clone();
                key.extend(kb.iter().cloned());
                out.add(key, pa * pb);
            }
        }
        out
    }

    /// Largest absolute probability difference across the union of
    /// supports. Zero means the distributions are identical.
    pub fn max_divergence(&self, other: &OutcomeDistribution) -> f64 {
        let mut keys: Vec<&Outcome> = self.entries.keys().collect();
        for k in other.entries.keys() {
            if !self.entries.contains_key(k) {
                keys.push(k);
            }
        }
        keys.into_iter()
            .map(|k| (self.probability(k) - other.probability(k)).abs())
            .fold(0.0, f64::max)
    }
}

/// Mutual information, in bits, between a uniformly distributed binary
/// hypothesis and an observation whose conditional distributions are
/// `given_zero` and `given_one`.
pub fn mutual_information(
    given_zero: &OutcomeDistribution,
    given_one: &OutcomeDistribution,
) -> Result<f64, StatsError> {
    if given_zero.is_empty() || given_one.is_empty() {
        return Err(StatsError::Empty);
    }
    let s0 = given_zero.schema().ok_or(StatsError::MismatchedOutcomeSpaces)?;
    let s1 = given_one.schema().ok_or(StatsError::MismatchedOutcomeSpaces)?;
    if s0 != s1 {
        return Err(StatsError::MismatchedOutcomeSpaces);
    }
    let mut keys: Vec<Outcome> = given_zero.entries.keys().cloned().collect();
    for k in given_one.entries.keys() {
        if !given_zero.entries.contains_key(k) {
            keys.push(k.clone());
        }
    }
    let mut mi = 0.0;
    for key in &keys {
        let p_marginal = 0.5 * (given_zero.probability(key) + given_one.probability(key));
        for d in [given_zero, given_one] {
            let joint = 0.5 * d.probability(key);
            if joint > 0.0 {
                mi += joint * (joint / (0.5 * p_marginal)).log2();
            }
        }
    }
    Ok(mi.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(entries: &[(&[(&str, u8)], f64)]) -> OutcomeDistribution {
        let mut d = OutcomeDistribution::default();
        for (key, p) in entries {
            let outcome: Outcome = key.iter().map(|(n, v)| (n.to_string(), *v)).collect();
            d.add(outcome, *p);
        }
        d
    }

    #[test]
    fn identical_distributions_carry_no_information() {
        let d = dist(&[(&[("t", 0)], 0.5), (&[("t", 1)], 0.5)]);
        assert_eq!(mutual_information(&d, &d).unwrap(), 0.0);
    }

    #[test]
    fn disjoint_supports_carry_one_bit() {
        let d0 = dist(&[(&[("z", 0), ("x", 0)], 0.5), (&[("z", 1), ("x", 1)], 0.5)]);
        let d1 = dist(&[(&[("z", 1), ("x", 0)], 0.5), (&[("z", 0), ("x", 1)], 0.5)]);
        let mi = mutual_information(&d0, &d1).unwrap();
        assert!((mi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_overlap_is_between_zero_and_one() {
        let d0 = dist(&[(&[("o", 0)], 1.0)]);
        let d1 = dist(&[(&[("o", 0)], 0.5), (&[("o", 1)], 0.5)]);
        let mi = mutual_information(&d0, &d1).unwrap();
        assert!(mi > 0.0 && mi < 1.0);
        // H(B) - H(B|O): outcome 1 identifies hypothesis one; outcome 0 is
        // a 2:1 mix. Closed form: 1 - 0.75 * h(1/3).
        let h = |p: f64| -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
        let expect = 1.0 - 0.75 * h(1.0 / 3.0);
        assert!((mi - expect).abs() < 1e-12);
    }

    #[test]
    fn mismatched_schemas_error() {
        let d0 = dist(&[(&[("a", 0)], 1.0)]);
        let d1 = dist(&[(&[("b", 0)], 1.0)]);
        assert_eq!(
            mutual_information(&d0, &d1),
            Err(StatsError::MismatchedOutcomeSpaces)
        );
    }

    #[test]
    fn product_multiplies_probabilities() {
        let d = dist(&[(&[("t", 0)], 0.25), (&[("t", 1)], 0.75)]);
        let p = d.product(&d);
        assert_eq!(p.len(), 4);
        assert!((p.total() - 1.0).abs() < 1e-12);
        let key: Outcome = vec![("t".into(), 1), ("t".into(), 1)];
        assert!((p.probability(&key) - 0.5625).abs() < 1e-12);
    }

    #[test]
    fn divergence_detects_support_differences() {
        let d0 = dist(&[(&[("t", 0)], 1.0)]);
        let d1 = dist(&[(&[("t", 1)], 1.0)]);
        assert_eq!(d0.max_divergence(&d1), 1.0);
        assert_eq!(d0.max_divergence(&d0), 0.0);
    }
}
