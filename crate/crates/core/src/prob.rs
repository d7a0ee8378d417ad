//! Distributions of failed-test counts.
//!
//! A [`CountDistribution`] tracks `Z`, the number of failed (0-valued) tests
//! over a fixed group of independent tests, truncated at the threshold `k`:
//! `mass[v] = Pr[Z = v]` for `v < k` and `mass[k] = Pr[Z >= k]`.

use num_traits::{One, Zero};

use crate::error::{KofnError, Result};
use crate::instance::Instance;
use crate::num::{Scalar, Q};

#[derive(Debug, Clone, PartialEq)]
pub struct CountDistribution<S = Q> {
    mass: Vec<S>,
    /// Number of tests in the group. Bounds the support: `mass[v] = 0` for `v > size`.
    size: usize,
}

impl<S: Scalar> CountDistribution<S> {
    /// Distribution of an empty group: all mass at zero failures.
    pub fn point_mass(k: usize) -> Self {
        assert!(k >= 1, "threshold must be at least 1");
        let mut mass = vec![S::zero(); k + 1];
        mass[0] = S::one();
        Self { mass, size: 0 }
    }

    /// A single test failing with probability `fail`.
    pub fn single(fail: S, k: usize) -> Self {
        let mut d = Self::point_mass(k);
        d.mass[1] = fail.clone();
        d.mass[0] = S::one() - fail;
        d.size = 1;
        d
    }

    /// Builds the distribution by adding one test at a time.
    pub fn from_failure_probs(fail: &[S], k: usize) -> Self {
        let mut d = Self::point_mass(k);
        for f in fail {
            d.push_test(f);
        }
        d
    }

    /// Adds one more independent test to the group.
    pub fn push_test(&mut self, fail: &S) {
        let k = self.k();
        let pass = S::one() - fail.clone();
        self.mass[k] = self.mass[k].clone() + self.mass[k - 1].clone() * fail.clone();
        for v in (1..k).rev() {
            self.mass[v] =
                self.mass[v].clone() * pass.clone() + self.mass[v - 1].clone() * fail.clone();
        }
        self.mass[0] = self.mass[0].clone() * pass;
        self.size += 1;
    }

    pub fn k(&self) -> usize {
        self.mass.len() - 1
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn mass(&self) -> &[S] {
        &self.mass
    }

    /// `Pr[Z >= v]` for `0 <= v <= k`.
    pub fn at_least(&self, v: usize) -> S {
        assert!(v <= self.k());
        self.mass[v..]
            .iter()
            .fold(S::zero(), |acc, m| acc + m.clone())
    }

    /// `D[j] = sum_{v=1}^{k-j} Pr[Z >= v]` for `j = 0..k`, in O(k).
    ///
    /// `D[j]` is the expected number of members a unit of flow that already
    /// failed `j` tests passes through before leaving the group or being
    /// discarded, times the members' mean failure probability.
    pub fn tail_sums(&self) -> Vec<S> {
        let k = self.k();
        let mut at_least = vec![S::zero(); k + 2];
        for v in (1..=k).rev() {
            at_least[v] = at_least[v + 1].clone() + self.mass[v].clone();
        }
        let mut d = vec![S::zero(); k];
        let mut acc = S::zero();
        for j in (0..k).rev() {
            acc = acc + at_least[k - j].clone();
            d[j] = acc.clone();
        }
        d
    }

    /// `E[min(k, Z)]`.
    pub fn expected_truncated(&self) -> S {
        self.mass
            .iter()
            .enumerate()
            .skip(1)
            .fold(S::zero(), |acc, (v, m)| acc + m.clone() * count::<S>(v))
    }

    /// Truncated convolution with another group's distribution.
    pub fn convolve(&self, other: &Self) -> Self {
        let mut terms = 0;
        self.convolve_counted(other, &mut terms)
    }

    /// [`convolve`](Self::convolve), adding the number of multiply terms
    /// evaluated to `terms`.
    ///
    /// Entry `v < k` sums over `j` ranging across the smaller group's
    /// support, so it costs at most `min(v, small.size) + 1` terms.
    pub fn convolve_counted(&self, other: &Self, terms: &mut u64) -> Self {
        assert_eq!(
            self.k(),
            other.k(),
            "convolving distributions with different thresholds"
        );
        let k = self.k();
        let (small, large) = if self.size <= other.size {
            (self, other)
        } else {
            (other, self)
        };
        let mut mass = vec![S::zero(); k + 1];
        let mut below = S::zero();
        for (v, slot) in mass.iter_mut().enumerate().take(k) {
            let lo = v.saturating_sub(large.size);
            let hi = v.min(small.size);
            let mut acc = S::zero();
            for j in lo..=hi {
                acc = acc + small.mass[j].clone() * large.mass[v - j].clone();
                *terms += 1;
            }
            below = below + acc.clone();
            *slot = acc;
        }
        mass[k] = S::one() - below;
        Self {
            mass,
            size: self.size + other.size,
        }
    }
}

fn count<S: Scalar>(v: usize) -> S {
    (0..v).fold(S::zero(), |acc, _| acc + S::one())
}

/// Exact distribution of failures among tests with failure probabilities `q`.
pub fn exact_count_pmf(q: &[Q], k: usize) -> Result<CountDistribution<Q>> {
    if k == 0 {
        return Err(KofnError::Threshold { k, n: q.len() });
    }
    for (i, qi) in q.iter().enumerate() {
        if qi <= &Q::zero() || qi >= &Q::one() {
            return Err(KofnError::Probability {
                test: i + 1,
                value: qi.to_string(),
            });
        }
    }
    Ok(CountDistribution::from_failure_probs(q, k))
}

/// Types of flow reaching each position of a fixed visiting order.
///
/// `at(z)[j]` is the probability that a unit of input flow arrives at the
/// `z`-th visited processor having failed exactly `j` of the processors
/// visited before it (`j < k`).
#[derive(Debug, Clone, PartialEq)]
pub struct ReachTable<S = Q> {
    columns: Vec<Vec<S>>,
}

impl<S: Scalar> ReachTable<S> {
    /// `pass` lists pass probabilities in visiting order.
    pub fn new(pass: &[S], k: usize) -> Self {
        assert!(k >= 1);
        let mut columns = Vec::with_capacity(pass.len());
        if pass.is_empty() {
            return Self { columns };
        }
        let mut col = vec![S::zero(); k];
        col[0] = S::one();
        columns.push(col);
        for z in 1..pass.len() {
            let p = pass[z - 1].clone();
            let fail = S::one() - p.clone();
            let prev = &columns[z - 1];
            let next: Vec<S> = (0..k)
                .map(|j| {
                    let stay = p.clone() * prev[j].clone();
                    if j == 0 {
                        stay
                    } else {
                        stay + fail.clone() * prev[j - 1].clone()
                    }
                })
                .collect();
            columns.push(next);
        }
        Self { columns }
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn k(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn at(&self, position: usize) -> &[S] {
        &self.columns[position]
    }

    /// Fraction of input flow still in the system at `position`.
    pub fn alive(&self, position: usize) -> S {
        self.columns[position]
            .iter()
            .fold(S::zero(), |acc, f| acc + f.clone())
    }
}

/// Exact reach table for pass probabilities listed in visiting order.
pub fn reach_table(pass: &[Q], k: usize) -> ReachTable<Q> {
    ReachTable::new(pass, k)
}

/// `sum_{t=1}^{k} Pr[Z >= t]` over all tests, which equals `E[min(k, Z)]`.
pub fn alpha(pass: &[Q], k: usize) -> Q {
    let fail: Vec<Q> = pass.iter().map(|p| Q::one() - p).collect();
    let d = CountDistribution::from_failure_probs(&fail, k);
    (1..=k).fold(Q::zero(), |acc, t| acc + d.at_least(t))
}

/// Upper bound on conservative throughput: `sum r_i (1 - p_i) / E[min(k, Z)]`.
///
/// Every item generates `E[min(k, Z)]` failed tests on average no matter
/// how it is routed, and processor `i` can produce at most `r_i (1 - p_i)`
/// failures per unit time.
pub fn throughput_upper_bound(instance: &Instance) -> Q {
    let failures: Q = instance
        .r()
        .iter()
        .zip(instance.p())
        .fold(Q::zero(), |acc, (r, p)| acc + r * (Q::one() - p));
    let d = CountDistribution::from_failure_probs(&instance.q(), instance.k());
    failures / d.expected_truncated()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{q, qi};

    /// Enumerates all 2^n outcomes.
    fn brute_pmf(fail: &[Q], k: usize) -> Vec<Q> {
        let n = fail.len();
        let mut mass = vec![Q::zero(); k + 1];
        for mask in 0u32..(1 << n) {
            let mut pr = Q::one();
            let mut zeros = 0;
            for (i, f) in fail.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    pr *= f;
                    zeros += 1;
                } else {
                    pr *= Q::one() - f;
                }
            }
            mass[zeros.min(k)] += pr;
        }
        mass
    }

    #[test]
    fn empty_group_is_point_mass() {
        let d = exact_count_pmf(&[], 2).unwrap();
        assert_eq!(d.mass(), &[qi(1), qi(0), qi(0)]);
    }

    #[test]
    fn small_groups_match_enumeration() {
        let d = exact_count_pmf(&[q(1, 2), q(1, 2), q(1, 4)], 2).unwrap();
        assert_eq!(d.mass(), &[q(3, 16), q(7, 16), q(3, 8)]);
        let four = [q(1, 2), q(1, 2), q(1, 2), q(1, 4)];
        let d = exact_count_pmf(&four, 2).unwrap();
        assert_eq!(brute_pmf(&four, 2), vec![q(3, 32), q(5, 16), q(19, 32)]);
        assert_eq!(d.mass(), &[q(3, 32), q(5, 16), q(19, 32)]);
    }

    #[test]
    fn rejects_degenerate_probabilities() {
        assert!(exact_count_pmf(&[qi(0)], 1).is_err());
        assert!(exact_count_pmf(&[qi(1)], 1).is_err());
        assert!(exact_count_pmf(&[q(1, 2)], 0).is_err());
    }

    #[test]
    fn convolution_identities() {
        let zero = CountDistribution::<Q>::point_mass(2);
        let b = exact_count_pmf(&[q(1, 3), q(2, 5)], 2).unwrap();
        assert_eq!(zero.convolve(&b).mass(), b.mass());
        let coin = exact_count_pmf(&[q(1, 2)], 2).unwrap();
        assert_eq!(coin.convolve(&coin).mass(), &[q(1, 4), q(1, 2), q(1, 4)]);
        let left = exact_count_pmf(&[q(1, 2), q(1, 2)], 2).unwrap();
        let right = exact_count_pmf(&[q(1, 2), q(1, 4)], 2).unwrap();
        let direct = exact_count_pmf(&[q(1, 2), q(1, 2), q(1, 2), q(1, 4)], 2).unwrap();
        let merged = left.convolve(&right);
        assert_eq!(merged.mass(), direct.mass());
        assert_eq!(merged.size(), 4);
    }

    #[test]
    #[should_panic(expected = "different thresholds")]
    fn convolution_requires_same_threshold() {
        let a = CountDistribution::<Q>::point_mass(1);
        let b = CountDistribution::<Q>::point_mass(2);
        let _ = a.convolve(&b);
    }

    #[test]
    fn convolution_term_count_respects_smaller_support() {
        let k = 5;
        let a = CountDistribution::from_failure_probs(&[q(1, 2)], k);
        let b = CountDistribution::from_failure_probs(&vec![q(1, 3); 9], k);
        let mut terms = 0;
        let _ = a.convolve_counted(&b, &mut terms);
        // v = 0 costs one term, v = 1..4 cost two each.
        assert_eq!(terms, 1 + 4 * 2);
    }

    #[test]
    fn reach_table_first_column_and_examples() {
        let table = reach_table(&[q(1, 2), q(1, 2), q(1, 2), q(3, 4)], 2);
        assert_eq!(table.at(0), &[qi(1), qi(0)]);
        assert_eq!(table.at(2), &[q(1, 4), q(1, 2)]);
        // Visiting O3, O2, O1 with k = 1: type-0 flow at O1 is p3 * p2.
        let table = reach_table(&[q(1, 3), q(1, 2), q(1, 8)], 1);
        assert_eq!(table.at(2), &[q(1, 6)]);
        let tail = exact_count_pmf(&[q(2, 3), q(1, 2)], 1).unwrap();
        assert_eq!(table.at(2)[0], Q::one() - tail.at_least(1));
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha(&[q(1, 2), q(1, 4)], 1), q(7, 8));
        assert_eq!(alpha(&[q(1, 2), q(1, 2), q(1, 2), q(3, 4)], 2), q(3, 2));
        let d = exact_count_pmf(&[q(1, 2), q(1, 2), q(1, 2), q(1, 4)], 2).unwrap();
        assert_eq!(d.at_least(1), q(29, 32));
        assert_eq!(d.at_least(2), q(19, 32));
    }

    #[test]
    fn upper_bound_examples() {
        let inst = Instance::new(
            2,
            vec![q(1, 2), q(1, 2), q(1, 2), q(3, 4)],
            vec![qi(12), qi(12), qi(10), qi(10)],
        )
        .unwrap();
        assert_eq!(throughput_upper_bound(&inst), qi(13));
        let inst = Instance::new(1, vec![q(1, 2), q(1, 4)], vec![qi(1), qi(2)]).unwrap();
        assert_eq!(throughput_upper_bound(&inst), q(16, 7));
        let inst = Instance::new(1, vec![q(2, 7)], vec![qi(5)]).unwrap();
        assert_eq!(throughput_upper_bound(&inst), qi(5));
    }

    #[test]
    fn tail_sums_match_definition() {
        let d = exact_count_pmf(&[q(1, 2), q(1, 4)], 2).unwrap();
        assert_eq!(d.tail_sums(), vec![q(3, 4), q(5, 8)]);
    }
}
