use num_traits::{One, Signed, Zero};

use crate::error::{KofnError, Result};
use crate::num::Q;

/// A MaxThroughput instance: pass probabilities, rate limits and threshold.
///
/// Processors are identified by their 0-based position in `p`/`r`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    k: usize,
    p: Vec<Q>,
    r: Vec<Q>,
}

impl Instance {
    pub fn new(k: usize, p: Vec<Q>, r: Vec<Q>) -> Result<Self> {
        if p.len() != r.len() {
            return Err(KofnError::Length(format!(
                "{} probabilities, {} rates",
                p.len(),
                r.len()
            )));
        }
        check_common(k, &p)?;
        for (i, ri) in r.iter().enumerate() {
            if !ri.is_positive() {
                return Err(KofnError::Rate {
                    test: i + 1,
                    value: ri.to_string(),
                });
            }
        }
        Ok(Self { k, p, r })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn p(&self) -> &[Q] {
        &self.p
    }

    pub fn r(&self) -> &[Q] {
        &self.r
    }

    /// Failure probabilities `1 - p_i`.
    pub fn q(&self) -> Vec<Q> {
        self.p.iter().map(|p| Q::one() - p).collect()
    }
}

/// A MinCost instance: pass probabilities, per-test costs and threshold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostInstance {
    k: usize,
    p: Vec<Q>,
    c: Vec<Q>,
}

impl CostInstance {
    pub fn new(k: usize, p: Vec<Q>, c: Vec<Q>) -> Result<Self> {
        if p.len() != c.len() {
            return Err(KofnError::Length(format!(
                "{} probabilities, {} costs",
                p.len(),
                c.len()
            )));
        }
        check_common(k, &p)?;
        for (i, ci) in c.iter().enumerate() {
            if !ci.is_positive() {
                return Err(KofnError::Cost {
                    test: i + 1,
                    value: ci.to_string(),
                });
            }
        }
        Ok(Self { k, p, c })
    }

    /// Like [`CostInstance::new`] but allows zero costs. Dual prices in the
    /// standard-variant solver may vanish on some tests.
    pub fn with_nonnegative_costs(k: usize, p: Vec<Q>, c: Vec<Q>) -> Result<Self> {
        if p.len() != c.len() {
            return Err(KofnError::Length(format!(
                "{} probabilities, {} costs",
                p.len(),
                c.len()
            )));
        }
        check_common(k, &p)?;
        for (i, ci) in c.iter().enumerate() {
            if ci.is_negative() {
                return Err(KofnError::Cost {
                    test: i + 1,
                    value: ci.to_string(),
                });
            }
        }
        Ok(Self { k, p, c })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn p(&self) -> &[Q] {
        &self.p
    }

    pub fn c(&self) -> &[Q] {
        &self.c
    }
}

fn check_common(k: usize, p: &[Q]) -> Result<()> {
    if p.is_empty() {
        return Err(KofnError::Empty);
    }
    if k < 1 || k > p.len() {
        return Err(KofnError::Threshold { k, n: p.len() });
    }
    for (i, pi) in p.iter().enumerate() {
        if pi <= &Q::zero() || pi >= &Q::one() {
            return Err(KofnError::Probability {
                test: i + 1,
                value: pi.to_string(),
            });
        }
    }
    Ok(())
}
