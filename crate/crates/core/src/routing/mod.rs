//! Routing representations and their exact evaluation.
//!
//! Processor ids are 0-based indices into the instance. A megaprocessor
//! (equivalence class of equal-residual processors) forwards flow to its
//! members over the cyclic shifts of its member list, where the shift that
//! starts at member `m_i` receives the fraction `(1 - p_{m_{i-1}}) / sum (1 - p)`
//! (indices cyclic). That allocation loads all members equally for every
//! flow type.

mod certify;
mod loads;
mod simulate;

pub use certify::{check_saturated_suffix, Certificate, CertificateKind};
pub use loads::{
    evaluate_loads, evaluate_mega_loads, evaluate_permutation_loads, evaluate_tree_loads,
    permutation_reach, LoadReport,
};
pub use simulate::{simulate_monte_carlo, within_three_sigma, SimulationReport};

use num_traits::{One, Zero};

use crate::error::{KofnError, Result};
use crate::mincost::DecisionTree;
use crate::num::{Scalar, Q};

/// One phase of a megaprocessor routing: `flow` units sent through the
/// megaprocessors in the listed order.
#[derive(Debug, Clone, PartialEq)]
pub struct MegaPhase<S = Q> {
    /// Megaprocessors in visiting order; each lists its members in base order.
    pub classes: Vec<Vec<usize>>,
    pub flow: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MegaRouting<S = Q> {
    pub phases: Vec<MegaPhase<S>>,
}

/// A merge of the class starting at position `boundary` of the initial
/// order into its left neighbour, preceded by `flow_before` units sent
/// through the partition current at that time. Merges fired by the same
/// stopping event carry zero preceding flow after the first.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeEvent<S = Q> {
    pub boundary: usize,
    pub flow_before: S,
}

/// Initial order plus the sequence of merges, size O(n).
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedRouting<S = Q> {
    /// Processor ids in visiting order.
    pub order: Vec<usize>,
    /// Sizes of the initial classes, consecutive along `order`.
    pub groups: Vec<usize>,
    pub merges: Vec<MergeEvent<S>>,
    pub final_flow: S,
}

/// Explicit list of `(permutation, flow)` pairs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PermutationRouting {
    pub entries: Vec<(Vec<usize>, Q)>,
}

/// Explicit list of `(strategy, flow)` pairs over arbitrary decision trees.
/// Used for standard k-of-n routings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TreeRouting {
    pub entries: Vec<(DecisionTree, Q)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Routing {
    Mega(MegaRouting),
    Compressed(CompressedRouting),
    Permutation(PermutationRouting),
    Tree(TreeRouting),
}

impl<S: Scalar> MegaRouting<S> {
    pub fn throughput(&self) -> S {
        self.phases
            .iter()
            .fold(S::zero(), |acc, ph| acc + ph.flow.clone())
    }

    /// Rebuilds the compressed form. Fails unless every phase uses the same
    /// flattened order and each partition coarsens into the next by merging
    /// adjacent classes.
    pub fn compress(&self) -> Result<CompressedRouting<S>> {
        let first = self
            .phases
            .first()
            .ok_or_else(|| KofnError::Structure("routing has no phases".into()))?;
        let order: Vec<usize> = first.classes.concat();
        let groups: Vec<usize> = first.classes.iter().map(Vec::len).collect();
        let mut merges = Vec::new();
        for pair in self.phases.windows(2) {
            let (cur, next) = (&pair[0], &pair[1]);
            if next.classes.concat() != order {
                return Err(KofnError::Structure(
                    "phases use different processor orders".into(),
                ));
            }
            let cur_starts = class_starts(&cur.classes);
            let next_starts = class_starts(&next.classes);
            if !next_starts.iter().all(|s| cur_starts.contains(s)) {
                return Err(KofnError::Structure(
                    "partition does not coarsen between phases".into(),
                ));
            }
            if cur_starts.len() == next_starts.len() {
                return Err(KofnError::Structure(
                    "consecutive phases without a merge".into(),
                ));
            }
            let mut flow = cur.flow.clone();
            for &b in cur_starts.iter().filter(|s| !next_starts.contains(s)) {
                merges.push(MergeEvent {
                    boundary: b,
                    flow_before: flow,
                });
                flow = S::zero();
            }
        }
        Ok(CompressedRouting {
            order,
            groups,
            merges,
            final_flow: self.phases.last().expect("nonempty").flow.clone(),
        })
    }
}

fn class_starts(classes: &[Vec<usize>]) -> Vec<usize> {
    let mut starts = Vec::with_capacity(classes.len());
    let mut at = 0;
    for c in classes {
        starts.push(at);
        at += c.len();
    }
    starts
}

impl<S: Scalar> CompressedRouting<S> {
    pub fn throughput(&self) -> S {
        self.merges.iter().fold(self.final_flow.clone(), |acc, m| {
            acc + m.flow_before.clone()
        })
    }

    /// Replays the merges into the explicit phase list.
    pub fn replay(&self) -> Result<MegaRouting<S>> {
        let n = self.order.len();
        if self.groups.iter().sum::<usize>() != n || self.groups.contains(&0) {
            return Err(KofnError::Structure(
                "initial groups do not partition the order".into(),
            ));
        }
        // is_start[b]: a class begins at position b.
        let mut is_start = vec![false; n];
        let mut at = 0;
        for g in &self.groups {
            is_start[at] = true;
            at += g;
        }
        let snapshot = |is_start: &[bool]| -> Vec<Vec<usize>> {
            let mut classes: Vec<Vec<usize>> = Vec::new();
            for (pos, &id) in self.order.iter().enumerate() {
                if is_start[pos] {
                    classes.push(Vec::new());
                }
                classes
                    .last_mut()
                    .expect("position 0 starts a class")
                    .push(id);
            }
            classes
        };
        let mut phases = Vec::new();
        for m in &self.merges {
            if m.boundary == 0 || m.boundary >= n || !is_start[m.boundary] {
                return Err(KofnError::Structure(format!(
                    "no class boundary at position {}",
                    m.boundary
                )));
            }
            if !m.flow_before.is_zero() {
                phases.push(MegaPhase {
                    classes: snapshot(&is_start),
                    flow: m.flow_before.clone(),
                });
            } else if phases.is_empty() {
                return Err(KofnError::Structure(
                    "first merge must follow positive flow".into(),
                ));
            }
            is_start[m.boundary] = false;
        }
        phases.push(MegaPhase {
            classes: snapshot(&is_start),
            flow: self.final_flow.clone(),
        });
        Ok(MegaRouting { phases })
    }
}

impl PermutationRouting {
    pub fn throughput(&self) -> Q {
        self.entries.iter().fold(Q::zero(), |acc, (_, f)| acc + f)
    }
}

impl TreeRouting {
    pub fn throughput(&self) -> Q {
        self.entries.iter().fold(Q::zero(), |acc, (_, f)| acc + f)
    }
}

impl Routing {
    pub fn throughput(&self) -> Q {
        match self {
            Routing::Mega(m) => m.throughput(),
            Routing::Compressed(c) => c.throughput(),
            Routing::Permutation(p) => p.throughput(),
            Routing::Tree(t) => t.throughput(),
        }
    }
}

/// Cyclic shifts of `members` with their share of a megaprocessor's input.
pub fn cyclic_shift_weights(members: &[usize], pass: &[Q]) -> Vec<(Vec<usize>, Q)> {
    let s = members.len();
    let total: Q = members
        .iter()
        .fold(Q::zero(), |acc, &m| acc + (Q::one() - &pass[m]));
    (0..s)
        .map(|i| {
            let shift: Vec<usize> = (0..s).map(|t| members[(i + t) % s]).collect();
            let pred = members[(i + s - 1) % s];
            (shift, (Q::one() - &pass[pred]) / &total)
        })
        .collect()
}

/// Default cap on the number of permutations an expansion may produce.
pub const DEFAULT_EXPANSION_CAP: u128 = 100_000;

/// Expands a megaprocessor routing into explicit permutations.
///
/// Each phase becomes the product of the cyclic-shift choices inside its
/// megaprocessors, weighted by the product of the shift fractions.
pub fn expand_to_permutations(
    pass: &[Q],
    mega: &MegaRouting,
    cap: u128,
) -> Result<PermutationRouting> {
    let required: u128 = mega
        .phases
        .iter()
        .map(|ph| {
            ph.classes
                .iter()
                .fold(1u128, |acc, c| acc.saturating_mul(c.len().max(1) as u128))
        })
        .fold(0u128, u128::saturating_add);
    if required > cap {
        return Err(KofnError::CapExceeded { required, cap });
    }
    let mut entries = Vec::new();
    for ph in &mega.phases {
        let mut partial: Vec<(Vec<usize>, Q)> = vec![(Vec::new(), ph.flow.clone())];
        for class in &ph.classes {
            for &m in class {
                if m >= pass.len() {
                    return Err(KofnError::UnknownProcessor(m + 1));
                }
            }
            let shifts = cyclic_shift_weights(class, pass);
            partial = partial
                .into_iter()
                .flat_map(|(prefix, w)| {
                    shifts.iter().map(move |(shift, frac)| {
                        let mut perm = prefix.clone();
                        perm.extend_from_slice(shift);
                        (perm, &w * frac)
                    })
                })
                .collect();
        }
        entries.extend(partial);
    }
    Ok(PermutationRouting { entries })
}
