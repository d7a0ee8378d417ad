use num_traits::Zero;

use super::{LoadReport, Routing};
use crate::error::Result;
use crate::instance::Instance;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateKind {
    /// Every processor is saturated.
    AllSaturated,
    /// The saturated set closes every permutation the routing uses.
    SaturatedSuffix,
}

impl CertificateKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CertificateKind::AllSaturated => "all-saturated",
            CertificateKind::SaturatedSuffix => "saturated-suffix",
        }
    }
}

/// Proof of optimality for a feasible conservative routing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub kind: CertificateKind,
    /// Saturated processors, ascending.
    pub set: Vec<usize>,
}

/// Returns a certificate when the saturated set of `report` is nonempty and
/// forms a suffix of every permutation the routing can send flow along.
///
/// Inside a megaprocessor the member order varies across cyclic shifts, so
/// for megaprocessor routings the set must be a union of trailing classes.
/// Tree routings never get one: saturation does not imply optimality once
/// strategies may stop early on passes.
pub fn check_saturated_suffix(
    instance: &Instance,
    routing: &Routing,
    report: &LoadReport,
) -> Result<Option<Certificate>> {
    let n = instance.n();
    if matches!(routing, Routing::Tree(_)) || !report.is_feasible() || report.saturated.is_empty() {
        return Ok(None);
    }
    if report.saturated.len() == n {
        return Ok(Some(Certificate {
            kind: CertificateKind::AllSaturated,
            set: report.saturated.clone(),
        }));
    }
    let mut in_set = vec![false; n];
    for &i in &report.saturated {
        in_set[i] = true;
    }
    let size = report.saturated.len();
    let suffix_ok = |tail: &[usize]| tail.len() == size && tail.iter().all(|&i| i < n && in_set[i]);
    let holds = match routing {
        Routing::Permutation(p) => p
            .entries
            .iter()
            .filter(|(_, f)| !f.is_zero())
            .all(|(perm, _)| perm.len() >= size && suffix_ok(&perm[perm.len() - size..])),
        Routing::Tree(_) => false,
        Routing::Mega(_) | Routing::Compressed(_) => {
            let mega = match routing {
                Routing::Mega(m) => m.clone(),
                Routing::Compressed(c) => c.replay()?,
                Routing::Permutation(_) | Routing::Tree(_) => unreachable!(),
            };
            mega.phases
                .iter()
                .filter(|ph| !ph.flow.is_zero())
                .all(|ph| {
                    let mut tail: Vec<usize> = Vec::new();
                    for class in ph.classes.iter().rev() {
                        if tail.len() >= size {
                            break;
                        }
                        tail.extend_from_slice(class);
                    }
                    suffix_ok(&tail)
                })
        }
    };
    Ok(holds.then(|| Certificate {
        kind: CertificateKind::SaturatedSuffix,
        set: report.saturated.clone(),
    }))
}
