//! The equalizing solver for conservative k-of-n MaxThroughput.
//!
//! Processors are visited in decreasing order of rate limit. Flow is pushed
//! along that order until either the last megaprocessor saturates or two
//! adjacent megaprocessors reach the same residual capacity; equal ones are
//! merged and the push continues. Each megaprocessor spreads its input over
//! the cyclic shifts of its members so that their residuals stay equal.
//!
//! Internally processors are addressed by their *position* in the visiting
//! order, so every megaprocessor is a contiguous span of positions.

use num_traits::One;

use crate::error::Result;
use crate::heap::{HeapStats, IndexedHeap};
use crate::instance::Instance;
use crate::num::{Scalar, Q};
use crate::prob::{CountDistribution, ReachTable};
use crate::routing::{
    expand_to_permutations, CompressedRouting, MegaRouting, MergeEvent, PermutationRouting, Routing,
};

/// Per-unit-input reduction of each member's residual capacity.
///
/// `arriving[j]` is the type-`j` flow reaching the megaprocessor per unit
/// of input; type-`j` flow is routed as `(k - j)`-of-`s` testing inside it.
pub fn xi<S: Scalar>(arriving: &[S], pmf: &CountDistribution<S>, sum_fail: &S) -> S {
    let d = pmf.tail_sums();
    arriving
        .iter()
        .zip(&d)
        .fold(S::zero(), |acc, (f, dj)| acc + f.clone() * dj.clone())
        / sum_fail.clone()
}

/// An equivalence class of processors sharing one residual capacity.
#[derive(Debug, Clone)]
pub struct Megaprocessor<S = Q> {
    /// First and last position (inclusive) in the visiting order.
    pub start: usize,
    pub end: usize,
    /// Residual capacity measured when the cumulative flow was `anchor`.
    residual: S,
    anchor: S,
    pub sum_fail: S,
    pub pmf: CountDistribution<S>,
    pub xi: S,
}

impl<S: Scalar> Megaprocessor<S> {
    fn new(
        start: usize,
        end: usize,
        residual: S,
        fail: &[S],
        reach: &ReachTable<S>,
        k: usize,
    ) -> Self {
        let pmf = CountDistribution::from_failure_probs(&fail[start..=end], k);
        let sum_fail = fail[start..=end]
            .iter()
            .fold(S::zero(), |acc, f| acc + f.clone());
        let xi = xi(reach.at(start), &pmf, &sum_fail);
        Self {
            start,
            end,
            residual,
            anchor: S::zero(),
            sum_fail,
            pmf,
            xi,
        }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Residual capacity once `flow` units have been sent in total.
    pub fn residual_at(&self, flow: &S) -> S {
        self.residual.clone() - self.xi.clone() * (flow.clone() - self.anchor.clone())
    }

    /// Merges with the megaprocessor immediately to the right, at cumulative
    /// flow `flow`. The convolution loop runs over the smaller part.
    ///
    /// Panics unless the two are adjacent with equal residual capacity.
    pub fn merge(&self, right: &Self, reach: &ReachTable<S>, flow: &S, terms: &mut u64) -> Self {
        assert_eq!(
            self.end + 1,
            right.start,
            "merging non-adjacent megaprocessors"
        );
        let residual = self.residual_at(flow);
        assert!(
            residual.same(&right.residual_at(flow)),
            "merging megaprocessors with different residual capacity"
        );
        let pmf = self.pmf.convolve_counted(&right.pmf, terms);
        let sum_fail = self.sum_fail.clone() + right.sum_fail.clone();
        let xi = xi(reach.at(self.start), &pmf, &sum_fail);
        Self {
            start: self.start,
            end: right.end,
            residual,
            anchor: flow.clone(),
            sum_fail,
            pmf,
            xi,
        }
    }
}

/// What ended a phase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StopTrigger {
    /// The last megaprocessor saturated.
    Saturation,
    /// Indices `i` (into the class list) whose pair `(i - 1, i)` equalized.
    Equalization(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stop<S> {
    pub flow: S,
    pub trigger: StopTrigger,
}

/// Flow that triggers the next stopping condition, by a full scan.
///
/// `residual` and `xi` list the megaprocessors in visiting order, so the
/// residuals are strictly decreasing. Pairs whose `xi` does not drop never
/// equalize. On a tie with saturation, saturation wins.
pub fn stopping_flow<S: Scalar>(residual: &[S], xi: &[S]) -> Stop<S> {
    assert_eq!(residual.len(), xi.len());
    let last = residual.len() - 1;
    assert!(
        xi[last] > S::zero(),
        "last megaprocessor must lose capacity"
    );
    let saturate = residual[last].clone() / xi[last].clone();
    let mut best: Option<S> = None;
    let mut pairs = Vec::new();
    for i in 1..residual.len() {
        if xi[i - 1] <= xi[i] || xi[i - 1].same(&xi[i]) {
            continue;
        }
        let t =
            (residual[i - 1].clone() - residual[i].clone()) / (xi[i - 1].clone() - xi[i].clone());
        match &best {
            Some(b) if t.same(b) => pairs.push(i),
            Some(b) if t > *b => {}
            _ => {
                best = Some(t);
                pairs = vec![i];
            }
        }
    }
    match best {
        Some(t) if t < saturate && !t.same(&saturate) => Stop {
            flow: t,
            trigger: StopTrigger::Equalization(pairs),
        },
        _ => Stop {
            flow: saturate,
            trigger: StopTrigger::Saturation,
        },
    }
}

/// Equalization events keyed lazily.
///
/// A boundary's stored key is the cumulative flow at which its two sides
/// equalize. Its remaining flow is that key minus the offset, so advancing
/// the offset by `t` lowers every untouched entry by `t` without visiting it.
#[derive(Debug, Clone)]
pub struct EventQueue<S> {
    heap: IndexedHeap<S>,
    offset: S,
}

impl<S: Scalar> EventQueue<S> {
    pub fn new(boundaries: usize) -> Self {
        Self {
            heap: IndexedHeap::with_capacity(boundaries),
            offset: S::zero(),
        }
    }

    /// Total flow sent so far.
    pub fn offset(&self) -> &S {
        &self.offset
    }

    pub fn advance(&mut self, flow: &S) {
        self.offset = self.offset.clone() + flow.clone();
    }

    /// Schedules `boundary` to fire after `remaining` more units of flow.
    pub fn schedule(&mut self, boundary: usize, remaining: S) {
        self.heap.set(boundary, self.offset.clone() + remaining);
    }

    pub fn cancel(&mut self, boundary: usize) {
        self.heap.remove(boundary);
    }

    /// Remaining flow until `boundary` fires.
    pub fn remaining(&self, boundary: usize) -> Option<S> {
        self.heap
            .key(boundary)
            .map(|k| k.clone() - self.offset.clone())
    }

    pub fn peek(&self) -> Option<(usize, S)> {
        self.heap
            .peek()
            .map(|(b, k)| (b, k.clone() - self.offset.clone()))
    }

    pub fn pop(&mut self) -> Option<(usize, S)> {
        self.heap.pop().map(|(b, k)| (b, k - self.offset.clone()))
    }

    pub fn stats(&self) -> HeapStats {
        self.heap.stats()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub phases: u64,
    pub merges: u64,
    /// Multiply terms evaluated by all megaprocessor convolutions.
    pub convolution_terms: u64,
    pub queue: HeapStats,
}

#[derive(Debug, Clone)]
pub struct ConservativeSolution<S = Q> {
    pub compressed: CompressedRouting<S>,
    pub throughput: S,
    /// Members of the final, saturated megaprocessor (processor ids, ascending).
    pub saturated: Vec<usize>,
    pub stats: SolveStats,
}

impl<S: Scalar> ConservativeSolution<S> {
    pub fn mega(&self) -> MegaRouting<S> {
        self.compressed
            .replay()
            .expect("solver emits well-formed merges")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Mega,
    Compressed,
    Permutation,
}

impl ConservativeSolution<Q> {
    /// The routing in the requested representation. Permutation expansion
    /// refuses when it would exceed `cap` permutations.
    pub fn routing(&self, instance: &Instance, rep: Representation, cap: u128) -> Result<Routing> {
        Ok(match rep {
            Representation::Mega => Routing::Mega(self.mega()),
            Representation::Compressed => Routing::Compressed(self.compressed.clone()),
            Representation::Permutation => {
                Routing::Permutation(expand_to_permutations(instance.p(), &self.mega(), cap)?)
            }
        })
    }
}

/// Visiting order: rate limits descending, ties by processor id.
pub fn visiting_order(instance: &Instance) -> Vec<usize> {
    let mut order: Vec<usize> = (0..instance.n()).collect();
    order.sort_by(|&a, &b| instance.r()[b].cmp(&instance.r()[a]).then(a.cmp(&b)));
    order
}

/// Exact conservative MaxThroughput.
pub fn solve_conservative(instance: &Instance) -> ConservativeSolution<Q> {
    solve_conservative_in::<Q>(instance)
}

/// The solver over any [`Scalar`]. Only the exact instantiation produces
/// certified routings; `f64` is for operation counting at scale.
pub fn solve_conservative_in<S: Scalar>(instance: &Instance) -> ConservativeSolution<S> {
    let (n, k) = (instance.n(), instance.k());
    let order = visiting_order(instance);
    let pass: Vec<S> = order.iter().map(|&i| S::from_q(&instance.p()[i])).collect();
    let fail: Vec<S> = pass.iter().map(|p| S::one() - p.clone()).collect();
    let reach = ReachTable::new(&pass, k);

    // Classes indexed by start position; start_of[end] finds a class by its last position.
    let mut classes: Vec<Option<Megaprocessor<S>>> = vec![None; n];
    let mut start_of = vec![0usize; n];
    let mut groups = Vec::new();
    let mut start = 0;
    while start < n {
        let rate = &instance.r()[order[start]];
        let mut end = start;
        while end + 1 < n && &instance.r()[order[end + 1]] == rate {
            end += 1;
        }
        classes[start] = Some(Megaprocessor::new(
            start,
            end,
            S::from_q(rate),
            &fail,
            &reach,
            k,
        ));
        start_of[end] = start;
        groups.push(end - start + 1);
        start = end + 1;
    }

    let mut stats = SolveStats::default();
    let mut queue = EventQueue::new(n);
    let reschedule = |queue: &mut EventQueue<S>,
                      classes: &[Option<Megaprocessor<S>>],
                      start_of: &[usize],
                      b: usize| {
        let left = classes[start_of[b - 1]].as_ref().expect("left class");
        let right = classes[b].as_ref().expect("right class");
        if left.xi > right.xi && !left.xi.same(&right.xi) {
            let now = queue.offset().clone();
            let gap = left.residual_at(&now) - right.residual_at(&now);
            queue.schedule(b, gap / (left.xi.clone() - right.xi.clone()));
        } else {
            queue.cancel(b);
        }
    };
    let mut b = 0;
    while b < n {
        if b > 0 {
            reschedule(&mut queue, &classes, &start_of, b);
        }
        b = classes[b].as_ref().expect("class").end + 1;
    }

    let mut merges = Vec::new();
    let final_flow = loop {
        stats.phases += 1;
        let now = queue.offset().clone();
        let last = classes[start_of[n - 1]].as_ref().expect("last class");
        let saturate = last.residual_at(&now) / last.xi.clone();
        let next = queue.peek();
        let flow = match next {
            Some((_, ref t)) if *t < saturate && !t.same(&saturate) => t.clone(),
            _ => {
                queue.advance(&saturate);
                break saturate;
            }
        };
        let mut due = Vec::new();
        while let Some((b, t)) = queue.peek() {
            if !t.same(&flow) {
                break;
            }
            queue.pop();
            due.push(b);
        }
        due.sort_unstable();
        queue.advance(&flow);
        let now = queue.offset().clone();
        let mut touched = Vec::with_capacity(due.len());
        for (i, &b) in due.iter().enumerate() {
            let left_start = start_of[b - 1];
            let left = classes[left_start].take().expect("left class");
            let right = classes[b].take().expect("right class");
            let merged = left.merge(&right, &reach, &now, &mut stats.convolution_terms);
            start_of[merged.end] = left_start;
            classes[left_start] = Some(merged);
            touched.push(left_start);
            stats.merges += 1;
            merges.push(MergeEvent {
                boundary: b,
                flow_before: if i == 0 { flow.clone() } else { S::zero() },
            });
        }
        touched.dedup();
        for s in touched {
            let Some(class) = classes[s].as_ref() else {
                continue;
            };
            let end = class.end;
            if s > 0 {
                reschedule(&mut queue, &classes, &start_of, s);
            }
            if end + 1 < n {
                reschedule(&mut queue, &classes, &start_of, end + 1);
            }
        }
    };
    stats.queue = queue.stats();

    let last = classes[start_of[n - 1]].as_ref().expect("last class");
    let mut saturated: Vec<usize> = order[last.start..=last.end].to_vec();
    saturated.sort_unstable();
    ConservativeSolution {
        compressed: CompressedRouting {
            order,
            groups,
            merges,
            final_flow,
        },
        throughput: queue.offset().clone(),
        saturated,
        stats,
    }
}

/// Closed-form saturating routing when every processor has rate `rate`.
///
/// The cyclic shift starting at processor `i` gets `rate (1 - p_{i-1}) / alpha`
/// units, with `p_{-1}` read cyclically as the last processor's probability.
pub fn equal_rates_routing(pass: &[Q], k: usize, rate: &Q) -> PermutationRouting {
    let n = pass.len();
    let alpha = crate::prob::alpha(pass, k);
    let entries = (0..n)
        .map(|i| {
            let perm: Vec<usize> = (0..n).map(|t| (i + t) % n).collect();
            let pred = (i + n - 1) % n;
            (perm, rate * (Q::one() - &pass[pred]) / &alpha)
        })
        .collect();
    PermutationRouting { entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{q, qi};
    use crate::routing::{evaluate_permutation_loads, MegaPhase};

    fn k2_n4() -> Instance {
        Instance::new(
            2,
            vec![q(1, 2), q(1, 2), q(1, 2), q(3, 4)],
            vec![qi(12), qi(12), qi(10), qi(10)],
        )
        .unwrap()
    }

    fn k1_n3() -> Instance {
        Instance::new(
            1,
            vec![q(1, 8), q(1, 2), q(1, 3)],
            vec![qi(3), qi(14), qi(18)],
        )
        .unwrap()
    }

    #[test]
    fn k2_example_phases() {
        let sol = solve_conservative(&k2_n4());
        assert_eq!(sol.throughput, qi(13));
        let mega = sol.mega();
        assert_eq!(
            mega.phases,
            vec![
                MegaPhase {
                    classes: vec![vec![0, 1], vec![2, 3]],
                    flow: qi(6)
                },
                MegaPhase {
                    classes: vec![vec![0, 1, 2, 3]],
                    flow: qi(7)
                },
            ]
        );
        assert_eq!(sol.saturated, vec![0, 1, 2, 3]);
    }

    #[test]
    fn k1_example_phases() {
        let sol = solve_conservative(&k1_n3());
        assert_eq!(sol.throughput, qi(18));
        let mega = sol.mega();
        assert_eq!(
            mega.phases,
            vec![
                MegaPhase {
                    classes: vec![vec![2], vec![1], vec![0]],
                    flow: qi(6)
                },
                MegaPhase {
                    classes: vec![vec![2, 1], vec![0]],
                    flow: qi(12)
                },
            ]
        );
        assert_eq!(sol.saturated, vec![0]);
    }

    #[test]
    fn two_processor_example() {
        let inst = Instance::new(1, vec![q(1, 2), q(1, 4)], vec![qi(1), qi(2)]).unwrap();
        assert_eq!(solve_conservative(&inst).throughput, q(16, 7));
    }

    #[test]
    fn xi_examples() {
        let pass = [q(1, 2), q(1, 2), q(1, 2), q(3, 4)];
        let fail: Vec<Q> = pass.iter().map(|p| Q::one() - p).collect();
        let reach = ReachTable::new(&pass, 2);
        let first = Megaprocessor::new(0, 1, qi(12), &fail, &reach, 2);
        assert_eq!(first.xi, qi(1));
        let second = Megaprocessor::new(2, 3, qi(10), &fail, &reach, 2);
        assert_eq!(second.xi, q(2, 3));
        let single = Megaprocessor::new(0, 0, qi(3), &fail, &ReachTable::new(&pass, 1), 1);
        assert_eq!(single.xi, qi(1));
    }

    #[test]
    fn stopping_flow_examples() {
        // k = 1 example, visiting O3, O2, O1.
        let pass = [q(1, 3), q(1, 2), q(1, 8)];
        let reach = ReachTable::new(&pass, 1);
        let xis: Vec<Q> = (0..3).map(|z| reach.alive(z)).collect();
        let stop = stopping_flow(&[qi(18), qi(14), qi(3)], &xis);
        assert_eq!(
            stop,
            Stop {
                flow: qi(6),
                trigger: StopTrigger::Equalization(vec![1])
            }
        );

        let stop = stopping_flow(&[qi(12), qi(10)], &[qi(1), q(2, 3)]);
        assert_eq!(
            stop,
            Stop {
                flow: qi(6),
                trigger: StopTrigger::Equalization(vec![1])
            }
        );

        let stop = stopping_flow(&[qi(7)], &[qi(1)]);
        assert_eq!(
            stop,
            Stop {
                flow: qi(7),
                trigger: StopTrigger::Saturation
            }
        );
    }

    #[test]
    fn saturation_wins_ties() {
        // Pair equalizes after 2 units; the last class also saturates after 2.
        let stop = stopping_flow(&[qi(4), qi(2)], &[qi(2), qi(1)]);
        assert_eq!(stop.trigger, StopTrigger::Saturation);
        assert_eq!(stop.flow, qi(2));
    }

    #[test]
    fn non_decreasing_xi_never_equalizes() {
        let stop = stopping_flow(&[qi(5), qi(3), qi(2)], &[q(1, 2), q(1, 2), q(1, 4)]);
        assert_eq!(
            stop,
            Stop {
                flow: qi(4),
                trigger: StopTrigger::Equalization(vec![2])
            }
        );
        let stop = stopping_flow(&[qi(5), qi(3)], &[q(1, 2), q(1, 2)]);
        assert_eq!(stop.trigger, StopTrigger::Saturation);
    }

    #[test]
    fn merge_combines_distributions() {
        let pass = [q(1, 2), q(1, 2), q(1, 2), q(3, 4)];
        let fail: Vec<Q> = pass.iter().map(|p| Q::one() - p).collect();
        let reach = ReachTable::new(&pass, 2);
        let a = Megaprocessor::new(0, 1, qi(12), &fail, &reach, 2);
        let b = Megaprocessor::new(2, 3, qi(10), &fail, &reach, 2);
        let mut terms = 0;
        let m = a.merge(&b, &reach, &qi(6), &mut terms);
        assert_eq!(m.pmf.mass(), &[q(3, 32), q(5, 16), q(19, 32)]);
        assert_eq!(m.sum_fail, q(7, 4));
        assert_eq!(m.residual_at(&qi(6)), qi(6));
        assert_eq!((m.start, m.end), (0, 3));

        // k = 1 singletons: tail is q_a + q_b - q_a q_b.
        let reach1 = ReachTable::new(&[q(1, 3), q(1, 2)], 1);
        let fail1 = [q(2, 3), q(1, 2)];
        let a = Megaprocessor::new(0, 0, qi(12), &fail1, &reach1, 1);
        let b = Megaprocessor::new(1, 1, qi(12), &fail1, &reach1, 1);
        let m = a.merge(&b, &reach1, &qi(0), &mut terms);
        assert_eq!(m.pmf.mass()[1], q(2, 3) + q(1, 2) - q(1, 3));
        assert_eq!(m.pmf.mass()[0], q(1, 6));
    }

    #[test]
    #[should_panic(expected = "different residual")]
    fn merge_requires_equal_residuals() {
        let pass = [q(1, 2), q(1, 2)];
        let fail = [q(1, 2), q(1, 2)];
        let reach = ReachTable::new(&pass, 1);
        let a = Megaprocessor::new(0, 0, qi(3), &fail, &reach, 1);
        let b = Megaprocessor::new(1, 1, qi(2), &fail, &reach, 1);
        let _ = a.merge(&b, &reach, &qi(0), &mut 0);
    }

    #[test]
    #[should_panic(expected = "non-adjacent")]
    fn merge_requires_adjacency() {
        let pass = [q(1, 2), q(1, 2), q(1, 2)];
        let fail = [q(1, 2), q(1, 2), q(1, 2)];
        let reach = ReachTable::new(&pass, 1);
        let a = Megaprocessor::new(0, 0, qi(2), &fail, &reach, 1);
        let b = Megaprocessor::new(2, 2, qi(2), &fail, &reach, 1);
        let _ = a.merge(&b, &reach, &qi(0), &mut 0);
    }

    #[test]
    fn lazy_queue_offsets() {
        let mut queue = EventQueue::<Q>::new(4);
        queue.schedule(1, qi(5));
        queue.schedule(3, qi(9));
        queue.advance(&qi(2));
        assert_eq!(queue.remaining(1), Some(qi(3)));
        assert_eq!(queue.remaining(3), Some(qi(7)));
        queue.schedule(3, qi(1));
        assert_eq!(queue.peek(), Some((3, qi(1))));
        assert_eq!(queue.pop(), Some((3, qi(1))));
        queue.cancel(1);
        assert_eq!(queue.peek(), None);
    }

    #[test]
    fn equal_rates_closed_form() {
        let routing = equal_rates_routing(&[q(1, 2), q(1, 3)], 1, &qi(1));
        assert_eq!(
            routing.entries,
            vec![(vec![0, 1], q(4, 5)), (vec![1, 0], q(3, 5))]
        );
        let inst = Instance::new(1, vec![q(1, 2), q(1, 3)], vec![qi(1), qi(1)]).unwrap();
        let report = evaluate_permutation_loads(&inst, &routing).unwrap();
        assert_eq!(report.load, vec![qi(1), qi(1)]);

        let routing = equal_rates_routing(&[q(2, 7)], 1, &qi(3));
        assert_eq!(routing.entries, vec![(vec![0], qi(3))]);
    }

    #[test]
    fn float_solver_tracks_exact_one() {
        let exact = solve_conservative(&k2_n4());
        let float = solve_conservative_in::<f64>(&k2_n4());
        assert!((float.throughput - 13.0).abs() < 1e-9);
        assert_eq!(float.stats.merges, exact.stats.merges);
        assert_eq!(float.stats.convolution_terms, exact.stats.convolution_terms);
    }
}
