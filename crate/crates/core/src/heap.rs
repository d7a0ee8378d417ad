//! Addressable binary min-heap over a fixed id space.
//!
//! Ids are small integers (`0..capacity`); each id holds at most one key.
//! Ties between equal keys pop the smaller id first.

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HeapStats {
    pub pushes: u64,
    pub updates: u64,
    pub removals: u64,
    pub pops: u64,
}

#[derive(Debug, Clone)]
pub struct IndexedHeap<K> {
    heap: Vec<usize>,
    slot: Vec<Option<usize>>,
    keys: Vec<Option<K>>,
    stats: HeapStats,
}

impl<K: PartialOrd + Clone> IndexedHeap<K> {
    pub fn with_capacity(capacity: usize) -> Self {
        Self {
            heap: Vec::with_capacity(capacity),
            slot: vec![None; capacity],
            keys: vec![None; capacity],
            stats: HeapStats::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn stats(&self) -> HeapStats {
        self.stats
    }

    pub fn contains(&self, id: usize) -> bool {
        self.slot[id].is_some()
    }

    pub fn key(&self, id: usize) -> Option<&K> {
        self.keys[id].as_ref()
    }

    /// Inserts `id` or changes its key.
    pub fn set(&mut self, id: usize, key: K) {
        self.keys[id] = Some(key);
        match self.slot[id] {
            Some(at) => {
                self.stats.updates += 1;
                self.sift_up(at);
                let at = self.slot[id].expect("present");
                self.sift_down(at);
            }
            None => {
                self.stats.pushes += 1;
                self.heap.push(id);
                let at = self.heap.len() - 1;
                self.slot[id] = Some(at);
                self.sift_up(at);
            }
        }
    }

    pub fn remove(&mut self, id: usize) -> Option<K> {
        let at = self.slot[id]?;
        self.stats.removals += 1;
        Some(self.take(at))
    }

    pub fn peek(&self) -> Option<(usize, &K)> {
        self.heap
            .first()
            .map(|&id| (id, self.keys[id].as_ref().expect("key")))
    }

    pub fn pop(&mut self) -> Option<(usize, K)> {
        let &id = self.heap.first()?;
        self.stats.pops += 1;
        Some((id, self.take(0)))
    }

    fn take(&mut self, at: usize) -> K {
        let id = self.heap[at];
        let last = self.heap.len() - 1;
        self.swap(at, last);
        self.heap.pop();
        self.slot[id] = None;
        if at < self.heap.len() {
            let moved = self.heap[at];
            self.sift_up(at);
            let at = self.slot[moved].expect("present");
            self.sift_down(at);
        }
        self.keys[id].take().expect("key")
    }

    fn less(&self, a: usize, b: usize) -> bool {
        let (ia, ib) = (self.heap[a], self.heap[b]);
        let (ka, kb) = (
            self.keys[ia].as_ref().unwrap(),
            self.keys[ib].as_ref().unwrap(),
        );
        ka < kb || (ka == kb && ia < ib)
    }

    fn swap(&mut self, a: usize, b: usize) {
        self.heap.swap(a, b);
        self.slot[self.heap[a]] = Some(a);
        self.slot[self.heap[b]] = Some(b);
    }

    fn sift_up(&mut self, mut at: usize) {
        while at > 0 {
            let parent = (at - 1) / 2;
            if !self.less(at, parent) {
                break;
            }
            self.swap(at, parent);
            at = parent;
        }
    }

    fn sift_down(&mut self, mut at: usize) {
        loop {
            let (l, r) = (2 * at + 1, 2 * at + 2);
            let mut best = at;
            if l < self.heap.len() && self.less(l, best) {
                best = l;
            }
            if r < self.heap.len() && self.less(r, best) {
                best = r;
            }
            if best == at {
                break;
            }
            self.swap(at, best);
            at = best;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ties_pop_smaller_id_first() {
        let mut h = IndexedHeap::with_capacity(4);
        h.set(3, 1);
        h.set(1, 1);
        h.set(2, 0);
        assert_eq!(h.pop(), Some((2, 0)));
        assert_eq!(h.pop(), Some((1, 1)));
        assert_eq!(h.pop(), Some((3, 1)));
        assert_eq!(h.pop(), None);
    }

    proptest! {
        #[test]
        fn matches_sorted_reference(ops in prop::collection::vec((0usize..16, 0i32..50, 0u8..3), 1..120)) {
            let mut h = IndexedHeap::with_capacity(16);
            let mut reference: Vec<Option<i32>> = vec![None; 16];
            for (id, key, op) in ops {
                match op {
                    0 | 1 => { h.set(id, key); reference[id] = Some(key); }
                    _ => { prop_assert_eq!(h.remove(id), reference[id].take()); }
                }
                let expected = reference
                    .iter()
                    .enumerate()
                    .filter_map(|(i, k)| k.map(|k| (k, i)))
                    .min();
                prop_assert_eq!(h.peek().map(|(i, k)| (*k, i)), expected);
            }
            let mut drained = vec![];
            while let Some((id, key)) = h.pop() {
                drained.push((key, id));
            }
            let mut expected: Vec<_> = reference
                .iter()
                .enumerate()
                .filter_map(|(i, k)| k.map(|k| (k, i)))
                .collect();
            expected.sort();
            prop_assert_eq!(drained, expected);
        }
    }
}
