/// Set of increasing integer ids with order statistics (Fenwick tree over an
/// alive bitmap). Ids are appended in increasing order and removed in any order.
#[derive(Debug, Clone, Default)]
pub(crate) struct OrderedIds {
    alive: Vec<bool>,
    tree: Vec<u32>,
    len: usize,
}

impl OrderedIds {
    pub(crate) fn push(&mut self, id: u32) {
        debug_assert_eq!(id as usize, self.alive.len());
        if self.alive.len() == self.tree.len() {
            self.grow();
        }
        self.alive.push(true);
        self.add(id as usize, 1);
        self.len += 1;
    }

    fn grow(&mut self) {
        let cap = (self.tree.len() * 2).max(64);
        self.tree = vec![0; cap];
        for (i, &a) in self.alive.iter().enumerate() {
            if a {
                self.tree[i] += 1;
            }
        }
        for i in 1..=cap {
            let parent = i + (i & i.wrapping_neg());
            if parent <= cap {
                self.tree[parent - 1] += self.tree[i - 1];
            }
        }
    }

    fn add(&mut self, pos: usize, delta: i32) {
        let mut i = pos + 1;
        while i <= self.tree.len() {
            self.tree[i - 1] = (self.tree[i - 1] as i32 + delta) as u32;
            i += i & i.wrapping_neg();
        }
    }

    pub(crate) fn contains(&self, id: u32) -> bool {
        self.alive.get(id as usize).copied().unwrap_or(false)
    }

    pub(crate) fn remove(&mut self, id: u32) -> bool {
        if !self.contains(id) {
            return false;
        }
        self.alive[id as usize] = false;
        self.add(id as usize, -1);
        self.len -= 1;
        true
    }

    pub(crate) fn len(&self) -> usize {
        self.len
    }

    /// Number of alive ids strictly below `id`.
    pub(crate) fn rank(&self, id: u32) -> usize {
        let mut i = id as usize;
        let mut sum = 0usize;
        while i > 0 {
            sum += self.tree[i - 1] as usize;
            i &= i - 1;
        }
        sum
    }

    /// The alive id with exactly `k` alive ids below it.
    pub(crate) fn nth(&self, k: usize) -> Option<u32> {
        if k >= self.len {
            return None;
        }
        let mut pos = 0usize;
        let mut remaining = k as u32;
        let mut step = self.tree.len().next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= self.tree.len() && self.tree[next - 1] <= remaining {
                remaining -= self.tree[next - 1];
                pos = next;
            }
            step >>= 1;
        }
        Some(pos as u32)
    }

    pub(crate) fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.alive
            .iter()
            .enumerate()
            .filter(|(_, a)| **a)
            .map(|(i, _)| i as u32)
    }
}
