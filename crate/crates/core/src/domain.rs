//! Reversible sparse sets of rule indices.

use crate::grammar::RuleId;

const ABSENT: u16 = u16::MAX;

/// A set of rule indices supporting O(1) membership and removal, and exact
/// restoration of earlier contents by resetting the live count.
///
/// Members live in `dense[..len]`; removed members are swapped behind `len`
/// so that raising `len` back to an older value brings them back. Callers
/// record `(old len)` on their own trail before shrinking.
#[derive(Debug, Clone)]
pub struct SparseDomain {
    dense: Vec<RuleId>,
    pos: Vec<u16>,
    len: usize,
}

impl SparseDomain {
    /// `universe` is the number of rules in the grammar; `members` are the
    /// initial elements.
    pub fn new(universe: usize, members: &[RuleId]) -> Self {
        let mut pos = vec![ABSENT; universe];
        let mut dense = Vec::with_capacity(members.len());
        for &r in members {
            if pos[r.slot()] == ABSENT {
                pos[r.slot()] = dense.len() as u16;
                dense.push(r);
            }
        }
        let len = dense.len();
        SparseDomain { dense, pos, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, r: RuleId) -> bool {
        match self.pos.get(r.slot()) {
            Some(&p) if p != ABSENT => (p as usize) < self.len,
            _ => false,
        }
    }

    /// Removes `r`; returns whether it was present.
    pub fn remove(&mut self, r: RuleId) -> bool {
        if !self.contains(r) {
            return false;
        }
        let p = self.pos[r.slot()] as usize;
        let last = self.len - 1;
        let other = self.dense[last];
        self.dense.swap(p, last);
        self.pos[other.slot()] = p as u16;
        self.pos[r.slot()] = last as u16;
        self.len = last;
        true
    }

    /// Keeps only members satisfying `keep`; returns the number removed.
    pub fn retain(&mut self, mut keep: impl FnMut(RuleId) -> bool) -> usize {
        let before = self.len;
        let mut i = 0;
        while i < self.len {
            let r = self.dense[i];
            if keep(r) {
                i += 1;
            } else {
                self.remove(r);
            }
        }
        before - self.len
    }

    /// Resets the live count to a value recorded earlier. Only valid for
    /// counts taken from this domain's own history (LIFO).
    pub fn restore_len(&mut self, len: usize) {
        debug_assert!(len <= self.dense.len());
        self.len = len;
    }

    /// Live members in storage order (a permutation of the set).
    pub fn iter(&self) -> impl Iterator<Item = RuleId> + '_ {
        self.dense[..self.len].iter().copied()
    }

    pub fn as_slice(&self) -> &[RuleId] {
        &self.dense[..self.len]
    }

    /// Live members in ascending index order.
    pub fn sorted(&self) -> Vec<RuleId> {
        let mut v = self.as_slice().to_vec();
        v.sort_unstable();
        v
    }

    pub fn min(&self) -> Option<RuleId> {
        self.iter().min()
    }

    pub fn max(&self) -> Option<RuleId> {
        self.iter().max()
    }

    /// The single member, if the domain is a singleton.
    pub fn single(&self) -> Option<RuleId> {
        (self.len == 1).then(|| self.dense[0])
    }

    pub fn is_subset_of(&self, other: &[RuleId]) -> bool {
        self.iter().all(|r| other.contains(&r))
    }

    pub fn intersects(&self, other: &[RuleId]) -> bool {
        other.iter().any(|r| self.contains(*r))
    }
}
