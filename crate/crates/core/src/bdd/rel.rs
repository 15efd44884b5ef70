//! Image and pre-image over partial transition relations.
//!
//! A relation `t` is over current variables and the next-state copies of the
//! variables it assigns. Those assigned variables form a [`PairSetId`]; each
//! pair must be adjacent in the order (`next = cur + 1`), which lets the
//! renaming happen during the traversal. Variables outside the pair set are
//! neither quantified nor renamed, so they keep their value.

use super::{BddError, BddManager, BddVarId, NodeRef, Tag};

const T: NodeRef = NodeRef::TRUE;
const F: NodeRef = NodeRef::FALSE;

/// Interned set of assigned (current, next) variable pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PairSetId(u32);

#[derive(Clone, Copy, PartialEq, Eq)]
enum LevelKind {
    Quantified,
    Next,
    Plain,
}

impl BddManager {
    /// Intern current/next pairs for [`relnext`](Self::relnext) and
    /// [`relprev`](Self::relprev).
    pub fn pair_set(&mut self, pairs: &[(BddVarId, BddVarId)]) -> Result<PairSetId, BddError> {
        let mut used = std::collections::HashSet::new();
        for &(cur, next) in pairs {
            self.check_var(cur)?;
            self.check_var(next)?;
            if next.0 != cur.0 + 1 {
                return Err(BddError::NonAdjacentPair(cur.0, next.0));
            }
            if !used.insert(cur.0) || !used.insert(next.0) {
                return Err(BddError::NotOrderPreserving);
            }
        }
        let currents: Vec<BddVarId> = pairs.iter().map(|p| p.0).collect();
        Ok(PairSetId(self.intern_set(&currents)?))
    }

    /// Current variables of a pair set, ascending.
    pub fn pair_currents(&self, pairs: PairSetId) -> Vec<BddVarId> {
        self.var_sets[pairs.0 as usize]
            .member
            .iter()
            .enumerate()
            .filter(|(_, m)| **m)
            .map(|(i, _)| BddVarId(i as u32))
            .collect()
    }

    fn kind(&self, set: u32, level: u32) -> LevelKind {
        let member = &self.var_sets[set as usize].member;
        if (level as usize) < member.len() && member[level as usize] {
            LevelKind::Quantified
        } else if level > 0 && (level as usize) <= member.len() && member[level as usize - 1] {
            LevelKind::Next
        } else {
            LevelKind::Plain
        }
    }

    /// Level at which a function over current variables is visited when its
    /// assigned variables stand for their next-state copies.
    fn shifted_level(&self, set: u32, f: NodeRef) -> u32 {
        let level = self.level(f);
        if self.kind(set, level) == LevelKind::Quantified {
            level + 1
        } else {
            level
        }
    }

    /// Successors of `src` through `rel`.
    pub fn relnext(&mut self, src: NodeRef, rel: NodeRef, pairs: PairSetId) -> NodeRef {
        self.relnext_intersect(src, rel, T, pairs)
    }

    /// Successors of `src` through `rel` that satisfy `restriction`.
    pub fn relnext_intersect(
        &mut self,
        src: NodeRef,
        rel: NodeRef,
        restriction: NodeRef,
        pairs: PairSetId,
    ) -> NodeRef {
        self.begin();
        let r = self.relnext_rec(src, rel, restriction, pairs.0);
        self.end();
        r
    }

    /// Predecessors of `tgt` through `rel`.
    pub fn relprev(&mut self, tgt: NodeRef, rel: NodeRef, pairs: PairSetId) -> NodeRef {
        self.relprev_intersect(tgt, rel, T, pairs)
    }

    /// Predecessors of `tgt` through `rel` that satisfy `restriction`.
    pub fn relprev_intersect(
        &mut self,
        tgt: NodeRef,
        rel: NodeRef,
        restriction: NodeRef,
        pairs: PairSetId,
    ) -> NodeRef {
        self.begin();
        let r = self.relprev_rec(tgt, rel, restriction, pairs.0);
        self.end();
        r
    }

    fn relnext_rec(&mut self, p: NodeRef, t: NodeRef, r: NodeRef, set: u32) -> NodeRef {
        if p == F || t == F || r == F {
            return F;
        }
        if p == T && t == T {
            return r;
        }
        if let Some(res) = self.cache_get(Tag::RelNext, p, t, r, set) {
            return res;
        }
        self.count_op();
        let top = self
            .level(p)
            .min(self.level(t))
            .min(self.shifted_level(set, r));
        let res = match self.kind(set, top) {
            LevelKind::Quantified => {
                let (p0, p1) = self.cofactors(p, top);
                let (t0, t1) = self.cofactors(t, top);
                let low = self.relnext_rec(p0, t0, r, set);
                if low == r {
                    low
                } else {
                    let high = self.relnext_rec(p1, t1, r, set);
                    self.or_rec(low, high)
                }
            }
            LevelKind::Next => {
                let cur = top - 1;
                let (t0, t1) = self.cofactors(t, top);
                let (r0, r1) = self.cofactors(r, cur);
                let low = self.relnext_rec(p, t0, r0, set);
                let high = self.relnext_rec(p, t1, r1, set);
                self.mk(cur, low, high)
            }
            LevelKind::Plain => {
                let (p0, p1) = self.cofactors(p, top);
                let (t0, t1) = self.cofactors(t, top);
                let (r0, r1) = self.cofactors(r, top);
                let low = self.relnext_rec(p0, t0, r0, set);
                let high = self.relnext_rec(p1, t1, r1, set);
                self.mk(top, low, high)
            }
        };
        self.cache_put(Tag::RelNext, p, t, r, set, res);
        res
    }

    fn relprev_rec(&mut self, q: NodeRef, t: NodeRef, r: NodeRef, set: u32) -> NodeRef {
        if q == F || t == F || r == F {
            return F;
        }
        if q == T && t == T {
            return r;
        }
        if let Some(res) = self.cache_get(Tag::RelPrev, q, t, r, set) {
            return res;
        }
        self.count_op();
        let top = self
            .shifted_level(set, q)
            .min(self.level(t))
            .min(self.level(r));
        let res = match self.kind(set, top) {
            LevelKind::Quantified => {
                let (t0, t1) = self.cofactors(t, top);
                let (r0, r1) = self.cofactors(r, top);
                let low = self.relprev_rec(q, t0, r0, set);
                let high = self.relprev_rec(q, t1, r1, set);
                self.mk(top, low, high)
            }
            LevelKind::Next => {
                let (q0, q1) = self.cofactors(q, top - 1);
                let (t0, t1) = self.cofactors(t, top);
                let low = self.relprev_rec(q0, t0, r, set);
                if low == r {
                    low
                } else {
                    let high = self.relprev_rec(q1, t1, r, set);
                    self.or_rec(low, high)
                }
            }
            LevelKind::Plain => {
                let (q0, q1) = self.cofactors(q, top);
                let (t0, t1) = self.cofactors(t, top);
                let (r0, r1) = self.cofactors(r, top);
                let low = self.relprev_rec(q0, t0, r0, set);
                let high = self.relprev_rec(q1, t1, r1, set);
                self.mk(top, low, high)
            }
        };
        self.cache_put(Tag::RelPrev, q, t, r, set, res);
        res
    }
}
