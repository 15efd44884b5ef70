use super::{BddError, BddManager, BddVarId, NodeRef, Tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    And,
    Or,
    Xor,
    /// `f ∧ ¬g`
    Diff,
    /// `¬f ∨ g`
    Imp,
    Biimp,
}

impl BinaryOp {
    fn eval(self, a: bool, b: bool) -> bool {
        match self {
            BinaryOp::And => a && b,
            BinaryOp::Or => a || b,
            BinaryOp::Xor => a != b,
            BinaryOp::Diff => a && !b,
            BinaryOp::Imp => !a || b,
            BinaryOp::Biimp => a == b,
        }
    }

    fn commutative(self) -> bool {
        matches!(
            self,
            BinaryOp::And | BinaryOp::Or | BinaryOp::Xor | BinaryOp::Biimp
        )
    }
}

const T: NodeRef = NodeRef::TRUE;
const F: NodeRef = NodeRef::FALSE;

impl BddManager {
    pub fn apply(&mut self, op: BinaryOp, f: NodeRef, g: NodeRef) -> NodeRef {
        self.begin();
        let r = self.apply_rec(op, f, g);
        self.end();
        r
    }

    pub fn and(&mut self, f: NodeRef, g: NodeRef) -> NodeRef {
        self.apply(BinaryOp::And, f, g)
    }

    pub fn or(&mut self, f: NodeRef, g: NodeRef) -> NodeRef {
        self.apply(BinaryOp::Or, f, g)
    }

    pub fn xor(&mut self, f: NodeRef, g: NodeRef) -> NodeRef {
        self.apply(BinaryOp::Xor, f, g)
    }

    pub fn diff(&mut self, f: NodeRef, g: NodeRef) -> NodeRef {
        self.apply(BinaryOp::Diff, f, g)
    }

    pub fn imp(&mut self, f: NodeRef, g: NodeRef) -> NodeRef {
        self.apply(BinaryOp::Imp, f, g)
    }

    pub fn biimp(&mut self, f: NodeRef, g: NodeRef) -> NodeRef {
        self.apply(BinaryOp::Biimp, f, g)
    }

    /// Whether `f ⇒ g` is a tautology.
    pub fn implies(&mut self, f: NodeRef, g: NodeRef) -> bool {
        self.diff(f, g).is_false()
    }

    pub fn not(&mut self, f: NodeRef) -> NodeRef {
        self.begin();
        let r = self.not_rec(f);
        self.end();
        r
    }

    pub fn ite(&mut self, f: NodeRef, g: NodeRef, h: NodeRef) -> NodeRef {
        self.begin();
        let r = self.ite_rec(f, g, h);
        self.end();
        r
    }

    /// Existential abstraction of `vars` from `f`.
    pub fn exists(&mut self, f: NodeRef, vars: &[BddVarId]) -> Result<NodeRef, BddError> {
        let set = self.intern_set(vars)?;
        self.begin();
        let r = self.exists_rec(f, set);
        self.end();
        Ok(r)
    }

    /// Rename variables of `f`. The renamed support must keep its relative
    /// order, so no re-reduction is needed.
    pub fn replace(
        &mut self,
        f: NodeRef,
        pairs: &[(BddVarId, BddVarId)],
    ) -> Result<NodeRef, BddError> {
        if pairs.is_empty() {
            return Ok(f);
        }
        let map = self.intern_map(pairs)?;
        let support = self.support(f);
        let mut prev: Option<u32> = None;
        for v in support {
            let to = self.var_maps[map as usize].image[v.0 as usize].unwrap_or(v.0);
            if prev.is_some_and(|p| p >= to) {
                return Err(BddError::NotOrderPreserving);
            }
            prev = Some(to);
        }
        self.begin();
        let r = self.replace_rec(f, map);
        self.end();
        Ok(r)
    }

    /// Generalized cofactor: a function that agrees with `f` wherever `care`
    /// holds, usually smaller than `f`.
    pub fn restrict(&mut self, f: NodeRef, care: NodeRef) -> Result<NodeRef, BddError> {
        if care.is_false() {
            return Err(BddError::EmptyCareSet);
        }
        self.begin();
        let r = self.restrict_rec(f, care);
        self.end();
        Ok(r)
    }

    /// Conjunction of all `items`; `true` when empty.
    pub fn and_all(&mut self, items: impl IntoIterator<Item = NodeRef>) -> NodeRef {
        let mut acc = T;
        for f in items {
            acc = self.and(acc, f);
        }
        acc
    }

    /// Disjunction of all `items`; `false` when empty.
    pub fn or_all(&mut self, items: impl IntoIterator<Item = NodeRef>) -> NodeRef {
        let mut acc = F;
        for f in items {
            acc = self.or(acc, f);
        }
        acc
    }

    // -- recursions ----------------------------------------------------------

    pub(super) fn apply_rec(&mut self, op: BinaryOp, mut f: NodeRef, mut g: NodeRef) -> NodeRef {
        if f.is_terminal() && g.is_terminal() {
            return self.constant(op.eval(f.is_true(), g.is_true()));
        }
        match op {
            BinaryOp::And => {
                if f == F || g == F {
                    return F;
                }
                if f == T || f == g {
                    return g;
                }
                if g == T {
                    return f;
                }
            }
            BinaryOp::Or => {
                if f == T || g == T {
                    return T;
                }
                if f == F || f == g {
                    return g;
                }
                if g == F {
                    return f;
                }
            }
            BinaryOp::Xor => {
                if f == g {
                    return F;
                }
                if f == F {
                    return g;
                }
                if g == F {
                    return f;
                }
            }
            BinaryOp::Diff => {
                if f == F || g == T || f == g {
                    return F;
                }
                if g == F {
                    return f;
                }
            }
            BinaryOp::Imp => {
                if f == F || g == T || f == g {
                    return T;
                }
                if f == T {
                    return g;
                }
            }
            BinaryOp::Biimp => {
                if f == g {
                    return T;
                }
                if f == T {
                    return g;
                }
                if g == T {
                    return f;
                }
            }
        }
        if op.commutative() && f > g {
            std::mem::swap(&mut f, &mut g);
        }
        let tag = Tag::Apply(op);
        if let Some(r) = self.cache_get(tag, f, g, F, 0) {
            return r;
        }
        self.count_op();
        let top = self.level(f).min(self.level(g));
        let (f0, f1) = self.cofactors(f, top);
        let (g0, g1) = self.cofactors(g, top);
        let low = self.apply_rec(op, f0, g0);
        let high = self.apply_rec(op, f1, g1);
        let r = self.mk(top, low, high);
        self.cache_put(tag, f, g, F, 0, r);
        r
    }

    pub(super) fn or_rec(&mut self, f: NodeRef, g: NodeRef) -> NodeRef {
        self.apply_rec(BinaryOp::Or, f, g)
    }

    fn not_rec(&mut self, f: NodeRef) -> NodeRef {
        if f.is_terminal() {
            return self.constant(f.is_false());
        }
        if let Some(r) = self.cache_get(Tag::Not, f, F, F, 0) {
            return r;
        }
        self.count_op();
        let (var, low, high) = {
            let n = &self.nodes[f.0 as usize];
            (n.var, n.low, n.high)
        };
        let l = self.not_rec(low);
        let h = self.not_rec(high);
        let r = self.mk(var, l, h);
        self.cache_put(Tag::Not, f, F, F, 0, r);
        r
    }

    fn ite_rec(&mut self, f: NodeRef, g: NodeRef, h: NodeRef) -> NodeRef {
        if f == T {
            return g;
        }
        if f == F {
            return h;
        }
        if g == h {
            return g;
        }
        if g == T && h == F {
            return f;
        }
        if let Some(r) = self.cache_get(Tag::Ite, f, g, h, 0) {
            return r;
        }
        self.count_op();
        let top = self.level(f).min(self.level(g)).min(self.level(h));
        let (f0, f1) = self.cofactors(f, top);
        let (g0, g1) = self.cofactors(g, top);
        let (h0, h1) = self.cofactors(h, top);
        let low = self.ite_rec(f0, g0, h0);
        let high = self.ite_rec(f1, g1, h1);
        let r = self.mk(top, low, high);
        self.cache_put(Tag::Ite, f, g, h, 0, r);
        r
    }

    fn exists_rec(&mut self, f: NodeRef, set: u32) -> NodeRef {
        if f.is_terminal() {
            return f;
        }
        let var = self.level(f);
        match self.var_sets[set as usize].last {
            Some(last) if var <= last => {}
            _ => return f,
        }
        if let Some(r) = self.cache_get(Tag::Exists, f, F, F, set) {
            return r;
        }
        self.count_op();
        let (low, high) = (self.low(f), self.high(f));
        let l = self.exists_rec(low, set);
        let r = if self.var_sets[set as usize].member[var as usize] {
            if l == T {
                T
            } else {
                let h = self.exists_rec(high, set);
                self.or_rec(l, h)
            }
        } else {
            let h = self.exists_rec(high, set);
            self.mk(var, l, h)
        };
        self.cache_put(Tag::Exists, f, F, F, set, r);
        r
    }

    fn replace_rec(&mut self, f: NodeRef, map: u32) -> NodeRef {
        if f.is_terminal() {
            return f;
        }
        let var = self.level(f);
        match self.var_maps[map as usize].last {
            Some(last) if var <= last => {}
            _ => return f,
        }
        if let Some(r) = self.cache_get(Tag::Replace, f, F, F, map) {
            return r;
        }
        self.count_op();
        let (low, high) = (self.low(f), self.high(f));
        let l = self.replace_rec(low, map);
        let h = self.replace_rec(high, map);
        let to = self.var_maps[map as usize].image[var as usize].unwrap_or(var);
        let r = self.mk(to, l, h);
        self.cache_put(Tag::Replace, f, F, F, map, r);
        r
    }

    fn restrict_rec(&mut self, f: NodeRef, c: NodeRef) -> NodeRef {
        if c == T || f.is_terminal() {
            return f;
        }
        if f == c {
            return T;
        }
        if let Some(r) = self.cache_get(Tag::Restrict, f, c, F, 0) {
            return r;
        }
        self.count_op();
        let (fv, cv) = (self.level(f), self.level(c));
        let r = if cv < fv {
            let (c0, c1) = (self.low(c), self.high(c));
            let merged = self.or_rec(c0, c1);
            self.restrict_rec(f, merged)
        } else {
            let (f0, f1) = self.cofactors(f, fv);
            let (c0, c1) = self.cofactors(c, fv);
            if c0 == F {
                self.restrict_rec(f1, c1)
            } else if c1 == F {
                self.restrict_rec(f0, c0)
            } else {
                let l = self.restrict_rec(f0, c0);
                let h = self.restrict_rec(f1, c1);
                self.mk(fv, l, h)
            }
        };
        self.cache_put(Tag::Restrict, f, c, F, 0, r);
        r
    }
}
