use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::{BddError, BddManager, BddVarId, NodeRef};

impl BddManager {
    /// Number of decision nodes reachable from `f`.
    pub fn node_count(&self, f: NodeRef) -> usize {
        let mut seen = HashSet::new();
        let mut stack = vec![f];
        while let Some(n) = stack.pop() {
            if n.is_terminal() || !seen.insert(n) {
                continue;
            }
            stack.push(self.low(n));
            stack.push(self.high(n));
        }
        seen.len()
    }

    /// Number of distinct decision nodes reachable from any of `roots`.
    pub fn shared_node_count(&self, roots: &[NodeRef]) -> usize {
        let mut seen = HashSet::new();
        let mut stack = roots.to_vec();
        while let Some(n) = stack.pop() {
            if n.is_terminal() || !seen.insert(n) {
                continue;
            }
            stack.push(self.low(n));
            stack.push(self.high(n));
        }
        seen.len()
    }

    /// Variables `f` depends on, ascending.
    pub fn support(&self, f: NodeRef) -> BTreeSet<BddVarId> {
        let mut seen = HashSet::new();
        let mut vars = BTreeSet::new();
        let mut stack = vec![f];
        while let Some(n) = stack.pop() {
            if n.is_terminal() || !seen.insert(n) {
                continue;
            }
            vars.insert(BddVarId(self.level(n)));
            stack.push(self.low(n));
            stack.push(self.high(n));
        }
        vars
    }

    /// Number of assignments to exactly `over` that satisfy `f`.
    pub fn sat_count(&self, f: NodeRef, over: &[BddVarId]) -> Result<BigUint, BddError> {
        let mut vars: Vec<u32> = over.iter().map(|v| v.0).collect();
        vars.sort_unstable();
        vars.dedup();
        let position: HashMap<u32, usize> = vars.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        for v in self.support(f) {
            if !position.contains_key(&v.0) {
                return Err(BddError::SupportOutsideSet(v.0));
            }
        }
        let pos = |n: NodeRef| -> usize {
            if n.is_terminal() {
                vars.len()
            } else {
                position[&self.level(n)]
            }
        };
        // Satisfying assignments of the variables at or below each node.
        let mut memo: HashMap<NodeRef, BigUint> = HashMap::new();
        fn count(
            m: &BddManager,
            n: NodeRef,
            pos: &dyn Fn(NodeRef) -> usize,
            memo: &mut HashMap<NodeRef, BigUint>,
        ) -> BigUint {
            if n.is_false() {
                return BigUint::zero();
            }
            if n.is_true() {
                return BigUint::one();
            }
            if let Some(c) = memo.get(&n) {
                return c.clone();
            }
            let here = pos(n);
            let (low, high) = (m.low(n), m.high(n));
            let cl = count(m, low, pos, memo) << (pos(low) - here - 1);
            let ch = count(m, high, pos, memo) << (pos(high) - here - 1);
            let total = cl + ch;
            memo.insert(n, total.clone());
            total
        }
        let root = count(self, f, &pos, &mut memo);
        Ok(root << pos(f))
    }

    /// Evaluate `f` under a total assignment.
    pub fn eval(&self, f: NodeRef, assignment: impl Fn(BddVarId) -> bool) -> bool {
        let mut n = f;
        while !n.is_terminal() {
            n = if assignment(BddVarId(self.level(n))) {
                self.high(n)
            } else {
                self.low(n)
            };
        }
        n.is_true()
    }

    /// Graphviz rendering: decision nodes as circles, dotted low edges.
    pub fn to_dot(&self, f: NodeRef, name: impl Fn(BddVarId) -> String) -> String {
        let mut out = String::from("digraph bdd {\n");
        let mut seen = HashSet::new();
        let mut stack = vec![f];
        let mut order = Vec::new();
        while let Some(n) = stack.pop() {
            if !seen.insert(n) {
                continue;
            }
            order.push(n);
            if !n.is_terminal() {
                stack.push(self.high(n));
                stack.push(self.low(n));
            }
        }
        order.sort();
        for n in order {
            if n.is_terminal() {
                let label = if n.is_true() { "T" } else { "F" };
                let _ = writeln!(out, "  n{} [shape=box,label=\"{label}\"];", n.index());
            } else {
                let var = BddVarId(self.level(n));
                let _ = writeln!(out, "  n{} [shape=circle,label=\"{}\"];", n.index(), name(var));
                let _ = writeln!(out, "  n{} -> n{} [style=dotted];", n.index(), self.low(n).index());
                let _ = writeln!(out, "  n{} -> n{};", n.index(), self.high(n).index());
            }
        }
        out.push_str("}\n");
        out
    }
}
