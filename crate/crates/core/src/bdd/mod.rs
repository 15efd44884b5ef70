//! Reduced ordered binary decision diagrams with deterministic instrumentation.
//!
//! Variables are identified by their position in the order: [`BddVarId`] `0`
//! is closest to the root. Nodes are hash-consed, so equal functions have
//! equal [`NodeRef`]s.
//!
//! Live-node accounting uses reference counts. A node is live when it is
//! reachable from a registered root; dead nodes stay in the unique table
//! until [`BddManager::gc`] is called at a safe point. The peak metric counts
//! live nodes plus the nodes built or revived during the running operation.

mod inspect;
mod ops;
mod rel;

use rustc_hash::FxHashMap;
use thiserror::Error;

pub use ops::BinaryOp;
pub use rel::PairSetId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BddVarId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeRef(u32);

impl NodeRef {
    pub const FALSE: NodeRef = NodeRef(0);
    pub const TRUE: NodeRef = NodeRef(1);

    pub fn is_terminal(self) -> bool {
        self.0 < 2
    }

    pub fn is_true(self) -> bool {
        self == NodeRef::TRUE
    }

    pub fn is_false(self) -> bool {
        self == NodeRef::FALSE
    }

    /// Stable numeric id, for external tables.
    pub fn index(self) -> u32 {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BddError {
    #[error("variable {0} out of range (manager has {1} variables)")]
    VarOutOfRange(u32, u32),
    #[error("substitution does not preserve the variable order")]
    NotOrderPreserving,
    #[error("restrict with an empty care set")]
    EmptyCareSet,
    #[error("release of a node that is not a registered root")]
    DoubleRelease,
    #[error("function depends on variable {0} outside the counted set")]
    SupportOutsideSet(u32),
    #[error("current/next pair ({0}, {1}) is not adjacent in the order")]
    NonAdjacentPair(u32, u32),
}

/// Counters exposed for benchmarking.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BddMetrics {
    /// Non-trivial recursive steps: terminal cases and cache hits excluded.
    pub operations: u64,
    pub live_nodes: u64,
    pub peak_live_nodes: u64,
}

const TERMINAL_VAR: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Node {
    var: u32,
    low: NodeRef,
    high: NodeRef,
    /// Root registrations plus live parents.
    rc: u32,
    /// Operation epoch in which a dead node was last counted as temporary.
    epoch: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Tag {
    Not,
    Apply(BinaryOp),
    Ite,
    Exists,
    Replace,
    Restrict,
    RelNext,
    RelPrev,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct CacheKey {
    tag: Tag,
    a: NodeRef,
    b: NodeRef,
    c: NodeRef,
    aux: u32,
}

/// Interned set of variables with O(1) membership.
#[derive(Debug, Clone)]
struct VarSet {
    member: Vec<bool>,
    /// Largest member, or `None` for the empty set.
    last: Option<u32>,
}

/// Interned variable substitution.
#[derive(Debug, Clone)]
struct VarMap {
    image: Vec<Option<u32>>,
    last: Option<u32>,
}

#[derive(Debug)]
pub struct BddManager {
    nodes: Vec<Node>,
    free: Vec<u32>,
    unique: FxHashMap<(u32, NodeRef, NodeRef), NodeRef>,
    cache: FxHashMap<CacheKey, NodeRef>,
    num_vars: u32,
    var_sets: Vec<VarSet>,
    var_set_ids: FxHashMap<Vec<u32>, u32>,
    var_maps: Vec<VarMap>,
    var_map_ids: FxHashMap<Vec<(u32, u32)>, u32>,
    roots: FxHashMap<NodeRef, u32>,
    operations: u64,
    live: u64,
    peak: u64,
    epoch: u32,
    op_temp: u64,
    op_depth: u32,
}

impl BddManager {
    pub fn new(num_vars: u32) -> Self {
        let terminal = |_| Node {
            var: TERMINAL_VAR,
            low: NodeRef::FALSE,
            high: NodeRef::FALSE,
            rc: 0,
            epoch: 0,
        };
        BddManager {
            nodes: (0..2).map(terminal).collect(),
            free: Vec::new(),
            unique: FxHashMap::default(),
            cache: FxHashMap::default(),
            num_vars,
            var_sets: Vec::new(),
            var_set_ids: FxHashMap::default(),
            var_maps: Vec::new(),
            var_map_ids: FxHashMap::default(),
            roots: FxHashMap::default(),
            operations: 0,
            live: 0,
            peak: 0,
            epoch: 0,
            op_temp: 0,
            op_depth: 0,
        }
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn const_true(&self) -> NodeRef {
        NodeRef::TRUE
    }

    pub fn const_false(&self) -> NodeRef {
        NodeRef::FALSE
    }

    pub fn constant(&self, value: bool) -> NodeRef {
        if value {
            NodeRef::TRUE
        } else {
            NodeRef::FALSE
        }
    }

    fn check_var(&self, var: BddVarId) -> Result<(), BddError> {
        if var.0 < self.num_vars {
            Ok(())
        } else {
            Err(BddError::VarOutOfRange(var.0, self.num_vars))
        }
    }

    /// The function that is true iff `var` is true.
    pub fn mk_var(&mut self, var: BddVarId) -> Result<NodeRef, BddError> {
        self.check_var(var)?;
        self.begin();
        let n = self.mk(var.0, NodeRef::FALSE, NodeRef::TRUE);
        self.end();
        Ok(n)
    }

    /// The function that is true iff `var` is false.
    pub fn mk_nvar(&mut self, var: BddVarId) -> Result<NodeRef, BddError> {
        self.check_var(var)?;
        self.begin();
        let n = self.mk(var.0, NodeRef::TRUE, NodeRef::FALSE);
        self.end();
        Ok(n)
    }

    pub fn metrics(&self) -> BddMetrics {
        BddMetrics {
            operations: self.operations,
            live_nodes: self.live,
            peak_live_nodes: self.peak,
        }
    }

    /// Variable of a decision node, `None` for terminals.
    pub fn var_of(&self, f: NodeRef) -> Option<BddVarId> {
        (!f.is_terminal()).then(|| BddVarId(self.nodes[f.0 as usize].var))
    }

    pub fn low(&self, f: NodeRef) -> NodeRef {
        self.nodes[f.0 as usize].low
    }

    pub fn high(&self, f: NodeRef) -> NodeRef {
        self.nodes[f.0 as usize].high
    }

    fn level(&self, f: NodeRef) -> u32 {
        self.nodes[f.0 as usize].var
    }

    /// Cofactors of `f` with respect to level `var`.
    fn cofactors(&self, f: NodeRef, var: u32) -> (NodeRef, NodeRef) {
        let n = &self.nodes[f.0 as usize];
        if n.var == var {
            (n.low, n.high)
        } else {
            (f, f)
        }
    }

    // -- operation bracketing and counting -----------------------------------

    fn begin(&mut self) {
        if self.op_depth == 0 {
            self.epoch = self.epoch.wrapping_add(1);
            self.op_temp = 0;
        }
        self.op_depth += 1;
    }

    fn end(&mut self) {
        self.op_depth -= 1;
        if self.op_depth == 0 {
            self.op_temp = 0;
        }
    }

    fn count_op(&mut self) {
        self.operations += 1;
    }

    fn cache_get(&self, tag: Tag, a: NodeRef, b: NodeRef, c: NodeRef, aux: u32) -> Option<NodeRef> {
        self.cache
            .get(&CacheKey { tag, a, b, c, aux })
            .copied()
    }

    fn cache_put(&mut self, tag: Tag, a: NodeRef, b: NodeRef, c: NodeRef, aux: u32, r: NodeRef) {
        self.cache.insert(CacheKey { tag, a, b, c, aux }, r);
    }

    // -- node construction ---------------------------------------------------

    fn mk(&mut self, var: u32, low: NodeRef, high: NodeRef) -> NodeRef {
        if low == high {
            return low;
        }
        debug_assert!(var < self.level(low) && var < self.level(high));
        let n = match self.unique.get(&(var, low, high)) {
            Some(&n) => n,
            None => {
                let node = Node {
                    var,
                    low,
                    high,
                    rc: 0,
                    epoch: 0,
                };
                let n = match self.free.pop() {
                    Some(slot) => {
                        self.nodes[slot as usize] = node;
                        NodeRef(slot)
                    }
                    None => {
                        self.nodes.push(node);
                        NodeRef(self.nodes.len() as u32 - 1)
                    }
                };
                self.unique.insert((var, low, high), n);
                n
            }
        };
        let node = &mut self.nodes[n.0 as usize];
        if node.rc == 0 && node.epoch != self.epoch {
            node.epoch = self.epoch;
            self.op_temp += 1;
            self.peak = self.peak.max(self.live + self.op_temp);
        }
        n
    }

    // -- roots and liveness --------------------------------------------------

    fn inc(&mut self, f: NodeRef) {
        let mut stack = vec![f];
        while let Some(n) = stack.pop() {
            if n.is_terminal() {
                continue;
            }
            let node = &mut self.nodes[n.0 as usize];
            node.rc += 1;
            if node.rc == 1 {
                self.live += 1;
                stack.push(node.low);
                stack.push(node.high);
            }
        }
        self.peak = self.peak.max(self.live + self.op_temp);
    }

    fn dec(&mut self, f: NodeRef) {
        let mut stack = vec![f];
        while let Some(n) = stack.pop() {
            if n.is_terminal() {
                continue;
            }
            let node = &mut self.nodes[n.0 as usize];
            node.rc -= 1;
            if node.rc == 0 {
                self.live -= 1;
                stack.push(node.low);
                stack.push(node.high);
            }
        }
    }

    /// Keep `f` alive across [`BddManager::gc`] and count it as live.
    pub fn register_root(&mut self, f: NodeRef) {
        *self.roots.entry(f).or_insert(0) += 1;
        self.inc(f);
    }

    pub fn release_root(&mut self, f: NodeRef) -> Result<(), BddError> {
        match self.roots.get_mut(&f) {
            Some(count) if *count > 0 => {
                *count -= 1;
                if *count == 0 {
                    self.roots.remove(&f);
                }
                self.dec(f);
                Ok(())
            }
            _ => Err(BddError::DoubleRelease),
        }
    }

    /// Number of nodes in the unique table that are not live.
    pub fn dead_nodes(&self) -> u64 {
        self.unique.len() as u64 - self.live
    }

    /// Reclaim dead nodes and clear the computed cache. Every handle the
    /// caller still needs must be registered as a root.
    pub fn gc(&mut self) {
        for idx in 2..self.nodes.len() {
            let node = self.nodes[idx];
            if node.var == TERMINAL_VAR || node.rc > 0 {
                continue;
            }
            self.unique.remove(&(node.var, node.low, node.high));
            self.nodes[idx].var = TERMINAL_VAR;
            self.free.push(idx as u32);
        }
        // Reuse low slots first.
        self.free.sort_unstable_by(|a, b| b.cmp(a));
        self.cache.clear();
    }

    /// Run [`BddManager::gc`] when dead nodes dominate the table.
    pub fn maybe_gc(&mut self) -> bool {
        let dead = self.dead_nodes();
        if dead > 200_000 && dead > 2 * self.live {
            self.gc();
            true
        } else {
            false
        }
    }

    // -- interning -----------------------------------------------------------

    fn intern_set(&mut self, vars: &[BddVarId]) -> Result<u32, BddError> {
        let mut key: Vec<u32> = vars.iter().map(|v| v.0).collect();
        key.sort_unstable();
        key.dedup();
        if let Some(&id) = self.var_set_ids.get(&key) {
            return Ok(id);
        }
        let mut member = vec![false; self.num_vars as usize];
        for &v in &key {
            self.check_var(BddVarId(v))?;
            member[v as usize] = true;
        }
        let id = self.var_sets.len() as u32;
        self.var_sets.push(VarSet {
            member,
            last: key.last().copied(),
        });
        self.var_set_ids.insert(key, id);
        Ok(id)
    }

    fn intern_map(&mut self, pairs: &[(BddVarId, BddVarId)]) -> Result<u32, BddError> {
        let mut key: Vec<(u32, u32)> = pairs.iter().map(|(a, b)| (a.0, b.0)).collect();
        key.sort_unstable();
        key.dedup();
        if let Some(&id) = self.var_map_ids.get(&key) {
            return Ok(id);
        }
        let mut image = vec![None; self.num_vars as usize];
        let mut targets = vec![false; self.num_vars as usize];
        for &(from, to) in &key {
            self.check_var(BddVarId(from))?;
            self.check_var(BddVarId(to))?;
            if image[from as usize].is_some() || std::mem::replace(&mut targets[to as usize], true)
            {
                return Err(BddError::NotOrderPreserving);
            }
            image[from as usize] = Some(to);
        }
        let id = self.var_maps.len() as u32;
        self.var_maps.push(VarMap {
            image,
            last: key.last().map(|p| p.0),
        });
        self.var_map_ids.insert(key, id);
        Ok(id)
    }

    /// Structural check of the reduction invariants over the whole table.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut seen = std::collections::HashSet::new();
        for (idx, node) in self.nodes.iter().enumerate().skip(2) {
            if node.var == TERMINAL_VAR {
                continue;
            }
            if node.low == node.high {
                return Err(format!("node {idx} has equal children"));
            }
            if node.var >= self.level(node.low) || node.var >= self.level(node.high) {
                return Err(format!("node {idx} violates the order"));
            }
            if !seen.insert((node.var, node.low, node.high)) {
                return Err(format!("node {idx} is a duplicate"));
            }
            if self.unique.get(&(node.var, node.low, node.high)) != Some(&NodeRef(idx as u32)) {
                return Err(format!("node {idx} missing from the unique table"));
            }
        }
        Ok(())
    }
}
