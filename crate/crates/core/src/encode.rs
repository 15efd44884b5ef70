//! Symbolic encoding of a linearized model.
//!
//! Every variable gets `w` current bits and `w` next-state bits, interleaved
//! as `x0 < x0+ < x1 < x1+ < …` (least significant bit first). Integers and
//! enumerations are encoded by value. Arithmetic is done on two's-complement
//! bit vectors whose width follows the static value range of each
//! subexpression, so no intermediate result overflows.

use std::collections::HashMap;

use num_bigint::BigUint;
use thiserror::Error;

use crate::bdd::{BddError, BddManager, BddVarId, NodeRef, PairSetId};
use crate::config::{Granularity, PlantInvariantMode};
use crate::model::{BinOp, Event, Expr, InvKind, Side, UnOp, VarDomain, VarKind};
use crate::order::VarOrder;
use crate::transform::LinearizedModel;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("unknown enumeration literal `{0}`")]
    UnknownLiteral(String),
    #[error("location reference `{0}.{1}` was not linearized")]
    LocationReference(String, String),
    #[error("`mod` needs a positive integer literal divisor")]
    Modulus,
    #[error("ill-typed expression: {0}")]
    Type(String),
    #[error(transparent)]
    Bdd(#[from] BddError),
}

#[derive(Debug, Clone)]
pub struct SymbolicVar {
    pub name: String,
    pub domain: VarDomain,
    pub kind: VarKind,
    pub cur: Vec<BddVarId>,
    pub next: Vec<BddVarId>,
}

impl SymbolicVar {
    pub fn width(&self) -> usize {
        self.cur.len()
    }

    /// Largest value the bits can hold.
    pub fn bdd_max(&self) -> i64 {
        (1i64 << self.width()) - 1
    }

    /// Whether some bit patterns lie outside the declared domain.
    pub fn has_unused_values(&self) -> bool {
        let (lo, hi) = self.domain.bounds();
        lo > 0 || hi < self.bdd_max()
    }
}

#[derive(Debug, Clone)]
pub struct SefaEvent {
    pub name: String,
    pub controllable: bool,
    /// For events generated for input variables, the variable index.
    pub input_var: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct SymbolicEdge {
    pub event: usize,
    /// Guard after all strengthening.
    pub guard: NodeRef,
    /// States where an update leaves the representable range.
    pub error: NodeRef,
    /// Update relation over current bits and the next bits of `assigned`.
    pub update: NodeRef,
    /// `guard ∧ ¬error ∧ update`.
    pub rel: NodeRef,
    /// The guard as written in the model.
    pub original_guard: NodeRef,
    /// Guard after plant invariants, before requirement restrictions.
    pub plant_guard: NodeRef,
    /// Indices of the variables this edge assigns, ascending.
    pub assigned: Vec<usize>,
    pub pairs: PairSetId,
}

/// Symbolic extended finite automaton with its BDD manager. Every stored
/// predicate is a registered root of `manager`.
#[derive(Debug)]
pub struct Sefa {
    pub manager: BddManager,
    pub vars: Vec<SymbolicVar>,
    pub order: VarOrder,
    pub events: Vec<SefaEvent>,
    pub edges: Vec<SymbolicEdge>,
    pub initial: NodeRef,
    pub marked: NodeRef,
    pub forbidden: NodeRef,
    /// Conjunction of the state plant invariants.
    pub plant_invariant: NodeRef,
    /// Conjunction of the state requirement invariants, range limits included.
    pub requirement_invariant: NodeRef,
    /// Every variable within its declared domain.
    pub in_range: NodeRef,
    /// Per event: conjunction of the plant state/event invariants.
    pub plant_needs: Vec<NodeRef>,
    /// Per event: conjunction of the requirement state/event invariants.
    pub requirement_needs: Vec<NodeRef>,
    pub granularity: Granularity,
    literals: HashMap<String, i64>,
    index: HashMap<String, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodeOptions {
    pub granularity: Granularity,
    pub plant_invariants: PlantInvariantMode,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        EncodeOptions {
            granularity: Granularity::PerEvent,
            plant_invariants: PlantInvariantMode::ImplicationCheck,
        }
    }
}

fn keep(m: &mut BddManager, f: NodeRef) -> NodeRef {
    m.register_root(f);
    f
}

/// Point a registered slot at a new predicate.
pub fn set_root(m: &mut BddManager, slot: &mut NodeRef, value: NodeRef) {
    m.register_root(value);
    m.release_root(*slot)
        .expect("slot holds a registered root");
    *slot = value;
}

// ---------------------------------------------------------------------------
// Bit vectors

/// Two's-complement bit vector, least significant bit first, with the static
/// range of the values it can take.
#[derive(Debug, Clone)]
struct BitVec {
    bits: Vec<NodeRef>,
    lo: i64,
    hi: i64,
}

fn signed_width(lo: i64, hi: i64) -> usize {
    let mut w = 1;
    while !(-(1i128 << (w - 1)) <= lo as i128 && hi as i128 <= (1i128 << (w - 1)) - 1) {
        w += 1;
    }
    w
}

enum Encoded {
    Pred(NodeRef),
    Int(BitVec),
}

struct Encoder<'a> {
    m: &'a mut BddManager,
    vars: &'a [SymbolicVar],
    index: &'a HashMap<String, usize>,
    literals: &'a HashMap<String, i64>,
}

impl Encoder<'_> {
    fn constant(&self, k: i64) -> BitVec {
        let w = signed_width(k, k);
        BitVec {
            bits: (0..w).map(|i| self.m.constant((k >> i) & 1 == 1)).collect(),
            lo: k,
            hi: k,
        }
    }

    fn var_bits(&mut self, var: usize, next: bool) -> Result<Vec<NodeRef>, EncodeError> {
        let v = &self.vars[var];
        let ids = if next { &v.next } else { &v.cur };
        ids.iter()
            .map(|&b| self.m.mk_var(b).map_err(EncodeError::from))
            .collect()
    }

    fn var_vec(&mut self, var: usize) -> Result<BitVec, EncodeError> {
        let mut bits = self.var_bits(var, false)?;
        bits.push(NodeRef::FALSE);
        Ok(BitVec {
            bits,
            lo: 0,
            hi: self.vars[var].bdd_max(),
        })
    }

    fn extend(&self, v: &BitVec, w: usize) -> Vec<NodeRef> {
        let mut bits = v.bits.clone();
        let sign = *bits.last().unwrap();
        while bits.len() < w {
            bits.push(sign);
        }
        bits
    }

    fn add_bits(&mut self, a: &[NodeRef], b: &[NodeRef], carry_in: NodeRef) -> Vec<NodeRef> {
        let mut carry = carry_in;
        let mut out = Vec::with_capacity(a.len());
        for (&x, &y) in a.iter().zip(b) {
            let xy = self.m.xor(x, y);
            out.push(self.m.xor(xy, carry));
            let both = self.m.and(x, y);
            let prop = self.m.and(xy, carry);
            carry = self.m.or(both, prop);
        }
        out
    }

    fn add(&mut self, a: &BitVec, b: &BitVec) -> BitVec {
        let (lo, hi) = (a.lo + b.lo, a.hi + b.hi);
        let w = signed_width(lo, hi).max(a.bits.len()).max(b.bits.len());
        let (xa, xb) = (self.extend(a, w), self.extend(b, w));
        let bits = self.add_bits(&xa, &xb, NodeRef::FALSE);
        BitVec { bits, lo, hi }
    }

    fn sub(&mut self, a: &BitVec, b: &BitVec) -> BitVec {
        let (lo, hi) = (a.lo - b.hi, a.hi - b.lo);
        let w = signed_width(lo, hi).max(a.bits.len()).max(b.bits.len());
        let xa = self.extend(a, w);
        let nb: Vec<NodeRef> = self.extend(b, w).into_iter().map(|x| self.m.not(x)).collect();
        let bits = self.add_bits(&xa, &nb, NodeRef::TRUE);
        BitVec { bits, lo, hi }
    }

    fn sign(v: &BitVec) -> NodeRef {
        *v.bits.last().unwrap()
    }

    fn lt(&mut self, a: &BitVec, b: &BitVec) -> NodeRef {
        Self::sign(&self.sub(a, b))
    }

    fn le(&mut self, a: &BitVec, b: &BitVec) -> NodeRef {
        let d = self.sub(b, a);
        self.m.not(Self::sign(&d))
    }

    fn eq(&mut self, a: &BitVec, b: &BitVec) -> NodeRef {
        let w = a.bits.len().max(b.bits.len());
        let (xa, xb) = (self.extend(a, w), self.extend(b, w));
        let mut acc = NodeRef::TRUE;
        for (x, y) in xa.into_iter().zip(xb) {
            let same = self.m.biimp(x, y);
            acc = self.m.and(acc, same);
        }
        acc
    }

    /// Remainder by a positive constant, by restoring division.
    fn modulo(&mut self, a: &BitVec, k: i64) -> BitVec {
        if a.lo >= 0 && a.hi < k {
            return a.clone();
        }
        // Shift negative dividends up by a multiple of k.
        let a = if a.lo < 0 {
            let shift = (-a.lo + k - 1) / k * k;
            let c = self.constant(shift);
            self.add(a, &c)
        } else {
            a.clone()
        };
        let w = signed_width(-k, 2 * k);
        let divisor = self.constant(k);
        let divisor = BitVec {
            bits: self.extend(&divisor, w),
            ..divisor
        };
        let mut rem = vec![NodeRef::FALSE; w];
        // The top bit of the shifted dividend is its (zero) sign bit.
        for i in (0..a.bits.len() - 1).rev() {
            let mut shifted = Vec::with_capacity(w);
            shifted.push(a.bits[i]);
            shifted.extend_from_slice(&rem[..w - 1]);
            let cur = BitVec {
                bits: shifted,
                lo: 0,
                hi: 2 * k - 1,
            };
            let diff = self.sub(&cur, &divisor);
            let negative = Self::sign(&diff);
            let diff_bits = self.extend(&diff, w);
            rem = (0..w)
                .map(|j| self.m.ite(negative, cur.bits[j], diff_bits[j]))
                .collect();
        }
        let width = signed_width(0, k - 1);
        rem.truncate(width);
        BitVec {
            bits: rem,
            lo: 0,
            hi: k - 1,
        }
    }

    fn pred(&mut self, e: &Expr) -> Result<NodeRef, EncodeError> {
        match self.expr(e)? {
            Encoded::Pred(p) => Ok(p),
            Encoded::Int(_) => Err(EncodeError::Type(format!("{e:?} is not a predicate"))),
        }
    }

    fn int(&mut self, e: &Expr) -> Result<BitVec, EncodeError> {
        match self.expr(e)? {
            Encoded::Int(v) => Ok(v),
            Encoded::Pred(_) => Err(EncodeError::Type(format!("{e:?} is not an integer"))),
        }
    }

    fn var_index(&self, name: &str) -> Result<usize, EncodeError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| EncodeError::UnknownVariable(name.to_string()))
    }

    fn expr(&mut self, e: &Expr) -> Result<Encoded, EncodeError> {
        Ok(match e {
            Expr::Bool(b) => Encoded::Pred(self.m.constant(*b)),
            Expr::Int(k) => Encoded::Int(self.constant(*k)),
            Expr::Var(name) => {
                let idx = self.var_index(name)?;
                if self.vars[idx].domain.is_bool() {
                    Encoded::Pred(self.m.mk_var(self.vars[idx].cur[0])?)
                } else {
                    Encoded::Int(self.var_vec(idx)?)
                }
            }
            Expr::EnumLit(name) => {
                let k = *self
                    .literals
                    .get(name)
                    .ok_or_else(|| EncodeError::UnknownLiteral(name.clone()))?;
                Encoded::Int(self.constant(k))
            }
            Expr::Loc { aut, loc } => {
                return Err(EncodeError::LocationReference(aut.clone(), loc.clone()))
            }
            Expr::Unary(UnOp::Not, inner) => {
                let p = self.pred(inner)?;
                Encoded::Pred(self.m.not(p))
            }
            Expr::Unary(UnOp::Neg, inner) => {
                let v = self.int(inner)?;
                let zero = self.constant(0);
                Encoded::Int(self.sub(&zero, &v))
            }
            Expr::Binary(op, l, r) => match op {
                BinOp::And | BinOp::Or => {
                    let (a, b) = (self.pred(l)?, self.pred(r)?);
                    Encoded::Pred(if *op == BinOp::And {
                        self.m.and(a, b)
                    } else {
                        self.m.or(a, b)
                    })
                }
                BinOp::Add | BinOp::Sub => {
                    let (a, b) = (self.int(l)?, self.int(r)?);
                    Encoded::Int(if *op == BinOp::Add {
                        self.add(&a, &b)
                    } else {
                        self.sub(&a, &b)
                    })
                }
                BinOp::Mod => {
                    let Expr::Int(k) = **r else {
                        return Err(EncodeError::Modulus);
                    };
                    if k <= 0 {
                        return Err(EncodeError::Modulus);
                    }
                    let a = self.int(l)?;
                    Encoded::Int(self.modulo(&a, k))
                }
                BinOp::Eq | BinOp::Ne => {
                    let eq = match (self.expr(l)?, self.expr(r)?) {
                        (Encoded::Pred(a), Encoded::Pred(b)) => self.m.biimp(a, b),
                        (Encoded::Int(a), Encoded::Int(b)) => self.eq(&a, &b),
                        _ => return Err(EncodeError::Type(format!("{e:?}"))),
                    };
                    Encoded::Pred(if *op == BinOp::Eq { eq } else { self.m.not(eq) })
                }
                BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                    let (a, b) = (self.int(l)?, self.int(r)?);
                    Encoded::Pred(match op {
                        BinOp::Lt => self.lt(&a, &b),
                        BinOp::Le => self.le(&a, &b),
                        BinOp::Gt => self.lt(&b, &a),
                        _ => self.le(&b, &a),
                    })
                }
            },
        })
    }

    /// Relation `x+ = rhs` and the error predicate of the assignment.
    fn assignment(&mut self, var: usize, rhs: &Expr) -> Result<(NodeRef, NodeRef), EncodeError> {
        let next = self.var_bits(var, true)?;
        if self.vars[var].domain.is_bool() {
            let p = self.pred(rhs)?;
            return Ok((self.m.biimp(next[0], p), NodeRef::FALSE));
        }
        let value = self.int(rhs)?;
        let max = self.vars[var].bdd_max();
        let mut error = NodeRef::FALSE;
        if value.lo < 0 {
            error = Self::sign(&value);
        }
        if value.hi > max {
            let limit = self.constant(max);
            let above = self.lt(&limit, &value);
            error = self.m.or(error, above);
        }
        let bits = self.extend(&value, next.len());
        let mut update = NodeRef::TRUE;
        for (n, b) in next.into_iter().zip(bits) {
            let same = self.m.biimp(n, b);
            update = self.m.and(update, same);
        }
        Ok((update, error))
    }

    /// `lo ≤ x ≤ hi` for the declared domain, over current or next bits.
    fn domain_pred(&mut self, var: usize, next: bool) -> Result<NodeRef, EncodeError> {
        let v = &self.vars[var];
        if !v.has_unused_values() {
            return Ok(NodeRef::TRUE);
        }
        let (lo, hi) = v.domain.bounds();
        let max = v.bdd_max();
        let mut bits = self.var_bits(var, next)?;
        bits.push(NodeRef::FALSE);
        let x = BitVec { bits, lo: 0, hi: max };
        let mut p = NodeRef::TRUE;
        if lo > 0 {
            let c = self.constant(lo);
            p = self.le(&c, &x);
        }
        if hi < max {
            let c = self.constant(hi);
            let below = self.le(&x, &c);
            p = self.m.and(p, below);
        }
        Ok(p)
    }

    fn value_eq(&mut self, var: usize, value: i64) -> Result<NodeRef, EncodeError> {
        let x = self.var_vec(var)?;
        let c = self.constant(value);
        Ok(self.eq(&x, &c))
    }

    fn frames(&mut self, vars: impl IntoIterator<Item = usize>) -> Result<NodeRef, EncodeError> {
        let mut acc = NodeRef::TRUE;
        for var in vars {
            let cur = self.var_bits(var, false)?;
            let next = self.var_bits(var, true)?;
            for (c, n) in cur.into_iter().zip(next) {
                let same = self.m.biimp(c, n);
                acc = self.m.and(acc, same);
            }
        }
        Ok(acc)
    }
}

impl Sefa {
    fn encoder(&mut self) -> Encoder<'_> {
        Encoder {
            m: &mut self.manager,
            vars: &self.vars,
            index: &self.index,
            literals: &self.literals,
        }
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Encode a boolean expression over current-state variables.
    pub fn encode_predicate(&mut self, e: &Expr) -> Result<NodeRef, EncodeError> {
        self.encoder().pred(e)
    }

    /// Update relation and error predicate for `var := rhs`.
    pub fn encode_assignment(&mut self, var: &str, rhs: &Expr) -> Result<(NodeRef, NodeRef), EncodeError> {
        let idx = self
            .var_index(var)
            .ok_or_else(|| EncodeError::UnknownVariable(var.to_string()))?;
        self.encoder().assignment(idx, rhs)
    }

    /// `x+ = x` for every listed variable.
    pub fn frames(&mut self, vars: impl IntoIterator<Item = usize>) -> NodeRef {
        self.encoder().frames(vars).expect("bits are allocated")
    }

    pub fn value_eq(&mut self, var: usize, value: i64) -> NodeRef {
        self.encoder().value_eq(var, value).expect("bits are allocated")
    }

    pub fn domain_pred(&mut self, var: usize) -> NodeRef {
        self.encoder().domain_pred(var, false).expect("bits are allocated")
    }

    pub fn current_bits(&self) -> Vec<BddVarId> {
        let mut bits: Vec<BddVarId> = self.vars.iter().flat_map(|v| v.cur.iter().copied()).collect();
        bits.sort();
        bits
    }

    pub fn next_bits(&self) -> Vec<BddVarId> {
        let mut bits: Vec<BddVarId> = self.vars.iter().flat_map(|v| v.next.iter().copied()).collect();
        bits.sort();
        bits
    }

    /// Current/next pairs of the given variables.
    pub fn pairs_of(&mut self, vars: &[usize]) -> PairSetId {
        let pairs: Vec<(BddVarId, BddVarId)> = vars
            .iter()
            .flat_map(|&v| {
                let sv = &self.vars[v];
                sv.cur.iter().copied().zip(sv.next.iter().copied()).collect::<Vec<_>>()
            })
            .collect();
        self.manager.pair_set(&pairs).expect("interleaved bits are adjacent")
    }

    /// Number of states satisfying `pred` within the declared domains.
    pub fn count_states(&mut self, pred: NodeRef) -> BigUint {
        let f = self.manager.and(pred, self.in_range);
        let bits = self.current_bits();
        self.manager.sat_count(f, &bits).expect("predicate over current bits")
    }

    /// Indices of edges labeled with `event`.
    pub fn edges_of(&self, event: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .iter()
            .enumerate()
            .filter(move |(_, e)| e.event == event)
            .map(|(i, _)| i)
    }

    pub fn event_index(&self, name: &str) -> Option<usize> {
        self.events.iter().position(|e| e.name == name)
    }

    /// Recompute `rel` from guard, error and update.
    pub fn refresh_relation(&mut self, edge: usize) {
        let e = &self.edges[edge];
        let (g, r, u) = (e.guard, e.error, e.update);
        let ok = self.manager.diff(g, r);
        let t = self.manager.and(ok, u);
        let mut slot = self.edges[edge].rel;
        set_root(&mut self.manager, &mut slot, t);
        self.edges[edge].rel = slot;
    }

    /// Whether every edge satisfies `rel = guard ∧ ¬error ∧ update`.
    pub fn relations_consistent(&mut self) -> bool {
        (0..self.edges.len()).all(|i| {
            let e = self.edges[i].clone();
            let ok = self.manager.diff(e.guard, e.error);
            let t = self.manager.and(ok, e.update);
            t == e.rel
        })
    }

    /// Merge all edges of each event into one. Edge order follows the event
    /// order.
    pub fn merge_per_event(&mut self) {
        if self.granularity == Granularity::PerEvent {
            return;
        }
        let old = std::mem::take(&mut self.edges);
        let mut merged = Vec::new();
        for event in 0..self.events.len() {
            let mut group = old.iter().filter(|e| e.event == event);
            let Some(first) = group.next() else {
                continue;
            };
            let mut acc = first.clone();
            for e in group {
                acc = self.merge_edges(&acc, e);
            }
            merged.push(self.rooted_copy(&acc));
        }
        for e in &old {
            self.release_edge(e);
        }
        self.edges = merged;
        self.granularity = Granularity::PerEvent;
    }

    fn rooted_copy(&mut self, e: &SymbolicEdge) -> SymbolicEdge {
        let m = &mut self.manager;
        for f in [e.guard, e.error, e.update, e.rel, e.original_guard, e.plant_guard] {
            m.register_root(f);
        }
        e.clone()
    }

    fn release_edge(&mut self, e: &SymbolicEdge) {
        for f in [e.guard, e.error, e.update, e.rel, e.original_guard, e.plant_guard] {
            self.manager.release_root(f).expect("edge predicates are roots");
        }
    }

    /// Combine two edges of the same event into one. The result's predicates
    /// are not registered as roots.
    pub fn merge_edges(&mut self, a: &SymbolicEdge, b: &SymbolicEdge) -> SymbolicEdge {
        let only_b: Vec<usize> = b.assigned.iter().filter(|v| !a.assigned.contains(v)).copied().collect();
        let only_a: Vec<usize> = a.assigned.iter().filter(|v| !b.assigned.contains(v)).copied().collect();
        let fa = self.frames(only_b);
        let fb = self.frames(only_a);
        let m = &mut self.manager;
        let ua = m.and(a.update, fa);
        let ub = m.and(b.update, fb);
        let ga_ua = m.and(a.guard, ua);
        let gb_ub = m.and(b.guard, ub);
        let update = m.or(ga_ua, gb_ub);
        let ga_ra = m.and(a.guard, a.error);
        let gb_rb = m.and(b.guard, b.error);
        let error = m.or(ga_ra, gb_rb);
        let guard = m.or(a.guard, b.guard);
        let ok = m.diff(guard, error);
        let rel = m.and(ok, update);
        let original_guard = m.or(a.original_guard, b.original_guard);
        let plant_guard = m.or(a.plant_guard, b.plant_guard);
        let mut assigned: Vec<usize> = a.assigned.iter().chain(&b.assigned).copied().collect();
        assigned.sort_unstable();
        assigned.dedup();
        let pairs = self.pairs_of(&assigned);
        SymbolicEdge {
            event: a.event,
            guard,
            error,
            update,
            rel,
            original_guard,
            plant_guard,
            assigned,
            pairs,
        }
    }
}

/// Build the symbolic automaton of a linearized model under a variable order.
pub fn build_sefa(
    model: &LinearizedModel,
    order: &VarOrder,
    options: EncodeOptions,
) -> Result<Sefa, EncodeError> {
    // Bit allocation, interleaved per variable in order.
    let mut vars: Vec<Option<SymbolicVar>> = vec![None; model.variables.len()];
    let mut next_bit = 0u32;
    for &vi in &order.0 {
        let v = &model.variables[vi];
        let w = v.domain.bit_width();
        let mut cur = Vec::new();
        let mut next = Vec::new();
        for _ in 0..w {
            cur.push(BddVarId(next_bit));
            next.push(BddVarId(next_bit + 1));
            next_bit += 2;
        }
        vars[vi] = Some(SymbolicVar {
            name: v.name.clone(),
            domain: v.domain.clone(),
            kind: v.kind,
            cur,
            next,
        });
    }
    let vars: Vec<SymbolicVar> = vars
        .into_iter()
        .map(|v| v.expect("order is a permutation"))
        .collect();
    let index: HashMap<String, usize> = vars.iter().enumerate().map(|(i, v)| (v.name.clone(), i)).collect();
    let mut literals = HashMap::new();
    for v in &vars {
        if let VarDomain::Enum(lits) = &v.domain {
            if v.kind != VarKind::LocationPointer {
                for (i, l) in lits.iter().enumerate() {
                    literals.insert(l.clone(), i as i64);
                }
            }
        }
    }

    let mut events: Vec<SefaEvent> = model
        .events
        .iter()
        .map(|e: &Event| SefaEvent {
            name: e.name.clone(),
            controllable: e.is_controllable(),
            input_var: None,
        })
        .collect();
    for (i, v) in vars.iter().enumerate() {
        if v.kind == VarKind::Input {
            events.push(SefaEvent {
                name: v.name.clone(),
                controllable: false,
                input_var: Some(i),
            });
        }
    }
    let event_index: HashMap<&str, usize> =
        events.iter().enumerate().map(|(i, e)| (e.name.as_str(), i)).collect();

    let mut m = BddManager::new(next_bit);
    let mut enc = Encoder {
        m: &mut m,
        vars: &vars,
        index: &index,
        literals: &literals,
    };

    // Domains.
    let mut in_range = NodeRef::TRUE;
    let mut range_limits = NodeRef::TRUE;
    for i in 0..vars.len() {
        let p = enc.domain_pred(i, false)?;
        in_range = enc.m.and(in_range, p);
        if vars[i].kind != VarKind::Input || vars[i].has_unused_values() {
            range_limits = enc.m.and(range_limits, p);
        }
    }

    // Initial and marked states.
    let mut initial = NodeRef::TRUE;
    for p in &model.initials {
        let e = enc.pred(p)?;
        initial = enc.m.and(initial, e);
    }
    for (i, v) in model.variables.iter().enumerate() {
        let p = if v.initial.is_empty() {
            enc.domain_pred(i, false)?
        } else {
            let mut any = NodeRef::FALSE;
            for &value in &v.initial {
                let eq = enc.value_eq(i, value)?;
                any = enc.m.or(any, eq);
            }
            any
        };
        initial = enc.m.and(initial, p);
    }
    let mut marked = NodeRef::TRUE;
    for p in &model.markeds {
        let e = enc.pred(p)?;
        marked = enc.m.and(marked, e);
    }

    // Invariants.
    let mut plant_invariant = NodeRef::TRUE;
    let mut requirement_invariant = NodeRef::TRUE;
    let mut plant_needs = vec![NodeRef::TRUE; events.len()];
    let mut requirement_needs = vec![NodeRef::TRUE; events.len()];
    for inv in &model.invariants {
        let p = enc.pred(&inv.predicate)?;
        let plant = inv.side == Side::Plant;
        match &inv.kind {
            InvKind::State => {
                let slot = if plant {
                    &mut plant_invariant
                } else {
                    &mut requirement_invariant
                };
                *slot = enc.m.and(*slot, p);
            }
            InvKind::Needs(ev) | InvKind::Disables(ev) => {
                let p = if matches!(inv.kind, InvKind::Disables(_)) {
                    enc.m.not(p)
                } else {
                    p
                };
                let Some(&k) = event_index.get(ev.as_str()) else {
                    continue;
                };
                let slot = if plant {
                    &mut plant_needs[k]
                } else {
                    &mut requirement_needs[k]
                };
                *slot = enc.m.and(*slot, p);
            }
        }
    }
    // Values outside a declared domain are forbidden.
    requirement_invariant = enc.m.and(requirement_invariant, range_limits);

    // Edges: guard, error and update per linearized edge.
    struct Draft {
        event: usize,
        original_guard: NodeRef,
        guard: NodeRef,
        error: NodeRef,
        update: NodeRef,
        assigned: Vec<usize>,
    }
    let mut drafts = Vec::new();
    for edge in &model.edges {
        let event = event_index[edge.event.as_str()];
        let original_guard = enc.pred(&edge.guard)?;
        let mut error = NodeRef::FALSE;
        let mut update = NodeRef::TRUE;
        let mut assigned = Vec::new();
        for (var, rhs) in &edge.updates {
            let idx = enc.var_index(var)?;
            let (u, r) = enc.assignment(idx, rhs)?;
            update = enc.m.and(update, u);
            error = enc.m.or(error, r);
            assigned.push(idx);
        }
        assigned.sort_unstable();
        let guard = enc.m.diff(original_guard, error);
        drafts.push(Draft {
            event,
            original_guard,
            guard,
            error,
            update,
            assigned,
        });
    }
    for (event, e) in events.iter().enumerate() {
        let Some(var) = e.input_var else {
            continue;
        };
        let same = enc.frames([var])?;
        let changed = enc.m.not(same);
        let target_ok = enc.domain_pred(var, true)?;
        let update = enc.m.and(changed, target_ok);
        drafts.push(Draft {
            event,
            original_guard: NodeRef::TRUE,
            guard: NodeRef::TRUE,
            error: NodeRef::FALSE,
            update,
            assigned: vec![var],
        });
    }

    // Runtime errors of uncontrollable edges are forbidden where the plant
    // allows the edge.
    let mut hazards = NodeRef::FALSE;
    for d in &drafts {
        if events[d.event].controllable || d.error.is_false() {
            continue;
        }
        let enabled = enc.m.and(d.original_guard, plant_needs[d.event]);
        let h = enc.m.and(enabled, d.error);
        hazards = enc.m.or(hazards, h);
    }

    // State plant invariants: restrict initial states and keep edges inside.
    initial = enc.m.and(initial, plant_invariant);
    drop(enc);
    let mut sefa = Sefa {
        manager: m,
        vars,
        order: order.clone(),
        events,
        edges: Vec::new(),
        initial: NodeRef::TRUE,
        marked: NodeRef::TRUE,
        forbidden: NodeRef::TRUE,
        plant_invariant: NodeRef::TRUE,
        requirement_invariant: NodeRef::TRUE,
        in_range: NodeRef::TRUE,
        plant_needs: Vec::new(),
        requirement_needs: Vec::new(),
        granularity: Granularity::PerEdge,
        literals,
        index,
    };
    let m = &mut sefa.manager;
    sefa.initial = keep(m, initial);
    sefa.marked = keep(m, marked);
    sefa.plant_invariant = keep(m, plant_invariant);
    sefa.requirement_invariant = keep(m, requirement_invariant);
    sefa.in_range = keep(m, in_range);
    sefa.plant_needs = plant_needs.into_iter().map(|f| keep(m, f)).collect();
    sefa.requirement_needs = requirement_needs.into_iter().map(|f| keep(m, f)).collect();

    for d in drafts {
        let pairs = sefa.pairs_of(&d.assigned);
        let m = &mut sefa.manager;
        let edge = SymbolicEdge {
            event: d.event,
            guard: keep(m, d.guard),
            error: keep(m, d.error),
            update: keep(m, d.update),
            rel: keep(m, NodeRef::TRUE),
            original_guard: keep(m, d.original_guard),
            plant_guard: keep(m, NodeRef::TRUE),
            assigned: d.assigned,
            pairs,
        };
        sefa.edges.push(edge);
    }

    if !plant_invariant.is_true() {
        for i in 0..sefa.edges.len() {
            let e = sefa.edges[i].clone();
            let m = &mut sefa.manager;
            let t = m.and(e.guard, e.update);
            let back = m.relprev(plant_invariant, t, e.pairs);
            let guard = match options.plant_invariants {
                PlantInvariantMode::ImplicationCheck => {
                    let within = m.and(e.guard, plant_invariant);
                    if m.implies(within, back) {
                        continue;
                    }
                    m.and(e.guard, back)
                }
                PlantInvariantMode::Restrict => {
                    let simplified = if plant_invariant.is_false() {
                        NodeRef::FALSE
                    } else {
                        m.restrict(back, plant_invariant)?
                    };
                    m.and(e.guard, simplified)
                }
            };
            set_root(m, &mut sefa.edges[i].guard, guard);
        }
    }

    let m = &mut sefa.manager;
    let not_req = m.not(requirement_invariant);
    let forbidden = m.or(not_req, hazards);
    sefa.forbidden = keep(m, forbidden);

    // State/event invariants.
    for i in 0..sefa.edges.len() {
        let e = sefa.edges[i].clone();
        let m = &mut sefa.manager;
        let plant_guard = m.and(e.guard, sefa.plant_needs[e.event]);
        set_root(m, &mut sefa.edges[i].plant_guard, plant_guard);
        let needs = sefa.requirement_needs[e.event];
        if sefa.events[e.event].controllable {
            let g = m.and(plant_guard, needs);
            set_root(m, &mut sefa.edges[i].guard, g);
        } else {
            set_root(m, &mut sefa.edges[i].guard, plant_guard);
            let violating = m.diff(plant_guard, needs);
            let f = m.or(sefa.forbidden, violating);
            set_root(m, &mut sefa.forbidden, f);
        }
    }
    for i in 0..sefa.edges.len() {
        sefa.refresh_relation(i);
    }
    if options.granularity == Granularity::PerEvent {
        sefa.merge_per_event();
    }
    Ok(sefa)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse, parse_expr};
    use crate::transform::{linearize, plantify};

    fn sefa_of(text: &str, granularity: Granularity) -> Sefa {
        let spec = parse(text, "t").unwrap();
        let lin = linearize(&plantify(&spec));
        let order = VarOrder::identity(lin.variables.len());
        build_sefa(
            &lin,
            &order,
            EncodeOptions {
                granularity,
                ..Default::default()
            },
        )
        .unwrap()
    }

    fn pred(s: &mut Sefa, text: &str) -> NodeRef {
        let e = parse_expr(text, &crate::model::Specification::default()).unwrap();
        s.encode_predicate(&e).unwrap()
    }

    #[test]
    fn increment_error_is_overflow_of_three_bits() {
        let mut s = sefa_of(
            "controllable inc;\nplant P {\n  disc int[0..5] y = 0;\n  location L:\n    initial;\n    edge inc do y := y + 1;\n}\n",
            Granularity::PerEdge,
        );
        assert_eq!(s.vars[0].width(), 3);
        let e = s.edges[0].clone();
        let expected = pred(&mut s, "y + 1 > 7");
        assert_eq!(e.error, expected);
        let y7 = pred(&mut s, "y = 7");
        assert_eq!(e.error, y7);
        let out = pred(&mut s, "y > 5");
        let limits = s.manager.not(s.requirement_invariant);
        assert_eq!(limits, out);
        let bits = s.current_bits();
        let three = pred(&mut s, "y = 3");
        assert_eq!(s.manager.sat_count(three, &bits).unwrap(), 1u32.into());
        assert_eq!(s.count_states(NodeRef::TRUE), 6u32.into());
    }

    #[test]
    fn input_edge_changes_value() {
        let s = sefa_of("input bool i;\n", Granularity::PerEdge);
        assert_eq!(s.edges.len(), 1);
        let bits: Vec<BddVarId> = vec![BddVarId(0), BddVarId(1)];
        let rel = s.edges[0].rel;
        assert_eq!(s.manager.sat_count(rel, &bits).unwrap(), 2u32.into());
        assert!(!s.events[0].controllable);
    }

    #[test]
    fn arithmetic_matches_evaluation() {
        let mut s = sefa_of(
            "plant P {\n  disc int[0..7] a;\n  disc int[0..5] b;\n  location L:\n    initial;\n}\n",
            Granularity::PerEdge,
        );
        let exprs = [
            "a + b > 9",
            "a - b < 0",
            "a - b = -3",
            "(a - 2*0 - b) mod 3 = 1",
            "a mod 4 = b mod 3",
            "-a + 3 >= b",
            "(a - b - 7) mod 5 = 2",
            "a mod 1 = 0",
            "b != a",
            "a <= b and not (a = 0)",
        ];
        for text in exprs {
            let Ok(e) = parse_expr(text, &crate::model::Specification::default()) else {
                continue;
            };
            let p = s.encode_predicate(&e).unwrap();
            for a in 0..8i64 {
                for b in 0..6i64 {
                    let mut env = crate::model::MapEnv::default();
                    env.set("a", crate::model::Value::Int(a))
                        .set("b", crate::model::Value::Int(b));
                    let want = crate::model::eval(&e, &env).as_bool();
                    let vars = s.vars.clone();
                    let got = s.manager.eval(p, |bit| {
                        for (v, value) in vars.iter().zip([a, b]) {
                            if let Some(k) = v.cur.iter().position(|&c| c == bit) {
                                return (value >> k) & 1 == 1;
                            }
                        }
                        false
                    });
                    assert_eq!(got, want, "{text} at a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn merged_edges_match_worked_example() {
        let text = "controllable e;\nplant P {\n  disc int[0..7] x;\n  disc int[0..6] y;\n  disc int[0..6] z;\n  location L:\n    initial;\n    edge e when x <= 4 do y := y + 1;\n    edge e when x >= 4 do z := z + 1;\n}\n";
        let mut s = sefa_of(text, Granularity::PerEvent);
        assert_eq!(s.edges.len(), 1);
        let e = s.edges[0].clone();
        let within = s.manager.and(e.guard, s.in_range);
        assert_eq!(within, s.in_range);
        let spec = crate::model::Specification::default();
        let lhs_guard = pred(&mut s, "x <= 4 and y != 7");
        let rhs_guard = pred(&mut s, "x >= 4 and z != 7");
        let (uy, _) = s.encode_assignment("y", &parse_expr("y + 1", &spec).unwrap()).unwrap();
        let (uz, _) = s.encode_assignment("z", &parse_expr("z + 1", &spec).unwrap()).unwrap();
        let fz = s.frames([2]);
        let fy = s.frames([1]);
        let m = &mut s.manager;
        let a = m.and_all([lhs_guard, uy, fz]);
        let b = m.and_all([rhs_guard, fy, uz]);
        let expected = m.or(a, b);
        assert_eq!(e.update, expected);
        assert!(s.relations_consistent());
    }
}
