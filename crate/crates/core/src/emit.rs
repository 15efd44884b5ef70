//! Controlled-system output model.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::bdd::NodeRef;
use crate::encode::Sefa;
use crate::model::{AutKind, Automaton, BinOp, Edge, Expr, Location, Side, Specification, VarDomain, VarKind};
use crate::synthesis::SynthesisResult;
use crate::transform::plantify;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmitError {
    #[error("empty supervisor: no initial state remains under control")]
    EmptySupervisor,
}

/// Turn a predicate over current bits into an expression that agrees with it
/// on every in-domain state.
///
/// Variables are split in BDD order; the values of a variable are grouped by
/// the cofactor they lead to, and each group becomes an interval, equality or
/// location test.
pub fn lower_bdd_to_expr(sefa: &mut Sefa, f: NodeRef) -> Expr {
    let order = sefa.order.0.clone();
    let mut memo = BTreeMap::new();
    lower_from(sefa, f, &order, 0, &mut memo)
}

fn lower_from(
    sefa: &mut Sefa,
    f: NodeRef,
    order: &[usize],
    pos: usize,
    memo: &mut BTreeMap<(NodeRef, usize), Expr>,
) -> Expr {
    if f.is_terminal() || pos == order.len() {
        return Expr::Bool(f.is_true());
    }
    if let Some(e) = memo.get(&(f, pos)) {
        return e.clone();
    }
    let var = order[pos];
    let support = sefa.manager.support(f);
    let bits = sefa.vars[var].cur.clone();
    let result = if bits.iter().any(|b| support.contains(b)) {
        // Group the domain values by cofactor, keeping first-seen order.
        let mut groups: Vec<(NodeRef, Vec<i64>)> = Vec::new();
        for value in sefa.vars[var].domain.values() {
            let eq = sefa.value_eq(var, value);
            let m = &mut sefa.manager;
            let restricted = m.and(f, eq);
            let cof = m.exists(restricted, &bits).expect("bits exist");
            match groups.iter_mut().find(|(g, _)| *g == cof) {
                Some((_, vals)) => vals.push(value),
                None => groups.push((cof, vec![value])),
            }
        }
        if groups.len() == 1 {
            let cof = groups[0].0;
            lower_from(sefa, cof, order, pos + 1, memo)
        } else {
            let mut terms = Vec::new();
            for (cof, values) in groups {
                if cof.is_false() {
                    continue;
                }
                let test = membership(sefa, var, &values);
                let rest = lower_from(sefa, cof, order, pos + 1, memo);
                terms.push(and_simplified(test, rest));
            }
            Expr::disj(terms)
        }
    } else {
        lower_from(sefa, f, order, pos + 1, memo)
    };
    memo.insert((f, pos), result.clone());
    result
}

fn and_simplified(a: Expr, b: Expr) -> Expr {
    match (a.is_true(), b.is_true()) {
        (true, _) => b,
        (_, true) => a,
        _ => Expr::and(a, b),
    }
}

/// Expression for `var ∈ values`, assuming `var` is within its domain.
fn membership(sefa: &Sefa, var: usize, values: &[i64]) -> Expr {
    let v = &sefa.vars[var];
    let all: Vec<i64> = v.domain.values().collect();
    if values.len() == all.len() {
        return Expr::Bool(true);
    }
    let missing: Vec<i64> = all.iter().copied().filter(|x| !values.contains(x)).collect();
    let name = v.name.clone();
    let is_value = |value: i64| -> Expr {
        match (&v.domain, v.kind) {
            (VarDomain::Bool, _) => {
                if value != 0 {
                    Expr::var(name.clone())
                } else {
                    Expr::not(Expr::var(name.clone()))
                }
            }
            (VarDomain::Enum(locs), VarKind::LocationPointer) => Expr::loc(name.clone(), locs[value as usize].clone()),
            (domain, _) => Expr::eq(Expr::var(name.clone()), domain.literal(value)),
        }
    };
    if let VarDomain::Bool = v.domain {
        return is_value(values[0]);
    }
    if missing.len() == 1 && values.len() > 1 {
        return match is_value(missing[0]) {
            Expr::Binary(BinOp::Eq, l, r) => Expr::Binary(BinOp::Ne, l, r),
            e => Expr::not(e),
        };
    }
    match v.domain {
        VarDomain::Int { lo, hi } => {
            let mut sorted = values.to_vec();
            sorted.sort_unstable();
            let mut runs: Vec<(i64, i64)> = Vec::new();
            for x in sorted {
                match runs.last_mut() {
                    Some((_, end)) if *end + 1 == x => *end = x,
                    _ => runs.push((x, x)),
                }
            }
            Expr::disj(runs.into_iter().map(|(a, b)| {
                let x = || Expr::var(name.clone());
                if a == b {
                    Expr::eq(x(), Expr::Int(a))
                } else if a == lo {
                    Expr::binary(BinOp::Le, x(), Expr::Int(b))
                } else if b == hi {
                    Expr::binary(BinOp::Ge, x(), Expr::Int(a))
                } else {
                    Expr::and(
                        Expr::binary(BinOp::Ge, x(), Expr::Int(a)),
                        Expr::binary(BinOp::Le, x(), Expr::Int(b)),
                    )
                }
            }))
        }
        _ => Expr::disj(values.iter().map(|&x| is_value(x))),
    }
}

/// Emission settings. The simplification assumption can be narrowed for
/// debugging.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmitOptions {
    pub simplify: bool,
    pub assume_plant_guards: bool,
    pub assume_plant_invariants: bool,
    pub assume_requirements: bool,
    pub assume_controlled: bool,
}

impl EmitOptions {
    pub fn new(simplify: bool) -> Self {
        EmitOptions {
            simplify,
            assume_plant_guards: true,
            assume_plant_invariants: true,
            assume_requirements: true,
            assume_controlled: true,
        }
    }
}

/// Guard of `event` as emitted, before lowering.
pub fn supervisor_guard(sefa: &mut Sefa, result: &SynthesisResult, event: usize, options: &EmitOptions) -> NodeRef {
    let guard = result.guard_of(event).unwrap_or(NodeRef::FALSE);
    if !options.simplify {
        return guard;
    }
    let mut care = NodeRef::TRUE;
    if options.assume_plant_guards {
        let edges: Vec<usize> = sefa.edges_of(event).collect();
        let mut plant = NodeRef::FALSE;
        for i in edges {
            plant = sefa.manager.or(plant, sefa.edges[i].plant_guard);
        }
        care = sefa.manager.and(care, plant);
    }
    if options.assume_plant_invariants {
        care = sefa.manager.and(care, sefa.plant_invariant);
    }
    if options.assume_requirements {
        care = sefa.manager.and(care, sefa.requirement_needs[event]);
    }
    if options.assume_controlled {
        care = sefa.manager.and(care, result.controlled);
    }
    care = sefa.manager.and(care, sefa.in_range);
    if care.is_false() {
        return NodeRef::FALSE;
    }
    sefa.manager.restrict(guard, care).expect("care set is not empty")
}

/// Initialization predicate added to the output model, before lowering.
pub fn supervisor_initial(sefa: &mut Sefa, result: &SynthesisResult, options: &EmitOptions) -> NodeRef {
    if !options.simplify {
        return result.initial;
    }
    let care = sefa.manager.and(sefa.initial, sefa.in_range);
    if care.is_false() {
        return result.initial;
    }
    sefa.manager.restrict(result.initial, care).expect("care set is not empty")
}

fn fresh_name(spec: &Specification, base: &str) -> String {
    let taken = |n: &str| {
        spec.automata.iter().any(|a| a.name == n)
            || spec.events.iter().any(|e| e.name == n)
            || spec.variables().any(|v| v.name == n)
    };
    if !taken(base) {
        return base.to_string();
    }
    (1..).map(|i| format!("{base}{i}")).find(|n| !taken(n)).unwrap()
}

/// Build the controlled-system model: the plantified input with requirement
/// automata relabeled as supervisors, the controlled initialization and one
/// supervisor automaton guarding the controllable events.
pub fn emit(
    spec: &Specification,
    sefa: &mut Sefa,
    result: &SynthesisResult,
    options: &EmitOptions,
) -> Result<Specification, EmitError> {
    if result.empty {
        return Err(EmitError::EmptySupervisor);
    }
    let mut out = plantify(spec);
    for aut in out.automata.iter_mut() {
        if aut.plantified {
            aut.kind = AutKind::Supervisor;
            aut.plantified = false;
        }
    }
    if options.simplify {
        for inv in out.invariants.iter_mut() {
            if inv.side == Side::Requirement {
                inv.side = Side::Supervisor;
            }
        }
    } else {
        out.invariants.retain(|inv| inv.side != Side::Requirement);
    }
    let init = supervisor_initial(sefa, result, options);
    out.initials.push(lower_bdd_to_expr(sefa, init));

    let mut sup = Automaton::new(fresh_name(&out, "sup"), AutKind::Supervisor);
    let controllable: Vec<String> = spec
        .events
        .iter()
        .filter(|e| e.is_controllable())
        .map(|e| e.name.clone())
        .collect();
    let mut location = Location::new("s");
    location.initial = Some(Expr::Bool(true));
    location.marked = Some(Expr::Bool(true));
    for name in &controllable {
        let guard = match sefa.event_index(name) {
            Some(ev) => {
                let g = supervisor_guard(sefa, result, ev, options);
                lower_bdd_to_expr(sefa, g)
            }
            // No automaton uses the event, so it can never occur.
            None => Expr::Bool(true),
        };
        location.edges.push(Edge {
            events: vec![name.clone()],
            guard,
            updates: Vec::new(),
            target: 0,
        });
    }
    sup.alphabet = Some(controllable);
    sup.locations.push(location);
    out.automata.push(sup);
    Ok(out)
}
