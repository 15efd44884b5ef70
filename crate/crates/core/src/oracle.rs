//! Explicit-state reference synthesis for small models.
//!
//! States are valuations of the linearized variables over the full
//! bit-representable range of each variable, restricted to the state plant
//! invariants. Values outside a declared domain are forbidden, as in the
//! symbolic encoding.

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use crate::model::{eval, Env, InvKind, Side, Value, VarDomain, VarKind, Variable};
use crate::transform::LinearizedModel;

pub const DEFAULT_STATE_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("state space of {size} valuations exceeds the cap of {cap}")]
    TooManyStates { size: u128, cap: u64 },
}

/// Identifier of an enumerated state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub source: StateId,
    pub target: StateId,
    pub event: usize,
    /// Linearized edge index; `None` for input-variable changes.
    pub edge: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ExplicitEvent {
    pub name: String,
    pub controllable: bool,
}

/// Explicit transition system of a linearized model.
#[derive(Debug, Clone)]
pub struct ExplicitTs {
    pub variables: Vec<Variable>,
    pub states: Vec<Vec<i64>>,
    pub events: Vec<ExplicitEvent>,
    /// Plant transitions, requirement state/event invariants of controllable
    /// events applied.
    pub transitions: Vec<Transition>,
    pub initial: Vec<bool>,
    pub marked: Vec<bool>,
    pub forbidden: Vec<bool>,
    index: HashMap<Vec<i64>, StateId>,
}

struct StateEnv<'a> {
    names: &'a HashMap<&'a str, usize>,
    bools: &'a [bool],
    literals: &'a HashMap<String, i64>,
    values: &'a [i64],
}

impl Env for StateEnv<'_> {
    fn value(&self, var: &str) -> Value {
        let i = self.names[var];
        if self.bools[i] {
            Value::Bool(self.values[i] != 0)
        } else {
            Value::Int(self.values[i])
        }
    }

    fn in_location(&self, _aut: &str, _loc: &str) -> bool {
        unreachable!("linearized models have no location references")
    }

    fn literal(&self, name: &str) -> i64 {
        self.literals[name]
    }
}

fn bit_range(v: &Variable) -> i64 {
    1i64 << v.domain.bit_width()
}

impl ExplicitTs {
    pub fn state_id(&self, values: &[i64]) -> Option<StateId> {
        self.index.get(values).copied()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn event_index(&self, name: &str) -> Option<usize> {
        self.events.iter().position(|e| e.name == name)
    }
}

/// Enumerate the transition system of `model`.
pub fn enumerate(model: &LinearizedModel, cap: u64) -> Result<ExplicitTs, OracleError> {
    let vars = &model.variables;
    let size: u128 = vars.iter().map(|v| bit_range(v) as u128).product();
    if size > cap as u128 {
        return Err(OracleError::TooManyStates { size, cap });
    }
    let names: HashMap<&str, usize> = vars.iter().enumerate().map(|(i, v)| (v.name.as_str(), i)).collect();
    let bools: Vec<bool> = vars.iter().map(|v| v.domain.is_bool()).collect();
    let mut literals = HashMap::new();
    for v in vars {
        if let (VarDomain::Enum(lits), false) = (&v.domain, v.kind == VarKind::LocationPointer) {
            for (i, l) in lits.iter().enumerate() {
                literals.insert(l.clone(), i as i64);
            }
        }
    }
    let holds = |e: &crate::model::Expr, values: &[i64]| {
        let env = StateEnv {
            names: &names,
            bools: &bools,
            literals: &literals,
            values,
        };
        eval(e, &env).as_bool()
    };
    let value_of = |e: &crate::model::Expr, values: &[i64]| {
        let env = StateEnv {
            names: &names,
            bools: &bools,
            literals: &literals,
            values,
        };
        eval(e, &env).as_int()
    };

    let mut events: Vec<ExplicitEvent> = model
        .events
        .iter()
        .map(|e| ExplicitEvent {
            name: e.name.clone(),
            controllable: e.is_controllable(),
        })
        .collect();
    let mut input_events = Vec::new();
    for (i, v) in vars.iter().enumerate() {
        if v.kind == VarKind::Input {
            input_events.push((events.len(), i));
            events.push(ExplicitEvent {
                name: v.name.clone(),
                controllable: false,
            });
        }
    }
    let event_of: HashMap<&str, usize> = events.iter().enumerate().map(|(i, e)| (e.name.as_str(), i)).collect();

    let plant_inv: Vec<_> = model
        .invariants
        .iter()
        .filter(|i| i.side == Side::Plant && i.kind == InvKind::State)
        .map(|i| &i.predicate)
        .collect();
    let req_inv: Vec<_> = model
        .invariants
        .iter()
        .filter(|i| i.side != Side::Plant && i.kind == InvKind::State)
        .map(|i| &i.predicate)
        .collect();
    // Per event: (predicate, must hold) for plant and requirement sides.
    let mut plant_needs: Vec<Vec<(&crate::model::Expr, bool)>> = vec![Vec::new(); events.len()];
    let mut req_needs: Vec<Vec<(&crate::model::Expr, bool)>> = vec![Vec::new(); events.len()];
    for inv in &model.invariants {
        let (ev, positive) = match &inv.kind {
            InvKind::State => continue,
            InvKind::Needs(ev) => (ev, true),
            InvKind::Disables(ev) => (ev, false),
        };
        let Some(&k) = event_of.get(ev.as_str()) else {
            continue;
        };
        let list = if inv.side == Side::Plant {
            &mut plant_needs[k]
        } else {
            &mut req_needs[k]
        };
        list.push((&inv.predicate, positive));
    }
    let needs_hold = |list: &[(&crate::model::Expr, bool)], values: &[i64]| {
        list.iter().all(|(p, positive)| holds(p, values) == *positive)
    };

    // States: all valuations satisfying the plant invariants.
    let mut states = Vec::new();
    let mut index = HashMap::new();
    let mut values = vec![0i64; vars.len()];
    let radix: Vec<i64> = vars.iter().map(bit_range).collect();
    'enumerate: loop {
        if plant_inv.iter().all(|p| holds(p, &values)) {
            index.insert(values.clone(), StateId(states.len()));
            states.push(values.clone());
        }
        // Odometer, last variable fastest.
        let mut k = vars.len();
        loop {
            if k == 0 {
                break 'enumerate;
            }
            k -= 1;
            values[k] += 1;
            if values[k] < radix[k] {
                break;
            }
            values[k] = 0;
        }
    }

    let n = states.len();
    let mut initial = vec![false; n];
    let mut marked = vec![false; n];
    let mut forbidden = vec![false; n];
    let mut transitions = Vec::new();
    for (sid, s) in states.iter().enumerate() {
        let in_domain = vars.iter().zip(s).all(|(v, &x)| v.domain.contains(x));
        initial[sid] = model.initials.iter().all(|p| holds(p, s))
            && vars.iter().zip(s).all(|(v, &x)| {
                if v.initial.is_empty() {
                    v.domain.contains(x)
                } else {
                    v.initial.contains(&x)
                }
            });
        marked[sid] = model.markeds.iter().all(|p| holds(p, s));
        let mut bad = !in_domain || !req_inv.iter().all(|p| holds(p, s));

        for (ei, edge) in model.edges.iter().enumerate() {
            let ev = event_of[edge.event.as_str()];
            let controllable = events[ev].controllable;
            if !holds(&edge.guard, s) {
                continue;
            }
            let plant_ok = needs_hold(&plant_needs[ev], s);
            let mut target = s.clone();
            let mut error = false;
            for (var, rhs) in &edge.updates {
                let vi = names[var.as_str()];
                let value = if bools[vi] {
                    holds(rhs, s) as i64
                } else {
                    value_of(rhs, s)
                };
                if value < 0 || value >= radix[vi] {
                    error = true;
                }
                target[vi] = value;
            }
            if error {
                if !controllable && plant_ok {
                    bad = true;
                }
                continue;
            }
            let Some(&tid) = index.get(&target) else {
                continue;
            };
            if !plant_ok {
                continue;
            }
            let req_ok = needs_hold(&req_needs[ev], s);
            if controllable {
                if !req_ok {
                    continue;
                }
            } else if !req_ok {
                bad = true;
            }
            transitions.push(Transition {
                source: StateId(sid),
                target: tid,
                event: ev,
                edge: Some(ei),
            });
        }
        for &(ev, vi) in &input_events {
            for value in vars[vi].domain.values() {
                if value == s[vi] {
                    continue;
                }
                let mut target = s.clone();
                target[vi] = value;
                if let Some(&tid) = index.get(&target) {
                    transitions.push(Transition {
                        source: StateId(sid),
                        target: tid,
                        event: ev,
                        edge: None,
                    });
                }
            }
        }
        forbidden[sid] = bad;
    }
    Ok(ExplicitTs {
        variables: vars.clone(),
        states,
        events,
        transitions,
        initial,
        marked,
        forbidden,
        index,
    })
}

/// Result of explicit synthesis.
#[derive(Debug, Clone)]
pub struct ExplicitResult {
    pub controlled: Vec<bool>,
    /// Per controllable event index: states where the supervisor allows it.
    pub enabled: Vec<(usize, Vec<bool>)>,
    pub rounds: usize,
}

impl ExplicitResult {
    pub fn controlled_count(&self) -> usize {
        self.controlled.iter().filter(|&&b| b).count()
    }

    pub fn enabled_of(&self, event: usize) -> Option<&[bool]> {
        self.enabled.iter().find(|(e, _)| *e == event).map(|(_, v)| v.as_slice())
    }
}

fn closure(
    n: usize,
    seeds: impl Iterator<Item = usize>,
    adjacency: &[Vec<usize>],
    allowed: impl Fn(usize) -> bool,
) -> Vec<bool> {
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    for s in seeds {
        if !seen[s] {
            seen[s] = true;
            queue.push_back(s);
        }
    }
    while let Some(s) = queue.pop_front() {
        for &t in &adjacency[s] {
            if !seen[t] && allowed(t) {
                seen[t] = true;
                queue.push_back(t);
            }
        }
    }
    seen
}

/// Compute the supremal controlled behavior over explicit sets.
pub fn explicit_synthesis(ts: &ExplicitTs, forward: bool) -> ExplicitResult {
    let n = ts.len();
    let mut pred_all = vec![Vec::new(); n];
    let mut pred_unc = vec![Vec::new(); n];
    let mut succ_all = vec![Vec::new(); n];
    for t in &ts.transitions {
        pred_all[t.target.0].push(t.source.0);
        succ_all[t.source.0].push(t.target.0);
        if !ts.events[t.event].controllable {
            pred_unc[t.target.0].push(t.source.0);
        }
    }
    let mut c: Vec<bool> = ts.forbidden.iter().map(|f| !f).collect();
    let mut rounds = 0;
    loop {
        rounds += 1;
        let before = c.clone();
        let cur = c.clone();
        c = closure(n, (0..n).filter(|&s| ts.marked[s] && cur[s]), &pred_all, |s| cur[s]);
        let cur = c.clone();
        let bad = closure(n, (0..n).filter(|&s| !cur[s]), &pred_unc, |_| true);
        c = bad.iter().map(|b| !b).collect();
        if forward {
            let cur = c.clone();
            c = closure(n, (0..n).filter(|&s| ts.initial[s] && cur[s]), &succ_all, |s| cur[s]);
        }
        if c == before {
            break;
        }
    }
    let mut enabled: Vec<(usize, Vec<bool>)> = ts
        .events
        .iter()
        .enumerate()
        .filter(|(_, e)| e.controllable)
        .map(|(i, _)| (i, vec![false; n]))
        .collect();
    for t in &ts.transitions {
        if !ts.events[t.event].controllable || !c[t.target.0] {
            continue;
        }
        let slot = enabled.iter_mut().find(|(e, _)| *e == t.event).unwrap();
        slot.1[t.source.0] = true;
    }
    ExplicitResult {
        controlled: c,
        enabled,
        rounds,
    }
}

/// Number of states reachable from the initial states.
pub fn reachable_count(ts: &ExplicitTs, within: Option<&[bool]>, result: Option<&ExplicitResult>) -> usize {
    let n = ts.len();
    let allowed = |s: usize| within.is_none_or(|w| w[s]);
    let mut succ = vec![Vec::new(); n];
    for t in &ts.transitions {
        if let Some(r) = result {
            if ts.events[t.event].controllable
                && !r.enabled_of(t.event).is_some_and(|en| en[t.source.0])
            {
                continue;
            }
        }
        succ[t.source.0].push(t.target.0);
    }
    closure(n, (0..n).filter(|&s| ts.initial[s] && allowed(s)), &succ, allowed)
        .iter()
        .filter(|&&b| b)
        .count()
}

/// Agreement between symbolic synthesis and the explicit reference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Comparison {
    pub states: usize,
    pub oracle_controlled: usize,
    pub symbolic_controlled: usize,
    /// States on which the controlled sets differ.
    pub controlled_mismatches: usize,
    /// Controllable events whose guards differ on some state.
    pub guard_mismatches: Vec<String>,
    pub oracle_empty: bool,
    pub symbolic_empty: bool,
}

impl Comparison {
    pub fn agrees(&self) -> bool {
        self.controlled_mismatches == 0 && self.guard_mismatches.is_empty() && self.oracle_empty == self.symbolic_empty
    }
}

#[derive(Debug, Error)]
pub enum CompareError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Synthesis(#[from] crate::synthesis::SynthesisError),
}

/// Evaluates predicates of a [`Sefa`](crate::encode::Sefa) in explicit
/// states, which list values in variable order.
pub struct StateProbe {
    bit_of: Vec<Option<(usize, usize)>>,
}

impl StateProbe {
    pub fn new(sefa: &crate::encode::Sefa) -> Self {
        let mut bit_of = vec![None; sefa.manager.num_vars() as usize];
        for (vi, v) in sefa.vars.iter().enumerate() {
            for (k, &b) in v.cur.iter().enumerate() {
                bit_of[b.0 as usize] = Some((vi, k));
            }
        }
        StateProbe { bit_of }
    }

    pub fn holds(&self, sefa: &crate::encode::Sefa, f: crate::bdd::NodeRef, values: &[i64]) -> bool {
        sefa.manager.eval(f, |b| {
            self.bit_of[b.0 as usize].is_some_and(|(vi, k)| (values[vi] >> k) & 1 == 1)
        })
    }
}

/// Run both synthesis procedures on `spec` and compare controlled states and
/// controllable guards on every enumerated state. Early termination on an
/// empty initial set is disabled so that both compute the full fixed point.
pub fn compare(
    spec: &crate::model::Specification,
    config: &crate::config::SynthesisConfig,
    cap: u64,
) -> Result<Comparison, CompareError> {
    let problems = crate::model::validate_for_synthesis(spec);
    if !problems.is_empty() {
        return Err(crate::synthesis::SynthesisError::Diagnostics(problems).into());
    }
    let model = crate::transform::linearize(&crate::transform::plantify(spec));
    let ts = enumerate(&model, cap)?;
    let explicit = explicit_synthesis(&ts, config.forward);
    Ok(compare_with(&model, &ts, &explicit, config)?)
}

/// Compare symbolic synthesis of `model` under `config` with a precomputed
/// explicit result over `ts`.
pub fn compare_with(
    model: &LinearizedModel,
    ts: &ExplicitTs,
    explicit: &ExplicitResult,
    config: &crate::config::SynthesisConfig,
) -> Result<Comparison, crate::synthesis::SynthesisError> {
    let mut config = config.clone();
    config.stop_on_empty_init = false;
    let mut sefa = crate::synthesis::encode_model(model, &config)?;
    let result = crate::synthesis::sscs(&mut sefa, &config);
    let probe = StateProbe::new(&sefa);

    let mut controlled_mismatches = 0;
    let mut symbolic_controlled = 0;
    for (sid, values) in ts.states.iter().enumerate() {
        let sym = probe.holds(&sefa, result.controlled, values);
        symbolic_controlled += sym as usize;
        if sym != explicit.controlled[sid] {
            controlled_mismatches += 1;
        }
    }
    let mut guard_mismatches = Vec::new();
    for (ev, enabled) in &explicit.enabled {
        let name = &ts.events[*ev].name;
        let guard = sefa
            .event_index(name)
            .and_then(|k| result.guard_of(k))
            .unwrap_or(crate::bdd::NodeRef::FALSE);
        let differs = ts
            .states
            .iter()
            .enumerate()
            .any(|(sid, values)| probe.holds(&sefa, guard, values) != enabled[sid]);
        if differs {
            guard_mismatches.push(name.clone());
        }
    }
    let oracle_empty = !(0..ts.len()).any(|s| ts.initial[s] && explicit.controlled[s]);
    Ok(Comparison {
        states: ts.len(),
        oracle_controlled: explicit.controlled_count(),
        symbolic_controlled,
        controlled_mismatches,
        guard_mismatches,
        oracle_empty,
        symbolic_empty: result.empty,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;
    use crate::transform::{linearize, plantify};

    fn ts_of(text: &str) -> ExplicitTs {
        let spec = parse(text, "t").unwrap();
        enumerate(&linearize(&plantify(&spec)), DEFAULT_STATE_CAP).unwrap()
    }

    #[test]
    fn input_flip_has_one_transition_per_state() {
        let ts = ts_of("input bool b;\n");
        assert_eq!(ts.len(), 2);
        assert_eq!(ts.transitions.len(), 2);
        for t in &ts.transitions {
            assert_ne!(ts.states[t.source.0], ts.states[t.target.0]);
        }
    }

    #[test]
    fn uncontrollable_path_to_forbidden_excludes_source() {
        let ts = ts_of(
            "uncontrollable u;\nplant P {\n  location A:\n    initial;\n    marked;\n    edge u goto B;\n  location B:\n    marked;\n}\nrequirement invariant not P.B;\n",
        );
        let r = explicit_synthesis(&ts, false);
        assert_eq!(r.controlled_count(), 0);
    }

    #[test]
    fn overflow_is_a_hazard_only_when_uncontrollable() {
        let ts = ts_of(
            "uncontrollable inc;\nplant P {\n  disc int[0..5] y = 0;\n  location L:\n    initial;\n    marked;\n    edge inc do y := y + 1;\n}\n",
        );
        // 3 bits: y = 7 overflows; 6 and 7 are outside the domain.
        let forbidden: Vec<i64> = (0..ts.len()).filter(|&s| ts.forbidden[s]).map(|s| ts.states[s][0]).collect();
        assert_eq!(forbidden, vec![6, 7]);
        assert_eq!(ts.transitions.len(), 7);
        let r = explicit_synthesis(&ts, false);
        assert_eq!(r.controlled_count(), 0);
    }

    #[test]
    fn cap_is_enforced() {
        let spec = parse("input int[0..1000] a;\ninput int[0..1000] b;\n", "t").unwrap();
        let lin = linearize(&spec);
        assert!(matches!(enumerate(&lin, 1000), Err(OracleError::TooManyStates { .. })));
    }
}
