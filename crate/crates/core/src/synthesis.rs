//! Fixed-point synthesis of the maximally permissive supervisor.
//!
//! The controlled-behavior predicate `C` starts as the complement of the
//! forbidden states and is shrunk by three stages until it stabilizes:
//! nonblocking (states that can reach a marked state within `C`),
//! controllability (states that cannot be pushed out of `C` by uncontrollable
//! edges) and, optionally, reachability from the initial states.

use serde::Serialize;
use thiserror::Error;

use crate::bdd::{BddManager, BddMetrics, BddVarId, NodeRef};
use crate::config::{EdgeApplication, SynthesisConfig};
use crate::encode::{build_sefa, set_root, EncodeError, EncodeOptions, Sefa};
use crate::model::{validate_for_synthesis, Diagnostic, Specification};
use crate::order::{order_pipeline, OrderError};
use crate::transform::{linearize, plantify, LinearizedModel};

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error("model has {} problem(s); first: {}", .0.len(), .0[0])]
    Diagnostics(Vec<Diagnostic>),
    #[error(transparent)]
    Order(#[from] OrderError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Backward,
    Forward,
}

/// Apply `n` edges cyclically until a fixed point. `step(i)` applies edge `i`
/// and reports whether new states were found. Returns the number of
/// applications.
///
/// Without early stop, a full pass without progress ends the loop. With early
/// stop, `n` consecutive applications without progress suffice.
pub fn saturate(n: usize, early_stop: bool, mut step: impl FnMut(usize) -> bool) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut applications = 0;
    let mut idle = 0;
    let mut pass_progress = false;
    let mut i = 0;
    loop {
        let grew = step(i);
        applications += 1;
        if grew {
            idle = 0;
            pass_progress = true;
        } else {
            idle += 1;
        }
        if early_stop && idle >= n {
            break;
        }
        i += 1;
        if i == n {
            if !early_stop && !pass_progress {
                break;
            }
            i = 0;
            pass_progress = false;
        }
    }
    applications
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReachResult {
    pub states: NodeRef,
    pub applications: u64,
}

fn all_pairs(sefa: &Sefa) -> (Vec<(BddVarId, BddVarId)>, Vec<(BddVarId, BddVarId)>) {
    let mut to_next = Vec::new();
    for v in &sefa.vars {
        to_next.extend(v.cur.iter().copied().zip(v.next.iter().copied()));
    }
    to_next.sort();
    let to_cur = to_next.iter().map(|&(c, n)| (n, c)).collect();
    (to_next, to_cur)
}

/// Full relation `g ∧ u ∧ x+ = x` (unassigned `x`) of an edge, without the
/// error predicate.
pub fn full_update(sefa: &mut Sefa, edge: usize) -> NodeRef {
    let e = sefa.edges[edge].clone();
    let unassigned: Vec<usize> = (0..sefa.vars.len()).filter(|v| !e.assigned.contains(v)).collect();
    let frames = sefa.frames(unassigned);
    let m = &mut sefa.manager;
    let u = m.and(e.update, frames);
    m.and(e.guard, u)
}

/// One edge application in the legacy style: conjoin, quantify every
/// variable, rename.
fn naive_image(
    m: &mut BddManager,
    dir: Direction,
    p: NodeRef,
    pre: NodeRef,
    error: NodeRef,
    restriction: NodeRef,
    bits: &NaiveBits,
) -> NodeRef {
    match dir {
        Direction::Forward => {
            let a = m.and(p, pre);
            let a = m.diff(a, error);
            let img = m.exists(a, &bits.cur).expect("variables exist");
            let img = m.replace(img, &bits.to_cur).expect("interleaved order");
            m.and(img, restriction)
        }
        Direction::Backward => {
            let shifted = m.replace(p, &bits.to_next).expect("interleaved order");
            let a = m.and(shifted, pre);
            let a = m.diff(a, error);
            m.exists(a, &bits.next).expect("variables exist")
        }
    }
}

struct NaiveBits {
    cur: Vec<BddVarId>,
    next: Vec<BddVarId>,
    to_next: Vec<(BddVarId, BddVarId)>,
    to_cur: Vec<(BddVarId, BddVarId)>,
}

impl NaiveBits {
    fn of(sefa: &Sefa) -> Self {
        let (to_next, to_cur) = all_pairs(sefa);
        NaiveBits {
            cur: sefa.current_bits(),
            next: sefa.next_bits(),
            to_next,
            to_cur,
        }
    }
}

/// Reachability over `edges` from `start`, keeping only states in
/// `restriction`.
pub fn reach(
    sefa: &mut Sefa,
    dir: Direction,
    start: NodeRef,
    edges: &[usize],
    restriction: NodeRef,
    config: &SynthesisConfig,
) -> ReachResult {
    let naive = config.edge_application == EdgeApplication::Naive;
    // Legacy application rebuilds its relations for every call.
    let mut pre = Vec::new();
    let bits = NaiveBits::of(sefa);
    if naive {
        for &e in edges {
            let full = full_update(sefa, e);
            let r = sefa.manager.and(full, restriction);
            sefa.manager.register_root(r);
            pre.push(r);
        }
    }
    let mut p = start;
    sefa.manager.register_root(p);
    let applications = saturate(edges.len(), config.early_stop, |i| {
        let edge = &sefa.edges[edges[i]];
        let (rel, pairs, error) = (edge.rel, edge.pairs, edge.error);
        let m = &mut sefa.manager;
        let img = if naive {
            naive_image(m, dir, p, pre[i], error, restriction, &bits)
        } else {
            match dir {
                Direction::Forward => m.relnext_intersect(p, rel, restriction, pairs),
                Direction::Backward => m.relprev_intersect(p, rel, restriction, pairs),
            }
        };
        let next = m.or(p, img);
        let grew = next != p;
        if grew {
            set_root(m, &mut p, next);
        }
        m.maybe_gc();
        grew
    });
    for r in pre {
        sefa.manager.release_root(r).expect("registered above");
    }
    sefa.manager.release_root(p).expect("registered above");
    ReachResult {
        states: p,
        applications,
    }
}

pub fn brs(
    sefa: &mut Sefa,
    start: NodeRef,
    edges: &[usize],
    restriction: NodeRef,
    config: &SynthesisConfig,
) -> ReachResult {
    reach(sefa, Direction::Backward, start, edges, restriction, config)
}

pub fn frs(
    sefa: &mut Sefa,
    start: NodeRef,
    edges: &[usize],
    restriction: NodeRef,
    config: &SynthesisConfig,
) -> ReachResult {
    reach(sefa, Direction::Forward, start, edges, restriction, config)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stage {
    Nonblocking,
    Controllable,
    Reachable,
    Guards,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageStats {
    pub stage: Stage,
    pub runs: u64,
    pub skipped: u64,
    pub operations: u64,
    pub applications: u64,
}

#[derive(Debug, Clone)]
pub struct SynthesisResult {
    /// Controlled-behavior predicate.
    pub controlled: NodeRef,
    /// Per controllable event (index into `Sefa::events`): disjunction of the
    /// strengthened guards of its edges.
    pub guards: Vec<(usize, NodeRef)>,
    pub initial: NodeRef,
    pub marked: NodeRef,
    pub empty: bool,
    pub rounds: u64,
    pub stages: Vec<StageStats>,
    pub edge_applications: u64,
    pub metrics: BddMetrics,
}

impl SynthesisResult {
    pub fn guard_of(&self, event: usize) -> Option<NodeRef> {
        self.guards.iter().find(|(e, _)| *e == event).map(|&(_, g)| g)
    }
}

struct StageTracker {
    stats: Vec<StageStats>,
}

impl StageTracker {
    fn new() -> Self {
        let stats = [Stage::Nonblocking, Stage::Controllable, Stage::Reachable, Stage::Guards]
            .into_iter()
            .map(|stage| StageStats {
                stage,
                runs: 0,
                skipped: 0,
                operations: 0,
                applications: 0,
            })
            .collect();
        StageTracker { stats }
    }

    fn get(&mut self, stage: Stage) -> &mut StageStats {
        self.stats.iter_mut().find(|s| s.stage == stage).unwrap()
    }
}

/// Compute the controlled behavior and strengthen the controllable guards.
/// The edges of `sefa` are updated in place.
pub fn sscs(sefa: &mut Sefa, config: &SynthesisConfig) -> SynthesisResult {
    let all: Vec<usize> = (0..sefa.edges.len()).collect();
    let uncontrollable: Vec<usize> = all
        .iter()
        .copied()
        .filter(|&i| !sefa.events[sefa.edges[i].event].controllable)
        .collect();
    let mut tracker = StageTracker::new();
    let mut applications = 0;

    let mut c = sefa.manager.not(sefa.forbidden);
    sefa.manager.register_root(c);
    // Last output of each stage, to skip stages whose input is unchanged.
    let mut last = [None::<NodeRef>; 3];
    let stages: &[Stage] = if config.forward {
        &[Stage::Nonblocking, Stage::Controllable, Stage::Reachable]
    } else {
        &[Stage::Nonblocking, Stage::Controllable]
    };
    let mut rounds = 0;
    let mut empty = false;
    let mut stopped_early = false;
    'rounds: loop {
        rounds += 1;
        let before = c;
        sefa.manager.register_root(before);
        for (k, &stage) in stages.iter().enumerate() {
            if config.stage_skipping && last[k] == Some(c) {
                tracker.get(stage).skipped += 1;
                continue;
            }
            let ops = sefa.manager.metrics().operations;
            let next = match stage {
                Stage::Nonblocking => {
                    let start = sefa.manager.and(sefa.marked, c);
                    let r = brs(sefa, start, &all, c, config);
                    applications += r.applications;
                    tracker.get(stage).applications += r.applications;
                    r.states
                }
                Stage::Controllable => {
                    let bad = sefa.manager.not(c);
                    let r = brs(sefa, bad, &uncontrollable, NodeRef::TRUE, config);
                    applications += r.applications;
                    tracker.get(stage).applications += r.applications;
                    sefa.manager.not(r.states)
                }
                _ => {
                    let start = sefa.manager.and(sefa.initial, c);
                    let r = frs(sefa, start, &all, c, config);
                    applications += r.applications;
                    tracker.get(stage).applications += r.applications;
                    r.states
                }
            };
            set_root(&mut sefa.manager, &mut c, next);
            if let Some(old) = last[k].replace(c) {
                sefa.manager.release_root(old).expect("registered");
            }
            sefa.manager.register_root(c);
            let s = tracker.get(stage);
            s.runs += 1;
            s.operations += sefa.manager.metrics().operations - ops;
            if config.stop_on_empty_init {
                let init = sefa.manager.and(sefa.initial, c);
                if init.is_false() {
                    empty = true;
                    stopped_early = true;
                    sefa.manager.release_root(before).expect("registered");
                    break 'rounds;
                }
            }
        }
        sefa.manager.release_root(before).expect("registered");
        if c == before {
            break;
        }
    }
    for old in last.into_iter().flatten() {
        sefa.manager.release_root(old).expect("registered");
    }

    let initial = sefa.manager.and(sefa.initial, c);
    sefa.manager.register_root(initial);
    let marked = sefa.manager.and(sefa.marked, c);
    sefa.manager.register_root(marked);
    empty |= initial.is_false();

    let ops = sefa.manager.metrics().operations;
    let bits = NaiveBits::of(sefa);
    let mut guards = Vec::new();
    for event in 0..sefa.events.len() {
        if !sefa.events[event].controllable {
            continue;
        }
        let edges: Vec<usize> = sefa.edges_of(event).collect();
        let mut guard = NodeRef::FALSE;
        for &i in &edges {
            // Without a fixed point the guards are meaningless.
            let g = if stopped_early {
                NodeRef::FALSE
            } else {
                strengthened_guard(sefa, i, c, config, &bits)
            };
            guard = sefa.manager.or(guard, g);
        }
        // The supervisor sees events, not edges: every edge of the event is
        // allowed wherever the event guard holds.
        for &i in &edges {
            let g = sefa.manager.and(sefa.edges[i].guard, guard);
            let mut slot = sefa.edges[i].guard;
            set_root(&mut sefa.manager, &mut slot, g);
            sefa.edges[i].guard = slot;
            sefa.refresh_relation(i);
        }
        sefa.manager.register_root(guard);
        guards.push((event, guard));
    }
    let s = tracker.get(Stage::Guards);
    s.runs = 1;
    s.operations = sefa.manager.metrics().operations - ops;

    SynthesisResult {
        controlled: c,
        guards,
        initial,
        marked,
        empty,
        rounds,
        stages: tracker.stats,
        edge_applications: applications,
        metrics: sefa.manager.metrics(),
    }
}

fn strengthened_guard(
    sefa: &mut Sefa,
    edge: usize,
    c: NodeRef,
    config: &SynthesisConfig,
    bits: &NaiveBits,
) -> NodeRef {
    let e = sefa.edges[edge].clone();
    let back = match config.edge_application {
        EdgeApplication::Compound => sefa.manager.relprev(c, e.rel, e.pairs),
        EdgeApplication::Naive => {
            let pre = full_update(sefa, edge);
            naive_image(&mut sefa.manager, Direction::Backward, c, pre, e.error, NodeRef::TRUE, bits)
        }
    };
    sefa.manager.and(e.guard, back)
}

/// Encode a linearized model under the configured order.
pub fn encode_model(model: &LinearizedModel, config: &SynthesisConfig) -> Result<Sefa, SynthesisError> {
    let order = order_pipeline(model, &config.order)?;
    let options = EncodeOptions {
        granularity: config.granularity,
        plant_invariants: config.plant_invariants,
    };
    Ok(build_sefa(model, &order, options)?)
}

/// Validate, plantify, linearize, order, encode and synthesize.
pub fn synthesize(
    spec: &Specification,
    config: &SynthesisConfig,
) -> Result<(Sefa, SynthesisResult), SynthesisError> {
    let problems = validate_for_synthesis(spec);
    if !problems.is_empty() {
        return Err(SynthesisError::Diagnostics(problems));
    }
    let model = linearize(&plantify(spec));
    let mut sefa = encode_model(&model, config)?;
    let result = sscs(&mut sefa, config);
    Ok((sefa, result))
}
