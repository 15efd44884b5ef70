//! Plantification of requirement automata and linearization of the parallel
//! composition into a single automaton with self-loop edges.

use std::collections::HashMap;

use crate::model::*;

/// Turn every requirement automaton into a plant that never blocks, moving
/// its restrictions into `disables` requirement invariants.
pub fn plantify(spec: &Specification) -> Specification {
    let mut out = spec.clone();
    let mut added = Vec::new();
    for aut in out.automata.iter_mut() {
        if aut.kind != AutKind::Requirement {
            continue;
        }
        let alphabet = aut.alphabet();
        let aut_name = aut.name.clone();
        for (idx, loc) in aut.locations.iter_mut().enumerate() {
            for event in &alphabet {
                let guards: Vec<Expr> = loc
                    .edges
                    .iter()
                    .filter(|e| e.events.contains(event))
                    .map(|e| e.guard.clone())
                    .collect();
                // Some edge is always enabled: nothing to block, nothing to add.
                if guards.iter().any(Expr::is_true) {
                    continue;
                }
                let blocked = if guards.is_empty() {
                    Expr::Bool(true)
                } else {
                    Expr::not(Expr::disj(guards))
                };
                loc.edges.push(Edge {
                    events: vec![event.clone()],
                    guard: blocked.clone(),
                    updates: Vec::new(),
                    target: idx,
                });
                let in_loc = Expr::loc(aut_name.clone(), loc.name.clone());
                let predicate = if blocked.is_true() {
                    in_loc
                } else {
                    Expr::and(in_loc, blocked)
                };
                added.push(Invariant {
                    kind: InvKind::Disables(event.clone()),
                    side: Side::Requirement,
                    predicate,
                });
            }
        }
        aut.kind = AutKind::Plant;
        aut.plantified = true;
    }
    out.invariants.extend(added);
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearizedEdge {
    pub event: String,
    pub guard: Expr,
    pub updates: Vec<(String, Expr)>,
}

/// The composition of all automata as one automaton with a single location.
/// Location references have been replaced by comparisons on location
/// pointer variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearizedModel {
    pub events: Vec<Event>,
    pub variables: Vec<Variable>,
    pub edges: Vec<LinearizedEdge>,
    pub initials: Vec<Expr>,
    pub markeds: Vec<Expr>,
    pub invariants: Vec<Invariant>,
    /// Automaton name to location names, for every automaton with a pointer.
    pub pointers: Vec<(String, Vec<String>)>,
    /// Non-fatal findings, such as events no automaton synchronizes on.
    pub warnings: Vec<Diagnostic>,
}

impl LinearizedModel {
    pub fn variable(&self, name: &str) -> Option<&Variable> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn event(&self, name: &str) -> Option<&Event> {
        self.events.iter().find(|e| e.name == name)
    }

    /// Render as a single-location plant in `.efa` syntax, for inspection.
    /// Pointer comparisons print as integers.
    pub fn to_efa(&self) -> String {
        let mut aut = Automaton::new("linearized", AutKind::Plant);
        aut.variables = self
            .variables
            .iter()
            .filter(|v| v.kind != VarKind::Input)
            .map(|v| Variable {
                kind: VarKind::Discrete,
                ..v.clone()
            })
            .collect();
        let mut loc = Location::new("l");
        loc.initial = Some(Expr::Bool(true));
        loc.marked = Some(Expr::Bool(true));
        loc.edges = self
            .edges
            .iter()
            .map(|e| Edge {
                events: vec![e.event.clone()],
                guard: e.guard.clone(),
                updates: e.updates.clone(),
                target: 0,
            })
            .collect();
        aut.locations.push(loc);
        let spec = Specification {
            events: self.events.clone(),
            inputs: self
                .variables
                .iter()
                .filter(|v| v.kind == VarKind::Input)
                .cloned()
                .collect(),
            automata: vec![aut],
            initials: self.initials.clone(),
            markeds: self.markeds.clone(),
            invariants: self.invariants.clone(),
        };
        crate::parser::unparse(&spec)
    }
}

struct LocResolver {
    /// Automaton name to (has pointer, location names).
    automata: HashMap<String, (bool, Vec<String>)>,
}

impl LocResolver {
    fn at(&self, aut: &str, loc: usize) -> Expr {
        let (pointer, _) = &self.automata[aut];
        if *pointer {
            Expr::eq(Expr::var(aut), Expr::Int(loc as i64))
        } else {
            Expr::Bool(true)
        }
    }

    fn resolve(&self, e: &Expr) -> Expr {
        e.map_leaves(&|leaf| match leaf {
            Expr::Loc { aut, loc } => {
                let (_, names) = &self.automata[aut];
                let idx = names.iter().position(|n| n == loc).unwrap_or(0);
                Some(self.at(aut, idx))
            }
            _ => None,
        })
    }
}

fn and_simplified(parts: impl IntoIterator<Item = Expr>) -> Expr {
    Expr::conj(parts.into_iter().filter(|p| !p.is_true()))
}

/// Eliminate the parallel composition. Expects a plantified specification.
pub fn linearize(spec: &Specification) -> LinearizedModel {
    let resolver = LocResolver {
        automata: spec
            .automata
            .iter()
            .map(|a| {
                (
                    a.name.clone(),
                    (
                        a.locations.len() > 1,
                        a.locations.iter().map(|l| l.name.clone()).collect(),
                    ),
                )
            })
            .collect(),
    };

    let mut variables: Vec<Variable> = spec.inputs.clone();
    let mut pointers = Vec::new();
    for aut in &spec.automata {
        if aut.locations.len() > 1 {
            let names: Vec<String> = aut.locations.iter().map(|l| l.name.clone()).collect();
            let initial: Vec<i64> = Vec::new();
            variables.push(Variable {
                name: aut.name.clone(),
                domain: VarDomain::Enum(names.clone()),
                kind: VarKind::LocationPointer,
                initial,
            });
            pointers.push((aut.name.clone(), names));
        }
        variables.extend(aut.variables.iter().cloned());
    }

    let alphabets: Vec<Vec<String>> = spec.automata.iter().map(|a| a.alphabet()).collect();
    let mut edges = Vec::new();
    let mut warnings = Vec::new();
    for event in &spec.events {
        // Per synchronizing automaton, its edges for this event.
        let mut choices: Vec<Vec<(&Automaton, usize, &Edge)>> = Vec::new();
        for (aut, alphabet) in spec.automata.iter().zip(&alphabets) {
            if !alphabet.contains(&event.name) {
                continue;
            }
            choices.push(
                aut.edges()
                    .filter(|(_, e)| e.events.contains(&event.name))
                    .map(|(src, e)| (aut, src, e))
                    .collect(),
            );
        }
        if choices.is_empty() {
            warnings.push(Diagnostic {
                element: format!("event {}", event.name),
                message: "not in the alphabet of any automaton; it gets no edges".into(),
            });
            continue;
        }
        if choices.iter().any(|c| c.is_empty()) {
            continue;
        }
        let mut pick = vec![0usize; choices.len()];
        loop {
            let mut guard = Vec::new();
            let mut updates = Vec::new();
            for (c, &k) in choices.iter().zip(&pick) {
                let (aut, src, edge) = c[k];
                guard.push(resolver.at(&aut.name, src));
                guard.push(resolver.resolve(&edge.guard));
                if edge.target != src && aut.locations.len() > 1 {
                    updates.push((aut.name.clone(), Expr::Int(edge.target as i64)));
                }
                for (var, rhs) in &edge.updates {
                    updates.push((var.clone(), resolver.resolve(rhs)));
                }
            }
            edges.push(LinearizedEdge {
                event: event.name.clone(),
                guard: and_simplified(guard),
                updates,
            });
            // Advance the odometer, last automaton fastest.
            let mut pos = pick.len();
            let exhausted = loop {
                if pos == 0 {
                    break true;
                }
                pos -= 1;
                pick[pos] += 1;
                if pick[pos] < choices[pos].len() {
                    break false;
                }
                pick[pos] = 0;
            };
            if exhausted {
                break;
            }
        }
    }

    let per_automaton = |select: fn(&Location) -> &Option<Expr>| -> Vec<Expr> {
        spec.automata
            .iter()
            .map(|aut| {
                Expr::disj(aut.locations.iter().enumerate().filter_map(|(i, loc)| {
                    select(loc)
                        .as_ref()
                        .map(|p| and_simplified([resolver.at(&aut.name, i), resolver.resolve(p)]))
                }))
            })
            .collect()
    };
    let mut initials = per_automaton(|l| &l.initial);
    initials.extend(spec.initials.iter().map(|p| resolver.resolve(p)));
    let mut markeds = per_automaton(|l| &l.marked);
    markeds.extend(spec.markeds.iter().map(|p| resolver.resolve(p)));

    let invariants = spec
        .invariants
        .iter()
        .map(|inv| Invariant {
            predicate: resolver.resolve(&inv.predicate),
            ..inv.clone()
        })
        .collect();

    LinearizedModel {
        events: spec.events.clone(),
        variables,
        edges,
        initials,
        markeds,
        invariants,
        pointers,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{expr_to_string, parse};

    #[test]
    fn plantify_adds_blocking_self_loops() {
        let spec = parse(
            "controllable e, f;\nrequirement R {\n  disc int[0..3] x;\n  alphabet e, f;\n  location L:\n    initial;\n    edge e when x = 1;\n    edge e when x = 2;\n}\n",
            "t",
        )
        .unwrap();
        let out = plantify(&spec);
        let aut = &out.automata[0];
        assert_eq!(aut.kind, AutKind::Plant);
        assert!(aut.plantified);
        let edges = &aut.locations[0].edges;
        assert_eq!(edges.len(), 4);
        assert_eq!(expr_to_string(&edges[2].guard), "not (x = 1 or x = 2)");
        assert!(edges[3].guard.is_true());
        assert_eq!(out.invariants.len(), 2);
        assert_eq!(
            expr_to_string(&out.invariants[0].predicate),
            "R.L and not (x = 1 or x = 2)"
        );
        assert_eq!(out.invariants[0].kind, InvKind::Disables("e".into()));
        assert_eq!(expr_to_string(&out.invariants[1].predicate), "R.L");
    }

    #[test]
    fn plantify_without_requirements_is_identity() {
        let spec = parse("controllable a;\nplant P {\n  location L:\n    initial;\n    edge a;\n}\n", "t").unwrap();
        assert_eq!(plantify(&spec), spec);
    }

    #[test]
    fn single_location_has_no_pointer() {
        let spec = parse("controllable a;\nplant P {\n  disc bool b;\n  location L:\n    initial;\n    edge a when b;\n}\n", "t").unwrap();
        let lin = linearize(&spec);
        assert_eq!(lin.variables.len(), 1);
        assert_eq!(lin.edges.len(), 1);
        assert_eq!(lin.edges[0].guard, Expr::var("b"));
        assert!(lin.edges[0].updates.is_empty());
        assert_eq!(lin.initials, vec![Expr::Bool(true)]);
    }

    #[test]
    fn missing_edges_block_the_event() {
        let spec = parse(
            "controllable a;\nplant P {\n  location L:\n    initial;\n    edge a;\n}\nplant Q {\n  alphabet a;\n  location M:\n    initial;\n}\n",
            "t",
        )
        .unwrap();
        assert!(linearize(&spec).edges.is_empty());
    }

    #[test]
    fn unused_event_warns() {
        let spec = parse("controllable a;\nplant P {\n  location L:\n    initial;\n}\n", "t").unwrap();
        let lin = linearize(&spec);
        assert!(lin.edges.is_empty());
        assert_eq!(lin.warnings.len(), 1);
    }
}
