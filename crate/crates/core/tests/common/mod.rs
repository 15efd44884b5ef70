//! Shared helpers for the integration tests: the shipped models and a seeded
//! random model generator.

#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::PathBuf;

use efasynth::model::{validate_for_synthesis, Specification};
use efasynth::parser::parse;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn models_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

pub fn model_text(name: &str) -> String {
    let path = models_dir().join(format!("{name}.efa"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()))
}

pub fn load_model(name: &str) -> Specification {
    parse(&model_text(name), name).expect("shipped model parses")
}

/// Names of the shipped models, sorted.
pub fn shipped_models() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(models_dir())
        .expect("models directory")
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".efa") && !n.ends_with(".sup.efa"))
        .map(|n| n.trim_end_matches(".efa").to_string())
        .collect();
    names.sort();
    names
}

#[derive(Clone)]
enum Kind {
    Bool,
    Int(i64, i64),
}

#[derive(Clone)]
struct GenVar {
    name: String,
    kind: Kind,
    input: bool,
    owner: Option<usize>,
}

struct GenAut {
    name: String,
    requirement: bool,
    locations: Vec<String>,
}

struct Gen {
    rng: ChaCha8Rng,
    vars: Vec<GenVar>,
    auts: Vec<GenAut>,
    controllable: Vec<String>,
    uncontrollable: Vec<String>,
}

impl Gen {
    fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        items.choose(&mut self.rng).expect("nonempty")
    }

    fn events(&self) -> Vec<String> {
        self.controllable.iter().chain(&self.uncontrollable).cloned().collect()
    }

    fn int_vars(&self, allow_inputs: bool) -> Vec<GenVar> {
        self.vars
            .iter()
            .filter(|v| matches!(v.kind, Kind::Int(..)) && (allow_inputs || !v.input))
            .cloned()
            .collect()
    }

    fn bool_vars(&self, allow_inputs: bool) -> Vec<GenVar> {
        self.vars
            .iter()
            .filter(|v| matches!(v.kind, Kind::Bool) && (allow_inputs || !v.input))
            .cloned()
            .collect()
    }

    fn atom(&mut self, allow_inputs: bool) -> String {
        let ints = self.int_vars(allow_inputs);
        let bools = self.bool_vars(allow_inputs);
        for _ in 0..8 {
            match self.rng.gen_range(0..5) {
                0 | 1 if !ints.is_empty() => {
                    let v = self.pick(&ints).clone();
                    let Kind::Int(lo, hi) = v.kind else { unreachable!() };
                    let c = self.rng.gen_range(lo - 1..=hi + 1);
                    let op = *self.pick(&["<", "<=", "=", "!=", ">=", ">"]);
                    return format!("{} {op} {c}", v.name);
                }
                2 if ints.len() >= 2 => {
                    let a = self.pick(&ints).clone();
                    let b = self.pick(&ints).clone();
                    if a.name == b.name {
                        continue;
                    }
                    return match self.rng.gen_range(0..3) {
                        0 => format!("{} <= {}", a.name, b.name),
                        1 => format!("{} + {} > {}", a.name, b.name, self.rng.gen_range(0..5)),
                        _ => format!("{} - {} = {}", a.name, b.name, self.rng.gen_range(-2..3)),
                    };
                }
                3 if !bools.is_empty() => {
                    let v = self.pick(&bools).clone();
                    return if self.rng.gen_bool(0.5) {
                        v.name
                    } else {
                        format!("not {}", v.name)
                    };
                }
                4 => {
                    let multi: Vec<usize> = (0..self.auts.len()).filter(|&i| self.auts[i].locations.len() > 1).collect();
                    if multi.is_empty() {
                        continue;
                    }
                    let a = *self.pick(&multi);
                    let loc = self.pick(&self.auts[a].locations.clone()).clone();
                    return format!("{}.{loc}", self.auts[a].name);
                }
                _ => {}
            }
        }
        (*self.pick(&["true", "false"])).to_string()
    }

    fn predicate(&mut self, allow_inputs: bool) -> String {
        let a = self.atom(allow_inputs);
        match self.rng.gen_range(0..6) {
            0 => format!("{a} and {}", self.atom(allow_inputs)),
            1 => format!("{a} or {}", self.atom(allow_inputs)),
            2 => format!("not ({a})"),
            _ => a,
        }
    }

    fn update(&mut self, var: &GenVar) -> String {
        match var.kind {
            Kind::Bool => match self.rng.gen_range(0..3) {
                0 => format!("not {}", var.name),
                1 => (*self.pick(&["true", "false"])).to_string(),
                _ => self.atom(true),
            },
            Kind::Int(lo, hi) => {
                let others: Vec<GenVar> = self.int_vars(true).into_iter().filter(|v| v.name != var.name).collect();
                match self.rng.gen_range(0..7) {
                    0 => format!("{} + 1", var.name),
                    1 => format!("{} - 1", var.name),
                    2 => self.rng.gen_range(lo..=hi).to_string(),
                    3 if !others.is_empty() => self.pick(&others).name.clone(),
                    4 if !others.is_empty() => format!("{} + {}", var.name, self.pick(&others).name),
                    5 => format!("({} + 1) mod {}", var.name, hi - lo + 1 + self.rng.gen_range(0..2)),
                    6 => format!("{} + -2", var.name),
                    _ => format!("{} + 1", var.name),
                }
            }
        }
    }
}

fn type_name(kind: &Kind) -> String {
    match kind {
        Kind::Bool => "bool".into(),
        Kind::Int(lo, hi) => format!("int[{lo}..{hi}]"),
    }
}

/// A random model in `.efa` syntax: at most six variables (location pointers
/// included), domains of at most four values, optional inputs, both kinds of
/// events, every invariant kind and optionally a requirement automaton.
/// Plant state invariants never mention input variables.
pub fn random_model_text(seed: u64) -> String {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        vars: Vec::new(),
        auts: Vec::new(),
        controllable: Vec::new(),
        uncontrollable: Vec::new(),
    };
    let n_plants = g.rng.gen_range(1..=2);
    let with_req = g.rng.gen_bool(0.4);
    let n_inputs = if g.rng.gen_bool(0.35) { 1 } else { 0 };
    let budget = 6 - n_plants - with_req as usize - n_inputs;
    let n_discrete = g.rng.gen_range(1..=budget.min(3));

    for k in 0..n_inputs {
        let kind = if g.rng.gen_bool(0.5) {
            Kind::Bool
        } else {
            Kind::Int(0, g.rng.gen_range(1..=3))
        };
        g.vars.push(GenVar {
            name: format!("i{k}"),
            kind,
            input: true,
            owner: None,
        });
    }
    for k in 0..n_plants {
        let n_locs = g.rng.gen_range(1..=3);
        g.auts.push(GenAut {
            name: format!("p{k}"),
            requirement: false,
            locations: (0..n_locs).map(|l| format!("l{l}")).collect(),
        });
    }
    if with_req {
        g.auts.push(GenAut {
            name: "r".into(),
            requirement: true,
            locations: vec!["a".into(), "b".into()],
        });
    }
    for k in 0..n_discrete {
        let kind = if g.rng.gen_bool(0.3) {
            Kind::Bool
        } else {
            let lo = g.rng.gen_range(0..=2);
            Kind::Int(lo, lo + g.rng.gen_range(1..=3))
        };
        let owner = g.rng.gen_range(0..n_plants);
        g.vars.push(GenVar {
            name: format!("x{k}"),
            kind,
            input: false,
            owner: Some(owner),
        });
    }
    let n_c = g.rng.gen_range(1..=3);
    let n_u = g.rng.gen_range(0..=2);
    g.controllable = (0..n_c).map(|k| format!("c{k}")).collect();
    g.uncontrollable = (0..n_u).map(|k| format!("u{k}")).collect();

    let mut out = String::new();
    for v in g.vars.clone().iter().filter(|v| v.input) {
        let _ = writeln!(out, "input {} {};", type_name(&v.kind), v.name);
    }
    let _ = writeln!(out, "controllable {};", g.controllable.join(", "));
    if !g.uncontrollable.is_empty() {
        let _ = writeln!(out, "uncontrollable {};", g.uncontrollable.join(", "));
    }

    let events = g.events();
    for a in 0..g.auts.len() {
        let requirement = g.auts[a].requirement;
        let name = g.auts[a].name.clone();
        let locations = g.auts[a].locations.clone();
        let _ = writeln!(out, "{} {name} {{", if requirement { "requirement" } else { "plant" });
        let own: Vec<GenVar> = g.vars.iter().filter(|v| v.owner == Some(a)).cloned().collect();
        for v in &own {
            let init = match (&v.kind, g.rng.gen_range(0..4)) {
                (_, 0) => String::new(),
                (Kind::Bool, 1) => " = false, true".into(),
                (Kind::Bool, _) => format!(" = {}", g.pick(&["false", "true"])),
                (Kind::Int(lo, hi), 1) => format!(" = {lo}, {hi}"),
                (Kind::Int(lo, hi), _) => format!(" = {}", g.rng.gen_range(*lo..=*hi)),
            };
            let _ = writeln!(out, "  disc {} {}{init};", type_name(&v.kind), v.name);
        }
        let alphabet: Vec<String> = if requirement {
            let mut ev = events.clone();
            ev.shuffle(&mut g.rng);
            ev.truncate(g.rng.gen_range(1..=2));
            ev
        } else {
            events.iter().filter(|_| g.rng.gen_bool(0.7)).cloned().collect()
        };
        for (li, loc) in locations.iter().enumerate() {
            let _ = writeln!(out, "  location {loc}:");
            if li == 0 {
                let _ = writeln!(out, "    initial;");
            } else if g.rng.gen_bool(0.15) {
                let _ = writeln!(out, "    initial when {};", g.predicate(false));
            }
            match g.rng.gen_range(0..5) {
                0 | 1 => {
                    let _ = writeln!(out, "    marked;");
                }
                2 => {
                    let _ = writeln!(out, "    marked when {};", g.predicate(false));
                }
                _ => {}
            }
            if alphabet.is_empty() {
                continue;
            }
            for _ in 0..g.rng.gen_range(0..=3) {
                let ev = g.pick(&alphabet).clone();
                let mut line = format!("    edge {ev}");
                if g.rng.gen_bool(0.6) {
                    let _ = write!(line, " when {}", g.predicate(true));
                }
                if !own.is_empty() && g.rng.gen_bool(0.6) {
                    let mut targets = own.clone();
                    targets.shuffle(&mut g.rng);
                    targets.truncate(g.rng.gen_range(1..=own.len().min(2)));
                    let ups: Vec<String> = targets.iter().map(|v| format!("{} := {}", v.name, g.update(v))).collect();
                    let _ = write!(line, " do {}", ups.join(", "));
                }
                if locations.len() > 1 && g.rng.gen_bool(0.7) {
                    let _ = write!(line, " goto {}", g.pick(&locations));
                }
                let _ = writeln!(out, "{line};");
            }
        }
        let _ = writeln!(out, "}}");
    }

    if g.rng.gen_bool(0.3) {
        let _ = writeln!(out, "plant invariant {};", g.predicate(false));
    }
    if g.rng.gen_bool(0.3) {
        let ev = g.pick(&events).clone();
        let _ = writeln!(out, "plant invariant {ev} needs {};", g.predicate(true));
    }
    if g.rng.gen_bool(0.5) {
        let _ = writeln!(out, "requirement invariant {};", g.predicate(true));
    }
    if g.rng.gen_bool(0.4) {
        let ev = g.pick(&events).clone();
        let _ = writeln!(out, "requirement invariant {ev} needs {};", g.predicate(true));
    }
    if g.rng.gen_bool(0.3) {
        let ev = g.pick(&events).clone();
        let _ = writeln!(out, "requirement invariant {} disables {ev};", g.predicate(true));
    }
    if g.rng.gen_bool(0.2) {
        let _ = writeln!(out, "initial {};", g.predicate(false));
    }
    if g.rng.gen_bool(0.2) {
        let _ = writeln!(out, "marked {};", g.predicate(true));
    }
    out
}

/// A valid random model for `seed`.
pub fn random_model(seed: u64) -> Specification {
    let text = random_model_text(seed);
    let spec = parse(&text, "random").unwrap_or_else(|e| panic!("generated model does not parse: {e}\n{text}"));
    let problems = validate_for_synthesis(&spec);
    assert!(problems.is_empty(), "generated model is invalid: {problems:?}\n{text}");
    spec
}
