//! In-memory representation of extended finite automata models.
//!
//! A [`Specification`] holds the plants and requirements of a model: events,
//! automata with their locations and edges, input variables, component-level
//! initialization and marker predicates, and invariants. Expressions are
//! evaluated with [`eval`] and checked with [`validate`].

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Controllability {
    Controllable,
    Uncontrollable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub name: String,
    pub controllability: Controllability,
}

impl Event {
    pub fn controllable(name: impl Into<String>) -> Self {
        Event {
            name: name.into(),
            controllability: Controllability::Controllable,
        }
    }

    pub fn uncontrollable(name: impl Into<String>) -> Self {
        Event {
            name: name.into(),
            controllability: Controllability::Uncontrollable,
        }
    }

    pub fn is_controllable(&self) -> bool {
        self.controllability == Controllability::Controllable
    }
}

/// Finite data type of a variable. Enumeration literals map to `0..k` in
/// declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum VarDomain {
    Bool,
    Int { lo: i64, hi: i64 },
    Enum(Vec<String>),
}

impl VarDomain {
    /// Number of values in the domain.
    pub fn size(&self) -> u64 {
        match self {
            VarDomain::Bool => 2,
            VarDomain::Int { lo, hi } => (hi - lo + 1).max(0) as u64,
            VarDomain::Enum(lits) => lits.len() as u64,
        }
    }

    /// Smallest and largest encoded value.
    pub fn bounds(&self) -> (i64, i64) {
        match self {
            VarDomain::Bool => (0, 1),
            VarDomain::Int { lo, hi } => (*lo, *hi),
            VarDomain::Enum(lits) => (0, lits.len() as i64 - 1),
        }
    }

    pub fn contains(&self, value: i64) -> bool {
        let (lo, hi) = self.bounds();
        lo <= value && value <= hi
    }

    pub fn values(&self) -> impl Iterator<Item = i64> {
        let (lo, hi) = self.bounds();
        lo..=hi
    }

    pub fn is_bool(&self) -> bool {
        matches!(self, VarDomain::Bool)
    }

    /// Number of boolean BDD variables needed to encode the domain. Integers
    /// are encoded by value, so the width covers `0..=hi`.
    pub fn bit_width(&self) -> u32 {
        let max = match self {
            VarDomain::Bool => 1,
            VarDomain::Int { hi, .. } => *hi,
            VarDomain::Enum(lits) => lits.len() as i64 - 1,
        };
        let mut width = 1;
        while (1i64 << width) <= max {
            width += 1;
        }
        width
    }

    /// Render an encoded value as a literal expression of this domain.
    pub fn literal(&self, value: i64) -> Expr {
        match self {
            VarDomain::Bool => Expr::Bool(value != 0),
            VarDomain::Int { .. } => Expr::Int(value),
            VarDomain::Enum(lits) => Expr::EnumLit(lits[value as usize].clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    Discrete,
    Input,
    LocationPointer,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub domain: VarDomain,
    pub kind: VarKind,
    /// Encoded potential initial values; empty means any value of the domain.
    pub initial: Vec<i64>,
}

impl Variable {
    pub fn discrete(name: impl Into<String>, domain: VarDomain) -> Self {
        Variable {
            name: name.into(),
            domain,
            kind: VarKind::Discrete,
            initial: Vec::new(),
        }
    }

    pub fn input(name: impl Into<String>, domain: VarDomain) -> Self {
        Variable {
            name: name.into(),
            domain,
            kind: VarKind::Input,
            initial: Vec::new(),
        }
    }

    pub fn with_initial(mut self, values: impl IntoIterator<Item = i64>) -> Self {
        self.initial = values.into_iter().collect();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    And,
    Or,
    Add,
    Sub,
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::And => "and",
            BinOp::Or => "or",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mod => "mod",
            BinOp::Eq => "=",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Bool(bool),
    Int(i64),
    Var(String),
    EnumLit(String),
    /// True iff automaton `aut` is in location `loc`.
    Loc { aut: String, loc: String },
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn loc(aut: impl Into<String>, loc: impl Into<String>) -> Expr {
        Expr::Loc {
            aut: aut.into(),
            loc: loc.into(),
        }
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn not(e: Expr) -> Expr {
        Expr::Unary(UnOp::Not, Box::new(e))
    }

    pub fn and(lhs: Expr, rhs: Expr) -> Expr {
        Expr::binary(BinOp::And, lhs, rhs)
    }

    pub fn or(lhs: Expr, rhs: Expr) -> Expr {
        Expr::binary(BinOp::Or, lhs, rhs)
    }

    pub fn eq(lhs: Expr, rhs: Expr) -> Expr {
        Expr::binary(BinOp::Eq, lhs, rhs)
    }

    /// Left-nested conjunction; `true` when empty.
    pub fn conj(items: impl IntoIterator<Item = Expr>) -> Expr {
        items
            .into_iter()
            .reduce(Expr::and)
            .unwrap_or(Expr::Bool(true))
    }

    /// Left-nested disjunction; `false` when empty.
    pub fn disj(items: impl IntoIterator<Item = Expr>) -> Expr {
        items
            .into_iter()
            .reduce(Expr::or)
            .unwrap_or(Expr::Bool(false))
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Expr::Bool(true))
    }

    /// Visit every variable name referenced by the expression.
    pub fn for_each_var<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            Expr::Var(name) => f(name),
            Expr::Unary(_, e) => e.for_each_var(f),
            Expr::Binary(_, l, r) => {
                l.for_each_var(f);
                r.for_each_var(f);
            }
            _ => {}
        }
    }

    pub fn has_location_refs(&self) -> bool {
        match self {
            Expr::Loc { .. } => true,
            Expr::Unary(_, e) => e.has_location_refs(),
            Expr::Binary(_, l, r) => l.has_location_refs() || r.has_location_refs(),
            _ => false,
        }
    }

    /// Rebuild the expression bottom-up, letting `f` replace leaves.
    pub fn map_leaves(&self, f: &impl Fn(&Expr) -> Option<Expr>) -> Expr {
        match self {
            Expr::Unary(op, e) => Expr::Unary(*op, Box::new(e.map_leaves(f))),
            Expr::Binary(op, l, r) => {
                Expr::Binary(*op, Box::new(l.map_leaves(f)), Box::new(r.map_leaves(f)))
            }
            leaf => f(leaf).unwrap_or_else(|| leaf.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub events: Vec<String>,
    pub guard: Expr,
    pub updates: Vec<(String, Expr)>,
    /// Index of the target location; equal to the source for self-loops.
    pub target: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    pub name: String,
    pub initial: Option<Expr>,
    pub marked: Option<Expr>,
    /// Outgoing edges, in declaration order.
    pub edges: Vec<Edge>,
}

impl Location {
    pub fn new(name: impl Into<String>) -> Self {
        Location {
            name: name.into(),
            initial: None,
            marked: None,
            edges: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AutKind {
    Plant,
    Requirement,
    Supervisor,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Automaton {
    pub name: String,
    pub kind: AutKind,
    pub variables: Vec<Variable>,
    pub alphabet: Option<Vec<String>>,
    pub locations: Vec<Location>,
    /// Set by plantification on former requirement automata.
    pub plantified: bool,
}

impl Automaton {
    pub fn new(name: impl Into<String>, kind: AutKind) -> Self {
        Automaton {
            name: name.into(),
            kind,
            variables: Vec::new(),
            alphabet: None,
            locations: Vec::new(),
            plantified: false,
        }
    }

    /// Explicit alphabet if given, otherwise the events on the edges in
    /// first-use order.
    pub fn alphabet(&self) -> Vec<String> {
        if let Some(explicit) = &self.alphabet {
            return explicit.clone();
        }
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for loc in &self.locations {
            for edge in &loc.edges {
                for ev in &edge.events {
                    if seen.insert(ev.as_str()) {
                        out.push(ev.clone());
                    }
                }
            }
        }
        out
    }

    pub fn location_index(&self, name: &str) -> Option<usize> {
        self.locations.iter().position(|l| l.name == name)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, &Edge)> {
        self.locations
            .iter()
            .enumerate()
            .flat_map(|(i, l)| l.edges.iter().map(move |e| (i, e)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum InvKind {
    State,
    /// `event needs predicate`
    Needs(String),
    /// `predicate disables event`
    Disables(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Plant,
    Requirement,
    Supervisor,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invariant {
    pub kind: InvKind,
    pub side: Side,
    pub predicate: Expr,
}

impl Invariant {
    /// Event and the predicate it needs, for state/event exclusion invariants.
    pub fn as_needs(&self) -> Option<(&str, Expr)> {
        match &self.kind {
            InvKind::State => None,
            InvKind::Needs(ev) => Some((ev, self.predicate.clone())),
            InvKind::Disables(ev) => Some((ev, Expr::not(self.predicate.clone()))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Specification {
    pub events: Vec<Event>,
    pub inputs: Vec<Variable>,
    pub automata: Vec<Automaton>,
    pub initials: Vec<Expr>,
    pub markeds: Vec<Expr>,
    pub invariants: Vec<Invariant>,
}

impl Specification {
    pub fn event(&self, name: &str) -> Option<&Event> {
        self.events.iter().find(|e| e.name == name)
    }

    pub fn automaton(&self, name: &str) -> Option<&Automaton> {
        self.automata.iter().find(|a| a.name == name)
    }

    /// Every discrete and input variable, inputs first.
    pub fn variables(&self) -> impl Iterator<Item = &Variable> {
        self.inputs
            .iter()
            .chain(self.automata.iter().flat_map(|a| a.variables.iter()))
    }

    pub fn variable(&self, name: &str) -> Option<&Variable> {
        self.variables().find(|v| v.name == name)
    }
}

// ---------------------------------------------------------------------------
// Evaluation

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Value {
    Bool(bool),
    Int(i64),
}

impl Value {
    pub fn as_bool(self) -> bool {
        match self {
            Value::Bool(b) => b,
            Value::Int(i) => i != 0,
        }
    }

    pub fn as_int(self) -> i64 {
        match self {
            Value::Bool(b) => b as i64,
            Value::Int(i) => i,
        }
    }
}

/// State an expression is evaluated in.
pub trait Env {
    fn value(&self, var: &str) -> Value;
    fn in_location(&self, aut: &str, loc: &str) -> bool;
    /// Encoded value of an enumeration literal.
    fn literal(&self, name: &str) -> i64;
}

/// Map-backed [`Env`]. Enumeration literals resolve to their index in the
/// enumeration that declares them.
#[derive(Debug, Clone, Default)]
pub struct MapEnv {
    pub values: HashMap<String, Value>,
    pub locations: HashMap<String, String>,
    pub literals: HashMap<String, i64>,
}

impl MapEnv {
    pub fn for_spec(spec: &Specification) -> Self {
        let mut env = MapEnv::default();
        for var in spec.variables() {
            if let VarDomain::Enum(lits) = &var.domain {
                for (i, lit) in lits.iter().enumerate() {
                    env.literals.insert(lit.clone(), i as i64);
                }
            }
        }
        env
    }

    pub fn set(&mut self, var: impl Into<String>, value: Value) -> &mut Self {
        self.values.insert(var.into(), value);
        self
    }

    pub fn at(&mut self, aut: impl Into<String>, loc: impl Into<String>) -> &mut Self {
        self.locations.insert(aut.into(), loc.into());
        self
    }
}

impl Env for MapEnv {
    fn value(&self, var: &str) -> Value {
        self.values[var]
    }

    fn in_location(&self, aut: &str, loc: &str) -> bool {
        self.locations.get(aut).is_some_and(|l| l == loc)
    }

    fn literal(&self, name: &str) -> i64 {
        self.literals[name]
    }
}

/// Mathematical remainder; the result is nonnegative for positive divisors.
pub fn euclid_mod(lhs: i64, rhs: i64) -> i64 {
    if rhs == 0 {
        lhs
    } else {
        lhs.rem_euclid(rhs)
    }
}

/// Evaluate a well-typed expression.
pub fn eval(expr: &Expr, env: &impl Env) -> Value {
    match expr {
        Expr::Bool(b) => Value::Bool(*b),
        Expr::Int(i) => Value::Int(*i),
        Expr::Var(name) => env.value(name),
        Expr::EnumLit(name) => Value::Int(env.literal(name)),
        Expr::Loc { aut, loc } => Value::Bool(env.in_location(aut, loc)),
        Expr::Unary(UnOp::Not, e) => Value::Bool(!eval(e, env).as_bool()),
        Expr::Unary(UnOp::Neg, e) => Value::Int(-eval(e, env).as_int()),
        Expr::Binary(op, l, r) => {
            // Short-circuit is irrelevant for semantics but saves work.
            match op {
                BinOp::And => {
                    return Value::Bool(eval(l, env).as_bool() && eval(r, env).as_bool())
                }
                BinOp::Or => {
                    return Value::Bool(eval(l, env).as_bool() || eval(r, env).as_bool())
                }
                _ => {}
            }
            let (a, b) = (eval(l, env), eval(r, env));
            match op {
                BinOp::Add => Value::Int(a.as_int() + b.as_int()),
                BinOp::Sub => Value::Int(a.as_int() - b.as_int()),
                BinOp::Mod => Value::Int(euclid_mod(a.as_int(), b.as_int())),
                BinOp::Eq => Value::Bool(a.as_int() == b.as_int()),
                BinOp::Ne => Value::Bool(a.as_int() != b.as_int()),
                BinOp::Lt => Value::Bool(a.as_int() < b.as_int()),
                BinOp::Le => Value::Bool(a.as_int() <= b.as_int()),
                BinOp::Gt => Value::Bool(a.as_int() > b.as_int()),
                BinOp::Ge => Value::Bool(a.as_int() >= b.as_int()),
                BinOp::And | BinOp::Or => unreachable!(),
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Validation

/// A problem found by [`validate`], naming the offending element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub element: String,
    pub message: String,
}

impl Diagnostic {
    fn new(element: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            element: element.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.element, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Type {
    Bool,
    Int,
    Enum(Vec<String>),
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Bool => write!(f, "bool"),
            Type::Int => write!(f, "int"),
            Type::Enum(lits) => write!(f, "enum{{{}}}", lits.join(",")),
        }
    }
}

fn domain_type(domain: &VarDomain) -> Type {
    match domain {
        VarDomain::Bool => Type::Bool,
        VarDomain::Int { .. } => Type::Int,
        VarDomain::Enum(lits) => Type::Enum(lits.clone()),
    }
}

struct TypeCtx<'a> {
    vars: HashMap<&'a str, &'a VarDomain>,
    literals: HashMap<&'a str, &'a Vec<String>>,
    automata: HashMap<&'a str, &'a Automaton>,
}

impl TypeCtx<'_> {
    fn type_of(&self, expr: &Expr) -> Result<Type, String> {
        match expr {
            Expr::Bool(_) => Ok(Type::Bool),
            Expr::Int(_) => Ok(Type::Int),
            Expr::Var(name) => self
                .vars
                .get(name.as_str())
                .map(|d| domain_type(d))
                .ok_or_else(|| format!("unknown variable `{name}`")),
            Expr::EnumLit(name) => self
                .literals
                .get(name.as_str())
                .map(|lits| Type::Enum((*lits).clone()))
                .ok_or_else(|| format!("unknown name `{name}`")),
            Expr::Loc { aut, loc } => {
                let a = self
                    .automata
                    .get(aut.as_str())
                    .ok_or_else(|| format!("unknown automaton `{aut}`"))?;
                if a.location_index(loc).is_none() {
                    return Err(format!("unknown location `{aut}.{loc}`"));
                }
                Ok(Type::Bool)
            }
            Expr::Unary(UnOp::Not, e) => match self.type_of(e)? {
                Type::Bool => Ok(Type::Bool),
                t => Err(format!("`not` applied to {t}")),
            },
            Expr::Unary(UnOp::Neg, e) => match self.type_of(e)? {
                Type::Int => Ok(Type::Int),
                t => Err(format!("negation applied to {t}")),
            },
            Expr::Binary(op, l, r) => {
                let (lt, rt) = (self.type_of(l)?, self.type_of(r)?);
                match op {
                    BinOp::And | BinOp::Or => {
                        if lt == Type::Bool && rt == Type::Bool {
                            Ok(Type::Bool)
                        } else {
                            Err(format!("`{}` on {lt} and {rt}", op.symbol()))
                        }
                    }
                    BinOp::Add | BinOp::Sub | BinOp::Mod => {
                        if lt != Type::Int || rt != Type::Int {
                            return Err(format!("`{}` on {lt} and {rt}", op.symbol()));
                        }
                        if *op == BinOp::Mod && !matches!(**r, Expr::Int(k) if k > 0) {
                            return Err("`mod` needs a positive integer literal divisor".into());
                        }
                        Ok(Type::Int)
                    }
                    BinOp::Eq | BinOp::Ne => {
                        if lt == rt {
                            Ok(Type::Bool)
                        } else {
                            Err(format!("`{}` on {lt} and {rt}", op.symbol()))
                        }
                    }
                    BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                        if lt == Type::Int && rt == Type::Int {
                            Ok(Type::Bool)
                        } else {
                            Err(format!("`{}` on {lt} and {rt}", op.symbol()))
                        }
                    }
                }
            }
        }
    }

    fn check_bool(&self, expr: &Expr, element: &str, out: &mut Vec<Diagnostic>) {
        match self.type_of(expr) {
            Ok(Type::Bool) => {}
            Ok(t) => out.push(Diagnostic::new(element, format!("expected bool, found {t}"))),
            Err(msg) => out.push(Diagnostic::new(element, msg)),
        }
    }
}

fn check_domain(var: &Variable, element: &str, out: &mut Vec<Diagnostic>) {
    match &var.domain {
        VarDomain::Bool => {}
        VarDomain::Int { lo, hi } => {
            if *lo < 0 || lo > hi {
                out.push(Diagnostic::new(element, "integer range needs 0 <= lo <= hi"));
            }
        }
        VarDomain::Enum(lits) => {
            if lits.is_empty() {
                out.push(Diagnostic::new(element, "enumeration without literals"));
            }
            let unique: HashSet<_> = lits.iter().collect();
            if unique.len() != lits.len() {
                out.push(Diagnostic::new(element, "duplicate enumeration literal"));
            }
        }
    }
    for &v in &var.initial {
        if !var.domain.contains(v) {
            out.push(Diagnostic::new(element, format!("initial value {v} outside domain")));
        }
    }
}

/// Check well-formedness and typing. Returns one diagnostic per problem; an
/// empty list means the model is valid. Supervisor-kind automata are allowed
/// here (see [`validate_for_synthesis`]).
pub fn validate(spec: &Specification) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    let mut names: HashSet<String> = HashSet::new();
    let mut declare = |name: &str, element: String, out: &mut Vec<Diagnostic>| {
        if !names.insert(name.to_string()) {
            out.push(Diagnostic::new(element, format!("duplicate declaration of `{name}`")));
        }
    };
    for ev in &spec.events {
        declare(&ev.name, format!("event {}", ev.name), &mut out);
    }
    for var in &spec.inputs {
        declare(&var.name, format!("input {}", var.name), &mut out);
    }
    for aut in &spec.automata {
        declare(&aut.name, format!("automaton {}", aut.name), &mut out);
        for var in &aut.variables {
            declare(&var.name, format!("variable {}.{}", aut.name, var.name), &mut out);
        }
    }

    // Enumeration literals: shared literals require identical enumerations.
    let mut literals: HashMap<&str, &Vec<String>> = HashMap::new();
    for var in spec.variables() {
        if let VarDomain::Enum(lits) = &var.domain {
            for lit in lits {
                if let Some(prev) = literals.insert(lit, lits) {
                    if prev != lits {
                        out.push(Diagnostic::new(
                            format!("variable {}", var.name),
                            format!("literal `{lit}` used by different enumerations"),
                        ));
                    }
                }
                if names.contains(lit.as_str()) {
                    out.push(Diagnostic::new(
                        format!("variable {}", var.name),
                        format!("literal `{lit}` clashes with a declaration"),
                    ));
                }
            }
        }
    }

    let ctx = TypeCtx {
        vars: spec.variables().map(|v| (v.name.as_str(), &v.domain)).collect(),
        literals,
        automata: spec.automata.iter().map(|a| (a.name.as_str(), a)).collect(),
    };
    let events: HashMap<&str, &Event> = spec.events.iter().map(|e| (e.name.as_str(), e)).collect();

    for var in &spec.inputs {
        check_domain(var, &format!("input {}", var.name), &mut out);
        if var.kind != VarKind::Input {
            out.push(Diagnostic::new(format!("input {}", var.name), "not an input variable"));
        }
    }

    for aut in &spec.automata {
        let owned: HashSet<&str> = aut.variables.iter().map(|v| v.name.as_str()).collect();
        for var in &aut.variables {
            check_domain(var, &format!("variable {}.{}", aut.name, var.name), &mut out);
            if var.kind != VarKind::Discrete {
                out.push(Diagnostic::new(
                    format!("variable {}.{}", aut.name, var.name),
                    "automaton variables must be discrete",
                ));
            }
        }
        if aut.locations.is_empty() {
            out.push(Diagnostic::new(format!("automaton {}", aut.name), "no locations"));
        }
        let mut loc_names = HashSet::new();
        for loc in &aut.locations {
            if !loc_names.insert(loc.name.as_str()) {
                out.push(Diagnostic::new(
                    format!("location {}.{}", aut.name, loc.name),
                    "duplicate location",
                ));
            }
        }
        if let Some(alphabet) = &aut.alphabet {
            for ev in alphabet {
                if !events.contains_key(ev.as_str()) {
                    out.push(Diagnostic::new(
                        format!("automaton {}", aut.name),
                        format!("unknown event `{ev}` in alphabet"),
                    ));
                }
            }
        }
        for loc in &aut.locations {
            let element = format!("location {}.{}", aut.name, loc.name);
            if let Some(p) = &loc.initial {
                ctx.check_bool(p, &element, &mut out);
            }
            if let Some(p) = &loc.marked {
                ctx.check_bool(p, &element, &mut out);
            }
            for (k, edge) in loc.edges.iter().enumerate() {
                let element = format!("edge {}.{}#{}", aut.name, loc.name, k);
                if edge.events.is_empty() {
                    out.push(Diagnostic::new(&element, "edge without events"));
                }
                for ev in &edge.events {
                    if !events.contains_key(ev.as_str()) {
                        out.push(Diagnostic::new(&element, format!("unknown event `{ev}`")));
                    } else if let Some(alphabet) = &aut.alphabet {
                        if !alphabet.contains(ev) {
                            out.push(Diagnostic::new(
                                &element,
                                format!("event `{ev}` not in the automaton's alphabet"),
                            ));
                        }
                    }
                }
                if edge.target >= aut.locations.len() {
                    out.push(Diagnostic::new(&element, "unknown target location"));
                }
                ctx.check_bool(&edge.guard, &element, &mut out);
                let mut assigned = HashSet::new();
                for (var, rhs) in &edge.updates {
                    if !assigned.insert(var.as_str()) {
                        out.push(Diagnostic::new(
                            &element,
                            format!("variable `{var}` assigned twice"),
                        ));
                    }
                    let Some(domain) = ctx.vars.get(var.as_str()) else {
                        out.push(Diagnostic::new(&element, format!("unknown variable `{var}`")));
                        continue;
                    };
                    if !owned.contains(var.as_str()) {
                        out.push(Diagnostic::new(
                            &element,
                            format!("write outside owner: `{var}` is not declared in {}", aut.name),
                        ));
                    }
                    match ctx.type_of(rhs) {
                        Ok(t) if t == domain_type(domain) => {}
                        Ok(t) => out.push(Diagnostic::new(
                            &element,
                            format!("cannot assign {t} to `{var}`"),
                        )),
                        Err(msg) => out.push(Diagnostic::new(&element, msg)),
                    }
                }
            }
        }
    }

    for (k, inv) in spec.invariants.iter().enumerate() {
        let element = format!("invariant #{k}");
        ctx.check_bool(&inv.predicate, &element, &mut out);
        if let InvKind::Needs(ev) | InvKind::Disables(ev) = &inv.kind {
            if !events.contains_key(ev.as_str()) {
                out.push(Diagnostic::new(&element, format!("unknown event `{ev}`")));
            }
        }
    }
    for (k, p) in spec.initials.iter().enumerate() {
        ctx.check_bool(p, &format!("initialization predicate #{k}"), &mut out);
    }
    for (k, p) in spec.markeds.iter().enumerate() {
        ctx.check_bool(p, &format!("marker predicate #{k}"), &mut out);
    }
    out
}

/// [`validate`] plus the restriction that synthesis input contains no
/// supervisor-kind automata or invariants.
pub fn validate_for_synthesis(spec: &Specification) -> Vec<Diagnostic> {
    let mut out = validate(spec);
    for aut in &spec.automata {
        if aut.kind == AutKind::Supervisor {
            out.push(Diagnostic::new(
                format!("automaton {}", aut.name),
                "supervisor automata are not accepted as synthesis input",
            ));
        }
    }
    for (k, inv) in spec.invariants.iter().enumerate() {
        if inv.side == Side::Supervisor {
            out.push(Diagnostic::new(
                format!("invariant #{k}"),
                "supervisor invariants are not accepted as synthesis input",
            ));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Statistics

/// Size metrics of a model, one counter per column of the usual benchmark
/// overview (controllable/uncontrollable events, plant/requirement automata,
/// locations, edges, guards, assignments, initialization, marking, variables
/// and invariants).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ModelStats {
    pub events_c: u64,
    pub events_u: u64,
    pub aut_p: u64,
    pub aut_r: u64,
    pub locs_p: u64,
    pub locs_r: u64,
    pub edges_p: u64,
    pub edges_r: u64,
    pub guards_p: u64,
    pub guards_r: u64,
    pub assigns_p: u64,
    pub assigns_r: u64,
    pub init_p: u64,
    pub init_r: u64,
    pub init_c: u64,
    pub marked_p: u64,
    pub marked_r: u64,
    pub marked_c: u64,
    pub vars_n: u64,
    pub vars_v: u64,
    pub inv_p_state: u64,
    pub inv_r_state: u64,
    pub inv_p_event: u64,
    pub inv_r_event: u64,
}

impl ModelStats {
    /// Column names paired with values, in table order.
    pub fn columns(&self) -> Vec<(&'static str, u64)> {
        vec![
            ("Sc", self.events_c),
            ("Su", self.events_u),
            ("Ap", self.aut_p),
            ("Ar", self.aut_r),
            ("lp", self.locs_p),
            ("lr", self.locs_r),
            ("ep", self.edges_p),
            ("er", self.edges_r),
            ("gp", self.guards_p),
            ("gr", self.guards_r),
            ("ap", self.assigns_p),
            ("ar", self.assigns_r),
            ("ip", self.init_p),
            ("ir", self.init_r),
            ("ic", self.init_c),
            ("mp", self.marked_p),
            ("mr", self.marked_r),
            ("mc", self.marked_c),
            ("vn", self.vars_n),
            ("vv", self.vars_v),
            ("tps", self.inv_p_state),
            ("trs", self.inv_r_state),
            ("tpe", self.inv_p_event),
            ("tre", self.inv_r_event),
        ]
    }
}

pub fn model_stats(spec: &Specification) -> ModelStats {
    let mut s = ModelStats::default();
    for ev in &spec.events {
        if ev.is_controllable() {
            s.events_c += 1;
        } else {
            s.events_u += 1;
        }
    }
    for aut in &spec.automata {
        let plant = aut.kind != AutKind::Requirement;
        let (a, l, e, g, asg, i, m) = if plant {
            (
                &mut s.aut_p,
                &mut s.locs_p,
                &mut s.edges_p,
                &mut s.guards_p,
                &mut s.assigns_p,
                &mut s.init_p,
                &mut s.marked_p,
            )
        } else {
            (
                &mut s.aut_r,
                &mut s.locs_r,
                &mut s.edges_r,
                &mut s.guards_r,
                &mut s.assigns_r,
                &mut s.init_r,
                &mut s.marked_r,
            )
        };
        *a += 1;
        *l += aut.locations.len() as u64;
        for loc in &aut.locations {
            *i += loc.initial.is_some() as u64;
            *m += loc.marked.is_some() as u64;
            for edge in &loc.edges {
                let k = edge.events.len() as u64;
                *e += k;
                if !edge.guard.is_true() {
                    *g += k;
                }
                *asg += k * edge.updates.len() as u64;
            }
        }
    }
    s.init_c = spec.initials.len() as u64;
    s.marked_c = spec.markeds.len() as u64;
    for var in spec.variables() {
        s.vars_n += 1;
        s.vars_v += var.domain.size();
    }
    for inv in &spec.invariants {
        let plant = inv.side == Side::Plant;
        let counter = match (&inv.kind, plant) {
            (InvKind::State, true) => &mut s.inv_p_state,
            (InvKind::State, false) => &mut s.inv_r_state,
            (_, true) => &mut s.inv_p_event,
            (_, false) => &mut s.inv_r_event,
        };
        *counter += 1;
    }
    s
}

/// Location names per automaton, used when lowering predicates back to
/// expressions over locations.
pub fn location_table(spec: &Specification) -> BTreeMap<String, Vec<String>> {
    spec.automata
        .iter()
        .map(|a| {
            (
                a.name.clone(),
                a.locations.iter().map(|l| l.name.clone()).collect(),
            )
        })
        .collect()
}

/// Names of all events that some automaton synchronizes on.
pub fn used_events(spec: &Specification) -> BTreeSet<String> {
    spec.automata.iter().flat_map(|a| a.alphabet()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> Specification {
        let mut aut = Automaton::new("A", AutKind::Plant);
        let mut loc = Location::new("L0");
        loc.initial = Some(Expr::Bool(true));
        aut.locations.push(loc);
        Specification {
            automata: vec![aut],
            ..Default::default()
        }
    }

    #[test]
    fn minimal_model_is_valid() {
        assert!(validate(&minimal()).is_empty());
    }

    #[test]
    fn write_outside_owner() {
        let mut spec = minimal();
        spec.events.push(Event::controllable("e"));
        let mut other = Automaton::new("B", AutKind::Plant);
        other
            .variables
            .push(Variable::discrete("y", VarDomain::Int { lo: 0, hi: 3 }));
        other.locations.push(Location::new("M"));
        spec.automata.push(other);
        spec.automata[0].locations[0].edges.push(Edge {
            events: vec!["e".into()],
            guard: Expr::Bool(true),
            updates: vec![("y".into(), Expr::Int(1))],
            target: 0,
        });
        let diags = validate(&spec);
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("write outside owner"), "{diags:?}");
    }

    #[test]
    fn ill_typed_guard() {
        let mut spec = minimal();
        spec.events.push(Event::controllable("e"));
        spec.automata[0]
            .variables
            .push(Variable::discrete("x", VarDomain::Int { lo: 0, hi: 3 }));
        spec.automata[0].locations[0].edges.push(Edge {
            events: vec!["e".into()],
            guard: Expr::binary(BinOp::Add, Expr::var("x"), Expr::Bool(true)),
            updates: vec![],
            target: 0,
        });
        let diags = validate(&spec);
        assert_eq!(diags.len(), 1, "{diags:?}");
        assert!(diags[0].message.contains("`+` on int and bool"));
    }

    #[test]
    fn supervisors_rejected_for_synthesis_only() {
        let mut spec = minimal();
        spec.automata[0].kind = AutKind::Supervisor;
        assert!(validate(&spec).is_empty());
        assert_eq!(validate_for_synthesis(&spec).len(), 1);
    }

    #[test]
    fn eval_examples() {
        let mut env = MapEnv::default();
        env.set("c", Value::Int(0))
            .set("d", Value::Int(5))
            .set("b", Value::Bool(false))
            .set("x", Value::Int(4));
        let lhs = Expr::binary(BinOp::Add, Expr::var("c"), Expr::Int(5));
        let rhs = Expr::binary(BinOp::Mod, Expr::var("d"), Expr::Int(4));
        assert_eq!(eval(&Expr::binary(BinOp::Gt, lhs, rhs), &env), Value::Bool(true));
        assert_eq!(eval(&Expr::not(Expr::var("b")), &env), Value::Bool(true));
        assert_eq!(eval(&Expr::eq(Expr::var("x"), Expr::Int(4)), &env), Value::Bool(true));
    }

    #[test]
    fn mod_is_nonnegative() {
        assert_eq!(euclid_mod(-1, 4), 3);
        assert_eq!(euclid_mod(7, 4), 3);
    }

    #[test]
    fn bit_widths() {
        assert_eq!(VarDomain::Bool.bit_width(), 1);
        assert_eq!(VarDomain::Int { lo: 0, hi: 5 }.bit_width(), 3);
        assert_eq!(VarDomain::Int { lo: 0, hi: 0 }.bit_width(), 1);
        assert_eq!(VarDomain::Int { lo: 0, hi: 12 }.bit_width(), 4);
        assert_eq!(VarDomain::Enum(vec!["a".into()]).bit_width(), 1);
        assert_eq!(VarDomain::Enum(vec!["a".into(), "b".into(), "c".into()]).bit_width(), 2);
    }

    #[test]
    fn empty_stats_are_zero() {
        assert_eq!(model_stats(&Specification::default()), ModelStats::default());
    }

    #[test]
    fn multi_event_edge_counts_per_event() {
        let mut spec = minimal();
        spec.events.push(Event::controllable("a"));
        spec.events.push(Event::uncontrollable("b"));
        spec.automata[0].locations[0].edges.push(Edge {
            events: vec!["a".into(), "b".into()],
            guard: Expr::Bool(false),
            updates: vec![],
            target: 0,
        });
        let s = model_stats(&spec);
        assert_eq!((s.edges_p, s.guards_p, s.events_c, s.events_u), (2, 2, 1, 1));
    }
}
