//! Static variable ordering.
//!
//! Relations between variables come from the linearized edges: every edge
//! contributes a hyperedge with the variables it reads or writes. Orders are
//! produced by weighted Cuthill-McKee, Sloan, the DCSH selection among them,
//! FORCE and a sliding-window refinement, all scored by weighted event span.

use std::cmp::Ordering;
use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::transform::LinearizedModel;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrderError {
    #[error("custom order is not a permutation of the variables: {0}")]
    NotAPermutation(String),
    #[error("unknown order `{0}`")]
    UnknownOrder(String),
}

/// Variable sets of the linearized edges, as indices into the model's
/// variable list. Empty sets are dropped.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Hyperedges(pub Vec<Vec<usize>>);

/// Symmetric co-occurrence counts between variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarRelations {
    pub names: Vec<String>,
    weights: Vec<Vec<u64>>,
}

impl VarRelations {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn weight(&self, a: usize, b: usize) -> u64 {
        self.weights[a][b]
    }

    pub fn weight_by_name(&self, a: &str, b: &str) -> Option<u64> {
        let ia = self.names.iter().position(|n| n == a)?;
        let ib = self.names.iter().position(|n| n == b)?;
        Some(self.weights[ia][ib])
    }

    fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.weights[v]
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0)
            .map(|(u, _)| u)
    }

    fn degree(&self, v: usize) -> usize {
        self.neighbors(v).count()
    }

    /// The matrix as CSV with a header row and column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("var");
        for n in &self.names {
            let _ = write!(out, ",{n}");
        }
        out.push('\n');
        for (i, row) in self.weights.iter().enumerate() {
            out.push_str(&self.names[i]);
            for w in row {
                let _ = write!(out, ",{w}");
            }
            out.push('\n');
        }
        out
    }
}

/// A permutation of the model variables, first variable closest to the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarOrder(pub Vec<usize>);

impl VarOrder {
    pub fn identity(n: usize) -> Self {
        VarOrder((0..n).collect())
    }

    pub fn names<'a>(&self, model: &'a LinearizedModel) -> Vec<&'a str> {
        self.0
            .iter()
            .map(|&i| model.variables[i].name.as_str())
            .collect()
    }
}

pub fn extract_relations(model: &LinearizedModel) -> (Hyperedges, VarRelations) {
    let n = model.variables.len();
    let index = |name: &str| model.variables.iter().position(|v| v.name == name);
    let mut hyperedges = Vec::new();
    let mut weights = vec![vec![0u64; n]; n];
    for edge in &model.edges {
        let mut set = BTreeSet::new();
        let mut add = |name: &str| {
            if let Some(i) = index(name) {
                set.insert(i);
            }
        };
        edge.guard.for_each_var(&mut add);
        for (var, rhs) in &edge.updates {
            add(var);
            rhs.for_each_var(&mut add);
        }
        if set.is_empty() {
            continue;
        }
        let vars: Vec<usize> = set.into_iter().collect();
        for (k, &a) in vars.iter().enumerate() {
            for &b in &vars[k + 1..] {
                weights[a][b] += 1;
                weights[b][a] += 1;
            }
        }
        hyperedges.push(vars);
    }
    let names = model.variables.iter().map(|v| v.name.clone()).collect();
    (Hyperedges(hyperedges), VarRelations { names, weights })
}

/// Weighted event span scaled by `|G|·n²`, an exact integer. Lower is better.
pub fn wes_scaled(order: &[usize], hyperedges: &Hyperedges) -> u64 {
    let mut pos = vec![usize::MAX; order.iter().max().map_or(0, |m| m + 1)];
    for (p, &v) in order.iter().enumerate() {
        pos[v] = p;
    }
    hyperedges
        .0
        .iter()
        .map(|g| {
            let (lo, hi) = g.iter().fold((usize::MAX, 0), |(lo, hi), &v| {
                (lo.min(pos[v]), hi.max(pos[v]))
            });
            2 * (hi as u64 + 1) * (hi - lo + 1) as u64
        })
        .sum()
}

/// Weighted event span: `(1/|G|) Σ (2(hi+1)/n)(span/n)` over hyperedges.
pub fn wes(order: &[usize], hyperedges: &Hyperedges) -> f64 {
    if hyperedges.0.is_empty() || order.is_empty() {
        return 0.0;
    }
    let n = order.len() as f64;
    wes_scaled(order, hyperedges) as f64 / (hyperedges.0.len() as f64 * n * n)
}

/// Sum of hyperedge spans, the FORCE objective.
pub fn total_span(order: &[usize], hyperedges: &Hyperedges) -> u64 {
    let mut pos = vec![0; order.iter().max().map_or(0, |m| m + 1)];
    for (p, &v) in order.iter().enumerate() {
        pos[v] = p;
    }
    hyperedges
        .0
        .iter()
        .map(|g| {
            let lo = g.iter().map(|&v| pos[v]).min().unwrap();
            let hi = g.iter().map(|&v| pos[v]).max().unwrap();
            (hi - lo + 1) as u64
        })
        .sum()
}

// ---------------------------------------------------------------------------
// Graph orderings

/// Connected components, largest first; ties by smallest member.
fn components(rel: &VarRelations) -> Vec<Vec<usize>> {
    let n = rel.len();
    let mut seen = vec![false; n];
    let mut comps = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        let mut comp = vec![s];
        seen[s] = true;
        let mut k = 0;
        while k < comp.len() {
            let v = comp[k];
            k += 1;
            for u in rel.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    comp.push(u);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    comps
}

/// Breadth-first distances from `start` within its component.
fn distances(rel: &VarRelations, start: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; rel.len()];
    dist[start] = Some(0);
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        let d = dist[v].unwrap();
        for u in rel.neighbors(v) {
            if dist[u].is_none() {
                dist[u] = Some(d + 1);
                queue.push_back(u);
            }
        }
    }
    dist
}

fn min_degree(rel: &VarRelations, nodes: impl Iterator<Item = usize>) -> usize {
    nodes
        .min_by_key(|&v| (rel.degree(v), v))
        .expect("nonempty node set")
}

/// Pseudo-peripheral pair `(start, end)` of a component by repeated
/// breadth-first search from a minimum-degree node.
fn pseudo_peripheral(rel: &VarRelations, comp: &[usize]) -> (usize, usize) {
    let mut start = min_degree(rel, comp.iter().copied());
    loop {
        let dist = distances(rel, start);
        let ecc = comp.iter().filter_map(|&v| dist[v]).max().unwrap_or(0);
        let far = min_degree(
            rel,
            comp.iter().copied().filter(|&v| dist[v] == Some(ecc)),
        );
        let far_dist = distances(rel, far);
        let far_ecc = comp.iter().filter_map(|&v| far_dist[v]).max().unwrap_or(0);
        if far_ecc > ecc {
            start = far;
        } else {
            return (start, far);
        }
    }
}

fn cuthill_mckee_component(rel: &VarRelations, comp: &[usize]) -> Vec<usize> {
    let (start, _) = pseudo_peripheral(rel, comp);
    let mut visited = vec![false; rel.len()];
    visited[start] = true;
    let mut order = vec![start];
    let mut k = 0;
    while k < order.len() {
        let v = order[k];
        k += 1;
        let mut next: Vec<usize> = rel.neighbors(v).filter(|&u| !visited[u]).collect();
        next.sort_by(|&a, &b| {
            rel.weight(v, b)
                .cmp(&rel.weight(v, a))
                .then(rel.degree(a).cmp(&rel.degree(b)))
                .then(a.cmp(&b))
        });
        for u in next {
            visited[u] = true;
            order.push(u);
        }
    }
    order
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    Inactive,
    Preactive,
    Active,
    Postactive,
}

fn sloan_component(rel: &VarRelations, comp: &[usize]) -> Vec<usize> {
    const W1: i64 = 1;
    const W2: i64 = 2;
    let (start, end) = pseudo_peripheral(rel, comp);
    let dist = distances(rel, end);
    let n = rel.len();
    let mut priority = vec![0i64; n];
    for &v in comp {
        priority[v] = W1 * dist[v].unwrap_or(0) as i64 - W2 * (rel.degree(v) as i64 + 1);
    }
    let mut status = vec![Status::Inactive; n];
    status[start] = Status::Preactive;
    let mut queue = vec![start];
    let mut order = Vec::with_capacity(comp.len());
    while !queue.is_empty() {
        let (k, _) = queue
            .iter()
            .enumerate()
            .max_by(|(_, &a), (_, &b)| priority[a].cmp(&priority[b]).then(b.cmp(&a)))
            .unwrap();
        let i = queue.swap_remove(k);
        if status[i] == Status::Preactive {
            for j in rel.neighbors(i) {
                priority[j] += W2;
                if status[j] == Status::Inactive {
                    status[j] = Status::Preactive;
                    queue.push(j);
                }
            }
        }
        status[i] = Status::Postactive;
        order.push(i);
        let preactive: Vec<usize> = rel
            .neighbors(i)
            .filter(|&j| status[j] == Status::Preactive)
            .collect();
        for j in preactive {
            status[j] = Status::Active;
            priority[j] += W2;
            for k in rel.neighbors(j) {
                if status[k] != Status::Postactive {
                    priority[k] += W2;
                }
                if status[k] == Status::Inactive {
                    status[k] = Status::Preactive;
                    queue.push(k);
                }
            }
        }
    }
    order
}

fn per_component(
    rel: &VarRelations,
    algo: fn(&VarRelations, &[usize]) -> Vec<usize>,
    reverse: bool,
) -> Vec<usize> {
    components(rel)
        .iter()
        .flat_map(|comp| {
            let mut o = algo(rel, comp);
            if reverse {
                o.reverse();
            }
            o
        })
        .collect()
}

pub fn cuthill_mckee(rel: &VarRelations) -> VarOrder {
    VarOrder(per_component(rel, cuthill_mckee_component, false))
}

pub fn sloan(rel: &VarRelations) -> VarOrder {
    VarOrder(per_component(rel, sloan_component, false))
}

/// The four DCSH candidates: Cuthill-McKee, Sloan, and both reversed per
/// component.
pub fn dcsh_candidates(rel: &VarRelations) -> [VarOrder; 4] {
    [
        VarOrder(per_component(rel, cuthill_mckee_component, false)),
        VarOrder(per_component(rel, sloan_component, false)),
        VarOrder(per_component(rel, cuthill_mckee_component, true)),
        VarOrder(per_component(rel, sloan_component, true)),
    ]
}

/// Candidate with the lowest weighted event span; the first one on ties.
pub fn dcsh(rel: &VarRelations, hyperedges: &Hyperedges) -> VarOrder {
    let mut best: Option<(u64, VarOrder)> = None;
    for cand in dcsh_candidates(rel) {
        let score = wes_scaled(&cand.0, hyperedges);
        if best.as_ref().is_none_or(|(s, _)| score < *s) {
            best = Some((score, cand));
        }
    }
    best.map(|(_, o)| o).unwrap_or(VarOrder(Vec::new()))
}

const FORCE_ROUNDS: usize = 20;

/// Center-of-gravity iteration; returns the order with the lowest total span
/// seen, preferring earlier orders on ties.
pub fn force(initial: &VarOrder, hyperedges: &Hyperedges) -> VarOrder {
    let n = initial.0.len();
    let mut order = initial.0.clone();
    let mut best = order.clone();
    let mut best_span = total_span(&order, hyperedges);
    let mut member_of: Vec<Vec<usize>> = vec![Vec::new(); order.iter().max().map_or(0, |m| m + 1)];
    for (k, g) in hyperedges.0.iter().enumerate() {
        for &v in g {
            member_of[v].push(k);
        }
    }
    for _ in 0..FORCE_ROUNDS {
        let mut pos = vec![0usize; member_of.len()];
        for (p, &v) in order.iter().enumerate() {
            pos[v] = p;
        }
        let cog: Vec<f64> = hyperedges
            .0
            .iter()
            .map(|g| g.iter().map(|&v| pos[v] as f64).sum::<f64>() / g.len() as f64)
            .collect();
        let score = |v: usize| -> f64 {
            let gs = &member_of[v];
            if gs.is_empty() {
                n as f64
            } else {
                gs.iter().map(|&g| cog[g]).sum::<f64>() / gs.len() as f64
            }
        };
        let mut next = order.clone();
        next.sort_by(|&a, &b| score(a).partial_cmp(&score(b)).unwrap_or(Ordering::Equal));
        let span = total_span(&next, hyperedges);
        if span < best_span {
            best_span = span;
            best = next.clone();
        }
        if next == order {
            break;
        }
        order = next;
    }
    VarOrder(best)
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for (i, &first) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, first);
            out.push(tail);
        }
    }
    out
}

pub const WINDOW: usize = 4;

/// One left-to-right pass; each window is replaced by its best permutation
/// when that strictly lowers the weighted event span.
pub fn sliding_window(initial: &VarOrder, hyperedges: &Hyperedges) -> VarOrder {
    let mut order = initial.0.clone();
    let n = order.len();
    let w = WINDOW.min(n);
    if w < 2 {
        return VarOrder(order);
    }
    let mut current = wes_scaled(&order, hyperedges);
    for start in 0..=n - w {
        let window: Vec<usize> = order[start..start + w].to_vec();
        let mut best: Option<(u64, Vec<usize>)> = None;
        for perm in permutations(&window) {
            order[start..start + w].copy_from_slice(&perm);
            let score = wes_scaled(&order, hyperedges);
            if score < current && best.as_ref().is_none_or(|(s, _)| score < *s) {
                best = Some((score, perm));
            }
        }
        match best {
            Some((score, perm)) => {
                order[start..start + w].copy_from_slice(&perm);
                current = score;
            }
            None => order[start..start + w].copy_from_slice(&window),
        }
    }
    VarOrder(order)
}

/// How the variable order is chosen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OrderChoice {
    Model,
    Dcsh,
    Force,
    Sloan,
    CuthillMckee,
    PipelineV08,
    PipelineV40,
    Custom(Vec<String>),
}

impl std::str::FromStr for OrderChoice {
    type Err = OrderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "model" => OrderChoice::Model,
            "dcsh" => OrderChoice::Dcsh,
            "force" => OrderChoice::Force,
            "sloan" => OrderChoice::Sloan,
            "cm" => OrderChoice::CuthillMckee,
            "pipeline-v08" => OrderChoice::PipelineV08,
            "pipeline-v40" => OrderChoice::PipelineV40,
            _ => match s.strip_prefix("custom:") {
                Some(list) => OrderChoice::Custom(
                    list.split(',')
                        .map(|n| n.trim().to_string())
                        .filter(|n| !n.is_empty())
                        .collect(),
                ),
                None => return Err(OrderError::UnknownOrder(s.to_string())),
            },
        })
    }
}

impl std::fmt::Display for OrderChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OrderChoice::Model => write!(f, "model"),
            OrderChoice::Dcsh => write!(f, "dcsh"),
            OrderChoice::Force => write!(f, "force"),
            OrderChoice::Sloan => write!(f, "sloan"),
            OrderChoice::CuthillMckee => write!(f, "cm"),
            OrderChoice::PipelineV08 => write!(f, "pipeline-v08"),
            OrderChoice::PipelineV40 => write!(f, "pipeline-v40"),
            OrderChoice::Custom(names) => write!(f, "custom:{}", names.join(",")),
        }
    }
}

pub fn order_pipeline(model: &LinearizedModel, choice: &OrderChoice) -> Result<VarOrder, OrderError> {
    let n = model.variables.len();
    let (hyperedges, rel) = extract_relations(model);
    let declared = VarOrder::identity(n);
    if n == 0 {
        return Ok(declared);
    }
    Ok(match choice {
        OrderChoice::Model => declared,
        OrderChoice::Dcsh => dcsh(&rel, &hyperedges),
        OrderChoice::Force => force(&declared, &hyperedges),
        OrderChoice::Sloan => sloan(&rel),
        OrderChoice::CuthillMckee => cuthill_mckee(&rel),
        OrderChoice::PipelineV08 => {
            sliding_window(&force(&declared, &hyperedges), &hyperedges)
        }
        OrderChoice::PipelineV40 => {
            let start = dcsh(&rel, &hyperedges);
            sliding_window(&force(&start, &hyperedges), &hyperedges)
        }
        OrderChoice::Custom(names) => {
            let mut order = Vec::with_capacity(n);
            let mut used = vec![false; n];
            for name in names {
                match model.variables.iter().position(|v| &v.name == name) {
                    Some(i) if !used[i] => {
                        used[i] = true;
                        order.push(i);
                    }
                    _ => return Err(OrderError::NotAPermutation(names.join(","))),
                }
            }
            if order.len() != n {
                return Err(OrderError::NotAPermutation(names.join(",")));
            }
            VarOrder(order)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_from(n: usize, hyperedges: &[&[usize]]) -> (Hyperedges, VarRelations) {
        let mut weights = vec![vec![0; n]; n];
        for g in hyperedges {
            for (k, &a) in g.iter().enumerate() {
                for &b in &g[k + 1..] {
                    weights[a][b] += 1;
                    weights[b][a] += 1;
                }
            }
        }
        let names = (0..n).map(|i| format!("v{i}")).collect();
        (
            Hyperedges(hyperedges.iter().map(|g| g.to_vec()).collect()),
            VarRelations { names, weights },
        )
    }

    #[test]
    fn wes_examples() {
        let (h, _) = rel_from(4, &[&[0, 1, 2, 3]]);
        assert_eq!(wes(&[0, 1, 2, 3], &h), 2.0);
        let (h, _) = rel_from(4, &[&[0]]);
        assert_eq!(wes(&[0, 1, 2, 3], &h), 0.125);
        let (h, _) = rel_from(4, &[&[0, 1]]);
        let top = wes(&[0, 1, 2, 3], &h);
        let bottom = wes(&[2, 3, 0, 1], &h);
        assert_eq!(top, (2.0 * 2.0 / 4.0) * (2.0 / 4.0));
        assert_eq!(bottom, (2.0 * 4.0 / 4.0) * (2.0 / 4.0));
        assert!(top < bottom);
        assert_eq!(wes(&[0, 1], &Hyperedges::default()), 0.0);
    }

    #[test]
    fn singletons_go_last() {
        let (h, rel) = rel_from(4, &[&[1, 2], &[2, 3], &[0]]);
        let order = dcsh(&rel, &h);
        assert_eq!(*order.0.last().unwrap(), 0);
        let mut sorted = order.0.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1, 2, 3]);
    }

    #[test]
    fn single_variable() {
        let (h, rel) = rel_from(1, &[&[0]]);
        assert_eq!(dcsh(&rel, &h).0, vec![0]);
        assert_eq!(sliding_window(&VarOrder(vec![0]), &h).0, vec![0]);
    }

    #[test]
    fn dcsh_picks_minimum() {
        let (h, rel) = rel_from(3, &[&[0, 1], &[1, 2]]);
        let chosen = wes_scaled(&dcsh(&rel, &h).0, &h);
        let min = dcsh_candidates(&rel)
            .iter()
            .map(|c| wes_scaled(&c.0, &h))
            .min()
            .unwrap();
        assert_eq!(chosen, min);
    }

    #[test]
    fn force_pulls_related_together() {
        let (h, _) = rel_from(3, &[&[0, 2]]);
        let out = force(&VarOrder(vec![0, 1, 2]), &h);
        let pos = |v| out.0.iter().position(|&x| x == v).unwrap() as i64;
        assert_eq!((pos(0) - pos(2)).abs(), 1);
        assert_eq!(force(&VarOrder(vec![0, 1, 2]), &Hyperedges::default()).0, vec![0, 1, 2]);
    }

    #[test]
    fn force_keeps_optimal_path() {
        let (h, _) = rel_from(3, &[&[0, 1], &[1, 2]]);
        assert_eq!(force(&VarOrder(vec![0, 1, 2]), &h).0, vec![0, 1, 2]);
    }

    #[test]
    fn window_covering_everything_is_optimal() {
        let (h, _) = rel_from(3, &[&[0, 2], &[2], &[1, 2]]);
        let out = sliding_window(&VarOrder(vec![0, 1, 2]), &h);
        let best = permutations(&[0, 1, 2])
            .iter()
            .map(|p| wes_scaled(p, &h))
            .min()
            .unwrap();
        assert_eq!(wes_scaled(&out.0, &h), best);
    }

    #[test]
    fn parse_choices() {
        assert_eq!("cm".parse::<OrderChoice>().unwrap(), OrderChoice::CuthillMckee);
        assert_eq!(
            "custom:a,b".parse::<OrderChoice>().unwrap(),
            OrderChoice::Custom(vec!["a".into(), "b".into()])
        );
        assert!("bogus".parse::<OrderChoice>().is_err());
    }
}
