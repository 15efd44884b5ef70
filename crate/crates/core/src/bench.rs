//! Run reports and the benchmark harness.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_bigint::BigUint;
use serde::Serialize;
use thiserror::Error;

use crate::bdd::NodeRef;
use crate::config::SynthesisConfig;
use crate::emit::{emit, EmitOptions};
use crate::encode::Sefa;
use crate::model::{Side, Specification};
use crate::parser::{parse, unparse, ParseError};
use crate::synthesis::{encode_model, frs, sscs, StageStats, SynthesisError};
use crate::transform::{linearize, plantify};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub model: String,
    pub config: String,
    /// BDD operations of encoding and synthesis.
    pub bdd_operations: u64,
    pub peak_live_nodes: u64,
    pub edge_applications: u64,
    pub rounds: u64,
    #[serde(serialize_with = "as_decimal")]
    pub us_states: BigUint,
    #[serde(serialize_with = "as_decimal")]
    pub cs_states: BigUint,
    pub empty_supervisor: bool,
    pub stages: Vec<StageStats>,
    /// Informative only; excluded from equality checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u64>,
}

fn as_decimal<S: serde::Serializer>(n: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&n.to_string())
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The report without its timing, for determinism comparisons.
    pub fn untimed(&self) -> RunReport {
        RunReport {
            wall_time_ms: None,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    /// Controlled-system model, absent for an empty supervisor.
    pub output: Option<Specification>,
}

impl RunOutcome {
    pub fn output_text(&self) -> Option<String> {
        self.output.as_ref().map(unparse)
    }
}

/// States reachable in `sefa` from `initial`.
pub fn reachable_states(sefa: &mut Sefa, initial: NodeRef, restriction: NodeRef, config: &SynthesisConfig) -> BigUint {
    let edges: Vec<usize> = (0..sefa.edges.len()).collect();
    let r = frs(sefa, initial, &edges, restriction, config);
    sefa.count_states(r.states)
}

/// The uncontrolled system: requirement automata plantified, so they only
/// track state, and requirement invariants dropped.
pub fn uncontrolled_model(spec: &Specification) -> Specification {
    let mut out = plantify(spec);
    out.invariants.retain(|i| i.side == Side::Plant);
    out
}

/// Number of reachable states of the uncontrolled system.
pub fn uncontrolled_states(spec: &Specification, config: &SynthesisConfig) -> Result<BigUint, SynthesisError> {
    let model = linearize(&uncontrolled_model(spec));
    let mut sefa = encode_model(&model, config)?;
    let init = sefa.initial;
    Ok(reachable_states(&mut sefa, init, NodeRef::TRUE, config))
}

/// Full pipeline on a parsed model.
pub fn run_spec(name: &str, spec: &Specification, config: &SynthesisConfig) -> Result<RunOutcome, RunError> {
    let start = Instant::now();
    let problems = crate::model::validate_for_synthesis(spec);
    if !problems.is_empty() {
        return Err(SynthesisError::Diagnostics(problems).into());
    }
    let model = linearize(&plantify(spec));
    let mut sefa = encode_model(&model, config)?;
    let result = sscs(&mut sefa, config);
    let metrics = sefa.manager.metrics();

    let cs_states = if result.empty {
        BigUint::default()
    } else {
        reachable_states(&mut sefa, result.initial, NodeRef::TRUE, config)
    };
    let output = if result.empty {
        None
    } else {
        Some(emit(spec, &mut sefa, &result, &EmitOptions::new(config.simplify)).expect("supervisor is not empty"))
    };
    let us_states = uncontrolled_states(spec, config)?;
    let report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        model: name.to_string(),
        config: config.fingerprint(),
        bdd_operations: metrics.operations,
        peak_live_nodes: metrics.peak_live_nodes,
        edge_applications: result.edge_applications,
        rounds: result.rounds,
        us_states,
        cs_states,
        empty_supervisor: result.empty,
        stages: result.stages.clone(),
        wall_time_ms: Some(start.elapsed().as_millis() as u64),
    };
    Ok(RunOutcome { report, output })
}

pub fn read_model(path: &Path) -> Result<Specification, RunError> {
    let text = std::fs::read_to_string(path).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(parse(&text, &path.display().to_string())?)
}

pub fn model_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn run(path: &Path, config: &SynthesisConfig) -> Result<RunOutcome, RunError> {
    let spec = read_model(path)?;
    run_spec(&model_name(path), &spec, config)
}

/// Uncontrolled and controlled reachable state counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StateCounts {
    #[serde(serialize_with = "as_decimal")]
    pub us: BigUint,
    #[serde(serialize_with = "as_decimal")]
    pub cs: BigUint,
}

pub fn count(spec: &Specification, config: &SynthesisConfig) -> Result<StateCounts, RunError> {
    let outcome = run_spec("", spec, config)?;
    Ok(StateCounts {
        us: outcome.report.us_states,
        cs: outcome.report.cs_states,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BenchRow {
    pub model: String,
    pub config: String,
    pub bdd_operations: u64,
    pub peak_live_nodes: u64,
    pub edge_applications: u64,
    #[serde(serialize_with = "as_decimal")]
    pub us_states: BigUint,
    #[serde(serialize_with = "as_decimal")]
    pub cs_states: BigUint,
    pub empty_supervisor: bool,
    /// All repetitions produced identical metrics and output.
    pub deterministic: bool,
}

/// Reduction factors `baseline / candidate` for one model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reduction {
    pub model: String,
    pub operations_factor: f64,
    pub nodes_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchTable {
    pub schema_version: u32,
    pub rows: Vec<BenchRow>,
    pub reductions: Vec<Reduction>,
}

pub const BENCH_CSV_COLUMNS: [&str; 9] = [
    "model",
    "config",
    "bdd_operations",
    "peak_live_nodes",
    "edge_applications",
    "us_states",
    "cs_states",
    "empty_supervisor",
    "deterministic",
];

impl BenchTable {
    pub fn to_csv(&self) -> String {
        let mut out = BENCH_CSV_COLUMNS.join(",");
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.model,
                r.config,
                r.bdd_operations,
                r.peak_live_nodes,
                r.edge_applications,
                r.us_states,
                r.cs_states,
                r.empty_supervisor,
                r.deterministic
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }
}

/// Ratio with `0/0 = 1`.
pub fn reduction_factor(baseline: u64, candidate: u64) -> f64 {
    if candidate == 0 {
        if baseline == 0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        baseline as f64 / candidate as f64
    }
}

/// `.efa` files of a directory, sorted by name.
pub fn suite_files(dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    let entries = std::fs::read_dir(dir).map_err(|source| RunError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "efa") && !p.to_string_lossy().ends_with(".sup.efa"))
        .collect();
    files.sort();
    Ok(files)
}

/// Run every model under every labeled configuration `repetitions` times.
/// With exactly two configurations, the first is the baseline for the
/// reduction factors.
pub fn bench(
    models: &[(String, Specification)],
    configs: &[(String, SynthesisConfig)],
    repetitions: usize,
) -> Result<BenchTable, RunError> {
    let mut rows = Vec::new();
    let mut reductions = Vec::new();
    for (name, spec) in models {
        let mut per_config = Vec::new();
        for (label, config) in configs {
            let first = run_spec(name, spec, config)?;
            let mut deterministic = true;
            for _ in 1..repetitions.max(1) {
                let again = run_spec(name, spec, config)?;
                deterministic &= again.report.untimed() == first.report.untimed()
                    && again.output_text() == first.output_text();
            }
            let r = &first.report;
            let row = BenchRow {
                model: name.clone(),
                config: label.clone(),
                bdd_operations: r.bdd_operations,
                peak_live_nodes: r.peak_live_nodes,
                edge_applications: r.edge_applications,
                us_states: r.us_states.clone(),
                cs_states: r.cs_states.clone(),
                empty_supervisor: r.empty_supervisor,
                deterministic,
            };
            per_config.push(row.clone());
            rows.push(row);
        }
        if let [base, cand] = per_config.as_slice() {
            reductions.push(Reduction {
                model: name.clone(),
                operations_factor: reduction_factor(base.bdd_operations, cand.bdd_operations),
                nodes_factor: reduction_factor(base.peak_live_nodes, cand.peak_live_nodes),
            });
        }
    }
    Ok(BenchTable {
        schema_version: REPORT_SCHEMA_VERSION,
        rows,
        reductions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_runs_have_unit_factor() {
        assert_eq!(reduction_factor(10, 10), 1.0);
        assert_eq!(reduction_factor(0, 0), 1.0);
        assert_eq!(reduction_factor(8, 2), 4.0);
    }

    #[test]
    fn repeated_runs_are_flagged_deterministic() {
        let spec = parse(
            "controllable a;\nplant P {\n  disc int[0..3] x = 0;\n  location L:\n    initial;\n    marked;\n    edge a when x < 3 do x := x + 1;\n}\n",
            "t",
        )
        .unwrap();
        let table = bench(
            &[("m".to_string(), spec)],
            &[("v40".to_string(), SynthesisConfig::v40())],
            3,
        )
        .unwrap();
        assert_eq!(table.rows.len(), 1);
        assert!(table.rows[0].deterministic);
        assert_eq!(table.rows[0].us_states, 4u32.into());
        assert!(table.to_csv().starts_with("model,config,"));
    }
}
