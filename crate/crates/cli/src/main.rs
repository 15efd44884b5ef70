use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use efasynth::bench::{self, RunError};
use efasynth::config::{EdgeApplication, Granularity, PlantInvariantMode, Preset, SynthesisConfig};
use efasynth::model::{model_stats, validate};
use efasynth::oracle::{self, CompareError, DEFAULT_STATE_CAP};
use efasynth::order::OrderChoice;
use efasynth::synthesis::SynthesisError;

const EXIT_DIAGNOSTICS: u8 = 1;
const EXIT_EMPTY: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser)]
#[command(name = "synth", version, about = "Symbolic supervisory controller synthesis for extended finite automata")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a supervisor and write the controlled-system model.
    Run {
        file: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Write the run report as JSON.
        #[arg(long)]
        stats_json: Option<PathBuf>,
        /// Output model path; defaults to `<name>.sup.efa` next to the input.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every `.efa` model of a directory under one or more presets.
    Bench {
        dir: PathBuf,
        /// Presets to compare; the first is the baseline for reduction factors.
        #[arg(long = "config", default_values_t = [Preset::V08, Preset::V40])]
        presets: Vec<Preset>,
        #[arg(long, default_value_t = 3)]
        repetitions: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Print model size metrics.
    Stats {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Print uncontrolled and controlled reachable state counts.
    Count {
        file: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Check symbolic synthesis against explicit enumeration.
    #[command(hide = true)]
    Oracle {
        file: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
        cap: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

impl Toggle {
    fn on(self) -> bool {
        matches!(self, Toggle::On)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum GranularityArg {
    Edge,
    Event,
}

#[derive(Clone, Copy, ValueEnum)]
enum ApplicationArg {
    Compound,
    Naive,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlantInvariantArg {
    Implication,
    Restrict,
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long, default_value_t = Preset::V40)]
    config: Preset,
    /// model, dcsh, force, sloan, cm, pipeline-v08, pipeline-v40 or custom:a,b,...
    #[arg(long)]
    order: Option<OrderChoice>,
    #[arg(long)]
    granularity: Option<GranularityArg>,
    #[arg(long)]
    early_stop: Option<Toggle>,
    #[arg(long)]
    forward: Option<Toggle>,
    #[arg(long)]
    simplify: Option<Toggle>,
    #[arg(long)]
    edge_application: Option<ApplicationArg>,
    #[arg(long)]
    plant_invariants: Option<PlantInvariantArg>,
    #[arg(long)]
    stage_skipping: Option<Toggle>,
    #[arg(long)]
    stop_on_empty_init: Option<Toggle>,
}

impl ConfigArgs {
    fn resolve(&self) -> SynthesisConfig {
        let mut c = self.config.config();
        if let Some(order) = &self.order {
            c.order = order.clone();
        }
        if let Some(g) = self.granularity {
            c.granularity = match g {
                GranularityArg::Edge => Granularity::PerEdge,
                GranularityArg::Event => Granularity::PerEvent,
            };
        }
        if let Some(a) = self.edge_application {
            c.edge_application = match a {
                ApplicationArg::Compound => EdgeApplication::Compound,
                ApplicationArg::Naive => EdgeApplication::Naive,
            };
        }
        if let Some(p) = self.plant_invariants {
            c.plant_invariants = match p {
                PlantInvariantArg::Implication => PlantInvariantMode::ImplicationCheck,
                PlantInvariantArg::Restrict => PlantInvariantMode::Restrict,
            };
        }
        let toggles = [
            (self.early_stop, &mut c.early_stop),
            (self.forward, &mut c.forward),
            (self.simplify, &mut c.simplify),
            (self.stage_skipping, &mut c.stage_skipping),
            (self.stop_on_empty_init, &mut c.stop_on_empty_init),
        ];
        for (flag, slot) in toggles {
            if let Some(t) = flag {
                *slot = t.on();
            }
        }
        c
    }
}

fn report_error(err: &RunError) -> ExitCode {
    match err {
        RunError::Synthesis(SynthesisError::Diagnostics(diags)) => {
            for d in diags {
                eprintln!("error: {d}");
            }
        }
        RunError::Parse(e) => eprintln!("error: {}:{}:{}: {}", e.span.file, e.span.line, e.span.column, e.message),
        other => eprintln!("error: {other}"),
    }
    ExitCode::from(EXIT_DIAGNOSTICS)
}

fn write_file(path: &Path, text: &str) -> Result<(), ExitCode> {
    std::fs::write(path, text).map_err(|e| {
        eprintln!("error: cannot write {}: {e}", path.display());
        ExitCode::from(EXIT_DIAGNOSTICS)
    })
}

fn default_output(file: &Path) -> PathBuf {
    file.with_file_name(format!("{}.sup.efa", bench::model_name(file)))
}

fn cmd_run(file: &Path, config: &SynthesisConfig, stats_json: Option<&Path>, out: Option<&Path>) -> ExitCode {
    let outcome = match bench::run(file, config) {
        Ok(o) => o,
        Err(e) => return report_error(&e),
    };
    let r = &outcome.report;
    println!("model:             {}", r.model);
    println!("config:            {}", r.config);
    println!("bdd operations:    {}", r.bdd_operations);
    println!("peak live nodes:   {}", r.peak_live_nodes);
    println!("edge applications: {}", r.edge_applications);
    println!("uncontrolled:      {} states", r.us_states);
    println!("controlled:        {} states", r.cs_states);
    if let Some(path) = stats_json {
        if let Err(code) = write_file(path, &r.to_json()) {
            return code;
        }
    }
    match outcome.output_text() {
        None => {
            println!("empty supervisor");
            ExitCode::from(EXIT_EMPTY)
        }
        Some(text) => {
            let path = out.map(Path::to_path_buf).unwrap_or_else(|| default_output(file));
            if let Err(code) = write_file(&path, &text) {
                return code;
            }
            println!("supervisor:        {}", path.display());
            ExitCode::SUCCESS
        }
    }
}

fn cmd_bench(dir: &Path, presets: &[Preset], repetitions: usize, csv: Option<&Path>, json: Option<&Path>) -> ExitCode {
    let files = match bench::suite_files(dir) {
        Ok(f) => f,
        Err(e) => return report_error(&e),
    };
    let mut models = Vec::new();
    for f in &files {
        match bench::read_model(f) {
            Ok(spec) => models.push((bench::model_name(f), spec)),
            Err(e) => return report_error(&e),
        }
    }
    let configs: Vec<(String, SynthesisConfig)> = presets.iter().map(|p| (p.to_string(), p.config())).collect();
    let table = match bench::bench(&models, &configs, repetitions) {
        Ok(t) => t,
        Err(e) => return report_error(&e),
    };
    print!("{}", table.to_csv());
    for r in &table.reductions {
        println!(
            "{}: operations x{:.2}, peak nodes x{:.2}",
            r.model, r.operations_factor, r.nodes_factor
        );
    }
    if let Some(path) = csv {
        if let Err(code) = write_file(path, &table.to_csv()) {
            return code;
        }
    }
    if let Some(path) = json {
        if let Err(code) = write_file(path, &table.to_json()) {
            return code;
        }
    }
    if table.rows.iter().all(|r| r.deterministic) {
        ExitCode::SUCCESS
    } else {
        eprintln!("error: repetitions differ");
        ExitCode::from(EXIT_INTERNAL)
    }
}

fn cmd_stats(file: &Path, json: bool) -> ExitCode {
    let spec = match bench::read_model(file) {
        Ok(s) => s,
        Err(e) => return report_error(&e),
    };
    let diags = validate(&spec);
    if !diags.is_empty() {
        return report_error(&RunError::Synthesis(SynthesisError::Diagnostics(diags)));
    }
    let stats = model_stats(&spec);
    if json {
        println!("{}", serde_json::to_string_pretty(&stats).expect("stats serialize"));
    } else {
        for (name, value) in stats.columns() {
            println!("{name:>4} {value}");
        }
    }
    ExitCode::SUCCESS
}

fn cmd_count(file: &Path, config: &SynthesisConfig) -> ExitCode {
    let spec = match bench::read_model(file) {
        Ok(s) => s,
        Err(e) => return report_error(&e),
    };
    match bench::count(&spec, config) {
        Ok(c) => {
            println!("US {}", c.us);
            println!("CS {}", c.cs);
            ExitCode::SUCCESS
        }
        Err(e) => report_error(&e),
    }
}

fn cmd_oracle(file: &Path, config: &SynthesisConfig, cap: u64) -> ExitCode {
    let spec = match bench::read_model(file) {
        Ok(s) => s,
        Err(e) => return report_error(&e),
    };
    match oracle::compare(&spec, config, cap) {
        Ok(c) => {
            println!("states:     {}", c.states);
            println!("controlled: oracle {} symbolic {}", c.oracle_controlled, c.symbolic_controlled);
            if c.agrees() {
                println!("agree");
                ExitCode::SUCCESS
            } else {
                println!(
                    "disagree: {} state(s), guards of [{}]",
                    c.controlled_mismatches,
                    c.guard_mismatches.join(", ")
                );
                ExitCode::from(EXIT_INTERNAL)
            }
        }
        Err(CompareError::Synthesis(e)) => report_error(&RunError::Synthesis(e)),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_DIAGNOSTICS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run {
            file,
            config,
            stats_json,
            out,
        } => cmd_run(file, &config.resolve(), stats_json.as_deref(), out.as_deref()),
        Command::Bench {
            dir,
            presets,
            repetitions,
            csv,
            json,
        } => cmd_bench(dir, presets, *repetitions, csv.as_deref(), json.as_deref()),
        Command::Stats { file, json } => cmd_stats(file, *json),
        Command::Count { file, config } => cmd_count(file, &config.resolve()),
        Command::Oracle { file, config, cap } => cmd_oracle(file, &config.resolve(), *cap),
    }
}
