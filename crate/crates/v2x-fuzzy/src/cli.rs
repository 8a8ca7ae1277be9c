//! Command-line front end. Every command returns its exit code: 0 on
//! success, 1 on a runtime failure, 2 on a configuration error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use clap::{Args, Parser, Subcommand, ValueEnum};
use v2x_fuzzy_core::fuzzy::{FisDefinition, FuzzyError, GateDecision};
use v2x_fuzzy_core::metrics::{compare_runs, ComparisonReport};
use v2x_fuzzy_core::miner::{extract_rules, fcm_cluster, FcmParams};
use v2x_fuzzy_core::sim::{RunOutput, Simulation, TraceRecord};
use v2x_fuzzy_core::world::{Mode, Scenario, DEFAULT_SEED};

use crate::config::{acceptance_label, load_fis, parse_config, Overrides, Resolved, DEFAULT_OUT};
use crate::dataset::read_dataset;
use crate::export::{comparison_json, write_file, write_run, COMPARISON};
use crate::fis_file::fis_to_toml;
use crate::issues::ConfigErrors;
use crate::scenario_file::scenario_to_toml;

pub const EFFECTIVE_CONFIG: &str = "effective_config.toml";
pub const EFFECTIVE_FIS: &str = "effective.fis";
pub const TRACE: &str = "trace.csv";

#[derive(Debug, Parser)]
#[command(
    name = "v2x-fuzzy",
    version,
    about = "Fuzzy transmit gating for vehicular broadcast: simulate, compare, inspect, mine"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation and export its results.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Run baseline and fuzzy on the same seed and report the difference.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Evaluate the transmit gate at one input point.
    FisEval {
        /// Speed, m/s.
        #[arg(allow_negative_numbers = true)]
        speed: f64,
        /// Sender antenna gain.
        #[arg(allow_negative_numbers = true)]
        sender_gain: f64,
        /// Receiver antenna gain.
        #[arg(allow_negative_numbers = true)]
        receiver_gain: f64,
        #[arg(long)]
        fis: Option<PathBuf>,
        /// Report the verdict for this level only.
        #[arg(long, value_enum)]
        acceptance: Option<AcceptanceArg>,
    },
    /// Cluster a dataset and print the rules its centers suggest.
    MineRules {
        /// CSV with a header and columns s, sg, rg, f.
        dataset: PathBuf,
        /// Number of clusters.
        k: usize,
        #[arg(long)]
        fis: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 2.0)]
        fuzzifier: f64,
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
        #[arg(long, default_value_t = 300)]
        max_iter: usize,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Preset name (scenario1, scenario2) or scenario file.
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long, value_enum)]
    pub acceptance: Option<AcceptanceArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = DEFAULT_OUT)]
    pub out: PathBuf,
    /// Simulated seconds.
    #[arg(long, allow_negative_numbers = true)]
    pub duration: Option<f64>,
    /// Rule-base definition; the built-in one when absent.
    #[arg(long)]
    pub fis: Option<PathBuf>,
    /// Write every processed event to trace.csv.
    #[arg(long)]
    pub trace: bool,
    /// Override any scenario key, e.g. `--set phy.sensitivity_dbm=-85`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Baseline,
    Fuzzy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AcceptanceArg {
    Bad,
    Good,
    Vgood,
}

impl AcceptanceArg {
    fn as_str(self) -> &'static str {
        match self {
            AcceptanceArg::Bad => "bad",
            AcceptanceArg::Good => "good",
            AcceptanceArg::Vgood => "vgood",
        }
    }
}

impl CommonArgs {
    fn overrides(&self, mode: Option<Mode>) -> Overrides {
        Overrides {
            scenario: self.scenario.clone(),
            mode,
            acceptance: self.acceptance.map(|a| a.as_str().to_string()),
            seed: self.seed,
            duration: self.duration,
            fis: self.fis.clone(),
            set: self.set.clone(),
        }
    }
}

/// Failure of a command after its configuration was accepted.
#[derive(Debug)]
enum Failure {
    Config(ConfigErrors),
    Runtime(String),
}

impl From<ConfigErrors> for Failure {
    fn from(e: ConfigErrors) -> Self {
        Failure::Config(e)
    }
}

impl From<crate::export::ExportError> for Failure {
    fn from(e: crate::export::ExportError) -> Self {
        Failure::Runtime(e.to_string())
    }
}

/// Parses `args` (program name first) and runs the chosen command.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let arg =
                e.get(clap::error::ContextKind::InvalidArg).map_or_else(|| "arguments".to_string(), |v| v.to_string());
            let msg =
                e.render().to_string().lines().next().unwrap_or_default().trim_start_matches("error: ").to_string();
            let _ = writeln!(err, "{}", ConfigErrors::single(arg, "command line", msg).to_json());
            return 2;
        }
    };
    let result = match cli.command {
        Command::Run { common, mode } => cmd_run(&common, mode, out),
        Command::Compare { common } => cmd_compare(&common, out),
        Command::FisEval { speed, sender_gain, receiver_gain, fis, acceptance } => {
            cmd_fis_eval([speed, sender_gain, receiver_gain], fis.as_deref(), acceptance, out)
        }
        Command::MineRules { dataset, k, fis, seed, fuzzifier, tolerance, max_iter } => cmd_mine_rules(
            &dataset,
            fis.as_deref(),
            FcmParams { clusters: k, fuzzifier, tolerance, max_iterations: max_iter, seed },
            out,
        ),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Config(e)) => {
            let _ = writeln!(err, "{}", e.to_json());
            2
        }
        Err(Failure::Runtime(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
    }
}

/// Writes the configuration a run actually used next to its results.
fn echo_config(dir: &Path, r: &Resolved, scenario: &Scenario) -> Result<(), Failure> {
    let mut doc = format!("# effective configuration, started from {}\n", r.config.source);
    doc.push_str(&scenario_to_toml(scenario));
    write_file(&dir.join(EFFECTIVE_CONFIG), doc.as_bytes())?;
    write_file(&dir.join(EFFECTIVE_FIS), fis_to_toml(&r.fis).as_bytes())?;
    Ok(())
}

/// Streams trace records as CSV; the first write error is kept for later.
struct TraceFile {
    writer: BufWriter<File>,
    error: Option<std::io::Error>,
}

fn simulate(scenario: Scenario, fis: FisDefinition, trace: Option<&Path>) -> Result<RunOutput, Failure> {
    let mut sim = Simulation::new(scenario, fis).map_err(|e| Failure::Runtime(e.to_string()))?;
    let Some(path) = trace else {
        return Ok(sim.run());
    };
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Failure::Runtime(format!("{}: {e}", parent.display())))?;
    }
    let file = File::create(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    let state = Arc::new(Mutex::new(TraceFile { writer: BufWriter::new(file), error: None }));
    {
        let mut t = state.lock().expect("trace lock");
        if let Err(e) = writeln!(t.writer, "time,seq,event") {
            t.error = Some(e);
        }
    }
    let sink = state.clone();
    sim.set_trace(Box::new(move |r: &TraceRecord<'_>| {
        let mut t = sink.lock().expect("trace lock");
        if t.error.is_none() {
            let seq = r.seq.map(|s| s.to_string()).unwrap_or_default();
            if let Err(e) = writeln!(t.writer, "{:.16e},{seq},\"{:?}\"", r.time, r.event) {
                t.error = Some(e);
            }
        }
    }));
    let out = sim.run();
    let mut t = state.lock().expect("trace lock");
    let flushed = t.writer.flush();
    match t.error.take().map_or(flushed, Err) {
        Ok(()) => Ok(out),
        Err(e) => Err(Failure::Runtime(format!("{}: {e}", path.display()))),
    }
}

fn cmd_run(common: &CommonArgs, mode: Option<ModeArg>, out: &mut dyn Write) -> Result<(), Failure> {
    let mode = mode.map(|m| if m == ModeArg::Fuzzy { Mode::Fuzzy } else { Mode::Baseline });
    let r = parse_config(&common.overrides(mode), common.out.clone(), common.trace)?;
    let scenario = r.scenario.scenario.clone();
    let dir = &r.config.out;
    echo_config(dir, &r, &scenario)?;
    let trace = r.config.trace.then(|| dir.join(TRACE));
    let run = simulate(scenario, r.fis.clone(), trace.as_deref())?;
    write_run(dir, &run)?;
    let s = &run.summary;
    let _ = writeln!(
        out,
        "{} {} seed {}: {} nodes, {} frames on air, mean idle {:.6} s; results in {}",
        s.scenario,
        s.mode,
        s.seed,
        s.nodes,
        s.frames_on_air,
        s.mean_idle_seconds,
        dir.display()
    );
    Ok(())
}

fn cmd_compare(common: &CommonArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let r = parse_config(&common.overrides(None), common.out.clone(), common.trace)?;
    let dir = r.config.out.clone();
    let base = Scenario { mode: Mode::Baseline, ..r.scenario.scenario.clone() };
    let fuzzy = Scenario { mode: Mode::Fuzzy, ..r.scenario.scenario.clone() };
    echo_config(&dir, &r, &r.scenario.scenario)?;
    let base_dir = dir.join("baseline");
    let fuzzy_dir = dir.join("fuzzy");
    let trace_of = |d: &Path| r.config.trace.then(|| d.join(TRACE));
    let (base_trace, fuzzy_trace) = (trace_of(&base_dir), trace_of(&fuzzy_dir));
    let (b, f) = std::thread::scope(|s| {
        let hb = s.spawn(|| simulate(base, r.fis.clone(), base_trace.as_deref()));
        let hf = s.spawn(|| simulate(fuzzy, r.fis.clone(), fuzzy_trace.as_deref()));
        (hb.join().expect("baseline run panicked"), hf.join().expect("fuzzy run panicked"))
    });
    let (b, f) = (b?, f?);
    write_run(&base_dir, &b)?;
    write_run(&fuzzy_dir, &f)?;
    let report = compare_runs(&b.summary, &f.summary).map_err(|e| Failure::Runtime(e.to_string()))?;
    write_file(&dir.join(COMPARISON), comparison_json(&report).as_bytes())?;
    print_report(out, &report, &dir);
    Ok(())
}

fn percent(p: Option<f64>) -> String {
    p.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}%"))
}

fn print_report(out: &mut dyn Write, rep: &ComparisonReport, dir: &Path) {
    let _ = writeln!(out, "{} seed {} over {} s, {} nodes", rep.scenario, rep.seed, rep.duration, rep.nodes);
    let _ = writeln!(out, "{:<24} {:>16} {:>16} {:>10} {:>12}", "figure", "baseline", "fuzzy", "change", "per-node");
    for f in &rep.figures {
        let _ = writeln!(
            out,
            "{:<24} {:>16.3} {:>16.3} {:>10} {:>12}",
            f.name,
            f.total.baseline,
            f.total.fuzzy,
            percent(f.total.percent),
            percent(f.per_node_mean.percent)
        );
    }
    let _ = writeln!(out, "report in {}", dir.join(COMPARISON).display());
}

fn cmd_fis_eval(
    inputs: [f64; 3],
    fis_path: Option<&Path>,
    acceptance: Option<AcceptanceArg>,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let fis = load_fis(fis_path)?;
    if fis.inputs.len() != 3 {
        return Err(ConfigErrors::single("input", "--fis", "fis-eval needs a rule base with three inputs").into());
    }
    if let Some(i) = inputs.iter().position(|x| !x.is_finite()) {
        let key = ["speed", "sender_gain", "receiver_gain"][i];
        return Err(ConfigErrors::single(key, "command line", "must be a finite number").into());
    }
    let levels: Vec<usize> = match acceptance {
        Some(a) => {
            let label = acceptance_label(&fis, a.as_str()).ok_or_else(|| {
                ConfigErrors::single(
                    "acceptance",
                    "--acceptance",
                    format!("rule base has no output term `{}`", a.as_str()),
                )
            })?;
            vec![fis.output_term(&label).expect("label came from the rule base")]
        }
        None => (0..fis.output.terms.len()).collect(),
    };
    for (v, x) in fis.inputs.iter().zip(inputs) {
        let (lo, hi) = v.universe;
        if x < lo || x > hi {
            let _ = writeln!(out, "note: {} = {x} lies outside [{lo}, {hi}] and is clamped", v.name);
        }
    }
    match fis.infer(&inputs) {
        Ok(inf) => {
            let _ = writeln!(out, "activations:");
            for (rule, a) in fis.rules.iter().zip(&inf.activations) {
                let _ = writeln!(out, "  {a:.6}  {}", fis.format_rule(rule));
            }
            let _ = writeln!(out, "term levels:");
            for (t, l) in fis.output.terms.iter().zip(&inf.term_levels) {
                let _ = writeln!(out, "  {:<10} {l:.6}", t.label);
            }
            let class = fis.classify_output(inf.crisp);
            let _ = writeln!(out, "crispF: {:.6}", inf.crisp);
            let _ = writeln!(out, "class: {}", fis.output.terms[class].label);
        }
        Err(FuzzyError::NoRuleFired) => {
            let _ = writeln!(out, "no rule fired");
        }
        Err(e) => return Err(Failure::Runtime(e.to_string())),
    }
    for level in levels {
        let verdict = match fis.gate_decision(&inputs, level) {
            GateDecision::Transmit => "Transmit",
            GateDecision::Defer => "Defer",
        };
        let _ = writeln!(out, "gate at {}: {verdict}", fis.output.terms[level].label);
    }
    Ok(())
}

fn cmd_mine_rules(
    dataset: &Path,
    fis_path: Option<&Path>,
    params: FcmParams,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let fis = load_fis(fis_path)?;
    let shown = dataset.display().to_string();
    let file = File::open(dataset)
        .map_err(|e| ConfigErrors::single("dataset", "command line", format!("cannot read {shown}: {e}")))?;
    let data = read_dataset(std::io::BufReader::new(file), &shown)
        .map_err(|e| ConfigErrors::single("dataset", shown.clone(), e.to_string()))?;
    let fcm = fcm_cluster(&data, &params).map_err(|e| Failure::Runtime(e.to_string()))?;
    let rules = extract_rules(&fcm.centers, &fis).map_err(|e| Failure::Runtime(e.to_string()))?;
    let _ = writeln!(
        out,
        "# {} rows, {} clusters, {} iterations, J = {:.6e}",
        data.len(),
        params.clusters,
        fcm.iterations,
        fcm.objective
    );
    for (i, c) in fcm.centers.iter().enumerate() {
        let _ = writeln!(out, "# center {}: s={:.4} sg={:.4} rg={:.4} f={:.4}", i + 1, c[0], c[1], c[2], c[3]);
    }
    for rule in &rules {
        let _ = writeln!(out, "{},", crate::scenario_file::quote(&fis.format_rule(rule)));
    }
    Ok(())
}
