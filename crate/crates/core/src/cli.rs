//! Command-line front end: `scan`, `gradstats`, `optimize`, `display` and
//! `replay`. Every run writes its outputs plus a manifest that records the
//! resolved settings and a SHA-256 of each output, so `replay` can check a
//! rerun byte for byte.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Arg, ArgAction, ArgMatches};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Command, Settings};
use crate::error::{Error, Result};
use crate::estimators::Method;
use crate::experiments::{self, grad_table, optimize, ordering_violations, scan, GradRow};
use crate::simulator::{display_event, loss_value, material_raster, Event, LossProgram, Mode};
use crate::stochastic::DiscreteAlternative;

pub const TOOL: &str = "stochbranch";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Failure of a CLI invocation, split by exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Runtime(e) => write!(f, "error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
}

/// Everything needed to rerun a command and check its outputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub settings: BTreeMap<String, String>,
    pub outputs: Vec<OutputFile>,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    /// Rebuilds the settings the run used.
    pub fn settings(&self) -> Result<(Command, Settings)> {
        let command: Command = self.command.parse()?;
        let mut settings = Settings::defaults(command);
        for (k, v) in &self.settings {
            settings.apply(k, v)?;
        }
        Ok((command, settings))
    }
}

pub fn manifest_name(command: Command) -> String {
    format!("{}_manifest.json", command.as_str())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs `command` with `settings`, writing outputs and the manifest into
/// `out_dir`. Returns the manifest.
pub fn execute(command: Command, settings: &Settings, out_dir: &Path) -> Result<RunManifest> {
    settings.validate()?;
    fs::create_dir_all(out_dir)?;
    let files = experiments::with_threads(settings.threads, || match command {
        Command::Scan => write_scan(settings, out_dir),
        Command::Gradstats => write_gradstats(settings, out_dir).map(|(files, _)| files),
        Command::Optimize => write_optimize(settings, out_dir),
        Command::Display => write_display(settings, out_dir),
    })??;
    let outputs = files
        .into_iter()
        .map(|name| {
            let bytes = fs::read(out_dir.join(&name))?;
            Ok(OutputFile { path: name, sha256: sha256_hex(&bytes) })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = RunManifest {
        tool: TOOL.to_string(),
        version: VERSION.to_string(),
        command: command.as_str().to_string(),
        seed: settings.seed,
        settings: settings.to_pairs().into_iter().collect(),
        outputs,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(out_dir.join(manifest_name(command)), text)?;
    Ok(manifest)
}

/// Reruns a manifest into `out_dir` and lists outputs whose bytes differ.
pub fn replay(manifest: &RunManifest, out_dir: &Path) -> Result<Vec<String>> {
    let (command, settings) = manifest.settings()?;
    let fresh = execute(command, &settings, out_dir)?;
    let mut mismatches = Vec::new();
    for old in &manifest.outputs {
        match fresh.outputs.iter().find(|o| o.path == old.path) {
            Some(new) if new.sha256 == old.sha256 => {}
            _ => mismatches.push(old.path.clone()),
        }
    }
    Ok(mismatches)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    Ok(csv::Writer::from_path(path)?)
}

#[derive(Serialize)]
struct ScanLossRecord {
    theta: f64,
    loss_mean: f64,
    loss_median: f64,
    q25: f64,
    q75: f64,
    poly_fit_grad: f64,
}

#[derive(Serialize)]
struct ScanGradRecord {
    theta: f64,
    method: &'static str,
    grad_mean: f64,
    grad_std: f64,
    n: usize,
}

fn program(settings: &Settings, mode: Mode) -> LossProgram {
    LossProgram::new(settings.sim_config(mode), settings.params(settings.theta))
}

fn single_mode(settings: &Settings, command: Command) -> Result<Mode> {
    settings
        .mode
        .ok_or_else(|| Error::Config(format!("{} needs a single mode", command.as_str())))
}

fn write_scan(settings: &Settings, out_dir: &Path) -> Result<Vec<String>> {
    let mode = single_mode(settings, Command::Scan)?;
    let rows = scan(&program(settings, mode), &settings.scan_settings(), &settings.estimator_options())?;
    let mut loss = csv_writer(&out_dir.join("scan_loss.csv"))?;
    let mut grads = csv_writer(&out_dir.join("scan_grads.csv"))?;
    for row in &rows {
        loss.serialize(ScanLossRecord {
            theta: row.theta,
            loss_mean: row.loss.mean,
            loss_median: row.loss.median,
            q25: row.loss.q25,
            q75: row.loss.q75,
            poly_fit_grad: row.poly_fit_grad,
        })?;
        for g in &row.grads {
            grads.serialize(ScanGradRecord {
                theta: row.theta,
                method: g.method.as_str(),
                grad_mean: g.stats.mean,
                grad_std: g.stats.std,
                n: g.stats.n,
            })?;
        }
    }
    loss.flush()?;
    grads.flush()?;
    Ok(vec!["scan_loss.csv".into(), "scan_grads.csv".into()])
}

#[derive(Serialize)]
struct GradstatsRecord {
    mode: &'static str,
    method: &'static str,
    theta: f64,
    n: usize,
    mean: f64,
    std: f64,
    q25: f64,
    q50: f64,
    q75: f64,
}

/// Writes `gradstats.csv` and returns the table of each mode.
fn write_gradstats(settings: &Settings, out_dir: &Path) -> Result<(Vec<String>, Vec<(Mode, Vec<GradRow>)>)> {
    let opts = settings.estimator_options();
    let mut out = csv_writer(&out_dir.join("gradstats.csv"))?;
    let mut tables = Vec::new();
    for mode in settings.modes() {
        let rows =
            grad_table(&program(settings, mode), settings.theta, settings.n, &settings.methods, settings.seed, &opts)?;
        for r in &rows {
            out.serialize(GradstatsRecord {
                mode: mode.as_str(),
                method: r.method.as_str(),
                theta: r.theta,
                n: r.stats.n,
                mean: r.stats.mean,
                std: r.stats.std,
                q25: r.stats.q25,
                q50: r.stats.q50,
                q75: r.stats.q75,
            })?;
        }
        tables.push((mode, rows));
    }
    out.flush()?;
    Ok((vec!["gradstats.csv".into()], tables))
}

#[derive(Serialize)]
struct OptRecord {
    replica: usize,
    step: usize,
    theta: f64,
    loss: f64,
}

pub fn opt_file_name(method: Method) -> String {
    format!("opt_{}.csv", method.as_str())
}

fn write_optimize(settings: &Settings, out_dir: &Path) -> Result<Vec<String>> {
    let mode = single_mode(settings, Command::Optimize)?;
    let prog = program(settings, mode);
    let opt = settings.optimize_settings();
    let opts = settings.estimator_options();
    let mut files = Vec::new();
    for &method in &settings.methods {
        let runs = optimize(&prog, method, &opt, &opts)?;
        let name = opt_file_name(method);
        let mut out = csv_writer(&out_dir.join(&name))?;
        for run in &runs {
            for (step, (&theta, &loss)) in run.theta_trace.iter().zip(&run.loss_trace).enumerate() {
                out.serialize(OptRecord { replica: run.replica_id, step, theta, loss })?;
            }
        }
        out.flush()?;
        files.push(name);
    }
    Ok(files)
}

#[derive(Serialize)]
struct JsonHit {
    x: f64,
    y: f64,
    r: f64,
    step: usize,
}

#[derive(Serialize)]
struct JsonTrack {
    loss: f64,
    n_steps: usize,
    terminated_by: crate::simulator::Termination,
    hits: Vec<JsonHit>,
    segments: Vec<crate::simulator::Segment>,
}

#[derive(Serialize)]
struct JsonDivergence {
    step: usize,
    slot: usize,
    draw_id: usize,
    flipped_to: bool,
    weight: f64,
}

#[derive(Serialize)]
struct JsonAlternative {
    divergence: JsonDivergence,
    pruned_weight: f64,
    coupled_fraction: Option<f64>,
    track: JsonTrack,
}

#[derive(Serialize)]
struct JsonRaster {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    nx: usize,
    ny: usize,
    /// Row-major, `y` outer; cell centres.
    values: Vec<f64>,
}

#[derive(Serialize)]
struct JsonDisplay {
    mode: Mode,
    theta: f64,
    seed: u64,
    event: u64,
    candidates: usize,
    primal: JsonTrack,
    alternative: Option<JsonAlternative>,
    material: JsonRaster,
}

fn track(event: Event, settings: &Settings) -> JsonTrack {
    let no_hit = settings.world_radius * settings.world_radius;
    JsonTrack {
        loss: loss_value(&event, settings.target_radius, no_hit),
        n_steps: event.n_steps,
        terminated_by: event.terminated_by,
        hits: event
            .hits
            .iter()
            .map(|h| JsonHit { x: h.pos[0], y: h.pos[1], r: h.r, step: h.step_index })
            .collect(),
        segments: event.segments.unwrap_or_default(),
    }
}

fn divergence(d: &DiscreteAlternative) -> JsonDivergence {
    JsonDivergence { step: d.step, slot: d.slot, draw_id: d.draw_id, flipped_to: d.flipped_value, weight: d.weight }
}

fn write_display(settings: &Settings, out_dir: &Path) -> Result<Vec<String>> {
    let mode = single_mode(settings, Command::Display)?;
    let config = settings.sim_config(mode);
    let params = settings.params(settings.theta);
    let shown = display_event(&config, &params, settings.seed, settings.event, settings.coupling)?;
    let e = settings.extent;
    let doc = JsonDisplay {
        mode,
        theta: settings.theta,
        seed: settings.seed,
        event: settings.event,
        candidates: shown.candidates,
        primal: track(shown.primal, settings),
        alternative: shown.alternative.map(|alt| JsonAlternative {
            divergence: divergence(&alt.divergence),
            pruned_weight: alt.pruned_weight,
            coupled_fraction: alt.coupled_fraction,
            track: track(alt.event, settings),
        }),
        material: JsonRaster {
            x_min: -e,
            x_max: e,
            y_min: -e,
            y_max: e,
            nx: settings.grid,
            ny: settings.grid,
            values: material_raster(&params, (-e, e), (-e, e), settings.grid, settings.grid),
        },
    };
    let mut file = fs::File::create(out_dir.join("event_display.json"))?;
    serde_json::to_writer(&mut file, &doc)?;
    file.write_all(b"\n")?;
    Ok(vec!["event_display.json".into()])
}

struct Flag {
    key: &'static str,
    long: &'static str,
    help: &'static str,
    switch: bool,
}

const fn flag(key: &'static str, long: &'static str, help: &'static str) -> Flag {
    Flag { key, long, help, switch: false }
}

const COMMON: &[Flag] = &[
    flag("seed", "seed", "root seed for every random stream"),
    flag("threads", "threads", "worker threads (0 = all cores); outputs do not depend on it"),
    flag("mode", "mode", "energy-loss | shower (gradstats also accepts both)"),
    flag("methods", "methods", "comma-separated: numeric,score,score-baseline,stochad"),
    flag("fd_eps", "fd-eps", "finite-difference step in meters"),
    Flag { key: "central_diff", long: "central-diff", help: "use central instead of forward differences", switch: true },
    flag("coupling", "coupling", "reuse primal randomness in alternatives (on|off)"),
];

const SCAN_FLAGS: &[Flag] = &[
    flag("n", "n", "events per grid point"),
    flag("theta_min", "theta-min", "first grid value in meters"),
    flag("theta_max", "theta-max", "last grid value in meters"),
    flag("points", "points", "number of grid points"),
    flag("poly_degree", "poly-degree", "degree of the loss polynomial fit"),
];

const GRADSTATS_FLAGS: &[Flag] = &[
    flag("n", "n", "events per estimator"),
    flag("theta", "theta", "inner radius in meters"),
];

const OPTIMIZE_FLAGS: &[Flag] = &[
    flag("replicas", "replicas", "independent optimisation runs"),
    flag("steps", "steps", "Adam steps per run"),
    flag("batch", "batch", "events per gradient estimate"),
    flag("lr", "lr", "Adam learning rate"),
    flag("theta_init", "theta-init", "starting inner radius in meters"),
];

const DISPLAY_FLAGS: &[Flag] = &[
    flag("theta", "theta", "inner radius in meters"),
    flag("event", "event", "event index under --seed"),
    flag("grid", "grid", "raster cells per axis"),
    flag("extent", "extent", "raster half-width in meters"),
];

fn command_flags(command: Command) -> &'static [Flag] {
    match command {
        Command::Scan => SCAN_FLAGS,
        Command::Gradstats => GRADSTATS_FLAGS,
        Command::Optimize => OPTIMIZE_FLAGS,
        Command::Display => DISPLAY_FLAGS,
    }
}

fn about(command: Command) -> &'static str {
    match command {
        Command::Scan => "Loss and gradient estimates over a grid of inner radii",
        Command::Gradstats => "Gradient estimator statistics at one inner radius",
        Command::Optimize => "Adam design optimisation with each estimator",
        Command::Display => "One primal event, its alternative and the material map as JSON",
    }
}

fn clap_command() -> clap::Command {
    let mut root = clap::Command::new(TOOL)
        .version(VERSION)
        .about("Gradient estimators for a toy detector simulator with discrete randomness")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for command in Command::ALL {
        let mut sub = clap::Command::new(command.as_str())
            .about(about(command))
            .arg(Arg::new("out_dir").long("out-dir").default_value(".").help("output directory"))
            .arg(Arg::new("config").long("config").help("key = value settings file"))
            .arg(
                Arg::new("set")
                    .long("set")
                    .action(ArgAction::Append)
                    .value_name("KEY=VALUE")
                    .help("override any setting, e.g. --set sharpness=5"),
            );
        for f in COMMON.iter().chain(command_flags(command)) {
            let mut arg = Arg::new(f.key).long(f.long).help(f.help);
            if f.switch {
                arg = arg.action(ArgAction::SetTrue);
            }
            sub = sub.arg(arg);
        }
        if command == Command::Gradstats {
            sub = sub.arg(
                Arg::new("assert_ordering")
                    .long("assert-ordering")
                    .action(ArgAction::SetTrue)
                    .help("fail unless the estimator variance ordering holds"),
            );
        }
        root = root.subcommand(sub);
    }
    root.subcommand(
        clap::Command::new("replay")
            .about("Rerun a manifest and check that every output is byte-identical")
            .arg(Arg::new("manifest").required(true).help("path to a *_manifest.json"))
            .arg(Arg::new("out_dir").long("out-dir").help("where to rerun (default: the manifest's directory)")),
    )
}

fn resolve(command: Command, m: &ArgMatches) -> std::result::Result<Settings, CliError> {
    let usage = |e: Error| CliError::Usage(e.to_string());
    let mut settings = Settings::defaults(command);
    if let Some(path) = m.get_one::<String>("config") {
        settings.apply_file(Path::new(path)).map_err(|e| match e {
            Error::Io(_) => CliError::Runtime(e),
            other => usage(other),
        })?;
    }
    for f in COMMON.iter().chain(command_flags(command)) {
        if f.switch {
            if m.get_flag(f.key) {
                settings.apply(f.key, "true").map_err(usage)?;
            }
        } else if let Some(v) = m.get_one::<String>(f.key) {
            settings.apply(f.key, v).map_err(usage)?;
        }
    }
    for kv in m.get_many::<String>("set").into_iter().flatten() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        settings.apply(k.trim(), v).map_err(usage)?;
    }
    settings.validate().map_err(usage)?;
    if command != Command::Gradstats && settings.mode.is_none() {
        return Err(CliError::Usage(format!("{} needs --mode energy-loss or shower", command.as_str())));
    }
    if command != Command::Display && settings.methods.contains(&Method::ScoreBaseline) {
        let per_estimate = if command == Command::Optimize { settings.batch } else { settings.n };
        if per_estimate < 2 {
            return Err(CliError::Usage("score-baseline needs at least 2 events per estimate".into()));
        }
    }
    Ok(settings)
}

fn run_command(command: Command, m: &ArgMatches) -> std::result::Result<(), CliError> {
    let settings = resolve(command, m)?;
    let out_dir = PathBuf::from(m.get_one::<String>("out_dir").expect("has default"));
    if command == Command::Gradstats && settings.n < 30 {
        eprintln!("warning: n = {} is too small for reliable standard deviations", settings.n);
    }
    let manifest = execute(command, &settings, &out_dir)?;
    for o in &manifest.outputs {
        println!("wrote {}", out_dir.join(&o.path).display());
    }
    println!("wrote {}", out_dir.join(manifest_name(command)).display());
    if command == Command::Gradstats && m.get_flag("assert_ordering") {
        let tables = read_gradstats(&out_dir.join("gradstats.csv"))?;
        let mut failed = false;
        for (mode, rows) in tables {
            for v in ordering_violations(&rows) {
                eprintln!("ordering violated ({mode}): {v}", mode = mode.as_str());
                failed = true;
            }
        }
        if failed {
            return Err(CliError::Runtime(Error::Config("estimator ordering does not hold".into())));
        }
        println!("ordering holds");
    }
    Ok(())
}

#[derive(Deserialize)]
struct GradstatsRow {
    mode: Mode,
    method: String,
    theta: f64,
    n: usize,
    mean: f64,
    std: f64,
    q25: f64,
    q50: f64,
    q75: f64,
}

/// Reads a `gradstats.csv` back into per-mode tables.
pub fn read_gradstats(path: &Path) -> Result<Vec<(Mode, Vec<GradRow>)>> {
    let mut tables: Vec<(Mode, Vec<GradRow>)> = Vec::new();
    for rec in csv::Reader::from_path(path)?.deserialize() {
        let r: GradstatsRow = rec?;
        let stats = crate::estimators::EstimatorStats {
            mean: r.mean,
            std: r.std,
            q25: r.q25,
            q50: r.q50,
            q75: r.q75,
            n: r.n,
        };
        let row = GradRow { method: r.method.parse()?, theta: r.theta, stats };
        match tables.iter_mut().find(|(m, _)| *m == r.mode) {
            Some((_, rows)) => rows.push(row),
            None => tables.push((r.mode, vec![row])),
        }
    }
    Ok(tables)
}

fn run_replay(m: &ArgMatches) -> std::result::Result<(), CliError> {
    let path = PathBuf::from(m.get_one::<String>("manifest").expect("required"));
    let manifest = RunManifest::read(&path)?;
    let out_dir = match m.get_one::<String>("out_dir") {
        Some(d) => PathBuf::from(d),
        None => path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(".")),
    };
    let mismatches = replay(&manifest, &out_dir).map_err(|e| match e {
        Error::Config(msg) => CliError::Usage(format!("manifest: {msg}")),
        other => CliError::Runtime(other),
    })?;
    if mismatches.is_empty() {
        println!("replay identical: {} outputs", manifest.outputs.len());
        Ok(())
    } else {
        Err(CliError::Runtime(Error::Config(format!("outputs differ: {}", mismatches.join(", ")))))
    }
}

/// Parses `args` (program name first) and runs the selected subcommand.
pub fn run<I, T>(args: I) -> std::result::Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match clap_command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return Ok(());
            }
            return Err(CliError::Usage(e.render().to_string()));
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand required");
    if name == "replay" {
        return run_replay(sub);
    }
    run_command(name.parse().expect("registered subcommand"), sub)
}

/// Entry point for the binary: runs and maps the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match run(args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
