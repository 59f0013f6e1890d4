//! Command-line front end. [`dispatch`] parses an argument list, runs one
//! subcommand and returns the process exit status:
//!
//! | status | meaning |
//! |---|---|
//! | 0 | success |
//! | 1 | validation error (bad flags, missing or invalid configuration) |
//! | 2 | numerical failure (residual breach, singular system, no convergence) |
//! | 3 | I/O failure |
//!
//! Configuration layers, lowest to highest: scenario preset, `--config`
//! file, `--set key=value` flags (and subcommand flags such as
//! `--delta-min`).

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use piezo_omit::analysis::{dressed_modes, find_windows_in};
use piezo_omit::response::{spectrum_with, DeltaGrid, Form};
use piezo_omit::spectrum_csv::{omega_b_of, read_spectrum, write_spectrum, SpectrumRow};
use piezo_omit::sweep::{emit_csv, emit_svg, parse_document, run_sweep, AxisRange, Document, Scenario, SweepSpec, SweepTable};
use piezo_omit::{build_config, Error, ErrorKind, ModelConfig, OperatingPoint, RawConfig};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST_NAME: &str = "run_manifest.json";

#[derive(Debug, Parser)]
#[command(name = "piezo-omit", version, about = "Double-OMIT probe response of a hybrid piezo-optomechanical system")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads: a positive count or `auto`.
    #[arg(long, global = true, default_value = "auto")]
    pub threads: String,
    /// Suppress advisories and progress on stderr.
    #[arg(long, global = true)]
    pub quiet: bool,
    /// Override a configuration key, e.g. `--set g_em_hz=6e6`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the mean-field steady state.
    Steady(PointArgs),
    /// Probe spectrum as CSV.
    Spectrum(SpectrumArgs),
    /// Dressed-mode poles and residues.
    Dressed(PointArgs),
    /// Transparency windows of a spectrum CSV.
    Windows(WindowsArgs),
    /// Custom sweep over a scenario's secondary parameter.
    Sweep(SweepArgs),
    /// Reproduce a figure from its bundled preset.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
pub struct PointArgs {
    /// Start from a scenario preset's system parameters.
    #[arg(long)]
    pub preset: Option<String>,
    /// Steady-state branch index, ordered by photon number. Defaults to the
    /// lowest branch, or to the pinned one in effective mode.
    #[arg(long)]
    pub branch: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub point: PointArgs,
    /// closed, oracle or single.
    #[arg(long, default_value = "closed")]
    pub form: String,
    /// Lower end of (δ−ω_b)/ω_b.
    #[arg(long, allow_hyphen_values = true)]
    pub delta_min: Option<f64>,
    /// Upper end of (δ−ω_b)/ω_b.
    #[arg(long, allow_hyphen_values = true)]
    pub delta_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct WindowsArgs {
    /// Spectrum CSV as written by `spectrum`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Scenario name; falls back to `[sweep].scenario` in the config file.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Comma-separated secondary values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub values: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// 2, 3, 5, 6, 7 or 8.
    #[arg(long)]
    pub figure: u8,
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Provenance record written next to every output.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    /// SHA-256 of the canonical JSON of the resolved configuration.
    pub config_digest: String,
    pub timestamp: String,
    pub subcommand: String,
}

impl RunManifest {
    pub fn new(resolved: &serde_json::Value, subcommand: String) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_digest: digest(resolved),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            subcommand,
        }
    }
}

/// SHA-256 of the compact JSON encoding. `serde_json` maps keep keys
/// sorted, so equal configurations hash equally.
pub fn digest(value: &serde_json::Value) -> String {
    hex::encode(Sha256::digest(value.to_string().as_bytes()))
}

/// Front-end failure: a library error or a usage problem.
#[derive(Debug)]
pub enum Failure {
    Lib(Error),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Lib(e) => match e.kind() {
                ErrorKind::Validation => 1,
                ErrorKind::Numerical => 2,
                ErrorKind::Io => 3,
            },
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Lib(e) => write!(f, "{e}"),
            Failure::Usage(s) => write!(f, "{s}"),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Runs one invocation; `argv[0]` is the program name.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}

fn run(cli: &Cli) -> Outcome<()> {
    let threads = match cli.threads.as_str() {
        "auto" => 0,
        n => match n.parse::<usize>() {
            Ok(v) if v > 0 => v,
            _ => return Err(Failure::Usage(format!("--threads expects a positive integer or auto, got {n:?}"))),
        },
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::Usage(format!("cannot start thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Steady(a) => steady(cli, a),
        Command::Spectrum(a) => spectrum_cmd(cli, a),
        Command::Dressed(a) => dressed(cli, a),
        Command::Windows(a) => windows(cli, a),
        Command::Sweep(a) => sweep(cli, a),
        Command::Reproduce(a) => reproduce(cli, a),
    })
}

struct Layers {
    file: Option<Document>,
    set: Document,
}

fn layers(cli: &Cli) -> Outcome<Layers> {
    let file = match &cli.config {
        None => None,
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
            Some(parse_document(&text)?)
        }
    };
    let mut set = Document::default();
    for s in &cli.set {
        let (k, v) = RawConfig::parse_assignment(s)?;
        set.system.set(k, v);
    }
    Ok(Layers { file, set })
}

impl Layers {
    fn stack<'a>(&'a self, extra: &'a Document) -> Vec<&'a Document> {
        self.file.iter().chain([&self.set, extra]).collect()
    }

    /// System configuration: optional preset, then file, then flags.
    fn model(&self, preset: Option<&str>) -> Outcome<ModelConfig> {
        let mut raw = match preset {
            Some(name) => parse_document(parse_scenario(name)?.preset())?.system,
            None => RawConfig::new(),
        };
        for d in self.file.iter().chain([&self.set]) {
            raw.overlay(&d.system);
        }
        Ok(build_config(&raw)?)
    }

    /// `[sweep]` axis settings with flag overrides.
    fn axis(&self, delta_min: Option<f64>, delta_max: Option<f64>, points: Option<usize>) -> AxisRange {
        let mut t = SweepTable {
            delta_min: Some(-0.02),
            delta_max: Some(0.02),
            points: Some(4001),
            ..SweepTable::default()
        };
        if let Some(f) = &self.file {
            t.overlay(&f.sweep);
        }
        t.overlay(&SweepTable {
            delta_min,
            delta_max,
            points,
            ..SweepTable::default()
        });
        AxisRange {
            min: t.delta_min.unwrap_or(-0.02),
            max: t.delta_max.unwrap_or(0.02),
            points: t.points.unwrap_or(4001),
        }
    }
}

/// Accepts a scenario name or a figure number.
fn parse_scenario(s: &str) -> Outcome<Scenario> {
    match s.parse::<u8>() {
        Ok(n) => Ok(Scenario::from_figure(n)?),
        Err(_) => Ok(s.parse()?),
    }
}

fn advise(cli: &Cli, cfg: &ModelConfig) {
    if !cli.quiet {
        for a in cfg.advisories() {
            eprintln!("warning: {a}");
        }
    }
}

fn describe(cli: &Cli, name: &str, extra: &[(&str, String)]) -> String {
    let mut s = name.to_string();
    if let Some(c) = &cli.config {
        s.push_str(&format!(" --config {}", c.display()));
    }
    for v in &cli.set {
        s.push_str(&format!(" --set {v}"));
    }
    for (k, v) in extra {
        s.push_str(&format!(" --{k} {v}"));
    }
    s.push_str(&format!(" --threads {}", cli.threads));
    if cli.quiet {
        s.push_str(" --quiet");
    }
    s
}

fn config_json(cfg: &ModelConfig) -> serde_json::Value {
    serde_json::to_value(cfg.to_raw()).expect("config serializes")
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn write_json(path: &Path, value: &impl Serialize) -> Outcome<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// JSON documents carry their manifest inline; files also get a sibling
/// `<file>.manifest.json`.
fn emit_json(out: Option<&Path>, mut body: serde_json::Value, manifest: RunManifest) -> Outcome<()> {
    match out {
        Some(path) => {
            write_json(path, &body)?;
            write_json(&manifest_path(path), &manifest)?;
        }
        None => {
            body["manifest"] = serde_json::to_value(&manifest).expect("serializable");
            let text = serde_json::to_string_pretty(&body).expect("serializable");
            writeln!(io::stdout().lock(), "{text}")?;
        }
    }
    Ok(())
}

fn point_extra(a: &PointArgs) -> Vec<(&'static str, String)> {
    let mut v = Vec::new();
    if let Some(p) = &a.preset {
        v.push(("preset", p.clone()));
    }
    if let Some(b) = a.branch {
        v.push(("branch", b.to_string()));
    }
    if let Some(o) = &a.out {
        v.push(("out", o.display().to_string()));
    }
    v
}

fn operating_point(cfg: &ModelConfig, a: &PointArgs) -> Outcome<OperatingPoint> {
    let op = OperatingPoint::resolve(cfg)?;
    Ok(match a.branch {
        Some(i) => op.with_branch(i)?,
        None => op,
    })
}

fn steady(cli: &Cli, a: &PointArgs) -> Outcome<()> {
    let cfg = layers(cli)?.model(a.preset.as_deref())?;
    advise(cli, &cfg);
    let op = operating_point(&cfg, a)?;
    let branches: Vec<_> = op
        .branches
        .branches
        .iter()
        .map(|b| {
            serde_json::json!({
                "steady": b,
                "residuals": b.residuals(&op.params, &op.drives),
            })
        })
        .collect();
    let body = serde_json::json!({
        "config": config_json(&cfg),
        "params": op.params,
        "drives": op.drives,
        "bistable": op.branches.bistable,
        "selected": op.selected,
        "branches": branches,
        "advisories": cfg.advisories(),
    });
    let manifest = RunManifest::new(&config_json(&cfg), describe(cli, "steady", &point_extra(a)));
    emit_json(a.out.as_deref(), body, manifest)
}

fn dressed(cli: &Cli, a: &PointArgs) -> Outcome<()> {
    let cfg = layers(cli)?.model(a.preset.as_deref())?;
    advise(cli, &cfg);
    let op = operating_point(&cfg, a)?;
    let modes = dressed_modes(&op.params, op.steady());
    let body = serde_json::json!({
        "config": config_json(&cfg),
        "dressed": modes,
    });
    let manifest = RunManifest::new(&config_json(&cfg), describe(cli, "dressed", &point_extra(a)));
    emit_json(a.out.as_deref(), body, manifest)
}

fn spectrum_cmd(cli: &Cli, a: &SpectrumArgs) -> Outcome<()> {
    let form: Form = a.form.parse()?;
    let l = layers(cli)?;
    let cfg = l.model(a.point.preset.as_deref())?;
    advise(cli, &cfg);
    let axis = l.axis(a.delta_min, a.delta_max, a.points);
    let op = operating_point(&cfg, &a.point)?;
    let grid = DeltaGrid::around_mechanical(op.params.omega_b, axis.min, axis.max, axis.points)?;
    let spec = spectrum_with(form, op.steady(), &op.params, &grid)?;
    let rows: Vec<SpectrumRow> = spec.iter().map(SpectrumRow::from).collect();

    let mut extra = point_extra(&a.point);
    extra.push(("form", a.form.clone()));
    extra.push(("delta-min", format!("{:e}", axis.min)));
    extra.push(("delta-max", format!("{:e}", axis.max)));
    extra.push(("points", axis.points.to_string()));
    let resolved = serde_json::json!({ "config": config_json(&cfg), "axis": axis, "form": form });
    let manifest = RunManifest::new(&resolved, describe(cli, "spectrum", &extra));
    match &a.point.out {
        Some(path) => {
            let f = fs::File::create(path)?;
            write_spectrum(io::BufWriter::new(f), &rows)?;
            write_json(&manifest_path(path), &manifest)?;
        }
        None => {
            write_spectrum(io::stdout().lock(), &rows)?;
            if !cli.quiet {
                eprintln!("{}", serde_json::to_string(&manifest).expect("serializable"));
            }
        }
    }
    Ok(())
}

fn windows(cli: &Cli, a: &WindowsArgs) -> Outcome<()> {
    let bytes = fs::read(&a.input)
        .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", a.input.display()))))?;
    let rows = read_spectrum(&bytes[..])?;
    let omega_b = omega_b_of(&rows)?;
    let axis: Vec<f64> = rows.iter().map(|r| r.delta_over_omega_b).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.re_eps_t).collect();
    let report = find_windows_in(&axis, &y, omega_b)?;
    let body = serde_json::json!({ "omega_b": omega_b, "windows": report });
    let resolved = serde_json::json!({ "input_sha256": hex::encode(Sha256::digest(&bytes)) });
    let mut extra = vec![("input", a.input.display().to_string())];
    if let Some(o) = &a.out {
        extra.push(("out", o.display().to_string()));
    }
    let manifest = RunManifest::new(&resolved, describe(cli, "windows", &extra));
    emit_json(a.out.as_deref(), body, manifest)
}

fn write_sweep_outputs(cli: &Cli, spec: &SweepSpec, dir: &Path, stem: &str, subcommand: String) -> Outcome<()> {
    if !cli.quiet {
        for a in spec.base.advisories() {
            eprintln!("warning: {a}");
        }
    }
    let result = run_sweep(spec)?;
    fs::create_dir_all(dir)?;
    emit_csv(&result, &dir.join(format!("{stem}.csv")))?;
    emit_svg(&result, &dir.join(format!("{stem}.svg")))?;
    write_json(&dir.join(format!("{stem}.windows.json")), &result.windows_json())?;
    write_json(&dir.join(MANIFEST_NAME), &RunManifest::new(&spec_json(spec), subcommand))?;
    if !cli.quiet {
        for c in &result.curves {
            eprintln!(
                "{} = {}: {} minima, separation {}",
                spec.scenario.secondary_label(),
                spec.scenario.format_value(c.secondary_value),
                c.windows.window_count(),
                c.windows.separation.map_or("-".into(), |s| format!("{s:e} rad/s"))
            );
        }
    }
    Ok(())
}

fn spec_json(spec: &SweepSpec) -> serde_json::Value {
    serde_json::json!({
        "scenario": spec.scenario.name(),
        "values": spec.secondary_values,
        "axis": spec.grid,
        "config": config_json(&spec.base),
    })
}

fn sweep(cli: &Cli, a: &SweepArgs) -> Outcome<()> {
    let l = layers(cli)?;
    let scenario = a.scenario.as_deref().map(parse_scenario).transpose()?;
    let flags = Document {
        system: RawConfig::new(),
        sweep: SweepTable {
            scenario: None,
            values: a.values.clone(),
            delta_min: a.delta_min,
            delta_max: a.delta_max,
            points: a.points,
        },
    };
    let spec = SweepSpec::layered(scenario, &l.stack(&flags))?;
    let mut extra = vec![("scenario", spec.scenario.name().to_string())];
    let values: Vec<String> = spec.secondary_values.iter().map(|v| format!("{v:e}")).collect();
    extra.push(("values", values.join(",")));
    extra.push(("delta-min", format!("{:e}", spec.grid.min)));
    extra.push(("delta-max", format!("{:e}", spec.grid.max)));
    extra.push(("points", spec.grid.points.to_string()));
    extra.push(("out-dir", a.out_dir.display().to_string()));
    let name = spec.scenario.name();
    write_sweep_outputs(cli, &spec, &a.out_dir, name, describe(cli, "sweep", &extra))
}

fn reproduce(cli: &Cli, a: &ReproduceArgs) -> Outcome<()> {
    let scenario = Scenario::from_figure(a.figure)?;
    let l = layers(cli)?;
    let spec = SweepSpec::layered(Some(scenario), &l.stack(&Document::default()))?;
    let extra = [
        ("figure", a.figure.to_string()),
        ("out-dir", a.out_dir.display().to_string()),
    ];
    write_sweep_outputs(cli, &spec, &a.out_dir, &format!("fig{}", a.figure), describe(cli, "reproduce", &extra))
}
