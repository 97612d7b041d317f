//! Batch command-line front end.
//!
//! Exit codes: 0 success, 2 verification or validation failure, 64 usage or
//! parse error, 70 numerical failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classify::{classify, ClassifyError, ClassifySearch};
use crate::crossing::{
    check_estimates, crossing_energy, crossing_tsv, domain_of_crossing, minmax_principle_check, CrossingError,
};
use crate::lattice::{fmt_f64, overlap, Segment, Window};
use crate::linear_oracle::{oracle_fixture, FixtureKind};
use crate::model::{
    fk_classic, second_neighbor, second_neighbor_spec, validate_model, GridSpec, LocalEnergyModel, ModelSpec,
};
use crate::solver::{
    gap_analysis, heteroclinic, minimize_periodic, sweep_farey, MinimizerRecord, Side, SolveOptions, SolverError,
    VerifyOptions,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_NUMERIC: i32 = 70;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Preset {
    FkClassic,
    FkFree,
    SecondNeighbor,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GlobalArgs {
    /// Model JSON document.
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    /// Built-in model, used when no model file is given.
    #[arg(long, global = true, value_enum)]
    pub preset: Option<Preset>,
    /// On-site potential amplitude for presets.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub amplitude: f64,
    /// Nearest-neighbour coupling of the second-neighbour preset.
    #[arg(long, global = true, default_value_t = 0.5)]
    pub coupling_b: f64,
    #[arg(long, global = true, default_value = ".")]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    #[serde(skip)]
    pub jobs: usize,
    /// TOML file supplying any flag; command-line flags take precedence.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    /// Sample the local-energy conditions of a model.
    Validate,
    /// Compute a (p,q)-periodic minimizer.
    Solve {
        #[arg(long, allow_hyphen_values = true)]
        p: i64,
        #[arg(long, allow_hyphen_values = true)]
        q: i64,
    },
    /// Minimizers for all reduced rotation numbers q/p in an interval.
    Sweep {
        #[arg(long)]
        p_max: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        hi: f64,
    },
    /// Crossing diagnostics for two window files.
    Crossing {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        /// First interior site of the segment.
        #[arg(long, allow_hyphen_values = true)]
        i0: Option<i64>,
        /// Last interior site of the segment.
        #[arg(long, allow_hyphen_values = true)]
        i1: Option<i64>,
        /// Analysed range when both windows are periodic.
        #[arg(long, default_value_t = 60)]
        half_width: i64,
    },
    /// Birkhoff / non-Birkhoff verdict for a window file.
    Classify {
        #[arg(long)]
        window: PathBuf,
        #[arg(long, default_value_t = 8)]
        depth: usize,
        #[arg(long)]
        k_max: Option<i64>,
        #[arg(long)]
        l_max: Option<i64>,
    },
    /// Heteroclinic connection across a gap of the (p,q) minimizers.
    Hetero {
        #[arg(long, default_value_t = 1)]
        p: i64,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        q: i64,
        #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
        pin: f64,
        #[arg(long, default_value_t = 8)]
        depth: usize,
        #[arg(long, value_enum, default_value_t = SideArg::Plus)]
        side: SideArg,
    },
    /// Closed-form fixture of the quadratic second-neighbour model.
    Oracle {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, default_value_t = 0.5)]
        b: f64,
        #[arg(long, default_value_t = -30, allow_hyphen_values = true)]
        lo: i64,
        #[arg(long, default_value_t = 30, allow_hyphen_values = true)]
        hi: i64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SideArg {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum KindArg {
    BirkhoffLinear,
    WildExponential,
    DegenerateBounded,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "fk-ground", version, about = "Ground states of generalized Frenkel-Kontorova models")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

const SUBCOMMANDS: [&str; 7] = ["validate", "solve", "sweep", "crossing", "classify", "hetero", "oracle"];

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Verification(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Verification(_) => EXIT_VERIFY,
            CliError::Numerical(_) => EXIT_NUMERIC,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Verification(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Contract(_) | SolverError::Lattice(_) => CliError::Usage(e.to_string()),
            SolverError::NoGap(_) | SolverError::PinOnMinimizer(_) => CliError::Verification(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<CrossingError> for CliError {
    fn from(e: CrossingError) -> Self {
        match e {
            CrossingError::NotAMinimizer { .. } | CrossingError::NotASolution { .. } => {
                CliError::Verification(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

fn toml_to_args(table: &toml::Table) -> Result<Vec<OsString>, CliError> {
    let mut out = Vec::new();
    for (key, value) in table {
        let flag = format!("--{}", key.replace('_', "-"));
        let mut push = |v: &toml::Value| -> Result<(), CliError> {
            match v {
                toml::Value::String(s) => {
                    out.push(OsString::from(&flag));
                    out.push(OsString::from(s));
                }
                toml::Value::Integer(i) => {
                    out.push(OsString::from(&flag));
                    out.push(OsString::from(i.to_string()));
                }
                toml::Value::Float(f) => {
                    out.push(OsString::from(&flag));
                    out.push(OsString::from(fmt_f64(*f)));
                }
                toml::Value::Boolean(true) => out.push(OsString::from(&flag)),
                toml::Value::Boolean(false) => {}
                other => {
                    return Err(CliError::Usage(format!("config key `{key}` has unsupported value {other}")));
                }
            }
            Ok(())
        };
        match value {
            toml::Value::Array(items) => {
                for item in items {
                    push(item)?;
                }
            }
            v => push(v)?,
        }
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(rest));
        }
    }
    None
}

/// Places config-file flags directly after the subcommand and every
/// command-line flag after them, so the command line wins.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&args) else { return Ok(args) };
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let table: toml::Table =
        text.parse().map_err(|e| CliError::Usage(format!("malformed config {}: {e}", path.display())))?;
    let injected = toml_to_args(&table)?;
    let Some(pos) = args.iter().skip(1).position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref())) else {
        return Ok(args);
    };
    let sub = pos + 1;
    let mut out = vec![args[0].clone(), args[sub].clone()];
    out.extend(injected);
    out.extend(args.iter().enumerate().filter(|(i, _)| *i != 0 && *i != sub).map(|(_, a)| a.clone()));
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "source", rename_all = "snake_case")]
enum ModelDescriptor {
    Preset { preset: Preset, amplitude: f64, coupling_b: f64 },
    File { spec: ModelSpec },
}

struct Context {
    global: GlobalArgs,
    digest: String,
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    #[serde(flatten)]
    body: &'a T,
    version: &'static str,
    config_digest: &'a str,
}

impl Context {
    fn stamp<'a, T: Serialize>(&'a self, body: &'a T) -> Stamped<'a, T> {
        Stamped { body, version: env!("CARGO_PKG_VERSION"), config_digest: &self.digest }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.global.out.join(name)
    }

    fn write_json<T: Serialize>(&self, name: &str, body: &T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(&self.stamp(body))
            .map_err(|e| CliError::Numerical(format!("serialization failed: {e}")))?;
        write_file(&self.path(name), &(text + "\n"))
    }

    fn write_text(&self, name: &str, text: &str) -> Result<(), CliError> {
        write_file(&self.path(name), text)
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::Numerical(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::Numerical(format!("cannot write {}: {e}", path.display())))
}

fn describe_model(global: &GlobalArgs) -> Result<ModelDescriptor, CliError> {
    if let Some(path) = &global.model {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read model {}: {e}", path.display())))?;
        let spec = ModelSpec::from_json(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        return Ok(ModelDescriptor::File { spec });
    }
    let preset = global.preset.unwrap_or(Preset::FkClassic);
    Ok(ModelDescriptor::Preset { preset, amplitude: global.amplitude, coupling_b: global.coupling_b })
}

fn build_model(desc: &ModelDescriptor) -> Result<LocalEnergyModel, CliError> {
    match desc {
        ModelDescriptor::File { spec } => spec.to_model().map_err(|e| CliError::Usage(e.to_string())),
        ModelDescriptor::Preset { preset, amplitude, coupling_b } => Ok(match preset {
            Preset::FkClassic => fk_classic(*amplitude),
            Preset::FkFree => fk_classic(0.0),
            Preset::SecondNeighbor => {
                if !(0.0..=1.0).contains(coupling_b) {
                    return Err(CliError::Usage(format!("coupling b = {coupling_b} outside [0, 1]")));
                }
                second_neighbor(*coupling_b, *amplitude)
            }
        }),
    }
}

fn digest(cli: &Cli, model: &ModelDescriptor) -> String {
    #[derive(Serialize)]
    struct DigestInput<'a> {
        global: &'a GlobalArgs,
        command: &'a Command,
        model: &'a ModelDescriptor,
    }
    let canonical = serde_json::to_string(&DigestInput { global: &cli.global, command: &cli.command, model })
        .expect("config serializes");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

fn solve_options(global: &GlobalArgs) -> SolveOptions {
    SolveOptions { tol: global.tol, seed: global.seed, ..SolveOptions::default() }
}

fn verify_options(global: &GlobalArgs) -> VerifyOptions {
    VerifyOptions { seed: global.seed, ..VerifyOptions::default() }
}

fn positive_period(p: i64) -> Result<usize, CliError> {
    if p < 1 {
        return Err(CliError::Usage(format!("period p must be at least 1, got {p}")));
    }
    Ok(p as usize)
}

fn read_window(path: &Path) -> Result<(Window, Option<ModelSpec>), CliError> {
    #[derive(Deserialize)]
    struct Wrapped {
        window: Window,
        model: Option<ModelSpec>,
    }
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read window {}: {e}", path.display())))?;
    if let Ok(w) = serde_json::from_str::<Wrapped>(&text) {
        return Ok((w.window, w.model));
    }
    let w: Window = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("malformed window {}: {e}", path.display())))?;
    if w.is_empty() || w.extension().is_some_and(|e| e.p != w.len()) {
        return Err(CliError::Usage(format!("malformed window {}", path.display())));
    }
    Ok((w, None))
}

fn summary(line: String) {
    println!("{line}");
}

fn cmd_validate(ctx: &Context, model: &LocalEnergyModel) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct Out<'a> {
        report: &'a crate::model::ValidationReport,
        constants: crate::model::ModelConstants,
        range: usize,
    }
    let report = validate_model(model, &GridSpec::default());
    ctx.write_json("validation.json", &Out { report: &report, constants: model.constants(), range: model.range() })?;
    summary(format!("validation: {}", if report.all_passed { "all conditions pass" } else { "FAILED" }));
    if report.all_passed {
        Ok(())
    } else {
        let failed: Vec<&str> = report.conditions.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        Err(CliError::Verification(format!("failed conditions: {}", failed.join(", "))))
    }
}

fn cmd_solve(ctx: &Context, model: &LocalEnergyModel, p: i64, q: i64) -> Result<(), CliError> {
    let p = positive_period(p)?;
    let rec = minimize_periodic(model, p, q, None, &solve_options(&ctx.global))?;
    ctx.write_json("minimizer.json", &rec)?;
    let profile = rec.state.window().materialize(0, 3 * p as i64 - 1).map_err(SolverError::from)?;
    ctx.write_text("profile.tsv", &profile.to_tsv())?;
    summary(format!("({p},{q}) minimizer: action {} after {} iterations", fmt_f64(rec.action), rec.iterations));
    Ok(())
}

fn max_spacing(rec: &MinimizerRecord) -> f64 {
    let mut v: Vec<f64> = rec.state.cell.iter().map(|x| x.rem_euclid(1.0)).collect();
    v.sort_by(f64::total_cmp);
    let mut best = v[0] + 1.0 - v[v.len() - 1];
    for w in v.windows(2) {
        best = best.max(w[1] - w[0]);
    }
    best
}

fn cmd_sweep(ctx: &Context, model: &LocalEnergyModel, p_max: usize, lo: f64, hi: f64) -> Result<(), CliError> {
    if p_max == 0 || ctx.global.jobs == 0 || !(lo <= hi) {
        return Err(CliError::Usage("sweep needs --p-max ≥ 1, --jobs ≥ 1 and lo ≤ hi".into()));
    }
    let result = sweep_farey(model, p_max, (lo, hi), &solve_options(&ctx.global), ctx.global.jobs)?;
    let mut lines = String::new();
    let mut table = String::from("# rho\taction\tmax_spacing\tp\tq\n");
    for rec in &result.records {
        let line = serde_json::to_string(&ctx.stamp(rec)).map_err(|e| CliError::Numerical(e.to_string()))?;
        lines.push_str(&line);
        lines.push('\n');
        let _ = writeln!(
            table,
            "{}\t{}\t{}\t{}\t{}",
            fmt_f64(rec.state.rotation_number()),
            fmt_f64(rec.action),
            fmt_f64(max_spacing(rec)),
            rec.state.p,
            rec.state.q
        );
        ctx.write_json(&format!("windows/p{}_q{}.json", rec.state.p, rec.state.q), &rec.state.window())?;
    }
    ctx.write_text("records.jsonl", &lines)?;
    ctx.write_text("sweep.tsv", &table)?;
    #[derive(Serialize)]
    struct Out<'a> {
        solved: usize,
        failures: &'a [crate::solver::SweepFailure],
    }
    ctx.write_json("sweep.json", &Out { solved: result.records.len(), failures: &result.failures })?;
    summary(format!("sweep: {} minimizers, {} failures", result.records.len(), result.failures.len()));
    if result.failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("{} rotation numbers failed", result.failures.len())))
    }
}

fn cmd_crossing(
    ctx: &Context,
    model: &LocalEnergyModel,
    x_path: &Path,
    y_path: &Path,
    i0: Option<i64>,
    i1: Option<i64>,
    half_width: i64,
) -> Result<(), CliError> {
    let (x, _) = read_window(x_path)?;
    let (y, _) = read_window(y_path)?;
    let range = if x.extension().is_some() && y.extension().is_some() {
        if half_width < 1 {
            return Err(CliError::Usage("--half-width must be positive".into()));
        }
        -half_width..=half_width
    } else {
        overlap(&x, &y).map_err(|e| CliError::Usage(e.to_string()))?
    };
    let r = model.range();
    let (lo, hi) = (*range.start(), *range.end());
    let report = domain_of_crossing(&x, &y, range.clone(), r)?;
    let ri = r as i64;
    let seg_i0 = i0.unwrap_or(lo + 2 * ri);
    let seg_i1 = i1.unwrap_or(hi - 2 * ri);
    let seg = Segment::new(seg_i0, seg_i1, r).map_err(|e| CliError::Usage(e.to_string()))?;
    let energy = crossing_energy(model, &x, &y, seg)?;
    let minmax = minmax_principle_check(model, &x, &y, seg).ok();
    let estimates = check_estimates(model, &x, &y, seg).ok();
    #[derive(Serialize)]
    struct Out<'a> {
        domain: &'a crate::crossing::CrossingReport,
        segment: Segment,
        crossing_energy: f64,
        minmax: Option<crate::crossing::MinMaxCheck>,
        estimates: Option<crate::crossing::EstimateReport>,
    }
    ctx.write_json(
        "crossing.json",
        &Out { domain: &report, segment: seg, crossing_energy: energy, minmax, estimates },
    )?;
    ctx.write_text("crossing.tsv", &crossing_tsv(&x, &y, range)?)?;
    summary(format!("crossing: D = {:?}, W^c = {}", report.domain, fmt_f64(energy)));
    Ok(())
}

fn cmd_classify(
    ctx: &Context,
    model: Option<&LocalEnergyModel>,
    path: &Path,
    depth: usize,
    k_max: Option<i64>,
    l_max: Option<i64>,
) -> Result<(), CliError> {
    let (window, embedded) = read_window(path)?;
    let owned;
    let model = match (model, embedded) {
        (Some(m), _) => m,
        (None, Some(spec)) => {
            owned = spec.to_model().map_err(|e| CliError::Usage(e.to_string()))?;
            &owned
        }
        (None, None) => {
            owned = fk_classic(ctx.global.amplitude);
            &owned
        }
    };
    let search = ClassifySearch { k_max, l_max, depth, ..ClassifySearch::default() };
    let verdict = classify(model, &window, &search, &verify_options(&ctx.global)).map_err(|e| match e {
        ClassifyError::NotAMinimizer(m) => CliError::Verification(format!("window is not a minimizer: {m}")),
        other => CliError::Usage(other.to_string()),
    })?;
    ctx.write_json("verdict.json", &verdict)?;
    summary(format!("verdict: {:?}", verdict.kind));
    Ok(())
}

fn cmd_hetero(
    ctx: &Context,
    model: &LocalEnergyModel,
    p: i64,
    q: i64,
    pin: f64,
    depth: usize,
    side: SideArg,
) -> Result<(), CliError> {
    let p = positive_period(p)?;
    if depth == 0 {
        return Err(CliError::Usage("--depth must be at least 1".into()));
    }
    let side = match side {
        SideArg::Plus => Side::Plus,
        SideArg::Minus => Side::Minus,
    };
    let opts = solve_options(&ctx.global);
    let result = heteroclinic(model, p, q, pin, depth, side, &opts)?;
    let gaps = gap_analysis(model, p, q, &opts)?;
    #[derive(Serialize)]
    struct Out<'a> {
        heteroclinic: &'a crate::solver::HeteroclinicResult,
        gaps: &'a crate::solver::GapReport,
    }
    ctx.write_json("heteroclinic.json", &Out { heteroclinic: &result, gaps: &gaps })?;
    ctx.write_text("heteroclinic.tsv", &result.window.to_tsv())?;
    summary(format!(
        "heteroclinic: {} sites, defects {} / {}",
        result.window.len(),
        fmt_f64(result.asymptotic_defects[0]),
        fmt_f64(result.asymptotic_defects[1])
    ));
    Ok(())
}

fn cmd_oracle(ctx: &Context, kind: KindArg, b: f64, lo: i64, hi: i64) -> Result<(), CliError> {
    if lo > hi {
        return Err(CliError::Usage("--lo must not exceed --hi".into()));
    }
    let kind = match kind {
        KindArg::BirkhoffLinear => FixtureKind::BirkhoffLinear,
        KindArg::WildExponential => FixtureKind::WildExponential,
        KindArg::DegenerateBounded => FixtureKind::DegenerateBounded,
    };
    let fixture = oracle_fixture(kind, b, lo..=hi).map_err(|e| CliError::Usage(e.to_string()))?;
    #[derive(Serialize)]
    struct FixtureOut<'a> {
        window: &'a Window,
        model: ModelSpec,
        kind: FixtureKind,
        expected: crate::linear_oracle::ExpectedVerdict,
    }
    #[derive(Serialize)]
    struct Manifest<'a> {
        kind: FixtureKind,
        b: f64,
        span: (i64, i64),
        coefficients: &'a crate::linear_oracle::SolutionCoefficients,
        roots: &'a crate::linear_oracle::LinearModelParams,
        expected: crate::linear_oracle::ExpectedVerdict,
    }
    ctx.write_json(
        "fixture.json",
        &FixtureOut { window: &fixture.window, model: second_neighbor_spec(b, 0.0), kind, expected: fixture.expected },
    )?;
    ctx.write_json(
        "manifest.json",
        &Manifest {
            kind,
            b,
            span: (lo, hi),
            coefficients: &fixture.coefficients,
            roots: &fixture.params,
            expected: fixture.expected,
        },
    )?;
    summary(format!("fixture {:?}: {} sites, expected {:?}", kind, fixture.window.len(), fixture.expected));
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let desc = describe_model(&cli.global)?;
    let ctx = Context { digest: digest(&cli, &desc), global: cli.global.clone() };
    let explicit_model = cli.global.model.is_some() || cli.global.preset.is_some();
    match &cli.command {
        Command::Validate => cmd_validate(&ctx, &build_model(&desc)?),
        Command::Solve { p, q } => cmd_solve(&ctx, &build_model(&desc)?, *p, *q),
        Command::Sweep { p_max, lo, hi } => cmd_sweep(&ctx, &build_model(&desc)?, *p_max, *lo, *hi),
        Command::Crossing { x, y, i0, i1, half_width } => {
            cmd_crossing(&ctx, &build_model(&desc)?, x, y, *i0, *i1, *half_width)
        }
        Command::Classify { window, depth, k_max, l_max } => {
            let model = if explicit_model { Some(build_model(&desc)?) } else { None };
            cmd_classify(&ctx, model.as_ref(), window, *depth, *k_max, *l_max)
        }
        Command::Hetero { p, q, pin, depth, side } => {
            cmd_hetero(&ctx, &build_model(&desc)?, *p, *q, *pin, *depth, *side)
        }
        Command::Oracle { kind, b, lo, hi } => cmd_oracle(&ctx, *kind, *b, *lo, *hi),
    }
}

/// Runs the command line `args` (including the program name) and returns
/// the process exit code.
pub fn run(args: Vec<OsString>) -> i32 {
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {}", e.message());
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(list: &[&str]) -> Vec<OsString> {
        list.iter().map(OsString::from).collect()
    }

    #[test]
    fn config_flags_are_overridden_by_command_line() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.toml");
        fs::write(&cfg, "seed = 5\ntol = 1e-9\np = 3\n").unwrap();
        let expanded =
            expand_config(args(&["fk-ground", "--seed", "7", "solve", "--config", cfg.to_str().unwrap(), "--q", "1"]))
                .unwrap();
        let cli = Cli::try_parse_from(expanded).unwrap();
        assert_eq!(cli.global.seed, 7);
        assert_eq!(cli.global.tol, 1e-9);
        match cli.command {
            Command::Solve { p, q } => assert_eq!((p, q), (3, 1)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn digest_ignores_output_directory() {
        let a = Cli::try_parse_from(args(&["fk-ground", "solve", "--p", "2", "--q", "1", "--out", "a"])).unwrap();
        let b = Cli::try_parse_from(args(&["fk-ground", "solve", "--p", "2", "--q", "1", "--out", "b"])).unwrap();
        let c = Cli::try_parse_from(args(&["fk-ground", "solve", "--p", "3", "--q", "1"])).unwrap();
        let da = digest(&a, &describe_model(&a.global).unwrap());
        let db = digest(&b, &describe_model(&b.global).unwrap());
        let dc = digest(&c, &describe_model(&c.global).unwrap());
        assert_eq!(da, db);
        assert_ne!(da, dc);
    }

    #[test]
    fn exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        assert_eq!(run(args(&["fk-ground", "validate", "--out", out])), EXIT_OK);
        assert_eq!(
            run(args(&[
                "fk-ground",
                "validate",
                "--preset",
                "second_neighbor",
                "--coupling-b",
                "0",
                "--amplitude",
                "0",
                "--out",
                out
            ])),
            EXIT_VERIFY
        );
        let bad = dir.path().join("bad.json");
        fs::write(&bad, "{ \"range\": ").unwrap();
        assert_eq!(run(args(&["fk-ground", "validate", "--model", bad.to_str().unwrap(), "--out", out])), EXIT_USAGE);
        assert_eq!(run(args(&["fk-ground", "solve", "--p", "0", "--q", "1", "--out", out])), EXIT_USAGE);
        assert_eq!(run(args(&["fk-ground", "frobnicate"])), EXIT_USAGE);
        assert_eq!(run(args(&["fk-ground", "--help"])), EXIT_OK);
    }
}
