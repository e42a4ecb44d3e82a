//! `mediate`: fit, classify and explore mediation models from the shell.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 for data or model errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mediation::dataset::validate_roles;
use mediation::geometry::{self, Subtype};
use mediation::simulation::{export_report, run_study_with_progress, ExportFormat};
use mediation::{
    canonical_reduce, classify, describe, fit_lad, fit_lse, geometry_point, load_csv, percent_contributions,
    EffectTests, Framework, MediationError, MediationFit, ModelSpec, Role, SimulationConfig, VariableSpec,
};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "mediate", version, about = "Mediation analysis: fits, typology, geometry and simulation")]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the three regressions of a mediation model.
    Fit(FitArgs),
    /// Classify a model, from data or from a JSON file of estimates and p-values.
    Classify(ClassifyArgs),
    /// Reduce a dataset to canonical coordinates and (r, p, q).
    Reduce(DataArgs),
    /// Critical values, witnesses, superfluity scans and region boundaries.
    #[command(subcommand)]
    Geometry(GeometryCommand),
    /// Run the Monte Carlo study.
    Simulate(SimulateArgs),
    /// Descriptive statistics on the raw and percentized scales.
    Describe(DescribeArgs),
}

/// A CSV file and the roles of its columns.
#[derive(Args)]
struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Outcome column.
    #[arg(short = 'y', long = "outcome")]
    outcome: String,
    /// Mediator column.
    #[arg(short = 'm', long = "mediator")]
    mediator: String,
    /// Treatment column.
    #[arg(short = 'x', long = "treatment")]
    treatment: String,
    /// Control column; repeat for several.
    #[arg(short = 'c', long = "control")]
    controls: Vec<String>,
    /// Conceptual range `NAME=MIN:MAX`; the column is percentized before fitting.
    #[arg(long = "range", value_parser = parse_range)]
    ranges: Vec<(String, f64, f64)>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    /// LSE-F, LSE-Sobel or LAD-Z.
    #[arg(long, default_value = "lse-f", value_parser = parse_framework)]
    framework: Framework,
    /// Also report percent contributions.
    #[arg(long)]
    contributions: bool,
}

#[derive(Args)]
struct ClassifyArgs {
    /// JSON file with `framework`, `a_hat`..`c_hat`, `p_a`..`p_c` and optional `p_ab`
    /// (a saved `fit --json` output works).
    #[arg(long, conflicts_with = "data")]
    tests: Option<PathBuf>,
    /// CSV file; requires the role options below.
    #[arg(long, requires_all = ["outcome", "mediator", "treatment"])]
    data: Option<PathBuf>,
    #[arg(short = 'y', long)]
    outcome: Option<String>,
    #[arg(short = 'm', long)]
    mediator: Option<String>,
    #[arg(short = 'x', long)]
    treatment: Option<String>,
    #[arg(short = 'c', long = "control")]
    controls: Vec<String>,
    #[arg(long = "range", value_parser = parse_range)]
    ranges: Vec<(String, f64, f64)>,
    #[arg(long, default_value = "lse-f", value_parser = parse_framework)]
    framework: Framework,
    /// Significance level.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

#[derive(Subcommand)]
enum GeometryCommand {
    /// Critical values r_crit, p_crit and z_{α/2}.
    Critical(NAlpha),
    /// A point (r, p, q) realizing a mediation type.
    Witness(WitnessArgs),
    /// Grid scan for complementary points in Ra ∩ Rb ∩ Rd ∩ ¬Rc.
    Superfluity(SuperfluityArgs),
    /// Region boundaries in the (p, q) plane at fixed r, as CSV.
    Boundary(BoundaryArgs),
}

#[derive(Args)]
struct NAlpha {
    #[arg(short, long)]
    n: usize,
    #[arg(short, long, default_value_t = 0.05)]
    alpha: f64,
}

#[derive(Args)]
struct WitnessArgs {
    #[command(flatten)]
    at: NAlpha,
    /// indirect-only, competitive or sobel-io.
    #[arg(long, default_value = "indirect-only")]
    kind: String,
    /// d-plementary or d-petitive (indirect-only only).
    #[arg(long, default_value = "d-plementary", value_parser = parse_subtype)]
    subtype: Subtype,
    /// Sign of â·b̂·ĉ, +1 or -1.
    #[arg(long, allow_negative_numbers = true)]
    context: Option<i8>,
}

#[derive(Args)]
struct SuperfluityArgs {
    #[command(flatten)]
    at: NAlpha,
    #[arg(long, default_value_t = 500)]
    density: usize,
}

#[derive(Args)]
struct BoundaryArgs {
    #[command(flatten)]
    at: NAlpha,
    #[arg(short, long)]
    r: f64,
    #[arg(long, default_value_t = 2.0)]
    p_max: f64,
    #[arg(long, default_value_t = 201)]
    count: usize,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON or `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "csv", value_parser = parse_format)]
    format: ExportFormat,
    /// Suppress progress on stderr.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Args)]
struct DescribeArgs {
    #[arg(long)]
    data: PathBuf,
    /// `NAME=MIN:MAX`; repeat for each variable.
    #[arg(long = "var", required = true, value_parser = parse_range)]
    vars: Vec<(String, f64, f64)>,
}

fn parse_range(s: &str) -> Result<(String, f64, f64), String> {
    let (name, range) = s.split_once('=').ok_or("expected NAME=MIN:MAX")?;
    let (lo, hi) = range.split_once(':').ok_or("expected NAME=MIN:MAX")?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("bad minimum: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("bad maximum: {e}"))?;
    if !(hi > lo) {
        return Err(format!("maximum {hi} must exceed minimum {lo}"));
    }
    Ok((name.trim().to_string(), lo, hi))
}

fn parse_framework(s: &str) -> Result<Framework, String> {
    s.parse().map_err(|e: MediationError| e.to_string())
}

fn parse_subtype(s: &str) -> Result<Subtype, String> {
    s.parse().map_err(|e: MediationError| e.to_string())
}

fn parse_format(s: &str) -> Result<ExportFormat, String> {
    s.parse().map_err(|e: MediationError| e.to_string())
}

enum Failure {
    Usage(String),
    Model(MediationError),
}

impl From<MediationError> for Failure {
    fn from(e: MediationError) -> Self {
        Failure::Model(e)
    }
}

type Outcome = Result<(), Failure>;

fn emit<T: Serialize>(json: bool, value: &T, text: impl FnOnce() -> String) -> Outcome {
    if json {
        println!("{}", serde_json::to_string_pretty(value).map_err(MediationError::from)?);
    } else {
        println!("{}", text());
    }
    Ok(())
}

fn load_model(
    data: &Path,
    outcome: &str,
    mediator: &str,
    treatment: &str,
    controls: &[String],
    ranges: &[(String, f64, f64)],
) -> Result<(mediation::Dataset, ModelSpec), MediationError> {
    let model = ModelSpec::new(outcome, mediator, treatment).with_controls(controls.iter().cloned());
    model.validate()?;
    let role = |name: &str| match name {
        n if n == outcome => Role::Outcome,
        n if n == mediator => Role::Mediator,
        n if n == treatment => Role::Treatment,
        _ => Role::Control,
    };
    let mut specs = Vec::new();
    for name in model.variables() {
        // columns without a declared range are read as-is
        let (lo, hi) = ranges
            .iter()
            .find(|r| r.0 == name)
            .map_or((0.0, 1.0), |r| (r.1, r.2));
        specs.push(VariableSpec::new(name, role(name), lo, hi)?);
    }
    validate_roles(&specs)?;
    let ds = load_csv(data, &specs)?;
    let scaled: Vec<VariableSpec> = specs
        .into_iter()
        .filter(|s| ranges.iter().any(|r| r.0 == s.name))
        .collect();
    if let Some((name, ..)) = ranges.iter().find(|r| !model.variables().contains(&r.0.as_str())) {
        return Err(MediationError::Schema(format!("--range given for `{name}`, which is not in the model")));
    }
    Ok((ds.percentized(&scaled)?, model))
}

fn fit_model(ds: &mediation::Dataset, model: &ModelSpec, framework: Framework) -> Result<MediationFit, MediationError> {
    match framework {
        Framework::LadZ => fit_lad(ds, model),
        fw => fit_lse(ds, model)?.with_framework(fw),
    }
}

fn fit_text(fit: &MediationFit) -> String {
    let mut s = format!("framework {}  n = {}  controls = {}\n", fit.framework, fit.n_used, fit.n_controls);
    s += &format!("{:<6}{:>14}{:>14}{:>14}{:>12}\n", "path", "estimate", "std.err", "statistic", "p");
    for (name, est, se, f, p) in [
        ("a", fit.a_hat, fit.se_a, fit.f_a, fit.p_a),
        ("b", fit.b_hat, fit.se_b, fit.f_b, fit.p_b),
        ("d", fit.d_hat, fit.se_d, fit.f_d, fit.p_d),
        ("c", fit.c_hat, fit.se_c, fit.f_c, fit.p_c),
    ] {
        s += &format!("{name:<6}{est:>14.6}{se:>14.6}{f:>14.4}{p:>12.4e}\n");
    }
    if let (Some(z), Some(p)) = (fit.sobel_s, fit.p_ab) {
        s += &format!("{:<6}{:>14.6}{:>14}{z:>14.4}{p:>12.4e}\n", "ab", fit.a_hat * fit.b_hat, "");
    }
    s.trim_end().to_string()
}

fn run_fit(args: &FitArgs, json: bool) -> Outcome {
    let d = &args.data;
    let (ds, model) = load_model(&d.data, &d.outcome, &d.mediator, &d.treatment, &d.controls, &d.ranges)?;
    let fit = fit_model(&ds, &model, args.framework)?;
    if !args.contributions {
        return emit(json, &fit, || fit_text(&fit));
    }
    let contrib = percent_contributions(&EffectTests::from(&fit))?;
    #[derive(Serialize)]
    struct Out<'a> {
        fit: &'a MediationFit,
        contributions: mediation::ContributionReport,
    }
    emit(json, &Out { fit: &fit, contributions: contrib }, || {
        let c = contrib.c_p;
        format!(
            "{}\npercent of total effect: ab {:.2}%  d {:.2}%  a {:.2}%  b {:.2}%",
            fit_text(&fit),
            100.0 * c.ab,
            100.0 * c.d,
            100.0 * c.a,
            100.0 * c.b
        )
    })
}

fn run_classify(args: &ClassifyArgs, json: bool) -> Outcome {
    let tests = match (&args.tests, &args.data) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).map_err(|source| MediationError::Io {
                path: path.clone(),
                source,
            })?;
            serde_json::from_str::<EffectTests>(&text).map_err(MediationError::from)?
        }
        (None, Some(data)) => {
            let (ds, model) = load_model(
                data,
                args.outcome.as_deref().unwrap_or_default(),
                args.mediator.as_deref().unwrap_or_default(),
                args.treatment.as_deref().unwrap_or_default(),
                &args.controls,
                &args.ranges,
            )?;
            EffectTests::from(&fit_model(&ds, &model, args.framework)?)
        }
        _ => return Err(Failure::Usage("give either --tests FILE or --data FILE with -y/-m/-x".into())),
    };
    let verdict = classify(&tests, args.alpha)?;
    emit(json, &verdict, || {
        format!(
            "{}\ncausal-steps verdict: {:?}\nerroneous rejection by the total-effect test: {}",
            verdict.label(),
            verdict.causal_steps_type,
            if verdict.erroneous_rejection { "yes" } else { "no" }
        )
    })
}

fn run_reduce(args: &DataArgs, json: bool) -> Outcome {
    let (ds, model) = load_model(&args.data, &args.outcome, &args.mediator, &args.treatment, &args.controls, &args.ranges)?;
    let coords = canonical_reduce(&ds, &model)?;
    let point = geometry_point(&coords);
    #[derive(Serialize)]
    struct Out {
        coords: mediation::CanonicalCoords,
        point: mediation::GeometryPoint,
    }
    emit(json, &Out { coords, point }, || {
        format!(
            "n = {}\nr = {:.6}  p = {:.6}  q = {:.6}\nsign(abd) = {:+}  sign(abc) = {:+}",
            point.n, point.r, point.p, point.q, point.sign_abd, point.sign_abc
        )
    })
}

fn run_geometry(cmd: &GeometryCommand, json: bool) -> Outcome {
    match cmd {
        GeometryCommand::Critical(at) => {
            let cv = geometry::critical_values(at.n, at.alpha)?;
            emit(json, &cv, || {
                format!("r_crit = {:.8}\np_crit = {:.8}\nz = {:.8}", cv.r_crit, cv.p_crit, cv.z_half)
            })
        }
        GeometryCommand::Witness(w) => {
            let (n, alpha) = (w.at.n, w.at.alpha);
            if let Some(c) = w.context {
                if c != 1 && c != -1 {
                    return Err(Failure::Usage(format!("--context must be 1 or -1, got {c}")));
                }
            }
            let point = match w.kind.as_str() {
                "indirect-only" => match w.context {
                    Some(ctx) => geometry::witness_indirect_only_in_context(n, alpha, w.subtype, ctx)?,
                    None => geometry::witness_indirect_only(n, alpha, w.subtype)?,
                },
                "competitive" => geometry::witness_competitive(n, alpha, w.context.unwrap_or(1))?,
                "sobel-io" => geometry::witness_sobel_io(n, alpha)?,
                other => return Err(Failure::Usage(format!("unknown witness kind `{other}`"))),
            };
            emit(json, &point, || {
                format!(
                    "r = {:.8}  p = {:.8}  q = {:.8}\nsign(abd) = {:+}  sign(abc) = {:+}",
                    point.r, point.p, point.q, point.sign_abd, point.sign_abc
                )
            })
        }
        GeometryCommand::Superfluity(s) => {
            let rep = geometry::verify_complementary_superfluous(s.at.n, s.at.alpha, s.density)?;
            emit(json, &rep, || {
                format!(
                    "{} cells, {} points checked, {} violations",
                    rep.cells,
                    rep.points_checked,
                    rep.violations()
                )
            })
        }
        GeometryCommand::Boundary(b) => {
            let samples = geometry::region_boundary_samples(b.at.n, b.at.alpha, b.r, b.p_max, b.count)?;
            if json {
                return emit(true, &samples, String::new);
            }
            match &b.out {
                Some(path) => {
                    let file = std::fs::File::create(path).map_err(|source| MediationError::Io {
                        path: path.clone(),
                        source,
                    })?;
                    samples.write_csv(file)?;
                }
                None => samples.write_csv(std::io::stdout().lock())?,
            }
            Ok(())
        }
    }
}

fn run_simulate(args: &SimulateArgs, json: bool) -> Outcome {
    let mut cfg = match &args.config {
        Some(path) => SimulationConfig::load(path)?,
        None => SimulationConfig::default(),
    };
    if let Some(r) = args.replicates {
        cfg.replicates = r;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let total = cfg.replicates;
    let step = (total / 20).max(1);
    let quiet = args.quiet;
    let report = run_study_with_progress(&cfg, |done| {
        if !quiet && (done % step == 0 || done == total) {
            eprintln!("simulated {done}/{total}");
        }
    })?;
    let files = export_report(&report, &args.out, args.format)?;
    #[derive(Serialize)]
    struct Out {
        files: Vec<PathBuf>,
        replicates: usize,
        regenerated: u64,
    }
    let out = Out {
        files,
        replicates: report.records.len(),
        regenerated: report.diagnostics.regenerated,
    };
    emit(json, &out, || {
        let names: Vec<String> = out.files.iter().map(|f| f.display().to_string()).collect();
        format!("{} replicates ({} regenerated)\nwrote {}", out.replicates, out.regenerated, names.join(", "))
    })
}

fn run_describe(args: &DescribeArgs, json: bool) -> Outcome {
    let specs = args
        .vars
        .iter()
        .map(|(name, lo, hi)| VariableSpec::new(name.as_str(), Role::Control, *lo, *hi))
        .collect::<Result<Vec<_>, _>>()?;
    let ds = load_csv(&args.data, &specs)?;
    let summary = describe(&ds, &specs)?;
    if json {
        println!("{}", summary.to_json()?);
    } else {
        summary.write_csv(std::io::stdout().lock())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let json = cli.json;
    let result = match &cli.command {
        Command::Fit(a) => run_fit(a, json),
        Command::Classify(a) => run_classify(a, json),
        Command::Reduce(a) => run_reduce(a, json),
        Command::Geometry(g) => run_geometry(g, json),
        Command::Simulate(a) => run_simulate(a, json),
        Command::Describe(a) => run_describe(a, json),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Model(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
