use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use g2lab::dsp::{
    coherence_time, g2_from_interferogram_with, AnalysisSettings, FilterSettings, G2Method,
};
use g2lab::models::{lachs_g2, lachs_thermal_fraction, risken_curve};
use g2lab::optics::{tpa_interferogram, DelaySweep};
use g2lab::rng::derive_seed;
use g2lab::scenarios::columnar::{
    field_table, g2_table, interferogram_from_table, interferogram_table, num, Table,
};
use g2lab::scenarios::run::{build_ensemble, delay_half_range, grid_for};
use g2lab::scenarios::{
    compare_report, preset, reference, run_scenario_with, write_run, CoherenceReport,
    ReferenceTable, ScenarioConfig, SweepPoint, PRESETS,
};
use g2lab::Error;

const RUNS_DIR_ENV: &str = "G2LAB_RUNS_DIR";

#[derive(Parser, Debug)]
#[command(
    name = "g2lab",
    version,
    about = "Second-order coherence of light via simulated TPA interferometry"
)]
struct Cli {
    /// Cap on worker threads (default: available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output mode: `columns` and `records` are machine readable.
    #[arg(long, global = true, value_enum, default_value_t = Format::Summary)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    /// Tab-separated columns with `#` headers.
    Columns,
    /// JSON lines.
    Records,
    /// Human-readable text.
    Summary,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a field ensemble and emit its first realization.
    Synth(PointArgs),
    /// Simulate the TPA interferogram of a source.
    Interfere(PointArgs),
    /// Extract g2 from an interferogram file.
    Analyze {
        /// Interferogram data file.
        input: PathBuf,
        #[arg(long, default_value_t = 0.2)]
        plateau_fraction: f64,
        #[arg(long, default_value_t = 0.125)]
        transition_fraction: f64,
        /// Write the curve here instead of the output stream.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate photon-statistics models.
    Model(ModelArgs),
    /// Run a scenario and persist every artifact.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Run directory (default: $G2LAB_RUNS_DIR or ./runs, then /<config-hash>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare a report with reference g2(0) values.
    Compare {
        /// report.jsonl or report.tsv.
        report: PathBuf,
        /// Reference table file with `label` and `g2` columns.
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        reference: Option<PathBuf>,
        /// Use the built-in reference of a preset.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, default_value_t = 0.05)]
        tolerance: f64,
        #[arg(long, value_enum, default_value_t = MethodArg::TpaFiltered)]
        method: MethodArg,
    },
    /// List built-in scenarios.
    Presets {
        /// Print one preset as an editable config file.
        #[arg(long)]
        dump: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Direct,
    TpaFiltered,
}

impl From<MethodArg> for G2Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Direct => G2Method::Direct,
            MethodArg::TpaFiltered => G2Method::TpaFiltered,
        }
    }
}

#[derive(Args, Debug)]
struct ScenarioArgs {
    /// Scenario config file (TOML).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario name (see `g2lab presets`).
    #[arg(long)]
    preset: Option<String>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of realizations per point.
    #[arg(long)]
    realizations: Option<usize>,
    /// Override the record length.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args, Debug)]
struct PointArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Sweep label (default: first point).
    #[arg(long)]
    point: Option<String>,
    /// Write the data file here instead of the output stream.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct ModelChoice {
    /// Coherent + thermal mixture relation.
    #[arg(long)]
    lachs: bool,
    /// Near-threshold laser curve.
    #[arg(long)]
    risken: bool,
}

#[derive(Args, Debug)]
struct ModelArgs {
    #[command(flatten)]
    which: ModelChoice,
    /// g2(0) to convert into a thermal fraction (with --lachs).
    #[arg(long, requires = "lachs", conflicts_with = "x")]
    g2: Option<f64>,
    /// Thermal fraction to convert into g2(0) (with --lachs).
    #[arg(long, requires = "lachs")]
    x: Option<f64>,
    #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
    pump_min: f64,
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    pump_max: f64,
    #[arg(long, default_value_t = 21)]
    steps: usize,
    /// Pump-independent thermal photon fraction (with --risken).
    #[arg(long, default_value_t = 0.0)]
    ase: f64,
}

/// Failure with its exit status: 1 for domain errors, 2 for usage and I/O.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let inner = match &e {
            Error::AtPoint { source, .. } => source.as_ref(),
            other => other,
        };
        let code = match inner {
            Error::Io(_)
            | Error::Config(_)
            | Error::Format { .. }
            | Error::UnknownPreset(_)
            | Error::DuplicateLabel(_) => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .expect("thread pool configured once");
    }
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Synth(args) => synth(args, cli.format),
        Command::Interfere(args) => interfere(args, cli.format),
        Command::Analyze {
            input,
            plateau_fraction,
            transition_fraction,
            out,
        } => analyze(
            input,
            *plateau_fraction,
            *transition_fraction,
            out.as_deref(),
            cli.format,
        ),
        Command::Model(args) => model(args, cli.format),
        Command::Run { scenario, out } => run(scenario, out.as_deref(), cli.format),
        Command::Compare {
            report,
            reference,
            preset,
            tolerance,
            method,
        } => compare(
            report,
            reference.as_deref(),
            preset.as_deref(),
            *tolerance,
            (*method).into(),
            cli.format,
        ),
        Command::Presets { dump } => presets(dump.as_deref(), cli.format),
    }
}

fn load_scenario(args: &ScenarioArgs) -> CliResult<ScenarioConfig> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            ScenarioConfig::from_toml(&text)?
        }
        (None, Some(name)) => preset(name)?,
        (None, None) => return Err(usage("one of --config or --preset is required")),
    };
    if let Some(seed) = args.seed {
        cfg.simulation.seed = seed;
    }
    if let Some(n) = args.realizations {
        cfg.simulation.n_realizations = n;
    }
    if let Some(n) = args.samples {
        cfg.simulation.n_samples = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn select_point(cfg: &ScenarioConfig, label: Option<&str>) -> CliResult<(usize, SweepPoint)> {
    let points = cfg.points();
    match label {
        None => Ok((0, points[0].clone())),
        Some(l) => points
            .into_iter()
            .enumerate()
            .find(|(_, p)| p.label == l)
            .ok_or_else(|| usage(format!("no sweep point labelled `{l}`"))),
    }
}

/// Table as JSON lines: a `meta` record then one record per row, numbers
/// where a field parses as one.
fn table_records(t: &Table) -> String {
    let mut meta = Map::new();
    meta.insert("record".into(), Value::from("meta"));
    for (k, v) in &t.meta {
        meta.insert(k.clone(), Value::from(v.as_str()));
    }
    let mut out = Value::Object(meta).to_string();
    out.push('\n');
    for row in &t.rows {
        let mut rec = Map::new();
        rec.insert("record".into(), Value::from("row"));
        for (c, v) in t.columns.iter().zip(row) {
            let value = match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Value::from(x),
                Ok(_) => Value::Null,
                Err(_) => Value::from(v.as_str()),
            };
            rec.insert(c.clone(), value);
        }
        out.push_str(&Value::Object(rec).to_string());
        out.push('\n');
    }
    out
}

/// Writes a table to `out` or the output stream in the requested mode.
fn emit(t: &Table, out: Option<&Path>, format: Format, summary: impl Fn() -> String) -> CliResult {
    let text = match format {
        Format::Columns => t.render(),
        Format::Records => table_records(t),
        Format::Summary if out.is_some() => t.render(),
        Format::Summary => summary(),
    };
    match out {
        Some(path) => {
            fs::write(path, &text)?;
            if format == Format::Summary {
                print!("{}", summary());
            }
        }
        None => print!("{text}"),
    }
    std::io::stdout().flush()?;
    Ok(())
}

fn synth(args: &PointArgs, format: Format) -> CliResult {
    let cfg = load_scenario(&args.scenario)?;
    let (index, point) = select_point(&cfg, args.point.as_deref())?;
    let grid = grid_for(&cfg)?;
    let seed = derive_seed(cfg.simulation.seed, index as u64);
    let fields = build_ensemble(&point.source, cfg.simulation.n_realizations, &grid, seed)
        .map_err(|e| Error::AtPoint {
            label: point.label.clone(),
            source: Box::new(e),
        })?;
    let mut t = field_table(&fields.realizations()[0], grid.dt);
    t.set("config_hash", cfg.hash());
    t.set("label", &point.label);
    t.set("source_class", fields.class());
    t.set("n_realizations", fields.n_realizations());
    t.set("mean_intensity", num(fields.mean_intensity()));
    t.set("sample_mean_intensity", num(fields.sample_mean_intensity()));
    emit(&t, args.out.as_deref(), format, || {
        format!(
            "{}: {} ensemble, {} x {} samples, mean intensity {:.6} (nominal {:.6})\n",
            point.label,
            fields.class(),
            fields.n_realizations(),
            fields.n_samples(),
            fields.sample_mean_intensity(),
            fields.mean_intensity()
        )
    })
}

fn interfere(args: &PointArgs, format: Format) -> CliResult {
    let cfg = load_scenario(&args.scenario)?;
    let (index, point) = select_point(&cfg, args.point.as_deref())?;
    let at = |e: Error| Error::AtPoint {
        label: point.label.clone(),
        source: Box::new(e),
    };
    let grid = grid_for(&cfg)?;
    let seed = derive_seed(cfg.simulation.seed, index as u64);
    let fields =
        build_ensemble(&point.source, cfg.simulation.n_realizations, &grid, seed).map_err(at)?;
    let sweep = DelaySweep::for_fringes(
        delay_half_range(&cfg, &point.source, &grid),
        grid.dt,
        grid.carrier,
        point.source.line_detuning(),
        cfg.analysis.fringe_sampling,
    )
    .map_err(at)?;
    let ig = tpa_interferogram(&fields, &sweep).map_err(at)?;
    let mut t = interferogram_table(&ig);
    t.set("config_hash", cfg.hash());
    t.set("label", &point.label);
    emit(&t, args.out.as_deref(), format, || {
        let peak = ig.signal.iter().cloned().fold(f64::MIN, f64::max);
        format!(
            "{}: {} delays in [{}, {}], peak {:.4} = {:.3} x single-arm level\n",
            point.label,
            ig.delays.len(),
            ig.delays[0],
            ig.delays[ig.delays.len() - 1],
            peak,
            peak / ig.single_arm_level
        )
    })
}

fn analyze(
    input: &Path,
    plateau: f64,
    transition: f64,
    out: Option<&Path>,
    format: Format,
) -> CliResult {
    let text = fs::read_to_string(input)
        .map_err(|e| usage(format!("cannot read {}: {e}", input.display())))?;
    let ig = interferogram_from_table::<f64>(&Table::parse(&text)?)?;
    let settings = AnalysisSettings {
        filter: FilterSettings {
            transition_fraction: transition,
            ..FilterSettings::default()
        },
        plateau_fraction: plateau,
    };
    let curve = g2_from_interferogram_with(&ig, &settings)?;
    let tau = coherence_time(&curve).ok();
    let mut t = g2_table(&curve, tau);
    if let Some(hash) = ig.meta.get("config_hash") {
        t.set("config_hash", hash);
    }
    t.set(
        "thermal_fraction",
        num(g2lab::scenarios::report::report_thermal_fraction(
            curve.g2_zero,
        )),
    );
    emit(&t, out, format, || {
        let tau = tau
            .map(|t| format!("{t:.3}"))
            .unwrap_or_else(|| "undefined".into());
        format!(
            "g2(0) = {:.4}, thermal fraction {:.4}, coherence time {tau}\n",
            curve.g2_zero,
            g2lab::scenarios::report::report_thermal_fraction(curve.g2_zero)
        )
    })
}

fn model(args: &ModelArgs, format: Format) -> CliResult {
    if args.which.lachs {
        let mut t = Table::new(
            "lachs",
            &["g2_zero", "thermal_fraction", "coherent_fraction"],
        );
        let rows: Vec<(f64, f64)> = match (args.g2, args.x) {
            (Some(g), _) => vec![(g, lachs_thermal_fraction(g)?)],
            (None, Some(x)) => vec![(lachs_g2(x)?, x)],
            (None, None) => (0..=10)
                .map(|i| {
                    let x = i as f64 / 10.0;
                    Ok((lachs_g2(x)?, x))
                })
                .collect::<Result<_, Error>>()?,
        };
        for &(g, x) in &rows {
            t.push(vec![num(g), num(x), num(1.0 - x)]);
        }
        return emit(&t, None, format, || {
            rows.iter()
                .map(|(g, x)| format!("g2(0) = {g:.4}  thermal fraction = {x:.4}\n"))
                .collect()
        });
    }
    if args.steps < 2 || !(args.pump_max > args.pump_min) {
        return Err(usage(
            "--risken needs --steps >= 2 and --pump-max > --pump-min",
        ));
    }
    let pumps: Vec<f64> = (0..args.steps)
        .map(|i| {
            args.pump_min + (args.pump_max - args.pump_min) * i as f64 / (args.steps - 1) as f64
        })
        .collect();
    let rows = risken_curve(&pumps, args.ase)?;
    let mut t = Table::new("risken", &["pump", "relative_power", "g2_zero"]);
    t.set("ase_excess", num(args.ase));
    for r in &rows {
        t.push(r.iter().map(|&v| num(v)).collect());
    }
    emit(&t, None, format, || {
        let mut s = format!("{:>8} {:>14} {:>8}\n", "pump", "rel. power", "g2(0)");
        for [a, p, g] in &rows {
            s.push_str(&format!("{a:>8.3} {p:>14.6} {g:>8.5}\n"));
        }
        s
    })
}

fn run(args: &ScenarioArgs, out: Option<&Path>, format: Format) -> CliResult {
    let cfg = load_scenario(args)?;
    let dir = match out
        .map(Path::to_path_buf)
        .or_else(|| cfg.outputs.dir.as_ref().map(PathBuf::from))
    {
        Some(d) => d,
        None => {
            let root = std::env::var_os(RUNS_DIR_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("runs"));
            root.join(cfg.hash())
        }
    };
    let total = cfg.points().len();
    let result = run_scenario_with(&cfg, &|o| {
        eprintln!(
            "[{}/{}] {}: direct g2(0) = {:.4}, tpa g2(0) = {:.4}",
            o.index + 1,
            total,
            o.point.label,
            o.direct.g2_zero,
            o.tpa.g2_zero
        );
    })?;
    write_run(&result, &dir)?;
    eprintln!("wrote {}", dir.display());
    let text = match format {
        Format::Columns => result.report.to_table().render(),
        Format::Records => result.report.to_jsonl(),
        Format::Summary => result.report.summary(),
    };
    print!("{text}");
    Ok(())
}

fn compare(
    report: &Path,
    reference_path: Option<&Path>,
    preset_name: Option<&str>,
    tolerance: f64,
    method: G2Method,
    format: Format,
) -> CliResult {
    let text = fs::read_to_string(report)
        .map_err(|e| usage(format!("cannot read {}: {e}", report.display())))?;
    let report = CoherenceReport::parse(&text)?;
    let table = match (reference_path, preset_name) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            ReferenceTable::parse(&text)?
        }
        (None, Some(name)) => reference(name)?,
        (None, None) => return Err(usage("one of --reference or --preset is required")),
    };
    let cmp = compare_report(&report, &table, tolerance, method)?;
    let mut t = cmp.to_table();
    t.set("config_hash", &report.provenance.config_hash);
    emit(&t, None, format, || {
        let mut s = String::new();
        for d in &cmp.deviations {
            s.push_str(&format!(
                "{:<14} reference {:.4} measured {:.4} deviation {:+.4} {}\n",
                d.label,
                d.reference,
                d.measured,
                d.deviation,
                if d.pass { "ok" } else { "FAIL" }
            ));
        }
        if let Some(ok) = cmp.trend_ok {
            s.push_str(&format!("trend {}\n", if ok { "ok" } else { "FAIL" }));
        }
        s.push_str(&format!(
            "verdict: {} (tolerance {})\n",
            if cmp.pass { "pass" } else { "fail" },
            tolerance
        ));
        s
    })?;
    if cmp.pass {
        Ok(())
    } else {
        // message goes to the error stream; the deviations are already printed
        Err(Failure {
            code: 1,
            message: "comparison failed".into(),
        })
    }
}

fn presets(dump: Option<&str>, format: Format) -> CliResult {
    if let Some(name) = dump {
        print!("{}", preset(name)?.to_toml());
        return Ok(());
    }
    let mut t = Table::new("presets", &["name", "points", "anchor"]);
    for p in &PRESETS {
        t.push(vec![
            p.name.to_string(),
            p.points.to_string(),
            p.anchor.to_string(),
        ]);
    }
    emit(&t, None, format, || {
        PRESETS
            .iter()
            .map(|p| format!("{:<20} {} point(s)  {}\n", p.name, p.points, p.anchor))
            .collect()
    })
}
