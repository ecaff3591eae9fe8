use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use privshape::config::{BinningConfig, DeviceSpec, ScenarioConfig};
use privshape::devices::EssModel;
use privshape::controller::{audit_run, write_breakdown_csv, write_profiles_csv, write_reports_csv, RunOutput};
use privshape::domain::Role;
use privshape::harness::{
    archetype, generate_synthetic_profile, read_series, run_matrix, scenario_profiles, write_bundle,
    ExperimentMatrix,
};
use privshape::metrics::score;
use privshape::theory::theory_report;
use privshape::{Error, Result};

#[derive(Parser)]
#[command(name = "privshape", version, about = "Household energy-privacy simulator")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a pair of load profiles: IID and Markov MI, entropy of x.
    Score(ScoreArgs),
    /// Check the ideal-policy results and print a report.
    Theory(TheoryArgs),
    /// Run one scenario and audit it.
    Run(RunArgs),
    /// Run an experiment matrix and write the summary tables.
    Matrix(MatrixArgs),
    /// Write a synthetic profile bundle and a scenario that uses it.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct ScoreArgs {
    /// Sensitive load CSV (timestamp,value).
    #[arg(long, requires = "grid", conflicts_with = "profiles")]
    load: Option<PathBuf>,
    /// Grid load CSV (timestamp,value).
    #[arg(long)]
    grid: Option<PathBuf>,
    /// A profiles.csv from `run` or `matrix` instead of two series.
    #[arg(long)]
    profiles: Option<PathBuf>,
    /// Scenario whose binning and scoring smoothing are used.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Upper X edge; a run's report.csv records the one it scored with.
    #[arg(long)]
    x_max: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Markdown,
    Csv,
}

#[derive(Args)]
struct TheoryArgs {
    #[arg(long, default_value_t = 23618)]
    seed: u64,
    /// Length of the sampled sequences.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, value_enum, default_value_t = Format::Markdown)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario TOML; defaults apply when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(short, long, default_value = "out")]
    out: PathBuf,
    /// Seed of the synthetic profile.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    days: Option<usize>,
}

#[derive(Args)]
struct MatrixArgs {
    /// Matrix TOML; the default matrix applies when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(short, long, default_value = "out")]
    out: PathBuf,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    days: Option<usize>,
    /// Worker threads; 0 uses all cores.
    #[arg(short = 'j', long)]
    threads: Option<usize>,
    /// Skip the per-cell profile files.
    #[arg(long)]
    no_profiles: bool,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(short, long, default_value = "data")]
    out: PathBuf,
    #[arg(long, default_value_t = 23618)]
    seed: u64,
    #[arg(long, default_value_t = 37)]
    days: usize,
    #[arg(long, default_value = "house-23618-like")]
    archetype: String,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn mkdir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn read_config(path: Option<&Path>) -> Result<ScenarioConfig> {
    match path {
        Some(p) => ScenarioConfig::load(p),
        None => Ok(ScenarioConfig::default()),
    }
}

fn cmd_score(args: ScoreArgs) -> Result<ExitCode> {
    let (x, y) = match (&args.profiles, &args.load, &args.grid) {
        (Some(p), _, _) => {
            let f = File::open(p).map_err(|e| Error::io(p, e))?;
            privshape::controller::read_profiles_xy(f)?
        }
        (None, Some(l), Some(g)) => {
            let x = read_series(l, Role::Sensitive)?;
            let y = read_series(g, Role::Grid)?;
            if x.grid() != y.grid() {
                return Err(Error::invalid(format!(
                    "{} and {} are on different time grids",
                    l.display(),
                    g.display()
                )));
            }
            (x.values().to_vec(), y.values().to_vec())
        }
        _ => return Err(Error::invalid("give --profiles, or --load and --grid")),
    };
    let (mut binning, eps) = match &args.config {
        Some(p) => {
            let cfg = ScenarioConfig::load(p)?;
            (cfg.binning.clone(), cfg.score_epsilon)
        }
        None => (BinningConfig::default(), 0.0),
    };
    if args.x_max.is_some() {
        binning.x_max = args.x_max;
    }
    let report = score(&x, &y, &binning.scheme(&x)?, args.epsilon.unwrap_or(eps))?;
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    w.serialize(report).map_err(|e| Error::invalid(e.to_string()))?;
    w.flush().map_err(|e| Error::io("<stdout>", e))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_theory(args: TheoryArgs) -> Result<ExitCode> {
    let report = theory_report(args.seed, args.samples)?;
    let text = match args.format {
        Format::Markdown => report.to_markdown(),
        Format::Csv => report.to_csv(),
    };
    match &args.out {
        Some(p) => write_text(p, &text)?,
        None => print!("{text}"),
    }
    if report.all_pass() {
        Ok(ExitCode::SUCCESS)
    } else {
        warn!("theory checks failed");
        Ok(ExitCode::from(1))
    }
}

fn write_run(dir: &Path, run: &RunOutput) -> Result<()> {
    mkdir(dir)?;
    write_profiles_csv(run, create(&dir.join("profiles.csv"))?)?;
    write_breakdown_csv(run, create(&dir.join("breakdown.csv"))?)?;
    write_reports_csv(&[&run.report], create(&dir.join("report.csv"))?)
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let mut cfg = read_config(args.config.as_deref())?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(d) = args.days {
        cfg.days = d;
    }
    cfg.validate()?;
    let bundle = scenario_profiles(&cfg, cfg.seed)?;
    let run = privshape::controller::run_receding_horizon(&cfg, &bundle)?;
    write_run(&args.out, &run)?;
    let audit = audit_run(&cfg, &bundle, &run)?;
    let r = &run.report;
    println!(
        "{}: iid {:.3} bits, markov {:.3} bits, H(X) {:.3} bits, {:.2} c/day, {} failed steps",
        r.name, r.iid_mi_bits, r.markov_mi_bits, r.entropy_x_bits, r.avg_daily_cost, r.failed_steps
    );
    for issue in audit.issues.iter().filter(|i| !i.excused).take(10) {
        warn!("audit: {issue:?}");
    }
    if r.failed_steps == 0 && audit.is_clean(1e-6) {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn cmd_matrix(args: MatrixArgs) -> Result<ExitCode> {
    let mut m = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            let mut m: ExperimentMatrix = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
            let base = p.parent().unwrap_or(Path::new("."));
            let inputs = &mut m.template.inputs;
            for q in [&mut inputs.load, &mut inputs.draws, &mut inputs.outdoor_temp, &mut inputs.irradiance]
                .into_iter()
                .flatten()
            {
                if q.is_relative() {
                    *q = base.join(&*q);
                }
            }
            m
        }
        None => ExperimentMatrix::default(),
    };
    if let Some(s) = args.seed {
        m.master_seed = s;
    }
    if let Some(d) = args.days {
        m.template.days = d;
    }
    if let Some(t) = args.threads {
        m.threads = t;
    }
    m.validate()?;
    info!("{} cells", m.cells()?.len());
    let outcome = run_matrix(&m)?;
    mkdir(&args.out)?;
    write_text(&args.out.join("privacy_table.csv"), &outcome.privacy_table_csv())?;
    write_text(&args.out.join("cost_table.csv"), &outcome.cost_table_csv())?;
    write_text(&args.out.join("cells.csv"), &outcome.cells_csv())?;
    if !args.no_profiles {
        for r in &outcome.results {
            if let Ok(run) = &r.output {
                write_run(&args.out.join(format!("cell_{:03}", r.cell.index)), run)?;
            }
        }
    }
    print!("{}", outcome.privacy_table_csv());
    let failed: Vec<_> = outcome.results.iter().filter(|r| r.output.is_err()).collect();
    for r in &failed {
        if let Err(e) = &r.output {
            eprintln!("cell {} ({}): {e}", r.cell.index, r.cell.config.name);
        }
    }
    if failed.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<ExitCode> {
    let arch = archetype(&args.archetype)?;
    let bundle = generate_synthetic_profile(args.seed, args.days, arch)?;
    let paths = write_bundle(&bundle, &args.out)?;
    let rel = |p: Option<PathBuf>| p.and_then(|p| p.file_name().map(PathBuf::from));
    let mut cfg = ScenarioConfig {
        archetype: args.archetype.clone(),
        seed: args.seed,
        days: args.days.saturating_sub(8).max(1),
        devices: vec![DeviceSpec::Ess(EssModel::default())],
        ..ScenarioConfig::default()
    };
    cfg.inputs.load = rel(paths.load);
    cfg.inputs.draws = rel(paths.draws);
    cfg.inputs.outdoor_temp = rel(paths.outdoor_temp);
    cfg.inputs.irradiance = rel(paths.irradiance);
    write_text(&args.out.join("scenario.toml"), &cfg.to_toml()?)?;
    println!("{} hours written to {}", bundle.len(), args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Score(a) => cmd_score(a),
        Command::Theory(a) => cmd_theory(a),
        Command::Run(a) => cmd_run(a),
        Command::Matrix(a) => cmd_matrix(a),
        Command::Generate(a) => cmd_generate(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(io::stderr(), "error: {e}");
            ExitCode::from(2)
        }
    }
}
