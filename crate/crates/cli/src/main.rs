use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};

use clap::{Args, Parser, Subcommand, ValueEnum};

use koopcert::certificates::full_report;
use koopcert::edmdc::theory::write_theory_checks;
use koopcert::harness::preset::{parse_methods, parse_seed_list, parse_systems, parse_usize_list};
use koopcert::harness::{
    bench_timing, emit_tables, fmt_float, run_cases, theory_suite, CaseOutcome, HarnessConfig,
    PresetName,
};
use koopcert::lifting::Dictionary;
use koopcert::{Dataset, Error};

#[derive(Parser)]
#[command(
    name = "koopcert",
    version,
    about = "Data-quality certificates and certificate-driven acquisition for EDMDc"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ten-method baseline comparison at budget 40.
    MajorRevision(PresetArgs),
    /// Five methods over budgets 8, 12, 20, 40, 80.
    MajorBudgetAblation(PresetArgs),
    /// Dictionary degrees 2 to 4.
    DegreeAblation(PresetArgs),
    /// IGPE-DOPT against its component ablations.
    ComponentAblation(PresetArgs),
    /// IGPE-DOPT weight variants.
    WeightSensitivity(PresetArgs),
    /// Small grid for quick checks.
    Smoke(PresetArgs),
    /// Run the regression-theory checks; nonzero exit on any violation.
    CheckTheory(TheoryArgs),
    /// Certificate report for a dataset CSV with columns x0.., u0.., xn0...
    Report(ReportArgs),
    /// Per-method wall-clock loop.
    BenchTiming(TimingArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    /// CSV only.
    Csv,
    /// CSV plus markdown mirrors.
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Text,
    Csv,
}

#[derive(Args)]
struct PresetArgs {
    /// Defaults to results/<preset>.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Seed list such as 0-9 or 0,3,5.
    #[arg(long)]
    seeds: Option<String>,
    /// Comma-separated budgets.
    #[arg(long, alias = "budget")]
    budgets: Option<String>,
    /// Comma-separated systems (duffing, vdp, lorenz).
    #[arg(long)]
    systems: Option<String>,
    /// Comma-separated method ids.
    #[arg(long)]
    methods: Option<String>,
    /// Comma-separated dictionary degrees.
    #[arg(long)]
    degrees: Option<String>,
    /// Worker threads; 0 uses every logical processor.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TableFormat::Both)]
    format: TableFormat,
}

#[derive(Args)]
struct TheoryArgs {
    /// Writes theory_checks.csv here when given.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    dataset: PathBuf,
    /// Dictionary degree; defaults to 3 for one- and two-state data, 2 otherwise.
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    format: ReportFormat,
}

#[derive(Args)]
struct TimingArgs {
    /// Writes tables/timing.csv here when given.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Errors mapped to exit codes.
enum Failure {
    Usage(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Usage(_) | Error::Config(_) => Failure::Usage(e.to_string()),
            other => Failure::Run(other.to_string()),
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<HarnessConfig, Failure> {
    Ok(match path {
        Some(p) => HarnessConfig::load(p).map_err(|e| Failure::Usage(e.to_string()))?,
        None => HarnessConfig::default(),
    })
}

fn split(s: &str) -> Vec<String> {
    s.split(',').map(|t| t.trim().to_string()).collect()
}

fn run_preset(name: PresetName, args: PresetArgs) -> Result<bool, Failure> {
    let cfg = load_config(args.config.as_deref())?;
    let mut preset = name.preset().with_config(&cfg)?;
    if let Some(s) = &args.seeds {
        preset.seeds = parse_seed_list(s)?;
    }
    if let Some(b) = &args.budgets {
        preset.budgets = parse_usize_list(b)?;
    }
    if let Some(s) = &args.systems {
        preset.systems = parse_systems(&split(s))?;
    }
    if let Some(m) = &args.methods {
        preset.methods = parse_methods(&split(m))?;
    }
    if let Some(d) = &args.degrees {
        preset.degrees = Some(parse_usize_list(d)?);
    }
    preset.validate()?;
    let out_dir = args
        .output_dir
        .unwrap_or_else(|| PathBuf::from("results").join(name.as_str()));
    let cases = preset.cases(&cfg);
    let total = cases.len();
    eprintln!("{name}: {total} cases -> {}", out_dir.display());
    let done = AtomicUsize::new(0);
    let progress = |_: usize, o: &CaseOutcome| {
        let k = done.fetch_add(1, Ordering::Relaxed) + 1;
        match o {
            Ok(r) => eprintln!(
                "[{k}/{total}] {} {} seed={} B={} ok {:.2}s",
                r.case.system, r.case.method, r.case.seed, r.case.budget, r.wall_clock_s
            ),
            Err(f) => eprintln!(
                "[{k}/{total}] {} {} seed={} B={} FAILED: {}",
                f.case.system, f.case.method, f.case.seed, f.case.budget, f.message
            ),
        }
    };
    let outcomes = run_cases(&cfg, &cases, args.workers, &progress)?;
    let markdown = matches!(args.format, TableFormat::Both);
    let files = emit_tables(
        name.outputs(),
        &outcomes,
        &cfg.bootstrap,
        &out_dir,
        markdown,
    )?;
    let config_path = out_dir.join("config.toml");
    std::fs::write(&config_path, cfg.to_toml_string()?)
        .map_err(|e| Failure::Run(format!("{}: {e}", config_path.display())))?;
    for f in &files {
        eprintln!("wrote {}", f.display());
    }
    let failed = outcomes.iter().filter(|o| o.is_err()).count();
    if failed > 0 {
        eprintln!("{failed} of {total} cases failed; see failed_cases.csv");
    }
    Ok(failed == 0)
}

fn check_theory(args: TheoryArgs) -> Result<bool, Failure> {
    let cfg = load_config(args.config.as_deref())?;
    let checks = theory_suite(&cfg, args.seed)?;
    println!(
        "{:<16} {:>14} {:>14} {:>14}  satisfied",
        "name", "lhs", "rhs", "margin"
    );
    for c in &checks {
        println!(
            "{:<16} {:>14} {:>14} {:>14}  {}",
            c.name.as_str(),
            fmt_float(c.lhs),
            fmt_float(c.rhs),
            fmt_float(c.margin),
            c.satisfied
        );
    }
    if let Some(dir) = args.output_dir {
        std::fs::create_dir_all(&dir)
            .map_err(|e| Failure::Run(format!("{}: {e}", dir.display())))?;
        write_theory_checks(&dir.join("theory_checks.csv"), &checks)?;
    }
    let violations = checks.iter().filter(|c| !c.satisfied).count();
    if violations > 0 {
        eprintln!("{violations} theory check(s) violated");
    }
    Ok(violations == 0)
}

fn report(args: ReportArgs) -> Result<bool, Failure> {
    let cfg = load_config(args.config.as_deref())?;
    let data = Dataset::read_csv(&args.dataset)?;
    let degree = args.degree.unwrap_or(if data.n_x <= 2 { 3 } else { 2 });
    let dict = Dictionary::polynomial(data.n_x, degree)?;
    let r = full_report(&data, &dict, &cfg.certificates.calibrated(data.n_x))?;
    let fields: Vec<(&str, String)> = vec![
        ("n_samples", r.n_samples.to_string()),
        ("c_dir", fmt_float(r.c_dir)),
        ("c_fr", fmt_float(r.c_fr)),
        ("c_rad", fmt_float(r.c_rad)),
        ("state_iso", fmt_float(r.state_iso)),
        ("lift_iso", fmt_float(r.lift_iso)),
        ("regression_iso", fmt_float(r.regression_iso)),
        ("regression_cov_z_min", fmt_float(r.c_reg)),
        ("sigma_min_bar_phi", fmt_float(r.sigma_min_bar_phi)),
        ("regression_logdet", fmt_float(r.regression_logdet)),
        ("active_rank", r.active_rank.to_string()),
        ("active_dim", r.active_dim.to_string()),
        ("std_gpe_index", fmt_float(r.c_gpe)),
        ("bottleneck", r.bottleneck_term().to_string()),
    ];
    match args.format {
        ReportFormat::Text => {
            for (k, v) in &fields {
                println!("{k:<22} {v}");
            }
        }
        ReportFormat::Csv => {
            println!(
                "{}",
                fields.iter().map(|(k, _)| *k).collect::<Vec<_>>().join(",")
            );
            println!(
                "{}",
                fields
                    .iter()
                    .map(|(_, v)| v.as_str())
                    .collect::<Vec<_>>()
                    .join(",")
            );
        }
    }
    Ok(true)
}

fn timing(args: TimingArgs) -> Result<bool, Failure> {
    let cfg = load_config(args.config.as_deref())?;
    let rows = bench_timing(&cfg)?;
    let header = ["method", "runs", "mean_s", "min_s", "max_s"];
    let records: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.method.name().to_string(),
                r.runs.to_string(),
                fmt_float(r.mean_s),
                fmt_float(r.min_s),
                fmt_float(r.max_s),
            ]
        })
        .collect();
    println!(
        "{:<18} {:>4} {:>12} {:>25}",
        "method", "runs", "mean_s", "range_s"
    );
    for r in &rows {
        println!(
            "{:<18} {:>4} {:>12.4} {:>12.4} - {:<10.4}",
            r.method.name(),
            r.runs,
            r.mean_s,
            r.min_s,
            r.max_s
        );
    }
    if let Some(dir) = args.output_dir {
        let tables = dir.join("tables");
        std::fs::create_dir_all(&tables)
            .map_err(|e| Failure::Run(format!("{}: {e}", tables.display())))?;
        let path = tables.join("timing.csv");
        let mut text = header.join(",") + "\n";
        for r in &records {
            text.push_str(&r.join(","));
            text.push('\n');
        }
        std::fs::write(&path, text)
            .map_err(|e| Failure::Run(format!("{}: {e}", path.display())))?;
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::MajorRevision(a) => run_preset(PresetName::MajorRevision, a),
        Command::MajorBudgetAblation(a) => run_preset(PresetName::MajorBudgetAblation, a),
        Command::DegreeAblation(a) => run_preset(PresetName::DegreeAblation, a),
        Command::ComponentAblation(a) => run_preset(PresetName::ComponentAblation, a),
        Command::WeightSensitivity(a) => run_preset(PresetName::WeightSensitivity, a),
        Command::Smoke(a) => run_preset(PresetName::Smoke, a),
        Command::CheckTheory(a) => check_theory(a),
        Command::Report(a) => report(a),
        Command::BenchTiming(a) => timing(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
