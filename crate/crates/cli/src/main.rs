mod svg;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use posim::config::parse_config;
use posim::data::LongDataset;
use posim::genmodel_one::{simulate_dataset_one, StudyOneParams};
use posim::genmodel_two::{simulate_dataset_two, StudyTwoParams, DEFAULT_ALPHA};
use posim::harness::{data_seed, run_study, ModelParams, Regime, Study, Truths};
use posim::io::{
    curve_rows, read_curves, read_truth, write_curves, write_dataset, write_results, write_truth_one,
    write_truth_two, CurveRow, Metadata, TruthFile,
};
use posim::truth::{compute_truth_two, true_params_one, DEFAULT_N_ORACLE};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "posim", version, about = "Simulate positivity violations and evaluate IPTW marginal structural models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate one long-format dataset.
    Gen(GenArgs),
    /// Compute the true estimands of a study.
    Truth(TruthArgs),
    /// Run a simulation grid described by a config file.
    Run(RunArgs),
    /// Extract mean survival curves from a run as a table or SVG chart.
    Curves(CurvesArgs),
}

#[derive(Debug, clap::Args)]
struct GenArgs {
    #[arg(long, value_parser = parse_study)]
    study: Study,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Exposure cut-off; 1 means no violation.
    #[arg(long, default_value_t = 1.0)]
    pi: f64,
    /// Health-region cut-off; required when pi < 1.
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<f64>,
    /// Replication index within the scenario.
    #[arg(long, default_value_t = 0)]
    rep: u64,
    #[arg(long, env = "POSIM_SEED")]
    seed: u64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct TruthArgs {
    #[arg(long, value_parser = parse_study)]
    study: Study,
    /// Subjects simulated per treatment regime (study 2 only).
    #[arg(long, default_value_t = DEFAULT_N_ORACLE)]
    n_oracle: usize,
    #[arg(long, env = "POSIM_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// Config file (`key = value` lines).
    config: PathBuf,
    /// Replications per scenario, overriding the config.
    #[arg(long)]
    b: Option<usize>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Svg,
}

#[derive(Debug, clap::Args)]
struct CurvesArgs {
    /// Run output directory or its curves.csv.
    results: PathBuf,
    /// Scenario id (e.g. I-n1000-pi0.05-tau500-NoWT) or panel id without the
    /// tau part (e.g. I-n1000-pi0.05-NoWT) to plot one series per tau.
    #[arg(long)]
    scenario: String,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_study(s: &str) -> Result<Study, String> {
    s.parse().map_err(|e: posim::Error| e.to_string())
}

/// Errors caused by how the tool was invoked rather than by the work itself.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    match err.downcast_ref::<posim::Error>() {
        Some(posim::Error::InvalidParameter(_)) | Some(posim::Error::Config(_)) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Truth(a) => cmd_truth(a),
        Command::Run(a) => cmd_run(a),
        Command::Curves(a) => cmd_curves(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => {
            io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

fn cmd_gen(a: GenArgs) -> anyhow::Result<()> {
    if a.n == 0 {
        return Err(usage("--n must be positive"));
    }
    let tau = match (a.pi < 1.0, a.tau) {
        (true, None) => return Err(usage("--tau is required when --pi is below 1")),
        (_, tau) => tau,
    };
    let model = match (a.study, tau) {
        (Study::One, Some(t)) => ModelParams::One(StudyOneParams::with_violation(a.n, a.pi, t)?),
        (Study::One, None) => ModelParams::One(StudyOneParams::benchmark(a.n)),
        (Study::Two, Some(t)) => ModelParams::Two(StudyTwoParams::with_violation(a.n, a.pi, t)?),
        (Study::Two, None) => ModelParams::Two(StudyTwoParams::benchmark(a.n)),
    };
    let seed = data_seed(a.seed, &model);
    let data = match &model {
        ModelParams::One(p) => LongDataset::One(simulate_dataset_one(p, a.rep, seed)?),
        ModelParams::Two(p) => LongDataset::Two(simulate_dataset_two(p, a.rep, seed)?),
    };
    let meta = Metadata::new()
        .with("tool_version", VERSION)
        .with("seed", a.seed)
        .with("rep", a.rep)
        .with("pi", a.pi)
        .with("tau", tau.map(|t| t.to_string()).unwrap_or_else(|| "none".into()));
    let mut buf = Vec::new();
    write_dataset(&mut buf, &data, &meta)?;
    write_output(a.out.as_deref(), &buf)
}

fn cmd_truth(a: TruthArgs) -> anyhow::Result<()> {
    let mut buf = Vec::new();
    match a.study {
        Study::One => write_truth_one(&mut buf, &true_params_one())?,
        Study::Two => {
            let seed = a
                .seed
                .ok_or_else(|| usage("study 2 truth needs --seed (or POSIM_SEED)"))?;
            if a.n_oracle == 0 {
                return Err(usage("--n-oracle must be positive"));
            }
            write_truth_two(&mut buf, &compute_truth_two(a.n_oracle, seed)?)?;
        }
    }
    write_output(a.out.as_deref(), &buf)
}

fn env_seed() -> anyhow::Result<Option<u64>> {
    match std::env::var("POSIM_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| usage(format!("POSIM_SEED is not an unsigned integer: '{v}'"))),
        Err(_) => Ok(None),
    }
}

fn cmd_run(a: RunArgs) -> anyhow::Result<()> {
    let text = fs::read_to_string(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    let mut cfg = parse_config(&text).with_context(|| format!("in {}", a.config.display()))?;
    if let Some(b) = a.b {
        if b == 0 {
            return Err(usage("--b must be positive"));
        }
        cfg.replications = b;
    }
    let seed = match cfg.seed {
        Some(s) => s,
        None => env_seed()?.ok_or_else(|| usage("no master seed: set 'seed' in the config or POSIM_SEED"))?,
    };
    cfg.seed = Some(seed);

    let mut truths = Truths::default();
    let mut truth_meta = Vec::new();
    match cfg.study {
        Study::One => truths.one = Some(true_params_one()),
        Study::Two => {
            let hint = format!(
                "study 2 needs oracle truth; run `posim truth --study 2 --seed {seed} --out truth2.csv` and add \
                 `truth = truth2.csv` to {}",
                a.config.display()
            );
            let rel = cfg.truth.clone().ok_or_else(|| anyhow!("{hint}"))?;
            let base = a.config.parent().unwrap_or(Path::new("."));
            let path = base.join(&rel);
            if !path.is_file() {
                bail!("truth file {} not found; {hint}", path.display());
            }
            let text = fs::read_to_string(&path)?;
            let truth = match read_truth(&text).with_context(|| format!("in {}", path.display()))? {
                TruthFile::Two(t) => t,
                TruthFile::One(_) => bail!("{} holds study 1 truth", path.display()),
            };
            if truth.alpha != DEFAULT_ALPHA {
                bail!("{} was computed for other hazard parameters", path.display());
            }
            let abs = fs::canonicalize(&path)?;
            cfg.truth = Some(abs.display().to_string());
            truth_meta.push(("truth_n_oracle", truth.n_oracle.to_string()));
            truth_meta.push(("truth_seed", truth.seed.to_string()));
            truths.two = Some(truth);
        }
    }

    let grid = cfg.grid(seed)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = a.jobs {
        if j == 0 {
            return Err(usage("--jobs must be positive"));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool.build()?;
    let results = pool.install(|| run_study(&grid, &truths))?;

    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let mut meta = Metadata::new()
        .with("tool_version", VERSION)
        .with("study", cfg.study)
        .with("master_seed", seed)
        .with("replications", cfg.replications);
    for (k, v) in &truth_meta {
        meta = meta.with(k, v);
    }

    let mut buf = Vec::new();
    write_results(&mut buf, &results, &meta)?;
    fs::write(a.out_dir.join("results.csv"), &buf)?;
    let mut buf = Vec::new();
    write_curves(&mut buf, &curve_rows(&results), &meta)?;
    fs::write(a.out_dir.join("curves.csv"), &buf)?;

    // The manifest is itself a config file: `posim run manifest.txt` redoes the run.
    let mut manifest = String::from("# posim-manifest v1\n");
    manifest.push_str(&format!("# tool_version: {VERSION}\n"));
    manifest.push_str(&format!("# config: {}\n", a.config.display()));
    manifest.push_str(&format!("# output_dir: {}\n", a.out_dir.display()));
    manifest.push_str(&format!("# master_seed: {seed}\n"));
    manifest.push_str(&format!("# scenarios: {}\n", grid.len()));
    manifest.push_str(&cfg.render());
    for s in &grid {
        manifest.push_str(&format!("# scenario: {}\n", s.id()));
    }
    fs::write(a.out_dir.join("manifest.txt"), manifest)?;

    let failed: usize = results.iter().map(|r| r.failed()).sum();
    eprintln!(
        "{} scenarios x {} replications written to {} ({failed} failed replications)",
        grid.len(),
        cfg.replications,
        a.out_dir.display()
    );
    Ok(())
}

fn cmd_curves(a: CurvesArgs) -> anyhow::Result<()> {
    let path = if a.results.is_dir() {
        a.results.join("curves.csv")
    } else {
        a.results.clone()
    };
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let (_, rows) = read_curves(&text).with_context(|| format!("in {}", path.display()))?;
    let mut selected: Vec<&CurveRow> = rows.iter().filter(|r| r.scenario == a.scenario).collect();
    if selected.is_empty() {
        selected = rows.iter().filter(|r| r.panel == a.scenario).collect();
    }
    if selected.is_empty() {
        let mut ids: Vec<&str> = rows.iter().map(|r| r.scenario.as_str()).collect();
        ids.dedup();
        let shown = ids.iter().take(5).copied().collect::<Vec<_>>().join(", ");
        return Err(usage(format!("unknown scenario id '{}' (known: {shown}, ...)", a.scenario)));
    }

    let out = match a.format {
        Format::Table => {
            let mut s = String::from("# posim-curve-table v1\nscenario,tau,regime,t,mean_survival,true_survival\n");
            for r in &selected {
                let truth = r.truth.map(|v| v.to_string()).unwrap_or_default();
                s.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.scenario,
                    r.tau,
                    r.regime.label(),
                    r.t,
                    r.mean,
                    truth
                ));
            }
            s
        }
        Format::Svg => render_chart(&a.scenario, &selected),
    };
    write_output(a.out.as_deref(), out.as_bytes())
}

fn render_chart(title: &str, rows: &[&CurveRow]) -> String {
    let mut scenarios: Vec<(&str, f64)> = Vec::new();
    for r in rows {
        if !scenarios.iter().any(|(s, _)| *s == r.scenario) {
            scenarios.push((&r.scenario, r.tau));
        }
    }
    let points = |scenario: &str, regime: Regime, truth: bool| -> Vec<(f64, f64)> {
        rows.iter()
            .filter(|r| r.scenario == scenario && r.regime == regime)
            .map(|r| (r.t, if truth { r.truth.unwrap_or(f64::NAN) } else { r.mean }))
            .collect()
    };
    let mut series = Vec::new();
    for (i, (scenario, tau)) in scenarios.iter().enumerate() {
        let color = svg::PALETTE[i % svg::PALETTE.len()].to_string();
        for regime in [Regime::Always, Regime::Never] {
            series.push(svg::Series {
                label: format!("tau={tau} {}", regime.label()),
                color: color.clone(),
                dashed: regime == Regime::Never,
                stroke_width: 2.0,
                points: points(scenario, regime, false),
            });
        }
    }
    // the true curves do not depend on tau
    let first = scenarios[0].0;
    for regime in [Regime::Always, Regime::Never] {
        let pts = points(first, regime, true);
        if pts.iter().any(|p| p.1.is_finite()) {
            series.push(svg::Series {
                label: format!("true {}", regime.label()),
                color: "#000000".into(),
                dashed: regime == Regime::Never,
                stroke_width: 1.0,
                points: pts,
            });
        }
    }
    let x_label = if first.starts_with("II-") { "time" } else { "visit" };
    svg::render(title, x_label, &series)
}
