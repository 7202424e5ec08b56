use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use netvax::contact_data::{condense, read_contact_log};
use netvax::error::{Error, Result};
use netvax::exec::{with_threads, Execution};
use netvax::harness::{self, school, ScenarioConfig, ScenarioKind};
use netvax::multilayer::{assemble_multilayer, write_multilayer_csv, CiPreset};
use netvax::rng::{self, Purpose};

#[derive(Parser)]
#[command(name = "netvax", version, about = "Vaccination strategies on partially observed contact networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo scenario and write curves, summaries and charts.
    Run(RunArgs),
    /// Detect communities on the school network and write the assignment.
    DetectCommunities(Common),
    /// Draw one layered population and write its edge and layer lists.
    GenerateMultilayer {
        #[command(flatten)]
        common: Common,
        /// Initial condition whose probabilities label the layers.
        #[arg(long, default_value = "ci_a")]
        ci: String,
    },
    /// Parse and condense a contact log, reporting its size.
    ValidateDataset {
        path: PathBuf,
        /// Distinct ticks per snapshot.
        #[arg(long, default_value_t = 100)]
        window: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Scenario {
    School,
    Multilayer,
}

#[derive(Args)]
struct Common {
    /// TOML scenario file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario used when no config file is given.
    #[arg(long, value_enum, default_value = "school")]
    scenario: Scenario,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the root seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Overrides the Monte Carlo run count.
    #[arg(long)]
    runs: Option<usize>,
    /// Worker threads; 1 runs sequentially.
    #[arg(long)]
    jobs: Option<usize>,
}

fn load_config(c: &Common) -> Result<ScenarioConfig> {
    let mut cfg = match &c.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => {
            let mut cfg = ScenarioConfig::new(match c.scenario {
                Scenario::School => ScenarioKind::School,
                Scenario::Multilayer => ScenarioKind::Multilayer,
            });
            cfg.apply_env();
            cfg
        }
    };
    if let Some(seed) = c.seed {
        cfg.root_seed = seed;
    }
    Ok(cfg)
}

fn run(args: &RunArgs) -> Result<()> {
    let mut cfg = load_config(&args.common)?;
    if let Some(runs) = args.runs {
        cfg.runs = runs;
    }
    cfg.validate()?;
    let exec = if args.jobs == Some(1) { Execution::Sequential } else { Execution::Parallel };
    let started = std::time::Instant::now();
    let report = with_threads(args.jobs, || harness::run_scenario(&cfg, exec))?;
    log::info!("simulated in {:.1?}", started.elapsed());
    if let Some(src) = &report.dataset {
        if src.is_synthetic() {
            eprintln!("warning: results use the synthetic school network, not a recorded contact log");
        }
    }
    let written = harness::write_report(&report, &cfg, &args.common.out)?;
    for s in &report.summaries {
        println!(
            "{:<22} {:<16} peak {:>6.2}% ± {:>5.2}% at step {}",
            s.scenario,
            s.arm,
            100.0 * s.peak_mean,
            100.0 * s.peak_std,
            s.peak_step
        );
    }
    if !report.invariants.is_clean() {
        for v in &report.invariants.violations {
            eprintln!("invariant violated: {v}");
        }
        return Err(Error::Numeric(format!("{} invariant violations", report.invariants.violations.len())));
    }
    println!("wrote {} files to {}", written.len(), args.common.out.display());
    Ok(())
}

fn detect(c: &Common) -> Result<()> {
    let cfg = load_config(c)?;
    let data = school::prepare(&cfg)?;
    create_dir(&c.out)?;
    let path = c.out.join("communities.csv");
    data.partition.write_csv(&path)?;
    println!("sizes {:?} -> {}", data.partition.sizes(), path.display());
    Ok(())
}

fn generate(c: &Common, ci: &str) -> Result<()> {
    let cfg = load_config(c)?;
    let net = cfg.multilayer.network.clone().with_preset(CiPreset::from_name(ci)?);
    let (g, lm) = assemble_multilayer(&net, &mut rng::stream(cfg.root_seed, &[Purpose::Topology as u64]))?;
    create_dir(&c.out)?;
    let (edges, layers) = (c.out.join("multilayer_edges.csv"), c.out.join("multilayer_layers.csv"));
    write_multilayer_csv(&g, &lm, &edges, &layers)?;
    println!("{} nodes, {} edges -> {}", g.node_count(), g.edge_count() / 2, edges.display());
    Ok(())
}

fn validate_dataset(path: &Path, window: usize) -> Result<()> {
    if !path.is_file() {
        return Err(Error::Config(format!("dataset {} does not exist", path.display())));
    }
    let log = read_contact_log(path)?;
    let tn = condense(&log, window)?;
    println!(
        "{} nodes, {} contacts, {} ticks, {} distinct pairs, {} snapshots of {window} ticks",
        log.node_count(),
        log.records().len(),
        log.distinct_ticks(),
        log.distinct_pairs().len(),
        tn.len()
    );
    Ok(())
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => run(args),
        Command::DetectCommunities(c) => detect(c),
        Command::GenerateMultilayer { common, ci } => generate(common, ci),
        Command::ValidateDataset { path, window } => validate_dataset(path, *window),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
