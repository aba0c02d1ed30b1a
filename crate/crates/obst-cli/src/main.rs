//! Command-line front end: scenario runner, bound reports, and snapshot
//! tooling. Exit codes: 0 ok, 1 config error, 2 invariant violation.

use std::fs;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use obst_cli::config::{CliError, ExperimentConfig};
use obst_cli::scenario;
use obst_core::overlay::Overlay;
use obst_core::seeding::derive_seed;
use obst_core::workload::RequestSequence;

#[derive(Parser)]
#[command(name = "obst", about = "Self-adjusting multi-BST overlay simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario preset and write its CSV data series.
    Run(RunArgs),
    /// Print entropy bounds next to the measured cost of the built overlay.
    Bounds(BoundsArgs),
    /// Check every structural invariant of an overlay snapshot.
    Validate {
        /// Snapshot file to validate.
        #[arg(long)]
        snapshot: String,
    },
    /// Print one tree of a snapshot in the per-node text format.
    DumpTree {
        #[arg(long)]
        snapshot: String,
        /// Tree number, 1-based.
        #[arg(long, default_value_t = 1)]
        tree: usize,
    },
    /// Create a random overlay and write its snapshot.
    Snapshot {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: String,
    },
    /// Load a snapshot, validate it, and optionally re-save it.
    Load {
        #[arg(long)]
        snapshot: String,
        #[arg(long)]
        out: Option<String>,
    },
    /// Generate a guest graph and request sequence as files.
    GenWorkload(GenWorkloadArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario preset: fig3..fig10 or custom.
    #[arg(long, default_value = "custom")]
    scenario: String,
    /// Flat JSON config file; CLI flags override its fields.
    #[arg(long)]
    config: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    guest: Option<String>,
    #[arg(long)]
    edge_list: Option<String>,
    #[arg(long)]
    seq: Option<String>,
    #[arg(long)]
    p_repeat: Option<f64>,
    #[arg(long)]
    adjust: Option<bool>,
    #[arg(long)]
    adjust_every: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    lambda: Option<Vec<usize>>,
    #[arg(long)]
    max_requests: Option<usize>,
    #[arg(long)]
    sample_every: Option<usize>,
}

#[derive(Args)]
struct BoundsArgs {
    /// Request sequence file (`t,src,dst` CSV). Alternatively generate one
    /// with --guest/--seq.
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long)]
    n: usize,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    k: Vec<usize>,
    #[arg(long, default_value = "rnd")]
    guest: String,
    #[arg(long, default_value = "match")]
    seq: String,
    #[arg(long, default_value_t = 0.5)]
    p_repeat: f64,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Optional CSV output for sweeps over k.
    #[arg(long)]
    csv: Option<String>,
}

#[derive(Args)]
struct GenWorkloadArgs {
    #[arg(long, default_value = "rnd")]
    guest: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value = "match")]
    seq: String,
    #[arg(long, default_value_t = 0.5)]
    p_repeat: f64,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    edge_list: Option<String>,
    /// Output path for the guest graph edge list.
    #[arg(long)]
    out_graph: Option<String>,
    /// Output path for the request sequence CSV.
    #[arg(long)]
    out_seq: Option<String>,
}

fn read(path: &str) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_string(),
        source,
    })
}

fn write(path: &str, content: &str) -> Result<(), CliError> {
    fs::write(path, content).map_err(|source| CliError::Io {
        path: path.to_string(),
        source,
    })
}

fn run_cmd(args: RunArgs) -> Result<(), CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let mut file_cfg = ExperimentConfig::from_json(&read(path)?)?;
            if file_cfg.scenario != args.scenario && args.scenario != "custom" {
                file_cfg.scenario = args.scenario.clone();
            }
            file_cfg
        }
        None => ExperimentConfig::preset(&args.scenario)?,
    };
    if let Some(v) = args.out {
        cfg.out_dir = v;
    }
    if let Some(v) = args.n {
        cfg.n_values = v;
    }
    if let Some(v) = args.k {
        cfg.k_values = v;
    }
    if let Some(v) = args.seeds {
        cfg.seeds = v;
    }
    if let Some(v) = args.m {
        cfg.m = Some(v);
    }
    if let Some(v) = args.guest {
        cfg.guest = v;
    }
    if let Some(v) = args.edge_list {
        cfg.edge_list_path = Some(v);
    }
    if let Some(v) = args.seq {
        cfg.seq = v;
    }
    if let Some(v) = args.p_repeat {
        cfg.p_repeat = v;
    }
    if let Some(v) = args.adjust {
        cfg.adjust = v;
    }
    if let Some(v) = args.adjust_every {
        cfg.adjust_every = v;
    }
    if let Some(v) = args.lambda {
        cfg.lambda_values = v;
    }
    if let Some(v) = args.max_requests {
        cfg.max_requests = v;
    }
    if let Some(v) = args.sample_every {
        cfg.sample_every = Some(v);
    }
    let artifacts = scenario::run_scenario(&cfg)?;
    println!(
        "wrote {} ({} rows) and {}",
        artifacts.csv_path.display(),
        artifacts.rows,
        artifacts.meta_path.display()
    );
    Ok(())
}

fn bounds_cmd(args: BoundsArgs) -> Result<(), CliError> {
    let sigma = match &args.sigma {
        Some(path) => RequestSequence::parse_csv(&read(path)?)
            .map_err(|e| CliError::config("sigma", e.to_string()))?,
        None => {
            let cfg = ExperimentConfig {
                guest: args.guest.clone(),
                seq: args.seq.clone(),
                p_repeat: args.p_repeat,
                ..ExperimentConfig::default()
            };
            let m = args.m.unwrap_or(args.n * args.n).min(cfg.max_requests);
            let (guest, multiset) =
                scenario::make_guest(&cfg, &args.guest, args.n, derive_seed(args.seed, 101))?;
            scenario::make_sigma(
                &args.seq,
                args.p_repeat,
                &guest,
                &multiset,
                m,
                derive_seed(args.seed, 102),
            )?
        }
    };
    let mut csv = String::from(
        "n,k,m,lookup_lower_single,lookup_upper_balanced,routing_upper_single,routing_upper_multi,lookup_lower_multi,h_y,h_z,h_alpha,measured_static_cost\n",
    );
    for &k in &args.k {
        let row = scenario::compute_bounds(&sigma, args.n, k)?;
        println!("{}", serde_json::to_string_pretty(&row).unwrap());
        csv.push_str(&format!(
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            row.n,
            row.k,
            row.m,
            row.report.lookup_lower_single,
            row.report.lookup_upper_balanced,
            row.report.routing_upper_single,
            row.report.routing_upper_multi,
            row.report.lookup_lower_multi,
            row.report.h_y,
            row.report.h_z,
            row.report.h_alpha,
            row.measured_static_cost,
        ));
    }
    if let Some(path) = &args.csv {
        write(path, &csv)?;
        println!("wrote {path}");
    }
    Ok(())
}

fn gen_workload_cmd(args: GenWorkloadArgs) -> Result<(), CliError> {
    let cfg = ExperimentConfig {
        guest: args.guest.clone(),
        seq: args.seq.clone(),
        p_repeat: args.p_repeat,
        edge_list_path: args.edge_list.clone(),
        ..ExperimentConfig::default()
    };
    let m = args.m.unwrap_or(args.n * args.n).min(cfg.max_requests);
    let (guest, multiset) =
        scenario::make_guest(&cfg, &args.guest, args.n, derive_seed(args.seed, 101))?;
    let sigma = scenario::make_sigma(
        &args.seq,
        args.p_repeat,
        &guest,
        &multiset,
        m,
        derive_seed(args.seed, 102),
    )?;
    if let Some(path) = &args.out_graph {
        let mut text = String::new();
        for (a, b) in guest.edges() {
            text.push_str(&format!("{a} {b}\n"));
        }
        write(path, &text)?;
        println!("wrote {path} ({} edges)", guest.edge_count());
    }
    if let Some(path) = &args.out_seq {
        write(path, &sigma.to_csv())?;
        println!("wrote {path} ({} requests)", sigma.len());
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => run_cmd(args),
        Command::Bounds(args) => bounds_cmd(args),
        Command::Validate { snapshot } => {
            let text = read(&snapshot)?;
            let overlay = Overlay::parse_snapshot(&text)
                .map_err(|e| CliError::Invariant(e.to_string()))?;
            overlay.validate().map_err(CliError::Invariant)?;
            println!(
                "ok: {} peers, {} trees, all invariants hold",
                overlay.n(),
                overlay.k()
            );
            Ok(())
        }
        Command::DumpTree { snapshot, tree } => {
            let text = read(&snapshot)?;
            let overlay = Overlay::parse_snapshot(&text)
                .map_err(|e| CliError::Invariant(e.to_string()))?;
            if tree == 0 || tree > overlay.k() {
                return Err(CliError::config(
                    "tree",
                    format!("tree {tree} outside 1..={}", overlay.k()),
                ));
            }
            print!("{}", overlay.tree(tree - 1).serialize());
            Ok(())
        }
        Command::Snapshot { n, k, seed, out } => {
            let overlay = Overlay::new_random(n, k, seed)
                .map_err(|e| CliError::config("n/k", e.to_string()))?;
            write(&out, &overlay.snapshot())?;
            println!("wrote {out}");
            Ok(())
        }
        Command::Load { snapshot, out } => {
            let text = read(&snapshot)?;
            let overlay = Overlay::parse_snapshot(&text)
                .map_err(|e| CliError::Invariant(e.to_string()))?;
            overlay.validate().map_err(CliError::Invariant)?;
            println!("{} {}", overlay.n(), overlay.k());
            if let Some(path) = out {
                write(&path, &overlay.snapshot())?;
            }
            Ok(())
        }
        Command::GenWorkload(args) => gen_workload_cmd(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version through the error path with exit 0
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
