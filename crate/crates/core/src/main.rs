//! Command-line harness: generate networks, simulate records, fit AR
//! models, classify connectivity, validate predictions, and run the
//! error-surface and bound-table experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use latnet::connectivity::{classify_with, ThresholdSpec};
use latnet::error::{Error, Result};
use latnet::experiments::{
    bound_table, error_surface, write_bound_rows_csv, write_surface_csv, ExperimentConfig,
    NetworkSource,
};
use latnet::io;
use latnet::lsar::{fit_with_report, r_squared, RegularizationConfig};
use latnet::netgen::{gen_erdos_renyi, gen_ring, lift_higher_order, stability_report};
use latnet::simulate::simulate_with_burn_in;

#[derive(Parser)]
#[command(name = "latnet", version, about = "Manifest-subnetwork identification toolkit")]
struct Cli {
    /// Base RNG seed for seeded subcommands
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Frequency grid size for H-infinity evaluations
    #[arg(long, global = true, default_value_t = 4096)]
    grid: usize,
    /// Output path (a file; the output directory for error-surface)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a ground-truth network file and print its stability report
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
    },
    /// Simulate a network under white Gaussian manifest input
    Simulate {
        /// Network JSON file
        #[arg(long)]
        network: PathBuf,
        /// Number of recorded samples
        #[arg(long)]
        n: usize,
        /// Leading samples to simulate and discard
        #[arg(long, default_value_t = 0)]
        burn_in: usize,
    },
    /// Fit an AR model to a time-series CSV by least squares
    Fit {
        /// Time-series CSV file
        #[arg(long)]
        data: PathBuf,
        /// Model order
        #[arg(long)]
        tau: usize,
        #[command(flatten)]
        reg: RegArgs,
        /// Also write fit diagnostics (condition, residual energy,
        /// objective, block norms) as JSON
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Classify manifest pairs as direct or latent-mediated
    Classify {
        /// AR model JSON file
        #[arg(long)]
        model: PathBuf,
        /// Proportional threshold ratio in [0, 1]
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        /// Use `alpha` as an absolute cutoff on the order-0 block instead
        /// of a ratio of the largest weight
        #[arg(long)]
        absolute: bool,
        /// Exclude self-loops from the normalizing maximum
        #[arg(long)]
        exclude_diagonal: bool,
        /// Also write the plot-ready edge CSV
        #[arg(long)]
        edges: Option<PathBuf>,
    },
    /// Train/holdout split and one-step prediction quality
    Validate {
        /// Time-series CSV file
        #[arg(long)]
        data: PathBuf,
        /// Model order
        #[arg(long)]
        tau: usize,
        /// Fraction of the record used for fitting
        #[arg(long, default_value_t = 0.8)]
        split: f64,
        #[command(flatten)]
        reg: RegArgs,
        /// Also write the fit diagnostics of the training fit as JSON
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Sweep (N, tau, seed) cells: simulate, fit, and compare against the
    /// true transfer function
    ErrorSurface {
        /// Network JSON file (overrides the config's network source)
        #[arg(long)]
        network: Option<PathBuf>,
        /// Sweep config JSON; flags override file values
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        n_list: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        tau_list: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        #[command(flatten)]
        reg: RegArgs,
    },
    /// Tabulate the optimal-AR error against the theory bound per order
    BoundTable {
        /// Network JSON file
        #[arg(long)]
        network: PathBuf,
        /// Decay base in (rho(a22), 1); defaults to the midpoint
        #[arg(long)]
        rho_bar: Option<f64>,
        #[arg(long, default_value_t = 20)]
        tau_max: usize,
    },
}

#[derive(Subcommand)]
enum GenerateKind {
    /// Directed ring with uniform edge and self-loop weights
    Ring {
        #[arg(long)]
        n: usize,
        /// Edge weight
        #[arg(long)]
        w: f64,
        /// Self-loop weight
        #[arg(long = "self", default_value_t = 0.0)]
        self_loop: f64,
        /// Manifest node indices (1-based), comma separated
        #[arg(long, value_delimiter = ',')]
        manifest: Vec<usize>,
    },
    /// Weighted Erdős–Rényi digraph with paired edges
    Er {
        #[arg(long)]
        n: usize,
        /// Pair presence probability
        #[arg(long)]
        p: f64,
        #[arg(long)]
        wmin: f64,
        #[arg(long)]
        wmax: f64,
        /// Number of manifest nodes, drawn uniformly
        #[arg(long)]
        nm: usize,
    },
    /// Lift a higher-order network file to order-1 partitioned form
    FromHigherOrder {
        /// Higher-order network JSON file
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Args)]
struct RegArgs {
    /// Exponential regularization strength (enables the regularized fit)
    #[arg(long)]
    gamma: Option<f64>,
    /// Regularization decay base in (0, 1]
    #[arg(long, default_value_t = 0.9)]
    rho0: f64,
}

impl RegArgs {
    fn to_config(&self) -> Result<Option<RegularizationConfig>> {
        self.gamma
            .map(|g| RegularizationConfig::new(g, self.rho0))
            .transpose()
    }
}

fn require_out(out: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    out.clone()
        .ok_or_else(|| Error::InvalidArgument(format!("--out is required to write the {what}")))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { kind } => {
            let net = match kind {
                GenerateKind::Ring {
                    n,
                    w,
                    self_loop,
                    manifest,
                } => gen_ring(n, w, self_loop, &manifest)?,
                GenerateKind::Er {
                    n,
                    p,
                    wmin,
                    wmax,
                    nm,
                } => gen_erdos_renyi(n, p, wmin, wmax, nm, cli.seed)?,
                GenerateKind::FromHigherOrder { input } => {
                    lift_higher_order(&io::read_higher_order_json(&input)?)
                }
            };
            let out = require_out(&cli.out, "network file")?;
            io::write_network_json(&net, &out)?;
            let rep = stability_report(&net);
            println!(
                "n_m={} n_l={} rho_full={:.6} rho_latent={:.6} stable={} latent_stable={}",
                net.n_m(),
                net.n_l(),
                rep.rho_full,
                rep.rho_latent,
                rep.stable,
                rep.latent_stable
            );
            println!("wrote {}", out.display());
        }
        Command::Simulate { network, n, burn_in } => {
            let net = io::read_network_json(&network)?;
            let ts = simulate_with_burn_in(&net, n, cli.seed, None, burn_in)?;
            let out = require_out(&cli.out, "time-series file")?;
            io::write_timeseries_csv(&ts, &out)?;
            println!("wrote {} ({} samples, {} channels)", out.display(), ts.len(), ts.n_m());
        }
        Command::Fit {
            data,
            tau,
            reg,
            report,
        } => {
            let ts = io::read_timeseries_csv(&data)?;
            let cfg = reg.to_config()?;
            let (model, fit_report) = fit_with_report(&ts, tau, cfg.as_ref())?;
            let out = require_out(&cli.out, "model file")?;
            io::write_armodel_json(&model, &out)?;
            if let Some(p) = report {
                io::write_fit_report_json(&fit_report, &p)?;
            }
            match cfg {
                Some(c) => println!(
                    "fit tau={tau} gamma={} rho0={} objective={:.6e} residual_energy={:.6e} solver={} condition={:.3e}",
                    c.gamma, c.rho0, fit_report.objective, fit_report.residual_energy,
                    fit_report.solver, fit_report.condition
                ),
                None => println!(
                    "fit tau={tau} residual_energy={:.6e} solver={} condition={:.3e}",
                    fit_report.residual_energy, fit_report.solver, fit_report.condition
                ),
            }
            println!("wrote {}", out.display());
        }
        Command::Classify {
            model,
            alpha,
            absolute,
            exclude_diagonal,
            edges,
        } => {
            let m = io::read_armodel_json(&model)?;
            let spec = if absolute {
                ThresholdSpec::Absolute { theta: alpha }
            } else {
                ThresholdSpec::Proportional {
                    alpha,
                    exclude_diagonal,
                }
            };
            let graph = classify_with(&m, &spec)?;
            let out = require_out(&cli.out, "graph file")?;
            io::write_graph_json(&graph, &out)?;
            if let Some(p) = edges {
                io::write_graph_edge_csv(&graph, &p)?;
            }
            let file = io::GraphFile::from_graph(&graph);
            println!(
                "threshold={:.6e} direct_edges={} indirect_pairs={}",
                graph.threshold_used(),
                file.direct.len(),
                file.indirect.len()
            );
            for e in &file.indirect {
                println!("indirect {} -> {} min_order={}", e.src, e.dst, e.min_order);
            }
            println!("wrote {}", out.display());
        }
        Command::Validate {
            data,
            tau,
            split,
            reg,
            report,
        } => {
            let ts = io::read_timeseries_csv(&data)?;
            let (train, holdout) = ts.split(split)?;
            let cfg = reg.to_config()?;
            let (model, fit_report) = fit_with_report(&train, tau, cfg.as_ref())?;
            let r2 = r_squared(&model, &holdout)?;
            if let Some(p) = report {
                io::write_fit_report_json(&fit_report, &p)?;
            }
            match cfg {
                Some(c) => println!(
                    "R2 = {r2:.6} (tau={tau}, split={split}, gamma={}, rho0={}, objective={:.6e})",
                    c.gamma, c.rho0, fit_report.objective
                ),
                None => println!("R2 = {r2:.6} (tau={tau}, split={split})"),
            }
        }
        Command::ErrorSurface {
            network,
            config,
            n_list,
            tau_list,
            seeds,
            reg,
        } => {
            let mut cfg: ExperimentConfig = match &config {
                Some(p) => {
                    let text = std::fs::read_to_string(p)?;
                    serde_json::from_str(&text).map_err(|e| {
                        Error::DataFormat(format!(
                            "{}: line {}, column {}: {e}",
                            p.display(),
                            e.line(),
                            e.column()
                        ))
                    })?
                }
                None => ExperimentConfig {
                    network: None,
                    n_list: vec![],
                    tau_list: vec![],
                    seeds: vec![],
                    grid_size: cli.grid,
                    reg: None,
                    alpha: 0.1,
                    output_dir: PathBuf::from("."),
                },
            };
            // flags override file values
            if let Some(p) = network {
                cfg.network = Some(NetworkSource::Path(p));
            }
            if !n_list.is_empty() {
                cfg.n_list = n_list;
            }
            if !tau_list.is_empty() {
                cfg.tau_list = tau_list;
            }
            if !seeds.is_empty() {
                cfg.seeds = seeds;
            }
            if let Some(r) = reg.to_config()? {
                cfg.reg = Some(r);
            }
            cfg.grid_size = cli.grid;
            if let Some(out) = &cli.out {
                cfg.output_dir = out.clone();
            }
            cfg.validate()?;
            let net = cfg
                .network
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("no network given (--network or config)".into()))?
                .load()?;
            std::fs::create_dir_all(&cfg.output_dir)?;
            let rows = error_surface(&net, &cfg);
            let surface_path = cfg.output_dir.join("surface.csv");
            write_surface_csv(&rows, &surface_path)?;
            // echo the resolved config for provenance
            let mut echo = serde_json::to_string_pretty(&cfg)
                .map_err(|e| Error::DataFormat(e.to_string()))?;
            echo.push('\n');
            std::fs::write(cfg.output_dir.join("config.json"), echo)?;
            let failed = rows.iter().filter(|r| r.error.is_some()).count();
            println!(
                "wrote {} ({} cells, {} failed)",
                surface_path.display(),
                rows.len(),
                failed
            );
        }
        Command::BoundTable {
            network,
            rho_bar,
            tau_max,
        } => {
            let net = io::read_network_json(&network)?;
            let rows = bound_table(&net, rho_bar, tau_max, cli.grid)?;
            let out = require_out(&cli.out, "bound table")?;
            write_bound_rows_csv(&rows, &out)?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
