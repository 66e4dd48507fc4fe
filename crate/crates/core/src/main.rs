use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex;
use serde_json::json;

use eedi::analysis::{self, FiberSimulator, Simulator, Summary, SweepPlan};
use eedi::channel::{self, LinkConfig, WdmConfig};
use eedi::config::{load_config_with_overrides, ExperimentConfig};
use eedi::metrics::{self, EnergySeries};
use eedi::shaping::{self, AmplitudeAlphabet};
use eedi::{Error, Result};

#[derive(Parser)]
#[command(name = "eedi", version, about = "Shaped-QAM fiber simulation and energy dispersion analysis")]
struct Cli {
    /// Worker threads for independent runs (0 = all cores); overrides run.workers.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// Experiment config file.
    #[arg(short, long)]
    config: PathBuf,

    /// Dotted-path override, e.g. `link.num_spans=4`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Eedi,
    Edi,
    Kurtosis,
}

#[derive(Subcommand)]
enum Command {
    /// Generate CCDM-shaped 64-QAM symbols as an index,re,im CSV.
    Shape {
        #[arg(short = 'n', long)]
        blocklength: usize,
        #[arg(long, default_value_t = 1)]
        blocks: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Take the alphabet from this config instead of the default.
        #[arg(short, long)]
        config: Option<PathBuf>,
        /// Output CSV; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compute EEDI, EDI or kurtosis of a symbol CSV and print JSON.
    Metrics {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "eedi")]
        metric: MetricArg,
        #[arg(long, default_value_t = 0.99)]
        lambda: f64,
        #[arg(long, default_value_t = metrics::DEFAULT_EPSILON)]
        epsilon: f64,
        #[arg(long, default_value_t = 101)]
        window: usize,
    },
    /// Propagate one transmission and report the central channel.
    Simulate {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Blocklength; defaults to the first configured one.
        #[arg(short = 'n', long)]
        blocklength: Option<usize>,
        /// Seed; defaults to the first configured one.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the blocklength x seed sweep of the config.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Search the forgetting factor on an existing records.csv.
    OptimizeLambda {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Records file; defaults to records.csv in the output directory.
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Emit the blocklength, correlation-curve and distance figure data.
    Figures {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> Result<()> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn prepare(cfg: &ConfigArgs) -> Result<(ExperimentConfig, PathBuf)> {
    let config = load_config_with_overrides(&cfg.config, &cfg.overrides)?;
    let dir = PathBuf::from(config.output_dir());
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("effective_config.toml"), config.to_toml()?)?;
    Ok((config, dir))
}

fn regenerate_energies(plan: &SweepPlan, records: &[analysis::ExperimentRecord]) -> Result<Vec<EnergySeries<f64>>> {
    records.iter().map(|r| plan.central_energies(r.blocklength, r.seed)).collect()
}

fn write_optimization(
    dir: &Path,
    config: &ExperimentConfig,
    records: &[analysis::ExperimentRecord],
    energies: &[EnergySeries<f64>],
) -> Result<analysis::CorrelationCurve> {
    let curve = analysis::optimize_lambda(records, energies, &config.grid(), config.metrics.epsilon)?;
    analysis::write_curve_csv(create(dir, "correlation_curve.csv")?, &curve)?;
    let summary = Summary {
        lambda_star: curve.lambda_star,
        rp_star: curve.rp_star,
        distance_km: config.link.total_length_km(),
        per_blocklength: analysis::aggregate(records),
    };
    write_json(dir, "summary.json", &serde_json::to_value(&summary)?)?;
    Ok(curve)
}

fn simulator_for(link: &LinkConfig, wdm: &WdmConfig) -> Box<dyn Simulator> {
    Box::new(FiberSimulator { link: link.clone(), wdm: wdm.clone() })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Shape { blocklength, blocks, seed, config, output } => {
            let alphabet = match config {
                Some(path) => load_config_with_overrides(path, &[])?.alphabet()?,
                None => AmplitudeAlphabet::qam64_reference(),
            };
            let seq = shaping::generate_shaped_symbols::<f64>(&alphabet, blocklength, blocks, seed)?;
            match output {
                Some(path) => seq.write_csv(BufWriter::new(File::create(path)?))?,
                None => seq.write_csv(io::stdout().lock())?,
            }
        }
        Command::Metrics { input, metric, lambda, epsilon, window } => {
            let symbols: Vec<Complex<f64>> = shaping::read_symbols_csv(File::open(input)?)?;
            let result = match metric {
                MetricArg::Eedi => metrics::eedi(&symbols, lambda, epsilon)?,
                MetricArg::Edi => metrics::edi(&symbols, window)?,
                MetricArg::Kurtosis => metrics::kurtosis(&symbols)?,
            };
            println!("{}", result.to_json());
        }
        Command::Simulate { cfg, blocklength, seed } => {
            let (config, dir) = prepare(&cfg)?;
            let plan = config.sweep_plan()?;
            let n = blocklength.unwrap_or(plan.blocklengths[0]);
            let seed = seed.unwrap_or(plan.seeds[0]);
            let channels = plan.channel_symbols(n, seed)?;
            let rx = channel::simulate(&channels, &plan.link, &plan.wdm, SweepPlan::ase_seed(seed))?;
            write_json(
                &dir,
                "rx_result.json",
                &json!({
                    "blocklength": n,
                    "seed": seed,
                    "distance_km": plan.link.total_length_km(),
                    "launch_power_dbm": plan.wdm.launch_power_dbm,
                    "effective_snr_db": rx.effective_snr_db,
                    "scale": [rx.scale.re, rx.scale.im],
                    "sampling_offset": rx.sampling_offset,
                    "recovered_symbols": rx.recovered_symbols.len(),
                }),
            )?;
            if config.output.write_symbols {
                shaping::write_symbols_csv(create(&dir, "received_symbols.csv")?, &rx.recovered_symbols)?;
            }
        }
        Command::Sweep { cfg } => {
            let (config, dir) = prepare(&cfg)?;
            let plan = config.sweep_plan()?;
            let sweep = analysis::sweep_blocklengths(&plan, simulator_for(&plan.link, &plan.wdm).as_ref())?;
            analysis::write_records_csv(create(&dir, "records.csv")?, &sweep.records)?;
            if plan.blocklengths.len() >= 3 {
                write_optimization(&dir, &config, &sweep.records, &sweep.energies)?;
            } else {
                let per_n = analysis::aggregate(&sweep.records);
                write_json(&dir, "summary.json", &json!({ "per_blocklength": per_n }))?;
            }
        }
        Command::OptimizeLambda { cfg, records } => {
            let (config, dir) = prepare(&cfg)?;
            let path = records.unwrap_or_else(|| dir.join("records.csv"));
            let records = analysis::read_records_csv(File::open(path)?)?;
            let energies = regenerate_energies(&config.sweep_plan()?, &records)?;
            write_optimization(&dir, &config, &records, &energies)?;
        }
        Command::Figures { cfg } => {
            let (config, dir) = prepare(&cfg)?;
            let plan = config.sweep_plan()?;
            let mut distances = config.analysis.distances_km.clone();
            let base = config.link.total_length_km();
            if !distances.iter().any(|&d| (d - base).abs() < 1e-9) {
                distances.push(base);
            }
            let studies = analysis::distance_study(&plan, &distances, &config.grid(), &simulator_for)?;

            let (_, sweep, curve) = studies
                .iter()
                .find(|(d, _, _)| (d - base).abs() < 1e-9)
                .expect("configured distance is part of the study");
            let window = config.metrics.edi_windows.first().copied().unwrap_or(101);
            let (rows, shift) =
                analysis::blocklength_figure(&sweep.records, &sweep.energies, curve.lambda_star, config.metrics.epsilon, window)?;
            let mut w = csv::Writer::from_writer(create(&dir, "fig2.csv")?);
            for row in &rows {
                w.serialize(row)?;
            }
            w.flush()?;

            let mut w = csv::Writer::from_writer(create(&dir, "fig3.csv")?);
            w.write_record(["one_minus_lambda", "abs_rp"])?;
            for (l, r) in curve.lambda_grid.iter().zip(&curve.abs_rp) {
                w.write_record([format!("{}", 1.0 - l), format!("{r}")])?;
            }
            w.flush()?;

            let curves: Vec<(f64, analysis::CorrelationCurve)> =
                studies.iter().map(|(d, _, c)| (*d, c.clone())).collect();
            let points = analysis::lambda_vs_distance(&curves);
            let mut w = csv::Writer::from_writer(create(&dir, "fig4.csv")?);
            w.write_record(["distance_km", "one_minus_lambda_star"])?;
            for p in &points {
                w.write_record([format!("{}", p.distance_km), format!("{}", p.one_minus_lambda_star)])?;
            }
            w.flush()?;

            write_json(
                &dir,
                "figures.json",
                &json!({
                    "lambda_star": curve.lambda_star,
                    "rp_star": curve.rp_star,
                    "edi_window": window,
                    "edi_shift_db": shift,
                    "distances": points,
                    "one_minus_lambda_star_non_increasing": analysis::decay_rate_non_increasing(&points),
                }),
            )?;
        }
    }
    Ok(())
}

fn configure_workers(cli: &Cli) -> Result<()> {
    let from_config = match &cli.command {
        Command::Simulate { cfg, .. }
        | Command::Sweep { cfg }
        | Command::OptimizeLambda { cfg, .. }
        | Command::Figures { cfg } => load_config_with_overrides(&cfg.config, &cfg.overrides)?.run.workers,
        _ => 0,
    };
    let workers = cli.workers.unwrap_or(from_config);
    if workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_workers(&cli).and_then(|_| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", json!({ "error": err.kind(), "message": err.to_string() }));
            ExitCode::from(if err.is_validation() { 1 } else { 2 })
        }
    }
}
