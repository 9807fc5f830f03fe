use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pstchain::config::{parse_config, Mode, RunConfig, ScanKind, StateDescriptor};
use pstchain::dynamics::{evolve_series, ChainPropagator, Observer, SparseState, TimeGrid, TimeSeries};
use pstchain::error::{Error, Result};
use pstchain::injection::{run_bell_delay, run_delayed_pair, run_type2_delay, InjectionMethod};
use pstchain::metrics::{eof_sites, fidelity_basis, PeakReport};
use pstchain::output::{emit_fit_csv, emit_scan_csv, emit_series_csv, emit_svg, format_float};
use pstchain::{fit_decay, mirror_mask, scan_chain_length, scan_gamma_epsilon, BasisMask};

#[derive(Parser)]
#[command(name = "pstchain", version, about = "Spin-chain state-transfer simulator")]
struct Cli {
    /// Number of worker threads (results are independent of this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory for files named in the config.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Override the master seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve an initial state and record fidelity / entanglement series.
    Evolve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a delayed / imperfect injection protocol.
    Inject {
        #[arg(long)]
        config: PathBuf,
    },
    /// Scan perturbation grids or chain lengths.
    Scan {
        #[arg(long)]
        config: PathBuf,
    },
    /// Scan chain lengths and fit the decay law.
    Fit {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the built-in invariant and oracle checks.
    Selftest,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let (mode, config_path) = match &cli.command {
        Command::Evolve { config } => (Mode::Evolve, Some(config)),
        Command::Inject { config } => (Mode::Inject, Some(config)),
        Command::Scan { config } => (Mode::Scan, Some(config)),
        Command::Fit { config } => (Mode::Fit, Some(config)),
        Command::Selftest => (Mode::Selftest, None),
    };

    if mode == Mode::Selftest {
        let report = pstchain::selftest::selftest()?;
        for (name, result) in &report.entries {
            match result {
                Ok(()) => println!("PASS  {name}"),
                Err(msg) => println!("FAIL  {name}: {msg}"),
            }
        }
        return if report.passed() {
            println!("selftest: all checks passed");
            Ok(ExitCode::SUCCESS)
        } else {
            Err(Error::numeric("selftest failed"))
        };
    }

    let config_path = config_path.expect("non-selftest modes take --config");
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| Error::io(config_path.display().to_string(), e))?;
    let mut config = parse_config(&text, Some(mode))?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }

    match mode {
        Mode::Evolve => run_evolve(&config, &cli.out),
        Mode::Inject => run_inject(&config, &cli.out),
        Mode::Scan => run_scan(&config, &cli.out),
        Mode::Fit => run_fit(&config, &cli.out),
        Mode::Selftest => unreachable!(),
    }?;
    Ok(ExitCode::SUCCESS)
}

fn out_path(out_dir: &Path, configured: &Option<String>, default_name: &str) -> PathBuf {
    match configured {
        Some(p) => {
            let p = PathBuf::from(p);
            if p.is_absolute() {
                p
            } else {
                out_dir.join(p)
            }
        }
        None => out_dir.join(default_name),
    }
}

fn run_evolve(config: &RunConfig, out_dir: &Path) -> Result<()> {
    let spec = config.chain_spec()?;
    let (state, sectors) = config.initial_state()?;
    let needs_rng = spec.eta() > 0.0
        || matches!(spec.site_energies(), Some((e, None)) if e > 0.0);
    let prop = if needs_rng {
        let seq = pstchain::SeedSequence::new(config.seed);
        let mut rng = seq.stream(0);
        ChainPropagator::prepare(&spec, &sectors, Some(&mut rng))?
    } else {
        ChainPropagator::prepare(&spec, &sectors, None)?
    };
    let grid = TimeGrid::from_span(config.t_max, config.steps_per_period)?;

    let n = spec.n_sites;
    let mut observers: Vec<Observer> = Vec::new();
    match config.state.as_ref().unwrap() {
        StateDescriptor::Ket(ket) => {
            let (mask, _) = BasisMask::parse_ket(ket)?;
            let twin = mirror_mask(mask, n);
            observers.push(Observer::new("f_input", move |s: &SparseState| {
                fidelity_basis(s, mask)
            }));
            observers.push(Observer::new("f_twin", move |s: &SparseState| {
                fidelity_basis(s, twin)
            }));
        }
        StateDescriptor::Bell12 => {
            observers.push(Observer::new("eof_in", move |s: &SparseState| {
                eof_sites(s, 1, 2).unwrap_or(f64::NAN)
            }));
            observers.push(Observer::new("eof_twin", move |s: &SparseState| {
                eof_sites(s, n - 1, n).unwrap_or(f64::NAN)
            }));
        }
        StateDescriptor::PlusEnds => {
            observers.push(Observer::new("eof_ends", move |s: &SparseState| {
                eof_sites(s, 1, n).unwrap_or(f64::NAN)
            }));
        }
    }
    observers.push(Observer::new("norm", |s: &SparseState| s.norm_sqr()));

    let series = evolve_series(&state, &prop, &grid, &observers)?;
    let csv = out_path(out_dir, &config.csv, "evolve.csv");
    emit_series_csv(&series, &csv, config)?;
    println!("wrote {}", csv.display());
    maybe_svg(config, out_dir, &series)?;
    Ok(())
}

fn peak_series(peak: &PeakReport) -> TimeSeries {
    TimeSeries {
        tau: vec![peak.tau_star],
        columns: vec![
            ("peak_value".into(), vec![peak.value]),
            ("window_lo".into(), vec![peak.window.0]),
            ("window_hi".into(), vec![peak.window.1]),
            ("at_edge".into(), vec![peak.at_edge as u8 as f64]),
        ],
    }
}

fn run_inject(config: &RunConfig, out_dir: &Path) -> Result<()> {
    let csv = out_path(out_dir, &config.csv, "inject.csv");
    match config.state {
        Some(StateDescriptor::PlusEnds) => {
            let spec = config.chain_spec()?;
            let method = protocol_method(config);
            let peak = run_type2_delay(&spec, config.delay, method)?;
            println!(
                "EoF(1,N) peak {} at tau = {}",
                format_float(peak.value),
                format_float(peak.tau_star)
            );
            emit_series_csv(&peak_series(&peak), &csv, config)?;
        }
        Some(StateDescriptor::Bell12) => {
            let spec = config.chain_spec()?;
            let method = protocol_method(config);
            let peak = run_bell_delay(&spec, config.delay, method)?;
            println!(
                "EoF(N-1,N) peak {} at tau = {}",
                format_float(peak.value),
                format_float(peak.tau_star)
            );
            emit_series_csv(&peak_series(&peak), &csv, config)?;
        }
        _ => {
            let protocol = config.protocol()?;
            let grid = TimeGrid::from_span(config.t_max, config.steps_per_period)?;
            let series = run_delayed_pair(&protocol, &grid)?;
            emit_series_csv(&series, &csv, config)?;
            maybe_svg(config, out_dir, &series)?;
        }
    }
    println!("wrote {}", csv.display());
    Ok(())
}

fn protocol_method(config: &RunConfig) -> InjectionMethod {
    match config.method {
        pstchain::config::MethodKind::Rabi => InjectionMethod::RabiPulse {
            theta: std::f64::consts::PI,
            phi: 0.0,
        },
        pstchain::config::MethodKind::Swap => InjectionMethod::SwapRegister {
            reflection: config.reflection,
        },
    }
}

fn run_scan(config: &RunConfig, out_dir: &Path) -> Result<()> {
    let scan = match config.scan {
        ScanKind::GammaEpsilon => scan_gamma_epsilon(
            &config.gamma_values,
            &config.epsilon_values,
            config.n_realizations,
            config.seed,
        )?,
        ScanKind::ChainLength => scan_chain_length(
            config.family,
            config.perturbation,
            &config.values,
            (config.n_min, config.n_max),
            config.n_realizations,
            config.seed,
        )?,
    };
    let csv = out_path(out_dir, &config.csv, "scan.csv");
    emit_scan_csv(&scan, &csv, config)?;
    println!("wrote {} ({} points)", csv.display(), scan.rows.len());
    Ok(())
}

fn run_fit(config: &RunConfig, out_dir: &Path) -> Result<()> {
    let scan = scan_chain_length(
        config.family,
        config.perturbation,
        &config.values,
        (config.n_min, config.n_max),
        config.n_realizations,
        config.seed,
    )?;
    let points: Vec<(usize, f64, f64)> = scan
        .rows
        .iter()
        .map(|row| (row.coords[0] as usize, row.coords[1], row.mean))
        .collect();
    let fit = fit_decay(&points, 0.05)?;

    let scan_csv = out_path(out_dir, &config.csv, "fit_scan.csv");
    emit_scan_csv(&scan, &scan_csv, config)?;
    let fit_csv = scan_csv.with_file_name(format!(
        "{}_fit.csv",
        scan_csv.file_stem().and_then(|s| s.to_str()).unwrap_or("fit")
    ));
    emit_fit_csv(&fit, &fit_csv, config)?;
    println!(
        "p0 = {} (residual rms {}, {} points used, {} excluded)",
        format_float(fit.p0),
        format_float(fit.residual_rms),
        fit.points_used,
        fit.points_excluded
    );
    println!("wrote {} and {}", scan_csv.display(), fit_csv.display());
    Ok(())
}

fn maybe_svg(config: &RunConfig, out_dir: &Path, series: &TimeSeries) -> Result<()> {
    if let Some(svg) = &config.svg {
        let path = out_path(out_dir, &Some(svg.clone()), "plot.svg");
        let columns: Vec<String> = series
            .columns
            .iter()
            .map(|(n, _)| n.clone())
            .filter(|n| n != "norm")
            .collect();
        emit_svg(series, &path, &columns)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
