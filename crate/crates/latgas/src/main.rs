//! Thin subcommand CLI over the `latgas` library.
//!
//! Exit codes: 0 on success, 2 on validation or I/O failure, 3 when a
//! study is truncation-dominated (more than half the replicas hit the
//! event cap).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use latgas::gibbs::{
    default_burn_in, default_thinning, enumerate_measure, MeasureMode, MuRSampler,
};
use latgas::harness::plan::DEFAULT_EVENT_CAP;
use latgas::harness::tube::detect_tube_with;
use latgas::harness::{
    cloud_histories, find_exit, read_study, run_study_with, CensusOptions, ExitMode,
    ExperimentPlan, StudyOutput,
};
use latgas::kmc::{read_log, run_until, write_log, RateTable, StopRule};
use latgas::lattice::snapshot_write;
use latgas::params::{derive, lattice_side, parse_params_str, ModelParams};
use latgas::toymodel::{
    absorption_prob, build_xi, mean_absorption_time, simulate_zeta, ChainMode,
};
use latgas::{Error, Result};

#[derive(Parser)]
#[command(
    name = "latgas",
    version,
    about = "Kawasaki lattice-gas nucleation toolkit",
    after_help = "Exit codes: 0 success, 2 validation error, 3 truncation-dominated study."
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Inspect model parameters.
    Params {
        #[command(subcommand)]
        cmd: ParamsCmd,
    },
    /// Run one trajectory from an equilibrated subcritical start.
    Simulate(SimulateArgs),
    /// Draw initial configurations from the restricted ensemble.
    Sample(SampleArgs),
    /// Exactly enumerate a small-torus measure as CSV on stdout.
    Enumerate(EnumerateArgs),
    /// The exactly solvable droplet-growth caricature.
    Toy {
        #[command(subcommand)]
        cmd: ToyCmd,
    },
    /// Batch nucleation studies.
    Nucleation {
        #[command(subcommand)]
        cmd: NucleationCmd,
    },
    /// Offline analysis of logged trajectories.
    Analyze {
        #[command(subcommand)]
        cmd: AnalyzeCmd,
    },
}

#[derive(Subcommand)]
enum ParamsCmd {
    /// Print the full derived-parameter table.
    Show {
        /// Parameter file (`key = value` lines; `#` comments).
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct SimulateArgs {
    /// Parameter file; must include `beta`.
    #[arg(long)]
    config: PathBuf,
    /// Master seed (initial draw and dynamics).
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Stop rule: `exitR` (leave the subcritical set), `horizon`
    /// (default horizon), `horizon=T`, or `cluster=V` (first cluster of
    /// V sites). Every run also stops at the event cap.
    #[arg(long, default_value = "exitR")]
    stop: String,
    /// Trajectory log destination (`.gz` suffix compresses).
    #[arg(long)]
    log: PathBuf,
    /// Safety cap on applied events.
    #[arg(long, default_value_t = DEFAULT_EVENT_CAP)]
    event_cap: u64,
}

#[derive(Args)]
struct SampleArgs {
    /// Parameter file; must include `beta`.
    #[arg(long)]
    config: PathBuf,
    /// Number of snapshots to draw.
    #[arg(long, default_value_t = 1)]
    count: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory for `sample_NNNN.txt` snapshot files.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EnumerateArgs {
    /// Torus side (the enumeration needs L*L <= 24 sites).
    #[arg(long = "L")]
    l: u32,
    /// Measure: `grand`, `restricted`, or `canonical=N`.
    #[arg(long)]
    mode: String,
    /// Parameter file supplying U, Delta, beta.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum ToyCmd {
    /// Exact absorption probabilities and mean absorption times per
    /// start state of the history-mode chain.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Override the inverse temperature from the parameter file.
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Monte Carlo runs of the aggregated arrival process; emits a CSV
    /// of steps-to-first-success on stdout.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Override the inverse temperature from the parameter file.
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 100)]
        reps: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Per-run step cap (reported as truncation when hit).
        #[arg(long, default_value_t = 1_000_000)]
        max_steps: u64,
    },
}

#[derive(Subcommand)]
enum NucleationCmd {
    /// Execute a study plan: per-replica records plus a scaling summary.
    Run {
        /// Plan file (parameter lines plus `betas`, `replicas`, ...).
        #[arg(long)]
        plan: PathBuf,
        /// Output directory (overrides the plan's `out`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-analyse a stored study directory.
    Analyze {
        /// Directory containing `records.csv` and `summary.json`.
        #[arg(long)]
        records: PathBuf,
        /// Re-judge every stored tube report at this window exponent.
        #[arg(long)]
        delta: Option<f64>,
    },
}

#[derive(Subcommand)]
enum AnalyzeCmd {
    /// Tube-of-typical-trajectories report for one logged trajectory.
    Tube {
        /// Trajectory log (`.gz` detected by suffix).
        #[arg(long)]
        log: PathBuf,
        /// Parameter file matching the run.
        #[arg(long)]
        config: PathBuf,
        /// Window exponent for the verdict (default: the parameter
        /// file's `delta`).
        #[arg(long)]
        delta: Option<f64>,
        /// Largest supercritical square side to track.
        #[arg(long)]
        target_side: Option<u32>,
        /// Anchor the observation box at the first cluster of this
        /// volume instead of the subcritical-exit trigger.
        #[arg(long)]
        trigger_volume: Option<u32>,
    },
    /// Cloud decomposition and per-attempt census for one trajectory.
    Clouds {
        /// Trajectory log (`.gz` detected by suffix).
        #[arg(long)]
        log: PathBuf,
        /// Parameter file matching the run.
        #[arg(long)]
        config: PathBuf,
        /// Spacing of the analysis epochs (default exp((Delta-alpha)beta)).
        #[arg(long)]
        epoch_period: Option<f64>,
        /// Escape radius for the freeness classification.
        #[arg(long)]
        freeness_window: Option<u32>,
        /// Square side that counts as success (default the critical side).
        #[arg(long)]
        success_side: Option<u32>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Cmd::Params {
            cmd: ParamsCmd::Show { config },
        } => params_show(&config),
        Cmd::Simulate(args) => simulate(&args),
        Cmd::Sample(args) => sample(&args),
        Cmd::Enumerate(args) => enumerate(&args),
        Cmd::Toy { cmd } => match cmd {
            ToyCmd::Solve { config, beta } => toy_solve(&config, beta),
            ToyCmd::Simulate {
                config,
                beta,
                reps,
                seed,
                max_steps,
            } => toy_simulate(&config, beta, reps, seed, max_steps),
        },
        Cmd::Nucleation { cmd } => match cmd {
            NucleationCmd::Run { plan, out } => nucleation_run(&plan, out),
            NucleationCmd::Analyze { records, delta } => nucleation_analyze(&records, delta),
        },
        Cmd::Analyze { cmd } => match cmd {
            AnalyzeCmd::Tube {
                log,
                config,
                delta,
                target_side,
                trigger_volume,
            } => analyze_tube(&log, &config, delta, target_side, trigger_volume),
            AnalyzeCmd::Clouds {
                log,
                config,
                epoch_period,
                freeness_window,
                success_side,
            } => analyze_clouds(&log, &config, epoch_period, freeness_window, success_side),
        },
    }
}

fn load_params(path: &Path) -> Result<ModelParams> {
    let params = parse_params_str(&fs::read_to_string(path)?)?;
    params.validate()?;
    Ok(params)
}

fn params_show(config: &Path) -> Result<u8> {
    let params = load_params(config)?;
    let derived = derive(&params)?;
    print!("{}", derived.table());
    let side = lattice_side(params.theta, params.beta, derived.ell_c)?;
    println!("L           = {}", side.l);
    println!("theta_eff   = {}", side.theta_eff);
    Ok(0)
}

fn simulate(args: &SimulateArgs) -> Result<u8> {
    let params = load_params(&args.config)?;
    let derived = derive(&params)?;
    let side = lattice_side(params.theta, params.beta, derived.ell_c)?;
    let default_horizon = ((derived.crit_energy - side.theta_eff + 3.0 * params.delta_small)
        * params.beta)
        .exp();

    let mut rules = vec![StopRule::EventCap(args.event_cap)];
    match args.stop.as_str() {
        "exitR" => {
            rules.push(StopRule::exit_from_r(&derived));
            rules.push(StopRule::Horizon(default_horizon));
        }
        "horizon" => rules.push(StopRule::Horizon(default_horizon)),
        other => {
            if let Some(t) = other.strip_prefix("horizon=") {
                let t: f64 = t
                    .parse()
                    .map_err(|_| Error::Param(format!("bad horizon in `--stop {other}`")))?;
                rules.push(StopRule::Horizon(t));
            } else if let Some(v) = other.strip_prefix("cluster=") {
                let v: u32 = v
                    .parse()
                    .map_err(|_| Error::Param(format!("bad volume in `--stop {other}`")))?;
                rules.push(StopRule::ClusterVolume(v));
                rules.push(StopRule::Horizon(default_horizon));
            } else {
                return Err(Error::Param(format!(
                    "unknown stop rule `{other}` (exitR | horizon | horizon=T | cluster=V)"
                )));
            }
        }
    }

    let mut rng = ChaCha12Rng::seed_from_u64(args.seed);
    let mut config = latgas::gibbs::sample_mur(
        &params,
        side.l,
        &mut rng,
        default_burn_in(side.l),
        0,
    )?;
    let rates = RateTable::new(params.beta * params.u);
    let log = run_until(&mut config, &rules, &mut [], &rates, &mut rng)?;

    println!(
        "L={} N={} events={} t_final={:.6e} stop={:?}",
        side.l,
        log.initial.particle_count(),
        log.events.len(),
        log.final_time(),
        log.stop
    );
    match find_exit(&log, &derived) {
        Ok(Some(exit)) => println!(
            "exit: t={:.6e} mode={} volume={} clusters_joined={}",
            exit.time, exit.mode, exit.volume, exit.clusters_joined
        ),
        Ok(None) => println!("exit: none (stayed subcritical)"),
        Err(_) => {}
    }
    write_log(&log, &args.log)?;
    println!("log written to {}", args.log.display());
    Ok(0)
}

fn sample(args: &SampleArgs) -> Result<u8> {
    let params = load_params(&args.config)?;
    let derived = derive(&params)?;
    let side = lattice_side(params.theta, params.beta, derived.ell_c)?;
    fs::create_dir_all(&args.out)?;

    let mut rng = ChaCha12Rng::seed_from_u64(args.seed);
    let mut sampler = MuRSampler::new(&params, side.l)?;
    sampler.run(default_burn_in(side.l), &mut rng);
    let mut density_sum = 0.0;
    for k in 0..args.count {
        let config = sampler.draw(default_thinning(side.l), &mut rng);
        density_sum += f64::from(config.particle_count()) / f64::from(side.l * side.l);
        let path = args.out.join(format!("sample_{k:04}.txt"));
        fs::write(path, snapshot_write(&config))?;
    }
    println!(
        "wrote {} snapshots to {} (L={}, mean density {:.6}, acceptance {:.4})",
        args.count,
        args.out.display(),
        side.l,
        density_sum / f64::from(args.count.max(1)),
        sampler.acceptance_rate()
    );
    Ok(0)
}

fn enumerate(args: &EnumerateArgs) -> Result<u8> {
    let params = load_params(&args.config)?;
    let mode: MeasureMode = args.mode.parse()?;
    let measure = enumerate_measure(args.l, mode, &params)?;
    let mut out = String::from("code,weight\n");
    for (mask, w) in measure.weights.iter().enumerate() {
        out.push_str(&format!("{mask},{w}\n"));
    }
    print!("{out}");
    Ok(0)
}

fn toy_params(config: &Path, beta: Option<f64>) -> Result<ModelParams> {
    let mut params = load_params(config)?;
    if let Some(b) = beta {
        params.beta = b;
        params.validate()?;
    }
    Ok(params)
}

fn toy_solve(config: &Path, beta: Option<f64>) -> Result<u8> {
    let params = toy_params(config, beta)?;
    let spec = build_xi(&params, ChainMode::History)?;
    println!("beta = {}", params.beta);
    println!("{:<8} {:<24} {}", "state", "absorption_prob", "mean_steps");
    for &state in &spec.states {
        let h = absorption_prob(&spec, state)?;
        let t = mean_absorption_time(&spec, state)?;
        println!("({},{})   {:<24e} {:e}", state.0, state.1, h, t);
    }
    Ok(0)
}

fn toy_simulate(
    config: &Path,
    beta: Option<f64>,
    reps: u32,
    seed: u64,
    max_steps: u64,
) -> Result<u8> {
    let params = toy_params(config, beta)?;
    println!("rep,steps,truncated,arrivals,failures");
    for rep in 0..reps {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(u64::from(rep));
        let report = simulate_zeta(&params, &mut rng, max_steps)?;
        println!(
            "{},{},{},{},{}",
            rep, report.steps, report.truncated, report.arrivals, report.failures
        );
    }
    Ok(0)
}

fn nucleation_run(plan_path: &Path, out: Option<PathBuf>) -> Result<u8> {
    let mut plan = ExperimentPlan::from_file(plan_path)?;
    if let Some(dir) = out {
        plan.out_dir = Some(dir);
    }
    let Some(out_dir) = plan.out_dir.clone() else {
        return Err(Error::Param(
            "no output directory: set `out = DIR` in the plan or pass --out".into(),
        ));
    };
    let output = run_study_with(&plan, |r| {
        eprintln!(
            "beta={} replica={} mode={} tau={} events={}",
            r.beta,
            r.replica,
            r.exit_mode,
            r.tau_exit.map_or("-".into(), |t| format!("{t:.6e}")),
            r.events
        );
    })?;
    print_study(&output, None)?;
    println!("study written to {}", out_dir.display());
    Ok(if output.summary.truncation_dominated {
        3
    } else {
        0
    })
}

fn nucleation_analyze(records_dir: &Path, delta: Option<f64>) -> Result<u8> {
    let output = read_study(records_dir)?;
    print_study(&output, delta)?;
    Ok(if output.summary.truncation_dominated {
        3
    } else {
        0
    })
}

/// Prints the per-beta table and the scaling fit; with `delta` set, every
/// stored tube report is re-judged at that window exponent.
fn print_study(output: &StudyOutput, delta: Option<f64>) -> Result<()> {
    let summary = &output.summary;
    let base = parse_params_str(&summary.params)?;
    println!(
        "study: {} betas x {} replicas, seed {}",
        summary.betas.len(),
        summary.replicas,
        summary.seed
    );
    for per_beta in &summary.report.per_beta {
        println!(
            "beta={} L={} theta_eff={:.4}: exited {}/{} (growth {}, coalescence {}{}), truncated {}",
            per_beta.beta,
            per_beta.side,
            per_beta.theta_eff,
            per_beta.exited,
            per_beta.replicas,
            per_beta.growth,
            per_beta.coalescence,
            per_beta
                .coalescence_fraction
                .map_or(String::new(), |f| format!(", fraction {f:.3}")),
            per_beta.truncated,
        );
        if let Some(median) = per_beta.tau_median {
            println!(
                "  tau quartiles: {:.4e} / {:.4e} / {:.4e}",
                per_beta.tau_q25.unwrap_or(f64::NAN),
                median,
                per_beta.tau_q75.unwrap_or(f64::NAN)
            );
        }
        for rates in &per_beta.tube {
            println!(
                "  tube delta={}: full {} sub {} (over {} growth exits)",
                rates.delta,
                rates
                    .full_pass_rate
                    .map_or("-".into(), |r| format!("{r:.3}")),
                rates
                    .sub_pass_rate
                    .map_or("-".into(), |r| format!("{r:.3}")),
                rates.growth_exits
            );
        }
        if let Some(d) = delta {
            let mut params = base.clone();
            params.beta = per_beta.beta;
            let growth: Vec<_> = output
                .records
                .iter()
                .filter(|r| r.beta == per_beta.beta && r.exit_mode == ExitMode::Growth)
                .collect();
            let mut full = 0u32;
            let mut sub = 0u32;
            for record in &growth {
                if let Some(tube) = &record.tube {
                    let verdict = tube.evaluate(&params, Some(d));
                    full += u32::from(verdict.pass);
                    sub += u32::from(verdict.sub_pass);
                }
            }
            if growth.is_empty() {
                println!("  tube delta={d} (re-judged): no growth exits");
            } else {
                println!(
                    "  tube delta={d} (re-judged): full {:.3} sub {:.3} (over {} growth exits)",
                    f64::from(full) / growth.len() as f64,
                    f64::from(sub) / growth.len() as f64,
                    growth.len()
                );
            }
        }
    }
    match &summary.report.fit {
        Some(fit) => println!(
            "fit: ln(median tau) ~ {:.4} * beta + {:.4} over {} betas (target slope {:.4})",
            fit.slope, fit.intercept, fit.points, fit.target_slope
        ),
        None => println!("fit: omitted (needs >= 2 betas with >= 20 non-truncated records)"),
    }
    println!("truncation dominated: {}", summary.truncation_dominated);
    Ok(())
}

fn analyze_tube(
    log_path: &Path,
    config: &Path,
    delta: Option<f64>,
    target_side: Option<u32>,
    trigger_volume: Option<u32>,
) -> Result<u8> {
    let params = load_params(config)?;
    let derived = derive(&params)?;
    let log = read_log(log_path)?;
    let exit = find_exit(&log, &derived)?.ok_or_else(|| {
        Error::Analysis("trajectory never leaves the subcritical set".into())
    })?;
    println!(
        "exit: t={:.6e} mode={} volume={} clusters_joined={}",
        exit.time, exit.mode, exit.volume, exit.clusters_joined
    );
    let tube = detect_tube_with(&log, &params, &derived, target_side, trigger_volume)?;
    if let Some(reason) = &tube.aborted {
        println!("analysis aborted: {reason}");
        return Ok(0);
    }
    if let (Some(rect), Some(center)) = (&tube.box_rect, &tube.center) {
        println!(
            "box: ({},{})..({},{}) centered ({},{})",
            rect.x0, rect.y0, rect.x1, rect.y1, center.x, center.y
        );
    }
    for (dims, is_sub, time) in tube.entries() {
        println!(
            "  {}x{} {:<5} {}",
            dims.0,
            dims.1,
            if is_sub { "last" } else { "first" },
            time.map_or("never".into(), |t| format!("{t:.6e}"))
        );
    }
    let verdict = tube.evaluate(&params, delta);
    let d = delta.unwrap_or(params.delta_small);
    println!(
        "delta={}: {} (subcritical half {}){}",
        d,
        if verdict.pass { "PASS" } else { "FAIL" },
        if verdict.sub_pass { "PASS" } else { "FAIL" },
        verdict
            .fail_stage
            .as_ref()
            .map_or(String::new(), |s| format!(" - {s}")),
    );
    println!(
        "windows: pre-exit {:.4e}, post-exit {:.4e}",
        verdict.window_sub, verdict.window_super
    );
    Ok(0)
}

fn analyze_clouds(
    log_path: &Path,
    config: &Path,
    epoch_period: Option<f64>,
    freeness_window: Option<u32>,
    success_side: Option<u32>,
) -> Result<u8> {
    let params = load_params(config)?;
    let derived = derive(&params)?;
    let log = read_log(log_path)?;
    let opts = CensusOptions {
        epoch_period,
        freeness_window,
        success_side,
    };
    let census = cloud_histories(&log, &params, &derived, &opts)?;
    println!(
        "epochs: {} ({} skipped), period {:.4e}, sleep window {:.4e}, success side {}",
        census.epochs.len(),
        census.skipped_epochs(),
        census.epoch_period,
        census.sleep_window,
        census.success_side
    );
    for epoch in &census.epochs {
        match &epoch.skipped {
            Some(reason) => println!(
                "  t={:.6e} radius={:.3} skipped: {reason}",
                epoch.time, epoch.radius
            ),
            None => println!(
                "  t={:.6e} radius={:.3} clouds={}",
                epoch.time,
                epoch.radius,
                epoch.clouds.len()
            ),
        }
    }
    println!("attempts: {}", census.histories.len());
    for h in &census.histories {
        println!(
            "  id={} born={:.6e} ended={} outcome={} largest={}",
            h.id,
            h.born,
            h.ended.map_or("-".into(), |t| format!("{t:.6e}")),
            h.outcome,
            h.timeline
                .iter()
                .filter_map(|e| e.largest_square)
                .max()
                .map_or("none".into(), |d| format!("{}x{}", d.0, d.1)),
        );
    }
    Ok(0)
}
