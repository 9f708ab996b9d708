//! The tube of typical trajectories, checked on a live run.
//!
//! After a trajectory first leaves the subcritical set, the theory says
//! the exit should look like a droplet climbing the quasi-square ladder
//! 2x2 -> 2x3 -> 3x3 -> ... inside one small box, each rung within an
//! explicit time window of the exit. This example simulates until a
//! nine-site cluster appears, classifies the exit move (single-droplet
//! growth versus coalescence of separate clusters), anchors the
//! observation box, and walks the ladder with its timestamps.
//!
//! At desk scale the vapour is crowded and droplets often grow
//! amorphously, so many growth exits never show a clean ladder; the
//! example scans seeds for a trajectory where the subcritical rungs are
//! visible, and reports how many candidates it had to discard - itself a
//! measurement of how atypical the "typical" tube still is at beta=3.
//! The pass rates climb with beta, which is what the batch study
//! measures.
//!
//! Run with: `cargo run --release --example tube_analysis`

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use latgas::gibbs::{default_burn_in, sample_mur};
use latgas::harness::tube::detect_tube_with;
use latgas::harness::{find_exit, ExitMode};
use latgas::kmc::{run_until, RateTable, StopRule, TrajectoryLog};
use latgas::lattice::Configuration;
use latgas::params::{derive, lattice_side, DerivedParams, ModelParams};

/// One run stopped at its first exit, plus the state needed to resume it.
struct ExitRun {
    log: TrajectoryLog,
    config: Configuration,
    rng: ChaCha12Rng,
}

fn growth_exit_run(
    params: &ModelParams,
    derived: &DerivedParams,
    seed: u64,
) -> latgas::Result<Option<ExitRun>> {
    let side = lattice_side(params.theta, params.beta, derived.ell_c)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut config = sample_mur(params, side.l, &mut rng, default_burn_in(side.l), 0)?;
    let rates = RateTable::new(params.beta * params.u);
    let log = run_until(
        &mut config,
        &[StopRule::exit_from_r(derived), StopRule::EventCap(5_000_000)],
        &mut [],
        &rates,
        &mut rng,
    )?;
    match find_exit(&log, derived)? {
        Some(exit) if exit.mode == ExitMode::Growth => Ok(Some(ExitRun { log, config, rng })),
        _ => Ok(None),
    }
}

/// Simulates one full post-exit window onto the chosen run so the
/// supercritical rungs have their chance to be observed.
fn extend_past_exit(params: &ModelParams, run: &mut ExitRun) -> latgas::Result<()> {
    let window_super = ((2.0 * params.delta - params.u + 0.10) * params.beta).exp();
    let rates = RateTable::new(params.beta * params.u);
    let tail = run_until(
        &mut run.config,
        &[
            StopRule::Horizon(run.log.final_time() + 1.05 * window_super),
            StopRule::EventCap(5_000_000),
        ],
        &mut [],
        &rates,
        &mut run.rng,
    )?;
    run.log.extend_from(tail);
    Ok(())
}

fn main() -> latgas::Result<()> {
    let params = ModelParams::standard(1.0, 1.6, 3.0, 2.4);
    let derived = derive(&params)?;

    // Exit moves can also bridge two pre-existing clusters; those
    // coalescence exits are classified out, since the ladder picture
    // only speaks about single-droplet growth. Among growth exits, keep
    // the first whose subcritical rungs all fall inside the window, or
    // failing that the one showing the most rungs.
    let mut best: Option<(u64, usize, ExitRun)> = None;
    let mut discarded = 0u32;
    for seed in 1..=30 {
        let Some(run) = growth_exit_run(&params, &derived, seed)? else {
            discarded += 1;
            continue;
        };
        let tube = detect_tube_with(&run.log, &params, &derived, None, None)?;
        if tube.aborted.is_some() {
            discarded += 1;
            continue;
        }
        let rungs = tube.entries().iter().filter(|(_, _, t)| t.is_some()).count();
        if tube.evaluate(&params, Some(0.10)).sub_pass {
            println!("seed {seed}: growth exit with the subcritical ladder in window");
            best = Some((seed, rungs, run));
            break;
        }
        if best.as_ref().is_none_or(|(_, r, _)| rungs > *r) {
            best = Some((seed, rungs, run));
        }
        discarded += 1;
    }
    let (seed, _, mut run) = best.expect("thirty seeds yield at least one growth exit");
    println!("kept seed {seed} after discarding {discarded} less typical runs");
    extend_past_exit(&params, &mut run)?;
    let log = run.log;

    let exit = find_exit(&log, &derived)?.expect("growth run has an exit");
    println!(
        "\nexit at t={:.4e}: a move created a {}-site cluster from {} pre-move cluster(s)",
        exit.time, exit.volume, exit.clusters_joined
    );

    let tube = detect_tube_with(&log, &params, &derived, None, None)?;
    if let Some(reason) = &tube.aborted {
        println!("box could not be anchored: {reason}");
        return Ok(());
    }
    let rect = tube.box_rect.as_ref().expect("anchored");
    println!(
        "observation box ({}x{}) around the exit cluster: ({},{})..({},{})",
        rect.width(),
        rect.height(),
        rect.x0,
        rect.y0,
        rect.x1,
        rect.y1
    );

    println!("\nquasi-square ladder inside the box:");
    println!("  (sub rungs: last appearance before the exit; super rungs: first after)");
    for (dims, is_sub, time) in tube.entries() {
        println!(
            "  {}x{} {:<5} {}",
            dims.0,
            dims.1,
            if is_sub { "last" } else { "first" },
            time.map_or("never".into(), |t| format!("t={t:.4e}"))
        );
    }

    for delta in [0.05, 0.10] {
        let verdict = tube.evaluate(&params, Some(delta));
        println!(
            "\nwindow exponent delta={delta}: pre-exit window {:.3e}, post-exit {:.3e}",
            verdict.window_sub, verdict.window_super
        );
        println!(
            "  subcritical half: {}   full chain: {}{}",
            pass(verdict.sub_pass),
            pass(verdict.pass),
            verdict
                .fail_stage
                .as_ref()
                .map_or(String::new(), |s| format!("   (first miss: {s})"))
        );
    }
    Ok(())
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}
