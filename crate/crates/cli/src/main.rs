//! `ltem-ntn`: reproduces the reference tables, emits retransmission figure
//! data and drives the protocol, sync, orbit and mobility simulators.
//!
//! Every command writes CSV files under `--out` and prints a JSON run report
//! on stdout. Exit status is 1 when a reference-value check fails and 2 on
//! input or configuration errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use ltem_ntn::mobility::{select_cell, switch_schedule, AssistanceInfo, CellCandidate, CellId};
use ltem_ntn::orbit::{propagate_pass, EarthModel};
use ltem_ntn::protocol_timers::{run_random_access, run_rlc_reordering, run_sr_sequence, TimerConfig};
use ltem_ntn::retx::{monte_carlo_retx, RetxPolicy};
use ltem_ntn::sync::{ta_maintenance_sim, TaMaintenanceConfig, TaMode};
use ltem_ntn::tables::{self, CheckRow, FigureRow, SnrGrid, Usage, DEFAULT_GRID};
use ltem_ntn::{csv_out, linkbudget, Scenario};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Parser, Debug)]
#[command(name = "ltem-ntn", version, about = "LTE-M over GEO/LEO satellites: tables, figures and simulations")]
struct Cli {
    /// Scenario JSON file; the built-in default scenario when omitted.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Output directory for CSV files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Master seed for Monte Carlo runs.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Monte Carlo trials per point; analytic curves only when omitted.
    #[arg(long, global = true)]
    trials: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Delay, distance and Doppler cells for the 600 km, 1200 km and GEO orbits.
    Table1,
    /// Budget SNRs and the FSPL helper check.
    Table2,
    /// Uplink SNR against sub-PRB allocation bandwidth.
    Subprb,
    /// Residual BLER and resource usage curves for the retransmission policies.
    Figures {
        /// SNR grid as start:stop:step in dB.
        #[arg(long, default_value = "-15:10:0.5", allow_hyphen_values = true)]
        grid: SnrGrid,
    },
    /// Run one simulator and write its trace.
    Simulate {
        which: Which,
        /// Orbit used by `pass`.
        #[arg(long, default_value = "leo600")]
        orbit: String,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Which {
    Ra,
    Sr,
    Reordering,
    Ta,
    Pass,
    Switch,
}

impl Which {
    fn name(self) -> &'static str {
        match self {
            Which::Ra => "ra",
            Which::Sr => "sr",
            Which::Reordering => "reordering",
            Which::Ta => "ta",
            Which::Pass => "pass",
            Which::Switch => "switch",
        }
    }
}

#[derive(Serialize)]
struct OutputFile {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct FailedCheck {
    item: String,
    computed: f64,
    reference: f64,
    tolerance: String,
}

#[derive(Serialize)]
struct RunReport {
    command: String,
    scenario: String,
    outputs: Vec<OutputFile>,
    duration_s: f64,
    checks: usize,
    failed_checks: Vec<FailedCheck>,
    details: Value,
}

type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

/// Accumulates written files and check rows for the report.
struct Run<'a> {
    out: &'a Path,
    scenario: &'a str,
    outputs: Vec<OutputFile>,
    checks: Vec<CheckRow>,
}

impl<'a> Run<'a> {
    fn write(&mut self, stem: &str, f: impl FnOnce(&mut Vec<u8>) -> ltem_ntn::Result<()>) -> CliResult<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        let path = self.out.join(format!("{stem}_{}.csv", self.scenario));
        fs::write(&path, &buf)?;
        self.outputs.push(OutputFile {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(&buf)),
        });
        Ok(())
    }

    fn checks(&mut self, stem: &str, rows: Vec<CheckRow>) -> CliResult<()> {
        self.write(stem, |b| csv_out::write_checks(b, &rows))?;
        self.checks.extend(rows);
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            let failed = !report.failed_checks.is_empty();
            let mut stdout = std::io::stdout().lock();
            // A closed stdout must not turn a passing run into a failure.
            let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            if failed {
                for f in &report.failed_checks {
                    eprintln!(
                        "check failed: {} = {} (reference {} {})",
                        f.item, f.computed, f.reference, f.tolerance
                    );
                }
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> CliResult<RunReport> {
    let started = Instant::now();
    let scenario = match &cli.scenario {
        Some(p) => Scenario::load(p).map_err(|e| format!("{}: {e}", p.display()))?,
        None => Scenario::default(),
    };
    fs::create_dir_all(&cli.out)?;
    let mut run = Run {
        out: &cli.out,
        scenario: &scenario.name,
        outputs: Vec::new(),
        checks: Vec::new(),
    };
    let (command, details) = match &cli.command {
        Command::Table1 => {
            run.checks("table1", tables::table1(&scenario)?)?;
            ("table1".to_string(), Value::Null)
        }
        Command::Table2 => {
            print_breakdown(&scenario)?;
            run.checks("table2", tables::table2(&scenario)?)?;
            ("table2".to_string(), Value::Null)
        }
        Command::Subprb => {
            run.checks("subprb", tables::subprb(&scenario)?)?;
            for (name, points) in [("geo_ul", &tables::GEO_UL_SWEEP[..]), ("leo_ul", &tables::LEO_UL_SWEEP[..])] {
                let bws: Vec<f64> = points.iter().map(|p| p.0).collect();
                let sweep = linkbudget::sub_prb_sweep(scenario.budget(name)?, &bws)?;
                run.write(&format!("subprb_sweep_{name}"), |b| csv_out::write_sweep(b, &sweep))?;
            }
            ("subprb".to_string(), Value::Null)
        }
        Command::Figures { grid } => ("figures".to_string(), figures(&scenario, grid, cli, &mut run)?),
        Command::Simulate { which, orbit } => (
            format!("simulate {}", which.name()),
            simulate(&scenario, *which, orbit, &mut run)?,
        ),
    };
    let failed_checks = run
        .checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| FailedCheck {
            item: c.item.clone(),
            computed: c.computed,
            reference: c.reference,
            tolerance: c.tolerance.to_string(),
        })
        .collect();
    Ok(RunReport {
        command,
        scenario: scenario.name.clone(),
        outputs: run.outputs,
        duration_s: started.elapsed().as_secs_f64(),
        checks: run.checks.len(),
        failed_checks,
        details,
    })
}

/// Per-term SNR breakdown for every budget, on stderr.
fn print_breakdown(scenario: &Scenario) -> CliResult<()> {
    for (name, input) in &scenario.budgets {
        let result = linkbudget::snr(input)?;
        eprintln!("{name}");
        for (term, value) in &result.breakdown {
            eprintln!("  {:<14} {value:>10.3} dB", term.name());
        }
        eprintln!("  {:<14} {:>10.3} dB", "snr", result.snr_db);
    }
    Ok(())
}

fn figures(scenario: &Scenario, grid: &SnrGrid, cli: &Cli, run: &mut Run<'_>) -> CliResult<Value> {
    let points = grid.points()?;
    let f = tables::figures(scenario, &points)?;
    run.write("figures_fig1", |b| csv_out::write_figure(b, &f.fig1))?;
    run.write("figures_fig2", |b| csv_out::write_figure(b, &f.fig2))?;
    run.write("figures_fig3", |b| csv_out::write_figure(b, &f.fig3))?;
    let nonconverged = f
        .fig1
        .iter()
        .chain(&f.fig2)
        .chain(&f.fig3)
        .filter(|r| r.expected_subframes == Usage::NonConverged)
        .count();

    if let Some(trials) = cli.trials {
        let curve = scenario.curve()?;
        let mut rows = Vec::new();
        for r in &f.fig2 {
            let policy = match r.policy.as_str() {
                "harq" => RetxPolicy::HarqCombining { max_transmissions: r.n },
                _ => RetxPolicy::BlindPlusArq { n_blind: 4, max_rlc_rounds: 1 },
            };
            let est = monte_carlo_retx(&policy, &curve, r.snr_db, trials, cli.seed)?;
            rows.push(FigureRow {
                snr_db: r.snr_db,
                policy: r.policy.clone(),
                n: r.n,
                residual_bler: est.residual_bler,
                expected_subframes: Usage::Subframes(est.mean_subframes),
            });
        }
        run.write("figures_fig2_mc", |b| csv_out::write_figure(b, &rows))?;
    }
    let curve = scenario.curve()?;
    Ok(json!({
        "grid_points": points.len(),
        "curve": { "snr50_db": curve.snr50_db, "slope_per_db": curve.slope_per_db },
        "nonconverged_rows": nonconverged,
        "default_grid": format!("{}:{}:{}", DEFAULT_GRID.start, DEFAULT_GRID.stop, DEFAULT_GRID.step),
    }))
}

fn simulate(scenario: &Scenario, which: Which, orbit_name: &str, run: &mut Run<'_>) -> CliResult<Value> {
    match which {
        Which::Ra => {
            let t = scenario.timers()?;
            let rtt = scenario.timers_rtt_ms()?;
            let legacy = TimerConfig { rtt_offset_enabled: false, ..t.config };
            let offset = TimerConfig { rtt_offset_enabled: true, ..t.config };
            let a = run_random_access(&legacy, rtt, t.preamble_attempts_max)?;
            let b = run_random_access(&offset, rtt, t.preamble_attempts_max)?;
            run.write("simulate_ra_legacy", |w| csv_out::write_event_trace(w, &a))?;
            run.write("simulate_ra_offset", |w| csv_out::write_event_trace(w, &b))?;
            Ok(json!({ "rtt_ms": rtt, "legacy_outcome": a.outcome, "offset_outcome": b.outcome }))
        }
        Which::Sr => {
            let t = scenario.timers()?;
            let rtt = scenario.timers_rtt_ms()?;
            let r = run_sr_sequence(&t.config, rtt, t.grant_issue_delay_ms)?;
            run.write("simulate_sr", |w| csv_out::write_event_trace(w, &r.trace))?;
            Ok(json!({
                "rtt_ms": rtt,
                "sr_prohibit_ms": t.config.sr_prohibit_ms(),
                "sr_transmissions": r.sr_transmissions,
                "duplicate_srs": r.duplicate_srs,
            }))
        }
        Which::Reordering => {
            let t = scenario.timers()?;
            let rtt = scenario.timers_rtt_ms()?;
            let r = run_rlc_reordering(&t.config, rtt, &t.loss_pattern, t.n_pdus)?;
            run.write("simulate_reordering", |w| csv_out::write_event_trace(w, &r.trace))?;
            Ok(json!({
                "rtt_ms": rtt,
                "t_reordering_ms": t.config.t_reordering_ms,
                "spurious_status_reports": r.spurious_status_reports,
                "recovered": r.recovered,
                "lost": r.lost,
            }))
        }
        Which::Ta => {
            let s = scenario.sync()?;
            let mut counts = serde_json::Map::new();
            for (label, mode) in [("network", TaMode::NetworkCommands), ("autonomous", TaMode::Autonomous)] {
                let cfg = TaMaintenanceConfig::new(s.drift_us_per_s, s.error_budget_us, s.duration_s, mode);
                let r = ta_maintenance_sim(&cfg)?;
                run.write(&format!("simulate_ta_{label}"), |w| csv_out::write_ta_trace(w, &r.trace))?;
                counts.insert(
                    label.into(),
                    json!({ "commands_sent": r.commands_sent, "max_error_us": r.max_error_us }),
                );
            }
            Ok(Value::Object(counts))
        }
        Which::Pass => {
            let o = scenario.orbit(orbit_name)?;
            let pass = propagate_pass(o, EarthModel::Rotating, tables::PASS_STEP_S)?;
            run.write("simulate_pass", |w| csv_out::write_pass(w, &pass.samples))?;
            Ok(json!({
                "orbit": orbit_name,
                "samples": pass.samples.len(),
                "duration_s": pass.samples.last().map_or(0.0, |s| s.t_s),
                "max_doppler_rate_ppm_s": pass.max_doppler_rate_ppm_s,
            }))
        }
        Which::Switch => {
            let m = scenario.mobility()?;
            let plane = m.plane()?;
            let sched = switch_schedule(&plane, m.horizon_s)?;
            run.write("simulate_switch", |w| csv_out::write_schedule(w, &sched.intervals))?;
            Ok(json!({
                "satellites": plane.len(),
                "gap_free": sched.is_gap_free(),
                "gaps": sched.gaps,
                "handovers": sched.handovers.len(),
                "first_handover": sched.handovers.first(),
                "selection": sched.handovers.first().map(|h| selection_example(&plane, &sched, h, m.hysteresis_db)).transpose()?,
            }))
        }
    }
}

/// Cell choice 30 s before the first switch among the satellites visible
/// then. RSRP follows free-space loss, so the two cells straddling the
/// switch are close in strength.
fn selection_example(
    plane: &ltem_ntn::ConstellationPlane,
    sched: &ltem_ntn::mobility::SwitchSchedule,
    first: &AssistanceInfo,
    hysteresis_db: f64,
) -> CliResult<Value> {
    let now = (first.t_stop_serving_s - 30.0).max(first.t_start_serving_s);
    let r = plane.orbit.orbit_radius_km();
    let re = plane.orbit.constants.earth_radius_km;
    let candidates: Vec<CellCandidate> = sched
        .intervals
        .iter()
        .filter(|iv| iv.t_start_s <= now && now <= iv.t_stop_s)
        .map(|iv| {
            let i = iv.sat_id.0 as usize;
            let theta = plane.central_angle(i, now);
            let d = (r * r + re * re - 2.0 * r * re * theta.cos()).sqrt();
            CellCandidate {
                cell_id: CellId(iv.sat_id.0),
                rsrp_db: -100.0 - 20.0 * (d / plane.orbit.altitude_km).log10(),
                assistance: AssistanceInfo {
                    serving: iv.sat_id,
                    target: iv.sat_id,
                    t_stop_serving_s: iv.t_stop_s,
                    t_start_serving_s: iv.t_start_s,
                    ta_to_target_ms: 0.0,
                    serving_elevation_deg: plane.elevation_deg(i, now),
                    target_elevation_deg: plane.elevation_deg(i, now),
                },
            }
        })
        .collect();
    let decision = select_cell(&candidates, hysteresis_db, now)?;
    Ok(json!({
        "now_s": now,
        "hysteresis_db": hysteresis_db,
        "candidates": candidates.iter().map(|c| json!({
            "cell_id": c.cell_id,
            "rsrp_db": c.rsrp_db,
            "remaining_service_s": c.assistance.t_stop_serving_s - now,
        })).collect::<Vec<_>>(),
        "cell_id": decision.cell_id,
        "rule": decision.rule,
    }))
}
