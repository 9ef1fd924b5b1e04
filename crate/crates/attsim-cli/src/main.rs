//! Command-line front end: scenario runs, error-norm sweeps, Monte Carlo
//! comparisons, and the three canned demonstration presets, all exported as
//! CSV.
//!
//! Exit codes: 0 on success, 2 for anything wrong with the invocation or the
//! scenario file (nothing is written), 1 when a run blows up mid-flight.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use attsim::algebra::Vec3;
use attsim::dynamics::IntegratorConfig;
use attsim::error_kinematics::WeightMatrix;
use attsim::scenario::{from_toml_str, Preset};
use attsim::sim::{
    fmt_f64, run_monte_carlo, run_scenario, sweep_error_norms, sweep_to_csv, MonteCarloSummary,
    Representation, Scenario,
};

#[derive(Parser)]
#[command(
    name = "attsim",
    version,
    about = "Rigid-body attitude control simulations with stall-proof feedback laws"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file and export the full per-step log.
    Simulate {
        /// TOML scenario file.
        scenario: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Tabulate both proportional-term norms against the error angle.
    Sweep {
        /// Rotation axis for the swept error, comma-separated.
        #[arg(long, default_value = "0,0,1", value_parser = parse_triple)]
        axis: Triple,
        /// Number of evenly spaced angles on [0, 180] degrees.
        #[arg(long, default_value_t = 181)]
        points: usize,
        /// Error-function weights, comma-separated and strictly increasing.
        #[arg(long = "K", default_value = "1,2,3", value_parser = parse_triple)]
        k: Triple,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one scenario under many seeds and summarize settling times.
    Montecarlo {
        /// TOML scenario file.
        scenario: PathBuf,
        /// Number of consecutive seeds, starting at the scenario's.
        #[arg(long)]
        seeds: u64,
        /// Run each seed twice, with and without stall substitution.
        #[arg(long, conflicts_with = "pseudo")]
        compare_pseudo: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Run a canned demonstration setup.
    ///
    /// Without --pseudo this exports a two-run comparison (substitution on
    /// vs. off) of the preset's headline quantity; with --pseudo it exports
    /// the full log of that single run.
    Preset {
        /// One of fig2, fig3, fig4.
        name: String,
        #[command(flatten)]
        common: Common,
    },
}

/// Flags shared by every command that runs the simulator. Each one overrides
/// whatever the scenario file or preset chose.
#[derive(Args)]
struct Common {
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Integrator step in seconds.
    #[arg(long)]
    dt: Option<f64>,
    /// Run length in seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// Force stall substitution on or off.
    #[arg(long, value_enum)]
    pseudo: Option<OnOff>,
    /// Force measurement noise on or off.
    #[arg(long, value_enum)]
    noise: Option<OnOff>,
    /// Which feedback law drives the run.
    #[arg(long, value_enum)]
    representation: Option<RepArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

impl OnOff {
    fn as_bool(self) -> bool {
        matches!(self, OnOff::On)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RepArg {
    Quat,
    So3,
}

#[derive(Clone, Copy)]
struct Triple([f64; 3]);

fn parse_triple(text: &str) -> Result<Triple, String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated numbers, got {text:?}"));
    }
    let mut v = [0.0; 3];
    for (slot, part) in v.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse::<f64>()
            .map_err(|e| format!("bad number {part:?}: {e}"))?;
    }
    Ok(Triple(v))
}

/// Failures after argument parsing. Usage-class problems (unreadable or
/// invalid scenarios, bad parameter combinations) exit 2 like clap's own
/// errors; mid-run numerical blowups exit 1.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }

    fn from_run_error(err: attsim::Error) -> Self {
        match err {
            attsim::Error::NonFiniteState { step } => Failure::runtime(format!(
                "simulation diverged: non-finite state after step {step}; \
                 reduce dt or the gains"
            )),
            attsim::Error::TooFarFromManifold { .. } => Failure::runtime(format!(
                "simulation diverged: {err}; reduce dt or the gains"
            )),
            other => Failure::usage(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Simulate { scenario, common } => {
            let sc = load_scenario(&scenario, &common)?;
            let log = run_scenario(&sc).map_err(Failure::from_run_error)?;
            let report = log.convergence();
            write_output(&common.out, &log.to_csv())?;
            match report.t_converge {
                Some(t) => println!(
                    "converged at t = {t:.3} s, final V = {:.3e}",
                    report.final_v
                ),
                None => println!(
                    "did not converge within {} s, final V = {:.3e}",
                    sc.duration, report.final_v
                ),
            }
            Ok(())
        }
        Command::Sweep { axis, points, k, out } => {
            let weights = WeightMatrix::new(k.0[0], k.0[1], k.0[2])
                .map_err(|e| Failure::usage(e.to_string()))?;
            let axis = Vec3::new(axis.0[0], axis.0[1], axis.0[2]);
            let rows = sweep_error_norms(&weights, &axis, points)
                .map_err(|e| Failure::usage(e.to_string()))?;
            write_output(&out, &sweep_to_csv(&rows))
        }
        Command::Montecarlo { scenario, seeds, compare_pseudo, common } => {
            let sc = load_scenario(&scenario, &common)?;
            if compare_pseudo {
                let mut on = sc;
                on.pseudo.enabled = true;
                let mut off = sc;
                off.pseudo.enabled = false;
                let s_on = run_monte_carlo(&on, seeds).map_err(Failure::from_run_error)?;
                let s_off = run_monte_carlo(&off, seeds).map_err(Failure::from_run_error)?;
                write_output(&common.out, &comparison_mc_csv(&s_on, &s_off))?;
                println!(
                    "substitution on : {}",
                    mc_summary_line(&s_on, seeds, on.duration)
                );
                println!(
                    "substitution off: {}",
                    mc_summary_line(&s_off, seeds, off.duration)
                );
            } else {
                let summary = run_monte_carlo(&sc, seeds).map_err(Failure::from_run_error)?;
                write_output(&common.out, &single_mc_csv(&summary))?;
                println!("{}", mc_summary_line(&summary, seeds, sc.duration));
            }
            Ok(())
        }
        Command::Preset { name, common } => {
            let preset = Preset::from_name(&name).map_err(|e| Failure::usage(e.to_string()))?;
            let sc = apply_common(preset.scenario(), &common)?;
            match common.pseudo {
                // An explicit choice means the caller wants that single run.
                Some(_) => {
                    let log = run_scenario(&sc).map_err(Failure::from_run_error)?;
                    write_output(&common.out, &log.to_csv())
                }
                None => {
                    let mut on = sc;
                    on.pseudo.enabled = true;
                    let mut off = sc;
                    off.pseudo.enabled = false;
                    let log_on = run_scenario(&on).map_err(Failure::from_run_error)?;
                    let log_off = run_scenario(&off).map_err(Failure::from_run_error)?;
                    write_output(&common.out, &preset_comparison_csv(preset, &log_on, &log_off))
                }
            }
        }
    }
}

fn load_scenario(path: &Path, common: &Common) -> Result<Scenario, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Failure::usage(format!("cannot read scenario {}: {e}", path.display()))
    })?;
    let sc = from_toml_str(&text).map_err(|e| Failure::usage(e.to_string()))?;
    apply_common(sc, common)
}

fn apply_common(mut sc: Scenario, common: &Common) -> Result<Scenario, Failure> {
    if let Some(rep) = common.representation {
        sc.representation = match rep {
            RepArg::Quat => Representation::Quaternion,
            RepArg::So3 => Representation::So3,
        };
    }
    if let Some(dt) = common.dt {
        sc.integrator = IntegratorConfig::new(dt, sc.integrator.scheme, sc.integrator.renormalize_every)
            .map_err(|e| Failure::usage(e.to_string()))?;
    }
    if let Some(duration) = common.duration {
        sc.duration = duration;
    }
    if let Some(pseudo) = common.pseudo {
        sc.pseudo.enabled = pseudo.as_bool();
    }
    if let Some(noise) = common.noise {
        sc.noise.enabled = noise.as_bool();
    }
    sc.validate().map_err(|e| Failure::usage(e.to_string()))?;
    Ok(sc)
}

/// Single atomic write; failures must never leave a partial file behind.
fn write_output(path: &Path, content: &str) -> Result<(), Failure> {
    std::fs::write(path, content).map_err(|e| {
        Failure::runtime(format!("cannot write {}: {e}", path.display()))
    })
}

/// Side-by-side preset export of the quantity each demonstration plots:
/// error-quaternion components for fig2, the error function for fig3, the
/// error-vector norm for fig4.
fn preset_comparison_csv(
    preset: Preset,
    on: &attsim::sim::TrajectoryLog,
    off: &attsim::sim::TrajectoryLog,
) -> String {
    let mut out = String::new();
    match preset {
        Preset::Fig2 => {
            out.push_str("t,qe0_on,qe1_on,qe2_on,qe3_on,qe0_off,qe1_off,qe2_off,qe3_off\n");
            for (a, b) in on.records.iter().zip(&off.records) {
                let _ = write!(out, "{}", fmt_f64(a.t));
                for value in a.q_e.iter().chain(b.q_e.iter()) {
                    let _ = write!(out, ",{}", fmt_f64(*value));
                }
                out.push('\n');
            }
        }
        Preset::Fig3 => {
            out.push_str("t,psi_on,psi_off\n");
            for (a, b) in on.records.iter().zip(&off.records) {
                let _ = writeln!(
                    out,
                    "{},{},{}",
                    fmt_f64(a.t),
                    fmt_f64(a.psi),
                    fmt_f64(b.psi)
                );
            }
        }
        Preset::Fig4 => {
            out.push_str("t,er_norm_on,er_norm_off\n");
            for (a, b) in on.records.iter().zip(&off.records) {
                let _ = writeln!(
                    out,
                    "{},{},{}",
                    fmt_f64(a.t),
                    fmt_f64(a.e_r_norm),
                    fmt_f64(b.e_r_norm)
                );
            }
        }
    }
    out
}

fn push_report_fields(out: &mut String, report: &attsim::sim::ConvergenceReport) {
    let _ = write!(
        out,
        ",{},{},{}",
        u8::from(report.converged),
        report.t_converge.map(fmt_f64).unwrap_or_default(),
        fmt_f64(report.final_v)
    );
}

fn single_mc_csv(summary: &MonteCarloSummary) -> String {
    let mut out = String::from("seed,converged,t_converge,final_v\n");
    for run in &summary.runs {
        let _ = write!(out, "{}", run.seed);
        push_report_fields(&mut out, &run.report);
        out.push('\n');
    }
    out
}

fn comparison_mc_csv(on: &MonteCarloSummary, off: &MonteCarloSummary) -> String {
    let mut out = String::from(
        "seed,converged_on,t_converge_on,final_v_on,converged_off,t_converge_off,final_v_off\n",
    );
    for (a, b) in on.runs.iter().zip(&off.runs) {
        let _ = write!(out, "{}", a.seed);
        push_report_fields(&mut out, &a.report);
        push_report_fields(&mut out, &b.report);
        out.push('\n');
    }
    out
}

fn mc_summary_line(summary: &MonteCarloSummary, seeds: u64, duration: f64) -> String {
    format!(
        "{}/{} converged, t_converge median {:.3} s, quartiles [{:.3}, {:.3}] s \
         (unconverged runs counted as {duration} s)",
        summary.n_converged, seeds, summary.median_t, summary.q25_t, summary.q75_t
    )
}
