//! Command-line front end: batch simulation runs, variant comparison,
//! boundary stress checks, trace error evaluation, and parameter fitting.
//!
//! Exit codes are a stable contract for scripting: 0 success, 2 config
//! error, 3 numerical failure, 4 I/O error.

use clap::{Parser, Subcommand};
use memristor_sim::config::{parse_config, ConfigError, RunConfig};
use memristor_sim::csvio::{self, CsvError};
use memristor_sim::fit::{fit_parameters, FitProblem, FitStatus, FreeParam};
use memristor_sim::metrics::{rel_rms_error, Region};
use memristor_sim::params::{ModelParams, Variant, FIELD_NAMES};
use memristor_sim::transient::{simulate, SimulateError, Termination, Trace};
use memristor_sim::waveform::Waveform;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "memsim",
    about = "Tunnel-barrier memristor simulator",
    version,
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one transient simulation and write the trace CSV.
    Simulate {
        /// Config file path.
        config: PathBuf,
        /// Output CSV path (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run both variants on the same drive and report their differences.
    Compare {
        /// Config file path.
        config: PathBuf,
        /// Output directory for original.csv, modified.csv and summary.txt.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run the +9 V and -3 V stress ramps on both variants and check the
    /// modified variant stays inside its width bounds.
    BoundaryCheck {
        /// Config file path.
        config: PathBuf,
    },
    /// Print the relative-RMS error between a model CSV and a reference CSV.
    Error {
        model: PathBuf,
        reference: PathBuf,
        /// Switching region to evaluate: on, off or full.
        #[arg(long, default_value = "full")]
        region: String,
    },
    /// Fit free parameters against a reference CSV and write them in config
    /// syntax.
    Fit {
        /// Config file path (supplies base parameters, drive and solver).
        config: PathBuf,
        /// Reference CSV path.
        reference: PathBuf,
        /// Comma-separated parameter names to fit.
        #[arg(long)]
        free: String,
        /// Output params file (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Switching region for the objective: on, off or full.
        #[arg(long, default_value = "off")]
        region: String,
        /// Maximum objective evaluations.
        #[arg(long, default_value_t = 200)]
        budget: usize,
    },
}

enum Failure {
    Config(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Io(_) => 4,
        }
    }
    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Numerical(m) | Failure::Io(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(format!("config error: {e}"))
    }
}

impl From<SimulateError> for Failure {
    fn from(e: SimulateError) -> Self {
        match e {
            SimulateError::AtTime { .. } => Failure::Numerical(format!("solver failure: {e}")),
            other => Failure::Config(format!("config error: {other}")),
        }
    }
}

impl From<CsvError> for Failure {
    fn from(e: CsvError) -> Self {
        match e {
            CsvError::Io(io) => Failure::Io(format!("i/o error: {io}")),
            other => Failure::Config(format!("csv error: {other}")),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(format!("i/o error: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("memsim: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn load_config(path: &Path) -> Result<RunConfig, Failure> {
    let text = fs::read_to_string(path)?;
    let rc = parse_config(&text)?;
    for line in &rc.provenance {
        eprintln!("# {line}");
    }
    Ok(rc)
}

fn parse_region(name: &str) -> Result<Region, Failure> {
    match name {
        "on" => Ok(Region::On),
        "off" => Ok(Region::Off),
        "full" => Ok(Region::Full),
        other => Err(Failure::Config(format!(
            "config error: region must be on, off or full, got `{other}`"
        ))),
    }
}

fn write_trace_to(path: Option<&Path>, trace: &Trace) -> Result<(), Failure> {
    match path {
        Some(p) => {
            let file = fs::File::create(p)?;
            csvio::write_trace(std::io::BufWriter::new(file), trace)?;
        }
        None => {
            let stdout = std::io::stdout();
            csvio::write_trace(stdout.lock(), trace)?;
        }
    }
    Ok(())
}

fn termination_note(trace: &Trace) -> String {
    match &trace.termination {
        Termination::Completed => "completed".into(),
        Termination::Aborted { t, reason } => format!("aborted at t = {t} s ({reason})"),
    }
}

/// A knee point: (v, i) of the largest-|i| sample in one drive region.
type Knee = Option<(f64, f64)>;

/// Knee of each hysteresis lobe.
fn knee_points(trace: &Trace) -> (Knee, Knee) {
    let mut off: Knee = None;
    let mut on: Knee = None;
    for s in &trace.samples {
        if s.v > 0.0 && off.is_none_or(|(_, i)| s.i > i) {
            off = Some((s.v, s.i));
        }
        if s.v < 0.0 && on.is_none_or(|(_, i)| s.i < i) {
            on = Some((s.v, s.i));
        }
    }
    (off, on)
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Simulate { config, output } => {
            let rc = load_config(&config)?;
            let out = output.or_else(|| rc.output.clone().map(PathBuf::from));
            let trace = simulate(&rc.drive, &rc.params, &rc.solver, rc.w0)?;
            write_trace_to(out.as_deref(), &trace)?;
            if let Termination::Aborted { t, reason } = &trace.termination {
                return Err(Failure::Numerical(format!(
                    "solver failure at t = {t} s: {reason} (partial trace written)"
                )));
            }
            Ok(())
        }
        Command::Compare { config, output } => {
            let rc = load_config(&config)?;
            fs::create_dir_all(&output)?;
            let modified = simulate(
                &rc.drive,
                &rc.params.with_variant(Variant::Modified),
                &rc.solver,
                rc.w0,
            )?;
            let original = simulate(
                &rc.drive,
                &rc.params.with_variant(Variant::Original),
                &rc.solver,
                rc.w0,
            )?;
            write_trace_to(Some(&output.join("modified.csv")), &modified)?;
            write_trace_to(Some(&output.join("original.csv")), &original)?;

            let mut summary = String::new();
            for (name, trace) in [("modified", &modified), ("original", &original)] {
                let (lo, hi) = trace.w_eff_range().unwrap_or((f64::NAN, f64::NAN));
                let (rlo, rhi) = trace.w_raw_range().unwrap_or((f64::NAN, f64::NAN));
                summary += &format!(
                    "{name}: w_eff in [{lo:.4}, {hi:.4}] nm, w_raw in [{rlo:.4}, {rhi:.4}] nm, {}\n",
                    termination_note(trace)
                );
                let (off, on) = knee_points(trace);
                if let Some((v, i)) = off {
                    summary +=
                        &format!("{name}: off knee at v = {v:.4} V, i = {:.4} mA\n", i * 1e3);
                }
                if let Some((v, i)) = on {
                    summary += &format!("{name}: on knee at v = {v:.4} V, i = {:.4} mA\n", i * 1e3);
                }
            }
            // model-vs-model discrepancy, original playing the reference
            let reference = memristor_sim::metrics::ReferenceTrace::new(original.tvi())
                .map_err(|e| Failure::Numerical(format!("reference build failed: {e}")))?;
            for region in [Region::On, Region::Off] {
                match rel_rms_error(&modified.tvi(), &reference, region) {
                    Ok(e) => {
                        summary += &format!(
                            "discrepancy (modified vs original, {region} region): {:.4} %\n",
                            e * 100.0
                        )
                    }
                    Err(err) => summary += &format!("discrepancy ({region} region): n/a ({err})\n"),
                }
            }
            fs::write(output.join("summary.txt"), &summary)?;
            print!("{summary}");
            Ok(())
        }
        Command::BoundaryCheck { config } => {
            let rc = load_config(&config)?;
            let mut modified_ok = true;
            for preset in ["fig3-stress", "fig4-stress"] {
                let wf = Waveform::preset(preset).expect("built-in preset");
                for variant in [Variant::Modified, Variant::Original] {
                    let params = rc.params.with_variant(variant);
                    let trace = simulate(&wf, &params, &rc.solver, rc.w0)?;
                    let (lo, hi) = trace.w_eff_range().unwrap_or((f64::NAN, f64::NAN));
                    let (rlo, rhi) = trace.w_raw_range().unwrap_or((f64::NAN, f64::NAN));
                    println!(
                        "{preset} {variant}: w_eff in [{lo:.4}, {hi:.4}] nm, w_raw in [{rlo:.4e}, {rhi:.4e}] nm, {}",
                        termination_note(&trace)
                    );
                    if variant == Variant::Modified
                        && (!(lo >= params.w_min && hi <= params.w_max) || !trace.completed())
                    {
                        modified_ok = false;
                    }
                }
            }
            if modified_ok {
                println!("modified variant stayed within its width bounds");
                Ok(())
            } else {
                Err(Failure::Numerical(
                    "modified variant left its width bounds".into(),
                ))
            }
        }
        Command::Error {
            model,
            reference,
            region,
        } => {
            let region = parse_region(&region)?;
            let model_series = csvio::read_reference(BufReader::new(fs::File::open(&model)?))?;
            let reference_trace =
                csvio::read_reference(BufReader::new(fs::File::open(&reference)?))?;
            let e = rel_rms_error(model_series.samples(), &reference_trace, region)
                .map_err(|err| Failure::Numerical(format!("metric failed: {err}")))?;
            println!("{e}");
            Ok(())
        }
        Command::Fit {
            config,
            reference,
            free,
            output,
            region,
            budget,
        } => {
            let rc = load_config(&config)?;
            let region = parse_region(&region)?;
            let reference_trace =
                csvio::read_reference(BufReader::new(fs::File::open(&reference)?))?;
            let free_parameters: Vec<FreeParam> = free
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|name| {
                    let value = rc
                        .params
                        .get(name)
                        .map_err(|e| Failure::Config(format!("config error: {e}")))?;
                    let (lower, upper) = default_bounds(name, value);
                    Ok(FreeParam {
                        name: name.to_string(),
                        lower,
                        upper,
                    })
                })
                .collect::<Result<_, Failure>>()?;
            let problem = FitProblem {
                free_parameters,
                objective_region: region,
                reference: reference_trace,
                budget,
                drive: rc.drive.clone(),
                w0: rc.w0,
            };
            let result = fit_parameters(&problem, &rc.params, &rc.solver)
                .map_err(|e| Failure::Config(format!("fit setup error: {e}")))?;
            eprintln!(
                "# fit finished: error = {:.6}, evaluations = {}, status = {}",
                result.error,
                result.evaluations,
                match result.status {
                    FitStatus::Converged => "converged",
                    FitStatus::BudgetExhausted => "budget exhausted",
                }
            );
            let text = params_as_config(&result.params);
            match output {
                Some(p) => fs::write(p, text)?,
                None => print!("{text}"),
            }
            Ok(())
        }
    }
}

/// Default fit bounds per parameter.
fn default_bounds(name: &str, value: f64) -> (f64, f64) {
    match name {
        "k_off1" | "k_off2" | "k_on1" | "k_on2" => (0.05, 3.0),
        "a_off" | "a_on" => (0.5, 2.5),
        _ => (value / 4.0, value * 4.0),
    }
}

fn params_as_config(params: &ModelParams) -> String {
    let mut out = String::from("[model]\n");
    for &name in FIELD_NAMES {
        out += &format!("{name} = {}\n", params.get(name).expect("known field"));
    }
    out += &format!("variant = {}\n", params.variant);
    out
}
