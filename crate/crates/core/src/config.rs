//! Run configuration: a line-oriented `key = value` format with `[model]`,
//! `[drive]` and `[sim]` sections. Unknown keys are hard errors; every
//! value left at its default is recorded in a provenance listing so a run
//! can echo exactly what it used.

use crate::params::{ModelParams, Variant, FIELD_NAMES};
use crate::solver::{OdeMethod, SolverConfig};
use crate::waveform::Waveform;
use thiserror::Error;

/// Fully-defaulted inputs for one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: ModelParams,
    pub drive: Waveform,
    pub solver: SolverConfig,
    pub w0: f64,
    pub output: Option<String>,
    /// One line per setting: `section.key = value (default|config)`.
    pub provenance: Vec<String>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: unknown key `{key}` in section [{section}]")]
    UnknownKey {
        line: usize,
        section: String,
        key: String,
    },
    #[error("line {line}: unknown section [{name}]")]
    UnknownSection { line: usize, name: String },
    #[error("invariant violation on `{field}`: {msg}")]
    InvariantViolation { field: String, msg: String },
}

#[derive(Default)]
struct DriveSettings {
    preset: Option<String>,
    kind: Option<String>,
    amplitude_pos: Option<f64>,
    amplitude_neg: Option<f64>,
    period: Option<f64>,
    t_end: Option<f64>,
    breakpoints: Option<Vec<(f64, f64)>>,
}

fn parse_f64(value: &str, line: usize) -> Result<f64, ConfigError> {
    value.parse::<f64>().map_err(|_| ConfigError::Parse {
        line,
        msg: format!("expected a number, got `{value}`"),
    })
}

fn parse_usize(value: &str, line: usize) -> Result<usize, ConfigError> {
    value.parse::<usize>().map_err(|_| ConfigError::Parse {
        line,
        msg: format!("expected a non-negative integer, got `{value}`"),
    })
}

fn parse_breakpoints(value: &str, line: usize) -> Result<Vec<(f64, f64)>, ConfigError> {
    // "t:v, t:v, ..."
    let mut out = Vec::new();
    for chunk in value.split(',') {
        let chunk = chunk.trim();
        if chunk.is_empty() {
            continue;
        }
        let (t, v) = chunk.split_once(':').ok_or_else(|| ConfigError::Parse {
            line,
            msg: format!("breakpoint `{chunk}` is not of the form t:v"),
        })?;
        out.push((parse_f64(t.trim(), line)?, parse_f64(v.trim(), line)?));
    }
    if out.is_empty() {
        return Err(ConfigError::Parse {
            line,
            msg: "breakpoints list is empty".into(),
        });
    }
    Ok(out)
}

/// Parse a config file and fill every unset field from the defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut params = ModelParams::default();
    let mut model_set: Vec<&'static str> = Vec::new();
    let mut variant_set = false;
    let mut drive = DriveSettings::default();
    let mut solver = SolverConfig::default();
    let mut sim_set: Vec<&'static str> = Vec::new();
    let mut w0: Option<f64> = None;
    let mut output: Option<String> = None;

    let mut section: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find(['#', ';']) {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| ConfigError::Parse {
                line: line_no,
                msg: "unterminated section header".into(),
            })?;
            let name = name.trim();
            match name {
                "model" | "drive" | "sim" => section = Some(name.to_string()),
                other => {
                    return Err(ConfigError::UnknownSection {
                        line: line_no,
                        name: other.to_string(),
                    })
                }
            }
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
            line: line_no,
            msg: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        let section_name = section.as_deref().ok_or_else(|| ConfigError::Parse {
            line: line_no,
            msg: format!("key `{key}` appears before any [section] header"),
        })?;

        match section_name {
            "model" => {
                if key == "variant" {
                    params.variant = match value {
                        "original" => Variant::Original,
                        "modified" => Variant::Modified,
                        other => {
                            return Err(ConfigError::Parse {
                                line: line_no,
                                msg: format!(
                                    "variant must be `original` or `modified`, got `{other}`"
                                ),
                            })
                        }
                    };
                    variant_set = true;
                } else if let Some(&name) = FIELD_NAMES.iter().find(|&&n| n == key) {
                    params
                        .set(name, parse_f64(value, line_no)?)
                        .expect("known field");
                    model_set.push(name);
                } else {
                    return Err(ConfigError::UnknownKey {
                        line: line_no,
                        section: "model".into(),
                        key: key.to_string(),
                    });
                }
            }
            "drive" => match key {
                "preset" => drive.preset = Some(value.to_string()),
                "kind" => drive.kind = Some(value.to_string()),
                "amplitude_pos" => drive.amplitude_pos = Some(parse_f64(value, line_no)?),
                "amplitude_neg" => drive.amplitude_neg = Some(parse_f64(value, line_no)?),
                "period" => drive.period = Some(parse_f64(value, line_no)?),
                "t_end" => drive.t_end = Some(parse_f64(value, line_no)?),
                "breakpoints" => drive.breakpoints = Some(parse_breakpoints(value, line_no)?),
                other => {
                    return Err(ConfigError::UnknownKey {
                        line: line_no,
                        section: "drive".into(),
                        key: other.to_string(),
                    })
                }
            },
            "sim" => match key {
                "newton_tol" => {
                    solver.newton_tol = parse_f64(value, line_no)?;
                    sim_set.push("newton_tol");
                }
                "newton_max_iter" => {
                    solver.newton_max_iter = parse_usize(value, line_no)?;
                    sim_set.push("newton_max_iter");
                }
                "bisect_span" => {
                    solver.bisect_span = parse_f64(value, line_no)?;
                    sim_set.push("bisect_span");
                }
                "method" => {
                    solver.ode_method = match value {
                        "rk4" => OdeMethod::Rk4,
                        "euler" => OdeMethod::Euler,
                        other => {
                            return Err(ConfigError::Parse {
                                line: line_no,
                                msg: format!("method must be `rk4` or `euler`, got `{other}`"),
                            })
                        }
                    };
                    sim_set.push("method");
                }
                "dt" => {
                    solver.dt = parse_f64(value, line_no)?;
                    sim_set.push("dt");
                }
                "substeps" => {
                    solver.substeps = parse_usize(value, line_no)?;
                    sim_set.push("substeps");
                }
                "w0" => w0 = Some(parse_f64(value, line_no)?),
                "output" => output = Some(value.to_string()),
                other => {
                    return Err(ConfigError::UnknownKey {
                        line: line_no,
                        section: "sim".into(),
                        key: other.to_string(),
                    })
                }
            },
            _ => unreachable!("section names validated above"),
        }
    }

    // selecting the original variant forces the k factors to 1 unless the
    // config pinned them explicitly
    if params.variant == Variant::Original {
        for (name, slot) in [
            ("k_off1", &mut params.k_off1),
            ("k_off2", &mut params.k_off2),
            ("k_on1", &mut params.k_on1),
            ("k_on2", &mut params.k_on2),
        ] {
            if !model_set.contains(&name) {
                *slot = 1.0;
            }
        }
    }

    params
        .validate()
        .map_err(|e| ConfigError::InvariantViolation {
            field: match &e {
                crate::params::ParamError::NonPositive { name, .. } => name.to_string(),
                crate::params::ParamError::NegativeSeriesResistance(_) => "r_s".into(),
                crate::params::ParamError::BadWidthBounds { .. } => "w_min".into(),
                crate::params::ParamError::InconsistentW1 { .. } => "w1_const".into(),
                crate::params::ParamError::DampedOriginal { name, .. } => name.to_string(),
                _ => "model".into(),
            },
            msg: e.to_string(),
        })?;

    let drive_described: Waveform;
    let drive_is_default;
    if drive.kind.is_none()
        && drive.preset.is_none()
        && drive.amplitude_pos.is_none()
        && drive.amplitude_neg.is_none()
        && drive.period.is_none()
        && drive.t_end.is_none()
        && drive.breakpoints.is_none()
    {
        drive_described = Waveform::preset("fig2-drive").expect("built-in preset");
        drive_is_default = true;
    } else if let Some(name) = &drive.preset {
        if drive.kind.is_some()
            || drive.amplitude_pos.is_some()
            || drive.amplitude_neg.is_some()
            || drive.period.is_some()
            || drive.t_end.is_some()
            || drive.breakpoints.is_some()
        {
            return Err(ConfigError::InvariantViolation {
                field: "drive.preset".into(),
                msg: "a preset cannot be combined with explicit drive keys".into(),
            });
        }
        drive_described =
            Waveform::preset(name).ok_or_else(|| ConfigError::InvariantViolation {
                field: "drive.preset".into(),
                msg: format!("unknown preset `{name}`"),
            })?;
        drive_is_default = false;
    } else {
        let kind = drive.kind.as_deref().unwrap_or("triangular");
        let t_end = drive.t_end.unwrap_or(6.0);
        drive_described = match kind {
            "triangular" => Waveform::Triangular {
                amplitude_pos: drive.amplitude_pos.unwrap_or(1.0),
                amplitude_neg: drive.amplitude_neg.unwrap_or(1.0),
                period: drive.period.unwrap_or(t_end),
                t_end,
            },
            "sine" => Waveform::Sine {
                amplitude_pos: drive.amplitude_pos.unwrap_or(1.0),
                period: drive.period.unwrap_or(t_end),
                t_end,
            },
            "ramp_hold" => Waveform::RampHold {
                amplitude_pos: drive.amplitude_pos.unwrap_or(1.0),
                period: drive.period.unwrap_or(t_end),
                t_end,
            },
            "piecewise" => Waveform::PiecewiseLinear {
                breakpoints: drive.breakpoints.clone().unwrap_or_default(),
                t_end,
            },
            other => {
                return Err(ConfigError::InvariantViolation {
                    field: "drive.kind".into(),
                    msg: format!("unknown kind `{other}` (triangular, sine, ramp_hold, piecewise)"),
                })
            }
        };
        drive_is_default = false;
    }
    drive_described
        .validate()
        .map_err(|e| ConfigError::InvariantViolation {
            field: "drive".into(),
            msg: e.to_string(),
        })?;

    solver
        .validate()
        .map_err(|e| ConfigError::InvariantViolation {
            field: "sim".into(),
            msg: e.to_string(),
        })?;
    // the CLI's default output spacing is 1 ms; the bare solver default is
    // one sample per step
    if !sim_set.contains(&"substeps") {
        solver.substeps = 10;
    }
    let w0_value = w0.unwrap_or(1.2);
    if w0_value.is_nan() || w0_value <= params.w1_const {
        return Err(ConfigError::InvariantViolation {
            field: "w0".into(),
            msg: format!("w0 = {w0_value} must exceed w1_const = {}", params.w1_const),
        });
    }
    if params.variant == Variant::Modified && !(params.w_min..=params.w_max).contains(&w0_value) {
        return Err(ConfigError::InvariantViolation {
            field: "w0".into(),
            msg: format!(
                "w0 = {w0_value} outside [{}, {}] for the modified variant",
                params.w_min, params.w_max
            ),
        });
    }

    let mut provenance = Vec::new();
    for &name in FIELD_NAMES {
        let origin = if model_set.contains(&name) {
            "config"
        } else {
            "default"
        };
        provenance.push(format!(
            "model.{name} = {} ({origin})",
            params.get(name).expect("known field")
        ));
    }
    provenance.push(format!(
        "model.variant = {} ({})",
        params.variant,
        if variant_set { "config" } else { "default" }
    ));
    provenance.push(format!(
        "drive = {} ({})",
        drive_described.describe(),
        if drive_is_default {
            "default"
        } else {
            "config"
        }
    ));
    for (name, value, key) in [
        (
            "sim.newton_tol",
            format!("{}", solver.newton_tol),
            "newton_tol",
        ),
        (
            "sim.newton_max_iter",
            format!("{}", solver.newton_max_iter),
            "newton_max_iter",
        ),
        (
            "sim.bisect_span",
            format!("{}", solver.bisect_span),
            "bisect_span",
        ),
        ("sim.method", format!("{}", solver.ode_method), "method"),
        ("sim.dt", format!("{}", solver.dt), "dt"),
        ("sim.substeps", format!("{}", solver.substeps), "substeps"),
    ] {
        let origin = if sim_set.contains(&key) {
            "config"
        } else {
            "default"
        };
        provenance.push(format!("{name} = {value} ({origin})"));
    }
    provenance.push(format!(
        "sim.w0 = {w0_value} ({})",
        if w0.is_some() { "config" } else { "default" }
    ));

    Ok(RunConfig {
        params,
        drive: drive_described,
        solver,
        w0: w0_value,
        output,
        provenance,
    })
}
