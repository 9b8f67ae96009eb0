//! Transient simulation: drive a single device through a waveform and
//! record the full time series.

use crate::model::DeviceState;
use crate::params::{ModelParams, Variant};
use crate::solver::{advance_state, solve_operating_point_warm, SolverConfig, SolverError};
use crate::waveform::Waveform;
use thiserror::Error;

/// One recorded instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub v: f64,
    pub v_g: f64,
    pub i: f64,
    pub w_eff: f64,
    pub w_raw: f64,
}

/// How a run ended. Runs that drive the state outside the model's
/// mathematical domain (possible only in the `Original` variant) keep the
/// samples produced so far and record the failure here.
#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Completed,
    Aborted { t: f64, reason: String },
}

/// Time-ordered output of one transient run plus the inputs that produced
/// it. Samples are uniformly spaced at `cfg.dt * cfg.substeps`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub samples: Vec<Sample>,
    pub params: ModelParams,
    pub solver: SolverConfig,
    pub drive: Waveform,
    pub termination: Termination,
}

impl Trace {
    pub fn completed(&self) -> bool {
        matches!(self.termination, Termination::Completed)
    }

    /// (t, v, i) projection used by the error metric and CSV export.
    pub fn tvi(&self) -> Vec<(f64, f64, f64)> {
        self.samples.iter().map(|s| (s.t, s.v, s.i)).collect()
    }

    pub fn w_eff_range(&self) -> Option<(f64, f64)> {
        minmax(self.samples.iter().map(|s| s.w_eff))
    }

    pub fn w_raw_range(&self) -> Option<(f64, f64)> {
        minmax(self.samples.iter().map(|s| s.w_raw))
    }
}

fn minmax(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let mut out: Option<(f64, f64)> = None;
    for v in values {
        out = Some(match out {
            None => (v, v),
            Some((lo, hi)) => (lo.min(v), hi.max(v)),
        });
    }
    out
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulateError {
    #[error("invalid initial width w0 = {w0}: {reason}")]
    BadInitialWidth { w0: f64, reason: String },
    #[error(transparent)]
    Waveform(#[from] crate::waveform::WaveformError),
    #[error(transparent)]
    Config(SolverError),
    #[error("solver failed at t = {t} s: {source}")]
    AtTime { t: f64, source: SolverError },
}

/// Drive the device over `[0, wf.t_end()]` from initial width `w0`.
///
/// Per output instant: sample the drive, solve the operating point, record,
/// then advance the state through `cfg.substeps` integration steps with the
/// drive re-sampled (and held) at each substep start. A solver failure on
/// the very first instant is an error; a failure later ends the run early
/// with the partial trace and an `Aborted` termination carrying the
/// timestamp, since a state escaping the model domain is itself a result
/// worth reporting.
pub fn simulate(
    wf: &Waveform,
    params: &ModelParams,
    cfg: &SolverConfig,
    w0: f64,
) -> Result<Trace, SimulateError> {
    wf.validate()?;
    cfg.validate().map_err(SimulateError::Config)?;
    if w0.is_nan() || w0 <= params.w1_const {
        return Err(SimulateError::BadInitialWidth {
            w0,
            reason: format!("must exceed w1_const = {}", params.w1_const),
        });
    }
    if params.variant == Variant::Modified && !(params.w_min..=params.w_max).contains(&w0) {
        return Err(SimulateError::BadInitialWidth {
            w0,
            reason: format!(
                "modified variant requires w0 in [{}, {}]",
                params.w_min, params.w_max
            ),
        });
    }

    let t_end = wf.t_end();
    let n_steps = (t_end / cfg.dt).round() as u64;
    let mut state = DeviceState::new(w0, params);
    let mut samples = Vec::with_capacity((n_steps / cfg.substeps as u64 + 2) as usize);
    let mut warm: Option<f64> = None;
    let mut termination = Termination::Completed;

    let mut step: u64 = 0;
    'outer: loop {
        let t = step as f64 * cfg.dt;
        let v = wf.sample(t)?;
        let op = match solve_operating_point_warm(v, state.w_eff, params, cfg, warm) {
            Ok(op) => op,
            Err(e) => {
                if samples.is_empty() {
                    return Err(SimulateError::AtTime { t, source: e });
                }
                termination = Termination::Aborted {
                    t,
                    reason: e.to_string(),
                };
                break;
            }
        };
        warm = Some(op.i);
        samples.push(Sample {
            t,
            v,
            v_g: op.v_g,
            i: op.i,
            w_eff: state.w_eff,
            w_raw: state.w_raw,
        });
        if step >= n_steps {
            break;
        }
        // advance through the substeps of this output interval
        let mut op_sub = op;
        for k in 0..cfg.substeps as u64 {
            if step + k >= n_steps {
                break;
            }
            let t_sub = (step + k) as f64 * cfg.dt;
            if k > 0 {
                let v_sub = wf.sample(t_sub)?;
                op_sub = match solve_operating_point_warm(v_sub, state.w_eff, params, cfg, warm) {
                    Ok(op) => op,
                    Err(e) => {
                        termination = Termination::Aborted {
                            t: t_sub,
                            reason: e.to_string(),
                        };
                        break 'outer;
                    }
                };
                warm = Some(op_sub.i);
            }
            state = match advance_state(&state, &op_sub, cfg.dt, params, cfg) {
                Ok(s) => s,
                Err(e) => {
                    termination = Termination::Aborted {
                        t: t_sub,
                        reason: e.to_string(),
                    };
                    break 'outer;
                }
            };
        }
        step += cfg.substeps as u64;
        if step > n_steps {
            step = n_steps;
        }
    }

    Ok(Trace {
        samples,
        params: params.clone(),
        solver: cfg.clone(),
        drive: wf.clone(),
        termination,
    })
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("empty trace")]
pub struct EmptyTrace;

/// Project a trace onto the I-V plane, preserving time order.
pub fn hysteresis_curve(trace: &Trace) -> Result<Vec<(f64, f64)>, EmptyTrace> {
    if trace.samples.is_empty() {
        return Err(EmptyTrace);
    }
    Ok(trace.samples.iter().map(|s| (s.v, s.i)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_drive(t_end: f64) -> Waveform {
        Waveform::PiecewiseLinear {
            breakpoints: vec![(0.0, 0.0), (t_end, 0.0)],
            t_end,
        }
    }

    #[test]
    fn zero_drive_holds_everything() {
        let p = ModelParams::default();
        let cfg = SolverConfig {
            dt: 1e-3,
            ..SolverConfig::default()
        };
        let trace = simulate(&zero_drive(0.05), &p, &cfg, 1.4).unwrap();
        assert!(trace.completed());
        assert_eq!(trace.samples.len(), 51);
        for s in &trace.samples {
            assert_eq!(s.i, 0.0);
            assert_eq!(s.v_g, 0.0);
            assert_eq!(s.w_eff, 1.4);
            assert_eq!(s.w_raw, 1.4);
        }
    }

    #[test]
    fn substeps_thin_the_output() {
        let p = ModelParams::default();
        let cfg = SolverConfig {
            dt: 1e-3,
            substeps: 5,
            ..SolverConfig::default()
        };
        let trace = simulate(&zero_drive(0.05), &p, &cfg, 1.4).unwrap();
        assert_eq!(trace.samples.len(), 11);
        assert!((trace.samples[1].t - 5e-3).abs() < 1e-15);
        assert!((trace.samples.last().unwrap().t - 0.05).abs() < 1e-12);
    }

    #[test]
    fn simulate_is_reproducible() {
        let p = ModelParams::default();
        let cfg = SolverConfig {
            dt: 1e-3,
            ..SolverConfig::default()
        };
        let wf = Waveform::Triangular {
            amplitude_pos: 0.8,
            amplitude_neg: 0.5,
            period: 0.2,
            t_end: 0.2,
        };
        let a = simulate(&wf, &p, &cfg, 1.3).unwrap();
        let b = simulate(&wf, &p, &cfg, 1.3).unwrap();
        assert_eq!(a.samples.len(), b.samples.len());
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert_eq!(x.i.to_bits(), y.i.to_bits());
            assert_eq!(x.w_raw.to_bits(), y.w_raw.to_bits());
        }
    }

    #[test]
    fn bad_initial_width_rejected() {
        let p = ModelParams::default();
        let cfg = SolverConfig::default();
        assert!(matches!(
            simulate(&zero_drive(0.01), &p, &cfg, 0.05),
            Err(SimulateError::BadInitialWidth { .. })
        ));
        // modified variant requires w0 within the clamp bounds
        assert!(matches!(
            simulate(&zero_drive(0.01), &p, &cfg, 2.5),
            Err(SimulateError::BadInitialWidth { .. })
        ));
        // original variant allows it
        let orig = ModelParams::original();
        assert!(simulate(&zero_drive(0.01), &orig, &cfg, 2.5).is_ok());
    }

    #[test]
    fn hysteresis_projection_preserves_order_and_count() {
        let p = ModelParams::default();
        let cfg = SolverConfig {
            dt: 1e-3,
            ..SolverConfig::default()
        };
        let trace = simulate(&zero_drive(0.01), &p, &cfg, 1.4).unwrap();
        let curve = hysteresis_curve(&trace).unwrap();
        assert_eq!(curve.len(), trace.samples.len());
        assert!(curve.iter().all(|&(v, i)| v == 0.0 && i == 0.0));

        let empty = Trace {
            samples: vec![],
            params: p,
            solver: cfg,
            drive: zero_drive(0.01),
            termination: Termination::Completed,
        };
        assert!(hysteresis_curve(&empty).is_err());
    }
}
