//! Drive-voltage waveforms and the named scenario presets.

use thiserror::Error;

/// Calibrated positive amplitude of the `fig2-drive` preset, V.
///
/// The drive this preset reconstructs is only known qualitatively; the
/// amplitudes were calibrated so that OFF switching concentrates in the
/// first quarter cycle, ON switching in the second half, and the knee
/// operating points land near (0.82 V, 0.64 mA) and (-0.53 V, -0.28 mA).
/// They are fitted values, not measured constants.
pub const FIG2_AMPLITUDE_POS: f64 = 1.58;
/// Calibrated negative amplitude of the `fig2-drive` preset, V.
pub const FIG2_AMPLITUDE_NEG: f64 = 0.93;

/// Piecewise drive description. Amplitudes are signed levels in volts,
/// times in seconds.
#[derive(Debug, Clone, PartialEq)]
pub enum Waveform {
    /// One linear up-down-down-up cycle per period:
    /// 0 -> +amplitude_pos -> 0 -> -amplitude_neg -> 0, equal quarter
    /// segments, repeated until t_end.
    Triangular {
        amplitude_pos: f64,
        amplitude_neg: f64,
        period: f64,
        t_end: f64,
    },
    /// amplitude_pos * sin(2 pi t / period).
    Sine {
        amplitude_pos: f64,
        period: f64,
        t_end: f64,
    },
    /// Linear ramp 0 -> amplitude_pos over `period`, then held. The level
    /// may be negative.
    RampHold {
        amplitude_pos: f64,
        period: f64,
        t_end: f64,
    },
    /// Linear interpolation between (t, v) breakpoints.
    PiecewiseLinear {
        breakpoints: Vec<(f64, f64)>,
        t_end: f64,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveformError {
    #[error("sample time {t} outside [0, {t_end}]")]
    OutOfRange { t: f64, t_end: f64 },
    #[error("invalid waveform: {0}")]
    Invalid(String),
}

impl Waveform {
    pub fn t_end(&self) -> f64 {
        match *self {
            Waveform::Triangular { t_end, .. }
            | Waveform::Sine { t_end, .. }
            | Waveform::RampHold { t_end, .. }
            | Waveform::PiecewiseLinear { t_end, .. } => t_end,
        }
    }

    pub fn validate(&self) -> Result<(), WaveformError> {
        let t_end = self.t_end();
        if !t_end.is_finite() || t_end <= 0.0 {
            return Err(WaveformError::Invalid(format!(
                "t_end must be positive, got {t_end}"
            )));
        }
        match self {
            Waveform::Triangular {
                amplitude_pos,
                amplitude_neg,
                period,
                ..
            } => {
                if !period.is_finite() || *period <= 0.0 {
                    return Err(WaveformError::Invalid("period must be positive".into()));
                }
                if *amplitude_pos < 0.0 || *amplitude_neg < 0.0 {
                    return Err(WaveformError::Invalid(
                        "triangular amplitudes must be non-negative".into(),
                    ));
                }
            }
            Waveform::Sine { period, .. } | Waveform::RampHold { period, .. } => {
                if !period.is_finite() || *period <= 0.0 {
                    return Err(WaveformError::Invalid("period must be positive".into()));
                }
            }
            Waveform::PiecewiseLinear { breakpoints, .. } => {
                if breakpoints.is_empty() {
                    return Err(WaveformError::Invalid("breakpoints are empty".into()));
                }
                for pair in breakpoints.windows(2) {
                    if pair[1].0 <= pair[0].0 {
                        return Err(WaveformError::Invalid(format!(
                            "breakpoint times must be strictly increasing, got {} then {}",
                            pair[0].0, pair[1].0
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Drive voltage at time `t` in `[0, t_end]`.
    pub fn sample(&self, t: f64) -> Result<f64, WaveformError> {
        let t_end = self.t_end();
        // tolerate last-sample rounding from accumulated step counts
        let t = if t > t_end && t <= t_end * (1.0 + 1e-9) + 1e-12 {
            t_end
        } else {
            t
        };
        if !(0.0..=t_end).contains(&t) {
            return Err(WaveformError::OutOfRange { t, t_end });
        }
        Ok(match *self {
            Waveform::Triangular {
                amplitude_pos,
                amplitude_neg,
                period,
                ..
            } => {
                let u = (t % period) / period;
                if u < 0.25 {
                    amplitude_pos * 4.0 * u
                } else if u < 0.5 {
                    amplitude_pos * (2.0 - 4.0 * u)
                } else if u < 0.75 {
                    -amplitude_neg * (4.0 * u - 2.0)
                } else {
                    -amplitude_neg * (4.0 - 4.0 * u)
                }
            }
            Waveform::Sine {
                amplitude_pos,
                period,
                ..
            } => amplitude_pos * (2.0 * std::f64::consts::PI * t / period).sin(),
            Waveform::RampHold {
                amplitude_pos,
                period,
                ..
            } => amplitude_pos * (t / period).min(1.0),
            Waveform::PiecewiseLinear {
                ref breakpoints, ..
            } => {
                let first = breakpoints[0];
                let last = breakpoints[breakpoints.len() - 1];
                if t <= first.0 {
                    first.1
                } else if t >= last.0 {
                    last.1
                } else {
                    let idx = breakpoints.partition_point(|&(bt, _)| bt <= t);
                    let (t0, v0) = breakpoints[idx - 1];
                    let (t1, v1) = breakpoints[idx];
                    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
                }
            }
        })
    }

    /// Look up a named drive preset.
    ///
    /// `fig2-drive` is the calibrated single 6 s triangular cycle;
    /// `fig3-stress` ramps 0 -> +9 V over 1 s and holds to 2 s;
    /// `fig4-stress` ramps 0 -> -3 V over 1 s and holds to 2 s.
    pub fn preset(name: &str) -> Option<Waveform> {
        match name {
            "fig2-drive" => Some(Waveform::Triangular {
                amplitude_pos: FIG2_AMPLITUDE_POS,
                amplitude_neg: FIG2_AMPLITUDE_NEG,
                period: 6.0,
                t_end: 6.0,
            }),
            "fig3-stress" => Some(Waveform::RampHold {
                amplitude_pos: 9.0,
                period: 1.0,
                t_end: 2.0,
            }),
            "fig4-stress" => Some(Waveform::RampHold {
                amplitude_pos: -3.0,
                period: 1.0,
                t_end: 2.0,
            }),
            _ => None,
        }
    }

    /// Short human-readable descriptor for trace metadata and CLI echo.
    pub fn describe(&self) -> String {
        match *self {
            Waveform::Triangular {
                amplitude_pos,
                amplitude_neg,
                period,
                t_end,
            } => format!(
                "triangular(amplitude_pos={amplitude_pos}, amplitude_neg={amplitude_neg}, period={period}, t_end={t_end})"
            ),
            Waveform::Sine {
                amplitude_pos,
                period,
                t_end,
            } => format!("sine(amplitude_pos={amplitude_pos}, period={period}, t_end={t_end})"),
            Waveform::RampHold {
                amplitude_pos,
                period,
                t_end,
            } => format!("ramp_hold(amplitude_pos={amplitude_pos}, period={period}, t_end={t_end})"),
            Waveform::PiecewiseLinear {
                ref breakpoints,
                t_end,
            } => format!("piecewise_linear({} breakpoints, t_end={t_end})", breakpoints.len()),
        }
    }
}
