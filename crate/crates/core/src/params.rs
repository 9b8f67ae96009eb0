//! Model parameters for the tunnel-barrier memristor.
//!
//! All physical constants (electron charge, mass, Planck constant,
//! permittivity) are pre-folded into three numeric coefficients exactly as
//! the reference subcircuit does: `j_prefactor` (0.0617), `b_coeff` (10.246)
//! and `lm` (0.0998, the constant product of the barrier-lowering length
//! scale and the tunnel width). Working units project-wide: energies in eV,
//! lengths in nm, voltages in V, currents in A, time in s.

use thiserror::Error;

/// Which derivative/limiter semantics apply.
///
/// `Original` is the undamped model: all four `k` factors are forced to 1
/// and the width is never clamped. `Modified` applies the configured `k`
/// damping factors and pins the effective width to `[w_min, w_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Original,
    Modified,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Variant::Original => write!(f, "original"),
            Variant::Modified => write!(f, "modified"),
        }
    }
}

/// Full parameter set of the device model.
///
/// Defaults are the fitted values that produced the reference I-V loops:
/// barrier height 0.95 eV, series resistance 215 ohm, and the derivative
/// scales listed field by field below.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Barrier height, eV.
    pub phi0: f64,
    /// Product of barrier-lowering length and width, eV*nm (lambda = lm / w).
    pub lm: f64,
    /// Inner image-plane distance w1, nm. Consistent with 1.2*lm/phi0.
    pub w1_const: f64,
    /// Current prefactor folding j0*A and unit conversions, A*nm^2.
    pub j_prefactor: f64,
    /// Tunneling exponent coefficient, nm^-1 * eV^-1/2.
    pub b_coeff: f64,
    /// Series/electrode resistance, ohm.
    pub r_s: f64,
    /// OFF derivative magnitude scale, nm/s.
    pub f_off: f64,
    /// ON derivative magnitude scale, nm/s.
    pub f_on: f64,
    /// OFF current scale in the sinh argument, A.
    pub i_off: f64,
    /// ON current scale in the sinh argument, A.
    pub i_on: f64,
    /// OFF width set-point in the window exponent, nm.
    pub a_off: f64,
    /// ON width set-point in the window exponent, nm.
    pub a_on: f64,
    /// Characteristic width, nm.
    pub w_c: f64,
    /// Current scale in the window exponents, A.
    pub b_cur: f64,
    /// Outer OFF damping factor, dimensionless.
    pub k_off1: f64,
    /// Inner OFF damping factor, dimensionless.
    pub k_off2: f64,
    /// Outer ON damping factor, dimensionless.
    pub k_on1: f64,
    /// Inner ON damping factor, dimensionless.
    pub k_on2: f64,
    /// Lower physical bound on the tunnel width, nm.
    pub w_min: f64,
    /// Upper physical bound on the tunnel width, nm.
    pub w_max: f64,
    /// Model variant selector.
    pub variant: Variant,
}

impl Default for ModelParams {
    /// The modified-model fit: damped OFF derivative and hard limiter active.
    fn default() -> Self {
        ModelParams {
            phi0: 0.95,
            lm: 0.0998,
            w1_const: 0.1261,
            j_prefactor: 0.0617,
            b_coeff: 10.246,
            r_s: 215.0,
            f_off: 3.5e3,
            f_on: 2.0e6,
            i_off: 115e-6,
            i_on: 8.9e-6,
            a_off: 1.2,
            a_on: 1.8,
            w_c: 0.095,
            b_cur: 600e-6,
            k_off1: 1.0,
            k_off2: 0.5,
            k_on1: 1.0,
            k_on2: 1.0,
            w_min: 1.0,
            w_max: 2.0,
            variant: Variant::Modified,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("parameter `{name}` must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("series resistance r_s must be non-negative, got {0}")]
    NegativeSeriesResistance(f64),
    #[error("width bounds must satisfy 0 < w_min < w_max, got [{w_min}, {w_max}]")]
    BadWidthBounds { w_min: f64, w_max: f64 },
    #[error(
        "w1_const = {w1_const} inconsistent with 1.2*lm/phi0 = {expected} (tolerance 1e-3 nm)"
    )]
    InconsistentW1 { w1_const: f64, expected: f64 },
    #[error("unknown parameter name `{0}`")]
    UnknownName(String),
    #[error("parameter `{name}` is not numeric (use the variant field)")]
    NotNumeric { name: &'static str },
    #[error("the original variant requires unit k factors, got {name} = {value}")]
    DampedOriginal { name: &'static str, value: f64 },
}

/// Names of the numeric fields, in declaration order. Used by the config
/// parser and the fitter for access by name.
pub const FIELD_NAMES: &[&str] = &[
    "phi0",
    "lm",
    "w1_const",
    "j_prefactor",
    "b_coeff",
    "r_s",
    "f_off",
    "f_on",
    "i_off",
    "i_on",
    "a_off",
    "a_on",
    "w_c",
    "b_cur",
    "k_off1",
    "k_off2",
    "k_on1",
    "k_on2",
    "w_min",
    "w_max",
];

impl ModelParams {
    /// The undamped model with the same fitted constants: every `k` factor
    /// forced to 1 and no width clamp.
    pub fn original() -> Self {
        ModelParams {
            k_off1: 1.0,
            k_off2: 1.0,
            k_on1: 1.0,
            k_on2: 1.0,
            variant: Variant::Original,
            ..ModelParams::default()
        }
    }

    /// This parameter set with the variant (and its implied k values)
    /// switched. Switching to `Original` forces all k factors to 1;
    /// switching to `Modified` leaves the configured k values in place.
    pub fn with_variant(&self, variant: Variant) -> Self {
        let mut p = self.clone();
        p.variant = variant;
        if variant == Variant::Original {
            p.k_off1 = 1.0;
            p.k_off2 = 1.0;
            p.k_on1 = 1.0;
            p.k_on2 = 1.0;
        }
        p
    }

    /// Check every structural invariant.
    pub fn validate(&self) -> Result<(), ParamError> {
        let positive: &[(&str, f64)] = &[
            ("phi0", self.phi0),
            ("lm", self.lm),
            ("w1_const", self.w1_const),
            ("j_prefactor", self.j_prefactor),
            ("b_coeff", self.b_coeff),
            ("f_off", self.f_off),
            ("f_on", self.f_on),
            ("i_off", self.i_off),
            ("i_on", self.i_on),
            ("a_off", self.a_off),
            ("a_on", self.a_on),
            ("w_c", self.w_c),
            ("b_cur", self.b_cur),
        ];
        for &(name, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(ParamError::NonPositive { name, value });
            }
        }
        if !self.r_s.is_finite() || self.r_s < 0.0 {
            return Err(ParamError::NegativeSeriesResistance(self.r_s));
        }
        if self.w_min.is_nan()
            || self.w_max.is_nan()
            || self.w_min <= 0.0
            || self.w_min >= self.w_max
        {
            return Err(ParamError::BadWidthBounds {
                w_min: self.w_min,
                w_max: self.w_max,
            });
        }
        let expected = 1.2 * self.lm / self.phi0;
        if (self.w1_const - expected).abs() > 1e-3 {
            return Err(ParamError::InconsistentW1 {
                w1_const: self.w1_const,
                expected,
            });
        }
        // the original variant is the undamped model by definition
        if self.variant == Variant::Original {
            for (name, value) in [
                ("k_off1", self.k_off1),
                ("k_off2", self.k_off2),
                ("k_on1", self.k_on1),
                ("k_on2", self.k_on2),
            ] {
                if value != 1.0 {
                    return Err(ParamError::DampedOriginal { name, value });
                }
            }
        }
        Ok(())
    }

    /// Read a numeric field by name.
    pub fn get(&self, name: &str) -> Result<f64, ParamError> {
        Ok(match name {
            "phi0" => self.phi0,
            "lm" => self.lm,
            "w1_const" => self.w1_const,
            "j_prefactor" => self.j_prefactor,
            "b_coeff" => self.b_coeff,
            "r_s" => self.r_s,
            "f_off" => self.f_off,
            "f_on" => self.f_on,
            "i_off" => self.i_off,
            "i_on" => self.i_on,
            "a_off" => self.a_off,
            "a_on" => self.a_on,
            "w_c" => self.w_c,
            "b_cur" => self.b_cur,
            "k_off1" => self.k_off1,
            "k_off2" => self.k_off2,
            "k_on1" => self.k_on1,
            "k_on2" => self.k_on2,
            "w_min" => self.w_min,
            "w_max" => self.w_max,
            "variant" => return Err(ParamError::NotNumeric { name: "variant" }),
            other => return Err(ParamError::UnknownName(other.to_string())),
        })
    }

    /// Write a numeric field by name. Does not re-validate; call
    /// [`ModelParams::validate`] after a batch of updates.
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), ParamError> {
        let slot = match name {
            "phi0" => &mut self.phi0,
            "lm" => &mut self.lm,
            "w1_const" => &mut self.w1_const,
            "j_prefactor" => &mut self.j_prefactor,
            "b_coeff" => &mut self.b_coeff,
            "r_s" => &mut self.r_s,
            "f_off" => &mut self.f_off,
            "f_on" => &mut self.f_on,
            "i_off" => &mut self.i_off,
            "i_on" => &mut self.i_on,
            "a_off" => &mut self.a_off,
            "a_on" => &mut self.a_on,
            "w_c" => &mut self.w_c,
            "b_cur" => &mut self.b_cur,
            "k_off1" => &mut self.k_off1,
            "k_off2" => &mut self.k_off2,
            "k_on1" => &mut self.k_on1,
            "k_on2" => &mut self.k_on2,
            "w_min" => &mut self.w_min,
            "w_max" => &mut self.w_max,
            "variant" => return Err(ParamError::NotNumeric { name: "variant" }),
            other => return Err(ParamError::UnknownName(other.to_string())),
        };
        *slot = value;
        Ok(())
    }
}
