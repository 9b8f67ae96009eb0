//! Implicit operating-point solution and state integration.
//!
//! The device current depends on the barrier voltage, which depends back on
//! the current through the series resistance. Each instant therefore solves
//! `i = tunnel_current(v - r_s*i, w)` with damped Newton iteration, falling
//! back to bisection bracketed by the tunnel curve's physical-branch peak.
//!
//! The tunnel element can only carry a bounded current at a given width
//! (the branch peak); when the applied voltage asks for more than that, no
//! self-consistent solution exists on the physical branch. The solver then
//! returns the saturated point: barrier voltage pinned at the peak and the
//! remaining drop carried by the series resistance. `v_g = v - r_s*i` and
//! passivity still hold exactly there, but the residual contract does not;
//! this only occurs under overdrive (roughly |v| above 1.6 to 4 V depending
//! on width), outside the fitted operating regime.

use crate::model::{
    clamp_width, state_derivative, tunnel_current, DeviceState, ModelError, OperatingPoint,
};
use crate::params::{ModelParams, Variant};
use thiserror::Error;

/// Time integrator selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OdeMethod {
    Rk4,
    Euler,
}

impl std::fmt::Display for OdeMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OdeMethod::Rk4 => write!(f, "rk4"),
            OdeMethod::Euler => write!(f, "euler"),
        }
    }
}

/// Numerical controls for the operating-point solver and the ODE stepper.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Relative residual tolerance on |i - tunnel(v_g)|.
    pub newton_tol: f64,
    /// Newton iteration budget per solve.
    pub newton_max_iter: usize,
    /// Upper bound on the bisection current bracket, A.
    pub bisect_span: f64,
    /// Integration method.
    pub ode_method: OdeMethod,
    /// Integration step, s.
    pub dt: f64,
    /// Integration steps per recorded output sample.
    pub substeps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            newton_tol: 1e-12,
            newton_max_iter: 50,
            bisect_span: 10.0,
            ode_method: OdeMethod::Rk4,
            dt: 1e-4,
            substeps: 1,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("no convergence solving operating point at v = {v} V, w = {w} nm")]
    NoConvergence { v: f64, w: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid solver config: {0}")]
    BadConfig(String),
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !self.newton_tol.is_finite() || self.newton_tol <= 0.0 {
            return Err(SolverError::BadConfig(format!(
                "newton_tol must be positive, got {}",
                self.newton_tol
            )));
        }
        if self.newton_max_iter < 1 {
            return Err(SolverError::BadConfig(
                "newton_max_iter must be >= 1".into(),
            ));
        }
        if !self.bisect_span.is_finite() || self.bisect_span <= 0.0 {
            return Err(SolverError::BadConfig(format!(
                "bisect_span must be positive, got {}",
                self.bisect_span
            )));
        }
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(SolverError::BadConfig(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if self.substeps < 1 {
            return Err(SolverError::BadConfig("substeps must be >= 1".into()));
        }
        Ok(())
    }
}

/// Absolute current floor in the residual criterion, A.
const RESIDUAL_FLOOR: f64 = 1e-9;

/// Largest bias for which the barrier geometry stays valid at this width,
/// found by bisection. Fails if the width itself is outside the model
/// domain (no bias is valid).
pub fn bias_validity_edge(w: f64, params: &ModelParams) -> Result<f64, ModelError> {
    crate::model::barrier_geometry(w, 0.0, params)?;
    let mut lo = 0.0_f64;
    // beyond the zero of the w2 denominator nothing is valid
    let mut hi = (3.0 * params.phi0 + 4.0 * params.lm / w) / 2.0 + 1.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if crate::model::barrier_geometry(w, mid, params).is_ok() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Location and height of the tunnel curve's physical-branch maximum at
/// this width: the largest current the barrier can carry. Coarse scan plus
/// ternary refinement; the curve rises from zero to a single peak before
/// the Simmons bracket changes sign near the validity edge.
pub fn branch_peak(w: f64, params: &ModelParams) -> Result<(f64, f64), ModelError> {
    let edge = bias_validity_edge(w, params)?;
    let current = |vg: f64| tunnel_current(vg, w, params).unwrap_or(f64::NEG_INFINITY);
    const N: usize = 48;
    let mut best_k = 0usize;
    let mut best_i = 0.0_f64;
    for k in 0..=N {
        let vg = edge * k as f64 / (N + 1) as f64;
        let it = current(vg);
        if it > best_i {
            best_i = it;
            best_k = k;
        }
    }
    let step = edge / (N + 1) as f64;
    let mut lo = step * best_k.saturating_sub(1) as f64;
    let mut hi = (step * (best_k + 1) as f64).min(edge * (1.0 - 1e-12));
    for _ in 0..80 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if current(m1) < current(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let vg_peak = 0.5 * (lo + hi);
    let i_peak = current(vg_peak);
    if i_peak.is_nan() || i_peak < 0.0 {
        return Err(ModelError::DegenerateBarrier { w, v_g: vg_peak });
    }
    Ok((vg_peak, i_peak))
}

/// Solve the operating point with a cold initial guess `v / (r_s + 10 kohm)`.
pub fn solve_operating_point(
    v: f64,
    w_eff: f64,
    params: &ModelParams,
    cfg: &SolverConfig,
) -> Result<OperatingPoint, SolverError> {
    solve_operating_point_warm(v, w_eff, params, cfg, None)
}

/// Solve the operating point, optionally warm-starting Newton from the
/// previous instant's current. Warm and cold starts converge to the same
/// root within the residual tolerance.
pub fn solve_operating_point_warm(
    v: f64,
    w_eff: f64,
    params: &ModelParams,
    cfg: &SolverConfig,
    i_prev: Option<f64>,
) -> Result<OperatingPoint, SolverError> {
    if v == 0.0 {
        // unique root by passivity
        return Ok(OperatingPoint {
            v,
            i: 0.0,
            v_g: 0.0,
        });
    }
    if params.r_s == 0.0 {
        let i = tunnel_current(v, w_eff, params)?;
        return Ok(OperatingPoint { v, i, v_g: v });
    }
    // the current formula is odd in v_g, so solve in the positive half-plane
    let sign = if v > 0.0 { 1.0 } else { -1.0 };
    let va = v.abs();
    let warm = i_prev
        .map(|i| i * sign)
        .filter(|i| i.is_finite() && *i > 0.0);
    let i_pos = solve_positive(va, w_eff, params, cfg, warm)?;
    Ok(OperatingPoint {
        v,
        i: sign * i_pos,
        v_g: sign * (va - params.r_s * i_pos),
    })
}

/// Root of g(i) = i - tunnel(va - r_s*i) for va > 0, or the saturated
/// load-line current when the branch peak cannot carry the load.
fn solve_positive(
    va: f64,
    w: f64,
    params: &ModelParams,
    cfg: &SolverConfig,
    warm: Option<f64>,
) -> Result<f64, SolverError> {
    let g = |i: f64| -> Option<f64> {
        if !i.is_finite() || i < 0.0 {
            return None;
        }
        // the physical branch lives at i >= 0, vg >= 0; beyond it the
        // current expression offers spurious anti-passive roots (negative
        // bracket past the peak, odd reflection past vg = 0). Rounding noise
        // at the vg = 0 endpoint is clamped, not rejected.
        let vg = va - params.r_s * i;
        if vg < -1e-9 {
            return None;
        }
        tunnel_current(vg.max(0.0), w, params).ok().map(|it| i - it)
    };
    let converged = |i: f64, gi: f64| gi.abs() <= cfg.newton_tol * i.abs().max(RESIDUAL_FLOOR);
    // on the rising branch dg/di = 1 + r_s * di_t/dv_g exceeds 1; a
    // converged root with a smaller slope sits on the falling branch and is
    // rejected (the margin admits the coalesced pair at the peak)
    let rising = |slope: f64| slope >= 0.999;
    let probe_slope = |i: f64| -> Option<f64> {
        let delta = (1e-6 * i.abs()).max(1e-9);
        match (g(i + delta), g(i - delta)) {
            (Some(a), Some(b)) => Some((a - b) / (2.0 * delta)),
            _ => None,
        }
    };

    // damped Newton with central-difference slope
    let mut i_n = warm.unwrap_or(va / (params.r_s + 1e4));
    if let Some(mut g_n) = g(i_n) {
        let mut last_slope: Option<f64> = None;
        for _ in 0..cfg.newton_max_iter {
            if converged(i_n, g_n) {
                break;
            }
            let delta = (1e-6 * i_n.abs()).max(1e-9);
            let (gp, gm) = match (g(i_n + delta), g(i_n - delta)) {
                (Some(a), Some(b)) => (a, b),
                _ => break,
            };
            let slope = (gp - gm) / (2.0 * delta);
            last_slope = Some(slope);
            if slope == 0.0 || !slope.is_finite() {
                break;
            }
            let full_step = -g_n / slope;
            let mut damping = 1.0;
            let mut accepted = false;
            for _ in 0..12 {
                let i_try = i_n + damping * full_step;
                if let Some(g_try) = g(i_try) {
                    if g_try.abs() < g_n.abs() {
                        i_n = i_try;
                        g_n = g_try;
                        accepted = true;
                        break;
                    }
                }
                damping *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if converged(i_n, g_n) {
            let branch_slope = last_slope.or_else(|| probe_slope(i_n));
            if branch_slope.is_some_and(rising) {
                return Ok(i_n);
            }
        }
    }

    // bisection on the rising branch: g <= 0 at the load-line current of the
    // branch peak, g > 0 at i = va/r_s (where v_g = 0)
    let (vg_peak, i_peak) = branch_peak(w, params)?;
    let load_at_peak = (va - vg_peak) / params.r_s;
    if load_at_peak > i_peak {
        // overdriven: barrier pinned at its peak, series resistance takes
        // the rest of the drop
        return Ok(load_at_peak);
    }
    let mut lo = load_at_peak.max(0.0);
    let mut hi = (va / params.r_s).min(cfg.bisect_span);
    let mut g_lo = match g(lo) {
        Some(x) => x,
        None => return Err(SolverError::NoConvergence { v: va, w }),
    };
    if converged(lo, g_lo) {
        return Ok(lo);
    }
    let g_hi = match g(hi) {
        Some(x) => x,
        None => return Err(SolverError::NoConvergence { v: va, w }),
    };
    if converged(hi, g_hi) {
        return Ok(hi);
    }
    if g_lo > 0.0 || g_hi < 0.0 {
        return Err(SolverError::NoConvergence { v: va, w });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let g_mid = match g(mid) {
            Some(x) => x,
            None => return Err(SolverError::NoConvergence { v: va, w }),
        };
        if converged(mid, g_mid) {
            return Ok(mid);
        }
        if (g_mid < 0.0) == (g_lo < 0.0) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi.abs() {
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(SolverError::NoConvergence { v: va, w })
}

/// Residual of an operating point against the current equation, A.
pub fn op_residual(
    op: &OperatingPoint,
    w_eff: f64,
    params: &ModelParams,
) -> Result<f64, ModelError> {
    Ok((op.i - tunnel_current(op.v_g, w_eff, params)?).abs())
}

/// Advance the raw width by one step of the configured method, holding the
/// applied voltage of `op` across the step. RK4 re-solves the operating
/// point at each internal stage using the stage's clamped width; stages
/// evaluate but never mutate state. After the step the width is clamped,
/// and in the `Modified` variant the raw state is reset to the clamped
/// value so the integrator cannot wind up past the bounds.
pub fn advance_state(
    state: &DeviceState,
    op: &OperatingPoint,
    dt: f64,
    params: &ModelParams,
    cfg: &SolverConfig,
) -> Result<DeviceState, SolverError> {
    let v = op.v;
    let k1 = state_derivative(state.w_eff, op.i, op.v_g, params);
    // consecutive stages often land on the same clamped width (state pinned
    // at a bound, or zero rate); reuse the solve in that case
    let mut warm = op.i;
    let mut last = (state.w_eff, k1);
    let stage_rate =
        |w_raw_stage: f64, warm: &mut f64, last: &mut (f64, f64)| -> Result<f64, SolverError> {
            let w_stage = clamp_width(w_raw_stage, params);
            if w_stage == last.0 {
                return Ok(last.1);
            }
            let op_stage = solve_operating_point_warm(v, w_stage, params, cfg, Some(*warm))?;
            *warm = op_stage.i;
            let rate = state_derivative(w_stage, op_stage.i, op_stage.v_g, params);
            *last = (w_stage, rate);
            Ok(rate)
        };
    let w_next = match cfg.ode_method {
        OdeMethod::Euler => state.w_raw + dt * k1,
        OdeMethod::Rk4 => {
            let k2 = stage_rate(state.w_raw + 0.5 * dt * k1, &mut warm, &mut last)?;
            let k3 = stage_rate(state.w_raw + 0.5 * dt * k2, &mut warm, &mut last)?;
            let k4 = stage_rate(state.w_raw + dt * k3, &mut warm, &mut last)?;
            state.w_raw + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        }
    };
    let w_eff = clamp_width(w_next, params);
    let w_raw = match params.variant {
        Variant::Modified => w_eff,
        Variant::Original => w_next,
    };
    Ok(DeviceState { w_raw, w_eff })
}
