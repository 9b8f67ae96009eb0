//! Derivative-free parameter fitting: Nelder-Mead simplex search over a
//! named subset of the model parameters, minimizing the relative-RMS error
//! of a simulated trace against a reference.

use crate::metrics::{rel_rms_error, ReferenceTrace, Region};
use crate::params::ModelParams;
use crate::solver::SolverConfig;
use crate::transient::simulate;
use crate::waveform::Waveform;
use thiserror::Error;

/// One fit dimension: a parameter name with box bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeParam {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

/// A complete fitting task. The candidate trace is produced by simulating
/// `drive` from `w0` with the candidate parameters.
#[derive(Debug, Clone)]
pub struct FitProblem {
    pub free_parameters: Vec<FreeParam>,
    pub objective_region: Region,
    pub reference: ReferenceTrace,
    /// Maximum number of objective evaluations.
    pub budget: usize,
    pub drive: Waveform,
    pub w0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitStatus {
    Converged,
    BudgetExhausted,
}

/// Best candidate found, its objective, and the evaluation log.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: ModelParams,
    pub error: f64,
    pub evaluations: usize,
    pub status: FitStatus,
    /// Best objective after each evaluation; non-increasing.
    pub best_history: Vec<f64>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("no free parameters given")]
    NoFreeParameters,
    #[error("budget must be >= 1")]
    ZeroBudget,
    #[error("unknown or non-fittable parameter `{0}`")]
    UnknownParameter(String),
    #[error("bounds for `{name}` are not finite and ordered: [{lower}, {upper}]")]
    BadBounds {
        name: String,
        lower: f64,
        upper: f64,
    },
    #[error("start value {value} for `{name}` outside bounds [{lower}, {upper}]")]
    StartOutOfBounds {
        name: String,
        value: f64,
        lower: f64,
        upper: f64,
    },
}

// Standard simplex coefficients: reflection, expansion, contraction, shrink.
const ALPHA: f64 = 1.0;
const GAMMA: f64 = 2.0;
const RHO: f64 = 0.5;
const SIGMA: f64 = 0.5;

struct Objective<'a> {
    problem: &'a FitProblem,
    base: &'a ModelParams,
    cfg: &'a SolverConfig,
    evaluations: usize,
    best: f64,
    best_x: Vec<f64>,
    best_history: Vec<f64>,
}

impl<'a> Objective<'a> {
    /// Evaluate one candidate, coordinate-clipped into the bounds.
    /// Simulation or metric failures mark the candidate infeasible
    /// (infinite objective) rather than aborting the search.
    fn eval(&mut self, x: &mut [f64]) -> f64 {
        for (xi, fp) in x.iter_mut().zip(&self.problem.free_parameters) {
            *xi = xi.clamp(fp.lower, fp.upper);
        }
        self.evaluations += 1;
        let mut params = self.base.clone();
        for (xi, fp) in x.iter().zip(&self.problem.free_parameters) {
            params.set(&fp.name, *xi).expect("validated name");
        }
        let f = if params.validate().is_err() {
            f64::INFINITY
        } else {
            match simulate(&self.problem.drive, &params, self.cfg, self.problem.w0) {
                Ok(trace) if trace.completed() => rel_rms_error(
                    &trace.tvi(),
                    &self.problem.reference,
                    self.problem.objective_region,
                )
                .unwrap_or(f64::INFINITY),
                _ => f64::INFINITY,
            }
        };
        if f < self.best {
            self.best = f;
            self.best_x = x.to_vec();
        }
        self.best_history.push(self.best);
        f
    }

    fn exhausted(&self) -> bool {
        self.evaluations >= self.problem.budget
    }
}

/// Minimize the fit objective within the evaluation budget.
///
/// The initial simplex is the start point plus one vertex per free
/// parameter, perturbed by +5% of its bound range (or -5% when the start
/// sits against the upper bound). Fully deterministic.
pub fn fit_parameters(
    problem: &FitProblem,
    base: &ModelParams,
    cfg: &SolverConfig,
) -> Result<FitResult, FitError> {
    let free = &problem.free_parameters;
    if free.is_empty() {
        return Err(FitError::NoFreeParameters);
    }
    if problem.budget == 0 {
        return Err(FitError::ZeroBudget);
    }
    let mut x0 = Vec::with_capacity(free.len());
    for fp in free {
        if !(fp.lower.is_finite() && fp.upper.is_finite() && fp.lower < fp.upper) {
            return Err(FitError::BadBounds {
                name: fp.name.clone(),
                lower: fp.lower,
                upper: fp.upper,
            });
        }
        let value = base
            .get(&fp.name)
            .map_err(|_| FitError::UnknownParameter(fp.name.clone()))?;
        if value < fp.lower || value > fp.upper {
            return Err(FitError::StartOutOfBounds {
                name: fp.name.clone(),
                value,
                lower: fp.lower,
                upper: fp.upper,
            });
        }
        x0.push(value);
    }

    let n = free.len();
    let mut obj = Objective {
        problem,
        base,
        cfg,
        evaluations: 0,
        best: f64::INFINITY,
        best_x: x0.clone(),
        best_history: Vec::new(),
    };

    let finish = |obj: Objective, status: FitStatus| -> Result<FitResult, FitError> {
        let mut params = base.clone();
        for (xi, fp) in obj.best_x.iter().zip(free) {
            params.set(&fp.name, *xi).expect("validated name");
        }
        Ok(FitResult {
            params,
            error: obj.best,
            evaluations: obj.evaluations,
            status,
            best_history: obj.best_history,
        })
    };

    // vertex 0 is the start point so the result can never be worse than it
    let mut simplex: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n + 1);
    let mut v0 = x0.clone();
    let f0 = obj.eval(&mut v0);
    simplex.push((f0, v0));
    if obj.exhausted() {
        return finish(obj, FitStatus::BudgetExhausted);
    }
    for k in 0..n {
        let span = free[k].upper - free[k].lower;
        let mut v = x0.clone();
        let stepped = v[k] + 0.05 * span;
        v[k] = if stepped <= free[k].upper {
            stepped
        } else {
            v[k] - 0.05 * span
        };
        let f = obj.eval(&mut v);
        simplex.push((f, v));
        if obj.exhausted() {
            return finish(obj, FitStatus::BudgetExhausted);
        }
    }

    loop {
        simplex.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));

        // convergence: objective spread and simplex diameter both tiny
        let f_best = simplex[0].0;
        let f_worst = simplex[n].0;
        let diameter: f64 = (0..n)
            .map(|k| {
                let lo = simplex
                    .iter()
                    .map(|(_, v)| v[k])
                    .fold(f64::INFINITY, f64::min);
                let hi = simplex
                    .iter()
                    .map(|(_, v)| v[k])
                    .fold(f64::NEG_INFINITY, f64::max);
                (hi - lo) / (free[k].upper - free[k].lower)
            })
            .fold(0.0, f64::max);
        if (f_worst.is_finite() && (f_worst - f_best).abs() <= 1e-12 * f_best.abs().max(1e-30))
            || diameter <= 1e-10
        {
            return finish(obj, FitStatus::Converged);
        }

        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|(_, v)| v[k]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].1.clone();
        let f_second_worst = simplex[n - 1].0;

        let mut reflected: Vec<f64> = centroid
            .iter()
            .zip(&worst)
            .map(|(c, w)| c + ALPHA * (c - w))
            .collect();
        let f_reflected = obj.eval(&mut reflected);
        if obj.exhausted() {
            return finish(obj, FitStatus::BudgetExhausted);
        }

        if f_reflected < simplex[0].0 {
            let mut expanded: Vec<f64> = centroid
                .iter()
                .zip(&reflected)
                .map(|(c, r)| c + GAMMA * (r - c))
                .collect();
            let f_expanded = obj.eval(&mut expanded);
            simplex[n] = if f_expanded < f_reflected {
                (f_expanded, expanded)
            } else {
                (f_reflected, reflected)
            };
            if obj.exhausted() {
                return finish(obj, FitStatus::BudgetExhausted);
            }
            continue;
        }
        if f_reflected < f_second_worst {
            simplex[n] = (f_reflected, reflected);
            continue;
        }

        // contraction, outside or inside of the worst vertex
        let (mut contracted, against): (Vec<f64>, f64) = if f_reflected < simplex[n].0 {
            (
                centroid
                    .iter()
                    .zip(&reflected)
                    .map(|(c, r)| c + RHO * (r - c))
                    .collect(),
                f_reflected,
            )
        } else {
            (
                centroid
                    .iter()
                    .zip(&worst)
                    .map(|(c, w)| c + RHO * (w - c))
                    .collect(),
                simplex[n].0,
            )
        };
        let f_contracted = obj.eval(&mut contracted);
        if obj.exhausted() {
            return finish(obj, FitStatus::BudgetExhausted);
        }
        if f_contracted <= against {
            simplex[n] = (f_contracted, contracted);
            continue;
        }

        // shrink everything toward the best vertex
        let best = simplex[0].1.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let mut shrunk: Vec<f64> = best
                .iter()
                .zip(&vertex.1)
                .map(|(b, v)| b + SIGMA * (v - b))
                .collect();
            let f = obj.eval(&mut shrunk);
            *vertex = (f, shrunk);
            if obj.exhausted() {
                return finish(obj, FitStatus::BudgetExhausted);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short_drive() -> Waveform {
        Waveform::Triangular {
            amplitude_pos: 1.0,
            amplitude_neg: 0.6,
            period: 0.4,
            t_end: 0.4,
        }
    }

    fn quick_cfg() -> SolverConfig {
        SolverConfig {
            dt: 2e-3,
            ..SolverConfig::default()
        }
    }

    fn make_reference(params: &ModelParams) -> ReferenceTrace {
        let trace = simulate(&short_drive(), params, &quick_cfg(), 1.2).unwrap();
        assert!(trace.completed());
        ReferenceTrace::new(trace.tvi()).unwrap()
    }

    #[test]
    fn budget_of_one_returns_start_point() {
        let base = ModelParams::default();
        let problem = FitProblem {
            free_parameters: vec![FreeParam {
                name: "i_off".into(),
                lower: 50e-6,
                upper: 300e-6,
            }],
            objective_region: Region::Off,
            reference: make_reference(&base),
            budget: 1,
            drive: short_drive(),
            w0: 1.2,
        };
        let result = fit_parameters(&problem, &base, &quick_cfg()).unwrap();
        assert_eq!(result.evaluations, 1);
        assert_eq!(result.status, FitStatus::BudgetExhausted);
        assert_eq!(result.params.i_off, base.i_off);
        assert!(
            result.error.abs() < 1e-15,
            "self-fit error {}",
            result.error
        );
    }

    #[test]
    fn recovers_perturbed_scale_on_short_drive() {
        let truth = ModelParams::default();
        let reference = make_reference(&truth);
        let mut start = truth.clone();
        start.i_off = truth.i_off * 1.3;
        let problem = FitProblem {
            free_parameters: vec![FreeParam {
                name: "i_off".into(),
                lower: 40e-6,
                upper: 400e-6,
            }],
            objective_region: Region::Off,
            reference,
            budget: 120,
            drive: short_drive(),
            w0: 1.2,
        };
        let result = fit_parameters(&problem, &start, &quick_cfg()).unwrap();
        assert!(result.evaluations <= 120);
        let rel = (result.params.i_off - truth.i_off).abs() / truth.i_off;
        assert!(
            rel < 0.05,
            "recovered i_off = {}, rel err {rel}",
            result.params.i_off
        );
    }

    #[test]
    fn never_worse_than_start_and_monotone_log() {
        let truth = ModelParams::default();
        let reference = make_reference(&truth);
        let mut start = truth.clone();
        start.k_off2 = 0.9;
        let problem = FitProblem {
            free_parameters: vec![FreeParam {
                name: "k_off2".into(),
                lower: 0.1,
                upper: 1.5,
            }],
            objective_region: Region::Off,
            reference,
            budget: 40,
            drive: short_drive(),
            w0: 1.2,
        };
        let result = fit_parameters(&problem, &start, &quick_cfg()).unwrap();
        let start_objective = result.best_history[0];
        assert!(result.error <= start_objective);
        for pair in result.best_history.windows(2) {
            assert!(pair[1] <= pair[0]);
        }
    }

    #[test]
    fn input_validation() {
        let base = ModelParams::default();
        let reference = make_reference(&base);
        let mut problem = FitProblem {
            free_parameters: vec![],
            objective_region: Region::Off,
            reference,
            budget: 10,
            drive: short_drive(),
            w0: 1.2,
        };
        assert!(matches!(
            fit_parameters(&problem, &base, &quick_cfg()),
            Err(FitError::NoFreeParameters)
        ));
        problem.free_parameters = vec![FreeParam {
            name: "bogus".into(),
            lower: 0.0,
            upper: 1.0,
        }];
        assert!(matches!(
            fit_parameters(&problem, &base, &quick_cfg()),
            Err(FitError::UnknownParameter(_))
        ));
        problem.free_parameters = vec![FreeParam {
            name: "i_off".into(),
            lower: 1e-3,
            upper: 2e-3,
        }];
        assert!(matches!(
            fit_parameters(&problem, &base, &quick_cfg()),
            Err(FitError::StartOutOfBounds { .. })
        ));
    }
}
