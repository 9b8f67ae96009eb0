//! Acceptance suite: one test per criterion, each printing a pass line with
//! the measured quantities. Run with `--nocapture` to see them on success.

use memristor_sim::fit::{fit_parameters, FitProblem, FreeParam};
use memristor_sim::metrics::{rel_rms_error, ReferenceTrace, Region};
use memristor_sim::model::{state_derivative, DeviceState, DERIVATIVE_CAP};
use memristor_sim::params::ModelParams;
use memristor_sim::solver::{
    advance_state, op_residual, solve_operating_point, solve_operating_point_warm, SolverConfig,
};
use memristor_sim::transient::{simulate, Trace};
use memristor_sim::waveform::Waveform;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;
use std::time::Instant;

fn stress_cfg() -> SolverConfig {
    SolverConfig {
        dt: 1e-4,
        substeps: 10,
        ..SolverConfig::default()
    }
}

/// fig2-drive runs shared by criteria 3, 4 and 8.
fn fig2_traces() -> &'static (Trace, Trace) {
    static TRACES: OnceLock<(Trace, Trace)> = OnceLock::new();
    TRACES.get_or_init(|| {
        let wf = Waveform::preset("fig2-drive").unwrap();
        let cfg = stress_cfg();
        let modified = simulate(&wf, &ModelParams::default(), &cfg, 1.2).unwrap();
        let original = simulate(&wf, &ModelParams::original(), &cfg, 1.2).unwrap();
        assert!(modified.completed(), "fig2 modified run must complete");
        assert!(original.completed(), "fig2 original run must complete");
        (modified, original)
    })
}

#[test]
fn criterion_1_boundary_containment() {
    let start = Instant::now();
    let cfg = stress_cfg();
    let fig3 = Waveform::preset("fig3-stress").unwrap();
    let fig4 = Waveform::preset("fig4-stress").unwrap();
    let modified = ModelParams::default();
    let original = ModelParams::original();

    for (name, wf) in [("fig3 (+9 V)", &fig3), ("fig4 (-3 V)", &fig4)] {
        let trace = simulate(wf, &modified, &cfg, 1.2).unwrap();
        assert!(
            trace.completed(),
            "criterion 1: modified {name} run aborted"
        );
        for s in &trace.samples {
            assert!(
                (1.0..=2.0).contains(&s.w_eff),
                "criterion 1: FAIL modified {name} w_eff = {} at t = {}",
                s.w_eff,
                s.t
            );
        }
    }

    // the undamped model must violate the lower bound under the -3 V drive;
    // its post-violation abort (state leaves the model domain) is expected
    let org4 = simulate(&fig4, &original, &cfg, 1.2).unwrap();
    let (org4_min, _) = org4.w_raw_range().unwrap();
    assert!(
        org4_min < 1.0,
        "criterion 1: FAIL original fig4 min w_raw = {org4_min}, expected < 1.0"
    );
    // the +9 V direction is reported, not asserted
    let org3 = simulate(&fig3, &original, &cfg, 1.2).unwrap();
    let (_, org3_max) = org3.w_raw_range().unwrap();

    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        elapsed < 5.0,
        "criterion 1: FAIL runtime {elapsed:.2} s >= 5 s"
    );
    println!(
        "criterion 1: PASS boundary containment (modified within [1.0, 2.0] on both stress \
         drives; original fig4 min w = {org4_min:.4} nm < 1.0; original fig3 max w = \
         {org3_max:.4} nm, exceeds 2.0: {}; runtime {elapsed:.2} s)",
        org3_max > 2.0
    );
}

#[test]
fn criterion_2_reduction_identity() {
    // independent statement of the undamped derivative, sharing only the
    // documented saturation bound
    let p = ModelParams {
        k_off1: 1.0,
        k_off2: 1.0,
        k_on1: 1.0,
        k_on2: 1.0,
        ..ModelParams::default()
    };
    let reference = |w: f64, i: f64, vg: f64| -> f64 {
        if i == 0.0 || vg == 0.0 {
            return 0.0;
        }
        if vg > 0.0 {
            let x = (w - p.a_off) / p.w_c - i.abs() / p.b_cur;
            (p.f_off * (i.abs() / p.i_off).sinh() * (-x.exp() - w / p.w_c).exp())
                .min(DERIVATIVE_CAP)
        } else {
            let x = (p.a_on - w) / p.w_c - i.abs() / p.b_cur;
            -(p.f_on * (i.abs() / p.i_on).sinh() * (-x.exp() - w / p.w_c).exp()).min(DERIVATIVE_CAP)
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let w = rng.gen_range(1.0..2.0);
        let i = rng.gen_range(0.0..1e-3);
        let vg = rng.gen_range(0.05..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let got = state_derivative(w, i, vg, &p);
        let want = reference(w, i, vg);
        let rel = if want == 0.0 {
            if got == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            ((got - want) / want).abs()
        };
        assert!(
            rel <= 1e-14,
            "criterion 2: FAIL at w={w}, i={i}, vg={vg}: {got} vs {want} (rel {rel:.2e})"
        );
        worst = worst.max(rel);
    }
    println!(
        "criterion 2: PASS reduction identity (1000 states, worst rel diff {worst:.2e} <= 1e-14)"
    );
}

#[test]
fn criterion_3_pinched_hysteresis() {
    let (modified, _) = fig2_traces();
    let mut zero_crossings = 0;
    for s in &modified.samples {
        if s.v.abs() < 1e-9 {
            zero_crossings += 1;
            assert!(
                s.i.abs() < 1e-12,
                "criterion 3: FAIL |i| = {} at drive zero t = {}",
                s.i.abs(),
                s.t
            );
        }
    }
    assert!(
        zero_crossings >= 2,
        "criterion 3: drive zero-crossings missing from the sample grid"
    );
    println!(
        "criterion 3: PASS pinched hysteresis ({zero_crossings} zero-drive samples, all |i| < 1e-12 A)"
    );
}

#[test]
fn criterion_4_width_range() {
    let (modified, original) = fig2_traces();
    for s in &modified.samples {
        assert!(
            (1.15..=1.85).contains(&s.w_eff),
            "criterion 4: FAIL modified w_eff = {} at t = {}",
            s.w_eff,
            s.t
        );
    }
    let (mod_min, mod_max) = modified.w_eff_range().unwrap();
    let (org_min, _) = original.w_raw_range().unwrap();
    assert!(
        org_min < mod_min - 0.05,
        "criterion 4: FAIL original min {org_min:.4} not below modified min {mod_min:.4} - 0.05"
    );
    println!(
        "criterion 4: PASS width range (modified w in [{mod_min:.4}, {mod_max:.4}] nm within \
         [1.15, 1.85]; original min {org_min:.4} < {:.4})",
        mod_min - 0.05
    );
}

#[test]
fn criterion_5_solver_contract() {
    let p = ModelParams::default();
    let cfg = SolverConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..10_000 {
        let v = rng.gen_range(-1.5..1.5);
        let w = rng.gen_range(1.05..1.95);
        let op = solve_operating_point(v, w, &p, &cfg).unwrap();
        let residual = op_residual(&op, w, &p).unwrap();
        let bound = 1e-12 * op.i.abs().max(1e-9);
        assert!(
            residual <= bound,
            "criterion 5: FAIL residual {residual:.3e} > {bound:.3e} at v={v}, w={w}"
        );
        assert!(
            op.i == 0.0 || op.i.signum() == v.signum(),
            "criterion 5: FAIL passivity at v={v}, w={w}: i={}, v_g={}",
            op.i,
            op.v_g
        );
        assert_eq!(op.v_g, op.v - p.r_s * op.i);
        worst_ratio = worst_ratio.max(residual / bound);
    }

    // observed RK4 order on a smooth switching segment: constant 1.15 V from
    // w0 = 1.35 nm over 0.1 s, Richardson triple dt, dt/2, dt/4
    let integrate = |dt: f64| -> f64 {
        let mut state = DeviceState::new(1.35, &p);
        let mut warm = None;
        let n = (0.1 / dt).round() as usize;
        for _ in 0..n {
            let op = solve_operating_point_warm(1.15, state.w_eff, &p, &cfg, warm).unwrap();
            warm = Some(op.i);
            state = advance_state(&state, &op, dt, &p, &cfg).unwrap();
        }
        state.w_eff
    };
    let dt = 5e-3;
    let (w1, w2, w3) = (integrate(dt), integrate(dt / 2.0), integrate(dt / 4.0));
    let order = ((w1 - w2).abs() / (w2 - w3).abs()).log2();
    assert!(
        order >= 3.5,
        "criterion 5: FAIL observed RK4 order {order:.3} < 3.5 ({w1} {w2} {w3})"
    );
    println!(
        "criterion 5: PASS solver contract (10000 residuals within tolerance, worst at \
         {:.0}% of bound; observed RK4 order {order:.2})",
        worst_ratio * 100.0
    );
}

#[test]
fn criterion_6_error_metric_oracle() {
    // synthetic 100-sample trace with non-zero means
    let series: Vec<(f64, f64, f64)> = (0..100)
        .map(|k| {
            let t = k as f64 * 0.01;
            let v = 0.5 + 0.3 * (2.0 * std::f64::consts::PI * t).sin();
            let i = 1e-3 * (1.0 + 0.5 * (2.0 * std::f64::consts::PI * t).cos());
            (t, v, i)
        })
        .collect();
    let reference = ReferenceTrace::new(series.clone()).unwrap();

    let zero = rel_rms_error(&series, &reference, Region::Full).unwrap();
    assert_eq!(zero, 0.0, "criterion 6: FAIL identical traces gave {zero}");

    let delta = 0.0123;
    let offset: Vec<_> = series.iter().map(|&(t, v, i)| (t, v + delta, i)).collect();
    let e = rel_rms_error(&offset, &reference, Region::Full).unwrap();
    let expected = delta / reference.mean_v.abs();
    let rel = (e - expected).abs() / expected;
    assert!(
        rel <= 1e-12,
        "criterion 6: FAIL offset case e = {e}, expected {expected} (rel {rel:.2e})"
    );
    println!(
        "criterion 6: PASS error metric oracle (identical -> 0 exactly; uniform offset -> \
         |delta|/|mean v| within {rel:.1e})"
    );
}

#[test]
fn criterion_7_fit_recovery() {
    let start = Instant::now();
    let drive = Waveform::preset("fig2-drive").unwrap();
    let cfg = SolverConfig {
        dt: 1e-3,
        substeps: 1,
        ..SolverConfig::default()
    };
    let truth = ModelParams::default();
    let reference_trace = simulate(&drive, &truth, &cfg, 1.2).unwrap();
    assert!(reference_trace.completed());
    let reference = ReferenceTrace::new(reference_trace.tvi()).unwrap();

    // scale recovery from a 30% perturbed start
    let mut start_params = truth.clone();
    start_params.i_off = truth.i_off * 1.3;
    let problem = FitProblem {
        free_parameters: vec![FreeParam {
            name: "i_off".into(),
            lower: 40e-6,
            upper: 400e-6,
        }],
        objective_region: Region::Off,
        reference: reference.clone(),
        budget: 200,
        drive: drive.clone(),
        w0: 1.2,
    };
    let result = fit_parameters(&problem, &start_params, &cfg).unwrap();
    let rel = (result.params.i_off - truth.i_off).abs() / truth.i_off;
    assert!(
        result.evaluations <= 200,
        "criterion 7: FAIL used {} evaluations",
        result.evaluations
    );
    assert!(
        rel < 0.05,
        "criterion 7: FAIL recovered i_off = {} ({}% off) in {} evals",
        result.params.i_off,
        rel * 100.0,
        result.evaluations
    );
    let i_off_evals = result.evaluations;

    // damping-factor recovery from the undamped value
    let mut start_k = truth.clone();
    start_k.k_off2 = 1.0;
    let problem_k = FitProblem {
        free_parameters: vec![FreeParam {
            name: "k_off2".into(),
            lower: 0.1,
            upper: 1.5,
        }],
        objective_region: Region::Off,
        reference,
        budget: 200,
        drive,
        w0: 1.2,
    };
    let result_k = fit_parameters(&problem_k, &start_k, &cfg).unwrap();
    assert!(
        (0.4..=0.6).contains(&result_k.params.k_off2),
        "criterion 7: FAIL recovered k_off2 = {} outside [0.4, 0.6]",
        result_k.params.k_off2
    );

    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        elapsed < 120.0,
        "criterion 7: FAIL runtime {elapsed:.1} s >= 120 s"
    );
    println!(
        "criterion 7: PASS fit recovery (i_off = {:.3e} A, {:.2}% off in {} evals; k_off2 = \
         {:.4} in {} evals; runtime {elapsed:.1} s)",
        result.params.i_off,
        rel * 100.0,
        i_off_evals,
        result_k.params.k_off2,
        result_k.evaluations
    );
}

/// Not one of the numbered criteria: the nominal knee operating points,
/// checked loosely because the drive is a reconstruction. The off knee is
/// the current at +0.82 V on the first upsweep (nominally 0.64 mA); the on
/// knee is the current at -0.53 V on the return leg (nominally -0.28 mA).
#[test]
fn knee_operating_points_land_near_nominal_values() {
    let (modified, _) = fig2_traces();
    let upsweep = modified
        .samples
        .iter()
        .filter(|s| s.t <= 1.5)
        .min_by(|a, b| (a.v - 0.82).abs().partial_cmp(&(b.v - 0.82).abs()).unwrap())
        .unwrap();
    assert!(
        (0.5e-3..=0.8e-3).contains(&upsweep.i),
        "off knee current {} A at v = {}",
        upsweep.i,
        upsweep.v
    );
    let return_leg = modified
        .samples
        .iter()
        .filter(|s| s.t >= 4.5)
        .min_by(|a, b| (a.v + 0.53).abs().partial_cmp(&(b.v + 0.53).abs()).unwrap())
        .unwrap();
    assert!(
        (-0.45e-3..=-0.15e-3).contains(&return_leg.i),
        "on knee current {} A at v = {}",
        return_leg.i,
        return_leg.v
    );
    println!(
        "knee check: PASS (off knee {:.3} mA at +0.82 V, on knee {:.3} mA at -0.53 V)",
        upsweep.i * 1e3,
        return_leg.i * 1e3
    );
}

#[test]
fn criterion_8_on_region_discrepancy_dominates() {
    // Percent errors against experimental data require a digitized
    // experimental trace, which is not available here; the checkable
    // contract is that the model-vs-model discrepancy concentrates in the
    // ON switching region. User-supplied digitized data flows through the
    // same metric via the CLI `error` command.
    let (modified, original) = fig2_traces();
    let reference = ReferenceTrace::new(original.tvi()).unwrap();
    let e_on = rel_rms_error(&modified.tvi(), &reference, Region::On).unwrap();
    let e_off = rel_rms_error(&modified.tvi(), &reference, Region::Off).unwrap();
    assert!(
        e_on > e_off,
        "criterion 8: FAIL on-region discrepancy {e_on} not above off-region {e_off}"
    );
    println!(
        "criterion 8: PASS discrepancy locus (modified vs original: on region {:.1}% > off \
         region {:.1}%; experimental-data errors not reproducible at desk scale, metric \
         exposed via the error command)",
        e_on * 100.0,
        e_off * 100.0
    );
}
