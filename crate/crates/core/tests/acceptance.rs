//! Acceptance criteria, one line per criterion. Runs as a plain binary so the
//! lines are printed whether or not a criterion passes; exits nonzero when
//! any criterion fails.

use std::f64::consts::FRAC_1_SQRT_2;
use std::process::ExitCode;
use std::time::Instant;

use lrinv_core::config::{preset, ModelConfig, Preset};
use lrinv_core::ermakov::{closed_form_rho_ck, solve_rho, ErmakovSolution, ErmakovTolerance};
use lrinv_core::operators::{GridSpec, StencilOrder, WavefunctionFrame};
use lrinv_core::params::{CaldirolaKanaiParams, OscillatorModel};
use lrinv_core::propagator::{propagate_with, PropagationOptions};
use lrinv_core::suite::{oracle_error, round_trip_errors, y_reduction_mismatches};
use lrinv_core::verify::{
    ehrenfest_check, gauge_identity_check, invariant_drift, scaled_rho, tdse_residual,
};
use lrinv_core::wavefunction::{ck_solution_frame, exact_solution_frame, EVEN};
use lrinv_core::weber::{build_eigenfunction_table, DEFAULT_TABLE_TOL};
use lrinv_core::Result;
use num_complex::Complex64;

const LAMBDAS: [f64; 4] = [-2.0, 0.0, 1.0, 3.0];
const TIMES: [f64; 3] = [0.1, 0.3, 0.5];

type Criterion<'a> = Box<dyn Fn() -> Result<Outcome> + 'a>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

struct Reference {
    preset: Preset,
    ck: CaldirolaKanaiParams,
    model: OscillatorModel,
    ermakov: ErmakovSolution,
}

fn reference() -> Result<Reference> {
    let preset = preset("ck-reference")?;
    let model = preset.model.build()?;
    let ermakov = preset.model.ermakov(&model, 0.0, 3.0)?;
    let ck = preset.model.as_caldirola_kanai().expect("exponential-mass preset");
    Ok(Reference { preset, ck, model, ermakov })
}

fn flipped(ck: &CaldirolaKanaiParams, lambda: f64, grid: &GridSpec, t: f64) -> Result<WavefunctionFrame> {
    let f = ck_solution_frame(lambda, EVEN, ck, grid, t)?;
    let alpha = -lambda * ck.omega1()? * t / ck.hbar;
    let ph = Complex64::cis(-2.0 * alpha);
    f.with_values(f.values().iter().map(|v| ph * v).collect())
}

fn criterion_1() -> Result<Outcome> {
    let start = Instant::now();
    let ck = CaldirolaKanaiParams::new(1.0, 2.0, 1.0, 0.0);
    let model = ModelConfig::caldirola_kanai(&ck).build()?;
    let (r0, rd0) = closed_form_rho_ck(&ck, 0.0)?;
    let sol = solve_rho(&model, r0, rd0, (0.0, 3.0), ErmakovTolerance::default())?;
    let mut worst: f64 = 0.0;
    for k in 0..=3000 {
        let t = 3.0 * k as f64 / 3000.0;
        let exact = closed_form_rho_ck(&ck, t)?.0;
        worst = worst.max(((sol.rho(t)?.0 - exact) / exact).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(outcome(worst <= 1e-8 && secs < 1.0, format!("max rel error {worst:.2e} (<= 1e-8), {secs:.3} s (< 1 s)")))
}

fn criterion_2(r: &Reference) -> Result<Outcome> {
    let start = Instant::now();
    let grid = r.preset.grid;
    let dt_fd = 1e-5;
    let (mut worst, mut weakest_mutation) = (0.0f64, f64::INFINITY);
    for &lambda in &LAMBDAS {
        for &t in &TIMES {
            let good = tdse_residual(|s| ck_solution_frame(lambda, EVEN, &r.ck, &grid, s), &r.model, t, dt_fd)?;
            let bad = tdse_residual(|s| flipped(&r.ck, lambda, &grid, s), &r.model, t, dt_fd)?;
            worst = worst.max(good);
            weakest_mutation = weakest_mutation.min(bad);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(outcome(
        worst <= 1e-5 && weakest_mutation > 1e-2 && secs < 30.0,
        format!(
            "max residual {worst:.2e} (<= 1e-5), min mutation residual {weakest_mutation:.2e} (> 1e-2), {secs:.1} s (< 30 s)"
        ),
    ))
}

fn criterion_3(r: &Reference) -> Result<Outcome> {
    let grid = r.preset.grid;
    let mut worst: f64 = 0.0;
    for &lambda in &LAMBDAS {
        for &t in &TIMES {
            let a = ck_solution_frame(lambda, EVEN, &r.ck, &grid, t)?;
            let b = exact_solution_frame(lambda, EVEN, &r.model, &r.ermakov, &grid, t)?;
            for (x, y) in a.values().iter().zip(b.values()) {
                worst = worst.max((x - y).norm());
            }
        }
    }
    Ok(outcome(worst <= 1e-10, format!("max pointwise difference {worst:.2e} (<= 1e-10)")))
}

fn criterion_4(r: &Reference) -> Result<Outcome> {
    let start = Instant::now();
    let grid = r.preset.grid;
    let frame_at = |t: f64| ck_solution_frame(1.0, EVEN, &r.ck, &grid, t);
    let dt = r.preset.dt;
    let strict = oracle_error(&r.model, &frame_at, 0.5, dt, true);
    let detail = match strict {
        Ok(e1) => {
            let e2 = oracle_error(&r.model, &frame_at, 0.5, 0.5 * dt, true)?;
            let ratio = e1 / e2;
            let secs = start.elapsed().as_secs_f64();
            return Ok(outcome(
                e1 <= 1e-4 && (3.5..=4.5).contains(&ratio) && secs < 60.0,
                format!("error {e1:.2e} (<= 1e-4), Richardson ratio {ratio:.2} (in [3.5, 4.5]), {secs:.1} s (< 60 s)"),
            ));
        }
        Err(e) => e.to_string(),
    };
    // The initial frame violates the vanishing-boundary precondition; repeat
    // without the guard to record what the solver produces anyway.
    let e1 = oracle_error(&r.model, &frame_at, 0.5, dt, false)?;
    let e2 = oracle_error(&r.model, &frame_at, 0.5, 0.5 * dt, false)?;
    let secs = start.elapsed().as_secs_f64();
    Ok(outcome(
        false,
        format!("{detail}; unguarded: error {e1:.2e} (<= 1e-4), Richardson ratio {:.2} (in [3.5, 4.5]), {secs:.1} s", e1 / e2),
    ))
}

fn packet_grid(r: &Reference) -> GridSpec {
    r.preset.grid.with_order(StencilOrder::Eighth)
}

fn criterion_5(r: &Reference) -> Result<Outcome> {
    let grid = packet_grid(r);
    let f = WavefunctionFrame::gaussian(grid, 0.0, 0.0, 0.5, 0.0)?;
    let opts = PropagationOptions { stride: 100, check_boundary: true };
    let run = propagate_with(&r.model, &f, 1.0, r.preset.dt, opts, |_| Ok(()))?;
    let good = invariant_drift(&run, &r.ermakov)?;
    let bad = invariant_drift(&run, &scaled_rho(&r.ermakov, 1.2))?;
    Ok(outcome(good <= 1e-5 && bad > 1e-2, format!("drift {good:.2e} (<= 1e-5), wrong-rho drift {bad:.2e} (> 1e-2)")))
}

fn criterion_6(r: &Reference) -> Result<Outcome> {
    let grid = GridSpec::new(-10.0, 10.0, 2048)?.with_order(StencilOrder::Eighth);
    let e = gauge_identity_check(&r.model, &r.ermakov, &grid, 0.3, 16, 7)?;
    Ok(outcome(e <= 1e-8, format!("max relative mismatch {e:.2e} over 16 frames (<= 1e-8)")))
}

fn criterion_7() -> Result<Outcome> {
    let (mut w, mut p, mut d) = (0.0f64, 0.0f64, 0.0f64);
    for eps in [-5.0, -1.0, 0.0, 1.0, 5.0] {
        let t = build_eigenfunction_table(eps, 3.0, 12001, DEFAULT_TABLE_TOL)?;
        w = w.max(t.wronskian_drift());
        p = p.max(t.parity_defect());
        d = d.max(t.difference_residual());
    }
    Ok(outcome(
        w <= 1e-10 && p <= 1e-10 && d <= 1e-6,
        format!("wronskian {w:.2e} (<= 1e-10), parity {p:.2e} (<= 1e-10), difference residual {d:.2e} (<= 1e-6)"),
    ))
}

fn criterion_8(r: &Reference) -> Result<Outcome> {
    let grid = packet_grid(r);
    let f = WavefunctionFrame::gaussian(grid, 0.0, 2.0, 1.0, 0.0)?;
    let opts = PropagationOptions { stride: 50, check_boundary: true };
    let run = propagate_with(&r.model, &f, 0.5, r.preset.dt, opts, |_| Ok(()))?;
    let e = ehrenfest_check(&run, &r.model)?;
    Ok(outcome(e <= 1e-4, format!("max relative centroid deviation {e:.2e} (<= 1e-4)")))
}

fn criterion_9(r: &Reference) -> Result<Outcome> {
    let f = WavefunctionFrame::gaussian(r.preset.grid, 0.0, 0.0, FRAC_1_SQRT_2, 0.0)?;
    let e = round_trip_errors(&r.model, &r.ermakov, &f, (-8.0, 14.0), &[32, 64, 128])?;
    let monotone = e[0] > e[1] && e[1] > e[2];
    Ok(outcome(
        monotone && e[2] <= 1e-3,
        format!("errors {:.2e} / {:.2e} / {:.2e} at 32 / 64 / 128 nodes (monotone, final <= 1e-3)", e[0], e[1], e[2]),
    ))
}

fn criterion_10(r: &Reference) -> Result<Outcome> {
    let mut total = 0;
    for order in [StencilOrder::Second, StencilOrder::Eighth] {
        let grid = GridSpec::new(-10.0, 10.0, 512)?.with_order(order);
        total += y_reduction_mismatches(&r.preset.model, &grid, r.preset.dt, 7)?;
    }
    Ok(outcome(total == 0, format!("{total} differing outputs (== 0)")))
}

fn main() -> ExitCode {
    // `cargo test` passes harness flags such as --list; nothing to list here.
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let reference = match reference() {
        Ok(r) => r,
        Err(e) => {
            println!("cannot build the reference configuration: {e}");
            return ExitCode::FAILURE;
        }
    };
    let r = &reference;
    let criteria: Vec<(&str, Criterion<'_>)> = vec![
        ("1 closed-form rho", Box::new(criterion_1)),
        ("2 exact-solution residual", Box::new(|| criterion_2(r))),
        ("3 route equivalence", Box::new(|| criterion_3(r))),
        ("4 propagation oracle", Box::new(|| criterion_4(r))),
        ("5 invariant conservation", Box::new(|| criterion_5(r))),
        ("6 gauge identity", Box::new(|| criterion_6(r))),
        ("7 weber properties", Box::new(criterion_7)),
        ("8 ehrenfest consistency", Box::new(|| criterion_8(r))),
        ("9 packet round trip", Box::new(|| criterion_9(r))),
        ("10 y-reduction", Box::new(|| criterion_10(r))),
    ];
    let mut failed = 0;
    for (name, run) in &criteria {
        let o = run().unwrap_or_else(|e| outcome(false, format!("error: {e}")));
        if !o.pass {
            failed += 1;
        }
        println!("criterion {name:<28} {}  {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
