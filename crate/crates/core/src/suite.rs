//! The standard verification suite: every check and its canned mutation on
//! one model configuration, run concurrently and merged in sorted order.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ModelConfig, TimeFunctionConfig};
use crate::ermakov::{closed_form_rho_ck, default_initial_data, solve_rho, ErmakovSolution, ErmakovTolerance};
use crate::error::{Error, Result};
use crate::operators::{
    gauge_factors, hamiltonian_action, interior_norm, invariant_action, GaugeDirection, GridSpec,
    HamiltonianCoefficients, InvariantCoefficients, StencilOrder, WavefunctionFrame,
};
use crate::params::{CaldirolaKanaiParams, OscillatorModel};
use crate::propagator::{propagate_with, PropagationOptions, PropagationRun};
use crate::verify::{
    classical_solve, ehrenfest_check, ehrenfest_check_scaled, centroid_history, gauge_identity_check,
    gauge_identity_check_with, invariant_drift, random_interior_frame, scaled_rho, sort_reports, tdse_residual,
    NormType, ReportContext, ResidualReport,
};
use crate::wavefunction::{
    ck_solution_frame, exact_solution_frame, packet_weights, phase_alpha, synthesize_packet, LambdaQuadrature,
    ParityMix, EVEN,
};
use crate::weber::{build_eigenfunction_table, DEFAULT_TABLE_TOL};

/// Inputs of the standard suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteConfig {
    pub model: ModelConfig,
    /// Grid of the exact-family checks (residuals, route equivalence,
    /// propagation oracle).
    pub grid: GridSpec,
    pub dt: f64,
    pub seed: u64,
    pub lambdas: Vec<f64>,
    pub times: Vec<f64>,
}

impl SuiteConfig {
    pub fn new(model: ModelConfig, grid: GridSpec, dt: f64, seed: u64) -> Self {
        Self { model, grid, dt, seed, lambdas: vec![-2.0, 0.0, 1.0, 3.0], times: vec![0.1, 0.3, 0.5] }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteOutcome {
    pub reports: Vec<ResidualReport>,
    pub all_pass: bool,
    pub seconds: f64,
}

/// Relative interior L² distance `‖a − b‖ / ‖b‖`.
pub fn relative_interior_distance(a: &WavefunctionFrame, b: &WavefunctionFrame) -> f64 {
    let d: Vec<Complex64> = a.values().iter().zip(b.values()).map(|(x, y)| x - y).collect();
    let den = b.interior_norm();
    let num = interior_norm(&d, b.grid());
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Exact solution family of a configured model: the closed form when the
/// model has the exponential-mass form, otherwise the generic pipeline.
struct ExactFamily {
    model: OscillatorModel,
    ermakov: ErmakovSolution,
    ck: Option<CaldirolaKanaiParams>,
}

impl ExactFamily {
    fn frame(&self, lambda: f64, mix: ParityMix, grid: &GridSpec, t: f64) -> Result<WavefunctionFrame> {
        match &self.ck {
            Some(ck) => ck_solution_frame(lambda, mix, ck, grid, t),
            None => exact_solution_frame(lambda, mix, &self.model, &self.ermakov, grid, t),
        }
    }

    /// The same family with α replaced by −α.
    fn flipped(&self, lambda: f64, mix: ParityMix, grid: &GridSpec, t: f64) -> Result<WavefunctionFrame> {
        let f = self.frame(lambda, mix, grid, t)?;
        let alpha = match &self.ck {
            Some(ck) => -lambda * ck.omega1()? * t / ck.hbar,
            None => phase_alpha(lambda, &self.model, &self.ermakov, t)?,
        };
        let ph = Complex64::cis(-2.0 * alpha);
        f.with_values(f.values().iter().map(|v| ph * v).collect())
    }
}

type Check<'a> = Box<dyn Fn() -> Vec<ResidualReport> + Send + Sync + 'a>;

fn ctx(cfg: &SuiteConfig) -> ReportContext {
    ReportContext::new(cfg.model.id())
}

/// Dedicated grid for packet dynamics: the configured extent with the
/// eighth-order stencil.
fn packet_grid(cfg: &SuiteConfig) -> GridSpec {
    cfg.grid.with_order(StencilOrder::Eighth)
}

fn ermakov_checks(cfg: &SuiteConfig, family: &ExactFamily) -> Vec<ResidualReport> {
    let Some(ck) = family.ck else {
        let r = family.ermakov.max_sampled_residual(256, cfg.seed);
        return vec![ResidualReport::check("ermakov: sampled scaled residual", NormType::Max, r, 1e-6, ctx(cfg))];
    };
    let measured = (|| {
        let (r0, rd0) = closed_form_rho_ck(&ck, 0.0)?;
        let sol = solve_rho(&family.model, r0, rd0, (0.0, 3.0), ErmakovTolerance::default())?;
        let mut worst: f64 = 0.0;
        for k in 0..=300 {
            let t = 3.0 * k as f64 / 300.0;
            let (num, _) = sol.rho(t)?;
            let (exact, _) = closed_form_rho_ck(&ck, t)?;
            worst = worst.max(((num - exact) / exact).abs());
        }
        Ok(worst)
    })();
    vec![ResidualReport::check(
        "ermakov: numerical vs closed-form rho on [0, 3]",
        NormType::Max,
        measured,
        1e-8,
        ctx(cfg),
    )]
}

fn tdse_checks(cfg: &SuiteConfig, family: &ExactFamily) -> Vec<ResidualReport> {
    let grid = cfg.grid;
    let dt_fd = 1e-5;
    let mut out = Vec::new();
    for &lambda in &cfg.lambdas {
        for &t in &cfg.times {
            let c = ctx(cfg).lambda(lambda).t(t).grid(grid).dt(dt_fd);
            let good = tdse_residual(|s| family.frame(lambda, EVEN, &grid, s), &family.model, t, dt_fd);
            out.push(ResidualReport::check(
                format!("tdse residual: lambda={lambda} t={t}"),
                NormType::L2Interior,
                good,
                1e-5,
                c.clone(),
            ));
            let bad = tdse_residual(|s| family.flipped(lambda, EVEN, &grid, s), &family.model, t, dt_fd);
            out.push(ResidualReport::mutation(
                format!("tdse residual mutation (phase sign flipped): lambda={lambda} t={t}"),
                NormType::L2Interior,
                bad,
                1e-2,
                c,
            ));
        }
    }
    out
}

fn route_check(cfg: &SuiteConfig, family: &ExactFamily) -> Vec<ResidualReport> {
    if family.ck.is_none() {
        return vec![];
    }
    let grid = cfg.grid;
    let measured = (|| {
        let mut worst: f64 = 0.0;
        for &lambda in &cfg.lambdas {
            for &t in &cfg.times {
                let a = family.frame(lambda, EVEN, &grid, t)?;
                let b = exact_solution_frame(lambda, EVEN, &family.model, &family.ermakov, &grid, t)?;
                for (x, y) in a.values().iter().zip(b.values()) {
                    worst = worst.max((x - y).norm());
                }
            }
        }
        Ok(worst)
    })();
    vec![ResidualReport::check(
        "route equivalence: closed form vs generic pipeline",
        NormType::Max,
        measured,
        1e-10,
        ctx(cfg).grid(grid),
    )]
}

/// Interior error of the CN-propagated exact frame against the analytic one.
pub fn oracle_error(
    model: &OscillatorModel,
    frame_at: &dyn Fn(f64) -> Result<WavefunctionFrame>,
    t_final: f64,
    dt: f64,
    check_boundary: bool,
) -> Result<f64> {
    let initial = frame_at(0.0)?;
    let opts = PropagationOptions { stride: usize::MAX, check_boundary };
    let run = propagate_with(model, &initial, t_final, dt, opts, |_| Ok(()))?;
    Ok(relative_interior_distance(run.final_frame(), &frame_at(t_final)?))
}

fn propagation_checks(cfg: &SuiteConfig, family: &ExactFamily) -> Vec<ResidualReport> {
    let grid = cfg.grid;
    let frame_at = |t: f64| family.frame(1.0, EVEN, &grid, t);
    let e1 = oracle_error(&family.model, &frame_at, 0.5, cfg.dt, true);
    let c = ctx(cfg).lambda(1.0).t(0.5).grid(grid).dt(cfg.dt);
    let ratio = match &e1 {
        Ok(a) => oracle_error(&family.model, &frame_at, 0.5, 0.5 * cfg.dt, true).map(|b| a / b),
        Err(e) => Err(e.clone()),
    };
    let mut out = vec![ResidualReport::check(
        "propagation oracle: CN vs exact frame, lambda=1 to t=0.5",
        NormType::L2Interior,
        e1,
        1e-4,
        c.clone(),
    )];
    let in_band = ratio.map(|r| if (3.5..=4.5).contains(&r) { 0.0 } else { (r - 4.0).abs() });
    out.push(ResidualReport::check(
        "propagation oracle: Richardson ratio distance outside [3.5, 4.5]",
        NormType::Max,
        in_band,
        0.0,
        c,
    ));
    out
}

fn drift_checks(cfg: &SuiteConfig, family: &ExactFamily) -> Vec<ResidualReport> {
    let grid = packet_grid(cfg);
    let c = ctx(cfg).t(1.0).grid(grid).dt(cfg.dt);
    let run = WavefunctionFrame::gaussian(grid, 0.0, 0.0, 0.5, 0.0).and_then(|f| {
        let opts = PropagationOptions { stride: 100, check_boundary: true };
        propagate_with(&family.model, &f, 1.0, cfg.dt, opts, |_| Ok(()))
    });
    let (good, bad) = match &run {
        Ok(run) => (invariant_drift(run, &family.ermakov), invariant_drift(run, &scaled_rho(&family.ermakov, 1.2))),
        Err(e) => (Err(e.clone()), Err(e.clone())),
    };
    let norm = run.as_ref().map(|r| r.norm_drift()).map_err(|e| e.clone());
    vec![
        ResidualReport::check("invariant drift: Gaussian packet on [0, 1]", NormType::Max, good, 1e-5, c.clone()),
        ResidualReport::mutation("invariant drift mutation (rho scaled by 1.2)", NormType::Max, bad, 1e-2, c.clone()),
        ResidualReport::check("propagation: norm drift on [0, 1]", NormType::Max, norm, 1e-8, c),
    ]
}

fn gauge_checks(cfg: &SuiteConfig, family: &ExactFamily) -> Vec<ResidualReport> {
    let grid = GridSpec::new(-10.0, 10.0, 2048).map(|g| g.with_order(StencilOrder::Eighth));
    let t = 0.3;
    let run = |dir| grid.clone().and_then(|g| gauge_identity_check_with(&family.model, &family.ermakov, &g, t, 16, cfg.seed, dir));
    let c = ctx(cfg).t(t);
    let c = match &grid {
        Ok(g) => c.grid(*g),
        Err(_) => c,
    };
    vec![
        ResidualReport::check("gauge identity: 16 random interior frames", NormType::L2Interior, run(GaugeDirection::Forward), 1e-8, c.clone()),
        ResidualReport::mutation("gauge identity mutation (exponent sign flipped)", NormType::L2Interior, run(GaugeDirection::Inverse), 1e-2, c),
    ]
}

fn weber_checks(cfg: &SuiteConfig) -> Vec<ResidualReport> {
    let mut out = Vec::new();
    for &eps in &[-5.0, -1.0, 0.0, 1.0, 5.0] {
        let table = build_eigenfunction_table(eps, 3.0, 24001, DEFAULT_TABLE_TOL);
        let c = ctx(cfg).lambda(eps * cfg.model.hbar);
        let m = |f: fn(&crate::weber::EigenfunctionTable) -> f64| table.as_ref().map(f).map_err(|e| e.clone());
        out.push(ResidualReport::check(format!("weber: wronskian constancy eps={eps}"), NormType::Max, m(|t| t.wronskian_drift()), 1e-10, c.clone()));
        out.push(ResidualReport::check(format!("weber: parity symmetry eps={eps}"), NormType::Max, m(|t| t.parity_defect()), 1e-10, c.clone()));
        out.push(ResidualReport::check(format!("weber: difference residual eps={eps}"), NormType::Max, m(|t| t.difference_residual()), 1e-6, c));
    }
    out
}

fn ehrenfest_checks(cfg: &SuiteConfig, family: &ExactFamily) -> Vec<ResidualReport> {
    let grid = packet_grid(cfg);
    let c = ctx(cfg).t(0.5).grid(grid).dt(cfg.dt);
    let opts = PropagationOptions { stride: 50, check_boundary: true };
    let displaced = WavefunctionFrame::gaussian(grid, 0.0, 2.0, 1.0, 0.0)
        .and_then(|f| propagate_with(&family.model, &f, 0.5, cfg.dt, opts, |_| Ok(())));
    let centered = WavefunctionFrame::gaussian(grid, 0.0, 0.0, 1.0, 0.0)
        .and_then(|f| propagate_with(&family.model, &f, 0.5, cfg.dt, opts, |_| Ok(())));
    let with = |r: &Result<PropagationRun>, f: &dyn Fn(&PropagationRun) -> Result<f64>| match r {
        Ok(run) => f(run),
        Err(e) => Err(e.clone()),
    };
    vec![
        ResidualReport::check(
            "ehrenfest: displaced Gaussian vs classical trajectory",
            NormType::Max,
            with(&displaced, &|r| ehrenfest_check(r, &family.model)),
            1e-4,
            c.clone(),
        ),
        ResidualReport::mutation(
            "ehrenfest mutation (classical Omega^2 scaled by 1.1)",
            NormType::Max,
            with(&displaced, &|r| ehrenfest_check_scaled(r, &family.model, 1.1)),
            1e-2,
            c.clone(),
        ),
        ResidualReport::check(
            "ehrenfest: centered packet max |<q>| (width 1)",
            NormType::Max,
            with(&centered, &|r| Ok(centroid_history(r).iter().map(|(_, q)| q.abs()).fold(0.0, f64::max))),
            1e-8,
            c,
        ),
    ]
}

fn classical_checks(cfg: &SuiteConfig, family: &ExactFamily) -> Vec<ResidualReport> {
    let r = classical_solve(&family.model, 1.0, 0.0, (0.0, 1.0)).and_then(|tr| tr.max_residual());
    vec![ResidualReport::check("classical: equation-of-motion residual", NormType::Max, r, 1e-8, ctx(cfg))]
}

/// Interior L² errors of the packet round trip at t = 0 for each node count.
pub fn round_trip_errors(
    model: &OscillatorModel,
    ermakov: &ErmakovSolution,
    f: &WavefunctionFrame,
    lambda_range: (f64, f64),
    node_counts: &[usize],
) -> Result<Vec<f64>> {
    node_counts
        .iter()
        .map(|&n| {
            let quad = LambdaQuadrature::gauss_legendre(lambda_range.0, lambda_range.1, n)?;
            let spec = packet_weights(f, &quad, model, ermakov)?;
            let g = synthesize_packet(&spec, model, ermakov, f.grid(), f.t())?;
            Ok(relative_interior_distance(&g, f))
        })
        .collect()
}

fn packet_checks(cfg: &SuiteConfig, family: &ExactFamily) -> Vec<ResidualReport> {
    let grid = cfg.grid;
    let errors = WavefunctionFrame::gaussian(grid, 0.0, 0.0, std::f64::consts::FRAC_1_SQRT_2, 0.0)
        .and_then(|f| round_trip_errors(&family.model, &family.ermakov, &f, (-8.0, 14.0), &[32, 64, 128]));
    let c = ctx(cfg).grid(grid).t(0.0);
    let monotone = errors.as_ref().map(|e| if e[0] > e[1] && e[1] > e[2] { 0.0 } else { 1.0 }).map_err(|e| e.clone());
    let last = errors.as_ref().map(|e| e[2]).map_err(|e| e.clone());
    vec![
        ResidualReport::check("packet round trip: error at 128 nodes", NormType::L2Interior, last, 1e-3, c.clone()),
        ResidualReport::check("packet round trip: monotone over 32/64/128 nodes (0 = yes)", NormType::Max, monotone, 0.0, c),
    ]
}

/// Replaces y by the constant zero descriptor (`general`) or removes it
/// (`suppressed`).
pub fn y_zero_variants(model: &ModelConfig) -> (ModelConfig, ModelConfig) {
    let mut general = model.clone();
    general.y = Some(TimeFunctionConfig::Constant { value: 0.0 });
    let mut suppressed = model.clone();
    suppressed.y = None;
    (general, suppressed)
}

/// Number of outputs that differ in any bit between the y ≡ 0 general path
/// and the y-suppressed path.
pub fn y_reduction_mismatches(model: &ModelConfig, grid: &GridSpec, dt: f64, seed: u64) -> Result<usize> {
    let (gen_cfg, sup_cfg) = y_zero_variants(model);
    let outputs = |cfg: &ModelConfig| -> Result<Vec<u64>> {
        use rand::SeedableRng;
        let m = cfg.build()?;
        let sol = cfg.ermakov(&m, 0.0, 0.6)?;
        let (r0, rd0) = default_initial_data(&m, 0.0)?;
        let numeric = solve_rho(&m, r0, rd0, (0.0, 0.6), ErmakovTolerance::default())?;
        let mut bits = Vec::new();
        let mut push = |v: &[Complex64]| bits.extend(v.iter().flat_map(|z| [z.re.to_bits(), z.im.to_bits()]));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let f = random_interior_frame(*grid, 0.2, &mut rng)?;
        let hc = HamiltonianCoefficients::at(&m, 0.2)?;
        push(&hamiltonian_action(&hc, grid, f.values()));
        let ic = InvariantCoefficients::at(&m, &sol, 0.2)?;
        push(&invariant_action(&ic, grid, f.values()));
        push(&gauge_factors(&ic, grid, GaugeDirection::Forward));
        let run = propagate_with(&m, &f, 0.25, dt.max(1e-3), PropagationOptions::default(), |_| Ok(()))?;
        push(run.final_frame().values());
        push(exact_solution_frame(1.0, EVEN, &m, &sol, grid, 0.3)?.values());
        push(exact_solution_frame(1.0, EVEN, &m, &numeric, grid, 0.3)?.values());
        let scalars = [
            tdse_residual(|s| exact_solution_frame(1.0, EVEN, &m, &sol, grid, s), &m, 0.3, 1e-5)?,
            invariant_drift(&run, &sol)?,
            ehrenfest_check(&run, &m)?,
            gauge_identity_check(&m, &sol, grid, 0.3, 2, seed)?,
            numeric.rho(0.5)?.0,
            numeric.rho(0.5)?.1,
        ];
        bits.extend(scalars.iter().map(|v| v.to_bits()));
        Ok(bits)
    };
    let a = outputs(&gen_cfg)?;
    let b = outputs(&sup_cfg)?;
    if a.len() != b.len() {
        return Err(Error::InvalidArgument("output shapes differ".into()));
    }
    Ok(a.iter().zip(&b).filter(|(x, y)| x != y).count())
}

fn y_reduction_check(cfg: &SuiteConfig) -> Vec<ResidualReport> {
    let grid = GridSpec::new(-10.0, 10.0, 512).map(|g| g.with_order(cfg.grid.order));
    let m = grid.and_then(|g| y_reduction_mismatches(&cfg.model, &g, cfg.dt, cfg.seed).map(|n| n as f64));
    vec![ResidualReport::check("y-reduction: bitwise mismatches, y = 0 vs suppressed", NormType::Max, m, 0.0, ctx(cfg))]
}

fn family_for(cfg: &SuiteConfig) -> Result<ExactFamily> {
    let model = cfg.model.build()?;
    let ermakov = cfg.model.ermakov(&model, 0.0, 3.0)?;
    let ck = cfg.model.as_caldirola_kanai().filter(|ck| ck.omega1_sq() > 0.0);
    Ok(ExactFamily { model, ermakov, ck })
}

/// Runs every check concurrently and returns the reports sorted by
/// description.
pub fn run_standard_suite(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let start = Instant::now();
    let family = family_for(cfg)?;
    let fam = &family;
    let checks: Vec<Check<'_>> = vec![
        Box::new(move || ermakov_checks(cfg, fam)),
        Box::new(move || tdse_checks(cfg, fam)),
        Box::new(move || route_check(cfg, fam)),
        Box::new(move || propagation_checks(cfg, fam)),
        Box::new(move || drift_checks(cfg, fam)),
        Box::new(move || gauge_checks(cfg, fam)),
        Box::new(move || weber_checks(cfg)),
        Box::new(move || ehrenfest_checks(cfg, fam)),
        Box::new(move || classical_checks(cfg, fam)),
        Box::new(move || packet_checks(cfg, fam)),
        Box::new(move || y_reduction_check(cfg)),
    ];
    let mut reports: Vec<ResidualReport> = checks.par_iter().flat_map(|c| c()).collect();
    sort_reports(&mut reports);
    let all_pass = reports.iter().all(|r| r.pass);
    Ok(SuiteOutcome { reports, all_pass, seconds: start.elapsed().as_secs_f64() })
}
