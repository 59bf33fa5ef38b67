//! Residual checks: Schrödinger residuals of analytic families, invariant
//! conservation along propagated packets, the gauge identity, Ehrenfest
//! consistency, and canned mutations for each.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ermakov::{ErmakovSolution, RhoState};
use crate::error::{Error, Result};
use crate::ode::{integrate, IntegrationProblem, Trajectory};
use crate::operators::{
    gauge_factors, hamiltonian_action, interior_norm, invariant_action, stencil, transformed_invariant_action,
    GaugeDirection, GridSpec, HamiltonianCoefficients, InvariantCoefficients, WavefunctionFrame,
};
use crate::params::OscillatorModel;
use crate::propagator::PropagationRun;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormType {
    Max,
    L2Interior,
}

/// Whether a report passes when its value is small (a check) or large (a
/// mutation that must be detected).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expectation {
    AtMost,
    Exceeds,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ReportContext {
    pub model_id: String,
    pub lambda: Option<f64>,
    pub t: Option<f64>,
    pub grid: Option<GridSpec>,
    pub dt: Option<f64>,
}

impl ReportContext {
    pub fn new(model_id: impl Into<String>) -> Self {
        Self { model_id: model_id.into(), ..Self::default() }
    }
    pub fn lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self
    }
    pub fn t(mut self, t: f64) -> Self {
        self.t = Some(t);
        self
    }
    pub fn grid(mut self, grid: GridSpec) -> Self {
        self.grid = Some(grid);
        self
    }
    pub fn dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub description: String,
    pub norm_type: NormType,
    pub value: f64,
    pub threshold: f64,
    pub expectation: Expectation,
    pub pass: bool,
    pub context: ReportContext,
    /// Set when the measurement itself failed; the report then fails.
    pub error: Option<String>,
}

impl ResidualReport {
    /// Builds a report from a measurement. An `Err` measurement yields a
    /// failing report carrying the message and a NaN value.
    pub fn from_measurement(
        description: impl Into<String>,
        norm_type: NormType,
        measured: Result<f64>,
        threshold: f64,
        expectation: Expectation,
        context: ReportContext,
    ) -> Self {
        let (value, error) = match measured {
            Ok(v) => (v, None),
            Err(e) => (f64::NAN, Some(e.to_string())),
        };
        let pass = error.is_none()
            && match expectation {
                Expectation::AtMost => value <= threshold,
                Expectation::Exceeds => value > threshold,
            };
        Self { description: description.into(), norm_type, value, threshold, expectation, pass, context, error }
    }

    pub fn check(description: impl Into<String>, norm_type: NormType, measured: Result<f64>, threshold: f64, context: ReportContext) -> Self {
        Self::from_measurement(description, norm_type, measured, threshold, Expectation::AtMost, context)
    }

    pub fn mutation(description: impl Into<String>, norm_type: NormType, measured: Result<f64>, threshold: f64, context: ReportContext) -> Self {
        Self::from_measurement(description, norm_type, measured, threshold, Expectation::Exceeds, context)
    }
}

/// `‖a‖/‖b‖` with `0/0 = 0`.
fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Relative interior residual `‖iħ(ψ(t+δ) − ψ(t−δ))/(2δ) − Hψ(t)‖ / ‖Hψ(t)‖`
/// of a family of frames.
///
/// No boundary check is made: the exact families are continuum states that
/// do not decay, and the residual is measured on the interior only.
pub fn tdse_residual<F>(family: F, model: &OscillatorModel, t: f64, dt_fd: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<WavefunctionFrame>,
{
    if !(dt_fd > 0.0) {
        return Err(Error::InvalidArgument(format!("finite-difference step must be positive, got {dt_fd}")));
    }
    let plus = family(t + dt_fd)?;
    let here = family(t)?;
    let minus = family(t - dt_fd)?;
    let grid = *here.grid();
    let c = HamiltonianCoefficients::at(model, t)?;
    let h_psi = hamiltonian_action(&c, &grid, here.values());
    let ih = Complex64::new(0.0, model.hbar() / (2.0 * dt_fd));
    let r: Vec<Complex64> = plus
        .values()
        .iter()
        .zip(minus.values())
        .zip(&h_psi)
        .map(|((p, m), hp)| ih * (p - m) - hp)
        .collect();
    Ok(ratio(interior_norm(&r, &grid), interior_norm(&h_psi, &grid)))
}

/// `⟨I⟩(t)` of one frame, normalized by its grid norm.
pub fn invariant_expectation(model: &OscillatorModel, ermakov: &ErmakovSolution, frame: &WavefunctionFrame) -> Result<(f64, f64)> {
    frame.check_boundary()?;
    let c = InvariantCoefficients::at(model, ermakov, frame.t())?;
    let i_psi = invariant_action(&c, frame.grid(), frame.values());
    let n = frame.norm_sq();
    if n == 0.0 {
        return Ok((0.0, 0.0));
    }
    let h = frame.grid().spacing();
    let mean = crate::operators::inner(frame.values(), &i_psi, h).re / n;
    let second = i_psi.iter().map(|v| v.norm_sqr()).sum::<f64>() * h / n;
    Ok((mean, second.sqrt()))
}

/// `max_t |⟨I⟩(t) − ⟨I⟩(0)| / (|⟨I⟩(0)| + 10⁻³⟨I²⟩(0)^{1/2})` over the
/// stored frames of a run.
pub fn invariant_drift(run: &PropagationRun, ermakov: &ErmakovSolution) -> Result<f64> {
    let (i0, rms0) = invariant_expectation(&run.model, ermakov, &run.frames[0])?;
    let denom = i0.abs() + 1e-3 * rms0;
    let mut worst: f64 = 0.0;
    for f in &run.frames[1..] {
        let (i, _) = invariant_expectation(&run.model, ermakov, f)?;
        worst = worst.max(ratio((i - i0).abs(), denom));
    }
    Ok(worst)
}

/// Solution of `q̈ + γq̇ − Ω²q = 0` with dense output.
#[derive(Debug, Clone)]
pub struct ClassicalTrajectory {
    pub times: Vec<f64>,
    pub q: Vec<f64>,
    pub q_dot: Vec<f64>,
    dense: Trajectory,
    model: OscillatorModel,
    omega_sq_scale: f64,
}

impl ClassicalTrajectory {
    /// `(q, q̇)` at any time of the span.
    pub fn at(&self, t: f64) -> Result<(f64, f64)> {
        let s = self.dense.eval(t)?;
        Ok((s[0], s[1]))
    }

    /// Largest scaled residual `|q̈ + γq̇ − Ω²q| / (|γq̇| + |Ω²q| + |q̈| + ε)`
    /// at the midpoints between steps, with q̈ from the interpolant.
    pub fn max_residual(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for w in self.times.windows(2) {
            let t = 0.5 * (w[0] + w[1]);
            let s = self.dense.eval(t)?;
            let d = self.dense.eval_derivative(t)?;
            let g = self.model.gamma(t)?;
            let o2 = self.omega_sq_scale * self.model.modified_frequency_sq(t)?;
            let r = d[1] + g * s[1] - o2 * s[0];
            let scale = (g * s[1]).abs() + (o2 * s[0]).abs() + d[1].abs() + f64::MIN_POSITIVE;
            worst = worst.max(r.abs() / scale);
        }
        Ok(worst)
    }
}

pub fn classical_solve(model: &OscillatorModel, q0: f64, qdot0: f64, t_span: (f64, f64)) -> Result<ClassicalTrajectory> {
    classical_solve_scaled(model, q0, qdot0, t_span, 1.0)
}

/// As [`classical_solve`] with Ω² multiplied by `omega_sq_scale`.
pub fn classical_solve_scaled(
    model: &OscillatorModel,
    q0: f64,
    qdot0: f64,
    t_span: (f64, f64),
    omega_sq_scale: f64,
) -> Result<ClassicalTrajectory> {
    model.check_time(t_span.0)?;
    model.check_time(t_span.1)?;
    let rhs = |t: f64, s: &[f64], ds: &mut [f64]| match (model.gamma(t), model.modified_frequency_sq(t)) {
        (Ok(g), Ok(o2)) => {
            ds[0] = s[1];
            ds[1] = -g * s[1] + omega_sq_scale * o2 * s[0];
        }
        _ => {
            ds[0] = f64::NAN;
            ds[1] = f64::NAN;
        }
    };
    let problem = IntegrationProblem::new(rhs, vec![q0, qdot0], t_span)
        .tolerances(1e-12, 1e-14)
        .dense_output(true);
    let dense = integrate(&problem)?;
    let times = dense.times().to_vec();
    let q = (0..dense.len()).map(|i| dense.state(i)[0]).collect();
    let q_dot = (0..dense.len()).map(|i| dense.state(i)[1]).collect();
    Ok(ClassicalTrajectory { times, q, q_dot, dense, model: model.clone(), omega_sq_scale })
}

/// `(⟨q⟩, ⟨p⟩)` of a frame, with p = −iħD1 on the frame's stencil.
pub fn position_momentum(frame: &WavefunctionFrame, hbar: f64) -> (f64, f64) {
    let grid = frame.grid();
    let psi = frame.values();
    let n = frame.norm_sq();
    if n == 0.0 {
        return (0.0, 0.0);
    }
    let h = grid.spacing();
    let q = grid.nodes().iter().zip(psi).map(|(q, v)| q * v.norm_sqr()).sum::<f64>() * h / n;
    let mut d1 = vec![Complex64::new(0.0, 0.0); psi.len()];
    stencil::apply_d1(grid.order, h, psi, &mut d1);
    let p = (Complex64::new(0.0, -hbar) * crate::operators::inner(psi, &d1, h)).re / n;
    (q, p)
}

/// `⟨q⟩` of every stored frame.
pub fn centroid_history(run: &PropagationRun) -> Vec<(f64, f64)> {
    let hbar = run.model.hbar();
    run.frames.iter().map(|f| (f.t(), position_momentum(f, hbar).0)).collect()
}

pub fn ehrenfest_check(run: &PropagationRun, model: &OscillatorModel) -> Result<f64> {
    ehrenfest_check_scaled(run, model, 1.0)
}

/// Max deviation of the quantum centroid from the classical trajectory
/// seeded with `(⟨q⟩(0), ⟨p⟩(0)/M + y⟨q⟩(0))`, relative to max |⟨q⟩|.
/// The classical side uses Ω² scaled by `omega_sq_scale`.
pub fn ehrenfest_check_scaled(run: &PropagationRun, model: &OscillatorModel, omega_sq_scale: f64) -> Result<f64> {
    for f in &run.frames {
        f.check_boundary()?;
    }
    let first = &run.frames[0];
    let t0 = first.t();
    let (q0, p0) = position_momentum(first, model.hbar());
    let (m0, _) = model.mass(t0)?;
    let y0 = model.y(t0)?.map_or(0.0, |(y, _)| y);
    let v0 = p0 / m0 + y0 * q0;
    let centroid = centroid_history(run);
    let t1 = centroid.last().map_or(t0, |c| c.0);
    if t1 == t0 {
        return Ok(0.0);
    }
    let classical = classical_solve_scaled(model, q0, v0, (t0, t1), omega_sq_scale)?;
    let mut dev: f64 = 0.0;
    let mut peak: f64 = 0.0;
    for &(t, q) in &centroid {
        dev = dev.max((q - classical.at(t)?.0).abs());
        peak = peak.max(q.abs());
    }
    Ok(if peak == 0.0 { dev } else { dev / peak })
}

/// Smooth interior-supported trial frame: a sum of three random complex
/// Gaussians centred in the middle half of the grid.
pub fn random_interior_frame<R: Rng>(grid: GridSpec, t: f64, rng: &mut R) -> Result<WavefunctionFrame> {
    let span = grid.q_max - grid.q_min;
    let mid = 0.5 * (grid.q_min + grid.q_max);
    let bumps: Vec<(f64, f64, f64, Complex64)> = (0..3)
        .map(|_| {
            let q0 = mid + rng.gen_range(-0.1..0.1) * span;
            let s = rng.gen_range(0.03..0.05) * span;
            let k = rng.gen_range(-1.0..1.0) / s;
            let a = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            (q0, s, k, a)
        })
        .collect();
    WavefunctionFrame::from_fn(grid, t, |q| {
        bumps
            .iter()
            .map(|&(q0, s, k, a)| a * Complex64::from_polar((-(q - q0).powi(2) / (2.0 * s * s)).exp(), k * q))
            .sum()
    })?
    .normalize()
}

pub fn gauge_identity_check(
    model: &OscillatorModel,
    ermakov: &ErmakovSolution,
    grid: &GridSpec,
    t: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    gauge_identity_check_with(model, ermakov, grid, t, trials, seed, GaugeDirection::Forward)
}

/// `max_trials ‖U I U† f − I′ f‖ / ‖I′ f‖` in interior L², with U taken in
/// direction `u`; passing `Inverse` flips the sign of the exponent.
pub fn gauge_identity_check_with(
    model: &OscillatorModel,
    ermakov: &ErmakovSolution,
    grid: &GridSpec,
    t: f64,
    trials: usize,
    seed: u64,
    u: GaugeDirection,
) -> Result<f64> {
    let c = InvariantCoefficients::at(model, ermakov, t)?;
    let u_dag = match u {
        GaugeDirection::Forward => GaugeDirection::Inverse,
        GaugeDirection::Inverse => GaugeDirection::Forward,
    };
    let fwd = gauge_factors(&c, grid, u);
    let inv = gauge_factors(&c, grid, u_dag);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let f = random_interior_frame(*grid, t, &mut rng)?;
        f.check_boundary()?;
        let g: Vec<Complex64> = f.values().iter().zip(&inv).map(|(v, w)| v * w).collect();
        let ig = invariant_action(&c, grid, &g);
        let uig: Vec<Complex64> = ig.iter().zip(&fwd).map(|(v, w)| v * w).collect();
        let ipf = transformed_invariant_action(c.hbar, c.rho, grid, f.values());
        let d: Vec<Complex64> = uig.iter().zip(&ipf).map(|(a, b)| a - b).collect();
        worst = worst.max(ratio(interior_norm(&d, grid), interior_norm(&ipf, grid)));
    }
    Ok(worst)
}

/// ρ scaled by a constant factor: not a solution of the auxiliary equation
/// unless the factor is 1.
pub fn scaled_rho(ermakov: &ErmakovSolution, factor: f64) -> ErmakovSolution {
    let inner = ermakov.clone();
    ErmakovSolution::from_fn(ermakov.model().clone(), ermakov.window(), move |t| match inner.state(t) {
        Ok(s) => RhoState { rho: factor * s.rho, rho_dot: factor * s.rho_dot, rho_ddot: factor * s.rho_ddot },
        Err(_) => RhoState { rho: f64::NAN, rho_dot: f64::NAN, rho_ddot: f64::NAN },
    })
}

/// Sorts reports by description for an order-independent merge.
pub fn sort_reports(reports: &mut [ResidualReport]) {
    reports.sort_by(|a, b| a.description.cmp(&b.description));
}
