//! The auxiliary c-number ρ(t) that makes the quadratic invariant conserved:
//!
//! ```text
//! ρ̈ + γ(t)ρ̇ − Ω²(t)ρ = −1 / (M²ρ³)
//! ```
//!
//! ρ is kept strictly positive. The right-hand side pulls ρ towards zero, so
//! finite-time collapse is possible for some parameters; it is reported as
//! [`Error::RhoCollapse`] instead of being continued.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ode::{integrate, IntegrationProblem, Trajectory};
use crate::params::{CaldirolaKanaiParams, OscillatorModel, Window};

pub const DEFAULT_RHO_FLOOR: f64 = 1e-8;

/// `(ρ, ρ̇, ρ̈)` at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoState {
    pub rho: f64,
    pub rho_dot: f64,
    pub rho_ddot: f64,
}

type RhoFn = Arc<dyn Fn(f64) -> RhoState + Send + Sync>;

#[derive(Clone)]
enum RhoSource {
    ClosedForm(CaldirolaKanaiParams),
    Numeric(Trajectory),
    Custom(RhoFn),
}

impl fmt::Debug for RhoSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RhoSource::ClosedForm(ck) => f.debug_tuple("ClosedForm").field(ck).finish(),
            RhoSource::Numeric(tr) => write!(f, "Numeric({} nodes)", tr.len()),
            RhoSource::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// ρ(t) and ρ̇(t) over a time window, bound to the model it was built for.
#[derive(Debug, Clone)]
pub struct ErmakovSolution {
    model: OscillatorModel,
    source: RhoSource,
    window: Window,
}

impl ErmakovSolution {
    /// Wraps the closed form `ρ = (mΩ₁)^{-1/2} e^{-γt/2}` of the
    /// exponentially-growing-mass model.
    pub fn closed_form(model: OscillatorModel, ck: CaldirolaKanaiParams, window: Window) -> Result<Self> {
        ck.omega1()?;
        Ok(Self { model, source: RhoSource::ClosedForm(ck), window })
    }

    /// Wraps an arbitrary, unchecked ρ(t). Intended for experiments and
    /// mutation tests where ρ deliberately does not solve the equation.
    pub fn from_fn<F>(model: OscillatorModel, window: Window, f: F) -> Self
    where
        F: Fn(f64) -> RhoState + Send + Sync + 'static,
    {
        Self { model, source: RhoSource::Custom(Arc::new(f)), window }
    }

    pub fn model(&self) -> &OscillatorModel {
        &self.model
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(self.source, RhoSource::ClosedForm(_))
    }

    pub fn trajectory(&self) -> Option<&Trajectory> {
        match &self.source {
            RhoSource::Numeric(tr) => Some(tr),
            _ => None,
        }
    }

    pub fn state(&self, t: f64) -> Result<RhoState> {
        self.window.check(t)?;
        match &self.source {
            RhoSource::ClosedForm(ck) => {
                let (rho, rho_dot) = closed_form_rho_ck(ck, t)?;
                let half = 0.5 * ck.gamma;
                Ok(RhoState { rho, rho_dot, rho_ddot: half * half * rho })
            }
            RhoSource::Numeric(tr) => {
                let s = tr.eval(t)?;
                let d = tr.eval_derivative(t)?;
                Ok(RhoState { rho: s[0], rho_dot: s[1], rho_ddot: d[1] })
            }
            RhoSource::Custom(f) => Ok(f(t)),
        }
    }

    /// `(ρ, ρ̇)` at `t`.
    pub fn rho(&self, t: f64) -> Result<(f64, f64)> {
        self.state(t).map(|s| (s.rho, s.rho_dot))
    }

    /// Scaled residual `|r| / (1 + |Ω²ρ| + 1/(M²ρ³))` of the auxiliary
    /// equation at `t`, with ρ̈ taken from the interpolant.
    pub fn scaled_residual(&self, t: f64) -> Result<f64> {
        let s = self.state(t)?;
        let r = ermakov_residual(&self.model, s.rho, s.rho_dot, s.rho_ddot, t)?;
        let (m, _) = self.model.mass(t)?;
        let o2 = self.model.modified_frequency_sq(t)?;
        let scale = 1.0 + (o2 * s.rho).abs() + 1.0 / (m * m * s.rho.abs().powi(3));
        Ok(r.abs() / scale)
    }

    /// Largest scaled residual over `samples` uniformly random window times.
    pub fn max_sampled_residual(&self, samples: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (self.window.start, self.window.end);
        let mut worst = 0.0_f64;
        for _ in 0..samples {
            let t = if a == b { a } else { rng.gen_range(a..=b) };
            worst = worst.max(self.scaled_residual(t)?);
        }
        Ok(worst)
    }
}

/// `ρ = (mΩ₁)^{-1/2} e^{-γt/2}`, `ρ̇ = −(γ/2)ρ`.
pub fn closed_form_rho_ck(ck: &CaldirolaKanaiParams, t: f64) -> Result<(f64, f64)> {
    let omega1 = ck.omega1()?;
    let rho = (ck.m * omega1).powf(-0.5) * (-0.5 * ck.gamma * t).exp();
    Ok((rho, -0.5 * ck.gamma * rho))
}

/// `ρ̈ + γρ̇ − Ω²ρ + 1/(M²ρ³)`; zero for exact solutions.
pub fn ermakov_residual(
    model: &OscillatorModel,
    rho: f64,
    rho_dot: f64,
    rho_ddot: f64,
    t: f64,
) -> Result<f64> {
    if rho == 0.0 {
        return Err(Error::InvalidArgument("rho must be nonzero".into()));
    }
    let (m, _) = model.mass(t)?;
    let g = model.gamma(t)?;
    let o2 = model.modified_frequency_sq(t)?;
    Ok(rho_ddot + g * rho_dot - o2 * rho + 1.0 / (m * m * rho * rho * rho))
}

/// Default seed: the frozen-coefficient value `ρ = (MΩ₁)^{-1/2}`,
/// `ρ̇ = −γρ/2` when `Ω₁²(t0) > 0`, otherwise `(1, 0)`.
pub fn default_initial_data(model: &OscillatorModel, t0: f64) -> Result<(f64, f64)> {
    let o1sq = model.frozen_omega1_sq(t0)?;
    if o1sq > 0.0 {
        let (m, _) = model.mass(t0)?;
        let rho = (m * o1sq.sqrt()).powf(-0.5);
        Ok((rho, -0.5 * model.gamma(t0)? * rho))
    } else {
        Ok((1.0, 0.0))
    }
}

/// Settings for [`solve_rho`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErmakovTolerance {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub rho_floor: f64,
    pub max_steps: usize,
}

impl Default for ErmakovTolerance {
    fn default() -> Self {
        Self { rel_tol: 1e-12, abs_tol: 1e-14, rho_floor: DEFAULT_RHO_FLOOR, max_steps: 2_000_000 }
    }
}

pub fn solve_rho(
    model: &OscillatorModel,
    rho0: f64,
    rho_dot0: f64,
    t_span: (f64, f64),
    tol: ErmakovTolerance,
) -> Result<ErmakovSolution> {
    if !(rho0 > 0.0 && rho0.is_finite()) || !rho_dot0.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "rho(0) must be positive and finite, got ({rho0}, {rho_dot0})"
        )));
    }
    let (t0, t1) = t_span;
    model.check_time(t0)?;
    model.check_time(t1)?;
    let floor = tol.rho_floor;
    if rho0 <= floor {
        return Err(Error::RhoCollapse { t: t0, rho: rho0, floor });
    }

    let rhs_model = model.clone();
    let rhs = move |t: f64, s: &[f64], ds: &mut [f64]| {
        let (rho, rho_dot) = (s[0], s[1]);
        ds[0] = rho_dot;
        ds[1] = match (rhs_model.mass(t), rhs_model.gamma(t), rhs_model.modified_frequency_sq(t)) {
            (Ok((m, _)), Ok(g), Ok(o2)) => -g * rho_dot + o2 * rho - 1.0 / (m * m * rho * rho * rho),
            _ => f64::NAN,
        };
    };
    let problem = IntegrationProblem::new(rhs, vec![rho0, rho_dot0], t_span)
        .tolerances(tol.rel_tol, tol.abs_tol)
        .max_steps(tol.max_steps)
        .blow_up_bound(f64::INFINITY)
        .guard(move |_, s| s[0] <= floor);

    let trajectory = match integrate(&problem) {
        Ok(tr) => tr,
        Err(Error::GuardTriggered { t, state }) => {
            return Err(Error::RhoCollapse { t, rho: state[0], floor })
        }
        Err(Error::NonFiniteRhs { t, state }) | Err(Error::StepUnderflow { t, state })
            if state[0].abs() <= 1e-2 * rho0 =>
        {
            return Err(Error::RhoCollapse { t, rho: state[0], floor })
        }
        Err(e) => return Err(e),
    };
    let window = Window::new(t0.min(t1), t0.max(t1))?;
    Ok(ErmakovSolution { model: model.clone(), source: RhoSource::Numeric(trajectory), window })
}

/// [`solve_rho`] seeded with [`default_initial_data`] at `t_span.0`.
pub fn solve_rho_default(
    model: &OscillatorModel,
    t_span: (f64, f64),
    tol: ErmakovTolerance,
) -> Result<ErmakovSolution> {
    let (rho0, rho_dot0) = default_initial_data(model, t_span.0)?;
    solve_rho(model, rho0, rho_dot0, t_span, tol)
}
