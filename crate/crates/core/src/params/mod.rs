//! Model coefficients M(t), ω(t), y(t) and the quantities derived from them.
//!
//! The Hamiltonian is `H = p²/(2M) − ½Mω²q² + (y/2)(pq + qp)`. From the
//! coefficients we derive the damping rate `γ = d/dt ln M` and the modified
//! frequency `Ω² = ω² + y² + γy + ẏ` that drives both the classical motion
//! and the auxiliary (Ermakov) equation.
//!
//! `y(t)` must be differentiable: `Ω²` contains `ẏ`, which is always taken
//! from the descriptor's own derivative channel.

mod spline;

pub use spline::CubicSpline;

use crate::error::{Error, Result};

/// Closed validity interval of a time function. Either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Window {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if start.is_nan() || end.is_nan() || start > end {
            return Err(Error::InvalidDescriptor(format!("invalid window [{start}, {end}]")));
        }
        Ok(Self { start, end })
    }

    pub const fn unbounded() -> Self {
        Self { start: f64::NEG_INFINITY, end: f64::INFINITY }
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t <= self.end
    }

    pub fn check(&self, t: f64) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(Error::OutOfWindow { t, t_min: self.start, t_max: self.end })
        }
    }

    pub fn intersect(&self, other: &Window) -> Result<Window> {
        Window::new(self.start.max(other.start), self.end.min(other.end))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TimeFunctionKind {
    Constant(f64),
    /// `amplitude · exp(rate · t)`
    Exponential { amplitude: f64, rate: f64 },
    /// Coefficients in increasing powers of t.
    Polynomial(Vec<f64>),
    Tabulated(CubicSpline),
}

/// A scalar function of time with a value and a first-derivative channel.
///
/// Evaluating outside the window is an error; there is no extrapolation.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeFunction {
    kind: TimeFunctionKind,
    window: Window,
}

impl TimeFunction {
    pub fn constant(value: f64) -> Self {
        Self { kind: TimeFunctionKind::Constant(value), window: Window::unbounded() }
    }

    pub fn exponential(amplitude: f64, rate: f64) -> Self {
        Self {
            kind: TimeFunctionKind::Exponential { amplitude, rate },
            window: Window::unbounded(),
        }
    }

    pub fn polynomial(coefficients: Vec<f64>) -> Self {
        Self { kind: TimeFunctionKind::Polynomial(coefficients), window: Window::unbounded() }
    }

    /// Cubic-spline (not-a-knot) interpolation of at least four samples with
    /// strictly increasing times. The window is the sample span.
    pub fn tabulated(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let spline = CubicSpline::not_a_knot(times, values)?;
        let window = Window::new(spline.x_min(), spline.x_max())?;
        Ok(Self { kind: TimeFunctionKind::Tabulated(spline), window })
    }

    /// Restricts the window. The new window must lie inside the current one.
    pub fn with_window(mut self, window: Window) -> Result<Self> {
        if window.start < self.window.start || window.end > self.window.end {
            return Err(Error::InvalidDescriptor(format!(
                "window [{}, {}] exceeds the descriptor range [{}, {}]",
                window.start, window.end, self.window.start, self.window.end
            )));
        }
        self.window = window;
        Ok(self)
    }

    pub fn kind(&self) -> &TimeFunctionKind {
        &self.kind
    }

    pub fn window(&self) -> Window {
        self.window
    }

    /// `(f(t), f'(t))`.
    pub fn eval(&self, t: f64) -> Result<(f64, f64)> {
        self.window.check(t)?;
        Ok(match &self.kind {
            TimeFunctionKind::Constant(c) => (*c, 0.0),
            TimeFunctionKind::Exponential { amplitude, rate } => {
                let v = amplitude * (rate * t).exp();
                (v, rate * v)
            }
            TimeFunctionKind::Polynomial(c) => {
                let mut v = 0.0;
                let mut d = 0.0;
                for &ck in c.iter().rev() {
                    d = d * t + v;
                    v = v * t + ck;
                }
                (v, d)
            }
            TimeFunctionKind::Tabulated(s) => s.eval(t),
        })
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        self.eval(t).map(|(v, _)| v)
    }

    pub fn derivative(&self, t: f64) -> Result<f64> {
        self.eval(t).map(|(_, d)| d)
    }
}

/// The coefficient triple `(M(t), ω(t), y(t))` together with ħ.
///
/// `y == None` is the y-suppressed path: every y-dependent term is skipped
/// rather than evaluated with zero values.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorModel {
    hbar: f64,
    mass: TimeFunction,
    frequency: TimeFunction,
    y: Option<TimeFunction>,
    window: Window,
}

impl OscillatorModel {
    pub fn new(
        hbar: f64,
        mass: TimeFunction,
        frequency: TimeFunction,
        y: Option<TimeFunction>,
    ) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")));
        }
        let mut window = mass.window().intersect(&frequency.window())?;
        if let Some(y) = &y {
            window = window.intersect(&y.window())?;
        }
        Ok(Self { hbar, mass, frequency, y, window })
    }

    /// Restricts the model to a sub-window of its current validity range.
    pub fn with_window(mut self, window: Window) -> Result<Self> {
        if window.start < self.window.start || window.end > self.window.end {
            return Err(Error::InvalidDescriptor(format!(
                "window [{}, {}] exceeds the model range [{}, {}]",
                window.start, window.end, self.window.start, self.window.end
            )));
        }
        self.window = window;
        Ok(self)
    }

    /// Same model with `y` removed from every formula.
    pub fn y_suppressed(&self) -> Self {
        Self { y: None, ..self.clone() }
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn mass_fn(&self) -> &TimeFunction {
        &self.mass
    }

    pub fn frequency_fn(&self) -> &TimeFunction {
        &self.frequency
    }

    pub fn y_fn(&self) -> Option<&TimeFunction> {
        self.y.as_ref()
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        self.window.check(t)
    }

    /// `(M, Ṁ)` with positivity enforced.
    pub fn mass(&self, t: f64) -> Result<(f64, f64)> {
        self.window.check(t)?;
        let (m, dm) = self.mass.eval(t)?;
        if !(m > 0.0) {
            return Err(Error::NonpositiveMass { t, value: m });
        }
        Ok((m, dm))
    }

    pub fn gamma(&self, t: f64) -> Result<f64> {
        let (m, dm) = self.mass(t)?;
        Ok(dm / m)
    }

    pub fn omega_sq(&self, t: f64) -> Result<f64> {
        self.window.check(t)?;
        let w = self.frequency.value(t)?;
        Ok(w * w)
    }

    /// `(y, ẏ)`; `None` on the y-suppressed path.
    pub fn y(&self, t: f64) -> Result<Option<(f64, f64)>> {
        self.window.check(t)?;
        match &self.y {
            Some(y) => y.eval(t).map(Some),
            None => Ok(None),
        }
    }

    /// `Ω²(t) = ω² + y² + γy + ẏ`.
    pub fn modified_frequency_sq(&self, t: f64) -> Result<f64> {
        let w2 = self.omega_sq(t)?;
        match self.y(t)? {
            Some((y, dy)) => {
                let g = self.gamma(t)?;
                Ok(w2 + y * y + g * y + dy)
            }
            None => Ok(w2),
        }
    }

    /// `Ω²(t) + γ(t)²/4`, the frozen-coefficient analogue of `Ω₁²`.
    pub fn frozen_omega1_sq(&self, t: f64) -> Result<f64> {
        let g = self.gamma(t)?;
        Ok(self.modified_frequency_sq(t)? + 0.25 * g * g)
    }

    /// Bundles the coefficients needed by the grid operators at time `t`.
    pub fn coefficients(&self, t: f64) -> Result<Coefficients> {
        let (mass, _) = self.mass(t)?;
        Ok(Coefficients {
            hbar: self.hbar,
            mass,
            omega_sq: self.omega_sq(t)?,
            y: self.y(t)?.map(|(y, _)| y),
        })
    }
}

/// Instantaneous Hamiltonian coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub hbar: f64,
    pub mass: f64,
    pub omega_sq: f64,
    pub y: Option<f64>,
}

/// Constant frequency and `y`, exponentially growing mass `M = m·e^{γt}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaldirolaKanaiParams {
    pub m: f64,
    pub gamma: f64,
    pub omega0: f64,
    pub y0: f64,
    pub hbar: f64,
}

impl CaldirolaKanaiParams {
    pub fn new(m: f64, gamma: f64, omega0: f64, y0: f64) -> Self {
        Self { m, gamma, omega0, y0, hbar: 1.0 }
    }

    pub fn with_hbar(self, hbar: f64) -> Self {
        Self { hbar, ..self }
    }

    /// `Ω₀² = ω₀² + y₀² + γy₀`
    pub fn omega0_sq(&self) -> f64 {
        self.omega0 * self.omega0 + self.y0 * self.y0 + self.gamma * self.y0
    }

    /// `Ω₁² = Ω₀² + γ²/4`
    pub fn omega1_sq(&self) -> f64 {
        self.omega0_sq() + 0.25 * self.gamma * self.gamma
    }

    pub fn omega1(&self) -> Result<f64> {
        let s = self.omega1_sq();
        if s > 0.0 {
            Ok(s.sqrt())
        } else {
            Err(Error::NonpositiveOmega1Sq { value: s })
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(Error::NonpositiveMass { t: 0.0, value: self.m });
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(Error::InvalidArgument(format!("hbar must be positive, got {}", self.hbar)));
        }
        Ok(())
    }
}

pub fn make_caldirola_kanai(ck: &CaldirolaKanaiParams) -> Result<OscillatorModel> {
    ck.validate()?;
    OscillatorModel::new(
        ck.hbar,
        TimeFunction::exponential(ck.m, ck.gamma),
        TimeFunction::constant(ck.omega0),
        Some(TimeFunction::constant(ck.y0)),
    )
}
