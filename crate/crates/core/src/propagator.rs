//! Crank–Nicolson integration of the time-dependent Schrödinger equation on
//! the finite-difference Hamiltonian.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operators::{hamiltonian_matrix, GridSpec, HamiltonianCoefficients, WavefunctionFrame};
use crate::params::OscillatorModel;

fn cn_advance(model: &OscillatorModel, grid: &GridSpec, t: f64, psi: &[Complex64], dt: f64) -> Result<Vec<Complex64>> {
    let c = HamiltonianCoefficients::at(model, t + 0.5 * dt)?;
    let h = hamiltonian_matrix(&c, grid);
    let one = Complex64::new(1.0, 0.0);
    let s = Complex64::new(0.0, 0.5 * dt / c.hbar);
    let rhs = h.scaled_plus_identity(one, -s).matvec(psi);
    // 1 + i·s·H has identity Hermitian part, so no row exchanges are needed;
    // the pivoted path is a safety net.
    let a = h.scaled_plus_identity(one, s);
    a.solve_unpivoted(&rhs).or_else(|_| a.solve(&rhs))
}

/// One step `(1 + i dt H/2ħ) ψ_new = (1 − i dt H/2ħ) ψ_old`, with H at the
/// midpoint time.
pub fn cn_step(model: &OscillatorModel, frame: &WavefunctionFrame, dt: f64) -> Result<WavefunctionFrame> {
    if !(dt.is_finite() && dt != 0.0) {
        return Err(Error::InvalidArgument(format!("time step must be finite and nonzero, got {dt}")));
    }
    frame.check_boundary()?;
    let t = frame.t();
    model.check_time(t + dt)?;
    let values = cn_advance(model, frame.grid(), t, frame.values(), dt)?;
    WavefunctionFrame::new(*frame.grid(), t + dt, values)
}

/// Largest dt for which the phase advance per step of the fastest grid mode
/// stays below one radian: `h² M_min / ħ`. CN is stable for any dt; this is
/// an accuracy guide only.
pub fn accuracy_dt_bound(model: &OscillatorModel, grid: &GridSpec, t0: f64, t1: f64) -> Result<f64> {
    let mut m_min = f64::INFINITY;
    for k in 0..=64 {
        let t = t0 + (t1 - t0) * k as f64 / 64.0;
        m_min = m_min.min(model.mass(t)?.0);
    }
    let h = grid.spacing();
    Ok(h * h * m_min / model.hbar())
}

/// Largest instantaneous exponential growth rate `√max(Ω₁², 0)` sampled over
/// `[t0, t1]`.
pub fn growth_rate(model: &OscillatorModel, t0: f64, t1: f64) -> Result<f64> {
    let mut rate: f64 = 0.0;
    for k in 0..=64 {
        let t = t0 + (t1 - t0) * k as f64 / 64.0;
        rate = rate.max(model.frozen_omega1_sq(t)?.max(0.0).sqrt());
    }
    Ok(rate)
}

/// `q_max = extent · e^{rate · duration} · safety`, safety = 3.
pub fn recommended_q_max(extent: f64, rate: f64, duration: f64) -> f64 {
    3.0 * extent.abs() * (rate * duration.abs()).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationOptions {
    /// Keep every `stride`-th frame; the final frame is always kept.
    pub stride: usize,
    /// Abort with `BoundaryLeak` as soon as a frame reaches the edges.
    pub check_boundary: bool,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self { stride: 1, check_boundary: true }
    }
}

#[derive(Debug, Clone)]
pub struct PropagationRun {
    pub model: OscillatorModel,
    pub grid: GridSpec,
    pub dt: f64,
    pub frames: Vec<WavefunctionFrame>,
    /// `(t, ‖ψ(t)‖²)` after every step, starting with the initial frame.
    pub norm_history: Vec<(f64, f64)>,
}

impl PropagationRun {
    pub fn final_frame(&self) -> &WavefunctionFrame {
        self.frames.last().expect("a run always holds its initial frame")
    }

    /// `max |N(t)/N(0) − 1|`; zero for the zero state.
    pub fn norm_drift(&self) -> f64 {
        let n0 = self.norm_history[0].1;
        if n0 == 0.0 {
            return 0.0;
        }
        self.norm_history.iter().map(|(_, n)| (n / n0 - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Number of steps and the step actually used to land on `t_final`.
fn step_plan(t0: f64, t_final: f64, dt: f64) -> Result<(usize, f64)> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    let span = t_final - t0;
    if !span.is_finite() {
        return Err(Error::InvalidArgument("non-finite propagation span".into()));
    }
    let ratio = span.abs() / dt;
    let mut n = ratio.round();
    if (n - ratio).abs() > 1e-9 * ratio.max(1.0) {
        n = ratio.ceil();
    }
    let n = n as usize;
    if n == 0 {
        return Ok((0, dt));
    }
    Ok((n, span / n as f64))
}

pub fn propagate(
    model: &OscillatorModel,
    initial: &WavefunctionFrame,
    t_final: f64,
    dt: f64,
) -> Result<PropagationRun> {
    propagate_with(model, initial, t_final, dt, PropagationOptions::default(), |_| Ok(()))
}

/// Propagates `initial` to `t_final`, calling `observer` on every step
/// (including the initial frame) before decimation.
pub fn propagate_with<F>(
    model: &OscillatorModel,
    initial: &WavefunctionFrame,
    t_final: f64,
    dt: f64,
    options: PropagationOptions,
    mut observer: F,
) -> Result<PropagationRun>
where
    F: FnMut(&WavefunctionFrame) -> Result<()>,
{
    let stride = options.stride.max(1);
    let t0 = initial.t();
    let (steps, step) = step_plan(t0, t_final, dt)?;
    model.check_time(t0)?;
    model.check_time(t_final)?;
    if options.check_boundary {
        initial.check_boundary()?;
    }
    let grid = *initial.grid();
    observer(initial)?;
    let mut frames = vec![initial.clone()];
    let mut norm_history = vec![(t0, initial.norm_sq())];
    let mut current = initial.clone();
    for k in 1..=steps {
        let t_prev = t0 + (k - 1) as f64 * step;
        let t = if k == steps { t_final } else { t0 + k as f64 * step };
        let values = cn_advance(model, &grid, t_prev, current.values(), t - t_prev)?;
        current = WavefunctionFrame::new(grid, t, values)?;
        if options.check_boundary {
            current.check_boundary()?;
        }
        observer(&current)?;
        norm_history.push((t, current.norm_sq()));
        if k % stride == 0 || k == steps {
            frames.push(current.clone());
        }
    }
    Ok(PropagationRun { model: model.clone(), grid, dt: step, frames, norm_history })
}
