//! Invariant eigenfunctions on a q-grid, their phases, the resulting exact
//! Schrödinger solutions, and continuum superpositions of them.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::ermakov::ErmakovSolution;
use crate::error::{Error, Result};
use crate::operators::{GridSpec, InvariantCoefficients, WavefunctionFrame};
use crate::params::{CaldirolaKanaiParams, OscillatorModel};
use crate::quadrature::{gauss_legendre, integrate_adaptive};
use crate::weber::{table_covering, EigenfunctionTable, Parity};

pub type ParityMix = (Complex64, Complex64);

pub const EVEN: ParityMix = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
pub const ODD: ParityMix = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));

/// `∫_{t0}^{t1} dt′ / (M ρ²)`.
fn inverse_mass_rho_sq_integral(
    model: &OscillatorModel,
    ermakov: &ErmakovSolution,
    t0: f64,
    t1: f64,
    tol: f64,
) -> Result<f64> {
    ermakov.window().check(t0)?;
    ermakov.window().check(t1)?;
    model.check_time(t0)?;
    model.check_time(t1)?;
    let f = |s: f64| match (model.mass(s), ermakov.rho(s)) {
        (Ok((m, _)), Ok((r, _))) => 1.0 / (m * r * r),
        _ => f64::NAN,
    };
    integrate_adaptive(f, t0, t1, tol)
}

fn phase_tol(lambda: f64, hbar: f64) -> f64 {
    1e-10 / (lambda.abs() / hbar).max(1.0)
}

/// `α_λ(t) = −(λ/ħ) ∫_0^t dt′/(Mρ²)`.
pub fn phase_alpha(lambda: f64, model: &OscillatorModel, ermakov: &ErmakovSolution, t: f64) -> Result<f64> {
    let hbar = model.hbar();
    let j = inverse_mass_rho_sq_integral(model, ermakov, 0.0, t, phase_tol(lambda, hbar))?;
    Ok(-(lambda / hbar) * j)
}

/// α sampled at increasing times, re-anchored so that `alpha[0] = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTrace {
    pub lambda: f64,
    pub times: Vec<f64>,
    pub alpha: Vec<f64>,
}

pub fn phase_trace(
    lambda: f64,
    model: &OscillatorModel,
    ermakov: &ErmakovSolution,
    times: &[f64],
) -> Result<PhaseTrace> {
    if times.is_empty() || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("trace times must be nonempty and strictly increasing".into()));
    }
    let hbar = model.hbar();
    let tol = phase_tol(lambda, hbar) / times.len() as f64;
    let mut alpha = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    alpha.push(0.0);
    for w in times.windows(2) {
        acc += inverse_mass_rho_sq_integral(model, ermakov, w[0], w[1], tol)?;
        alpha.push(-(lambda / hbar) * acc);
    }
    Ok(PhaseTrace { lambda, times: times.to_vec(), alpha })
}

/// Largest |z| reached on the grid at scale ρ.
fn z_extent(grid: &GridSpec, hbar: f64, rho: f64) -> f64 {
    (2.0 / hbar).sqrt() * grid.q_min.abs().max(grid.q_max.abs()) / rho
}

/// `ρ^{-1/2} exp[iMβq²/(2ħρ)] φ(√(2/ħ) q/ρ)` with an explicit table.
pub fn eigenfunction_frame_with_table(
    table: &EigenfunctionTable,
    mix: ParityMix,
    model: &OscillatorModel,
    ermakov: &ErmakovSolution,
    grid: &GridSpec,
    t: f64,
) -> Result<WavefunctionFrame> {
    let c = InvariantCoefficients::at(model, ermakov, t)?;
    let zscale = (2.0 / c.hbar).sqrt() / c.rho;
    let amp = c.rho.powf(-0.5);
    let k = c.mass * c.beta / (2.0 * c.hbar * c.rho);
    let values = grid
        .nodes()
        .into_iter()
        .map(|q| Ok(Complex64::from_polar(amp, k * q * q) * table.eval_varphi(zscale * q, mix)?))
        .collect::<Result<Vec<_>>>()?;
    WavefunctionFrame::new(*grid, t, values)
}

pub fn eigenfunction_frame(
    lambda: f64,
    mix: ParityMix,
    model: &OscillatorModel,
    ermakov: &ErmakovSolution,
    grid: &GridSpec,
    t: f64,
) -> Result<WavefunctionFrame> {
    let (rho, _) = ermakov.rho(t)?;
    let hbar = model.hbar();
    let table = table_covering(lambda / hbar, z_extent(grid, hbar, rho))?;
    eigenfunction_frame_with_table(&table, mix, model, ermakov, grid, t)
}

fn scale_frame(frame: WavefunctionFrame, factor: Complex64) -> Result<WavefunctionFrame> {
    let values = frame.values().iter().map(|v| factor * v).collect();
    frame.with_values(values)
}

/// `e^{iα_λ(t)}` times the eigenfunction frame.
pub fn exact_solution_frame(
    lambda: f64,
    mix: ParityMix,
    model: &OscillatorModel,
    ermakov: &ErmakovSolution,
    grid: &GridSpec,
    t: f64,
) -> Result<WavefunctionFrame> {
    let alpha = phase_alpha(lambda, model, ermakov, t)?;
    let frame = eigenfunction_frame(lambda, mix, model, ermakov, grid, t)?;
    scale_frame(frame, Complex64::cis(alpha))
}

/// Closed form for the exponentially-growing-mass model:
/// `(mΩ₁)^{1/4} exp[γt/4 − iλΩ₁t/ħ − i m e^{γt}(γ/2 + y₀)q²/(2ħ)] φ[(2mΩ₁/ħ)^{1/2} e^{γt/2} q, λ/ħ]`.
pub fn ck_solution_frame(
    lambda: f64,
    mix: ParityMix,
    ck: &CaldirolaKanaiParams,
    grid: &GridSpec,
    t: f64,
) -> Result<WavefunctionFrame> {
    let omega1 = ck.omega1()?;
    let hbar = ck.hbar;
    let zscale = (2.0 * ck.m * omega1 / hbar).sqrt() * (0.5 * ck.gamma * t).exp();
    let zneed = zscale * grid.q_min.abs().max(grid.q_max.abs());
    let table = table_covering(lambda / hbar, zneed)?;
    ck_solution_frame_with_table(&table, lambda, mix, ck, grid, t)
}

pub fn ck_solution_frame_with_table(
    table: &EigenfunctionTable,
    lambda: f64,
    mix: ParityMix,
    ck: &CaldirolaKanaiParams,
    grid: &GridSpec,
    t: f64,
) -> Result<WavefunctionFrame> {
    let omega1 = ck.omega1()?;
    let hbar = ck.hbar;
    let zscale = (2.0 * ck.m * omega1 / hbar).sqrt() * (0.5 * ck.gamma * t).exp();
    let amp = (ck.m * omega1).powf(0.25) * (0.25 * ck.gamma * t).exp();
    let global = -lambda * omega1 * t / hbar;
    let k = -ck.m * (ck.gamma * t).exp() * (0.5 * ck.gamma + ck.y0) / (2.0 * hbar);
    let values = grid
        .nodes()
        .into_iter()
        .map(|q| Ok(Complex64::from_polar(amp, global + k * q * q) * table.eval_varphi(zscale * q, mix)?))
        .collect::<Result<Vec<_>>>()?;
    WavefunctionFrame::new(*grid, t, values)
}

/// Continuum normalization `⟨ψ_{λ,p}|ψ_{λ′,p}⟩ = N_p(λ) δ(λ − λ′)` of one
/// parity channel: `N_p = πħ√(2ħ) B_p²`, with `B_p` the large-z amplitude.
pub fn delta_normalization(table: &EigenfunctionTable, parity: Parity, hbar: f64) -> Result<f64> {
    let b2 = table.asymptotic_amplitude_sq(parity)?;
    Ok(std::f64::consts::PI * hbar * (2.0 * hbar).sqrt() * b2)
}

/// z range needed for a reliable asymptotic amplitude.
fn amplitude_z(epsilon: f64) -> f64 {
    (2.0 * (64.0 - epsilon).max(0.0).sqrt()).max(16.0)
}

/// Gauss–Legendre nodes and weights on `[λ_min, λ_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaQuadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl LambdaQuadrature {
    pub fn gauss_legendre(lambda_min: f64, lambda_max: f64, n: usize) -> Result<Self> {
        let (nodes, weights) = gauss_legendre(n, lambda_min, lambda_max)?;
        Ok(Self { nodes, weights })
    }
}

/// Sampled weight function of a continuum superposition.
///
/// The contribution of node i is `w_i · c_i · (mix_e φ_even + mix_o φ_odd)`,
/// with the mix normalized to unit length.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketSpec {
    lambda_nodes: Vec<f64>,
    lambda_weights: Vec<f64>,
    c_values: Vec<Complex64>,
    parity_mix: Vec<ParityMix>,
}

impl PacketSpec {
    pub fn new(
        lambda_nodes: Vec<f64>,
        lambda_weights: Vec<f64>,
        c_values: Vec<Complex64>,
        parity_mix: Vec<ParityMix>,
    ) -> Result<Self> {
        let n = lambda_nodes.len();
        if n == 0 || lambda_weights.len() != n || c_values.len() != n || parity_mix.len() != n {
            return Err(Error::InvalidArgument("packet spec vectors must be nonempty and of equal length".into()));
        }
        if lambda_nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("lambda nodes must be strictly increasing".into()));
        }
        let finite = |c: &Complex64| c.re.is_finite() && c.im.is_finite();
        if !lambda_weights.iter().all(|w| w.is_finite())
            || !c_values.iter().all(finite)
            || !parity_mix.iter().all(|(a, b)| finite(a) && finite(b))
        {
            return Err(Error::InvalidArgument("packet spec values must be finite".into()));
        }
        Ok(Self { lambda_nodes, lambda_weights, c_values, parity_mix })
    }

    /// Builds a spec from separate even and odd channel weights.
    pub fn from_channels(quad: &LambdaQuadrature, even: Vec<Complex64>, odd: Vec<Complex64>) -> Result<Self> {
        let (c, mix): (Vec<_>, Vec<_>) = even
            .iter()
            .zip(&odd)
            .map(|(&e, &o)| {
                let norm = (e.norm_sqr() + o.norm_sqr()).sqrt();
                if norm == 0.0 {
                    (Complex64::new(0.0, 0.0), EVEN)
                } else {
                    (Complex64::new(norm, 0.0), (e / norm, o / norm))
                }
            })
            .unzip();
        Self::new(quad.nodes.clone(), quad.weights.clone(), c, mix)
    }

    pub fn len(&self) -> usize {
        self.lambda_nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda_nodes.is_empty()
    }

    pub fn lambda_nodes(&self) -> &[f64] {
        &self.lambda_nodes
    }

    pub fn lambda_weights(&self) -> &[f64] {
        &self.lambda_weights
    }

    pub fn c_values(&self) -> &[Complex64] {
        &self.c_values
    }

    pub fn parity_mix(&self) -> &[ParityMix] {
        &self.parity_mix
    }

    /// Per-node `(c_even, c_odd)`.
    pub fn channels(&self) -> Vec<(Complex64, Complex64)> {
        self.c_values.iter().zip(&self.parity_mix).map(|(c, (e, o))| (c * e, c * o)).collect()
    }

    /// `Σ w |c|²`.
    pub fn weighted_norm_sq(&self) -> f64 {
        self.lambda_weights.iter().zip(&self.c_values).map(|(w, c)| w.abs() * c.norm_sqr()).sum()
    }

    /// Truncation indicator: the larger |c| at the two end nodes, relative
    /// to the largest |c| overall.
    pub fn tail_estimate(&self) -> f64 {
        let peak = self.c_values.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let ends = self.c_values[0].norm().max(self.c_values[self.len() - 1].norm());
        ends / peak
    }
}

/// Table for λ that covers both the grid at t and the asymptotic region.
fn packet_table(
    lambda: f64,
    model: &OscillatorModel,
    ermakov: &ErmakovSolution,
    grid: &GridSpec,
    t: f64,
) -> Result<Arc<EigenfunctionTable>> {
    let hbar = model.hbar();
    let (rho, _) = ermakov.rho(t)?;
    let eps = lambda / hbar;
    table_covering(eps, z_extent(grid, hbar, rho).max(amplitude_z(eps)))
}

/// Weights `c_p(λ) = ⟨ψ_{λ,p}(·,0)|ψ0⟩ / N_p(λ)` for both parity channels.
pub fn packet_weights(
    initial: &WavefunctionFrame,
    quad: &LambdaQuadrature,
    model: &OscillatorModel,
    ermakov: &ErmakovSolution,
) -> Result<PacketSpec> {
    initial.check_boundary()?;
    let grid = *initial.grid();
    let t0 = initial.t();
    let hbar = model.hbar();
    let per_node = quad
        .nodes
        .par_iter()
        .map(|&lambda| {
            let table = packet_table(lambda, model, ermakov, &grid, t0)?;
            let phase = Complex64::cis(phase_alpha(lambda, model, ermakov, t0)?);
            let mut out = [Complex64::new(0.0, 0.0); 2];
            for (slot, parity) in [Parity::Even, Parity::Odd].into_iter().enumerate() {
                let frame = eigenfunction_frame_with_table(&table, parity.mix(), model, ermakov, &grid, t0)?;
                let overlap = phase.conj() * frame.inner(initial);
                out[slot] = overlap / delta_normalization(&table, parity, hbar)?;
            }
            Ok((out[0], out[1]))
        })
        .collect::<Result<Vec<_>>>()?;
    let (even, odd) = per_node.into_iter().unzip();
    PacketSpec::from_channels(quad, even, odd)
}

/// `Σ_i w_i c_i ψ_{λ_i}(q, t)` summed in node order.
pub fn synthesize_packet(
    spec: &PacketSpec,
    model: &OscillatorModel,
    ermakov: &ErmakovSolution,
    grid: &GridSpec,
    t: f64,
) -> Result<WavefunctionFrame> {
    let frames = (0..spec.len())
        .into_par_iter()
        .map(|i| {
            let c = spec.c_values[i];
            if c == Complex64::new(0.0, 0.0) {
                return Ok(None);
            }
            let lambda = spec.lambda_nodes[i];
            let table = packet_table(lambda, model, ermakov, grid, t)?;
            let alpha = phase_alpha(lambda, model, ermakov, t)?;
            let f = eigenfunction_frame_with_table(&table, spec.parity_mix[i], model, ermakov, grid, t)?;
            let factor = spec.lambda_weights[i] * c * Complex64::cis(alpha);
            Ok(Some(f.values().iter().map(|v| factor * v).collect::<Vec<_>>()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut sum = vec![Complex64::new(0.0, 0.0); grid.n_points];
    for f in frames.into_iter().flatten() {
        for (s, v) in sum.iter_mut().zip(f) {
            *s += v;
        }
    }
    WavefunctionFrame::new(*grid, t, sum)
}
