//! Grid wavefunctions and the finite-difference Hamiltonian, invariant, gauge
//! transform and transformed invariant acting on them.

pub mod banded;
pub mod stencil;

use std::ops::Range;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ermakov::ErmakovSolution;
use crate::error::{Error, Result};
use crate::params::OscillatorModel;

pub use banded::BandMatrix;
pub use stencil::StencilOrder;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Relative magnitude allowed at the grid edges.
pub const BOUNDARY_TOL: f64 = 1e-8;

/// Uniform grid on `[q_min, q_max]` plus the stencil used on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub q_min: f64,
    pub q_max: f64,
    pub n_points: usize,
    #[serde(default)]
    pub order: StencilOrder,
}

impl GridSpec {
    pub fn new(q_min: f64, q_max: f64, n_points: usize) -> Result<Self> {
        if !(q_min.is_finite() && q_max.is_finite() && q_min < q_max) {
            return Err(Error::InvalidArgument(format!("invalid grid range [{q_min}, {q_max}]")));
        }
        if n_points < 16 {
            return Err(Error::InvalidArgument(format!("grid needs at least 16 points, got {n_points}")));
        }
        Ok(Self { q_min, q_max, n_points, order: StencilOrder::Second })
    }

    pub fn with_order(mut self, order: StencilOrder) -> Self {
        self.order = order;
        self
    }

    pub fn spacing(&self) -> f64 {
        (self.q_max - self.q_min) / (self.n_points - 1) as f64
    }

    /// Node j. Written around the midpoint so that grids symmetric about 0
    /// have exactly mirrored nodes.
    pub fn node(&self, j: usize) -> f64 {
        let n1 = (self.n_points - 1) as f64;
        let mid = 0.5 * (self.q_min + self.q_max);
        let half = 0.5 * (self.q_max - self.q_min);
        mid + half * (2.0 * j as f64 - n1) / n1
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.node(j)).collect()
    }

    /// Central 80% of the nodes.
    pub fn interior(&self) -> Range<usize> {
        let cut = self.n_points / 10;
        cut..self.n_points - cut
    }
}

/// Complex samples of ψ(q, t) on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WavefunctionFrame {
    grid: GridSpec,
    t: f64,
    values: Vec<Complex64>,
    normalized: bool,
}

impl WavefunctionFrame {
    pub fn new(grid: GridSpec, t: f64, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n_points {
            return Err(Error::InvalidArgument(format!(
                "frame has {} values for a {}-point grid",
                values.len(),
                grid.n_points
            )));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidArgument("frame values must be finite".into()));
        }
        Ok(Self { grid, t, values, normalized: false })
    }

    pub fn from_fn<F: Fn(f64) -> Complex64>(grid: GridSpec, t: f64, f: F) -> Result<Self> {
        Self::new(grid, t, grid.nodes().into_iter().map(f).collect())
    }

    pub fn zeros(grid: GridSpec, t: f64) -> Self {
        Self { grid, t, values: vec![ZERO; grid.n_points], normalized: false }
    }

    /// Gaussian `exp(−(q−q0)²/(4σ²) + i k0 q)`, normalized on the grid.
    pub fn gaussian(grid: GridSpec, t: f64, q0: f64, sigma: f64, k0: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
        }
        let f = Self::from_fn(grid, t, |q| {
            let a = q - q0;
            Complex64::from_polar((-a * a / (4.0 * sigma * sigma)).exp(), k0 * q)
        })?;
        f.normalize()
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    /// Same grid and time, new values. The normalized tag is dropped.
    pub fn with_values(&self, values: Vec<Complex64>) -> Result<Self> {
        Self::new(self.grid, self.t, values)
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }

    pub fn normalize(mut self) -> Result<Self> {
        let n = self.norm_sq().sqrt();
        if !(n > 0.0) {
            return Err(Error::InvalidArgument("cannot normalize a zero frame".into()));
        }
        for v in &mut self.values {
            *v /= n;
        }
        self.normalized = true;
        Ok(self)
    }

    /// `Σ conj(self)·other·h`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        inner(&self.values, &other.values, self.grid.spacing())
    }

    /// L² norm restricted to the interior nodes.
    pub fn interior_norm(&self) -> f64 {
        interior_norm(&self.values, &self.grid)
    }

    /// Largest |ψ| over the stencil-width strip at each edge, relative to
    /// the largest |ψ| overall. Zero for the zero frame.
    pub fn boundary_magnitude(&self) -> f64 {
        let peak = self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let w = self.grid.order.half_width().max(1);
        let n = self.values.len();
        let edge = self.values[..w]
            .iter()
            .chain(&self.values[n - w..])
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        edge / peak
    }

    pub fn check_boundary(&self) -> Result<()> {
        let magnitude = self.boundary_magnitude();
        if magnitude > BOUNDARY_TOL {
            return Err(Error::BoundaryLeak { magnitude, t: self.t });
        }
        Ok(())
    }
}

pub fn inner(a: &[Complex64], b: &[Complex64], h: f64) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>() * h
}

pub fn interior_norm(values: &[Complex64], grid: &GridSpec) -> f64 {
    (values[grid.interior()].iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.spacing()).sqrt()
}

/// Adds `term` unless it is an exact zero, so that switched-off terms leave
/// the accumulator bit-for-bit unchanged (including the sign of zero).
#[inline]
fn add_term(base: Complex64, term: Complex64) -> Complex64 {
    if term == ZERO {
        base
    } else {
        base + term
    }
}

/// Instantaneous Hamiltonian coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianCoefficients {
    pub hbar: f64,
    pub mass: f64,
    pub omega_sq: f64,
    pub y: Option<f64>,
}

impl HamiltonianCoefficients {
    pub fn at(model: &OscillatorModel, t: f64) -> Result<Self> {
        let c = model.coefficients(t)?;
        Ok(Self { hbar: c.hbar, mass: c.mass, omega_sq: c.omega_sq, y: c.y })
    }
}

/// `H ψ` without the boundary check.
pub fn hamiltonian_action(c: &HamiltonianCoefficients, grid: &GridSpec, psi: &[Complex64]) -> Vec<Complex64> {
    let h = grid.spacing();
    let n = psi.len();
    let mut d2 = vec![ZERO; n];
    stencil::apply_d2(grid.order, h, psi, &mut d2);
    let kin = -c.hbar * c.hbar / (2.0 * c.mass);
    let pot = -0.5 * c.mass * c.omega_sq;
    let mut out: Vec<Complex64> = (0..n)
        .map(|i| {
            let q = grid.node(i);
            kin * d2[i] + pot * q * q * psi[i]
        })
        .collect();
    if let Some(y) = c.y {
        // (y/2)(pq + qp) = −iħ(y/2)(q D1 + D1 q)
        let qpsi: Vec<Complex64> = (0..n).map(|i| grid.node(i) * psi[i]).collect();
        let mut d1 = vec![ZERO; n];
        let mut d1q = vec![ZERO; n];
        stencil::apply_d1(grid.order, h, psi, &mut d1);
        stencil::apply_d1(grid.order, h, &qpsi, &mut d1q);
        let coef = Complex64::new(0.0, -0.5 * c.hbar * y);
        for i in 0..n {
            out[i] = add_term(out[i], coef * (grid.node(i) * d1[i] + d1q[i]));
        }
    }
    out
}

/// Band matrix of H on the grid; the same operator as [`hamiltonian_action`].
pub fn hamiltonian_matrix(c: &HamiltonianCoefficients, grid: &GridSpec) -> BandMatrix {
    let n = grid.n_points;
    let p = grid.order.half_width();
    let h = grid.spacing();
    let (c0, c2) = grid.order.d2();
    let c1 = grid.order.d1();
    let kin = -c.hbar * c.hbar / (2.0 * c.mass * h * h);
    let pot = -0.5 * c.mass * c.omega_sq;
    let mut m = BandMatrix::zeros(n, p, p);
    for i in 0..n {
        let qi = grid.node(i);
        m.set(i, i, Complex64::new(kin * c0 + pot * qi * qi, 0.0));
        for k in 1..=p {
            for (j, sign) in [(i + k, 1.0), (i.wrapping_sub(k), -1.0)] {
                if j >= n {
                    continue;
                }
                let mut v = Complex64::new(kin * c2[k - 1], 0.0);
                if let Some(y) = c.y {
                    let qj = grid.node(j);
                    let term = Complex64::new(0.0, -0.5 * c.hbar * y) * ((qi + qj) * sign * c1[k - 1] / h);
                    v = add_term(v, term);
                }
                m.set(i, j, v);
            }
        }
    }
    m
}

pub fn apply_hamiltonian(model: &OscillatorModel, frame: &WavefunctionFrame) -> Result<WavefunctionFrame> {
    frame.check_boundary()?;
    let c = HamiltonianCoefficients::at(model, frame.t)?;
    frame.with_values(hamiltonian_action(&c, &frame.grid, &frame.values))
}

/// Quantities the invariant needs at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantCoefficients {
    pub hbar: f64,
    pub mass: f64,
    pub rho: f64,
    pub rho_dot: f64,
    /// `ρ̇ − yρ`, or `ρ̇` when y is switched off.
    pub beta: f64,
}

impl InvariantCoefficients {
    pub fn at(model: &OscillatorModel, ermakov: &ErmakovSolution, t: f64) -> Result<Self> {
        let (rho, rho_dot) = ermakov.rho(t)?;
        let (mass, _) = model.mass(t)?;
        let beta = match model.y(t)? {
            Some((y, _)) => rho_dot - y * rho,
            None => rho_dot,
        };
        Ok(Self { hbar: model.hbar(), mass, rho, rho_dot, beta })
    }
}

/// `A ψ` with `A = ρ(−iħD1) − Mβq`.
fn invariant_a(c: &InvariantCoefficients, grid: &GridSpec, psi: &[Complex64]) -> Vec<Complex64> {
    let mut d1 = vec![ZERO; psi.len()];
    stencil::apply_d1(grid.order, grid.spacing(), psi, &mut d1);
    let p = Complex64::new(0.0, -c.hbar * c.rho);
    let mb = c.mass * c.beta;
    (0..psi.len()).map(|i| p * d1[i] - mb * grid.node(i) * psi[i]).collect()
}

/// `I ψ = ½{−(q/ρ)²ψ + A(Aψ)}` without the boundary check.
pub fn invariant_action(c: &InvariantCoefficients, grid: &GridSpec, psi: &[Complex64]) -> Vec<Complex64> {
    let a1 = invariant_a(c, grid, psi);
    let a2 = invariant_a(c, grid, &a1);
    let r2 = c.rho * c.rho;
    (0..psi.len())
        .map(|i| {
            let q = grid.node(i);
            0.5 * (a2[i] - (q * q / r2) * psi[i])
        })
        .collect()
}

pub fn apply_invariant(
    model: &OscillatorModel,
    ermakov: &ErmakovSolution,
    frame: &WavefunctionFrame,
) -> Result<WavefunctionFrame> {
    frame.check_boundary()?;
    let c = InvariantCoefficients::at(model, ermakov, frame.t)?;
    frame.with_values(invariant_action(&c, &frame.grid, &frame.values))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GaugeDirection {
    /// `U = exp[−iMβq²/(2ħρ)]`
    Forward,
    /// `U† = exp[+iMβq²/(2ħρ)]`
    Inverse,
}

/// Pointwise gauge factor `exp[∓iMβq²/(2ħρ)]`.
pub fn gauge_factors(c: &InvariantCoefficients, grid: &GridSpec, dir: GaugeDirection) -> Vec<Complex64> {
    let sign = match dir {
        GaugeDirection::Forward => -1.0,
        GaugeDirection::Inverse => 1.0,
    };
    let k = sign * c.mass * c.beta / (2.0 * c.hbar * c.rho);
    grid.nodes().into_iter().map(|q| Complex64::cis(k * q * q)).collect()
}

pub fn gauge_transform(
    dir: GaugeDirection,
    model: &OscillatorModel,
    ermakov: &ErmakovSolution,
    frame: &WavefunctionFrame,
) -> Result<WavefunctionFrame> {
    let c = InvariantCoefficients::at(model, ermakov, frame.t)?;
    let u = gauge_factors(&c, &frame.grid, dir);
    let values = frame.values.iter().zip(u).map(|(v, f)| v * f).collect();
    let mut out = frame.with_values(values)?;
    out.normalized = frame.normalized;
    Ok(out)
}

/// `I′ψ = −(ħ²ρ²/2) D2ψ − q²/(2ρ²) ψ` without the boundary check.
pub fn transformed_invariant_action(hbar: f64, rho: f64, grid: &GridSpec, psi: &[Complex64]) -> Vec<Complex64> {
    let mut d2 = vec![ZERO; psi.len()];
    stencil::apply_d2(grid.order, grid.spacing(), psi, &mut d2);
    let kin = -0.5 * hbar * hbar * rho * rho;
    let r2 = rho * rho;
    (0..psi.len())
        .map(|i| {
            let q = grid.node(i);
            kin * d2[i] - (0.5 * q * q / r2) * psi[i]
        })
        .collect()
}

pub fn apply_transformed_invariant(
    ermakov: &ErmakovSolution,
    frame: &WavefunctionFrame,
) -> Result<WavefunctionFrame> {
    frame.check_boundary()?;
    let (rho, _) = ermakov.rho(frame.t)?;
    let hbar = ermakov.model().hbar();
    frame.with_values(transformed_invariant_action(hbar, rho, &frame.grid, &frame.values))
}

/// `⟨ψ|Oψ⟩` from precomputed `Oψ`.
pub fn expectation(frame: &WavefunctionFrame, applied: &[Complex64]) -> Complex64 {
    inner(&frame.values, applied, frame.grid.spacing())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ermakov::{closed_form_rho_ck, RhoState};
    use crate::params::{make_caldirola_kanai, CaldirolaKanaiParams, TimeFunction, Window};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const ORDERS: [StencilOrder; 2] = [StencilOrder::Second, StencilOrder::Eighth];

    fn grid(order: StencilOrder) -> GridSpec {
        GridSpec::new(-10.0, 10.0, 401).unwrap().with_order(order)
    }

    fn random_frame(g: GridSpec, rng: &mut ChaCha8Rng) -> WavefunctionFrame {
        let terms: Vec<(f64, f64, f64, f64, f64)> = (0..4)
            .map(|_| {
                (
                    rng.gen_range(-3.0..3.0),
                    rng.gen_range(0.4..1.2),
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                )
            })
            .collect();
        WavefunctionFrame::from_fn(g, 0.3, |q| {
            terms
                .iter()
                .map(|&(c, s, k, a, b)| {
                    Complex64::new(a, b) * Complex64::from_polar((-(q - c).powi(2) / (2.0 * s * s)).exp(), k * q)
                })
                .sum()
        })
        .unwrap()
    }

    fn ck_setup() -> (OscillatorModel, ErmakovSolution) {
        let ck = CaldirolaKanaiParams::new(1.0, 0.5, 1.0, 0.7);
        let model = make_caldirola_kanai(&ck).unwrap();
        let sol = ErmakovSolution::closed_form(model.clone(), ck, Window::new(0.0, 2.0).unwrap()).unwrap();
        (model, sol)
    }

    #[test]
    fn grid_nodes() {
        let g = GridSpec::new(-30.0, 30.0, 4096).unwrap();
        assert_eq!(g.node(0), -30.0);
        assert_eq!(g.node(4095), 30.0);
        for j in 0..4096 {
            assert_eq!(g.node(j), -g.node(4095 - j));
        }
        assert_eq!(g.interior(), 409..3687);
        assert!(GridSpec::new(0.0, 1.0, 15).is_err());
        assert!(GridSpec::new(1.0, 1.0, 64).is_err());
    }

    #[test]
    fn kinetic_only_action() {
        let model = make_caldirola_kanai(&CaldirolaKanaiParams::new(1.0, 0.0, 0.0, 0.0).with_hbar(1.0))
            .unwrap()
            .y_suppressed();
        for order in ORDERS {
            let f = WavefunctionFrame::gaussian(grid(order), 0.0, 0.0, 1.0, 0.0).unwrap();
            let hf = apply_hamiltonian(&model, &f).unwrap();
            let mut d2 = vec![ZERO; f.values().len()];
            stencil::apply_d2(order, f.grid().spacing(), f.values(), &mut d2);
            for (a, b) in hf.values().iter().zip(&d2) {
                assert_eq!(*a, -0.5 * b);
            }
        }
    }

    #[test]
    fn constant_interior_gives_inverted_potential() {
        let model = make_caldirola_kanai(&CaldirolaKanaiParams::new(1.0, 0.0, 1.0, 0.0)).unwrap();
        let g = grid(StencilOrder::Second);
        let one = vec![Complex64::new(1.0, 0.0); g.n_points];
        let c = HamiltonianCoefficients::at(&model, 0.0).unwrap();
        let out = hamiltonian_action(&c, &g, &one);
        for i in 1..g.n_points - 1 {
            let q = g.node(i);
            assert!((out[i].re + 0.5 * q * q).abs() < 1e-9 && out[i].im.abs() < 1e-12);
        }
    }

    #[test]
    fn hermiticity_of_all_operators() {
        let (model, sol) = ck_setup();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for order in ORDERS {
            let g = grid(order);
            let hc = HamiltonianCoefficients::at(&model, 0.3).unwrap();
            let ic = InvariantCoefficients::at(&model, &sol, 0.3).unwrap();
            let ops: [&dyn Fn(&[Complex64]) -> Vec<Complex64>; 3] = [
                &|v| hamiltonian_action(&hc, &g, v),
                &|v| invariant_action(&ic, &g, v),
                &|v| transformed_invariant_action(1.0, ic.rho, &g, v),
            ];
            for op in ops {
                for _ in 0..4 {
                    let f = random_frame(g, &mut rng);
                    let k = random_frame(g, &mut rng);
                    let h = g.spacing();
                    let lhs = inner(f.values(), &op(k.values()), h);
                    let rhs = inner(&op(f.values()), k.values(), h);
                    assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm().max(1.0), "{order:?}");
                    let diag = inner(f.values(), &op(f.values()), h);
                    assert!(diag.im.abs() <= 1e-10 * diag.norm().max(1.0));
                }
            }
        }
    }

    #[test]
    fn matrix_matches_stencil_action() {
        let (model, _) = ck_setup();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for order in ORDERS {
            let g = grid(order);
            let c = HamiltonianCoefficients::at(&model, 0.7).unwrap();
            let f = random_frame(g, &mut rng);
            let a = hamiltonian_action(&c, &g, f.values());
            let b = hamiltonian_matrix(&c, &g).matvec(f.values());
            let scale = a.iter().map(|v| v.norm()).fold(0.0, f64::max);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).norm() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn invariant_static_freeze_out() {
        let model = make_caldirola_kanai(&CaldirolaKanaiParams::new(1.0, 0.0, 1.0, 0.0)).unwrap();
        let sol = ErmakovSolution::from_fn(model.clone(), Window::unbounded(), |_| RhoState {
            rho: 1.0,
            rho_dot: 0.0,
            rho_ddot: 0.0,
        });
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = grid(StencilOrder::Eighth);
        let f = random_frame(g, &mut rng).with_time(0.0);
        let i = apply_invariant(&model, &sol, &f).unwrap();
        let mut d1 = vec![ZERO; g.n_points];
        let mut d11 = vec![ZERO; g.n_points];
        stencil::apply_d1(g.order, g.spacing(), f.values(), &mut d1);
        stencil::apply_d1(g.order, g.spacing(), &d1, &mut d11);
        for (k, v) in i.values().iter().enumerate() {
            let q = g.node(k);
            let expect = 0.5 * (-d11[k] - q * q * f.values()[k]);
            assert!((v - expect).norm() < 1e-10);
        }
        assert_eq!(apply_invariant(&model, &sol, &WavefunctionFrame::zeros(g, 0.0)).unwrap().values(), &vec![ZERO; g.n_points][..]);
    }

    #[test]
    fn gauge_is_unitary_and_phase_only() {
        let (model, sol) = ck_setup();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_frame(grid(StencilOrder::Second), &mut rng);
        let u = gauge_transform(GaugeDirection::Forward, &model, &sol, &f).unwrap();
        let back = gauge_transform(GaugeDirection::Inverse, &model, &sol, &u).unwrap();
        for ((a, b), c) in f.values().iter().zip(back.values()).zip(u.values()) {
            assert!((a - b).norm() <= 1e-14 * a.norm().max(1e-300) + 1e-300);
            assert!((a.norm() - c.norm()).abs() <= 1e-15 * a.norm().max(1e-300));
        }
    }

    #[test]
    fn gauge_is_identity_when_beta_vanishes() {
        // ρ̇ = yρ
        let model = OscillatorModel::new(
            1.0,
            TimeFunction::constant(1.0),
            TimeFunction::constant(1.0),
            Some(TimeFunction::constant(0.5)),
        )
        .unwrap();
        let sol = ErmakovSolution::from_fn(model.clone(), Window::unbounded(), |t| {
            let rho = (0.5 * t).exp();
            RhoState { rho, rho_dot: 0.5 * rho, rho_ddot: 0.25 * rho }
        });
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = random_frame(grid(StencilOrder::Eighth), &mut rng);
        let u = gauge_transform(GaugeDirection::Forward, &model, &sol, &f).unwrap();
        assert_eq!(u.values(), f.values());
        let direct = apply_invariant(&model, &sol, &f).unwrap();
        let prime = apply_transformed_invariant(&sol, &f).unwrap();
        // With β = 0 the invariant is ½(−q²/ρ² + ρ²p²) where p² = −ħ²D1D1.
        let scale = prime.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
        let diff = direct.values()[f.grid().interior()]
            .iter()
            .zip(&prime.values()[f.grid().interior()])
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff <= 1e-4 * scale, "diff {diff:e}");
    }

    #[test]
    fn transformed_invariant_freeze_out() {
        let ck = CaldirolaKanaiParams::new(1.0, 0.0, 1.0, 0.0);
        let model = make_caldirola_kanai(&ck).unwrap();
        let sol = ErmakovSolution::closed_form(model, ck, Window::unbounded()).unwrap();
        assert_eq!(closed_form_rho_ck(&ck, 0.0).unwrap().0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = grid(StencilOrder::Second);
        let f = random_frame(g, &mut rng);
        let out = apply_transformed_invariant(&sol, &f).unwrap();
        let mut d2 = vec![ZERO; g.n_points];
        stencil::apply_d2(g.order, g.spacing(), f.values(), &mut d2);
        for (k, v) in out.values().iter().enumerate() {
            let q = g.node(k);
            assert_eq!(*v, -0.5 * d2[k] - (0.5 * q * q) * f.values()[k]);
        }
    }

    #[test]
    fn boundary_leak_is_reported() {
        let g = grid(StencilOrder::Second);
        let wide = WavefunctionFrame::gaussian(g, 0.0, 0.0, 5.0, 0.0).unwrap();
        let (model, _) = ck_setup();
        assert!(matches!(apply_hamiltonian(&model, &wide), Err(Error::BoundaryLeak { .. })));
        assert!(apply_hamiltonian(&model, &WavefunctionFrame::zeros(g, 0.0)).is_ok());
    }

    #[test]
    fn y_terms_with_zero_value_are_bitwise_inert() {
        let ck = CaldirolaKanaiParams::new(1.0, 0.8, 1.0, 0.0);
        let general = make_caldirola_kanai(&ck).unwrap();
        let suppressed = general.clone().y_suppressed();
        let sol = ErmakovSolution::closed_form(general.clone(), ck, Window::unbounded()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for order in ORDERS {
            let g = grid(order);
            let f = random_frame(g, &mut rng);
            let a = apply_hamiltonian(&general, &f).unwrap();
            let b = apply_hamiltonian(&suppressed, &f).unwrap();
            let bits = |fr: &WavefunctionFrame| -> Vec<(u64, u64)> {
                fr.values().iter().map(|v| (v.re.to_bits(), v.im.to_bits())).collect()
            };
            assert_eq!(bits(&a), bits(&b));
            let a = apply_invariant(&general, &sol, &f).unwrap();
            let b = apply_invariant(&suppressed, &sol, &f).unwrap();
            assert_eq!(bits(&a), bits(&b));
            let ma = hamiltonian_matrix(&HamiltonianCoefficients::at(&general, 0.4).unwrap(), &g);
            let mb = hamiltonian_matrix(&HamiltonianCoefficients::at(&suppressed, 0.4).unwrap(), &g);
            assert_eq!(ma, mb);
        }
    }
}
