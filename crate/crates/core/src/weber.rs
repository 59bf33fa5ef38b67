//! Parity-resolved solutions of `φ″ + (z²/4 + ε)φ = 0` on a symmetric z-grid.
//!
//! The basis is fixed by the data at the origin: even `(φ, φ′) = (1, 0)`,
//! odd `(0, 1)`, so the Wronskian `even·odd′ − even′·odd` is 1. This is not
//! the textbook `W(a, ±x)` normalization; the two bases differ by a constant
//! 2×2 matrix that depends on ε only.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const DEFAULT_TABLE_TOL: f64 = 1e-17;

/// An invariant eigenvalue λ and its scaled form ε = λ/ħ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralParameter {
    lambda: f64,
    epsilon: f64,
}

impl SpectralParameter {
    pub fn new(lambda: f64, hbar: f64) -> Result<Self> {
        if !lambda.is_finite() || !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidArgument(format!("invalid lambda {lambda} or hbar {hbar}")));
        }
        Ok(Self { lambda, epsilon: lambda / hbar })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    /// Unit mix `(c_even, c_odd)` selecting this channel.
    pub fn mix(self) -> (Complex64, Complex64) {
        match self {
            Parity::Even => (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)),
            Parity::Odd => (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenfunctionTable {
    epsilon: f64,
    z_max: f64,
    tol: f64,
    /// Nodes `z_j = z_max·j/m`, `j = 0..=m`. Negative nodes are mirrors.
    half_grid: Vec<f64>,
    even: Vec<[f64; 2]>,
    odd: Vec<[f64; 2]>,
}

/// Largest admissible spacing for the given ε and z range.
pub fn max_spacing(epsilon: f64, z_max: f64) -> f64 {
    0.25 / (z_max / 2.0 + epsilon.abs().sqrt()).max(1.0)
}

/// Smallest odd point count satisfying the spacing precondition.
pub fn required_points(epsilon: f64, z_max: f64) -> usize {
    let m = (z_max / max_spacing(epsilon, z_max)).ceil() as usize;
    2 * m.max(1) + 1
}

pub fn build_eigenfunction_table(
    epsilon: f64,
    z_max: f64,
    n_points: usize,
    tol: f64,
) -> Result<EigenfunctionTable> {
    if !epsilon.is_finite() || !(z_max > 0.0 && z_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("invalid epsilon {epsilon} or z_max {z_max}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    if n_points < 3 || n_points.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("n_points must be odd and >= 3, got {n_points}")));
    }
    let m = (n_points - 1) / 2;
    let spacing = z_max / m as f64;
    let required = max_spacing(epsilon, z_max);
    if spacing > required {
        return Err(Error::ResolutionTooCoarse { spacing, required });
    }

    let half_grid: Vec<f64> = (0..=m).map(|j| z_max * j as f64 / m as f64).collect();
    let (even, odd) = march(epsilon, z_max, &half_grid, tol);
    if even.iter().chain(odd.iter()).any(|v| !(v[0].is_finite() && v[1].is_finite())) {
        return Err(Error::NonFiniteRhs { t: z_max, state: vec![] });
    }
    Ok(EigenfunctionTable { epsilon, z_max, tol, half_grid, even, odd })
}

/// March the exact Taylor expansion from z = 0 along `nodes` (equally
/// spaced, either sign), with anchors at most one local wavelength/2π apart;
/// nodes between anchors are filled from the nearest anchor.
fn march(epsilon: f64, z_max: f64, nodes: &[f64], tol: f64) -> (Vec<[f64; 2]>, Vec<[f64; 2]>) {
    let m = nodes.len() - 1;
    let spacing = z_max / m as f64;
    let reach = 1.0 / (z_max / 2.0 + epsilon.abs().sqrt()).max(1.0);
    let stride = ((reach / spacing).floor() as usize).max(1);
    let mut anchors = vec![0usize];
    while *anchors.last().expect("nonempty") < m {
        anchors.push((anchors[anchors.len() - 1] + stride).min(m));
    }
    let mut even = vec![[0.0; 2]; m + 1];
    let mut odd = vec![[0.0; 2]; m + 1];
    even[0] = [1.0, 0.0];
    odd[0] = [0.0, 1.0];
    for w in anchors.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (za, zb) = (nodes[a], nodes[b]);
        even[b] = taylor(epsilon, za, even[a], zb - za, tol);
        odd[b] = taylor(epsilon, za, odd[a], zb - za, tol);
        for j in a + 1..b {
            let from = if j - a <= b - j { a } else { b };
            let (z0, s) = (nodes[from], nodes[j] - nodes[from]);
            even[j] = taylor(epsilon, z0, even[from], s, tol);
            odd[j] = taylor(epsilon, z0, odd[from], s, tol);
        }
    }
    (even, odd)
}

impl EigenfunctionTable {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    pub fn n_points(&self) -> usize {
        2 * self.half_grid.len() - 1
    }

    pub fn spacing(&self) -> f64 {
        self.half_grid[1]
    }

    /// Full symmetric grid from −z_max to z_max.
    pub fn z_grid(&self) -> Vec<f64> {
        let m = self.half_grid.len() - 1;
        (0..=2 * m)
            .map(|k| if k < m { -self.half_grid[m - k] } else { self.half_grid[k - m] })
            .collect()
    }

    fn column(&self, parity: Parity, value: bool) -> Vec<f64> {
        let m = self.half_grid.len() - 1;
        let src = match parity {
            Parity::Even => &self.even,
            Parity::Odd => &self.odd,
        };
        let idx = if value { 0 } else { 1 };
        // even values and odd derivatives are symmetric; the others flip sign.
        let flip = matches!((parity, value), (Parity::Even, false) | (Parity::Odd, true));
        (0..=2 * m)
            .map(|k| {
                if k < m {
                    let v = src[m - k][idx];
                    if flip { -v } else { v }
                } else {
                    src[k - m][idx]
                }
            })
            .collect()
    }

    pub fn even_values(&self) -> Vec<f64> {
        self.column(Parity::Even, true)
    }

    pub fn even_derivs(&self) -> Vec<f64> {
        self.column(Parity::Even, false)
    }

    pub fn odd_values(&self) -> Vec<f64> {
        self.column(Parity::Odd, true)
    }

    pub fn odd_derivs(&self) -> Vec<f64> {
        self.column(Parity::Odd, false)
    }

    /// `(φ, φ′)` for both channels at `z ≥ 0`, by a Taylor series about the
    /// nearest node.
    fn eval_half(&self, z: f64) -> ([f64; 2], [f64; 2]) {
        let h = self.spacing();
        let m = self.half_grid.len() - 1;
        let j = ((z / h).round() as usize).min(m);
        let z0 = self.half_grid[j];
        let s = z - z0;
        if s == 0.0 {
            return (self.even[j], self.odd[j]);
        }
        (
            taylor(self.epsilon, z0, self.even[j], s, self.tol),
            taylor(self.epsilon, z0, self.odd[j], s, self.tol),
        )
    }

    /// Real `(φ_even, φ′_even, φ_odd, φ′_odd)` at `z`.
    pub fn eval_basis(&self, z: f64) -> Result<[f64; 4]> {
        let a = z.abs();
        if !(a <= self.z_max) {
            return Err(Error::OutOfRange { z, z_max: self.z_max });
        }
        let (e, o) = self.eval_half(a);
        let sgn = if z < 0.0 { -1.0 } else { 1.0 };
        Ok([e[0], sgn * e[1], sgn * o[0], o[1]])
    }

    /// `c_even·φ_even(z) + c_odd·φ_odd(z)`.
    pub fn eval_varphi(&self, z: f64, mix: (Complex64, Complex64)) -> Result<Complex64> {
        let b = self.eval_basis(z)?;
        Ok(mix.0 * b[0] + mix.1 * b[2])
    }

    /// Mixed value and z-derivative.
    pub fn eval_varphi_with_derivative(
        &self,
        z: f64,
        mix: (Complex64, Complex64),
    ) -> Result<(Complex64, Complex64)> {
        let b = self.eval_basis(z)?;
        Ok((mix.0 * b[0] + mix.1 * b[2], mix.0 * b[1] + mix.1 * b[3]))
    }

    /// Wronskian `even·odd′ − even′·odd` at every non-negative node.
    pub fn wronskians(&self) -> Vec<f64> {
        self.even.iter().zip(&self.odd).map(|(e, o)| det2(e[0], e[1], o[0], o[1])).collect()
    }

    /// `(φ, φ′)` of both channels at `−z_j`, marched independently from the
    /// origin in the negative direction; index j matches the half grid.
    pub fn march_negative(&self) -> (Vec<[f64; 2]>, Vec<[f64; 2]>) {
        let nodes: Vec<f64> = self.half_grid.iter().map(|z| -z).collect();
        march(self.epsilon, self.z_max, &nodes, self.tol)
    }

    /// Largest parity defect `|φ_e(−z) − φ_e(z)|`, `|φ_o(−z) + φ_o(z)|`
    /// between the stored half and an independent march over z < 0,
    /// relative to the largest |φ| of the channel.
    pub fn parity_defect(&self) -> f64 {
        let (ne, no) = self.march_negative();
        let peak = |c: &[[f64; 2]]| c.iter().map(|v| v[0].abs()).fold(0.0, f64::max);
        let de = self.even.iter().zip(&ne).map(|(p, n)| (n[0] - p[0]).abs()).fold(0.0, f64::max);
        let dodd = self.odd.iter().zip(&no).map(|(p, n)| (n[0] + p[0]).abs()).fold(0.0, f64::max);
        (de / peak(&self.even)).max(dodd / peak(&self.odd))
    }

    /// Largest second-difference residual `|δ²φ/h² + (z²/4 + ε)φ|` over the
    /// interior nodes of the full grid, relative to the channel's max |φ|.
    pub fn difference_residual(&self) -> f64 {
        let z = self.z_grid();
        let h = self.spacing();
        let mut worst: f64 = 0.0;
        for col in [self.even_values(), self.odd_values()] {
            let peak = col.iter().map(|v| v.abs()).fold(0.0, f64::max);
            for k in 1..col.len() - 1 {
                let d2 = (col[k + 1] - 2.0 * col[k] + col[k - 1]) / (h * h);
                let r = d2 + (0.25 * z[k] * z[k] + self.epsilon) * col[k];
                worst = worst.max(r.abs() / peak);
            }
        }
        worst
    }

    /// Largest `|W(z) − W(0)|` over the half grid.
    pub fn wronskian_drift(&self) -> f64 {
        let w = self.wronskians();
        w.iter().map(|v| (v - w[0]).abs()).fold(0.0, f64::max)
    }

    /// Squared amplitude `B²` of the large-z oscillation of one channel,
    /// `φ ≈ B·Q^{-1/4}·cos(∫√Q + δ)` with `Q = z²/4 + ε`.
    ///
    /// Uses the second-order WKB amplitude `w = Q^{-1/4}(1 + …)` so that
    /// `B² = φ²/w² + (wφ′ − w′φ)²` is constant up to O(Q^{-3}) at z_max.
    pub fn asymptotic_amplitude_sq(&self, parity: Parity) -> Result<f64> {
        let z = self.z_max;
        let q = 0.25 * z * z + self.epsilon;
        if q < 25.0 {
            return Err(Error::InvalidArgument(format!(
                "z_max = {z} too small for the asymptotic amplitude at epsilon = {} (z^2/4 + eps = {q})",
                self.epsilon
            )));
        }
        let m = self.half_grid.len() - 1;
        let [phi, dphi] = match parity {
            Parity::Even => self.even[m],
            Parity::Odd => self.odd[m],
        };
        let (w, dw) = wkb_amplitude(z, self.epsilon);
        Ok(phi * phi / (w * w) + (w * dphi - dw * phi).powi(2))
    }
}

/// `a·d − b·c` with a single rounding of the cancellation (Kahan).
fn det2(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let bc = b * c;
    let err = (-b).mul_add(c, bc);
    a.mul_add(d, -bc) + err
}

/// WKB amplitude `w = Q^{-1/4} + v` and its z-derivative, where `v` is the
/// first correction solving `w″ + Qw = 1/w³` to next order.
fn wkb_amplitude(z: f64, eps: f64) -> (f64, f64) {
    let q = 0.25 * z * z + eps;
    let dq = 0.5 * z;
    let w0 = q.powf(-0.25);
    let dw0 = -0.25 * q.powf(-1.25) * dq;
    let v = q.powf(-2.25) / 32.0 - 5.0 * z * z / 256.0 * q.powf(-3.25);
    let dv = -2.25 / 32.0 * q.powf(-3.25) * dq - 10.0 * z / 256.0 * q.powf(-3.25)
        + 3.25 * 5.0 * z * z / 256.0 * q.powf(-4.25) * dq;
    (w0 + v, dw0 + dv)
}

/// Taylor expansion of the solution with data `(φ, φ′)` at `z0`, evaluated at
/// `z0 + s`. Returns value and derivative. Summation stops once
/// four consecutive terms fall below `tol` relative to the partial sums.
fn taylor(eps: f64, z0: f64, data: [f64; 2], s: f64, tol: f64) -> [f64; 2] {
    let a0 = 0.25 * z0 * z0 + eps;
    let a1 = 0.5 * z0;
    let a2 = 0.25;
    // Scaled coefficients c_n = b_n s^n with b_n = φ^{(n)}(z0)/n!.
    let (s2, s3) = (s * s, s * s * s);
    let (mut cm2, mut cm1, mut c0, mut c1) = (0.0, 0.0, data[0], data[1] * s);
    let mut value = c0 + c1;
    let mut deriv_s = c1; // s·φ′
    let mut small = 0;
    for n in 0..200usize {
        let nf = n as f64;
        let c2 = -(a0 * s2 * c0 + a1 * s3 * cm1 + a2 * s2 * s2 * cm2) / ((nf + 2.0) * (nf + 1.0));
        value += c2;
        deriv_s += (nf + 2.0) * c2;
        cm2 = cm1;
        cm1 = c0;
        c0 = c1;
        c1 = c2;
        let scale = value.abs() + deriv_s.abs();
        if (nf + 2.0) * c2.abs() <= tol * scale {
            small += 1;
            if small >= 4 {
                break;
            }
        } else {
            small = 0;
        }
    }
    [value, deriv_s / s]
}

type CacheKey = (u64, u64, usize, u64);

/// Shared table cache keyed by `(ε, z_max, n_points, tol)`.
#[derive(Debug, Default)]
pub struct TableCache {
    tables: RwLock<HashMap<CacheKey, Arc<EigenfunctionTable>>>,
}

impl TableCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_build(
        &self,
        epsilon: f64,
        z_max: f64,
        n_points: usize,
        tol: f64,
    ) -> Result<Arc<EigenfunctionTable>> {
        let key = (epsilon.to_bits(), z_max.to_bits(), n_points, tol.to_bits());
        if let Some(t) = self.tables.read().expect("table cache poisoned").get(&key) {
            return Ok(Arc::clone(t));
        }
        let built = Arc::new(build_eigenfunction_table(epsilon, z_max, n_points, tol)?);
        let mut w = self.tables.write().expect("table cache poisoned");
        Ok(Arc::clone(w.entry(key).or_insert(built)))
    }

    pub fn len(&self) -> usize {
        self.tables.read().expect("table cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        self.tables.write().expect("table cache poisoned").clear();
    }
}

pub fn global_cache() -> &'static TableCache {
    static CACHE: OnceLock<TableCache> = OnceLock::new();
    CACHE.get_or_init(TableCache::new)
}

/// Table covering `|z| ≤ z_needed` from the global cache. `z_max` is rounded
/// up to a multiple of 4 so nearby requests share one table.
pub fn table_covering(epsilon: f64, z_needed: f64) -> Result<Arc<EigenfunctionTable>> {
    let z_max = ((z_needed.max(1.0) / 4.0).ceil() * 4.0).max(4.0);
    global_cache().get_or_build(epsilon, z_max, required_points(epsilon, z_max), DEFAULT_TABLE_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::{integrate, IntegrationProblem};

    fn table(eps: f64, z_max: f64) -> EigenfunctionTable {
        build_eigenfunction_table(eps, z_max, required_points(eps, z_max), DEFAULT_TABLE_TOL).unwrap()
    }

    #[test]
    fn origin_data() {
        for eps in [-3.0, 0.0, 2.5] {
            let t = table(eps, 4.0);
            assert_eq!(t.eval_basis(0.0).unwrap(), [1.0, 0.0, 0.0, 1.0]);
        }
    }

    #[test]
    fn zero_epsilon_against_tight_brute_force() {
        let t = table(0.0, 4.0);
        // Independent fixed-step RK4 with a very fine step.
        let (mut y, mut dy) = (1.0_f64, 0.0_f64);
        let n = 200_000;
        let h = 1.0 / n as f64;
        let f = |z: f64, y: f64| -0.25 * z * z * y;
        for i in 0..n {
            let z = i as f64 * h;
            let k1 = (dy, f(z, y));
            let k2 = (dy + 0.5 * h * k1.1, f(z + 0.5 * h, y + 0.5 * h * k1.0));
            let k3 = (dy + 0.5 * h * k2.1, f(z + 0.5 * h, y + 0.5 * h * k2.0));
            let k4 = (dy + h * k3.1, f(z + h, y + h * k3.0));
            y += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            dy += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        }
        let b = t.eval_basis(1.0).unwrap();
        assert!((b[0] - y).abs() < 1e-12, "{} vs {}", b[0], y);
        assert!((b[1] - dy).abs() < 1e-12);
    }

    #[test]
    fn wronskian_is_one() {
        let t = table(0.0, 8.0);
        let w = t.wronskians();
        assert!((w[w.len() - 1] - 1.0).abs() < 1e-10);
        assert!(w.iter().all(|x| (x - 1.0).abs() < 1e-10));
    }

    #[test]
    fn off_node_matches_integrator() {
        let t = table(1.5, 6.0);
        let z = 3.3 + 0.37 * t.spacing();
        let rhs = |z: f64, s: &[f64], ds: &mut [f64]| {
            ds[0] = s[1];
            ds[1] = -(0.25 * z * z + 1.5) * s[0];
        };
        let p = IntegrationProblem::new(rhs, vec![1.0, 0.0], (0.0, z)).tolerances(1e-13, 1e-14);
        let r = integrate(&p).unwrap();
        let b = t.eval_basis(z).unwrap();
        assert!((b[0] - r.final_state()[0]).abs() < 1e-10);
        assert!((b[1] - r.final_state()[1]).abs() < 1e-10);
    }

    #[test]
    fn parity_and_linearity() {
        let t = table(0.5, 5.0);
        let (even, odd) = (Parity::Even.mix(), Parity::Odd.mix());
        for &z in &[0.3, 1.7, 2.0, 4.99] {
            assert_eq!(t.eval_varphi(-z, even).unwrap(), t.eval_varphi(z, even).unwrap());
            assert_eq!(t.eval_varphi(-z, odd).unwrap(), -t.eval_varphi(z, odd).unwrap());
        }
        let i = Complex64::new(0.0, 1.0);
        let mixed = t.eval_varphi(2.0, (Complex64::new(1.0, 0.0), i)).unwrap();
        let sum = t.eval_varphi(2.0, even).unwrap() + i * t.eval_varphi(2.0, odd).unwrap();
        assert!((mixed - sum).norm() < 1e-15);
        let (ev, od) = (t.even_values(), t.odd_values());
        let n = ev.len();
        for k in 0..n {
            assert_eq!(ev[k], ev[n - 1 - k]);
            assert_eq!(od[k], -od[n - 1 - k]);
        }
    }

    #[test]
    fn fine_grid_checks() {
        for &eps in &[-5.0, -1.0, 0.0, 1.0, 5.0] {
            let t = build_eigenfunction_table(eps, 3.0, 24001, DEFAULT_TABLE_TOL).unwrap();
            assert!(t.wronskian_drift() <= 1e-10, "eps={eps} W {:e}", t.wronskian_drift());
            assert!(t.parity_defect() <= 1e-10, "eps={eps} parity {:e}", t.parity_defect());
            assert!(t.difference_residual() <= 1e-6, "eps={eps} fd {:e}", t.difference_residual());
            println!("eps={eps}: W {:e} parity {:e} fd {:e}", t.wronskian_drift(), t.parity_defect(), t.difference_residual());
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(
            build_eigenfunction_table(0.0, 10.0, 11, 1e-12),
            Err(Error::ResolutionTooCoarse { .. })
        ));
        assert!(build_eigenfunction_table(0.0, 10.0, 1000, 1e-12).is_err());
        let t = table(0.0, 3.0);
        assert!(matches!(t.eval_basis(3.5), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn epsilon_continuity() {
        let n = required_points(1.0 + 1e-6, 6.0);
        let a = build_eigenfunction_table(1.0, 6.0, n, DEFAULT_TABLE_TOL).unwrap();
        let b = build_eigenfunction_table(1.0 + 1e-6, 6.0, n, DEFAULT_TABLE_TOL).unwrap();
        for (x, y) in a.even_values().iter().zip(b.even_values()) {
            assert!((x - y).abs() <= 1e-4, "{x} {y}");
        }
        for (x, y) in a.odd_values().iter().zip(b.odd_values()) {
            assert!((x - y).abs() <= 1e-4, "{x} {y}");
        }
    }

    #[test]
    fn asymptotic_amplitude_is_stable_in_z() {
        // B² measured at two different z_max must agree.
        for eps in [-4.0, 0.0, 3.0] {
            for p in [Parity::Even, Parity::Odd] {
                let a = table(eps, 16.0).asymptotic_amplitude_sq(p).unwrap();
                let b = table(eps, 24.0).asymptotic_amplitude_sq(p).unwrap();
                assert!(((a - b) / b).abs() < 1e-6, "eps={eps} {p:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn cache_shares_tables() {
        let c = TableCache::new();
        let a = c.get_or_build(0.25, 4.0, 101, 1e-12).unwrap();
        let b = c.get_or_build(0.25, 4.0, 101, 1e-12).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(c.len(), 1);
    }
}
