//! Adaptive explicit Runge–Kutta integration (Dormand–Prince 5(4)).
//!
//! Steps are accepted when the embedded error estimate satisfies
//! `|err_i| ≤ abs_tol + rel_tol·max(|y_i|, |y_new_i|)` for every component.
//! Dense output uses the standard quartic continuous extension of the pair.

use crate::error::{Error, Result};

type Rhs<'a> = Box<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'a>;
type Guard<'a> = Box<dyn Fn(f64, &[f64]) -> bool + Send + Sync + 'a>;

pub const MIN_TOL: f64 = 1e-14;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// An initial-value problem `ẏ = f(t, y)` with its integration settings.
pub struct IntegrationProblem<'a> {
    rhs: Rhs<'a>,
    initial_state: Vec<f64>,
    t_span: (f64, f64),
    rel_tol: f64,
    abs_tol: f64,
    max_steps: usize,
    dense_output: bool,
    blow_up_bound: f64,
    landing_points: Vec<f64>,
    guard: Option<Guard<'a>>,
}

impl<'a> IntegrationProblem<'a> {
    pub fn new<F>(rhs: F, initial_state: Vec<f64>, t_span: (f64, f64)) -> Self
    where
        F: Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'a,
    {
        Self {
            rhs: Box::new(rhs),
            initial_state,
            t_span,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_steps: 1_000_000,
            dense_output: true,
            blow_up_bound: 1e12,
            landing_points: Vec::new(),
            guard: None,
        }
    }

    pub fn tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn dense_output(mut self, on: bool) -> Self {
        self.dense_output = on;
        self
    }

    pub fn blow_up_bound(mut self, bound: f64) -> Self {
        self.blow_up_bound = bound;
        self
    }

    /// Times the stepper must land on exactly (clipped to the span). Every
    /// landing point becomes a node of the returned trajectory.
    pub fn landing_points(mut self, points: Vec<f64>) -> Self {
        self.landing_points = points;
        self
    }

    /// Stops the integration with [`Error::GuardTriggered`] as soon as an
    /// accepted state satisfies the predicate.
    pub fn guard<G>(mut self, guard: G) -> Self
    where
        G: Fn(f64, &[f64]) -> bool + Send + Sync + 'a,
    {
        self.guard = Some(Box::new(guard));
        self
    }

    pub fn t_span(&self) -> (f64, f64) {
        self.t_span
    }

    fn validate(&self) -> Result<()> {
        if self.initial_state.is_empty() {
            return Err(Error::InvalidArgument("empty initial state".into()));
        }
        if !(self.rel_tol >= MIN_TOL && self.abs_tol >= MIN_TOL) {
            return Err(Error::InvalidArgument(format!(
                "tolerances must be >= {MIN_TOL:e} (rel {}, abs {})",
                self.rel_tol, self.abs_tol
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidArgument("max_steps must be >= 1".into()));
        }
        if !(self.t_span.0.is_finite() && self.t_span.1.is_finite()) {
            return Err(Error::InvalidArgument("time span must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Segment {
    t0: f64,
    h: f64,
    // r1..r5 of the continuous extension, each of length `dim`.
    coeffs: Vec<f64>,
}

/// Accepted nodes of an integration plus the piecewise-quartic interpolant.
#[derive(Debug, Clone)]
pub struct Trajectory {
    dim: usize,
    times: Vec<f64>,
    states: Vec<f64>,
    segments: Vec<Segment>,
    direction: f64,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn final_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn has_dense_output(&self) -> bool {
        !self.segments.is_empty() || self.times.len() == 1
    }

    fn locate(&self, t: f64) -> Result<Option<usize>> {
        let (a, b) = (self.t_start(), self.t_end());
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if !(t >= lo && t <= hi) {
            return Err(Error::OutOfWindow { t, t_min: lo, t_max: hi });
        }
        if self.times.len() == 1 {
            return Ok(None);
        }
        if self.segments.is_empty() {
            return Err(Error::InvalidArgument("trajectory was built without dense output".into()));
        }
        // Segments are ordered along the integration direction.
        let key = self.direction * t;
        let idx = self.segments.partition_point(|s| self.direction * s.t0 <= key);
        Ok(Some(idx.saturating_sub(1).min(self.segments.len() - 1)))
    }

    /// Interpolated state at `t`.
    pub fn eval_into(&self, t: f64, out: &mut [f64]) -> Result<()> {
        match self.locate(t)? {
            None => out.copy_from_slice(self.state(0)),
            Some(k) => {
                let s = &self.segments[k];
                let d = self.dim;
                let th = (t - s.t0) / s.h;
                let th1 = 1.0 - th;
                for i in 0..d {
                    let r = |j: usize| s.coeffs[j * d + i];
                    out[i] = r(0) + th * (r(1) + th1 * (r(2) + th * (r(3) + th1 * r(4))));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, &mut out)?;
        Ok(out)
    }

    /// Time derivative of the interpolant at `t`.
    pub fn eval_derivative(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        if let Some(k) = self.locate(t)? {
            let s = &self.segments[k];
            let d = self.dim;
            let th = (t - s.t0) / s.h;
            let th1 = 1.0 - th;
            for (i, o) in out.iter_mut().enumerate() {
                let r = |j: usize| s.coeffs[j * d + i];
                let dth = r(1)
                    + (1.0 - 2.0 * th) * r(2)
                    + th * (2.0 - 3.0 * th) * r(3)
                    + 2.0 * th * th1 * (1.0 - 2.0 * th) * r(4);
                *o = dth / s.h;
            }
        }
        Ok(out)
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn check_finite(t: f64, state: &[f64], k: &[f64]) -> Result<()> {
    if k.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteRhs { t, state: state.to_vec() })
    }
}

/// Integrates the problem over its span.
pub fn integrate(problem: &IntegrationProblem<'_>) -> Result<Trajectory> {
    problem.validate()?;
    let f = &problem.rhs;
    let n = problem.initial_state.len();
    let (t0, t1) = problem.t_span;
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let (rtol, atol) = (problem.rel_tol, problem.abs_tol);

    let mut y = problem.initial_state.clone();
    let mut t = t0;
    let mut k1 = vec![0.0; n];
    f(t, &y, &mut k1);
    check_finite(t, &y, &k1)?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteRhs { t, state: y });
    }

    let mut traj = Trajectory {
        dim: n,
        times: vec![t0],
        states: y.clone(),
        segments: Vec::new(),
        direction: dir,
    };
    if t0 == t1 {
        return Ok(traj);
    }

    let mut stops: Vec<f64> = problem
        .landing_points
        .iter()
        .copied()
        .filter(|&p| dir * (p - t0) > 0.0 && dir * (t1 - p) > 0.0)
        .collect();
    stops.sort_by(|a, b| (dir * a).total_cmp(&(dir * b)));
    stops.dedup();
    stops.push(t1);
    let mut next_stop = 0;

    let span = (t1 - t0).abs();
    let mut h = initial_step(f.as_ref(), t0, &y, &k1, dir, rtol, atol).min(span);

    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut ys = vec![0.0; n];
    let mut y_new = vec![0.0; n];

    let mut steps = 0usize;
    let mut last_rejected = false;
    loop {
        if steps >= problem.max_steps {
            return Err(Error::StepLimitExceeded { t, max_steps: problem.max_steps });
        }
        steps += 1;

        let target = stops[next_stop];
        let remaining = (target - t).abs();
        let landing = 1.01 * h >= remaining;
        let hh = if landing { remaining } else { h };
        if hh <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t, state: y.clone() });
        }
        let hs = dir * hh;

        for i in 0..n {
            ys[i] = y[i] + hs * A21 * k1[i];
        }
        f(t + C2 * hs, &ys, &mut k2);
        check_finite(t + C2 * hs, &ys, &k2)?;
        for i in 0..n {
            ys[i] = y[i] + hs * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + C3 * hs, &ys, &mut k3);
        check_finite(t + C3 * hs, &ys, &k3)?;
        for i in 0..n {
            ys[i] = y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(t + C4 * hs, &ys, &mut k4);
        check_finite(t + C4 * hs, &ys, &k4)?;
        for i in 0..n {
            ys[i] = y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + C5 * hs, &ys, &mut k5);
        check_finite(t + C5 * hs, &ys, &k5)?;
        for i in 0..n {
            ys[i] = y[i]
                + hs * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let t_new = if landing { target } else { t + hs };
        f(t + hs, &ys, &mut k6);
        check_finite(t + hs, &ys, &k6)?;
        for i in 0..n {
            y_new[i] = y[i]
                + hs * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f(t_new, &y_new, &mut k7);
        check_finite(t_new, &y_new, &k7)?;

        let mut err = 0.0_f64;
        for i in 0..n {
            let e = hs
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = atol + rtol * y[i].abs().max(y_new[i].abs());
            err = err.max(e.abs() / sc);
        }

        if err <= 1.0 {
            if problem.dense_output {
                let mut coeffs = vec![0.0; 5 * n];
                for i in 0..n {
                    let ydiff = y_new[i] - y[i];
                    let bspl = hs * k1[i] - ydiff;
                    coeffs[i] = y[i];
                    coeffs[n + i] = ydiff;
                    coeffs[2 * n + i] = bspl;
                    coeffs[3 * n + i] = ydiff - hs * k7[i] - bspl;
                    coeffs[4 * n + i] = hs
                        * (D1 * k1[i]
                            + D3 * k3[i]
                            + D4 * k4[i]
                            + D5 * k5[i]
                            + D6 * k6[i]
                            + D7 * k7[i]);
                }
                traj.segments.push(Segment { t0: t, h: hs, coeffs });
            }
            t = t_new;
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            traj.times.push(t);
            traj.states.extend_from_slice(&y);

            let norm = max_abs(&y);
            if !(norm <= problem.blow_up_bound) {
                return Err(Error::BlowUp { t, norm });
            }
            if let Some(g) = &problem.guard {
                if g(t, &y) {
                    return Err(Error::GuardTriggered { t, state: y });
                }
            }
            if landing {
                next_stop += 1;
                if next_stop == stops.len() {
                    return Ok(traj);
                }
            }
            let mut fac = 0.9 * err.max(1e-10).powf(-0.2);
            fac = fac.clamp(0.2, 10.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            // A clipped landing step says nothing about the natural step size.
            h = if landing { h.max(hh * fac) } else { hh * fac };
            last_rejected = false;
        } else {
            let fac = (0.9 * err.powf(-0.2)).max(0.2);
            h = hh * fac;
            last_rejected = true;
        }
    }
}

fn initial_step(
    f: &(dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync),
    t0: f64,
    y0: &[f64],
    f0: &[f64],
    dir: f64,
    rtol: f64,
    atol: f64,
) -> f64 {
    let n = y0.len();
    let sc: Vec<f64> = y0.iter().map(|v| atol + rtol * v.abs()).collect();
    let rms = |v: &[f64]| -> f64 {
        (v.iter().zip(&sc).map(|(x, s)| (x / s).powi(2)).sum::<f64>() / n as f64).sqrt()
    };
    let d0 = rms(y0);
    let d1 = rms(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, k)| y + dir * h0 * k).collect();
    let mut f1 = vec![0.0; n];
    f(t0 + dir * h0, &y1, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff) / h0;
    let dmax = d1.max(d2);
    let h1 = if !dmax.is_finite() {
        h0
    } else if dmax <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / dmax).powf(0.2)
    };
    (100.0 * h0).min(h1)
}
