use crate::error::{Error, Result};

/// Cubic interpolating spline with not-a-knot end conditions.
///
/// Stores the knot abscissae, ordinates and the second derivatives
/// ("moments") at every knot.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn not_a_knot(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n != y.len() {
            return Err(Error::InvalidDescriptor(format!(
                "tabulated function has {} times but {} values",
                n,
                y.len()
            )));
        }
        if n < 4 {
            return Err(Error::InvalidDescriptor(format!(
                "tabulated function needs at least 4 samples, got {n}"
            )));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidDescriptor("tabulated samples must be finite".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidDescriptor(
                "tabulated sample times must be strictly increasing".into(),
            ));
        }

        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let slope: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();

        // Unknowns are the interior moments M_1..M_{n-2}; the end moments are
        // eliminated through the not-a-knot conditions.
        let k = n - 2;
        let mut sub = vec![0.0; k];
        let mut diag = vec![0.0; k];
        let mut sup = vec![0.0; k];
        let mut rhs = vec![0.0; k];
        for r in 0..k {
            let i = r + 1;
            sub[r] = h[i - 1];
            diag[r] = 2.0 * (h[i - 1] + h[i]);
            sup[r] = h[i];
            rhs[r] = 6.0 * (slope[i] - slope[i - 1]);
        }
        let (h0, h1) = (h[0], h[1]);
        diag[0] = (h0 + h1) * (h0 + 2.0 * h1) / h1;
        let (ha, hb) = (h[n - 2], h[n - 3]);
        sup[0] = (h1 * h1 - h0 * h0) / h1;
        diag[k - 1] = (ha + hb) * (ha + 2.0 * hb) / hb;
        sub[k - 1] = (hb * hb - ha * ha) / hb;

        // Thomas sweep.
        for r in 1..k {
            let w = sub[r] / diag[r - 1];
            diag[r] -= w * sup[r - 1];
            rhs[r] -= w * rhs[r - 1];
        }
        let mut inner = vec![0.0; k];
        inner[k - 1] = rhs[k - 1] / diag[k - 1];
        for r in (0..k - 1).rev() {
            inner[r] = (rhs[r] - sup[r] * inner[r + 1]) / diag[r];
        }

        let mut m = vec![0.0; n];
        m[1..n - 1].copy_from_slice(&inner);
        m[0] = ((h0 + h1) * m[1] - h0 * m[2]) / h1;
        m[n - 1] = ((ha + hb) * m[n - 2] - ha * m[n - 3]) / hb;

        Ok(Self { x, y, m })
    }

    pub fn x_min(&self) -> f64 {
        self.x[0]
    }

    pub fn x_max(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.x, &self.y)
    }

    fn interval(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    /// Value and first derivative at `t`. The caller is responsible for
    /// keeping `t` inside the knot range.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let i = self.interval(t);
        let h = self.x[i + 1] - self.x[i];
        let a = self.x[i + 1] - t;
        let b = t - self.x[i];
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let c0 = self.y[i] / h - m0 * h / 6.0;
        let c1 = self.y[i + 1] / h - m1 * h / 6.0;
        let value = m0 * a * a * a / (6.0 * h) + m1 * b * b * b / (6.0 * h) + c0 * a + c1 * b;
        let deriv = -m0 * a * a / (2.0 * h) + m1 * b * b / (2.0 * h) - c0 + c1;
        (value, deriv)
    }
}
