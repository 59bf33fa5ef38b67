//! Central finite-difference stencils on a uniform grid.
//!
//! Both derivatives are applied with zero extension past the grid ends, so
//! the first-derivative matrix is exactly antisymmetric and the
//! second-derivative matrix exactly symmetric.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StencilOrder {
    /// 3-point second difference, 2-point centered first difference.
    #[default]
    Second,
    Fourth,
    Sixth,
    Eighth,
}

impl StencilOrder {
    pub fn from_order(order: u32) -> Option<Self> {
        match order {
            2 => Some(Self::Second),
            4 => Some(Self::Fourth),
            6 => Some(Self::Sixth),
            8 => Some(Self::Eighth),
            _ => None,
        }
    }

    pub fn order(self) -> u32 {
        match self {
            Self::Second => 2,
            Self::Fourth => 4,
            Self::Sixth => 6,
            Self::Eighth => 8,
        }
    }

    /// Number of neighbours on each side.
    pub fn half_width(self) -> usize {
        self.order() as usize / 2
    }

    /// `c_k`, k = 1..=p, with `D1 ψ_i = Σ c_k (ψ_{i+k} − ψ_{i−k}) / h`.
    pub fn d1(self) -> &'static [f64] {
        match self {
            Self::Second => &[1.0 / 2.0],
            Self::Fourth => &[2.0 / 3.0, -1.0 / 12.0],
            Self::Sixth => &[3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0],
            Self::Eighth => &[4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0],
        }
    }

    /// `(c_0, [c_k])` with `D2 ψ_i = (c_0 ψ_i + Σ c_k (ψ_{i+k} + ψ_{i−k})) / h²`.
    pub fn d2(self) -> (f64, &'static [f64]) {
        match self {
            Self::Second => (-2.0, &[1.0]),
            Self::Fourth => (-5.0 / 2.0, &[4.0 / 3.0, -1.0 / 12.0]),
            Self::Sixth => (-49.0 / 18.0, &[3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0]),
            Self::Eighth => (-205.0 / 72.0, &[8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0]),
        }
    }
}

/// `out = D1 ψ`.
pub fn apply_d1(order: StencilOrder, h: f64, psi: &[Complex64], out: &mut [Complex64]) {
    let c = order.d1();
    let n = psi.len();
    let at = |j: isize| if j < 0 || j as usize >= n { Complex64::new(0.0, 0.0) } else { psi[j as usize] };
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, &ck) in c.iter().enumerate() {
            let k = k as isize + 1;
            acc += ck * (at(i as isize + k) - at(i as isize - k));
        }
        *o = acc / h;
    }
}

/// `out = D2 ψ`.
pub fn apply_d2(order: StencilOrder, h: f64, psi: &[Complex64], out: &mut [Complex64]) {
    let (c0, c) = order.d2();
    let n = psi.len();
    let at = |j: isize| if j < 0 || j as usize >= n { Complex64::new(0.0, 0.0) } else { psi[j as usize] };
    let h2 = h * h;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = c0 * psi[i];
        for (k, &ck) in c.iter().enumerate() {
            let k = k as isize + 1;
            acc += ck * (at(i as isize + k) + at(i as isize - k));
        }
        *o = acc / h2;
    }
}
