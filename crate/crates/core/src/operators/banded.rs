//! Complex band matrices and direct solvers.

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Square band matrix with `kl` sub- and `ku` super-diagonals, stored row
/// by row: entry (i, j) lives at `i*(kl+ku+1) + (j + kl − i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<Complex64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self { n, kl, ku, data: vec![ZERO; n * (kl + ku + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.kl + self.ku + 1) + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        if i < self.n && j < self.n && self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            ZERO
        }
    }

    /// Panics if (i, j) lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        assert!(i < self.n && j < self.n && self.in_band(i, j), "({i}, {j}) outside band");
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![ZERO; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            let mut acc = ZERO;
            for j in lo..=hi {
                acc += self.data[self.idx(i, j)] * x[j];
            }
            *yi = acc;
        }
    }

    /// Solves `A x = b`. Tridiagonal systems go through the Thomas sweep
    /// first and fall back to pivoted elimination when a pivot is tiny.
    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        if b.len() != self.n {
            return Err(Error::InvalidArgument(format!(
                "right-hand side has length {}, matrix dimension is {}",
                b.len(),
                self.n
            )));
        }
        if self.kl == 1 && self.ku == 1 {
            let sub: Vec<_> = (0..self.n).map(|i| if i > 0 { self.get(i, i - 1) } else { ZERO }).collect();
            let diag: Vec<_> = (0..self.n).map(|i| self.get(i, i)).collect();
            let sup: Vec<_> = (0..self.n).map(|i| self.get(i, i + 1)).collect();
            if let Some(x) = thomas(&sub, &diag, &sup, b) {
                return Ok(x);
            }
        }
        self.solve_pivoted(b)
    }

    /// `α·I + β·self`, entry by entry.
    pub fn scaled_plus_identity(&self, alpha: Complex64, beta: Complex64) -> BandMatrix {
        let mut data: Vec<Complex64> = self.data.iter().map(|v| beta * v).collect();
        let w = self.kl + self.ku + 1;
        for i in 0..self.n {
            data[i * w + self.kl] += alpha;
        }
        BandMatrix { n: self.n, kl: self.kl, ku: self.ku, data }
    }

    /// Band LU without row exchanges. Stable for matrices whose Hermitian
    /// part is definite, such as `1 + i·s·H` with H Hermitian. Returns
    /// `SolveFailure` when a pivot is tiny relative to its row.
    pub fn solve_unpivoted(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        if b.len() != n {
            return Err(Error::InvalidArgument(format!(
                "right-hand side has length {}, matrix dimension is {n}",
                b.len()
            )));
        }
        let w = kl + ku + 1;
        let mut a = self.data.clone();
        let mut x = b.to_vec();
        for k in 0..n {
            let pivot = a[k * w + kl];
            let row_scale: f64 = a[k * w..(k + 1) * w].iter().map(|v| v.norm()).sum();
            if !(pivot.norm() > 1e-12 * row_scale) {
                return Err(Error::SolveFailure(format!("tiny pivot at row {k}")));
            }
            let inv = 1.0 / pivot;
            let jmax = (k + ku).min(n - 1);
            for r in k + 1..=(k + kl).min(n - 1) {
                let rk = r * w + (k + kl - r);
                let f = a[rk] * inv;
                if f == ZERO {
                    continue;
                }
                a[rk] = ZERO;
                for j in k + 1..=jmax {
                    let v = a[k * w + (j + kl - k)];
                    a[r * w + (j + kl - r)] -= f * v;
                }
                let xk = x[k];
                x[r] -= f * xk;
            }
        }
        for k in (0..n).rev() {
            let mut acc = x[k];
            for j in k + 1..=(k + ku).min(n - 1) {
                acc -= a[k * w + (j + kl - k)] * x[j];
            }
            x[k] = acc / a[k * w + kl];
        }
        Ok(x)
    }

    /// Gaussian elimination with partial pivoting inside the band; the
    /// upper band grows to `ku + kl` through row swaps.
    pub fn solve_pivoted(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        let (n, kl) = (self.n, self.kl);
        let ku2 = self.ku + kl;
        let w = kl + ku2 + 1;
        let at = |i: usize, j: usize| i * w + (j + kl - i);
        let mut a = vec![ZERO; n * w];
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + self.ku).min(n - 1) {
                a[at(i, j)] = self.data[self.idx(i, j)];
            }
        }
        let mut x = b.to_vec();
        let scale = self.data.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = a[at(k, k)].norm();
            for r in k + 1..=last {
                let v = a[at(r, k)].norm();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > scale * f64::EPSILON * 1e-3) {
                return Err(Error::SolveFailure(format!("singular band matrix at column {k}")));
            }
            let jmax = (k + ku2).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    a.swap(at(k, j), at(p, j));
                }
                x.swap(k, p);
            }
            let pivot = a[at(k, k)];
            for r in k + 1..=last {
                let f = a[at(r, k)] / pivot;
                if f == ZERO {
                    continue;
                }
                a[at(r, k)] = ZERO;
                for j in k + 1..=jmax {
                    let v = a[at(k, j)];
                    a[at(r, j)] -= f * v;
                }
                let xk = x[k];
                x[r] -= f * xk;
            }
        }
        for k in (0..n).rev() {
            let jmax = (k + ku2).min(n - 1);
            let mut acc = x[k];
            for j in k + 1..=jmax {
                acc -= a[at(k, j)] * x[j];
            }
            x[k] = acc / a[at(k, k)];
        }
        Ok(x)
    }
}

/// Thomas algorithm without pivoting; `None` when a pivot is too small
/// relative to its row.
pub fn thomas(
    sub: &[Complex64],
    diag: &[Complex64],
    sup: &[Complex64],
    rhs: &[Complex64],
) -> Option<Vec<Complex64>> {
    let n = diag.len();
    let mut c = vec![ZERO; n];
    let mut d = vec![ZERO; n];
    let mut denom = diag[0];
    let tiny = |den: Complex64, i: usize| den.norm() <= 1e-12 * (diag[i].norm() + sub[i].norm() + sup[i].norm());
    if tiny(denom, 0) {
        return None;
    }
    c[0] = sup[0] / denom;
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - sub[i] * c[i - 1];
        if tiny(denom, i) {
            return None;
        }
        c[i] = sup[i] / denom;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        let next = d[i + 1];
        d[i] -= c[i] * next;
    }
    Some(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_band(n: usize, kl: usize, ku: usize, seed: u64) -> BandMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = BandMatrix::zeros(n, kl, ku);
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                a.set(i, j, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            }
        }
        a
    }

    #[test]
    fn solves_random_systems() {
        for (kl, ku) in [(1, 1), (2, 2), (4, 4), (1, 3)] {
            let a = random_band(60, kl, ku, 11 + kl as u64);
            let x: Vec<Complex64> = (0..60).map(|i| c(i as f64 * 0.1, 1.0 - i as f64 * 0.02)).collect();
            let b = a.matvec(&x);
            let got = a.solve(&b).unwrap();
            let err = got.iter().zip(&x).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
            assert!(err < 1e-9, "kl={kl} ku={ku} err={err:e}");
        }
    }

    #[test]
    fn zero_leading_pivot_needs_pivoting() {
        let mut a = BandMatrix::zeros(3, 1, 1);
        a.set(0, 0, c(0.0, 0.0));
        a.set(0, 1, c(1.0, 0.0));
        a.set(1, 0, c(1.0, 0.0));
        a.set(1, 1, c(0.0, 0.0));
        a.set(1, 2, c(2.0, 0.0));
        a.set(2, 1, c(1.0, 0.0));
        a.set(2, 2, c(1.0, 0.0));
        let x = vec![c(1.0, 0.0), c(2.0, 1.0), c(-1.0, 0.5)];
        let b = a.matvec(&x);
        let got = a.solve(&b).unwrap();
        for (p, q) in got.iter().zip(&x) {
            assert!((p - q).norm() < 1e-14);
        }
    }

    #[test]
    fn unpivoted_matches_pivoted_on_shifted_hermitian() {
        let n = 50;
        let mut h = BandMatrix::zeros(n, 3, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for i in 0..n {
            h.set(i, i, c(rng.gen_range(-5.0..5.0), 0.0));
            for k in 1..=3 {
                if i + k < n {
                    let v = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    h.set(i, i + k, v);
                    h.set(i + k, i, v.conj());
                }
            }
        }
        let a = h.scaled_plus_identity(c(1.0, 0.0), c(0.0, 0.7));
        assert_eq!(a.get(3, 3), c(1.0, 0.0) + c(0.0, 0.7) * h.get(3, 3));
        let b: Vec<Complex64> = (0..n).map(|i| c(i as f64, 1.0)).collect();
        let x1 = a.solve_unpivoted(&b).unwrap();
        let x2 = a.solve_pivoted(&b).unwrap();
        for (p, q) in x1.iter().zip(&x2) {
            assert!((p - q).norm() < 1e-12);
        }
        assert!(BandMatrix::zeros(4, 1, 1).solve_unpivoted(&[c(1.0, 0.0); 4]).is_err());
    }

    #[test]
    fn singular_is_reported() {
        let a = BandMatrix::zeros(4, 1, 1);
        assert!(matches!(a.solve(&[c(1.0, 0.0); 4]), Err(Error::SolveFailure(_))));
    }
}
