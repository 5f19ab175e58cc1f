//! Banded direct solvers: Cholesky for the symmetric Picard systems and LU
//! with partial pivoting for Newton Jacobians.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

/// Symmetric positive-definite matrix stored by its lower band.
#[derive(Debug, Clone)]
pub struct BandedSpd {
    n: usize,
    bw: usize,
    /// Row `i` holds entries `(i, i-bw) ..= (i, i)`.
    data: Vec<f64>,
}

impl BandedSpd {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (self.bw + j - i)
    }

    /// Adds `v` to entry `(i, j)` (and implicitly `(j, i)`).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        if i - j > self.bw {
            return 0.0;
        }
        self.data[self.idx(i, j)]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..=i {
                let a = self.data[self.idx(i, j)];
                y[i] += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    /// In-place `L Lᵀ` factorisation.
    pub fn factor(mut self) -> Result<CholeskyFactor> {
        let (n, bw) = (self.n, self.bw);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut s = self.data[self.idx(i, j)];
                let klo = lo.max(j.saturating_sub(bw));
                for k in klo..j {
                    s -= self.data[self.idx(i, k)] * self.data[self.idx(j, k)];
                }
                if j == i {
                    if !(s > 0.0) {
                        return Err(Error::DegenerateSystem { pivot: i });
                    }
                    let k = self.idx(i, i);
                    self.data[k] = math::sqrt(s);
                } else {
                    let k = self.idx(i, j);
                    self.data[k] = s / self.data[self.idx(j, j)];
                }
            }
        }
        Ok(CholeskyFactor { l: self })
    }
}

#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    l: BandedSpd,
}

impl CholeskyFactor {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let l = &self.l;
        let (n, bw) = (l.n, l.bw);
        let mut y = b.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut s = y[i];
            for k in lo..i {
                s -= l.data[l.idx(i, k)] * y[k];
            }
            y[i] = s / l.data[l.idx(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            let hi = (i + bw).min(n - 1);
            for k in i + 1..=hi {
                s -= l.data[l.idx(k, i)] * y[k];
            }
            y[i] = s / l.data[l.idx(i, i)];
        }
        y
    }
}

/// General banded matrix with `kl` sub- and `ku` super-diagonals, with room
/// for the `kl` extra super-diagonals that pivoting can fill.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl);
        i * self.width + (j + self.kl - i)
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry outside band");
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (i, yi) in y.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            for (j, xj) in x.iter().enumerate().take(hi + 1).skip(lo) {
                *yi += self.data[self.idx(i, j)] * xj;
            }
        }
        y
    }

    /// LU with partial pivoting, in place.
    pub fn factor(mut self) -> Result<LuFactor> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let mut piv = vec![0usize; n];
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(math::abs(*v)));
        for c in 0..n {
            let last_row = (c + kl).min(n - 1);
            let mut p = c;
            let mut best = math::abs(self.data[self.idx(c, c)]);
            for r in c + 1..=last_row {
                let v = math::abs(self.data[self.idx(r, c)]);
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > 1e-300_f64.max(1e-15 * scale * f64::EPSILON)) {
                return Err(Error::DegenerateSystem { pivot: c });
            }
            piv[c] = p;
            let last_col = (c + ku + kl).min(n - 1);
            if p != c {
                for j in c..=last_col {
                    let (a, b) = (self.idx(c, j), self.idx(p, j));
                    self.data.swap(a, b);
                }
            }
            let d = self.data[self.idx(c, c)];
            for r in c + 1..=last_row {
                let k = self.idx(r, c);
                let l = self.data[k] / d;
                self.data[k] = l;
                if l != 0.0 {
                    for j in c + 1..=last_col {
                        let u = self.data[self.idx(c, j)];
                        let t = self.idx(r, j);
                        self.data[t] -= l * u;
                    }
                }
            }
        }
        Ok(LuFactor { lu: self, piv })
    }
}

#[derive(Debug, Clone)]
pub struct LuFactor {
    lu: BandedMatrix,
    piv: Vec<usize>,
}

impl LuFactor {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let a = &self.lu;
        let (n, kl, ku) = (a.n, a.kl, a.ku);
        let mut y = b.to_vec();
        for c in 0..n {
            y.swap(c, self.piv[c]);
            let last_row = (c + kl).min(n - 1);
            for r in c + 1..=last_row {
                y[r] -= a.data[a.idx(r, c)] * y[c];
            }
        }
        for i in (0..n).rev() {
            let last_col = (i + ku + kl).min(n - 1);
            let mut s = y[i];
            for j in i + 1..=last_col {
                s -= a.data[a.idx(i, j)] * y[j];
            }
            y[i] = s / a.data[a.idx(i, i)];
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn residual(y: &[f64], b: &[f64]) -> f64 {
        y.iter().zip(b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn cholesky_tridiagonal() {
        let n = 50;
        let mut a = BandedSpd::zeros(n, 1);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let b = a.mul_vec(&x);
        let sol = a.clone().factor().unwrap().solve(&b);
        assert!(residual(&sol, &x) < 1e-10);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a = BandedSpd::zeros(2, 1);
        a.add(0, 0, 1.0);
        a.add(1, 1, 1.0);
        a.add(1, 0, 2.0);
        assert!(a.factor().is_err());
    }

    #[test]
    fn lu_needs_pivoting() {
        // Zero leading pivot.
        let mut a = BandedMatrix::zeros(3, 1, 1);
        a.set(0, 1, 1.0);
        a.set(1, 0, 1.0);
        a.set(1, 1, 1.0);
        a.set(1, 2, 1.0);
        a.set(2, 1, 1.0);
        a.set(2, 2, 3.0);
        let x = [1.0, -2.0, 0.5];
        let b = a.mul_vec(&x);
        let sol = a.factor().unwrap().solve(&b);
        assert!(residual(&sol, &x) < 1e-14);
    }

    proptest! {
        #[test]
        fn lu_solves_random_banded(seed in proptest::collection::vec(-1.0f64..1.0, 400), kl in 1usize..4, ku in 1usize..4) {
            let n = 40;
            let mut a = BandedMatrix::zeros(n, kl, ku);
            let mut it = seed.iter().cycle();
            for i in 0..n {
                for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                    a.set(i, j, *it.next().unwrap());
                }
            }
            let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).cos()).collect();
            let b = a.mul_vec(&x);
            if let Ok(lu) = a.clone().factor() {
                let y = lu.solve(&b);
                let back = a.mul_vec(&y);
                prop_assert!(residual(&back, &b) < 1e-8 * (1.0 + b.iter().fold(0.0f64, |m, v| m.max(v.abs()))));
            }
        }

        #[test]
        fn cholesky_solves_diagonally_dominant(off in proptest::collection::vec(-1.0f64..0.0, 200), bw in 1usize..6) {
            let n = 40;
            let mut a = BandedSpd::zeros(n, bw);
            let mut it = off.iter().cycle();
            let mut diag = vec![0.1; n];
            for i in 0..n {
                for j in i.saturating_sub(bw)..i {
                    let v = *it.next().unwrap();
                    a.add(i, j, v);
                    diag[i] -= v;
                    diag[j] -= v;
                }
            }
            for (i, d) in diag.iter().enumerate() {
                a.add(i, i, *d);
            }
            let x: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
            let b = a.mul_vec(&x);
            let y = a.factor().unwrap().solve(&b);
            prop_assert!(residual(&y, &x) < 1e-8 * 40.0);
        }
    }
}
