//! Banded matrices with an LU factorization (partial pivoting) and an
//! inertia count for symmetric band matrices.

use crate::error::{Error, Result};

/// Square band matrix with `kl` sub- and `ku` super-diagonals. Storage keeps
/// `kl` extra super-diagonals per row for the fill created by pivoting.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
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

    pub fn lower(&self) -> usize {
        self.kl
    }

    pub fn upper(&self) -> usize {
        self.ku
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let off = j as isize - i as isize + self.kl as isize;
        if off < 0 || off as usize >= self.width || j >= self.n {
            None
        } else {
            Some(i * self.width + off as usize)
        }
    }

    /// Whether `(i, j)` lies inside the declared band.
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j + self.kl >= i && j <= i + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.slot(i, j).unwrap()]
        } else {
            0.0
        }
    }

    /// Adds `v` to entry `(i, j)`.
    ///
    /// # Panics
    /// If `(i, j)` is outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let k = self.slot(i, j).unwrap();
        self.data[k] += v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let k = self.slot(i, j).unwrap();
        self.data[k] = v;
    }

    pub fn clear_row(&mut self, i: usize) {
        let w = self.width;
        self.data[i * w..(i + 1) * w].fill(0.0);
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Dense copy; only meant for small matrices in tests and diagnostics.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// LU factorization with partial pivoting.
    pub fn lu(mut self) -> Result<BandLu> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let reach = kl + ku;
        let mut pivots = vec![0usize; n];
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.slot(k, k).unwrap()].abs();
            for i in k + 1..=last {
                let v = self.data[self.slot(i, k).unwrap()].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > scale * 1e-300) || !best.is_finite() {
                return Err(Error::Singular(format!("zero pivot in column {k}")));
            }
            pivots[k] = p;
            let jmax = (k + reach).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let a = self.slot(k, j).unwrap();
                    let b = self.slot(p, j).unwrap();
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.slot(k, k).unwrap()];
            for i in k + 1..=last {
                let sik = self.slot(i, k).unwrap();
                let m = self.data[sik] / pivot;
                self.data[sik] = m;
                if m != 0.0 {
                    for j in k + 1..=jmax {
                        let u = self.data[self.slot(k, j).unwrap()];
                        let s = self.slot(i, j).unwrap();
                        self.data[s] -= m * u;
                    }
                }
            }
        }
        Ok(BandLu {
            mat: self,
            pivots,
        })
    }
}

/// Factorized band matrix.
#[derive(Debug, Clone)]
pub struct BandLu {
    mat: BandMatrix,
    pivots: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let a = &self.mat;
        let n = a.n;
        let reach = a.kl + a.ku;
        let mut x = rhs.to_vec();
        for k in 0..n {
            x.swap(k, self.pivots[k]);
            let xk = x[k];
            if xk != 0.0 {
                for i in k + 1..=(k + a.kl).min(n - 1) {
                    x[i] -= a.data[a.slot(i, k).unwrap()] * xk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..=(k + reach).min(n - 1) {
                s -= a.data[a.slot(k, j).unwrap()] * x[j];
            }
            x[k] = s / a.data[a.slot(k, k).unwrap()];
        }
        x
    }
}

/// Counts of negative, zero and positive eigenvalues of the symmetric band
/// matrix `a - shift * I`, from an unpivoted `L D L^T` factorization
/// (Sylvester's law of inertia). Only the lower band of `a` is read.
pub fn symmetric_inertia(a: &BandMatrix, shift: f64) -> (usize, usize, usize) {
    let n = a.n;
    let b = a.kl;
    // work on the lower band: w[i][k] = L(i, i - k) scratch
    let mut w = vec![0.0; n * (b + 1)];
    for i in 0..n {
        for k in 0..=b.min(i) {
            w[i * (b + 1) + k] = a.get(i, i - k);
        }
        w[i * (b + 1)] -= shift;
    }
    let mut d = vec![0.0; n];
    let tiny = f64::MIN_POSITIVE.sqrt();
    for j in 0..n {
        let mut dj = w[j * (b + 1)];
        for k in 1..=b.min(j) {
            let l = w[j * (b + 1) + k];
            dj -= l * l * d[j - k];
        }
        if dj.abs() < tiny {
            dj = if dj < 0.0 { -tiny } else { tiny };
        }
        d[j] = dj;
        // L(i, j) for i in j+1..=j+b
        for i in j + 1..=(j + b).min(n - 1) {
            let mut s = w[i * (b + 1) + (i - j)];
            for k in 1..=b {
                // sum over m = j - k of L(i, m) L(j, m) d(m), m >= i - b
                if k > j || i - (j - k) > b {
                    continue;
                }
                let m = j - k;
                s -= w[i * (b + 1) + (i - m)] * w[j * (b + 1) + k] * d[m];
            }
            w[i * (b + 1) + (i - j)] = s / dj;
        }
    }
    let neg = d.iter().filter(|&&v| v < 0.0).count();
    let zero = d.iter().filter(|&&v| v == 0.0).count();
    (neg, zero, n - neg - zero)
}

/// Smallest eigenvalue of a symmetric band matrix by bisection on the
/// inertia count, refined to `rel_tol` of the bracket scale.
pub fn smallest_symmetric_eigenvalue(a: &BandMatrix, rel_tol: f64) -> f64 {
    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..a.n {
        let lo_j = i.saturating_sub(a.kl);
        let hi_j = (i + a.kl).min(a.n - 1);
        let r: f64 = (lo_j..=hi_j)
            .filter(|&j| j != i)
            .map(|j| a.get(i.max(j), i.min(j)).abs())
            .sum();
        let d = a.get(i, i);
        lo = lo.min(d - r);
        hi = hi.max(d + r);
    }
    let scale = hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE);
    for _ in 0..200 {
        if hi - lo <= rel_tol * scale {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let (neg, _, _) = symmetric_inertia(a, mid);
        if neg >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
