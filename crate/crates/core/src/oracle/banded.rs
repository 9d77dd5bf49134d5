//! Symmetric banded matrices with an unpivoted `LDLᵀ` factorization.
//!
//! The factorization is only used for Sylvester inertia counts and for
//! shifted solves in inverse iteration, where the shifted Hamiltonians are
//! diagonally dominant away from a handful of eigenvalues.

use crate::error::{Error, Result};

/// Lower band storage: row `i` holds columns `i - bw ..= i` at positions `0 ..= bw`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSym {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedSym {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self { n, bw, data: vec![0.0; n * (bw + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    fn pos(&self, i: usize, j: usize) -> usize {
        i * (self.bw + 1) + (j + self.bw - i)
    }

    /// Sets `A_ij = A_ji = v`; `|i - j|` must not exceed the bandwidth.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= self.bw, "entry outside the band");
        let p = self.pos(i, j);
        self.data[p] = v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.pos(i, j)]
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let row = &self.data[i * (self.bw + 1)..(i + 1) * (self.bw + 1)];
            let off = lo + self.bw - i;
            let mut acc = row[self.bw] * x[i];
            for (k, j) in (lo..i).enumerate() {
                let a = row[off + k];
                acc += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += acc;
        }
        y
    }

    /// Gershgorin interval containing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut radius = vec![0.0; self.n];
        for i in 0..self.n {
            for j in i.saturating_sub(self.bw)..i {
                let a = self.get(i, j).abs();
                radius[i] += a;
                radius[j] += a;
            }
        }
        (0..self.n).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
            let d = self.get(i, i);
            (lo.min(d - radius[i]), hi.max(d + radius[i]))
        })
    }

    /// `LDLᵀ` of `A - shift I`.
    pub fn factor(&self, shift: f64) -> Result<Ldl> {
        let (n, bw) = (self.n, self.bw);
        let scale = self.data.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(shift.abs()).max(1e-300);
        let tiny = 1e-14 * scale;
        let mut l = vec![0.0; n * (bw + 1)];
        let mut d = vec![0.0; n];
        let mut w = vec![0.0; bw + 1];
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let base_i = i * (bw + 1) + (lo + bw - i);
            // w[k - lo] = L_ik d_k, built left to right
            for k in lo..i {
                let a = self.data[i * (bw + 1) + (k + bw - i)];
                let krow = k * (bw + 1);
                // columns lo..k of row k start at position lo + bw - k
                let kstart = krow + (lo + bw - k);
                let m = k - lo;
                let s: f64 = w[..m].iter().zip(&l[kstart..kstart + m]).map(|(x, y)| x * y).sum();
                let wk = a - s;
                w[k - lo] = wk;
                l[base_i + (k - lo)] = wk / d[k];
            }
            let m = i - lo;
            let s: f64 = w[..m].iter().zip(&l[base_i..base_i + m]).map(|(x, y)| x * y).sum();
            let mut di = self.data[i * (bw + 1) + bw] - shift - s;
            if !di.is_finite() {
                return Err(Error::NonFinite("banded LDLᵀ pivot".into()));
            }
            if di.abs() < tiny {
                di = tiny;
            }
            d[i] = di;
            l[i * (bw + 1) + bw] = 1.0;
        }
        Ok(Ldl { n, bw, l, d })
    }

    /// Number of eigenvalues strictly below `shift` (Sylvester's law of inertia).
    pub fn count_below(&self, shift: f64) -> Result<usize> {
        Ok(self.factor(shift)?.negative_pivots())
    }
}

/// Unit lower-triangular banded `L` and diagonal `D`.
#[derive(Debug, Clone)]
pub struct Ldl {
    n: usize,
    bw: usize,
    l: Vec<f64>,
    d: Vec<f64>,
}

impl Ldl {
    pub fn negative_pivots(&self) -> usize {
        self.d.iter().filter(|x| **x < 0.0).count()
    }

    /// Solves `(A - shift I) x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, bw) = (self.n, self.bw);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let start = i * (bw + 1) + (lo + bw - i);
            let s: f64 = self.l[start..start + (i - lo)].iter().zip(&x[lo..i]).map(|(a, b)| a * b).sum();
            x[i] -= s;
        }
        for (xi, di) in x.iter_mut().zip(&self.d) {
            *xi /= di;
        }
        for i in (0..n).rev() {
            let lo = i.saturating_sub(bw);
            let start = i * (bw + 1) + (lo + bw - i);
            let xi = x[i];
            for (k, j) in (lo..i).enumerate() {
                x[j] -= self.l[start + k] * xi;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn random_band(n: usize, bw: usize, seed: u64) -> BandedSym {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut a = BandedSym::zeros(n, bw);
        for i in 0..n {
            for j in i.saturating_sub(bw)..=i {
                a.set(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        a
    }

    fn dense(a: &BandedSym) -> DMatrix<f64> {
        DMatrix::from_fn(a.dim(), a.dim(), |i, j| a.get(i, j))
    }

    #[test]
    fn inertia_matches_dense_spectrum() {
        let a = random_band(40, 5, 3);
        let ev = dense(&a).symmetric_eigenvalues();
        for &s in &[-2.0, -0.3, 0.0, 0.7, 3.0] {
            let want = ev.iter().filter(|x| **x < s).count();
            assert_eq!(a.count_below(s).unwrap(), want, "shift {s}");
        }
    }

    #[test]
    fn solve_and_matvec() {
        let a = random_band(30, 4, 9);
        let x: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let y = a.matvec(&x);
        let dy = dense(&a) * nalgebra::DVector::from_vec(x.clone());
        assert!(y.iter().zip(dy.iter()).all(|(p, q)| (p - q).abs() < 1e-12));
        let f = a.factor(0.37).unwrap();
        let mut z = y.clone();
        for (zi, xi) in z.iter_mut().zip(&x) {
            *zi -= 0.37 * xi;
        }
        f.solve_in_place(&mut z);
        assert!(z.iter().zip(&x).all(|(p, q)| (p - q).abs() < 1e-8));
    }

    #[test]
    fn gershgorin_encloses_spectrum() {
        let a = random_band(25, 3, 1);
        let (lo, hi) = a.gershgorin();
        let ev = dense(&a).symmetric_eigenvalues();
        assert!(ev.iter().all(|x| *x >= lo && *x <= hi));
    }
}
