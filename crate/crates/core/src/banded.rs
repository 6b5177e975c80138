//! Banded LU factorisation with partial pivoting, used for the Newton
//! steps of the grid solvers.

use crate::error::{Error, Result};

/// Square banded matrix with `kl` sub- and `ku` super-diagonals.
///
/// Rows are stored with `kl` extra super-diagonals of headroom for the
/// fill-in produced by row pivoting.
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
        BandedMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.ku + self.kl {
            return 0.0;
        }
        self.data[self.slot(i, j)]
    }

    /// Adds `v` to entry `(i, j)`. Panics if `(i, j)` is outside the band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            j + self.kl >= i && j <= i + self.ku,
            "entry ({i},{j}) outside band kl={} ku={}",
            self.kl,
            self.ku
        );
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku + self.kl + 1).min(self.n);
                (lo..hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Solves `A x = b` in place, consuming the matrix.
    pub fn solve(mut self, b: &mut [f64]) -> Result<()> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let reach = self.kl + self.ku;
        for k in 0..n {
            let last = (k + self.kl).min(n - 1);
            let mut piv = k;
            let mut best = self.data[self.slot(k, k)].abs();
            for i in (k + 1)..=last {
                let v = self.data[self.slot(i, k)].abs();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Construction(format!("singular banded matrix at column {k}")));
            }
            let jmax = (k + reach).min(n - 1);
            if piv != k {
                for j in k..=jmax {
                    let a = self.slot(k, j);
                    let c = self.slot(piv, j);
                    self.data.swap(a, c);
                }
                b.swap(k, piv);
            }
            let pivot = self.data[self.slot(k, k)];
            for i in (k + 1)..=last {
                let s = self.slot(i, k);
                let l = self.data[s] / pivot;
                if l == 0.0 {
                    continue;
                }
                self.data[s] = 0.0;
                for j in (k + 1)..=jmax {
                    let src = self.data[self.slot(k, j)];
                    let dst = self.slot(i, j);
                    self.data[dst] -= l * src;
                }
                b[i] -= l * b[k];
            }
        }
        for k in (0..n).rev() {
            let jmax = (k + reach).min(n - 1);
            let mut s = b[k];
            for j in (k + 1)..=jmax {
                s -= self.data[self.slot(k, j)] * b[j];
            }
            b[k] = s / self.data[self.slot(k, k)];
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tridiagonal_poisson() {
        // -u'' = 2 on (0,1) → u = x(1-x), exact for the 3-point stencil
        let n = 9;
        let h = 1.0 / (n + 1) as f64;
        let mut a = BandedMatrix::zeros(n, 1, 1);
        for i in 0..n {
            a.add(i, i, 2.0 / (h * h));
            if i > 0 {
                a.add(i, i - 1, -1.0 / (h * h));
            }
            if i + 1 < n {
                a.add(i, i + 1, -1.0 / (h * h));
            }
        }
        let mut b = vec![2.0; n];
        a.solve(&mut b).unwrap();
        for (i, v) in b.iter().enumerate() {
            let x = (i + 1) as f64 * h;
            assert!((v - x * (1.0 - x)).abs() < 1e-13);
        }
    }

    #[test]
    fn random_band_needs_pivoting() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for &(n, kl, ku) in &[(12, 2, 1), (30, 5, 5), (7, 1, 3)] {
            let mut a = BandedMatrix::zeros(n, kl, ku);
            for i in 0..n {
                for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                    // small diagonal forces row swaps
                    let v = if i == j { rng.gen_range(-0.01..0.01) } else { rng.gen_range(-1.0..1.0) };
                    a.add(i, j, v);
                }
            }
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut b = a.mul_vec(&x);
            a.clone().solve(&mut b).unwrap();
            for (u, v) in b.iter().zip(&x) {
                assert!((u - v).abs() < 1e-8, "{u} vs {v}");
            }
        }
    }

    #[test]
    fn singular_is_reported() {
        let a = BandedMatrix::zeros(3, 1, 1);
        assert!(a.solve(&mut [1.0, 2.0, 3.0]).is_err());
    }
}
