//! Small symmetric matrices (dimension 1 to 3) and their spectra.

use crate::error::{invalid, Result};

pub const MAX_DIM: usize = 3;

/// A symmetric `dim × dim` matrix with `dim ∈ {1, 2, 3}`.
///
/// Only the upper triangle is ever read when building one, so the stored
/// entries are symmetric bit for bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    entries: [[f64; MAX_DIM]; MAX_DIM],
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return invalid(format!("matrix dimension must be 1, 2 or 3 (got {dim})"));
        }
        Ok(SymMatrix {
            dim,
            entries: [[0.0; MAX_DIM]; MAX_DIM],
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            m.entries[i][i] = 1.0;
        }
        Ok(m)
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        let mut m = Self::zeros(values.len())?;
        for (i, &v) in values.iter().enumerate() {
            m.entries[i][i] = v;
        }
        Ok(m)
    }

    /// Builds a matrix from full rows, rejecting anything that is not
    /// exactly symmetric.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        let mut m = Self::zeros(dim)?;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return invalid(format!("row {i} has length {} (expected {dim})", row.len()));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return invalid(format!("entry ({i},{j}) is not finite"));
                }
                m.entries[i][j] = v;
            }
        }
        for i in 0..dim {
            for j in 0..i {
                if m.entries[i][j] != m.entries[j][i] {
                    return invalid(format!("matrix is not symmetric at ({i},{j})"));
                }
            }
        }
        Ok(m)
    }

    /// Builds a matrix from the upper triangle, mirrored below the diagonal.
    pub fn from_upper(dim: usize, mut upper: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            for j in i..dim {
                let v = upper(i, j);
                m.entries[i][j] = v;
                m.entries[j][i] = v;
            }
        }
        Ok(m)
    }

    /// Rank-one matrix `v ⊗ v`.
    pub fn outer(v: &[f64]) -> Result<Self> {
        Self::from_upper(v.len(), |i, j| v[i] * v[j])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i][j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.entries[i][i]).sum()
    }

    pub fn frobenius(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += self.entries[i][j] * self.entries[i][j];
            }
        }
        s.sqrt()
    }

    /// `Tr(self · other)`, i.e. the Frobenius inner product.
    pub fn dot(&self, other: &SymMatrix) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += self.entries[i][j] * other.entries[i][j];
            }
        }
        s
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        self.map(|v| v * s)
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.entries[i][j] += other.entries[i][j];
            }
        }
        out
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        self.add(&other.scale(-1.0))
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let mut out = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.entries[i][j] = f(self.entries[i][j]);
            }
        }
        out
    }

    /// `Qᵀ X Q` for a square `Q` given row-major.
    pub fn congruence(&self, q: &[[f64; MAX_DIM]; MAX_DIM]) -> SymMatrix {
        let n = self.dim;
        let mut xq = [[0.0; MAX_DIM]; MAX_DIM];
        for i in 0..n {
            for j in 0..n {
                xq[i][j] = (0..n).map(|k| self.entries[i][k] * q[k][j]).sum();
            }
        }
        let mut out = *self;
        for i in 0..n {
            for j in i..n {
                let v: f64 = (0..n).map(|k| q[k][i] * xq[k][j]).sum();
                out.entries[i][j] = v;
                out.entries[j][i] = v;
            }
        }
        out
    }

    /// Clips the spectrum into `[lo, hi]`, keeping eigenvectors.
    pub fn clip_spectrum(&self, lo: f64, hi: f64) -> SymMatrix {
        let (values, vectors) = jacobi(self);
        let mut out = SymMatrix {
            dim: self.dim,
            entries: [[0.0; MAX_DIM]; MAX_DIM],
        };
        for k in 0..self.dim {
            let e = values[k].clamp(lo, hi);
            for i in 0..self.dim {
                for j in 0..self.dim {
                    out.entries[i][j] += e * vectors[i][k] * vectors[j][k];
                }
            }
        }
        // restore exact symmetry after accumulation
        for i in 0..self.dim {
            for j in 0..i {
                out.entries[i][j] = out.entries[j][i];
            }
        }
        out
    }
}

/// Eigenvalues of a symmetric matrix, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
}

impl Spectrum {
    pub fn positive_sum(&self) -> f64 {
        self.eigenvalues.iter().filter(|e| **e > 0.0).sum()
    }

    pub fn negative_sum(&self) -> f64 {
        self.eigenvalues.iter().filter(|e| **e < 0.0).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, e| m.max(e.abs()))
    }
}

/// Sorted eigenvalues via cyclic Jacobi rotations.
pub fn eigenvalues(x: &SymMatrix) -> Spectrum {
    let (mut values, _) = jacobi(x);
    let mut eigenvalues: Vec<f64> = values[..x.dim].to_vec();
    eigenvalues.sort_by(f64::total_cmp);
    values[..x.dim].copy_from_slice(&eigenvalues);
    Spectrum { eigenvalues }
}

/// Off-diagonal Frobenius mass.
fn off_diagonal(a: &[[f64; MAX_DIM]; MAX_DIM], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i][j] * a[i][j];
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi diagonalisation. Returns unsorted eigenvalues and the
/// eigenvectors as columns.
pub(crate) fn jacobi(x: &SymMatrix) -> ([f64; MAX_DIM], [[f64; MAX_DIM]; MAX_DIM]) {
    let n = x.dim;
    let mut a = x.entries;
    let mut v = [[0.0; MAX_DIM]; MAX_DIM];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let threshold = 1e-14 * x.frobenius();
    for _sweep in 0..64 {
        if off_diagonal(&a, n) <= threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut().take(n) {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut values = [0.0; MAX_DIM];
    for i in 0..n {
        values[i] = a[i][i];
    }
    (values, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Real roots of the characteristic polynomial of a symmetric 3×3
    /// matrix via the trigonometric form of Cardano's formula.
    fn char_poly_roots(m: &SymMatrix) -> Vec<f64> {
        let a = |i: usize, j: usize| m.get(i, j);
        let c2 = -(a(0, 0) + a(1, 1) + a(2, 2));
        let c1 = a(0, 0) * a(1, 1) + a(0, 0) * a(2, 2) + a(1, 1) * a(2, 2)
            - a(0, 1) * a(0, 1)
            - a(0, 2) * a(0, 2)
            - a(1, 2) * a(1, 2);
        let det = a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(1, 2))
            - a(0, 1) * (a(0, 1) * a(2, 2) - a(1, 2) * a(0, 2))
            + a(0, 2) * (a(0, 1) * a(1, 2) - a(1, 1) * a(0, 2));
        let c0 = -det;
        // depressed cubic t^3 + p t + q with x = t - c2/3
        let p = c1 - c2 * c2 / 3.0;
        let q = 2.0 * c2.powi(3) / 27.0 - c2 * c1 / 3.0 + c0;
        let r = (-p / 3.0).max(0.0).sqrt();
        let arg = if r == 0.0 {
            0.0
        } else {
            (-q / (2.0 * r.powi(3))).clamp(-1.0, 1.0)
        };
        let phi = arg.acos() / 3.0;
        let mut roots: Vec<f64> = (0..3)
            .map(|k| 2.0 * r * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - c2 / 3.0)
            .collect();
        roots.sort_by(f64::total_cmp);
        roots
    }

    fn random_sym(rng: &mut ChaCha8Rng, dim: usize) -> SymMatrix {
        SymMatrix::from_upper(dim, |_, _| rng.gen_range(-3.0..3.0)).unwrap()
    }

    #[test]
    fn diagonal_and_swap_examples() {
        let s = eigenvalues(&SymMatrix::diag(&[3.0, 1.0]).unwrap());
        assert_eq!(s.eigenvalues, vec![1.0, 3.0]);
        let swap = SymMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let s = eigenvalues(&swap);
        assert!((s.eigenvalues[0] + 1.0).abs() < 1e-15);
        assert!((s.eigenvalues[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_3x3_matches_characteristic_polynomial() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let m = random_sym(&mut rng, 3);
            let s = eigenvalues(&m);
            let roots = char_poly_roots(&m);
            for (e, r) in s.eigenvalues.iter().zip(&roots) {
                assert!((e - r).abs() < 1e-9 * (1.0 + m.frobenius()), "{e} vs {r}");
            }
            let rel = (s.eigenvalues.iter().sum::<f64>() - m.trace()).abs() / m.frobenius().max(1e-300);
            assert!(rel < 1e-12);
        }
    }

    #[test]
    fn jacobi_residual_is_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for dim in 1..=3 {
            for _ in 0..100 {
                let m = random_sym(&mut rng, dim);
                let (values, vecs) = jacobi(&m);
                let d = m.congruence(&vecs);
                let mut off = 0.0f64;
                for i in 0..dim {
                    assert!((d.get(i, i) - values[i]).abs() < 1e-12 * m.frobenius());
                    for j in 0..dim {
                        if i != j {
                            off = off.max(d.get(i, j).abs());
                        }
                    }
                }
                assert!(off < 1e-13 * m.frobenius().max(1.0));
            }
        }
    }

    #[test]
    fn rejects_asymmetric_rows() {
        assert!(SymMatrix::from_rows(&[&[1.0, 2.0], &[2.0000001, 1.0]]).is_err());
        assert!(SymMatrix::zeros(4).is_err());
    }

    #[test]
    fn clip_spectrum_bounds_eigenvalues() {
        let m = SymMatrix::from_rows(&[&[5.0, 1.0], &[1.0, -2.0]]).unwrap();
        let c = m.clip_spectrum(1.0, 2.0);
        let s = eigenvalues(&c);
        assert!(s.eigenvalues[0] >= 1.0 - 1e-12 && s.eigenvalues[1] <= 2.0 + 1e-12);
        assert_eq!(c.get(0, 1), c.get(1, 0));
    }
}
