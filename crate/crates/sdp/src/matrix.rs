//! Packed symmetric matrices.

use nalgebra::DMatrix;

use crate::SdpError;

/// Tolerance used when accepting a dense matrix as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// A real symmetric matrix stored as its packed upper triangle.
///
/// Entry `(i, j)` with `i <= j` lives at `j * (j + 1) / 2 + i`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

#[inline]
fn packed_index(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    j * (j + 1) / 2 + i
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * (n + 1) / 2],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// All-ones matrix.
    pub fn ones(n: usize) -> Self {
        Self {
            n,
            data: vec![1.0; n * (n + 1) / 2],
        }
    }

    /// Symmetric unit matrix `e_i e_jᵀ + e_j e_iᵀ` (or `e_i e_iᵀ` when `i == j`).
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n);
        m.set(i, j, 1.0);
        m
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Result<Self, SdpError> {
        if m.nrows() != m.ncols() {
            return Err(SdpError::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let n = m.nrows();
        let mut out = Self::zeros(n);
        for j in 0..n {
            for i in 0..=j {
                let (a, b) = (m[(i, j)], m[(j, i)]);
                if (a - b).abs() > SYMMETRY_TOL {
                    return Err(SdpError::NotSymmetric { row: i, col: j });
                }
                out.set(i, j, 0.5 * (a + b));
            }
        }
        Ok(out)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[packed_index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[packed_index(i, j)] = v;
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Nonzero entries of the upper triangle as `(i, j, value)` with `i <= j`.
    pub fn upper_nonzeros(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |j| {
            (0..=j).filter_map(move |i| {
                let v = self.get(i, j);
                (v != 0.0).then_some((i, j, v))
            })
        })
    }

    /// Frobenius inner product with a dense matrix assumed symmetric.
    pub fn dot_dense(&self, other: &DMatrix<f64>) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.n {
            for i in 0..j {
                acc += 2.0 * self.get(i, j) * other[(i, j)];
            }
            acc += self.get(j, j) * other[(j, j)];
        }
        acc
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.n {
            for i in 0..j {
                acc += 2.0 * self.get(i, j).powi(2);
            }
            acc += self.get(j, j).powi(2);
        }
        acc.sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }
}

/// Sparse expansion of a symmetric matrix: every stored entry in both triangles.
#[derive(Clone, Debug)]
pub(crate) struct SparseSym {
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseSym {
    pub fn from_packed(m: &SymMatrix) -> Self {
        let mut entries = Vec::new();
        for (i, j, v) in m.upper_nonzeros() {
            entries.push((i, j, v));
            if i != j {
                entries.push((j, i, v));
            }
        }
        Self { entries }
    }

    /// `⟨A, M⟩` for dense `M`.
    pub fn dot(&self, m: &DMatrix<f64>) -> f64 {
        self.entries.iter().map(|&(i, j, v)| v * m[(i, j)]).sum()
    }

    /// `acc += scale · A`.
    pub fn add_to(&self, acc: &mut DMatrix<f64>, scale: f64) {
        for &(i, j, v) in &self.entries {
            acc[(i, j)] += scale * v;
        }
    }

    /// `W A W` for symmetric dense `W`.
    pub fn congruence(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        let n = w.nrows();
        if self.entries.len() >= n {
            let mut a = DMatrix::zeros(n, n);
            self.add_to(&mut a, 1.0);
            return w * a * w;
        }
        let mut out = DMatrix::zeros(n, n);
        for &(a, b, v) in &self.entries {
            // v · W[:, a] W[b, :]
            for c in 0..n {
                let wb = v * w[(b, c)];
                if wb == 0.0 {
                    continue;
                }
                for r in 0..n {
                    out[(r, c)] += w[(r, a)] * wb;
                }
            }
        }
        out
    }
}
