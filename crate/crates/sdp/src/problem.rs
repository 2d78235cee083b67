//! Problem container and SDPA export.

use std::fmt::Write as _;

use crate::matrix::SymMatrix;
use crate::SdpError;

/// Largest matrix dimension accepted by the dense solver.
pub const MAX_DIM: usize = 512;

/// A single equality constraint `⟨A, X⟩ = b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub matrix: SymMatrix,
    pub rhs: f64,
}

/// `maximize ⟨C, X⟩  s.t.  ⟨A_k, X⟩ = b_k,  X ⪰ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SdpProblem {
    dim: usize,
    objective: SymMatrix,
    constraints: Vec<Constraint>,
}

impl SdpProblem {
    pub fn new(objective: SymMatrix) -> Result<Self, SdpError> {
        let dim = objective.dim();
        if dim > MAX_DIM {
            return Err(SdpError::DimensionTooLarge { dim, max: MAX_DIM });
        }
        if !objective.is_finite() {
            return Err(SdpError::NonFinite);
        }
        Ok(Self {
            dim,
            objective,
            constraints: Vec::new(),
        })
    }

    pub fn add_constraint(&mut self, matrix: SymMatrix, rhs: f64) -> Result<(), SdpError> {
        if matrix.dim() != self.dim {
            return Err(SdpError::DimensionMismatch {
                expected: self.dim,
                found: matrix.dim(),
            });
        }
        if !matrix.is_finite() || !rhs.is_finite() {
            return Err(SdpError::NonFinite);
        }
        self.constraints.push(Constraint { matrix, rhs });
        Ok(())
    }

    pub fn with_constraint(mut self, matrix: SymMatrix, rhs: f64) -> Result<Self, SdpError> {
        self.add_constraint(matrix, rhs)?;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn objective(&self) -> &SymMatrix {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Sparse SDPA text.
    ///
    /// SDPA minimizes `cᵀy` subject to `Σ y_k F_k − F_0 ⪰ 0`, which is exactly the
    /// dual of this problem with `c = b`, `F_k = A_k` and `F_0 = C`.
    pub fn to_sdpa_sparse(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "\"maximize <C,X> s.t. <A_k,X> = b_k, X psd");
        let _ = writeln!(out, "{}", self.constraints.len());
        let _ = writeln!(out, "1");
        let _ = writeln!(out, "{}", self.dim);
        let rhs: Vec<String> = self
            .constraints
            .iter()
            .map(|c| format!("{:e}", c.rhs))
            .collect();
        let _ = writeln!(out, "{}", rhs.join(" "));
        let mut emit = |k: usize, m: &SymMatrix| {
            for (i, j, v) in m.upper_nonzeros() {
                let _ = writeln!(out, "{} 1 {} {} {:e}", k, i + 1, j + 1, v);
            }
        };
        emit(0, &self.objective);
        for (k, c) in self.constraints.iter().enumerate() {
            emit(k + 1, &c.matrix);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_dimension() {
        let mut p = SdpProblem::new(SymMatrix::identity(3)).unwrap();
        let err = p.add_constraint(SymMatrix::identity(2), 1.0).unwrap_err();
        assert!(matches!(err, SdpError::DimensionMismatch { expected: 3, found: 2 }));
    }

    #[test]
    fn rejects_oversized() {
        assert!(matches!(
            SdpProblem::new(SymMatrix::zeros(MAX_DIM + 1)),
            Err(SdpError::DimensionTooLarge { .. })
        ));
    }

    #[test]
    fn sdpa_layout() {
        let p = SdpProblem::new(SymMatrix::ones(2))
            .unwrap()
            .with_constraint(SymMatrix::identity(2), 1.0)
            .unwrap();
        let text = p.to_sdpa_sparse();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "1");
        assert_eq!(lines[2], "1");
        assert_eq!(lines[3], "2");
        assert_eq!(lines[4], "1e0");
        // 3 objective entries + 2 diagonal constraint entries
        assert_eq!(lines.len(), 5 + 3 + 2);
        assert!(lines.contains(&"1 1 2 2 1e0"));
    }
}
