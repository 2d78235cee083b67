//! Explicit quantum strategies and the Born rule.
//!
//! Observed variable `i` is measured on tensor factor `i` (factor 0 most
//! significant). Its measurement context is the joint value of its
//! non-latent parents, indexed as in [`CausalScenario::parent_index`], so an
//! instrumental B is measured in a basis chosen by A's outcome and a Bell B
//! in a basis chosen by Y. For an event the Born probability is
//! `Ψᵀ (E¹ ⊗ … ⊗ Eᴺ) Ψ`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::classical::DeterministicStrategy;
use crate::scenario::{CausalScenario, Distribution, Event};
use crate::{Error, Result};

/// Tolerance for projector orthogonality and completeness.
pub const PROJECTOR_TOL: f64 = 1e-9;
/// Tolerance on the state norm.
pub const STATE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct QuantumStrategy {
    pub dims: Vec<usize>,
    pub state: DVector<f64>,
    /// `measurements[i][context][outcome]`, a `dims[i] × dims[i]` projector.
    pub measurements: Vec<Vec<Vec<DMatrix<f64>>>>,
}

impl QuantumStrategy {
    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Embeds a deterministic strategy: identity on the chosen outcome, zero
    /// elsewhere, with the state `e₀`.
    pub fn from_deterministic(
        st: &DeterministicStrategy,
        s: &CausalScenario,
        dims: &[usize],
    ) -> Result<Self> {
        st.validate(s)?;
        if dims.len() != s.observed().len() || dims.contains(&0) {
            return Err(Error::InvalidStrategy(format!(
                "dimensions {dims:?} do not fit {} observed variables",
                s.observed().len()
            )));
        }
        let total: usize = dims.iter().product();
        let measurements = st
            .responses
            .iter()
            .zip(s.observed())
            .zip(dims)
            .map(|((table, var), &d)| {
                table
                    .iter()
                    .map(|&chosen| {
                        (0..var.card)
                            .map(|o| {
                                if o == chosen {
                                    DMatrix::identity(d, d)
                                } else {
                                    DMatrix::zeros(d, d)
                                }
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            dims: dims.to_vec(),
            state: DVector::from_fn(total, |k, _| if k == 0 { 1.0 } else { 0.0 }),
            measurements,
        })
    }

    pub fn validate(&self, s: &CausalScenario) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidStrategy(msg));
        if self.dims.len() != s.observed().len() {
            return bad(format!(
                "{} subsystems for {} observed variables",
                self.dims.len(),
                s.observed().len()
            ));
        }
        if self.dims.contains(&0) {
            return bad("zero-dimensional subsystem".into());
        }
        if self.state.len() != self.total_dim() {
            return bad(format!(
                "state has length {}, expected {}",
                self.state.len(),
                self.total_dim()
            ));
        }
        if (self.state.norm() - 1.0).abs() > STATE_TOL {
            return bad(format!("state norm {} is not 1", self.state.norm()));
        }
        if self.measurements.len() != self.dims.len() {
            return bad("measurement list does not match subsystems".into());
        }
        for (i, ((contexts, var), &d)) in self
            .measurements
            .iter()
            .zip(s.observed())
            .zip(&self.dims)
            .enumerate()
        {
            if contexts.len() != s.parent_space(i) {
                return bad(format!(
                    "`{}` has {} contexts, expected {}",
                    var.name,
                    contexts.len(),
                    s.parent_space(i)
                ));
            }
            for (p, ops) in contexts.iter().enumerate() {
                if ops.len() != var.card {
                    return bad(format!(
                        "`{}` context {p} has {} outcomes, expected {}",
                        var.name,
                        ops.len(),
                        var.card
                    ));
                }
                let mut sum = DMatrix::<f64>::zeros(d, d);
                for (a, e) in ops.iter().enumerate() {
                    if e.shape() != (d, d) {
                        return bad(format!("`{}` operator has the wrong shape", var.name));
                    }
                    if (e - e.transpose()).norm() > PROJECTOR_TOL {
                        return bad(format!("`{}` operator {p}/{a} is not symmetric", var.name));
                    }
                    for f in &ops[a + 1..] {
                        if (e * f).norm() > PROJECTOR_TOL {
                            return bad(format!(
                                "`{}` context {p} has non-orthogonal projectors",
                                var.name
                            ));
                        }
                    }
                    sum += e;
                }
                if (sum - DMatrix::<f64>::identity(d, d)).norm() > PROJECTOR_TOL {
                    return bad(format!("`{}` context {p} is not complete", var.name));
                }
            }
        }
        Ok(())
    }

    /// Local operators `E^i` selected by an event.
    pub(crate) fn operators_for<'a>(
        &'a self,
        s: &CausalScenario,
        e: &Event,
    ) -> Vec<&'a DMatrix<f64>> {
        (0..self.dims.len())
            .map(|i| &self.measurements[i][s.parent_index(e, i)][e.outcomes[i]])
            .collect()
    }

    /// `Ψᵀ (⊗ E) Ψ` for one event, without validation.
    pub(crate) fn event_probability(&self, s: &CausalScenario, e: &Event) -> f64 {
        let ops = self.operators_for(s, e);
        let mut v = self.state.clone();
        for (i, op) in ops.iter().enumerate() {
            v = apply_local(op, i, &self.dims, &v);
        }
        self.state.dot(&v)
    }

    pub fn to_json(&self) -> StrategyJson {
        StrategyJson {
            dims: self.dims.clone(),
            state: self.state.iter().copied().collect(),
            measurements: self
                .measurements
                .iter()
                .map(|ctxs| {
                    ctxs.iter()
                        .map(|ops| ops.iter().map(row_major).collect())
                        .collect()
                })
                .collect(),
        }
    }

    pub fn from_json(json: &StrategyJson) -> Result<Self> {
        let measurements = json
            .measurements
            .iter()
            .zip(&json.dims)
            .map(|(ctxs, &d)| {
                ctxs.iter()
                    .map(|ops| {
                        ops.iter()
                            .map(|rows| {
                                if rows.len() != d * d {
                                    return Err(Error::InvalidStrategy(format!(
                                        "matrix with {} entries for dimension {d}",
                                        rows.len()
                                    )));
                                }
                                Ok(DMatrix::from_row_slice(d, d, rows))
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        if measurements.len() != json.dims.len() {
            return Err(Error::InvalidStrategy("measurement list does not match dims".into()));
        }
        Ok(Self {
            dims: json.dims.clone(),
            state: DVector::from_vec(json.state.clone()),
            measurements,
        })
    }
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    (0..m.nrows())
        .flat_map(|r| (0..m.ncols()).map(move |c| m[(r, c)]))
        .collect()
}

/// Strategy dump; matrices are flattened row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyJson {
    pub dims: Vec<usize>,
    pub state: Vec<f64>,
    pub measurements: Vec<Vec<Vec<Vec<f64>>>>,
}

/// `(I ⊗ … ⊗ op ⊗ … ⊗ I) v` with `op` on factor `party`.
pub(crate) fn apply_local(
    op: &DMatrix<f64>,
    party: usize,
    dims: &[usize],
    v: &DVector<f64>,
) -> DVector<f64> {
    let d = dims[party];
    let left: usize = dims[..party].iter().product();
    let right: usize = dims[party + 1..].iter().product();
    let mut out = DVector::zeros(v.len());
    for l in 0..left {
        for r in 0..right {
            let at = |a: usize| (l * d + a) * right + r;
            for a in 0..d {
                let mut acc = 0.0;
                for b in 0..d {
                    acc += op[(a, b)] * v[at(b)];
                }
                out[at(a)] = acc;
            }
        }
    }
    out
}

/// Reshapes `v` into a `dims[party] × (rest)` matrix, keeping the order of
/// the remaining factors.
pub(crate) fn unfold(v: &DVector<f64>, party: usize, dims: &[usize]) -> DMatrix<f64> {
    let d = dims[party];
    let left: usize = dims[..party].iter().product();
    let right: usize = dims[party + 1..].iter().product();
    DMatrix::from_fn(d, left * right, |a, col| {
        let (l, r) = (col / right, col % right);
        v[(l * d + a) * right + r]
    })
}

/// Born-rule distribution of a strategy.
pub fn born_probabilities(st: &QuantumStrategy, s: &CausalScenario) -> Result<Distribution> {
    st.validate(s)?;
    Ok(Distribution::from_fn(s, |e| st.event_probability(s, e)))
}
