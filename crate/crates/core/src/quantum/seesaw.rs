//! See-saw lower bounds on the quantum value of an inequality.
//!
//! Blocks are updated one at a time with all others held fixed:
//!
//! * a measurement context, via `Σ_o tr(E_o K_o)` where `K_o` is the reduced
//!   operator collecting every term that uses outcome `o` of that context.
//!   Two-outcome contexts are solved exactly (`E_0` projects onto the
//!   positive part of `K_0 − K_1`); with more outcomes every pair of
//!   outcomes is re-split exactly inside the range of `E_o + E_o'`;
//! * the state, as the top eigenvector of the full inequality operator.
//!
//! No update can lower the objective.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::strategy::{apply_local, born_probabilities, unfold, QuantumStrategy};
use crate::catalog::LinearInequality;
use crate::classical::{alpha, classical_max_oracle, DeterministicStrategy};
use crate::scenario::CausalScenario;
use crate::{Error, Result};

/// Largest local dimension accepted.
pub const MAX_LOCAL_DIM: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct SeesawOptions {
    /// Local dimension per observed variable.
    pub dims: Vec<usize>,
    pub restarts: usize,
    pub seed: u64,
    pub max_sweeps: usize,
    /// Stop once a sweep improves the value by less than this, relatively.
    pub rel_tol: f64,
}

impl SeesawOptions {
    /// Two qubits, 50 restarts, at most 500 sweeps.
    pub fn new(seed: u64) -> Self {
        Self {
            dims: vec![2, 2],
            restarts: 50,
            seed,
            max_sweeps: 500,
            rel_tol: 1e-10,
        }
    }

    pub fn with_dims(mut self, dims: Vec<usize>) -> Self {
        self.dims = dims;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RestartTrace {
    pub index: usize,
    pub seed: u64,
    /// Whether this restart started from an optimal deterministic strategy.
    pub deterministic: bool,
    pub value: f64,
    pub sweeps: usize,
    /// Objective before the first sweep and after each sweep.
    pub trace: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeesawResult {
    /// Born-rule value of `strategy`.
    pub value: f64,
    pub strategy: QuantumStrategy,
    pub best_restart: usize,
    pub restarts: Vec<RestartTrace>,
}

/// Per-restart seeds: the splitmix64 stream started at `seed`.
pub fn restart_seeds(seed: u64, count: usize) -> Vec<u64> {
    let mut state = seed;
    (0..count)
        .map(|_| {
            state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^ (z >> 31)
        })
        .collect()
}

pub fn seesaw_lower_bound(
    ineq: &LinearInequality,
    s: &CausalScenario,
    opts: &SeesawOptions,
) -> Result<SeesawResult> {
    if opts.dims.len() != s.observed().len() {
        return Err(Error::OutOfRange(format!(
            "{} local dimensions given for {} observed variables",
            opts.dims.len(),
            s.observed().len()
        )));
    }
    if let Some(&d) = opts.dims.iter().find(|&&d| d == 0 || d > MAX_LOCAL_DIM) {
        return Err(Error::TooLarge(format!(
            "local dimension {d} outside 1..={MAX_LOCAL_DIM}"
        )));
    }
    if opts.restarts == 0 {
        return Err(Error::OutOfRange("at least one restart is required".into()));
    }
    let ineq = if ineq.scenario() == s {
        ineq.clone()
    } else {
        ineq.embed(s)?
    };
    let problem = Problem::new(&ineq, s, &opts.dims);
    let seeds = restart_seeds(opts.seed, opts.restarts);
    let start = deterministic_start(&ineq, s);

    let runs: Vec<(QuantumStrategy, RestartTrace)> = seeds
        .par_iter()
        .enumerate()
        .map(|(index, &seed)| {
            let (initial, deterministic) = match (&start, index) {
                (Some(det), 0) => (
                    QuantumStrategy::from_deterministic(det, s, &opts.dims)
                        .expect("validated strategy"),
                    true,
                ),
                _ => (random_strategy(s, &opts.dims, seed), false),
            };
            let (st, trace) = problem.optimize(initial, opts);
            let value = *trace.last().expect("non-empty trace");
            (
                st,
                RestartTrace {
                    index,
                    seed,
                    deterministic,
                    value,
                    sweeps: trace.len() - 1,
                    trace,
                },
            )
        })
        .collect();

    let mut best = 0;
    for (k, (_, t)) in runs.iter().enumerate() {
        if t.value > runs[best].1.value {
            best = k;
        }
    }
    let (strategy, _) = runs[best].clone();
    let value = ineq.evaluate(&born_probabilities(&strategy, s)?)?;
    Ok(SeesawResult {
        value,
        strategy,
        best_restart: best,
        restarts: runs.into_iter().map(|(_, t)| t).collect(),
    })
}

fn deterministic_start(ineq: &LinearInequality, s: &CausalScenario) -> Option<DeterministicStrategy> {
    if let Ok(g) = ineq.support_graph() {
        let events: Vec<_> = alpha(&g)
            .vertices
            .iter()
            .map(|&v| g.events()[v].clone())
            .collect();
        if let Ok(st) = DeterministicStrategy::from_events(s, &events) {
            return Some(st);
        }
    }
    classical_max_oracle(ineq, s, 1_000_000).ok().map(|r| r.strategy)
}

fn random_strategy(s: &CausalScenario, dims: &[usize], seed: u64) -> QuantumStrategy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let measurements = s
        .observed()
        .iter()
        .enumerate()
        .map(|(i, var)| {
            let d = dims[i];
            (0..s.parent_space(i))
                .map(|_| {
                    let g = DMatrix::<f64>::from_fn(d, d, |_, _| rng.sample(StandardNormal));
                    let q = g.qr().q();
                    let mut ops = vec![DMatrix::<f64>::zeros(d, d); var.card];
                    for c in 0..d {
                        let o = if c < var.card { c } else { rng.random_range(0..var.card) };
                        let col = q.column(c);
                        ops[o] += &col * col.transpose();
                    }
                    ops
                })
                .collect()
        })
        .collect();
    let total: usize = dims.iter().product();
    let state = DVector::<f64>::from_fn(total, |_, _| rng.sample(StandardNormal)).normalize();
    QuantumStrategy {
        dims: dims.to_vec(),
        state,
        measurements,
    }
}

struct Term {
    weight: f64,
    contexts: Vec<usize>,
    outcomes: Vec<usize>,
}

struct Problem {
    dims: Vec<usize>,
    terms: Vec<Term>,
}

impl Problem {
    fn new(ineq: &LinearInequality, s: &CausalScenario, dims: &[usize]) -> Self {
        let terms = ineq
            .terms()
            .iter()
            .filter(|(_, w)| *w != 0.0)
            .map(|(e, w)| Term {
                weight: *w,
                contexts: (0..dims.len()).map(|i| s.parent_index(e, i)).collect(),
                outcomes: e.outcomes.clone(),
            })
            .collect();
        Self {
            dims: dims.to_vec(),
            terms,
        }
    }

    fn value(&self, st: &QuantumStrategy) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let mut v = st.state.clone();
                for i in 0..self.dims.len() {
                    v = apply_local(&st.measurements[i][t.contexts[i]][t.outcomes[i]], i, &self.dims, &v);
                }
                t.weight * st.state.dot(&v)
            })
            .sum()
    }

    fn optimize(&self, mut st: QuantumStrategy, opts: &SeesawOptions) -> (QuantumStrategy, Vec<f64>) {
        let mut trace = vec![self.value(&st)];
        for _ in 0..opts.max_sweeps {
            self.sweep(&mut st);
            let prev = *trace.last().expect("non-empty");
            let now = self.value(&st);
            trace.push(now);
            if now - prev < opts.rel_tol * prev.abs().max(1.0) {
                break;
            }
        }
        (st, trace)
    }

    fn sweep(&self, st: &mut QuantumStrategy) {
        self.update_state(st);
        for i in 0..self.dims.len() {
            for p in 0..st.measurements[i].len() {
                self.update_context(st, i, p);
            }
        }
    }

    fn update_state(&self, st: &mut QuantumStrategy) {
        let total = st.total_dim();
        let mut op = DMatrix::<f64>::zeros(total, total);
        for t in &self.terms {
            let mut k = DMatrix::<f64>::from_element(1, 1, t.weight);
            for i in 0..self.dims.len() {
                k = k.kronecker(&st.measurements[i][t.contexts[i]][t.outcomes[i]]);
            }
            op += k;
        }
        let op = (&op + op.transpose()) * 0.5;
        let eig = SymmetricEigen::new(op);
        let mut top = 0;
        for k in 1..total {
            if eig.eigenvalues[k] > eig.eigenvalues[top] {
                top = k;
            }
        }
        let mut v: DVector<f64> = eig.eigenvectors.column(top).into_owned();
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                v = -v;
            }
        }
        st.state = v.normalize();
    }

    /// Reduced operators `K_o` for context `p` of party `i`.
    fn reduced(&self, st: &QuantumStrategy, i: usize, p: usize) -> Vec<DMatrix<f64>> {
        let d = self.dims[i];
        let mut ks = vec![DMatrix::<f64>::zeros(d, d); st.measurements[i][p].len()];
        let psi = unfold(&st.state, i, &self.dims);
        for t in self.terms.iter().filter(|t| t.contexts[i] == p) {
            let mut v = st.state.clone();
            for j in (0..self.dims.len()).filter(|&j| j != i) {
                v = apply_local(&st.measurements[j][t.contexts[j]][t.outcomes[j]], j, &self.dims, &v);
            }
            ks[t.outcomes[i]] += (&psi * unfold(&v, i, &self.dims).transpose()) * t.weight;
        }
        ks.iter().map(|k| (k + k.transpose()) * 0.5).collect()
    }

    fn update_context(&self, st: &mut QuantumStrategy, i: usize, p: usize) {
        let ks = self.reduced(st, i, p);
        let m = ks.len();
        for o1 in 0..m {
            for o2 in o1 + 1..m {
                let ops = &mut st.measurements[i][p];
                let pair = &ops[o1] + &ops[o2];
                let range = eigenspace(&pair, |l| l > 0.5);
                if range.ncols() == 0 {
                    continue;
                }
                let diff = range.transpose() * (&ks[o1] - &ks[o2]) * &range;
                let pos = eigenspace(&diff, |l| l > 1e-13);
                let basis = &range * pos;
                let e1 = &basis * basis.transpose();
                let e2 = &range * range.transpose() - &e1;
                ops[o1] = e1;
                ops[o2] = e2;
            }
        }
    }
}

/// Orthonormal basis (as columns) of the eigenvectors whose eigenvalue passes `keep`.
fn eigenspace(m: &DMatrix<f64>, keep: impl Fn(f64) -> bool) -> DMatrix<f64> {
    let n = m.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let eig = SymmetricEigen::new((m + m.transpose()) * 0.5);
    let cols: Vec<usize> = (0..n).filter(|&k| keep(eig.eigenvalues[k])).collect();
    DMatrix::from_fn(n, cols.len(), |r, c| eig.eigenvectors[(r, cols[c])])
}
