//! Primal-dual path-following interior-point method.
//!
//! Each iteration scales the pair `(X, Z)` with the Nesterov–Todd point
//! `W` (the unique symmetric `W ≻ 0` with `W Z W = X`), forms the Schur
//! complement `M_kl = tr(A_k W A_l W)` and takes a Mehrotra
//! predictor-corrector step. In the scaled space both iterates become the
//! same diagonal matrix `diag(s)`, so the symmetrized complementarity
//! equation is solved entrywise.
//!
//! When the problem admits an obvious strictly feasible start (a multiple of
//! the identity for the primal, `Σ c_k A_k = I` for the dual) the iteration
//! starts there and every iterate stays feasible up to rounding; otherwise an
//! infeasible start `ξI, ηI` is used.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen, SVD};

use crate::matrix::SparseSym;
use crate::problem::SdpProblem;
use crate::SdpError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    /// Relative tolerance on primal infeasibility, dual infeasibility and gap.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Optimal,
    /// Iteration cap (or a numerical stall) reached; the best iterate is returned.
    MaxIterations,
    /// Iterates diverged, which is taken as a sign of primal or dual infeasibility.
    InfeasibleDetected,
}

/// Relative residuals of an iterate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Residuals {
    /// `‖b − A(X)‖ / (1 + ‖b‖)`
    pub primal: f64,
    /// `‖C − Aᵀy + Z‖_F / (1 + ‖C‖_F)`
    pub dual: f64,
    /// `|bᵀy − ⟨C,X⟩| / (1 + |⟨C,X⟩| + |bᵀy|)`
    pub gap: f64,
}

impl Residuals {
    fn worst(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterateLog {
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub residuals: Residuals,
    pub mu: f64,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: Status,
    pub x: DMatrix<f64>,
    pub y: Vec<f64>,
    pub z: DMatrix<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub residuals: Residuals,
    pub iterations: usize,
    /// One entry per visited iterate, the returned one last unless a better
    /// earlier iterate was selected after a stall.
    pub history: Vec<IterateLog>,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    /// Smallest eigenvalue of the primal matrix.
    pub fn min_primal_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.x)
    }
}

struct Iterate {
    x: DMatrix<f64>,
    y: DVector<f64>,
    z: DMatrix<f64>,
}

struct Data {
    n: usize,
    a: Vec<SparseSym>,
    b: DVector<f64>,
    c: DMatrix<f64>,
    norm_b: f64,
    norm_c: f64,
}

impl Data {
    fn apply(&self, x: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(self.a.len(), self.a.iter().map(|a| a.dot(x)))
    }

    fn adjoint(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, self.n);
        for (a, &yk) in self.a.iter().zip(y.iter()) {
            a.add_to(&mut out, yk);
        }
        out
    }
}

pub fn solve(problem: &SdpProblem, opts: &SolveOptions) -> Result<SdpSolution, SdpError> {
    let n = problem.dim();
    if n == 0 {
        return Err(SdpError::DimensionMismatch {
            expected: 1,
            found: 0,
        });
    }
    let data = Data {
        n,
        a: problem
            .constraints()
            .iter()
            .map(|c| SparseSym::from_packed(&c.matrix))
            .collect(),
        b: DVector::from_iterator(
            problem.constraints().len(),
            problem.constraints().iter().map(|c| c.rhs),
        ),
        c: problem.objective().to_dense(),
        norm_b: 0.0,
        norm_c: 0.0,
    };
    let data = Data {
        norm_b: data.b.norm(),
        norm_c: data.c.norm(),
        ..data
    };
    let m = data.a.len();

    let mut it = initial_point(problem, &data);
    let mut history = Vec::new();
    let mut best: Option<(f64, Iterate, IterateLog)> = None;
    let mut status = Status::MaxIterations;
    let mut iterations = 0;

    for iter in 0..=opts.max_iter {
        iterations = iter;
        let rp = &data.b - data.apply(&it.x);
        let rd = &data.c - data.adjoint(&it.y) + &it.z;
        let pobj = frob_dot(&data.c, &it.x);
        let dobj = data.b.dot(&it.y);
        let residuals = Residuals {
            primal: rp.norm() / (1.0 + data.norm_b),
            dual: rd.norm() / (1.0 + data.norm_c),
            gap: (dobj - pobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
        };
        let mu = frob_dot(&it.x, &it.z) / n as f64;
        let log = IterateLog {
            primal_objective: pobj,
            dual_objective: dobj,
            residuals,
            mu,
        };
        history.push(log);
        let score = residuals.worst();
        if best.as_ref().is_none_or(|(s, _, _)| score < *s) {
            best = Some((
                score,
                Iterate {
                    x: it.x.clone(),
                    y: it.y.clone(),
                    z: it.z.clone(),
                },
                log,
            ));
        }
        if residuals.primal <= opts.tol && residuals.dual <= opts.tol && residuals.gap <= opts.tol
        {
            status = Status::Optimal;
            break;
        }
        if it.x.norm() > 1e12 || it.y.norm() > 1e12 || it.z.norm() > 1e14 {
            status = Status::InfeasibleDetected;
            break;
        }
        if iter == opts.max_iter {
            break;
        }
        match step(&data, &it, &rp, &rd, mu) {
            Some(next) => it = next,
            None => break,
        }
    }

    // On failure hand back the best iterate seen rather than the last one.
    if status != Status::Optimal {
        if let Some((_, b, log)) = best {
            it = b;
            if history.last() != Some(&log) {
                history.push(log);
            }
        }
    }
    let last = *history.last().expect("at least one iterate");
    Ok(SdpSolution {
        status,
        x: it.x,
        y: it.y.iter().copied().collect(),
        z: it.z,
        primal_objective: last.primal_objective,
        dual_objective: last.dual_objective,
        residuals: last.residuals,
        iterations,
        history: {
            debug_assert!(m == data.a.len());
            history
        },
    })
}

fn initial_point(problem: &SdpProblem, data: &Data) -> Iterate {
    let n = data.n;
    let m = data.a.len();
    let sqrt_n = (n as f64).sqrt();
    let identity = DMatrix::<f64>::identity(n, n);

    // Primal: ξI when A(I) is parallel to b with positive factor.
    let a_id = data.apply(&identity);
    let denom = a_id.dot(&a_id);
    let xi_fit = if denom > 0.0 {
        a_id.dot(&data.b) / denom
    } else {
        0.0
    };
    let xi = if m > 0 && xi_fit > 0.0 && (&a_id * xi_fit - &data.b).norm() <= 1e-12 * (1.0 + data.norm_b)
    {
        xi_fit
    } else {
        let mut xi = 10f64.max(sqrt_n);
        for (ak, bk) in problem.constraints().iter().zip(data.b.iter()) {
            xi = xi.max(sqrt_n * (1.0 + bk.abs()) / (1.0 + ak.matrix.frobenius_norm()));
        }
        xi
    };

    // Dual: if Σ c_k A_k = I then y = t c gives Z = tI − C.
    let mut dual = None;
    if m > 0 {
        let gram = DMatrix::from_fn(m, m, |k, l| {
            data.a[k]
                .entries
                .iter()
                .map(|&(i, j, v)| {
                    data.a[l]
                        .entries
                        .iter()
                        .filter(|&&(p, q, _)| p == i && q == j)
                        .map(|&(_, _, w)| v * w)
                        .sum::<f64>()
                })
                .sum::<f64>()
        });
        let rhs = DVector::from_iterator(
            m,
            problem.constraints().iter().map(|c| c.matrix.trace()),
        );
        if let Some(coef) = solve_spd_regularized(&gram, &rhs) {
            let span = data.adjoint(&coef);
            if (&span - &identity).norm() <= 1e-10 * sqrt_n {
                let lmax = max_eigenvalue(&data.c);
                let t = lmax + 1f64.max(data.norm_c);
                let z = &identity * t - &data.c;
                dual = Some((coef * t, z));
            }
        }
    }
    let (y, z) = dual.unwrap_or_else(|| {
        let mut eta = 10f64.max(sqrt_n).max(data.norm_c);
        for c in problem.constraints() {
            eta = eta.max(c.matrix.frobenius_norm());
        }
        (DVector::zeros(m), &identity * eta)
    });
    Iterate {
        x: identity * xi,
        y,
        z,
    }
}

/// One Mehrotra predictor-corrector step with NT scaling.
fn step(
    data: &Data,
    it: &Iterate,
    rp: &DVector<f64>,
    rd: &DMatrix<f64>,
    mu: f64,
) -> Option<Iterate> {
    let n = data.n;
    let lx = Cholesky::new(it.x.clone())?.l();
    let lz = Cholesky::new(it.z.clone())?.l();
    let svd = SVD::new(lz.transpose() * &lx, false, true);
    let v = svd.v_t?.transpose();
    let s = svd.singular_values;
    if s.iter().any(|&si| !(si > 0.0)) {
        return None;
    }
    let mut g = &lx * v;
    for (j, &sj) in s.iter().enumerate() {
        let f = 1.0 / sj.sqrt();
        g.column_mut(j).scale_mut(f);
    }
    let w = &g * g.transpose();

    let schur = schur_complement(data, &w);
    let schur_chol = factor_schur(schur)?;

    let rd_scaled = &w * rd * &w;
    let direction = |h: &DMatrix<f64>| -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
        let ghg = &g * h * g.transpose();
        let rhs = data.apply(&(&ghg + &rd_scaled)) - rp;
        let dy = match &schur_chol {
            Some(ch) => ch.solve(&rhs),
            None => DVector::zeros(0),
        };
        let dz = data.adjoint(&dy) - rd;
        let mut dx = ghg - &w * &dz * &w;
        symmetrize(&mut dx);
        (dx, dy, dz)
    };

    // Predictor.
    let h_pred = DMatrix::from_diagonal(&s.map(|si| -si));
    let (dx_p, _, dz_p) = direction(&h_pred);
    let ap = max_step(&it.x, &dx_p)?;
    let ad = max_step(&it.z, &dz_p)?;
    let mu_aff = frob_dot(&(&it.x + &dx_p * ap), &(&it.z + &dz_p * ad)) / n as f64;
    let expon = if ap.min(ad) > 0.1 { 3.0 } else { 2.0 };
    let sigma = (mu_aff / mu).max(0.0).powf(expon).min(1.0);

    // Corrector.
    let dzt = g.transpose() * &dz_p * &g;
    let dxt = &h_pred - &dzt;
    let mut prod = &dxt * &dzt;
    symmetrize(&mut prod);
    let h_corr = DMatrix::from_fn(n, n, |i, j| {
        let mut r = -prod[(i, j)];
        if i == j {
            r += sigma * mu - s[i] * s[i];
        }
        2.0 * r / (s[i] + s[j])
    });
    let (dx, dy, dz) = direction(&h_corr);
    let ap = max_step(&it.x, &dx)?;
    let ad = max_step(&it.z, &dz)?;
    let gamma = 0.9 + 0.09 * ap.min(ad).min(1.0);
    let ap = (gamma * ap).min(1.0);
    let ad = (gamma * ad).min(1.0);
    if ap < 1e-12 && ad < 1e-12 {
        return None;
    }
    let mut x = &it.x + dx * ap;
    let mut z = &it.z + dz * ad;
    symmetrize(&mut x);
    symmetrize(&mut z);
    Some(Iterate {
        x,
        y: &it.y + dy * ad,
        z,
    })
}

fn schur_complement(data: &Data, w: &DMatrix<f64>) -> DMatrix<f64> {
    let m = data.a.len();
    let mut schur = DMatrix::zeros(m, m);
    for k in 0..m {
        let wak = data.a[k].congruence(w);
        for l in k..m {
            let v = data.a[l].dot(&wak);
            schur[(k, l)] = v;
            schur[(l, k)] = v;
        }
    }
    schur
}

/// `None` on total failure; `Some(None)` for an empty system.
#[allow(clippy::option_option)]
fn factor_schur(mut schur: DMatrix<f64>) -> Option<Option<Cholesky<f64, nalgebra::Dyn>>> {
    let m = schur.nrows();
    if m == 0 {
        return Some(None);
    }
    let scale = (0..m).map(|i| schur[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut ridge = 0.0;
    for _ in 0..8 {
        if let Some(ch) = Cholesky::new(schur.clone()) {
            return Some(Some(ch));
        }
        // Near-dependent constraints: regularized least squares.
        ridge = if ridge == 0.0 { 1e-14 * scale } else { ridge * 100.0 };
        for i in 0..m {
            schur[(i, i)] += ridge;
        }
    }
    None
}

fn solve_spd_regularized(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let m = a.nrows();
    let scale = (0..m).map(|i| a[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut reg = a.clone();
    for i in 0..m {
        reg[(i, i)] += 1e-14 * scale;
    }
    Cholesky::new(reg).map(|ch| ch.solve(b))
}

/// Largest `α ≤ 1` keeping `X + α dX ⪰ 0`, before damping.
fn max_step(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> Option<f64> {
    let l = Cholesky::new(x.clone())?.l();
    let left = l.solve_lower_triangular(dx)?;
    let mut scaled = l.solve_lower_triangular(&left.transpose())?;
    symmetrize(&mut scaled);
    let lmin = min_eigenvalue(&scaled);
    Some(if lmin >= 0.0 { 1.0 } else { (-1.0 / lmin).min(1.0) })
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

fn frob_dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub(crate) fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}
