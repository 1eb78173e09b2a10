//! Complex sparse-group-lasso for sparse LSFD.
//!
//! Minimizes, over the stacked LSFD vector `a = [a_1; …; a_K]`,
//!
//! ```text
//! Σ_k a_kᴴ A_k a_k − 2 Re(a_kᴴ c_k) + γ Σ_l ‖α_l‖₂ + λ ‖(Re a; Im a)‖₁
//! ```
//!
//! where `c_k = √p_k b_k` and `α_l = (a_1l, …, a_Kl)` collects the weights
//! of AP `l`. With `A = ĀᴴĀ` (per-UE Cholesky) the smooth part becomes the
//! least-squares term `‖b̄ − Āa‖²` up to the constant `b̄ᴴb̄`, which is what
//! the block-coordinate descent works on, one AP group at a time, in real
//! coordinates.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::linalg::{
    complexify_vector, inner, power_iteration, quad_form, realify_matrix, realify_vector, CMatrix,
    CVector, HermitianFactor, C64,
};
use crate::lsfd::LsfdVector;
use crate::uplink::LsfdStatistics;
use crate::{Error, Result};

/// Smallest step length before the line search gives up.
pub const MIN_STEP: f64 = 1e-30;

/// Coefficients with modulus below this are snapped to exact zero.
pub const SNAP_THRESHOLD: f64 = 1e-12;

/// Per-UE factorized problem data.
#[derive(Debug, Clone)]
pub struct SparseProblem {
    num_ues: usize,
    num_aps: usize,
    /// `A_k`.
    a: Vec<CMatrix>,
    /// Upper-triangular `Ā_k` with `Ā_kᴴ Ā_k = A_k`.
    factors: Vec<CMatrix>,
    /// Linear term `c_k`.
    b: Vec<CVector>,
    /// `b̄_k = (Ā_kᴴ)⁻¹ c_k`.
    bbar: Vec<CVector>,
}

/// Stacks the LSFD statistics into a sparse problem with `c_k = √p_k b_k`.
pub fn build_problem(stats: &LsfdStatistics) -> Result<SparseProblem> {
    let targets = stats
        .b
        .iter()
        .zip(&stats.p)
        .map(|(b, &p)| b * C64::new(p.sqrt(), 0.0))
        .collect();
    SparseProblem::new(stats.a.clone(), targets)
}

impl SparseProblem {
    /// Problem from explicit blocks `A_k` and linear terms `c_k`.
    pub fn new(a: Vec<CMatrix>, b: Vec<CVector>) -> Result<Self> {
        let num_ues = a.len();
        let num_aps = a.first().map_or(0, |m| m.nrows());
        if b.len() != num_ues || a.iter().zip(&b).any(|(m, v)| m.shape() != (num_aps, num_aps) || v.len() != num_aps) {
            return Err(Error::Config("sparse problem: inconsistent block sizes".into()));
        }
        let mut factors = Vec::with_capacity(num_ues);
        let mut bbar = Vec::with_capacity(num_ues);
        for (k, (ak, bk)) in a.iter().zip(&b).enumerate() {
            let factor = HermitianFactor::new(ak).map_err(|_| Error::UeStatistics { ue: k })?;
            bbar.push(factor.solve_lower(bk));
            factors.push(factor.upper());
        }
        Ok(Self { num_ues, num_aps, a, factors, b, bbar })
    }

    pub fn num_ues(&self) -> usize {
        self.num_ues
    }

    pub fn num_aps(&self) -> usize {
        self.num_aps
    }

    pub fn len(&self) -> usize {
        self.num_ues * self.num_aps
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn block(&self, k: usize) -> &CMatrix {
        &self.a[k]
    }

    pub fn factor(&self, k: usize) -> &CMatrix {
        &self.factors[k]
    }

    pub fn target(&self, k: usize) -> &CVector {
        &self.b[k]
    }

    /// Stacked `c`.
    pub fn stacked_target(&self) -> CVector {
        stack(&self.b)
    }

    /// Stacked `b̄`.
    pub fn stacked_bbar(&self) -> CVector {
        stack(&self.bbar)
    }

    /// Positions of group `l` in the stacked vector: one per UE block.
    pub fn group_positions(&self, l: usize) -> Vec<usize> {
        (0..self.num_ues).map(|k| k * self.num_aps + l).collect()
    }

    /// Dense KL×K column block `Ā_l`.
    pub fn group_matrix(&self, l: usize) -> CMatrix {
        let n = self.num_aps;
        let mut m = CMatrix::zeros(self.len(), self.num_ues);
        for k in 0..self.num_ues {
            for row in 0..n {
                m[(k * n + row, k)] = self.factors[k][(row, l)];
            }
        }
        m
    }

    /// Extracts `α_l` from a stacked vector.
    pub fn group(&self, a: &CVector, l: usize) -> CVector {
        CVector::from_fn(self.num_ues, |k, _| a[k * self.num_aps + l])
    }

    /// `Āa` in stacked form.
    pub fn apply_factor(&self, a: &CVector) -> CVector {
        let n = self.num_aps;
        let mut out = CVector::zeros(self.len());
        for k in 0..self.num_ues {
            let y = &self.factors[k] * a.rows(k * n, n);
            out.rows_mut(k * n, n).copy_from(&y);
        }
        out
    }

    /// `b̄ᴴb̄ = cᴴA⁻¹c`, the offset between the two objective forms.
    pub fn offset(&self) -> f64 {
        self.bbar.iter().map(|v| v.norm_squared()).sum()
    }

    /// `Σ_k a_kᴴA_k a_k − 2 Re(a_kᴴ c_k)`.
    pub fn smooth(&self, a: &CVector) -> f64 {
        let n = self.num_aps;
        (0..self.num_ues)
            .map(|k| {
                let ak = a.rows(k * n, n).into_owned();
                quad_form(&ak, &self.a[k]) - 2.0 * inner(&ak, &self.b[k]).re
            })
            .sum()
    }

    /// `‖b̄ − Āa‖²`.
    pub fn least_squares(&self, a: &CVector) -> f64 {
        (self.stacked_bbar() - self.apply_factor(a)).norm_squared()
    }

    /// Complex gradient `2(A a − c)`; its real embedding is the real-form
    /// gradient.
    pub fn gradient(&self, a: &CVector) -> CVector {
        let n = self.num_aps;
        let mut g = CVector::zeros(self.len());
        for k in 0..self.num_ues {
            let gk = (&self.a[k] * a.rows(k * n, n) - &self.b[k]) * C64::new(2.0, 0.0);
            g.rows_mut(k * n, n).copy_from(&gk);
        }
        g
    }

    /// Full objective with the real-form ℓ1 penalty.
    pub fn objective(&self, a: &CVector, gamma: f64, lambda: f64) -> f64 {
        self.smooth(a) + penalty(self, a, gamma, lambda)
    }

    /// Smallest λ at which `a = 0` is optimal when γ = 0.
    pub fn zero_point_lambda(&self) -> f64 {
        2.0 * self
            .b
            .iter()
            .flat_map(|v| v.iter())
            .map(|z| z.re.abs().max(z.im.abs()))
            .fold(0.0, f64::max)
    }

    /// Splits a stacked vector into per-UE LSFD vectors.
    pub fn split(&self, a: &CVector) -> Vec<LsfdVector> {
        let n = self.num_aps;
        (0..self.num_ues)
            .map(|k| LsfdVector::new(k, a.rows(k * n, n).into_owned()))
            .collect()
    }
}

fn stack(blocks: &[CVector]) -> CVector {
    let n: usize = blocks.iter().map(|b| b.len()).sum();
    CVector::from_iterator(n, blocks.iter().flat_map(|b| b.iter().copied()))
}

/// `γ Σ_l ‖α_l‖₂ + λ Σ (|Re| + |Im|)`.
pub fn penalty(problem: &SparseProblem, a: &CVector, gamma: f64, lambda: f64) -> f64 {
    let groups: f64 = (0..problem.num_aps)
        .map(|l| problem.group(a, l).norm())
        .sum();
    let l1: f64 = a.iter().map(|z| z.re.abs() + z.im.abs()).sum();
    gamma * groups + lambda * l1
}

/// A group subproblem in real coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct RealGroup {
    pub alpha: DVector<f64>,
    pub matrix: DMatrix<f64>,
    pub residual: DVector<f64>,
}

pub fn complex_to_real(alpha: &CVector, group_matrix: &CMatrix, residual: &CVector) -> RealGroup {
    RealGroup {
        alpha: realify_vector(alpha),
        matrix: realify_matrix(group_matrix),
        residual: realify_vector(residual),
    }
}

/// Quadratic `αᵀGα − 2cᵀα` (the constant `‖r‖²` is dropped).
#[derive(Debug, Clone, PartialEq)]
pub struct GroupQuadratic {
    pub gram: DMatrix<f64>,
    pub linear: DVector<f64>,
}

impl GroupQuadratic {
    pub fn from_real(group: &RealGroup) -> Self {
        Self {
            gram: group.matrix.transpose() * &group.matrix,
            linear: group.matrix.transpose() * &group.residual,
        }
    }

    pub fn value(&self, alpha: &DVector<f64>) -> f64 {
        alpha.dot(&(&self.gram * alpha)) - 2.0 * self.linear.dot(alpha)
    }

    pub fn gradient(&self, alpha: &DVector<f64>) -> DVector<f64> {
        (&self.gram * alpha - &self.linear) * 2.0
    }

    /// Gershgorin bound on the Lipschitz constant `2 λ_max(G)`.
    fn lipschitz_bound(&self) -> f64 {
        let n = self.gram.nrows();
        (0..n)
            .map(|i| (0..n).map(|j| self.gram[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
            * 2.0
    }
}

/// Soft thresholding.
pub fn prox_l1(x: &DVector<f64>, mu: f64) -> DVector<f64> {
    x.map(|v| v.signum() * (v.abs() - mu).max(0.0))
}

/// Block shrinkage.
pub fn prox_l2(x: &DVector<f64>, mu: f64) -> DVector<f64> {
    let norm = x.norm();
    if norm == 0.0 || norm <= mu {
        return DVector::zeros(x.len());
    }
    x * ((norm - mu) / norm)
}

/// Proximal map of `μ(γ‖·‖₂ + λ‖·‖₁)`: soft thresholding, then block
/// shrinkage.
pub fn prox_composite(g: &DVector<f64>, mu: f64, gamma: f64, lambda: f64) -> DVector<f64> {
    prox_l2(&prox_l1(g, mu * lambda), mu * gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    pub gamma: f64,
    pub lambda: f64,
    pub max_sweeps: usize,
    /// Iteration cap of each group's inner proximal loop.
    pub inner_max: usize,
    /// Relative iterate change that ends a group's inner loop.
    pub inner_tol: f64,
    /// Relative objective decrease per sweep that ends the descent.
    pub tol_rel: f64,
    pub backtrack_factor: f64,
    /// Initial step length, in units of the group's inverse Lipschitz bound.
    pub mu_init: f64,
}

impl SolverOptions {
    pub fn new(gamma: f64, lambda: f64) -> Self {
        Self {
            gamma,
            lambda,
            max_sweeps: 10_000,
            inner_max: 100,
            inner_tol: 1e-8,
            // 1e-8 leaves weak UEs visibly short of the unpenalized optimum
            tol_rel: 1e-10,
            backtrack_factor: 0.5,
            mu_init: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [self.gamma, self.lambda, self.inner_tol, self.mu_init];
        if nonneg.iter().any(|v| !(*v >= 0.0)) || !(self.tol_rel > 0.0) || !(self.mu_init > 0.0) {
            return Err(Error::Config("solver: penalties and tolerances must be nonnegative".into()));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(Error::Config("solver: backtrack_factor must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverResult {
    /// Stacked complex solution, UE-major.
    #[serde(skip)]
    pub a: CVector,
    pub objective: f64,
    pub sweeps: usize,
    pub kkt_residual: f64,
    pub converged: bool,
    /// Objective after every sweep (or iteration, for the reference solver).
    pub objective_trace: Vec<f64>,
}

/// Accelerated proximal-gradient minimization of one group subproblem,
/// warm-started at `start`. Returns the best iterate, which never has a
/// larger subproblem objective than `start`.
pub fn group_step(
    quad: &GroupQuadratic,
    start: &DVector<f64>,
    options: &SolverOptions,
    group: usize,
) -> Result<DVector<f64>> {
    let (gamma, lambda) = (options.gamma, options.lambda);
    let full = |x: &DVector<f64>| quad.value(x) + gamma * x.norm() + lambda * x.lp_norm(1);
    let lipschitz = quad.lipschitz_bound().max(f64::MIN_POSITIVE);
    let mut mu = options.mu_init / lipschitz;

    let mut prev = start.clone();
    let mut cur = start.clone();
    let mut best = start.clone();
    let mut best_value = full(start);
    for n in 1..=options.inner_max {
        let momentum = (n as f64 - 1.0) / (n as f64 + 2.0);
        let hat = &cur + (&cur - &prev) * momentum;
        let grad = quad.gradient(&hat);
        let f_hat = quad.value(&hat);
        let next = loop {
            let candidate = prox_composite(&(&hat - &grad * mu), mu, gamma, lambda);
            let step = &candidate - &hat;
            let model = f_hat + grad.dot(&step) + step.norm_squared() / (2.0 * mu);
            let slack = 1e-14 * (f_hat.abs() + model.abs());
            if quad.value(&candidate) <= model + slack {
                break candidate;
            }
            mu *= options.backtrack_factor;
            if mu < MIN_STEP {
                return Err(Error::LineSearch { group });
            }
        };
        prev = std::mem::replace(&mut cur, next);
        let value = full(&cur);
        if value < best_value {
            best_value = value;
            best = cur.clone();
        }
        let change = (&cur - &prev).norm();
        if change <= options.inner_tol * cur.norm() || change == 0.0 {
            break;
        }
    }
    Ok(best)
}

/// Cyclic block-coordinate descent over the AP groups.
pub fn bcd_solve(problem: &SparseProblem, options: &SolverOptions) -> Result<SolverResult> {
    options.validate()?;
    let (k_count, l_count) = (problem.num_ues, problem.num_aps);
    let mut a = CVector::zeros(problem.len());
    let mut residual = problem.stacked_bbar();
    let mut value = problem.objective(&a, options.gamma, options.lambda);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut sweeps = 0;

    while sweeps < options.max_sweeps {
        sweeps += 1;
        for l in 0..l_count {
            // Ā_l has one column per UE block and the blocks do not overlap,
            // so Ā_lᴴĀ_l is diagonal with entries ‖Ā_k[:, l]‖² = A_k[l, l].
            let mut gram = CMatrix::zeros(k_count, k_count);
            let mut linear = CVector::zeros(k_count);
            for k in 0..k_count {
                let col = problem.factors[k].column(l);
                let rk = residual.rows(k * l_count, l_count);
                let norm2 = col.norm_squared();
                gram[(k, k)] = C64::new(norm2, 0.0);
                // Ā_lᴴ r_l with the partial residual r_l = r + Ā_l α_l
                linear[k] = col.dotc(&rk) + a[k * l_count + l] * norm2;
            }
            let quad = GroupQuadratic {
                gram: realify_matrix(&gram),
                linear: realify_vector(&linear),
            };
            let old = problem.group(&a, l);
            let new = complexify_vector(&group_step(&quad, &realify_vector(&old), options, l)?);
            for k in 0..k_count {
                let delta = new[k] - old[k];
                if delta == C64::new(0.0, 0.0) {
                    continue;
                }
                let col = problem.factors[k].column(l);
                let mut rk = residual.rows_mut(k * l_count, l_count);
                rk -= col * delta;
                a[k * l_count + l] = new[k];
            }
        }
        residual = problem.stacked_bbar() - problem.apply_factor(&a);
        let next = problem.objective(&a, options.gamma, options.lambda);
        trace.push(next);
        let decrease = value - next;
        value = next;
        if decrease <= options.tol_rel * value.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }

    snap_zeros(&mut a, SNAP_THRESHOLD);
    let objective = problem.objective(&a, options.gamma, options.lambda);
    let kkt = kkt_residual(&a, problem, options.gamma, options.lambda);
    Ok(SolverResult { a, objective, sweeps, kkt_residual: kkt, converged, objective_trace: trace })
}

/// Sets coefficients with modulus below `threshold` to exact zero.
pub fn snap_zeros(a: &mut CVector, threshold: f64) {
    for z in a.iter_mut() {
        if z.norm() < threshold {
            *z = C64::new(0.0, 0.0);
        }
    }
}

/// Largest violation of the first-order optimality conditions over all
/// groups, in real coordinates.
pub fn kkt_residual(a: &CVector, problem: &SparseProblem, gamma: f64, lambda: f64) -> f64 {
    let grad = problem.gradient(a);
    (0..problem.num_aps)
        .map(|l| {
            let alpha = realify_vector(&problem.group(a, l));
            let g = realify_vector(&problem.group(&grad, l));
            let norm = alpha.norm();
            if norm == 0.0 {
                return (prox_l1(&(-&g), lambda).norm() - gamma).max(0.0);
            }
            alpha
                .iter()
                .zip(g.iter())
                .map(|(&x, &gi)| {
                    if x != 0.0 {
                        (gi + gamma * x / norm + lambda * x.signum()).abs()
                    } else {
                        (gi.abs() - lambda).max(0.0)
                    }
                })
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Full-vector monotone accelerated proximal gradient with a fixed step,
/// used to cross-check [`bcd_solve`]. Deliberately unstructured: it sees the
/// problem only through its gradient, objective and the groupwise prox.
pub fn reference_solve(problem: &SparseProblem, gamma: f64, lambda: f64, tol: f64) -> Result<SolverResult> {
    const MAX_ITERS: usize = 200_000;
    let lipschitz = 2.0
        * problem
            .a
            .iter()
            .map(|m| power_iteration(&realify_matrix(m), 500))
            .fold(0.0, f64::max)
        * 1.01;
    let step = 1.0 / lipschitz.max(f64::MIN_POSITIVE);
    let objective = |x: &CVector| problem.objective(x, gamma, lambda);
    let prox_step = |y: &CVector| -> CVector {
        let moved = y - problem.gradient(y) * C64::new(step, 0.0);
        let mut out = CVector::zeros(problem.len());
        for l in 0..problem.num_aps {
            let g = realify_vector(&problem.group(&moved, l));
            let z = complexify_vector(&prox_composite(&g, step, gamma, lambda));
            for (k, pos) in problem.group_positions(l).into_iter().enumerate() {
                out[pos] = z[k];
            }
        }
        out
    };
    let scale = 1.0 + problem.stacked_target().norm();

    let mut x = CVector::zeros(problem.len());
    let mut fx = objective(&x);
    let mut y = x.clone();
    let mut t = 1.0_f64;
    let mut trace = vec![fx];
    let mut converged = false;
    let mut iters = 0;
    while iters < MAX_ITERS {
        iters += 1;
        let z = prox_step(&y);
        let fz = objective(&z);
        let x_prev = x.clone();
        if fz <= fx {
            x = z.clone();
            fx = fz;
        }
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        y = &x + (&z - &x) * C64::new(t / t_next, 0.0) + (&x - &x_prev) * C64::new((t - 1.0) / t_next, 0.0);
        t = t_next;
        trace.push(fx);

        if iters % 10 == 0 {
            // gradient-mapping certificate: F(x⁺) − F* ≤ ‖G(x)‖ · ‖x⁺ − x*‖
            let plain = prox_step(&x);
            let mapping = (&x - &plain).norm() / step;
            let reach = x.norm() + plain.norm();
            let floor = 1e-12 * scale * scale;
            if mapping * reach <= tol * fx.abs().max(floor) {
                if objective(&plain) <= fx {
                    x = plain;
                }
                converged = true;
                break;
            }
        }
    }
    snap_zeros(&mut x, SNAP_THRESHOLD);
    let objective = problem.objective(&x, gamma, lambda);
    let kkt = kkt_residual(&x, problem, gamma, lambda);
    Ok(SolverResult { a: x, objective, sweeps: iters, kkt_residual: kkt, converged, objective_trace: trace })
}
