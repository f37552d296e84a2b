// Copyright 2026 the pkcurve Authors
// SPDX-License-Identifier: Apache-2.0

//! A small feasible-descent NLP engine for equality- and bound-constrained
//! problems.
//!
//! Every iterate is kept feasible: trial points are projected back onto the
//! equality manifold by a minimum-norm Gauss–Newton correction over the
//! problem's restoration variables (the constraints must be linear in
//! those). Search directions solve an equality-constrained quadratic model
//! with a damped BFGS approximation of the Lagrangian Hessian, restricted
//! to the tangent space of the constraints and the active bounds.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A smooth problem `min f(z)` s.t. `h(z) = 0`, `lower ≤ z ≤ upper`.
pub trait NlpProblem {
    fn dim(&self) -> usize;

    fn num_constraints(&self) -> usize;

    /// Per-variable `(lower, upper)`; use infinities for free variables.
    fn bounds(&self) -> &[(f64, f64)];

    /// Objective value; accumulates the gradient into `grad` (zeroed by the
    /// caller) when given.
    fn objective(&self, z: &[f64], grad: Option<&mut [f64]>) -> Result<f64>;

    fn constraints(&self, z: &[f64]) -> Vec<f64>;

    /// `m × n` Jacobian of [`NlpProblem::constraints`].
    fn jacobian(&self, z: &[f64]) -> DMatrix<f64>;

    /// Variables moved by feasibility restoration. The constraints must be
    /// linear in them for fixed values of the remaining variables, and
    /// they must be unbounded.
    fn restoration_variables(&self) -> &[usize];

    /// Model of the Lagrangian Hessian `∇²f + Σ λᵢ ∇²hᵢ` at `z`. Without
    /// one the engine falls back to a damped BFGS approximation.
    fn lagrangian_hessian(&self, _z: &[f64], _lambda: &[f64]) -> Option<DMatrix<f64>> {
        None
    }

    /// Lowers the objective of a feasible point in place, without touching
    /// any variable that appears in a constraint or a bound.
    fn polish(&self, _z: &mut [f64]) {}

    /// Largest admissible fraction of the step `d` from `z`, in `(0, 1]`.
    /// Lets a problem keep iterates away from regions where its model is
    /// meaningless.
    fn step_limit(&self, _z: &[f64], _d: &[f64]) -> f64 {
        1.0
    }

    /// Largest per-component energy, used by the energy tolerance test.
    fn max_component_energy(&self, z: &[f64]) -> Result<f64> {
        self.objective(z, None)
    }
}

/// Termination controls of one optimization stage.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    /// Stop once every component energy is below this value.
    pub epsilon: f64,
    /// Iteration cap per stage.
    pub max_iterations: usize,
    /// Projected-gradient tolerance.
    pub kkt_tolerance: f64,
    /// Largest admissible equality violation, in normalized units.
    pub constraint_tolerance: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            epsilon: 1e-6,
            max_iterations: 200,
            kkt_tolerance: 1e-6,
            constraint_tolerance: 1e-8,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        let ok = self.epsilon > 0.0
            && self.max_iterations > 0
            && self.kkt_tolerance > 0.0
            && self.constraint_tolerance > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Argument(format!("solver settings must be positive: {self:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Tolerance,
    IterationCap,
    Stalled,
}

/// First-order optimality measures at a point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub max_equality_violation: f64,
    pub max_bound_violation: f64,
    pub projected_gradient_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub iterations: usize,
    pub initial_objective: f64,
    pub final_objective: f64,
    pub max_constraint_violation: f64,
    pub termination: Termination,
    /// The start point had to be clamped into its bounds.
    pub start_clamped: bool,
    pub kkt: KktReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOutcome {
    pub unknowns: Vec<f64>,
    pub objective: f64,
    pub stage_reports: Vec<StageReport>,
    /// Set when a later stage failed and an earlier stage's result was kept.
    pub degraded: bool,
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;
const SLOW_STEPS: usize = 8;
const SLOW_RELATIVE_DECREASE: f64 = 1e-11;
const MIN_DAMPING: f64 = 1e-10;
const MAX_DAMPING: f64 = 1e10;

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn check_dim<P: NlpProblem + ?Sized>(problem: &P, z: &[f64]) -> Result<()> {
    if z.len() != problem.dim() {
        return Err(Error::Shape(format!(
            "point has dimension {}, problem has {}",
            z.len(),
            problem.dim()
        )));
    }
    Ok(())
}

fn evaluate<P: NlpProblem + ?Sized>(problem: &P, z: &[f64], grad: &mut [f64]) -> Result<f64> {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let f = problem.objective(z, Some(grad))?;
    if f.is_nan() {
        return Err(Error::Numerical {
            index: z.iter().position(|v| !v.is_finite()).unwrap_or(0),
        });
    }
    if let Some(i) = grad.iter().position(|g| g.is_nan()) {
        return Err(Error::Numerical { index: i });
    }
    Ok(f)
}

/// Projects `z` onto `h = 0` by moving the restoration variables.
pub fn restore<P: NlpProblem + ?Sized>(problem: &P, z: &mut [f64], tolerance: f64) -> Result<f64> {
    let vars = problem.restoration_variables();
    let mut h = problem.constraints(z);
    let mut worst = max_abs(&h);
    if h.is_empty() || worst <= tolerance * 1e-6 || vars.is_empty() {
        return if worst <= tolerance {
            Ok(worst)
        } else {
            Err(Error::Infeasible { residual: worst })
        };
    }
    for _ in 0..8 {
        let jac = problem.jacobian(z);
        let jr = jac.select_columns(vars.iter());
        let svd = jr.svd(true, true);
        let rhs = DVector::from_column_slice(&h);
        let step = svd
            .solve(&rhs, 1e-13)
            .map_err(|e| Error::Invariant(format!("restoration solve: {e}")))?;
        let previous: Vec<f64> = vars.iter().map(|&v| z[v]).collect();
        for (i, &v) in vars.iter().enumerate() {
            z[v] -= step[i];
        }
        let h_new = problem.constraints(z);
        let new_worst = max_abs(&h_new);
        if !(new_worst < worst) {
            for (i, &v) in vars.iter().enumerate() {
                z[v] = previous[i];
            }
            break;
        }
        h = h_new;
        worst = new_worst;
        if worst <= tolerance * 1e-6 {
            break;
        }
    }
    if !(worst <= tolerance) {
        return Err(Error::Infeasible { residual: worst });
    }
    Ok(worst)
}

fn at_bound(z: f64, (lo, hi): (f64, f64)) -> Option<bool> {
    // Some(true) = lower, Some(false) = upper
    if lo == hi {
        return Some(true);
    }
    if z <= lo {
        Some(true)
    } else if z >= hi {
        Some(false)
    } else {
        None
    }
}

/// Least-squares multipliers and the residual `g + Aᵀμ` for the working set.
///
/// Bounds whose multiplier has the wrong sign are dropped one at a time.
/// Returns the residual norm, the retained active set and the equality
/// multipliers.
fn stationarity(
    grad: &[f64],
    jac: &DMatrix<f64>,
    z: &[f64],
    bounds: &[(f64, f64)],
) -> (f64, Vec<usize>, Vec<f64>) {
    let n = grad.len();
    let mut active: Vec<usize> = (0..n).filter(|&j| at_bound(z[j], bounds[j]).is_some()).collect();
    let g = DVector::from_column_slice(grad);
    loop {
        let m = jac.nrows();
        let cols = m + active.len();
        if cols == 0 {
            return (g.amax(), active, Vec::new());
        }
        let mut a_t = DMatrix::<f64>::zeros(n, cols);
        if m > 0 {
            a_t.columns_mut(0, m).copy_from(&jac.transpose());
        }
        for (c, &j) in active.iter().enumerate() {
            a_t[(j, m + c)] = 1.0;
        }
        let svd = a_t.clone().svd(true, true);
        let mu = match svd.solve(&(-&g), 1e-12) {
            Ok(mu) => mu,
            Err(_) => return (g.amax(), active, vec![0.0; m]),
        };
        let r = &g + &a_t * &mu;
        // μ_j for a lower bound must be ≤ 0, for an upper bound ≥ 0
        let mut worst: Option<(usize, f64)> = None;
        for (c, &j) in active.iter().enumerate() {
            if bounds[j].0 == bounds[j].1 {
                continue;
            }
            let lower = at_bound(z[j], bounds[j]) == Some(true);
            let v = mu[m + c];
            let violation = if lower { v } else { -v };
            if violation > 1e-12 * (1.0 + g.amax()) && worst.is_none_or(|(_, w)| violation > w) {
                worst = Some((c, violation));
            }
        }
        match worst {
            Some((c, _)) => {
                active.remove(c);
            }
            None => return (r.amax(), active, mu.rows(0, m).iter().copied().collect()),
        }
    }
}

/// Equality violation, bound violation and projected-gradient norm at `z`.
pub fn kkt_report<P: NlpProblem + ?Sized>(problem: &P, z: &[f64]) -> Result<KktReport> {
    check_dim(problem, z)?;
    let n = problem.dim();
    let h = problem.constraints(z);
    let bounds = problem.bounds();
    let bound_violation = z
        .iter()
        .zip(bounds)
        .map(|(&v, &(lo, hi))| (lo - v).max(v - hi).max(0.0))
        .fold(0.0, f64::max);
    let mut grad = vec![0.0; n];
    evaluate(problem, z, &mut grad)?;
    let jac = problem.jacobian(z);
    let (pg, _, _) = stationarity(&grad, &jac, z, bounds);
    Ok(KktReport {
        max_equality_violation: max_abs(&h),
        max_bound_violation: bound_violation,
        projected_gradient_norm: pg,
    })
}

/// Orthonormal basis of the null space of the constraint rows plus the
/// active bound rows, as columns.
fn null_space(jac: &DMatrix<f64>, active: &[usize], n: usize) -> DMatrix<f64> {
    let m = jac.nrows();
    let mut a = DMatrix::<f64>::zeros(m + active.len(), n);
    if m > 0 {
        a.rows_mut(0, m).copy_from(jac);
    }
    for (c, &j) in active.iter().enumerate() {
        a[(m + c, j)] = 1.0;
    }
    if a.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    let eig = (a.transpose() * &a).symmetric_eigen();
    let top = eig.eigenvalues.amax();
    // AᵀA squares the singular values
    let cut = 1e-12 * top.max(1e-300);
    let cols: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] <= cut).collect();
    eig.eigenvectors.select_columns(cols.iter())
}

/// Modified Newton step in the tangent space spanned by `basis`:
/// minimizes `gᵀd + ½ dᵀ(H + μ s I)d` over `d = Z p`, raising the damping
/// until the reduced matrix is positive definite.
fn tangent_direction(
    hess: &DMatrix<f64>,
    grad: &[f64],
    basis: &DMatrix<f64>,
    damping: &mut f64,
) -> Option<DVector<f64>> {
    let n = grad.len();
    if basis.ncols() == 0 {
        return Some(DVector::zeros(n));
    }
    let reduced = basis.transpose() * hess * basis;
    let rhs = -(basis.transpose() * DVector::from_column_slice(grad));
    let scale = (0..reduced.nrows())
        .fold(0.0f64, |m, i| m.max(reduced[(i, i)].abs()))
        .max(1e-12);
    loop {
        let shifted = &reduced + DMatrix::<f64>::identity(reduced.nrows(), reduced.ncols()) * (*damping * scale);
        if let Some(ch) = shifted.cholesky() {
            let p = ch.solve(&rhs);
            if p.iter().all(|v| v.is_finite()) {
                return Some(basis * p);
            }
        }
        if *damping > MAX_DAMPING {
            return None;
        }
        *damping = (*damping * 10.0).max(MIN_DAMPING);
    }
}

fn lagrangian_gradient(grad: &[f64], jac: &DMatrix<f64>, lambda: &DVector<f64>) -> DVector<f64> {
    let mut g = DVector::from_column_slice(grad);
    if jac.nrows() > 0 {
        g += jac.transpose() * lambda;
    }
    g
}

/// Runs one optimization stage from `start`.
pub fn solve_stage<P: NlpProblem + ?Sized>(
    problem: &P,
    settings: &SolverSettings,
    start: &[f64],
) -> Result<SolveOutcome> {
    settings.validate()?;
    check_dim(problem, start)?;
    let n = problem.dim();
    let bounds = problem.bounds().to_vec();
    if let Some(j) = bounds.iter().position(|&(lo, hi)| !(lo <= hi)) {
        return Err(Error::Argument(format!("bound {j} has lower > upper")));
    }

    let mut z = start.to_vec();
    let mut start_clamped = false;
    for (v, &(lo, hi)) in z.iter_mut().zip(&bounds) {
        let c = v.clamp(lo, hi);
        if c != *v {
            start_clamped = true;
            *v = c;
        }
    }
    let violation = restore(problem, &mut z, settings.constraint_tolerance)?;
    problem.polish(&mut z);

    let mut grad = vec![0.0; n];
    let mut f = evaluate(problem, &z, &mut grad)?;
    if !f.is_finite() {
        return Err(Error::Numerical { index: 0 });
    }
    let initial_objective = f;

    if n == 0 {
        return Ok(SolveOutcome {
            unknowns: z,
            objective: f,
            stage_reports: vec![StageReport {
                iterations: 0,
                initial_objective,
                final_objective: f,
                max_constraint_violation: violation,
                termination: Termination::Tolerance,
                start_clamped,
                kkt: KktReport {
                    max_equality_violation: violation,
                    ..Default::default()
                },
            }],
            degraded: false,
        });
    }

    let mut hess = DMatrix::<f64>::identity(n, n);
    let mut scaled = false;
    // relative Levenberg damping of the model
    let mut damping = 0.0f64;
    let mut termination = Termination::IterationCap;
    let mut iterations = 0;
    let mut slow = 0;
    let mut jac = problem.jacobian(&z);

    while iterations < settings.max_iterations {
        let (pg, mut active, multipliers) = stationarity(&grad, &jac, &z, &bounds);
        if pg <= settings.kkt_tolerance || problem.max_component_energy(&z)? < settings.epsilon {
            termination = Termination::Tolerance;
            break;
        }
        iterations += 1;

        let model = problem
            .lagrangian_hessian(&z, &multipliers)
            .filter(|h| h.nrows() == n && h.ncols() == n && h.iter().all(|v| v.is_finite()));
        if let Some(h) = &model {
            hess = h.clone();
        }

        let mut accepted = None;
        let mut full_step = false;
        let mut basis = null_space(&jac, &active, n);
        'direction: for _attempt in 0..n + 40 {
            let Some(d) = tangent_direction(&hess, &grad, &basis, &mut damping) else {
                break;
            };
            let slope: f64 = d.iter().zip(&grad).map(|(a, b)| a * b).sum();
            if !(slope < 0.0) {
                break;
            }
            // longest step that keeps the free bounded variables feasible
            let mut step_max = 1.0;
            let mut blocking = None;
            for j in 0..n {
                if active.contains(&j) {
                    continue;
                }
                let (lo, hi) = bounds[j];
                let dj = d[j];
                let limit = if dj < 0.0 && lo.is_finite() {
                    (lo - z[j]) / dj
                } else if dj > 0.0 && hi.is_finite() {
                    (hi - z[j]) / dj
                } else {
                    continue;
                };
                if limit < step_max {
                    step_max = limit.max(0.0);
                    blocking = Some(j);
                }
            }
            let limit = problem.step_limit(&z, d.as_slice());
            if limit < step_max {
                step_max = limit;
                blocking = None;
            }
            if step_max <= 1e-14 {
                if let Some(j) = blocking {
                    active.push(j);
                    basis = null_space(&jac, &active, n);
                    continue 'direction;
                }
            }
            let mut alpha = step_max;
            for _ in 0..MAX_BACKTRACKS {
                let mut trial: Vec<f64> = z.iter().zip(d.iter()).map(|(a, b)| a + alpha * b).collect();
                for (j, v) in trial.iter_mut().enumerate() {
                    *v = v.clamp(bounds[j].0, bounds[j].1);
                }
                if alpha == step_max {
                    if let Some(j) = blocking {
                        let (lo, hi) = bounds[j];
                        trial[j] = if d[j] < 0.0 { lo } else { hi };
                    }
                }
                for &j in &active {
                    trial[j] = z[j];
                }
                if restore(problem, &mut trial, settings.constraint_tolerance).is_ok() {
                    problem.polish(&mut trial);
                    let mut g_trial = vec![0.0; n];
                    if let Ok(f_trial) = evaluate(problem, &trial, &mut g_trial) {
                        if f_trial.is_finite() && f_trial <= f + ARMIJO * alpha * slope {
                            full_step = alpha == step_max;
                            accepted = Some((trial, g_trial, f_trial));
                            break 'direction;
                        }
                    }
                }
                alpha *= 0.5;
            }
            match &model {
                Some(_) if damping < MAX_DAMPING => damping = (damping * 10.0).max(MIN_DAMPING),
                None if scaled => {
                    hess = DMatrix::identity(n, n);
                    scaled = false;
                }
                _ => break,
            }
        }

        let Some((z_new, g_new, f_new)) = accepted else {
            termination = Termination::Stalled;
            break;
        };

        let jac_new = problem.jacobian(&z_new);
        if model.is_some() {
            damping = if full_step {
                if damping <= MIN_DAMPING { 0.0 } else { damping * 0.1 }
            } else {
                (damping * 10.0).max(MIN_DAMPING)
            };
        } else {
            let lambda = DVector::from_vec(multipliers);
            let s = DVector::from_iterator(n, z_new.iter().zip(&z).map(|(a, b)| a - b));
            let y = lagrangian_gradient(&g_new, &jac_new, &lambda) - lagrangian_gradient(&grad, &jac, &lambda);
            let sy = s.dot(&y);
            if !scaled && sy > 0.0 {
                let yy = y.dot(&y);
                hess = DMatrix::identity(n, n) * (yy / sy);
                scaled = true;
            }
            let bs = &hess * &s;
            let sbs = s.dot(&bs);
            if sbs > 1e-300 {
                // Powell damping keeps the update positive definite
                let theta = if sy >= 0.2 * sbs { 1.0 } else { 0.8 * sbs / (sbs - sy) };
                let r = &y * theta + &bs * (1.0 - theta);
                let sr = s.dot(&r);
                if sr > 1e-300 {
                    hess -= &bs * bs.transpose() / sbs;
                    hess += &r * r.transpose() / sr;
                }
            }
        }

        let decrease = f - f_new;
        if decrease <= SLOW_RELATIVE_DECREASE * f.abs().max(1e-12) {
            slow += 1;
        } else {
            slow = 0;
        }
        z = z_new;
        grad = g_new;
        f = f_new;
        jac = jac_new;
        if slow >= SLOW_STEPS {
            termination = Termination::Stalled;
            break;
        }
    }

    let kkt = kkt_report(problem, &z)?;
    Ok(SolveOutcome {
        objective: f,
        stage_reports: vec![StageReport {
            iterations,
            initial_objective,
            final_objective: f,
            max_constraint_violation: kkt.max_equality_violation,
            termination,
            start_clamped,
            kkt,
        }],
        unknowns: z,
        degraded: false,
    })
}
