//! L-BFGS (argmin, More-Thuente line search) with restarts, inside an
//! augmented-Lagrangian loop for the commutator constraint.

use std::cell::RefCell;

use argmin::core::{CostFunction, Executor, Gradient, State};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::LBFGS;

use super::objective::{Objective, INVALID};

const RHO_MAX: f64 = 1e10;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Settings {
    /// Stop when the max-abs gradient falls below this.
    pub tol_grad: f64,
    /// Stop when a full L-BFGS run changes the objective by less than this,
    /// relative to `max(1, |f|)`.
    pub tol_rel: f64,
    /// Required max-abs commutator residual.
    pub tol_constraint: f64,
    pub max_iter: u64,
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub theta: Vec<f64>,
    pub f: f64,
    pub iterations: u64,
    pub converged: bool,
    /// Max-abs gradient of the Lagrangian at exit.
    pub grad_norm: f64,
    /// Max-abs commutator entry at exit.
    pub constraint: f64,
}

struct Cached<'a> {
    obj: &'a Objective,
    last: RefCell<Option<(Vec<f64>, f64, Vec<f64>)>>,
}

impl Cached<'_> {
    fn both(&self, th: &[f64]) -> (f64, Vec<f64>) {
        if let Some((x, f, g)) = &*self.last.borrow() {
            if x.as_slice() == th {
                return (*f, g.clone());
            }
        }
        let mut g = vec![0.0; th.len()];
        let e = self.obj.eval(th, Some(&mut g));
        let f = if e.valid && e.al.is_finite() { e.al } else { INVALID };
        *self.last.borrow_mut() = Some((th.to_vec(), f, g.clone()));
        (f, g)
    }
}

impl CostFunction for Cached<'_> {
    type Param = Vec<f64>;
    type Output = f64;
    fn cost(&self, p: &Vec<f64>) -> Result<f64, argmin::core::Error> {
        Ok(self.both(p).0)
    }
}

impl Gradient for Cached<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;
    fn gradient(&self, p: &Vec<f64>) -> Result<Vec<f64>, argmin::core::Error> {
        Ok(self.both(p).1)
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// One L-BFGS run from `x0`; returns the best point, its value and the iteration count.
fn lbfgs_run(obj: &Objective, x0: Vec<f64>, f0: f64, max_iter: u64, tol_cost: f64, tol_grad: f64) -> (Vec<f64>, f64, u64) {
    let problem = Cached { obj, last: RefCell::new(None) };
    let ls = MoreThuenteLineSearch::new();
    let solver = match LBFGS::new(ls, 10).with_tolerance_grad(0.1 * tol_grad).and_then(|s| s.with_tolerance_cost(tol_cost)) {
        Ok(s) => s,
        Err(_) => return (x0, f0, 0),
    };
    let res = Executor::new(problem, solver)
        .configure(|s| s.param(x0.clone()).max_iters(max_iter))
        .ctrlc(false)
        .timer(false)
        .run();
    match res {
        Ok(r) => {
            let st = r.state();
            let best = st.get_best_param().cloned().unwrap_or(x0.clone());
            let f = st.get_best_cost();
            if f <= f0 {
                (best, f, st.get_iter())
            } else {
                (x0, f0, st.get_iter())
            }
        }
        Err(_) => (x0, f0, 0),
    }
}

/// Minimizes the augmented Lagrangian for fixed multipliers, restarting
/// L-BFGS until the gradient is small or a run stops improving.
fn inner(obj: &Objective, mut x: Vec<f64>, s: &Settings, budget: &mut u64) -> (Vec<f64>, bool) {
    let mut g = vec![0.0; x.len()];
    let mut f = obj.eval(&x, Some(&mut g)).al;
    let mut stalls = 0;
    loop {
        if max_abs(&g) < s.tol_grad {
            return (x, true);
        }
        if *budget == 0 {
            return (x, false);
        }
        // runs go until the line search stalls; the relative-change test applies between runs
        let tol_cost = 4.0 * f64::EPSILON * f.abs().max(1.0);
        let (nx, nf, it) = lbfgs_run(obj, x.clone(), f, *budget, tol_cost, s.tol_grad);
        *budget = budget.saturating_sub(it.max(1));
        let gain = f - nf;
        x = renormalize(obj, nx);
        f = obj.eval(&x, Some(&mut g)).al;
        if gain <= s.tol_rel * f.abs().max(1.0) {
            stalls += 1;
            if stalls >= 2 {
                // a stalled run counts as converged only near stationarity
                return (x, max_abs(&g) < 1e-5);
            }
        } else {
            stalls = 0;
        }
    }
}

/// Rescales the unit-norm blocks to norm one; the objective is invariant.
fn renormalize(obj: &Objective, mut x: Vec<f64>) -> Vec<f64> {
    let l = &obj.layout;
    let mut blocks = vec![(0, l.p)];
    if l.qs > 0 {
        blocks.push((l.off_r(), l.off_m()));
    }
    if l.off_s() > l.off_g() {
        blocks.push((l.off_g(), l.off_s()));
    }
    for (a, b) in blocks {
        let n = x[a..b].iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 0.0 && n.is_finite() {
            x[a..b].iter_mut().for_each(|v| *v /= n);
        }
    }
    x
}

pub(crate) fn minimize(obj: &mut Objective, x0: Vec<f64>, s: &Settings) -> Outcome {
    let mut budget = s.max_iter;
    let mut x = x0;
    let mut converged;
    if !obj.layout.constrained() {
        let (nx, c) = inner(obj, x, s, &mut budget);
        x = nx;
        converged = c;
    } else {
        obj.lambda.iter_mut().for_each(|l| *l = 0.0);
        // the likelihood curvature grows with kappa; so must the penalty
        obj.rho = 10.0 * obj.kappa_of(&x).max(1.0);
        let mut prev = f64::INFINITY;
        converged = false;
        for _ in 0..40 {
            let (nx, c) = inner(obj, x, s, &mut budget);
            x = nx;
            let e = obj.eval(&x, None);
            let viol = max_abs(&e.comm);
            if viol <= s.tol_constraint {
                converged = c;
                if c || budget == 0 {
                    break;
                }
            }
            if budget == 0 || !e.valid || (c && viol >= prev && obj.rho >= RHO_MAX) {
                break;
            }
            for (l, c) in obj.lambda.iter_mut().zip(&e.comm) {
                *l += obj.rho * c;
            }
            if viol > 0.1 * prev {
                obj.rho = (obj.rho * 10.0).min(RHO_MAX);
            }
            prev = viol;
        }
    }
    let mut g = vec![0.0; x.len()];
    let e = obj.eval(&x, Some(&mut g));
    Outcome {
        f: e.f,
        iterations: s.max_iter - budget,
        converged: converged && e.valid,
        grad_norm: max_abs(&g),
        constraint: max_abs(&e.comm),
        theta: x,
    }
}
