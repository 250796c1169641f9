//! Derivative-free and quasi-Newton minimizers, finite-difference
//! derivatives and the QML sandwich covariance.
//!
//! Objectives may return `+∞` (or NaN) to reject a point; both minimizers
//! treat such values as worse than any finite value and never accept them.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Outcome of a minimization.
#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Incumbent objective after every iteration; non-increasing.
    pub history: Vec<f64>,
    /// The stopping rule fired before the iteration cap.
    pub converged: bool,
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Finite-difference step for coordinate value `x`.
#[inline]
pub fn fd_step(x: f64) -> f64 {
    1e-5 * x.abs().max(1.0)
}

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub initial_step: f64,
    pub max_iter: usize,
    /// Stop when the spread of simplex values falls below this.
    pub ftol: f64,
    /// ... and the simplex diameter below this.
    pub xtol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            max_iter: 5000,
            ftol: 1e-10,
            xtol: 1e-8,
        }
    }
}

/// Nelder–Mead with the dimension-adaptive coefficients of Gao and Han.
pub fn nelder_mead<F>(f: F, x0: &[f64], opts: NelderMeadOptions) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let nf = n as f64;
    let (rho, chi, psi, sigma) = if n >= 2 {
        (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };
    let mut evals = 0usize;
    let mut eval = |x: &[f64]| {
        evals += 1;
        sanitize(f(x))
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = eval(x0);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += opts.initial_step;
        let fx = eval(&x);
        simplex.push((x, fx));
    }

    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let spread = if best.is_finite() && worst.is_finite() {
            worst - best
        } else {
            f64::INFINITY
        };
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread <= opts.ftol && diameter <= opts.xtol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / nf;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(rho);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(rho * chi);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = along(rho * psi);
                let fc = eval(&xc);
                (xc, fc)
            } else {
                let xc = along(-psi);
                let fc = eval(&xc);
                (xc, fc)
            };
            if fc < fr.min(simplex[n].1) {
                simplex[n] = (xc, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = x_best
                        .iter()
                        .zip(&vertex.0)
                        .map(|(b, v)| b + sigma * (v - b))
                        .collect();
                    let fx = eval(&x);
                    *vertex = (x, fx);
                }
            }
        }
        let incumbent = simplex.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
        history.push(incumbent);
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    Minimum {
        x,
        fx,
        iterations,
        evaluations: evals,
        history,
        converged,
    }
}

/// Central-difference gradient with steps from [`fd_step`].
pub fn fd_gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = fd_step(x[i]);
            xp[i] = x[i] + h;
            let up = f(&xp);
            xp[i] = x[i] - h;
            let down = f(&xp);
            xp[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Second differences use a step ten times [`fd_step`]: roundoff in them
/// scales with `1/h²`.
#[inline]
pub fn fd_hessian_step(x: f64) -> f64 {
    10.0 * fd_step(x)
}

/// Central-difference Hessian with steps from [`fd_hessian_step`].
pub fn fd_hessian<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let f0 = f(x);
    let h: Vec<f64> = x.iter().map(|&v| fd_hessian_step(v)).collect();
    let mut hess = DMatrix::zeros(n, n);
    let mut xp = x.to_vec();
    for i in 0..n {
        xp[i] = x[i] + h[i];
        let up = f(&xp);
        xp[i] = x[i] - h[i];
        let down = f(&xp);
        xp[i] = x[i];
        hess[(i, i)] = (up - 2.0 * f0 + down) / (h[i] * h[i]);
        for j in 0..i {
            let mut corner = |si: f64, sj: f64| {
                xp[i] = x[i] + si * h[i];
                xp[j] = x[j] + sj * h[j];
                let v = f(&xp);
                xp[i] = x[i];
                xp[j] = x[j];
                v
            };
            let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0))
                / (4.0 * h[i] * h[j]);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    hess
}

#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Stop when the largest gradient component falls below this.
    pub gtol: f64,
    /// Stop when an iteration lowers the objective by less than this.
    pub ftol: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            gtol: 1e-7,
            ftol: 1e-12,
        }
    }
}

/// BFGS on finite-difference gradients with a backtracking Armijo search.
pub fn bfgs<F>(f: F, x0: &[f64], opts: BfgsOptions) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evals = 0usize;
    let eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        sanitize(f(x))
    };
    let grad = |x: &[f64], evals: &mut usize| {
        *evals += 2 * n;
        DVector::from_vec(fd_gradient(&|y: &[f64]| sanitize(f(y)), x))
    };

    let mut x = DVector::from_column_slice(x0);
    let mut fx = eval(x.as_slice(), &mut evals);
    let mut history = Vec::new();
    if !fx.is_finite() {
        return Minimum {
            x: x0.to_vec(),
            fx,
            iterations: 0,
            evaluations: evals,
            history,
            converged: false,
        };
    }
    let mut g = grad(x.as_slice(), &mut evals);
    let mut h_inv = DMatrix::<f64>::identity(n, n);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        if !g.iter().all(|v| v.is_finite()) {
            break;
        }
        if g.amax() <= opts.gtol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut dir = -(&h_inv * &g);
        let mut slope = g.dot(&dir);
        if !(slope < 0.0) {
            h_inv = DMatrix::identity(n, n);
            dir = -g.clone();
            slope = -g.norm_squared();
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = &x + step * &dir;
            let ft = eval(trial.as_slice(), &mut evals);
            if ft.is_finite() && ft <= fx + 1e-4 * step * slope {
                accepted = Some((trial, ft));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            // No descent along a fresh steepest-descent direction either.
            if h_inv == DMatrix::identity(n, n) {
                converged = true;
                break;
            }
            h_inv = DMatrix::identity(n, n);
            history.push(fx);
            continue;
        };
        let g_new = grad(x_new.as_slice(), &mut evals);
        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            let rho = 1.0 / sy;
            let eye = DMatrix::<f64>::identity(n, n);
            let left = &eye - rho * &s * y.transpose();
            let right = &eye - rho * &y * s.transpose();
            h_inv = &left * &h_inv * &right + rho * &s * s.transpose();
        }
        let decrease = fx - f_new;
        x = x_new;
        fx = f_new;
        g = g_new;
        history.push(fx);
        if decrease < opts.ftol {
            converged = true;
            break;
        }
    }
    Minimum {
        x: x.as_slice().to_vec(),
        fx,
        iterations,
        evaluations: evals,
        history,
        converged,
    }
}

/// Hessians with a larger condition number are treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Largest over smallest singular value.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Robust standard errors `sqrt(diag(H⁻¹ · OPG · H⁻¹) / n)`.
///
/// `mean_loglik` is the average log-likelihood and `contributions` its
/// per-observation terms, both as functions of the parameter vector. `H` is
/// the finite-difference Hessian of the mean, `OPG` the mean outer product of
/// per-observation central-difference scores.
pub fn sandwich_se<L, C>(mean_loglik: L, contributions: C, theta: &[f64]) -> Result<Vec<f64>>
where
    L: Fn(&[f64]) -> f64,
    C: Fn(&[f64]) -> Vec<f64>,
{
    let k = theta.len();
    let hess = fd_hessian(&mean_loglik, theta);
    if !hess.iter().all(|v| v.is_finite()) {
        return Err(Error::NumericFault(
            "non-finite entry in the finite-difference Hessian".into(),
        ));
    }
    let cond = condition_number(&hess);
    if !(cond < MAX_CONDITION) {
        return Err(Error::Singular {
            condition: cond,
            context: "log-likelihood Hessian".into(),
        });
    }
    let h_inv = hess.clone().try_inverse().ok_or_else(|| Error::Singular {
        condition: cond,
        context: "log-likelihood Hessian".into(),
    })?;

    let mut xp = theta.to_vec();
    let mut scores: Vec<Vec<f64>> = Vec::with_capacity(k);
    for i in 0..k {
        let h = fd_step(theta[i]);
        xp[i] = theta[i] + h;
        let up = contributions(&xp);
        xp[i] = theta[i] - h;
        let down = contributions(&xp);
        xp[i] = theta[i];
        scores.push(up.iter().zip(&down).map(|(u, d)| (u - d) / (2.0 * h)).collect());
    }
    let n = scores.first().map_or(0, Vec::len);
    if n == 0 {
        return Err(Error::domain("sandwich covariance needs observations"));
    }
    let mut opg = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        for j in 0..=i {
            let v = scores[i].iter().zip(&scores[j]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
            opg[(i, j)] = v;
            opg[(j, i)] = v;
        }
    }
    let cov = &h_inv * opg * &h_inv / n as f64;
    let se: Vec<f64> = (0..k).map(|i| cov[(i, i)].max(0.0).sqrt()).collect();
    if !se.iter().all(|v| v.is_finite()) {
        return Err(Error::NumericFault("non-finite sandwich standard error".into()));
    }
    Ok(se)
}
