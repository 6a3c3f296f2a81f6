use ndarray::{Array1, Array2};

use super::{sigmoid, FitConfig, FitReport, LinearModel, Penalty};
use crate::data::{Dataset, Standardization, DISEASED};
use crate::error::{Error, Result};
use crate::roc::softplus;

/// Floor on the IRLS curvature `mu (1 - mu)`.
const MIN_CURVATURE: f64 = 1e-5;
const MAX_HALVINGS: usize = 60;

/// Intercept of the best intercept-only model: `log(J / (w K))`.
pub fn null_intercept(n_diseased: usize, n_non_diseased: usize, w: f64) -> f64 {
    (n_diseased as f64 / (w * n_non_diseased as f64)).ln()
}

/// A dataset prepared for coordinate descent: markers on the fitting scale
/// stored column-contiguously, 0/1 responses and class weights.
struct Problem {
    xt: Array2<f64>,
    y: Vec<f64>,
    v: Vec<f64>,
    excluded: Vec<bool>,
    standardization: Standardization,
    n_diseased: usize,
    n_non_diseased: usize,
}

impl Problem {
    fn new(data: &Dataset, config: &FitConfig) -> Self {
        let fitted = Standardization::fit(data.markers());
        let (x, standardization) = if config.standardize {
            (fitted.apply(data.markers()), fitted)
        } else {
            let mut id = Standardization::identity(data.n_markers());
            id.zero_variance = fitted.zero_variance;
            (data.markers().clone(), id)
        };
        let mut excluded = vec![false; data.n_markers()];
        for &j in &standardization.zero_variance {
            excluded[j] = true;
        }
        let y = data
            .labels()
            .iter()
            .map(|&l| if l == DISEASED { 1.0 } else { 0.0 })
            .collect();
        let v = data
            .labels()
            .iter()
            .map(|&l| config.class_weight(l))
            .collect();
        Problem {
            xt: x.t().as_standard_layout().into_owned(),
            y,
            v,
            excluded,
            standardization,
            n_diseased: data.n_diseased(),
            n_non_diseased: data.n_non_diseased(),
        }
    }

    fn n(&self) -> usize {
        self.y.len()
    }

    fn p(&self) -> usize {
        self.xt.nrows()
    }

    fn col(&self, j: usize) -> &[f64] {
        self.xt.row(j).to_slice().expect("row-major")
    }

    fn linear_predictor(&self, b0: f64, beta: &[f64]) -> Vec<f64> {
        let mut eta = vec![b0; self.n()];
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                for (e, &x) in eta.iter_mut().zip(self.col(j)) {
                    *e += b * x;
                }
            }
        }
        eta
    }

    fn objective(&self, eta: &[f64], beta: &[f64], penalty: &Penalty) -> f64 {
        let smooth: f64 = eta
            .iter()
            .zip(self.y.iter().zip(&self.v))
            .map(|(&f, (&y, &v))| v * if y > 0.5 { softplus(-f) } else { softplus(f) })
            .sum();
        smooth + penalty.value(beta)
    }

    fn lambda_max(&self) -> f64 {
        let total_v: f64 = self.v.iter().sum();
        let mu0 = self.y.iter().zip(&self.v).map(|(y, v)| y * v).sum::<f64>() / total_v;
        let r: Vec<f64> = self
            .y
            .iter()
            .zip(&self.v)
            .map(|(&y, &v)| v * (y - mu0))
            .collect();
        (0..self.p())
            .filter(|&j| !self.excluded[j])
            .map(|j| {
                self.col(j)
                    .iter()
                    .zip(&r)
                    .map(|(x, r)| x * r)
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0, f64::max)
    }
}

struct Solution {
    b0: f64,
    beta: Vec<f64>,
    iterations: usize,
    sweeps: usize,
    objective: f64,
    converged: bool,
    trace: Vec<f64>,
}

// Relative slack so that lambda_max itself, reproduced through the working
// residual only up to rounding, still zeroes every coefficient.
const THRESHOLD_SLACK: f64 = 1e-12;

#[inline]
fn soft_threshold(z: f64, gamma: f64) -> f64 {
    let gamma = gamma * (1.0 + THRESHOLD_SLACK);
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Coordinate descent on the weighted least-squares approximation around the
/// current iterate. `wr` holds `W_i * (z_i - eta_i)` and is kept in sync.
struct Inner<'a> {
    problem: &'a Problem,
    w: &'a [f64],
    h: &'a [f64],
    sum_w: f64,
    l1: f64,
    l2: f64,
}

impl Inner<'_> {
    fn sweep(&self, b0: &mut f64, beta: &mut [f64], wr: &mut [f64], active_only: bool) -> f64 {
        let mut max_change = 0.0f64;
        for j in 0..beta.len() {
            if self.problem.excluded[j] || (active_only && beta[j] == 0.0) {
                continue;
            }
            let denom = self.h[j] + self.l2;
            if denom <= 0.0 {
                continue;
            }
            let x = self.problem.col(j);
            let g: f64 = x.iter().zip(wr.iter()).map(|(x, r)| x * r).sum();
            let old = beta[j];
            let new = soft_threshold(g + self.h[j] * old, self.l1) / denom;
            if new != old {
                let d = new - old;
                for ((r, &wi), &xi) in wr.iter_mut().zip(self.w).zip(x) {
                    *r -= wi * xi * d;
                }
                beta[j] = new;
                max_change = max_change.max(d.abs());
            }
        }
        let d0 = wr.iter().sum::<f64>() / self.sum_w;
        if d0 != 0.0 {
            for (r, &wi) in wr.iter_mut().zip(self.w) {
                *r -= wi * d0;
            }
            *b0 += d0;
            max_change = max_change.max(d0.abs());
        }
        max_change
    }
}

fn solve(
    problem: &Problem,
    penalty: &Penalty,
    tol: f64,
    max_sweeps: usize,
    b0: f64,
    beta: Vec<f64>,
) -> Result<Solution> {
    let (n, p) = (problem.n(), problem.p());
    let (mut b0, mut beta) = (b0, beta);
    let mut eta = problem.linear_predictor(b0, &beta);
    let mut obj = problem.objective(&eta, &beta, penalty);
    if !obj.is_finite() {
        return Err(Error::NonFiniteLoss);
    }

    let mut w = vec![0.0; n];
    let mut wr = vec![0.0; n];
    let mut h = vec![0.0; p];
    let (mut sweeps, mut iterations, mut converged) = (0usize, 0usize, false);
    let mut trace = vec![obj];

    while sweeps < max_sweeps {
        iterations += 1;
        for i in 0..n {
            let mu = sigmoid(eta[i]);
            w[i] = problem.v[i] * (mu * (1.0 - mu)).max(MIN_CURVATURE);
            wr[i] = problem.v[i] * (problem.y[i] - mu);
        }
        let sum_w: f64 = w.iter().sum();
        for j in 0..p {
            h[j] = if problem.excluded[j] {
                0.0
            } else {
                problem
                    .col(j)
                    .iter()
                    .zip(&w)
                    .map(|(x, wi)| wi * x * x)
                    .sum()
            };
        }
        let inner = Inner {
            problem,
            w: &w,
            h: &h,
            sum_w,
            l1: penalty.l1(),
            l2: penalty.l2(),
        };

        let (mut nb0, mut nbeta) = (b0, beta.clone());
        'cd: loop {
            let full = inner.sweep(&mut nb0, &mut nbeta, &mut wr, false);
            sweeps += 1;
            if full < tol || sweeps >= max_sweeps {
                break;
            }
            loop {
                let act = inner.sweep(&mut nb0, &mut nbeta, &mut wr, true);
                sweeps += 1;
                if sweeps >= max_sweeps {
                    break 'cd;
                }
                if act < tol {
                    break;
                }
            }
        }

        // Damped step towards the minimizer of the quadratic model.
        let d0 = nb0 - b0;
        let d: Vec<f64> = nbeta.iter().zip(&beta).map(|(a, b)| a - b).collect();
        let dmax = d.iter().fold(d0.abs(), |m, x| m.max(x.abs()));
        if dmax < tol {
            let ceta = problem.linear_predictor(nb0, &nbeta);
            let cobj = problem.objective(&ceta, &nbeta, penalty);
            // Take the final polish unless it is worse beyond rounding.
            if cobj <= obj + 1e-13 * obj.abs().max(1.0) {
                b0 = nb0;
                beta = nbeta;
                obj = cobj;
                trace.push(obj);
            }
            converged = true;
            break;
        }
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let cb0 = b0 + step * d0;
            let cbeta: Vec<f64> = if step == 1.0 {
                nbeta.clone()
            } else {
                beta.iter().zip(&d).map(|(b, d)| b + step * d).collect()
            };
            let ceta = problem.linear_predictor(cb0, &cbeta);
            let cobj = problem.objective(&ceta, &cbeta, penalty);
            if !cobj.is_finite() {
                return Err(Error::NonFiniteLoss);
            }
            if cobj <= obj {
                b0 = cb0;
                beta = cbeta;
                eta = ceta;
                obj = cobj;
                trace.push(obj);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // No descent along the Newton direction at machine precision.
            break;
        }
        if step * dmax < tol {
            converged = true;
            break;
        }
    }

    Ok(Solution {
        b0,
        beta,
        iterations,
        sweeps,
        objective: obj,
        converged,
        trace,
    })
}

fn report(problem: &Problem, sol: Solution, config: &FitConfig, lambda: f64) -> FitReport {
    let fitted = LinearModel {
        intercept: sol.b0,
        coefficients: Array1::from(sol.beta),
        on_standardized_scale: config.standardize,
    };
    let model = if config.standardize {
        fitted.destandardize(&problem.standardization)
    } else {
        LinearModel {
            on_standardized_scale: false,
            ..fitted.clone()
        }
    };
    FitReport {
        active_set: fitted.active_set(),
        model,
        fitted,
        standardization: problem.standardization.clone(),
        lambda,
        iterations: sol.iterations,
        sweeps: sol.sweeps,
        final_loss: sol.objective,
        converged: sol.converged,
        objective_trace: sol.trace,
    }
}

/// Fits the penalized weighted logistic loss. Starts from the null model,
/// alternates IRLS quadratic approximations with cyclic coordinate descent
/// (soft-thresholding for l1), and damps each outer step so the objective
/// never increases. Stops when the largest coefficient change drops below
/// `tol` or the sweep budget runs out (`converged = false`, as happens for
/// separable data without a penalty).
pub fn fit(data: &Dataset, config: &FitConfig) -> Result<FitReport> {
    config.validate()?;
    let problem = Problem::new(data, config);
    let b0 = null_intercept(problem.n_diseased, problem.n_non_diseased, config.w);
    let sol = solve(
        &problem,
        &config.penalty,
        config.tol,
        config.max_iters,
        b0,
        vec![0.0; problem.p()],
    )?;
    Ok(report(&problem, sol, config, config.penalty.l1()))
}

/// [`fit`] started from `start`, which must be on the fitting scale (the
/// standardized scale when `config.standardize` is set).
pub fn fit_from(data: &Dataset, config: &FitConfig, start: &LinearModel) -> Result<FitReport> {
    config.validate()?;
    if start.n_markers() != data.n_markers() {
        return Err(Error::DimensionMismatch {
            expected: data.n_markers(),
            found: start.n_markers(),
        });
    }
    let problem = Problem::new(data, config);
    let mut beta = start.coefficients.to_vec();
    for (j, b) in beta.iter_mut().enumerate() {
        if problem.excluded[j] {
            *b = 0.0;
        }
    }
    let sol = solve(
        &problem,
        &config.penalty,
        config.tol,
        config.max_iters,
        start.intercept,
        beta,
    )?;
    Ok(report(&problem, sol, config, config.penalty.l1()))
}

/// Smallest l1 strength at which the all-zero coefficient vector is optimal,
/// on the fitting scale implied by `config.standardize`.
pub fn lambda_max(data: &Dataset, config: &FitConfig) -> Result<f64> {
    config.validate()?;
    Ok(Problem::new(data, config).lambda_max())
}

/// `n` values spaced geometrically from `lambda_max` down to
/// `min_ratio * lambda_max`.
pub fn default_lambda_path(lambda_max: f64, n: usize, min_ratio: f64) -> Vec<f64> {
    let top = if lambda_max > 0.0 { lambda_max } else { 1.0 };
    match n {
        0 => Vec::new(),
        1 => vec![top],
        _ => {
            let step = min_ratio.ln() / (n - 1) as f64;
            (0..n).map(|i| top * (step * i as f64).exp()).collect()
        }
    }
}

/// Fits the model at each l1 strength in `lambdas` (strictly descending,
/// positive), warm-starting every fit from the previous solution. Any l2
/// strength in `config.penalty` is kept fixed.
pub fn fit_path(data: &Dataset, config: &FitConfig, lambdas: &[f64]) -> Result<Vec<FitReport>> {
    config.validate()?;
    if lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidArgument(
            "lambdas must be positive and finite".into(),
        ));
    }
    if lambdas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(
            "lambdas must be strictly descending".into(),
        ));
    }
    let problem = Problem::new(data, config);
    let mut b0 = null_intercept(problem.n_diseased, problem.n_non_diseased, config.w);
    let mut beta = vec![0.0; problem.p()];
    let mut out = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let penalty = config.penalty.with_l1(lambda);
        let sol = solve(&problem, &penalty, config.tol, config.max_iters, b0, beta)?;
        b0 = sol.b0;
        beta = sol.beta.clone();
        out.push(report(&problem, sol, config, lambda));
    }
    Ok(out)
}

/// [`fit_path`] over [`default_lambda_path`] starting at [`lambda_max`].
pub fn fit_path_auto(
    data: &Dataset,
    config: &FitConfig,
    n_lambda: usize,
    min_ratio: f64,
) -> Result<Vec<FitReport>> {
    let lmax = lambda_max(data, config)?;
    fit_path(
        data,
        config,
        &default_lambda_path(lmax, n_lambda, min_ratio),
    )
}
