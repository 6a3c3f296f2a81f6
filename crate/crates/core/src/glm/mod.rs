//! Weighted, penalized logistic regression ("logistic push").
//!
//! The fitted objective is
//!
//! ```text
//! sum_j log(1 + exp(-f(x_j))) + w * sum_k log(1 + exp(f(x_k)))
//!     + l1 * |beta|_1 + (l2 / 2) * |beta|_2^2
//! ```
//!
//! with `f(x) = b0 + beta'x`, diseased subjects `j`, non-diseased subjects `k`
//! and an unpenalized intercept. Fitting uses IRLS with cyclic coordinate
//! descent; see [`fit`] and [`fit_path`].

mod model_file;
mod solver;

pub use model_file::{ModelFile, NamedCoefficient, ScaleEcho};
pub use solver::{
    default_lambda_path, fit, fit_from, fit_path, fit_path_auto, lambda_max, null_intercept,
};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Standardization, DISEASED};
use crate::error::{Error, Result};
use crate::roc::softplus;

/// Coefficient penalty.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Penalty {
    #[default]
    None,
    Lasso {
        lambda1: f64,
    },
    /// `(lambda2 / 2) * |beta|^2`
    Ridge {
        lambda2: f64,
    },
    ElasticNet {
        lambda1: f64,
        lambda2: f64,
    },
}

impl Penalty {
    pub fn l1(&self) -> f64 {
        match *self {
            Penalty::Lasso { lambda1 } | Penalty::ElasticNet { lambda1, .. } => lambda1,
            _ => 0.0,
        }
    }

    pub fn l2(&self) -> f64 {
        match *self {
            Penalty::Ridge { lambda2 } | Penalty::ElasticNet { lambda2, .. } => lambda2,
            _ => 0.0,
        }
    }

    /// The same penalty with its l1 strength replaced (ridge becomes
    /// elastic net, none becomes lasso).
    pub fn with_l1(&self, lambda1: f64) -> Penalty {
        match self.l2() {
            l2 if l2 > 0.0 => Penalty::ElasticNet {
                lambda1,
                lambda2: l2,
            },
            _ => Penalty::Lasso { lambda1 },
        }
    }

    pub fn value(&self, coefficients: &[f64]) -> f64 {
        let (l1, l2) = (self.l1(), self.l2());
        let mut v = 0.0;
        if l1 > 0.0 {
            v += l1 * coefficients.iter().map(|b| b.abs()).sum::<f64>();
        }
        if l2 > 0.0 {
            v += 0.5 * l2 * coefficients.iter().map(|b| b * b).sum::<f64>();
        }
        v
    }

    fn validate(&self) -> Result<()> {
        let (l1, l2) = (self.l1(), self.l2());
        if !(l1 >= 0.0 && l1.is_finite() && l2 >= 0.0 && l2.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "penalty strengths must be finite and >= 0: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Settings for a single fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Weight on every non-diseased observation.
    pub w: f64,
    pub penalty: Penalty,
    /// Budget of coordinate-descent sweeps.
    pub max_iters: usize,
    /// Convergence tolerance on the largest absolute coefficient change.
    pub tol: f64,
    pub standardize: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            w: 1.0,
            penalty: Penalty::None,
            max_iters: 100_000,
            tol: 1e-7,
            standardize: true,
        }
    }
}

impl FitConfig {
    pub fn new(w: f64, penalty: Penalty) -> Self {
        FitConfig {
            w,
            penalty,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.w >= 1.0 && self.w.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "weight w must be >= 1, got {}",
                self.w
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be > 0, got {}",
                self.tol
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be positive".into()));
        }
        self.penalty.validate()
    }

    /// Observation weight: 1 for diseased, `w` otherwise.
    #[inline]
    pub fn class_weight(&self, label: i8) -> f64 {
        if label == DISEASED {
            1.0
        } else {
            self.w
        }
    }
}

/// `f(x) = intercept + coefficients . x`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub coefficients: Array1<f64>,
    pub on_standardized_scale: bool,
}

impl LinearModel {
    pub fn zeros(p: usize) -> Self {
        LinearModel {
            intercept: 0.0,
            coefficients: Array1::zeros(p),
            on_standardized_scale: false,
        }
    }

    pub fn n_markers(&self) -> usize {
        self.coefficients.len()
    }

    /// Indices of nonzero coefficients.
    pub fn active_set(&self) -> Vec<usize> {
        self.coefficients
            .iter()
            .enumerate()
            .filter(|(_, &b)| b != 0.0)
            .map(|(j, _)| j)
            .collect()
    }

    pub fn destandardize(&self, st: &Standardization) -> LinearModel {
        let (intercept, coefficients) = st.destandardize(self.intercept, &self.coefficients);
        LinearModel {
            intercept,
            coefficients,
            on_standardized_scale: false,
        }
    }
}

/// Results of [`fit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Model on the raw marker scale.
    pub model: LinearModel,
    /// The same model on the scale the optimizer worked on.
    pub fitted: LinearModel,
    pub standardization: Standardization,
    /// l1 strength actually used.
    pub lambda: f64,
    /// Outer IRLS iterations.
    pub iterations: usize,
    /// Coordinate-descent sweeps (the budget `max_iters` counts these).
    pub sweeps: usize,
    /// Penalized objective on the fitting scale.
    pub final_loss: f64,
    pub converged: bool,
    pub active_set: Vec<usize>,
    /// Penalized objective at the start and after every accepted outer step.
    pub objective_trace: Vec<f64>,
}

/// Linear scores for every row of `markers`.
pub fn predict(model: &LinearModel, markers: &Array2<f64>) -> Result<Array1<f64>> {
    if markers.ncols() != model.n_markers() {
        return Err(Error::DimensionMismatch {
            expected: model.n_markers(),
            found: markers.ncols(),
        });
    }
    Ok(markers.dot(&model.coefficients) + model.intercept)
}

fn check_dims(model: &LinearModel, data: &Dataset) -> Result<()> {
    if data.n_markers() != model.n_markers() {
        return Err(Error::DimensionMismatch {
            expected: model.n_markers(),
            found: data.n_markers(),
        });
    }
    Ok(())
}

/// Penalized weighted logistic loss of `model` on `data` (scales must match).
pub fn weighted_logistic_loss(
    model: &LinearModel,
    data: &Dataset,
    config: &FitConfig,
) -> Result<f64> {
    check_dims(model, data)?;
    let eta = predict(model, data.markers())?;
    let smooth: f64 = eta
        .iter()
        .zip(data.labels())
        .map(|(&f, &l)| {
            if l == DISEASED {
                softplus(-f)
            } else {
                config.w * softplus(f)
            }
        })
        .sum();
    Ok(smooth
        + config
            .penalty
            .value(model.coefficients.as_slice().expect("contiguous")))
}

/// Logistic function without overflow.
#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Gradient of the unpenalized weighted loss.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub intercept: f64,
    pub coefficients: Array1<f64>,
}

/// Gradient of the smooth part of [`weighted_logistic_loss`]:
/// `sum_i v_i (mu_i - y_i) (1, x_i)` with `y_i` in {0, 1} and class weights `v_i`.
pub fn loss_gradient(model: &LinearModel, data: &Dataset, config: &FitConfig) -> Result<Gradient> {
    check_dims(model, data)?;
    let eta = predict(model, data.markers())?;
    let resid: Array1<f64> = eta
        .iter()
        .zip(data.labels())
        .map(|(&f, &l)| {
            let y = if l == DISEASED { 1.0 } else { 0.0 };
            config.class_weight(l) * (sigmoid(f) - y)
        })
        .collect();
    Ok(Gradient {
        intercept: resid.sum(),
        coefficients: data.markers().t().dot(&resid),
    })
}

/// Largest violation of the lasso / elastic-net optimality conditions for
/// `model` on `data` (same scale): for `beta_j = 0`, `|g_j| <= l1`; otherwise
/// `g_j + l2 beta_j = -l1 sign(beta_j)`; and a zero intercept gradient.
/// `excluded` columns are skipped.
pub fn kkt_violation(
    model: &LinearModel,
    data: &Dataset,
    config: &FitConfig,
    excluded: &[usize],
) -> Result<f64> {
    let g = loss_gradient(model, data, config)?;
    let (l1, l2) = (config.penalty.l1(), config.penalty.l2());
    let mut worst = g.intercept.abs();
    for (j, (&gj, &bj)) in g
        .coefficients
        .iter()
        .zip(model.coefficients.iter())
        .enumerate()
    {
        if excluded.contains(&j) {
            continue;
        }
        let v = if bj == 0.0 {
            (gj.abs() - l1).max(0.0)
        } else {
            (gj + l2 * bj + l1 * bj.signum()).abs()
        };
        worst = worst.max(v);
    }
    Ok(worst)
}
