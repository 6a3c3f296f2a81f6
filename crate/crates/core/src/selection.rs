//! Cross-validated tuning of the non-diseased weight and the lasso penalty.
//!
//! Logistic push picks the weight `w` by stratified k-fold CV with held-out
//! pAUC as the objective; inside every outer training split a nested
//! stratified CV picks the lasso strength. The plain lasso baseline fixes
//! `w = 1` and picks the penalty by held-out logistic deviance.
//!
//! Every (weight, fold) pair is an independent work item; results are reduced
//! by index so the report does not depend on scheduling.

use serde::{Deserialize, Serialize};

use crate::data::{stratified_folds, Dataset};
use crate::error::{Error, Result};
use crate::glm::{
    default_lambda_path, fit_path, lambda_max, predict, FitConfig, ModelFile, Penalty,
};
use crate::json::format_g17;
use crate::par;
use crate::roc::{pauc_estimate, softplus, PaucResult, PaucSpec, TiePolicy};
use crate::seed;

/// Default weight grid for logistic push.
pub const DEFAULT_WEIGHTS: [f64; 10] = [1.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 16.0, 20.0, 24.0];

/// Criterion for choosing the penalty strength.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// Maximize mean held-out pAUC.
    #[default]
    Pauc,
    /// Minimize mean held-out weighted logistic deviance.
    Deviance,
}

impl std::fmt::Display for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Objective::Pauc => "pauc",
            Objective::Deviance => "deviance",
        })
    }
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pauc" => Ok(Objective::Pauc),
            "deviance" => Ok(Objective::Deviance),
            other => Err(Error::InvalidArgument(format!(
                "unknown objective `{other}`"
            ))),
        }
    }
}

/// Penalty strengths to search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LambdaGrid {
    /// Geometric path from the training data's `lambda_max` down to
    /// `min_ratio * lambda_max`.
    Auto { n_lambda: usize, min_ratio: f64 },
    /// Explicit strictly descending values.
    Fixed { lambdas: Vec<f64> },
}

impl Default for LambdaGrid {
    fn default() -> Self {
        LambdaGrid::Auto {
            n_lambda: 100,
            min_ratio: 1e-3,
        }
    }
}

impl LambdaGrid {
    fn resolve(&self, data: &Dataset, config: &FitConfig) -> Result<Vec<f64>> {
        match self {
            LambdaGrid::Auto {
                n_lambda,
                min_ratio,
            } => Ok(default_lambda_path(
                lambda_max(data, config)?,
                *n_lambda,
                *min_ratio,
            )),
            LambdaGrid::Fixed { lambdas } => Ok(lambdas.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpec {
    /// Ascending, every entry >= 1.
    pub weight_grid: Vec<f64>,
    pub lambda_grid: LambdaGrid,
    pub outer_k: usize,
    pub inner_k: usize,
    pub pauc: PaucSpec,
    pub seed: u64,
    pub objective: Objective,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SearchSpec {
    fn default() -> Self {
        SearchSpec {
            weight_grid: DEFAULT_WEIGHTS.to_vec(),
            lambda_grid: LambdaGrid::default(),
            outer_k: 5,
            inner_k: 5,
            pauc: PaucSpec {
                t: 0.2,
                tie_policy: TiePolicy::HalfCredit,
            },
            seed: 0,
            objective: Objective::Pauc,
            tol: 1e-7,
            max_iters: 100_000,
        }
    }
}

impl SearchSpec {
    pub fn validate(&self) -> Result<()> {
        if self.weight_grid.is_empty() {
            return Err(Error::InvalidArgument("weight grid is empty".into()));
        }
        if self
            .weight_grid
            .iter()
            .any(|&w| !(w >= 1.0 && w.is_finite()))
        {
            return Err(Error::InvalidArgument(
                "weights must be finite and >= 1".into(),
            ));
        }
        if self.weight_grid.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::InvalidArgument(
                "weight grid must be strictly ascending".into(),
            ));
        }
        match &self.lambda_grid {
            LambdaGrid::Auto {
                n_lambda,
                min_ratio,
            } => {
                if *n_lambda == 0 || !(*min_ratio > 0.0 && *min_ratio < 1.0) {
                    return Err(Error::InvalidArgument(
                        "auto path needs n_lambda >= 1 and min_ratio in (0, 1)".into(),
                    ));
                }
            }
            LambdaGrid::Fixed { lambdas } => {
                if lambdas.is_empty()
                    || lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite()))
                    || lambdas.windows(2).any(|p| p[1] >= p[0])
                {
                    return Err(Error::InvalidArgument(
                        "lambda grid must be non-empty, positive, strictly descending".into(),
                    ));
                }
            }
        }
        if self.outer_k < 2 || self.inner_k < 2 {
            return Err(Error::InvalidArgument(
                "fold counts must be at least 2".into(),
            ));
        }
        PaucSpec::new(self.pauc.t, self.pauc.tie_policy)?;
        Ok(())
    }

    fn fit_config(&self, w: f64) -> FitConfig {
        FitConfig {
            w,
            penalty: Penalty::None,
            max_iters: self.max_iters,
            tol: self.tol,
            standardize: true,
        }
    }
}

/// Held-out pAUC for one (weight, outer fold) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldScore {
    pub w: f64,
    pub fold: usize,
    pub pauc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldLambda {
    pub w: f64,
    pub fold: usize,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightScore {
    pub w: f64,
    pub mean_pauc: f64,
}

/// Mean CV objective at one penalty strength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaScore {
    pub lambda: f64,
    pub mean_pauc: f64,
    pub mean_deviance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub method: String,
    pub objective: Objective,
    /// One row per (weight, outer fold), weight-major.
    pub scores: Vec<FoldScore>,
    pub mean_scores: Vec<WeightScore>,
    pub per_fold_lambdas: Vec<FoldLambda>,
    pub chosen_w: f64,
    pub chosen_lambda: f64,
    /// CV curve behind `chosen_lambda`.
    pub lambda_curve: Vec<LambdaScore>,
    pub final_model: ModelFile,
    pub final_converged: bool,
    pub selected_markers: Vec<String>,
    /// Indices of `selected_markers` in the data's column order.
    pub selected_indices: Vec<usize>,
}

impl CvReport {
    /// Outer score table as `w,fold,pauc,lambda`.
    pub fn scores_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["w", "fold", "pauc", "lambda"])?;
        for (s, l) in self.scores.iter().zip(&self.per_fold_lambdas) {
            w.write_record([
                format_g17(s.w),
                s.fold.to_string(),
                format_g17(s.pauc),
                format_g17(l.lambda),
            ])?;
        }
        crate::simulation::finish_csv(w)
    }
}

struct LambdaCv {
    lambdas: Vec<f64>,
    /// `[fold][lambda]`
    pauc: Vec<Vec<f64>>,
    deviance: Vec<Vec<f64>>,
    chosen: usize,
}

impl LambdaCv {
    fn curve(&self) -> Vec<LambdaScore> {
        let k = self.pauc.len() as f64;
        (0..self.lambdas.len())
            .map(|l| LambdaScore {
                lambda: self.lambdas[l],
                mean_pauc: self.pauc.iter().map(|f| f[l]).sum::<f64>() / k,
                mean_deviance: self.deviance.iter().map(|f| f[l]).sum::<f64>() / k,
            })
            .collect()
    }
}

/// Mean weighted logistic deviance of `scores` on held-out labels.
fn mean_deviance(scores: &[f64], labels: &[i8], w: f64) -> f64 {
    let total: f64 = scores
        .iter()
        .zip(labels)
        .map(|(&f, &l)| {
            if l == crate::data::DISEASED {
                softplus(-f)
            } else {
                w * softplus(f)
            }
        })
        .sum();
    2.0 * total / scores.len() as f64
}

/// Picks the first (largest, most regularized) lambda reaching the best mean.
fn argbest(values: &[f64], maximize: bool) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        let better = if maximize {
            v > values[best]
        } else {
            v < values[best]
        };
        if better {
            best = i;
        }
    }
    best
}

/// k-fold CV over a shared lambda grid resolved on `data`.
fn cv_lambda(
    data: &Dataset,
    config: &FitConfig,
    spec: &SearchSpec,
    fold_seed: u64,
) -> Result<LambdaCv> {
    let lambdas = spec.lambda_grid.resolve(data, config)?;
    let folds = stratified_folds(data, spec.inner_k, fold_seed)?;
    let per_fold = par::try_map_indexed(spec.inner_k, |f| -> Result<(Vec<f64>, Vec<f64>)> {
        let train = data.subset(&folds.train_indices(f))?;
        let test = data.subset(&folds.test_indices(f))?;
        let path = fit_path(&train, config, &lambdas)?;
        let mut pauc = Vec::with_capacity(path.len());
        let mut dev = Vec::with_capacity(path.len());
        for report in &path {
            let s = predict(&report.model, test.markers())?;
            let s = s.as_slice().expect("contiguous");
            pauc.push(pauc_estimate(s, test.labels(), &spec.pauc)?.value);
            dev.push(mean_deviance(s, test.labels(), config.w));
        }
        Ok((pauc, dev))
    })?;
    let (pauc, deviance): (Vec<_>, Vec<_>) = per_fold.into_iter().unzip();
    let mut out = LambdaCv {
        lambdas,
        pauc,
        deviance,
        chosen: 0,
    };
    let curve = out.curve();
    out.chosen = match spec.objective {
        Objective::Pauc => argbest(&curve.iter().map(|c| c.mean_pauc).collect::<Vec<_>>(), true),
        Objective::Deviance => argbest(
            &curve.iter().map(|c| c.mean_deviance).collect::<Vec<_>>(),
            false,
        ),
    };
    Ok(out)
}

/// Refits along the grid down to `chosen` (warm starts) and returns the last fit.
fn refit(data: &Dataset, config: &FitConfig, cv: &LambdaCv) -> Result<crate::glm::FitReport> {
    let mut path = fit_path(data, config, &cv.lambdas[..=cv.chosen])?;
    Ok(path.pop().expect("non-empty path"))
}

fn check_feasible(data: &Dataset, outer_k: Option<usize>, inner_k: usize) -> Result<()> {
    for (class, n) in [
        ("diseased", data.n_diseased()),
        ("non-diseased", data.n_non_diseased()),
    ] {
        let min_train = match outer_k {
            Some(k) => {
                if n < k {
                    return Err(Error::InfeasibleFolds(format!(
                        "{n} {class} subjects cannot fill {k} outer folds"
                    )));
                }
                n - n.div_ceil(k)
            }
            None => n,
        };
        if min_train < inner_k {
            return Err(Error::InfeasibleFolds(format!(
                "{class} training split of {min_train} cannot fill {inner_k} inner folds"
            )));
        }
    }
    Ok(())
}

fn finish(
    data: &Dataset,
    method: &str,
    spec: &SearchSpec,
    scores: Vec<FoldScore>,
    per_fold_lambdas: Vec<FoldLambda>,
    chosen_w: f64,
    final_cv: &LambdaCv,
) -> Result<CvReport> {
    let config = spec.fit_config(chosen_w);
    let report = refit(data, &config, final_cv)?;
    let chosen_lambda = final_cv.lambdas[final_cv.chosen];
    let echo = FitConfig {
        penalty: Penalty::Lasso {
            lambda1: chosen_lambda,
        },
        ..config
    };
    let final_model = ModelFile::from_report(&report, data.marker_names(), &echo)?;
    let selected_indices = report.model.active_set();
    let selected_markers = selected_indices
        .iter()
        .map(|&j| data.marker_names()[j].clone())
        .collect();

    let mut mean_scores = Vec::new();
    for w in scores
        .iter()
        .map(|s| s.w)
        .fold(Vec::<f64>::new(), |mut acc, w| {
            if acc.last() != Some(&w) {
                acc.push(w);
            }
            acc
        })
    {
        let cells: Vec<f64> = scores.iter().filter(|s| s.w == w).map(|s| s.pauc).collect();
        mean_scores.push(WeightScore {
            w,
            mean_pauc: cells.iter().sum::<f64>() / cells.len() as f64,
        });
    }

    Ok(CvReport {
        method: method.to_string(),
        objective: spec.objective,
        scores,
        mean_scores,
        per_fold_lambdas,
        chosen_w,
        chosen_lambda,
        lambda_curve: final_cv.curve(),
        final_model,
        final_converged: report.converged,
        selected_markers,
        selected_indices,
    })
}

/// Logistic push tuning: outer stratified CV over the weight grid with
/// held-out pAUC, nested stratified CV for the penalty inside every outer
/// training split. The chosen weight maximizes mean outer pAUC (smallest
/// weight on ties); the final penalty comes from a fresh CV on all data at
/// that weight, and the final model is refit on all data.
pub fn select_weight_and_lambda(data: &Dataset, spec: &SearchSpec) -> Result<CvReport> {
    spec.validate()?;
    check_feasible(data, Some(spec.outer_k), spec.inner_k)?;
    let outer = stratified_folds(data, spec.outer_k, spec.seed)?;
    let n_w = spec.weight_grid.len();

    let cells = par::try_map_indexed(n_w * spec.outer_k, |cell| -> Result<(f64, f64)> {
        let (wi, fold) = (cell / spec.outer_k, cell % spec.outer_k);
        let config = spec.fit_config(spec.weight_grid[wi]);
        let train = data.subset(&outer.train_indices(fold))?;
        let test = data.subset(&outer.test_indices(fold))?;
        // Inner folds depend on the outer fold only, so every weight sees
        // the same inner partition.
        let cv = cv_lambda(
            &train,
            &config,
            spec,
            seed::derive(spec.seed, 1 + fold as u64),
        )?;
        let model = refit(&train, &config, &cv)?.model;
        let s = predict(&model, test.markers())?;
        let value =
            pauc_estimate(s.as_slice().expect("contiguous"), test.labels(), &spec.pauc)?.value;
        Ok((value, cv.lambdas[cv.chosen]))
    })?;

    let mut scores = Vec::with_capacity(cells.len());
    let mut per_fold_lambdas = Vec::with_capacity(cells.len());
    for (cell, &(pauc, lambda)) in cells.iter().enumerate() {
        let (w, fold) = (spec.weight_grid[cell / spec.outer_k], cell % spec.outer_k);
        scores.push(FoldScore { w, fold, pauc });
        per_fold_lambdas.push(FoldLambda { w, fold, lambda });
    }

    let mut chosen_w = spec.weight_grid[0];
    let mut best = f64::NEG_INFINITY;
    for (wi, &w) in spec.weight_grid.iter().enumerate() {
        let mean = cells[wi * spec.outer_k..(wi + 1) * spec.outer_k]
            .iter()
            .map(|c| c.0)
            .sum::<f64>()
            / spec.outer_k as f64;
        if mean > best {
            best = mean;
            chosen_w = w;
        }
    }

    let final_cv = cv_lambda(
        data,
        &spec.fit_config(chosen_w),
        spec,
        seed::derive(spec.seed, 0),
    )?;
    finish(
        data,
        "logistic-push",
        spec,
        scores,
        per_fold_lambdas,
        chosen_w,
        &final_cv,
    )
}

/// Standard logistic lasso: `w = 1`, penalty chosen by `inner_k`-fold
/// stratified CV minimizing mean held-out logistic deviance, refit on all
/// data. The score table holds each fold's held-out pAUC at the chosen penalty.
pub fn baseline_lasso(data: &Dataset, spec: &SearchSpec) -> Result<CvReport> {
    spec.validate()?;
    check_feasible(data, None, spec.inner_k)?;
    let spec = SearchSpec {
        weight_grid: vec![1.0],
        objective: Objective::Deviance,
        ..spec.clone()
    };
    let cv = cv_lambda(
        data,
        &spec.fit_config(1.0),
        &spec,
        seed::derive(spec.seed, 0),
    )?;
    let lambda = cv.lambdas[cv.chosen];
    let scores = cv
        .pauc
        .iter()
        .enumerate()
        .map(|(fold, row)| FoldScore {
            w: 1.0,
            fold,
            pauc: row[cv.chosen],
        })
        .collect();
    let per_fold_lambdas = (0..spec.inner_k)
        .map(|fold| FoldLambda {
            w: 1.0,
            fold,
            lambda,
        })
        .collect();
    finish(data, "lasso", &spec, scores, per_fold_lambdas, 1.0, &cv)
}

/// Scores an untouched test set with a saved model and estimates pAUC.
/// Columns are matched by marker name.
pub fn evaluate_external(model: &ModelFile, test: &Dataset, pauc: &PaucSpec) -> Result<PaucResult> {
    let aligned = test.align_columns(&model.marker_names())?;
    let s = predict(&model.model(), aligned.markers())?;
    pauc_estimate(s.as_slice().expect("contiguous"), aligned.labels(), pauc)
}
