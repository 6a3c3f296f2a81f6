//! Partial-AUC oriented classifiers built from weighted, penalized logistic
//! regression ("logistic push").
//!
//! Non-diseased observations get weight `w >= 1` in a lasso-penalized
//! logistic regression, which pushes high-scoring non-diseased subjects down
//! the ranked list and so raises the partial area under the ROC curve at
//! low false positive rates. `w` and the penalty are tuned by nested
//! stratified cross-validation on held-out partial AUC.
//!
//! ```no_run
//! use pauc_push::{data, selection, roc::PaucSpec};
//!
//! # fn main() -> pauc_push::Result<()> {
//! let d = data::load_csv("markers.csv", "status", "case")?;
//! let report = selection::select_weight_and_lambda(&d, &selection::SearchSpec::default())?;
//! println!("w = {}, lambda = {}", report.chosen_w, report.chosen_lambda);
//! let test = data::load_csv("test.csv", "status", "case")?;
//! let res = selection::evaluate_external(&report.final_model, &test, &PaucSpec::half_credit(0.2)?)?;
//! println!("external pAUC(0.2) = {}", res.value);
//! # Ok(())
//! # }
//! ```

pub mod data;
pub mod error;
pub mod glm;
pub mod json;
pub mod par;
pub mod roc;
pub mod seed;
pub mod selection;
pub mod simulation;

pub use data::{Dataset, FoldAssignment, Standardization};
pub use error::{Error, Result};
pub use glm::{FitConfig, FitReport, LinearModel, ModelFile, Penalty};
pub use roc::{PaucResult, PaucSpec, RocCurve, TiePolicy};
pub use selection::{CvReport, LambdaGrid, Objective, SearchSpec};
pub use simulation::{BenchReport, BinormalParams, SimDesign};
