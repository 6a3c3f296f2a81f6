//! Synthetic marker-selection benchmark.
//!
//! Two informative blocks of markers share the same AUC but differ in the
//! shape of their ROC curves: "Score A" markers have a steep early ROC (high
//! partial AUC at low false positive rates), "Score B" markers a symmetric
//! binormal ROC. The remaining markers are standard normal noise. Each
//! replicate draws a training and an i.i.d. test set, tunes logistic push and
//! the lasso baseline on the training set, and scores both on the test set.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{Dataset, DISEASED, NON_DISEASED};
use crate::error::{Error, Result};
use crate::json::format_g17;
use crate::par;
use crate::seed;
use crate::selection::{baseline_lasso, evaluate_external, select_weight_and_lambda, SearchSpec};

/// Class-conditional normal distributions of one marker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinormalParams {
    pub mu_d: f64,
    pub sigma_d: f64,
    pub mu_n: f64,
    pub sigma_n: f64,
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("valid")
}

impl BinormalParams {
    /// Non-diseased N(0, 1); diseased N(mu_d, sigma_d^2) with `mu_d` set so
    /// the AUC equals `auc`.
    pub fn with_auc(auc: f64, sigma_d: f64) -> Self {
        let z = std_normal().inverse_cdf(auc);
        BinormalParams {
            mu_d: z * (1.0 + sigma_d * sigma_d).sqrt(),
            sigma_d,
            mu_n: 0.0,
            sigma_n: 1.0,
        }
    }

    /// Steep early ROC: diseased values are more dispersed than non-diseased.
    pub fn score_a() -> Self {
        Self::with_auc(0.75, 3.0)
    }

    /// Symmetric binormal ROC.
    pub fn score_b() -> Self {
        Self::with_auc(0.75, 1.0)
    }

    /// `TPR` at false positive rate `u`.
    pub fn roc(&self, u: f64) -> f64 {
        let n = std_normal();
        n.cdf((self.mu_d - self.mu_n + self.sigma_n * n.inverse_cdf(u)) / self.sigma_d)
    }

    /// Area under the ROC curve over false positive rates `(0, t)`, by
    /// composite Simpson integration over the non-diseased threshold scale:
    /// `int_{z_t}^inf phi(z) P(D > mu_n + sigma_n z) dz`.
    pub fn pauc(&self, t: f64) -> f64 {
        const HALF_WIDTH: f64 = 12.0;
        const INTERVALS: usize = 40_000;
        let n = std_normal();
        let lo = if t >= 1.0 {
            -HALF_WIDTH
        } else {
            n.inverse_cdf(1.0 - t).max(-HALF_WIDTH)
        };
        let hi = HALF_WIDTH;
        if lo >= hi {
            return 0.0;
        }
        let f = |z: f64| {
            let c = self.mu_n + self.sigma_n * z;
            let density = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
            density * (1.0 - n.cdf((c - self.mu_d) / self.sigma_d))
        };
        let h = (hi - lo) / INTERVALS as f64;
        let mut sum = f(lo) + f(hi);
        for i in 1..INTERVALS {
            let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += weight * f(lo + i as f64 * h);
        }
        sum * h / 3.0
    }

    pub fn auc(&self) -> f64 {
        self.pauc(1.0)
    }

    fn validate(&self) -> Result<()> {
        let ok = [self.mu_d, self.mu_n].iter().all(|v| v.is_finite())
            && [self.sigma_d, self.sigma_n]
                .iter()
                .all(|s| *s > 0.0 && s.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "invalid binormal parameters {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimDesign {
    pub n_diseased: usize,
    pub n_non_diseased: usize,
    pub n_score_a: usize,
    pub n_score_b: usize,
    pub n_noise: usize,
    pub score_a_params: BinormalParams,
    pub score_b_params: BinormalParams,
    pub replicates: usize,
    pub seed: u64,
    /// Shuffle labels of every generated dataset (null benchmark).
    #[serde(default)]
    pub permute_labels: bool,
}

impl Default for SimDesign {
    fn default() -> Self {
        SimDesign {
            n_diseased: 50,
            n_non_diseased: 50,
            n_score_a: 3,
            n_score_b: 3,
            n_noise: 500,
            score_a_params: BinormalParams::score_a(),
            score_b_params: BinormalParams::score_b(),
            replicates: 100,
            seed: 0,
            permute_labels: false,
        }
    }
}

/// Numerically integrated AUC and pAUC of both informative blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignAudit {
    pub t: f64,
    pub auc_a: f64,
    pub auc_b: f64,
    pub pauc_a: f64,
    pub pauc_b: f64,
}

impl DesignAudit {
    /// Both AUCs within 0.005 of 0.75 and Score A ahead on pAUC.
    pub fn passes(&self) -> bool {
        (self.auc_a - 0.75).abs() <= 0.005
            && (self.auc_b - 0.75).abs() <= 0.005
            && self.pauc_a > self.pauc_b
    }
}

impl SimDesign {
    pub fn n_markers(&self) -> usize {
        self.n_score_a + self.n_score_b + self.n_noise
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_diseased == 0 || self.n_non_diseased == 0 {
            return Err(Error::InvalidArgument(
                "both classes need at least one subject".into(),
            ));
        }
        if self.n_markers() == 0 {
            return Err(Error::InvalidArgument("design has no markers".into()));
        }
        self.score_a_params.validate()?;
        self.score_b_params.validate()
    }

    pub fn audit(&self, t: f64) -> DesignAudit {
        DesignAudit {
            t,
            auc_a: self.score_a_params.auc(),
            auc_b: self.score_b_params.auc(),
            pauc_a: self.score_a_params.pauc(t),
            pauc_b: self.score_b_params.pauc(t),
        }
    }

    /// Names `X1..Xp`: Score-A block, then Score-B, then noise.
    pub fn marker_names(&self) -> Vec<String> {
        (1..=self.n_markers()).map(|j| format!("X{j}")).collect()
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Result<Dataset> {
        let n = self.n_diseased + self.n_non_diseased;
        let p = self.n_markers();
        let mut labels: Vec<i8> = (0..n)
            .map(|i| {
                if i < self.n_diseased {
                    DISEASED
                } else {
                    NON_DISEASED
                }
            })
            .collect();
        let mut x = Array2::zeros((n, p));
        for i in 0..n {
            let diseased = labels[i] == DISEASED;
            for j in 0..p {
                let z: f64 = rng.sample(StandardNormal);
                x[[i, j]] = if j < self.n_score_a + self.n_score_b {
                    let prm = if j < self.n_score_a {
                        &self.score_a_params
                    } else {
                        &self.score_b_params
                    };
                    if diseased {
                        prm.mu_d + prm.sigma_d * z
                    } else {
                        prm.mu_n + prm.sigma_n * z
                    }
                } else {
                    z
                };
            }
        }
        if self.permute_labels {
            labels.shuffle(rng);
        }
        Dataset::new(labels, x, self.marker_names())
    }
}

/// Draws a training set and an independent test set of the same design.
pub fn generate(design: &SimDesign, seed: u64) -> Result<(Dataset, Dataset)> {
    design.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let train = design.draw(&mut rng)?;
    let test = design.draw(&mut rng)?;
    Ok((train, test))
}

/// One method's outcome on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRow {
    pub replicate: usize,
    pub seed: u64,
    pub method: String,
    pub chosen_w: f64,
    pub chosen_lambda: f64,
    pub external_pauc: f64,
    /// Indices of markers with nonzero coefficients in the final model.
    pub selected: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkerRate {
    pub marker: String,
    pub method: String,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub mean_pauc: f64,
    pub median_pauc: f64,
    pub q1_pauc: f64,
    pub q3_pauc: f64,
    pub mean_chosen_w: f64,
    /// Mean selection rate over the Score-A markers.
    pub score_a_rate: f64,
    pub score_b_rate: f64,
    /// Selection count per noise marker, averaged over noise markers.
    pub mean_noise_selections: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub design: SimDesign,
    pub search: SearchSpec,
    pub rows: Vec<ReplicateRow>,
    pub selection_rates: Vec<MarkerRate>,
    pub summaries: Vec<MethodSummary>,
}

pub const METHODS: [&str; 2] = ["logistic-push", "lasso"];

/// Quantile with linear interpolation between order statistics (R type 7).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn run_replicate(design: &SimDesign, search: &SearchSpec, r: usize) -> Result<[ReplicateRow; 2]> {
    let rep_seed = seed::derive(design.seed, r as u64);
    let (train, test) = generate(design, rep_seed)?;
    let search = SearchSpec {
        seed: seed::derive(search.seed ^ rep_seed, 1),
        ..search.clone()
    };
    let push = select_weight_and_lambda(&train, &search)?;
    let lasso = baseline_lasso(&train, &search)?;
    let row = |method: &str, rep: &crate::selection::CvReport| -> Result<ReplicateRow> {
        Ok(ReplicateRow {
            replicate: r,
            seed: rep_seed,
            method: method.to_string(),
            chosen_w: rep.chosen_w,
            chosen_lambda: rep.chosen_lambda,
            external_pauc: evaluate_external(&rep.final_model, &test, &search.pauc)?.value,
            selected: rep.selected_indices.clone(),
        })
    };
    Ok([row(METHODS[0], &push)?, row(METHODS[1], &lasso)?])
}

/// Runs every replicate (in parallel when enabled) and aggregates in
/// replicate order.
pub fn run_benchmark(design: &SimDesign, search: &SearchSpec) -> Result<BenchReport> {
    design.validate()?;
    search.validate()?;
    let per_rep = par::try_map_indexed(design.replicates, |r| run_replicate(design, search, r))?;
    let rows: Vec<ReplicateRow> = per_rep.into_iter().flatten().collect();
    Ok(aggregate(design, search, rows))
}

/// Builds selection rates and summaries from per-replicate rows.
pub fn aggregate(design: &SimDesign, search: &SearchSpec, rows: Vec<ReplicateRow>) -> BenchReport {
    let names = design.marker_names();
    let p = names.len();
    let reps = design.replicates.max(1) as f64;
    let mut selection_rates = Vec::new();
    let mut summaries = Vec::new();
    for method in METHODS {
        let mine: Vec<&ReplicateRow> = rows.iter().filter(|r| r.method == method).collect();
        let mut counts = vec![0usize; p];
        for row in &mine {
            for &j in &row.selected {
                counts[j] += 1;
            }
        }
        let rates: Vec<f64> = counts.iter().map(|&c| c as f64 / reps).collect();
        for (name, &rate) in names.iter().zip(&rates) {
            selection_rates.push(MarkerRate {
                marker: name.clone(),
                method: method.to_string(),
                rate,
            });
        }
        let block_mean = |lo: usize, hi: usize| -> f64 {
            if hi > lo {
                rates[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
            } else {
                f64::NAN
            }
        };
        let a_end = design.n_score_a;
        let b_end = a_end + design.n_score_b;
        let noise_sel = if p > b_end {
            counts[b_end..].iter().sum::<usize>() as f64 / (p - b_end) as f64
        } else {
            f64::NAN
        };
        let mut paucs: Vec<f64> = mine.iter().map(|r| r.external_pauc).collect();
        let n = paucs.len().max(1) as f64;
        let mean_pauc = paucs.iter().sum::<f64>() / n;
        let mean_chosen_w = mine.iter().map(|r| r.chosen_w).sum::<f64>() / n;
        paucs.sort_by(f64::total_cmp);
        summaries.push(MethodSummary {
            method: method.to_string(),
            mean_pauc,
            median_pauc: quantile(&paucs, 0.5),
            q1_pauc: quantile(&paucs, 0.25),
            q3_pauc: quantile(&paucs, 0.75),
            mean_chosen_w,
            score_a_rate: block_mean(0, a_end),
            score_b_rate: block_mean(a_end, b_end),
            mean_noise_selections: noise_sel,
        });
    }
    BenchReport {
        design: design.clone(),
        search: search.clone(),
        rows,
        selection_rates,
        summaries,
    }
}

impl BenchReport {
    pub fn summary(&self, method: &str) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }

    /// `replicate,seed,method,chosen_w,chosen_lambda,external_pauc,n_selected,selected`
    pub fn replicates_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "replicate",
            "seed",
            "method",
            "chosen_w",
            "chosen_lambda",
            "external_pauc",
            "n_selected",
            "selected",
        ])?;
        let names = self.design.marker_names();
        for r in &self.rows {
            let selected: Vec<&str> = r.selected.iter().map(|&j| names[j].as_str()).collect();
            w.write_record([
                r.replicate.to_string(),
                r.seed.to_string(),
                r.method.clone(),
                format_g17(r.chosen_w),
                format_g17(r.chosen_lambda),
                format_g17(r.external_pauc),
                r.selected.len().to_string(),
                selected.join(";"),
            ])?;
        }
        finish_csv(w)
    }

    /// `marker,method,rate`
    pub fn selection_rates_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["marker", "method", "rate"])?;
        for r in &self.selection_rates {
            w.write_record([r.marker.clone(), r.method.clone(), format_g17(r.rate)])?;
        }
        finish_csv(w)
    }
}

pub(crate) fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn default_blocks_audit() {
        let a = SimDesign::default().audit(0.2);
        assert!(a.passes(), "{a:?}");
    }

    #[test]
    fn numeric_auc_matches_closed_form() {
        for p in [
            BinormalParams::score_a(),
            BinormalParams::score_b(),
            BinormalParams::with_auc(0.9, 0.5),
        ] {
            let closed = std_normal()
                .cdf((p.mu_d - p.mu_n) / (p.sigma_d.powi(2) + p.sigma_n.powi(2)).sqrt());
            assert_abs_diff_eq!(p.auc(), closed, epsilon = 1e-9);
        }
    }

    #[test]
    fn pauc_of_chance_line() {
        let p = BinormalParams {
            mu_d: 0.0,
            sigma_d: 1.0,
            mu_n: 0.0,
            sigma_n: 1.0,
        };
        assert_abs_diff_eq!(p.pauc(0.2), 0.02, epsilon = 1e-9);
    }

    #[test]
    fn quantile_type7() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert_eq!(quantile(&v, 1.0), 4.0);
    }

    #[test]
    fn generation_is_deterministic() {
        let d = SimDesign {
            n_noise: 5,
            ..Default::default()
        };
        let (a1, b1) = generate(&d, 9).unwrap();
        let (a2, b2) = generate(&d, 9).unwrap();
        assert_eq!(a1, a2);
        assert_eq!(b1, b2);
        assert_ne!(a1, b1);
        assert_eq!(a1.n_markers(), 11);
        assert_eq!(a1.n_diseased(), 50);
    }
}
