//! Empirical ROC curves, the nonparametric partial-AUC estimator and the
//! rank losses it is tied to.
//!
//! Scores are paired with labels where `+1` marks a diseased subject and any
//! other value a non-diseased one. The partial area is taken over false
//! positive rates `(0, t)`; the cut-off among non-diseased scores is the lower
//! empirical `(1 - t)` quantile, i.e. the `ceil((1 - t) K)`-th smallest
//! non-diseased score.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::data::DISEASED;
use crate::error::{Error, Result};

/// How to score a diseased/non-diseased pair with identical scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TiePolicy {
    /// Ties earn nothing, and non-diseased scores tied with the quantile
    /// threshold are excluded outright.
    Strict,
    /// Ties earn 1/2. A tie block straddling the quantile is integrated
    /// along its diagonal ROC segment, so the value is exactly the area
    /// under the empirical ROC curve up to the nominal false positive rate.
    #[default]
    HalfCredit,
}

impl std::fmt::Display for TiePolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TiePolicy::Strict => "strict",
            TiePolicy::HalfCredit => "half-credit",
        })
    }
}

impl std::str::FromStr for TiePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(TiePolicy::Strict),
            "half-credit" | "half" => Ok(TiePolicy::HalfCredit),
            other => Err(Error::InvalidArgument(format!(
                "unknown tie policy `{other}`"
            ))),
        }
    }
}

/// Upper false positive rate bound and tie handling for pAUC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PaucSpec {
    pub t: f64,
    pub tie_policy: TiePolicy,
}

impl PaucSpec {
    pub fn new(t: f64, tie_policy: TiePolicy) -> Result<Self> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "FPR bound t must lie in (0, 1], got {t}"
            )));
        }
        Ok(PaucSpec { t, tie_policy })
    }

    pub fn half_credit(t: f64) -> Result<Self> {
        Self::new(t, TiePolicy::HalfCredit)
    }

    pub fn strict(t: f64) -> Result<Self> {
        Self::new(t, TiePolicy::Strict)
    }
}

/// Empirical ROC curve from a descending threshold sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(fpr, tpr)` pairs from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// Estimated partial AUC and the quantities behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaucResult {
    pub value: f64,
    pub t: f64,
    /// The empirical `(1 - t)` quantile of non-diseased scores; `-inf` when
    /// every non-diseased subject contributes.
    pub threshold: f64,
    /// Non-diseased subjects scoring strictly above the threshold.
    pub contributing_negatives: usize,
    /// `K - ceil((1 - t) K)`: how many would contribute without ties at the
    /// threshold. Differs from `contributing_negatives` only when ties at the
    /// threshold change the count.
    pub nominal_contributing: usize,
    pub tie_policy: TiePolicy,
}

impl PaucResult {
    /// True when threshold ties changed the contributing set.
    pub fn threshold_ties(&self) -> bool {
        self.contributing_negatives != self.nominal_contributing
    }
}

/// Diseased and non-diseased scores, validated.
fn split_scores(scores: &[f64], labels: &[i8]) -> Result<(Vec<f64>, Vec<f64>)> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            found: scores.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument(format!("score {i} is not finite")));
    }
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (&s, &l) in scores.iter().zip(labels) {
        if l == DISEASED {
            pos.push(s);
        } else {
            neg.push(s);
        }
    }
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::SingleClass {
            diseased: pos.len(),
            non_diseased: neg.len(),
        });
    }
    pos.sort_by(f64::total_cmp);
    neg.sort_by(f64::total_cmp);
    Ok((pos, neg))
}

/// Rank (1-based) of the order statistic used as the `(1 - t)` quantile of
/// `k` scores; 0 means no threshold.
pub fn quantile_rank(t: f64, k: usize) -> usize {
    // The small slack keeps e.g. (1 - 0.2) * 50 from rounding up to 41.
    let raw = (1.0 - t) * k as f64 - 1e-9;
    (raw.ceil().max(0.0) as usize).min(k)
}

/// Number of values in ascending `sorted` strictly greater than / equal to `s`.
fn count_above_and_tied(sorted: &[f64], s: f64) -> (usize, usize) {
    let lo = sorted.partition_point(|&x| x < s);
    let hi = sorted.partition_point(|&x| x <= s);
    (sorted.len() - hi, hi - lo)
}

fn count_below(sorted: &[f64], s: f64) -> usize {
    sorted.partition_point(|&x| x < s)
}

fn threshold_for(neg_sorted: &[f64], t: f64) -> (f64, usize) {
    let m = quantile_rank(t, neg_sorted.len());
    let thr = if m == 0 {
        f64::NEG_INFINITY
    } else {
        neg_sorted[m - 1]
    };
    (thr, m)
}

impl RocCurve {
    /// `fpr,tpr`, one row per vertex.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["fpr", "tpr"])?;
        for &(fpr, tpr) in &self.points {
            w.write_record([crate::json::format_g17(fpr), crate::json::format_g17(tpr)])?;
        }
        crate::simulation::finish_csv(w)
    }
}

/// Builds the empirical ROC curve. Tied scores form a single sweep step, so
/// ties between classes appear as diagonal segments, and the trapezoidal area
/// equals the Mann-Whitney statistic with ties counted as 1/2.
pub fn roc_curve(scores: &[f64], labels: &[i8]) -> Result<RocCurve> {
    let (pos, neg) = split_scores(scores, labels)?;
    let (j, k) = (pos.len(), neg.len());

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    // Twice the area in units of 1 / (J K).
    let mut area2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (mut dp, mut dn) = (0usize, 0usize);
        while i < order.len() && scores[order[i]].total_cmp(&s) == Ordering::Equal {
            if labels[order[i]] == DISEASED {
                dp += 1;
            } else {
                dn += 1;
            }
            i += 1;
        }
        area2 += dn as u128 * (2 * tp + dp) as u128;
        tp += dp;
        fp += dn;
        points.push((fp as f64 / k as f64, tp as f64 / j as f64));
    }
    let auc = area2 as f64 / (2 * j as u128 * k as u128) as f64;
    Ok(RocCurve { points, auc })
}

/// Nonparametric estimate of the area under the ROC curve over false
/// positive rates `(0, t)`:
///
/// `(1 / JK) * sum_j sum_k 1[f(x_j) > f(x_k), f(x_k) > q]`
///
/// with `q` the empirical `(1 - t)` quantile of non-diseased scores. See
/// [`TiePolicy`] for how ties are treated.
pub fn pauc_estimate(scores: &[f64], labels: &[i8], spec: &PaucSpec) -> Result<PaucResult> {
    let (pos, neg) = split_scores(scores, labels)?;
    let (j, k) = (pos.len() as u128, neg.len());
    let (threshold, m) = threshold_for(&neg, spec.t);
    let nominal = k - m;
    let contributing = neg.len() - neg.partition_point(|&x| x <= threshold);

    // Walk tie blocks of non-diseased scores from the top.
    let mut num2: u128 = 0; // twice the pair count, units of 1/(JK)
    let mut partial: Option<(u128, u128)> = None; // (numerator, block size)
    let mut cum = 0usize;
    let mut hi = neg.len();
    while hi > 0 {
        let s = neg[hi - 1];
        let lo = neg[..hi].partition_point(|&x| x < s);
        let block = hi - lo;
        let (above, tied) = count_above_and_tied(&pos, s);
        let (above, tied) = (above as u128, tied as u128);
        match spec.tie_policy {
            TiePolicy::Strict => {
                if s > threshold {
                    num2 += 2 * block as u128 * above;
                } else {
                    break;
                }
            }
            TiePolicy::HalfCredit => {
                if cum + block <= nominal {
                    num2 += block as u128 * (2 * above + tied);
                } else {
                    let r = (nominal - cum) as u128;
                    if r > 0 {
                        let b = block as u128;
                        partial = Some((2 * r * above * b + tied * r * r, b));
                    }
                    break;
                }
            }
        }
        cum += block;
        hi = lo;
    }

    let value = match partial {
        None => num2 as f64 / (2 * j * k as u128) as f64,
        Some((extra, b)) => (num2 * b + extra) as f64 / (2 * j * k as u128 * b) as f64,
    };
    Ok(PaucResult {
        value,
        t: spec.t,
        threshold,
        contributing_negatives: contributing,
        nominal_contributing: nominal,
        tie_policy: spec.tie_policy,
    })
}

/// Pushdown 0-1 loss: over non-diseased subjects scoring above the quantile
/// threshold, the number of diseased subjects they outscore. Maximizing
/// [`pauc_estimate`] and minimizing this are the same problem.
pub fn zero_one_push_loss(scores: &[f64], labels: &[i8], spec: &PaucSpec) -> Result<u64> {
    let (pos, neg) = split_scores(scores, labels)?;
    let (threshold, _) = threshold_for(&neg, spec.t);
    Ok(neg
        .iter()
        .filter(|&&s| s > threshold)
        .map(|&s| count_below(&pos, s) as u64)
        .sum())
}

/// P-norm push ranking loss `sum_k (#{j : f(x_j) < f(x_k)})^p`. Evaluation
/// only; nothing in this crate fits it.
pub fn pnorm_push_loss(scores: &[f64], labels: &[i8], p: f64) -> Result<f64> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "power must be finite and >= 1, got {p}"
        )));
    }
    let (pos, neg) = split_scores(scores, labels)?;
    Ok(neg
        .iter()
        .map(|&s| (count_below(&pos, s) as f64).powf(p))
        .sum())
}

/// `log(1 + exp(x))` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Weighted logistic loss and the weighted 0-1 loss at cut-point 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticLosses {
    /// `sum_j log(1 + e^{-f_j}) + w sum_k log(1 + e^{f_k})`
    pub logistic: f64,
    /// `sum_j 1[f_j < 0] + w sum_k 1[f_k > 0]`
    pub zero_one: f64,
}

/// Evaluates both losses for scores `f`. With `w = 1` these are the plain
/// logistic and misclassification losses; `logistic / ln 2 >= zero_one`
/// always holds.
pub fn logistic_losses(scores: &[f64], labels: &[i8], w: f64) -> Result<LogisticLosses> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            found: scores.len(),
        });
    }
    if !(w >= 1.0 && w.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "weight must be >= 1, got {w}"
        )));
    }
    let (mut pos_l, mut neg_l, mut pos_e, mut neg_e) = (0.0, 0.0, 0usize, 0usize);
    for (&f, &l) in scores.iter().zip(labels) {
        if l == DISEASED {
            pos_l += softplus(-f);
            pos_e += (f < 0.0) as usize;
        } else {
            neg_l += softplus(f);
            neg_e += (f > 0.0) as usize;
        }
    }
    Ok(LogisticLosses {
        logistic: pos_l + w * neg_l,
        zero_one: pos_e as f64 + w * neg_e as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn lab(j: usize, k: usize) -> Vec<i8> {
        [vec![1; j], vec![-1; k]].concat()
    }

    #[test]
    fn roc_perfect_separation() {
        let r = roc_curve(&[2.0, 3.0, 0.0, 1.0], &lab(2, 2)).unwrap();
        assert_eq!(r.auc, 1.0);
        assert_eq!(r.points.first(), Some(&(0.0, 0.0)));
        assert_eq!(r.points.last(), Some(&(1.0, 1.0)));
    }

    #[test]
    fn roc_all_tied() {
        let r = roc_curve(&[1.0; 6], &lab(3, 3)).unwrap();
        assert_eq!(r.auc, 0.5);
        assert_eq!(r.points, vec![(0.0, 0.0), (1.0, 1.0)]);
    }

    #[test]
    fn roc_three_of_four() {
        let r = roc_curve(&[1.0, 3.0, 2.0, 0.0], &lab(2, 2)).unwrap();
        assert_eq!(r.auc, 0.75);
        for w in r.points.windows(2) {
            assert!(w[0].0 <= w[1].0 && w[0].1 <= w[1].1);
        }
    }

    #[test]
    fn roc_single_class() {
        assert!(matches!(
            roc_curve(&[1.0, 2.0], &[1, 1]),
            Err(Error::SingleClass { .. })
        ));
    }

    #[test]
    fn pauc_hand_enumerated() {
        let scores = [3.0, 1.0, 2.0, 0.0];
        let r = pauc_estimate(&scores, &lab(2, 2), &PaucSpec::strict(0.5).unwrap()).unwrap();
        assert_eq!(r.value, 0.25);
        assert_eq!(r.threshold, 0.0);
        assert_eq!(r.contributing_negatives, 1);

        let scores = [5.0, 6.0, 7.0, 1.0, 2.0, 3.0];
        let r = pauc_estimate(&scores, &lab(3, 3), &PaucSpec::strict(1.0 / 3.0).unwrap()).unwrap();
        assert_eq!(r.value, 1.0 / 3.0);
        assert_eq!(r.threshold, 2.0);
        assert_eq!(r.contributing_negatives, 1);
    }

    #[test]
    fn pauc_at_one_is_auc() {
        let scores = [0.3, 0.1, 0.3, 0.9, 0.3, 0.0, 0.5];
        let labels = [1, -1, -1, 1, 1, -1, -1];
        let r = pauc_estimate(&scores, &labels, &PaucSpec::half_credit(1.0).unwrap()).unwrap();
        assert_eq!(r.value, roc_curve(&scores, &labels).unwrap().auc);
        assert_eq!(r.threshold, f64::NEG_INFINITY);
    }

    #[test]
    fn constant_scores_give_chance_area() {
        let labels = lab(50, 50);
        let scores = vec![0.7; 100];
        let half = pauc_estimate(&scores, &labels, &PaucSpec::half_credit(0.2).unwrap()).unwrap();
        assert_abs_diff_eq!(half.value, 0.02, epsilon = 1e-15);
        assert!(half.threshold_ties());
        let strict = pauc_estimate(&scores, &labels, &PaucSpec::strict(0.2).unwrap()).unwrap();
        assert_eq!(strict.value, 0.0);
        assert_eq!(strict.contributing_negatives, 0);
        assert_eq!(strict.nominal_contributing, 10);
    }

    #[test]
    fn quantile_rank_is_robust_to_rounding() {
        assert_eq!(quantile_rank(0.2, 50), 40);
        assert_eq!(quantile_rank(0.2, 10), 8);
        assert_eq!(quantile_rank(0.1, 30), 27);
        assert_eq!(quantile_rank(1.0, 7), 0);
        assert_eq!(quantile_rank(0.5, 3), 2);
    }

    #[test]
    fn push_loss_examples() {
        let scores = [3.0, 1.0, 2.0, 0.0];
        let labels = lab(2, 2);
        assert_eq!(
            zero_one_push_loss(&scores, &labels, &PaucSpec::strict(0.5).unwrap()).unwrap(),
            1
        );
        assert_eq!(
            zero_one_push_loss(
                &[2.0, 3.0, 0.0, 1.0],
                &labels,
                &PaucSpec::strict(0.7).unwrap()
            )
            .unwrap(),
            0
        );
        assert_eq!(
            zero_one_push_loss(&[0.0, 1.0], &[1, -1], &PaucSpec::strict(1.0).unwrap()).unwrap(),
            1
        );

        assert_eq!(pnorm_push_loss(&scores, &labels, 1.0).unwrap(), 1.0);
        assert_eq!(pnorm_push_loss(&scores, &labels, 2.0).unwrap(), 1.0);
        assert_eq!(
            pnorm_push_loss(&[2.0, 3.0, 0.0, 1.0], &labels, 3.5).unwrap(),
            0.0
        );
        assert!(pnorm_push_loss(&scores, &labels, 0.5).is_err());
    }

    #[test]
    fn logistic_loss_examples() {
        let l = logistic_losses(&[0.0, 0.0], &[1, -1], 1.0).unwrap();
        assert_abs_diff_eq!(l.logistic, 2.0 * 2f64.ln(), epsilon = 1e-15);
        assert_eq!(l.zero_one, 0.0);
        assert!(l.logistic / 2f64.ln() >= 2.0 - 1e-15);

        let l = logistic_losses(&[50.0, -50.0], &[1, -1], 1.0).unwrap();
        assert!(l.logistic < 1e-20);
        assert_eq!(l.zero_one, 0.0);

        let l = logistic_losses(&[1.0, 1.0], &[1, -1], 3.0).unwrap();
        let expect = (1.0 + (-1f64).exp()).ln() + 3.0 * (1.0 + 1f64.exp()).ln();
        assert_abs_diff_eq!(l.logistic, expect, epsilon = 1e-14);
        assert_eq!(l.zero_one, 3.0);
        assert!(l.logistic / 2f64.ln() >= l.zero_one);
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert_eq!(softplus(-1000.0), 0.0);
        assert_abs_diff_eq!(softplus(0.0), 2f64.ln(), epsilon = 1e-16);
    }

    #[test]
    fn spec_validation() {
        assert!(PaucSpec::strict(0.0).is_err());
        assert!(PaucSpec::strict(1.5).is_err());
        assert!(PaucSpec::strict(1.0).is_ok());
        assert_eq!(
            "half-credit".parse::<TiePolicy>().unwrap(),
            TiePolicy::HalfCredit
        );
    }
}
