//! Independent reference computations for tests. Nothing here calls into the
//! library's estimators or solvers.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_rational::Ratio;
use rand::Rng;

pub type Q = Ratio<i64>;

fn to_f64(q: Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

fn split(scores: &[f64], labels: &[i8]) -> (Vec<f64>, Vec<f64>) {
    let pos = scores
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == 1)
        .map(|(&s, _)| s)
        .collect();
    let neg = scores
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l != 1)
        .map(|(&s, _)| s)
        .collect();
    (pos, neg)
}

/// `ceil((1 - t) K)` in exact arithmetic.
pub fn quantile_rank(t: Q, k: usize) -> usize {
    let x = (Q::from_integer(1) - t) * Q::from_integer(k as i64);
    x.ceil().to_integer() as usize
}

fn threshold(neg: &[f64], t: Q) -> f64 {
    let mut sorted = neg.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = quantile_rank(t, neg.len());
    if m == 0 {
        f64::NEG_INFINITY
    } else {
        sorted[m - 1]
    }
}

/// Literal double sum over all diseased/non-diseased pairs with strict
/// indicators: `1[f_j > f_k, f_k > q]`.
pub fn pauc_strict(scores: &[f64], labels: &[i8], t: Q) -> f64 {
    let (pos, neg) = split(scores, labels);
    let q = threshold(&neg, t);
    let mut count = 0i64;
    for &fj in &pos {
        for &fk in &neg {
            if fj > fk && fk > q {
                count += 1;
            }
        }
    }
    to_f64(Q::new(count, (pos.len() * neg.len()) as i64))
}

/// Double sum with ties between classes counted 1/2 and strict exclusion at
/// the threshold.
pub fn pauc_half_pairs(scores: &[f64], labels: &[i8], t: Q) -> f64 {
    let (pos, neg) = split(scores, labels);
    let q = threshold(&neg, t);
    let mut twice = 0i64;
    for &fj in &pos {
        for &fk in &neg {
            if fk > q {
                if fj > fk {
                    twice += 2;
                } else if fj == fk {
                    twice += 1;
                }
            }
        }
    }
    to_f64(Q::new(twice, 2 * (pos.len() * neg.len()) as i64))
}

/// Area under the empirical ROC polyline over FPR `(0, (K - m) / K)` where
/// `m = ceil((1 - t) K)`, built by evaluating every distinct cut-point.
pub fn pauc_roc_area(scores: &[f64], labels: &[i8], t: Q) -> f64 {
    let (pos, neg) = split(scores, labels);
    let (j, k) = (pos.len() as i64, neg.len() as i64);
    let upper = Q::new((neg.len() - quantile_rank(t, neg.len())) as i64, k);

    let mut cuts: Vec<f64> = scores.to_vec();
    cuts.sort_by(|a, b| b.partial_cmp(a).unwrap());
    cuts.dedup();
    let mut pts = vec![(Q::from_integer(0), Q::from_integer(0))];
    for c in cuts {
        let tp = pos.iter().filter(|&&s| s >= c).count() as i64;
        let fp = neg.iter().filter(|&&s| s >= c).count() as i64;
        pts.push((Q::new(fp, k), Q::new(tp, j)));
    }

    let half = Q::new(1, 2);
    let mut area = Q::from_integer(0);
    for w in pts.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x0 >= upper {
            break;
        }
        if x1 <= upper {
            area += (x1 - x0) * (y0 + y1) * half;
        } else {
            let ye = y0 + (y1 - y0) * (upper - x0) / (x1 - x0);
            area += (upper - x0) * (y0 + ye) * half;
            break;
        }
    }
    to_f64(area)
}

/// Mann-Whitney AUC from mid-ranks of the pooled sample.
pub fn mann_whitney_auc(scores: &[f64], labels: &[i8]) -> f64 {
    let n = scores.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    // twice the mid-rank
    let mut rank2 = vec![0i64; n];
    let mut i = 0;
    while i < n {
        let mut e = i;
        while e + 1 < n && scores[idx[e + 1]] == scores[idx[i]] {
            e += 1;
        }
        for &id in &idx[i..=e] {
            rank2[id] = (i + 1 + e + 1) as i64;
        }
        i = e + 1;
    }
    let j = labels.iter().filter(|&&l| l == 1).count() as i64;
    let k = n as i64 - j;
    let r2: i64 = (0..n).filter(|&i| labels[i] == 1).map(|i| rank2[i]).sum();
    // U = R - J(J+1)/2
    let u2 = r2 - j * (j + 1);
    to_f64(Q::new(u2, 2 * j * k))
}

/// Unpenalized weighted logistic regression by full Newton steps with a
/// dense solve. Rows of `x` are observations, `y` in {0, 1}, `v` weights.
pub fn newton_logistic(x: &[Vec<f64>], y: &[f64], v: &[f64]) -> Vec<f64> {
    let n = x.len();
    let p = x[0].len() + 1;
    let design = DMatrix::from_fn(n, p, |i, c| if c == 0 { 1.0 } else { x[i][c - 1] });
    let mut beta = DVector::zeros(p);
    for _ in 0..200 {
        let eta = &design * &beta;
        let mut grad = DVector::zeros(p);
        let mut hess = DMatrix::zeros(p, p);
        for i in 0..n {
            let mu = 1.0 / (1.0 + (-eta[i]).exp());
            let row = design.row(i).transpose();
            grad += &row * (v[i] * (y[i] - mu));
            hess += &row * row.transpose() * (v[i] * mu * (1.0 - mu));
        }
        let step = hess.lu().solve(&grad).expect("non-singular Hessian");
        beta += &step;
        if step.amax() < 1e-13 {
            break;
        }
    }
    beta.iter().copied().collect()
}

/// Random scores with deliberate ties, at least one of each class.
pub fn random_scores<R: Rng>(rng: &mut R, max_per_class: usize) -> (Vec<f64>, Vec<i8>) {
    let j = rng.random_range(1..=max_per_class);
    let k = rng.random_range(1..=max_per_class);
    let levels = rng.random_range(2..=12);
    let tie_heavy = rng.random_bool(0.5);
    let mut scores = Vec::with_capacity(j + k);
    let mut labels = Vec::with_capacity(j + k);
    for i in 0..j + k {
        let s = if tie_heavy {
            rng.random_range(0..levels) as f64 * 0.5
        } else {
            rng.random::<f64>() * 4.0 - 2.0
        };
        scores.push(s);
        labels.push(if i < j { 1 } else { -1 });
    }
    if !tie_heavy && scores.len() > 2 {
        let from = rng.random_range(0..scores.len());
        let to = rng.random_range(0..scores.len());
        scores[to] = scores[from];
    }
    (scores, labels)
}
