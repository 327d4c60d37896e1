//! Evaluation harness: RBF readout over C2 potentials, equilibrium-point
//! accuracy, ROC AUC, selected-weight counting, and the two-tailed t-test
//! used to compare runs.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::config::RuleKind;
use crate::error::{Error, Result};
use crate::types::SynapseBank;

/// One classifier example: the C2 potentials of an image plus its label
/// (true = positive class).
#[derive(Debug, Clone)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub label: bool,
}

/// Kernel ridge readout over Gaussian bumps: every training vector is a
/// prototype, the kernel width is the median pairwise distance, and the
/// readout weights solve (K + ridge I) alpha = y with y in {-1, +1}.
#[derive(Debug, Clone)]
pub struct RbfModel {
    prototypes: Vec<Vec<f64>>,
    alphas: Vec<f64>,
    sigma: f64,
}

pub const DEFAULT_RIDGE: f64 = 1e-3;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn rbf_train(train: &[FeatureVector], ridge: f64) -> Result<RbfModel> {
    let n_pos = train.iter().filter(|v| v.label).count();
    let n_neg = train.len() - n_pos;
    if n_pos < 2 || n_neg < 2 {
        return Err(Error::Contract(format!(
            "rbf_train: need >= 2 examples per class, got {n_pos}/{n_neg}"
        )));
    }
    let dim = train[0].values.len();
    if train.iter().any(|v| v.values.len() != dim) {
        return Err(Error::Dimension("rbf_train: inconsistent feature lengths".into()));
    }
    let n = train.len();
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            dists.push(sq_dist(&train[i].values, &train[j].values).sqrt());
        }
    }
    dists.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let median = dists[dists.len() / 2];
    let sigma = if median > 0.0 { median } else { 1.0 };

    let two_s2 = 2.0 * sigma * sigma;
    let gram = DMatrix::from_fn(n, n, |i, j| {
        let k = (-sq_dist(&train[i].values, &train[j].values) / two_s2).exp();
        if i == j {
            k + ridge
        } else {
            k
        }
    });
    let y = DVector::from_iterator(n, train.iter().map(|v| if v.label { 1.0 } else { -1.0 }));
    let alphas = match gram.clone().cholesky() {
        Some(chol) => chol.solve(&y),
        None => gram
            .lu()
            .solve(&y)
            .ok_or_else(|| Error::Numerical("rbf_train: singular kernel system".into()))?,
    };
    Ok(RbfModel {
        prototypes: train.iter().map(|v| v.values.clone()).collect(),
        alphas: alphas.iter().cloned().collect(),
        sigma,
    })
}

impl RbfModel {
    pub fn score(&self, values: &[f64]) -> f64 {
        let two_s2 = 2.0 * self.sigma * self.sigma;
        self.prototypes
            .iter()
            .zip(&self.alphas)
            .map(|(p, a)| a * (-sq_dist(p, values) / two_s2).exp())
            .sum()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

fn split_scores(scores: &[f64], labels: &[bool]) -> Result<(Vec<f64>, Vec<f64>)> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension("scores and labels differ in length".into()));
    }
    let pos: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| l).map(|(&s, _)| s).collect();
    let neg: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| !l).map(|(&s, _)| s).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Domain("both classes must be present".into()));
    }
    Ok((pos, neg))
}

/// Accuracy at the equilibrium point, where the false-positive rate equals
/// the miss rate. Thresholds sweep the midpoints of sorted unique scores;
/// where FPR - FNR changes sign between candidates, the crossing is located
/// by linear interpolation. Returns (accuracy, threshold).
pub fn equilibrium_accuracy(scores: &[f64], labels: &[bool]) -> Result<(f64, f64)> {
    let (pos, neg) = split_scores(scores, labels)?;
    let n_pos = pos.len() as f64;
    let n_neg = neg.len() as f64;
    let mut unique: Vec<f64> = scores.to_vec();
    unique.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    unique.dedup();

    // candidate thresholds: below the range, then the midpoint after each
    // unique score (the last one lies above the range)
    let mut pos_sorted = pos.clone();
    pos_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut neg_sorted = neg.clone();
    neg_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let rates_at = |theta: f64, pos_sorted: &[f64], neg_sorted: &[f64]| -> (f64, f64) {
        let fnr = pos_sorted.partition_point(|&s| s < theta) as f64 / n_pos;
        let fpr = (neg_sorted.len() - neg_sorted.partition_point(|&s| s < theta)) as f64 / n_neg;
        (fpr, fnr)
    };

    let mut candidates = Vec::with_capacity(unique.len() + 1);
    candidates.push(unique[0] - 1.0);
    for k in 0..unique.len() {
        let next = if k + 1 < unique.len() {
            (unique[k] + unique[k + 1]) / 2.0
        } else {
            unique[k] + 1.0
        };
        candidates.push(next);
    }

    let mut prev: Option<(f64, f64, f64, f64)> = None; // theta, fpr, fnr, diff
    for &theta in &candidates {
        let (fpr, fnr) = rates_at(theta, &pos_sorted, &neg_sorted);
        let diff = fpr - fnr;
        if diff == 0.0 {
            return Ok((1.0 - (fpr + fnr) / 2.0, theta));
        }
        if diff < 0.0 {
            // crossed zero between the previous candidate and this one
            let (pt, pf, pn, pd) = prev.expect("diff starts at +1 below the score range");
            let lambda = pd / (pd - diff);
            let theta_star = pt + lambda * (theta - pt);
            let fpr_star = pf + lambda * (fpr - pf);
            let fnr_star = pn + lambda * (fnr - pn);
            return Ok((1.0 - (fpr_star + fnr_star) / 2.0, theta_star));
        }
        prev = Some((theta, fpr, fnr, diff));
    }
    unreachable!("FPR - FNR reaches -1 above the score range");
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half (rank-sum formulation).
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, neg) = split_scores(scores, labels)?;
    let n_pos = pos.len();
    let n_neg = neg.len();
    let mut all: Vec<(f64, bool)> =
        pos.iter().map(|&s| (s, true)).chain(neg.iter().map(|&s| (s, false))).collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite scores"));
    let n = all.len();
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && all[j].0 == all[i].0 {
            j += 1;
        }
        // tied group shares the average rank (1-indexed)
        let avg_rank = (i + j + 1) as f64 / 2.0;
        for item in &all[i..j] {
            if item.1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Threshold above which a weight counts as selected, per rule: 0.5 for the
/// multiplicative rule, ln 2 for the probabilistic one.
pub fn selection_threshold(rule: RuleKind) -> f64 {
    match rule {
        RuleKind::Original => 0.5,
        RuleKind::Probabilistic | RuleKind::Nessler => std::f64::consts::LN_2,
    }
}

/// Mean number of weights above `threshold` per feature.
pub fn count_selected_weights(bank: &SynapseBank, threshold: f64) -> f64 {
    let total: usize = (0..bank.n_features()).map(|f| bank.count_above(f, threshold)).sum();
    total as f64 / bank.n_features() as f64
}

/// Pooled-variance two-sample t-test; returns (t, two-tailed p). With zero
/// pooled variance the convention is p = 1 for equal means, p = 0 otherwise.
pub fn t_test_two_tailed(sample_a: &[f64], sample_b: &[f64]) -> Result<(f64, f64)> {
    let (na, nb) = (sample_a.len(), sample_b.len());
    if na < 2 || nb < 2 {
        return Err(Error::Contract(format!("t-test needs >= 2 points per sample, got {na}/{nb}")));
    }
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let var = |xs: &[f64], m: f64| xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    let (ma, mb) = (mean(sample_a), mean(sample_b));
    let (va, vb) = (var(sample_a, ma), var(sample_b, mb));
    let df = (na + nb - 2) as f64;
    let pooled = ((na - 1) as f64 * va + (nb - 1) as f64 * vb) / df;
    if pooled == 0.0 {
        return Ok(if ma == mb { (0.0, 1.0) } else { (f64::INFINITY.copysign(ma - mb), 0.0) });
    }
    let t = (ma - mb) / (pooled * (1.0 / na as f64 + 1.0 / nb as f64)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::Numerical(format!("t distribution: {e}")))?;
    let p = 2.0 * dist.cdf(-t.abs());
    Ok((t, p.min(1.0)))
}

/// The star convention: p < 0.1 (*), < 0.05 (**), < 0.01 (***), < 0.005 (****).
pub fn significance_band(p: f64) -> &'static str {
    if p < 0.005 {
        "****"
    } else if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        "ns"
    }
}
