//! Binary-classification metrics with the attack class as positive.
//!
//! Rates whose denominator class is empty are reported as *absent* (`None`),
//! never as zero — a test set with no negatives has no false-positive rate, and
//! collapsing that to 0.0 would silently flatter the classifier. AUC-ROC is
//! computed exactly as the Mann–Whitney rank statistic (midranks for ties),
//! which equals the trapezoidal area under the ROC curve without any binning.

use thiserror::Error;

use crate::gnn::Prediction;

/// Errors from metric computation.
#[derive(Debug, Error)]
pub enum MetricsError {
    /// Inputs are unusable (length mismatch, empty, non-finite score, bad label).
    #[error("metric input: {message}")]
    Input { message: String },
    /// AUC needs at least one example of each class.
    #[error("AUC is undefined: only one class present")]
    UndefinedAuc,
}

impl MetricsError {
    fn input(message: impl Into<String>) -> Self {
        MetricsError::Input {
            message: message.into(),
        }
    }
}

/// Confusion counts and derived rates for one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Metrics {
    /// Attacks classified as attacks.
    pub true_pos: usize,
    /// Attacks classified as benign.
    pub false_neg: usize,
    /// Benign classified as attacks.
    pub false_pos: usize,
    /// Benign classified as benign.
    pub true_neg: usize,
    /// `(tp + tn) / total`; always defined (inputs are nonempty).
    pub accuracy: f64,
    /// `tp / (tp + fn)`; absent when there are no positives.
    pub tpr: Option<f64>,
    /// `fp / (fp + tn)`; absent when there are no negatives.
    pub fpr: Option<f64>,
    /// Rank-statistic AUC over the raw scores; absent when a class is empty.
    pub auc: Option<f64>,
}

fn check_labels(labels: &[u8]) -> Result<(), MetricsError> {
    if let Some(bad) = labels.iter().find(|l| **l > 1) {
        return Err(MetricsError::input(format!(
            "labels must be 0 or 1, found {bad}"
        )));
    }
    Ok(())
}

/// Computes confusion counts and rates from hard predictions, plus AUC from
/// the soft scores. Thresholding happened at inference time (score > ½ → 1);
/// AUC uses the raw scores and so is threshold-free.
///
/// # Errors
///
/// [`MetricsError::Input`] on empty or length-mismatched inputs or labels
/// outside {0, 1}. A single-class label set is *not* an error here — the
/// affected rates simply come back absent.
pub fn compute_metrics(predictions: &[Prediction], labels: &[u8]) -> Result<Metrics, MetricsError> {
    if predictions.is_empty() {
        return Err(MetricsError::input("no predictions"));
    }
    if predictions.len() != labels.len() {
        return Err(MetricsError::input(format!(
            "{} predictions vs {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    check_labels(labels)?;

    let (mut tp, mut fn_, mut fp, mut tn) = (0usize, 0usize, 0usize, 0usize);
    for (pred, &label) in predictions.iter().zip(labels) {
        match (label, pred.label) {
            (1, 1) => tp += 1,
            (1, _) => fn_ += 1,
            (0, 1) => fp += 1,
            _ => tn += 1,
        }
    }
    let total = (tp + fn_ + fp + tn) as f64;
    let accuracy = (tp + tn) as f64 / total;
    let tpr = (tp + fn_ > 0).then(|| tp as f64 / (tp + fn_) as f64);
    let fpr = (fp + tn > 0).then(|| fp as f64 / (fp + tn) as f64);

    let scores: Vec<f64> = predictions.iter().map(|p| p.score).collect();
    let auc = match auc_roc(&scores, labels) {
        Ok(a) => Some(a),
        Err(MetricsError::UndefinedAuc) => None,
        Err(e) => return Err(e),
    };

    Ok(Metrics {
        true_pos: tp,
        false_neg: fn_,
        false_pos: fp,
        true_neg: tn,
        accuracy,
        tpr,
        fpr,
        auc,
    })
}

/// Area under the ROC curve, computed exactly by rank statistics:
/// `AUC = P(score⁺ > score⁻) + ½·P(score⁺ = score⁻)` over all positive/negative
/// pairs, evaluated in O(n log n) via midranks.
///
/// # Errors
///
/// [`MetricsError::UndefinedAuc`] when either class is empty;
/// [`MetricsError::Input`] on bad shapes or non-finite scores.
pub fn auc_roc(scores: &[f64], labels: &[u8]) -> Result<f64, MetricsError> {
    if scores.is_empty() || scores.len() != labels.len() {
        return Err(MetricsError::input(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    check_labels(labels)?;
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(MetricsError::input("scores must be finite"));
    }
    let n_pos = labels.iter().filter(|l| **l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricsError::UndefinedAuc);
    }

    // Sort indices by score (stable; ties keep input order, midranks make the
    // tie order irrelevant anyway).
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite scores"));

    // Midranks: tied scores all receive the mean of the ranks they span.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Ranks are 1-based: positions i..=j share rank (i + j) / 2 + 1.
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            if labels[idx] == 1 {
                rank_sum_pos += midrank;
            }
        }
        i = j + 1;
    }

    let n_pos_f = n_pos as f64;
    let u = rank_sum_pos - n_pos_f * (n_pos_f + 1.0) / 2.0;
    Ok(u / (n_pos_f * n_neg as f64))
}

/// Formats one float for CSV: shortest round-trippable form, empty for absent.
fn csv_float(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Renders metrics as a two-line CSV document.
///
/// Header: `tp,fn,fp,tn,accuracy,tpr,fpr,auc`. Absent rates serialize as empty
/// fields. Floats use the shortest round-trippable decimal form, so the bytes
/// are a pure function of the values.
pub fn metrics_csv(metrics: &Metrics) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["tp", "fn", "fp", "tn", "accuracy", "tpr", "fpr", "auc"])
        .expect("in-memory csv");
    w.write_record([
        metrics.true_pos.to_string(),
        metrics.false_neg.to_string(),
        metrics.false_pos.to_string(),
        metrics.true_neg.to_string(),
        metrics.accuracy.to_string(),
        csv_float(metrics.tpr),
        csv_float(metrics.fpr),
        csv_float(metrics.auc),
    ])
    .expect("in-memory csv");
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

/// Renders a training loss trace as CSV with header `epoch,loss`.
pub fn loss_trace_csv(trace: &[f64]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["epoch", "loss"]).expect("in-memory csv");
    for (epoch, loss) in trace.iter().enumerate() {
        w.write_record([epoch.to_string(), loss.to_string()])
            .expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn preds(pairs: &[(u8, f64)]) -> Vec<Prediction> {
        pairs
            .iter()
            .map(|&(label, score)| Prediction { label, score })
            .collect()
    }

    /// O(n²) oracle: count wins and half-ties over all positive/negative pairs.
    fn auc_pairwise(scores: &[f64], labels: &[u8]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, &li) in labels.iter().enumerate() {
            if li != 1 {
                continue;
            }
            for (j, &lj) in labels.iter().enumerate() {
                if lj != 0 {
                    continue;
                }
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn worked_four_point_case_is_exactly_three_quarters() {
        let scores = [0.1, 0.4, 0.35, 0.8];
        let labels = [0, 0, 1, 1];
        assert_eq!(auc_roc(&scores, &labels).unwrap(), 0.75);
    }

    #[test]
    fn perfect_separation_and_its_inversion() {
        let scores = [0.9, 0.8, 0.2, 0.1];
        assert_eq!(auc_roc(&scores, &[1, 1, 0, 0]).unwrap(), 1.0);
        assert_eq!(auc_roc(&scores, &[0, 0, 1, 1]).unwrap(), 0.0);
    }

    #[test]
    fn ties_get_half_credit() {
        let scores = [0.5, 0.5];
        assert_eq!(auc_roc(&scores, &[1, 0]).unwrap(), 0.5);
    }

    #[test]
    fn midranks_match_pairwise_oracle_on_random_vectors() {
        let mut rng = crate::gnn::SplitMix64::new(2718);
        for trial in 0..200 {
            let n = 2 + (rng.next_u64() % 40) as usize;
            let mut scores = Vec::with_capacity(n);
            let mut labels = Vec::with_capacity(n);
            for _ in 0..n {
                // Quantized scores to force plenty of ties.
                scores.push((rng.next_u64() % 8) as f64 / 8.0);
                labels.push((rng.next_u64() % 2) as u8);
            }
            if !labels.contains(&0) || !labels.contains(&1) {
                continue;
            }
            let fast = auc_roc(&scores, &labels).unwrap();
            let slow = auc_pairwise(&scores, &labels);
            assert!((fast - slow).abs() < 1e-12, "trial {trial}: {fast} vs {slow}");
        }
    }

    #[test]
    fn monotone_transform_leaves_auc_unchanged() {
        let scores = [0.1, 0.7, 0.3, 0.9, 0.5, 0.2];
        let labels = [0, 1, 0, 1, 1, 0];
        let base = auc_roc(&scores, &labels).unwrap();
        let squashed: Vec<f64> = scores.iter().map(|s| (3.0 * s + 1.0).tanh()).collect();
        assert!((auc_roc(&squashed, &labels).unwrap() - base).abs() < 1e-12);
    }

    #[test]
    fn random_scores_give_auc_near_half() {
        let mut rng = crate::gnn::SplitMix64::new(99);
        let mut scores = Vec::with_capacity(1000);
        let mut labels = Vec::with_capacity(1000);
        for i in 0..1000 {
            scores.push(rng.next_f64());
            labels.push((i % 2) as u8);
        }
        let auc = auc_roc(&scores, &labels).unwrap();
        assert!((0.45..=0.55).contains(&auc), "auc = {auc}");
    }

    #[test]
    fn single_class_auc_is_undefined() {
        assert!(matches!(
            auc_roc(&[0.1, 0.2], &[1, 1]),
            Err(MetricsError::UndefinedAuc)
        ));
    }

    #[test]
    fn confusion_counts_match_worked_example() {
        // tp=2, fn=0, fp=1, tn=1 → tpr=1.0, fpr=0.5, acc=0.75.
        let p = preds(&[(1, 0.9), (1, 0.8), (1, 0.7), (0, 0.1)]);
        let labels = [1, 1, 0, 0];
        let m = compute_metrics(&p, &labels).unwrap();
        assert_eq!(
            (m.true_pos, m.false_neg, m.false_pos, m.true_neg),
            (2, 0, 1, 1)
        );
        assert_eq!(m.tpr, Some(1.0));
        assert_eq!(m.fpr, Some(0.5));
        assert_eq!(m.accuracy, 0.75);
    }

    #[test]
    fn all_correct_means_perfect_rates() {
        let p = preds(&[(1, 0.9), (0, 0.1)]);
        let m = compute_metrics(&p, &[1, 0]).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.fpr, Some(0.0));
        assert_eq!(m.tpr, Some(1.0));
    }

    #[test]
    fn empty_negative_class_leaves_fpr_and_auc_absent() {
        let p = preds(&[(1, 0.9), (0, 0.4)]);
        let m = compute_metrics(&p, &[1, 1]).unwrap();
        assert_eq!(m.fpr, None);
        assert_eq!(m.auc, None);
        assert_eq!(m.tpr, Some(0.5));
    }

    #[test]
    fn counts_always_sum_to_input_length() {
        let mut rng = crate::gnn::SplitMix64::new(5);
        for _ in 0..50 {
            let n = 1 + (rng.next_u64() % 30) as usize;
            let p: Vec<Prediction> = (0..n)
                .map(|_| Prediction {
                    label: (rng.next_u64() % 2) as u8,
                    score: rng.next_f64(),
                })
                .collect();
            let labels: Vec<u8> = (0..n).map(|_| (rng.next_u64() % 2) as u8).collect();
            let m = compute_metrics(&p, &labels).unwrap();
            assert_eq!(m.true_pos + m.false_neg + m.false_pos + m.true_neg, n);
        }
    }

    #[test]
    fn length_mismatch_is_an_input_error() {
        let p = preds(&[(1, 0.9)]);
        assert!(matches!(
            compute_metrics(&p, &[1, 0]),
            Err(MetricsError::Input { .. })
        ));
        assert!(matches!(
            compute_metrics(&[], &[]),
            Err(MetricsError::Input { .. })
        ));
    }

    #[test]
    fn csv_rendering_is_stable_and_handles_absent_rates() {
        let p = preds(&[(1, 0.9), (0, 0.4)]);
        let m = compute_metrics(&p, &[1, 1]).unwrap();
        let text = metrics_csv(&m);
        assert_eq!(
            text,
            "tp,fn,fp,tn,accuracy,tpr,fpr,auc\n1,1,0,0,0.5,0.5,,\n"
        );
        assert_eq!(metrics_csv(&m), text);
    }

    #[test]
    fn loss_csv_lists_epochs_in_order() {
        let text = loss_trace_csv(&[0.7, 0.5, 0.25]);
        assert_eq!(text, "epoch,loss\n0,0.7\n1,0.5\n2,0.25\n");
    }
}
