//! Evaluation metrics: AUC and logloss, plus the sigmoid prediction head.

use crate::error::{Error, Result};

/// Clamp bound applied to probabilities before taking logs.
pub const PROB_EPS: f64 = 1e-7;

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Prediction probability from a scalar logit.
pub fn predict(logit: f64) -> f64 {
    sigmoid(logit)
}

/// Mean binary cross-entropy with probabilities clamped to
/// `[PROB_EPS, 1 - PROB_EPS]`.
pub fn logloss(labels: &[u8], probabilities: &[f64]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::EmptyMetricInput);
    }
    assert_eq!(labels.len(), probabilities.len());
    let mut acc = 0.0;
    for (&y, &p) in labels.iter().zip(probabilities) {
        let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
        acc -= if y == 1 { p.ln() } else { (1.0 - p).ln() };
    }
    Ok(acc / labels.len() as f64)
}

/// Rank-based AUC (Mann-Whitney) with ties contributing 1/2.
/// All-positive or all-negative labels are not computable.
pub fn auc(labels: &[u8], scores: &[f64]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::EmptyMetricInput);
    }
    assert_eq!(labels.len(), scores.len());
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::AucUndefined);
    }

    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("scores must not be NaN"));

    // Midrank accumulation over tie groups.
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            if labels[k] == 1 {
                rank_sum_pos += midrank;
            }
        }
        i = j + 1;
    }
    let p = pos as f64;
    let n = neg as f64;
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predict_examples() {
        assert_eq!(predict(0.0), 0.5);
        assert!((predict(40.0) - 1.0).abs() < 1e-12);
        // sigma(11) = 0.999983298578 (scalar evaluation)
        assert!((predict(11.0) - 0.999983298578).abs() < 1e-9);
    }

    #[test]
    fn logloss_examples() {
        // y=1 against p ~ 1 is ~0
        assert!(logloss(&[1], &[1.0 - 1e-9]).unwrap() < 1e-6);
        // y=1 at p=0.5 is ln 2
        assert!((logloss(&[1], &[0.5]).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
        // -(ln 0.9 + ln 0.8)/2 = 0.164252033486
        assert!((logloss(&[1, 0], &[0.9, 0.2]).unwrap() - 0.164252033486).abs() < 1e-9);
        assert!(matches!(logloss(&[], &[]), Err(Error::EmptyMetricInput)));
    }

    #[test]
    fn logloss_clamps_extremes() {
        let l = logloss(&[1], &[0.0]).unwrap();
        assert!((l - (-(PROB_EPS.ln()))).abs() < 1e-9);
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[1, 0], &[0.9, 0.1]).unwrap(), 1.0);
        assert_eq!(auc(&[1, 0], &[0.1, 0.9]).unwrap(), 0.0);
        assert_eq!(auc(&[1, 0], &[0.5, 0.5]).unwrap(), 0.5);
        assert!(matches!(auc(&[1, 1], &[0.1, 0.2]), Err(Error::AucUndefined)));
        assert!(matches!(auc(&[0, 0], &[0.1, 0.2]), Err(Error::AucUndefined)));
    }

    #[test]
    fn auc_counts_pairs() {
        // 2 positives, 2 negatives; one discordant pair of 4 -> 0.75
        let labels = [1, 1, 0, 0];
        let scores = [0.9, 0.3, 0.5, 0.1];
        assert!((auc(&labels, &scores).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn auc_invariant_under_monotone_transform() {
        let labels = [1, 0, 1, 0, 1, 1, 0, 0, 1, 0];
        let scores = [0.9, 0.2, 0.65, 0.6, 0.62, 0.3, 0.31, 0.05, 0.99, 0.5];
        let base = auc(&labels, &scores).unwrap();
        let squashed: Vec<f64> = scores.iter().map(|s| (5.0 * s - 2.0).tanh()).collect();
        let scaled: Vec<f64> = scores.iter().map(|s| 1000.0 * s + 7.0).collect();
        assert!((auc(&labels, &squashed).unwrap() - base).abs() < 1e-12);
        assert!((auc(&labels, &scaled).unwrap() - base).abs() < 1e-12);
    }
}
