//! Cross-entropy, softmax and 0-1 error over `(batch, classes)` logits.

use crate::{Error, Result, Tensor};

fn check_labels(logits: &Tensor, labels: &[usize]) -> Result<usize> {
    if logits.shape().len() != 2 {
        return Err(Error::Shape(format!("logits must be 2-D, got {:?}", logits.shape())));
    }
    if logits.rows() != labels.len() {
        return Err(Error::Shape(format!(
            "{} logit rows but {} labels",
            logits.rows(),
            labels.len()
        )));
    }
    let k = logits.row_len();
    if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::Shape(format!("label {bad} out of range for {k} classes")));
    }
    Ok(k)
}

fn log_sum_exp(row: &[f64]) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Row-wise softmax, stabilized by the row maximum.
pub fn softmax(logits: &Tensor) -> Tensor {
    let k = logits.row_len();
    let mut out = logits.clone();
    for row in out.data_mut().chunks_mut(k.max(1)) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// Sum over the batch of `-log softmax(logits)[label]`.
pub(crate) fn cross_entropy_sum(logits: &Tensor, labels: &[usize]) -> Result<f64> {
    check_labels(logits, labels)?;
    Ok(labels
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let row = logits.row(i);
            log_sum_exp(row) - row[y]
        })
        .sum())
}

/// Mean cross-entropy over the batch.
pub fn cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::Shape("empty batch".into()));
    }
    Ok(cross_entropy_sum(logits, labels)? / labels.len() as f64)
}

/// Gradient of the mean cross-entropy with respect to the logits.
pub fn cross_entropy_grad(logits: &Tensor, labels: &[usize]) -> Result<Vec<f64>> {
    let k = check_labels(logits, labels)?;
    let n = labels.len() as f64;
    let mut grad = softmax(logits).into_data();
    for (i, &y) in labels.iter().enumerate() {
        grad[i * k + y] -= 1.0;
    }
    grad.iter_mut().for_each(|g| *g /= n);
    Ok(grad)
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn error_count(logits: &Tensor, labels: &[usize]) -> Result<usize> {
    check_labels(logits, labels)?;
    Ok(labels
        .iter()
        .enumerate()
        .filter(|&(i, &y)| argmax(logits.row(i)) != y)
        .count())
}

/// Fraction of misclassified samples.
pub fn error01(logits: &Tensor, labels: &[usize]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::Shape("empty batch".into()));
    }
    Ok(error_count(logits, labels)? as f64 / labels.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(rows: &[Vec<f64>]) -> Tensor {
        Tensor::from_rows(rows).unwrap()
    }

    #[test]
    fn uniform_logits_give_log_k() {
        let loss = cross_entropy(&t(&[vec![0.3; 4]]), &[2]).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn confident_correct_logits() {
        // -log(e^10 / (e^10 + 3)) = ln(1 + 3 e^-10)
        let expected = (1.0 + 3.0 * (-10f64).exp()).ln();
        let loss = cross_entropy(&t(&[vec![10.0, 0.0, 0.0, 0.0]]), &[0]).unwrap();
        assert!((loss - expected).abs() < 1e-15);
        assert!((loss - 1.36e-4).abs() < 1e-6);
    }

    #[test]
    fn class_permutation_symmetry() {
        let a = t(&[vec![1.0, -2.0, 0.5], vec![0.1, 0.2, 0.3]]);
        let b = t(&[vec![0.5, 1.0, -2.0], vec![0.3, 0.1, 0.2]]);
        let la = cross_entropy(&a, &[1, 2]).unwrap();
        let lb = cross_entropy(&b, &[2, 0]).unwrap();
        assert!((la - lb).abs() < 1e-14);
    }

    #[test]
    fn huge_logits_stay_finite() {
        let loss = cross_entropy(&t(&[vec![1e6, -1e6]]), &[1]).unwrap();
        assert!((loss - 2e6).abs() < 1e-6);
    }

    #[test]
    fn error01_counts() {
        let logits = t(&vec![vec![1.0, 0.0]; 10]);
        assert_eq!(error01(&logits, &[0; 10]).unwrap(), 0.0);
        assert_eq!(error01(&logits, &[1; 10]).unwrap(), 1.0);
        let labels = [1, 1, 1, 0, 0, 0, 0, 0, 0, 0];
        assert!((error01(&logits, &labels).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        assert_eq!(argmax(&[2.0, 2.0, 1.0]), 0);
        assert_eq!(error01(&t(&[vec![1.0, 1.0]]), &[1]).unwrap(), 1.0);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let s = softmax(&t(&[vec![100.0, -3.0, 7.5], vec![0.0, 0.0, 1e-9]]));
        for r in 0..2 {
            assert!((s.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
