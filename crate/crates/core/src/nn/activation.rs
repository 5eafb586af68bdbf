use super::Tensor;
use crate::error::{Error, Result};

/// Lower clamp on probabilities inside the cross-entropy logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

pub fn relu(z: &Tensor) -> Tensor {
    let mut out = z.clone();
    out.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
    out
}

/// Passes gradient where the forward input was positive.
pub fn relu_backward(grad_out: &Tensor, input: &Tensor) -> Tensor {
    let mut g = grad_out.clone();
    for (d, x) in g.data_mut().iter_mut().zip(input.data()) {
        if *x <= 0.0 {
            *d = 0.0;
        }
    }
    g
}

/// Row-wise softmax over the last axis of a `[N, K]` tensor.
pub fn softmax(x: &Tensor) -> Result<Tensor> {
    let (_, k) = x.dims2()?;
    let mut out = x.clone();
    for row in out.data_mut().chunks_exact_mut(k) {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        row.iter_mut().for_each(|v| *v /= sum);
    }
    Ok(out)
}

/// Mean of `-Σ_k y_k ln(max(p_k, 1e-12))` over the batch, for integer labels.
pub fn cross_entropy(probs: &Tensor, labels: &[usize]) -> Result<f64> {
    let (n, k) = probs.dims2()?;
    check_labels(n, k, labels)?;
    let total: f64 = probs
        .data()
        .chunks_exact(k)
        .zip(labels)
        .map(|(p, &y)| -p[y].max(PROB_FLOOR).ln())
        .sum();
    Ok(total / n as f64)
}

fn check_labels(n: usize, k: usize, labels: &[usize]) -> Result<()> {
    if labels.len() != n {
        return Err(Error::invalid(format!("{} labels for a batch of {n}", labels.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= k) {
        return Err(Error::invalid(format!("label {bad} outside [0, {k})")));
    }
    Ok(())
}

/// Softmax + cross-entropy on logits: returns `(loss, probs, dloss/dlogits = (p − y)/N)`.
pub fn softmax_cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<(f64, Tensor, Tensor)> {
    let (n, k) = logits.dims2()?;
    check_labels(n, k, labels)?;
    let probs = softmax(logits)?;
    let loss = cross_entropy(&probs, labels)?;
    let mut grad = probs.clone();
    for (row, &y) in grad.data_mut().chunks_exact_mut(k).zip(labels) {
        row[y] -= 1.0;
        row.iter_mut().for_each(|v| *v /= n as f64);
    }
    Ok((loss, probs, grad))
}
