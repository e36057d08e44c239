use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Numerically stable softmax.
pub fn softmax(logits: &Tensor) -> Tensor {
    let max = logits
        .data()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let exp = logits.map(|z| (z - max).exp());
    let total = exp.sum();
    exp.map(|e| e / total)
}

/// Cross-entropy of `softmax(logits)` against `label`, and its gradient
/// `p - onehot(label)`.
pub fn softmax_cross_entropy(logits: &Tensor, label: usize) -> Result<(f64, Tensor)> {
    let classes = logits.len();
    if classes < 2 {
        return Err(Error::Shape(format!(
            "need at least 2 logits, got {classes}"
        )));
    }
    if label >= classes {
        return Err(Error::Label(format!(
            "label {label} out of range for {classes} classes"
        )));
    }
    if !logits.is_finite() {
        return Err(Error::Parameter("non-finite logits".into()));
    }
    let z = logits.data();
    let top = (0..classes).fold(0, |best, i| if z[i] > z[best] { i } else { best });
    let rest: f64 = (0..classes)
        .filter(|&i| i != top)
        .map(|i| (z[i] - z[top]).exp())
        .sum();
    // log-sum-exp = z[top] + ln(1 + rest); ln_1p keeps tiny losses accurate.
    let loss = (z[top] - z[label]) + rest.ln_1p();
    let mut grad = softmax(logits);
    grad.data_mut()[label] -= 1.0;
    Ok((loss, grad))
}
