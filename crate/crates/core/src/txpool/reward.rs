//! Richards-curve transaction reward.

use super::TxError;

/// Softmax of `sign * x / ||x||_2`, shifted by the maximum for stability.
fn scaled_softmax(x: &[f64], sign: f64) -> Result<Vec<f64>, TxError> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(TxError::ZeroVector);
    }
    let logits: Vec<f64> = x.iter().map(|v| sign * v / norm).collect();
    let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// `r_j = (1 + ṽ_j e^{-f_j})^{-1/ã_j}` with ṽ = softmax(-v/‖v‖), ã = softmax(a/‖a‖).
pub fn compute_rewards(vitality: &[f64], age: &[f64], fee: &[f64]) -> Result<Vec<f64>, TxError> {
    let n = vitality.len();
    if n == 0 {
        return Err(TxError::Empty);
    }
    if age.len() != n || fee.len() != n {
        return Err(TxError::Length { vitality: n, age: age.len(), fee: fee.len() });
    }
    let v = scaled_softmax(vitality, -1.0)?;
    let a = scaled_softmax(age, 1.0)?;
    Ok((0..n)
        .map(|j| (-(v[j] * (-fee[j]).exp()).ln_1p() / a[j]).exp())
        .collect())
}
