//! Central-difference gradient oracle.
//!
//! Independent of the tape by construction: it only evaluates the supplied
//! scalar function, so it can check any differentiation path.

use crate::tensor::Tensor;

/// Central-difference gradient estimate `(f(x+h·eᵢ) − f(x−h·eᵢ)) / 2h`
/// per coordinate.
pub fn finite_diff_grad<F>(mut f: F, x: &Tensor, h: f64) -> Tensor
where
    F: FnMut(&Tensor) -> f64,
{
    assert!(h > 0.0, "finite-difference step must be positive");
    let mut grad = vec![0.0; x.numel()];
    for i in 0..x.numel() {
        let mut plus = x.clone();
        plus.data_mut()[i] += h;
        let mut minus = x.clone();
        minus.data_mut()[i] -= h;
        grad[i] = (f(&plus) - f(&minus)) / (2.0 * h);
    }
    Tensor::new(x.shape().to_vec(), grad).expect("shape preserved")
}

/// Worst-case elementwise relative error with denominator `max(|g|, 1e-8)`.
pub fn max_rel_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / n.abs().max(1e-8))
        .fold(0.0, f64::max)
}
