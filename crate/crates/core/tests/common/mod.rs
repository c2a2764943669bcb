#![allow(dead_code)]

use fieldroad_core::discrete::DiscreteOperator;
use nalgebra::DMatrix;

/// Eigenvalue of minimal real part of the dense copy of `op`, with the
/// corresponding null vector of `A − λI` (sign-normalized to a positive sum).
pub fn dense_principal(op: &DiscreteOperator) -> (f64, f64, Vec<f64>) {
    let n = op.dim;
    let a = DMatrix::from_row_slice(n, n, &op.to_dense());
    let eig = a.clone().complex_eigenvalues();
    let lam = eig
        .iter()
        .min_by(|x, y| x.re.total_cmp(&y.re))
        .copied()
        .expect("nonempty spectrum");
    let shifted = a - DMatrix::identity(n, n) * lam.re;
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors");
    let k = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .map(|(k, _)| k)
        .unwrap();
    let mut v: Vec<f64> = v_t.row(k).iter().copied().collect();
    if v.iter().sum::<f64>() < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    (lam.re, lam.im, v)
}
