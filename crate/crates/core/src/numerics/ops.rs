//! Forward/backward primitives for dense layers.

use rand::Rng;
use rand_distr::{Distribution, Uniform};

use crate::error::{Error, Result};
use crate::rng::seeded;

use super::matrix::DenseMatrix;

pub fn relu_forward(x: &DenseMatrix) -> DenseMatrix {
    let mut out = x.clone();
    out.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
    out
}

/// Gradient through ReLU given the pre-activation `pre`. The derivative at 0 is taken as 0.
pub fn relu_backward(grad_out: &DenseMatrix, pre: &DenseMatrix) -> Result<DenseMatrix> {
    if grad_out.shape() != pre.shape() {
        return Err(Error::Shape {
            op: "relu_backward",
            left: grad_out.shape(),
            right: pre.shape(),
        });
    }
    let mut out = grad_out.clone();
    for (g, &p) in out.data_mut().iter_mut().zip(pre.data()) {
        if p <= 0.0 {
            *g = 0.0;
        }
    }
    Ok(out)
}

pub fn matmul_forward(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    a.matmul(b)
}

/// For `C = A·B`, returns `(dA, dB)` given `dC`.
pub fn matmul_backward(
    a: &DenseMatrix,
    b: &DenseMatrix,
    grad_out: &DenseMatrix,
) -> Result<(DenseMatrix, DenseMatrix)> {
    if grad_out.shape() != (a.rows(), b.cols()) {
        return Err(Error::Shape {
            op: "matmul_backward",
            left: grad_out.shape(),
            right: (a.rows(), b.cols()),
        });
    }
    Ok((grad_out.matmul_nt(b)?, a.matmul_tn(grad_out)?))
}

/// Row-wise softmax with max-shift for stability.
pub fn softmax_rows(logits: &DenseMatrix) -> DenseMatrix {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        softmax_in_place(out.row_mut(r));
    }
    out
}

pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    let inv = 1.0 / sum;
    row.iter_mut().for_each(|v| *v *= inv);
}

/// Mean negative log-likelihood over the rows in `mask`, with its gradient
/// with respect to `logits` (zero on unmasked rows).
///
/// `targets` is indexed by row and only read at masked rows.
pub fn cross_entropy(
    logits: &DenseMatrix,
    targets: &[usize],
    mask: &[usize],
) -> Result<(f64, DenseMatrix)> {
    if mask.is_empty() {
        return Err(Error::EmptySet("cross_entropy mask"));
    }
    if targets.len() != logits.rows() {
        return Err(Error::Shape {
            op: "cross_entropy",
            left: logits.shape(),
            right: (targets.len(), 1),
        });
    }
    let inv = 1.0 / mask.len() as f64;
    let mut grad = DenseMatrix::zeros(logits.rows(), logits.cols());
    let mut loss = 0.0;
    let mut probs = vec![0.0; logits.cols()];
    for &r in mask {
        probs.copy_from_slice(logits.row(r));
        softmax_in_place(&mut probs);
        let t = targets[r];
        loss -= probs[t].max(f64::MIN_POSITIVE).ln();
        let g = grad.row_mut(r);
        for (j, (gv, &p)) in g.iter_mut().zip(&probs).enumerate() {
            *gv = (p - if j == t { 1.0 } else { 0.0 }) * inv;
        }
    }
    Ok((loss * inv, grad))
}

/// Glorot/Xavier uniform initialization, `U(-√(6/(r+c)), √(6/(r+c)))`.
pub fn glorot_init(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    glorot_init_with(rows, cols, &mut seeded(seed))
}

pub fn glorot_init_with<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DenseMatrix {
    let bound = glorot_bound(rows, cols);
    let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
    let data = (0..rows * cols).map(|_| dist.sample(rng)).collect();
    DenseMatrix::new(rows, cols, data).expect("shape")
}

pub fn glorot_bound(rows: usize, cols: usize) -> f64 {
    (6.0 / (rows + cols) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_examples() {
        let x = DenseMatrix::row_vector(&[-1.0, 0.0, 2.0]);
        assert_eq!(relu_forward(&x).data(), &[0.0, 0.0, 2.0]);
        let g = DenseMatrix::row_vector(&[1.0, 1.0, 1.0]);
        assert_eq!(relu_backward(&g, &x).unwrap().data(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn uniform_logits_give_ln_k() {
        let logits = DenseMatrix::zeros(3, 4);
        let (loss, grad) = cross_entropy(&logits, &[0, 1, 2], &[0, 2]).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-15);
        assert!(grad.row(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cross_entropy_rejects_empty_mask() {
        let logits = DenseMatrix::zeros(2, 2);
        assert!(matches!(
            cross_entropy(&logits, &[0, 0], &[]),
            Err(Error::EmptySet(_))
        ));
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let logits = glorot_init(7, 5, 3);
        let p = softmax_rows(&logits);
        for r in 0..7 {
            let s: f64 = p.row(r).iter().sum();
            assert!((s - 1.0).abs() <= 1e-9);
            assert!(p.row(r).iter().all(|&v| v > 0.0 && v < 1.0));
        }
    }

    #[test]
    fn glorot_bounds_and_determinism() {
        let a = glorot_init(20, 30, 9);
        let b = glorot_init(20, 30, 9);
        assert_eq!(a, b);
        let bound = glorot_bound(20, 30);
        assert!(a.data().iter().all(|v| v.abs() <= bound));
    }

    #[test]
    fn glorot_mean_within_three_sigma() {
        // U(-b, b) has variance b²/3; the mean of 1000 draws has sd b/√3000.
        let m = glorot_init(40, 25, 11);
        let b = glorot_bound(40, 25);
        let mean: f64 = m.data().iter().sum::<f64>() / 1000.0;
        assert!(mean.abs() < 3.0 * b / 3000f64.sqrt(), "mean {mean}");
    }
}
