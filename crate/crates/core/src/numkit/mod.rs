//! Deterministic dense numeric core.
//!
//! Everything is 64-bit floating point and single-threaded by contract: with a
//! fixed seed, any training run produces bit-identical parameters and metrics
//! across repeated executions. No operation here may produce NaN/Inf from
//! finite inputs.

mod checkpoint;
mod gradcheck;
mod matrix;
mod optim;
mod params;
mod rng;
mod tape;

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_VERSION};
pub use gradcheck::finite_diff_check;
pub use matrix::Matrix;
pub use optim::Adam;
pub use params::ParamSet;
pub use rng::SeededRng;
pub use tape::{NodeId, ParamGrads, ParamShapes, Tape};

use thiserror::Error;

/// Errors from the numeric core.
#[derive(Debug, Error)]
pub enum NumError {
    #[error("dimension mismatch in {op}: {lhs} vs {rhs}")]
    DimMismatch {
        op: &'static str,
        lhs: String,
        rhs: String,
    },
    #[error("{op}: empty input")]
    EmptyInput { op: &'static str },
    #[error("{op}: non-finite value encountered")]
    NonFinite { op: &'static str },
    #[error("index {index} out of range for {op} of size {size}")]
    IndexOutOfRange {
        op: &'static str,
        index: usize,
        size: usize,
    },
    #[error("tape state error: {0}")]
    TapeState(String),
    #[error("parameter set mismatch: {0}")]
    ParamMismatch(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("checkpoint io at {path}: {source}")]
    CheckpointIo {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Element-wise activation kinds used across the classifier and actor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
}

/// `W·x + b` without tape recording. The tape variant is [`Tape::affine`].
pub fn affine_forward(x: &[f64], w: &Matrix, b: &[f64]) -> Result<Vec<f64>, NumError> {
    if w.cols() != x.len() || w.rows() != b.len() {
        return Err(NumError::DimMismatch {
            op: "affine_forward",
            lhs: format!("W {}x{}", w.rows(), w.cols()),
            rhs: format!("x {} / b {}", x.len(), b.len()),
        });
    }
    let mut out = w.matvec(x);
    for (o, bi) in out.iter_mut().zip(b) {
        *o += bi;
    }
    Ok(out)
}

/// Element-wise activation. Rejects non-finite inputs.
pub fn activation(x: &[f64], kind: Activation) -> Result<Vec<f64>, NumError> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(NumError::NonFinite { op: "activation" });
    }
    Ok(x.iter().map(|&v| apply_activation(v, kind)).collect())
}

pub(crate) fn apply_activation(v: f64, kind: Activation) -> f64 {
    match kind {
        Activation::Relu => {
            if v > 0.0 {
                v
            } else {
                0.0
            }
        }
        Activation::Sigmoid => 1.0 / (1.0 + (-v).exp()),
        Activation::Tanh => v.tanh(),
    }
}

/// Max-shifted softmax; output sums to 1 within 1e-12 and never overflows.
pub fn softmax(z: &[f64]) -> Result<Vec<f64>, NumError> {
    if z.is_empty() {
        return Err(NumError::EmptyInput { op: "softmax" });
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(NumError::NonFinite { op: "softmax" });
    }
    Ok(softmax_unchecked(z))
}

pub(crate) fn softmax_unchecked(z: &[f64]) -> Vec<f64> {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for v in out.iter_mut() {
        *v /= sum;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn affine_identity() {
        let w = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let y = affine_forward(&[1.0, 2.0], &w, &[0.0, 0.0]).unwrap();
        assert_eq!(y, vec![1.0, 2.0]);
    }

    #[test]
    fn affine_hand_arithmetic() {
        let w = Matrix::from_rows(&[&[2.0, 3.0]]);
        let y = affine_forward(&[1.0, 1.0], &w, &[1.0]).unwrap();
        assert_eq!(y, vec![6.0]);
    }

    #[test]
    fn affine_shape_error_names_both_shapes() {
        let w = Matrix::from_rows(&[&[1.0, 2.0]]);
        let err = affine_forward(&[1.0], &w, &[0.0]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("1x2") && msg.contains("x 1"), "{msg}");
    }

    #[test]
    fn activation_examples() {
        assert_eq!(
            activation(&[-1.0, 0.0, 2.0], Activation::Relu).unwrap(),
            vec![0.0, 0.0, 2.0]
        );
        assert_eq!(activation(&[0.0], Activation::Sigmoid).unwrap(), vec![0.5]);
        assert_eq!(activation(&[0.0], Activation::Tanh).unwrap(), vec![0.0]);
        assert!(activation(&[f64::NAN], Activation::Relu).is_err());
    }

    #[test]
    fn activation_bounds() {
        let xs: Vec<f64> = (-50..50).map(|i| i as f64 * 0.37).collect();
        for &v in activation(&xs, Activation::Sigmoid).unwrap().iter() {
            assert!(v > 0.0 && v < 1.0);
        }
        for &v in activation(&xs, Activation::Tanh).unwrap().iter() {
            assert!(v > -1.0 && v < 1.0);
        }
    }

    #[test]
    fn softmax_symmetry_and_overflow() {
        assert_eq!(softmax(&[0.0, 0.0]).unwrap(), vec![0.5, 0.5]);
        let p = softmax(&[1000.0, 1000.0, 1000.0]).unwrap();
        for &v in &p {
            assert!(v.is_finite());
            assert_relative_eq!(v, 1.0 / 3.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn softmax_log_ratios() {
        // softmax(ln 1, ln 2, ln 3) = (1/6, 2/6, 3/6) by definition.
        let p = softmax(&[1f64.ln(), 2f64.ln(), 3f64.ln()]).unwrap();
        assert_relative_eq!(p[0], 1.0 / 6.0, max_relative = 1e-12);
        assert_relative_eq!(p[1], 2.0 / 6.0, max_relative = 1e-12);
        assert_relative_eq!(p[2], 3.0 / 6.0, max_relative = 1e-12);
    }

    #[test]
    fn softmax_empty_is_error() {
        assert!(softmax(&[]).is_err());
    }

    #[test]
    fn softmax_sums_to_one_and_shift_invariant() {
        let mut rng = SeededRng::new(7);
        for _ in 0..200 {
            let n = 1 + (rng.below(6) as usize);
            let z: Vec<f64> = (0..n).map(|_| rng.uniform(-30.0, 30.0)).collect();
            let p = softmax(&z).unwrap();
            let sum: f64 = p.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            let shifted: Vec<f64> = z.iter().map(|v| v + 13.25).collect();
            let q = softmax(&shifted).unwrap();
            for (a, b) in p.iter().zip(&q) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
