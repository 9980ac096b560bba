//! Adam optimizer over named parameter sets.

use std::collections::BTreeMap;

use super::{Matrix, NumError, ParamSet};

/// Adam with the standard defaults β1=0.9, β2=0.999, ε=1e-8.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: u64,
    m: BTreeMap<String, Matrix>,
    v: BTreeMap<String, Matrix>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: BTreeMap::new(),
            v: BTreeMap::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update over every `(name, grad)` pair. Gradients must cover a
    /// subset of `params` with matching shapes; missing moments start at zero.
    pub fn step(
        &mut self,
        params: &mut ParamSet,
        grads: &BTreeMap<String, Matrix>,
    ) -> Result<(), NumError> {
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for (name, g) in grads {
            let p = params.try_get(name).ok_or_else(|| {
                NumError::ParamMismatch(format!("gradient for unknown parameter {name:?}"))
            })?;
            if p.shape() != g.shape() {
                return Err(NumError::DimMismatch {
                    op: "adam_step",
                    lhs: format!("param {name:?} {}x{}", p.rows(), p.cols()),
                    rhs: format!("grad {}x{}", g.rows(), g.cols()),
                });
            }
            let m = self
                .m
                .entry(name.clone())
                .or_insert_with(|| Matrix::zeros(g.rows(), g.cols()));
            let v = self
                .v
                .entry(name.clone())
                .or_insert_with(|| Matrix::zeros(g.rows(), g.cols()));
            let pdata = params.get_mut(name).data_mut();
            for i in 0..g.len() {
                let gi = g.data()[i];
                let mi = self.beta1 * m.data()[i] + (1.0 - self.beta1) * gi;
                let vi = self.beta2 * v.data()[i] + (1.0 - self.beta2) * gi * gi;
                m.data_mut()[i] = mi;
                v.data_mut()[i] = vi;
                let mhat = mi / bc1;
                let vhat = vi / bc2;
                pdata[i] -= self.lr * mhat / (vhat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(name: &str, v: f64) -> (ParamSet, BTreeMap<String, Matrix>) {
        let mut p = ParamSet::new();
        p.insert(name, Matrix::from_vec(1, 1, vec![v]));
        (p, BTreeMap::new())
    }

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let (mut p, mut g) = single("w", 1.5);
        g.insert("w".into(), Matrix::zeros(1, 1));
        let mut adam = Adam::new(0.01);
        adam.step(&mut p, &g).unwrap();
        assert_eq!(p.get("w").get(0, 0), 1.5);
        assert_eq!(adam.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_about_lr() {
        // g=1, first step: m̂=v̂=1, so Δ = lr/(1+ε) ≈ lr.
        let (mut p, mut g) = single("w", 0.0);
        g.insert("w".into(), Matrix::from_vec(1, 1, vec![1.0]));
        let mut adam = Adam::new(0.01);
        adam.step(&mut p, &g).unwrap();
        let delta = -p.get("w").get(0, 0);
        assert!((delta - 0.01).abs() < 1e-9, "delta = {delta}");
    }

    #[test]
    fn identical_runs_are_bit_identical() {
        let run = || {
            let (mut p, mut g) = single("w", 0.3);
            g.insert("w".into(), Matrix::from_vec(1, 1, vec![0.7]));
            let mut adam = Adam::new(0.005);
            for _ in 0..50 {
                adam.step(&mut p, &g).unwrap();
            }
            p.byte_image()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn shape_mismatch_is_error() {
        let (mut p, mut g) = single("w", 0.0);
        g.insert("w".into(), Matrix::zeros(2, 1));
        assert!(Adam::new(0.01).step(&mut p, &g).is_err());
        let mut g2 = BTreeMap::new();
        g2.insert("nope".into(), Matrix::zeros(1, 1));
        assert!(Adam::new(0.01).step(&mut p, &g2).is_err());
    }
}
