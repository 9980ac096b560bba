//! Central finite-difference gradient oracle.
//!
//! Lives in the library (not test code) so every layer's tests and the
//! acceptance suite share one checker. The relative-error metric is
//! `|analytic − cd| / max(|analytic|, |cd|, 1e-8)` maximized over every
//! parameter element.

use std::collections::BTreeMap;

use super::{Matrix, NumError, ParamSet};

/// Compares `analytic` gradients against central finite differences of `f`
/// at `params`, returning the maximum relative error.
///
/// `f` must be a pure function of the parameter set. `step` is the central
/// difference half-width (1e-5 is a good default for f64).
pub fn finite_diff_check(
    f: &mut dyn FnMut(&ParamSet) -> Result<f64, NumError>,
    params: &ParamSet,
    analytic: &BTreeMap<String, Matrix>,
    step: f64,
) -> Result<f64, NumError> {
    assert!(step > 0.0, "step must be positive");
    let mut worst: f64 = 0.0;
    let mut perturbed = params.clone();
    for (name, m) in params.iter() {
        let a = analytic.get(name).ok_or_else(|| {
            NumError::ParamMismatch(format!("no analytic gradient for {name:?}"))
        })?;
        if a.shape() != m.shape() {
            return Err(NumError::DimMismatch {
                op: "finite_diff_check",
                lhs: format!("param {name:?} {}x{}", m.rows(), m.cols()),
                rhs: format!("grad {}x{}", a.rows(), a.cols()),
            });
        }
        for idx in 0..m.len() {
            let orig = m.data()[idx];
            perturbed.get_mut(name).data_mut()[idx] = orig + step;
            let fp = f(&perturbed)?;
            perturbed.get_mut(name).data_mut()[idx] = orig - step;
            let fm = f(&perturbed)?;
            perturbed.get_mut(name).data_mut()[idx] = orig;
            if !fp.is_finite() || !fm.is_finite() {
                return Err(NumError::NonFinite {
                    op: "finite_diff_check",
                });
            }
            let cd = (fp - fm) / (2.0 * step);
            let an = a.data()[idx];
            let rel = (an - cd).abs() / an.abs().max(cd.abs()).max(1e-8);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_param(v: f64) -> ParamSet {
        let mut p = ParamSet::new();
        p.insert("w", Matrix::from_vec(1, 1, vec![v]));
        p
    }

    #[test]
    fn quadratic_gradient_checks_out() {
        let params = scalar_param(3.0);
        let mut grads = BTreeMap::new();
        grads.insert("w".to_string(), Matrix::from_vec(1, 1, vec![6.0]));
        let err = finite_diff_check(
            &mut |p| Ok(p.get("w").get(0, 0).powi(2)),
            &params,
            &grads,
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-8, "err = {err}");
    }

    #[test]
    fn detects_gradient_off_by_factor_two() {
        let params = scalar_param(3.0);
        let mut grads = BTreeMap::new();
        grads.insert("w".to_string(), Matrix::from_vec(1, 1, vec![12.0]));
        let err = finite_diff_check(
            &mut |p| Ok(p.get("w").get(0, 0).powi(2)),
            &params,
            &grads,
            1e-5,
        )
        .unwrap();
        assert!((err - 0.5).abs() < 1e-6, "err = {err}");
    }

    #[test]
    fn non_finite_objective_is_reported() {
        let params = scalar_param(0.0);
        let mut grads = BTreeMap::new();
        grads.insert("w".to_string(), Matrix::zeros(1, 1));
        let res = finite_diff_check(&mut |_| Ok(f64::NAN), &params, &grads, 1e-5);
        assert!(res.is_err());
    }
}
