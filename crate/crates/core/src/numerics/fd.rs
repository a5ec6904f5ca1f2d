use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Central-difference Jacobian of `f` at `point`.
///
/// Entry `(i, j)` is `(f_i(p + h e_j) - f_i(p - h e_j)) / 2h`.
pub fn fd_jacobian<F>(f: F, point: &DVector<f64>, step: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    try_fd_jacobian(|p| Ok(f(p)), point, step)
}

/// Same as [`fd_jacobian`] for maps that can fail (for example by leaving a
/// chart).
pub fn try_fd_jacobian<F>(f: F, point: &DVector<f64>, step: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    let a = point.len();
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(a);
    let mut rows = None;
    let mut probe = point.clone();
    for j in 0..a {
        let orig = probe[j];
        probe[j] = orig + step;
        let plus = f(&probe)?;
        probe[j] = orig - step;
        let minus = f(&probe)?;
        probe[j] = orig;
        if plus.len() != minus.len() {
            return Err(Error::DimensionMismatch {
                context: "fd_jacobian output".into(),
                expected: plus.len(),
                got: minus.len(),
            });
        }
        if plus.iter().chain(minus.iter()).any(|v| !v.is_finite()) {
            return Err(Error::non_finite("fd_jacobian", Some(j)));
        }
        rows.get_or_insert(plus.len());
        cols.push((plus - minus) / (2.0 * step));
    }
    let b = match rows {
        Some(b) => b,
        // zero-dimensional input: the output size comes from one evaluation
        None => f(point)?.len(),
    };
    let mut jac = DMatrix::zeros(b, a);
    for (j, c) in cols.into_iter().enumerate() {
        jac.set_column(j, &c);
    }
    Ok(jac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::max_abs;

    #[test]
    fn identity_map_gives_identity() {
        let p = DVector::from_vec(vec![0.3, -1.2, 4.0]);
        let j = fd_jacobian(|v| v.clone(), &p, 1e-5).unwrap();
        assert!(max_abs(&(j - DMatrix::identity(3, 3))) < 1e-10);
    }

    #[test]
    fn additive_product_v_block_is_identity() {
        // f(v, w) = v + w; differentiate in v with w frozen
        let w = DVector::from_vec(vec![0.7, -0.1]);
        let v = DVector::from_vec(vec![1.0, 2.0]);
        let j = fd_jacobian(|v| v + &w, &v, 1e-5).unwrap();
        assert!(max_abs(&(j - DMatrix::identity(2, 2))) < 1e-10);
    }

    #[test]
    fn affine_maps_are_exact_over_step_range() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, -2.0, 0.5, 3.0, 0.0, -1.0]);
        let c = DVector::from_vec(vec![0.25, -4.0]);
        let p = DVector::from_vec(vec![0.1, 0.2, -0.3]);
        for step in [1e-7, 1e-6, 1e-5, 1e-4, 1e-3] {
            let j = fd_jacobian(|x| &a * x + &c, &p, step).unwrap();
            assert!(max_abs(&(j - &a)) < 1e-8, "step {step}");
        }
    }

    #[test]
    fn cubic_error_is_second_order() {
        // d/dt t^3 = 3t^2; central difference error is exactly h^2
        let t0 = 0.8;
        let exact = 3.0 * t0 * t0;
        let p = DVector::from_vec(vec![t0]);
        let err = |h: f64| {
            let j = fd_jacobian(|v| DVector::from_vec(vec![v[0].powi(3)]), &p, h).unwrap();
            (j[(0, 0)] - exact).abs()
        };
        let ratio = err(1e-2) / err(5e-3);
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn non_finite_reports_coordinate() {
        let p = DVector::from_vec(vec![1.0, 0.0]);
        let r = fd_jacobian(
            |v| DVector::from_vec(vec![1.0 / (v[1] - 1e-5)]),
            &p,
            1e-5,
        );
        match r {
            Err(Error::NumericalFailure { coordinate, .. }) => assert_eq!(coordinate, Some(1)),
            other => panic!("expected NumericalFailure, got {other:?}"),
        }
    }

    #[test]
    fn zero_dimensional_input() {
        let p = DVector::<f64>::zeros(0);
        let j = fd_jacobian(|_| DVector::from_vec(vec![1.0, 2.0]), &p, 1e-5).unwrap();
        assert_eq!(j.shape(), (2, 0));
    }
}
