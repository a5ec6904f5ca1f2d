//! Parallel transport along base curves.
//!
//! Transport solves `dg/dt = -eta(c(t), g) c'(t)` (or, for a generalized
//! connection, `dg/dt = -A_mu x' - A_theta sigma'`) with classical fixed-step
//! RK4 on `t in [0, 1]`. The error estimate compares the run against one
//! with twice the steps.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genconn::GenConnectionField;
use crate::lgfb::LgfbConnectionField;
use crate::liegroup::Group;
use crate::numerics::{self, Sampling, ToleranceConfig};
use crate::report::{ConditionCheck, ValidationReport};

pub type CurveFn = Arc<dyn Fn(f64) -> DVector<f64> + Send + Sync>;

const VELOCITY_STEP: f64 = 1e-6;

/// A curve `t -> (x(t), sigma(t))` on `[0, 1]`.
#[derive(Clone)]
pub struct BaseCurve {
    dim: usize,
    sigma_dim: usize,
    eval: CurveFn,
    velocity: Option<CurveFn>,
    sigma_eval: CurveFn,
    sigma_velocity: Option<CurveFn>,
}

impl fmt::Debug for BaseCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BaseCurve")
            .field("dim", &self.dim)
            .field("sigma_dim", &self.sigma_dim)
            .finish()
    }
}

/// Polynomial coefficients per coordinate, lowest degree first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialCurve {
    pub base: Vec<Vec<f64>>,
    #[serde(default)]
    pub sigma: Vec<Vec<f64>>,
}

fn poly_eval(coeffs: &[Vec<f64>], t: f64) -> DVector<f64> {
    DVector::from_iterator(
        coeffs.len(),
        coeffs.iter().map(|c| c.iter().rev().fold(0.0, |acc, a| acc * t + a)),
    )
}

fn poly_velocity(coeffs: &[Vec<f64>], t: f64) -> DVector<f64> {
    DVector::from_iterator(
        coeffs.len(),
        coeffs.iter().map(|c| {
            c.iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, a)| acc * t + k as f64 * a)
        }),
    )
}

impl BaseCurve {
    /// A curve with velocity by central differences.
    pub fn new<F>(dim: usize, eval: F) -> Self
    where
        F: Fn(f64) -> DVector<f64> + Send + Sync + 'static,
    {
        Self {
            dim,
            sigma_dim: 0,
            eval: Arc::new(eval),
            velocity: None,
            sigma_eval: Arc::new(|_| DVector::zeros(0)),
            sigma_velocity: Some(Arc::new(|_| DVector::zeros(0))),
        }
    }

    pub fn with_velocity<V>(mut self, velocity: V) -> Self
    where
        V: Fn(f64) -> DVector<f64> + Send + Sync + 'static,
    {
        self.velocity = Some(Arc::new(velocity));
        self
    }

    /// Attach a sigma component; its velocity comes from central differences
    /// unless `sigma_velocity` is given.
    pub fn with_sigma<S>(mut self, sigma_dim: usize, sigma_eval: S, sigma_velocity: Option<CurveFn>) -> Self
    where
        S: Fn(f64) -> DVector<f64> + Send + Sync + 'static,
    {
        self.sigma_dim = sigma_dim;
        self.sigma_eval = Arc::new(sigma_eval);
        self.sigma_velocity = sigma_velocity;
        self
    }

    /// `x(t) = start + t * direction`.
    pub fn line(start: DVector<f64>, direction: DVector<f64>) -> Self {
        let dim = start.len();
        let d = direction.clone();
        Self::new(dim, move |t| &start + &direction * t).with_velocity(move |_| d.clone())
    }

    /// The constant curve at `x`.
    pub fn constant(x: DVector<f64>) -> Self {
        let dim = x.len();
        Self::new(dim, move |_| x.clone()).with_velocity(move |_| DVector::zeros(dim))
    }

    pub fn polynomial(spec: &PolynomialCurve) -> Self {
        let (b1, b2) = (spec.base.clone(), spec.base.clone());
        let (s1, s2) = (spec.sigma.clone(), spec.sigma.clone());
        let mut curve = Self::new(spec.base.len(), move |t| poly_eval(&b1, t))
            .with_velocity(move |t| poly_velocity(&b2, t));
        curve = curve.with_sigma(
            spec.sigma.len(),
            move |t| poly_eval(&s1, t),
            Some(Arc::new(move |t| poly_velocity(&s2, t))),
        );
        curve
    }

    /// The same path traversed from `t = 1` back to `t = 0`.
    pub fn reversed(&self) -> Self {
        let (e, s) = (self.eval.clone(), self.sigma_eval.clone());
        let me = self.clone();
        let me2 = self.clone();
        Self {
            dim: self.dim,
            sigma_dim: self.sigma_dim,
            eval: Arc::new(move |t| e(1.0 - t)),
            velocity: Some(Arc::new(move |t| -me.velocity(1.0 - t))),
            sigma_eval: Arc::new(move |t| s(1.0 - t)),
            sigma_velocity: Some(Arc::new(move |t| -me2.sigma_velocity(1.0 - t))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sigma_dim(&self) -> usize {
        self.sigma_dim
    }

    pub fn eval(&self, t: f64) -> DVector<f64> {
        (self.eval)(t)
    }

    pub fn sigma(&self, t: f64) -> DVector<f64> {
        (self.sigma_eval)(t)
    }

    pub fn velocity(&self, t: f64) -> DVector<f64> {
        match &self.velocity {
            Some(v) => v(t),
            None => central(&self.eval, t),
        }
    }

    pub fn sigma_velocity(&self, t: f64) -> DVector<f64> {
        match &self.sigma_velocity {
            Some(v) => v(t),
            None => central(&self.sigma_eval, t),
        }
    }

    /// Largest `|c(t + d) - c(t) - d c'(t)| / d^2` over a grid of `t`, which
    /// stays bounded for a continuous curve with consistent velocity.
    pub fn consistency_defect(&self, delta: f64) -> f64 {
        let mut worst = 0.0_f64;
        for k in 0..=20 {
            let t = k as f64 / 20.0 * (1.0 - delta);
            let r = self.eval(t + delta) - self.eval(t) - self.velocity(t) * delta;
            worst = worst.max(numerics::max_abs_vec(&r) / (delta * delta));
        }
        worst
    }
}

fn central(f: &CurveFn, t: f64) -> DVector<f64> {
    (f(t + VELOCITY_STEP) - f(t - VELOCITY_STEP)) / (2.0 * VELOCITY_STEP)
}

/// Outcome of one transport integration.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportResult {
    pub final_fiber: DVector<f64>,
    pub trajectory: Vec<(f64, DVector<f64>)>,
    pub step_count: usize,
    /// Richardson estimate of the error in `final_fiber`.
    pub est_error: f64,
}

fn rk4<F>(group: &Group, g0: &DVector<f64>, steps: usize, rhs: &F) -> Result<Vec<(f64, DVector<f64>)>>
where
    F: Fn(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    let dt = 1.0 / steps as f64;
    let mut traj = Vec::with_capacity(steps + 1);
    traj.push((0.0, g0.clone()));
    let mut g = g0.clone();
    let exit = |t: f64, traj: &[(f64, DVector<f64>)]| Error::TransportChartExit {
        chart: group.name().to_string(),
        time: t,
        trajectory: traj.iter().map(|(t, g)| (*t, g.iter().copied().collect())).collect(),
    };
    for k in 0..steps {
        let t = k as f64 * dt;
        let stage = |tt: f64, p: DVector<f64>| -> Result<DVector<f64>> {
            if !group.in_chart(&p) {
                return Err(exit(tt, &traj));
            }
            rhs(tt, &p)
        };
        let k1 = stage(t, g.clone())?;
        let k2 = stage(t + 0.5 * dt, &g + &k1 * (0.5 * dt))?;
        let k3 = stage(t + 0.5 * dt, &g + &k2 * (0.5 * dt))?;
        let k4 = stage(t + dt, &g + &k3 * dt)?;
        g += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        let t_next = if k + 1 == steps { 1.0 } else { (k + 1) as f64 * dt };
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::non_finite(format!("transport at t = {t_next}"), None));
        }
        if !group.in_chart(&g) {
            return Err(exit(t_next, &traj));
        }
        traj.push((t_next, g.clone()));
    }
    Ok(traj)
}

fn integrate<F>(group: &Group, g0: &DVector<f64>, steps: usize, rhs: F) -> Result<TransportResult>
where
    F: Fn(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    if steps < 4 {
        return Err(Error::InvalidArgument(format!("transport needs at least 4 steps, got {steps}")));
    }
    if g0.len() != group.dim() {
        return Err(Error::DimensionMismatch {
            context: "transport initial point".into(),
            expected: group.dim(),
            got: g0.len(),
        });
    }
    if !group.in_chart(g0) {
        return Err(Error::ChartExit {
            chart: group.name().to_string(),
            point: g0.iter().copied().collect(),
        });
    }
    let coarse = rk4(group, g0, steps, &rhs)?;
    let fine = rk4(group, g0, 2 * steps, &rhs)?;
    let end = coarse.last().expect("trajectory is never empty").1.clone();
    let fine_end = &fine.last().expect("trajectory is never empty").1;
    let est_error = numerics::max_abs_vec(&(fine_end - &end)) * 16.0 / 15.0;
    Ok(TransportResult {
        final_fiber: end,
        trajectory: coarse,
        step_count: steps,
        est_error,
    })
}

fn check_curve_dim(curve: &BaseCurve, m: usize, s: usize) -> Result<()> {
    if curve.dim() != m || curve.sigma_dim() != s {
        return Err(Error::DimensionMismatch {
            context: "curve dimensions".into(),
            expected: m + s,
            got: curve.dim() + curve.sigma_dim(),
        });
    }
    Ok(())
}

/// Transport of `g0` along `curve` by the connection `eta`.
pub fn integrate_lgfb_transport(
    eta: &LgfbConnectionField,
    curve: &BaseCurve,
    g0: &DVector<f64>,
    steps: usize,
) -> Result<TransportResult> {
    check_curve_dim(curve, eta.base_dim(), curve.sigma_dim())?;
    integrate(eta.group(), g0, steps, |t, g| {
        Ok(-(eta.eval(&curve.eval(t), g)? * curve.velocity(t)))
    })
}

/// Transport of `g0` along `curve` (with its sigma component) by the
/// generalized connection `a`.
pub fn integrate_gen_transport(
    a: &GenConnectionField,
    curve: &BaseCurve,
    g0: &DVector<f64>,
    steps: usize,
) -> Result<TransportResult> {
    let (m, n, l) = a.dims();
    check_curve_dim(curve, m, n - l)?;
    integrate(a.group(), g0, steps, |t, g| {
        let (x, s) = (curve.eval(t), curve.sigma(t));
        let mu: DMatrix<f64> = a.a_mu(&x, &s, g)?;
        Ok(-(mu * curve.velocity(t) + a.a_theta(&x, &s, g)? * curve.sigma_velocity(t)))
    })
}

/// `T(gh) = T(g) T(h)` over sampled `(g, h)` and `T(e) = e`, where `T` is
/// transport along `curve`.
pub fn check_transport_homomorphism(
    eta: &LgfbConnectionField,
    curve: &BaseCurve,
    sampling: Sampling,
    steps: usize,
    tol: ToleranceConfig,
) -> Result<ValidationReport> {
    let grp = eta.group();
    let transport = |g: &DVector<f64>| integrate_lgfb_transport(eta, curve, g, steps).map(|r| r.final_fiber);
    let mut hom = ConditionCheck::new("homomorphism", tol);
    let mut unit = ConditionCheck::new("identity_preserved", tol);
    unit.record_result(
        transport(grp.identity()).map(|te| (numerics::max_abs_vec(&(te - grp.identity())), 0.0)),
        &[],
    )?;
    let mut rng = sampling.rng();
    for _ in 0..sampling.count {
        let g = grp.sample(&mut rng);
        let h = grp.sample(&mut rng);
        let pt: Vec<f64> = numerics::concat(&[&g, &h]).iter().copied().collect();
        hom.record_result(
            (|| {
                let lhs = transport(&grp.multiply(&g, &h)?)?;
                let rhs = grp.multiply(&transport(&g)?, &transport(&h)?)?;
                Ok((numerics::max_abs_vec(&(&lhs - rhs)), numerics::max_abs_vec(&lhs)))
            })(),
            &pt,
        )?;
    }
    Ok(ValidationReport::new(
        "transport_homomorphism",
        vec![hom.finish(), unit.finish()],
    ))
}

/// Least-squares slope of `-log(error)` against `log(steps)`.
pub fn fit_order(points: &[(usize, f64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, e)| e.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    -cov / var
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liegroup::LieGroupModel;
    use crate::numerics::DomainBox;

    fn v(c: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(c)
    }

    #[test]
    fn trivial_eta_and_constant_curve_fix_g0() {
        let grp = LieGroupModel::heisenberg().into_shared();
        let g0 = v(&[0.3, -0.2, 0.7]);
        let zero = LgfbConnectionField::trivial(grp.clone(), DomainBox::cube(2, -1.0, 1.0).unwrap());
        let r = integrate_lgfb_transport(&zero, &BaseCurve::line(v(&[0.0, 0.0]), v(&[1.0, 0.5])), &g0, 16).unwrap();
        assert_eq!(r.final_fiber, g0);
        assert_eq!(r.trajectory.len(), 17);
        assert_eq!(r.trajectory[0], (0.0, g0.clone()));
        assert_eq!(r.trajectory[16].0, 1.0);

        let eta = LgfbConnectionField::inner_derivation(grp, DomainBox::cube(2, -1.0, 1.0).unwrap(), |_| {
            DMatrix::from_element(3, 2, 1.0)
        });
        let r = integrate_lgfb_transport(&eta, &BaseCurve::constant(v(&[0.1, 0.2])), &g0, 8).unwrap();
        assert_eq!(r.final_fiber, g0);
    }

    #[test]
    fn polynomial_curve_velocity() {
        let c = BaseCurve::polynomial(&PolynomialCurve {
            base: vec![vec![1.0, 2.0, 3.0], vec![0.0, -1.0]],
            sigma: vec![vec![0.5, 0.0, 1.0]],
        });
        assert_eq!(c.eval(0.5), v(&[1.0 + 1.0 + 0.75, -0.5]));
        assert_eq!(c.velocity(0.5), v(&[2.0 + 3.0, -1.0]));
        assert_eq!(c.sigma_velocity(2.0), v(&[4.0]));
        assert!(c.consistency_defect(1e-3) < 3.5);
        let fd = BaseCurve::new(2, |t| v(&[t.sin(), t * t]));
        assert!(numerics::max_abs_vec(&(fd.velocity(0.3) - v(&[0.3f64.cos(), 0.6]))) < 1e-9);
    }

    #[test]
    fn too_few_steps_rejected() {
        let grp = LieGroupModel::additive(1).unwrap().into_shared();
        let eta = LgfbConnectionField::trivial(grp, DomainBox::cube(1, -1.0, 1.0).unwrap());
        assert!(integrate_lgfb_transport(&eta, &BaseCurve::constant(v(&[0.0])), &v(&[0.0]), 3).is_err());
    }

    #[test]
    fn chart_exit_keeps_partial_trajectory() {
        // a(t) = 1 - 4t leaves the chart a > 0 at t = 0.25
        let grp = LieGroupModel::aff1().into_shared();
        let eta = LgfbConnectionField::new("push", grp, DomainBox::cube(1, -1.0, 1.0).unwrap(), |_, _| {
            DMatrix::from_row_slice(2, 1, &[4.0, 0.0])
        });
        let err = integrate_lgfb_transport(&eta, &BaseCurve::line(v(&[0.0]), v(&[1.0])), &v(&[1.0, 0.0]), 20).unwrap_err();
        match err {
            Error::TransportChartExit { time, trajectory, .. } => {
                assert!(time > 0.2 && time <= 0.3, "{time}");
                assert!(!trajectory.is_empty());
                assert_eq!(trajectory[0].1, vec![1.0, 0.0]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reversed_curve_returns_to_start() {
        let grp = LieGroupModel::heisenberg().into_shared();
        let eta = LgfbConnectionField::inner_derivation(grp, DomainBox::cube(2, -1.0, 1.0).unwrap(), |x| {
            DMatrix::from_row_slice(3, 2, &[x[0], 0.2, 1.0, -x[1], 0.3, 0.5])
        });
        let c = BaseCurve::polynomial(&PolynomialCurve {
            base: vec![vec![0.1, 0.5, -0.3], vec![-0.2, 0.4]],
            sigma: vec![],
        });
        let g0 = v(&[0.3, -0.2, 0.7]);
        let there = integrate_lgfb_transport(&eta, &c, &g0, 64).unwrap();
        let back = integrate_lgfb_transport(&eta, &c.reversed(), &there.final_fiber, 64).unwrap();
        let err = numerics::max_abs_vec(&(back.final_fiber - &g0));
        assert!(err < 10.0 * (there.est_error + back.est_error) + 1e-13, "{err}");
    }

    #[test]
    fn order_fit_of_exact_power_law() {
        let pts: Vec<(usize, f64)> = [8usize, 16, 32, 64].iter().map(|&n| (n, 3.0 / (n as f64).powi(4))).collect();
        assert!((fit_order(&pts) - 4.0).abs() < 1e-12);
    }
}
