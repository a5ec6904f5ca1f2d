//! Coordinate changes.
//!
//! Two charts of a Lie group fiber bundle are related by
//! `x' = x'(x)`, `g' = G(x, g)` where each `G(x, .)` is a group
//! automorphism. Generalized principal bundle coordinates `(x, sigma, g)`
//! change by `x' = x'(x)`, `sigma' = Sigma(x, sigma)` and
//! `g' = pi(phi(x, sigma), G(x, g))`. A pair `(p, gamma)` on the fibered
//! product changes with the second fiber coordinate transformed by `G` alone.
//!
//! Every change is a set of closures with optional analytic Jacobians;
//! finite differences fill in whatever is missing. Inverse maps are supplied
//! by the caller and checked, never solved for.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::liegroup::Group;
use crate::numerics::{
    self, checked_inverse, try_fd_jacobian, DomainBox, Sampling, ToleranceConfig,
    DEFAULT_FD_STEP,
};
use crate::report::{ConditionCheck, ValidationReport};

pub type Map1 = Arc<dyn Fn(&DVector<f64>) -> Result<DVector<f64>> + Send + Sync>;
pub type Map2 = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> Result<DVector<f64>> + Send + Sync>;
pub type Jac1 = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;
pub type Jac2 = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync>;

fn lift1<F>(f: F) -> Map1
where
    F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
{
    Arc::new(move |x| Ok(f(x)))
}

fn lift2<F>(f: F) -> Map2
where
    F: Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
{
    Arc::new(move |a, b| Ok(f(a, b)))
}

fn check_len(v: &DVector<f64>, expected: usize, context: &str) -> Result<()> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context: context.to_string(),
            expected,
            got: v.len(),
        })
    }
}

fn check_finite(v: &DVector<f64>, context: &str) -> Result<()> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::non_finite(context, None))
    }
}

// ---------------------------------------------------------------------------
// Base change
// ---------------------------------------------------------------------------

/// `x' = x'(x)` on the base, with its inverse.
#[derive(Clone)]
pub struct BaseChange {
    dim: usize,
    forward: Map1,
    inverse: Map1,
    jac: Option<Jac1>,
    fd_step: f64,
}

impl fmt::Debug for BaseChange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BaseChange")
            .field("dim", &self.dim)
            .field("analytic_jacobian", &self.jac.is_some())
            .finish()
    }
}

impl BaseChange {
    pub fn new<F, I>(dim: usize, forward: F, inverse: I) -> Self
    where
        F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        I: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        Self {
            dim,
            forward: lift1(forward),
            inverse: lift1(inverse),
            jac: None,
            fd_step: DEFAULT_FD_STEP,
        }
    }

    /// Analytic `J^nu_mu(x) = d x'^nu / d x^mu`.
    pub fn with_jacobian<J>(mut self, jac: J) -> Self
    where
        J: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.jac = Some(Arc::new(jac));
        self
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(dim, |x| x.clone(), |x| x.clone())
            .with_jacobian(move |_| DMatrix::identity(dim, dim))
    }

    /// `x'_i = x_i + c x_i^2`, invertible for `x_i > -1/(2c)`.
    pub fn polynomial(dim: usize, c: f64) -> Self {
        Self::new(
            dim,
            move |x| x.map(|v| v + c * v * v),
            move |y| y.map(|w| (-1.0 + (1.0 + 4.0 * c * w).sqrt()) / (2.0 * c)),
        )
        .with_jacobian(move |x| DMatrix::from_diagonal(&x.map(|v| 1.0 + 2.0 * c * v)))
    }

    /// `x' = A x + b`.
    pub fn affine(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let a_inv = checked_inverse(&a, "affine base change")?;
        let dim = a.nrows();
        let (a1, b1, b2) = (a.clone(), b.clone(), b);
        Ok(Self::new(dim, move |x| &a1 * x + &b1, move |y| &a_inv * (y - &b2))
            .with_jacobian(move |_| a.clone()))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_len(x, self.dim, "base point")?;
        let out = (self.forward)(x)?;
        check_finite(&out, "base change")?;
        Ok(out)
    }

    pub fn apply_inverse(&self, x_new: &DVector<f64>) -> Result<DVector<f64>> {
        check_len(x_new, self.dim, "base point")?;
        let out = (self.inverse)(x_new)?;
        check_finite(&out, "inverse base change")?;
        Ok(out)
    }

    /// `J^nu_mu(x)`.
    pub fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        match &self.jac {
            Some(j) => Ok(j(x)),
            None => self.fd_jacobian(x),
        }
    }

    pub fn fd_jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        try_fd_jacobian(|p| self.apply(p), x, self.fd_step)
    }

    /// `Jbar^nu_mu` at the image of `x`: the inverse of `J(x)`.
    pub fn inverse_jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        checked_inverse(&self.jacobian(x)?, "J^nu_mu")
    }

    /// Finite-difference Jacobian of the inverse map at `x'`, an independent
    /// route to `Jbar`.
    pub fn fd_inverse_jacobian(&self, x_new: &DVector<f64>) -> Result<DMatrix<f64>> {
        try_fd_jacobian(|p| self.apply_inverse(p), x_new, self.fd_step)
    }

    /// The change running the other way.
    pub fn inverse(&self) -> BaseChange {
        BaseChange {
            dim: self.dim,
            forward: self.inverse.clone(),
            inverse: self.forward.clone(),
            jac: None,
            fd_step: self.fd_step,
        }
    }

    /// `inverse(forward(x)) = x` and analytic-vs-FD Jacobian agreement.
    pub fn check(&self, base_box: &DomainBox, sampling: Sampling, tol: ToleranceConfig) -> Result<ValidationReport> {
        let mut round_trip = ConditionCheck::new("inverse_round_trip", tol);
        let mut jac = ConditionCheck::new("jacobian_vs_fd", tol);
        let mut rng = sampling.rng();
        for _ in 0..sampling.count {
            let x = rng.point_in(base_box);
            let pt: Vec<f64> = x.iter().copied().collect();
            round_trip.record_result(
                (|| {
                    let back = self.apply_inverse(&self.apply(&x)?)?;
                    Ok((numerics::max_abs_vec(&(back - &x)), numerics::max_abs_vec(&x)))
                })(),
                &pt,
            )?;
            jac.record_result(
                (|| {
                    let r = self.jacobian(&x)? - self.fd_jacobian(&x)?;
                    Ok((numerics::max_abs(&r), 1.0))
                })(),
                &pt,
            )?;
        }
        Ok(ValidationReport::new(
            "base_change",
            vec![round_trip.finish(), jac.finish()],
        ))
    }
}

// ---------------------------------------------------------------------------
// Fiber automorphism field
// ---------------------------------------------------------------------------

/// `G(x, .)`, a family of group automorphisms parameterized by the base.
#[derive(Clone)]
pub struct FiberAutomorphismField {
    group: Group,
    base_dim: usize,
    apply: Map2,
    inverse: Map2,
    jac_g: Option<Jac2>,
    jac_x: Option<Jac2>,
    fd_step: f64,
}

impl fmt::Debug for FiberAutomorphismField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiberAutomorphismField")
            .field("group", &self.group.name())
            .field("base_dim", &self.base_dim)
            .finish()
    }
}

impl FiberAutomorphismField {
    /// `apply(x, g) = G(x, g)` and `inverse(x, g') = G(x, .)^-1 (g')`.
    pub fn new<F, I>(group: Group, base_dim: usize, apply: F, inverse: I) -> Self
    where
        F: Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        I: Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        Self::from_fallible(group, base_dim, lift2(apply), lift2(inverse))
    }

    pub fn from_fallible(group: Group, base_dim: usize, apply: Map2, inverse: Map2) -> Self {
        Self {
            group,
            base_dim,
            apply,
            inverse,
            jac_g: None,
            jac_x: None,
            fd_step: DEFAULT_FD_STEP,
        }
    }

    /// Analytic `J^I_J = dG^I/dg^J` and `J^I_nu = dG^I/dx^nu`.
    pub fn with_jacobians<JG, JX>(mut self, jac_g: JG, jac_x: JX) -> Self
    where
        JG: Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
        JX: Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.jac_g = Some(Arc::new(jac_g));
        self.jac_x = Some(Arc::new(jac_x));
        self
    }

    pub fn identity(group: Group, base_dim: usize) -> Self {
        let l = group.dim();
        Self::new(group, base_dim, |_, g| g.clone(), |_, g| g.clone()).with_jacobians(
            move |_, _| DMatrix::identity(l, l),
            move |_, _| DMatrix::zeros(l, base_dim),
        )
    }

    /// `G(x, v) = A(x) v` on an additive group. Invertible `A(x)` gives an
    /// automorphism of `(R^l, +)`.
    pub fn linear<A>(group: Group, base_dim: usize, matrix: A) -> Self
    where
        A: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        let matrix = Arc::new(matrix);
        let (m1, m2, m3) = (matrix.clone(), matrix.clone(), matrix.clone());
        let apply: Map2 = Arc::new(move |x, v| Ok(m1(x) * v));
        let inverse: Map2 = Arc::new(move |x, w| {
            let inv = checked_inverse(&m2(x), "G^I_J(x)")?;
            Ok(inv * w)
        });
        let mut field = Self::from_fallible(group, base_dim, apply, inverse);
        field.jac_g = Some(Arc::new(move |x, _| m3(x)));
        field
    }

    /// Rotation of `(R^2, +)` by the angle `rate * sum(x)`.
    pub fn rotation2(group: Group, base_dim: usize, rate: f64) -> Self {
        let rot = move |x: &DVector<f64>| {
            let t = rate * x.sum();
            let (s, c) = t.sin_cos();
            DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
        };
        let jx = move |x: &DVector<f64>, v: &DVector<f64>| {
            let t = rate * x.sum();
            let (s, c) = t.sin_cos();
            let dr = DMatrix::from_row_slice(2, 2, &[-s, -c, c, -s]);
            let col = dr * v * rate;
            DMatrix::from_fn(2, x.len(), |i, _| col[i])
        };
        let mut field = Self::linear(group, base_dim, rot);
        field.jac_x = Some(Arc::new(jx));
        field
    }

    /// Inner automorphism `G(x, g) = k(x) g k(x)^-1`.
    pub fn inner<K>(group: Group, base_dim: usize, k: K) -> Self
    where
        K: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        let k = Arc::new(k);
        let (g1, k1) = (group.clone(), k.clone());
        let apply: Map2 = Arc::new(move |x, g| {
            let kx = k1(x);
            let k_inv = g1.invert(&kx)?;
            g1.multiply(&g1.multiply(&kx, g)?, &k_inv)
        });
        let (g2, k2) = (group.clone(), k);
        let inverse: Map2 = Arc::new(move |x, g| {
            let kx = k2(x);
            let k_inv = g2.invert(&kx)?;
            g2.multiply(&g2.multiply(&k_inv, g)?, &kx)
        });
        Self::from_fallible(group, base_dim, apply, inverse)
    }

    /// Heisenberg automorphism `(a, b, c) -> (s a, t b, s t c)` with
    /// `s = exp(alpha . x)`, `t = exp(beta . x)`.
    pub fn heisenberg_scaling(group: Group, alpha: DVector<f64>, beta: DVector<f64>) -> Self {
        let base_dim = alpha.len();
        let (a1, b1, a2, b2) = (alpha.clone(), beta.clone(), alpha, beta);
        let apply = move |x: &DVector<f64>, g: &DVector<f64>| {
            let (s, t) = (a1.dot(x).exp(), b1.dot(x).exp());
            DVector::from_row_slice(&[s * g[0], t * g[1], s * t * g[2]])
        };
        let inverse = move |x: &DVector<f64>, g: &DVector<f64>| {
            let (s, t) = (a2.dot(x).exp(), b2.dot(x).exp());
            DVector::from_row_slice(&[g[0] / s, g[1] / t, g[2] / (s * t)])
        };
        Self::new(group, base_dim, apply, inverse)
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn apply(&self, x: &DVector<f64>, g: &DVector<f64>) -> Result<DVector<f64>> {
        check_len(x, self.base_dim, "fiber automorphism base point")?;
        check_len(g, self.group.dim(), "fiber automorphism group element")?;
        let out = (self.apply)(x, g)?;
        check_finite(&out, "fiber automorphism")?;
        if !self.group.in_chart(&out) {
            return Err(Error::ChartExit {
                chart: self.group.name().to_string(),
                point: out.iter().copied().collect(),
            });
        }
        Ok(out)
    }

    pub fn apply_inverse(&self, x: &DVector<f64>, g_new: &DVector<f64>) -> Result<DVector<f64>> {
        check_len(x, self.base_dim, "fiber automorphism base point")?;
        check_len(g_new, self.group.dim(), "fiber automorphism group element")?;
        let out = (self.inverse)(x, g_new)?;
        check_finite(&out, "inverse fiber automorphism")?;
        if !self.group.in_chart(&out) {
            return Err(Error::ChartExit {
                chart: self.group.name().to_string(),
                point: out.iter().copied().collect(),
            });
        }
        Ok(out)
    }

    /// `J^I_J(x, g) = dG^I/dg^J`.
    pub fn jac_g(&self, x: &DVector<f64>, g: &DVector<f64>) -> Result<DMatrix<f64>> {
        match &self.jac_g {
            Some(j) => Ok(j(x, g)),
            None => try_fd_jacobian(|p| self.apply(x, p), g, self.fd_step),
        }
    }

    /// `J^I_nu(x, g) = dG^I/dx^nu`.
    pub fn jac_x(&self, x: &DVector<f64>, g: &DVector<f64>) -> Result<DMatrix<f64>> {
        match &self.jac_x {
            Some(j) => Ok(j(x, g)),
            None => try_fd_jacobian(|p| self.apply(p, g), x, self.fd_step),
        }
    }

    /// `(x, g) -> next(x, self(x, g))`.
    pub fn then(&self, next: &FiberAutomorphismField) -> Result<FiberAutomorphismField> {
        if next.base_dim != self.base_dim || next.group.dim() != self.group.dim() {
            return Err(Error::InvalidArgument(
                "composed automorphism fields must share base and group".into(),
            ));
        }
        let (a, b) = (self.clone(), next.clone());
        let apply: Map2 = Arc::new(move |x, g| b.apply(x, &a.apply(x, g)?));
        let (a, b) = (self.clone(), next.clone());
        let inverse: Map2 = Arc::new(move |x, g| a.apply_inverse(x, &b.apply_inverse(x, g)?));
        Ok(Self::from_fallible(self.group.clone(), self.base_dim, apply, inverse))
    }

    /// Residuals of `G(x, e) = e` and `G(x, gh) = G(x, g) G(x, h)`, plus the
    /// consequence `J^I_nu(x, e) = 0` and the inverse round trip.
    pub fn check_fiber_automorphism(
        &self,
        base_box: &DomainBox,
        sampling: Sampling,
        tol: ToleranceConfig,
    ) -> Result<ValidationReport> {
        let grp = &self.group;
        let e = grp.identity().clone();
        let mut unit = ConditionCheck::new("preserves_identity", tol);
        let mut hom = ConditionCheck::new("homomorphism", tol);
        let mut jx_e = ConditionCheck::new("x_derivative_at_identity", tol);
        let mut inv = ConditionCheck::new("inverse_round_trip", tol);
        let mut rng = sampling.rng();
        for _ in 0..sampling.count {
            let x = rng.point_in(base_box);
            let g = grp.sample(&mut rng);
            let h = grp.sample(&mut rng);
            let pt: Vec<f64> = numerics::concat(&[&x, &g, &h]).iter().copied().collect();

            unit.record_result(
                (|| {
                    let r = self.apply(&x, &e)? - &e;
                    Ok((numerics::max_abs_vec(&r), numerics::max_abs_vec(&e)))
                })(),
                &pt,
            )?;
            hom.record_result(
                (|| {
                    let left = self.apply(&x, &grp.multiply(&g, &h)?)?;
                    let right = grp.multiply(&self.apply(&x, &g)?, &self.apply(&x, &h)?)?;
                    Ok((numerics::max_abs_vec(&(&left - &right)), numerics::max_abs_vec(&left)))
                })(),
                &pt,
            )?;
            jx_e.record_result(
                (|| Ok((numerics::max_abs(&self.jac_x(&x, &e)?), 1.0)))(),
                &pt,
            )?;
            inv.record_result(
                (|| {
                    let back = self.apply_inverse(&x, &self.apply(&x, &g)?)?;
                    Ok((numerics::max_abs_vec(&(back - &g)), numerics::max_abs_vec(&g)))
                })(),
                &pt,
            )?;
        }
        Ok(ValidationReport::new(
            "fiber_automorphism",
            vec![unit.finish(), hom.finish(), jx_e.finish(), inv.finish()],
        ))
    }
}

// ---------------------------------------------------------------------------
// Sigma change
// ---------------------------------------------------------------------------

/// `sigma' = Sigma(x, sigma)` on the fibers of `S -> M`.
#[derive(Clone)]
pub struct SigmaChange {
    base_dim: usize,
    sigma_dim: usize,
    forward: Map2,
    inverse: Map2,
    jac_sigma: Option<Jac2>,
    jac_x: Option<Jac2>,
    fd_step: f64,
}

impl fmt::Debug for SigmaChange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SigmaChange")
            .field("base_dim", &self.base_dim)
            .field("sigma_dim", &self.sigma_dim)
            .finish()
    }
}

impl SigmaChange {
    /// `forward(x, sigma) = sigma'`, `inverse(x, sigma') = sigma`, both at the
    /// same (old) base point `x`.
    pub fn new<F, I>(base_dim: usize, sigma_dim: usize, forward: F, inverse: I) -> Self
    where
        F: Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        I: Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        Self {
            base_dim,
            sigma_dim,
            forward: lift2(forward),
            inverse: lift2(inverse),
            jac_sigma: None,
            jac_x: None,
            fd_step: DEFAULT_FD_STEP,
        }
    }

    pub fn with_jacobians<JS, JX>(mut self, jac_sigma: JS, jac_x: JX) -> Self
    where
        JS: Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
        JX: Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.jac_sigma = Some(Arc::new(jac_sigma));
        self.jac_x = Some(Arc::new(jac_x));
        self
    }

    pub fn identity(base_dim: usize, sigma_dim: usize) -> Self {
        Self::new(base_dim, sigma_dim, |_, s| s.clone(), |_, s| s.clone()).with_jacobians(
            move |_, _| DMatrix::identity(sigma_dim, sigma_dim),
            move |_, _| DMatrix::zeros(sigma_dim, base_dim),
        )
    }

    /// `sigma'_k = exp(a x_0) sigma_k + b sin(x_0 + k)`.
    pub fn scale_shift(base_dim: usize, sigma_dim: usize, a: f64, b: f64) -> Self {
        Self::new(
            base_dim,
            sigma_dim,
            move |x, s| {
                let e = (a * x[0]).exp();
                DVector::from_fn(s.len(), |k, _| e * s[k] + b * (x[0] + k as f64).sin())
            },
            move |x, s| {
                let e = (a * x[0]).exp();
                DVector::from_fn(s.len(), |k, _| (s[k] - b * (x[0] + k as f64).sin()) / e)
            },
        )
        .with_jacobians(
            move |x, _| DMatrix::identity(sigma_dim, sigma_dim) * (a * x[0]).exp(),
            move |x, s| {
                let e = (a * x[0]).exp();
                DMatrix::from_fn(sigma_dim, base_dim, |k, mu| {
                    if mu == 0 {
                        a * e * s[k] + b * (x[0] + k as f64).cos()
                    } else {
                        0.0
                    }
                })
            },
        )
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn sigma_dim(&self) -> usize {
        self.sigma_dim
    }

    pub fn apply(&self, x: &DVector<f64>, sigma: &DVector<f64>) -> Result<DVector<f64>> {
        check_len(x, self.base_dim, "sigma change base point")?;
        check_len(sigma, self.sigma_dim, "sigma coordinates")?;
        let out = (self.forward)(x, sigma)?;
        check_finite(&out, "sigma change")?;
        Ok(out)
    }

    pub fn apply_inverse(&self, x: &DVector<f64>, sigma_new: &DVector<f64>) -> Result<DVector<f64>> {
        check_len(x, self.base_dim, "sigma change base point")?;
        check_len(sigma_new, self.sigma_dim, "sigma coordinates")?;
        let out = (self.inverse)(x, sigma_new)?;
        check_finite(&out, "inverse sigma change")?;
        Ok(out)
    }

    /// `J^Lambda_Xi = dSigma^Lambda/dsigma^Xi`.
    pub fn jac_sigma(&self, x: &DVector<f64>, sigma: &DVector<f64>) -> Result<DMatrix<f64>> {
        match &self.jac_sigma {
            Some(j) => Ok(j(x, sigma)),
            None => try_fd_jacobian(|p| self.apply(x, p), sigma, self.fd_step),
        }
    }

    /// `J^Lambda_mu = dSigma^Lambda/dx^mu`.
    pub fn jac_x(&self, x: &DVector<f64>, sigma: &DVector<f64>) -> Result<DMatrix<f64>> {
        match &self.jac_x {
            Some(j) => Ok(j(x, sigma)),
            None => try_fd_jacobian(|p| self.apply(p, sigma), x, self.fd_step),
        }
    }
}

// ---------------------------------------------------------------------------
// Generalized principal bundle change
// ---------------------------------------------------------------------------

/// A point in generalized principal bundle coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GpbPoint {
    pub x: DVector<f64>,
    pub sigma: DVector<f64>,
    pub g: DVector<f64>,
}

impl GpbPoint {
    pub fn new(x: DVector<f64>, sigma: DVector<f64>, g: DVector<f64>) -> Self {
        Self { x, sigma, g }
    }

    pub fn flatten(&self) -> Vec<f64> {
        numerics::concat(&[&self.x, &self.sigma, &self.g]).iter().copied().collect()
    }
}

/// A point of the fibered product `P x_M G`: `(x, sigma, g)` on `P` and `h`
/// on the Lie group fiber bundle over the same `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairPoint {
    pub x: DVector<f64>,
    pub sigma: DVector<f64>,
    pub g: DVector<f64>,
    pub h: DVector<f64>,
}

impl PairPoint {
    pub fn flatten(&self) -> Vec<f64> {
        numerics::concat(&[&self.x, &self.sigma, &self.g, &self.h])
            .iter()
            .copied()
            .collect()
    }
}

/// Partials of `Psi(x, sigma, g) = pi(phi(x, sigma), G(x, g))`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositePartials {
    /// `dPsi/dx`, l x m
    pub wrt_x: DMatrix<f64>,
    /// `dPsi/dsigma`, l x (n - l)
    pub wrt_sigma: DMatrix<f64>,
    /// `dPsi/dg`, l x l
    pub wrt_g: DMatrix<f64>,
}

/// All Jacobian blocks of a change at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianBlocks {
    /// `J^nu_mu`
    pub base: DMatrix<f64>,
    /// `Jbar^nu_mu`
    pub base_inv: DMatrix<f64>,
    /// `J^Lambda_Xi`
    pub sigma_sigma: DMatrix<f64>,
    /// `Jbar^Lambda_Xi`
    pub sigma_sigma_inv: DMatrix<f64>,
    /// `J^Lambda_mu`
    pub sigma_x: DMatrix<f64>,
    /// `J^I_J`
    pub fiber_g: DMatrix<f64>,
    /// `J^I_nu`
    pub fiber_x: DMatrix<f64>,
    /// `d_nu phi^A`
    pub phi_x: DMatrix<f64>,
    /// `d_Lambda phi^A`
    pub phi_sigma: DMatrix<f64>,
}

impl JacobianBlocks {
    /// The stratified `(x, sigma)` Jacobian `[[J, 0], [J_sx, J_ss]]`.
    pub fn stratified(&self) -> DMatrix<f64> {
        let (m, s) = (self.base.nrows(), self.sigma_sigma.nrows());
        let mut out = DMatrix::zeros(m + s, m + s);
        out.view_mut((0, 0), (m, m)).copy_from(&self.base);
        out.view_mut((m, 0), (s, m)).copy_from(&self.sigma_x);
        out.view_mut((m, m), (s, s)).copy_from(&self.sigma_sigma);
        out
    }

    /// Block-triangular inverse assembled from the inverse blocks:
    /// `[[Jbar, 0], [-Jbar_ss J_sx Jbar, Jbar_ss]]`.
    pub fn stratified_inverse(&self) -> DMatrix<f64> {
        let (m, s) = (self.base.nrows(), self.sigma_sigma.nrows());
        let mut out = DMatrix::zeros(m + s, m + s);
        out.view_mut((0, 0), (m, m)).copy_from(&self.base_inv);
        let lower_left = -(&self.sigma_sigma_inv * &self.sigma_x * &self.base_inv);
        out.view_mut((m, 0), (s, m)).copy_from(&lower_left);
        out.view_mut((m, m), (s, s)).copy_from(&self.sigma_sigma_inv);
        out
    }
}

/// The full change of generalized principal bundle coordinates.
#[derive(Clone)]
pub struct GpbChange {
    base: BaseChange,
    sigma: SigmaChange,
    phi: Map2,
    phi_jac: Option<(Jac2, Jac2)>,
    fiber: FiberAutomorphismField,
    fd_step: f64,
}

impl fmt::Debug for GpbChange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GpbChange")
            .field("base", &self.base)
            .field("sigma", &self.sigma)
            .field("fiber", &self.fiber)
            .finish()
    }
}

impl GpbChange {
    pub fn new<P>(base: BaseChange, sigma: SigmaChange, phi: P, fiber: FiberAutomorphismField) -> Result<Self>
    where
        P: Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        Self::from_fallible(base, sigma, lift2(phi), fiber)
    }

    pub fn from_fallible(
        base: BaseChange,
        sigma: SigmaChange,
        phi: Map2,
        fiber: FiberAutomorphismField,
    ) -> Result<Self> {
        if base.dim() != sigma.base_dim() || base.dim() != fiber.base_dim() {
            return Err(Error::DimensionMismatch {
                context: "gpb change base dimension".into(),
                expected: base.dim(),
                got: sigma.base_dim().max(fiber.base_dim()),
            });
        }
        Ok(Self {
            base,
            sigma,
            phi,
            phi_jac: None,
            fiber,
            fd_step: DEFAULT_FD_STEP,
        })
    }

    /// Analytic `d_nu phi^A` and `d_Lambda phi^A`.
    pub fn with_phi_jacobians<JX, JS>(mut self, jac_x: JX, jac_sigma: JS) -> Self
    where
        JX: Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
        JS: Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.phi_jac = Some((Arc::new(jac_x), Arc::new(jac_sigma)));
        self
    }

    /// A pure Lie group fiber bundle change seen as a generalized one:
    /// `phi = e`.
    pub fn lgfb(base: BaseChange, fiber: FiberAutomorphismField, sigma_dim: usize) -> Result<Self> {
        let e = fiber.group().identity().clone();
        let m = base.dim();
        Self::new(base, SigmaChange::identity(m, sigma_dim), move |_, _| e.clone(), fiber)
    }

    pub fn identity(group: Group, base_dim: usize, sigma_dim: usize) -> Self {
        Self::lgfb(
            BaseChange::identity(base_dim),
            FiberAutomorphismField::identity(group, base_dim),
            sigma_dim,
        )
        .expect("dimensions agree by construction")
    }

    pub fn base(&self) -> &BaseChange {
        &self.base
    }

    pub fn sigma(&self) -> &SigmaChange {
        &self.sigma
    }

    pub fn fiber(&self) -> &FiberAutomorphismField {
        &self.fiber
    }

    pub fn group(&self) -> &Group {
        self.fiber.group()
    }

    pub fn phi(&self, x: &DVector<f64>, sigma: &DVector<f64>) -> Result<DVector<f64>> {
        let out = (self.phi)(x, sigma)?;
        check_len(&out, self.group().dim(), "phi value")?;
        check_finite(&out, "phi")?;
        Ok(out)
    }

    /// `Psi(x, sigma, g) = pi(phi(x, sigma), G(x, g))`.
    pub fn fiber_map(&self, x: &DVector<f64>, sigma: &DVector<f64>, g: &DVector<f64>) -> Result<DVector<f64>> {
        self.group().multiply(&self.phi(x, sigma)?, &self.fiber.apply(x, g)?)
    }

    pub fn apply(&self, p: &GpbPoint) -> Result<GpbPoint> {
        Ok(GpbPoint {
            x: self.base.apply(&p.x)?,
            sigma: self.sigma.apply(&p.x, &p.sigma)?,
            g: self.fiber_map(&p.x, &p.sigma, &p.g)?,
        })
    }

    /// The paired change: the second fiber coordinate sees only `G`.
    pub fn apply_pair(&self, q: &PairPoint) -> Result<PairPoint> {
        Ok(PairPoint {
            x: self.base.apply(&q.x)?,
            sigma: self.sigma.apply(&q.x, &q.sigma)?,
            g: self.fiber_map(&q.x, &q.sigma, &q.g)?,
            h: self.fiber.apply(&q.x, &q.h)?,
        })
    }

    /// Recover source coordinates from target coordinates.
    pub fn pull_back(&self, p_new: &GpbPoint) -> Result<GpbPoint> {
        let grp = self.group();
        let x = self.base.apply_inverse(&p_new.x)?;
        let sigma = self.sigma.apply_inverse(&x, &p_new.sigma)?;
        let phi_inv = grp.invert(&self.phi(&x, &sigma)?)?;
        let g = self.fiber.apply_inverse(&x, &grp.multiply(&phi_inv, &p_new.g)?)?;
        Ok(GpbPoint { x, sigma, g })
    }

    pub fn phi_jacobians(&self, x: &DVector<f64>, sigma: &DVector<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        match &self.phi_jac {
            Some((jx, js)) => Ok((jx(x, sigma), js(x, sigma))),
            None => Ok((
                try_fd_jacobian(|p| self.phi(p, sigma), x, self.fd_step)?,
                try_fd_jacobian(|p| self.phi(x, p), sigma, self.fd_step)?,
            )),
        }
    }

    /// Every block at `p`. Fails with `SingularJacobian` when `J^nu_mu` or
    /// `J^Lambda_Xi` cannot be inverted to within `1e-8`.
    pub fn jacobian_blocks(&self, p: &GpbPoint) -> Result<JacobianBlocks> {
        let base = self.base.jacobian(&p.x)?;
        let base_inv = checked_inverse(&base, "J^nu_mu")?;
        let sigma_sigma = self.sigma.jac_sigma(&p.x, &p.sigma)?;
        let sigma_sigma_inv = checked_inverse(&sigma_sigma, "J^Lambda_Xi")?;
        for (name, a, b) in [
            ("J^nu_mu", &base, &base_inv),
            ("J^Lambda_Xi", &sigma_sigma, &sigma_sigma_inv),
        ] {
            let n = a.nrows();
            let defect = numerics::max_abs(&(a * b - DMatrix::identity(n, n)));
            if defect > 1e-8 {
                return Err(Error::SingularJacobian {
                    block: name.to_string(),
                    condition: f64::INFINITY,
                });
            }
        }
        let (phi_x, phi_sigma) = self.phi_jacobians(&p.x, &p.sigma)?;
        Ok(JacobianBlocks {
            base,
            base_inv,
            sigma_sigma,
            sigma_sigma_inv,
            sigma_x: self.sigma.jac_x(&p.x, &p.sigma)?,
            fiber_g: self.fiber.jac_g(&p.x, &p.g)?,
            fiber_x: self.fiber.jac_x(&p.x, &p.g)?,
            phi_x,
            phi_sigma,
        })
    }

    /// Partials of `Psi` by the chain rule through the group partials.
    pub fn composite_partials(&self, p: &GpbPoint, blocks: &JacobianBlocks) -> Result<CompositePartials> {
        let grp = self.group();
        let phi = self.phi(&p.x, &p.sigma)?;
        let gg = self.fiber.apply(&p.x, &p.g)?;
        let d1 = grp.d1_multiply(&phi, &gg)?;
        let d2 = grp.d2_multiply(&phi, &gg)?;
        Ok(CompositePartials {
            wrt_x: &d1 * &blocks.phi_x + &d2 * &blocks.fiber_x,
            wrt_sigma: &d1 * &blocks.phi_sigma,
            wrt_g: d2 * &blocks.fiber_g,
        })
    }

    /// Partials of `Psi` by finite differences of the composite itself.
    pub fn fd_composite_partials(&self, p: &GpbPoint) -> Result<CompositePartials> {
        Ok(CompositePartials {
            wrt_x: try_fd_jacobian(|v| self.fiber_map(v, &p.sigma, &p.g), &p.x, self.fd_step)?,
            wrt_sigma: try_fd_jacobian(|v| self.fiber_map(&p.x, v, &p.g), &p.sigma, self.fd_step)?,
            wrt_g: try_fd_jacobian(|v| self.fiber_map(&p.x, &p.sigma, v), &p.g, self.fd_step)?,
        })
    }

    /// The change running the other way:
    /// `x = x(x')`, `sigma = Sigma^-1`, `g = pi(G^-1(x, phi^-1), G^-1(x, g'))`.
    pub fn inverse(&self) -> Result<GpbChange> {
        let base = self.base.inverse();
        let m = self.base.dim();
        let s = self.sigma.sigma_dim();

        let (b1, s1) = (self.base.clone(), self.sigma.clone());
        let (b2, s2) = (self.base.clone(), self.sigma.clone());
        let sigma = SigmaChange {
            base_dim: m,
            sigma_dim: s,
            forward: Arc::new(move |xn, sn| s1.apply_inverse(&b1.apply_inverse(xn)?, sn)),
            inverse: Arc::new(move |xn, so| s2.apply(&b2.apply_inverse(xn)?, so)),
            jac_sigma: None,
            jac_x: None,
            fd_step: self.sigma.fd_step,
        };

        let (b3, f3) = (self.base.clone(), self.fiber.clone());
        let (b4, f4) = (self.base.clone(), self.fiber.clone());
        let fiber = FiberAutomorphismField::from_fallible(
            self.group().clone(),
            m,
            Arc::new(move |xn, g| f3.apply_inverse(&b3.apply_inverse(xn)?, g)),
            Arc::new(move |xn, g| f4.apply(&b4.apply_inverse(xn)?, g)),
        );

        let fwd = self.clone();
        let phi: Map2 = Arc::new(move |xn, sn| {
            let x = fwd.base.apply_inverse(xn)?;
            let sigma = fwd.sigma.apply_inverse(&x, sn)?;
            let grp = fwd.group();
            let phi_inv = grp.invert(&fwd.phi(&x, &sigma)?)?;
            fwd.fiber.apply_inverse(&x, &phi_inv)
        });
        GpbChange::from_fallible(base, sigma, phi, fiber)
    }
}
