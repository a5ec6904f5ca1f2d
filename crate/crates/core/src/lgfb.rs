//! Lie group fiber bundle connections as local coefficient fields.
//!
//! A connection on a Lie group fiber bundle is given locally by an `l x m`
//! matrix field `eta(x, g)`. It is compatible with the fiberwise
//! multiplication exactly when
//!
//! * `eta(x, e) = 0`, and
//! * `eta(x, gh) = D1(g, h) eta(x, g) + D2(g, h) eta(x, h)`,
//!
//! with `D1`, `D2` the partials of the group product. The horizontal lift of
//! `a` at `(x, g)` is `(a, -eta(x, g) a)`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::atlas::{BaseChange, FiberAutomorphismField};
use crate::error::{Error, Result};
use crate::liegroup::Group;
use crate::numerics::{self, max_abs, DomainBox, Sampling, ToleranceConfig};
use crate::report::{ConditionCheck, ValidationReport};

pub type EtaFn = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> Result<DMatrix<f64>> + Send + Sync>;

/// Scalars used to witness homogeneity.
pub const LINEARITY_SCALARS: [f64; 4] = [-1.0, 0.5, 2.0, 1.0 / 3.0];

/// Candidate connection coefficients `eta^I_mu(x, g)`.
#[derive(Clone)]
pub struct LgfbConnectionField {
    name: String,
    group: Group,
    base_box: DomainBox,
    eta: EtaFn,
}

impl fmt::Debug for LgfbConnectionField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LgfbConnectionField")
            .field("name", &self.name)
            .field("group", &self.group.name())
            .field("base_dim", &self.base_dim())
            .finish()
    }
}

/// A tangent vector `a^mu d_mu + v^I d_I` at a point of the bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub base_part: DVector<f64>,
    pub fiber_part: DVector<f64>,
}

impl TangentVector {
    pub fn new(base_part: DVector<f64>, fiber_part: DVector<f64>) -> Self {
        Self { base_part, fiber_part }
    }
}

impl std::ops::Add for TangentVector {
    type Output = TangentVector;

    fn add(self, rhs: TangentVector) -> TangentVector {
        TangentVector {
            base_part: self.base_part + rhs.base_part,
            fiber_part: self.fiber_part + rhs.fiber_part,
        }
    }
}

/// One sample `(x, g, h)` for the connection checks.
#[derive(Debug, Clone, PartialEq)]
pub struct LgfbSample {
    pub x: DVector<f64>,
    pub g: DVector<f64>,
    pub h: DVector<f64>,
}

impl LgfbSample {
    pub fn flatten(&self) -> Vec<f64> {
        numerics::concat(&[&self.x, &self.g, &self.h]).iter().copied().collect()
    }
}

impl LgfbConnectionField {
    pub fn new<F>(name: impl Into<String>, group: Group, base_box: DomainBox, eta: F) -> Self
    where
        F: Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self::from_fallible(name, group, base_box, Arc::new(move |x, g| Ok(eta(x, g))))
    }

    pub fn from_fallible(name: impl Into<String>, group: Group, base_box: DomainBox, eta: EtaFn) -> Self {
        Self {
            name: name.into(),
            group,
            base_box,
            eta,
        }
    }

    /// `eta = 0`.
    pub fn trivial(group: Group, base_box: DomainBox) -> Self {
        let (l, m) = (group.dim(), base_box.dim());
        Self::new("trivial", group, base_box, move |_, _| DMatrix::zeros(l, m))
    }

    /// `eta(x, v)^I_mu = N_mu(x)^I_J v^J` on an additive group. `n(x)` returns
    /// one `l x l` matrix per base direction.
    pub fn linear_connection<N>(group: Group, base_box: DomainBox, n: N) -> Result<Self>
    where
        N: Fn(&DVector<f64>) -> Vec<DMatrix<f64>> + Send + Sync + 'static,
    {
        require_additive(&group)?;
        let (l, m) = (group.dim(), base_box.dim());
        let eta: EtaFn = Arc::new(move |x, v| {
            let mats = n(x);
            if mats.len() != m {
                return Err(Error::DimensionMismatch {
                    context: "linear connection matrices".into(),
                    expected: m,
                    got: mats.len(),
                });
            }
            let mut out = DMatrix::zeros(l, m);
            for (mu, nm) in mats.iter().enumerate() {
                out.set_column(mu, &(nm * v));
            }
            Ok(out)
        });
        Ok(Self::from_fallible("linear", group, base_box, eta))
    }

    /// `eta(x, g) = (D1(e, g) - D2(g, e)) xi(x)`: column `mu` is the
    /// infinitesimal conjugation by the Lie algebra element `xi(x) e_mu`.
    /// Valid on every group.
    pub fn inner_derivation<X>(group: Group, base_box: DomainBox, xi: X) -> Self
    where
        X: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        let grp = group.clone();
        let eta: EtaFn = Arc::new(move |x, g| {
            let e = grp.identity();
            let right = grp.d1_multiply(e, g)?;
            let left = grp.d2_multiply(g, e)?;
            Ok((right - left) * xi(x))
        });
        Self::from_fallible("inner-derivation", group, base_box, eta)
    }

    /// Multiplicative fields on the Heisenberg group, one combination per
    /// base direction. Row `mu` of `coeffs(x)` holds `(alpha, beta, c, d, a, b)`
    /// weighting the scaling `(alpha g0, beta g1, (alpha + beta) g2)`, the
    /// shears `(0, c g0, c g0^2/2)` and `(d g1, 0, d g1^2/2)`, and the central
    /// shift `(0, 0, a g0 + b g1)`.
    pub fn heisenberg_derivation<C>(group: Group, base_box: DomainBox, coeffs: C) -> Result<Self>
    where
        C: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        if group.dim() != 3 || !group.name().starts_with("heisenberg") {
            return Err(Error::InvalidArgument(format!(
                "heisenberg derivation needs the heisenberg group, got {}",
                group.name()
            )));
        }
        let m = base_box.dim();
        let eta = move |x: &DVector<f64>, g: &DVector<f64>| {
            let k = coeffs(x);
            let mut out = DMatrix::zeros(3, m);
            for mu in 0..m {
                let (al, be, c, d, a, b) = (k[(mu, 0)], k[(mu, 1)], k[(mu, 2)], k[(mu, 3)], k[(mu, 4)], k[(mu, 5)]);
                out[(0, mu)] = al * g[0] + d * g[1];
                out[(1, mu)] = be * g[1] + c * g[0];
                out[(2, mu)] = (al + be) * g[2]
                    + 0.5 * c * g[0] * g[0]
                    + 0.5 * d * g[1] * g[1]
                    + a * g[0]
                    + b * g[1];
            }
            out
        };
        Ok(Self::new("heisenberg-derivation", group, base_box, eta))
    }

    /// Multiplicative fields `(0, alpha b + beta (1 - a))` on the affine group
    /// of the line; row `mu` of `coeffs(x)` is `(alpha, beta)`.
    pub fn aff1_derivation<C>(group: Group, base_box: DomainBox, coeffs: C) -> Result<Self>
    where
        C: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        if group.dim() != 2 || !group.name().starts_with("aff1") {
            return Err(Error::InvalidArgument(format!(
                "aff1 derivation needs the aff1 group, got {}",
                group.name()
            )));
        }
        let m = base_box.dim();
        let eta = move |x: &DVector<f64>, g: &DVector<f64>| {
            let k = coeffs(x);
            DMatrix::from_fn(2, m, |i, mu| {
                if i == 0 {
                    0.0
                } else {
                    k[(mu, 0)] * g[1] + k[(mu, 1)] * (1.0 - g[0])
                }
            })
        };
        Ok(Self::new("aff1-derivation", group, base_box, eta))
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_base_box(mut self, base_box: DomainBox) -> Result<Self> {
        if base_box.dim() != self.base_dim() {
            return Err(Error::DimensionMismatch {
                context: "connection base box".into(),
                expected: self.base_dim(),
                got: base_box.dim(),
            });
        }
        self.base_box = base_box;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn base_dim(&self) -> usize {
        self.base_box.dim()
    }

    pub fn base_box(&self) -> &DomainBox {
        &self.base_box
    }

    /// The `(x, g)` sampling domain.
    pub fn domain(&self) -> DomainBox {
        self.base_box.product(self.group.sample_box())
    }

    pub fn eval_fn(&self) -> EtaFn {
        self.eta.clone()
    }

    /// `eta(x, g)`, shape `l x m`.
    pub fn eval(&self, x: &DVector<f64>, g: &DVector<f64>) -> Result<DMatrix<f64>> {
        let (l, m) = (self.group.dim(), self.base_dim());
        if x.len() != m || g.len() != l {
            return Err(Error::DimensionMismatch {
                context: format!("eta({}) arguments", self.name),
                expected: m + l,
                got: x.len() + g.len(),
            });
        }
        let out = (self.eta)(x, g)?;
        if out.shape() != (l, m) {
            return Err(Error::DimensionMismatch {
                context: format!("eta({}) value rows*cols", self.name),
                expected: l * m,
                got: out.nrows() * out.ncols(),
            });
        }
        numerics::ensure_finite_matrix(&out, &format!("eta({})", self.name))?;
        Ok(out)
    }

    /// Deterministic `(x, g, h)` samples from the base box and the group's
    /// sample box.
    pub fn samples(&self, sampling: Sampling) -> Vec<LgfbSample> {
        let mut rng = sampling.rng();
        (0..sampling.count)
            .map(|_| {
                let x = rng.point_in(&self.base_box);
                let g = self.group.sample(&mut rng);
                let h = self.group.sample(&mut rng);
                LgfbSample { x, g, h }
            })
            .collect()
    }

    /// `(a, -eta(x, g) a)`.
    pub fn horizontal_lift(&self, x: &DVector<f64>, g: &DVector<f64>, a: &DVector<f64>) -> Result<TangentVector> {
        let eta = self.eval(x, g)?;
        Ok(TangentVector {
            base_part: a.clone(),
            fiber_part: -(eta * a),
        })
    }

    /// `(0, v_fiber + eta(x, g) v_base)`.
    pub fn vertical_projection(&self, x: &DVector<f64>, g: &DVector<f64>, v: &TangentVector) -> Result<TangentVector> {
        let eta = self.eval(x, g)?;
        Ok(TangentVector {
            base_part: DVector::zeros(v.base_part.len()),
            fiber_part: &v.fiber_part + eta * &v.base_part,
        })
    }

    /// Residuals of `eta(x, e) = 0`.
    pub fn check_identity_condition(&self, samples: &[LgfbSample], tol: ToleranceConfig) -> Result<ValidationReport> {
        Ok(ValidationReport::new(
            "identity_condition",
            vec![self.identity_condition(samples, tol)?],
        ))
    }

    /// Residuals of `eta(x, gh) = D1(g, h) eta(x, g) + D2(g, h) eta(x, h)`.
    pub fn check_multiplicativity_condition(&self, samples: &[LgfbSample], tol: ToleranceConfig) -> Result<ValidationReport> {
        Ok(ValidationReport::new(
            "multiplicativity_condition",
            vec![self.multiplicativity_condition(samples, tol)?],
        ))
    }

    /// Both characterizing conditions in one report.
    pub fn check_connection_conditions(&self, samples: &[LgfbSample], tol: ToleranceConfig) -> Result<ValidationReport> {
        Ok(ValidationReport::new(
            "lgfb_conditions",
            vec![
                self.identity_condition(samples, tol)?,
                self.multiplicativity_condition(samples, tol)?,
            ],
        ))
    }

    pub fn check_connection(&self, sampling: Sampling, tol: ToleranceConfig) -> Result<ValidationReport> {
        self.check_connection_conditions(&self.samples(sampling), tol)
    }

    fn identity_condition(&self, samples: &[LgfbSample], tol: ToleranceConfig) -> Result<crate::report::ConditionReport> {
        let e = self.group.identity();
        let mut check = ConditionCheck::new("identity", tol);
        for s in samples {
            let pt: Vec<f64> = s.x.iter().copied().collect();
            check.record_result(self.eval(&s.x, e).map(|v| (max_abs(&v), 0.0)), &pt)?;
        }
        Ok(check.finish())
    }

    fn multiplicativity_condition(&self, samples: &[LgfbSample], tol: ToleranceConfig) -> Result<crate::report::ConditionReport> {
        let grp = &self.group;
        let mut check = ConditionCheck::new("multiplicativity", tol);
        for s in samples {
            let outcome = (|| {
                let gh = grp.multiply(&s.g, &s.h)?;
                let lhs = self.eval(&s.x, &gh)?;
                let rhs = grp.d1_multiply(&s.g, &s.h)? * self.eval(&s.x, &s.g)?
                    + grp.d2_multiply(&s.g, &s.h)? * self.eval(&s.x, &s.h)?;
                Ok((max_abs(&(&lhs - rhs)), max_abs(&lhs)))
            })();
            check.record_result(outcome, &s.flatten())?;
        }
        Ok(check.finish())
    }

    /// The same identity in tangent-vector form: the horizontal lift at `gh`
    /// equals the tangent map of multiplication applied to the lifts at `g`
    /// and `h`, for each basis vector `a = e_mu`.
    pub fn check_lift_multiplication(&self, samples: &[LgfbSample], tol: ToleranceConfig) -> Result<ValidationReport> {
        let grp = &self.group;
        let m = self.base_dim();
        let mut check = ConditionCheck::new("lift_multiplication", tol);
        for s in samples {
            let outcome = (|| {
                let gh = grp.multiply(&s.g, &s.h)?;
                let d1 = grp.d1_multiply(&s.g, &s.h)?;
                let d2 = grp.d2_multiply(&s.g, &s.h)?;
                let (mut worst, mut reference) = (0.0_f64, 0.0_f64);
                for mu in 0..m {
                    let mut a = DVector::zeros(m);
                    a[mu] = 1.0;
                    let lg = self.horizontal_lift(&s.x, &s.g, &a)?;
                    let lh = self.horizontal_lift(&s.x, &s.h, &a)?;
                    let lgh = self.horizontal_lift(&s.x, &gh, &a)?;
                    // the tangent map of (g, h) -> gh on (a, lg) and (a, lh)
                    let pushed = &d1 * &lg.fiber_part + &d2 * &lh.fiber_part;
                    worst = worst.max(numerics::max_abs_vec(&(&lgh.fiber_part - pushed)));
                    reference = reference.max(numerics::max_abs_vec(&lgh.fiber_part));
                }
                Ok((worst, reference))
            })();
            check.record_result(outcome, &s.flatten())?;
        }
        Ok(ValidationReport::new("lift_multiplication", vec![check.finish()]))
    }

    /// Additivity `eta(x, v + w) = eta(x, v) + eta(x, w)` and homogeneity
    /// `eta(x, s v) = s eta(x, v)` on an additive group.
    pub fn check_linearity_forced(&self, samples: &[LgfbSample], tol: ToleranceConfig) -> Result<ValidationReport> {
        require_additive(&self.group)?;
        let mut add = ConditionCheck::new("additivity", tol);
        let mut hom = ConditionCheck::new("homogeneity", tol);
        for s in samples {
            let pt = s.flatten();
            add.record_result(
                (|| {
                    let lhs = self.eval(&s.x, &(&s.g + &s.h))?;
                    let rhs = self.eval(&s.x, &s.g)? + self.eval(&s.x, &s.h)?;
                    Ok((max_abs(&(&lhs - rhs)), max_abs(&lhs)))
                })(),
                &pt,
            )?;
            hom.record_result(
                (|| {
                    let base = self.eval(&s.x, &s.g)?;
                    let (mut worst, mut reference) = (0.0_f64, 0.0_f64);
                    for sc in LINEARITY_SCALARS {
                        let lhs = self.eval(&s.x, &(&s.g * sc))?;
                        worst = worst.max(max_abs(&(&lhs - &base * sc)));
                        reference = reference.max(max_abs(&lhs));
                    }
                    Ok((worst, reference))
                })(),
                &pt,
            )?;
        }
        Ok(ValidationReport::new(
            "linearity_forced",
            vec![add.finish(), hom.finish()],
        ))
    }
}

fn require_additive(group: &Group) -> Result<()> {
    if group.name().starts_with("additive") {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "operation needs an additive group, got {}",
            group.name()
        )))
    }
}

/// `eta'(x', g') = (J_g eta(x, g) - J_x) Jbar` evaluated by pulling
/// `(x', g')` back through the inverse change.
pub fn transform_lgfb(
    eta: &LgfbConnectionField,
    base: &BaseChange,
    fiber: &FiberAutomorphismField,
) -> Result<LgfbConnectionField> {
    if base.dim() != eta.base_dim() || fiber.base_dim() != eta.base_dim() {
        return Err(Error::DimensionMismatch {
            context: "lgfb change base dimension".into(),
            expected: eta.base_dim(),
            got: base.dim(),
        });
    }
    if fiber.group().dim() != eta.group().dim() {
        return Err(Error::DimensionMismatch {
            context: "lgfb change group dimension".into(),
            expected: eta.group().dim(),
            got: fiber.group().dim(),
        });
    }
    let target_box = image_box(base, eta.base_box())?;
    let (src, b, f) = (eta.clone(), base.clone(), fiber.clone());
    let eval: EtaFn = Arc::new(move |xn, gn| {
        let x = b.apply_inverse(xn)?;
        let g = f.apply_inverse(&x, gn)?;
        let jbar = b.inverse_jacobian(&x)?;
        Ok((f.jac_g(&x, &g)? * src.eval(&x, &g)? - f.jac_x(&x, &g)?) * jbar)
    });
    Ok(LgfbConnectionField::from_fallible(
        format!("{}'", eta.name()),
        eta.group().clone(),
        target_box,
        eval,
    ))
}

/// Bounding box of the images of the corners and center of `source`.
pub(crate) fn image_box(base: &BaseChange, source: &DomainBox) -> Result<DomainBox> {
    let m = source.dim();
    if m == 0 {
        return Ok(DomainBox::empty());
    }
    if !source.is_finite() {
        return Ok(DomainBox::unbounded(m));
    }
    let mut pts = vec![base.apply(&source.center())?];
    for mask in 0..(1usize << m.min(16)) {
        let corner = DVector::from_fn(m, |i, _| {
            if i < 16 && mask & (1 << i) != 0 {
                source.upper()[i]
            } else {
                source.lower()[i]
            }
        });
        pts.push(base.apply(&corner)?);
    }
    DomainBox::bounding(&pts, 0.0)
}

/// Validate `eta` in the source chart and its transform in the target
/// chart, with target samples obtained by mapping the source samples forward.
pub fn check_lgfb_invariance(
    eta: &LgfbConnectionField,
    base: &BaseChange,
    fiber: &FiberAutomorphismField,
    sampling: Sampling,
    tol: ToleranceConfig,
) -> Result<ValidationReport> {
    let source = eta.samples(sampling);
    let transformed = transform_lgfb(eta, base, fiber)?;
    let mut target = Vec::with_capacity(source.len());
    let mut unmapped = 0usize;
    for s in &source {
        let mapped = (|| {
            Ok::<_, Error>(LgfbSample {
                x: base.apply(&s.x)?,
                g: fiber.apply(&s.x, &s.g)?,
                h: fiber.apply(&s.x, &s.h)?,
            })
        })();
        match mapped {
            Ok(t) => target.push(t),
            Err(e) if e.is_chart_exit() => unmapped += 1,
            Err(e) => return Err(e),
        }
    }
    let mut target_report = transformed.check_connection_conditions(&target, tol)?;
    for c in &mut target_report.conditions {
        c.skipped += unmapped;
    }
    target_report.name = "target".into();
    let mut source_report = eta.check_connection_conditions(&source, tol)?;
    source_report.name = "source".into();
    Ok(ValidationReport::combine(
        "lgfb_invariance",
        vec![source_report, target_report],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liegroup::LieGroupModel;
    use crate::numerics::max_abs_vec;

    fn v(c: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(c)
    }

    fn additive(l: usize) -> Group {
        LieGroupModel::additive(l).unwrap().into_shared()
    }

    fn cube(m: usize) -> DomainBox {
        DomainBox::cube(m, -1.0, 1.0).unwrap()
    }

    fn sample_linear() -> LgfbConnectionField {
        LgfbConnectionField::linear_connection(additive(2), cube(2), |x| {
            vec![
                DMatrix::from_row_slice(2, 2, &[1.0, x[0], -0.5, 2.0]),
                DMatrix::from_row_slice(2, 2, &[0.3, 0.0, x[1] * x[0], -1.0]),
            ]
        })
        .unwrap()
    }

    fn square_field() -> LgfbConnectionField {
        LgfbConnectionField::new("square", additive(2), cube(2), |_, v| {
            DMatrix::from_fn(2, 2, |i, _| v[i] * v[i])
        })
    }

    #[test]
    fn linear_and_trivial_pass_both_conditions() {
        let tol = ToleranceConfig::default();
        for f in [sample_linear(), LgfbConnectionField::trivial(additive(2), cube(2))] {
            let r = f.check_connection(Sampling::new(200, 1), tol).unwrap();
            assert!(r.passed, "{r:#?}");
            assert!(r.max_residual() < 1e-12);
        }
    }

    #[test]
    fn constant_field_fails_identity_condition() {
        let f = LgfbConnectionField::new("const", additive(2), cube(1), |_, _| {
            DMatrix::from_row_slice(2, 1, &[0.25, -0.5])
        });
        let s = f.samples(Sampling::new(10, 2));
        let r = f.check_identity_condition(&s, ToleranceConfig::default()).unwrap();
        assert!(!r.passed);
        assert_eq!(r.max_residual(), 0.5);
    }

    #[test]
    fn square_field_fails_multiplicativity() {
        let f = square_field();
        let s = f.samples(Sampling::new(100, 3));
        let r = f.check_multiplicativity_condition(&s, ToleranceConfig::default()).unwrap();
        assert!(!r.passed);
        assert!(r.max_residual() > 1e-2);
    }

    #[test]
    fn derivation_builders_are_connections() {
        let tol = ToleranceConfig::default().with_abs(1e-9);
        let heis = LieGroupModel::heisenberg().into_shared();
        let aff = LieGroupModel::aff1().into_shared();
        let fields = [
            LgfbConnectionField::inner_derivation(heis.clone(), cube(2), |x| {
                DMatrix::from_row_slice(3, 2, &[x[0], 0.2, 1.0, -x[1], 0.3, x[0] * x[1]])
            }),
            LgfbConnectionField::heisenberg_derivation(heis, cube(2), |x| {
                DMatrix::from_row_slice(2, 6, &[x[0], 0.5, -0.3, 0.2, 1.0, x[1], 0.1, -x[1], 0.7, x[0], -0.4, 0.25])
            })
            .unwrap(),
            LgfbConnectionField::aff1_derivation(aff.clone(), cube(1), |x| {
                DMatrix::from_row_slice(1, 2, &[x[0].sin(), 0.5])
            })
            .unwrap(),
            LgfbConnectionField::inner_derivation(aff, cube(1), |x| {
                DMatrix::from_row_slice(2, 1, &[0.4, x[0]])
            }),
        ];
        for f in &fields {
            let r = f.check_connection(Sampling::new(300, 4), tol).unwrap();
            assert!(r.passed, "{}: {r:#?}", f.name());
        }
    }

    #[test]
    fn lift_check_agrees_with_coefficient_check() {
        let tol = ToleranceConfig::default();
        for f in [sample_linear(), square_field()] {
            let s = f.samples(Sampling::new(100, 5));
            let a = f.check_multiplicativity_condition(&s, tol).unwrap();
            let b = f.check_lift_multiplication(&s, tol).unwrap();
            assert_eq!(a.passed, b.passed);
            let (ra, rb) = (a.max_residual(), b.max_residual());
            if !a.passed {
                assert!(ra / rb < 10.0 && rb / ra < 10.0);
                assert_eq!(a.conditions[0].stats.worst_point, b.conditions[0].stats.worst_point);
            }
        }
    }

    #[test]
    fn lift_and_projection_split_tangent_vectors() {
        let f = sample_linear();
        let (x, g) = (v(&[0.2, -0.4]), v(&[0.7, 0.1]));
        let w = TangentVector::new(v(&[0.3, -1.2]), v(&[2.0, 0.5]));
        let lift = f.horizontal_lift(&x, &g, &w.base_part).unwrap();
        let vert = f.vertical_projection(&x, &g, &w).unwrap();
        let sum = lift.clone() + vert;
        assert!(max_abs_vec(&(sum.base_part - &w.base_part)) < 1e-15);
        assert!(max_abs_vec(&(sum.fiber_part - &w.fiber_part)) < 1e-15);
        let killed = f.vertical_projection(&x, &g, &lift).unwrap();
        assert!(max_abs_vec(&killed.fiber_part) < 1e-15);
        let pure = TangentVector::new(DVector::zeros(2), v(&[1.0, -3.0]));
        assert_eq!(f.vertical_projection(&x, &g, &pure).unwrap(), pure);
    }

    #[test]
    fn horizontal_lift_regression() {
        // N_0(x) = [[1, x0], [-0.5, 2]] at x = (0.2, -0.4), v = (0.7, 0.1)
        let f = sample_linear();
        let lift = f
            .horizontal_lift(&v(&[0.2, -0.4]), &v(&[0.7, 0.1]), &v(&[1.0, 0.0]))
            .unwrap();
        assert!(max_abs_vec(&(lift.fiber_part - v(&[-0.72, 0.15]))) < 1e-15);
        let at_e = f
            .horizontal_lift(&v(&[0.2, -0.4]), &v(&[0.0, 0.0]), &v(&[1.0, 1.0]))
            .unwrap();
        assert_eq!(max_abs_vec(&at_e.fiber_part), 0.0);
    }

    #[test]
    fn linearity_forced_detects_nonlinear_fields() {
        let tol = ToleranceConfig::default();
        let lin = sample_linear();
        let s = lin.samples(Sampling::new(100, 6));
        assert!(lin.check_linearity_forced(&s, tol).unwrap().passed);
        let sine = LgfbConnectionField::new("sine", additive(2), cube(2), |_, v| {
            DMatrix::from_fn(2, 2, |i, _| v[i].sin())
        });
        let r = sine.check_linearity_forced(&s, tol).unwrap();
        assert!(!r.condition("additivity").unwrap().passed);
    }

    #[test]
    fn identity_change_leaves_eta_unchanged() {
        let f = sample_linear();
        let t = transform_lgfb(&f, &BaseChange::identity(2), &FiberAutomorphismField::identity(f.group().clone(), 2)).unwrap();
        for s in f.samples(Sampling::new(20, 7)) {
            assert!(max_abs(&(t.eval(&s.x, &s.g).unwrap() - f.eval(&s.x, &s.g).unwrap())) < 1e-15);
        }
    }

    #[test]
    fn transform_then_inverse_round_trips() {
        let f = sample_linear();
        let base = BaseChange::polynomial(2, 0.1);
        let fiber = FiberAutomorphismField::rotation2(f.group().clone(), 2, 0.6);
        let there = transform_lgfb(&f, &base, &fiber).unwrap();
        let inv_base = base.inverse();
        let (b2, f2) = (base.clone(), fiber.clone());
        let (b3, f3) = (base.clone(), fiber.clone());
        let inv_fiber = FiberAutomorphismField::new(
            f.group().clone(),
            2,
            move |xn, g| f2.apply_inverse(&b2.apply_inverse(xn).unwrap(), g).unwrap(),
            move |xn, g| f3.apply(&b3.apply_inverse(xn).unwrap(), g).unwrap(),
        );
        let back = transform_lgfb(&there, &inv_base, &inv_fiber).unwrap();
        for s in f.samples(Sampling::new(30, 8)) {
            let r = back.eval(&s.x, &s.g).unwrap() - f.eval(&s.x, &s.g).unwrap();
            assert!(max_abs(&r) < 1e-6, "{}", max_abs(&r));
        }
    }

    #[test]
    fn linear_transform_matches_gauge_formula() {
        // eta'(x', v') column nu = (A N_mu A^-1 - dA/dx^mu A^-1) v' contracted with Jbar
        let f = sample_linear();
        let c = 0.1;
        let base = BaseChange::polynomial(2, c);
        let amat = |x: &DVector<f64>| DMatrix::from_row_slice(2, 2, &[1.0 + 0.2 * x[0], 0.1, -0.3 * x[1], 1.5]);
        let fiber = FiberAutomorphismField::linear(f.group().clone(), 2, amat);
        let t = transform_lgfb(&f, &base, &fiber).unwrap();
        let x = v(&[0.3, -0.2]);
        let w = v(&[0.4, 0.9]);
        let xn = base.apply(&x).unwrap();
        let wn = amat(&x) * &w;
        let a_inv = amat(&x).try_inverse().unwrap();
        let da = [
            DMatrix::from_row_slice(2, 2, &[0.2, 0.0, 0.0, 0.0]),
            DMatrix::from_row_slice(2, 2, &[0.0, 0.0, -0.3, 0.0]),
        ];
        let n = [
            DMatrix::from_row_slice(2, 2, &[1.0, x[0], -0.5, 2.0]),
            DMatrix::from_row_slice(2, 2, &[0.3, 0.0, x[1] * x[0], -1.0]),
        ];
        let mut old_cols = DMatrix::zeros(2, 2);
        for mu in 0..2 {
            let col = (&amat(&x) * &n[mu] * &a_inv - &da[mu] * &a_inv) * &wn;
            old_cols.set_column(mu, &col);
        }
        let jbar = DMatrix::from_diagonal(&x.map(|v| 1.0 / (1.0 + 2.0 * c * v)));
        let expected = old_cols * jbar;
        let got = t.eval(&xn, &wn).unwrap();
        assert!(max_abs(&(got - expected)) < 1e-8);
    }

    #[test]
    fn invariance_holds_and_needs_the_automorphism_law() {
        let tol = ToleranceConfig::default().with_abs(1e-5);
        let f = sample_linear();
        let base = BaseChange::polynomial(2, 0.1);
        let fiber = FiberAutomorphismField::rotation2(f.group().clone(), 2, 0.6);
        let r = check_lgfb_invariance(&f, &base, &fiber, Sampling::new(200, 9), tol).unwrap();
        assert!(r.passed, "{r:#?}");

        let bent = FiberAutomorphismField::new(
            f.group().clone(),
            2,
            |_, v| v.map(|a| a + 0.3 * a * a),
            |_, w| w.map(|b| (-1.0 + (1.0 + 1.2 * b).sqrt()) / 0.6),
        );
        let r = check_lgfb_invariance(&f, &base, &bent, Sampling::new(200, 9), tol).unwrap();
        assert!(!r.condition("target/multiplicativity").unwrap().passed);
    }

    #[test]
    fn trivial_eta_transforms_to_field_vanishing_at_identity() {
        let heis = LieGroupModel::heisenberg().into_shared();
        let f = LgfbConnectionField::trivial(heis.clone(), cube(2));
        let fiber = FiberAutomorphismField::inner(heis, 2, |x| v(&[x[0], 0.5 * x[1], x[0] * x[1]]));
        let r = check_lgfb_invariance(&f, &BaseChange::polynomial(2, 0.1), &fiber, Sampling::new(200, 10), ToleranceConfig::default().with_abs(1e-5)).unwrap();
        assert!(r.passed, "{r:#?}");
    }
}
