//! Generalized principal connections as coefficient fields.
//!
//! In coordinates `(x, sigma, g)` a generalized principal connection has
//! coefficients `A_mu(x, sigma, g)` (`l x m`) and `A_theta(x, sigma, g)`
//! (`l x (n - l)`). Relative to a Lie group fiber bundle connection `eta` it
//! is equivariant when
//!
//! * `A_mu(x, sigma, gh) = D1(g, h) A_mu(x, sigma, g) + D2(g, h) eta(x, h)`
//! * `A_theta(x, sigma, gh) = D1(g, h) A_theta(x, sigma, g)`
//!
//! and these hold exactly when `A_mu(x, sigma, g) = D1(e, g) A_mu(x, sigma, e)
//! + eta(x, g)` and `A_theta(x, sigma, g) = D1(e, g) A_theta(x, sigma, e)` with
//! `eta` itself a Lie group fiber bundle connection.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::atlas::{GpbChange, GpbPoint, PairPoint};
use crate::error::{Error, Result};
use crate::lgfb::{image_box, transform_lgfb, EtaFn, LgfbConnectionField};
use crate::liegroup::Group;
use crate::numerics::{self, max_abs, try_fd_jacobian, DomainBox, Sampling, SplitMix64, ToleranceConfig};
use crate::report::{ConditionCheck, ConditionReport, ValidationReport};

pub type CoeffFn =
    Arc<dyn Fn(&DVector<f64>, &DVector<f64>, &DVector<f64>) -> Result<DMatrix<f64>> + Send + Sync>;
pub type BoundaryFn = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> Result<DMatrix<f64>> + Send + Sync>;

/// Fraction of the sigma box width used to probe sigma-independence.
pub const SIGMA_PROBE_FRACTION: f64 = 0.25;

/// Candidate coefficients `{A_mu, A_theta}`.
#[derive(Clone)]
pub struct GenConnectionField {
    name: String,
    group: Group,
    base_box: DomainBox,
    sigma_box: DomainBox,
    a_mu: CoeffFn,
    a_theta: CoeffFn,
}

impl fmt::Debug for GenConnectionField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GenConnectionField")
            .field("name", &self.name)
            .field("group", &self.group.name())
            .field("dims", &self.dims())
            .finish()
    }
}

/// Coefficients at the identity: `A_mu(x, sigma, e)` and `A_theta(x, sigma, e)`.
#[derive(Clone)]
pub struct BoundaryData {
    a_mu_at_e: BoundaryFn,
    a_theta_at_e: BoundaryFn,
    sigma_box: DomainBox,
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryData")
            .field("sigma_dim", &self.sigma_box.dim())
            .finish()
    }
}

/// One sample `(x, sigma, g, h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GenSample {
    pub x: DVector<f64>,
    pub sigma: DVector<f64>,
    pub g: DVector<f64>,
    pub h: DVector<f64>,
}

impl GenSample {
    pub fn flatten(&self) -> Vec<f64> {
        numerics::concat(&[&self.x, &self.sigma, &self.g, &self.h])
            .iter()
            .copied()
            .collect()
    }
}

/// One entry `c0 + c1 sin(w . x + u . sigma + p)` of random boundary data.
struct Wave {
    c0: f64,
    c1: f64,
    w: DVector<f64>,
    u: DVector<f64>,
    p: f64,
}

impl BoundaryData {
    pub fn new<M, T>(sigma_box: DomainBox, a_mu_at_e: M, a_theta_at_e: T) -> Self
    where
        M: Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
        T: Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self {
            a_mu_at_e: Arc::new(move |x, s| Ok(a_mu_at_e(x, s))),
            a_theta_at_e: Arc::new(move |x, s| Ok(a_theta_at_e(x, s))),
            sigma_box,
        }
    }

    pub fn zero(l: usize, m: usize, sigma_box: DomainBox) -> Self {
        let s = sigma_box.dim();
        Self::new(
            sigma_box,
            move |_, _| DMatrix::zeros(l, m),
            move |_, _| DMatrix::zeros(l, s),
        )
    }

    /// Smooth pseudo-random boundary data: every entry is
    /// `c0 + c1 sin(w . x + u . sigma + p)` with coefficients drawn from `seed`.
    pub fn random_smooth(l: usize, m: usize, sigma_box: DomainBox, seed: u64) -> Self {
        let s = sigma_box.dim();
        let mut rng = SplitMix64::new(seed);
        let mut draw = |cols: usize| -> Vec<Wave> {
            (0..l * cols)
                .map(|_| Wave {
                    c0: rng.uniform(-1.0, 1.0),
                    c1: rng.uniform(-1.0, 1.0),
                    w: DVector::from_fn(m, |_, _| rng.uniform(-1.5, 1.5)),
                    u: DVector::from_fn(s, |_, _| rng.uniform(-1.5, 1.5)),
                    p: rng.uniform(-3.0, 3.0),
                })
                .collect()
        };
        let mu_coeffs = draw(m);
        let theta_coeffs = draw(s);
        let entry = |c: &Wave, x: &DVector<f64>, sg: &DVector<f64>| c.c0 + c.c1 * (c.w.dot(x) + c.u.dot(sg) + c.p).sin();
        Self::new(
            sigma_box,
            move |x, sg| DMatrix::from_fn(l, m, |i, j| entry(&mu_coeffs[i * m + j], x, sg)),
            move |x, sg| DMatrix::from_fn(l, s, |i, j| entry(&theta_coeffs[i * s + j], x, sg)),
        )
    }

    pub fn sigma_box(&self) -> &DomainBox {
        &self.sigma_box
    }

    pub fn a_mu_at_e(&self, x: &DVector<f64>, sigma: &DVector<f64>) -> Result<DMatrix<f64>> {
        (self.a_mu_at_e)(x, sigma)
    }

    pub fn a_theta_at_e(&self, x: &DVector<f64>, sigma: &DVector<f64>) -> Result<DMatrix<f64>> {
        (self.a_theta_at_e)(x, sigma)
    }
}

impl GenConnectionField {
    pub fn new<M, T>(name: impl Into<String>, group: Group, base_box: DomainBox, sigma_box: DomainBox, a_mu: M, a_theta: T) -> Self
    where
        M: Fn(&DVector<f64>, &DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
        T: Fn(&DVector<f64>, &DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self::from_fallible(
            name,
            group,
            base_box,
            sigma_box,
            Arc::new(move |x, s, g| Ok(a_mu(x, s, g))),
            Arc::new(move |x, s, g| Ok(a_theta(x, s, g))),
        )
    }

    pub fn from_fallible(
        name: impl Into<String>,
        group: Group,
        base_box: DomainBox,
        sigma_box: DomainBox,
        a_mu: CoeffFn,
        a_theta: CoeffFn,
    ) -> Self {
        Self {
            name: name.into(),
            group,
            base_box,
            sigma_box,
            a_mu,
            a_theta,
        }
    }

    /// `A_mu = eta`, `A_theta = 0`: vanishing boundary data.
    pub fn from_eta(eta: &LgfbConnectionField, sigma_box: DomainBox) -> Self {
        let (l, s) = (eta.group().dim(), sigma_box.dim());
        let ev = eta.eval_fn();
        Self::from_fallible(
            format!("{}-as-gpb", eta.name()),
            eta.group().clone(),
            eta.base_box().clone(),
            sigma_box,
            Arc::new(move |x, _, g| ev(x, g)),
            Arc::new(move |_, _, _| Ok(DMatrix::zeros(l, s))),
        )
    }

    /// A connection with no sigma coordinates, `A(x, g)`.
    pub fn standard<F>(name: impl Into<String>, group: Group, base_box: DomainBox, a: F) -> Self
    where
        F: Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        let l = group.dim();
        Self::new(
            name,
            group,
            base_box,
            DomainBox::empty(),
            move |x, _, g| a(x, g),
            move |_, _, _| DMatrix::zeros(l, 0),
        )
    }

    /// `A(x, v) = sigma_field(x) + N(x) v` on an additive group with no sigma
    /// coordinates.
    pub fn affine_connection<S, N>(group: Group, base_box: DomainBox, sigma_field: S, n: N) -> Result<Self>
    where
        S: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
        N: Fn(&DVector<f64>) -> Vec<DMatrix<f64>> + Send + Sync + 'static,
    {
        let linear = LgfbConnectionField::linear_connection(group.clone(), base_box.clone(), n)?;
        let ev = linear.eval_fn();
        let l = group.dim();
        Ok(Self::from_fallible(
            "affine",
            group,
            base_box,
            DomainBox::empty(),
            Arc::new(move |x, _, v| Ok(sigma_field(x) + ev(x, v)?)),
            Arc::new(move |_, _, _| Ok(DMatrix::zeros(l, 0))),
        ))
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn base_box(&self) -> &DomainBox {
        &self.base_box
    }

    pub fn sigma_box(&self) -> &DomainBox {
        &self.sigma_box
    }

    /// `(m, n, l)`: base, total fiber and group dimensions.
    pub fn dims(&self) -> (usize, usize, usize) {
        let l = self.group.dim();
        (self.base_box.dim(), self.sigma_box.dim() + l, l)
    }

    fn check_args(&self, x: &DVector<f64>, sigma: &DVector<f64>, g: &DVector<f64>) -> Result<()> {
        let (m, n, l) = self.dims();
        if x.len() != m || sigma.len() != n - l || g.len() != l {
            return Err(Error::DimensionMismatch {
                context: format!("A({}) arguments", self.name),
                expected: m + n,
                got: x.len() + sigma.len() + g.len(),
            });
        }
        Ok(())
    }

    fn checked(&self, out: DMatrix<f64>, cols: usize, what: &str) -> Result<DMatrix<f64>> {
        let l = self.group.dim();
        if out.shape() != (l, cols) {
            return Err(Error::DimensionMismatch {
                context: format!("{what}({}) value rows*cols", self.name),
                expected: l * cols,
                got: out.nrows() * out.ncols(),
            });
        }
        numerics::ensure_finite_matrix(&out, what)?;
        Ok(out)
    }

    /// `A_mu(x, sigma, g)`, shape `l x m`.
    pub fn a_mu(&self, x: &DVector<f64>, sigma: &DVector<f64>, g: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_args(x, sigma, g)?;
        self.checked((self.a_mu)(x, sigma, g)?, self.base_box.dim(), "A_mu")
    }

    /// `A_theta(x, sigma, g)`, shape `l x (n - l)`.
    pub fn a_theta(&self, x: &DVector<f64>, sigma: &DVector<f64>, g: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_args(x, sigma, g)?;
        self.checked((self.a_theta)(x, sigma, g)?, self.sigma_box.dim(), "A_theta")
    }

    pub fn samples(&self, sampling: Sampling) -> Vec<GenSample> {
        let mut rng = sampling.rng();
        (0..sampling.count)
            .map(|_| GenSample {
                x: rng.point_in(&self.base_box),
                sigma: rng.point_in(&self.sigma_box),
                g: self.group.sample(&mut rng),
                h: self.group.sample(&mut rng),
            })
            .collect()
    }

    /// Horizontal vector over `(a, b)`: fiber part `-A_mu a - A_theta b`.
    pub fn horizontal_fiber_part(
        &self,
        p: &GpbPoint,
        a: &DVector<f64>,
        b: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        Ok(-(self.a_mu(&p.x, &p.sigma, &p.g)? * a + self.a_theta(&p.x, &p.sigma, &p.g)? * b))
    }
}

fn same_group(a: &Group, b: &Group) -> Result<()> {
    if a.dim() == b.dim() && a.name() == b.name() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "connection and eta use different groups: {} vs {}",
            a.name(),
            b.name()
        )))
    }
}

fn gen_conditions(
    a: &GenConnectionField,
    eta: &LgfbConnectionField,
    samples: &[GenSample],
    tol: ToleranceConfig,
) -> Result<(ConditionReport, ConditionReport)> {
    same_group(a.group(), eta.group())?;
    let grp = a.group();
    let mut mu = ConditionCheck::new("mu_equivariance", tol);
    let mut theta = ConditionCheck::new("theta_equivariance", tol);
    for s in samples {
        let pt = s.flatten();
        let gh = match grp.multiply(&s.g, &s.h) {
            Ok(v) => v,
            Err(e) if e.is_chart_exit() => {
                mu.skip();
                theta.skip();
                continue;
            }
            Err(e) => return Err(e),
        };
        let d1 = grp.d1_multiply(&s.g, &s.h);
        mu.record_result(
            (|| {
                let d1 = d1.clone()?;
                let lhs = a.a_mu(&s.x, &s.sigma, &gh)?;
                let rhs = d1 * a.a_mu(&s.x, &s.sigma, &s.g)?
                    + grp.d2_multiply(&s.g, &s.h)? * eta.eval(&s.x, &s.h)?;
                Ok((max_abs(&(&lhs - rhs)), max_abs(&lhs)))
            })(),
            &pt,
        )?;
        theta.record_result(
            (|| {
                let d1 = d1.clone()?;
                let lhs = a.a_theta(&s.x, &s.sigma, &gh)?;
                let rhs = d1 * a.a_theta(&s.x, &s.sigma, &s.g)?;
                Ok((max_abs(&(&lhs - rhs)), max_abs(&lhs)))
            })(),
            &pt,
        )?;
    }
    Ok((mu.finish(), theta.finish()))
}

/// Residuals of both equivariance conditions of `a` relative to `eta`.
pub fn check_gen_conditions(
    a: &GenConnectionField,
    eta: &LgfbConnectionField,
    samples: &[GenSample],
    tol: ToleranceConfig,
) -> Result<ValidationReport> {
    let (mu, theta) = gen_conditions(a, eta, samples, tol)?;
    Ok(ValidationReport::new("gen_conditions", vec![mu, theta]))
}

/// `A_mu = D1(e, g) b_mu + eta`, `A_theta = D1(e, g) b_theta`. Refuses an
/// `eta` that fails the Lie group fiber bundle conditions on `validation`.
pub fn build_from_boundary(
    b: &BoundaryData,
    eta: &LgfbConnectionField,
    validation: Sampling,
    tol: ToleranceConfig,
) -> Result<GenConnectionField> {
    let report = eta.check_connection(validation, tol)?;
    if !report.passed {
        let failing: Vec<String> = report
            .conditions
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{} (max residual {:e})", c.name, c.stats.max_abs))
            .collect();
        return Err(Error::InvalidEta {
            reason: format!("{} fails {}", eta.name(), failing.join(", ")),
        });
    }
    Ok(build_from_boundary_unchecked(b, eta))
}

/// [`build_from_boundary`] without validating `eta`.
pub fn build_from_boundary_unchecked(b: &BoundaryData, eta: &LgfbConnectionField) -> GenConnectionField {
    let grp = eta.group().clone();
    let (g1, b1, ev) = (grp.clone(), b.clone(), eta.eval_fn());
    let a_mu: CoeffFn = Arc::new(move |x, s, g| {
        let d1 = g1.d1_multiply(g1.identity(), g)?;
        Ok(d1 * b1.a_mu_at_e(x, s)? + ev(x, g)?)
    });
    let (g2, b2) = (grp.clone(), b.clone());
    let a_theta: CoeffFn = Arc::new(move |x, s, g| {
        let d1 = g2.d1_multiply(g2.identity(), g)?;
        Ok(d1 * b2.a_theta_at_e(x, s)?)
    });
    GenConnectionField::from_fallible(
        format!("boundary+{}", eta.name()),
        grp,
        eta.base_box().clone(),
        b.sigma_box().clone(),
        a_mu,
        a_theta,
    )
}

/// The coefficients at `g = e`.
pub fn extract_boundary(a: &GenConnectionField) -> BoundaryData {
    let (a1, a2) = (a.clone(), a.clone());
    BoundaryData {
        a_mu_at_e: Arc::new(move |x, s| a1.a_mu(x, s, a1.group().identity())),
        a_theta_at_e: Arc::new(move |x, s| a2.a_theta(x, s, a2.group().identity())),
        sigma_box: a.sigma_box().clone(),
    }
}

/// `A_mu(x, sigma, g) - D1(e, g) A_mu(x, sigma, e)` at a fixed `sigma`.
fn implied_eta(a: &GenConnectionField, x: &DVector<f64>, sigma: &DVector<f64>, g: &DVector<f64>) -> Result<DMatrix<f64>> {
    let grp = a.group();
    let e = grp.identity();
    Ok(a.a_mu(x, sigma, g)? - grp.d1_multiply(e, g)? * a.a_mu(x, sigma, e)?)
}

/// The `eta` forced by `a`, evaluated at the center of the sigma box, and a
/// report of its sigma-independence at the center plus and minus a quarter
/// of the box width.
pub fn infer_eta(
    a: &GenConnectionField,
    sampling: Sampling,
    tol: ToleranceConfig,
) -> Result<(LgfbConnectionField, ValidationReport)> {
    if !a.sigma_box().is_finite() {
        return Err(Error::InvalidBox("sigma box must be finite to infer eta".into()));
    }
    let sigma0 = a.sigma_box().center();
    let width = a.sigma_box().widths();
    let probes = [
        &sigma0 + &width * SIGMA_PROBE_FRACTION,
        &sigma0 - &width * SIGMA_PROBE_FRACTION,
    ];
    let (src, s0) = (a.clone(), sigma0.clone());
    let ev: EtaFn = Arc::new(move |x, g| implied_eta(&src, x, &s0, g));
    let eta = LgfbConnectionField::from_fallible(
        format!("eta[{}]", a.name()),
        a.group().clone(),
        a.base_box().clone(),
        ev,
    );

    let mut check = ConditionCheck::new("sigma_independence", tol);
    for s in eta.samples(sampling) {
        let pt: Vec<f64> = numerics::concat(&[&s.x, &s.g]).iter().copied().collect();
        check.record_result(
            (|| {
                let at0 = implied_eta(a, &s.x, &sigma0, &s.g)?;
                let mut worst = 0.0_f64;
                for p in &probes {
                    worst = worst.max(max_abs(&(implied_eta(a, &s.x, p, &s.g)? - &at0)));
                }
                Ok((worst, max_abs(&at0)))
            })(),
            &pt,
        )?;
    }
    Ok((eta, ValidationReport::new("infer_eta", vec![check.finish()])))
}

/// Infer `eta` from `a`, then validate it as a Lie group fiber bundle
/// connection.
pub fn check_eta_forced_lgfb(a: &GenConnectionField, sampling: Sampling, tol: ToleranceConfig) -> Result<ValidationReport> {
    let (eta, inference) = infer_eta(a, sampling, tol)?;
    let lgfb = eta.check_connection(sampling, tol)?;
    Ok(ValidationReport::combine("eta_forced", vec![inference, lgfb]))
}

/// Transformed coefficients, evaluated by pulling `(x', sigma', g')` back
/// through `change`:
///
/// * `A'_theta = (Psi_g A_theta - Psi_sigma) Jbar_ss`
/// * `A'_mu = (Psi_g A_mu - Psi_x) Jbar - (Psi_g A_theta - Psi_sigma) Jbar_ss J_sx Jbar`
pub fn transform_genconn(a: &GenConnectionField, change: &GpbChange) -> Result<GenConnectionField> {
    let (m, n, l) = a.dims();
    if change.base().dim() != m || change.sigma().sigma_dim() != n - l {
        return Err(Error::DimensionMismatch {
            context: "gpb change dimensions".into(),
            expected: m + n - l,
            got: change.base().dim() + change.sigma().sigma_dim(),
        });
    }
    same_group(a.group(), change.group())?;

    let coefficients = {
        let (src, c) = (a.clone(), change.clone());
        move |p_new: &GpbPoint| -> Result<(DMatrix<f64>, DMatrix<f64>)> {
            let p = c.pull_back(p_new)?;
            let blocks = c.jacobian_blocks(&p)?;
            let psi = c.composite_partials(&p, &blocks)?;
            let a_mu = src.a_mu(&p.x, &p.sigma, &p.g)?;
            let a_theta = src.a_theta(&p.x, &p.sigma, &p.g)?;
            let theta_part = &psi.wrt_g * a_theta - &psi.wrt_sigma;
            let new_theta = &theta_part * &blocks.sigma_sigma_inv;
            let new_mu = (&psi.wrt_g * a_mu - &psi.wrt_x) * &blocks.base_inv
                - &new_theta * &blocks.sigma_x * &blocks.base_inv;
            Ok((new_mu, new_theta))
        }
    };
    let coefficients = Arc::new(coefficients);
    let c1 = coefficients.clone();
    let a_mu: CoeffFn = Arc::new(move |x, s, g| Ok(c1(&GpbPoint::new(x.clone(), s.clone(), g.clone()))?.0));
    let c2 = coefficients;
    let a_theta: CoeffFn = Arc::new(move |x, s, g| Ok(c2(&GpbPoint::new(x.clone(), s.clone(), g.clone()))?.1));

    let base_box = image_box(change.base(), a.base_box())?;
    let sigma_box = sigma_image_box(change, a)?;
    Ok(GenConnectionField::from_fallible(
        format!("{}'", a.name()),
        a.group().clone(),
        base_box,
        sigma_box,
        a_mu,
        a_theta,
    ))
}

fn sigma_image_box(change: &GpbChange, a: &GenConnectionField) -> Result<DomainBox> {
    let (bx, sx) = (a.base_box(), a.sigma_box());
    if sx.dim() == 0 {
        return Ok(DomainBox::empty());
    }
    if !bx.is_finite() || !sx.is_finite() {
        return Ok(DomainBox::unbounded(sx.dim()));
    }
    let mut rng = SplitMix64::new(0);
    let mut pts = vec![change.sigma().apply(&bx.center(), &sx.center())?];
    for _ in 0..64 {
        pts.push(change.sigma().apply(&rng.point_in(bx), &rng.point_in(sx))?);
    }
    DomainBox::bounding(&pts, 0.0)
}

/// Push the horizontal vectors of `a` at `p` through the tangent map of the
/// change (by finite differences of the change itself) and measure how far
/// they are from horizontal for `a_new` at the image point.
fn horizontality_defect(
    a: &GenConnectionField,
    a_new: &GenConnectionField,
    change: &GpbChange,
    p: &GpbPoint,
    step: f64,
) -> Result<(f64, f64)> {
    let (m, n, l) = a.dims();
    let s = n - l;
    let z = numerics::concat(&[&p.x, &p.sigma, &p.g]);
    let tangent = try_fd_jacobian(
        |z| {
            let parts = numerics::split(z, &[m, s, l]);
            let q = change.apply(&GpbPoint::new(parts[0].clone(), parts[1].clone(), parts[2].clone()))?;
            Ok(numerics::concat(&[&q.x, &q.sigma, &q.g]))
        },
        &z,
        step,
    )?;
    let q = change.apply(p)?;
    let (new_mu, new_theta) = (a_new.a_mu(&q.x, &q.sigma, &q.g)?, a_new.a_theta(&q.x, &q.sigma, &q.g)?);
    let (mut worst, mut reference) = (0.0_f64, 0.0_f64);
    for k in 0..(m + s) {
        let mut base = DVector::zeros(m + s);
        base[k] = 1.0;
        let parts = numerics::split(&base, &[m, s]);
        let fiber = a.horizontal_fiber_part(p, &parts[0], &parts[1])?;
        let w = tangent.clone() * numerics::concat(&[&parts[0], &parts[1], &fiber]);
        let out = numerics::split(&w, &[m, s, l]);
        let defect = &out[2] + &new_mu * &out[0] + &new_theta * &out[1];
        worst = worst.max(numerics::max_abs_vec(&defect));
        reference = reference.max(numerics::max_abs_vec(&out[2]));
    }
    Ok((worst, reference))
}

/// Validate `a` against `eta` in the source chart, then the transformed pair
/// in the target chart, with target samples obtained by mapping source
/// samples through the paired change. Also checks that the change carries
/// horizontal vectors of `a` to horizontal vectors of the transformed field.
pub fn check_genconn_invariance(
    a: &GenConnectionField,
    eta: &LgfbConnectionField,
    change: &GpbChange,
    sampling: Sampling,
    tol: ToleranceConfig,
) -> Result<ValidationReport> {
    let source = a.samples(sampling);
    let a_new = transform_genconn(a, change)?;
    let eta_new = transform_lgfb(eta, change.base(), change.fiber())?;

    let mut target = Vec::with_capacity(source.len());
    let mut unmapped = 0usize;
    let mut horizontal = ConditionCheck::new("horizontality_preserved", tol);
    for s in &source {
        let pair = PairPoint {
            x: s.x.clone(),
            sigma: s.sigma.clone(),
            g: s.g.clone(),
            h: s.h.clone(),
        };
        match change.apply_pair(&pair) {
            Ok(q) => target.push(GenSample {
                x: q.x,
                sigma: q.sigma,
                g: q.g,
                h: q.h,
            }),
            Err(e) if e.is_chart_exit() => unmapped += 1,
            Err(e) => return Err(e),
        }
        let p = GpbPoint::new(s.x.clone(), s.sigma.clone(), s.g.clone());
        horizontal.record_result(horizontality_defect(a, &a_new, change, &p, tol.fd_step), &s.flatten())?;
    }

    let mut source_report = check_gen_conditions(a, eta, &source, tol)?;
    source_report.name = "source".into();
    let mut target_report = check_gen_conditions(&a_new, &eta_new, &target, tol)?;
    for c in &mut target_report.conditions {
        c.skipped += unmapped;
    }
    target_report.conditions.push(horizontal.finish());
    target_report = ValidationReport::new("target", target_report.conditions);
    Ok(ValidationReport::combine(
        "genconn_invariance",
        vec![source_report, target_report],
    ))
}

/// With no sigma coordinates and `eta = 0` the equivariance conditions
/// collapse to `A(x, gh) = D1(g, h) A(x, g)`. Reports that residual directly
/// and through the general check with the trivial connection.
pub fn check_standard_reduction(a: &GenConnectionField, samples: &[GenSample], tol: ToleranceConfig) -> Result<ValidationReport> {
    if a.sigma_box().dim() != 0 {
        return Err(Error::InvalidArgument(format!(
            "standard reduction needs no sigma coordinates, {} has {}",
            a.name(),
            a.sigma_box().dim()
        )));
    }
    let grp = a.group();
    let mut direct = ConditionCheck::new("right_equivariance", tol);
    for s in samples {
        direct.record_result(
            (|| {
                let gh = grp.multiply(&s.g, &s.h)?;
                let lhs = a.a_mu(&s.x, &s.sigma, &gh)?;
                let rhs = grp.d1_multiply(&s.g, &s.h)? * a.a_mu(&s.x, &s.sigma, &s.g)?;
                Ok((max_abs(&(&lhs - rhs)), max_abs(&lhs)))
            })(),
            &s.flatten(),
        )?;
    }
    let direct = ValidationReport::new("direct", vec![direct.finish()]);
    let trivial = LgfbConnectionField::trivial(grp.clone(), a.base_box().clone());
    let mut general = check_gen_conditions(a, &trivial, samples, tol)?;
    general.name = "general".into();
    Ok(ValidationReport::combine("standard_reduction", vec![direct, general]))
}
