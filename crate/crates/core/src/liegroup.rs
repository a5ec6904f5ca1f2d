//! Lie groups in a single global chart.
//!
//! A [`LieGroupModel`] carries the multiplication `pi(g, h)` in coordinates,
//! the inverse, the identity and optionally hand-coded partial derivatives
//! of the multiplication with respect to each factor. When the partials are
//! absent they are computed by central differences.
//!
//! Partial-derivative matrices follow the usual Jacobian layout: row `I` is
//! the output coordinate, column `A` the differentiated input coordinate, so
//! `d1_multiply(g, h)[(I, A)] = d pi^I / d g^A`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    self, try_fd_jacobian, DomainBox, SplitMix64, ToleranceConfig, DEFAULT_FD_STEP,
};
use crate::report::{ConditionCheck, ConditionReport, ValidationReport};

pub type BinaryOp = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type UnaryOp = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type BinaryJacobian = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// Shared handle to a group model.
pub type Group = Arc<LieGroupModel>;

#[derive(Clone)]
pub struct LieGroupModel {
    name: String,
    identity: DVector<f64>,
    multiply: BinaryOp,
    invert: UnaryOp,
    d1: Option<BinaryJacobian>,
    d2: Option<BinaryJacobian>,
    chart_box: DomainBox,
    sample_box: DomainBox,
    fd_step: f64,
}

impl fmt::Debug for LieGroupModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LieGroupModel")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("analytic_partials", &self.has_analytic_partials())
            .field("chart_box", &self.chart_box)
            .finish()
    }
}

fn vec(v: &[f64]) -> DVector<f64> {
    DVector::from_row_slice(v)
}

impl LieGroupModel {
    /// A group from user closures. `chart_box` is the validity region of the
    /// chart (may be unbounded), `sample_box` a finite region used to draw
    /// validation samples.
    pub fn new<M, I>(
        name: impl Into<String>,
        identity: DVector<f64>,
        multiply: M,
        invert: I,
        chart_box: DomainBox,
        sample_box: DomainBox,
    ) -> Result<Self>
    where
        M: Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        I: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        let l = identity.len();
        if l == 0 {
            return Err(Error::InvalidArgument("group dimension must be positive".into()));
        }
        for (what, b) in [("chart_box", &chart_box), ("sample_box", &sample_box)] {
            if b.dim() != l {
                return Err(Error::DimensionMismatch {
                    context: format!("group {what}"),
                    expected: l,
                    got: b.dim(),
                });
            }
        }
        if !sample_box.is_finite() {
            return Err(Error::InvalidBox("group sample box must be finite".into()));
        }
        if !chart_box.contains(&identity) {
            return Err(Error::InvalidArgument("identity lies outside the chart".into()));
        }
        Ok(Self {
            name: name.into(),
            identity,
            multiply: Arc::new(multiply),
            invert: Arc::new(invert),
            d1: None,
            d2: None,
            chart_box,
            sample_box,
            fd_step: DEFAULT_FD_STEP,
        })
    }

    /// Attach hand-coded partials of the multiplication.
    pub fn with_partials<D1, D2>(mut self, d1: D1, d2: D2) -> Self
    where
        D1: Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
        D2: Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.d1 = Some(Arc::new(d1));
        self.d2 = Some(Arc::new(d2));
        self
    }

    /// Drop the analytic partials so every derivative goes through finite
    /// differences.
    pub fn without_partials(mut self) -> Self {
        self.d1 = None;
        self.d2 = None;
        self.name = format!("{}[fd]", self.name);
        self
    }

    pub fn with_fd_step(mut self, step: f64) -> Self {
        self.fd_step = step;
        self
    }

    pub fn with_sample_box(mut self, sample_box: DomainBox) -> Result<Self> {
        if sample_box.dim() != self.dim() || !sample_box.is_finite() {
            return Err(Error::InvalidBox("sample box must be finite and match the group".into()));
        }
        self.sample_box = sample_box;
        Ok(self)
    }

    pub fn into_shared(self) -> Group {
        Arc::new(self)
    }

    /// The abelian group `(R^l, +)`.
    pub fn additive(l: usize) -> Result<Self> {
        Ok(Self::new(
            format!("additive:{l}"),
            DVector::zeros(l),
            |g, h| g + h,
            |g| -g,
            DomainBox::unbounded(l),
            DomainBox::cube(l, -1.0, 1.0)?,
        )?
        .with_partials(
            move |_, _| DMatrix::identity(l, l),
            move |_, _| DMatrix::identity(l, l),
        ))
    }

    /// Heisenberg group in the polynomial chart
    /// `(x1, y1, z1)(x2, y2, z2) = (x1 + x2, y1 + y2, z1 + z2 + x1 y2)`.
    pub fn heisenberg() -> Self {
        Self::new(
            "heisenberg",
            DVector::zeros(3),
            |g, h| vec(&[g[0] + h[0], g[1] + h[1], g[2] + h[2] + g[0] * h[1]]),
            |g| vec(&[-g[0], -g[1], -g[2] + g[0] * g[1]]),
            DomainBox::unbounded(3),
            DomainBox::cube(3, -1.0, 1.0).expect("static box"),
        )
        .expect("static group")
        .with_partials(
            |_, h| {
                DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, h[1], 0.0, 1.0])
            },
            |g, _| {
                DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, g[0], 1.0])
            },
        )
    }

    /// Orientation-preserving affine maps of the line, `(a, b) : t -> a t + b`
    /// with `a > 0`.
    pub fn aff1() -> Self {
        Self::new(
            "aff1",
            vec(&[1.0, 0.0]),
            |g, h| vec(&[g[0] * h[0], g[0] * h[1] + g[1]]),
            |g| vec(&[1.0 / g[0], -g[1] / g[0]]),
            DomainBox::new(vec![0.0, f64::NEG_INFINITY], vec![f64::INFINITY, f64::INFINITY])
                .expect("static box"),
            DomainBox::new(vec![0.5, -1.0], vec![2.0, 1.0]).expect("static box"),
        )
        .expect("static group")
        .with_partials(
            |_, h| DMatrix::from_row_slice(2, 2, &[h[0], 0.0, h[1], 1.0]),
            |g, _| DMatrix::from_row_slice(2, 2, &[g[0], 0.0, 0.0, g[0]]),
        )
    }

    /// SO(2) through its angle coordinate. The angle is not wrapped, so the
    /// chart is really the universal cover; every identity checked here is
    /// local and unaffected.
    pub fn so2() -> Self {
        Self::new(
            "so2",
            DVector::zeros(1),
            |g, h| g + h,
            |g| -g,
            DomainBox::unbounded(1),
            DomainBox::cube(1, -std::f64::consts::PI, std::f64::consts::PI).expect("static box"),
        )
        .expect("static group")
        .with_partials(|_, _| DMatrix::identity(1, 1), |_, _| DMatrix::identity(1, 1))
    }

    /// Resolve a built-in group: `additive:<l>`, `heisenberg`, `aff1`, `so2`.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "heisenberg" => Ok(Self::heisenberg()),
            "aff1" => Ok(Self::aff1()),
            "so2" => Ok(Self::so2()),
            other => match other.strip_prefix("additive:") {
                Some(l) => {
                    let l: usize = l.parse().map_err(|_| {
                        Error::InvalidArgument(format!("bad additive dimension in '{other}'"))
                    })?;
                    Self::additive(l)
                }
                None => Err(Error::InvalidArgument(format!("unknown group '{other}'"))),
            },
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.identity.len()
    }

    pub fn identity(&self) -> &DVector<f64> {
        &self.identity
    }

    pub fn chart_box(&self) -> &DomainBox {
        &self.chart_box
    }

    pub fn sample_box(&self) -> &DomainBox {
        &self.sample_box
    }

    pub fn fd_step(&self) -> f64 {
        self.fd_step
    }

    pub fn has_analytic_partials(&self) -> bool {
        self.d1.is_some() && self.d2.is_some()
    }

    pub fn in_chart(&self, g: &DVector<f64>) -> bool {
        self.chart_box.contains(g)
    }

    fn ensure_in_chart(&self, g: &DVector<f64>) -> Result<()> {
        if g.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: format!("{} element", self.name),
                expected: self.dim(),
                got: g.len(),
            });
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::non_finite(format!("{} element", self.name), None));
        }
        if !self.in_chart(g) {
            return Err(Error::ChartExit {
                chart: self.name.clone(),
                point: g.iter().copied().collect(),
            });
        }
        Ok(())
    }

    pub fn multiply(&self, g: &DVector<f64>, h: &DVector<f64>) -> Result<DVector<f64>> {
        self.ensure_in_chart(g)?;
        self.ensure_in_chart(h)?;
        let out = (self.multiply)(g, h);
        self.ensure_in_chart(&out)?;
        Ok(out)
    }

    pub fn invert(&self, g: &DVector<f64>) -> Result<DVector<f64>> {
        self.ensure_in_chart(g)?;
        let out = (self.invert)(g);
        self.ensure_in_chart(&out)?;
        Ok(out)
    }

    /// `d pi^I / d g^A` at `(g, h)`.
    pub fn d1_multiply(&self, g: &DVector<f64>, h: &DVector<f64>) -> Result<DMatrix<f64>> {
        match &self.d1 {
            Some(d1) => {
                self.ensure_in_chart(g)?;
                self.ensure_in_chart(h)?;
                Ok(d1(g, h))
            }
            None => self.fd_d1_multiply(g, h),
        }
    }

    /// `d pi^I / d h^A` at `(g, h)`.
    pub fn d2_multiply(&self, g: &DVector<f64>, h: &DVector<f64>) -> Result<DMatrix<f64>> {
        match &self.d2 {
            Some(d2) => {
                self.ensure_in_chart(g)?;
                self.ensure_in_chart(h)?;
                Ok(d2(g, h))
            }
            None => self.fd_d2_multiply(g, h),
        }
    }

    /// Finite-difference first-factor partial, regardless of analytic data.
    pub fn fd_d1_multiply(&self, g: &DVector<f64>, h: &DVector<f64>) -> Result<DMatrix<f64>> {
        try_fd_jacobian(|p| self.multiply(p, h), g, self.fd_step)
    }

    /// Finite-difference second-factor partial, regardless of analytic data.
    pub fn fd_d2_multiply(&self, g: &DVector<f64>, h: &DVector<f64>) -> Result<DMatrix<f64>> {
        try_fd_jacobian(|p| self.multiply(g, p), h, self.fd_step)
    }

    /// Adjoint representation: the derivative at `e` of `d -> g d g^-1`,
    /// obtained from the multiplication partials by the chain rule.
    pub fn adjoint(&self, g: &DVector<f64>) -> Result<DMatrix<f64>> {
        let g_inv = self.invert(g)?;
        Ok(self.d1_multiply(g, &g_inv)? * self.d2_multiply(g, &self.identity)?)
    }

    /// Adjoint by finite differences of the conjugation map.
    pub fn fd_adjoint(&self, g: &DVector<f64>) -> Result<DMatrix<f64>> {
        let g_inv = self.invert(g)?;
        try_fd_jacobian(
            |d| self.multiply(&self.multiply(g, d)?, &g_inv),
            &self.identity,
            self.fd_step,
        )
    }

    /// Draw one element from the sample box.
    pub fn sample(&self, rng: &mut SplitMix64) -> DVector<f64> {
        rng.point_in(&self.sample_box)
    }

    /// Residuals of the group laws and the derivative identities built on
    /// them over `count` sampled triples.
    pub fn check_group_axioms(
        &self,
        count: usize,
        seed: u64,
        tol: ToleranceConfig,
    ) -> Result<GroupAxiomReport> {
        let mut rng = SplitMix64::new(seed);
        let l = self.dim();
        let eye = DMatrix::<f64>::identity(l, l);
        let e = self.identity.clone();

        let mut identity_law = ConditionCheck::new("identity_law", tol);
        let mut inverse_law = ConditionCheck::new("inverse_law", tol);
        let mut associativity = ConditionCheck::new("associativity", tol);
        let mut unit_partials = ConditionCheck::new("unit_partials", tol);
        let mut assoc_derivative = ConditionCheck::new("assoc_derivative_identity", tol);
        let mut partials_vs_fd = ConditionCheck::new("partials_vs_fd", tol);
        let mut adjoint_rep = ConditionCheck::new("adjoint_representation", tol);

        for _ in 0..count {
            let g = self.sample(&mut rng);
            let h = self.sample(&mut rng);
            let k = self.sample(&mut rng);
            let pt: Vec<f64> = numerics::concat(&[&g, &h, &k]).iter().copied().collect();

            identity_law.record_result(
                (|| {
                    let left = self.multiply(&e, &g)? - &g;
                    let right = self.multiply(&g, &e)? - &g;
                    Ok((
                        numerics::max_abs_vec(&left).max(numerics::max_abs_vec(&right)),
                        numerics::max_abs_vec(&g),
                    ))
                })(),
                &pt,
            )?;

            inverse_law.record_result(
                (|| {
                    let g_inv = self.invert(&g)?;
                    let r1 = self.multiply(&g, &g_inv)? - &e;
                    let r2 = self.multiply(&g_inv, &g)? - &e;
                    Ok((
                        numerics::max_abs_vec(&r1).max(numerics::max_abs_vec(&r2)),
                        numerics::max_abs_vec(&e),
                    ))
                })(),
                &pt,
            )?;

            associativity.record_result(
                (|| {
                    let left = self.multiply(&self.multiply(&g, &h)?, &k)?;
                    let right = self.multiply(&g, &self.multiply(&h, &k)?)?;
                    Ok((numerics::max_abs_vec(&(&left - &right)), numerics::max_abs_vec(&left)))
                })(),
                &pt,
            )?;

            unit_partials.record_result(
                (|| {
                    let a = self.d2_multiply(&e, &h)? - &eye;
                    let b = self.d1_multiply(&g, &e)? - &eye;
                    Ok((numerics::max_abs(&a).max(numerics::max_abs(&b)), 1.0))
                })(),
                &pt,
            )?;

            // d1 pi(e, gh) = d1 pi(g, h) . d1 pi(e, g)
            assoc_derivative.record_result(
                (|| {
                    let gh = self.multiply(&g, &h)?;
                    let left = self.d1_multiply(&e, &gh)?;
                    let right = self.d1_multiply(&g, &h)? * self.d1_multiply(&e, &g)?;
                    Ok((numerics::max_abs(&(&left - &right)), numerics::max_abs(&left)))
                })(),
                &pt,
            )?;

            partials_vs_fd.record_result(
                (|| {
                    let r1 = self.d1_multiply(&g, &h)? - self.fd_d1_multiply(&g, &h)?;
                    let r2 = self.d2_multiply(&g, &h)? - self.fd_d2_multiply(&g, &h)?;
                    Ok((numerics::max_abs(&r1).max(numerics::max_abs(&r2)), 1.0))
                })(),
                &pt,
            )?;

            adjoint_rep.record_result(
                (|| {
                    let gh = self.multiply(&g, &h)?;
                    let left = self.adjoint(&gh)?;
                    let right = self.adjoint(&g)? * self.adjoint(&h)?;
                    Ok((numerics::max_abs(&(&left - &right)), numerics::max_abs(&left)))
                })(),
                &pt,
            )?;
        }

        Ok(GroupAxiomReport {
            group: self.name.clone(),
            identity_law: identity_law.finish(),
            inverse_law: inverse_law.finish(),
            associativity: associativity.finish(),
            unit_partials: unit_partials.finish(),
            assoc_derivative_identity: assoc_derivative.finish(),
            partials_vs_fd: partials_vs_fd.finish(),
            adjoint_representation: adjoint_rep.finish(),
        })
    }
}

/// Group-law residuals for one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAxiomReport {
    pub group: String,
    pub identity_law: ConditionReport,
    pub inverse_law: ConditionReport,
    pub associativity: ConditionReport,
    pub unit_partials: ConditionReport,
    pub assoc_derivative_identity: ConditionReport,
    pub partials_vs_fd: ConditionReport,
    pub adjoint_representation: ConditionReport,
}

impl GroupAxiomReport {
    pub fn conditions(&self) -> [&ConditionReport; 7] {
        [
            &self.identity_law,
            &self.inverse_law,
            &self.associativity,
            &self.unit_partials,
            &self.assoc_derivative_identity,
            &self.partials_vs_fd,
            &self.adjoint_representation,
        ]
    }

    pub fn passed(&self) -> bool {
        self.conditions().iter().all(|c| c.passed)
    }

    pub fn into_validation_report(self) -> ValidationReport {
        let name = format!("group_axioms[{}]", self.group);
        ValidationReport::new(name, self.conditions().into_iter().cloned().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::max_abs;

    fn builtins() -> Vec<LieGroupModel> {
        vec![
            LieGroupModel::additive(3).unwrap(),
            LieGroupModel::heisenberg(),
            LieGroupModel::aff1(),
            LieGroupModel::so2(),
        ]
    }

    #[test]
    fn additive_multiply() {
        let g = LieGroupModel::additive(2).unwrap();
        assert_eq!(g.multiply(&vec(&[1.0, 2.0]), &vec(&[3.0, 4.0])).unwrap(), vec(&[4.0, 6.0]));
        assert_eq!(g.invert(&vec(&[3.0, -1.0])).unwrap(), vec(&[-3.0, 1.0]));
    }

    #[test]
    fn heisenberg_multiply_and_inverse() {
        let g = LieGroupModel::heisenberg();
        let p = g.multiply(&vec(&[1.0, 0.0, 0.0]), &vec(&[0.0, 1.0, 0.0])).unwrap();
        assert_eq!(p, vec(&[1.0, 1.0, 1.0]));
        let a = vec(&[1.0, 2.0, 3.0]);
        let inv = g.invert(&a).unwrap();
        assert_eq!(inv, vec(&[-1.0, -2.0, -1.0]));
        assert_eq!(g.multiply(&inv, &a).unwrap(), DVector::zeros(3));
    }

    #[test]
    fn identity_is_fixed_everywhere() {
        for g in builtins() {
            let e = g.identity().clone();
            assert_eq!(g.multiply(&e, &e).unwrap(), e, "{}", g.name());
            assert_eq!(g.invert(&e).unwrap(), e, "{}", g.name());
            assert!(max_abs(&(g.adjoint(&e).unwrap() - DMatrix::identity(g.dim(), g.dim()))) < 1e-15);
        }
    }

    #[test]
    fn aff1_chart_exit() {
        let g = LieGroupModel::aff1();
        let err = g.multiply(&vec(&[-1.0, 0.0]), &vec(&[1.0, 0.0])).unwrap_err();
        assert!(err.is_chart_exit());
        assert!(g.invert(&vec(&[0.0, 1.0])).unwrap_err().is_chart_exit());
    }

    #[test]
    fn additive_partials_are_identity() {
        let g = LieGroupModel::additive(3).unwrap();
        let (a, b) = (vec(&[0.1, 0.2, 0.3]), vec(&[-1.0, 0.0, 2.0]));
        assert_eq!(g.d1_multiply(&a, &b).unwrap(), DMatrix::identity(3, 3));
        assert_eq!(g.d2_multiply(&a, &b).unwrap(), DMatrix::identity(3, 3));
    }

    #[test]
    fn heisenberg_d1_regression() {
        // pinned from the finite-difference oracle
        let g = LieGroupModel::heisenberg();
        let (a, b) = (vec(&[1.0, 0.0, 0.0]), vec(&[0.0, 1.0, 0.0]));
        let expected = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        assert!(max_abs(&(g.fd_d1_multiply(&a, &b).unwrap() - &expected)) < 1e-9);
        assert_eq!(g.d1_multiply(&a, &b).unwrap(), expected);
    }

    #[test]
    fn heisenberg_partials_match_fd_at_100_pairs() {
        let g = LieGroupModel::heisenberg();
        let mut rng = SplitMix64::new(11);
        for _ in 0..100 {
            let (a, b) = (g.sample(&mut rng), g.sample(&mut rng));
            let r1 = g.d1_multiply(&a, &b).unwrap() - g.fd_d1_multiply(&a, &b).unwrap();
            let r2 = g.d2_multiply(&a, &b).unwrap() - g.fd_d2_multiply(&a, &b).unwrap();
            assert!(max_abs(&r1) < 1e-8 && max_abs(&r2) < 1e-8);
        }
    }

    #[test]
    fn adjoint_regressions() {
        let h = LieGroupModel::heisenberg();
        let ad = h.fd_adjoint(&vec(&[1.0, 0.0, 0.0])).unwrap();
        let pinned = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0]);
        assert!(max_abs(&(&ad - &pinned)) < 1e-9);
        assert!(max_abs(&(h.adjoint(&vec(&[1.0, 0.0, 0.0])).unwrap() - &pinned)) < 1e-12);

        let a = LieGroupModel::aff1();
        let g = vec(&[2.0, 0.5]);
        let expected = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -0.5, 2.0]);
        assert!(max_abs(&(a.adjoint(&g).unwrap() - &expected)) < 1e-12);
        assert!(max_abs(&(a.fd_adjoint(&g).unwrap() - &expected)) < 1e-8);

        let add = LieGroupModel::additive(2).unwrap();
        assert_eq!(add.adjoint(&vec(&[3.0, -4.0])).unwrap(), DMatrix::identity(2, 2));
    }

    #[test]
    fn builtin_axioms_pass() {
        for g in builtins() {
            let r = g.check_group_axioms(200, 3, ToleranceConfig::default().with_abs(1e-8)).unwrap();
            for c in r.conditions() {
                assert!(c.passed, "{} {}: {:?}", g.name(), c.name, c.stats);
            }
            let fd = g.clone().without_partials();
            let r = fd.check_group_axioms(50, 3, ToleranceConfig::default().with_abs(1e-6)).unwrap();
            assert!(r.passed(), "{} fd path", fd.name());
        }
    }

    #[test]
    fn corrupted_multiply_fails_associativity() {
        let eps = 1e-2;
        let bad = LieGroupModel::new(
            "corrupt",
            DVector::zeros(2),
            move |g, h| g + h + eps * g.component_mul(g).component_mul(h),
            |g| -g,
            DomainBox::unbounded(2),
            DomainBox::cube(2, -1.0, 1.0).unwrap(),
        )
        .unwrap();
        let r = bad.check_group_axioms(100, 5, ToleranceConfig::default()).unwrap();
        assert!(!r.associativity.passed);
        assert!(r.associativity.stats.max_abs > 1e-6);
        assert!(!r.passed());
    }

    #[test]
    fn from_name_resolves_builtins() {
        assert_eq!(LieGroupModel::from_name("additive:4").unwrap().dim(), 4);
        assert_eq!(LieGroupModel::from_name("heisenberg").unwrap().dim(), 3);
        assert_eq!(LieGroupModel::from_name("aff1").unwrap().dim(), 2);
        assert_eq!(LieGroupModel::from_name("so2").unwrap().dim(), 1);
        assert!(LieGroupModel::from_name("additive:x").is_err());
        assert!(LieGroupModel::from_name("su2").is_err());
    }
}
