//! Turns scenario specs into library objects.

use std::sync::Arc;

use fibconn::atlas::{BaseChange, Map2, FiberAutomorphismField, GpbChange, SigmaChange};
use fibconn::genconn::{build_from_boundary, BoundaryData, CoeffFn, GenConnectionField};
use fibconn::lgfb::LgfbConnectionField;
use fibconn::liegroup::{Group, LieGroupModel};
use fibconn::numerics::{Sampling, ToleranceConfig};
use fibconn::transport::BaseCurve;
use fibconn::DomainBox;
use nalgebra::{DMatrix, DVector};

use crate::error::ConfigError;
use crate::scenario::{
    BaseSpec, ChangeSpec, ConnectionSpec, EtaSpec, FiberSpec, PhiSpec, Rows, Scenario, SigmaSpec,
};

/// Everything a scenario refers to, resolved and dimension-checked.
#[derive(Debug, Clone)]
pub struct Assembled {
    pub group: Group,
    pub base_box: DomainBox,
    pub sigma_box: DomainBox,
    pub eta: Option<LgfbConnectionField>,
    pub connection: Option<GenConnectionField>,
    pub change: Option<GpbChange>,
    pub curve: Option<BaseCurve>,
    pub tolerances: ToleranceConfig,
}

pub fn matrix(rows: &Rows, nrows: usize, ncols: usize, key: &str) -> Result<DMatrix<f64>, ConfigError> {
    let shape_ok = rows.len() == nrows && rows.iter().all(|r| r.len() == ncols);
    if !shape_ok {
        let got_cols = rows.first().map_or(0, |r| r.len());
        return Err(ConfigError::new(
            key,
            format!("expected a {nrows}x{ncols} matrix, got {}x{got_cols}", rows.len()),
        ));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn vector(v: &[f64], len: usize, key: &str) -> Result<DVector<f64>, ConfigError> {
    if v.len() != len {
        return Err(ConfigError::new(key, format!("expected {len} entries, got {}", v.len())));
    }
    Ok(DVector::from_column_slice(v))
}

fn require_additive(group: &Group, key: &str) -> Result<(), ConfigError> {
    if group.name().starts_with("additive") {
        Ok(())
    } else {
        Err(ConfigError::new(key, format!("needs an additive group, scenario uses {}", group.name())))
    }
}

type NField = Arc<dyn Fn(&DVector<f64>) -> Vec<DMatrix<f64>> + Send + Sync>;

fn linear_n(matrices: &[Rows], coupling: &Option<Vec<Rows>>, l: usize, m: usize, key: &str) -> Result<NField, ConfigError> {
    if matrices.len() != m {
        return Err(ConfigError::new(format!("{key}.matrices"), format!("expected {m} matrices, got {}", matrices.len())));
    }
    let base: Vec<DMatrix<f64>> = matrices
        .iter()
        .enumerate()
        .map(|(mu, r)| matrix(r, l, l, &format!("{key}.matrices[{mu}]")))
        .collect::<Result<_, _>>()?;
    let slope: Vec<DMatrix<f64>> = match coupling {
        None => vec![DMatrix::zeros(l, l); m],
        Some(c) => {
            if c.len() != m {
                return Err(ConfigError::new(format!("{key}.coupling"), format!("expected {m} matrices, got {}", c.len())));
            }
            c.iter()
                .enumerate()
                .map(|(mu, r)| matrix(r, l, l, &format!("{key}.coupling[{mu}]")))
                .collect::<Result<_, _>>()?
        }
    };
    Ok(Arc::new(move |x| {
        let s = x.sum();
        base.iter().zip(&slope).map(|(b, d)| b + d * s).collect()
    }))
}

pub fn build_eta(spec: &EtaSpec, group: &Group, base_box: &DomainBox) -> Result<LgfbConnectionField, ConfigError> {
    let (l, m) = (group.dim(), base_box.dim());
    let (grp, bx) = (group.clone(), base_box.clone());
    Ok(match spec {
        EtaSpec::Trivial => LgfbConnectionField::trivial(grp, bx),
        EtaSpec::Linear { matrices, coupling } => {
            require_additive(group, "eta.kind")?;
            let n = linear_n(matrices, coupling, l, m, "eta")?;
            LgfbConnectionField::linear_connection(grp, bx, move |x| n(x)).map_err(ConfigError::at("eta"))?
        }
        EtaSpec::InnerDerivation { xi, slope } => {
            let xi = matrix(xi, l, m, "eta.xi")?;
            let slope = match slope {
                Some(s) => matrix(s, l, m, "eta.slope")?,
                None => DMatrix::zeros(l, m),
            };
            LgfbConnectionField::inner_derivation(grp, bx, move |x| &xi + &slope * x.sum())
        }
        EtaSpec::HeisenbergDerivation { coeffs } => {
            let k = matrix(coeffs, m, 6, "eta.coeffs")?;
            LgfbConnectionField::heisenberg_derivation(grp, bx, move |_| k.clone()).map_err(ConfigError::at("eta.kind"))?
        }
        EtaSpec::Aff1Derivation { coeffs } => {
            let k = matrix(coeffs, m, 2, "eta.coeffs")?;
            LgfbConnectionField::aff1_derivation(grp, bx, move |_| k.clone()).map_err(ConfigError::at("eta.kind"))?
        }
        EtaSpec::Square => LgfbConnectionField::new("square", grp, bx, move |_, v| {
            DMatrix::from_fn(l, m, |i, _| v[i] * v[i])
        }),
        EtaSpec::Scaled { factor, of } => {
            let inner = build_eta(of, group, base_box)?;
            let f = *factor;
            let name = format!("{}x{}", f, inner.name());
            LgfbConnectionField::from_fallible(name, grp, bx, Arc::new(move |x, g| Ok(inner.eval(x, g)? * f)))
        }
    })
}

fn build_connection(
    spec: &ConnectionSpec,
    scenario: &Scenario,
    a: &Assembled,
) -> Result<GenConnectionField, ConfigError> {
    let (l, m) = (a.group.dim(), a.base_box.dim());
    let need_eta = || {
        a.eta
            .clone()
            .ok_or_else(|| ConfigError::new("eta", "this connection kind needs an eta field"))
    };
    let need_no_sigma = || {
        if a.sigma_box.dim() == 0 {
            Ok(())
        } else {
            Err(ConfigError::new("dims.n", "this connection kind needs n = l"))
        }
    };
    Ok(match spec {
        ConnectionSpec::FromEta => GenConnectionField::from_eta(&need_eta()?, a.sigma_box.clone()),
        ConnectionSpec::FromBoundary { seed } => {
            let eta = need_eta()?;
            let b = BoundaryData::random_smooth(l, m, a.sigma_box.clone(), *seed);
            let validation = Sampling::new(scenario.sampling.count.clamp(1, 200), scenario.sampling.seed);
            build_from_boundary(&b, &eta, validation, a.tolerances).map_err(ConfigError::at("connection"))?
        }
        ConnectionSpec::Affine { sigma_field, matrices, coupling } => {
            need_no_sigma()?;
            require_additive(&a.group, "connection.kind")?;
            let n = linear_n(matrices, coupling, l, m, "connection")?;
            let s = matrix(sigma_field, l, m, "connection.sigma_field")?;
            GenConnectionField::affine_connection(a.group.clone(), a.base_box.clone(), move |_| s.clone(), move |x| n(x))
                .map_err(ConfigError::at("connection"))?
        }
        ConnectionSpec::StandardFromIdentity { boundary } => {
            need_no_sigma()?;
            let b = matrix(boundary, l, m, "connection.boundary")?;
            let grp = a.group.clone();
            let a_mu: CoeffFn = Arc::new(move |_, _, g| Ok(grp.d1_multiply(grp.identity(), g)? * &b));
            let a_theta: CoeffFn = Arc::new(move |_, _, _| Ok(DMatrix::zeros(l, 0)));
            GenConnectionField::from_fallible(
                "standard-from-identity",
                a.group.clone(),
                a.base_box.clone(),
                DomainBox::empty(),
                a_mu,
                a_theta,
            )
        }
        ConnectionSpec::FiberDependent => {
            need_no_sigma()?;
            GenConnectionField::standard("fiber-dependent", a.group.clone(), a.base_box.clone(), move |_, g| {
                DMatrix::from_fn(l, m, |i, _| g[i])
            })
        }
    })
}

fn build_fiber(spec: &FiberSpec, group: &Group, m: usize, key: &str) -> Result<FiberAutomorphismField, ConfigError> {
    let l = group.dim();
    let grp = group.clone();
    Ok(match spec {
        FiberSpec::Identity => FiberAutomorphismField::identity(grp, m),
        FiberSpec::Rotation2 { rate } => {
            require_additive(group, key)?;
            if l != 2 {
                return Err(ConfigError::new(key, "rotation2 needs the additive plane"));
            }
            FiberAutomorphismField::rotation2(grp, m, *rate)
        }
        FiberSpec::Linear { matrix: mat, slope } => {
            require_additive(group, key)?;
            let a = matrix(mat, l, l, &format!("{key}.matrix"))?;
            let s = match slope {
                Some(s) => matrix(s, l, l, &format!("{key}.slope"))?,
                None => DMatrix::zeros(l, l),
            };
            FiberAutomorphismField::linear(grp, m, move |x| &a + &s * x.sum())
        }
        FiberSpec::Inner { offset, matrix: mat } => {
            let k0 = vector(offset, l, &format!("{key}.offset"))?;
            let k1 = matrix(mat, l, m, &format!("{key}.matrix"))?;
            FiberAutomorphismField::inner(grp, m, move |x| &k0 + &k1 * x)
        }
        FiberSpec::HeisenbergScaling { alpha, beta } => {
            if !group.name().starts_with("heisenberg") {
                return Err(ConfigError::new(key, "heisenberg-scaling needs the heisenberg group"));
            }
            let a = vector(alpha, m, &format!("{key}.alpha"))?;
            let b = vector(beta, m, &format!("{key}.beta"))?;
            FiberAutomorphismField::heisenberg_scaling(grp, a, b)
        }
        FiberSpec::Compose { parts } => {
            let mut it = parts.iter().enumerate();
            let (_, first) = it
                .next()
                .ok_or_else(|| ConfigError::new(format!("{key}.parts"), "compose needs at least one part"))?;
            let mut acc = build_fiber(first, group, m, &format!("{key}.parts[0]"))?;
            for (i, p) in it {
                let next = build_fiber(p, group, m, &format!("{key}.parts[{i}]"))?;
                acc = acc.then(&next).map_err(ConfigError::at(format!("{key}.parts[{i}]")))?;
            }
            acc
        }
        FiberSpec::Bent { c } => {
            require_additive(group, key)?;
            let c = *c;
            if c == 0.0 {
                return Err(ConfigError::new(format!("{key}.c"), "bent change needs c != 0"));
            }
            let apply: Map2 = Arc::new(move |_, v| Ok(v.map(|a| a + c * a * a)));
            let inverse: Map2 = Arc::new(move |_, w| {
                if w.iter().any(|&b| 1.0 + 4.0 * c * b < 0.0) {
                    return Err(fibconn::Error::ChartExit { chart: "bent".into(), point: w.iter().copied().collect() });
                }
                Ok(w.map(|b| (-1.0 + (1.0 + 4.0 * c * b).sqrt()) / (2.0 * c)))
            });
            FiberAutomorphismField::from_fallible(grp, m, apply, inverse)
        }
    })
}

fn build_change(spec: &ChangeSpec, a: &Assembled) -> Result<GpbChange, ConfigError> {
    let (l, m, s) = (a.group.dim(), a.base_box.dim(), a.sigma_box.dim());
    let base = match &spec.base {
        BaseSpec::Identity => BaseChange::identity(m),
        BaseSpec::Polynomial { c } => BaseChange::polynomial(m, *c),
        BaseSpec::Affine { matrix: mat, offset } => BaseChange::affine(
            matrix(mat, m, m, "change.base.matrix")?,
            vector(offset, m, "change.base.offset")?,
        )
        .map_err(ConfigError::at("change.base.matrix"))?,
    };
    let sigma = match &spec.sigma {
        SigmaSpec::Identity => SigmaChange::identity(m, s),
        SigmaSpec::ScaleShift { a: sa, b: sb } => {
            if m == 0 {
                return Err(ConfigError::new("change.sigma", "scale-shift needs a base coordinate"));
            }
            SigmaChange::scale_shift(m, s, *sa, *sb)
        }
    };
    let fiber = build_fiber(&spec.fiber, &a.group, m, "change.fiber")?;
    let e = a.group.identity().clone();
    let change = match &spec.phi {
        PhiSpec::Identity => GpbChange::new(base, sigma, move |_, _| e.clone(), fiber),
        PhiSpec::Polynomial { linear, quadratic } => {
            let lin = matrix(linear, l, m + s, "change.phi.linear")?;
            let quad = match quadratic {
                Some(q) => matrix(q, l, m + s, "change.phi.quadratic")?,
                None => DMatrix::zeros(l, m + s),
            };
            GpbChange::new(
                base,
                sigma,
                move |x, sg| {
                    let z = fibconn::numerics::concat(&[x, sg]);
                    &e + &lin * &z + &quad * z.map(|v| v * v)
                },
                fiber,
            )
        }
    };
    change.map_err(ConfigError::at("change"))
}

/// Resolve every name in `s` and check dimensions.
pub fn assemble(s: &Scenario) -> Result<Assembled, ConfigError> {
    let group = LieGroupModel::from_name(&s.group)
        .map_err(ConfigError::at("group"))?
        .into_shared();
    let l = group.dim();
    if s.dims.l != l {
        return Err(ConfigError::new("dims.l", format!("group {} has dimension {l}, dims.l is {}", group.name(), s.dims.l)));
    }
    if s.dims.n < s.dims.l {
        return Err(ConfigError::new("dims.n", format!("n = {} must be at least l = {}", s.dims.n, s.dims.l)));
    }
    let base_box = s.base_box.to_box("base_box")?;
    if base_box.dim() != s.dims.m {
        return Err(ConfigError::new("base_box", format!("box has dimension {}, dims.m is {}", base_box.dim(), s.dims.m)));
    }
    if !base_box.is_finite() {
        return Err(ConfigError::new("base_box", "sampling boxes must be finite"));
    }
    let sigma_dim = s.dims.n - s.dims.l;
    let sigma_box = match &s.sigma_box {
        Some(b) => b.to_box("sigma_box")?,
        None if sigma_dim == 0 => DomainBox::empty(),
        None => return Err(ConfigError::new("sigma_box", format!("n - l = {sigma_dim} needs a sigma box"))),
    };
    if sigma_box.dim() != sigma_dim || !sigma_box.is_finite() {
        return Err(ConfigError::new("sigma_box", format!("expected a finite box of dimension {sigma_dim}")));
    }
    let tolerances = s.tolerances.resolve();
    tolerances.validate().map_err(ConfigError::at("tolerances"))?;
    if s.sampling.count == 0 {
        return Err(ConfigError::new("sampling.count", "at least one sample is needed"));
    }
    if s.transport_steps < 4 {
        return Err(ConfigError::new("transport_steps", "at least 4 steps are needed"));
    }

    let mut a = Assembled {
        group: group.clone(),
        base_box: base_box.clone(),
        sigma_box,
        eta: None,
        connection: None,
        change: None,
        curve: None,
        tolerances,
    };
    if let Some(spec) = &s.eta {
        a.eta = Some(build_eta(spec, &group, &base_box)?);
    }
    if let Some(spec) = &s.connection {
        a.connection = Some(build_connection(spec, s, &a)?);
    }
    if let Some(spec) = &s.change {
        a.change = Some(build_change(spec, &a)?);
    }
    if let Some(spec) = &s.curve {
        if spec.base.len() != s.dims.m {
            return Err(ConfigError::new("curve.base", format!("expected {} coordinates, got {}", s.dims.m, spec.base.len())));
        }
        if !spec.sigma.is_empty() && spec.sigma.len() != sigma_dim {
            return Err(ConfigError::new("curve.sigma", format!("expected {sigma_dim} coordinates, got {}", spec.sigma.len())));
        }
        a.curve = Some(BaseCurve::polynomial(spec));
    }
    Ok(a)
}
