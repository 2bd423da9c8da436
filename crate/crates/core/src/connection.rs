//! Chart-level connection data and coefficient fields along paths.
//!
//! A [`ChartField`] assigns a matrix A_i(x) to every chart direction i. Along a
//! path it is pulled back as Σ_i A_i(γ(s)) dγ^i/ds, which makes the resulting
//! coefficients transform covariantly under reparameterization.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};
use crate::path::{Interval, Path, Reparameterization};

/// Matrix-valued one-form on a chart of ℝ^m.
#[derive(Clone, Debug)]
pub enum ChartField {
    /// A_i = 0.
    Zero { fibre_dim: usize },
    /// Constant components; directions beyond `components.len()` carry zero.
    Constant { components: Vec<CMatrix> },
    /// 1×1 abelian potential A = i(−B y/2, B x/2) of a uniform field strength B in the plane.
    U1Uniform { field: f64 },
    /// Christoffel symbols of the round unit sphere in (θ, φ): (A_k)^i_j = Γ^i_{jk}.
    SphereChristoffel,
}

impl ChartField {
    pub fn constant(components: Vec<CMatrix>) -> Result<Self> {
        let n = components
            .first()
            .map(|m| m.nrows())
            .ok_or_else(|| Error::Descriptor("constant field needs at least one component".into()))?;
        if n == 0 || components.iter().any(|m| m.shape() != (n, n)) {
            return Err(Error::Descriptor("constant components must be equal-size square matrices".into()));
        }
        if components.iter().any(|m| !crate::linalg::is_finite(m)) {
            return Err(Error::Descriptor("constant components must be finite".into()));
        }
        Ok(ChartField::Constant { components })
    }

    pub fn fibre_dim(&self) -> usize {
        match self {
            ChartField::Zero { fibre_dim } => *fibre_dim,
            ChartField::Constant { components } => components[0].nrows(),
            ChartField::U1Uniform { .. } => 1,
            ChartField::SphereChristoffel => 2,
        }
    }

    /// Minimum chart dimension the field needs, if any.
    pub fn chart_dim(&self) -> Option<usize> {
        match self {
            ChartField::Zero { .. } => None,
            ChartField::Constant { .. } => None,
            ChartField::U1Uniform { .. } | ChartField::SphereChristoffel => Some(2),
        }
    }

    /// A_i(x).
    pub fn component(&self, x: &[f64], i: usize) -> Result<CMatrix> {
        let n = self.fibre_dim();
        if let Some(m) = self.chart_dim() {
            if x.len() < m {
                return Err(Error::Dimension {
                    expected: m,
                    got: x.len(),
                });
            }
        }
        let mut out = CMatrix::zeros(n, n);
        match self {
            ChartField::Zero { .. } => {}
            ChartField::Constant { components } => {
                if let Some(m) = components.get(i) {
                    out.copy_from(m);
                }
            }
            ChartField::U1Uniform { field } => match i {
                0 => out[(0, 0)] = c(0.0, -0.5 * field * x[1]),
                1 => out[(0, 0)] = c(0.0, 0.5 * field * x[0]),
                _ => {}
            },
            ChartField::SphereChristoffel => {
                let (sn, cs) = x[0].sin_cos();
                if sn.abs() < 1e-12 {
                    return Err(Error::Domain(format!("sphere chart is singular at theta = {}", x[0])));
                }
                match i {
                    0 => out[(1, 1)] = c(cs / sn, 0.0),
                    1 => {
                        out[(0, 1)] = c(-sn * cs, 0.0);
                        out[(1, 0)] = c(cs / sn, 0.0);
                    }
                    _ => {}
                }
            }
        }
        Ok(out)
    }

    /// Σ_i A_i(x) v^i.
    pub fn contract(&self, x: &[f64], v: &[f64]) -> Result<CMatrix> {
        if x.len() != v.len() {
            return Err(Error::Dimension {
                expected: x.len(),
                got: v.len(),
            });
        }
        if let ChartField::Constant { components } = self {
            if components.len() > x.len() {
                return Err(Error::Dimension {
                    expected: components.len(),
                    got: x.len(),
                });
            }
        }
        let n = self.fibre_dim();
        let mut out = CMatrix::zeros(n, n);
        for (i, &vi) in v.iter().enumerate() {
            if vi != 0.0 {
                out += self.component(x, i)? * Complex64::new(vi, 0.0);
            }
        }
        Ok(out)
    }
}

/// How the chart one-form becomes transport coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pullback {
    /// Γ_γ(s) = A(γ(s))·γ′(s).
    Direct,
    /// Γ_γ(s) = −A(γ(s))·γ′(s).
    Negated,
    /// Γ_γ(s) = −A(γ(s))ᵀ·γ′(s).
    NegatedTranspose,
}

/// A linear connection given by chart coefficients.
#[derive(Clone, Debug)]
pub struct LinearConnection {
    field: Arc<ChartField>,
    pullback: Pullback,
}

impl LinearConnection {
    pub fn new(field: ChartField) -> Self {
        LinearConnection {
            field: Arc::new(field),
            pullback: Pullback::Direct,
        }
    }

    pub fn with_pullback(field: ChartField, pullback: Pullback) -> Self {
        LinearConnection {
            field: Arc::new(field),
            pullback,
        }
    }

    pub fn field(&self) -> &ChartField {
        &self.field
    }

    pub fn fibre_dim(&self) -> usize {
        self.field.fibre_dim()
    }

    pub fn pullback(&self) -> Pullback {
        self.pullback
    }

    /// Γ_γ(s).
    pub fn coefficients(&self, path: &Path, s: f64) -> Result<CMatrix> {
        let (x, v) = path.eval_with_velocity(s)?;
        let a = self.field.contract(&x, &v)?;
        Ok(match self.pullback {
            Pullback::Direct => a,
            Pullback::Negated => -a,
            Pullback::NegatedTranspose => -a.transpose(),
        })
    }

    pub fn along(&self, path: &Path) -> PulledBack {
        PulledBack {
            connection: self.clone(),
            path: path.clone(),
        }
    }
}

/// Matrix-valued coefficient function s ↦ Γ(s) on a parameter interval.
pub trait CoefficientField: Send + Sync {
    fn fibre_dim(&self) -> usize;

    fn domain(&self) -> Interval;

    /// Interior parameters where Γ may jump.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    fn at(&self, s: f64) -> Result<CMatrix>;
}

impl<F: CoefficientField + ?Sized> CoefficientField for &F {
    fn fibre_dim(&self) -> usize {
        (**self).fibre_dim()
    }
    fn domain(&self) -> Interval {
        (**self).domain()
    }
    fn breakpoints(&self) -> Vec<f64> {
        (**self).breakpoints()
    }
    fn at(&self, s: f64) -> Result<CMatrix> {
        (**self).at(s)
    }
}

impl<F: CoefficientField + ?Sized> CoefficientField for Arc<F> {
    fn fibre_dim(&self) -> usize {
        (**self).fibre_dim()
    }
    fn domain(&self) -> Interval {
        (**self).domain()
    }
    fn breakpoints(&self) -> Vec<f64> {
        (**self).breakpoints()
    }
    fn at(&self, s: f64) -> Result<CMatrix> {
        (**self).at(s)
    }
}

/// Coefficients of a [`LinearConnection`] along a specific path.
#[derive(Clone, Debug)]
pub struct PulledBack {
    connection: LinearConnection,
    path: Path,
}

impl PulledBack {
    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl CoefficientField for PulledBack {
    fn fibre_dim(&self) -> usize {
        self.connection.fibre_dim()
    }

    fn domain(&self) -> Interval {
        self.path.domain()
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.path.breakpoints()
    }

    fn at(&self, s: f64) -> Result<CMatrix> {
        self.connection.coefficients(&self.path, s)
    }
}

/// s ↦ τ′(s)·Γ(τ(s)), the coefficients of γ∘τ.
#[derive(Clone, Debug)]
pub struct Reparameterized<F> {
    inner: F,
    tau: Reparameterization,
}

impl<F: CoefficientField> Reparameterized<F> {
    pub fn new(inner: F, tau: Reparameterization) -> Result<Self> {
        if !tau.target().approx_eq(&inner.domain()) {
            return Err(Error::Domain(format!(
                "reparameterization target {} differs from coefficient domain {}",
                tau.target(),
                inner.domain()
            )));
        }
        Ok(Reparameterized { inner, tau })
    }
}

impl<F: CoefficientField> CoefficientField for Reparameterized<F> {
    fn fibre_dim(&self) -> usize {
        self.inner.fibre_dim()
    }

    fn domain(&self) -> Interval {
        self.tau.source()
    }

    fn breakpoints(&self) -> Vec<f64> {
        let dom = self.domain();
        let mut out: Vec<f64> = self
            .inner
            .breakpoints()
            .into_iter()
            .filter_map(|u| self.tau.inverse(u).ok())
            .filter(|&s| s > dom.a() && s < dom.b())
            .collect();
        out.sort_by(|a, b| a.total_cmp(b));
        out
    }

    fn at(&self, s: f64) -> Result<CMatrix> {
        let u = self.tau.map(s)?;
        let d = self.tau.derivative(s)?;
        Ok(self.inner.at(u)? * Complex64::new(d, 0.0))
    }
}

type CoefficientFn = dyn Fn(f64) -> Result<CMatrix> + Send + Sync;

/// Coefficients given directly as a function of the parameter.
#[derive(Clone)]
pub struct FnField {
    fibre_dim: usize,
    domain: Interval,
    breakpoints: Vec<f64>,
    f: Arc<CoefficientFn>,
}

impl FnField {
    pub fn new(
        fibre_dim: usize,
        domain: Interval,
        f: impl Fn(f64) -> Result<CMatrix> + Send + Sync + 'static,
    ) -> Self {
        FnField {
            fibre_dim,
            domain,
            breakpoints: Vec::new(),
            f: Arc::new(f),
        }
    }

    pub fn with_breakpoints(mut self, breakpoints: Vec<f64>) -> Self {
        self.breakpoints = breakpoints;
        self
    }
}

impl std::fmt::Debug for FnField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnField")
            .field("fibre_dim", &self.fibre_dim)
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

impl CoefficientField for FnField {
    fn fibre_dim(&self) -> usize {
        self.fibre_dim
    }

    fn domain(&self) -> Interval {
        self.domain
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.breakpoints.clone()
    }

    fn at(&self, s: f64) -> Result<CMatrix> {
        let s = self.domain.clamp(s)?;
        (self.f)(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{anti_hermitian_defect, dist, real_rows};
    use crate::path::Orientation;

    #[test]
    fn u1_potential_is_anti_hermitian_and_linear() {
        let f = ChartField::U1Uniform { field: 2.0 };
        let m = f.contract(&[1.0, 3.0], &[0.5, -1.0]).unwrap();
        // i(−B y/2 · vx + B x/2 · vy) = i(−3·0.5 − 1) = −2.5 i
        assert!((m[(0, 0)] - c(0.0, -2.5)).norm() < 1e-15);
        assert!(anti_hermitian_defect(&m) < 1e-15);
    }

    #[test]
    fn sphere_christoffel_on_latitude() {
        let theta: f64 = 1.0;
        let f = ChartField::SphereChristoffel;
        let m = f.contract(&[theta, 0.3], &[0.0, 1.0]).unwrap();
        let expected = real_rows(&[&[0.0, -theta.sin() * theta.cos()], &[theta.cos() / theta.sin(), 0.0]]);
        assert!(dist(&m, &expected) < 1e-15);
        assert!(f.contract(&[0.0, 0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn pullback_signs() {
        let g = real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let field = ChartField::constant(vec![g.clone()]).unwrap();
        let line = Path::parameter_line(Interval::unit()).unwrap();
        let direct = LinearConnection::new(field.clone()).coefficients(&line, 0.4).unwrap();
        assert!(dist(&direct, &g) < 1e-15);
        let neg = LinearConnection::with_pullback(field.clone(), Pullback::Negated);
        assert!(dist(&neg.coefficients(&line, 0.4).unwrap(), &(-g.clone())) < 1e-15);
        let nt = LinearConnection::with_pullback(field, Pullback::NegatedTranspose);
        assert!(dist(&nt.coefficients(&line, 0.4).unwrap(), &(-g.transpose())) < 1e-15);
    }

    #[test]
    fn reparameterized_field_scales_by_derivative() {
        let g = real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let conn = LinearConnection::new(ChartField::constant(vec![g.clone()]).unwrap());
        let line = Path::parameter_line(Interval::unit()).unwrap();
        let tau = Reparameterization::affine(Interval::new(0.0, 0.5).unwrap(), Interval::unit(), Orientation::Preserving).unwrap();
        let field = Reparameterized::new(conn.along(&line), tau.clone()).unwrap();
        assert!(dist(&field.at(0.2).unwrap(), &(g.clone() * c(2.0, 0.0))) < 1e-14);
        // agrees with pulling back along γ∘τ directly
        let direct = conn.coefficients(&line.reparameterize(&tau).unwrap(), 0.2).unwrap();
        assert!(dist(&field.at(0.2).unwrap(), &direct) < 1e-14);
        let bad = Reparameterization::identity(Interval::new(0.0, 2.0).unwrap()).unwrap();
        assert!(Reparameterized::new(conn.along(&line), bad).is_err());
    }

    #[test]
    fn constant_field_rejects_ragged_components() {
        assert!(ChartField::constant(vec![]).is_err());
        let a = real_rows(&[&[1.0]]);
        let b = real_rows(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert!(ChartField::constant(vec![a, b]).is_err());
    }
}
