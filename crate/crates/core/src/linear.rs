//! Linear transports generated by connection coefficients.
//!
//! The transport matrix H(t, s; γ) solves dU/du = −Γ_γ(u)·U with U(s) = 𝕀,
//! which is what the frame representation H(t, s) = F⁻¹(t)F(s) together with
//! Γ_γ(s) = ∂H(s, t)/∂t|_{t=s} forces. The integrator is a fixed-step product
//! of matrix exponentials that never steps across a path breakpoint.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::connection::{CoefficientField, LinearConnection, Reparameterized};
use crate::error::{Error, Result};
use crate::linalg::{
    anti_hermitian_defect, c, expm, identity, inverse, is_finite, norm, project_unitary,
    unitarity_defect, CMatrix, CVector,
};
use crate::path::{Interval, Path, Reparameterization};
use crate::transport::{TransportFamily, TransportMatrix};

/// Smallest finite-difference step accepted before cancellation dominates.
pub const MIN_FD_STEP: f64 = 1e-7;
pub const DEFAULT_FD_STEP: f64 = 1e-4;
pub const DEFAULT_STEPS: usize = 2000;
/// Step count for law checks on nonuniformly parameterized paths, where the
/// midpoint rule's O(h²) error at the default count exceeds 1e-8.
pub const LAW_CHECK_STEPS: usize = 20000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// exp(−Γ(u_k)Δ) at the left end of each step; first order.
    ProductOfExponentials,
    /// exp(−Γ(u_k + Δ/2)Δ); second order.
    MidpointMagnus2,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub steps: usize,
    pub scheme: Scheme,
    /// Keep the running product unitary; requires anti-Hermitian coefficients.
    pub reunitarize: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            steps: DEFAULT_STEPS,
            scheme: Scheme::MidpointMagnus2,
            reunitarize: false,
        }
    }
}

impl IntegratorConfig {
    pub fn with_steps(steps: usize) -> Self {
        IntegratorConfig {
            steps,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Descriptor("integrator steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Splits `[lo, hi]` at the field's breakpoints and shares `steps` among the
/// pieces in proportion to their length (at least one step each).
fn pieces(bps: &[f64], lo: f64, hi: f64, steps: usize) -> Vec<(f64, f64, usize)> {
    let mut knots = vec![lo];
    knots.extend(bps.iter().copied().filter(|&u| u > lo && u < hi));
    knots.push(hi);
    let total = hi - lo;
    knots
        .windows(2)
        .map(|w| {
            let n = ((steps as f64) * (w[1] - w[0]) / total).round().max(1.0) as usize;
            (w[0], w[1], n)
        })
        .collect()
}

/// Product of exponentials from `from` to `to` (either order) along the field.
fn march<F: CoefficientField + ?Sized>(
    field: &F,
    from: f64,
    to: f64,
    cfg: &IntegratorConfig,
) -> Result<CMatrix> {
    let n = field.fibre_dim();
    let (lo, hi) = if from <= to { (from, to) } else { (to, from) };
    let mut segs = pieces(&field.breakpoints(), lo, hi, cfg.steps);
    let forward = from <= to;
    if !forward {
        segs.reverse();
    }
    let mut u = identity(n);
    for (a, b, steps) in segs {
        let h = (b - a) / steps as f64;
        for k in 0..steps {
            let k = if forward { k } else { steps - 1 - k };
            let node = match cfg.scheme {
                Scheme::MidpointMagnus2 => a + (k as f64 + 0.5) * h,
                Scheme::ProductOfExponentials => {
                    if forward {
                        a + k as f64 * h
                    } else {
                        a + (k + 1) as f64 * h
                    }
                }
            };
            let gamma = field.at(node)?;
            if !is_finite(&gamma) {
                return Err(Error::Numerical(format!("non-finite coefficients at {node}")));
            }
            if cfg.reunitarize && anti_hermitian_defect(&gamma) > 1e-10 * (1.0 + norm(&gamma)) {
                return Err(Error::GroupInvariant {
                    group: "unitary".into(),
                    deviation: anti_hermitian_defect(&gamma),
                });
            }
            let signed = if forward { h } else { -h };
            u = expm(&(gamma * c(-signed, 0.0))) * u;
            if cfg.reunitarize && unitarity_defect(&u) > 1e-13 {
                u = project_unitary(&u)?;
            }
        }
        if !is_finite(&u) {
            return Err(Error::Numerical(format!("non-finite transport on [{a}, {b}]")));
        }
    }
    Ok(u)
}

/// H(t, s) for a coefficient field. For t < s the forward solution from t to s
/// is inverted.
pub fn integrate_field<F: CoefficientField + ?Sized>(
    field: &F,
    s: f64,
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<TransportMatrix> {
    cfg.validate()?;
    let dom = field.domain();
    let (s, t) = (dom.clamp(s)?, dom.clamp(t)?);
    let n = field.fibre_dim();
    if s == t {
        return Ok(TransportMatrix::identity(n, s));
    }
    let m = if s < t {
        march(field, s, t, cfg)?
    } else {
        inverse(&march(field, t, s, cfg)?)?
    };
    TransportMatrix::new(s, t, m)
}

/// H(t, s) integrated directly in the direction s → t, including t < s.
pub fn integrate_field_direct<F: CoefficientField + ?Sized>(
    field: &F,
    s: f64,
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<TransportMatrix> {
    cfg.validate()?;
    let dom = field.domain();
    let (s, t) = (dom.clamp(s)?, dom.clamp(t)?);
    if s == t {
        return Ok(TransportMatrix::identity(field.fibre_dim(), s));
    }
    TransportMatrix::new(s, t, march(field, s, t, cfg)?)
}

/// H(t, s; γ) for a connection.
pub fn integrate_transport(
    connection: &LinearConnection,
    path: &Path,
    s: f64,
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<TransportMatrix> {
    integrate_field(&connection.along(path), s, t, cfg)
}

/// The transport family of a linear connection.
#[derive(Clone, Debug)]
pub struct ConnectionTransport {
    pub connection: LinearConnection,
    pub config: IntegratorConfig,
}

impl ConnectionTransport {
    pub fn new(connection: LinearConnection, config: IntegratorConfig) -> Self {
        ConnectionTransport { connection, config }
    }
}

impl TransportFamily for ConnectionTransport {
    fn fibre_dim(&self) -> usize {
        self.connection.fibre_dim()
    }

    fn transport(&self, path: &Path, s: f64, t: f64) -> Result<TransportMatrix> {
        integrate_transport(&self.connection, path, s, t, &self.config)
    }

    fn name(&self) -> String {
        "connection".into()
    }
}

/// Residual of H(t, s) against a reference at several step counts.
#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceTable {
    pub label: String,
    pub steps: Vec<usize>,
    pub residuals: Vec<f64>,
    /// Least-squares slope of −log(residual) against log(steps); `None` when
    /// every residual is at roundoff level.
    pub order: Option<f64>,
}

/// Residuals at or below this are treated as exact and left out of the fit.
pub const EXACT_RESIDUAL: f64 = 1e-14;

pub fn convergence_table<F: CoefficientField + ?Sized>(
    label: impl Into<String>,
    field: &F,
    s: f64,
    t: f64,
    reference: &CMatrix,
    steps: &[usize],
    scheme: Scheme,
) -> Result<ConvergenceTable> {
    let residuals = steps
        .iter()
        .map(|&n| {
            let cfg = IntegratorConfig { steps: n, scheme, reunitarize: false };
            Ok(crate::linalg::dist(integrate_field(field, s, t, &cfg)?.matrix(), reference))
        })
        .collect::<Result<Vec<f64>>>()?;
    let points: Vec<(f64, f64)> = steps
        .iter()
        .zip(&residuals)
        .filter(|(_, &r)| r > EXACT_RESIDUAL)
        .map(|(&n, &r)| ((n as f64).ln(), r.ln()))
        .collect();
    let order = (points.len() >= 2).then(|| {
        let m = points.len() as f64;
        let (sx, sy) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
        let (mx, my) = (sx / m, sy / m);
        let cov: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
        let var: f64 = points.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
        -cov / var
    });
    Ok(ConvergenceTable {
        label: label.into(),
        steps: steps.to_vec(),
        residuals,
        order,
    })
}

/// Coefficients of γ∘τ: s ↦ τ′(s)·Γ_γ(τ(s)).
pub fn reparam_coefficients<F: CoefficientField>(
    field: F,
    tau: &Reparameterization,
) -> Result<Reparameterized<F>> {
    Reparameterized::new(field, tau.clone())
}

type FrameFn = dyn Fn(&Path, f64) -> Result<CMatrix> + Send + Sync;

/// A matrix function F(s; γ) whose transports are H(t, s) = F⁻¹(t)F(s).
#[derive(Clone)]
pub struct FrameFunction {
    fibre_dim: usize,
    f: Arc<FrameFn>,
}

impl std::fmt::Debug for FrameFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FrameFunction")
            .field("fibre_dim", &self.fibre_dim)
            .finish_non_exhaustive()
    }
}

impl FrameFunction {
    pub fn new(
        fibre_dim: usize,
        f: impl Fn(&Path, f64) -> Result<CMatrix> + Send + Sync + 'static,
    ) -> Self {
        FrameFunction {
            fibre_dim,
            f: Arc::new(f),
        }
    }

    /// F(s; γ) = Φ(γ(s)) for a matrix field Φ on the chart. Transports built
    /// this way depend only on the endpoints, so they respect restriction and
    /// reparameterization exactly.
    pub fn from_chart(
        fibre_dim: usize,
        phi: impl Fn(&[f64]) -> CMatrix + Send + Sync + 'static,
    ) -> Self {
        Self::new(fibre_dim, move |path, s| Ok(phi(&path.eval(s)?)))
    }

    /// F(s) independent of the path.
    pub fn from_parameter(
        fibre_dim: usize,
        f: impl Fn(f64) -> CMatrix + Send + Sync + 'static,
    ) -> Self {
        Self::new(fibre_dim, move |path, s| {
            path.domain().clamp(s)?;
            Ok(f(s))
        })
    }

    pub fn fibre_dim(&self) -> usize {
        self.fibre_dim
    }

    pub fn eval(&self, path: &Path, s: f64) -> Result<CMatrix> {
        let m = (self.f)(path, s)?;
        if m.shape() != (self.fibre_dim, self.fibre_dim) {
            return Err(Error::Dimension {
                expected: self.fibre_dim,
                got: m.nrows(),
            });
        }
        Ok(m)
    }
}

/// H(t, s; γ) = F⁻¹(t; γ)F(s; γ).
pub fn transport_from_frame(frame: &FrameFunction, path: &Path, s: f64, t: f64) -> Result<TransportMatrix> {
    let fs = frame.eval(path, s)?;
    let ft = frame.eval(path, t)?;
    TransportMatrix::new(s, t, inverse(&ft)? * fs)
}

#[derive(Clone, Debug)]
pub struct FrameTransport {
    pub frame: FrameFunction,
}

impl TransportFamily for FrameTransport {
    fn fibre_dim(&self) -> usize {
        self.frame.fibre_dim()
    }

    fn transport(&self, path: &Path, s: f64, t: f64) -> Result<TransportMatrix> {
        transport_from_frame(&self.frame, path, s, t)
    }

    fn name(&self) -> String {
        "frame".into()
    }
}

/// Γ_γ(s) = ∂H(s, t)/∂t at t = s by finite differences of H(s, t) = F⁻¹(s)F(t):
/// central in the interior, second-order one-sided at the endpoints.
pub fn coefficients_from_frame(frame: &FrameFunction, path: &Path, s: f64, h: f64) -> Result<CMatrix> {
    if !(h >= MIN_FD_STEP) {
        return Err(Error::Numerical(format!(
            "finite-difference step {h} below the cancellation guard {MIN_FD_STEP}"
        )));
    }
    let dom = path.domain();
    let s = dom.clamp(s)?;
    if dom.len() < 2.0 * h {
        return Err(Error::Domain(format!("domain {dom} too short for step {h}")));
    }
    let f_inv = inverse(&frame.eval(path, s)?)?;
    let h_at = |t: f64| -> Result<CMatrix> { Ok(&f_inv * frame.eval(path, t)?) };
    let scale = |m: CMatrix, k: f64| m * Complex64::new(k, 0.0);
    if s - h >= dom.a() && s + h <= dom.b() {
        Ok(scale(h_at(s + h)? - h_at(s - h)?, 0.5 / h))
    } else if s + 2.0 * h <= dom.b() {
        let n = frame.fibre_dim();
        Ok(scale(
            h_at(s + h)? * c(4.0, 0.0) - h_at(s + 2.0 * h)? - identity(n) * c(3.0, 0.0),
            0.5 / h,
        ))
    } else {
        let n = frame.fibre_dim();
        Ok(scale(
            identity(n) * c(3.0, 0.0) - h_at(s - h)? * c(4.0, 0.0) + h_at(s - 2.0 * h)?,
            0.5 / h,
        ))
    }
}

/// A section σ of the fibre bundle along a path.
pub trait Section: Send + Sync {
    fn domain(&self) -> Interval;
    fn eval(&self, s: f64) -> Result<CVector>;
}

type SectionFn = dyn Fn(f64) -> Result<CVector> + Send + Sync;

#[derive(Clone)]
pub struct FnSection {
    domain: Interval,
    f: Arc<SectionFn>,
}

impl FnSection {
    pub fn new(domain: Interval, f: impl Fn(f64) -> Result<CVector> + Send + Sync + 'static) -> Self {
        FnSection {
            domain,
            f: Arc::new(f),
        }
    }
}

impl Section for FnSection {
    fn domain(&self) -> Interval {
        self.domain
    }

    fn eval(&self, s: f64) -> Result<CVector> {
        (self.f)(self.domain.clamp(s)?)
    }
}

/// Section known at sample parameters, interpolated by cubic Lagrange
/// polynomials through the four nearest samples.
#[derive(Clone, Debug)]
pub struct SampledSection {
    s: Vec<f64>,
    values: Vec<CVector>,
}

impl SampledSection {
    pub const MIN_SAMPLES: usize = 4;

    pub fn new(s: Vec<f64>, values: Vec<CVector>) -> Result<Self> {
        if s.len() != values.len() {
            return Err(Error::Dimension {
                expected: s.len(),
                got: values.len(),
            });
        }
        if s.len() < Self::MIN_SAMPLES {
            return Err(Error::Domain(format!(
                "section needs at least {} samples, got {}",
                Self::MIN_SAMPLES,
                s.len()
            )));
        }
        if s.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("section sample parameters must increase".into()));
        }
        let dim = values[0].len();
        if values.iter().any(|v| v.len() != dim) {
            return Err(Error::Domain("section samples must share a dimension".into()));
        }
        Ok(SampledSection { s, values })
    }
}

impl Section for SampledSection {
    fn domain(&self) -> Interval {
        Interval::new(self.s[0], *self.s.last().unwrap()).expect("sorted samples")
    }

    fn eval(&self, s: f64) -> Result<CVector> {
        let s = self.domain().clamp(s)?;
        let n = self.s.len();
        let i = self.s.partition_point(|&k| k <= s).saturating_sub(1).min(n - 2);
        let start = i.saturating_sub(1).min(n - 4);
        let idx = start..start + 4;
        let mut out = CVector::zeros(self.values[0].len());
        for j in idx.clone() {
            let mut w = 1.0;
            for m in idx.clone() {
                if m != j {
                    w *= (s - self.s[m]) / (self.s[j] - self.s[m]);
                }
            }
            out += &self.values[j] * c(w, 0.0);
        }
        Ok(out)
    }
}

/// The stencil [s − h, s + h] must not straddle a jump of Γ.
fn smooth_guard<F: CoefficientField + ?Sized>(field: &F, s: f64, h: f64) -> Result<()> {
    match field.breakpoints().into_iter().find(|&b| b > s - h && b < s + h) {
        Some(b) => Err(Error::Domain(format!("derivation at {s} with step {h} straddles the corner at {b}"))),
        None => Ok(()),
    }
}

fn fd_guard(dom: Interval, s: f64, h: f64) -> Result<f64> {
    if !(h >= MIN_FD_STEP) {
        return Err(Error::Numerical(format!(
            "finite-difference step {h} below the cancellation guard {MIN_FD_STEP}"
        )));
    }
    let s = dom.clamp(s)?;
    if s - h < dom.a() || s + h > dom.b() {
        return Err(Error::Domain(format!(
            "derivation at {s} needs [s − h, s + h] inside {dom}"
        )));
    }
    Ok(s)
}

/// Transport-difference derivation
/// (1/2h)[I_{s+h→s}σ(s+h) − I_{s−h→s}σ(s−h)], accurate to O(h²).
pub fn derivation_fd<F: CoefficientField + ?Sized, S: Section + ?Sized>(
    field: &F,
    section: &S,
    s: f64,
    h: f64,
    cfg: &IntegratorConfig,
) -> Result<CVector> {
    let s = fd_guard(field.domain(), s, h)?;
    fd_guard(section.domain(), s, h)?;
    smooth_guard(field, s, h)?;
    let ahead = integrate_field(field, s + h, s, cfg)?;
    let behind = integrate_field(field, s - h, s, cfg)?;
    let fwd = ahead.matrix() * section.eval(s + h)?;
    let back = behind.matrix() * section.eval(s - h)?;
    Ok((fwd - back) * c(0.5 / h, 0.0))
}

/// Closed form D_s σ = σ′(s) + Γ(s)σ(s), with σ′ by central differences.
pub fn derivation<F: CoefficientField + ?Sized, S: Section + ?Sized>(
    field: &F,
    section: &S,
    s: f64,
    h: f64,
) -> Result<CVector> {
    let s = fd_guard(field.domain(), s, h)?;
    fd_guard(section.domain(), s, h)?;
    smooth_guard(field, s, h)?;
    let d_sigma = (section.eval(s + h)? - section.eval(s - h)?) * c(0.5 / h, 0.0);
    let sigma = section.eval(s)?;
    if sigma.len() != field.fibre_dim() {
        return Err(Error::Dimension {
            expected: field.fibre_dim(),
            got: sigma.len(),
        });
    }
    Ok(d_sigma + field.at(s)? * sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::{ChartField, FnField};
    use crate::linalg::{dist, real_rows, vec_dist};
    use crate::path::Orientation;

    fn unit_line() -> Path {
        Path::parameter_line(Interval::unit()).unwrap()
    }

    fn constant(g: CMatrix) -> LinearConnection {
        LinearConnection::new(ChartField::constant(vec![g]).unwrap())
    }

    /// Independent reference for exp(−τG): the 2×2 real generator is
    /// diagonalized by hand (distinct real eigenvalues).
    #[test]
    fn constant_gamma_matches_eigen_oracle() {
        // G = [[1, 2], [0, 3]]: eigenvalues 1, 3; eigenvectors (1,0), (1,1).
        let g = real_rows(&[&[1.0, 2.0], &[0.0, 3.0]]);
        let conn = constant(g);
        let (s, t) = (0.2, 0.9);
        let tau: f64 = t - s;
        let (e1, e3) = ((-tau).exp(), (-3.0 * tau).exp());
        // P diag(e1, e3) P⁻¹ with P = [[1,1],[0,1]], P⁻¹ = [[1,-1],[0,1]]
        let oracle = real_rows(&[&[e1, e3 - e1], &[0.0, e3]]);
        let got = integrate_transport(&conn, &unit_line(), s, t, &IntegratorConfig::with_steps(2000)).unwrap();
        assert!(dist(got.matrix(), &oracle) < 1e-10);
    }

    #[test]
    fn flat_and_degenerate_cases() {
        let conn = LinearConnection::new(ChartField::Zero { fibre_dim: 3 });
        let circle = Path::circle([0.0, 0.0], 1.0, Interval::new(0.0, 6.0).unwrap()).unwrap();
        let h = integrate_transport(&conn, &circle, 0.5, 5.0, &IntegratorConfig::default()).unwrap();
        assert_eq!(h.matrix(), &identity(3));
        let g = real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        let same = integrate_transport(&constant(g), &unit_line(), 0.3, 0.3, &IntegratorConfig::default()).unwrap();
        assert_eq!(same.matrix(), &identity(2));
        assert!(IntegratorConfig::with_steps(0).validate().is_err());
        assert!(integrate_transport(&conn, &circle, 0.0, 7.0, &IntegratorConfig::default()).is_err());
    }

    #[test]
    fn inverted_and_direct_reverse_integration_agree() {
        let field = FnField::new(2, Interval::unit(), |s| {
            Ok(real_rows(&[&[s, 1.0 + s * s], &[-1.0, (3.0 * s).sin()]]))
        });
        let cfg = IntegratorConfig::with_steps(4000);
        let inv = integrate_field(&field, 0.9, 0.1, &cfg).unwrap();
        let direct = integrate_field_direct(&field, 0.9, 0.1, &cfg).unwrap();
        assert!(dist(inv.matrix(), direct.matrix()) < 1e-7);
    }

    #[test]
    fn midpoint_is_second_order_and_left_point_first_order() {
        let field = FnField::new(2, Interval::unit(), |s| {
            Ok(real_rows(&[&[0.0, -(1.0 + s * s)], &[1.0 + s * s, 0.0]]))
        });
        // commuting generators: H(1,0) = rotation by ∫(1+s²)ds = 4/3
        let a: f64 = 4.0 / 3.0;
        let oracle = real_rows(&[&[a.cos(), a.sin()], &[-a.sin(), a.cos()]]);
        let err = |scheme, steps| {
            let cfg = IntegratorConfig { steps, scheme, reunitarize: false };
            dist(integrate_field(&field, 0.0, 1.0, &cfg).unwrap().matrix(), &oracle)
        };
        let r2 = err(Scheme::MidpointMagnus2, 200) / err(Scheme::MidpointMagnus2, 400);
        let r1 = err(Scheme::ProductOfExponentials, 200) / err(Scheme::ProductOfExponentials, 400);
        assert!((r2 - 4.0).abs() < 0.2, "{r2}");
        assert!((r1 - 2.0).abs() < 0.2, "{r1}");
    }

    #[test]
    fn convergence_table_measures_order() {
        let field = FnField::new(2, Interval::unit(), |s| {
            Ok(real_rows(&[&[0.0, -(1.0 + s * s)], &[1.0 + s * s, 0.0]]))
        });
        let a: f64 = 4.0 / 3.0;
        let oracle = real_rows(&[&[a.cos(), a.sin()], &[-a.sin(), a.cos()]]);
        let table = convergence_table("rot", &field, 0.0, 1.0, &oracle, &[50, 100, 200, 400], Scheme::MidpointMagnus2).unwrap();
        assert!((table.order.unwrap() - 2.0).abs() < 0.1);
        let flat = FnField::new(2, Interval::unit(), |_| Ok(CMatrix::zeros(2, 2)));
        let exact = convergence_table("flat", &flat, 0.0, 1.0, &identity(2), &[10, 20], Scheme::MidpointMagnus2).unwrap();
        assert_eq!(exact.order, None);
    }

    #[test]
    fn reunitarize_keeps_unitary_and_rejects_non_anti_hermitian() {
        let [sx, sy, _] = crate::linalg::pauli();
        let field = FnField::new(2, Interval::unit(), move |s| {
            Ok((&sx * c(s, 0.0) + &sy * c(1.0 - s * s, 0.0)) * c(0.0, 3.0))
        });
        let cfg = IntegratorConfig { steps: 500, scheme: Scheme::MidpointMagnus2, reunitarize: true };
        let h = integrate_field(&field, 0.0, 1.0, &cfg).unwrap();
        assert!(unitarity_defect(h.matrix()) < 1e-12);
        let bad = FnField::new(1, Interval::unit(), |_| Ok(real_rows(&[&[1.0]])));
        assert!(matches!(integrate_field(&bad, 0.0, 1.0, &cfg), Err(Error::GroupInvariant { .. })));
    }

    #[test]
    fn non_finite_coefficients_error() {
        let field = FnField::new(1, Interval::unit(), |s| Ok(real_rows(&[&[if s > 0.5 { f64::NAN } else { 0.0 }]])));
        assert!(matches!(
            integrate_field(&field, 0.0, 1.0, &IntegratorConfig::with_steps(10)),
            Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn breakpoints_are_not_stepped_across() {
        assert_eq!(pieces(&[0.5], 0.0, 1.0, 3), vec![(0.0, 0.5, 2), (0.5, 1.0, 2)]);
        assert_eq!(pieces(&[0.5], 0.6, 1.0, 10), vec![(0.6, 1.0, 10)]);
        assert_eq!(pieces(&[], 0.0, 1.0, 1), vec![(0.0, 1.0, 1)]);
    }

    #[test]
    fn frame_examples() {
        let line = unit_line();
        let constant_frame = FrameFunction::from_parameter(2, |_| real_rows(&[&[2.0, 1.0], &[0.0, 1.0]]));
        assert!(dist(transport_from_frame(&constant_frame, &line, 0.1, 0.8).unwrap().matrix(), &identity(2)) < 1e-15);

        let f = FrameFunction::from_chart(2, |x| real_rows(&[&[x[0].exp(), 0.0], &[0.0, 1.0]]));
        let (s, t) = (0.2, 0.7);
        let h = transport_from_frame(&f, &line, s, t).unwrap();
        assert!(dist(h.matrix(), &real_rows(&[&[(s - t).exp(), 0.0], &[0.0, 1.0]])) < 1e-15);

        let g = coefficients_from_frame(&constant_frame, &line, 0.5, 1e-4).unwrap();
        assert!(norm(&g) < 1e-12);
        let g = coefficients_from_frame(&f, &line, 0.5, 1e-4).unwrap();
        assert!(dist(&g, &real_rows(&[&[1.0, 0.0], &[0.0, 0.0]])) < 1e-6);
        // one-sided at the ends
        let g0 = coefficients_from_frame(&f, &line, 0.0, 1e-4).unwrap();
        assert!(dist(&g0, &real_rows(&[&[1.0, 0.0], &[0.0, 0.0]])) < 1e-6);
        assert!(coefficients_from_frame(&f, &line, 0.5, 1e-9).is_err());
    }

    #[test]
    fn extracted_coefficients_reintegrate_to_frame_transport() {
        // nonabelian frame: rotation by s² times a shear
        let frame = FrameFunction::from_parameter(2, |s| {
            let (sn, cs) = (s * s).sin_cos();
            real_rows(&[&[cs, -sn], &[sn, cs]]) * real_rows(&[&[1.0, s], &[0.0, 1.0]])
        });
        let line = unit_line();
        let fr = frame.clone();
        let ln = line.clone();
        let field = FnField::new(2, Interval::unit(), move |s| coefficients_from_frame(&fr, &ln, s, 1e-4));
        let h = integrate_field(&field, 0.1, 0.9, &IntegratorConfig::with_steps(2000)).unwrap();
        let direct = transport_from_frame(&frame, &line, 0.1, 0.9).unwrap();
        assert!(dist(h.matrix(), direct.matrix()) < 1e-7);
    }

    #[test]
    fn reparameterized_coefficients_reproduce_transport() {
        let g = real_rows(&[&[0.0, -1.0], &[1.0, 0.3]]);
        let conn = constant(g.clone());
        let line = unit_line();
        let tau = Reparameterization::cubic(Interval::new(0.0, 0.5).unwrap(), Interval::unit(), 0.4, Orientation::Preserving).unwrap();
        let field = reparam_coefficients(conn.along(&line), &tau).unwrap();
        assert!(dist(&field.at(0.25).unwrap(), &(g * c(tau.derivative(0.25).unwrap(), 0.0))) < 1e-14);
        let cfg = IntegratorConfig::with_steps(20000);
        let lhs = integrate_field(&field, 0.05, 0.45, &cfg).unwrap();
        let rhs = integrate_transport(&conn, &line, tau.map(0.05).unwrap(), tau.map(0.45).unwrap(), &cfg).unwrap();
        assert!(dist(lhs.matrix(), rhs.matrix()) < 1e-8);
        let id = Reparameterization::identity(Interval::unit()).unwrap();
        let same = reparam_coefficients(conn.along(&line), &id).unwrap();
        assert!(dist(&same.at(0.3).unwrap(), &conn.coefficients(&line, 0.3).unwrap()) < 1e-15);
    }

    #[test]
    fn derivation_of_parallel_section_vanishes() {
        let field = FnField::new(2, Interval::unit(), |s| {
            Ok(real_rows(&[&[0.1, -(1.0 + s)], &[1.0 + s * s, 0.0]]))
        });
        let cfg = IntegratorConfig::with_steps(2000);
        let v0 = CVector::from_vec(vec![c(1.0, 0.0), c(-0.5, 0.0)]);
        let f2 = field.clone();
        let sigma = FnSection::new(Interval::unit(), move |t| {
            Ok(integrate_field(&f2, 0.0, t, &cfg)?.matrix() * &v0)
        });
        let small = IntegratorConfig::with_steps(8);
        for s in [0.2, 0.5, 0.8] {
            let d_fd = derivation_fd(&field, &sigma, s, 1e-4, &small).unwrap();
            let d_cf = derivation(&field, &sigma, s, 1e-4).unwrap();
            assert!(d_fd.norm() < 1e-6, "{d_fd}");
            assert!(d_cf.norm() < 1e-6, "{d_cf}");
        }
    }

    #[test]
    fn derivation_flat_is_ordinary_derivative_and_fd_agrees() {
        let flat = FnField::new(2, Interval::unit(), |_| Ok(CMatrix::zeros(2, 2)));
        let sigma = FnSection::new(Interval::unit(), |s| {
            Ok(CVector::from_vec(vec![c(s.sin(), 0.0), c(s * s, 0.0)]))
        });
        let d = derivation(&flat, &sigma, 0.4, 1e-4).unwrap();
        let exact = CVector::from_vec(vec![c(0.4f64.cos(), 0.0), c(0.8, 0.0)]);
        assert!(vec_dist(&d, &exact) < 1e-8);

        let curved = FnField::new(2, Interval::unit(), |s| Ok(real_rows(&[&[s, 1.0], &[-2.0, 0.5]])));
        let cfg = IntegratorConfig::with_steps(16);
        for s in [0.3, 0.6] {
            let a = derivation_fd(&curved, &sigma, s, 1e-4, &cfg).unwrap();
            let b = derivation(&curved, &sigma, s, 1e-4).unwrap();
            assert!(vec_dist(&a, &b) < 1e-7);
        }
        assert!(derivation(&curved, &sigma, 0.0, 1e-4).is_err());

        let corner = Path::polyline(vec![vec![0.0], vec![1.0], vec![0.0]], Interval::unit()).unwrap();
        let conn = constant(real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]));
        let along = conn.along(&corner);
        assert!(matches!(derivation(&along, &sigma, 0.5, 1e-4), Err(Error::Domain(_))));
        assert!(derivation_fd(&along, &sigma, 0.5, 1e-4, &cfg).is_err());
        assert!(derivation(&along, &sigma, 0.4, 1e-4).is_ok());
    }

    #[test]
    fn sampled_section_needs_enough_samples() {
        let v = |x: f64| CVector::from_vec(vec![c(x, 0.0)]);
        assert!(SampledSection::new(vec![0.0, 0.5, 1.0], vec![v(0.0), v(1.0), v(2.0)]).is_err());
        let s: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
        let vals: Vec<CVector> = s.iter().map(|&x| v(x * x * x)).collect();
        let sec = SampledSection::new(s, vals).unwrap();
        assert!((sec.eval(0.333).unwrap()[0].re - 0.333f64.powi(3)).abs() < 1e-13);
    }
}
