//! Paths in a single chart ℝ^m and the canonical path operations.
//!
//! A [`Path`] is an immutable, cheaply clonable tree: analytic leaves
//! (lines, circle arcs, sphere latitude/longitude arcs, polylines, point
//! paths, interpolated samples) combined by restriction, canonical reversal,
//! canonical product and reparameterization.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance for matching the endpoints of a canonical product.
pub const JUNCTION_TOL: f64 = 1e-9;

fn slack(a: f64, b: f64) -> f64 {
    1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Closed real interval `[a, b]` with `a ≤ b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    a: f64,
    b: f64,
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = Error;

    fn try_from([a, b]: [f64; 2]) -> Result<Self> {
        Interval::new(a, b)
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.a, i.b]
    }
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::Domain(format!("non-finite interval [{a}, {b}]")));
        }
        if a > b {
            return Err(Error::Domain(format!("interval [{a}, {b}] has a > b")));
        }
        Ok(Interval { a, b })
    }

    /// The canonical parameter interval `[0, 1]`.
    pub fn unit() -> Self {
        Interval { a: 0.0, b: 1.0 }
    }

    pub fn point(a: f64) -> Self {
        Interval { a, b: a }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    pub fn is_degenerate(&self) -> bool {
        self.a == self.b
    }

    pub fn contains(&self, s: f64) -> bool {
        let eps = slack(self.a, self.b);
        s >= self.a - eps && s <= self.b + eps
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.contains(other.a) && self.contains(other.b)
    }

    pub fn approx_eq(&self, other: &Interval) -> bool {
        let eps = slack(self.a, self.b).max(slack(other.a, other.b));
        (self.a - other.a).abs() <= eps && (self.b - other.b).abs() <= eps
    }

    /// Clamps `s` into the interval, failing if it lies outside by more than roundoff.
    pub fn clamp(&self, s: f64) -> Result<f64> {
        if s.is_nan() || !self.contains(s) {
            return Err(Error::Domain(format!(
                "parameter {s} outside [{}, {}]",
                self.a, self.b
            )));
        }
        Ok(s.clamp(self.a, self.b))
    }

    /// `n` uniformly spaced points including both endpoints (`n = 1` gives `a`).
    pub fn grid(&self, n: usize) -> Vec<f64> {
        match n {
            0 => Vec::new(),
            1 => vec![self.a],
            _ => (0..n)
                .map(|k| {
                    if k == n - 1 {
                        self.b
                    } else {
                        self.a + self.len() * k as f64 / (n - 1) as f64
                    }
                })
                .collect(),
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.a, self.b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Preserving,
    Reversing,
}

impl Orientation {
    fn flip(self, other: Orientation) -> Orientation {
        if self == other {
            Orientation::Preserving
        } else {
            Orientation::Reversing
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Smoothness {
    C0,
    C1,
}

#[derive(Clone, Debug)]
enum Shape {
    Affine,
    /// Normalized profile u ↦ (1 − k)u + k u³, k ∈ [0, 1).
    Cubic(f64),
    /// outer ∘ inner
    Composite(Arc<Reparameterization>, Arc<Reparameterization>),
}

/// A strictly monotone C¹ bijection τ: source → target.
#[derive(Clone, Debug)]
pub struct Reparameterization {
    source: Interval,
    target: Interval,
    orientation: Orientation,
    shape: Shape,
}

impl Reparameterization {
    fn simple(
        source: Interval,
        target: Interval,
        orientation: Orientation,
        shape: Shape,
    ) -> Result<Self> {
        if source.is_degenerate() || target.is_degenerate() {
            return Err(Error::Domain(format!(
                "reparameterization {source} -> {target} needs non-degenerate intervals"
            )));
        }
        Ok(Reparameterization {
            source,
            target,
            orientation,
            shape,
        })
    }

    pub fn affine(source: Interval, target: Interval, orientation: Orientation) -> Result<Self> {
        Self::simple(source, target, orientation, Shape::Affine)
    }

    /// Monotone cubic profile; `k ∈ [0, 1)` keeps the derivative at least `1 − k`
    /// times the affine slope.
    pub fn cubic(
        source: Interval,
        target: Interval,
        k: f64,
        orientation: Orientation,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&k) {
            return Err(Error::Domain(format!("cubic shape parameter {k} not in [0, 1)")));
        }
        Self::simple(source, target, orientation, Shape::Cubic(k))
    }

    pub fn identity(domain: Interval) -> Result<Self> {
        Self::affine(domain, domain, Orientation::Preserving)
    }

    /// s ↦ a + b − s on `[a, b]`.
    pub fn canonical_reverse(domain: Interval) -> Result<Self> {
        Self::affine(domain, domain, Orientation::Reversing)
    }

    /// `outer ∘ inner`; requires `inner.target = outer.source`.
    pub fn compose(outer: &Reparameterization, inner: &Reparameterization) -> Result<Self> {
        if !inner.target.approx_eq(&outer.source) {
            return Err(Error::Domain(format!(
                "cannot compose: inner target {} differs from outer source {}",
                inner.target, outer.source
            )));
        }
        Ok(Reparameterization {
            source: inner.source,
            target: outer.target,
            orientation: outer.orientation.flip(inner.orientation),
            shape: Shape::Composite(Arc::new(outer.clone()), Arc::new(inner.clone())),
        })
    }

    pub fn source(&self) -> Interval {
        self.source
    }

    pub fn target(&self) -> Interval {
        self.target
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// True when τ′ is constant.
    pub fn is_affine(&self) -> bool {
        match &self.shape {
            Shape::Affine => true,
            Shape::Cubic(k) => *k == 0.0,
            Shape::Composite(outer, inner) => outer.is_affine() && inner.is_affine(),
        }
    }

    fn profile(k: f64, u: f64) -> (f64, f64) {
        ((1.0 - k) * u + k * u * u * u, (1.0 - k) + 3.0 * k * u * u)
    }

    fn eval(&self, s: f64) -> Result<(f64, f64)> {
        let s = self.source.clamp(s)?;
        match &self.shape {
            Shape::Composite(outer, inner) => {
                let (mid, d_inner) = inner.eval(s)?;
                let (out, d_outer) = outer.eval(mid)?;
                Ok((out, d_outer * d_inner))
            }
            Shape::Affine | Shape::Cubic(_) => {
                let k = match self.shape {
                    Shape::Cubic(k) => k,
                    _ => 0.0,
                };
                let u = (s - self.source.a) / self.source.len();
                let (c, dc) = Self::profile(k, u);
                let span = self.target.len();
                let slope = span / self.source.len();
                let value = match self.orientation {
                    Orientation::Preserving => self.target.a + span * c,
                    Orientation::Reversing => self.target.b - span * c,
                };
                let deriv = match self.orientation {
                    Orientation::Preserving => slope * dc,
                    Orientation::Reversing => -slope * dc,
                };
                Ok((value.clamp(self.target.a, self.target.b), deriv))
            }
        }
    }

    /// τ(s).
    pub fn map(&self, s: f64) -> Result<f64> {
        Ok(self.eval(s)?.0)
    }

    /// dτ/ds.
    pub fn derivative(&self, s: f64) -> Result<f64> {
        Ok(self.eval(s)?.1)
    }

    /// τ⁻¹(u) for u in the target.
    pub fn inverse(&self, u: f64) -> Result<f64> {
        let u = self.target.clamp(u)?;
        match &self.shape {
            Shape::Composite(outer, inner) => inner.inverse(outer.inverse(u)?),
            Shape::Affine | Shape::Cubic(_) => {
                let span = self.target.len();
                let c = match self.orientation {
                    Orientation::Preserving => (u - self.target.a) / span,
                    Orientation::Reversing => (self.target.b - u) / span,
                };
                let x = match self.shape {
                    Shape::Cubic(k) if k > 0.0 => invert_profile(k, c),
                    _ => c,
                };
                Ok(self.source.a + self.source.len() * x)
            }
        }
    }

    /// Checks strict monotonicity and a derivative bounded away from zero on a sample grid.
    pub fn validate(&self, samples: usize) -> Result<()> {
        let grid = self.source.grid(samples.max(2));
        let mut prev: Option<f64> = None;
        for &s in &grid {
            let (v, d) = self.eval(s)?;
            if !(d.abs() > 1e-12 && d.is_finite()) {
                return Err(Error::Domain(format!("reparameterization derivative {d} at {s}")));
            }
            let expect_positive = self.orientation == Orientation::Preserving;
            if (d > 0.0) != expect_positive {
                return Err(Error::Domain(format!(
                    "reparameterization derivative sign disagrees with orientation at {s}"
                )));
            }
            if let Some(p) = prev {
                if (v > p) != expect_positive {
                    return Err(Error::Domain(format!("reparameterization not monotone at {s}")));
                }
            }
            prev = Some(v);
        }
        Ok(())
    }
}

fn invert_profile(k: f64, c: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut x = c;
    for _ in 0..100 {
        let (f, df) = Reparameterization::profile(k, x);
        let r = f - c;
        if r.abs() < 1e-16 {
            break;
        }
        if r > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let next = x - r / df;
        x = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
    }
    x
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interp {
    Linear,
    Cubic,
}

#[derive(Clone, Debug)]
struct SampleTable {
    s: Vec<f64>,
    x: Vec<Vec<f64>>,
    slopes: Vec<Vec<f64>>,
    interp: Interp,
}

impl SampleTable {
    fn new(s: Vec<f64>, x: Vec<Vec<f64>>, interp: Interp) -> Result<Self> {
        if s.len() < 2 {
            return Err(Error::Domain("sampled path needs at least two samples".into()));
        }
        if s.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("sample parameters must be strictly increasing".into()));
        }
        let dim = x[0].len();
        if dim == 0 || x.iter().any(|p| p.len() != dim) {
            return Err(Error::Domain("sample points must share a positive dimension".into()));
        }
        if s.iter().chain(x.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::Domain("sample table contains non-finite values".into()));
        }
        let n = s.len();
        let slopes = (0..n)
            .map(|i| (0..dim).map(|d| fd_slope(&s, &x, i, d)).collect())
            .collect();
        Ok(SampleTable {
            s,
            x,
            slopes,
            interp,
        })
    }

    fn segment(&self, s: f64) -> usize {
        match self.s.partition_point(|&k| k <= s) {
            0 => 0,
            i => (i - 1).min(self.s.len() - 2),
        }
    }

    fn eval(&self, s: f64) -> (Vec<f64>, Vec<f64>) {
        let i = self.segment(s);
        let (s0, s1) = (self.s[i], self.s[i + 1]);
        let h = s1 - s0;
        let u = (s - s0) / h;
        let dim = self.x[0].len();
        let mut p = vec![0.0; dim];
        let mut v = vec![0.0; dim];
        for d in 0..dim {
            let (x0, x1) = (self.x[i][d], self.x[i + 1][d]);
            match self.interp {
                Interp::Linear => {
                    p[d] = x0 + u * (x1 - x0);
                    v[d] = (x1 - x0) / h;
                }
                Interp::Cubic => {
                    let (m0, m1) = (self.slopes[i][d] * h, self.slopes[i + 1][d] * h);
                    let u2 = u * u;
                    let u3 = u2 * u;
                    p[d] = (2.0 * u3 - 3.0 * u2 + 1.0) * x0
                        + (u3 - 2.0 * u2 + u) * m0
                        + (-2.0 * u3 + 3.0 * u2) * x1
                        + (u3 - u2) * m1;
                    v[d] = ((6.0 * u2 - 6.0 * u) * x0
                        + (3.0 * u2 - 4.0 * u + 1.0) * m0
                        + (-6.0 * u2 + 6.0 * u) * x1
                        + (3.0 * u2 - 2.0 * u) * m1)
                        / h;
                }
            }
        }
        (p, v)
    }
}

/// Three-point finite-difference slope on a non-uniform grid; one-sided at the ends.
fn fd_slope(s: &[f64], x: &[Vec<f64>], i: usize, d: usize) -> f64 {
    let n = s.len();
    if n == 2 {
        return (x[1][d] - x[0][d]) / (s[1] - s[0]);
    }
    let (j0, j1, j2) = if i == 0 {
        (0, 1, 2)
    } else if i == n - 1 {
        (n - 3, n - 2, n - 1)
    } else {
        (i - 1, i, i + 1)
    };
    // derivative at s[i] of the quadratic through the three samples
    let (t0, t1, t2) = (s[j0], s[j1], s[j2]);
    let t = s[i];
    let l0 = ((t - t1) + (t - t2)) / ((t0 - t1) * (t0 - t2));
    let l1 = ((t - t0) + (t - t2)) / ((t1 - t0) * (t1 - t2));
    let l2 = ((t - t0) + (t - t1)) / ((t2 - t0) * (t2 - t1));
    l0 * x[j0][d] + l1 * x[j1][d] + l2 * x[j2][d]
}

#[derive(Clone, Debug)]
enum Node {
    Line { from: Vec<f64>, to: Vec<f64> },
    Circle { center: [f64; 2], radius: f64 },
    Latitude { theta0: f64 },
    Longitude { phi0: f64 },
    Polyline { points: Vec<Vec<f64>> },
    Point { x: Vec<f64> },
    Samples(SampleTable),
    Restrict(Path),
    Reverse(Path),
    Concat(Path, Path),
    Reparam(Path, Reparameterization),
}

/// A parameterized curve γ: [a, b] → ℝ^m.
#[derive(Clone, Debug)]
pub struct Path {
    domain: Interval,
    dim: usize,
    smoothness: Smoothness,
    label: Arc<str>,
    node: Arc<Node>,
}

impl Path {
    fn leaf(domain: Interval, dim: usize, smoothness: Smoothness, label: String, node: Node) -> Self {
        Path {
            domain,
            dim,
            smoothness,
            label: label.into(),
            node: Arc::new(node),
        }
    }

    /// Straight segment from `from` (at `a`) to `to` (at `b`).
    pub fn line(from: Vec<f64>, to: Vec<f64>, domain: Interval) -> Result<Self> {
        if from.is_empty() || from.len() != to.len() {
            return Err(Error::Dimension {
                expected: from.len(),
                got: to.len(),
            });
        }
        check_finite(&from)?;
        check_finite(&to)?;
        if domain.is_degenerate() {
            return Err(Error::Domain("line needs a non-degenerate domain".into()));
        }
        Ok(Self::leaf(domain, from.len(), Smoothness::C1, "line".into(), Node::Line { from, to }))
    }

    /// The identity curve s ↦ s on `domain` in ℝ¹.
    pub fn parameter_line(domain: Interval) -> Result<Self> {
        Self::line(vec![domain.a()], vec![domain.b()], domain)
    }

    /// Circle arc s ↦ center + r(cos s, sin s).
    pub fn circle(center: [f64; 2], radius: f64, domain: Interval) -> Result<Self> {
        check_finite(&center)?;
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Domain(format!("circle radius {radius} must be positive")));
        }
        Ok(Self::leaf(
            domain,
            2,
            Smoothness::C1,
            format!("circle(r={radius})"),
            Node::Circle { center, radius },
        ))
    }

    /// Sphere latitude arc in (θ, φ) coordinates: s ↦ (θ₀, s).
    pub fn latitude(theta0: f64, domain: Interval) -> Result<Self> {
        if !(theta0 > 0.0 && theta0 < std::f64::consts::PI) {
            return Err(Error::Domain(format!("latitude polar angle {theta0} must lie in (0, π)")));
        }
        Ok(Self::leaf(
            domain,
            2,
            Smoothness::C1,
            format!("latitude(theta0={theta0})"),
            Node::Latitude { theta0 },
        ))
    }

    /// Sphere longitude arc in (θ, φ) coordinates: s ↦ (s, φ₀). The domain must avoid the poles.
    pub fn longitude(phi0: f64, domain: Interval) -> Result<Self> {
        if !phi0.is_finite() || domain.a() <= 0.0 || domain.b() >= std::f64::consts::PI {
            return Err(Error::Domain(format!("longitude domain {domain} must lie in (0, π)")));
        }
        Ok(Self::leaf(
            domain,
            2,
            Smoothness::C1,
            format!("longitude(phi0={phi0})"),
            Node::Longitude { phi0 },
        ))
    }

    /// Piecewise-linear path through `points`, knots uniformly spaced in the parameter.
    pub fn polyline(points: Vec<Vec<f64>>, domain: Interval) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Domain("polyline needs at least two points".into()));
        }
        let dim = points[0].len();
        if dim == 0 || points.iter().any(|p| p.len() != dim) {
            return Err(Error::Domain("polyline points must share a positive dimension".into()));
        }
        for p in &points {
            check_finite(p)?;
        }
        if domain.is_degenerate() {
            return Err(Error::Domain("polyline needs a non-degenerate domain".into()));
        }
        Ok(Self::leaf(
            domain,
            dim,
            Smoothness::C0,
            format!("polyline({})", points.len()),
            Node::Polyline { points },
        ))
    }

    /// The point path {a} → {x}.
    pub fn point(x: Vec<f64>, a: f64) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::Domain("point path needs a point".into()));
        }
        check_finite(&x)?;
        if !a.is_finite() {
            return Err(Error::Domain(format!("point path parameter {a}")));
        }
        Ok(Self::leaf(
            Interval::point(a),
            x.len(),
            Smoothness::C1,
            "point".into(),
            Node::Point { x },
        ))
    }

    /// Sampled path through `(s_k, x_k)`; cubic Hermite uses three-point
    /// finite-difference slopes (one-sided at the first and last sample).
    pub fn samples(s: Vec<f64>, x: Vec<Vec<f64>>, interp: Interp) -> Result<Self> {
        if s.len() != x.len() {
            return Err(Error::Dimension {
                expected: s.len(),
                got: x.len(),
            });
        }
        let table = SampleTable::new(s, x, interp)?;
        let domain = Interval::new(table.s[0], *table.s.last().unwrap())?;
        let smoothness = match interp {
            Interp::Linear => Smoothness::C0,
            Interp::Cubic => Smoothness::C1,
        };
        let dim = table.x[0].len();
        Ok(Self::leaf(domain, dim, smoothness, "samples".into(), Node::Samples(table)))
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into().into();
        self
    }

    pub fn is_point(&self) -> bool {
        self.domain.is_degenerate()
    }

    /// γ(s).
    pub fn eval(&self, s: f64) -> Result<Vec<f64>> {
        Ok(self.eval_with_velocity(s)?.0)
    }

    /// dγ/ds; one-sided at endpoints and breakpoints (the right-hand piece wins
    /// except at the domain end).
    pub fn velocity(&self, s: f64) -> Result<Vec<f64>> {
        Ok(self.eval_with_velocity(s)?.1)
    }

    pub fn start(&self) -> Vec<f64> {
        self.eval(self.domain.a).expect("domain endpoint")
    }

    pub fn end(&self) -> Vec<f64> {
        self.eval(self.domain.b).expect("domain endpoint")
    }

    pub fn eval_with_velocity(&self, s: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let s = self.domain.clamp(s)?;
        let (a, b) = (self.domain.a, self.domain.b);
        match &*self.node {
            Node::Line { from, to } => {
                let u = (s - a) / (b - a);
                let p = from.iter().zip(to).map(|(x, y)| x + u * (y - x)).collect();
                let v = from.iter().zip(to).map(|(x, y)| (y - x) / (b - a)).collect();
                Ok((p, v))
            }
            Node::Circle { center, radius } => {
                let (sn, cs) = s.sin_cos();
                Ok((
                    vec![center[0] + radius * cs, center[1] + radius * sn],
                    vec![-radius * sn, radius * cs],
                ))
            }
            Node::Latitude { theta0 } => Ok((vec![*theta0, s], vec![0.0, 1.0])),
            Node::Longitude { phi0 } => Ok((vec![s, *phi0], vec![1.0, 0.0])),
            Node::Polyline { points } => {
                let segments = points.len() - 1;
                let h = (b - a) / segments as f64;
                let k = (((s - a) / h).floor() as usize).min(segments - 1);
                let u = (s - (a + k as f64 * h)) / h;
                let (p0, p1) = (&points[k], &points[k + 1]);
                let p = p0.iter().zip(p1).map(|(x, y)| x + u * (y - x)).collect();
                let v = p0.iter().zip(p1).map(|(x, y)| (y - x) / h).collect();
                Ok((p, v))
            }
            Node::Point { x } => Ok((x.clone(), vec![0.0; x.len()])),
            Node::Samples(table) => Ok(table.eval(s)),
            Node::Restrict(base) => base.eval_with_velocity(s),
            Node::Reverse(base) => {
                let (p, v) = base.eval_with_velocity(a + b - s)?;
                Ok((p, v.into_iter().map(|x| -x).collect()))
            }
            Node::Concat(first, second) => {
                let (p, v) = if s < 0.5 {
                    first.eval_with_velocity(2.0 * s)?
                } else if s == 0.5 {
                    // value from the first factor, velocity from the second
                    let p = first.eval(1.0)?;
                    (p, second.velocity(0.0)?)
                } else {
                    second.eval_with_velocity(2.0 * s - 1.0)?
                };
                Ok((p, v.into_iter().map(|x| 2.0 * x).collect()))
            }
            Node::Reparam(base, tau) => {
                let (u, du) = tau.eval(s)?;
                let (p, v) = base.eval_with_velocity(u)?;
                Ok((p, v.into_iter().map(|x| du * x).collect()))
            }
        }
    }

    /// Interior parameters where the velocity may jump. Integrators never step across these.
    pub fn breakpoints(&self) -> Vec<f64> {
        let (a, b) = (self.domain.a, self.domain.b);
        let mut out: Vec<f64> = match &*self.node {
            Node::Polyline { points } => {
                let segments = points.len() - 1;
                (1..segments)
                    .map(|k| a + (b - a) * k as f64 / segments as f64)
                    .collect()
            }
            Node::Samples(table) if table.interp == Interp::Linear => {
                table.s[1..table.s.len() - 1].to_vec()
            }
            Node::Restrict(base) => base.breakpoints(),
            Node::Reverse(base) => base.breakpoints().into_iter().map(|u| a + b - u).collect(),
            Node::Concat(first, second) => first
                .breakpoints()
                .into_iter()
                .map(|u| 0.5 * u)
                .chain(std::iter::once(0.5))
                .chain(second.breakpoints().into_iter().map(|u| 0.5 + 0.5 * u))
                .collect(),
            Node::Reparam(base, tau) => base
                .breakpoints()
                .into_iter()
                .filter_map(|u| tau.inverse(u).ok())
                .collect(),
            _ => Vec::new(),
        };
        out.retain(|&u| u > a && u < b);
        out.sort_by(|x, y| x.total_cmp(y));
        out.dedup_by(|x, y| (*x - *y).abs() <= slack(a, b));
        out
    }

    /// γ|sub.
    pub fn restrict(&self, sub: Interval) -> Result<Self> {
        if !self.domain.contains_interval(&sub) {
            return Err(Error::Domain(format!(
                "restriction {sub} not contained in {}",
                self.domain
            )));
        }
        let sub = Interval::new(sub.a.max(self.domain.a), sub.b.min(self.domain.b))?;
        let base = match &*self.node {
            Node::Restrict(inner) => inner.clone(),
            _ => self.clone(),
        };
        Ok(Path {
            domain: sub,
            dim: self.dim,
            smoothness: self.smoothness,
            label: format!("{}|{}", self.label, sub).into(),
            node: Arc::new(Node::Restrict(base)),
        })
    }

    /// γ_−(s) = γ(a + b − s) on the same domain.
    pub fn reverse(&self) -> Self {
        if let Node::Reverse(inner) = &*self.node {
            return inner.clone();
        }
        Path {
            domain: self.domain,
            dim: self.dim,
            smoothness: self.smoothness,
            label: format!("rev({})", self.label).into(),
            node: Arc::new(Node::Reverse(self.clone())),
        }
    }

    /// Canonical product with the default junction tolerance.
    pub fn concat(&self, second: &Path) -> Result<Self> {
        self.concat_with_tol(second, JUNCTION_TOL)
    }

    /// Canonical product (γ₁γ₂)(s) = γ₁(2s) on [0, ½], γ₂(2s − 1) on [½, 1].
    pub fn concat_with_tol(&self, second: &Path, tol: f64) -> Result<Self> {
        let unit = Interval::unit();
        if !self.domain.approx_eq(&unit) || !second.domain.approx_eq(&unit) {
            return Err(Error::Domain(format!(
                "canonical product needs [0, 1] domains, got {} and {}",
                self.domain, second.domain
            )));
        }
        if self.dim != second.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: second.dim,
            });
        }
        let end = self.end();
        let start = second.start();
        if end.iter().zip(&start).any(|(x, y)| (x - y).abs() > tol) {
            return Err(Error::Junction { end, start });
        }
        let smooth = self.smoothness == Smoothness::C1 && second.smoothness == Smoothness::C1 && {
            let v1 = self.velocity(1.0)?;
            let v2 = second.velocity(0.0)?;
            let scale = v1.iter().chain(&v2).fold(1.0f64, |m, x| m.max(x.abs()));
            v1.iter().zip(&v2).all(|(x, y)| (x - y).abs() <= 1e-9 * scale)
        };
        Ok(Path {
            domain: unit,
            dim: self.dim,
            smoothness: if smooth { Smoothness::C1 } else { Smoothness::C0 },
            label: format!("{}*{}", self.label, second.label).into(),
            node: Arc::new(Node::Concat(self.clone(), second.clone())),
        })
    }

    /// γ ∘ τ; requires `τ.target = γ.domain`.
    pub fn reparameterize(&self, tau: &Reparameterization) -> Result<Self> {
        if !tau.target().approx_eq(&self.domain) {
            return Err(Error::Domain(format!(
                "reparameterization target {} differs from path domain {}",
                tau.target(),
                self.domain
            )));
        }
        Ok(Path {
            domain: tau.source(),
            dim: self.dim,
            smoothness: self.smoothness,
            label: format!("{}∘τ", self.label).into(),
            node: Arc::new(Node::Reparam(self.clone(), tau.clone())),
        })
    }

    /// Orientation-preserving affine reparameterization onto `[0, 1]`.
    pub fn canonical(&self) -> Result<Self> {
        if self.domain.approx_eq(&Interval::unit()) {
            return Ok(self.clone());
        }
        let tau = Reparameterization::affine(Interval::unit(), self.domain, Orientation::Preserving)?;
        Ok(self.reparameterize(&tau)?.with_label(self.label.to_string()))
    }

    /// Maximum chart distance between γ(a) and γ(b).
    pub fn closure_gap(&self) -> f64 {
        self.start()
            .iter()
            .zip(self.end())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }
}

fn check_finite(v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Domain("non-finite coordinate".into()))
    }
}
