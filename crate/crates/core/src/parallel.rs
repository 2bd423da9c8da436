//! Parallel transport as an assignment γ ↦ φ_γ of a fibre map to every path,
//! and the passage between such assignments and transport families.
//!
//! Composition order: φ_{γ₁γ₂} = φ_{γ₂}∘φ_{γ₁}, so γ₁ is traversed first.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{dist, identity, inverse, CMatrix};
use crate::path::{Interval, Orientation, Path, Reparameterization};
use crate::report::{LawCheck, LawReport, Witness};
use crate::transport::{TransportFamily, TransportMatrix};

/// φ_γ: the fibre over γ(a) mapped onto the fibre over γ(b).
#[derive(Clone, Debug)]
pub struct ParallelMap {
    pub path: String,
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    pub map: CMatrix,
}

pub trait ParallelTransportRule: Send + Sync {
    fn fibre_dim(&self) -> usize;

    /// The matrix of φ_γ.
    fn assign(&self, path: &Path) -> Result<CMatrix>;

    fn name(&self) -> String {
        "rule".into()
    }
}

impl<R: ParallelTransportRule + ?Sized> ParallelTransportRule for &R {
    fn fibre_dim(&self) -> usize {
        (**self).fibre_dim()
    }
    fn assign(&self, path: &Path) -> Result<CMatrix> {
        (**self).assign(path)
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

/// φ_γ := I^γ_{a→b}.
#[derive(Clone, Debug)]
pub struct FromTransport<F> {
    pub family: F,
}

impl<F: TransportFamily> FromTransport<F> {
    pub fn new(family: F) -> Self {
        FromTransport { family }
    }
}

impl<F: TransportFamily> ParallelTransportRule for FromTransport<F> {
    fn fibre_dim(&self) -> usize {
        self.family.fibre_dim()
    }

    fn assign(&self, path: &Path) -> Result<CMatrix> {
        let dom = path.domain();
        Ok(self.family.transport(path, dom.a(), dom.b())?.into_matrix())
    }

    fn name(&self) -> String {
        format!("phi({})", self.family.name())
    }
}

pub fn from_transport<F: TransportFamily + ?Sized>(family: &F, path: &Path) -> Result<ParallelMap> {
    let dom = path.domain();
    Ok(ParallelMap {
        path: path.label().to_string(),
        start: path.start(),
        end: path.end(),
        map: family.transport(path, dom.a(), dom.b())?.into_matrix(),
    })
}

fn assign_checked<R: ParallelTransportRule + ?Sized>(rule: &R, path: &Path) -> Result<CMatrix> {
    let m = rule.assign(path)?;
    let n = rule.fibre_dim();
    if m.shape() != (n, n) {
        return Err(Error::Dimension {
            expected: n,
            got: m.nrows(),
        });
    }
    Ok(m)
}

pub fn parallel_map<R: ParallelTransportRule + ?Sized>(rule: &R, path: &Path) -> Result<ParallelMap> {
    Ok(ParallelMap {
        path: path.label().to_string(),
        start: path.start(),
        end: path.end(),
        map: assign_checked(rule, path)?,
    })
}

/// ε(s, t) = +1 for s ≤ t and −1 otherwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentSign {
    pub s: f64,
    pub t: f64,
    pub epsilon: i8,
}

impl SegmentSign {
    pub fn new(s: f64, t: f64) -> Self {
        SegmentSign {
            s,
            t,
            epsilon: if s <= t { 1 } else { -1 },
        }
    }
}

/// γ|[lo, hi], or the point path at γ(lo) when the interval is degenerate.
pub fn segment(path: &Path, lo: f64, hi: f64) -> Result<Path> {
    let dom = path.domain();
    let (lo, hi) = (dom.clamp(lo)?, dom.clamp(hi)?);
    if hi < lo {
        return Err(Error::Domain(format!("segment [{lo}, {hi}] is reversed")));
    }
    if lo == hi {
        return Path::point(path.eval(lo)?, lo);
    }
    path.restrict(Interval::new(lo, hi)?)
}

/// The initial piece γ|[a, s] used to rebuild transports from φ.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum InitialPiece {
    /// The restriction γ|[a, s].
    #[default]
    Restriction,
    /// γ∘τ_s with τ_s(u) = a + (u − a)(s − a)/(b − a) on [a, b].
    Affine,
    /// γ∘τ_s with a monotone cubic profile of strength k.
    Cubic(f64),
}

fn initial_piece(path: &Path, s: f64, mode: InitialPiece) -> Result<Path> {
    let dom = path.domain();
    let s = dom.clamp(s)?;
    if s == dom.a() {
        return Path::point(path.start(), dom.a());
    }
    let target = Interval::new(dom.a(), s)?;
    let tau = match mode {
        InitialPiece::Restriction => return path.restrict(target),
        InitialPiece::Affine => Reparameterization::affine(dom, target, Orientation::Preserving)?,
        InitialPiece::Cubic(k) => Reparameterization::cubic(dom, target, k, Orientation::Preserving)?,
    };
    path.restrict(target)?.reparameterize(&tau)
}

/// I^γ_{s→t} = φ_{γ|[a,t]}∘(φ_{γ|[a,s]})⁻¹.
pub fn to_transport<R: ParallelTransportRule + ?Sized>(
    rule: &R,
    path: &Path,
    s: f64,
    t: f64,
) -> Result<TransportMatrix> {
    to_transport_with(rule, path, s, t, InitialPiece::Restriction)
}

pub fn to_transport_with<R: ParallelTransportRule + ?Sized>(
    rule: &R,
    path: &Path,
    s: f64,
    t: f64,
    mode: InitialPiece,
) -> Result<TransportMatrix> {
    let dom = path.domain();
    let (s, t) = (dom.clamp(s)?, dom.clamp(t)?);
    let to_t = assign_checked(rule, &initial_piece(path, t, mode)?)?;
    let to_s = assign_checked(rule, &initial_piece(path, s, mode)?)?;
    TransportMatrix::new(s, t, to_t * inverse(&to_s)?)
}

/// I^γ_{s→t} = (φ_{γ|[min, max]})^{ε(s,t)}.
pub fn segment_form<R: ParallelTransportRule + ?Sized>(
    rule: &R,
    path: &Path,
    s: f64,
    t: f64,
) -> Result<TransportMatrix> {
    let sign = SegmentSign::new(s, t);
    let m = assign_checked(rule, &segment(path, s.min(t), s.max(t))?)?;
    let m = if sign.epsilon > 0 { m } else { inverse(&m)? };
    TransportMatrix::new(s, t, m)
}

/// The transport family rebuilt from a rule.
#[derive(Clone, Debug)]
pub struct ReconstructedTransport<R> {
    pub rule: R,
    pub mode: InitialPiece,
}

impl<R: ParallelTransportRule> ReconstructedTransport<R> {
    pub fn new(rule: R) -> Self {
        ReconstructedTransport {
            rule,
            mode: InitialPiece::Restriction,
        }
    }

    pub fn with_mode(rule: R, mode: InitialPiece) -> Self {
        ReconstructedTransport { rule, mode }
    }
}

impl<R: ParallelTransportRule> TransportFamily for ReconstructedTransport<R> {
    fn fibre_dim(&self) -> usize {
        self.rule.fibre_dim()
    }

    fn transport(&self, path: &Path, s: f64, t: f64) -> Result<TransportMatrix> {
        to_transport_with(&self.rule, path, s, t, self.mode)
    }

    fn name(&self) -> String {
        format!("rebuilt({})", self.rule.name())
    }
}

/// Paths and reparameterizations on which the axioms are checked.
#[derive(Clone, Debug, Default)]
pub struct AxiomSuite {
    /// (γ, τ) pairs with τ orientation preserving and τ.target = dom γ.
    pub reparams: Vec<(Path, Reparameterization)>,
    pub reversals: Vec<Path>,
    /// Composable pairs on [0, 1].
    pub products: Vec<(Path, Path)>,
    pub points: Vec<Path>,
}

impl AxiomSuite {
    /// For each path: an affine and a cubic reparameterization, the reversal,
    /// the split of its canonical form at 0.4 into a composable pair, and the
    /// point path at its start.
    pub fn from_paths(paths: &[Path]) -> Result<Self> {
        let mut suite = AxiomSuite::default();
        for p in paths {
            let dom = p.domain();
            if dom.is_degenerate() {
                suite.points.push(p.clone());
                continue;
            }
            let shifted = Interval::new(-1.0, 2.5)?;
            suite
                .reparams
                .push((p.clone(), Reparameterization::affine(shifted, dom, Orientation::Preserving)?));
            suite
                .reparams
                .push((p.clone(), Reparameterization::cubic(dom, dom, 0.45, Orientation::Preserving)?));
            suite.reversals.push(p.clone());
            let unit = p.canonical()?;
            let first = unit.restrict(Interval::new(0.0, 0.4)?)?.canonical()?;
            let second = unit.restrict(Interval::new(0.4, 1.0)?)?.canonical()?;
            suite.products.push((first, second));
            suite.points.push(Path::point(p.start(), dom.a())?);
        }
        Ok(suite)
    }
}

fn observe_each<T: Sync>(
    check: &mut LawCheck,
    items: &[T],
    f: impl Fn(&T) -> Result<f64> + Sync + Send,
) {
    let residuals: Vec<Result<f64>> = items.par_iter().map(f).collect();
    for r in residuals {
        check.observe_result(r, Witness::none());
    }
}

/// Reparameterization invariance, reversal, the product law in the adopted
/// order (and the swapped order as a diagnostic), point-path neutrality and
/// the derived reversed-product law.
pub fn check_axioms<R: ParallelTransportRule + ?Sized>(
    rule: &R,
    suite: &AxiomSuite,
    tol: f64,
) -> LawReport {
    let label = rule.name();
    let eye = identity(rule.fibre_dim());
    let phi = |p: &Path| assign_checked(rule, p);

    let mut reparam = LawCheck::new("reparam_invariance", label.clone(), tol);
    observe_each(&mut reparam, &suite.reparams, |(p, tau)| {
        Ok(dist(&phi(&p.reparameterize(tau)?)?, &phi(p)?))
    });

    let mut reversal = LawCheck::new("reversal", label.clone(), tol);
    observe_each(&mut reversal, &suite.reversals, |p| {
        Ok(dist(&phi(&p.reverse())?, &inverse(&phi(p)?)?))
    });

    let mut product = LawCheck::new("product", label.clone(), tol);
    observe_each(&mut product, &suite.products, |(g1, g2)| {
        Ok(dist(&phi(&g1.concat(g2)?)?, &(phi(g2)? * phi(g1)?)))
    });

    let mut swapped = LawCheck::new("product_swapped", label.clone(), tol).informational();
    observe_each(&mut swapped, &suite.products, |(g1, g2)| {
        Ok(dist(&phi(&g1.concat(g2)?)?, &(phi(g1)? * phi(g2)?)))
    });

    let mut point = LawCheck::new("point_path", label.clone(), tol);
    observe_each(&mut point, &suite.points, |p| Ok(dist(&phi(p)?, &eye)));

    let mut reversed_product = LawCheck::new("reversed_product", label, tol);
    observe_each(&mut reversed_product, &suite.products, |(g1, g2)| {
        let lhs = phi(&g1.concat(g2)?.reverse())?;
        Ok(dist(&lhs, &(phi(&g1.reverse())? * phi(&g2.reverse())?)))
    });

    let mut report = LawReport::new();
    for c in [reparam, reversal, product, swapped, point, reversed_product] {
        report.push(c.finish());
    }
    report
}

/// φ_{γ|[s,t]}∘φ_{γ|[r,s]} against φ_{γ|[r,t]} for r ≤ s ≤ t.
pub fn check_segment_law<R: ParallelTransportRule + ?Sized>(
    rule: &R,
    path: &Path,
    r: f64,
    s: f64,
    t: f64,
    tol: f64,
) -> LawReport {
    let mut check = LawCheck::new("segment", path.label(), tol).grid(&[r, s, t]);
    let residual = (|| {
        if !(r <= s && s <= t) {
            return Err(Error::Domain(format!("segment law needs r ≤ s ≤ t, got {r}, {s}, {t}")));
        }
        let rs = assign_checked(rule, &segment(path, r, s)?)?;
        let st = assign_checked(rule, &segment(path, s, t)?)?;
        let rt = assign_checked(rule, &segment(path, r, t)?)?;
        Ok(dist(&(st * rs), &rt))
    })();
    check.observe_result(residual, Witness::rst(r, s, t));
    let mut report = LawReport::new();
    report.push(check.finish());
    report
}

/// Transports rebuilt from φ = I against I itself over the grid, and the dual
/// comparison of φ with the rule read back from the rebuilt transports on
/// every grid segment.
pub fn roundtrip_transport<F: TransportFamily + ?Sized>(
    family: &F,
    path: &Path,
    grid: &[f64],
    tol: f64,
) -> LawReport {
    let rule = FromTransport::new(family);
    let rebuilt = ReconstructedTransport::new(&rule);
    let pairs: Vec<(f64, f64)> = grid
        .iter()
        .flat_map(|&s| grid.iter().map(move |&t| (s, t)))
        .collect();

    let mut forward = LawCheck::new("roundtrip_transport", path.label(), tol).grid(grid);
    let residuals: Vec<Result<f64>> = pairs
        .par_iter()
        .map(|&(s, t)| {
            let a = to_transport(&rule, path, s, t)?;
            let b = family.transport(path, s, t)?;
            Ok(dist(a.matrix(), b.matrix()))
        })
        .collect();
    for (&(s, t), r) in pairs.iter().zip(residuals) {
        forward.observe_result(r, Witness::st(s, t));
    }

    let mut dual = LawCheck::new("roundtrip_map", path.label(), tol).grid(grid);
    let segs: Vec<(f64, f64)> = pairs.iter().copied().filter(|(s, t)| s <= t).collect();
    let residuals: Vec<Result<f64>> = segs
        .par_iter()
        .map(|&(s, t)| {
            let piece = segment(path, s, t)?;
            let back = from_transport(&rebuilt, &piece)?;
            Ok(dist(&back.map, &rule.assign(&piece)?))
        })
        .collect();
    for (&(s, t), r) in segs.iter().zip(residuals) {
        dual.observe_result(r, Witness::st(s, t));
    }

    let mut report = LawReport::new();
    report.push(forward.finish());
    report.push(dual.finish());
    report
}
