//! Group-valued transport of a gauge potential: path-ordered exponentials,
//! Wilson loops and the group laws they satisfy.
//!
//! Convention: g solves dU/ds = U·A_i(γ(s)) dγ^i/ds with U(a) = 𝕀, so
//! g over a short segment is 𝕀 + A_i dx^i + O(dx²) and g_{γ₁γ₂} = g_{γ₁}g_{γ₂}.
//! Through the linear integrator this is Γ = −(A_i dγ^i/ds)ᵀ followed by a
//! final transpose.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::connection::{ChartField, LinearConnection, Pullback};
use crate::error::{Error, Result};
use crate::linalg::{
    anti_hermitian_defect, c, determinant, dist, identity, inverse, norm, pauli,
    unitarity_defect, CMatrix,
};
use crate::linear::{integrate_transport, IntegratorConfig};
use crate::path::{Interval, Path, Reparameterization};
use crate::report::{LawCheck, LawReport, Witness};

pub const LOOP_CLOSURE_TOL: f64 = 1e-9;
pub const ALGEBRA_TOL: f64 = 1e-12;
pub const GROUP_TOL: f64 = 1e-10;
pub const DEFAULT_DX: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    U1,
    SU2,
    GLn,
}

impl Group {
    fn fibre_dim(self) -> Option<usize> {
        match self {
            Group::U1 => Some(1),
            Group::SU2 => Some(2),
            Group::GLn => None,
        }
    }

    fn is_unitary(self) -> bool {
        !matches!(self, Group::GLn)
    }
}

impl std::fmt::Display for Group {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Group::U1 => "u1",
            Group::SU2 => "su2",
            Group::GLn => "gln",
        })
    }
}

/// Lie-algebra-valued one-form A_i(x) for a structure group.
#[derive(Clone, Debug)]
pub struct GaugePotential {
    group: Group,
    field: ChartField,
}

impl GaugePotential {
    pub fn new(group: Group, field: ChartField) -> Result<Self> {
        if let Some(n) = group.fibre_dim() {
            if field.fibre_dim() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: field.fibre_dim(),
                });
            }
        }
        let potential = GaugePotential { group, field };
        if let ChartField::Constant { components } = &potential.field {
            for m in components {
                potential.check_algebra_element(m)?;
            }
        }
        Ok(potential)
    }

    pub fn zero(group: Group, n: usize) -> Result<Self> {
        Self::new(group, ChartField::Zero { fibre_dim: n })
    }

    /// A = i(−By/2, Bx/2): uniform field strength B in the plane.
    pub fn u1_uniform(field: f64) -> Result<Self> {
        if !field.is_finite() {
            return Err(Error::Descriptor(format!("field strength {field}")));
        }
        Self::new(Group::U1, ChartField::U1Uniform { field })
    }

    /// A_k = (i/2) Σ_j a_kj σ_j.
    pub fn su2_constant(a: &[[f64; 3]]) -> Result<Self> {
        let sigma = pauli();
        let components = a
            .iter()
            .map(|row| {
                let mut m = CMatrix::zeros(2, 2);
                for (coef, s) in row.iter().zip(&sigma) {
                    m += s * c(0.0, 0.5 * coef);
                }
                m
            })
            .collect();
        Self::new(Group::SU2, ChartField::constant(components)?)
    }

    pub fn group(&self) -> Group {
        self.group
    }

    pub fn field(&self) -> &ChartField {
        &self.field
    }

    pub fn fibre_dim(&self) -> usize {
        self.field.fibre_dim()
    }

    fn check_algebra_element(&self, m: &CMatrix) -> Result<()> {
        let deviation = match self.group {
            Group::GLn => 0.0,
            Group::U1 => m[(0, 0)].re.abs(),
            Group::SU2 => anti_hermitian_defect(m).max(m.trace().norm()),
        };
        if deviation > ALGEBRA_TOL * (1.0 + norm(m)) {
            return Err(Error::GroupInvariant {
                group: format!("{} algebra", self.group),
                deviation,
            });
        }
        Ok(())
    }

    /// Checks every A_i(x) against the Lie algebra of the group.
    pub fn check_at(&self, x: &[f64]) -> Result<()> {
        for i in 0..x.len() {
            self.check_algebra_element(&self.field.component(x, i)?)?;
        }
        Ok(())
    }

    /// Σ_i A_i(x) dx^i.
    pub fn contract(&self, x: &[f64], dx: &[f64]) -> Result<CMatrix> {
        self.field.contract(x, dx)
    }

    /// The potential acting on the fibre from the left: Γ = −A_i dγ^i/ds.
    pub fn linear_connection(&self) -> LinearConnection {
        LinearConnection::with_pullback(self.field.clone(), Pullback::Negated)
    }

    fn right_action_connection(&self) -> LinearConnection {
        LinearConnection::with_pullback(self.field.clone(), Pullback::NegatedTranspose)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupElement {
    pub group: Group,
    #[serde(serialize_with = "serialize_matrix")]
    pub matrix: CMatrix,
}

/// Rows of `[re, im]` pairs.
pub fn serialize_matrix<S: serde::Serializer>(m: &CMatrix, ser: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect();
    rows.serialize(ser)
}

impl GroupElement {
    pub fn new(group: Group, matrix: CMatrix) -> Result<Self> {
        let e = GroupElement { group, matrix };
        let deviation = e.invariant_defect();
        if !(deviation <= GROUP_TOL) {
            return Err(Error::GroupInvariant {
                group: group.to_string(),
                deviation,
            });
        }
        Ok(e)
    }

    pub fn identity(group: Group, n: usize) -> Self {
        GroupElement {
            group,
            matrix: identity(n),
        }
    }

    /// |z| − 1 for U1, unitarity and det − 1 for SU2; 0 for GLn.
    pub fn invariant_defect(&self) -> f64 {
        let m = &self.matrix;
        if !crate::linalg::is_finite(m) {
            return f64::INFINITY;
        }
        match self.group {
            Group::U1 => {
                if m.shape() != (1, 1) {
                    return f64::INFINITY;
                }
                (m[(0, 0)].norm() - 1.0).abs()
            }
            Group::SU2 => {
                if m.shape() != (2, 2) {
                    return f64::INFINITY;
                }
                unitarity_defect(m).max((determinant(m) - c(1.0, 0.0)).norm())
            }
            Group::GLn => 0.0,
        }
    }

    /// arg z for U1 elements, in (−π, π].
    pub fn u1_phase(&self) -> Option<f64> {
        (self.group == Group::U1).then(|| self.matrix[(0, 0)].arg())
    }

    pub fn inverse(&self) -> Result<Self> {
        let matrix = if self.group.is_unitary() {
            self.matrix.adjoint()
        } else {
            inverse(&self.matrix)?
        };
        Ok(GroupElement {
            group: self.group,
            matrix,
        })
    }

    pub fn mul(&self, other: &GroupElement) -> GroupElement {
        GroupElement {
            group: self.group,
            matrix: &self.matrix * &other.matrix,
        }
    }

    pub fn dist(&self, other: &GroupElement) -> f64 {
        dist(&self.matrix, &other.matrix)
    }
}

/// g_γ = Pexp ∫_γ A_i dx^i.
pub fn group_transport(potential: &GaugePotential, path: &Path, cfg: &IntegratorConfig) -> Result<GroupElement> {
    potential.check_at(&path.start())?;
    let dom = path.domain();
    let cfg = IntegratorConfig {
        reunitarize: cfg.reunitarize && potential.group.is_unitary(),
        ..*cfg
    };
    let h = integrate_transport(&potential.right_action_connection(), path, dom.a(), dom.b(), &cfg)?;
    GroupElement::new(potential.group, h.into_matrix().transpose())
}

/// Holonomy around a closed loop based at its starting point.
#[derive(Clone, Debug, Serialize)]
pub struct WilsonLoop {
    pub base: Vec<f64>,
    pub element: GroupElement,
    pub u1_phase: Option<f64>,
}

pub fn wilson_loop(potential: &GaugePotential, path: &Path, cfg: &IntegratorConfig) -> Result<WilsonLoop> {
    let gap = path.closure_gap();
    if !(gap <= LOOP_CLOSURE_TOL) {
        return Err(Error::OpenLoop { gap });
    }
    let element = group_transport(potential, path, cfg)?;
    Ok(WilsonLoop {
        base: path.start(),
        u1_phase: element.u1_phase(),
        element,
    })
}

/// The loop traversed from γ(c): γ|[c, b] followed by γ|[a, c], on [0, 1].
/// Also returns γ|[a, c], the connecting path from the old base point.
pub fn rebase_loop(path: &Path, c: f64) -> Result<(Path, Path)> {
    let dom = path.domain();
    let c = dom.clamp(c)?;
    if c <= dom.a() || c >= dom.b() {
        return Err(Error::Domain(format!("rebase point {c} must be interior to {dom}")));
    }
    let head = path.restrict(Interval::new(dom.a(), c)?)?.canonical()?;
    let tail = path.restrict(Interval::new(c, dom.b())?)?.canonical()?;
    let rebased = tail.concat(&head)?.with_label(format!("{}@{c}", path.label()));
    Ok((rebased, head))
}

/// Reparameterization, reversal and product laws for γ₁, γ₂ on [0, 1] and
/// τ with target [0, 1]. The product in the opposite order is recorded as a
/// diagnostic.
pub fn check_group_laws(
    potential: &GaugePotential,
    g1: &Path,
    g2: &Path,
    tau: &Reparameterization,
    tol: f64,
    cfg: &IntegratorConfig,
) -> LawReport {
    let label = format!("{}*{}", g1.label(), g2.label());
    let run = |p: Path| group_transport(potential, &p, cfg);

    let jobs: Vec<Result<Path>> = vec![
        Ok(g1.clone()),
        Ok(g2.clone()),
        g1.reparameterize(tau),
        Ok(g1.reverse()),
        g1.concat(g2),
    ];
    let results: Vec<Result<GroupElement>> = jobs
        .into_par_iter()
        .map(|p| p.and_then(run))
        .collect();
    let [e1, e2, er, erev, eprod]: [Result<GroupElement>; 5] =
        results.try_into().expect("five jobs");

    let both = |a: &Result<GroupElement>, b: &Result<GroupElement>| -> Result<(GroupElement, GroupElement)> {
        match (a, b) {
            (Ok(a), Ok(b)) => Ok((a.clone(), b.clone())),
            (Err(e), _) | (_, Err(e)) => Err(Error::Numerical(e.to_string())),
        }
    };

    let mut reparam = LawCheck::new("group_reparam", g1.label(), tol);
    reparam.observe_result(both(&er, &e1).map(|(a, b)| a.dist(&b)), Witness::none());
    let mut reversal = LawCheck::new("group_reversal", g1.label(), tol);
    reversal.observe_result(
        both(&erev, &e1).and_then(|(a, b)| Ok(a.dist(&b.inverse()?))),
        Witness::none(),
    );
    let factors = both(&e1, &e2);
    let mut product = LawCheck::new("group_product", label.clone(), tol);
    product.observe_result(
        factors.as_ref().map_err(|e| Error::Numerical(e.to_string())).and_then(|(a, b)| {
            Ok(eprod.as_ref().map_err(|e| Error::Numerical(e.to_string()))?.dist(&a.mul(b)))
        }),
        Witness::none(),
    );
    let mut swapped = LawCheck::new("group_product_swapped", label, tol).informational();
    swapped.observe_result(
        factors.and_then(|(a, b)| Ok(eprod.as_ref().map_err(|e| Error::Numerical(e.to_string()))?.dist(&b.mul(&a)))),
        Witness::none(),
    );

    let mut report = LawReport::new();
    for c in [reparam, reversal, product, swapped] {
        report.push(c.finish());
    }
    report
}

/// Loops sharing a base point compose as W(γ₁γ₂) = W(γ₁)W(γ₂); moving the base
/// point to γ₁(c) conjugates: W′ = g_{[a,c]}⁻¹ W g_{[a,c]}.
pub fn check_loop_laws(
    potential: &GaugePotential,
    loop1: &Path,
    loop2: &Path,
    c: f64,
    tol: f64,
    cfg: &IntegratorConfig,
) -> LawReport {
    let label = format!("{}*{}", loop1.label(), loop2.label());
    let mut product = LawCheck::new("loop_product", label, tol);
    product.observe_result(
        (|| {
            let w1 = wilson_loop(potential, loop1, cfg)?;
            let w2 = wilson_loop(potential, loop2, cfg)?;
            let w = wilson_loop(potential, &loop1.concat(loop2)?, cfg)?;
            Ok(w.element.dist(&w1.element.mul(&w2.element)))
        })(),
        Witness::none(),
    );
    let mut conj = LawCheck::new("loop_conjugation", loop1.label(), tol);
    conj.observe_result(
        (|| {
            let (rebased, head) = rebase_loop(loop1, c)?;
            let w = wilson_loop(potential, loop1, cfg)?.element;
            let w_new = wilson_loop(potential, &rebased, cfg)?.element;
            let g = group_transport(potential, &head, cfg)?;
            Ok(w_new.dist(&g.inverse()?.mul(&w).mul(&g)))
        })(),
        Witness::at(c),
    );
    let mut report = LawReport::new();
    report.push(product.finish());
    report.push(conj.finish());
    report
}

/// Result of comparing g over [x, x + dx] with 𝕀 + A_i(x)dx^i.
#[derive(Clone, Debug)]
pub struct InfinitesimalResult {
    pub report: LawReport,
    /// ‖g − (𝕀 + A dx)‖ at dx and dx/2.
    pub deviation: [f64; 2],
    /// deviation / |dx|².
    pub second_order_coefficient: f64,
    /// deviation(dx) / deviation(dx/2); `None` when both vanish.
    pub ratio: Option<f64>,
}

pub const RICHARDSON_BAND: (f64, f64) = (3.5, 4.5);

/// Checks the first-order expansion along the straight segment x → x + dx.
pub fn infinitesimal_check(
    potential: &GaugePotential,
    x: &[f64],
    dx: &[f64],
    tol: f64,
    cfg: &IntegratorConfig,
) -> Result<InfinitesimalResult> {
    if x.len() != dx.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            got: dx.len(),
        });
    }
    let size = dx.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(size > 0.0 && size.is_finite()) {
        return Err(Error::Domain(format!("infinitesimal step of size {size}")));
    }
    let n = potential.fibre_dim();
    let deviation_at = |scale: f64| -> Result<f64> {
        let step: Vec<f64> = dx.iter().map(|v| v * scale).collect();
        let end: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
        let seg = Path::line(x.to_vec(), end, Interval::unit())?;
        let g = group_transport(potential, &seg, cfg)?;
        let first = identity(n) + potential.contract(x, &step)?;
        Ok(dist(&g.matrix, &first))
    };
    let d1 = deviation_at(1.0)?;
    let d2 = deviation_at(0.5)?;
    let ratio = (d1 > 0.0 || d2 > 0.0).then(|| d1 / d2);
    let label = format!("{x:?}");
    let mut dev = LawCheck::new("infinitesimal", label.clone(), tol);
    dev.observe(d1, Witness::none());
    let mut rich = LawCheck::new("richardson_ratio", label, 0.5 * (RICHARDSON_BAND.1 - RICHARDSON_BAND.0));
    if let Some(r) = ratio {
        rich.observe((r - 4.0).abs(), Witness::none());
    } else {
        rich.note("expansion exact at both step sizes");
    }
    let mut report = LawReport::new();
    report.push(dev.finish());
    report.push(rich.finish());
    Ok(InfinitesimalResult {
        report,
        deviation: [d1, d2],
        second_order_coefficient: d1 / (size * size),
        ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::expm;
    use crate::path::Orientation;
    use std::f64::consts::PI;

    fn cfg() -> IntegratorConfig {
        IntegratorConfig::default()
    }

    fn segments() -> (Path, Path) {
        let g1 = Path::line(vec![0.0, 0.0], vec![1.0, 0.0], Interval::unit()).unwrap().with_label("east");
        let g2 = Path::line(vec![1.0, 0.0], vec![1.0, 1.0], Interval::unit()).unwrap().with_label("north");
        (g1, g2)
    }

    fn su2() -> GaugePotential {
        GaugePotential::su2_constant(&[[1.0, 0.0, 0.0], [0.0, 1.2, 0.3]]).unwrap()
    }

    #[test]
    fn zero_potential_gives_identity() {
        let a = GaugePotential::zero(Group::SU2, 2).unwrap();
        let (g1, _) = segments();
        assert_eq!(group_transport(&a, &g1, &cfg()).unwrap().matrix, identity(2));
        let circle = Path::circle([0.0, 0.0], 1.0, Interval::new(0.0, 2.0 * PI).unwrap()).unwrap();
        assert_eq!(wilson_loop(&a, &circle, &cfg()).unwrap().element.matrix, identity(2));
    }

    #[test]
    fn potential_validation() {
        assert!(GaugePotential::new(Group::U1, ChartField::Zero { fibre_dim: 2 }).is_err());
        let hermitian = ChartField::constant(vec![crate::linalg::real_rows(&[&[1.0, 0.0], &[0.0, -1.0]])]).unwrap();
        assert!(matches!(GaugePotential::new(Group::SU2, hermitian), Err(Error::GroupInvariant { .. })));
        let traced = ChartField::constant(vec![identity(2) * c(0.0, 1.0)]).unwrap();
        assert!(GaugePotential::new(Group::SU2, traced).is_err());
        assert!(GaugePotential::new(Group::U1, ChartField::constant(vec![identity(1)]).unwrap()).is_err());
    }

    #[test]
    fn u1_circle_flux_phase() {
        let (b, r) = (0.7, 0.8);
        let a = GaugePotential::u1_uniform(b).unwrap();
        let circle = Path::circle([0.0, 0.0], r, Interval::new(0.0, 2.0 * PI).unwrap()).unwrap();
        let w = wilson_loop(&a, &circle, &cfg()).unwrap();
        let expected = b * PI * r * r;
        assert!((w.u1_phase.unwrap() - expected).abs() < 1e-10);
        assert_eq!(w.base, circle.start());
        let back = wilson_loop(&a, &circle.reverse(), &cfg()).unwrap();
        assert!(back.element.dist(&w.element.inverse().unwrap()) < 1e-12);
    }

    #[test]
    fn abelian_path_matches_scalar_quadrature() {
        let a = GaugePotential::u1_uniform(1.3).unwrap();
        let path = Path::polyline(vec![vec![0.1, 0.0], vec![0.5, 0.7], vec![-0.2, 0.9]], Interval::unit()).unwrap();
        let g = group_transport(&a, &path, &cfg()).unwrap();
        // composite Simpson on each linear piece of ∫ A_i dx^i
        let mut integral = c(0.0, 0.0);
        for (lo, hi) in [(0.0, 0.5), (0.5, 1.0)] {
            let n = 200;
            let h = (hi - lo) / n as f64;
            for k in 0..=n {
                let s = lo + k as f64 * h;
                let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
                let (x, v) = path.eval_with_velocity(if k == 0 { s + 1e-15 } else if k == n { s - 1e-15 } else { s }).unwrap();
                integral += a.contract(&x, &v).unwrap()[(0, 0)] * c(w * h / 3.0, 0.0);
            }
        }
        assert!((g.matrix[(0, 0)] - integral.exp()).norm() < 1e-12);
    }

    #[test]
    fn open_path_is_rejected() {
        let a = GaugePotential::u1_uniform(1.0).unwrap();
        let (g1, _) = segments();
        assert!(matches!(wilson_loop(&a, &g1, &cfg()), Err(Error::OpenLoop { .. })));
    }

    #[test]
    fn su2_group_laws_and_swapped_order() {
        let a = su2();
        let (g1, g2) = segments();
        let tau = Reparameterization::cubic(Interval::unit(), Interval::unit(), 0.4, Orientation::Preserving).unwrap();
        let fine = IntegratorConfig::with_steps(crate::linear::LAW_CHECK_STEPS);
        let report = check_group_laws(&a, &g1, &g2, &tau, 1e-8, &fine);
        assert!(report.passed(), "{:?}", report.failing());
        assert!(report.max_residual("group_product_swapped").unwrap() > 1e-3);
        // constant A on straight segments: each factor is an exact exponential
        let e1 = group_transport(&a, &g1, &cfg()).unwrap();
        let a0 = a.field().component(&[0.0, 0.0], 0).unwrap();
        assert!(dist(&e1.matrix, &expm(&a0)) < 1e-12);
        assert!(e1.invariant_defect() < 1e-12);
    }

    #[test]
    fn abelian_product_holds_in_either_order() {
        let a = GaugePotential::u1_uniform(0.9).unwrap();
        let (g1, g2) = segments();
        let tau = Reparameterization::affine(Interval::unit(), Interval::unit(), Orientation::Preserving).unwrap();
        let report = check_group_laws(&a, &g1, &g2, &tau, 1e-8, &cfg());
        assert!(report.passed());
        assert!(report.max_residual("group_product_swapped").unwrap() < 1e-12);
    }

    #[test]
    fn loop_product_and_conjugation() {
        let a = su2();
        let square = Path::polyline(
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![0.0, 0.0]],
            Interval::unit(),
        )
        .unwrap();
        let tri = Path::polyline(vec![vec![0.0, 0.0], vec![0.0, -1.0], vec![-0.5, 0.0], vec![0.0, 0.0]], Interval::unit()).unwrap();
        let report = check_loop_laws(&a, &square, &tri, 0.3, 1e-8, &cfg());
        assert!(report.passed(), "{:?}", report.entries);
        let w = wilson_loop(&a, &square, &cfg()).unwrap();
        assert!(dist(&w.element.matrix, &identity(2)) > 1e-3);
    }

    #[test]
    fn reunitarize_keeps_su2() {
        let a = su2();
        let (g1, _) = segments();
        let cfg = IntegratorConfig { reunitarize: true, ..cfg() };
        let g = group_transport(&a, &g1, &cfg).unwrap();
        assert!(g.invariant_defect() < 1e-12);
    }

    #[test]
    fn infinitesimal_expansion() {
        let zero = GaugePotential::zero(Group::U1, 1).unwrap();
        let r = infinitesimal_check(&zero, &[0.3, 0.2], &[DEFAULT_DX, 0.0], 1e-8, &cfg()).unwrap();
        assert_eq!(r.deviation, [0.0, 0.0]);
        assert!(r.report.passed());
        for a in [GaugePotential::u1_uniform(1.5).unwrap(), su2()] {
            let r = infinitesimal_check(&a, &[0.3, -0.2], &[0.6 * DEFAULT_DX, 0.8 * DEFAULT_DX], 1e-8, &cfg()).unwrap();
            assert!(r.report.passed(), "{:?}", r.report.entries);
            let ratio = r.ratio.unwrap();
            assert!((3.5..=4.5).contains(&ratio), "{ratio}");
        }
    }

    #[test]
    fn group_element_invariants() {
        assert!(GroupElement::new(Group::U1, identity(1) * c(1.1, 0.0)).is_err());
        assert!(GroupElement::new(Group::SU2, identity(2) * c(0.0, 1.0)).is_err());
        let e = GroupElement::new(Group::U1, identity(1) * c(0.0, 1.0)).unwrap();
        assert!((e.u1_phase().unwrap() - PI / 2.0).abs() < 1e-15);
        let json = crate::report::to_json_string(&e).unwrap();
        assert!(json.starts_with("{\"group\":\"u1\",\"matrix\":[[["));
    }
}
