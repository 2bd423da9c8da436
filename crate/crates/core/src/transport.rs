//! The transport-along-paths interface and its groupoid-level law checks.
//!
//! A [`TransportFamily`] assigns to every path γ and parameters s, t a matrix
//! representing the fibre map over γ(s) → γ(t) in a fixed frame along γ.
//! Only linear fibre maps are modelled.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{dist, expm, identity, inverse, CMatrix, CVector};
use crate::path::{Interval, Path, Reparameterization};
use crate::report::{LawCheck, LawReport, Witness};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_GRID_POINTS: usize = 9;

/// Matrix of the transport from parameter `source` to parameter `target`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportMatrix {
    source: f64,
    target: f64,
    matrix: CMatrix,
}

impl TransportMatrix {
    pub fn new(source: f64, target: f64, matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Dimension {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        Ok(TransportMatrix {
            source,
            target,
            matrix,
        })
    }

    pub fn identity(n: usize, at: f64) -> Self {
        TransportMatrix {
            source: at,
            target: at,
            matrix: identity(n),
        }
    }

    pub fn source(&self) -> f64 {
        self.source
    }

    pub fn target(&self) -> f64 {
        self.target
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

fn params_match(x: f64, y: f64) -> bool {
    (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0)
}

/// `second ∘ first`.
pub fn compose(second: &TransportMatrix, first: &TransportMatrix) -> Result<TransportMatrix> {
    if !params_match(first.target, second.source) {
        return Err(Error::Composition {
            first_target: first.target,
            second_source: second.source,
        });
    }
    if first.dim() != second.dim() {
        return Err(Error::Dimension {
            expected: first.dim(),
            got: second.dim(),
        });
    }
    Ok(TransportMatrix {
        source: first.source,
        target: second.target,
        matrix: &second.matrix * &first.matrix,
    })
}

pub fn invert(m: &TransportMatrix) -> Result<TransportMatrix> {
    Ok(TransportMatrix {
        source: m.target,
        target: m.source,
        matrix: inverse(&m.matrix)?,
    })
}

pub fn apply(m: &TransportMatrix, v: &CVector) -> Result<CVector> {
    if v.len() != m.dim() {
        return Err(Error::Dimension {
            expected: m.dim(),
            got: v.len(),
        });
    }
    Ok(&m.matrix * v)
}

/// γ ↦ I^γ: a transport along every path of the base.
pub trait TransportFamily: Send + Sync {
    fn fibre_dim(&self) -> usize;

    /// I^γ_{s→t}.
    fn transport(&self, path: &Path, s: f64, t: f64) -> Result<TransportMatrix>;

    fn name(&self) -> String {
        "transport".into()
    }
}

impl<T: TransportFamily + ?Sized> TransportFamily for &T {
    fn fibre_dim(&self) -> usize {
        (**self).fibre_dim()
    }
    fn transport(&self, path: &Path, s: f64, t: f64) -> Result<TransportMatrix> {
        (**self).transport(path, s, t)
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

impl<T: TransportFamily + ?Sized> TransportFamily for Arc<T> {
    fn fibre_dim(&self) -> usize {
        (**self).fibre_dim()
    }
    fn transport(&self, path: &Path, s: f64, t: f64) -> Result<TransportMatrix> {
        (**self).transport(path, s, t)
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

impl<T: TransportFamily + ?Sized> TransportFamily for Box<T> {
    fn fibre_dim(&self) -> usize {
        (**self).fibre_dim()
    }
    fn transport(&self, path: &Path, s: f64, t: f64) -> Result<TransportMatrix> {
        (**self).transport(path, s, t)
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

/// All ordered-pair transports I_{g_i → g_j}, evaluated in parallel.
fn pair_table<F: TransportFamily + ?Sized>(
    family: &F,
    path: &Path,
    grid: &[f64],
) -> Vec<Vec<Result<CMatrix>>> {
    let n = grid.len();
    let flat: Vec<Result<CMatrix>> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / n, k % n);
            family
                .transport(path, grid[i], grid[j])
                .map(TransportMatrix::into_matrix)
        })
        .collect();
    let mut rows = Vec::with_capacity(n);
    let mut it = flat.into_iter();
    for _ in 0..n {
        rows.push(it.by_ref().take(n).collect());
    }
    rows
}

fn check_grid(path: &Path, grid: &[f64]) -> Result<()> {
    for &s in grid {
        path.domain().clamp(s)?;
    }
    Ok(())
}

/// Composition, identity and inverse laws of a transport family over a grid.
pub fn check_groupoid<F: TransportFamily + ?Sized>(
    family: &F,
    path: &Path,
    grid: &[f64],
    tol: f64,
) -> LawReport {
    let label = path.label();
    let mut comp = LawCheck::new("composition", label, tol).grid(grid);
    let mut ident = LawCheck::new("identity", label, tol).grid(grid);
    let mut inv = LawCheck::new("inverse", label, tol).grid(grid);
    let mut report = LawReport::new();
    if let Err(e) = check_grid(path, grid) {
        for c in [&mut comp, &mut ident, &mut inv] {
            c.observe_result(Err(Error::Domain(e.to_string())), Witness::none());
        }
    } else {
        let table = pair_table(family, path, grid);
        let n = grid.len();
        let eye = identity(family.fibre_dim());
        for i in 0..n {
            ident.observe_result(
                table[i][i].as_ref().map(|m| dist(m, &eye)).map_err(clone_err),
                Witness::at(grid[i]),
            );
            for j in 0..n {
                let residual = match (&table[i][j], &table[j][i]) {
                    (Ok(fwd), Ok(back)) => inverse(fwd).map(|m| dist(&m, back)),
                    (Err(e), _) | (_, Err(e)) => Err(clone_err(e)),
                };
                inv.observe_result(residual, Witness::st(grid[i], grid[j]));
                for k in 0..n {
                    // (s, t, r) = (i, j, k): I_{t→r} I_{s→t} vs I_{s→r}
                    let residual = match (&table[j][k], &table[i][j], &table[i][k]) {
                        (Ok(tr), Ok(st), Ok(sr)) => Ok(dist(&(tr * st), sr)),
                        (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => Err(clone_err(e)),
                    };
                    comp.observe_result(residual, Witness::rst(grid[k], grid[i], grid[j]));
                }
            }
        }
    }
    report.push(comp.finish());
    report.push(ident.finish());
    report.push(inv.finish());
    report
}

fn clone_err(e: &Error) -> Error {
    Error::Numerical(e.to_string())
}

/// I^{γ|sub}_{s→t} against I^γ_{s→t} over `grid ⊆ sub`.
pub fn check_restriction<F: TransportFamily + ?Sized>(
    family: &F,
    path: &Path,
    sub: Interval,
    grid: &[f64],
    tol: f64,
) -> LawReport {
    let mut check = LawCheck::new("restriction", format!("{}|{}", path.label(), sub), tol).grid(grid);
    match path.restrict(sub) {
        Err(e) => check.observe_result(Err(e), Witness::none()),
        Ok(restricted) => {
            let pairs: Vec<(f64, f64)> = grid
                .iter()
                .flat_map(|&s| grid.iter().map(move |&t| (s, t)))
                .collect();
            let residuals: Vec<Result<f64>> = pairs
                .par_iter()
                .map(|&(s, t)| {
                    let a = family.transport(&restricted, s, t)?;
                    let b = family.transport(path, s, t)?;
                    Ok(dist(a.matrix(), b.matrix()))
                })
                .collect();
            for ((s, t), r) in pairs.into_iter().zip(residuals) {
                check.observe_result(r, Witness::st(s, t));
            }
        }
    }
    let mut report = LawReport::new();
    report.push(check.finish());
    report
}

/// I^{γ∘τ}_{s→t} against I^γ_{τ(s)→τ(t)} over `grid ⊆ τ.source`.
pub fn check_reparam<F: TransportFamily + ?Sized>(
    family: &F,
    path: &Path,
    tau: &Reparameterization,
    grid: &[f64],
    tol: f64,
) -> LawReport {
    let mut check = LawCheck::new("reparameterization", path.label(), tol).grid(grid);
    match path.reparameterize(tau) {
        Err(e) => check.observe_result(Err(e), Witness::none()),
        Ok(composed) => {
            let pairs: Vec<(f64, f64)> = grid
                .iter()
                .flat_map(|&s| grid.iter().map(move |&t| (s, t)))
                .collect();
            let residuals: Vec<Result<f64>> = pairs
                .par_iter()
                .map(|&(s, t)| {
                    let a = family.transport(&composed, s, t)?;
                    let b = family.transport(path, tau.map(s)?, tau.map(t)?)?;
                    Ok(dist(a.matrix(), b.matrix()))
                })
                .collect();
            for ((s, t), r) in pairs.into_iter().zip(residuals) {
                check.observe_result(r, Witness::st(s, t));
            }
        }
    }
    let mut report = LawReport::new();
    report.push(check.finish());
    report
}

/// Negative controls: transports that deliberately break path locality or
/// parameter independence so that law checks can be shown to fail.
pub mod mock {
    use super::*;

    /// I^γ_{s→t} = exp(−(t − s)·|dom γ|·G). Satisfies the groupoid laws but
    /// depends on the whole domain, so it breaks restriction and reparameterization.
    #[derive(Clone, Debug)]
    pub struct DomainLengthMock {
        pub generator: CMatrix,
    }

    impl TransportFamily for DomainLengthMock {
        fn fibre_dim(&self) -> usize {
            self.generator.nrows()
        }

        fn transport(&self, path: &Path, s: f64, t: f64) -> Result<TransportMatrix> {
            let dom = path.domain();
            let (s, t) = (dom.clamp(s)?, dom.clamp(t)?);
            let scale = -(t - s) * dom.len();
            TransportMatrix::new(s, t, expm(&(&self.generator * crate::linalg::c(scale, 0.0))))
        }

        fn name(&self) -> String {
            "mock_domain_length".into()
        }
    }

    /// I^γ_{s→t} = exp(−(t − s)·G) whatever the path: path-local but sensitive
    /// to the parameter speed, so it breaks reparameterization only.
    #[derive(Clone, Debug)]
    pub struct ParameterSpeedMock {
        pub generator: CMatrix,
    }

    impl TransportFamily for ParameterSpeedMock {
        fn fibre_dim(&self) -> usize {
            self.generator.nrows()
        }

        fn transport(&self, path: &Path, s: f64, t: f64) -> Result<TransportMatrix> {
            let dom = path.domain();
            let (s, t) = (dom.clamp(s)?, dom.clamp(t)?);
            TransportMatrix::new(s, t, expm(&(&self.generator * crate::linalg::c(-(t - s), 0.0))))
        }

        fn name(&self) -> String {
            "mock_parameter_speed".into()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::mock::*;
    use super::*;
    use crate::linalg::{c, real_rows};
    use crate::path::Orientation;
    use proptest::prelude::*;

    fn tm(s: f64, t: f64, m: CMatrix) -> TransportMatrix {
        TransportMatrix::new(s, t, m).unwrap()
    }

    fn exp_family(g: &CMatrix, s: f64, t: f64) -> TransportMatrix {
        tm(s, t, expm(&(g * c(-(t - s), 0.0))))
    }

    #[test]
    fn compose_inverse_pair_is_identity() {
        let g = real_rows(&[&[0.2, -1.0], &[0.7, 0.1]]);
        let fwd = exp_family(&g, 0.1, 0.6);
        let back = invert(&fwd).unwrap();
        assert_eq!((back.source(), back.target()), (0.6, 0.1));
        let id = compose(&back, &fwd).unwrap();
        assert!(dist(id.matrix(), &identity(2)) < 1e-14);
    }

    #[test]
    fn compose_with_identity_is_neutral_and_checks_params() {
        let g = real_rows(&[&[0.0, 1.0], &[-1.0, 0.3]]);
        let m = exp_family(&g, 0.0, 0.4);
        let id = TransportMatrix::identity(2, 0.4);
        assert_eq!(compose(&id, &m).unwrap().matrix(), m.matrix());
        let wrong = TransportMatrix::identity(2, 0.5);
        assert!(matches!(compose(&wrong, &m), Err(Error::Composition { .. })));
    }

    #[test]
    fn compose_constant_generator_exponentials() {
        let g = real_rows(&[&[0.3, -0.8], &[1.1, -0.2]]);
        let (s, t, r) = (0.1, 0.45, 0.9);
        let lhs = compose(&exp_family(&g, t, r), &exp_family(&g, s, t)).unwrap();
        // oracle: scalar exponential of commuting multiples via a finer product
        let mut oracle = identity(2);
        let n = 4000;
        for _ in 0..n {
            oracle = expm(&(&g * c(-(r - s) / n as f64, 0.0))) * oracle;
        }
        assert!(dist(lhs.matrix(), &oracle) < 1e-12);
    }

    #[test]
    fn invert_examples() {
        assert_eq!(invert(&TransportMatrix::identity(3, 1.0)).unwrap().matrix(), &identity(3));
        let d = tm(0.0, 1.0, real_rows(&[&[2.0, 0.0], &[0.0, 4.0]]));
        assert!(dist(invert(&d).unwrap().matrix(), &real_rows(&[&[0.5, 0.0], &[0.0, 0.25]])) < 1e-16);
        let m = tm(0.0, 1.0, real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]));
        let twice = invert(&invert(&m).unwrap()).unwrap();
        assert!(dist(twice.matrix(), m.matrix()) < 1e-12);
        let singular = tm(0.0, 1.0, real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]));
        assert!(invert(&singular).is_err());
    }

    #[test]
    fn apply_examples() {
        let v = CVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]);
        let id = TransportMatrix::identity(2, 0.0);
        assert_eq!(apply(&id, &v).unwrap(), v);
        let d = tm(0.0, 1.0, real_rows(&[&[2.0, 0.0], &[0.0, 3.0]]));
        assert_eq!(apply(&d, &v).unwrap(), CVector::from_vec(vec![c(2.0, 0.0), c(3.0, 0.0)]));
        assert_eq!(apply(&d, &CVector::zeros(2)).unwrap(), CVector::zeros(2));
        assert!(apply(&d, &CVector::zeros(3)).is_err());
    }

    #[test]
    fn mocks_fail_the_laws_they_break() {
        let g = real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        let path = Path::line(vec![0.0, 0.0], vec![1.0, 0.5], Interval::new(0.0, 2.0).unwrap()).unwrap();
        let grid = path.domain().grid(5);
        let sub = Interval::new(0.5, 1.5).unwrap();
        let sub_grid = sub.grid(5);
        let tau = Reparameterization::affine(Interval::unit(), path.domain(), Orientation::Preserving).unwrap();

        let dl = DomainLengthMock { generator: g.clone() };
        assert!(check_groupoid(&dl, &path, &grid, 1e-10).passed());
        assert!(!check_restriction(&dl, &path, sub, &sub_grid, 1e-8).passed());
        assert!(!check_reparam(&dl, &path, &tau, &Interval::unit().grid(5), 1e-8).passed());

        let ps = ParameterSpeedMock { generator: g };
        assert!(check_groupoid(&ps, &path, &grid, 1e-10).passed());
        assert!(check_restriction(&ps, &path, sub, &sub_grid, 1e-12).passed());
        assert!(!check_reparam(&ps, &path, &tau, &Interval::unit().grid(5), 1e-8).passed());
    }

    #[test]
    fn grid_outside_domain_is_reported_not_raised() {
        let path = Path::parameter_line(Interval::unit()).unwrap();
        let fam = ParameterSpeedMock { generator: identity(1) };
        let report = check_groupoid(&fam, &path, &[0.0, 2.0], 1e-8);
        assert!(!report.passed());
        assert_eq!(report.entries.len(), 3);
    }

    fn arb_matrix() -> impl Strategy<Value = CMatrix> {
        proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 9)
            .prop_map(|v| CMatrix::from_iterator(3, 3, v.into_iter().map(|(a, b)| c(a, b))))
    }

    proptest! {
        #[test]
        fn compose_is_associative(a in arb_matrix(), b in arb_matrix(), m in arb_matrix()) {
            let ta = tm(2.0, 3.0, a);
            let tb = tm(1.0, 2.0, b);
            let tc = tm(0.0, 1.0, m);
            let left = compose(&compose(&ta, &tb).unwrap(), &tc).unwrap();
            let right = compose(&ta, &compose(&tb, &tc).unwrap()).unwrap();
            let scale = crate::linalg::norm(ta.matrix()) * crate::linalg::norm(tb.matrix()) * crate::linalg::norm(tc.matrix());
            prop_assert!(dist(left.matrix(), right.matrix()) <= 1e-13 * scale.max(1e-300));
        }
    }
}
