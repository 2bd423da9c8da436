//! Lifting a fibre transport to real tensors of type (p, q).
//!
//! A (p, q) tensor over ℝⁿ is stored densely in row-major order with the p
//! contravariant slots first. The lift acts by H on contravariant slots and by
//! (H⁻¹)ᵀ on covariant slots.

use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{inverse, to_real, CMatrix};
use crate::parallel::segment;
use crate::path::{Interval, Orientation, Path, Reparameterization};
use crate::report::{LawCheck, LawReport, Witness};
use crate::transport::{TransportFamily, TransportMatrix};

pub const MAX_RANK: usize = 4;
/// Imaginary parts below this are treated as roundoff when lifting.
pub const REAL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Tensor {
    p: usize,
    q: usize,
    n: usize,
    entries: Vec<f64>,
}

impl Tensor {
    pub fn new(p: usize, q: usize, n: usize, entries: Vec<f64>) -> Result<Self> {
        if p + q > MAX_RANK {
            return Err(Error::Tensor(format!("rank ({p}, {q}) exceeds p + q ≤ {MAX_RANK}")));
        }
        if n == 0 {
            return Err(Error::Tensor("fibre dimension must be positive".into()));
        }
        let len = n.pow((p + q) as u32);
        if entries.len() != len {
            return Err(Error::Tensor(format!(
                "({p}, {q}) tensor over dimension {n} needs {len} entries, got {}",
                entries.len()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::Tensor("tensor entries must be finite".into()));
        }
        Ok(Tensor { p, q, n, entries })
    }

    pub fn zeros(p: usize, q: usize, n: usize) -> Result<Self> {
        Self::new(p, q, n, vec![0.0; n.pow((p + q) as u32)])
    }

    pub fn scalar(value: f64, n: usize) -> Result<Self> {
        Self::new(0, 0, n, vec![value])
    }

    pub fn vector(v: &[f64]) -> Result<Self> {
        Self::new(1, 0, v.len(), v.to_vec())
    }

    pub fn covector(w: &[f64]) -> Result<Self> {
        Self::new(0, 1, w.len(), w.to_vec())
    }

    /// The identity endomorphism as a (1, 1) tensor.
    pub fn identity(n: usize) -> Result<Self> {
        let mut t = Self::zeros(1, 1, n)?;
        for i in 0..n {
            t.entries[i * n + i] = 1.0;
        }
        Ok(t)
    }

    /// Entries uniform in [−1, 1].
    pub fn random<R: Rng>(p: usize, q: usize, n: usize, rng: &mut R) -> Result<Self> {
        let len = n.pow((p + q) as u32);
        Self::new(p, q, n, (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect())
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.p + self.q
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    fn index_of(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.rank()];
        for slot in (0..self.rank()).rev() {
            idx[slot] = flat % self.n;
            flat /= self.n;
        }
        idx
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.entries[self.index_of(idx)]
    }

    fn same_shape(&self, other: &Tensor) -> Result<()> {
        if (self.p, self.q, self.n) != (other.p, other.q, other.n) {
            return Err(Error::Tensor(format!(
                "shape ({}, {}; {}) differs from ({}, {}; {})",
                self.p, self.q, self.n, other.p, other.q, other.n
            )));
        }
        Ok(())
    }

    /// λ′·self + λ″·other.
    pub fn combine(&self, a: f64, other: &Tensor, b: f64) -> Result<Tensor> {
        self.same_shape(other)?;
        let entries = self.entries.iter().zip(&other.entries).map(|(x, y)| a * x + b * y).collect();
        Tensor::new(self.p, self.q, self.n, entries)
    }

    pub fn scale(&self, a: f64) -> Tensor {
        Tensor {
            entries: self.entries.iter().map(|x| a * x).collect(),
            ..self.clone()
        }
    }

    /// Frobenius distance; infinite when shapes differ.
    pub fn dist(&self, other: &Tensor) -> f64 {
        if self.same_shape(other).is_err() {
            return f64::INFINITY;
        }
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// A ⊗ B of type (p₁ + p₂, q₁ + q₂), slots ordered up(A), up(B), down(A), down(B).
    pub fn outer(&self, other: &Tensor) -> Result<Tensor> {
        if self.n != other.n {
            return Err(Error::Tensor(format!("fibre dimensions {} and {} differ", self.n, other.n)));
        }
        let (p, q) = (self.p + other.p, self.q + other.q);
        let mut out = Tensor::zeros(p, q, self.n)?;
        for flat in 0..out.entries.len() {
            let idx = out.multi_index(flat);
            let a: Vec<usize> = idx[..self.p].iter().chain(&idx[p..p + self.q]).copied().collect();
            let b: Vec<usize> = idx[self.p..p].iter().chain(&idx[p + self.q..]).copied().collect();
            out.entries[flat] = self.get(&a) * other.get(&b);
        }
        Ok(out)
    }

    /// Trace over contravariant slot `up` and covariant slot `down` (both
    /// counted within their own group).
    pub fn contract(&self, up: usize, down: usize) -> Result<Tensor> {
        if up >= self.p || down >= self.q {
            return Err(Error::Tensor(format!(
                "cannot contract slots ({up}, {down}) of a ({}, {}) tensor",
                self.p, self.q
            )));
        }
        let down_slot = self.p + down;
        let mut out = Tensor::zeros(self.p - 1, self.q - 1, self.n)?;
        for flat in 0..out.entries.len() {
            let rest = out.multi_index(flat);
            let mut idx = Vec::with_capacity(self.rank());
            let mut it = rest.iter();
            for slot in 0..self.rank() {
                idx.push(if slot == up || slot == down_slot { 0 } else { *it.next().unwrap() });
            }
            let mut sum = 0.0;
            for k in 0..self.n {
                idx[up] = k;
                idx[down_slot] = k;
                sum += self.get(&idx);
            }
            out.entries[flat] = sum;
        }
        Ok(out)
    }

    /// M applied along one slot.
    fn apply_slot(&self, slot: usize, m: &DMatrix<f64>) -> Tensor {
        let n = self.n;
        let stride = n.pow((self.rank() - 1 - slot) as u32);
        let mut out = vec![0.0; self.entries.len()];
        for (flat, o) in out.iter_mut().enumerate() {
            let i = (flat / stride) % n;
            let base = flat - i * stride;
            *o = (0..n).map(|j| m[(i, j)] * self.entries[base + j * stride]).sum();
        }
        Tensor {
            entries: out,
            ..self.clone()
        }
    }
}

/// ⟨ω, v⟩ = ω_i v^i.
pub fn pairing(omega: &Tensor, v: &Tensor) -> Result<f64> {
    if (omega.p, omega.q) != (0, 1) || (v.p, v.q) != (1, 0) || omega.n != v.n {
        return Err(Error::Tensor("pairing needs a covector and a vector of equal dimension".into()));
    }
    Ok(omega.entries.iter().zip(&v.entries).map(|(a, b)| a * b).sum())
}

/// The lift of a transport matrix to (p, q) tensors.
#[derive(Clone, Debug)]
pub struct STransportMap {
    base: TransportMatrix,
    p: usize,
    q: usize,
    forward: DMatrix<f64>,
    dual: DMatrix<f64>,
}

pub fn lift(base: &TransportMatrix, p: usize, q: usize) -> Result<STransportMap> {
    if p + q > MAX_RANK {
        return Err(Error::Tensor(format!("rank ({p}, {q}) exceeds p + q ≤ {MAX_RANK}")));
    }
    let h = real_part(base.matrix())?;
    let dual = real_part(&inverse(base.matrix())?)?.transpose();
    Ok(STransportMap {
        base: base.clone(),
        p,
        q,
        forward: h,
        dual,
    })
}

fn real_part(m: &CMatrix) -> Result<DMatrix<f64>> {
    let scale = 1.0 + crate::linalg::norm(m);
    to_real(m, REAL_TOL * scale).ok_or_else(|| Error::Tensor("tensor lift needs a real transport matrix".into()))
}

impl STransportMap {
    pub fn base(&self) -> &TransportMatrix {
        &self.base
    }

    pub fn ranks(&self) -> (usize, usize) {
        (self.p, self.q)
    }

    pub fn n(&self) -> usize {
        self.base.dim()
    }

    /// The same base transport lifted to another rank.
    pub fn with_ranks(&self, p: usize, q: usize) -> Result<STransportMap> {
        lift(&self.base, p, q)
    }

    /// The n^{p+q} × n^{p+q} matrix of the lift on flattened tensors.
    pub fn matrix(&self) -> Result<DMatrix<f64>> {
        let n = self.n();
        let len = n.pow((self.p + self.q) as u32);
        let mut m = DMatrix::zeros(len, len);
        for j in 0..len {
            let mut e = vec![0.0; len];
            e[j] = 1.0;
            let image = apply_tensor(self, &Tensor::new(self.p, self.q, n, e)?)?;
            m.set_column(j, &nalgebra::DVector::from_vec(image.entries));
        }
        Ok(m)
    }
}

/// S(T): H on every contravariant slot, (H⁻¹)ᵀ on every covariant slot.
pub fn apply_tensor(map: &STransportMap, t: &Tensor) -> Result<Tensor> {
    if (t.p, t.q) != (map.p, map.q) || t.n != map.n() {
        return Err(Error::Tensor(format!(
            "lift of rank ({}, {}) over dimension {} applied to a ({}, {}) tensor over dimension {}",
            map.p,
            map.q,
            map.n(),
            t.p,
            t.q,
            t.n
        )));
    }
    let mut out = t.clone();
    for slot in 0..t.p {
        out = out.apply_slot(slot, &map.forward);
    }
    for slot in t.p..t.rank() {
        out = out.apply_slot(slot, &map.dual);
    }
    Ok(out)
}

/// Lifts `base` to the rank of `t` and applies it.
pub fn transport_tensor(base: &TransportMatrix, t: &Tensor) -> Result<Tensor> {
    apply_tensor(&lift(base, t.p, t.q)?, t)
}

fn lift_dist(a: &TransportMatrix, b: &TransportMatrix, p: usize, q: usize) -> Result<f64> {
    let ma = lift(a, p, q)?.matrix()?;
    let mb = lift(b, p, q)?.matrix()?;
    Ok((ma - mb).norm())
}

fn whole(family: &(impl TransportFamily + ?Sized), path: &Path) -> Result<TransportMatrix> {
    let dom = path.domain();
    family.transport(path, dom.a(), dom.b())
}

fn inverse_tm(m: &TransportMatrix) -> Result<TransportMatrix> {
    crate::transport::invert(m)
}

/// Behavior of the lifted whole-path maps φ_η under reparameterization by τ
/// (preserving or reversing), reversal, the point path at η(a) and the
/// product of the two halves of η split at 0.4, on every listed rank.
pub fn orientation_behavior<F: TransportFamily + ?Sized>(
    family: &F,
    path: &Path,
    tau: &Reparameterization,
    ranks: &[(usize, usize)],
    tol: f64,
) -> LawReport {
    let label = path.label().to_string();
    let law = match tau.orientation() {
        Orientation::Preserving => "orientation_preserving",
        Orientation::Reversing => "orientation_reversing",
    };
    let mut reparam = LawCheck::new(law, label.clone(), tol);
    let mut reversal = LawCheck::new("canonical_inverse", label.clone(), tol);
    let mut point = LawCheck::new("point_path", label.clone(), tol);
    let mut product = LawCheck::new("tensor_product_law", label, tol);

    let base = whole(family, path);
    let composed = path.reparameterize(tau).and_then(|p| whole(family, &p));
    let reversed = whole(family, &path.reverse());
    let point_map = Path::point(path.start(), path.domain().a()).and_then(|p| whole(family, &p));
    let halves = (|| {
        let unit = path.canonical()?;
        let first = segment(&unit, 0.0, 0.4)?.canonical()?;
        let second = segment(&unit, 0.4, 1.0)?.canonical()?;
        let joined = whole(family, &first.concat(&second)?)?;
        Ok::<_, Error>((whole(family, &first)?, whole(family, &second)?, joined))
    })();

    for &(p, q) in ranks {
        let w = Witness::st(p as f64, q as f64);
        reparam.observe_result(
            (|| {
                let b = base.as_ref().map_err(copy_err)?;
                let c = composed.as_ref().map_err(copy_err)?;
                let target = match tau.orientation() {
                    Orientation::Preserving => b.clone(),
                    Orientation::Reversing => inverse_tm(b)?,
                };
                lift_dist(c, &target, p, q)
            })(),
            w,
        );
        reversal.observe_result(
            (|| lift_dist(reversed.as_ref().map_err(copy_err)?, &inverse_tm(base.as_ref().map_err(copy_err)?)?, p, q))(),
            w,
        );
        point.observe_result(
            (|| {
                let m = point_map.as_ref().map_err(copy_err)?;
                let id = TransportMatrix::identity(m.dim(), m.source());
                lift_dist(m, &id, p, q)
            })(),
            w,
        );
        product.observe_result(
            (|| {
                let (h1, h2, joined) = halves.as_ref().map_err(copy_err)?;
                let lifted = |m: &TransportMatrix| lift(m, p, q)?.matrix();
                Ok((lifted(joined)? - lifted(h2)? * lifted(h1)?).norm())
            })(),
            w,
        );
    }
    let mut report = LawReport::new();
    for c in [reparam, reversal, point, product] {
        report.push(c.finish());
    }
    report
}

fn copy_err(e: &Error) -> Error {
    Error::Numerical(e.to_string())
}

/// Random rank pair with p + q ≤ `max_rank`.
fn random_ranks<R: Rng>(rng: &mut R, max_rank: usize) -> (usize, usize) {
    let r = rng.random_range(0..=max_rank);
    let p = rng.random_range(0..=r);
    (p, r - p)
}

/// Linearity, ⊗-distribution, contraction commutation, scalar invariance and
/// pairing preservation of the lift of `base`, on `samples` random tensors
/// with p + q ≤ `max_rank` drawn from a seeded generator.
pub fn check_tensor_laws(
    base: &TransportMatrix,
    max_rank: usize,
    samples: usize,
    seed: u64,
    tol: f64,
) -> LawReport {
    let label = format!("H({} -> {})", base.source(), base.target());
    let mut rng = StdRng::seed_from_u64(seed);
    let n = base.dim();
    let max_rank = max_rank.min(MAX_RANK);
    let mut linear = LawCheck::new("tensor_linearity", label.clone(), tol);
    let mut product = LawCheck::new("tensor_outer", label.clone(), tol);
    let mut contraction = LawCheck::new("tensor_contraction", label.clone(), tol);
    let mut scalar = LawCheck::new("tensor_scalar", label.clone(), tol);
    let mut pair = LawCheck::new("tensor_pairing", label, tol);

    for k in 0..samples {
        let w = Witness::at(k as f64);
        let (p, q) = random_ranks(&mut rng, max_rank);
        let (l1, l2) = (rng.random_range(-2.0..=2.0), rng.random_range(-2.0..=2.0));
        let t1 = Tensor::random(p, q, n, &mut rng);
        let t2 = Tensor::random(p, q, n, &mut rng);
        linear.observe_result(
            (|| {
                let (t1, t2) = (t1?, t2?);
                let lhs = transport_tensor(base, &t1.combine(l1, &t2, l2)?)?;
                let rhs = transport_tensor(base, &t1)?.combine(l1, &transport_tensor(base, &t2)?, l2)?;
                Ok(lhs.dist(&rhs))
            })(),
            w,
        );

        let (p1, q1) = random_ranks(&mut rng, max_rank);
        let (p2, q2) = random_ranks(&mut rng, max_rank - p1 - q1);
        let a = Tensor::random(p1, q1, n, &mut rng);
        let b = Tensor::random(p2, q2, n, &mut rng);
        product.observe_result(
            (|| {
                let (a, b) = (a?, b?);
                let lhs = transport_tensor(base, &a.outer(&b)?)?;
                let rhs = transport_tensor(base, &a)?.outer(&transport_tensor(base, &b)?)?;
                Ok(lhs.dist(&rhs))
            })(),
            w,
        );

        let r = rng.random_range(2..=max_rank.max(2));
        let pc = rng.random_range(1..r);
        let (up, down) = (rng.random_range(0..pc), rng.random_range(0..r - pc));
        let t = Tensor::random(pc, r - pc, n, &mut rng);
        contraction.observe_result(
            (|| {
                let t = t?;
                let lhs = transport_tensor(base, &t)?.contract(up, down)?;
                let rhs = transport_tensor(base, &t.contract(up, down)?)?;
                Ok(lhs.dist(&rhs))
            })(),
            w,
        );

        let value = rng.random_range(-5.0..=5.0);
        scalar.observe_result(
            (|| {
                let s = Tensor::scalar(value, n)?;
                Ok(transport_tensor(base, &s)?.dist(&s))
            })(),
            w,
        );

        let v = Tensor::random(1, 0, n, &mut rng);
        let omega = Tensor::random(0, 1, n, &mut rng);
        pair.observe_result(
            (|| {
                let (v, omega) = (v?, omega?);
                let before = pairing(&omega, &v)?;
                let after = pairing(&transport_tensor(base, &omega)?, &transport_tensor(base, &v)?)?;
                Ok((before - after).abs())
            })(),
            w,
        );
    }
    let mut report = LawReport::new();
    for c in [linear, product, contraction, scalar, pair] {
        report.push(c.finish());
    }
    report
}

/// The default reparameterization set for orientation checks on `dom`: the
/// identity, an affine map from a shifted and stretched interval, and the
/// canonical reversal.
pub fn orientation_taus(dom: Interval) -> Result<Vec<Reparameterization>> {
    let shifted = Interval::new(dom.a() - 1.0, dom.a() - 1.0 + 2.0 * dom.len().max(1.0))?;
    Ok(vec![
        Reparameterization::identity(dom)?,
        Reparameterization::affine(shifted, dom, Orientation::Preserving)?,
        Reparameterization::canonical_reverse(dom)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::{ChartField, LinearConnection};
    use crate::linalg::{identity, real_rows};
    use crate::linear::{ConnectionTransport, IntegratorConfig};
    use proptest::prelude::*;

    fn tm(rows: &[&[f64]]) -> TransportMatrix {
        TransportMatrix::new(0.0, 1.0, real_rows(rows)).unwrap()
    }

    fn generic() -> TransportMatrix {
        tm(&[&[1.2, -0.4, 0.1], &[0.3, 0.9, -0.2], &[0.0, 0.5, 1.1]])
    }

    #[test]
    fn identity_lift_is_identity() {
        let id = TransportMatrix::identity(3, 0.0);
        for (p, q) in [(0, 0), (1, 0), (0, 1), (2, 1), (1, 3)] {
            let m = lift(&id, p, q).unwrap().matrix().unwrap();
            assert_eq!(m, DMatrix::identity(m.nrows(), m.ncols()));
        }
    }

    #[test]
    fn vector_lift_is_base_matrix() {
        let h = generic();
        let m = lift(&h, 1, 0).unwrap().matrix().unwrap();
        assert_eq!(m, to_real(h.matrix(), 0.0).unwrap());
    }

    #[test]
    fn covector_example() {
        let h = tm(&[&[2.0, 0.0], &[0.0, 1.0]]);
        let w = Tensor::covector(&[1.0, 0.0]).unwrap();
        let out = transport_tensor(&h, &w).unwrap();
        assert_eq!(out.entries(), &[0.5, 0.0]);
    }

    #[test]
    fn lift_matrix_matches_kronecker_oracle() {
        let h = generic();
        let hr = to_real(h.matrix(), 0.0).unwrap();
        let dual = hr.clone().try_inverse().unwrap().transpose();
        let oracle = hr.kronecker(&dual);
        let m = lift(&h, 1, 1).unwrap().matrix().unwrap();
        assert!((m - oracle).norm() < 1e-13);
    }

    #[test]
    fn contraction_definitions() {
        let v = Tensor::vector(&[1.0, 2.0, 3.0]).unwrap();
        let w = Tensor::covector(&[0.5, -1.0, 2.0]).unwrap();
        let c = v.outer(&w).unwrap().contract(0, 0).unwrap();
        assert_eq!(c.entries(), &[pairing(&w, &v).unwrap()]);
        assert_eq!(Tensor::identity(3).unwrap().contract(0, 0).unwrap().entries(), &[3.0]);
        assert!(v.contract(0, 0).is_err());
    }

    #[test]
    fn outer_orders_contravariant_slots_first() {
        let w = Tensor::covector(&[1.0, 2.0]).unwrap();
        let v = Tensor::vector(&[3.0, 5.0]).unwrap();
        let t = w.outer(&v).unwrap();
        assert_eq!((t.p(), t.q()), (1, 1));
        // t^i_j = w_j v^i
        assert_eq!(t.get(&[1, 0]), 5.0);
        assert_eq!(t.get(&[0, 1]), 6.0);
    }

    #[test]
    fn zero_scalar_and_rank_errors() {
        let h = generic();
        let z = Tensor::zeros(2, 1, 3).unwrap();
        assert_eq!(transport_tensor(&h, &z).unwrap(), z);
        let s = Tensor::scalar(4.5, 3).unwrap();
        assert_eq!(transport_tensor(&h, &s).unwrap(), s);
        let map = lift(&h, 1, 1).unwrap();
        assert!(apply_tensor(&map, &Tensor::vector(&[1.0, 0.0, 0.0]).unwrap()).is_err());
        assert!(Tensor::zeros(3, 2, 2).is_err());
        assert!(Tensor::new(1, 0, 2, vec![1.0]).is_err());
        let complex = TransportMatrix::new(0.0, 1.0, identity(1) * crate::linalg::c(0.0, 1.0)).unwrap();
        assert!(lift(&complex, 1, 0).is_err());
        let singular = tm(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert!(lift(&singular, 0, 1).is_err());
    }

    #[test]
    fn random_laws_hold() {
        let report = check_tensor_laws(&generic(), 3, 200, 7, 1e-12);
        assert!(report.passed(), "{:?}", report.failing());
    }

    #[test]
    fn orientation_behavior_on_constant_gamma() {
        let g = real_rows(&[&[0.0, -1.0], &[1.0, 0.2]]);
        let family = ConnectionTransport::new(
            LinearConnection::new(ChartField::constant(vec![g]).unwrap()),
            IntegratorConfig::default(),
        );
        let path = Path::parameter_line(Interval::new(0.0, 1.5).unwrap()).unwrap();
        let ranks = [(0, 0), (1, 0), (0, 1), (1, 1), (2, 1)];
        for tau in orientation_taus(path.domain()).unwrap() {
            let report = orientation_behavior(&family, &path, &tau, &ranks, 1e-10);
            assert!(report.passed(), "{:?}", report.failing());
        }
    }

    proptest! {
        #[test]
        fn contraction_commutes(entries in proptest::collection::vec(-1.0f64..1.0, 27), up in 0usize..2) {
            let t = Tensor::new(2, 1, 3, entries).unwrap();
            let h = generic();
            let lhs = transport_tensor(&h, &t).unwrap().contract(up, 0).unwrap();
            let rhs = transport_tensor(&h, &t.contract(up, 0).unwrap()).unwrap();
            prop_assert!(lhs.dist(&rhs) < 1e-12);
        }

        #[test]
        fn pairing_is_preserved(v in proptest::collection::vec(-1.0f64..1.0, 3), w in proptest::collection::vec(-1.0f64..1.0, 3)) {
            let h = generic();
            let (v, w) = (Tensor::vector(&v).unwrap(), Tensor::covector(&w).unwrap());
            let before = pairing(&w, &v).unwrap();
            let after = pairing(&transport_tensor(&h, &w).unwrap(), &transport_tensor(&h, &v).unwrap()).unwrap();
            prop_assert!((before - after).abs() < 1e-12);
        }
    }
}
