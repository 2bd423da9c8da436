//! Connections with closed-form transports, used as oracles.
//!
//! Each entry carries its linear transport family, a suite of paths on which
//! the integrator is accurate at the default step count, oracle cases that
//! are evaluated without integration, and a convergence case with an exact
//! reference on a path where the coefficients vary.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

use rayon::prelude::*;

use crate::connection::{ChartField, LinearConnection};
use crate::error::{Error, Result};
use crate::gauge::{group_transport, wilson_loop, GaugePotential};
use crate::linalg::{c, diag, dist, expm, identity, real_rows, rotation_angle, CMatrix};
use crate::linear::{convergence_table, ConnectionTransport, ConvergenceTable, IntegratorConfig, Scheme};
use crate::path::{Interval, Orientation, Path, Reparameterization};
use crate::report::{LawCheck, LawReport, Witness};
use crate::transport::TransportFamily;

pub const NAMES: [&str; 5] = ["flat", "constant_gamma", "sphere_levi_civita", "u1_uniform", "su2_constant"];
pub const CONVERGENCE_STEPS: [usize; 5] = [50, 100, 200, 400, 800];

pub const DEFAULT_GAMMA: [[f64; 2]; 2] = [[0.3, -1.0], [0.8, -0.2]];
pub const DEFAULT_THETA0: f64 = FRAC_PI_3;
pub const DEFAULT_FIELD: f64 = PI;
pub const DEFAULT_SU2: [[f64; 3]; 2] = [[1.0, 0.0, 0.0], [0.0, 1.2, 0.3]];

/// A closed-form value to compare the integrator against.
#[derive(Clone, Debug)]
pub enum Oracle {
    /// H(t, s) of the entry's linear family.
    Transport { s: f64, t: f64, matrix: CMatrix },
    /// Rotation angle in [0, π] of H(b, a), compared up to conjugation.
    RotationAngle(f64),
    /// Phase of the Wilson loop, compared modulo 2π.
    U1Phase(f64),
    /// Group element over the whole path.
    Group(CMatrix),
}

#[derive(Clone, Debug)]
pub struct OracleCase {
    pub label: String,
    pub path: Path,
    pub oracle: Oracle,
    pub tol: f64,
}

/// H(t, s) along `path` with an exact reference, for step-refinement studies.
#[derive(Clone, Debug)]
pub struct ConvergenceCase {
    pub path: Path,
    pub s: f64,
    pub t: f64,
    pub exact: CMatrix,
}

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub name: String,
    pub connection: LinearConnection,
    pub potential: Option<GaugePotential>,
    pub paths: Vec<Path>,
    pub oracles: Vec<OracleCase>,
    pub convergence: ConvergenceCase,
}

impl CatalogEntry {
    pub fn family(&self, cfg: IntegratorConfig) -> ConnectionTransport {
        ConnectionTransport::new(self.connection.clone(), cfg)
    }

    /// Residual of every oracle case; the tolerance of each case is its own.
    pub fn check_oracles(&self, cfg: &IntegratorConfig) -> LawReport {
        let family = self.family(*cfg);
        let residuals: Vec<Result<f64>> = self
            .oracles
            .par_iter()
            .map(|case| self.oracle_residual(&family, case, cfg))
            .collect();
        let mut report = LawReport::new();
        for (case, r) in self.oracles.iter().zip(residuals) {
            let mut check = LawCheck::new("oracle", format!("{}:{}", self.name, case.label), case.tol);
            let w = match case.oracle {
                Oracle::Transport { s, t, .. } => Witness::st(s, t),
                _ => Witness::none(),
            };
            check.observe_result(r, w);
            report.push(check.finish());
        }
        report
    }

    fn oracle_residual(&self, family: &ConnectionTransport, case: &OracleCase, cfg: &IntegratorConfig) -> Result<f64> {
        let dom = case.path.domain();
        match &case.oracle {
            Oracle::Transport { s, t, matrix } => Ok(dist(family.transport(&case.path, *s, *t)?.matrix(), matrix)),
            Oracle::RotationAngle(angle) => {
                let h = family.transport(&case.path, dom.a(), dom.b())?;
                Ok((rotation_angle(h.matrix())? - angle).abs())
            }
            Oracle::U1Phase(phase) => {
                let w = wilson_loop(self.require_potential()?, &case.path, cfg)?;
                let got = w.u1_phase.ok_or_else(|| Error::Descriptor("phase oracle needs a U1 potential".into()))?;
                Ok(phase_distance(got, *phase))
            }
            Oracle::Group(g) => {
                let e = group_transport(self.require_potential()?, &case.path, cfg)?;
                Ok(dist(&e.matrix, g))
            }
        }
    }

    fn require_potential(&self) -> Result<&GaugePotential> {
        self.potential
            .as_ref()
            .ok_or_else(|| Error::Descriptor(format!("catalog entry {} has no gauge potential", self.name)))
    }

    pub fn convergence(&self, steps: &[usize], scheme: Scheme) -> Result<ConvergenceTable> {
        let case = &self.convergence;
        convergence_table(
            &self.name,
            &self.connection.along(&case.path),
            case.s,
            case.t,
            &case.exact,
            steps,
            scheme,
        )
    }
}

/// |a − b| modulo 2π, in [0, π].
pub fn phase_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

fn unit_cubic(k: f64) -> Result<Reparameterization> {
    Reparameterization::cubic(Interval::unit(), Interval::unit(), k, Orientation::Preserving)
}

/// Γ = 0 on a 2-dimensional chart.
pub fn flat(fibre_dim: usize) -> Result<CatalogEntry> {
    if fibre_dim == 0 {
        return Err(Error::Descriptor("flat connection needs a positive fibre dimension".into()));
    }
    let eye = identity(fibre_dim);
    let line = Path::line(vec![0.0, 0.0], vec![1.0, 2.0], Interval::unit())?.with_label("line");
    let circle = Path::circle([0.5, -0.5], 1.5, Interval::new(0.0, 2.0 * PI)?)?.with_label("circle");
    let back = Path::line(vec![1.0, 2.0], vec![-1.0, 0.5], Interval::unit())?;
    let joined = line.concat(&back)?.with_label("concat");
    let paths = vec![line.clone(), circle.clone(), joined.clone()];
    let oracles = paths
        .iter()
        .map(|p| {
            let d = p.domain();
            OracleCase {
                label: p.label().to_string(),
                path: p.clone(),
                oracle: Oracle::Transport { s: d.a(), t: d.b(), matrix: eye.clone() },
                tol: 0.0,
            }
        })
        .collect();
    Ok(CatalogEntry {
        name: "flat".into(),
        connection: LinearConnection::new(ChartField::Zero { fibre_dim }),
        potential: None,
        paths,
        oracles,
        convergence: ConvergenceCase {
            path: line.reparameterize(&unit_cubic(0.5)?)?.with_label("cubic_line"),
            s: 0.0,
            t: 1.0,
            exact: eye,
        },
    })
}

/// Γ_γ(s) = G₀·dγ/ds on the real line, so H(t, s) = exp(−(t − s)G₀) on γ(s) = s.
pub fn constant_gamma(g0: CMatrix) -> Result<CatalogEntry> {
    let connection = LinearConnection::new(ChartField::constant(vec![g0.clone()])?);
    let oracle = |s: f64, t: f64, speed: f64| expm(&(&g0 * c(-(t - s) * speed, 0.0)));
    let line = Path::parameter_line(Interval::new(0.0, 2.0)?)?.with_label("line");
    let fast = Path::line(vec![0.0], vec![3.0], Interval::new(0.0, 1.5)?)?.with_label("line_speed2");
    let backward = Path::line(vec![1.0], vec![-1.0], Interval::unit())?.with_label("line_backward");
    let oracles = vec![
        OracleCase {
            label: "line".into(),
            path: line.clone(),
            oracle: Oracle::Transport { s: 0.25, t: 1.75, matrix: oracle(0.25, 1.75, 1.0) },
            tol: 1e-10,
        },
        OracleCase {
            label: "line_reverse_direction".into(),
            path: line.clone(),
            oracle: Oracle::Transport { s: 1.5, t: 0.5, matrix: oracle(1.5, 0.5, 1.0) },
            tol: 1e-10,
        },
        OracleCase {
            label: "line_speed2".into(),
            path: fast.clone(),
            oracle: Oracle::Transport { s: 0.0, t: 1.5, matrix: oracle(0.0, 1.5, 2.0) },
            tol: 1e-10,
        },
        OracleCase {
            label: "line_backward".into(),
            path: backward.clone(),
            oracle: Oracle::Transport { s: 0.0, t: 1.0, matrix: oracle(0.0, 1.0, -2.0) },
            tol: 1e-10,
        },
    ];
    let unit = Path::parameter_line(Interval::unit())?;
    Ok(CatalogEntry {
        name: "constant_gamma".into(),
        connection,
        potential: None,
        paths: vec![line, fast, backward],
        oracles,
        convergence: ConvergenceCase {
            path: unit.reparameterize(&unit_cubic(0.6)?)?.with_label("cubic_line"),
            s: 0.0,
            t: 1.0,
            exact: oracle(0.0, 1.0, 1.0),
        },
    })
}

pub fn constant_gamma_default() -> Result<CatalogEntry> {
    constant_gamma(real_rows(&[&DEFAULT_GAMMA[0], &DEFAULT_GAMMA[1]]))
}

/// H(t, s) along the latitude θ₀ in the (∂_θ, ∂_φ) frame:
/// D⁻¹R(α)D with D = diag(1, sin θ₀) and α = (t − s)cos θ₀.
pub fn latitude_transport(theta0: f64, s: f64, t: f64) -> CMatrix {
    let (sn, cs) = theta0.sin_cos();
    let (sa, ca) = ((t - s) * cs).sin_cos();
    real_rows(&[&[ca, sa * sn], &[-sa / sn, ca]])
}

/// Levi-Civita connection of the unit sphere in (θ, φ) coordinates.
pub fn sphere_levi_civita(theta0: f64) -> Result<CatalogEntry> {
    if !(theta0 > 0.0 && theta0 < PI) {
        return Err(Error::Domain(format!("polar angle {theta0} must lie in (0, π)")));
    }
    let full = Path::latitude(theta0, Interval::new(0.0, 2.0 * PI)?)?.with_label("latitude");
    let quarter = Path::latitude(theta0, Interval::new(0.0, FRAC_PI_2)?)?.with_label("latitude_quarter");
    let equator = Path::latitude(FRAC_PI_2, Interval::new(0.0, 2.0 * PI)?)?.with_label("equator");
    let holonomy = (2.0 * PI * theta0.cos()).rem_euclid(2.0 * PI);
    let folded = holonomy.min(2.0 * PI - holonomy);
    let oracles = vec![
        OracleCase {
            label: "latitude_holonomy_angle".into(),
            path: full.clone(),
            oracle: Oracle::RotationAngle(folded),
            tol: 1e-6,
        },
        OracleCase {
            label: "latitude_quarter_angle".into(),
            path: quarter.clone(),
            oracle: Oracle::RotationAngle((FRAC_PI_2 * theta0.cos()).abs()),
            tol: 1e-6,
        },
        OracleCase {
            label: "equator_angle".into(),
            path: equator.clone(),
            oracle: Oracle::RotationAngle(0.0),
            tol: 1e-6,
        },
        OracleCase {
            label: "latitude_arc".into(),
            path: full.clone(),
            oracle: Oracle::Transport { s: 0.3, t: 2.9, matrix: latitude_transport(theta0, 0.3, 2.9) },
            tol: 1e-10,
        },
    ];
    let (lo, hi) = (PI / 6.0, 2.0 * PI / 3.0);
    let longitude = Path::longitude(0.4, Interval::new(lo, hi)?)?.with_label("longitude");
    Ok(CatalogEntry {
        name: "sphere_levi_civita".into(),
        connection: LinearConnection::new(ChartField::SphereChristoffel),
        potential: None,
        paths: vec![full, quarter, equator],
        oracles,
        convergence: ConvergenceCase {
            exact: diag(&[c(1.0, 0.0), c(lo.sin() / hi.sin(), 0.0)]),
            path: longitude,
            s: lo,
            t: hi,
        },
    })
}

/// Uniform abelian field strength B in the plane.
pub fn u1_uniform(field: f64) -> Result<CatalogEntry> {
    let potential = GaugePotential::u1_uniform(field)?;
    let phase = |z: f64| identity(1) * c(0.0, z).exp();
    let r = 1.0;
    let circle = Path::circle([0.0, 0.0], r, Interval::new(0.0, 2.0 * PI)?)?.with_label("circle");
    let (p, q) = ([0.5, -0.3], [-0.2, 0.9]);
    let segment = Path::line(p.to_vec(), q.to_vec(), Interval::unit())?.with_label("segment");
    // ∫ A·dx along a straight segment from p to q is (iB/2)(p × q).
    let cross = p[0] * q[1] - p[1] * q[0];
    let oracles = vec![
        OracleCase {
            label: "circle_flux_phase".into(),
            path: circle.clone(),
            oracle: Oracle::U1Phase(field * PI * r * r),
            tol: 1e-6,
        },
        OracleCase {
            label: "circle_reversed_phase".into(),
            path: circle.reverse(),
            oracle: Oracle::U1Phase(-field * PI * r * r),
            tol: 1e-6,
        },
        OracleCase {
            label: "circle_arc".into(),
            path: circle.clone(),
            oracle: Oracle::Transport { s: 0.5, t: 2.5, matrix: phase(0.5 * field * r * r * 2.0) },
            tol: 1e-10,
        },
        OracleCase {
            label: "segment".into(),
            path: segment.clone(),
            oracle: Oracle::Transport { s: 0.0, t: 1.0, matrix: phase(0.5 * field * cross) },
            tol: 1e-10,
        },
    ];
    let arc = Path::circle([0.0, 0.0], r, Interval::unit())?;
    let tau = Reparameterization::cubic(Interval::unit(), Interval::unit(), 0.6, Orientation::Preserving)?;
    Ok(CatalogEntry {
        name: "u1_uniform".into(),
        connection: potential.linear_connection(),
        potential: Some(potential),
        paths: vec![circle, segment],
        oracles,
        convergence: ConvergenceCase {
            path: arc.reparameterize(&tau)?.with_label("cubic_arc"),
            s: 0.0,
            t: 1.0,
            exact: phase(0.5 * field * r * r),
        },
    })
}

/// Constant SU(2) potential A_k = (i/2)Σ_j a_kj σ_j.
pub fn su2_constant(a: &[[f64; 3]]) -> Result<CatalogEntry> {
    let potential = GaugePotential::su2_constant(a)?;
    let field = potential.field().clone();
    let step = |from: [f64; 2], to: [f64; 2]| -> Result<CMatrix> {
        let dx = [to[0] - from[0], to[1] - from[1]];
        Ok(expm(&field.contract(&from, &dx)?))
    };
    let corners = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.0, 0.0]];
    let square = Path::polyline(corners.iter().map(|p| p.to_vec()).collect(), Interval::unit())?.with_label("square");
    let factors = corners
        .windows(2)
        .map(|w| step(w[0], w[1]))
        .collect::<Result<Vec<_>>>()?;
    // right action: g = e₁e₂e₃e₄; left action: H = e₄e₃e₂e₁
    let g_square = factors.iter().fold(identity(2), |acc, e| acc * e);
    let h_square = factors.iter().fold(identity(2), |acc, e| e * acc);
    let east = Path::line(vec![0.0, 0.0], vec![1.0, 0.0], Interval::unit())?.with_label("east");
    let north = Path::line(vec![1.0, 0.0], vec![1.0, 1.0], Interval::unit())?.with_label("north");
    let diagonal = Path::line(vec![0.0, 0.0], vec![0.7, -0.4], Interval::unit())?.with_label("diagonal");
    let corner = east.concat(&north)?.with_label("corner");
    let g_corner = step([0.0, 0.0], [1.0, 0.0])? * step([1.0, 0.0], [1.0, 1.0])?;
    let oracles = vec![
        OracleCase {
            label: "diagonal_segment".into(),
            path: diagonal.clone(),
            oracle: Oracle::Transport { s: 0.0, t: 1.0, matrix: step([0.0, 0.0], [0.7, -0.4])? },
            tol: 1e-10,
        },
        OracleCase {
            label: "square_transport".into(),
            path: square.clone(),
            oracle: Oracle::Transport { s: 0.0, t: 1.0, matrix: h_square },
            tol: 1e-10,
        },
        OracleCase {
            label: "square_group".into(),
            path: square.clone(),
            oracle: Oracle::Group(g_square),
            tol: 1e-10,
        },
        OracleCase {
            label: "corner_group".into(),
            path: corner.clone(),
            oracle: Oracle::Group(g_corner),
            tol: 1e-10,
        },
    ];
    Ok(CatalogEntry {
        name: "su2_constant".into(),
        connection: potential.linear_connection(),
        potential: Some(potential),
        paths: vec![diagonal.clone(), square, corner],
        oracles,
        convergence: ConvergenceCase {
            path: diagonal.reparameterize(&unit_cubic(0.6)?)?.with_label("cubic_diagonal"),
            s: 0.0,
            t: 1.0,
            exact: step([0.0, 0.0], [0.7, -0.4])?,
        },
    })
}

/// Entry with default parameters.
pub fn by_name(name: &str) -> Result<CatalogEntry> {
    match name {
        "flat" => flat(2),
        "constant_gamma" => constant_gamma_default(),
        "sphere_levi_civita" => sphere_levi_civita(DEFAULT_THETA0),
        "u1_uniform" => u1_uniform(DEFAULT_FIELD),
        "su2_constant" => su2_constant(&DEFAULT_SU2),
        other => Err(Error::Descriptor(format!(
            "unknown catalog entry {other:?}; expected one of {}",
            NAMES.join(", ")
        ))),
    }
}

pub fn all() -> Result<Vec<CatalogEntry>> {
    NAMES.iter().map(|n| by_name(n)).collect()
}
