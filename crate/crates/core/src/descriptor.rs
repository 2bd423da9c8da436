//! JSON descriptors for paths, reparameterizations, connections, gauge
//! potentials and transport families.
//!
//! Complex matrix entries are written either as a number or as `[re, im]`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::catalog;
use crate::connection::{ChartField, LinearConnection};
use crate::error::{Error, Result};
use crate::gauge::{GaugePotential, Group};
use crate::linalg::{c, inverse, CMatrix};
use crate::linear::{ConnectionTransport, FrameFunction, FrameTransport, IntegratorConfig};
use crate::path::{Interp, Interval, Orientation, Path, Reparameterization};
use crate::transport::mock::{DomainLengthMock, ParameterSpeedMock};
use crate::transport::TransportFamily;

/// Nesting limit for recursive path descriptors.
pub const MAX_DEPTH: usize = 64;
/// Largest fibre dimension a descriptor may request.
pub const MAX_FIBRE_DIM: usize = 64;

fn fibre_dim_guard(n: usize) -> Result<usize> {
    if n == 0 || n > MAX_FIBRE_DIM {
        return Err(Error::Descriptor(format!("fibre dimension {n} not in 1..={MAX_FIBRE_DIM}")));
    }
    Ok(n)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexDesc {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexDesc {
    fn value(self) -> num_complex::Complex64 {
        match self {
            ComplexDesc::Real(re) => c(re, 0.0),
            ComplexDesc::Pair([re, im]) => c(re, im),
        }
    }
}

/// Square matrix as a list of rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixDesc(pub Vec<Vec<ComplexDesc>>);

impl MatrixDesc {
    pub fn build(&self) -> Result<CMatrix> {
        let n = self.0.len();
        if n == 0 || self.0.iter().any(|row| row.len() != n) {
            return Err(Error::Descriptor("matrix must be square and non-empty".into()));
        }
        let entries: Vec<_> = self.0.iter().flatten().map(|z| z.value()).collect();
        let m = CMatrix::from_row_slice(n, n, &entries);
        if !crate::linalg::is_finite(&m) {
            return Err(Error::Descriptor("matrix entries must be finite".into()));
        }
        Ok(m)
    }

    pub fn from_matrix(m: &CMatrix) -> Self {
        MatrixDesc(
            (0..m.nrows())
                .map(|i| {
                    (0..m.ncols())
                        .map(|j| {
                            let z = m[(i, j)];
                            if z.im == 0.0 {
                                ComplexDesc::Real(z.re)
                            } else {
                                ComplexDesc::Pair([z.re, z.im])
                            }
                        })
                        .collect()
                })
                .collect(),
        )
    }
}

fn unit() -> Interval {
    Interval::unit()
}

fn preserving() -> Orientation {
    Orientation::Preserving
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReparamDesc {
    Affine {
        source: Interval,
        target: Interval,
        #[serde(default = "preserving")]
        orientation: Orientation,
    },
    Cubic {
        source: Interval,
        target: Interval,
        k: f64,
        #[serde(default = "preserving")]
        orientation: Orientation,
    },
    Identity {
        domain: Interval,
    },
    CanonicalReverse {
        domain: Interval,
    },
}

impl ReparamDesc {
    pub fn build(&self) -> Result<Reparameterization> {
        match self {
            ReparamDesc::Affine { source, target, orientation } => {
                Reparameterization::affine(*source, *target, *orientation)
            }
            ReparamDesc::Cubic { source, target, k, orientation } => {
                Reparameterization::cubic(*source, *target, *k, *orientation)
            }
            ReparamDesc::Identity { domain } => Reparameterization::identity(*domain),
            ReparamDesc::CanonicalReverse { domain } => Reparameterization::canonical_reverse(*domain),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PathDesc {
    Line {
        from: Vec<f64>,
        to: Vec<f64>,
        #[serde(default = "unit")]
        domain: Interval,
    },
    ParameterLine {
        domain: Interval,
    },
    Circle {
        center: [f64; 2],
        radius: f64,
        domain: Interval,
    },
    Latitude {
        theta0: f64,
        domain: Interval,
    },
    Longitude {
        phi0: f64,
        domain: Interval,
    },
    Polyline {
        points: Vec<Vec<f64>>,
        #[serde(default = "unit")]
        domain: Interval,
    },
    Point {
        x: Vec<f64>,
        #[serde(default)]
        at: f64,
    },
    Samples {
        s: Vec<f64>,
        x: Vec<Vec<f64>>,
        #[serde(default)]
        interp: InterpDesc,
    },
    Restrict {
        path: Box<PathDesc>,
        domain: Interval,
    },
    Reverse {
        path: Box<PathDesc>,
    },
    Concat {
        first: Box<PathDesc>,
        second: Box<PathDesc>,
    },
    Reparam {
        path: Box<PathDesc>,
        tau: ReparamDesc,
    },
    Canonical {
        path: Box<PathDesc>,
    },
    /// A suite path of a catalog entry, by label.
    Catalog {
        entry: String,
        label: String,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpDesc {
    Linear,
    #[default]
    Cubic,
}

impl PathDesc {
    pub fn build(&self) -> Result<Path> {
        self.build_at(0)
    }

    fn build_at(&self, depth: usize) -> Result<Path> {
        if depth > MAX_DEPTH {
            return Err(Error::Descriptor(format!("path descriptor nested deeper than {MAX_DEPTH}")));
        }
        let inner = |p: &PathDesc| p.build_at(depth + 1);
        match self {
            PathDesc::Line { from, to, domain } => Path::line(from.clone(), to.clone(), *domain),
            PathDesc::ParameterLine { domain } => Path::parameter_line(*domain),
            PathDesc::Circle { center, radius, domain } => Path::circle(*center, *radius, *domain),
            PathDesc::Latitude { theta0, domain } => Path::latitude(*theta0, *domain),
            PathDesc::Longitude { phi0, domain } => Path::longitude(*phi0, *domain),
            PathDesc::Polyline { points, domain } => Path::polyline(points.clone(), *domain),
            PathDesc::Point { x, at } => Path::point(x.clone(), *at),
            PathDesc::Samples { s, x, interp } => Path::samples(
                s.clone(),
                x.clone(),
                match interp {
                    InterpDesc::Linear => Interp::Linear,
                    InterpDesc::Cubic => Interp::Cubic,
                },
            ),
            PathDesc::Restrict { path, domain } => inner(path)?.restrict(*domain),
            PathDesc::Reverse { path } => Ok(inner(path)?.reverse()),
            PathDesc::Concat { first, second } => inner(first)?.concat(&inner(second)?),
            PathDesc::Reparam { path, tau } => inner(path)?.reparameterize(&tau.build()?),
            PathDesc::Canonical { path } => inner(path)?.canonical(),
            PathDesc::Catalog { entry, label } => {
                let e = catalog::by_name(entry)?;
                e.paths
                    .iter()
                    .find(|p| p.label() == label)
                    .cloned()
                    .ok_or_else(|| Error::Descriptor(format!("catalog entry {entry} has no path {label:?}")))
            }
        }
    }
}

/// SU(2) coefficients: one row per chart direction, or a single row for the
/// first direction only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Su2Coefficients {
    PerDirection(Vec<[f64; 3]>),
    Single([f64; 3]),
}

impl Su2Coefficients {
    fn rows(&self) -> Vec<[f64; 3]> {
        match self {
            Su2Coefficients::PerDirection(rows) => rows.clone(),
            Su2Coefficients::Single(row) => vec![*row],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialDesc {
    Zero { group: Group, fibre_dim: usize },
    U1Uniform { field: f64 },
    Su2Constant { a: Su2Coefficients },
    Constant { group: Group, components: Vec<MatrixDesc> },
    Catalog { name: String },
}

impl PotentialDesc {
    pub fn build(&self) -> Result<GaugePotential> {
        match self {
            PotentialDesc::Zero { group, fibre_dim } => GaugePotential::zero(*group, fibre_dim_guard(*fibre_dim)?),
            PotentialDesc::U1Uniform { field } => GaugePotential::u1_uniform(*field),
            PotentialDesc::Su2Constant { a } => GaugePotential::su2_constant(&a.rows()),
            PotentialDesc::Constant { group, components } => GaugePotential::new(
                *group,
                ChartField::constant(components.iter().map(MatrixDesc::build).collect::<Result<_>>()?)?,
            ),
            PotentialDesc::Catalog { name } => catalog::by_name(name)?
                .potential
                .ok_or_else(|| Error::Descriptor(format!("catalog entry {name} has no gauge potential"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConnectionDesc {
    Flat {
        fibre_dim: usize,
    },
    /// Γ_γ = Σ_i M_i dγ^i/ds.
    Constant {
        components: Vec<MatrixDesc>,
    },
    U1Uniform {
        field: f64,
    },
    /// `theta0` only selects the catalog paths; the connection does not depend on it.
    SphereLeviCivita {
        #[serde(default)]
        theta0: Option<f64>,
    },
    Su2Constant {
        a: Su2Coefficients,
    },
    /// The potential acting on the fibre from the left.
    Gauge {
        potential: PotentialDesc,
    },
    Catalog {
        name: String,
    },
}

impl ConnectionDesc {
    pub fn build(&self) -> Result<LinearConnection> {
        match self {
            ConnectionDesc::Flat { fibre_dim } => Ok(LinearConnection::new(ChartField::Zero {
                fibre_dim: fibre_dim_guard(*fibre_dim)?,
            })),
            ConnectionDesc::Constant { components } => Ok(LinearConnection::new(ChartField::constant(
                components.iter().map(MatrixDesc::build).collect::<Result<_>>()?,
            )?)),
            ConnectionDesc::U1Uniform { field } => Ok(GaugePotential::u1_uniform(*field)?.linear_connection()),
            ConnectionDesc::SphereLeviCivita { theta0 } => {
                if let Some(t) = theta0 {
                    if !(*t > 0.0 && *t < std::f64::consts::PI) {
                        return Err(Error::Descriptor(format!("polar angle {t} must lie in (0, π)")));
                    }
                }
                Ok(LinearConnection::new(ChartField::SphereChristoffel))
            }
            ConnectionDesc::Su2Constant { a } => Ok(GaugePotential::su2_constant(&a.rows())?.linear_connection()),
            ConnectionDesc::Gauge { potential } => Ok(potential.build()?.linear_connection()),
            ConnectionDesc::Catalog { name } => Ok(catalog::by_name(name)?.connection),
        }
    }
}

/// A transport family: connection-driven, frame-generated, or a negative control.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyDesc {
    Connection {
        connection: ConnectionDesc,
    },
    /// H(t, s) = F⁻¹(γ(t))F(γ(s)) with F(x) = base + Σ_i x^i gradient_i.
    FrameAffine {
        base: MatrixDesc,
        #[serde(default)]
        gradient: Vec<MatrixDesc>,
    },
    MockDomainLength {
        generator: MatrixDesc,
    },
    MockParameterSpeed {
        generator: MatrixDesc,
    },
}

impl FamilyDesc {
    pub fn build(&self, cfg: IntegratorConfig) -> Result<Arc<dyn TransportFamily>> {
        Ok(match self {
            FamilyDesc::Connection { connection } => Arc::new(ConnectionTransport::new(connection.build()?, cfg)),
            FamilyDesc::FrameAffine { base, gradient } => {
                let base = base.build()?;
                let n = base.nrows();
                inverse(&base)?;
                let grads = gradient.iter().map(MatrixDesc::build).collect::<Result<Vec<_>>>()?;
                if grads.iter().any(|g| g.nrows() != n) {
                    return Err(Error::Descriptor("frame gradient sizes must match the base".into()));
                }
                let frame = FrameFunction::new(n, move |path, s| {
                    let x = path.eval(s)?;
                    if grads.len() > x.len() {
                        return Err(Error::Dimension {
                            expected: grads.len(),
                            got: x.len(),
                        });
                    }
                    Ok(grads.iter().zip(&x).fold(base.clone(), |acc, (g, xi)| acc + g * c(*xi, 0.0)))
                });
                Arc::new(FrameTransport { frame })
            }
            FamilyDesc::MockDomainLength { generator } => Arc::new(DomainLengthMock {
                generator: generator.build()?,
            }),
            FamilyDesc::MockParameterSpeed { generator } => Arc::new(ParameterSpeedMock {
                generator: generator.build()?,
            }),
        })
    }
}

pub fn parse_path(json: &str) -> Result<Path> {
    serde_json::from_str::<PathDesc>(json)?.build()
}

pub fn parse_connection(json: &str) -> Result<LinearConnection> {
    serde_json::from_str::<ConnectionDesc>(json)?.build()
}

pub fn parse_potential(json: &str) -> Result<GaugePotential> {
    serde_json::from_str::<PotentialDesc>(json)?.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dist, identity, real_rows};

    #[test]
    fn paths_round_trip_through_json() {
        let json = r#"{"type":"concat",
            "first":{"type":"line","from":[0,0],"to":[1,0]},
            "second":{"type":"reverse","path":{"type":"line","from":[1,2],"to":[1,0]}}}"#;
        let p = parse_path(json).unwrap();
        assert_eq!(p.eval(0.75).unwrap(), vec![1.0, 1.0]);
        let desc: PathDesc = serde_json::from_str(json).unwrap();
        let again: PathDesc = serde_json::from_str(&serde_json::to_string(&desc).unwrap()).unwrap();
        assert_eq!(desc, again);
    }

    #[test]
    fn all_path_kinds_build() {
        let cases = [
            r#"{"type":"parameter_line","domain":[0,2]}"#,
            r#"{"type":"circle","center":[0,0],"radius":1,"domain":[0,6.283185307179586]}"#,
            r#"{"type":"latitude","theta0":1.0,"domain":[0,1]}"#,
            r#"{"type":"longitude","phi0":0.3,"domain":[0.5,2.0]}"#,
            r#"{"type":"polyline","points":[[0,0],[1,0],[1,1]]}"#,
            r#"{"type":"point","x":[1,2],"at":0.5}"#,
            r#"{"type":"samples","s":[0,0.5,1],"x":[[0],[1],[4]],"interp":"linear"}"#,
            r#"{"type":"restrict","path":{"type":"parameter_line","domain":[0,2]},"domain":[0.5,1]}"#,
            r#"{"type":"reparam","path":{"type":"parameter_line","domain":[0,1]},
                "tau":{"type":"cubic","source":[0,1],"target":[0,1],"k":0.3}}"#,
            r#"{"type":"canonical","path":{"type":"parameter_line","domain":[2,5]}}"#,
            r#"{"type":"catalog","entry":"sphere_levi_civita","label":"latitude"}"#,
        ];
        for json in cases {
            parse_path(json).unwrap_or_else(|e| panic!("{json}: {e}"));
        }
    }

    #[test]
    fn malformed_descriptors_are_errors() {
        for json in [
            r#"{"type":"line","from":[0],"to":[1,2]}"#,
            r#"{"type":"circle","center":[0,0],"radius":-1,"domain":[0,1]}"#,
            r#"{"type":"spiral"}"#,
            r#"{"type":"line","from":[0],"to":[1],"extra":1}"#,
            r#"{"type":"concat","first":{"type":"line","from":[0],"to":[1]},"second":{"type":"line","from":[5],"to":[6]}}"#,
            r#"{"type":"catalog","entry":"flat","label":"nope"}"#,
            r#"[1,2"#,
        ] {
            assert!(parse_path(json).is_err(), "{json}");
        }
    }

    #[test]
    fn deep_nesting_is_rejected() {
        let mut json = r#"{"type":"parameter_line","domain":[0,1]}"#.to_string();
        for _ in 0..(MAX_DEPTH + 2) {
            json = format!(r#"{{"type":"reverse","path":{json}}}"#);
        }
        assert!(matches!(parse_path(&json), Err(Error::Descriptor(_))));
    }

    #[test]
    fn connections_and_potentials() {
        let c1 = parse_connection(r#"{"type":"constant","components":[[[0,1],[[0,-1],0]]]}"#).unwrap();
        assert_eq!(c1.fibre_dim(), 2);
        let line = Path::parameter_line(Interval::unit()).unwrap();
        let g = c1.coefficients(&line, 0.5).unwrap();
        assert_eq!(g[(1, 0)], c(0.0, -1.0));
        assert!(parse_connection(r#"{"type":"catalog","name":"nope"}"#).is_err());
        assert!(parse_connection(r#"{"type":"sphere_levi_civita","theta0":4.0}"#).is_err());
        parse_connection(r#"{"type":"sphere_levi_civita"}"#).unwrap();
        parse_connection(r#"{"type":"gauge","potential":{"type":"u1_uniform","field":1.0}}"#).unwrap();

        let su2 = parse_potential(r#"{"type":"su2_constant","a":[[1,0,0],[0,1,0]]}"#).unwrap();
        assert_eq!(su2.group(), Group::SU2);
        parse_potential(r#"{"type":"su2_constant","a":[1,0,0]}"#).unwrap();
        assert!(parse_potential(r#"{"type":"constant","group":"su2","components":[[[1,0],[0,-1]]]}"#).is_err());
        assert!(parse_potential(r#"{"type":"catalog","name":"flat"}"#).is_err());
    }

    #[test]
    fn frame_family_is_algebraic() {
        let desc: FamilyDesc = serde_json::from_str(
            r#"{"type":"frame_affine","base":[[2,0],[0,1]],"gradient":[[[1,0],[0,0]]]}"#,
        )
        .unwrap();
        let fam = desc.build(IntegratorConfig::default()).unwrap();
        let line = Path::parameter_line(Interval::unit()).unwrap();
        let h = fam.transport(&line, 0.0, 1.0).unwrap();
        assert!(dist(h.matrix(), &real_rows(&[&[2.0 / 3.0, 0.0], &[0.0, 1.0]])) < 1e-15);
        assert!(dist(fam.transport(&line, 0.4, 0.4).unwrap().matrix(), &identity(2)) < 1e-15);
    }

    #[test]
    fn matrix_desc_round_trip() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 2.0), c(-1.0, 0.5), c(0.0, 0.0)]);
        assert_eq!(MatrixDesc::from_matrix(&m).build().unwrap(), m);
        assert!(MatrixDesc(vec![vec![ComplexDesc::Real(1.0)], vec![]]).build().is_err());
    }
}
