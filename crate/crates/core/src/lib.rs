//! Transports along paths: connection-driven transport matrices, axiomatic
//! parallel transport, tensor lifts, gauge holonomy and a catalog of
//! closed-form examples.
//!
//! ```
//! use pathtransport::catalog;
//! use pathtransport::linalg::rotation_angle;
//! use pathtransport::linear::IntegratorConfig;
//! use pathtransport::transport::TransportFamily;
//!
//! let sphere = catalog::sphere_levi_civita(std::f64::consts::PI / 3.0)?;
//! let latitude = &sphere.paths[0];
//! let family = sphere.family(IntegratorConfig::default());
//! let d = latitude.domain();
//! let h = family.transport(latitude, d.a(), d.b())?;
//! assert!((rotation_angle(h.matrix())? - std::f64::consts::PI).abs() < 1e-6);
//! # Ok::<(), pathtransport::error::Error>(())
//! ```

// `!(x > 0.0)` style guards are kept on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod path;
pub mod connection;
pub mod linear;
pub mod report;
pub mod transport;
pub mod parallel;
pub mod gauge;
pub mod tensor;
pub mod catalog;
pub mod descriptor;
pub mod harness;
pub mod fuzzing;
