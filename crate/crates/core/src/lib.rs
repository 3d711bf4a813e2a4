//! Numerical pipeline for shrinking a closed convex surface by its intrinsic
//! curvature and checking quantitative distance estimates along the way.
//!
//! The stages mirror the module layout: a convex hull is built from a point
//! cloud (`hull`), its support function is expanded in spherical harmonics and
//! mollified (`support_field`), the surface is sampled onto an icosphere and
//! turned into an intrinsic triangle mesh (`mesh`, `intrinsic`), the mesh is
//! evolved by a conformal curvature flow (`flow`), intrinsic distances are
//! measured by fast marching against polyhedral unfolding references
//! (`geodesic`, `unfold`), and the whole bundle of quantitative claims is
//! scored into a machine-readable report (`verify`).

pub mod config;
pub mod error;
pub mod exec;
pub mod flow;
pub mod geodesic;
pub mod harmonics;
pub mod hull;
pub mod intrinsic;
pub mod io;
pub mod mesh;
pub mod num;
pub mod pipeline;
pub mod smooth_metric;
pub mod support_field;
pub mod unfold;
pub mod verify;

pub use error::Error;

/// 3D point/direction type used throughout.
pub type Vec3 = nalgebra::Vector3<f64>;

/// Result alias for the crate error type.
pub type Result<T> = std::result::Result<T, Error>;
