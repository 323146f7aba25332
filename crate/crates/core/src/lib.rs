//! Local conformal flattening of mesh regions.
//!
//! A region of interest (ROI) on a triangle mesh is flattened in place in
//! `n` steps. Each step shrinks the target curvature of the ROI interior,
//! solves for conformal edge lengths with a Newton-iterated discrete Ricci
//! flow that keeps the triangulation Delaunay, and then moves ROI vertices
//! along their normals until the embedded edges match those lengths.
//! Vertices outside the ROI never move.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distortion;
pub mod error;
pub mod extrinsic;
pub mod fixtures;
pub mod intrinsic;
pub mod io;
pub mod mesh;
pub mod metric;
pub mod run;
pub mod select;
mod solve;
pub mod topology;

pub use error::{Error, ErrorClass, Result};
pub use mesh::{extract_roi_submesh, Point, RoiSelection, Submesh, TriangleMesh};
pub use metric::{gauss_bonnet_residual, CurvatureField, DiscreteMetric};
pub use distortion::DistortionReport;
pub use extrinsic::{run_extrinsic_flow, ExtrinsicConfig, ExtrinsicFlow, ExtrinsicResult};
pub use intrinsic::{run_intrinsic_flow, ConformalFactor, FlowConfig, FlowReport, TargetCurvature};
pub use run::{MeshStats, RunConfig, RunReport};
pub use select::geodesic_ball;
