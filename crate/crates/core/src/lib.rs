//! Terrain surface modelling: geographic/UTM conversion, point acquisition,
//! Delaunay meshing with smoothing, semivariogram fitting, universal kriging
//! and IDW interpolation, and an end-to-end DSM pipeline.

// `!(x > 0.0)` is used on purpose: unlike `x <= 0.0` it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acquisition;
pub mod geodesy;
pub mod interpolate;
pub mod mesh;
pub mod pipeline;
pub mod variogram;
