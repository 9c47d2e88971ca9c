//! lipgeo: a numerical laboratory for Lipschitz geometry on sampled sets.
//!
//! The crate samples implicitly or parametrically defined subsets of R^n,
//! builds neighborhood graphs over the samples, and measures the quantities
//! that distinguish inner from outer geometry: geodesic (inner) distances,
//! pancake chain distances, local and at-infinity embedding constants, link
//! behavior under inversion and stereographic compactification, and the
//! iterative construction that flattens a set into a normally embedded copy.
//!
//! Modules follow the pipeline: [`setdef`] (describe and sample sets),
//! [`metric`] (graphs and distances), [`transforms`] (inversion,
//! stereographic maps, normalization), [`analysis`] (estimators and theorem
//! harnesses), [`embed`] (the normal-embedding tower), [`corpus`] (built-in
//! example sets with known answers), [`io`]/[`report`] (file formats).

pub mod analysis;
pub mod corpus;
pub mod embed;
pub mod expr;
pub mod geom;
pub mod io;
pub mod metric;
pub mod report;
pub mod setdef;
pub mod transforms;

pub use geom::{Point, Region};
pub use setdef::{sample_link, sample_set, LinkSlice, PieceSpec, SampleCloud, SetSpec};
