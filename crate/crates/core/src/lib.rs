//! Inhomogeneous graph-directed iterated function systems: graph dimension,
//! attractor clouds, box and covering-regularity estimates, invariant
//! measures, open set conditions and the experiments that tie them together.

pub mod attractor;
pub mod boxdim;
pub mod document;
pub mod error;
pub mod experiment;
pub mod export;
pub mod measure;
pub mod model;
pub mod numeric;
pub mod separation;
pub mod spectral;

pub use error::{Error, Result};
pub use model::{
    compose_path, cross_cut, CondensationSet, Edge, EdgeId, GdSystem, PathCode, Point, Primitive,
    RatioKind, SimilarityMap, ValidationReport, VertexId, Violation,
};
pub use numeric::Real;
pub use experiment::{
    continuity_experiment, lower_bound_experiment, verify_dimension_formulas, ExperimentParams,
    ExperimentReport, Verdict, VerdictStatus,
};
