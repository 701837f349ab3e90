//! Screening discrete Bayesian network parameters for influence on a
//! posterior probability, without computing their sensitivity functions.
//!
//! Under proportional co-variation the posterior is a fragment of a
//! rectangular hyperbola in any single parameter. Its vertical asymptote s
//! is a property of the evidence alone, so it is cheap to compute for every
//! parameter at once; the admissible offset t and residue r are then pinned
//! between the four surfaces bounding hyperbolas that map the unit window
//! into itself. [`bounds`] turns that into feasible ranges for t, r, and the
//! derivative at the current value, [`vertexloc`] into regions that must
//! contain the vertex if it lies in a given window, and [`screen`] assembles
//! the per-parameter verdicts. [`screen::verify`] recomputes every
//! sensitivity function exactly and checks each claimed bound against it.

pub mod bounds;
pub mod error;
pub mod inference;
pub mod model;
pub mod screen;
pub mod sensfun;
pub mod vertexloc;

pub use bounds::{
    bound_surface_grid, bounding_curves, deriv_bounds, general_sv_bound, in_subspace,
    intersection_lines, r_range, simple_rule_le_one, surface_e, surface_r, t_range, thresholds,
    BoundingCurves, DerivBounds, Interval, SSign, SurfaceGrid, SurfaceId, TBounds, ThroughPoint,
};
pub use error::{Error, Result};
pub use inference::{
    joint_prob, linear_coeffs, marginal_prob, posterior, s_for_all_parameters, s_in_unit_band,
    sensitivity_constants, CoeffRole, LinCoeffs, SValue, SensConstants,
};
pub use model::{
    load_network, parse_evidence, parse_parameter, parse_state_ref, Cpt, Evidence, NetworkDef,
    ParameterRef, Query, VarId, VarState, Variable,
};
pub use screen::{
    check_row, emit, emit_verify, envelope_csv, filter_rank, screen, surface_csv, verify,
    BoundCheck, OutputFormat, RowKind, ScreenOptions, ScreenRow, TrueFunction, VerifyReport,
    VerifyRow, VerifySummary, VertexQuery, CSV_HEADER,
};
pub use sensfun::{
    classify, derivative, evaluate, sensitivity_value, FunctionKind, HyperbolaForm, Quadrant,
    Vertex,
};
pub use vertexloc::{
    t_intervals_for_vertex, vertex_possible, vertex_regions, vertex_t_set, IntervalSet,
    VertexRegion, VertexTIntervals, VertexVerdict, VertexWindow,
};
