//! Exponential sums, the oscillatory integral `v`, Dickman's function and
//! major/minor arc classification.

mod arcs;
mod dickman;
mod integral;
mod phase;

pub use arcs::{classify_arc, weyl_diagnostic, ArcClass, ArcParams, ArcStyle, WeylReport, WeylSample};
pub use dickman::dickman_rho;
pub use integral::{
    default_envelope_grid, envelope_scan, oscillatory_integral, v_integral, EnvelopeScan, QuadResult,
    DEFAULT_QUAD_TOL,
};
pub use phase::{
    complete_sum_S, e, f_eval, f_eval_range, frac_mul, gamma_transform, sqa_bound_scan,
    GammaCoefficients, MajorArcApproximant, SqaScan,
};
