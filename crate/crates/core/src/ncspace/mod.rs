//! Noncommutative `L_p` norms and the `L_p(l_inf)` maximal norm.

pub mod exponents;
pub mod family;
pub mod norms;
pub mod sdp;

pub use exponents::{alpha_threshold, mu, p_bar, predicted_exponents, u_floor, ParameterSet};
pub use family::{
    maximal_norm_general_upper, maximal_norm_general_upper_with, maximal_norm_matrices, maximal_norm_positive,
    maximal_norm_positive_with, maximal_norm_selfadjoint, maximal_norm_selfadjoint_with, read_family_json, Dominator,
    FamilyJson, FamilyKind, FieldSource, MaximalFamily, MaximalNorm, FAMILY_JSON_SCHEMA,
};
pub use norms::{field_lp_norm, loewner_leq, pairwise_sum, schatten_norm, schatten_power};
pub use sdp::{solve_site, trace_power, trace_power_gradient, SolverMethod, SolverOptions};
