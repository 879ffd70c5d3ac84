//! Manufactured solutions and numerical audits of the a priori estimates.

mod audit;
pub mod jet;
mod manufactured;
mod random;
mod wake;

pub use manufactured::{
    case_from_potential, default_cutoff, manufactured_case, recover, CaseKind, Cutoff, ManufacturedCase, Potential,
    Recovery,
};
pub use random::{band_limited_field, TimeContent};
pub use audit::{
    audit_embedding, audit_embedding_with_targets, audit_lambda_sweep, audit_linear_estimate, audit_modewise,
    audit_nonlinear_term, audit_pressure_local, embedding_sides, embedding_targets, equation_region,
    infinite_exponent_surrogate, linear_estimate_sides, nonlinear_term_sides, pressure_local_sides, pressure_reports,
    random_steady_solenoidal, solve_linear, AuditReport, AuditRow, EmbeddingTargets, EnsembleStats,
};
pub use wake::{oseen_tensor, oseen_wake_ratio, wake_diagnostic, WakeDiagnostic};
