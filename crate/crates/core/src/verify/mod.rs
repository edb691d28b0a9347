//! Numerical audits of the displacement estimates and estimators for the
//! constants that depend on the maps.

mod audit;
mod estimate;
mod sweep;

pub use audit::{
    audit_bonatti, audit_bonatti_on, audit_bonatti_steps, audit_lemma_ck, audit_lemma_hyp, audit_row_column,
    run_audits, AuditOptions, AuditRecord, AuditTag, BonattiReport, HypothesisStatus,
    VerifyReport, LEMMA_ADDITIVITY, LEMMA_RATIO, LEMMA_ROW_COLUMN, LEMMA_TRANSPORT,
};
pub use estimate::{
    eps1_bound, estimate_eps0, estimate_eps0_with, estimate_eta1, eta1_bound, ActionEstimator,
    Eta1Estimate, ManifoldBounds,
};
pub use sweep::{
    max_displacement_search, rigidity_sweep, Argmax, Component, SweepReport, SweepRow,
    SweepVerdict,
};
