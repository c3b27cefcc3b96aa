//! Numerical monitors for the identities and inequalities satisfied by
//! solutions: conservation, positivity, the lower bound on v, the key
//! identity for ∂ₜv, the exponential envelope, the bound on the nonlocal
//! source, the Lᵖ exponent ladder, the Moser recurrence and stabilization.
//!
//! Every check returns a [`Verdict`] whose margin is `bound − observed`.

mod envelopes;
mod identities;
mod ladder;
mod moser;
mod report;
mod stabilization;

pub use envelopes::{
    conservation_check, energy_trend, gronwall_envelope_check, lower_bound_check, lower_bound_from_report,
    lq_cap_check, positivity_check, EnergyTrend, DEFAULT_CONSERVATION_TOL, DEFAULT_ENVELOPE_SLACK, LOWER_BOUND_SLACK,
};
pub use identities::{
    gamma_bound_check, gamma_bound_trajectory, key_identity_monitor, key_identity_residual,
    key_identity_residual_via_apply, nonlocal_decomposition_defect, nonlocal_source, NonlocalSource,
};
pub use ladder::{ladder_exponents, lp_ladder, LadderRow, LadderTable, DEFAULT_LADDER_DEPTH};
pub use moser::{
    moser_lemma_check, moser_log_sequence, MoserOutcome, MoserParams, DEFAULT_MOSER_DEPTH, MOSER_TOLERANCE,
    MOSER_WINDOW,
};
pub use report::{DiagnosticsReport, SeriesRow, Status, Verdict};
pub use stabilization::{
    stabilization_from_report, stabilization_rate, stabilization_rate_series, Stabilization, NOISE_FLOOR,
    REQUIRED_DECADES,
};

/// Floor used when diagnostics evaluate γ(v), matching the stepper default.
pub(crate) const DEFAULT_FLOOR: f64 = 1e-12;
