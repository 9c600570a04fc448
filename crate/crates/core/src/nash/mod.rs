//! Nash-type inequalities: rates from decay profiles, empirical
//! certificates, transfers to fractional powers and the return trip to
//! ultracontractivity.

pub mod certificate;
pub mod profile;
pub mod rate;
pub mod regvar;
pub mod transfer;
pub mod ultra;

pub use certificate::{
    bernstein_explore, certify, nash_ratio, nash_ratio_with_constants, rho_shift, BernsteinStats, NashCertificate,
    SampleRecord,
};
pub use profile::{
    check_condition_d, feasible_constant, profile_equivalence, rate_from_profile, rate_from_profile_at_log,
    theta_from_profile, DecayProfile,
};
pub use rate::{EmpiricalDecay, RateFunction};
pub use regvar::{smooth_regular_variation, RegularVariation, RegularVariationReport};
pub use transfer::{
    halfpower_integral_check, iteration_constants, jensen_transfer_check, l1_sphere_samples, sphere_search_infimum,
    square_transfer_slack, HalfPowerCheck, JensenReport,
};
pub use ultra::{fit_slope, log_u, ultracontractivity_from_nash, UltracontractivityBound};
