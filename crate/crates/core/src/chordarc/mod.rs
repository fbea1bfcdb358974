//! Chord-arc profiles on the formal double of a chord, the auxiliary
//! function `Z`, minimiser certificates, boundary turning and Gauss–Bonnet
//! audits, and noncollapsing verification along flow runs.

pub mod audit;
pub mod certificate;
pub mod gauss_bonnet;
pub mod pairs;
pub mod profile_fn;

pub use pairs::{
    auxiliary_z, compute_profile, critical_c0, CompletedPair, CompletedProfile, CriticalAmplitude, PairClass, PairDistance, ProfileOptions,
};
pub use profile_fn::{admissible_c0, epsilon_one, Clock, ProfileFunction, ProfileJet, ProfileKind};
pub use certificate::{certify_minimizer, engineer_zero_minimum, evaluate_certificate, Certificate, CertificateTerms};
pub use gauss_bonnet::{boundary_turning, gauss_bonnet_audit, GaussBonnetReport, RegionEdge};
pub use audit::{
    evolution_inequality_audit, profile_critical_c0, verify_noncollapsing, EvolutionOptions, EvolutionReport, NoncollapsingMode, NoncollapsingOptions, NoncollapsingReport,
    SlackRow,
};
