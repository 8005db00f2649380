//! Resource-allocation games with compromised agents: utility design,
//! equilibrium analysis, price-of-anarchy bounds and log-linear learning.

pub mod equilibrium;
pub mod error;
pub mod format;
pub mod game;
pub mod instances;
pub mod learning;
mod space;
pub mod validate;

pub use equilibrium::{
    best_response_set, enumerate_pne, enumerate_pne_capped, instance_poa, instance_poa_capped,
    is_pne, optimal_welfare, optimal_welfare_capped, theoretical_poa, theoretical_poa_for,
    EquilibriumSet, PoAReport, UtilityClass,
};
pub use error::{GameError, Result};
pub use game::{
    validate_curve, Action, CompromiseLabel, GameInstance, JointAction, ObservationStructure,
    ResourceId, UtilityKind, WelfareSpec, TOLERANCE,
};
pub use space::DEFAULT_PROFILE_CAP;
pub use validate::{check_submodular, check_vug, SubmodularityReport, VugReport};
