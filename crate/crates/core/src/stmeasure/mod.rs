//! Singlet-triplet pair measurements: outcome probabilities, triplet
//! profiles, all-singlet heralding and the Bell-measurement variant.

mod herald;
mod layout;
mod profile;

pub use herald::{
    bell_localize, herald_all_singlet, project_all_singlet, werner_fraction, BellOutcome,
    BellState, Herald, BELL_MAX_PAIRS, BELL_PRUNE, HERALD_FLOOR,
};
pub use layout::{Outcome, OutcomeString, PairingLayout};
pub use profile::{
    outcome_probability, triplet_profile, triplet_profile_bruteforce, triplet_profile_with,
    ProfileMeta, ProfileMode, TripletProfile, BRUTEFORCE_MAX_PAIRS, CLAMP_LIMIT,
};

use crate::error::Result;

/// Pairs `(1,2), (3,4), ...` covering every site.
pub fn standard_layout(n_sites: usize) -> Result<PairingLayout> {
    PairingLayout::standard(n_sites)
}

/// Pairs `(2,3), ..., (N-2,N-1)` leaving the chain ends unmeasured.
pub fn middle_layout(n_sites: usize) -> Result<PairingLayout> {
    PairingLayout::middle(n_sites)
}
