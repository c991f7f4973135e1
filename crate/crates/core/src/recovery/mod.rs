//! Channels, rotated Petz recovery maps and recoverability bounds.

pub mod bounds;
pub mod channel;
pub mod petz;

pub use bounds::{chain_recovery_bounds, markov_locality_check, recoverability_gap, recovery_distance, ChainRecovery};
pub use channel::{identity_factor_deviation, restricted_map, ChannelRep, LinearMap};
pub use petz::{petz_rotated, petz_with, psi_avg, psi_v, psi_v_of, RecoveryMap, TimeAverage};
