//! Ground-truth engines that share no code path with the generating
//! functions: exhaustive enumeration, an automaton dynamic program, and a
//! Monte Carlo profile simulator.

mod automaton;
mod count;
mod enumerate;
mod simulate;

pub use automaton::{joint_occurrence_dp, variance_by_decomposition, Automaton, ExactDistribution};
pub use count::{count_profile, ProfileCounter, Text, DIRECT_TABLE_MAX_K};
pub use enumerate::{enumerate_class_table, exact_variance_enumeration, ENUMERATION_MAX_LETTERS};
pub use simulate::{bernoulli_block, simulate_profile, ProfileSample, SimulationConfig, BLOCK_REPLICATES};
