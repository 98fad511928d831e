//! What a passive eavesdropper can learn: bit posteriors, mutual information
//! estimates, brute-force cost and a small-key exhaustive attack.

mod attack;
mod brute;
mod info;
mod posterior;

pub use attack::{candidate_bits, candidate_index, exhaustive_attack, replay_with_key, AttackReport, MAX_ATTACK_KEY_BITS};
pub use brute::{brute_force_count_sector, brute_force_count_uniform, eve_known_fraction};
pub use info::{
    accumulate, delta_i, delta_i_partitioned, mutual_information, InfoAccumulator, InfoComponent, InfoEstimate,
    Observer, MIN_SAMPLES,
};
pub use posterior::{binary_entropy, eve_bit_posterior, known_basis_posterior};
