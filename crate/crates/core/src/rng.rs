//! Per-component random streams.
//!
//! Every component draws from its own ChaCha stream keyed by the master seed
//! and selected by a fixed label, so one component consuming more or fewer
//! numbers never shifts another component's sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const WORKLOAD: &str = "workload";
pub const SERVICE: &str = "service";
pub const ATTACKER: &str = "attacker";
pub const SCHEDULER: &str = "scheduler";

/// FNV-1a over the label bytes.
fn label_id(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

pub fn stream(master_seed: u64, label: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(label_id(label));
    rng
}
