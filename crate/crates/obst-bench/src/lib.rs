//! Shared fixtures for the benchmarks.

use obst_core::overlay::Overlay;
use obst_core::workload::{self, RequestSequence};

pub fn fixture(n: usize, k: usize, m: usize, seed: u64) -> (Overlay, RequestSequence) {
    let guest = workload::gen_rnd_obst(n, 16, seed).expect("guest");
    let sigma = workload::seq_match(&guest, m, seed ^ 1).expect("sigma");
    let overlay = Overlay::new_random(n, k, seed ^ 2).expect("overlay");
    (overlay, sigma)
}
