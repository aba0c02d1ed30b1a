//! Minimal end-to-end run: random-trees demand served by a self-adjusting
//! 16-tree overlay (the README example).

use obst_core::{overlay::RunOptions, workload, Overlay};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let guest = workload::gen_rnd_obst(512, 16, 1)?; // demand graph
    let sigma = workload::seq_match(&guest, 512 * 512, 2)?; // request stream
    let mut overlay = Overlay::new_random(512, 16, 3)?; // 16 random BSTs
    let ledger = overlay.run_sequence(&sigma, RunOptions::default())?;
    println!(
        "average distance {:.3}, average cost {:.3}",
        ledger.average_distance(),
        ledger.average_cost()
    );
    Ok(())
}
