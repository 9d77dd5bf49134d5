//! Convergence verdicts for the log-log singular family across gamma.

use s2b::conditions::{classify_a17, default_a17_cutoffs};

fn main() -> s2b::Result<()> {
    for gamma in [0.3, 0.4, 0.6, 0.75, 0.9, 1.2, 1.5, 2.0] {
        let c = classify_a17(gamma, &default_a17_cutoffs())?;
        println!("gamma {gamma:>4}: {}", c.verdict_line());
    }
    Ok(())
}
