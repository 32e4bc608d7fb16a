//! Pointwise algebra at random GK points: anticommutator, commutator square, the
//! associated triple and the two routes to the squared torsion.
//!
//! cargo run --example point_algebra -- [points] [seed]

use gkrf::diagnostics::identities::algebraic_suite;

fn main() -> gkrf::Result<()> {
    let mut args = std::env::args().skip(1);
    let points = args.next().and_then(|a| a.parse().ok()).unwrap_or(10_000);
    let seed = args.next().and_then(|a| a.parse().ok()).unwrap_or(1);
    let suite = algebraic_suite(points, seed)?;
    println!("{points} points, {} too close to |p| = 1 for the triple", suite.degenerate);
    for (name, v) in suite.named() {
        println!("{name:<18} {v:.3e}");
    }
    Ok(())
}
