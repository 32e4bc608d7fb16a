//! Differential identities on the deformed torus over a grid ladder, with observed orders.
//!
//! cargo run --example convergence -- [n...]

use std::f64::consts::PI;

use gkrf::diagnostics::identities::convergence_table;
use gkrf::fields::Grid4;
use gkrf::gkconstruct::{deform, flat_seed, ConstructLimits, Deformation, FourierHamiltonian};

fn main() -> gkrf::Result<()> {
    let mut ladder: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    if ladder.len() < 2 {
        ladder = vec![8, 16];
    }
    let table = convergence_table(&ladder, |n| {
        let seed = flat_seed(Grid4::new(n, 2.0 * PI));
        let def = Deformation::new(FourierHamiltonian::standard(0.05, 2.0 * PI), 0.5, 16);
        Ok(deform(&seed, &def, &ConstructLimits::default())?.state)
    })?;
    print!("{}", table.render());
    println!("all orders >= 3: {}", table.passes(3.0));
    Ok(())
}
