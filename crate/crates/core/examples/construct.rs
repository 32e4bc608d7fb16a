//! Deforms the flat hyperKahler seed by a Hamiltonian flow and prints the residual
//! report of the result.
//!
//! cargo run --example construct -- [n] [epsilon] [s]

use std::f64::consts::PI;

use gkrf::fields::Grid4;
use gkrf::gkconstruct::{deform, flat_seed, ConstructLimits, Deformation, FourierHamiltonian};

fn main() -> gkrf::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n = args.first().and_then(|a| a.parse().ok()).unwrap_or(16);
    let epsilon = args.get(1).and_then(|a| a.parse().ok()).unwrap_or(0.05);
    let s = args.get(2).and_then(|a| a.parse().ok()).unwrap_or(0.5);

    let seed = flat_seed(Grid4::new(n, 2.0 * PI));
    let def = Deformation::new(FourierHamiltonian::standard(epsilon, 2.0 * PI), s, 16);
    let out = deform(&seed, &def, &ConstructLimits::default())?;
    let p = out.state.angle();
    println!("n = {n}, epsilon = {epsilon}, s = {s}: p in [{:.4e}, {:.4e}]", p.min(), p.max());
    println!("{:#?}", out.report);
    println!("worst residual {:.3e}", out.report.max_residual());
    Ok(())
}
