//! Integrates the decomposed potential flow next to the direct flow in the I-fixed gauge
//! and compares the reconstructed metric with the direct one.
//!
//! cargo run --example potential_crosscheck -- [n] [t_end] [steps]

use std::f64::consts::PI;

use gkrf::fields::Grid4;
use gkrf::flow::potential::{cross_path, BetaLaplacian};
use gkrf::gkconstruct::{deform, flat_seed, ConstructLimits, Deformation, FourierHamiltonian};

fn main() -> gkrf::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n = args.first().and_then(|a| a.parse().ok()).unwrap_or(8);
    let t_end = args.get(1).and_then(|a| a.parse().ok()).unwrap_or(0.1);
    let steps = args.get(2).and_then(|a| a.parse().ok()).unwrap_or(4);

    let seed = flat_seed(Grid4::new(n, 2.0 * PI));
    let def = Deformation::new(FourierHamiltonian::standard(0.05, 2.0 * PI), 0.5, 16);
    let state = deform(&seed, &def, &ConstructLimits::default())?.state;
    let c = cross_path(&state, t_end, steps, BetaLaplacian::HolomorphicFirst)?;
    println!("initial reconstruction residual {:.3e}", c.initial_residual);
    println!("dt {:.4e}, max relative metric error {:.3e}", c.dt, c.max_rel_error);
    for (k, r) in c.records.iter().enumerate() {
        println!("{k:>3} sup|beta|^2 {:.6e}  sup|df/dt| {:.4}  trace slack {:+.3e}", r.sup_beta_sq, r.df_dt_sup, r.trace_bound_slack);
    }
    Ok(())
}
