//! One B-field gauge step followed by the transport to the I-fixed gauge, compared with a
//! step taken directly in the I-fixed gauge.
//!
//! cargo run --example gauge_transport -- [n] [dt]

use std::f64::consts::PI;

use gkrf::fields::Grid4;
use gkrf::flow::{gauge_transport, step, Gauge, GaugeDirection, Integrator};
use gkrf::gkconstruct::{deform, flat_seed, ConstructLimits, Deformation, FourierHamiltonian};

fn main() -> gkrf::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n = args.first().and_then(|a| a.parse().ok()).unwrap_or(8);
    let dt: f64 = args.get(1).and_then(|a| a.parse().ok()).unwrap_or(0.02);

    let seed = flat_seed(Grid4::new(n, 2.0 * PI));
    let def = Deformation::new(FourierHamiltonian::standard(0.05, 2.0 * PI), 0.5, 16);
    let state = deform(&seed, &def, &ConstructLimits::default())?.state;

    let b_field = step(&state, dt, Integrator::Rk4, Gauge::BField)?;
    let i_fixed = step(&state, dt, Integrator::Rk4, Gauge::IFixed)?;
    let moved = gauge_transport(&b_field, GaugeDirection::ToIFixed, dt)?;
    println!("|I change| in the B-field gauge  {:.3e}", b_field.i.sub(&state.i).max_abs());
    println!("|I change| after transport       {:.3e}", moved.i.sub(&state.i).max_abs());
    println!("|I change| in the I-fixed gauge  {:.3e}", i_fixed.i.sub(&state.i).max_abs());
    println!("|g| transported vs I-fixed       {:.3e}", moved.g.sub(&i_fixed.g).max_abs());
    Ok(())
}
