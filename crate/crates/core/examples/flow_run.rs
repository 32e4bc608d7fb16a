//! Runs the flow on a deformed torus and prints the monitored quantities every few steps,
//! followed by the bound checks.
//!
//! cargo run --example flow_run -- [n] [t_end]

use std::f64::consts::PI;

use gkrf::diagnostics::{bound_checks, volume_band, DiagnosticsRecord};
use gkrf::fields::Grid4;
use gkrf::flow::{run, FlowConfig};
use gkrf::gkconstruct::{deform, flat_seed, ConstructLimits, Deformation, FourierHamiltonian};

fn main() -> gkrf::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n = args.first().and_then(|a| a.parse().ok()).unwrap_or(8);
    let t_end = args.get(1).and_then(|a| a.parse().ok()).unwrap_or(2.0);

    let seed = flat_seed(Grid4::new(n, 2.0 * PI));
    let def = Deformation::new(FourierHamiltonian::standard(0.05, 2.0 * PI), 0.5, 16);
    let state = deform(&seed, &def, &ConstructLimits::default())?.state;
    // the n = 8 construction error is already close to the default abort threshold
    let cfg = FlowConfig { t_end, constraint_abort: 1e-2, ..Default::default() };
    let mut recs: Vec<DiagnosticsRecord> = Vec::new();
    let out = run(&state, &cfg, &mut recs)?;

    println!("{:>5} {:>7} {:>10} {:>10} {:>10} {:>10}", "step", "t", "osc p", "sup theta", "|grad mu|^2", "gk resid");
    let every = (out.steps / 10).max(1);
    for r in recs.iter().filter(|r| r.step % every == 0 || r.step == out.steps) {
        println!(
            "{:>5} {:>7.3} {:>10.3e} {:>10.3e} {:>10.3e} {:>10.3e}",
            r.step, r.t, r.osc_p(), r.sup_theta, r.sup_grad_mu_sq, r.gk_constraint_residual
        );
    }
    for c in bound_checks(&recs) {
        println!("{:<28} {} slack {:+.3e}", c.name, if c.pass { "pass" } else { "FAIL" }, c.slack);
    }
    println!("volume band C = {:.6}", volume_band(&recs));
    Ok(())
}
