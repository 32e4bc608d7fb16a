use crate::diagnostics::{DiagnosticsRecord, Monitor};
use crate::error::{GkError, Result};
use crate::gkconstruct::GkState;

use super::potential::{initial_potential, potential_step, Background, PotentialMonitor, PotentialState};
use super::{step, FlowConfig, PotentialConfig};

struct Companion {
    cfg: PotentialConfig,
    state: PotentialState,
    bg: Background,
    monitor: PotentialMonitor,
}

impl Companion {
    fn new(initial: &GkState, cfg: PotentialConfig) -> Result<Self> {
        let grid = *initial.g.grid();
        let i0 = initial.i.get(0);
        let dev = initial.i.sub(&crate::fields::Field::constant(grid, i0)).max_abs();
        if dev > 1e-12 {
            return Err(GkError::Config(format!("potential path needs a constant I (deviation {dev:.3e})")));
        }
        let (state, bg, _) = initial_potential(&initial.g, &i0);
        let monitor = PotentialMonitor::new(&state, &bg, cfg.trace_weight)?;
        Ok(Companion { cfg, state, bg, monitor })
    }

    fn attach(&mut self, rec: &mut DiagnosticsRecord) -> Result<()> {
        rec.potential = Some(self.monitor.record(&self.state, &self.bg, self.cfg.laplacian)?);
        Ok(())
    }

    fn advance(&mut self, dt: f64) -> Result<()> {
        self.state = potential_step(&self.state, &self.bg, dt, self.cfg.laplacian)?;
        Ok(())
    }
}

/// Receives every accepted record, and snapshots on the configured cadence.
///
/// Records reach the sink before any abort decision, so a failed run leaves the
/// partial series behind.
pub trait StepSink {
    fn record(&mut self, rec: &DiagnosticsRecord) -> Result<()>;

    fn snapshot(&mut self, _state: &GkState, _step: usize) -> Result<()> {
        Ok(())
    }
}

impl StepSink for Vec<DiagnosticsRecord> {
    fn record(&mut self, rec: &DiagnosticsRecord) -> Result<()> {
        self.push(rec.clone());
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub state: GkState,
    pub steps: usize,
    pub dt: f64,
}

fn check_record(rec: &DiagnosticsRecord, cfg: &FlowConfig) -> Result<()> {
    let residual = rec.gk_constraint_residual.max(rec.dh_residual);
    if !(residual <= cfg.constraint_abort) {
        return Err(GkError::ConstraintDrift {
            residual,
            threshold: cfg.constraint_abort,
            t: rec.t,
        });
    }
    Ok(())
}

/// Integrates from `initial` to `initial.t + cfg.t_end` with a fixed step.
///
/// The step is `cfg.dt` at the initial metric, shortened so that a whole number of
/// steps lands on `t_end`. Step 0 records the initial state. With `cfg.potential` set the
/// decomposed flow runs on the same steps from the initial metric, which needs a constant `I`.
pub fn run(initial: &GkState, cfg: &FlowConfig, sink: &mut dyn StepSink) -> Result<RunOutcome> {
    cfg.check()?;
    let g0 = initial.metric()?;
    let steps = (cfg.t_end / cfg.dt(&g0)).ceil().max(1.0) as usize;
    let dt = cfg.t_end / steps as f64;
    let t0 = initial.t;

    let mut companion = cfg.potential.map(|p| Companion::new(initial, p)).transpose()?;
    let mut monitor = Monitor::new(initial)?;
    let mut rec = monitor.record(initial, 0, dt)?;
    if let Some(c) = companion.as_mut() {
        c.attach(&mut rec)?;
    }
    sink.record(&rec)?;
    check_record(&rec, cfg)?;
    if cfg.snapshot_every > 0 {
        sink.snapshot(initial, 0)?;
    }

    let mut state = initial.clone();
    for n in 1..=steps {
        let mut next = step(&state, dt, cfg.integrator, cfg.gauge)?;
        // Pin the time label to the grid of steps so long runs do not accumulate drift.
        next.t = t0 + n as f64 * dt;
        let p_abs = next.angle().max_abs();
        if p_abs > cfg.p_max {
            return Err(GkError::StepRejected {
                p_abs,
                p_max: cfg.p_max,
            });
        }
        let mut rec = monitor.record(&next, n, dt)?;
        if let Some(c) = companion.as_mut() {
            c.advance(dt)?;
            c.attach(&mut rec)?;
        }
        sink.record(&rec)?;
        check_record(&rec, cfg)?;
        if cfg.snapshot_every > 0 && (n % cfg.snapshot_every == 0 || n == steps) {
            sink.snapshot(&next, n)?;
        }
        state = next;
    }
    Ok(RunOutcome { state, steps, dt })
}
