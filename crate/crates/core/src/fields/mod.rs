//! Periodic tensor fields on the 4-torus and the differential operators acting on them.

pub mod curvature;
pub mod diff;
pub mod forms;
pub mod grid;
pub mod hermitian;
pub mod interp;
pub mod lie;
pub mod snapshot;

pub use diff::{gradient, hessian, partial, partials};
pub use forms::{KForm, MetricField};
pub use grid::{Field, Grid4};
pub use snapshot::Snapshot;
