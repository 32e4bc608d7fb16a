//! Run configuration: one self-contained TOML or JSON file.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{GkError, Result};
use crate::fields::{Grid4, Snapshot};
use crate::flow::FlowConfig;
use crate::gkconstruct::{
    deform, flat_seed, validate_gk, ConstructLimits, Deformation, FourierHamiltonian, FourierMode, GkReport, GkState,
    HamiltonianSign, TripleReport,
};

fn two_pi() -> f64 {
    2.0 * PI
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    #[serde(default = "two_pi")]
    pub period: f64,
}

fn default_ode_steps() -> usize {
    16
}

fn default_sign() -> HamiltonianSign {
    HamiltonianSign::Minus
}

/// Hamiltonian deformation of the flat seed. Without `modes` the standard four-mode
/// Hamiltonian is used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeformationConfig {
    pub epsilon: f64,
    pub s: f64,
    #[serde(default = "default_ode_steps")]
    pub ode_steps: usize,
    #[serde(default)]
    pub modes: Option<Vec<FourierMode>>,
    #[serde(default = "default_sign")]
    pub sign: HamiltonianSign,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergenceConfig {
    pub ladder: Vec<usize>,
    pub min_order: f64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig { ladder: vec![8, 16, 32], min_order: 3.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PointDebugConfig {
    /// Random points for the algebraic suite.
    pub points: usize,
    pub tolerance: f64,
    /// Grid point of the configured state to dump.
    pub index: Option<usize>,
}

impl Default for PointDebugConfig {
    fn default() -> Self {
        PointDebugConfig { points: 10_000, tolerance: 1e-11, index: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Seed for every random draw.
    pub seed: u64,
    pub grid: GridConfig,
    #[serde(default)]
    pub deformation: Option<DeformationConfig>,
    /// Snapshot to start from instead of constructing.
    #[serde(default)]
    pub input: Option<PathBuf>,
    #[serde(default)]
    pub limits: ConstructLimits,
    #[serde(default)]
    pub flow: FlowConfig,
    #[serde(default)]
    pub convergence: ConvergenceConfig,
    #[serde(default)]
    pub point_debug: PointDebugConfig,
}

fn check_n(n: usize) -> Result<()> {
    if n < 8 || n % 2 != 0 {
        return Err(GkError::Config(format!("grid size must be even and >= 8, got {n}")));
    }
    Ok(())
}

impl Config {
    pub fn parse(text: &str, json: bool) -> Result<Config> {
        let cfg: Config = if json {
            serde_json::from_str(text).map_err(|e| GkError::Config(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| GkError::Config(e.to_string()))?
        };
        cfg.check()?;
        Ok(cfg)
    }

    /// Reads a `.json` file as JSON and anything else as TOML.
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GkError::Config(format!("cannot read {}: {e}", path.display())))?;
        let json = path.extension().is_some_and(|e| e == "json");
        Config::parse(&text, json)
    }

    pub fn check(&self) -> Result<()> {
        check_n(self.grid.n)?;
        if !(self.grid.period > 0.0) {
            return Err(GkError::Config("grid period must be positive".into()));
        }
        if let Some(d) = &self.deformation {
            if !(d.epsilon.is_finite() && d.s.is_finite() && d.ode_steps > 0) {
                return Err(GkError::Config("deformation needs finite epsilon, s and ode_steps > 0".into()));
            }
        }
        if self.convergence.ladder.len() < 2 {
            return Err(GkError::Config("convergence ladder needs at least two rungs".into()));
        }
        for &n in &self.convergence.ladder {
            check_n(n)?;
        }
        self.flow.check()
    }

    /// Canonical serialization; the manifest hash is taken over these bytes.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        hex(&Sha256::digest(self.canonical().as_bytes()))
    }

    pub fn deformation_at(&self, d: &DeformationConfig) -> Deformation {
        let mut ham = FourierHamiltonian::standard(d.epsilon, self.grid.period);
        if let Some(modes) = &d.modes {
            ham.modes = modes.clone();
        }
        let mut def = Deformation::new(ham, d.s, d.ode_steps);
        def.sign = d.sign;
        def
    }

    /// Constructs the configured state on an `n`-grid: the flat seed, or its deformation.
    pub fn construct_at(&self, n: usize) -> Result<Constructed> {
        let seed = flat_seed(Grid4::new(n, self.grid.period));
        match &self.deformation {
            None => {
                let state = seed.to_state();
                let report = validate_gk(&state)?;
                Ok(Constructed { state, report, triple: None })
            }
            Some(d) => {
                let out = deform(&seed, &self.deformation_at(d), &self.limits)?;
                Ok(Constructed { state: out.state, report: out.report, triple: Some(out.triple) })
            }
        }
    }

    /// The input snapshot if one is configured, otherwise the constructed state.
    pub fn initial_state(&self) -> Result<GkState> {
        match &self.input {
            Some(path) => {
                let snap = Snapshot::load(path).map_err(|e| match e {
                    GkError::Io(e) => GkError::Config(format!("cannot read input {}: {e}", path.display())),
                    other => other,
                })?;
                GkState::from_snapshot(&snap)
            }
            None => Ok(self.construct_at(self.grid.n)?.state),
        }
    }
}

pub struct Constructed {
    pub state: GkState,
    pub report: GkReport,
    pub triple: Option<TripleReport>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
