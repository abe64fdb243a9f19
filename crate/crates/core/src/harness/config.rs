//! Study configuration: a single JSON document, validated before any work.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::errors::NormKind;
use crate::manufactured::{preset, Equation};
use crate::mesh::DomainKind;

/// How spatial and temporal levels combine into study cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// Every spatial level with the single temporal level.
    RefineSpaceOnly,
    /// The single spatial level with every temporal level.
    RefineTimeOnly,
    /// One family per temporal level `M0`: `M = M0 (n / n_0)^2`.
    CoupledTauH2,
    /// One family per temporal level `M0`: `M = M0 (n / n_0)`.
    CoupledTauH,
    /// Every (n, M) combination; no orders are evaluated.
    Tensor,
}

impl Coupling {
    pub fn name(self) -> &'static str {
        match self {
            Coupling::RefineSpaceOnly => "refine_space_only",
            Coupling::RefineTimeOnly => "refine_time_only",
            Coupling::CoupledTauH2 => "coupled_tau_h2",
            Coupling::CoupledTauH => "coupled_tau_h",
            Coupling::Tensor => "tensor",
        }
    }
}

/// The refinement parameter a rate is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateParameter {
    H,
    Tau,
}

/// Expected order of `norm` under `coupling` for dG(`w`); `None` when the
/// study does not assert an order (tensor grids, sampled `L^inf` norms).
pub fn expected_order(coupling: Coupling, w: usize, norm: NormKind) -> Option<(RateParameter, f64)> {
    use NormKind::*;
    match (coupling, norm) {
        (_, Linfl2Sampled) | (Coupling::Tensor, _) => None,
        (Coupling::RefineSpaceOnly | Coupling::CoupledTauH2, L2l2) => Some((RateParameter::H, 2.0)),
        (Coupling::RefineSpaceOnly | Coupling::CoupledTauH2, L2h1) => Some((RateParameter::H, 1.0)),
        (Coupling::RefineTimeOnly, L2l2) => Some((RateParameter::Tau, (w + 1) as f64)),
        (Coupling::RefineTimeOnly, L2h1) => Some((RateParameter::Tau, 0.5)),
        (Coupling::CoupledTauH, L2l2) => Some((RateParameter::H, 1.0)),
        (Coupling::CoupledTauH, L2h1) => Some((RateParameter::H, 0.5)),
    }
}

/// Pass/fail thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative tolerance of the interval saddle solves.
    pub solver_rel_tol: f64,
    /// Observed order must be at least `expected - order_slack`.
    pub order_slack: f64,
    /// Bounded quantities: `max <= bound_factor * coarsest`.
    pub bound_factor: f64,
    /// Inf-sup spread `(max - min) / mean` limit.
    pub infsup_spread: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            solver_rel_tol: crate::transient::TRANSIENT_TOL,
            order_slack: 0.2,
            bound_factor: 1.5,
            infsup_spread: 0.1,
        }
    }
}

fn default_final_time() -> f64 {
    1.0
}

fn default_norms() -> Vec<NormKind> {
    vec![NormKind::L2l2, NormKind::L2h1]
}

fn default_seed() -> u64 {
    20_240_601
}

/// A convergence study or probe configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    /// Manufactured problem preset name.
    pub problem: String,
    pub equation: Equation,
    #[serde(default = "default_domain")]
    pub domain: DomainKind,
    /// Temporal degree (0 or 1).
    pub w: usize,
    /// Subdivisions per unit length, strictly increasing.
    pub spatial_levels: Vec<usize>,
    /// Number of time intervals (or base counts for coupled modes), strictly increasing.
    pub temporal_levels: Vec<usize>,
    #[serde(default = "default_final_time")]
    pub final_time: f64,
    #[serde(default = "default_norms")]
    pub norms: Vec<NormKind>,
    pub coupling: Coupling,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Output base path; `.csv` and `.json` are appended.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Seed for randomized checks.
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_domain() -> DomainKind {
    DomainKind::UnitSquare
}

/// One (n, M) pair of a study, with its refinement family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub family: usize,
    pub n: usize,
    pub m: usize,
}

fn strictly_increasing(v: &[usize]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

impl StudyConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: StudyConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let problem = preset(&self.problem)?;
        if problem.equation() != self.equation {
            return bad(format!("preset '{}' is not a {:?} problem", self.problem, self.equation));
        }
        if self.w > 1 {
            return bad(format!("w must be 0 or 1, got {}", self.w));
        }
        if self.spatial_levels.is_empty() || self.temporal_levels.is_empty() {
            return bad("spatial_levels and temporal_levels must be non-empty".into());
        }
        if self.spatial_levels.contains(&0) || self.temporal_levels.contains(&0) {
            return bad("levels must be positive".into());
        }
        if !strictly_increasing(&self.spatial_levels) || !strictly_increasing(&self.temporal_levels) {
            return bad("levels must be strictly increasing".into());
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return bad(format!("final_time must be positive, got {}", self.final_time));
        }
        if self.norms.is_empty() {
            return bad("at least one norm is required".into());
        }
        let t = &self.tolerances;
        if !(t.solver_rel_tol > 0.0 && t.solver_rel_tol < 1.0 && t.order_slack >= 0.0 && t.bound_factor >= 1.0 && t.infsup_spread > 0.0)
        {
            return bad(format!("invalid tolerances {t:?}"));
        }
        match self.coupling {
            Coupling::RefineSpaceOnly if self.temporal_levels.len() != 1 => {
                bad("refine_space_only needs exactly one temporal level".into())
            }
            Coupling::RefineTimeOnly if self.spatial_levels.len() != 1 => {
                bad("refine_time_only needs exactly one spatial level".into())
            }
            Coupling::CoupledTauH2 | Coupling::CoupledTauH => {
                let n0 = self.spatial_levels[0];
                if self.spatial_levels.iter().any(|n| n % n0 != 0) {
                    return bad("coupled modes need spatial levels that are multiples of the first".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Study cells in canonical order (family, then refinement).
    pub fn cells(&self) -> Vec<Cell> {
        let n0 = self.spatial_levels[0];
        let mut out = Vec::new();
        match self.coupling {
            Coupling::RefineSpaceOnly => {
                out.extend(self.spatial_levels.iter().map(|&n| Cell { family: 0, n, m: self.temporal_levels[0] }))
            }
            Coupling::RefineTimeOnly => {
                out.extend(self.temporal_levels.iter().map(|&m| Cell { family: 0, n: n0, m }))
            }
            Coupling::CoupledTauH2 | Coupling::CoupledTauH => {
                let power = if self.coupling == Coupling::CoupledTauH2 { 2 } else { 1 };
                for (family, &m0) in self.temporal_levels.iter().enumerate() {
                    for &n in &self.spatial_levels {
                        out.push(Cell { family, n, m: m0 * (n / n0).pow(power) });
                    }
                }
            }
            Coupling::Tensor => {
                for (family, &m) in self.temporal_levels.iter().enumerate() {
                    for &n in &self.spatial_levels {
                        out.push(Cell { family, n, m });
                    }
                }
            }
        }
        out
    }
}
