//! Exact point counting over prime fields.
//!
//! The submodules provide the arithmetic helpers ([`arith`]), the brute-force
//! enumeration engine ([`engine`]) and a persistent count cache ([`cache`]).
//! This module defines the shared target/ambient vocabulary and error type.

pub mod arith;
pub mod cache;
pub mod engine;

use crate::poly::{MultiPoly, PolyDto, PolyError};
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicU64, Ordering};

/// Where a system of equations lives.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ambient {
    /// Projective space with `coords` homogeneous coordinates (so `P^{coords-1}`).
    Proj { coords: usize },
    /// Product of projective spaces; `blocks[i]` is the coordinate count of
    /// factor `i`, variables laid out block after block.
    MultiProj { blocks: Vec<usize> },
    /// Double cover `t^2 = F` of `P^{coords-1}` inside the weighted space
    /// where `t` has weight `t_weight`. Only the base coordinates are
    /// explicit variables; `F` is carried separately as the branch datum.
    WeightedCover { t_weight: u32, coords: usize },
}

impl Ambient {
    /// Total number of explicit polynomial variables.
    pub fn var_count(&self) -> usize {
        match self {
            Ambient::Proj { coords } => *coords,
            Ambient::MultiProj { blocks } => blocks.iter().sum(),
            Ambient::WeightedCover { coords, .. } => *coords,
        }
    }
}

/// A countable model: an ambient, equations cutting out the variety, and an
/// optional double-cover branch polynomial (mandatory for
/// [`Ambient::WeightedCover`], optional for a cover of a multiprojective
/// variety, absent otherwise).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTarget {
    pub ambient: Ambient,
    pub eqs: Vec<MultiPoly>,
    pub branch: Option<MultiPoly>,
}

/// Canonical serialization of a target, used for content-addressed caching.
#[derive(Serialize, Deserialize)]
struct TargetDto {
    ambient: Ambient,
    eqs: Vec<PolyDto>,
    branch: Option<PolyDto>,
}

impl CountTarget {
    pub fn projective(eqs: Vec<MultiPoly>) -> Self {
        let coords = eqs.first().map(|e| e.nvars()).unwrap_or(0);
        CountTarget { ambient: Ambient::Proj { coords }, eqs, branch: None }
    }

    pub fn weighted_cover(t_weight: u32, branch: MultiPoly) -> Self {
        CountTarget {
            ambient: Ambient::WeightedCover { t_weight, coords: branch.nvars() },
            eqs: Vec::new(),
            branch: Some(branch),
        }
    }

    pub fn multiprojective(blocks: Vec<usize>, eqs: Vec<MultiPoly>) -> Self {
        CountTarget { ambient: Ambient::MultiProj { blocks }, eqs, branch: None }
    }

    /// Stable content hash of the model (hex SHA-256 of the canonical JSON).
    /// Terms are serialized in their sorted map order, so polynomial identity
    /// implies hash identity.
    pub fn content_hash(&self) -> String {
        let dto = TargetDto {
            ambient: self.ambient.clone(),
            eqs: self.eqs.iter().map(PolyDto::from).collect(),
            branch: self.branch.as_ref().map(PolyDto::from),
        };
        let json = serde_json::to_string(&dto).expect("serializable");
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(json.as_bytes());
        hex(&h.finalize())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CountError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
    #[error("p = 2 is not supported by the counting engine")]
    EvenPrimeUnsupported,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("enumeration needs {needed} points, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("equation {eq_index} is not homogeneous")]
    NotHomogeneous { eq_index: usize },
    #[error("equation {eq_index} is not homogeneous in block {block}")]
    NotMultihomogeneous { eq_index: usize, block: usize },
    #[error("bad model: {0}")]
    BadModel(String),
    #[error("affine count {count} of {label} at p={p} is not divisible by p^2")]
    DivisibilityFailure { label: String, p: u64, count: u128 },
}

/// Session-wide counting context: the point budget for a single top-level
/// call, and a monotone counter of enumerated points (used to verify that
/// cache hits do no work).
#[derive(Debug)]
pub struct CountCtx {
    pub budget: u128,
    enumerated: AtomicU64,
}

impl Default for CountCtx {
    fn default() -> Self {
        CountCtx { budget: 100_000_000, enumerated: AtomicU64::new(0) }
    }
}

impl CountCtx {
    pub fn with_budget(budget: u128) -> Self {
        CountCtx { budget, enumerated: AtomicU64::new(0) }
    }

    pub fn enumerated(&self) -> u64 {
        self.enumerated.load(Ordering::Relaxed)
    }

    pub(crate) fn record(&self, points: u128) {
        self.enumerated.fetch_add(points.min(u64::MAX as u128) as u64, Ordering::Relaxed);
    }

    pub(crate) fn check_budget(&self, needed: u128) -> Result<(), CountError> {
        if needed > self.budget {
            Err(CountError::BudgetExceeded { needed, budget: self.budget })
        } else {
            Ok(())
        }
    }
}
