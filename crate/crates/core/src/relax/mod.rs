//! The relaxation hierarchy: IBP, Triangle, multi-neuron graph hulls, the
//! optimal layerwise relaxation, and cross-layer graph hulls. Every engine
//! assembles a constraint system over per-layer variable blocks and extracts
//! output bounds by exact LP.

pub mod hulls;
pub mod ibp;
pub mod pipeline;

pub use hulls::{layer_graph_hull, relu_graph_hull, triangle_relax_neuron};
pub use ibp::ibp_bounds;
pub use pipeline::{bound, relax_affine, BranchConstraint};

use crate::geometry::ConstraintSystem;
use crate::rat::Q;
use crate::{Error, Result};
use num_traits::Signed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelaxationSpec {
    Ibp,
    Triangle,
    MultiNeuron(usize),
    /// The most precise layerwise relaxation; identical to `CrossLayer(1)`.
    LayerwiseOptimal,
    CrossLayer(usize),
}

impl RelaxationSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        match text {
            "ibp" => return Ok(RelaxationSpec::Ibp),
            "triangle" => return Ok(RelaxationSpec::Triangle),
            "p1" => return Ok(RelaxationSpec::LayerwiseOptimal),
            _ => {}
        }
        if let Some(k) = text.strip_prefix("mk:") {
            let k: usize = k
                .parse()
                .map_err(|_| Error::Parse(format!("bad multi-neuron budget in {text:?}")))?;
            if k == 0 {
                return Err(Error::Parse("multi-neuron budget must be >= 1".into()));
            }
            return Ok(RelaxationSpec::MultiNeuron(k));
        }
        if let Some(r) = text.strip_prefix("pr:") {
            let r: usize = r
                .parse()
                .map_err(|_| Error::Parse(format!("bad window size in {text:?}")))?;
            if r == 0 {
                return Err(Error::Parse("window size must be >= 1".into()));
            }
            return Ok(RelaxationSpec::CrossLayer(r));
        }
        Err(Error::Parse(format!(
            "unknown method {text:?}; expected ibp|triangle|mk:K|p1|pr:R"
        )))
    }
}

impl std::fmt::Display for RelaxationSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RelaxationSpec::Ibp => write!(f, "ibp"),
            RelaxationSpec::Triangle => write!(f, "triangle"),
            RelaxationSpec::MultiNeuron(k) => write!(f, "mk:{k}"),
            RelaxationSpec::LayerwiseOptimal => write!(f, "p1"),
            RelaxationSpec::CrossLayer(r) => write!(f, "pr:{r}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    StableActive,
    StableInactive,
    Unstable,
}

/// Exact pre-activation interval of one ReLU neuron.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeuronBounds {
    pub lo: Q,
    pub hi: Q,
}

impl NeuronBounds {
    pub fn new(lo: Q, hi: Q) -> Result<Self> {
        if lo > hi {
            return Err(Error::Invalid("neuron bounds lo > hi".into()));
        }
        Ok(NeuronBounds { lo, hi })
    }

    pub fn stability(&self) -> Stability {
        if self.lo.is_negative() && self.hi.is_positive() {
            Stability::Unstable
        } else if !self.hi.is_positive() {
            Stability::StableInactive
        } else {
            Stability::StableActive
        }
    }
}

/// Stability and bounds for one ReLU neuron of an assembled system.
#[derive(Debug, Clone)]
pub struct NeuronInfo {
    pub layer: usize,
    pub coord: usize,
    pub bounds: NeuronBounds,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RelaxStats {
    pub constraints: usize,
    pub hull_calls: usize,
    pub lp_calls: usize,
}

/// Output bounds plus the assembled system and instrumentation.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub lower: Vec<Q>,
    pub upper: Vec<Q>,
    pub system: ConstraintSystem,
    pub stats: RelaxStats,
    /// Set by callers that compared against the oracle.
    pub exact: Option<bool>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{q, qi};

    #[test]
    fn spec_strings_round_trip() {
        for s in ["ibp", "triangle", "mk:2", "p1", "pr:3"] {
            let spec = RelaxationSpec::parse(s).unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!(RelaxationSpec::parse("mk:0").is_err());
        assert!(RelaxationSpec::parse("pr:0").is_err());
        assert!(RelaxationSpec::parse("crown").is_err());
    }

    #[test]
    fn stability_tags() {
        let b = NeuronBounds::new(q(-1, 2), q(1, 2)).unwrap();
        assert_eq!(b.stability(), Stability::Unstable);
        let b = NeuronBounds::new(qi(0), qi(1)).unwrap();
        assert_eq!(b.stability(), Stability::StableActive);
        let b = NeuronBounds::new(qi(-2), qi(0)).unwrap();
        assert_eq!(b.stability(), Stability::StableInactive);
        assert!(NeuronBounds::new(qi(1), qi(0)).is_err());
    }
}
