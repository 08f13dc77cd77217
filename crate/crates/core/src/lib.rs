//! Simulator and verification toolkit for the k-edge-connectivity lower bound
//! in the distributed sketching model.
//!
//! * [`model`]: multigraphs, node views, and protocol execution.
//! * [`mincut`]: exact minimum-cut oracle.
//! * [`agm`]: randomized linear-sketch upper bound.
//! * [`lbgraph`]: the lower-bound graph family.
//! * [`setfam`]: bounded-intersection set families and separated pairs.
//! * [`overlap`]: the UniqueOverlap problem, its protocol, and an attack.
//! * [`reduction`]: the zero-error three-party simulation.

pub mod agm;
pub mod bits;
pub mod lbgraph;
pub mod mincut;
pub mod model;
pub mod overlap;
pub mod protocols;
pub mod reduction;
pub mod setfam;

pub use bits::BitString;
pub use model::{
    execute, Advice, AdviceMap, Decision, ModelError, MultiGraph, NodeId, NodeView,
    SharedRandomness, SketchProtocol, Transcript,
};
