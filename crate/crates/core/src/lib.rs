//! Random linear coding for dense networks of unreliable sensor nodes.
//!
//! * [`field`] and [`matrix`]: GF(256) arithmetic and dense elimination.
//! * [`storage`]: decentralized erasure codes built by pre-routing each data
//!   packet to a logarithmic number of random storage nodes.
//! * [`fountain`]: the constant-degree relaxation using XOR fountain codes
//!   and a peeling decoder.
//! * [`radio`]: a layered network of untuned relays, comparing network coding
//!   (max-flow) against blind forwarding.
//! * [`harness`]: seeded, worker-count-independent experiment runs with
//!   CSV/JSON output.

pub mod field;
pub mod fountain;
pub mod harness;
pub mod matrix;
pub mod radio;
pub mod rng;
pub mod selftest;
pub mod stats;
pub mod storage;

pub use field::{FieldError, Gf256};
pub use fountain::{DegreeDistribution, FountainPacket, FountainSpec, FountainStats, PeelResult};
pub use matrix::{DimensionError, FieldMatrix, SingularReport, SolveError};
pub use radio::{CollisionRule, FlowResult, RadioMode, RadioNetwork, RadioNetworkSpec};
pub use storage::{CodedPacket, DisseminationGraph, StorageCodeSpec, SuccessStats};

/// Symbols carried by one packet.
pub type Payload = Vec<Gf256>;
