//! Resource theory of communication over quantum channels.
//!
//! The library treats constant channels (channels that output a fixed state
//! regardless of their input) as the free resource for classical
//! communication and computes, via a self-contained semidefinite-programming
//! solver, the quantities this viewpoint attaches to a channel:
//!
//! * robustness of communication and the max-relative entropy measure,
//!   together with its diamond-norm smoothed version and max-information,
//! * discrimination advantages of state ensembles under the channel,
//! * non-signalling-assisted one-shot classical coding and the matching
//!   converse bound,
//! * one-shot channel simulation (dilution) cost from noiseless identities.
//!
//! Everything is built on dense complex matrices with subsystem bookkeeping
//! ([`linalg`]), a primal-dual interior-point SDP solver over Hermitian
//! blocks ([`sdp`]), and Choi-matrix representations of channels
//! ([`channels`]) and bipartite superchannels ([`comb`]).

pub mod capacity;
pub mod channels;
pub mod comb;
pub mod discrimination;
pub mod linalg;
pub mod resource;
pub mod rng;
pub mod sdp;

pub use capacity::{CodingResult, DilutionResult};
pub use channels::{ChannelError, ChannelSpec, QuantumChannel};
pub use comb::{CombSpec, NsComb, SandwichSuperchannel};
pub use discrimination::{EnsembleSpec, Povm, StateEnsemble};
pub use linalg::{ComplexMatrix, HermitianOperator, SubsystemDims};
pub use resource::ResourceReport;
pub use sdp::{SdpProblem, SdpSolution, SolveStatus};
