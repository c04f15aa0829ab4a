//! Fastest mixing reversible Markov chains on friendship graphs.
//!
//! The crate builds reversible chains on friendship graphs (m triangles
//! sharing a center vertex) and on their star reductions, computes the
//! second largest eigenvalue modulus (SLEM), evaluates the closed-form
//! optimal center-edge weights for every parameter regime, checks them
//! against an independent numerical minimizer, and traces the Pareto
//! frontier between convergence rate and the fixed friend-edge weights.
//!
//! Vertex labeling is fixed: the center is vertex `0` and blade `i`
//! (1-based) owns vertices `2i-1` and `2i`. Equilibrium masses are stored
//! unnormalized; every quantity computed here is invariant under scaling
//! of `pi` together with the weights.

// `!(x <= tol)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod cli;
pub mod closed_form;
pub mod error;
pub mod format;
pub mod mixing;
pub mod oracle;
pub mod pareto;
pub mod reduction;
pub mod spectral;

pub use chain::{
    build_friendship_graph, build_transition_matrix, symmetric_laplacian, validate_chain, ChainSpec, Edge, EdgeClass,
    Equilibrium, FeasibilityReport, Topology, TopologyKind, TransitionMatrix, Weights,
};
pub use error::{Error, Result};
pub use spectral::{eigen_symmetric, slem, symmetrize, SlemReport, SymmetricEigen};
