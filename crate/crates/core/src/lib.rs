//! Systems of bilinear and sesquilinear forms on mixed graphs.
//!
//! The crate provides:
//!
//! - domain types for mixed graphs, form representations, and families of
//!   linear bijections, with the transformation law
//!   `M_A = S_i^T M_B S_j^{(conj)}` and its verification ([`forms`]);
//! - a constructive linearization of black-box homeomorphism witnesses:
//!   basis-pair extraction and assembly of the intertwining linear family
//!   ([`linearize`]);
//! - congruence / *congruence canonical block structure of a single form:
//!   regularization, cosquare Jordan analysis, block recovery, assembly,
//!   and an equivalence decision ([`canonical`]);
//! - seeded generators for representations, invertible matrices, oracle
//!   specs, form-preserving witnesses, and canonical block multisets
//!   ([`generators`]);
//! - the JSON file formats shared with the command-line tool ([`io`]).
//!
//! All operations are pure functions of immutable inputs and explicit
//! seeds; nothing here spawns threads or keeps global state.

pub mod canonical;
pub mod error;
pub mod forms;
pub mod generators;
pub mod io;
pub mod linearize;
pub mod matrix;
mod jordan;
mod rng;

pub use canonical::{
    assemble_canonical_matrix, canonical_blocks, congruent_decision, cosquare, regularize,
    CanonicalBlock, CanonicalBlockMultiset, CongruenceDecision, DecisionOptions, Regularization,
};
pub use error::{FormError, Result};
pub use forms::{
    verify_linear_isomorphism, Edge, EdgeResidual, FormKind, FormRepresentation, MixedGraph,
    TransformFamily, VerificationReport,
};
pub use generators::{
    form_preserving_witness, make_oracle, random_invertible, random_representation,
    sample_canonical_multiset, GFunction, OracleSpec, WitnessBundle,
};
pub use linearize::{
    extract_basis_pair, linearize_topological_isomorphism, oracle_self_test, BasisPair,
    ExtractOutcome, ExtractTrace, HomeomorphismOracle, LinearizationOutcome, LinearizeConfig,
    SelfTestReport, TopologicalIsomorphismWitness,
};
pub use matrix::{CMatrix, CVector};
