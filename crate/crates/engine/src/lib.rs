//! Attacker deduction and bounded protocol exploration.
//!
//! This crate houses the dynamic half of the verifier: frames and Dolev-Yao
//! deduction (derivability, static equivalence), the bounded operational
//! semantics for single processes and bi-processes, and the query drivers
//! for secrecy, correspondence, and diff-equivalence.

pub mod bi;
pub mod builders;
pub mod config;
pub mod deduce;
pub mod explore;
pub mod frame;
pub mod queries;

pub use bi::{check_equivalence, project_trace, BiConfiguration, Divergence, EquivalenceOutcome};
pub use builders::{
    build_anonymity, build_independency, build_multi_session_receipt_freeness,
    build_prescription_privacy, build_receipt_freeness, build_untraceability, merge_biprocess,
    AgentSelector, BuildError, IndependencyBase, InitStep, ProtocolShape, Role, RolePieces,
    StepSource, UntraceMode,
};
pub use config::{replay, Bounds, Configuration, Plan, Trace, TraceStep};
pub use deduce::{derivable, derivable_with, statically_equivalent, Knowledge, StaticVerdict};
pub use explore::{explore, Explored, SearchStats};
pub use frame::Frame;
pub use queries::{
    check_correspondence, check_secrecy, CorrespondenceOutcome, SecrecyOutcome,
};
