//! Desk-scale verification toolkit for dissociated permutation groups.
//!
//! * [`structure`]: finite relational structures, embeddings, canonical codes,
//!   free amalgamation.
//! * [`metric`] and [`diversity`]: integral metric spaces and diversities with
//!   their canonical amalgams.
//! * [`fraisse`]: exhaustive amalgamation-property checkers, the incremental
//!   limit builder and the tree of tuple types.
//! * [`permgroup`]: permutation groups with certified stabilizer chains.
//! * [`repcheck`]: exact rational projectors for permutation representations.
//! * [`exchange`]: sampling of exchangeable processes and conditional
//!   independence tests.

pub mod diversity;
pub mod exchange;
pub mod fraisse;
pub mod metric;
pub mod permgroup;
pub mod repcheck;
pub mod structure;
