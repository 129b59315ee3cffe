//! Synchronous forwarders over classical linear logic.
//!
//! Type checking of forwarder processes, coherence of global types,
//! translation between global types and arbiter processes, and
//! composition by cut elimination.

pub mod arbiterize;
pub mod coherence;
pub mod dynamics;
pub mod globalize;
pub mod json;
pub mod logic_cll;
pub mod logic_sync;
pub mod oracle;
pub mod surface;
pub mod terms;
