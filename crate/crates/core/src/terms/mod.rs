//! Core term language: propositions, processes, global types, contexts and derivations.

mod context;
mod derivation;
mod global;
mod name;
mod process;
mod prop;

pub use context::{BoxKind, Context, ContextError, Entry, Location, Typed};
pub use derivation::{CllRule, CoherenceRule, CompoundRule, Derivation, Judgement, Rule, SyncRule, System};
pub use global::GlobalType;
pub use name::Name;
pub use process::{is_canonical_binder, Process};
pub use prop::{Atom, Connective, Polarity, Prop};
