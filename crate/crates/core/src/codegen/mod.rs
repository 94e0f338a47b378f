//! Lowering of analyzed programs to a message-passing form.
//!
//! The target is a single-program master/worker shape: rank 0 keeps the
//! program's sequential control flow and all authoritative state, every
//! other rank runs a tag-dispatched service loop that executes loop chunks
//! on demand. The lowered form is an explicit IR ([`ir::MpiStmt`]) that the
//! deterministic simulator executes directly and the C emitter prints as a
//! self-contained C99 translation unit.

pub mod build;
pub mod cgen;
pub mod ir;
pub mod mutate;

pub use build::{build_mpi, BuildOptions, FallbackStyle};
pub use ir::{MessageTag, MpiProgram, MpiStmt, Payload, RecvTag, Source};
