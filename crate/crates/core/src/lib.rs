//! omp2dm: a source-to-source transpiler that turns OpenMP `parallel for`
//! programs written in a restricted C subset into master/worker
//! message-passing programs, plus the machinery to check the translation:
//! a sequential interpreter (the semantic oracle) and a deterministic
//! message-passing simulator, compared against each other by a differential
//! verifier.
//!
//! Pipeline: [`parser`] → [`analysis`] → [`codegen`] → [`runtime`].

pub mod analysis;
pub mod ast;
pub mod codegen;
pub mod errors;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod runtime;
pub mod span;
