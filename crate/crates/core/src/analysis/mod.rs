//! Static analysis of pragma blocks.
//!
//! Turns each `parallel for` block into a distribution decision:
//! [`loops`] checks the loop shape, [`classify`] assigns data-movement
//! classes, [`accesses`] matches subscripts against affine forms, [`plan`]
//! combines them into transfer plans or fallback reasons, and [`report`]
//! serializes the result.

pub mod accesses;
pub mod classify;
pub mod loops;
pub mod plan;
pub mod report;
