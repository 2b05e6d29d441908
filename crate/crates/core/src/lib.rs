//! Curvature of four-manifolds and their twistor spaces, the harmonicity
//! of the two natural almost complex structures, and a finite-difference
//! oracle on the six-dimensional total space.

pub mod catalog;
pub mod cli;
pub mod decomp;
pub mod error;
pub mod harmonicity;
pub mod jet;
pub mod lambda2;
pub mod oracle;
pub mod riemann;
pub mod sampling;
pub mod twistor;
