//! Exact interferometry of independent Fock-state sources.
//!
//! Two (or three) Bose-Einstein condensates, each in a number state, feed a
//! beamsplitter network; detectors count every particle in each output
//! channel. Although no mode has a phase of its own, the joint count
//! statistics show strong interference, and parity observables built from
//! them violate local-inequality bounds.
//!
//! The crate computes these statistics exactly. Amplitudes are constant-term
//! extractions from products of phase polynomials with Gaussian-rational
//! coefficients, so every probability on the default path is an exact
//! rational and every structural zero is exactly zero. A brute-force
//! multinomial oracle, closed-form correlators, loss models, alternative
//! source states, and a pixel-level detection model are layered on top.

pub mod altstate;
pub mod bell;
pub mod detection;
pub mod engine;
pub mod error;
pub mod exact;
pub mod ghz;
pub mod hardy;
pub mod model;
pub mod oracle;
pub mod poly;
pub mod validation;

pub use error::{Error, Result};
pub use model::{
    build_network, check_orthonormal, AngleSettings, Distribution, Geometry, LossSpec,
    OutcomeCounts, OutputMap, Placement, SourceSpec, Support,
};
