//! A numerical laboratory for averaging along Følner schedules on the
//! integer lattice: Fourier-Bohr coefficients of orbit codings, empirical
//! point-spectrum detection, Besicovitch almost-periodicity certification,
//! and diffraction of weighted Dirac combs.
//!
//! The building blocks are explicit dynamical systems (substitution
//! subshifts, rotation codings, periodic and step sequences, seeded
//! Bernoulli controls) observed through cylinder observables. All averaging
//! kernels share one deterministic pairwise reduction, so every report is
//! reproducible bit for bit across thread counts.

pub mod averaging;
pub mod cli;
pub mod diffraction;
pub mod error;
pub mod folner;
pub mod freq;
pub mod observable;
pub mod reduction;
pub mod signal;
pub mod source;
pub mod spectrum;
pub mod window;
pub mod wwpoint;

pub use error::{Error, Result};
pub use freq::Frequency;
pub use observable::CylinderObservable;
pub use signal::{CodedSystem, OrbitSignal, SignalProvider, SyntheticSignal};
pub use source::PointSource;
pub use window::Window;
