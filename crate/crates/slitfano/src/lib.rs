//! Scattering by a perfectly conducting slab grating with two subwavelength
//! slits per period, solved two independent ways:
//!
//! * a direct boundary-integral solver in a weighted Chebyshev basis
//!   ([`bie`]), and
//! * closed-form leading-order asymptotics of the same problem
//!   ([`asymptotics`]),
//!
//! together with complex resonance location ([`resonance`]), transmission
//! sweeps with Fano feature detection and slit-field enhancement scaling
//! ([`spectra`]), and a scriptable CSV front end ([`cli`]).

pub mod asymptotics;
pub mod bie;
pub mod cheb;
pub mod cli;
pub mod error;
pub mod greens;
pub mod linalg;
pub mod resonance;
pub mod special;
pub mod spectra;

pub use error::{Error, Result};
pub use greens::{BetaSet, PhysicalConfig, SpectralPoint};
