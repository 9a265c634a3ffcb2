//! Monte Carlo laboratory for phantom distribution functions of Markov-chain
//! maxima.
//!
//! A phantom distribution function `G` of a stationary sequence satisfies
//! `sup_x |P(M_n <= x) - G(x)^n| -> 0`, where `M_n` is the maximum of the first
//! `n` observations. The crate simulates chains ([`models`]), computes exact
//! answers for finite chains ([`oracle`]), builds empirical max distributions
//! ([`empirics`]), constructs phantoms from level sequences ([`phantom`]),
//! compares point-started chains against them ([`quenched`]) and estimates
//! relative extremal indices ([`relext`]). [`experiment`] ties these together
//! behind TOML configuration files.

pub mod empirics;
pub mod error;
pub mod experiment;
pub mod models;
pub mod oracle;
pub mod phantom;
pub mod quenched;
pub mod relext;
pub mod rng;

pub use error::{Error, Result};
