//! Opcode-frequency histograms for telling metamorphic code variants apart.
//!
//! Listings are parsed ([`asm`]), turned into one normalized mnemonic
//! histogram per subroutine ([`histogram`]), compared with a Minkowski-form
//! distance and min-match pairing ([`distance`]) and classified against a
//! threshold ([`classify`]). [`mutation`] rewrites programs the way
//! metamorphic engines do, and [`synth`] generates seeded test programs.

pub mod asm;
pub mod cli;
pub mod classify;
pub mod distance;
pub mod histogram;
pub mod mutation;
pub mod rng;
pub mod synth;
