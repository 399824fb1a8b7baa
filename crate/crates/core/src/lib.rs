//! Generating-function calculus for symplectic micromorphisms.
//!
//! The crate implements, at desk scale and in flat charts:
//!
//! - exact truncated-series (jet) arithmetic ([`jet`]),
//! - local generating functions of canonical relations between cotangent
//!   charts, cotangent lifts, the Schwartz transform, and clean-intersection
//!   checks ([`genfun`], [`morse`]),
//! - the stationary-point composition `G ⋆ F`, both order-by-order on series
//!   and pointwise by Newton iteration ([`compose`]),
//! - Hamilton-Jacobi evolution series `S(t, p, Q)` with the time-energy
//!   module structure ([`hamjac`]),
//! - flow recovery from generating functions with symplecticity and energy
//!   verification against a Runge-Kutta oracle ([`dynamics`]),
//! - matrix Lie exponential/logarithm and the group-multiplication
//!   generating function `<mu, log(exp v exp w)>` ([`liegroup`]),
//! - a small expression language for Hamiltonians and core maps ([`expr`]).

pub mod compose;
pub mod dynamics;
pub mod error;
pub mod expr;
pub mod fd;
pub mod genfun;
pub mod hamjac;
pub mod jet;
pub mod liegroup;
pub mod morse;

pub use error::{Error, Result};
pub use jet::{Elementary, Jet, JetJson, MultiIndex};

use rand_chacha::rand_core::SeedableRng;

/// Deterministic RNG used by randomized probes and checks.
pub fn seeded_rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}
