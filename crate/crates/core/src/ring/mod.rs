//! RNS polynomial arithmetic over Z_q[x]/(x^n + 1).

mod modulus;
mod ntt;
mod poly;
mod primes;
mod sample;

pub use modulus::Modulus;
pub use ntt::NttTable;
pub use poly::{Domain, RingParams, RnsPoly};
pub use primes::{is_prime, ntt_primes, primitive_root_2n};
pub use sample::{
    gaussian_coeffs, rng_from_seed, sample_gaussian, sample_ternary, sample_uniform, ternary_coeffs,
    uniform_with,
};
