//! Leveled approximate-arithmetic HE with slot batching.

mod ciphertext;
mod encoding;
pub mod eval;
mod keys;
mod params;

pub use ciphertext::{
    ct_size_bytes, decode, decrypt, decrypt_values, encode, encode_constant, encrypt, Ciphertext, Plaintext,
};
pub use encoding::Encoder;
pub use eval::{
    add, add_plain, mod_switch_plain, mod_switch_to, mul, mul_opt, mul_plain, mul_plain_accumulate, negate, rescale, scales_match, sub,
    sub_plain, SCALE_TOLERANCE,
};
pub use keys::{digits_for_limb, keygen, relin_entry_count, KeySet, PublicKey, RelinKey, SecretKey, RELIN_DIGIT_BITS};
pub use params::{
    ParamsFile, SchemeParams, BASE_PRIME_BITS, DEFAULT_N, DEFAULT_SCALE_BITS, DEFAULT_SIGMA, RESCALE_PRIME_BITS,
    SECURITY_DISCLAIMER,
};
