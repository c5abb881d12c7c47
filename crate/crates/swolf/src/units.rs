//! Nat/bit conversions.
//!
//! Every quantity inside the crate is kept in nats (rates, entropies) or
//! nats^2 (variances); bits are produced only when formatting results, so the
//! conversion is a single division and round-trips exactly.

/// ln 2, the nats-per-bit factor.
pub const LN_2: f64 = std::f64::consts::LN_2;

/// Rate/entropy conversion, nats -> bits.
pub fn nats_to_bits(x: f64) -> f64 {
    x / LN_2
}

/// Rate/entropy conversion, bits -> nats.
pub fn bits_to_nats(x: f64) -> f64 {
    x * LN_2
}

/// Variance conversion, nats^2 -> bits^2.
pub fn nats2_to_bits2(x: f64) -> f64 {
    x / (LN_2 * LN_2)
}

/// Variance conversion, bits^2 -> nats^2.
pub fn bits2_to_nats2(x: f64) -> f64 {
    x * (LN_2 * LN_2)
}
