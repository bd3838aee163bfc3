//! Seeded deterministic bit source and the exact sampling primitives built
//! on single bits.
//!
//! Every random decision in the crate reduces to [`BitSource::next_bit`], so
//! any output is a pure function of the inputs and the master seed. Bernoulli
//! draws for rational probabilities compare the bit stream against the lazy
//! binary expansion of the probability, which introduces no rounding at all.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::arith::Rational;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RandomnessError {
    #[error("bernoulli probability must lie in [0, 1]")]
    ProbabilityOutOfRange,
    #[error("uniform_below requires n >= 1")]
    EmptyRange,
    #[error("seed must be a 64-digit hex string or a decimal integer")]
    InvalidSeed,
}

/// Deterministic stream of pseudorandom bits with a 256-bit seed.
///
/// Children derived via [`BitSource::split`] depend only on `(seed, label)`,
/// so independent subtasks can consume them concurrently without affecting
/// each other's streams.
pub struct BitSource {
    core: Core,
    consumed: u64,
}

enum Core {
    Chacha {
        seed: [u8; 32],
        rng: ChaCha12Rng,
        buf: u64,
        left: u32,
    },
    /// Fixed bit tape, for tests that need scripted randomness.
    Tape { bits: Vec<bool>, pos: usize },
}

impl BitSource {
    pub fn from_seed(seed: [u8; 32]) -> Self {
        BitSource {
            core: Core::Chacha {
                seed,
                rng: ChaCha12Rng::from_seed(seed),
                buf: 0,
                left: 0,
            },
            consumed: 0,
        }
    }

    /// Convenience seeding from a small integer.
    pub fn from_u64_seed(seed: u64) -> Self {
        let mut bytes = [0u8; 32];
        bytes[..8].copy_from_slice(&seed.to_le_bytes());
        Self::from_seed(bytes)
    }

    /// Fresh source seeded from system entropy.
    pub fn from_entropy() -> Self {
        let mut seed = [0u8; 32];
        rand::rngs::OsRng.fill_bytes(&mut seed);
        Self::from_seed(seed)
    }

    /// Source that replays a fixed tape of bits. Panics when the tape runs
    /// out; intended for tests only.
    pub fn from_tape(bits: Vec<bool>) -> Self {
        BitSource {
            core: Core::Tape { bits, pos: 0 },
            consumed: 0,
        }
    }

    /// The seed, when this source is generator-backed.
    pub fn seed(&self) -> Option<[u8; 32]> {
        match &self.core {
            Core::Chacha { seed, .. } => Some(*seed),
            Core::Tape { .. } => None,
        }
    }

    pub fn seed_hex(&self) -> Option<String> {
        self.seed().map(hex::encode)
    }

    /// Number of bits handed out so far.
    pub fn bits_consumed(&self) -> u64 {
        self.consumed
    }

    pub fn next_bit(&mut self) -> bool {
        self.consumed += 1;
        match &mut self.core {
            Core::Chacha { rng, buf, left, .. } => {
                if *left == 0 {
                    *buf = rng.next_u64();
                    *left = 64;
                }
                let bit = *buf >> 63 == 1;
                *buf <<= 1;
                *left -= 1;
                bit
            }
            Core::Tape { bits, pos } => {
                let bit = *bits.get(*pos).expect("bit tape exhausted");
                *pos += 1;
                bit
            }
        }
    }

    /// Child source keyed by `(seed, label)`. Distinct labels give
    /// statistically independent streams; the child is independent of how
    /// many bits the parent has consumed.
    pub fn split(&self, label: &[u8]) -> BitSource {
        let seed = self
            .seed()
            .expect("split is not available on tape-backed sources");
        let mut hasher = Sha256::new();
        hasher.update(b"bitsource-split");
        hasher.update(seed);
        hasher.update((label.len() as u64).to_le_bytes());
        hasher.update(label);
        Self::from_seed(hasher.finalize().into())
    }

    /// Returns true with probability exactly `p`.
    ///
    /// Simulates `U < p` for uniform `U` on `[0,1)` by expanding both sides
    /// in binary lazily and stopping at the first disagreeing bit; the
    /// expected number of bits consumed is at most 2.
    pub fn bernoulli_exact(&mut self, p: &Rational) -> Result<bool, RandomnessError> {
        if p.is_negative() || *p > Rational::one() {
            return Err(RandomnessError::ProbabilityOutOfRange);
        }
        self.bernoulli_ratio(p.numer(), p.denom())
    }

    /// [`Self::bernoulli_exact`] for a probability given as `num/den`
    /// without requiring reduced form. Needs `0 <= num <= den`.
    pub fn bernoulli_ratio(&mut self, num: &BigInt, den: &BigInt) -> Result<bool, RandomnessError> {
        if num.is_negative() || num > den {
            return Err(RandomnessError::ProbabilityOutOfRange);
        }
        if num.is_zero() {
            return Ok(false);
        }
        if num == den {
            return Ok(true);
        }
        // The doubling loop needs one bit of headroom above den.
        if let (Some(n), Some(d)) = (num.to_u128(), den.to_u128()) {
            if d < 1u128 << 127 {
                return Ok(self.bernoulli_u128(n, d));
            }
        }
        let mut n = num.clone();
        loop {
            n <<= 1;
            let p_bit = n >= *den;
            if p_bit {
                n -= den;
            }
            if self.next_bit() != p_bit {
                // u=0 against p-bit 1 decides U < p; u=1 against 0 decides U > p.
                return Ok(p_bit);
            }
            if n.is_zero() {
                // Remaining expansion of p is all zeros, so U >= p.
                return Ok(false);
            }
        }
    }

    /// Fast-path Bernoulli for ratios already known to fit in `u128`.
    /// Requires `0 < num <= den < 2^127`.
    pub(crate) fn bernoulli_ratio_u128(&mut self, num: u128, den: u128) -> bool {
        debug_assert!(num <= den && den < 1u128 << 127);
        if num == 0 {
            return false;
        }
        if num == den {
            return true;
        }
        self.bernoulli_u128(num, den)
    }

    fn bernoulli_u128(&mut self, mut n: u128, d: u128) -> bool {
        loop {
            n <<= 1;
            let p_bit = n >= d;
            if p_bit {
                n -= d;
            }
            if self.next_bit() != p_bit {
                return p_bit;
            }
            if n == 0 {
                return false;
            }
        }
    }

    /// Exactly uniform integer in `[0, n)`, by rejection on
    /// `ceil(log2 n)`-bit draws.
    pub fn uniform_below(&mut self, n: &BigInt) -> Result<BigInt, RandomnessError> {
        if n < &BigInt::one() {
            return Err(RandomnessError::EmptyRange);
        }
        if let Some(small) = n.to_u64() {
            return Ok(BigInt::from(self.uniform_below_u64(small)?));
        }
        let bits = (n - 1u32).bits();
        loop {
            let mut candidate = BigInt::zero();
            for _ in 0..bits {
                candidate <<= 1;
                if self.next_bit() {
                    candidate += 1u32;
                }
            }
            if candidate < *n {
                return Ok(candidate);
            }
        }
    }

    /// [`Self::uniform_below`] specialized to `u64`, consuming exactly the
    /// same bits as the general version would.
    pub fn uniform_below_u64(&mut self, n: u64) -> Result<u64, RandomnessError> {
        if n == 0 {
            return Err(RandomnessError::EmptyRange);
        }
        let bits = 64 - (n - 1).leading_zeros();
        loop {
            let mut candidate = 0u64;
            for _ in 0..bits {
                candidate = (candidate << 1) | u64::from(self.next_bit());
            }
            if candidate < n {
                return Ok(candidate);
            }
        }
    }
}

impl std::fmt::Debug for BitSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.core {
            Core::Chacha { seed, .. } => f
                .debug_struct("BitSource")
                .field("seed", &hex::encode(seed))
                .field("consumed", &self.consumed)
                .finish(),
            Core::Tape { bits, pos } => f
                .debug_struct("BitSource")
                .field("tape_len", &bits.len())
                .field("pos", pos)
                .field("consumed", &self.consumed)
                .finish(),
        }
    }
}

/// Parses a CLI seed: either 64 hex digits or a decimal integer (reduced
/// modulo 2^256, big-endian).
pub fn parse_seed(s: &str) -> Result<[u8; 32], RandomnessError> {
    let s = s.trim();
    if s.len() == 64 && s.chars().all(|c| c.is_ascii_hexdigit()) {
        let bytes = hex::decode(s).map_err(|_| RandomnessError::InvalidSeed)?;
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&bytes);
        return Ok(seed);
    }
    let value: BigInt = s.parse().map_err(|_| RandomnessError::InvalidSeed)?;
    if value.is_negative() {
        return Err(RandomnessError::InvalidSeed);
    }
    let (_, digits) = value.to_bytes_be();
    if digits.len() > 32 {
        return Err(RandomnessError::InvalidSeed);
    }
    let mut seed = [0u8; 32];
    seed[32 - digits.len()..].copy_from_slice(&digits);
    Ok(seed)
}
