//! Pinned hashing and random number helpers.
//!
//! Everything reproducible in this crate (stub generation, toy embeddings,
//! target sampling) draws from PCG32 (XSH-RR 64/32) with a fixed stream, and
//! derives per-string seeds with 64-bit FNV-1a. Bounded draws use Lemire's
//! multiply-and-reject method on `next_u32`, implemented here so the mapping
//! from raw generator output to indices does not depend on a `rand` release.

use rand_core::Rng;
use rand_pcg::Pcg32;

/// PCG's reference default stream constant.
pub const PCG_STREAM: u64 = 0x0a02_bdbf_7bb3_c0a7;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a over the UTF-8 bytes of `text`.
pub fn fnv1a_64(text: &str) -> u64 {
    text.as_bytes().iter().fold(FNV_OFFSET, |hash, &byte| {
        (hash ^ u64::from(byte)).wrapping_mul(FNV_PRIME)
    })
}

/// Thin wrapper over [`Pcg32`] exposing the few draws the crate needs.
#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: Pcg32,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Pcg32::new(seed, PCG_STREAM),
        }
    }

    pub fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    /// Uniform integer in `0..bound`. `bound` must be non-zero.
    pub fn below(&mut self, bound: u32) -> u32 {
        assert!(bound > 0, "empty range");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let product = u64::from(self.next_u32()) * u64::from(bound);
            if (product as u32) >= threshold {
                return (product >> 32) as u32;
            }
        }
    }

    /// Uniform integer in `low..=high`.
    pub fn inclusive(&mut self, low: u32, high: u32) -> u32 {
        assert!(low <= high, "inverted range");
        low + self.below(high - low + 1)
    }

    /// Uniform index into a collection of length `len`.
    pub fn index(&mut self, len: usize) -> usize {
        let bound = u32::try_from(len).expect("collection too large for 32-bit draws");
        self.below(bound) as usize
    }

    /// Uniform real in `[-1, 1)`.
    pub fn signed_unit(&mut self) -> f64 {
        f64::from(self.next_u32()) / 4_294_967_296.0 * 2.0 - 1.0
    }

    /// In-place Fisher–Yates shuffle, swapping from the back.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }
}
