//! Deterministic random stream used by every sampling path in the crate.
//!
//! Reproducibility is part of the output contract (identical configs must
//! produce byte-identical records), so the generator is pinned here instead of
//! delegating to an external crate whose stream could shift between versions:
//!
//! * seeds are derived from `(seed_base, n, replicate)` with the SplitMix64
//!   finalizer, so every run of a sweep owns an independent stream;
//! * the stream itself is xoshiro256++, seeded by SplitMix64 expansion;
//! * bounded draws use threshold rejection on 64-bit words — never a bare
//!   modulo, which would bias small residues.

/// SplitMix64 finalizer: a bijective avalanche mix on 64 bits.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the stream seed for one run of a sweep.
///
/// The mixing is fixed and documented so that any external tool can recompute
/// which seed a given `(seed_base, n, replicate)` cell received:
/// three chained SplitMix64 steps, folding in `n` and then `replicate`.
pub fn derive_run_seed(seed_base: u64, n: u32, replicate: u32) -> u64 {
    let s0 = mix64(seed_base.wrapping_add(0x9E37_79B9_7F4A_7C15));
    let s1 = mix64(s0 ^ u64::from(n).wrapping_mul(0xD1B5_4A32_D192_ED03));
    mix64(s1 ^ u64::from(replicate).wrapping_mul(0x8CB9_2BA7_2F3D_8DD7))
}

/// xoshiro256++ stream of 64-bit words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomStream {
    s: [u64; 4],
}

impl RandomStream {
    /// Builds a stream from a 64-bit seed via SplitMix64 state expansion.
    pub fn from_seed(seed: u64) -> Self {
        let mut sm = seed;
        let mut next = || {
            sm = sm.wrapping_add(0x9E37_79B9_7F4A_7C15);
            mix64(sm)
        };
        let s = [next(), next(), next(), next()];
        // SplitMix64 expansion of any seed cannot produce the all-zero state,
        // but guard anyway: xoshiro is stuck at zero.
        debug_assert!(s.iter().any(|&w| w != 0));
        RandomStream { s }
    }

    /// Next 64-bit uniform word.
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[0]
            .wrapping_add(s[3])
            .rotate_left(23)
            .wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform integer in `[0, bound)` by threshold rejection (no modulo bias).
    ///
    /// # Panics
    /// Panics if `bound == 0`.
    #[inline]
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "below() requires a positive bound");
        if bound.is_power_of_two() {
            return self.next_u64() & (bound - 1);
        }
        // Reject words under `threshold` = 2^64 mod bound; the survivors are
        // an exact multiple of `bound` values, so the residue is unbiased.
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let x = self.next_u64();
            if x >= threshold {
                return x % bound;
            }
        }
    }

    /// Uniform f64 in `[0, 1)` with 53 random bits (diagnostics only).
    #[inline]
    pub fn unit_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
