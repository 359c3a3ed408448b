//! Counter-based random number generation.
//!
//! Every random draw in the crate comes from a stream keyed by
//! `(seed, trial, stream)`. Streams are cheap to construct, so each trial of
//! a Monte-Carlo run owns private generators and the schedule of worker
//! threads can never change the numbers. The generator is splitmix64: the
//! output at counter `i` is a finalizer applied to `key + i * GAMMA`, which
//! is stable across platforms and needs no warm-up.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The splitmix64 finalizer; also used to hash small index sets into
/// stream keys.
#[inline]
pub(crate) fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fixed stream identifiers, one per purpose, so that enlarging one kind of
/// draw never shifts another.
pub mod stream {
    pub const DESIGN: u64 = 0;
    pub const NOISE: u64 = 1;
    pub const SEARCH: u64 = 2;
    pub const SOLVER: u64 = 3;
    pub const RE_INIT: u64 = 4;
    pub const MASSART: u64 = 5;
}

/// Deterministic splitmix64 stream keyed by `(seed, trial, stream)`.
#[derive(Debug, Clone)]
pub struct CounterRng {
    state: u64,
    spare_normal: Option<f64>,
}

impl CounterRng {
    pub fn new(seed: u64, trial: u64, stream: u64) -> Self {
        let mut key = mix(seed.wrapping_add(GAMMA));
        key = mix(key ^ trial.wrapping_mul(0xD1B5_4A32_D192_ED03).wrapping_add(1));
        key = mix(key ^ stream.wrapping_mul(0x8CB9_2BA7_2F3D_8DD7).wrapping_add(1));
        Self {
            state: key,
            spare_normal: None,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix(self.state)
    }

    /// Uniform in `[0, 1)`.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `(0, 1]`; safe to pass to `ln`.
    #[inline]
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    #[inline]
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `[0, n)`.
    #[inline]
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        // Desk-scale n makes the modulo bias negligible (< 2^-50).
        self.next_u64() % n
    }

    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    #[inline]
    pub fn rademacher(&mut self) -> f64 {
        if self.next_u64() & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Standard normal via Box-Muller; the sine partner is cached.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.next_open01();
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare_normal = Some(r * angle.sin());
        r * angle.cos()
    }

    /// Poisson draw by inversion of interarrival products (Knuth). Rates in
    /// this crate come from `exp` of points in a compact interval, so the
    /// cap only guards against misuse.
    pub fn poisson(&mut self, rate: f64) -> u64 {
        assert!(
            rate.is_finite() && (0.0..=500.0).contains(&rate),
            "poisson rate {rate} out of supported range"
        );
        let limit = (-rate).exp();
        let mut k = 0u64;
        let mut prod = 1.0;
        loop {
            prod *= self.next_open01();
            if prod <= limit {
                return k;
            }
            k += 1;
        }
    }
}
