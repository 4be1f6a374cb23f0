//! Counter-based random numbers (Philox4x32-10).
//!
//! Every random draw in the crate comes from a [`PhiloxStream`] addressed by
//! three coordinates:
//!
//! - `seed: u64` becomes the 64-bit Philox key `(seed & 0xffff_ffff, seed >> 32)`.
//! - `domain: u32` separates independent consumers. For a noisy operator it is
//!   the operator's stream id (one per matrix); generators and estimators use
//!   the fixed values in [`StreamDomain`].
//! - `call: u64` is the per-use counter, e.g. the index of a noisy matvec.
//!
//! The 128-bit Philox counter for block `i` of a stream is the word tuple
//! `(i, domain, call & 0xffff_ffff, call >> 32)`. Each block yields four
//! `u32` words consumed in order. A `u64` is `lo | hi << 32` of two
//! consecutive words, a uniform `f64` in `[0, 1)` is `(u64 >> 11) · 2⁻⁵³`,
//! and standard normals come in Box–Muller pairs
//! `√(−2 ln(1 − u₁))·(cos 2πu₂, sin 2πu₂)`.
//!
//! Streams are pure functions of `(seed, domain, call)`, so concurrent users
//! with distinct coordinates never interfere.

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;

/// Reserved `domain` values for non-operator consumers.
#[repr(u32)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamDomain {
    UniformMatrix = 0x4000_0001,
    ConditionedLeft = 0x4000_0002,
    ConditionedRight = 0x4000_0003,
    CondEstimate = 0x4000_0004,
    RandomRhs = 0x4000_0005,
    NormalEquations = 0x4000_0006,
    SeedDerivation = 0x4000_0007,
}

#[inline]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = (a as u64) * (b as u64);
    ((p >> 32) as u32, p as u32)
}

/// One Philox4x32 bijection with ten rounds.
pub fn philox4x32_10(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = counter;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(PHILOX_W0);
            k[1] = k[1].wrapping_add(PHILOX_W1);
        }
        let (hi0, lo0) = mulhilo(PHILOX_M0, c[0]);
        let (hi1, lo1) = mulhilo(PHILOX_M1, c[2]);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

/// Sequential reader over one `(seed, domain, call)` stream.
#[derive(Clone, Debug)]
pub struct PhiloxStream {
    key: [u32; 2],
    domain: u32,
    call: u64,
    block: u32,
    buf: [u32; 4],
    pos: usize,
    spare_normal: Option<f64>,
}

impl PhiloxStream {
    pub fn new(seed: u64, domain: u32, call: u64) -> Self {
        Self {
            key: [seed as u32, (seed >> 32) as u32],
            domain,
            call,
            block: 0,
            buf: [0; 4],
            pos: 4,
            spare_normal: None,
        }
    }

    pub fn next_u32(&mut self) -> u32 {
        if self.pos == 4 {
            let ctr = [self.block, self.domain, self.call as u32, (self.call >> 32) as u32];
            self.buf = philox4x32_10(ctr, self.key);
            self.block = self.block.wrapping_add(1);
            self.pos = 0;
        }
        let v = self.buf[self.pos];
        self.pos += 1;
        v
    }

    pub fn next_u64(&mut self) -> u64 {
        let lo = self.next_u32() as u64;
        let hi = self.next_u32() as u64;
        lo | (hi << 32)
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }
}

/// Derives an independent 64-bit seed from a base seed and an index.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    PhiloxStream::new(base, StreamDomain::SeedDerivation as u32, index).next_u64()
}
