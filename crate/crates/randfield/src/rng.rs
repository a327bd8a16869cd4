//! Counter-based random number generation.
//!
//! Every draw is a pure function of `(seed, stream id, counter)`, so a value
//! attached to a lattice cell is the same no matter which worker produces it,
//! in what order, or how large the surrounding grid is. Sub-window reuse and
//! replicate-level parallelism therefore never change results.
//!
//! The generator is the SplitMix64 sequence evaluated at an arbitrary
//! position: a per-(seed, stream, lane) key is derived by repeated finalizer
//! mixing, and the output at `counter` is `mix(key + counter * GOLDEN)`.
//!
//! Integer and uniform draws are bit-exact on every platform. The Gaussian
//! lane maps uniforms through `ln`, `sqrt` and `cos`; `sqrt` is exact under
//! IEEE 754, while `ln`/`cos` come from the platform libm, so Gaussian bit
//! equality across *different* platforms holds only up to libm rounding.
//! On any one platform all draws are bit-stable across runs and worker
//! counts.

/// Weyl increment of the SplitMix64 sequence.
const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// Lane salts keep the uniform stream and the two Box-Muller inputs disjoint.
const LANE_UNIFORM: u64 = 0x243f_6a88_85a3_08d3;
const LANE_GAUSS_A: u64 = 0x1319_8a2e_0370_7344;
const LANE_GAUSS_B: u64 = 0xa409_3822_299f_31d0;

/// David Stafford's Mix13 finalizer (the SplitMix64 output function).
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A reproducible random stream identified by `(seed, stream id)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
    stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngStream { seed, stream }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream
    }

    /// Derives a child stream. Distinct tags give statistically independent
    /// streams under the same seed; derivation is associative enough for
    /// nested use (`s.substream(a).substream(b)`).
    pub fn substream(&self, tag: u64) -> RngStream {
        RngStream {
            seed: self.seed,
            stream: mix64(self.stream ^ mix64(tag.wrapping_add(GOLDEN))),
        }
    }

    /// Child stream keyed by a lattice cell, for per-cell private randomness.
    pub fn substream_at(&self, tag: u64, i: i64, j: i64) -> RngStream {
        self.substream(tag).substream(cell_counter(i, j))
    }

    #[inline]
    fn key(&self, lane: u64) -> u64 {
        mix64(mix64(self.seed ^ lane) ^ self.stream)
    }

    #[inline]
    fn raw(&self, lane: u64, counter: u64) -> u64 {
        mix64(self.key(lane).wrapping_add(counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform draw on `[0, 1)` with 53-bit resolution.
    #[inline]
    pub fn uniform(&self, counter: u64) -> f64 {
        (self.raw(LANE_UNIFORM, counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw (Box-Muller over two dedicated lanes).
    #[inline]
    pub fn gaussian(&self, counter: u64) -> f64 {
        // u1 in (0, 1] so the logarithm is finite.
        let u1 = ((self.raw(LANE_GAUSS_A, counter) >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = (self.raw(LANE_GAUSS_B, counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Fair sign draw in `{-1.0, +1.0}`.
    #[inline]
    pub fn sign(&self, counter: u64) -> f64 {
        if self.raw(LANE_UNIFORM, counter) >> 63 == 0 {
            -1.0
        } else {
            1.0
        }
    }
}

/// Maps a lattice cell to its private counter.
///
/// ZigZag-encodes each signed coordinate into 32 bits and interleaves them,
/// so the counter depends only on the absolute cell position. Coordinates
/// must stay below 2^31 in magnitude, far beyond any supported grid.
#[inline]
pub fn cell_counter(i: i64, j: i64) -> u64 {
    let zi = ((i << 1) ^ (i >> 63)) as u64;
    let zj = ((j << 1) ^ (j >> 63)) as u64;
    debug_assert!(zi <= u32::MAX as u64 && zj <= u32::MAX as u64);
    (zi << 32) | (zj & 0xffff_ffff)
}
