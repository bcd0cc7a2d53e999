//! Seedable, splittable random streams.
//!
//! Every random draw in an experiment comes from a ChaCha8 stream keyed by
//! the master seed and selected by a path of integers (trial index, SNR
//! index, purpose tag). Streams for different paths are independent, so
//! trials can run in any order on any number of threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Purpose tags used as the last element of a stream path.
pub mod purpose {
    pub const WAVEFORM: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const MEASUREMENT: u64 = 3;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream for `path` under `master`.
pub fn stream(master: u64, path: &[u64]) -> Stream {
    let mut id = 0x243F_6A88_85A3_08D3u64;
    for &p in path {
        id = splitmix64(id ^ p);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(id);
    rng
}
