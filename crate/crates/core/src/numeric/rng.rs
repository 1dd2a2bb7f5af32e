//! Counter-based random streams addressed by `(root_seed, stream_index)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The concrete generator behind every stream.
pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RandomStream {
    pub root_seed: u64,
    pub stream_index: u64,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RandomStream {
    pub fn new(root_seed: u64) -> Self {
        RandomStream {
            root_seed,
            stream_index: 0,
        }
    }

    pub fn with_index(root_seed: u64, stream_index: u64) -> Self {
        RandomStream {
            root_seed,
            stream_index,
        }
    }

    /// A child stream; children of distinct indices never share a ChaCha stream id.
    pub fn substream(&self, index: u64) -> RandomStream {
        let mixed =
            splitmix(self.stream_index ^ splitmix(index.wrapping_add(0x5851_F42D_4C95_7F2D)));
        RandomStream {
            root_seed: self.root_seed,
            stream_index: mixed,
        }
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.root_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}
