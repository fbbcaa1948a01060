use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Identifies one episode of a run. Every random draw made on behalf of the
/// episode is derived from this pair, so two episodes with equal seeds are
/// indistinguishable regardless of scheduling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EpisodeSeed {
    pub run_seed: u64,
    pub episode_index: u64,
}

/// Named generator streams. Each stream is an independent ChaCha8 keystream
/// keyed by the episode seed and the stream name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RngStream {
    /// Initial-state placement.
    Environment,
    /// Random legal actions substituted for unparseable replies.
    Fallback,
    /// Scripted mock backends.
    Mock,
    /// Synonym assignment for entity names.
    Synonyms,
}

impl RngStream {
    fn name(self) -> &'static str {
        match self {
            RngStream::Environment => "environment",
            RngStream::Fallback => "fallback",
            RngStream::Mock => "mock",
            RngStream::Synonyms => "synonyms",
        }
    }
}

impl EpisodeSeed {
    pub fn new(run_seed: u64, episode_index: u64) -> Self {
        Self {
            run_seed,
            episode_index,
        }
    }

    /// Generator for `stream`, positioned at the start of its keystream.
    pub fn rng(&self, stream: RngStream) -> ChaCha8Rng {
        self.rng_at(stream, 0)
    }

    /// Generator for `stream` keyed additionally by `counter`. Used where a
    /// caller needs a fresh, reproducible generator per call (mock replies).
    pub fn rng_at(&self, stream: RngStream, counter: u64) -> ChaCha8Rng {
        let mut hasher = Sha256::new();
        hasher.update(b"statebench/episode-seed/v1");
        hasher.update(self.run_seed.to_le_bytes());
        hasher.update(self.episode_index.to_le_bytes());
        hasher.update(stream.name().as_bytes());
        hasher.update(counter.to_le_bytes());
        let digest = hasher.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        ChaCha8Rng::from_seed(key)
    }
}
