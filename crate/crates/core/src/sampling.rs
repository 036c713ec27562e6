//! Hidden-variable sampling on counter-addressed random streams.
//!
//! Every realization owns a fixed window of [`WORDS_PER_REALIZATION`] 32-bit
//! words in a ChaCha8 stream. The key comes from the run seed and the stream
//! number from [`StreamId`], so realization `i` of stream `s` always reads
//! words `[64 i, 64 i + 64)` of stream `s` regardless of how the work is split
//! across threads.
//!
//! A realization consumes 28 uniform `u64` draws (56 words). Each pair of
//! uniforms becomes one standard complex Gaussian via Box-Muller in polar form,
//! `sqrt(-ln u1) * exp(2 pi i u2)`, whose real and imaginary parts are
//! independent N(0, 1/2). The 14 complex values are laid out as
//! `z1.h z1.v z2.h z2.v z3.h z3.v zp1.h ... zp4.v`; the last 8 words of each
//! window are padding.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::jones::JonesVector;

/// 32-bit stream words reserved for one realization.
pub const WORDS_PER_REALIZATION: u128 = 64;
/// Uniform `u64` draws actually consumed by one realization.
pub const UNIFORMS_PER_REALIZATION: usize = 28;

const BLOCK_U64S: usize = (WORDS_PER_REALIZATION / 2) as usize;

/// Substream selector. Independent-draw runs use one stream per
/// (repetition, context slot); shared-draw runs use one stream per repetition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StreamId {
    Context { rep: u64, slot: u8 },
    Shared { rep: u64 },
}

impl StreamId {
    /// ChaCha stream number: `rep * 256 + slot`, with slot 255 for shared draws.
    pub fn stream_number(self) -> u64 {
        match self {
            StreamId::Context { rep, slot } => {
                debug_assert!(slot != u8::MAX);
                rep.wrapping_mul(256).wrapping_add(slot as u64)
            }
            StreamId::Shared { rep } => rep.wrapping_mul(256).wrapping_add(255),
        }
    }
}

/// One realization of the seven hidden complex Gaussian 2-vectors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HiddenState {
    pub z1: JonesVector,
    pub z2: JonesVector,
    pub z3: JonesVector,
    pub zp1: JonesVector,
    pub zp2: JonesVector,
    pub zp3: JonesVector,
    pub zp4: JonesVector,
}

impl HiddenState {
    pub fn vectors(&self) -> [JonesVector; 7] {
        [
            self.z1, self.z2, self.z3, self.zp1, self.zp2, self.zp3, self.zp4,
        ]
    }
}

/// The raw uniform window of one realization. Gaussians are decoded lazily so
/// callers can look at the source vectors before paying for the rest.
#[derive(Clone, Copy, Debug)]
pub struct UniformBlock([u64; BLOCK_U64S]);

impl UniformBlock {
    fn complex(&self, k: usize) -> Complex64 {
        complex_gaussian(self.0[2 * k], self.0[2 * k + 1])
    }

    fn vector(&self, k: usize) -> JonesVector {
        JonesVector::new(self.complex(2 * k), self.complex(2 * k + 1))
    }

    /// `(z1, z2)`, the only inputs of the heralding beam.
    pub fn source_pair(&self) -> (JonesVector, JonesVector) {
        (self.vector(0), self.vector(1))
    }

    pub fn hidden_state(&self) -> HiddenState {
        let (z1, z2) = self.source_pair();
        self.complete(z1, z2)
    }

    /// Finish decoding given already-decoded `z1`, `z2`.
    pub fn complete(&self, z1: JonesVector, z2: JonesVector) -> HiddenState {
        HiddenState {
            z1,
            z2,
            z3: self.vector(2),
            zp1: self.vector(3),
            zp2: self.vector(4),
            zp3: self.vector(5),
            zp4: self.vector(6),
        }
    }
}

/// Map a raw `u64` to a uniform in (0, 1].
fn unit_open_closed(x: u64) -> f64 {
    ((x >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn complex_gaussian(x1: u64, x2: u64) -> Complex64 {
    let radius = (-unit_open_closed(x1).ln()).sqrt();
    let (s, c) = (TAU * unit_open_closed(x2)).sin_cos();
    Complex64::new(radius * c, radius * s)
}

/// Counter-addressed source of hidden states.
#[derive(Clone, Debug)]
pub struct HiddenStream {
    rng: ChaCha8Rng,
    next: u64,
}

impl HiddenStream {
    pub fn new(seed: u64, id: StreamId) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(id.stream_number());
        rng.set_word_pos(0);
        Self { rng, next: 0 }
    }

    /// Position the stream at the start of realization `index`.
    pub fn seek(&mut self, index: u64) {
        self.rng
            .set_word_pos(index as u128 * WORDS_PER_REALIZATION);
        self.next = index;
    }

    /// Index of the realization the next call will return.
    pub fn position(&self) -> u64 {
        self.next
    }

    pub fn next_block(&mut self) -> UniformBlock {
        let mut block = [0u64; BLOCK_U64S];
        for slot in block.iter_mut() {
            *slot = self.rng.next_u64();
        }
        self.next += 1;
        UniformBlock(block)
    }
}

/// Draw the next hidden state from the stream.
pub fn sample_hidden(stream: &mut HiddenStream) -> HiddenState {
    stream.next_block().hidden_state()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(n: usize, seed: u64) -> (f64, f64, f64) {
        let mut stream = HiddenStream::new(seed, StreamId::Context { rep: 0, slot: 0 });
        let (mut re2, mut im2, mut abs2) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let h = sample_hidden(&mut stream);
            for v in h.vectors() {
                for c in [v.h, v.v] {
                    re2 += c.re * c.re;
                    im2 += c.im * c.im;
                    abs2 += c.norm_sqr();
                }
            }
        }
        let m = (n * 14) as f64;
        (re2 / m, im2 / m, abs2 / m)
    }

    #[test]
    fn components_have_half_variance_parts() {
        let (re2, im2, abs2) = moments(100_000, 11);
        assert!((re2 - 0.5).abs() < 0.005, "{re2}");
        assert!((im2 - 0.5).abs() < 0.005, "{im2}");
        assert!((0.99..=1.01).contains(&abs2), "{abs2}");
    }

    #[test]
    fn successive_states_uncorrelated() {
        let n = 100_000;
        let mut stream = HiddenStream::new(3, StreamId::Shared { rep: 0 });
        let mut acc = 0.0;
        for _ in 0..n {
            let a = sample_hidden(&mut stream).z1.h.re;
            let b = sample_hidden(&mut stream).z1.h.re;
            acc += a * b;
        }
        // Var(a b) = 1/4, so correlation = mean / (1/2).
        let corr = (acc / n as f64) / 0.5;
        assert!(corr.abs() < 3.0 / (n as f64).sqrt(), "{corr}");
    }

    #[test]
    fn seek_replays_bit_identical_states() {
        let id = StreamId::Context { rep: 4, slot: 2 };
        let mut a = HiddenStream::new(99, id);
        let states: Vec<_> = (0..10).map(|_| sample_hidden(&mut a)).collect();
        let mut b = HiddenStream::new(99, id);
        b.seek(7);
        assert_eq!(b.position(), 7);
        assert_eq!(sample_hidden(&mut b), states[7]);
        b.seek(3);
        assert_eq!(sample_hidden(&mut b), states[3]);
        assert_eq!(sample_hidden(&mut b), states[4]);
    }

    #[test]
    fn streams_differ_by_id_and_seed() {
        let base = sample_hidden(&mut HiddenStream::new(1, StreamId::Shared { rep: 0 }));
        let other_rep = sample_hidden(&mut HiddenStream::new(1, StreamId::Shared { rep: 1 }));
        let other_slot =
            sample_hidden(&mut HiddenStream::new(1, StreamId::Context { rep: 0, slot: 0 }));
        let other_seed = sample_hidden(&mut HiddenStream::new(2, StreamId::Shared { rep: 0 }));
        assert_ne!(base, other_rep);
        assert_ne!(base, other_slot);
        assert_ne!(base, other_seed);
    }

    #[test]
    fn lazy_decoding_matches_full_decoding() {
        let mut s = HiddenStream::new(5, StreamId::Shared { rep: 2 });
        let block = s.next_block();
        let (z1, z2) = block.source_pair();
        assert_eq!(block.complete(z1, z2), block.hidden_state());
    }

    #[test]
    fn uniform_map_never_hits_zero() {
        assert!(unit_open_closed(0) > 0.0);
        assert_eq!(unit_open_closed(u64::MAX), 1.0);
        assert!(complex_gaussian(0, 0).is_finite());
    }
}
