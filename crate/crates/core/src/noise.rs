//! Counter-based exogenous noise.
//!
//! Every structural equation call draws from its own stream keyed by
//! `(seed, subject, variable, t)`. The key is packed directly into a 256-bit
//! ChaCha8 key, so streams never collide and a draw depends only on its key:
//! not on evaluation order, thread scheduling, or the policy being simulated.

use std::collections::VecDeque;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NoiseKey {
    pub seed: u64,
    pub subject: u64,
    pub variable: u32,
    pub t: u32,
}

impl NoiseKey {
    fn bytes(&self, stream: u64) -> [u8; 32] {
        let mut k = [0u8; 32];
        k[0..8].copy_from_slice(&self.seed.to_le_bytes());
        k[8..16].copy_from_slice(&self.subject.to_le_bytes());
        k[16..20].copy_from_slice(&self.variable.to_le_bytes());
        k[20..24].copy_from_slice(&self.t.to_le_bytes());
        k[24..32].copy_from_slice(&stream.to_le_bytes());
        k
    }
}

#[derive(Debug, Clone)]
enum Source {
    Stream(Box<ChaCha8Rng>),
    Scripted {
        uniforms: VecDeque<f64>,
        normals: VecDeque<f64>,
    },
}

/// Exogenous variates for one (subject, variable, time) cell.
#[derive(Debug, Clone)]
pub struct NoiseDraw {
    key: NoiseKey,
    stream: u64,
    source: Source,
}

/// Stream for a cell. Identical keys always give identical variates.
pub fn derive_noise(seed: u64, subject: u64, variable: u32, t: u32) -> NoiseDraw {
    NoiseDraw::new(
        NoiseKey {
            seed,
            subject,
            variable,
            t,
        },
        0,
    )
}

impl NoiseDraw {
    fn new(key: NoiseKey, stream: u64) -> Self {
        let rng = ChaCha8Rng::from_seed(key.bytes(stream));
        Self {
            key,
            stream,
            source: Source::Stream(Box::new(rng)),
        }
    }

    /// Fixed variates, consumed in order. Panics if a mechanism asks for more
    /// than were supplied.
    pub fn scripted(uniforms: &[f64], normals: &[f64]) -> Self {
        Self {
            key: NoiseKey {
                seed: 0,
                subject: 0,
                variable: 0,
                t: 0,
            },
            stream: 0,
            source: Source::Scripted {
                uniforms: uniforms.iter().copied().collect(),
                normals: normals.iter().copied().collect(),
            },
        }
    }

    pub fn key(&self) -> NoiseKey {
        self.key
    }

    /// Independent child stream, used by composite mechanisms so that each
    /// sub-step has its own variates. Scripted draws hand out their remaining
    /// variates to the child.
    pub fn substream(&mut self, tag: u64) -> NoiseDraw {
        match &mut self.source {
            Source::Stream(_) => {
                let child = self.stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(tag + 1);
                NoiseDraw::new(self.key, child)
            }
            Source::Scripted { uniforms, normals } => NoiseDraw {
                key: self.key,
                stream: tag,
                source: Source::Scripted {
                    uniforms: std::mem::take(uniforms),
                    normals: std::mem::take(normals),
                },
            },
        }
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        match &mut self.source {
            Source::Stream(rng) => open_unit(rng.next_u64()),
            Source::Scripted { uniforms, .. } => uniforms.pop_front().expect("scripted uniform exhausted"),
        }
    }

    pub fn normal(&mut self) -> f64 {
        match &mut self.source {
            Source::Stream(rng) => StandardNormal.sample(rng.as_mut()),
            Source::Scripted { normals, .. } => normals.pop_front().expect("scripted normal exhausted"),
        }
    }

    /// Standard Gumbel(0, 1) variate.
    pub fn gumbel(&mut self) -> f64 {
        gumbel_from_uniform(self.uniform())
    }

    pub fn gumbels(&mut self, k: usize) -> Vec<f64> {
        (0..k).map(|_| self.gumbel()).collect()
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }
}

fn open_unit(x: u64) -> f64 {
    ((x >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

pub fn gumbel_from_uniform(u: f64) -> f64 {
    -(-u.ln()).ln()
}

/// General-purpose seeded generator for bagging, bootstrap and grid sampling.
pub fn seeded_rng(seed: u64, purpose: u64) -> ChaCha8Rng {
    let mut k = [0u8; 32];
    k[0..8].copy_from_slice(&seed.to_le_bytes());
    k[8..16].copy_from_slice(&purpose.to_le_bytes());
    k[16..24].copy_from_slice(&0x5EED_u64.to_le_bytes());
    ChaCha8Rng::from_seed(k)
}

/// Uniform index in `0..n` from a generator.
pub fn index_below(rng: &mut ChaCha8Rng, n: usize) -> usize {
    // Lemire-style rejection-free multiply; bias is below 2^-64 * n.
    ((rng.next_u64() as u128 * n as u128) >> 64) as usize
}
