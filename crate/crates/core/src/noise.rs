//! Counter-based Gaussian noise.
//!
//! Every Wiener increment is a pure function of `(seed, stream, step,
//! coordinate)`: a splitmix-style avalanche hash turns the key into uniform
//! bits, and Box-Muller turns those into a standard normal.  Because no
//! generator state is carried between draws, any increment can be
//! regenerated bitwise in any order, which is what makes ensemble runs
//! independent of thread scheduling.

use std::marker::PhantomData;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::real::Real;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const STREAM_SALT: u64 = 0x9FB2_1C65_1E98_DF25;
const SEED_SALT: u64 = 0xA24B_AED4_963E_E407;

/// splitmix64 finaliser: full-avalanche mix of one word.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Keyed hash of `(seed, stream, counter)` into 64 uniform bits.
#[inline]
#[must_use]
pub fn keyed_word(seed: u64, stream: u64, counter: u64) -> u64 {
    let mut z = mix64(seed.wrapping_mul(SEED_SALT).wrapping_add(GOLDEN));
    z = mix64(z ^ stream.wrapping_mul(STREAM_SALT));
    z = mix64(z ^ counter.wrapping_mul(GOLDEN));
    z
}

/// Uniform draw in the half-open interval (0, 1] from 64 hashed bits;
/// 53 significant bits, never zero so it is safe inside a logarithm.
#[inline]
fn unit_from(word: u64) -> f64 {
    ((word >> 11) + 1) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

/// Standard normal from two hashed words via Box-Muller.
#[inline]
fn gaussian_from(w1: u64, w2: u64) -> f64 {
    let u1 = unit_from(w1);
    let u2 = unit_from(w2);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

// Counter-space layout: Wiener draws live below 2^62, auxiliary draws above,
// so simulation noise can never collide with e.g. sampling-time draws.
const AUX_OFFSET: u64 = 1 << 62;

/// Stateless source of the Wiener increments of one trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseStream<T> {
    pub seed: u64,
    pub stream: u64,
    pub dim: usize,
    #[serde(skip)]
    _real: PhantomData<T>,
}

impl<T: Real> NoiseStream<T> {
    #[must_use]
    pub fn new(seed: u64, stream: u64, dim: usize) -> Self {
        Self {
            seed,
            stream,
            dim,
            _real: PhantomData,
        }
    }

    /// Standard normal attached to `(step, coordinate)`.
    #[must_use]
    pub fn standard_gaussian(&self, step: u64, coord: usize) -> T {
        let base = (step * self.dim as u64 + coord as u64) * 2;
        T::of(gaussian_from(
            keyed_word(self.seed, self.stream, base),
            keyed_word(self.seed, self.stream, base + 1),
        ))
    }

    /// Wiener increment over one step of size `dt`: `N(0, dt * I)`.
    #[must_use]
    pub fn increment(&self, step: u64, dt: T) -> Vec<T> {
        let scale = dt.sqrt();
        (0..self.dim)
            .map(|j| scale * self.standard_gaussian(step, j))
            .collect()
    }

    /// Increments for a contiguous range of steps.
    #[must_use]
    pub fn increments(&self, steps: Range<u64>, dt: T) -> Vec<Vec<T>> {
        steps.map(|k| self.increment(k, dt)).collect()
    }

    /// Auxiliary uniform in (0, 1] attached to `tag`, drawn from a counter
    /// region disjoint from the Wiener increments.
    #[must_use]
    pub fn auxiliary_uniform(&self, tag: u64) -> T {
        T::of(unit_from(keyed_word(
            self.seed,
            self.stream,
            AUX_OFFSET + tag,
        )))
    }
}

/// Sequential convenience wrapper over the counter hash, for samplers and
/// projection draws that just need a reproducible stream of values.
#[derive(Clone, Debug)]
pub struct CounterRng {
    seed: u64,
    stream: u64,
    counter: u64,
}

impl CounterRng {
    #[must_use]
    pub fn new(seed: u64, stream: u64) -> Self {
        Self {
            seed,
            stream,
            counter: AUX_OFFSET,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let w = keyed_word(self.seed, self.stream, self.counter);
        self.counter += 1;
        w
    }

    /// Uniform in (0, 1].
    pub fn uniform<T: Real>(&mut self) -> T {
        T::of(unit_from(self.next_u64()))
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform_in<T: Real>(&mut self, lo: T, hi: T) -> T {
        lo + (hi - lo) * (T::one() - self.uniform::<T>())
    }

    /// Standard normal.
    pub fn gaussian<T: Real>(&mut self) -> T {
        let w1 = self.next_u64();
        let w2 = self.next_u64();
        T::of(gaussian_from(w1, w2))
    }
}
