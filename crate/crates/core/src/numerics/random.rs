use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Seeded standard-normal sampler.
///
/// Uniform bits come from ChaCha20 (a counter-based stream cipher, so the
/// bit stream is identical on every platform). They are mapped to
/// `N(0, 1)` with the Marsaglia polar method; the second value of each
/// accepted pair is cached, so the stream may be consumed in chunks of any
/// size without changing the sequence.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha20Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform sample in the open interval (-1, 1).
    fn symmetric_uniform(&mut self) -> f64 {
        // 53 random mantissa bits, offset by half an ulp so 0 and 1 never occur.
        let bits = self.rng.next_u64() >> 11;
        let unit = (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
        2.0 * unit - 1.0
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = self.symmetric_uniform();
            let v = self.symmetric_uniform();
            let s = u * u + v * v;
            if s >= 1.0 || s == 0.0 {
                continue;
            }
            let factor = (-2.0 * s.ln() / s).sqrt();
            self.spare = Some(v * factor);
            return u * factor;
        }
    }

    /// `count` i.i.d. standard-normal samples, continuing the stream.
    pub fn gaussian_draw(&mut self, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.standard_normal()).collect()
    }
}
