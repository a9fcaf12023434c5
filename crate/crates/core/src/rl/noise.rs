use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Ornstein–Uhlenbeck process reverting to zero:
/// `x ← x − θ·x·dt + σ·√dt·N(0, I)`.
#[derive(Debug, Clone)]
pub struct OuNoise {
    pub theta: f64,
    pub sigma: f64,
    pub dt: f64,
    state: Vec<f64>,
    rng: ChaCha8Rng,
}

impl OuNoise {
    pub fn new(dim: usize, theta: f64, sigma: f64, seed: u64) -> Self {
        OuNoise {
            theta,
            sigma,
            dt: 1.0,
            state: vec![0.0; dim],
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Starts from `x₀` instead of zero.
    pub fn with_state(mut self, x0: Vec<f64>) -> Self {
        self.state = x0;
        self
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    /// Zeroes the process state; the random stream continues.
    pub fn reset(&mut self) {
        self.state.iter_mut().for_each(|x| *x = 0.0);
    }

    pub fn reseed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.reset();
    }

    pub fn sample(&mut self) -> &[f64] {
        let scale = self.sigma * self.dt.sqrt();
        for x in &mut self.state {
            let n: f64 = StandardNormal.sample(&mut self.rng);
            *x += self.theta * (0.0 - *x) * self.dt + scale * n;
        }
        &self.state
    }
}
