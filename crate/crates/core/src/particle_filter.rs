//! Per-human 2-D particle filter in ground (UTM-like) coordinates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PfError {
    #[error("all particle likelihoods underflowed to zero")]
    DegenerateWeights,
    #[error("invalid particle filter config: {0}")]
    InvalidConfig(String),
    #[error("non-finite measurement ({0}, {1})")]
    NonFiniteMeasurement(f64, f64),
    #[error("negative time step {0}")]
    NegativeDt(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GroundPoint {
    pub x: f64,
    pub y: f64,
}

impl GroundPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, o: &GroundPoint) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "threshold")]
pub enum ResamplePolicy {
    EveryUpdate,
    /// Resample only when ESS / N falls below the given fraction.
    EssBelow(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PfConfig {
    pub sigma_z: f64,
    pub v_max: f64,
    pub n: usize,
    pub resample: ResamplePolicy,
}

impl Default for PfConfig {
    fn default() -> Self {
        Self {
            sigma_z: 3.0,
            v_max: 1.2,
            n: 100,
            resample: ResamplePolicy::EveryUpdate,
        }
    }
}

impl PfConfig {
    pub fn validate(&self) -> Result<(), PfError> {
        if !(self.sigma_z > 0.0 && self.sigma_z.is_finite()) {
            return Err(PfError::InvalidConfig(format!(
                "sigma_z must be positive, got {}",
                self.sigma_z
            )));
        }
        if !(self.v_max >= 0.0 && self.v_max.is_finite()) {
            return Err(PfError::InvalidConfig(format!(
                "v_max must be >= 0, got {}",
                self.v_max
            )));
        }
        if self.n == 0 {
            return Err(PfError::InvalidConfig("n must be >= 1".into()));
        }
        if let ResamplePolicy::EssBelow(f) = self.resample {
            if !(0.0..=1.0).contains(&f) {
                return Err(PfError::InvalidConfig(format!(
                    "ESS fraction must lie in [0, 1], got {f}"
                )));
            }
        }
        Ok(())
    }
}

/// Weighted mean and covariance of a particle set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: GroundPoint,
    pub covariance: [[f64; 2]; 2],
}

#[derive(Debug, Clone)]
pub struct ParticleSet {
    pub particles: Vec<GroundPoint>,
    pub weights: Vec<f64>,
    pub seed: u64,
    /// Time of the last propagation target, if known.
    pub timestamp: Option<f64>,
    rng: ChaCha8Rng,
}

impl ParticleSet {
    /// Draws `cfg.n` particles from an isotropic Gaussian around `z0`.
    pub fn init(z0: GroundPoint, cfg: &PfConfig, seed: u64) -> Result<Self, PfError> {
        Self::init_stream(z0, cfg, seed, 0)
    }

    /// Like [`init`](Self::init) on an independent stream of the same seed.
    pub fn init_stream(z0: GroundPoint, cfg: &PfConfig, seed: u64, stream: u64) -> Result<Self, PfError> {
        cfg.validate()?;
        if !z0.is_finite() {
            return Err(PfError::NonFiniteMeasurement(z0.x, z0.y));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let normal = Normal::new(0.0, cfg.sigma_z).expect("validated sigma");
        let particles = (0..cfg.n)
            .map(|_| GroundPoint::new(z0.x + normal.sample(&mut rng), z0.y + normal.sample(&mut rng)))
            .collect();
        Ok(Self {
            particles,
            weights: vec![1.0 / cfg.n as f64; cfg.n],
            seed,
            timestamp: None,
            rng,
        })
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Random-walk prediction: each axis moves by `U(-v_max, v_max) * dt`.
    pub fn propagate(&mut self, dt: f64, cfg: &PfConfig) -> Result<(), PfError> {
        if !(dt >= 0.0) {
            return Err(PfError::NegativeDt(dt));
        }
        if dt == 0.0 || cfg.v_max == 0.0 {
            return Ok(());
        }
        let v = cfg.v_max;
        for p in &mut self.particles {
            p.x += self.rng.random_range(-v..=v) * dt;
            p.y += self.rng.random_range(-v..=v) * dt;
        }
        Ok(())
    }

    /// Gaussian measurement update with covariance `sigma_z^2 I`, in log space.
    pub fn measure(&mut self, z: GroundPoint, cfg: &PfConfig) -> Result<(), PfError> {
        if !z.is_finite() {
            return Err(PfError::NonFiniteMeasurement(z.x, z.y));
        }
        let inv_var = 1.0 / (cfg.sigma_z * cfg.sigma_z);
        let log_lik: Vec<f64> = self
            .particles
            .iter()
            .map(|p| -0.5 * ((z.x - p.x).powi(2) + (z.y - p.y).powi(2)) * inv_var)
            .collect();
        let max_lik = log_lik.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max_lik.exp() == 0.0 {
            return Err(PfError::DegenerateWeights);
        }
        let log_post: Vec<f64> = self.weights.iter().zip(&log_lik).map(|(w, l)| w.ln() + l).collect();
        let max_post = log_post.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max_post.is_finite() {
            return Err(PfError::DegenerateWeights);
        }
        let unnorm: Vec<f64> = log_post.iter().map(|l| (l - max_post).exp()).collect();
        let total: f64 = unnorm.iter().sum();
        self.weights = unnorm.into_iter().map(|w| w / total).collect();
        Ok(())
    }

    /// Systematic resampling with a single uniform offset; weights become uniform.
    pub fn resample(&mut self) {
        let offset: f64 = self.rng.random();
        let idx = systematic_indices(&self.weights, offset);
        self.particles = idx.into_iter().map(|i| self.particles[i]).collect();
        let n = self.particles.len();
        self.weights = vec![1.0 / n as f64; n];
    }

    pub fn effective_sample_size(&self) -> f64 {
        1.0 / self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    /// Propagates to time `t`, applies `z`, and resamples according to `cfg.resample`.
    pub fn update(&mut self, z: GroundPoint, t: f64, cfg: &PfConfig) -> Result<(), PfError> {
        self.advance_to(t, cfg)?;
        self.measure(z, cfg)?;
        let resample = match cfg.resample {
            ResamplePolicy::EveryUpdate => true,
            ResamplePolicy::EssBelow(f) => self.effective_sample_size() < f * self.len() as f64,
        };
        if resample {
            self.resample();
        }
        Ok(())
    }

    /// Propagates by the time elapsed since the last update (none on the first call).
    pub fn advance_to(&mut self, t: f64, cfg: &PfConfig) -> Result<(), PfError> {
        if let Some(prev) = self.timestamp {
            self.propagate((t - prev).max(0.0), cfg)?;
        }
        self.timestamp = Some(self.timestamp.map_or(t, |p| p.max(t)));
        Ok(())
    }

    pub fn estimate(&self) -> Estimate {
        let total: f64 = self.weights.iter().sum();
        let (mut mx, mut my) = (0.0, 0.0);
        for (p, w) in self.particles.iter().zip(&self.weights) {
            mx += w * p.x;
            my += w * p.y;
        }
        mx /= total;
        my /= total;
        let mut c = [[0.0; 2]; 2];
        for (p, w) in self.particles.iter().zip(&self.weights) {
            let (dx, dy) = (p.x - mx, p.y - my);
            c[0][0] += w * dx * dx;
            c[0][1] += w * dx * dy;
            c[1][1] += w * dy * dy;
        }
        c[0][0] /= total;
        c[0][1] /= total;
        c[1][1] /= total;
        c[1][0] = c[0][1];
        Estimate {
            mean: GroundPoint::new(mx, my),
            covariance: c,
        }
    }
}

/// Indices selected by a comb of `n` pointers `(k + offset) / n`, `offset` in `[0, 1)`.
///
/// Each pointer picks the first particle whose cumulative weight exceeds it.
pub fn systematic_indices(weights: &[f64], offset: f64) -> Vec<usize> {
    let n = weights.len();
    let mut out = Vec::with_capacity(n);
    let mut cumulative = weights.first().copied().unwrap_or(0.0);
    let mut i = 0;
    for k in 0..n {
        let pointer = (k as f64 + offset) / n as f64;
        while cumulative <= pointer && i + 1 < n {
            i += 1;
            cumulative += weights[i];
        }
        out.push(i);
    }
    out
}
