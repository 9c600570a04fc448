//! Seeded test-function ensembles used by every certificate.

use std::fmt;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::spectral::SpectralOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Uniform,
    Gaussian,
    HeatSmoothed,
    Spike,
    Custom,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::Uniform => "uniform",
            Family::Gaussian => "gaussian",
            Family::HeatSmoothed => "heat_smoothed",
            Family::Spike => "spike",
            Family::Custom => "custom",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnsembleConfig {
    pub per_family: usize,
    pub seed: u64,
    pub heat_times: Vec<f64>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self { per_family: 200, seed: 20240601, heat_times: vec![0.01, 0.1, 1.0] }
    }
}

impl EnsembleConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub fn sized(per_family: usize, seed: u64) -> Self {
        Self { per_family, seed, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub family: Family,
    pub f: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub descriptor: String,
    pub samples: Vec<Sample>,
}

impl Ensemble {
    pub fn from_vectors(descriptor: impl Into<String>, vectors: Vec<DVector<f64>>) -> Self {
        Self {
            descriptor: descriptor.into(),
            samples: vectors.into_iter().map(|f| Sample { family: Family::Custom, f }).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn vectors(&self) -> impl Iterator<Item = &DVector<f64>> {
        self.samples.iter().map(|s| &s.f)
    }

    /// The four standard families: non-negative uniform, signed Gaussian,
    /// heat-smoothed Gaussian `e^{-sA}ξ` (cycling through `heat_times`), and
    /// near-indicator spikes.
    pub fn standard(op: &SpectralOperator, cfg: &EnsembleConfig) -> Self {
        let n = op.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut samples = Vec::with_capacity(4 * cfg.per_family);
        for _ in 0..cfg.per_family {
            let f = DVector::from_fn(n, |_, _| rng.random::<f64>());
            samples.push(Sample { family: Family::Uniform, f });
        }
        for _ in 0..cfg.per_family {
            samples.push(Sample { family: Family::Gaussian, f: gaussian(&mut rng, n) });
        }
        let heat: Vec<_> = cfg.heat_times.iter().map(|&s| op.heat(s)).collect();
        for i in 0..cfg.per_family {
            let xi = gaussian(&mut rng, n);
            let f = if heat.is_empty() { xi } else { &heat[i % heat.len()] * xi };
            samples.push(Sample { family: Family::HeatSmoothed, f });
        }
        for _ in 0..cfg.per_family {
            samples.push(Sample { family: Family::Spike, f: spike(&mut rng, n) });
        }
        Self {
            descriptor: format!(
                "standard(n={n}, per_family={}, seed={}, heat_times={:?})",
                cfg.per_family, cfg.seed, cfg.heat_times
            ),
            samples,
        }
    }

    /// Non-negative functions only: uniform draws and spikes.
    pub fn non_negative(n: usize, count: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..count)
            .map(|i| {
                if i % 4 == 3 {
                    Sample { family: Family::Spike, f: spike(&mut rng, n) }
                } else {
                    let scale = 10f64.powf(rng.random_range(-2.0..2.0));
                    let f = DVector::from_fn(n, |_, _| scale * rng.random::<f64>());
                    Sample { family: Family::Uniform, f }
                }
            })
            .collect();
        Self { descriptor: format!("non_negative(n={n}, count={count}, seed={seed})"), samples }
    }

    /// Gaussian directions, uniform on the Euclidean unit sphere of `R^n`.
    pub fn gaussian_directions(n: usize, count: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..count)
            .map(|_| {
                let g = gaussian(&mut rng, n);
                let norm = g.norm();
                Sample { family: Family::Gaussian, f: g / norm }
            })
            .collect();
        Self { descriptor: format!("gaussian_directions(n={n}, count={count}, seed={seed})"), samples }
    }
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

/// Indicator of one to three sites plus a small non-negative background.
fn spike(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    let level = rng.random_range(0.0..0.05);
    let mut f = DVector::from_fn(n, |_, _| level * rng.random::<f64>());
    let width = rng.random_range(1..=3.min(n));
    let start = rng.random_range(0..n);
    for k in 0..width {
        f[(start + k) % n] += 1.0;
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::{build, GeneratorSpec};

    #[test]
    fn reproducible_and_sized() {
        let op = build(&GeneratorSpec::cycle(8)).unwrap();
        let cfg = EnsembleConfig::sized(5, 7);
        let a = Ensemble::standard(&op, &cfg);
        let b = Ensemble::standard(&op, &cfg);
        assert_eq!(a, b);
        assert_eq!(a.len(), 20);
        let c = Ensemble::standard(&op, &EnsembleConfig::sized(5, 8));
        assert_ne!(a.samples[0].f, c.samples[0].f);
    }

    #[test]
    fn families_have_expected_signs() {
        let op = build(&GeneratorSpec::cycle(6)).unwrap();
        let e = Ensemble::standard(&op, &EnsembleConfig::sized(10, 1));
        for s in &e.samples {
            match s.family {
                Family::Uniform | Family::Spike => assert!(s.f.iter().all(|&v| v >= 0.0)),
                _ => {}
            }
        }
        let nn = Ensemble::non_negative(6, 40, 3);
        assert!(nn.vectors().all(|f| f.iter().all(|&v| v >= 0.0)));
    }
}
