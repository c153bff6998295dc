use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::dataset::DimensionRecord;
use crate::capability::{summarize, SpecLimits};
use crate::error::{Error, Result};
use crate::rng::{stream, StreamRng};

/// Capability mixture for a synthetic multi-dimension dataset.
///
/// Each dimension gets a target plug-in estimate drawn from one of three
/// bands: near (`|Ĉ − C₀| ≤ near_halfwidth`), far below, and far above. The
/// sample is then built so that its estimate equals the target exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub dimensions: usize,
    pub n_per_dimension: usize,
    pub c0: f64,
    /// Fraction of dimensions whose estimate falls below `c0`.
    pub below_fraction: f64,
    /// Fraction inside the near-threshold band; split evenly across `c0`.
    pub near_fraction: f64,
    pub near_halfwidth: f64,
    /// Fraction generated from a shifted lognormal shape.
    pub non_normal_fraction: f64,
    pub cpk_floor: f64,
    pub cpk_ceiling: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            dimensions: 200,
            n_per_dimension: 32,
            c0: 1.33,
            below_fraction: 0.25,
            near_fraction: 0.2,
            near_halfwidth: 0.1,
            non_normal_fraction: 0.3,
            cpk_floor: 0.3,
            cpk_ceiling: 4.0,
            seed: 0,
        }
    }
}

struct Counts {
    near_below: usize,
    near_above: usize,
    far_below: usize,
    far_above: usize,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let frac = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::domain(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        frac("below_fraction", self.below_fraction)?;
        frac("near_fraction", self.near_fraction)?;
        frac("non_normal_fraction", self.non_normal_fraction)?;
        if self.n_per_dimension < 2 {
            return Err(Error::insufficient(
                "synthetic dimension",
                2,
                self.n_per_dimension,
            ));
        }
        if !(self.near_halfwidth > 0.0 && self.c0.is_finite()) {
            return Err(Error::domain(
                "near_halfwidth must be positive and c0 finite",
            ));
        }
        if !(self.cpk_floor > 0.0
            && self.cpk_floor < self.c0 - self.near_halfwidth
            && self.cpk_ceiling > self.c0 + self.near_halfwidth)
        {
            return Err(Error::domain(
                "need 0 < cpk_floor < c0 - halfwidth and cpk_ceiling > c0 + halfwidth",
            ));
        }
        self.counts().map(|_| ())
    }

    fn counts(&self) -> Result<Counts> {
        let total = self.dimensions;
        let near = (self.near_fraction * total as f64).round() as usize;
        let below = (self.below_fraction * total as f64).round() as usize;
        let near_below = (near / 2).min(below);
        let near_above = near - near_below;
        let far_below = below - near_below;
        if near + far_below > total {
            return Err(Error::domain(
                "below_fraction and near_fraction are incompatible with the dimension count",
            ));
        }
        Ok(Counts {
            near_below,
            near_above,
            far_below,
            far_above: total - near - far_below,
        })
    }
}

/// Shape with sample mean 0 and sample sd 1 (n − 1 divisor).
fn standardized_shape(rng: &mut StreamRng, n: usize, log_sd: Option<f64>) -> Vec<f64> {
    loop {
        let raw: Vec<f64> = (0..n)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                match log_sd {
                    Some(s) => (s * z).exp(),
                    None => z,
                }
            })
            .collect();
        if let Ok(s) = summarize(&raw) {
            if s.sd > 0.0 {
                return raw.iter().map(|v| (v - s.mean) / s.sd).collect();
            }
        }
    }
}

fn make_dimension(
    rng: &mut StreamRng,
    id: String,
    target: f64,
    n: usize,
    skewed: bool,
) -> Result<DimensionRecord> {
    let nominal = rng.random_range(5.0..50.0);
    let half = rng.random_range(0.05..0.5);
    let u_max = if target > 1.0 { 1.0 / target } else { 1.0 };
    let u = rng.random_range(0.2..=u_max);
    let sigma = half * u / 3.0;
    let offset = half * (1.0 - u * target);
    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let log_sd = skewed.then(|| rng.random_range(0.6..1.2));
    let shape = standardized_shape(rng, n, log_sd);
    // mirror the skew on the low side half of the time
    let flip = if skewed && rng.random::<bool>() {
        -1.0
    } else {
        1.0
    };
    let center = nominal + sign * offset;
    Ok(DimensionRecord {
        id,
        limits: SpecLimits::new(nominal - half, nominal + half)?,
        measurements: shape.iter().map(|v| center + sigma * flip * v).collect(),
    })
}

/// Generate a dataset following `spec`; identical for identical specs.
pub fn synth_dataset(spec: &SynthSpec) -> Result<Vec<DimensionRecord>> {
    spec.validate()?;
    let c = spec.counts()?;
    let mut rng = stream(spec.seed, 0);
    let (c0, w) = (spec.c0, spec.near_halfwidth);

    let mut targets = Vec::with_capacity(spec.dimensions);
    for _ in 0..c.near_below {
        targets.push(c0 - w * rng.random::<f64>());
    }
    for _ in 0..c.near_above {
        targets.push(c0 + w * (1.0 - rng.random::<f64>()));
    }
    for _ in 0..c.far_below {
        targets.push(rng.random_range(spec.cpk_floor..c0 - w));
    }
    for _ in 0..c.far_above {
        let t = rng.random_range(c0 + w..=spec.cpk_ceiling);
        targets.push(if t > c0 + w { t } else { spec.cpk_ceiling });
    }
    targets.shuffle(&mut rng);

    let skewed_count = (spec.non_normal_fraction * spec.dimensions as f64).round() as usize;
    let mut skewed: Vec<bool> = (0..spec.dimensions).map(|i| i < skewed_count).collect();
    skewed.shuffle(&mut rng);

    let width = spec.dimensions.to_string().len().max(4);
    targets
        .iter()
        .zip(&skewed)
        .enumerate()
        .map(|(i, (&t, &sk))| {
            let id = format!("D{:0width$}", i + 1, width = width);
            make_dimension(&mut rng, id, t, spec.n_per_dimension, sk)
        })
        .collect()
}
