//! Demand-perturbed copies of an instance.
//!
//! Each quantity is redrawn from a normal distribution centred on the
//! original with standard deviation `level` times the original, then
//! clamped at zero. Origins, destinations and everything else stay put.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linerlib::write_demands;
use crate::model::Instance;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbSpec {
    /// Relative standard deviation.
    pub level: f64,
    pub count: usize,
    pub seed: u64,
}

impl PerturbSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.level >= 0.0) || !self.level.is_finite() {
            return Err(Error::Config(format!("perturbation level {} must be >= 0", self.level)));
        }
        if self.count == 0 {
            return Err(Error::Config("perturbation count must be at least 1".into()));
        }
        Ok(())
    }
}

/// Generator for output `k`; each output has its own stream so it can be
/// regenerated without the others.
pub fn perturb_rng(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

/// Quantities for output `k`.
pub fn perturbed_quantities(instance: &Instance, level: f64, seed: u64, k: u64) -> Result<Vec<f64>> {
    let mut rng = perturb_rng(seed, k);
    instance
        .demands
        .iter()
        .map(|d| {
            if level == 0.0 || d.quantity == 0.0 {
                return Ok(d.quantity);
            }
            let normal = Normal::new(d.quantity, level * d.quantity)
                .map_err(|e| Error::Config(format!("normal distribution: {e}")))?;
            Ok(normal.sample(&mut rng).max(0.0))
        })
        .collect()
}

pub fn perturbed_name(instance: &Instance, level: f64, k: usize) -> String {
    format!("{}_p{level}_{k}", instance.name)
}

pub fn perturb_demands(instance: &Instance, spec: &PerturbSpec) -> Result<Vec<Instance>> {
    spec.validate()?;
    (0..spec.count)
        .map(|k| {
            let q = perturbed_quantities(instance, spec.level, spec.seed, k as u64)?;
            Ok(instance.with_quantities(perturbed_name(instance, spec.level, k), &q))
        })
        .collect()
}

/// Writes `Demand_<name>_p<level>_<k>` files into `out_dir`.
pub fn write_perturbed(instance: &Instance, spec: &PerturbSpec, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    perturb_demands(instance, spec)?
        .iter()
        .map(|inst| {
            let path = out_dir.join(format!("Demand_{}", inst.name));
            write_demands(inst, &path)?;
            Ok(path)
        })
        .collect()
}
