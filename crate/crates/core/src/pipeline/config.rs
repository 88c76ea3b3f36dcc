use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::energy::LossWeights;
use crate::field::NetworkConfig;
use crate::{Error, Result};

/// Every knob of a training run. Missing fields in a JSON config take the
/// desk-scale defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub weights: LossWeights,
    pub lr: f64,
    pub iterations: usize,
    /// Marching-cubes resolution for zero-set refreshes.
    pub mc_train_resolution: usize,
    /// Marching-cubes resolution for exported and evaluated meshes.
    pub mc_export_resolution: usize,
    pub n_p: usize,
    pub n_q: usize,
    pub n_qzero: usize,
    pub refresh_period: usize,
    pub network: NetworkConfig,
    /// Radius of the sphere the network is initialized to.
    pub init_radius: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl TrainConfig {
    /// CPU-scale defaults: 4x64 network, 2K samples per population, 2K iterations.
    pub fn desk() -> Self {
        TrainConfig {
            weights: LossWeights::default(),
            lr: 1e-3,
            iterations: 2000,
            mc_train_resolution: 64,
            mc_export_resolution: 128,
            n_p: 2000,
            n_q: 2000,
            n_qzero: 2000,
            refresh_period: 100,
            network: NetworkConfig::desk(),
            init_radius: 0.3,
            seed: 0,
        }
    }

    /// Full-size settings: 8x256 network, 10K samples, 10K iterations.
    pub fn full() -> Self {
        TrainConfig {
            lr: 5e-5,
            iterations: 10_000,
            mc_train_resolution: 128,
            mc_export_resolution: 512,
            n_p: 10_000,
            n_q: 10_000,
            n_qzero: 10_000,
            network: NetworkConfig::full_scale(),
            ..Self::desk()
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
        let config: TrainConfig = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            location: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("lr must be positive, got {}", self.lr)));
        }
        if self.refresh_period == 0 {
            return Err(Error::Config("refresh_period must be at least 1".into()));
        }
        if self.mc_train_resolution < 8 || self.mc_export_resolution < 8 {
            return Err(Error::Config("marching-cubes resolutions must be at least 8".into()));
        }
        if self.n_p == 0 || self.n_q == 0 || self.n_qzero == 0 {
            return Err(Error::Config("sample counts must be positive".into()));
        }
        if !(self.init_radius > 0.0 && self.init_radius < 0.5) {
            return Err(Error::Config(format!("init_radius must be in (0, 0.5), got {}", self.init_radius)));
        }
        crate::field::MlpParams::zeros(&self.network)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_json_fills_defaults() {
        let c: TrainConfig = serde_json::from_str(r#"{"iterations": 7, "weights": {"smooth": 0.0}}"#).unwrap();
        assert_eq!(c.iterations, 7);
        assert_eq!(c.weights.smooth, 0.0);
        assert_eq!(c.weights.eikonal, 0.1);
        assert_eq!(c.n_q, TrainConfig::desk().n_q);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<TrainConfig>(r#"{"iters": 7}"#).is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        let mut c = TrainConfig::desk();
        c.refresh_period = 0;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        assert!(TrainConfig::full().validate().is_ok());
    }
}
