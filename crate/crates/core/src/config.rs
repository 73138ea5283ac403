use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Every tunable threshold of the pipeline, loaded from a single JSON document.
///
/// All detection thresholds were calibrated on synthetic corpora; none is
/// hard-coded anywhere else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Cut detected between consecutive frames when their correlation drops below this.
    pub theta_cut: f64,
    /// Two shots labeled similar when their boundary-frame correlation reaches this.
    pub theta_sim: f64,
    /// Shot pairs farther apart than this many shots are never compared (`null` = unbounded).
    pub window_k: Option<usize>,
    /// Bins per histogram block (16 hue + 4 saturation + 4 value by default).
    pub bins: usize,
    /// A scene collapses to one speaker when the best silhouette stays below this.
    pub theta_single: f64,
    /// Two-segment scenes split into two speakers at this whitened distance.
    pub theta_pair: f64,
    /// Covariance regularizer, relative to `trace(W)/dim`.
    pub epsilon_rel: f64,
    /// Expected speaker-embedding dimension, checked at load time.
    pub embedding_dim: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            theta_cut: 0.5,
            theta_sim: 0.8,
            window_k: Some(30),
            bins: 24,
            theta_single: 0.10,
            theta_pair: 12.0,
            epsilon_rel: 1e-6,
            embedding_dim: 60,
        }
    }
}

impl PipelineConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| {
            Error::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", path.display()),
            ))
        })?;
        let cfg: Self = serde_json::from_slice(&bytes)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(-1.0 < self.theta_cut && self.theta_cut < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "theta_cut must lie in (-1, 1), got {}",
                self.theta_cut
            )));
        }
        if !(-1.0..=1.0).contains(&self.theta_sim) {
            return Err(Error::InvalidConfig(format!(
                "theta_sim must lie in [-1, 1], got {}",
                self.theta_sim
            )));
        }
        if self.bins == 0 {
            return Err(Error::InvalidConfig("bins must be positive".into()));
        }
        if self.embedding_dim == 0 {
            return Err(Error::InvalidConfig("embedding_dim must be positive".into()));
        }
        if self.theta_pair < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "theta_pair must be non-negative, got {}",
                self.theta_pair
            )));
        }
        if self.epsilon_rel < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "epsilon_rel must be non-negative, got {}",
                self.epsilon_rel
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        assert!(PipelineConfig::default().validate().is_ok());
    }

    #[test]
    fn rejects_out_of_range_thresholds() {
        let mut cfg = PipelineConfig::default();
        cfg.theta_cut = 1.0;
        assert!(cfg.validate().is_err());

        let mut cfg = PipelineConfig::default();
        cfg.embedding_dim = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = PipelineConfig::default();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: PipelineConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn rejects_unknown_fields() {
        let r: std::result::Result<PipelineConfig, _> =
            serde_json::from_str(r#"{"theta_cu":0.4}"#);
        assert!(r.is_err());
    }
}
