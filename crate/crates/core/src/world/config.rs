use serde::{Deserialize, Serialize};

use super::geometry::Rect;
use super::WorldError;

pub const DEFAULT_TRANSPORT_SUBSTEPS: u32 = 3;
pub const DEFAULT_NOISE_SIGMA: f64 = 0.002;

/// Which observation channels receive noise when a noisy render is requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseChannels {
    pub depth: bool,
    pub color: bool,
}

impl Default for NoiseChannels {
    fn default() -> Self {
        Self { depth: true, color: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceConfig {
    pub bounds: Rect,
    pub raster_width: u32,
    pub raster_height: u32,
    pub pixels_per_meter: f64,
    /// Per transport sub-step probability that the gripper loses its object.
    pub drop_probability: f64,
    pub transport_substeps: u32,
    /// Depth noise standard deviation in meters.
    pub obs_noise_sigma: f64,
    pub noise_channels: NoiseChannels,
    pub rng_seed: u64,
}

impl Default for WorkspaceConfig {
    fn default() -> Self {
        Self {
            bounds: Rect::new(0.0, 0.0, 1.0, 0.5),
            raster_width: 320,
            raster_height: 160,
            pixels_per_meter: 320.0,
            drop_probability: 0.0,
            transport_substeps: DEFAULT_TRANSPORT_SUBSTEPS,
            obs_noise_sigma: DEFAULT_NOISE_SIGMA,
            noise_channels: NoiseChannels::default(),
            rng_seed: 0,
        }
    }
}

impl WorkspaceConfig {
    pub fn with_drop_probability(mut self, p: f64) -> Self {
        self.drop_probability = p;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        let w = self.bounds.width() * self.pixels_per_meter;
        let h = self.bounds.height() * self.pixels_per_meter;
        if w != f64::from(self.raster_width) || h != f64::from(self.raster_height) {
            return Err(WorldError::InvalidConfig(format!(
                "raster {}x{} does not equal bounds x pixels_per_meter ({w}x{h})",
                self.raster_width, self.raster_height
            )));
        }
        if !(0.0..=1.0).contains(&self.drop_probability) {
            return Err(WorldError::InvalidConfig(format!(
                "drop probability {} outside [0, 1]",
                self.drop_probability
            )));
        }
        if !(self.obs_noise_sigma >= 0.0) {
            return Err(WorldError::InvalidConfig(format!(
                "observation noise sigma {} is negative",
                self.obs_noise_sigma
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        WorkspaceConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_raster_and_probability() {
        let mut cfg = WorkspaceConfig::default();
        cfg.raster_width = 321;
        assert!(cfg.validate().is_err());

        let cfg = WorkspaceConfig::default().with_drop_probability(1.5);
        assert!(cfg.validate().is_err());

        let mut cfg = WorkspaceConfig::default();
        cfg.obs_noise_sigma = -0.1;
        assert!(cfg.validate().is_err());
    }
}
