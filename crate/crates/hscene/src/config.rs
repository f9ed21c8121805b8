//! TOML configuration shared by the CLI subcommands. Every section is
//! optional; missing keys take their defaults.

use std::path::Path;
use std::time::Duration;

use anyhow::Result;
use serde::{Deserialize, Serialize};

use hscene_core::geometry::{CentroidOptions, Intrinsics};
use hscene_core::perception::PerceptionConfig;
use hscene_core::scenevqa::{DistancePlan, FilterRuleSet};

use crate::backends::RetryPolicy;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub perception: PerceptionConfig,
    pub backends: BackendConfig,
    pub geometry: GeometryConfig,
    pub distance: DistanceConfig,
    pub filter: FilterRuleSet,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Config> {
        let cfg: Config = match path {
            Some(p) => crate::io::read_toml(p)?,
            None => Config::default(),
        };
        cfg.perception.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub url: Option<String>,
    pub token: Option<String>,
    pub attempts: u32,
    pub backoff_ms: u64,
    pub deadline_ms: u64,
    pub max_in_flight: usize,
}

impl Default for BackendConfig {
    fn default() -> Self {
        let p = RetryPolicy::default();
        BackendConfig {
            url: None,
            token: None,
            attempts: p.attempts,
            backoff_ms: p.backoff.as_millis() as u64,
            deadline_ms: p.deadline.as_millis() as u64,
            max_in_flight: p.max_in_flight,
        }
    }
}

impl BackendConfig {
    pub fn policy(&self) -> RetryPolicy {
        RetryPolicy {
            attempts: self.attempts.max(1),
            backoff: Duration::from_millis(self.backoff_ms),
            deadline: Duration::from_millis(self.deadline_ms),
            max_in_flight: self.max_in_flight.max(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    /// Horizontal field of view used when `fx` is not given.
    pub hfov_deg: f64,
    pub fx: Option<f64>,
    pub fy: Option<f64>,
    pub cx: Option<f64>,
    pub cy: Option<f64>,
    /// Multiplier from stored depth values to meters; overrides any sidecar.
    pub depth_scale: Option<f32>,
    pub min_points: usize,
    pub erode: usize,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        let c = CentroidOptions::default();
        GeometryConfig {
            hfov_deg: 60.0,
            fx: None,
            fy: None,
            cx: None,
            cy: None,
            depth_scale: None,
            min_points: c.min_points,
            erode: c.erode,
        }
    }
}

impl GeometryConfig {
    pub fn intrinsics(&self, width: usize, height: usize) -> Result<Intrinsics> {
        let base = Intrinsics::from_hfov(width, height, self.hfov_deg)?;
        let fx = self.fx.unwrap_or(base.fx);
        Ok(Intrinsics::new(
            fx,
            self.fy.unwrap_or(fx),
            self.cx.unwrap_or(base.cx),
            self.cy.unwrap_or(base.cy),
            width,
            height,
        )?)
    }

    pub fn centroid_options(&self) -> CentroidOptions {
        CentroidOptions {
            min_points: self.min_points,
            erode: self.erode,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistanceConfig {
    pub seed: u64,
    #[serde(flatten)]
    pub plan: DistancePlan,
}
