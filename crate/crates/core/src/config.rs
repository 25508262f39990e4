//! Run configuration. Every field has a default; a TOML file uses the same
//! keys as the command-line flags.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::memetic::{MaError, MaParams};
use crate::parallel::{CooperationConfig, CooperationError, PhaConfig};
use crate::route_min::{ParamError, RemoveRouteParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Routes,
    Distance,
    #[default]
    Both,
}

impl std::str::FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "routes" => Ok(Phase::Routes),
            "distance" => Ok(Phase::Distance),
            "both" => Ok(Phase::Both),
            other => Err(format!("unknown phase `{other}` (expected routes, distance or both)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub instance: Option<PathBuf>,
    /// Starting solution for the distance phase.
    pub initial: Option<PathBuf>,
    pub phase: Phase,
    pub threads: usize,
    pub seed: u64,
    /// Route-minimization budget, seconds.
    pub time_limit_s: f64,
    /// Overrides `remove_route.tau_r`.
    pub route_time_limit_s: Option<f64>,
    /// Overrides `memetic.time_limit`.
    pub ma_time_limit_s: Option<f64>,
    pub out: Option<PathBuf>,
    pub stats: Option<PathBuf>,
    pub stall_phases: usize,
    pub remove_route: RemoveRouteParams,
    pub cooperation: Option<CooperationConfig>,
    pub memetic: MaParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            instance: None,
            initial: None,
            phase: Phase::Both,
            threads: 1,
            seed: 0,
            time_limit_s: 1200.0,
            route_time_limit_s: None,
            ma_time_limit_s: None,
            out: None,
            stats: None,
            stall_phases: PhaConfig::default().stall_phases,
            remove_route: RemoveRouteParams::default(),
            cooperation: None,
            memetic: MaParams::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot parse configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("threads must be at least 1")]
    NoThreads,
    #[error("time limit `{0}` must be positive")]
    TimeLimit(&'static str),
    #[error("stall_phases must be positive")]
    Stall,
    #[error("remove_route: {0}")]
    RemoveRoute(#[from] ParamError),
    #[error("cooperation: {0}")]
    Cooperation(#[from] CooperationError),
    #[error("memetic: {0}")]
    Memetic(#[from] MaError),
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: RunConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.threads == 0 {
            return Err(ConfigError::NoThreads);
        }
        for (name, v) in [
            ("time_limit_s", Some(self.time_limit_s)),
            ("route_time_limit_s", self.route_time_limit_s),
            ("ma_time_limit_s", self.ma_time_limit_s),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(ConfigError::TimeLimit(name));
                }
            }
        }
        if self.stall_phases == 0 {
            return Err(ConfigError::Stall);
        }
        self.remove_route_params().validate()?;
        if let Some(c) = &self.cooperation {
            c.validate()?;
        }
        self.ma_params().validate()?;
        Ok(())
    }

    pub fn remove_route_params(&self) -> RemoveRouteParams {
        let mut p = self.remove_route.clone();
        if let Some(t) = self.route_time_limit_s {
            p.tau_r = t;
        }
        p
    }

    pub fn ma_params(&self) -> MaParams {
        let mut p = self.memetic.clone();
        if let Some(t) = self.ma_time_limit_s {
            p.time_limit = t;
        }
        p
    }

    pub fn pha_config(&self) -> PhaConfig {
        PhaConfig {
            threads: self.threads,
            cooperation: self.cooperation.clone(),
            remove_route: self.remove_route_params(),
            time_limit: self.time_limit_s,
            stall_phases: self.stall_phases,
        }
    }
}
