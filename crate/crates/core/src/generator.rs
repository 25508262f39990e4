//! Deterministic synthetic instances in the style of the classic benchmark
//! families: uniform (R), clustered (C) and mixed (RC) layouts on a 100x100
//! grid with integer coordinates and windows. Every customer is reachable
//! directly from the depot, so the one-route-per-customer solution is feasible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::instance::{Instance, Node};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    Random,
    Clustered,
    Mixed,
}

impl std::str::FromStr for Layout {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "random" | "r" => Ok(Layout::Random),
            "clustered" | "c" => Ok(Layout::Clustered),
            "mixed" | "rc" => Ok(Layout::Mixed),
            other => Err(format!("unknown layout `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub name: String,
    pub customers: usize,
    pub layout: Layout,
    /// Depot due date.
    pub horizon: u32,
    pub capacity: u32,
    pub max_demand: u32,
    pub service: u32,
    /// Window width range as fractions of the horizon.
    pub min_width: f64,
    pub max_width: f64,
    /// Share of customers whose window spans the whole feasible range.
    pub open_share: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            name: String::from("synthetic"),
            customers: 100,
            layout: Layout::Random,
            horizon: 230,
            capacity: 200,
            max_demand: 30,
            service: 10,
            min_width: 0.05,
            max_width: 0.2,
            open_share: 0.25,
            seed: 0,
        }
    }
}

pub fn generate(config: &GeneratorConfig) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let depot_xy = (50.0, 50.0);
    let clusters: Vec<(f64, f64)> = (0..(config.customers / 10).clamp(1, 12))
        .map(|_| (rng.gen_range(15.0..85.0f64).round(), rng.gen_range(15.0..85.0f64).round()))
        .collect();

    let horizon = config.horizon as f64;
    let service = config.service as f64;
    let mut nodes = vec![Node {
        id: 0,
        x: depot_xy.0,
        y: depot_xy.1,
        demand: 0,
        ready: 0.0,
        due: horizon,
        service: 0.0,
    }];

    for id in 1..=config.customers {
        let clustered = match config.layout {
            Layout::Random => false,
            Layout::Clustered => true,
            Layout::Mixed => id % 2 == 0,
        };
        let (x, y) = if clustered {
            let (cx, cy) = clusters[rng.gen_range(0..clusters.len())];
            let angle = rng.gen_range(0.0..std::f64::consts::TAU);
            let radius = rng.gen_range(0.0..8.0);
            (
                (cx + radius * angle.cos()).round().clamp(0.0, 100.0),
                (cy + radius * angle.sin()).round().clamp(0.0, 100.0),
            )
        } else {
            (rng.gen_range(0..=100) as f64, rng.gen_range(0..=100) as f64)
        };

        let d0 = ((x - depot_xy.0).powi(2) + (y - depot_xy.1).powi(2)).sqrt();
        let earliest = d0.ceil();
        let latest = (horizon - d0 - service).floor();
        assert!(
            latest >= earliest,
            "horizon {horizon} too short for customer at distance {d0:.1}"
        );

        let (ready, due) = if rng.gen_bool(config.open_share.clamp(0.0, 1.0)) {
            (0.0, latest)
        } else {
            let width = rng.gen_range(config.min_width..=config.max_width.max(config.min_width)) * horizon;
            let center = rng.gen_range(earliest..=latest);
            let ready = (center - width / 2.0).max(0.0).floor();
            let due = (center + width / 2.0).min(latest).floor().max(earliest);
            (ready.min(due), due)
        };

        nodes.push(Node {
            id,
            x,
            y,
            demand: rng.gen_range(1..=config.max_demand.max(1)).min(config.capacity),
            ready,
            due,
            service,
        });
    }

    let vehicles = config.customers.max(1);
    Instance::new(config.name.clone(), vehicles, config.capacity, nodes)
        .expect("generated instance is valid")
}
