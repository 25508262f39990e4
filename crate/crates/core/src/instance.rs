//! Immutable problem data: depot, customers, capacity and the distance matrix.

use thiserror::Error;

/// Absolute tolerance used for every time and distance comparison.
pub const EPS: f64 = 1e-9;

/// Index of the depot in [`Instance::nodes`].
pub const DEPOT: usize = 0;

/// A vertex of the routing graph. The depot is node 0 with zero demand and service time.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub demand: u32,
    pub ready: f64,
    pub due: f64,
    pub service: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum InstanceError {
    #[error("vehicle capacity must be positive")]
    ZeroCapacity,
    #[error("instance has no depot")]
    MissingDepot,
    #[error("node ids must be dense 0..=N, found {found} at position {position}")]
    NonDenseIds { position: usize, found: usize },
    #[error("node {id}: due date {due} is before ready time {ready}")]
    InvertedWindow { id: usize, ready: f64, due: f64 },
    #[error("customer {id}: demand {demand} exceeds vehicle capacity {capacity}")]
    DemandExceedsCapacity { id: usize, demand: u32, capacity: u32 },
    #[error("depot must have zero demand and service time")]
    DepotNotNeutral,
}

/// A VRPTW instance. Travel time equals Euclidean distance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub name: String,
    /// Vehicle count from the file header, informational only.
    pub vehicles: usize,
    pub capacity: u32,
    nodes: Vec<Node>,
    dist: Vec<f64>,
}

impl Instance {
    /// Builds an instance from nodes where `nodes[0]` is the depot and ids equal positions.
    pub fn new(
        name: impl Into<String>,
        vehicles: usize,
        capacity: u32,
        nodes: Vec<Node>,
    ) -> Result<Self, InstanceError> {
        if capacity == 0 {
            return Err(InstanceError::ZeroCapacity);
        }
        if nodes.is_empty() {
            return Err(InstanceError::MissingDepot);
        }
        for (position, node) in nodes.iter().enumerate() {
            if node.id != position {
                return Err(InstanceError::NonDenseIds {
                    position,
                    found: node.id,
                });
            }
            if node.due < node.ready {
                return Err(InstanceError::InvertedWindow {
                    id: node.id,
                    ready: node.ready,
                    due: node.due,
                });
            }
            if node.demand > capacity {
                return Err(InstanceError::DemandExceedsCapacity {
                    id: node.id,
                    demand: node.demand,
                    capacity,
                });
            }
        }
        if nodes[DEPOT].demand != 0 || nodes[DEPOT].service != 0.0 {
            return Err(InstanceError::DepotNotNeutral);
        }

        let n = nodes.len();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let dx = nodes[i].x - nodes[j].x;
                let dy = nodes[i].y - nodes[j].y;
                dist[i * n + j] = (dx * dx + dy * dy).sqrt();
            }
        }

        Ok(Instance {
            name: name.into(),
            vehicles,
            capacity,
            nodes,
            dist,
        })
    }

    /// Number of customers N (the depot excluded).
    pub fn customer_count(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    #[inline]
    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    #[inline]
    pub fn dist(&self, from: usize, to: usize) -> f64 {
        self.dist[from * self.nodes.len() + to]
    }

    pub fn depot(&self) -> &Node {
        &self.nodes[DEPOT]
    }

    /// Customer ids `1..=N`.
    pub fn customers(&self) -> impl Iterator<Item = usize> {
        1..self.nodes.len()
    }

    pub fn total_demand(&self) -> u64 {
        self.nodes.iter().map(|n| n.demand as u64).sum()
    }

    /// Lower bound on the fleet size, `ceil(sum of demands / Q)`.
    pub fn k_min(&self) -> usize {
        let total = self.total_demand();
        let q = self.capacity as u64;
        total.div_ceil(q) as usize
    }
}
