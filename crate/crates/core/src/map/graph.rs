use std::collections::HashMap;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{planarity_energy, Surfel, SurfelId, SurfelMap};

/// Edge weight used to rank neighbour candidates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphDistance {
    /// Planarity energy regardless of labels.
    #[default]
    Geometric,
    /// `−log Ψ^pl` with the label indicator: cross-label pairs cost 0.
    LabelAware,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphConfig {
    pub k: usize,
    pub radius: f64,
    pub distance: GraphDistance,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            k: 12,
            radius: 0.2,
            distance: GraphDistance::Geometric,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub id: SurfelId,
    /// Cached edge distance at the time of the last update.
    pub distance: f64,
}

/// Uniform hash grid over surfel positions.
#[derive(Clone, Debug)]
pub struct SpatialGrid {
    cell: f64,
    cells: HashMap<[i32; 3], Vec<SurfelId>>,
}

impl SpatialGrid {
    pub fn new(cell: f64) -> Self {
        assert!(cell > 0.0);
        Self {
            cell,
            cells: HashMap::new(),
        }
    }

    pub fn from_map(map: &SurfelMap, cell: f64) -> Self {
        let mut g = Self::new(cell);
        for s in map.iter() {
            g.insert(s.id, &s.position);
        }
        g
    }

    fn key(&self, p: &Vector3<f64>) -> [i32; 3] {
        [
            (p.x / self.cell).floor() as i32,
            (p.y / self.cell).floor() as i32,
            (p.z / self.cell).floor() as i32,
        ]
    }

    pub fn insert(&mut self, id: SurfelId, p: &Vector3<f64>) {
        self.cells.entry(self.key(p)).or_default().push(id);
    }

    /// Ids in all cells overlapping the ball of `radius` around `p`
    /// (a superset of the ball).
    pub fn candidates(&self, p: &Vector3<f64>, radius: f64, out: &mut Vec<SurfelId>) {
        out.clear();
        let reach = (radius / self.cell).ceil() as i32;
        let c = self.key(p);
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                for dz in -reach..=reach {
                    if let Some(ids) = self.cells.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                        out.extend_from_slice(ids);
                    }
                }
            }
        }
    }
}

/// Directed k-nearest-neighbour graph indexed by surfel id.
#[derive(Clone, Debug, Default)]
pub struct NeighborGraph {
    adjacency: Vec<Vec<Neighbor>>,
}

impl NeighborGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn neighbors(&self, id: SurfelId) -> &[Neighbor] {
        self.adjacency.get(id as usize).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn set(&mut self, id: SurfelId, list: Vec<Neighbor>) {
        let i = id as usize;
        if self.adjacency.len() <= i {
            self.adjacency.resize_with(i + 1, Vec::new);
        }
        self.adjacency[i] = list;
    }

    /// Drops deleted surfels and their edges.
    pub fn purge(&mut self, map: &SurfelMap) {
        for (i, list) in self.adjacency.iter_mut().enumerate() {
            if map.get(i as SurfelId).is_none() {
                list.clear();
            } else {
                list.retain(|n| map.get(n.id).is_some());
            }
        }
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    /// Recomputes the neighbourhoods of `ids` against the current map state.
    pub fn update(&mut self, map: &SurfelMap, grid: &SpatialGrid, ids: &[SurfelId], config: &GraphConfig, sigma_pl: f64) {
        let lists: Vec<(SurfelId, Vec<Neighbor>)> = ids
            .par_iter()
            .map_init(Vec::new, |scratch, &id| (id, knn_query(map, grid, id, config, sigma_pl, scratch)))
            .collect();
        for (id, list) in lists {
            self.set(id, list);
        }
    }
}

fn edge_distance(a: &Surfel, b: &Surfel, config: &GraphConfig, sigma_pl: f64) -> f64 {
    if config.distance == GraphDistance::LabelAware && a.label != b.label {
        return 0.0;
    }
    planarity_energy(&a.position, &a.normal, &b.position, &b.normal, sigma_pl)
}

/// The `k` surfels within `radius` of `id` with the smallest edge distance.
/// Ties are broken by Euclidean distance and then by id.
pub fn knn_query(
    map: &SurfelMap,
    grid: &SpatialGrid,
    id: SurfelId,
    config: &GraphConfig,
    sigma_pl: f64,
    scratch: &mut Vec<SurfelId>,
) -> Vec<Neighbor> {
    let Some(me) = map.get(id) else {
        return Vec::new();
    };
    grid.candidates(&me.position, config.radius, scratch);
    let r2 = config.radius * config.radius;
    let mut scored: Vec<(f64, f64, SurfelId)> = scratch
        .iter()
        .filter(|&&j| j != id)
        .filter_map(|&j| map.get(j))
        .filter_map(|other| {
            let d2 = (other.position - me.position).norm_squared();
            (d2 <= r2).then(|| (edge_distance(me, other, config, sigma_pl), d2, other.id))
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    scored.truncate(config.k);
    scored
        .into_iter()
        .map(|(distance, _, id)| Neighbor { id, distance })
        .collect()
}
