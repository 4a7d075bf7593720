use std::collections::{BTreeSet, HashMap};

use rand::seq::index::sample;
use rand::Rng;

use super::RunConfig;
use crate::gibbs::{initialize_labels, publish_estimates, run_sweep, run_sweep_parallel, SweepGroups, SweepReport};
use crate::map::{MapSnapshot, NeighborGraph, SpatialGrid, SurfelId, SurfelMap, SurfelSeed, WorldObservation};
use crate::segmentation::DirectionalModel;

/// Map changes derived from one tracked frame.
#[derive(Clone, Debug, Default)]
pub struct FrameUpdate {
    pub associations: Vec<(SurfelId, WorldObservation)>,
    /// Surfels whose observed depth lies behind them in this frame.
    pub free_space: Vec<SurfelId>,
    /// New surfels with their true segment when known.
    pub seeds: Vec<(SurfelSeed, Option<u32>)>,
}

/// What applying an update changed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct UpdateSummary {
    pub fused: usize,
    pub deleted: usize,
    pub added: usize,
}

/// Single owner of the map, the directional model and the neighbour graph.
#[derive(Clone, Debug)]
pub struct Mapper {
    pub map: SurfelMap,
    pub model: DirectionalModel,
    pub graph: NeighborGraph,
    grid: SpatialGrid,
    config: RunConfig,
    /// True segment of each surfel created from a synthetic frame.
    pub true_segments: HashMap<SurfelId, u32>,
    sweeps: u64,
    version: u64,
}

impl Mapper {
    pub fn new(config: &RunConfig) -> Self {
        Self {
            map: SurfelMap::new(),
            model: DirectionalModel::from_config(&config.segmentation),
            graph: NeighborGraph::new(),
            grid: SpatialGrid::new(config.graph.radius.max(1e-3)),
            config: config.clone(),
            true_segments: HashMap::new(),
            sweeps: 0,
            version: 0,
        }
    }

    pub fn sweeps(&self) -> u64 {
        self.sweeps
    }

    /// Fuses observations, deletes surfels with repeated free-space
    /// violations, inserts new surfels, refreshes the affected
    /// neighbourhoods and labels the new surfels.
    pub fn apply<R: Rng + ?Sized>(&mut self, update: FrameUpdate, rng: &mut R) -> UpdateSummary {
        let mut summary = UpdateSummary::default();
        for (id, obs) in &update.associations {
            if let Some(s) = self.map.get_mut(*id) {
                s.observe(obs);
                summary.fused += 1;
            }
        }
        let limit = self.config.pipeline.deletion_violations;
        for id in &update.free_space {
            let Some(s) = self.map.get_mut(*id) else { continue };
            s.free_space_violations += 1;
            if s.free_space_violations >= limit {
                let label = s.label;
                self.map.remove(*id);
                self.model.decrement(label);
                self.true_segments.remove(id);
                summary.deleted += 1;
            }
        }
        if summary.deleted > 0 {
            self.graph.purge(&self.map);
        }

        let mut added = Vec::with_capacity(update.seeds.len());
        for (seed, segment) in &update.seeds {
            let id = self.map.insert(&seed.observation, seed.rgb, seed.radius, 0);
            self.grid.insert(id, &seed.observation.point);
            if let Some(g) = segment {
                self.true_segments.insert(id, *g);
            }
            added.push(id);
        }
        summary.added = added.len();

        let mut touched: BTreeSet<SurfelId> = added.iter().copied().collect();
        let existing = self.map.capacity() - added.len();
        let revisits = self.config.pipeline.graph_revisits.min(existing);
        if revisits > 0 {
            for i in sample(rng, existing, revisits) {
                if self.map.get(i as SurfelId).is_some() {
                    touched.insert(i as SurfelId);
                }
            }
        }
        let first: Vec<SurfelId> = touched.iter().copied().collect();
        let sigma_pl = self.config.gibbs.sigma_pl;
        self.graph.update(&self.map, &self.grid, &first, &self.config.graph, sigma_pl);
        // let older surfels see the new ones
        let back: Vec<SurfelId> = added
            .iter()
            .flat_map(|&id| self.graph.neighbors(id).iter().map(|n| n.id))
            .filter(|id| !touched.contains(id))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        self.graph.update(&self.map, &self.grid, &back, &self.config.graph, sigma_pl);

        initialize_labels(&mut self.map, &mut self.model, &self.graph, &added, rng);
        summary
    }

    /// One Gauss–Seidel sweep driven by `rng`.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) -> SweepReport {
        let report = run_sweep(
            &mut self.map,
            &mut self.model,
            &self.graph,
            &self.config.gibbs,
            SweepGroups::ALL,
            self.sweeps,
            rng,
        );
        self.sweeps += 1;
        report
    }

    /// One data-parallel sweep keyed by the run seed.
    pub fn sweep_parallel(&mut self) -> SweepReport {
        let report = run_sweep_parallel(
            &mut self.map,
            &mut self.model,
            &self.graph,
            &self.config.gibbs,
            SweepGroups::ALL,
            self.sweeps,
            self.config.seed,
        );
        self.sweeps += 1;
        report
    }

    pub fn publish(&mut self) -> MapSnapshot {
        self.version += 1;
        publish_estimates(&self.map, self.version, self.config.gibbs.min_samples)
    }
}
