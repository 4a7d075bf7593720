use std::collections::{BTreeMap, HashSet};
use std::time::Instant;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::conditionals::{neighbor_labels, sample_label, sample_location, sample_normal, LabelDraw};
use super::GibbsConfig;
use crate::map::{MapSnapshot, NeighborGraph, SurfelEstimate, SurfelId, SurfelMap};
use crate::segmentation::{ClusterId, DirectionalModel};

/// Which variable groups a sweep resamples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SweepGroups {
    pub normals: bool,
    pub labels: bool,
    pub params: bool,
    pub locations: bool,
}

impl SweepGroups {
    pub const ALL: Self = Self {
        normals: true,
        labels: true,
        params: true,
        locations: true,
    };
    pub const NONE: Self = Self {
        normals: false,
        labels: false,
        params: false,
        locations: false,
    };
}

impl Default for SweepGroups {
    fn default() -> Self {
        Self::ALL
    }
}

/// One line of the sweep log.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub sweep: u64,
    pub wall_ms: f64,
    pub clusters: usize,
    pub label_change_rate: f64,
    pub mean_samples: f64,
    pub surfels: usize,
    pub new_clusters: usize,
    pub degenerate_normals: usize,
    pub jittered_locations: usize,
}

/// Sweep bookkeeping: counters per variable group plus burn-in and
/// publishing cadence.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepSchedule {
    pub sweeps: u64,
    pub normal_sweeps: u64,
    pub label_sweeps: u64,
    pub param_sweeps: u64,
    pub location_sweeps: u64,
    pub burn_in: u32,
    pub min_samples: u32,
    /// Publish a snapshot every this many sweeps.
    pub publish_every: u64,
}

impl SweepSchedule {
    pub fn new(config: &GibbsConfig) -> Self {
        Self {
            burn_in: config.burn_in,
            min_samples: config.min_samples,
            publish_every: 1,
            ..Self::default()
        }
    }

    pub fn record(&mut self, groups: SweepGroups) {
        self.sweeps += 1;
        self.normal_sweeps += u64::from(groups.normals);
        self.label_sweeps += u64::from(groups.labels);
        self.param_sweeps += u64::from(groups.params);
        self.location_sweeps += u64::from(groups.locations);
    }

    pub fn publish_due(&self) -> bool {
        self.publish_every > 0 && self.sweeps % self.publish_every == 0
    }
}

/// Gives a label to surfels that have none yet by sequential CRP draws
/// against the current model. Neighbours still waiting for a label are
/// ignored, and the parameters of each chosen cluster are redrawn from its
/// members so far.
pub fn initialize_labels<R: Rng + ?Sized>(
    map: &mut SurfelMap,
    model: &mut DirectionalModel,
    graph: &NeighborGraph,
    ids: &[SurfelId],
    rng: &mut R,
) {
    let pending: HashSet<SurfelId> = ids.iter().copied().collect();
    let mut done: HashSet<SurfelId> = HashSet::with_capacity(ids.len());
    let mut sums: BTreeMap<ClusterId, (Vector3<f64>, usize)> = BTreeMap::new();
    for s in map.iter().filter(|s| !pending.contains(&s.id)) {
        if model.get(s.label).is_some() {
            let e = sums.entry(s.label).or_insert((Vector3::zeros(), 0));
            e.0 += s.normal.into_inner();
            e.1 += 1;
        }
    }
    for &id in ids {
        let Some(s) = map.get(id) else { continue };
        let labels: Vec<ClusterId> = graph
            .neighbors(id)
            .iter()
            .filter(|n| !pending.contains(&n.id) || done.contains(&n.id))
            .filter_map(|n| map.get(n.id))
            .map(|o| o.label)
            .collect();
        let normal = s.normal.into_inner();
        let label = match sample_label(s, &labels, model, None, rng) {
            LabelDraw::Existing(k) => k,
            LabelDraw::New(mu, tau) => model.create(mu, tau),
        };
        model.increment(label);
        let e = sums.entry(label).or_insert((Vector3::zeros(), 0));
        e.0 += normal;
        e.1 += 1;
        let (mu, tau) = model.prior.posterior(&e.0, e.1).sample(rng);
        let c = model.get_mut(label).expect("cluster exists");
        c.mode = mu;
        c.concentration = tau;
        map.get_mut(id).expect("live surfel").label = label;
        done.insert(id);
    }
}

fn cluster_sums(map: &SurfelMap) -> BTreeMap<ClusterId, (Vector3<f64>, usize)> {
    let mut sums: BTreeMap<ClusterId, (Vector3<f64>, usize)> = BTreeMap::new();
    for s in map.iter() {
        let e = sums.entry(s.label).or_insert((Vector3::zeros(), 0));
        e.0 += s.normal.into_inner();
        e.1 += 1;
    }
    sums
}

fn finish_sweep(
    map: &mut SurfelMap,
    model: &mut DirectionalModel,
    config: &GibbsConfig,
    parallel: bool,
    report: &mut SweepReport,
) {
    model.reconcile(map.iter().map(|s| s.label));
    model.collect_garbage();
    let burn_in = config.burn_in;
    let record = |s: &mut crate::map::Surfel| {
        if !s.alive {
            return;
        }
        s.sweeps += 1;
        if s.sweeps > burn_in {
            let (p, n, z) = (s.position, s.normal, s.label);
            s.samples.record(&p, &n, z);
        }
    };
    if parallel {
        map.slots_mut().par_iter_mut().for_each(record);
    } else {
        map.slots_mut().iter_mut().for_each(record);
    }
    let n = map.len();
    report.surfels = n;
    report.clusters = model.len();
    report.mean_samples = if n == 0 {
        0.0
    } else {
        map.iter().map(|s| s.samples.count as f64).sum::<f64>() / n as f64
    };
}

/// One Gauss–Seidel sweep: normals, labels, cluster parameters, then
/// locations, each surfel in id order, all randomness from `rng`.
pub fn run_sweep<R: Rng + ?Sized>(
    map: &mut SurfelMap,
    model: &mut DirectionalModel,
    graph: &NeighborGraph,
    config: &GibbsConfig,
    groups: SweepGroups,
    sweep: u64,
    rng: &mut R,
) -> SweepReport {
    let start = Instant::now();
    let mut report = SweepReport {
        sweep,
        ..SweepReport::default()
    };
    if map.is_empty() {
        return report;
    }
    let ids = map.ids();
    if groups.normals {
        for &id in &ids {
            let s = map.get(id).expect("live surfel");
            let (n, degenerate) = sample_normal(s, map, graph, model, config, rng);
            report.degenerate_normals += usize::from(degenerate);
            map.get_mut(id).expect("live surfel").normal = n;
        }
    }
    if groups.labels {
        let mut changed = 0usize;
        for &id in &ids {
            let s = map.get(id).expect("live surfel");
            let old = s.label;
            let labels = neighbor_labels(id, map, graph);
            let own = model.get(old).map(|_| old);
            let new = match sample_label(s, &labels, model, own, rng) {
                LabelDraw::Existing(k) => k,
                LabelDraw::New(mu, tau) => {
                    report.new_clusters += 1;
                    model.create(mu, tau)
                }
            };
            if new != old {
                changed += 1;
                model.decrement(old);
                model.increment(new);
                map.get_mut(id).expect("live surfel").label = new;
            }
        }
        report.label_change_rate = changed as f64 / ids.len() as f64;
        model.collect_garbage();
    }
    if groups.params {
        let sums = cluster_sums(map);
        for id in model.ids() {
            let (sum, count) = sums.get(&id).copied().unwrap_or((Vector3::zeros(), 0));
            let (mu, tau) = model.prior.posterior(&sum, count).sample(rng);
            let c = model.get_mut(id).expect("cluster exists");
            c.mode = mu;
            c.concentration = tau;
        }
    }
    if groups.locations {
        for &id in &ids {
            let s = map.get(id).expect("live surfel");
            let (p, jittered) = sample_location(s, map, graph, config, rng);
            report.jittered_locations += usize::from(jittered);
            map.get_mut(id).expect("live surfel").position = p;
        }
    }
    finish_sweep(map, model, config, false, &mut report);
    report.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    report
}

/// Independent random stream per (seed, sweep, phase, item).
fn stream(seed: u64, sweep: u64, phase: u64, item: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ sweep.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(phase.wrapping_mul(1 << 40) ^ item);
    rng
}

/// Parallel sweep: each group is a data-parallel phase that reads the state
/// left by the previous phase. Cluster counts are reconciled after the
/// label phase.
pub fn run_sweep_parallel(
    map: &mut SurfelMap,
    model: &mut DirectionalModel,
    graph: &NeighborGraph,
    config: &GibbsConfig,
    groups: SweepGroups,
    sweep: u64,
    seed: u64,
) -> SweepReport {
    let start = Instant::now();
    let mut report = SweepReport {
        sweep,
        ..SweepReport::default()
    };
    if map.is_empty() {
        return report;
    }
    let ids = map.ids();
    if groups.normals {
        let shared: &SurfelMap = map;
        let draws: Vec<_> = ids
            .par_iter()
            .map(|&id| {
                let mut rng = stream(seed, sweep, 0, id as u64);
                sample_normal(shared.get(id).expect("live"), shared, graph, model, config, &mut rng)
            })
            .collect();
        for (&id, (n, degenerate)) in ids.iter().zip(draws) {
            report.degenerate_normals += usize::from(degenerate);
            map.get_mut(id).expect("live").normal = n;
        }
    }
    if groups.labels {
        let shared: &SurfelMap = map;
        let frozen: &DirectionalModel = model;
        let draws: Vec<_> = ids
            .par_iter()
            .map(|&id| {
                let mut rng = stream(seed, sweep, 1, id as u64);
                let s = shared.get(id).expect("live");
                let labels = neighbor_labels(id, shared, graph);
                let own = frozen.get(s.label).map(|_| s.label);
                sample_label(s, &labels, frozen, own, &mut rng)
            })
            .collect();
        let mut changed = 0usize;
        for (&id, draw) in ids.iter().zip(draws) {
            let new = match draw {
                LabelDraw::Existing(k) => k,
                LabelDraw::New(mu, tau) => {
                    report.new_clusters += 1;
                    model.create(mu, tau)
                }
            };
            let s = map.get_mut(id).expect("live");
            if s.label != new {
                changed += 1;
                s.label = new;
            }
        }
        report.label_change_rate = changed as f64 / ids.len() as f64;
        model.reconcile(map.iter().map(|s| s.label));
        model.collect_garbage();
    }
    if groups.params {
        let sums = cluster_sums(map);
        let prior = model.prior;
        let draws: Vec<_> = model
            .ids()
            .into_par_iter()
            .map(|id| {
                let mut rng = stream(seed, sweep, 2, id as u64);
                let (sum, count) = sums.get(&id).copied().unwrap_or((Vector3::zeros(), 0));
                (id, prior.posterior(&sum, count).sample(&mut rng))
            })
            .collect();
        for (id, (mu, tau)) in draws {
            let c = model.get_mut(id).expect("cluster exists");
            c.mode = mu;
            c.concentration = tau;
        }
    }
    if groups.locations {
        let shared: &SurfelMap = map;
        let draws: Vec<_> = ids
            .par_iter()
            .map(|&id| {
                let mut rng = stream(seed, sweep, 3, id as u64);
                sample_location(shared.get(id).expect("live"), shared, graph, config, &mut rng)
            })
            .collect();
        for (&id, (p, jittered)) in ids.iter().zip(draws) {
            report.jittered_locations += usize::from(jittered);
            map.get_mut(id).expect("live").position = p;
        }
    }
    finish_sweep(map, model, config, true, &mut report);
    report.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    report
}

/// Immutable snapshot of sample-based estimates.
pub fn publish_estimates(map: &SurfelMap, version: u64, min_samples: u32) -> MapSnapshot {
    let surfels: Vec<SurfelEstimate> = map
        .slots()
        .par_iter()
        .filter(|s| s.alive)
        .map(|s| SurfelEstimate::from_surfel(s, min_samples))
        .collect();
    MapSnapshot { version, surfels }
}
