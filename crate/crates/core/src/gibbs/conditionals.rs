use nalgebra::{Matrix3, Vector3};
use rand::Rng;

use crate::map::{NeighborGraph, Surfel, SurfelId, SurfelMap};
use crate::math::{bingham_to_vmf, try_unit, InformationGaussian3, UnitVec3, VonMisesFisher};
use crate::segmentation::{label_conditional, ClusterId, DirectionalModel, LabelChoice};

use super::GibbsConfig;

/// Same-label neighbours of a surfel.
fn same_label_neighbors<'a>(
    s: &'a Surfel,
    map: &'a SurfelMap,
    graph: &'a NeighborGraph,
) -> impl Iterator<Item = &'a Surfel> + 'a {
    graph
        .neighbors(s.id)
        .iter()
        .filter_map(move |n| map.get(n.id))
        .filter(move |o| o.label == s.label)
}

/// Scatter `S_i = Σ (p_i − p_j)(p_i − p_j)ᵀ / σ²` over same-label neighbours.
pub fn mrf_scatter(s: &Surfel, map: &SurfelMap, graph: &NeighborGraph, sigma_pl: f64) -> Matrix3<f64> {
    let inv = 1.0 / (sigma_pl * sigma_pl);
    same_label_neighbors(s, map, graph)
        .map(|o| {
            let d = s.position - o.position;
            d * d.transpose() * inv
        })
        .sum()
}

/// Full conditional of a surfel normal. The second value is true when the
/// natural parameter vanished and the draw falls back to uniform.
pub fn normal_conditional(
    s: &Surfel,
    map: &SurfelMap,
    graph: &NeighborGraph,
    model: &DirectionalModel,
    config: &GibbsConfig,
) -> (VonMisesFisher, bool) {
    let mut theta = s.observations.normal_sum * config.tau_o;
    if let Some(c) = model.get(s.label) {
        theta += c.mode.into_inner() * c.concentration;
    }
    let scatter = mrf_scatter(s, map, graph, config.sigma_pl);
    let bingham = bingham_to_vmf(&scatter, config.concentration_form);
    if bingham.concentration > 0.0 {
        // orient the axial Bingham mode towards the remaining terms
        let reference = if theta.norm_squared() > 0.0 { theta } else { s.normal.into_inner() };
        let q = bingham.mode.into_inner();
        let q = if q.dot(&reference) < 0.0 { -q } else { q };
        theta += q * bingham.concentration;
    }
    match try_unit(theta) {
        Some(mode) if theta.norm() > 0.0 => (VonMisesFisher::new(mode, theta.norm()), false),
        _ => (VonMisesFisher::uniform(), true),
    }
}

/// Information-form conditional of a surfel position; the flag reports
/// that jitter was added to an ill-conditioned information matrix.
pub fn location_conditional(
    s: &Surfel,
    map: &SurfelMap,
    graph: &NeighborGraph,
    config: &GibbsConfig,
) -> (InformationGaussian3, bool) {
    let mut info = s.observations.location;
    let inv = 1.0 / (config.sigma_pl * config.sigma_pl);
    let ni = s.normal.into_inner();
    let own = ni * ni.transpose();
    for o in same_label_neighbors(s, map, graph) {
        let nj = o.normal.into_inner();
        let iij = (own + nj * nj.transpose()) * inv;
        info.information += iij;
        info.eta += iij * o.position;
    }
    let mut jittered = false;
    if info.condition_number() > config.max_condition {
        info.information += Matrix3::identity() * 1e-9;
        jittered = true;
    }
    (info, jittered)
}

/// Draws a position from its conditional.
pub fn sample_location<R: Rng + ?Sized>(
    s: &Surfel,
    map: &SurfelMap,
    graph: &NeighborGraph,
    config: &GibbsConfig,
    rng: &mut R,
) -> (Vector3<f64>, bool) {
    let (info, jittered) = location_conditional(s, map, graph, config);
    match info.to_moment() {
        Some(g) => (g.sample(rng), jittered),
        None => (s.position, true),
    }
}

pub fn sample_normal<R: Rng + ?Sized>(
    s: &Surfel,
    map: &SurfelMap,
    graph: &NeighborGraph,
    model: &DirectionalModel,
    config: &GibbsConfig,
    rng: &mut R,
) -> (UnitVec3, bool) {
    let (d, degenerate) = normal_conditional(s, map, graph, model, config);
    (d.sample(rng), degenerate)
}

/// Labels of a surfel's neighbours.
pub fn neighbor_labels(id: SurfelId, map: &SurfelMap, graph: &NeighborGraph) -> Vec<ClusterId> {
    graph
        .neighbors(id)
        .iter()
        .filter_map(|n| map.get(n.id))
        .map(|o| o.label)
        .collect()
}

/// Outcome of a label draw: an existing cluster, or a new one with
/// parameters drawn from the posterior given the single normal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LabelDraw {
    Existing(ClusterId),
    New(UnitVec3, f64),
}

pub fn sample_label<R: Rng + ?Sized>(
    s: &Surfel,
    labels: &[ClusterId],
    model: &DirectionalModel,
    own: Option<ClusterId>,
    rng: &mut R,
) -> LabelDraw {
    match label_conditional(&s.normal, labels, model, own).sample(rng) {
        LabelChoice::Existing(id) => LabelDraw::Existing(id),
        LabelChoice::New => {
            let (mu, tau) = model.prior.posterior(&s.normal.into_inner(), 1).sample(rng);
            LabelDraw::New(mu, tau)
        }
    }
}
