use nalgebra::{Matrix3, Vector3};

use super::{ObservationSums, SampleStats, WorldObservation};
use crate::frontend::{observe_pixel, DepthNoiseModel, Frame};
use crate::math::{Pose, UnitVec3};
use crate::segmentation::ClusterId;

pub type SurfelId = u32;

/// A surface element with its current Gibbs state and accumulated
/// statistics.
#[derive(Clone, Debug)]
pub struct Surfel {
    pub id: SurfelId,
    pub position: Vector3<f64>,
    pub normal: UnitVec3,
    pub label: ClusterId,
    pub intensity: f64,
    pub rgb: [u8; 3],
    pub radius: f64,
    pub observations: ObservationSums,
    pub samples: SampleStats,
    /// Sweeps this surfel has taken part in.
    pub sweeps: u32,
    pub initial_position: Vector3<f64>,
    pub initial_covariance: Matrix3<f64>,
    pub initial_normal: UnitVec3,
    /// Gradient magnitude at the most recent observing pixel.
    pub gradient: f64,
    pub free_space_violations: u32,
    pub alive: bool,
}

impl Surfel {
    pub fn from_observation(id: SurfelId, obs: &WorldObservation, rgb: [u8; 3], radius: f64, label: ClusterId) -> Self {
        let mut observations = ObservationSums::default();
        observations.add(obs);
        let covariance = obs
            .information
            .try_inverse()
            .map(|c| (c + c.transpose()) * 0.5)
            .unwrap_or_else(Matrix3::zeros);
        Self {
            id,
            position: obs.point,
            normal: obs.normal,
            label,
            intensity: obs.intensity,
            rgb,
            radius,
            observations,
            samples: SampleStats::default(),
            sweeps: 0,
            initial_position: obs.point,
            initial_covariance: covariance,
            initial_normal: obs.normal,
            gradient: obs.gradient,
            free_space_violations: 0,
            alive: true,
        }
    }

    pub fn observe(&mut self, obs: &WorldObservation) {
        self.observations.add(obs);
        self.intensity = self.observations.mean_intensity().unwrap_or(obs.intensity);
        self.gradient = obs.gradient;
        self.free_space_violations = 0;
    }
}

/// Symmetrised point-to-plane potential `Ψ^pl` between two surfels.
pub fn mrf_potential(
    pa: &Vector3<f64>,
    na: &UnitVec3,
    za: ClusterId,
    pb: &Vector3<f64>,
    nb: &UnitVec3,
    zb: ClusterId,
    sigma_pl: f64,
) -> f64 {
    if za != zb {
        return 1.0;
    }
    (-planarity_energy(pa, na, pb, nb, sigma_pl)).exp()
}

/// `(‖n_aᵀ(p_b−p_a)‖² + ‖n_bᵀ(p_a−p_b)‖²) / (2σ²)`.
pub fn planarity_energy(pa: &Vector3<f64>, na: &UnitVec3, pb: &Vector3<f64>, nb: &UnitVec3, sigma_pl: f64) -> f64 {
    let d = pb - pa;
    let (ea, eb) = (na.dot(&d), nb.dot(&d));
    (ea * ea + eb * eb) / (2.0 * sigma_pl * sigma_pl)
}

/// Everything needed to create a surfel, measured from one pixel.
#[derive(Clone, Copy, Debug)]
pub struct SurfelSeed {
    pub observation: WorldObservation,
    pub rgb: [u8; 3],
    /// Pixel footprint `√2·z/f` at creation.
    pub radius: f64,
    pub pixel: (usize, usize),
}

impl SurfelSeed {
    pub fn from_pixel(
        frame: &Frame,
        pixel: (usize, usize),
        pose: &Pose,
        noise: &DepthNoiseModel,
        half_window: usize,
    ) -> Option<Self> {
        let obs = observe_pixel(frame, pixel.0, pixel.1, noise, half_window)?;
        let radius = std::f64::consts::SQRT_2 * obs.point.z / frame.intrinsics.mean_focal();
        let rgb = frame
            .rgb
            .as_ref()
            .map(|img| img.get(pixel.0, pixel.1))
            .unwrap_or_else(|| {
                let c = (obs.intensity.clamp(0.0, 1.0) * 255.0).round() as u8;
                [c, c, c]
            });
        Some(Self {
            observation: obs.to_world(pose),
            rgb,
            radius,
            pixel,
        })
    }
}

/// Growing surfel store; ids are indices and never reused.
#[derive(Clone, Debug, Default)]
pub struct SurfelMap {
    surfels: Vec<Surfel>,
    alive: usize,
    /// Keep every post-burn-in sample (test mode).
    pub retain_samples: bool,
}

impl SurfelMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of live surfels.
    pub fn len(&self) -> usize {
        self.alive
    }

    pub fn is_empty(&self) -> bool {
        self.alive == 0
    }

    /// Total ids issued, including deleted surfels.
    pub fn capacity(&self) -> usize {
        self.surfels.len()
    }

    pub fn get(&self, id: SurfelId) -> Option<&Surfel> {
        self.surfels.get(id as usize).filter(|s| s.alive)
    }

    pub fn get_mut(&mut self, id: SurfelId) -> Option<&mut Surfel> {
        self.surfels.get_mut(id as usize).filter(|s| s.alive)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Surfel> {
        self.surfels.iter().filter(|s| s.alive)
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Surfel> {
        self.surfels.iter_mut().filter(|s| s.alive)
    }

    /// All slots including deleted ones, indexed by id.
    pub fn slots(&self) -> &[Surfel] {
        &self.surfels
    }

    pub fn slots_mut(&mut self) -> &mut [Surfel] {
        &mut self.surfels
    }

    pub fn ids(&self) -> Vec<SurfelId> {
        self.iter().map(|s| s.id).collect()
    }

    pub fn insert(&mut self, obs: &WorldObservation, rgb: [u8; 3], radius: f64, label: ClusterId) -> SurfelId {
        let id = self.surfels.len() as SurfelId;
        let mut s = Surfel::from_observation(id, obs, rgb, radius, label);
        if self.retain_samples {
            s.samples = SampleStats::retaining();
        }
        self.surfels.push(s);
        self.alive += 1;
        id
    }

    /// Creates a surfel from pixel `(u, v)` seen from `pose`.
    pub fn add_surfel(
        &mut self,
        frame: &Frame,
        pixel: (usize, usize),
        pose: &Pose,
        noise: &DepthNoiseModel,
        half_window: usize,
        label: ClusterId,
    ) -> Option<SurfelId> {
        let seed = SurfelSeed::from_pixel(frame, pixel, pose, noise, half_window)?;
        Some(self.insert(&seed.observation, seed.rgb, seed.radius, label))
    }

    pub fn remove(&mut self, id: SurfelId) -> bool {
        match self.surfels.get_mut(id as usize) {
            Some(s) if s.alive => {
                s.alive = false;
                self.alive -= 1;
                true
            }
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{Image, Intrinsics};
    use crate::math::Se3;
    use approx::assert_relative_eq;
    use nalgebra::Matrix6;

    fn unit(x: f64, y: f64, z: f64) -> UnitVec3 {
        UnitVec3::new_normalize(Vector3::new(x, y, z))
    }

    #[test]
    fn potential_is_one_across_labels() {
        let p = mrf_potential(&Vector3::zeros(), &unit(0.0, 0.0, 1.0), 0, &Vector3::z(), &unit(1.0, 0.0, 0.0), 1, 0.01);
        assert_eq!(p, 1.0);
    }

    #[test]
    fn potential_of_coplanar_pair_is_one() {
        let n = unit(0.0, 0.0, 1.0);
        let p = mrf_potential(&Vector3::zeros(), &n, 2, &Vector3::new(0.1, -0.05, 0.0), &n, 2, 0.01);
        assert_eq!(p, 1.0);
    }

    #[test]
    fn potential_at_one_sigma_offset() {
        let n = unit(0.0, 0.0, 1.0);
        let s = 0.01;
        let p = mrf_potential(&Vector3::zeros(), &n, 0, &Vector3::new(0.0, 0.0, s), &n, 0, s);
        assert_relative_eq!(p, (-1.0f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn add_surfel_at_image_centre() {
        let k = Intrinsics {
            fx: 525.0,
            fy: 525.0,
            cx: 10.0,
            cy: 8.0,
            width: 21,
            height: 17,
        };
        let frame = Frame::new(0.0, k, Image::filled(21, 17, 0.5), Image::filled(21, 17, 1.0), None);
        let mut map = SurfelMap::new();
        let pose = Pose::new(Se3::identity(), Matrix6::identity() * 1e-6);
        let id = map
            .add_surfel(&frame, (10, 8), &pose, &DepthNoiseModel::default(), 2, 0)
            .unwrap();
        let s = map.get(id).unwrap();
        assert_relative_eq!(s.position, Vector3::new(0.0, 0.0, 1.0), epsilon = 1e-12);
        assert_relative_eq!(s.radius, std::f64::consts::SQRT_2 / 525.0, epsilon = 1e-15);
        assert_relative_eq!(s.normal.into_inner(), -Vector3::z(), epsilon = 1e-9);
        assert_eq!(s.observations.count, 1);
        assert_eq!(map.len(), 1);
    }

    #[test]
    fn invalid_depth_yields_no_surfel() {
        let k = Intrinsics {
            width: 9,
            height: 9,
            ..Intrinsics::vga()
        };
        let frame = Frame::new(0.0, k, Image::filled(9, 9, 0.5), Image::filled(9, 9, 0.0), None);
        let mut map = SurfelMap::new();
        let pose = Pose::new(Se3::identity(), Matrix6::zeros());
        assert!(map
            .add_surfel(&frame, (4, 4), &pose, &DepthNoiseModel::default(), 2, 0)
            .is_none());
        assert!(map.is_empty());
    }

    #[test]
    fn removal_keeps_ids_stable() {
        let mut map = SurfelMap::new();
        let obs = WorldObservation {
            point: Vector3::zeros(),
            information: Matrix3::identity(),
            normal: unit(0.0, 0.0, 1.0),
            intensity: 0.5,
            gradient: 0.0,
        };
        let a = map.insert(&obs, [0; 3], 0.01, 0);
        let b = map.insert(&obs, [0; 3], 0.01, 0);
        assert!(map.remove(a));
        assert!(!map.remove(a));
        assert_eq!(map.len(), 1);
        assert_eq!(map.ids(), vec![b]);
        assert!(map.get(a).is_none());
    }
}
