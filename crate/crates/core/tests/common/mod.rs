#![allow(dead_code)]

use dirslam::frontend::{DepthNoiseModel, RenderedFrame, SyntheticScene};
use dirslam::gibbs::publish_estimates;
use dirslam::map::{MapSnapshot, SurfelMap};
use dirslam::math::Pose;

/// Floor and two walls meeting at the origin, seen from the positive octant.
pub fn corner_scene(texture: &str, trajectory: &str) -> SyntheticScene {
    let text = format!(
        "intrinsics 525 525 319.5 239.5 640 480\n\
         plane origin=2,2,0 normal=0,0,1 extent=4,4 texture={texture} segment=0\n\
         plane origin=0,2,1.5 normal=1,0,0 extent=4,3 texture={texture} segment=1\n\
         plane origin=2,0,1.5 normal=0,1,0 extent=4,3 texture={texture} segment=2\n\
         {trajectory}\n"
    );
    SyntheticScene::parse(&text).expect("valid scene")
}

/// Surfels on a regular pixel lattice labelled with their true segment,
/// published from their initial observations.
pub fn lattice_snapshot(rendered: &RenderedFrame, step: usize) -> (SurfelMap, MapSnapshot) {
    let mut map = SurfelMap::new();
    let pose = Pose::with_isotropic_covariance(rendered.pose, 1e-6);
    let noise = DepthNoiseModel::default();
    let f = &rendered.frame;
    for v in (step..f.height() - step).step_by(step) {
        for u in (step..f.width() - step).step_by(step) {
            let seg = rendered.segment.get(u, v);
            if seg >= 0 {
                map.add_surfel(f, (u, v), &pose, &noise, 2, seg as u32);
            }
        }
    }
    let snapshot = publish_estimates(&map, 0, 10);
    (map, snapshot)
}
