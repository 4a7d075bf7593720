//! Gibbs sampler over surfel normals, labels, cluster parameters and
//! locations.

mod conditionals;
mod sweep;

use serde::{Deserialize, Serialize};

use crate::math::ConcentrationForm;

pub use conditionals::{
    location_conditional, mrf_scatter, neighbor_labels, normal_conditional, sample_label, sample_location,
    sample_normal, LabelDraw,
};
pub use sweep::{
    initialize_labels, publish_estimates, run_sweep, run_sweep_parallel, SweepGroups, SweepReport, SweepSchedule,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GibbsConfig {
    /// Observation concentration τ_O.
    pub tau_o: f64,
    /// Out-of-plane scale σ_pl (m).
    pub sigma_pl: f64,
    pub concentration_form: ConcentrationForm,
    /// Samples discarded per surfel before statistics accumulate.
    pub burn_in: u32,
    /// Samples required before sample-based estimates are published.
    pub min_samples: u32,
    /// Condition number above which location information gets jitter.
    pub max_condition: f64,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            tau_o: 100.0,
            sigma_pl: 0.01,
            concentration_form: ConcentrationForm::default(),
            burn_in: 5,
            min_samples: 10,
            max_condition: 1e12,
        }
    }
}
