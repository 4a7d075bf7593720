use rand::Rng;

use super::{sample_categorical, ClusterId, DirectionalModel};
use crate::math::{UnitVec3, VonMisesFisher};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelChoice {
    Existing(ClusterId),
    New,
}

/// Normalised categorical over the existing clusters (id order) followed by
/// a new cluster.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelPosterior {
    pub choices: Vec<LabelChoice>,
    pub probabilities: Vec<f64>,
}

impl LabelPosterior {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> LabelChoice {
        self.choices[sample_categorical(&self.probabilities, rng.random::<f64>())]
    }

    pub fn probability(&self, choice: LabelChoice) -> f64 {
        self.choices
            .iter()
            .position(|c| *c == choice)
            .map(|i| self.probabilities[i])
            .unwrap_or(0.0)
    }
}

/// Log weights of the label conditional. `own` is the surfel's current
/// label, removed from the cluster counts.
pub fn label_log_weights(
    normal: &UnitVec3,
    neighbor_labels: &[ClusterId],
    model: &DirectionalModel,
    own: Option<ClusterId>,
) -> (Vec<LabelChoice>, Vec<f64>) {
    let lambda = model.lambda;
    let degree = neighbor_labels.len() as f64;
    let mut choices = Vec::with_capacity(model.len() + 1);
    let mut logs = Vec::with_capacity(model.len() + 1);
    for (id, c) in model.iter() {
        let count = c.count - usize::from(own == Some(id) && c.count > 0);
        let same = neighbor_labels.iter().filter(|&&l| l == id).count() as f64;
        let log_count = if count == 0 { f64::NEG_INFINITY } else { (count as f64).ln() };
        let lik = VonMisesFisher::new(c.mode, c.concentration).log_pdf(normal);
        choices.push(LabelChoice::Existing(id));
        logs.push(lambda * same - lambda * degree + log_count + lik);
    }
    let log_alpha = if model.alpha > 0.0 { model.alpha.ln() } else { f64::NEG_INFINITY };
    choices.push(LabelChoice::New);
    logs.push(log_alpha + model.prior.log_marginal(normal) - lambda * degree);
    (choices, logs)
}

/// The CRP label conditional with MRF smoothing, normalised in the log
/// domain.
pub fn label_conditional(
    normal: &UnitVec3,
    neighbor_labels: &[ClusterId],
    model: &DirectionalModel,
    own: Option<ClusterId>,
) -> LabelPosterior {
    let (choices, logs) = label_log_weights(normal, neighbor_labels, model, own);
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let probabilities = if m.is_finite() {
        let w: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|x| x / total).collect()
    } else {
        // nothing has support: fall back to opening a new cluster
        let mut p = vec![0.0; choices.len()];
        *p.last_mut().expect("new-cluster entry") = 1.0;
        p
    };
    LabelPosterior {
        choices,
        probabilities,
    }
}
