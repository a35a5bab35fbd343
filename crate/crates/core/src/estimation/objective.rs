//! Complete-data statistics of co-evolution trajectories and the expected
//! complete-data log-likelihood as a function of the effect weights.

use crate::ctmp::{Trajectory, VariableId};
use crate::error::Result;
use crate::model::effects::{attribute_features, network_features};
use crate::model::likelihood::check_layout;
use crate::model::{Model, ModelParams, NetworkState, Rates};

/// One observed decision: the effect-change rows of its alternatives, the
/// alternative taken and the sample weight.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRecord {
    /// `n_alternatives × dim` row-major, in the coordinates of the full `β`
    /// vector (network effects first, then attribute effects).
    pub features: Vec<f64>,
    pub chosen: usize,
    pub weight: f64,
}

impl DecisionRecord {
    pub fn n_alternatives(&self, dim: usize) -> usize {
        self.features.len() / dim
    }
}

/// Weighted sufficient statistics pooled over trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct CompleteDataStats {
    pub n_actors: usize,
    pub n_attributes: usize,
    pub k_network: usize,
    pub k_attribute: usize,
    /// Weighted link changes made by each actor.
    pub network_moves: Vec<f64>,
    /// Weighted attribute changes made by each actor (all attributes).
    pub attribute_moves: Vec<f64>,
    /// Weighted observation time `Σ w·t_end`.
    pub exposure: f64,
    pub decisions: Vec<DecisionRecord>,
}

impl CompleteDataStats {
    pub fn new(model: &Model) -> Self {
        let spec = model.spec();
        Self {
            n_actors: spec.n_actors,
            n_attributes: spec.n_attributes(),
            k_network: spec.n_network_effects(),
            k_attribute: spec.n_attribute_effects(),
            network_moves: vec![0.0; spec.n_actors],
            attribute_moves: vec![0.0; spec.n_actors],
            exposure: 0.0,
            decisions: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.k_network + self.k_attribute
    }

    /// Adds the decisions and counts of `traj` with weight `weight`.
    pub fn add_trajectory(&mut self, model: &Model, traj: &Trajectory, weight: f64) -> Result<()> {
        check_layout(model, traj)?;
        if weight == 0.0 {
            return Ok(());
        }
        let spec = model.spec();
        let dim = self.dim();
        let kn = self.k_network;
        let mut state = NetworkState::from_values(spec, &traj.initial_state())?;
        let mut buf = Vec::new();
        self.exposure += weight * traj.t_end();
        for tr in traj.transitions() {
            let var = spec.var_id(tr.var);
            match var {
                VariableId::Link { from: i, to: j } => {
                    self.network_moves[i] += weight;
                    if spec.n_actors > 2 && kn > 0 {
                        network_features(model, &state, i, &mut buf);
                        let mut features = Vec::with_capacity((spec.n_actors - 1) * dim);
                        for row in buf.chunks(kn) {
                            features.extend_from_slice(row);
                            features.extend(std::iter::repeat_n(0.0, dim - kn));
                        }
                        let chosen = if j < i { j } else { j - 1 };
                        self.decisions.push(DecisionRecord { features, chosen, weight });
                    }
                }
                VariableId::Attribute { attr: h, actor: i } => {
                    self.attribute_moves[i] += weight;
                    let moves = attribute_features(model, &state, h, i, &mut buf);
                    let kh = model.attr[h].len();
                    if moves.len() > 1 && kh > 0 {
                        let mut features = vec![0.0; moves.len() * dim];
                        for (a, row) in buf.chunks(kh).enumerate() {
                            for (e, &x) in model.attr[h].iter().zip(row) {
                                features[a * dim + kn + e.beta_index] = x;
                            }
                        }
                        let delta = tr.to - tr.from;
                        let chosen = moves.iter().position(|&d| d == delta).unwrap_or(0);
                        self.decisions.push(DecisionRecord { features, chosen, weight });
                    }
                }
                VariableId::Obs { .. } => {}
            }
            state.set_value(var, tr.to)?;
        }
        Ok(())
    }

    pub fn merge(&mut self, other: CompleteDataStats) {
        for (a, b) in self.network_moves.iter_mut().zip(&other.network_moves) {
            *a += b;
        }
        for (a, b) in self.attribute_moves.iter_mut().zip(&other.attribute_moves) {
            *a += b;
        }
        self.exposure += other.exposure;
        self.decisions.extend(other.decisions);
    }

    /// Rate MLEs `M/T`: shared or per actor. Attribute rates are per
    /// attribute clock, so the exposure is multiplied by `H`.
    pub fn rate_mle(&self, shared: bool, floor: f64) -> (Rates, Rates) {
        let n = self.n_actors as f64;
        let h = self.n_attributes.max(1) as f64;
        let t = self.exposure;
        let f = |x: f64| if t > 0.0 { (x / t).max(floor) } else { floor };
        if shared {
            (
                Rates::Shared(f(self.network_moves.iter().sum::<f64>() / n)),
                Rates::Shared(if self.n_attributes == 0 { 0.0 } else { f(self.attribute_moves.iter().sum::<f64>() / (n * h)) }),
            )
        } else {
            (
                Rates::PerActor(self.network_moves.iter().map(|&m| f(m)).collect()),
                Rates::PerActor(
                    self.attribute_moves
                        .iter()
                        .map(|&m| if self.n_attributes == 0 { 0.0 } else { f(m / h) })
                        .collect(),
                ),
            )
        }
    }

    /// Rate part of the expected log-likelihood: `Σ M ln λ − λ·T` per clock.
    pub fn rate_log_likelihood(&self, params: &ModelParams) -> f64 {
        let mut total = 0.0;
        let h = self.n_attributes as f64;
        for i in 0..self.n_actors {
            let ln = params.lambda_network.get(i);
            total += xlogy(self.network_moves[i], ln) - ln * self.exposure;
            if self.n_attributes > 0 {
                let la = params.lambda_attribute.get(i);
                total += xlogy(self.attribute_moves[i], la) - h * la * self.exposure;
            }
        }
        total
    }

    /// Choice part of the expected log-likelihood and its gradient in `β`.
    pub fn choice_log_likelihood_and_grad(&self, beta: &[f64]) -> (f64, Vec<f64>) {
        expected_complete_loglik_and_grad(beta, &self.decisions, self.dim())
    }

    /// Total expected complete-data log-likelihood at `params`.
    pub fn expected_log_likelihood(&self, params: &ModelParams) -> f64 {
        let beta: Vec<f64> = params.beta_network.iter().chain(&params.beta_attribute).copied().collect();
        self.rate_log_likelihood(params) + self.choice_log_likelihood_and_grad(&beta).0
    }
}

fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// `Σ w·ln P(chosen)` over decision records and its gradient, the
/// conditional-logit score `Σ w·(x_chosen − Σ_a p_a x_a)`.
///
/// The survival terms `−q·T` contribute nothing here: an actor's toggle
/// probabilities sum to one, so the total exit rate does not depend on `β`.
pub fn expected_complete_loglik_and_grad(beta: &[f64], records: &[DecisionRecord], dim: usize) -> (f64, Vec<f64>) {
    let mut value = 0.0;
    let mut grad = vec![0.0; dim];
    let mut utils = Vec::new();
    for r in records {
        let n_alt = r.n_alternatives(dim);
        utils.clear();
        utils.extend(r.features.chunks(dim).map(|x| x.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>()));
        let max = utils.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = utils.iter().map(|u| (u - max).exp()).sum();
        let lse = max + z.ln();
        value += r.weight * (utils[r.chosen] - lse);
        let chosen = &r.features[r.chosen * dim..(r.chosen + 1) * dim];
        for (g, x) in grad.iter_mut().zip(chosen) {
            *g += r.weight * x;
        }
        for a in 0..n_alt {
            let p = (utils[a] - lse).exp();
            for (g, x) in grad.iter_mut().zip(&r.features[a * dim..(a + 1) * dim]) {
                *g -= r.weight * p * x;
            }
        }
    }
    (value, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        forward_sample, trajectory_log_likelihood, AttributeDecl, EffectKind, EffectSpec, ModelSpec,
    };
    use crate::rng::stream;
    use rand::Rng;

    pub(crate) fn synthetic_model() -> Model {
        let spec = ModelSpec {
            n_actors: 6,
            attributes: vec![AttributeDecl::new("z", 1, 5)],
            effects: vec![
                EffectSpec::network(EffectKind::Density),
                EffectSpec::network(EffectKind::Reciprocity),
                EffectSpec::network(EffectKind::Similarity),
                EffectSpec::attribute(0, EffectKind::Tendency),
                EffectSpec::attribute(0, EffectKind::Similarity),
            ],
        };
        let mut p = ModelParams::neutral(&spec, 0.5, 0.5);
        p.beta_network = vec![-1.0, 1.5, 1.0];
        p.beta_attribute = vec![0.1, 1.0];
        Model::new(spec, p).unwrap()
    }

    fn stats(m: &Model, reps: usize, t_end: f64) -> (CompleteDataStats, Vec<Trajectory>) {
        let mut s = CompleteDataStats::new(m);
        let mut trajs = Vec::new();
        for r in 0..reps {
            let init = NetworkState::for_spec(m.spec());
            let t = forward_sample(m, &init, t_end, &mut stream(40, r as u64)).unwrap();
            s.add_trajectory(m, &t, 1.0).unwrap();
            trajs.push(t);
        }
        (s, trajs)
    }

    #[test]
    fn matches_trajectory_likelihood() {
        let m = synthetic_model();
        let (s, trajs) = stats(&m, 5, 10.0);
        let direct: f64 = trajs.iter().map(|t| trajectory_log_likelihood(&m, t).unwrap().value).sum();
        assert!((s.expected_log_likelihood(m.params()) - direct).abs() < 1e-8 * direct.abs());
    }

    #[test]
    fn gradient_matches_central_differences() {
        let m = synthetic_model();
        let (s, _) = stats(&m, 3, 10.0);
        let mut rng = stream(41, 0);
        for _ in 0..10 {
            let beta: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let (_, g) = s.choice_log_likelihood_and_grad(&beta);
            for k in 0..5 {
                let h = 1e-5;
                let mut bp = beta.clone();
                bp[k] += h;
                let mut bm = beta.clone();
                bm[k] -= h;
                let fd = (s.choice_log_likelihood_and_grad(&bp).0 - s.choice_log_likelihood_and_grad(&bm).0) / (2.0 * h);
                assert!((fd - g[k]).abs() <= 1e-6 * g[k].abs().max(1.0), "k={k}: {fd} vs {}", g[k]);
            }
        }
    }

    #[test]
    fn zero_beta_score_is_chosen_minus_uniform_mean() {
        let records = vec![DecisionRecord { features: vec![1.0, 0.0, -1.0, 2.0, 0.5, 0.5], chosen: 1, weight: 2.0 }];
        let (v, g) = expected_complete_loglik_and_grad(&[0.0, 0.0], &records, 2);
        assert!((v - 2.0 * (1.0f64 / 3.0).ln()).abs() < 1e-12);
        let mean = [(1.0 - 1.0 + 0.5) / 3.0, (0.0 + 2.0 + 0.5) / 3.0];
        assert!((g[0] - 2.0 * (-1.0 - mean[0])).abs() < 1e-12);
        assert!((g[1] - 2.0 * (2.0 - mean[1])).abs() < 1e-12);
    }

    #[test]
    fn score_at_truth_shrinks_relative_to_data() {
        let m = synthetic_model();
        let beta: Vec<f64> = [-1.0, 1.5, 1.0, 0.1, 1.0].to_vec();
        let mut rel = Vec::new();
        for reps in [10, 160] {
            let (s, _) = stats(&m, reps, 10.0);
            let (_, g) = s.choice_log_likelihood_and_grad(&beta);
            let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            rel.push(norm / s.decisions.len() as f64);
        }
        assert!(rel[1] < rel[0] / 2.0, "{rel:?}");
    }

    #[test]
    fn complete_data_rates_are_count_over_time() {
        let m = synthetic_model();
        let (s, trajs) = stats(&m, 4, 10.0);
        let moves: usize = trajs
            .iter()
            .flat_map(|t| t.transitions())
            .filter(|tr| matches!(t_var(&m, tr.var), VariableId::Link { .. }))
            .count();
        let (ln, _) = s.rate_mle(true, 0.0);
        assert_eq!(ln, Rates::Shared(moves as f64 / 6.0 / 40.0));
    }

    fn t_var(m: &Model, v: usize) -> VariableId {
        m.spec().var_id(v)
    }
}
