use rand::Rng;

use super::cache::ChoiceCache;
use super::params::Model;
use super::state::NetworkState;
use crate::ctmp::sampling::sample_exponential;
use crate::ctmp::{Trajectory, VariableId};
use crate::error::{Error, Result};

/// A forward-sampled trajectory with the log-density accumulated while it
/// was generated.
#[derive(Debug, Clone)]
pub struct SimulationTrace {
    pub trajectory: Trajectory,
    pub log_density: f64,
}

/// Decision clock of one actor: network (`attr == None`) or one attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Clock {
    pub actor: usize,
    pub attr: Option<usize>,
}

/// All decision clocks with their rates, in variable-layout order.
pub(crate) fn clocks(model: &Model) -> Vec<(Clock, f64)> {
    let n = model.n_actors();
    let mut out: Vec<_> = (0..n).map(|i| (Clock { actor: i, attr: None }, model.lambda_network(i))).collect();
    for h in 0..model.n_attributes() {
        out.extend((0..n).map(|i| (Clock { actor: i, attr: Some(h) }, model.lambda_attribute(i))));
    }
    out
}

/// Index drawn proportionally to `weights` using `u ∈ [0,1)`.
pub(crate) fn pick_weighted(weights: impl IntoIterator<Item = f64>, total: f64, u: f64) -> usize {
    let target = u * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (k, w) in weights.into_iter().enumerate() {
        if w > 0.0 {
            last_positive = k;
            acc += w;
            if target < acc {
                return k;
            }
        }
    }
    last_positive
}

/// Draws the move made by `clock` and returns the changed variable, its new
/// value and the move's choice probability.
pub(crate) fn draw_move<R: Rng + ?Sized>(
    model: &Model,
    state: &NetworkState,
    cache: &mut ChoiceCache,
    clock: Clock,
    rng: &mut R,
) -> (VariableId, i32, f64) {
    let i = clock.actor;
    match clock.attr {
        None => {
            let probs = cache.network(model, state, i);
            let j = pick_weighted(probs.iter().copied(), 1.0, rng.gen::<f64>());
            let p = probs[j];
            let to = if state.tie(i, j) { 0 } else { 1 };
            (VariableId::Link { from: i, to: j }, to, p)
        }
        Some(h) => {
            let mv = cache.attribute(model, state, h, i);
            let up = rng.gen::<f64>() * (mv.up + mv.down) >= mv.down;
            let (delta, p) = if up { (1, mv.up) } else { (-1, mv.down) };
            (VariableId::Attribute { attr: h, actor: i }, state.attr(h, i) + delta, p)
        }
    }
}

/// Samples a trajectory of the co-evolution process on `[0, t_end]`.
pub fn forward_sample<R: Rng + ?Sized>(
    model: &Model,
    initial: &NetworkState,
    t_end: f64,
    rng: &mut R,
) -> Result<Trajectory> {
    forward_sample_traced(model, initial, t_end, rng).map(|t| t.trajectory)
}

/// [`forward_sample`] that also returns the accumulated log-density
/// `Σ ln(λ·P(move)) − Λ·t_end`.
pub fn forward_sample_traced<R: Rng + ?Sized>(
    model: &Model,
    initial: &NetworkState,
    t_end: f64,
    rng: &mut R,
) -> Result<SimulationTrace> {
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::InvalidArgument(format!("t_end must be finite and >= 0, got {t_end}")));
    }
    let spec = model.spec();
    let mut state = initial.clone();
    let mut builder = Trajectory::builder(spec.variables(), spec.spaces(), state.values(spec))?;
    let clocks = clocks(model);
    let total: f64 = clocks.iter().map(|c| c.1).sum();
    let mut cache = ChoiceCache::new(model);
    let mut log_density = -total * t_end;
    let mut t = 0.0;
    if total > 0.0 {
        loop {
            t += sample_exponential(total, rng)?;
            if t >= t_end {
                break;
            }
            if t <= builder.last_time() {
                // consecutive draws can collide once t is large relative to Δt
                t = builder.last_time().next_up();
                if t >= t_end {
                    break;
                }
            }
            let k = pick_weighted(clocks.iter().map(|c| c.1), total, rng.gen::<f64>());
            let (clock, rate) = clocks[k];
            let (var, to, p) = draw_move(model, &state, &mut cache, clock, rng);
            log_density += (rate * p).ln();
            state.set_value(var, to)?;
            builder.push(t, spec.var_index(var).expect("model variable"), to)?;
            cache.invalidate(model, &state, var);
        }
    }
    Ok(SimulationTrace { trajectory: builder.finish(t_end)?, log_density })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctmp::expm::exact_transition_kernel;
    use crate::diagnostics::{ks_critical_one_sample, ks_one_sample};
    use crate::model::joint::build_joint_generator;
    use crate::model::spec::{AttributeDecl, EffectKind, EffectSpec, ModelSpec};
    use crate::model::ModelParams;
    use crate::rng::{seeded, stream};

    fn density_model(n: usize, beta: f64, lambda: f64) -> Model {
        let spec = ModelSpec {
            n_actors: n,
            attributes: vec![],
            effects: vec![EffectSpec::network(EffectKind::Density)],
        };
        let mut p = ModelParams::neutral(&spec, lambda, 0.0);
        p.beta_network = vec![beta];
        Model::new(spec, p).unwrap()
    }

    #[test]
    fn zero_rates_never_move() {
        let spec = ModelSpec {
            n_actors: 3,
            attributes: vec![AttributeDecl::new("z", 1, 3)],
            effects: vec![EffectSpec::network(EffectKind::Density), EffectSpec::attribute(0, EffectKind::Tendency)],
        };
        let m = Model::new(spec.clone(), ModelParams::neutral(&spec, 0.0, 0.0)).unwrap();
        let s = NetworkState::for_spec(&spec);
        let tr = forward_sample_traced(&m, &s, 10.0, &mut seeded(1)).unwrap();
        assert!(tr.trajectory.transitions().is_empty());
        assert_eq!(tr.log_density, 0.0);
    }

    #[test]
    fn zero_horizon_keeps_initial_state() {
        let m = density_model(3, -1.0, 1.0);
        let s = NetworkState::for_spec(m.spec());
        let t = forward_sample(&m, &s, 0.0, &mut seeded(1)).unwrap();
        assert!(t.transitions().is_empty());
        assert_eq!(t.t_end(), 0.0);
    }

    #[test]
    fn per_actor_counts_are_poisson() {
        let (lambda, t_end, reps) = (0.7, 5.0, 10_000);
        let m = density_model(2, -1.0, lambda);
        let s = NetworkState::for_spec(m.spec());
        let mut counts = [0usize; 2];
        for r in 0..reps {
            let t = forward_sample(&m, &s, t_end, &mut stream(3, r)).unwrap();
            for tr in t.transitions() {
                counts[tr.var] += 1;
            }
        }
        let mean = lambda * t_end;
        let sd = (mean / reps as f64).sqrt();
        for c in counts {
            let avg = c as f64 / reps as f64;
            assert!((avg - mean).abs() < 3.0 * sd, "{avg} vs {mean}");
        }
    }

    #[test]
    fn two_actor_occupancy_matches_kernel() {
        let spec = ModelSpec {
            n_actors: 2,
            attributes: vec![],
            effects: vec![EffectSpec::network(EffectKind::Density), EffectSpec::network(EffectKind::Reciprocity)],
        };
        let mut p = ModelParams::neutral(&spec, 0.0, 0.0);
        p.lambda_network = crate::model::Rates::PerActor(vec![0.8, 1.3]);
        p.beta_network = vec![-1.0, 2.0];
        let m = Model::new(spec, p).unwrap();
        let s = NetworkState::for_spec(m.spec());
        let (space, gen) = build_joint_generator(&m, &m.spec().variables(), &s, 4096).unwrap();
        let kernel = exact_transition_kernel(&gen, 1.0);
        let start = space.index_of(&s);
        let reps = 100_000;
        let mut occ = vec![0usize; space.len()];
        for r in 0..reps {
            let t = forward_sample(&m, &s, 1.0, &mut stream(4, r)).unwrap();
            occ[space.index_of_values(&t.final_state())] += 1;
        }
        for x in 0..space.len() {
            let emp = occ[x] as f64 / reps as f64;
            assert!((emp - kernel[(start, x)]).abs() < 0.01, "state {x}: {emp} vs {}", kernel[(start, x)]);
        }
    }

    #[test]
    fn holding_times_are_exponential_in_total_rate() {
        let spec = ModelSpec {
            n_actors: 4,
            attributes: vec![AttributeDecl::new("z", 1, 5)],
            effects: vec![
                EffectSpec::network(EffectKind::Density),
                EffectSpec::network(EffectKind::Similarity),
                EffectSpec::attribute(0, EffectKind::Tendency),
            ],
        };
        let mut p = ModelParams::neutral(&spec, 0.5, 0.3);
        p.beta_network = vec![-1.0, 1.0];
        p.beta_attribute = vec![0.4];
        let m = Model::new(spec, p).unwrap();
        let s = NetworkState::for_spec(m.spec());
        let total = m.total_rate();
        let mut holds = Vec::new();
        let mut r = 0;
        while holds.len() < 10_000 {
            let tr = forward_sample(&m, &s, 50.0, &mut stream(5, r)).unwrap();
            let mut last = 0.0;
            for x in tr.transitions() {
                holds.push(x.time - last);
                last = x.time;
            }
            r += 1;
        }
        holds.truncate(10_000);
        let d = ks_one_sample(&holds, |x| 1.0 - (-total * x).exp());
        assert!(d < ks_critical_one_sample(holds.len(), 0.01), "D = {d}");
    }

    #[test]
    fn attributes_stay_in_range() {
        let spec = ModelSpec {
            n_actors: 5,
            attributes: vec![AttributeDecl::new("z", 1, 3)],
            effects: vec![EffectSpec::network(EffectKind::Density), EffectSpec::attribute(0, EffectKind::Tendency)],
        };
        let mut p = ModelParams::neutral(&spec, 0.5, 2.0);
        p.beta_attribute = vec![3.0];
        let m = Model::new(spec, p).unwrap();
        let s = NetworkState::for_spec(m.spec());
        let t = forward_sample(&m, &s, 50.0, &mut seeded(2)).unwrap();
        for tr in t.transitions() {
            if let VariableId::Attribute { .. } = t.variables()[tr.var] {
                assert!((1..=3).contains(&tr.to));
            }
        }
        assert!(t.transitions().len() > 100);
    }

    #[test]
    fn same_seed_same_trajectory() {
        let m = density_model(4, -0.5, 1.0);
        let s = NetworkState::for_spec(m.spec());
        let a = forward_sample(&m, &s, 20.0, &mut seeded(8)).unwrap();
        let b = forward_sample(&m, &s, 20.0, &mut seeded(8)).unwrap();
        assert_eq!(a, b);
    }
}
