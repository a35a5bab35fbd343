use super::cache::ChoiceCache;
use super::cim::variable_cim;
use super::params::Model;
use super::state::NetworkState;
use crate::ctmp::{collect_sufficient_stats, log_likelihood, LogLikelihood, Trajectory, VariableId};
use crate::error::{Error, Result};

pub(crate) fn check_layout(model: &Model, traj: &Trajectory) -> Result<()> {
    let spec = model.spec();
    if traj.variables() != spec.variables().as_slice() || traj.spaces() != spec.spaces().as_slice() {
        return Err(Error::InvalidTrajectory("trajectory variables do not match the model".into()));
    }
    Ok(())
}

/// Complete-data log-likelihood of `traj` (starting distribution omitted).
///
/// Exit rates do not depend on the state, so the survival part is
/// `−Λ·t_end`; each transition contributes `ln(λᵢ·P(move))`.
pub fn trajectory_log_likelihood(model: &Model, traj: &Trajectory) -> Result<LogLikelihood> {
    check_layout(model, traj)?;
    let spec = model.spec();
    let mut state = NetworkState::from_values(spec, &traj.initial_state())?;
    let mut cache = ChoiceCache::new(model);
    let mut total = LogLikelihood::new(-model.total_rate() * traj.t_end());
    for tr in traj.transitions() {
        let var = spec.var_id(tr.var);
        let rate = match var {
            VariableId::Link { from, to } => model.lambda_network(from) * cache.network(model, &state, from)[to],
            VariableId::Attribute { attr, actor } => {
                let delta = tr.to - tr.from;
                if delta.abs() != 1 {
                    return Ok(LogLikelihood::impossible());
                }
                model.lambda_attribute(actor) * cache.attribute(model, &state, attr, actor).prob(delta)
            }
            VariableId::Obs { .. } => unreachable!("model layout has no observation variables"),
        };
        if rate <= 0.0 {
            return Ok(LogLikelihood::impossible());
        }
        total.value += rate.ln();
        state.set_value(var, tr.to)?;
        cache.invalidate(model, &state, var);
    }
    Ok(total)
}

/// The same quantity evaluated through per-variable sufficient statistics,
/// using the full state of the other variables as each variable's context.
/// Quadratic in the number of variables; meant for small systems and tests.
pub fn factored_log_likelihood(model: &Model, traj: &Trajectory) -> Result<LogLikelihood> {
    check_layout(model, traj)?;
    let spec = model.spec();
    let stats = collect_sufficient_stats(traj, |v, values| {
        let mut ctx = values.to_vec();
        ctx[v] = spec.spaces()[v].min;
        ctx
    });
    Ok(log_likelihood(&stats, |v, ctx| {
        let state = NetworkState::from_values(spec, ctx).expect("context values in range");
        variable_cim(model, &state, spec.var_id(v)).expect("model CIM")
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::simulate::forward_sample_traced;
    use crate::model::spec::{AttributeDecl, EffectKind, EffectSpec, ModelSpec};
    use crate::model::{ModelParams, Rates};
    use crate::rng::stream;

    fn model() -> Model {
        let spec = ModelSpec {
            n_actors: 4,
            attributes: vec![AttributeDecl::new("z", 1, 4)],
            effects: vec![
                EffectSpec::network(EffectKind::Density),
                EffectSpec::network(EffectKind::Reciprocity),
                EffectSpec::network(EffectKind::Similarity),
                EffectSpec::network(EffectKind::Popularity),
                EffectSpec::attribute(0, EffectKind::Tendency),
                EffectSpec::attribute(0, EffectKind::Similarity),
            ],
        };
        let mut p = ModelParams::neutral(&spec, 0.0, 0.0);
        p.lambda_network = Rates::PerActor(vec![0.5, 0.9, 0.3, 1.1]);
        p.lambda_attribute = Rates::Shared(0.4);
        p.beta_network = vec![-1.0, 1.5, 1.0, 0.2];
        p.beta_attribute = vec![0.1, 1.0];
        Model::new(spec, p).unwrap()
    }

    #[test]
    fn sweep_factored_and_generation_agree() {
        let m = model();
        let s = NetworkState::for_spec(m.spec());
        for r in 0..30 {
            let tr = forward_sample_traced(&m, &s, 6.0, &mut stream(21, r)).unwrap();
            let sweep = trajectory_log_likelihood(&m, &tr.trajectory).unwrap().value;
            let fact = factored_log_likelihood(&m, &tr.trajectory).unwrap().value;
            assert!((sweep - tr.log_density).abs() < 1e-8, "{sweep} vs {}", tr.log_density);
            assert!((fact - tr.log_density).abs() < 1e-8, "{fact} vs {}", tr.log_density);
        }
    }

    #[test]
    fn zero_rate_move_is_impossible() {
        let m = model();
        let spec = m.spec().clone();
        let mut p = m.params().clone();
        p.lambda_attribute = Rates::Shared(0.0);
        let frozen = Model::new(spec.clone(), p).unwrap();
        let s = NetworkState::for_spec(&spec);
        let var = spec.var_index(VariableId::Attribute { attr: 0, actor: 2 }).unwrap();
        let mut b = Trajectory::builder(spec.variables(), spec.spaces(), s.values(&spec)).unwrap();
        b.push(1.0, var, 2).unwrap();
        let traj = b.finish(2.0).unwrap();
        assert!(trajectory_log_likelihood(&frozen, &traj).unwrap().zero_probability);
        assert!(factored_log_likelihood(&frozen, &traj).unwrap().zero_probability);
        assert!(trajectory_log_likelihood(&m, &traj).unwrap().is_finite());
    }
}
