use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{FitResult, IterationRecord, Phase, Snapshots};
use crate::error::{Error, Result};
use crate::model::{effect_value, forward_sample, Model, ModelParams, ModelSpec, NetworkState, Rates};
use crate::rng::substream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MoMConfig {
    /// Forward simulations per moment evaluation.
    pub simulations: usize,
    /// Finite-difference step for the Jacobian, on the `(ln λ, β)` scale.
    pub fd_step: f64,
    pub damping: f64,
    pub max_iters: usize,
    /// Converged once every `|E[D] − d_obs| / sd(D)` is below this.
    pub tol: f64,
    /// Largest change of any coordinate in one step.
    pub max_step: f64,
    pub rate_floor: f64,
    pub seed: u64,
}

impl Default for MoMConfig {
    fn default() -> Self {
        Self {
            simulations: 200,
            fd_step: 0.05,
            damping: 0.5,
            max_iters: 40,
            tol: 0.1,
            max_step: 1.0,
            rate_floor: 1e-3,
            seed: 0,
        }
    }
}

impl MoMConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64| x > 0.0 && x.is_finite();
        if self.simulations < 2
            || self.max_iters == 0
            || !pos(self.fd_step)
            || !pos(self.tol)
            || !pos(self.max_step)
            || !pos(self.rate_floor)
            || !(self.damping > 0.0 && self.damping <= 1.0)
        {
            return Err(Error::InvalidArgument(format!("invalid method-of-moments configuration {self:?}")));
        }
        Ok(())
    }
}

/// Moment statistics of one interval, in parameter order
/// `(λⁿ, λᵃ if the model has attributes, βⁿ…, βᵃ…)`.
///
/// Rate rows count absolute changes. Network effects are evaluated on the
/// later network with the earlier attributes, attribute effects on the
/// earlier network with the later attributes.
pub fn mom_statistics(spec: &ModelSpec, prev: &NetworkState, next: &NetworkState) -> Vec<f64> {
    let n = spec.n_actors;
    let mut links = 0.0;
    let mut attrs = 0.0;
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            if prev.tie(i, j) != next.tie(i, j) {
                links += 1.0;
            }
        }
        for h in 0..spec.n_attributes() {
            attrs += (prev.attr(h, i) - next.attr(h, i)).abs() as f64;
        }
    }
    let mut out = vec![links];
    if spec.n_attributes() > 0 {
        out.push(attrs);
    }
    let mut net_state = next.clone();
    let mut attr_state = prev.clone();
    for h in 0..spec.n_attributes() {
        for i in 0..n {
            net_state.set_attr(h, i, prev.attr(h, i)).expect("attribute in range");
            attr_state.set_attr(h, i, next.attr(h, i)).expect("attribute in range");
        }
    }
    for e in spec.network_effects() {
        out.push((0..n).map(|i| effect_value(e, i, &net_state)).sum());
    }
    for e in spec.attribute_effects() {
        out.push((0..n).map(|i| effect_value(e, i, &attr_state)).sum());
    }
    out
}

fn theta_of(spec: &ModelSpec, p: &ModelParams) -> Vec<f64> {
    let mut t = vec![p.lambda_network.sum(spec.n_actors) / spec.n_actors as f64];
    if spec.n_attributes() > 0 {
        t.push(p.lambda_attribute.sum(spec.n_actors) / spec.n_actors as f64);
    }
    for x in t.iter_mut() {
        *x = x.max(1e-300).ln();
    }
    t.extend(&p.beta_network);
    t.extend(&p.beta_attribute);
    t
}

fn params_of(spec: &ModelSpec, theta: &[f64]) -> ModelParams {
    let mut p = ModelParams::neutral(spec, theta[0].exp(), 0.0);
    let mut k = 1;
    if spec.n_attributes() > 0 {
        p.lambda_attribute = Rates::Shared(theta[1].exp());
        k = 2;
    }
    let kn = spec.n_network_effects();
    p.beta_network = theta[k..k + kn].to_vec();
    p.beta_attribute = theta[k + kn..].to_vec();
    p
}

struct Interval<'a> {
    start: &'a NetworkState,
    dt: f64,
}

/// Mean and standard deviation over simulations of the statistics summed
/// over intervals. Simulation `r` of interval `m` uses the same random stream
/// for every `θ` evaluated with the same `seed`.
fn simulate_moments(spec: &ModelSpec, theta: &[f64], intervals: &[Interval], sims: usize, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    let model = Model::new(spec.clone(), params_of(spec, theta))?;
    let per_sim: Vec<Result<Vec<f64>>> = (0..sims)
        .into_par_iter()
        .map(|r| {
            let mut total = vec![0.0; theta.len()];
            for (m, iv) in intervals.iter().enumerate() {
                let mut rng = substream(seed, m as u64, r as u64);
                let traj = forward_sample(&model, iv.start, iv.dt, &mut rng)?;
                let end = NetworkState::from_values(spec, &traj.final_state())?;
                for (t, s) in total.iter_mut().zip(mom_statistics(spec, iv.start, &end)) {
                    *t += s;
                }
            }
            Ok(total)
        })
        .collect();
    let mut mean = vec![0.0; theta.len()];
    let mut sq = vec![0.0; theta.len()];
    for s in per_sim {
        for (k, x) in s?.into_iter().enumerate() {
            mean[k] += x;
            sq[k] += x * x;
        }
    }
    let n = sims as f64;
    let sd = mean.iter().zip(&sq).map(|(m, s)| ((s - m * m / n) / (n - 1.0)).max(0.0).sqrt()).collect();
    for m in mean.iter_mut() {
        *m /= n;
    }
    Ok((mean, sd))
}

fn t_ratio(mean: &[f64], sd: &[f64], target: &[f64]) -> f64 {
    mean.iter()
        .zip(sd)
        .zip(target)
        .map(|((m, s), d)| {
            let r = (m - d).abs();
            if *s > 0.0 {
                r / s
            } else if r > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

/// Method-of-moments fit by damped stochastic Newton iteration.
///
/// Every interval of every snapshot set is simulated forward from its
/// observed start, and `θ = (ln λ, β)` is moved until the expected
/// statistics match the observed ones. Rates are shared across actors.
pub fn mom_fit(spec: &ModelSpec, data: &[Snapshots], initial: Option<ModelParams>, config: &MoMConfig) -> Result<FitResult> {
    config.validate()?;
    spec.validate()?;
    if data.is_empty() || data.iter().any(|s| s.len() < 3) {
        return Err(Error::InvalidArgument("method of moments needs at least 3 snapshots per sequence".into()));
    }
    let intervals: Vec<Interval> = data
        .iter()
        .flat_map(|s| (1..s.len()).map(move |m| Interval { start: &s.states[m - 1], dt: s.times[m] - s.times[m - 1] }))
        .collect();
    let mut target = vec![0.0; 1 + usize::from(spec.n_attributes() > 0) + spec.n_network_effects() + spec.n_attribute_effects()];
    for s in data {
        for w in s.states.windows(2) {
            for (t, x) in target.iter_mut().zip(mom_statistics(spec, &w[0], &w[1])) {
                *t += x;
            }
        }
    }
    let n_rates = 1 + usize::from(spec.n_attributes() > 0);
    let mut flags = Vec::new();
    if target[..n_rates].iter().any(|&d| d == 0.0) {
        flags.push("low_information: a rate statistic is zero; that rate is driven to its floor".into());
    }

    let total_time: f64 = data.iter().map(|s| s.span()).sum();
    let ln_floor = config.rate_floor.ln();
    let mut theta = match initial {
        Some(p) => theta_of(spec, &p),
        None => {
            let n = spec.n_actors as f64;
            let mut t = vec![(target[0] / (n * total_time)).max(config.rate_floor).ln()];
            if n_rates == 2 {
                let h = spec.n_attributes() as f64;
                t.push((target[1] / (n * h * total_time)).max(config.rate_floor).ln());
            }
            t.resize(target.len(), 0.0);
            t
        }
    };
    let dim = theta.len();
    let mut trace = Vec::new();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut converged = false;
    let mut prev_resid: Option<Vec<f64>> = None;
    let mut damping = 1.0;

    for it in 0..config.max_iters {
        let seed = substream(config.seed, it as u64, 0).gen::<u64>();
        let (mean, sd) = simulate_moments(spec, &theta, &intervals, config.simulations, seed)?;
        let tr = t_ratio(&mean, &sd, &target);
        trace.push(IterationRecord {
            iteration: it,
            phase: Phase::Newton,
            objective: tr,
            ess_min: None,
            ess_mean: None,
            acceptance_rate: None,
            params: params_of(spec, &theta),
            q_obs: None,
        });
        log::info!("mom iteration {it}: max t-ratio {tr:.3}");
        if best.as_ref().map_or(true, |(b, _)| tr < *b) {
            best = Some((tr, theta.clone()));
        }
        if tr < config.tol {
            converged = true;
            break;
        }
        let resid: Vec<f64> = mean.iter().zip(&target).map(|(m, d)| m - d).collect();
        if let Some(prev) = &prev_resid {
            if prev.iter().zip(&resid).any(|(a, b)| a * b < 0.0) {
                damping *= config.damping;
            }
        }
        let mut jac = DMatrix::zeros(dim, dim);
        for p in 0..dim {
            let mut shifted = theta.clone();
            shifted[p] += config.fd_step;
            let (m2, _) = simulate_moments(spec, &shifted, &intervals, config.simulations, seed)?;
            for k in 0..dim {
                jac[(k, p)] = (m2[k] - mean[k]) / config.fd_step;
            }
        }
        let r = DVector::from_vec(resid.clone());
        let newton = jac.clone().lu().solve(&r).filter(|s| s.iter().all(|x| x.is_finite()));
        let step = match newton {
            Some(s) => -s,
            None => {
                // steepest descent on |r|²/2 with exact step length for the linear model
                let g = jac.transpose() * &r;
                let jg = &jac * &g;
                let denom = jg.norm_squared();
                if denom > 0.0 {
                    let len = g.norm_squared() / denom;
                    -g * len
                } else {
                    flags.push(format!("iteration {it}: zero Jacobian, stopping"));
                    break;
                }
            }
        };
        let largest = step.amax();
        let scale = if largest > config.max_step { config.max_step / largest } else { 1.0 };
        for (t, s) in theta.iter_mut().zip(step.iter()) {
            *t += damping * scale * s;
        }
        for t in theta.iter_mut().take(n_rates) {
            *t = t.max(ln_floor);
        }
        prev_resid = Some(resid);
    }
    let (best_tr, best_theta) = best.expect("at least one iteration");
    if !converged {
        flags.push(format!("not_converged: best max t-ratio {best_tr:.3} after {} iterations", config.max_iters));
    }
    Ok(FitResult { params: params_of(spec, &best_theta), converged, trace, flags })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AttributeDecl, EffectKind, EffectSpec};
    use crate::rng::{seeded, stream};
    use proptest::prelude::*;

    fn spec() -> ModelSpec {
        ModelSpec {
            n_actors: 6,
            attributes: vec![AttributeDecl::new("z", 1, 4)],
            effects: vec![
                EffectSpec::network(EffectKind::Density),
                EffectSpec::network(EffectKind::Reciprocity),
                EffectSpec::network_on(EffectKind::Similarity, 0),
                EffectSpec::attribute(0, EffectKind::Tendency),
                EffectSpec::attribute(0, EffectKind::Similarity),
            ],
        }
    }

    fn truth_params(s: &ModelSpec) -> ModelParams {
        let mut p = ModelParams::neutral(s, 0.5, 0.5);
        p.beta_network = vec![-1.0, 1.5, 1.0];
        p.beta_attribute = vec![0.1, 1.0];
        p
    }

    fn simulate_snapshots(model: &Model, m: usize, seed: u64) -> Snapshots {
        let mut rng = seeded(seed);
        let mut state = NetworkState::for_spec(model.spec());
        for i in 0..model.n_actors() {
            state.set_attr(0, i, 1 + (i as i32 % 4)).unwrap();
        }
        let mut times = vec![0.0];
        let mut states = vec![state.clone()];
        for k in 1..m {
            let t = forward_sample(model, &state, 1.0, &mut rng).unwrap();
            state = NetworkState::from_values(model.spec(), &t.final_state()).unwrap();
            times.push(k as f64);
            states.push(state.clone());
        }
        Snapshots::new(times, states).unwrap()
    }

    fn state_from(s: &ModelSpec, ties: &[bool], z: &[i32]) -> NetworkState {
        let mut st = NetworkState::for_spec(s);
        let n = s.n_actors;
        let mut k = 0;
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                st.set_tie(i, j, ties[k]);
                k += 1;
            }
            st.set_attr(0, i, z[i]).unwrap();
        }
        st
    }

    fn permute(s: &ModelSpec, st: &NetworkState, perm: &[usize]) -> NetworkState {
        let mut out = NetworkState::for_spec(s);
        for i in 0..s.n_actors {
            for j in (0..s.n_actors).filter(|&j| j != i) {
                out.set_tie(perm[i], perm[j], st.tie(i, j));
            }
            out.set_attr(0, perm[i], st.attr(0, i)).unwrap();
        }
        out
    }

    #[test]
    fn three_actor_two_flips() {
        let s = ModelSpec { n_actors: 3, attributes: vec![], effects: vec![EffectSpec::network(EffectKind::Density)] };
        let a = NetworkState::for_spec(&s);
        let mut b = a.clone();
        b.set_tie(0, 1, true);
        b.set_tie(2, 0, true);
        let d = mom_statistics(&s, &a, &b);
        assert_eq!(d, vec![2.0, 2.0]);
    }

    proptest! {
        #[test]
        fn identical_snapshots_have_zero_rate_statistics(ties in prop::collection::vec(any::<bool>(), 30), z in prop::collection::vec(1i32..=4, 6)) {
            let s = spec();
            let st = state_from(&s, &ties, &z);
            let d = mom_statistics(&s, &st, &st);
            prop_assert_eq!(d[0], 0.0);
            prop_assert_eq!(d[1], 0.0);
        }

        #[test]
        fn statistics_are_invariant_under_relabeling(
            a in prop::collection::vec(any::<bool>(), 30),
            b in prop::collection::vec(any::<bool>(), 30),
            za in prop::collection::vec(1i32..=4, 6),
            zb in prop::collection::vec(1i32..=4, 6),
            perm in Just((0..6).collect::<Vec<usize>>()).prop_shuffle(),
        ) {
            let s = spec();
            let x = state_from(&s, &a, &za);
            let y = state_from(&s, &b, &zb);
            let d = mom_statistics(&s, &x, &y);
            let dp = mom_statistics(&s, &permute(&s, &x, &perm), &permute(&s, &y, &perm));
            for (u, v) in d.iter().zip(&dp) {
                prop_assert!((u - v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn moments_at_truth_match_observed_within_monte_carlo_error() {
        let s = spec();
        let p = truth_params(&s);
        let model = Model::new(s.clone(), p.clone()).unwrap();
        // d_obs from independent replicates of the same interval scheme
        let base = simulate_snapshots(&model, 6, 1);
        let intervals: Vec<Interval> =
            (1..base.len()).map(|m| Interval { start: &base.states[m - 1], dt: 1.0 }).collect();
        let theta = theta_of(&s, &p);
        let (mean, sd) = simulate_moments(&s, &theta, &intervals, 2000, 9).unwrap();
        let reps = 200;
        let mut avg = vec![0.0; mean.len()];
        for r in 0..reps {
            let mut rng = stream(77, r);
            for iv in &intervals {
                let t = forward_sample(&model, iv.start, 1.0, &mut rng).unwrap();
                let end = NetworkState::from_values(&s, &t.final_state()).unwrap();
                for (a, x) in avg.iter_mut().zip(mom_statistics(&s, iv.start, &end)) {
                    *a += x / reps as f64;
                }
            }
        }
        for k in 0..mean.len() {
            let se = sd[k] * (1.0 / 2000.0 + 1.0 / reps as f64).sqrt();
            assert!((mean[k] - avg[k]).abs() < 4.0 * se + 1e-9, "stat {k}: {} vs {} (se {se})", mean[k], avg[k]);
        }
    }

    #[test]
    fn two_snapshots_are_rejected() {
        let s = spec();
        let model = Model::new(s.clone(), truth_params(&s)).unwrap();
        let data = simulate_snapshots(&model, 2, 3);
        assert!(mom_fit(&s, &[data], None, &MoMConfig::default()).is_err());
    }

    #[test]
    fn identical_snapshots_drive_rates_to_the_floor() {
        let s = spec();
        let st = NetworkState::for_spec(&s);
        let data = Snapshots::new(vec![0.0, 1.0, 2.0], vec![st.clone(), st.clone(), st]).unwrap();
        let cfg = MoMConfig { simulations: 50, max_iters: 15, ..MoMConfig::default() };
        let fit = mom_fit(&s, &[data], None, &cfg).unwrap();
        assert!(fit.flags.iter().any(|f| f.starts_with("low_information")));
        let Rates::Shared(l) = fit.params.lambda_network else { panic!() };
        assert!(l < 0.05, "{l}");
    }

    #[test]
    fn recovers_the_sign_of_density_and_reciprocity() {
        let s = spec();
        let model = Model::new(s.clone(), truth_params(&s)).unwrap();
        let data: Vec<_> = (0..4).map(|k| simulate_snapshots(&model, 8, 100 + k)).collect();
        let cfg = MoMConfig { simulations: 100, max_iters: 25, seed: 4, ..MoMConfig::default() };
        let fit = mom_fit(&s, &data, None, &cfg).unwrap();
        assert!(fit.params.beta_network[0] < 0.0, "{:?}", fit.params);
        assert!(fit.params.beta_network[1] > 0.0, "{:?}", fit.params);
        let Rates::Shared(l) = fit.params.lambda_network else { panic!() };
        assert!((0.2..1.2).contains(&l), "{l}");
    }
}
