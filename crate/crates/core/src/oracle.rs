//! Exact answers for small systems by matrix exponentials over the flattened
//! joint state space. Used to check the samplers.

use nalgebra::{DMatrix, DVector};

use crate::ctmp::{exact_transition_kernel, expm_metzler, VariableId};
use crate::error::{Error, Result};
use crate::hidden::{EventStream, ObservationParams};
use crate::model::{build_joint_generator, JointSpace, Model, NetworkState, DEFAULT_STATE_CAP};

/// `P(X(t) = x | X(0) = x0, X_v(t_end) = value for each observed v)` over
/// the joint space of all model variables.
pub fn point_evidence_posterior(
    model: &Model,
    x0: &NetworkState,
    observed: &[(VariableId, i32)],
    t: f64,
    t_end: f64,
) -> Result<(JointSpace, Vec<f64>)> {
    if !(0.0..=t_end).contains(&t) {
        return Err(Error::InvalidArgument(format!("query time {t} outside [0, {t_end}]")));
    }
    let (space, gen) = build_joint_generator(model, &model.spec().variables(), x0, DEFAULT_STATE_CAP)?;
    let k1 = exact_transition_kernel(&gen, t);
    let k2 = exact_transition_kernel(&gen, t_end - t);
    let start = space.index_of(x0);
    let consistent: Vec<usize> = (0..space.len())
        .filter(|&y| {
            let s = space.state(y);
            observed.iter().all(|&(v, val)| s.value(v) == val)
        })
        .collect();
    let mut post: Vec<f64> = (0..space.len())
        .map(|x| k1[(start, x)] * consistent.iter().map(|&y| k2[(x, y)]).sum::<f64>())
        .collect();
    let z: f64 = post.iter().sum();
    if z <= 0.0 {
        return Err(Error::InvalidEvidence("evidence has probability zero".into()));
    }
    post.iter_mut().for_each(|p| *p /= z);
    Ok((space, post))
}

/// Exact `P(Y_ij(t) = 1 | events)` for a link-only model with independent
/// `Bernoulli(p0)` initial links, by forward–backward over the joint chain.
/// `out[g][p]` for grid time `g` and link index `p`.
pub fn hidden_smoothing_marginals(
    model: &Model,
    obs: &ObservationParams,
    p0: f64,
    events: &EventStream,
    grid: &[f64],
) -> Result<Vec<Vec<f64>>> {
    if model.n_attributes() != 0 {
        return Err(Error::InvalidModel("hidden-model oracle supports link-only models".into()));
    }
    let n = model.n_actors();
    let links = model.spec().variables();
    let base = NetworkState::for_spec(model.spec());
    let (space, gen) = build_joint_generator(model, &links, &base, DEFAULT_STATE_CAP)?;
    let dim = space.len();
    let states: Vec<NetworkState> = (0..dim).map(|x| space.state(x)).collect();
    let event_rate = |s: &NetworkState, i: usize, j: usize| obs.rate(s.tie(i, j) as i32, s.tie(j, i) as i32);
    let mut a = gen.matrix().clone();
    for (x, s) in states.iter().enumerate() {
        let total: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| event_rate(s, i, j))
            .sum();
        a[(x, x)] -= total;
    }

    // Ordered checkpoints: grid times (kind None) and events (kind Some).
    let mut marks: Vec<(f64, Option<(usize, usize)>)> = grid.iter().map(|&t| (t, None)).collect();
    marks.extend(events.events.iter().map(|e| (e.time, Some((e.sender, e.recipient)))));
    for &(t, _) in &marks {
        if !(0.0..=events.t_end).contains(&t) {
            return Err(Error::InvalidArgument(format!("time {t} outside [0, {}]", events.t_end)));
        }
    }
    // grid before an event at the same instant
    marks.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.is_some().cmp(&y.1.is_some())));

    let propagate = |dt: f64| -> DMatrix<f64> { expm_metzler(&a, dt) };
    let emit = |v: &mut DVector<f64>, (i, j): (usize, usize)| {
        for x in 0..dim {
            v[x] *= event_rate(&states[x], i, j);
        }
    };
    let normalize = |v: &mut DVector<f64>| {
        let s = v.sum();
        *v /= s;
    };

    let prior = DVector::from_iterator(
        dim,
        states.iter().map(|s| {
            let k = s.n_ties() as i32;
            p0.powi(k) * (1.0 - p0).powi((n * (n - 1)) as i32 - k)
        }),
    );

    // forward: alpha at each mark, before applying the mark's event
    let mut alphas = Vec::with_capacity(marks.len());
    let mut alpha = prior.transpose();
    let mut t = 0.0;
    for &(tm, ev) in &marks {
        alpha = &alpha * propagate(tm - t);
        let mut col = alpha.transpose();
        normalize(&mut col);
        alphas.push(col.clone());
        if let Some(pair) = ev {
            emit(&mut col, pair);
            normalize(&mut col);
        }
        alpha = col.transpose();
        t = tm;
    }

    // backward: beta at each mark, after the mark's event
    let mut betas = vec![DVector::zeros(dim); marks.len()];
    let mut beta = DVector::from_element(dim, 1.0);
    let mut t = events.t_end;
    for (k, &(tm, ev)) in marks.iter().enumerate().rev() {
        beta = propagate(t - tm) * beta;
        normalize(&mut beta);
        // value at tm just before the event includes the event factor
        let mut with_event = beta.clone();
        if let Some(pair) = ev {
            emit(&mut with_event, pair);
            normalize(&mut with_event);
        }
        betas[k] = with_event.clone();
        beta = with_event;
        t = tm;
    }

    let mut out = Vec::with_capacity(grid.len());
    for (k, &(_, ev)) in marks.iter().enumerate() {
        if ev.is_some() {
            continue;
        }
        let post: Vec<f64> = (0..dim).map(|x| alphas[k][x] * betas[k][x]).collect();
        let z: f64 = post.iter().sum();
        let mut row = vec![0.0; n * (n - 1)];
        for (x, s) in states.iter().enumerate() {
            for i in 0..n {
                for j in (0..n).filter(|&j| j != i) {
                    if s.tie(i, j) {
                        row[crate::hidden::pair_index(n, i, j)] += post[x] / z;
                    }
                }
            }
        }
        out.push((k, row));
    }
    // restore grid order
    let mut by_grid = vec![Vec::new(); grid.len()];
    let mut grid_marks: Vec<(usize, f64)> = grid.iter().copied().enumerate().collect();
    grid_marks.sort_by(|x, y| x.1.total_cmp(&y.1));
    for ((g, _), (_, row)) in grid_marks.into_iter().zip(out) {
        by_grid[g] = row;
    }
    Ok(by_grid)
}
