//! The `ctsn` command-line tool.
//!
//! Every verb writes into its `--out` directory: the outputs, the resolved
//! configuration (`config.json`) and a `manifest.json` with file digests.
//! Flags override values from an optional `--config` JSON file.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{
    heldout_loglik, hidden_mcem_fit, mcem_fit, mom_fit, EMConfig, HiddenEMConfig, MoMConfig, Snapshots, TrainingData,
};
use crate::hidden::{initial_consistent_trajectory, mh_run, posterior_link_marginals, simulate_events_given, MHConfig, MHState};
use crate::io::{
    preprocess_events, read_events, read_fitted, read_json, read_snapshots, read_trajectory, sidecar_path, write_eval_csv,
    write_events, write_fitted, write_json, write_marginals_csv, write_snapshots, write_trace_csv, write_trajectory,
    FittedParams, Manifest, ModelFile, PreprocessOptions,
};
use crate::model::{forward_sample, Model, NetworkState};
use crate::rng::stream;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ctsn", version, about = "Continuous-time social network dynamics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Forward-sample trajectories and optional snapshots or event streams.
    Simulate(SimulateArgs),
    /// Fit parameters from snapshots (mom, mcem) or an event stream (hidden).
    Learn(LearnArgs),
    /// Posterior link probabilities given an event stream.
    Infer(InferArgs),
    /// Log-likelihood of fully observed test trajectories.
    Eval(EvalArgs),
    /// Clean a raw `time,sender,recipients` log into an event stream.
    PreprocessEvents(PreprocessArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct Common {
    /// JSON file with default values for any flag.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Comma-separated snapshot times.
    #[arg(long, value_delimiter = ',')]
    pub snapshot_times: Option<Vec<f64>>,
    /// Snapshots every `dt` from 0 to `t_end`.
    #[arg(long)]
    pub snapshot_every: Option<f64>,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Also simulate an event stream from the model's observation rates.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub events: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnMode {
    Mom,
    Mcem,
    Hidden,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct LearnArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub mode: Option<LearnMode>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Snapshot JSON files (mom, mcem) or event CSV files (hidden).
    #[arg(long, num_args = 1..)]
    pub data: Option<Vec<PathBuf>>,
    #[serde(default)]
    #[arg(skip)]
    pub em: Option<EMConfig>,
    #[serde(default)]
    #[arg(skip)]
    pub mom: Option<MoMConfig>,
    #[serde(default)]
    #[arg(skip)]
    pub hidden: Option<HiddenEMConfig>,
    /// Samples per E-step, or simulations per moment evaluation.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Outer EM iterations or Newton iterations.
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub burn: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct InferArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Fitted-parameter file overriding the model file's values.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub events: Option<PathBuf>,
    /// Comma-separated grid times.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    /// Evenly spaced grid of this many interior points.
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long)]
    pub burn: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long)]
    pub p0: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Trajectory CSV files (each with its `.meta.json` sidecar).
    #[arg(long, num_args = 0..)]
    pub trajectories: Option<Vec<PathBuf>>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PreprocessArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Largest recipient count kept.
    #[arg(long)]
    pub max_recipients: Option<usize>,
    #[arg(long)]
    pub jitter: Option<f64>,
    /// `start,end` in raw time units.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub window: Option<Vec<f64>>,
    #[arg(long)]
    pub min_sent: Option<usize>,
    #[arg(long)]
    pub min_received: Option<usize>,
    #[arg(long)]
    pub time_unit: Option<String>,
}

/// Outcome of a successful command.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub converged: bool,
    pub outputs: Vec<PathBuf>,
}

/// Fills flags left unset from the `--config` file.
fn merge<T: Serialize + DeserializeOwned>(args: &T, config: Option<&Path>) -> Result<T> {
    let Some(path) = config else {
        return Ok(serde_json::from_value(serde_json::to_value(args)?)?);
    };
    let mut value = serde_json::to_value(args)?;
    let file: serde_json::Value = read_json(path)?;
    let (Some(obj), Some(defaults)) = (value.as_object_mut(), file.as_object()) else {
        return Err(Error::Usage(format!("{}: config must be a JSON object", path.display())));
    };
    for (k, v) in defaults {
        match obj.get(k) {
            Some(serde_json::Value::Null) | None => {
                obj.insert(k.clone(), v.clone());
            }
            _ => {}
        }
    }
    serde_json::from_value(value).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))
}

fn required<T: Clone>(v: &Option<T>, flag: &str) -> Result<T> {
    v.clone().ok_or_else(|| Error::Usage(format!("--{flag} is required")))
}

struct Run {
    dir: PathBuf,
    manifest: Manifest,
    outputs: Vec<PathBuf>,
}

impl Run {
    fn start<T: Serialize>(command: &str, common: &Common, resolved: &T) -> Result<Self> {
        let dir = required(&common.out, "out")?;
        std::fs::create_dir_all(&dir)?;
        let config = serde_json::to_value(resolved)?;
        write_json(&dir.join("config.json"), &config)?;
        Ok(Self { dir, manifest: Manifest::new(command, config), outputs: Vec::new() })
    }

    fn input(&mut self, path: &Path) -> Result<()> {
        self.manifest.add_input(path)
    }

    fn output(&mut self, path: PathBuf) -> Result<()> {
        self.manifest.add_output(&self.dir, &path)?;
        self.outputs.push(path);
        Ok(())
    }

    fn finish(self, converged: bool) -> Result<Outcome> {
        self.manifest.write(&self.dir.join("manifest.json"))?;
        Ok(Outcome { converged, outputs: self.outputs })
    }
}

pub fn simulate(args: &SimulateArgs) -> Result<Outcome> {
    let mut a = merge(args, args.common.config.as_deref())?;
    a.common.out = args.common.out.clone();
    a.common.seed = Some(a.common.seed.unwrap_or(0));
    let model_path = required(&a.model, "model")?;
    let t_end = required(&a.t_end, "t-end")?;
    let file = ModelFile::read(&model_path)?;
    let model = file.model()?;
    let initial = file.initial_state()?;
    let replicates = a.replicates.unwrap_or(1);
    let times: Option<Vec<f64>> = match (&a.snapshot_times, a.snapshot_every) {
        (Some(t), _) => Some(t.clone()),
        (None, Some(dt)) if dt > 0.0 => {
            let n = (t_end / dt + 1e-9).floor() as usize;
            Some((0..=n).map(|k| k as f64 * dt).collect())
        }
        (None, Some(dt)) => return Err(Error::Usage(format!("--snapshot-every must be > 0, got {dt}"))),
        _ => None,
    };
    if let Some(t) = &times {
        if t.iter().any(|&x| !(0.0..=t_end).contains(&x)) {
            return Err(Error::Usage("snapshot times must lie in [0, t_end]".into()));
        }
    }
    let with_events = a.events.unwrap_or(false);
    let obs = match (with_events, file.observation) {
        (true, None) => return Err(Error::Usage("--events needs \"observation\" rates in the model file".into())),
        (_, o) => o,
    };
    let mut run = Run::start("simulate", &a.common, &a)?;
    run.input(&model_path)?;
    let seed = a.common.seed.unwrap_or(0);
    for r in 0..replicates {
        let suffix = if replicates == 1 { String::new() } else { format!("_{r:03}") };
        let mut rng = stream(seed, r as u64);
        let traj = forward_sample(&model, &initial, t_end, &mut rng)?;
        let p = run.dir.join(format!("trajectory{suffix}.csv"));
        write_trajectory(&p, &traj, &file.time_unit)?;
        run.output(p.clone())?;
        run.output(sidecar_path(&p))?;
        if let Some(times) = &times {
            let states = times
                .iter()
                .map(|&t| NetworkState::from_values(model.spec(), &traj.state_at(t)))
                .collect::<Result<Vec<_>>>()?;
            let s = Snapshots::new(times.clone(), states).map_err(|e| Error::Usage(e.to_string()))?;
            let p = run.dir.join(format!("snapshots{suffix}.json"));
            write_snapshots(&p, &s, &file.time_unit)?;
            run.output(p)?;
        }
        if with_events {
            let ev = simulate_events_given(&traj, model.n_actors(), &obs.expect("checked"), &mut rng)?;
            let p = run.dir.join(format!("events{suffix}.csv"));
            write_events(&p, &ev, &file.time_unit, &[])?;
            run.output(p.clone())?;
            run.output(sidecar_path(&p))?;
        }
    }
    run.finish(true)
}

fn check_unit(path: &Path, found: &str, expected: &str) -> Result<()> {
    if found != expected {
        return Err(Error::Usage(format!("{}: time unit {found:?} but the model uses {expected:?}", path.display())));
    }
    Ok(())
}

pub fn learn(args: &LearnArgs) -> Result<Outcome> {
    let mut a = merge(args, args.common.config.as_deref())?;
    a.common.out = args.common.out.clone();
    a.common.seed = Some(a.common.seed.unwrap_or(0));
    let seed = a.common.seed.unwrap_or(0);
    let mode = required(&a.mode, "mode")?;
    let model_path = required(&a.model, "model")?;
    let data = required(&a.data, "data")?;
    if data.is_empty() {
        return Err(Error::Usage("--data needs at least one file".into()));
    }
    let is_events = |p: &PathBuf| p.extension().is_some_and(|e| e == "csv");
    match mode {
        LearnMode::Hidden if !data.iter().all(is_events) => {
            return Err(Error::Usage("hidden mode needs event CSV files".into()))
        }
        LearnMode::Mom | LearnMode::Mcem if data.iter().any(is_events) => {
            return Err(Error::Usage(format!("{mode:?} mode needs snapshot JSON files").to_lowercase()))
        }
        _ => {}
    }
    let file = ModelFile::read(&model_path)?;
    let spec = file.spec();

    let mut em = a.em.unwrap_or_default();
    let mut mom = a.mom.unwrap_or_default();
    let mut hid = a.hidden.unwrap_or_default();
    em.seed = seed;
    mom.seed = seed;
    hid.seed = seed;
    em.shared_rates = file.shared_rates;
    if let Some(s) = a.samples {
        em.samples_per_iter = s;
        mom.simulations = s;
        hid.mh.n_samples = s;
    }
    if let Some(m) = a.max_iters {
        em.max_outer_iters = m;
        mom.max_iters = m;
        hid.max_outer_iters = m;
    }
    if let Some(k) = a.kappa {
        em.kappa = k;
    }
    if let Some(t) = a.tol {
        em.tol = t;
        mom.tol = t;
        hid.tol = t;
    }
    if let Some(b) = a.burn {
        hid.mh.n_burn = b;
    }
    if let Some(t) = a.thin {
        hid.mh.thin = t;
    }
    match mode {
        LearnMode::Mom => {
            mom.validate().map_err(|e| Error::Usage(e.to_string()))?;
            a.mom = Some(mom);
        }
        LearnMode::Mcem => {
            em.validate().map_err(|e| Error::Usage(e.to_string()))?;
            a.em = Some(em);
        }
        LearnMode::Hidden => {
            hid.mh.validate().map_err(|e| Error::Usage(e.to_string()))?;
            a.hidden = Some(hid);
        }
    }

    let mut run = Run::start("learn", &a.common, &a)?;
    run.input(&model_path)?;
    let (fit, q_obs) = match mode {
        LearnMode::Mom | LearnMode::Mcem => {
            let mut sets = Vec::new();
            for p in &data {
                let (s, unit) = read_snapshots(p, &spec)?;
                check_unit(p, &unit, &file.time_unit)?;
                run.input(p)?;
                sets.push(s);
            }
            if mode == LearnMode::Mom {
                if sets.iter().any(|s| s.len() < 3) {
                    return Err(Error::Usage("mom needs at least 3 snapshots per file".into()));
                }
                (mom_fit(&spec, &sets, None, &mom)?, None)
            } else {
                (mcem_fit(&spec, &TrainingData::Snapshots(sets), None, &em)?, None)
            }
        }
        LearnMode::Hidden => {
            let mut streams = Vec::new();
            for p in &data {
                let (s, meta) = read_events(p)?;
                check_unit(p, &meta.time_unit, &file.time_unit)?;
                if s.n_actors != spec.n_actors {
                    return Err(Error::Usage(format!("{}: {} actors, model has {}", p.display(), s.n_actors, spec.n_actors)));
                }
                run.input(p)?;
                streams.push(s);
            }
            let h = hidden_mcem_fit(&spec, &streams, None, &hid)?;
            (h.fit, Some(h.obs))
        }
    };
    let method = match mode {
        LearnMode::Mom => "mom",
        LearnMode::Mcem => "mcem",
        LearnMode::Hidden => "hidden",
    };
    let fitted = FittedParams::new(method, &file.time_unit, &spec, &fit, q_obs);
    let p = run.dir.join("fitted.json");
    write_fitted(&p, &fitted)?;
    run.output(p)?;
    let p = run.dir.join("trace.csv");
    write_trace_csv(&p, &spec, &fit.trace)?;
    run.output(p)?;
    run.finish(fit.converged)
}

/// Model from the model file, with parameters replaced by a fitted file
/// when one is given.
fn load_model(model_path: &Path, params: Option<&Path>) -> Result<(ModelFile, Model)> {
    let mut file = ModelFile::read(model_path)?;
    if let Some(p) = params {
        let f = read_fitted(p)?;
        file.params = Some(f.params);
        if f.q_obs.is_some() {
            file.observation = f.q_obs;
        }
    }
    let model = file.model()?;
    Ok((file, model))
}

pub fn infer(args: &InferArgs) -> Result<Outcome> {
    let mut a = merge(args, args.common.config.as_deref())?;
    a.common.out = args.common.out.clone();
    a.common.seed = Some(a.common.seed.unwrap_or(0));
    let model_path = required(&a.model, "model")?;
    let events_path = required(&a.events, "events")?;
    let (file, model) = load_model(&model_path, a.params.as_deref())?;
    let obs = file.observation.ok_or_else(|| Error::Usage("no observation rates in the model or params file".into()))?;
    let (events, meta) = read_events(&events_path)?;
    check_unit(&events_path, &meta.time_unit, &file.time_unit)?;
    let grid = match (&a.grid, a.grid_points) {
        (Some(g), _) => g.clone(),
        (None, Some(n)) if n > 0 => (0..n).map(|k| (k as f64 + 0.5) * events.t_end / n as f64).collect(),
        _ => return Err(Error::Usage("--grid or --grid-points is required".into())),
    };
    if let Some(t) = grid.iter().find(|&&t| !(0.0..=events.t_end).contains(&t)) {
        return Err(Error::InvalidArgument(format!("grid time {t} outside [0, {}]", events.t_end)));
    }
    let d = MHConfig::default();
    let mh = MHConfig {
        p0: a.p0.unwrap_or(d.p0),
        n_burn: a.burn.unwrap_or(d.n_burn),
        n_samples: a.samples.unwrap_or(d.n_samples),
        thin: a.thin.unwrap_or(d.thin),
    };
    mh.validate().map_err(|e| Error::Usage(e.to_string()))?;
    let mut run = Run::start("infer", &a.common, &a)?;
    run.input(&model_path)?;
    if let Some(p) = &a.params {
        run.input(p)?;
    }
    run.input(&events_path)?;
    let start = initial_consistent_trajectory(&model, &events)?;
    let state = MHState::new(&model, &obs, &events, start)?;
    let res = mh_run(state, &model, &obs, &events, &mh, &mut stream(a.common.seed.unwrap_or(0), 0))?;
    let marg = posterior_link_marginals(&res.samples, model.n_actors(), &grid)?;
    let p = run.dir.join("marginals.csv");
    write_marginals_csv(&p, model.n_actors(), &grid, &marg)?;
    run.output(p)?;
    let p = run.dir.join("diagnostics.json");
    write_json(&p, &serde_json::json!({ "acceptance_rate": res.acceptance_rate, "samples": res.samples.len() }))?;
    run.output(p)?;
    run.finish(true)
}

pub fn eval(args: &EvalArgs) -> Result<Outcome> {
    let mut a = merge(args, args.common.config.as_deref())?;
    a.common.out = args.common.out.clone();
    a.common.seed = Some(a.common.seed.unwrap_or(0));
    let model_path = required(&a.model, "model")?;
    let (file, model) = load_model(&model_path, a.params.as_deref())?;
    let paths = a.trajectories.clone().unwrap_or_default();
    let mut run = Run::start("eval", &a.common, &a)?;
    run.input(&model_path)?;
    if let Some(p) = &a.params {
        run.input(p)?;
    }
    let mut trajs = Vec::new();
    for p in &paths {
        let (t, meta) = read_trajectory(p)?;
        check_unit(p, &meta.time_unit, &file.time_unit)?;
        if t.variables() != model.spec().variables().as_slice() {
            return Err(Error::Usage(format!("{}: variables do not match the model", p.display())));
        }
        run.input(p)?;
        trajs.push(t);
    }
    let ll = heldout_loglik(&model, &trajs)?;
    let rows: Vec<_> = paths.iter().map(|p| p.display().to_string()).zip(ll).collect();
    let p = run.dir.join("eval.csv");
    write_eval_csv(&p, &rows)?;
    run.output(p)?;
    run.finish(true)
}

pub fn preprocess(args: &PreprocessArgs) -> Result<Outcome> {
    let mut a = merge(args, args.common.config.as_deref())?;
    a.common.out = args.common.out.clone();
    a.common.seed = Some(a.common.seed.unwrap_or(0));
    let input = required(&a.input, "input")?;
    let d = PreprocessOptions::default();
    let window = match a.window.as_deref() {
        None => None,
        Some([s, e]) => Some((*s, *e)),
        Some(_) => return Err(Error::Usage("--window takes start,end".into())),
    };
    let opts = PreprocessOptions {
        max_recipients: a.max_recipients.unwrap_or(d.max_recipients),
        jitter: a.jitter.unwrap_or(d.jitter),
        window,
        min_sent: a.min_sent,
        min_received: a.min_received,
        seed: a.common.seed.unwrap_or(0),
    };
    let unit = a.time_unit.clone().unwrap_or_else(|| "day".into());
    a.max_recipients = Some(opts.max_recipients);
    a.jitter = Some(opts.jitter);
    a.time_unit = Some(unit.clone());
    let mut run = Run::start("preprocess-events", &a.common, &a)?;
    run.input(&input)?;
    let out = preprocess_events(std::fs::File::open(&input)?, &opts)?;
    let p = run.dir.join("events.csv");
    write_events(&p, &out.stream, &unit, &out.roster)?;
    run.output(p.clone())?;
    run.output(sidecar_path(&p))?;
    let p = run.dir.join("report.json");
    write_json(&p, &out.report)?;
    run.output(p)?;
    let p = run.dir.join("rejects.csv");
    let mut w = csv::Writer::from_path(&p)?;
    w.write_record(["line", "reason", "raw"])?;
    for r in &out.rejects {
        w.write_record([r.line.to_string(), r.reason.clone(), r.raw.clone()])?;
    }
    w.flush()?;
    run.output(p)?;
    let p = run.dir.join("roster.csv");
    let mut w = csv::Writer::from_path(&p)?;
    w.write_record(["index", "actor"])?;
    for (k, name) in out.roster.iter().enumerate() {
        w.write_record([k.to_string(), name.clone()])?;
    }
    w.flush()?;
    run.output(p)?;
    run.finish(true)
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Learn(a) => learn(a),
        Command::Infer(a) => infer(a),
        Command::Eval(a) => eval(a),
        Command::PreprocessEvents(a) => preprocess(a),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(o) if o.converged => EXIT_OK,
        Ok(_) => {
            eprintln!("warning: estimation did not converge; see fitted.json flags");
            EXIT_NOT_CONVERGED
        }
        Err(e @ (Error::Usage(_) | Error::Parse { .. })) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}
