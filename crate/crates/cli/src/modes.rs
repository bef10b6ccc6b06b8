//! The four subcommands. Each returns its artifacts in memory; `main` writes them.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde_json::{json, Value};

use rwdre::check::anchors;
use rwdre::coupling::{build_layout, simulate_replicas, CoupledPath, InitialLaw, Walker};
use rwdre::estimators::{
    burn_in, estimate_diffusion_batched, estimate_occupation, estimate_velocity, estimate_velocity_mart,
};
use rwdre::oracle::{
    build_generators, closeness_checks, contraction_check, decay_profile, density_expansion, diffusion_variational,
    dyson_checks, l2_operator_norm, random_battery, semigroup_bounds_check, spectral_gap, stationary_solve, velocity,
    BoundsConfig, LocalFunction, Stationary, VelocityReport,
};
use rwdre::{CheckRecord, Error, Generators, LatticeTorus, RateSpec};

use crate::config::{build_spec, ConfigError, Experiment, Mode};
use crate::output::{checks_jsonl, float, opt_float, pretty_json, Table, SCHEMA_VERSION};

/// Why a run did not exit cleanly, mapped onto the process exit code.
#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Assumption(String),
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Numerical(_) => 1,
            Failure::Config(_) => 2,
            Failure::Assumption(_) => 3,
        }
    }

    pub fn message(&self) -> String {
        match self {
            Failure::Config(e) => e.to_string(),
            Failure::Assumption(m) => format!("assumption violated: {m}"),
            Failure::Numerical(m) => format!("numerical failure: {m}"),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Failure::Config(ConfigError {
            line: None,
            message: message.into(),
        })
    }

    /// Classifies a library error; `line` anchors geometry and model errors.
    fn from_lib(e: Error, line: Option<usize>) -> Self {
        match e {
            Error::Assumption(_) | Error::Reducible(_) => Failure::Assumption(e.to_string()),
            Error::UnsupportedModel(_)
            | Error::OutOfRange { .. }
            | Error::InvalidRates(_)
            | Error::Geometry(_)
            | Error::StateCap { .. }
            | Error::Precondition(_) => Failure::Config(ConfigError {
                line,
                message: e.to_string(),
            }),
            Error::OutOfHorizon { .. } | Error::InsufficientData(_) | Error::Numerical(_) => {
                Failure::Numerical(e.to_string())
            }
        }
    }
}

type Run<T> = Result<T, Failure>;

/// Everything a subcommand produces.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub files: BTreeMap<String, Vec<u8>>,
    pub checks: Vec<CheckRecord>,
}

impl Artifacts {
    fn table(&mut self, name: &str, table: &Table) {
        self.files.insert(name.to_string(), table.to_bytes());
    }

    fn finish(mut self, mode: Mode, mut summary: Summary) -> Self {
        let failed = self.checks.iter().filter(|c| !c.pass).count();
        summary.insert("schema_version".into(), json!(SCHEMA_VERSION));
        summary.insert("mode".into(), json!(mode.name()));
        summary.insert("checks".into(), json!({ "total": self.checks.len(), "failed": failed }));
        self.files.insert("summary.json".into(), pretty_json(&summary));
        self.files.insert("checks.jsonl".into(), checks_jsonl(&self.checks));
        self
    }

    pub fn first_failure(&self) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| !c.pass)
    }
}

#[derive(Debug, Clone)]
pub struct Options {
    pub seed: u64,
    pub dump_paths: bool,
}

pub fn run(exp: &Experiment, mode: Mode, opts: &Options) -> Run<Artifacts> {
    match mode {
        Mode::Oracle => oracle_mode(exp, opts),
        Mode::Simulate => simulate_mode(exp, opts),
        Mode::Compare => compare_mode(exp, opts),
        Mode::Sweep => sweep_mode(exp, opts),
    }
}

/// Exact quantities shared by `oracle` and `compare`.
struct Exact {
    gens: Generators,
    gamma: f64,
    epsilon: f64,
    stat: Stationary<f64>,
    velocity: VelocityReport<f64>,
}

fn exact(exp: &Experiment, spec: &RateSpec<f64>, torus: &LatticeTorus, order: usize) -> Run<Exact> {
    let lib = |e| Failure::from_lib(e, Some(exp.oracle_side_line));
    let gens = build_generators(&exp.model, spec, torus, exp.state_cap).map_err(lib)?;
    let gamma = spectral_gap(&gens.env).map_err(lib)?.gamma;
    let epsilon = l2_operator_norm(&gens.pert, spec).epsilon;
    if !(epsilon < gamma) {
        return Err(Failure::Assumption(format!(
            "eps < gamma fails for strength {}: eps = {epsilon}, gamma = {gamma}",
            spec.family().strength()
        )));
    }
    let stat = stationary_solve(&gens.ew_eps).map_err(lib)?;
    let velocity = velocity(&gens, spec, gamma, epsilon, order).map_err(lib)?;
    Ok(Exact {
        gens,
        gamma,
        epsilon,
        stat,
        velocity,
    })
}

fn velocity_table(v: &VelocityReport<f64>) -> Table {
    let mut t = Table::new(&["axis", "k", "v_series", "v_exact", "error", "tail_bound"]);
    for axis in 0..v.exact.len() {
        for k in 0..=v.order() {
            t.push(vec![
                axis.to_string(),
                k.to_string(),
                float(v.series[k][axis]),
                float(v.exact[axis]),
                float(v.error(k, axis)),
                float(v.tail_bound(k, axis)),
            ]);
        }
    }
    t
}

fn unit(dim: usize, axis: usize) -> Vec<f64> {
    (0..dim).map(|k| if k == axis { 1.0 } else { 0.0 }).collect()
}

fn oracle_mode(exp: &Experiment, opts: &Options) -> Run<Artifacts> {
    let (art, summary, _) = oracle_artifacts(exp, opts)?;
    Ok(art.finish(Mode::Oracle, summary))
}

type Summary = serde_json::Map<String, Value>;

fn oracle_artifacts(exp: &Experiment, opts: &Options) -> Run<(Artifacts, Summary, Exact)> {
    let lib = |e| Failure::from_lib(e, Some(exp.oracle_side_line));
    let torus = exp.oracle_torus;
    let ex = exact(exp, &exp.spec, &torus, exp.order)?;
    let (g, gamma, eps, tol) = (&ex.gens, ex.gamma, ex.epsilon, exp.tolerance);
    let mu = g.mu();
    let gap = spectral_gap(&g.env).map_err(lib)?;
    let mut battery = random_battery(g.space.len(), exp.functions, opts.seed);
    let mut art = Artifacts::default();

    art.checks.push(l2_operator_norm(&g.pert, &exp.spec).check(tol));
    // the slowest eigenfunction makes the contraction inequality tight
    battery.push(gap.slowest_mode.clone());
    art.checks
        .extend(contraction_check(&g.env, gamma, &battery, &exp.times, tol).map_err(lib)?);
    battery.pop();
    art.checks
        .extend(dyson_checks(&g.ew, &g.pert, gamma, eps, exp.order, &exp.times, &battery, tol).map_err(lib)?);
    let expansion = density_expansion(&g.ew, &g.pert, gamma, eps, exp.order).map_err(lib)?;
    art.checks.extend(expansion.checks(mu, tol));
    art.checks
        .extend(closeness_checks(&ex.stat, mu, gamma, eps, &battery, tol).map_err(lib)?);
    art.checks.extend(ex.velocity.checks(tol, exp.equality_tolerance));
    let bounds = BoundsConfig {
        times: exp.times.clone(),
        slack: tol,
    };
    art.checks
        .extend(semigroup_bounds_check(g, &ex.stat, gamma, eps, &battery, &bounds).map_err(lib)?);

    let dim = torus.dim();
    let mut diffusion = Vec::new();
    for axis in 0..dim {
        match diffusion_variational(&g.space, &g.env, &exp.spec, gamma, &unit(dim, axis)) {
            Ok(var) => {
                let mut c = var.check(tol);
                c.check_id = format!("{}/axis={axis}", c.check_id);
                art.checks.push(c);
                diffusion.push(json!({
                    "axis": axis,
                    "value": var.value,
                    "plugin": var.plugin,
                    "beta_star": var.beta_star,
                    "lower_bound": var.lower_bound,
                }));
            }
            // non-reversible or asymmetric walks have no variational formula
            Err(Error::Precondition(_)) => break,
            Err(e) => return Err(lib(e)),
        }
    }

    let mut expansion_table = Table::new(&["n", "term_norm", "term_bound", "residual", "residual_bound"]);
    for n in 0..expansion.terms.len() {
        expansion_table.push(vec![
            n.to_string(),
            float(mu.norm(&expansion.terms[n])),
            float(expansion.term_bounds[n]),
            float(expansion.residuals[n]),
            float(expansion.residual_bounds[n]),
        ]);
    }
    art.table("expansion.csv", &expansion_table);
    art.table("velocity.csv", &velocity_table(&ex.velocity));

    let profile = decay_profile(
        &g.space,
        &ex.stat.mu_eps,
        &LocalFunction::occupation(dim),
        exp.spec.range(),
    )
    .map_err(lib)?;
    let mut decay = Table::new(&["site", "sup_norm", "value"]);
    for &(site, m, v) in &profile.entries {
        decay.push(vec![site.to_string(), m.to_string(), float(v)]);
    }
    art.table("decay.csv", &decay);
    let fit = profile.fit();

    let mut summary = Summary::new();
    summary.insert("model".into(), json!(exp.model.name()));
    summary.insert("rho".into(), json!(exp.model.rho));
    summary.insert(
        "rates".into(),
        json!({ "family": exp.family, "strength": exp.strength, "range": exp.spec.range() }),
    );
    summary.insert("torus".into(), json!({ "dim": dim, "side": torus.side() }));
    summary.insert("states".into(), json!(g.space.len()));
    summary.insert("gamma".into(), json!(gamma));
    summary.insert("reversible".into(), json!(gap.reversible));
    summary.insert("epsilon".into(), json!(eps));
    summary.insert("epsilon_bound".into(), json!(2.0 * exp.spec.pert_sup_sum()));
    summary.insert("eps_over_gamma".into(), json!(eps / gamma));
    summary.insert("v_exact".into(), json!(ex.velocity.exact));
    summary.insert("v_long_time".into(), json!(ex.velocity.long_time));
    summary.insert("v_mean_drift".into(), json!(ex.velocity.mean_drift));
    summary.insert("v_series".into(), json!(ex.velocity.series));
    summary.insert("density_closeness".into(), json!(mu.centered_norm(&ex.stat.density)));
    summary.insert(
        "decay".into(),
        json!({
            "near_field": profile.near_field,
            "fit_limit": profile.fit_limit(),
            "envelope": profile.envelope(),
            "monotone": profile.envelope_is_monotone(),
            "rate": fit.as_ref().map(|f| f.rate()),
            "r2": fit.as_ref().map(|f| f.r2),
        }),
    );
    summary.insert(
        "diffusion".into(),
        if diffusion.is_empty() {
            Value::Null
        } else {
            json!(diffusion)
        },
    );
    Ok((art, summary, ex))
}

fn simulate(exp: &Experiment, spec: &RateSpec<f64>, law: &InitialLaw, seed: u64) -> Run<Vec<CoupledPath>> {
    let lib = |e| Failure::from_lib(e, None);
    let (horizon, replicas) = mc_params(exp)?;
    let layout = build_layout(spec).map_err(lib)?;
    simulate_replicas(&exp.model, spec, &layout, &exp.sim_torus, law, horizon, seed, replicas).map_err(lib)
}

fn mc_params(exp: &Experiment) -> Run<(f64, usize)> {
    match (exp.horizon, exp.replicas) {
        (Some(h), Some(n)) => Ok((h, n)),
        _ => Err(Failure::config("run.horizon and run.replicas are required")),
    }
}

const WALKERS: [(Walker, &str); 2] = [(Walker::Unperturbed, "unperturbed"), (Walker::Perturbed, "perturbed")];

/// Velocity and diffusion estimates for both walkers; `exact` velocities,
/// when known, become agreement checks.
fn mc_tables(
    paths: &[CoupledPath],
    spec: &RateSpec<f64>,
    batches: usize,
    exact: Option<[&[f64]; 2]>,
    art: &mut Artifacts,
) -> Run<Vec<Value>> {
    let lib = |e| Failure::from_lib(e, None);
    let mut mc = Table::new(&["walker", "estimator", "axis", "estimate", "std_error", "exact"]);
    let mut diff = Table::new(&["walker", "i", "j", "estimate", "std_error"]);
    let mut summary = Vec::new();
    for (w, (which, name)) in WALKERS.into_iter().enumerate() {
        let plain = estimate_velocity(paths, which).map_err(lib)?;
        let mart = estimate_velocity_mart(paths, spec, which).map_err(lib)?;
        let ex = exact.map(|e| e[w]);
        for (label, r) in [("displacement", &plain), ("martingale", &mart.report)] {
            for axis in 0..r.estimate.len() {
                let truth = ex.map(|e| e[axis]);
                mc.push(vec![
                    name.into(),
                    label.into(),
                    axis.to_string(),
                    float(r.estimate[axis]),
                    float(r.std_error[axis]),
                    opt_float(truth),
                ]);
                if let Some(truth) = truth {
                    art.checks.push(CheckRecord::equal(
                        format!("mc-velocity/{name}/{label}/axis={axis}"),
                        anchors::MC_AGREEMENT,
                        r.estimate[axis],
                        truth,
                        3.0 * r.std_error[axis],
                    ));
                }
            }
        }
        let d = estimate_diffusion_batched(paths, which, &plain.estimate, batches).map_err(lib)?;
        for i in 0..d.dim {
            for j in 0..d.dim {
                diff.push(vec![
                    name.into(),
                    i.to_string(),
                    j.to_string(),
                    float(d.entry(i, j)),
                    float(d.se(i, j)),
                ]);
            }
        }
        summary.push(json!({
            "walker": name,
            "velocity": plain.estimate,
            "velocity_se": plain.std_error,
            "velocity_martingale": mart.report.estimate,
            "velocity_martingale_se": mart.report.std_error,
            "variance_ratio": mart.variance_ratio,
            "diffusion": d.matrix,
            "diffusion_se": d.std_error,
        }));
    }
    art.table("mc.csv", &mc);
    art.table("diffusion.csv", &diff);
    Ok(summary)
}

/// Fraction of replicas whose walkers have split by time 1, against `c(eps)`.
fn decoupling(paths: &[CoupledPath], spec: &RateSpec<f64>, art: &mut Artifacts) -> Option<Value> {
    let horizon = paths.first()?.horizon;
    if horizon < 1.0 {
        return None;
    }
    let n = paths.len() as f64;
    let split = paths.iter().filter(|p| p.separated_by(1.0)).count() as f64 / n;
    let se = (split * (1.0 - split) / n).sqrt();
    let c = spec.decoupling_rate();
    art.checks.push(CheckRecord::at_most(
        "decoupling",
        anchors::DECOUPLING,
        split,
        c,
        3.0 * se,
    ));
    Some(json!({ "split_by_1": split, "std_error": se, "c_eps": c }))
}

fn dump_paths(paths: &[CoupledPath]) -> Table {
    let mut t = Table::new(&["replica", "time", "x", "x_eps", "env_state"]);
    let coords = |x: &[i64]| x.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ");
    for (r, p) in paths.iter().enumerate() {
        for &time in std::iter::once(&0.0).chain(&p.clock) {
            t.push(vec![
                r.to_string(),
                float(time),
                coords(p.unperturbed.position_at(time)),
                coords(p.perturbed.position_at(time)),
                format!("{:x}", p.env.state_at(time).bits()),
            ]);
        }
    }
    t
}

/// Burn-in rate: configured, else the oracle gap on the simulation torus.
fn gamma_for_burn_in(exp: &Experiment) -> Run<f64> {
    if let Some(g) = exp.gamma {
        return Ok(g);
    }
    let gens = build_generators(&exp.model, &exp.spec, &exp.sim_torus, exp.state_cap).map_err(|_| {
        Failure::config("the simulation torus is too large for the oracle; set run.gamma for the burn-in")
    })?;
    spectral_gap(&gens.env)
        .map(|g| g.gamma)
        .map_err(|e| Failure::from_lib(e, None))
}

fn simulate_mode(exp: &Experiment, opts: &Options) -> Run<Artifacts> {
    let gamma = gamma_for_burn_in(exp)?;
    let paths = simulate(exp, &exp.spec, &InitialLaw::Product, opts.seed)?;
    let mut art = Artifacts::default();
    let walkers = mc_tables(&paths, &exp.spec, exp.batches, None, &mut art)?;
    let dec = decoupling(&paths, &exp.spec, &mut art);
    if opts.dump_paths {
        art.table("paths.csv", &dump_paths(&paths));
    }
    let mut summary = Summary::new();
    summary.insert("walkers".into(), json!(walkers));
    summary.insert("decoupling".into(), json!(dec));
    summary.insert("burn_in".into(), json!(burn_in(gamma)));
    summary.insert("replicas".into(), json!(paths.len()));
    summary.insert("horizon".into(), json!(paths[0].horizon));
    summary.insert(
        "torus".into(),
        json!({ "dim": exp.sim_torus.dim(), "side": exp.sim_torus.side() }),
    );
    Ok(art.finish(Mode::Simulate, summary))
}

fn compare_mode(exp: &Experiment, opts: &Options) -> Run<Artifacts> {
    let (mut art, mut summary, ex) = oracle_artifacts(exp, opts)?;
    let g = &ex.gens;
    let means = |mu: &rwdre::Measure, fs: Vec<_>| fs.iter().map(|f| mu.expect(f)).collect::<Vec<f64>>();
    let v0 = means(g.mu(), g.drift(&exp.spec, false));
    let v_eps = means(&ex.stat.mu_eps, g.drift(&exp.spec, true));
    let law = InitialLaw::Reference(Arc::clone(&g.space));
    let paths = simulate(exp, &exp.spec, &law, opts.seed)?;
    let walkers = mc_tables(&paths, &exp.spec, exp.batches, Some([&v0, &v_eps]), &mut art)?;
    let dec = decoupling(&paths, &exp.spec, &mut art);

    let burn = burn_in(ex.gamma);
    let mut tv = Vec::new();
    for ((which, name), target) in WALKERS.into_iter().zip([g.mu(), &ex.stat.mu_eps]) {
        if burn >= paths[0].horizon {
            break;
        }
        let occ = estimate_occupation(&paths, which, &g.space, burn).map_err(|e| Failure::from_lib(e, None))?;
        let d = occ.total_variation(target);
        art.checks.push(CheckRecord::at_most(
            format!("occupation-tv/{name}"),
            anchors::OCCUPATION_TV,
            d,
            exp.tv_tolerance,
            0.0,
        ));
        tv.push(json!({ "walker": name, "total_variation": d }));
    }

    // the variational value bounds the unperturbed walk's diffusion from below
    let dim = exp.oracle_torus.dim();
    let d = estimate_diffusion_batched(&paths, Walker::Unperturbed, &v0, exp.batches)
        .map_err(|e| Failure::from_lib(e, None))?;
    for axis in 0..dim {
        let Ok(var) = diffusion_variational(&g.space, &g.env, &exp.spec, ex.gamma, &unit(dim, axis)) else {
            break;
        };
        art.checks.push(CheckRecord::at_least(
            format!("mc-diffusion/axis={axis}"),
            anchors::DIFFUSION_VARIATIONAL,
            d.entry(axis, axis),
            var.value,
            3.0 * d.se(axis, axis),
        ));
    }
    if opts.dump_paths {
        art.table("paths.csv", &dump_paths(&paths));
    }
    summary.insert("walkers".into(), json!(walkers));
    summary.insert("v_unperturbed".into(), json!(v0));
    summary.insert("decoupling".into(), json!(dec));
    summary.insert("burn_in".into(), json!(burn));
    summary.insert("occupation".into(), json!(tv));
    summary.insert("replicas".into(), json!(paths.len()));
    summary.insert("horizon".into(), json!(paths[0].horizon));
    Ok(art.finish(Mode::Compare, summary))
}

struct SweepPoint {
    strength: f64,
    epsilon: f64,
    velocity: VelocityReport<f64>,
    mc: Option<(Vec<f64>, Vec<f64>)>,
}

fn sweep_mode(exp: &Experiment, opts: &Options) -> Run<Artifacts> {
    let with_mc = exp.horizon.is_some() && exp.replicas.is_some();
    // independent parameter points; collect keeps the configured order
    let points: Vec<SweepPoint> = exp
        .strengths
        .par_iter()
        .map(|&s| {
            let spec = build_spec(&exp.family, s, exp.oracle_torus.dim()).map_err(|e| Failure::from_lib(e, None))?;
            let ex = exact(exp, &spec, &exp.oracle_torus, exp.order)?;
            // common random numbers across strengths
            let mc = if with_mc {
                let paths = simulate(
                    exp,
                    &spec,
                    &InitialLaw::Reference(Arc::clone(&ex.gens.space)),
                    opts.seed,
                )?;
                let r = estimate_velocity_mart(&paths, &spec, Walker::Perturbed)
                    .map_err(|e| Failure::from_lib(e, None))?
                    .report;
                Some((r.estimate, r.std_error))
            } else {
                None
            };
            Ok(SweepPoint {
                strength: s,
                epsilon: ex.epsilon,
                velocity: ex.velocity,
                mc,
            })
        })
        .collect::<Run<_>>()?;

    let mut art = Artifacts::default();
    let k = exp.order;
    let mut table = Table::new(&[
        "strength",
        "epsilon",
        "axis",
        "v_exact",
        "v_series_k",
        "tail_bound",
        "v_mc",
        "se",
    ]);
    for p in &points {
        for axis in 0..p.velocity.exact.len() {
            table.push(vec![
                float(p.strength),
                float(p.epsilon),
                axis.to_string(),
                float(p.velocity.exact[axis]),
                float(p.velocity.series[k][axis]),
                float(p.velocity.tail_bound(k, axis)),
                opt_float(p.mc.as_ref().map(|m| m.0[axis])),
                opt_float(p.mc.as_ref().map(|m| m.1[axis])),
            ]);
        }
        for mut c in p.velocity.checks(exp.tolerance, exp.equality_tolerance) {
            c.check_id = format!("strength={}/{}", float(p.strength), c.check_id);
            art.checks.push(c);
        }
    }
    art.table("sweep.csv", &table);

    // monotonicity is reported, not asserted
    let mut by_strength: Vec<&SweepPoint> = points.iter().collect();
    by_strength.sort_by(|a, b| a.strength.total_cmp(&b.strength));
    let speed = |p: &SweepPoint| p.velocity.exact.iter().map(|v| v * v).sum::<f64>().sqrt();
    let monotone = by_strength.windows(2).all(|w| speed(w[1]) >= speed(w[0]));
    let mut summary = Summary::new();
    summary.insert(
        "rates".into(),
        json!({ "family": exp.family, "strengths": exp.strengths }),
    );
    summary.insert("order".into(), json!(k));
    summary.insert("speed_monotone".into(), json!(monotone));
    summary.insert("monte_carlo".into(), json!(with_mc));
    Ok(art.finish(Mode::Sweep, summary))
}
