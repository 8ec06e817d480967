use mrlab_core::bounds::{
    bound_report, entropy_bound_mab, rate_probe_linear, rate_probe_mab, BoundMode, BoundsConfig, LinearProbe,
};
use mrlab_core::env_model::{build_finite_mab, instance_hash, save_instance, validate};
use mrlab_core::game::{minimax_regret, verify_duality, MinimaxSolution};
use mrlab_core::generator::{random_instance, GenConfig};
use mrlab_core::mc::{parallel_rollouts, rollout_rng, sample_index, McEstimate};
use mrlab_core::policy::{policy_count, simulate_ts};
use mrlab_core::regret::mbr;
use mrlab_core::{Caps, Error, ExactModel, Prior};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::args::{BoundsArgs, Common, GenArgs, MbrArgs, Mode, Probe, SimulateArgs, SweepArgs};
use crate::output::{weights_cell, Artifacts, Cell, Metadata, Table, TOOL, VERSION};
use crate::inputs::{load_instances, parse_priors, parse_range, Named};
use crate::status::{input_error, CliError, CliResult, Status};

/// Tolerance for dominance and weak-duality checks on exact values.
const EXACT_TOL: f64 = 1e-9;

pub struct Ctx<'a> {
    pub common: &'a Common,
    pub command: &'static str,
    pub config: Value,
    pub caps: Caps,
    pub out: Artifacts,
}

impl<'a> Ctx<'a> {
    pub fn new(common: &'a Common, command: &'static str, config: Value) -> CliResult<Self> {
        if !(common.tolerance > 0.0 && common.tolerance < 1.0) {
            return Err(input_error(format!("--tolerance {} is not in (0, 1)", common.tolerance)));
        }
        let mut caps = Caps::default();
        let cap = |v: Option<u64>, d: usize| v.map_or(d, |v| usize::try_from(v).unwrap_or(usize::MAX));
        caps.tree_nodes = cap(common.tree_cap, caps.tree_nodes);
        caps.policies = cap(common.policy_cap, caps.policies);
        caps.lp_policies = cap(common.lp_cap, caps.lp_policies);
        let out = Artifacts::new(&common.out)?;
        Ok(Self {
            common,
            command,
            config,
            caps,
            out,
        })
    }

    fn meta(&self, instances: &[Named], seeds: Vec<u64>) -> Metadata {
        Metadata {
            tool: TOOL,
            version: VERSION,
            command: self.command.to_string(),
            instance_hashes: instances.iter().map(|n| instance_hash(&n.instance)).collect(),
            seeds,
            config: self.config.clone(),
        }
    }

    fn model<'m>(&self, n: &'m Named) -> mrlab_core::Result<ExactModel<'m>> {
        ExactModel::with_caps(&n.instance, self.caps)
    }

    fn rollouts(&self) -> usize {
        usize::try_from(self.common.mc_rollouts).unwrap_or(usize::MAX)
    }
}

fn report(name: &str, e: &Error) -> Status {
    eprintln!("{name}: {e}");
    Status::of(e)
}

pub fn gen(ctx: &mut Ctx<'_>, args: &GenArgs) -> CliResult<Status> {
    if !(0.0..1.0).contains(&args.sparsity) {
        return Err(input_error(format!("--sparsity {} is not in [0, 1)", args.sparsity)));
    }
    let cfg = GenConfig {
        states: parse_range("states", &args.states)?,
        actions: parse_range("actions", &args.actions)?,
        outcomes: parse_range("outcomes", &args.outcomes)?,
        params: parse_range("params", &args.params)?,
        horizon: parse_range("horizon", &args.horizon)?,
        sparsity: args.sparsity,
    };
    let seed = ctx.common.seed;
    let mut named = Vec::with_capacity(args.count);
    let mut table = Table::new(&["index", "file", "instance_hash", "seed", "stream"]);
    for i in 0..args.count {
        let inst = random_instance(&mut rollout_rng(seed, i as u64), &cfg);
        let report = validate(&inst);
        if !report.is_valid() {
            return Err(CliError {
                status: Status::PropertyFailure,
                message: format!("generated instance {i} is invalid: {report}"),
            });
        }
        let file = format!("instance_{i:04}.json");
        let path = ctx.out.path(&file);
        save_instance(&inst, &path)?;
        table.push(vec![i.into(), file.clone().into(), instance_hash(&inst).into(), seed.into(), i.into()]);
        named.push(Named { name: file, instance: inst });
    }
    eprintln!("wrote {} instances to {}", args.count, ctx.common.out.display());
    let meta = ctx.meta(&named, vec![seed]);
    ctx.out
        .table("manifest", &meta, &table, Some(json!({ "generator": cfg })))?;
    Ok(Status::Pass)
}

pub fn verify(ctx: &mut Ctx<'_>) -> CliResult<Status> {
    let insts = load_instances(ctx.common.instance.as_deref())?;
    let tol = ctx.common.tolerance;
    let results: Vec<_> = insts
        .par_iter()
        .map(|n| ctx.model(n).and_then(|m| verify_duality(&m, tol)))
        .collect();
    let mut table = Table::new(&[
        "instance",
        "instance_hash",
        "minimax",
        "worst_case_mbr",
        "gap",
        "tolerance",
        "pass",
        "conclusive",
        "minimax_method",
        "worst_case_method",
        "support_size",
        "least_favorable_prior",
        "worst_case_prior",
        "error",
    ]);
    let mut status = Status::Pass;
    let mut certs = Vec::new();
    for (n, r) in insts.iter().zip(&results) {
        let hash = instance_hash(&n.instance);
        match r {
            Ok(c) => {
                if !c.pass {
                    eprintln!("{}: gap {:e} exceeds {:e} (conclusive: {})", n.name, c.gap, tol, c.conclusive);
                    status = status.max(Status::PropertyFailure);
                }
                table.push(vec![
                    n.name.clone().into(),
                    hash.into(),
                    c.minimax.into(),
                    c.worst_case_mbr.into(),
                    c.gap.into(),
                    c.tolerance.into(),
                    c.pass.into(),
                    c.conclusive.into(),
                    c.minimax_method.to_string().into(),
                    c.worst_case_method.to_string().into(),
                    c.mixed_policy.len().into(),
                    weights_cell(&c.least_favorable_prior),
                    weights_cell(&c.worst_case_prior),
                    Cell::Empty,
                ]);
                certs.push(serde_json::to_value(c).expect("certificate serializes"));
            }
            Err(e) => {
                status = status.max(report(&n.name, e));
                let mut row = vec![n.name.clone().into(), hash.into()];
                row.extend(std::iter::repeat_n(Cell::Empty, 11));
                row.push(e.to_string().into());
                table.push(row);
                certs.push(Value::Null);
            }
        }
    }
    let meta = ctx.meta(&insts, vec![ctx.common.seed]);
    ctx.out
        .table("duality", &meta, &table, Some(json!({ "certificates": certs })))?;
    Ok(status)
}

/// Minimax regret when the instance is within caps, `None` otherwise.
fn feasible_minimax(model: &ExactModel<'_>) -> mrlab_core::Result<Option<MinimaxSolution>> {
    match minimax_regret(model) {
        Ok(s) => Ok(Some(s)),
        Err(Error::CapExceeded { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn bounds(ctx: &mut Ctx<'_>, args: &BoundsArgs) -> CliResult<Status> {
    let insts = load_instances(ctx.common.instance.as_deref())?;
    let seed = ctx.common.seed;
    let mode = match args.mode {
        Mode::Exact => BoundMode::ExactTree,
        Mode::MonteCarlo => BoundMode::MonteCarlo {
            rollouts: ctx.rollouts(),
            seed,
        },
    };
    let cfg = BoundsConfig {
        mode,
        ..BoundsConfig::default()
    };
    let mut table = Table::new(&[
        "instance",
        "prior_index",
        "prior",
        "bound_name",
        "value",
        "dominated_quantity",
        "dominated_value",
        "gap",
        "method",
        "std_error",
        "seed",
        "error",
    ]);
    let mut status = Status::Pass;
    let quantity_method = if args.mode == Mode::Exact { "exact-tree" } else { "monte-carlo" };
    for n in &insts {
        let priors = parse_priors(&ctx.common.prior, n.instance.n_params)?;
        let run = || -> mrlab_core::Result<_> {
            let model = ctx.model(n)?;
            let minimax = feasible_minimax(&model)?.map(|s| s.game.upper);
            let reports = priors
                .iter()
                .map(|p| bound_report(&model, p, &cfg))
                .collect::<mrlab_core::Result<Vec<_>>>()?;
            Ok((minimax, reports))
        };
        let (minimax, reports) = match run() {
            Ok(v) => v,
            Err(e) => {
                status = status.max(report(&n.name, &e));
                let mut row = vec![n.name.clone().into()];
                row.extend(std::iter::repeat_n(Cell::Empty, 10));
                row.push(e.to_string().into());
                table.push(row);
                continue;
            }
        };
        for (i, (p, r)) in priors.iter().zip(&reports).enumerate() {
            let lead = || -> Vec<Cell> { vec![n.name.clone().into(), i.into(), weights_cell(p.weights())] };
            for e in &r.entries {
                if args.mode == Mode::Exact && e.error.is_none() && (e.gap < -EXACT_TOL || e.gap.is_nan()) {
                    eprintln!("{}: {} = {} below {} = {}", n.name, e.bound_name, e.value, e.dominated_quantity, e.dominated_value);
                    status = status.max(Status::PropertyFailure);
                }
                let applicable = |x: f64| if e.error.is_none() { Cell::Num(x) } else { Cell::Empty };
                let mut row = lead();
                row.extend([
                    e.bound_name.clone().into(),
                    applicable(e.value),
                    e.dominated_quantity.clone().into(),
                    e.dominated_value.into(),
                    applicable(e.gap),
                    e.method.clone().into(),
                    e.std_error.into(),
                    e.seed.into(),
                    e.error.clone().into(),
                ]);
                table.push(row);
            }
            let quantities = [
                ("ts_bayes_regret", Some(r.ts_bayes_regret), quantity_method),
                ("mbr", r.mbr, "exact"),
                ("minimax_regret", minimax, "exact"),
            ];
            for (name, v, method) in quantities {
                let mut row = lead();
                let (value, error) = match v {
                    Some(v) => (Cell::Num(v), Cell::Empty),
                    None => (Cell::Empty, Cell::from("cap exceeded")),
                };
                let seed_cell = if name == "ts_bayes_regret" && args.mode == Mode::MonteCarlo {
                    Cell::Int(seed)
                } else {
                    Cell::Empty
                };
                row.extend([
                    name.into(),
                    value,
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Empty,
                    method.into(),
                    Cell::Empty,
                    seed_cell,
                    error,
                ]);
                table.push(row);
            }
        }
    }
    let meta = ctx.meta(&insts, vec![seed]);
    ctx.out.table("bounds", &meta, &table, None)?;
    Ok(status)
}

pub fn mbr_cmd(ctx: &mut Ctx<'_>, args: &MbrArgs) -> CliResult<Status> {
    let insts = load_instances(ctx.common.instance.as_deref())?;
    let mut table = Table::new(&[
        "instance",
        "prior_index",
        "prior",
        "mbr",
        "brute_force",
        "minimax",
        "weak_duality_ok",
        "error",
    ]);
    let mut status = Status::Pass;
    for n in &insts {
        let priors = parse_priors(&ctx.common.prior, n.instance.n_params)?;
        let model = match ctx.model(n) {
            Ok(m) => m,
            Err(e) => {
                status = status.max(report(&n.name, &e));
                table.push(error_row(&n.name, 8, &e));
                continue;
            }
        };
        let minimax = if args.check_duality {
            match minimax_regret(&model) {
                Ok(s) => Some(s.game.upper),
                Err(e) => {
                    status = status.max(report(&n.name, &e));
                    table.push(error_row(&n.name, 8, &e));
                    continue;
                }
            }
        } else {
            None
        };
        let values: Vec<_> = priors.par_iter().map(|p| mbr(&model, p)).collect();
        for (i, (p, v)) in priors.iter().zip(values).enumerate() {
            let lead = vec![n.name.clone().into(), i.into(), weights_cell(p.weights())];
            let row = match v {
                Ok(v) => {
                    let ok = minimax.map(|mm| v.value <= mm + EXACT_TOL);
                    if ok == Some(false) {
                        eprintln!("{}: mbr {} exceeds minimax {:?} at prior {i}", n.name, v.value, minimax);
                        status = status.max(Status::PropertyFailure);
                    }
                    [v.value.into(), v.brute_force.into(), minimax.into(), ok.into(), Cell::Empty]
                }
                Err(e) => {
                    status = status.max(report(&n.name, &e));
                    [Cell::Empty, Cell::Empty, minimax.into(), Cell::Empty, e.to_string().into()]
                }
            };
            table.push(lead.into_iter().chain(row).collect());
        }
    }
    let meta = ctx.meta(&insts, vec![ctx.common.seed]);
    ctx.out.table("mbr", &meta, &table, None)?;
    Ok(status)
}

fn error_row(name: &str, width: usize, e: &Error) -> Vec<Cell> {
    let mut row = vec![Cell::from(name)];
    row.extend(std::iter::repeat_n(Cell::Empty, width - 2));
    row.push(e.to_string().into());
    row
}

pub fn minimax(ctx: &mut Ctx<'_>) -> CliResult<Status> {
    let insts = load_instances(ctx.common.instance.as_deref())?;
    let mut table = Table::new(&[
        "instance",
        "minimax",
        "lower",
        "method",
        "internal_gap",
        "converged",
        "iterations",
        "policy_count",
        "support_size",
        "least_favorable_prior",
        "error",
    ]);
    let mut status = Status::Pass;
    let mut supports = Vec::new();
    for n in &insts {
        let r = ctx.model(n).and_then(|m| {
            let count = policy_count(m.tree()?);
            minimax_regret(&m).map(|s| (s, count))
        });
        match r {
            Ok((s, count)) => {
                let support: Vec<Value> = s
                    .support()
                    .zip(s.entries.iter().zip(&s.game.mixed_policy).filter(|(_, &w)| w > 0.0))
                    .map(|((p, w), (regret, _))| {
                        let actions: Vec<Option<usize>> = (0..p.len()).map(|i| p.action(i)).collect();
                        json!({ "weight": w, "actions": actions, "regret": regret })
                    })
                    .collect();
                table.push(vec![
                    n.name.clone().into(),
                    s.game.upper.into(),
                    s.game.lower.into(),
                    s.game.method.to_string().into(),
                    s.game.duality_gap.into(),
                    s.game.converged.into(),
                    s.game.iterations.into(),
                    Cell::Str(count.to_string()),
                    support.len().into(),
                    weights_cell(&s.game.least_favorable_prior),
                    Cell::Empty,
                ]);
                supports.push(Value::Array(support));
            }
            Err(e) => {
                status = status.max(report(&n.name, &e));
                table.push(error_row(&n.name, 11, &e));
                supports.push(Value::Null);
            }
        }
    }
    let meta = ctx.meta(&insts, vec![ctx.common.seed]);
    ctx.out
        .table("minimax", &meta, &table, Some(json!({ "supports": supports })))?;
    Ok(status)
}

pub fn simulate(ctx: &mut Ctx<'_>, args: &SimulateArgs) -> CliResult<Status> {
    let insts = load_instances(ctx.common.instance.as_deref())?;
    if insts.len() != 1 {
        return Err(input_error("simulate-ts takes a single instance"));
    }
    let n = &insts[0];
    let priors = parse_priors(&ctx.common.prior, n.instance.n_params)?;
    if priors.len() != 1 {
        return Err(input_error("simulate-ts takes a single prior"));
    }
    let prior = &priors[0];
    if let Some(p) = args.true_param {
        if p >= n.instance.n_params {
            return Err(input_error(format!(
                "--true-param {p} with {} parameters",
                n.instance.n_params
            )));
        }
    }
    let model = ctx.model(n)?;
    let seed = ctx.common.seed;
    let logs = parallel_rollouts(ctx.rollouts(), seed, |rng, _| {
        let theta = args.true_param.unwrap_or_else(|| sample_index(rng, prior.weights()));
        simulate_ts(&model, prior, theta, rng)
    })
    .into_iter()
    .collect::<mrlab_core::Result<Vec<_>>>()?;

    let k = n.instance.n_params;
    let mut header: Vec<String> = ["rollout", "true_param", "t", "state", "action", "outcome", "reward", "sampled_param"]
        .map(String::from)
        .to_vec();
    header.extend((0..k).map(|i| format!("posterior_{i}")));
    let mut traj = Table { header, rows: Vec::new() };
    let mut summary = Table::new(&["rollout", "true_param", "total_reward", "optimal_utility", "regret"]);
    let mut regrets = Vec::with_capacity(logs.len());
    for (i, log) in logs.iter().enumerate() {
        for s in &log.steps {
            let mut row: Vec<Cell> = vec![
                i.into(),
                log.true_param.into(),
                s.t.into(),
                s.state.into(),
                s.action.into(),
                s.outcome.into(),
                s.reward.into(),
                s.sampled.into(),
            ];
            row.extend(s.belief.iter().map(|&b| Cell::Num(b)));
            traj.push(row);
        }
        let opt = model.optimal_utility(log.true_param);
        let regret = opt - log.total_reward();
        regrets.push(regret);
        summary.push(vec![i.into(), log.true_param.into(), log.total_reward().into(), opt.into(), regret.into()]);
    }
    let est = McEstimate::from_samples(&regrets);
    let meta = ctx.meta(&insts, vec![seed]);
    ctx.out.table("trajectories", &meta, &traj, None)?;
    ctx.out
        .table("ts_summary", &meta, &summary, Some(json!({ "regret_estimate": est })))?;
    if ctx.common.emit_plot_data {
        let horizon = n.instance.horizon;
        let mut plot = Table::new(&["series", "t", "value", "std_error"]);
        let mut cum = vec![0.0; logs.len()];
        for t in 0..horizon {
            for (c, log) in cum.iter_mut().zip(&logs) {
                *c += log.steps.get(t).map_or(0.0, |s| s.reward);
            }
            let e = McEstimate::from_samples(&cum);
            plot.push(vec!["cumulative_reward".into(), t.into(), e.mean.into(), e.std_error.into()]);
        }
        ctx.out.table("ts_plot", &meta, &plot, None)?;
    }
    println!("thompson-sampling regret {} ± {} over {} rollouts", est.mean, est.std_error, est.samples);
    Ok(Status::Pass)
}

/// Bernoulli grid with one good arm per parameter.
pub fn one_good_arm(n_arms: usize) -> Vec<Vec<f64>> {
    (0..n_arms)
        .map(|j| (0..n_arms).map(|a| if a == j { 0.7 } else { 0.3 }).collect())
        .collect()
}

fn axis_grid(dim: usize) -> Vec<Vec<f64>> {
    let mut g = Vec::with_capacity(2 * dim);
    for i in 0..dim {
        for sign in [1.0, -1.0] {
            let mut v = vec![0.0; dim];
            v[i] = sign;
            g.push(v);
        }
    }
    g
}

pub fn sweep(ctx: &mut Ctx<'_>, args: &SweepArgs) -> CliResult<Status> {
    if args.horizons.contains(&0) || args.arms.contains(&0) || args.dims.contains(&0) {
        return Err(input_error("horizons, arm counts and dimensions must be positive"));
    }
    let seed = ctx.common.seed;
    let rollouts = ctx.rollouts();
    let mut table = Table::new(&[
        "probe",
        "horizon",
        "n_arms",
        "dim",
        "quantity",
        "value",
        "std_error",
        "seed",
        "error",
    ]);
    let mut status = Status::Pass;
    let mut fail = |table: &mut Table, probe: &str, t: usize, k: Cell, d: Cell, e: &Error| {
        status = status.max(report(&format!("{probe} T={t}"), e));
        table.push(vec![probe.into(), t.into(), k, d, "error".into(), Cell::Empty, Cell::Empty, seed.into(), e.to_string().into()]);
    };
    let row = |probe: &str, t: usize, k: Cell, d: Cell, q: &str, v: f64, se: Option<f64>| -> Vec<Cell> {
        vec![probe.into(), t.into(), k, d, q.into(), v.into(), se.into(), seed.into(), Cell::Empty]
    };
    if matches!(args.probe, Probe::Mab | Probe::All) {
        for &k in &args.arms {
            let grid = one_good_arm(k);
            for &t in &args.horizons {
                let cell = || -> mrlab_core::Result<Vec<Vec<Cell>>> {
                    let inst = build_finite_mab(&grid, t)?;
                    let model = ExactModel::with_caps(&inst, ctx.caps)?;
                    let prior = Prior::uniform(inst.n_params);
                    let bayes = mrlab_core::policy::ts_monte_carlo(&model, &prior, None, rollouts, seed)?;
                    let worst = &rate_probe_mab(&grid, &[t], rollouts, seed)?[0];
                    let bound = entropy_bound_mab(&inst, &prior)?;
                    let kc = || Cell::from(k);
                    Ok(vec![
                        row("mab", t, kc(), Cell::Empty, "ts_bayes_regret", bayes.mean, Some(bayes.std_error)),
                        row("mab", t, kc(), Cell::Empty, "ts_worst_regret", worst.row.regret.mean, Some(worst.row.regret.std_error)),
                        row("mab", t, kc(), Cell::Empty, "rate_reference", worst.row.reference, None),
                        row("mab", t, kc(), Cell::Empty, "ratio", worst.row.ratio, Some(worst.row.ratio_std_error)),
                        row("mab", t, kc(), Cell::Empty, "entropy_mab_bound", bound, None),
                    ])
                };
                match cell() {
                    Ok(rows) => rows.into_iter().for_each(|r| table.push(r)),
                    Err(e) => fail(&mut table, "mab", t, k.into(), Cell::Empty, &e),
                }
            }
        }
    }
    if matches!(args.probe, Probe::Linear | Probe::All) {
        for &d in &args.dims {
            let probe = LinearProbe {
                dim: d,
                action_grid: axis_grid(d),
                param_grid: axis_grid(d),
                noise_levels: 2,
            };
            for &t in &args.horizons {
                match rate_probe_linear(&probe, &[t], rollouts, seed) {
                    Ok(rows) => {
                        let r = &rows[0];
                        let dc = || Cell::from(d);
                        let k = || Cell::from(probe.action_grid.len());
                        table.push(row("linear", t, k(), dc(), "ts_bayes_regret", r.regret.mean, Some(r.regret.std_error)));
                        table.push(row("linear", t, k(), dc(), "rate_reference", r.reference, None));
                        table.push(row("linear", t, k(), dc(), "ratio", r.ratio, Some(r.ratio_std_error)));
                    }
                    Err(e) => fail(&mut table, "linear", t, probe.action_grid.len().into(), d.into(), &e),
                }
            }
        }
    }
    let meta = ctx.meta(&[], vec![seed]);
    ctx.out.table("sweep", &meta, &table, None)?;
    if ctx.common.emit_plot_data {
        let mut plot = Table::new(&["series", "horizon", "value", "std_error"]);
        for r in &table.rows {
            if matches!(r[4], Cell::Str(ref q) if q == "error") {
                continue;
            }
            let label = |c: &Cell| match c {
                Cell::Int(i) => i.to_string(),
                _ => "-".into(),
            };
            let q = match &r[4] {
                Cell::Str(q) => q.clone(),
                _ => unreachable!("quantity column holds names"),
            };
            let series = match &r[0] {
                Cell::Str(p) if p == "mab" => format!("mab/arms={}/{q}", label(&r[2])),
                _ => format!("linear/dim={}/{q}", label(&r[3])),
            };
            plot.push(vec![series.into(), r[1].clone(), r[5].clone(), r[6].clone()]);
        }
        ctx.out.table("sweep_plot", &meta, &plot, None)?;
    }
    Ok(status)
}
