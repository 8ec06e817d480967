//! Information-theoretic upper bounds on the minimum Bayesian regret, and
//! through duality on the minimax regret.
//!
//! The KL and Wasserstein bounds compare, at every step `t`, the law of
//! `(Y*_t, S*_t)` when the parameter's optimal map is followed with the
//! Thompson-sampling predictive law of `(Ŷ_t, Ŝ_t)` given the history. The
//! outer expectation is over the joint law of the parameter and the
//! Thompson-sampling history.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::env_model::{MdpClass, MetricTable, Prior};
use crate::error::{Error, Result};
use crate::infotheory::{entropy, kl_divergence, optimal_transport};
use crate::mc::{parallel_rollouts, sample_index, McEstimate};
use crate::model::ExactModel;
use crate::policy::stationary::stationary_marginals;
use crate::policy::{simulate_ts, ts_expected, TsTree};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubGaussianConfig {
    /// `σ_t` per step; a single entry applies to every step.
    pub sigma: Vec<f64>,
}

impl SubGaussianConfig {
    /// `σ = (r_max − r_min) / 2` at every step.
    pub fn from_range(instance: &MdpClass) -> Self {
        Self {
            sigma: vec![instance.reward_span() / 2.0],
        }
    }

    pub fn constant(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::invalid(format!("sub-Gaussian parameter {sigma} must be nonnegative")));
        }
        Ok(Self { sigma: vec![sigma] })
    }

    fn at(&self, t: usize) -> f64 {
        if self.sigma.len() == 1 {
            self.sigma[0]
        } else {
            self.sigma[t]
        }
    }
}

/// Lipschitz constant and ground metric on `outcome × action`, checked
/// against every pair of reward entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzConfig {
    l: f64,
    metric: MetricTable,
}

impl LipschitzConfig {
    pub fn new(instance: &MdpClass, l: f64, metric: MetricTable) -> Result<Self> {
        check_metric_dims(instance, &metric)?;
        if !(l.is_finite() && l >= 0.0) {
            return Err(Error::invalid(format!("Lipschitz constant {l} must be nonnegative")));
        }
        for_each_pair(instance, |y, a, y2, a2| {
            let dr = (instance.reward[y][a] - instance.reward[y2][a2]).abs();
            let bound = l * metric.between(y, a, y2, a2);
            if dr > bound + 1e-12 {
                return Err(Error::invalid(format!(
                    "|r({y},{a}) - r({y2},{a2})| = {dr} exceeds L * rho = {bound}"
                )));
            }
            Ok(())
        })?;
        Ok(Self { l, metric })
    }

    /// Smallest `L` for which the reward is `L`-Lipschitz under `metric`.
    pub fn minimal(instance: &MdpClass, metric: MetricTable) -> Result<Self> {
        check_metric_dims(instance, &metric)?;
        let mut l: f64 = 0.0;
        for_each_pair(instance, |y, a, y2, a2| {
            let dr = (instance.reward[y][a] - instance.reward[y2][a2]).abs();
            let d = metric.between(y, a, y2, a2);
            if d > 0.0 {
                l = l.max(dr / d);
            } else if dr > 0.0 {
                return Err(Error::invalid(format!(
                    "pairs ({y},{a}) and ({y2},{a2}) are at distance 0 with different rewards"
                )));
            }
            Ok(())
        })?;
        Ok(Self { l, metric })
    }

    /// Minimal constant under the 0/1 metric.
    pub fn discrete(instance: &MdpClass) -> Self {
        Self::minimal(instance, MetricTable::discrete(instance.n_outcomes, instance.n_actions))
            .expect("the discrete metric separates every pair")
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn metric(&self) -> &MetricTable {
        &self.metric
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            l: self.l * factor,
            metric: self.metric.clone(),
        }
    }
}

fn check_metric_dims(instance: &MdpClass, metric: &MetricTable) -> Result<()> {
    if metric.n_outcomes() != instance.n_outcomes || metric.n_actions() != instance.n_actions {
        return Err(Error::invalid(format!(
            "metric covers {}x{} outcome-action pairs, instance has {}x{}",
            metric.n_outcomes(),
            metric.n_actions(),
            instance.n_outcomes,
            instance.n_actions
        )));
    }
    Ok(())
}

fn for_each_pair(
    m: &MdpClass,
    mut f: impl FnMut(usize, usize, usize, usize) -> Result<()>,
) -> Result<()> {
    for y in 0..m.n_outcomes {
        for a in 0..m.n_actions {
            for y2 in 0..m.n_outcomes {
                for a2 in 0..m.n_actions {
                    f(y, a, y2, a2)?;
                }
            }
        }
    }
    Ok(())
}

/// `[θ][t][y * n_states + s]`: law of `(Y*_t, S*_t)` under the parameter's
/// optimal stationary map.
pub fn omniscient_reference(model: &ExactModel<'_>) -> Vec<Vec<Vec<f64>>> {
    (0..model.n_params())
        .map(|p| stationary_marginals(model.instance(), p, &model.optimum(p).map))
        .collect()
}

/// Predictive law of `(Y_t, S_t)` given a history summarized by its
/// posterior and previous state–action pair.
fn predictive(m: &MdpClass, belief: &[f64], last: Option<(usize, usize)>) -> Vec<f64> {
    let mut out = vec![0.0; m.n_outcomes * m.n_states];
    for (p, &c) in belief.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        for s in 0..m.n_states {
            let ps = match last {
                None => m.init[p][s],
                Some((s0, a0)) => m.transition[p][s0][a0][s],
            };
            if ps == 0.0 {
                continue;
            }
            for (y, &q) in m.outcome[p][s].iter().enumerate() {
                out[y * m.n_states + s] += c * ps * q;
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum BoundMode {
    ExactTree,
    MonteCarlo { rollouts: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfiniteKlNode {
    pub t: usize,
    pub node: usize,
    pub param: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub value: f64,
    pub std_error: Option<f64>,
    pub method: String,
    pub seed: Option<u64>,
    /// Histories where the KL term is infinite (exact mode lists them all,
    /// Monte Carlo mode the first hit per rollout step).
    pub infinite_nodes: Vec<InfiniteKlNode>,
}

/// Per-step term shared by the KL and Wasserstein bounds.
trait StepTerm: Sync {
    /// Term for parameter `p` at step `t` against predictive `pred`.
    fn term(&self, t: usize, p: usize, pred: &[f64]) -> Result<f64>;
}

struct KlTerm<'a> {
    reference: &'a [Vec<Vec<f64>>],
    sigma: &'a SubGaussianConfig,
}

impl StepTerm for KlTerm<'_> {
    fn term(&self, t: usize, p: usize, pred: &[f64]) -> Result<f64> {
        let kl = kl_divergence(&self.reference[p][t], pred);
        let s = self.sigma.at(t);
        Ok(if kl.is_infinite() && s == 0.0 {
            0.0
        } else {
            (2.0 * s * s * kl).sqrt()
        })
    }
}

struct WassersteinTerm<'a> {
    reference: &'a [Vec<Vec<f64>>],
    /// Ground cost on `(y, s)` pairs per parameter.
    cost: Vec<Vec<Vec<f64>>>,
    l: f64,
}

impl StepTerm for WassersteinTerm<'_> {
    fn term(&self, t: usize, p: usize, pred: &[f64]) -> Result<f64> {
        Ok(self.l * optimal_transport(&self.reference[p][t], pred, &self.cost[p])?.cost)
    }
}

/// `ρ_θ((y,s),(y',s')) = ρ((y, f*_θ(s)), (y', f*_θ(s'))) + 1[s ≠ s']`.
fn joint_costs(model: &ExactModel<'_>, metric: &MetricTable) -> Vec<Vec<Vec<f64>>> {
    let m = model.instance();
    let ns = m.n_states;
    let n = m.n_outcomes * ns;
    (0..m.n_params)
        .map(|p| {
            let f = &model.optimum(p).map;
            (0..n)
                .map(|i| {
                    let (y, s) = (i / ns, i % ns);
                    (0..n)
                        .map(|j| {
                            let (y2, s2) = (j / ns, j % ns);
                            metric.between(y, f[s], y2, f[s2]) + if s == s2 { 0.0 } else { 1.0 }
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

fn exact_sum(
    model: &ExactModel<'_>,
    prior: &Prior,
    tree: &TsTree,
    term: &dyn StepTerm,
    track_infinite: bool,
) -> Result<BoundValue> {
    let m = model.instance();
    let w = prior.weights();
    let mut total = 0.0;
    let mut infinite_nodes = Vec::new();
    for (t, layer) in tree.layers.iter().enumerate() {
        for (i, node) in layer.iter().enumerate() {
            let Some(belief) = node.posterior(prior) else { continue };
            let pred = predictive(m, &belief, node.last);
            for p in 0..m.n_params {
                let weight = w[p] * node.path_prob[p];
                if weight == 0.0 {
                    continue;
                }
                let v = term.term(t, p, &pred)?;
                if v.is_infinite() && track_infinite {
                    infinite_nodes.push(InfiniteKlNode { t, node: i, param: p });
                }
                total += weight * v;
            }
        }
    }
    Ok(BoundValue {
        value: total,
        std_error: None,
        method: "exact-tree".into(),
        seed: None,
        infinite_nodes,
    })
}

fn monte_carlo_sum(
    model: &ExactModel<'_>,
    prior: &Prior,
    rollouts: usize,
    seed: u64,
    term: &dyn StepTerm,
) -> Result<BoundValue> {
    let m = model.instance();
    let per_rollout: Vec<Result<(f64, Option<InfiniteKlNode>)>> =
        parallel_rollouts(rollouts, seed, |rng, i| {
            let theta = sample_index(rng, prior.weights());
            let log = simulate_ts(model, prior, theta, rng)?;
            let mut total = 0.0;
            let mut first_inf = None;
            for (t, step) in log.steps.iter().enumerate() {
                let last = (t > 0).then(|| (log.steps[t - 1].state, log.steps[t - 1].action));
                let pred = predictive(m, &step.history_belief, last);
                let v = term.term(t, theta, &pred)?;
                if v.is_infinite() && first_inf.is_none() {
                    first_inf = Some(InfiniteKlNode { t, node: i, param: theta });
                }
                total += v;
            }
            Ok((total, first_inf))
        });
    let mut samples = Vec::with_capacity(rollouts);
    let mut infinite_nodes = Vec::new();
    for r in per_rollout {
        let (v, inf) = r?;
        samples.push(v);
        infinite_nodes.extend(inf);
    }
    let est = McEstimate::from_samples(&samples);
    Ok(BoundValue {
        value: est.mean,
        std_error: Some(est.std_error),
        method: "monte-carlo".into(),
        seed: Some(seed),
        infinite_nodes,
    })
}

fn run_bound(
    model: &ExactModel<'_>,
    prior: &Prior,
    mode: BoundMode,
    term: &dyn StepTerm,
    tree: Option<&TsTree>,
    track_infinite: bool,
) -> Result<BoundValue> {
    check_prior(model, prior)?;
    match mode {
        BoundMode::ExactTree => match tree {
            Some(t) => exact_sum(model, prior, t, term, track_infinite),
            None => exact_sum(model, prior, &ts_expected(model, prior)?, term, track_infinite),
        },
        BoundMode::MonteCarlo { rollouts, seed } => monte_carlo_sum(model, prior, rollouts, seed, term),
    }
}

fn check_prior(model: &ExactModel<'_>, prior: &Prior) -> Result<()> {
    if prior.len() != model.n_params() {
        return Err(Error::invalid(format!(
            "prior has {} entries, instance has {} parameters",
            prior.len(),
            model.n_params()
        )));
    }
    Ok(())
}

/// `Σ_t E[√(2σ_t² KL(P*_{t,Θ} ‖ P̂_{t | Ĥ_t}))]`.
pub fn kl_bound(
    model: &ExactModel<'_>,
    prior: &Prior,
    config: &SubGaussianConfig,
    mode: BoundMode,
) -> Result<BoundValue> {
    kl_bound_on(model, prior, config, mode, None)
}

fn kl_bound_on(
    model: &ExactModel<'_>,
    prior: &Prior,
    config: &SubGaussianConfig,
    mode: BoundMode,
    tree: Option<&TsTree>,
) -> Result<BoundValue> {
    if config.sigma.len() != 1 && config.sigma.len() != model.instance().horizon {
        return Err(Error::invalid("need one sub-Gaussian parameter or one per step"));
    }
    let reference = omniscient_reference(model);
    let term = KlTerm {
        reference: &reference,
        sigma: config,
    };
    run_bound(model, prior, mode, &term, tree, true)
}

/// `L Σ_t E[W(P*_{t,Θ}, P̂_{t | Ĥ_t})]`.
pub fn wasserstein_bound(
    model: &ExactModel<'_>,
    prior: &Prior,
    config: &LipschitzConfig,
    mode: BoundMode,
) -> Result<BoundValue> {
    wasserstein_bound_on(model, prior, config, mode, None)
}

fn wasserstein_bound_on(
    model: &ExactModel<'_>,
    prior: &Prior,
    config: &LipschitzConfig,
    mode: BoundMode,
    tree: Option<&TsTree>,
) -> Result<BoundValue> {
    check_metric_dims(model.instance(), &config.metric)?;
    let reference = omniscient_reference(model);
    let term = WassersteinTerm {
        reference: &reference,
        cost: joint_costs(model, &config.metric),
        l: config.l,
    };
    run_bound(model, prior, mode, &term, tree, false)
}

/// Optimal arm per parameter, lowest index on ties.
pub fn optimal_arms(instance: &MdpClass) -> Result<Vec<usize>> {
    (0..instance.n_params)
        .map(|p| {
            let mut best = 0;
            let mut best_mean = instance.arm_mean(p, 0)?;
            for a in 1..instance.n_actions {
                let mean = instance.arm_mean(p, a)?;
                if mean > best_mean + 1e-12 {
                    best = a;
                    best_mean = mean;
                }
            }
            Ok(best)
        })
        .collect()
}

/// `√(½ |A| H(A*) T)`.
pub fn entropy_bound_mab(instance: &MdpClass, prior: &Prior) -> Result<f64> {
    if !instance.is_finite_mab() {
        return Err(Error::NotApplicable("entropy_mab requires a finite multi-armed bandit".into()));
    }
    if prior.len() != instance.n_params {
        return Err(Error::invalid("prior does not match the parameter set"));
    }
    let arms = optimal_arms(instance)?;
    let mut law = vec![0.0; instance.n_actions];
    for (p, &w) in prior.weights().iter().enumerate() {
        law[arms[p]] += w;
    }
    Ok(entropy_mab_formula(instance.n_actions, entropy(&law), instance.pulls()))
}

pub fn entropy_mab_formula(n_arms: usize, h_opt: f64, horizon: usize) -> f64 {
    (0.5 * n_arms as f64 * h_opt * horizon as f64).sqrt()
}

/// `√(|A| T H(Θ) / 2)`.
pub fn entropy_bound_contextual(instance: &MdpClass, prior: &Prior) -> Result<f64> {
    if !instance.is_contextual() {
        return Err(Error::NotApplicable(
            "entropy_contextual requires transitions independent of state, action and parameter".into(),
        ));
    }
    let (lo, hi) = instance.reward_range;
    if lo < 0.0 || hi > 1.0 {
        return Err(Error::NotApplicable(format!(
            "entropy_contextual requires rewards in [0, 1], range is [{lo}, {hi}]"
        )));
    }
    if prior.len() != instance.n_params {
        return Err(Error::invalid("prior does not match the parameter set"));
    }
    Ok(entropy_contextual_formula(instance.n_actions, instance.horizon, entropy(prior.weights())))
}

pub fn entropy_contextual_formula(n_arms: usize, horizon: usize, h_param: f64) -> f64 {
    (n_arms as f64 * horizon as f64 * h_param / 2.0).sqrt()
}

/// Prior grid at resolution `res` (every point of the simplex with
/// coordinates in multiples of `1/res`).
pub fn prior_grid(n_params: usize, res: usize) -> Vec<Prior> {
    let res = res.max(1);
    let mut out = Vec::new();
    let mut counts = vec![0usize; n_params];
    fn rec(i: usize, left: usize, counts: &mut Vec<usize>, res: usize, out: &mut Vec<Prior>) {
        if i + 1 == counts.len() {
            counts[i] = left;
            let w = counts.iter().map(|&c| c as f64 / res as f64).collect();
            out.push(Prior::new(w).expect("grid point is a distribution"));
            return;
        }
        for c in 0..=left {
            counts[i] = c;
            rec(i + 1, left - c, counts, res, out);
        }
    }
    rec(0, res, &mut counts, res, &mut out);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupEstimate {
    /// Largest value found; a lower estimate of the supremum.
    pub value: f64,
    pub prior: Vec<f64>,
    pub evaluations: usize,
}

/// Grid search plus coordinate-pair local refinement of `f` over the prior
/// simplex. `extra` priors (for example a least-favorable prior) are always
/// evaluated.
pub fn sup_over_priors(
    n_params: usize,
    res: usize,
    extra: &[Prior],
    mut f: impl FnMut(&Prior) -> Result<f64>,
) -> Result<SupEstimate> {
    let mut best_value = f64::NEG_INFINITY;
    let mut best = Prior::uniform(n_params);
    let mut evaluations = 0;
    for p in prior_grid(n_params, res).iter().chain(extra) {
        let v = f(p)?;
        evaluations += 1;
        if v > best_value {
            best_value = v;
            best = p.clone();
        }
    }
    let mut step = 0.5 / res.max(1) as f64;
    while step > 1e-4 && n_params > 1 {
        let mut improved = false;
        for i in 0..n_params {
            for j in 0..n_params {
                if i == j {
                    continue;
                }
                let mut w = best.weights().to_vec();
                let moved = step.min(w[j]);
                if moved <= 0.0 {
                    continue;
                }
                w[i] += moved;
                w[j] -= moved;
                let cand = Prior::new(w)?;
                let v = f(&cand)?;
                evaluations += 1;
                if v > best_value {
                    best_value = v;
                    best = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    Ok(SupEstimate {
        value: best_value,
        prior: best.weights().to_vec(),
        evaluations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundEntry {
    pub bound_name: String,
    pub value: f64,
    pub dominated_quantity: String,
    pub dominated_value: f64,
    pub gap: f64,
    pub method: String,
    pub std_error: Option<f64>,
    pub seed: Option<u64>,
    /// Set when the bound does not apply to the instance.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub prior: Vec<f64>,
    pub ts_bayes_regret: f64,
    pub mbr: Option<f64>,
    pub entries: Vec<BoundEntry>,
}

impl BoundReport {
    pub fn entry(&self, name: &str) -> Option<&BoundEntry> {
        self.entries.iter().find(|e| e.bound_name == name)
    }

    pub const CSV_HEADER: [&'static str; 9] = [
        "bound_name",
        "value",
        "dominated_quantity",
        "dominated_value",
        "gap",
        "method",
        "std_error",
        "seed",
        "error",
    ];

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        let opt = |v: Option<String>| v.unwrap_or_default();
        self.entries
            .iter()
            .map(|e| {
                vec![
                    e.bound_name.clone(),
                    fmt_f64(e.value),
                    e.dominated_quantity.clone(),
                    fmt_f64(e.dominated_value),
                    fmt_f64(e.gap),
                    e.method.clone(),
                    opt(e.std_error.map(fmt_f64)),
                    opt(e.seed.map(|s| s.to_string())),
                    opt(e.error.clone()),
                ]
            })
            .collect()
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::CSV_HEADER).map_err(csv_err)?;
        for row in self.csv_rows() {
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:?}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsConfig {
    pub sigma: Option<SubGaussianConfig>,
    pub lipschitz: Option<LipschitzConfig>,
    pub mode: BoundMode,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self {
            sigma: None,
            lipschitz: None,
            mode: BoundMode::ExactTree,
        }
    }
}

/// Every applicable bound at one prior, next to the quantity it dominates.
pub fn bound_report(model: &ExactModel<'_>, prior: &Prior, cfg: &BoundsConfig) -> Result<BoundReport> {
    check_prior(model, prior)?;
    let m = model.instance();
    let (tree, ts_regret) = match cfg.mode {
        BoundMode::ExactTree => {
            let tree = ts_expected(model, prior)?;
            let r = tree.bayes_regret(model, prior);
            (Some(tree), r)
        }
        BoundMode::MonteCarlo { rollouts, seed } => {
            let est = crate::policy::ts_monte_carlo(model, prior, None, rollouts, seed)?;
            (None, est.mean)
        }
    };
    let mbr = match crate::regret::mbr(model, prior) {
        Ok(v) => Some(v.value),
        Err(Error::CapExceeded { .. }) => None,
        Err(e) => return Err(e),
    };
    let entry = |name: &str, v: &BoundValue| BoundEntry {
        bound_name: name.into(),
        value: v.value,
        dominated_quantity: "ts_bayes_regret".into(),
        dominated_value: ts_regret,
        gap: v.value - ts_regret,
        method: v.method.clone(),
        std_error: v.std_error,
        seed: v.seed,
        error: None,
    };
    let mut entries = Vec::new();
    let sigma = cfg.sigma.clone().unwrap_or_else(|| SubGaussianConfig::from_range(m));
    entries.push(entry(
        "kl_bound",
        &kl_bound_on(model, prior, &sigma, cfg.mode, tree.as_ref())?,
    ));
    let lip = cfg.lipschitz.clone().unwrap_or_else(|| LipschitzConfig::discrete(m));
    entries.push(entry(
        "wasserstein_bound",
        &wasserstein_bound_on(model, prior, &lip, cfg.mode, tree.as_ref())?,
    ));
    let closed = |name: &str, r: Result<f64>, dominated: &str, dv: f64| match r {
        Ok(v) => Ok(BoundEntry {
            bound_name: name.into(),
            value: v,
            dominated_quantity: dominated.into(),
            dominated_value: dv,
            gap: v - dv,
            method: "closed-form".into(),
            std_error: None,
            seed: None,
            error: None,
        }),
        Err(Error::NotApplicable(msg)) => Ok(BoundEntry {
            bound_name: name.into(),
            value: f64::NAN,
            dominated_quantity: dominated.into(),
            dominated_value: dv,
            gap: f64::NAN,
            method: "closed-form".into(),
            std_error: None,
            seed: None,
            error: Some(format!("inapplicable: {msg}")),
        }),
        Err(e) => Err(e),
    };
    let (mbr_name, mbr_value) = match mbr {
        Some(v) => ("mbr", v),
        None => ("ts_bayes_regret", ts_regret),
    };
    entries.push(closed("entropy_mab_bound", entropy_bound_mab(m, prior), mbr_name, mbr_value)?);
    entries.push(closed(
        "entropy_contextual_bound",
        entropy_bound_contextual(m, prior),
        "ts_bayes_regret",
        ts_regret,
    )?);
    Ok(BoundReport {
        prior: prior.weights().to_vec(),
        ts_bayes_regret: ts_regret,
        mbr,
        entries,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub horizon: usize,
    pub regret: McEstimate,
    /// Reference rate the regret is compared with.
    pub reference: f64,
    pub ratio: f64,
    pub ratio_std_error: f64,
}

fn rate_row(horizon: usize, regret: McEstimate, reference: f64) -> RateRow {
    RateRow {
        horizon,
        regret,
        reference,
        ratio: if reference > 0.0 { regret.mean / reference } else { 0.0 },
        ratio_std_error: if reference > 0.0 { regret.std_error / reference } else { 0.0 },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProbe {
    pub dim: usize,
    pub action_grid: Vec<Vec<f64>>,
    pub param_grid: Vec<Vec<f64>>,
    pub noise_levels: usize,
}

/// Monte Carlo Thompson-sampling Bayesian regret of a linear bandit with a
/// uniform prior over the parameter grid, against `d √(T log T)`.
pub fn rate_probe_linear(
    probe: &LinearProbe,
    horizons: &[usize],
    rollouts: usize,
    seed: u64,
) -> Result<Vec<RateRow>> {
    horizons
        .iter()
        .map(|&t| {
            let inst = crate::env_model::build_linear_bandit(
                probe.dim,
                &probe.action_grid,
                &probe.param_grid,
                probe.noise_levels,
                t,
            )?;
            let model = ExactModel::new(&inst)?;
            let prior = Prior::uniform(inst.n_params);
            let est = crate::policy::ts_monte_carlo(&model, &prior, None, rollouts, seed)?;
            let tf = t as f64;
            let reference = probe.dim as f64 * (tf * tf.ln().max(0.0)).sqrt();
            Ok(rate_row(t, est, reference))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MabRateRow {
    pub row: RateRow,
    /// Parameter attaining the worst Thompson-sampling regret.
    pub worst_param: usize,
}

/// Worst Thompson-sampling regret over a grid of Bernoulli arm-mean vectors
/// (uniform prior over the grid), against `√(|A| log|A| T)`.
pub fn rate_probe_mab(
    arm_means: &[Vec<f64>],
    horizons: &[usize],
    rollouts: usize,
    seed: u64,
) -> Result<Vec<MabRateRow>> {
    horizons
        .iter()
        .map(|&t| {
            let inst = crate::env_model::build_finite_mab(arm_means, t)?;
            let model = ExactModel::new(&inst)?;
            let prior = Prior::uniform(inst.n_params);
            let mut worst: Option<(usize, McEstimate)> = None;
            for p in 0..inst.n_params {
                let est = crate::policy::ts_monte_carlo(&model, &prior, Some(p), rollouts, seed)?;
                if worst.as_ref().is_none_or(|(_, w)| est.mean > w.mean) {
                    worst = Some((p, est));
                }
            }
            let (worst_param, est) = worst.expect("at least one parameter");
            let k = inst.n_actions as f64;
            let reference = (k * k.ln() * (inst.pulls() as f64)).sqrt();
            Ok(MabRateRow {
                row: rate_row(t, est, reference),
                worst_param,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env_model::{build_contextual_bandit, build_finite_mab};

    fn det(horizon: usize) -> MdpClass {
        build_finite_mab(&[vec![1.0, 0.0], vec![0.0, 1.0]], horizon).unwrap()
    }

    #[test]
    fn kl_bound_on_deterministic_instance() {
        // per-parameter KL of a point mass against the uniform mixture
        let oracle = (2.0 * 0.25 * 2f64.ln()).sqrt();
        for horizon in [1, 2] {
            let inst = det(horizon);
            let m = ExactModel::new(&inst).unwrap();
            let b = kl_bound(&m, &Prior::uniform(2), &SubGaussianConfig::from_range(&inst), BoundMode::ExactTree)
                .unwrap();
            assert!((b.value - oracle).abs() < 1e-12, "{}", b.value);
            assert!(b.value >= 0.5);
            assert!(b.infinite_nodes.is_empty());
        }
    }

    #[test]
    fn wasserstein_bound_on_deterministic_instance() {
        let inst = det(1);
        let m = ExactModel::new(&inst).unwrap();
        let lip = LipschitzConfig::new(&inst, 1.0, MetricTable::discrete(4, 2)).unwrap();
        assert_eq!(LipschitzConfig::discrete(&inst).l(), 1.0);
        let b = wasserstein_bound(&m, &Prior::uniform(2), &lip, BoundMode::ExactTree).unwrap();
        assert!((b.value - 0.5).abs() < 1e-12);
        let b2 = wasserstein_bound(&m, &Prior::uniform(2), &lip.scaled(2.0), BoundMode::ExactTree).unwrap();
        assert_eq!(b2.value, 2.0 * b.value);
    }

    #[test]
    fn lipschitz_constant_is_checked() {
        let inst = det(1);
        assert!(LipschitzConfig::new(&inst, 0.5, MetricTable::discrete(4, 2)).is_err());
    }

    #[test]
    fn single_parameter_bounds_vanish() {
        let inst = build_finite_mab(&[vec![0.3, 0.6]], 3).unwrap();
        let m = ExactModel::new(&inst).unwrap();
        let p = Prior::uniform(1);
        let cfg = SubGaussianConfig::from_range(&inst);
        assert_eq!(kl_bound(&m, &p, &cfg, BoundMode::ExactTree).unwrap().value, 0.0);
        let lip = LipschitzConfig::discrete(&inst);
        assert!(wasserstein_bound(&m, &p, &lip, BoundMode::ExactTree).unwrap().value.abs() < 1e-12);
        assert_eq!(entropy_bound_mab(&inst, &p).unwrap(), 0.0);
    }

    #[test]
    fn omniscient_reference_is_the_kernel() {
        let inst = det(2);
        let m = ExactModel::new(&inst).unwrap();
        let r = omniscient_reference(&m);
        // outcome 1 = arm 0 pays, arm 1 does not
        assert_eq!(r[0][0], vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(r[1][1], vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn closed_form_entropy_bounds() {
        assert!((entropy_mab_formula(2, 2f64.ln(), 100) - 8.3255).abs() < 1e-3);
        assert!((entropy_contextual_formula(2, 100, 4f64.ln()) - 11.7743).abs() < 1e-3);
        let inst = build_finite_mab(&[vec![0.9, 0.1], vec![0.2, 0.8]], 100).unwrap();
        let v = entropy_bound_mab(&inst, &Prior::uniform(2)).unwrap();
        assert!((v - (0.5 * 2.0 * 2f64.ln() * 100.0).sqrt()).abs() < 1e-12);
        let shared = build_finite_mab(&[vec![0.9, 0.1], vec![0.7, 0.3]], 100).unwrap();
        assert_eq!(entropy_bound_mab(&shared, &Prior::uniform(2)).unwrap(), 0.0);

        let ctx = build_contextual_bandit(
            &[0.5, 0.5],
            &[
                vec![vec![0.1, 0.2], vec![0.3, 0.4]],
                vec![vec![0.5, 0.6], vec![0.7, 0.8]],
                vec![vec![0.9, 0.1], vec![0.2, 0.3]],
                vec![vec![0.4, 0.5], vec![0.6, 0.7]],
            ],
            100,
        )
        .unwrap();
        let v = entropy_bound_contextual(&ctx, &Prior::uniform(4)).unwrap();
        assert!((v - 11.7743).abs() < 1e-3);
        assert_eq!(entropy_bound_contextual(&ctx, &Prior::point(4, 2)).unwrap(), 0.0);
        assert!(matches!(entropy_bound_mab(&ctx, &Prior::uniform(4)), Err(Error::NotApplicable(_))));
        let general = crate::generator::two_state_example();
        assert!(matches!(
            entropy_bound_contextual(&general, &Prior::uniform(2)),
            Err(Error::NotApplicable(_))
        ));
    }

    #[test]
    fn monte_carlo_agrees_with_exact_tree() {
        let inst = build_finite_mab(&[vec![0.2, 0.7], vec![0.6, 0.3], vec![0.5, 0.5]], 3).unwrap();
        let m = ExactModel::new(&inst).unwrap();
        let prior = Prior::new(vec![0.5, 0.3, 0.2]).unwrap();
        let cfg = SubGaussianConfig::from_range(&inst);
        let exact = kl_bound(&m, &prior, &cfg, BoundMode::ExactTree).unwrap();
        let mc = kl_bound(&m, &prior, &cfg, BoundMode::MonteCarlo { rollouts: 20_000, seed: 4 }).unwrap();
        let se = mc.std_error.unwrap();
        assert!((exact.value - mc.value).abs() <= 3.0 * se, "{} vs {} ± {se}", exact.value, mc.value);
        let lip = LipschitzConfig::discrete(&inst);
        let exact = wasserstein_bound(&m, &prior, &lip, BoundMode::ExactTree).unwrap();
        let mc = wasserstein_bound(&m, &prior, &lip, BoundMode::MonteCarlo { rollouts: 20_000, seed: 4 }).unwrap();
        assert!((exact.value - mc.value).abs() <= 3.0 * mc.std_error.unwrap());
    }

    #[test]
    fn prior_grid_covers_the_simplex() {
        let g = prior_grid(3, 4);
        assert_eq!(g.len(), 15);
        assert!(g.iter().any(|p| p.weights() == [0.25, 0.25, 0.5]));
        let s = sup_over_priors(2, 4, &[], |p| Ok(-(p.weights()[0] - 0.3).powi(2))).unwrap();
        assert!((s.prior[0] - 0.3).abs() < 1e-3);
    }

    #[test]
    fn report_marks_inapplicable_bounds() {
        let inst = det(2);
        let m = ExactModel::new(&inst).unwrap();
        let r = bound_report(&m, &Prior::uniform(2), &BoundsConfig::default()).unwrap();
        for name in ["kl_bound", "wasserstein_bound", "entropy_mab_bound"] {
            let e = r.entry(name).unwrap();
            assert!(e.error.is_none() && e.gap >= -1e-9, "{name}");
        }
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("bound_name,value,dominated_quantity,dominated_value,gap,method,std_error,seed"));

        let ctx = build_contextual_bandit(&[0.4, 0.6], &[vec![vec![0.9, 0.2], vec![0.1, 0.8]], vec![vec![0.3, 0.6], vec![0.7, 0.2]]], 2)
            .unwrap();
        let m = ExactModel::new(&ctx).unwrap();
        let r = bound_report(&m, &Prior::uniform(2), &BoundsConfig::default()).unwrap();
        assert!(r.entry("entropy_mab_bound").unwrap().error.as_deref().unwrap().starts_with("inapplicable"));
        let c = r.entry("entropy_contextual_bound").unwrap();
        assert!(c.error.is_none() && c.gap >= -1e-9);
    }
}
