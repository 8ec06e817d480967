//! The policy-versus-parameter regret game.
//!
//! Rows are deterministic policies (the minimizer), columns are parameters
//! (the maximizer), entries are regrets. Small catalogs are solved as one
//! linear program. Larger ones are solved by column generation against the
//! Bayes-optimal best response, which keeps every restricted problem an
//! exact LP. The worst-case minimum Bayesian regret is computed separately by
//! maximizing `F(q) = min_π Σ_θ q_θ 𝔯(π, θ)` with a cutting-plane method.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env_model::{instance_hash, Prior};
use crate::error::{Error, Result};
use crate::model::ExactModel;
use crate::policy::{bayes_optimal_policy, enumerate_policies, policy_count, HistoryPolicy};
use crate::regret::regret_vector;
use crate::simplex::LinearProgram;

/// Stopping slack for the oracle loops.
const ORACLE_TOL: f64 = 1e-10;
const MAX_ORACLE_ROUNDS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    ExactLp,
    ColumnGeneration,
    CuttingPlane,
    FictitiousPlay,
}

impl std::fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveMethod::ExactLp => "exact-lp",
            SolveMethod::ColumnGeneration => "column-generation",
            SolveMethod::CuttingPlane => "cutting-plane",
            SolveMethod::FictitiousPlay => "fictitious-play",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSolution {
    pub value: f64,
    /// Weights over the rows.
    pub mixed_policy: Vec<f64>,
    pub least_favorable_prior: Vec<f64>,
    /// `max_θ` of the mixed policy's expected regret.
    pub upper: f64,
    /// Best-response value against the least-favorable prior.
    pub lower: f64,
    /// `upper − lower`.
    pub duality_gap: f64,
    pub method: SolveMethod,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Largest row count solved as a single LP.
    pub lp_cap: usize,
}

impl Default for GameOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iterations: 200_000,
            lp_cap: 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RegretMatrix {
    /// `[policy][param]`
    pub entries: Vec<Vec<f64>>,
    pub catalog: Vec<HistoryPolicy>,
}

impl RegretMatrix {
    pub fn n_policies(&self) -> usize {
        self.entries.len()
    }

    pub fn n_params(&self) -> usize {
        self.entries.first().map_or(0, Vec::len)
    }
}

pub fn build_regret_matrix(model: &ExactModel<'_>) -> Result<RegretMatrix> {
    let catalog = enumerate_policies(model)?;
    let entries = catalog
        .par_iter()
        .map(|p| regret_vector(model, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(RegretMatrix { entries, catalog })
}

fn check_matrix(entries: &[Vec<f64>]) -> Result<usize> {
    let k = entries.first().map_or(0, Vec::len);
    if entries.is_empty() || k == 0 {
        return Err(Error::invalid("empty game matrix"));
    }
    for (i, row) in entries.iter().enumerate() {
        if row.len() != k {
            return Err(Error::invalid("ragged game matrix"));
        }
        if let Some(j) = row.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { row: i, col: j });
        }
    }
    Ok(k)
}

/// `max_j Σ_i m_i R_ij`
pub fn row_mix_value(entries: &[Vec<f64>], mix: &[f64]) -> f64 {
    let k = entries[0].len();
    (0..k)
        .map(|j| entries.iter().zip(mix).map(|(r, m)| m * r[j]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `min_i Σ_j R_ij q_j`
pub fn column_mix_value(entries: &[Vec<f64>], prior: &[f64]) -> f64 {
    entries
        .iter()
        .map(|r| r.iter().zip(prior).map(|(a, b)| a * b).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

fn clean_simplex(v: &mut [f64]) {
    v.iter_mut().for_each(|x| *x = x.max(0.0));
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        v.iter_mut().for_each(|x| *x /= total);
    }
}

/// Exact minimizer LP: `min v  s.t.  Σ_i m_i R_ij ≤ v, Σ m = 1, m ≥ 0`.
/// Entries are shifted to be at least 1 so that `v` can be a nonnegative
/// variable. The maximizer's optimal strategy is read off the duals.
fn lp_solve(entries: &[Vec<f64>]) -> Result<(f64, Vec<f64>, Vec<f64>, usize)> {
    let n = entries.len();
    let k = entries[0].len();
    let min = entries.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let shift = 1.0 - min;
    // variables: m (n), slack (k), v
    let mut lp = LinearProgram::new(n + k + 1);
    lp.cost[n + k] = 1.0;
    for j in 0..k {
        let mut row = vec![0.0; n + k + 1];
        for (i, r) in entries.iter().enumerate() {
            row[i] = r[j] + shift;
        }
        row[n + j] = 1.0;
        row[n + k] = -1.0;
        lp.add_row(row, 0.0);
    }
    let mut simplex_row = vec![0.0; n + k + 1];
    simplex_row[..n].iter_mut().for_each(|x| *x = 1.0);
    lp.add_row(simplex_row, 1.0);
    let sol = lp.solve()?;
    let mut mix = sol.x[..n].to_vec();
    clean_simplex(&mut mix);
    let mut prior: Vec<f64> = sol.duals[..k].iter().map(|y| -y).collect();
    clean_simplex(&mut prior);
    Ok((sol.objective - shift, mix, prior, sol.pivots))
}

/// Cutting-plane LP over the prior simplex:
/// `max w  s.t.  w ≤ Σ_j q_j R_cj for every cut c, Σ q = 1, q ≥ 0`.
fn lp_max_min(cuts: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
    let n = cuts.len();
    let k = cuts[0].len();
    let min = cuts.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let shift = 1.0 - min;
    // variables: q (k), slack (n), w
    let mut lp = LinearProgram::new(k + n + 1);
    lp.cost[k + n] = -1.0;
    for (c, r) in cuts.iter().enumerate() {
        let mut row = vec![0.0; k + n + 1];
        for j in 0..k {
            row[j] = r[j] + shift;
        }
        row[k + c] = -1.0;
        row[k + n] = -1.0;
        lp.add_row(row, 0.0);
    }
    let mut simplex_row = vec![0.0; k + n + 1];
    simplex_row[..k].iter_mut().for_each(|x| *x = 1.0);
    lp.add_row(simplex_row, 1.0);
    let sol = lp.solve()?;
    let mut q = sol.x[..k].to_vec();
    clean_simplex(&mut q);
    Ok((-sol.objective - shift, q))
}

/// Solves an explicit game: exact LP within `lp_cap` rows, fictitious play
/// beyond.
pub fn solve_game(entries: &[Vec<f64>], opts: &GameOptions) -> Result<GameSolution> {
    check_matrix(entries)?;
    if entries.len() <= opts.lp_cap {
        let (value, mix, prior, pivots) = lp_solve(entries)?;
        let upper = row_mix_value(entries, &mix);
        let lower = column_mix_value(entries, &prior);
        return Ok(GameSolution {
            value,
            mixed_policy: mix,
            least_favorable_prior: prior,
            upper,
            lower,
            duality_gap: upper - lower,
            method: SolveMethod::ExactLp,
            iterations: pivots,
            converged: true,
        });
    }
    Ok(fictitious_play(entries, opts))
}

/// Simultaneous fictitious play with averaged iterates; the gap is checked
/// every 100 iterations.
pub fn fictitious_play(entries: &[Vec<f64>], opts: &GameOptions) -> GameSolution {
    let n = entries.len();
    let k = entries[0].len();
    let mut row_counts = vec![0.0; n];
    let mut col_counts = vec![0.0; k];
    // cumulative payoffs against the opponent's empirical play
    let mut row_payoff = vec![0.0; n];
    let mut col_payoff = vec![0.0; k];
    let argmin = |v: &[f64]| {
        let mut best = 0;
        for (i, &x) in v.iter().enumerate() {
            if x < v[best] {
                best = i;
            }
        }
        best
    };
    let argmax = |v: &[f64]| {
        let mut best = 0;
        for (i, &x) in v.iter().enumerate() {
            if x > v[best] {
                best = i;
            }
        }
        best
    };
    let mut best: Option<GameSolution> = None;
    let mut iterations = 0;
    while iterations < opts.max_iterations.max(1) {
        iterations += 1;
        let i = argmin(&row_payoff);
        let j = argmax(&col_payoff);
        row_counts[i] += 1.0;
        col_counts[j] += 1.0;
        for (r, row) in row_payoff.iter_mut().zip(entries) {
            *r += row[j];
        }
        for (c, p) in col_payoff.iter_mut().enumerate() {
            *p += entries[i][c];
        }
        if iterations % 100 == 0 || iterations == opts.max_iterations {
            let mix: Vec<f64> = row_counts.iter().map(|c| c / iterations as f64).collect();
            let prior: Vec<f64> = col_counts.iter().map(|c| c / iterations as f64).collect();
            let upper = row_mix_value(entries, &mix);
            let lower = column_mix_value(entries, &prior);
            let gap = upper - lower;
            if best.as_ref().is_none_or(|b| gap < b.duality_gap) {
                best = Some(GameSolution {
                    value: 0.5 * (upper + lower),
                    mixed_policy: mix,
                    least_favorable_prior: prior,
                    upper,
                    lower,
                    duality_gap: gap,
                    method: SolveMethod::FictitiousPlay,
                    iterations,
                    converged: gap <= opts.tolerance,
                });
            }
            if gap <= opts.tolerance {
                break;
            }
        }
    }
    let mut out = best.expect("at least one gap evaluation");
    out.iterations = iterations;
    out
}

/// Largest complementary-slackness violation of a solution: support rows
/// must attain the lower value and support columns the upper one.
pub fn complementary_slackness(entries: &[Vec<f64>], sol: &GameSolution) -> f64 {
    let k = entries[0].len();
    let mut worst: f64 = 0.0;
    for (row, &m) in entries.iter().zip(&sol.mixed_policy) {
        if m > 1e-9 {
            let v: f64 = row.iter().zip(&sol.least_favorable_prior).map(|(a, b)| a * b).sum();
            worst = worst.max((v - sol.value).abs());
        }
    }
    for j in 0..k {
        if sol.least_favorable_prior[j] > 1e-9 {
            let v: f64 = entries.iter().zip(&sol.mixed_policy).map(|(r, m)| m * r[j]).sum();
            worst = worst.max((v - sol.value).abs());
        }
    }
    worst
}

/// A mixed policy over an explicit catalog together with its game solution.
#[derive(Debug, Clone)]
pub struct MinimaxSolution {
    pub game: GameSolution,
    pub catalog: Vec<HistoryPolicy>,
    /// Regret vectors of the catalog, `[policy][param]`.
    pub entries: Vec<Vec<f64>>,
}

impl MinimaxSolution {
    /// Policies with positive weight.
    pub fn support(&self) -> impl Iterator<Item = (&HistoryPolicy, f64)> {
        self.catalog
            .iter()
            .zip(&self.game.mixed_policy)
            .filter(|(_, &w)| w > 0.0)
            .map(|(p, &w)| (p, w))
    }
}

/// Minimax regret `𝔐` over mixed policies.
pub fn minimax_regret(model: &ExactModel<'_>) -> Result<MinimaxSolution> {
    let tree = model.tree()?;
    if policy_count(tree) <= model.caps().lp_policies as u128 {
        let m = build_regret_matrix(model)?;
        let game = solve_game(
            &m.entries,
            &GameOptions {
                lp_cap: usize::MAX,
                ..Default::default()
            },
        )?;
        return Ok(MinimaxSolution {
            game,
            catalog: m.catalog,
            entries: m.entries,
        });
    }
    column_generation(model)
}

fn initial_catalog(model: &ExactModel<'_>) -> Result<Vec<HistoryPolicy>> {
    let tree = model.tree()?;
    let mut catalog: Vec<HistoryPolicy> = Vec::new();
    for p in 0..model.n_params() {
        let pol = HistoryPolicy::from_stationary(tree, &model.optimum(p).map);
        if !catalog.contains(&pol) {
            catalog.push(pol);
        }
    }
    let bayes = bayes_optimal_policy(model, &Prior::uniform(model.n_params()))?.policy;
    if !catalog.contains(&bayes) {
        catalog.push(bayes);
    }
    Ok(catalog)
}

fn column_generation(model: &ExactModel<'_>) -> Result<MinimaxSolution> {
    let mut catalog = initial_catalog(model)?;
    let mut entries = catalog
        .iter()
        .map(|p| regret_vector(model, p))
        .collect::<Result<Vec<_>>>()?;
    for round in 1..=MAX_ORACLE_ROUNDS {
        let (value, mix, prior, _) = lp_solve(&entries)?;
        let br = bayes_optimal_policy(model, &Prior::new(prior.clone())?)?;
        let lower = br.bayes_regret;
        let scale = 1.0 + value.abs();
        if lower >= value - ORACLE_TOL * scale || catalog.contains(&br.policy) {
            let upper = row_mix_value(&entries, &mix);
            return Ok(MinimaxSolution {
                game: GameSolution {
                    value,
                    mixed_policy: mix,
                    least_favorable_prior: prior,
                    upper,
                    lower,
                    duality_gap: upper - lower,
                    method: SolveMethod::ColumnGeneration,
                    iterations: round,
                    converged: true,
                },
                catalog,
                entries,
            });
        }
        entries.push(regret_vector(model, &br.policy)?);
        catalog.push(br.policy);
    }
    Err(Error::CapExceeded {
        what: "column-generation rounds",
        count: MAX_ORACLE_ROUNDS as u128 + 1,
        cap: MAX_ORACLE_ROUNDS as u128,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseMbr {
    /// `F(q)` at the returned prior, evaluated exactly.
    pub value: f64,
    pub prior: Vec<f64>,
    /// Optimal value of the last cutting-plane LP, an upper bound on the
    /// supremum.
    pub upper: f64,
    pub method: SolveMethod,
    pub iterations: usize,
}

/// `𝔉* = sup_q F(q)` by Kelley's cutting-plane method on the maximizer
/// LP. The oracle scans the explicit catalog when it is small enough and
/// uses the Bayes-optimal policy otherwise.
pub fn worst_case_mbr(model: &ExactModel<'_>) -> Result<WorstCaseMbr> {
    let tree = model.tree()?;
    let explicit = if policy_count(tree) <= model.caps().lp_policies as u128 {
        Some(build_regret_matrix(model)?.entries)
    } else {
        None
    };
    let oracle = |q: &[f64]| -> Result<(f64, Vec<f64>)> {
        match &explicit {
            Some(rows) => {
                let mut best = f64::INFINITY;
                let mut arg = 0;
                for (i, r) in rows.iter().enumerate() {
                    let v: f64 = r.iter().zip(q).map(|(a, b)| a * b).sum();
                    if v < best {
                        best = v;
                        arg = i;
                    }
                }
                Ok((best, rows[arg].clone()))
            }
            None => {
                let br = bayes_optimal_policy(model, &Prior::new(q.to_vec())?)?;
                Ok((br.bayes_regret, regret_vector(model, &br.policy)?))
            }
        }
    };
    let k = model.n_params();
    let uniform = vec![1.0 / k as f64; k];
    let mut cuts = vec![oracle(&uniform)?.1];
    let mut best_value = f64::NEG_INFINITY;
    let mut best_prior = uniform;
    for round in 1..=MAX_ORACLE_ROUNDS {
        let (upper, q) = lp_max_min(&cuts)?;
        let (f, cut) = oracle(&q)?;
        if f > best_value {
            best_value = f;
            best_prior = q;
        }
        if f >= upper - ORACLE_TOL * (1.0 + upper.abs()) || cuts.contains(&cut) {
            return Ok(WorstCaseMbr {
                value: best_value,
                prior: best_prior,
                upper,
                method: SolveMethod::CuttingPlane,
                iterations: round,
            });
        }
        cuts.push(cut);
    }
    Err(Error::CapExceeded {
        what: "cutting-plane rounds",
        count: MAX_ORACLE_ROUNDS as u128 + 1,
        cap: MAX_ORACLE_ROUNDS as u128,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportEntry {
    pub weight: f64,
    /// Action per history-tree node, `null` off the policy's own path.
    pub actions: Vec<Option<u16>>,
    pub regret: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityCertificate {
    pub minimax: f64,
    pub worst_case_mbr: f64,
    /// `|𝔐 − 𝔉*|`
    pub gap: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// False when the answer came from an anytime solver whose own gap
    /// exceeds the tolerance.
    pub conclusive: bool,
    pub minimax_method: SolveMethod,
    pub minimax_internal_gap: f64,
    pub worst_case_method: SolveMethod,
    pub mixed_policy: Vec<SupportEntry>,
    pub least_favorable_prior: Vec<f64>,
    pub worst_case_prior: Vec<f64>,
    pub instance_hash: String,
    pub seed: Option<u64>,
}

/// Computes `𝔐` and `𝔉*` by independent routes and compares them.
pub fn verify_duality(model: &ExactModel<'_>, tolerance: f64) -> Result<DualityCertificate> {
    let mm = minimax_regret(model)?;
    let wc = worst_case_mbr(model)?;
    let minimax = mm.game.upper;
    let gap = (minimax - wc.value).abs();
    let mixed_policy = mm
        .catalog
        .iter()
        .zip(&mm.game.mixed_policy)
        .zip(&mm.entries)
        .filter(|((_, &w), _)| w > 0.0)
        .map(|((p, &w), r)| SupportEntry {
            weight: w,
            actions: (0..p.len()).map(|i| p.action(i).map(|a| a as u16)).collect(),
            regret: r.clone(),
        })
        .collect();
    let conclusive = mm.game.converged;
    Ok(DualityCertificate {
        minimax,
        worst_case_mbr: wc.value,
        gap,
        tolerance,
        pass: conclusive && gap <= tolerance,
        conclusive,
        minimax_method: mm.game.method,
        minimax_internal_gap: mm.game.duality_gap,
        worst_case_method: wc.method,
        mixed_policy,
        least_favorable_prior: mm.game.least_favorable_prior,
        worst_case_prior: wc.prior,
        instance_hash: instance_hash(model.instance()),
        seed: None,
    })
}
