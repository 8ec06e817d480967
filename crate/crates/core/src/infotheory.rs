//! Discrete entropy, divergence, mutual information and optimal transport.
//! All logarithms are natural.

use serde::{Deserialize, Serialize};

use crate::env_model::{check_simplex, MetricTable};
use crate::error::{Error, Result};
use crate::simplex::LinearProgram;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDist {
    masses: Vec<f64>,
}

impl DiscreteDist {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        check_simplex(&masses).map_err(Error::invalid)?;
        Ok(Self { masses })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            masses: vec![1.0 / n as f64; n],
        }
    }

    pub fn point(n: usize, i: usize) -> Self {
        let mut masses = vec![0.0; n];
        masses[i] = 1.0;
        Self { masses }
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }
}

/// `−Σ p log p`, with `0 log 0 = 0`.
pub fn entropy(p: &[f64]) -> f64 {
    0.0 - p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

/// `Σ p log(p / q)`; `+∞` when `p` puts mass where `q` has none.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "KL divergence needs a shared support");
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            total += a * (a / b).ln();
        }
    }
    total.max(0.0)
}

/// `KL(joint ‖ row marginal ⊗ column marginal)`.
pub fn mutual_information(joint: &[Vec<f64>]) -> f64 {
    let rows: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
    let cols = joint.first().map_or(0, Vec::len);
    let colm: Vec<f64> = (0..cols).map(|j| joint.iter().map(|r| r[j]).sum()).collect();
    let mut total = 0.0;
    for (i, r) in joint.iter().enumerate() {
        for (j, &x) in r.iter().enumerate() {
            if x > 0.0 {
                total += x * (x / (rows[i] * colm[j])).ln();
            }
        }
    }
    total.max(0.0)
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    /// `joint[i][j]`: mass moved from `p[i]` to `q[j]`.
    pub joint: Vec<Vec<f64>>,
    pub cost: f64,
}

/// Exact optimal transport between `p` and `q` under `cost[i][j]`, by the
/// transportation LP. Zero-mass points are dropped before solving.
pub fn optimal_transport(p: &[f64], q: &[f64], cost: &[Vec<f64>]) -> Result<Coupling> {
    if cost.len() != p.len() || cost.iter().any(|r| r.len() != q.len()) {
        return Err(Error::invalid("cost matrix does not match the supports"));
    }
    let rows: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 0.0).collect();
    let cols: Vec<usize> = (0..q.len()).filter(|&j| q[j] > 0.0).collect();
    let mut joint = vec![vec![0.0; q.len()]; p.len()];
    if rows.is_empty() || cols.is_empty() {
        return Ok(Coupling { joint, cost: 0.0 });
    }
    if rows.len() == 1 || cols.len() == 1 {
        // the coupling is forced
        let mut total = 0.0;
        for &i in &rows {
            for &j in &cols {
                let mass = if rows.len() == 1 { q[j] } else { p[i] };
                joint[i][j] = mass;
                total += mass * cost[i][j];
            }
        }
        return Ok(Coupling { joint, cost: total });
    }
    let (n, m) = (rows.len(), cols.len());
    let mut lp = LinearProgram::new(n * m);
    for (a, &i) in rows.iter().enumerate() {
        for (b, &j) in cols.iter().enumerate() {
            lp.cost[a * m + b] = cost[i][j];
        }
    }
    for (a, &i) in rows.iter().enumerate() {
        let mut row = vec![0.0; n * m];
        row[a * m..(a + 1) * m].iter_mut().for_each(|x| *x = 1.0);
        lp.add_row(row, p[i]);
    }
    for (b, &j) in cols.iter().enumerate() {
        let mut row = vec![0.0; n * m];
        for a in 0..n {
            row[a * m + b] = 1.0;
        }
        lp.add_row(row, q[j]);
    }
    let sol = lp.solve()?;
    for (a, &i) in rows.iter().enumerate() {
        for (b, &j) in cols.iter().enumerate() {
            joint[i][j] = sol.x[a * m + b].max(0.0);
        }
    }
    Ok(Coupling {
        joint,
        cost: sol.objective.max(0.0),
    })
}

/// Wasserstein distance between laws on `outcome × action` pairs, indexed
/// like the metric table (`y * n_actions + a`).
pub fn wasserstein(p: &DiscreteDist, q: &DiscreteDist, metric: &MetricTable) -> Result<Coupling> {
    let n = metric.n_outcomes() * metric.n_actions();
    if p.len() != n || q.len() != n {
        return Err(Error::invalid(format!(
            "distributions have {} and {} points, metric covers {n}",
            p.len(),
            q.len()
        )));
    }
    let k = metric.n_actions();
    let cost: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| metric.between(i / k, i % k, j / k, j % k)).collect())
        .collect();
    optimal_transport(p.masses(), q.masses(), &cost)
}
