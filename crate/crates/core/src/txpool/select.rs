//! Budgeted transaction selection: LP relaxation plus randomized rounding.
//!
//! In stochastic mode the chance constraints on total compute, total size
//! and history depth are each monotone in a linear function of the
//! selection, so they invert into plain linear budgets:
//!
//! * `P(Σα_j, C/θ) ≥ q1` becomes `Σα_j x_j ≤ A*`,
//! * `Φ((S − Στ_j)/√(ωΣτ_j)) ≥ q2` becomes `Στ_j x_j ≤ T*`,
//! * `Π Q(D+1, λ_j) ≥ q3` becomes `Σ −ln Q(D+1, λ_j) x_j ≤ −ln q3`.
//!
//! Deterministic mode uses the realized costs against C and S and drops
//! any transaction whose depth exceeds D.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::lp::solve_box_lp;
use super::special::{lower_gamma, normal_quantile, upper_gamma};
use super::{compute_rewards, Transaction, TxError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMode {
    Stochastic,
    Deterministic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionProblem {
    /// C.
    pub compute_budget: f64,
    /// S, the byte capacity of one block.
    pub size_budget: f64,
    /// D, in blocks.
    pub depth_limit: u64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    /// θ, the gamma scale of compute costs.
    pub gamma_scale: f64,
    /// ω, so that a transaction of mean size τ has size variance ωτ.
    pub size_variance: f64,
    pub mode: SelectionMode,
}

impl Default for SelectionProblem {
    fn default() -> Self {
        SelectionProblem {
            compute_budget: 6.7e6,
            size_budget: 1.2e6,
            depth_limit: 0,
            q1: 0.9,
            q2: 0.9,
            q3: 0.9,
            gamma_scale: 42_000.0,
            size_variance: 1000.0 * 1000.0 / 3000.0,
            mode: SelectionMode::Stochastic,
        }
    }
}

impl SelectionProblem {
    pub fn validate(&self) -> Result<(), TxError> {
        let bad = |what: String| Err(TxError::Problem(what));
        for (name, q) in [("q1", self.q1), ("q2", self.q2), ("q3", self.q3)] {
            if !(q > 0.0 && q < 1.0) {
                return bad(format!("{name} must lie in (0, 1), got {q}"));
            }
        }
        if !(self.compute_budget > 0.0 && self.compute_budget.is_finite()) {
            return bad(format!("compute budget must be positive, got {}", self.compute_budget));
        }
        if !(self.size_budget > 0.0 && self.size_budget.is_finite()) {
            return bad(format!("size budget must be positive, got {}", self.size_budget));
        }
        if !(self.gamma_scale > 0.0 && self.gamma_scale.is_finite()) {
            return bad(format!("gamma scale must be positive, got {}", self.gamma_scale));
        }
        if !(self.size_variance >= 0.0 && self.size_variance.is_finite()) {
            return bad(format!("size variance factor must be non-negative, got {}", self.size_variance));
        }
        Ok(())
    }
}

/// Linear packing constraints `costs[k] · x ≤ limits[k]` plus an
/// eligibility mask for transactions that may never be selected.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearBudgets {
    pub costs: Vec<Vec<f64>>,
    pub limits: Vec<f64>,
    pub eligible: Vec<bool>,
}

impl LinearBudgets {
    pub fn len(&self) -> usize {
        self.eligible.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eligible.is_empty()
    }

    /// Per-row usage, summed in index order.
    pub fn usage(&self, selected: &[bool]) -> Vec<f64> {
        self.costs
            .iter()
            .map(|row| row.iter().zip(selected).filter(|(_, s)| **s).fold(0.0, |acc, (c, _)| acc + c))
            .collect()
    }

    pub fn is_feasible(&self, selected: &[bool]) -> bool {
        selected.iter().zip(&self.eligible).all(|(s, e)| !s || *e)
            && self.usage(selected).iter().zip(&self.limits).all(|(u, b)| u <= b)
    }

    /// `Σ_k cost_kj / limit_k`, the share of all budgets item `j` consumes.
    fn normalized_cost(&self, j: usize) -> f64 {
        self.costs
            .iter()
            .zip(&self.limits)
            .map(|(row, &b)| match row[j] {
                c if c == 0.0 => 0.0,
                c if b > 0.0 => c / b,
                _ => f64::INFINITY,
            })
            .sum()
    }
}

/// A* = sup{a : P(a, C/θ) ≥ q1}, by bisection since P falls as `a` grows.
pub fn compute_shape_budget(q1: f64, budget_over_scale: f64) -> Result<f64, TxError> {
    if !(q1 > 0.0 && q1 < 1.0) {
        return Err(TxError::Problem(format!("q1 must lie in (0, 1), got {q1}")));
    }
    if !(budget_over_scale > 0.0 && budget_over_scale.is_finite()) {
        return Err(TxError::EmptyFeasible);
    }
    let ok = |a: f64| lower_gamma(a, budget_over_scale).map(|p| p >= q1);
    let mut lo = 0.0;
    let mut hi = budget_over_scale.max(1.0);
    while ok(hi)? {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ok(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo > 0.0 {
        Ok(lo)
    } else {
        Err(TxError::EmptyFeasible)
    }
}

/// T* solving `S − T = z√(ωT)` for `T > 0`, with `z = Φ⁻¹(q2)`.
pub fn size_mean_budget(q2: f64, size_budget: f64, variance_factor: f64) -> Result<f64, TxError> {
    let z = normal_quantile(q2)?;
    let k = z * variance_factor.sqrt();
    // u = √T solves u² + k u − S = 0.
    let u = (-k + (k * k + 4.0 * size_budget).sqrt()) / 2.0;
    let t = if k == 0.0 { size_budget } else { u * u };
    if t > 0.0 && t.is_finite() {
        Ok(t)
    } else {
        Err(TxError::EmptyFeasible)
    }
}

/// −ln Q(D+1, λ) = −ln P(Poisson(λ) ≤ D); infinite when the tail underflows.
pub fn depth_cost(depth_limit: u64, depth_mean: f64) -> Result<f64, TxError> {
    if depth_mean == 0.0 {
        return Ok(0.0);
    }
    let q = upper_gamma(depth_limit as f64 + 1.0, depth_mean)?;
    Ok(if q > 0.0 { (-q.ln()).max(0.0) } else { f64::INFINITY })
}

pub fn reduce_stochastic_to_linear(problem: &SelectionProblem, pool: &[Transaction]) -> Result<LinearBudgets, TxError> {
    problem.validate()?;
    let a_star = compute_shape_budget(problem.q1, problem.compute_budget / problem.gamma_scale)?;
    let t_star = size_mean_budget(problem.q2, problem.size_budget, problem.size_variance)?;
    let mut depth = Vec::with_capacity(pool.len());
    let mut eligible = Vec::with_capacity(pool.len());
    for tx in pool {
        let cost = depth_cost(problem.depth_limit, tx.depth_mean)?;
        eligible.push(cost.is_finite());
        depth.push(if cost.is_finite() { cost } else { 0.0 });
    }
    Ok(LinearBudgets {
        costs: vec![
            pool.iter().map(|t| t.compute_shape).collect(),
            pool.iter().map(|t| t.size_mean).collect(),
            depth,
        ],
        limits: vec![a_star, t_star, -problem.q3.ln()],
        eligible,
    })
}

pub fn deterministic_budgets(problem: &SelectionProblem, pool: &[Transaction]) -> Result<LinearBudgets, TxError> {
    problem.validate()?;
    Ok(LinearBudgets {
        costs: vec![pool.iter().map(|t| t.compute).collect(), pool.iter().map(|t| t.size).collect()],
        limits: vec![problem.compute_budget, problem.size_budget],
        eligible: pool.iter().map(|t| t.depth <= problem.depth_limit).collect(),
    })
}

/// Optimal fractional selection of the relaxed problem.
pub fn solve_relaxed(rewards: &[f64], budgets: &LinearBudgets) -> Result<Vec<f64>, TxError> {
    if rewards.len() != budgets.len() {
        return Err(TxError::Problem(format!("{} rewards for {} transactions", rewards.len(), budgets.len())));
    }
    let objective: Vec<f64> = rewards.iter().zip(&budgets.eligible).map(|(r, e)| if *e { *r } else { 0.0 }).collect();
    Ok(solve_box_lp(&objective, &budgets.costs, &budgets.limits)?.x)
}

/// Sets each `x_j` to 1 with probability `x_j`, then drops the selected
/// item with the lowest reward per normalized cost until every budget holds.
/// Unless `x` was already a feasible binary vector, leftover capacity is
/// then filled greedily by the same density.
pub fn randomized_round<R: Rng + ?Sized>(x: &[f64], budgets: &LinearBudgets, rewards: &[f64], rng: &mut R) -> Vec<bool> {
    let mut selected: Vec<bool> = x
        .iter()
        .map(|&p| {
            let u: f64 = rng.random();
            u < p
        })
        .collect();
    for (s, e) in selected.iter_mut().zip(&budgets.eligible) {
        *s &= *e;
    }
    let mut repaired = false;
    while !budgets.is_feasible(&selected) {
        repaired = true;
        let worst = (0..selected.len())
            .filter(|&j| selected[j])
            .map(|j| {
                let density = match budgets.normalized_cost(j) {
                    c if c == 0.0 => f64::INFINITY,
                    c => rewards[j] / c,
                };
                (j, density)
            })
            // Strict comparison keeps the lowest index among ties.
            .fold(None, |best: Option<(usize, f64)>, (j, d)| match best {
                Some((_, bd)) if bd <= d => best,
                _ => Some((j, d)),
            });
        match worst {
            Some((j, _)) => selected[j] = false,
            None => break,
        }
    }
    if x.iter().any(|&p| p > 0.0 && p < 1.0) || repaired {
        fill_residual(&mut selected, budgets, rewards);
    }
    selected
}

/// Adds unselected eligible items by descending reward density while they fit.
fn fill_residual(selected: &mut [bool], budgets: &LinearBudgets, rewards: &[f64]) {
    let mut order: Vec<(usize, f64)> = (0..selected.len())
        .filter(|&j| !selected[j] && budgets.eligible[j])
        .map(|j| (j, rewards[j] / budgets.normalized_cost(j)))
        .collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    for (j, _) in order {
        selected[j] = true;
        if !budgets.is_feasible(selected) {
            selected[j] = false;
        }
    }
}

/// Exact optimum over all subsets, for pools of at most 20 transactions.
pub fn brute_force_select(rewards: &[f64], budgets: &LinearBudgets) -> Result<Vec<bool>, TxError> {
    let n = budgets.len();
    if n > 20 {
        return Err(TxError::TooLarge(n));
    }
    if rewards.len() != n {
        return Err(TxError::Problem(format!("{} rewards for {n} transactions", rewards.len())));
    }
    struct Search<'a> {
        rewards: &'a [f64],
        budgets: &'a LinearBudgets,
        current: Vec<bool>,
        best: Vec<bool>,
        best_value: f64,
    }
    impl Search<'_> {
        // Sums grow in index order exactly as `LinearBudgets::usage` adds them.
        fn visit(&mut self, j: usize, usage: &[f64], value: f64) {
            if j == self.current.len() {
                if value > self.best_value {
                    self.best_value = value;
                    self.best.clone_from(&self.current);
                }
                return;
            }
            if self.budgets.eligible[j] {
                let next: Vec<f64> = usage.iter().zip(&self.budgets.costs).map(|(u, row)| u + row[j]).collect();
                if next.iter().zip(&self.budgets.limits).all(|(u, b)| u <= b) {
                    self.current[j] = true;
                    self.visit(j + 1, &next, value + self.rewards[j]);
                    self.current[j] = false;
                }
            }
            self.visit(j + 1, usage, value);
        }
    }
    let mut search = Search { rewards, budgets, current: vec![false; n], best: vec![false; n], best_value: 0.0 };
    search.visit(0, &vec![0.0; budgets.limits.len()], 0.0);
    Ok(search.best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Indices into the pool, ascending.
    pub chosen: Vec<usize>,
    pub rewards: Vec<f64>,
    /// Value of the relaxed optimum, an upper bound on the achievable reward.
    pub relaxed_objective: f64,
}

impl Selection {
    pub fn count(&self) -> usize {
        self.chosen.len()
    }

    pub fn reward(&self) -> f64 {
        self.chosen.iter().map(|&j| self.rewards[j]).sum()
    }
}

/// Rewards, budget construction, relaxation and rounding for one epoch.
/// An infeasible budget set yields an empty selection.
pub fn select_transactions<R: Rng + ?Sized>(
    pool: &[Transaction],
    problem: &SelectionProblem,
    rng: &mut R,
) -> Result<Selection, TxError> {
    problem.validate()?;
    if pool.is_empty() {
        return Ok(Selection { chosen: Vec::new(), rewards: Vec::new(), relaxed_objective: 0.0 });
    }
    let v: Vec<f64> = pool.iter().map(|t| t.vitality as f64).collect();
    let a: Vec<f64> = pool.iter().map(|t| t.age as f64).collect();
    let f: Vec<f64> = pool.iter().map(|t| t.fee).collect();
    let rewards = compute_rewards(&v, &a, &f)?;
    let budgets = match problem.mode {
        SelectionMode::Stochastic => reduce_stochastic_to_linear(problem, pool),
        SelectionMode::Deterministic => deterministic_budgets(problem, pool),
    };
    let budgets = match budgets {
        Ok(b) => b,
        Err(TxError::EmptyFeasible) => {
            return Ok(Selection { chosen: Vec::new(), rewards, relaxed_objective: 0.0 })
        }
        Err(e) => return Err(e),
    };
    let x = solve_relaxed(&rewards, &budgets)?;
    let relaxed_objective = x.iter().zip(&rewards).map(|(x, r)| x * r).sum();
    let selected = randomized_round(&x, &budgets, &rewards, rng);
    debug_assert!(budgets.is_feasible(&selected));
    let chosen = (0..pool.len()).filter(|&j| selected[j]).collect();
    Ok(Selection { chosen, rewards, relaxed_objective })
}
