//! Choosing keep probabilities and node centers under a budget.
//!
//! The design problem: minimize the closed-form error of the variable-size
//! encoder subject to a bound `B` on the total expected number of kept
//! entries, `sum_ij p(i,j) <= B`. For fixed centers the problem is convex and
//! solved exactly by water-filling: `p(i,j) = min(1, a(i,j)/theta)` with
//! `a(i,j) = |x(i,j) - mu(i)|` and the level `theta` chosen so the
//! probabilities sum to `B`. For free centers the joint problem is not
//! convex; [`alternating_minimize`] descends by exact block updates
//! (weighted-mean centers, then water-filling) until the objective stalls.

use crate::analysis::mse_closed_variable;
use crate::codec::EncoderParams;
use crate::data::Dataset;
use crate::{Error, Result};

/// Whether the node centers are part of the optimization.
#[derive(Debug, Clone, PartialEq)]
pub enum CentersMode {
    /// Optimize the centers jointly with the probabilities.
    Free,
    /// Keep the given per-node centers.
    Fixed(Vec<f64>),
}

/// A dataset, a total entry budget, and how to treat the centers.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetProblem {
    data: Dataset,
    budget: f64,
    centers_mode: CentersMode,
    per_node: Option<Vec<f64>>,
}

impl BudgetProblem {
    pub fn new(data: Dataset, budget: f64) -> Result<Self> {
        let cap = (data.n() * data.d()) as f64;
        if !(budget > 0.0 && budget <= cap) {
            return Err(Error::InvalidArgument(format!("budget {budget} outside (0, {cap}]")));
        }
        Ok(BudgetProblem { data, budget, centers_mode: CentersMode::Free, per_node: None })
    }

    pub fn with_fixed_centers(mut self, centers: Vec<f64>) -> Result<Self> {
        if centers.len() != self.data.n() {
            return Err(Error::DimensionMismatch { expected: self.data.n(), got: centers.len() });
        }
        if let Some(c) = centers.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite center {c}")));
        }
        self.centers_mode = CentersMode::Fixed(centers);
        Ok(self)
    }

    /// Earmark a budget for every node; they must add up to the total.
    pub fn with_per_node(mut self, budgets: Vec<f64>) -> Result<Self> {
        if budgets.len() != self.data.n() {
            return Err(Error::DimensionMismatch { expected: self.data.n(), got: budgets.len() });
        }
        if budgets.iter().any(|b| !(*b > 0.0)) {
            return Err(Error::InvalidArgument("per-node budgets must be positive".into()));
        }
        let total: f64 = budgets.iter().sum();
        if (total - self.budget).abs() > 1e-9 * self.budget {
            return Err(Error::InvalidArgument(format!(
                "per-node budgets sum to {total}, not the total budget {}",
                self.budget
            )));
        }
        self.per_node = Some(budgets);
        Ok(self)
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn centers_mode(&self) -> &CentersMode {
        &self.centers_mode
    }

    pub fn per_node(&self) -> Option<&[f64]> {
        self.per_node.as_deref()
    }
}

/// An optimizer result: the chosen parameters, their exact closed-form error,
/// and how the search went. `trace` records the objective after the initial
/// probability step and after every half-step since.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub params: EncoderParams,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<f64>,
}

/// Exact solution of the fixed-centers subproblem by water-filling over the
/// deviations `a`: `p_i = min(1, a_i / theta)` with `theta` the unique level
/// at which the probabilities sum to `budget`. Zero deviations get `p = 0`
/// and do not count toward the feasible support.
///
/// Ties at the clamp boundary resolve toward the lower index; the objective
/// does not depend on the choice. When `budget <= sum(a)/max(a)` nothing
/// clamps and the solution is the proportional rule `p_i = a_i * budget / sum(a)`.
pub fn optimal_probs_given_centers(a: &[f64], budget: f64) -> Result<Vec<f64>> {
    if let Some(bad) = a.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidArgument(format!("deviation {bad} must be finite and >= 0")));
    }
    let mut idx: Vec<usize> = (0..a.len()).filter(|&i| a[i] > 0.0).collect();
    let support = idx.len();
    if !(budget > 0.0 && budget <= support as f64) {
        return Err(Error::InvalidArgument(format!(
            "budget {budget} outside (0, support={support}]"
        )));
    }
    idx.sort_by(|&i, &j| a[j].partial_cmp(&a[i]).unwrap().then(i.cmp(&j)));
    let sorted: Vec<f64> = idx.iter().map(|&i| a[i]).collect();
    let mut suffix = vec![0.0; support + 1];
    for t in (0..support).rev() {
        suffix[t] = suffix[t + 1] + sorted[t];
    }
    // With the t largest deviations clamped at 1, the level is
    // theta = (remaining mass) / (remaining budget); it is consistent iff it
    // separates the clamped entries from the rest.
    let mut probs = vec![0.0; a.len()];
    for t in 0..support {
        let rem = budget - t as f64;
        if rem <= 0.0 {
            break;
        }
        let theta = suffix[t] / rem;
        if (t == 0 || sorted[t - 1] >= theta) && sorted[t] <= theta {
            for (rank, &i) in idx.iter().enumerate() {
                probs[i] = if rank < t { 1.0 } else { (a[i] / theta).min(1.0) };
            }
            return Ok(probs);
        }
    }
    Err(Error::InvalidArgument("no consistent water level".into()))
}

/// Water-filling with the budget capped at the feasible support, for use
/// inside the alternating loop where the support can shrink as centers move.
fn capped_probs(a: &[f64], budget: f64) -> Result<Vec<f64>> {
    let support = a.iter().filter(|v| **v > 0.0).count();
    if support == 0 {
        return Ok(vec![0.0; a.len()]);
    }
    optimal_probs_given_centers(a, budget.min(support as f64))
}

fn deviations(x: &Dataset, centers: &[f64]) -> Vec<f64> {
    x.rows()
        .zip(centers)
        .flat_map(|(row, &c)| row.iter().map(move |v| (v - c).abs()))
        .collect()
}

/// Best centers for given keep probabilities: the weighted row mean with
/// weights `w = 1/p - 1`.
///
/// Two degenerate rows: where every `p = 1` the objective ignores the center,
/// so the arithmetic row mean is returned; where some `p = 0` the center is
/// pinned to those coordinates (their average, though they coincide whenever
/// the probabilities came from water-filling).
pub fn optimal_centers_given_probs(x: &Dataset, probs: &[f64]) -> Result<Vec<f64>> {
    if probs.len() != x.n() * x.d() {
        return Err(Error::DimensionMismatch { expected: x.n() * x.d(), got: probs.len() });
    }
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidArgument(format!("probability {p} outside [0, 1]")));
    }
    let mut centers = Vec::with_capacity(x.n());
    for (i, row) in x.rows().enumerate() {
        let p_row = &probs[i * x.d()..(i + 1) * x.d()];
        let pinned: Vec<f64> = row
            .iter()
            .zip(p_row)
            .filter(|(_, p)| **p == 0.0)
            .map(|(v, _)| *v)
            .collect();
        if !pinned.is_empty() {
            centers.push(pinned.iter().sum::<f64>() / pinned.len() as f64);
            continue;
        }
        let wsum: f64 = p_row.iter().map(|p| 1.0 / p - 1.0).sum();
        if wsum == 0.0 {
            centers.push(row.iter().sum::<f64>() / x.d() as f64);
        } else {
            let wx: f64 = row.iter().zip(p_row).map(|(v, p)| (1.0 / p - 1.0) * v).sum();
            centers.push(wx / wsum);
        }
    }
    Ok(centers)
}

/// Alternating minimization over centers and probabilities.
///
/// Starts from the row means (or the fixed centers), water-fills, then
/// repeats exact center and probability steps until the relative objective
/// decrease over a full iteration drops below `tol` or `max_iters` is
/// reached. Every half-step minimizes the true objective over its block, so
/// the trace is non-increasing; non-convergence is reported through the
/// flag, not an error, since the joint problem is not convex.
///
/// With fixed centers this is a single probability step: the exact optimum.
pub fn alternating_minimize(
    problem: &BudgetProblem,
    tol: f64,
    max_iters: usize,
) -> Result<Solution> {
    if !(tol > 0.0) || max_iters == 0 {
        return Err(Error::InvalidArgument(format!(
            "tol {tol} must be positive and max_iters {max_iters} nonzero"
        )));
    }
    let x = &problem.data;
    let (n, d) = (x.n(), x.d());
    let mut centers = match &problem.centers_mode {
        CentersMode::Fixed(c) => c.clone(),
        CentersMode::Free => x.row_means(),
    };
    let mut probs = capped_probs(&deviations(x, &centers), problem.budget)?;
    let mut params = EncoderParams::new(n, d, probs.clone(), centers.clone())?;
    let mut objective = mse_closed_variable(x, &params)?;
    let mut trace = vec![objective];

    if let CentersMode::Fixed(_) = problem.centers_mode {
        return Ok(Solution { params, objective, iterations: 0, converged: true, trace });
    }

    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=max_iters {
        iterations = it;
        centers = optimal_centers_given_probs(x, &probs)?;
        let half = EncoderParams::new(n, d, probs.clone(), centers.clone())?;
        let half_objective = mse_closed_variable(x, &half)?;
        debug_assert!(half_objective <= objective * (1.0 + 1e-9) + f64::MIN_POSITIVE);
        trace.push(half_objective);

        probs = capped_probs(&deviations(x, &centers), problem.budget)?;
        params = EncoderParams::new(n, d, probs.clone(), centers.clone())?;
        let new_objective = mse_closed_variable(x, &params)?;
        debug_assert!(new_objective <= half_objective * (1.0 + 1e-9) + f64::MIN_POSITIVE);
        trace.push(new_objective);

        let drop = objective - new_objective;
        let scale = objective.max(f64::MIN_POSITIVE);
        objective = new_objective;
        if drop < tol * scale {
            converged = true;
            break;
        }
    }
    Ok(Solution { params, objective, iterations, converged, trace })
}

/// Solve each node's budget problem independently with its earmarked budget.
///
/// The pooled problem can shift budget between nodes, so its optimum is
/// never worse than this split solution; the gap is the price of
/// separability.
pub fn per_node_split(problem: &BudgetProblem, tol: f64, max_iters: usize) -> Result<Solution> {
    let budgets = problem
        .per_node()
        .ok_or_else(|| Error::InvalidArgument("per-node budgets not set".into()))?;
    let x = &problem.data;
    let d = x.d();
    let mut probs = Vec::with_capacity(x.n() * d);
    let mut centers = Vec::with_capacity(x.n());
    let mut iterations = 0;
    let mut converged = true;
    for (i, row) in x.rows().enumerate() {
        let sub_data = Dataset::new(1, d, row.to_vec())?;
        let mut sub = BudgetProblem::new(sub_data, budgets[i])?;
        if let CentersMode::Fixed(c) = &problem.centers_mode {
            sub = sub.with_fixed_centers(vec![c[i]])?;
        }
        let sol = alternating_minimize(&sub, tol, max_iters)?;
        probs.extend_from_slice(sol.params.probs_row(0));
        centers.push(sol.params.center(0));
        iterations = iterations.max(sol.iterations);
        converged &= sol.converged;
    }
    let params = EncoderParams::new(x.n(), d, probs, centers)?;
    let objective = mse_closed_variable(x, &params)?;
    Ok(Solution { params, objective, iterations, converged, trace: vec![objective] })
}
