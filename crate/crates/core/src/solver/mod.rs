//! TCP solving: complementary-support enumeration with multistart damped
//! Newton, exact sign-based refutation, a closed-form diagonal solver, and
//! the equal-rows composer.

mod newton;
mod refute;

pub use refute::Refutation;

use std::time::{Duration, Instant};

use itertools::Itertools;
use rand::Rng;
use rayon::prelude::*;

use crate::budget::{SearchBudget, MERGE_TOL};
use crate::error::{SolveError, TensorError};
use crate::linalg::{inf_dist, inf_norm};
use crate::monomial::MonomialForm;
use crate::tensor::{embed, gather, IndexSet, Tensor};

/// A tensor paired with its constant vector.
#[derive(Debug, Clone)]
pub struct TCPInstance {
    tensor: Tensor,
    q: Vec<f64>,
}

impl TCPInstance {
    pub fn new(tensor: Tensor, q: Vec<f64>) -> Result<Self, TensorError> {
        if q.len() != tensor.dim() {
            return Err(TensorError::DimMismatch {
                got: q.len(),
                expected: tensor.dim(),
            });
        }
        Ok(TCPInstance { tensor, q })
    }

    pub fn tensor(&self) -> &Tensor {
        &self.tensor
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn dim(&self) -> usize {
        self.tensor.dim()
    }
}

/// A nonnegative point accepted by the residual filter.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    pub support: IndexSet,
    pub slack: Vec<f64>,
    pub residual: f64,
}

impl Solution {
    /// Clamps near-zero negatives, recomputes the slack through `apply`, and
    /// accepts the point only if it passes the feasibility and residual
    /// filters.
    pub(crate) fn measure(
        tensor: &Tensor,
        q: &[f64],
        raw: &[f64],
        budget: &SearchBudget,
    ) -> Option<Solution> {
        let mut x = raw.to_vec();
        for v in &mut x {
            if !v.is_finite() || *v < -budget.feas_tol {
                return None;
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let ax = tensor.apply(&x).ok()?;
        let slack: Vec<f64> = ax.iter().zip(q).map(|(a, qi)| a + qi).collect();
        if slack.iter().any(|&w| !w.is_finite() || w < -budget.feas_tol) {
            return None;
        }
        let residual = x
            .iter()
            .zip(&slack)
            .fold(0.0f64, |m, (&xi, &wi)| m.max(xi.min(wi).abs()));
        if residual > budget.accept_tol {
            return None;
        }
        let support = IndexSet::new(
            x.iter()
                .enumerate()
                .filter(|(_, &v)| v > budget.support_tol)
                .map(|(i, _)| i + 1),
        )
        .expect("support indices are positive");
        Some(Solution {
            x,
            support,
            slack,
            residual,
        })
    }
}

impl std::fmt::Display for Solution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "x = [{}], support = {}, slack = [{}], residual = {:.3e}",
            self.x.iter().map(f64::to_string).join(", "),
            self.support,
            self.slack.iter().map(f64::to_string).join(", "),
            self.residual
        )
    }
}

/// Effort counters for one `solve` call. Wall time is informational and
/// excluded from determinism comparisons.
#[derive(Debug, Clone, Default)]
pub struct SolveStats {
    pub supports_explored: usize,
    pub refuted_supports: usize,
    pub newton_iterations: usize,
    pub wall: Duration,
}

/// Exactness record behind a certified no-solution answer.
#[derive(Debug, Clone, PartialEq)]
pub struct NoSolutionCertificate {
    pub refuted_supports: usize,
    /// Smallest refutation margin across supports.
    pub min_margin: f64,
}

impl std::fmt::Display for NoSolutionCertificate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "all {} support subsystems refuted by exact coefficient-sign analysis (minimum margin {:e})",
            self.refuted_supports, self.min_margin
        )
    }
}

#[derive(Debug, Clone)]
pub enum SolveStatus {
    Solved(Vec<Solution>),
    CertifiedNoSolution(NoSolutionCertificate),
    NoSolutionFound,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub stats: SolveStats,
}

impl SolveOutcome {
    pub fn is_solved(&self) -> bool {
        matches!(self.status, SolveStatus::Solved(_))
    }

    pub fn is_certified_no_solution(&self) -> bool {
        matches!(self.status, SolveStatus::CertifiedNoSolution(_))
    }

    /// Solutions when solved, empty otherwise.
    pub fn solutions(&self) -> &[Solution] {
        match &self.status {
            SolveStatus::Solved(s) => s,
            _ => &[],
        }
    }
}

/// `max_i |min(x_i, (A x^{m-1} + q)_i)|`: zero exactly at solutions.
pub fn residual(inst: &TCPInstance, x: &[f64]) -> Result<f64, TensorError> {
    residual_detail(inst, x).map(|(v, _)| v)
}

/// The residual together with the most violated component (1-based).
pub fn residual_detail(inst: &TCPInstance, x: &[f64]) -> Result<(f64, usize), TensorError> {
    let ax = inst.tensor.apply(x)?;
    let mut worst = 0.0f64;
    let mut at = 1;
    for (i, (&xi, (&ai, &qi))) in x.iter().zip(ax.iter().zip(&inst.q)).enumerate() {
        let v = xi.min(ai + qi).abs();
        if v > worst {
            worst = v;
            at = i + 1;
        }
    }
    Ok((worst, at))
}

/// Searches the support-`J` subsystem: `x_i = 0` off `J`, zero slack on `J`,
/// then filters by nonnegativity and residual. Near-duplicate roots merge.
pub fn solve_support(
    inst: &TCPInstance,
    j: &IndexSet,
    budget: &SearchBudget,
) -> Result<Vec<Solution>, SolveError> {
    budget.validate().map_err(SolveError::BadBudget)?;
    if !j.within(inst.dim()) {
        return Err(SolveError::Tensor(TensorError::BadIndexSet {
            dim: inst.dim(),
            reason: format!("{j} exceeds dimension"),
        }));
    }
    let forms = inst.tensor.monomial_forms();
    Ok(support_candidates(&forms, inst, j, budget).0)
}

/// Inner support search sharing precomputed monomial forms. Returns accepted
/// solutions and the Newton iteration count.
fn support_candidates(
    forms: &[MonomialForm],
    inst: &TCPInstance,
    j: &IndexSet,
    budget: &SearchBudget,
) -> (Vec<Solution>, usize) {
    let n = inst.dim();
    if j.is_empty() {
        let zero = vec![0.0; n];
        let sol = Solution::measure(&inst.tensor, &inst.q, &zero, budget);
        return (sol.into_iter().collect(), 0);
    }
    let k = j.len();
    let members: Vec<usize> = j.iter().collect();
    let eval = |u: &[f64], out: &mut [f64]| {
        let full = embed(u, j, n);
        for (row, &i) in members.iter().enumerate() {
            out[row] = forms[i - 1].eval(&full) + inst.q[i - 1];
        }
    };
    let jac = |u: &[f64], a: &mut [f64]| {
        let full = embed(u, j, n);
        for (row, &i) in members.iter().enumerate() {
            for (col, &l) in members.iter().enumerate() {
                a[row * k + col] = forms[i - 1].eval_grad(&full, l);
            }
        }
    };

    let mut starts = vec![vec![1.0; k]];
    let mut rng = budget.stream(j.bitmask());
    for _ in 0..budget.multistarts {
        // coordinates log-uniform in [1e-2, 1e2]
        starts.push(
            (0..k)
                .map(|_| 10f64.powf(rng.random_range(-2.0..2.0)))
                .collect(),
        );
    }

    let mut iterations = 0;
    let mut accepted: Vec<Solution> = Vec::new();
    for start in starts {
        let run = newton::damped_newton(&start, budget.newton_max_iter, eval, jac);
        iterations += run.iterations;
        let Some(u) = run.candidate else { continue };
        let full = embed(&u, j, n);
        if let Some(sol) = Solution::measure(&inst.tensor, &inst.q, &full, budget) {
            merge_into(&mut accepted, sol);
        }
    }
    accepted.sort_by(|a, b| {
        a.x.iter()
            .zip(&b.x)
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    (accepted, iterations)
}

/// Keeps the smaller-residual representative of near-duplicates.
fn merge_into(solutions: &mut Vec<Solution>, candidate: Solution) {
    for existing in solutions.iter_mut() {
        if inf_dist(&existing.x, &candidate.x) < MERGE_TOL {
            if candidate.residual < existing.residual {
                *existing = candidate;
            }
            return;
        }
    }
    solutions.push(candidate);
}

enum SupportOutcome {
    Refuted(f64),
    Searched(Vec<Solution>, usize),
}

/// Enumerates all `2^n` supports in ascending cardinality (lexicographic
/// within), refuting exactly where possible and searching the rest.
pub fn solve(inst: &TCPInstance, budget: &SearchBudget) -> Result<SolveOutcome, SolveError> {
    budget.validate().map_err(SolveError::BadBudget)?;
    let n = inst.dim();
    if n > 20 {
        return Err(SolveError::TooManyVariables(n));
    }
    let started = Instant::now();
    let forms = inst.tensor.monomial_forms();
    let mut stats = SolveStats::default();
    let mut solutions: Vec<Solution> = Vec::new();
    let mut all_refuted = true;
    let mut min_margin = f64::INFINITY;
    for k in 0..=n {
        let supports: Vec<IndexSet> = (1..=n)
            .combinations(k)
            .map(|members| IndexSet::new(members).expect("combination indices are valid"))
            .collect();
        let outcomes: Vec<SupportOutcome> = supports
            .par_iter()
            .map(|j| match refute::refute_support(&forms, &inst.q, j) {
                Some(r) => SupportOutcome::Refuted(r.margin()),
                None => {
                    let (sols, iters) = support_candidates(&forms, inst, j, budget);
                    SupportOutcome::Searched(sols, iters)
                }
            })
            .collect();
        for outcome in outcomes {
            stats.supports_explored += 1;
            match outcome {
                SupportOutcome::Refuted(margin) => {
                    stats.refuted_supports += 1;
                    min_margin = min_margin.min(margin);
                }
                SupportOutcome::Searched(sols, iters) => {
                    all_refuted = false;
                    stats.newton_iterations += iters;
                    for sol in sols {
                        merge_into(&mut solutions, sol);
                    }
                }
            }
        }
    }
    stats.wall = started.elapsed();
    let status = if !solutions.is_empty() {
        SolveStatus::Solved(solutions)
    } else if all_refuted {
        SolveStatus::CertifiedNoSolution(NoSolutionCertificate {
            refuted_supports: stats.refuted_supports,
            min_margin,
        })
    } else {
        SolveStatus::NoSolutionFound
    };
    Ok(SolveOutcome { status, stats })
}

/// Closed-form solution for a diagonal tensor with positive diagonal:
/// `x_i = (max(0, -q_i) / d_i)^{1/(m-1)}`.
pub fn solve_diagonal(tensor: &Tensor, q: &[f64]) -> Result<Solution, SolveError> {
    let n = tensor.dim();
    let m = tensor.order();
    if q.len() != n {
        return Err(SolveError::Tensor(TensorError::DimMismatch {
            got: q.len(),
            expected: n,
        }));
    }
    for (flat, &c) in tensor.coeffs().iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let tuple = tensor.tuple_of(flat);
        if tuple.iter().any(|&i| i != tuple[0]) {
            return Err(SolveError::NotDiagonal(tuple));
        }
    }
    let diag = tensor.diagonal();
    for (i, &d) in diag.iter().enumerate() {
        if !(d > 0.0) {
            return Err(SolveError::NonPositiveDiagonal {
                index: i + 1,
                value: d,
            });
        }
    }
    let exponent = 1.0 / (m as f64 - 1.0);
    let x: Vec<f64> = q
        .iter()
        .zip(&diag)
        .map(|(&qi, &d)| ((-qi).max(0.0) / d).powf(exponent))
        .collect();
    let budget = SearchBudget::default();
    Solution::measure(tensor, q, &x, &budget).ok_or_else(|| {
        SolveError::CompositionResidual(inf_norm(&x)) // unreachable for finite inputs
    })
}

/// Solves an instance whose first two coefficient rows coincide by dropping
/// the variable with the larger constant and solving the principal
/// sub-problem on the remaining indices. The dropped component of the
/// returned point is exactly zero.
pub fn compose_equal_rows(
    tensor: &Tensor,
    q: &[f64],
    budget: &SearchBudget,
) -> Result<Solution, SolveError> {
    let n = tensor.dim();
    if n < 2 {
        return Err(SolveError::CompositionDim(n));
    }
    if q.len() != n {
        return Err(SolveError::Tensor(TensorError::DimMismatch {
            got: q.len(),
            expected: n,
        }));
    }
    let block = n.pow((tensor.order() - 1) as u32);
    for offset in 0..block {
        if tensor.coeffs()[offset] != tensor.coeffs()[block + offset] {
            return Err(SolveError::RowsNotEqual(tensor.tuple_of(block + offset)));
        }
    }
    let drop = if q[1] <= q[0] { 1 } else { 2 };
    let keep = IndexSet::new((1..=n).filter(|&i| i != drop)).expect("valid indices");
    let sub = tensor.principal_sub_tensor(&keep)?;
    let q_sub = gather(q, &keep);
    let sub_inst = TCPInstance::new(sub, q_sub)?;
    let outcome = solve(&sub_inst, budget)?;
    let sub_solution = match outcome.status {
        SolveStatus::Solved(sols) => sols.into_iter().next().expect("solved carries a solution"),
        SolveStatus::CertifiedNoSolution(cert) => {
            return Err(SolveError::SubProblemUnsolved(cert.to_string()))
        }
        SolveStatus::NoSolutionFound => {
            return Err(SolveError::SubProblemUnsolved(
                "no root found under the given budget".into(),
            ))
        }
    };
    let y = embed(&sub_solution.x, &keep, n);
    match Solution::measure(tensor, q, &y, budget) {
        Some(sol) => Ok(sol),
        None => {
            let inst = TCPInstance::new(tensor.clone(), q.to_vec())?;
            let (r, _) = residual_detail(&inst, &y)?;
            Err(SolveError::CompositionResidual(r))
        }
    }
}
