//! Exact solutions for losses whose entropy is a minimum of linear functions.
//!
//! With `H(P) = min_{x'} sum_x P(x) A[x][x']` the quizmaster problem is the LP
//!
//! ```text
//! max sum_y t_y   s.t.  t_y <= sum_{x in y} P(x, y) A[x][x']  for all y, x'
//!                       sum_{y contains x} P(x, y) = p_x
//! ```
//!
//! and the contestant problem is its dual,
//! `min sum_x p_x lambda_x` subject to `lambda_x >= sum_{x'} Q_y(x') A[x][x']`
//! for `x in y`. The hard kinds share the entropy of their randomized versions.

use std::collections::BTreeMap;

use minilp::{ComparisonOp, OptimizationDirection, Problem};

use crate::game::{expected_entropy, Game, KtVector, QuizStrategy, SolveReport};
use crate::losses::LossSpec;

use super::{SolverError, SolverOptions};

/// The loss matrix `A[x][x']` behind a piecewise-linear loss, ignoring any affine wrapper.
pub(super) fn loss_matrix(loss: &LossSpec, n: usize) -> Option<Vec<Vec<f64>>> {
    if let Some(a) = loss.matrix() {
        return Some(a.to_vec());
    }
    if loss.kind().is_piecewise_linear() {
        // randomized and hard 0-1
        return Some(
            (0..n)
                .map(|x| (0..n).map(|o| if o == x { 0.0 } else { 1.0 }).collect())
                .collect(),
        );
    }
    None
}

fn lp_error(e: minilp::Error) -> SolverError {
    SolverError::Lp(e.to_string())
}

/// Maximizes the base-loss expected entropy; returns the joint and the LP value.
fn quizmaster_lp(game: &Game, a: &[Vec<f64>]) -> Result<(Vec<f64>, f64), SolverError> {
    let index = game.index();
    let n = game.n_outcomes();
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let p_vars: Vec<_> = (0..index.len())
        .map(|_| lp.add_var(0.0, (0.0, f64::INFINITY)))
        .collect();
    let t_vars: Vec<_> = (0..game.n_messages())
        .map(|_| lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY)))
        .collect();
    for y in 0..game.n_messages() {
        for response in 0..n {
            let mut row = vec![(t_vars[y], 1.0)];
            for id in index.message_pairs(y) {
                let x = index.pair(id).0;
                if a[x][response] != 0.0 {
                    row.push((p_vars[id], -a[x][response]));
                }
            }
            lp.add_constraint(row.as_slice(), ComparisonOp::Le, 0.0);
        }
    }
    for x in 0..n {
        let row: Vec<_> = index
            .outcome_pairs(x)
            .iter()
            .map(|&id| (p_vars[id], 1.0))
            .collect();
        lp.add_constraint(row.as_slice(), ComparisonOp::Eq, game.marginal()[x]);
    }
    let sol = lp.solve().map_err(lp_error)?;
    let joint = p_vars.iter().map(|v| sol[*v].max(0.0)).collect();
    Ok((joint, sol.objective()))
}

/// Minimizes the base-loss worst-case expected loss over randomized predictions.
/// Returns `lambda`, the per-message predictions and the LP value.
pub(super) fn contestant_lp(
    game: &Game,
    a: &[Vec<f64>],
) -> Result<(Vec<f64>, Vec<Vec<f64>>, f64), SolverError> {
    let n = game.n_outcomes();
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let lam: Vec<_> = (0..n)
        .map(|x| lp.add_var(game.marginal()[x], (f64::NEG_INFINITY, f64::INFINITY)))
        .collect();
    let q: Vec<Vec<_>> = (0..game.n_messages())
        .map(|_| (0..n).map(|_| lp.add_var(0.0, (0.0, 1.0))).collect())
        .collect();
    for (y, qy) in q.iter().enumerate() {
        let sum: Vec<_> = qy.iter().map(|&v| (v, 1.0)).collect();
        lp.add_constraint(sum.as_slice(), ComparisonOp::Eq, 1.0);
        for &x in game.message(y) {
            let mut row = vec![(lam[x], 1.0)];
            for (o, &v) in qy.iter().enumerate() {
                if a[x][o] != 0.0 {
                    row.push((v, -a[x][o]));
                }
            }
            lp.add_constraint(row.as_slice(), ComparisonOp::Ge, 0.0);
        }
    }
    let sol = lp.solve().map_err(lp_error)?;
    let lambda = lam.iter().map(|v| sol[*v]).collect();
    let preds = q
        .iter()
        .map(|qy| {
            let mut d: Vec<f64> = qy.iter().map(|v| sol[*v].max(0.0)).collect();
            crate::simplex::normalize(&mut d);
            d
        })
        .collect();
    Ok((lambda, preds, sol.objective()))
}

pub(super) fn solve(game: &Game, opts: &SolverOptions) -> Result<SolveReport, SolverError> {
    let loss = game.loss();
    let n = game.n_outcomes();
    let a = loss_matrix(loss, n).ok_or(SolverError::UnsupportedLoss(loss.kind()))?;
    let (joint, primal) = quizmaster_lp(game, &a)?;
    let (base_lambda, _, dual) = contestant_lp(game, &a)?;
    let lambda: Vec<f64> = match loss.affine() {
        Some(aff) => base_lambda
            .iter()
            .zip(&aff.offsets)
            .map(|(l, b)| aff.scale * l + b)
            .collect(),
        None => base_lambda,
    };
    let mut strategy = QuizStrategy { joint };
    // Undo the LP's floating slack in the marginal constraints.
    let index = game.index();
    for x in 0..n {
        let ids = index.outcome_pairs(x);
        let row: f64 = ids.iter().map(|&id| strategy.joint[id]).sum();
        if row > 0.0 {
            ids.iter()
                .for_each(|&id| strategy.joint[id] *= game.marginal()[x] / row);
        }
    }
    let value = expected_entropy(game, &strategy);
    let certificate: f64 = lambda.iter().zip(game.marginal()).map(|(l, p)| l * p).sum();
    let gap = (primal - dual).abs();
    let mut residuals = BTreeMap::new();
    residuals.insert("duality_gap".to_string(), gap);
    residuals.insert(
        "kt_residual".to_string(),
        gap.max((certificate - value).abs()),
    );
    let converged = gap.max((certificate - value).abs()) <= opts.certificate_tolerance;
    Ok(SolveReport {
        strategy,
        kt: KtVector { lambda },
        value,
        iterations: 1,
        converged,
        residuals,
    })
}
