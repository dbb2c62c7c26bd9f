//! Contestant strategies realizing a quizmaster certificate.

use minilp::{ComparisonOp, OptimizationDirection, Problem};

use crate::game::{conditional, ContestantStrategy, Game, SolveReport, Tolerances};

use super::lp::loss_matrix;
use super::SolverError;

/// Builds `Q*` from a solved report. Each `Q_y` must satisfy
/// `L(x, Q_y) <= lambda_x` for `x in y` up to the certificate tolerance.
///
/// * Proper kinds predict `P*(.|y)` on used messages. On unused ones they
///   predict the maximizer of `H(P') - P'.lambda` over the message, whose loss
///   vector is the lowest hyperplane parallel to `lambda` touching `H`.
/// * Randomized piecewise-linear kinds solve a small LP per message that
///   minimizes the largest slack `L(x, Q) - lambda_x`.
/// * Hard kinds try every pure prediction and fail when none fits.
pub fn solve_contestant(
    game: &Game,
    report: &SolveReport,
) -> Result<ContestantStrategy, SolverError> {
    solve_contestant_with(game, report, &Tolerances::default())
}

pub fn solve_contestant_with(
    game: &Game,
    report: &SolveReport,
    tol: &Tolerances,
) -> Result<ContestantStrategy, SolverError> {
    let loss = game.loss();
    let kind = loss.kind();
    let lambda = &report.kt.lambda;
    let n = game.n_outcomes();
    let mut per_message = Vec::with_capacity(game.n_messages());
    if kind.is_proper() {
        for y in 0..game.n_messages() {
            if report.strategy.message_mass(game, y) > tol.support_epsilon {
                per_message.push(conditional(game, &report.strategy, y)?);
                continue;
            }
            let (gain, q) = loss
                .max_entropy_gap(lambda, game.message(y))
                .ok_or(SolverError::UnsupportedLoss(kind))?;
            if gain > tol.certificate {
                return Err(SolverError::NoFeasibleResponse {
                    message: y,
                    slack: gain,
                });
            }
            per_message.push(q);
        }
        return Ok(ContestantStrategy { per_message });
    }
    let a = loss_matrix(loss, n).ok_or(SolverError::UnsupportedLoss(kind))?;
    let (scale, base_lambda): (f64, Vec<f64>) = match loss.affine() {
        Some(aff) => (
            aff.scale,
            lambda
                .iter()
                .zip(&aff.offsets)
                .map(|(l, b)| (l - b) / aff.scale)
                .collect(),
        ),
        None => (1.0, lambda.clone()),
    };
    for y in 0..game.n_messages() {
        let (slack, q) = if kind.is_hard() {
            best_pure_response(&a, &base_lambda, game.message(y))
        } else {
            min_slack_lp(&a, &base_lambda, game.message(y))?
        };
        if scale * slack > tol.certificate {
            return Err(SolverError::NoFeasibleResponse {
                message: y,
                slack: scale * slack,
            });
        }
        per_message.push(q);
    }
    Ok(ContestantStrategy { per_message })
}

fn best_pure_response(a: &[Vec<f64>], lambda: &[f64], members: &[usize]) -> (f64, Vec<f64>) {
    let n = a.len();
    let mut best = (f64::INFINITY, 0);
    for o in 0..n {
        let slack = members
            .iter()
            .map(|&x| a[x][o] - lambda[x])
            .fold(f64::NEG_INFINITY, f64::max);
        if slack < best.0 {
            best = (slack, o);
        }
    }
    let mut q = vec![0.0; n];
    q[best.1] = 1.0;
    (best.0, q)
}

fn min_slack_lp(
    a: &[Vec<f64>],
    lambda: &[f64],
    members: &[usize],
) -> Result<(f64, Vec<f64>), SolverError> {
    let n = a.len();
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let s = lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    let q: Vec<_> = (0..n).map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
    let sum: Vec<_> = q.iter().map(|&v| (v, 1.0)).collect();
    lp.add_constraint(sum.as_slice(), ComparisonOp::Eq, 1.0);
    for &x in members {
        let mut row = vec![(s, -1.0)];
        row.extend((0..n).filter(|&o| a[x][o] != 0.0).map(|o| (q[o], a[x][o])));
        lp.add_constraint(row.as_slice(), ComparisonOp::Le, lambda[x]);
    }
    let sol = lp.solve().map_err(|e| SolverError::Lp(e.to_string()))?;
    let mut dist: Vec<f64> = q.iter().map(|v| sol[*v].max(0.0)).collect();
    crate::simplex::normalize(&mut dist);
    let slack = members
        .iter()
        .map(|&x| (0..n).map(|o| a[x][o] * dist[o]).sum::<f64>() - lambda[x])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((slack, dist))
}
