//! RCAR vectors via the logarithmic-loss instance.

use crate::game::{Game, QuizStrategy, RcarVector, SolveReport};
use crate::losses::LossSpec;

use super::{solve_quizmaster, SolverError, SolverOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct RcarSolution {
    /// The input structure and marginal under logarithmic loss.
    pub game: Game,
    pub q: RcarVector,
    pub strategy: QuizStrategy,
    pub report: SolveReport,
}

/// Computes the unique RCAR vector of the structure and marginal of `game`
/// (its loss is ignored).
///
/// Under logarithmic loss the KT vector is `lambda_x = -ln q_x`, so
/// `q_x = exp(-lambda_x)`; with `lambda_x` the largest gradient over used
/// messages this equals the smallest conditional `P*(x|y)` over used `y`.
/// Message sums slightly above one (within the certificate tolerance) are
/// scaled back to one.
pub fn solve_rcar(game: &Game, opts: &SolverOptions) -> Result<RcarSolution, SolverError> {
    let log_game = game.with_loss(LossSpec::logarithmic())?;
    let report = solve_quizmaster(&log_game, opts)?;
    let mut q: Vec<f64> = report.kt.lambda.iter().map(|l| (-l).exp()).collect();
    let excess = (0..log_game.n_messages())
        .map(|y| log_game.message(y).iter().map(|&x| q[x]).sum::<f64>())
        .fold(1.0, f64::max);
    if excess > 1.0 + opts.certificate_tolerance {
        let mut report = report;
        report.converged = false;
        return Err(SolverError::DidNotConverge {
            residual: excess - 1.0,
            report: Box::new(report),
        });
    }
    for y in 0..log_game.n_messages() {
        let members = log_game.message(y);
        let sum: f64 = members.iter().map(|&x| q[x]).sum();
        if sum > 1.0 {
            members.iter().for_each(|&x| q[x] /= sum);
        }
    }
    let q = RcarVector::new(&log_game, q, opts.certificate_tolerance)?;
    Ok(RcarSolution {
        strategy: report.strategy.clone(),
        game: log_game,
        q,
        report,
    })
}
