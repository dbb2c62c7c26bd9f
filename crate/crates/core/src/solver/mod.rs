//! Worst-case optimal strategies for both players.
//!
//! The quizmaster maximizes the expected generalized entropy over the
//! product of per-outcome simplices. Smooth proper losses go through a
//! block ascent with exact line searches ([`ascent`]); the piecewise-linear
//! kinds are solved exactly as linear programs ([`lp`]).

mod ascent;
mod contestant;
mod lp;
mod oracle;
mod rcar;
mod stable_set;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{Game, GameError, SolveReport};
use crate::losses::LossKind;

pub use contestant::{solve_contestant, solve_contestant_with};
pub use oracle::{oracle_grid, ORACLE_BUDGET};
pub use rcar::{solve_rcar, RcarSolution};
pub use stable_set::{solve_hard01_contestant, StableSetResult, STABLE_SET_MAX_OUTCOMES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_iterations: u64,
    pub value_tolerance: f64,
    pub certificate_tolerance: f64,
    pub seed: u64,
    pub restarts: usize,
    pub smoothing_epsilon: f64,
    /// Messages with at most this mass count as unused.
    pub support_epsilon: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200_000,
            value_tolerance: 1e-10,
            certificate_tolerance: 1e-6,
            seed: 0,
            restarts: 5,
            smoothing_epsilon: 1e-9,
            support_epsilon: 1e-10,
        }
    }
}

impl SolverOptions {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    fn check(&self) -> Result<(), SolverError> {
        let positive = [
            self.value_tolerance,
            self.certificate_tolerance,
            self.smoothing_epsilon,
            self.support_epsilon,
        ];
        if positive.iter().any(|t| !(*t > 0.0)) || self.restarts == 0 {
            return Err(SolverError::InvalidOptions(
                "tolerances must be positive and restarts at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("solver did not reach the certificate tolerance (KT residual {residual:e})")]
    DidNotConverge {
        residual: f64,
        report: Box<SolveReport>,
    },
    #[error("loss kind {0} is not supported here")]
    UnsupportedLoss(LossKind),
    #[error("no prediction realizes the KT hyperplane on message {message} (slack {slack:e})")]
    NoFeasibleResponse { message: usize, slack: f64 },
    #[error("problem too large: {0}")]
    TooLarge(String),
    #[error("linear program failed: {0}")]
    Lp(String),
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Game(#[from] GameError),
}

/// Finds a worst-case optimal quizmaster strategy and a candidate KT vector.
///
/// Hard kinds share their entropy with the randomized counterparts, so the
/// quizmaster side is solved as for those. A run whose KT residual stays above
/// `certificate_tolerance` returns [`SolverError::DidNotConverge`], which still
/// carries the best report found.
pub fn solve_quizmaster(game: &Game, opts: &SolverOptions) -> Result<SolveReport, SolverError> {
    solve_quizmaster_traced(game, opts).map(|(report, _)| report)
}

/// As [`solve_quizmaster`], also returning the objective value after every
/// accepted ascent step of the winning restart (empty for the LP kinds).
pub fn solve_quizmaster_traced(
    game: &Game,
    opts: &SolverOptions,
) -> Result<(SolveReport, Vec<f64>), SolverError> {
    opts.check()?;
    let kind = game.loss().kind();
    let (report, trace) = if kind.is_piecewise_linear() {
        (lp::solve(game, opts)?, Vec::new())
    } else {
        ascent::solve(game, opts)
    };
    if !report.converged {
        let residual = report
            .residuals
            .get("kt_residual")
            .copied()
            .unwrap_or(f64::INFINITY);
        return Err(SolverError::DidNotConverge {
            residual,
            report: Box::new(report),
        });
    }
    Ok((report, trace))
}
