//! Worst-case optimal probability updating under coarse data.
//!
//! A game `(X, Y, p, L)` has a finite outcome space `X`, a family `Y` of
//! messages (subsets of `X`), a strictly positive marginal `p` on `X` and a
//! loss `L`. A quizmaster picks which message `y` containing the true outcome
//! to reveal; the contestant then predicts the outcome. The crate computes
//! worst-case optimal strategies for both sides, extracts Kuhn-Tucker and
//! RCAR certificates, and checks them independently.
//!
//! ```
//! use rpu_core::{solve_quizmaster, Game, LossSpec, SolverOptions};
//!
//! let monty = Game::new(vec![vec![0, 1], vec![1, 2]], vec![1.0 / 3.0; 3], LossSpec::logarithmic()).unwrap();
//! let report = solve_quizmaster(&monty, &SolverOptions::default()).unwrap();
//! assert!((report.strategy.joint[0] - 1.0 / 3.0).abs() < 1e-6);
//! ```

pub mod game;
pub mod gamefile;
pub mod generate;
pub mod losses;
pub mod simplex;
pub mod solver;
pub mod structure;
pub mod verify;

pub use game::{
    conditional, expected_entropy, expected_loss, validate_game, worst_case_loss,
    ContestantStrategy, Game, GameError, IncidenceIndex, KtVector, QuizStrategy, RawGame,
    RcarVector, SolveReport, Tolerances,
};
pub use gamefile::{game_to_json, load_game, parse_game, GameFile, GameFileError};
pub use losses::{Affine, LossError, LossKind, LossSpec};
pub use solver::{
    oracle_grid, solve_contestant, solve_contestant_with, solve_hard01_contestant,
    solve_quizmaster, solve_quizmaster_traced, solve_rcar, RcarSolution, SolverError,
    SolverOptions, StableSetResult,
};
pub use structure::{
    classify, counterexample_marginal, counterexample_marginal_with_epsilon, decompose,
    is_graph_game, is_matroid, recombine, remove_dominated, Branch, Classification, Component,
    Counterexample, RemovalLog, StructureError,
};
pub use verify::{
    brute_force_value, check_equalizer, check_kt, check_loss_exchange, check_nash_gap, check_rcar,
    CertificateReport, CheckMode, EqualizerScope, MessageCheck,
};
