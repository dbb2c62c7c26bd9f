//! Games `(X, Y, p, L)`, strategies for both players, and the objectives.

use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::losses::LossSpec;

/// Sum tolerance for the marginal of a validated game.
pub const MARGINAL_SUM_TOL: f64 = 1e-12;
/// Sum tolerance for each contestant distribution.
pub const DISTRIBUTION_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error("outcome `{outcome}` has non-positive marginal probability {value}")]
    ZeroMarginal { outcome: String, value: f64 },
    #[error("messages {first} and {second} contain the same outcomes")]
    DuplicateMessage { first: usize, second: usize },
    #[error("outcome `{0}` is not contained in any message")]
    UncoveredOutcome(String),
    #[error("marginal sums to {0}, not 1")]
    MarginalNotNormalized(f64),
    #[error("message {0} is empty")]
    EmptyMessage(usize),
    #[error(
        "message {message} refers to outcome index {index}, but there are only {count} outcomes"
    )]
    OutcomeOutOfRange {
        message: usize,
        index: usize,
        count: usize,
    },
    #[error("outcome name `{0}` appears more than once")]
    DuplicateOutcome(String),
    #[error("marginal has {marginal} entries for {outcomes} outcomes")]
    MarginalLength { marginal: usize, outcomes: usize },
    #[error("loss parameters have dimension {loss}, game has {outcomes} outcomes")]
    LossDimension { loss: usize, outcomes: usize },
    #[error("message {0} has zero probability, its conditional is undefined")]
    ZeroMassMessage(usize),
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),
}

impl GameError {
    /// The variant name, for diagnostics.
    pub fn name(&self) -> &'static str {
        match self {
            GameError::ZeroMarginal { .. } => "ZeroMarginal",
            GameError::DuplicateMessage { .. } => "DuplicateMessage",
            GameError::UncoveredOutcome(_) => "UncoveredOutcome",
            GameError::MarginalNotNormalized(_) => "MarginalNotNormalized",
            GameError::EmptyMessage(_) => "EmptyMessage",
            GameError::OutcomeOutOfRange { .. } => "OutcomeOutOfRange",
            GameError::DuplicateOutcome(_) => "DuplicateOutcome",
            GameError::MarginalLength { .. } => "MarginalLength",
            GameError::LossDimension { .. } => "LossDimension",
            GameError::ZeroMassMessage(_) => "ZeroMassMessage",
            GameError::InvalidStrategy(_) => "InvalidStrategy",
        }
    }
}

/// Unvalidated game data, as read from a file or built by hand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawGame {
    pub outcomes: Vec<String>,
    pub messages: Vec<Vec<usize>>,
    pub marginal: Vec<f64>,
    pub loss: LossSpec,
}

/// The pairs `(x, y)` with `x in y`, stored message-major so that each
/// message owns a contiguous range.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceIndex {
    pairs: Vec<(usize, usize)>,
    by_message: Vec<Range<usize>>,
    by_outcome: Vec<Vec<usize>>,
}

impl IncidenceIndex {
    fn build(n_outcomes: usize, messages: &[Vec<usize>]) -> Self {
        let mut pairs = Vec::new();
        let mut by_message = Vec::with_capacity(messages.len());
        let mut by_outcome = vec![Vec::new(); n_outcomes];
        for (y, msg) in messages.iter().enumerate() {
            let start = pairs.len();
            for &x in msg {
                by_outcome[x].push(pairs.len());
                pairs.push((x, y));
            }
            by_message.push(start..pairs.len());
        }
        Self {
            pairs,
            by_message,
            by_outcome,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// All `(outcome, message)` pairs in storage order.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn pair(&self, id: usize) -> (usize, usize) {
        self.pairs[id]
    }

    /// Pair ids belonging to message `y`.
    pub fn message_pairs(&self, y: usize) -> Range<usize> {
        self.by_message[y].clone()
    }

    /// Pair ids belonging to outcome `x`, in message order.
    pub fn outcome_pairs(&self, x: usize) -> &[usize] {
        &self.by_outcome[x]
    }

    /// Pair id of `(x, y)`, if `x in y`.
    pub fn find(&self, x: usize, y: usize) -> Option<usize> {
        let range = self.by_message.get(y)?.clone();
        let start = range.start;
        self.pairs[range]
            .binary_search_by_key(&x, |&(o, _)| o)
            .ok()
            .map(|i| start + i)
    }
}

/// A validated game.
#[derive(Debug, Clone, PartialEq)]
pub struct Game {
    outcomes: Vec<String>,
    messages: Vec<Vec<usize>>,
    marginal: Vec<f64>,
    loss: LossSpec,
    index: IncidenceIndex,
}

/// Checks every invariant and builds the incidence index. Messages are
/// stored with sorted, deduplicated members.
pub fn validate_game(raw: RawGame) -> Result<Game, GameError> {
    let RawGame {
        outcomes,
        messages,
        marginal,
        loss,
    } = raw;
    let n = outcomes.len();
    for (i, name) in outcomes.iter().enumerate() {
        if outcomes[..i].contains(name) {
            return Err(GameError::DuplicateOutcome(name.clone()));
        }
    }
    if marginal.len() != n {
        return Err(GameError::MarginalLength {
            marginal: marginal.len(),
            outcomes: n,
        });
    }
    if let Some(dim) = loss.dimension() {
        if dim != n {
            return Err(GameError::LossDimension {
                loss: dim,
                outcomes: n,
            });
        }
    }
    for (x, &v) in marginal.iter().enumerate() {
        if !(v > 0.0) || !v.is_finite() {
            return Err(GameError::ZeroMarginal {
                outcome: outcomes[x].clone(),
                value: v,
            });
        }
    }
    let sum: f64 = marginal.iter().sum();
    if (sum - 1.0).abs() > MARGINAL_SUM_TOL {
        return Err(GameError::MarginalNotNormalized(sum));
    }
    let mut sorted = Vec::with_capacity(messages.len());
    for (y, msg) in messages.into_iter().enumerate() {
        if msg.is_empty() {
            return Err(GameError::EmptyMessage(y));
        }
        if let Some(&index) = msg.iter().find(|&&x| x >= n) {
            return Err(GameError::OutcomeOutOfRange {
                message: y,
                index,
                count: n,
            });
        }
        let mut msg = msg;
        msg.sort_unstable();
        msg.dedup();
        if let Some(first) = sorted.iter().position(|m: &Vec<usize>| *m == msg) {
            return Err(GameError::DuplicateMessage { first, second: y });
        }
        sorted.push(msg);
    }
    let mut covered = vec![false; n];
    sorted.iter().flatten().for_each(|&x| covered[x] = true);
    if let Some(x) = covered.iter().position(|c| !c) {
        return Err(GameError::UncoveredOutcome(outcomes[x].clone()));
    }
    let index = IncidenceIndex::build(n, &sorted);
    Ok(Game {
        outcomes,
        messages: sorted,
        marginal,
        loss,
        index,
    })
}

/// Default outcome names `x1, x2, ...`.
pub fn default_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

impl Game {
    /// Validates a game whose outcomes are named `x1, x2, ...`.
    pub fn new(
        messages: Vec<Vec<usize>>,
        marginal: Vec<f64>,
        loss: LossSpec,
    ) -> Result<Self, GameError> {
        validate_game(RawGame {
            outcomes: default_names(marginal.len()),
            messages,
            marginal,
            loss,
        })
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn messages(&self) -> &[Vec<usize>] {
        &self.messages
    }

    pub fn message(&self, y: usize) -> &[usize] {
        &self.messages[y]
    }

    pub fn marginal(&self) -> &[f64] {
        &self.marginal
    }

    pub fn loss(&self) -> &LossSpec {
        &self.loss
    }

    pub fn index(&self) -> &IncidenceIndex {
        &self.index
    }

    pub fn n_outcomes(&self) -> usize {
        self.outcomes.len()
    }

    pub fn n_messages(&self) -> usize {
        self.messages.len()
    }

    /// Messages containing outcome `x`, ascending.
    pub fn messages_containing(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        self.index
            .outcome_pairs(x)
            .iter()
            .map(move |&id| self.index.pair(id).1)
    }

    /// Same structure and marginal under a different loss.
    pub fn with_loss(&self, loss: LossSpec) -> Result<Game, GameError> {
        validate_game(RawGame {
            outcomes: self.outcomes.clone(),
            messages: self.messages.clone(),
            marginal: self.marginal.clone(),
            loss,
        })
    }

    /// Same structure and loss under a different marginal.
    pub fn with_marginal(&self, marginal: Vec<f64>) -> Result<Game, GameError> {
        validate_game(RawGame {
            outcomes: self.outcomes.clone(),
            messages: self.messages.clone(),
            marginal,
            loss: self.loss.clone(),
        })
    }

    pub fn to_raw(&self) -> RawGame {
        RawGame {
            outcomes: self.outcomes.clone(),
            messages: self.messages.clone(),
            marginal: self.marginal.clone(),
            loss: self.loss.clone(),
        }
    }
}

/// Numerical tolerances shared by the solver and the checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub feasibility: f64,
    pub certificate: f64,
    pub support_epsilon: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            feasibility: 1e-9,
            certificate: 1e-6,
            support_epsilon: 1e-10,
        }
    }
}

/// A quizmaster strategy: the joint mass `P(x, y)` on the incidence pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuizStrategy {
    pub joint: Vec<f64>,
}

impl QuizStrategy {
    /// Checks nonnegativity and that row sums reproduce the marginal within `tol`.
    pub fn new(game: &Game, joint: Vec<f64>, tol: f64) -> Result<Self, GameError> {
        let s = Self { joint };
        s.check(game, tol)?;
        Ok(s)
    }

    pub fn check(&self, game: &Game, tol: f64) -> Result<(), GameError> {
        if self.joint.len() != game.index.len() {
            return Err(GameError::InvalidStrategy(format!(
                "{} entries for {} incidence pairs",
                self.joint.len(),
                game.index.len()
            )));
        }
        if let Some(v) = self.joint.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(GameError::InvalidStrategy(format!(
                "negative or non-finite mass {v}"
            )));
        }
        for x in 0..game.n_outcomes() {
            let row: f64 = game
                .index
                .outcome_pairs(x)
                .iter()
                .map(|&id| self.joint[id])
                .sum();
            if (row - game.marginal[x]).abs() > tol {
                return Err(GameError::InvalidStrategy(format!(
                    "row {} sums to {row}, marginal is {}",
                    game.outcomes[x], game.marginal[x]
                )));
            }
        }
        Ok(())
    }

    /// Builds a strategy from `P(x, y)` given as a function; pairs with `x not in y` are never queried.
    pub fn from_fn(game: &Game, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        Self {
            joint: game.index.pairs().iter().map(|&(x, y)| f(x, y)).collect(),
        }
    }

    /// Splits each outcome's mass evenly over the messages containing it.
    pub fn uniform_split(game: &Game) -> Self {
        Self::from_fn(game, |x, _| {
            game.marginal[x] / game.index.outcome_pairs(x).len() as f64
        })
    }

    pub fn get(&self, game: &Game, x: usize, y: usize) -> f64 {
        game.index.find(x, y).map_or(0.0, |id| self.joint[id])
    }

    /// `P(y)`.
    pub fn message_mass(&self, game: &Game, y: usize) -> f64 {
        game.index.message_pairs(y).map(|id| self.joint[id]).sum()
    }

    pub fn message_masses(&self, game: &Game) -> Vec<f64> {
        (0..game.n_messages())
            .map(|y| self.message_mass(game, y))
            .collect()
    }

    /// `P(y | x)` for every pair, in pair order.
    pub fn channel(&self, game: &Game) -> Vec<f64> {
        game.index
            .pairs()
            .iter()
            .zip(&self.joint)
            .map(|(&(x, _), &w)| w / game.marginal[x])
            .collect()
    }
}

/// `P(. | y)` as a distribution over all outcomes.
pub fn conditional(game: &Game, p: &QuizStrategy, y: usize) -> Result<Vec<f64>, GameError> {
    let mass = p.message_mass(game, y);
    if !(mass > 0.0) {
        return Err(GameError::ZeroMassMessage(y));
    }
    let mut out = vec![0.0; game.n_outcomes()];
    for id in game.index.message_pairs(y) {
        out[game.index.pair(id).0] = p.joint[id] / mass;
    }
    Ok(out)
}

/// A contestant strategy: one prediction over all outcomes for every message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContestantStrategy {
    pub per_message: Vec<Vec<f64>>,
}

impl ContestantStrategy {
    pub fn new(game: &Game, per_message: Vec<Vec<f64>>) -> Result<Self, GameError> {
        if per_message.len() != game.n_messages() {
            return Err(GameError::InvalidStrategy(format!(
                "{} predictions for {} messages",
                per_message.len(),
                game.n_messages()
            )));
        }
        for (y, q) in per_message.iter().enumerate() {
            if q.len() != game.n_outcomes() || q.iter().any(|v| !(*v >= 0.0)) {
                return Err(GameError::InvalidStrategy(format!(
                    "prediction for message {y} is not a distribution"
                )));
            }
            let s: f64 = q.iter().sum();
            if (s - 1.0).abs() > DISTRIBUTION_SUM_TOL {
                return Err(GameError::InvalidStrategy(format!(
                    "prediction for message {y} sums to {s}"
                )));
            }
        }
        Ok(Self { per_message })
    }

    /// Predicts the same distribution regardless of the message.
    pub fn constant(game: &Game, q: &[f64]) -> Self {
        Self {
            per_message: vec![q.to_vec(); game.n_messages()],
        }
    }
}

/// Candidate Kuhn-Tucker vector, one finite value per outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KtVector {
    pub lambda: Vec<f64>,
}

impl KtVector {
    pub fn new(lambda: Vec<f64>) -> Result<Self, GameError> {
        if lambda.iter().any(|v| !v.is_finite()) {
            return Err(GameError::InvalidStrategy(
                "KT vector has a non-finite entry".into(),
            ));
        }
        Ok(Self { lambda })
    }
}

/// A vector `q` in `(0, 1]^X` with `sum_{x in y} q_x <= 1` for every message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RcarVector {
    pub q: Vec<f64>,
}

impl RcarVector {
    pub fn new(game: &Game, q: Vec<f64>, tol: f64) -> Result<Self, GameError> {
        if q.len() != game.n_outcomes() || q.iter().any(|v| !(*v > 0.0 && *v <= 1.0 + tol)) {
            return Err(GameError::InvalidStrategy(
                "RCAR vector entries must lie in (0, 1]".into(),
            ));
        }
        let s = Self { q };
        for y in 0..game.n_messages() {
            let sum = s.message_sum(game, y);
            if sum > 1.0 + tol {
                return Err(GameError::InvalidStrategy(format!(
                    "RCAR vector sums to {sum} on message {y}"
                )));
            }
        }
        Ok(s)
    }

    pub fn message_sum(&self, game: &Game, y: usize) -> f64 {
        game.message(y).iter().map(|&x| self.q[x]).sum()
    }
}

/// Output of the quizmaster solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub strategy: QuizStrategy,
    pub kt: KtVector,
    pub value: f64,
    pub iterations: u64,
    pub converged: bool,
    pub residuals: BTreeMap<String, f64>,
}

/// `sum_{x, y} P(x, y) L(x, Q_y)`, skipping zero-mass pairs.
pub fn expected_loss(game: &Game, p: &QuizStrategy, q: &ContestantStrategy) -> f64 {
    game.index
        .pairs()
        .iter()
        .zip(&p.joint)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&(x, y), &w)| w * game.loss.loss(x, &q.per_message[y]))
        .sum()
}

/// `sum_y P(y) H_L(P(. | y))` over messages with positive mass.
pub fn expected_entropy(game: &Game, p: &QuizStrategy) -> f64 {
    let mut column = vec![0.0; game.n_outcomes()];
    let mut total = 0.0;
    for y in 0..game.n_messages() {
        let range = game.index.message_pairs(y);
        let mass: f64 = p.joint[range.clone()].iter().sum();
        if !(mass > 0.0) {
            continue;
        }
        for id in range.clone() {
            column[game.index.pair(id).0] = p.joint[id] / mass;
        }
        total += mass * game.loss.entropy(&column);
        for id in range {
            column[game.index.pair(id).0] = 0.0;
        }
    }
    total
}

/// `sum_x p_x max_{y contains x} L(x, Q_y)`.
pub fn worst_case_loss(game: &Game, q: &ContestantStrategy) -> f64 {
    (0..game.n_outcomes())
        .map(|x| {
            let worst = game
                .messages_containing(x)
                .map(|y| game.loss.loss(x, &q.per_message[y]))
                .fold(f64::NEG_INFINITY, f64::max);
            game.marginal[x] * worst
        })
        .sum()
}
