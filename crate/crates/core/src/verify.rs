//! Independent certificate checks for solver output.
//!
//! `check_kt` does not trust any closed form for the hyperplane test: it
//! searches each message simplex on a deterministic grid and refines the
//! worst point locally, using only `LossSpec::entropy`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::game::{
    conditional, expected_entropy, worst_case_loss, ContestantStrategy, Game, KtVector,
    QuizStrategy, RcarVector, Tolerances,
};
use crate::simplex;
use crate::solver::{oracle_grid, SolverError};

/// Grid points per message simplex in the domination check, for five or more outcomes.
const LARGE_GRID_BUDGET: usize = 100_000;
const REFINEMENT_STEPS: usize = 20;
/// Pattern moves allowed per step size; the grid start is within a few steps of the optimum.
const MOVES_PER_STEP: usize = 64;
/// Gains below this are rounding noise on flat pieces of the entropy.
const MIN_GAIN: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckMode {
    /// The message is used; its hyperplane must touch the entropy at the conditional.
    Supporting,
    /// The message is unused; its hyperplane only has to lie above the entropy.
    Dominating,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageCheck {
    pub mode: CheckMode,
    pub violation: f64,
    pub touch_point: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub passed: bool,
    pub max_violation: f64,
    pub per_message: BTreeMap<usize, MessageCheck>,
    pub notes: Vec<String>,
}

impl CertificateReport {
    fn finish(per_message: BTreeMap<usize, MessageCheck>, notes: Vec<String>, tol: f64) -> Self {
        let max_violation = per_message
            .values()
            .map(|m| m.violation)
            .fold(0.0, f64::max);
        Self {
            passed: max_violation <= tol,
            max_violation,
            per_message,
            notes,
        }
    }
}

/// Grid resolution used for a message with `k` outcomes.
fn grid_resolution(k: usize) -> usize {
    match k {
        0 | 1 => 1,
        2 => 99_999,
        3 => 445,
        4 => 50,
        _ => simplex::resolution_for_budget(k, LARGE_GRID_BUDGET, 1_000),
    }
}

/// `max_{P' in Delta_y} H(P') - P'.lambda` and a maximizer, by grid search
/// followed by pairwise pattern search with a halving step.
fn domination_gap(game: &Game, members: &[usize], lambda: &[f64]) -> (f64, Vec<f64>) {
    let n = game.n_outcomes();
    let loss = game.loss();
    let gap = |p: &[f64]| loss.entropy(p) - members.iter().map(|&x| p[x] * lambda[x]).sum::<f64>();
    let r = grid_resolution(members.len());
    let mut best = f64::NEG_INFINITY;
    let mut best_p = vec![0.0; n];
    let mut p = vec![0.0; n];
    simplex::for_each_composition(members.len(), r, |parts| {
        for (&x, &c) in members.iter().zip(parts) {
            p[x] = c as f64 / r as f64;
        }
        let v = gap(&p);
        if v > best {
            best = v;
            best_p.copy_from_slice(&p);
        }
    });
    let mut step = 1.0 / r as f64;
    let mut trial = best_p.clone();
    for _ in 0..REFINEMENT_STEPS {
        let mut improved = true;
        let mut moves = 0;
        while improved && moves < MOVES_PER_STEP {
            improved = false;
            moves += 1;
            for &a in members {
                for &b in members {
                    if a == b || best_p[a] <= 0.0 {
                        continue;
                    }
                    let d = step.min(best_p[a]);
                    trial.copy_from_slice(&best_p);
                    trial[a] -= d;
                    trial[b] += d;
                    let v = gap(&trial);
                    if v > best + MIN_GAIN {
                        best = v;
                        best_p.copy_from_slice(&trial);
                        improved = true;
                    }
                }
            }
        }
        step *= 0.5;
    }
    (best, best_p)
}

/// Checks that `lambda` is a KT vector for `p`: on every message the
/// hyperplane `P' -> P'.lambda` dominates the entropy on the message simplex,
/// and on used messages it also touches the entropy at `P(.|y)`.
pub fn check_kt(game: &Game, p: &QuizStrategy, lambda: &KtVector, tol: f64) -> CertificateReport {
    let eps = Tolerances::default().support_epsilon;
    let loss = game.loss();
    let mut per_message = BTreeMap::new();
    let mut notes = Vec::new();
    for y in 0..game.n_messages() {
        let members = game.message(y);
        let (dom, argmax) = domination_gap(game, members, &lambda.lambda);
        let mut violation = dom.max(0.0);
        let check = if p.message_mass(game, y) > eps {
            let c = conditional(game, p, y).expect("used message has mass");
            let support = (loss.entropy(&c)
                - members
                    .iter()
                    .map(|&x| c[x] * lambda.lambda[x])
                    .sum::<f64>())
            .abs();
            if support > tol {
                notes.push(format!("message {y}: hyperplane misses the entropy at the conditional by {support:.3e}"));
            }
            violation = violation.max(support);
            MessageCheck {
                mode: CheckMode::Supporting,
                violation,
                touch_point: Some(c),
            }
        } else {
            MessageCheck {
                mode: CheckMode::Dominating,
                violation,
                touch_point: Some(argmax),
            }
        };
        if dom > tol {
            notes.push(format!(
                "message {y}: entropy exceeds the hyperplane by {dom:.3e}"
            ));
        }
        per_message.insert(y, check);
    }
    CertificateReport::finish(per_message, notes, tol)
}

/// Checks `P(x|y) = q_x` on used messages and `sum_{x in y} q_x <= 1` everywhere.
pub fn check_rcar(game: &Game, p: &QuizStrategy, q: &RcarVector, tol: f64) -> CertificateReport {
    let eps = Tolerances::default().support_epsilon;
    let mut per_message = BTreeMap::new();
    let mut notes = Vec::new();
    for y in 0..game.n_messages() {
        let members = game.message(y);
        let excess = (q.message_sum(game, y) - 1.0).max(0.0);
        let check = if p.message_mass(game, y) > eps {
            let c = conditional(game, p, y).expect("used message has mass");
            let mismatch = members
                .iter()
                .map(|&x| (c[x] - q.q[x]).abs())
                .fold(0.0, f64::max);
            if mismatch > tol {
                notes.push(format!(
                    "message {y}: conditional differs from q by {mismatch:.3e}"
                ));
            }
            MessageCheck {
                mode: CheckMode::Supporting,
                violation: mismatch.max(excess),
                touch_point: Some(c),
            }
        } else {
            MessageCheck {
                mode: CheckMode::Dominating,
                violation: excess,
                touch_point: None,
            }
        };
        if excess > tol {
            notes.push(format!("message {y}: q sums to {:.6}", 1.0 + excess));
        }
        per_message.insert(y, check);
    }
    CertificateReport::finish(per_message, notes, tol)
}

/// Worst-case loss of `q` minus expected entropy of `p`; nonnegative up to
/// rounding, zero exactly at a Nash equilibrium.
pub fn check_nash_gap(game: &Game, p: &QuizStrategy, q: &ContestantStrategy) -> f64 {
    worst_case_loss(game, q) - expected_entropy(game, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EqualizerScope {
    /// Compare losses on messages the quizmaster uses.
    UsedMessages,
    /// Also require equal losses for the optimal prediction on unused
    /// messages (smooth proper kinds only).
    AllMessages,
}

/// Whether every outcome's loss `L(x, P(.|y))` equals `lambda_x` on the
/// messages in scope.
pub fn check_equalizer(
    game: &Game,
    p: &QuizStrategy,
    lambda: &KtVector,
    tol: f64,
    scope: EqualizerScope,
) -> bool {
    let eps = Tolerances::default().support_epsilon;
    let loss = game.loss();
    (0..game.n_messages()).all(|y| {
        let members = game.message(y);
        let prediction = if p.message_mass(game, y) > eps {
            conditional(game, p, y).expect("used message has mass")
        } else {
            match scope {
                EqualizerScope::UsedMessages => return true,
                EqualizerScope::AllMessages => {
                    match loss.max_entropy_gap(&lambda.lambda, members) {
                        Some((_, q)) => q,
                        None => return true,
                    }
                }
            }
        };
        members
            .iter()
            .all(|&x| (loss.loss(x, &prediction) - lambda.lambda[x]).abs() <= tol)
    })
}

/// For message pairs differing by one exchanged outcome, `y1 = s + x1` and
/// `y2 = s + x2`, with the loss symmetric between `x1` and `x2` and
/// `P(x1, y1) > 0`, checks `lambda_x1 <= lambda_x2`.
pub fn check_loss_exchange(
    game: &Game,
    p: &QuizStrategy,
    lambda: &KtVector,
    tol: f64,
) -> CertificateReport {
    let eps = Tolerances::default().support_epsilon;
    let mut per_message: BTreeMap<usize, MessageCheck> = BTreeMap::new();
    let mut notes = Vec::new();
    let msgs = game.messages();
    for (a, y1) in msgs.iter().enumerate() {
        for (b, y2) in msgs.iter().enumerate() {
            if a == b || y1.len() != y2.len() {
                continue;
            }
            let only1: Vec<usize> = y1
                .iter()
                .copied()
                .filter(|x| y2.binary_search(x).is_err())
                .collect();
            let only2: Vec<usize> = y2
                .iter()
                .copied()
                .filter(|x| y1.binary_search(x).is_err())
                .collect();
            let ([x1], [x2]) = (only1.as_slice(), only2.as_slice()) else {
                continue;
            };
            if !game.loss().is_symmetric_between(*x1, *x2) || p.get(game, *x1, a) <= eps {
                continue;
            }
            let violation = (lambda.lambda[*x1] - lambda.lambda[*x2]).max(0.0);
            if violation > tol {
                notes.push(format!(
                    "messages {a}/{b}: lambda[{}] exceeds lambda[{}] by {violation:.3e}",
                    game.outcomes()[*x1],
                    game.outcomes()[*x2]
                ));
            }
            let entry = per_message.entry(a).or_insert(MessageCheck {
                mode: CheckMode::Supporting,
                violation: 0.0,
                touch_point: None,
            });
            entry.violation = entry.violation.max(violation);
        }
    }
    if per_message.is_empty() {
        notes.push("no qualifying exchange pairs".to_string());
    }
    CertificateReport::finish(per_message, notes, tol)
}

/// Value of the grid oracle.
pub fn brute_force_value(game: &Game, resolution: usize) -> Result<f64, SolverError> {
    oracle_grid(game, resolution).map(|(v, _)| v)
}
