//! Minimax contestant strategy for hard 0-1 loss.
//!
//! Against hard 0-1 loss the contestant must commit to one outcome per
//! message. Outcomes he can predict correctly in every message containing
//! them form a stable set of the co-occurrence graph, so the best he can do is
//! a maximum-weight stable set `S`, for a worst-case loss of `1 - p(S)`.

use serde::{Deserialize, Serialize};

use crate::game::{worst_case_loss, ContestantStrategy, Game};

use super::SolverError;

pub const STABLE_SET_MAX_OUTCOMES: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableSetResult {
    pub stable_set: Vec<usize>,
    pub weight: f64,
    pub strategy: ContestantStrategy,
    pub worst_case: f64,
}

struct Search<'a> {
    adjacency: &'a [u32],
    weights: &'a [f64],
    best_weight: f64,
    best_set: u32,
}

impl Search<'_> {
    /// Branches on the lowest candidate: take it (dropping its neighbours) or skip it.
    fn branch(&mut self, chosen: u32, weight: f64, candidates: u32) {
        if candidates == 0 {
            if weight > self.best_weight {
                self.best_weight = weight;
                self.best_set = chosen;
            }
            return;
        }
        let bound: f64 = weight + bits(candidates).map(|v| self.weights[v]).sum::<f64>();
        if bound <= self.best_weight {
            return;
        }
        let v = candidates.trailing_zeros() as usize;
        let rest = candidates & !(1 << v);
        self.branch(
            chosen | (1 << v),
            weight + self.weights[v],
            rest & !self.adjacency[v],
        );
        self.branch(chosen, weight, rest);
    }
}

fn bits(mut set: u32) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if set == 0 {
            return None;
        }
        let v = set.trailing_zeros() as usize;
        set &= set - 1;
        Some(v)
    })
}

/// Exact maximum-weight stable set by branch and bound; at most 30 outcomes.
pub fn solve_hard01_contestant(game: &Game) -> Result<StableSetResult, SolverError> {
    let n = game.n_outcomes();
    if n > STABLE_SET_MAX_OUTCOMES {
        return Err(SolverError::TooLarge(format!(
            "{n} outcomes exceed the exhaustive stable-set bound of {STABLE_SET_MAX_OUTCOMES}"
        )));
    }
    let mut adjacency = vec![0u32; n];
    for m in game.messages() {
        for &a in m {
            for &b in m {
                if a != b {
                    adjacency[a] |= 1 << b;
                }
            }
        }
    }
    let full = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut search = Search {
        adjacency: &adjacency,
        weights: game.marginal(),
        best_weight: -1.0,
        best_set: 0,
    };
    search.branch(0, 0.0, full);
    let stable_set: Vec<usize> = bits(search.best_set).collect();
    let per_message = game
        .messages()
        .iter()
        .map(|m| {
            let pick = m
                .iter()
                .copied()
                .find(|x| stable_set.contains(x))
                .unwrap_or(m[0]);
            let mut q = vec![0.0; n];
            q[pick] = 1.0;
            q
        })
        .collect();
    let strategy = ContestantStrategy { per_message };
    let weight: f64 = stable_set.iter().map(|&x| game.marginal()[x]).sum();
    let worst_case = worst_case_loss(
        &game.with_loss(crate::losses::LossSpec::hard01())?,
        &strategy,
    );
    Ok(StableSetResult {
        stable_set,
        weight,
        strategy,
        worst_case,
    })
}
