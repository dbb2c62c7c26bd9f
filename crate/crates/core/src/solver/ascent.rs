//! Block ascent for smooth proper losses.
//!
//! For a proper differentiable loss the partial derivative of
//! `sum_y P(y) H(P(.|y))` with respect to `P(x, y)` is `L(x, P(.|y))`. Every
//! move shifts mass along a sparse feasible direction and takes an exact
//! line search, found by bisection on the derivative of the concave
//! one-dimensional restriction. Three kinds of moves are used:
//!
//! * pairwise: one outcome's mass goes from its worst active message to its best one;
//! * drop: a used message is emptied, each outcome going to its best other message;
//! * activation: an unused message receives the distribution maximizing
//!   `H(P') - sum_x P'(x) mu_x`, where `mu_x` is the cheapest current gradient.
//!
//! Activation and drop are what let the iterate enter and leave the faces
//! where whole messages are unused, which single-outcome moves cannot do.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::game::{expected_entropy, Game, KtVector, QuizStrategy, SolveReport};

use super::SolverOptions;

/// Sweeps without a relative improvement above this count as stalled.
const STALL_IMPROVEMENT: f64 = 1e-15;
const STALL_SWEEPS: u64 = 200;
const BISECTION_STEPS: usize = 80;

pub(super) struct Ascent<'a> {
    game: &'a Game,
    pub(super) joint: Vec<f64>,
    mass: Vec<f64>,
    grad: Vec<f64>,
    cond: Vec<f64>,
    support_eps: f64,
}

impl<'a> Ascent<'a> {
    pub(super) fn new(game: &'a Game, joint: Vec<f64>, support_eps: f64) -> Self {
        let mut s = Self {
            game,
            joint,
            mass: vec![0.0; game.n_messages()],
            grad: vec![0.0; game.index().len()],
            cond: vec![0.0; game.n_outcomes()],
            support_eps,
        };
        for y in 0..game.n_messages() {
            s.refresh(y);
        }
        s
    }

    /// Recomputes the mass and gradients of message `y`.
    fn refresh(&mut self, y: usize) {
        let index = self.game.index();
        let range = index.message_pairs(y);
        let mass: f64 = self.joint[range.clone()].iter().sum();
        self.mass[y] = mass;
        let loss = self.game.loss();
        if mass > 0.0 {
            for id in range.clone() {
                self.cond[index.pair(id).0] = self.joint[id] / mass;
            }
            for id in range.clone() {
                self.grad[id] = loss.loss(index.pair(id).0, &self.cond);
            }
            for id in range {
                self.cond[index.pair(id).0] = 0.0;
            }
        } else {
            for id in range {
                let x = index.pair(id).0;
                self.cond[x] = 1.0;
                self.grad[id] = loss.loss(x, &self.cond);
                self.cond[x] = 0.0;
            }
        }
    }

    fn used(&self, y: usize) -> bool {
        self.mass[y] > self.support_eps
    }

    /// Derivative of the objective along `dir` at step `t`.
    fn directional_derivative(&mut self, dir: &[(usize, f64)], t: f64, messages: &[usize]) -> f64 {
        let index = self.game.index();
        let loss = self.game.loss();
        let mut total = 0.0;
        for &y in messages {
            let range = index.message_pairs(y);
            let mut mass = 0.0;
            for id in range.clone() {
                let coef = dir.iter().find(|(d, _)| *d == id).map_or(0.0, |(_, c)| *c);
                let v = (self.joint[id] + t * coef).max(0.0);
                self.cond[index.pair(id).0] = v;
                mass += v;
            }
            if !(mass > 0.0) {
                // Fall back to the current column; only reached at the far end of a drop.
                mass = self.mass[y];
                for id in range.clone() {
                    self.cond[index.pair(id).0] = self.joint[id];
                }
            }
            for id in range.clone() {
                self.cond[index.pair(id).0] /= mass;
            }
            for &(id, coef) in dir.iter().filter(|(id, _)| range.contains(id)) {
                total += coef * loss.loss(index.pair(id).0, &self.cond);
            }
            for id in range {
                self.cond[index.pair(id).0] = 0.0;
            }
        }
        total
    }

    /// Exact line search along `dir` on `[0, t_max]`; applies the step and
    /// returns it. The returned step never decreases the objective.
    fn line_search(&mut self, dir: &[(usize, f64)], t_max: f64) -> f64 {
        if !(t_max > 0.0) {
            return 0.0;
        }
        let mut messages: Vec<usize> = dir
            .iter()
            .map(|&(id, _)| self.game.index().pair(id).1)
            .collect();
        messages.sort_unstable();
        messages.dedup();
        let t = if self.directional_derivative(dir, t_max * (1.0 - 1e-10), &messages) >= 0.0 {
            t_max
        } else {
            let (mut lo, mut hi) = (0.0, t_max);
            for _ in 0..BISECTION_STEPS {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if self.directional_derivative(dir, mid, &messages) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        if t > 0.0 {
            let marginal = self.game.marginal();
            for &(id, coef) in dir {
                let x = self.game.index().pair(id).0;
                let v = self.joint[id] + t * coef;
                self.joint[id] = if v <= 1e-16 * marginal[x]
                    || (t == t_max && coef < 0.0 && v <= 1e-13 * marginal[x])
                {
                    0.0
                } else {
                    v
                };
            }
            for &y in &messages {
                self.refresh(y);
            }
        }
        t
    }

    /// Moves outcome `x` from its worst active message towards its best one.
    fn pairwise(&mut self, x: usize) -> bool {
        let index = self.game.index();
        let ids = index.outcome_pairs(x);
        let mut worst: Option<usize> = None;
        let mut best: Option<usize> = None;
        for &id in ids {
            let y = index.pair(id).1;
            if self.joint[id] > 0.0 && worst.map_or(true, |w| self.grad[id] < self.grad[w]) {
                worst = Some(id);
            }
            if self.mass[y] > 0.0 && best.map_or(true, |b| self.grad[id] > self.grad[b]) {
                best = Some(id);
            }
        }
        let (Some(a), Some(b)) = (worst, best) else {
            return false;
        };
        if a == b || !(self.grad[b] - self.grad[a] > 0.0) {
            return false;
        }
        let t_max = self.joint[a];
        self.line_search(&[(a, -1.0), (b, 1.0)], t_max) > 0.0
    }

    /// Best message other than `skip` for outcome `x`, among nonempty messages.
    fn best_other(&self, x: usize, skip: usize) -> Option<usize> {
        let index = self.game.index();
        index
            .outcome_pairs(x)
            .iter()
            .copied()
            .filter(|&id| {
                let y = index.pair(id).1;
                y != skip && self.mass[y] > 0.0
            })
            .max_by(|&a, &b| {
                self.grad[a]
                    .partial_cmp(&self.grad[b])
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
    }

    /// Empties message `y` if that direction is ascending.
    fn drop_message(&mut self, y: usize) -> bool {
        let index = self.game.index();
        let mut dir = Vec::new();
        let mut slope = 0.0;
        for id in index.message_pairs(y) {
            let w = self.joint[id];
            if w <= 0.0 {
                continue;
            }
            let Some(target) = self.best_other(index.pair(id).0, y) else {
                return false;
            };
            slope += w * (self.grad[target] - self.grad[id]);
            dir.push((id, -w));
            dir.push((target, w));
        }
        if dir.is_empty() || !(slope > 0.0) {
            return false;
        }
        merge_duplicates(&mut dir);
        self.line_search(&dir, 1.0) > 0.0
    }

    /// Cheapest active gradient of every outcome, excluding message `skip`.
    fn cheapest(&self, skip: usize) -> (Vec<f64>, Vec<Option<usize>>) {
        let index = self.game.index();
        let n = self.game.n_outcomes();
        let mut mu = vec![f64::INFINITY; n];
        let mut src = vec![None; n];
        for x in 0..n {
            for &id in index.outcome_pairs(x) {
                if index.pair(id).1 != skip && self.joint[id] > 0.0 && self.grad[id] < mu[x] {
                    mu[x] = self.grad[id];
                    src[x] = Some(id);
                }
            }
        }
        (mu, src)
    }

    /// Largest gain rate `max_P' H(P') - P'.mu` of moving mass into unused message `y`.
    fn activation_gain(&self, y: usize, mu: &[f64]) -> Option<(f64, Vec<f64>)> {
        let members = self.game.message(y);
        if members.iter().any(|&x| !mu[x].is_finite()) {
            // an outcome with no other active message: restrict to the others
            let finite: Vec<usize> = members
                .iter()
                .copied()
                .filter(|&x| mu[x].is_finite())
                .collect();
            if finite.is_empty() {
                return None;
            }
            let capped: Vec<f64> = mu
                .iter()
                .map(|m| if m.is_finite() { *m } else { 0.0 })
                .collect();
            return self.game.loss().max_entropy_gap(&capped, &finite);
        }
        self.game.loss().max_entropy_gap(mu, members)
    }

    fn activate(&mut self, y: usize) -> bool {
        let (mu, src) = self.cheapest(y);
        let Some((gain, target)) = self.activation_gain(y, &mu) else {
            return false;
        };
        if !(gain > 0.0) {
            return false;
        }
        let index = self.game.index();
        let mut dir = Vec::new();
        let mut t_max = f64::INFINITY;
        for &x in self.game.message(y) {
            if target[x] <= 0.0 {
                continue;
            }
            let Some(from) = src[x] else { continue };
            let to = index.find(x, y).unwrap();
            dir.push((from, -target[x]));
            dir.push((to, target[x]));
            t_max = t_max.min(self.joint[from] / target[x]);
        }
        if dir.is_empty() {
            return false;
        }
        self.line_search(&dir, t_max) > 0.0
    }

    /// `lambda_x = max` over used messages containing `x` of `L(x, P(.|y))`.
    pub(super) fn lambda(&self) -> Vec<f64> {
        let index = self.game.index();
        (0..self.game.n_outcomes())
            .map(|x| {
                let ids = index.outcome_pairs(x);
                let over_used = ids
                    .iter()
                    .filter(|&&id| self.used(index.pair(id).1))
                    .map(|&id| self.grad[id])
                    .fold(f64::NEG_INFINITY, f64::max);
                if over_used.is_finite() {
                    over_used
                } else {
                    ids.iter()
                        .filter(|&&id| self.joint[id] > 0.0)
                        .map(|&id| self.grad[id])
                        .fold(f64::NEG_INFINITY, f64::max)
                }
            })
            .collect()
    }

    /// `(gradient spread, unused-message domination violation)`.
    pub(super) fn residuals(&self) -> (f64, f64) {
        let index = self.game.index();
        let lambda = self.lambda();
        let mut spread: f64 = 0.0;
        for (x, &lam) in lambda.iter().enumerate() {
            let low = index
                .outcome_pairs(x)
                .iter()
                .filter(|&&id| self.joint[id] > 0.0)
                .map(|&id| self.grad[id])
                .fold(f64::INFINITY, f64::min);
            spread = spread.max(lam - low);
        }
        let mut domination: f64 = 0.0;
        for y in 0..self.game.n_messages() {
            if self.used(y) {
                continue;
            }
            let (mu, _) = self.cheapest(usize::MAX);
            if let Some((gain, _)) = self.activation_gain(y, &mu) {
                domination = domination.max(gain);
            }
        }
        (spread, domination)
    }

    /// One sweep over all moves; returns whether anything moved.
    fn sweep(&mut self) -> bool {
        let mut moved = false;
        for x in 0..self.game.n_outcomes() {
            moved |= self.pairwise(x);
        }
        for y in 0..self.game.n_messages() {
            if self.mass[y] > 0.0 {
                moved |= self.drop_message(y);
            }
        }
        for y in 0..self.game.n_messages() {
            if !self.used(y) {
                moved |= self.activate(y);
            }
        }
        moved
    }

    fn value(&self) -> f64 {
        expected_entropy(
            self.game,
            &QuizStrategy {
                joint: self.joint.clone(),
            },
        )
    }

    /// Rescales rows to undo floating drift in the marginal constraints.
    fn renormalize_rows(&mut self) {
        let index = self.game.index();
        for x in 0..self.game.n_outcomes() {
            let ids = index.outcome_pairs(x);
            let row: f64 = ids.iter().map(|&id| self.joint[id]).sum();
            let target = self.game.marginal()[x];
            if row > 0.0 {
                ids.iter().for_each(|&id| self.joint[id] *= target / row);
            }
        }
        for y in 0..self.game.n_messages() {
            self.refresh(y);
        }
    }
}

fn merge_duplicates(dir: &mut Vec<(usize, f64)>) {
    dir.sort_by_key(|&(id, _)| id);
    let mut merged: Vec<(usize, f64)> = Vec::with_capacity(dir.len());
    for &(id, c) in dir.iter() {
        match merged.last_mut() {
            Some((last, acc)) if *last == id => *acc += c,
            _ => merged.push((id, c)),
        }
    }
    *dir = merged;
}

struct RunResult {
    joint: Vec<f64>,
    value: f64,
    lambda: Vec<f64>,
    spread: f64,
    domination: f64,
    iterations: u64,
    trace: Vec<f64>,
}

fn random_start(game: &Game, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let index = game.index();
    let mut joint = vec![0.0; index.len()];
    for x in 0..game.n_outcomes() {
        let ids = index.outcome_pairs(x);
        // uniform on the simplex via normalized exponentials
        let draws: Vec<f64> = ids.iter().map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        let total: f64 = draws.iter().sum();
        for (&id, d) in ids.iter().zip(draws) {
            joint[id] = game.marginal()[x] * d / total;
        }
    }
    joint
}

fn run(game: &Game, opts: &SolverOptions, start: Vec<f64>) -> RunResult {
    let mut state = Ascent::new(game, start, opts.support_epsilon);
    let mut value = state.value();
    let mut trace = vec![value];
    let mut best_recent = value;
    let mut since_improvement = 0;
    let mut iterations = 0;
    let (mut spread, mut domination) = state.residuals();
    while iterations < opts.max_iterations && spread.max(domination) > opts.value_tolerance {
        iterations += 1;
        let moved = state.sweep();
        value = state.value();
        trace.push(value);
        (spread, domination) = state.residuals();
        if value > best_recent + STALL_IMPROVEMENT * (1.0 + best_recent.abs()) {
            best_recent = value;
            since_improvement = 0;
        } else {
            since_improvement += 1;
        }
        if !moved || since_improvement >= STALL_SWEEPS {
            break;
        }
    }
    state.renormalize_rows();
    let (s, d) = state.residuals();
    (spread, domination) = (s, d);
    RunResult {
        value: state.value(),
        lambda: state.lambda(),
        joint: state.joint,
        spread,
        domination,
        iterations,
        trace,
    }
}

pub(super) fn solve(game: &Game, opts: &SolverOptions) -> (SolveReport, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<RunResult> = None;
    let mut total_iterations = 0;
    for _ in 0..opts.restarts {
        let start = random_start(game, &mut rng);
        let r = run(game, opts, start);
        total_iterations += r.iterations;
        let better = match &best {
            None => true,
            Some(b) => {
                let scale = 1.0 + b.value.abs();
                r.value > b.value + 1e-13 * scale
                    || (r.value >= b.value - 1e-13 * scale
                        && r.spread.max(r.domination) < b.spread.max(b.domination))
            }
        };
        if better {
            best = Some(r);
        }
    }
    let best = best.expect("at least one restart");
    let residual = best.spread.max(best.domination);
    let mut residuals = BTreeMap::new();
    residuals.insert("gradient_spread".to_string(), best.spread);
    residuals.insert("unused_domination".to_string(), best.domination);
    residuals.insert("kt_residual".to_string(), residual);
    let report = SolveReport {
        strategy: QuizStrategy { joint: best.joint },
        kt: KtVector {
            lambda: best.lambda,
        },
        value: best.value,
        iterations: total_iterations,
        converged: residual <= opts.certificate_tolerance,
        residuals,
    };
    (report, best.trace)
}
