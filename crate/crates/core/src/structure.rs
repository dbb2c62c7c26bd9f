//! Message-structure analysis: dominated messages, connected components,
//! graph and matroid tests, and the construction of marginals on which
//! logarithmic and Brier loss disagree.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{validate_game, Game, QuizStrategy, RawGame, RcarVector};

/// Tightness tolerance for message sums in the greedy construction.
const TIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StructureError {
    #[error("construction not applicable: {0}")]
    NotApplicable(String),
    #[error("construction failed: {0}")]
    ConstructionFailed(String),
    #[error("perturbation {epsilon} must lie strictly between 0 and {bound}")]
    InvalidEpsilon { epsilon: f64, bound: f64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub is_partition: bool,
    pub is_graph: bool,
    pub is_matroid: bool,
    pub is_connected: bool,
    pub has_dominated: bool,
    pub components: Vec<Vec<usize>>,
}

/// Which messages were dropped by [`remove_dominated`], and why.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemovalLog {
    /// Original indices of the surviving messages, in order.
    pub kept: Vec<usize>,
    /// `(removed, superset)` pairs of original message indices.
    pub removed: Vec<(usize, usize)>,
}

impl RemovalLog {
    /// Lifts a strategy of the reduced game to the original one, with zero
    /// mass on removed messages.
    pub fn embed(&self, original: &Game, reduced: &Game, p: &QuizStrategy) -> QuizStrategy {
        let mut joint = vec![0.0; original.index().len()];
        for (id, &(x, y)) in reduced.index().pairs().iter().enumerate() {
            let target = original
                .index()
                .find(x, self.kept[y])
                .expect("kept message keeps its outcomes");
            joint[target] = p.joint[id];
        }
        QuizStrategy { joint }
    }
}

fn is_strict_subset(a: &[usize], b: &[usize]) -> bool {
    a.len() < b.len() && a.iter().all(|x| b.binary_search(x).is_ok())
}

fn rebuild(game: &Game, messages: Vec<Vec<usize>>) -> Game {
    validate_game(RawGame {
        outcomes: game.outcomes().to_vec(),
        messages,
        marginal: game.marginal().to_vec(),
        loss: game.loss().clone(),
    })
    .expect("dropping dominated messages keeps a game valid")
}

/// Drops every message that is a strict subset of another message.
pub fn remove_dominated(game: &Game) -> (Game, RemovalLog) {
    let msgs = game.messages();
    let mut log = RemovalLog {
        kept: Vec::new(),
        removed: Vec::new(),
    };
    for (y, m) in msgs.iter().enumerate() {
        match msgs.iter().position(|other| is_strict_subset(m, other)) {
            Some(sup) => log.removed.push((y, sup)),
            None => log.kept.push(y),
        }
    }
    let reduced = rebuild(game, log.kept.iter().map(|&y| msgs[y].clone()).collect());
    (reduced, log)
}

pub fn has_dominated(messages: &[Vec<usize>]) -> bool {
    messages
        .iter()
        .any(|a| messages.iter().any(|b| is_strict_subset(a, b)))
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Connected components of the hypergraph, each an ascending outcome list,
/// ordered by smallest member.
pub fn components(n_outcomes: usize, messages: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::new(n_outcomes);
    for m in messages {
        for w in m.windows(2) {
            uf.union(w[0], w[1]);
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n_outcomes];
    for x in 0..n_outcomes {
        let r = uf.find(x);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(x);
    }
    groups
}

/// One connected piece of a game.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub game: Game,
    /// Original index of each sub-game outcome.
    pub outcomes: Vec<usize>,
    /// Original index of each sub-game message.
    pub messages: Vec<usize>,
    /// Total marginal mass of the component.
    pub weight: f64,
}

/// Splits a game into its connected components with renormalized marginals.
/// The loss is restricted to each component's outcomes.
pub fn decompose(game: &Game) -> Vec<Component> {
    components(game.n_outcomes(), game.messages())
        .into_iter()
        .map(|outs| {
            let mut local = vec![usize::MAX; game.n_outcomes()];
            for (i, &x) in outs.iter().enumerate() {
                local[x] = i;
            }
            let msg_ids: Vec<usize> = (0..game.n_messages())
                .filter(|&y| local[game.message(y)[0]] != usize::MAX)
                .collect();
            let weight: f64 = outs.iter().map(|&x| game.marginal()[x]).sum();
            let mut marginal: Vec<f64> =
                outs.iter().map(|&x| game.marginal()[x] / weight).collect();
            let s: f64 = marginal.iter().sum();
            marginal.iter_mut().for_each(|v| *v /= s);
            let sub = validate_game(RawGame {
                outcomes: outs.iter().map(|&x| game.outcomes()[x].clone()).collect(),
                messages: msg_ids
                    .iter()
                    .map(|&y| game.message(y).iter().map(|&x| local[x]).collect())
                    .collect(),
                marginal,
                loss: game.loss().restrict(&outs),
            })
            .expect("a component of a valid game is valid");
            Component {
                game: sub,
                outcomes: outs,
                messages: msg_ids,
                weight,
            }
        })
        .collect()
}

/// Scales component strategies by their weights and assembles a strategy for `game`.
pub fn recombine(game: &Game, parts: &[Component], strategies: &[QuizStrategy]) -> QuizStrategy {
    let mut joint = vec![0.0; game.index().len()];
    for (c, p) in parts.iter().zip(strategies) {
        for (id, &(x, y)) in c.game.index().pairs().iter().enumerate() {
            let target = game
                .index()
                .find(c.outcomes[x], c.messages[y])
                .expect("component pair exists");
            joint[target] = c.weight * p.joint[id];
        }
    }
    QuizStrategy { joint }
}

pub fn is_graph_game(game: &Game) -> bool {
    game.messages().iter().all(|m| m.len() <= 2)
}

pub fn is_partition(messages: &[Vec<usize>]) -> bool {
    let mut seen = HashSet::new();
    messages.iter().flatten().all(|x| seen.insert(*x))
}

/// Exhaustive basis-exchange test: for all `y1, y2` and `x1 in y1 \ y2` some
/// `x2 in y2 \ y1` has `y1 - x1 + x2` in the family.
pub fn is_matroid(messages: &[Vec<usize>]) -> bool {
    let Some(first) = messages.first() else {
        return false;
    };
    if messages.iter().any(|m| m.len() != first.len()) {
        return false;
    }
    let family: HashSet<Vec<usize>> = messages.iter().map(|m| sorted(m)).collect();
    for y1 in &family {
        for y2 in &family {
            for &x1 in y1.iter().filter(|x| !y2.contains(x)) {
                let found = y2
                    .iter()
                    .filter(|x| !y1.contains(x))
                    .any(|&x2| family.contains(&exchange(y1, x1, x2)));
                if !found {
                    return false;
                }
            }
        }
    }
    true
}

fn sorted(m: &[usize]) -> Vec<usize> {
    let mut v = m.to_vec();
    v.sort_unstable();
    v
}

/// `y - out + inn`, sorted.
fn exchange(y: &[usize], out: usize, inn: usize) -> Vec<usize> {
    let mut v: Vec<usize> = y.iter().copied().filter(|&x| x != out).collect();
    v.push(inn);
    v.sort_unstable();
    v
}

pub fn classify(game: &Game) -> Classification {
    let comps = components(game.n_outcomes(), game.messages());
    Classification {
        is_partition: is_partition(game.messages()),
        is_graph: is_graph_game(game),
        is_matroid: is_matroid(game.messages()),
        is_connected: comps.len() == 1,
        has_dominated: has_dominated(game.messages()),
        components: comps,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Nonuniform,
    Uniform,
}

/// A marginal for which the log-loss optimum is RCAR with vector `rcar`,
/// while Brier loss has no RCAR optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub branch: Branch,
    pub marginal: Vec<f64>,
    pub rcar: RcarVector,
    /// `(uniform, nonuniform)` pair of intersecting tight messages.
    pub witness: (usize, usize),
    /// The game with the constructed marginal.
    pub game: Game,
    /// The RCAR strategy with uniform mass on the tight messages.
    pub strategy: QuizStrategy,
    /// `q` right after initialization, before the greedy increments.
    pub initial_q: Vec<f64>,
}

fn message_sum(q: &[f64], m: &[usize]) -> f64 {
    m.iter().map(|&x| q[x]).sum()
}

fn spread(q: &[f64], m: &[usize]) -> f64 {
    let (lo, hi) = m
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(q[x]), hi.max(q[x]))
        });
    hi - lo
}

fn intersects(a: &[usize], b: &[usize]) -> bool {
    a.iter().any(|x| b.binary_search(x).is_ok())
}

/// Builds a marginal on which the worst-case optimal strategies for
/// logarithmic and Brier loss necessarily differ. Requires a connected
/// game without dominated messages that is neither a graph nor a matroid game.
///
/// In the uniform branch the initial vector is perturbed by
/// `1 / (2 k |X|)`; see [`counterexample_marginal_with_epsilon`].
pub fn counterexample_marginal(game: &Game) -> Result<Counterexample, StructureError> {
    construct(game, None)
}

/// Like [`counterexample_marginal`] with an explicit perturbation
/// `0 < epsilon < 1/k` for the uniform branch (ignored otherwise). Larger
/// values push the Brier optimum further from the RCAR strategy.
pub fn counterexample_marginal_with_epsilon(
    game: &Game,
    epsilon: f64,
) -> Result<Counterexample, StructureError> {
    construct(game, Some(epsilon))
}

fn construct(game: &Game, epsilon: Option<f64>) -> Result<Counterexample, StructureError> {
    let class = classify(game);
    let reason = if !class.is_connected {
        Some("the game is not connected")
    } else if class.has_dominated {
        Some("the game has dominated messages")
    } else if class.is_graph {
        Some("the game is a graph game")
    } else if class.is_matroid {
        Some("the game is a matroid game")
    } else {
        None
    };
    if let Some(r) = reason {
        return Err(StructureError::NotApplicable(r.into()));
    }
    let msgs = game.messages();
    let n = game.n_outcomes();
    let k_max = msgs.iter().map(Vec::len).max().unwrap();
    let uniform = msgs.iter().all(|m| m.len() == k_max);

    let (branch, y1, y2, priority, mut q) = if !uniform {
        let big: Vec<usize> = (0..msgs.len())
            .filter(|&y| msgs[y].len() == k_max)
            .collect();
        let y1 = (0..msgs.len())
            .filter(|&y| {
                msgs[y].len() < k_max && big.iter().any(|&b| intersects(&msgs[y], &msgs[b]))
            })
            .min_by(|&a, &b| {
                msgs[b]
                    .len()
                    .cmp(&msgs[a].len())
                    .then_with(|| msgs[a].cmp(&msgs[b]))
            })
            .ok_or_else(|| {
                StructureError::ConstructionFailed("no smaller message meets a largest one".into())
            })?;
        let overlap = |y: usize| {
            msgs[y]
                .iter()
                .filter(|x| msgs[y1].binary_search(x).is_ok())
                .count()
        };
        let y2 = *big
            .iter()
            .min_by(|&&a, &&b| {
                overlap(b)
                    .cmp(&overlap(a))
                    .then_with(|| msgs[a].cmp(&msgs[b]))
            })
            .unwrap();
        let k1 = msgs[y1].len() as f64;
        let only1 = msgs[y1]
            .iter()
            .filter(|x| msgs[y2].binary_search(x).is_err())
            .count() as f64;
        let only2 = msgs[y2]
            .iter()
            .filter(|x| msgs[y1].binary_search(x).is_err())
            .count() as f64;
        let q: Vec<f64> = (0..n)
            .map(|x| {
                if msgs[y1].binary_search(&x).is_ok() {
                    1.0 / k1
                } else if msgs[y2].binary_search(&x).is_ok() {
                    only1 / only2 / k1
                } else {
                    1.0 / (only2 * k1)
                }
            })
            .collect();
        (Branch::Nonuniform, y1, y2, None, q)
    } else {
        let (y1, y2, x2) = failing_dual_exchange(msgs).ok_or_else(|| {
            StructureError::ConstructionFailed(
                "no intersecting pair fails the exchange axiom".into(),
            )
        })?;
        let k = k_max as f64;
        let eps = epsilon.unwrap_or(1.0 / (2.0 * k * n as f64));
        if !(eps > 0.0 && eps < 1.0 / k) {
            return Err(StructureError::InvalidEpsilon {
                epsilon: eps,
                bound: 1.0 / k,
            });
        }
        let q: Vec<f64> = (0..n)
            .map(|x| {
                if msgs[y1].binary_search(&x).is_ok() {
                    1.0 / k
                } else if x == x2 {
                    1.0 / k + eps
                } else {
                    1.0 / k - eps
                }
            })
            .collect();
        (Branch::Uniform, y1, y2, Some(x2), q)
    };
    let initial_q = q.clone();
    if msgs.iter().any(|m| message_sum(&q, m) > 1.0 + TIGHT_TOL) {
        return Err(StructureError::ConstructionFailed(
            "initial vector violates a message sum".into(),
        ));
    }

    greedy_fill(msgs, &mut q, priority);

    let tight: Vec<usize> = (0..msgs.len())
        .filter(|&y| (message_sum(&q, &msgs[y]) - 1.0).abs() <= TIGHT_TOL)
        .collect();
    for x in 0..n {
        if !tight.iter().any(|&y| msgs[y].binary_search(&x).is_ok()) {
            return Err(StructureError::ConstructionFailed(format!(
                "outcome {x} lies in no tight message"
            )));
        }
    }
    let witness = find_witness(msgs, &q, &tight, (y1, y2)).ok_or_else(|| {
        StructureError::ConstructionFailed("no uniform/nonuniform pair of tight messages".into())
    })?;

    let share = 1.0 / tight.len() as f64;
    let mut marginal = vec![0.0; n];
    for &y in &tight {
        for &x in &msgs[y] {
            marginal[x] += q[x] * share;
        }
    }
    let total: f64 = marginal.iter().sum();
    marginal.iter_mut().for_each(|v| *v /= total);
    let cgame = game.with_marginal(marginal.clone()).map_err(|e| {
        StructureError::ConstructionFailed(format!("constructed marginal is invalid: {e}"))
    })?;
    let strategy = QuizStrategy::from_fn(&cgame, |x, y| {
        if tight.binary_search(&y).is_ok() {
            q[x] * share / total
        } else {
            0.0
        }
    });
    let rcar = RcarVector::new(&cgame, q, TIGHT_TOL).map_err(|e| {
        StructureError::ConstructionFailed(format!("constructed vector is not RCAR: {e}"))
    })?;
    Ok(Counterexample {
        branch,
        marginal,
        rcar,
        witness,
        game: cgame,
        strategy,
        initial_q,
    })
}

/// Lexicographically first `(y1, y2, x2)` with `y1, y2` intersecting,
/// `x2 in y2 \ y1`, and no `x1 in y1 \ y2` with `y1 + x2 - x1` a message.
fn failing_dual_exchange(msgs: &[Vec<usize>]) -> Option<(usize, usize, usize)> {
    let family: HashSet<&[usize]> = msgs.iter().map(Vec::as_slice).collect();
    for (a, y1) in msgs.iter().enumerate() {
        for (b, y2) in msgs.iter().enumerate() {
            if a == b || !intersects(y1, y2) {
                continue;
            }
            for &x2 in y2.iter().filter(|x| y1.binary_search(x).is_err()) {
                let ok = y1
                    .iter()
                    .filter(|x| y2.binary_search(x).is_err())
                    .any(|&x1| family.contains(exchange(y1, x1, x2).as_slice()));
                if !ok {
                    return Some((a, b, x2));
                }
            }
        }
    }
    None
}

/// Raises entries of `q` one at a time to their largest feasible value until
/// every outcome sits in a tight message. `priority` is raised first while
/// it can still move; otherwise the lowest-index unmaximized outcome lying in
/// a message that already touches a maximized outcome is chosen.
fn greedy_fill(msgs: &[Vec<usize>], q: &mut [f64], priority: Option<usize>) {
    let n = q.len();
    let slack = |q: &[f64], x: usize| -> f64 {
        msgs.iter()
            .filter(|m| m.binary_search(&x).is_ok())
            .map(|m| 1.0 - message_sum(q, m))
            .fold(f64::INFINITY, f64::min)
    };
    for _ in 0..(4 * n + 4) {
        let maximized: Vec<bool> = (0..n).map(|x| slack(q, x) <= TIGHT_TOL).collect();
        if maximized.iter().all(|&m| m) {
            return;
        }
        let crossing = |x: usize| {
            msgs.iter()
                .any(|m| m.binary_search(&x).is_ok() && m.iter().any(|&o| maximized[o]))
        };
        let pick = match priority {
            Some(x) if !maximized[x] => x,
            _ => (0..n)
                .find(|&x| !maximized[x] && crossing(x))
                .or_else(|| (0..n).find(|&x| !maximized[x]))
                .unwrap(),
        };
        q[pick] += slack(q, pick);
    }
}

fn find_witness(
    msgs: &[Vec<usize>],
    q: &[f64],
    tight: &[usize],
    preferred: (usize, usize),
) -> Option<(usize, usize)> {
    let qualifies = |u: usize, v: usize| {
        u != v
            && tight.contains(&u)
            && tight.contains(&v)
            && intersects(&msgs[u], &msgs[v])
            && spread(q, &msgs[u]) < 1e-12
            && spread(q, &msgs[v]) > 1e-9
    };
    if qualifies(preferred.0, preferred.1) {
        return Some(preferred);
    }
    tight
        .iter()
        .flat_map(|&u| tight.iter().map(move |&v| (u, v)))
        .find(|&(u, v)| qualifies(u, v))
}
