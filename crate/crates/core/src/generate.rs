//! Random games for property tests and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::game::Game;
use crate::losses::LossSpec;
use crate::structure::{classify, components};

/// Strictly positive marginal with entries bounded away from zero.
pub fn random_marginal(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut p: Vec<f64> = raw.iter().map(|v| v / total).collect();
    // push the rounding error into the largest entry so the sum is 1 to the last bit we can
    let drift = 1.0 - p.iter().sum::<f64>();
    let big = (0..n)
        .max_by(|&a, &b| p[a].partial_cmp(&p[b]).unwrap())
        .unwrap_or(0);
    p[big] += drift;
    p
}

fn random_subset(rng: &mut impl Rng, n: usize, size: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (0..n).collect();
    all.shuffle(rng);
    let mut s = all[..size].to_vec();
    s.sort_unstable();
    s
}

/// Random covering family of up to `max_messages` distinct nonempty subsets of `0..n`.
pub fn random_structure(rng: &mut impl Rng, n: usize, max_messages: usize) -> Vec<Vec<usize>> {
    loop {
        let m = rng.gen_range(1..=max_messages.max(1));
        let mut msgs: Vec<Vec<usize>> = Vec::new();
        for _ in 0..m {
            let size = rng.gen_range(1..=n);
            let s = random_subset(rng, n, size);
            if !msgs.contains(&s) {
                msgs.push(s);
            }
        }
        let mut covered = vec![false; n];
        msgs.iter().flatten().for_each(|&x| covered[x] = true);
        if covered.iter().all(|&c| c) {
            return msgs;
        }
    }
}

/// Random game with `2..=max_outcomes` outcomes and at most `max_messages` messages.
pub fn random_game(
    rng: &mut impl Rng,
    max_outcomes: usize,
    max_messages: usize,
    loss: LossSpec,
) -> Game {
    let n = rng.gen_range(2..=max_outcomes.max(2));
    let msgs = random_structure(rng, n, max_messages);
    Game::new(msgs, random_marginal(rng, n), loss).expect("generated game is valid")
}

/// Random connected graph game: a random spanning tree plus extra edges.
pub fn random_graph_game(rng: &mut impl Rng, max_outcomes: usize, loss: LossSpec) -> Game {
    let n = rng.gen_range(2..=max_outcomes.max(2));
    let mut edges: Vec<Vec<usize>> = Vec::new();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    for i in 1..n {
        let j = order[rng.gen_range(0..i)];
        let (a, b) = (order[i].min(j), order[i].max(j));
        edges.push(vec![a, b]);
    }
    let extra = rng.gen_range(0..=n);
    for _ in 0..extra {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            let e = vec![a.min(b), a.max(b)];
            if !edges.contains(&e) {
                edges.push(e);
            }
        }
    }
    Game::new(edges, random_marginal(rng, n), loss).expect("generated game is valid")
}

/// Random game with at least two connected components.
pub fn random_disconnected_game(rng: &mut impl Rng, max_outcomes: usize, loss: LossSpec) -> Game {
    loop {
        let n = rng.gen_range(3..=max_outcomes.max(3));
        let split = rng.gen_range(1..n);
        let left = random_structure(rng, split, 4);
        let right: Vec<Vec<usize>> = random_structure(rng, n - split, 4)
            .into_iter()
            .map(|m| m.into_iter().map(|x| x + split).collect())
            .collect();
        let msgs: Vec<Vec<usize>> = left.into_iter().chain(right).collect();
        if components(n, &msgs).len() >= 2 {
            return Game::new(msgs, random_marginal(rng, n), loss)
                .expect("generated game is valid");
        }
    }
}

/// Random connected structure without dominated messages that is neither a
/// graph nor a matroid, on `4..=max_outcomes` outcomes.
pub fn random_counterexample_structure(rng: &mut impl Rng, max_outcomes: usize) -> Vec<Vec<usize>> {
    loop {
        let n = rng.gen_range(4..=max_outcomes.max(4));
        let msgs = random_structure(rng, n, 5);
        let uniform = vec![1.0 / n as f64; n];
        let Ok(g) = Game::new(msgs.clone(), uniform, LossSpec::logarithmic()) else {
            continue;
        };
        let c = classify(&g);
        if c.is_connected && !c.has_dominated && !c.is_graph && !c.is_matroid {
            return msgs;
        }
    }
}

/// All `k`-subsets of `0..n`: the uniform matroid.
pub fn uniform_matroid(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for x in start..n {
            cur.push(x);
            rec(x + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// `{X \ {x} : x in s}`.
pub fn negation_family(n: usize, s: &[usize]) -> Vec<Vec<usize>> {
    s.iter()
        .map(|&skip| (0..n).filter(|&x| x != skip).collect())
        .collect()
}
