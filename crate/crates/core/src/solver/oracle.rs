//! Brute-force grid oracle for small games.
//!
//! Each outcome's row `P(x, .)` is restricted to multiples of `p_x / r`.
//! All rows are enumerated exhaustively, except that one outcome lying in
//! exactly two messages is optimized by a discrete ternary search: with the
//! other rows fixed the objective is concave along that row, so the search
//! finds the best grid point exactly.

use crate::game::{Game, QuizStrategy};
use crate::simplex::composition_count;

use super::SolverError;

/// Largest number of enumerated grid points.
pub const ORACLE_BUDGET: f64 = 1e7;

/// Advances `parts` to the next composition of its total; wraps to the
/// first one and returns `false` after the last.
fn next_composition(parts: &mut [u32]) -> bool {
    let k = parts.len();
    if k < 2 {
        return false;
    }
    let mut i = k - 1;
    loop {
        if i == 0 {
            break;
        }
        i -= 1;
        if parts[i] > 0 {
            let tail = parts[k - 1];
            parts[k - 1] = 0;
            parts[i] -= 1;
            parts[i + 1] = tail + 1;
            return true;
        }
    }
    // last composition is (0, ..., 0, r): wrap to (r, 0, ..., 0)
    let r = parts[k - 1];
    parts[k - 1] = 0;
    parts[0] = r;
    false
}

struct Columns<'a> {
    game: &'a Game,
    scratch: Vec<f64>,
}

impl Columns<'_> {
    /// `P(y) H(P(.|y))` for message `y` under `joint`.
    fn value(&mut self, joint: &[f64], y: usize) -> f64 {
        let index = self.game.index();
        let range = index.message_pairs(y);
        let mass: f64 = joint[range.clone()].iter().sum();
        if !(mass > 0.0) {
            return 0.0;
        }
        for id in range.clone() {
            self.scratch[index.pair(id).0] = joint[id] / mass;
        }
        let h = self.game.loss().entropy(&self.scratch);
        for id in range {
            self.scratch[index.pair(id).0] = 0.0;
        }
        mass * h
    }
}

/// Exhaustive maximization of the expected entropy on the grid with
/// `resolution` steps per outcome row. Fails with `TooLarge` when more than
/// [`ORACLE_BUDGET`] grid points would be enumerated.
pub fn oracle_grid(game: &Game, resolution: usize) -> Result<(f64, QuizStrategy), SolverError> {
    let index = game.index();
    let r = resolution.max(1);
    let rf = r as f64;
    let degree = |x: usize| index.outcome_pairs(x).len();
    let line = (0..game.n_outcomes()).find(|&x| degree(x) == 2);
    let blocks: Vec<usize> = (0..game.n_outcomes())
        .filter(|&x| degree(x) > 1 && Some(x) != line)
        .collect();
    let count: f64 = blocks
        .iter()
        .map(|&x| composition_count(degree(x), r))
        .product();
    if count > ORACLE_BUDGET {
        return Err(SolverError::TooLarge(format!(
            "{count:.3e} grid points at resolution {r} exceed the oracle budget of {ORACLE_BUDGET:.0e}"
        )));
    }

    let mut joint = vec![0.0; index.len()];
    let mut parts: Vec<Vec<u32>> = Vec::with_capacity(blocks.len());
    for x in 0..game.n_outcomes() {
        let ids = index.outcome_pairs(x);
        joint[ids[0]] = game.marginal()[x];
    }
    for &x in &blocks {
        let mut c = vec![0u32; degree(x)];
        c[0] = r as u32;
        parts.push(c);
    }
    let mut cols = Columns {
        game,
        scratch: vec![0.0; game.n_outcomes()],
    };
    let mut cache: Vec<f64> = (0..game.n_messages())
        .map(|y| cols.value(&joint, y))
        .collect();
    let line_ids = line.map(|x| (index.outcome_pairs(x)[0], index.outcome_pairs(x)[1]));
    let line_msgs = line_ids.map(|(a, b)| (index.pair(a).1, index.pair(b).1));

    let mut best = f64::NEG_INFINITY;
    let mut best_joint = joint.clone();
    let mut dirty = vec![false; game.n_messages()];
    loop {
        match (line, line_ids, line_msgs) {
            (Some(x), Some((ia, ib)), Some((ya, yb))) => {
                let p = game.marginal()[x];
                let others: f64 = cache
                    .iter()
                    .enumerate()
                    .filter(|&(y, _)| y != ya && y != yb)
                    .map(|(_, v)| v)
                    .sum();
                let mut eval = |c: usize, joint: &mut Vec<f64>| {
                    joint[ia] = p * c as f64 / rf;
                    joint[ib] = p * (r - c) as f64 / rf;
                    others + cols.value(joint, ya) + cols.value(joint, yb)
                };
                let (mut lo, mut hi) = (0usize, r);
                while hi - lo > 2 {
                    let m1 = lo + (hi - lo) / 3;
                    let m2 = hi - (hi - lo) / 3;
                    if eval(m1, &mut joint) < eval(m2, &mut joint) {
                        lo = m1 + 1;
                    } else {
                        hi = m2;
                    }
                }
                for c in lo..=hi {
                    let v = eval(c, &mut joint);
                    if v > best {
                        best = v;
                        best_joint.copy_from_slice(&joint);
                    }
                }
            }
            _ => {
                let v: f64 = cache.iter().sum();
                if v > best {
                    best = v;
                    best_joint.copy_from_slice(&joint);
                }
            }
        }

        // odometer step over the enumerated rows
        let mut advanced = false;
        for (b, &x) in blocks.iter().enumerate() {
            let more = next_composition(&mut parts[b]);
            let ids = index.outcome_pairs(x);
            let p = game.marginal()[x];
            for (k, &id) in ids.iter().enumerate() {
                joint[id] = p * parts[b][k] as f64 / rf;
                dirty[index.pair(id).1] = true;
            }
            if more {
                advanced = true;
                break;
            }
        }
        if !advanced {
            break;
        }
        for y in 0..game.n_messages() {
            if dirty[y] {
                cache[y] = cols.value(&joint, y);
                dirty[y] = false;
            }
        }
    }
    Ok((best, QuizStrategy { joint: best_joint }))
}
