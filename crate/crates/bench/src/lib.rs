//! Fixed-seed workloads for the criterion benchmarks in `benches/`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rpu_core::generate::{random_game, random_graph_game, uniform_matroid};
use rpu_core::{Game, LossSpec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `count` random games with up to `n` outcomes and `m` messages.
pub fn random_games(seed: u64, count: usize, n: usize, m: usize, loss: LossSpec) -> Vec<Game> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| random_game(&mut r, n, m, loss.clone()))
        .collect()
}

pub fn graph_games(seed: u64, count: usize, n: usize, loss: LossSpec) -> Vec<Game> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| random_graph_game(&mut r, n, loss.clone()))
        .collect()
}

/// All `k`-subsets of `n` outcomes with a linearly increasing marginal.
pub fn uniform_matroid_game(n: usize, k: usize, loss: LossSpec) -> Game {
    let total = (n * (n + 1) / 2) as f64;
    let marginal = (1..=n).map(|i| i as f64 / total).collect();
    Game::new(uniform_matroid(n, k), marginal, loss).expect("uniform matroid game is valid")
}

pub fn monty_hall(loss: LossSpec) -> Game {
    Game::new(vec![vec![0, 1], vec![1, 2]], vec![1.0 / 3.0; 3], loss).expect("valid")
}
