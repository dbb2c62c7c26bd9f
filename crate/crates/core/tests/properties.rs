use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rpu_core::generate::{
    random_counterexample_structure, random_disconnected_game, random_game, random_marginal,
};
use rpu_core::structure::has_dominated;
use rpu_core::{
    check_kt, check_nash_gap, check_rcar, conditional, counterexample_marginal, decompose,
    expected_entropy, expected_loss, recombine, remove_dominated, solve_quizmaster,
    solve_quizmaster_traced, solve_rcar, worst_case_loss, ContestantStrategy, Game, KtVector,
    LossSpec, QuizStrategy, SolverOptions,
};

fn random_distribution(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -rng.gen_range(1e-9..1.0f64).ln()).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|v| v / total).collect()
}

fn random_quiz(rng: &mut ChaCha8Rng, g: &Game) -> QuizStrategy {
    let mut joint = vec![0.0; g.index().len()];
    for x in 0..g.n_outcomes() {
        let ids = g.index().outcome_pairs(x);
        let w = random_distribution(rng, ids.len());
        for (&id, v) in ids.iter().zip(w) {
            joint[id] = g.marginal()[x] * v;
        }
    }
    QuizStrategy { joint }
}

fn random_contestant(rng: &mut ChaCha8Rng, g: &Game) -> ContestantStrategy {
    let per_message = (0..g.n_messages())
        .map(|y| {
            let members = g.message(y);
            let w = random_distribution(rng, members.len());
            let mut q = vec![0.0; g.n_outcomes()];
            members.iter().zip(w).for_each(|(&x, v)| q[x] = v);
            q
        })
        .collect();
    ContestantStrategy::new(g, per_message).unwrap()
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|x| {
            (0..n)
                .map(|j| if x == j { 0.0 } else { rng.gen_range(0.1..2.0) })
                .collect()
        })
        .collect()
}

fn catalog(rng: &mut ChaCha8Rng, n: usize) -> Vec<LossSpec> {
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
    vec![
        LossSpec::logarithmic(),
        LossSpec::brier(),
        LossSpec::randomized01(),
        LossSpec::hard01(),
        LossSpec::matrix_randomized(random_matrix(rng, n)).unwrap(),
        LossSpec::matrix_hard(random_matrix(rng, n)).unwrap(),
        LossSpec::skewed_log(weights).unwrap(),
    ]
}

fn proper(rng: &mut ChaCha8Rng, n: usize) -> Vec<LossSpec> {
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
    vec![
        LossSpec::logarithmic(),
        LossSpec::brier(),
        LossSpec::skewed_log(weights).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn strategies_reproduce_the_marginal(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_game(&mut rng, 6, 6, LossSpec::brier());
        prop_assert!(random_quiz(&mut rng, &g).check(&g, 1e-9).is_ok());
        let r = solve_quizmaster(&g, &SolverOptions::default()).unwrap();
        prop_assert!(r.strategy.check(&g, 1e-9).is_ok());
        prop_assert!((r.value - expected_entropy(&g, &r.strategy)).abs() <= 1e-9);
    }

    #[test]
    fn conditionals_attain_the_entropy(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = random_game(&mut rng, 5, 5, LossSpec::logarithmic());
        for loss in proper(&mut rng, base.n_outcomes()) {
            let g = base.with_loss(loss).unwrap();
            let p = random_quiz(&mut rng, &g);
            let q = ContestantStrategy::new(
                &g,
                (0..g.n_messages()).map(|y| conditional(&g, &p, y).unwrap()).collect(),
            ).unwrap();
            prop_assert!((expected_loss(&g, &p, &q) - expected_entropy(&g, &p)).abs() <= 1e-8);
        }
    }

    #[test]
    fn weak_duality(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = random_game(&mut rng, 5, 5, LossSpec::logarithmic());
        for loss in catalog(&mut rng, base.n_outcomes()) {
            let g = base.with_loss(loss).unwrap();
            let p = random_quiz(&mut rng, &g);
            let q = random_contestant(&mut rng, &g);
            prop_assert!(expected_entropy(&g, &p) <= worst_case_loss(&g, &q) + 1e-8);
            prop_assert!(check_nash_gap(&g, &p, &q) >= -1e-9);
        }
    }

    #[test]
    fn relabeling_keeps_the_entropy(seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_game(&mut rng, 6, 6, LossSpec::brier());
        let p = random_quiz(&mut rng, &g);
        let n = g.n_outcomes();
        let mut outcome_map: Vec<usize> = (0..n).collect();
        outcome_map.shuffle(&mut rng);
        let mut message_order: Vec<usize> = (0..g.n_messages()).collect();
        message_order.shuffle(&mut rng);
        let messages = message_order.iter().map(|&y| g.message(y).iter().map(|&x| outcome_map[x]).collect()).collect();
        let mut marginal = vec![0.0; n];
        for x in 0..n {
            marginal[outcome_map[x]] = g.marginal()[x];
        }
        let h = Game::new(messages, marginal, LossSpec::brier()).unwrap();
        let mut joint = vec![0.0; h.index().len()];
        for (new_y, &old_y) in message_order.iter().enumerate() {
            for &x in g.message(old_y) {
                let id = h.index().find(outcome_map[x], new_y).unwrap();
                joint[id] = p.get(&g, x, old_y);
            }
        }
        let moved = QuizStrategy { joint };
        prop_assert!((expected_entropy(&g, &p) - expected_entropy(&h, &moved)).abs() <= 1e-12);
    }

    #[test]
    fn proper_losses_are_proper(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=5);
        for loss in proper(&mut rng, n) {
            let p = random_distribution(&mut rng, n);
            let own = loss.expected_loss(&p, &p);
            prop_assert_eq!(loss.best_response(&p), p.clone());
            for _ in 0..100 {
                let q = random_distribution(&mut rng, n);
                prop_assert!(own <= loss.expected_loss(&p, &q) + 1e-10);
            }
        }
    }

    #[test]
    fn entropies_are_concave(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=5);
        for loss in catalog(&mut rng, n) {
            let (a, b) = (random_distribution(&mut rng, n), random_distribution(&mut rng, n));
            let t: f64 = rng.gen_range(0.0..1.0);
            let mix: Vec<f64> = a.iter().zip(&b).map(|(u, v)| t * u + (1.0 - t) * v).collect();
            prop_assert!(loss.entropy(&mix) >= t * loss.entropy(&a) + (1.0 - t) * loss.entropy(&b) - 1e-10);
        }
    }

    #[test]
    fn affine_entropy(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=5);
        let a = rng.gen_range(0.2..5.0);
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        for loss in catalog(&mut rng, n) {
            let shifted = loss.affine_transform(a, &b).unwrap();
            let p = random_distribution(&mut rng, n);
            let expect = a * loss.entropy(&p) + b.iter().zip(&p).map(|(u, v)| u * v).sum::<f64>();
            prop_assert!((shifted.entropy(&p) - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn symmetry_is_an_equivalence(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=5);
        // a matrix that is invariant under swapping some pairs of outcomes
        let classes: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let vals: [[f64; 2]; 2] = [[0.0, rng.gen_range(0.5..2.0)], [rng.gen_range(0.5..2.0), 0.0]];
        let matrix: Vec<Vec<f64>> = (0..n)
            .map(|x| (0..n).map(|j| if x == j { 0.0 } else { vals[classes[x]][classes[j]].max(0.3) }).collect())
            .collect();
        let weights: Vec<f64> = (0..n).map(|x| [0.5, 1.5][classes[x]]).collect();
        let mut specs = catalog(&mut rng, n);
        specs.push(LossSpec::matrix_randomized(matrix).unwrap());
        specs.push(LossSpec::skewed_log(weights).unwrap());
        for loss in specs {
            for x in 0..n {
                prop_assert!(loss.is_symmetric_between(x, x));
                for y in 0..n {
                    prop_assert_eq!(loss.is_symmetric_between(x, y), loss.is_symmetric_between(y, x));
                    for z in 0..n {
                        if loss.is_symmetric_between(x, y) && loss.is_symmetric_between(y, z) {
                            prop_assert!(loss.is_symmetric_between(x, z));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn dominated_removal(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_game(&mut rng, 6, 7, LossSpec::logarithmic());
        let (reduced, log) = remove_dominated(&g);
        prop_assert!(!has_dominated(reduced.messages()));
        let (again, _) = remove_dominated(&reduced);
        prop_assert_eq!(again.messages(), reduced.messages());
        let p = random_quiz(&mut rng, &reduced);
        prop_assert!(log.embed(&g, &reduced, &p).check(&g, 1e-12).is_ok());
    }

    #[test]
    fn decomposition_preserves_marginals(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_disconnected_game(&mut rng, 8, LossSpec::brier());
        let parts = decompose(&g);
        prop_assert!(parts.len() >= 2);
        prop_assert!((parts.iter().map(|c| c.weight).sum::<f64>() - 1.0).abs() < 1e-12);
        let strategies: Vec<QuizStrategy> = parts.iter().map(|c| random_quiz(&mut rng, &c.game)).collect();
        let joined = recombine(&g, &parts, &strategies);
        prop_assert!(joined.check(&g, 1e-12).is_ok());
        let sum: f64 = parts.iter().zip(&strategies).map(|(c, p)| c.weight * expected_entropy(&c.game, p)).sum();
        prop_assert!((sum - expected_entropy(&g, &joined)).abs() < 1e-12);
    }

    #[test]
    fn ascent_is_monotone(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = random_game(&mut rng, 6, 6, LossSpec::logarithmic());
        for loss in [LossSpec::logarithmic(), LossSpec::brier()] {
            let g = base.with_loss(loss).unwrap();
            let (report, trace) = solve_quizmaster_traced(&g, &SolverOptions::default().with_seed(seed)).unwrap();
            prop_assert!(!trace.is_empty());
            for w in trace.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-12, "{} then {}", w[0], w[1]);
            }
            prop_assert!((trace.last().unwrap() - report.value).abs() < 1e-9);
        }
    }

    #[test]
    fn rcar_solutions_are_feasible(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_game(&mut rng, 6, 6, LossSpec::brier());
        let sol = solve_rcar(&g, &SolverOptions::default()).unwrap();
        prop_assert!(check_rcar(&g, &sol.strategy, &sol.q, 1e-6).passed);
        prop_assert!(sol.q.q.iter().all(|&v| v > 0.0));
        // an RCAR certificate is a log-loss KT certificate with lambda = -ln q
        let lambda = KtVector::new(sol.q.q.iter().map(|v| -v.ln()).collect()).unwrap();
        let kt = check_kt(&sol.game, &sol.strategy, &lambda, 1e-5);
        prop_assert!(kt.passed, "{:?}", kt.notes);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn entropy_matches_inner_minimum(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=4);
        let support: Vec<usize> = (0..n).collect();
        for loss in catalog(&mut rng, n) {
            let p = random_distribution(&mut rng, n);
            let closed = loss.entropy(&p);
            let searched = loss.entropy_inner_min(&p, &support);
            prop_assert!((closed - searched).abs() <= 1e-4, "{:?}: {} vs {}", loss.kind(), closed, searched);
        }
    }

    #[test]
    fn counterexample_invariants(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let msgs = random_counterexample_structure(&mut rng, 6);
        let n = msgs.iter().flatten().max().unwrap() + 1;
        let g = Game::new(msgs, random_marginal(&mut rng, n), LossSpec::logarithmic()).unwrap();
        let ce = counterexample_marginal(&g).unwrap();
        let q = &ce.rcar.q;
        prop_assert!(q.iter().all(|&v| v > 0.0));
        prop_assert!(ce.marginal.iter().all(|&v| v > 0.0));
        prop_assert!((ce.marginal.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let sums: Vec<f64> = (0..g.n_messages()).map(|y| ce.rcar.message_sum(&g, y)).collect();
        prop_assert!(sums.iter().all(|&s| s <= 1.0 + 1e-12));
        for x in 0..n {
            prop_assert!(g.messages_containing(x).any(|y| (sums[y] - 1.0).abs() < 1e-12));
        }
        let (a, b) = ce.witness;
        let spread = |y: usize| {
            let v: Vec<f64> = g.message(y).iter().map(|&x| q[x]).collect();
            v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min)
        };
        prop_assert!((sums[a] - 1.0).abs() < 1e-12 && (sums[b] - 1.0).abs() < 1e-12);
        prop_assert!(g.message(a).iter().any(|x| g.message(b).contains(x)));
        prop_assert!(spread(a) < 1e-12 && spread(b) > 1e-9);
        prop_assert!(check_rcar(&ce.game, &ce.strategy, &ce.rcar, 1e-12).passed);
    }
}
