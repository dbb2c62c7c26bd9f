//! Worked examples with known answers.

use rpu_core::{
    brute_force_value, check_equalizer, check_kt, check_loss_exchange, check_nash_gap, check_rcar,
    conditional, expected_entropy, expected_loss, oracle_grid, solve_contestant,
    solve_hard01_contestant, solve_quizmaster, solve_rcar, worst_case_loss, CheckMode,
    ContestantStrategy, EqualizerScope, Game, KtVector, LossSpec, QuizStrategy, RcarVector,
    SolverError, SolverOptions, Tolerances,
};

const T: f64 = 1.0 / 3.0;

fn game(messages: Vec<Vec<usize>>, marginal: Vec<f64>, loss: LossSpec) -> Game {
    Game::new(messages, marginal, loss).unwrap()
}

fn monty(loss: LossSpec) -> Game {
    game(vec![vec![0, 1], vec![1, 2]], vec![T; 3], loss)
}

fn monty_table(g: &Game) -> QuizStrategy {
    QuizStrategy::new(g, vec![T, T / 2.0, T / 2.0, T], 1e-12).unwrap()
}

fn message_discard(loss: LossSpec) -> (Game, QuizStrategy) {
    let g = game(
        vec![vec![0, 1], vec![1, 2], vec![2, 3]],
        vec![0.2, 0.2, 0.2, 0.4],
        loss,
    );
    let p = QuizStrategy::new(&g, vec![0.2, 0.2, 0.0, 0.0, 0.2, 0.4], 1e-12).unwrap();
    (g, p)
}

fn example3(loss: LossSpec) -> Game {
    game(
        vec![vec![0, 1], vec![1, 2, 3]],
        vec![T, T, T / 2.0, T / 2.0],
        loss,
    )
}

fn outcome_discard() -> Game {
    game(
        vec![vec![0, 1], vec![1, 2, 3]],
        vec![0.45, 0.05, 0.25, 0.25],
        LossSpec::brier(),
    )
}

fn triangle(marginal: Vec<f64>, loss: LossSpec) -> Game {
    game(vec![vec![0, 1], vec![1, 2], vec![0, 2]], marginal, loss)
}

fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len(), "{a:?} vs {b:?}");
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
    }
}

#[test]
fn monty_hall_objectives() {
    let g = monty(LossSpec::logarithmic());
    let p = monty_table(&g);
    let value = 2.0 / 3.0 * (1.5f64).ln() + T * 3f64.ln();
    assert!((expected_entropy(&g, &p) - value).abs() < 1e-12);
    let q = ContestantStrategy::new(
        &g,
        (0..2).map(|y| conditional(&g, &p, y).unwrap()).collect(),
    )
    .unwrap();
    assert!((expected_loss(&g, &p, &q) - value).abs() < 1e-12);
    assert_close(
        &conditional(&g, &p, 0).unwrap(),
        &[2.0 / 3.0, T, 0.0],
        1e-12,
    );

    let r01 = monty(LossSpec::randomized01());
    let q = ContestantStrategy::new(&r01, vec![vec![2.0 / 3.0, T, 0.0], vec![0.0, T, 2.0 / 3.0]])
        .unwrap();
    assert!((worst_case_loss(&r01, &q) - 4.0 / 9.0).abs() < 1e-12);
}

#[test]
fn hard_triangle_has_no_cheap_contestant() {
    let g = triangle(vec![T; 3], LossSpec::hard01());
    let pure = ContestantStrategy::new(
        &g,
        vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ],
    )
    .unwrap();
    assert!(worst_case_loss(&g, &pure) >= 2.0 / 3.0 - 1e-12);
    let mixed = ContestantStrategy::new(
        &g,
        vec![
            vec![0.5, 0.5, 0.0],
            vec![0.0, 0.5, 0.5],
            vec![0.5, 0.0, 0.5],
        ],
    )
    .unwrap();
    assert_eq!(worst_case_loss(&g, &mixed), f64::INFINITY);
}

#[test]
fn monty_hall_solutions() {
    let opts = SolverOptions::default();
    let ln = f64::ln;
    let log = solve_quizmaster(&monty(LossSpec::logarithmic()), &opts).unwrap();
    assert!(log.converged);
    assert_close(&log.strategy.joint, &[T, T / 2.0, T / 2.0, T], 1e-6);
    assert_close(
        &log.kt.lambda,
        &[-ln(2.0 / 3.0), -ln(T), -ln(2.0 / 3.0)],
        1e-6,
    );
    assert!((log.value - (2.0 / 3.0 * ln(1.5) + T * ln(3.0))).abs() < 1e-9);

    let g = monty(LossSpec::logarithmic());
    let q = solve_contestant(&g, &log).unwrap();
    assert_close(&q.per_message[0], &[2.0 / 3.0, T, 0.0], 1e-6);
    assert_close(&q.per_message[1], &[0.0, T, 2.0 / 3.0], 1e-6);
    assert!(check_nash_gap(&g, &log.strategy, &q).abs() <= 1e-6);
    assert!(check_equalizer(
        &g,
        &log.strategy,
        &log.kt,
        1e-6,
        EqualizerScope::UsedMessages
    ));

    let exchange = check_loss_exchange(&g, &log.strategy, &log.kt, 1e-6);
    assert!(exchange.passed);
    assert!(!exchange.per_message.is_empty());
}

#[test]
fn loss_dependence() {
    let opts = SolverOptions::default();
    let brier = solve_quizmaster(&example3(LossSpec::brier()), &opts).unwrap();
    let g = example3(LossSpec::brier());
    let target = 11.0 / 3.0 - 2.0 * 3f64.sqrt();
    assert!((brier.strategy.get(&g, 1, 0) - target).abs() < 1e-5);
    assert!((brier.strategy.get(&g, 1, 1) - (2.0 * 3f64.sqrt() - 10.0 / 3.0)).abs() < 1e-5);

    // randomized 0-1 loss: value 1/2 attained by the log-optimal table
    let r01 = example3(LossSpec::randomized01());
    let solved = solve_quizmaster(&r01, &opts).unwrap();
    let table =
        QuizStrategy::new(&r01, vec![T, T / 2.0, T / 2.0, T / 2.0, T / 2.0], 1e-12).unwrap();
    assert!((solved.value - expected_entropy(&r01, &table)).abs() < 1e-9);
}

#[test]
fn outcome_discard_solution() {
    let g = outcome_discard();
    let r = solve_quizmaster(&g, &SolverOptions::default()).unwrap();
    assert_close(&r.strategy.joint, &[0.45, 0.05, 0.0, 0.25, 0.25], 1e-2);
    assert_close(&r.kt.lambda, &[0.02, 1.62, 0.5, 0.5], 1e-2);
    let c = conditional(&g, &r.strategy, 1).unwrap();
    assert!((g.loss().loss(1, &c) - 1.5).abs() < 1e-6);
    assert!(!check_equalizer(
        &g,
        &r.strategy,
        &r.kt,
        1e-6,
        EqualizerScope::UsedMessages
    ));
}

#[test]
fn rcar_vectors() {
    let opts = SolverOptions::default();
    let t = triangle(vec![0.2, 0.6, 0.2], LossSpec::brier());
    let sol = solve_rcar(&t, &opts).unwrap();
    assert_close(&sol.q.q, &[0.4, 0.6, 0.4], 1e-6);
    assert!((sol.q.message_sum(&t, 2) - 0.8).abs() < 1e-6);
    assert!(check_rcar(&t, &sol.strategy, &sol.q, 1e-6).passed);

    // every message has an outcome of its own: all message sums are one
    let private = game(
        vec![vec![0, 3], vec![1, 3, 4], vec![2, 4]],
        vec![0.1, 0.3, 0.15, 0.25, 0.2],
        LossSpec::logarithmic(),
    );
    let sol = solve_rcar(&private, &opts).unwrap();
    for y in 0..3 {
        assert!((sol.q.message_sum(&private, y) - 1.0).abs() < 1e-6);
    }
}

#[test]
fn contestant_on_unused_message() {
    let g = triangle(vec![0.2, 0.6, 0.2], LossSpec::logarithmic());
    let r = solve_quizmaster(&g, &SolverOptions::default()).unwrap();
    assert!(r.strategy.message_mass(&g, 2) < 1e-9);
    let q = solve_contestant(&g, &r).unwrap();
    let q3 = &q.per_message[2];
    assert!(
        q3[1] == 0.0 && q3[0] >= 0.4 - 1e-6 && q3[0] <= 0.6 + 1e-6,
        "{q3:?}"
    );
    assert!(check_nash_gap(&g, &r.strategy, &q).abs() < 1e-6);
    assert!(check_equalizer(
        &g,
        &r.strategy,
        &r.kt,
        1e-6,
        EqualizerScope::UsedMessages
    ));
}

#[test]
fn four_cycle_randomized() {
    let g = game(
        vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![0, 3]],
        vec![0.25; 4],
        LossSpec::randomized01(),
    );
    let r = solve_quizmaster(&g, &SolverOptions::default()).unwrap();
    assert!((r.value - 0.5).abs() < 1e-9);
    let a = r.kt.lambda[0];
    assert!((0.0..=1.0).contains(&a));
    assert_close(&r.kt.lambda, &[a, 1.0 - a, a, 1.0 - a], 1e-6);
    assert!(check_kt(&g, &r.strategy, &r.kt, 1e-6).passed);
    let q = solve_contestant(&g, &r).unwrap();
    assert!(check_nash_gap(&g, &r.strategy, &q).abs() < 1e-6);
}

#[test]
fn stable_sets() {
    let cycle = game(
        vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![0, 3]],
        vec![0.25; 4],
        LossSpec::hard01(),
    );
    let s = solve_hard01_contestant(&cycle).unwrap();
    assert!(s.stable_set == vec![0, 2] || s.stable_set == vec![1, 3]);
    assert!((s.worst_case - 0.5).abs() < 1e-12);

    let singles = game(
        vec![vec![0], vec![1], vec![2]],
        vec![0.2, 0.3, 0.5],
        LossSpec::hard01(),
    );
    let s = solve_hard01_contestant(&singles).unwrap();
    assert_eq!(s.stable_set, vec![0, 1, 2]);
    assert!(s.worst_case.abs() < 1e-12);

    let tri = triangle(vec![T; 3], LossSpec::hard01());
    let s = solve_hard01_contestant(&tri).unwrap();
    assert_eq!(s.stable_set.len(), 1);
    assert!((s.weight - T).abs() < 1e-12 && (s.worst_case - 2.0 / 3.0).abs() < 1e-12);
    assert!((s.worst_case - worst_case_loss(&tri, &s.strategy)).abs() < 1e-12);
}

#[test]
fn hard_losses_route_through_randomized() {
    let g = triangle(vec![T; 3], LossSpec::hard01());
    let r = solve_quizmaster(&g, &SolverOptions::default()).unwrap();
    assert!((r.value - 0.5).abs() < 1e-9);
    assert!(matches!(
        solve_contestant(&g, &r),
        Err(SolverError::NoFeasibleResponse { .. })
    ));
}

#[test]
fn oracle_examples() {
    let log = monty(LossSpec::logarithmic());
    let value = 2.0 / 3.0 * (1.5f64).ln() + T * 3f64.ln();
    assert!((brute_force_value(&log, 200).unwrap() - value).abs() < 1e-3);
    assert!((brute_force_value(&monty(LossSpec::randomized01()), 100).unwrap() - T).abs() < 1e-3);

    let partition = game(
        vec![vec![0, 1], vec![2]],
        vec![0.2, 0.3, 0.5],
        LossSpec::brier(),
    );
    let (v, p) = oracle_grid(&partition, 10).unwrap();
    assert_close(&p.joint, &[0.2, 0.3, 0.5], 0.0);
    assert!((v - 0.5 * (1.0 - 0.16 - 0.36)).abs() < 1e-12);

    let (g, table) = message_discard(LossSpec::logarithmic());
    let v = brute_force_value(&g, 200).unwrap();
    assert!((v - expected_entropy(&g, &table)).abs() < 1e-3);

    let ex3 = example3(LossSpec::brier());
    let (_, p) = oracle_grid(&ex3, 400).unwrap();
    assert!((p.get(&ex3, 1, 0) - (11.0 / 3.0 - 2.0 * 3f64.sqrt())).abs() < 5e-3);

    let big = game(
        vec![
            vec![0, 1, 2, 3, 4],
            vec![0, 1],
            vec![0, 2],
            vec![0, 3],
            vec![0, 4],
            vec![1, 2],
        ],
        vec![0.2; 5],
        LossSpec::logarithmic(),
    );
    assert!(matches!(
        oracle_grid(&big, 150),
        Err(SolverError::TooLarge(_))
    ));
}

#[test]
fn kt_certificates_from_printed_values() {
    let ln = f64::ln;
    let kt = |v: Vec<f64>| KtVector::new(v).unwrap();
    let cases: Vec<(Game, QuizStrategy, KtVector, f64)> = {
        let mut v = Vec::new();
        for (loss, lam) in [
            (
                LossSpec::logarithmic(),
                vec![-ln(2.0 / 3.0), ln(3.0), -ln(2.0 / 3.0)],
            ),
            (LossSpec::brier(), vec![2.0 / 9.0, 8.0 / 9.0, 2.0 / 9.0]),
            (LossSpec::randomized01(), vec![0.0, 1.0, 0.0]),
        ] {
            let g = monty(loss);
            let p = monty_table(&g);
            v.push((g, p, kt(lam), 1e-4));
        }
        for (loss, lam) in [
            (
                LossSpec::logarithmic(),
                vec![ln(2.0), ln(2.0), ln(3.0), -ln(2.0 / 3.0)],
            ),
            (LossSpec::brier(), vec![0.5, 0.5, 8.0 / 9.0, 2.0 / 9.0]),
            (LossSpec::randomized01(), vec![0.5, 0.5, 1.0, 0.0]),
        ] {
            let (g, p) = message_discard(loss);
            v.push((g, p, kt(lam), 1e-4));
        }
        for (loss, lam) in [
            (
                LossSpec::logarithmic(),
                vec![-ln(2.0 / 3.0), ln(3.0), ln(3.0), ln(3.0)],
            ),
            (LossSpec::randomized01(), vec![0.0, 1.0, 0.5, 0.5]),
        ] {
            let g = example3(loss);
            let p =
                QuizStrategy::new(&g, vec![T, T / 2.0, T / 2.0, T / 2.0, T / 2.0], 1e-12).unwrap();
            v.push((g, p, kt(lam), 1e-4));
        }
        let g = outcome_discard();
        let p = QuizStrategy::new(&g, vec![0.45, 0.05, 0.0, 0.25, 0.25], 1e-12).unwrap();
        v.push((g, p, kt(vec![0.02, 1.62, 0.5, 0.5]), 1e-2));
        let g = triangle(vec![0.2, 0.6, 0.2], LossSpec::logarithmic());
        let p = QuizStrategy::new(&g, vec![0.2, 0.3, 0.3, 0.2, 0.0, 0.0], 1e-12).unwrap();
        v.push((g, p, kt(vec![-ln(0.4), -ln(0.6), -ln(0.4)]), 1e-4));
        v
    };
    for (i, (g, p, lam, tol)) in cases.iter().enumerate() {
        let report = check_kt(g, p, lam, *tol);
        assert!(report.passed, "case {i}: {:?}", report.notes);
        // raising or lowering a touched coordinate breaks the certificate
        for x in 0..g.n_outcomes() {
            let touched = (0..g.n_messages())
                .any(|y| p.message_mass(g, y) > 0.0 && conditional(g, p, y).unwrap()[x] > 0.0);
            if !touched || *tol > 1e-3 {
                continue;
            }
            for delta in [-0.05, 0.05] {
                let mut moved = lam.lambda.clone();
                moved[x] += delta;
                let r = check_kt(g, p, &kt(moved), *tol);
                assert!(
                    !r.passed,
                    "case {i}: outcome {x} moved by {delta} still passes"
                );
            }
        }
    }
}

#[test]
fn kt_modes_and_failures() {
    let ln = f64::ln;
    let (g, p) = message_discard(LossSpec::logarithmic());
    let lam = KtVector::new(vec![ln(2.0), ln(2.0), ln(3.0), -ln(2.0 / 3.0)]).unwrap();
    let r = check_kt(&g, &p, &lam, 1e-6);
    assert!(r.passed);
    assert_eq!(r.per_message[&0].mode, CheckMode::Supporting);
    assert_eq!(r.per_message[&1].mode, CheckMode::Dominating);

    let g = monty(LossSpec::logarithmic());
    let p = monty_table(&g);
    let lowered = KtVector::new(vec![-ln(2.0 / 3.0), ln(3.0) - 0.1, -ln(2.0 / 3.0)]).unwrap();
    let r = check_kt(&g, &p, &lowered, 1e-6);
    assert!(!r.passed);
    assert!(
        r.max_violation > 0.03 && r.max_violation <= 0.1,
        "{}",
        r.max_violation
    );
}

#[test]
fn rcar_checks() {
    let g = monty(LossSpec::logarithmic());
    let p = monty_table(&g);
    let q = RcarVector::new(&g, vec![2.0 / 3.0, T, 2.0 / 3.0], 1e-9).unwrap();
    assert!(check_rcar(&g, &p, &q, 1e-9).passed);

    let ex3 = example3(LossSpec::brier());
    let target = 11.0 / 3.0 - 2.0 * 3f64.sqrt();
    let brier =
        QuizStrategy::new(&ex3, vec![T, target, T - target, T / 2.0, T / 2.0], 1e-9).unwrap();
    let log_q = RcarVector::new(&ex3, vec![2.0 / 3.0, T, T, T], 1e-9).unwrap();
    let r = check_rcar(&ex3, &brier, &log_q, 1e-6);
    assert!(!r.passed && r.max_violation > 1e-3);
}

#[test]
fn nash_gaps() {
    let g = triangle(vec![T; 3], LossSpec::hard01());
    let maximin = solve_quizmaster(&g, &SolverOptions::default()).unwrap();
    let stable = solve_hard01_contestant(&g).unwrap();
    let gap = check_nash_gap(&g, &maximin.strategy, &stable.strategy);
    assert!((gap - 1.0 / 6.0).abs() < 1e-9);

    let partition = game(
        vec![vec![0, 1], vec![2, 3]],
        vec![0.1, 0.2, 0.3, 0.4],
        LossSpec::brier(),
    );
    let p = QuizStrategy::uniform_split(&partition);
    let q = ContestantStrategy::new(
        &partition,
        (0..2)
            .map(|y| {
                partition
                    .loss()
                    .best_response(&conditional(&partition, &p, y).unwrap())
            })
            .collect(),
    )
    .unwrap();
    assert!(check_nash_gap(&partition, &p, &q).abs() < 1e-12);
}

#[test]
fn equalizer_on_partitions() {
    // on a partition each outcome sees one message, so the KT vector read off
    // the conditionals always equalizes
    let g = game(
        vec![vec![0, 1], vec![2]],
        vec![0.2, 0.4, 0.4],
        LossSpec::logarithmic(),
    );
    let r = solve_quizmaster(&g, &SolverOptions::default()).unwrap();
    assert!(check_equalizer(
        &g,
        &r.strategy,
        &r.kt,
        1e-9,
        EqualizerScope::AllMessages
    ));
    let skewed = KtVector::new(vec![r.kt.lambda[0] + 0.1, r.kt.lambda[1], r.kt.lambda[2]]).unwrap();
    assert!(!check_equalizer(
        &g,
        &r.strategy,
        &skewed,
        1e-9,
        EqualizerScope::UsedMessages
    ));
}

#[test]
fn negation_game_exchange() {
    let g = game(
        vec![vec![1, 2, 3], vec![0, 2, 3], vec![0, 1, 3], vec![0, 1, 2]],
        vec![0.25; 4],
        LossSpec::logarithmic(),
    );
    let r = solve_quizmaster(&g, &SolverOptions::default()).unwrap();
    let report = check_loss_exchange(&g, &r.strategy, &r.kt, 1e-6);
    assert!(report.passed);
    assert!(r
        .kt
        .lambda
        .iter()
        .all(|l| (l - r.kt.lambda[0]).abs() < 1e-6));

    let mut bad = r.kt.lambda.clone();
    bad[0] += 0.2;
    let report = check_loss_exchange(&g, &r.strategy, &KtVector::new(bad).unwrap(), 1e-6);
    assert!(!report.passed);
}

#[test]
fn tolerances_default() {
    let t = Tolerances::default();
    assert_eq!(
        (t.feasibility, t.certificate, t.support_epsilon),
        (1e-9, 1e-6, 1e-10)
    );
}
