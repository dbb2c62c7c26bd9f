//! Every bundled game file parses, solves, and matches its known answer.

use std::path::PathBuf;

use rpu_core::{
    check_kt, check_nash_gap, classify, counterexample_marginal, decompose, game_to_json,
    load_game, parse_game, solve_contestant, solve_quizmaster, solve_rcar, Game, LossSpec,
    SolverOptions, StructureError,
};

const ALL: &[&str] = &[
    "montyhall.game",
    "fairdie.game",
    "example3.game",
    "message-discard.game",
    "outcome-discard.game",
    "triangle-discard.game",
    "4-cycle.game",
    "hard01-triangle.game",
    "negation-4.game",
    "uniform-2-of-4.game",
    "partition.game",
    "twocomponents.game",
];

fn path(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "games", name].iter().collect()
}

fn load(name: &str) -> Game {
    load_game(path(name)).unwrap()
}

#[test]
fn every_file_is_bundled() {
    let mut found: Vec<String> = std::fs::read_dir(path(""))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".game"))
        .collect();
    found.sort();
    let mut listed: Vec<String> = ALL.iter().map(|s| s.to_string()).collect();
    listed.sort();
    assert_eq!(found, listed);
}

#[test]
fn files_round_trip() {
    for name in ALL {
        let g = load(name);
        assert_eq!(parse_game(&game_to_json(&g)).unwrap(), g, "{name}");
    }
}

#[test]
fn strong_duality_on_bundled_games() {
    for name in ALL {
        let base = load(name);
        for loss in [
            LossSpec::logarithmic(),
            LossSpec::brier(),
            LossSpec::randomized01(),
        ] {
            let g = base.with_loss(loss).unwrap();
            let r = solve_quizmaster(&g, &SolverOptions::default()).unwrap();
            assert!(r.converged, "{name}");
            let q = solve_contestant(&g, &r).unwrap();
            let gap = check_nash_gap(&g, &r.strategy, &q);
            assert!(
                (-1e-9..=1e-5).contains(&gap),
                "{name} {}: gap {gap}",
                g.loss().kind()
            );
            let cert = check_kt(&g, &r.strategy, &r.kt, 1e-6);
            assert!(cert.passed, "{name} {}: {:?}", g.loss().kind(), cert.notes);
        }
    }
}

#[test]
fn known_answers() {
    let opts = SolverOptions::default();
    let ln = f64::ln;
    let close = |a: &[f64], b: &[f64], tol: f64| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol);

    let r = solve_quizmaster(&load("montyhall.game"), &opts).unwrap();
    assert!(close(
        &r.kt.lambda,
        &[-ln(2.0 / 3.0), ln(3.0), -ln(2.0 / 3.0)],
        1e-6
    ));

    let q = solve_rcar(&load("fairdie.game"), &opts).unwrap().q.q;
    let (t, s) = (1.0 / 3.0, 1.0 / 6.0);
    assert!(close(&q, &[t, t, s, s, t, t], 1e-6));

    let g = load("example3.game");
    let r = solve_quizmaster(&g, &opts).unwrap();
    assert!((r.strategy.get(&g, 1, 0) - s).abs() < 1e-6);

    let g = load("message-discard.game");
    let r = solve_quizmaster(&g, &opts).unwrap();
    assert!(r.strategy.message_mass(&g, 1) < 1e-8);

    let r = solve_quizmaster(&load("outcome-discard.game"), &opts).unwrap();
    assert!(close(&r.kt.lambda, &[0.02, 1.62, 0.5, 0.5], 1e-2));

    let q = solve_rcar(&load("triangle-discard.game"), &opts)
        .unwrap()
        .q
        .q;
    assert!(close(&q, &[0.4, 0.6, 0.4], 1e-6));

    let r = solve_quizmaster(&load("4-cycle.game"), &opts).unwrap();
    assert!((r.value - 0.5).abs() < 1e-9);

    let r = solve_quizmaster(&load("hard01-triangle.game"), &opts).unwrap();
    assert!((r.value - 0.5).abs() < 1e-9);

    // naive conditioning on a partition
    let g = load("partition.game");
    let q = solve_rcar(&g, &opts).unwrap().q.q;
    assert!(close(&q, &[1.0 / 3.0, 2.0 / 3.0, 1.0, 0.375, 0.625], 1e-6));

    let parts = decompose(&load("twocomponents.game"));
    assert_eq!(parts.len(), 2);
    assert!(parts.iter().all(|c| (c.weight - 0.5).abs() < 1e-12));
}

#[test]
fn structure_flags() {
    let c = classify(&load("montyhall.game"));
    assert!(c.is_graph && c.is_matroid && c.is_connected);
    let c = classify(&load("negation-4.game"));
    assert!(c.is_matroid && !c.is_graph);
    let c = classify(&load("uniform-2-of-4.game"));
    assert!(c.is_matroid && c.is_graph);
    let c = classify(&load("partition.game"));
    assert!(c.is_partition && !c.is_connected);
    let c = classify(&load("fairdie.game"));
    assert!(!c.is_graph && !c.is_matroid && c.is_connected);
    assert!(counterexample_marginal(&load("fairdie.game")).is_ok());
    assert!(matches!(
        counterexample_marginal(&load("montyhall.game")),
        Err(StructureError::NotApplicable(_))
    ));
}
