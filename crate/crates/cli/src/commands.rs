//! Subcommand bodies. Each returns the text to print and an exit status.

use std::fmt::Write;
use std::path::Path;
use std::str::FromStr;

use rpu_core::{
    check_equalizer, check_kt, check_loss_exchange, check_nash_gap, check_rcar, classify,
    counterexample_marginal, counterexample_marginal_with_epsilon, decompose, oracle_grid,
    parse_game, solve_contestant, solve_hard01_contestant, solve_quizmaster, solve_rcar,
    worst_case_loss, Branch, CertificateReport, ContestantStrategy, EqualizerScope, Game, GameFile,
    GameFileError, KtVector, LossKind, LossSpec, QuizStrategy, RcarVector, SolveReport,
    SolverError, SolverOptions, StructureError,
};
use serde_json::{json, Map, Value};

use crate::render::{message_label, num, table, vector, yes_no};
use crate::{Common, EXIT_SOLVER, EXIT_VALIDATION};

pub struct Output {
    pub text: String,
    pub code: u8,
}

pub struct Failure {
    pub code: u8,
    /// Error variant name, shown in brackets.
    pub tag: Option<&'static str>,
    pub message: String,
}

impl Failure {
    fn validation(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_VALIDATION,
            tag: None,
            message: message.into(),
        }
    }

    fn solver(e: SolverError) -> Self {
        let tag = match &e {
            SolverError::DidNotConverge { .. } => "DidNotConverge",
            SolverError::UnsupportedLoss(_) => "UnsupportedLoss",
            SolverError::NoFeasibleResponse { .. } => "NoFeasibleResponse",
            SolverError::TooLarge(_) => "TooLarge",
            SolverError::Lp(_) => "Lp",
            SolverError::InvalidOptions(_) => "InvalidOptions",
            SolverError::Game(g) => g.name(),
        };
        let code = match e {
            SolverError::InvalidOptions(_) | SolverError::TooLarge(_) => EXIT_VALIDATION,
            _ => EXIT_SOLVER,
        };
        Failure {
            code,
            tag: Some(tag),
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<Output, Failure>;

struct Loaded {
    game: Game,
    description: Option<String>,
    raw: Value,
}

fn load(c: &Common) -> Result<Loaded, Failure> {
    let path = c.path.display();
    let text = std::fs::read_to_string(&c.path)
        .map_err(|e| Failure::validation(format!("cannot read {path}: {e}")))?;
    let game = parse_game(&text).map_err(|e| match &e {
        GameFileError::Game(g) => Failure {
            code: EXIT_VALIDATION,
            tag: Some(g.name()),
            message: format!("{path}: {g}"),
        },
        GameFileError::Syntax {
            line,
            column,
            message,
        } => Failure {
            code: EXIT_VALIDATION,
            tag: Some("Syntax"),
            message: format!("{path}:{line}:{column}: {message}"),
        },
        _ => Failure::validation(format!("{path}: {e}")),
    })?;
    let raw: Value = serde_json::from_str(&text).map_err(|e| Failure::validation(e.to_string()))?;
    let description = raw
        .get("description")
        .and_then(Value::as_str)
        .map(str::to_string);
    let game = match &c.loss {
        None => game,
        Some(name) => {
            let kind = LossKind::from_str(name).map_err(|e| Failure::validation(e.to_string()))?;
            let spec = LossSpec::from_kind(kind).ok_or_else(|| {
                Failure::validation(format!(
                    "loss kind {kind} needs parameters; set it in the game file"
                ))
            })?;
            game.with_loss(spec).map_err(|g| Failure {
                code: EXIT_VALIDATION,
                tag: Some(g.name()),
                message: g.to_string(),
            })?
        }
    };
    Ok(Loaded {
        game,
        description,
        raw,
    })
}

fn options(c: &Common) -> SolverOptions {
    SolverOptions {
        certificate_tolerance: c.tol,
        ..SolverOptions::default()
    }
    .with_seed(c.seed)
    .with_restarts(c.restarts)
}

fn jnum(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(num(v))
    }
}

fn jvec(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| jnum(x)).collect())
}

/// Rebuilds objects so keys come out sorted whatever map backs `Value`.
fn sorted(v: Value) -> Value {
    match v {
        Value::Object(m) => {
            let mut entries: Vec<(String, Value)> = m.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(
                entries
                    .into_iter()
                    .map(|(k, v)| (k, sorted(v)))
                    .collect::<Map<_, _>>(),
            )
        }
        Value::Array(a) => Value::Array(a.into_iter().map(sorted).collect()),
        other => other,
    }
}

/// The game file fields plus one section for the command.
fn report(game: &Game, description: &Option<String>, section: &str, body: Value) -> String {
    let mut file = GameFile::from_game(game);
    file.description = description.clone();
    let mut top = serde_json::to_value(&file).expect("game files serialize");
    top.as_object_mut()
        .expect("object")
        .insert(section.to_string(), body);
    let mut text = serde_json::to_string_pretty(&sorted(top)).expect("values serialize");
    text.push('\n');
    text
}

fn finish(c: &Common, text: String, json_text: impl FnOnce() -> String, code: u8) -> CmdResult {
    let text = if c.json {
        json_text()
    } else if c.quiet && code == 0 {
        String::new()
    } else {
        text
    };
    Ok(Output { text, code })
}

fn header(out: &mut String, l: &Loaded) {
    if let Some(d) = &l.description {
        let _ = writeln!(out, "game: {d}");
    }
    let _ = writeln!(out, "loss: {}", l.game.loss().kind());
}

fn joint_table(game: &Game, p: &QuizStrategy) -> Value {
    Value::Array(
        (0..game.n_messages())
            .map(|y| {
                Value::Array(
                    (0..game.n_outcomes())
                        .map(|x| {
                            if game.message(y).binary_search(&x).is_ok() {
                                jnum(p.get(game, x, y))
                            } else {
                                Value::Null
                            }
                        })
                        .collect(),
                )
            })
            .collect(),
    )
}

fn cert_json(r: &CertificateReport) -> Value {
    json!({ "passed": r.passed, "max_violation": jnum(r.max_violation), "notes": r.notes })
}

fn cert_line(r: &CertificateReport) -> String {
    format!(
        "{} (max violation {:.3e})",
        if r.passed { "passed" } else { "FAILED" },
        r.max_violation
    )
}

fn summary(game: &Game) -> String {
    let c = classify(game);
    let mut parts = vec![
        format!("{} outcomes", game.n_outcomes()),
        format!("{} messages", game.n_messages()),
        if c.is_connected {
            "connected".to_string()
        } else {
            format!("{} components", c.components.len())
        },
    ];
    for (flag, name) in [
        (c.is_partition, "partition"),
        (c.is_graph, "graph"),
        (c.is_matroid, "matroid"),
    ] {
        if flag {
            parts.push(name.to_string());
        }
    }
    if c.has_dominated {
        parts.push("dominated messages".to_string());
    }
    parts.join(", ")
}

pub fn validate(c: &Common) -> CmdResult {
    let l = load(c)?;
    let text = format!("{}: {}\n", c.path.display(), summary(&l.game));
    let body = json!({ "valid": true, "summary": summary(&l.game) });
    finish(
        c,
        text,
        || report(&l.game, &l.description, "validate", body),
        0,
    )
}

enum Contestant {
    Strategy(ContestantStrategy),
    StableSet(Vec<usize>, ContestantStrategy),
    Infeasible(String),
}

fn contestant(game: &Game, r: &SolveReport) -> Result<Contestant, Failure> {
    if game.loss().kind() == LossKind::Hard01 {
        let s = solve_hard01_contestant(game).map_err(Failure::solver)?;
        return Ok(Contestant::StableSet(s.stable_set, s.strategy));
    }
    match solve_contestant(game, r) {
        Ok(q) => Ok(Contestant::Strategy(q)),
        Err(e @ SolverError::NoFeasibleResponse { .. }) => {
            Ok(Contestant::Infeasible(e.to_string()))
        }
        Err(e) => Err(Failure::solver(e)),
    }
}

fn q_table(game: &Game, q: &ContestantStrategy) -> String {
    table(game, |x, y| q.per_message[y][x], "Q", false)
}

pub fn solve(c: &Common) -> CmdResult {
    let l = load(c)?;
    let g = &l.game;
    let r = solve_quizmaster(g, &options(c)).map_err(Failure::solver)?;
    let cert = check_kt(g, &r.strategy, &r.kt, c.tol);
    let side = contestant(g, &r)?;
    let residual = r.residuals.values().copied().fold(0.0, f64::max);

    let mut out = String::new();
    header(&mut out, &l);
    let _ = writeln!(out, "\nquizmaster strategy P(x, y):");
    out.push_str(&table(g, |x, y| r.strategy.get(g, x, y), "P", true));
    let _ = writeln!(out, "\nKT vector: {}", vector(g, &r.kt.lambda));
    let _ = writeln!(out, "maximin value (expected entropy): {}", num(r.value));
    let _ = writeln!(
        out,
        "solver: {} sweeps, residual {residual:.3e}",
        r.iterations
    );
    let _ = writeln!(out, "KT certificate: {}", cert_line(&cert));

    let mut q_json = Value::Null;
    let mut gap_json = Value::Null;
    match &side {
        Contestant::Strategy(q) | Contestant::StableSet(_, q) => {
            let worst = worst_case_loss(g, q);
            let gap = check_nash_gap(g, &r.strategy, q);
            let _ = writeln!(out, "\ncontestant strategy Q(. | y):");
            out.push_str(&q_table(g, q));
            let mut obj = json!({ "per_message": q.per_message.iter().map(|v| jvec(v)).collect::<Vec<_>>(), "worst_case_loss": jnum(worst) });
            if let Contestant::StableSet(set, _) = &side {
                let names: Vec<&str> = set.iter().map(|&x| g.outcomes()[x].as_str()).collect();
                let _ = writeln!(out, "maximum-weight stable set: {{{}}}", names.join(", "));
                obj["stable_set"] = json!(names);
            }
            let _ = writeln!(
                out,
                "minimax value (worst-case expected loss): {}",
                num(worst)
            );
            let _ = writeln!(out, "Nash gap: {}", num(gap));
            if gap > c.tol {
                let _ = writeln!(
                    out,
                    "note: no Nash equilibrium; maximin {} < minimax {}",
                    num(r.value),
                    num(worst)
                );
            }
            q_json = obj;
            gap_json = jnum(gap);
        }
        Contestant::Infeasible(why) => {
            let _ = writeln!(
                out,
                "\nnote: no contestant strategy attains the maximin value ({why})"
            );
        }
    }

    let body = json!({
        "quizmaster": {
            "joint": jvec(&r.strategy.joint),
            "table": joint_table(g, &r.strategy),
            "kt": jvec(&r.kt.lambda),
            "value": jnum(r.value),
            "iterations": r.iterations,
            "converged": r.converged,
            "residuals": r.residuals.iter().map(|(k, v)| (k.clone(), jnum(*v))).collect::<Map<_, _>>(),
        },
        "contestant": q_json,
        "nash_gap": gap_json,
        "certificate": cert_json(&cert),
    });
    let code = if cert.passed { 0 } else { EXIT_SOLVER };
    finish(c, out, || report(g, &l.description, "solve", body), code)
}

pub fn rcar(c: &Common) -> CmdResult {
    let l = load(c)?;
    let g = &l.game;
    let s = solve_rcar(g, &options(c)).map_err(Failure::solver)?;
    let cert = check_rcar(g, &s.strategy, &s.q, c.tol);
    let sums: Vec<f64> = (0..g.n_messages()).map(|y| s.q.message_sum(g, y)).collect();
    let slack: Vec<String> = sums
        .iter()
        .enumerate()
        .filter(|(_, &v)| v < 1.0 - c.tol)
        .map(|(y, _)| message_label(y))
        .collect();

    let mut out = String::new();
    header(&mut out, &l);
    let _ = writeln!(out, "\nRCAR vector q: {}", vector(g, &s.q.q));
    let _ = writeln!(out, "message sums:");
    for (y, v) in sums.iter().enumerate() {
        let names: Vec<&str> = g
            .message(y)
            .iter()
            .map(|&x| g.outcomes()[x].as_str())
            .collect();
        let _ = writeln!(
            out,
            "  {} {{{}}}: {}",
            message_label(y),
            names.join(", "),
            num(*v)
        );
    }
    let _ = writeln!(out, "\nRCAR strategy P(x, y):");
    out.push_str(&table(g, |x, y| s.strategy.get(g, x, y), "P", true));
    if !slack.is_empty() {
        let _ = writeln!(
            out,
            "note: messages with sum below 1 are never sent: {}",
            slack.join(", ")
        );
    }
    let _ = writeln!(out, "RCAR certificate: {}", cert_line(&cert));

    let body = json!({
        "q": jvec(&s.q.q),
        "message_sums": jvec(&sums),
        "slack_messages": slack,
        "joint": jvec(&s.strategy.joint),
        "table": joint_table(g, &s.strategy),
        "value": jnum(s.report.value),
        "certificate": cert_json(&cert),
    });
    let code = if cert.passed { 0 } else { EXIT_SOLVER };
    finish(c, out, || report(g, &l.description, "rcar", body), code)
}

pub fn classify_cmd(c: &Common) -> CmdResult {
    let l = load(c)?;
    let g = &l.game;
    let k = classify(g);
    let mut out = String::new();
    for (name, flag) in [
        ("connected", k.is_connected),
        ("partition", k.is_partition),
        ("graph", k.is_graph),
        ("matroid", k.is_matroid),
        ("dominated messages", k.has_dominated),
    ] {
        let _ = writeln!(out, "{name:<20}{}", yes_no(flag));
    }
    let _ = writeln!(out, "{:<20}{}", "components", k.components.len());
    let body = serde_json::to_value(&k).expect("classification serializes");
    finish(c, out, || report(g, &l.description, "classify", body), 0)
}

pub fn decompose_cmd(c: &Common) -> CmdResult {
    let l = load(c)?;
    let g = &l.game;
    let parts = decompose(g);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} component{}",
        parts.len(),
        if parts.len() == 1 { "" } else { "s" }
    );
    let mut list = Vec::new();
    for (i, part) in parts.iter().enumerate() {
        let names: Vec<&str> = part
            .outcomes
            .iter()
            .map(|&x| g.outcomes()[x].as_str())
            .collect();
        let msgs: Vec<String> = part.messages.iter().map(|&y| message_label(y)).collect();
        let _ = writeln!(
            out,
            "component {}: weight {}, outcomes {}, messages {}",
            i + 1,
            num(part.weight),
            names.join(" "),
            msgs.join(" ")
        );
        list.push(json!({ "weight": jnum(part.weight), "outcomes": names, "messages": msgs }));
    }
    finish(
        c,
        out,
        || report(g, &l.description, "decompose", Value::Array(list)),
        0,
    )
}

pub fn counterexample(c: &Common, epsilon: Option<f64>) -> CmdResult {
    let l = load(c)?;
    let g = &l.game;
    let built = match epsilon {
        Some(e) => counterexample_marginal_with_epsilon(g, e),
        None => counterexample_marginal(g),
    };
    let ce = built.map_err(|e| {
        let (code, tag) = match e {
            StructureError::NotApplicable(_) => (EXIT_VALIDATION, "NotApplicable"),
            StructureError::InvalidEpsilon { .. } => (EXIT_VALIDATION, "InvalidEpsilon"),
            StructureError::ConstructionFailed(_) => (EXIT_SOLVER, "ConstructionFailed"),
        };
        Failure {
            code,
            tag: Some(tag),
            message: e.to_string(),
        }
    })?;
    let opts = options(c);
    let log_game = ce
        .game
        .with_loss(LossSpec::logarithmic())
        .expect("same structure");
    let log = solve_quizmaster(&log_game, &opts).map_err(Failure::solver)?;
    let on_log = check_rcar(&log_game, &log.strategy, &ce.rcar, c.tol);
    let brier_game = ce
        .game
        .with_loss(LossSpec::brier())
        .expect("same structure");
    let brier = solve_quizmaster(&brier_game, &opts).map_err(Failure::solver)?;
    let on_brier = check_rcar(&brier_game, &brier.strategy, &ce.rcar, c.tol);

    let branch = match ce.branch {
        Branch::Nonuniform => "nonuniform",
        Branch::Uniform => "uniform",
    };
    let (u, v) = ce.witness;
    let mut out = String::new();
    header(&mut out, &l);
    let _ = writeln!(out, "\nbranch: {branch}");
    let _ = writeln!(
        out,
        "witness messages: {} (uniform) and {}",
        message_label(u),
        message_label(v)
    );
    let _ = writeln!(out, "marginal: {}", vector(g, &ce.marginal));
    let _ = writeln!(out, "RCAR vector q: {}", vector(g, &ce.rcar.q));
    let _ = writeln!(
        out,
        "log loss optimum is RCAR for q: {} (violation {:.3e})",
        yes_no(on_log.passed),
        on_log.max_violation
    );
    let _ = writeln!(
        out,
        "Brier loss optimum is RCAR for q: {} (violation {:.3e})",
        yes_no(on_brier.passed),
        on_brier.max_violation
    );
    let holds = on_log.passed && !on_brier.passed;
    if !holds {
        let _ = writeln!(
            out,
            "note: the marginal does not separate the two losses at this tolerance"
        );
    }
    let body = json!({
        "branch": branch,
        "epsilon": epsilon.map(jnum),
        "witness": [message_label(u), message_label(v)],
        "marginal": jvec(&ce.marginal),
        "q": jvec(&ce.rcar.q),
        "log": cert_json(&on_log),
        "brier": cert_json(&on_brier),
    });
    let code = if holds { 0 } else { EXIT_SOLVER };
    finish(
        c,
        out,
        || report(&ce.game, &l.description, "counterexample", body),
        code,
    )
}

pub fn oracle(c: &Common, resolution: usize) -> CmdResult {
    let l = load(c)?;
    let g = &l.game;
    let (grid, best) = oracle_grid(g, resolution).map_err(Failure::solver)?;
    let r = solve_quizmaster(g, &options(c)).map_err(Failure::solver)?;
    let diff = r.value - grid;
    let mut out = String::new();
    header(&mut out, &l);
    let _ = writeln!(out, "\ngrid oracle ({resolution} steps): {}", num(grid));
    let _ = writeln!(out, "solver:                {}", num(r.value));
    let _ = writeln!(out, "solver minus oracle:   {diff:.3e}");
    let _ = writeln!(out, "\nbest grid strategy P(x, y):");
    out.push_str(&table(g, |x, y| best.get(g, x, y), "P", true));
    let body = json!({
        "resolution": resolution,
        "oracle_value": jnum(grid),
        "solver_value": jnum(r.value),
        "difference": jnum(diff),
        "oracle_joint": jvec(&best.joint),
    });
    // the grid is a lower bound; the solver may only exceed it
    let code = if diff >= -c.tol { 0 } else { EXIT_SOLVER };
    finish(c, out, || report(g, &l.description, "oracle", body), code)
}

fn floats(v: &Value) -> Option<Vec<f64>> {
    v.as_array()?.iter().map(Value::as_f64).collect()
}

/// Strategy and vectors to check, from a saved report or a fresh solve.
struct Claim {
    source: String,
    strategy: QuizStrategy,
    kt: Option<Vec<f64>>,
    q: Option<Vec<f64>>,
}

fn claim_from(raw: &Value, source: &str) -> Option<Claim> {
    if let Some(s) = raw.get("solve") {
        let quiz = s.get("quizmaster")?;
        return Some(Claim {
            source: source.to_string(),
            strategy: QuizStrategy {
                joint: floats(quiz.get("joint")?)?,
            },
            kt: Some(floats(quiz.get("kt")?)?),
            q: None,
        });
    }
    let s = raw.get("rcar")?;
    Some(Claim {
        source: source.to_string(),
        strategy: QuizStrategy {
            joint: floats(s.get("joint")?)?,
        },
        kt: None,
        q: Some(floats(s.get("q")?)?),
    })
}

pub fn verify(c: &Common, report_path: Option<&Path>) -> CmdResult {
    let l = load(c)?;
    let g = &l.game;
    let saved = match report_path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Failure::validation(format!("cannot read {}: {e}", p.display())))?;
            let raw: Value = serde_json::from_str(&text)
                .map_err(|e| Failure::validation(format!("{}: {e}", p.display())))?;
            Some(claim_from(&raw, &p.display().to_string()).ok_or_else(|| {
                Failure::validation(format!("{}: no solve or rcar section", p.display()))
            })?)
        }
        None => claim_from(&l.raw, &c.path.display().to_string()),
    };
    let claim = match saved {
        Some(claim) => claim,
        None => {
            let r = solve_quizmaster(g, &options(c)).map_err(Failure::solver)?;
            Claim {
                source: "fresh solve".into(),
                strategy: r.strategy,
                kt: Some(r.kt.lambda),
                q: None,
            }
        }
    };
    claim.strategy.check(g, 1e-9).map_err(|e| Failure {
        code: EXIT_VALIDATION,
        tag: Some(e.name()),
        message: e.to_string(),
    })?;

    let mut out = String::new();
    header(&mut out, &l);
    let _ = writeln!(out, "checking {}", claim.source);
    let mut body = Map::new();
    let mut ok = true;
    if let Some(lambda) = &claim.kt {
        if lambda.len() != g.n_outcomes() {
            return Err(Failure::validation(
                "KT vector length does not match the outcomes",
            ));
        }
        let kt = KtVector::new(lambda.clone()).map_err(|e| Failure {
            code: EXIT_VALIDATION,
            tag: Some(e.name()),
            message: e.to_string(),
        })?;
        let cert = check_kt(g, &claim.strategy, &kt, c.tol);
        let eq = g.loss().kind().is_proper().then(|| {
            check_equalizer(
                g,
                &claim.strategy,
                &kt,
                c.tol.sqrt(),
                EqualizerScope::UsedMessages,
            )
        });
        let exch = check_loss_exchange(g, &claim.strategy, &kt, c.tol);
        let _ = writeln!(out, "KT certificate:      {}", cert_line(&cert));
        if let Some(eq) = eq {
            let _ = writeln!(out, "equalizer on used messages: {}", yes_no(eq));
        }
        let _ = writeln!(out, "loss exchange:       {}", cert_line(&exch));
        ok &= cert.passed && exch.passed;
        body.insert("kt".into(), cert_json(&cert));
        body.insert("equalizer".into(), json!(eq));
        body.insert("loss_exchange".into(), cert_json(&exch));
    }
    if let Some(q) = &claim.q {
        let q = RcarVector::new(g, q.clone(), 1e-9).map_err(|e| Failure {
            code: EXIT_VALIDATION,
            tag: Some(e.name()),
            message: e.to_string(),
        })?;
        let cert = check_rcar(g, &claim.strategy, &q, c.tol);
        let _ = writeln!(out, "RCAR certificate:    {}", cert_line(&cert));
        ok &= cert.passed;
        body.insert("rcar".into(), cert_json(&cert));
    }
    let _ = writeln!(
        out,
        "{}",
        if ok {
            "verified"
        } else {
            "verification FAILED"
        }
    );
    body.insert("passed".into(), json!(ok));
    let code = if ok { 0 } else { EXIT_SOLVER };
    finish(
        c,
        out,
        || report(g, &l.description, "verify", Value::Object(body)),
        code,
    )
}
