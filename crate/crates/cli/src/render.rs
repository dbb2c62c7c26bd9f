//! Plain-text tables in the message-by-outcome layout.

use std::fmt::Write;

use rpu_core::Game;

pub fn num(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else if v.abs() < 5e-13 {
        "0".to_string()
    } else {
        format!("{v:.6}")
    }
}

pub fn message_label(y: usize) -> String {
    format!("y{}", y + 1)
}

/// Rows are messages, columns outcomes; `-` marks outcomes outside the
/// message. `footer` adds a `p_x` row with the marginal.
pub fn table(
    game: &Game,
    cell: impl Fn(usize, usize) -> f64,
    corner: &str,
    footer: bool,
) -> String {
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut head = vec![corner.to_string()];
    head.extend(game.outcomes().iter().cloned());
    rows.push(head);
    for y in 0..game.n_messages() {
        let mut row = vec![message_label(y)];
        for x in 0..game.n_outcomes() {
            row.push(if game.message(y).binary_search(&x).is_ok() {
                num(cell(x, y))
            } else {
                "-".into()
            });
        }
        rows.push(row);
    }
    if footer {
        let mut row = vec!["p_x".to_string()];
        row.extend(game.marginal().iter().map(|&v| num(v)));
        rows.push(row);
    }
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, r) in rows.iter().enumerate() {
        if footer && i + 1 == rows.len() {
            let _ = writeln!(
                out,
                "{}",
                "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1))
            );
        }
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, s)| {
                if c == 0 {
                    format!("{s:<w$}", w = widths[c])
                } else {
                    format!("{s:>w$}", w = widths[c])
                }
            })
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}

/// `name=value` pairs for a per-outcome vector.
pub fn vector(game: &Game, v: &[f64]) -> String {
    game.outcomes()
        .iter()
        .zip(v)
        .map(|(n, x)| format!("{n}={}", num(*x)))
        .collect::<Vec<_>>()
        .join("  ")
}

pub fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}
