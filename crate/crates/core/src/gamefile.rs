//! The `.game` file format: JSON with outcome names, messages as lists of
//! names, a marginal whose entries may be fractions such as `"1/3"`, and a
//! loss object.
//!
//! ```json
//! {
//!   "outcomes": ["x1", "x2", "x3"],
//!   "messages": [["x1", "x2"], ["x2", "x3"]],
//!   "marginal": ["1/3", "1/3", "1/3"],
//!   "loss": { "kind": "logarithmic" }
//! }
//! ```
//!
//! Marginal entries are parsed as exact rationals. A marginal summing to one
//! within 1e-9 is accepted, renormalized exactly when its nearest floats miss
//! one by more than the game tolerance; a larger discrepancy is rejected.

use std::path::Path;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::game::{validate_game, Game, GameError, RawGame, MARGINAL_SUM_TOL};
use crate::losses::{LossError, LossKind, LossSpec};

/// Decimal marginals may miss one by this much and still be renormalized.
pub const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GameFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed game file at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("message {message} names unknown outcome `{name}`")]
    UnknownOutcome { message: usize, name: String },
    #[error("marginal entry {index} (`{text}`) is not a number or fraction")]
    BadNumber { index: usize, text: String },
    #[error("loss kind {0} needs a `{1}` field")]
    MissingParameter(LossKind, &'static str),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Game(#[from] GameError),
}

impl GameFileError {
    /// Whether the failure is one of the game validation errors.
    pub fn as_game_error(&self) -> Option<&GameError> {
        match self {
            GameFileError::Game(e) => Some(e),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineFile {
    pub scale: f64,
    pub offsets: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossFile {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub affine: Option<AffineFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub outcomes: Vec<String>,
    pub messages: Vec<Vec<String>>,
    pub marginal: Vec<Value>,
    pub loss: LossFile,
}

/// Parses a decimal such as `0.45`, `-2`, `1e-3` or `2.5E+2` exactly.
fn parse_decimal(text: &str) -> Option<BigRational> {
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(i) => (&text[..i], text[i + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut value = BigRational::from_integer(
        BigInt::from_str(if all_digits.is_empty() {
            "0"
        } else {
            &all_digits
        })
        .ok()?,
    );
    let shift = exponent - frac_part.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    for _ in 0..shift.unsigned_abs() {
        value = if shift > 0 {
            value * &ten
        } else {
            value / &ten
        };
    }
    Some(if negative { -value } else { value })
}

/// Parses `"1/3"`, `"0.25"`, or a JSON number into an exact rational.
pub fn parse_probability(value: &Value) -> Option<BigRational> {
    let text = match value {
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.trim().to_string(),
        _ => return None,
    };
    match text.split_once('/') {
        Some((num, den)) => {
            let (num, den) = (parse_decimal(num.trim())?, parse_decimal(den.trim())?);
            if den.is_zero() {
                None
            } else {
                Some(num / den)
            }
        }
        None => parse_decimal(&text),
    }
}

/// Nearest floats to the exact entries. When those do not already sum to one
/// within the game tolerance, the exact values are renormalized first,
/// provided they sum to one within [`NORMALIZATION_TOL`].
fn marginal_from_values(values: &[Value]) -> Result<Vec<f64>, GameFileError> {
    let mut exact = Vec::with_capacity(values.len());
    for (index, v) in values.iter().enumerate() {
        let r = parse_probability(v).ok_or_else(|| GameFileError::BadNumber {
            index,
            text: v.to_string(),
        })?;
        exact.push(r);
    }
    let sum: BigRational = exact.iter().fold(BigRational::zero(), |acc, r| acc + r);
    let deviation = (&sum - BigRational::one())
        .abs()
        .to_f64()
        .unwrap_or(f64::INFINITY);
    if deviation > NORMALIZATION_TOL || !sum.is_positive() {
        return Err(GameError::MarginalNotNormalized(sum.to_f64().unwrap_or(f64::NAN)).into());
    }
    let direct: Vec<f64> = exact
        .iter()
        .map(|r| r.to_f64().unwrap_or(f64::NAN))
        .collect();
    if (direct.iter().sum::<f64>() - 1.0).abs() <= MARGINAL_SUM_TOL {
        return Ok(direct);
    }
    Ok(exact
        .iter()
        .map(|r| (r / &sum).to_f64().unwrap_or(f64::NAN))
        .collect())
}

impl LossFile {
    pub fn to_spec(&self) -> Result<LossSpec, GameFileError> {
        let kind: LossKind = self.kind.parse()?;
        let base = match kind {
            LossKind::MatrixHard => LossSpec::matrix_hard(
                self.matrix
                    .clone()
                    .ok_or(GameFileError::MissingParameter(kind, "matrix"))?,
            )?,
            LossKind::MatrixRandomized => LossSpec::matrix_randomized(
                self.matrix
                    .clone()
                    .ok_or(GameFileError::MissingParameter(kind, "matrix"))?,
            )?,
            LossKind::SkewedLog => LossSpec::skewed_log(
                self.weights
                    .clone()
                    .ok_or(GameFileError::MissingParameter(kind, "weights"))?,
            )?,
            other => LossSpec::from_kind(other).expect("parameter-free kind"),
        };
        match &self.affine {
            Some(a) => Ok(base.affine_transform(a.scale, &a.offsets)?),
            None => Ok(base),
        }
    }

    pub fn from_spec(spec: &LossSpec) -> Self {
        LossFile {
            kind: spec.kind().name().to_string(),
            matrix: spec.matrix().map(<[Vec<f64>]>::to_vec),
            weights: spec.weights().map(<[f64]>::to_vec),
            affine: spec.affine().map(|a| AffineFile {
                scale: a.scale,
                offsets: a.offsets.clone(),
            }),
        }
    }
}

impl GameFile {
    pub fn into_game(self) -> Result<Game, GameFileError> {
        let mut messages = Vec::with_capacity(self.messages.len());
        for (y, names) in self.messages.iter().enumerate() {
            let mut msg = Vec::with_capacity(names.len());
            for name in names {
                let x = self
                    .outcomes
                    .iter()
                    .position(|o| o == name)
                    .ok_or_else(|| GameFileError::UnknownOutcome {
                        message: y,
                        name: name.clone(),
                    })?;
                msg.push(x);
            }
            messages.push(msg);
        }
        let loss = self.loss.to_spec()?;
        if self.marginal.len() != self.outcomes.len() {
            return Err(GameError::MarginalLength {
                marginal: self.marginal.len(),
                outcomes: self.outcomes.len(),
            }
            .into());
        }
        let marginal = marginal_from_values(&self.marginal)?;
        Ok(validate_game(RawGame {
            outcomes: self.outcomes,
            messages,
            marginal,
            loss,
        })?)
    }

    pub fn from_game(game: &Game) -> Self {
        GameFile {
            description: None,
            outcomes: game.outcomes().to_vec(),
            messages: game
                .messages()
                .iter()
                .map(|m| m.iter().map(|&x| game.outcomes()[x].clone()).collect())
                .collect(),
            marginal: game.marginal().iter().map(|&v| Value::from(v)).collect(),
            loss: LossFile::from_spec(game.loss()),
        }
    }
}

pub fn parse_game(text: &str) -> Result<Game, GameFileError> {
    let file: GameFile = serde_json::from_str(text).map_err(|e| GameFileError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    file.into_game()
}

pub fn load_game(path: impl AsRef<Path>) -> Result<Game, GameFileError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| GameFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_game(&text)
}

pub fn game_to_json(game: &Game) -> String {
    serde_json::to_string_pretty(&GameFile::from_game(game)).expect("game files serialize")
}
