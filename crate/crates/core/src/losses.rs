//! Loss functions, their generalized entropies and optimal responses.
//!
//! A loss `L(x, Q)` scores a prediction `Q` (a distribution over all outcomes)
//! once outcome `x` is revealed. Its generalized entropy is
//! `H_L(P) = inf_Q E_{X~P} L(X, Q)`, which every catalog kind evaluates in
//! closed form. Natural logarithms are used throughout; the affine wrapper
//! covers base changes and Kelly-style payoff offsets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simplex;

/// Probabilities this close to one are treated as a point mass by the hard losses.
const POINT_MASS_TOL: f64 = 1e-12;
/// Parameter comparisons in the symmetry test.
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LossError {
    #[error("affine scale must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("loss matrix must be square, got a row of length {row_len} in a {rows}-row matrix")]
    NonSquareMatrix { rows: usize, row_len: usize },
    #[error("loss parameter {name} has a negative or non-finite entry {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("affine offsets have length {offsets}, loss parameters have dimension {dimension}")]
    DimensionMismatch { offsets: usize, dimension: usize },
    #[error("unknown loss kind `{0}`")]
    UnknownKind(String),
}

/// The catalog of supported losses, without parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Logarithmic,
    Brier,
    Randomized01,
    Hard01,
    MatrixHard,
    MatrixRandomized,
    SkewedLog,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::Logarithmic => "logarithmic",
            LossKind::Brier => "brier",
            LossKind::Randomized01 => "randomized01",
            LossKind::Hard01 => "hard01",
            LossKind::MatrixHard => "matrix_hard",
            LossKind::MatrixRandomized => "matrix_randomized",
            LossKind::SkewedLog => "skewed_log",
        }
    }

    /// Proper kinds: reporting the believed distribution minimizes expected loss.
    pub fn is_proper(self) -> bool {
        matches!(
            self,
            LossKind::Logarithmic | LossKind::Brier | LossKind::SkewedLog
        )
    }

    /// Kinds whose loss is infinite off pure predictions.
    pub fn is_hard(self) -> bool {
        matches!(self, LossKind::Hard01 | LossKind::MatrixHard)
    }

    /// Kinds whose entropy is a minimum of finitely many linear functions.
    pub fn is_piecewise_linear(self) -> bool {
        matches!(
            self,
            LossKind::Randomized01
                | LossKind::Hard01
                | LossKind::MatrixHard
                | LossKind::MatrixRandomized
        )
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = LossError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let kind = match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "log" | "logarithmic" => LossKind::Logarithmic,
            "brier" => LossKind::Brier,
            "rand01" | "randomized01" | "randomized_01" => LossKind::Randomized01,
            "hard01" | "hard_01" => LossKind::Hard01,
            "matrix_hard" => LossKind::MatrixHard,
            "matrix_randomized" | "matrix_rand" => LossKind::MatrixRandomized,
            "skewed_log" | "skewed" => LossKind::SkewedLog,
            _ => return Err(LossError::UnknownKind(s.to_string())),
        };
        Ok(kind)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum BaseLoss {
    Logarithmic,
    Brier,
    Randomized01,
    Hard01,
    MatrixHard(Vec<Vec<f64>>),
    MatrixRandomized(Vec<Vec<f64>>),
    SkewedLog(Vec<f64>),
}

/// `L'(x, Q) = scale * L(x, Q) + offsets[x]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub scale: f64,
    pub offsets: Vec<f64>,
}

/// A fully parameterized loss function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    base: BaseLoss,
    affine: Option<Affine>,
}

fn check_nonnegative(name: &'static str, values: &[f64]) -> Result<(), LossError> {
    match values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        Some(&value) => Err(LossError::InvalidParameter { name, value }),
        None => Ok(()),
    }
}

fn check_matrix(rows: &[Vec<f64>]) -> Result<(), LossError> {
    for row in rows {
        if row.len() != rows.len() {
            return Err(LossError::NonSquareMatrix {
                rows: rows.len(),
                row_len: row.len(),
            });
        }
        check_nonnegative("matrix", row)?;
    }
    Ok(())
}

/// Index of a coordinate equal to one (within tolerance), if any.
fn point_mass_at(q: &[f64]) -> Option<usize> {
    q.iter().position(|&v| v >= 1.0 - POINT_MASS_TOL)
}

fn argmax_lowest(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_val {
            best = i;
            best_val = v;
        }
    }
    best
}

fn argmin_lowest(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_val = f64::INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v < best_val {
            best = i;
            best_val = v;
        }
    }
    best
}

/// Maximizer of `-sum c P ln P - sum mu P` on the simplex over `support`.
/// Stationarity gives `P_x = exp(-(mu_x + nu)/c_x - 1)` for `c_x > 0`; the
/// multiplier `nu` is found by bisection. Zero-weight outcomes act linearly
/// and absorb whatever mass is left at the boundary multiplier.
fn skewed_gap_maximizer(c: &[f64], mu: &[f64], support: &[usize], p: &mut [f64]) {
    let (smooth, flat): (Vec<usize>, Vec<usize>) = support.iter().partition(|&&x| c[x] > 0.0);
    let flat_best = flat
        .iter()
        .copied()
        .max_by(|&a, &b| (-mu[a]).partial_cmp(&-mu[b]).unwrap().then(b.cmp(&a)));
    if smooth.is_empty() {
        if let Some(x) = flat_best {
            p[x] = 1.0;
        }
        return;
    }
    let mass = |nu: f64| -> f64 {
        smooth
            .iter()
            .map(|&x| (-(mu[x] + nu) / c[x] - 1.0).exp())
            .sum()
    };
    let floor = flat_best.map(|x| -mu[x]);
    if let Some(nu) = floor {
        if mass(nu) <= 1.0 {
            let mut left = 1.0;
            for &x in &smooth {
                p[x] = (-(mu[x] + nu) / c[x] - 1.0).exp();
                left -= p[x];
            }
            p[flat_best.unwrap()] = left.max(0.0);
            return;
        }
    }
    let k = smooth.len() as f64;
    let mut lo = smooth
        .iter()
        .map(|&x| -mu[x] - c[x])
        .fold(f64::INFINITY, f64::min);
    if let Some(f) = floor {
        lo = lo.max(f);
    }
    let mut hi = smooth
        .iter()
        .map(|&x| -mu[x] - c[x] + c[x] * k.ln())
        .fold(f64::NEG_INFINITY, f64::max);
    hi = hi.max(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mass(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    for &x in &smooth {
        p[x] = (-(mu[x] + hi) / c[x] - 1.0).exp();
    }
    simplex::normalize(p);
}

fn point_mass(n: usize, at: usize) -> Vec<f64> {
    let mut q = vec![0.0; n];
    q[at] = 1.0;
    q
}

impl LossSpec {
    pub fn logarithmic() -> Self {
        Self {
            base: BaseLoss::Logarithmic,
            affine: None,
        }
    }

    pub fn brier() -> Self {
        Self {
            base: BaseLoss::Brier,
            affine: None,
        }
    }

    pub fn randomized01() -> Self {
        Self {
            base: BaseLoss::Randomized01,
            affine: None,
        }
    }

    pub fn hard01() -> Self {
        Self {
            base: BaseLoss::Hard01,
            affine: None,
        }
    }

    pub fn matrix_hard(matrix: Vec<Vec<f64>>) -> Result<Self, LossError> {
        check_matrix(&matrix)?;
        Ok(Self {
            base: BaseLoss::MatrixHard(matrix),
            affine: None,
        })
    }

    pub fn matrix_randomized(matrix: Vec<Vec<f64>>) -> Result<Self, LossError> {
        check_matrix(&matrix)?;
        Ok(Self {
            base: BaseLoss::MatrixRandomized(matrix),
            affine: None,
        })
    }

    pub fn skewed_log(weights: Vec<f64>) -> Result<Self, LossError> {
        check_nonnegative("weights", &weights)?;
        Ok(Self {
            base: BaseLoss::SkewedLog(weights),
            affine: None,
        })
    }

    /// Builds a parameter-free kind. Matrix and skewed kinds need parameters
    /// and are rejected here.
    pub fn from_kind(kind: LossKind) -> Option<Self> {
        match kind {
            LossKind::Logarithmic => Some(Self::logarithmic()),
            LossKind::Brier => Some(Self::brier()),
            LossKind::Randomized01 => Some(Self::randomized01()),
            LossKind::Hard01 => Some(Self::hard01()),
            _ => None,
        }
    }

    pub fn kind(&self) -> LossKind {
        match self.base {
            BaseLoss::Logarithmic => LossKind::Logarithmic,
            BaseLoss::Brier => LossKind::Brier,
            BaseLoss::Randomized01 => LossKind::Randomized01,
            BaseLoss::Hard01 => LossKind::Hard01,
            BaseLoss::MatrixHard(_) => LossKind::MatrixHard,
            BaseLoss::MatrixRandomized(_) => LossKind::MatrixRandomized,
            BaseLoss::SkewedLog(_) => LossKind::SkewedLog,
        }
    }

    pub fn affine(&self) -> Option<&Affine> {
        self.affine.as_ref()
    }

    pub fn matrix(&self) -> Option<&[Vec<f64>]> {
        match &self.base {
            BaseLoss::MatrixHard(a) | BaseLoss::MatrixRandomized(a) => Some(a),
            _ => None,
        }
    }

    pub fn weights(&self) -> Option<&[f64]> {
        match &self.base {
            BaseLoss::SkewedLog(c) => Some(c),
            _ => None,
        }
    }

    /// Same loss with the affine wrapper stripped.
    pub fn base_spec(&self) -> LossSpec {
        LossSpec {
            base: self.base.clone(),
            affine: None,
        }
    }

    /// Outcome-space size implied by the parameters, if any are present.
    pub fn dimension(&self) -> Option<usize> {
        let base = match &self.base {
            BaseLoss::MatrixHard(a) | BaseLoss::MatrixRandomized(a) => Some(a.len()),
            BaseLoss::SkewedLog(c) => Some(c.len()),
            _ => None,
        };
        base.or_else(|| self.affine.as_ref().map(|a| a.offsets.len()))
    }

    /// The loss on the sub-space spanned by `outcomes` (in the given order).
    /// Matrix kinds keep only the pure responses inside the sub-space.
    pub fn restrict(&self, outcomes: &[usize]) -> LossSpec {
        let pick = |v: &[f64]| outcomes.iter().map(|&x| v[x]).collect::<Vec<_>>();
        let base = match &self.base {
            BaseLoss::MatrixHard(a) => {
                BaseLoss::MatrixHard(outcomes.iter().map(|&x| pick(&a[x])).collect())
            }
            BaseLoss::MatrixRandomized(a) => {
                BaseLoss::MatrixRandomized(outcomes.iter().map(|&x| pick(&a[x])).collect())
            }
            BaseLoss::SkewedLog(c) => BaseLoss::SkewedLog(pick(c)),
            other => other.clone(),
        };
        let affine = self.affine.as_ref().map(|aff| Affine {
            scale: aff.scale,
            offsets: pick(&aff.offsets),
        });
        LossSpec { base, affine }
    }

    /// Loss of prediction `q` when outcome `x` obtains. May be `+inf`.
    pub fn loss(&self, x: usize, q: &[f64]) -> f64 {
        let base = self.base_loss(x, q);
        match &self.affine {
            Some(aff) => aff.scale * base + aff.offsets[x],
            None => base,
        }
    }

    fn base_loss(&self, x: usize, q: &[f64]) -> f64 {
        match &self.base {
            BaseLoss::Logarithmic => -q[x].ln(),
            BaseLoss::Brier => {
                let sq: f64 = q.iter().map(|v| v * v).sum();
                1.0 - 2.0 * q[x] + sq
            }
            BaseLoss::Randomized01 => 1.0 - q[x],
            BaseLoss::Hard01 => match point_mass_at(q) {
                Some(at) if at == x => 0.0,
                Some(_) => 1.0,
                None => f64::INFINITY,
            },
            BaseLoss::MatrixHard(a) => match point_mass_at(q) {
                Some(at) => a[x][at],
                None => f64::INFINITY,
            },
            BaseLoss::MatrixRandomized(a) => a[x].iter().zip(q).map(|(l, w)| l * w).sum(),
            BaseLoss::SkewedLog(c) => {
                let linear: f64 = c.iter().zip(q).map(|(c, w)| c * w).sum();
                if c[x] == 0.0 {
                    linear
                } else {
                    -c[x] * (1.0 + q[x].ln()) + linear
                }
            }
        }
    }

    /// Generalized entropy in closed form.
    pub fn entropy(&self, p: &[f64]) -> f64 {
        let base = match &self.base {
            BaseLoss::Logarithmic => p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum(),
            BaseLoss::Brier => 1.0 - p.iter().map(|v| v * v).sum::<f64>(),
            BaseLoss::Randomized01 | BaseLoss::Hard01 => {
                1.0 - p.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            }
            BaseLoss::MatrixHard(a) | BaseLoss::MatrixRandomized(a) => (0..a.len())
                .map(|col| p.iter().zip(a).map(|(w, row)| w * row[col]).sum::<f64>())
                .fold(f64::INFINITY, f64::min),
            BaseLoss::SkewedLog(c) => c
                .iter()
                .zip(p)
                .filter(|(_, &v)| v > 0.0)
                .map(|(c, &v)| -c * v * v.ln())
                .sum(),
        };
        match &self.affine {
            Some(aff) => {
                aff.scale * base + aff.offsets.iter().zip(p).map(|(b, w)| b * w).sum::<f64>()
            }
            None => base,
        }
    }

    /// Expected loss `E_{X~p} L(X, q)` with the convention `0 * inf = 0`.
    pub fn expected_loss(&self, p: &[f64], q: &[f64]) -> f64 {
        p.iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(x, &w)| w * self.loss(x, q))
            .sum()
    }

    /// An optimal response to belief `p`. Proper kinds return `p` itself;
    /// the others a point mass on the lowest-index minimizing pure prediction.
    pub fn best_response(&self, p: &[f64]) -> Vec<f64> {
        match &self.base {
            BaseLoss::Logarithmic | BaseLoss::Brier | BaseLoss::SkewedLog(_) => p.to_vec(),
            BaseLoss::Randomized01 | BaseLoss::Hard01 => {
                point_mass(p.len(), argmax_lowest(p.iter().cloned()))
            }
            BaseLoss::MatrixHard(a) | BaseLoss::MatrixRandomized(a) => {
                let costs = (0..a.len())
                    .map(|col| p.iter().zip(a).map(|(w, row)| w * row[col]).sum::<f64>());
                point_mass(p.len(), argmin_lowest(costs))
            }
        }
    }

    /// Composes `L'(x, Q) = a L(x, Q) + b_x` on top of any existing wrapper.
    pub fn affine_transform(&self, scale: f64, offsets: &[f64]) -> Result<LossSpec, LossError> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(LossError::NonPositiveScale(scale));
        }
        if let Some(dim) = self.dimension() {
            if dim != offsets.len() {
                return Err(LossError::DimensionMismatch {
                    offsets: offsets.len(),
                    dimension: dim,
                });
            }
        }
        let (scale, offsets) = match &self.affine {
            Some(prev) => (
                scale * prev.scale,
                prev.offsets
                    .iter()
                    .zip(offsets)
                    .map(|(b0, b)| scale * b0 + b)
                    .collect::<Vec<_>>(),
            ),
            None => (scale, offsets.to_vec()),
        };
        let identity = scale == 1.0 && offsets.iter().all(|&b| b == 0.0);
        Ok(LossSpec {
            base: self.base.clone(),
            affine: if identity {
                None
            } else {
                Some(Affine { scale, offsets })
            },
        })
    }

    /// Whether `L(x1, Q) = L(x2, Q^{x1<->x2})` and other outcomes are unaffected by the swap.
    pub fn is_symmetric_between(&self, x1: usize, x2: usize) -> bool {
        if x1 == x2 {
            return true;
        }
        let close = |a: f64, b: f64| (a - b).abs() <= SYMMETRY_TOL;
        let base = match &self.base {
            BaseLoss::Logarithmic | BaseLoss::Brier | BaseLoss::Randomized01 | BaseLoss::Hard01 => {
                true
            }
            BaseLoss::SkewedLog(c) => close(c[x1], c[x2]),
            BaseLoss::MatrixHard(a) | BaseLoss::MatrixRandomized(a) => {
                close(a[x1][x1], a[x2][x2])
                    && close(a[x1][x2], a[x2][x1])
                    && (0..a.len())
                        .filter(|&o| o != x1 && o != x2)
                        .all(|o| close(a[o][x1], a[o][x2]) && close(a[x1][o], a[x2][o]))
            }
        };
        base && self
            .affine
            .as_ref()
            .map_or(true, |aff| close(aff.offsets[x1], aff.offsets[x2]))
    }

    /// Maximizes `H_L(P) - sum_x mu[x] P(x)` over distributions `P` supported on
    /// `support`, returning the maximum and a maximizer. Closed form or a
    /// one-dimensional root find; available for the smooth proper kinds only.
    /// `mu` is indexed by outcome.
    pub fn max_entropy_gap(&self, mu: &[f64], support: &[usize]) -> Option<(f64, Vec<f64>)> {
        let n = mu.len();
        let shifted: Vec<f64> = match &self.affine {
            Some(aff) => mu
                .iter()
                .zip(&aff.offsets)
                .map(|(m, b)| (m - b) / aff.scale)
                .collect(),
            None => mu.to_vec(),
        };
        let mut p = vec![0.0; n];
        match &self.base {
            BaseLoss::Logarithmic => {
                let lo = support
                    .iter()
                    .map(|&x| -shifted[x])
                    .fold(f64::NEG_INFINITY, f64::max);
                for &x in support {
                    p[x] = (-shifted[x] - lo).exp();
                }
                simplex::normalize(&mut p);
            }
            BaseLoss::Brier => {
                let mut v: Vec<f64> = support.iter().map(|&x| -shifted[x] / 2.0).collect();
                simplex::project_to_simplex(&mut v);
                for (&x, w) in support.iter().zip(v) {
                    p[x] = w;
                }
            }
            BaseLoss::SkewedLog(c) => skewed_gap_maximizer(c, &shifted, support, &mut p),
            _ => return None,
        }
        let value = self.entropy(&p) - mu.iter().zip(&p).map(|(m, w)| m * w).sum::<f64>();
        Some((value, p))
    }

    /// Numerical `inf_{Q in Delta_support} E_{X~p} L(X, Q)`: a dense grid over the
    /// support followed by pairwise pattern search. Only used to cross-check
    /// the closed forms.
    pub fn entropy_inner_min(&self, p: &[f64], support: &[usize]) -> f64 {
        let n = p.len();
        let k = support.len();
        if k == 0 {
            return f64::INFINITY;
        }
        let objective = |q: &[f64]| self.expected_loss(p, q);
        let resolution = simplex::resolution_for_budget(k, 20_000, 2_000);
        let mut best_q = vec![0.0; n];
        let mut best = f64::INFINITY;
        let mut q = vec![0.0; n];
        simplex::for_each_composition(k, resolution, |parts| {
            for (&x, &c) in support.iter().zip(parts) {
                q[x] = c as f64 / resolution as f64;
            }
            let v = objective(&q);
            if v < best {
                best = v;
                best_q.copy_from_slice(&q);
            }
        });
        let mut step = 1.0 / resolution.max(1) as f64;
        let mut trial = best_q.clone();
        while step > 1e-13 {
            let mut improved = true;
            while improved {
                improved = false;
                for &a in support {
                    for &b in support {
                        if a == b || best_q[a] <= 0.0 {
                            continue;
                        }
                        let delta = step.min(best_q[a]);
                        trial.copy_from_slice(&best_q);
                        trial[a] -= delta;
                        trial[b] += delta;
                        let v = objective(&trial);
                        if v < best {
                            best = v;
                            best_q.copy_from_slice(&trial);
                            improved = true;
                        }
                    }
                }
            }
            step *= 0.5;
        }
        best
    }
}
