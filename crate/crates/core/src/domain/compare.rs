use std::fmt;
use std::num::NonZeroU32;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{CompareError, DomainError};

/// What a test executable returns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum TestValue {
    Scalar(f64),
    Vector(Vec<f64>),
    Text(String),
}

impl TestValue {
    pub fn kind(&self) -> ResultKind {
        match self {
            TestValue::Scalar(_) => ResultKind::Scalar,
            TestValue::Vector(_) => ResultKind::Vector,
            TestValue::Text(_) => ResultKind::Text,
        }
    }

    /// Bitwise identity (NaNs with equal payloads are identical).
    pub fn bitwise_eq(&self, other: &TestValue) -> bool {
        match (self, other) {
            (TestValue::Scalar(a), TestValue::Scalar(b)) => a.to_bits() == b.to_bits(),
            (TestValue::Vector(a), TestValue::Vector(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            (TestValue::Text(a), TestValue::Text(b)) => a == b,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResultKind {
    Scalar,
    Vector,
    Text,
}

impl FromStr for ResultKind {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "scalar" => Ok(ResultKind::Scalar),
            "vector" => Ok(ResultKind::Vector),
            "text" | "string" => Ok(ResultKind::Text),
            other => Err(DomainError::InvalidTestSpec(format!("unknown result kind {other:?}"))),
        }
    }
}

/// One of the built-in comparison metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparatorKind {
    /// `|b - c|`; for vectors the largest elementwise difference.
    AbsDiff,
    /// `||b - c||_2`.
    L2Diff,
    /// `||b - c||_2 / ||b||_2`.
    RelL2Diff,
    /// 0 if identical, 1 otherwise. Numbers compare bitwise.
    ExactText,
}

impl FromStr for ComparatorKind {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "abs_diff" | "abs" => Ok(ComparatorKind::AbsDiff),
            "l2_diff" | "l2" => Ok(ComparatorKind::L2Diff),
            "rel_l2_diff" | "rel_l2" => Ok(ComparatorKind::RelL2Diff),
            "exact_text" | "exact" => Ok(ComparatorKind::ExactText),
            other => Err(DomainError::InvalidTestSpec(format!("unknown comparator {other:?}"))),
        }
    }
}

impl fmt::Display for ComparatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ComparatorKind::AbsDiff => "abs_diff",
            ComparatorKind::L2Diff => "l2_diff",
            ComparatorKind::RelL2Diff => "rel_l2_diff",
            ComparatorKind::ExactText => "exact_text",
        })
    }
}

/// A comparison metric, optionally applied after rounding both operands to
/// a number of significant decimal digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comparator {
    pub kind: ComparatorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digits: Option<NonZeroU32>,
}

impl Comparator {
    pub fn new(kind: ComparatorKind) -> Self {
        Comparator { kind, digits: None }
    }

    pub fn with_digits(kind: ComparatorKind, digits: u32) -> Self {
        Comparator {
            kind,
            digits: NonZeroU32::new(digits),
        }
    }

    /// Score `candidate` against `baseline`. The result is `>= 0`, zero for
    /// identical operands, and saturates at `f64::MAX` for non-finite
    /// differences.
    pub fn compare(&self, baseline: &TestValue, candidate: &TestValue) -> Result<f64, CompareError> {
        if baseline.kind() != candidate.kind() {
            return Err(CompareError::KindMismatch {
                baseline: baseline.kind(),
                candidate: candidate.kind(),
            });
        }
        if let (TestValue::Vector(b), TestValue::Vector(c)) = (baseline, candidate) {
            if b.len() != c.len() {
                return Err(CompareError::LengthMismatch {
                    baseline: b.len(),
                    candidate: c.len(),
                });
            }
        }
        let (b, c) = match self.digits {
            Some(d) => (round_value(baseline, d.get()), round_value(candidate, d.get())),
            None => (baseline.clone(), candidate.clone()),
        };
        if b.bitwise_eq(&c) {
            return Ok(0.0);
        }

        let score = match (self.kind, &b, &c) {
            (ComparatorKind::ExactText, _, _) => 1.0,
            (_, TestValue::Text(_), _) => {
                return Err(CompareError::Unsupported {
                    comparator: self.kind,
                    kind: ResultKind::Text,
                })
            }
            (ComparatorKind::AbsDiff, _, _) => numbers(&b)
                .iter()
                .zip(numbers(&c))
                .map(|(x, y)| elementwise_diff(*x, *y))
                .fold(0.0, f64::max),
            (ComparatorKind::L2Diff, _, _) => l2_diff(numbers(&b), numbers(&c)),
            (ComparatorKind::RelL2Diff, _, _) => {
                let diff = l2_diff(numbers(&b), numbers(&c));
                let norm = numbers(&b).iter().map(|x| x * x).sum::<f64>().sqrt();
                if diff == 0.0 {
                    0.0
                } else if norm == 0.0 {
                    return Err(CompareError::ZeroBaselineNorm);
                } else {
                    diff / norm
                }
            }
        };
        Ok(saturate(score))
    }
}

fn numbers(v: &TestValue) -> &[f64] {
    match v {
        TestValue::Scalar(x) => std::slice::from_ref(x),
        TestValue::Vector(xs) => xs,
        TestValue::Text(_) => &[],
    }
}

// Bitwise-identical elements (including matching NaNs) contribute nothing.
fn elementwise_diff(x: f64, y: f64) -> f64 {
    if x.to_bits() == y.to_bits() {
        0.0
    } else {
        saturate((x - y).abs())
    }
}

fn l2_diff(b: &[f64], c: &[f64]) -> f64 {
    b.iter()
        .zip(c)
        .map(|(x, y)| elementwise_diff(*x, *y).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn saturate(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        f64::MAX
    }
}

/// Round to `digits` significant decimal digits through decimal formatting.
pub fn round_to_digits(x: f64, digits: u32) -> f64 {
    if !x.is_finite() || x == 0.0 || digits == 0 {
        return x;
    }
    let precision = (digits - 1) as usize;
    format!("{x:.precision$e}").parse().unwrap_or(x)
}

fn round_value(v: &TestValue, digits: u32) -> TestValue {
    match v {
        TestValue::Scalar(x) => TestValue::Scalar(round_to_digits(*x, digits)),
        TestValue::Vector(xs) => {
            TestValue::Vector(xs.iter().map(|x| round_to_digits(*x, digits)).collect())
        }
        TestValue::Text(s) => TestValue::Text(s.clone()),
    }
}
