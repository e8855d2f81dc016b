use serde::{Deserialize, Serialize};

use crate::Scalar;

/// Outcome of evaluating a Test on one element set.
///
/// Only `Measured` carries a value. Failures are never read as zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "meta", rename_all = "snake_case")]
pub enum TestScore<S> {
    Measured { value: S },
    BuildFailure { diagnostics: String },
    RunFailure { diagnostics: String },
}

impl<S: Scalar> TestScore<S> {
    /// A measured score. Negative inputs are a backend bug and are clamped
    /// to their magnitude.
    pub fn measured(value: S) -> Self {
        TestScore::Measured { value: value.abs() }
    }

    pub fn value(&self) -> Option<&S> {
        match self {
            TestScore::Measured { value } => Some(value),
            _ => None,
        }
    }

    pub fn is_failure(&self) -> bool {
        !matches!(self, TestScore::Measured { .. })
    }

    /// Measured and strictly positive.
    pub fn is_variable(&self) -> bool {
        self.value().is_some_and(|v| v.is_positive_score())
    }

    /// Measured and exactly zero.
    pub fn is_reproducible(&self) -> bool {
        self.value().is_some_and(|v| v.is_zero())
    }

    pub fn to_f64(&self) -> TestScore<f64> {
        match self {
            TestScore::Measured { value } => TestScore::Measured { value: value.as_f64() },
            TestScore::BuildFailure { diagnostics } => TestScore::BuildFailure {
                diagnostics: diagnostics.clone(),
            },
            TestScore::RunFailure { diagnostics } => TestScore::RunFailure {
                diagnostics: diagnostics.clone(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failures_are_neither_zero_nor_variable() {
        let f: TestScore<f64> = TestScore::BuildFailure {
            diagnostics: "ld: error".into(),
        };
        assert!(f.is_failure());
        assert!(!f.is_reproducible());
        assert!(!f.is_variable());
        assert_eq!(f.value(), None);
    }

    #[test]
    fn measured_is_non_negative() {
        assert_eq!(TestScore::measured(-0.5f64).value(), Some(&0.5));
        assert!(TestScore::measured(0.0f64).is_reproducible());
        assert!(TestScore::measured(1e-300f64).is_variable());
    }

    #[test]
    fn serializes_with_meta_tag() {
        let s = serde_json::to_string(&TestScore::measured(0.25f64)).unwrap();
        assert_eq!(s, r#"{"meta":"measured","value":0.25}"#);
    }
}
