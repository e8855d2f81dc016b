use serde::{Deserialize, Serialize};

use super::{Comparator, DomainError, ResultKind};

/// A user test: what it is called, how its input is chunked, and how its
/// results are compared against the baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSpec {
    pub name: String,
    /// Values consumed per run; 0 means the test takes no input.
    pub inputs_per_run: usize,
    #[serde(default)]
    pub default_input: Vec<f64>,
    pub result_kind: ResultKind,
    pub comparator: Comparator,
}

impl TestSpec {
    pub fn validate(&self) -> Result<(), DomainError> {
        if self.name.is_empty() || self.name.chars().any(char::is_whitespace) {
            return Err(DomainError::InvalidTestSpec(format!(
                "test name {:?} must be non-empty and contain no whitespace",
                self.name
            )));
        }
        if self.inputs_per_run > 0 {
            let n = self.default_input.len();
            if n == 0 || !n.is_multiple_of(self.inputs_per_run) {
                return Err(DomainError::InvalidTestSpec(format!(
                    "test {}: {} default inputs is not a positive multiple of inputs_per_run={}",
                    self.name, n, self.inputs_per_run
                )));
            }
        }
        Ok(())
    }

    /// Input of each run, in order. A test without inputs runs once with none.
    pub fn input_chunks(&self) -> Vec<&[f64]> {
        if self.inputs_per_run == 0 {
            vec![&[]]
        } else {
            self.default_input.chunks(self.inputs_per_run).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ComparatorKind;

    fn spec(ipr: usize, input: Vec<f64>) -> TestSpec {
        TestSpec {
            name: "t".into(),
            inputs_per_run: ipr,
            default_input: input,
            result_kind: ResultKind::Scalar,
            comparator: Comparator::new(ComparatorKind::AbsDiff),
        }
    }

    #[test]
    fn chunks_input_into_runs() {
        let s = spec(2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        s.validate().unwrap();
        assert_eq!(s.input_chunks(), vec![&[1.0, 2.0][..], &[3.0, 4.0], &[5.0, 6.0]]);
    }

    #[test]
    fn rejects_ragged_input() {
        assert!(spec(2, vec![1.0, 2.0, 3.0]).validate().is_err());
        assert!(spec(2, vec![]).validate().is_err());
    }

    #[test]
    fn no_input_means_one_run() {
        let s = spec(0, vec![]);
        s.validate().unwrap();
        assert_eq!(s.input_chunks().len(), 1);
        assert!(s.input_chunks()[0].is_empty());
    }
}
