use std::collections::HashMap;

use serde::Serialize;

use super::BisectError;
use crate::domain::{ElementSet, TestScore};
use crate::Scalar;

/// A backend that scores element sets. It is expected to be deterministic;
/// [`TestFn`] only calls it once per distinct set.
pub trait Metric<S> {
    fn measure(&mut self, set: &ElementSet) -> TestScore<S>;
}

impl<S, F> Metric<S> for F
where
    F: FnMut(&ElementSet) -> TestScore<S>,
{
    fn measure(&mut self, set: &ElementSet) -> TestScore<S> {
        self(set)
    }
}

/// One cache miss: the set handed to the backend and what came back.
#[derive(Debug, Clone, Serialize)]
pub struct Evaluation<S> {
    pub set: ElementSet,
    pub score: TestScore<S>,
}

/// Memoizing wrapper around a [`Metric`], with invocation accounting.
///
/// The empty set scores zero without reaching the backend: with nothing
/// taken from the candidate compilation the build is the baseline itself.
pub struct TestFn<'a, S> {
    metric: Box<dyn Metric<S> + Send + 'a>,
    memo: HashMap<ElementSet, TestScore<S>>,
    log: Vec<Evaluation<S>>,
    total_calls: usize,
}

impl<'a, S: Scalar> TestFn<'a, S> {
    pub fn new(metric: impl Metric<S> + Send + 'a) -> Self {
        TestFn {
            metric: Box::new(metric),
            memo: HashMap::new(),
            log: Vec::new(),
            total_calls: 0,
        }
    }

    /// Score of `set`, from cache when possible.
    pub fn score(&mut self, set: &ElementSet) -> TestScore<S> {
        self.total_calls += 1;
        if set.is_empty() {
            return TestScore::measured(S::zero());
        }
        if let Some(hit) = self.memo.get(set) {
            return hit.clone();
        }
        let score = match self.metric.measure(set) {
            TestScore::Measured { value } => TestScore::measured(value),
            failure => failure,
        };
        self.memo.insert(set.clone(), score.clone());
        self.log.push(Evaluation {
            set: set.clone(),
            score: score.clone(),
        });
        score
    }

    /// Measured value of `set`; build and run failures become errors.
    pub fn evaluate(&mut self, set: &ElementSet) -> Result<S, BisectError> {
        match self.score(set) {
            TestScore::Measured { value } => Ok(value),
            TestScore::BuildFailure { diagnostics } => Err(BisectError::BuildFailure {
                set: set.iter().map(|e| e.label()).collect(),
                diagnostics,
            }),
            TestScore::RunFailure { diagnostics } => Err(BisectError::RunFailure {
                set: set.iter().map(|e| e.label()).collect(),
                diagnostics,
            }),
        }
    }

    pub fn is_cached(&self, set: &ElementSet) -> bool {
        set.is_empty() || self.memo.contains_key(set)
    }

    /// Backend invocations so far (cache misses, failures included).
    pub fn distinct_evaluations(&self) -> usize {
        self.log.len()
    }

    /// All requests, cache hits included.
    pub fn total_calls(&self) -> usize {
        self.total_calls
    }

    /// Cache misses in the order they happened.
    pub fn log(&self) -> &[Evaluation<S>] {
        &self.log
    }
}

impl<S> std::fmt::Debug for TestFn<'_, S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestFn")
            .field("distinct_evaluations", &self.log.len())
            .field("total_calls", &self.total_calls)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Element, Universe};
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    #[test]
    fn memoizes_backend_calls() {
        let backend_calls = Arc::new(AtomicUsize::new(0));
        let counter = Arc::clone(&backend_calls);
        let u = Universe::new((0..4).map(|i| Element::file(format!("f{i}")))).unwrap();
        let mut t = TestFn::new(move |s: &ElementSet| {
            counter.fetch_add(1, Ordering::SeqCst);
            TestScore::measured(s.len() as f64)
        });
        let a = u.from_positions([0, 2]).unwrap();
        assert_eq!(t.evaluate(&a).unwrap(), 2.0);
        assert_eq!(t.evaluate(&a).unwrap(), 2.0);
        assert_eq!(t.evaluate(&u.full()).unwrap(), 4.0);
        assert_eq!(backend_calls.load(Ordering::SeqCst), 2);
        assert_eq!(t.distinct_evaluations(), 2);
        assert_eq!(t.total_calls(), 3);
    }

    #[test]
    fn empty_set_is_free_and_zero() {
        let u = Universe::new([Element::file("a")]).unwrap();
        let mut t = TestFn::new(|_: &ElementSet| -> TestScore<f64> { panic!("not called") });
        assert_eq!(t.evaluate(&u.empty()).unwrap(), 0.0);
        assert_eq!(t.distinct_evaluations(), 0);
    }

    #[test]
    fn failures_are_cached_and_counted() {
        let u = Universe::new([Element::file("a")]).unwrap();
        let mut t = TestFn::new(|_: &ElementSet| TestScore::<f64>::BuildFailure {
            diagnostics: "boom".into(),
        });
        assert!(matches!(t.evaluate(&u.full()), Err(BisectError::BuildFailure { .. })));
        assert!(t.evaluate(&u.full()).is_err());
        assert_eq!(t.distinct_evaluations(), 1);
    }
}
