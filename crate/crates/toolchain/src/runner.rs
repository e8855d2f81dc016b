use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use vbisect_core::domain::{TestSpec, TestValue};

use crate::error::ToolchainError;
use crate::process;
use crate::protocol;

/// Executes test binaries under a fixed environment and timeout.
#[derive(Debug)]
pub struct Runner {
    env: Vec<(String, String)>,
    timeout: Duration,
    scratch: PathBuf,
    counter: AtomicU64,
}

/// One test execution: the joined result and the total wall time.
#[derive(Debug, Clone)]
pub struct TestRun {
    pub value: TestValue,
    pub elapsed: Duration,
}

impl Runner {
    pub fn new(env: Vec<(String, String)>, timeout: Duration, scratch: impl Into<PathBuf>) -> Self {
        Runner {
            env,
            timeout,
            scratch: scratch.into(),
            counter: AtomicU64::new(0),
        }
    }

    /// Run `exe --test <name> --input <file>` once per input chunk and join
    /// the results in order.
    pub fn run_test(&self, exe: &Path, spec: &TestSpec) -> Result<TestRun, ToolchainError> {
        std::fs::create_dir_all(&self.scratch)
            .map_err(|e| ToolchainError::io(self.scratch.display(), e))?;
        let mut parts = Vec::new();
        let mut elapsed = Duration::ZERO;
        for chunk in spec.input_chunks() {
            let id = self.counter.fetch_add(1, Ordering::Relaxed);
            let input = self
                .scratch
                .join(format!("input-{}-{}-{id}.txt", std::process::id(), spec.name));
            std::fs::write(&input, protocol::encode_input(chunk))
                .map_err(|e| ToolchainError::io(input.display(), e))?;
            let args = vec![
                "--test".to_string(),
                spec.name.clone(),
                "--input".to_string(),
                input.display().to_string(),
            ];
            let result = process::run(&exe.display().to_string(), &args, &self.env, None, self.timeout);
            std::fs::remove_file(&input).ok();
            let captured = result.map_err(|e| ToolchainError::Run {
                test: spec.name.clone(),
                diagnostics: format!("cannot start {}: {e}", exe.display()),
            })?;
            if captured.status.is_none() {
                return Err(ToolchainError::Timeout {
                    test: spec.name.clone(),
                    after: self.timeout,
                });
            }
            if !captured.success() {
                return Err(ToolchainError::Run {
                    test: spec.name.clone(),
                    diagnostics: captured.describe(),
                });
            }
            elapsed += captured.elapsed;
            let value = protocol::decode_output(&captured.stdout).map_err(|d| ToolchainError::Protocol {
                test: spec.name.clone(),
                diagnostics: d,
            })?;
            parts.push(value);
        }
        let value = protocol::concatenate(spec.result_kind, parts).map_err(|d| ToolchainError::Protocol {
            test: spec.name.clone(),
            diagnostics: d,
        })?;
        Ok(TestRun { value, elapsed })
    }
}

#[cfg(all(test, unix))]
mod tests {
    use super::*;
    use std::os::unix::fs::PermissionsExt;
    use vbisect_core::domain::{Comparator, ComparatorKind, ResultKind};

    fn script(dir: &Path, body: &str) -> PathBuf {
        let path = dir.join("prog.sh");
        std::fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
        std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
        path
    }

    fn spec(ipr: usize, input: Vec<f64>, kind: ResultKind) -> TestSpec {
        TestSpec {
            name: "t".into(),
            inputs_per_run: ipr,
            default_input: input,
            result_kind: kind,
            comparator: Comparator::new(ComparatorKind::AbsDiff),
        }
    }

    fn runner(dir: &Path) -> Runner {
        let env = vec![("PATH".into(), std::env::var("PATH").unwrap_or_default())];
        Runner::new(env, Duration::from_secs(5), dir.join("scratch"))
    }

    #[test]
    fn scalar_result() {
        let dir = tempfile::tempdir().unwrap();
        let exe = script(dir.path(), r#"[ "$1" = --test ] && [ "$2" = t ] && [ "$3" = --input ] || exit 9
printf 'SCALAR\n0x1.8p+1\n'"#);
        let run = runner(dir.path()).run_test(&exe, &spec(0, vec![], ResultKind::Scalar)).unwrap();
        assert_eq!(run.value, TestValue::Scalar(3.0));
    }

    #[test]
    fn chunked_runs_concatenate_in_order() {
        let dir = tempfile::tempdir().unwrap();
        // Echo the first input line back as the result.
        let exe = script(dir.path(), r#"printf 'SCALAR\n'; head -n 1 "$4""#);
        let run = runner(dir.path())
            .run_test(&exe, &spec(2, vec![1.0, 9.0, 2.0, 9.0, 3.0, 9.0], ResultKind::Scalar))
            .unwrap();
        assert_eq!(run.value, TestValue::Vector(vec![1.0, 2.0, 3.0]));
    }

    #[test]
    fn failures_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let exe = script(dir.path(), "echo boom >&2; exit 1");
        let err = runner(dir.path()).run_test(&exe, &spec(0, vec![], ResultKind::Scalar)).unwrap_err();
        assert!(matches!(err, ToolchainError::Run { ref diagnostics, .. } if diagnostics.contains("boom")));

        let exe = script(dir.path(), "printf 'SCALAR\n1.5\n'");
        let err = runner(dir.path()).run_test(&exe, &spec(0, vec![], ResultKind::Scalar)).unwrap_err();
        assert!(matches!(err, ToolchainError::Protocol { .. }));

        let exe = script(dir.path(), "printf 'VECTOR 1\n0x1p+0\n'");
        let err = runner(dir.path()).run_test(&exe, &spec(0, vec![], ResultKind::Scalar)).unwrap_err();
        assert!(matches!(err, ToolchainError::Protocol { .. }));
    }

    #[test]
    fn timeout_is_enforced() {
        let dir = tempfile::tempdir().unwrap();
        let exe = script(dir.path(), "sleep 5");
        let env = vec![("PATH".into(), std::env::var("PATH").unwrap_or_default())];
        let r = Runner::new(env, Duration::from_millis(200), dir.path().join("scratch"));
        let err = r.run_test(&exe, &spec(0, vec![], ResultKind::Scalar)).unwrap_err();
        assert!(matches!(err, ToolchainError::Timeout { .. }));
    }
}
