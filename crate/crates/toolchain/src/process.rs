use std::io::Read;
use std::path::Path;
use std::process::{Command, ExitStatus, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use wait_timeout::ChildExt;

#[derive(Debug)]
pub struct Captured {
    /// `None` when the process was killed at the timeout.
    pub status: Option<ExitStatus>,
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
    pub elapsed: Duration,
}

impl Captured {
    pub fn success(&self) -> bool {
        self.status.is_some_and(|s| s.success())
    }

    pub fn stderr_text(&self) -> String {
        String::from_utf8_lossy(&self.stderr).trim_end().to_string()
    }

    /// Exit status and stderr, for diagnostics.
    pub fn describe(&self) -> String {
        let status = match self.status {
            Some(s) => s.to_string(),
            None => "timed out".into(),
        };
        let stderr = self.stderr_text();
        if stderr.is_empty() {
            status
        } else {
            format!("{status}\n{stderr}")
        }
    }
}

/// Run `program` with exactly `env`, capturing both streams.
pub fn run(
    program: &str,
    args: &[String],
    env: &[(String, String)],
    cwd: Option<&Path>,
    timeout: Duration,
) -> std::io::Result<Captured> {
    let mut cmd = Command::new(program);
    cmd.args(args)
        .env_clear()
        .envs(env.iter().map(|(k, v)| (k, v)))
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    if let Some(dir) = cwd {
        cmd.current_dir(dir);
    }
    #[cfg(unix)]
    {
        use std::os::unix::process::CommandExt;
        cmd.process_group(0);
    }
    let start = Instant::now();
    let mut child = cmd.spawn()?;
    let mut out_pipe = child.stdout.take().expect("piped");
    let mut err_pipe = child.stderr.take().expect("piped");
    let out_reader = thread::spawn(move || {
        let mut buf = Vec::new();
        out_pipe.read_to_end(&mut buf).map(|_| buf)
    });
    let err_reader = thread::spawn(move || {
        let mut buf = Vec::new();
        err_pipe.read_to_end(&mut buf).map(|_| buf)
    });
    let status = match child.wait_timeout(timeout)? {
        Some(s) => Some(s),
        None => {
            kill_tree(&mut child);
            child.wait()?;
            None
        }
    };
    let elapsed = start.elapsed();
    let stdout = out_reader.join().expect("reader thread")?;
    let stderr = err_reader.join().expect("reader thread")?;
    Ok(Captured {
        status,
        stdout,
        stderr,
        elapsed,
    })
}

// Descendants may hold the output pipes open, so the whole group goes.
#[cfg(unix)]
fn kill_tree(child: &mut std::process::Child) {
    // SAFETY: plain syscall on the group this child leads.
    unsafe {
        libc::kill(-(child.id() as libc::pid_t), libc::SIGKILL);
    }
}

#[cfg(not(unix))]
fn kill_tree(child: &mut std::process::Child) {
    child.kill().ok();
}

/// Quote an argument list for display.
pub fn command_line(program: &str, args: &[String]) -> String {
    std::iter::once(program)
        .chain(args.iter().map(String::as_str))
        .map(|a| {
            if a.is_empty() || a.contains(|c: char| c.is_whitespace() || c == '\'' || c == '"') {
                format!("'{}'", a.replace('\'', r"'\''"))
            } else {
                a.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_env() -> Vec<(String, String)> {
        vec![("PATH".into(), std::env::var("PATH").unwrap_or_default())]
    }

    #[test]
    fn captures_output_and_status() {
        let c = run("sh", &["-c".into(), "echo out; echo err >&2; exit 3".into()], &path_env(), None, Duration::from_secs(10)).unwrap();
        assert_eq!(c.stdout, b"out\n");
        assert_eq!(c.stderr_text(), "err");
        assert_eq!(c.status.unwrap().code(), Some(3));
        assert!(!c.success());
    }

    #[test]
    fn environment_is_exact() {
        let env = vec![
            ("PATH".into(), std::env::var("PATH").unwrap_or_default()),
            ("ONLY".into(), "1".into()),
        ];
        let c = run("sh", &["-c".into(), "echo ${ONLY}${HOME}".into()], &env, None, Duration::from_secs(10)).unwrap();
        assert_eq!(c.stdout, b"1\n");
    }

    #[test]
    fn kills_at_timeout() {
        let c = run("sleep", &["5".into()], &path_env(), None, Duration::from_millis(100)).unwrap();
        assert!(c.status.is_none());
        assert!(c.elapsed < Duration::from_secs(4));
    }

    #[test]
    fn quotes_for_display() {
        assert_eq!(command_line("g++", &["-O2".into(), "a b".into()]), "g++ -O2 'a b'");
    }
}
