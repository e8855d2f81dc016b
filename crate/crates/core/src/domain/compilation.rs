use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::DomainError;

/// Optimization level. The four standard levels are named; anything else
/// (`-Ofast`, `-Os`, vendor-specific spellings) is kept verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum OptLevel {
    O0,
    O1,
    O2,
    O3,
    Other(String),
}

impl OptLevel {
    /// The flag handed to the compiler, e.g. `-O2`.
    pub fn flag(&self) -> String {
        match self {
            OptLevel::O0 => "-O0".into(),
            OptLevel::O1 => "-O1".into(),
            OptLevel::O2 => "-O2".into(),
            OptLevel::O3 => "-O3".into(),
            OptLevel::Other(s) => s.clone(),
        }
    }
}

impl FromStr for OptLevel {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(DomainError::InvalidCompilation("empty optimization level".into()));
        }
        Ok(match s {
            "-O0" | "O0" => OptLevel::O0,
            "-O1" | "O1" => OptLevel::O1,
            "-O2" | "O2" => OptLevel::O2,
            "-O3" | "O3" => OptLevel::O3,
            other => OptLevel::Other(other.to_string()),
        })
    }
}

impl From<OptLevel> for String {
    fn from(level: OptLevel) -> String {
        level.flag()
    }
}

impl TryFrom<String> for OptLevel {
    type Error = DomainError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl fmt::Display for OptLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.flag())
    }
}

/// How a translation unit is built: `(compiler, optimization level, switches)`.
///
/// The triple is the identity. Switch order is preserved because compilers
/// can be order sensitive; duplicates are dropped at construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Compilation {
    pub compiler: String,
    pub level: OptLevel,
    #[serde(default)]
    switches: Vec<String>,
}

impl Compilation {
    pub fn new<I, T>(compiler: impl Into<String>, level: OptLevel, switches: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<String>,
    {
        let mut deduped: Vec<String> = Vec::new();
        for s in switches {
            let s = s.into();
            if !s.is_empty() && !deduped.contains(&s) {
                deduped.push(s);
            }
        }
        Compilation {
            compiler: compiler.into(),
            level,
            switches: deduped,
        }
    }

    pub fn switches(&self) -> &[String] {
        &self.switches
    }

    /// Level flag followed by switches, in order.
    pub fn flags(&self) -> Vec<String> {
        std::iter::once(self.level.flag())
            .chain(self.switches.iter().cloned())
            .collect()
    }

    /// Stable, filesystem-safe identifier.
    pub fn slug(&self) -> String {
        let raw = self.to_string();
        raw.chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' })
            .collect()
    }

    /// Rebuild with duplicates dropped; used after deserializing untrusted input.
    pub fn normalized(self) -> Self {
        Compilation::new(self.compiler, self.level, self.switches)
    }
}

impl fmt::Display for Compilation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.compiler, self.level)?;
        for s in &self.switches {
            write!(f, " {s}")?;
        }
        Ok(())
    }
}

/// Parses `"<compiler> <level> [switch ...]"`, the same shape `Display` writes.
impl FromStr for Compilation {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split_whitespace();
        let compiler = parts
            .next()
            .ok_or_else(|| DomainError::InvalidCompilation("empty compilation".into()))?;
        let level = parts
            .next()
            .ok_or_else(|| DomainError::InvalidCompilation(format!("missing level in {s:?}")))?
            .parse()?;
        Ok(Compilation::new(compiler, level, parts))
    }
}
