//! Project configuration.
//!
//! ```toml
//! [project]
//! root = "."
//! files = ["main.cpp", "kahan.cpp"]
//! cxxflags = ["-std=c++17"]
//!
//! [compiler.gcc]
//! binary = "g++"
//! optimization_levels = ["-O0", "-O2", "-O3"]
//! switches = ["-ffast-math"]
//!
//! [tests.kahan]
//! result_kind = "scalar"
//! comparator = "abs_diff"
//!
//! [baselines]
//! correctness = { compiler = "gcc", level = "-O0" }
//! performance = { compiler = "gcc", level = "-O2" }
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use vbisect_core::domain::{
    Comparator, ComparatorKind, Compilation, Element, OptLevel, ResultKind, TestSpec, Universe,
};

use crate::error::ConfigError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    project: RawProject,
    #[serde(default)]
    tools: Tools,
    #[serde(default)]
    compiler: BTreeMap<String, CompilerConfig>,
    #[serde(default)]
    tests: BTreeMap<String, RawTest>,
    baselines: RawBaselines,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProject {
    #[serde(default = "default_root")]
    root: PathBuf,
    files: Vec<String>,
    #[serde(default)]
    cxxflags: Vec<String>,
    #[serde(default)]
    link_flags: Vec<String>,
    linker: Option<String>,
    #[serde(default = "default_determinism_runs")]
    determinism_runs: usize,
    #[serde(default = "default_timeout")]
    timeout_secs: u64,
    #[serde(default)]
    env: Vec<String>,
}

fn default_root() -> PathBuf {
    PathBuf::from(".")
}

fn default_determinism_runs() -> usize {
    3
}

fn default_timeout() -> u64 {
    300
}

fn default_pic() -> String {
    "-fPIC".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tools {
    #[serde(default = "Tools::default_nm")]
    pub nm: String,
    #[serde(default = "Tools::default_objcopy")]
    pub objcopy: String,
    /// Symbol demangler; names are shown mangled if absent.
    #[serde(default = "Tools::default_demangler")]
    pub demangler: Option<String>,
}

impl Tools {
    fn default_nm() -> String {
        "nm".into()
    }
    fn default_objcopy() -> String {
        "objcopy".into()
    }
    fn default_demangler() -> Option<String> {
        Some("c++filt".into())
    }
}

impl Default for Tools {
    fn default() -> Self {
        Tools {
            nm: Tools::default_nm(),
            objcopy: Tools::default_objcopy(),
            demangler: Tools::default_demangler(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompilerConfig {
    pub binary: String,
    #[serde(default)]
    pub optimization_levels: Vec<String>,
    /// Each entry is one switch; an entry may hold several
    /// whitespace-separated flags that belong together.
    #[serde(default)]
    pub switches: Vec<String>,
    #[serde(default = "default_pic")]
    pub pic_flag: String,
    /// Added to every compile and link with this compiler.
    #[serde(default)]
    pub fixed_flags: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTest {
    #[serde(default)]
    inputs_per_run: usize,
    #[serde(default)]
    default_input: Vec<f64>,
    #[serde(default = "default_kind")]
    result_kind: String,
    #[serde(default = "default_comparator")]
    comparator: String,
    digits: Option<u32>,
}

fn default_kind() -> String {
    "scalar".into()
}

fn default_comparator() -> String {
    "abs_diff".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBaselines {
    correctness: RawCompilation,
    performance: Option<RawCompilation>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCompilation {
    compiler: String,
    level: String,
    #[serde(default)]
    switches: Vec<String>,
}

impl RawCompilation {
    fn build(&self) -> Result<Compilation, ConfigError> {
        let level: OptLevel = self
            .level
            .parse()
            .map_err(|e| ConfigError::Invalid(format!("{e}")))?;
        Ok(Compilation::new(self.compiler.clone(), level, self.switches.clone()))
    }
}

/// An environment entry for builds and runs: a variable passed through
/// from the caller, or one set to a fixed value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnvEntry {
    Pass(String),
    Set(String, String),
}

/// Everything needed to build and run a project.
#[derive(Debug, Clone, Serialize)]
pub struct ProjectManifest {
    /// Absolute source root.
    pub root: PathBuf,
    pub files: Vec<String>,
    pub cxxflags: Vec<String>,
    pub link_flags: Vec<String>,
    /// Compiler id whose driver links.
    pub linker: String,
    pub tools: Tools,
    pub compilers: BTreeMap<String, CompilerConfig>,
    pub tests: Vec<TestSpec>,
    pub correctness_baseline: Compilation,
    pub performance_reference: Compilation,
    pub determinism_runs: usize,
    pub timeout: Duration,
    pub env: Vec<EnvEntry>,
}

impl ProjectManifest {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    /// Parse config text; a relative root is taken relative to `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let p = raw.project;
        let root = if p.root.is_absolute() {
            p.root
        } else {
            base.join(&p.root)
        };
        let root = std::fs::canonicalize(&root).unwrap_or(root);

        if p.files.is_empty() {
            return Err(ConfigError::Invalid("[project] files is empty".into()));
        }
        if raw.compiler.is_empty() {
            return Err(ConfigError::Invalid("no [compiler.<id>] section".into()));
        }
        if p.determinism_runs < 2 {
            return Err(ConfigError::Invalid("determinism_runs must be at least 2".into()));
        }

        let mut tests = Vec::new();
        for (name, t) in raw.tests {
            let result_kind: ResultKind = t
                .result_kind
                .parse()
                .map_err(|e| ConfigError::Invalid(format!("test {name}: {e}")))?;
            let kind: ComparatorKind = t
                .comparator
                .parse()
                .map_err(|e| ConfigError::Invalid(format!("test {name}: {e}")))?;
            let comparator = match t.digits {
                Some(0) => {
                    return Err(ConfigError::Invalid(format!("test {name}: digits must be positive")))
                }
                Some(d) => Comparator::with_digits(kind, d),
                None => Comparator::new(kind),
            };
            let spec = TestSpec {
                name: name.clone(),
                inputs_per_run: t.inputs_per_run,
                default_input: t.default_input,
                result_kind,
                comparator,
            };
            spec.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
            tests.push(spec);
        }

        let correctness_baseline = raw.baselines.correctness.build()?;
        let performance_reference = match &raw.baselines.performance {
            Some(c) => c.build()?,
            None => correctness_baseline.clone(),
        };
        for c in [&correctness_baseline, &performance_reference] {
            if !raw.compiler.contains_key(&c.compiler) {
                return Err(ConfigError::Invalid(format!(
                    "baseline `{c}` names unknown compiler {:?}",
                    c.compiler
                )));
            }
        }
        let linker = p.linker.unwrap_or_else(|| correctness_baseline.compiler.clone());
        if !raw.compiler.contains_key(&linker) {
            return Err(ConfigError::Invalid(format!("linker names unknown compiler {linker:?}")));
        }
        for (id, c) in &raw.compiler {
            for level in &c.optimization_levels {
                level
                    .parse::<OptLevel>()
                    .map_err(|e| ConfigError::Invalid(format!("compiler {id}: {e}")))?;
            }
        }

        let env = p
            .env
            .iter()
            .map(|e| match e.split_once('=') {
                Some((k, v)) => EnvEntry::Set(k.to_string(), v.to_string()),
                None => EnvEntry::Pass(e.clone()),
            })
            .collect();

        let manifest = ProjectManifest {
            root,
            files: p.files,
            cxxflags: p.cxxflags,
            link_flags: p.link_flags,
            linker,
            tools: raw.tools,
            compilers: raw.compiler,
            tests,
            correctness_baseline,
            performance_reference,
            determinism_runs: p.determinism_runs,
            timeout: Duration::from_secs(p.timeout_secs),
            env,
        };
        manifest.file_universe()?;
        Ok(manifest)
    }

    pub fn file_universe(&self) -> Result<Arc<Universe>, ConfigError> {
        Universe::new(self.files.iter().map(|f| Element::file(f.clone())))
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn compiler(&self, id: &str) -> Result<&CompilerConfig, ConfigError> {
        self.compilers
            .get(id)
            .ok_or_else(|| ConfigError::Invalid(format!("unknown compiler id {id:?}")))
    }

    pub fn test(&self, name: &str) -> Result<&TestSpec, ConfigError> {
        self.tests
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| ConfigError::Invalid(format!("unknown test {name:?}")))
    }

    pub fn require_tests(&self) -> Result<(), ConfigError> {
        if self.tests.is_empty() {
            Err(ConfigError::Invalid("no [tests.<name>] section".into()))
        } else {
            Ok(())
        }
    }

    /// `PATH` and a fixed locale, plus the configured entries.
    pub fn environment(&self) -> Vec<(String, String)> {
        let mut out: BTreeMap<String, String> = BTreeMap::new();
        if let Ok(path) = std::env::var("PATH") {
            out.insert("PATH".into(), path);
        }
        out.insert("LC_ALL".into(), "C".into());
        for e in &self.env {
            match e {
                EnvEntry::Pass(k) => {
                    if let Ok(v) = std::env::var(k) {
                        out.insert(k.clone(), v);
                    }
                }
                EnvEntry::Set(k, v) => {
                    out.insert(k.clone(), v.clone());
                }
            }
        }
        out.into_iter().collect()
    }
}
