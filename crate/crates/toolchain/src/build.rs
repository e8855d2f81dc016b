use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use vbisect_core::domain::Compilation;

use crate::config::ProjectManifest;
use crate::error::ToolchainError;
use crate::process;
use crate::symbols;

/// Symbol mixing for one file: `chosen` come from the candidate copy,
/// every other exported function from the baseline copy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Weakening {
    pub file: String,
    pub chosen: BTreeSet<String>,
    /// All exported function symbols of the file.
    pub exported: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BuildPlan {
    pub candidate: Compilation,
    pub baseline: Compilation,
    /// Files compiled with the candidate; the rest use the baseline.
    pub candidate_files: BTreeSet<String>,
    /// Build the candidate files and the weakened file position-independent.
    pub pic_override: bool,
    pub weakened: Option<Weakening>,
}

impl BuildPlan {
    pub fn mixed(candidate: &Compilation, baseline: &Compilation, files: impl IntoIterator<Item = String>) -> Self {
        BuildPlan {
            candidate: candidate.clone(),
            baseline: baseline.clone(),
            candidate_files: files.into_iter().collect(),
            pic_override: false,
            weakened: None,
        }
    }

    pub fn symbols(
        candidate: &Compilation,
        baseline: &Compilation,
        file: &str,
        exported: Vec<String>,
        chosen: impl IntoIterator<Item = String>,
    ) -> Self {
        BuildPlan {
            candidate: candidate.clone(),
            baseline: baseline.clone(),
            candidate_files: BTreeSet::new(),
            pic_override: true,
            weakened: Some(Weakening {
                file: file.to_string(),
                chosen: chosen.into_iter().collect(),
                exported,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Artifact {
    pub exe: PathBuf,
    pub objects: Vec<PathBuf>,
}

/// Compiles, rewrites and links, caching every intermediate by content.
pub struct Builder {
    manifest: Arc<ProjectManifest>,
    env: Vec<(String, String)>,
    objects_dir: PathBuf,
    builds_dir: PathBuf,
    pool: rayon::ThreadPool,
    compiles: AtomicUsize,
    links: AtomicUsize,
    digests: Mutex<HashMap<String, String>>,
}

const HEADER_EXTENSIONS: [&str; 6] = ["h", "hh", "hpp", "hxx", "inc", "inl"];

fn sha(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    hex::encode(&h.finalize()[..12])
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

fn split_flags(flags: &[String]) -> impl Iterator<Item = String> + '_ {
    flags.iter().flat_map(|f| f.split_whitespace().map(str::to_string))
}

impl Builder {
    /// `results` is the output directory; objects go under `results/objects`.
    pub fn new(manifest: Arc<ProjectManifest>, results: &Path, jobs: usize) -> Result<Self, ToolchainError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| ToolchainError::Io(format!("cannot start build pool: {e}")))?;
        // Tools run from the project root, so every path handed to them is absolute.
        let results = std::path::absolute(results).map_err(|e| ToolchainError::io(results.display(), e))?;
        let objects_dir = results.join("objects");
        let builds_dir = results.join("builds");
        for d in [&objects_dir, &builds_dir] {
            std::fs::create_dir_all(d).map_err(|e| ToolchainError::io(d.display(), e))?;
        }
        Ok(Builder {
            env: manifest.environment(),
            manifest,
            objects_dir,
            builds_dir,
            pool,
            compiles: AtomicUsize::new(0),
            links: AtomicUsize::new(0),
            digests: Mutex::new(HashMap::new()),
        })
    }

    pub fn manifest(&self) -> &ProjectManifest {
        &self.manifest
    }

    pub fn env(&self) -> &[(String, String)] {
        &self.env
    }

    /// Compiler invocations so far; cache hits do not count.
    pub fn compile_count(&self) -> usize {
        self.compiles.load(Ordering::Relaxed)
    }

    pub fn link_count(&self) -> usize {
        self.links.load(Ordering::Relaxed)
    }

    // The source plus every header next to it; deeper include trees are
    // not tracked.
    fn source_digest(&self, file: &str) -> Result<String, ToolchainError> {
        if let Some(d) = self.digests.lock().expect("digest lock").get(file) {
            return Ok(d.clone());
        }
        let path = self.manifest.root.join(file);
        let read = |p: &Path| std::fs::read(p).map_err(|e| ToolchainError::io(p.display(), e));
        let mut h = Sha256::new();
        h.update(read(&path)?);
        let dir = path.parent().unwrap_or(&self.manifest.root);
        let mut headers: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| ToolchainError::io(dir.display(), e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension()
                    .and_then(|x| x.to_str())
                    .is_some_and(|x| HEADER_EXTENSIONS.contains(&x))
            })
            .collect();
        headers.sort();
        for header in headers {
            h.update(header.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default());
            h.update(read(&header)?);
        }
        let d = hex::encode(h.finalize());
        self.digests.lock().expect("digest lock").insert(file.to_string(), d.clone());
        Ok(d)
    }

    fn compile_args(&self, file: &str, compilation: &Compilation, pic: bool, out: &Path) -> Result<(String, Vec<String>), ToolchainError> {
        let cc = self.manifest.compiler(&compilation.compiler).map_err(|e| ToolchainError::Compile {
            file: file.to_string(),
            compilation: compilation.to_string(),
            diagnostics: e.to_string(),
        })?;
        let mut args: Vec<String> = split_flags(&compilation.flags()).collect();
        args.extend(split_flags(&cc.fixed_flags));
        args.extend(split_flags(&self.manifest.cxxflags));
        if pic {
            args.extend(cc.pic_flag.split_whitespace().map(str::to_string));
        }
        args.push("-c".into());
        args.push(self.manifest.root.join(file).display().to_string());
        args.push("-o".into());
        args.push(out.display().to_string());
        Ok((cc.binary.clone(), args))
    }

    /// Object for `file` under `compilation`, compiling only on a cache miss.
    pub fn compile(&self, file: &str, compilation: &Compilation, pic: bool) -> Result<PathBuf, ToolchainError> {
        let digest = self.source_digest(file)?;
        let (binary, probe) = self.compile_args(file, compilation, pic, Path::new("@"))?;
        let key = sha(&[file, &digest, &binary, &probe.join("\u{1f}")]);
        let dir = self
            .objects_dir
            .join(format!("{}{}", compilation.slug(), if pic { "-pic" } else { "" }));
        let obj = dir.join(format!("{}-{key}.o", sanitize(file)));
        if obj.exists() {
            return Ok(obj);
        }
        std::fs::create_dir_all(&dir).map_err(|e| ToolchainError::io(dir.display(), e))?;
        let tmp = dir.join(format!(".{}-{key}.{}.tmp.o", sanitize(file), std::process::id()));
        let (binary, args) = self.compile_args(file, compilation, pic, &tmp)?;
        self.compiles.fetch_add(1, Ordering::Relaxed);
        log::debug!("{}", process::command_line(&binary, &args));
        let out = process::run(&binary, &args, &self.env, Some(&self.manifest.root), self.manifest.timeout)
            .map_err(|e| ToolchainError::Compile {
                file: file.to_string(),
                compilation: compilation.to_string(),
                diagnostics: format!("cannot run {binary}: {e}"),
            })?;
        if !out.success() {
            std::fs::remove_file(&tmp).ok();
            return Err(ToolchainError::Compile {
                file: file.to_string(),
                compilation: compilation.to_string(),
                diagnostics: out.describe(),
            });
        }
        std::fs::rename(&tmp, &obj).map_err(|e| ToolchainError::io(obj.display(), e))?;
        Ok(obj)
    }

    /// Exported strong function symbols of `file` as compiled under `compilation`.
    pub fn exported_symbols(
        &self,
        file: &str,
        compilation: &Compilation,
        pic: bool,
    ) -> Result<Vec<vbisect_core::domain::Element>, ToolchainError> {
        let obj = self.compile(file, compilation, pic)?;
        symbols::list_exported_symbols(&self.manifest.tools, &self.env, &obj, file)
    }

    /// Copy of `object` with `names` made weak, cached by content.
    fn weaken(&self, object: &Path, names: &[String]) -> Result<PathBuf, ToolchainError> {
        if names.is_empty() {
            return Ok(object.to_path_buf());
        }
        let key = sha(&[&object.display().to_string(), &names.join("\u{1f}")]);
        let dir = self.objects_dir.join("weakened");
        let out = dir.join(format!("{key}.o"));
        if out.exists() {
            return Ok(out);
        }
        std::fs::create_dir_all(&dir).map_err(|e| ToolchainError::io(dir.display(), e))?;
        let tmp = dir.join(format!(".{key}.{}.tmp.o", std::process::id()));
        let mut args: Vec<String> = names.iter().map(|n| format!("--weaken-symbol={n}")).collect();
        args.push(object.display().to_string());
        args.push(tmp.display().to_string());
        let tool = &self.manifest.tools.objcopy;
        let res = process::run(tool, &args, &self.env, None, self.manifest.timeout).map_err(|e| ToolchainError::Tool {
            tool: tool.clone(),
            diagnostics: e.to_string(),
        })?;
        if !res.success() {
            std::fs::remove_file(&tmp).ok();
            return Err(ToolchainError::Tool {
                tool: process::command_line(tool, &args),
                diagnostics: res.describe(),
            });
        }
        std::fs::rename(&tmp, &out).map_err(|e| ToolchainError::io(out.display(), e))?;
        Ok(out)
    }

    fn link(&self, objects: &[PathBuf]) -> Result<PathBuf, ToolchainError> {
        let linker = self
            .manifest
            .compiler(&self.manifest.linker)
            .map_err(|e| ToolchainError::Link(e.to_string()))?;
        let mut args: Vec<String> = split_flags(&linker.fixed_flags).collect();
        args.extend(objects.iter().map(|o| o.display().to_string()));
        args.extend(split_flags(&self.manifest.link_flags));
        let key = sha(&[&linker.binary, &args.join("\u{1f}")]);
        let dir = self.builds_dir.join(&key);
        let exe = dir.join("prog");
        if exe.exists() {
            return Ok(exe);
        }
        std::fs::create_dir_all(&dir).map_err(|e| ToolchainError::io(dir.display(), e))?;
        let tmp = dir.join(format!(".prog.{}.tmp", std::process::id()));
        args.push("-o".into());
        args.push(tmp.display().to_string());
        self.links.fetch_add(1, Ordering::Relaxed);
        log::debug!("{}", process::command_line(&linker.binary, &args));
        let out = process::run(&linker.binary, &args, &self.env, Some(&self.manifest.root), self.manifest.timeout)
            .map_err(|e| ToolchainError::Link(format!("cannot run {}: {e}", linker.binary)))?;
        if !out.success() {
            std::fs::remove_file(&tmp).ok();
            return Err(ToolchainError::Link(out.describe()));
        }
        std::fs::rename(&tmp, &exe).map_err(|e| ToolchainError::io(exe.display(), e))?;
        Ok(exe)
    }

    fn check_plan(&self, plan: &BuildPlan) -> Result<(), ToolchainError> {
        let known = |f: &String| self.manifest.files.contains(f);
        if let Some(bad) = plan.candidate_files.iter().find(|f| !known(f)) {
            return Err(ToolchainError::Link(format!("{bad} is not a project file")));
        }
        if let Some(w) = &plan.weakened {
            if !plan.pic_override {
                return Err(ToolchainError::Link("symbol mixing requires position-independent code".into()));
            }
            if !known(&w.file) || plan.candidate_files.contains(&w.file) {
                return Err(ToolchainError::Link(format!("cannot mix symbols of {}", w.file)));
            }
            if let Some(bad) = w.chosen.iter().find(|s| !w.exported.contains(s)) {
                return Err(ToolchainError::Link(format!("{bad} is not exported by {}", w.file)));
            }
        }
        Ok(())
    }

    /// Link the project with `plan.candidate_files` from the candidate and
    /// everything else from the baseline.
    pub fn build_mixed(&self, plan: &BuildPlan) -> Result<Artifact, ToolchainError> {
        self.check_plan(plan)?;
        let files = self.manifest.files.clone();
        let objects: Vec<Vec<PathBuf>> = self.pool.install(|| {
            files
                .par_iter()
                .map(|file| match &plan.weakened {
                    Some(w) if &w.file == file => self.mixed_symbols(plan, w),
                    _ => {
                        let candidate = plan.candidate_files.contains(file);
                        let c = if candidate { &plan.candidate } else { &plan.baseline };
                        Ok(vec![self.compile(file, c, candidate && plan.pic_override)?])
                    }
                })
                .collect::<Result<_, _>>()
        })?;
        let objects: Vec<PathBuf> = objects.into_iter().flatten().collect();
        let exe = self.link(&objects)?;
        Ok(Artifact { exe, objects })
    }

    /// Same as [`build_mixed`](Self::build_mixed); named for the symbol-level
    /// plans it is used with.
    pub fn weaken_and_link(&self, plan: &BuildPlan) -> Result<Artifact, ToolchainError> {
        if plan.weakened.is_none() {
            return Err(ToolchainError::Link("plan has no symbol mixing".into()));
        }
        self.build_mixed(plan)
    }

    // Both copies of the file go into the link. Each exported function is
    // strong in exactly one of them. Strong data would be defined twice, so
    // the candidate copy's data is weakened too.
    fn mixed_symbols(&self, plan: &BuildPlan, w: &Weakening) -> Result<Vec<PathBuf>, ToolchainError> {
        let cand = self.compile(&w.file, &plan.candidate, true)?;
        let base = self.compile(&w.file, &plan.baseline, true)?;
        let mut cand_weak: Vec<String> = w
            .exported
            .iter()
            .filter(|s| !w.chosen.contains(*s))
            .cloned()
            .collect();
        cand_weak.extend(
            symbols::defined_symbols(&self.manifest.tools, &self.env, &cand)?
                .into_iter()
                .filter(symbols::NmSymbol::is_strong_data)
                .map(|s| s.name),
        );
        let base_weak: Vec<String> = w.chosen.iter().cloned().collect();
        Ok(vec![self.weaken(&cand, &cand_weak)?, self.weaken(&base, &base_weak)?])
    }
}
