use std::path::Path;
use std::time::Duration;

use vbisect_core::domain::Element;

use crate::config::Tools;
use crate::error::ToolchainError;
use crate::process;

const TOOL_TIMEOUT: Duration = Duration::from_secs(60);

/// One defined symbol from `nm -P`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NmSymbol {
    pub name: String,
    pub kind: char,
}

impl NmSymbol {
    /// Global, strong, in the text section: what symbol search can swap.
    pub fn is_exported_function(&self) -> bool {
        self.kind == 'T'
    }

    /// Global strong data, which both copies of a file define.
    pub fn is_strong_data(&self) -> bool {
        matches!(self.kind, 'D' | 'B' | 'R' | 'G' | 'S')
    }
}

/// Parse POSIX `nm` output: `name type [value [size]]` per line.
pub fn parse_nm(output: &str) -> Vec<NmSymbol> {
    output
        .lines()
        .filter_map(|line| {
            let mut parts = line.split_whitespace();
            let name = parts.next()?;
            let kind = parts.next()?.chars().next()?;
            // Archive member headers look like `lib.a[x.o]:`.
            if name.ends_with(':') {
                return None;
            }
            Some(NmSymbol {
                name: name.to_string(),
                kind,
            })
        })
        .collect()
}

/// Defined symbols of `object` in symbol-table order.
pub fn defined_symbols(
    tools: &Tools,
    env: &[(String, String)],
    object: &Path,
) -> Result<Vec<NmSymbol>, ToolchainError> {
    let args = vec![
        "-P".to_string(),
        "-p".to_string(),
        "--defined-only".to_string(),
        object.display().to_string(),
    ];
    let out = process::run(&tools.nm, &args, env, None, TOOL_TIMEOUT).map_err(|e| ToolchainError::Tool {
        tool: tools.nm.clone(),
        diagnostics: e.to_string(),
    })?;
    if !out.success() {
        return Err(ToolchainError::Tool {
            tool: process::command_line(&tools.nm, &args),
            diagnostics: out.describe(),
        });
    }
    Ok(parse_nm(&String::from_utf8_lossy(&out.stdout)))
}

/// Exported strong function symbols of `object`, compiled from `file`, with
/// demangled names attached when a demangler is configured.
pub fn list_exported_symbols(
    tools: &Tools,
    env: &[(String, String)],
    object: &Path,
    file: &str,
) -> Result<Vec<Element>, ToolchainError> {
    let names: Vec<String> = defined_symbols(tools, env, object)?
        .into_iter()
        .filter(NmSymbol::is_exported_function)
        .map(|s| s.name)
        .collect();
    let demangled = match &tools.demangler {
        Some(tool) if !names.is_empty() => demangle(tool, env, &names)?,
        _ => vec![None; names.len()],
    };
    Ok(names
        .into_iter()
        .zip(demangled)
        .map(|(name, pretty)| {
            let e = Element::symbol(file, name, true);
            match pretty {
                Some(p) => e.with_demangled(p),
                None => e,
            }
        })
        .collect())
}

fn demangle(tool: &str, env: &[(String, String)], names: &[String]) -> Result<Vec<Option<String>>, ToolchainError> {
    let out = process::run(tool, names, env, None, TOOL_TIMEOUT).map_err(|e| ToolchainError::Tool {
        tool: tool.to_string(),
        diagnostics: e.to_string(),
    })?;
    if !out.success() {
        return Err(ToolchainError::Tool {
            tool: tool.to_string(),
            diagnostics: out.describe(),
        });
    }
    let text = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = text.lines().collect();
    if lines.len() != names.len() {
        return Err(ToolchainError::Tool {
            tool: tool.to_string(),
            diagnostics: format!("{} names in, {} lines out", names.len(), lines.len()),
        });
    }
    Ok(names
        .iter()
        .zip(lines)
        .map(|(n, d)| (d != n).then(|| d.to_string()))
        .collect())
}
