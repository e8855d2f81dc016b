use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::domain::{Element, ElementSet, Universe};
use crate::Scalar;

/// How injections are placed and sized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InjectionMode {
    /// Exported sites, distinct power-of-two magnitudes `2^-1, 2^-2, ...`.
    Independent,
    /// The first two injections form a pair in different files that is
    /// variable only when both are present; the rest are independent.
    Coupled,
    /// Exported sites with zero magnitude: nothing is measurable.
    ZeroMagnitude,
    /// Non-exported sites, each with an exported caller in the same file.
    NonExported,
    /// Per injection: exported, non-exported or zero magnitude at random.
    Mixed,
    /// Exported sites whose magnitudes repeat in pairs, so distinct sets
    /// can score the same.
    Collision,
    /// One file holds `+2^-1` and `-2^-2` on two of its symbols, so the file
    /// scores below its biggest symbol; the rest are independent.
    SubFileCancellation,
}

impl InjectionMode {
    pub const ALL: [InjectionMode; 7] = [
        InjectionMode::Independent,
        InjectionMode::Coupled,
        InjectionMode::ZeroMagnitude,
        InjectionMode::NonExported,
        InjectionMode::Mixed,
        InjectionMode::Collision,
        InjectionMode::SubFileCancellation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InjectionMode::Independent => "independent",
            InjectionMode::Coupled => "coupled",
            InjectionMode::ZeroMagnitude => "zero-magnitude",
            InjectionMode::NonExported => "non-exported",
            InjectionMode::Mixed => "mixed",
            InjectionMode::Collision => "collision",
            InjectionMode::SubFileCancellation => "sub-file-cancellation",
        }
    }
}

impl fmt::Display for InjectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InjectionMode {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        InjectionMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| SimError::InvalidConfig(format!("unknown injection mode {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SymbolSite {
    pub file: usize,
    pub symbol: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSymbol {
    pub name: String,
    pub exported: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticFile {
    pub path: String,
    pub symbols: Vec<SyntheticSymbol>,
}

/// Files and symbols, without any injected variability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectLayout {
    pub seed: u64,
    pub files: Vec<SyntheticFile>,
}

/// Fraction of symbols that are static (not exported) in generated layouts.
/// The first symbol of every file is always exported.
pub const STATIC_FRACTION: f64 = 0.2;

impl ProjectLayout {
    pub fn generate(seed: u64, n_files: usize, symbols_per_file: usize) -> Result<Self, SimError> {
        if n_files == 0 || symbols_per_file == 0 {
            return Err(SimError::InvalidConfig(format!(
                "need at least one file and one symbol per file, got {n_files} x {symbols_per_file}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let files = (0..n_files)
            .map(|f| SyntheticFile {
                path: format!("src/file_{f:03}.cpp"),
                symbols: (0..symbols_per_file)
                    .map(|s| SyntheticSymbol {
                        name: format!("f{f:03}_s{s:03}"),
                        exported: s == 0 || !rng.gen_bool(STATIC_FRACTION),
                    })
                    .collect(),
            })
            .collect();
        Ok(ProjectLayout { seed, files })
    }

    pub fn total_symbols(&self) -> usize {
        self.files.iter().map(|f| f.symbols.len()).sum()
    }

    pub fn sites(&self, exported: Option<bool>) -> Vec<SymbolSite> {
        self.files
            .iter()
            .enumerate()
            .flat_map(|(fi, f)| {
                f.symbols
                    .iter()
                    .enumerate()
                    .filter(move |(_, s)| exported.is_none_or(|e| s.exported == e))
                    .map(move |(si, _)| SymbolSite { file: fi, symbol: si })
            })
            .collect()
    }

    pub fn exported_in(&self, file: usize) -> Vec<usize> {
        self.files[file]
            .symbols
            .iter()
            .enumerate()
            .filter(|(_, s)| s.exported)
            .map(|(i, _)| i)
            .collect()
    }
}

/// A variability source attached to one symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Injection<S> {
    pub site: SymbolSite,
    /// Signed contribution; `|sum|` per file is what a Test observes.
    pub magnitude: S,
    /// For a non-exported site: the exported symbol in the same file that
    /// carries its effect at symbol level. `None` means symbol-level search
    /// cannot see it at all.
    pub caller: Option<usize>,
}

/// Two sites that are variable only together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coupling<S> {
    pub a: SymbolSite,
    pub b: SymbolSite,
    pub magnitude: S,
}

/// A project with known injected variability.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticProject<S> {
    pub layout: ProjectLayout,
    pub mode: InjectionMode,
    pub injections: Vec<Injection<S>>,
    pub couplings: Vec<Coupling<S>>,
    #[serde(skip)]
    cache: UniverseCache,
}

#[derive(Debug, Clone, Default)]
struct UniverseCache {
    files: Option<Arc<Universe>>,
    symbols: Vec<Arc<Universe>>,
}

impl<S: Scalar> SyntheticProject<S> {
    pub fn new(
        layout: ProjectLayout,
        mode: InjectionMode,
        injections: Vec<Injection<S>>,
        couplings: Vec<Coupling<S>>,
    ) -> Result<Self, SimError> {
        for inj in &injections {
            let file = layout
                .files
                .get(inj.site.file)
                .ok_or_else(|| SimError::InvalidConfig(format!("no file {}", inj.site.file)))?;
            let sym = file
                .symbols
                .get(inj.site.symbol)
                .ok_or_else(|| SimError::InvalidConfig(format!("no symbol {:?}", inj.site)))?;
            if let Some(c) = inj.caller {
                if sym.exported || !file.symbols.get(c).is_some_and(|s| s.exported) {
                    return Err(SimError::InvalidConfig(format!(
                        "caller {c} of {:?} must be an exported symbol of a non-exported site",
                        inj.site
                    )));
                }
            }
        }
        let files = Universe::new(layout.files.iter().map(|f| Element::file(f.path.clone())))
            .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        let symbols = layout
            .files
            .iter()
            .map(|f| {
                Universe::new(
                    f.symbols
                        .iter()
                        .filter(|s| s.exported)
                        .map(|s| Element::symbol(f.path.clone(), s.name.clone(), true)),
                )
                .map_err(|e| SimError::InvalidConfig(e.to_string()))
            })
            .collect::<Result<_, _>>()?;
        Ok(SyntheticProject {
            layout,
            mode,
            injections,
            couplings,
            cache: UniverseCache {
                files: Some(files),
                symbols,
            },
        })
    }

    /// Layout plus `n_injections` injections placed without replacement.
    pub fn generate(
        seed: u64,
        n_files: usize,
        symbols_per_file: usize,
        n_injections: usize,
        mode: InjectionMode,
    ) -> Result<Self, SimError> {
        let layout = ProjectLayout::generate(seed, n_files, symbols_per_file)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        Self::inject(layout, &mut rng, n_injections, mode)
    }

    pub fn inject(
        layout: ProjectLayout,
        rng: &mut impl Rng,
        n_injections: usize,
        mode: InjectionMode,
    ) -> Result<Self, SimError> {
        if n_injections > layout.total_symbols() {
            return Err(SimError::InvalidConfig(format!(
                "{n_injections} injections but only {} symbols",
                layout.total_symbols()
            )));
        }
        let pow2 = |i: usize| S::inverse_pow2(i as u32 + 1);
        let pick = |rng: &mut dyn rand::RngCore, pool: Vec<SymbolSite>, n: usize| -> Result<Vec<SymbolSite>, SimError> {
            if pool.len() < n {
                return Err(SimError::InvalidConfig(format!(
                    "{n} injections requested but only {} eligible sites for mode {mode}",
                    pool.len()
                )));
            }
            let mut pool = pool;
            pool.shuffle(rng);
            pool.truncate(n);
            Ok(pool)
        };
        let caller_for = |rng: &mut dyn rand::RngCore, site: SymbolSite| {
            layout.exported_in(site.file).choose(rng).copied()
        };

        let mut injections = Vec::new();
        let mut couplings = Vec::new();
        match mode {
            InjectionMode::Independent | InjectionMode::ZeroMagnitude | InjectionMode::Collision => {
                for (i, site) in pick(rng, layout.sites(Some(true)), n_injections)?.into_iter().enumerate() {
                    let magnitude = match mode {
                        InjectionMode::Independent => pow2(i),
                        InjectionMode::ZeroMagnitude => S::zero(),
                        _ => pow2(i / 2),
                    };
                    injections.push(Injection { site, magnitude, caller: None });
                }
            }
            InjectionMode::NonExported => {
                for (i, site) in pick(rng, layout.sites(Some(false)), n_injections)?.into_iter().enumerate() {
                    let caller = caller_for(rng, site);
                    injections.push(Injection { site, magnitude: pow2(i), caller });
                }
            }
            InjectionMode::Mixed => {
                for (i, site) in pick(rng, layout.sites(None), n_injections)?.into_iter().enumerate() {
                    let exported = layout.files[site.file].symbols[site.symbol].exported;
                    let magnitude = if rng.gen_bool(0.16) { S::zero() } else { pow2(i) };
                    // Half of the hidden sites get a caller; the rest are
                    // visible only at file level.
                    let caller = if exported || rng.gen_bool(0.5) {
                        None
                    } else {
                        caller_for(rng, site)
                    };
                    injections.push(Injection { site, magnitude, caller });
                }
            }
            InjectionMode::Coupled => {
                if n_injections < 2 || layout.files.len() < 2 {
                    return Err(SimError::InvalidConfig(
                        "coupled mode needs two injections and two files".into(),
                    ));
                }
                let mut sites = pick(rng, layout.sites(Some(true)), layout.sites(Some(true)).len())?;
                let a = sites.remove(0);
                let b_idx = sites
                    .iter()
                    .position(|s| s.file != a.file)
                    .ok_or_else(|| SimError::InvalidConfig("no second file for the pair".into()))?;
                let b = sites.remove(b_idx);
                couplings.push(Coupling { a, b, magnitude: pow2(0) });
                for (i, site) in sites.into_iter().take(n_injections - 2).enumerate() {
                    injections.push(Injection { site, magnitude: pow2(i + 1), caller: None });
                }
            }
            InjectionMode::SubFileCancellation => {
                if n_injections < 2 {
                    return Err(SimError::InvalidConfig(
                        "sub-file cancellation needs two injections".into(),
                    ));
                }
                let mut candidates: Vec<usize> = (0..layout.files.len())
                    .filter(|&f| layout.exported_in(f).len() >= 2)
                    .collect();
                candidates.shuffle(rng);
                let file = *candidates.first().ok_or_else(|| {
                    SimError::InvalidConfig("no file with two exported symbols".into())
                })?;
                let mut syms = layout.exported_in(file);
                syms.shuffle(rng);
                injections.push(Injection {
                    site: SymbolSite { file, symbol: syms[0] },
                    magnitude: pow2(0),
                    caller: None,
                });
                injections.push(Injection {
                    site: SymbolSite { file, symbol: syms[1] },
                    magnitude: S::zero() - pow2(1),
                    caller: None,
                });
                let others: Vec<SymbolSite> = layout
                    .sites(Some(true))
                    .into_iter()
                    .filter(|s| s.file != file)
                    .collect();
                for (i, site) in pick(rng, others, n_injections - 2)?.into_iter().enumerate() {
                    injections.push(Injection { site, magnitude: pow2(i + 2), caller: None });
                }
            }
        }
        Self::new(layout, mode, injections, Vec::new()).map(|mut p| {
            p.couplings = couplings;
            p
        })
    }

    pub fn files(&self) -> Arc<Universe> {
        Arc::clone(self.cache.files.as_ref().expect("built by new"))
    }

    /// Exported symbols of `file` in symbol-table order.
    pub fn symbols(&self, file: usize) -> Arc<Universe> {
        Arc::clone(&self.cache.symbols[file])
    }

    pub fn file_index(&self, element: &Element) -> Option<usize> {
        self.files().position(&Element::file(element.file.clone()))
    }

    pub fn site_element(&self, site: SymbolSite) -> Element {
        let f = &self.layout.files[site.file];
        let s = &f.symbols[site.symbol];
        Element::symbol(f.path.clone(), s.name.clone(), s.exported)
    }

    pub fn is_exported(&self, site: SymbolSite) -> bool {
        self.layout.files[site.file].symbols[site.symbol].exported
    }

    /// Files with a nonzero net contribution when taken alone.
    pub fn variable_files(&self) -> ElementSet {
        let files = self.files();
        let positions: Vec<usize> = (0..self.layout.files.len())
            .filter(|&f| {
                let single = files.from_positions([f]).expect("in range");
                super::metric::file_score(self, &single).is_positive_score()
            })
            .collect();
        files.from_positions(positions).expect("in range")
    }

    /// Symbols of `file` that are variable alone under symbol replacement.
    pub fn variable_symbols(&self, file: usize) -> ElementSet {
        let symbols = self.symbols(file);
        let positions: Vec<usize> = (0..symbols.len())
            .filter(|&p| {
                let single = symbols.from_positions([p]).expect("in range");
                super::metric::symbol_score(self, file, &single).is_positive_score()
            })
            .collect();
        symbols.from_positions(positions).expect("in range")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generate_independent_example() {
        let p = SyntheticProject::<f64>::generate(1, 4, 3, 2, InjectionMode::Independent).unwrap();
        let mags: Vec<f64> = p.injections.iter().map(|i| i.magnitude).collect();
        assert_eq!(mags, vec![0.5, 0.25]);
        assert_ne!(p.injections[0].site, p.injections[1].site);
        assert!(p.injections.iter().all(|i| p.is_exported(i.site)));
    }

    #[test]
    fn same_seed_same_project() {
        for mode in InjectionMode::ALL {
            let a = SyntheticProject::<f64>::generate(7, 6, 5, 3, mode).unwrap();
            let b = SyntheticProject::<f64>::generate(7, 6, 5, 3, mode).unwrap();
            assert_eq!(a.layout, b.layout);
            assert_eq!(a.injections, b.injections);
            assert_eq!(a.couplings, b.couplings);
        }
    }

    #[test]
    fn rejects_too_many_injections() {
        assert!(SyntheticProject::<f64>::generate(1, 2, 2, 5, InjectionMode::Independent).is_err());
        assert!(ProjectLayout::generate(1, 0, 3).is_err());
    }

    #[test]
    fn non_exported_injections_have_callers() {
        let p = SyntheticProject::<f64>::generate(3, 10, 10, 4, InjectionMode::NonExported).unwrap();
        for inj in &p.injections {
            assert!(!p.is_exported(inj.site));
            let caller = inj.caller.expect("symbol 0 is always exported");
            assert!(p.layout.files[inj.site.file].symbols[caller].exported);
        }
    }

    #[test]
    fn mode_names_round_trip() {
        for mode in InjectionMode::ALL {
            assert_eq!(mode.name().parse::<InjectionMode>().unwrap(), mode);
        }
    }
}
