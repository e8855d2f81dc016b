use std::sync::Arc;

use super::project::{SymbolSite, SyntheticProject};
use crate::bisect::{SymbolLevel, SymbolSearch, TestFn};
use crate::domain::{ElementSet, TestScore};
use crate::Scalar;

/// Which universe a synthetic Test ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Granularity {
    Files,
    /// Exported symbols of one file; every other file stays at baseline.
    SymbolsOfFile(usize),
}

fn net_per_file<S: Scalar>(
    project: &SyntheticProject<S>,
    active: impl Fn(SymbolSite, Option<usize>) -> bool,
) -> S {
    let mut per_file = vec![S::zero(); project.layout.files.len()];
    for inj in &project.injections {
        if active(inj.site, inj.caller) {
            per_file[inj.site.file] = per_file[inj.site.file].clone() + inj.magnitude.clone();
        }
    }
    let mut total = per_file.into_iter().fold(S::zero(), |acc, v| acc + v.abs());
    for c in &project.couplings {
        if active(c.a, None) && active(c.b, None) {
            total = total + c.magnitude.abs();
        }
    }
    total
}

/// Score with the files in `set` taken from the candidate compilation.
pub fn file_score<S: Scalar>(project: &SyntheticProject<S>, set: &ElementSet) -> S {
    let chosen = set.positions();
    net_per_file(project, |site, _| chosen.binary_search(&site.file).is_ok())
}

/// Score with the exported symbols of `file` in `set` taken from the
/// candidate. A non-exported site is present through its caller.
pub fn symbol_score<S: Scalar>(project: &SyntheticProject<S>, file: usize, set: &ElementSet) -> S {
    let exported = project.layout.exported_in(file);
    let chosen: Vec<usize> = set.positions().iter().map(|&p| exported[p]).collect();
    net_per_file(project, |site, caller| {
        if site.file != file {
            return false;
        }
        let carrier = if project.is_exported(site) {
            Some(site.symbol)
        } else {
            caller
        };
        carrier.is_some_and(|s| chosen.contains(&s))
    })
}

pub fn make_test_fn<S: Scalar>(
    project: &Arc<SyntheticProject<S>>,
    granularity: Granularity,
) -> TestFn<'static, S> {
    let project = Arc::clone(project);
    match granularity {
        Granularity::Files => {
            TestFn::new(move |set: &ElementSet| TestScore::measured(file_score(&project, set)))
        }
        Granularity::SymbolsOfFile(file) => TestFn::new(move |set: &ElementSet| {
            TestScore::measured(symbol_score(&project, file, set))
        }),
    }
}

/// Symbol level below `file`, for the hierarchical searches.
pub fn symbol_search<S: Scalar>(
    project: &Arc<SyntheticProject<S>>,
    file: usize,
) -> SymbolSearch<'static, S> {
    SymbolSearch::Searchable(SymbolLevel {
        test: make_test_fn(project, Granularity::SymbolsOfFile(file)),
        symbols: project.symbols(file).full(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::project::{Coupling, Injection, InjectionMode, ProjectLayout};

    fn layout() -> ProjectLayout {
        let mut l = ProjectLayout::generate(0, 3, 3).unwrap();
        for f in &mut l.files {
            for s in &mut f.symbols {
                s.exported = true;
            }
        }
        l.files[1].symbols[2].exported = false;
        l
    }

    fn inj(file: usize, symbol: usize, magnitude: f64, caller: Option<usize>) -> Injection<f64> {
        Injection {
            site: SymbolSite { file, symbol },
            magnitude,
            caller,
        }
    }

    #[test]
    fn file_scores_add_across_files() {
        let p = Arc::new(
            SyntheticProject::new(
                layout(),
                InjectionMode::Independent,
                vec![inj(0, 1, 0.5, None), inj(2, 0, 0.25, None)],
                vec![],
            )
            .unwrap(),
        );
        let files = p.files();
        let mut t = make_test_fn(&p, Granularity::Files);
        assert_eq!(t.evaluate(&files.full()).unwrap(), 0.75);
        assert_eq!(t.evaluate(&files.from_positions([0]).unwrap()).unwrap(), 0.5);
        assert_eq!(t.evaluate(&files.from_positions([1]).unwrap()).unwrap(), 0.0);
        assert_eq!(p.variable_files().positions(), &[0, 2]);
    }

    #[test]
    fn cancellation_inside_a_file() {
        let p = SyntheticProject::new(
            layout(),
            InjectionMode::SubFileCancellation,
            vec![inj(0, 0, 0.5, None), inj(0, 1, -0.25, None)],
            vec![],
        )
        .unwrap();
        let files = p.files();
        assert_eq!(file_score(&p, &files.full()), 0.25);
        let syms = p.symbols(0);
        assert_eq!(symbol_score(&p, 0, &syms.from_positions([0]).unwrap()), 0.5);
        assert_eq!(symbol_score(&p, 0, &syms.from_positions([1]).unwrap()), 0.25);
        assert_eq!(symbol_score(&p, 0, &syms.full()), 0.25);
    }

    #[test]
    fn non_exported_site_is_carried_by_its_caller() {
        let p = SyntheticProject::new(
            layout(),
            InjectionMode::NonExported,
            vec![inj(1, 2, 0.5, Some(0))],
            vec![],
        )
        .unwrap();
        let syms = p.symbols(1);
        assert_eq!(syms.len(), 2);
        assert_eq!(symbol_score(&p, 1, &syms.from_positions([0]).unwrap()), 0.5);
        assert_eq!(symbol_score(&p, 1, &syms.from_positions([1]).unwrap()), 0.0);
        assert_eq!(p.variable_symbols(1).positions(), &[0]);
    }

    #[test]
    fn non_exported_without_caller_is_invisible_at_symbol_level() {
        let p = SyntheticProject::new(
            layout(),
            InjectionMode::NonExported,
            vec![inj(1, 2, 0.5, None)],
            vec![],
        )
        .unwrap();
        assert_eq!(file_score(&p, &p.files().full()), 0.5);
        assert_eq!(symbol_score(&p, 1, &p.symbols(1).full()), 0.0);
    }

    #[test]
    fn coupling_needs_both_files() {
        let p = SyntheticProject::new(layout(), InjectionMode::Coupled, vec![], vec![]).unwrap();
        let mut p = p;
        p.couplings.push(Coupling {
            a: SymbolSite { file: 0, symbol: 0 },
            b: SymbolSite { file: 2, symbol: 1 },
            magnitude: 0.5,
        });
        let files = p.files();
        assert_eq!(file_score(&p, &files.full()), 0.5);
        assert_eq!(file_score(&p, &files.from_positions([0]).unwrap()), 0.0);
        assert_eq!(file_score(&p, &files.from_positions([0, 2]).unwrap()), 0.5);
    }

    #[test]
    fn exact_rational_scores() {
        use num_rational::Rational64;
        let p = SyntheticProject::<Rational64>::generate(5, 6, 4, 4, InjectionMode::Independent)
            .unwrap();
        let total = file_score(&p, &p.files().full());
        assert_eq!(total, Rational64::new(15, 16));
    }
}
