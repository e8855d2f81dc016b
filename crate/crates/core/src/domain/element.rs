use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Serialize, Serializer};

use super::DomainError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    File,
    Symbol,
}

/// A function symbol inside an object file.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Symbol {
    /// Linker-level (mangled) name.
    pub name: String,
    /// Globally exported strong definition.
    pub exported: bool,
    /// Demangled name, display only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demangled: Option<String>,
}

/// A unit of blame: a source file, or one function symbol within it.
///
/// The `symbol` field is present exactly when the element is a symbol, so the
/// kind is derived rather than stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Element {
    pub file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol: Option<Symbol>,
}

impl Element {
    pub fn file(path: impl Into<String>) -> Self {
        Element {
            file: path.into(),
            symbol: None,
        }
    }

    pub fn symbol(file: impl Into<String>, name: impl Into<String>, exported: bool) -> Self {
        Element {
            file: file.into(),
            symbol: Some(Symbol {
                name: name.into(),
                exported,
                demangled: None,
            }),
        }
    }

    pub fn with_demangled(mut self, demangled: impl Into<String>) -> Self {
        if let Some(sym) = self.symbol.as_mut() {
            sym.demangled = Some(demangled.into());
        }
        self
    }

    pub fn kind(&self) -> ElementKind {
        if self.symbol.is_some() {
            ElementKind::Symbol
        } else {
            ElementKind::File
        }
    }

    pub fn symbol_name(&self) -> Option<&str> {
        self.symbol.as_ref().map(|s| s.name.as_str())
    }

    /// Human-facing label: the demangled name when known.
    pub fn label(&self) -> String {
        match &self.symbol {
            None => self.file.clone(),
            Some(s) => {
                let name = s.demangled.as_deref().unwrap_or(&s.name);
                format!("{}::{}", self.file, name)
            }
        }
    }

    pub(crate) fn validate(&self) -> Result<(), DomainError> {
        if self.file.is_empty() {
            return Err(DomainError::InvalidElement("empty file path".into()));
        }
        if std::path::Path::new(&self.file).is_absolute() {
            return Err(DomainError::InvalidElement(format!(
                "file path must be project-relative: {}",
                self.file
            )));
        }
        if let Some(s) = &self.symbol {
            if s.name.is_empty() {
                return Err(DomainError::InvalidElement(format!(
                    "empty symbol name in {}",
                    self.file
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// The full ordered list of elements one search runs over (a project
/// manifest's files, or one object file's symbol table). Its order is the
/// canonical order of every [`ElementSet`] drawn from it.
#[derive(Debug)]
pub struct Universe {
    elements: Vec<Element>,
    index: HashMap<Element, usize>,
}

impl Universe {
    pub fn new(elements: impl IntoIterator<Item = Element>) -> Result<Arc<Self>, DomainError> {
        let mut list = Vec::new();
        let mut index = HashMap::new();
        for e in elements {
            e.validate()?;
            if index.contains_key(&e) {
                return Err(DomainError::DuplicateElement(e.label()));
            }
            index.insert(e.clone(), list.len());
            list.push(e);
        }
        Ok(Arc::new(Universe {
            elements: list,
            index,
        }))
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn position(&self, e: &Element) -> Option<usize> {
        self.index.get(e).copied()
    }

    /// Every element of the universe.
    pub fn full(self: &Arc<Self>) -> ElementSet {
        ElementSet {
            universe: Arc::clone(self),
            members: (0..self.elements.len()).collect(),
        }
    }

    pub fn empty(self: &Arc<Self>) -> ElementSet {
        ElementSet {
            universe: Arc::clone(self),
            members: Vec::new(),
        }
    }

    /// Deduplicate and sort `elements` into canonical order.
    pub fn canonicalize<'a, I>(self: &Arc<Self>, elements: I) -> Result<ElementSet, DomainError>
    where
        I: IntoIterator<Item = &'a Element>,
    {
        let mut members = elements
            .into_iter()
            .map(|e| {
                self.position(e)
                    .ok_or_else(|| DomainError::NotInManifest(e.label()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        members.sort_unstable();
        members.dedup();
        Ok(ElementSet {
            universe: Arc::clone(self),
            members,
        })
    }

    /// Set from canonical positions. Out-of-range positions are an error.
    pub fn from_positions(
        self: &Arc<Self>,
        positions: impl IntoIterator<Item = usize>,
    ) -> Result<ElementSet, DomainError> {
        let mut members: Vec<usize> = positions.into_iter().collect();
        if let Some(&bad) = members.iter().find(|&&p| p >= self.len()) {
            return Err(DomainError::NotInManifest(format!("position {bad}")));
        }
        members.sort_unstable();
        members.dedup();
        Ok(ElementSet {
            universe: Arc::clone(self),
            members,
        })
    }
}

/// A duplicate-free subset of a [`Universe`], always in canonical order.
#[derive(Clone)]
pub struct ElementSet {
    universe: Arc<Universe>,
    members: Vec<usize>,
}

impl ElementSet {
    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Canonical positions of the members, ascending.
    pub fn positions(&self) -> &[usize] {
        &self.members
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &Element> + '_ {
        self.members.iter().map(move |&i| &self.universe.elements[i])
    }

    pub fn to_vec(&self) -> Vec<Element> {
        self.iter().cloned().collect()
    }

    pub fn first(&self) -> Option<&Element> {
        self.members.first().map(|&i| &self.universe.elements[i])
    }

    pub fn contains(&self, e: &Element) -> bool {
        self.universe
            .position(e)
            .is_some_and(|p| self.members.binary_search(&p).is_ok())
    }

    fn same_universe(&self, other: &ElementSet) -> Result<(), DomainError> {
        if Arc::ptr_eq(&self.universe, &other.universe)
            || self.universe.elements == other.universe.elements
        {
            Ok(())
        } else {
            Err(DomainError::UniverseMismatch)
        }
    }

    pub fn union(&self, other: &ElementSet) -> Result<ElementSet, DomainError> {
        self.same_universe(other)?;
        let (a, b) = (&self.members, &other.members);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Ok(ElementSet {
            universe: Arc::clone(&self.universe),
            members: out,
        })
    }

    pub fn difference(&self, other: &ElementSet) -> Result<ElementSet, DomainError> {
        self.same_universe(other)?;
        let members = self
            .members
            .iter()
            .copied()
            .filter(|p| other.members.binary_search(p).is_err())
            .collect();
        Ok(ElementSet {
            universe: Arc::clone(&self.universe),
            members,
        })
    }

    pub fn is_subset(&self, other: &ElementSet) -> bool {
        self.same_universe(other).is_ok()
            && self
                .members
                .iter()
                .all(|p| other.members.binary_search(p).is_ok())
    }

    /// Split at `mid`: the first `mid` members and the rest.
    pub fn split_at(&self, mid: usize) -> (ElementSet, ElementSet) {
        let mid = mid.min(self.members.len());
        let make = |m: &[usize]| ElementSet {
            universe: Arc::clone(&self.universe),
            members: m.to_vec(),
        };
        (make(&self.members[..mid]), make(&self.members[mid..]))
    }

    /// Singleton set holding the member at canonical position `pos`.
    pub fn singleton(&self, pos: usize) -> ElementSet {
        ElementSet {
            universe: Arc::clone(&self.universe),
            members: vec![pos],
        }
    }

    /// Bit mask of members, for universes of at most 64 elements.
    pub fn mask(&self) -> Option<u64> {
        if self.universe.len() > 64 {
            return None;
        }
        Some(self.members.iter().fold(0u64, |m, &p| m | (1u64 << p)))
    }
}

impl PartialEq for ElementSet {
    fn eq(&self, other: &Self) -> bool {
        self.members == other.members && self.same_universe(other).is_ok()
    }
}

impl Eq for ElementSet {}

impl Hash for ElementSet {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.members.hash(state);
    }
}

impl fmt::Debug for ElementSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.iter().map(|e| e.label())).finish()
    }
}

impl Serialize for ElementSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}
