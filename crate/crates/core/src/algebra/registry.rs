use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, LazyLock};

use super::AlgebraError;

/// Index of a symbol inside a [`VarRegistry`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub u16);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Ordered, immutable list of symbol names.
///
/// The position of a name is its variable index and also its rank in the
/// lexicographic tie-break of the graded monomial order: earlier names are
/// "bigger".
#[derive(Debug, PartialEq, Eq)]
pub struct VarRegistry {
    names: Vec<String>,
    index: HashMap<String, Var>,
}

/// Every symbol used by the catalog, in the fixed global order.
pub const STANDARD_SYMBOLS: &[&str] = &[
    "x", "y", "z", "w", "q1", "p1", "q2", "p2", "x1", "y1", "z1", "w1", "x2", "y2", "z2", "w2",
    "x3", "y3", "z3", "w3", "t", "s", "alpha1", "alpha2", "alpha3", "a", "a1", "a2", "a3",
];

static STANDARD: LazyLock<Arc<VarRegistry>> = LazyLock::new(|| {
    Arc::new(VarRegistry::new(STANDARD_SYMBOLS).expect("standard names are unique"))
});

impl VarRegistry {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self, AlgebraError> {
        let mut index = HashMap::with_capacity(names.len());
        let mut owned = Vec::with_capacity(names.len());
        if names.len() > u16::MAX as usize {
            return Err(AlgebraError::Registry("too many symbols".into()));
        }
        for (i, n) in names.iter().enumerate() {
            let n = n.as_ref();
            if !is_symbol(n) {
                return Err(AlgebraError::Registry(format!("invalid symbol name `{n}`")));
            }
            if index.insert(n.to_string(), Var(i as u16)).is_some() {
                return Err(AlgebraError::Registry(format!("duplicate symbol `{n}`")));
            }
            owned.push(n.to_string());
        }
        Ok(Self {
            names: owned,
            index,
        })
    }

    /// The shared registry holding all phase, chart, time, parameter and
    /// family-constant symbols.
    pub fn standard() -> Arc<VarRegistry> {
        STANDARD.clone()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn lookup(&self, name: &str) -> Option<Var> {
        self.index.get(name).copied()
    }

    pub fn var(&self, name: &str) -> Result<Var, AlgebraError> {
        self.lookup(name)
            .ok_or_else(|| AlgebraError::UnknownSymbol(name.to_string()))
    }

    pub fn name(&self, v: Var) -> &str {
        &self.names[v.index()]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

impl fmt::Display for VarRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.names.join(", "))
    }
}

pub(crate) fn is_symbol(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_registry_holds_every_symbol() {
        let reg = VarRegistry::standard();
        for name in ["x", "q2", "w3", "t", "s", "alpha3", "a", "a3"] {
            assert!(reg.lookup(name).is_some(), "{name}");
        }
        assert_eq!(reg.name(reg.var("alpha2").unwrap()), "alpha2");
    }

    #[test]
    fn duplicates_and_bad_names_rejected() {
        assert!(VarRegistry::new(&["x", "x"]).is_err());
        assert!(VarRegistry::new(&["1x"]).is_err());
        assert!(matches!(
            VarRegistry::standard().var("beta"),
            Err(AlgebraError::UnknownSymbol(_))
        ));
    }
}
