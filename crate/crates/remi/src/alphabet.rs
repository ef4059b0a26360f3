use crate::error::{Error, Result};

/// Index of a symbol within an [`Alphabet`].
pub type Symbol = usize;

/// Name of the blank symbol emitted by unlabeled states.
pub const BLANK: &str = "_";

/// Finite set of event symbols shared by a labeled MDP and a reward machine.
///
/// Symbol order is part of the identity: canonicalization visits symbols in
/// declared order, so two alphabets with the same names in different orders
/// are distinct.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<String>,
    blank: Symbol,
}

impl Alphabet {
    /// Builds an alphabet from distinct, nonempty symbol names. The blank
    /// symbol `_` must be among them.
    pub fn new(symbols: Vec<String>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::InvalidAlphabet("no symbols".into()));
        }
        for (i, s) in symbols.iter().enumerate() {
            if s.is_empty() {
                return Err(Error::InvalidAlphabet(format!("symbol {i} is empty")));
            }
            if symbols[..i].contains(s) {
                return Err(Error::InvalidAlphabet(format!("duplicate symbol {s:?}")));
            }
        }
        let blank = symbols
            .iter()
            .position(|s| s == BLANK)
            .ok_or_else(|| Error::InvalidAlphabet(format!("missing blank symbol {BLANK:?}")))?;
        Ok(Self { symbols, blank })
    }

    /// Convenience constructor from string literals.
    pub fn from_names(names: &[&str]) -> Result<Self> {
        Self::new(names.iter().map(|s| s.to_string()).collect())
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Index of the blank symbol.
    pub fn blank(&self) -> Symbol {
        self.blank
    }

    pub fn index_of(&self, name: &str) -> Option<Symbol> {
        self.symbols.iter().position(|s| s == name)
    }

    /// Name of symbol `s`. Panics if out of range.
    pub fn name(&self, s: Symbol) -> &str {
        &self.symbols[s]
    }

    pub fn names(&self) -> &[String] {
        &self.symbols
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn declared_order_is_kept() {
        let a = Alphabet::from_names(&["_", "c", "o", "*"]).unwrap();
        assert_eq!(a.len(), 4);
        assert_eq!(a.blank(), 0);
        assert_eq!(a.index_of("o"), Some(2));
        assert_eq!(a.name(3), "*");
    }

    #[test]
    fn blank_may_sit_anywhere() {
        let a = Alphabet::from_names(&["x", "_", "y"]).unwrap();
        assert_eq!(a.blank(), 1);
    }

    #[test]
    fn rejects_duplicates_and_missing_blank() {
        assert!(Alphabet::from_names(&["_", "c", "c"]).is_err());
        assert!(Alphabet::from_names(&["a", "b"]).is_err());
        assert!(Alphabet::from_names(&[]).is_err());
        assert!(Alphabet::from_names(&["_", ""]).is_err());
    }
}
