//! Input sequences. Symbols are small nonnegative integers so that tests can
//! use tiny alphabets; ordinary byte strings embed directly.

/// A sequence of symbols drawn from `[0, b)` for the alphabet size `b` the
/// parser is configured with.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Text {
    symbols: Vec<u64>,
}

impl Text {
    pub fn new(symbols: Vec<u64>) -> Self {
        Text { symbols }
    }

    pub fn from_bytes(bytes: &[u8]) -> Self {
        Text { symbols: bytes.iter().map(|&b| b as u64).collect() }
    }

    pub fn from_str_bytes(s: &str) -> Self {
        Self::from_bytes(s.as_bytes())
    }

    pub fn symbols(&self) -> &[u64] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

impl From<&str> for Text {
    fn from(s: &str) -> Self {
        Text::from_str_bytes(s)
    }
}

impl From<&[u8]> for Text {
    fn from(b: &[u8]) -> Self {
        Text::from_bytes(b)
    }
}
