//! Symbolic configuration spaces over `[0,N)` and their coordinatewise order.
//!
//! Symbols are integer-coded so that the partial order `x <= y` is just
//! `x_i <= y_i` on codes. The three alphabets used in the crate are
//!
//! | alphabet | symbols | codes |
//! |----------|---------|-------|
//! | spins `U` | `-1, +1` | `-1, +1` |
//! | `A` | `-1~, -1, +1, +1~` | `-2, -1, +1, +2` |
//! | `B` | `-1~, 0, +1~` | `-1, 0, +1` |

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Alphabet {
    symbols: Vec<i8>,
}

impl Alphabet {
    /// Builds an alphabet from distinct codes; the order is the integer order.
    pub fn new(mut symbols: Vec<i8>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::arg("alphabet must be nonempty"));
        }
        symbols.sort_unstable();
        if symbols.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::arg("alphabet symbols must be distinct"));
        }
        Ok(Alphabet { symbols })
    }

    pub fn spins() -> Self {
        Alphabet { symbols: vec![-1, 1] }
    }

    /// The four-symbol alphabet `{-1~, -1, +1, +1~}`.
    pub fn tilde_spins() -> Self {
        Alphabet { symbols: vec![-2, -1, 1, 2] }
    }

    /// The three-symbol factor alphabet `{-1~, 0, +1~}`.
    pub fn factor() -> Self {
        Alphabet { symbols: vec![-1, 0, 1] }
    }

    pub fn symbols(&self) -> &[i8] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn contains(&self, s: i8) -> bool {
        self.symbols.binary_search(&s).is_ok()
    }

    /// Position of `s` in the ordered alphabet.
    pub fn index_of(&self, s: i8) -> Option<usize> {
        self.symbols.binary_search(&s).ok()
    }

    pub fn top(&self) -> i8 {
        *self.symbols.last().unwrap()
    }

    pub fn bottom(&self) -> i8 {
        self.symbols[0]
    }
}

/// Sign of a constant boundary or tail completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.value() as f64
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Sign::Plus => "plus",
            Sign::Minus => "minus",
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// How spins on `[N, inf)` are resolved.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryCondition {
    AllPlus,
    AllMinus,
    /// Tail terms are omitted.
    Free,
    /// Explicit tail spins `u_N, u_{N+1}, ...`; everything past the vector
    /// (or past the potential's truncation radius) is dropped.
    Fixed(Vec<i8>),
}

impl BoundaryCondition {
    pub fn from_sign(sign: Sign) -> Self {
        match sign {
            Sign::Plus => BoundaryCondition::AllPlus,
            Sign::Minus => BoundaryCondition::AllMinus,
        }
    }

    /// `+1`, `-1` or `0` for the deterministic boundaries.
    pub fn constant_sign(&self) -> Option<f64> {
        match self {
            BoundaryCondition::AllPlus => Some(1.0),
            BoundaryCondition::AllMinus => Some(-1.0),
            BoundaryCondition::Free => Some(0.0),
            BoundaryCondition::Fixed(_) => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            BoundaryCondition::AllPlus => "plus",
            BoundaryCondition::AllMinus => "minus",
            BoundaryCondition::Free => "free",
            BoundaryCondition::Fixed(_) => "fixed",
        }
    }
}

/// A configuration on `[0,N)` over a homogeneous alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Window {
    alphabet: Alphabet,
    values: Vec<i8>,
}

impl Window {
    pub fn new(alphabet: Alphabet, values: Vec<i8>) -> Result<Self> {
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !alphabet.contains(**v)) {
            return Err(Error::arg(format!("symbol {v} at site {i} not in alphabet")));
        }
        Ok(Window { alphabet, values })
    }

    pub fn spins(values: Vec<i8>) -> Result<Self> {
        Window::new(Alphabet::spins(), values)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<i8> {
        self.values
    }
}

/// `x ~_n y`: the windows agree on `[0,n)`.
pub fn cylinder_match(x: &Window, y: &Window, n: usize) -> Result<bool> {
    if n > x.len() || n > y.len() {
        return Err(Error::arg(format!(
            "prefix length {n} exceeds window lengths {} / {}",
            x.len(),
            y.len()
        )));
    }
    Ok(x.values[..n] == y.values[..n])
}

/// Coordinatewise order `x_i <= y_i` on integer codes.
pub fn config_leq(x: &Window, y: &Window) -> Result<bool> {
    if x.len() != y.len() || x.alphabet != y.alphabet {
        return Err(Error::arg("config_leq needs windows of equal shape and alphabet"));
    }
    Ok(x.values.iter().zip(&y.values).all(|(a, b)| a <= b))
}

/// Left shift: drops coordinate 0.
pub fn shift(x: &Window) -> Result<Window> {
    if x.is_empty() {
        return Err(Error::arg("cannot shift an empty window"));
    }
    Ok(Window {
        alphabet: x.alphabet.clone(),
        values: x.values[1..].to_vec(),
    })
}
