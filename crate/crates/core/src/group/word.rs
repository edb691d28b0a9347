use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// A generator of the group: the stable letter `a`, or `b_i` with a
/// one-based index `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Generator {
    A,
    B(usize),
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::A => write!(f, "a"),
            Generator::B(i) => write!(f, "b{i}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Letter {
    pub generator: Generator,
    pub exponent: BigInt,
}

impl Letter {
    pub fn new(generator: Generator, exponent: impl Into<BigInt>) -> Self {
        Letter {
            generator,
            exponent: exponent.into(),
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponent.is_one() {
            write!(f, "{}", self.generator)
        } else {
            write!(f, "{}^{}", self.generator, self.exponent)
        }
    }
}

/// A run-length encoded word in the generators. Adjacent letters with the
/// same generator are merged and zero exponents dropped on every push.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    pub fn empty() -> Self {
        Word::default()
    }

    pub fn from_letters(letters: impl IntoIterator<Item = Letter>) -> Self {
        let mut w = Word::empty();
        for l in letters {
            w.push(l);
        }
        w
    }

    pub fn push(&mut self, letter: Letter) {
        if letter.exponent.is_zero() {
            return;
        }
        if let Some(last) = self.letters.last_mut() {
            if last.generator == letter.generator {
                last.exponent += letter.exponent;
                if last.exponent.is_zero() {
                    self.letters.pop();
                }
                return;
            }
        }
        self.letters.push(letter);
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut w = self.clone();
        for l in &other.letters {
            w.push(l.clone());
        }
        w
    }

    pub fn inverse(&self) -> Word {
        Word::from_letters(
            self.letters
                .iter()
                .rev()
                .map(|l| Letter::new(l.generator, -l.exponent.clone())),
        )
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Largest `b` index used, or 0 for words in `a` alone.
    pub fn max_b_index(&self) -> usize {
        self.letters
            .iter()
            .filter_map(|l| match l.generator {
                Generator::B(i) => Some(i),
                Generator::A => None,
            })
            .max()
            .unwrap_or(0)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.letters.iter().map(|l| l.to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

impl FromStr for Word {
    type Err = Error;

    /// Parses whitespace-separated tokens such as `a`, `a^-1`, `b1^3`, `b2^-2`.
    /// A bare `b` is read as `b1`.
    fn from_str(s: &str) -> Result<Self> {
        let mut w = Word::empty();
        for tok in s.split_whitespace() {
            w.push(parse_token(tok)?);
        }
        Ok(w)
    }
}

fn parse_token(tok: &str) -> Result<Letter> {
    let (base, exp) = match tok.split_once('^') {
        Some((b, e)) => {
            let e: BigInt = e
                .parse()
                .map_err(|_| Error::Parse(format!("bad exponent in `{tok}`")))?;
            (b, e)
        }
        None => (tok, BigInt::one()),
    };
    let generator = if base == "a" {
        Generator::A
    } else if let Some(idx) = base.strip_prefix('b') {
        let i = if idx.is_empty() {
            1
        } else {
            idx.parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad generator index in `{tok}`")))?
        };
        if i == 0 {
            return Err(Error::Parse(format!("generator indices start at 1: `{tok}`")));
        }
        Generator::B(i)
    } else {
        return Err(Error::Parse(format!("unknown generator `{tok}`")));
    };
    Ok(Letter::new(generator, exp))
}
