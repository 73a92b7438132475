use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// A point between instructions, addressed by a path of indices.
///
/// Even positions index into an instruction sequence; odd positions select
/// a branch of the instruction at the preceding index (`1` for a `then`
/// branch or a loop body, `2` for an `else` branch).
///
/// The derived ordering is lexicographic with proper prefixes first, which
/// is exactly the usual order on locations: `a < b` iff the first differing
/// index of `a` is smaller, or `a` is a proper prefix of `b`.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Location(pub Vec<usize>);

impl Location {
    pub fn root() -> Self {
        Location(Vec::new())
    }

    pub fn new(path: impl Into<Vec<usize>>) -> Self {
        Location(path.into())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn digits(&self) -> &[usize] {
        &self.0
    }

    /// `self.i`
    pub fn child(&self, i: usize) -> Location {
        let mut v = self.0.clone();
        v.push(i);
        Location(v)
    }

    /// `self.other`
    pub fn concat(&self, other: &Location) -> Location {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Location(v)
    }

    /// True when `self` is a (not necessarily proper) prefix of `other`.
    pub fn is_prefix_of(&self, other: &Location) -> bool {
        other.0.starts_with(&self.0)
    }

    /// The location right after the instruction addressed by `self`.
    pub fn successor(&self) -> Option<Location> {
        let mut v = self.0.clone();
        let last = v.last_mut()?;
        *last += 1;
        Some(Location(v))
    }
}

/// Compares two locations under the usual order.
pub fn location_order(a: &Location, b: &Location) -> Ordering {
    a.cmp(b)
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl FromStr for Location {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() || s == "ε" {
            return Ok(Location::root());
        }
        s.split('.')
            .map(str::parse)
            .collect::<Result<Vec<_>, _>>()
            .map(Location)
    }
}

/// Shorthand for tests and examples: `loc!(2, 1, 0)`.
#[macro_export]
macro_rules! loc {
    ($($d:expr),* $(,)?) => {
        $crate::lang::Location::new(vec![$($d),*])
    };
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_examples() {
        assert_eq!(location_order(&loc!(1), &loc!(2, 1, 0)), Ordering::Less);
        assert_eq!(location_order(&loc!(2), &loc!(2, 1, 0)), Ordering::Less);
        assert_eq!(location_order(&loc!(2, 1, 1), &loc!(2, 1, 1)), Ordering::Equal);
        assert_eq!(location_order(&loc!(3), &loc!(2, 1, 2)), Ordering::Greater);
    }

    #[test]
    fn display_and_parse() {
        let l = loc!(2, 1, 0);
        assert_eq!(l.to_string(), "2.1.0");
        assert_eq!("2.1.0".parse::<Location>().unwrap(), l);
        assert_eq!(Location::root().to_string(), "ε");
    }

    #[test]
    fn successor_bumps_last_digit() {
        assert_eq!(loc!(2, 1, 0).successor(), Some(loc!(2, 1, 1)));
        assert_eq!(Location::root().successor(), None);
    }
}
