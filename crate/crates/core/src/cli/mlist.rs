//! `--M` values: a single count, a range `a..b` or `a..b:step` (inclusive),
//! or a comma-separated mix of those.

use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MList(pub Vec<usize>);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MListError(String);

impl fmt::Display for MListError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for MListError {}

fn count(s: &str) -> Result<usize, MListError> {
    let n: usize = s.trim().parse().map_err(|_| MListError(format!("'{s}' is not a positive integer")))?;
    if n == 0 {
        return Err(MListError("M must be at least 1".into()));
    }
    Ok(n)
}

impl FromStr for MList {
    type Err = MListError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = Vec::new();
        for part in s.split(',') {
            match part.split_once("..") {
                None => out.push(count(part)?),
                Some((a, rest)) => {
                    let (b, step) = match rest.split_once(':') {
                        Some((b, step)) => (b, count(step)?),
                        None => (rest, 1),
                    };
                    let (a, b) = (count(a)?, count(b)?);
                    if b < a {
                        return Err(MListError(format!("empty range {part}")));
                    }
                    out.extend((a..=b).step_by(step));
                }
            }
        }
        Ok(MList(out))
    }
}

/// Flattens repeated flags, keeping first occurrences in order.
pub fn flatten(lists: &[MList]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    for m in lists.iter().flat_map(|l| l.0.iter()) {
        if !out.contains(m) {
            out.push(*m);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Vec<usize> {
        s.parse::<MList>().unwrap().0
    }

    #[test]
    fn forms() {
        assert_eq!(p("7"), vec![7]);
        assert_eq!(p("2..5"), vec![2, 3, 4, 5]);
        assert_eq!(p("10..100:10"), (1..=10).map(|i| 10 * i).collect::<Vec<_>>());
        assert_eq!(p("10..25:10"), vec![10, 20]);
        assert_eq!(p("2,6,10"), vec![2, 6, 10]);
        assert_eq!(p("1,4..6"), vec![1, 4, 5, 6]);
    }

    #[test]
    fn rejects() {
        for bad in ["", "0", "x", "5..2", "2..9:0", "-3", "1..", "2.5"] {
            assert!(bad.parse::<MList>().is_err(), "{bad}");
        }
    }

    #[test]
    fn flatten_dedups_in_order() {
        let lists = vec![MList(vec![6, 2]), MList(vec![2, 10])];
        assert_eq!(flatten(&lists), vec![6, 2, 10]);
    }
}
