use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Disjoint measured pairs plus the sites left unmeasured.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairingLayout {
    n_sites: usize,
    pairs: Vec<(usize, usize)>,
    unmeasured: Vec<usize>,
}

impl PairingLayout {
    /// Pairs `(1,2), (3,4), ..., (N-1,N)`.
    pub fn standard(n_sites: usize) -> Result<Self> {
        if n_sites == 0 || !n_sites.is_multiple_of(2) {
            return invalid(format!(
                "standard layout needs a positive even N, got {n_sites}"
            ));
        }
        Self::custom(
            n_sites,
            (1..n_sites).step_by(2).map(|a| (a, a + 1)).collect(),
        )
    }

    /// Pairs `(2,3), (4,5), ..., (N-2,N-1)` with sites 1 and N unmeasured.
    pub fn middle(n_sites: usize) -> Result<Self> {
        if n_sites < 2 || !n_sites.is_multiple_of(2) {
            return invalid(format!("middle layout needs an even N >= 2, got {n_sites}"));
        }
        Self::custom(
            n_sites,
            (2..n_sites - 1).step_by(2).map(|a| (a, a + 1)).collect(),
        )
    }

    pub fn custom(n_sites: usize, pairs: Vec<(usize, usize)>) -> Result<Self> {
        let mut used = vec![false; n_sites + 1];
        for &(a, b) in &pairs {
            for s in [a, b] {
                if s == 0 || s > n_sites {
                    return invalid(format!("site {s} outside 1..={n_sites}"));
                }
                if used[s] {
                    return invalid(format!("site {s} appears in two pairs"));
                }
                used[s] = true;
            }
        }
        let unmeasured = (1..=n_sites).filter(|&s| !used[s]).collect();
        Ok(Self {
            n_sites,
            pairs,
            unmeasured,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn unmeasured(&self) -> &[usize] {
        &self.unmeasured
    }

    /// Number of measured pairs `M`.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub(crate) fn masks(&self) -> Vec<u32> {
        self.pairs
            .iter()
            .map(|&(a, b)| (1u32 << (a - 1)) | (1u32 << (b - 1)))
            .collect()
    }

    pub(crate) fn check_sites(&self, n_sites: usize) -> Result<()> {
        if n_sites != self.n_sites {
            return invalid(format!(
                "layout is for {} sites but the state has {n_sites}",
                self.n_sites
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Singlet,
    Triplet,
}

/// One singlet/triplet result per measured pair, in layout order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OutcomeString(pub Vec<Outcome>);

impl OutcomeString {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn triplets(&self) -> usize {
        self.0.iter().filter(|o| **o == Outcome::Triplet).count()
    }

    /// String `i` of `2^len` with bit `p` set meaning a triplet on pair `p`.
    pub fn from_bits(bits: u64, len: usize) -> Self {
        Self(
            (0..len)
                .map(|p| {
                    if bits >> p & 1 == 1 {
                        Outcome::Triplet
                    } else {
                        Outcome::Singlet
                    }
                })
                .collect(),
        )
    }
}

impl FromStr for OutcomeString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                's' | 'S' => Ok(Outcome::Singlet),
                't' | 'T' => Ok(Outcome::Triplet),
                other => Err(Error::InvalidArgument(format!(
                    "outcome symbol {other:?} is not s or t"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

impl fmt::Display for OutcomeString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for o in &self.0 {
            f.write_str(match o {
                Outcome::Singlet => "s",
                Outcome::Triplet => "t",
            })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_and_middle() {
        let s = PairingLayout::standard(8).unwrap();
        assert_eq!(s.pairs(), &[(1, 2), (3, 4), (5, 6), (7, 8)]);
        assert!(s.unmeasured().is_empty());
        let m = PairingLayout::middle(8).unwrap();
        assert_eq!(m.pairs(), &[(2, 3), (4, 5), (6, 7)]);
        assert_eq!(m.unmeasured(), &[1, 8]);
        assert_eq!(PairingLayout::middle(4).unwrap().pairs(), &[(2, 3)]);
        assert!(PairingLayout::standard(7).is_err());
        assert!(PairingLayout::middle(5).is_err());
    }

    #[test]
    fn custom_rejects_overlap() {
        assert!(PairingLayout::custom(4, vec![(1, 2), (2, 3)]).is_err());
        assert!(PairingLayout::custom(4, vec![(1, 5)]).is_err());
        let l = PairingLayout::custom(5, vec![(1, 4)]).unwrap();
        assert_eq!(l.unmeasured(), &[2, 3, 5]);
    }

    #[test]
    fn outcome_strings() {
        let x: OutcomeString = "stts".parse().unwrap();
        assert_eq!(x.triplets(), 2);
        assert_eq!(x.to_string(), "stts");
        assert!("sx".parse::<OutcomeString>().is_err());
        assert_eq!(OutcomeString::from_bits(0b0110, 4), x);
    }
}
