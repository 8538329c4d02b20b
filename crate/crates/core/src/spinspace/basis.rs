use std::sync::Arc;

use crate::error::{capacity, invalid, Result};

/// Largest number of sites accepted by [`SpinBasis::new`].
pub const MAX_SITES: usize = 28;

/// Largest basis dimension that will be enumerated.
pub const MAX_DIM: usize = 1 << 25;

/// Bit-coded computational basis of `n_sites` spin-1/2 sites.
///
/// Site `s` (1-based) is bit `s - 1` of a code; a set bit is spin up. When a
/// sector is given, only codes with exactly `n_up` set bits are kept. Codes
/// are stored in increasing order and looked up in O(1) through a pair of
/// half-word tables.
#[derive(Debug, Clone)]
pub struct SpinBasis {
    n_sites: usize,
    sector: Option<usize>,
    states: Vec<u32>,
    lookup: Lookup,
}

#[derive(Debug, Clone)]
enum Lookup {
    Full,
    Split {
        lo_bits: u32,
        hi_offset: Vec<u32>,
        lo_rank: Vec<u32>,
    },
}

impl PartialEq for SpinBasis {
    fn eq(&self, other: &Self) -> bool {
        self.n_sites == other.n_sites && self.sector == other.sector
    }
}

impl Eq for SpinBasis {}

/// Binomial coefficient, saturating at `u64::MAX`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

impl SpinBasis {
    pub fn new(n_sites: usize, sector: Option<usize>) -> Result<Self> {
        if n_sites == 0 || n_sites > MAX_SITES {
            return invalid(format!("n_sites must be in 1..={MAX_SITES}, got {n_sites}"));
        }
        if let Some(n_up) = sector {
            if n_up > n_sites {
                return invalid(format!("sector n_up = {n_up} exceeds n_sites = {n_sites}"));
            }
        }
        let dim = match sector {
            Some(n_up) => binomial(n_sites, n_up),
            None => 1u64 << n_sites,
        };
        if dim > MAX_DIM as u64 {
            return capacity(format!(
                "basis dimension {dim} for N = {n_sites} exceeds the cap of {MAX_DIM}"
            ));
        }

        let (states, lookup) = match sector {
            None => ((0..(1u32 << n_sites)).collect(), Lookup::Full),
            Some(n_up) => {
                let states = fixed_weight_codes(n_sites, n_up, dim as usize);
                let lookup = split_tables(n_sites, n_up);
                (states, lookup)
            }
        };
        Ok(Self {
            n_sites,
            sector,
            states,
            lookup,
        })
    }

    pub fn full(n_sites: usize) -> Result<Arc<Self>> {
        Self::new(n_sites, None).map(Arc::new)
    }

    pub fn sector(n_sites: usize, n_up: usize) -> Result<Arc<Self>> {
        Self::new(n_sites, Some(n_up)).map(Arc::new)
    }

    #[inline]
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Number of up spins, if the basis is restricted to one sector.
    #[inline]
    pub fn n_up(&self) -> Option<usize> {
        self.sector
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    #[inline]
    pub fn states(&self) -> &[u32] {
        &self.states
    }

    #[inline]
    pub fn code(&self, index: usize) -> u32 {
        self.states[index]
    }

    /// Position of `code` in the basis, or `None` if the code is outside it.
    #[inline]
    pub fn index_of(&self, code: u32) -> Option<usize> {
        if code >> self.n_sites != 0 {
            return None;
        }
        match self.sector {
            Some(n_up) if code.count_ones() as usize != n_up => None,
            _ => Some(self.index_unchecked(code)),
        }
    }

    /// Position of a code known to belong to the basis.
    #[inline]
    pub fn index_unchecked(&self, code: u32) -> usize {
        match &self.lookup {
            Lookup::Full => code as usize,
            Lookup::Split {
                lo_bits,
                hi_offset,
                lo_rank,
            } => {
                let lo = code & ((1u32 << lo_bits) - 1);
                let hi = code >> lo_bits;
                (hi_offset[hi as usize] + lo_rank[lo as usize]) as usize
            }
        }
    }

    /// Bit mask with one bit per site.
    #[inline]
    pub fn all_sites_mask(&self) -> u32 {
        if self.n_sites == 32 {
            u32::MAX
        } else {
            (1u32 << self.n_sites) - 1
        }
    }
}

/// All `n`-bit codes with `k` set bits, ascending (Gosper's hack).
fn fixed_weight_codes(n: usize, k: usize, dim: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(dim);
    if k == 0 {
        out.push(0);
        return out;
    }
    let limit = 1u64 << n;
    let mut c: u64 = (1u64 << k) - 1;
    while c < limit {
        out.push(c as u32);
        let u = c & c.wrapping_neg();
        let v = c + u;
        c = v + (((v ^ c) / u) >> 2);
    }
    out
}

fn split_tables(n: usize, n_up: usize) -> Lookup {
    let lo_bits = (n / 2) as u32;
    let hi_bits = n as u32 - lo_bits;

    let mut lo_rank = vec![0u32; 1 << lo_bits];
    let mut seen = vec![0u32; lo_bits as usize + 1];
    for (lo, rank) in lo_rank.iter_mut().enumerate() {
        let w = (lo as u32).count_ones() as usize;
        *rank = seen[w];
        seen[w] += 1;
    }

    let mut hi_offset = vec![0u32; 1 << hi_bits];
    let mut running: u64 = 0;
    for (hi, offset) in hi_offset.iter_mut().enumerate() {
        *offset = running as u32;
        let w = (hi as u32).count_ones() as usize;
        if w <= n_up && n_up - w <= lo_bits as usize {
            running += binomial(lo_bits as usize, n_up - w);
        }
    }

    Lookup::Split {
        lo_bits,
        hi_offset,
        lo_rank,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_sites_full() {
        let b = SpinBasis::new(2, None).unwrap();
        assert_eq!(b.states(), &[0b00, 0b01, 0b10, 0b11]);
    }

    #[test]
    fn four_sites_half_filling() {
        let b = SpinBasis::new(4, Some(2)).unwrap();
        assert_eq!(b.dim(), 6);
        assert!(b.states().iter().all(|c| c.count_ones() == 2));
    }

    #[test]
    fn twenty_four_sites_sector_dimension() {
        // C(24, 12) by the multiplicative formula in u128, independent of `binomial`
        let mut c: u128 = 1;
        for i in 0..12u128 {
            c = c * (24 - i) / (i + 1);
        }
        assert_eq!(c, 2_704_156);
        let b = SpinBasis::new(24, Some(12)).unwrap();
        assert_eq!(b.dim() as u128, c);
    }

    #[test]
    fn lookup_inverts_states() {
        for n in 1..=12 {
            for k in 0..=n {
                let b = SpinBasis::new(n, Some(k)).unwrap();
                assert!(b.states().windows(2).all(|w| w[0] < w[1]));
                for (i, &c) in b.states().iter().enumerate() {
                    assert_eq!(b.index_of(c), Some(i));
                }
            }
        }
    }

    #[test]
    fn foreign_codes_are_rejected() {
        let b = SpinBasis::new(6, Some(3)).unwrap();
        assert_eq!(b.index_of(0b000111), Some(0));
        assert_eq!(b.index_of(0b001111), None);
        assert_eq!(b.index_of(1 << 7), None);
    }

    #[test]
    fn argument_and_capacity_errors() {
        assert!(matches!(
            SpinBasis::new(0, None),
            Err(crate::Error::InvalidArgument(_))
        ));
        assert!(matches!(
            SpinBasis::new(4, Some(5)),
            Err(crate::Error::InvalidArgument(_))
        ));
        assert!(matches!(
            SpinBasis::new(28, None),
            Err(crate::Error::Capacity(_))
        ));
    }

    #[test]
    fn binomial_matches_pascal() {
        let mut row = vec![1u64];
        for n in 1..=30 {
            let mut next = vec![1u64; n + 1];
            for k in 1..n {
                next[k] = row[k - 1] + row[k];
            }
            row = next;
            for (k, &v) in row.iter().enumerate() {
                assert_eq!(binomial(n, k), v);
            }
        }
    }
}
