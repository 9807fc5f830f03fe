//! Excitation-number sectors as sorted bitmask bases.
//!
//! Site `i` (1-based) occupies bit `i - 1`; a set bit is one excitation.
//! Textual kets render site 1 leftmost, so `"110000"` has sites 1 and 2
//! excited. All matrices in the crate index states by their position in the
//! ascending-sorted mask list of a [`SubspaceBasis`].

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Largest supported chain length.
pub const MAX_SITES: usize = 24;

/// Basis state of the chain, one bit per site.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct BasisMask(pub u32);

impl BasisMask {
    pub const VACUUM: BasisMask = BasisMask(0);

    /// Mask with the given 1-based sites excited.
    pub fn from_sites(sites: &[usize]) -> BasisMask {
        let mut bits = 0u32;
        for &s in sites {
            bits |= 1 << (s - 1);
        }
        BasisMask(bits)
    }

    pub fn has_site(self, site: usize) -> bool {
        self.0 >> (site - 1) & 1 == 1
    }

    pub fn with_site(self, site: usize) -> BasisMask {
        BasisMask(self.0 | 1 << (site - 1))
    }

    pub fn without_site(self, site: usize) -> BasisMask {
        BasisMask(self.0 & !(1 << (site - 1)))
    }

    pub fn flip_site(self, site: usize) -> BasisMask {
        BasisMask(self.0 ^ 1 << (site - 1))
    }

    /// Number of excitations.
    pub fn excitations(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Number of nearest-neighbor pairs of excited sites.
    pub fn adjacent_pairs(self) -> usize {
        (self.0 & self.0 >> 1).count_ones() as usize
    }

    /// Parse a ket string such as `"110000"` (site 1 leftmost).
    /// Returns the mask together with the implied chain length.
    pub fn parse_ket(s: &str) -> Result<(BasisMask, usize)> {
        let n = s.len();
        if n == 0 || n > MAX_SITES {
            return Err(Error::domain(format!(
                "ket must have between 1 and {MAX_SITES} sites, got \"{s}\""
            )));
        }
        let mut bits = 0u32;
        for (pos, ch) in s.chars().enumerate() {
            match ch {
                '1' => bits |= 1 << pos,
                '0' => {}
                _ => {
                    return Err(Error::domain(format!(
                        "ket may contain only '0'/'1', got \"{s}\""
                    )))
                }
            }
        }
        Ok((BasisMask(bits), n))
    }

    /// Render as a ket string with site 1 leftmost.
    pub fn to_ket(self, n_sites: usize) -> String {
        (1..=n_sites)
            .map(|s| if self.has_site(s) { '1' } else { '0' })
            .collect()
    }
}

/// Reflect a mask through the chain center: site `i` maps to site `N + 1 - i`.
pub fn mirror_mask(m: BasisMask, n_sites: usize) -> BasisMask {
    BasisMask(m.0.reverse_bits() >> (32 - n_sites))
}

/// Ordered basis of one excitation-number sector.
#[derive(Clone, Debug)]
pub struct SubspaceBasis {
    pub n_sites: usize,
    pub n_exc: usize,
    masks: Vec<BasisMask>,
    index: HashMap<u32, usize>,
}

impl SubspaceBasis {
    /// Enumerate all masks of `n_sites` bits with exactly `n_exc` set,
    /// ascending.
    pub fn enumerate(n_sites: usize, n_exc: usize) -> Result<SubspaceBasis> {
        if n_sites > MAX_SITES {
            return Err(Error::domain(format!(
                "n_sites = {n_sites} exceeds the supported maximum {MAX_SITES}"
            )));
        }
        if n_exc > n_sites {
            return Err(Error::domain(format!(
                "cannot place {n_exc} excitations on {n_sites} sites"
            )));
        }
        let mut masks = Vec::new();
        if n_exc == 0 {
            masks.push(BasisMask::VACUUM);
        } else {
            // Gosper's hack walks same-popcount masks in ascending order.
            let mut m: u32 = (1 << n_exc) - 1;
            let limit: u32 = if n_sites == 32 { u32::MAX } else { 1 << n_sites };
            while m < limit {
                masks.push(BasisMask(m));
                let c = m & m.wrapping_neg();
                let r = m + c;
                if c == 0 || r >= limit {
                    break;
                }
                m = ((r ^ m) >> (2 + c.trailing_zeros())) | r;
            }
        }
        let index = masks.iter().enumerate().map(|(i, m)| (m.0, i)).collect();
        Ok(SubspaceBasis {
            n_sites,
            n_exc,
            masks,
            index,
        })
    }

    pub fn dim(&self) -> usize {
        self.masks.len()
    }

    pub fn masks(&self) -> &[BasisMask] {
        &self.masks
    }

    pub fn mask(&self, idx: usize) -> BasisMask {
        self.masks[idx]
    }

    pub fn index_of(&self, m: BasisMask) -> Option<usize> {
        self.index.get(&m.0).copied()
    }
}

/// Binomial coefficient, used for basis-size checks.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerate_single_excitation() {
        let b = SubspaceBasis::enumerate(4, 1).unwrap();
        let got: Vec<u32> = b.masks().iter().map(|m| m.0).collect();
        assert_eq!(got, vec![0b0001, 0b0010, 0b0100, 0b1000]);
    }

    #[test]
    fn enumerate_counts_match_binomial() {
        assert_eq!(SubspaceBasis::enumerate(6, 2).unwrap().dim(), 15);
        assert_eq!(SubspaceBasis::enumerate(4, 0).unwrap().masks(), &[BasisMask::VACUUM]);
        for n in 2..=10 {
            for k in 0..=n {
                assert_eq!(SubspaceBasis::enumerate(n, k).unwrap().dim(), binomial(n, k));
            }
        }
    }

    #[test]
    fn enumerate_rejects_overfull_sector() {
        assert!(SubspaceBasis::enumerate(4, 5).is_err());
        assert!(SubspaceBasis::enumerate(25, 1).is_err());
    }

    #[test]
    fn index_inverts_masks() {
        let b = SubspaceBasis::enumerate(8, 3).unwrap();
        for (i, &m) in b.masks().iter().enumerate() {
            assert_eq!(b.index_of(m), Some(i));
        }
        assert!(b.index_of(BasisMask(0b11)).is_none());
    }

    #[test]
    fn mirror_examples() {
        let (m, n) = BasisMask::parse_ket("110000").unwrap();
        assert_eq!(mirror_mask(m, n).to_ket(n), "000011");
        let (m, n) = BasisMask::parse_ket("010001").unwrap();
        assert_eq!(mirror_mask(m, n).to_ket(n), "100010");
        let (m, n) = BasisMask::parse_ket("100001").unwrap();
        assert_eq!(mirror_mask(m, n), m);
    }

    #[test]
    fn ket_round_trip() {
        let (m, n) = BasisMask::parse_ket("101100").unwrap();
        assert_eq!(n, 6);
        assert!(m.has_site(1) && m.has_site(3) && m.has_site(4));
        assert_eq!(m.to_ket(6), "101100");
        assert!(BasisMask::parse_ket("10201").is_err());
        assert!(BasisMask::parse_ket("").is_err());
    }

    #[test]
    fn adjacent_pair_counting() {
        assert_eq!(BasisMask::parse_ket("110000").unwrap().0.adjacent_pairs(), 1);
        assert_eq!(BasisMask::parse_ket("101000").unwrap().0.adjacent_pairs(), 0);
        assert_eq!(BasisMask::parse_ket("111000").unwrap().0.adjacent_pairs(), 2);
    }
}
