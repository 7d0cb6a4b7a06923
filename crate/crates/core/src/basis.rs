//! Fixed-magnetization sector bases.
//!
//! A configuration is packed into a `u32` code, `bits` bits per site, site 0
//! in the most significant position. Each site stores its local basis index
//! `i` (magnetization `s - i`), so ascending codes are lexicographic order in
//! local states. Positions are recovered with a two-table perfect ranking:
//! the code splits into a high part `l` and low part `r`, and
//! `index = offset[l] + rank[r]`, where `rank[r]` is the position of `r`
//! among low parts with the same digit sum and `offset[l]` counts the sector
//! states whose high part is smaller than `l`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::spin::SpinValue;

const INVALID: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SectorLabel {
    pub num_sites: usize,
    pub twice_s: u32,
    pub twice_total_sz: i32,
}

impl SectorLabel {
    /// Sum of local basis indices that every configuration of the sector has.
    fn digit_sum(&self) -> Result<u32> {
        let top = self.num_sites as i64 * i64::from(self.twice_s);
        let tsz = i64::from(self.twice_total_sz);
        if tsz.abs() > top {
            return domain(format!("|2Sz| = {} exceeds {top}", tsz.abs()));
        }
        if (top - tsz) % 2 != 0 {
            return domain(format!("2Sz = {tsz} has the wrong parity for {} sites of 2s = {}", self.num_sites, self.twice_s));
        }
        Ok(((top - tsz) / 2) as u32)
    }
}

#[derive(Clone, Debug)]
pub struct SectorBasis {
    label: SectorLabel,
    local_dim: u32,
    bits: u32,
    low_bits: u32,
    states: Vec<u32>,
    offset: Vec<u32>,
    rank: Vec<u32>,
}

fn bits_per_site(local_dim: u32) -> u32 {
    32 - (local_dim - 1).leading_zeros()
}

/// Number of `len`-digit strings over `0..d` with each digit sum.
fn digit_sum_counts(len: usize, d: u32) -> Vec<u64> {
    let mut counts = vec![1u64];
    for _ in 0..len {
        let mut next = vec![0u64; counts.len() + d as usize - 1];
        for (s, &c) in counts.iter().enumerate() {
            for digit in 0..d as usize {
                next[s + digit] += c;
            }
        }
        counts = next;
    }
    counts
}

impl SectorBasis {
    pub fn new(num_sites: usize, s: SpinValue, twice_total_sz: i32) -> Result<Self> {
        let label = SectorLabel { num_sites, twice_s: s.twice_s(), twice_total_sz };
        let target = label.digit_sum()?;
        let local_dim = s.dim() as u32;
        let bits = bits_per_site(local_dim).max(1);
        if num_sites == 0 || bits as usize * num_sites > 32 {
            return Err(Error::Structure(format!(
                "{num_sites} sites of dimension {local_dim} do not fit a 32-bit configuration code"
            )));
        }
        let low_sites = num_sites / 2;
        let high_sites = num_sites - low_sites;
        let low_bits = bits * low_sites as u32;

        let digit_sum = |mut code: u32, sites: usize| -> Option<u32> {
            let mask = (1u32 << bits) - 1;
            let mut sum = 0;
            for _ in 0..sites {
                let digit = code & mask;
                if digit >= local_dim {
                    return None;
                }
                sum += digit;
                code >>= bits;
            }
            Some(sum)
        };

        let low_counts = digit_sum_counts(low_sites, local_dim);
        let mut low_by_sum: Vec<Vec<u32>> = vec![Vec::new(); low_counts.len()];
        let rank: Vec<u32> = (0..1u32 << low_bits)
            .map(|r| match digit_sum(r, low_sites) {
                Some(sum) => {
                    let group = &mut low_by_sum[sum as usize];
                    group.push(r);
                    group.len() as u32 - 1
                }
                None => INVALID,
            })
            .collect();

        let high_bits = bits * high_sites as u32;
        let mut offset = vec![INVALID; 1usize << high_bits];
        let mut total: u64 = 0;
        for (l, slot) in offset.iter_mut().enumerate() {
            if let Some(sum) = digit_sum(l as u32, high_sites) {
                if sum <= target {
                    if let Some(&c) = low_counts.get((target - sum) as usize) {
                        *slot = u32::try_from(total).map_err(|_| Error::Structure("sector too large".into()))?;
                        total += c;
                    }
                }
            }
        }
        if total == 0 {
            return domain("empty sector");
        }

        let mut states = Vec::with_capacity(total as usize);
        for (l, &off) in offset.iter().enumerate() {
            if off == INVALID {
                continue;
            }
            let need = target - digit_sum(l as u32, high_sites).unwrap();
            states.extend(low_by_sum[need as usize].iter().map(|&r| ((l as u32) << low_bits) | r));
        }
        debug_assert_eq!(states.len() as u64, total);

        Ok(Self { label, local_dim, bits, low_bits, states, offset, rank })
    }

    /// Sector with the smallest `|Sz|`: 0 for integer total spin, 1/2 otherwise.
    pub fn minimal(num_sites: usize, s: SpinValue) -> Result<Self> {
        let parity = (num_sites as i64 * i64::from(s.twice_s())) % 2;
        Self::new(num_sites, s, parity as i32)
    }

    /// All valid `2Sz` values, descending.
    pub fn all_twice_sz(num_sites: usize, s: SpinValue) -> Vec<i32> {
        let top = (num_sites as i64 * i64::from(s.twice_s())) as i32;
        (0..=top).map(|k| top - 2 * k).collect()
    }

    pub fn label(&self) -> SectorLabel {
        self.label
    }

    pub fn num_sites(&self) -> usize {
        self.label.num_sites
    }

    pub fn twice_s(&self) -> u32 {
        self.label.twice_s
    }

    pub fn twice_total_sz(&self) -> i32 {
        self.label.twice_total_sz
    }

    pub fn local_dim(&self) -> u32 {
        self.local_dim
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u32] {
        &self.states
    }

    pub fn bits_per_site(&self) -> u32 {
        self.bits
    }

    /// Bit shift of a site's digit inside a code.
    pub fn site_shift(&self, site: usize) -> u32 {
        self.bits * (self.label.num_sites - 1 - site) as u32
    }

    pub fn digit(&self, code: u32, site: usize) -> u32 {
        (code >> self.site_shift(site)) & ((1 << self.bits) - 1)
    }

    /// Local basis indices of a configuration, site 0 first.
    pub fn decode(&self, code: u32) -> Vec<u32> {
        (0..self.label.num_sites).map(|site| self.digit(code, site)).collect()
    }

    pub fn encode(&self, digits: &[u32]) -> u32 {
        digits.iter().fold(0, |acc, &d| (acc << self.bits) | d)
    }

    /// Position of a code known to lie in the sector.
    #[inline]
    pub fn rank_unchecked(&self, code: u32) -> usize {
        let l = (code >> self.low_bits) as usize;
        let r = (code & ((1u32 << self.low_bits) - 1)) as usize;
        (self.offset[l] as usize) + self.rank[r] as usize
    }

    /// Position of a code, or `None` if it is not a sector configuration.
    pub fn index_of(&self, code: u32) -> Option<usize> {
        let l = (code >> self.low_bits) as usize;
        let r = (code & ((1u32 << self.low_bits) - 1)) as usize;
        let (&off, &rk) = (self.offset.get(l)?, self.rank.get(r)?);
        if off == INVALID || rk == INVALID {
            return None;
        }
        let idx = off as usize + rk as usize;
        (self.states.get(idx) == Some(&code)).then_some(idx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spin(twice: u32) -> SpinValue {
        SpinValue::new(twice).unwrap()
    }

    /// Brute-force enumeration of `d^N` configurations, filtered by magnetization.
    fn brute_force(num_sites: usize, s: SpinValue, twice_total_sz: i32) -> Vec<Vec<u32>> {
        let d = s.dim() as u32;
        let mut out = Vec::new();
        let mut digits = vec![0u32; num_sites];
        loop {
            let tsz: i32 = digits.iter().map(|&i| s.twice_s() as i32 - 2 * i as i32).sum();
            if tsz == twice_total_sz {
                out.push(digits.clone());
            }
            let mut k = num_sites;
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                digits[k] += 1;
                if digits[k] < d {
                    break;
                }
                digits[k] = 0;
            }
        }
    }

    #[test]
    fn two_sites_zero_sector() {
        let b = SectorBasis::new(2, SpinValue::THREE_HALVES, 0).unwrap();
        assert_eq!(b.dim(), 4);
    }

    #[test]
    fn three_sites_half_sector() {
        assert_eq!(brute_force(3, SpinValue::THREE_HALVES, 1).len(), 12);
        let b = SectorBasis::new(3, SpinValue::THREE_HALVES, 1).unwrap();
        assert_eq!(b.dim(), 12);
    }

    #[test]
    fn fourteen_site_zero_sector_matches_generating_function() {
        // Coefficient of t^21 in (1+t)^14 (1+t^2)^14.
        let mut poly = vec![1u64];
        for factor in [[1u64, 1, 0], [1, 0, 1]] {
            for _ in 0..14 {
                let mut next = vec![0u64; poly.len() + 2];
                for (i, &c) in poly.iter().enumerate() {
                    for (j, &f) in factor.iter().enumerate() {
                        next[i + j] += c * f;
                    }
                }
                poly = next;
            }
        }
        assert_eq!(poly[21], 25_288_120);
        let b = SectorBasis::minimal(14, SpinValue::THREE_HALVES).unwrap();
        assert_eq!(b.dim() as u64, poly[21]);
    }

    #[test]
    fn parity_and_range_errors() {
        assert!(SectorBasis::new(2, SpinValue::THREE_HALVES, 1).is_err());
        assert!(SectorBasis::new(2, SpinValue::THREE_HALVES, 8).is_err());
        assert!(SectorBasis::new(17, SpinValue::THREE_HALVES, 1).is_err());
    }

    #[test]
    fn matches_brute_force_in_order() {
        for twice in 1..=5 {
            let s = spin(twice);
            for n in 1..=5 {
                let mut total = 0;
                for tsz in SectorBasis::all_twice_sz(n, s) {
                    let b = SectorBasis::new(n, s, tsz).unwrap();
                    let expected = brute_force(n, s, tsz);
                    let got: Vec<Vec<u32>> = b.states().iter().map(|&c| b.decode(c)).collect();
                    assert_eq!(got, expected, "2s={twice} N={n} 2Sz={tsz}");
                    for (i, &c) in b.states().iter().enumerate() {
                        assert_eq!(b.index_of(c), Some(i));
                        assert_eq!(b.rank_unchecked(c), i);
                    }
                    total += b.dim();
                }
                assert_eq!(total, s.dim().pow(n as u32));
            }
        }
    }

    #[test]
    fn index_of_rejects_foreign_codes() {
        let b = SectorBasis::new(4, SpinValue::THREE_HALVES, 0).unwrap();
        let other = SectorBasis::new(4, SpinValue::THREE_HALVES, 2).unwrap();
        for &c in other.states() {
            assert_eq!(b.index_of(c), None);
        }
        // Digit 3 is out of range for spin 1.
        let s1 = SectorBasis::new(2, spin(2), 0).unwrap();
        assert_eq!(s1.index_of(0b11_00), None);
    }
}
