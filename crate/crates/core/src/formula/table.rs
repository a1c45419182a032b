use super::{FormulaError, MAX_TABLE_VARS};
use serde::{Deserialize, Serialize};

/// Packed truth table; bit `z` holds the value on assignment mask `z`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TruthTable {
    n_vars: u32,
    words: Vec<u64>,
}

impl TruthTable {
    pub fn n_words(n_vars: u32) -> usize {
        if n_vars <= 6 {
            1
        } else {
            1 << (n_vars - 6)
        }
    }

    pub fn check_vars(n_vars: u32) -> Result<(), FormulaError> {
        if n_vars > MAX_TABLE_VARS {
            return Err(FormulaError::TooManyVars { n_vars, max: MAX_TABLE_VARS });
        }
        Ok(())
    }

    /// Valid-bit mask for the (single) word of a table with fewer than 6 variables.
    fn tail_mask(n_vars: u32) -> u64 {
        if n_vars >= 6 {
            u64::MAX
        } else {
            (1u64 << (1u32 << n_vars)) - 1
        }
    }

    pub fn from_words(n_vars: u32, mut words: Vec<u64>) -> Self {
        assert_eq!(words.len(), Self::n_words(n_vars));
        if n_vars < 6 {
            words[0] &= Self::tail_mask(n_vars);
        }
        TruthTable { n_vars, words }
    }

    pub fn from_fn(n_vars: u32, f: impl Fn(u64) -> bool) -> Result<Self, FormulaError> {
        Self::check_vars(n_vars)?;
        let mut words = vec![0u64; Self::n_words(n_vars)];
        for z in 0..(1u64 << n_vars) {
            if f(z) {
                words[(z >> 6) as usize] |= 1 << (z & 63);
            }
        }
        Ok(TruthTable { n_vars, words })
    }

    /// Column of variable `var` (1-indexed).
    pub fn var_column(n_vars: u32, var: u32) -> Vec<u64> {
        const PATTERNS: [u64; 6] = [
            0xAAAA_AAAA_AAAA_AAAA,
            0xCCCC_CCCC_CCCC_CCCC,
            0xF0F0_F0F0_F0F0_F0F0,
            0xFF00_FF00_FF00_FF00,
            0xFFFF_0000_FFFF_0000,
            0xFFFF_FFFF_0000_0000,
        ];
        let i = var - 1;
        let n = Self::n_words(n_vars);
        let tail = Self::tail_mask(n_vars);
        if i < 6 {
            vec![PATTERNS[i as usize] & tail; n]
        } else {
            let block = 1usize << (i - 6);
            (0..n).map(|w| if (w / block) % 2 == 1 { u64::MAX } else { 0 }).collect()
        }
    }

    pub fn constant(n_vars: u32, value: bool) -> Vec<u64> {
        let tail = Self::tail_mask(n_vars);
        vec![if value { tail } else { 0 }; Self::n_words(n_vars)]
    }

    pub fn n_vars(&self) -> u32 {
        self.n_vars
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, z: u64) -> bool {
        (self.words[(z >> 6) as usize] >> (z & 63)) & 1 == 1
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn is_constant(&self) -> bool {
        let ones = self.count_ones();
        ones == 0 || ones == 1u64 << self.n_vars
    }

    /// Assignments where the table is `value`, in increasing mask order.
    pub fn preimage(&self, value: bool) -> Vec<u64> {
        (0..(1u64 << self.n_vars)).filter(|&z| self.get(z) == value).collect()
    }

    /// First assignment where two tables differ.
    pub fn first_difference(&self, other_words: &[u64]) -> Option<u64> {
        for (w, (a, b)) in self.words.iter().zip(other_words).enumerate() {
            let d = a ^ b;
            if d != 0 {
                return Some(((w as u64) << 6) | d.trailing_zeros() as u64);
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_match_masks() {
        for n in [1u32, 3, 6, 8] {
            for v in 1..=n {
                let col = TruthTable::var_column(n, v);
                let t = TruthTable::from_words(n, col);
                for z in 0..(1u64 << n) {
                    assert_eq!(t.get(z), (z >> (v - 1)) & 1 == 1);
                }
            }
        }
    }

    #[test]
    fn from_fn_and_difference() {
        let t = TruthTable::from_fn(3, |z| z.count_ones() % 2 == 1).unwrap();
        assert_eq!(t.count_ones(), 4);
        let u = TruthTable::from_fn(3, |z| z.count_ones() % 2 == 1 && z != 7).unwrap();
        assert_eq!(t.first_difference(u.words()), Some(7));
        assert_eq!(t.preimage(false), vec![0, 3, 5, 6]);
    }
}
