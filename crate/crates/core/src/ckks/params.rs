//! Parameter sets, the 128-bit-security modulus budget table and the checked
//! context every other CKKS routine borrows.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::encoding::Encoder;
use super::math::{ntt_primes_above, Modulus, NttTables};
use super::CkksError;

/// Maximum total coefficient-modulus bits and prime count per ring degree
/// at 128-bit security.
pub const SECURITY_BUDGET: [(usize, u32, usize); 6] = [
    (1024, 27, 1),
    (2048, 54, 1),
    (4096, 109, 3),
    (8192, 218, 5),
    (16384, 438, 9),
    (32768, 881, 16),
];

pub fn budget_for(degree: usize) -> Option<(u32, usize)> {
    SECURITY_BUDGET
        .iter()
        .find(|(d, _, _)| *d == degree)
        .map(|&(_, bits, count)| (bits, count))
}

/// Requested parameters: ring degree, the bit length of each chain prime and
/// the initial encoding scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CkksParams {
    pub degree: usize,
    pub modulus_bits: Vec<u32>,
    pub initial_scale: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Degree 16384, chain [60, 40, 40, 40, 30, 30], scale 2^30.
    Paper,
    /// Degree 4096, chain [40, 30, 30], scale 2^30.
    Test,
}

impl std::str::FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(Preset::Paper),
            "test" => Ok(Preset::Test),
            other => Err(format!("unknown preset `{other}`")),
        }
    }
}

impl CkksParams {
    pub fn preset(p: Preset) -> Self {
        match p {
            Preset::Paper => Self {
                degree: 16384,
                modulus_bits: vec![60, 40, 40, 40, 30, 30],
                initial_scale: 2f64.powi(30),
            },
            Preset::Test => Self {
                degree: 4096,
                modulus_bits: vec![40, 30, 30],
                initial_scale: 2f64.powi(30),
            },
        }
    }

    pub fn total_bits(&self) -> u32 {
        self.modulus_bits.iter().sum()
    }
}

/// Validated parameters with concrete primes and precomputed tables.
///
/// Data primes `q_0..q_{L-1}` form the rescaling chain; rescaling drops the
/// last active one. A separate key-switching prime `P` (the smallest
/// NTT-friendly prime above `2^max_bits` not already in the chain) lives only
/// in key material and never in ciphertexts, so it is not charged against
/// the budget table.
#[derive(Debug)]
pub struct CkksContext {
    params: CkksParams,
    tables: Vec<NttTables>,
    /// `P^{-1} mod q_i` for each chain prime.
    special_inv: Vec<u64>,
    /// `q_{l}^{-1} mod q_i` for i < l, indexed `[l][i]`.
    drop_inv: Vec<Vec<u64>>,
    encoder: Encoder,
}

pub fn validate_params(params: &CkksParams) -> Result<Arc<CkksContext>, CkksError> {
    let n = params.degree;
    if !n.is_power_of_two() || n < 1024 {
        return Err(CkksError::UnsupportedDegree(n));
    }
    let (limit_bits, limit_count) = budget_for(n).ok_or(CkksError::UnsupportedDegree(n))?;
    if n == 1024 {
        return Err(CkksError::DegreeUnusable(n));
    }
    if params.modulus_bits.is_empty() {
        return Err(CkksError::Malformed("empty modulus chain".into()));
    }
    let total = params.total_bits();
    if total > limit_bits {
        return Err(CkksError::BudgetExceeded {
            degree: n,
            bits: total,
            limit: limit_bits,
        });
    }
    if params.modulus_bits.len() > limit_count {
        return Err(CkksError::ModulusCountExceeded {
            degree: n,
            count: params.modulus_bits.len(),
            limit: limit_count,
        });
    }
    if let Some(&b) = params
        .modulus_bits
        .iter()
        .find(|&&b| !(20..=60).contains(&b))
    {
        return Err(CkksError::NonNttPrime { bits: b });
    }
    let scale = params.initial_scale;
    if !(scale.is_finite() && scale >= 1.0) {
        return Err(CkksError::InvalidScale(scale));
    }

    let mut primes: Vec<u64> = Vec::with_capacity(params.modulus_bits.len() + 1);
    for &bits in &params.modulus_bits {
        let p = ntt_primes_above(bits, n, 1, &primes)
            .pop()
            .ok_or(CkksError::NonNttPrime { bits })?;
        primes.push(p);
    }
    if primes.iter().skip(1).any(|&q| scale >= q as f64) {
        return Err(CkksError::InvalidScale(scale));
    }
    let max_bits = *params.modulus_bits.iter().max().unwrap();
    let special = ntt_primes_above(max_bits, n, 1, &primes)
        .pop()
        .ok_or(CkksError::NonNttPrime { bits: max_bits })?;
    primes.push(special);

    let tables = primes
        .iter()
        .map(|&q| {
            NttTables::new(q, n).ok_or(CkksError::NonNttPrime {
                bits: 64 - q.leading_zeros(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let chain_len = params.modulus_bits.len();
    let special_inv = tables[..chain_len]
        .iter()
        .map(|t| t.modulus().inv(special % t.modulus().value()))
        .collect();
    let drop_inv = (0..chain_len)
        .map(|l| {
            let ql = primes[l];
            tables[..l]
                .iter()
                .map(|t| t.modulus().inv(ql % t.modulus().value()))
                .collect()
        })
        .collect();

    Ok(Arc::new(CkksContext {
        params: params.clone(),
        tables,
        special_inv,
        drop_inv,
        encoder: Encoder::new(n),
    }))
}

impl CkksContext {
    pub fn params(&self) -> &CkksParams {
        &self.params
    }

    pub fn degree(&self) -> usize {
        self.params.degree
    }

    pub fn slot_count(&self) -> usize {
        self.params.degree / 2
    }

    pub fn initial_scale(&self) -> f64 {
        self.params.initial_scale
    }

    /// Number of chain primes, i.e. the level of a fresh ciphertext.
    pub fn max_level(&self) -> usize {
        self.params.modulus_bits.len()
    }

    pub fn chain_primes(&self) -> Vec<u64> {
        self.tables[..self.max_level()]
            .iter()
            .map(|t| t.modulus().value())
            .collect()
    }

    pub fn special_prime(&self) -> u64 {
        self.tables[self.max_level()].modulus().value()
    }

    /// Prime removed by a rescale from `level` (the last active one).
    pub fn prime_at(&self, index: usize) -> u64 {
        self.tables[index].modulus().value()
    }

    pub(crate) fn table(&self, index: usize) -> &NttTables {
        &self.tables[index]
    }

    pub(crate) fn modulus(&self, index: usize) -> &Modulus {
        self.tables[index].modulus()
    }

    /// Index of the key-switching prime in the table list.
    pub(crate) fn special_index(&self) -> usize {
        self.max_level()
    }

    pub(crate) fn special_inv(&self, i: usize) -> u64 {
        self.special_inv[i]
    }

    pub(crate) fn drop_inv(&self, level: usize, i: usize) -> u64 {
        self.drop_inv[level][i]
    }

    pub(crate) fn encoder(&self) -> &Encoder {
        &self.encoder
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_preset_is_accepted() {
        let p = CkksParams::preset(Preset::Paper);
        assert_eq!(p.total_bits(), 240);
        let ctx = validate_params(&p).unwrap();
        assert_eq!(ctx.slot_count(), 8192);
        assert_eq!(ctx.max_level(), 6);
        for (q, bits) in ctx.chain_primes().iter().zip(&p.modulus_bits) {
            assert_eq!(q % (2 * 16384), 1);
            assert!(*q > 1u64 << bits && *q < 1u64 << (bits + 1));
        }
        let chain = ctx.chain_primes();
        assert!(!chain.contains(&ctx.special_prime()));
    }

    #[test]
    fn degree_8192_rejects_240_bits() {
        let p = CkksParams {
            degree: 8192,
            modulus_bits: vec![60, 40, 40, 40, 30, 30],
            initial_scale: 2f64.powi(30),
        };
        assert_eq!(
            validate_params(&p).unwrap_err(),
            CkksError::BudgetExceeded {
                degree: 8192,
                bits: 240,
                limit: 218
            }
        );
    }

    #[test]
    fn degree_1024_is_unusable() {
        let p = CkksParams {
            degree: 1024,
            modulus_bits: vec![27],
            initial_scale: 2f64.powi(20),
        };
        assert_eq!(
            validate_params(&p).unwrap_err(),
            CkksError::DegreeUnusable(1024)
        );
    }

    #[test]
    fn non_power_of_two_degree_is_rejected() {
        let p = CkksParams {
            degree: 3000,
            modulus_bits: vec![30],
            initial_scale: 2f64.powi(20),
        };
        assert_eq!(
            validate_params(&p).unwrap_err(),
            CkksError::UnsupportedDegree(3000)
        );
    }

    #[test]
    fn scale_must_stay_below_rescaling_primes() {
        let p = CkksParams {
            degree: 4096,
            modulus_bits: vec![40, 30],
            initial_scale: 2f64.powi(31),
        };
        assert!(matches!(
            validate_params(&p),
            Err(CkksError::InvalidScale(_))
        ));
    }

    #[test]
    fn prime_generation_is_deterministic() {
        let p = CkksParams::preset(Preset::Test);
        let a = validate_params(&p).unwrap();
        let b = validate_params(&p).unwrap();
        assert_eq!(a.chain_primes(), b.chain_primes());
        assert_eq!(a.special_prime(), b.special_prime());
    }
}
