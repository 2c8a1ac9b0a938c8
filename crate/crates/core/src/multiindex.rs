//! Primes, prime factorization, and finitely supported multi-indices.
//!
//! The integer `n = p_1^{α_1} ⋯ p_k^{α_k}` is identified with the
//! multi-index `α`. Positions are 1-based: position `j` refers to the
//! `j`-th prime.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// Default sieve bound for [`PrimeTable::default`].
pub const DEFAULT_SIEVE_LIMIT: u64 = 1_000_000;

/// Default cap on the number of indices [`enumerate_homogeneous`] returns.
pub const DEFAULT_ENUMERATION_CAP: usize = 1_000_000;

/// A finitely supported exponent vector `α ∈ ℕ₀^(ℕ)`.
///
/// Stored sparsely as strictly increasing `(position, exponent)` pairs with
/// every exponent at least one. Ordering is lexicographic on the dense
/// representation, comparing the exponent at position 1 first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct MultiIndex {
    entries: Vec<(usize, u32)>,
}

impl MultiIndex {
    /// The zero multi-index (the constant monomial, the integer 1).
    pub fn zero() -> Self {
        Self::default()
    }

    /// Builds from `(position, exponent)` pairs. Zero exponents are dropped;
    /// positions must be at least 1 and strictly increasing.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, u32)>) -> Result<Self> {
        let mut entries: Vec<(usize, u32)> = Vec::new();
        for (pos, exp) in pairs {
            if pos == 0 {
                return Err(Error::InvalidInput("multi-index positions are 1-based".into()));
            }
            if let Some(&(last, _)) = entries.last() {
                if pos <= last {
                    return Err(Error::InvalidInput(format!(
                        "multi-index positions must be strictly increasing ({last} then {pos})"
                    )));
                }
            }
            if exp > 0 {
                entries.push((pos, exp));
            }
        }
        Ok(Self { entries })
    }

    /// Builds from a dense exponent vector; `dense[0]` is position 1.
    pub fn from_dense(dense: &[u32]) -> Self {
        let entries = dense.iter().enumerate().filter(|(_, &e)| e > 0).map(|(i, &e)| (i + 1, e)).collect();
        Self { entries }
    }

    /// The single variable `z_pos^exp`.
    pub fn monomial(pos: usize, exp: u32) -> Result<Self> {
        Self::from_pairs([(pos, exp)])
    }

    /// Dense exponent vector of length `len`. Positions beyond `len` are
    /// ignored, so callers should pass at least [`Self::max_position`].
    pub fn to_dense(&self, len: usize) -> Vec<u32> {
        let mut dense = vec![0; len];
        for &(pos, exp) in &self.entries {
            if pos <= len {
                dense[pos - 1] = exp;
            }
        }
        dense
    }

    pub fn pairs(&self) -> &[(usize, u32)] {
        &self.entries
    }

    /// Exponent at 1-based `pos`.
    pub fn get(&self, pos: usize) -> u32 {
        self.entries.binary_search_by_key(&pos, |&(p, _)| p).map(|i| self.entries[i].1).unwrap_or(0)
    }

    /// `|α| = α_1 + α_2 + ⋯`
    pub fn degree(&self) -> u32 {
        self.entries.iter().map(|&(_, e)| e).sum()
    }

    /// Largest position carrying a nonzero exponent, 0 for the zero index.
    pub fn max_position(&self) -> usize {
        self.entries.last().map_or(0, |&(p, _)| p)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// `α! = α_1! α_2! ⋯` as a float.
    pub fn factorial(&self) -> f64 {
        self.entries.iter().map(|&(_, e)| factorial(e)).product()
    }

    /// The sorted index tuple `(i_1 ≤ ⋯ ≤ i_m)` in which position `j`
    /// appears `α_j` times.
    pub fn to_tuple(&self) -> Vec<usize> {
        self.entries.iter().flat_map(|&(p, e)| std::iter::repeat_n(p, e as usize)).collect()
    }

    /// Inverse of [`Self::to_tuple`]; the tuple need not be sorted.
    pub fn from_tuple(tuple: &[usize]) -> Result<Self> {
        let mut sorted = tuple.to_vec();
        sorted.sort_unstable();
        let mut pairs: Vec<(usize, u32)> = Vec::new();
        for p in sorted {
            match pairs.last_mut() {
                Some((last, e)) if *last == p => *e += 1,
                _ => pairs.push((p, 1)),
            }
        }
        Self::from_pairs(pairs)
    }

    /// Applies a relabelling of positions: the exponent at position `j`
    /// moves to `perm(j)`.
    pub fn relabel(&self, perm: impl Fn(usize) -> usize) -> Result<Self> {
        let mut pairs: Vec<(usize, u32)> = self.entries.iter().map(|&(p, e)| (perm(p), e)).collect();
        pairs.sort_unstable();
        Self::from_pairs(pairs)
    }
}

pub(crate) fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

impl Add for &MultiIndex {
    type Output = MultiIndex;

    fn add(self, rhs: &MultiIndex) -> MultiIndex {
        let (a, b) = (&self.entries, &rhs.entries);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            match (a.get(i), b.get(j)) {
                (Some(&(pa, ea)), Some(&(pb, eb))) if pa == pb => {
                    out.push((pa, ea + eb));
                    i += 1;
                    j += 1;
                }
                (Some(&(pa, ea)), Some(&(pb, _))) if pa < pb => {
                    out.push((pa, ea));
                    i += 1;
                }
                (Some(_), Some(&(pb, eb))) => {
                    out.push((pb, eb));
                    j += 1;
                }
                (Some(&x), None) => {
                    out.push(x);
                    i += 1;
                }
                (None, Some(&x)) => {
                    out.push(x);
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        MultiIndex { entries: out }
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        // Walk positions in increasing order; the first position where the
        // exponents differ decides.
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j) = (0, 0);
        loop {
            match (a.get(i), b.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some(&(pa, ea)), Some(&(pb, eb))) => match pa.cmp(&pb) {
                    // `a` has a nonzero exponent where `b` has zero
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => match ea.cmp(&eb) {
                        Ordering::Equal => {
                            i += 1;
                            j += 1;
                        }
                        ord => return ord,
                    },
                },
            }
        }
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dense = self.to_dense(self.max_position());
        write!(f, "(")?;
        for (k, e) in dense.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

// JSON form: [[position, exponent], ...]
impl Serialize for MultiIndex {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.entries.serialize(s)
    }
}

impl<'de> Deserialize<'de> for MultiIndex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let pairs = Vec::<(usize, u32)>::deserialize(d)?;
        MultiIndex::from_pairs(pairs).map_err(serde::de::Error::custom)
    }
}

/// The first `K` primes, produced by a sieve of Eratosthenes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeTable {
    primes: Vec<u64>,
}

impl Default for PrimeTable {
    fn default() -> Self {
        Self::below(DEFAULT_SIEVE_LIMIT)
    }
}

impl PrimeTable {
    /// All primes strictly below `limit`.
    pub fn below(limit: u64) -> Self {
        let limit = limit as usize;
        if limit < 3 {
            return Self { primes: Vec::new() };
        }
        let mut composite = vec![false; limit];
        let mut primes = Vec::new();
        for n in 2..limit {
            if composite[n] {
                continue;
            }
            primes.push(n as u64);
            let mut k = n * n;
            while k < limit {
                composite[k] = true;
                k += n;
            }
        }
        Self { primes }
    }

    /// At least the first `count` primes.
    pub fn with_count(count: usize) -> Self {
        let mut limit: u64 = 64;
        loop {
            let table = Self::below(limit);
            if table.len() >= count {
                return Self { primes: table.primes[..count].to_vec() };
            }
            limit *= 2;
        }
    }

    /// Wraps an externally stored list (e.g. a cache file). The list is
    /// checked against a fresh sieve of the same bound.
    pub fn from_primes(primes: Vec<u64>) -> Result<Self> {
        let bound = primes.last().map_or(0, |&p| p + 1);
        let fresh = Self::below(bound);
        if fresh.primes != primes {
            return Err(Error::InvalidInput("prime list does not match a sieve".into()));
        }
        Ok(Self { primes })
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.primes
    }

    /// The `j`-th prime, 1-based (`prime(1) == Some(2)`).
    pub fn prime(&self, j: usize) -> Option<u64> {
        j.checked_sub(1).and_then(|i| self.primes.get(i).copied())
    }

    pub fn largest(&self) -> u64 {
        self.primes.last().copied().unwrap_or(1)
    }

    /// 1-based position of `p` if it is a prime in the table.
    pub fn position_of(&self, p: u64) -> Option<usize> {
        self.primes.binary_search(&p).ok().map(|i| i + 1)
    }

    /// `p^α` as a float, without overflow checks. Used for weights.
    pub fn prime_power_f64(&self, alpha: &MultiIndex) -> Result<f64> {
        let mut v = 1.0;
        for &(pos, e) in alpha.pairs() {
            let p = self.prime(pos).ok_or(Error::CapacityExceeded { value: pos as u64, largest: self.largest() })?;
            v *= (p as f64).powi(e as i32);
        }
        Ok(v)
    }
}

/// Prime factorization `n = p^α`.
pub fn factorize(n: u64, table: &PrimeTable) -> Result<MultiIndex> {
    if n == 0 {
        return Err(Error::InvalidInput("cannot factorize 0".into()));
    }
    let mut rest = n;
    let mut pairs = Vec::new();
    for (i, &p) in table.as_slice().iter().enumerate() {
        if p.saturating_mul(p) > rest {
            break;
        }
        let mut e = 0;
        while rest.is_multiple_of(p) {
            rest /= p;
            e += 1;
        }
        if e > 0 {
            pairs.push((i + 1, e));
        }
    }
    if rest > 1 {
        // Either `rest` is a prime (all primes up to its square root were
        // tried) or the table ran out before its square root.
        match table.position_of(rest) {
            Some(pos) => pairs.push((pos, 1)),
            None => {
                return Err(Error::CapacityExceeded { value: n, largest: table.largest() });
            }
        }
    }
    MultiIndex::from_pairs(pairs)
}

/// The integer `p^α`, with overflow reported as an error.
pub fn index_of(alpha: &MultiIndex, table: &PrimeTable) -> Result<u64> {
    let mut n: u64 = 1;
    for &(pos, e) in alpha.pairs() {
        let p = table.prime(pos).ok_or(Error::CapacityExceeded { value: pos as u64, largest: table.largest() })?;
        let pe = p.checked_pow(e).ok_or_else(|| Error::Overflow(format!("p^α for α = {alpha}")))?;
        n = n.checked_mul(pe).ok_or_else(|| Error::Overflow(format!("p^α for α = {alpha}")))?;
    }
    Ok(n)
}

/// Number of multi-indices of degree `degree` in `vars` variables,
/// `binomial(degree + vars - 1, degree)`, or `None` on overflow.
pub fn homogeneous_count(vars: usize, degree: u32) -> Option<u128> {
    if vars == 0 {
        return Some(u128::from(degree == 0));
    }
    let n = degree as u128 + vars as u128 - 1;
    let k = (degree as u128).min(vars as u128 - 1);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// All `α` supported in `{1..vars}` with `|α| = degree`, leading exponent
/// first: `(2,0), (1,1), (0,2)` for two variables and degree two.
pub fn enumerate_homogeneous(vars: usize, degree: u32) -> Result<Vec<MultiIndex>> {
    enumerate_homogeneous_capped(vars, degree, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_homogeneous_capped(vars: usize, degree: u32, cap: usize) -> Result<Vec<MultiIndex>> {
    if vars == 0 && degree > 0 {
        return Err(Error::InvalidInput("need at least one variable".into()));
    }
    let count = homogeneous_count(vars, degree).unwrap_or(u128::MAX);
    if count > cap as u128 {
        return Err(Error::SizeExceeded { size: count, cap: cap as u128 });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut dense = vec![0u32; vars];
    fill(&mut dense, 0, degree, &mut out);
    Ok(out)
}

fn fill(dense: &mut [u32], pos: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    if pos + 1 >= dense.len() {
        if let Some(last) = dense.last_mut() {
            *last = remaining;
        }
        out.push(MultiIndex::from_dense(dense));
        return;
    }
    for e in (0..=remaining).rev() {
        dense[pos] = e;
        fill(dense, pos + 1, remaining - e, out);
    }
    dense[pos] = 0;
}

/// `Σ_{j ≤ count} p_j^{-s}`.
pub fn prime_zeta_partial(s: f64, count: usize, table: &PrimeTable) -> Result<f64> {
    if s.is_nan() || s <= 1.0 {
        return Err(Error::InvalidInput(format!("prime zeta needs s > 1, got {s}")));
    }
    if count > table.len() {
        return Err(Error::CapacityExceeded { value: count as u64, largest: table.largest() });
    }
    // smallest terms first
    Ok(table.as_slice()[..count].iter().rev().map(|&p| (p as f64).powf(-s)).sum())
}
