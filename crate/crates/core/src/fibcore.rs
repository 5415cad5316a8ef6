//! Fibonacci numbers (`F_0 = 0, F_1 = F_2 = 1`), the modular inverse of
//! `F_{n-1}` modulo `F_n`, and the greedy Zeckendorf representation.

use std::sync::{OnceLock, RwLock};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};

use crate::goldenangle::OMEGA_F64;

/// Largest index whose Fibonacci number fits in a `u64`.
pub const MAX_U64_INDEX: u32 = 93;

/// Lazily grown table of Fibonacci numbers. Entries are written once and
/// never change, so readers can share the table freely.
#[derive(Debug)]
pub struct FibTable {
    values: RwLock<Vec<BigUint>>,
}

impl Default for FibTable {
    fn default() -> Self {
        Self::new()
    }
}

impl FibTable {
    pub fn new() -> Self {
        FibTable {
            values: RwLock::new(vec![BigUint::zero(), BigUint::one()]),
        }
    }

    /// Process-wide shared table.
    pub fn global() -> &'static FibTable {
        static TABLE: OnceLock<FibTable> = OnceLock::new();
        TABLE.get_or_init(FibTable::new)
    }

    pub fn len(&self) -> usize {
        self.values.read().expect("fib table poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn ensure(&self, n: usize) {
        if n < self.len() {
            return;
        }
        let mut v = self.values.write().expect("fib table poisoned");
        while v.len() <= n {
            let k = v.len();
            let next = &v[k - 1] + &v[k - 2];
            v.push(next);
        }
    }

    pub fn get(&self, n: usize) -> BigUint {
        self.ensure(n);
        self.values.read().expect("fib table poisoned")[n].clone()
    }

    /// Checks the recurrence, Cassini's identity and the parity rule on every
    /// cached entry. Returns the first failing index.
    pub fn self_check(&self) -> Result<(), usize> {
        let v = self.values.read().expect("fib table poisoned");
        if v[0] != BigUint::zero() || v[1] != BigUint::one() {
            return Err(0);
        }
        for n in 1..v.len() {
            if n + 1 < v.len() {
                if v[n + 1] != &v[n] + &v[n - 1] {
                    return Err(n);
                }
                let lhs = BigInt::from(&v[n + 1] * &v[n - 1]) - BigInt::from(&v[n] * &v[n]);
                let rhs = if n % 2 == 0 { 1 } else { -1 };
                if lhs != BigInt::from(rhs) {
                    return Err(n);
                }
            }
            let even = (&v[n] % 2u32).is_zero();
            if even != (n % 3 == 0) {
                return Err(n);
            }
        }
        Ok(())
    }
}

/// `F_n` as an arbitrary-size integer.
pub fn fib(n: u32) -> BigUint {
    FibTable::global().get(n as usize)
}

/// `F_n` for `n <= 93`.
pub fn fib_u64(n: u32) -> Option<u64> {
    static SMALL: OnceLock<Vec<u64>> = OnceLock::new();
    let t = SMALL.get_or_init(|| {
        let mut v = vec![0u64, 1];
        for k in 2..=MAX_U64_INDEX as usize {
            v.push(v[k - 1] + v[k - 2]);
        }
        v
    });
    t.get(n as usize).copied()
}

/// `F_n` for `n <= 186`.
pub fn fib_u128(n: u32) -> Option<u128> {
    if n > 186 {
        return None;
    }
    let (mut a, mut b) = (0u128, 1u128);
    for _ in 0..n {
        let c = a + b;
        a = b;
        b = c;
    }
    Some(a)
}

/// The Fibonacci floor: largest `F_i <= n`, choosing the highest index on
/// ties (so `1 -> (2, 1)` and `0 -> (0, 0)`).
pub fn fib_floor(n: u128) -> (u32, u128) {
    if n == 0 {
        return (0, 0);
    }
    let mut i = 2u32;
    let (mut prev, mut cur) = (1u128, 1u128); // F_1, F_2
    loop {
        match prev.checked_add(cur) {
            Some(next) if next <= n => {
                prev = cur;
                cur = next;
                i += 1;
            }
            _ => return (i, cur),
        }
    }
}

/// Zeckendorf digits of an integer: `n = sum_s bits[s-1] F_s`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZeckRep {
    /// `bits[s - 1]` is `b_s`; empty for zero.
    pub bits: Vec<bool>,
    /// Index of the highest term (`F_m = F(n)`), 0 for zero.
    pub m: u32,
    /// Fibonacci length: number of nonzero digits.
    pub length: u32,
}

impl ZeckRep {
    pub fn digit(&self, s: u32) -> bool {
        s >= 1 && (s as usize) <= self.bits.len() && self.bits[s as usize - 1]
    }

    /// Indices `s` with `b_s = 1`, highest first.
    pub fn indices(&self) -> Vec<u32> {
        (1..=self.m).rev().filter(|&s| self.digit(s)).collect()
    }

    pub fn reconstruct(&self) -> u128 {
        self.indices()
            .into_iter()
            .map(|s| fib_u128(s).expect("index within u128 range"))
            .sum()
    }

    /// `t_s = sum_{u > s} b_u F_u`, the offset before segment `s`.
    pub fn offset_above(&self, s: u32) -> u128 {
        ((s + 1)..=self.m)
            .filter(|&u| self.digit(u))
            .map(|u| fib_u128(u).expect("index within u128 range"))
            .sum()
    }
}

/// Recursive greedy decomposition `n = F(n) + (n - F(n))`.
pub fn zeckendorf(n: u128) -> ZeckRep {
    if n == 0 {
        return ZeckRep {
            bits: Vec::new(),
            m: 0,
            length: 0,
        };
    }
    let (m, _) = fib_floor(n);
    let mut bits = vec![false; m as usize];
    let mut rest = n;
    let mut length = 0;
    while rest > 0 {
        let (i, f) = fib_floor(rest);
        bits[i as usize - 1] = true;
        length += 1;
        rest -= f;
    }
    ZeckRep { bits, m, length }
}

/// Upper bounds `(m_bound, length_bound)` on the highest index and the
/// Fibonacci length of `n >= 1`.
pub fn fib_length_bounds(n: u128) -> (u32, u32) {
    assert!(n >= 1, "fib_length_bounds needs n >= 1");
    let l = (n as f64).ln() + 1.0;
    let m = (l / (1.0 + OMEGA_F64).ln()).floor() as u32;
    let fl = (l / (2.0 + OMEGA_F64).ln()).floor() as u32;
    (m, fl)
}

/// `[(-1)^n F_{n-1}] mod F_n`, the inverse of `F_{n-1}` modulo `F_n`
/// (`0` when the modulus is 1).
pub fn fib_mod_inverse(n: u32) -> BigUint {
    assert!(n >= 1, "fib_mod_inverse needs n >= 1");
    let modulus = fib(n);
    if modulus.is_one() {
        return BigUint::zero();
    }
    let prev = fib(n - 1) % &modulus;
    if n.is_multiple_of(2) {
        prev
    } else {
        (&modulus - prev) % &modulus
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_integer::Integer;

    #[test]
    fn small_values() {
        assert_eq!(fib(0), BigUint::zero());
        assert_eq!(fib(6), BigUint::from(8u32));
        assert_eq!(fib_u64(93), Some(12_200_160_415_121_876_738));
        assert_eq!(fib_u64(94), None);
    }

    #[test]
    fn fib_40_from_plain_recurrence() {
        let (mut a, mut b) = (BigUint::zero(), BigUint::one());
        for _ in 0..40 {
            let c = &a + &b;
            a = b;
            b = c;
        }
        assert_eq!(fib(40), a);
        assert_eq!(fib(40), BigUint::from(102_334_155u64));
    }

    #[test]
    fn table_identities_hold_past_64_bits() {
        let t = FibTable::new();
        t.get(300);
        assert_eq!(t.self_check(), Ok(()));
        assert!(t.get(94).bits() > 64);
    }

    #[test]
    fn floor_examples() {
        assert_eq!(fib_floor(7), (5, 5));
        assert_eq!(fib_floor(1), (2, 1));
        assert_eq!(fib_floor(0), (0, 0));
        assert_eq!(fib_floor(8), (6, 8));
    }

    #[test]
    fn zeckendorf_examples() {
        let z = zeckendorf(7);
        assert_eq!(z.indices(), vec![5, 3]);
        assert_eq!(z.length, 2);
        assert_eq!(z.m, 5);
        let z0 = zeckendorf(0);
        assert!(z0.bits.is_empty());
        assert_eq!(z0.length, 0);
        assert_eq!(zeckendorf(100).reconstruct(), 100);
        assert_eq!(zeckendorf(7).offset_above(3), 5);
    }

    // All representations of n as sums of non-adjacent F_s (s >= 2).
    fn count_representations(n: u64) -> usize {
        fn go(n: u64, max_idx: u32) -> usize {
            if n == 0 {
                return 1;
            }
            let mut c = 0;
            for s in (2..=max_idx).rev() {
                let f = fib_u64(s).unwrap();
                if f <= n {
                    c += go(n - f, s.saturating_sub(2));
                }
            }
            c
        }
        go(n, 20)
    }

    #[test]
    fn zeckendorf_unique_up_to_1000() {
        for n in 0..=1000u64 {
            assert_eq!(count_representations(n), 1, "n = {n}");
            assert_eq!(zeckendorf(n as u128).reconstruct(), n as u128);
        }
    }

    #[test]
    fn length_bounds_examples() {
        let (_, fl) = fib_length_bounds(7);
        assert!(fl >= 2);
        let (m, fl) = fib_length_bounds(1);
        let z = zeckendorf(1);
        assert_eq!((z.m, z.length), (2, 1));
        assert!(m >= 2 && fl >= 1);
    }

    #[test]
    fn mod_inverse_examples() {
        assert_eq!(fib_mod_inverse(5), BigUint::from(2u32));
        assert_eq!(fib_mod_inverse(1), BigUint::zero());
        assert_eq!(fib_mod_inverse(2), BigUint::zero());
    }

    #[test]
    fn mod_inverse_matches_extended_euclid() {
        for n in 3..=40u32 {
            let m = BigInt::from(fib(n));
            let a = BigInt::from(fib(n - 1));
            let g = a.extended_gcd(&m);
            assert!(g.gcd == BigInt::one());
            let euclid = g.x.mod_floor(&m);
            assert_eq!(BigInt::from(fib_mod_inverse(n)), euclid, "n = {n}");
            assert!(((a * euclid) % &m).is_one());
        }
    }
}
