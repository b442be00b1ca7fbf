//! Small prime-field arithmetic: quadratic characters, modular square roots,
//! and the handful of prime-indexed symbols that appear in closed-form point
//! counts.

/// Errors for arithmetic that is only defined away from finitely many primes.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ArithError {
    #[error("prime {0} divides the discriminant; splitting type undefined")]
    RamifiedPrime(u64),
    #[error("{0} is not prime")]
    NotPrime(u64),
}

/// Deterministic primality by trial division; fine for the sizes we count at.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// All primes in the inclusive range `[lo, hi]`.
pub fn primes_in(lo: u64, hi: u64) -> Vec<u64> {
    (lo..=hi).filter(|&n| is_prime(n)).collect()
}

/// Legendre symbol `(a/p)` for odd prime `p`, via Euler's criterion.
/// Returns 0, 1 or -1.
pub fn legendre(a: u64, p: u64) -> i32 {
    debug_assert!(p > 2 && is_prime(p));
    let a = a % p;
    if a == 0 {
        return 0;
    }
    let e = crate::poly::pow_mod_u64(a, (p - 1) / 2, p);
    if e == 1 {
        1
    } else {
        -1
    }
}

/// Legendre symbol with a signed argument, `(a/p)` for odd `p`.
pub fn legendre_i64(a: i64, p: u64) -> i32 {
    let m = a.rem_euclid(p as i64) as u64;
    legendre(m, p)
}

/// Table of `chi_p` values for all residues: `table[x] = (x/p)` as `i8`.
pub fn legendre_table(p: u64) -> Vec<i8> {
    let mut t = vec![-1i8; p as usize];
    t[0] = 0;
    // squares of 1..p-1 are exactly the quadratic residues
    let mut x = 1u64;
    while x < p {
        t[((x * x) % p) as usize] = 1;
        x += 1;
    }
    t
}

/// Square root of `a` modulo an odd prime `p` (Tonelli–Shanks).
/// Returns the smaller of the two roots; `None` if `a` is a non-residue.
pub fn sqrt_mod(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 {
        return Some(0);
    }
    if legendre(a, p) != 1 {
        return None;
    }
    let pow = crate::poly::pow_mod_u64;
    let mul = |x: u64, y: u64| crate::poly::mul_mod_u64(x, y, p);
    let r = if p % 4 == 3 {
        pow(a, (p + 1) / 4, p)
    } else {
        // write p-1 = q * 2^s with q odd
        let mut q = p - 1;
        let mut s = 0u32;
        while q % 2 == 0 {
            q /= 2;
            s += 1;
        }
        // find a non-residue z
        let mut z = 2u64;
        while legendre(z, p) != -1 {
            z += 1;
        }
        let mut m = s;
        let mut c = pow(z, q, p);
        let mut t = pow(a, q, p);
        let mut r = pow(a, (q + 1) / 2, p);
        while t != 1 {
            // find least i with t^(2^i) = 1
            let mut i = 0u32;
            let mut t2 = t;
            while t2 != 1 {
                t2 = mul(t2, t2);
                i += 1;
            }
            let mut b = c;
            for _ in 0..(m - i - 1) {
                b = mul(b, b);
            }
            m = i;
            c = mul(b, b);
            t = mul(t, c);
            r = mul(r, b);
        }
        r
    };
    Some(r.min(p - r))
}

/// Indicator used by the weight-4 level-6 count: 1 when `p = 1 (mod 8)`,
/// else 0.
pub fn alpha_8(p: u64) -> i64 {
    if p % 8 == 1 {
        1
    } else {
        0
    }
}

/// The level-390 node symbol: 0 unless both 3 and -3 are squares mod `p`;
/// otherwise `+-2` according to whether `6 + 4*sqrt(3)` is a square mod `p`.
/// When both conjugates `6 +- 4*sqrt(3)` exist their product is `-12`, which
/// is a square exactly when `-3` is, so the choice of root does not matter.
pub fn alpha_390(p: u64) -> i64 {
    debug_assert!(p > 3);
    if legendre(3, p) != 1 || legendre_i64(-3, p) != 1 {
        return 0;
    }
    let s = sqrt_mod(3, p).expect("3 is a residue here");
    let t = (6 + 4 * s) % p;
    let t_conj = (6 + 4 * (p - s)) % p;
    debug_assert_eq!(legendre(t, p), legendre(t_conj, p), "conjugate symbols agree");
    if legendre(t, p) == 1 {
        2
    } else {
        -2
    }
}

/// Number of roots of a univariate polynomial mod `p`, by direct scan.
/// Coefficients are `c[k]` for `x^k`, as signed integers.
pub fn root_count_mod_p(coeffs: &[i64], p: u64) -> usize {
    (0..p)
        .filter(|&x| {
            let mut acc: u64 = 0;
            for &c in coeffs.iter().rev() {
                let cm = c.rem_euclid(p as i64) as u64;
                acc = (crate::poly::mul_mod_u64(acc, x % p, p) + cm) % p;
            }
            acc == 0
        })
        .count()
}

/// Frobenius class of a prime in the splitting field of `x^3 - x - 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frobenius3 {
    /// three roots mod p (identity class)
    Split3,
    /// one root mod p (transposition class)
    Partial,
    /// no roots mod p (3-cycle class)
    Inert3,
}

/// Splitting behaviour of `x^3 - x - 2` mod `p`. The discriminant is
/// `-104 = -2^3 * 13`, so the classification is undefined at 2 and 13.
pub fn cubic_frobenius(p: u64) -> Result<Frobenius3, ArithError> {
    if !is_prime(p) {
        return Err(ArithError::NotPrime(p));
    }
    if p == 2 || p == 13 {
        return Err(ArithError::RamifiedPrime(p));
    }
    match root_count_mod_p(&[-2, -1, 0, 1], p) {
        0 => Ok(Frobenius3::Inert3),
        1 => Ok(Frobenius3::Partial),
        3 => Ok(Frobenius3::Split3),
        n => unreachable!("cubic with {n} roots at unramified prime {p}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primality_spot_checks() {
        assert!(is_prime(2) && is_prime(97) && is_prime(199));
        assert!(!is_prime(1) && !is_prime(91) && !is_prime(195));
        assert_eq!(primes_in(5, 20), vec![5, 7, 11, 13, 17, 19]);
    }

    #[test]
    fn legendre_spot_checks() {
        assert_eq!(legendre_i64(-1, 5), 1);
        assert_eq!(legendre(5, 7), -1);
        assert_eq!(legendre(0, 7), 0);
        assert_eq!(legendre_i64(-3, 13), 1);
    }

    #[test]
    fn legendre_minus_15_mod_7() {
        // -15 = 6 mod 7; squares mod 7 are {1,2,4}, so (6/7) = -1
        assert_eq!(legendre_i64(-15, 7), -1);
    }

    #[test]
    fn legendre_matches_table() {
        for p in [3u64, 5, 7, 11, 13, 17, 101] {
            let t = legendre_table(p);
            for x in 0..p {
                assert_eq!(t[x as usize] as i32, legendre(x, p), "p={p} x={x}");
            }
        }
    }

    #[test]
    fn sqrt_mod_all_residues() {
        for p in [3u64, 5, 7, 13, 17, 29, 41, 97] {
            for a in 0..p {
                match sqrt_mod(a, p) {
                    Some(r) => {
                        assert_eq!((r * r) % p, a, "p={p} a={a}");
                        assert!(r <= p - r || r == 0, "returned the larger root");
                    }
                    None => assert_eq!(legendre(a, p), -1),
                }
            }
        }
    }

    #[test]
    fn alpha_8_values() {
        assert_eq!(alpha_8(17), 1);
        assert_eq!(alpha_8(41), 1);
        assert_eq!(alpha_8(7), 0);
        assert_eq!(alpha_8(5), 0);
    }

    #[test]
    fn alpha_390_values() {
        assert_eq!(alpha_390(5), 0);
        assert_eq!(alpha_390(7), 0);
        // 3 = 4^2 mod 13, 6 + 4*4 = 22 = 9 = 3^2, a square
        assert_eq!(alpha_390(13), 2);
    }

    #[test]
    fn cubic_root_counter() {
        // x^3 - x = x(x-1)(x+1) has 3 roots mod 5
        assert_eq!(root_count_mod_p(&[0, -1, 0, 1], 5), 3);
        // x^2 + 1 has no roots mod 7
        assert_eq!(root_count_mod_p(&[1, 0, 1], 7), 0);
    }

    #[test]
    fn frobenius_classes() {
        assert_eq!(cubic_frobenius(5), Ok(Frobenius3::Inert3));
        assert_eq!(cubic_frobenius(17), Ok(Frobenius3::Inert3));
        for p in [19u64, 23, 29] {
            assert_ne!(cubic_frobenius(p), Ok(Frobenius3::Inert3), "p={p}");
        }
        assert_eq!(cubic_frobenius(13), Err(ArithError::RamifiedPrime(13)));
        assert_eq!(cubic_frobenius(2), Err(ArithError::RamifiedPrime(2)));
    }

    #[test]
    fn frobenius_proportions_roughly_match_s3() {
        // In S3 the class proportions are 1/6, 1/2, 1/3; just check all three
        // classes actually occur over a window of primes.
        let mut seen = [0usize; 3];
        for p in primes_in(3, 200) {
            if p == 13 {
                continue;
            }
            match cubic_frobenius(p).unwrap() {
                Frobenius3::Split3 => seen[0] += 1,
                Frobenius3::Partial => seen[1] += 1,
                Frobenius3::Inert3 => seen[2] += 1,
            }
        }
        assert!(seen.iter().all(|&c| c > 0), "classes seen: {seen:?}");
    }
}
