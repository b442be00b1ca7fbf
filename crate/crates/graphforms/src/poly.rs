//! Exact multivariate polynomial arithmetic.
//!
//! [`MultiPoly`] is a sparse polynomial over `Q` in a fixed number of
//! variables, stored as integer terms over a single positive denominator.
//! Exponent vectors are kept in a `BTreeMap`, whose `Vec<u8>` ordering is
//! exactly lexicographic with variable 0 most significant; the last map entry
//! is therefore the lex leading term, which the division and square-root
//! routines rely on.
//!
//! The representation is always normalized: no zero coefficients, and the gcd
//! of all numerators with the denominator is 1. Two polynomials are equal as
//! values iff their representations are equal.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Hard cap on the number of variables. Keeps exponent vectors small and
/// catches arity bookkeeping mistakes early.
pub const MAX_VARS: usize = 32;

/// Errors from polynomial operations that can fail for structural reasons.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolyError {
    #[error("polynomial arity {0} exceeds the supported maximum {MAX_VARS}")]
    TooManyVars(usize),
    #[error("exponent overflow: degrees above 255 in one variable are not supported")]
    ExponentOverflow,
    #[error("arity mismatch: {left} vs {right} variables")]
    ArityMismatch { left: usize, right: usize },
    #[error("degree {degree} in variable {var} is too high for this operation (max {max})")]
    DegreeTooHigh { var: usize, degree: u8, max: u8 },
    #[error("denominator is divisible by {p}, cannot reduce modulo {p}")]
    DenominatorNotInvertible { p: u64 },
    #[error("variable index {0} out of range")]
    VarOutOfRange(usize),
}

/// Sparse polynomial over `Q`: `(sum_i c_i * x^{e_i}) / den`.
///
/// Invariants: every exponent vector has length `nvars`; `den >= 1`;
/// no stored coefficient is zero; `gcd(gcd_i |c_i|, den) = 1`.
#[derive(Clone, PartialEq, Eq)]
pub struct MultiPoly {
    nvars: usize,
    terms: BTreeMap<Vec<u8>, BigInt>,
    den: BigUint,
}

impl MultiPoly {
    /// The zero polynomial in `nvars` variables.
    pub fn zero(nvars: usize) -> Self {
        assert!(nvars <= MAX_VARS, "arity {nvars} exceeds {MAX_VARS}");
        MultiPoly { nvars, terms: BTreeMap::new(), den: BigUint::one() }
    }

    /// The constant polynomial `c`.
    pub fn constant(nvars: usize, c: BigInt) -> Self {
        let mut p = Self::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(vec![0u8; nvars], c);
        }
        p
    }

    /// The constant rational `num/den`.
    pub fn rational(nvars: usize, num: BigInt, den: BigUint) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        let mut p = Self::zero(nvars);
        if !num.is_zero() {
            p.terms.insert(vec![0u8; nvars], num);
            p.den = den;
        }
        p.normalize();
        p
    }

    /// The single variable `x_v`.
    pub fn var(nvars: usize, v: usize) -> Self {
        assert!(v < nvars, "variable {v} out of range for arity {nvars}");
        let mut p = Self::zero(nvars);
        let mut e = vec![0u8; nvars];
        e[v] = 1;
        p.terms.insert(e, BigInt::one());
        p
    }

    /// Build from raw integer terms over a common denominator, normalizing.
    /// Terms with equal exponents are summed; zero coefficients dropped.
    pub fn from_terms<I>(nvars: usize, terms: I, den: BigUint) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Vec<u8>, BigInt)>,
    {
        if nvars > MAX_VARS {
            return Err(PolyError::TooManyVars(nvars));
        }
        assert!(!den.is_zero(), "zero denominator");
        let mut map: BTreeMap<Vec<u8>, BigInt> = BTreeMap::new();
        for (e, c) in terms {
            if e.len() != nvars {
                return Err(PolyError::ArityMismatch { left: e.len(), right: nvars });
            }
            if c.is_zero() {
                continue;
            }
            let entry = map.entry(e).or_insert_with(BigInt::zero);
            *entry += c;
            if entry.is_zero() {
                // re-borrow to remove; easiest is a retain pass later, but do it now
            }
        }
        map.retain(|_, c| !c.is_zero());
        let mut p = MultiPoly { nvars, terms: map, den };
        p.normalize();
        Ok(p)
    }

    fn normalize(&mut self) {
        if self.terms.is_empty() {
            self.den = BigUint::one();
            return;
        }
        let mut g = self.den.clone();
        for c in self.terms.values() {
            g = g.gcd(c.magnitude());
            if g.is_one() {
                break;
            }
        }
        if !g.is_one() {
            let gi = BigInt::from(g.clone());
            for c in self.terms.values_mut() {
                *c /= &gi;
            }
            self.den /= &g;
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of stored terms.
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Common denominator (always >= 1).
    pub fn den(&self) -> &BigUint {
        &self.den
    }

    /// Iterate over `(exponent vector, integer numerator)` pairs in ascending
    /// lex order.
    pub fn terms(&self) -> impl Iterator<Item = (&[u8], &BigInt)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), c))
    }

    /// Lex-leading term (largest exponent vector), if nonzero.
    pub fn leading_term(&self) -> Option<(&[u8], &BigInt)> {
        self.terms.iter().next_back().map(|(e, c)| (e.as_slice(), c))
    }

    fn check_arity(&self, other: &Self) -> Result<(), PolyError> {
        if self.nvars != other.nvars {
            return Err(PolyError::ArityMismatch { left: self.nvars, right: other.nvars });
        }
        Ok(())
    }

    fn add_impl(&self, other: &Self, negate_other: bool) -> Self {
        self.check_arity(other).expect("arity mismatch in add/sub");
        // a/d1 + b/d2 = (a*d2 + b*d1)/(d1*d2); normalize afterwards.
        let d1 = BigInt::from(self.den.clone());
        let d2 = BigInt::from(other.den.clone());
        let mut map: BTreeMap<Vec<u8>, BigInt> = BTreeMap::new();
        for (e, c) in &self.terms {
            map.insert(e.clone(), c * &d2);
        }
        for (e, c) in &other.terms {
            let add = if negate_other { -(c * &d1) } else { c * &d1 };
            let entry = map.entry(e.clone()).or_insert_with(BigInt::zero);
            *entry += add;
        }
        map.retain(|_, c| !c.is_zero());
        let mut p = MultiPoly { nvars: self.nvars, terms: map, den: &self.den * &other.den };
        p.normalize();
        p
    }

    fn mul_impl(&self, other: &Self) -> Self {
        self.check_arity(other).expect("arity mismatch in mul");
        let mut map: BTreeMap<Vec<u8>, BigInt> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let mut e = ea.clone();
                for (i, b) in eb.iter().enumerate() {
                    let (s, ov) = e[i].overflowing_add(*b);
                    if ov {
                        panic!("exponent overflow in multiplication");
                    }
                    e[i] = s;
                }
                let entry = map.entry(e).or_insert_with(BigInt::zero);
                *entry += ca * cb;
            }
        }
        map.retain(|_, c| !c.is_zero());
        let mut p = MultiPoly { nvars: self.nvars, terms: map, den: &self.den * &other.den };
        p.normalize();
        p
    }

    /// Multiply by an integer scalar.
    pub fn scale(&self, k: &BigInt) -> Self {
        if k.is_zero() {
            return Self::zero(self.nvars);
        }
        let mut p = self.clone();
        for c in p.terms.values_mut() {
            *c *= k;
        }
        p.normalize();
        p
    }

    /// Divide by a nonzero integer scalar (exactly, over `Q`).
    pub fn unscale(&self, k: &BigUint) -> Self {
        assert!(!k.is_zero(), "division by zero scalar");
        let mut p = self.clone();
        p.den = &p.den * k;
        p.normalize();
        p
    }

    /// `self^k` by repeated squaring.
    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::constant(self.nvars, BigInt::one());
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul_impl(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul_impl(&base);
            }
        }
        acc
    }

    /// Degree in variable `v` (0 for the zero polynomial).
    pub fn degree_in(&self, v: usize) -> u8 {
        self.terms.keys().map(|e| e[v]).max().unwrap_or(0)
    }

    /// Total degree (0 for the zero polynomial).
    pub fn total_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&x| x as u32).sum())
            .max()
            .unwrap_or(0)
    }

    /// `Some(d)` if every term has total degree exactly `d`.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let mut it = self.terms.keys().map(|e| e.iter().map(|&x| x as u32).sum::<u32>());
        let d = it.next()?;
        if it.all(|x| x == d) {
            Some(d)
        } else {
            None
        }
    }

    /// Indices of variables that actually occur.
    pub fn used_vars(&self) -> Vec<usize> {
        let mut used = vec![false; self.nvars];
        for e in self.terms.keys() {
            for (i, &x) in e.iter().enumerate() {
                if x > 0 {
                    used[i] = true;
                }
            }
        }
        (0..self.nvars).filter(|&i| used[i]).collect()
    }

    /// Coefficients with respect to `v`: entry `k` is the coefficient of
    /// `x_v^k` (with the `v` slot zeroed), length `degree_in(v) + 1`.
    pub fn coeffs_in_var(&self, v: usize) -> Vec<MultiPoly> {
        assert!(v < self.nvars);
        let d = self.degree_in(v) as usize;
        let mut out: Vec<MultiPoly> =
            (0..=d).map(|_| MultiPoly::zero(self.nvars)).collect();
        for (e, c) in &self.terms {
            let k = e[v] as usize;
            let mut e2 = e.clone();
            e2[v] = 0;
            out[k].terms.insert(e2, c.clone());
        }
        for p in &mut out {
            p.den = self.den.clone();
            p.normalize();
        }
        out
    }

    /// Substitute `x_v := g` (Horner in `v`).
    pub fn substitute(&self, v: usize, g: &MultiPoly) -> MultiPoly {
        assert!(v < self.nvars);
        self.check_arity(g).expect("arity mismatch in substitute");
        let coeffs = self.coeffs_in_var(v);
        let mut acc = MultiPoly::zero(self.nvars);
        for c in coeffs.into_iter().rev() {
            acc = acc.mul_impl(g).add_impl(&c, false);
        }
        acc
    }

    /// Substitute `x_v := 0` (fast path).
    pub fn substitute_zero(&self, v: usize) -> MultiPoly {
        assert!(v < self.nvars);
        let mut map = BTreeMap::new();
        for (e, c) in &self.terms {
            if e[v] == 0 {
                map.insert(e.clone(), c.clone());
            }
        }
        let mut p = MultiPoly { nvars: self.nvars, terms: map, den: self.den.clone() };
        p.normalize();
        p
    }

    /// Re-home the polynomial into `new_nvars` variables, sending old
    /// variable `i` to `old_to_new[i]`. Every used variable must be mapped
    /// injectively; unused variables may map anywhere in range.
    pub fn rename_vars(&self, new_nvars: usize, old_to_new: &[usize]) -> Result<MultiPoly, PolyError> {
        if new_nvars > MAX_VARS {
            return Err(PolyError::TooManyVars(new_nvars));
        }
        if old_to_new.len() != self.nvars {
            return Err(PolyError::ArityMismatch { left: old_to_new.len(), right: self.nvars });
        }
        let mut map = BTreeMap::new();
        for (e, c) in &self.terms {
            let mut e2 = vec![0u8; new_nvars];
            for (i, &x) in e.iter().enumerate() {
                if x > 0 {
                    let j = *old_to_new.get(i).ok_or(PolyError::VarOutOfRange(i))?;
                    if j >= new_nvars {
                        return Err(PolyError::VarOutOfRange(j));
                    }
                    if e2[j] != 0 {
                        // two used variables collided
                        return Err(PolyError::VarOutOfRange(j));
                    }
                    e2[j] = x;
                }
            }
            map.insert(e2, c.clone());
        }
        if map.len() != self.terms.len() {
            // distinct monomials collided, mapping not injective on support
            return Err(PolyError::ArityMismatch { left: self.nvars, right: new_nvars });
        }
        Ok(MultiPoly { nvars: new_nvars, terms: map, den: self.den.clone() })
    }

    /// Drop unused variables. Returns the compacted polynomial together with
    /// the list of surviving original indices (`new index -> old index`).
    pub fn compactify(&self) -> (MultiPoly, Vec<usize>) {
        let used = self.used_vars();
        let mut old_to_new = vec![usize::MAX; self.nvars];
        for (new, &old) in used.iter().enumerate() {
            old_to_new[old] = new;
        }
        // map unused variables to 0 (they have exponent 0 everywhere)
        for slot in old_to_new.iter_mut() {
            if *slot == usize::MAX {
                *slot = 0;
            }
        }
        let nv = used.len().max(1);
        let p = self.rename_vars(nv, &old_to_new).expect("compactify mapping is injective on support");
        (p, used)
    }

    /// Exact division: `Some(q)` with `self = q * d`, or `None` if `d` does
    /// not divide `self`. Lex leading-term division; over `Q` a division step
    /// can only fail on exponents, and for a single divisor that failure
    /// proves indivisibility.
    pub fn exact_div(&self, d: &MultiPoly) -> Option<MultiPoly> {
        self.check_arity(d).ok()?;
        if d.is_zero() {
            return None;
        }
        let mut r = self.clone();
        let mut q = MultiPoly::zero(self.nvars);
        let (elead, clead) = {
            let (e, c) = d.leading_term().unwrap();
            (e.to_vec(), c.clone())
        };
        while !r.is_zero() {
            let (er, cr) = r.leading_term().unwrap();
            let mut et = vec![0u8; self.nvars];
            for i in 0..self.nvars {
                et[i] = er[i].checked_sub(elead[i])?;
            }
            // t = (cr/r.den) / (clead/d.den) * x^et = cr*d.den / (clead*r.den) * x^et
            let num = cr * BigInt::from(d.den.clone());
            let den_i = &clead * BigInt::from(r.den.clone());
            // represent num/den_i as BigInt pair with positive denominator
            let (num, den_u) = match den_i.sign() {
                Sign::Minus => (-num, den_i.magnitude().clone()),
                _ => (num, den_i.magnitude().clone()),
            };
            let mut t = MultiPoly::zero(self.nvars);
            t.terms.insert(et, num);
            t.den = den_u;
            t.normalize();
            q = q.add_impl(&t, false);
            r = r.add_impl(&t.mul_impl(d), true);
        }
        Some(q)
    }

    /// Square root in `Q[x]`: `Some(s)` with `s^2 = self` and positive lex
    /// leading coefficient, or `None` if no such polynomial exists.
    pub fn poly_sqrt(&self) -> Option<MultiPoly> {
        if self.is_zero() {
            return Some(self.clone());
        }
        let (elead, clead) = self.leading_term().unwrap();
        // Leading exponent must be even in every slot.
        let mut es = vec![0u8; self.nvars];
        for i in 0..self.nvars {
            if elead[i] % 2 != 0 {
                return None;
            }
            es[i] = elead[i] / 2;
        }
        // Leading coefficient clead/den must be a square in Q.
        if clead.sign() == Sign::Minus {
            return None;
        }
        let g = clead.magnitude().gcd(&self.den);
        let num_red = clead.magnitude() / &g;
        let den_red = &self.den / &g;
        let ns = num_red.sqrt();
        let ds = den_red.sqrt();
        if &ns * &ns != num_red || &ds * &ds != den_red {
            return None;
        }
        // s0 = sqrt(leading term); but the reduced num/den square roots must be
        // recombined over the original denominator: leading coeff = n/d reduced,
        // sqrt = sqrt(n)/sqrt(d).
        let mut s = MultiPoly::zero(self.nvars);
        s.terms.insert(es, BigInt::from(ns));
        s.den = ds;
        s.normalize();

        let two = MultiPoly::constant(self.nvars, BigInt::from(2));
        let twos0 = two.mul_impl(&s);
        let mut r = self.add_impl(&s.mul_impl(&s), true);
        let mut steps = 0usize;
        while !r.is_zero() {
            steps += 1;
            if steps > 100_000 {
                return None;
            }
            // t = LT(r) / (2*s0); if that fails, not a square.
            let (er, cr) = r.leading_term().unwrap();
            let (e0, c0) = twos0.leading_term().unwrap();
            let mut et = vec![0u8; self.nvars];
            for i in 0..self.nvars {
                et[i] = er[i].checked_sub(e0[i])?;
            }
            let num = cr * BigInt::from(twos0.den.clone());
            let den_i = c0 * BigInt::from(r.den.clone());
            let (num, den_u) = match den_i.sign() {
                Sign::Minus => (-num, den_i.magnitude().clone()),
                _ => (num, den_i.magnitude().clone()),
            };
            let mut t = MultiPoly::zero(self.nvars);
            t.terms.insert(et, num);
            t.den = den_u;
            t.normalize();
            if t.is_zero() {
                return None;
            }
            s = s.add_impl(&t, false);
            r = self.add_impl(&s.mul_impl(&s), true);
        }
        // normalize global sign: leading coefficient positive
        if let Some((_, c)) = s.leading_term() {
            if c.sign() == Sign::Minus {
                s = s.scale(&BigInt::from(-1));
            }
        }
        Some(s)
    }

    /// Discriminant with respect to `v` for polynomials of degree <= 2 in `v`:
    /// `c1^2 - 4*c0*c2` where `self = c2 v^2 + c1 v + c0`.
    pub fn disc_wrt(&self, v: usize) -> Result<MultiPoly, PolyError> {
        if v >= self.nvars {
            return Err(PolyError::VarOutOfRange(v));
        }
        let d = self.degree_in(v);
        if d > 2 {
            return Err(PolyError::DegreeTooHigh { var: v, degree: d, max: 2 });
        }
        let mut cs = self.coeffs_in_var(v);
        while cs.len() < 3 {
            cs.push(MultiPoly::zero(self.nvars));
        }
        let four = BigInt::from(4);
        Ok(cs[1].mul_impl(&cs[1]).add_impl(&cs[0].mul_impl(&cs[2]).scale(&four), true))
    }

    /// Reduce modulo a prime `p`, clearing the denominator. Fails if `p`
    /// divides the denominator.
    pub fn reduce_mod_p(&self, p: u64) -> Result<FpPoly, PolyError> {
        assert!(p >= 2 && p < (1u64 << 32), "prime out of supported range");
        let pp = BigUint::from(p);
        let den_mod = (&self.den % &pp).to_u64().unwrap();
        if den_mod == 0 {
            return Err(PolyError::DenominatorNotInvertible { p });
        }
        let den_inv = inv_mod_u64(den_mod, p).expect("nonzero residue mod prime is invertible");
        let pi = BigInt::from(p);
        let mut terms = Vec::new();
        for (e, c) in &self.terms {
            let mut r = (c % &pi).to_i64().unwrap();
            if r < 0 {
                r += p as i64;
            }
            let cv = mul_mod_u64(r as u64, den_inv, p);
            if cv != 0 {
                terms.push((e.clone(), cv));
            }
        }
        Ok(FpPoly { nvars: self.nvars, p, terms })
    }

    /// Evaluate at an integer point; returns `(numerator, denominator)`.
    pub fn eval_bigint(&self, point: &[BigInt]) -> (BigInt, BigUint) {
        assert_eq!(point.len(), self.nvars);
        let mut acc = BigInt::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (i, &x) in e.iter().enumerate() {
                for _ in 0..x {
                    t *= &point[i];
                }
            }
            acc += t;
        }
        (acc, self.den.clone())
    }

    /// Render with the given variable names (defaults to `x0..` via `Display`).
    pub fn display_with(&self, names: &[String]) -> String {
        assert_eq!(names.len(), self.nvars, "need one name per variable");
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut body = String::new();
        let mut first = true;
        for (e, c) in self.terms.iter().rev() {
            let neg = c.sign() == Sign::Minus;
            let mag = c.magnitude();
            if first {
                if neg {
                    body.push('-');
                }
                first = false;
            } else if neg {
                body.push_str(" - ");
            } else {
                body.push_str(" + ");
            }
            let mut factors: Vec<String> = Vec::new();
            let is_const = e.iter().all(|&x| x == 0);
            if !mag.is_one() || is_const {
                factors.push(mag.to_string());
            }
            for (i, &x) in e.iter().enumerate() {
                match x {
                    0 => {}
                    1 => factors.push(names[i].clone()),
                    _ => factors.push(format!("{}^{}", names[i], x)),
                }
            }
            body.push_str(&factors.join("*"));
        }
        if self.den.is_one() {
            body
        } else {
            format!("({})/{}", body, self.den)
        }
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (0..self.nvars).map(|i| format!("x{i}")).collect();
        f.write_str(&self.display_with(&names))
    }
}

impl fmt::Debug for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MultiPoly[{} vars]({})", self.nvars, self)
    }
}

impl Add for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        self.add_impl(rhs, false)
    }
}

impl Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        self.add_impl(rhs, true)
    }
}

impl Mul for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        self.mul_impl(rhs)
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        self.scale(&BigInt::from(-1))
    }
}

/// Polynomial over `F_p`, produced by [`MultiPoly::reduce_mod_p`].
/// Coefficients are in `[0, p)`; `p < 2^32` so products fit in `u64`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FpPoly {
    pub nvars: usize,
    pub p: u64,
    /// `(exponent vector, coefficient)` pairs, ascending lex, no zeros.
    pub terms: Vec<(Vec<u8>, u64)>,
}

impl FpPoly {
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree_in(&self, v: usize) -> u8 {
        self.terms.iter().map(|(e, _)| e[v]).max().unwrap_or(0)
    }

    /// Evaluate at a point with coordinates in `[0, p)`.
    pub fn eval(&self, point: &[u64]) -> u64 {
        debug_assert_eq!(point.len(), self.nvars);
        let p = self.p;
        let mut acc: u64 = 0;
        for (e, c) in &self.terms {
            let mut t = *c;
            for (i, &x) in e.iter().enumerate() {
                if x > 0 {
                    t = mul_mod_u64(t, pow_mod_u64(point[i], x as u64, p), p);
                }
            }
            acc = (acc + t) % p;
        }
        acc
    }
}

/// `a*b mod p` for `p < 2^32`.
#[inline]
pub fn mul_mod_u64(a: u64, b: u64, p: u64) -> u64 {
    debug_assert!(a < p && b < p);
    (a.wrapping_mul(b)) % p
}

/// `b^e mod p`.
pub fn pow_mod_u64(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64 % p;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod_u64(acc, b, p);
        }
        b = mul_mod_u64(b, b, p);
        e >>= 1;
    }
    acc
}

/// Modular inverse of `a` mod `m` (None if not coprime).
pub fn inv_mod_u64(a: u64, m: u64) -> Option<u64> {
    let (mut t, mut new_t): (i128, i128) = (0, 1);
    let (mut r, mut new_r): (i128, i128) = (m as i128, (a % m) as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    if r != 1 {
        return None;
    }
    let mut t = t % m as i128;
    if t < 0 {
        t += m as i128;
    }
    Some(t as u64)
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// JSON shape for polynomial fixtures:
/// `{"vars": n, "den": "1", "terms": [{"e": [..], "c": ".."}]}`.
#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct PolyDto {
    pub vars: usize,
    pub den: String,
    pub terms: Vec<TermDto>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct TermDto {
    pub e: Vec<u8>,
    pub c: String,
}

impl From<&MultiPoly> for PolyDto {
    fn from(p: &MultiPoly) -> Self {
        PolyDto {
            vars: p.nvars,
            den: p.den.to_string(),
            terms: p
                .terms
                .iter()
                .map(|(e, c)| TermDto { e: e.clone(), c: c.to_string() })
                .collect(),
        }
    }
}

impl TryFrom<&PolyDto> for MultiPoly {
    type Error = String;

    fn try_from(dto: &PolyDto) -> Result<Self, String> {
        let den: BigUint = dto.den.parse().map_err(|e| format!("bad denominator: {e}"))?;
        if den.is_zero() {
            return Err("zero denominator".into());
        }
        let mut terms = Vec::with_capacity(dto.terms.len());
        for t in &dto.terms {
            let c: BigInt = t.c.parse().map_err(|e| format!("bad coefficient: {e}"))?;
            terms.push((t.e.clone(), c));
        }
        MultiPoly::from_terms(dto.vars, terms, den).map_err(|e| e.to_string())
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("unexpected character {0:?} at byte {1}")]
    UnexpectedChar(char, usize),
    #[error("unknown variable {0:?}")]
    UnknownVariable(String),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("expected {expected} at token {at}")]
    Unexpected { expected: &'static str, at: String },
    #[error("exponent too large: {0}")]
    ExponentTooLarge(String),
    #[error("{0}")]
    Poly(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Int(BigUint),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<Tok>, ParseError> {
    let mut toks = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                toks.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                toks.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                toks.push(Tok::Star);
                i += 1;
            }
            '/' => {
                toks.push(Tok::Slash);
                i += 1;
            }
            '^' => {
                toks.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                toks.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                toks.push(Tok::RParen);
                i += 1;
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let n: BigUint = src[start..i].parse().expect("digits parse as BigUint");
                toks.push(Tok::Int(n));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                toks.push(Tok::Ident(src[start..i].to_string()));
            }
            _ => return Err(ParseError::UnexpectedChar(c, i)),
        }
    }
    Ok(toks)
}

struct Parser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    vars: &'a [&'a str],
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn nvars(&self) -> usize {
        self.vars.len()
    }

    fn expr(&mut self) -> Result<MultiPoly, ParseError> {
        let mut negate = false;
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.next();
            negate = true;
        } else if matches!(self.peek(), Some(Tok::Plus)) {
            self.next();
        }
        let mut acc = self.term()?;
        if negate {
            acc = -&acc;
        }
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.next();
                    let t = self.term()?;
                    acc = &acc + &t;
                }
                Some(Tok::Minus) => {
                    self.next();
                    let t = self.term()?;
                    acc = &acc - &t;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<MultiPoly, ParseError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.next();
                    let f = self.factor()?;
                    acc = &acc * &f;
                }
                Some(Tok::Slash) => {
                    self.next();
                    match self.next() {
                        Some(Tok::Int(n)) => {
                            if n.is_zero() {
                                return Err(ParseError::Poly("division by zero".into()));
                            }
                            acc = acc.unscale(&n);
                        }
                        other => {
                            return Err(ParseError::Unexpected {
                                expected: "integer after '/'",
                                at: format!("{other:?}"),
                            })
                        }
                    }
                }
                // implicit multiplication for adjacent factors: "2x0" etc. is
                // not produced by Display, but accept it for hand input
                Some(Tok::Ident(_)) | Some(Tok::LParen) => {
                    let f = self.factor()?;
                    acc = &acc * &f;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<MultiPoly, ParseError> {
        let base = match self.next() {
            Some(Tok::Int(n)) => MultiPoly::constant(self.nvars(), BigInt::from(n)),
            Some(Tok::Ident(name)) => {
                let idx = self
                    .vars
                    .iter()
                    .position(|v| *v == name)
                    .ok_or(ParseError::UnknownVariable(name))?;
                MultiPoly::var(self.nvars(), idx)
            }
            Some(Tok::LParen) => {
                let e = self.expr()?;
                match self.next() {
                    Some(Tok::RParen) => e,
                    other => {
                        return Err(ParseError::Unexpected {
                            expected: "closing parenthesis",
                            at: format!("{other:?}"),
                        })
                    }
                }
            }
            Some(Tok::Minus) => {
                let f = self.factor()?;
                -&f
            }
            other => {
                return Err(ParseError::Unexpected {
                    expected: "integer, variable, or '('",
                    at: format!("{other:?}"),
                })
            }
        };
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.next();
            match self.next() {
                Some(Tok::Int(n)) => {
                    let k = n
                        .to_u32()
                        .filter(|&k| k <= 255 * 8)
                        .ok_or_else(|| ParseError::ExponentTooLarge(n.to_string()))?;
                    Ok(base.pow(k))
                }
                other => Err(ParseError::Unexpected {
                    expected: "integer exponent",
                    at: format!("{other:?}"),
                }),
            }
        } else {
            Ok(base)
        }
    }
}

/// Parse a polynomial from a human-readable expression over the given
/// variable names, e.g. `parse_poly("x0^2*x1 - x2/4 + 3", &["x0","x1","x2"])`.
pub fn parse_poly(src: &str, vars: &[&str]) -> Result<MultiPoly, ParseError> {
    if vars.len() > MAX_VARS {
        return Err(ParseError::Poly(PolyError::TooManyVars(vars.len()).to_string()));
    }
    let toks = tokenize(src)?;
    if toks.is_empty() {
        return Err(ParseError::UnexpectedEnd);
    }
    let mut p = Parser { toks, pos: 0, vars };
    let out = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(ParseError::Unexpected {
            expected: "end of input",
            at: format!("{:?}", p.toks[p.pos]),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn xp(src: &str, vars: &[&str]) -> MultiPoly {
        parse_poly(src, vars).unwrap()
    }

    #[test]
    fn zero_and_constants() {
        let z = MultiPoly::zero(3);
        assert!(z.is_zero());
        assert_eq!(z.to_string(), "0");
        let c = MultiPoly::rational(2, BigInt::from(6), BigUint::from(4u32));
        assert_eq!(c.to_string(), "(3)/2");
    }

    #[test]
    fn parse_display_round_trip_examples() {
        let vars = ["x0", "x1", "x2"];
        for src in [
            "x0^2*x1 + x2",
            "-x0*x1 + 2*x2 - 1",
            "(x0 + 2*x1)/3",
            "x0*x1*x2",
            "(x0 + x1)*(x0 - x1)",
            "3",
            "0",
        ] {
            let p = xp(src, &vars);
            let rendered = p.to_string();
            let q = xp(&rendered, &vars);
            assert_eq!(p, q, "round trip failed for {src}: rendered {rendered}");
        }
    }

    #[test]
    fn implicit_multiplication_and_whitespace() {
        let vars = ["x0", "x1"];
        assert_eq!(xp("2x0", &vars), xp("2*x0", &vars));
        assert_eq!(xp("x0 ( x0 + x1 )", &vars), xp("x0^2 + x0*x1", &vars));
    }

    #[test]
    fn addition_with_denominators() {
        let vars = ["x0"];
        let a = xp("x0/2", &vars);
        let b = xp("x0/3", &vars);
        assert_eq!(&a + &b, xp("5*x0/6", &vars));
        assert_eq!(&a - &a, MultiPoly::zero(1));
    }

    #[test]
    fn exact_div_difference_of_squares() {
        let vars = ["x0", "x1"];
        let f = xp("x0^2 - x1^2", &vars);
        let d = xp("x0 + x1", &vars);
        assert_eq!(f.exact_div(&d), Some(xp("x0 - x1", &vars)));
        let g = xp("x0^2 + x1^2", &vars);
        assert_eq!(g.exact_div(&d), None);
    }

    #[test]
    fn disc_and_sqrt_of_factored_quadratic() {
        // (x0 + x1)(2 x0 + x2): discriminant in x0 is a perfect square.
        let vars = ["x0", "x1", "x2"];
        let f = xp("(x0 + x1)*(2*x0 + x2)", &vars);
        let d = f.disc_wrt(0).unwrap();
        assert_eq!(d, xp("(2*x1 - x2)^2", &vars));
        let s = d.poly_sqrt().unwrap();
        assert_eq!(s, xp("2*x1 - x2", &vars));
        // and a non-square discriminant has no polynomial square root
        let g = xp("x0^2 + x1*x2", &vars);
        assert_eq!(g.disc_wrt(0).unwrap().poly_sqrt(), None);
    }

    #[test]
    fn disc_rejects_cubics() {
        let vars = ["x0"];
        let f = xp("x0^3 + 1", &vars);
        assert!(matches!(f.disc_wrt(0), Err(PolyError::DegreeTooHigh { .. })));
    }

    #[test]
    fn sqrt_rejects_negative_leading() {
        let vars = ["x0"];
        assert_eq!(xp("-x0^2", &vars).poly_sqrt(), None);
    }

    #[test]
    fn sqrt_with_denominator() {
        let vars = ["x0", "x1"];
        let f = xp("(x0^2 + 2*x0*x1 + x1^2)/4", &vars);
        assert_eq!(f.poly_sqrt(), Some(xp("(x0 + x1)/2", &vars)));
    }

    #[test]
    fn reduce_mod_p_basics() {
        let vars = ["x0"];
        let f = xp("x0 - 5", &vars);
        let fp = f.reduce_mod_p(5).unwrap();
        assert_eq!(fp.terms, vec![(vec![1u8], 1u64)]);
        let g = xp("x0/4", &vars);
        assert!(matches!(
            g.reduce_mod_p(2),
            Err(PolyError::DenominatorNotInvertible { p: 2 })
        ));
        // 1/4 mod 5 = 4 since 4*4 = 16 = 1
        let gp = g.reduce_mod_p(5).unwrap();
        assert_eq!(gp.terms, vec![(vec![1u8], 4u64)]);
    }

    #[test]
    fn substitution_horner() {
        let vars = ["x0", "x1"];
        let f = xp("x0^2 + x1", &vars);
        let g = xp("x1 + 1", &vars);
        assert_eq!(f.substitute(0, &g), xp("x1^2 + 3*x1 + 1", &vars));
        assert_eq!(f.substitute_zero(0), xp("x1", &vars));
    }

    #[test]
    fn coeffs_in_var_reassemble() {
        let vars = ["x0", "x1", "x2"];
        let f = xp("x0^2*x1 + x0*x2 - x0 + 7*x1*x2", &vars);
        let cs = f.coeffs_in_var(0);
        assert_eq!(cs.len(), 3);
        let x0 = MultiPoly::var(3, 0);
        let mut acc = MultiPoly::zero(3);
        for (k, c) in cs.iter().enumerate() {
            acc = &acc + &(&x0.pow(k as u32) * c);
        }
        assert_eq!(acc, f);
    }

    #[test]
    fn homogeneity_detection() {
        let vars = ["x0", "x1", "x2"];
        assert_eq!(
            xp("x0*x1 + x0*x2 + x1*x2", &vars).homogeneous_degree(),
            Some(2)
        );
        assert_eq!(xp("x0^2 + x1", &vars).homogeneous_degree(), None);
    }

    #[test]
    fn compactify_drops_gaps() {
        let vars = ["x0", "x1", "x2", "x3"];
        let f = xp("x0*x3 + x3^2", &vars);
        let (g, surviving) = f.compactify();
        assert_eq!(surviving, vec![0, 3]);
        assert_eq!(g, xp("a*b + b^2", &["a", "b"]));
    }

    #[test]
    fn eval_bigint_matches_mod_p() {
        let vars = ["x0", "x1"];
        let f = xp("3*x0^2*x1 - x1 + 2", &vars);
        let fp = f.reduce_mod_p(7).unwrap();
        for a in 0..7u64 {
            for b in 0..7u64 {
                let (num, den) = f.eval_bigint(&[BigInt::from(a), BigInt::from(b)]);
                assert_eq!(den, BigUint::one());
                let want: BigInt = ((num % 7) + 7) % 7;
                assert_eq!(fp.eval(&[a, b]), want.to_u64().unwrap());
            }
        }
    }

    #[test]
    fn dto_round_trip() {
        let vars = ["x0", "x1"];
        let f = xp("(3*x0^2 - x1)/7", &vars);
        let dto = PolyDto::from(&f);
        let json = serde_json::to_string(&dto).unwrap();
        let back: PolyDto = serde_json::from_str(&json).unwrap();
        assert_eq!(MultiPoly::try_from(&back).unwrap(), f);
    }

    // ---- property tests ----

    fn arb_poly(nvars: usize) -> impl Strategy<Value = MultiPoly> {
        let term = (
            proptest::collection::vec(0u8..4, nvars),
            -9i64..10,
        );
        (proptest::collection::vec(term, 0..6), 1u64..9).prop_map(move |(ts, d)| {
            MultiPoly::from_terms(
                nvars,
                ts.into_iter().map(|(e, c)| (e, BigInt::from(c))),
                BigUint::from(d),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn ring_laws((a, b, c) in (arb_poly(3), arb_poly(3), arb_poly(3))) {
            prop_assert_eq!(&a + &b, &b + &a);
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&a - &a, MultiPoly::zero(3));
        }

        #[test]
        fn exact_div_recovers_factor((a, b) in (arb_poly(3), arb_poly(3))) {
            prop_assume!(!b.is_zero());
            let prod = &a * &b;
            prop_assert_eq!(prod.exact_div(&b), Some(a));
        }

        #[test]
        fn sqrt_recovers_square(a in arb_poly(3)) {
            let sq = &a * &a;
            let s = sq.poly_sqrt();
            prop_assert!(s.is_some());
            let s = s.unwrap();
            prop_assert_eq!(&s * &s, sq);
            if let Some((_, c)) = s.leading_term() {
                prop_assert!(c.sign() != num_bigint::Sign::Minus);
            }
        }

        #[test]
        fn display_parse_round_trip(a in arb_poly(3)) {
            let vars = ["x0", "x1", "x2"];
            let s = a.to_string();
            let b = parse_poly(&s, &vars).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn mod_p_is_ring_hom((a, b) in (arb_poly(2), arb_poly(2))) {
            let p = 101u64;
            let fa = a.reduce_mod_p(p);
            let fb = b.reduce_mod_p(p);
            prop_assume!(fa.is_ok() && fb.is_ok());
            let (fa, fb) = (fa.unwrap(), fb.unwrap());
            let sum = (&a + &b).reduce_mod_p(p).unwrap();
            let prod = (&a * &b).reduce_mod_p(p).unwrap();
            for x in [0u64, 1, 2, 57, 100] {
                for y in [0u64, 3, 99] {
                    let pt = [x, y];
                    prop_assert_eq!(sum.eval(&pt), (fa.eval(&pt) + fb.eval(&pt)) % p);
                    prop_assert_eq!(prod.eval(&pt), mul_mod_u64(fa.eval(&pt), fb.eval(&pt), p));
                }
            }
        }
    }
}
