//! Dense univariate polynomials and binary forms over a [`Field`].
//!
//! Polynomials are plain coefficient vectors (least degree first, no trailing
//! zeros); all arithmetic goes through a [`PolyRing`] that borrows the field.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::ff::{prime_divisors, Field};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("division by the zero polynomial")]
    DivisionByZero,
    #[error("operation undefined for the zero polynomial")]
    ZeroPolynomial,
    #[error("operation requires degree at least 1")]
    DegreeZero,
    #[error("polynomial is not squarefree")]
    NotSquarefree,
    #[error("operation undefined for the zero form")]
    ZeroForm,
    #[error("equal-degree splitting failed after {0} attempts")]
    SplittingFailed(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UPoly<E> {
    coeffs: Vec<E>,
}

impl<E> UPoly<E> {
    pub fn coeffs(&self) -> &[E] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<E> {
        self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn lead(&self) -> Option<&E> {
        self.coeffs.last()
    }
}

/// Homogeneous binary form of fixed degree `d`; index `i` holds the
/// coefficient of `s^i t^(d-i)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryForm<E> {
    coeffs: Vec<E>,
}

impl<E: Copy> BinaryForm<E> {
    pub fn new(coeffs: Vec<E>) -> Self {
        assert!(!coeffs.is_empty(), "a binary form has d + 1 coefficients");
        BinaryForm { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[E] {
        &self.coeffs
    }
}

/// Sorted multiset of positive integers, e.g. the degrees of the irreducible
/// factors of a squarefree polynomial.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Partition(Vec<u32>);

impl Partition {
    pub fn new(mut parts: Vec<u32>) -> Self {
        parts.retain(|&p| p > 0);
        parts.sort_unstable();
        Partition(parts)
    }

    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Number of parts equal to 1 (the rational roots, for a factorization type).
    pub fn ones(&self) -> usize {
        self.0.iter().filter(|&&p| p == 1).count()
    }

    /// Multiplicity of each part size, as `(part, count)` ascending.
    pub fn multiplicities(&self) -> Vec<(u32, u32)> {
        let mut out: Vec<(u32, u32)> = Vec::new();
        for &p in &self.0 {
            match out.last_mut() {
                Some((q, c)) if *q == p => *c += 1,
                _ => out.push((p, 1)),
            }
        }
        out
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.0.iter().map(|p| p.to_string()).collect();
        write!(f, "{}", s.join("+"))
    }
}

impl FromStr for Partition {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().is_empty() {
            return Ok(Partition::default());
        }
        let parts = s
            .split('+')
            .map(|t| t.trim().parse::<u32>())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Partition::new(parts))
    }
}

impl Serialize for Partition {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Partition {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Polynomial arithmetic over a borrowed field.
pub struct PolyRing<'a, F: Field> {
    field: &'a F,
}

impl<'a, F: Field> Clone for PolyRing<'a, F> {
    fn clone(&self) -> Self {
        PolyRing { field: self.field }
    }
}

impl<'a, F: Field> Copy for PolyRing<'a, F> {}

type Poly<F> = UPoly<<F as Field>::Elem>;

impl<'a, F: Field> PolyRing<'a, F> {
    pub fn new(field: &'a F) -> Self {
        PolyRing { field }
    }

    pub fn field(&self) -> &'a F {
        self.field
    }

    pub fn from_coeffs(&self, mut coeffs: Vec<F::Elem>) -> Poly<F> {
        let f = self.field;
        while coeffs.last().is_some_and(|&c| f.is_zero(c)) {
            coeffs.pop();
        }
        UPoly { coeffs }
    }

    pub fn from_ints(&self, coeffs: &[i64]) -> Poly<F> {
        self.from_coeffs(coeffs.iter().map(|&c| self.field.from_i64(c)).collect())
    }

    pub fn zero(&self) -> Poly<F> {
        UPoly { coeffs: Vec::new() }
    }

    pub fn one(&self) -> Poly<F> {
        self.constant(self.field.one())
    }

    pub fn constant(&self, c: F::Elem) -> Poly<F> {
        self.from_coeffs(vec![c])
    }

    /// The monomial `x`.
    pub fn x(&self) -> Poly<F> {
        UPoly {
            coeffs: vec![self.field.zero(), self.field.one()],
        }
    }

    pub fn is_one(&self, f: &Poly<F>) -> bool {
        f.coeffs.len() == 1 && f.coeffs[0] == self.field.one()
    }

    pub fn add(&self, a: &Poly<F>, b: &Poly<F>) -> Poly<F> {
        let f = self.field;
        let n = a.coeffs.len().max(b.coeffs.len());
        let out = (0..n)
            .map(|i| {
                let x = a.coeffs.get(i).copied().unwrap_or_else(|| f.zero());
                let y = b.coeffs.get(i).copied().unwrap_or_else(|| f.zero());
                f.add(x, y)
            })
            .collect();
        self.from_coeffs(out)
    }

    pub fn neg(&self, a: &Poly<F>) -> Poly<F> {
        UPoly {
            coeffs: a.coeffs.iter().map(|&c| self.field.neg(c)).collect(),
        }
    }

    pub fn sub(&self, a: &Poly<F>, b: &Poly<F>) -> Poly<F> {
        self.add(a, &self.neg(b))
    }

    pub fn scale(&self, a: &Poly<F>, c: F::Elem) -> Poly<F> {
        self.from_coeffs(a.coeffs.iter().map(|&x| self.field.mul(x, c)).collect())
    }

    pub fn mul(&self, a: &Poly<F>, b: &Poly<F>) -> Poly<F> {
        if a.is_zero() || b.is_zero() {
            return self.zero();
        }
        let f = self.field;
        let mut out = vec![f.zero(); a.coeffs.len() + b.coeffs.len() - 1];
        for (i, &x) in a.coeffs.iter().enumerate() {
            if f.is_zero(x) {
                continue;
            }
            for (j, &y) in b.coeffs.iter().enumerate() {
                out[i + j] = f.add(out[i + j], f.mul(x, y));
            }
        }
        self.from_coeffs(out)
    }

    pub fn divmod(&self, a: &Poly<F>, b: &Poly<F>) -> Result<(Poly<F>, Poly<F>), PolyError> {
        let f = self.field;
        let db = b.degree().ok_or(PolyError::DivisionByZero)?;
        let lead_inv = f.inv(*b.lead().unwrap()).unwrap();
        let mut rem = a.coeffs.clone();
        if rem.len() <= db {
            return Ok((self.zero(), self.from_coeffs(rem)));
        }
        let mut quot = vec![f.zero(); rem.len() - db];
        for k in (db..rem.len()).rev() {
            let c = f.mul(rem[k], lead_inv);
            quot[k - db] = c;
            if f.is_zero(c) {
                continue;
            }
            for (i, &bi) in b.coeffs.iter().enumerate() {
                rem[k - db + i] = f.sub(rem[k - db + i], f.mul(c, bi));
            }
        }
        rem.truncate(db);
        Ok((self.from_coeffs(quot), self.from_coeffs(rem)))
    }

    /// Remainder modulo a monic `m`, in place of a full division.
    fn rem_monic(&self, mut a: Vec<F::Elem>, m: &Poly<F>) -> Poly<F> {
        let f = self.field;
        let dm = m.coeffs.len() - 1;
        if a.len() > dm {
            for k in (dm..a.len()).rev() {
                let c = a[k];
                if f.is_zero(c) {
                    continue;
                }
                for i in 0..dm {
                    a[k - dm + i] = f.sub(a[k - dm + i], f.mul(c, m.coeffs[i]));
                }
            }
            a.truncate(dm);
        }
        self.from_coeffs(a)
    }

    pub fn rem(&self, a: &Poly<F>, b: &Poly<F>) -> Result<Poly<F>, PolyError> {
        Ok(self.divmod(a, b)?.1)
    }

    pub fn monic(&self, a: &Poly<F>) -> Poly<F> {
        match a.lead() {
            None => self.zero(),
            Some(&l) => self.scale(a, self.field.inv(l).unwrap()),
        }
    }

    /// Monic gcd; `gcd(0, 0) = 0`.
    pub fn gcd(&self, a: &Poly<F>, b: &Poly<F>) -> Poly<F> {
        let (mut x, mut y) = (a.clone(), b.clone());
        while !y.is_zero() {
            let r = self.rem(&x, &y).unwrap();
            x = y;
            y = r;
        }
        self.monic(&x)
    }

    pub fn derivative(&self, a: &Poly<F>) -> Poly<F> {
        let f = self.field;
        if a.coeffs.len() <= 1 {
            return self.zero();
        }
        let out = a.coeffs[1..]
            .iter()
            .enumerate()
            .map(|(i, &c)| f.mul(c, f.from_u64(i as u64 + 1)))
            .collect();
        self.from_coeffs(out)
    }

    pub fn eval(&self, a: &Poly<F>, x: F::Elem) -> F::Elem {
        let f = self.field;
        a.coeffs.iter().rev().fold(f.zero(), |acc, &c| f.add(f.mul(acc, x), c))
    }

    pub fn exact_div(&self, a: &Poly<F>, b: &Poly<F>) -> Poly<F> {
        let (q, r) = self.divmod(a, b).expect("divisor is nonzero");
        debug_assert!(r.is_zero(), "inexact division");
        q
    }

    /// `a^e mod m` for monic `m`.
    pub fn pow_mod(&self, a: &Poly<F>, mut e: u64, m: &Poly<F>) -> Poly<F> {
        let mut base = self.rem_monic(a.coeffs.clone(), m);
        let mut acc = self.rem_monic(vec![self.field.one()], m);
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul_mod(&acc, &base, m);
            }
            e >>= 1;
            if e > 0 {
                base = self.mul_mod(&base, &base, m);
            }
        }
        acc
    }

    pub fn pow_mod_big(&self, a: &Poly<F>, e: &BigUint, m: &Poly<F>) -> Poly<F> {
        let base = self.rem_monic(a.coeffs.clone(), m);
        let mut acc = self.rem_monic(vec![self.field.one()], m);
        for i in (0..e.bits()).rev() {
            acc = self.mul_mod(&acc, &acc, m);
            if e.bit(i) {
                acc = self.mul_mod(&acc, &base, m);
            }
        }
        acc
    }

    pub fn mul_mod(&self, a: &Poly<F>, b: &Poly<F>, m: &Poly<F>) -> Poly<F> {
        self.rem_monic(self.mul(a, b).coeffs, m)
    }

    /// `a^|F| mod m` for monic `m`.
    pub fn frobenius_mod(&self, a: &Poly<F>, m: &Poly<F>) -> Poly<F> {
        match self.field.order() {
            Some(q) => self.pow_mod(a, q, m),
            None => {
                let p = self.field.characteristic();
                let mut x = a.clone();
                for _ in 0..self.field.prime_degree() {
                    x = self.pow_mod(&x, p, m);
                }
                x
            }
        }
    }

    /// Rabin's test; `f` need not be monic.
    pub fn is_irreducible(&self, f: &Poly<F>) -> bool {
        let m = match f.degree() {
            None | Some(0) => return false,
            Some(1) => return true,
            Some(m) => m,
        };
        let f = self.monic(f);
        let x = self.x();
        let mut powers = Vec::with_capacity(m);
        let mut h = x.clone();
        for _ in 0..m {
            h = self.frobenius_mod(&h, &f);
            powers.push(h.clone());
        }
        if powers[m - 1] != self.rem_monic(x.coeffs.clone(), &f) {
            return false;
        }
        prime_divisors(m as u64).into_iter().all(|l| {
            let hj = &powers[m / l as usize - 1];
            self.is_one(&self.gcd(&self.sub(hj, &x), &f))
        })
    }

    /// Resultant by the Euclidean remainder sequence.
    pub fn resultant(&self, a: &Poly<F>, b: &Poly<F>) -> F::Elem {
        let f = self.field;
        if a.is_zero() || b.is_zero() {
            return f.zero();
        }
        let (mut a, mut b) = (a.clone(), b.clone());
        let mut acc = f.one();
        loop {
            let da = a.degree().unwrap() as u64;
            let db = b.degree().unwrap() as u64;
            if db == 0 {
                return f.mul(acc, f.pow(*b.lead().unwrap(), da));
            }
            let r = self.rem(&a, &b).unwrap();
            let dr = match r.degree() {
                None => return f.zero(),
                Some(d) => d as u64,
            };
            if (da * db) % 2 == 1 {
                acc = f.neg(acc);
            }
            acc = f.mul(acc, f.pow(*b.lead().unwrap(), da - dr));
            a = b;
            b = r;
        }
    }

    /// `(-1)^(d(d-1)/2) Res(f, f') / lc(f)`, with `f'` taken at formal degree `d - 1`.
    pub fn discriminant(&self, a: &Poly<F>) -> Result<F::Elem, PolyError> {
        let f = self.field;
        let d = match a.degree() {
            None | Some(0) => return Err(PolyError::DegreeZero),
            Some(d) => d,
        };
        let lc = *a.lead().unwrap();
        if d == 1 {
            return Ok(f.one());
        }
        let da = self.derivative(a);
        let e = match da.degree() {
            None => return Ok(f.zero()),
            Some(e) => e,
        };
        let mut res = self.resultant(a, &da);
        res = f.mul(res, f.pow(lc, (d - 1 - e) as u64));
        if (d * (d - 1) / 2) % 2 == 1 {
            res = f.neg(res);
        }
        Ok(f.div(res, lc).unwrap())
    }

    pub fn is_squarefree(&self, a: &Poly<F>) -> bool {
        match a.degree() {
            None => false,
            Some(0) => true,
            Some(_) => self.gcd(a, &self.derivative(a)).degree() == Some(0),
        }
    }

    fn pth_root_poly(&self, a: &Poly<F>) -> Poly<F> {
        let f = self.field;
        let p = f.characteristic() as usize;
        let coeffs = a.coeffs.iter().step_by(p).map(|&c| f.pth_root(c)).collect();
        self.from_coeffs(coeffs)
    }

    /// Squarefree decomposition `f = lc * prod g_i^i`, returned as `(g_i, i)`
    /// with monic, pairwise coprime, squarefree `g_i`, sorted by multiplicity.
    pub fn squarefree_decomposition(&self, a: &Poly<F>) -> Vec<(Poly<F>, usize)> {
        let a = self.monic(a);
        let mut out = Vec::new();
        if a.degree().unwrap_or(0) == 0 {
            return out;
        }
        let mut c = self.gcd(&a, &self.derivative(&a));
        let mut w = self.exact_div(&a, &c);
        let mut i = 1;
        while !self.is_one(&w) {
            let y = self.gcd(&w, &c);
            let z = self.exact_div(&w, &y);
            if !self.is_one(&z) {
                out.push((z, i));
            }
            i += 1;
            w = y;
            c = self.exact_div(&c, &w);
        }
        if !self.is_one(&c) {
            let p = self.field.characteristic() as usize;
            let root = self.pth_root_poly(&c);
            for (g, m) in self.squarefree_decomposition(&root) {
                out.push((g, m * p));
            }
        }
        out.sort_by_key(|(_, m)| *m);
        let mut merged: Vec<(Poly<F>, usize)> = Vec::new();
        for (g, m) in out {
            match merged.last_mut() {
                Some((h, k)) if *k == m => *h = self.mul(h, &g),
                _ => merged.push((g, m)),
            }
        }
        merged
    }

    /// `gcd(f, x^|F| - x)`: the product of the distinct linear factors.
    pub fn rational_root_part(&self, a: &Poly<F>) -> Result<Poly<F>, PolyError> {
        if a.is_zero() {
            return Err(PolyError::ZeroPolynomial);
        }
        let m = self.monic(a);
        if m.degree() == Some(0) {
            return Ok(self.one());
        }
        let h = self.frobenius_mod(&self.x(), &m);
        Ok(self.gcd(&m, &self.sub(&h, &self.x())))
    }

    /// Number of distinct roots in the field.
    pub fn count_roots(&self, a: &Poly<F>) -> Result<usize, PolyError> {
        Ok(self.rational_root_part(a)?.degree().unwrap())
    }

    /// Distinct-degree factorization of a monic squarefree polynomial: pairs
    /// `(g, i)` where `g` is the product of all degree-`i` irreducible factors.
    pub fn distinct_degree(&self, a: &Poly<F>) -> Vec<(Poly<F>, usize)> {
        let mut out = Vec::new();
        let mut rest = self.monic(a);
        let x = self.x();
        let mut h = x.clone();
        let mut i = 0;
        while let Some(d) = rest.degree() {
            if d == 0 {
                break;
            }
            i += 1;
            if d < 2 * i {
                out.push((rest.clone(), d));
                break;
            }
            h = self.frobenius_mod(&h, &rest);
            let g = self.gcd(&rest, &self.sub(&h, &x));
            if g.degree().unwrap() > 0 {
                rest = self.exact_div(&rest, &g);
                h = self.rem_monic(h.coeffs, &rest);
                out.push((g, i));
            }
        }
        out
    }

    /// Splits a monic squarefree product of degree-`i` irreducibles.
    pub fn equal_degree<R: Rng + ?Sized>(&self, g: &Poly<F>, i: usize, rng: &mut R) -> Result<Vec<Poly<F>>, PolyError> {
        let d = g.degree().unwrap_or(0);
        if d <= i {
            return Ok(vec![g.clone()]);
        }
        let f = self.field;
        let p = f.characteristic();
        let max_attempts = 64 * d;
        let exponent = if p == 2 {
            BigUint::from(0u32)
        } else {
            (BigUint::from(p).pow((f.prime_degree() * i) as u32) - 1u32) / 2u32
        };
        for _ in 0..max_attempts {
            let a = self.from_coeffs((0..d).map(|_| f.random(rng)).collect());
            if a.degree().unwrap_or(0) == 0 {
                continue;
            }
            let b = if p == 2 {
                // trace map a + a^2 + ... + a^(2^(m*i - 1))
                let mut t = a.clone();
                let mut acc = a.clone();
                for _ in 1..f.prime_degree() * i {
                    t = self.mul_mod(&t, &t, g);
                    acc = self.add(&acc, &t);
                }
                acc
            } else {
                self.sub(&self.pow_mod_big(&a, &exponent, g), &self.one())
            };
            let h = self.gcd(g, &b);
            let dh = h.degree().unwrap_or(0);
            if dh > 0 && dh < d {
                let mut out = self.equal_degree(&h, i, rng)?;
                out.extend(self.equal_degree(&self.exact_div(g, &h), i, rng)?);
                return Ok(out);
            }
        }
        Err(PolyError::SplittingFailed(max_attempts))
    }

    /// Full factorization into monic irreducibles with multiplicities, sorted
    /// by degree and then by coefficient indices.
    pub fn factor<R: Rng + ?Sized>(&self, a: &Poly<F>, rng: &mut R) -> Result<Vec<(Poly<F>, usize)>, PolyError> {
        if a.degree().unwrap_or(0) == 0 {
            return Err(PolyError::DegreeZero);
        }
        let mut out = Vec::new();
        for (g, m) in self.squarefree_decomposition(a) {
            for (h, i) in self.distinct_degree(&g) {
                for irr in self.equal_degree(&h, i, rng)? {
                    out.push((irr, m));
                }
            }
        }
        out.sort_by_key(|(g, m)| (g.degree(), self.sort_key(g), *m));
        Ok(out)
    }

    /// Distinct roots in the field, sorted by element index.
    pub fn roots<R: Rng + ?Sized>(&self, a: &Poly<F>, rng: &mut R) -> Result<Vec<F::Elem>, PolyError> {
        let g = self.rational_root_part(a)?;
        let f = self.field;
        let mut roots: Vec<F::Elem> = self
            .equal_degree(&g, 1, rng)?
            .into_iter()
            .filter(|l| l.degree() == Some(1))
            .map(|l| f.neg(l.coeffs[0]))
            .collect();
        roots.sort_by_key(|&r| f.index_of(r));
        Ok(roots)
    }

    /// Degrees of the irreducible factors of a squarefree polynomial.
    pub fn factorization_type(&self, a: &Poly<F>) -> Result<Partition, PolyError> {
        if a.is_zero() {
            return Err(PolyError::ZeroPolynomial);
        }
        if !self.is_squarefree(a) {
            return Err(PolyError::NotSquarefree);
        }
        let mut parts = Vec::new();
        for (g, i) in self.distinct_degree(a) {
            let n = g.degree().unwrap() / i;
            parts.extend(std::iter::repeat_n(i as u32, n));
        }
        Ok(Partition::new(parts))
    }

    pub fn sort_key(&self, a: &Poly<F>) -> Vec<u64> {
        a.coeffs.iter().map(|&c| self.field.index_of(c)).collect()
    }

    // ---- binary forms -------------------------------------------------------

    pub fn form_is_zero(&self, b: &BinaryForm<F::Elem>) -> bool {
        b.coeffs.iter().all(|&c| self.field.is_zero(c))
    }

    /// `B(x, 1)`.
    pub fn dehomogenize(&self, b: &BinaryForm<F::Elem>) -> Poly<F> {
        self.from_coeffs(b.coeffs.clone())
    }

    /// Multiplicity of the root `(1:0)`, i.e. the largest `j` with `t^j | B`.
    pub fn infinity_multiplicity(&self, b: &BinaryForm<F::Elem>) -> usize {
        b.coeffs.iter().rev().take_while(|&&c| self.field.is_zero(c)).count()
    }

    /// Distinct projective roots over the field.
    pub fn projective_root_count(&self, b: &BinaryForm<F::Elem>) -> Result<usize, PolyError> {
        if self.form_is_zero(b) {
            return Err(PolyError::ZeroForm);
        }
        let finite = self.count_roots(&self.dehomogenize(b))?;
        Ok(finite + usize::from(self.infinity_multiplicity(b) > 0))
    }

    /// Squarefree as a form: no repeated projective root over the closure.
    pub fn form_is_squarefree(&self, b: &BinaryForm<F::Elem>) -> bool {
        !self.form_is_zero(b) && self.infinity_multiplicity(b) <= 1 && self.is_squarefree(&self.dehomogenize(b))
    }

    /// Factorization type of a squarefree form (a part 1 for the root at infinity).
    pub fn form_factorization_type(&self, b: &BinaryForm<F::Elem>) -> Result<Partition, PolyError> {
        if self.form_is_zero(b) {
            return Err(PolyError::ZeroForm);
        }
        if self.infinity_multiplicity(b) > 1 {
            return Err(PolyError::NotSquarefree);
        }
        let mut parts = self.factorization_type(&self.dehomogenize(b))?.0;
        if self.infinity_multiplicity(b) == 1 {
            parts.push(1);
        }
        Ok(Partition::new(parts))
    }

    /// Root multiplicities over the algebraic closure, descending, e.g.
    /// `[2, 1, 1]` for a form with one double and two simple roots.
    pub fn form_multiplicity_pattern(&self, b: &BinaryForm<F::Elem>) -> Result<Vec<usize>, PolyError> {
        if self.form_is_zero(b) {
            return Err(PolyError::ZeroForm);
        }
        let mut pattern = Vec::new();
        let inf = self.infinity_multiplicity(b);
        if inf > 0 {
            pattern.push(inf);
        }
        let f = self.dehomogenize(b);
        for (g, m) in self.squarefree_decomposition(&f) {
            pattern.extend(std::iter::repeat_n(m, g.degree().unwrap()));
        }
        pattern.sort_unstable_by(|a, b| b.cmp(a));
        Ok(pattern)
    }

    /// `B(a s + b t, c s + d t)` for `m = [[a, b], [c, d]]`.
    pub fn form_substitute(&self, bf: &BinaryForm<F::Elem>, m: [[F::Elem; 2]; 2]) -> BinaryForm<F::Elem> {
        let f = self.field;
        let d = bf.degree();
        // s' and t' as binary forms of degree 1: index i is the s^i t^(1-i) coefficient
        let sp = vec![m[0][1], m[0][0]];
        let tp = vec![m[1][1], m[1][0]];
        let mut s_pows = vec![vec![f.one()]];
        let mut t_pows = vec![vec![f.one()]];
        for k in 1..=d {
            s_pows.push(form_mul(f, &s_pows[k - 1], &sp));
            t_pows.push(form_mul(f, &t_pows[k - 1], &tp));
        }
        let mut out = vec![f.zero(); d + 1];
        for (i, &c) in bf.coeffs.iter().enumerate() {
            if f.is_zero(c) {
                continue;
            }
            let term = form_mul(f, &s_pows[i], &t_pows[d - i]);
            for (k, &v) in term.iter().enumerate() {
                out[k] = f.add(out[k], f.mul(c, v));
            }
        }
        BinaryForm::new(out)
    }

    /// Whether the nonzero forms among `forms` share a projective root over the closure.
    pub fn form_common_root(&self, forms: &[&BinaryForm<F::Elem>]) -> bool {
        let nonzero: Vec<_> = forms.iter().filter(|b| !self.form_is_zero(b)).collect();
        if nonzero.is_empty() {
            return true;
        }
        if nonzero.iter().all(|b| self.infinity_multiplicity(b) > 0) {
            return true;
        }
        let mut g = self.zero();
        for b in &nonzero {
            g = self.gcd(&g, &self.dehomogenize(b));
        }
        g.degree().unwrap_or(0) > 0
    }
}

/// Product of coefficient vectors (as binary forms or polynomials alike).
pub(crate) fn form_mul<F: Field>(f: &F, a: &[F::Elem], b: &[F::Elem]) -> Vec<F::Elem> {
    let mut out = vec![f.zero(); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if f.is_zero(x) {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = f.add(out[i + j], f.mul(x, y));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ff::FieldCtx;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn f7() -> FieldCtx {
        FieldCtx::new(7, 1, 1).unwrap()
    }

    #[test]
    fn gcd_divmod_derivative() {
        let f = f7();
        let r = PolyRing::new(&f);
        let g = r.gcd(&r.from_ints(&[-1, 0, 1]), &r.from_ints(&[-1, 1]));
        assert_eq!(g, r.from_ints(&[-1, 1]));
        let (q, rem) = r.divmod(&r.from_ints(&[0, 0, 0, 1]), &r.from_ints(&[0, 0, 1])).unwrap();
        assert_eq!(q, r.x());
        assert!(rem.is_zero());
        let mut c = vec![0i64; 8];
        c[7] = 1;
        c[1] = 1;
        assert_eq!(r.derivative(&r.from_ints(&c)), r.one());
        assert_eq!(r.divmod(&r.x(), &r.zero()), Err(PolyError::DivisionByZero));
    }

    #[test]
    fn discriminant_examples() {
        let f = f7();
        let r = PolyRing::new(&f);
        for b in 0..7i64 {
            for c in 0..7i64 {
                let d = r.discriminant(&r.from_ints(&[c, b, 1])).unwrap();
                assert_eq!(d, f.from_i64(b * b - 4 * c));
            }
        }
        // (x-1)^2 (x-2)
        let rep = r.mul(
            &r.mul(&r.from_ints(&[-1, 1]), &r.from_ints(&[-1, 1])),
            &r.from_ints(&[-2, 1]),
        );
        assert_eq!(r.discriminant(&rep).unwrap(), f.zero());
        assert_eq!(r.discriminant(&r.one()), Err(PolyError::DegreeZero));
    }

    #[test]
    fn discriminant_of_cube_root_two_is_nonzero() {
        // oracle: x^3 - 2 has no repeated root in F_{7^6}, which contains all its roots
        let f = f7();
        let r = PolyRing::new(&f);
        let poly = r.from_ints(&[-2, 0, 0, 1]);
        assert_ne!(r.discriminant(&poly).unwrap(), f.zero());
        let big = FieldCtx::new(7, 1, 6).unwrap();
        let table = crate::ff::TableField::new(&big).unwrap();
        let rb = PolyRing::new(&table);
        let lifted = rb.from_ints(&[-2, 0, 0, 1]);
        let deriv = rb.derivative(&lifted);
        let mut roots = 0;
        for idx in 0..big.order().unwrap() {
            let x = table.element(idx);
            if rb.eval(&lifted, x) == 0 {
                roots += 1;
                assert_ne!(rb.eval(&deriv, x), 0);
            }
        }
        assert_eq!(roots, 3);
    }

    #[test]
    fn squarefree_examples() {
        let f = f7();
        let r = PolyRing::new(&f);
        let xm1 = r.from_ints(&[-1, 1]);
        let xp1 = r.from_ints(&[1, 1]);
        let a = r.mul(&r.mul(&xm1, &xm1), &xp1);
        assert_eq!(r.squarefree_decomposition(&a), vec![(xp1.clone(), 1), (xm1.clone(), 2)]);
        let mut c = vec![0i64; 8];
        c[0] = -1;
        c[7] = 1;
        assert_eq!(r.squarefree_decomposition(&r.from_ints(&c)), vec![(xm1.clone(), 7)]);
        let cubic = r.from_ints(&[0, -1, 0, 1]);
        assert_eq!(r.squarefree_decomposition(&cubic), vec![(cubic.clone(), 1)]);
    }

    #[test]
    fn root_counts() {
        let f = f7();
        let r = PolyRing::new(&f);
        assert_eq!(r.count_roots(&r.from_ints(&[-1, 0, 1])).unwrap(), 2);
        assert_eq!(r.count_roots(&r.from_ints(&[1, 0, 1])).unwrap(), 0);
        assert_eq!(r.count_roots(&r.zero()), Err(PolyError::ZeroPolynomial));
        let f49 = FieldCtx::new(7, 1, 2).unwrap();
        let r49 = PolyRing::new(&f49);
        let poly = r49.from_ints(&[1, 0, 1]);
        assert_eq!(r49.count_roots(&poly).unwrap(), 2);
        let scan = f49.enumerate().filter(|&x| r49.eval(&poly, x) == f49.zero()).count();
        assert_eq!(scan, 2);
    }

    #[test]
    fn factor_examples() {
        let f = f7();
        let r = PolyRing::new(&f);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let fs = r.factor(&r.from_ints(&[0, -1, 0, 1]), &mut rng).unwrap();
        assert_eq!(
            fs,
            vec![(r.x(), 1), (r.from_ints(&[1, 1]), 1), (r.from_ints(&[-1, 1]), 1)]
        );
        // cubes mod 7
        let cubes: std::collections::BTreeSet<u64> = (0..7u64).map(|x| x * x * x % 7).collect();
        assert!(!cubes.contains(&2));
        let c2 = r.from_ints(&[-2, 0, 0, 1]);
        assert_eq!(r.factor(&c2, &mut rng).unwrap(), vec![(c2.clone(), 1)]);
        assert_eq!(r.factorization_type(&c2).unwrap(), Partition::new(vec![3]));
        let x4 = r.from_ints(&[1, 0, 0, 0, 1]);
        let fs = r.factor(&x4, &mut rng).unwrap();
        assert_eq!(fs.len(), 2);
        assert!(fs.iter().all(|(g, m)| g.degree() == Some(2) && *m == 1));
        assert_eq!(
            r.factorization_type(&r.from_ints(&[0, -1, 0, 1])).unwrap(),
            Partition::new(vec![1, 1, 1])
        );
        let rep = r.mul(
            &r.mul(&r.from_ints(&[-1, 1]), &r.from_ints(&[-1, 1])),
            &r.from_ints(&[-2, 1]),
        );
        assert_eq!(r.factorization_type(&rep), Err(PolyError::NotSquarefree));
    }

    #[test]
    fn x4_plus_1_root_pairing() {
        // oracle: the four roots of x^4 + 1 in F_49 pair into Frobenius orbits of size 2
        let f49 = FieldCtx::new(7, 1, 2).unwrap();
        let r = PolyRing::new(&f49);
        let poly = r.from_ints(&[1, 0, 0, 0, 1]);
        let roots: Vec<_> = f49.enumerate().filter(|&x| r.eval(&poly, x) == f49.zero()).collect();
        assert_eq!(roots.len(), 4);
        for &z in &roots {
            let conj = f49.frobenius(z, 1);
            assert_ne!(conj, z);
            assert!(roots.contains(&conj));
        }
    }

    #[test]
    fn char_two_factoring() {
        let f = FieldCtx::new(2, 1, 1).unwrap();
        let r = PolyRing::new(&f);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // x^4 + x = x (x + 1) (x^2 + x + 1)
        let fs = r.factor(&r.from_ints(&[0, 1, 0, 0, 1]), &mut rng).unwrap();
        let degs: Vec<_> = fs.iter().map(|(g, _)| g.degree().unwrap()).collect();
        assert_eq!(degs, vec![1, 1, 2]);
        let f16 = FieldCtx::new(2, 1, 4).unwrap();
        let r16 = PolyRing::new(&f16);
        // x^16 - x splits completely over F_16
        let mut c = vec![0i64; 17];
        c[16] = 1;
        c[1] = -1;
        let roots = r16.roots(&r16.from_ints(&c), &mut rng).unwrap();
        assert_eq!(roots.len(), 16);
    }

    #[test]
    fn binary_form_roots() {
        let f = f7();
        let r = PolyRing::new(&f);
        let e = |v: i64| f.from_i64(v);
        // s t
        assert_eq!(
            r.projective_root_count(&BinaryForm::new(vec![e(0), e(1), e(0)]))
                .unwrap(),
            2
        );
        // s^2 + t^2
        assert_eq!(
            r.projective_root_count(&BinaryForm::new(vec![e(1), e(0), e(1)]))
                .unwrap(),
            0
        );
        // t (s^2 + t^2) = s^2 t + t^3
        assert_eq!(
            r.projective_root_count(&BinaryForm::new(vec![e(1), e(0), e(1), e(0)]))
                .unwrap(),
            1
        );
        let zero = BinaryForm::new(vec![e(0), e(0)]);
        assert_eq!(r.projective_root_count(&zero), Err(PolyError::ZeroForm));
    }

    #[test]
    fn partition_text_roundtrip() {
        let p = Partition::new(vec![2, 1, 1]);
        assert_eq!(p.to_string(), "1+1+2");
        assert_eq!("1+1+2".parse::<Partition>().unwrap(), p);
        assert_eq!(p.ones(), 2);
        assert_eq!(p.multiplicities(), vec![(1, 2), (2, 1)]);
    }
}
