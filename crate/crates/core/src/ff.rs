//! Finite fields `F_q = F_p[t]/(g)` and their extensions `F_{q^N} = F_q[u]/(h)`.
//!
//! Two representations implement the [`Field`] trait:
//!
//! * [`FieldCtx`] stores elements as coefficient vectors ([`FieldElement`]) and
//!   works for any supported size.
//! * [`TableField`] stores nonzero elements as discrete logarithms and adds
//!   through a Zech table. It is built from a `FieldCtx` whose order fits the
//!   table budget and is what the experiment loops run on.
//!
//! Both enumerate elements in the same index order and draw random elements
//! with the same RNG consumption, so results do not depend on which one ran.

use std::fmt;
use std::hash::Hash;

use num_bigint::BigUint;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::upoly::{PolyRing, UPoly};

/// Largest supported value of `r * N` (degree of the top field over `F_p`).
pub const MAX_DEGREE: usize = 32;

/// Characteristic must be below this bound.
pub const MAX_PRIME: u64 = 1 << 20;

/// Largest field order for which a [`TableField`] will be built.
pub const TABLE_BUDGET: u64 = 1 << 22;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("characteristic {0} exceeds the supported bound 2^20")]
    PrimeTooLarge(u64),
    #[error("extension degree must be at least 1")]
    DegreeZero,
    #[error("total degree {0} over the prime field exceeds {MAX_DEGREE}")]
    DegreeTooLarge(usize),
    #[error("division by zero")]
    DivisionByZero,
    #[error("operands belong to different field contexts")]
    ContextMismatch,
    #[error("field of order {0} is too large for a lookup table")]
    TooLargeForTable(u64),
}

/// Arithmetic interface shared by all field representations.
pub trait Field: Send + Sync {
    type Elem: Copy + Eq + Hash + fmt::Debug + Send + Sync;

    fn characteristic(&self) -> u64;
    /// Degree of this field over its prime subfield.
    fn prime_degree(&self) -> usize;
    /// Degree of this field over the curve base field `F_q`.
    fn ext_degree(&self) -> usize;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn add(&self, a: Self::Elem, b: Self::Elem) -> Self::Elem;
    fn sub(&self, a: Self::Elem, b: Self::Elem) -> Self::Elem;
    fn neg(&self, a: Self::Elem) -> Self::Elem;
    fn mul(&self, a: Self::Elem, b: Self::Elem) -> Self::Elem;
    fn inv(&self, a: Self::Elem) -> Option<Self::Elem>;
    fn from_u64(&self, n: u64) -> Self::Elem;
    fn pth_root(&self, a: Self::Elem) -> Self::Elem;

    /// Element with the given enumeration index (base-`p` digits of the flat
    /// coefficient vector, least significant first).
    fn element(&self, index: u64) -> Self::Elem;
    fn index_of(&self, a: Self::Elem) -> u64;

    fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Elem;

    fn is_zero(&self, a: Self::Elem) -> bool {
        a == self.zero()
    }

    fn from_i64(&self, n: i64) -> Self::Elem {
        let p = self.characteristic() as i64;
        self.from_u64(n.rem_euclid(p) as u64)
    }

    /// Number of elements, if it fits in a `u64`.
    fn order(&self) -> Option<u64> {
        self.characteristic().checked_pow(self.prime_degree() as u32)
    }

    fn pow(&self, a: Self::Elem, mut e: u64) -> Self::Elem {
        let mut base = a;
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    fn div(&self, a: Self::Elem, b: Self::Elem) -> Option<Self::Elem> {
        self.inv(b).map(|bi| self.mul(a, bi))
    }

    /// `a^(q^steps)` where `q` is the order of the curve base field.
    fn frobenius(&self, a: Self::Elem, steps: usize) -> Self::Elem {
        let r = self.prime_degree() / self.ext_degree();
        let p = self.characteristic();
        let mut x = a;
        for _ in 0..r * steps {
            x = self.pow(x, p);
        }
        x
    }
}

/// Trial-division primality check; `p < 2^20` keeps this cheap.
pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

pub(crate) fn prime_divisors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// An element of `F_{q^N}`: `N` blocks of `r` coefficients over `F_p`, stored
/// flat (block `j`, coefficient `l` at `j * r + l`). Unused slots are zero.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    tag: u32,
    coeffs: [u32; MAX_DEGREE],
}

impl FieldElement {
    pub fn flat(&self) -> &[u32; MAX_DEGREE] {
        &self.coeffs
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let last = self.coeffs.iter().rposition(|&c| c != 0).map_or(1, |i| i + 1);
        write!(f, "{:?}", &self.coeffs[..last])
    }
}

/// The field `F_{q^N}` with `q = p^r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldCtx {
    p: u64,
    r: usize,
    n: usize,
    tag: u32,
    /// Monic, degree `r`, least-degree first.
    base_modulus: Vec<u32>,
    /// Monic, degree `N`; each coefficient is a base element (`r` scalars).
    top_modulus: Vec<Vec<u32>>,
}

fn context_tag(p: u64, r: usize, n: usize) -> u32 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in [p, r as u64, n as u64] {
        h ^= v;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    (h ^ (h >> 32)) as u32
}

impl FieldCtx {
    /// Builds `F_{p^(r*N)}` as a degree-`N` extension of `F_{p^r}`, choosing
    /// the lexicographically smallest monic irreducible moduli.
    pub fn new(p: u64, r: usize, n: usize) -> Result<Self, FieldError> {
        if p >= MAX_PRIME {
            return Err(FieldError::PrimeTooLarge(p));
        }
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        if r == 0 || n == 0 {
            return Err(FieldError::DegreeZero);
        }
        if r * n > MAX_DEGREE {
            return Err(FieldError::DegreeTooLarge(r * n));
        }
        let prime = FieldCtx::sentinel(p, 1, vec![0, 1]);
        let base_modulus = if r == 1 {
            vec![0, 1]
        } else {
            let m = smallest_irreducible(&prime, r);
            m.coeffs().iter().map(|e| e.coeffs[0]).collect()
        };
        let base = FieldCtx::sentinel(p, r, base_modulus.clone());
        let top_modulus = if n == 1 {
            let mut one = vec![0u32; r];
            one[0] = 1;
            vec![vec![0u32; r], one]
        } else {
            let m = smallest_irreducible(&base, n);
            m.coeffs().iter().map(|e| e.coeffs[..r].to_vec()).collect()
        };
        Ok(FieldCtx {
            p,
            r,
            n,
            tag: context_tag(p, r, n),
            base_modulus,
            top_modulus,
        })
    }

    fn sentinel(p: u64, r: usize, base_modulus: Vec<u32>) -> Self {
        let mut one = vec![0u32; r];
        one[0] = 1;
        FieldCtx {
            p,
            r,
            n: 1,
            tag: context_tag(p, r, 1),
            base_modulus,
            top_modulus: vec![vec![0u32; r], one],
        }
    }

    /// The degree-`N` extension of this context's base field `F_q`.
    pub fn extension(&self, n: usize) -> Result<Self, FieldError> {
        if n == self.n {
            return Ok(self.clone());
        }
        FieldCtx::new(self.p, self.r, n)
    }

    /// The base field `F_q` of this tower.
    pub fn base(&self) -> Self {
        if self.n == 1 {
            self.clone()
        } else {
            FieldCtx::sentinel(self.p, self.r, self.base_modulus.clone())
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }
    pub fn r(&self) -> usize {
        self.r
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn base_modulus(&self) -> &[u32] {
        &self.base_modulus
    }
    pub fn top_modulus(&self) -> &[Vec<u32>] {
        &self.top_modulus
    }

    /// `q = p^r`, if it fits.
    pub fn q(&self) -> Option<u64> {
        self.p.checked_pow(self.r as u32)
    }

    /// Order of the top field as an exact integer.
    pub fn order_big(&self) -> BigUint {
        BigUint::from(self.p).pow((self.r * self.n) as u32)
    }

    fn total(&self) -> usize {
        self.r * self.n
    }

    fn blank(&self) -> FieldElement {
        FieldElement {
            tag: self.tag,
            coeffs: [0; MAX_DEGREE],
        }
    }

    /// Element from nested coefficients `[[c_00..c_0(r-1)], ..., [c_(N-1)0..]]`,
    /// reducing every scalar mod `p`.
    pub fn from_nested(&self, nested: &[Vec<u64>]) -> Result<FieldElement, FieldError> {
        if nested.len() != self.n || nested.iter().any(|b| b.len() != self.r) {
            return Err(FieldError::ContextMismatch);
        }
        let mut e = self.blank();
        for (j, block) in nested.iter().enumerate() {
            for (l, &c) in block.iter().enumerate() {
                e.coeffs[j * self.r + l] = (c % self.p) as u32;
            }
        }
        Ok(e)
    }

    /// Little-endian nested coefficient arrays, as serialized in reports.
    pub fn to_nested(&self, a: &FieldElement) -> Vec<Vec<u32>> {
        (0..self.n)
            .map(|j| a.coeffs[j * self.r..(j + 1) * self.r].to_vec())
            .collect()
    }

    /// Element of the base field `F_q` given by its `r` coefficients.
    pub fn base_element(&self, coeffs: &[u64]) -> FieldElement {
        let mut e = self.blank();
        for (l, &c) in coeffs.iter().take(self.r).enumerate() {
            e.coeffs[l] = (c % self.p) as u32;
        }
        e
    }

    /// Constant embedding `F_q -> F_{q^N}` of an element from any context of
    /// the same tower (only block 0 of the source is read).
    pub fn embed(&self, a: &FieldElement) -> FieldElement {
        let mut e = self.blank();
        e.coeffs[..self.r].copy_from_slice(&a.coeffs[..self.r]);
        e
    }

    /// Whether `a` lies in the base field (all blocks but the first vanish).
    pub fn is_in_base(&self, a: &FieldElement) -> bool {
        a.coeffs[self.r..self.total()].iter().all(|&c| c == 0)
    }

    /// The generator `u` of the top extension (or `t` of the base when `N = 1`).
    pub fn generator(&self) -> FieldElement {
        let mut e = self.blank();
        if self.n > 1 {
            e.coeffs[self.r] = 1;
        } else if self.r > 1 {
            e.coeffs[1] = 1;
        } else {
            e.coeffs[0] = 0;
        }
        e
    }

    /// All `q^N` elements in index order.
    pub fn enumerate(&self) -> impl Iterator<Item = FieldElement> + '_ {
        let order = self.order().expect("field too large to enumerate");
        (0..order).map(move |i| self.element(i))
    }

    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldElement {
        self.random(rng)
    }

    fn check(&self, a: &FieldElement) -> Result<(), FieldError> {
        if a.tag == self.tag {
            Ok(())
        } else {
            Err(FieldError::ContextMismatch)
        }
    }

    pub fn try_add(&self, a: &FieldElement, b: &FieldElement) -> Result<FieldElement, FieldError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.add(*a, *b))
    }

    pub fn try_sub(&self, a: &FieldElement, b: &FieldElement) -> Result<FieldElement, FieldError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.sub(*a, *b))
    }

    pub fn try_mul(&self, a: &FieldElement, b: &FieldElement) -> Result<FieldElement, FieldError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.mul(*a, *b))
    }

    pub fn try_div(&self, a: &FieldElement, b: &FieldElement) -> Result<FieldElement, FieldError> {
        self.check(a)?;
        self.check(b)?;
        self.div(*a, *b).ok_or(FieldError::DivisionByZero)
    }

    pub fn try_inv(&self, a: &FieldElement) -> Result<FieldElement, FieldError> {
        self.check(a)?;
        self.inv(*a).ok_or(FieldError::DivisionByZero)
    }

    // ---- scalar and base-field kernels -------------------------------------

    #[inline]
    fn addp(&self, a: u32, b: u32) -> u32 {
        let s = a as u64 + b as u64;
        (if s >= self.p { s - self.p } else { s }) as u32
    }

    #[inline]
    fn subp(&self, a: u32, b: u32) -> u32 {
        (if a >= b {
            (a - b) as u64
        } else {
            a as u64 + self.p - b as u64
        }) as u32
    }

    /// Product of two base elements (slices of length `r`) into `out`.
    fn base_mul(&self, a: &[u32], b: &[u32], out: &mut [u32]) {
        let r = self.r;
        let p = self.p;
        if r == 1 {
            out[0] = ((a[0] as u64 * b[0] as u64) % p) as u32;
            return;
        }
        let mut tmp = [0u64; 2 * MAX_DEGREE];
        for i in 0..r {
            if a[i] == 0 {
                continue;
            }
            for j in 0..r {
                tmp[i + j] += a[i] as u64 * b[j] as u64;
            }
        }
        for k in (r..2 * r - 1).rev() {
            let c = tmp[k] % p;
            if c == 0 {
                continue;
            }
            let neg = p - c;
            for i in 0..r {
                tmp[k - r + i] += neg * self.base_modulus[i] as u64;
            }
        }
        for i in 0..r {
            out[i] = (tmp[i] % p) as u32;
        }
    }

    fn mul_prime_top(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        // r == 1: one flat polynomial product reduced by the top modulus.
        let n = self.n;
        let p = self.p;
        let mut tmp = [0u64; 2 * MAX_DEGREE];
        for i in 0..n {
            let ai = a.coeffs[i] as u64;
            if ai == 0 {
                continue;
            }
            for j in 0..n {
                tmp[i + j] += ai * b.coeffs[j] as u64;
            }
        }
        for k in (n..2 * n - 1).rev() {
            let c = tmp[k] % p;
            if c == 0 {
                continue;
            }
            let neg = p - c;
            for i in 0..n {
                tmp[k - n + i] += neg * self.top_modulus[i][0] as u64;
            }
        }
        let mut out = self.blank();
        for i in 0..n {
            out.coeffs[i] = (tmp[i] % p) as u32;
        }
        out
    }

    fn mul_tower(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        let (r, n) = (self.r, self.n);
        let mut tmp = [0u32; 2 * MAX_DEGREE * 2];
        let mut prod = [0u32; MAX_DEGREE];
        for i in 0..n {
            let ai = &a.coeffs[i * r..(i + 1) * r];
            if ai.iter().all(|&c| c == 0) {
                continue;
            }
            for j in 0..n {
                let bj = &b.coeffs[j * r..(j + 1) * r];
                self.base_mul(ai, bj, &mut prod[..r]);
                let off = (i + j) * r;
                for l in 0..r {
                    tmp[off + l] = self.addp(tmp[off + l], prod[l]);
                }
            }
        }
        for k in (n..2 * n - 1).rev() {
            let c: Vec<u32> = tmp[k * r..(k + 1) * r].to_vec();
            if c.iter().all(|&v| v == 0) {
                continue;
            }
            for i in 0..n {
                self.base_mul(&c, &self.top_modulus[i], &mut prod[..r]);
                let off = (k - n + i) * r;
                for l in 0..r {
                    tmp[off + l] = self.subp(tmp[off + l], prod[l]);
                }
            }
        }
        let mut out = self.blank();
        out.coeffs[..n * r].copy_from_slice(&tmp[..n * r]);
        out
    }

    /// `a^e` for an arbitrary-size exponent.
    pub fn pow_big(&self, a: FieldElement, e: &BigUint) -> FieldElement {
        let mut acc = self.one();
        for i in (0..e.bits()).rev() {
            acc = self.mul(acc, acc);
            if e.bit(i) {
                acc = self.mul(acc, a);
            }
        }
        acc
    }
}

impl Field for FieldCtx {
    type Elem = FieldElement;

    fn characteristic(&self) -> u64 {
        self.p
    }

    fn prime_degree(&self) -> usize {
        self.r * self.n
    }

    fn ext_degree(&self) -> usize {
        self.n
    }

    fn zero(&self) -> FieldElement {
        self.blank()
    }

    fn one(&self) -> FieldElement {
        let mut e = self.blank();
        e.coeffs[0] = 1;
        e
    }

    fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        debug_assert!(a.tag == self.tag && b.tag == self.tag);
        let mut out = self.blank();
        for i in 0..self.total() {
            out.coeffs[i] = self.addp(a.coeffs[i], b.coeffs[i]);
        }
        out
    }

    fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        debug_assert!(a.tag == self.tag && b.tag == self.tag);
        let mut out = self.blank();
        for i in 0..self.total() {
            out.coeffs[i] = self.subp(a.coeffs[i], b.coeffs[i]);
        }
        out
    }

    fn neg(&self, a: FieldElement) -> FieldElement {
        self.sub(self.zero(), a)
    }

    fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        debug_assert!(a.tag == self.tag && b.tag == self.tag);
        if self.r == 1 {
            self.mul_prime_top(&a, &b)
        } else {
            self.mul_tower(&a, &b)
        }
    }

    fn inv(&self, a: FieldElement) -> Option<FieldElement> {
        if self.is_zero(a) {
            return None;
        }
        if self.total() == 1 {
            return Some(Field::pow(self, a, self.p - 2));
        }
        let e = self.order_big() - 2u32;
        Some(self.pow_big(a, &e))
    }

    fn from_u64(&self, n: u64) -> FieldElement {
        let mut e = self.blank();
        e.coeffs[0] = (n % self.p) as u32;
        e
    }

    fn pth_root(&self, a: FieldElement) -> FieldElement {
        let mut x = a;
        for _ in 1..self.total() {
            x = Field::pow(self, x, self.p);
        }
        x
    }

    fn element(&self, mut index: u64) -> FieldElement {
        let mut e = self.blank();
        for i in 0..self.total() {
            e.coeffs[i] = (index % self.p) as u32;
            index /= self.p;
        }
        e
    }

    fn index_of(&self, a: FieldElement) -> u64 {
        let mut idx = 0u64;
        for i in (0..self.total()).rev() {
            idx = idx * self.p + a.coeffs[i] as u64;
        }
        idx
    }

    fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldElement {
        let mut e = self.blank();
        for i in 0..self.total() {
            e.coeffs[i] = rng.gen_range(0..self.p) as u32;
        }
        e
    }
}

/// Smallest monic irreducible of degree `m` over `field`, comparing candidate
/// coefficient tuples `(c_0, c_1, ..., c_{m-1})` lexicographically with the
/// constant term first.
fn smallest_irreducible(field: &FieldCtx, m: usize) -> UPoly<FieldElement> {
    let ring = PolyRing::new(field);
    let order = field.order().expect("base field order fits in u64");
    // Digits of the candidate index: c_0 is the most significant.
    let mut digits = vec![0u64; m];
    loop {
        let constant_ok = m == 1 || digits[0] != 0;
        if constant_ok {
            let mut coeffs: Vec<FieldElement> = digits.iter().map(|&d| field.element(d)).collect();
            coeffs.push(field.one());
            let f = ring.from_coeffs(coeffs);
            if ring.is_irreducible(&f) {
                return f;
            }
        }
        let mut pos = m;
        loop {
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < order {
                break;
            }
            digits[pos] = 0;
            assert!(pos > 0, "no irreducible polynomial of degree {m} found");
        }
    }
}

/// Nonzero elements as `1 + log_g(x)` for a fixed primitive element `g`; zero
/// is code 0. Addition goes through a Zech logarithm table.
#[derive(Clone, Debug)]
pub struct TableField {
    ctx: FieldCtx,
    order: u64,
    /// index -> code
    code_of: Vec<u32>,
    /// code -> index
    index_from_code: Vec<u32>,
    /// zech[d] = code of 1 + g^d
    zech: Vec<u32>,
    neg_one_log: u64,
    pth_root_factor: u64,
    int_codes: Vec<u32>,
}

impl TableField {
    pub fn new(ctx: &FieldCtx) -> Result<Self, FieldError> {
        let order = match ctx.order() {
            Some(o) if o <= TABLE_BUDGET => o,
            Some(o) => return Err(FieldError::TooLargeForTable(o)),
            None => return Err(FieldError::TooLargeForTable(u64::MAX)),
        };
        let n = order - 1;
        let gen = primitive_element(ctx, order);
        let mut code_of = vec![0u32; order as usize];
        let mut index_from_code = vec![0u32; order as usize];
        let mut cur = ctx.one();
        for i in 0..n {
            let idx = ctx.index_of(cur);
            code_of[idx as usize] = (i + 1) as u32;
            index_from_code[(i + 1) as usize] = idx as u32;
            cur = ctx.mul(cur, gen);
        }
        let mut zech = vec![0u32; n as usize];
        for d in 0..n {
            let g_d = ctx.element(index_from_code[(d + 1) as usize] as u64);
            let s = ctx.add(ctx.one(), g_d);
            zech[d as usize] = code_of[ctx.index_of(s) as usize];
        }
        let neg_one = ctx.neg(ctx.one());
        let neg_one_log = (code_of[ctx.index_of(neg_one) as usize] - 1) as u64;
        // x -> x^p permutes F; its inverse on logs multiplies by p^(m-1).
        let m = ctx.prime_degree() as u32;
        let mut pth_root_factor = 1u64;
        for _ in 1..m {
            pth_root_factor = pth_root_factor * ctx.p() % n.max(1);
        }
        let int_codes = (0..ctx.p())
            .map(|c| code_of[ctx.index_of(ctx.from_u64(c)) as usize])
            .collect();
        Ok(TableField {
            ctx: ctx.clone(),
            order,
            code_of,
            index_from_code,
            zech,
            neg_one_log,
            pth_root_factor,
            int_codes,
        })
    }

    pub fn ctx(&self) -> &FieldCtx {
        &self.ctx
    }

    pub fn encode(&self, a: &FieldElement) -> u32 {
        self.code_of[self.ctx.index_of(*a) as usize]
    }

    pub fn decode(&self, code: u32) -> FieldElement {
        self.ctx.element(self.index_from_code[code as usize] as u64)
    }

    #[inline]
    fn modulus(&self) -> u64 {
        self.order - 1
    }
}

fn primitive_element(ctx: &FieldCtx, order: u64) -> FieldElement {
    let n = order - 1;
    let primes = prime_divisors(n);
    for idx in 1..order {
        let g = ctx.element(idx);
        if primes.iter().all(|&l| Field::pow(ctx, g, n / l) != ctx.one()) {
            return g;
        }
    }
    unreachable!("every finite field has a primitive element")
}

impl Field for TableField {
    type Elem = u32;

    fn characteristic(&self) -> u64 {
        self.ctx.p()
    }

    fn prime_degree(&self) -> usize {
        self.ctx.prime_degree()
    }

    fn ext_degree(&self) -> usize {
        self.ctx.n()
    }

    #[inline]
    fn zero(&self) -> u32 {
        0
    }

    #[inline]
    fn one(&self) -> u32 {
        1
    }

    #[inline]
    fn add(&self, a: u32, b: u32) -> u32 {
        if a == 0 {
            return b;
        }
        if b == 0 {
            return a;
        }
        let n = self.modulus();
        let (la, lb) = ((a - 1) as u64, (b - 1) as u64);
        let d = if lb >= la { lb - la } else { lb + n - la };
        let z = self.zech[d as usize];
        if z == 0 {
            return 0;
        }
        let s = la + (z - 1) as u64;
        (if s >= n { s - n } else { s }) as u32 + 1
    }

    #[inline]
    fn sub(&self, a: u32, b: u32) -> u32 {
        self.add(a, self.neg(b))
    }

    #[inline]
    fn neg(&self, a: u32) -> u32 {
        if a == 0 {
            return 0;
        }
        let n = self.modulus();
        let s = (a - 1) as u64 + self.neg_one_log;
        (if s >= n { s - n } else { s }) as u32 + 1
    }

    #[inline]
    fn mul(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            return 0;
        }
        let n = self.modulus();
        let s = (a - 1) as u64 + (b - 1) as u64;
        (if s >= n { s - n } else { s }) as u32 + 1
    }

    fn inv(&self, a: u32) -> Option<u32> {
        if a == 0 {
            return None;
        }
        let n = self.modulus();
        Some(((n - (a - 1) as u64) % n) as u32 + 1)
    }

    fn from_u64(&self, v: u64) -> u32 {
        self.int_codes[(v % self.ctx.p()) as usize]
    }

    fn pth_root(&self, a: u32) -> u32 {
        if a == 0 {
            return 0;
        }
        let n = self.modulus();
        (((a - 1) as u64 * self.pth_root_factor) % n) as u32 + 1
    }

    fn pow(&self, a: u32, e: u64) -> u32 {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let n = self.modulus();
        (((a - 1) as u128 * (e % n) as u128) % n as u128) as u32 + 1
    }

    fn element(&self, index: u64) -> u32 {
        self.code_of[index as usize]
    }

    fn index_of(&self, a: u32) -> u64 {
        self.index_from_code[a as usize] as u64
    }

    fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let p = self.ctx.p();
        let mut idx = 0u64;
        let mut scale = 1u64;
        for _ in 0..self.ctx.prime_degree() {
            idx += rng.gen_range(0..p) * scale;
            scale *= p;
        }
        self.code_of[idx as usize]
    }

    fn order(&self) -> Option<u64> {
        Some(self.order)
    }
}

/// A field that contains the curve base field `F_q` and can convert to and
/// from the coefficient-vector representation.
pub trait Lift: Field {
    fn ctx(&self) -> &FieldCtx;
    /// Constant embedding of an element of `F_q` (block 0 of `a`).
    fn embed_base(&self, a: &FieldElement) -> Self::Elem;
    /// Conversion of an element of this same field.
    fn from_element(&self, a: &FieldElement) -> Self::Elem;
    fn to_element(&self, a: Self::Elem) -> FieldElement;
}

impl Lift for FieldCtx {
    fn ctx(&self) -> &FieldCtx {
        self
    }
    fn embed_base(&self, a: &FieldElement) -> FieldElement {
        self.embed(a)
    }
    fn from_element(&self, a: &FieldElement) -> FieldElement {
        *a
    }
    fn to_element(&self, a: FieldElement) -> FieldElement {
        a
    }
}

impl Lift for TableField {
    fn ctx(&self) -> &FieldCtx {
        &self.ctx
    }
    fn embed_base(&self, a: &FieldElement) -> u32 {
        self.encode(&self.ctx.embed(a))
    }
    fn from_element(&self, a: &FieldElement) -> u32 {
        self.encode(a)
    }
    fn to_element(&self, a: u32) -> FieldElement {
        self.decode(a)
    }
}

/// JSON form of an element: little-endian nested coefficient arrays.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElementRepr(pub Vec<Vec<u32>>);

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn create_prime_field() {
        let f = FieldCtx::new(7, 1, 1).unwrap();
        assert_eq!(f.order(), Some(7));
        assert_eq!(f.top_modulus().len(), 2);
    }

    #[test]
    fn create_f49_modulus() {
        // oracle: scan x^2 + c in lex order (constant first) with a root scan
        let oracle = (0u64..7)
            .flat_map(|c0| (0u64..7).map(move |c1| (c0, c1)))
            .find(|&(c0, c1)| (0u64..7).all(|x| (x * x + c1 * x + c0) % 7 != 0))
            .unwrap();
        assert_eq!(oracle, (1, 0));
        let f = FieldCtx::new(7, 1, 2).unwrap();
        let m: Vec<u32> = f.top_modulus().iter().map(|c| c[0]).collect();
        assert_eq!(m, vec![1, 0, 1]);
        assert_eq!(f.order(), Some(49));
    }

    #[test]
    fn create_errors() {
        assert_eq!(FieldCtx::new(4, 1, 1), Err(FieldError::NotPrime(4)));
        assert_eq!(FieldCtx::new(7, 0, 1), Err(FieldError::DegreeZero));
        assert_eq!(FieldCtx::new(7, 1, 0), Err(FieldError::DegreeZero));
        assert_eq!(FieldCtx::new(1 << 20, 1, 1), Err(FieldError::PrimeTooLarge(1 << 20)));
        assert_eq!(FieldCtx::new(7, 4, 9), Err(FieldError::DegreeTooLarge(36)));
    }

    #[test]
    fn prime_field_arith() {
        let f = FieldCtx::new(7, 1, 1).unwrap();
        let (a, b) = (f.from_u64(3), f.from_u64(5));
        assert_eq!(f.mul(a, b), f.one());
        assert_eq!(f.inv(a), Some(b));
        assert_eq!(f.try_inv(&f.zero()), Err(FieldError::DivisionByZero));
    }

    #[test]
    fn f49_generator_squares_to_minus_one() {
        let f = FieldCtx::new(7, 1, 2).unwrap();
        let u = f.generator();
        assert_eq!(f.mul(u, u), f.from_u64(6));
        // u^7 = -u, checked against plain repeated multiplication
        let mut naive = f.one();
        for _ in 0..7 {
            naive = f.mul(naive, u);
        }
        assert_eq!(f.frobenius(u, 1), naive);
        assert_eq!(naive, f.neg(u));
        assert_eq!(f.frobenius(u, 2), u);
    }

    #[test]
    fn context_mismatch() {
        let f7 = FieldCtx::new(7, 1, 1).unwrap();
        let f49 = FieldCtx::new(7, 1, 2).unwrap();
        let a = f7.one();
        let b = f49.one();
        assert_eq!(f49.try_add(&a, &b), Err(FieldError::ContextMismatch));
        assert_eq!(f49.try_mul(&b, &a), Err(FieldError::ContextMismatch));
    }

    #[test]
    fn embed_and_enumerate() {
        let f7 = FieldCtx::new(7, 1, 1).unwrap();
        let f49 = FieldCtx::new(7, 1, 2).unwrap();
        assert_eq!(f49.embed(&f7.from_u64(3)), f49.from_u64(3));
        let all: std::collections::HashSet<_> = f49.enumerate().collect();
        assert_eq!(all.len(), 49);
    }

    #[test]
    fn uniform_draws_f7() {
        let f = FieldCtx::new(7, 1, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 100_000u64;
        let mut counts = [0u64; 7];
        for _ in 0..draws {
            counts[f.index_of(f.random_element(&mut rng)) as usize] += 1;
        }
        let mean = draws as f64 / 7.0;
        let sigma = (draws as f64 * (1.0 / 7.0) * (6.0 / 7.0)).sqrt();
        for c in counts {
            assert!((c as f64 - mean).abs() <= 4.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn tower_over_f4() {
        // F_16 as a quadratic extension of F_4
        let f = FieldCtx::new(2, 2, 2).unwrap();
        assert_eq!(f.order(), Some(16));
        let elems: Vec<_> = f.enumerate().collect();
        for &a in &elems {
            if a != f.zero() {
                assert_eq!(f.mul(a, f.inv(a).unwrap()), f.one());
            }
            assert_eq!(f.frobenius(a, 2), a);
        }
        let fixed = elems.iter().filter(|&&a| f.frobenius(a, 1) == a).count();
        assert_eq!(fixed, 4);
    }

    #[test]
    fn table_matches_ctx() {
        for (p, r, n) in [(7, 1, 2), (2, 1, 4), (3, 2, 2), (5, 1, 1), (2, 1, 1)] {
            let f = FieldCtx::new(p, r, n).unwrap();
            let t = TableField::new(&f).unwrap();
            let elems: Vec<_> = f.enumerate().collect();
            for &a in &elems {
                let ca = t.encode(&a);
                assert_eq!(t.decode(ca), a);
                assert_eq!(t.neg(ca), t.encode(&f.neg(a)));
                assert_eq!(t.pth_root(ca), t.encode(&f.pth_root(a)));
                assert_eq!(t.frobenius(ca, 1), t.encode(&f.frobenius(a, 1)));
                for &b in elems.iter().step_by(3) {
                    let cb = t.encode(&b);
                    assert_eq!(t.add(ca, cb), t.encode(&f.add(a, b)));
                    assert_eq!(t.mul(ca, cb), t.encode(&f.mul(a, b)));
                    assert_eq!(t.sub(ca, cb), t.encode(&f.sub(a, b)));
                }
            }
            let mut r1 = ChaCha8Rng::seed_from_u64(3);
            let mut r2 = ChaCha8Rng::seed_from_u64(3);
            for _ in 0..50 {
                assert_eq!(t.decode(t.random(&mut r1)), f.random(&mut r2));
            }
        }
    }
}
