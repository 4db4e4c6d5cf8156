//! Plane projective curves `C = {F = 0}` over `F_q`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ff::{Field, FieldCtx, FieldElement, FieldError, Lift, TableField};
use crate::incidence;
use crate::upoly::{form_mul, BinaryForm, PolyError, PolyRing, UPoly};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CurveError {
    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("polynomial is not homogeneous")]
    NotHomogeneous,
    #[error("polynomial is zero over the base field")]
    ZeroPolynomial,
    #[error("text curves require a prime base field; use the JSON coefficient map")]
    NonPrimeTextInput,
    #[error("point or field does not belong to this curve's tower")]
    ContextMismatch,
    #[error("work of {needed} exceeds the budget {budget}")]
    BudgetExceeded { needed: u64, budget: u64 },
    #[error("singular locus search degenerate after {0} coordinate changes")]
    DegenerateAfterRetries(usize),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Exponent triple `(a, b, c)` of the monomial `x^a y^b z^c`.
pub type Exponent = [u32; 3];

/// Sparse homogeneous ternary form; terms sorted by exponent, descending.
/// May be the zero form (e.g. a vanishing partial derivative).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TernaryForm<E> {
    degree: u32,
    terms: Vec<(Exponent, E)>,
}

impl<E: Copy> TernaryForm<E> {
    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn terms(&self) -> &[(Exponent, E)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Collects terms, dropping zero coefficients and merging duplicates.
    pub fn from_terms<F: Field<Elem = E>>(f: &F, degree: u32, terms: impl IntoIterator<Item = (Exponent, E)>) -> Self {
        let mut map: BTreeMap<Exponent, E> = BTreeMap::new();
        for (e, c) in terms {
            debug_assert_eq!(e.iter().sum::<u32>(), degree);
            let slot = map.entry(e).or_insert_with(|| f.zero());
            *slot = f.add(*slot, c);
        }
        let mut terms: Vec<_> = map.into_iter().filter(|(_, c)| !f.is_zero(*c)).collect();
        terms.reverse();
        TernaryForm { degree, terms }
    }

    pub fn map<G: Copy>(&self, g: impl Fn(&E) -> G) -> TernaryForm<G> {
        TernaryForm {
            degree: self.degree,
            terms: self.terms.iter().map(|(e, c)| (*e, g(c))).collect(),
        }
    }

    pub fn eval<F: Field<Elem = E>>(&self, f: &F, point: &[E; 3]) -> E {
        let d = self.degree as usize;
        let pows: Vec<Vec<E>> = point
            .iter()
            .map(|&v| {
                let mut out = Vec::with_capacity(d + 1);
                out.push(f.one());
                for i in 1..=d {
                    out.push(f.mul(out[i - 1], v));
                }
                out
            })
            .collect();
        self.terms.iter().fold(f.zero(), |acc, (e, c)| {
            let m = f.mul(
                f.mul(pows[0][e[0] as usize], pows[1][e[1] as usize]),
                pows[2][e[2] as usize],
            );
            f.add(acc, f.mul(*c, m))
        })
    }

    /// Formal partial derivative in variable `var` (0 = x, 1 = y, 2 = z).
    pub fn partial<F: Field<Elem = E>>(&self, f: &F, var: usize) -> TernaryForm<E> {
        let degree = self.degree.saturating_sub(1);
        let terms = self.terms.iter().filter(|(e, _)| e[var] > 0).map(|(e, c)| {
            let mut e2 = *e;
            e2[var] -= 1;
            (e2, f.mul(*c, f.from_u64(e[var] as u64)))
        });
        TernaryForm::from_terms(f, degree, terms.collect::<Vec<_>>())
    }

    pub fn partials<F: Field<Elem = E>>(&self, f: &F) -> [TernaryForm<E>; 3] {
        [self.partial(f, 0), self.partial(f, 1), self.partial(f, 2)]
    }

    /// `G(v) = F(T v)`.
    pub fn substitute<F: Field<Elem = E>>(&self, f: &F, t: &[[E; 3]; 3]) -> TernaryForm<E> {
        // each old variable becomes a linear form sum_j t[i][j] v_j
        let linear: Vec<BTreeMap<Exponent, E>> = (0..3)
            .map(|i| {
                let mut m = BTreeMap::new();
                for j in 0..3 {
                    let mut e = [0; 3];
                    e[j] = 1;
                    m.insert(e, t[i][j]);
                }
                m
            })
            .collect();
        let d = self.degree as usize;
        let mut pows: Vec<Vec<BTreeMap<Exponent, E>>> = Vec::new();
        for lin in &linear {
            let mut v = vec![BTreeMap::from([([0, 0, 0], f.one())])];
            for k in 1..=d {
                let next = sparse_mul(f, &v[k - 1], lin);
                v.push(next);
            }
            pows.push(v);
        }
        let mut out: Vec<(Exponent, E)> = Vec::new();
        for (e, c) in &self.terms {
            let prod = sparse_mul(
                f,
                &sparse_mul(f, &pows[0][e[0] as usize], &pows[1][e[1] as usize]),
                &pows[2][e[2] as usize],
            );
            out.extend(prod.into_iter().map(|(m, v)| (m, f.mul(*c, v))));
        }
        TernaryForm::from_terms(f, self.degree, out)
    }

    /// `B(s, t) = F(s P0 + t P1)` as a binary form of degree `d`.
    pub fn restrict<F: Field<Elem = E>>(&self, f: &F, p0: &[E; 3], p1: &[E; 3]) -> BinaryForm<E> {
        let d = self.degree as usize;
        let mut pows: [Vec<Vec<E>>; 3] = Default::default();
        for v in 0..3 {
            let lin = vec![p1[v], p0[v]];
            let mut list = Vec::with_capacity(d + 1);
            list.push(vec![f.one()]);
            for k in 1..=d {
                let next = form_mul(f, &list[k - 1], &lin);
                list.push(next);
            }
            pows[v] = list;
        }
        let mut out = vec![f.zero(); d + 1];
        for (e, c) in &self.terms {
            let (a, b, cz) = (e[0] as usize, e[1] as usize, e[2] as usize);
            let term = form_mul(f, &form_mul(f, &pows[0][a], &pows[1][b]), &pows[2][cz]);
            for (k, &v) in term.iter().enumerate() {
                out[k] = f.add(out[k], f.mul(*c, v));
            }
        }
        BinaryForm::new(out)
    }

    /// `F(x0, y, 1)` as a polynomial in `y`.
    pub fn fiber<F: Field<Elem = E>>(&self, f: &F, x0: E) -> UPoly<E> {
        let d = self.degree as usize;
        let mut xp = Vec::with_capacity(d + 1);
        xp.push(f.one());
        for i in 1..=d {
            xp.push(f.mul(xp[i - 1], x0));
        }
        let mut coeffs = vec![f.zero(); d + 1];
        for (e, c) in &self.terms {
            let b = e[1] as usize;
            coeffs[b] = f.add(coeffs[b], f.mul(*c, xp[e[0] as usize]));
        }
        PolyRing::new(f).from_coeffs(coeffs)
    }

    /// `F(s, t, 0)` with `x = s`, `y = t`.
    pub fn at_infinity<F: Field<Elem = E>>(&self, f: &F) -> BinaryForm<E> {
        let d = self.degree as usize;
        let mut coeffs = vec![f.zero(); d + 1];
        for (e, c) in &self.terms {
            if e[2] == 0 {
                coeffs[e[0] as usize] = *c;
            }
        }
        BinaryForm::new(coeffs)
    }
}

fn sparse_mul<F: Field>(
    f: &F,
    a: &BTreeMap<Exponent, F::Elem>,
    b: &BTreeMap<Exponent, F::Elem>,
) -> BTreeMap<Exponent, F::Elem> {
    let mut out: BTreeMap<Exponent, F::Elem> = BTreeMap::new();
    for (ea, ca) in a {
        if f.is_zero(*ca) {
            continue;
        }
        for (eb, cb) in b {
            let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
            let slot = out.entry(e).or_insert_with(|| f.zero());
            *slot = f.add(*slot, f.mul(*ca, *cb));
        }
    }
    out
}

/// Homogeneous coordinates with the first nonzero coordinate equal to 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ProjPoint<E> {
    coords: [E; 3],
}

impl<E: Copy> ProjPoint<E> {
    /// `None` for the zero vector.
    pub fn new<F: Field<Elem = E>>(f: &F, coords: [E; 3]) -> Option<Self> {
        let lead = coords.iter().copied().find(|&c| !f.is_zero(c))?;
        let inv = f.inv(lead).unwrap();
        Some(ProjPoint {
            coords: coords.map(|c| f.mul(c, inv)),
        })
    }

    pub fn coords(&self) -> &[E; 3] {
        &self.coords
    }
}

/// The line `a x + b y + c z = 0`, stored as the normalized dual point `(a:b:c)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ProjLine<E> {
    dual: ProjPoint<E>,
}

impl<E: Copy> ProjLine<E> {
    pub fn new<F: Field<Elem = E>>(f: &F, coeffs: [E; 3]) -> Option<Self> {
        ProjPoint::new(f, coeffs).map(|dual| ProjLine { dual })
    }

    pub fn from_dual(dual: ProjPoint<E>) -> Self {
        ProjLine { dual }
    }

    pub fn dual(&self) -> &ProjPoint<E> {
        &self.dual
    }

    /// Canonical pair of points spanning the line: for `(1:b:c)` the points
    /// `(-b:1:0), (-c:0:1)`; for `(0:1:c)` the points `(1:0:0), (0:-c:1)`;
    /// for `(0:0:1)` the points `(1:0:0), (0:1:0)`.
    pub fn basis<F: Field<Elem = E>>(&self, f: &F) -> ([E; 3], [E; 3]) {
        let [a, b, c] = self.dual.coords;
        let (zero, one) = (f.zero(), f.one());
        if !f.is_zero(a) {
            ([f.neg(b), one, zero], [f.neg(c), zero, one])
        } else if !f.is_zero(b) {
            ([one, zero, zero], [zero, f.neg(c), one])
        } else {
            ([one, zero, zero], [zero, one, zero])
        }
    }

    pub fn contains<F: Field<Elem = E>>(&self, f: &F, p: &[E; 3]) -> bool {
        let c = self.dual.coords;
        let v = f.add(f.add(f.mul(c[0], p[0]), f.mul(c[1], p[1])), f.mul(c[2], p[2]));
        f.is_zero(v)
    }
}

/// A plane curve of degree `d >= 1` over the base field `F_q` (`N = 1`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlaneCurve {
    ctx: FieldCtx,
    form: TernaryForm<FieldElement>,
}

impl PlaneCurve {
    pub fn new(ctx: &FieldCtx, form: TernaryForm<FieldElement>) -> Result<Self, CurveError> {
        if form.is_zero() {
            return Err(CurveError::ZeroPolynomial);
        }
        if form.degree == 0 {
            return Err(CurveError::ZeroPolynomial);
        }
        Ok(PlaneCurve { ctx: ctx.base(), form })
    }

    /// Curve from integer coefficients over a prime field.
    pub fn from_int_terms(ctx: &FieldCtx, terms: &[(Exponent, i64)]) -> Result<Self, CurveError> {
        let base = ctx.base();
        let degree = terms.first().map_or(0, |(e, _)| e.iter().sum());
        if terms.iter().any(|(e, _)| e.iter().sum::<u32>() != degree) {
            return Err(CurveError::NotHomogeneous);
        }
        let form = TernaryForm::from_terms(&base, degree, terms.iter().map(|(e, c)| (*e, base.from_i64(*c))));
        PlaneCurve::new(&base, form)
    }

    pub fn ctx(&self) -> &FieldCtx {
        &self.ctx
    }

    pub fn form(&self) -> &TernaryForm<FieldElement> {
        &self.form
    }

    pub fn degree(&self) -> usize {
        self.form.degree as usize
    }

    /// Order of the base field.
    pub fn q(&self) -> u64 {
        self.ctx.order().expect("base field order fits in u64")
    }

    /// The defining form with coefficients embedded into `field`.
    pub fn form_over<F: Lift>(&self, field: &F) -> TernaryForm<F::Elem> {
        self.form.map(|c| field.embed_base(c))
    }

    pub fn partials(&self) -> [TernaryForm<FieldElement>; 3] {
        self.form.partials(&self.ctx)
    }

    /// `F(P)` for a point over an extension of the base field.
    pub fn evaluate<F: Lift>(&self, field: &F, point: &ProjPoint<F::Elem>) -> Result<F::Elem, CurveError> {
        self.check_tower(field.ctx())?;
        Ok(self.form_over(field).eval(field, point.coords()))
    }

    fn check_tower(&self, ext: &FieldCtx) -> Result<(), CurveError> {
        if ext.p() != self.ctx.p() || ext.r() != self.ctx.r() {
            return Err(CurveError::ContextMismatch);
        }
        Ok(())
    }

    /// The curve in the text grammar (prime fields only).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, (e, c)) in self.form.terms.iter().enumerate() {
            let v = c.flat()[0];
            if i > 0 {
                out.push_str(" + ");
            }
            let mut factors = Vec::new();
            if v != 1 || e.iter().all(|&x| x == 0) {
                factors.push(v.to_string());
            }
            for (name, &k) in ["x", "y", "z"].iter().zip(e) {
                match k {
                    0 => {}
                    1 => factors.push(name.to_string()),
                    k => factors.push(format!("{name}^{k}")),
                }
            }
            out.push_str(&factors.join("*"));
        }
        out
    }

    /// JSON coefficient map `{"a,b,c": [c_0, ..., c_(r-1)]}`.
    pub fn to_coefficient_map(&self) -> BTreeMap<String, Vec<u32>> {
        self.form
            .terms
            .iter()
            .map(|(e, c)| (format!("{},{},{}", e[0], e[1], e[2]), c.flat()[..self.ctx.r()].to_vec()))
            .collect()
    }
}

// ---- parsing ----------------------------------------------------------------

type Sparse = BTreeMap<Exponent, u64>;

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    p: u64,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, CurveError> {
        Err(CurveError::Parse {
            offset: self.pos,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn number(&mut self) -> Result<u64, CurveError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected a number");
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        // reduce digit by digit so arbitrarily long literals work
        Ok(text
            .bytes()
            .fold(0u64, |acc, b| (acc * 10 + (b - b'0') as u64) % self.p))
    }

    fn exponent(&mut self) -> Result<u32, CurveError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .or_else(|_| self.err("expected an exponent"))
    }

    fn expr(&mut self) -> Result<Sparse, CurveError> {
        let mut acc = Sparse::new();
        let mut first = true;
        loop {
            let negate = match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    false
                }
                Some(b'-') => {
                    self.pos += 1;
                    true
                }
                _ if first => false,
                _ => break,
            };
            first = false;
            let t = self.term()?;
            for (e, c) in t {
                let c = if negate { (self.p - c) % self.p } else { c };
                let slot = acc.entry(e).or_insert(0);
                *slot = (*slot + c) % self.p;
            }
        }
        acc.retain(|_, c| *c != 0);
        Ok(acc)
    }

    fn term(&mut self) -> Result<Sparse, CurveError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                }
                Some(c) if c.is_ascii_digit() || matches!(c, b'x' | b'y' | b'z' | b'(') => {}
                _ => break,
            }
            let f = self.factor()?;
            acc = sparse_mul_mod(&acc, &f, self.p);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Sparse, CurveError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let k = self.exponent()?;
            let mut acc = Sparse::from([([0, 0, 0], 1 % self.p)]);
            for _ in 0..k {
                acc = sparse_mul_mod(&acc, &base, self.p);
            }
            acc.retain(|_, c| *c != 0);
            return Ok(acc);
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Sparse, CurveError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return self.err("expected `)`");
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c @ (b'x' | b'y' | b'z')) => {
                self.pos += 1;
                let mut e = [0; 3];
                e[(c - b'x') as usize] = 1;
                Ok(Sparse::from([(e, 1 % self.p)]))
            }
            Some(c) if c.is_ascii_digit() => {
                let v = self.number()?;
                Ok(Sparse::from([([0, 0, 0], v)]))
            }
            Some(c) => self.err(format!("unexpected character `{}`", c as char)),
            None => self.err("unexpected end of input"),
        }
    }
}

fn sparse_mul_mod(a: &Sparse, b: &Sparse, p: u64) -> Sparse {
    let mut out = Sparse::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
            let slot = out.entry(e).or_insert(0);
            *slot = (*slot + ca * cb) % p;
        }
    }
    out.retain(|_, c| *c != 0);
    out
}

/// Parses the curve grammar: terms `k*x^a*y^b*z^c` joined by `+`/`-`, with
/// parentheses and powers of parenthesized groups also accepted.
pub fn parse_curve(text: &str, ctx: &FieldCtx) -> Result<PlaneCurve, CurveError> {
    if ctx.r() != 1 {
        return Err(CurveError::NonPrimeTextInput);
    }
    let mut parser = Parser {
        src: text.as_bytes(),
        pos: 0,
        p: ctx.p(),
    };
    let poly = parser.expr()?;
    if parser.peek().is_some() {
        return parser.err("trailing input");
    }
    let base = ctx.base();
    if poly.is_empty() {
        // distinguish "nothing parsed" from "everything vanished mod p"
        return Err(CurveError::ZeroPolynomial);
    }
    let degree: u32 = poly.keys().next().unwrap().iter().sum();
    if poly.keys().any(|e| e.iter().sum::<u32>() != degree) {
        return Err(CurveError::NotHomogeneous);
    }
    let form = TernaryForm::from_terms(&base, degree, poly.into_iter().map(|(e, c)| (e, base.from_u64(c))));
    PlaneCurve::new(&base, form)
}

/// Parses `{"a,b,c": [c_0, ..., c_(r-1)]}` over any `F_q`.
pub fn parse_curve_json(text: &str, ctx: &FieldCtx) -> Result<PlaneCurve, CurveError> {
    let map: BTreeMap<String, Vec<u64>> = serde_json::from_str(text).map_err(|e| CurveError::Parse {
        offset: e.column(),
        message: e.to_string(),
    })?;
    let base = ctx.base();
    let mut terms = Vec::new();
    let mut degree = None;
    for (key, coeffs) in map {
        let parts: Vec<u32> = key
            .split(',')
            .map(|s| s.trim().parse::<u32>())
            .collect::<Result<_, _>>()
            .map_err(|e| CurveError::Parse {
                offset: 0,
                message: format!("bad exponent key `{key}`: {e}"),
            })?;
        if parts.len() != 3 {
            return Err(CurveError::Parse {
                offset: 0,
                message: format!("exponent key `{key}` must have three entries"),
            });
        }
        if coeffs.len() > ctx.r() {
            return Err(CurveError::Parse {
                offset: 0,
                message: format!("coefficient for `{key}` has more than r = {} entries", ctx.r()),
            });
        }
        let e = [parts[0], parts[1], parts[2]];
        let d: u32 = e.iter().sum();
        if *degree.get_or_insert(d) != d {
            return Err(CurveError::NotHomogeneous);
        }
        terms.push((e, base.base_element(&coeffs)));
    }
    let form = TernaryForm::from_terms(&base, degree.unwrap_or(0), terms);
    PlaneCurve::new(&base, form)
}

// ---- point counting -------------------------------------------------------------

/// Default limit on `q^N` for fiberwise point enumeration.
pub const DEFAULT_POINT_BUDGET: u64 = 1 << 24;

fn check_budget(needed: u64, budget: u64) -> Result<(), CurveError> {
    if needed > budget {
        Err(CurveError::BudgetExceeded { needed, budget })
    } else {
        Ok(())
    }
}

/// `|C(F)|` for any field containing the base field, one root count per
/// `x`-fiber of the affine chart `z = 1` plus the line `z = 0`.
pub fn point_count_in<F: Lift>(curve: &PlaneCurve, field: &F) -> u64 {
    let order = field.order().expect("enumerable field");
    let form = curve.form_over(field);
    let ring = PolyRing::new(field);
    let affine: u64 = (0..order)
        .into_par_iter()
        .map(|i| {
            let g = form.fiber(field, field.element(i));
            if g.is_zero() {
                order
            } else {
                ring.count_roots(&g).unwrap() as u64
            }
        })
        .sum();
    let inf = form.at_infinity(field);
    let at_inf = match ring.projective_root_count(&inf) {
        Ok(k) => k as u64,
        Err(_) => order + 1,
    };
    affine + at_inf
}

/// `|C(F_{q^N})|`.
pub fn point_count(curve: &PlaneCurve, n: usize, budget: u64) -> Result<u64, CurveError> {
    let ext = curve.ctx.extension(n)?;
    let order = ext.order().unwrap_or(u64::MAX);
    check_budget(order, budget)?;
    Ok(match TableField::new(&ext) {
        Ok(t) => point_count_in(curve, &t),
        Err(_) => point_count_in(curve, &ext),
    })
}

/// All points of `C(F)`, sorted by the indices of their normalized coordinates.
pub fn rational_points<F: Lift>(curve: &PlaneCurve, field: &F) -> Vec<ProjPoint<F::Elem>> {
    let order = field.order().expect("enumerable field");
    let form = curve.form_over(field);
    let ring = PolyRing::new(field);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut points = Vec::new();
    for i in 0..order {
        let x0 = field.element(i);
        let g = form.fiber(field, x0);
        let ys: Vec<F::Elem> = if g.is_zero() {
            (0..order).map(|j| field.element(j)).collect()
        } else {
            ring.roots(&g, &mut rng).unwrap()
        };
        points.extend(
            ys.into_iter()
                .map(|y| ProjPoint::new(field, [x0, y, field.one()]).unwrap()),
        );
    }
    let inf = form.at_infinity(field);
    if ring.form_is_zero(&inf) {
        points.push(ProjPoint::new(field, [field.one(), field.zero(), field.zero()]).unwrap());
        for j in 0..order {
            points.push(ProjPoint::new(field, [field.element(j), field.one(), field.zero()]).unwrap());
        }
    } else {
        // (x:y:0) with x = s, y = t: finite roots are s/t, infinity is (1:0:0)
        let f = ring.dehomogenize(&inf);
        if ring.infinity_multiplicity(&inf) > 0 {
            points.push(ProjPoint::new(field, [field.one(), field.zero(), field.zero()]).unwrap());
        }
        if !f.is_zero() {
            for s in ring.roots(&f, &mut rng).unwrap() {
                points.push(ProjPoint::new(field, [s, field.one(), field.zero()]).unwrap());
            }
        }
    }
    points.sort_by_key(|p| p.coords().map(|c| field.index_of(c)));
    points
}

// ---- singular locus -------------------------------------------------------------

/// A singular point defined over `F_{q^m}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SingularPoint {
    pub ext_degree: usize,
    pub point: ProjPoint<FieldElement>,
}

/// Number of random coordinate changes tried before giving up.
pub const SINGULAR_RETRIES: usize = 8;

fn det_bareiss<F: Field>(ring: PolyRing<'_, F>, mut m: Vec<Vec<UPoly<F::Elem>>>) -> UPoly<F::Elem> {
    let n = m.len();
    if n == 0 {
        return ring.one();
    }
    let mut negate = false;
    let mut prev = ring.one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                Some(i) => {
                    m.swap(i, k);
                    negate = !negate;
                }
                None => return ring.zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = ring.sub(&ring.mul(&m[i][j], &m[k][k]), &ring.mul(&m[i][k], &m[k][j]));
                m[i][j] = ring.exact_div(&v, &prev);
            }
        }
        prev = m[k][k].clone();
    }
    let det = m[n - 1][n - 1].clone();
    if negate {
        ring.neg(&det)
    } else {
        det
    }
}

/// Coefficients in `z` (formal degree `deg`) of `G(x, 1, z)`, each a polynomial in `x`.
fn z_coefficients<F: Field>(ring: PolyRing<'_, F>, g: &TernaryForm<F::Elem>, deg: usize) -> Vec<UPoly<F::Elem>> {
    let f = ring.field();
    let mut out: Vec<Vec<F::Elem>> = vec![vec![f.zero(); deg + 1]; deg + 1];
    for (e, c) in g.terms() {
        out[e[2] as usize][e[0] as usize] = f.add(out[e[2] as usize][e[0] as usize], *c);
    }
    out.into_iter().map(|v| ring.from_coeffs(v)).collect()
}

/// `Res_z(A(x, 1, z), B(x, 1, z))` at formal degree `deg` in `z`.
fn resultant_in_z<F: Field>(
    ring: PolyRing<'_, F>,
    a: &TernaryForm<F::Elem>,
    b: &TernaryForm<F::Elem>,
    deg: usize,
) -> UPoly<F::Elem> {
    let ca = z_coefficients(ring, a, deg);
    let cb = z_coefficients(ring, b, deg);
    let n = 2 * deg;
    let mut m = vec![vec![ring.zero(); n]; n];
    for row in 0..deg {
        for k in 0..=deg {
            // highest power first
            m[row][row + k] = ca[deg - k].clone();
            m[deg + row][row + k] = cb[deg - k].clone();
        }
    }
    det_bareiss(ring, m)
}

fn random_invertible<R: Rng + ?Sized>(f: &FieldCtx, rng: &mut R) -> [[FieldElement; 3]; 3] {
    loop {
        let t: [[FieldElement; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| f.random(rng)));
        let det = {
            let m = |i: usize, j: usize| t[i][j];
            let a = f.mul(m(0, 0), f.sub(f.mul(m(1, 1), m(2, 2)), f.mul(m(1, 2), m(2, 1))));
            let b = f.mul(m(0, 1), f.sub(f.mul(m(1, 0), m(2, 2)), f.mul(m(1, 2), m(2, 0))));
            let c = f.mul(m(0, 2), f.sub(f.mul(m(1, 0), m(2, 1)), f.mul(m(1, 1), m(2, 0))));
            f.add(f.sub(a, b), c)
        };
        if !f.is_zero(det) {
            return t;
        }
    }
}

enum Attempt {
    Found(Vec<SingularPoint>),
    Retry,
}

/// All singular points of `C` over the algebraic closure, each reported once
/// over the extension `F_{q^m}` generated by its coordinates.
pub fn singular_points<R: Rng + ?Sized>(curve: &PlaneCurve, rng: &mut R) -> Result<Vec<SingularPoint>, CurveError> {
    if curve.degree() < 2 {
        return Ok(Vec::new());
    }
    for _ in 0..SINGULAR_RETRIES {
        let t = random_invertible(&curve.ctx, rng);
        if let Attempt::Found(mut pts) = singular_attempt(curve, &t, rng)? {
            pts.sort_by_key(|s| (s.ext_degree, s.point.coords().map(|c| c.flat().to_vec())));
            return Ok(pts);
        }
    }
    Err(CurveError::DegenerateAfterRetries(SINGULAR_RETRIES))
}

fn singular_attempt<R: Rng + ?Sized>(
    curve: &PlaneCurve,
    t: &[[FieldElement; 3]; 3],
    rng: &mut R,
) -> Result<Attempt, CurveError> {
    let base = &curve.ctx;
    let ring = PolyRing::new(base);
    let d = curve.degree();
    let g = curve.form.substitute(base, t);
    let [gx, gy, gz] = g.partials(base);
    let res = resultant_in_z(ring, &gx, &gy, d - 1);
    if res.is_zero() {
        return Ok(Attempt::Retry);
    }
    let forms = [&g, &gx, &gy, &gz];
    let mut found = Vec::new();

    // points with y != 0: (alpha : 1 : beta)
    if res.degree().unwrap() > 0 {
        for (h, _) in ring.factor(&res, rng)? {
            let m = h.degree().unwrap();
            let ext = base.extension(m)?;
            let er = PolyRing::new(&ext);
            let h_ext = er.from_coeffs(h.coeffs().iter().map(|c| ext.embed(c)).collect());
            for alpha in er.roots(&h_ext, rng)? {
                let mut gcd = er.zero();
                for form in forms {
                    let fe = form.map(|c| ext.embed(c));
                    let mut coeffs = vec![ext.zero(); d + 1];
                    let pts = [alpha, ext.one()];
                    for (e, c) in fe.terms() {
                        let v = ext.mul(
                            *c,
                            ext.mul(
                                Field::pow(&ext, pts[0], e[0] as u64),
                                Field::pow(&ext, pts[1], e[1] as u64),
                            ),
                        );
                        coeffs[e[2] as usize] = ext.add(coeffs[e[2] as usize], v);
                    }
                    gcd = er.gcd(&gcd, &er.from_coeffs(coeffs));
                }
                if gcd.is_zero() {
                    return Ok(Attempt::Retry);
                }
                if gcd.degree().unwrap() == 0 {
                    continue;
                }
                let sqf = er.squarefree_decomposition(&gcd);
                let radical = sqf.iter().fold(er.one(), |acc, (p, _)| er.mul(&acc, p));
                let betas = er.roots(&radical, rng)?;
                if betas.len() != radical.degree().unwrap() {
                    // fiber not split over F_{q^m}: points share a projection
                    return Ok(Attempt::Retry);
                }
                for beta in betas {
                    found.push(undo_change(&ext, t, [alpha, ext.one(), beta], m));
                }
            }
        }
    }

    // points with y = 0: (alpha : 0 : 1) and (1 : 0 : 0)
    let restricted: Vec<BinaryForm<FieldElement>> = forms
        .iter()
        .map(|form| {
            // x = s, z = t
            let mut coeffs = vec![base.zero(); form.degree() as usize + 1];
            for (e, c) in form.terms() {
                if e[1] == 0 {
                    coeffs[e[0] as usize] = *c;
                }
            }
            BinaryForm::new(coeffs)
        })
        .collect();
    if restricted.iter().all(|b| ring.form_is_zero(b)) {
        return Ok(Attempt::Retry);
    }
    let mut gcd = ring.zero();
    for b in &restricted {
        gcd = ring.gcd(&gcd, &ring.dehomogenize(b));
    }
    if gcd.degree().unwrap_or(0) > 0 {
        let sqf = ring.squarefree_decomposition(&gcd);
        for (p, _) in sqf {
            for (h, _) in ring.factor(&p, rng)? {
                let m = h.degree().unwrap();
                let ext = base.extension(m)?;
                let er = PolyRing::new(&ext);
                let h_ext = er.from_coeffs(h.coeffs().iter().map(|c| ext.embed(c)).collect());
                for alpha in er.roots(&h_ext, rng)? {
                    found.push(undo_change(&ext, t, [alpha, ext.zero(), ext.one()], m));
                }
            }
        }
    }
    let x_axis = [base.one(), base.zero(), base.zero()];
    if forms.iter().all(|f| base.is_zero(f.eval(base, &x_axis))) {
        found.push(undo_change(base, t, x_axis, 1));
    }

    // every reported point must satisfy F = F_x = F_y = F_z = 0
    let partials = curve.partials();
    for sp in &found {
        let ext = base.extension(sp.ext_degree)?;
        let all = std::iter::once(&curve.form).chain(partials.iter());
        for form in all {
            let v = form.map(|c| ext.embed(c)).eval(&ext, sp.point.coords());
            if !ext.is_zero(v) {
                return Ok(Attempt::Retry);
            }
        }
    }
    Ok(Attempt::Found(found))
}

fn undo_change(ext: &FieldCtx, t: &[[FieldElement; 3]; 3], v: [FieldElement; 3], m: usize) -> SingularPoint {
    let w: [FieldElement; 3] =
        std::array::from_fn(|i| (0..3).fold(ext.zero(), |acc, j| ext.add(acc, ext.mul(ext.embed(&t[i][j]), v[j]))));
    SingularPoint {
        ext_degree: m,
        point: ProjPoint::new(ext, w).expect("invertible change keeps points nonzero"),
    }
}

// ---- absolute irreducibility ------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelEstimate {
    pub n: usize,
    pub points: u64,
    /// `round(points / q^N)`.
    pub components: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Irreducibility {
    /// Smooth, hence absolutely irreducible.
    ProvenYes,
    LikelyYes {
        estimates: Vec<LevelEstimate>,
    },
    LikelyNo {
        components: u64,
        estimates: Vec<LevelEstimate>,
    },
    Unknown,
}

impl Irreducibility {
    pub fn accepted(&self) -> bool {
        matches!(self, Irreducibility::ProvenYes | Irreducibility::LikelyYes { .. })
    }
}

/// Smoothness proves absolute irreducibility; otherwise the number of
/// components is estimated as `round(|C(F_{q^N})| / q^N)` at the largest
/// affordable level in `levels`.
pub fn is_absolutely_irreducible<R: Rng + ?Sized>(
    curve: &PlaneCurve,
    levels: &[usize],
    budget: u64,
    rng: &mut R,
) -> Irreducibility {
    if curve.degree() == 1 {
        return Irreducibility::ProvenYes;
    }
    if let Ok(pts) = singular_points(curve, rng) {
        if pts.is_empty() {
            return Irreducibility::ProvenYes;
        }
    }
    let q = curve.q();
    let mut estimates = Vec::new();
    let mut sorted: Vec<usize> = levels.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    for n in sorted {
        let Some(qn) = q.checked_pow(n as u32) else { continue };
        let Ok(points) = point_count(curve, n, budget) else {
            continue;
        };
        let components = ((points as f64) / (qn as f64)).round() as u64;
        estimates.push(LevelEstimate { n, points, components });
    }
    match estimates.last() {
        None => Irreducibility::Unknown,
        Some(last) if last.components == 1 => Irreducibility::LikelyYes { estimates },
        Some(last) => Irreducibility::LikelyNo {
            components: last.components,
            estimates,
        },
    }
}

// ---- simple tangency ------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TangencyWitness {
    /// Extension degree of the field the line is defined over.
    pub n: usize,
    pub line: ProjLine<FieldElement>,
}

/// Whether `line` meets the curve with multiplicities `{2, 1^(d-2)}` over the
/// closure and passes through no singular point.
pub fn is_tangency_witness<F: Field>(
    form: &TernaryForm<F::Elem>,
    partials: &[TernaryForm<F::Elem>; 3],
    field: &F,
    line: &ProjLine<F::Elem>,
) -> bool {
    let d = form.degree() as usize;
    if d < 2 {
        return false;
    }
    let ring = PolyRing::new(field);
    let (p0, p1) = line.basis(field);
    let b = form.restrict(field, &p0, &p1);
    let Ok(pattern) = ring.form_multiplicity_pattern(&b) else {
        return false;
    };
    let mut expected = vec![1usize; d - 2];
    expected.insert(0, 2);
    if pattern != expected {
        return false;
    }
    let restricted: Vec<BinaryForm<F::Elem>> = partials.iter().map(|g| g.restrict(field, &p0, &p1)).collect();
    let refs: Vec<&BinaryForm<F::Elem>> = std::iter::once(&b).chain(restricted.iter()).collect();
    !ring.form_common_root(&refs)
}

fn witness_in<F: Lift>(
    curve: &PlaneCurve,
    field: &F,
    budget: u64,
    samples: u64,
    seed: u64,
) -> Option<ProjLine<FieldElement>> {
    let form = curve.form_over(field);
    let partials = form.partials(field);
    let to_line = |l: ProjLine<F::Elem>| {
        let c = l.dual().coords().map(|e| field.to_element(e));
        ProjLine::new(field.ctx(), c).unwrap()
    };
    let lines = incidence::line_count(field);
    if lines <= budget {
        incidence::all_lines(field)
            .find(|l| is_tangency_witness(&form, &partials, field, l))
            .map(to_line)
    } else {
        (0..samples)
            .map(|i| incidence::random_line(field, &mut incidence::trial_rng(seed, i)))
            .find(|l| is_tangency_witness(&form, &partials, field, l))
            .map(to_line)
    }
}

/// First simple-tangency witness line over `F_{q^N}`, `N = 1..=max_n`:
/// exhaustive while the line count fits `budget`, otherwise `samples`
/// seeded random lines.
pub fn simple_tangency_witness(
    curve: &PlaneCurve,
    max_n: usize,
    budget: u64,
    samples: u64,
    seed: u64,
) -> Result<Option<TangencyWitness>, CurveError> {
    for n in 1..=max_n {
        let ext = curve.ctx.extension(n)?;
        let found = match TableField::new(&ext) {
            Ok(t) => witness_in(curve, &t, budget, samples, seed),
            Err(_) => witness_in(curve, &ext, budget, samples, seed),
        };
        if let Some(line) = found {
            return Ok(Some(TangencyWitness { n, line }));
        }
    }
    Ok(None)
}
