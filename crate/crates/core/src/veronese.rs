//! Curves of degree `e` against a fixed plane curve, through the Veronese
//! point map `(x:y:z) -> (x^a y^b z^c)_{a+b+c=e}`.

use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::curve::{self, CurveError, Exponent, PlaneCurve, ProjPoint, TernaryForm};
use crate::ff::{Field, FieldError, Lift, TableField};
use crate::incidence::{trial_count, trial_rng, ExperimentConfig, IncidenceError, IncidenceReport, Mode, Tally};
use crate::upoly::PolyError;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VeroneseError {
    #[error("degree e must be at least 1")]
    DegreeZero,
    #[error("the degree-e curve contains a component of the curve")]
    ContainsComponent,
    #[error("work of {needed} exceeds the budget {budget}")]
    BudgetExceeded { needed: u64, budget: u64 },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Incidence(#[from] IncidenceError),
}

impl From<PolyError> for VeroneseError {
    fn from(e: PolyError) -> Self {
        VeroneseError::Curve(e.into())
    }
}

/// Exponents `(a, b, c)` with `a + b + c = e`, lexicographically descending.
pub fn monomials(e: u32) -> Vec<Exponent> {
    let mut out = Vec::with_capacity(monomial_count(e));
    for a in (0..=e).rev() {
        for b in (0..=e - a).rev() {
            out.push([a, b, e - a - b]);
        }
    }
    out
}

/// `M = C(e + 2, 2)`.
pub fn monomial_count(e: u32) -> usize {
    let e = e as usize;
    (e + 1) * (e + 2) / 2
}

/// Degree-`e` form with one coefficient per monomial in [`monomials`] order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DenseForm<E> {
    e: u32,
    coeffs: Vec<E>,
}

impl<E: Copy> DenseForm<E> {
    pub fn new(e: u32, coeffs: Vec<E>) -> Self {
        assert_eq!(coeffs.len(), monomial_count(e));
        DenseForm { e, coeffs }
    }

    pub fn degree(&self) -> u32 {
        self.e
    }

    pub fn coeffs(&self) -> &[E] {
        &self.coeffs
    }

    pub fn to_ternary<F: Field<Elem = E>>(&self, f: &F) -> TernaryForm<E> {
        TernaryForm::from_terms(
            f,
            self.e,
            monomials(self.e).into_iter().zip(self.coeffs.iter().copied()),
        )
    }

    /// `<coeffs, v_e(P)>`, which vanishes exactly when `E(P) = 0`.
    pub fn pair<F: Field<Elem = E>>(&self, f: &F, image: &[E]) -> E {
        self.coeffs
            .iter()
            .zip(image)
            .fold(f.zero(), |acc, (&a, &b)| f.add(acc, f.mul(a, b)))
    }
}

fn normalize<F: Field>(f: &F, v: &mut [F::Elem]) -> bool {
    let Some(lead) = v.iter().copied().find(|&c| !f.is_zero(c)) else {
        return false;
    };
    let inv = f.inv(lead).unwrap();
    for c in v.iter_mut() {
        *c = f.mul(*c, inv);
    }
    true
}

/// Coordinates of `v_e(P)`, normalized.
pub fn veronese_point<F: Field>(f: &F, p: &ProjPoint<F::Elem>, e: u32) -> Vec<F::Elem> {
    let pows: Vec<Vec<F::Elem>> = p
        .coords()
        .iter()
        .map(|&v| {
            let mut out = vec![f.one()];
            for i in 1..=e as usize {
                out.push(f.mul(out[i - 1], v));
            }
            out
        })
        .collect();
    let mut image: Vec<F::Elem> = monomials(e)
        .iter()
        .map(|m| {
            f.mul(
                f.mul(pows[0][m[0] as usize], pows[1][m[1] as usize]),
                pows[2][m[2] as usize],
            )
        })
        .collect();
    normalize(f, &mut image);
    image
}

/// Uniform over projective classes of nonzero coefficient vectors.
/// For `e = 1` this draws exactly the lines of `incidence::random_line`.
pub fn random_degree_e_curve<F: Field, R: Rng + ?Sized>(f: &F, e: u32, rng: &mut R) -> DenseForm<F::Elem> {
    let m = monomial_count(e);
    loop {
        let mut coeffs: Vec<F::Elem> = (0..m).map(|_| f.random(rng)).collect();
        if normalize(f, &mut coeffs) {
            return DenseForm { e, coeffs };
        }
    }
}

/// Number of degree-`e` curves, `(Q^M - 1)/(Q - 1)` for `Q = |F|`; `None` on overflow.
pub fn curve_class_count<F: Field>(f: &F, e: u32) -> Option<u64> {
    let q = f.order()?;
    let mut total: u64 = 0;
    for _ in 0..monomial_count(e) {
        total = total.checked_mul(q)?.checked_add(1)?;
    }
    Some(total)
}

/// The `index`-th class: grouped by position of the leading 1, then the
/// trailing coordinates in base-`Q` order.
fn curve_at<F: Field>(f: &F, e: u32, mut index: u64) -> DenseForm<F::Elem> {
    let q = f.order().unwrap();
    let m = monomial_count(e);
    for lead in 0..m {
        let tail = (m - lead - 1) as u32;
        let block = q.pow(tail);
        if index < block {
            let mut coeffs = vec![f.zero(); m];
            coeffs[lead] = f.one();
            for j in (lead + 1..m).rev() {
                coeffs[j] = f.element(index % q);
                index /= q;
            }
            return DenseForm { e, coeffs };
        }
        index -= block;
    }
    unreachable!("index beyond class count")
}

/// Rational points of `E` among the Veronese images of `C`'s points.
/// Fails with `ContainsComponent` when `E` vanishes on all of them and there
/// are more than `e d` points.
pub fn pair_intersection_count<F: Field>(
    f: &F,
    images: &[Vec<F::Elem>],
    d: usize,
    form: &DenseForm<F::Elem>,
) -> Result<usize, VeroneseError> {
    let k = images.iter().filter(|v| f.is_zero(form.pair(f, v))).count();
    if k == images.len() && k > form.e as usize * d {
        return Err(VeroneseError::ContainsComponent);
    }
    Ok(k)
}

fn run_pair_in<F: Lift>(
    curve: &PlaneCurve,
    field: &F,
    e: u32,
    cfg: &ExperimentConfig,
) -> Result<IncidenceReport, VeroneseError> {
    let q = field.order().unwrap_or(u64::MAX);
    if q > curve::DEFAULT_POINT_BUDGET {
        return Err(VeroneseError::BudgetExceeded {
            needed: q,
            budget: curve::DEFAULT_POINT_BUDGET,
        });
    }
    let trials = match cfg.mode {
        Mode::Sample { .. } => trial_count(field, cfg)?,
        Mode::Exhaustive => {
            let needed = curve_class_count(field, e).unwrap_or(u64::MAX);
            if needed > cfg.exhaustive_budget {
                return Err(VeroneseError::BudgetExceeded {
                    needed,
                    budget: cfg.exhaustive_budget,
                });
            }
            needed
        }
    };
    let d = curve.degree();
    let de = d * e as usize;
    let images: Vec<Vec<F::Elem>> = curve::rational_points(curve, field)
        .iter()
        .map(|p| veronese_point(field, p, e))
        .collect();
    let tally = (0..trials)
        .into_par_iter()
        .fold(
            || Tally::new(de),
            |mut acc, i| {
                let form = match cfg.mode {
                    Mode::Exhaustive => curve_at(field, e, i),
                    Mode::Sample { .. } => random_degree_e_curve(field, e, &mut trial_rng(cfg.seed, i)),
                };
                match pair_intersection_count(field, &images, d, &form) {
                    Ok(k) => {
                        acc.trials += 1;
                        acc.k_hist[k] += 1;
                    }
                    Err(_) => {
                        acc.trials += 1;
                        acc.contains_component += 1;
                    }
                }
                acc
            },
        )
        .reduce(|| Tally::new(de), Tally::merge);
    let excluded = tally.contains_component;
    let mut report = IncidenceReport::from_tally(de, field.ctx(), *cfg, tally);
    report.excluded_contains_component = Some(excluded);
    report.e = Some(e);
    report.de = Some(de);
    Ok(report)
}

/// Tallies `|E(F) ∩ C(F)|` over random (or all) curves `E` of degree `e`
/// over `F_{q^N}`; the denominator is the number of trials.
pub fn run_pair_experiment(
    curve: &PlaneCurve,
    e: u32,
    cfg: &ExperimentConfig,
) -> Result<IncidenceReport, VeroneseError> {
    if e == 0 {
        return Err(VeroneseError::DegreeZero);
    }
    let ext = curve.ctx().extension(cfg.n)?;
    match TableField::new(&ext) {
        Ok(t) => run_pair_in(curve, &t, e, cfg),
        Err(_) => run_pair_in(curve, &ext, e, cfg),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Homogeneity {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Two-sample chi-square homogeneity test on the `k` histograms; bins empty
/// in both samples are dropped.
pub fn homogeneity(a: &IncidenceReport, b: &IncidenceReport) -> Homogeneity {
    let (na, nb) = (a.total_lines_considered as f64, b.total_lines_considered as f64);
    let bins: Vec<(f64, f64)> = (0..=a.d.max(b.d))
        .map(|k| (a.count(k) as f64, b.count(k) as f64))
        .filter(|(x, y)| x + y > 0.0)
        .collect();
    let mut statistic = 0.0;
    for &(x, y) in &bins {
        let pooled = (x + y) / (na + nb);
        let (ea, eb) = (pooled * na, pooled * nb);
        statistic += (x - ea).powi(2) / ea + (y - eb).powi(2) / eb;
    }
    let dof = bins.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        1.0 - ChiSquared::new(dof as f64).unwrap().cdf(statistic)
    };
    Homogeneity {
        statistic,
        dof,
        p_value,
    }
}
