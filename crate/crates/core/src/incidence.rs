//! Line incidence experiments: enumerate or sample lines of `P^2(F_{q^N})`,
//! restrict the curve to each, and tally rational intersection counts and
//! factorization types.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::{CurveError, PlaneCurve, ProjLine, TernaryForm};
use crate::ff::{Field, FieldCtx, FieldError, Lift, TableField};
use crate::theory::{self, decimal, Prediction, Rational, TheoryError};
use crate::upoly::{BinaryForm, Partition, PolyRing};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IncidenceError {
    #[error("work of {needed} exceeds the budget {budget}")]
    BudgetExceeded { needed: u64, budget: u64 },
    #[error("line is contained in the curve")]
    LineOnCurve,
    #[error("sample count must be at least 1")]
    EmptySample,
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
}

pub const DEFAULT_EXHAUSTIVE_BUDGET: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mode {
    Exhaustive,
    Sample { count: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub mode: Mode,
    pub seed: u64,
    pub exhaustive_budget: u64,
}

impl ExperimentConfig {
    pub fn exhaustive(n: usize) -> Self {
        ExperimentConfig {
            n,
            mode: Mode::Exhaustive,
            seed: 0,
            exhaustive_budget: DEFAULT_EXHAUSTIVE_BUDGET,
        }
    }

    pub fn sample(n: usize, count: u64, seed: u64) -> Self {
        ExperimentConfig {
            n,
            mode: Mode::Sample { count },
            seed,
            exhaustive_budget: DEFAULT_EXHAUSTIVE_BUDGET,
        }
    }
}

/// `q^2 + q + 1` for `q = |F|`, saturating.
pub fn line_count<F: Field>(field: &F) -> u64 {
    let q = field.order().unwrap_or(u64::MAX);
    q.checked_mul(q)
        .and_then(|v| v.checked_add(q))
        .and_then(|v| v.checked_add(1))
        .unwrap_or(u64::MAX)
}

/// The `index`-th line in the order `(a:b:1)` for all `a, b`, then `(a:1:0)`,
/// then `(1:0:0)`.
pub fn line_at<F: Field>(field: &F, index: u64) -> ProjLine<F::Elem> {
    let q = field.order().expect("enumerable field");
    let (zero, one) = (field.zero(), field.one());
    let coeffs = if index < q * q {
        [field.element(index / q), field.element(index % q), one]
    } else if index < q * q + q {
        [field.element(index - q * q), one, zero]
    } else {
        [one, zero, zero]
    };
    ProjLine::new(field, coeffs).unwrap()
}

/// Every line of `P^2(F)` exactly once, in three-chart order.
pub fn all_lines<F: Field>(field: &F) -> impl Iterator<Item = ProjLine<F::Elem>> + '_ {
    (0..line_count(field)).map(move |i| line_at(field, i))
}

/// Uniform random line: a nonzero coefficient triple by rejection, normalized.
pub fn random_line<F: Field, R: Rng + ?Sized>(field: &F, rng: &mut R) -> ProjLine<F::Elem> {
    loop {
        let c = [field.random(rng), field.random(rng), field.random(rng)];
        if let Some(line) = ProjLine::new(field, c) {
            return line;
        }
    }
}

/// Randomness for trial `index`, independent of scheduling.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `B(s, t) = F(s P0 + t P1)` for the canonical basis of the line.
pub fn restrict_to_line<F: Field>(
    form: &TernaryForm<F::Elem>,
    line: &ProjLine<F::Elem>,
    field: &F,
) -> Result<BinaryForm<F::Elem>, IncidenceError> {
    let (p0, p1) = line.basis(field);
    let b = form.restrict(field, &p0, &p1);
    if PolyRing::new(field).form_is_zero(&b) {
        return Err(IncidenceError::LineOnCurve);
    }
    Ok(b)
}

/// `|l(F) ∩ C(F)|`.
pub fn line_intersection_count<F: Lift>(
    curve: &PlaneCurve,
    line: &ProjLine<F::Elem>,
    field: &F,
) -> Result<usize, IncidenceError> {
    let b = restrict_to_line(&curve.form_over(field), line, field)?;
    Ok(PolyRing::new(field).projective_root_count(&b).expect("nonzero form"))
}

/// What one line contributes to a report.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LineClass {
    OnCurve,
    Counted { k: usize, partition: Option<Partition> },
}

/// Intersection count and, for squarefree restrictions, the factorization type.
pub fn classify<F: Field>(field: &F, b: &BinaryForm<F::Elem>) -> LineClass {
    let ring = PolyRing::new(field);
    if ring.form_is_zero(b) {
        return LineClass::OnCurve;
    }
    let k = ring.projective_root_count(b).unwrap();
    let partition = if ring.form_is_squarefree(b) {
        Some(ring.form_factorization_type(b).unwrap())
    } else {
        None
    };
    LineClass::Counted { k, partition }
}

/// Mergeable per-batch counts.
#[derive(Clone, Debug, Default)]
pub(crate) struct Tally {
    pub trials: u64,
    pub k_hist: Vec<u64>,
    pub partitions: BTreeMap<Partition, u64>,
    pub nonsquarefree: u64,
    pub on_curve: u64,
    pub contains_component: u64,
    /// Lines whose partition had a number of 1-parts different from `k`.
    pub cross_mismatch: u64,
}

impl Tally {
    pub fn new(d: usize) -> Self {
        Tally {
            k_hist: vec![0; d + 1],
            ..Default::default()
        }
    }

    pub fn record(&mut self, class: LineClass) {
        self.trials += 1;
        match class {
            LineClass::OnCurve => self.on_curve += 1,
            LineClass::Counted { k, partition } => {
                self.k_hist[k] += 1;
                match partition {
                    Some(pi) => {
                        if pi.ones() != k {
                            self.cross_mismatch += 1;
                        }
                        *self.partitions.entry(pi).or_insert(0) += 1;
                    }
                    None => self.nonsquarefree += 1,
                }
            }
        }
    }

    pub fn merge(mut self, other: Tally) -> Tally {
        self.trials += other.trials;
        for (a, b) in self.k_hist.iter_mut().zip(&other.k_hist) {
            *a += b;
        }
        for (pi, c) in other.partitions {
            *self.partitions.entry(pi).or_insert(0) += c;
        }
        self.nonsquarefree += other.nonsquarefree;
        self.on_curve += other.on_curve;
        self.contains_component += other.contains_component;
        self.cross_mismatch += other.cross_mismatch;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncidenceReport {
    /// Largest possible `k`: the curve degree, or `d e` for pair experiments.
    pub d: usize,
    pub p: u64,
    pub r: usize,
    pub config: ExperimentConfig,
    pub total_lines_considered: u64,
    pub k_histogram: BTreeMap<usize, u64>,
    pub partition_histogram: BTreeMap<Partition, u64>,
    pub excluded_nonsquarefree: u64,
    pub excluded_line_on_curve: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excluded_contains_component: Option<u64>,
    pub p_hat: BTreeMap<usize, Rational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<BTreeMap<usize, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub de: Option<usize>,
}

impl IncidenceReport {
    pub(crate) fn from_tally(d: usize, ctx: &FieldCtx, config: ExperimentConfig, tally: Tally) -> Self {
        assert_eq!(tally.cross_mismatch, 0, "partition 1-parts disagree with k");
        let total = tally.trials;
        let k_histogram: BTreeMap<usize, u64> = tally.k_hist.iter().copied().enumerate().collect();
        let p_hat = k_histogram
            .iter()
            .map(|(&k, &c)| (k, Rational(ratio(c, total))))
            .collect();
        let stderr = matches!(config.mode, Mode::Sample { .. }).then(|| {
            k_histogram
                .iter()
                .map(|(&k, &c)| {
                    let p = c as f64 / total as f64;
                    (k, decimal((p * (1.0 - p) / total as f64).sqrt()))
                })
                .collect()
        });
        IncidenceReport {
            d,
            p: ctx.p(),
            r: ctx.r(),
            config,
            total_lines_considered: total,
            k_histogram,
            partition_histogram: tally.partitions,
            excluded_nonsquarefree: tally.nonsquarefree,
            excluded_line_on_curve: tally.on_curve,
            excluded_contains_component: None,
            p_hat,
            stderr,
            e: None,
            de: None,
        }
    }

    /// Trials underlying `p_hat`.
    pub fn counted_lines(&self) -> u64 {
        self.total_lines_considered
    }

    /// `p_hat[k]` for `k = 0..=d`.
    pub fn p_hat_exact(&self) -> Vec<BigRational> {
        (0..=self.d)
            .map(|k| {
                ratio(
                    self.k_histogram.get(&k).copied().unwrap_or(0),
                    self.total_lines_considered,
                )
            })
            .collect()
    }

    pub fn p_hat_f64(&self) -> Vec<f64> {
        (0..=self.d)
            .map(|k| self.k_histogram.get(&k).copied().unwrap_or(0) as f64 / self.total_lines_considered as f64)
            .collect()
    }

    pub fn count(&self, k: usize) -> u64 {
        self.k_histogram.get(&k).copied().unwrap_or(0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per `k`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,count,p_hat_num,p_hat_den,p_hat,stderr\n");
        for (k, c) in &self.k_histogram {
            let p = &self.p_hat[k].0;
            let se = self.stderr.as_ref().map(|s| s[k].clone()).unwrap_or_default();
            out.push_str(&format!(
                "{k},{c},{},{},{},{se}\n",
                p.numer(),
                p.denom(),
                decimal(self.p_hat_f64()[*k])
            ));
        }
        out
    }
}

fn ratio(a: u64, b: u64) -> BigRational {
    if b == 0 {
        return BigRational::from_integer(BigInt::from(0));
    }
    BigRational::new(a.into(), b.into())
}

pub(crate) fn trial_count<F: Field>(field: &F, cfg: &ExperimentConfig) -> Result<u64, IncidenceError> {
    match cfg.mode {
        Mode::Sample { count: 0 } => Err(IncidenceError::EmptySample),
        Mode::Sample { count } => Ok(count),
        Mode::Exhaustive => {
            let needed = line_count(field);
            if needed > cfg.exhaustive_budget {
                Err(IncidenceError::BudgetExceeded {
                    needed,
                    budget: cfg.exhaustive_budget,
                })
            } else {
                Ok(needed)
            }
        }
    }
}

fn run_in<F: Lift>(curve: &PlaneCurve, field: &F, cfg: &ExperimentConfig) -> Result<IncidenceReport, IncidenceError> {
    let trials = trial_count(field, cfg)?;
    let form = curve.form_over(field);
    let d = curve.degree();
    let tally = (0..trials)
        .into_par_iter()
        .fold(
            || Tally::new(d),
            |mut acc, i| {
                let line = match cfg.mode {
                    Mode::Exhaustive => line_at(field, i),
                    Mode::Sample { .. } => random_line(field, &mut trial_rng(cfg.seed, i)),
                };
                let (p0, p1) = line.basis(field);
                acc.record(classify(field, &form.restrict(field, &p0, &p1)));
                acc
            },
        )
        .reduce(|| Tally::new(d), Tally::merge);
    Ok(IncidenceReport::from_tally(d, field.ctx(), *cfg, tally))
}

/// Runs one experiment over `F_{q^N}`.
pub fn run_experiment(curve: &PlaneCurve, cfg: &ExperimentConfig) -> Result<IncidenceReport, IncidenceError> {
    let ext = curve.ctx().extension(cfg.n)?;
    match TableField::new(&ext) {
        Ok(t) => run_in(curve, &t, cfg),
        Err(_) => run_in(curve, &ext, cfg),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub p_hat: Vec<Rational>,
    /// `|p_hat[k] - p_k|`.
    pub deviation: Vec<Rational>,
    pub report: IncidenceReport,
}

/// One experiment per `N`, each compared with the limiting prediction.
pub fn convergence_sweep(
    curve: &PlaneCurve,
    levels: &[usize],
    config_for: impl Fn(usize) -> ExperimentConfig,
) -> Result<Vec<SweepRow>, IncidenceError> {
    let pred: Prediction = theory::predict(curve.degree())?;
    levels
        .iter()
        .map(|&n| {
            let report = run_experiment(curve, &config_for(n))?;
            let p_hat = report.p_hat_exact();
            let deviation = p_hat
                .iter()
                .zip(&pred.p)
                .map(|(a, b)| Rational((a - &b.0).abs()))
                .collect();
            Ok(SweepRow {
                n,
                p_hat: p_hat.into_iter().map(Rational).collect(),
                deviation,
                report,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::parse_curve;
    use std::collections::HashSet;

    fn f(p: u64) -> FieldCtx {
        FieldCtx::new(p, 1, 1).unwrap()
    }

    #[test]
    fn line_counts() {
        assert_eq!(all_lines(&f(7)).count(), 57);
        let f49 = FieldCtx::new(7, 1, 2).unwrap();
        assert_eq!(line_count(&f49), 2451);
        let fano: Vec<_> = all_lines(&f(2)).collect();
        assert_eq!(fano.len(), 7);
        let distinct: HashSet<_> = fano.iter().collect();
        assert_eq!(distinct.len(), 7);
        let t = TableField::new(&f49).unwrap();
        let distinct: HashSet<_> = all_lines(&t).collect();
        assert_eq!(distinct.len(), 2451);
    }

    #[test]
    fn random_line_uniform_and_deterministic() {
        let f2 = f(2);
        let lines: Vec<_> = all_lines(&f2).collect();
        let mut counts = vec![0u64; 7];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..70_000 {
            let l = random_line(&f2, &mut rng);
            counts[lines.iter().position(|m| *m == l).unwrap()] += 1;
        }
        let sigma = (70_000.0f64 * (1.0 / 7.0) * (6.0 / 7.0)).sqrt();
        for c in counts {
            assert!((c as f64 - 10_000.0).abs() <= 4.0 * sigma, "{c}");
        }
        let a: Vec<_> = (0..20).map(|i| random_line(&f2, &mut trial_rng(5, i))).collect();
        let b: Vec<_> = (0..20).map(|i| random_line(&f2, &mut trial_rng(5, i))).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn restriction_examples() {
        let f7 = f(7);
        let conic = parse_curve("x^2 + y^2 - z^2", &f7).unwrap();
        let form = conic.form().clone();
        let ring = PolyRing::new(&f7);
        let z0 = ProjLine::new(&f7, [0, 0, 1].map(|v| f7.from_u64(v))).unwrap();
        let b = restrict_to_line(&form, &z0, &f7).unwrap();
        assert_eq!(b.coeffs(), &[f7.one(), f7.zero(), f7.one()]);
        assert_eq!(ring.projective_root_count(&b).unwrap(), 0);
        let y0 = ProjLine::new(&f7, [0, 1, 0].map(|v| f7.from_u64(v))).unwrap();
        assert_eq!(line_intersection_count(&conic, &y0, &f7).unwrap(), 2);
        let tangent = ProjLine::new(&f7, [f7.one(), f7.zero(), f7.from_i64(-1)]).unwrap();
        assert_eq!(line_intersection_count(&conic, &tangent, &f7).unwrap(), 1);
        assert_eq!(line_intersection_count(&conic, &z0, &f7).unwrap(), 0);
        let double = parse_curve("x^2", &f7).unwrap();
        let x0 = ProjLine::new(&f7, [f7.one(), f7.zero(), f7.zero()]).unwrap();
        assert_eq!(
            restrict_to_line(double.form(), &x0, &f7),
            Err(IncidenceError::LineOnCurve)
        );
    }

    #[test]
    fn conic_and_line_histograms() {
        let f7 = f(7);
        let conic = parse_curve("x^2 + y^2 - z^2", &f7).unwrap();
        let rep = run_experiment(&conic, &ExperimentConfig::exhaustive(1)).unwrap();
        assert_eq!((rep.count(0), rep.count(1), rep.count(2)), (21, 8, 28));
        assert_eq!(rep.excluded_nonsquarefree, 8);
        assert_eq!(rep.total_lines_considered, 57);
        assert!(rep.stderr.is_none());
        let line = parse_curve("x", &f7).unwrap();
        let rep = run_experiment(&line, &ExperimentConfig::exhaustive(1)).unwrap();
        assert_eq!(rep.count(1), 56);
        assert_eq!(rep.count(0), 0);
        assert_eq!(rep.excluded_line_on_curve, 1);
        assert_eq!(rep.p_hat[&1].0, BigRational::new(56.into(), 57.into()));
    }

    #[test]
    fn brute_force_conic_histogram() {
        // every line against every point of P^2(F_7)
        let f7 = f(7);
        let conic = parse_curve("x^2 + y^2 - z^2", &f7).unwrap();
        let points: Vec<[u32; 3]> = (0..343u64)
            .map(|i| [i / 49, (i / 7) % 7, i % 7].map(|v| v as u32))
            .filter(|p| p.iter().any(|&c| c != 0))
            .filter_map(|p| {
                let lead = *p.iter().find(|&&c| c != 0).unwrap();
                (lead == 1).then_some(p)
            })
            .collect();
        assert_eq!(points.len(), 57);
        let mut hist = [0u64; 3];
        for line in all_lines(&f7) {
            let c = line.dual().coords().map(|e| e.flat()[0] as u64);
            let k = points
                .iter()
                .filter(|p| {
                    let v = [p[0] as u64, p[1] as u64, p[2] as u64];
                    (c[0] * v[0] + c[1] * v[1] + c[2] * v[2]).is_multiple_of(7)
                        && (v[0] * v[0] + v[1] * v[1] + 6 * v[2] * v[2]).is_multiple_of(7)
                })
                .count();
            hist[k] += 1;
        }
        let rep = run_experiment(&conic, &ExperimentConfig::exhaustive(1)).unwrap();
        assert_eq!(hist, [rep.count(0), rep.count(1), rep.count(2)]);
    }

    #[test]
    fn sample_runs_are_deterministic() {
        let f7 = f(7);
        let cubic = parse_curve("x^3 + x^2*z - y^2*z", &f7).unwrap();
        let cfg = ExperimentConfig::sample(2, 20_000, 3);
        let a = run_experiment(&cubic, &cfg).unwrap();
        let b = run_experiment(&cubic, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_json(), b.to_json());
        assert!(a.stderr.is_some());
        let back: IncidenceReport = serde_json::from_str(&a.to_json()).unwrap();
        assert_eq!(back, a);
        assert_eq!(a.to_csv().lines().count(), 5);
    }

    #[test]
    fn exhaustive_invariants() {
        let f7 = f(7);
        let cubic = parse_curve("x^3 + x^2*z - y^2*z", &f7).unwrap();
        for n in 1..=2 {
            let rep = run_experiment(&cubic, &ExperimentConfig::exhaustive(n)).unwrap();
            let qn = 7u64.pow(n as u32);
            let lines = qn * qn + qn + 1;
            let hist: u64 = rep.k_histogram.values().sum();
            assert_eq!(hist + rep.excluded_line_on_curve, lines);
            let parts: u64 = rep.partition_histogram.values().sum();
            assert_eq!(parts + rep.excluded_nonsquarefree + rep.excluded_line_on_curve, lines);
            let incidences: u64 = rep.k_histogram.iter().map(|(k, c)| *k as u64 * c).sum();
            let points = crate::curve::point_count(&cubic, n, 1 << 20).unwrap();
            assert_eq!(incidences, points * (qn + 1));
        }
    }

    #[test]
    fn budget_and_sweep() {
        let f7 = f(7);
        let conic = parse_curve("x^2 + y^2 - z^2", &f7).unwrap();
        let mut cfg = ExperimentConfig::exhaustive(2);
        cfg.exhaustive_budget = 100;
        assert_eq!(
            run_experiment(&conic, &cfg),
            Err(IncidenceError::BudgetExceeded {
                needed: 2451,
                budget: 100
            })
        );
        assert_eq!(
            run_experiment(&conic, &ExperimentConfig::sample(1, 0, 0)),
            Err(IncidenceError::EmptySample)
        );
        assert!(convergence_sweep(&conic, &[], ExperimentConfig::exhaustive)
            .unwrap()
            .is_empty());
        let rows = convergence_sweep(&conic, &[1, 2, 3], ExperimentConfig::exhaustive).unwrap();
        let dev: Vec<f64> = rows.iter().map(|r| r.deviation[2].to_f64()).collect();
        assert!(dev[0] > dev[1] && dev[1] > dev[2]);
        for row in &rows {
            let qn = BigInt::from(7u64.pow(row.n as u32));
            let expected = BigRational::new(&qn * (&qn + 1u32) / 2u32, &qn * &qn + &qn + 1u32);
            assert_eq!(row.p_hat[2].0, expected);
        }
        let line = parse_curve("x", &f7).unwrap();
        let rows = convergence_sweep(&line, &[1, 2], ExperimentConfig::exhaustive).unwrap();
        assert_eq!(rows[0].p_hat[1].0, BigRational::new(56.into(), 57.into()));
        assert!(rows[1].p_hat[1].0 > rows[0].p_hat[1].0);
    }
}
