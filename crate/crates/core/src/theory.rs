//! Closed-form predictions in exact rational arithmetic.
//!
//! Under a full symmetric monodromy group the number of rational points on a
//! random line behaves like the number of fixed points of a uniform random
//! permutation of `S_d`; the factorization type behaves like its cycle type.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::incidence::{IncidenceReport, Mode};
use crate::upoly::Partition;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TheoryError {
    #[error("k = {k} is outside 0..={d}")]
    OutOfRange { d: usize, k: usize },
    #[error("{0} is not a partition of {1}")]
    NotAPartition(String, usize),
    #[error("degree must be at least 1")]
    DegreeZero,
    #[error("report degree {report} does not match prediction degree {prediction}")]
    DegreeMismatch { report: usize, prediction: usize },
}

/// Exact rational serialized as `{"num": .., "den": ..}`; integers that fit
/// in 64 bits are JSON numbers, larger ones decimal strings.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(pub BigRational);

impl Rational {
    pub fn new(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Self {
        Rational(BigRational::new(num.into(), den.into()))
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl From<BigRational> for Rational {
    fn from(r: BigRational) -> Self {
        Rational(r)
    }
}

fn int_json(v: &BigInt) -> serde_json::Value {
    match v.to_i64() {
        Some(i) => serde_json::Value::from(i),
        None => serde_json::Value::from(v.to_string()),
    }
}

fn json_int(v: &serde_json::Value) -> Option<BigInt> {
    match v {
        serde_json::Value::Number(n) => n.as_i64().map(BigInt::from),
        serde_json::Value::String(s) => s.parse().ok(),
        _ => None,
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut m = serde_json::Map::new();
        m.insert("num".into(), int_json(self.0.numer()));
        m.insert("den".into(), int_json(self.0.denom()));
        m.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let m = serde_json::Map::deserialize(deserializer)?;
        let get = |key: &str| {
            m.get(key)
                .and_then(json_int)
                .ok_or_else(|| serde::de::Error::custom(format!("missing or invalid `{key}`")))
        };
        let (num, den) = (get("num")?, get("den")?);
        if den.is_zero() {
            return Err(serde::de::Error::custom("zero denominator"));
        }
        Ok(Rational(BigRational::new(num, den)))
    }
}

pub(crate) fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * i)
}

pub(crate) fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// `s (s-1) ... (s-k+1)`.
pub fn falling_factorial(s: usize, k: usize) -> BigInt {
    if k > s {
        return BigInt::zero();
    }
    (0..k).fold(BigInt::one(), |acc, i| acc * (s - i))
}

/// `sum_{s=k}^{d} (-1)^(k+s) / s! * C(s, k)`.
pub fn rencontres_probability(d: usize, k: usize) -> Result<BigRational, TheoryError> {
    if k > d {
        return Err(TheoryError::OutOfRange { d, k });
    }
    let mut acc = BigRational::zero();
    for s in k..=d {
        let term = BigRational::new(binomial(s, k), factorial(s));
        if (k + s).is_multiple_of(2) {
            acc += term;
        } else {
            acc -= term;
        }
    }
    Ok(acc)
}

/// Number of permutations of `S_d` with exactly `k` fixed points.
pub fn rencontres_count(d: usize, k: usize) -> Result<BigInt, TheoryError> {
    let p = rencontres_probability(d, k)? * BigRational::from_integer(factorial(d));
    debug_assert!(p.is_integer());
    Ok(p.to_integer())
}

/// `(M_d)_{k,s} = s (s-1) ... (s-k+1)`, mapping `p_s` to factorial moments.
pub fn moment_matrix(d: usize) -> Vec<Vec<BigInt>> {
    (0..=d)
        .map(|k| (0..=d).map(|s| falling_factorial(s, k)).collect())
        .collect()
}

/// The inverse of [`moment_matrix`]: `alpha_{k,s} = (-1)^(k+s) / s! * C(s, k)`.
pub fn alpha_matrix(d: usize) -> Vec<Vec<BigRational>> {
    (0..=d)
        .map(|k| {
            (0..=d)
                .map(|s| {
                    let v = BigRational::new(binomial(s, k), factorial(s));
                    if (k + s) % 2 == 0 {
                        v
                    } else {
                        -v
                    }
                })
                .collect()
        })
        .collect()
}

/// All partitions of `d`, ascending lexicographically on their sorted parts.
pub fn partitions(d: usize) -> Vec<Partition> {
    fn rec(remaining: u32, min: u32, prefix: &mut Vec<u32>, out: &mut Vec<Partition>) {
        if remaining == 0 {
            out.push(Partition::new(prefix.clone()));
            return;
        }
        for part in min..=remaining {
            if remaining - part != 0 && remaining - part < part {
                continue;
            }
            prefix.push(part);
            rec(remaining - part, part, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(d as u32, 1, &mut Vec::new(), &mut out);
    out
}

/// Proportion of `S_d` with cycle type `pi`: `1 / prod_j (j^{m_j} m_j!)`.
pub fn cycle_type_frequency(d: usize, pi: &Partition) -> Result<BigRational, TheoryError> {
    if pi.total() as usize != d || pi.parts().is_empty() {
        return Err(TheoryError::NotAPartition(pi.to_string(), d));
    }
    let den = pi.multiplicities().into_iter().fold(BigInt::one(), |acc, (j, m)| {
        acc * BigInt::from(j).pow(m) * factorial(m as usize)
    });
    Ok(BigRational::new(BigInt::one(), den))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub d: usize,
    pub p: Vec<Rational>,
    pub partition_freq: BTreeMap<Partition, Rational>,
    pub moments: Vec<Rational>,
}

impl Prediction {
    pub fn p_f64(&self) -> Vec<f64> {
        self.p.iter().map(Rational::to_f64).collect()
    }
}

pub fn predict(d: usize) -> Result<Prediction, TheoryError> {
    if d == 0 {
        return Err(TheoryError::DegreeZero);
    }
    let p: Vec<BigRational> = (0..=d)
        .map(|k| rencontres_probability(d, k))
        .collect::<Result<_, _>>()?;
    let mut partition_freq = BTreeMap::new();
    let mut by_fixed = vec![BigRational::zero(); d + 1];
    for pi in partitions(d) {
        let f = cycle_type_frequency(d, &pi)?;
        by_fixed[pi.ones()] += &f;
        partition_freq.insert(pi, Rational(f));
    }
    assert_eq!(
        by_fixed, p,
        "fixed points from cycle types disagree with the alternating sum"
    );
    let m = moment_matrix(d);
    let moments: Vec<Rational> = m
        .iter()
        .map(|row| {
            let v = row.iter().zip(&p).fold(BigRational::zero(), |acc, (a, b)| {
                acc + BigRational::from_integer(a.clone()) * b
            });
            Rational(v)
        })
        .collect();
    debug_assert!(p.iter().sum::<BigRational>().is_one());
    debug_assert!(p[d - 1].is_zero());
    Ok(Prediction {
        d,
        p: p.into_iter().map(Rational).collect(),
        partition_freq,
        moments,
    })
}

/// Threshold above which a z-score is flagged.
pub const Z_FLAG: f64 = 4.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KDeviation {
    pub k: usize,
    pub observed: Rational,
    pub predicted: Rational,
    pub abs_deviation: Rational,
    /// `(observed - predicted) / sqrt(p (1 - p) / n)`; absent in exhaustive
    /// mode and where the prediction is 0 or 1.
    pub z: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionDeviation {
    pub observed: Rational,
    pub predicted: Rational,
    pub abs_deviation: Rational,
    pub z: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub d: usize,
    pub per_k: Vec<KDeviation>,
    pub per_partition: BTreeMap<Partition, PartitionDeviation>,
    /// Factorial moments of the observed histogram.
    pub empirical_moments: Vec<Rational>,
    pub moment_deviation: Vec<Rational>,
    pub flags: Vec<String>,
}

impl DeviationReport {
    pub fn flagged(&self) -> bool {
        !self.flags.is_empty()
    }

    pub fn z_scores(&self) -> Vec<Option<f64>> {
        self.per_k
            .iter()
            .map(|d| d.z.as_ref().and_then(|z| z.parse().ok()))
            .collect()
    }
}

fn z_score(observed: &BigRational, predicted: &BigRational, n: u64) -> Option<f64> {
    let p = predicted.to_f64()?;
    if p <= 0.0 || p >= 1.0 || n == 0 {
        return None;
    }
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    Some((observed - predicted).to_f64()? / sigma)
}

pub(crate) fn decimal(x: f64) -> String {
    format!("{x:.6}")
}

pub fn compare(report: &IncidenceReport, pred: &Prediction) -> Result<DeviationReport, TheoryError> {
    if report.d != pred.d {
        return Err(TheoryError::DegreeMismatch {
            report: report.d,
            prediction: pred.d,
        });
    }
    let sampled = matches!(report.config.mode, Mode::Sample { .. });
    let counted = report.counted_lines();
    let mut flags = Vec::new();
    let mut per_k = Vec::new();
    let observed = report.p_hat_exact();
    for k in 0..=pred.d {
        let obs = observed[k].clone();
        let prd = pred.p[k].0.clone();
        let z = if sampled { z_score(&obs, &prd, counted) } else { None };
        if let Some(z) = z {
            if z.abs() > Z_FLAG {
                flags.push(format!("k={k}: z={z:.3}"));
            }
        }
        per_k.push(KDeviation {
            k,
            abs_deviation: Rational((&obs - &prd).abs()),
            observed: Rational(obs),
            predicted: Rational(prd),
            z: z.map(decimal),
        });
    }
    let mut per_partition = BTreeMap::new();
    let partitioned: u64 = report.partition_histogram.values().sum();
    if partitioned > 0 {
        for (pi, freq) in &pred.partition_freq {
            let count = report.partition_histogram.get(pi).copied().unwrap_or(0);
            let obs = BigRational::new(count.into(), partitioned.into());
            let z = if sampled {
                z_score(&obs, &freq.0, partitioned)
            } else {
                None
            };
            if let Some(z) = z {
                if z.abs() > Z_FLAG {
                    flags.push(format!("partition {pi}: z={z:.3}"));
                }
            }
            per_partition.insert(
                pi.clone(),
                PartitionDeviation {
                    abs_deviation: Rational((&obs - &freq.0).abs()),
                    observed: Rational(obs),
                    predicted: freq.clone(),
                    z: z.map(decimal),
                },
            );
        }
    }
    let empirical_moments = empirical_moments(&observed);
    let moment_deviation = empirical_moments
        .iter()
        .zip(&pred.moments)
        .map(|(a, b)| Rational((&a.0 - &b.0).abs()))
        .collect();
    Ok(DeviationReport {
        d: pred.d,
        per_k,
        per_partition,
        empirical_moments,
        moment_deviation,
        flags,
    })
}

/// `mu_k = sum_s s (s-1) ... (s-k+1) p_s` for `k = 0..=d`.
pub fn empirical_moments(p_hat: &[BigRational]) -> Vec<Rational> {
    let d = p_hat.len().saturating_sub(1);
    moment_matrix(d)
        .iter()
        .map(|row| {
            Rational(row.iter().zip(p_hat).fold(BigRational::zero(), |acc, (a, b)| {
                acc + BigRational::from_integer(a.clone()) * b
            }))
        })
        .collect()
}

/// Expected range of `|C(F_{q^N})|` for an absolutely irreducible curve of
/// degree `d`. Without a genus the arithmetic genus bound is used around
/// `q^N` with slack `d + 1`; with genus `g` the Hasse-Weil interval around
/// `q^N + 1`. Lines and conics have exactly `q^N + 1` points.
pub fn lang_weil_window(d: usize, n: u32, q: u64, genus: Option<u32>) -> Result<(i128, i128), TheoryError> {
    if d == 0 {
        return Err(TheoryError::DegreeZero);
    }
    let qn = (q as i128).pow(n);
    let root = (qn as f64).sqrt();
    if d <= 2 || genus == Some(0) {
        return Ok((qn + 1, qn + 1));
    }
    Ok(match genus {
        Some(g) => {
            let half = (2.0 * g as f64 * root).floor() as i128;
            (qn + 1 - half, qn + 1 + half)
        }
        None => {
            let half = ((d - 1) as f64 * (d - 2) as f64 * root).floor() as i128 + d as i128 + 1;
            (qn - half, qn + half)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    /// Fixed-point and cycle-type census of `S_d` by Heap's algorithm.
    fn census(d: usize) -> (Vec<u64>, BTreeMap<Partition, u64>) {
        let mut perm: Vec<usize> = (0..d).collect();
        let mut fixed = vec![0u64; d + 1];
        let mut types = BTreeMap::new();
        let mut visit = |perm: &[usize]| {
            fixed[perm.iter().enumerate().filter(|(i, &v)| *i == v).count()] += 1;
            let mut seen = vec![false; d];
            let mut parts = Vec::new();
            for s in 0..d {
                if !seen[s] {
                    let mut len = 0;
                    let mut j = s;
                    while !seen[j] {
                        seen[j] = true;
                        j = perm[j];
                        len += 1;
                    }
                    parts.push(len);
                }
            }
            *types.entry(Partition::new(parts)).or_insert(0) += 1;
        };
        let mut c = vec![0usize; d];
        visit(&perm);
        let mut i = 0;
        while i < d {
            if c[i] < i {
                if i % 2 == 0 {
                    perm.swap(0, i);
                } else {
                    perm.swap(c[i], i);
                }
                visit(&perm);
                c[i] += 1;
                i = 0;
            } else {
                c[i] = 0;
                i += 1;
            }
        }
        (fixed, types)
    }

    #[test]
    fn rencontres_examples() {
        for d in 1..=10 {
            assert_eq!(
                rencontres_probability(d, d).unwrap(),
                BigRational::new(1.into(), factorial(d))
            );
            assert!(rencontres_probability(d, d - 1).unwrap().is_zero());
        }
        let counts: Vec<_> = (0..=4).map(|k| rencontres_count(4, k).unwrap()).collect();
        assert_eq!(counts, [9, 8, 6, 0, 1].map(BigInt::from).to_vec());
        let probs: Vec<_> = (0..=3).map(|k| rencontres_probability(3, k).unwrap()).collect();
        assert_eq!(probs, vec![rat(1, 3), rat(1, 2), rat(0, 1), rat(1, 6)]);
        assert_eq!(
            rencontres_probability(3, 4),
            Err(TheoryError::OutOfRange { d: 3, k: 4 })
        );
    }

    #[test]
    fn rencontres_match_census() {
        for d in 1..=8 {
            let (fixed, _) = census(d);
            for k in 0..=d {
                assert_eq!(rencontres_count(d, k).unwrap(), BigInt::from(fixed[k]), "d={d} k={k}");
            }
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        for d in 1..=20 {
            let s: BigRational = (0..=d).map(|k| rencontres_probability(d, k).unwrap()).sum();
            assert!(s.is_one());
            let mean: BigInt = (0..=d).map(|k| rencontres_count(d, k).unwrap() * k).sum();
            assert_eq!(mean, factorial(d));
        }
    }

    #[test]
    fn moment_matrix_inverse() {
        assert_eq!(
            moment_matrix(1),
            vec![
                vec![BigInt::from(1), BigInt::from(1)],
                vec![BigInt::from(0), BigInt::from(1)]
            ]
        );
        assert_eq!(
            alpha_matrix(1),
            vec![vec![rat(1, 1), rat(-1, 1)], vec![rat(0, 1), rat(1, 1)]]
        );
        for d in 0..=12 {
            let m = moment_matrix(d);
            let a = alpha_matrix(d);
            for i in 0..=d {
                assert_eq!(m[i][i], factorial(i));
                for j in 0..=d {
                    let v: BigRational = (0..=d)
                        .map(|l| BigRational::from_integer(m[i][l].clone()) * &a[l][j])
                        .sum();
                    assert_eq!(
                        v,
                        if i == j {
                            BigRational::one()
                        } else {
                            BigRational::zero()
                        }
                    );
                }
            }
        }
    }

    #[test]
    fn partition_frequencies() {
        let parts: Vec<String> = partitions(4).iter().map(|p| p.to_string()).collect();
        assert_eq!(parts, vec!["1+1+1+1", "1+1+2", "1+3", "2+2", "4"]);
        let expect = [
            ("1+1+1+1", (1, 24)),
            ("1+1+2", (1, 4)),
            ("2+2", (1, 8)),
            ("1+3", (1, 3)),
            ("4", (1, 4)),
        ];
        for (pi, (n, d)) in expect {
            assert_eq!(cycle_type_frequency(4, &pi.parse().unwrap()).unwrap(), rat(n, d));
        }
        assert_eq!(partitions(1), vec![Partition::new(vec![1])]);
        assert!(matches!(
            cycle_type_frequency(4, &Partition::new(vec![1, 2])),
            Err(TheoryError::NotAPartition(..))
        ));
        for d in 1..=20 {
            let s: BigRational = partitions(d).iter().map(|p| cycle_type_frequency(d, p).unwrap()).sum();
            assert!(s.is_one(), "d={d}");
        }
        for d in 1..=8 {
            let (_, types) = census(d);
            assert_eq!(types.len(), partitions(d).len());
            for (pi, count) in types {
                assert_eq!(
                    cycle_type_frequency(d, &pi).unwrap(),
                    BigRational::new(count.into(), factorial(d))
                );
            }
        }
    }

    #[test]
    fn predictions() {
        let p2 = predict(2).unwrap();
        assert_eq!(
            p2.p.iter().map(|r| r.0.clone()).collect::<Vec<_>>(),
            vec![rat(1, 2), rat(0, 1), rat(1, 2)]
        );
        let p4 = predict(4).unwrap();
        assert_eq!(
            p4.p.iter().map(|r| r.0.clone()).collect::<Vec<_>>(),
            vec![rat(3, 8), rat(1, 3), rat(1, 4), rat(0, 1), rat(1, 24)]
        );
        for d in 1..=20 {
            let pr = predict(d).unwrap();
            assert!(pr.moments.iter().all(|m| m.0.is_one()));
            let f = factorial(d);
            assert!(pr.p.iter().all(|r| (&f % r.0.denom()).is_zero()));
        }
        assert_eq!(predict(0), Err(TheoryError::DegreeZero));
    }

    #[test]
    fn windows() {
        assert_eq!(lang_weil_window(2, 1, 7, None).unwrap(), (8, 8));
        assert_eq!(lang_weil_window(1, 3, 7, None).unwrap(), (344, 344));
        assert_eq!(lang_weil_window(4, 4, 7, None).unwrap(), (2401 - 299, 2401 + 299));
        assert_eq!(lang_weil_window(4, 4, 7, Some(3)).unwrap(), (2402 - 294, 2402 + 294));
    }

    #[test]
    fn rational_json() {
        let r = Rational::new(28, 57);
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(s, r#"{"den":57,"num":28}"#);
        let back: Rational = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
        let big = Rational(BigRational::from_integer(factorial(25)));
        let back: Rational = serde_json::from_str(&serde_json::to_string(&big).unwrap()).unwrap();
        assert_eq!(back, big);
    }
}
