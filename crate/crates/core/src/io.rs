//! JSON input files and report serialization.
//!
//! Inputs are either a subset `{"n": 5, "set": [1, 3]}` or a distribution
//! `{"n": 3, "probs": [0.5, "1/3", "1/6"]}`. Exact values in reports are
//! rendered as `"p/q"` strings.

use std::path::Path;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::agreement::{BruteForceResult, DetStrategy, IterationResult, PairDistribution, ProbeReport};
use crate::error::{Error, Result};
use crate::harness::{Estimate, SweepReport};
use crate::model::{ExactDistribution, FloatDistribution, Subset};
use crate::rational::{format_rational, parse_rational, to_f64, Rational};
use crate::matching::{MatchingDecomposition, MatchingAnalysis};

#[derive(Deserialize)]
#[serde(untagged)]
enum ProbLiteral {
    Number(serde_json::Number),
    Text(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DistributionFile {
    n: usize,
    probs: Vec<ProbLiteral>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubsetFile {
    n: usize,
    set: Vec<usize>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum InputFile {
    Subset(SubsetFile),
    Distribution(DistributionFile),
}

/// A distribution as read from a file. `exact` is present when every
/// literal is a fraction or a plain decimal and they sum to exactly 1.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionInput {
    pub float: FloatDistribution,
    pub exact: Option<ExactDistribution>,
}

impl DistributionInput {
    pub fn n(&self) -> usize {
        self.float.n()
    }

    /// The exact distribution, or the float values snapped to multiples of
    /// `1/den` (with a warning).
    pub fn exact_or_snap(&self, den: u64) -> Result<ExactDistribution> {
        match &self.exact {
            Some(p) => Ok(p.clone()),
            None => {
                log::warn!("probabilities are not exact; snapping to multiples of 1/{den}");
                self.float.snap(den)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Input {
    Subset(Subset),
    Distribution(DistributionInput),
}

impl Input {
    pub fn n(&self) -> usize {
        match self {
            Input::Subset(s) => s.n(),
            Input::Distribution(d) => d.n(),
        }
    }

    /// Flat sets become uniform distributions.
    pub fn into_distribution(self) -> Result<DistributionInput> {
        match self {
            Input::Subset(s) => {
                let exact = ExactDistribution::uniform(&s)?;
                Ok(DistributionInput { float: exact.to_float(), exact: Some(exact) })
            }
            Input::Distribution(d) => Ok(d),
        }
    }

    /// The support of a flat input.
    pub fn into_subset(self) -> Result<Subset> {
        match self {
            Input::Subset(s) => Ok(s),
            Input::Distribution(d) => d
                .exact
                .as_ref()
                .and_then(|p| p.flat_support())
                .ok_or_else(|| Error::invalid("expected a set or a uniform distribution on a set")),
        }
    }
}

fn parse_error(e: serde_json::Error) -> Error {
    Error::Parse { location: format!("line {}, column {}", e.line(), e.column()), message: e.to_string() }
}

fn build_distribution(file: DistributionFile) -> Result<DistributionInput> {
    if file.probs.len() != file.n {
        return Err(Error::invalid(format!("expected {} probabilities, found {}", file.n, file.probs.len())));
    }
    let mut floats = Vec::with_capacity(file.n);
    let mut exact = Some(Vec::with_capacity(file.n));
    for (i, lit) in file.probs.into_iter().enumerate() {
        let (f, r) = match lit {
            ProbLiteral::Number(num) => {
                let f = num
                    .as_f64()
                    .ok_or_else(|| Error::invalid(format!("probability {} is not a finite number", i + 1)))?;
                // shortest round-trip text of the literal, so 0.1 reads as 1/10
                (f, parse_rational(&num.to_string()).ok())
            }
            ProbLiteral::Text(text) => {
                let r = parse_rational(&text)?;
                (to_f64(&r), Some(r))
            }
        };
        floats.push(f);
        match (&mut exact, r) {
            (Some(v), Some(r)) => v.push(r),
            (e, _) => *e = None,
        }
    }
    let float = FloatDistribution::new(floats)?;
    let exact = match exact {
        Some(v) if v.iter().sum::<Rational>() == Rational::one() => Some(ExactDistribution::new(v)?),
        _ => None,
    };
    Ok(DistributionInput { float, exact })
}

pub fn parse_input(text: &str) -> Result<Input> {
    let value: Value = serde_json::from_str(text).map_err(parse_error)?;
    let file: InputFile = serde_json::from_value(value).map_err(|e| Error::Parse {
        location: "top level".into(),
        message: format!("expected {{\"n\", \"set\"}} or {{\"n\", \"probs\"}}: {e}"),
    })?;
    match file {
        InputFile::Subset(s) => Ok(Input::Subset(Subset::new(s.n, s.set)?)),
        InputFile::Distribution(d) => Ok(Input::Distribution(build_distribution(d)?)),
    }
}

pub fn parse_distribution(text: &str) -> Result<DistributionInput> {
    let file: DistributionFile = serde_json::from_str(text).map_err(parse_error)?;
    build_distribution(file)
}

pub fn parse_subset(text: &str) -> Result<Subset> {
    let file: SubsetFile = serde_json::from_str(text).map_err(parse_error)?;
    Subset::new(file.n, file.set)
}

/// Reads an input file; parse errors are prefixed with the path.
pub fn read_input(path: &Path) -> Result<Input> {
    let text = std::fs::read_to_string(path)?;
    parse_input(&text).map_err(|e| match e {
        Error::Parse { location, message } => {
            Error::Parse { location: format!("{}: {location}", path.display()), message }
        }
        other => other,
    })
}

pub fn rational_json(r: &Rational) -> Value {
    Value::String(format_rational(r))
}

fn terminates(r: &Rational) -> bool {
    let mut d = r.denom().clone();
    for p in [2u32, 5] {
        let p = num_bigint::BigInt::from(p);
        while (&d % &p).is_zero() {
            d /= &p;
        }
    }
    d.is_one()
}

/// Probabilities with a finite decimal expansion are written as numbers,
/// the rest as `"p/q"` strings, so reading the output back is lossless.
pub fn distribution_json(p: &ExactDistribution) -> Value {
    let probs: Vec<Value> = p
        .probs()
        .iter()
        .map(|r| {
            if terminates(r) {
                json!(to_f64(r))
            } else {
                rational_json(r)
            }
        })
        .collect();
    json!({ "n": p.n(), "probs": probs })
}

pub fn float_distribution_json(p: &FloatDistribution) -> Value {
    json!({ "n": p.n(), "probs": p.probs() })
}

pub fn subset_json(s: &Subset) -> Value {
    json!({ "n": s.n(), "set": s.elements() })
}

pub fn strategy_json(s: &DetStrategy) -> Value {
    match s {
        DetStrategy::Table(table) => Value::Array(
            table.iter().map(|(set, choice)| json!({ "set": set.elements(), "choice": choice })).collect(),
        ),
        DetStrategy::Order(order) => json!({ "ranks": order.ranks() }),
    }
}

pub fn brute_force_json(d: &PairDistribution, r: &BruteForceResult) -> Value {
    json!({
        "family": d.to_string(),
        "n": d.n(),
        "error": rational_json(&r.error),
        "strategies_scanned": r.strategies_scanned.to_string(),
        "f": strategy_json(&r.f),
        "g": strategy_json(&r.g),
    })
}

pub fn iteration_json(d: &PairDistribution, r: &IterationResult) -> Value {
    json!({
        "family": d.to_string(),
        "n": d.n(),
        "error": rational_json(&r.error),
        "rounds": r.rounds,
        "stalled": r.stalled,
        "f": strategy_json(&r.f),
        "g": strategy_json(&r.g),
    })
}

pub fn probe_json(r: &ProbeReport) -> Value {
    json!({
        "n": r.n, "a": r.a, "b": r.b, "l": r.l,
        "optimum": rational_json(&r.optimum),
        "minhash": rational_json(&r.minhash),
        "verdict": r.verdict,
        "f": strategy_json(&r.f),
        "g": strategy_json(&r.g),
    })
}

/// `{"n", "k", "matchings": [[[A], [B]], ...]}` with matchings in order.
pub fn matchings_json(decomp: &MatchingDecomposition) -> Value {
    let matchings: Vec<Value> = (1..=decomp.k())
        .map(|r| {
            Value::Array(
                decomp
                    .matching_pairs(r)
                    .iter()
                    .map(|(a, b)| json!([a.elements(), b.elements()]))
                    .collect(),
            )
        })
        .collect();
    json!({ "n": decomp.n(), "k": decomp.k(), "matchings": matchings })
}

pub fn matching_analysis_json(a: &MatchingAnalysis) -> Value {
    json!({
        "n": a.n,
        "k": a.k,
        "error": rational_json(&a.error),
        "minhash_error": rational_json(&a.minhash_error),
        "pairs_checked": a.pairs_checked,
    })
}

pub fn estimate_json(strategy: &str, est: &Estimate, exact: Option<&Rational>, seed: u64) -> Value {
    json!({
        "strategy": strategy,
        "estimate": est.estimate,
        "stderr": est.stderr,
        "disagreements": est.disagreements,
        "trials": est.trials,
        "seed": seed,
        "exact": exact.map(rational_json),
    })
}

pub fn sweep_json(report: &SweepReport) -> Value {
    let rows: Vec<Value> = report
        .rows
        .iter()
        .map(|r| {
            json!({
                "delta": rational_json(&r.delta),
                "bound": rational_json(&r.bound),
                "empirical": r.empirical,
                "exact": r.exact.as_ref().map(rational_json),
                "lower": rational_json(&r.lower),
                "stderr": r.stderr,
                "trials": r.trials,
                "seed": r.seed,
                "flagged": r.flagged,
            })
        })
        .collect();
    json!({ "strategy": report.strategy, "rows": rows })
}

/// One CSV line of a sweep. Exact columns are written as decimals so the
/// file plots directly; the JSON report keeps them exact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub delta: f64,
    pub bound: f64,
    pub empirical: Option<f64>,
    pub exact: Option<f64>,
    pub lower: f64,
    pub stderr: Option<f64>,
    pub trials: u64,
    pub seed: u64,
    pub flagged: bool,
}

pub fn sweep_records(report: &SweepReport) -> Vec<SweepRecord> {
    report
        .rows
        .iter()
        .map(|r| SweepRecord {
            delta: to_f64(&r.delta),
            bound: to_f64(&r.bound),
            empirical: r.empirical,
            exact: r.exact.as_ref().map(to_f64),
            lower: to_f64(&r.lower),
            stderr: r.stderr,
            trials: r.trials,
            seed: r.seed,
            flagged: r.flagged,
        })
        .collect()
}

pub fn sweep_csv(report: &SweepReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for rec in sweep_records(report) {
        w.serialize(rec).map_err(|e| Error::invariant(format!("csv write: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invariant(format!("csv flush: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::invariant(e.to_string()))
}

pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepRecord>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize()
        .map(|rec| {
            rec.map_err(|e| Error::Parse {
                location: e
                    .position()
                    .map(|p| format!("line {}", p.line()))
                    .unwrap_or_else(|| "unknown line".into()),
                message: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{sweep_delta, Strategy, TrialConfig};
    use crate::rational::ratio;
    use proptest::prelude::{prop, proptest, prop_assert_eq};
    use proptest::strategy::Strategy as _;

    #[test]
    fn reads_subsets() {
        let s = parse_subset(r#"{"n": 5, "set": [1, 3, 5]}"#).unwrap();
        assert_eq!(s.elements(), &[1, 3, 5]);
        assert!(parse_subset(r#"{"n": 5, "set": [3, 1]}"#).is_err());
        assert!(parse_subset(r#"{"n": 5, "set": [0, 1]}"#).is_err());
        assert!(parse_subset(r#"{"n": 5, "set": [1, 6]}"#).is_err());
        assert!(parse_subset(r#"{"n": 5, "set": [2, 2]}"#).is_err());
    }

    #[test]
    fn decimal_literals_are_exact() {
        let d = parse_distribution(r#"{"n": 3, "probs": [0.1, 0.2, 0.7]}"#).unwrap();
        let exact = d.exact.unwrap();
        assert_eq!(exact.probs(), &[ratio(1, 10), ratio(1, 5), ratio(7, 10)]);
    }

    #[test]
    fn fraction_strings() {
        let d = parse_distribution(r#"{"n": 3, "probs": ["1/3", 0.5, "1/6"]}"#).unwrap();
        assert_eq!(d.exact.unwrap().probs(), &[ratio(1, 3), ratio(1, 2), ratio(1, 6)]);
    }

    #[test]
    fn inexact_floats_are_snapped() {
        let d = parse_distribution(r#"{"n": 2, "probs": [0.3333333333333333, 0.6666666666666666]}"#).unwrap();
        assert!(d.exact.is_none());
        let snapped = d.exact_or_snap(3000).unwrap();
        assert_eq!(snapped.probs(), &[ratio(1, 3), ratio(2, 3)]);
    }

    #[test]
    fn rejects_bad_distributions() {
        assert!(parse_distribution(r#"{"n": 2, "probs": [0.5]}"#).is_err());
        assert!(parse_distribution(r#"{"n": 2, "probs": [0.5, 0.6]}"#).is_err());
        assert!(parse_distribution(r#"{"n": 2, "probs": [-0.5, 1.5]}"#).is_err());
        assert!(parse_distribution(r#"{"n": 2, "probs": ["1/0", 1]}"#).is_err());
    }

    #[test]
    fn parse_errors_carry_a_location() {
        match parse_input("{\"n\": 3,\n \"set\": [1, 2,]}") {
            Err(Error::Parse { location, .. }) => assert!(location.contains("line 2"), "{location}"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_input(r#"{"n": 3, "bogus": 1}"#), Err(Error::Parse { .. })));
    }

    #[test]
    fn input_kinds() {
        let s = parse_input(r#"{"n": 4, "set": [2, 4]}"#).unwrap();
        assert_eq!(s.clone().into_subset().unwrap().elements(), &[2, 4]);
        let d = s.into_distribution().unwrap();
        assert_eq!(d.exact.unwrap().probs()[1], ratio(1, 2));
        let flat = parse_input(r#"{"n": 3, "probs": [0.5, 0, 0.5]}"#).unwrap();
        assert_eq!(flat.into_subset().unwrap().elements(), &[1, 3]);
        let skew = parse_input(r#"{"n": 2, "probs": [0.25, 0.75]}"#).unwrap();
        assert!(skew.into_subset().is_err());
    }

    #[test]
    fn matchings_layout() {
        let g = crate::matching::build_intersection_graph(3).unwrap();
        let d = crate::matching::decompose(&g).unwrap();
        let v = matchings_json(&d);
        assert_eq!(v["k"], 2);
        assert_eq!(v["matchings"].as_array().unwrap().len(), 2);
        assert_eq!(v["matchings"][0].as_array().unwrap().len(), 3);
        assert_eq!(v["matchings"][0][0][0], json!([1, 2]));
    }

    #[test]
    fn sweep_csv_round_trip() {
        let deltas = vec![ratio(0, 1), ratio(1, 3), ratio(1, 2), ratio(9, 10)];
        let report = sweep_delta(&Strategy::MinHash, &deltas, 12, &TrialConfig::new(5, 500)).unwrap();
        let text = sweep_csv(&report).unwrap();
        assert!(text.starts_with("delta,bound,empirical,exact,lower,stderr,trials,seed,flagged\n"));
        assert_eq!(parse_sweep_csv(&text).unwrap(), sweep_records(&report));
        assert!(report.rows[3].flagged);
        assert!(text.lines().nth(4).unwrap().contains(",,"));
    }

    #[test]
    fn sweep_csv_errors_carry_a_line() {
        let text = "delta,bound,empirical,exact,lower,stderr,trials,seed,flagged\n0.5,x,,,0.5,,1,1,false\n";
        assert!(matches!(parse_sweep_csv(text), Err(Error::Parse { location, .. }) if location == "line 2"));
    }

    fn arb_distribution() -> impl proptest::strategy::Strategy<Value = ExactDistribution> {
        prop::collection::vec(0u32..20, 1..8)
            .prop_filter("nonzero", |w| w.iter().any(|&x| x > 0))
            .prop_map(|w| {
                let total: u32 = w.iter().sum();
                ExactDistribution::new(w.iter().map(|&x| ratio(x as i64, total as i64)).collect()).unwrap()
            })
    }

    proptest! {
        #[test]
        fn distribution_round_trip(p in arb_distribution()) {
            let text = distribution_json(&p).to_string();
            let back = parse_distribution(&text).unwrap();
            prop_assert_eq!(back.exact.unwrap(), p);
        }

        #[test]
        fn subset_round_trip(mask in 0u64..(1 << 12)) {
            let s = Subset::from_mask(12, mask).unwrap();
            let back = parse_subset(&subset_json(&s).to_string()).unwrap();
            prop_assert_eq!(back, s);
        }
    }
}
