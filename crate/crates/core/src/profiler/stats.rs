//! Per-column statistics. Moments are population moments over non-null
//! values.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

/// Case-insensitive tokens read as missing values (after trimming).
pub const NULL_TOKENS: [&str; 4] = ["", "na", "nan", "null"];

/// Number of most frequent values kept for nominal columns.
pub const TOP_K: usize = 5;

pub fn is_null(cell: &str) -> bool {
    let cell = cell.trim();
    NULL_TOKENS.iter().any(|t| cell.eq_ignore_ascii_case(t))
}

/// Parses a non-null cell as a finite decimal.
pub fn parse_number(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Nominal,
}

/// Numeric iff every non-null cell parses as a decimal. A column with no
/// non-null cells is numeric.
pub fn classify<'a>(cells: impl IntoIterator<Item = &'a str>) -> ColumnKind {
    let numeric = cells.into_iter().filter(|c| !is_null(c)).all(|c| parse_number(c).is_some());
    if numeric {
        ColumnKind::Numeric
    } else {
        ColumnKind::Nominal
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NumericStats {
    pub count: u64,
    pub null_count: u64,
    pub distinct_count: u64,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub mean: Option<f64>,
    pub std_dev: Option<f64>,
}

pub fn compute_numeric_stats(values: &[Option<f64>]) -> NumericStats {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    let count = values.len() as u64;
    let null_count = count - present.len() as u64;
    if present.is_empty() {
        return NumericStats { count, null_count, distinct_count: 0, min: None, max: None, mean: None, std_dev: None };
    }
    // -0.0 and 0.0 are the same value
    let distinct: BTreeSet<u64> = present.iter().map(|v| (v + 0.0).to_bits()).collect();
    let min = present.iter().copied().fold(f64::INFINITY, f64::min);
    let max = present.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = present.len() as f64;
    let mean = (present.iter().sum::<f64>() / n).clamp(min, max);
    let variance = present.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    NumericStats {
        count,
        null_count,
        distinct_count: distinct.len() as u64,
        min: Some(min),
        max: Some(max),
        mean: Some(mean),
        std_dev: Some(variance.sqrt()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NominalStats {
    pub count: u64,
    pub null_count: u64,
    pub distinct_count: u64,
    pub min_length: u64,
    pub max_length: u64,
    /// Most frequent values, frequency descending, ties lexicographic.
    pub top_k: Vec<(String, u64)>,
}

pub fn compute_nominal_stats<S: AsRef<str>>(values: &[Option<S>]) -> NominalStats {
    let count = values.len() as u64;
    let mut freq: HashMap<&str, u64> = HashMap::new();
    let mut min_length = u64::MAX;
    let mut max_length = 0;
    let mut present = 0u64;
    for value in values.iter().flatten() {
        let value = value.as_ref();
        present += 1;
        let len = value.chars().count() as u64;
        min_length = min_length.min(len);
        max_length = max_length.max(len);
        *freq.entry(value).or_default() += 1;
    }
    let mut ranked: Vec<(String, u64)> = freq.iter().map(|(v, f)| (v.to_string(), *f)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(TOP_K);
    NominalStats {
        count,
        null_count: count - present,
        distinct_count: freq.len() as u64,
        min_length: if present == 0 { 0 } else { min_length },
        max_length,
        top_k: ranked,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_example_with_null() {
        let s = compute_numeric_stats(&[Some(1.0), Some(2.0), Some(3.0), None]);
        assert_eq!((s.count, s.null_count, s.distinct_count), (4, 1, 3));
        assert_eq!((s.min, s.max, s.mean), (Some(1.0), Some(3.0), Some(2.0)));
        // sqrt(2/3), population
        assert!((s.std_dev.unwrap() - 0.816_496_580_927_726).abs() < 1e-12);
    }

    #[test]
    fn numeric_single_and_empty() {
        let s = compute_numeric_stats(&[Some(5.0)]);
        assert_eq!((s.min, s.max, s.mean, s.std_dev), (Some(5.0), Some(5.0), Some(5.0), Some(0.0)));
        let e = compute_numeric_stats(&[]);
        assert_eq!((e.count, e.null_count, e.distinct_count), (0, 0, 0));
        assert!(e.min.is_none() && e.mean.is_none() && e.std_dev.is_none());
        let nulls = compute_numeric_stats(&[None, None]);
        assert_eq!((nulls.count, nulls.null_count), (2, 2));
        assert!(nulls.max.is_none());
    }

    #[test]
    fn nominal_example() {
        let s = compute_nominal_stats(&[Some("a"), Some("b"), Some("a"), None]);
        assert_eq!((s.count, s.null_count, s.distinct_count), (4, 1, 2));
        assert_eq!(s.top_k, vec![("a".to_string(), 2), ("b".to_string(), 1)]);
        assert_eq!((s.min_length, s.max_length), (1, 1));
    }

    #[test]
    fn nominal_all_distinct_and_empty() {
        let s = compute_nominal_stats(&[Some("x"), Some("yy"), Some("zzz")]);
        assert_eq!(s.distinct_count, s.count);
        assert_eq!((s.min_length, s.max_length), (1, 3));
        let e = compute_nominal_stats::<&str>(&[]);
        assert_eq!((e.count, e.null_count, e.distinct_count, e.min_length, e.max_length), (0, 0, 0, 0, 0));
        assert!(e.top_k.is_empty());
    }

    #[test]
    fn top_k_ties_are_lexicographic_and_capped() {
        let vals: Vec<Option<&str>> = ["g", "f", "e", "d", "c", "b", "a", "a"].iter().map(|v| Some(*v)).collect();
        let s = compute_nominal_stats(&vals);
        let names: Vec<&str> = s.top_k.iter().map(|(v, _)| v.as_str()).collect();
        assert_eq!(names, ["a", "b", "c", "d", "e"]);
    }

    #[test]
    fn null_tokens_and_classification() {
        for t in ["", "  ", "NA", "na", "NaN", "NULL", "null "] {
            assert!(is_null(t), "{t:?}");
        }
        assert!(!is_null("0"));
        assert_eq!(classify(["1", "2.5", "", "NA", "-3e2"]), ColumnKind::Numeric);
        assert_eq!(classify(["1", "x"]), ColumnKind::Nominal);
        assert_eq!(classify(["inf"]), ColumnKind::Nominal);
        assert_eq!(classify(["", "null"]), ColumnKind::Numeric);
    }

    proptest::proptest! {
        #[test]
        fn numeric_invariants(values in proptest::collection::vec(proptest::option::of(-1e6f64..1e6), 0..60)) {
            let s = compute_numeric_stats(&values);
            proptest::prop_assert!(s.null_count <= s.count);
            if let (Some(min), Some(max), Some(mean), Some(sd)) = (s.min, s.max, s.mean, s.std_dev) {
                proptest::prop_assert!(min <= mean && mean <= max);
                proptest::prop_assert!(sd >= 0.0);
            } else {
                proptest::prop_assert_eq!(s.null_count, s.count);
            }
        }

        #[test]
        fn nominal_invariants(values in proptest::collection::vec(proptest::option::of("[a-d]{0,3}"), 0..60)) {
            let s = compute_nominal_stats(&values);
            proptest::prop_assert!(s.distinct_count <= s.count - s.null_count);
            proptest::prop_assert!(s.top_k.windows(2).all(|w| w[0].1 >= w[1].1));
            proptest::prop_assert!(s.top_k.len() <= TOP_K);
        }
    }
}
