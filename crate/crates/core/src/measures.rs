//! Pairwise measures shared by attribute analysis and dataset linking.

use std::collections::HashSet;
use std::hash::Hash;

use crate::error::{Error, Result};

/// Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::UndefinedInput(format!("series lengths differ: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::UndefinedInput("pearson needs at least 2 points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedInput("constant series".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// |A ∩ B| / |A|.
pub fn exact_containment<T: Eq + Hash>(a: &HashSet<T>, b: &HashSet<T>) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::UndefinedInput("containment of an empty set".into()));
    }
    Ok(a.iter().filter(|v| b.contains(v)).count() as f64 / a.len() as f64)
}

/// Containment in whichever direction is larger. Undefined only when both
/// sets are empty.
pub fn max_containment<T: Eq + Hash>(a: &HashSet<T>, b: &HashSet<T>) -> Result<f64> {
    match (exact_containment(a, b), exact_containment(b, a)) {
        (Ok(x), Ok(y)) => Ok(x.max(y)),
        (Ok(x), Err(_)) | (Err(_), Ok(x)) => Ok(x),
        (Err(e), Err(_)) => Err(e),
    }
}

/// Jaccard index; two empty sets score 0.
pub fn jaccard<T: Eq + Hash>(a: &HashSet<T>, b: &HashSet<T>) -> f64 {
    let inter = a.iter().filter(|v| b.contains(v)).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Lowercased alphanumerics only, so `Health_Status` and `health status`
/// compare equal.
pub fn normalize_name(name: &str) -> String {
    name.chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase).collect()
}

/// Normalized Levenshtein similarity of normalized names, in [0, 1].
pub fn name_similarity(a: &str, b: &str) -> f64 {
    strsim::normalized_levenshtein(&normalize_name(a), &normalize_name(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[i32]) -> HashSet<i32> {
        v.iter().copied().collect()
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(pearson(&x, &x).unwrap(), 1.0);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(pearson(&x, &neg).unwrap(), -1.0);
        // sxy = 3.5, sxx = 5, syy = 4.75
        let r = pearson(&x, &[2.0, 4.0, 5.0, 4.0]).unwrap();
        assert!((r - 3.5 / (5.0f64 * 4.75).sqrt()).abs() < 1e-12);
        assert!((r - 0.718).abs() < 1e-3);
        assert!(matches!(pearson(&x, &[1.0, 1.0, 1.0, 1.0]), Err(Error::UndefinedInput(_))));
        assert!(pearson(&x, &[1.0]).is_err());
        assert!(pearson(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn containment_and_jaccard() {
        assert_eq!(exact_containment(&set(&[1, 2]), &set(&[1, 2, 3])).unwrap(), 1.0);
        assert_eq!(exact_containment(&set(&[1, 2, 3]), &set(&[1, 2])).unwrap(), 2.0 / 3.0);
        assert!(exact_containment(&set(&[]), &set(&[1])).is_err());
        assert_eq!(max_containment(&set(&[1, 2, 3]), &set(&[1, 2])).unwrap(), 1.0);
        assert_eq!(max_containment(&set(&[]), &set(&[1])).unwrap(), 0.0);
        assert_eq!(jaccard(&set(&[1, 2]), &set(&[2, 3])), 1.0 / 3.0);
        assert_eq!(jaccard(&set(&[]), &set(&[])), 0.0);
    }

    #[test]
    fn names() {
        assert_eq!(name_similarity("Health_Status", "health status"), 1.0);
        assert_eq!(name_similarity("ALE", "ale"), 1.0);
        assert!(name_similarity("All_Death", "Unhealthy_Days") < 0.5);
    }

    proptest::proptest! {
        #[test]
        fn measures_are_symmetric_and_bounded(
            a in proptest::collection::hash_set(0u8..30, 0..20),
            b in proptest::collection::hash_set(0u8..30, 0..20),
            x in proptest::collection::vec(-100.0f64..100.0, 3..30),
            s in "[a-zA-Z_ ]{0,12}", t in "[a-zA-Z_ ]{0,12}",
        ) {
            let j = jaccard(&a, &b);
            proptest::prop_assert_eq!(j, jaccard(&b, &a));
            proptest::prop_assert!((0.0..=1.0).contains(&j));
            if let Ok(c) = max_containment(&a, &b) {
                proptest::prop_assert_eq!(c, max_containment(&b, &a).unwrap());
                proptest::prop_assert!(c >= j);
            }
            proptest::prop_assert_eq!(name_similarity(&s, &t), name_similarity(&t, &s));
            let y: Vec<f64> = x.iter().rev().map(|v| v * 0.5 + 1.0).collect();
            if let (Ok(r1), Ok(r2)) = (pearson(&x, &y), pearson(&y, &x)) {
                proptest::prop_assert_eq!(r1, r2);
                proptest::prop_assert!((-1.0..=1.0).contains(&r1));
            }
        }
    }
}
