//! Two-rater agreement beyond chance.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaResult {
    pub kappa: f64,
    pub observed_agreement: f64,
    pub expected_agreement: f64,
    pub n_items: usize,
}

pub fn cohen_kappa<T: Ord>(a: &[T], b: &[T]) -> Result<KappaResult> {
    if a.len() != b.len() {
        return Err(Error::Invalid(format!("label lists differ in length: {} vs {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::Invalid("no items to compare".into()));
    }
    let n = a.len() as f64;
    let po = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / n;
    let mut ma: BTreeMap<&T, f64> = BTreeMap::new();
    let mut mb: BTreeMap<&T, f64> = BTreeMap::new();
    for x in a {
        *ma.entry(x).or_default() += 1.0 / n;
    }
    for y in b {
        *mb.entry(y).or_default() += 1.0 / n;
    }
    let pe: f64 = ma.iter().map(|(k, p)| p * mb.get(k).copied().unwrap_or(0.0)).sum();
    let kappa = if (1.0 - pe).abs() < 1e-12 { 1.0 } else { (po - pe) / (1.0 - pe) };
    Ok(KappaResult {
        kappa,
        observed_agreement: po,
        expected_agreement: pe,
        n_items: a.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_and_disjoint() {
        let a = ["voice", "body", "voice"];
        assert_eq!(cohen_kappa(&a, &a).unwrap().kappa, 1.0);
        let k = cohen_kappa(&["voice"; 5], &["body"; 5]).unwrap();
        assert!(k.kappa <= 0.0);
        assert!(cohen_kappa(&a, &a[..2]).is_err());
    }

    proptest! {
        #[test]
        fn relabelling_invariant(pairs in proptest::collection::vec((0u8..8, 0u8..8), 1..60), shift in 1u8..8) {
            let a: Vec<u8> = pairs.iter().map(|p| p.0).collect();
            let b: Vec<u8> = pairs.iter().map(|p| p.1).collect();
            let k = cohen_kappa(&a, &b).unwrap();
            let ra: Vec<u8> = a.iter().map(|x| (x + shift) % 8).collect();
            let rb: Vec<u8> = b.iter().map(|x| (x + shift) % 8).collect();
            let k2 = cohen_kappa(&ra, &rb).unwrap();
            prop_assert!((k.kappa - k2.kappa).abs() < 1e-9);
            prop_assert!(k.kappa <= 1.0 + 1e-12 && k.kappa >= -1.0 - 1e-12);
            prop_assert_eq!(k.observed_agreement == 1.0, (k.kappa - 1.0).abs() < 1e-12);
        }
    }
}
