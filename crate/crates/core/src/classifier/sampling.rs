use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ClassifierError;
use crate::ingest::EfosLabel;
use crate::seed;

/// Training role of a feature row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowClass {
    DefinitiveEfos,
    AllegedEfos,
    Unlabeled,
}

impl RowClass {
    pub fn from_label(label: Option<EfosLabel>) -> Self {
        match label {
            Some(EfosLabel::Definitive) => RowClass::DefinitiveEfos,
            Some(EfosLabel::Alleged) => RowClass::AllegedEfos,
            None => RowClass::Unlabeled,
        }
    }
}

/// Row indices into the caller's table and their binary classes (`true` = EFOS).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Balanced {
    pub rows: Vec<usize>,
    pub classes: Vec<bool>,
}

impl Balanced {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Every definitive-EFOS row plus an equal-size uniform draw (without
/// replacement) of unlabeled rows. Alleged rows are left out.
pub fn undersample(classes: &[RowClass], seed: u64) -> Result<Balanced, ClassifierError> {
    let pos: Vec<usize> = (0..classes.len()).filter(|&i| classes[i] == RowClass::DefinitiveEfos).collect();
    let neg: Vec<usize> = (0..classes.len()).filter(|&i| classes[i] == RowClass::Unlabeled).collect();
    if pos.is_empty() {
        return Err(ClassifierError::NoPositives);
    }
    if neg.len() < pos.len() {
        return Err(ClassifierError::InsufficientUnlabeled { needed: pos.len(), found: neg.len() });
    }
    let mut rng = seed::rng(seed);
    let mut drawn: Vec<usize> = index::sample(&mut rng, neg.len(), pos.len()).into_iter().map(|k| neg[k]).collect();
    drawn.sort_unstable();
    let n = pos.len();
    let mut rows = pos;
    rows.extend(drawn);
    let classes = (0..2 * n).map(|i| i < n).collect();
    Ok(Balanced { rows, classes })
}

/// All rows, plus minority rows drawn with replacement until both classes
/// have the same count.
pub fn resample_minority(classes: &[bool], seed: u64) -> Result<Balanced, ClassifierError> {
    let pos: Vec<usize> = (0..classes.len()).filter(|&i| classes[i]).collect();
    let neg: Vec<usize> = (0..classes.len()).filter(|&i| !classes[i]).collect();
    if pos.is_empty() {
        return Err(ClassifierError::EmptyClass("positive"));
    }
    if neg.is_empty() {
        return Err(ClassifierError::EmptyClass("negative"));
    }
    let (minority, deficit, minority_class) = if pos.len() < neg.len() {
        (&pos, neg.len() - pos.len(), true)
    } else {
        (&neg, pos.len() - neg.len(), false)
    };
    let mut rng = seed::rng(seed);
    let mut rows: Vec<usize> = (0..classes.len()).collect();
    let mut out_classes = classes.to_vec();
    for _ in 0..deficit {
        rows.push(minority[rng.random_range(0..minority.len())]);
        out_classes.push(minority_class);
    }
    Ok(Balanced { rows, classes: out_classes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classes(pos: usize, neg: usize) -> Vec<RowClass> {
        let mut v = vec![RowClass::DefinitiveEfos; pos];
        v.extend(vec![RowClass::Unlabeled; neg]);
        v.push(RowClass::AllegedEfos);
        v
    }

    #[test]
    fn undersample_examples() {
        let b = undersample(&classes(10, 1000), 3).unwrap();
        assert_eq!(b.len(), 20);
        assert_eq!(b.classes.iter().filter(|&&c| c).count(), 10);
        assert!(b.rows[10..].iter().all(|&r| (10..1010).contains(&r)));
        assert_eq!(b, undersample(&classes(10, 1000), 3).unwrap());
        assert_eq!(
            undersample(&classes(10, 5), 3),
            Err(ClassifierError::InsufficientUnlabeled { needed: 10, found: 5 })
        );
        assert_eq!(undersample(&classes(0, 5), 3), Err(ClassifierError::NoPositives));
    }

    #[test]
    fn resample_examples() {
        let c = [true, true, false, false, false, false, false, false];
        let b = resample_minority(&c, 1).unwrap();
        assert_eq!(b.len(), 12);
        assert_eq!(b.classes.iter().filter(|&&x| x).count(), 6);
        assert!(b.rows[8..].iter().all(|&r| r < 2));
        let even = [true, false, true, false];
        let b = resample_minority(&even, 1).unwrap();
        assert_eq!(b.rows, vec![0, 1, 2, 3]);
        assert_eq!(b.classes, even.to_vec());
        assert_eq!(resample_minority(&[false, false], 1), Err(ClassifierError::EmptyClass("positive")));
    }

    #[test]
    fn resample_is_uniform_over_minority() {
        let c = [true, true, true, true, false, false, false, false, false, false, false, false, false, false];
        let mut counts = [0usize; 4];
        let seeds = 10_000;
        for s in 0..seeds {
            for &r in &resample_minority(&c, s).unwrap().rows[14..] {
                counts[r] += 1;
            }
        }
        let expected = seeds as f64 * 6.0 / 4.0;
        for k in counts {
            assert!((k as f64 - expected).abs() / expected < 0.05, "{counts:?}");
        }
    }
}
