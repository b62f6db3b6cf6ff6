use crate::error::{Error, Result};

/// One train / validation / test partition of the trace sets. Set ids are
/// 1-based.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct SetCombination {
    /// 1-based position in the combination list.
    pub index: usize,
    pub train_ids: Vec<i64>,
    pub validation_id: i64,
    pub test_id: i64,
}

impl SetCombination {
    /// Checks that the sets are disjoint and cover `1..=n_sets`.
    pub fn validate(&self, n_sets: usize) -> Result<()> {
        let mut all: Vec<i64> = self.train_ids.clone();
        all.push(self.validation_id);
        all.push(self.test_id);
        all.sort_unstable();
        let want: Vec<i64> = (1..=n_sets as i64).collect();
        if all != want {
            return Err(Error::invalid(
                "combination",
                format!("combination {} does not partition 1..={n_sets}", self.index),
            ));
        }
        Ok(())
    }
}

// (training sets, validation set, test set) for the fifteen-set layout.
#[rustfmt::skip]
const FIFTEEN: [(&[i64], i64, i64); 15] = [
    (&[1, 2, 3, 4, 5, 7, 9, 10, 11, 12, 13, 14, 15], 6, 8),
    (&[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 13, 14], 11, 15),
    (&[1, 2, 3, 4, 5, 6, 7, 8, 10, 11, 12, 13, 15], 14, 9),
    (&[1, 3, 4, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15], 5, 2),
    (&[1, 2, 3, 5, 6, 7, 8, 9, 10, 11, 13, 14, 15], 12, 4),
    (&[2, 3, 4, 5, 6, 7, 8, 9, 11, 12, 13, 14, 15], 10, 1),
    (&[1, 2, 3, 4, 5, 7, 8, 10, 11, 12, 13, 14, 15], 9, 6),
    (&[1, 2, 4, 5, 6, 7, 8, 9, 10, 11, 12, 14, 15], 13, 3),
    (&[1, 2, 3, 4, 6, 7, 9, 10, 11, 12, 13, 14, 15], 8, 5),
    (&[1, 2, 3, 5, 6, 8, 9, 10, 11, 12, 13, 14, 15], 4, 7),
    (&[1, 2, 4, 5, 6, 7, 8, 9, 11, 12, 13, 14, 15], 3, 10),
    (&[1, 2, 3, 4, 5, 6, 8, 9, 10, 12, 13, 14, 15], 7, 11),
    (&[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 14, 15], 13, 12),
    (&[1, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 14, 15], 2, 13),
    (&[2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 15], 1, 14),
];

/// Cross-validation partitions. Fifteen sets use the fixed reference
/// layout; any other count rotates: combination `i` tests set `i` and
/// validates on set `i + 1` (wrapping).
pub fn make_combinations(n_sets: usize) -> Result<Vec<SetCombination>> {
    if n_sets < 3 {
        return Err(Error::arg(format!("need at least 3 sets, got {n_sets}")));
    }
    let combos: Vec<SetCombination> = if n_sets == FIFTEEN.len() {
        FIFTEEN
            .iter()
            .enumerate()
            .map(|(i, (train, val, test))| SetCombination {
                index: i + 1,
                train_ids: train.to_vec(),
                validation_id: *val,
                test_id: *test,
            })
            .collect()
    } else {
        let n = n_sets as i64;
        (1..=n)
            .map(|test| {
                let val = test % n + 1;
                SetCombination {
                    index: test as usize,
                    train_ids: (1..=n).filter(|&s| s != test && s != val).collect(),
                    validation_id: val,
                    test_id: test,
                }
            })
            .collect()
    };
    for c in &combos {
        c.validate(n_sets)?;
    }
    Ok(combos)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_is_a_valid_cross_validation() {
        let c = make_combinations(15).unwrap();
        assert_eq!(c.len(), 15);
        let mut tests: Vec<i64> = c.iter().map(|x| x.test_id).collect();
        tests.sort_unstable();
        assert_eq!(tests, (1..=15).collect::<Vec<_>>());
    }

    #[test]
    fn rotation_for_other_counts() {
        let c = make_combinations(4).unwrap();
        assert_eq!((c[3].validation_id, c[3].test_id), (1, 4));
        assert!(make_combinations(2).is_err());
    }
}
