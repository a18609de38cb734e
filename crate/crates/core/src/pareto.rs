//! Pareto-dominance predicates and non-dominated sorting.
//!
//! All comparisons are for minimization: a point dominates another when it is
//! no worse in every objective and strictly better in at least one. Sorting
//! peels the point set into domination-ranked fronts; rank 0 holds the
//! non-dominated points, rank 1 the points only dominated by rank 0, and so
//! on. Everything here is a pure function over validated, immutable inputs.

use crate::error::{Error, Result};

/// One solution's loss values for one sample, in canonical objective order.
///
/// Construction validates the invariants once (at least two objectives, all
/// entries finite) so downstream geometry can assume well-formed data.
#[derive(Debug, Clone, PartialEq)]
pub struct LossVector {
    values: Vec<f64>,
}

impl LossVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "loss vector entry",
            });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn objectives(&self) -> usize {
        self.values.len()
    }
}

/// The p×n matrix of all networks' loss vectors for one sample.
///
/// Row order is the canonical network order and is stable across calls.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedLosses {
    rows: Vec<LossVector>,
}

impl StackedLosses {
    pub fn new(rows: Vec<LossVector>) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyInput {
            context: "stacked losses need at least one row",
        })?;
        let n = first.objectives();
        for row in &rows {
            if row.objectives() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.objectives(),
                });
            }
        }
        Ok(Self { rows })
    }

    /// Convenience constructor from raw rows; validates every entry.
    pub fn from_rows(raw: &[Vec<f64>]) -> Result<Self> {
        let rows = raw
            .iter()
            .map(|r| LossVector::new(r.clone()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows)
    }

    pub fn rows(&self) -> &[LossVector] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &LossVector {
        &self.rows[i]
    }

    /// Number of points p.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Number of objectives n.
    pub fn objectives(&self) -> usize {
        self.rows[0].objectives()
    }
}

/// Domination ranks and the fronts they induce.
///
/// `rank[i]` is the front index of row `i`; `fronts[l]` lists the member rows
/// of front `l` in ascending row order. Concatenating the fronts in rank
/// order is a permutation of all row indices.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontPartition {
    rank: Vec<usize>,
    fronts: Vec<Vec<usize>>,
}

impl FrontPartition {
    pub fn rank(&self) -> &[usize] {
        &self.rank
    }

    pub fn fronts(&self) -> &[Vec<usize>] {
        &self.fronts
    }
}

pub(crate) fn dominates_unchecked(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strict = true;
        }
    }
    strict
}

/// Weak Pareto dominance for minimization: `a` dominates `b` iff `a` is no
/// worse in every objective and strictly better in at least one. Duplicates
/// do not dominate each other.
pub fn dominates(a: &LossVector, b: &LossVector) -> Result<bool> {
    if a.objectives() != b.objectives() {
        return Err(Error::DimensionMismatch {
            expected: a.objectives(),
            got: b.objectives(),
        });
    }
    Ok(dominates_unchecked(a.values(), b.values()))
}

/// Fast non-dominated sort into domination-ranked fronts.
///
/// Within each front indices ascend, so the output is deterministic for a
/// given input. Worst case O(p²n), which is fine at the ensemble sizes this
/// library targets (p ≤ a few dozen).
pub fn non_dominated_sort(stacked: &StackedLosses) -> FrontPartition {
    let p = stacked.len();
    let mut dominated_by: Vec<usize> = vec![0; p];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); p];

    for i in 0..p {
        for j in (i + 1)..p {
            let a = stacked.row(i).values();
            let b = stacked.row(j).values();
            if dominates_unchecked(a, b) {
                dominates_list[i].push(j);
                dominated_by[j] += 1;
            } else if dominates_unchecked(b, a) {
                dominates_list[j].push(i);
                dominated_by[i] += 1;
            }
        }
    }

    let mut rank = vec![usize::MAX; p];
    let mut fronts: Vec<Vec<usize>> = Vec::new();
    let mut current: Vec<usize> = (0..p).filter(|&i| dominated_by[i] == 0).collect();
    let mut level = 0;
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            rank[i] = level;
            for &j in &dominates_list[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::take(&mut current));
        current = next;
        level += 1;
    }

    FrontPartition { rank, fronts }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lv(values: &[f64]) -> LossVector {
        LossVector::new(values.to_vec()).unwrap()
    }

    fn stack(rows: &[&[f64]]) -> StackedLosses {
        StackedLosses::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    /// Independent O(p²n) oracle: repeatedly peel the set of points not
    /// dominated by any remaining point.
    fn peel_oracle(rows: &[Vec<f64>]) -> Vec<usize> {
        let mut rank = vec![usize::MAX; rows.len()];
        let mut remaining: Vec<usize> = (0..rows.len()).collect();
        let mut level = 0;
        while !remaining.is_empty() {
            let front: Vec<usize> = remaining
                .iter()
                .copied()
                .filter(|&i| {
                    !remaining
                        .iter()
                        .any(|&j| j != i && dominates_unchecked(&rows[j], &rows[i]))
                })
                .collect();
            assert!(!front.is_empty(), "peeling stalled");
            for &i in &front {
                rank[i] = level;
            }
            remaining.retain(|i| !front.contains(i));
            level += 1;
        }
        rank
    }

    #[test]
    fn dominates_strict_improvement() {
        assert!(dominates(&lv(&[1.0, 2.0]), &lv(&[2.0, 3.0])).unwrap());
    }

    #[test]
    fn dominates_incomparable() {
        assert!(!dominates(&lv(&[1.0, 3.0]), &lv(&[3.0, 1.0])).unwrap());
        assert!(!dominates(&lv(&[3.0, 1.0]), &lv(&[1.0, 3.0])).unwrap());
    }

    #[test]
    fn dominates_requires_strict_improvement() {
        assert!(!dominates(&lv(&[1.0, 2.0]), &lv(&[1.0, 2.0])).unwrap());
    }

    #[test]
    fn dominates_weak_on_one_axis() {
        assert!(dominates(&lv(&[1.0, 2.0]), &lv(&[1.0, 3.0])).unwrap());
    }

    #[test]
    fn dominates_dimension_mismatch_errors() {
        let err = dominates(&lv(&[1.0, 2.0]), &lv(&[1.0, 2.0, 3.0])).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn loss_vector_rejects_non_finite() {
        assert!(matches!(
            LossVector::new(vec![1.0, f64::NAN]),
            Err(Error::NonFinite { .. })
        ));
        assert!(matches!(
            LossVector::new(vec![f64::INFINITY, 1.0]),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn loss_vector_rejects_single_objective() {
        assert!(matches!(
            LossVector::new(vec![1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sort_matches_frozen_example() {
        // Oracle (peel_oracle) gives [0, 0, 0, 1, 1] for this set.
        let s = stack(&[
            &[1.0, 5.0],
            &[2.0, 4.0],
            &[3.0, 3.0],
            &[2.5, 4.5],
            &[4.0, 4.0],
        ]);
        let part = non_dominated_sort(&s);
        assert_eq!(part.rank(), &[0, 0, 0, 1, 1]);
        assert_eq!(part.fronts(), &[vec![0, 1, 2], vec![3, 4]]);
    }

    #[test]
    fn sort_single_row() {
        let part = non_dominated_sort(&stack(&[&[7.0, 7.0]]));
        assert_eq!(part.rank(), &[0]);
    }

    #[test]
    fn sort_duplicates_share_front() {
        let part = non_dominated_sort(&stack(&[&[1.0, 1.0], &[1.0, 1.0]]));
        assert_eq!(part.rank(), &[0, 0]);
    }

    #[test]
    fn stacked_losses_reject_ragged_rows() {
        let rows = vec![lv(&[1.0, 2.0]), lv(&[1.0, 2.0, 3.0])];
        assert!(matches!(
            StackedLosses::new(rows),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn sort_agrees_with_peel_oracle(
            n in 2usize..=3,
            rows in proptest::collection::vec(
                proptest::collection::vec(0.0f64..4.0, 3),
                1..32,
            ),
        ) {
            let rows: Vec<Vec<f64>> = rows.into_iter().map(|r| r[..n].to_vec()).collect();
            let s = StackedLosses::from_rows(&rows).unwrap();
            let part = non_dominated_sort(&s);
            let expected = peel_oracle(&rows);
            prop_assert_eq!(part.rank(), expected.as_slice());
        }

        #[test]
        fn fronts_concatenate_to_permutation(
            rows in proptest::collection::vec(
                proptest::collection::vec(0.0f64..4.0, 2),
                1..32,
            ),
        ) {
            let s = StackedLosses::from_rows(&rows).unwrap();
            let part = non_dominated_sort(&s);
            let mut all: Vec<usize> = part.fronts().iter().flatten().copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..rows.len()).collect::<Vec<_>>());
            // Within a front no row dominates another.
            for front in part.fronts() {
                for &i in front {
                    for &j in front {
                        if i != j {
                            prop_assert!(!dominates_unchecked(&rows[i], &rows[j]));
                        }
                    }
                }
            }
            // Every row of front l > 0 is dominated by some row of front l - 1.
            for l in 1..part.fronts().len() {
                for &i in &part.fronts()[l] {
                    prop_assert!(part.fronts()[l - 1]
                        .iter()
                        .any(|&j| dominates_unchecked(&rows[j], &rows[i])));
                }
            }
        }

        #[test]
        fn dominance_is_irreflexive_and_antisymmetric(
            a in proptest::collection::vec(0.0f64..4.0, 2),
            b in proptest::collection::vec(0.0f64..4.0, 2),
        ) {
            let (a, b) = (lv(&a), lv(&b));
            prop_assert!(!dominates(&a, &a).unwrap());
            prop_assert!(!(dominates(&a, &b).unwrap() && dominates(&b, &a).unwrap()));
        }

        #[test]
        fn dominance_is_transitive(
            a in proptest::collection::vec(0.0f64..2.0, 3),
            b in proptest::collection::vec(0.0f64..2.0, 3),
            c in proptest::collection::vec(0.0f64..2.0, 3),
        ) {
            let (a, b, c) = (lv(&a), lv(&b), lv(&c));
            if dominates(&a, &b).unwrap() && dominates(&b, &c).unwrap() {
                prop_assert!(dominates(&a, &c).unwrap());
            }
        }
    }
}
