//! Exact hypervolume and per-point hypervolume sensitivities for two and
//! three objectives.
//!
//! The hypervolume of a point set is the measure of the loss-space region
//! weakly dominated by the set and bounded above by a reference point. For
//! each point of a mutually non-dominated set, [`hv_gradient`] returns the
//! nonnegative sensitivity magnitudes: entry (i, j) is the marginal decrease
//! of the hypervolume when loss j of point i increases, i.e. the extent
//! (length for n = 2, area for n = 3) of point i's exclusive face
//! perpendicular to axis j.
//!
//! Tie handling for degenerate sets:
//! - exactly identical points are collapsed and share one gradient row;
//! - distinct points sharing one or more coordinate values sit on a
//!   weak-dominance boundary where the one-sided derivatives disagree, so
//!   their rows are zero;
//! - points at or beyond the reference point in some coordinate dominate no
//!   volume; they get the uniform unit row (1/√n, …) as a pull-back signal
//!   (logged as a warning), except a point exactly at the reference point,
//!   which gets a zero row.

use crate::error::{Error, Result};
use crate::pareto::{dominates_unchecked, StackedLosses};

/// Upper corner of the hypervolume region of interest.
///
/// Coordinates must be strictly positive and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePoint {
    coords: Vec<f64>,
}

impl ReferencePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: coords.len(),
            });
        }
        if coords.iter().any(|c| !c.is_finite() || *c <= 0.0) {
            return Err(Error::NonFinite {
                context: "reference point coordinates must be strictly positive and finite",
            });
        }
        Ok(Self { coords })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn objectives(&self) -> usize {
        self.coords.len()
    }
}

/// Per-point, per-axis hypervolume sensitivity magnitudes.
///
/// Every entry is ≥ 0; see the module docs for the tie and out-of-box rules.
#[derive(Debug, Clone, PartialEq)]
pub struct HvGradient {
    per_point: Vec<Vec<f64>>,
}

impl HvGradient {
    pub fn rows(&self) -> &[Vec<f64>] {
        &self.per_point
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.per_point[i]
    }
}

fn check_dims(points: &StackedLosses, reference: &ReferencePoint) -> Result<usize> {
    let n = points.objectives();
    if reference.objectives() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: reference.objectives(),
        });
    }
    if n != 2 && n != 3 {
        return Err(Error::UnsupportedDimension { n });
    }
    Ok(n)
}

/// Lower-left staircase of the points strictly inside the box below `r`.
///
/// Returns points sorted ascending in the first coordinate with strictly
/// descending second coordinate; dominated and duplicate points are dropped.
fn staircase_2d(points: impl IntoIterator<Item = (f64, f64)>, r: (f64, f64)) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points
        .into_iter()
        .filter(|&(a, b)| a < r.0 && b < r.1)
        .collect();
    pts.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    let mut stair: Vec<(f64, f64)> = Vec::new();
    for (a, b) in pts {
        if stair.last().is_none_or(|&(_, last_b)| b < last_b) {
            stair.push((a, b));
        }
    }
    stair
}

/// Area of the union of boxes [aᵢ, r₀] × [bᵢ, r₁] via a single sweep.
fn union_area_2d(points: impl IntoIterator<Item = (f64, f64)>, r: (f64, f64)) -> f64 {
    let stair = staircase_2d(points, r);
    let mut area = 0.0;
    for (i, &(a, b)) in stair.iter().enumerate() {
        let next_a = stair.get(i + 1).map_or(r.0, |p| p.0);
        area += (next_a - a) * (r.1 - b);
    }
    area
}

fn hv2(points: &StackedLosses, r: &[f64]) -> f64 {
    union_area_2d(
        points.rows().iter().map(|p| (p.values()[0], p.values()[1])),
        (r[0], r[1]),
    )
}

/// Dimension sweep over sorted third-coordinate slabs, each slab contributing
/// the 2-D union area of the points active below it.
fn hv3(points: &StackedLosses, r: &[f64]) -> f64 {
    let mut pts: Vec<[f64; 3]> = points
        .rows()
        .iter()
        .map(|p| [p.values()[0], p.values()[1], p.values()[2]])
        .filter(|p| p[0] < r[0] && p[1] < r[1] && p[2] < r[2])
        .collect();
    pts.sort_by(|a, b| a[2].total_cmp(&b[2]));

    let mut volume = 0.0;
    let mut active: Vec<(f64, f64)> = Vec::new();
    let mut prev_z = f64::NAN;
    let mut idx = 0;
    while idx < pts.len() {
        let z = pts[idx][2];
        if !active.is_empty() {
            volume += union_area_2d(active.iter().copied(), (r[0], r[1])) * (z - prev_z);
        }
        while idx < pts.len() && pts[idx][2] == z {
            active.push((pts[idx][0], pts[idx][1]));
            idx += 1;
        }
        prev_z = z;
    }
    if !active.is_empty() {
        volume += union_area_2d(active, (r[0], r[1])) * (r[2] - prev_z);
    }
    volume
}

/// Hypervolume of `points` with respect to `reference`.
///
/// Each point contributes the box between it and the reference point, clipped
/// to the region below the reference; points at or beyond the reference in
/// any coordinate contribute nothing.
pub fn hv(points: &StackedLosses, reference: &ReferencePoint) -> Result<f64> {
    let n = check_dims(points, reference)?;
    let r = reference.coords();
    Ok(match n {
        2 => hv2(points, r),
        _ => hv3(points, r),
    })
}

/// How a point relates to the reference box; decides its gradient-row rule.
enum PointClass {
    AtReference,
    OutsideBox,
    SharesCoordinate,
    Interior,
}

/// Exclusive-face area of `point` perpendicular to `axis`, for n = 3.
///
/// Occluders are the other in-box points whose boxes reach the face plane,
/// i.e. those no worse than `point` along `axis`.
fn exclusive_face_3d(point: &[f64], axis: usize, occluders: &[&[f64]], r: &[f64]) -> f64 {
    let (u, v) = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let full = (r[u] - point[u]) * (r[v] - point[v]);
    let clipped = occluders
        .iter()
        .filter(|q| q[axis] <= point[axis])
        .map(|q| (q[u].max(point[u]), q[v].max(point[v])));
    full - union_area_2d(clipped, (r[u], r[v]))
}

/// Per-point hypervolume sensitivity magnitudes for a mutually non-dominated
/// set. See the module docs for the exact tie and out-of-box rules.
pub fn hv_gradient(points: &StackedLosses, reference: &ReferencePoint) -> Result<HvGradient> {
    let n = check_dims(points, reference)?;
    let r = reference.coords();
    let p = points.len();

    for i in 0..p {
        for j in 0..p {
            if i != j
                && dominates_unchecked(points.row(i).values(), points.row(j).values())
            {
                return Err(Error::DominatedInput { row: j });
            }
        }
    }

    // Collapse exact duplicates so each geometric location is handled once;
    // every owner row receives the representative's gradient.
    let mut unique: Vec<(&[f64], Vec<usize>)> = Vec::new();
    for (i, row) in points.rows().iter().enumerate() {
        match unique.iter_mut().find(|(q, _)| *q == row.values()) {
            Some((_, owners)) => owners.push(i),
            None => unique.push((row.values(), vec![i])),
        }
    }

    let classes: Vec<PointClass> = unique
        .iter()
        .enumerate()
        .map(|(u, (q, _))| {
            if q.iter().zip(r).all(|(a, b)| a == b) {
                PointClass::AtReference
            } else if q.iter().zip(r).any(|(a, b)| a >= b) {
                log::warn!(
                    "point {q:?} lies outside the reference box {r:?}; \
                     substituting the uniform pull-back gradient"
                );
                PointClass::OutsideBox
            } else if unique.iter().enumerate().any(|(w, (other, _))| {
                w != u && q.iter().zip(other.iter()).any(|(a, b)| a == b)
            }) {
                PointClass::SharesCoordinate
            } else {
                PointClass::Interior
            }
        })
        .collect();

    // Only in-box points occlude; boxes of the others have zero measure.
    let in_box: Vec<&[f64]> = unique
        .iter()
        .zip(&classes)
        .filter(|(_, c)| !matches!(c, PointClass::AtReference | PointClass::OutsideBox))
        .map(|((q, _), _)| *q)
        .collect();

    let mut rows = vec![vec![0.0; n]; p];
    for ((q, owners), class) in unique.iter().zip(&classes) {
        let row = match class {
            PointClass::AtReference | PointClass::SharesCoordinate => vec![0.0; n],
            PointClass::OutsideBox => vec![1.0 / (n as f64).sqrt(); n],
            PointClass::Interior => {
                if n == 2 {
                    // Neighbor formula on the staircase: the nearest left
                    // neighbor has the smallest second coordinate among the
                    // points left of q, and the reference point supplies
                    // both sentinels.
                    let left_b = in_box
                        .iter()
                        .filter(|o| o[0] < q[0])
                        .map(|o| o[1])
                        .fold(f64::INFINITY, f64::min);
                    let prev_b = if left_b.is_finite() { left_b } else { r[1] };
                    let right_a = in_box
                        .iter()
                        .filter(|o| o[0] > q[0])
                        .map(|o| o[0])
                        .fold(f64::INFINITY, f64::min);
                    let next_a = if right_a.is_finite() { right_a } else { r[0] };
                    vec![prev_b - q[1], next_a - q[0]]
                } else {
                    let occluders: Vec<&[f64]> =
                        in_box.iter().filter(|o| **o != *q).copied().collect();
                    (0..3)
                        .map(|axis| exclusive_face_3d(q, axis, &occluders, r))
                        .collect()
                }
            }
        };
        for &owner in owners {
            rows[owner].clone_from(&row);
        }
    }

    Ok(HvGradient { per_point: rows })
}
