//! Exact projection machinery: intervals and their unions, projection and
//! Favard lengths, overlaps, covering multiplicity, and the shift/Jacobian
//! functions used by the overlap estimates.
//!
//! Projections are onto the line through the origin at angle `theta`; a set
//! member projects to a closed interval and a family to a union of intervals,
//! measured by a sort-and-sweep in `O(m log m)`. Touching intervals merge, so
//! unions have a canonical form and Lebesgue measure is read off directly.

use crate::model::{Disk, DiskSet, Point, Square, SquareSet};
use crate::util::KahanSum;
use crate::Error;

/// A closed interval `[lo, hi]` on the projection line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "interval endpoints out of order: [{lo}, {hi}]");
        Self { lo, hi }
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, t: f64) -> bool {
        self.lo <= t && t <= self.hi
    }

    fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then(|| Interval::new(lo, hi))
    }
}

/// A normalized union of closed intervals: sorted, pairwise disjoint, with
/// touching inputs merged.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct IntervalUnion {
    intervals: Vec<Interval>,
}

impl IntervalUnion {
    /// Normalize an arbitrary (unsorted, overlapping) collection.
    pub fn from_intervals(intervals: impl IntoIterator<Item = Interval>) -> Result<Self, Error> {
        let mut items: Vec<Interval> = intervals.into_iter().collect();
        if items
            .iter()
            .any(|iv| iv.lo.is_nan() || iv.hi.is_nan())
        {
            return Err(Error::NanEndpoint);
        }
        items.sort_unstable_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut merged: Vec<Interval> = Vec::with_capacity(items.len());
        for iv in items {
            match merged.last_mut() {
                Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
                _ => merged.push(iv),
            }
        }
        Ok(Self { intervals: merged })
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    /// Total Lebesgue measure.
    pub fn measure(&self) -> f64 {
        KahanSum::sum_iter(self.intervals.iter().map(Interval::length))
    }

    /// Intersection with another normalized union (two-pointer sweep).
    pub fn intersect(&self, other: &IntervalUnion) -> IntervalUnion {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.intervals.len() && j < other.intervals.len() {
            let a = self.intervals[i];
            let b = other.intervals[j];
            if let Some(iv) = a.intersect(&b) {
                out.push(iv);
            }
            if a.hi <= b.hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalUnion { intervals: out }
    }

    /// Endpoints `lo_0, hi_0, lo_1, hi_1, ...` in order.
    pub fn endpoints(&self) -> Vec<f64> {
        self.intervals
            .iter()
            .flat_map(|iv| [iv.lo, iv.hi])
            .collect()
    }
}

/// Lebesgue measure of the union of arbitrary closed intervals.
pub fn union_measure(intervals: &[Interval]) -> Result<f64, Error> {
    Ok(IntervalUnion::from_intervals(intervals.iter().copied())?.measure())
}

/// Unit direction of the projection line at angle `theta`.
#[inline]
fn direction(theta: f64) -> Point {
    let (sin, cos) = theta.sin_cos();
    Point::new(cos, sin)
}

/// Projection of one disk: `<center, u_theta> +- radius`.
pub fn project_disk(disk: &Disk, theta: f64) -> Interval {
    let mid = disk.center().dot(direction(theta));
    let r = disk.radius();
    Interval::new(mid - r, mid + r)
}

/// Projection of one axis-aligned square (min/max over its corners).
pub fn project_square(square: &Square, theta: f64) -> Interval {
    let u = direction(theta);
    let base = square.corner().dot(u);
    let s = square.side();
    let ex = s * u.x;
    let ey = s * u.y;
    Interval::new(
        base + ex.min(0.0) + ey.min(0.0),
        base + ex.max(0.0) + ey.max(0.0),
    )
}

/// Families that project onto a line as a finite set of intervals.
pub trait Projectable {
    fn projected(&self, theta: f64) -> Vec<Interval>;
}

impl Projectable for [Disk] {
    fn projected(&self, theta: f64) -> Vec<Interval> {
        self.iter().map(|d| project_disk(d, theta)).collect()
    }
}

impl Projectable for DiskSet {
    fn projected(&self, theta: f64) -> Vec<Interval> {
        self.disks().projected(theta)
    }
}

impl Projectable for [Square] {
    fn projected(&self, theta: f64) -> Vec<Interval> {
        self.iter().map(|s| project_square(s, theta)).collect()
    }
}

impl Projectable for SquareSet {
    fn projected(&self, theta: f64) -> Vec<Interval> {
        self.squares().projected(theta)
    }
}

/// Normalized union of all member projections.
pub fn projection_union(set: &(impl Projectable + ?Sized), theta: f64) -> IntervalUnion {
    IntervalUnion::from_intervals(set.projected(theta))
        .expect("projections of finite sets have finite endpoints")
}

/// `|proj_theta set|`: measure of the union of the member projections.
pub fn projection_length(set: &(impl Projectable + ?Sized), theta: f64) -> f64 {
    projection_union(set, theta).measure()
}

/// Measure of `proj(a) ∩ proj(b)` on the line at angle `theta`.
pub fn overlap_length(
    a: &(impl Projectable + ?Sized),
    b: &(impl Projectable + ?Sized),
    theta: f64,
) -> f64 {
    projection_union(a, theta)
        .intersect(&projection_union(b, theta))
        .measure()
}

/// Number of intervals covering the point `t`.
pub fn multiplicity(intervals: &[Interval], t: f64) -> usize {
    intervals.iter().filter(|iv| iv.contains(t)).count()
}

/// Midpoint-rule Favard length: the mean of `|proj_theta|` over
/// `theta_i = (i + 1/2) pi / grid_size`, `i = 0..grid_size`.
///
/// The grid is evaluated in index order with compensated accumulation, so the
/// value does not depend on any parallel schedule upstream.
pub fn favard_length(set: &(impl Projectable + ?Sized), grid_size: usize) -> f64 {
    assert!(grid_size >= 1, "quadrature grid must not be empty");
    let mut sum = KahanSum::new();
    for i in 0..grid_size {
        let theta = (i as f64 + 0.5) * std::f64::consts::PI / grid_size as f64;
        sum.add(projection_length(set, theta));
    }
    sum.value() / grid_size as f64
}

/// Closed-form length of the x-axis projection of the first generation at
/// parent angle `omega`. Total diameter 2 minus the three possible sibling
/// overlaps: the two axis pairs and the (doubled) diagonal pair.
pub fn closed_form_d1_length(omega: f64) -> f64 {
    let (sin, cos) = omega.sin_cos();
    2.0 - (0.5 - 1.5 * sin).max(0.0)
        - (0.5 - 1.5 * cos).max(0.0)
        - 2.0 * (0.5 - 0.75 * (cos - sin).abs()).max(0.0)
}

/// Horizontal displacement of a child group's projection when the parent
/// rotates by `psi`: `s(psi) = 3/4 (1 - cos psi)`.
pub fn shift_s(psi: f64) -> f64 {
    0.75 * (1.0 - psi.cos())
}

/// Absolute Jacobian of the substitution `u = t + s(psi)`,
/// `v = t + s(psi - pi/2)`: `(3/4)|cos psi + sin psi|`, at most `3 sqrt(2)/4`.
pub fn jacobian_det(psi: f64) -> f64 {
    let (sin, cos) = psi.sin_cos();
    0.75 * (cos + sin).abs()
}

/// Fast path for Monte Carlo loops: projection length of equal-radius disks
/// given their centers. `buf` is a scratch vector reused across calls.
pub(crate) fn projection_length_centers(
    buf: &mut Vec<f64>,
    centers: &[Point],
    radius: f64,
    theta: f64,
) -> f64 {
    let u = direction(theta);
    buf.clear();
    buf.extend(centers.iter().map(|c| c.dot(u)));
    buf.sort_unstable_by(f64::total_cmp);
    let mut total = KahanSum::new();
    let mut cur_lo = buf[0] - radius;
    let mut cur_hi = buf[0] + radius;
    for &x in &buf[1..] {
        if x - radius > cur_hi {
            total.add(cur_hi - cur_lo);
            cur_lo = x - radius;
        }
        cur_hi = x + radius;
    }
    total.add(cur_hi - cur_lo);
    total.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_generation, omega_set, quarter_corner, AngleTree, Point};
    use crate::tolerances::EXACT;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

    fn d1(omega: f64) -> DiskSet {
        let tree = AngleTree::constant(1, omega).unwrap();
        build_generation(&tree, 1).unwrap()
    }

    fn d0() -> DiskSet {
        let tree = AngleTree::constant(1, 0.0).unwrap();
        build_generation(&tree, 0).unwrap()
    }

    #[test]
    fn disk_projections() {
        let unit = d0();
        assert_eq!(project_disk(&unit.disks()[0], 0.0), Interval::new(-1.0, 1.0));

        let g1 = d1(0.0);
        assert_eq!(project_disk(&g1.disks()[0], 0.0), Interval::new(0.5, 1.0));
        let iv = project_disk(&g1.disks()[1], 0.0);
        assert!((iv.lo + 0.25).abs() <= EXACT && (iv.hi - 0.25).abs() <= EXACT);
    }

    #[test]
    fn union_measure_cases() {
        let m = union_measure(&[Interval::new(0.0, 1.0), Interval::new(0.5, 2.0)]).unwrap();
        assert_eq!(m, 2.0);
        assert_eq!(union_measure(&[]).unwrap(), 0.0);
        let m = union_measure(&[
            Interval::new(-1.0, -0.5),
            Interval::new(-0.25, 0.25),
            Interval::new(-0.25, 0.25),
            Interval::new(0.5, 1.0),
        ])
        .unwrap();
        assert_eq!(m, 1.5);
        assert!(union_measure(&[Interval { lo: f64::NAN, hi: 1.0 }]).is_err());
    }

    #[test]
    fn touching_intervals_merge() {
        let u = IntervalUnion::from_intervals([Interval::new(0.0, 1.0), Interval::new(1.0, 2.0)])
            .unwrap();
        assert_eq!(u.intervals().len(), 1);
        assert_eq!(u.measure(), 2.0);
    }

    #[test]
    fn projection_length_first_generation() {
        assert!((projection_length(&d1(0.0), 0.0) - 1.5).abs() <= EXACT);
        assert!((projection_length(&d1(FRAC_PI_4), 0.0) - 1.0).abs() <= EXACT);
        assert_eq!(projection_length(&d0(), 0.7), 2.0);
    }

    #[test]
    fn closed_form_matches_sweep() {
        assert!((closed_form_d1_length(0.0) - 1.5).abs() <= EXACT);
        assert!((closed_form_d1_length(FRAC_PI_4) - 1.0).abs() <= EXACT);
        for i in 0..=1000 {
            let omega = i as f64 * FRAC_PI_2 / 1000.0;
            let exact = projection_length(&d1(omega), 0.0);
            let closed = closed_form_d1_length(omega);
            assert!(
                (exact - closed).abs() <= EXACT,
                "omega={omega}: sweep {exact} vs closed {closed}"
            );
        }
    }

    #[test]
    fn overlap_cases() {
        let a = d1(0.3);
        assert!((overlap_length(&a, &a, 0.0) - projection_length(&a, 0.0)).abs() <= EXACT);

        let east = vec![d1(0.0).disks()[0]];
        let west = vec![d1(0.0).disks()[2]];
        assert_eq!(overlap_length(&east[..], &west[..], 0.0), 0.0);

        // siblings 0 and 1 at omega = pi/4 share identical projections of length 1/2
        let sib = omega_set(1, 1, FRAC_PI_4, Point::ORIGIN).unwrap();
        let t0 = vec![sib[0]];
        let t1 = vec![sib[1]];
        assert!((overlap_length(&t0[..], &t1[..], 0.0) - 0.5).abs() <= EXACT);
    }

    #[test]
    fn multiplicity_cases() {
        let ivs = d1(0.0).projected(0.0);
        assert_eq!(multiplicity(&ivs, 0.0), 2);
        assert_eq!(multiplicity(&ivs, 5.0), 0);
        assert_eq!(multiplicity(&ivs, 0.75), 1);
    }

    #[test]
    fn inclusion_exclusion_with_pairwise_overlaps() {
        // union = sum of lengths - sum of pairwise overlaps whenever no point
        // is covered three times, which holds for every sibling quadruple
        for i in 0..=200 {
            let omega = i as f64 * FRAC_PI_2 / 200.0;
            let ivs = d1(omega).projected(0.0);
            let total: f64 = ivs.iter().map(Interval::length).sum();
            let mut pair = 0.0;
            for a in 0..4 {
                for b in (a + 1)..4 {
                    if let Some(iv) = ivs[a].intersect(&ivs[b]) {
                        pair += iv.length();
                    }
                }
            }
            let union = union_measure(&ivs).unwrap();
            assert!((union - (total - pair)).abs() <= EXACT, "omega={omega}");
        }
    }

    #[test]
    fn favard_basics() {
        assert_eq!(favard_length(&d0(), 1), 2.0);
        assert_eq!(favard_length(&d0(), 97), 2.0);

        // a single disk projects to its diameter at every angle
        let single = vec![d1(0.2).disks()[0]];
        assert!((favard_length(&single[..], 45) - 0.5).abs() <= EXACT);

        let coarse = favard_length(&d1(0.0), 360);
        let fine = favard_length(&d1(0.0), 720);
        assert!((coarse - fine).abs() <= crate::tolerances::QUADRATURE);
    }

    #[test]
    fn quarter_corner_projection() {
        let g1 = quarter_corner(1).unwrap();
        let u = projection_union(&g1, 0.0);
        assert_eq!(u.intervals().len(), 2);
        assert!((u.measure() - 0.5).abs() <= EXACT);
        assert!((u.intervals()[0].lo).abs() <= EXACT && (u.intervals()[0].hi - 0.25).abs() <= EXACT);
        assert!((u.intervals()[1].lo - 0.75).abs() <= EXACT && (u.intervals()[1].hi - 1.0).abs() <= EXACT);
    }

    #[test]
    fn shift_and_jacobian_values() {
        assert_eq!(shift_s(0.0), 0.0);
        assert!((shift_s(FRAC_PI_2) - 0.75).abs() <= EXACT);
        assert!((shift_s(std::f64::consts::FRAC_PI_3) - 0.375).abs() <= EXACT);

        assert_eq!(jacobian_det(0.0), 0.75);
        assert!((jacobian_det(FRAC_PI_4) - 0.75 * SQRT_2).abs() <= EXACT);
        // odd inclusive grid, so pi/4 is (numerically) a node
        let max = (0..=10_000)
            .map(|i| jacobian_det(i as f64 * FRAC_PI_2 / 10_000.0))
            .fold(0.0f64, f64::max);
        assert!((max - 0.75 * SQRT_2).abs() <= EXACT);
    }

    #[test]
    fn fast_path_matches_generic_sweep() {
        let tree = AngleTree::constant(3, 0.37).unwrap();
        let set = build_generation(&tree, 3).unwrap();
        let centers: Vec<Point> = set.disks().iter().map(|d| d.center()).collect();
        let mut buf = Vec::new();
        for theta in [0.0, 0.3, 1.1] {
            let fast = projection_length_centers(&mut buf, &centers, set.disks()[0].radius(), theta);
            let slow = projection_length(&set, theta);
            assert!((fast - slow).abs() <= EXACT);
        }
    }
}
