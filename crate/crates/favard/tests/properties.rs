//! Property-based invariants of the construction and the projection
//! machinery, driven by random seeds, depths, and angles.

use proptest::prelude::*;

use favard::geometry::{
    closed_form_d1_length, multiplicity, project_disk, projection_length, shift_s, union_measure,
    Interval, Projectable,
};
use favard::model::{
    build_generation, omega_set, transform, AngleMode, AngleTree, Disk, Point,
};
use favard::rng::SeedKey;
use favard::tolerances::EXACT;

use std::f64::consts::{FRAC_PI_2, PI};

/// Oracle for the sweep: merge overlapping pairs until a fixpoint, then sum.
fn naive_union(mut ivs: Vec<(f64, f64)>) -> f64 {
    loop {
        let mut merged = None;
        'search: for i in 0..ivs.len() {
            for j in (i + 1)..ivs.len() {
                if ivs[i].0 <= ivs[j].1 && ivs[j].0 <= ivs[i].1 {
                    merged = Some((i, j));
                    break 'search;
                }
            }
        }
        match merged {
            Some((i, j)) => {
                let b = ivs.swap_remove(j);
                ivs[i] = (ivs[i].0.min(b.0), ivs[i].1.max(b.1));
            }
            None => break,
        }
    }
    ivs.iter().map(|(lo, hi)| hi - lo).sum()
}

fn interval_inputs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec(
        (-5.0f64..5.0, 0.0f64..3.0).prop_map(|(lo, len)| (lo, lo + len)),
        0..20,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn union_measure_matches_naive_merging(inputs in interval_inputs()) {
        let intervals: Vec<Interval> =
            inputs.iter().map(|&(lo, hi)| Interval::new(lo, hi)).collect();
        let swept = union_measure(&intervals).unwrap();
        let naive = naive_union(inputs);
        prop_assert!((swept - naive).abs() <= EXACT, "{swept} vs {naive}");
    }

    #[test]
    fn generations_nest_and_stay_disjoint(seed in any::<u64>(), depth in 1u32..=4) {
        let key = SeedKey::new(seed);
        let tree = AngleTree::sample(depth, &key, AngleMode::Independent).unwrap();
        let mut parents = build_generation(&tree, 0).unwrap();
        for k in 1..=depth {
            let children = build_generation(&tree, k).unwrap();
            prop_assert_eq!(children.len(), 1usize << (2 * k));
            for child in children.disks() {
                // closed containment in the parent, tangency allowed
                let parent = &parents.disks()[((child.number + 3) / 4 - 1) as usize];
                let gap = (child.center() - parent.center()).norm()
                    + child.radius() - parent.radius();
                prop_assert!(gap <= EXACT, "child {} sticks out by {gap}", child.number);
                // containment in the unit disk
                prop_assert!(child.center().norm() + child.radius() <= 1.0 + EXACT);
            }
            // pairwise interior-disjoint
            let disks = children.disks();
            for a in 0..disks.len() {
                for b in (a + 1)..disks.len() {
                    let d = (disks[a].center() - disks[b].center()).norm();
                    prop_assert!(
                        d >= disks[a].radius() + disks[b].radius() - EXACT,
                        "disks {} and {} overlap", disks[a].number, disks[b].number
                    );
                }
            }
            // measure budget: the diameters always sum to 2 exactly
            let total: f64 = disks.iter().map(|d| 2.0 * d.radius()).sum();
            prop_assert_eq!(total, 2.0);
            parents = children;
        }
    }

    #[test]
    fn projection_monotone_in_generation(seed in any::<u64>(), theta in 0.0..PI) {
        let key = SeedKey::new(seed);
        let tree = AngleTree::sample(4, &key, AngleMode::Independent).unwrap();
        let mut prev = 2.0;
        for k in 0..=4 {
            let set = build_generation(&tree, k).unwrap();
            let len = projection_length(&set, theta);
            prop_assert!(len > 0.0 && len <= 2.0 + EXACT);
            prop_assert!(len <= prev + EXACT, "k={k}: {len} > {prev}");
            prev = len;
        }
    }

    #[test]
    fn sibling_multiplicity_never_exceeds_two(omega in 0.0f64..=FRAC_PI_2) {
        let siblings = omega_set(1, 1, omega, Point::ORIGIN).unwrap();
        let intervals = siblings.projected(0.0);
        for endpoint in intervals.iter().flat_map(|iv| [iv.lo, iv.hi]) {
            prop_assert!(multiplicity(&intervals, endpoint) <= 2);
        }
    }

    #[test]
    fn rotation_shifts_east_projection_by_s(psi in 0.0f64..=FRAC_PI_2) {
        // generation-1 East disk: rotating the parent by psi moves the
        // x-projection rigidly left by s(psi)
        let at_zero = Disk::new(transform(Point::ORIGIN, 0, 0.0), 1, 1);
        let at_psi = Disk::new(transform(Point::ORIGIN, 0, psi), 1, 1);
        let a = project_disk(&at_zero, 0.0);
        let b = project_disk(&at_psi, 0.0);
        prop_assert!((b.lo + shift_s(psi) - a.lo).abs() <= EXACT);
        prop_assert!((b.hi + shift_s(psi) - a.hi).abs() <= EXACT);
    }

    #[test]
    fn closed_form_tracks_the_sweep(omega in 0.0f64..=FRAC_PI_2) {
        let tree = AngleTree::from_angles(1, vec![omega], AngleMode::Independent).unwrap();
        let set = build_generation(&tree, 1).unwrap();
        let swept = projection_length(&set, 0.0);
        prop_assert!((swept - closed_form_d1_length(omega)).abs() <= EXACT);
    }
}
