//! Randomized cross-validation: every engine is checked against an
//! independent oracle (exhaustive enumeration, a second formula, or an
//! exact identity) on generated inputs.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

use fewsums::fs::{ap_cover_count, fs_set, fs_set_points, incremental_trace, FsConfig};
use fewsums::gap::{
    fiber_count_exact, fiber_points, gap_lift, gap_project, slice_reduce, BoxSlice, SymmetricGap,
};
use fewsums::linear::one_step_growth;
use fewsums::pipeline::{decompose, local_to_global, PipelineConfig};
use fewsums::point::{LatticePoint, PointSet};
use fewsums::scalar::rat;
use fewsums::stability::{collision_count, pair_removal_certificate, ungar_pair};
use fewsums::{Error, Int, Rat, Scalar, ScalarSet};

fn int_set(vals: &BTreeSet<i64>) -> ScalarSet {
    let v: Vec<i64> = vals.iter().copied().collect();
    ScalarSet::from_ints(&v).unwrap()
}

fn rational_set(fracs: &BTreeSet<(i64, i64)>) -> ScalarSet {
    let elems: Vec<Scalar> = fracs.iter().map(|&(n, d)| Scalar::Rational(rat(n, d))).collect();
    ScalarSet::from_dedup(elems).unwrap()
}

/// All subset sums by direct 2^n enumeration.
fn brute_force_fs(vals: &[Rat]) -> BTreeSet<Rat> {
    let mut sums = BTreeSet::new();
    for mask in 0u32..(1 << vals.len()) {
        let mut s = Rat::zero();
        for (i, v) in vals.iter().enumerate() {
            if mask >> i & 1 == 1 {
                s += v;
            }
        }
        sums.insert(s);
    }
    sums
}

proptest! {
    /// The incremental engine agrees with exhaustive enumeration on
    /// arbitrary rational sets (signs and denominators included).
    #[test]
    fn fs_matches_exhaustive_enumeration(
        fracs in proptest::collection::btree_set((-40i64..=40, 1i64..=6), 1..=8)
    ) {
        let a = rational_set(&fracs);
        prop_assume!(!a.is_empty());
        let vals: Vec<Rat> =
            a.iter().map(|s| s.as_rational().unwrap().clone()).collect();
        let expected = brute_force_fs(&vals);
        let fs = fs_set(&a, &FsConfig::default()).unwrap();
        let got: BTreeSet<Rat> = fs
            .values_increasing()
            .unwrap()
            .into_iter()
            .map(|s| s.as_rational().unwrap().clone())
            .collect();
        prop_assert_eq!(got, expected);
    }

    /// Trace identities on positive sets: the increments sum to
    /// `|FS(A)| − 1`, each increment is at least the prefix growth bound,
    /// and each equals the AP-cover statistic of the preceding prefix.
    #[test]
    fn trace_increments_match_the_ap_cover_oracle(
        vals in proptest::collection::btree_set(1i64..=50, 1..=9)
    ) {
        let a = int_set(&vals);
        let cfg = FsConfig::default();
        let trace = incremental_trace(&a, &cfg).unwrap();
        let total: u64 = trace.z.iter().sum();
        prop_assert_eq!(trace.fs_size, 1 + total);
        for i in 0..trace.z.len() {
            prop_assert!(trace.z[i] > i as u64);
            prop_assert_eq!(trace.y[i], trace.z[i] - (i as u64 + 1));
            let prefix = ScalarSet::from_dedup(trace.order[..i].to_vec()).unwrap();
            let fs_prefix = fs_set(&prefix, &cfg).unwrap();
            let cover = ap_cover_count(&fs_prefix, &trace.order[i]).unwrap();
            prop_assert_eq!(trace.z[i], cover);
        }
    }

    /// `|FS(λA)| = |FS(A)| = |FS(−A)|`, and dilation preserves the whole
    /// trace, not just the total.
    #[test]
    fn fs_size_is_dilation_and_negation_invariant(
        vals in proptest::collection::btree_set(1i64..=50, 1..=9),
        num in 1i64..=7,
        den in 1i64..=7,
    ) {
        let a = int_set(&vals);
        let cfg = FsConfig::default();
        let lam = rat(num, den);
        let dilated = a.map(|s| s.scale(&lam)).unwrap();
        let negated = a.map(|s| s.neg()).unwrap();
        let fs_a = fs_set(&a, &cfg).unwrap();
        prop_assert_eq!(fs_set(&dilated, &cfg).unwrap().len(), fs_a.len());
        prop_assert_eq!(fs_set(&negated, &cfg).unwrap().len(), fs_a.len());
        let t = incremental_trace(&a, &cfg).unwrap();
        let td = incremental_trace(&dilated, &cfg).unwrap();
        prop_assert_eq!(t.z, td.z);
    }

    /// One-step growth: adding a new largest element creates at least
    /// `|B| + 1` sums, with equality exactly in the characterised cases.
    #[test]
    fn growth_bound_holds_and_equality_is_characterised(
        vals in proptest::collection::btree_set(1i64..=30, 1..=7),
        step in 1i64..=15,
    ) {
        let b = int_set(&vals);
        let x = Scalar::from_int(vals.iter().max().unwrap() + step);
        let report = one_step_growth(&b, &x, &FsConfig::default()).unwrap();
        prop_assert!(report.delta >= report.lower_bound);
        prop_assert!(report.confirmed);
    }

    /// Fibers of the level map partition the box: per-level counts match
    /// direct enumeration and sum to the box volume, and the enumerated
    /// fibers agree pointwise.
    #[test]
    fn fibers_partition_the_box(
        signed in proptest::collection::vec((1i64..=4, proptest::bool::ANY), 1..=3),
        half_widths in proptest::collection::vec(0i64..=3, 1..=3),
    ) {
        let r = signed.len().min(half_widths.len());
        let lambda: Vec<i64> =
            signed[..r].iter().map(|&(l, neg)| if neg { -l } else { l }).collect();
        let intervals: Vec<(i64, i64)> =
            half_widths[..r].iter().map(|&w| (-w, w)).collect();

        // Direct enumeration of the box, grouped by level.
        let mut by_level: BTreeMap<i64, Vec<Vec<i64>>> = BTreeMap::new();
        let mut stack = vec![Vec::<i64>::new()];
        for &(lo, hi) in &intervals {
            let mut next = Vec::new();
            for partial in &stack {
                for x in lo..=hi {
                    let mut p = partial.clone();
                    p.push(x);
                    next.push(p);
                }
            }
            stack = next;
        }
        for p in stack {
            let level: i64 = lambda.iter().zip(&p).map(|(l, x)| l * x).sum();
            by_level.entry(level).or_default().push(p);
        }

        let volume: Int = intervals
            .iter()
            .map(|&(lo, hi)| Int::from(hi - lo + 1))
            .product();
        let mut covered = Int::zero();
        for (level, mut pts) in by_level {
            let slice = BoxSlice::new(lambda.clone(), intervals.clone(), level).unwrap();
            let count = fiber_count_exact(&slice);
            prop_assert_eq!(&count, &Int::from(pts.len() as u64));
            pts.sort();
            prop_assert_eq!(fiber_points(&slice).unwrap(), pts);
            covered += count;
        }
        prop_assert_eq!(covered, volume);
    }

    /// On carry-free (hence proper) rank-2 gaps, `values` enumerates
    /// exactly `box_volume` reals and lifting inverts projection.
    #[test]
    fn gap_lift_inverts_project_on_proper_gaps(
        d1 in 1i64..=4,
        s1 in 1u64..=3,
        s2 in 1u64..=3,
        extra in 1i64..=5,
    ) {
        let d2 = 2 * s1 as i64 * d1 + extra;
        let q = SymmetricGap::new(
            vec![Scalar::from_int(d1), Scalar::from_int(d2)],
            vec![s1, s2],
        )
        .unwrap();
        prop_assert!(q.is_proper());
        let values = q.values().unwrap();
        prop_assert_eq!(
            Int::from(values.len() as u64), q.box_volume(),
            "properness means distinct values"
        );
        let lifted = gap_lift(&q, &values).unwrap();
        prop_assert_eq!(lifted.len(), values.len());
        let back: Vec<Scalar> = lifted
            .iter()
            .map(|p| gap_project(&q, p).unwrap())
            .collect();
        prop_assert_eq!(&ScalarSet::from_dedup(back).unwrap(), &values);
    }

    /// Slicing a proper gap by a hyperplane keeps every sliced value
    /// covered by the reduced gap.
    #[test]
    fn slice_reduce_covers_the_sliced_values(
        d1 in 1i64..=3,
        s1 in 1u64..=3,
        s2 in 1u64..=3,
        extra in 1i64..=4,
        v1 in -2i64..=2,
        v2 in -2i64..=2,
    ) {
        prop_assume!(v1 != 0 || v2 != 0);
        let d2 = 2 * s1 as i64 * d1 + extra;
        let q = SymmetricGap::new(
            vec![Scalar::from_int(d1), Scalar::from_int(d2)],
            vec![s1, s2],
        )
        .unwrap();
        let v = vec![rat(v1, 1), rat(v2, 1)];
        // A permissive density floor: we test coverage, not density.
        let eta = Rat::new(Int::one(), Int::from(1000));
        let reduced = match slice_reduce(&q, &v, &eta) {
            Ok(r) => r,
            Err(Error::HypothesisFailed(_)) => return Ok(()), // sparse slice
            Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
        };
        prop_assert!(reduced.is_proper());
        prop_assert!(reduced.rank() < q.rank());
        let covered = reduced.values().unwrap();
        let (s1i, s2i) = (s1 as i64, s2 as i64);
        for x1 in -s1i..=s1i {
            for x2 in -s2i..=s2i {
                if v1 * x1 + v2 * x2 != 0 {
                    continue;
                }
                let val = Scalar::from_int(d1 * x1 + d2 * x2);
                prop_assert!(
                    covered.contains(&val),
                    "sliced value {} escaped the reduced gap", val
                );
            }
        }
    }

    /// The selected difference direction of a non-collinear planar set
    /// carries at most `n/2` collisions, and both endpoints belong to
    /// the set.
    #[test]
    fn ungar_pair_satisfies_the_collision_bound(
        coords in proptest::collection::btree_set((-4i64..=4, -4i64..=4), 3..=9)
    ) {
        let points: Vec<LatticePoint> = coords
            .iter()
            .map(|&(x, y)| LatticePoint::from_ints(&[x, y]))
            .collect();
        let a = PointSet::new(2, points).unwrap();
        match ungar_pair(&a) {
            Ok((p, q)) => {
                prop_assert!(a.contains(&p) && a.contains(&q));
                prop_assert!(p != q);
                let c = collision_count(&a, &p.sub(&q)).unwrap();
                prop_assert!(2 * c <= a.len() as u64);
            }
            Err(Error::CollinearInput) => {}
            Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
        }
    }

    /// `|FS(A)| ≥ |FS(A∖{a,b})| + |direction classes|` for the best pair.
    #[test]
    fn pair_removal_inequality_holds(
        coords in proptest::collection::btree_set((-4i64..=4, -4i64..=4), 3..=7)
    ) {
        let points: Vec<LatticePoint> = coords
            .iter()
            .map(|&(x, y)| LatticePoint::from_ints(&[x, y]))
            .collect();
        let a = PointSet::new(2, points).unwrap();
        let cert = pair_removal_certificate(&a, &FsConfig::default()).unwrap();
        prop_assert!(cert.holds, "lhs = {}, rhs = {}", cert.lhs, cert.rhs);
        let lhs_direct = fs_set_points(&a, &FsConfig::default()).unwrap().len();
        prop_assert_eq!(cert.lhs, lhs_direct);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// End-to-end: dense dilated near-intervals decompose into a verified
    /// partition whose checks all pass and whose generator divides `A1`.
    #[test]
    fn decompose_partitions_and_certifies_dense_dilated_sets(
        k in 14usize..=24,
        scale_num in 1i64..=5,
        scale_den in 1i64..=3,
        removals in proptest::collection::btree_set(4usize..=12, 0..=2),
    ) {
        let lam = rat(scale_num, scale_den);
        let elems: Vec<Scalar> = (1..=k)
            .filter(|i| !removals.contains(i))
            .map(|i| Scalar::from_int(i as i64).scale(&lam))
            .collect();
        let a = ScalarSet::from_dedup(elems).unwrap();
        let report = match decompose(&a, &rat(2, 1), &PipelineConfig::default()) {
            Ok(r) => r,
            // A near-interval is always within the C = 2 budget, so the
            // chain may stall only for structural reasons; surface those.
            Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
        };
        prop_assert_eq!(report.a1.union(&report.a2).unwrap(), a.clone());
        prop_assert_eq!(report.a1.len() + report.a2.len(), a.len());
        prop_assert!(report.checks.all());
        let fs_direct = fs_set(&a, &FsConfig::default()).unwrap().len();
        prop_assert_eq!(report.fs_size, fs_direct);
        // r·(positive integer) reproduces every element of A1.
        for x in report.a1.iter() {
            let q = fewsums::scalar::commensurability_ratio(x, &report.r)
                .unwrap()
                .expect("r generates A1");
            prop_assert!(q.is_integer() && q.is_positive());
        }
    }

    /// The local-to-global split partitions `R`, keeps only denominators
    /// dividing `D` in `R1`, and respects the exceptional-size budget.
    #[test]
    fn local_to_global_splits_are_certified_partitions(
        small in proptest::collection::btree_set((1i64..=40, 1i64..=4), 0..=5),
        big in proptest::collection::btree_set(2_000i64..=9_000, 0..=2),
    ) {
        let mut elems: Vec<Scalar> =
            small.iter().map(|&(n, d)| Scalar::Rational(rat(n, d))).collect();
        elems.extend(big.iter().map(|&v| Scalar::from_int(v)));
        let r = ScalarSet::from_dedup(elems).unwrap();
        prop_assume!(r.len() <= 10);
        let s = fs_set(&int_set(&(1..=14).collect()), &FsConfig::default()).unwrap();
        let n = 10u64;
        let eps = rat(1, 2);
        let c = rat(2, 1);
        match local_to_global(&r, &s, n, &eps, &c) {
            Ok(split) => {
                prop_assert_eq!(split.r1.union(&split.r2).unwrap(), r.clone());
                prop_assert_eq!(split.r1.len() + split.r2.len(), r.len());
                prop_assert!((split.r2.len() as u64) <= split.m + split.m * split.m);
                let d = split.d.clone();
                let threshold = Scalar::Rational(split.threshold.clone());
                let mut sum = Rat::zero();
                for x in split.r1.iter() {
                    let q = x.as_rational().unwrap();
                    prop_assert!((q * &d).is_integer(), "denominator of {} divides D = {}", x, d);
                    prop_assert!(
                        x.cmp_certified(&threshold).unwrap() == std::cmp::Ordering::Less
                    );
                    sum += q;
                }
                prop_assert_eq!(sum, split.r1_sum);
            }
            Err(Error::HypothesisFailed(_)) => {} // a refutation is a valid verdict
            Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
        }
    }
}
