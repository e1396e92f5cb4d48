//! Symmetric generalized arithmetic progressions (GAPs) and their exact
//! combinatorics: properness certificates, lifts and projections between a
//! GAP and its coordinate box, hyperplane slicing, iterative cleaning,
//! lattice fiber counts on box slices, and the rank-1 collapse test.
//!
//! A symmetric GAP of rank `r` is `Q = t₁·[−s₁,s₁] + ⋯ + t_r·[−s_r,s_r]`
//! with nonzero scalar differences `t_j` and positive integer half-sides
//! `s_j`.  `Q` is *proper* when the defining map `x ↦ Σ t_j x_j` is
//! injective on the box, i.e. `|Q| = Π (2s_j + 1)`.

use std::collections::HashMap;
use std::sync::Arc;

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::linalg::{express_in_row_basis, kernel_basis, row_lattice_basis, solve_in_box, solve_unique};
use crate::point::{LatticePoint, PointSet};
use crate::scalar::{group_generator, FormalBasis, Int, Rat, Scalar, ScalarSet};
use crate::stability::hyperplane_maximizer;

/// Hard cap on exact enumerations (box volumes, slice solution counts).
const ENUM_CAP: usize = 1 << 22;

/// The integer matrix `M` with `M·x = 0 ⇔ Σ_j x_j t_j = 0`: one row per
/// coordinate of the scalars' common domain (the constant followed by the
/// formal symbols), columns indexed by the differences, cleared of
/// denominators.  Also returns the domain basis and the common denominator.
pub(crate) type CoordinateMatrix = (Vec<Vec<Int>>, Option<Arc<FormalBasis>>, Int);

pub(crate) fn coordinate_matrix(diffs: &[Scalar]) -> Result<CoordinateMatrix> {
    let mut basis: Option<Arc<FormalBasis>> = None;
    for d in diffs {
        if let Some(b) = d.formal_basis() {
            match &basis {
                None => basis = Some(b.clone()),
                Some(prev) if prev == b => {}
                Some(_) => return Err(Error::DomainMismatch),
            }
        }
    }
    let blen = basis.as_ref().map(|b| b.len()).unwrap_or(0);
    let cols: Vec<Vec<Rat>> = diffs.iter().map(|d| d.coord_vector(blen)).collect();
    let mut den = Int::one();
    for col in &cols {
        for c in col {
            den = den.lcm(c.denom());
        }
    }
    let rows: Vec<Vec<Int>> = (0..=blen)
        .map(|k| {
            cols.iter()
                .map(|col| (&col[k] * Rat::from_integer(den.clone())).to_integer())
                .collect()
        })
        .collect();
    Ok((rows, basis, den))
}

/// Rebuilds a scalar from an integer coordinate row over the domain basis,
/// scaled down by `den`.
pub(crate) fn scalar_from_coords(
    basis: Option<&Arc<FormalBasis>>,
    coords: &[Int],
    den: &Int,
) -> Result<Scalar> {
    let unit = Rat::new(coords[0].clone(), den.clone());
    match basis {
        None => Ok(Scalar::Rational(unit)),
        Some(b) => {
            let cs: Vec<Rat> =
                coords[1..].iter().map(|c| Rat::new(c.clone(), den.clone())).collect();
            Scalar::formal(b, unit, cs)
        }
    }
}

/// A symmetric GAP with an exactly determined properness flag.
#[derive(Debug, Clone)]
pub struct SymmetricGap {
    diffs: Vec<Scalar>,
    half_sides: Vec<u64>,
    proper: bool,
}

impl SymmetricGap {
    /// Builds the GAP and decides properness exactly: by a ℚ-linear
    /// independence certificate when the differences admit no integer
    /// relation, by the primitive-relation box test when the relation
    /// lattice has rank 1, and by bounded enumeration otherwise
    /// ([`Error::CapacityExceeded`] when the double box is too large for
    /// that last resort).
    pub fn new(diffs: Vec<Scalar>, half_sides: Vec<u64>) -> Result<Self> {
        if diffs.is_empty() {
            return Err(Error::InvalidInput("a GAP has rank at least 1".into()));
        }
        if diffs.len() != half_sides.len() {
            return Err(Error::DimensionMismatch { expected: diffs.len(), got: half_sides.len() });
        }
        for d in &diffs {
            if d.is_zero() {
                return Err(Error::ZeroDifference);
            }
        }
        if half_sides.contains(&0) {
            return Err(Error::InvalidInput("half-sides must be positive".into()));
        }
        let proper = Self::decide_proper(&diffs, &half_sides)?;
        Ok(SymmetricGap { diffs, half_sides, proper })
    }

    fn decide_proper(diffs: &[Scalar], half_sides: &[u64]) -> Result<bool> {
        let (m, _, _) = coordinate_matrix(diffs)?;
        let r = diffs.len();
        let kernel = kernel_basis(&m, r);
        if kernel.is_empty() {
            return Ok(true);
        }
        // Properness ⇔ no nonzero relation vector in the double box
        // [−2s, 2s] (differences of two box points).
        let lo: Vec<i64> = half_sides.iter().map(|&s| -2 * s as i64).collect();
        let hi: Vec<i64> = half_sides.iter().map(|&s| 2 * s as i64).collect();
        if kernel.len() == 1 {
            // The basis row generates the whole relation lattice, so the
            // nonzero relations are its multiples; ±1 are the smallest.
            let inside = kernel[0]
                .iter()
                .zip(&hi)
                .all(|(c, &h)| c.abs() <= Int::from(h));
            return Ok(!inside);
        }
        let vol: Int = hi.iter().map(|&h| Int::from(2 * h + 1)).product();
        if vol > Int::from(ENUM_CAP as u64) {
            return Err(Error::CapacityExceeded(format!(
                "properness undecided: relation lattice of rank {} and double box of volume {vol}",
                kernel.len()
            )));
        }
        let zeros = vec![Int::zero(); m.len()];
        match solve_in_box(&m, &zeros, &lo, &hi, 1) {
            Ok(_) => Ok(true), // only the zero relation
            Err(Error::CapacityExceeded(_)) => Ok(false),
            Err(e) => Err(e),
        }
    }

    pub fn rank(&self) -> usize {
        self.diffs.len()
    }

    pub fn diffs(&self) -> &[Scalar] {
        &self.diffs
    }

    pub fn half_sides(&self) -> &[u64] {
        &self.half_sides
    }

    pub fn is_proper(&self) -> bool {
        self.proper
    }

    /// `Π (2s_j + 1)` — equals `|Q|` exactly when proper.
    pub fn box_volume(&self) -> Int {
        self.half_sides.iter().map(|&s| Int::from(2 * s + 1)).product()
    }

    pub fn in_box(&self, x: &LatticePoint) -> bool {
        x.dim() == self.rank()
            && x.coords()
                .iter()
                .zip(&self.half_sides)
                .all(|(c, &s)| c.abs() <= Int::from(s))
    }

    /// All values of the GAP, by enumeration (capped).
    pub fn values(&self) -> Result<ScalarSet> {
        let vol = self.box_volume();
        if vol > Int::from(ENUM_CAP as u64) {
            return Err(Error::CapacityExceeded(format!(
                "value enumeration over a box of volume {vol}"
            )));
        }
        let mut out: Vec<Scalar> = vec![Scalar::zero()];
        for (t, &s) in self.diffs.iter().zip(&self.half_sides) {
            let mut next = Vec::with_capacity(out.len() * (2 * s as usize + 1));
            for x in -(s as i64)..=s as i64 {
                let shift = t.scale(&Rat::from_integer(Int::from(x)));
                for v in &out {
                    next.push(v.add_same_domain(&shift));
                }
            }
            out = next;
        }
        ScalarSet::from_dedup(out)
    }
}

/// `π(x) = Σ t_j x_j` for a point of the box.
pub fn gap_project(q: &SymmetricGap, x: &LatticePoint) -> Result<Scalar> {
    if x.dim() != q.rank() {
        return Err(Error::DimensionMismatch { expected: q.rank(), got: x.dim() });
    }
    if !q.in_box(x) {
        return Err(Error::InvalidInput(format!("point {x} outside the box")));
    }
    let mut acc = Scalar::zero();
    for (t, c) in q.diffs.iter().zip(x.coords()) {
        acc = acc.add_same_domain(&t.scale(&Rat::from_integer(c.clone())));
    }
    Ok(acc)
}

/// The unique box preimage of one value of a proper GAP.
fn lift_value(
    q: &SymmetricGap,
    matrix: &[Vec<Int>],
    den: &Int,
    basis_len: usize,
    independent: bool,
    value: &Scalar,
) -> Result<LatticePoint> {
    if !q.diffs.iter().all(|t| t.same_domain(value)) {
        return Err(Error::DomainMismatch);
    }
    let coords = value.coord_vector(basis_len);
    // Integer targets D·coords; a fractional target has no integer preimage.
    let mut target = Vec::with_capacity(coords.len());
    for c in &coords {
        let scaled = c * Rat::from_integer(den.clone());
        if !scaled.is_integer() {
            return Err(Error::NotInGap(format!("{value} is not a lattice value of the GAP")));
        }
        target.push(scaled.to_integer());
    }
    if independent {
        // Unique rational solution, then integrality and box membership.
        let a: Vec<Vec<Rat>> =
            matrix.iter().map(|row| row.iter().map(|c| Rat::from_integer(c.clone())).collect()).collect();
        let b: Vec<Rat> = target.iter().map(|c| Rat::from_integer(c.clone())).collect();
        let x = solve_unique(&a, &b)
            .ok_or_else(|| Error::NotInGap(format!("{value} is outside the GAP's span")))?;
        let mut point = Vec::with_capacity(x.len());
        for (c, &s) in x.iter().zip(&q.half_sides) {
            if !c.is_integer() || c.to_integer().abs() > Int::from(s) {
                return Err(Error::NotInGap(format!("{value} has no box preimage")));
            }
            point.push(c.to_integer());
        }
        return Ok(LatticePoint::new(point));
    }
    let lo: Vec<i64> = q.half_sides.iter().map(|&s| -(s as i64)).collect();
    let hi: Vec<i64> = q.half_sides.iter().map(|&s| s as i64).collect();
    // Properness guarantees at most one solution; cap 2 is never exceeded.
    let sols = solve_in_box(matrix, &target, &lo, &hi, 2)?;
    match sols.len() {
        0 => Err(Error::NotInGap(format!("{value} has no box preimage"))),
        1 => Ok(LatticePoint::from_ints(&sols[0])),
        _ => unreachable!("proper GAPs have unique preimages"),
    }
}

/// Lifts each value of `r` to its unique preimage in the box of a proper
/// GAP.
pub fn gap_lift(q: &SymmetricGap, r: &ScalarSet) -> Result<PointSet> {
    if !q.is_proper() {
        return Err(Error::InvalidInput("lift requires a proper GAP".into()));
    }
    let (matrix, basis, den) = coordinate_matrix(&q.diffs)?;
    let basis_len = basis.as_ref().map(|b| b.len()).unwrap_or(0);
    let independent = kernel_basis(&matrix, q.rank()).is_empty();
    let mut points = Vec::with_capacity(r.len());
    for v in r.iter() {
        points.push(lift_value(q, &matrix, &den, basis_len, independent, v)?);
    }
    PointSet::new(q.rank(), points)
}

/// Scales a rational vector to a primitive integer vector.
fn integerize(v: &[Rat]) -> Vec<Int> {
    let mut den = Int::one();
    for c in v {
        den = den.lcm(c.denom());
    }
    let mut out: Vec<Int> =
        v.iter().map(|c| (c * Rat::from_integer(den.clone())).to_integer()).collect();
    let mut g = Int::zero();
    for c in &out {
        g = num_integer::gcd(g.clone(), c.clone());
    }
    if !g.is_zero() && !g.is_one() {
        for c in &mut out {
            *c = &*c / &g;
        }
    }
    out
}

/// Slices a proper GAP along the hyperplane `V = {x : Σ v_j x_j = 0}` and
/// returns a proper GAP `Q′` of strictly smaller rank with
/// `π(box ∩ V) ⊆ Q′`.
///
/// Requires the slice to be `eta`-dense in the box
/// ([`Error::HypothesisFailed`] otherwise).  The construction enumerates
/// the solution set `W` over the support of `v`, takes a lattice basis of
/// the module it spans, bounds the expansion coefficients of `W` in that
/// basis, and finally re-boxes everything over a lattice basis of the
/// module generated by the new differences — which is proper by
/// construction (its differences are ℚ-linearly independent).
pub fn slice_reduce(q: &SymmetricGap, v: &[Rat], eta: &Rat) -> Result<SymmetricGap> {
    let r = q.rank();
    if r < 2 {
        return Err(Error::InvalidInput("slicing needs rank at least 2".into()));
    }
    if !q.is_proper() {
        return Err(Error::InvalidInput("slicing requires a proper GAP".into()));
    }
    if v.len() != r {
        return Err(Error::DimensionMismatch { expected: r, got: v.len() });
    }
    if v.iter().all(|c| c.is_zero()) {
        return Err(Error::ZeroDirection);
    }
    let zero = Rat::from_integer(Int::zero());
    let one = Rat::from_integer(Int::one());
    if !(eta > &zero && eta <= &one) {
        return Err(Error::InvalidInput("eta must satisfy 0 < eta ≤ 1".into()));
    }

    let lambda = integerize(v);
    let support: Vec<usize> = (0..r).filter(|&j| !lambda[j].is_zero()).collect();

    // Density check: |box ∩ V| = (solutions over the support) × (untouched
    // box sides).
    let s_of = |j: usize| q.half_sides[j];
    let slice = BoxSlice::new(
        support.iter().map(|&j| lambda[j].to_i64().ok_or_else(|| {
            Error::CapacityExceeded("slice normal exceeds i64".into())
        })).collect::<Result<Vec<i64>>>()?,
        support.iter().map(|&j| (-(s_of(j) as i64), s_of(j) as i64)).collect(),
        0,
    )?;
    let mut on_plane = fiber_count_exact(&slice);
    for j in 0..r {
        if !support.contains(&j) {
            on_plane *= Int::from(2 * s_of(j) + 1);
        }
    }
    let density = Rat::new(on_plane.clone(), q.box_volume());
    if &density < eta {
        return Err(Error::HypothesisFailed(format!(
            "slice density {density} is below eta = {eta}"
        )));
    }

    // Enumerate W = box_J ∩ {Σ λ_j x_j = 0} and take a lattice basis of its
    // span.
    let row: Vec<Vec<Int>> = vec![support.iter().map(|&j| lambda[j].clone()).collect()];
    let lo: Vec<i64> = support.iter().map(|&j| -(s_of(j) as i64)).collect();
    let hi: Vec<i64> = support.iter().map(|&j| s_of(j) as i64).collect();
    let w = solve_in_box(&row, &[Int::zero()], &lo, &hi, ENUM_CAP)?;
    let w_rows: Vec<Vec<Int>> =
        w.iter().map(|x| x.iter().map(|&c| Int::from(c)).collect()).collect();
    let basis = row_lattice_basis(w_rows.clone());

    // Expansion bound: every element of W written in the basis.
    let mut sigma = vec![Int::zero(); basis.len()];
    for x in &w_rows {
        let c = express_in_row_basis(&basis, x)
            .expect("W lies in the span of its own lattice basis");
        for (slot, coeff) in sigma.iter_mut().zip(&c) {
            debug_assert!(coeff.is_integer());
            let a = coeff.to_integer().abs();
            if a > *slot {
                *slot = a;
            }
        }
    }

    // Candidate differences: projections of the basis rows, plus the
    // untouched coordinates.
    let mut cand_diffs: Vec<Scalar> = Vec::new();
    let mut cand_sides: Vec<Int> = Vec::new();
    for (b, s) in basis.iter().zip(&sigma) {
        let mut d = Scalar::zero();
        for (k, &j) in support.iter().enumerate() {
            d = d.add_same_domain(&q.diffs[j].scale(&Rat::from_integer(b[k].clone())));
        }
        if !d.is_zero() && !s.is_zero() {
            cand_diffs.push(d);
            cand_sides.push(s.clone());
        }
    }
    for j in 0..r {
        if !support.contains(&j) {
            cand_diffs.push(q.diffs[j].clone());
            cand_sides.push(Int::from(s_of(j)));
        }
    }

    if cand_diffs.is_empty() {
        // π(box ∩ V) = {0}: any rank-1 GAP contains it.
        return SymmetricGap::new(vec![q.diffs[0].clone()], vec![1]);
    }

    // Re-box over a lattice basis of the module generated by the candidate
    // differences; the result is proper because its differences are
    // ℚ-linearly independent.
    let (matrix, domain_basis, den) = coordinate_matrix(&cand_diffs)?;
    let ncoords = matrix.len();
    let diff_rows: Vec<Vec<Int>> = (0..cand_diffs.len())
        .map(|i| (0..ncoords).map(|k| matrix[k][i].clone()).collect())
        .collect();
    let module = row_lattice_basis(diff_rows.clone());
    let mut new_sides = vec![Int::zero(); module.len()];
    for (row, s) in diff_rows.iter().zip(&cand_sides) {
        let c = express_in_row_basis(&module, row)
            .expect("differences lie in their own module");
        for (slot, coeff) in new_sides.iter_mut().zip(&c) {
            debug_assert!(coeff.is_integer());
            *slot += coeff.to_integer().abs() * s;
        }
    }
    let mut new_diffs = Vec::with_capacity(module.len());
    for row in &module {
        new_diffs.push(scalar_from_coords(domain_basis.as_ref(), row, &den)?);
    }
    let sides: Vec<u64> = new_sides
        .iter()
        .map(|s| {
            s.to_u64().ok_or_else(|| Error::CapacityExceeded("re-boxed side exceeds u64".into()))
        })
        .collect::<Result<Vec<u64>>>()?;
    let out = SymmetricGap::new(new_diffs, sides)?;
    debug_assert!(out.is_proper());
    debug_assert!(out.rank() < r);
    Ok(out)
}

/// Result of iterative cleaning.
#[derive(Debug, Clone)]
pub struct CleanOutcome {
    pub b_prime: ScalarSet,
    pub q_prime: SymmetricGap,
    /// `|B′| / |B|` actually achieved.
    pub realized_keep: Rat,
    /// Slicing rounds performed.
    pub rounds: u32,
}

/// Shrinks `(B, Q)` to `(B′, Q′)` with `B′ ⊆ B ⊆ Q`, `Q′` proper of rank
/// `≤ rank Q`, `B′ ⊆ Q′`, and no proper subspace of the lift containing
/// more than `(1 − eps)·|B′| + 1 lifted points.
///
/// Each round lifts `B`, finds the subspace maximizer; if it exceeds the
/// threshold, keeps the points on the maximizing hyperplane and slices `Q`
/// along it.  The rank strictly decreases each round, and rank 1 always
/// satisfies the condition, so the loop terminates without error.
pub fn clean(q: &SymmetricGap, b: &ScalarSet, eps: &Rat) -> Result<CleanOutcome> {
    let zero = Rat::from_integer(Int::zero());
    let one = Rat::from_integer(Int::one());
    if !(eps > &zero && eps < &one) {
        return Err(Error::InvalidInput("eps must satisfy 0 < eps < 1".into()));
    }
    if !q.is_proper() {
        return Err(Error::InvalidInput("cleaning requires a proper GAP".into()));
    }
    let original = b.len();
    let mut cur_b = b.clone();
    let mut cur_q = q.clone();
    let mut rounds = 0u32;
    loop {
        // Pair every value with its lift explicitly (the set types sort by
        // value and by point respectively, so their orders differ).
        let (matrix, basis, den) = coordinate_matrix(cur_q.diffs())?;
        let blen = basis.as_ref().map(|b| b.len()).unwrap_or(0);
        let independent = kernel_basis(&matrix, cur_q.rank()).is_empty();
        let mut pairs = Vec::with_capacity(cur_b.len());
        for v in cur_b.iter() {
            let p = lift_value(&cur_q, &matrix, &den, blen, independent, v)?;
            pairs.push((v.clone(), p));
        }
        let rows: Vec<Vec<Int>> = pairs.iter().map(|(_, p)| p.coords().to_vec()).collect();
        let (normal, count) = hyperplane_maximizer(&rows, cur_q.rank());
        let threshold = (&one - eps) * Rat::from_integer(Int::from(cur_b.len() as u64)) + &one;
        if Rat::from_integer(Int::from(count)) <= threshold {
            break;
        }
        // Keep the elements on the maximizing hyperplane.
        let mut kept = Vec::new();
        for (value, point) in &pairs {
            let dot: Int = point.coords().iter().zip(&normal).map(|(a, b)| a * b).sum();
            if dot.is_zero() {
                kept.push(value.clone());
            }
        }
        debug_assert_eq!(kept.len() as u64, count);
        // Slice along the hyperplane at its realized density.
        let v: Vec<Rat> = normal.iter().map(|c| Rat::from_integer(c.clone())).collect();
        let density = realized_density(&cur_q, &v)?;
        cur_q = slice_reduce(&cur_q, &v, &density)?;
        cur_b = ScalarSet::from_dedup(kept)?;
        rounds += 1;
    }
    let realized_keep = if original == 0 {
        one
    } else {
        Rat::new(Int::from(cur_b.len() as u64), Int::from(original as u64))
    };
    Ok(CleanOutcome { b_prime: cur_b, q_prime: cur_q, realized_keep, rounds })
}

/// `|box ∩ {Σ v_j x_j = 0}| / |box|`, exactly.
fn realized_density(q: &SymmetricGap, v: &[Rat]) -> Result<Rat> {
    let lambda = integerize(v);
    let support: Vec<usize> = (0..q.rank()).filter(|&j| !lambda[j].is_zero()).collect();
    let slice = BoxSlice::new(
        support
            .iter()
            .map(|&j| {
                lambda[j]
                    .to_i64()
                    .ok_or_else(|| Error::CapacityExceeded("slice normal exceeds i64".into()))
            })
            .collect::<Result<Vec<i64>>>()?,
        support
            .iter()
            .map(|&j| (-(q.half_sides[j] as i64), q.half_sides[j] as i64))
            .collect(),
        0,
    )?;
    let mut on_plane = fiber_count_exact(&slice);
    for j in 0..q.rank() {
        if !support.contains(&j) {
            on_plane *= Int::from(2 * q.half_sides[j] + 1);
        }
    }
    Ok(Rat::new(on_plane, q.box_volume()))
}

/// A fiber `{x ∈ I₁×⋯×I_r : Σ λ_j x_j = level}` of a box under an integer
/// linear form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoxSlice {
    lambda: Vec<i64>,
    intervals: Vec<(i64, i64)>,
    level: i64,
}

impl BoxSlice {
    pub fn new(lambda: Vec<i64>, intervals: Vec<(i64, i64)>, level: i64) -> Result<Self> {
        if lambda.is_empty() || lambda.len() != intervals.len() {
            return Err(Error::DimensionMismatch { expected: lambda.len(), got: intervals.len() });
        }
        if lambda.contains(&0) {
            return Err(Error::InvalidInput("slice coefficients must be nonzero".into()));
        }
        if intervals.iter().any(|&(lo, hi)| lo > hi) {
            return Err(Error::InvalidInput("empty interval in a box slice".into()));
        }
        Ok(BoxSlice { lambda, intervals, level })
    }

    pub fn rank(&self) -> usize {
        self.lambda.len()
    }

    pub fn lambda(&self) -> &[i64] {
        &self.lambda
    }

    pub fn intervals(&self) -> &[(i64, i64)] {
        &self.intervals
    }

    pub fn level(&self) -> i64 {
        self.level
    }

    /// Number of integer points of `I_j`.
    pub fn sizes(&self) -> Vec<u64> {
        self.intervals.iter().map(|&(lo, hi)| (hi - lo + 1) as u64).collect()
    }
}

/// Exact fiber count by dynamic programming over the coordinates.
pub fn fiber_count_exact(slice: &BoxSlice) -> Int {
    let mut dp: HashMap<i128, Int> = HashMap::new();
    dp.insert(0, Int::one());
    for (&l, &(lo, hi)) in slice.lambda.iter().zip(&slice.intervals) {
        let mut next: HashMap<i128, Int> = HashMap::with_capacity(dp.len());
        for (&sum, count) in &dp {
            for x in lo..=hi {
                let key = sum + (l as i128) * (x as i128);
                *next.entry(key).or_insert_with(Int::zero) += count;
            }
        }
        dp = next;
    }
    dp.remove(&(slice.level as i128)).unwrap_or_else(Int::zero)
}

/// All fiber points, lexicographically sorted (enumeration, capped).
pub fn fiber_points(slice: &BoxSlice) -> Result<Vec<Vec<i64>>> {
    let row: Vec<Vec<Int>> = vec![slice.lambda.iter().map(|&c| Int::from(c)).collect()];
    let lo: Vec<i64> = slice.intervals.iter().map(|&(lo, _)| lo).collect();
    let hi: Vec<i64> = slice.intervals.iter().map(|&(_, hi)| hi).collect();
    let mut pts = solve_in_box(&row, &[Int::from(slice.level)], &lo, &hi, ENUM_CAP)?;
    pts.sort();
    Ok(pts)
}

/// Affine dimension of the fiber (`None` when empty).
pub fn fiber_affine_dim(slice: &BoxSlice) -> Result<Option<usize>> {
    let pts = fiber_points(slice)?;
    let Some(base) = pts.first() else { return Ok(None) };
    let rows: Vec<Vec<Int>> = pts[1..]
        .iter()
        .map(|p| p.iter().zip(base).map(|(&a, &b)| Int::from(a - b)).collect())
        .collect();
    Ok(Some(crate::linalg::rank_int(&rows)))
}

/// The two explicit fiber bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberBounds {
    /// `Π|I_j| / (max_j|I_j| · min_j|I_j|)` — valid when the fiber's affine
    /// dimension is at most `r − 2`; absent otherwise.
    pub part1: Option<Rat>,
    /// `(r−1)!·Π|I_j| / max_j(|λ_j|·|I_j|) + (r−1)` — valid when
    /// `gcd(λ) = 1`; absent otherwise.
    pub part2: Option<Rat>,
}

/// Evaluates the explicit fiber-count bounds for a slice whose affine
/// dimension is known.
pub fn fiber_upper_bounds(slice: &BoxSlice, affine_dim: usize) -> FiberBounds {
    let r = slice.rank();
    let sizes = slice.sizes();
    let product: Int = sizes.iter().map(|&s| Int::from(s)).product();

    let part1 = if affine_dim + 2 <= r {
        let max = *sizes.iter().max().expect("rank ≥ 1");
        let min = *sizes.iter().min().expect("rank ≥ 1");
        Some(Rat::new(product.clone(), Int::from(max) * Int::from(min)))
    } else {
        None
    };

    let gcd = slice.lambda.iter().fold(0i64, |g, &c| num_integer::gcd(g, c.abs()));
    let part2 = if gcd == 1 {
        let mut fact = Int::one();
        for k in 2..r {
            fact *= Int::from(k as u64);
        }
        let weighted_max = slice
            .lambda
            .iter()
            .zip(&sizes)
            .map(|(&l, &s)| Int::from(l.unsigned_abs()) * Int::from(s))
            .max()
            .expect("rank ≥ 1");
        Some(
            Rat::new(fact * product, weighted_max)
                + Rat::from_integer(Int::from((r - 1) as u64)),
        )
    } else {
        None
    };

    FiberBounds { part1, part2 }
}

/// Certificate that all differences live in one cyclic group `a·ℤ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneCollapse {
    /// The positive generator.
    pub a: Scalar,
    /// `t_j = a·λ_j` with `gcd(λ) = 1`.
    pub lambda: Vec<Int>,
    /// `max_j |λ_j|·|I_j|` — for the caller to compare against its budget.
    pub max_product: Int,
}

/// Tests whether the differences `t` are commensurable, and if so returns
/// the generator, the coprime integer multipliers, and the size statistic
/// `max_j |λ_j|·|I_j|`.  Returns `Ok(None)` when some ratio is irrational.
pub fn collapse_to_rank_one(
    t: &[Scalar],
    intervals: &[(i64, i64)],
) -> Result<Option<RankOneCollapse>> {
    if t.is_empty() {
        return Err(Error::InvalidInput("collapse needs at least one difference".into()));
    }
    if t.len() != intervals.len() {
        return Err(Error::DimensionMismatch { expected: t.len(), got: intervals.len() });
    }
    if t.iter().any(|x| x.is_zero()) {
        return Err(Error::ZeroDifference);
    }
    if intervals.iter().any(|&(lo, hi)| lo > hi) {
        return Err(Error::InvalidInput("empty interval".into()));
    }
    let Some(a) = group_generator(t)? else { return Ok(None) };
    let mut lambda = Vec::with_capacity(t.len());
    for x in t {
        let q = match (x, &a) {
            (Scalar::Rational(xr), Scalar::Rational(ar)) => xr / ar,
            _ => {
                // Commensurable formals: the ratio is rational.
                crate::scalar::commensurability_ratio(x, &a)?
                    .expect("generator divides every element")
            }
        };
        debug_assert!(q.is_integer());
        lambda.push(q.to_integer());
    }
    let max_product = lambda
        .iter()
        .zip(intervals)
        .map(|(l, &(lo, hi))| l.abs() * Int::from(hi - lo + 1))
        .max()
        .expect("nonempty");
    Ok(Some(RankOneCollapse { a, lambda, max_product }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    fn ints(vals: &[i64]) -> Vec<Scalar> {
        vals.iter().map(|&v| Scalar::from_int(v)).collect()
    }

    fn formal_alpha() -> Scalar {
        let b = FormalBasis::new(vec!["a".into()], vec![rat(577, 408)], vec![rat(1, 1_000_000)])
            .unwrap();
        Scalar::formal(&b, rat(0, 1), vec![rat(1, 1)]).unwrap()
    }

    #[test]
    fn properness_examples() {
        let q = SymmetricGap::new(ints(&[1, 10]), vec![2, 2]).unwrap();
        assert!(q.is_proper());
        assert_eq!(q.values().unwrap().len(), 25);

        let q = SymmetricGap::new(ints(&[1, 2]), vec![2, 2]).unwrap();
        assert!(!q.is_proper());
        assert!(q.values().unwrap().len() < 25);

        let q = SymmetricGap::new(ints(&[7]), vec![100]).unwrap();
        assert!(q.is_proper());

        // Independence certificate: no enumeration even for huge sides.
        let q = SymmetricGap::new(vec![Scalar::one(), formal_alpha()], vec![1 << 40, 1 << 40])
            .unwrap();
        assert!(q.is_proper());

        // Rank-2 relation lattice, small box: exact enumeration.
        let q = SymmetricGap::new(ints(&[1, 2, 3]), vec![1, 1, 1]).unwrap();
        assert!(!q.is_proper());

        // Rank-2 relation lattice, huge box: undecided.
        assert!(matches!(
            SymmetricGap::new(ints(&[1, 2, 3]), vec![1 << 20, 1 << 20, 1 << 20]),
            Err(Error::CapacityExceeded(_))
        ));

        assert_eq!(
            SymmetricGap::new(ints(&[1, 0]), vec![1, 1]).unwrap_err(),
            Error::ZeroDifference
        );
    }

    #[test]
    fn volume_counts_values_when_proper() {
        for (diffs, sides) in [
            (ints(&[3, 40]), vec![3u64, 2]),
            (ints(&[5]), vec![7]),
            (vec![Scalar::parse_rational("1/3").unwrap(), Scalar::from_int(7)], vec![2, 2]),
        ] {
            let q = SymmetricGap::new(diffs, sides).unwrap();
            assert!(q.is_proper());
            assert_eq!(Int::from(q.values().unwrap().len() as u64), q.box_volume());
        }
    }

    #[test]
    fn project_and_lift_examples() {
        let q = SymmetricGap::new(ints(&[1, 10]), vec![2, 2]).unwrap();
        let x = LatticePoint::from_ints(&[2, -1]);
        assert_eq!(gap_project(&q, &x).unwrap(), Scalar::from_int(-8));

        let lifted = gap_lift(&q, &ScalarSet::from_ints(&[-8]).unwrap()).unwrap();
        assert_eq!(lifted.points(), &[LatticePoint::from_ints(&[2, -1])]);

        assert!(matches!(
            gap_lift(&q, &ScalarSet::from_ints(&[100]).unwrap()),
            Err(Error::NotInGap(_))
        ));

        // Out-of-box projection is rejected.
        assert!(gap_project(&q, &LatticePoint::from_ints(&[3, 0])).is_err());

        // Round trip over all values (as sets: point order is lexicographic,
        // value order is by magnitude).
        let values = q.values().unwrap();
        let lift = gap_lift(&q, &values).unwrap();
        assert_eq!(lift.points().len(), values.len());
        let back: Vec<Scalar> = lift.iter().map(|p| gap_project(&q, p).unwrap()).collect();
        assert_eq!(ScalarSet::from_dedup(back).unwrap(), values);
    }

    #[test]
    fn lift_in_dependent_proper_gap() {
        // (1, 10) with sides (2, 2) has a relation (10, −1) outside the
        // double box; the solver path must still find unique preimages.
        let q = SymmetricGap::new(ints(&[1, 10]), vec![4, 2]).unwrap();
        assert!(q.is_proper());
        let lifted = gap_lift(&q, &ScalarSet::from_ints(&[-8, 0, 24]).unwrap()).unwrap();
        assert_eq!(
            lifted.points(),
            &[
                LatticePoint::from_ints(&[0, 0]),
                LatticePoint::from_ints(&[2, -1]),
                LatticePoint::from_ints(&[4, 2]),
            ]
        );
    }

    #[test]
    fn slice_reduce_examples() {
        // v = (1, −1): W = {(x,x) : |x| ≤ 2}, basis (1,1) → difference
        // t₁ + t₂ with half-side 2.
        let q = SymmetricGap::new(ints(&[1, 10]), vec![2, 2]).unwrap();
        let qp = slice_reduce(&q, &[rat(1, 1), rat(-1, 1)], &rat(1, 5)).unwrap();
        assert!(qp.is_proper());
        assert_eq!(qp.rank(), 1);
        assert_eq!(qp.diffs(), &[Scalar::from_int(11)]);
        assert_eq!(qp.half_sides(), &[2]);

        // v = (1, −2): W = {(0,0), ±(2,1)}, basis (2,1) → difference
        // 2t₁ + t₂ with half-side 1.
        let qp = slice_reduce(&q, &[rat(1, 1), rat(-2, 1)], &rat(1, 25)).unwrap();
        assert_eq!(qp.rank(), 1);
        assert_eq!(qp.diffs(), &[Scalar::from_int(12)]);
        assert_eq!(qp.half_sides(), &[1]);

        // Sparse direction on a long side: density too small.
        let q = SymmetricGap::new(ints(&[1, 1000]), vec![50, 2]).unwrap();
        assert!(matches!(
            slice_reduce(&q, &[rat(1, 1), rat(0, 1)], &rat(1, 5)),
            Err(Error::HypothesisFailed(_))
        ));
    }

    #[test]
    fn slice_reduce_covers_the_plane_section() {
        let q = SymmetricGap::new(ints(&[1, 10, 200]), vec![2, 2, 1]).unwrap();
        assert!(q.is_proper());
        let v = [rat(1, 1), rat(-1, 1), rat(0, 1)];
        let qp = slice_reduce(&q, &v, &rat(1, 25)).unwrap();
        assert!(qp.is_proper());
        assert!(qp.rank() < 3);
        let values = qp.values().unwrap();
        // Enumerate box ∩ V directly and check the projection is covered.
        for x in -2i64..=2 {
            for z in -1i64..=1 {
                let val = Scalar::from_int(x + 10 * x + 200 * z);
                assert!(values.contains(&val), "π({x},{x},{z}) = {val} not covered");
            }
        }
    }

    #[test]
    fn clean_examples() {
        let q = SymmetricGap::new(ints(&[1, 10]), vec![2, 2]).unwrap();
        let eps = rat(1, 2);

        // Axis slice: one slicing round to a rank-1 GAP containing B.
        let b = ScalarSet::from_ints(&[-2, -1, 0, 1, 2]).unwrap();
        let out = clean(&q, &b, &eps).unwrap();
        assert_eq!(out.q_prime.rank(), 1);
        assert_eq!(out.b_prime, b);
        assert_eq!(out.rounds, 1);
        assert_eq!(out.realized_keep, rat(1, 1));
        // B′ still lifts into Q′.
        assert!(gap_lift(&out.q_prime, &out.b_prime).is_ok());

        // Spread-out B: already robust, unchanged.
        let b = q.values().unwrap();
        let out = clean(&q, &b, &eps).unwrap();
        assert_eq!(out.rounds, 0);
        assert_eq!(out.q_prime.rank(), 2);
        assert_eq!(out.b_prime.len(), 25);

        // Axis slice plus one off-hyperplane point: the point is dropped.
        let b = ScalarSet::from_ints(&[-2, -1, 0, 1, 2, 10]).unwrap();
        let out = clean(&q, &b, &eps).unwrap();
        assert_eq!(out.b_prime, ScalarSet::from_ints(&[-2, -1, 0, 1, 2]).unwrap());
        assert_eq!(out.q_prime.rank(), 1);
        assert_eq!(out.realized_keep, rat(5, 6));
    }

    #[test]
    fn clean_output_satisfies_the_subspace_condition() {
        let q = SymmetricGap::new(ints(&[1, 10]), vec![2, 2]).unwrap();
        let eps = rat(51, 100);
        for b_vals in [
            vec![-2i64, -1, 0, 1, 2, 10],
            vec![0, 1, 10, 11, 21],
            vec![-12, -11, 0, 11, 12],
        ] {
            let b = ScalarSet::from_ints(&b_vals).unwrap();
            let out = clean(&q, &b, &eps).unwrap();
            let lift = gap_lift(&out.q_prime, &out.b_prime).unwrap();
            let rows: Vec<Vec<Int>> = lift.iter().map(|p| p.coords().to_vec()).collect();
            let (_, count) = hyperplane_maximizer(&rows, out.q_prime.rank());
            let threshold = (rat(1, 1) - &eps)
                * Rat::from_integer(Int::from(out.b_prime.len() as u64))
                + rat(1, 1);
            assert!(
                Rat::from_integer(Int::from(count)) <= threshold,
                "B={b_vals:?}: count {count} over threshold {threshold}"
            );
        }
    }

    #[test]
    fn fiber_count_examples() {
        let s = BoxSlice::new(vec![1, 1], vec![(0, 2), (0, 2)], 2).unwrap();
        assert_eq!(fiber_count_exact(&s), Int::from(3));

        let s = BoxSlice::new(vec![2, 3], vec![(0, 6), (0, 4)], 12).unwrap();
        assert_eq!(fiber_count_exact(&s), Int::from(3));
        assert_eq!(
            fiber_points(&s).unwrap(),
            vec![vec![0, 4], vec![3, 2], vec![6, 0]]
        );

        let s = BoxSlice::new(vec![1, 1], vec![(0, 2), (0, 2)], 100).unwrap();
        assert_eq!(fiber_count_exact(&s), Int::zero());

        // Σ over levels = box volume.
        let slice = |lvl| BoxSlice::new(vec![2, 3], vec![(0, 6), (0, 4)], lvl).unwrap();
        let total: Int = (0..=26).map(|lvl| fiber_count_exact(&slice(lvl))).sum();
        assert_eq!(total, Int::from(35));
    }

    #[test]
    fn fiber_bound_examples() {
        // Part (1): sizes (7,5,3) → 105/21 = 5.
        let s = BoxSlice::new(vec![1, 1, 1], vec![(0, 6), (0, 4), (0, 2)], 3).unwrap();
        let b = fiber_upper_bounds(&s, 1);
        assert_eq!(b.part1, Some(rat(5, 1)));

        // Part (2): λ=(2,3), sizes (7,5) → 35/15 + 1 = 10/3; exact 3 ≤ bound.
        let s = BoxSlice::new(vec![2, 3], vec![(0, 6), (0, 4)], 12).unwrap();
        let b = fiber_upper_bounds(&s, 1);
        assert_eq!(b.part1, None, "affine dim 1 is not ≤ r−2 = 0");
        assert_eq!(b.part2, Some(rat(10, 3)));
        assert!(Rat::from_integer(fiber_count_exact(&s)) <= b.part2.unwrap());

        // r = 1, λ = (1): bound 1.
        let s = BoxSlice::new(vec![1], vec![(-5, 5)], 3).unwrap();
        assert_eq!(fiber_upper_bounds(&s, 0).part2, Some(rat(1, 1)));

        // Non-primitive λ: part (2) absent.
        let s = BoxSlice::new(vec![2, 4], vec![(0, 6), (0, 4)], 8).unwrap();
        assert_eq!(fiber_upper_bounds(&s, 1).part2, None);
    }

    #[test]
    fn collapse_examples() {
        let t = vec![Scalar::parse_rational("3/2").unwrap(), Scalar::parse_rational("9/4").unwrap()];
        let c = collapse_to_rank_one(&t, &[(0, 6), (0, 4)]).unwrap().unwrap();
        assert_eq!(c.a, Scalar::parse_rational("3/4").unwrap());
        assert_eq!(c.lambda, vec![Int::from(2), Int::from(3)]);
        assert_eq!(c.max_product, Int::from(15));

        let t = vec![Scalar::one(), formal_alpha()];
        assert_eq!(collapse_to_rank_one(&t, &[(0, 1), (0, 1)]).unwrap(), None);

        let c = collapse_to_rank_one(&[Scalar::from_int(5)], &[(0, 9)])
            .unwrap()
            .unwrap();
        assert_eq!(c.a, Scalar::from_int(5));
        assert_eq!(c.lambda, vec![Int::one()]);
        assert_eq!(c.max_product, Int::from(10));

        assert_eq!(
            collapse_to_rank_one(&[Scalar::zero()], &[(0, 1)]).unwrap_err(),
            Error::ZeroDifference
        );
    }
}
