//! Subset-sum sets and their incremental growth statistics.
//!
//! The central identity is `FS(A ∪ {x}) = FS(A) ∪ (x + FS(A))`, which turns
//! the 2^n-subset definition into n set unions.  [`fs_set`] picks one of
//! three exact representations:
//!
//! * a dense bit vector when `A ⊂ ℤ_{>0}` and `Σ A` is under the configured
//!   cap — one bit per value of `[0, Σ A]`;
//! * a sorted deduplicated `i64` list (with a rational scale factor) when all
//!   elements are rational and the scaled values fit;
//! * a sorted deduplicated [`Scalar`] list otherwise (formal elements).
//!
//! All three produce identical set semantics, and the test suite compares
//! them against each other and against direct 2^n enumeration.

use std::collections::HashSet;

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive};

use crate::error::{Error, Result};
use crate::point::{LatticePoint, PointSet};
use crate::scalar::{Int, Rat, Scalar, ScalarSet};

/// Resource caps for subset-sum computations.
#[derive(Debug, Clone)]
pub struct FsConfig {
    /// Largest `Σ A` for which the dense bit-vector path may engage.
    pub dense_sum_cap: u64,
    /// Largest cardinality a set-based representation may reach.
    pub max_set_len: usize,
}

impl Default for FsConfig {
    fn default() -> Self {
        FsConfig { dense_sum_cap: 1 << 31, max_set_len: 1 << 22 }
    }
}

#[derive(Debug, Clone)]
enum Repr {
    /// Bit `v` set ⇔ `v ∈ FS(A)`; values are the integers `0..=total`.
    Dense { bits: Vec<u64>, total: u64, count: u64 },
    /// `values` sorted ascending; the scalar value of `v` is `scale·v`.
    Ints { values: Vec<i64>, scale: Rat },
    /// Structural order (= value order when all entries are rational).
    General { values: Vec<Scalar> },
}

/// The exact set `FS(A)` of subset sums of a scalar set `A`.
#[derive(Debug, Clone)]
pub struct SumSet {
    repr: Repr,
    source_size: usize,
}

impl SumSet {
    pub fn len(&self) -> u64 {
        match &self.repr {
            Repr::Dense { count, .. } => *count,
            Repr::Ints { values, .. } => values.len() as u64,
            Repr::General { values } => values.len() as u64,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of elements of the source set `A`.
    pub fn source_size(&self) -> usize {
        self.source_size
    }

    /// True when the dense bit-vector representation is in use.
    pub fn is_dense(&self) -> bool {
        matches!(self.repr, Repr::Dense { .. })
    }

    pub fn contains(&self, x: &Scalar) -> bool {
        match &self.repr {
            Repr::Dense { bits, total, .. } => match x.as_rational() {
                Some(r) if r.is_integer() && !r.is_negative() => match r.to_integer().to_u64() {
                    Some(v) if v <= *total => bits[(v / 64) as usize] >> (v % 64) & 1 == 1,
                    _ => false,
                },
                _ => false,
            },
            Repr::Ints { values, scale } => match x.as_rational() {
                Some(r) => {
                    let q = r / scale;
                    if !q.is_integer() {
                        return false;
                    }
                    match q.to_integer().to_i64() {
                        Some(v) => values.binary_search(&v).is_ok(),
                        None => false,
                    }
                }
                None => false,
            },
            Repr::General { values } => {
                values.binary_search_by(|e| e.structural_cmp(x)).is_ok()
            }
        }
    }

    /// All values, materialised in increasing value order (structural order
    /// coincides with it except for formal values, which are re-sorted with
    /// certified comparisons).
    pub fn values_increasing(&self) -> Result<Vec<Scalar>> {
        match &self.repr {
            Repr::Dense { bits, total, .. } => {
                let mut out = Vec::new();
                for v in 0..=*total {
                    if bits[(v / 64) as usize] >> (v % 64) & 1 == 1 {
                        out.push(Scalar::Rational(Rat::from_integer(Int::from(v))));
                    }
                }
                Ok(out)
            }
            Repr::Ints { values, scale } => Ok(values
                .iter()
                .map(|&v| Scalar::Rational(scale * Rat::from_integer(Int::from(v))))
                .collect()),
            Repr::General { values } => {
                let mut v = values.clone();
                let mut err = None;
                v.sort_by(|a, b| match a.cmp_certified(b) {
                    Ok(o) => o,
                    Err(e) => {
                        err = Some(e);
                        std::cmp::Ordering::Equal
                    }
                });
                match err {
                    Some(e) => Err(e),
                    None => Ok(v),
                }
            }
        }
    }

    pub fn min_value(&self) -> Result<Option<Scalar>> {
        Ok(self.values_increasing()?.into_iter().next())
    }

    pub fn max_value(&self) -> Result<Option<Scalar>> {
        Ok(self.values_increasing()?.into_iter().last())
    }

    /// Iterates values in an unspecified but deterministic order, without the
    /// cost of certified sorting.
    pub fn values_structural(&self) -> Vec<Scalar> {
        match &self.repr {
            Repr::General { values } => values.clone(),
            _ => self.values_increasing().expect("rational representations sort exactly"),
        }
    }
}

/// Merges two sorted deduplicated lists into one.
fn merge_dedup<T: Clone, F: Fn(&T, &T) -> std::cmp::Ordering>(
    a: &[T],
    b: &[T],
    cmp: F,
) -> Vec<T> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match cmp(&a[i], &b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i].clone());
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j].clone());
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push(a[i].clone());
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Incremental FS state shared by [`fs_set`] and [`incremental_trace`].
enum Builder {
    Dense { bits: Vec<u64>, total: u64, count: u64 },
    Ints { values: Vec<i64>, scale: Rat },
    General { values: Vec<Scalar> },
}

impl Builder {
    fn len(&self) -> u64 {
        match self {
            Builder::Dense { count, .. } => *count,
            Builder::Ints { values, .. } => values.len() as u64,
            Builder::General { values } => values.len() as u64,
        }
    }

    fn add(&mut self, x: &Scalar, cfg: &FsConfig) -> Result<()> {
        match self {
            Builder::Dense { bits, total, count } => {
                let v = x
                    .as_rational()
                    .and_then(|r| if r.is_integer() { r.to_integer().to_u64() } else { None })
                    .expect("dense path only receives positive integers");
                shift_or(bits, *total, v);
                *count = bits.iter().map(|w| w.count_ones() as u64).sum();
            }
            Builder::Ints { values, scale } => {
                let q = x.as_rational().expect("ints path only receives rationals") / &*scale;
                debug_assert!(q.is_integer());
                let step = q.to_integer().to_i64().expect("scaled value fits i64");
                let translated: Vec<i64> = values.iter().map(|&v| v + step).collect();
                let merged = merge_dedup(values, &translated, |a, b| a.cmp(b));
                if merged.len() > cfg.max_set_len {
                    return Err(Error::CapacityExceeded(format!(
                        "subset-sum set exceeded {} elements",
                        cfg.max_set_len
                    )));
                }
                *values = merged;
            }
            Builder::General { values } => {
                let mut translated: Vec<Scalar> =
                    values.iter().map(|v| v.add_same_domain(x)).collect();
                translated.sort_by(|a, b| a.structural_cmp(b));
                let merged = merge_dedup(values, &translated, |a, b| a.structural_cmp(b));
                if merged.len() > cfg.max_set_len {
                    return Err(Error::CapacityExceeded(format!(
                        "subset-sum set exceeded {} elements",
                        cfg.max_set_len
                    )));
                }
                *values = merged;
            }
        }
        Ok(())
    }

    fn finish(self, source_size: usize) -> SumSet {
        let repr = match self {
            Builder::Dense { bits, total, count } => Repr::Dense { bits, total, count },
            Builder::Ints { values, scale } => Repr::Ints { values, scale },
            Builder::General { values } => Repr::General { values },
        };
        SumSet { repr, source_size }
    }
}

/// `bits |= bits << shift`, over the fixed capacity `total + 1` bits.
fn shift_or(bits: &mut [u64], total: u64, shift: u64) {
    if shift == 0 {
        return;
    }
    let nwords = bits.len();
    let word_shift = (shift / 64) as usize;
    let bit_shift = shift % 64;
    for w in (0..nwords).rev() {
        let mut v: u64 = 0;
        if w >= word_shift {
            v = bits[w - word_shift] << bit_shift;
            if bit_shift > 0 && w > word_shift {
                v |= bits[w - word_shift - 1] >> (64 - bit_shift);
            }
        }
        bits[w] |= v;
    }
    // Mask stray bits above `total`.
    let top = (total % 64) as u32;
    if top < 63 {
        let last = bits.len() - 1;
        bits[last] &= (1u64 << (top + 1)) - 1;
    }
}

/// Chooses the builder for a validated element list.
fn builder_for(elems: &[Scalar], cfg: &FsConfig) -> Result<Builder> {
    let all_rational = elems.iter().all(|e| e.is_rational());
    if all_rational {
        let rats: Vec<&Rat> = elems.iter().map(|e| e.as_rational().unwrap()).collect();
        let all_positive_ints = rats.iter().all(|r| r.is_integer() && r.is_positive());
        if all_positive_ints {
            let total: Int = rats.iter().map(|r| r.to_integer()).sum();
            if let Some(total) = total.to_u64() {
                if total <= cfg.dense_sum_cap {
                    let words = (total / 64 + 1) as usize;
                    let mut bits = vec![0u64; words];
                    bits[0] = 1; // the empty sum
                    return Ok(Builder::Dense { bits, total, count: 1 });
                }
            }
        }
        // Common denominator; fall back to the general path on i64 overflow.
        let mut den = Int::one();
        for r in &rats {
            den = den.lcm(r.denom());
        }
        let scaled: Option<Vec<i64>> =
            rats.iter().map(|r| (*r * Rat::from_integer(den.clone())).to_integer().to_i64()).collect();
        if let Some(scaled) = scaled {
            let mag: i128 = scaled.iter().map(|&v| (v as i128).unsigned_abs() as i128).sum();
            if mag < (i64::MAX / 4) as i128 {
                return Ok(Builder::Ints { values: vec![0], scale: Rat::new(Int::one(), den) });
            }
        }
    }
    Ok(Builder::General { values: vec![Scalar::zero()] })
}

/// Computes `FS(A)` exactly.
pub fn fs_set(a: &ScalarSet, cfg: &FsConfig) -> Result<SumSet> {
    let mut b = builder_for(a.elements(), cfg)?;
    for x in a.iter() {
        b.add(x, cfg)?;
    }
    Ok(b.finish(a.len()))
}

/// Growth statistics of `FS` along ascending prefixes of a positive set.
///
/// With `A(i)` the set of the `i` smallest elements, `z[i] = |FS(A(i+1)) ∖
/// FS(A(i))|` for `0 ≤ i ≤ n−1`, and `y[i−1] = z[i−1] − i` for `1 ≤ i ≤ n`
/// (nonnegative because the i-th element exceeds everything before it).
#[derive(Debug, Clone)]
pub struct IncrementalTrace {
    /// Elements in increasing value order.
    pub order: Vec<Scalar>,
    pub z: Vec<u64>,
    pub y: Vec<u64>,
    /// `|FS(A)| = 1 + Σ z`.
    pub fs_size: u64,
}

/// Computes the trace for a set of positive scalars.
pub fn incremental_trace(a: &ScalarSet, cfg: &FsConfig) -> Result<IncrementalTrace> {
    for e in a.iter() {
        if !e.is_positive_certified()? {
            return Err(Error::NonPositiveElement(e.to_string()));
        }
    }
    let order = a.sorted_by_value()?;
    let mut builder = builder_for(&order, cfg)?;
    let mut z = Vec::with_capacity(order.len());
    let mut y = Vec::with_capacity(order.len());
    let mut prev = builder.len();
    for (i, x) in order.iter().enumerate() {
        builder.add(x, cfg)?;
        let step = builder.len() - prev;
        prev = builder.len();
        z.push(step);
        let idx = (i + 1) as u64;
        debug_assert!(step >= idx, "adding the largest element creates at least i+1 sums");
        y.push(step - idx);
    }
    Ok(IncrementalTrace { order, z, y, fs_size: prev })
}

/// `|{s ∈ S : s − x ∉ S}|` — the number of arithmetic progressions of
/// difference `x` needed to cover `S`, and equally the number of new sums
/// created by adjoining `x` (for `x` exceeding the set that produced `S`).
pub fn ap_cover_count(s: &SumSet, x: &Scalar) -> Result<u64> {
    if x.is_zero() {
        return Err(Error::ZeroDifference);
    }
    match &s.repr {
        Repr::Dense { bits, total, count } => {
            let shift = x
                .as_rational()
                .and_then(|r| if r.is_integer() { r.to_integer().to_u64() } else { None });
            match shift {
                Some(v) if v <= *total => {
                    // s − x ∈ S ⇔ bit v-shifted copy covers s.
                    let mut shifted = bits.clone();
                    shift_or_replace(&mut shifted, *total, v);
                    let covered: u64 =
                        bits.iter().zip(shifted.iter()).map(|(a, b)| (a & b).count_ones() as u64).sum();
                    Ok(count - covered)
                }
                // x negative, fractional, irrational, or beyond the range:
                // no s − x lands in S... except negative integer x, where
                // s − x > max could still... s − x ∉ [0,total] ⊇ S, so every
                // element starts a progression.
                _ => {
                    if let Some(r) = x.as_rational() {
                        if r.is_integer() && r.is_negative() {
                            // s − x = s + |x| may exceed total, but may also
                            // land inside S; fall back to membership tests.
                            let mut misses = 0;
                            for v in 0..=*total {
                                if bits[(v / 64) as usize] >> (v % 64) & 1 == 1 {
                                    let t = Int::from(v) - r.to_integer();
                                    let inside = t
                                        .to_u64()
                                        .map(|t| {
                                            t <= *total
                                                && bits[(t / 64) as usize] >> (t % 64) & 1 == 1
                                        })
                                        .unwrap_or(false);
                                    if !inside {
                                        misses += 1;
                                    }
                                }
                            }
                            return Ok(misses);
                        }
                    }
                    Ok(*count)
                }
            }
        }
        Repr::Ints { values, scale } => {
            let step = x.as_rational().map(|r| r / scale);
            match step {
                Some(q) if q.is_integer() => match q.to_integer().to_i64() {
                    Some(d) => {
                        let mut misses = 0;
                        for &v in values {
                            if values.binary_search(&(v - d)).is_err() {
                                misses += 1;
                            }
                        }
                        Ok(misses)
                    }
                    None => Ok(values.len() as u64),
                },
                _ => Ok(values.len() as u64),
            }
        }
        Repr::General { values } => {
            let mut misses = 0;
            for v in values {
                let t = v.sub_same_domain_checked(x)?;
                if values.binary_search_by(|e| e.structural_cmp(&t)).is_err() {
                    misses += 1;
                }
            }
            Ok(misses)
        }
    }
}

/// `bits = bits << shift` (replacing, not or-ing), fixed capacity.
fn shift_or_replace(bits: &mut [u64], total: u64, shift: u64) {
    if shift == 0 {
        return;
    }
    let nwords = bits.len();
    let word_shift = (shift / 64) as usize;
    let bit_shift = shift % 64;
    for w in (0..nwords).rev() {
        let mut v: u64 = 0;
        if w >= word_shift {
            v = bits[w - word_shift] << bit_shift;
            if bit_shift > 0 && w > word_shift {
                v |= bits[w - word_shift - 1] >> (64 - bit_shift);
            }
        }
        bits[w] = v;
    }
    let top = (total % 64) as u32;
    if top < 63 {
        let last = bits.len() - 1;
        bits[last] &= (1u64 << (top + 1)) - 1;
    }
}

/// Pairwise sums `{a + b : a ∈ A, b ∈ B}`.
pub fn sumset(a: &ScalarSet, b: &ScalarSet) -> Result<ScalarSet> {
    let mut sums = Vec::with_capacity(a.len() * b.len());
    for x in a.iter() {
        for y in b.iter() {
            sums.push(x.checked_add(y)?);
        }
    }
    ScalarSet::from_dedup(sums)
}

/// Sums of two *distinct* elements, `{a_i + a_j : i < j}`.
pub fn restricted_sumset(a: &ScalarSet) -> Result<ScalarSet> {
    let elems = a.elements();
    let mut sums = Vec::new();
    for i in 0..elems.len() {
        for j in i + 1..elems.len() {
            sums.push(elems[i].checked_add(&elems[j])?);
        }
    }
    ScalarSet::from_dedup(sums)
}

/// The exact set `FS(A)` for a set of lattice points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointSumSet {
    dim: usize,
    points: Vec<LatticePoint>,
}

impl PointSumSet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> u64 {
        self.points.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }

    pub fn contains(&self, p: &LatticePoint) -> bool {
        self.points.binary_search(p).is_ok()
    }
}

/// Computes `FS(A)` for lattice points by incremental merge (lexicographic
/// order is preserved under translation, so no re-sorting is needed).
pub fn fs_set_points(a: &PointSet, cfg: &FsConfig) -> Result<PointSumSet> {
    let mut values = vec![LatticePoint::zero(a.dim())];
    for x in a.iter() {
        let translated: Vec<LatticePoint> = values.iter().map(|v| v.add(x)).collect();
        let merged = merge_dedup(&values, &translated, |a, b| a.cmp(b));
        if merged.len() > cfg.max_set_len {
            return Err(Error::CapacityExceeded(format!(
                "subset-sum set exceeded {} points",
                cfg.max_set_len
            )));
        }
        values = merged;
    }
    Ok(PointSumSet { dim: a.dim(), points: values })
}

/// Number of equivalence classes of `S` under `x ∼ y ⇔ x − y ∥ v`; this is
/// the size of the image of `S` under the projection along `v`, computed with
/// the exact rational representative `⟨v,v⟩·x − ⟨x,v⟩·v` (a common integer
/// multiple of the orthogonal projection, equal for x, y iff they project
/// equally).
pub fn direction_class_count(s: &PointSumSet, v: &LatticePoint) -> Result<u64> {
    if v.is_zero() {
        return Err(Error::ZeroDirection);
    }
    if v.dim() != s.dim() {
        return Err(Error::DimensionMismatch { expected: s.dim(), got: v.dim() });
    }
    let vv = v.dot(v);
    let mut reps: HashSet<Vec<Int>> = HashSet::with_capacity(s.points.len());
    for x in &s.points {
        let xv = x.dot(v);
        let rep: Vec<Int> =
            x.coords().iter().zip(v.coords().iter()).map(|(xc, vc)| xc * &vv - vc * &xv).collect();
        reps.insert(rep);
    }
    Ok(reps.len() as u64)
}

impl Scalar {
    /// Subtraction with a domain check, used by set operations that iterate
    /// over externally supplied scalars.
    fn sub_same_domain_checked(&self, other: &Scalar) -> Result<Scalar> {
        if !self.same_domain(other) {
            return Err(Error::DomainMismatch);
        }
        Ok(self.sub_same_domain(other))
    }
}
