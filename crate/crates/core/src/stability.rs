//! Subspace-concentration statistics, Ungar pairs, the pair-removal
//! inequality, extremal grid search, and polynomial-growth certificates.
//!
//! The class `Ξ_d(n, m)` consists of the n-element sets `A ⊂ ℝ^d ∖ {0}`
//! with at most `m` elements in any proper linear subspace, and `f_d(n, m)`
//! is the minimum of `|FS(A)|` over the class.  This module computes the
//! concentration statistic, certifies the pair-removal inequality
//! `|FS(A)| ≥ |FS(A∖{a,b})| + (direction classes of FS(A∖{a,b}) along
//! a−b)`, searches grids for extremal configurations, evaluates the
//! two-step recursive lower bound for `f_d`, and produces explicit
//! `γ·n^{d+1}` growth certificates.

use std::collections::HashMap;

use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fs::{direction_class_count, fs_set_points, FsConfig};
use crate::linalg::{kernel_basis, rank_int};
use crate::point::{LatticePoint, PointSet};
use crate::scalar::{Int, Rat};

/// Divides out the gcd and flips sign so the first nonzero entry is positive.
fn canonical_direction(mut v: Vec<Int>) -> Vec<Int> {
    let mut g = Int::zero();
    for c in &v {
        g = num_integer::gcd(g.clone(), c.clone());
    }
    if !g.is_zero() {
        for c in &mut v {
            *c = &*c / &g;
        }
    }
    if let Some(first) = v.iter().find(|c| !c.is_zero()) {
        if first.is_negative() {
            for c in &mut v {
                *c = -c.clone();
            }
        }
    }
    v
}

/// Shared core: maximum number of the given points lying in a proper linear
/// subspace, together with a canonical hyperplane normal attaining it.
///
/// Candidate subspaces are spans of at most `dim − 1` of the nonzero points
/// (the maximizer is spanned by the points it contains).  Points at the
/// origin lie in every subspace and are added to every count.  Ties are
/// broken toward the lexicographically least primitive normal.
pub(crate) fn hyperplane_maximizer(points: &[Vec<Int>], dim: usize) -> (Vec<Int>, u64) {
    let zeros = points.iter().filter(|p| p.iter().all(|c| c.is_zero())).count() as u64;
    let nonzero: Vec<&Vec<Int>> = points.iter().filter(|p| !p.iter().all(|c| c.is_zero())).collect();
    // The trivial subspace {0}: its "hyperplane completion" is e₁^⊥ only in
    // dimension 1; for the general case start from the all-axes normal e₁.
    let mut e1 = vec![Int::zero(); dim];
    if dim > 0 {
        e1[0] = Int::one();
    }
    let mut best: (u64, Vec<Int>) = (zeros, e1);

    // Enumerate spans of subsets of size ≤ dim − 1 via distinct direction
    // subsets; a span is determined by any spanning subset, so iterating over
    // all subsets of that size covers every candidate.
    let k = dim.saturating_sub(1);
    let n = nonzero.len();
    let mut subset: Vec<usize> = Vec::new();
    fn descend(
        nonzero: &[&Vec<Int>],
        dim: usize,
        k: usize,
        start: usize,
        subset: &mut Vec<usize>,
        zeros: u64,
        best: &mut (u64, Vec<Int>),
    ) {
        if !subset.is_empty() {
            let rows: Vec<Vec<Int>> = subset.iter().map(|&i| nonzero[i].clone()).collect();
            let r = rank_int(&rows);
            if r == subset.len() {
                // Independent subset: count members of its span.
                let mut count = zeros;
                for p in nonzero {
                    let mut with = rows.clone();
                    with.push((*p).clone());
                    if rank_int(&with) == r {
                        count += 1;
                    }
                }
                if count >= best.0 {
                    // Complete to a hyperplane: pick the lexicographically
                    // least canonical kernel vector.
                    let kernel = kernel_basis(&rows, dim);
                    let normal = kernel
                        .into_iter()
                        .map(canonical_direction)
                        .min()
                        .unwrap_or_else(|| {
                            let mut e = vec![Int::zero(); dim];
                            if dim > 0 {
                                e[0] = Int::one();
                            }
                            e
                        });
                    if count > best.0 || normal < best.1 {
                        *best = (count, normal);
                    }
                }
            } else {
                return; // dependent subset: its span was already covered
            }
        }
        if subset.len() == k {
            return;
        }
        for i in start..nonzero.len() {
            subset.push(i);
            descend(nonzero, dim, k, i + 1, subset, zeros, best);
            subset.pop();
        }
    }
    if k > 0 && n > 0 {
        descend(&nonzero, dim, k, 0, &mut subset, zeros, &mut best);
    }
    (best.1, best.0)
}

/// Maximum of `|A ∩ V|` over proper linear subspaces `V`, for a point set
/// avoiding the origin.
pub fn max_subspace_count(a: &PointSet) -> Result<u64> {
    for p in a.iter() {
        if p.is_zero() {
            return Err(Error::ZeroElement);
        }
    }
    let rows: Vec<Vec<Int>> = a.iter().map(|p| p.coords().to_vec()).collect();
    Ok(hyperplane_maximizer(&rows, a.dim()).1)
}

/// A set in `Ξ_d(n, m)` bookkeeping: the points, their count, and the cached
/// concentration statistic.  Membership in `Ξ_d(n, m)` is `max_subspace ≤ m`.
#[derive(Debug, Clone)]
pub struct XiInstance {
    pub points: PointSet,
    pub n: usize,
    pub max_subspace: u64,
}

impl XiInstance {
    pub fn new(points: PointSet) -> Result<Self> {
        let max_subspace = max_subspace_count(&points)?;
        let n = points.len();
        Ok(XiInstance { points, n, max_subspace })
    }

    /// Member of `Ξ_d(n, m)`?
    pub fn in_class(&self, m: u64) -> bool {
        self.max_subspace <= m
    }
}

/// `|E_A(v)|`: the number of unordered pairs of `A` whose difference is
/// parallel to `v` — equivalently `Σ C(k, 2)` over the direction classes.
pub fn collision_count(a: &PointSet, v: &LatticePoint) -> Result<u64> {
    if v.is_zero() {
        return Err(Error::ZeroDirection);
    }
    if v.dim() != a.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: v.dim() });
    }
    let vv = v.dot(v);
    let mut classes: HashMap<Vec<Int>, u64> = HashMap::new();
    for x in a.iter() {
        let xv = x.dot(v);
        let rep: Vec<Int> =
            x.coords().iter().zip(v.coords().iter()).map(|(xc, vc)| xc * &vv - vc * &xv).collect();
        *classes.entry(rep).or_insert(0) += 1;
    }
    Ok(classes.values().map(|&k| k * (k - 1) / 2).sum())
}

/// True when all points lie on one affine line.
fn is_affinely_collinear(a: &PointSet) -> bool {
    let pts = a.points();
    if pts.len() <= 2 {
        return true;
    }
    let base = &pts[0];
    let rows: Vec<Vec<Int>> = pts[1..].iter().map(|p| p.sub(base).coords().to_vec()).collect();
    rank_int(&rows) <= 1
}

/// The lexicographically least pair `(a, b)`, `a < b`, with
/// `|E_A(a − b)| ≤ n/2`.  Existence is guaranteed for any set of `n ≥ 3`
/// points not on one affine line (the points determine at least `n − 1`
/// difference directions, so some direction carries at most
/// `C(n,2)/(n−1) = n/2` pairs).
pub fn ungar_pair(a: &PointSet) -> Result<(LatticePoint, LatticePoint)> {
    if a.len() < 3 {
        return Err(Error::InvalidInput("ungar_pair needs at least 3 points".into()));
    }
    if is_affinely_collinear(a) {
        return Err(Error::CollinearInput);
    }
    let pts = a.points();
    let n = a.len() as u64;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let v = pts[j].sub(&pts[i]);
            let count = collision_count(a, &v)?;
            if 2 * count <= n {
                return Ok((pts[i].clone(), pts[j].clone()));
            }
        }
    }
    Err(Error::PairNotFound)
}

/// Exact certificate for the pair-removal inequality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairRemoval {
    /// `|FS(A)|`.
    pub lhs: u64,
    /// The best two-point removal bound.
    pub rhs: u64,
    /// `lhs ≥ rhs` — expected always.
    pub holds: bool,
    /// The maximizing pair.
    pub pair: (LatticePoint, LatticePoint),
}

/// Checks `|FS(A)| ≥ |FS(A∖{a,b})| + |direction classes of FS(A∖{a,b})
/// along a−b|` over all pairs, reporting the strongest right-hand side.
pub fn pair_removal_certificate(a: &PointSet, cfg: &FsConfig) -> Result<PairRemoval> {
    if a.len() < 3 {
        return Err(Error::InvalidInput("pair removal needs at least 3 points".into()));
    }
    let lhs = fs_set_points(a, cfg)?.len();
    let pts = a.points();
    let mut best: Option<(u64, (LatticePoint, LatticePoint))> = None;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let rest = a.without(&[&pts[i], &pts[j]]);
            let fs_rest = fs_set_points(&rest, cfg)?;
            let v = pts[i].sub(&pts[j]);
            let classes = direction_class_count(&fs_rest, &v)?;
            let rhs = fs_rest.len() + classes;
            let better = match &best {
                None => true,
                Some((b, _)) => rhs > *b,
            };
            if better {
                best = Some((rhs, (pts[i].clone(), pts[j].clone())));
            }
        }
    }
    let (rhs, pair) = best.expect("at least three points yield a pair");
    Ok(PairRemoval { lhs, rhs, holds: lhs >= rhs, pair })
}

/// Result of an extremal grid search for `f_d(n, m)`.
#[derive(Debug, Clone)]
pub struct FdRecord {
    pub d: usize,
    pub n: usize,
    pub m: u64,
    /// Minimum `|FS(A)|` found.
    pub best_value: u64,
    /// A minimizing configuration (canonical representative).
    pub witness: PointSet,
    /// The canonical enumeration completed within budget.
    pub exhaustive: bool,
    pub grid_radius: i64,
    /// Recorded for provenance; the canonical search order makes results
    /// seed-independent.
    pub seed: u64,
    /// Full configurations whose `FS` was evaluated.
    pub leaves_examined: u64,
}

const LANE_BITS: u32 = 16;

/// Packs a point with small coordinates into lanes of one `i128`.
fn pack(coords: &[i64]) -> i128 {
    let mut code: i128 = 0;
    for (i, &c) in coords.iter().enumerate() {
        code += ((c + (1 << (LANE_BITS - 1))) as i128) << (LANE_BITS as usize * i);
    }
    code
}

/// The translation delta of a point: `pack(p + x) = pack(p) + delta(x)` as
/// long as every coordinate of every partial sum stays within a lane.
fn pack_delta(coords: &[i64]) -> i128 {
    let mut code: i128 = 0;
    for (i, &c) in coords.iter().enumerate() {
        code += (c as i128) << (LANE_BITS as usize * i);
    }
    code
}

/// Merge for sorted deduplicated `i128` lists.
fn merge_codes(a: &[i128], b: &[i128]) -> Vec<i128> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Fraction-free rank of a small integer matrix (Bareiss elimination).
fn rank_small(rows: &mut [Vec<i128>]) -> usize {
    let m = rows.len();
    if m == 0 {
        return 0;
    }
    let n = rows[0].len();
    let mut rank = 0;
    let mut prev: i128 = 1;
    for col in 0..n {
        if rank == m {
            break;
        }
        let pivot = (rank..m).find(|&r| rows[r][col] != 0);
        let Some(p) = pivot else { continue };
        rows.swap(rank, p);
        for r in rank + 1..m {
            for c in col + 1..n {
                rows[r][c] = (rows[rank][col] * rows[r][c] - rows[r][col] * rows[rank][c]) / prev;
            }
            rows[r][col] = 0;
        }
        prev = rows[rank][col];
        rank += 1;
    }
    rank
}

/// Sign-class state during the grid search: chosen class reps with
/// multiplicities (2 = both `x` and `−x`).
struct SearchCtx<'a> {
    classes: &'a [Vec<i64>],
    d: usize,
    n: usize,
    m: u64,
    budget: u64,
    transforms: Vec<(Vec<usize>, Vec<i64>)>,
}

#[derive(Clone)]
struct SearchState {
    chosen: Vec<(usize, u8)>,
    count: usize,
    fs: Vec<i128>,
}

struct SearchOut {
    best: Option<(u64, Vec<(usize, u8)>)>,
    leaves: u64,
    truncated: bool,
}

impl<'a> SearchCtx<'a> {
    fn materialize(&self, chosen: &[(usize, u8)]) -> Vec<Vec<i64>> {
        let mut pts = Vec::new();
        for &(idx, mult) in chosen {
            pts.push(self.classes[idx].clone());
            if mult == 2 {
                pts.push(self.classes[idx].iter().map(|c| -c).collect());
            }
        }
        pts
    }

    /// Max points of the chosen prefix in a proper subspace, exact.
    fn prefix_concentration(&self, chosen: &[(usize, u8)]) -> u64 {
        if self.d <= 1 {
            return 0;
        }
        // Lines through the origin: group classes by primitive direction;
        // ±x share every subspace, so each class contributes its
        // multiplicity.
        let mut lines: HashMap<Vec<i64>, u64> = HashMap::new();
        for &(idx, mult) in chosen {
            let dir = primitive_i64(&self.classes[idx]);
            *lines.entry(dir).or_insert(0) += mult as u64;
        }
        let mut best = lines.values().copied().max().unwrap_or(0);
        if self.d == 2 {
            return best;
        }
        if self.d == 3 {
            // Planes spanned by pairs of non-parallel chosen classes.
            let mut planes: HashMap<Vec<i64>, u64> = HashMap::new();
            for (ai, &(ia, _)) in chosen.iter().enumerate() {
                for &(ib, _) in chosen.iter().skip(ai + 1) {
                    let a = &self.classes[ia];
                    let b = &self.classes[ib];
                    let normal = primitive_i64(&[
                        a[1] * b[2] - a[2] * b[1],
                        a[2] * b[0] - a[0] * b[2],
                        a[0] * b[1] - a[1] * b[0],
                    ]);
                    if normal.iter().all(|&c| c == 0) {
                        continue;
                    }
                    planes.entry(normal).or_insert(0);
                }
            }
            for (normal, count) in planes.iter_mut() {
                for &(idx, mult) in chosen {
                    let dot: i64 =
                        normal.iter().zip(&self.classes[idx]).map(|(x, y)| x * y).sum();
                    if dot == 0 {
                        *count += mult as u64;
                    }
                }
            }
            if let Some(&p) = planes.values().max() {
                best = best.max(p);
            }
            return best;
        }
        // General dimension: spans of ≤ d−1 chosen points, Bareiss rank.
        let pts = self.materialize(chosen);
        let mut best_general = 0u64;
        let k = self.d - 1;
        let n = pts.len();
        let mut subset: Vec<usize> = Vec::new();
        fn descend(
            pts: &[Vec<i64>],
            k: usize,
            start: usize,
            subset: &mut Vec<usize>,
            best: &mut u64,
        ) {
            if !subset.is_empty() {
                let rows: Vec<Vec<i128>> = subset
                    .iter()
                    .map(|&i| pts[i].iter().map(|&c| c as i128).collect())
                    .collect();
                let r = rank_small(&mut rows.clone());
                let mut count = 0u64;
                for p in pts {
                    let mut with = rows.clone();
                    with.push(p.iter().map(|&c| c as i128).collect());
                    if rank_small(&mut with) == r {
                        count += 1;
                    }
                }
                *best = (*best).max(count);
            }
            if subset.len() == k {
                return;
            }
            for i in start..pts.len() {
                subset.push(i);
                descend(pts, k, i + 1, subset, best);
                subset.pop();
            }
        }
        if k > 0 && n > 0 {
            descend(&pts, k, 0, &mut subset, &mut best_general);
        }
        best_general
    }

    /// Is the (class, mult) list lexicographically minimal in its orbit
    /// under coordinate permutations and per-coordinate sign flips?
    fn is_canonical(&self, chosen: &[(usize, u8)]) -> bool {
        let original: Vec<(Vec<i64>, u8)> =
            chosen.iter().map(|&(idx, m)| (self.classes[idx].clone(), m)).collect();
        for (perm, signs) in &self.transforms {
            let mut image: Vec<(Vec<i64>, u8)> = original
                .iter()
                .map(|(v, m)| {
                    let mut w: Vec<i64> = perm.iter().map(|&i| v[i]).collect();
                    for (c, s) in w.iter_mut().zip(signs) {
                        *c *= s;
                    }
                    // Re-canonicalize the sign class: first nonzero positive.
                    if let Some(&f) = w.iter().find(|&&c| c != 0) {
                        if f < 0 {
                            for c in w.iter_mut() {
                                *c = -*c;
                            }
                        }
                    }
                    (w, *m)
                })
                .collect();
            image.sort();
            if image < original {
                return false;
            }
        }
        true
    }

    fn dfs(&self, state: &mut SearchState, next_idx: usize, out: &mut SearchOut) {
        let remaining = self.n - state.count;
        if remaining == 0 {
            if out.leaves >= self.budget {
                out.truncated = true;
                return;
            }
            out.leaves += 1;
            if !self.is_canonical(&state.chosen) {
                return;
            }
            let value = state.fs.len() as u64;
            let better = match &out.best {
                None => true,
                Some((b, _)) => value < *b,
            };
            if better {
                out.best = Some((value, state.chosen.clone()));
            }
            return;
        }
        // Not enough classes left to fill the remaining slots?
        let available = 2 * (self.classes.len().saturating_sub(next_idx));
        if remaining > available {
            return;
        }
        // Each further element strictly enlarges FS.
        if let Some((b, _)) = &out.best {
            if state.fs.len() as u64 + remaining as u64 >= *b {
                return;
            }
        }
        for idx in next_idx..self.classes.len() {
            if out.truncated {
                return;
            }
            for mult in 1..=2u8 {
                if (mult as usize) > remaining {
                    continue;
                }
                state.chosen.push((idx, mult));
                state.count += mult as usize;
                if self.prefix_concentration(&state.chosen) <= self.m {
                    let delta = pack_delta(&self.classes[idx]);
                    let fs_saved = state.fs.clone();
                    let translated: Vec<i128> = state.fs.iter().map(|&c| c + delta).collect();
                    state.fs = merge_codes(&state.fs, &translated);
                    if mult == 2 {
                        // Translation by a constant preserves the order.
                        let t: Vec<i128> = state.fs.iter().map(|&c| c - delta).collect();
                        state.fs = merge_codes(&state.fs, &t);
                    }
                    self.dfs(state, idx + 1, out);
                    state.fs = fs_saved;
                }
                state.count -= mult as usize;
                state.chosen.pop();
            }
        }
    }
}

fn primitive_i64(v: &[i64]) -> Vec<i64> {
    let mut g: i64 = 0;
    for &c in v {
        g = num_integer::gcd(g, c);
    }
    let mut out: Vec<i64> = if g != 0 { v.iter().map(|&c| c / g).collect() } else { v.to_vec() };
    if let Some(&f) = out.iter().find(|&&c| c != 0) {
        if f < 0 {
            for c in out.iter_mut() {
                *c = -*c;
            }
        }
    }
    out
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Grid search for `f_d(n, m)`: minimizes `|FS(A)|` over `A ⊆ [−N, N]^d ∖
/// {0}` with `|A| = n` and every proper subspace containing at most `m`
/// points.
///
/// The enumeration works on sign classes `{x, −x}` with multiplicity 1 or 2
/// (negating single elements translates `FS` and preserves the subspace
/// statistic, so one representative per single-negation orbit suffices) and
/// skips configurations that are not lexicographically minimal under
/// coordinate permutations and per-coordinate sign flips.  Work is sharded
/// over the first class choice; the merge is the deterministic
/// (value, witness) minimum.
pub fn fd_search(
    d: usize,
    n: usize,
    m: u64,
    grid_radius: i64,
    budget: u64,
    seed: u64,
) -> Result<FdRecord> {
    if d == 0 || n == 0 || grid_radius < 1 {
        return Err(Error::InvalidInput("fd_search requires d ≥ 1, n ≥ 1, N ≥ 1".into()));
    }
    if (m as i64) < d as i64 - 1 {
        return Err(Error::InvalidInput(format!("Ξ_{d}(n, m) needs m ≥ d − 1 = {}", d - 1)));
    }
    if d > 7 || (n as i64) * grid_radius >= (1 << (LANE_BITS - 2)) {
        return Err(Error::InvalidInput(
            "grid search supports d ≤ 7 and n·N < 16384 (packed exact sums)".into(),
        ));
    }

    // Sign-class representatives: first nonzero coordinate positive.
    let mut classes: Vec<Vec<i64>> = Vec::new();
    let width = (2 * grid_radius + 1) as usize;
    let total = width.pow(d as u32);
    for code in 0..total {
        let mut c = code;
        let mut p = Vec::with_capacity(d);
        for _ in 0..d {
            p.push((c % width) as i64 - grid_radius);
            c /= width;
        }
        match p.iter().find(|&&x| x != 0) {
            Some(&f) if f > 0 => classes.push(p),
            _ => {}
        }
    }
    classes.sort();

    let mut transforms = Vec::new();
    for perm in permutations(d) {
        for mask in 0..(1u32 << d) {
            let signs: Vec<i64> = (0..d).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect();
            transforms.push((perm.clone(), signs));
        }
    }

    // Shard over the first (class, mult) choice.
    let mut shards: Vec<(usize, u8)> = Vec::new();
    for idx in 0..classes.len() {
        for mult in 1..=2u8 {
            if (mult as usize) <= n {
                shards.push((idx, mult));
            }
        }
    }
    if shards.is_empty() {
        return Err(Error::EmptySearch(format!("no {n}-point subsets in the grid")));
    }
    let per_shard = std::cmp::max(1, budget / shards.len() as u64);

    let results: Vec<SearchOut> = shards
        .par_iter()
        .map(|&(idx, mult)| {
            let ctx = SearchCtx {
                classes: &classes,
                d,
                n,
                m,
                budget: per_shard,
                transforms: transforms.clone(),
            };
            let mut out = SearchOut { best: None, leaves: 0, truncated: false };
            let mut state = SearchState {
                chosen: vec![(idx, mult)],
                count: mult as usize,
                fs: vec![pack(&vec![0; d])],
            };
            if ctx.prefix_concentration(&state.chosen) <= m {
                let delta = pack_delta(&classes[idx]);
                state.fs = merge_codes(&state.fs, &[state.fs[0] + delta]);
                if mult == 2 {
                    let t: Vec<i128> = state.fs.iter().map(|&c| c - delta).collect();
                    state.fs = merge_codes(&state.fs, &t);
                }
                ctx.dfs(&mut state, idx + 1, &mut out);
            }
            out
        })
        .collect();

    let materialize = |chosen: &[(usize, u8)]| -> Vec<Vec<i64>> {
        let mut pts = Vec::new();
        for &(idx, mult) in chosen {
            pts.push(classes[idx].clone());
            if mult == 2 {
                pts.push(classes[idx].iter().map(|c| -c).collect());
            }
        }
        pts
    };
    let mut leaves = 0;
    let mut truncated = false;
    let mut best: Option<(u64, Vec<Vec<i64>>)> = None;
    for r in results {
        leaves += r.leaves;
        truncated |= r.truncated;
        if let Some((value, chosen)) = r.best {
            let mut pts = materialize(&chosen);
            pts.sort();
            let better = match &best {
                None => true,
                Some((bv, bw)) => value < *bv || (value == *bv && pts < *bw),
            };
            if better {
                best = Some((value, pts));
            }
        }
    }

    match best {
        Some((best_value, pts)) => {
            let rows: Vec<&[i64]> = pts.iter().map(|p| p.as_slice()).collect();
            let witness = PointSet::from_rows(&rows)?;
            Ok(FdRecord {
                d,
                n,
                m,
                best_value,
                witness,
                exhaustive: !truncated,
                grid_radius,
                seed,
                leaves_examined: leaves,
            })
        }
        None if truncated => Err(Error::BudgetExceeded(format!(
            "budget {budget} exhausted before any admissible configuration was evaluated"
        ))),
        None => Err(Error::EmptySearch(format!(
            "Ξ_{d}({n}, {m}) has no configuration inside radius {grid_radius}"
        ))),
    }
}

/// Known or assumed lower bounds for `f_d(·, ·)`, queried with monotone
/// clamping (`f` weakly increases in `n` and weakly decreases in `m`).
#[derive(Debug, Clone)]
pub enum FdTable {
    /// The exact one-dimensional values `f_1(n) = ⌊(n+1)²/4⌋ + 1`, valid for
    /// every `m ≥ 0` (in one dimension the only proper subspace is `{0}`,
    /// so the constraint is vacuous).
    Formula1,
    /// Explicit lower bounds for a fixed dimension: entries `(n, m) → value`.
    Explicit { dim: usize, entries: Vec<(u64, i64, u64)> },
}

impl FdTable {
    pub fn dim(&self) -> usize {
        match self {
            FdTable::Formula1 => 1,
            FdTable::Explicit { dim, .. } => *dim,
        }
    }

    /// A valid lower bound for `f(n, m)`: an exact formula value, or the
    /// best recorded entry `(n₀, m₀)` with `n₀ ≤ n` and `m₀ ≥ m`.
    pub fn lower_bound(&self, n: u64, m: i64) -> Result<u64> {
        if m < self.dim() as i64 - 1 {
            return Err(Error::TableGap { n, m });
        }
        match self {
            FdTable::Formula1 => Ok((n + 1) * (n + 1) / 4 + 1),
            FdTable::Explicit { entries, .. } => entries
                .iter()
                .filter(|&&(n0, m0, _)| n0 <= n && m0 >= m)
                .map(|&(_, _, v)| v)
                .max()
                .ok_or(Error::TableGap { n, m }),
        }
    }
}

/// Evaluates the two-step recursive lower bound for `f_d(n, m)` exactly:
/// repeatedly applies
///
/// `f_d(n, m) ≥ f_d(n−2, m) + min_{⌈(n−4)/2⌉ ≤ ℓ ≤ n−2} f_{d−1}(ℓ, ℓ−c)`
///
/// with `c = ⌈(n−2−m)² / (2n−2−m)⌉`, down to the trivial base
/// `f_d(n', m) ≥ 1`, taking `f_{d−1}` values from `table`.
pub fn refined_lower_bound(d: usize, n: u64, m: u64, table: &FdTable) -> Result<u64> {
    if d < 2 || m < 3 || (m as i64) < d as i64 - 1 || n < m + 2 {
        return Err(Error::InvalidInput(
            "refined lower bound needs d ≥ 2, m ≥ max(3, d−1), n ≥ m + 2".into(),
        ));
    }
    if table.dim() != d - 1 {
        return Err(Error::InvalidInput(format!(
            "table carries f_{} but f_{} is required",
            table.dim(),
            d - 1
        )));
    }
    let mut acc: u64 = 1;
    let mut nn = n;
    while nn >= m + 2 {
        let x = nn - 2 - m;
        let denom = 2 * nn - 2 - m;
        let c = (x * x).div_ceil(denom) as i64;
        // nn ≥ m + 2 ≥ 5 here, so nn − 4 ≥ 1.
        let lo = std::cmp::max(1, (nn - 4).div_ceil(2));
        let hi = nn - 2;
        let mut term: Option<u64> = None;
        for l in lo..=hi {
            let mp = l as i64 - c;
            if mp < table.dim() as i64 - 1 {
                continue;
            }
            let v = table.lower_bound(l, mp)?;
            term = Some(match term {
                None => v,
                Some(t) => t.min(v),
            });
        }
        match term {
            Some(t) => acc += t,
            None => break,
        }
        nn -= 2;
    }
    Ok(acc)
}

/// An explicit polynomial growth certificate: `f_d(n, ⌈(1−eps)n⌉) ≥
/// γ·n^{d+1}` for all `n ≥ threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityCertificate {
    pub d: usize,
    pub eps: Rat,
    pub n: u64,
    pub gamma: Rat,
    /// The bound is asserted only from this `n` on.
    pub threshold: u64,
    /// `⌊γ·n^{d+1}⌋` when `n ≥ threshold`, else the trivial 1.
    pub bound: Int,
    pub below_threshold: bool,
}

fn ceil_to_u64(r: &Rat) -> u64 {
    r.ceil().to_integer().to_u64().unwrap_or(u64::MAX)
}

/// The recursion producing `(γ_d(eps), threshold_d(eps))`.
///
/// Base case `d = 1`: any `n` nonzero reals contain `⌈(n−1)/2⌉` of one
/// sign, whose subset sums are already `C(⌈(n−1)/2⌉+1, 2) + 1 ≥ n²/8`
/// distinct values — so `γ = 1/8` for every `eps`, valid from `n = 1`.
///
/// Induction `d ≥ 2`: one round of slicing spends an `eps/8`-fraction of
/// the points on a hyperplane section (at parameter `eps' = eps²/16`) and
/// keeps `(2−eps)/8` of the scale per dimension, giving
/// `γ_d = (eps/8) · γ_{d−1}(eps') · ((2−eps)/8)^d`; the threshold collects
/// the finitely many "n large enough" requirements of that round.
fn gamma_threshold(d: usize, eps: &Rat) -> (Rat, u64) {
    if d == 1 {
        return (Rat::new(Int::one(), Int::from(8)), 1);
    }
    let eps2 = eps * eps / Rat::from_integer(Int::from(16));
    let (g_prev, thr_prev) = gamma_threshold(d - 1, &eps2);
    let two_minus = Rat::from_integer(Int::from(2)) - eps;
    let eighth = |x: &Rat| x / Rat::from_integer(Int::from(8));
    let mut gamma = eighth(eps) * &g_prev;
    let factor = eighth(&two_minus);
    for _ in 0..d {
        gamma *= &factor;
    }
    let one = Rat::from_integer(Int::one());
    let candidates = [
        ceil_to_u64(&(Rat::from_integer(Int::from(8)) / eps)),
        ceil_to_u64(&(Rat::from_integer(Int::from(21)) / eps)),
        ceil_to_u64(&(Rat::from_integer(Int::from(16)) / &two_minus)),
        ceil_to_u64(&(Rat::from_integer(Int::from(8 * thr_prev as i64)) / &two_minus)),
        ceil_to_u64(&(Rat::from_integer(Int::from(3)) / (&one - eps))),
        ceil_to_u64(&(Rat::from_integer(Int::from(d as i64 - 1)) / (&one - eps))),
    ];
    (gamma, candidates.into_iter().max().unwrap())
}

/// Produces the explicit `γ·n^{d+1}` certificate for the class
/// `Ξ_d(n, ⌈(1−eps)n⌉)`.
pub fn stability_certificate(d: usize, eps: &Rat, n: u64) -> Result<StabilityCertificate> {
    if d == 0 {
        return Err(Error::InvalidInput("certificate needs d ≥ 1".into()));
    }
    let zero = Rat::from_integer(Int::zero());
    let one = Rat::from_integer(Int::one());
    if !(eps > &zero && eps < &one) {
        return Err(Error::InvalidInput("certificate needs 0 < eps < 1".into()));
    }
    let (gamma, threshold) = gamma_threshold(d, eps);
    let below_threshold = n < threshold;
    let bound = if below_threshold {
        Int::one()
    } else {
        let mut pow = Rat::from_integer(Int::from(n as i64));
        let base = pow.clone();
        for _ in 0..d {
            pow *= &base;
        }
        (gamma.clone() * pow).floor().to_integer()
    };
    Ok(StabilityCertificate { d, eps: eps.clone(), n, gamma, threshold, bound, below_threshold })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    fn pts(rows: &[&[i64]]) -> PointSet {
        PointSet::from_rows(rows).unwrap()
    }

    #[test]
    fn max_subspace_examples() {
        assert_eq!(max_subspace_count(&pts(&[&[1, 0], &[2, 0], &[0, 1]])).unwrap(), 2);
        assert_eq!(max_subspace_count(&pts(&[&[1, 0], &[0, 1], &[1, 1]])).unwrap(), 1);
        assert_eq!(max_subspace_count(&pts(&[&[3], &[-2], &[7]])).unwrap(), 0);
        assert_eq!(
            max_subspace_count(&pts(&[&[0, 0], &[1, 0]])).unwrap_err(),
            Error::ZeroElement
        );
        // d=3: a plane with three points.
        assert_eq!(
            max_subspace_count(&pts(&[&[1, 0, 0], &[0, 1, 0], &[1, 1, 0], &[0, 0, 1]])).unwrap(),
            3
        );
    }

    /// Second, independent implementation of the membership criterion:
    /// `max_subspace_count(A) ≤ m` ⇔ every (m+1)-subset has full rank.
    fn in_class_by_rank(a: &PointSet, m: usize) -> bool {
        let points = a.points();
        let n = points.len();
        if n <= m {
            return true;
        }
        let d = a.dim();
        // every (m+1)-subset must span ℝ^d
        fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
            if k == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for first in 0..n {
                for mut rest in subsets(n, k - 1) {
                    if rest.iter().all(|&r| r > first) {
                        let mut s = vec![first];
                        s.append(&mut rest);
                        out.push(s);
                    }
                }
            }
            out
        }
        for s in subsets(n, m + 1) {
            let rows: Vec<Vec<Int>> = s.iter().map(|&i| points[i].coords().to_vec()).collect();
            if rank_int(&rows) < d {
                return false;
            }
        }
        true
    }

    #[test]
    fn membership_criteria_agree() {
        let cases = [
            pts(&[&[1, 0], &[2, 0], &[0, 1]]),
            pts(&[&[1, 0], &[0, 1], &[1, 1]]),
            pts(&[&[1, 0], &[2, 1], &[3, 1], &[-1, 2]]),
            pts(&[&[1, 0, 0], &[0, 1, 0], &[1, 1, 0], &[0, 0, 1]]),
            pts(&[&[1, 2, 3], &[2, 4, 6], &[1, 0, 0], &[0, 1, 1]]),
        ];
        for a in &cases {
            let ms = max_subspace_count(a).unwrap();
            for m in 0..=a.len() as u64 {
                assert_eq!(
                    ms <= m,
                    in_class_by_rank(a, m as usize),
                    "points {a}, m={m}, max_subspace={ms}"
                );
            }
        }
    }

    #[test]
    fn collision_examples() {
        let square = pts(&[&[0, 0], &[0, 1], &[1, 0], &[1, 1]]);
        assert_eq!(collision_count(&square, &LatticePoint::from_ints(&[1, 0])).unwrap(), 2);
        assert_eq!(collision_count(&square, &LatticePoint::from_ints(&[1, 1])).unwrap(), 1);
        assert_eq!(collision_count(&square, &LatticePoint::from_ints(&[3, 1])).unwrap(), 0);
        assert_eq!(
            collision_count(&square, &LatticePoint::from_ints(&[0, 0])).unwrap_err(),
            Error::ZeroDirection
        );
    }

    #[test]
    fn ungar_pair_examples() {
        let square = pts(&[&[0, 0], &[0, 1], &[1, 0], &[1, 1]]);
        let (a, b) = ungar_pair(&square).unwrap();
        let count = collision_count(&square, &b.sub(&a)).unwrap();
        assert!(2 * count <= 4, "collision count {count}");
        // Lexicographically least admissible pair: (0,0),(0,1) has 2
        // collisions along (0,1) → 4 ≤ 4 holds.
        assert_eq!((a, b), (LatticePoint::from_ints(&[0, 0]), LatticePoint::from_ints(&[0, 1])));

        let tri = pts(&[&[0, 0], &[1, 0], &[0, 1]]);
        let (a, b) = ungar_pair(&tri).unwrap();
        assert!(2 * collision_count(&tri, &b.sub(&a)).unwrap() <= 3);

        let line = pts(&[&[0, 0], &[1, 1], &[2, 2]]);
        assert_eq!(ungar_pair(&line).unwrap_err(), Error::CollinearInput);
    }

    #[test]
    fn pair_removal_examples() {
        let cfg = FsConfig::default();
        let r = pair_removal_certificate(&pts(&[&[1, 0], &[0, 1], &[1, 1]]), &cfg).unwrap();
        assert!(r.holds, "{r:?}");

        // Homogeneous AP on the x-axis plus one off-axis point.
        let r = pair_removal_certificate(
            &pts(&[&[1, 0], &[2, 0], &[3, 0], &[0, 1]]),
            &cfg,
        )
        .unwrap();
        assert!(r.holds, "{r:?}");

        // Collinear through the origin: inequality still valid.
        let r = pair_removal_certificate(&pts(&[&[-1, -1], &[1, 1], &[2, 2]]), &cfg).unwrap();
        assert!(r.holds, "{r:?}");
    }

    #[test]
    fn fd_search_one_dimensional_examples() {
        let r = fd_search(1, 3, 2, 3, 1 << 20, 0).unwrap();
        assert_eq!(r.best_value, 5);
        assert!(r.exhaustive);
        assert_eq!(r.witness, pts(&[&[-1], &[1], &[2]]));

        let r = fd_search(1, 4, 3, 3, 1 << 20, 0).unwrap();
        assert_eq!(r.best_value, 7);
        assert_eq!(r.witness, pts(&[&[-2], &[-1], &[1], &[2]]));
    }

    #[test]
    fn fd_search_planar_minimum_matches_brute_force() {
        // Independent oracle: all 3-subsets of the 8 grid points with the
        // subspace constraint, directly.
        let mut grid: Vec<Vec<i64>> = Vec::new();
        for x in -1..=1i64 {
            for y in -1..=1i64 {
                if (x, y) != (0, 0) {
                    grid.push(vec![x, y]);
                }
            }
        }
        let cfg = FsConfig::default();
        let mut best = u64::MAX;
        for i in 0..grid.len() {
            for j in i + 1..grid.len() {
                for k in j + 1..grid.len() {
                    let a = pts(&[&grid[i], &grid[j], &grid[k]]);
                    if max_subspace_count(&a).unwrap() <= 2 {
                        best = best.min(fs_set_points(&a, &cfg).unwrap().len());
                    }
                }
            }
        }
        assert_eq!(best, 6, "exhaustive oracle over the 8-point grid");

        let r = fd_search(2, 3, 2, 1, 1 << 20, 0).unwrap();
        assert_eq!(r.best_value, best);
        assert!(r.exhaustive);
        // The witness is a genuine member attaining the value.
        assert_eq!(fs_set_points(&r.witness, &cfg).unwrap().len(), best);
        assert!(max_subspace_count(&r.witness).unwrap() <= 2);
    }

    #[test]
    fn fd_search_budget_and_empty_space() {
        // Tiny budget: partial results are still well-formed.
        let r = fd_search(1, 4, 3, 4, 3, 0).unwrap();
        assert!(!r.exhaustive);
        assert!(r.best_value >= 7);

        // m = 1 in the plane admits at most 4 points from the N=1 grid.
        assert!(matches!(fd_search(2, 6, 1, 1, 1 << 20, 0), Err(Error::EmptySearch(_))));

        assert!(matches!(fd_search(2, 3, 0, 1, 1 << 20, 0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn fd_monotonicity_on_small_cells() {
        // best_value weakly increases in n and weakly decreases in m.
        let f = |n: usize, m: u64| fd_search(2, n, m, 1, 1 << 20, 0).unwrap().best_value;
        assert!(f(3, 2) <= f(4, 2));
        assert!(f(4, 2) <= f(5, 2));
        assert!(f(3, 2) >= f(3, 3));
        assert!(f(4, 2) >= f(4, 3));
    }

    #[test]
    fn formula_table_and_refined_bound() {
        let t = FdTable::Formula1;
        assert_eq!(t.lower_bound(3, 2).unwrap(), 5);
        assert_eq!(t.lower_bound(3, 0).unwrap(), 5);
        assert_eq!(t.lower_bound(1, 0).unwrap(), 2);
        assert!(matches!(t.lower_bound(3, -1), Err(Error::TableGap { .. })));

        // Constant explicit table ≡ 1 → each unroll step adds 1.  Entries
        // are recorded at a large m so clamping serves every smaller budget.
        let ones = FdTable::Explicit {
            dim: 1,
            entries: (0..=20).map(|n| (n, 20, 1)).collect(),
        };
        // n=10, m=4: steps at nn=10, 8, 6 → 1 + 3·1 = 4.
        assert_eq!(refined_lower_bound(2, 10, 4, &ones).unwrap(), 4);

        // The frozen reference value with the exact f₁ table.
        assert_eq!(refined_lower_bound(2, 10, 4, &FdTable::Formula1).unwrap(), 11);

        // Preconditions.
        assert!(matches!(
            refined_lower_bound(2, 5, 4, &FdTable::Formula1),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            refined_lower_bound(2, 10, 2, &FdTable::Formula1),
            Err(Error::InvalidInput(_))
        ));

        // Clamping: an explicit table with only (3, 5) → value 9 answers
        // queries at larger n and smaller m, but not below.
        let t = FdTable::Explicit { dim: 2, entries: vec![(3, 5, 9)] };
        assert_eq!(t.lower_bound(4, 4).unwrap(), 9);
        assert!(matches!(t.lower_bound(2, 5), Err(Error::TableGap { .. })));
    }

    #[test]
    fn stability_certificate_examples() {
        let half = rat(1, 2);
        let c = stability_certificate(1, &half, 100).unwrap();
        assert_eq!(c.gamma, rat(1, 8));
        assert_eq!(c.threshold, 1);
        assert_eq!(c.bound, Int::from(1250));
        assert!(!c.below_threshold);

        let c = stability_certificate(2, &half, 10).unwrap();
        assert!(c.below_threshold);
        assert_eq!(c.bound, Int::one());
        assert_eq!(c.threshold, 42);
        assert_eq!(c.gamma, rat(9, 32768));

        let c = stability_certificate(2, &half, 100).unwrap();
        assert!(!c.below_threshold);
        // ⌊(9/32768)·100³⌋ = ⌊274.6…⌋
        assert_eq!(c.bound, Int::from(274));

        assert!(stability_certificate(1, &rat(3, 2), 5).is_err());
        assert!(stability_certificate(0, &half, 5).is_err());
    }

    #[test]
    fn certificate_below_searched_minima() {
        let half = rat(1, 2);
        for k in 3..=5u64 {
            let m = k.div_ceil(2); // ⌈(1−eps)n⌉ with eps = 1/2
            let r = fd_search(1, k as usize, m, k as i64, 1 << 20, 0).unwrap();
            let c = stability_certificate(1, &half, k).unwrap();
            assert!(
                c.bound <= Int::from(r.best_value),
                "certificate {} vs searched {}",
                c.bound,
                r.best_value
            );
        }
    }

    #[test]
    fn packed_codes_are_exact() {
        // pack(p) + delta(x) == pack(p + x) within the supported window.
        let p = [7i64, -3, 5];
        let x = [-2i64, 9, -5];
        let sum: Vec<i64> = p.iter().zip(&x).map(|(a, b)| a + b).collect();
        assert_eq!(pack(&p) + pack_delta(&x), pack(&sum));
    }

    #[test]
    fn rank_small_matches_bigint_rank() {
        let cases: Vec<Vec<Vec<i64>>> = vec![
            vec![vec![1, 0], vec![0, 1]],
            vec![vec![2, 4], vec![3, 6]],
            vec![vec![1, 2, 3], vec![4, 5, 6], vec![7, 8, 9]],
            vec![vec![0, 0, 0]],
        ];
        for rows in cases {
            let big: Vec<Vec<Int>> =
                rows.iter().map(|r| r.iter().map(|&c| Int::from(c)).collect()).collect();
            let mut small: Vec<Vec<i128>> =
                rows.iter().map(|r| r.iter().map(|&c| c as i128).collect()).collect();
            assert_eq!(rank_small(&mut small), rank_int(&big), "{rows:?}");
        }
    }
}
