//! The constructive decomposition chain for sets with few subset sums:
//! small-doubling prefix scan → symmetric-GAP cover search → iterative
//! cleaning → rank-1 collapse → local-to-global patching, plus an
//! end-to-end verifier that recomputes every claimed conclusion exactly.

use std::collections::HashMap;

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result, Stage};
use crate::fs::{fs_set, incremental_trace, sumset, FsConfig, SumSet};
use crate::gap::{
    clean, collapse_to_rank_one, coordinate_matrix, scalar_from_coords, SymmetricGap,
};
use crate::linalg::{express_in_row_basis, row_lattice_basis};
use crate::scalar::{commensurability_ratio, group_generator, Int, Rat, Scalar, ScalarSet};

/// Guard on the local-to-global modulus parameter `m` (and hence on
/// `D = lcm(1..m)`).
const M_CAP: u64 = 4096;

/// Tuning parameters for the decomposition chain.  Every `O_C(1)` budget of
/// the underlying argument is an explicit field here, and realized values
/// are reported back alongside each result.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    /// Prefix fraction for the small-doubling scan (`i ≥ delta·n`).
    pub delta: Rat,
    /// Robustness parameter for GAP cleaning (`0 < eps < 1`).
    pub clean_eps: Rat,
    /// Maximum GAP rank the cover search may use.
    pub rank_max: usize,
    /// Size factor `K`: covers must satisfy `|Q| ≤ K·|B|`.
    pub cover_size_factor: Rat,
    /// Candidate evaluations allowed in the cover search.
    pub cover_budget: usize,
    /// Subset-sum computation limits.
    pub fs: FsConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            delta: Rat::new(Int::one(), Int::from(2)),
            clean_eps: Rat::new(Int::from(51), Int::from(100)),
            rank_max: 3,
            cover_size_factor: Rat::from_integer(Int::from(6)),
            cover_budget: 128,
            fs: FsConfig::default(),
        }
    }
}

fn stalled(stage: Stage, err: Error) -> Error {
    Error::PipelineStalled { stage, detail: err.to_string() }
}

/// Returns an ascending prefix `A(i)` (`i ≥ delta·n`) whose one-step growth
/// statistic `z_i = |FS(A(i+1)) ∖ FS(A(i))|` is at most `2(1−delta)⁻¹·C·n`,
/// which pins the exact doubling bound `|A(i)+A(i)| ≤ 2z_i + i`.  The
/// largest qualifying prefix is returned.  When `n < delta⁻¹` the whole set
/// qualifies trivially.
///
/// [`Error::NoIndexFound`] signals that no prefix qualifies — which refutes
/// the working hypothesis `|FS(A)| ≤ C·n²`, since the increments would
/// otherwise sum past `C·n²`.
pub fn small_doubling_scan(
    a: &ScalarSet,
    delta: &Rat,
    c: &Rat,
    fs_cfg: &FsConfig,
) -> Result<ScalarSet> {
    let one = Rat::from_integer(Int::one());
    if !(delta > &Rat::zero() && delta < &one) {
        return Err(Error::InvalidInput("delta must satisfy 0 < delta < 1".into()));
    }
    if c <= &Rat::zero() {
        return Err(Error::InvalidInput("C must be positive".into()));
    }
    let n = a.len();
    if n == 0 {
        return Ok(a.clone());
    }
    let trace = incremental_trace(a, fs_cfg)?; // also certifies positivity
    let n_rat = Rat::from_integer(Int::from(n as u64));
    if n_rat < delta.recip() {
        return Ok(a.clone()); // trivial branch: the whole set
    }
    let bound = Rat::from_integer(Int::from(2)) * (one - delta).recip() * c * &n_rat;
    let lo = (delta * &n_rat).ceil().to_integer().to_usize().expect("delta·n fits");
    let lo = lo.max(1);
    // z[i] is the increment when the (i+1)-th element joins the prefix of
    // size i, so prefixes of size i ≤ n−1 carry a certificate.
    let chosen = (lo..n)
        .rev()
        .find(|&i| Rat::from_integer(Int::from(trace.z[i])) <= bound)
        .ok_or(Error::NoIndexFound)?;
    let prefix = ScalarSet::from_dedup(trace.order[..chosen].to_vec())?;
    // The exact doubling certificate, recomputed rather than trusted.
    let doubling = sumset(&prefix, &prefix)?;
    debug_assert!(
        (doubling.len() as u64) <= 2 * trace.z[chosen] + chosen as u64,
        "doubling bound violated: |A'+A'| = {}, 2z+i = {}",
        doubling.len(),
        2 * trace.z[chosen] + chosen as u64
    );
    Ok(prefix)
}

/// The value-least element, the ℚ-independent generators of the ℤ-module
/// spanned by the differences to it, and each element's integer coefficient
/// vector over those generators.
struct ModuleCoords {
    base: Scalar,
    basis: Vec<Scalar>,
    /// `(element, coefficients)` in ascending value order; the element
    /// equals `base + Σ coeff_j · basis_j`.
    coeffs: Vec<(Scalar, Vec<Int>)>,
}

fn module_coordinates(b: &ScalarSet) -> Result<ModuleCoords> {
    let sorted = b.sorted_by_value()?;
    let base = sorted[0].clone();
    let diffs: Vec<Scalar> = sorted.iter().map(|x| x.sub_same_domain(&base)).collect();
    let (matrix, domain_basis, den) = coordinate_matrix(&diffs)?;
    let ncoords = matrix.len();
    let rows: Vec<Vec<Int>> = (0..diffs.len())
        .map(|i| (0..ncoords).map(|k| matrix[k][i].clone()).collect())
        .collect();
    let module = row_lattice_basis(rows.clone());
    let basis = module
        .iter()
        .map(|row| scalar_from_coords(domain_basis.as_ref(), row, &den))
        .collect::<Result<Vec<_>>>()?;
    let coeffs = sorted
        .into_iter()
        .zip(rows)
        .map(|(s, row)| {
            let c = express_in_row_basis(&module, &row).expect("differences span their module");
            let ints = c
                .into_iter()
                .map(|q| {
                    debug_assert!(q.is_integer());
                    q.to_integer()
                })
                .collect();
            (s, ints)
        })
        .collect();
    Ok(ModuleCoords { base, basis, coeffs })
}

/// Lower median of a multiset.
fn lower_median(vals: &[Int]) -> Int {
    let mut sorted = vals.to_vec();
    sorted.sort();
    sorted[(sorted.len() - 1) / 2].clone()
}

fn max_deviation(vals: &[Int], center: &Int) -> Int {
    vals.iter().map(|v| (v - center).abs()).max().expect("nonempty")
}

/// A one-dimensional positional cover: `vals ⊆ {base + Σ step_k·x_k :
/// |x_k| ≤ half_k}`, with steps ascending.
struct TowerCover {
    base: Int,
    /// `(step, half_side)` pairs, ascending by step.
    levels: Vec<(Int, Int)>,
    volume: Int,
}

fn direct_cover(vals: &[Int]) -> TowerCover {
    let med = lower_median(vals);
    let dev = max_deviation(vals, &med);
    if dev.is_zero() {
        TowerCover { base: med, levels: vec![], volume: Int::one() }
    } else {
        let volume = Int::from(2) * &dev + 1;
        TowerCover { base: med, levels: vec![(Int::one(), dev)], volume }
    }
}

/// Carry-freedom: every step strictly exceeds twice the total reach of the
/// levels below it, which makes the positional representation injective.
fn chain_is_carry_free(levels: &[(Int, Int)]) -> bool {
    let mut reach = Int::zero();
    for (step, half) in levels {
        if *step <= Int::from(2) * &reach {
            return false;
        }
        reach += step * half;
    }
    true
}

/// Minimal-volume positional cover of an integer multiset using at most
/// `levels` digit positions, found by refining along popular differences.
/// `evals` bounds the number of refinement candidates considered.
fn best_tower(vals: &[Int], levels: usize, evals: &mut usize) -> TowerCover {
    let mut best = direct_cover(vals);
    if levels < 2 || vals.len() < 2 {
        return best;
    }
    // Popular positive pairwise differences, most frequent first.
    let mut distinct = vals.to_vec();
    distinct.sort();
    distinct.dedup();
    let mut counts: HashMap<Int, usize> = HashMap::new();
    for i in 0..distinct.len() {
        for j in i + 1..distinct.len() {
            *counts.entry(&distinct[j] - &distinct[i]).or_insert(0) += 1;
        }
    }
    let mut candidates: Vec<(Int, usize)> = counts.into_iter().collect();
    candidates.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let two = Int::from(2);
    for (u, _) in candidates.into_iter().filter(|(u, _)| u >= &two).take(8) {
        if *evals == 0 {
            break;
        }
        *evals -= 1;
        let mut rems = Vec::with_capacity(vals.len());
        let mut quots = Vec::with_capacity(vals.len());
        for v in vals {
            let (q, r) = v.div_mod_floor(&u);
            quots.push(q);
            rems.push(r);
        }
        let r_cov = direct_cover(&rems);
        let q_cov = best_tower(&quots, levels - 1, evals);
        if r_cov.levels.len() + q_cov.levels.len() > levels {
            continue;
        }
        let base = r_cov.base + &u * q_cov.base;
        let mut assembled = r_cov.levels;
        assembled.extend(q_cov.levels.into_iter().map(|(s, h)| (&u * s, h)));
        if !chain_is_carry_free(&assembled) {
            continue;
        }
        let volume = r_cov.volume * q_cov.volume;
        if volume < best.volume {
            best = TowerCover { base, levels: assembled, volume };
        }
    }
    best
}

/// A proper symmetric GAP together with the translation that makes it
/// cover: `B ⊆ center + gap`.
#[derive(Debug, Clone)]
pub struct GapCover {
    pub center: Scalar,
    pub gap: SymmetricGap,
}

impl GapCover {
    /// The centered copy of a covered set, ready for lifting and cleaning.
    pub fn centered(&self, b: &ScalarSet) -> Result<ScalarSet> {
        b.map(|s| s.sub_same_domain(&self.center))
    }
}

/// Bounded search for a proper symmetric GAP `Q` with `B ⊆ center + Q`,
/// `rank ≤ rank_max`, and `|Q| ≤ size_factor·|B|`.  Differences are drawn
/// from a lattice basis of the module spanned by the pairwise differences
/// of `B`; a commensurable `B` is additionally refined positionally along
/// popular differences.  Absence (`Ok(None)`) means the budgeted search
/// found nothing — explicitly not a refutation.
pub fn gap_cover_search(
    b: &ScalarSet,
    rank_max: usize,
    size_factor: &Rat,
    budget: usize,
) -> Result<Option<GapCover>> {
    if b.is_empty() {
        return Err(Error::InvalidInput("cannot cover an empty set".into()));
    }
    if rank_max == 0 {
        return Ok(None);
    }
    let cap = size_factor * Rat::from_integer(Int::from(b.len() as u64));
    let mc = module_coordinates(b)?;
    let r = mc.basis.len();
    if r > rank_max {
        return Ok(None); // any GAP covering B needs at least r differences
    }
    let finish = |center: Scalar, diffs: Vec<Scalar>, halves: Vec<u64>| -> Result<Option<GapCover>> {
        let gap = match SymmetricGap::new(diffs, halves) {
            Ok(g) => g,
            Err(Error::CapacityExceeded(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        if !gap.is_proper() {
            return Ok(None);
        }
        if Rat::from_integer(gap.box_volume()) > cap {
            return Ok(None);
        }
        Ok(Some(GapCover { center, gap }))
    };
    if r == 0 {
        // All elements equal: any proper GAP around the base covers.
        return finish(mc.base, vec![Scalar::one()], vec![1]);
    }
    if r == 1 {
        let vals: Vec<Int> = mc.coeffs.iter().map(|(_, c)| c[0].clone()).collect();
        let mut evals = budget;
        let tower = best_tower(&vals, rank_max, &mut evals);
        if Rat::from_integer(tower.volume.clone()) > cap {
            return Ok(None);
        }
        let e1 = &mc.basis[0];
        let center = mc.base.add_same_domain(&e1.scale(&Rat::from_integer(tower.base)));
        if tower.levels.is_empty() {
            return finish(center, vec![Scalar::one()], vec![1]);
        }
        let diffs = tower
            .levels
            .iter()
            .map(|(s, _)| e1.scale(&Rat::from_integer(s.clone())))
            .collect();
        let halves = tower
            .levels
            .iter()
            .map(|(_, h)| h.to_u64().expect("half-side bounded by the size cap"))
            .collect();
        return finish(center, diffs, halves);
    }
    // Independent generators: per-coordinate interval cover around the
    // lower medians; constant coordinates fold into the center.
    let mut center = mc.base.clone();
    let mut diffs = Vec::new();
    let mut halves = Vec::new();
    let mut volume = Int::one();
    for (j, gen) in mc.basis.iter().enumerate() {
        let vals: Vec<Int> = mc.coeffs.iter().map(|(_, c)| c[j].clone()).collect();
        let med = lower_median(&vals);
        let dev = max_deviation(&vals, &med);
        center = center.add_same_domain(&gen.scale(&Rat::from_integer(med)));
        if !dev.is_zero() {
            volume *= Int::from(2) * &dev + 1;
            diffs.push(gen.clone());
            halves.push(dev.to_u64().ok_or_else(|| {
                Error::CapacityExceeded("coefficient spread exceeds u64".into())
            })?);
        }
    }
    if Rat::from_integer(volume) > cap {
        return Ok(None);
    }
    if diffs.is_empty() {
        return finish(center, vec![Scalar::one()], vec![1]);
    }
    finish(center, diffs, halves)
}

/// The structured piece extracted from a set with few subset sums.
#[derive(Debug, Clone)]
pub struct StructuredPiece {
    /// Positive generator with `a_prime ⊆ a·ℤ_{>0}`.
    pub a: Scalar,
    pub a_prime: ScalarSet,
    /// `|A′| / n`.
    pub realized_density: Rat,
    /// `max(a⁻¹·A′) / n`, so that `A′ ⊆ a·[1, realized_span·n]`.
    pub realized_span: Rat,
    pub stage_log: Vec<(Stage, String)>,
}

/// Runs scan → cover → clean → collapse and returns a dilated-interval
/// piece `A′ ⊆ a·[1, C′n]` with its realized constants.  Fails with
/// [`Error::PipelineStalled`] naming the stage that could not proceed.
pub fn piece_of_structure(a: &ScalarSet, c: &Rat, cfg: &PipelineConfig) -> Result<StructuredPiece> {
    let n = a.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty input set".into()));
    }
    let mut log: Vec<(Stage, String)> = Vec::new();

    let prefix = small_doubling_scan(a, &cfg.delta, c, &cfg.fs)
        .map_err(|e| stalled(Stage::SmallDoubling, e))?;
    log.push((
        Stage::SmallDoubling,
        format!("kept prefix of {} of {} elements", prefix.len(), n),
    ));

    let cover = gap_cover_search(&prefix, cfg.rank_max, &cfg.cover_size_factor, cfg.cover_budget)?
        .ok_or_else(|| Error::PipelineStalled {
            stage: Stage::GapCover,
            detail: "no proper GAP cover within the rank and size budgets".into(),
        })?;
    log.push((
        Stage::GapCover,
        format!(
            "rank-{} cover of box volume {} around {}",
            cover.gap.rank(),
            cover.gap.box_volume(),
            cover.center
        ),
    ));

    let centered = cover.centered(&prefix)?;
    let outcome =
        clean(&cover.gap, &centered, &cfg.clean_eps).map_err(|e| stalled(Stage::Clean, e))?;
    log.push((
        Stage::Clean,
        format!(
            "{} rounds to rank {}, kept {} of {}",
            outcome.rounds,
            outcome.q_prime.rank(),
            outcome.b_prime.len(),
            prefix.len()
        ),
    ));

    // Rank-1 collapse of the cleaned GAP's differences over n-fold boxes.
    let intervals: Vec<(i64, i64)> = outcome
        .q_prime
        .half_sides()
        .iter()
        .map(|&s| {
            let reach = (n as i64)
                .checked_mul(s as i64)
                .ok_or_else(|| Error::CapacityExceeded("collapse interval overflows".into()))?;
            Ok((-reach, reach))
        })
        .collect::<Result<_>>()?;
    let collapse = collapse_to_rank_one(outcome.q_prime.diffs(), &intervals)
        .map_err(|e| stalled(Stage::Collapse, e))?;
    match &collapse {
        Some(c) => log.push((
            Stage::Collapse,
            format!("differences generated by {}, max product {}", c.a, c.max_product),
        )),
        None => log.push((Stage::Collapse, "GAP differences are incommensurable".into())),
    }

    let a_prime = outcome.b_prime.map(|s| s.add_same_domain(&cover.center))?;
    let gen = group_generator(a_prime.elements())?.ok_or_else(|| Error::PipelineStalled {
        stage: Stage::Collapse,
        detail: "cleaned piece is not commensurable".into(),
    })?;
    let mut max_ratio = Int::zero();
    for x in a_prime.iter() {
        let q = commensurability_ratio(x, &gen)?.expect("generator divides the piece");
        debug_assert!(q.is_integer() && q.is_positive());
        max_ratio = max_ratio.max(q.to_integer());
    }
    let n_rat = Rat::from_integer(Int::from(n as u64));
    Ok(StructuredPiece {
        a: gen,
        realized_density: Rat::new(Int::from(a_prime.len() as u64), Int::from(n as u64)),
        realized_span: Rat::from_integer(max_ratio) / n_rat,
        a_prime,
        stage_log: log,
    })
}

/// Outcome of the local-to-global patch step.
#[derive(Debug, Clone)]
pub struct LocalGlobalSplit {
    /// Elements whose reduced denominators divide `d`.
    pub r1: ScalarSet,
    /// The exceptional elements (too large, or of order exceeding `m`).
    pub r2: ScalarSet,
    /// `lcm(1..m)`.
    pub d: Int,
    pub m: u64,
    /// The largeness threshold `T = eps⁻¹n² + 1`.
    pub threshold: Rat,
    /// Completed greedy blocks with sums in `[T, 2T)`; certified `< m`.
    pub blocks: u32,
    /// `Σ R1`, certified `≤ (2m−1)·T`.
    pub r1_sum: Rat,
}

/// Splits `R` into a denominator-bounded part `R1 ⊆ D⁻¹·ℤ_{>0}` and an
/// exceptional part `R2` with `|R2| ≤ m + m²`, where `m = ⌈C/eps⌉` and
/// `D = lcm(1..m)`.
///
/// The few-sums hypothesis `|FS(R)+S| ≤ Cn²` is certified through the
/// consequences the argument actually uses, each recomputed exactly:
/// fewer than `m` disjoint greedy blocks of sum in `[T, 2T)` exist among
/// the small elements (hence `Σ R1 ≤ (2m−1)T`), fewer than `m` elements
/// reach `T`, and `|R2| ≤ m + m²`.  Any violated consequence refutes the
/// hypothesis and reports [`Error::HypothesisFailed`], as do violated
/// direct preconditions on `S` and `R`.
pub fn local_to_global(
    r: &ScalarSet,
    s: &SumSet,
    n: u64,
    eps: &Rat,
    c: &Rat,
) -> Result<LocalGlobalSplit> {
    if eps <= &Rat::zero() || c <= &Rat::zero() {
        return Err(Error::InvalidInput("eps and C must be positive".into()));
    }
    if r.len() as u64 > n {
        return Err(Error::HypothesisFailed(format!(
            "|R| = {} exceeds n = {n}",
            r.len()
        )));
    }
    if !r.all_positive()? {
        return Err(Error::HypothesisFailed("R must be positive".into()));
    }
    let n_sq = Rat::from_integer(Int::from(n) * Int::from(n));
    let s_range_cap = &n_sq / eps;
    if s.is_empty() {
        return Err(Error::HypothesisFailed("S must be nonempty".into()));
    }
    let s_min = s.min_value()?.expect("nonempty");
    let s_max = s.max_value()?.expect("nonempty");
    let zero = Scalar::zero();
    if s_min.cmp_certified(&zero)? == std::cmp::Ordering::Less {
        return Err(Error::HypothesisFailed("S must be nonnegative".into()));
    }
    if s_max.cmp_certified(&Scalar::Rational(s_range_cap.clone()))? == std::cmp::Ordering::Greater {
        return Err(Error::HypothesisFailed(format!(
            "max S = {s_max} exceeds eps⁻¹n² = {s_range_cap}"
        )));
    }
    if Rat::from_integer(Int::from(s.len())) < eps * &n_sq {
        return Err(Error::HypothesisFailed(format!(
            "|S| = {} is below eps·n² = {}",
            s.len(),
            eps * &n_sq
        )));
    }
    let m_rat = (c / eps).ceil();
    let m = m_rat.to_integer().to_u64().filter(|&m| m <= M_CAP).ok_or_else(|| {
        Error::BudgetExceeded(format!("m = ⌈C/eps⌉ = {m_rat} exceeds the cap {M_CAP}"))
    })?;
    let m = m.max(1);
    let threshold = &s_range_cap + Rat::one();
    let threshold_scalar = Scalar::Rational(threshold.clone());

    // Partition: big elements, then order violations.
    let mut big = Vec::new();
    let mut small = Vec::new();
    for x in r.sorted_by_value()? {
        if x.cmp_certified(&threshold_scalar)? != std::cmp::Ordering::Less {
            big.push(x);
        } else {
            small.push(x);
        }
    }
    if big.len() as u64 >= m {
        return Err(Error::HypothesisFailed(format!(
            "{} elements reach T = {threshold}; m = {m} refutes the few-sums hypothesis",
            big.len()
        )));
    }
    // Greedy block extraction certifies Σ(small) ≤ (2m−1)T: every element is
    // below T, so each completed block sums into [T, 2T); m disjoint such
    // blocks would refute the hypothesis.
    let mut blocks = 0u32;
    let mut acc = Scalar::zero();
    for x in &small {
        acc = acc.add_same_domain(x);
        if acc.cmp_certified(&threshold_scalar)? != std::cmp::Ordering::Less {
            blocks += 1;
            acc = Scalar::zero();
        }
    }
    if blocks as u64 >= m {
        return Err(Error::HypothesisFailed(format!(
            "extracted {blocks} disjoint subsets with sums in [T, 2T); m = {m} refutes the few-sums hypothesis"
        )));
    }

    let mut r1_vals = Vec::new();
    let mut r2_vals = big;
    for x in small {
        match x.order_mod_one() {
            Some(q) if q <= Int::from(m) => r1_vals.push(x),
            _ => r2_vals.push(x),
        }
    }
    if r2_vals.len() as u64 > m + m * m {
        return Err(Error::HypothesisFailed(format!(
            "|R2| = {} exceeds m + m² = {}",
            r2_vals.len(),
            m + m * m
        )));
    }
    let mut r1_sum = Rat::zero();
    for x in &r1_vals {
        r1_sum += x.as_rational().expect("order-bounded elements are rational");
    }
    let sum_cap = Rat::from_integer(Int::from(2 * m - 1)) * &threshold;
    if r1_sum > sum_cap {
        return Err(Error::HypothesisFailed(format!(
            "Σ R1 = {r1_sum} exceeds (2m−1)T = {sum_cap}"
        )));
    }
    let d = (1..=m).fold(Int::one(), |acc, k| acc.lcm(&Int::from(k)));
    Ok(LocalGlobalSplit {
        r1: ScalarSet::from_dedup(r1_vals)?,
        r2: ScalarSet::from_dedup(r2_vals)?,
        d,
        m,
        threshold,
        blocks,
        r1_sum,
    })
}

/// Verified flags of a decomposition; each is recomputed from the final
/// sets, never trusted from the stages that produced them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecompositionChecks {
    /// `A1 ⊆ r·ℤ_{>0}`.
    pub a1_dilated_integers: bool,
    /// `Σ r⁻¹A1 ≤ D·Σ(a⁻¹A′) + D·(2m−1)·T`.
    pub sum_within_budget: bool,
    /// `|A2| ≤ m + m²`.
    pub a2_within_budget: bool,
    /// `|FS(A)| ≤ (1 + Σ r⁻¹A1) · 2^{|A2|}`.
    pub product_bound: bool,
}

impl DecompositionChecks {
    pub fn all(&self) -> bool {
        self.a1_dilated_integers
            && self.sum_within_budget
            && self.a2_within_budget
            && self.product_bound
    }
}

/// A verified decomposition `A = A1 ⊔ A2` into dilated integers with small
/// normalized sum plus a bounded exceptional part.
#[derive(Debug, Clone)]
pub struct DecompositionReport {
    pub a1: ScalarSet,
    pub a2: ScalarSet,
    /// Positive generator with `A1 ⊆ r·ℤ_{>0}`.
    pub r: Scalar,
    /// `Σ r⁻¹A1`.
    pub normalized_sum: Int,
    /// `|FS(A)|`, recomputed exactly.
    pub fs_size: u64,
    pub m: u64,
    pub d: Int,
    pub checks: DecompositionChecks,
    pub stage_log: Vec<(Stage, String)>,
}

/// Decomposes a positive set with `|FS(A)| ≤ C·n²` into `A1 ⊔ A2` where
/// `A1` consists of dilated integers with bounded normalized sum and `A2`
/// is small.  The hypothesis is verified first ([`Error::HypothesisFailed`]
/// otherwise); stage failures surface as [`Error::PipelineStalled`].
///
/// `eps` for the patch step is derived from the realized subset-sum set of
/// the structured piece: the largest value satisfying both `|S| ≥ eps·n²`
/// and `max S ≤ eps⁻¹·n²`.
pub fn decompose(a: &ScalarSet, c: &Rat, cfg: &PipelineConfig) -> Result<DecompositionReport> {
    let n = a.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty input set".into()));
    }
    if !a.all_positive()? {
        return Err(Error::HypothesisFailed("A must be positive".into()));
    }
    let fs_a = fs_set(a, &cfg.fs)?;
    let fs_size = fs_a.len();
    let n_sq = Rat::from_integer(Int::from(n as u64) * Int::from(n as u64));
    let fs_cap = c * &n_sq;
    if Rat::from_integer(Int::from(fs_size)) > fs_cap {
        return Err(Error::HypothesisFailed(format!(
            "|FS(A)| = {fs_size} exceeds C·n² = {fs_cap}"
        )));
    }

    let piece = piece_of_structure(a, c, cfg)?;
    let mut log = piece.stage_log.clone();
    let gen = &piece.a;

    // Normalized structured piece and its subset sums.
    let mut norm_piece = Vec::with_capacity(piece.a_prime.len());
    let mut piece_norm_sum = Int::zero();
    for x in piece.a_prime.iter() {
        let q = commensurability_ratio(x, gen)?.expect("generator divides the piece");
        piece_norm_sum += q.to_integer();
        norm_piece.push(Scalar::Rational(q));
    }
    let s = fs_set(&ScalarSet::from_dedup(norm_piece)?, &cfg.fs)?;

    // Remainder, normalized where possible; elements incommensurable with
    // the generator would land in the order-violation class anyway, so they
    // go straight to A2 (their quotients are not representable scalars).
    let rest = a.difference(&piece.a_prime);
    let mut r_vals = Vec::new();
    let mut pre_separated = Vec::new();
    for x in rest.iter() {
        match commensurability_ratio(x, gen)? {
            Some(q) => r_vals.push(Scalar::Rational(q)),
            None => pre_separated.push(x.clone()),
        }
    }
    let r_set = ScalarSet::from_dedup(r_vals)?;

    // eps derived from the realized S.
    let s_len = Rat::from_integer(Int::from(s.len()));
    let s_max = s.max_value()?.expect("FS contains 0");
    let s_max_rat = s_max.as_rational().expect("integer sums").clone();
    let eps = if s_max_rat.is_zero() {
        &s_len / &n_sq
    } else {
        (&s_len / &n_sq).min(&n_sq / &s_max_rat)
    };
    let split = local_to_global(&r_set, &s, n as u64, &eps, c)?;
    log.push((
        Stage::LocalToGlobal,
        format!(
            "eps = {eps}, m = {}, D = {}, |R1| = {}, |R2| = {}, {} greedy blocks",
            split.m,
            split.d,
            split.r1.len(),
            split.r2.len(),
            split.blocks
        ),
    ));

    // Assemble the decomposition.
    let scale_back = |q: &Scalar| gen.scale(q.as_rational().expect("normalized remainder"));
    let a1 = piece.a_prime.union(&split.r1.map(scale_back)?)?;
    let mut a2 = split.r2.map(scale_back)?;
    if !pre_separated.is_empty() {
        a2 = a2.union(&ScalarSet::from_dedup(pre_separated)?)?;
    }
    if a1.union(&a2)? != *a || a1.len() + a2.len() != n {
        return Err(Error::PipelineStalled {
            stage: Stage::LocalToGlobal,
            detail: "assembled parts do not partition the input".into(),
        });
    }

    let r = group_generator(a1.elements())?.ok_or_else(|| Error::PipelineStalled {
        stage: Stage::LocalToGlobal,
        detail: "assembled A1 is not commensurable".into(),
    })?;

    // Recompute every conclusion from scratch.
    let mut a1_dilated = true;
    let mut normalized_sum = Int::zero();
    for x in a1.iter() {
        match commensurability_ratio(x, &r)? {
            Some(q) if q.is_integer() && q.is_positive() => normalized_sum += q.to_integer(),
            _ => a1_dilated = false,
        }
    }
    let sum_budget = Rat::from_integer(split.d.clone())
        * (Rat::from_integer(piece_norm_sum)
            + Rat::from_integer(Int::from(2 * split.m - 1)) * &split.threshold);
    let checks = DecompositionChecks {
        a1_dilated_integers: a1_dilated,
        sum_within_budget: Rat::from_integer(normalized_sum.clone()) <= sum_budget,
        a2_within_budget: (a2.len() as u64) <= split.m + split.m * split.m,
        product_bound: {
            let bound = (Int::one() + &normalized_sum)
                * Int::from(2).pow(a2.len().try_into().expect("small A2"));
            Int::from(fs_size) <= bound
        },
    };
    Ok(DecompositionReport {
        a1,
        a2,
        r,
        normalized_sum,
        fs_size,
        m: split.m,
        d: split.d,
        checks,
        stage_log: log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, FormalBasis};
    

    fn range_set(lo: i64, hi: i64, step: i64) -> ScalarSet {
        let vals: Vec<i64> = (lo..=hi).step_by(step as usize).collect();
        ScalarSet::from_ints(&vals).unwrap()
    }

    /// `count` formally independent positive reals.
    fn generic_formals(count: usize) -> ScalarSet {
        let symbols: Vec<String> = (0..count).map(|k| format!("g{k}")).collect();
        // Distinct, well-separated approximations keep every certified
        // comparison decisive.
        let approx: Vec<Rat> = (0..count).map(|k| rat(3 * k as i64 + 2, 2)).collect();
        let err: Vec<Rat> = (0..count).map(|_| rat(1, 1_000_000)).collect();
        let basis = FormalBasis::new(symbols, approx, err).unwrap();
        let elems: Vec<Scalar> = (0..count)
            .map(|k| {
                let mut coords = vec![rat(0, 1); count];
                coords[k] = rat(1, 1);
                Scalar::formal(&basis, rat(0, 1), coords).unwrap()
            })
            .collect();
        ScalarSet::from_dedup(elems).unwrap()
    }

    /// `{1, …, hi} ∪ {α, 2α}` over a declared √2-like formal symbol.
    fn ints_plus_alpha(hi: i64) -> (ScalarSet, Scalar) {
        let basis =
            FormalBasis::new(vec!["a".into()], vec![rat(577, 408)], vec![rat(1, 1_000_000)])
                .unwrap();
        let alpha = Scalar::formal(&basis, rat(0, 1), vec![rat(1, 1)]).unwrap();
        let mut elems: Vec<Scalar> = (1..=hi).map(Scalar::from_int).collect();
        elems.push(alpha.clone());
        elems.push(alpha.scale(&rat(2, 1)));
        (ScalarSet::from_dedup(elems).unwrap(), alpha)
    }

    #[test]
    fn scan_examples() {
        let cfg = FsConfig::default();
        // {1..20}: every prefix qualifies; the largest certified one is 19.
        let a = range_set(1, 20, 1);
        let prefix = small_doubling_scan(&a, &rat(1, 2), &rat(1, 1), &cfg).unwrap();
        assert_eq!(prefix, range_set(1, 19, 1));
        let doubling = sumset(&prefix, &prefix).unwrap();
        assert_eq!(doubling.len(), 2 * 19 - 1);

        // Trivial branch: n < 1/delta.
        let a = ScalarSet::from_ints(&[7]).unwrap();
        assert_eq!(small_doubling_scan(&a, &rat(1, 2), &rat(1, 1), &cfg).unwrap(), a);

        // Generic formals double at every step: no qualifying index.
        let a = generic_formals(12);
        assert_eq!(
            small_doubling_scan(&a, &rat(1, 2), &rat(1, 1), &cfg).unwrap_err(),
            Error::NoIndexFound
        );

        // Positivity is certified.
        let a = ScalarSet::from_ints(&[0, 1]).unwrap();
        assert!(matches!(
            small_doubling_scan(&a, &rat(1, 2), &rat(1, 1), &cfg),
            Err(Error::NonPositiveElement(_))
        ));
    }

    #[test]
    fn cover_examples() {
        let k = rat(6, 1);
        // An interval: rank-1 cover with difference 1.
        let b = range_set(1, 10, 1);
        let cover = gap_cover_search(&b, 3, &k, 128).unwrap().unwrap();
        assert_eq!(cover.gap.rank(), 1);
        assert_eq!(cover.gap.diffs(), &[Scalar::one()]);
        assert_eq!(cover.gap.half_sides(), &[5]);
        assert_eq!(cover.center, Scalar::from_int(5));
        assert!(cover.gap.is_proper());
        // Coverage: every centered element lifts.
        assert!(crate::gap::gap_lift(&cover.gap, &cover.centered(&b).unwrap()).is_ok());

        // Three shifted blocks: positional refinement finds a rank-2 cover.
        let b = ScalarSet::from_ints(&[1, 2, 3, 11, 12, 13, 21, 22, 23]).unwrap();
        let cover = gap_cover_search(&b, 3, &k, 128).unwrap().unwrap();
        assert_eq!(cover.gap.rank(), 2);
        assert_eq!(cover.gap.diffs(), &[Scalar::one(), Scalar::from_int(10)]);
        assert_eq!(cover.gap.half_sides(), &[1, 1]);
        assert_eq!(cover.center, Scalar::from_int(12));
        assert!(crate::gap::gap_lift(&cover.gap, &cover.centered(&b).unwrap()).is_ok());

        // Too many independent directions: no small cover exists.
        let b = generic_formals(10);
        assert!(gap_cover_search(&b, 2, &k, 128).unwrap().is_none());

        // Budget exhaustion: the refinement that fits is never examined.
        let b = ScalarSet::from_ints(&[1, 2, 3, 1001, 1002, 1003]).unwrap();
        assert!(gap_cover_search(&b, 3, &k, 0).unwrap().is_none());
        let cover = gap_cover_search(&b, 3, &k, 4).unwrap().unwrap();
        assert_eq!(cover.gap.diffs(), &[Scalar::one(), Scalar::from_int(1000)]);
        assert_eq!(cover.gap.half_sides(), &[1, 1]);
        assert_eq!(cover.center, Scalar::from_int(2));
    }

    #[test]
    fn piece_examples() {
        let cfg = PipelineConfig::default();
        // An interval: the piece is a large sub-prefix with a = 1.
        let piece = piece_of_structure(&range_set(1, 20, 1), &rat(1, 1), &cfg).unwrap();
        assert_eq!(piece.a, Scalar::one());
        assert_eq!(piece.a_prime, range_set(1, 19, 1));
        assert_eq!(piece.realized_density, rat(19, 20));
        assert_eq!(piece.realized_span, rat(19, 20));

        // Dilation equivariance: doubling the set doubles the generator.
        let piece = piece_of_structure(&range_set(2, 40, 2), &rat(1, 1), &cfg).unwrap();
        assert_eq!(piece.a, Scalar::from_int(2));
        assert_eq!(piece.a_prime, range_set(2, 38, 2));

        // Generic formals pass the scan at small size but admit no
        // low-rank cover.
        let err = piece_of_structure(&generic_formals(8), &rat(1, 1), &cfg).unwrap_err();
        assert!(matches!(err, Error::PipelineStalled { stage: Stage::GapCover, .. }));
    }

    #[test]
    fn local_to_global_examples() {
        let s = fs_set(&range_set(1, 13, 1), &FsConfig::default()).unwrap();
        assert_eq!(s.len(), 92); // {0..91}
        let r = ScalarSet::from_dedup(vec![
            Scalar::parse_rational("1/2").unwrap(),
            Scalar::parse_rational("1/3").unwrap(),
            Scalar::from_int(7),
            Scalar::from_int(1_000_000),
        ])
        .unwrap();
        let split = local_to_global(&r, &s, 6, &rat(1, 3), &rat(1, 1)).unwrap();
        assert_eq!(split.m, 3);
        assert_eq!(split.d, Int::from(6));
        assert_eq!(split.threshold, rat(109, 1));
        let expected_r1 = ScalarSet::from_dedup(vec![
            Scalar::parse_rational("1/3").unwrap(),
            Scalar::parse_rational("1/2").unwrap(),
            Scalar::from_int(7),
        ])
        .unwrap();
        assert_eq!(split.r1, expected_r1);
        assert_eq!(split.r2, ScalarSet::from_ints(&[1_000_000]).unwrap());
        assert_eq!(split.blocks, 0);
        assert_eq!(split.r1_sum, rat(47, 6));

        // Empty R splits trivially.
        let split = local_to_global(&ScalarSet::empty(), &s, 6, &rat(1, 3), &rat(1, 1)).unwrap();
        assert!(split.r1.is_empty() && split.r2.is_empty());
        assert_eq!(split.d, Int::from(6));

        // An irrational element has unbounded order and lands in R2.
        let (_, alpha) = ints_plus_alpha(1);
        let r = ScalarSet::from_dedup(vec![alpha.clone()]).unwrap();
        let split = local_to_global(&r, &s, 6, &rat(1, 3), &rat(1, 1)).unwrap();
        assert!(split.r1.is_empty());
        assert_eq!(split.r2.len(), 1);

        // Refutation: many mid-sized elements force m greedy blocks.
        let s = fs_set(&range_set(1, 7, 1), &FsConfig::default()).unwrap();
        let r = ScalarSet::from_ints(&[20, 21, 22, 25]).unwrap();
        let err = local_to_global(&r, &s, 4, &rat(1, 2), &rat(1, 1)).unwrap_err();
        assert!(matches!(err, Error::HypothesisFailed(_)), "got {err:?}");
    }

    #[test]
    fn decompose_integers_plus_formal_pair() {
        let (a, alpha) = ints_plus_alpha(30);
        let report = decompose(&a, &rat(2, 1), &PipelineConfig::default()).unwrap();
        assert_eq!(report.a1, range_set(1, 30, 1));
        assert_eq!(report.a2.len(), 2);
        assert!(report.a2.contains(&alpha));
        assert!(report.a2.contains(&alpha.scale(&rat(2, 1))));
        assert_eq!(report.r, Scalar::one());
        assert_eq!(report.normalized_sum, Int::from(465));
        assert_eq!(report.fs_size, 1864); // 466·4: the product bound is tight
        assert_eq!(report.m, 5);
        assert_eq!(report.d, Int::from(60));
        assert!(report.checks.all());
    }

    #[test]
    fn decompose_pure_arithmetic_progression() {
        let a = range_set(2, 60, 2);
        let report = decompose(&a, &rat(1, 1), &PipelineConfig::default()).unwrap();
        assert_eq!(report.a1, a);
        assert!(report.a2.is_empty());
        assert_eq!(report.r, Scalar::from_int(2));
        assert_eq!(report.normalized_sum, Int::from(465));
        assert_eq!(report.fs_size, 466);
        assert!(report.checks.all());
    }

    #[test]
    fn decompose_rejects_generic_sets() {
        // 2^6 = 64 > 1·6².
        let err = decompose(&generic_formals(6), &rat(1, 1), &PipelineConfig::default())
            .unwrap_err();
        assert!(matches!(err, Error::HypothesisFailed(_)));
    }

    #[test]
    fn decompose_is_dilation_equivariant() {
        let cfg = PipelineConfig::default();
        let base = decompose(&range_set(2, 60, 2), &rat(1, 1), &cfg).unwrap();
        let scaled_input = range_set(2, 60, 2).map(|s| s.scale(&rat(3, 2))).unwrap();
        let scaled = decompose(&scaled_input, &rat(1, 1), &cfg).unwrap();
        assert_eq!(scaled.a1, base.a1.map(|s| s.scale(&rat(3, 2))).unwrap());
        assert_eq!(scaled.a2, base.a2.map(|s| s.scale(&rat(3, 2))).unwrap());
        assert_eq!(scaled.r, base.r.scale(&rat(3, 2)));
        assert_eq!(scaled.normalized_sum, base.normalized_sum);
        assert_eq!(scaled.checks, base.checks);
    }
}
