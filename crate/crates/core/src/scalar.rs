//! Exact ground domains for set elements.
//!
//! Two kinds of scalar are supported.  A [`Scalar::Rational`] is an
//! arbitrary-precision rational in lowest terms.  A [`Scalar::Formal`] is a
//! ℚ-linear combination `c₀·1 + c₁·α₁ + … + c_k·α_k` over a declared
//! [`FormalBasis`] `(1, α₁, …, α_k)` whose elements are treated as linearly
//! independent over ℚ; equality and all ring operations act coordinatewise
//! and are therefore exact.  Order comparisons are the only place where the
//! numeric values of the basis elements matter: each `α_j` carries a rational
//! approximation with an error bound, and a comparison succeeds only when the
//! accumulated error budget certifies the sign of the difference
//! ([`Error::UncertifiedComparison`] otherwise).
//!
//! A [`Scalar::Formal`] is normalised to have at least one nonzero basis
//! coordinate; combinations supported on the unit alone collapse to
//! [`Scalar::Rational`].  This makes equality across the two variants
//! structural.

use std::cmp::Ordering;
use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Int = num_bigint::BigInt;
pub type Rat = num_rational::BigRational;

/// Convenience constructors for small constants.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(Int::from(n), Int::from(d))
}

pub fn int_rat(n: i64) -> Rat {
    Rat::from_integer(Int::from(n))
}

/// A declared basis `(1, α₁, …, α_k)` of formally independent reals.
///
/// `approx[j]` and `err[j]` certify `|α_j − approx[j]| ≤ err[j]`.  The basis
/// carries a content fingerprint so that scalars can be hashed and compared
/// cheaply; two bases are the same domain iff their symbols, approximations
/// and error bounds all agree.
#[derive(Debug)]
pub struct FormalBasis {
    symbols: Vec<String>,
    approx: Vec<Rat>,
    err: Vec<Rat>,
    fingerprint: u64,
}

impl FormalBasis {
    pub fn new(symbols: Vec<String>, approx: Vec<Rat>, err: Vec<Rat>) -> Result<Arc<Self>> {
        if symbols.is_empty() || symbols.len() != approx.len() || symbols.len() != err.len() {
            return Err(Error::InvalidInput(
                "basis symbols, approximations and error bounds must have equal nonzero length"
                    .into(),
            ));
        }
        if err.iter().any(|e| e.is_negative()) {
            return Err(Error::InvalidInput("error bounds must be nonnegative".into()));
        }
        let mut dup = symbols.clone();
        dup.sort();
        dup.dedup();
        if dup.len() != symbols.len() {
            return Err(Error::DuplicateElement("repeated basis symbol".into()));
        }
        let mut h = DefaultHasher::new();
        for (s, (a, e)) in symbols.iter().zip(approx.iter().zip(err.iter())) {
            s.hash(&mut h);
            a.hash(&mut h);
            e.hash(&mut h);
        }
        let fingerprint = h.finish();
        Ok(Arc::new(FormalBasis { symbols, approx, err, fingerprint }))
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn approx(&self) -> &[Rat] {
        &self.approx
    }

    pub fn err(&self) -> &[Rat] {
        &self.err
    }
}

impl PartialEq for FormalBasis {
    fn eq(&self, other: &Self) -> bool {
        self.fingerprint == other.fingerprint
            && self.symbols == other.symbols
            && self.approx == other.approx
            && self.err == other.err
    }
}

impl Eq for FormalBasis {}

impl Hash for FormalBasis {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.fingerprint);
    }
}

/// `unit + Σ coords[j]·α_j` with at least one nonzero coordinate.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FormalReal {
    basis: Arc<FormalBasis>,
    unit: Rat,
    coords: Vec<Rat>,
}

impl FormalReal {
    pub fn basis(&self) -> &Arc<FormalBasis> {
        &self.basis
    }

    pub fn unit(&self) -> &Rat {
        &self.unit
    }

    pub fn coords(&self) -> &[Rat] {
        &self.coords
    }

    /// Midpoint of the certified interval containing the value.
    pub fn approx_value(&self) -> Rat {
        let mut v = self.unit.clone();
        for (c, a) in self.coords.iter().zip(self.basis.approx.iter()) {
            v += c * a;
        }
        v
    }

    /// Radius of the certified interval containing the value.
    pub fn approx_error(&self) -> Rat {
        let mut e = Rat::zero();
        for (c, err) in self.coords.iter().zip(self.basis.err.iter()) {
            e += c.abs() * err;
        }
        e
    }
}

/// An exact scalar: rational, or a formal combination over a declared basis.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Scalar {
    Rational(Rat),
    Formal(FormalReal),
}

impl Scalar {
    pub fn from_int(n: i64) -> Self {
        Scalar::Rational(int_rat(n))
    }

    pub fn from_rat(r: Rat) -> Self {
        Scalar::Rational(r)
    }

    /// Builds `unit + Σ coords[j]·α_j`, collapsing to the rational variant
    /// when every basis coordinate vanishes.
    pub fn formal(basis: &Arc<FormalBasis>, unit: Rat, coords: Vec<Rat>) -> Result<Self> {
        if coords.len() != basis.len() {
            return Err(Error::DimensionMismatch { expected: basis.len(), got: coords.len() });
        }
        if coords.iter().all(|c| c.is_zero()) {
            return Ok(Scalar::Rational(unit));
        }
        Ok(Scalar::Formal(FormalReal { basis: Arc::clone(basis), unit, coords }))
    }

    pub fn zero() -> Self {
        Scalar::Rational(Rat::zero())
    }

    pub fn one() -> Self {
        Scalar::Rational(Rat::one())
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Scalar::Rational(r) if r.is_zero())
    }

    pub fn is_rational(&self) -> bool {
        matches!(self, Scalar::Rational(_))
    }

    pub fn as_rational(&self) -> Option<&Rat> {
        match self {
            Scalar::Rational(r) => Some(r),
            Scalar::Formal(_) => None,
        }
    }

    /// The basis of the formal variant, if any.
    pub fn formal_basis(&self) -> Option<&Arc<FormalBasis>> {
        match self {
            Scalar::Rational(_) => None,
            Scalar::Formal(f) => Some(f.basis()),
        }
    }

    /// True when both operands may appear in one ground domain: rationals mix
    /// with everything, formal values must share their basis.
    pub fn same_domain(&self, other: &Scalar) -> bool {
        match (self.formal_basis(), other.formal_basis()) {
            (Some(a), Some(b)) => a == b,
            _ => true,
        }
    }

    /// Coordinate vector `(unit, c₁, …, c_k)` over the given basis length.
    /// Rational scalars embed as `(r, 0, …, 0)`.
    pub fn coord_vector(&self, basis_len: usize) -> Vec<Rat> {
        let mut v = vec![Rat::zero(); basis_len + 1];
        match self {
            Scalar::Rational(r) => v[0] = r.clone(),
            Scalar::Formal(f) => {
                v[0] = f.unit.clone();
                for (slot, c) in v[1..].iter_mut().zip(f.coords.iter()) {
                    *slot = c.clone();
                }
            }
        }
        v
    }

    pub fn checked_add(&self, other: &Scalar) -> Result<Scalar> {
        if !self.same_domain(other) {
            return Err(Error::DomainMismatch);
        }
        Ok(self.add_same_domain(other))
    }

    pub fn checked_sub(&self, other: &Scalar) -> Result<Scalar> {
        self.checked_add(&other.neg())
    }

    /// Addition for operands already known to share a domain.
    pub(crate) fn add_same_domain(&self, other: &Scalar) -> Scalar {
        match (self, other) {
            (Scalar::Rational(a), Scalar::Rational(b)) => Scalar::Rational(a + b),
            (Scalar::Rational(a), Scalar::Formal(f)) | (Scalar::Formal(f), Scalar::Rational(a)) => {
                Scalar::Formal(FormalReal {
                    basis: Arc::clone(&f.basis),
                    unit: &f.unit + a,
                    coords: f.coords.clone(),
                })
            }
            (Scalar::Formal(a), Scalar::Formal(b)) => {
                debug_assert!(a.basis == b.basis, "domains must match");
                let unit = &a.unit + &b.unit;
                let coords: Vec<Rat> =
                    a.coords.iter().zip(b.coords.iter()).map(|(x, y)| x + y).collect();
                if coords.iter().all(|c| c.is_zero()) {
                    Scalar::Rational(unit)
                } else {
                    Scalar::Formal(FormalReal { basis: Arc::clone(&a.basis), unit, coords })
                }
            }
        }
    }

    pub(crate) fn sub_same_domain(&self, other: &Scalar) -> Scalar {
        self.add_same_domain(&other.neg())
    }

    pub fn neg(&self) -> Scalar {
        self.scale(&-Rat::one())
    }

    /// Multiplies by a rational factor.
    pub fn scale(&self, factor: &Rat) -> Scalar {
        if factor.is_zero() {
            return Scalar::zero();
        }
        match self {
            Scalar::Rational(r) => Scalar::Rational(r * factor),
            Scalar::Formal(f) => Scalar::Formal(FormalReal {
                basis: Arc::clone(&f.basis),
                unit: &f.unit * factor,
                coords: f.coords.iter().map(|c| c * factor).collect(),
            }),
        }
    }

    /// Divides by a nonzero rational factor.
    pub fn div_rat(&self, factor: &Rat) -> Result<Scalar> {
        if factor.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(self.scale(&factor.recip()))
    }

    /// Certified order comparison.  Exact for rationals; for formal values the
    /// sign of the difference must clear the accumulated approximation error.
    pub fn cmp_certified(&self, other: &Scalar) -> Result<Ordering> {
        if !self.same_domain(other) {
            return Err(Error::DomainMismatch);
        }
        let diff = self.sub_same_domain(other);
        match diff {
            Scalar::Rational(r) => Ok(r.cmp(&Rat::zero())),
            Scalar::Formal(f) => {
                let value = f.approx_value();
                let budget = f.approx_error();
                if value > budget {
                    Ok(Ordering::Greater)
                } else if value < -budget.clone() {
                    Ok(Ordering::Less)
                } else {
                    Err(Error::UncertifiedComparison)
                }
            }
        }
    }

    pub fn is_positive_certified(&self) -> Result<bool> {
        Ok(self.cmp_certified(&Scalar::zero())? == Ordering::Greater)
    }

    /// Structural total order: refines equality, is stable under no numeric
    /// assumptions, and coincides with the value order on rationals.  Formal
    /// values sort after rationals, then by basis fingerprint, unit, coords.
    pub fn structural_cmp(&self, other: &Scalar) -> Ordering {
        match (self, other) {
            (Scalar::Rational(a), Scalar::Rational(b)) => a.cmp(b),
            (Scalar::Rational(_), Scalar::Formal(_)) => Ordering::Less,
            (Scalar::Formal(_), Scalar::Rational(_)) => Ordering::Greater,
            (Scalar::Formal(a), Scalar::Formal(b)) => a
                .basis
                .fingerprint
                .cmp(&b.basis.fingerprint)
                .then_with(|| a.unit.cmp(&b.unit))
                .then_with(|| a.coords.cmp(&b.coords)),
        }
    }

    /// For a rational `p/q` in lowest terms, the additive order of its residue
    /// modulo 1, i.e. `q`.  `None` for formal (irrational) values.
    pub fn order_mod_one(&self) -> Option<Int> {
        self.as_rational().map(|r| r.denom().clone())
    }

    /// Parses the `p/q` / `p` text form of a rational scalar.
    pub fn parse_rational(text: &str) -> Result<Scalar> {
        let trimmed = text.trim();
        let r: Rat = trimmed
            .parse()
            .map_err(|_| Error::InvalidInput(format!("not a rational scalar: {trimmed:?}")))?;
        Ok(Scalar::Rational(r))
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Rational(r) => write!(f, "{r}"),
            Scalar::Formal(fr) => {
                write!(f, "{}", fr.unit)?;
                for (c, s) in fr.coords.iter().zip(fr.basis.symbols.iter()) {
                    if !c.is_zero() {
                        write!(f, " + ({c})·{s}")?;
                    }
                }
                Ok(())
            }
        }
    }
}

/// Certified order comparison of two scalars in a shared ground domain.
pub fn compare(x: &Scalar, y: &Scalar) -> Result<Ordering> {
    x.cmp_certified(y)
}

/// `Some(x / y)` as an exact rational when `x` and `y` generate the same
/// one-dimensional ℚ-subspace; `None` when the ratio is irrational.
pub fn commensurability_ratio(x: &Scalar, y: &Scalar) -> Result<Option<Rat>> {
    if y.is_zero() {
        return Err(Error::DivisionByZero);
    }
    if !x.same_domain(y) {
        return Err(Error::DomainMismatch);
    }
    if x.is_zero() {
        return Ok(Some(Rat::zero()));
    }
    let len = x
        .formal_basis()
        .or_else(|| y.formal_basis())
        .map(|b| b.len())
        .unwrap_or(0);
    let xv = x.coord_vector(len);
    let yv = y.coord_vector(len);
    let pivot = yv.iter().position(|c| !c.is_zero()).expect("nonzero scalar");
    if xv[pivot].is_zero() {
        return Ok(None);
    }
    let ratio = &xv[pivot] / &yv[pivot];
    for (a, b) in xv.iter().zip(yv.iter()) {
        if *a != b * &ratio {
            return Ok(None);
        }
    }
    Ok(Some(ratio))
}

/// The largest `a > 0` with every `x ∈ xs` an integer multiple of `a`, when
/// the `xs` are pairwise commensurable; `None` otherwise.  The quotients
/// `xs/a` are then coprime integers.
///
/// All inputs must be nonzero.  For formal inputs the sign of the generator
/// is fixed by a certified comparison, so an inadequate declared
/// approximation can surface as [`Error::UncertifiedComparison`].
pub fn group_generator(xs: &[Scalar]) -> Result<Option<Scalar>> {
    if xs.is_empty() {
        return Err(Error::InvalidInput("group generator of an empty set".into()));
    }
    if xs.iter().any(|x| x.is_zero()) {
        return Err(Error::ZeroElement);
    }
    let base = &xs[0];
    let mut ratios = Vec::with_capacity(xs.len());
    for x in xs {
        match commensurability_ratio(x, base)? {
            Some(r) => ratios.push(r),
            None => return Ok(None),
        }
    }
    // gcd over ℚ: gcd of numerators over lcm of denominators.
    let mut num_gcd = Int::zero();
    let mut den_lcm = Int::one();
    for r in &ratios {
        num_gcd = num_integer::Integer::gcd(&num_gcd, r.numer());
        den_lcm = num_integer::Integer::lcm(&den_lcm, r.denom());
    }
    let g = Rat::new(num_gcd, den_lcm);
    let candidate = base.scale(&g);
    let a = if candidate.is_positive_certified()? { candidate } else { candidate.neg() };
    Ok(Some(a))
}

/// The ground domain of a scalar collection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Domain {
    Rational,
    Formal(Arc<FormalBasis>),
}

/// A finite set of scalars from one ground domain, kept in structural order
/// (which is the value order whenever the elements are rational).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScalarSet {
    domain: Domain,
    elems: Vec<Scalar>,
}

impl ScalarSet {
    /// Builds a set, rejecting duplicates and mixed domains.
    pub fn new(elems: Vec<Scalar>) -> Result<Self> {
        let domain = Self::infer_domain(&elems)?;
        let mut sorted = elems;
        sorted.sort_by(|a, b| a.structural_cmp(b));
        for w in sorted.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateElement(w[0].to_string()));
            }
        }
        Ok(ScalarSet { domain, elems: sorted })
    }

    /// Builds a set from values that may repeat (repeats are merged).
    pub fn from_dedup(elems: Vec<Scalar>) -> Result<Self> {
        let domain = Self::infer_domain(&elems)?;
        let mut sorted = elems;
        sorted.sort_by(|a, b| a.structural_cmp(b));
        sorted.dedup();
        Ok(ScalarSet { domain, elems: sorted })
    }

    fn infer_domain(elems: &[Scalar]) -> Result<Domain> {
        let mut domain = Domain::Rational;
        for e in elems {
            if let Some(b) = e.formal_basis() {
                match &domain {
                    Domain::Rational => domain = Domain::Formal(Arc::clone(b)),
                    Domain::Formal(existing) => {
                        if existing != b {
                            return Err(Error::DomainMismatch);
                        }
                    }
                }
            }
        }
        Ok(domain)
    }

    pub fn empty() -> Self {
        ScalarSet { domain: Domain::Rational, elems: Vec::new() }
    }

    pub fn from_ints(values: &[i64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| Scalar::from_int(v)).collect())
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Scalar> {
        self.elems.iter()
    }

    pub fn elements(&self) -> &[Scalar] {
        &self.elems
    }

    pub fn contains(&self, x: &Scalar) -> bool {
        self.elems.binary_search_by(|e| e.structural_cmp(x)).is_ok()
    }

    /// Elements in certified increasing value order.
    pub fn sorted_by_value(&self) -> Result<Vec<Scalar>> {
        let mut v = self.elems.clone();
        let mut err = None;
        v.sort_by(|a, b| match a.cmp_certified(b) {
            Ok(o) => o,
            Err(e) => {
                err = Some(e);
                Ordering::Equal
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }

    pub fn all_positive(&self) -> Result<bool> {
        for e in &self.elems {
            if !e.is_positive_certified()? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Set difference (`self \ other`), assuming a shared domain.
    pub fn difference(&self, other: &ScalarSet) -> ScalarSet {
        let elems: Vec<Scalar> =
            self.elems.iter().filter(|e| !other.contains(e)).cloned().collect();
        ScalarSet { domain: self.domain.clone(), elems }
    }

    /// Set union, assuming a shared domain.
    pub fn union(&self, other: &ScalarSet) -> Result<ScalarSet> {
        let mut elems = self.elems.clone();
        elems.extend(other.elems.iter().cloned());
        ScalarSet::from_dedup(elems)
    }

    /// Applies `f` to every element and rebuilds the set.
    pub fn map(&self, f: impl Fn(&Scalar) -> Scalar) -> Result<ScalarSet> {
        ScalarSet::new(self.elems.iter().map(f).collect())
    }
}

impl fmt::Display for ScalarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, e) in self.elems.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sqrt2_basis() -> Arc<FormalBasis> {
        // 577/408 is a continued-fraction convergent of √2; the error bound is
        // generous but certified.
        FormalBasis::new(
            vec!["a".into()],
            vec![rat(577, 408)],
            vec![rat(1, 10_000)],
        )
        .unwrap()
    }

    #[test]
    fn rational_compare_is_exact() {
        let x = Scalar::parse_rational("3/2").unwrap();
        let y = Scalar::parse_rational("10/7").unwrap();
        assert_eq!(compare(&x, &y).unwrap(), Ordering::Greater);
        assert_eq!(compare(&y, &x).unwrap(), Ordering::Less);
        assert_eq!(compare(&x, &x).unwrap(), Ordering::Equal);
    }

    #[test]
    fn formal_compare_uses_certified_interval() {
        let b = sqrt2_basis();
        let one = Scalar::one();
        let alpha = Scalar::formal(&b, Rat::zero(), vec![Rat::one()]).unwrap();
        // 1 < √2 is certifiable with the declared approximation.
        assert_eq!(compare(&one, &alpha).unwrap(), Ordering::Less);
        // √2 vs its own approximation is not certifiable: the difference is
        // within the declared error bound.
        let approx = Scalar::Rational(rat(577, 408));
        assert_eq!(compare(&alpha, &approx), Err(Error::UncertifiedComparison));
    }

    #[test]
    fn formal_arithmetic_collapses_to_rational() {
        let b = sqrt2_basis();
        let alpha = Scalar::formal(&b, Rat::zero(), vec![Rat::one()]).unwrap();
        let x = alpha.checked_add(&Scalar::one()).unwrap();
        let y = x.sub_same_domain(&alpha);
        assert_eq!(y, Scalar::one());
        assert!(y.is_rational());
    }

    #[test]
    fn commensurability_ratio_examples() {
        let x = Scalar::parse_rational("3/2").unwrap();
        let y = Scalar::parse_rational("9/4").unwrap();
        assert_eq!(commensurability_ratio(&x, &y).unwrap(), Some(rat(2, 3)));

        let b = sqrt2_basis();
        let alpha = Scalar::formal(&b, Rat::zero(), vec![Rat::one()]).unwrap();
        let two_alpha = alpha.scale(&int_rat(2));
        assert_eq!(commensurability_ratio(&two_alpha, &alpha).unwrap(), Some(int_rat(2)));
        assert_eq!(commensurability_ratio(&alpha, &Scalar::one()).unwrap(), None);
        assert_eq!(
            commensurability_ratio(&alpha, &Scalar::zero()),
            Err(Error::DivisionByZero)
        );
    }

    #[test]
    fn group_generator_examples() {
        let xs = vec![Scalar::parse_rational("3/2").unwrap(), Scalar::parse_rational("9/4").unwrap()];
        let g = group_generator(&xs).unwrap().unwrap();
        assert_eq!(g, Scalar::Rational(rat(3, 4)));

        let ints = ScalarSet::from_ints(&[2, 4, 6]).unwrap();
        let g = group_generator(ints.elements()).unwrap().unwrap();
        assert_eq!(g, Scalar::from_int(2));

        let b = sqrt2_basis();
        let alpha = Scalar::formal(&b, Rat::zero(), vec![Rat::one()]).unwrap();
        assert_eq!(group_generator(&[Scalar::one(), alpha.clone()]).unwrap(), None);

        // A purely formal commensurable family has a formal generator.
        let g = group_generator(&[alpha.scale(&int_rat(2)), alpha.scale(&int_rat(3))])
            .unwrap()
            .unwrap();
        assert_eq!(g, alpha);
    }

    #[test]
    fn group_generator_quotients_are_coprime_integers() {
        let xs = vec![
            Scalar::parse_rational("4/3").unwrap(),
            Scalar::parse_rational("2").unwrap(),
            Scalar::parse_rational("10/3").unwrap(),
        ];
        let g = group_generator(&xs).unwrap().unwrap();
        let gr = g.as_rational().unwrap().clone();
        let mut quotients = Vec::new();
        for x in &xs {
            let q = x.as_rational().unwrap() / &gr;
            assert!(q.is_integer());
            quotients.push(q.to_integer());
        }
        let mut gcd = Int::zero();
        for q in &quotients {
            gcd = num_integer::Integer::gcd(&gcd, q);
        }
        assert_eq!(gcd, Int::one());
    }

    #[test]
    fn scalar_set_rejects_duplicates_and_mixed_domains() {
        let err = ScalarSet::from_ints(&[1, 2, 2]).unwrap_err();
        assert!(matches!(err, Error::DuplicateElement(_)));

        let b1 = sqrt2_basis();
        let b2 = FormalBasis::new(vec!["b".into()], vec![rat(433, 250)], vec![rat(1, 1000)])
            .unwrap();
        let x = Scalar::formal(&b1, Rat::zero(), vec![Rat::one()]).unwrap();
        let y = Scalar::formal(&b2, Rat::zero(), vec![Rat::one()]).unwrap();
        assert_eq!(ScalarSet::new(vec![x, y]).unwrap_err(), Error::DomainMismatch);
    }

    #[test]
    fn parse_and_display_round_trip() {
        for text in ["0", "5", "-7", "3/2", "-11/4"] {
            let s = Scalar::parse_rational(text).unwrap();
            assert_eq!(s.to_string(), text);
        }
        // Non-canonical input parses to the reduced form.
        let s = Scalar::parse_rational("6/4").unwrap();
        assert_eq!(s.to_string(), "3/2");
    }
}
