//! Short Weierstrass curves y^2 = x^3 + ax + b over F_{p^k}, p >= 5.
//!
//! Counting is exhaustive (with the Euler criterion folded into a square
//! table), traces over extensions come from the usual second-order
//! recurrence, and torsion bases are found by deterministic sampling:
//! x-coordinates are tried in canonical field order and pushed into the
//! n-primary component with a cofactor multiple, so repeated runs always
//! build the same basis.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::finite_fields::{sqrt_in_field, ExtField, FieldElement, ENUMERATION_BOUND};

struct CurveInner {
    field: ExtField,
    a: FieldElement,
    b: FieldElement,
}

/// An elliptic curve in short Weierstrass form, cheap to clone.
#[derive(Clone)]
pub struct Curve {
    inner: Arc<CurveInner>,
}

impl Curve {
    pub fn new(field: ExtField, a: FieldElement, b: FieldElement) -> Result<Curve> {
        if field.p() < 5 {
            return Err(Error::SmallCharacteristic(field.p()));
        }
        assert!(a.field() == &field && b.field() == &field, "coefficients from wrong field");
        // 4a^3 + 27b^2 != 0
        let disc = &(&field.from_u64(4) * &a.mul(&a.square()))
            + &(&field.from_u64(27) * &b.square());
        if disc.is_zero() {
            return Err(Error::SingularCurve);
        }
        Ok(Curve { inner: Arc::new(CurveInner { field, a, b }) })
    }

    /// Curve with small integer coefficients over F_{p^k}.
    pub fn from_i64(field: &ExtField, a: i64, b: i64) -> Result<Curve> {
        Curve::new(field.clone(), field.from_i64(a), field.from_i64(b))
    }

    pub fn field(&self) -> &ExtField {
        &self.inner.field
    }

    pub fn a(&self) -> &FieldElement {
        &self.inner.a
    }

    pub fn b(&self) -> &FieldElement {
        &self.inner.b
    }

    pub fn p(&self) -> u64 {
        self.inner.field.p()
    }

    /// x^3 + ax + b.
    pub fn rhs(&self, x: &FieldElement) -> FieldElement {
        &(&x.mul(&x.square()) + &(&self.inner.a * x)) + &self.inner.b
    }

    pub fn j_invariant(&self) -> FieldElement {
        let f = &self.inner.field;
        let a3 = self.inner.a.mul(&self.inner.a.square());
        let num = &f.from_u64(1728 % f.p()) * &(&f.from_u64(4) * &a3);
        let den = &(&f.from_u64(4) * &a3) + &(&f.from_u64(27) * &self.inner.b.square());
        num.mul(&den.inv().expect("nonsingular curve"))
    }

    /// The same equation over a larger field.
    pub fn lift_to(&self, target: &ExtField) -> Result<Curve> {
        let a = target.embed(&self.inner.a)?;
        let b = target.embed(&self.inner.b)?;
        Curve::new(target.clone(), a, b)
    }

    /// Whether the coefficients are fixed by the p^j-power Frobenius.
    pub fn stable_under_frobenius(&self, j: usize) -> bool {
        self.inner.a.frobenius(j) == self.inner.a && self.inner.b.frobenius(j) == self.inner.b
    }

    pub fn infinity(&self) -> CurvePoint {
        CurvePoint { curve: self.clone(), coords: None }
    }

    pub fn point(&self, x: FieldElement, y: FieldElement) -> Result<CurvePoint> {
        if y.square() != self.rhs(&x) {
            return Err(Error::PointOffCurve);
        }
        Ok(CurvePoint { curve: self.clone(), coords: Some((x, y)) })
    }

    /// Affine points in canonical order: x ascending, then the canonically
    /// smaller y first.  Lazy, so it also serves huge fields as a sampler.
    pub fn points(&self) -> PointIter {
        PointIter { curve: self.clone(), next_x: 0, pending: None }
    }

    pub fn describe(&self) -> String {
        format!(
            "y^2 = x^3 + ({:?})x + ({:?}) over {}",
            self.inner.a,
            self.inner.b,
            self.inner.field.describe()
        )
    }
}

impl PartialEq for Curve {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.field == other.inner.field
                && self.inner.a == other.inner.a
                && self.inner.b == other.inner.b)
    }
}

impl Eq for Curve {}

impl fmt::Debug for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.describe())
    }
}

pub struct PointIter {
    curve: Curve,
    next_x: u64,
    pending: Option<CurvePoint>,
}

impl Iterator for PointIter {
    type Item = CurvePoint;

    fn next(&mut self) -> Option<CurvePoint> {
        if let Some(p) = self.pending.take() {
            return Some(p);
        }
        let field = self.curve.field().clone();
        let limit = field.order().unwrap_or(u64::MAX);
        while self.next_x < limit {
            let x = field.element_from_ordinal(self.next_x);
            self.next_x += 1;
            let rhs = self.curve.rhs(&x);
            if let Some(y) = sqrt_in_field(&rhs) {
                let p1 = CurvePoint { curve: self.curve.clone(), coords: Some((x.clone(), y.clone())) };
                if !y.is_zero() {
                    self.pending = Some(CurvePoint { curve: self.curve.clone(), coords: Some((x, y.neg())) });
                }
                return Some(p1);
            }
        }
        None
    }
}

/// A point on a specific curve; `coords: None` is the identity.
#[derive(Clone)]
pub struct CurvePoint {
    curve: Curve,
    coords: Option<(FieldElement, FieldElement)>,
}

impl CurvePoint {
    pub fn curve(&self) -> &Curve {
        &self.curve
    }

    pub fn is_infinity(&self) -> bool {
        self.coords.is_none()
    }

    pub fn xy(&self) -> Option<(&FieldElement, &FieldElement)> {
        self.coords.as_ref().map(|(x, y)| (x, y))
    }

    pub fn neg(&self) -> CurvePoint {
        match &self.coords {
            None => self.clone(),
            Some((x, y)) => CurvePoint {
                curve: self.curve.clone(),
                coords: Some((x.clone(), y.neg())),
            },
        }
    }

    pub fn add(&self, other: &CurvePoint) -> Result<CurvePoint> {
        if self.curve != other.curve {
            return Err(Error::MixedCurves);
        }
        let (x1, y1) = match &self.coords {
            None => return Ok(other.clone()),
            Some(c) => c,
        };
        let (x2, y2) = match &other.coords {
            None => return Ok(self.clone()),
            Some(c) => c,
        };
        let lambda = if x1 == x2 {
            if *y1 == y2.neg() {
                return Ok(self.curve.infinity());
            }
            // tangent; y1 = y2 != 0 here
            let num = &(&self.curve.field().from_u64(3) * &x1.square()) + self.curve.a();
            let den = &self.curve.field().from_u64(2) * y1;
            num.mul(&den.inv().expect("nonzero tangent denominator"))
        } else {
            let num = y2 - y1;
            let den = x2 - x1;
            num.mul(&den.inv().expect("distinct x"))
        };
        let x3 = &(&lambda.square() - x1) - x2;
        let y3 = &lambda.mul(&(x1 - &x3)) - y1;
        Ok(CurvePoint { curve: self.curve.clone(), coords: Some((x3, y3)) })
    }

    pub fn sub(&self, other: &CurvePoint) -> Result<CurvePoint> {
        self.add(&other.neg())
    }

    pub fn double(&self) -> CurvePoint {
        self.add(self).expect("same curve")
    }

    pub fn mul_u64(&self, n: u64) -> CurvePoint {
        self.mul_big(&BigUint::from(n))
    }

    pub fn mul_big(&self, n: &BigUint) -> CurvePoint {
        let mut acc = self.curve.infinity();
        if n.is_zero() || self.is_infinity() {
            return acc;
        }
        let bits = n.bits();
        for i in (0..bits).rev() {
            acc = acc.double();
            if n.bit(i) {
                acc = acc.add(self).expect("same curve");
            }
        }
        acc
    }

    /// Coordinate-wise p^j-power Frobenius.  Requires the curve equation to
    /// be fixed by that Frobenius, so the image is again on the curve.
    pub fn galois_image(&self, j: usize) -> Result<CurvePoint> {
        if !self.curve.stable_under_frobenius(j) {
            return Err(Error::CodomainNotRational(j));
        }
        Ok(match &self.coords {
            None => self.clone(),
            Some((x, y)) => CurvePoint {
                curve: self.curve.clone(),
                coords: Some((x.frobenius(j), y.frobenius(j))),
            },
        })
    }

    /// The same point over a larger field.
    pub fn lift_to(&self, curve: &Curve) -> Result<CurvePoint> {
        match &self.coords {
            None => Ok(curve.infinity()),
            Some((x, y)) => {
                let xl = curve.field().embed(x)?;
                let yl = curve.field().embed(y)?;
                curve.point(xl, yl)
            }
        }
    }

    /// Hashable identity of the point within its field.
    pub fn key(&self) -> PointKey {
        match &self.coords {
            None => PointKey::Infinity,
            Some((x, y)) => PointKey::Affine(x.coeffs().to_vec(), y.coeffs().to_vec()),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum PointKey {
    Infinity,
    Affine(Vec<u64>, Vec<u64>),
}

impl PartialEq for CurvePoint {
    fn eq(&self, other: &Self) -> bool {
        self.curve == other.curve && self.coords == other.coords
    }
}

impl Eq for CurvePoint {}

impl fmt::Debug for CurvePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.coords {
            None => write!(f, "O"),
            Some((x, y)) => write!(f, "({x:?}, {y:?})"),
        }
    }
}

// ---------------------------------------------------------------------------
// counting

/// |E(F_q)| by exhaustive enumeration, q <= 10^7.
pub fn count_points(curve: &Curve) -> Result<u64> {
    let field = curve.field();
    let q = field
        .order()
        .filter(|&q| q <= ENUMERATION_BOUND)
        .ok_or_else(|| Error::FieldTooLarge(field.order_big().to_string()))?;
    if field.degree() == 1 {
        return Ok(count_points_prime(curve, q));
    }
    // number of square roots of each element, indexed by ordinal
    let mut sqrt_count = vec![0u8; q as usize];
    for n in 0..q {
        let y = field.element_from_ordinal(n);
        let idx = field.ordinal(&y.square());
        sqrt_count[idx as usize] += 1;
    }
    let mut total = 1u64; // identity
    for n in 0..q {
        let x = field.element_from_ordinal(n);
        let idx = field.ordinal(&curve.rhs(&x));
        total += sqrt_count[idx as usize] as u64;
    }
    Ok(total)
}

fn count_points_prime(curve: &Curve, p: u64) -> u64 {
    let a = curve.a().coeffs()[0];
    let b = curve.b().coeffs()[0];
    let mut sqrt_count = vec![0u8; p as usize];
    for y in 0..p {
        sqrt_count[((y as u128 * y as u128) % p as u128) as usize] += 1;
    }
    let mut total = 1u64;
    for x in 0..p {
        let x2 = (x as u128 * x as u128) % p as u128;
        let rhs = ((x2 * x as u128) + a as u128 * x as u128 + b as u128) % p as u128;
        total += sqrt_count[rhs as usize] as u64;
    }
    total
}

/// q + 1 - |E(F_q)|.
///
/// Fields beyond the enumeration bound are handled by descending to the
/// smallest subfield containing both coefficients, counting there, and
/// lifting the trace through the extension recurrence; the field order must
/// still fit in a machine word.
pub fn frobenius_trace(curve: &Curve) -> Result<i64> {
    let field = curve.field();
    let q = field
        .order()
        .ok_or_else(|| Error::FieldTooLarge(field.order_big().to_string()))?;
    if q <= ENUMERATION_BOUND {
        let n = count_points(curve)? as i64;
        let t = q as i64 + 1 - n;
        debug_assert!((t as i128) * (t as i128) <= 4 * q as i128);
        return Ok(t);
    }
    let p = field.p();
    let k = field.degree();
    for d in (1..k).filter(|d| k % d == 0) {
        let qd = p.checked_pow(d as u32).filter(|&v| v <= ENUMERATION_BOUND);
        let Some(qd) = qd else { continue };
        if curve.a().frobenius(d) != *curve.a() || curve.b().frobenius(d) != *curve.b() {
            continue;
        }
        let sub = ExtField::new(p, d)?;
        let small = Curve::new(sub.clone(), sub.unembed(curve.a())?, sub.unembed(curve.b())?)?;
        let t_small = frobenius_trace(&small)?;
        let t = i64::try_from(trace_over_extension(t_small, qd, (k / d) as u32))
            .expect("trace bounded by 2 sqrt(q) fits i64 for word-sized q");
        debug_assert!((t as i128) * (t as i128) <= 4 * q as i128);
        return Ok(t);
    }
    Err(Error::FieldTooLarge(field.order_big().to_string()))
}

/// Trace of the q^m-power Frobenius from the trace t of the q-power one:
/// t_0 = 2, t_1 = t, t_j = t * t_{j-1} - q * t_{j-2}.
pub fn trace_over_extension_big(t: i64, q: u64, m: u32) -> BigInt {
    let mut t0 = BigInt::from(2);
    let mut t1 = BigInt::from(t);
    if m == 0 {
        return t0;
    }
    let tb = BigInt::from(t);
    let qb = BigInt::from(q);
    for _ in 1..m {
        let t2 = &tb * &t1 - &qb * &t0;
        t0 = t1;
        t1 = t2;
    }
    t1
}

/// Same recurrence in machine words; panics if the value leaves i128.
pub fn trace_over_extension(t: i64, q: u64, m: u32) -> i128 {
    trace_over_extension_big(t, q, m)
        .to_i128()
        .expect("trace fits in i128 at desk scale")
}

/// |E(F_{q^m})| as q^m + 1 - t_m, computed exactly.
pub fn count_over_extension_big(t: i64, q: u64, m: u32) -> BigUint {
    let qm = BigInt::from(q).pow(m);
    let n = qm + BigInt::one() - trace_over_extension_big(t, q, m);
    assert!(!n.is_negative());
    n.to_biguint().unwrap()
}

/// t_m mod modulus, for divisibility filters without big integers.
pub fn trace_over_extension_mod(t: i64, q: u64, m: u32, modulus: u64) -> u64 {
    let md = modulus as i128;
    let mut t0 = 2i128 % md;
    let mut t1 = (t as i128).rem_euclid(md);
    if m == 0 {
        return t0.rem_euclid(md) as u64;
    }
    let tt = (t as i128).rem_euclid(md);
    let qq = (q as i128) % md;
    for _ in 1..m {
        let t2 = (tt * t1 - qq * t0).rem_euclid(md);
        t0 = t1;
        t1 = t2;
    }
    t1 as u64
}

// ---------------------------------------------------------------------------
// group structure

/// E(F_q) = Z/a x Z/ab with certified generators.
pub struct GroupStructure {
    pub a: u64,
    pub ab: u64,
    /// order ab
    pub gen_big: CurvePoint,
    /// order a; the identity when a = 1
    pub gen_small: CurvePoint,
}

fn factor_u64(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

fn point_order_u64(p: &CurvePoint, group_order: u64, factors: &[(u64, u32)]) -> u64 {
    debug_assert!(p.mul_u64(group_order).is_infinity());
    let mut ord = group_order;
    for &(q, _) in factors {
        while ord % q == 0 && p.mul_u64(ord / q).is_infinity() {
            ord /= q;
        }
    }
    ord
}

fn point_order_big(p: &CurvePoint, bound: &BigUint, primes: &[u64]) -> BigUint {
    debug_assert!(p.mul_big(bound).is_infinity());
    let mut ord = bound.clone();
    for &q in primes {
        let qb = BigUint::from(q);
        while (&ord % &qb).is_zero() {
            let cand = &ord / &qb;
            if p.mul_big(&cand).is_infinity() {
                ord = cand;
            } else {
                break;
            }
        }
    }
    ord
}

/// Full census of the rational point group.  The field must be enumerable.
pub fn group_structure(curve: &Curve) -> Result<GroupStructure> {
    let q = curve
        .field()
        .order()
        .filter(|&q| q <= 1_000_000)
        .ok_or_else(|| Error::FieldTooLarge(curve.field().order_big().to_string()))?;
    let n = count_points(curve)?;
    let factors = factor_u64(n);
    let mut exponent = 1u64;
    let mut orders: Vec<(CurvePoint, u64)> = Vec::new();
    for pt in curve.points() {
        let o = point_order_u64(&pt, n, &factors);
        exponent = num_integer::lcm(exponent, o);
        orders.push((pt, o));
    }
    let ab = exponent;
    let a = n / ab;
    assert_eq!(a * ab, n, "group order must split as a * ab");
    assert!(ab % a == 0);
    assert!(a == 1 || (q - 1) % a == 0, "small factor must divide q - 1");
    let gen_big = orders
        .iter()
        .find(|(_, o)| *o == ab)
        .map(|(p, _)| p.clone())
        .expect("a point of maximal order exists");
    let gen_small = if a == 1 {
        curve.infinity()
    } else {
        let bp = gen_big.mul_u64(ab / a);
        orders
            .iter()
            .filter(|(_, o)| *o == a)
            .map(|(p, _)| p.clone())
            .find(|cand| {
                crate::weil_pairing::weil_pairing(a, &bp, cand)
                    .map(|z| z.order == a)
                    .unwrap_or(false)
            })
            .expect("an independent generator of order a exists")
    };
    Ok(GroupStructure { a, ab, gen_big, gen_small })
}

// ---------------------------------------------------------------------------
// torsion

/// A basis (P, Q) of E[n] over the smallest extension containing it,
/// certified by a Weil pairing of exact order n.
#[derive(Clone)]
pub struct TorsionBasis {
    pub n: u64,
    /// degree of the torsion field over the curve's field
    pub relative_degree: usize,
    /// the curve lifted to the torsion field
    pub curve: Curve,
    pub p: CurvePoint,
    pub q: CurvePoint,
}

const SAMPLE_BUDGET: u64 = 4000;

/// Degree over the curve's field of the smallest extension with full
/// n-torsion.
pub fn torsion_field_degree(curve: &Curve, n: u64) -> Result<usize> {
    torsion_basis(curve, n).map(|b| b.relative_degree)
}

type TorsionKey = (u64, usize, Vec<u64>, Vec<u64>, u64);

/// Successful bases and too-large verdicts are both deterministic, so both
/// are worth remembering across sweep calls.
enum TorsionCacheEntry {
    Basis(TorsionBasis),
    TooLarge { n: u64, bound: usize },
}

fn torsion_cache() -> &'static std::sync::Mutex<HashMap<TorsionKey, TorsionCacheEntry>> {
    static CACHE: std::sync::OnceLock<std::sync::Mutex<HashMap<TorsionKey, TorsionCacheEntry>>> =
        std::sync::OnceLock::new();
    CACHE.get_or_init(|| std::sync::Mutex::new(HashMap::new()))
}

/// Deterministic torsion basis construction, memoized per (curve, n).
pub fn torsion_basis(curve: &Curve, n: u64) -> Result<TorsionBasis> {
    let key: TorsionKey = (
        curve.p(),
        curve.field().degree(),
        curve.a().coeffs().to_vec(),
        curve.b().coeffs().to_vec(),
        n,
    );
    if let Some(entry) = torsion_cache().lock().expect("torsion cache").get(&key) {
        return match entry {
            TorsionCacheEntry::Basis(basis) => Ok(basis.clone()),
            TorsionCacheEntry::TooLarge { n, bound } => {
                Err(Error::TorsionFieldTooLarge { n: *n, bound: *bound })
            }
        };
    }
    let outcome = torsion_basis_uncached(curve, n);
    let mut cache = torsion_cache().lock().expect("torsion cache");
    match &outcome {
        Ok(basis) => {
            cache.insert(key, TorsionCacheEntry::Basis(basis.clone()));
        }
        Err(Error::TorsionFieldTooLarge { n, bound }) => {
            cache.insert(key, TorsionCacheEntry::TooLarge { n: *n, bound: *bound });
        }
        Err(_) => {}
    }
    outcome
}

fn torsion_basis_uncached(curve: &Curve, n: u64) -> Result<TorsionBasis> {
    let p = curve.p();
    if n < 2 {
        return Err(Error::LevelTooSmall(n));
    }
    if n % p == 0 {
        return Err(Error::LevelDivisibleByP { n, p });
    }
    let base_deg = curve.field().degree();
    let q0 = curve
        .field()
        .order()
        .ok_or_else(|| Error::FieldTooLarge(curve.field().order_big().to_string()))?;
    let t1 = frobenius_trace(curve)?;
    let max_rel = crate::finite_fields::MAX_DEGREE / base_deg;
    let n2 = n.checked_mul(n).unwrap();
    for k_rel in 1..=max_rel {
        // necessary: n | q^k - 1 and n^2 | #E(F_{q^k})
        if pow_mod_u64(q0, k_rel as u64, n) != 1 {
            continue;
        }
        let tk = trace_over_extension_mod(t1, q0, k_rel as u32, n2);
        let qk = pow_mod_u64(q0 % n2, k_rel as u64, n2);
        if (qk + 1) % n2 != tk % n2 {
            continue;
        }
        if let Some(basis) = try_build_basis(curve, n, k_rel, q0, t1)? {
            return Ok(basis);
        }
    }
    Err(Error::TorsionFieldTooLarge { n, bound: crate::finite_fields::MAX_DEGREE })
}

fn pow_mod_u64(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = ((acc as u128 * a as u128) % m as u128) as u64;
        }
        a = ((a as u128 * a as u128) % m as u128) as u64;
        e >>= 1;
    }
    acc
}

fn try_build_basis(
    curve: &Curve,
    n: u64,
    k_rel: usize,
    q0: u64,
    t1: i64,
) -> Result<Option<TorsionBasis>> {
    let base_deg = curve.field().degree();
    let big_field = ExtField::new(curve.p(), base_deg * k_rel)?;
    let big_curve = curve.lift_to(&big_field)?;
    let group_order = count_over_extension_big(t1, q0, k_rel as u32);
    let n_primes: Vec<u64> = factor_u64(n).into_iter().map(|(q, _)| q).collect();
    // cofactor clearing everything except the n-primary part
    let mut cof = group_order.clone();
    let mut n_part = BigUint::one();
    for &q in &n_primes {
        let qb = BigUint::from(q);
        while (&cof % &qb).is_zero() {
            cof /= &qb;
            n_part *= &qb;
        }
    }
    let nb = BigUint::from(n);
    let mut first: Option<CurvePoint> = None;
    let budget = match big_field.order() {
        Some(q) => SAMPLE_BUDGET.min(q),
        None => SAMPLE_BUDGET,
    };
    for x_ord in 0..budget {
        let x = big_field.element_from_ordinal(x_ord);
        let rhs = big_curve.rhs(&x);
        let y = match sqrt_in_field(&rhs) {
            Some(y) => y,
            None => continue,
        };
        let pt = big_curve.point(x, y).unwrap();
        let r1 = pt.mul_big(&cof);
        if r1.is_infinity() {
            continue;
        }
        let ord = point_order_big(&r1, &n_part, &n_primes);
        if !(&ord % &nb).is_zero() {
            continue;
        }
        let cand = r1.mul_big(&(&ord / &nb));
        debug_assert!(cand.mul_u64(n).is_infinity());
        match &first {
            None => first = Some(cand),
            Some(p) => {
                if let Ok(z) = crate::weil_pairing::weil_pairing(n, p, &cand) {
                    if z.order == n {
                        return Ok(Some(TorsionBasis {
                            n,
                            relative_degree: k_rel,
                            curve: big_curve,
                            p: p.clone(),
                            q: cand,
                        }));
                    }
                }
            }
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// Frobenius action on torsion

/// A 2x2 matrix over Z/nZ in column convention: column 0 holds the
/// coordinates of the image of the first basis point.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct TorsionMatrix {
    pub n: u64,
    pub m: [[u64; 2]; 2],
}

impl TorsionMatrix {
    pub fn identity(n: u64) -> TorsionMatrix {
        TorsionMatrix { n, m: [[1, 0], [0, 1]] }
    }

    pub fn scalar(n: u64, c: i64) -> TorsionMatrix {
        let c = c.rem_euclid(n as i64) as u64;
        TorsionMatrix { n, m: [[c, 0], [0, c]] }
    }

    pub fn from_cols(n: u64, col_p: (u64, u64), col_q: (u64, u64)) -> TorsionMatrix {
        TorsionMatrix { n, m: [[col_p.0 % n, col_q.0 % n], [col_p.1 % n, col_q.1 % n]] }
    }

    pub fn mul(&self, other: &TorsionMatrix) -> TorsionMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n as u128;
        let mut out = [[0u64; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = 0u128;
                for k in 0..2 {
                    acc += self.m[i][k] as u128 * other.m[k][j] as u128;
                }
                out[i][j] = (acc % n) as u64;
            }
        }
        TorsionMatrix { n: self.n, m: out }
    }

    pub fn add(&self, other: &TorsionMatrix) -> TorsionMatrix {
        assert_eq!(self.n, other.n);
        let mut out = [[0u64; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = (self.m[i][j] + other.m[i][j]) % self.n;
            }
        }
        TorsionMatrix { n: self.n, m: out }
    }

    pub fn scale(&self, c: i64) -> TorsionMatrix {
        let c = c.rem_euclid(self.n as i64) as u128;
        let mut out = [[0u64; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = ((self.m[i][j] as u128 * c) % self.n as u128) as u64;
            }
        }
        TorsionMatrix { n: self.n, m: out }
    }

    pub fn neg(&self) -> TorsionMatrix {
        self.scale(-1)
    }

    pub fn trace(&self) -> u64 {
        (self.m[0][0] + self.m[1][1]) % self.n
    }

    pub fn det(&self) -> u64 {
        let n = self.n as i128;
        let d = (self.m[0][0] as i128 * self.m[1][1] as i128
            - self.m[0][1] as i128 * self.m[1][0] as i128)
            .rem_euclid(n);
        d as u64
    }

    pub fn apply(&self, v: (u64, u64)) -> (u64, u64) {
        let n = self.n as u128;
        (
            ((self.m[0][0] as u128 * v.0 as u128 + self.m[0][1] as u128 * v.1 as u128) % n) as u64,
            ((self.m[1][0] as u128 * v.0 as u128 + self.m[1][1] as u128 * v.1 as u128) % n) as u64,
        )
    }
}

/// Lookup table from points of E[n] to coordinates in a given basis.
pub struct TorsionIndex {
    n: u64,
    table: HashMap<PointKey, (u64, u64)>,
}

impl TorsionIndex {
    pub fn new(basis: &TorsionBasis) -> TorsionIndex {
        let n = basis.n;
        let mut table = HashMap::with_capacity((n * n) as usize);
        let mut row_start = basis.curve.infinity();
        for alpha in 0..n {
            let mut pt = row_start.clone();
            for beta in 0..n {
                table.entry(pt.key()).or_insert((alpha, beta));
                pt = pt.add(&basis.q).unwrap();
            }
            row_start = row_start.add(&basis.p).unwrap();
        }
        TorsionIndex { n, table }
    }

    /// Coordinates of a point of E[n] in this basis.
    pub fn coords(&self, pt: &CurvePoint) -> Option<(u64, u64)> {
        self.table.get(&pt.key()).copied()
    }

    pub fn n(&self) -> u64 {
        self.n
    }
}

/// Matrix of the p^j-power Frobenius on E[n] in the given basis.
pub fn frobenius_matrix(
    curve: &Curve,
    n: u64,
    basis: &TorsionBasis,
    j: usize,
) -> Result<TorsionMatrix> {
    assert_eq!(basis.n, n);
    assert!(basis.curve.field().extends(curve.field()), "basis must come from this curve");
    if !basis.curve.stable_under_frobenius(j) {
        return Err(Error::CodomainNotRational(j));
    }
    let index = TorsionIndex::new(basis);
    matrix_of_map(&index, basis, |pt| pt.galois_image(j))
}

/// Matrix of any group endomorphism of E[n] given by a point map.
pub fn matrix_of_map<F>(
    index: &TorsionIndex,
    basis: &TorsionBasis,
    f: F,
) -> Result<TorsionMatrix>
where
    F: Fn(&CurvePoint) -> Result<CurvePoint>,
{
    let fp = f(&basis.p)?;
    let fq = f(&basis.q)?;
    let cp = index
        .coords(&fp)
        .ok_or_else(|| Error::BadInstance("image of basis point leaves E[n]".into()))?;
    let cq = index
        .coords(&fq)
        .ok_or_else(|| Error::BadInstance("image of basis point leaves E[n]".into()))?;
    Ok(TorsionMatrix::from_cols(basis.n, cp, cq))
}

/// t = 0 exactly, for curves over a prime field with p >= 5.
pub fn is_supersingular(curve: &Curve) -> Result<bool> {
    assert_eq!(curve.field().degree(), 1, "supersingularity test expects a prime base field");
    Ok(frobenius_trace(curve)? == 0)
}

/// Closure of a generating set inside the rational points.
pub fn subgroup_from_generators(curve: &Curve, gens: &[CurvePoint]) -> Result<Vec<CurvePoint>> {
    let mut seen: HashMap<PointKey, CurvePoint> = HashMap::new();
    let o = curve.infinity();
    seen.insert(o.key(), o.clone());
    let mut frontier = vec![o];
    while let Some(pt) = frontier.pop() {
        for g in gens {
            let next = pt.add(g)?;
            if !seen.contains_key(&next.key()) {
                seen.insert(next.key(), next.clone());
                frontier.push(next);
            }
        }
    }
    let mut out: Vec<CurvePoint> = seen.into_values().collect();
    out.sort_by(|a, b| match (a.xy(), b.xy()) {
        (None, None) => std::cmp::Ordering::Equal,
        (None, _) => std::cmp::Ordering::Less,
        (_, None) => std::cmp::Ordering::Greater,
        (Some((x1, y1)), Some((x2, y2))) => {
            x1.canonical_cmp(x2).then_with(|| y1.canonical_cmp(y2))
        }
    });
    Ok(out)
}

/// Exact order of a point of finite order dividing `bound`.
pub fn point_order(pt: &CurvePoint, bound: u64) -> u64 {
    let factors = factor_u64(bound);
    point_order_u64(pt, bound, &factors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_fields::ExtField;

    fn curve(p: u64, k: usize, a: i64, b: i64) -> Curve {
        let f = ExtField::new(p, k).unwrap();
        Curve::from_i64(&f, a, b).unwrap()
    }

    #[test]
    fn constructor_rejects_degenerate_input() {
        let f5 = ExtField::new(5, 1).unwrap();
        assert!(matches!(Curve::from_i64(&f5, 0, 0), Err(Error::SingularCurve)));
        let f3 = ExtField::new(3, 1).unwrap();
        assert!(matches!(Curve::from_i64(&f3, 1, 1), Err(Error::SmallCharacteristic(3))));
    }

    #[test]
    fn counts_match_hand_enumeration() {
        assert_eq!(count_points(&curve(11, 1, 1, 0)).unwrap(), 12);
        assert_eq!(count_points(&curve(7, 1, 1, 0)).unwrap(), 8);
        assert_eq!(count_points(&curve(5, 1, 1, 0)).unwrap(), 4);
        assert_eq!(count_points(&curve(5, 1, 1, 1)).unwrap(), 9);
    }

    #[test]
    fn extension_counts_follow_the_recurrence() {
        // t = 0 over F_7: t_2 = -14, so the quadratic count is 64
        assert_eq!(trace_over_extension(0, 7, 2), -14);
        let e49 = curve(7, 1, 1, 0).lift_to(&ExtField::new(7, 2).unwrap()).unwrap();
        assert_eq!(count_points(&e49).unwrap(), 64);
        assert_eq!(count_over_extension_big(0, 7, 2), BigUint::from(64u32));
        // t = -3 over F_5: t_2 = -1 and 27 points
        assert_eq!(trace_over_extension(-3, 5, 2), -1);
        let e25 = curve(5, 1, 1, 1).lift_to(&ExtField::new(5, 2).unwrap()).unwrap();
        assert_eq!(count_points(&e25).unwrap(), 27);
        assert_eq!(
            trace_over_extension_mod(-3, 5, 2, 9),
            ((-1i64).rem_euclid(9)) as u64
        );
    }

    #[test]
    fn trace_descends_through_subfield_coefficients() {
        // F_{17^6} has 24 137 569 elements, beyond the enumeration bound,
        // but the lifted curve's trace follows from the base count.
        let base = curve(17, 1, 1, 3);
        let t1 = frobenius_trace(&base).unwrap();
        let big_field = ExtField::new(17, 6).unwrap();
        let lifted = base.lift_to(&big_field).unwrap();
        let t6 = frobenius_trace(&lifted).unwrap();
        assert_eq!(i128::from(t6), trace_over_extension(t1, 17, 6));

        // Coefficients generating F_{17^2} exactly: descent lands there.
        let quad = ExtField::new(17, 2).unwrap();
        let gen = quad.element_from_ordinal(17); // the degree-1 generator x
        let small = Curve::new(quad.clone(), gen.clone(), quad.one()).unwrap();
        let t2 = frobenius_trace(&small).unwrap();
        let embedded = small.lift_to(&big_field).unwrap();
        assert_eq!(
            i128::from(frobenius_trace(&embedded).unwrap()),
            trace_over_extension(t2, 17 * 17, 3)
        );

        // A curve that does not descend still reports the field as too big.
        let big_gen = big_field.element_from_ordinal(17);
        if let Ok(wild) = Curve::new(big_field.clone(), big_gen, big_field.one()) {
            assert!(matches!(frobenius_trace(&wild), Err(Error::FieldTooLarge(_))));
        }
    }

    #[test]
    fn group_law_closes_and_scalars_distribute() {
        let e = curve(11, 1, 1, 0);
        let n = count_points(&e).unwrap();
        for pt in e.points() {
            assert!(pt.mul_u64(n).is_infinity());
            assert!(pt.add(&pt.neg()).unwrap().is_infinity());
            assert_eq!(pt.mul_u64(3), pt.double().add(&pt).unwrap());
        }
    }

    #[test]
    fn structure_census() {
        let s = group_structure(&curve(11, 1, 1, 0)).unwrap();
        assert_eq!((s.a, s.ab), (1, 12));
        let s = group_structure(&curve(7, 1, 1, 0)).unwrap();
        assert_eq!((s.a, s.ab), (1, 8));
        // fully rational 2-torsion and nothing else
        let s = group_structure(&curve(5, 1, 1, 0)).unwrap();
        assert_eq!((s.a, s.ab), (2, 2));
        assert_eq!(point_order(&s.gen_small, 2), 2);
        assert_ne!(s.gen_small, s.gen_big);
    }

    #[test]
    fn torsion_basis_certified_by_pairing() {
        // supersingular over F_11: squared Frobenius is -11 = 1 mod 3,
        // so the 3-torsion field is the quadratic extension
        let e = curve(11, 1, 1, 0);
        let b = torsion_basis(&e, 3).unwrap();
        assert_eq!(b.relative_degree, 2);
        assert!(!b.p.is_infinity() && b.p.mul_u64(3).is_infinity());
        assert!(!b.q.is_infinity() && b.q.mul_u64(3).is_infinity());
        let z = crate::weil_pairing::weil_pairing(3, &b.p, &b.q).unwrap();
        assert_eq!(z.order, 3);

        // rational full 2-torsion stays at relative degree 1
        let b2 = torsion_basis(&curve(5, 1, 1, 0), 2).unwrap();
        assert_eq!(b2.relative_degree, 1);
    }

    #[test]
    fn ordinary_two_torsion_needs_a_cubic_extension() {
        // x^3 + x + 1 is irreducible mod 5, so Frobenius permutes the
        // nontrivial 2-torsion in a 3-cycle
        let e = curve(5, 1, 1, 1);
        assert_eq!(torsion_field_degree(&e, 2).unwrap(), 3);
    }

    #[test]
    fn torsion_rejects_bad_levels() {
        let e = curve(11, 1, 1, 0);
        assert!(matches!(torsion_basis(&e, 1), Err(Error::LevelTooSmall(1))));
        assert!(matches!(
            torsion_basis(&e, 11),
            Err(Error::LevelDivisibleByP { n: 11, p: 11 })
        ));
    }

    #[test]
    fn frobenius_matrix_has_expected_trace_and_det() {
        let e = curve(11, 1, 1, 0);
        let b = torsion_basis(&e, 3).unwrap();
        let m = frobenius_matrix(&e, 3, &b, 1).unwrap();
        assert_eq!(m.trace(), 0);
        assert_eq!(m.det(), 11 % 3);
        // squared Frobenius is the scalar -11 = 1 mod 3
        assert_eq!(m.mul(&m), TorsionMatrix::identity(3));
        let m2 = frobenius_matrix(&e, 3, &b, 2).unwrap();
        assert_eq!(m2, TorsionMatrix::identity(3));
    }

    #[test]
    fn supersingular_iff_trace_zero() {
        assert!(is_supersingular(&curve(11, 1, 1, 0)).unwrap());
        assert!(is_supersingular(&curve(7, 1, 1, 0)).unwrap());
        assert!(!is_supersingular(&curve(5, 1, 1, 1)).unwrap());
    }

    #[test]
    fn subgroup_closure_sizes() {
        let e = curve(5, 1, 1, 0);
        let f = e.field().clone();
        let p0 = e.point(f.from_u64(0), f.from_u64(0)).unwrap();
        let p2 = e.point(f.from_u64(2), f.from_u64(0)).unwrap();
        assert_eq!(subgroup_from_generators(&e, &[p0.clone()]).unwrap().len(), 2);
        assert_eq!(subgroup_from_generators(&e, &[p0, p2]).unwrap().len(), 4);
    }
}
