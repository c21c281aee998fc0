//! Centers of endomorphism algebras as explicit quadratic data, the
//! trace-based isogeny oracle, isotypic decomposition of products of curves,
//! and the cyclotomic interaction checks used by the descent experiments.
//!
//! Over a finite field the center of the endomorphism algebra is generated
//! by Frobenius, so for an elliptic curve it is either Q itself or an
//! imaginary quadratic field, and it is pinned down exactly by the trace.
//! Everything here works with that quadratic data; no number-field
//! arithmetic is ever needed.

use crate::elliptic_curves::{frobenius_trace, trace_over_extension, Curve};
use crate::error::{Error, Result};
use serde::Serialize;

/// The kind of center: Q itself, or an imaginary quadratic field given by
/// its fundamental discriminant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "disc")]
pub enum CenterKind {
    /// Frobenius is a rational integer, so the center is Q.
    Rational,
    /// The center is Q(sqrt(D)) for the given fundamental discriminant D < 0.
    ImaginaryQuadratic(i128),
}

/// The center Q[pi] of the endomorphism algebra over an extension field,
/// presented as quadratic data attached to the Frobenius of that field.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FrobeniusData {
    /// Size of the field whose Frobenius is described.
    pub q: i128,
    /// Trace of that Frobenius.
    pub t: i128,
    /// Discriminant t^2 - 4q of the characteristic polynomial.
    pub disc: i128,
    /// What the center is as a field.
    pub center: CenterKind,
}

impl FrobeniusData {
    /// Coefficients [1, -t, q] of the characteristic polynomial
    /// x^2 - t*x + q of the Frobenius.
    pub fn charpoly(&self) -> [i128; 3] {
        [1, -self.t, self.q]
    }
}

/// The fundamental discriminant of Q(sqrt(d)) for d < 0 and not a square:
/// the squarefree part s of d if s = 1 mod 4, else 4s.
fn fundamental_discriminant(d: i128) -> i128 {
    assert!(d < 0, "fundamental discriminants are needed only for d < 0");
    let mut rest = -d;
    let mut squarefree: i128 = -1;
    let mut f = 2;
    while f * f <= rest {
        let mut count = 0;
        while rest % f == 0 {
            rest /= f;
            count += 1;
        }
        if count % 2 == 1 {
            squarefree *= f;
        }
        f += 1;
    }
    squarefree *= rest;
    if squarefree.rem_euclid(4) == 1 {
        squarefree
    } else {
        4 * squarefree
    }
}

/// Whether two curves over the same finite field are isogenous over the
/// degree-j extension of that field.  By Tate's isogeny criterion this is
/// exactly equality of Frobenius traces over that extension.
pub fn tate_isogenous(e1: &Curve, e2: &Curve, j: u32) -> Result<bool> {
    if e1.field() != e2.field() {
        return Err(Error::FieldMismatch {
            expected: e1.field().describe(),
            actual: e2.field().describe(),
        });
    }
    if j == 0 {
        return Err(Error::BadInstance("extension degree must be positive".into()));
    }
    let q = e1
        .field()
        .order()
        .ok_or_else(|| Error::FieldTooLarge(e1.field().describe()))?;
    let t1 = frobenius_trace(e1)?;
    let t2 = frobenius_trace(e2)?;
    Ok(trace_over_extension(t1, q, j) == trace_over_extension(t2, q, j))
}

/// The center data of a curve viewed over the degree-j extension of its
/// base field.
pub fn center_data(curve: &Curve, j: u32) -> Result<FrobeniusData> {
    if j == 0 {
        return Err(Error::BadInstance("extension degree must be positive".into()));
    }
    let q = curve
        .field()
        .order()
        .ok_or_else(|| Error::FieldTooLarge(curve.field().describe()))?;
    let t1 = frobenius_trace(curve)?;
    let tj = trace_over_extension(t1, q, j);
    let qj = (0..j).try_fold(1i128, |acc, _| acc.checked_mul(q as i128))
        .ok_or_else(|| Error::Unsupported("extension field size overflows".into()))?;
    let disc = tj
        .checked_mul(tj)
        .and_then(|s| s.checked_sub(4 * qj))
        .ok_or_else(|| Error::Unsupported("discriminant overflows".into()))?;
    let center = if disc == 0 {
        CenterKind::Rational
    } else {
        // Hasse: t^2 <= 4q with equality only in the rational case, so
        // a nonzero discriminant is negative
        CenterKind::ImaginaryQuadratic(fundamental_discriminant(disc))
    };
    Ok(FrobeniusData { q: qj, t: tj, disc, center })
}

/// Self-test of the inclusion of centers under field extension: the center
/// over the larger field embeds in the center over the smaller.  Concretely
/// the larger center is rational or the fundamental discriminants agree.
/// Mathematically this must always return true.
pub fn center_inclusion_check(curve: &Curve, j_small: u32, j_large: u32) -> Result<bool> {
    if j_small == 0 || j_large % j_small != 0 {
        return Err(Error::BadInstance(
            "the smaller degree must divide the larger".into(),
        ));
    }
    let small = center_data(curve, j_small)?;
    let large = center_data(curve, j_large)?;
    Ok(match (large.center, small.center) {
        (CenterKind::Rational, _) => true,
        (CenterKind::ImaginaryQuadratic(dl), CenterKind::ImaginaryQuadratic(ds)) => dl == ds,
        (CenterKind::ImaginaryQuadratic(_), CenterKind::Rational) => false,
    })
}

/// Whether Q(zeta_m) embeds into the center of the curve's endomorphism
/// algebra over the degree-j extension.  The center has degree at most 2,
/// so this is decided by the Euler totient and the fundamental discriminant.
pub fn zeta_embedding_check(curve: &Curve, j: u32, m: u64) -> Result<bool> {
    if m == 0 {
        return Err(Error::BadInstance("cyclotomic level must be positive".into()));
    }
    if m <= 2 {
        return Ok(true);
    }
    if euler_phi(m) > 2 {
        return Ok(false);
    }
    // remaining cases: m in {3, 4, 6}, where Q(zeta_m) is imaginary
    // quadratic with discriminant -3, -4, -3
    let need = if m == 4 { -4 } else { -3 };
    Ok(match center_data(curve, j)?.center {
        CenterKind::Rational => false,
        CenterKind::ImaginaryQuadratic(d) => d == need,
    })
}

fn euler_phi(mut m: u64) -> u64 {
    let mut result = m;
    let mut f = 2;
    while f * f <= m {
        if m % f == 0 {
            while m % f == 0 {
                m /= f;
            }
            result -= result / f;
        }
        f += 1;
    }
    if m > 1 {
        result -= result / m;
    }
    result
}

fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut f = 2;
    while f * f <= n {
        if n % f == 0 {
            return false;
        }
        f += 1;
    }
    true
}

/// How the center interacts with the m-th cyclotomic field for prime m.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Disjointness {
    /// Q(zeta_m) lies inside the center.
    Contains,
    /// The center and Q(zeta_m) are linearly disjoint over Q.
    Disjoint,
    /// The center equals the quadratic subfield of Q(zeta_m) without
    /// containing zeta_m itself.
    Neither,
}

/// Classify the relation of the center (over the degree-j extension) with
/// Q(zeta_m) for prime m: containment, linear disjointness, or the
/// borderline case where the center is exactly the quadratic subfield
/// of Q(zeta_m).
pub fn linear_disjointness_check(curve: &Curve, j: u32, m: u64) -> Result<Disjointness> {
    if !is_prime_u64(m) {
        return Err(Error::BadInstance("cyclotomic level must be prime".into()));
    }
    if m == 2 {
        // Q(zeta_2) = Q sits inside every center
        return Ok(Disjointness::Contains);
    }
    if zeta_embedding_check(curve, j, m)? {
        return Ok(Disjointness::Contains);
    }
    // the unique quadratic subfield of Q(zeta_m) is Q(sqrt(m*)) with
    // m* = (-1)^((m-1)/2) * m, which is its own fundamental discriminant
    let m_star: i128 = if (m - 1) / 2 % 2 == 0 {
        m as i128
    } else {
        -(m as i128)
    };
    Ok(match center_data(curve, j)?.center {
        CenterKind::ImaginaryQuadratic(d) if d == m_star => Disjointness::Neither,
        _ => Disjointness::Disjoint,
    })
}

/// A product of elliptic curves over a common base field, the computable
/// stand-in for higher-dimensional abelian varieties.
#[derive(Clone, Debug)]
pub struct ProductVariety {
    factors: Vec<Curve>,
}

impl ProductVariety {
    pub fn new(factors: Vec<Curve>) -> Result<ProductVariety> {
        let first = factors
            .first()
            .ok_or_else(|| Error::BadInstance("a product needs at least one factor".into()))?;
        for f in &factors[1..] {
            if f.field() != first.field() {
                return Err(Error::MixedCurves);
            }
        }
        Ok(ProductVariety { factors })
    }

    pub fn factors(&self) -> &[Curve] {
        &self.factors
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }
}

/// A partition of the factor indices of a product into isotypic blocks at
/// a stated extension degree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IsotypicPartition {
    /// Extension degree over the product's base field.
    pub degree: u32,
    /// Blocks of factor indices; each block ascending, blocks ordered by
    /// their smallest member.
    pub blocks: Vec<Vec<usize>>,
}

impl IsotypicPartition {
    /// Whether `self` refines `other`: every block of self lies inside a
    /// single block of other.
    pub fn refines(&self, other: &IsotypicPartition) -> bool {
        self.blocks.iter().all(|block| {
            other
                .blocks
                .iter()
                .any(|big| block.iter().all(|i| big.contains(i)))
        })
    }
}

/// Group the factors of a product into isogeny classes over the degree-j
/// extension: two factors share a block exactly when their traces over
/// that extension agree.
pub fn isotypic_partition(v: &ProductVariety, j: u32) -> Result<IsotypicPartition> {
    if j == 0 {
        return Err(Error::BadInstance("extension degree must be positive".into()));
    }
    let q = v.factors[0]
        .field()
        .order()
        .ok_or_else(|| Error::FieldTooLarge(v.factors[0].field().describe()))?;
    let mut traces = Vec::with_capacity(v.factors.len());
    for f in &v.factors {
        traces.push(trace_over_extension(frobenius_trace(f)?, q, j));
    }
    let mut blocks: Vec<(i128, Vec<usize>)> = Vec::new();
    for (i, t) in traces.iter().enumerate() {
        match blocks.iter_mut().find(|(bt, _)| bt == t) {
            Some((_, members)) => members.push(i),
            None => blocks.push((*t, vec![i])),
        }
    }
    Ok(IsotypicPartition {
        degree: j,
        blocks: blocks.into_iter().map(|(_, members)| members).collect(),
    })
}

/// Coarsen the isotypic partition at the base degree by connecting blocks
/// that become isogenous over the larger extension.  The result coincides
/// with the isotypic partition taken directly at the larger degree.
pub fn l_connected_components(
    v: &ProductVariety,
    j_base: u32,
    j_ext: u32,
) -> Result<IsotypicPartition> {
    if j_base == 0 || j_ext % j_base != 0 {
        return Err(Error::BadInstance(
            "the base degree must divide the extension degree".into(),
        ));
    }
    let base = isotypic_partition(v, j_base)?;
    let q = v.factors[0]
        .field()
        .order()
        .ok_or_else(|| Error::FieldTooLarge(v.factors[0].field().describe()))?;
    // merge base blocks by the extension trace of their representatives
    let mut merged: Vec<(i128, Vec<usize>)> = Vec::new();
    for block in &base.blocks {
        let rep = block[0];
        let t = trace_over_extension(frobenius_trace(&v.factors[rep])?, q, j_ext);
        match merged.iter_mut().find(|(bt, _)| *bt == t) {
            Some((_, members)) => members.extend(block.iter().copied()),
            None => merged.push((t, block.clone())),
        }
    }
    let result = IsotypicPartition {
        degree: j_ext,
        blocks: merged
            .into_iter()
            .map(|(_, mut members)| {
                members.sort_unstable();
                members
            })
            .collect(),
    };
    debug_assert_eq!(result, isotypic_partition(v, j_ext)?);
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_fields::ExtField;

    fn curve(p: u64, a: i64, b: i64) -> Curve {
        let f = ExtField::new(p, 1).unwrap();
        Curve::from_i64(&f, a, b).unwrap()
    }

    /// First curve over F_p with the requested trace, scanning (a, b)
    /// canonically.
    fn curve_with_trace(p: u64, t: i64) -> Curve {
        let f = ExtField::new(p, 1).unwrap();
        for a in 0..p {
            for b in 0..p {
                if let Ok(e) = Curve::from_i64(&f, a as i64, b as i64) {
                    if frobenius_trace(&e).unwrap() == t {
                        return e;
                    }
                }
            }
        }
        panic!("no curve over F_{p} with trace {t}");
    }

    #[test]
    fn tate_oracle_matches_counts() {
        let e1 = curve(5, 1, 0); // t = 2
        let e2 = curve(5, 1, 1); // t = -3
        assert!(tate_isogenous(&e1, &e1, 1).unwrap());
        assert!(!tate_isogenous(&e1, &e2, 1).unwrap());
        // two supersingular curves over F_7: trace 0 on both sides
        let s1 = curve(7, 1, 0);
        let s2 = curve(7, 2, 0); // quadratic twist by the non-residue 3
        assert_eq!(frobenius_trace(&s1).unwrap(), 0);
        assert_eq!(frobenius_trace(&s2).unwrap(), 0);
        assert!(tate_isogenous(&s1, &s2, 1).unwrap());
        let other_field = Curve::from_i64(&ExtField::new(7, 2).unwrap(), 1, 0).unwrap();
        assert!(tate_isogenous(&s1, &other_field, 1).is_err());
    }

    #[test]
    fn center_discriminants() {
        // supersingular over F_11: center Q(sqrt(-11)) at level 1,
        // rational at level 2 where Frobenius is -p
        let s = curve(11, 1, 0);
        let d1 = center_data(&s, 1).unwrap();
        assert_eq!(d1.disc, -44);
        assert_eq!(d1.center, CenterKind::ImaginaryQuadratic(-11));
        assert_eq!(d1.charpoly(), [1, 0, 11]);
        let d2 = center_data(&s, 2).unwrap();
        assert_eq!(d2.t, -22);
        assert_eq!(d2.center, CenterKind::Rational);
        // ordinary over F_5 with t = -3: disc -11
        let e = curve(5, 1, 1);
        let d = center_data(&e, 1).unwrap();
        assert_eq!(d.disc, -11);
        assert_eq!(d.center, CenterKind::ImaginaryQuadratic(-11));
    }

    #[test]
    fn center_inclusion_examples() {
        let s = curve(11, 1, 0);
        assert!(center_inclusion_check(&s, 1, 1).unwrap());
        assert!(center_inclusion_check(&s, 1, 2).unwrap());
        // ordinary centers are stable under extension
        let e = curve(5, 1, 1);
        assert!(center_inclusion_check(&e, 1, 3).unwrap());
        let d3 = center_data(&e, 3).unwrap();
        assert_eq!(d3.center, CenterKind::ImaginaryQuadratic(-11));
        assert!(center_inclusion_check(&e, 2, 3).is_err());
    }

    #[test]
    fn zeta_embedding_cases() {
        let s = curve(11, 1, 0); // center Q(sqrt(-11))
        assert!(zeta_embedding_check(&s, 1, 1).unwrap());
        assert!(zeta_embedding_check(&s, 1, 2).unwrap());
        assert!(!zeta_embedding_check(&s, 1, 4).unwrap());
        // t = 2, q = 5: disc -16, fundamental -4: contains zeta_4
        let gauss = curve(5, 1, 0);
        assert!(zeta_embedding_check(&gauss, 1, 4).unwrap());
        assert!(!zeta_embedding_check(&gauss, 1, 3).unwrap());
        // t = 1, q = 7: disc -27, fundamental -3: contains zeta_3 and zeta_6
        let eis = curve_with_trace(7, 1);
        assert!(zeta_embedding_check(&eis, 1, 3).unwrap());
        assert!(zeta_embedding_check(&eis, 1, 6).unwrap());
        assert!(!zeta_embedding_check(&eis, 1, 4).unwrap());
        // totient too large regardless of the center
        assert!(!zeta_embedding_check(&eis, 1, 5).unwrap());
        assert!(!zeta_embedding_check(&gauss, 1, 8).unwrap());
    }

    #[test]
    fn linear_disjointness_cases() {
        let s = curve(11, 1, 0); // center Q(sqrt(-11))
        assert_eq!(linear_disjointness_check(&s, 1, 2).unwrap(), Disjointness::Contains);
        assert_eq!(linear_disjointness_check(&s, 1, 3).unwrap(), Disjointness::Disjoint);
        // m = 11: the quadratic subfield of Q(zeta_11) is Q(sqrt(-11))
        assert_eq!(linear_disjointness_check(&s, 1, 11).unwrap(), Disjointness::Neither);
        let eis = curve_with_trace(7, 1); // center Q(sqrt(-3))
        assert_eq!(linear_disjointness_check(&eis, 1, 3).unwrap(), Disjointness::Contains);
        // t = 2, q = 29: disc -112, fundamental -7: boundary case at m = 7
        let boundary = curve_with_trace(29, 2);
        assert_eq!(center_data(&boundary, 1).unwrap().center, CenterKind::ImaginaryQuadratic(-7));
        assert_eq!(linear_disjointness_check(&boundary, 1, 7).unwrap(), Disjointness::Neither);
        // m = 1 mod 4: the quadratic subfield is real, always disjoint
        assert_eq!(linear_disjointness_check(&s, 1, 5).unwrap(), Disjointness::Disjoint);
        assert!(linear_disjointness_check(&s, 1, 4).is_err());
    }

    #[test]
    fn partitions_and_connectivity() {
        // twist pair over F_5: traces 2 and -2 agree exactly at even levels
        let e = curve(5, 1, 0);
        let tw = curve(5, 4, 0);
        assert_eq!(frobenius_trace(&tw).unwrap(), -2);
        let other = curve(5, 1, 1); // t = -3, never matches the pair
        let v = ProductVariety::new(vec![e.clone(), tw.clone(), other.clone(), e.clone()]).unwrap();
        let p1 = isotypic_partition(&v, 1).unwrap();
        assert_eq!(p1.blocks, vec![vec![0, 3], vec![1], vec![2]]);
        let p2 = isotypic_partition(&v, 2).unwrap();
        assert_eq!(p2.blocks, vec![vec![0, 1, 3], vec![2]]);
        assert!(p1.refines(&p2));
        assert!(!p2.refines(&p1));
        let conn = l_connected_components(&v, 1, 2).unwrap();
        assert_eq!(conn, p2);
        // no merging when the degrees coincide
        let same = l_connected_components(&v, 1, 1).unwrap();
        assert_eq!(same.blocks, p1.blocks);
        assert!(ProductVariety::new(vec![]).is_err());
        let f2 = ExtField::new(5, 2).unwrap();
        let lifted = Curve::from_i64(&f2, 1, 0).unwrap();
        assert!(ProductVariety::new(vec![e, lifted]).is_err());
    }
}
