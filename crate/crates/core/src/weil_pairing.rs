//! Weil pairing on n-torsion via Miller's algorithm.
//!
//! Both arguments are represented by translated divisors (Q+S) - (S) and
//! (P+T) - (T), so every function is evaluated at affine points only.  The
//! auxiliary points S, T come from the canonical point enumeration and are
//! advanced deterministically whenever an intermediate line vanishes, so the
//! computed value never depends on randomness.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use crate::elliptic_curves::{subgroup_from_generators, Curve, CurvePoint, TorsionBasis};
use crate::error::{Error, Result};
use crate::finite_fields::FieldElement;

/// A pairing value together with its exact multiplicative order.
#[derive(Clone, Debug)]
pub struct RootOfUnity {
    pub value: FieldElement,
    pub order: u64,
}

/// e_n(P, Q) for n-torsion points P, Q on the same curve.
pub fn weil_pairing(n: u64, p: &CurvePoint, q: &CurvePoint) -> Result<RootOfUnity> {
    if p.curve() != q.curve() {
        return Err(Error::MixedCurves);
    }
    let curve = p.curve().clone();
    if n == 0 {
        return Err(Error::LevelTooSmall(0));
    }
    if n % curve.p() == 0 {
        return Err(Error::LevelDivisibleByP { n, p: curve.p() });
    }
    if !p.mul_u64(n).is_infinity() || !q.mul_u64(n).is_infinity() {
        return Err(Error::BadInstance(format!("arguments are not {n}-torsion")));
    }
    let one = curve.field().one();
    if p.is_infinity() || q.is_infinity() || n == 1 {
        return Ok(RootOfUnity { value: one, order: 1 });
    }
    if let Some(value) = pairing_in_curve_field(n, p, q) {
        let order = multiplicative_order(&value, n);
        return Ok(RootOfUnity { value, order });
    }
    // Tiny fields can lack enough affine points for disjoint divisor
    // supports.  The pairing value is intrinsic, so compute it after a
    // small constant extension and pull it back down.
    let base = curve.field().clone();
    for rel in [2usize, 3] {
        let total = base.degree() * rel;
        if total > crate::finite_fields::MAX_DEGREE {
            continue;
        }
        let big = crate::finite_fields::ExtField::new(base.p(), total)?;
        let big_curve = curve.lift_to(&big)?;
        let pl = p.lift_to(&big_curve)?;
        let ql = q.lift_to(&big_curve)?;
        if let Some(value) = pairing_in_curve_field(n, &pl, &ql) {
            let value = base.unembed(&value)?;
            let order = multiplicative_order(&value, n);
            return Ok(RootOfUnity { value, order });
        }
    }
    Err(Error::BadInstance("auxiliary point schedule exhausted".into()))
}

type AuxKey = (u64, usize, Vec<u64>, Vec<u64>);

/// Point enumeration is the dominant cost of a pairing on a large field,
/// and the schedule is a pure function of the curve, so share it globally.
fn aux_cache() -> &'static Mutex<HashMap<AuxKey, Vec<CurvePoint>>> {
    static CACHE: OnceLock<Mutex<HashMap<AuxKey, Vec<CurvePoint>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn aux_points(curve: &Curve) -> Vec<CurvePoint> {
    let key: AuxKey = (
        curve.p(),
        curve.field().degree(),
        curve.a().coeffs().to_vec(),
        curve.b().coeffs().to_vec(),
    );
    if let Some(pts) = aux_cache().lock().expect("aux cache").get(&key) {
        return pts.clone();
    }
    let pts: Vec<CurvePoint> = curve.points().take(24).collect();
    aux_cache().lock().expect("aux cache").insert(key, pts.clone());
    pts
}

/// Deterministic schedule of auxiliary pairs in the points' own field.
fn pairing_in_curve_field(n: u64, p: &CurvePoint, q: &CurvePoint) -> Option<FieldElement> {
    let aux = aux_points(p.curve());
    for s in &aux {
        for t in &aux {
            if t == s {
                continue;
            }
            if let Some(value) = pairing_with_aux(n, p, q, s, t) {
                debug_assert!(value.pow_u64(n).is_one());
                return Some(value);
            }
        }
    }
    None
}

fn multiplicative_order(z: &FieldElement, n: u64) -> u64 {
    for d in 1..=n {
        if n % d == 0 && z.pow_u64(d).is_one() {
            return d;
        }
    }
    unreachable!("value is an n-th root of unity");
}

/// One attempt with a fixed auxiliary pair; None means "degenerate, retry".
fn pairing_with_aux(
    n: u64,
    p: &CurvePoint,
    q: &CurvePoint,
    s: &CurvePoint,
    t: &CurvePoint,
) -> Option<FieldElement> {
    let qs = q.add(s).ok()?;
    let pt = p.add(t).ok()?;
    if qs.is_infinity() || pt.is_infinity() {
        return None;
    }
    // supports of the two divisors must be disjoint
    for u in [&qs, s] {
        if u == &pt || u == t {
            return None;
        }
    }
    // f_{D_P} = f_P * g^n with g = v_{P+T} / l_{P,T}, evaluated over (Q+S) - (S)
    let num = &eval_translated(n, p, t, &pt, &qs)?
        * &eval_translated(n, p, t, &pt, s)?.inv()?;
    // f_{D_Q} = f_Q * h^n with h = v_{Q+S} / l_{Q,S}, evaluated over (P+T) - (T)
    let den = &eval_translated(n, q, s, &qs, &pt)?
        * &eval_translated(n, q, s, &qs, t)?.inv()?;
    Some(&num * &den.inv()?)
}

/// (f_R * (v_{R+T}/l_{R,T})^n)(at); all factor values checked for zeros.
///
/// R may have any exact order m dividing n: the function with divisor
/// n(R) - n(O) is the m-th Miller function raised to n/m, and running the
/// loop on m keeps intermediate multiples away from O.
fn eval_translated(
    n: u64,
    r: &CurvePoint,
    t: &CurvePoint,
    rt: &CurvePoint,
    at: &CurvePoint,
) -> Option<FieldElement> {
    let m = crate::elliptic_curves::point_order(r, n);
    let f = miller(m, r, at)?.pow_u64(n / m);
    let v = vertical_value(rt, at)?;
    let l = chord_value(r, t, at)?;
    let g = &v * &l.inv()?;
    Some(&f * &g.pow_u64(n))
}

/// f_{m,R}(at) for R of exact order m, by the double-and-add Miller loop;
/// None on any vanishing line.
fn miller(n: u64, r: &CurvePoint, at: &CurvePoint) -> Option<FieldElement> {
    debug_assert!(n >= 1 && !r.is_infinity() && !at.is_infinity());
    let mut f = r.curve().field().one();
    let mut v = r.clone();
    let bits = 64 - n.leading_zeros();
    for i in (0..bits - 1).rev() {
        let dbl = v.double();
        f = &f.square() * &step_value(&v, &v, &dbl, at)?;
        v = dbl;
        if (n >> i) & 1 == 1 {
            let sum = v.add(r).ok()?;
            f = &f * &step_value(&v, r, &sum, at)?;
            v = sum;
        }
    }
    debug_assert!(v.is_infinity());
    Some(f)
}

/// l_{A,B}(at) / v_{A+B}(at); the vertical factor is dropped when A+B = O,
/// in which case the "chord" is the vertical at A.
fn step_value(
    a: &CurvePoint,
    b: &CurvePoint,
    sum: &CurvePoint,
    at: &CurvePoint,
) -> Option<FieldElement> {
    if sum.is_infinity() {
        return vertical_value(a, at);
    }
    let l = chord_value(a, b, at)?;
    let v = vertical_value(sum, at)?;
    Some(&l * &v.inv()?)
}

/// Value at `at` of the chord (or tangent) through a and b; None if zero or
/// if it degenerates to a vertical that vanishes at `at`.
fn chord_value(a: &CurvePoint, b: &CurvePoint, at: &CurvePoint) -> Option<FieldElement> {
    let (xa, ya) = a.xy()?;
    let (xb, yb) = b.xy()?;
    let (xe, ye) = at.xy()?;
    let curve = a.curve();
    let field = curve.field();
    let lambda = if xa == xb {
        if ya == &yb.neg() {
            // vertical line through a and -a
            let val = xe - xa;
            return if val.is_zero() { None } else { Some(val) };
        }
        let num = &(&field.from_u64(3) * &xa.square()) + curve.a();
        let den = &field.from_u64(2) * ya;
        num.mul(&den.inv()?)
    } else {
        (yb - ya).mul(&(xb - xa).inv()?)
    };
    let val = &(ye - ya) - &lambda.mul(&(xe - xa));
    if val.is_zero() {
        None
    } else {
        Some(val)
    }
}

/// x(at) - x(c); None if zero.
fn vertical_value(c: &CurvePoint, at: &CurvePoint) -> Option<FieldElement> {
    let (xc, _) = c.xy()?;
    let (xe, _) = at.xy()?;
    let val = xe - xc;
    if val.is_zero() {
        None
    } else {
        Some(val)
    }
}

/// Whether the subgroup generated by `gens` inside E[n] is maximal isotropic:
/// order exactly n and all pairings between generators trivial.
pub fn is_maximal_isotropic(n: u64, gens: &[CurvePoint]) -> Result<bool> {
    if gens.is_empty() {
        return Ok(n == 1);
    }
    let curve = gens[0].curve().clone();
    for g in gens {
        if g.curve() != &curve {
            return Err(Error::MixedCurves);
        }
        if !g.mul_u64(n).is_infinity() {
            return Err(Error::BadInstance(format!("generator is not {n}-torsion")));
        }
    }
    let subgroup = subgroup_from_generators(&curve, gens)?;
    if subgroup.len() as u64 != n {
        return Ok(false);
    }
    for (i, g) in gens.iter().enumerate() {
        for h in &gens[i..] {
            if weil_pairing(n, g, h)?.order != 1 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Outcome of the axiom checks for one torsion basis.
#[derive(Clone, Copy, Debug)]
pub struct PairingAxioms {
    /// e(aP+bQ, cP+dQ) = e(P,Q)^(ad-bc) over a small grid of coefficients
    pub bilinear: bool,
    /// e(P,P) = e(Q,Q) = 1, computed honestly through the Miller loop
    pub alternating: bool,
    /// e(P,Q) has exact order n
    pub nondegenerate: bool,
    /// e(\pi P, \pi Q) = \pi(e(P, Q)) for the base-field Frobenius
    pub galois_compatible: bool,
}

impl PairingAxioms {
    pub fn all_hold(&self) -> bool {
        self.bilinear && self.alternating && self.nondegenerate && self.galois_compatible
    }
}

/// Run the axiom suite on one basis of E[n].
pub fn check_pairing_axioms(basis: &TorsionBasis) -> Result<PairingAxioms> {
    let n = basis.n;
    let z = weil_pairing(n, &basis.p, &basis.q)?;
    let nondegenerate = z.order == n;

    let mut bilinear = true;
    let combo = |a: u64, b: u64| -> CurvePoint {
        basis.p.mul_u64(a).add(&basis.q.mul_u64(b)).unwrap()
    };
    'outer: for a in 0..3u64 {
        for b in 0..3u64 {
            for c in 0..3u64 {
                for d in 0..3u64 {
                    let left = weil_pairing(n, &combo(a, b), &combo(c, d))?;
                    let exp = ((a * d) as i64 - (b * c) as i64).rem_euclid(n as i64) as u64;
                    if left.value != z.value.pow_u64(exp) {
                        bilinear = false;
                        break 'outer;
                    }
                }
            }
        }
    }

    let alternating = weil_pairing(n, &basis.p, &basis.p)?.order == 1
        && weil_pairing(n, &basis.q, &basis.q)?.order == 1;

    // base field of the unlifted curve
    let base_deg = basis.curve.field().degree() / basis.relative_degree;
    let pp = basis.p.galois_image(base_deg)?;
    let qq = basis.q.galois_image(base_deg)?;
    let galois_compatible = weil_pairing(n, &pp, &qq)?.value == z.value.frobenius(base_deg);

    Ok(PairingAxioms { bilinear, alternating, nondegenerate, galois_compatible })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic_curves::{torsion_basis, Curve};
    use crate::finite_fields::{sqrt_in_field, ExtField};

    #[test]
    fn golden_two_torsion_value() {
        let f = ExtField::new(11, 2).unwrap();
        let e = Curve::from_i64(&f, 1, 0).unwrap();
        let r = sqrt_in_field(&f.from_i64(-1)).unwrap();
        let p = e.point(f.zero(), f.zero()).unwrap();
        let q = e.point(r, f.zero()).unwrap();
        let z = weil_pairing(2, &p, &q).unwrap();
        assert_eq!(z.value, f.from_i64(-1));
        assert_eq!(z.order, 2);
        // alternating on equal arguments, honestly through the Miller loop
        assert_eq!(weil_pairing(2, &p, &p).unwrap().order, 1);
    }

    #[test]
    fn pairing_rejects_bad_arguments() {
        let f = ExtField::new(11, 1).unwrap();
        let e = Curve::from_i64(&f, 1, 0).unwrap();
        let p = e.point(f.from_u64(0), f.from_u64(0)).unwrap();
        assert!(weil_pairing(3, &p, &p).is_err()); // not 3-torsion
        assert!(matches!(
            weil_pairing(11, &p, &p),
            Err(Error::LevelDivisibleByP { n: 11, p: 11 })
        ));
    }

    #[test]
    fn axiom_suite_holds_on_sample_bases() {
        for (p, a, b, n) in [(11i64, 1i64, 0i64, 3u64), (5, 1, 0, 2), (7, 1, 0, 4)] {
            let f = ExtField::new(p as u64, 1).unwrap();
            let e = Curve::from_i64(&f, a, b).unwrap();
            let basis = torsion_basis(&e, n).unwrap();
            let ax = check_pairing_axioms(&basis).unwrap();
            assert!(ax.all_hold(), "axiom failure for p={p} n={n}: {ax:?}");
        }
    }

    #[test]
    fn maximal_isotropic_detection() {
        let f = ExtField::new(11, 2).unwrap();
        let e = Curve::from_i64(&f, 1, 0).unwrap();
        let r = sqrt_in_field(&f.from_i64(-1)).unwrap();
        let p = e.point(f.zero(), f.zero()).unwrap();
        let q = e.point(r, f.zero()).unwrap();
        // one 2-torsion point spans a Lagrangian line of E[2]
        assert!(is_maximal_isotropic(2, &[p.clone()]).unwrap());
        // the full 2-torsion has order 4, not 2
        assert!(!is_maximal_isotropic(2, &[p, q]).unwrap());
    }
}
