//! Exact arithmetic in the rational quaternion algebra (-1, -p)/Q and its
//! realization on the torsion of y^2 = x^3 + x.
//!
//! The algebra has basis 1, i, j, ij with i^2 = -1, j^2 = -p, ji = -ij.
//! For p = 3 mod 4 it is the endomorphism algebra of the supersingular
//! curve y^2 = x^3 + x over F_p, with i the order-4 automorphism and j the
//! Frobenius.  Coordinates are arbitrary-precision rationals because
//! conjugation by 1 + n*i introduces denominators n^2 + 1.

use crate::elliptic_curves::{
    frobenius_matrix, matrix_of_map, torsion_basis, Curve, TorsionBasis, TorsionIndex,
    TorsionMatrix,
};
use crate::error::{Error, Result};
use crate::finite_fields::{is_prime, ExtField};
use crate::isogenies::SymbolicMap;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

/// An element a + b*i + c*j + d*ij of (-1, -p)/Q with exact rational
/// coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Quaternion {
    p: u64,
    coords: [BigRational; 4],
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn check_parameter(p: u64) -> Result<()> {
    if !is_prime(p) || p % 4 != 3 {
        return Err(Error::BadQuaternionPrime(p));
    }
    Ok(())
}

impl Quaternion {
    /// Build an element from rational coordinates (1, i, j, ij).
    pub fn new(p: u64, coords: [BigRational; 4]) -> Result<Quaternion> {
        check_parameter(p)?;
        Ok(Quaternion { p, coords })
    }

    /// Build an element from integer coordinates.
    pub fn from_integers(p: u64, coords: [i64; 4]) -> Result<Quaternion> {
        Quaternion::new(p, coords.map(rat))
    }

    pub fn zero(p: u64) -> Result<Quaternion> {
        Quaternion::from_integers(p, [0, 0, 0, 0])
    }

    pub fn one(p: u64) -> Result<Quaternion> {
        Quaternion::from_integers(p, [1, 0, 0, 0])
    }

    pub fn i(p: u64) -> Result<Quaternion> {
        Quaternion::from_integers(p, [0, 1, 0, 0])
    }

    pub fn j(p: u64) -> Result<Quaternion> {
        Quaternion::from_integers(p, [0, 0, 1, 0])
    }

    pub fn ij(p: u64) -> Result<Quaternion> {
        Quaternion::from_integers(p, [0, 0, 0, 1])
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn coords(&self) -> &[BigRational; 4] {
        &self.coords
    }

    /// Coordinates as display strings, integers without a denominator.
    pub fn coord_strings(&self) -> [String; 4] {
        [0, 1, 2, 3].map(|k| self.coords[k].to_string())
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    /// Whether all four coordinates are rational integers.
    pub fn is_integral(&self) -> bool {
        self.coords.iter().all(|c| c.is_integer())
    }

    fn assert_same_algebra(&self, other: &Quaternion) {
        assert_eq!(
            self.p, other.p,
            "quaternions from different algebras cannot be combined"
        );
    }

    pub fn add(&self, other: &Quaternion) -> Quaternion {
        self.assert_same_algebra(other);
        let c = [0, 1, 2, 3].map(|k| &self.coords[k] + &other.coords[k]);
        Quaternion { p: self.p, coords: c }
    }

    pub fn sub(&self, other: &Quaternion) -> Quaternion {
        self.assert_same_algebra(other);
        let c = [0, 1, 2, 3].map(|k| &self.coords[k] - &other.coords[k]);
        Quaternion { p: self.p, coords: c }
    }

    pub fn neg(&self) -> Quaternion {
        let c = [0, 1, 2, 3].map(|k| -&self.coords[k]);
        Quaternion { p: self.p, coords: c }
    }

    pub fn scale(&self, s: &BigRational) -> Quaternion {
        let c = [0, 1, 2, 3].map(|k| &self.coords[k] * s);
        Quaternion { p: self.p, coords: c }
    }

    /// Product in the algebra: bilinear extension of the basis relations
    /// i^2 = -1, j^2 = -p, ij = k, ji = -k, k^2 = -p, ik = -j, ki = j,
    /// jk = p*i, kj = -p*i.
    pub fn mul(&self, other: &Quaternion) -> Quaternion {
        self.assert_same_algebra(other);
        let p = rat(self.p as i64);
        let [a1, b1, c1, d1] = &self.coords;
        let [a2, b2, c2, d2] = &other.coords;
        let one = a1 * a2 - b1 * b2 - &p * (c1 * c2) - &p * (d1 * d2);
        let i = a1 * b2 + b1 * a2 + &p * (c1 * d2) - &p * (d1 * c2);
        let j = a1 * c2 + c1 * a2 - b1 * d2 + d1 * b2;
        let k = a1 * d2 + d1 * a2 + b1 * c2 - c1 * b2;
        Quaternion { p: self.p, coords: [one, i, j, k] }
    }

    /// Standard involution: negate the i, j, ij coordinates.
    pub fn conj(&self) -> Quaternion {
        let [a, b, c, d] = &self.coords;
        Quaternion {
            p: self.p,
            coords: [a.clone(), -b, -c, -d],
        }
    }

    /// Reduced norm a^2 + b^2 + p c^2 + p d^2.
    pub fn norm(&self) -> BigRational {
        let p = rat(self.p as i64);
        let [a, b, c, d] = &self.coords;
        a * a + b * b + &p * (c * c) + &p * (d * d)
    }

    /// Reduced trace 2a.
    pub fn trace(&self) -> BigRational {
        &self.coords[0] + &self.coords[0]
    }

    pub fn inv(&self) -> Result<Quaternion> {
        let n = self.norm();
        if n.is_zero() {
            return Err(Error::BadInstance("cannot invert the zero quaternion".into()));
        }
        Ok(self.conj().scale(&n.recip()))
    }
}

/// Conjugation x |-> f^{-1} x f, an inner automorphism of the algebra.
pub fn conjugation_map(f: &Quaternion, x: &Quaternion) -> Result<Quaternion> {
    Ok(f.inv()?.mul(x).mul(f))
}

/// Everything the worked conjugation example produces for f = 1 + n*i,
/// with exact rational strings for external consumption.
#[derive(Clone, Debug, Serialize)]
pub struct ConjugationReport {
    pub p: u64,
    pub n: u64,
    /// Coordinates of f = 1 + n*i.
    pub f: [String; 4],
    /// Coordinates of f^{-1} = (1 - n*i)/(n^2 + 1).
    pub f_inv: [String; 4],
    /// Coordinates of phi(j) = f^{-1} j f.
    pub phi_j: [String; 4],
    /// phi(j) agrees with ((1 - n^2) j - 2n ij)/(n^2 + 1).
    pub closed_form_matches: bool,
    /// phi(j)^2 as a rational string; must equal -p.
    pub phi_j_squared: String,
    pub phi_j_square_is_minus_p: bool,
    /// Q + Q*phi(j) differs from Q + Q*j, witnessed by a nonzero
    /// ij-coordinate of phi(j); false exactly when n = 0.
    pub subfields_distinct: bool,
}

/// Run the conjugation example for f = 1 + n*i in (-1, -p)/Q and check the
/// closed form ((1 - n^2) j - 2n ij)/(n^2 + 1) for phi(j) = f^{-1} j f.
pub fn conjugation_example_report(p: u64, n: u64) -> Result<ConjugationReport> {
    check_parameter(p)?;
    let n_i64 = i64::try_from(n).map_err(|_| Error::BadInstance("n too large".into()))?;
    let f = Quaternion::from_integers(p, [1, n_i64, 0, 0])?;
    let f_inv = f.inv()?;
    let j = Quaternion::j(p)?;
    let phi_j = conjugation_map(&f, &j)?;

    let denom = rat(n_i64 * n_i64 + 1);
    let closed = Quaternion::new(
        p,
        [
            rat(0),
            rat(0),
            rat(1 - n_i64 * n_i64) / &denom,
            rat(-2 * n_i64) / &denom,
        ],
    )?;
    let closed_form_matches = phi_j == closed;

    let square = phi_j.mul(&phi_j);
    let minus_p = Quaternion::from_integers(p, [-(p as i64), 0, 0, 0])?;
    let phi_j_square_is_minus_p = square == minus_p;
    let subfields_distinct = !phi_j.coords()[3].is_zero();

    Ok(ConjugationReport {
        p,
        n,
        f: f.coord_strings(),
        f_inv: f_inv.coord_strings(),
        phi_j: phi_j.coord_strings(),
        closed_form_matches,
        phi_j_squared: square.coords()[0].to_string(),
        phi_j_square_is_minus_p,
        subfields_distinct,
    })
}

/// The representation of integral quaternions on the n-torsion of
/// y^2 = x^3 + x over F_p: 1, i, j map to the identity, the order-4
/// automorphism, and Frobenius.
pub struct TorsionRepr {
    p: u64,
    n: u64,
    basis: TorsionBasis,
    m_i: TorsionMatrix,
    m_j: TorsionMatrix,
}

impl TorsionRepr {
    /// Set up the representation at level n, which must be coprime to 2p.
    pub fn new(p: u64, n: u64) -> Result<TorsionRepr> {
        check_parameter(p)?;
        if n < 3 || n % 2 == 0 || n % p == 0 {
            return Err(Error::BadInstance(
                "torsion level must be odd, at least 3, and coprime to p".into(),
            ));
        }
        let base = ExtField::new(p, 1)?;
        let curve = Curve::from_i64(&base, 1, 0)?;
        let basis = torsion_basis(&curve, n)?;
        let auto = SymbolicMap::quartic_auto(&basis.curve)?;
        let index = TorsionIndex::new(&basis);
        let m_i_raw = matrix_of_map(&index, &basis, |pt| auto.evaluate(pt))?;
        let m_j = frobenius_matrix(&curve, n, &basis, 1)?;
        // i and -i are equally valid automorphisms (the two square roots of
        // -1 swap them); pick the matrix whose upper-right entry lies in
        // [0, n/2], breaking ties toward the row-major smaller matrix
        let m_i = normalize_sign(&m_i_raw, n);
        Ok(TorsionRepr { p, n, basis, m_i, m_j })
    }

    pub fn level(&self) -> u64 {
        self.n
    }

    pub fn basis(&self) -> &TorsionBasis {
        &self.basis
    }

    /// Matrix of the order-4 automorphism.
    pub fn m_i(&self) -> &TorsionMatrix {
        &self.m_i
    }

    /// Matrix of Frobenius.
    pub fn m_j(&self) -> &TorsionMatrix {
        &self.m_j
    }

    /// Matrix of an integral quaternion a + b*i + c*j + d*ij acting on the
    /// n-torsion.
    pub fn rep(&self, x: &Quaternion) -> Result<TorsionMatrix> {
        if x.p() != self.p {
            return Err(Error::BadInstance("quaternion from a different algebra".into()));
        }
        if !x.is_integral() {
            return Err(Error::NonIntegralQuaternion);
        }
        let n = self.n;
        let scalars = [0, 1, 2, 3].map(|k| {
            let int = x.coords()[k].to_integer();
            let m = BigInt::from(n);
            let r = ((int % &m) + &m) % &m;
            i64::try_from(r).expect("residue fits")
        });
        let m_k = self.m_i.mul(&self.m_j);
        let mut acc = TorsionMatrix::scalar(n, scalars[0]);
        acc = acc.add(&self.m_i.scale(scalars[1]));
        acc = acc.add(&self.m_j.scale(scalars[2]));
        acc = acc.add(&m_k.scale(scalars[3]));
        Ok(acc)
    }
}

/// Choose between m and -m by the fixed sign convention on the upper-right
/// entry.
fn normalize_sign(m: &TorsionMatrix, n: u64) -> TorsionMatrix {
    let neg = m.neg();
    let half = n / 2;
    let ok_pos = m.m[0][1] <= half;
    let ok_neg = neg.m[0][1] <= half;
    if ok_pos != ok_neg {
        return if ok_pos { m.clone() } else { neg };
    }
    let flat = |t: &TorsionMatrix| [t.m[0][0], t.m[0][1], t.m[1][0], t.m[1][1]];
    if flat(m) <= flat(&neg) {
        m.clone()
    } else {
        neg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: u64, coords: [i64; 4]) -> Quaternion {
        Quaternion::from_integers(p, coords).unwrap()
    }

    #[test]
    fn multiplication_table() {
        let p = 11;
        let one = Quaternion::one(p).unwrap();
        let i = Quaternion::i(p).unwrap();
        let j = Quaternion::j(p).unwrap();
        let k = Quaternion::ij(p).unwrap();
        assert_eq!(i.mul(&j), k);
        assert_eq!(j.mul(&i), k.neg());
        assert_eq!(i.mul(&i), one.neg());
        assert_eq!(j.mul(&j), q(p, [-11, 0, 0, 0]));
        assert_eq!(k.mul(&k), q(p, [-11, 0, 0, 0]));
        assert_eq!(i.mul(&k), j.neg());
        assert_eq!(k.mul(&i), j);
        assert_eq!(j.mul(&k), q(p, [0, 11, 0, 0]));
        assert_eq!(k.mul(&j), q(p, [0, -11, 0, 0]));
        assert!(Quaternion::from_integers(12, [1, 0, 0, 0]).is_err());
        assert!(Quaternion::from_integers(13, [1, 0, 0, 0]).is_err());
    }

    #[test]
    fn norms_and_inverses() {
        let x = q(11, [1, 2, 3, 4]);
        let y = q(11, [2, -1, 0, 5]);
        assert_eq!(x.norm(), rat(1 + 4 + 11 * 9 + 11 * 16));
        assert_eq!(x.mul(&y).norm(), x.norm() * y.norm());
        let xi = x.inv().unwrap();
        assert_eq!(x.mul(&xi), Quaternion::one(11).unwrap());
        assert_eq!(xi.mul(&x), Quaternion::one(11).unwrap());
        assert!(Quaternion::zero(11).unwrap().inv().is_err());
        // (1 + n i)^{-1} = (1 - n i)/(n^2 + 1)
        let f = q(11, [1, 5, 0, 0]);
        let expect = Quaternion::new(
            11,
            [rat(1) / rat(26), rat(-5) / rat(26), rat(0), rat(0)],
        )
        .unwrap();
        assert_eq!(f.inv().unwrap(), expect);
    }

    #[test]
    fn conjugation_golden_values() {
        let p = 11;
        let j = Quaternion::j(p).unwrap();
        // f = 1: identity map
        assert_eq!(conjugation_map(&Quaternion::one(p).unwrap(), &j).unwrap(), j);
        // f = i negates j
        assert_eq!(conjugation_map(&Quaternion::i(p).unwrap(), &j).unwrap(), j.neg());
        // f = 1 + 5i: phi(j) = (-12 j - 5 ij)/13
        let f = q(p, [1, 5, 0, 0]);
        let phi_j = conjugation_map(&f, &j).unwrap();
        let expect = Quaternion::new(
            p,
            [rat(0), rat(0), rat(-12) / rat(13), rat(-5) / rat(13)],
        )
        .unwrap();
        assert_eq!(phi_j, expect);
        assert_eq!(phi_j.mul(&phi_j), q(p, [-11, 0, 0, 0]));
        // norm and trace preserved
        let x = q(p, [3, 1, -2, 7]);
        let phi_x = conjugation_map(&f, &x).unwrap();
        assert_eq!(phi_x.norm(), x.norm());
        assert_eq!(phi_x.trace(), x.trace());
    }

    #[test]
    fn example_report_values() {
        let r = conjugation_example_report(11, 5).unwrap();
        assert_eq!(r.phi_j, ["0", "0", "-12/13", "-5/13"]);
        assert_eq!(r.f_inv, ["1/26", "-5/26", "0", "0"]);
        assert!(r.closed_form_matches);
        assert_eq!(r.phi_j_squared, "-11");
        assert!(r.phi_j_square_is_minus_p);
        assert!(r.subfields_distinct);
        // n = 0 degenerates to the identity
        let r0 = conjugation_example_report(11, 0).unwrap();
        assert!(r0.closed_form_matches);
        assert!(!r0.subfields_distinct);
        for p in [7, 19, 23] {
            for n in 1..=7 {
                let r = conjugation_example_report(p, n).unwrap();
                assert!(r.closed_form_matches && r.phi_j_square_is_minus_p && r.subfields_distinct);
            }
        }
        assert!(conjugation_example_report(13, 1).is_err());
    }

    #[test]
    fn torsion_representation_relations() {
        for (p, n) in [(7, 3), (11, 3), (11, 5)] {
            let repr = TorsionRepr::new(p, n).unwrap();
            let minus_one = TorsionMatrix::scalar(n, -1);
            let minus_p = TorsionMatrix::scalar(n, -(p as i64));
            assert_eq!(repr.m_i().mul(repr.m_i()), minus_one);
            assert_eq!(repr.m_j().mul(repr.m_j()), minus_p);
            assert_eq!(
                repr.m_j().mul(repr.m_i()),
                repr.m_i().mul(repr.m_j()).neg(),
                "anticommutation at p={p} n={n}"
            );
            // sign convention: the preferred representative is returned
            assert_eq!(repr.m_i(), &normalize_sign(repr.m_i(), n));
        }
    }

    #[test]
    fn torsion_representation_is_a_ring_map() {
        let p = 11;
        let n = 5;
        let repr = TorsionRepr::new(p, n).unwrap();
        let sample = [
            Quaternion::one(p).unwrap(),
            Quaternion::i(p).unwrap(),
            Quaternion::j(p).unwrap(),
            Quaternion::ij(p).unwrap(),
            q(p, [1, 5, 0, 0]),
            q(p, [2, -1, 3, 4]),
        ];
        for x in &sample {
            for y in &sample {
                assert_eq!(
                    repr.rep(&x.mul(y)).unwrap(),
                    repr.rep(x).unwrap().mul(&repr.rep(y).unwrap())
                );
                assert_eq!(
                    repr.rep(&x.add(y)).unwrap(),
                    repr.rep(x).unwrap().add(&repr.rep(y).unwrap())
                );
            }
        }
        // 1 + 5i acts as the identity on the 5-torsion
        assert_eq!(
            repr.rep(&q(p, [1, 5, 0, 0])).unwrap(),
            TorsionMatrix::identity(n)
        );
        assert!(repr.rep(&q(7, [1, 0, 0, 0])).is_err());
        let half = Quaternion::new(p, [rat(1) / rat(2), rat(0), rat(0), rat(0)]).unwrap();
        assert!(matches!(repr.rep(&half), Err(Error::NonIntegralQuaternion)));
        assert!(TorsionRepr::new(11, 4).is_err());
        assert!(TorsionRepr::new(11, 11).is_err());
    }
}
