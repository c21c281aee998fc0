//! Dense univariate polynomials over an extension field.
//!
//! Everything here stays at desk scale: schoolbook multiplication, Euclidean
//! division, and a deterministic root finder.  Coefficients are stored low
//! degree first with no trailing zeros, so the zero polynomial is empty.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::One;

use crate::finite_fields::{ExtField, FieldElement};

#[derive(Clone, PartialEq, Eq)]
pub struct Poly {
    field: ExtField,
    coeffs: Vec<FieldElement>,
}

impl Poly {
    pub fn zero(field: ExtField) -> Poly {
        Poly { field, coeffs: Vec::new() }
    }

    pub fn one(field: ExtField) -> Poly {
        let c = field.one();
        Poly { field, coeffs: vec![c] }
    }

    pub fn constant(c: FieldElement) -> Poly {
        let field = c.field().clone();
        let mut p = Poly { field, coeffs: vec![c] };
        p.trim();
        p
    }

    /// The monomial x.
    pub fn x(field: ExtField) -> Poly {
        let coeffs = vec![field.zero(), field.one()];
        Poly { field, coeffs }
    }

    pub fn from_coeffs(field: ExtField, coeffs: Vec<FieldElement>) -> Poly {
        let mut p = Poly { field, coeffs };
        p.trim();
        p
    }

    pub fn field(&self) -> &ExtField {
        &self.field
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> FieldElement {
        self.coeffs.get(i).cloned().unwrap_or_else(|| self.field.zero())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// None for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&FieldElement> {
        self.coeffs.last()
    }

    pub fn is_monic(&self) -> bool {
        self.leading().map_or(false, |c| c.is_one())
    }

    fn trim(&mut self) {
        while self.coeffs.last().map_or(false, |c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = Vec::with_capacity(n);
        for i in 0..n {
            coeffs.push(self.coeff(i).add(&other.coeff(i)));
        }
        Poly::from_coeffs(self.field.clone(), coeffs)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = Vec::with_capacity(n);
        for i in 0..n {
            coeffs.push(self.coeff(i).sub(&other.coeff(i)));
        }
        Poly::from_coeffs(self.field.clone(), coeffs)
    }

    pub fn neg(&self) -> Poly {
        let coeffs = self.coeffs.iter().map(|c| c.neg()).collect();
        Poly { field: self.field.clone(), coeffs }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero(self.field.clone());
        }
        let mut coeffs = vec![self.field.zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] = coeffs[i + j].add(&a.mul(b));
            }
        }
        Poly::from_coeffs(self.field.clone(), coeffs)
    }

    pub fn mul_scalar(&self, s: &FieldElement) -> Poly {
        let coeffs = self.coeffs.iter().map(|c| c.mul(s)).collect();
        Poly::from_coeffs(self.field.clone(), coeffs)
    }

    /// Quotient and remainder by a nonzero divisor.
    pub fn divrem(&self, divisor: &Poly) -> (Poly, Poly) {
        assert!(!divisor.is_zero(), "division by the zero polynomial");
        let dd = divisor.coeffs.len() - 1;
        if self.coeffs.len() <= dd {
            return (Poly::zero(self.field.clone()), self.clone());
        }
        let lcinv = divisor.leading().unwrap().inv().expect("nonzero leading coefficient");
        let mut rem = self.coeffs.clone();
        let mut quot = vec![self.field.zero(); self.coeffs.len() - dd];
        for i in (dd..rem.len()).rev() {
            let c = rem[i].mul(&lcinv);
            if c.is_zero() {
                continue;
            }
            quot[i - dd] = c.clone();
            for (j, dcoeff) in divisor.coeffs.iter().enumerate() {
                rem[i - dd + j] = rem[i - dd + j].sub(&c.mul(dcoeff));
            }
        }
        rem.truncate(dd);
        (
            Poly::from_coeffs(self.field.clone(), quot),
            Poly::from_coeffs(self.field.clone(), rem),
        )
    }

    pub fn rem(&self, divisor: &Poly) -> Poly {
        self.divrem(divisor).1
    }

    /// Monic gcd; gcd(0, 0) = 0.
    pub fn gcd(&self, other: &Poly) -> Poly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.into_monic()
    }

    pub fn into_monic(self) -> Poly {
        match self.leading() {
            None => self,
            Some(lc) if lc.is_one() => self,
            Some(lc) => {
                let inv = lc.inv().unwrap();
                self.mul_scalar(&inv)
            }
        }
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero(self.field.clone());
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c.mul(&self.field.from_u64(i as u64)))
            .collect();
        Poly::from_coeffs(self.field.clone(), coeffs)
    }

    pub fn eval(&self, x: &FieldElement) -> FieldElement {
        let mut acc = self.field.zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(x).add(c);
        }
        acc
    }

    /// self^e mod m by square and multiply.
    pub fn pow_mod(&self, e: &BigUint, m: &Poly) -> Poly {
        let mut acc = Poly::one(self.field.clone());
        let mut base = self.rem(m);
        let bits = e.bits();
        for i in 0..bits {
            if e.bit(i) {
                acc = acc.mul(&base).rem(m);
            }
            if i + 1 < bits {
                base = base.mul(&base).rem(m);
            }
        }
        acc
    }

    /// Map every coefficient through the j-fold p-power Frobenius.
    pub fn coeff_frobenius(&self, j: usize) -> Poly {
        let coeffs = self.coeffs.iter().map(|c| c.frobenius(j)).collect();
        Poly { field: self.field.clone(), coeffs }
    }

    /// Re-interpret the coefficients in a larger field.
    pub fn embed(&self, target: &ExtField) -> crate::error::Result<Poly> {
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for c in &self.coeffs {
            coeffs.push(target.embed(c)?);
        }
        Ok(Poly { field: target.clone(), coeffs })
    }
}

impl std::fmt::Debug for Poly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| match i {
                0 => format!("({c:?})"),
                1 => format!("({c:?})*X"),
                _ => format!("({c:?})*X^{i}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

/// All roots of f in its coefficient field, sorted canonically.
///
/// The square-free part of gcd(f, x^q - x) collects the distinct roots; it is
/// then split with the quadratic-character trick, shifting by field elements
/// in canonical order, so the result is deterministic.
pub fn roots_in_field(f: &Poly) -> Vec<FieldElement> {
    let field = f.field().clone();
    if f.is_zero() {
        panic!("roots of the zero polynomial are not defined");
    }
    if f.degree() == Some(0) {
        return Vec::new();
    }
    let q = field.order_big();
    let x = Poly::x(field.clone());
    let xq = x.pow_mod(&q, f);
    let linear_part = f.gcd(&xq.sub(&x));
    let mut roots = Vec::new();
    collect_roots(&linear_part, &q, &mut roots);
    roots.sort_by(|a, b| a.canonical_cmp(b));
    roots
}

fn collect_roots(g: &Poly, q: &BigUint, out: &mut Vec<FieldElement>) {
    let field = g.field().clone();
    match g.degree() {
        None | Some(0) => {}
        Some(1) => {
            // monic after gcd, but normalize anyway
            let g = g.clone().into_monic();
            out.push(g.coeff(0).neg());
        }
        Some(_) => {
            let half: BigUint = (q - BigUint::one()).div_floor(&BigUint::from(2u32));
            let mut shift = 0u64;
            loop {
                let c = field.element_from_ordinal(shift);
                let base = Poly::from_coeffs(field.clone(), vec![c, field.one()]);
                let chi = base.pow_mod(&half, g).sub(&Poly::one(field.clone()));
                let h = g.gcd(&chi);
                let dh = h.degree().map_or(0, |d| d);
                if dh > 0 && dh < g.degree().unwrap() {
                    let (other, r) = g.divrem(&h);
                    debug_assert!(r.is_zero());
                    collect_roots(&h, q, out);
                    collect_roots(&other, q, out);
                    return;
                }
                shift += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly_from_u64(field: &ExtField, cs: &[u64]) -> Poly {
        Poly::from_coeffs(
            field.clone(),
            cs.iter().map(|&c| field.from_u64(c)).collect(),
        )
    }

    #[test]
    fn divrem_reconstructs() {
        let f = ExtField::new(13, 1).unwrap();
        let a = poly_from_u64(&f, &[3, 1, 4, 1, 5]);
        let b = poly_from_u64(&f, &[2, 7, 1]);
        let (q, r) = a.divrem(&b);
        assert_eq!(q.mul(&b).add(&r), a);
        assert!(r.degree().map_or(true, |d| d < 2));
    }

    #[test]
    fn gcd_of_shared_factor() {
        let f = ExtField::new(11, 1).unwrap();
        let a = poly_from_u64(&f, &[1, 1]); // x + 1
        let b = poly_from_u64(&f, &[3, 1]); // x + 3
        let c = poly_from_u64(&f, &[5, 1]); // x + 5
        let left = a.mul(&b);
        let right = a.mul(&c);
        assert_eq!(left.gcd(&right), a);
    }

    #[test]
    fn roots_of_split_cubic() {
        let f = ExtField::new(11, 1).unwrap();
        // (x - 2)(x - 5)(x - 7)
        let p = poly_from_u64(&f, &[9, 1])
            .mul(&poly_from_u64(&f, &[6, 1]))
            .mul(&poly_from_u64(&f, &[4, 1]));
        let roots = roots_in_field(&p);
        let got: Vec<u64> = roots.iter().map(|r| f.ordinal(r)).collect();
        assert_eq!(got, vec![2, 5, 7]);
    }

    #[test]
    fn roots_in_extension() {
        let f2 = ExtField::new(11, 2).unwrap();
        // x^2 + 1 splits over F_{11^2}
        let p = poly_from_u64(&f2, &[1, 0, 1]);
        let roots = roots_in_field(&p);
        assert_eq!(roots.len(), 2);
        for r in &roots {
            assert!(r.square().add(&f2.one()).is_zero());
        }
        // and the two roots are negatives of each other
        assert_eq!(roots[0].neg(), roots[1]);
    }

    #[test]
    fn irreducible_quadratic_has_no_roots() {
        let f = ExtField::new(11, 1).unwrap();
        let p = poly_from_u64(&f, &[1, 0, 1]);
        assert!(roots_in_field(&p).is_empty());
    }
}

/// Reduced quotient of polynomials with monic denominator.  The form is
/// canonical, so equality is plain coefficient comparison.
#[derive(Clone, PartialEq, Eq)]
pub struct RatFunc {
    num: Poly,
    den: Poly,
}

impl RatFunc {
    pub fn new(num: Poly, den: Poly) -> RatFunc {
        assert!(num.field() == den.field(), "mixed fields in rational function");
        assert!(!den.is_zero(), "zero denominator");
        let g = num.gcd(&den);
        let (num, r) = num.divrem(&g);
        debug_assert!(r.is_zero());
        let (den, r) = den.divrem(&g);
        debug_assert!(r.is_zero());
        let lead = den.leading().expect("nonzero denominator").clone();
        let inv = lead.inv().expect("leading coefficient is a unit");
        RatFunc { num: num.mul_scalar(&inv), den: den.mul_scalar(&inv) }
    }

    pub fn from_poly(p: Poly) -> RatFunc {
        let one = Poly::one(p.field().clone());
        RatFunc { num: p, den: one }
    }

    pub fn constant(c: FieldElement) -> RatFunc {
        RatFunc::from_poly(Poly::constant(c))
    }

    pub fn x(field: ExtField) -> RatFunc {
        RatFunc::from_poly(Poly::x(field))
    }

    pub fn zero(field: ExtField) -> RatFunc {
        RatFunc::from_poly(Poly::zero(field))
    }

    pub fn field(&self) -> &ExtField {
        self.num.field()
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn add(&self, other: &RatFunc) -> RatFunc {
        RatFunc::new(
            self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            self.den.mul(&other.den),
        )
    }

    pub fn sub(&self, other: &RatFunc) -> RatFunc {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> RatFunc {
        RatFunc { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn mul(&self, other: &RatFunc) -> RatFunc {
        RatFunc::new(self.num.mul(&other.num), self.den.mul(&other.den))
    }

    pub fn div(&self, other: &RatFunc) -> RatFunc {
        assert!(!other.is_zero(), "division by the zero function");
        RatFunc::new(self.num.mul(&other.den), self.den.mul(&other.num))
    }

    pub fn square(&self) -> RatFunc {
        self.mul(self)
    }

    /// None at poles.
    pub fn eval(&self, x: &FieldElement) -> Option<FieldElement> {
        let d = self.den.eval(x);
        let inv = d.inv()?;
        Some(self.num.eval(x).mul(&inv))
    }

    pub fn derivative(&self) -> RatFunc {
        let n = self.num.derivative().mul(&self.den).sub(&self.num.mul(&self.den.derivative()));
        RatFunc::new(n, self.den.mul(&self.den))
    }

    /// self(inner): substitution of one rational function into another.
    pub fn compose(&self, inner: &RatFunc) -> RatFunc {
        let (nn, dn) = substitute(&self.num, &inner.num, &inner.den);
        let (nd, dd) = substitute(&self.den, &inner.num, &inner.den);
        // self = N/D evaluated at u/w: (nn / w^dn) / (nd / w^dd)
        if dd >= dn {
            RatFunc::new(nn.mul(&poly_pow(&inner.den, dd - dn)), nd)
        } else {
            RatFunc::new(nn, nd.mul(&poly_pow(&inner.den, dn - dd)))
        }
    }

    pub fn coeff_frobenius(&self, j: usize) -> RatFunc {
        RatFunc { num: self.num.coeff_frobenius(j), den: self.den.coeff_frobenius(j) }
    }

    /// Whether every coefficient is fixed by the p^j-power Frobenius.
    pub fn coeffs_fixed_by(&self, j: usize) -> bool {
        self.num.coeffs().iter().chain(self.den.coeffs()).all(|c| c.frobenius(j) == *c)
    }

    pub fn embed(&self, target: &ExtField) -> crate::error::Result<RatFunc> {
        Ok(RatFunc { num: self.num.embed(target)?, den: self.den.embed(target)? })
    }
}

impl std::fmt::Debug for RatFunc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.den.is_monic() && self.den.degree() == Some(0) {
            write!(f, "{:?}", self.num)
        } else {
            write!(f, "({:?})/({:?})", self.num, self.den)
        }
    }
}

/// p(u/w) cleared of denominators: returns (N, d) with p(u/w) = N / w^d,
/// d = deg p (0 for constants and zero).
fn substitute(p: &Poly, u: &Poly, w: &Poly) -> (Poly, usize) {
    let Some(d) = p.degree() else {
        return (Poly::zero(p.field().clone()), 0);
    };
    // Horner: N = (((c_d u + c_{d-1} w) u + c_{d-2} w^2) u + ...)
    let mut acc = Poly::constant(p.coeff(d));
    let mut w_pow = Poly::one(p.field().clone());
    for i in (0..d).rev() {
        w_pow = w_pow.mul(w);
        acc = acc.mul(u).add(&w_pow.mul_scalar(&p.coeff(i)));
    }
    (acc, d)
}

fn poly_pow(p: &Poly, e: usize) -> Poly {
    let mut acc = Poly::one(p.field().clone());
    for _ in 0..e {
        acc = acc.mul(p);
    }
    acc
}
