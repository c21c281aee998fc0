//! Separable isogenies as explicit rational maps, with two independent
//! oracles for their minimal field of definition.
//!
//! A map is stored as x |-> X(x), y |-> y·V(x) in lowest terms.  `velu`
//! builds prime-degree quotients from a kernel generator, symbolic map
//! addition assembles endomorphism combinations like 1 + n·i without
//! division polynomials, and the two field-of-definition oracles
//! (coefficient fixedness under Frobenius vs. pointwise commutation with
//! Frobenius) are implemented along disjoint routes so each can catch the
//! other out.

use serde::{Deserialize, Serialize};

use crate::elliptic_curves::{torsion_basis, Curve, CurvePoint, TorsionBasis};
use crate::error::{Error, Result};
use crate::finite_fields::{is_prime, sqrt_in_field, ExtField, FieldElement, MAX_DEGREE};
use crate::poly::{roots_in_field, Poly, RatFunc};

/// A separable-or-Frobenius isogeny between short Weierstrass curves,
/// written as (x, y) |-> (X(x), y·V(x)).
#[derive(Clone)]
pub struct Isogeny {
    domain: Curve,
    codomain: Curve,
    degree: u64,
    x_map: RatFunc,
    y_map: RatFunc,
}

impl Isogeny {
    pub fn domain(&self) -> &Curve {
        &self.domain
    }

    pub fn codomain(&self) -> &Curve {
        &self.codomain
    }

    pub fn degree(&self) -> u64 {
        self.degree
    }

    pub fn x_map(&self) -> &RatFunc {
        &self.x_map
    }

    /// The factor V in y |-> y·V(x).
    pub fn y_map(&self) -> &RatFunc {
        &self.y_map
    }

    pub fn identity(curve: &Curve) -> Isogeny {
        let field = curve.field().clone();
        Isogeny {
            domain: curve.clone(),
            codomain: curve.clone(),
            degree: 1,
            x_map: RatFunc::x(field.clone()),
            y_map: RatFunc::constant(field.one()),
        }
    }

    pub fn evaluate(&self, p: &CurvePoint) -> Result<CurvePoint> {
        if p.curve() != &self.domain {
            return Err(Error::MixedCurves);
        }
        let Some((x, y)) = p.xy() else {
            return Ok(self.codomain.infinity());
        };
        let Some(xx) = self.x_map.eval(x) else {
            // poles of the x-map are exactly the kernel
            return Ok(self.codomain.infinity());
        };
        let v = self.y_map.eval(x).ok_or(Error::DenominatorOffKernel)?;
        self.codomain.point(xx, y.mul(&v))
    }

    /// self after inner.
    pub fn compose(&self, inner: &Isogeny) -> Result<Isogeny> {
        if inner.codomain != self.domain {
            return Err(Error::MixedCurves);
        }
        let x_map = self.x_map.compose(&inner.x_map);
        let y_map = self.y_map.compose(&inner.x_map).mul(&inner.y_map);
        Ok(Isogeny {
            domain: inner.domain.clone(),
            codomain: self.codomain.clone(),
            degree: self.degree * inner.degree,
            x_map,
            y_map,
        })
    }

    /// The same map with everything embedded into a larger field.
    pub fn lift_to(&self, target: &ExtField) -> Result<Isogeny> {
        Ok(Isogeny {
            domain: self.domain.lift_to(target)?,
            codomain: self.codomain.lift_to(target)?,
            degree: self.degree,
            x_map: self.x_map.embed(target)?,
            y_map: self.y_map.embed(target)?,
        })
    }
}

impl std::fmt::Debug for Isogeny {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "degree-{} isogeny X = {:?}, V = {:?}",
            self.degree, self.x_map, self.y_map
        )
    }
}

/// Quotient by the subgroup generated by a point of prime order ell != p.
/// The output is normalized: it pulls the invariant differential back to
/// itself, so V = X'.
pub fn velu(kernel: &CurvePoint, ell: u64) -> Result<Isogeny> {
    let curve = kernel.curve().clone();
    if !is_prime(ell) {
        return Err(Error::KernelNotPrimeOrder(ell));
    }
    if ell == curve.p() {
        return Err(Error::KernelOrderDivisibleByP(ell));
    }
    if kernel.is_infinity() || !kernel.mul_u64(ell).is_infinity() {
        return Err(Error::KernelNotPrimeOrder(ell));
    }
    let field = curve.field().clone();
    let a = curve.a();
    let b = curve.b();
    let xpoly = Poly::x(field.clone());
    let mut x_map = RatFunc::x(field.clone());
    let mut v_sum = field.zero();
    let mut w_sum = field.zero();
    let half = if ell == 2 { 1 } else { (ell - 1) / 2 };
    let mut r = kernel.clone();
    for _ in 0..half {
        let (xq, yq) = r.xy().expect("kernel multiples below ell are affine");
        let gx = &(&field.from_u64(3) * &xq.square()) + a;
        // each pair {R, -R} contributes twice the tangent term; a 2-torsion
        // point is its own negative and contributes once
        let t = if yq.is_zero() { gx } else { &field.from_u64(2) * &gx };
        let u = &field.from_u64(4) * &yq.square();
        v_sum = &v_sum + &t;
        w_sum = &(&w_sum + &u) + &xq.mul(&t);
        let d = xpoly.sub(&Poly::constant(xq.clone()));
        let num = d.mul_scalar(&t).add(&Poly::constant(u));
        x_map = x_map.add(&RatFunc::new(num, d.mul(&d)));
        r = r.add(kernel)?;
    }
    let cod_a = a - &(&field.from_u64(5) * &v_sum);
    let cod_b = b - &(&field.from_u64(7) * &w_sum);
    let codomain = Curve::new(field, cod_a, cod_b)?;
    let y_map = x_map.derivative();
    Ok(Isogeny { domain: curve, codomain, degree: ell, x_map, y_map })
}

// ---------------------------------------------------------------------------
// symbolic endomorphism algebra

#[derive(Clone, PartialEq)]
enum MapExpr {
    Zero,
    Finite { x: RatFunc, v: RatFunc },
}

/// An endomorphism of one curve in symbolic (X(x), y·V(x)) form, with the
/// zero map represented explicitly so linear combinations can cancel.
#[derive(Clone)]
pub struct SymbolicMap {
    curve: Curve,
    expr: MapExpr,
}

impl SymbolicMap {
    pub fn zero(curve: &Curve) -> SymbolicMap {
        SymbolicMap { curve: curve.clone(), expr: MapExpr::Zero }
    }

    pub fn identity(curve: &Curve) -> SymbolicMap {
        let field = curve.field().clone();
        SymbolicMap {
            curve: curve.clone(),
            expr: MapExpr::Finite {
                x: RatFunc::x(field.clone()),
                v: RatFunc::constant(field.one()),
            },
        }
    }

    /// The order-4 automorphism (x, y) |-> (-x, s·y) with s^2 = -1, on
    /// curves with b = 0.  The canonically smaller square root is taken.
    pub fn quartic_auto(curve: &Curve) -> Result<SymbolicMap> {
        if !curve.b().is_zero() {
            return Err(Error::Unsupported(
                "the order-4 automorphism needs a curve with b = 0".into(),
            ));
        }
        let field = curve.field().clone();
        let s = sqrt_in_field(&field.from_i64(-1)).ok_or_else(|| {
            Error::Unsupported("sqrt(-1) missing; lift the curve to a quadratic extension".into())
        })?;
        let x = RatFunc::from_poly(Poly::x(field.clone()).neg());
        Ok(SymbolicMap {
            curve: curve.clone(),
            expr: MapExpr::Finite { x, v: RatFunc::constant(s) },
        })
    }

    /// The p^j-power Frobenius endomorphism (x, y) |-> (x^q, y·R^((q-1)/2)).
    /// Only usable at desk scale; the curve must be fixed by it.
    pub fn frobenius(curve: &Curve, j: usize) -> Result<SymbolicMap> {
        if !curve.stable_under_frobenius(j) {
            return Err(Error::CodomainNotRational(j));
        }
        let q = curve
            .p()
            .checked_pow(j as u32)
            .filter(|&q| q <= 5000)
            .ok_or_else(|| Error::Unsupported("symbolic Frobenius degree too large".into()))?;
        let field = curve.field().clone();
        let mut coeffs = vec![field.zero(); q as usize + 1];
        coeffs[q as usize] = field.one();
        let x = RatFunc::from_poly(Poly::from_coeffs(field.clone(), coeffs));
        let v = RatFunc::from_poly(poly_pow_sq(&r_poly(curve), (q - 1) / 2));
        Ok(SymbolicMap { curve: curve.clone(), expr: MapExpr::Finite { x, v } })
    }

    pub fn curve(&self) -> &Curve {
        &self.curve
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.expr, MapExpr::Zero)
    }

    pub fn neg(&self) -> SymbolicMap {
        match &self.expr {
            MapExpr::Zero => self.clone(),
            MapExpr::Finite { x, v } => SymbolicMap {
                curve: self.curve.clone(),
                expr: MapExpr::Finite { x: x.clone(), v: v.neg() },
            },
        }
    }

    pub fn add(&self, other: &SymbolicMap) -> SymbolicMap {
        assert!(self.curve == other.curve, "maps on different curves");
        let (xf, vf) = match &self.expr {
            MapExpr::Zero => return other.clone(),
            MapExpr::Finite { x, v } => (x, v),
        };
        let (xg, vg) = match &other.expr {
            MapExpr::Zero => return self.clone(),
            MapExpr::Finite { x, v } => (x, v),
        };
        if xf == xg {
            if vf == vg {
                return self.double();
            }
            if *vf == vg.neg() {
                return SymbolicMap::zero(&self.curve);
            }
            unreachable!("maps share an x-map but the y factors are not opposite");
        }
        // chord: lambda_point = y·(vf - vg)/(xf - xg), then y^2 = R(x)
        let lam = vf.sub(vg).div(&xf.sub(xg));
        let r = RatFunc::from_poly(r_poly(&self.curve));
        let xs = r.mul(&lam.square()).sub(xf).sub(xg);
        let vs = lam.mul(&xf.sub(&xs)).sub(vf);
        SymbolicMap { curve: self.curve.clone(), expr: MapExpr::Finite { x: xs, v: vs } }
    }

    pub fn sub(&self, other: &SymbolicMap) -> SymbolicMap {
        self.add(&other.neg())
    }

    pub fn double(&self) -> SymbolicMap {
        let (xf, vf) = match &self.expr {
            MapExpr::Zero => return self.clone(),
            MapExpr::Finite { x, v } => (x, v),
        };
        assert!(!vf.is_zero(), "cannot double a map with identically zero y part");
        let field = self.curve.field().clone();
        let r = RatFunc::from_poly(r_poly(&self.curve));
        // tangent: lambda_point = y·(3x_f^2 + a)/(2·R·v_f)
        let three = RatFunc::constant(field.from_u64(3));
        let two = RatFunc::constant(field.from_u64(2));
        let a = RatFunc::constant(self.curve.a().clone());
        let lam = three.mul(&xf.square()).add(&a).div(&two.mul(&r).mul(vf));
        let xs = r.mul(&lam.square()).sub(xf).sub(xf);
        let vs = lam.mul(&xf.sub(&xs)).sub(vf);
        SymbolicMap { curve: self.curve.clone(), expr: MapExpr::Finite { x: xs, v: vs } }
    }

    /// Multiplication-by-k composed onto this map, by double-and-add.
    pub fn scalar(&self, k: i64) -> SymbolicMap {
        if k == 0 {
            return SymbolicMap::zero(&self.curve);
        }
        let mag = k.unsigned_abs();
        let bits = 64 - mag.leading_zeros();
        let mut acc = self.clone();
        for i in (0..bits - 1).rev() {
            acc = acc.double();
            if (mag >> i) & 1 == 1 {
                acc = acc.add(self);
            }
        }
        if k < 0 {
            acc.neg()
        } else {
            acc
        }
    }

    /// self after inner.
    pub fn compose(&self, inner: &SymbolicMap) -> SymbolicMap {
        assert!(self.curve == inner.curve, "maps on different curves");
        let (xf, vf) = match &self.expr {
            MapExpr::Zero => return SymbolicMap::zero(&self.curve),
            MapExpr::Finite { x, v } => (x, v),
        };
        let (xg, vg) = match &inner.expr {
            MapExpr::Zero => return SymbolicMap::zero(&self.curve),
            MapExpr::Finite { x, v } => (x, v),
        };
        SymbolicMap {
            curve: self.curve.clone(),
            expr: MapExpr::Finite {
                x: xf.compose(xg),
                v: vf.compose(xg).mul(vg),
            },
        }
    }

    pub fn evaluate(&self, p: &CurvePoint) -> Result<CurvePoint> {
        if p.curve() != &self.curve {
            return Err(Error::MixedCurves);
        }
        let (xf, vf) = match &self.expr {
            MapExpr::Zero => return Ok(self.curve.infinity()),
            MapExpr::Finite { x, v } => (x, v),
        };
        let Some((x, y)) = p.xy() else {
            return Ok(self.curve.infinity());
        };
        let Some(xx) = xf.eval(x) else {
            return Ok(self.curve.infinity());
        };
        let v = vf.eval(x).ok_or(Error::DenominatorOffKernel)?;
        self.curve.point(xx, y.mul(&v))
    }

    pub fn into_isogeny(self, degree: u64) -> Result<Isogeny> {
        match self.expr {
            MapExpr::Zero => Err(Error::BadInstance("the zero map is not an isogeny".into())),
            MapExpr::Finite { x, v } => Ok(Isogeny {
                domain: self.curve.clone(),
                codomain: self.curve,
                degree,
                x_map: x,
                y_map: v,
            }),
        }
    }
}

fn r_poly(curve: &Curve) -> Poly {
    let field = curve.field().clone();
    Poly::from_coeffs(
        field.clone(),
        vec![curve.b().clone(), curve.a().clone(), field.zero(), field.one()],
    )
}

fn poly_pow_sq(p: &Poly, mut e: u64) -> Poly {
    let mut acc = Poly::one(p.field().clone());
    let mut base = p.clone();
    while e > 0 {
        if e & 1 == 1 {
            acc = acc.mul(&base);
        }
        e >>= 1;
        if e > 0 {
            base = base.mul(&base);
        }
    }
    acc
}

/// Integer combination a·1 + b·i + c·pi + d·(i∘pi) of the identity, the
/// order-4 automorphism i, and the base Frobenius pi.  The composite
/// i∘pi realizes the product i·pi of the quaternion generators, so the
/// recipe coordinates match quaternion coordinates exactly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndoRecipe {
    pub one: i64,
    pub i: i64,
    pub frob: i64,
    pub frob_i: i64,
}

impl EndoRecipe {
    /// Degree of the combination: its reduced norm a^2 + b^2 + p(c^2 + d^2).
    pub fn degree(&self, p: u64) -> u64 {
        let sq = |v: i64| (v as i128) * (v as i128);
        let n = sq(self.one) + sq(self.i) + (p as i128) * (sq(self.frob) + sq(self.frob_i));
        u64::try_from(n).expect("desk-scale degree")
    }
}

/// Build the endomorphism for a recipe on a curve with b = 0.  The curve is
/// lifted to a quadratic extension when sqrt(-1) is missing from its field.
pub fn endo_from_recipe(curve: &Curve, recipe: &EndoRecipe) -> Result<Isogeny> {
    let degree = recipe.degree(curve.p());
    if degree == 0 {
        return Err(Error::BadInstance("zero recipe".into()));
    }
    let field = curve.field().clone();
    let curve = if sqrt_in_field(&field.from_i64(-1)).is_some() {
        curve.clone()
    } else {
        let big = ExtField::new(field.p(), field.degree() * 2)?;
        curve.lift_to(&big)?
    };
    let ident = SymbolicMap::identity(&curve);
    let iauto = SymbolicMap::quartic_auto(&curve)?;
    let mut acc = ident.scalar(recipe.one).add(&iauto.scalar(recipe.i));
    if recipe.frob != 0 || recipe.frob_i != 0 {
        let frob = SymbolicMap::frobenius(&curve, 1)?;
        acc = acc.add(&frob.scalar(recipe.frob));
        acc = acc.add(&iauto.compose(&frob).scalar(recipe.frob_i));
    }
    acc.into_isogeny(degree)
}

// ---------------------------------------------------------------------------
// field-of-definition oracles

/// Verdict of both oracles for one map and one Frobenius power.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DefinitionReport {
    /// which p^j-power Frobenius was tested
    pub power: usize,
    /// torsion level used by the commutation oracle
    pub probe_level: u64,
    pub coeff_rational: bool,
    pub commutes: bool,
}

/// Oracle 1: every coefficient of the maps and of both curve equations is
/// fixed by the p^j-power Frobenius.
pub fn coeff_field_test(f: &Isogeny, j: usize) -> bool {
    f.domain().stable_under_frobenius(j)
        && f.codomain().stable_under_frobenius(j)
        && f.x_map().coeffs_fixed_by(j)
        && f.y_map().coeffs_fixed_by(j)
}

/// Oracle 2: f commutes pointwise with the p^j-power Frobenius on a basis
/// of E[n] and on deterministic sample points of a small extension.  This
/// never looks at map coefficients.
pub fn commutation_test(f: &Isogeny, j: usize, n: u64) -> Result<bool> {
    let basis = torsion_basis(f.domain(), n)?;
    commutation_test_with_basis(f, j, &basis)
}

/// The commutation oracle against a caller-supplied torsion basis, for
/// sweeps that reuse one basis across many maps with the same domain.
pub fn commutation_test_with_basis(f: &Isogeny, j: usize, basis: &TorsionBasis) -> Result<bool> {
    if !f.domain().stable_under_frobenius(j) {
        return Err(Error::BadInstance("domain is not Frobenius-stable".into()));
    }
    if !f.codomain().stable_under_frobenius(j) {
        return Err(Error::CodomainNotRational(j));
    }
    let fl = f.lift_to(basis.curve.field())?;
    let probes = [
        basis.p.clone(),
        basis.q.clone(),
        basis.p.add(&basis.q)?,
    ];
    for pt in &probes {
        if !commutes_at(&fl, pt, j)? {
            return Ok(false);
        }
    }
    // extra samples away from the torsion subgroup
    let c = f.domain().field().degree();
    let d = match num_integer::lcm(c, 6) {
        d if d <= MAX_DEGREE => d,
        _ => c,
    };
    let sample_field = ExtField::new(f.domain().p(), d)?;
    let fs = f.lift_to(&sample_field)?;
    for pt in fs.domain().points().take(32) {
        if !commutes_at(&fs, &pt, j)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn commutes_at(f: &Isogeny, pt: &CurvePoint, j: usize) -> Result<bool> {
    let lhs = f.evaluate(&pt.galois_image(j)?)?;
    let rhs = f.evaluate(pt)?.galois_image(j)?;
    Ok(lhs == rhs)
}

/// Candidate torsion levels for the commutation oracle, in preference
/// order.  5, 6 and 9 have bounded torsion-field degree for every curve;
/// the rest are opportunistic.
pub const PROBE_LEVELS: [u64; 6] = [5, 6, 9, 7, 11, 13];

/// First probe level coprime to p and to deg f whose torsion field fits
/// within the degree bound, together with its basis.
fn choose_probe_basis(f: &Isogeny) -> Result<(u64, TorsionBasis)> {
    let p = f.domain().p();
    for n in PROBE_LEVELS {
        if n % p == 0 || num_integer::gcd(n, f.degree()) != 1 {
            continue;
        }
        match torsion_basis(f.domain(), n) {
            Ok(basis) => return Ok((n, basis)),
            Err(Error::TorsionFieldTooLarge { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::NoProbeLevel { degree: f.degree(), p })
}

pub fn choose_probe_level(f: &Isogeny) -> Result<u64> {
    choose_probe_basis(f).map(|(n, _)| n)
}

/// Run both oracles at power j and insist that they agree.  A codomain that
/// is not Frobenius-stable makes commutation undefined; both oracles then
/// report false.  Any other disagreement is an internal inconsistency and
/// comes back as an error.
pub fn field_of_definition_report(f: &Isogeny, j: usize) -> Result<DefinitionReport> {
    let coeff_rational = coeff_field_test(f, j);
    let (probe_level, basis) = choose_probe_basis(f)?;
    let commutes = match commutation_test_with_basis(f, j, &basis) {
        Ok(b) => b,
        Err(Error::CodomainNotRational(_)) => false,
        Err(e) => return Err(e),
    };
    if coeff_rational != commutes {
        return Err(Error::OracleMismatch { level: probe_level, coeff: coeff_rational, commutation: commutes });
    }
    Ok(DefinitionReport { power: j, probe_level, coeff_rational, commutes })
}

// ---------------------------------------------------------------------------
// isomorphisms

/// An isomorphism (x, y) |-> (u^2 x, u^3 y) from a to b over their common
/// field, if one exists.  The canonically smallest usable u is taken.
pub fn find_isomorphism(a: &Curve, b: &Curve) -> Result<Option<Isogeny>> {
    if a.field() != b.field() {
        return Err(Error::FieldMismatch {
            expected: a.field().describe(),
            actual: b.field().describe(),
        });
    }
    if a.j_invariant() != b.j_invariant() {
        return Ok(None);
    }
    let field = a.field().clone();
    let u = if a.b().is_zero() {
        // j = 1728: u^4 = a'/a
        let target = b.a().mul(&a.a().inv().expect("nonsingular"));
        smallest_root(&field, 4, &target)
    } else if a.a().is_zero() {
        // j = 0: u^6 = b'/b
        let target = b.b().mul(&a.b().inv().expect("nonsingular"));
        smallest_root(&field, 6, &target)
    } else {
        // u^2 = (a·b')/(a'·b); j-equality makes u^4 = a'/a automatic
        let num = a.a().mul(b.b());
        let den = b.a().mul(a.b());
        let u2 = num.mul(&den.inv().expect("nonsingular twist data"));
        sqrt_in_field(&u2)
    };
    let Some(u) = u else {
        return Ok(None);
    };
    let u2 = u.square();
    let u3 = u2.mul(&u);
    debug_assert_eq!(b.a(), &a.a().mul(&u2.square()));
    let x_map = RatFunc::from_poly(Poly::from_coeffs(
        field.clone(),
        vec![field.zero(), u2],
    ));
    Ok(Some(Isogeny {
        domain: a.clone(),
        codomain: b.clone(),
        degree: 1,
        x_map,
        y_map: RatFunc::constant(u3),
    }))
}

/// Canonically smallest z with z^e = target, if any.
fn smallest_root(field: &ExtField, e: usize, target: &FieldElement) -> Option<FieldElement> {
    let mut coeffs = vec![field.zero(); e + 1];
    coeffs[0] = target.neg();
    coeffs[e] = field.one();
    roots_in_field(&Poly::from_coeffs(field.clone(), coeffs))
        .into_iter()
        .next()
}

// ---------------------------------------------------------------------------
// torsion kernels via division polynomials

/// Polynomial in x whose roots are exactly the x-coordinates of the
/// nonzero ell-torsion points, for prime ell != p: the curve cubic for
/// ell = 2, and the classical x-part of the division polynomial (degree
/// (ell^2 - 1)/2) for odd ell.
pub fn division_polynomial(curve: &Curve, ell: u64) -> Result<Poly> {
    if !is_prime(ell) {
        return Err(Error::KernelNotPrimeOrder(ell));
    }
    if ell == curve.p() {
        return Err(Error::KernelOrderDivisibleByP(ell));
    }
    let field = curve.field().clone();
    let a = curve.a().clone();
    let b = curve.b().clone();
    let rhs = Poly::from_coeffs(
        field.clone(),
        vec![b.clone(), a.clone(), field.zero(), field.one()],
    );
    if ell == 2 {
        return Ok(rhs);
    }
    let fi = |v: i64| field.from_i64(v);
    let a2 = a.square();
    let a3 = a.mul(&a2);
    let ab = a.mul(&b);
    let b2 = b.square();
    // psi_k = g_k(x) · y^(k-1 mod 2); only the x-parts g_k are stored and
    // every y^2 is folded into rhs(x).
    let g3 = Poly::from_coeffs(
        field.clone(),
        vec![a2.neg(), b.mul(&fi(12)), a.mul(&fi(6)), field.zero(), fi(3)],
    );
    let g4 = Poly::from_coeffs(
        field.clone(),
        vec![
            b2.mul(&fi(32)).add(&a3.mul(&fi(4))).neg(),
            ab.mul(&fi(16)).neg(),
            a2.mul(&fi(20)).neg(),
            b.mul(&fi(80)),
            a.mul(&fi(20)),
            field.zero(),
            fi(4),
        ],
    );
    let mut g: Vec<Poly> = vec![
        Poly::zero(field.clone()),
        Poly::one(field.clone()),
        Poly::from_coeffs(field.clone(), vec![fi(2)]),
        g3,
        g4,
    ];
    let fsq = rhs.mul(&rhs);
    let half = fi(2).inv().expect("odd characteristic");
    let sq = |p: &Poly| p.mul(p);
    let cube = |p: &Poly| p.mul(p).mul(p);
    for k in 5..=(ell as usize) {
        let gk = if k % 2 == 1 {
            let m = (k - 1) / 2;
            let t1 = g[m + 2].mul(&cube(&g[m]));
            let t2 = g[m - 1].mul(&cube(&g[m + 1]));
            if m % 2 == 0 {
                t1.mul(&fsq).sub(&t2)
            } else {
                t1.sub(&t2.mul(&fsq))
            }
        } else {
            let m = k / 2;
            let t1 = g[m + 2].mul(&sq(&g[m - 1]));
            let t2 = g[m - 2].mul(&sq(&g[m + 1]));
            g[m].mul(&t1.sub(&t2)).mul_scalar(&half)
        };
        g.push(gk);
    }
    Ok(g[ell as usize].clone())
}

/// One generator per distinct order-ell subgroup whose x-coordinates lie
/// in the curve's own field.  Generators whose y-coordinate needs a
/// quadratic extension are returned on the lifted curve; such subgroups
/// are still Galois-stable over the base field, so their quotients have
/// base-field coefficients.  Canonically ordered by generator x.
pub fn kernel_points_over(curve: &Curve, ell: u64) -> Result<Vec<CurvePoint>> {
    let field = curve.field().clone();
    let g = division_polynomial(curve, ell)?;
    let roots = roots_in_field(&g);
    let double_field = ExtField::new(field.p(), field.degree() * 2).ok();
    let norm_key = |x: &FieldElement| -> Vec<u64> {
        match &double_field {
            Some(df) => df.embed(x).expect("subfield embeds").coeffs().to_vec(),
            None => x.coeffs().to_vec(),
        }
    };
    let mut seen: std::collections::HashSet<Vec<u64>> = std::collections::HashSet::new();
    let mut reps = Vec::new();
    for x in roots {
        if seen.contains(&norm_key(&x)) {
            continue;
        }
        let pt = match sqrt_in_field(&curve.rhs(&x)) {
            Some(y) => curve.point(x.clone(), y)?,
            None => {
                let Some(df) = &double_field else { continue };
                let lifted = curve.lift_to(df)?;
                let xl = df.embed(&x)?;
                let y = sqrt_in_field(&lifted.rhs(&xl))
                    .expect("square in the quadratic extension");
                lifted.point(xl, y)?
            }
        };
        debug_assert!(pt.mul_u64(ell).is_infinity());
        let mut multiple = pt.clone();
        for _ in 1..ell {
            if let Some((mx, _)) = multiple.xy() {
                seen.insert(norm_key(mx));
            }
            multiple = multiple.add(&pt)?;
        }
        reps.push(pt);
    }
    Ok(reps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic_curves::{
        frobenius_matrix, group_structure, matrix_of_map, point_order, TorsionIndex,
    };

    fn curve(p: u64, k: usize, a: i64, b: i64) -> Curve {
        let f = ExtField::new(p, k).unwrap();
        Curve::from_i64(&f, a, b).unwrap()
    }

    #[test]
    fn velu_two_isogeny_golden() {
        // quotient of y^2 = x^3 + x by (0,0) is y^2 = x^3 - 4x, X = (x^2+1)/x
        let e = curve(11, 1, 1, 0);
        let f = e.field().clone();
        let k = e.point(f.zero(), f.zero()).unwrap();
        let iso = velu(&k, 2).unwrap();
        assert_eq!(iso.degree(), 2);
        assert_eq!(iso.codomain().a(), &f.from_i64(-4));
        assert!(iso.codomain().b().is_zero());
        let flat = |p: &Poly| -> Vec<u64> { p.coeffs().iter().map(|c| c.coeffs()[0]).collect() };
        assert_eq!(flat(iso.x_map().num()), [1, 0, 1]);
        assert_eq!(flat(iso.x_map().den()), [0, 1]);
        assert!(iso.evaluate(&k).unwrap().is_infinity());
        for pt in e.points() {
            // evaluate() validates the image against the codomain equation
            iso.evaluate(&pt).unwrap();
        }
    }

    #[test]
    fn velu_odd_degree_is_a_homomorphism() {
        let e = curve(5, 1, 1, 1);
        let s = group_structure(&e).unwrap();
        assert_eq!((s.a, s.ab), (1, 9));
        let k = s.gen_big.mul_u64(3);
        assert_eq!(point_order(&k, 9), 3);
        let iso = velu(&k, 3).unwrap();
        assert!(iso.evaluate(&k).unwrap().is_infinity());
        assert!(iso.evaluate(&k.double()).unwrap().is_infinity());
        let fg = iso.evaluate(&s.gen_big).unwrap();
        for m in 0..9 {
            assert_eq!(iso.evaluate(&s.gen_big.mul_u64(m)).unwrap(), fg.mul_u64(m));
        }
    }

    #[test]
    fn velu_rejects_bad_kernels() {
        let e = curve(5, 1, 1, 1);
        let s = group_structure(&e).unwrap();
        assert!(matches!(velu(&s.gen_big, 9), Err(Error::KernelNotPrimeOrder(9))));
        assert!(matches!(
            velu(&s.gen_big.mul_u64(3), 5),
            Err(Error::KernelOrderDivisibleByP(5))
        ));
        assert!(matches!(
            velu(&s.gen_big.mul_u64(3), 2),
            Err(Error::KernelNotPrimeOrder(2))
        ));
    }

    #[test]
    fn identity_and_composition() {
        let e = curve(5, 1, 1, 1);
        let id = Isogeny::identity(&e);
        let s = group_structure(&e).unwrap();
        let iso = velu(&s.gen_big.mul_u64(3), 3).unwrap();
        let comp = iso.compose(&id).unwrap();
        assert_eq!(comp.degree(), 3);
        for pt in e.points() {
            assert_eq!(comp.evaluate(&pt).unwrap(), iso.evaluate(&pt).unwrap());
        }
        // a second 3-isogeny from the image of the generator: the composite
        // kernel is the whole rational group
        let iso2 = velu(&iso.evaluate(&s.gen_big).unwrap(), 3).unwrap();
        let both = iso2.compose(&iso).unwrap();
        assert_eq!(both.degree(), 9);
        for pt in e.points() {
            assert!(both.evaluate(&pt).unwrap().is_infinity());
        }
    }

    #[test]
    fn symbolic_scalars_match_point_multiplication() {
        let e = curve(11, 1, 1, 0);
        let two = SymbolicMap::identity(&e).scalar(2);
        let five = SymbolicMap::identity(&e).scalar(5);
        for pt in e.points() {
            assert_eq!(two.evaluate(&pt).unwrap(), pt.mul_u64(2));
            assert_eq!(five.evaluate(&pt).unwrap(), pt.mul_u64(5));
        }
        assert!(two.sub(&SymbolicMap::identity(&e).scalar(2)).is_zero());
    }

    #[test]
    fn quartic_automorphism_and_frobenius_agree_pointwise() {
        let e = curve(11, 2, 1, 0);
        let i = SymbolicMap::quartic_auto(&e).unwrap();
        for pt in e.points().take(20) {
            // i has order 4: i(i(P)) = -P
            assert_eq!(i.evaluate(&i.evaluate(&pt).unwrap()).unwrap(), pt.neg());
        }
        let fr = SymbolicMap::frobenius(&e, 1).unwrap();
        for pt in e.points().take(20) {
            assert_eq!(fr.evaluate(&pt).unwrap(), pt.galois_image(1).unwrap());
        }
        // the two anticommute pointwise
        let pi_i = fr.compose(&i);
        let i_pi = i.compose(&fr);
        for pt in e.points().take(20) {
            assert_eq!(
                pi_i.evaluate(&pt).unwrap(),
                i_pi.evaluate(&pt).unwrap().neg()
            );
        }
    }

    #[test]
    fn endo_recipe_one_plus_two_i() {
        let e = curve(11, 1, 1, 0);
        let f = endo_from_recipe(&e, &EndoRecipe { one: 1, i: 2, frob: 0, frob_i: 0 }).unwrap();
        assert_eq!(f.degree(), 5);
        // the curve was lifted so that sqrt(-1) exists
        let el = f.domain().clone();
        assert_eq!(el.field().degree(), 2);
        let i = SymbolicMap::quartic_auto(&el).unwrap();
        for pt in el.points().take(40) {
            let want = pt.add(&i.evaluate(&pt).unwrap().mul_u64(2)).unwrap();
            assert_eq!(f.evaluate(&pt).unwrap(), want);
        }
    }

    #[test]
    fn recipe_ij_realizes_i_after_frobenius() {
        // the pure i*pi recipe must act as i(pi(P)), not pi(i(P)); the two
        // differ by a sign, and only the former matches the product of the
        // generator matrices on torsion
        let e = curve(11, 1, 1, 0);
        let f = endo_from_recipe(&e, &EndoRecipe { one: 0, i: 0, frob: 0, frob_i: 1 }).unwrap();
        assert_eq!(f.degree(), 11);
        let el = f.domain().clone();
        let i = SymbolicMap::quartic_auto(&el).unwrap();
        let fr = SymbolicMap::frobenius(&el, 1).unwrap();
        for pt in el.points().take(40) {
            let want = i.evaluate(&fr.evaluate(&pt).unwrap()).unwrap();
            assert_eq!(f.evaluate(&pt).unwrap(), want);
        }
        // on a torsion basis the realized matrix is the matrix product
        // M(i) * M(pi), with the same embedded square root of -1 on both
        // sides
        let basis = torsion_basis(&el, 5).unwrap();
        let index = TorsionIndex::new(&basis);
        let fl = f.lift_to(basis.curve.field()).unwrap();
        let i_iso = SymbolicMap::quartic_auto(&el)
            .unwrap()
            .into_isogeny(1)
            .unwrap()
            .lift_to(basis.curve.field())
            .unwrap();
        let m_f = matrix_of_map(&index, &basis, |pt| fl.evaluate(pt)).unwrap();
        let m_i = matrix_of_map(&index, &basis, |pt| i_iso.evaluate(pt)).unwrap();
        let m_pi = frobenius_matrix(&el, 5, &basis, 1).unwrap();
        assert_eq!(m_f, m_i.mul(&m_pi));
    }

    #[test]
    fn oracles_agree_on_rational_kernel() {
        // y^2 = x^3 + 2 over F_7 has full rational 3-torsion; the quotient
        // by any order-3 point is defined over F_7
        let e = curve(7, 1, 0, 2);
        let s = group_structure(&e).unwrap();
        assert_eq!((s.a, s.ab), (3, 3));
        assert_eq!(point_order(&s.gen_big, 3), 3);
        let iso = velu(&s.gen_big, 3).unwrap();
        assert!(coeff_field_test(&iso, 1));
        let rep = field_of_definition_report(&iso, 1).unwrap();
        assert!(rep.coeff_rational && rep.commutes);
    }

    #[test]
    fn oracles_agree_on_irrational_kernel() {
        // x^3 + x + 1 is irreducible mod 7, so a single 2-torsion point
        // generates a line that Frobenius moves
        let e = curve(7, 1, 1, 1);
        let b = torsion_basis(&e, 2).unwrap();
        assert_eq!(b.relative_degree, 3);
        let iso = velu(&b.p, 2).unwrap();
        assert!(!coeff_field_test(&iso, 1));
        assert!(coeff_field_test(&iso, 3));
        let rep1 = field_of_definition_report(&iso, 1).unwrap();
        assert!(!rep1.coeff_rational && !rep1.commutes);
        let rep3 = field_of_definition_report(&iso, 3).unwrap();
        assert!(rep3.coeff_rational && rep3.commutes);
    }

    #[test]
    fn isomorphism_detection_and_twists() {
        let e = curve(11, 1, 1, 0);
        // u = 2: (x, y) |-> (4x, 8y) lands on y^2 = x^3 + 16x = x^3 + 5x
        let iso = find_isomorphism(&e, &curve(11, 1, 5, 0)).unwrap().unwrap();
        assert_eq!(iso.degree(), 1);
        for pt in e.points() {
            iso.evaluate(&pt).unwrap();
        }
        // 2 is not a fourth power times anything: the quadratic twist by a
        // non-residue is not isomorphic over F_11
        assert!(find_isomorphism(&e, &curve(11, 1, 2, 0)).unwrap().is_none());
        // different j-invariants
        assert!(find_isomorphism(&e, &curve(11, 1, 1, 1)).unwrap().is_none());
    }

    #[test]
    fn division_polynomial_three_torsion_golden() {
        // y^2 = x^3 + 2 over F_7 has rational (Z/3)^2, so all four
        // three-torsion x-coordinates are rational: 3x^4 + 3x = 3x(x^3 + 1)
        // with roots 0 and the cube roots of -1.
        let e = curve(7, 1, 0, 2);
        let g = division_polynomial(&e, 3).unwrap();
        let field = e.field().clone();
        let roots: Vec<u64> = roots_in_field(&g).iter().map(|r| field.ordinal(r)).collect();
        assert_eq!(roots, vec![0, 3, 5, 6]);
    }

    #[test]
    fn division_polynomial_five_torsion_count() {
        // For y^2 = x^3 + x over F_7 the full five-torsion lives in
        // F_{7^8}; the degree-12 polynomial must split there.
        let e = curve(7, 8, 1, 0);
        let g = division_polynomial(&e, 5).unwrap();
        assert_eq!(g.degree(), Some(12));
        assert_eq!(roots_in_field(&g).len(), 12);
    }

    #[test]
    fn kernel_points_split_by_rationality_of_y() {
        // over F_11, x^3 + x has one rational two-torsion kernel; over
        // F_121 all three appear
        let e = curve(11, 1, 1, 0);
        let twos = kernel_points_over(&e, 2).unwrap();
        assert_eq!(twos.len(), 1);
        assert!(twos[0].xy().unwrap().0.is_zero());
        let lifted = curve(11, 2, 1, 0);
        assert_eq!(kernel_points_over(&lifted, 2).unwrap().len(), 3);

        // the Frobenius eigenvalues on E[3] are +1 and -1: one subgroup
        // with rational points, one with rational x but irrational y
        let threes = kernel_points_over(&e, 3).unwrap();
        assert_eq!(threes.len(), 2);
        let base_degrees: Vec<usize> =
            threes.iter().map(|p| p.curve().field().degree()).collect();
        assert_eq!(base_degrees, vec![1, 2]);
        for p in &threes {
            assert_eq!(point_order(p, 3), 3);
        }
    }

    #[test]
    fn quotient_by_galois_stable_kernel_has_base_coefficients() {
        // the y-irrational order-3 kernel is still stable under the
        // 11-power Frobenius, so its quotient is defined over F_11 even
        // though the kernel generator is not
        let e = curve(11, 1, 1, 0);
        let threes = kernel_points_over(&e, 3).unwrap();
        let irrational = &threes[1];
        assert_eq!(irrational.curve().field().degree(), 2);
        let f = velu(irrational, 3).unwrap();
        assert!(coeff_field_test(&f, 1));
        assert!(commutation_test(&f, 1, 5).unwrap());
        // and both oracles still see it as defined over the big field too
        assert!(coeff_field_test(&f, 2));
        assert!(commutation_test(&f, 2, 5).unwrap());
    }
}
