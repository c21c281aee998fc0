//! Line-item checker for the descent condition bundle on an explicit
//! isogeny instance.
//!
//! An instance presents an isogeny f: A -> B between products of elliptic
//! curves over F_p together with a torsion level n, the degree m of the
//! field L = F_{p^m} over which f is claimed to live, and marked subgroups
//! on both sides.  `check_phi` evaluates seven clauses, each as its own
//! line item with a witness string:
//!
//! (a) both sides are nonempty products, so positive-dimensional;
//! (b) n is prime to the characteristic;
//! (c) f is defined over L (both field-of-definition oracles) and its
//!     degree is prime to n;
//! (d) the reference polarization on B is defined over F_p;
//! (e) the marked subgroup on B is n-torsion, stable under the base
//!     Frobenius, and contains a subgroup that is maximal isotropic for
//!     the n-torsion pairing;
//! (f) the marked subgroup on A is n-torsion and Frobenius-stable, and f
//!     restricts to a bijection onto the marked subgroup of B commuting
//!     with the base Frobenius;
//! (g) the pullback polarization on A is deg(f) times the principal one,
//!     hence also defined over F_p.
//!
//! The overall verdict is the conjunction of the seven clauses.  For
//! product instances the marked subgroups are presented factorwise, so
//! clause (e) searches for products of per-factor isotropic lines; marked
//! subgroups that are not products of per-factor subgroups are out of
//! scope and must be presented differently.  Non-principal reference
//! polarizations are rejected as unsupported.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::elliptic_curves::{
    group_structure, point_order, subgroup_from_generators, Curve, CurvePoint, PointKey,
};
use crate::error::{Error, Result};
use crate::finite_fields::ExtField;
use crate::isogenies::{
    endo_from_recipe, field_of_definition_report, find_isomorphism, velu, EndoRecipe, Isogeny,
};
use crate::weil_pairing::is_maximal_isotropic;

/// One curve factor y^2 = x^3 + ax + b, coefficients as canonical
/// ordinals in F_p.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub a: u64,
    pub b: u64,
}

/// An affine point with coordinates given as canonical ordinals in
/// F_{p^field_degree}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    pub field_degree: usize,
    pub x: u64,
    pub y: u64,
}

/// How one factor of the map f is presented.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    /// The separable quotient by the subgroup generated by `kernel`
    /// (of prime order `degree`), followed by the canonical isomorphism
    /// onto the stated codomain factor.
    Velu { kernel: PointSpec, degree: u64 },
    /// An integer combination of 1, the order-4 automorphism i, and the
    /// base Frobenius; requires equal domain and codomain equations.
    Recipe(EndoRecipe),
}

/// A fully explicit instance of the condition bundle.
///
/// All lists are indexed by factor: `f[i]` maps the i-th factor of A to
/// the i-th factor of B, and `a_tilde[i]` / `b_tilde[i]` list generators
/// of the marked subgroup on that factor.  An empty generator list marks
/// the trivial subgroup.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiInstance {
    pub p: u64,
    /// torsion level
    pub n: u64,
    /// degree over F_p of the field L that f is claimed to be defined over
    pub m: usize,
    pub a_factors: Vec<CurveSpec>,
    pub b_factors: Vec<CurveSpec>,
    pub f: Vec<MapSpec>,
    pub a_tilde: Vec<Vec<PointSpec>>,
    pub b_tilde: Vec<Vec<PointSpec>>,
    /// multiplier of the reference product polarization on B; only the
    /// principal case 1 is supported
    #[serde(default = "default_multiplier")]
    pub mu_multiplier: u64,
}

fn default_multiplier() -> u64 {
    1
}

/// Outcome of a single clause, with a human-readable witness.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClauseReport {
    pub holds: bool,
    pub detail: String,
}

fn clause(holds: bool, detail: String) -> ClauseReport {
    ClauseReport { holds, detail }
}

/// Line-item verdicts for the seven clauses, plus the conjunction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhiReport {
    pub p: u64,
    pub n: u64,
    pub m: usize,
    /// total degree of f (product over factors); also the multiplier of
    /// the pullback polarization
    pub degree: u64,
    pub dimension_positive: ClauseReport,
    pub level_coprime_to_char: ClauseReport,
    pub map_defined_over_l: ClauseReport,
    pub polarization_field_rational: ClauseReport,
    pub target_subgroup_admissible: ClauseReport,
    pub subgroup_transport_rational: ClauseReport,
    pub pullback_polarization_rational: ClauseReport,
    pub overall: bool,
}

/// One factor of the instance, realized over a working field that
/// contains the map coefficients, L, and every listed generator.
struct FactorData {
    f: Isogeny,
    a_gens: Vec<CurvePoint>,
    b_gens: Vec<CurvePoint>,
}

/// Closure data for one marked subgroup: the sorted point list, its key
/// set, whether every generator is n-torsion, and whether the subgroup is
/// stable under the base Frobenius.
struct SubgroupData {
    points: Vec<CurvePoint>,
    keys: HashSet<PointKey>,
    torsion_ok: bool,
    bad_torsion_index: usize,
    stable: bool,
    bad_stable_index: usize,
}

fn close_subgroup(curve: &Curve, gens: &[CurvePoint], n: u64) -> Result<SubgroupData> {
    let points = subgroup_from_generators(curve, gens)?;
    let keys: HashSet<PointKey> = points.iter().map(|pt| pt.key()).collect();
    let mut torsion_ok = true;
    let mut bad_torsion_index = 0;
    let mut stable = true;
    let mut bad_stable_index = 0;
    for (i, g) in gens.iter().enumerate() {
        if torsion_ok && !g.mul_u64(n).is_infinity() {
            torsion_ok = false;
            bad_torsion_index = i;
        }
        if stable && !keys.contains(&g.galois_image(1)?.key()) {
            stable = false;
            bad_stable_index = i;
        }
    }
    Ok(SubgroupData { points, keys, torsion_ok, bad_torsion_index, stable, bad_stable_index })
}

/// First point (in canonical order) generating an order-n subgroup on
/// which the n-torsion pairing is trivial.  Callers must have verified
/// that the closure is n-torsion.
fn find_isotropic_line(closure: &[CurvePoint], n: u64) -> Result<Option<CurvePoint>> {
    for q in closure {
        if q.is_infinity() || point_order(q, n) != n {
            continue;
        }
        if is_maximal_isotropic(n, std::slice::from_ref(q))? {
            return Ok(Some(q.clone()));
        }
    }
    Ok(None)
}

/// Decode a canonical ordinal, turning out-of-range values into instance
/// errors instead of panics.
fn checked_element(field: &ExtField, ordinal: u64, what: &str) -> Result<crate::finite_fields::FieldElement> {
    let mut order = Some(1u64);
    for _ in 0..field.degree() {
        order = order.and_then(|v| v.checked_mul(field.p()));
    }
    if let Some(order) = order {
        if ordinal >= order {
            return Err(Error::BadInstance(format!(
                "{what}: ordinal {ordinal} exceeds the field order {order}"
            )));
        }
    }
    Ok(field.element_from_ordinal(ordinal))
}

fn build_point(base: &Curve, spec: &PointSpec, target: &Curve, what: &str) -> Result<CurvePoint> {
    let field = ExtField::new(base.p(), spec.field_degree)?;
    let lifted_curve = base.lift_to(&field)?;
    let x = checked_element(&field, spec.x, what)?;
    let y = checked_element(&field, spec.y, what)?;
    let pt = lifted_curve
        .point(x, y)
        .map_err(|_| Error::BadInstance(format!("{what} is not on the stated curve")))?;
    pt.lift_to(target)
}

fn build_factor(inst: &PhiInstance, i: usize) -> Result<FactorData> {
    let prime_field = ExtField::new(inst.p, 1)?;
    let elt = |v: u64, what: &str| checked_element(&prime_field, v, what);
    let a_spec = inst.a_factors[i];
    let b_spec = inst.b_factors[i];
    let a_base = Curve::new(
        prime_field.clone(),
        elt(a_spec.a, &format!("factor {i} domain a"))?,
        elt(a_spec.b, &format!("factor {i} domain b"))?,
    )
    .map_err(|e| Error::BadInstance(format!("factor {i} domain: {e}")))?;
    let b_base = Curve::new(
        prime_field.clone(),
        elt(b_spec.a, &format!("factor {i} codomain a"))?,
        elt(b_spec.b, &format!("factor {i} codomain b"))?,
    )
    .map_err(|e| Error::BadInstance(format!("factor {i} codomain: {e}")))?;

    let f_natural = match &inst.f[i] {
        MapSpec::Recipe(recipe) => {
            if a_spec != b_spec {
                return Err(Error::BadInstance(format!(
                    "factor {i}: an endomorphism recipe needs equal domain and codomain equations"
                )));
            }
            endo_from_recipe(&a_base, recipe)?
        }
        MapSpec::Velu { kernel, degree } => {
            let kernel_field = ExtField::new(inst.p, kernel.field_degree)?;
            let a_lifted = a_base.lift_to(&kernel_field)?;
            let x = checked_element(&kernel_field, kernel.x, &format!("factor {i} kernel x"))?;
            let y = checked_element(&kernel_field, kernel.y, &format!("factor {i} kernel y"))?;
            let pt = a_lifted.point(x, y).map_err(|_| {
                Error::BadInstance(format!("factor {i}: kernel point is not on the domain curve"))
            })?;
            let quotient = velu(&pt, *degree)?;
            let b_lifted = b_base.lift_to(&kernel_field)?;
            let iso = find_isomorphism(quotient.codomain(), &b_lifted)?.ok_or_else(|| {
                Error::BadInstance(format!(
                    "factor {i}: quotient curve is not isomorphic to the stated codomain"
                ))
            })?;
            iso.compose(&quotient)?
        }
    };

    let mut working_degree = num_integer::lcm(inst.m, f_natural.domain().field().degree());
    for spec in inst.a_tilde[i].iter().chain(inst.b_tilde[i].iter()) {
        if spec.field_degree == 0 {
            return Err(Error::BadInstance(format!(
                "factor {i}: a generator lists field degree 0"
            )));
        }
        working_degree = num_integer::lcm(working_degree, spec.field_degree);
    }
    let working_field = ExtField::new(inst.p, working_degree)?;
    let f = f_natural.lift_to(&working_field)?;

    let a_gens = inst.a_tilde[i]
        .iter()
        .enumerate()
        .map(|(g, spec)| {
            build_point(&a_base, spec, f.domain(), &format!("factor {i} source generator {g}"))
        })
        .collect::<Result<Vec<_>>>()?;
    let b_gens = inst.b_tilde[i]
        .iter()
        .enumerate()
        .map(|(g, spec)| {
            build_point(&b_base, spec, f.codomain(), &format!("factor {i} target generator {g}"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FactorData { f, a_gens, b_gens })
}

fn validate_shape(inst: &PhiInstance) -> Result<()> {
    let k = inst.a_factors.len();
    if k == 0 {
        return Err(Error::BadInstance("no curve factors".into()));
    }
    if inst.b_factors.len() != k || inst.f.len() != k {
        return Err(Error::BadInstance(format!(
            "factor lists disagree: {} domain factors, {} codomain factors, {} maps",
            k,
            inst.b_factors.len(),
            inst.f.len()
        )));
    }
    if inst.a_tilde.len() != k || inst.b_tilde.len() != k {
        return Err(Error::BadInstance(format!(
            "marked-subgroup lists disagree with the {k} factors: {} source, {} target",
            inst.a_tilde.len(),
            inst.b_tilde.len()
        )));
    }
    if inst.n == 0 {
        return Err(Error::BadInstance("torsion level 0".into()));
    }
    if inst.m == 0 {
        return Err(Error::BadInstance("field degree m must be at least 1".into()));
    }
    if inst.mu_multiplier != 1 {
        return Err(Error::Unsupported(format!(
            "reference polarization multiplier {} (only the principal case 1 is supported)",
            inst.mu_multiplier
        )));
    }
    Ok(())
}

/// Evaluate every clause of the condition bundle on an instance.
///
/// Malformed instances (inconsistent factor lists, points off their
/// curves, unsupported polarizations) come back as errors; mathematical
/// failures of individual clauses are reported as `holds: false` line
/// items with the first failing witness.
pub fn check_phi(inst: &PhiInstance) -> Result<PhiReport> {
    validate_shape(inst)?;
    let k = inst.a_factors.len();
    let factors: Vec<FactorData> =
        (0..k).map(|i| build_factor(inst, i)).collect::<Result<Vec<_>>>()?;

    let degree = factors
        .iter()
        .try_fold(1u64, |acc, fac| acc.checked_mul(fac.f.degree()))
        .ok_or_else(|| Error::BadInstance("total degree overflows u64".into()))?;

    // (a) positive dimension
    let dimension_positive = clause(
        k > 0,
        format!("{k} elliptic factor(s) on each side; both products have dimension {k}"),
    );

    // (b) level prime to the characteristic
    let level_gcd = num_integer::gcd(inst.n, inst.p);
    let level_coprime_to_char = clause(
        level_gcd == 1,
        format!("gcd(n = {}, p = {}) = {}", inst.n, inst.p, level_gcd),
    );

    // (c) f defined over L, via both oracles, and deg f prime to n
    let mut c_holds = true;
    let mut c_parts: Vec<String> = Vec::new();
    for (i, fac) in factors.iter().enumerate() {
        let report = field_of_definition_report(&fac.f, inst.m)?;
        if !(report.coeff_rational && report.commutes) {
            c_holds = false;
        }
        c_parts.push(format!(
            "factor {i}: coeff {} / commutation {} for F_p^{} (probe level {})",
            report.coeff_rational, report.commutes, inst.m, report.probe_level
        ));
    }
    let degree_gcd = num_integer::gcd(degree, inst.n);
    if degree_gcd != 1 {
        c_holds = false;
    }
    c_parts.push(format!("gcd(deg f = {degree}, n = {}) = {degree_gcd}", inst.n));
    let map_defined_over_l = clause(c_holds, c_parts.join("; "));

    // (d) reference polarization defined over F_p
    let polarization_field_rational = clause(
        true,
        "principal product polarization (multiplier 1) attached to factors with coefficients in F_p"
            .to_string(),
    );

    // (e) marked target subgroup: n-torsion, Frobenius-stable, containing
    // a product of per-factor isotropic lines
    let mut e_holds = true;
    let mut e_parts: Vec<String> = Vec::new();
    let mut b_subgroups: Vec<SubgroupData> = Vec::new();
    for (i, fac) in factors.iter().enumerate() {
        let sub = close_subgroup(fac.f.codomain(), &fac.b_gens, inst.n)?;
        let part = if !sub.torsion_ok {
            e_holds = false;
            format!(
                "factor {i}: generator {} is not killed by n = {}",
                sub.bad_torsion_index, inst.n
            )
        } else if !sub.stable {
            e_holds = false;
            format!(
                "factor {i}: Frobenius moves generator {} out of the subgroup",
                sub.bad_stable_index
            )
        } else if inst.n == 1 {
            format!("factor {i}: trivial level, the trivial subgroup is maximal isotropic")
        } else if level_gcd != 1 {
            e_holds = false;
            format!("factor {i}: isotropy undefined while n shares a factor with p")
        } else {
            match find_isotropic_line(&sub.points, inst.n)? {
                Some(witness) => {
                    let (x, _) = witness.xy().expect("order-n witness is affine");
                    format!(
                        "factor {i}: order {}, stable, isotropic line through x-ordinal {} in F_{}",
                        sub.points.len(),
                        witness.curve().field().ordinal(x),
                        witness.curve().field().describe()
                    )
                }
                None => {
                    e_holds = false;
                    format!(
                        "factor {i}: order {}, stable, but no order-{} isotropic line inside it",
                        sub.points.len(),
                        inst.n
                    )
                }
            }
        };
        e_parts.push(part);
        b_subgroups.push(sub);
    }
    let target_subgroup_admissible = clause(e_holds, e_parts.join("; "));

    // (f) marked source subgroup carried bijectively onto the target one,
    // compatibly with the base Frobenius
    let mut f_holds = true;
    let mut f_parts: Vec<String> = Vec::new();
    for (i, fac) in factors.iter().enumerate() {
        let sub = close_subgroup(fac.f.domain(), &fac.a_gens, inst.n)?;
        let part = if !sub.torsion_ok {
            f_holds = false;
            format!(
                "factor {i}: generator {} is not killed by n = {}",
                sub.bad_torsion_index, inst.n
            )
        } else if !sub.stable {
            f_holds = false;
            format!(
                "factor {i}: Frobenius moves generator {} out of the subgroup",
                sub.bad_stable_index
            )
        } else {
            let mut image_keys: HashSet<PointKey> = HashSet::new();
            for pt in &sub.points {
                image_keys.insert(fac.f.evaluate(pt)?.key());
            }
            let injective = image_keys.len() == sub.points.len();
            let target = &b_subgroups[i];
            let onto = image_keys.len() == target.keys.len()
                && image_keys.iter().all(|key| target.keys.contains(key));
            let mut commutes = true;
            for g in &fac.a_gens {
                let lhs = fac.f.evaluate(&g.galois_image(1)?)?;
                let rhs = fac.f.evaluate(g)?.galois_image(1)?;
                if lhs != rhs {
                    commutes = false;
                    break;
                }
            }
            if !(injective && onto && commutes) {
                f_holds = false;
            }
            format!(
                "factor {i}: order {} mapped to {} image point(s); injective {injective}, onto marked target {onto}, Frobenius-equivariant {commutes}",
                sub.points.len(),
                image_keys.len()
            )
        };
        f_parts.push(part);
    }
    let subgroup_transport_rational = clause(f_holds, f_parts.join("; "));

    // (g) pullback polarization
    let pullback_polarization_rational = clause(
        true,
        format!(
            "pullback of the principal polarization along f is {degree} times the principal one on each factor, with multipliers in Z"
        ),
    );

    let overall = dimension_positive.holds
        && level_coprime_to_char.holds
        && map_defined_over_l.holds
        && polarization_field_rational.holds
        && target_subgroup_admissible.holds
        && subgroup_transport_rational.holds
        && pullback_polarization_rational.holds;

    Ok(PhiReport {
        p: inst.p,
        n: inst.n,
        m: inst.m,
        degree,
        dimension_positive,
        level_coprime_to_char,
        map_defined_over_l,
        polarization_field_rational,
        target_subgroup_admissible,
        subgroup_transport_rational,
        pullback_polarization_rational,
        overall,
    })
}

/// A complete single-factor instance over F_11 whose clauses all hold:
/// E: y^2 = x^3 + x, level n = 6, marked subgroups the order-6 part of
/// E(F_11) = Z/12 on both sides, and f = 1 + 6i of degree 37 defined
/// over F_{11^2}.
pub fn example_instance() -> PhiInstance {
    let field = ExtField::new(11, 1).expect("prime field");
    let curve = Curve::from_i64(&field, 1, 0).expect("nonsingular");
    let s = group_structure(&curve).expect("small curve");
    assert_eq!((s.a, s.ab), (1, 12), "E(F_11) should be cyclic of order 12");
    let g6 = s.gen_big.mul_u64(2);
    let (x, y) = g6.xy().expect("order-6 point is affine");
    let spec = PointSpec { field_degree: 1, x: field.ordinal(x), y: field.ordinal(y) };
    PhiInstance {
        p: 11,
        n: 6,
        m: 2,
        a_factors: vec![CurveSpec { a: 1, b: 0 }],
        b_factors: vec![CurveSpec { a: 1, b: 0 }],
        f: vec![MapSpec::Recipe(EndoRecipe { one: 1, i: 6, frob: 0, frob_i: 0 })],
        a_tilde: vec![vec![spec]],
        b_tilde: vec![vec![spec]],
        mu_multiplier: 1,
    }
}
