//! Prime fields F_p and their extensions F_{p^k}, 1 <= k <= 24.
//!
//! Extension fields are polynomial residue rings F_p[x]/(m(x)) where m is the
//! lexicographically smallest monic irreducible of degree k, with coefficient
//! sequences compared constant term first.  The choice is deterministic, so
//! two constructions of F_{p^k} are always the same field with the same
//! element representation.  There are no towers: F_{p^a} sits inside F_{p^b}
//! through the lexicographically smallest root of the degree-a modulus.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Largest extension degree we construct.  Torsion fields beyond this are
/// reported as out of range rather than silently approximated.
pub const MAX_DEGREE: usize = 24;

/// Field orders up to this bound may be exhaustively enumerated.
pub const ENUMERATION_BOUND: u64 = 10_000_000;

/// Trial-division primality for the supported range (odd p below 2^31).
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// An odd prime p < 2^31.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self> {
        if p < 3 || p >= (1 << 31) || !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(PrimeField { p })
    }

    pub fn p(&self) -> u64 {
        self.p
    }
}

// ---------------------------------------------------------------------------
// dense polynomials over F_p with u64 coefficients, used for modulus search
// and residue arithmetic

fn fp_add(a: u64, b: u64, p: u64) -> u64 {
    let s = a + b;
    if s >= p {
        s - p
    } else {
        s
    }
}

fn fp_sub(a: u64, b: u64, p: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + p - b
    }
}

fn fp_mul(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn fp_pow(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = fp_mul(acc, a, p);
        }
        a = fp_mul(a, a, p);
        e >>= 1;
    }
    acc
}

fn fp_inv(a: u64, p: u64) -> u64 {
    // p prime, a nonzero
    fp_pow(a, p - 2, p)
}

fn ptrim(v: &mut Vec<u64>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

fn pmul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u128; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + ai as u128 * bj as u128) % p as u128;
        }
    }
    let mut out: Vec<u64> = out.into_iter().map(|c| c as u64).collect();
    ptrim(&mut out);
    out
}

fn psub(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let n = a.len().max(b.len());
    let mut out = vec![0u64; n];
    for i in 0..n {
        let ai = a.get(i).copied().unwrap_or(0);
        let bi = b.get(i).copied().unwrap_or(0);
        out[i] = fp_sub(ai, bi, p);
    }
    ptrim(&mut out);
    out
}

/// Remainder of a by the monic polynomial m.
fn prem(a: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    debug_assert_eq!(*m.last().unwrap(), 1);
    let mut r: Vec<u64> = a.to_vec();
    ptrim(&mut r);
    let dm = m.len() - 1;
    while r.len() > dm {
        let c = *r.last().unwrap();
        let shift = r.len() - 1 - dm;
        if c != 0 {
            for j in 0..dm {
                r[shift + j] = fp_sub(r[shift + j], fp_mul(c, m[j], p), p);
            }
        }
        r.pop();
        ptrim(&mut r);
    }
    r
}

fn pmulmod(a: &[u64], b: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    prem(&pmul(a, b, p), m, p)
}

fn ppowmod_u64(base: &[u64], mut e: u64, m: &[u64], p: u64) -> Vec<u64> {
    let mut acc = vec![1u64];
    let mut b = prem(base, m, p);
    while e > 0 {
        if e & 1 == 1 {
            acc = pmulmod(&acc, &b, m, p);
        }
        b = pmulmod(&b, &b, m, p);
        e >>= 1;
    }
    acc
}

fn pgcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    ptrim(&mut a);
    ptrim(&mut b);
    while !b.is_empty() {
        // make b monic before reducing
        let lc = *b.last().unwrap();
        if lc != 1 {
            let inv = fp_inv(lc, p);
            for c in b.iter_mut() {
                *c = fp_mul(*c, inv, p);
            }
        }
        let r = prem(&a, &b, p);
        a = b;
        b = r;
    }
    if let Some(&lc) = a.last() {
        if lc != 1 {
            let inv = fp_inv(lc, p);
            for c in a.iter_mut() {
                *c = fp_mul(*c, inv, p);
            }
        }
    }
    a
}

/// Extended Euclid: returns s with s*a = gcd(a, m) mod m.  Used for inversion
/// in the residue ring, where gcd(a, m) = 1.
fn pinvmod(a: &[u64], m: &[u64], p: u64) -> Option<Vec<u64>> {
    let mut r0 = m.to_vec();
    let mut r1 = prem(a, m, p);
    let mut s0: Vec<u64> = Vec::new();
    let mut s1 = vec![1u64];
    while !r1.is_empty() {
        // divide r0 by r1
        let lc = *r1.last().unwrap();
        let lcinv = fp_inv(lc, p);
        let mut q = vec![0u64; r0.len().saturating_sub(r1.len()) + 1];
        let mut rem = r0.clone();
        while rem.len() >= r1.len() && !rem.is_empty() {
            let c = fp_mul(*rem.last().unwrap(), lcinv, p);
            let shift = rem.len() - r1.len();
            q[shift] = c;
            if c != 0 {
                for j in 0..r1.len() {
                    rem[shift + j] = fp_sub(rem[shift + j], fp_mul(c, r1[j], p), p);
                }
            }
            ptrim(&mut rem);
            if rem.len() >= r1.len() && rem.last() == Some(&0) {
                ptrim(&mut rem);
            }
            if rem.len() < r1.len() {
                break;
            }
        }
        ptrim(&mut q);
        let s2 = psub(&s0, &pmul(&q, &s1, p), p);
        r0 = r1;
        r1 = rem;
        s0 = s1;
        s1 = s2;
    }
    // r0 = gcd; invertible iff gcd is a nonzero constant
    if r0.len() != 1 {
        return None;
    }
    let c = fp_inv(r0[0], p);
    let mut out: Vec<u64> = s0.iter().map(|&x| fp_mul(x, c, p)).collect();
    ptrim(&mut out);
    Some(prem(&out, m, p))
}

/// Rabin irreducibility test for a monic degree-k polynomial over F_p.
fn is_irreducible(f: &[u64], p: u64) -> bool {
    let k = f.len() - 1;
    if k == 0 {
        return false;
    }
    if k == 1 {
        return true;
    }
    let mut primes = Vec::new();
    let mut kk = k;
    let mut d = 2;
    while d * d <= kk {
        if kk % d == 0 {
            primes.push(d);
            while kk % d == 0 {
                kk /= d;
            }
        }
        d += 1;
    }
    if kk > 1 {
        primes.push(kk);
    }
    // gcd(x^(p^(k/r)) - x, f) must be trivial for every prime r | k; walking
    // the p-power chain once and testing at each checkpoint in ascending
    // order lets most reducible inputs exit early
    let mut checkpoints: Vec<usize> = primes.iter().map(|r| k / r).collect();
    checkpoints.sort_unstable();
    let x = vec![0u64, 1];
    let mut cur = ppowmod_u64(&x, p, f, p); // x^(p^j), starting at j = 1
    let mut j = 1;
    for cp in checkpoints {
        while j < cp {
            cur = ppowmod_poly(&cur, p, f);
            j += 1;
        }
        if pgcd(&psub(&cur, &x, p), f, p).len() != 1 {
            return false;
        }
    }
    while j < k {
        cur = ppowmod_poly(&cur, p, f);
        j += 1;
    }
    // x^(p^k) == x
    cur == x
}

/// Raise a residue to the p-th power: ppowmod specialized from a known residue.
fn ppowmod_poly(base: &[u64], p: u64, m: &[u64]) -> Vec<u64> {
    ppowmod_u64(base, p, m, p)
}

/// The lexicographically smallest monic irreducible of degree k over F_p,
/// coefficient sequences compared constant term first.  Degree 1 yields x.
fn smallest_irreducible(p: u64, k: usize) -> Vec<u64> {
    if k == 1 {
        return vec![0, 1];
    }
    // Enumerate (c_0, ..., c_{k-1}) in lexicographic order, c_0 most
    // significant, by incrementing the last coordinate first.  A zero
    // constant term means divisibility by x, so the scan starts at c_0 = 1
    // and skips anything with a root in the prime field before running the
    // full test.
    let mut c = vec![0u64; k];
    c[0] = 1;
    loop {
        if !has_prime_field_root(&c, p) {
            let mut f = c.clone();
            f.push(1);
            if is_irreducible(&f, p) {
                return f;
            }
        }
        let mut i = k;
        loop {
            if i == 0 {
                unreachable!("irreducibles of every degree exist over F_p");
            }
            i -= 1;
            c[i] += 1;
            if c[i] < p {
                break;
            }
            c[i] = 0;
        }
    }
}

/// Whether x^k + c_{k-1} x^{k-1} + ... + c_0 has a root in F_p.
fn has_prime_field_root(c: &[u64], p: u64) -> bool {
    (0..p).any(|a| {
        let mut v = 1u64; // Horner from the implicit leading coefficient
        for &ci in c.iter().rev() {
            v = fp_add(fp_mul(v, a, p), ci, p);
        }
        v == 0
    })
}

// ---------------------------------------------------------------------------

struct FieldInner {
    p: u64,
    k: usize,
    modulus: Vec<u64>, // monic, length k + 1
    order: Option<u64>,
}

/// The field F_{p^k}, cheap to clone and safe to share across threads.
#[derive(Clone)]
pub struct ExtField {
    inner: Arc<FieldInner>,
}

fn field_cache() -> &'static Mutex<HashMap<(u64, usize), Arc<FieldInner>>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, usize), Arc<FieldInner>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl ExtField {
    /// Construct F_{p^k}.  Repeated calls share one interned representation,
    /// and in any case the modulus is deterministic in (p, k).
    pub fn new(p: u64, k: usize) -> Result<ExtField> {
        PrimeField::new(p)?;
        if k == 0 || k > MAX_DEGREE {
            return Err(Error::DegreeOutOfRange(k));
        }
        if let Some(inner) = field_cache().lock().unwrap().get(&(p, k)) {
            return Ok(ExtField { inner: inner.clone() });
        }
        let modulus = smallest_irreducible(p, k);
        let mut order = Some(1u64);
        for _ in 0..k {
            order = order.and_then(|o| o.checked_mul(p));
        }
        let inner = Arc::new(FieldInner { p, k, modulus, order });
        field_cache()
            .lock()
            .unwrap()
            .entry((p, k))
            .or_insert_with(|| inner.clone());
        Ok(ExtField { inner })
    }

    pub fn prime_field(p: u64) -> Result<ExtField> {
        ExtField::new(p, 1)
    }

    pub fn p(&self) -> u64 {
        self.inner.p
    }

    pub fn degree(&self) -> usize {
        self.inner.k
    }

    pub fn modulus(&self) -> &[u64] {
        &self.inner.modulus
    }

    pub fn base(&self) -> PrimeField {
        PrimeField { p: self.inner.p }
    }

    /// p^k when it fits in a machine word.
    pub fn order(&self) -> Option<u64> {
        self.inner.order
    }

    pub fn order_big(&self) -> BigUint {
        BigUint::from(self.inner.p).pow(self.inner.k as u32)
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement {
            field: self.clone(),
            coeffs: vec![0; self.inner.k],
        }
    }

    pub fn one(&self) -> FieldElement {
        self.from_u64(1)
    }

    pub fn from_u64(&self, c: u64) -> FieldElement {
        let mut coeffs = vec![0; self.inner.k];
        coeffs[0] = c % self.inner.p;
        FieldElement { field: self.clone(), coeffs }
    }

    pub fn from_i64(&self, c: i64) -> FieldElement {
        let p = self.inner.p as i64;
        let r = c.rem_euclid(p) as u64;
        self.from_u64(r)
    }

    /// Residue class of x, a generator of the extension when k > 1.
    pub fn gen(&self) -> FieldElement {
        let mut coeffs = vec![0; self.inner.k];
        if self.inner.k > 1 {
            coeffs[1] = 1;
        }
        FieldElement { field: self.clone(), coeffs }
    }

    /// Element with the given coefficients, low degree first.
    pub fn from_coeffs(&self, mut coeffs: Vec<u64>) -> FieldElement {
        assert!(coeffs.len() <= self.inner.k, "coefficient vector too long");
        for c in coeffs.iter_mut() {
            *c %= self.inner.p;
        }
        coeffs.resize(self.inner.k, 0);
        FieldElement { field: self.clone(), coeffs }
    }

    /// The n-th element in canonical order.  Canonical order is
    /// lexicographic on (c_0, ..., c_{k-1}), so n's base-p digits fill the
    /// coefficient vector from the high-degree end.
    pub fn element_from_ordinal(&self, n: u64) -> FieldElement {
        let p = self.inner.p;
        let k = self.inner.k;
        let mut coeffs = vec![0u64; k];
        let mut d = n;
        for i in (0..k).rev() {
            coeffs[i] = d % p;
            d /= p;
        }
        assert_eq!(d, 0, "ordinal exceeds field order");
        FieldElement { field: self.clone(), coeffs }
    }

    /// Rank of x in canonical order; requires the order to fit in a word.
    pub fn ordinal(&self, x: &FieldElement) -> u64 {
        let p = self.inner.p;
        let mut n = 0u64;
        for &c in &x.coeffs {
            n = n * p + c;
        }
        n
    }

    /// All field elements in canonical order.  Only for enumerable fields.
    pub fn elements(&self) -> Result<FieldIter> {
        let order = self
            .order()
            .filter(|&q| q <= ENUMERATION_BOUND)
            .ok_or_else(|| Error::FieldTooLarge(self.order_big().to_string()))?;
        Ok(FieldIter { field: self.clone(), next: 0, order })
    }

    /// Whether elements of `other` can be mapped into this field.
    pub fn extends(&self, other: &ExtField) -> bool {
        self.inner.p == other.inner.p && self.inner.k % other.inner.k == 0
    }

    /// Image of x under the canonical embedding of its field into this one.
    /// The embedding sends the small field's generator to the
    /// lexicographically smallest root of the small modulus here.
    pub fn embed(&self, x: &FieldElement) -> Result<FieldElement> {
        let small = &x.field;
        if small.inner.p != self.inner.p {
            return Err(Error::FieldMismatch {
                expected: self.describe(),
                actual: small.describe(),
            });
        }
        if small.inner.k == self.inner.k {
            return Ok(FieldElement { field: self.clone(), coeffs: x.coeffs.clone() });
        }
        if self.inner.k % small.inner.k != 0 {
            return Err(Error::NoEmbedding { small: small.inner.k, large: self.inner.k });
        }
        if small.inner.k == 1 {
            return Ok(self.from_u64(x.coeffs[0]));
        }
        let root = embedding_root(small, self)?;
        // Horner evaluation of x's coefficient polynomial at the root
        let mut acc = self.zero();
        for &c in x.coeffs.iter().rev() {
            acc = &(&acc * &root) + &self.from_u64(c);
        }
        Ok(acc)
    }

    /// Preimage under `embed` into this field, for values of a larger field
    /// that lie in the embedded copy.  Solves the F_p-linear system whose
    /// columns are the embeddings of this field's power basis.
    pub fn unembed(&self, x: &FieldElement) -> Result<FieldElement> {
        let big = &x.field;
        if !big.extends(self) {
            return Err(Error::NoEmbedding { small: self.inner.k, large: big.inner.k });
        }
        if big.inner.k == self.inner.k {
            return Ok(FieldElement { field: self.clone(), coeffs: x.coeffs.clone() });
        }
        let p = self.inner.p;
        let a = self.inner.k;
        let b = big.inner.k;
        // augmented matrix [columns | x] over F_p, b rows, a + 1 columns
        let mut rows = vec![vec![0u64; a + 1]; b];
        let mut power = big.one();
        let gen_image = big.embed(&self.gen())?;
        for j in 0..a {
            for i in 0..b {
                rows[i][j] = power.coeffs[i];
            }
            power = &power * &gen_image;
        }
        for i in 0..b {
            rows[i][a] = x.coeffs[i];
        }
        // Gaussian elimination
        let mut pivot_of_col = vec![usize::MAX; a];
        let mut r = 0;
        for c in 0..a {
            let Some(pr) = (r..b).find(|&i| rows[i][c] != 0) else { continue };
            rows.swap(r, pr);
            let inv = fp_inv(rows[r][c], p);
            for v in rows[r].iter_mut() {
                *v = fp_mul(*v, inv, p);
            }
            for i in 0..b {
                if i != r && rows[i][c] != 0 {
                    let factor = rows[i][c];
                    for cc in 0..=a {
                        let sub = fp_mul(factor, rows[r][cc], p);
                        rows[i][cc] = fp_sub(rows[i][cc], sub, p);
                    }
                }
            }
            pivot_of_col[c] = r;
            r += 1;
        }
        // consistency: no pivot in the augmented column
        for row in rows.iter().skip(r) {
            if row[a] != 0 {
                return Err(Error::BadInstance("value is not in the embedded subfield".into()));
            }
        }
        let mut coeffs = vec![0u64; a];
        for c in 0..a {
            if pivot_of_col[c] != usize::MAX {
                coeffs[c] = rows[pivot_of_col[c]][a];
            }
        }
        let out = FieldElement { field: self.clone(), coeffs };
        debug_assert_eq!(&big.embed(&out).unwrap(), x);
        Ok(out)
    }

    pub fn describe(&self) -> String {
        if self.inner.k == 1 {
            format!("F_{}", self.inner.p)
        } else {
            format!("F_{{{}^{}}}", self.inner.p, self.inner.k)
        }
    }
}

impl PartialEq for ExtField {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.p == other.inner.p && self.inner.k == other.inner.k)
    }
}

impl Eq for ExtField {}

impl fmt::Debug for ExtField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.describe())
    }
}

pub struct FieldIter {
    field: ExtField,
    next: u64,
    order: u64,
}

impl Iterator for FieldIter {
    type Item = FieldElement;

    fn next(&mut self) -> Option<FieldElement> {
        if self.next >= self.order {
            return None;
        }
        let e = self.field.element_from_ordinal(self.next);
        self.next += 1;
        Some(e)
    }
}

fn embed_cache() -> &'static Mutex<HashMap<(u64, usize, usize), Vec<u64>>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, usize, usize), Vec<u64>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn embedding_root(small: &ExtField, large: &ExtField) -> Result<FieldElement> {
    let key = (small.p(), small.degree(), large.degree());
    if let Some(coeffs) = embed_cache().lock().unwrap().get(&key) {
        return Ok(large.from_coeffs(coeffs.clone()));
    }
    let modulus: Vec<FieldElement> = small
        .modulus()
        .iter()
        .map(|&c| large.from_u64(c))
        .collect();
    let poly = crate::poly::Poly::from_coeffs(large.clone(), modulus);
    let roots = crate::poly::roots_in_field(&poly);
    let root = roots
        .into_iter()
        .min_by(|a, b| a.canonical_cmp(b))
        .expect("the modulus of a subfield splits in the big field");
    embed_cache()
        .lock()
        .unwrap()
        .insert(key, root.coeffs.clone());
    Ok(root)
}

/// An element of F_{p^k}, stored as reduced coefficients low degree first.
#[derive(Clone)]
pub struct FieldElement {
    field: ExtField,
    coeffs: Vec<u64>,
}

impl FieldElement {
    pub fn field(&self) -> &ExtField {
        &self.field
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    pub fn is_one(&self) -> bool {
        self.coeffs[0] == 1 && self.coeffs[1..].iter().all(|&c| c == 0)
    }

    /// Lexicographic comparison of coefficient sequences, constant term
    /// first.  This is the tie-break order used everywhere.
    pub fn canonical_cmp(&self, other: &FieldElement) -> Ordering {
        debug_assert!(self.field == other.field);
        for (a, b) in self.coeffs.iter().zip(&other.coeffs) {
            match a.cmp(b) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        Ordering::Equal
    }

    pub fn add(&self, other: &FieldElement) -> FieldElement {
        self.check_same(other);
        let p = self.field.p();
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| fp_add(a, b, p))
            .collect();
        FieldElement { field: self.field.clone(), coeffs }
    }

    pub fn sub(&self, other: &FieldElement) -> FieldElement {
        self.check_same(other);
        let p = self.field.p();
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| fp_sub(a, b, p))
            .collect();
        FieldElement { field: self.field.clone(), coeffs }
    }

    pub fn neg(&self) -> FieldElement {
        let p = self.field.p();
        let coeffs = self.coeffs.iter().map(|&a| if a == 0 { 0 } else { p - a }).collect();
        FieldElement { field: self.field.clone(), coeffs }
    }

    pub fn mul(&self, other: &FieldElement) -> FieldElement {
        self.check_same(other);
        let p = self.field.p();
        let prod = pmul(&self.coeffs, &other.coeffs, p);
        let mut red = prem(&prod, self.field.modulus(), p);
        red.resize(self.field.degree(), 0);
        FieldElement { field: self.field.clone(), coeffs: red }
    }

    pub fn square(&self) -> FieldElement {
        self.mul(self)
    }

    pub fn inv(&self) -> Option<FieldElement> {
        if self.is_zero() {
            return None;
        }
        let p = self.field.p();
        let mut inv = pinvmod(&self.coeffs, self.field.modulus(), p)?;
        inv.resize(self.field.degree(), 0);
        Some(FieldElement { field: self.field.clone(), coeffs: inv })
    }

    pub fn pow_u64(&self, e: u64) -> FieldElement {
        let p = self.field.p();
        let mut out = ppowmod_u64(&self.coeffs, e, self.field.modulus(), p);
        out.resize(self.field.degree(), 0);
        FieldElement { field: self.field.clone(), coeffs: out }
    }

    pub fn pow_big(&self, e: &BigUint) -> FieldElement {
        let mut acc = self.field.one();
        let mut base = self.clone();
        let bits = e.bits();
        for i in 0..bits {
            if e.bit(i) {
                acc = acc.mul(&base);
            }
            if i + 1 < bits {
                base = base.square();
            }
        }
        acc
    }

    /// j-fold application of the p-power map, the Frobenius over F_p.
    pub fn frobenius(&self, j: usize) -> FieldElement {
        let p = self.field.p();
        let mut out = self.clone();
        for _ in 0..(j % self.field.degree()) {
            out = out.pow_u64(p);
        }
        out
    }

    fn check_same(&self, other: &FieldElement) {
        assert!(
            self.field == other.field,
            "field mismatch: {} vs {}",
            self.field.describe(),
            other.field.describe()
        );
    }
}

impl PartialEq for FieldElement {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field && self.coeffs == other.coeffs
    }
}

impl Eq for FieldElement {}

impl std::hash::Hash for FieldElement {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.field.p().hash(state);
        self.field.degree().hash(state);
        self.coeffs.hash(state);
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.degree() == 1 {
            return write!(f, "{}", self.coeffs[0]);
        }
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{c}")?,
                1 if c == 1 => write!(f, "t")?,
                1 => write!(f, "{c}*t")?,
                _ if c == 1 => write!(f, "t^{i}")?,
                _ => write!(f, "{c}*t^{i}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $inner:ident) => {
        impl std::ops::$trait for &FieldElement {
            type Output = FieldElement;
            fn $method(self, rhs: &FieldElement) -> FieldElement {
                FieldElement::$inner(self, rhs)
            }
        }
    };
}

impl_binop!(Add, add, add);
impl_binop!(Sub, sub, sub);
impl_binop!(Mul, mul, mul);

impl std::ops::Neg for &FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        FieldElement::neg(self)
    }
}

/// Deterministic square root: the exponent shortcut when q = 3 mod 4,
/// Tonelli-Shanks seeded with the smallest non-residue otherwise.  Of the
/// two roots the canonically smaller one is returned, which is exactly the
/// first root an exhaustive canonical scan would find.
pub fn sqrt_in_field(x: &FieldElement) -> Option<FieldElement> {
    let field = x.field();
    if x.is_zero() {
        return Some(field.zero());
    }
    let q = field.order_big();
    let half = (&q - BigUint::one()) >> 1;
    if !x.pow_big(&half).is_one() {
        return None;
    }
    let root = if (&q % BigUint::from(4u32)) == BigUint::from(3u32) {
        let e = (&q + BigUint::one()) >> 2;
        x.pow_big(&e)
    } else {
        tonelli_shanks(x, &q)
    };
    debug_assert!(root.square() == *x);
    let other = root.neg();
    Some(if root.canonical_cmp(&other) == Ordering::Greater { other } else { root })
}

fn tonelli_shanks(x: &FieldElement, q: &BigUint) -> FieldElement {
    let field = x.field();
    let one = BigUint::one();
    let mut m = q - &one;
    let mut s = 0u32;
    while (&m & &one).is_zero() {
        m >>= 1;
        s += 1;
    }
    let half = (q - &one) >> 1;
    // smallest non-residue in canonical order
    let mut z = field.zero();
    for n in 1..u64::MAX {
        let cand = field.element_from_ordinal(n);
        if cand.is_zero() {
            continue;
        }
        if !cand.pow_big(&half).is_one() {
            z = cand;
            break;
        }
    }
    let mut c = z.pow_big(&m);
    let mut t = x.pow_big(&m);
    let mut r = x.pow_big(&((&m + &one) >> 1));
    let mut e = s;
    while !t.is_one() {
        let mut i = 0u32;
        let mut t2 = t.clone();
        while !t2.is_one() {
            t2 = t2.square();
            i += 1;
            debug_assert!(i < e);
        }
        let mut b = c.clone();
        for _ in 0..(e - i - 1) {
            b = b.square();
        }
        r = &r * &b;
        c = b.square();
        t = &t * &c;
        e = i;
    }
    r
}

/// Multiplicative order of a nonzero element whose order divides n.
pub fn order_dividing(x: &FieldElement, n: u64) -> u64 {
    debug_assert!(x.pow_u64(n).is_one());
    let mut ord = n;
    let mut m = n;
    let mut d = 2u64;
    while d * d <= m {
        if m % d == 0 {
            while m % d == 0 {
                m /= d;
            }
            while ord % d == 0 && x.pow_u64(ord / d).is_one() {
                ord /= d;
            }
        }
        d += 1;
    }
    if m > 1 && ord % m == 0 && x.pow_u64(ord / m).is_one() {
        ord /= m;
    }
    ord
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_primes() {
        assert!(PrimeField::new(1).is_err());
        assert!(PrimeField::new(2).is_err());
        assert!(PrimeField::new(91).is_err());
        assert!(PrimeField::new(1 << 32).is_err());
        assert!(PrimeField::new(10007).is_ok());
    }

    #[test]
    fn degree_one_modulus_is_x() {
        let f = ExtField::new(7, 1).unwrap();
        assert_eq!(f.modulus(), &[0, 1]);
    }

    // Independent check of the modulus choice for F_{11^2}: scan monic
    // quadratics in the pinned order and keep the first with no root.
    #[test]
    fn modulus_11_2_matches_naive_scan() {
        let p = 11u64;
        let mut expected = None;
        'outer: for c0 in 0..p {
            for c1 in 0..p {
                let has_root = (0..p).any(|x| (x * x + c1 * x + c0) % p == 0);
                if !has_root {
                    expected = Some(vec![c0, c1, 1]);
                    break 'outer;
                }
            }
        }
        let f = ExtField::new(11, 2).unwrap();
        assert_eq!(f.modulus(), expected.unwrap().as_slice());
        // -c0 must be a non-residue
        assert_eq!(f.modulus(), &[1, 0, 1]); // x^2 + 1, since -1 is a non-residue mod 11
    }

    #[test]
    fn modulus_13_2_prefers_small_constant_term() {
        // -1 is a residue mod 13, so x^2 + 1 is reducible and the scan moves
        // the x coefficient before giving up on constant term 1
        let f = ExtField::new(13, 2).unwrap();
        let m = f.modulus();
        assert_eq!(m.len(), 3);
        assert_eq!(m[0], 1);
        // verify irreducibility naively
        let p = 13u64;
        assert!((0..p).all(|x| (x * x + m[1] * x + m[0]) % p != 0));
    }

    #[test]
    fn field_axioms_small() {
        let f = ExtField::new(7, 3).unwrap();
        let a = f.element_from_ordinal(25);
        let b = f.element_from_ordinal(301);
        let c = f.element_from_ordinal(118);
        assert_eq!(&(&a + &b) * &c, &(&a * &c) + &(&b * &c));
        let ai = a.inv().unwrap();
        assert!((&a * &ai).is_one());
    }

    #[test]
    fn frobenius_fixes_prime_subfield() {
        let f = ExtField::new(11, 4).unwrap();
        let c = f.from_u64(7);
        assert_eq!(c.frobenius(1), c);
        let t = f.gen();
        assert_ne!(t.frobenius(1), t);
        assert_eq!(t.frobenius(4), t);
    }

    #[test]
    fn sqrt_tie_break_prefers_small_root() {
        let f = ExtField::new(11, 1).unwrap();
        let four = f.from_u64(4);
        let r = sqrt_in_field(&four).unwrap();
        // 2^2 = 9^2 = 4; canonical order picks 2
        assert_eq!(r, f.from_u64(2));
    }

    #[test]
    fn sqrt_in_large_field_agrees_with_square() {
        let f = ExtField::new(10007, 2).unwrap();
        for n in [5u64, 1234, 99_999] {
            let x = f.element_from_ordinal(n);
            let sq = x.square();
            let r = sqrt_in_field(&sq).unwrap();
            assert!(r == x || r == x.neg());
            let other = r.neg();
            assert!(r.canonical_cmp(&other) != Ordering::Greater);
        }
    }

    #[test]
    fn non_squares_have_no_root() {
        let f = ExtField::new(19, 1).unwrap();
        let squares: std::collections::HashSet<u64> =
            (0..19).map(|x| (x * x) % 19).collect();
        for n in 0..19 {
            let x = f.from_u64(n);
            assert_eq!(sqrt_in_field(&x).is_some(), squares.contains(&n));
        }
    }

    #[test]
    fn embedding_preserves_arithmetic() {
        let small = ExtField::new(11, 2).unwrap();
        let large = ExtField::new(11, 4).unwrap();
        let a = small.element_from_ordinal(17);
        let b = small.element_from_ordinal(93);
        let ea = large.embed(&a).unwrap();
        let eb = large.embed(&b).unwrap();
        assert_eq!(large.embed(&(&a * &b)).unwrap(), &ea * &eb);
        assert_eq!(large.embed(&(&a + &b)).unwrap(), &ea + &eb);
    }

    #[test]
    fn embedding_rejects_non_divisible_degrees() {
        let small = ExtField::new(11, 2).unwrap();
        let large = ExtField::new(11, 3).unwrap();
        let a = small.gen();
        assert!(large.embed(&a).is_err());
    }

    #[test]
    fn ordinal_roundtrip_and_order() {
        let f = ExtField::new(5, 3).unwrap();
        let mut prev: Option<FieldElement> = None;
        for n in 0..125 {
            let e = f.element_from_ordinal(n);
            assert_eq!(f.ordinal(&e), n);
            if let Some(p) = prev {
                assert_eq!(p.canonical_cmp(&e), Ordering::Less);
            }
            prev = Some(e);
        }
    }
}
