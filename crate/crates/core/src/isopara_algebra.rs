//! Exact algebra for isoparametric hypersurfaces in space forms.
//!
//! Principal curvatures of a spherical isoparametric family with `g` distinct
//! curvatures are `λ_k = cot(t + kπ/g)`, written as rational functions of
//! `λ = cot t`. For `g = 3, 6` some `λ_k` live in `Q(√3)(λ)`; they come in
//! conjugate pairs with equal multiplicity, and each pair contributes only
//! through `e1 = λ_a + λ_b` and `e2 = λ_a λ_b`, both rational in `λ`.
//!
//! All polynomial work is done over `BigRational`; nothing in the exact path
//! touches floating point.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Dense univariate polynomial over Q, ascending coefficients, no trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Poly {
    coeffs: Vec<BigRational>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: BigRational) -> Self {
        Self::new(vec![c])
    }

    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    /// The indeterminate `λ`.
    pub fn x() -> Self {
        Self::new(vec![BigRational::zero(), BigRational::one()])
    }

    pub fn from_i64_ascending(c: &[i64]) -> Self {
        Self::new(c.iter().map(|&v| rat(v)).collect())
    }

    /// Integer coefficients, highest degree first.
    pub fn from_int_descending(c: &[BigInt]) -> Self {
        Self::new(c.iter().rev().map(|v| BigRational::from_integer(v.clone())).collect())
    }

    pub fn from_i64_descending(c: &[i64]) -> Self {
        Self::new(c.iter().rev().map(|&v| rat(v)).collect())
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> BigRational {
        self.coeffs.last().cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn coeff(&self, k: usize) -> BigRational {
        self.coeffs.get(k).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        Self::new((0..n).map(|k| self.coeff(k) + o.coeff(k)).collect())
    }

    pub fn sub(&self, o: &Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        Self::new((0..n).map(|k| self.coeff(k) - o.coeff(k)).collect())
    }

    pub fn neg(&self) -> Self {
        Self::new(self.coeffs.iter().map(|c| -c).collect())
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(Self::one(), |acc, _| acc.mul(self))
    }

    /// Euclidean division; panics on a zero divisor.
    pub fn div_rem(&self, d: &Self) -> (Self, Self) {
        assert!(!d.is_zero(), "polynomial division by zero");
        let dd = d.coeffs.len() - 1;
        let lead = d.leading();
        let mut r = self.coeffs.clone();
        if r.len() <= dd {
            return (Self::zero(), self.clone());
        }
        let mut q = vec![BigRational::zero(); r.len() - dd];
        for k in (0..q.len()).rev() {
            let f = &r[k + dd] / &lead;
            if !f.is_zero() {
                for (j, dc) in d.coeffs.iter().enumerate() {
                    r[k + j] -= &f * dc;
                }
            }
            q[k] = f;
        }
        (Self::new(q), Self::new(r))
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * rat(k as i64))
                .collect(),
        )
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let inv = self.leading().recip();
        self.scale(&inv)
    }

    /// Monic gcd; `gcd(0, 0) = 0`.
    pub fn gcd(&self, o: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.div_rem(&b).1;
            a = b;
            b = r;
        }
        a.monic()
    }

    /// `p / gcd(p, p')`, monic.
    pub fn square_free(&self) -> Self {
        if self.degree().unwrap_or(0) == 0 {
            return self.monic();
        }
        let g = self.gcd(&self.derivative());
        self.div_rem(&g).0.monic()
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.coeffs
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + c.to_f64().unwrap_or(f64::NAN))
    }

    /// Sign of `p(√q)` for `q ≥ 0`, exactly.
    pub fn sign_at_sqrt(&self, q: &BigRational) -> Ordering {
        // p(√q) = E(q) + √q O(q)
        let mut even = BigRational::zero();
        let mut odd = BigRational::zero();
        let mut qk = BigRational::one();
        for pair in self.coeffs.chunks(2) {
            even += &pair[0] * &qk;
            if let Some(o) = pair.get(1) {
                odd += o * &qk;
            }
            qk *= q;
        }
        sign_of_a_plus_b_sqrt(&even, &odd, q)
    }

    /// Primitive integer multiple with positive leading coefficient.
    pub fn to_primitive_integer(&self) -> Vec<BigInt> {
        if self.is_zero() {
            return Vec::new();
        }
        let l = self
            .coeffs
            .iter()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let ints: Vec<BigInt> = self
            .coeffs
            .iter()
            .map(|c| (c * BigRational::from_integer(l.clone())).to_integer())
            .collect();
        let content = ints.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c));
        let sign = if ints.last().is_some_and(|c| c.is_negative()) {
            -BigInt::one()
        } else {
            BigInt::one()
        };
        ints.into_iter().map(|c| c / &content * &sign).collect()
    }
}

fn sign_of_a_plus_b_sqrt(a: &BigRational, b: &BigRational, q: &BigRational) -> Ordering {
    let sa = a.cmp(&BigRational::zero());
    let sb = if q.is_zero() {
        Ordering::Equal
    } else {
        b.cmp(&BigRational::zero())
    };
    match (sa, sb) {
        (Ordering::Equal, s) | (s, Ordering::Equal) => s,
        (x, y) if x == y => x,
        (sa, _) => {
            // opposite signs: compare a² with b² q
            match (a * a).cmp(&(b * b * q)) {
                Ordering::Greater => sa,
                Ordering::Less => sa.reverse(),
                Ordering::Equal => Ordering::Equal,
            }
        }
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let a = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            first = false;
            let unit = a.is_one() && k > 0;
            if !unit {
                write!(f, "{a}")?;
            }
            match k {
                0 => {}
                1 => write!(f, "λ")?,
                _ => write!(f, "λ^{k}")?,
            }
        }
        Ok(())
    }
}

/// Quotient of integer polynomials in `λ`, reduced: coprime numerator and
/// denominator, joint integer content 1, positive leading denominator
/// coefficient.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalFunction {
    num: Vec<BigInt>,
    den: Vec<BigInt>,
}

impl RationalFunction {
    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidInput("rational function with zero denominator".into()));
        }
        Ok(Self::reduce(num, den))
    }

    fn reduce(num: Poly, den: Poly) -> Self {
        if num.is_zero() {
            return Self {
                num: Vec::new(),
                den: vec![BigInt::one()],
            };
        }
        let g = num.gcd(&den);
        let num = num.div_rem(&g).0;
        let den = den.div_rem(&g).0;
        let l = num
            .coeffs
            .iter()
            .chain(den.coeffs.iter())
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let lq = BigRational::from_integer(l);
        let to_int = |p: &Poly| -> Vec<BigInt> {
            p.coeffs.iter().map(|c| (c * &lq).to_integer()).collect()
        };
        let (mut n, mut d) = (to_int(&num), to_int(&den));
        let content = n
            .iter()
            .chain(d.iter())
            .fold(BigInt::zero(), |acc, c| acc.gcd(c));
        let sign = if d.last().is_some_and(|c| c.is_negative()) {
            -BigInt::one()
        } else {
            BigInt::one()
        };
        for c in n.iter_mut().chain(d.iter_mut()) {
            *c = &*c / &content * &sign;
        }
        Self { num: n, den: d }
    }

    pub fn from_poly(p: Poly) -> Self {
        Self::reduce(p, Poly::one())
    }

    pub fn constant(c: BigRational) -> Self {
        Self::from_poly(Poly::constant(c))
    }

    pub fn lambda() -> Self {
        Self::from_poly(Poly::x())
    }

    fn int_poly(c: &[BigInt]) -> Poly {
        Poly::new(c.iter().map(|v| BigRational::from_integer(v.clone())).collect())
    }

    pub fn numerator(&self) -> Poly {
        Self::int_poly(&self.num)
    }

    pub fn denominator(&self) -> Poly {
        Self::int_poly(&self.den)
    }

    /// Integer numerator coefficients, ascending.
    pub fn numerator_coeffs(&self) -> &[BigInt] {
        &self.num
    }

    pub fn denominator_coeffs(&self) -> &[BigInt] {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_empty()
    }

    pub fn add(&self, o: &Self) -> Self {
        let (a, b, c, d) = (self.numerator(), self.denominator(), o.numerator(), o.denominator());
        Self::reduce(a.mul(&d).add(&c.mul(&b)), b.mul(&d))
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        Self {
            num: self.num.iter().map(|c| -c).collect(),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self::reduce(
            self.numerator().mul(&o.numerator()),
            self.denominator().mul(&o.denominator()),
        )
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        if o.is_zero() {
            return Err(Error::InvalidInput("division by the zero rational function".into()));
        }
        Ok(Self::reduce(
            self.numerator().mul(&o.denominator()),
            self.denominator().mul(&o.numerator()),
        ))
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.numerator().eval_f64(x) / self.denominator().eval_f64(x)
    }
}

impl fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) / ({})", self.numerator(), self.denominator())
    }
}

/// Element `a + b√3` of `Q(√3)(λ)`.
#[derive(Debug, Clone)]
struct Sqrt3Element {
    a: RationalFunction,
    b: RationalFunction,
}

impl Sqrt3Element {
    fn rational(a: RationalFunction) -> Self {
        Self {
            b: RationalFunction::constant(BigRational::zero()),
            a,
        }
    }

    fn mul(&self, o: &Self) -> Self {
        let three = RationalFunction::constant(rat(3));
        Self {
            a: self.a.mul(&o.a).add(&three.mul(&self.b.mul(&o.b))),
            b: self.a.mul(&o.b).add(&self.b.mul(&o.a)),
        }
    }

    fn sub(&self, o: &Self) -> Self {
        Self {
            a: self.a.sub(&o.a),
            b: self.b.sub(&o.b),
        }
    }

    fn add(&self, o: &Self) -> Self {
        Self {
            a: self.a.add(&o.a),
            b: self.b.add(&o.b),
        }
    }

    /// Division via the conjugate of the denominator.
    fn div(&self, o: &Self) -> Result<Self> {
        let conj = Self {
            a: o.a.clone(),
            b: o.b.neg(),
        };
        let three = RationalFunction::constant(rat(3));
        let norm = o.a.mul(&o.a).sub(&three.mul(&o.b.mul(&o.b)));
        let top = self.mul(&conj);
        Ok(Self {
            a: top.a.div(&norm)?,
            b: top.b.div(&norm)?,
        })
    }
}

/// `cot(kπ/g)` as `(a, b)` with value `a + b√3`; `None` for `k = 0`.
fn cot_multiple(g: usize, k: usize) -> Option<(BigRational, BigRational)> {
    let third = BigRational::new(BigInt::from(1), BigInt::from(3));
    let z = BigRational::zero();
    let v = match (g, k) {
        (_, 0) => return None,
        (2, 1) | (4, 2) | (6, 3) => (z.clone(), z),
        (3, 1) | (6, 2) => (z, third),
        (3, 2) | (6, 4) => (z, -third),
        (4, 1) => (rat(1), z),
        (4, 3) => (rat(-1), z),
        (6, 1) => (z, rat(1)),
        (6, 5) => (z, rat(-1)),
        _ => unreachable!("g and k validated by caller"),
    };
    Some(v)
}

/// One distinct principal curvature, or a conjugate pair sharing a multiplicity.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SpectrumEntry<T> {
    Single { value: T, multiplicity: u64 },
    /// `e1 = λ_a + λ_b`, `e2 = λ_a λ_b`; both curvatures carry `multiplicity`.
    Pair { e1: T, e2: T, multiplicity: u64 },
}

/// Arithmetic needed by trace computations; implemented by `f64` and
/// [`RationalFunction`].
pub trait SpectrumScalar: Clone {
    fn from_rational(q: &BigRational) -> Self;
    fn plus(&self, o: &Self) -> Self;
    fn minus(&self, o: &Self) -> Self;
    fn times(&self, o: &Self) -> Self;

    fn from_int(n: i64) -> Self {
        Self::from_rational(&rat(n))
    }
}

impl SpectrumScalar for f64 {
    fn from_rational(q: &BigRational) -> Self {
        q.to_f64().unwrap_or(f64::NAN)
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
}

impl SpectrumScalar for RationalFunction {
    fn from_rational(q: &BigRational) -> Self {
        RationalFunction::constant(q.clone())
    }
    fn plus(&self, o: &Self) -> Self {
        self.add(o)
    }
    fn minus(&self, o: &Self) -> Self {
        self.sub(o)
    }
    fn times(&self, o: &Self) -> Self {
        self.mul(o)
    }
}

impl Serialize for RationalFunction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Principal curvatures with multiplicities in a space form of curvature `c`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrincipalSpectrum<T> {
    pub entries: Vec<SpectrumEntry<T>>,
    #[serde(serialize_with = "serialize_rational")]
    pub c: BigRational,
}

fn serialize_rational<S: Serializer>(q: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&q.to_string())
}

impl<T: SpectrumScalar> PrincipalSpectrum<T> {
    pub fn new(entries: Vec<SpectrumEntry<T>>, c: BigRational) -> Result<Self> {
        for e in &entries {
            let m = match e {
                SpectrumEntry::Single { multiplicity, .. } | SpectrumEntry::Pair { multiplicity, .. } => *multiplicity,
            };
            if m == 0 {
                return Err(Error::InvalidInput("multiplicities must be positive".into()));
            }
        }
        Ok(Self { entries, c })
    }

    /// Spectrum of single curvatures `(λ_k, m_k)`.
    pub fn from_values(values: &[(T, u64)], c: BigRational) -> Result<Self> {
        Self::new(
            values
                .iter()
                .map(|(v, m)| SpectrumEntry::Single {
                    value: v.clone(),
                    multiplicity: *m,
                })
                .collect(),
            c,
        )
    }

    /// Hypersurface dimension `m = Σ m_k`.
    pub fn dimension(&self) -> u64 {
        self.entries
            .iter()
            .map(|e| match e {
                SpectrumEntry::Single { multiplicity, .. } => *multiplicity,
                SpectrumEntry::Pair { multiplicity, .. } => 2 * multiplicity,
            })
            .sum()
    }

    /// Number of distinct curvatures `g`.
    pub fn distinct(&self) -> usize {
        self.entries
            .iter()
            .map(|e| match e {
                SpectrumEntry::Single { .. } => 1,
                SpectrumEntry::Pair { .. } => 2,
            })
            .sum()
    }

    /// Per-entry power sums `(p1, p2, p3)` weighted by multiplicity.
    fn entry_power_sums(e: &SpectrumEntry<T>) -> [T; 3] {
        match e {
            SpectrumEntry::Single { value, multiplicity } => {
                let k = T::from_int(*multiplicity as i64);
                let v2 = value.times(value);
                let v3 = v2.times(value);
                [k.times(value), k.times(&v2), k.times(&v3)]
            }
            SpectrumEntry::Pair { e1, e2, multiplicity } => {
                let k = T::from_int(*multiplicity as i64);
                let e1sq = e1.times(e1);
                let p2 = e1sq.minus(&T::from_int(2).times(e2));
                let p3 = e1sq.times(e1).minus(&T::from_int(3).times(&e1.times(e2)));
                [k.times(e1), k.times(&p2), k.times(&p3)]
            }
        }
    }
}

/// `(tr A, tr A², tr A³)`.
pub fn trace_powers<T: SpectrumScalar>(s: &PrincipalSpectrum<T>) -> (T, T, T) {
    let mut acc = [T::from_int(0), T::from_int(0), T::from_int(0)];
    for e in &s.entries {
        let p = PrincipalSpectrum::entry_power_sums(e);
        for r in 0..3 {
            acc[r] = acc[r].plus(&p[r]);
        }
    }
    let [a, b, c] = acc;
    (a, b, c)
}

/// Map-type condition on an isoparametric hypersurface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ConditionKind {
    CF,
    Q1,
    Q2,
    WC,
}

impl ConditionKind {
    pub const ALL: [ConditionKind; 4] = [Self::CF, Self::Q1, Self::Q2, Self::WC];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::CF => "CF",
            Self::Q1 => "Q1",
            Self::Q2 => "Q2",
            Self::WC => "WC",
        }
    }
}

impl std::str::FromStr for ConditionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "CF" => Ok(Self::CF),
            "Q1" => Ok(Self::Q1),
            "Q2" => Ok(Self::Q2),
            "WC" => Ok(Self::WC),
            _ => Err(Error::InvalidInput(format!(
                "unknown condition kind `{s}` (expected CF, Q1, Q2 or WC)"
            ))),
        }
    }
}

impl fmt::Display for ConditionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Scalar whose vanishing is the condition:
///
/// * CF: `c(m-1) trA - trA trA² + trA³`
/// * Q1: `c trA - trA³`
/// * Q2: `(m c - trA²) trA`
/// * WC: `trA trA² - m trA³`
pub fn condition_value<T: SpectrumScalar>(s: &PrincipalSpectrum<T>, kind: ConditionKind) -> T {
    let (t1, t2, t3) = trace_powers(s);
    let m = s.dimension() as i64;
    let c = T::from_rational(&s.c);
    match kind {
        ConditionKind::CF => c
            .times(&T::from_int(m - 1))
            .times(&t1)
            .minus(&t1.times(&t2))
            .plus(&t3),
        ConditionKind::Q1 => c.times(&t1).minus(&t3),
        ConditionKind::Q2 => T::from_int(m).times(&c).minus(&t2).times(&t1),
        ConditionKind::WC => t1.times(&t2).minus(&T::from_int(m).times(&t3)),
    }
}

/// CF scalar assembled from the Ricci operator `Q = c(m-1) id + trA·A - A²`:
/// the normal coefficient `2c(m-1) trA - tr(QA)`. Must equal the CF value.
pub fn cf_value_gauss_route<T: SpectrumScalar>(s: &PrincipalSpectrum<T>) -> T {
    let (t1, _, _) = trace_powers(s);
    let m = s.dimension() as i64;
    let cm = T::from_rational(&s.c).times(&T::from_int(m - 1));
    let mut tr_qa = T::from_int(0);
    for e in &s.entries {
        let [p1, p2, p3] = PrincipalSpectrum::entry_power_sums(e);
        // Σ over the entry of q_k λ_k, q_k = c(m-1) + trA λ_k - λ_k²
        tr_qa = tr_qa.plus(&cm.times(&p1).plus(&t1.times(&p2)).minus(&p3));
    }
    T::from_int(2).times(&cm).times(&t1).minus(&tr_qa)
}

/// `1 ≤ g`, `g ∈ {1,2,3,4,6}`.
pub const SPHERICAL_G: [usize; 5] = [1, 2, 3, 4, 6];

fn validate_multiplicities(g: usize, mults: &[u64]) -> Result<()> {
    if !SPHERICAL_G.contains(&g) {
        return Err(Error::InvalidInput(format!(
            "g = {g} is not a possible number of distinct principal curvatures in a sphere"
        )));
    }
    if mults.len() != g {
        return Err(Error::InvalidInput(format!(
            "expected {g} multiplicities, got {}",
            mults.len()
        )));
    }
    if mults.contains(&0) {
        return Err(Error::InvalidInput("multiplicities must be positive".into()));
    }
    for k in 0..g {
        if mults[k] != mults[(k + 2) % g] {
            return Err(Error::InvalidInput(format!(
                "multiplicity pattern {mults:?} breaks m_k = m_(k+2 mod g)"
            )));
        }
    }
    Ok(())
}

/// Exact spectrum of the family `λ_k = cot(t + kπ/g)`, `λ = cot t`, in the
/// unit sphere (`c = 1`). Conjugate `√3`-pairs are merged into
/// [`SpectrumEntry::Pair`].
pub fn spherical_family_spectrum(
    g: usize,
    mults: &[u64],
) -> Result<PrincipalSpectrum<RationalFunction>> {
    validate_multiplicities(g, mults)?;
    let lam = Sqrt3Element::rational(RationalFunction::lambda());
    let one = Sqrt3Element::rational(RationalFunction::constant(rat(1)));
    let values: Vec<Sqrt3Element> = (0..g)
        .map(|k| match cot_multiple(g, k) {
            None => Ok(lam.clone()),
            Some((a, b)) => {
                let ck = Sqrt3Element {
                    a: RationalFunction::constant(a),
                    b: RationalFunction::constant(b),
                };
                // cot(t + s) = (cot t cot s - 1) / (cot t + cot s)
                lam.mul(&ck).sub(&one).div(&lam.add(&ck))
            }
        })
        .collect::<Result<_>>()?;

    let mut used = vec![false; g];
    let mut entries = Vec::new();
    for k in 0..g {
        if used[k] {
            continue;
        }
        used[k] = true;
        if values[k].b.is_zero() {
            entries.push(SpectrumEntry::Single {
                value: values[k].a.clone(),
                multiplicity: mults[k],
            });
            continue;
        }
        let partner = (k + 1..g)
            .find(|&j| !used[j] && values[j].a == values[k].a && values[j].b == values[k].b.neg())
            .ok_or_else(|| {
                Error::InvalidInput(format!("curvature {k} has no conjugate partner"))
            })?;
        if mults[partner] != mults[k] {
            return Err(Error::InvalidInput(format!(
                "conjugate curvatures {k} and {partner} need equal multiplicities"
            )));
        }
        used[partner] = true;
        let (a, b) = (&values[k].a, &values[k].b);
        let three = RationalFunction::constant(rat(3));
        entries.push(SpectrumEntry::Pair {
            e1: a.add(a),
            e2: a.mul(a).sub(&three.mul(&b.mul(b))),
            multiplicity: mults[k],
        });
    }
    PrincipalSpectrum::new(entries, rat(1))
}

/// Numeric spectrum `cot(t + kπ/g)` computed directly in floating point.
pub fn numeric_family_spectrum(g: usize, mults: &[u64], t: f64) -> Result<PrincipalSpectrum<f64>> {
    validate_multiplicities(g, mults)?;
    let values: Vec<(f64, u64)> = (0..g)
        .map(|k| {
            let s = t + k as f64 * std::f64::consts::PI / g as f64;
            (s.cos() / s.sin(), mults[k])
        })
        .collect();
    PrincipalSpectrum::from_values(&values, rat(1))
}

/// Admissible `λ = cot t` interval for the family with `g` curvatures.
pub fn family_interval(g: usize) -> Result<(Bound, Bound)> {
    let lo = match g {
        1 | 2 => Bound::Rational(BigRational::zero()),
        3 => Bound::Sqrt(BigRational::new(1.into(), 3.into())),
        4 => Bound::Rational(rat(1)),
        6 => Bound::Sqrt(rat(3)),
        _ => {
            return Err(Error::InvalidInput(format!("no family interval for g = {g}")));
        }
    };
    Ok((lo, Bound::Infinity))
}

fn serialize_ints<S: Serializer>(c: &[BigInt], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(c.len()))?;
    for v in c {
        seq.serialize_element(&v.to_string())?;
    }
    seq.end()
}

/// Canonical integer polynomial: content 1, positive leading coefficient,
/// the factor `λ^k` removed and counted in `lambda_power`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConditionPolynomial {
    pub family: String,
    pub kind: ConditionKind,
    /// Highest degree first.
    #[serde(serialize_with = "serialize_ints")]
    pub coefficients: Vec<BigInt>,
    pub lambda_power: usize,
    pub identically_zero: bool,
}

impl ConditionPolynomial {
    /// Canonicalizes an arbitrary rational polynomial.
    pub fn canonical(family: impl Into<String>, kind: ConditionKind, p: &Poly) -> Self {
        let family = family.into();
        if p.is_zero() {
            return Self {
                family,
                kind,
                coefficients: Vec::new(),
                lambda_power: 0,
                identically_zero: true,
            };
        }
        let k = p.coeffs.iter().take_while(|c| c.is_zero()).count();
        let stripped = Poly::new(p.coeffs[k..].to_vec());
        let mut ints = stripped.to_primitive_integer();
        ints.reverse();
        Self {
            family,
            kind,
            coefficients: ints,
            lambda_power: k,
            identically_zero: false,
        }
    }

    /// Canonical form of a polynomial given by integer coefficients, highest first.
    pub fn from_descending(family: impl Into<String>, kind: ConditionKind, c: &[i64]) -> Self {
        Self::canonical(family, kind, &Poly::from_i64_descending(c))
    }

    /// The canonical polynomial with the `λ^k` factor left out.
    pub fn poly(&self) -> Poly {
        Poly::from_int_descending(&self.coefficients)
    }

    /// Same polynomial up to scalar and `λ`-power.
    pub fn same_up_to_normalization(&self, o: &Self) -> bool {
        self.identically_zero == o.identically_zero && self.coefficients == o.coefficients
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    /// Re-canonicalization, restoring the `λ` power.
    pub fn recanonicalized(&self) -> Self {
        let full = self.poly().mul(&Poly::x().pow(self.lambda_power as u32));
        Self::canonical(self.family.clone(), self.kind, &full)
    }

    pub fn display_poly(&self) -> String {
        self.poly().to_string()
    }
}

/// Numerator of the exact condition value, canonicalized.
pub fn condition_polynomial(
    g: usize,
    mults: &[u64],
    kind: ConditionKind,
    c: &BigRational,
) -> Result<ConditionPolynomial> {
    let mut s = spherical_family_spectrum(g, mults)?;
    s.c = c.clone();
    let v = condition_value(&s, kind);
    let family = format!(
        "g{g}[{}]",
        mults.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(",")
    );
    Ok(ConditionPolynomial::canonical(family, kind, &v.numerator()))
}

/// Endpoint of a real interval: rational, `√q`, or `+∞`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Bound {
    Rational(BigRational),
    Sqrt(BigRational),
    Infinity,
}

impl Bound {
    pub fn to_f64(&self) -> f64 {
        match self {
            Bound::Rational(r) => r.to_f64().unwrap_or(f64::NAN),
            Bound::Sqrt(q) => q.to_f64().unwrap_or(f64::NAN).sqrt(),
            Bound::Infinity => f64::INFINITY,
        }
    }

    fn cmp_rational(&self, r: &BigRational) -> Ordering {
        match self {
            Bound::Rational(a) => a.cmp(r),
            Bound::Sqrt(q) => {
                if r.is_negative() {
                    Ordering::Greater
                } else {
                    q.cmp(&(r * r))
                }
            }
            Bound::Infinity => Ordering::Greater,
        }
    }

    /// Exact comparison.
    pub fn compare(&self, o: &Bound) -> Ordering {
        match (self, o) {
            (Bound::Infinity, Bound::Infinity) => Ordering::Equal,
            (Bound::Infinity, _) => Ordering::Greater,
            (_, Bound::Infinity) => Ordering::Less,
            (_, Bound::Rational(r)) => self.cmp_rational(r),
            (Bound::Rational(r), _) => o.cmp_rational(r).reverse(),
            (Bound::Sqrt(a), Bound::Sqrt(b)) => a.cmp(b),
        }
    }

    fn sign_of(&self, p: &Poly) -> Ordering {
        match self {
            Bound::Rational(r) => p.eval(r).cmp(&BigRational::zero()),
            Bound::Sqrt(q) => p.sign_at_sqrt(q),
            Bound::Infinity => p.leading().cmp(&BigRational::zero()),
        }
    }

    /// Rational strictly above `√q` and within `tol` of it.
    fn rational_above(&self, tol: &BigRational) -> BigRational {
        match self {
            Bound::Rational(r) => r.clone(),
            Bound::Sqrt(q) => {
                let guess = q.to_f64().unwrap_or(1.0).sqrt() + 1.0;
                let mut x = BigRational::from_float(guess).unwrap_or_else(|| rat(1));
                if (&x * &x) < *q {
                    x = q + rat(1);
                }
                // Newton from above stays above the root.
                let two = rat(2);
                for _ in 0..64 {
                    let next = (&x + q / &x) / &two;
                    let next = round_up(&next);
                    let err = &next - q / &next;
                    x = next;
                    if err <= *tol {
                        break;
                    }
                }
                x
            }
            Bound::Infinity => unreachable!("infinite bound has no rational approximation"),
        }
    }
}

/// Rounds up to a dyadic rational with a 2^-200 grid, keeping the value above.
fn round_up(x: &BigRational) -> BigRational {
    let scale: BigInt = BigInt::one() << 200usize;
    let n = (x * BigRational::from_integer(scale.clone())).ceil().to_integer();
    BigRational::new(n, scale)
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Rational(r) => write!(f, "{r}"),
            Bound::Sqrt(q) => write!(f, "sqrt({q})"),
            Bound::Infinity => write!(f, "inf"),
        }
    }
}

fn sturm_sequence(p: &Poly) -> Vec<Poly> {
    let mut seq = vec![p.clone(), p.derivative()];
    loop {
        let n = seq.len();
        if seq[n - 1].is_zero() {
            seq.pop();
            break;
        }
        let r = seq[n - 2].div_rem(&seq[n - 1]).1.neg();
        if r.is_zero() {
            break;
        }
        seq.push(r);
    }
    seq
}

fn sign_variations(seq: &[Poly], at: &Bound) -> usize {
    let signs: Vec<Ordering> = seq
        .iter()
        .map(|p| at.sign_of(p))
        .filter(|s| *s != Ordering::Equal)
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Isolating interval for one real root.
#[derive(Debug, Clone, Serialize)]
pub struct RootEnclosure {
    #[serde(serialize_with = "serialize_rational")]
    pub lo: BigRational,
    #[serde(serialize_with = "serialize_rational")]
    pub hi: BigRational,
    pub lo_f64: f64,
    pub hi_f64: f64,
    /// True when the root is the rational `lo = hi`.
    pub exact: bool,
}

impl RootEnclosure {
    pub fn width(&self) -> f64 {
        (&self.hi - &self.lo).to_f64().unwrap_or(f64::NAN)
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo_f64 + self.hi_f64)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo_f64 <= x && x <= self.hi_f64
    }

    fn new(lo: BigRational, hi: BigRational) -> Self {
        Self {
            lo_f64: lo.to_f64().unwrap_or(f64::NAN),
            hi_f64: hi.to_f64().unwrap_or(f64::NAN),
            exact: lo == hi,
            lo,
            hi,
        }
    }
}

/// Roots of a condition polynomial inside an open interval.
#[derive(Debug, Clone, Serialize)]
pub struct RootIsolation {
    pub roots: Vec<RootEnclosure>,
    /// Endpoints of the interval that are themselves roots.
    pub endpoint_roots: Vec<String>,
}

/// Enclosure width target.
pub const ROOT_WIDTH: f64 = 1e-12;

/// All distinct real roots of `poly` in the open interval `(lo, hi)`, each
/// enclosed to width at most [`ROOT_WIDTH`]. Roots at the endpoints are
/// excluded and listed separately.
pub fn isolate_roots(poly: &Poly, lo: &Bound, hi: &Bound) -> Result<RootIsolation> {
    if poly.is_zero() {
        return Err(Error::InvalidInput("condition is identically satisfied".into()));
    }
    if lo.compare(hi) != Ordering::Less {
        return Err(Error::InvalidInput(format!("empty interval ({lo}, {hi})")));
    }
    let mut p = poly.square_free();
    let mut endpoint_roots = Vec::new();
    for b in [lo, hi] {
        let factor = match b {
            Bound::Rational(r) if p.eval(r).is_zero() => Some(Poly::new(vec![-r.clone(), rat(1)])),
            Bound::Sqrt(q) if p.sign_at_sqrt(q) == Ordering::Equal => Some(match rational_sqrt(q) {
                Some(r) => Poly::new(vec![-r, rat(1)]),
                // irrational √q: its minimal polynomial divides p
                None => Poly::new(vec![-q.clone(), rat(0), rat(1)]),
            }),
            _ => None,
        };
        if let Some(f) = factor {
            endpoint_roots.push(b.to_string());
            p = p.div_rem(&f).0;
        }
    }
    if p.degree().unwrap_or(0) == 0 {
        return Ok(RootIsolation {
            roots: Vec::new(),
            endpoint_roots,
        });
    }

    // Cauchy bound caps the search at a rational upper end.
    let lead = p.leading().abs();
    let cauchy = rat(1)
        + p.coeffs()
            .iter()
            .map(|c| c.abs() / &lead)
            .max()
            .unwrap_or_else(BigRational::zero);
    let hi = if hi.compare(&Bound::Rational(cauchy.clone())) == Ordering::Greater {
        Bound::Rational(cauchy)
    } else {
        hi.clone()
    };
    let seq = sturm_sequence(&p);
    let tol = BigRational::from_float(ROOT_WIDTH).expect("finite");
    let mut roots = isolate_with(&p, &seq, lo.clone(), hi, &tol);
    roots.sort_by(|x, y| x.lo.cmp(&y.lo));
    Ok(RootIsolation {
        roots,
        endpoint_roots,
    })
}

fn rational_sqrt(q: &BigRational) -> Option<BigRational> {
    let n = q.numer().sqrt();
    let d = q.denom().sqrt();
    (&n * &n == *q.numer() && &d * &d == *q.denom()).then(|| BigRational::new(n, d))
}

fn isolate_with(p: &Poly, seq: &[Poly], a: Bound, b: Bound, tol: &BigRational) -> Vec<RootEnclosure> {
    let mut out = Vec::new();
    let mut stack = vec![(a, b)];
    while let Some((a, b)) = stack.pop() {
        let count = sign_variations(seq, &a) - sign_variations(seq, &b);
        if count == 0 {
            continue;
        }
        if count == 1 {
            out.push(refine(p, &a, &b, tol));
            continue;
        }
        let mid = split_point(p, &a, &b);
        if p.eval(&mid).is_zero() {
            out.push(RootEnclosure::new(mid.clone(), mid.clone()));
            let f = Poly::new(vec![-mid.clone(), rat(1)]);
            let rest = p.div_rem(&f).0;
            let rest_seq = sturm_sequence(&rest);
            out.extend(isolate_with(&rest, &rest_seq, a, Bound::Rational(mid.clone()), tol));
            out.extend(isolate_with(&rest, &rest_seq, Bound::Rational(mid), b, tol));
            continue;
        }
        stack.push((a, Bound::Rational(mid.clone())));
        stack.push((Bound::Rational(mid), b));
    }
    out
}

/// Rational point strictly inside `(a, b)`; `b` is finite.
fn split_point(_p: &Poly, a: &Bound, b: &Bound) -> BigRational {
    let bq = match b {
        Bound::Rational(r) => r.clone(),
        Bound::Sqrt(q) => {
            // largest convenient rational below √q: from the f64 value, checked
            let mut x = BigRational::from_float(q.to_f64().unwrap_or(0.0).sqrt() * (1.0 - 1e-12))
                .unwrap_or_else(BigRational::zero);
            while b.cmp_rational(&x) != Ordering::Greater {
                x = &x / rat(2);
            }
            x
        }
        Bound::Infinity => unreachable!("upper bound replaced by a rational"),
    };
    let width = (&bq - BigRational::from_float(a.to_f64()).unwrap_or_else(BigRational::zero)).abs();
    let tol = &width / rat(1 << 20);
    let aq = a.rational_above(&tol);
    let mid = (&aq + &bq) / rat(2);
    debug_assert!(a.cmp_rational(&mid) == Ordering::Less);
    mid
}

/// Bisection on the sign change of a square-free `p` with one root in `(a, b)`.
fn refine(p: &Poly, a: &Bound, b: &Bound, tol: &BigRational) -> RootEnclosure {
    let mut lo = a.clone();
    let mut hi = b.clone();
    let s_hi = hi.sign_of(p);
    loop {
        if let (Bound::Rational(l), Bound::Rational(h)) = (&lo, &hi) {
            if h - l <= *tol {
                return RootEnclosure::new(l.clone(), h.clone());
            }
        }
        let mid = split_point(p, &lo, &hi);
        let s = p.eval(&mid).cmp(&BigRational::zero());
        if s == Ordering::Equal {
            return RootEnclosure::new(mid.clone(), mid);
        }
        if s == s_hi {
            hi = Bound::Rational(mid);
        } else {
            lo = Bound::Rational(mid);
        }
    }
}

/// Positive roots of a canonical condition polynomial in the family's
/// `λ`-interval. The zero polynomial is reported via `identically_zero`.
pub fn isolate_positive_roots(
    poly: &ConditionPolynomial,
    lo: &Bound,
    hi: &Bound,
) -> Result<RootIsolation> {
    if poly.identically_zero {
        return Err(Error::InvalidInput(format!(
            "{} condition for {} is identically satisfied",
            poly.kind, poly.family
        )));
    }
    let mut iso = isolate_roots(&poly.poly(), lo, hi)?;
    if poly.lambda_power > 0 && matches!(lo, Bound::Rational(r) if r.is_zero()) {
        iso.endpoint_roots.push("0".into());
    }
    Ok(iso)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cp(c: &[i64]) -> ConditionPolynomial {
        ConditionPolynomial::from_descending("test", ConditionKind::CF, c)
    }

    fn one_c() -> BigRational {
        rat(1)
    }

    #[test]
    fn trace_powers_trivial_cases() {
        let z = PrincipalSpectrum::from_values(&[(0.0, 3)], rat(1)).unwrap();
        assert_eq!(trace_powers(&z), (0.0, 0.0, 0.0));
        let u = PrincipalSpectrum::from_values(&[(2.0, 3)], rat(1)).unwrap();
        assert_eq!(trace_powers(&u), (6.0, 12.0, 24.0));
        let cl = PrincipalSpectrum::from_values(&[(1.0, 1), (-1.0, 1)], rat(1)).unwrap();
        assert_eq!(trace_powers(&cl), (0.0, 2.0, 0.0));
    }

    #[test]
    fn g1_cf_value_is_m_m1_lambda_one_minus_lambda_sq() {
        for m in 1..=6u64 {
            let s = spherical_family_spectrum(1, &[m]).unwrap();
            let v = condition_value(&s, ConditionKind::CF);
            let m = m as i64;
            let expect = Poly::from_i64_ascending(&[0, m * (m - 1), 0, -m * (m - 1)]);
            assert_eq!(v.numerator(), expect.scale(&v.denominator().leading().recip()));
            assert_eq!(v.denominator().degree(), Some(0));
        }
    }

    #[test]
    fn euclidean_and_hyperbolic_spectra() {
        for m in 2..=7u64 {
            let r = 1.7;
            let cyl = PrincipalSpectrum::from_values(&[(1.0 / r, 1), (0.0, m - 1)], rat(0)).unwrap();
            assert!(condition_value(&cyl, ConditionKind::CF).abs() < 1e-15);
            let umb = PrincipalSpectrum::from_values(&[(1.0 / r, m)], rat(0)).unwrap();
            assert!(condition_value(&umb, ConditionKind::CF).abs() > 1e-3);
            let horo = PrincipalSpectrum::from_values(&[(1.0, m)], rat(-1)).unwrap();
            let mf = m as f64;
            assert_eq!(condition_value(&horo, ConditionKind::CF), -2.0 * mf * (mf - 1.0));
        }
    }

    #[test]
    fn g2_lambda2_is_minus_inverse() {
        let s = spherical_family_spectrum(2, &[1, 1]).unwrap();
        match &s.entries[1] {
            SpectrumEntry::Single { value, .. } => {
                let expect = RationalFunction::new(Poly::constant(rat(-1)), Poly::x()).unwrap();
                assert_eq!(*value, expect);
            }
            _ => panic!("rational curvature expected"),
        }
    }

    #[test]
    fn g3_pair_symmetric_functions() {
        let s = spherical_family_spectrum(3, &[1, 1, 1]).unwrap();
        let SpectrumEntry::Pair { e1, e2, .. } = &s.entries[1] else {
            panic!("pair expected")
        };
        let den = Poly::from_i64_ascending(&[-1, 0, 3]);
        assert_eq!(*e1, RationalFunction::new(Poly::from_i64_ascending(&[0, -8]), den.clone()).unwrap());
        assert_eq!(*e2, RationalFunction::new(Poly::from_i64_ascending(&[3, 0, -1]), den).unwrap());
    }

    #[test]
    fn g4_pair_values() {
        let s = spherical_family_spectrum(4, &[1, 1, 1, 1]).unwrap();
        let vals: Vec<_> = s
            .entries
            .iter()
            .map(|e| match e {
                SpectrumEntry::Single { value, .. } => value.clone(),
                _ => panic!("g = 4 is rational"),
            })
            .collect();
        let e1 = vals[1].add(&vals[3]);
        let e2 = vals[1].mul(&vals[3]);
        let expect_e1 =
            RationalFunction::new(Poly::from_i64_ascending(&[0, -4]), Poly::from_i64_ascending(&[-1, 0, 1])).unwrap();
        assert_eq!(e1, expect_e1);
        assert_eq!(e2, RationalFunction::constant(rat(-1)));
    }

    #[test]
    fn g6_structure() {
        let s = spherical_family_spectrum(6, &[1, 2, 1, 2, 1, 2]).unwrap();
        assert_eq!(s.distinct(), 6);
        assert_eq!(s.dimension(), 9);
        let minus_inv = RationalFunction::new(Poly::constant(rat(-1)), Poly::x()).unwrap();
        assert!(s.entries.iter().any(|e| matches!(e, SpectrumEntry::Single { value, multiplicity: 2 } if *value == minus_inv)));
        assert_eq!(s.entries.iter().filter(|e| matches!(e, SpectrumEntry::Pair { .. })).count(), 2);
    }

    #[test]
    fn bad_multiplicities_rejected() {
        assert!(spherical_family_spectrum(4, &[1, 2, 3, 2]).is_err());
        assert!(spherical_family_spectrum(3, &[1, 2, 1]).is_err());
        assert!(spherical_family_spectrum(5, &[1; 5]).is_err());
        assert!(spherical_family_spectrum(2, &[1]).is_err());
        assert!(spherical_family_spectrum(2, &[0, 1]).is_err());
    }

    #[test]
    fn exact_and_numeric_paths_agree() {
        let cases: [(usize, Vec<u64>); 7] = [
            (1, vec![3]),
            (2, vec![2, 3]),
            (3, vec![2, 2, 2]),
            (4, vec![4, 5, 4, 5]),
            (4, vec![1, 3, 1, 3]),
            (6, vec![1, 1, 1, 1, 1, 1]),
            (6, vec![2, 2, 2, 2, 2, 2]),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (g, mults) in cases {
            let exact = spherical_family_spectrum(g, &mults).unwrap();
            let vals: Vec<_> = ConditionKind::ALL
                .iter()
                .map(|&k| condition_value(&exact, k))
                .collect();
            let top = std::f64::consts::PI / g as f64;
            for _ in 0..20 {
                let t = rng.random_range(0.05 * top..0.95 * top);
                let lam = t.cos() / t.sin();
                let num = numeric_family_spectrum(g, &mults, t).unwrap();
                for (i, &k) in ConditionKind::ALL.iter().enumerate() {
                    let a = vals[i].eval_f64(lam);
                    let b = condition_value(&num, k);
                    let scale = a.abs().max(b.abs()).max(1.0);
                    assert!((a - b).abs() <= 1e-10 * scale, "g={g} {k}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn gauss_route_matches_cf() {
        for (g, mults) in [(3usize, vec![4u64, 4, 4]), (4, vec![2, 5, 2, 5]), (6, vec![2; 6])] {
            let s = spherical_family_spectrum(g, &mults).unwrap();
            assert_eq!(cf_value_gauss_route(&s), condition_value(&s, ConditionKind::CF));
        }
    }

    #[test]
    fn canonicalization_idempotent_and_scale_free() {
        let p = cp(&[-6, 4, 0, 10, 0, 0]);
        assert_eq!(p.coefficients, vec![BigInt::from(3), BigInt::from(-2), BigInt::from(0), BigInt::from(-5)]);
        assert_eq!(p.lambda_power, 2);
        assert_eq!(p.recanonicalized(), p);
        let q = ConditionPolynomial::canonical("test", ConditionKind::CF, &p.poly().scale(&BigRational::new(7.into(), (-3).into())));
        assert!(q.same_up_to_normalization(&p));
        assert!(ConditionPolynomial::canonical("z", ConditionKind::CF, &Poly::zero()).identically_zero);
    }

    #[test]
    fn g2_matches_closed_form() {
        for m in 2..=6i64 {
            for p in 1..m {
                let d = condition_polynomial(2, &[p as u64, (m - p) as u64], ConditionKind::CF, &one_c()).unwrap();
                let q = m - p;
                let listed = cp(&[p * (p - 1), 0, -p * (2 * m - p - 1), 0, q * (m + p - 1), 0, -q * (q - 1)]);
                assert!(d.same_up_to_normalization(&listed), "p={p} m={m}");
            }
        }
        let d = condition_polynomial(2, &[1, 1], ConditionKind::CF, &one_c()).unwrap();
        let (lo, hi) = family_interval(2).unwrap();
        let iso = isolate_positive_roots(&d, &lo, &hi).unwrap();
        assert_eq!(iso.roots.len(), 1);
        assert!(iso.roots[0].contains(1.0));
    }

    #[test]
    fn g4_m18_polynomial() {
        let d = condition_polynomial(4, &[4, 5, 4, 5], ConditionKind::CF, &one_c()).unwrap();
        let listed = cp(&[3, 0, -40, 0, 223, 0, -692, 0, 223, 0, -40, 0, 3]);
        assert!(d.same_up_to_normalization(&listed));
    }

    #[test]
    fn known_roots() {
        let check = |g: usize, mults: &[u64], expect: f64| {
            let d = condition_polynomial(g, mults, ConditionKind::CF, &one_c()).unwrap();
            let (lo, hi) = family_interval(g).unwrap();
            let iso = isolate_positive_roots(&d, &lo, &hi).unwrap();
            assert_eq!(iso.roots.len(), 1, "g={g} {mults:?}: {:?}", iso.roots);
            assert!(iso.roots[0].width() <= ROOT_WIDTH);
            assert!(iso.roots[0].contains(expect), "{:?} vs {expect}", iso.roots[0]);
        };
        check(4, &[2, 2, 2, 2], 1.0 + 2f64.sqrt());
        check(3, &[1, 1, 1], 3f64.sqrt());
        check(6, &[1; 6], 2.0 + 3f64.sqrt());
        check(6, &[2; 6], 2.0 + 3f64.sqrt());
        let g1 = condition_polynomial(1, &[3], ConditionKind::CF, &one_c()).unwrap();
        let iso = isolate_positive_roots(&g1, &Bound::Rational(rat(0)), &Bound::Infinity).unwrap();
        assert_eq!(iso.roots.len(), 1);
        assert!(iso.roots[0].exact);
        assert_eq!(iso.endpoint_roots, vec!["0".to_string()]);
    }

    #[test]
    fn endpoint_roots_are_excluded() {
        // (λ² - 3)(λ - 2): √3 is the lower endpoint
        let p = Poly::from_i64_ascending(&[6, -3, -2, 1]);
        let iso = isolate_roots(&p, &Bound::Sqrt(rat(3)), &Bound::Infinity).unwrap();
        assert_eq!(iso.endpoint_roots, vec!["sqrt(3)".to_string()]);
        assert_eq!(iso.roots.len(), 1);
        assert!(iso.roots[0].contains(2.0));
        // (λ - 1)(λ - 3) on (1, 3): both roots are endpoints
        let p = Poly::from_i64_ascending(&[3, -4, 1]);
        let iso = isolate_roots(&p, &Bound::Rational(rat(1)), &Bound::Rational(rat(3))).unwrap();
        assert!(iso.roots.is_empty());
        assert_eq!(iso.endpoint_roots.len(), 2);
    }

    #[test]
    fn clustered_and_repeated_roots() {
        // (λ - 1)²(λ - 1.0001)(λ² - 2)
        let a = Poly::from_i64_ascending(&[-1, 1]);
        let b = Poly::new(vec![BigRational::new((-10001).into(), 10000.into()), rat(1)]);
        let c = Poly::from_i64_ascending(&[-2, 0, 1]);
        let p = a.mul(&a).mul(&b).mul(&c);
        let iso = isolate_roots(&p, &Bound::Rational(rat(0)), &Bound::Infinity).unwrap();
        let mids: Vec<f64> = iso.roots.iter().map(|r| r.midpoint()).collect();
        assert_eq!(mids.len(), 3, "{mids:?}");
        assert!(iso.roots[0].contains(1.0));
        assert!(iso.roots[1].contains(1.0001));
        assert!(iso.roots[2].contains(2f64.sqrt()));
        assert!(iso.roots.iter().all(|r| r.width() <= ROOT_WIDTH));
    }

    #[test]
    fn bound_comparisons_are_exact() {
        let s3 = Bound::Sqrt(rat(3));
        assert_eq!(s3.compare(&Bound::Rational(BigRational::new(1732.into(), 1000.into()))), Ordering::Greater);
        assert_eq!(s3.compare(&Bound::Rational(BigRational::new(1733.into(), 1000.into()))), Ordering::Less);
        assert_eq!(s3.compare(&Bound::Sqrt(rat(3))), Ordering::Equal);
        assert_eq!(Bound::Rational(rat(-5)).compare(&Bound::Sqrt(rat(0))), Ordering::Less);
        assert_eq!(Bound::Infinity.compare(&s3), Ordering::Greater);
    }

    #[test]
    fn sign_at_sqrt_exact() {
        let p = Poly::from_i64_ascending(&[-3, 0, 1]);
        assert_eq!(p.sign_at_sqrt(&rat(3)), Ordering::Equal);
        let p = Poly::from_i64_ascending(&[-1, 1]);
        assert_eq!(p.sign_at_sqrt(&rat(2)), Ordering::Greater);
        assert_eq!(p.sign_at_sqrt(&BigRational::new(1.into(), 2.into())), Ordering::Less);
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("cf".parse::<ConditionKind>().unwrap(), ConditionKind::CF);
        assert!("xy".parse::<ConditionKind>().is_err());
    }
}
