//! Scalars for central charges.
//!
//! Exact values live in the field `Q(sqrt2, sqrt3)(i)`, which contains every
//! root of unity `exp(pi i k / 12)`. Real scalings `exp(pi y)` with rational `y` are
//! kept symbolically as exponential sums. Anything else (rotations by other angles)
//! falls back to rectangular intervals with outward rounding. Predicates on intervals refuse to guess: an undecidable sign is a
//! [`MstabError::Precision`].

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Euclid, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::MstabError;

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qf(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

fn sign_q(x: &Q) -> i8 {
    if x.is_zero() {
        0
    } else if x.is_positive() {
        1
    } else {
        -1
    }
}

/// `a + b sqrt2`
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Q2 {
    a: Q,
    b: Q,
}

impl Q2 {
    fn add(&self, o: &Q2) -> Q2 {
        Q2 { a: &self.a + &o.a, b: &self.b + &o.b }
    }
    fn sub(&self, o: &Q2) -> Q2 {
        Q2 { a: &self.a - &o.a, b: &self.b - &o.b }
    }
    fn mul(&self, o: &Q2) -> Q2 {
        Q2 {
            a: &self.a * &o.a + q(2) * &self.b * &o.b,
            b: &self.a * &o.b + &self.b * &o.a,
        }
    }
    fn scale(&self, k: &Q) -> Q2 {
        Q2 { a: &self.a * k, b: &self.b * k }
    }
    fn sign(&self) -> i8 {
        let (sa, sb) = (sign_q(&self.a), sign_q(&self.b));
        if sb == 0 {
            return sa;
        }
        if sa == 0 || sa == sb {
            return if sa == 0 { sb } else { sa };
        }
        // opposite signs: compare a^2 with 2 b^2
        let d = &self.a * &self.a - q(2) * &self.b * &self.b;
        sa * sign_q(&d)
    }
    fn inv(&self) -> Q2 {
        let norm = &self.a * &self.a - q(2) * &self.b * &self.b;
        Q2 { a: &self.a / &norm, b: -(&self.b / &norm) }
    }
}

/// Real element `c0 + c1 sqrt2 + c2 sqrt3 + c3 sqrt6`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Real {
    c: [Q; 4],
}

impl Real {
    pub fn zero() -> Self {
        Real { c: [Q::zero(), Q::zero(), Q::zero(), Q::zero()] }
    }
    pub fn from_q(x: Q) -> Self {
        Real { c: [x, Q::zero(), Q::zero(), Q::zero()] }
    }
    pub fn from_i64(x: i64) -> Self {
        Real::from_q(q(x))
    }
    /// Coefficients of `1, sqrt2, sqrt3, sqrt6`.
    pub fn from_coeffs(c: [Q; 4]) -> Self {
        Real { c }
    }
    pub fn coeffs(&self) -> &[Q; 4] {
        &self.c
    }
    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|x| x.is_zero())
    }
    /// The value as a plain rational, if it is one.
    pub fn as_rational(&self) -> Option<&Q> {
        if self.c[1..].iter().all(|x| x.is_zero()) {
            Some(&self.c[0])
        } else {
            None
        }
    }
    fn split(&self) -> (Q2, Q2) {
        (
            Q2 { a: self.c[0].clone(), b: self.c[1].clone() },
            Q2 { a: self.c[2].clone(), b: self.c[3].clone() },
        )
    }
    fn join(p: Q2, s: Q2) -> Real {
        Real { c: [p.a, p.b, s.a, s.b] }
    }
    pub fn signum(&self) -> i8 {
        let (p, s) = self.split();
        let (sp, ss) = (p.sign(), s.sign());
        if ss == 0 {
            return sp;
        }
        if sp == 0 {
            return ss;
        }
        if sp == ss {
            return sp;
        }
        let d = p.mul(&p).sub(&s.mul(&s).scale(&q(3)));
        sp * d.sign()
    }
    pub fn cmp_real(&self, other: &Real) -> Ordering {
        match (self - other).signum() {
            1 => Ordering::Greater,
            -1 => Ordering::Less,
            _ => Ordering::Equal,
        }
    }
    pub fn scale(&self, k: &Q) -> Real {
        Real { c: [&self.c[0] * k, &self.c[1] * k, &self.c[2] * k, &self.c[3] * k] }
    }
    pub fn inv(&self) -> Option<Real> {
        if self.is_zero() {
            return None;
        }
        let (p, s) = self.split();
        let norm = p.mul(&p).sub(&s.mul(&s).scale(&q(3)));
        let ni = norm.inv();
        Some(Real::join(p.mul(&ni), s.mul(&ni).scale(&q(-1))))
    }
    pub fn to_f64(&self) -> f64 {
        let r = [1.0, std::f64::consts::SQRT_2, 3f64.sqrt(), 6f64.sqrt()];
        self.c.iter().zip(r).map(|(x, s)| x.to_f64().unwrap_or(f64::NAN) * s).sum()
    }
    /// An interval guaranteed to contain the value.
    pub fn enclose(&self) -> Interval {
        if self.is_zero() {
            return Interval::ZERO;
        }
        if let Some(r) = self.as_rational() {
            let v = r.to_f64().unwrap_or(f64::NAN);
            if Q::from_float(v).as_ref() == Some(r) {
                return Interval::point(v);
            }
        }
        let v = self.to_f64();
        let mag: f64 = self
            .c
            .iter()
            .map(|x| x.to_f64().unwrap_or(f64::NAN).abs() * 2.5)
            .sum::<f64>()
            .max(v.abs());
        let r = mag * 16.0 * f64::EPSILON + f64::MIN_POSITIVE;
        Interval { lo: (v - r).next_down(), hi: (v + r).next_up() }
    }
}

impl<'a> Add<&'a Real> for &'a Real {
    type Output = Real;
    fn add(self, o: &Real) -> Real {
        Real {
            c: [&self.c[0] + &o.c[0], &self.c[1] + &o.c[1], &self.c[2] + &o.c[2], &self.c[3] + &o.c[3]],
        }
    }
}

impl<'a> Sub<&'a Real> for &'a Real {
    type Output = Real;
    fn sub(self, o: &Real) -> Real {
        Real {
            c: [&self.c[0] - &o.c[0], &self.c[1] - &o.c[1], &self.c[2] - &o.c[2], &self.c[3] - &o.c[3]],
        }
    }
}

impl<'a> Mul<&'a Real> for &'a Real {
    type Output = Real;
    fn mul(self, o: &Real) -> Real {
        let (p1, s1) = self.split();
        let (p2, s2) = o.split();
        let p = p1.mul(&p2).add(&s1.mul(&s2).scale(&q(3)));
        let s = p1.mul(&s2).add(&s1.mul(&p2));
        Real::join(p, s)
    }
}

impl Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        self.scale(&q(-1))
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let names = ["", "sqrt2", "sqrt3", "sqrt6"];
        let mut first = true;
        for (x, name) in self.c.iter().zip(names) {
            if x.is_zero() {
                continue;
            }
            if !first {
                write!(f, "{}", if x.is_negative() { " - " } else { " + " })?;
            } else if x.is_negative() {
                write!(f, "-")?;
            }
            first = false;
            let ax = x.abs();
            if name.is_empty() {
                write!(f, "{ax}")?;
            } else if ax.is_one() {
                write!(f, "{name}")?;
            } else {
                write!(f, "{ax}*{name}")?;
            }
        }
        Ok(())
    }
}

/// Closed interval of reals with outward-rounded endpoints.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }
    /// `x` widened by `ulps` units of relative error.
    pub fn around(x: f64, ulps: f64) -> Self {
        let r = x.abs() * ulps * f64::EPSILON + f64::MIN_POSITIVE;
        Interval { lo: (x - r).next_down(), hi: (x + r).next_up() }
    }
    pub fn is_exact_zero(&self) -> bool {
        self.lo == 0.0 && self.hi == 0.0
    }
    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
    pub fn rad(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }
    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }
    pub fn sign(&self) -> Option<i8> {
        if self.lo > 0.0 {
            Some(1)
        } else if self.hi < 0.0 {
            Some(-1)
        } else if self.is_exact_zero() {
            Some(0)
        } else {
            None
        }
    }
    pub fn add(&self, o: &Interval) -> Interval {
        if self.is_exact_zero() {
            return *o;
        }
        if o.is_exact_zero() {
            return *self;
        }
        Interval { lo: (self.lo + o.lo).next_down(), hi: (self.hi + o.hi).next_up() }
    }
    pub fn neg(&self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }
    pub fn sub(&self, o: &Interval) -> Interval {
        self.add(&o.neg())
    }
    pub fn mul(&self, o: &Interval) -> Interval {
        if self.is_exact_zero() || o.is_exact_zero() {
            return Interval::ZERO;
        }
        let c = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        let lo = c.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Interval { lo: lo.next_down(), hi: hi.next_up() }
    }
}

/// Exact element of `Q(sqrt2, sqrt3)(i)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExactC {
    pub re: Real,
    pub im: Real,
}

impl ExactC {
    pub fn new(re: Real, im: Real) -> Self {
        ExactC { re, im }
    }
    pub fn gauss(re: Q, im: Q) -> Self {
        ExactC { re: Real::from_q(re), im: Real::from_q(im) }
    }
    pub fn zero() -> Self {
        ExactC { re: Real::zero(), im: Real::zero() }
    }
    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    pub fn conj(&self) -> Self {
        ExactC { re: self.re.clone(), im: -&self.im }
    }
    pub fn norm_sqr(&self) -> Real {
        &(&self.re * &self.re) + &(&self.im * &self.im)
    }
    pub fn inv(&self) -> Option<ExactC> {
        let n = self.norm_sqr().inv()?;
        let c = self.conj();
        Some(ExactC { re: &c.re * &n, im: &c.im * &n })
    }
    /// `(re, im)` as Gaussian rationals when no surds occur.
    pub fn as_gaussian(&self) -> Option<(&Q, &Q)> {
        Some((self.re.as_rational()?, self.im.as_rational()?))
    }
    /// `exp(pi i k / 12)`.
    pub fn unit_root(k: i64) -> ExactC {
        fn cos12(k: i64) -> Real {
            let k = k.rem_euclid(24);
            let k = if k > 12 { 24 - k } else { k };
            let (neg, k) = if k > 6 { (true, 12 - k) } else { (false, k) };
            let c = match k {
                0 => [q(1), q(0), q(0), q(0)],
                1 => [q(0), qf(1, 4), q(0), qf(1, 4)],
                2 => [q(0), q(0), qf(1, 2), q(0)],
                3 => [q(0), qf(1, 2), q(0), q(0)],
                4 => [qf(1, 2), q(0), q(0), q(0)],
                5 => [q(0), qf(-1, 4), q(0), qf(1, 4)],
                _ => [q(0), q(0), q(0), q(0)],
            };
            let r = Real::from_coeffs(c);
            if neg {
                -&r
            } else {
                r
            }
        }
        ExactC { re: cos12(k), im: cos12(6 - k) }
    }
}

impl<'a> Add<&'a ExactC> for &'a ExactC {
    type Output = ExactC;
    fn add(self, o: &ExactC) -> ExactC {
        ExactC { re: &self.re + &o.re, im: &self.im + &o.im }
    }
}

impl<'a> Sub<&'a ExactC> for &'a ExactC {
    type Output = ExactC;
    fn sub(self, o: &ExactC) -> ExactC {
        ExactC { re: &self.re - &o.re, im: &self.im - &o.im }
    }
}

impl<'a> Mul<&'a ExactC> for &'a ExactC {
    type Output = ExactC;
    fn mul(self, o: &ExactC) -> ExactC {
        ExactC {
            re: &(&self.re * &o.re) - &(&self.im * &o.im),
            im: &(&self.re * &o.im) + &(&self.im * &o.re),
        }
    }
}

/// Complex rectangle `re x im`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IComplex {
    pub re: Interval,
    pub im: Interval,
}

impl IComplex {
    pub fn add(&self, o: &IComplex) -> IComplex {
        IComplex { re: self.re.add(&o.re), im: self.im.add(&o.im) }
    }
    pub fn neg(&self) -> IComplex {
        IComplex { re: self.re.neg(), im: self.im.neg() }
    }
    pub fn mul(&self, o: &IComplex) -> IComplex {
        IComplex {
            re: self.re.mul(&o.re).sub(&self.im.mul(&o.im)),
            im: self.re.mul(&o.im).add(&self.im.mul(&o.re)),
        }
    }
}

/// Gaussian rational, used for rotation parameters such as `lambda` and `tau`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Gauss {
    #[serde(with = "qser")]
    pub re: Q,
    #[serde(with = "qser")]
    pub im: Q,
}

impl Gauss {
    pub fn new(re: Q, im: Q) -> Self {
        Gauss { re, im }
    }
    pub fn real(re: Q) -> Self {
        Gauss { re, im: Q::zero() }
    }
    pub fn zero() -> Self {
        Gauss::real(Q::zero())
    }
    pub fn add(&self, o: &Gauss) -> Gauss {
        Gauss { re: &self.re + &o.re, im: &self.im + &o.im }
    }
    pub fn sub(&self, o: &Gauss) -> Gauss {
        Gauss { re: &self.re - &o.re, im: &self.im - &o.im }
    }
    pub fn to_f64(&self) -> (f64, f64) {
        (self.re.to_f64().unwrap_or(f64::NAN), self.im.to_f64().unwrap_or(f64::NAN))
    }
    pub fn to_cx(&self) -> Cx {
        Cx::Exact(ExactC::gauss(self.re.clone(), self.im.clone()))
    }

    /// Parses forms like `1/2`, `-3i`, `1/4-3i`, `2+i/3`, `i`.
    pub fn parse(s: &str) -> Result<Gauss, MstabError> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if t.is_empty() {
            return Err(MstabError::Parse(format!("empty number '{s}'")));
        }
        let mut re = Q::zero();
        let mut im = Q::zero();
        let bytes: Vec<char> = t.chars().collect();
        let mut start = 0;
        let mut terms = Vec::new();
        for k in 1..bytes.len() {
            if (bytes[k] == '+' || bytes[k] == '-') && bytes[k - 1] != '/' {
                terms.push(bytes[start..k].iter().collect::<String>());
                start = k;
            }
        }
        terms.push(bytes[start..].iter().collect::<String>());
        for term in terms {
            let (neg, body) = match term.strip_prefix('-') {
                Some(b) => (true, b.to_string()),
                None => (false, term.trim_start_matches('+').to_string()),
            };
            let is_im = body.contains('i');
            let body = body.replace('*', "");
            let coeff = if is_im {
                let b = body.replacen('i', "", 1);
                if b.is_empty() {
                    q(1)
                } else if let Some(den) = b.strip_prefix('/') {
                    parse_q(&format!("1/{den}"))?
                } else {
                    parse_q(&b)?
                }
            } else {
                parse_q(&body)?
            };
            let coeff = if neg { -coeff } else { coeff };
            if is_im {
                im += coeff;
            } else {
                re += coeff;
            }
        }
        Ok(Gauss { re, im })
    }
}

impl fmt::Display for Gauss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => write!(f, "{}", self.re),
            (true, false) => write!(f, "{}i", self.im),
            (false, false) => {
                if self.im.is_negative() {
                    write!(f, "{}-{}i", self.re, -&self.im)
                } else {
                    write!(f, "{}+{}i", self.re, self.im)
                }
            }
        }
    }
}

pub fn parse_q(s: &str) -> Result<Q, MstabError> {
    let bad = || MstabError::Parse(format!("bad rational '{s}'"));
    if let Some((a, b)) = s.split_once('/') {
        let a: BigInt = a.parse().map_err(|_| bad())?;
        let b: BigInt = b.parse().map_err(|_| bad())?;
        if b.is_zero() {
            return Err(bad());
        }
        Ok(Q::new(a, b))
    } else if s.contains('.') || s.contains('e') {
        let v: f64 = s.parse().map_err(|_| bad())?;
        Q::from_float(v).ok_or_else(bad)
    } else {
        let a: BigInt = s.parse().map_err(|_| bad())?;
        Ok(Q::from_integer(a))
    }
}

/// Serde helper: rationals as `"p/q"` strings.
pub mod qser {
    use super::{parse_q, Q};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Q, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }
    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        let s = match v {
            serde_json::Value::String(s) => s,
            serde_json::Value::Number(n) => n.to_string(),
            _ => return Err(serde::de::Error::custom("expected rational")),
        };
        parse_q(&s).map_err(serde::de::Error::custom)
    }
}

/// A finite sum `sum_y exp(pi y) a_y` over distinct rationals `y` with exact
/// coefficients. Since `exp(pi)` is transcendental, such a sum vanishes only when
/// every coefficient does, so zero tests and real-part/imaginary-part zero tests are
/// exact; nonzero signs come from an enclosure.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpSum {
    terms: std::collections::BTreeMap<Q, ExactC>,
}

impl ExpSum {
    pub fn terms(&self) -> &std::collections::BTreeMap<Q, ExactC> {
        &self.terms
    }

    fn from_terms(terms: impl IntoIterator<Item = (Q, ExactC)>) -> Cx {
        let mut out: std::collections::BTreeMap<Q, ExactC> = std::collections::BTreeMap::new();
        for (y, a) in terms {
            let e = out.entry(y).or_insert_with(ExactC::zero);
            *e = &*e + &a;
        }
        out.retain(|_, a| !a.is_zero());
        match out.len() {
            0 => Cx::zero(),
            1 if out.keys().next().is_some_and(|y| y.is_zero()) => Cx::Exact(out.into_values().next().unwrap()),
            _ => Cx::Exp(ExpSum { terms: out }),
        }
    }

    fn scale_factor(y: &Q) -> Interval {
        let yf = y.to_f64().unwrap_or(f64::NAN);
        let x = std::f64::consts::PI * yf;
        Interval::around(x.exp(), 8.0 + 2.0 * x.abs())
    }

    fn enclose(&self) -> IComplex {
        let mut acc = IComplex { re: Interval::ZERO, im: Interval::ZERO };
        for (y, a) in &self.terms {
            let f = ExpSum::scale_factor(y);
            acc = acc.add(&IComplex { re: f.mul(&a.re.enclose()), im: f.mul(&a.im.enclose()) });
        }
        acc
    }

    /// Sign of `sum exp(pi y) part(a_y)`.
    fn part_sign(&self, part: impl Fn(&ExactC) -> &Real, what: &str) -> Result<i8, MstabError> {
        let nonzero: Vec<(&Q, &Real)> = self.terms.iter().map(|(y, a)| (y, part(a))).filter(|(_, r)| !r.is_zero()).collect();
        if nonzero.is_empty() {
            return Ok(0);
        }
        let first = nonzero[0].1.signum();
        if nonzero.iter().all(|(_, r)| r.signum() == first) {
            return Ok(first);
        }
        let mut acc = Interval::ZERO;
        for (y, r) in &nonzero {
            acc = acc.add(&ExpSum::scale_factor(y).mul(&r.enclose()));
        }
        match acc.sign() {
            Some(s) if s != 0 => Ok(s),
            _ => Err(precision(what, &self.enclose())),
        }
    }
}

fn exp_terms(z: &Cx) -> Option<Vec<(Q, ExactC)>> {
    match z {
        Cx::Exact(e) => Some(vec![(Q::zero(), e.clone())]),
        Cx::Exp(t) => Some(t.terms.iter().map(|(y, a)| (y.clone(), a.clone())).collect()),
        Cx::Approx(_) => None,
    }
}

/// A central-charge value: exact when possible, an enclosure otherwise.
#[derive(Clone, Debug)]
pub enum Cx {
    Exact(ExactC),
    /// Exact combination of real exponentials `exp(pi y)`.
    Exp(ExpSum),
    Approx(IComplex),
}

impl Cx {
    pub fn zero() -> Cx {
        Cx::Exact(ExactC::zero())
    }
    pub fn one() -> Cx {
        Cx::from_gauss(q(1), q(0))
    }
    pub fn i() -> Cx {
        Cx::from_gauss(q(0), q(1))
    }
    pub fn from_gauss(re: Q, im: Q) -> Cx {
        Cx::Exact(ExactC::gauss(re, im))
    }
    pub fn from_i64(re: i64, im: i64) -> Cx {
        Cx::from_gauss(q(re), q(im))
    }
    pub fn from_f64(re: f64, im: f64) -> Cx {
        Cx::Approx(IComplex { re: Interval::point(re), im: Interval::point(im) })
    }
    /// `exp(pi y) * a`.
    pub fn exp_scaled(y: Q, a: ExactC) -> Cx {
        ExpSum::from_terms([(y, a)])
    }
    pub fn is_exact(&self) -> bool {
        matches!(self, Cx::Exact(_))
    }
    /// Exact or an exact combination of exponentials: every zero test is decidable.
    pub fn is_symbolic(&self) -> bool {
        !matches!(self, Cx::Approx(_))
    }
    pub fn as_exact(&self) -> Option<&ExactC> {
        match self {
            Cx::Exact(e) => Some(e),
            _ => None,
        }
    }
    pub fn enclose(&self) -> IComplex {
        match self {
            Cx::Exact(e) => IComplex { re: e.re.enclose(), im: e.im.enclose() },
            Cx::Exp(t) => t.enclose(),
            Cx::Approx(a) => *a,
        }
    }
    pub fn to_f64(&self) -> (f64, f64) {
        match self {
            Cx::Exact(e) => (e.re.to_f64(), e.im.to_f64()),
            Cx::Exp(t) => t.terms.iter().fold((0.0, 0.0), |(x, y), (k, a)| {
                let f = (std::f64::consts::PI * k.to_f64().unwrap_or(f64::NAN)).exp();
                (x + f * a.re.to_f64(), y + f * a.im.to_f64())
            }),
            Cx::Approx(a) => (a.re.mid(), a.im.mid()),
        }
    }
    pub fn abs_f64(&self) -> f64 {
        let (a, b) = self.to_f64();
        a.hypot(b)
    }
    /// Half-width of the enclosure (0 for exact values).
    pub fn radius(&self) -> f64 {
        match self {
            Cx::Exact(_) => 0.0,
            _ => {
                let a = self.enclose();
                a.re.rad().hypot(a.im.rad())
            }
        }
    }
    pub fn scale_q(&self, k: &Q) -> Cx {
        match self {
            Cx::Exact(e) => Cx::Exact(ExactC { re: e.re.scale(k), im: e.im.scale(k) }),
            _ => self * &Cx::from_gauss(k.clone(), Q::zero()),
        }
    }
    pub fn conj(&self) -> Cx {
        match self {
            Cx::Exact(e) => Cx::Exact(e.conj()),
            Cx::Exp(t) => ExpSum::from_terms(t.terms.iter().map(|(y, a)| (y.clone(), a.conj()))),
            Cx::Approx(a) => Cx::Approx(IComplex { re: a.re, im: a.im.neg() }),
        }
    }
    pub fn re_sign(&self) -> Result<i8, MstabError> {
        match self {
            Cx::Exact(e) => Ok(e.re.signum()),
            Cx::Exp(t) => t.part_sign(|a| &a.re, "real part"),
            Cx::Approx(a) => a.re.sign().ok_or_else(|| precision("real part", a)),
        }
    }
    pub fn im_sign(&self) -> Result<i8, MstabError> {
        match self {
            Cx::Exact(e) => Ok(e.im.signum()),
            Cx::Exp(t) => t.part_sign(|a| &a.im, "imaginary part"),
            Cx::Approx(a) => a.im.sign().ok_or_else(|| precision("imaginary part", a)),
        }
    }
    pub fn is_zero(&self) -> Result<bool, MstabError> {
        match self {
            Cx::Exact(e) => Ok(e.is_zero()),
            // normalized sums are never zero
            Cx::Exp(_) => Ok(false),
            Cx::Approx(a) => {
                if a.re.is_exact_zero() && a.im.is_exact_zero() {
                    Ok(true)
                } else if a.re.sign().map_or(false, |s| s != 0) || a.im.sign().map_or(false, |s| s != 0) {
                    Ok(false)
                } else {
                    Err(precision("zero test", a))
                }
            }
        }
    }
    /// Membership in the semi-closed upper half-plane `{Im > 0} u {Im = 0, Re < 0}`.
    pub fn in_hbar(&self) -> Result<bool, MstabError> {
        match self.im_sign()? {
            1 => Ok(true),
            -1 => Ok(false),
            _ => Ok(self.re_sign()? < 0),
        }
    }
    /// Imaginary part of `conj(self) * other`; positive iff `other` is
    /// counterclockwise from `self` by less than a half turn.
    pub fn cross_sign(&self, other: &Cx) -> Result<i8, MstabError> {
        (&self.conj() * other).im_sign()
    }
    /// Phase comparison for two nonzero values in the semi-closed upper half-plane.
    pub fn phase_cmp(&self, other: &Cx) -> Result<Ordering, MstabError> {
        Ok(match self.cross_sign(other)? {
            1 => Ordering::Less,
            -1 => Ordering::Greater,
            _ => Ordering::Equal,
        })
    }
    pub fn inv(&self) -> Result<Cx, MstabError> {
        match self {
            Cx::Exact(e) => e.inv().map(Cx::Exact).ok_or_else(|| MstabError::Invalid("division by zero".into())),
            Cx::Exp(t) if t.terms.len() == 1 => {
                let (y, a) = t.terms.iter().next().unwrap();
                let a = a.inv().ok_or_else(|| MstabError::Invalid("division by zero".into()))?;
                Ok(Cx::exp_scaled(-y.clone(), a))
            }
            _ => {
                let a = self.enclose();
                let (x, y) = (a.re.mid(), a.im.mid());
                let n = x * x + y * y;
                let r = a.re.rad().hypot(a.im.rad());
                let m = n.sqrt();
                if m <= r {
                    return Err(precision("inverse", &a));
                }
                // |1/z - 1/z0| <= r / (|z0| (|z0| - r))
                let err = r / (m * (m - r)) + 4.0 * f64::EPSILON / m;
                Ok(Cx::Approx(IComplex {
                    re: Interval { lo: (x / n - err).next_down(), hi: (x / n + err).next_up() },
                    im: Interval { lo: (-y / n - err).next_down(), hi: (-y / n + err).next_up() },
                }))
            }
        }
    }
    /// Equality: exact for exact operands, otherwise within `tol` relative.
    pub fn approx_eq(&self, other: &Cx, tol: f64) -> bool {
        if let (Cx::Exact(a), Cx::Exact(b)) = (self, other) {
            return a == b;
        }
        if self.is_symbolic() && other.is_symbolic() && (self - other).is_zero().unwrap_or(false) {
            return true;
        }
        let (a, b) = (self.to_f64(), other.to_f64());
        let d = (a.0 - b.0).hypot(a.1 - b.1);
        let scale = 1f64.max(self.abs_f64()).max(other.abs_f64());
        d <= tol * scale + self.radius() + other.radius()
    }
    /// `exp(-pi i lambda)`, exact when `lambda` is real with denominator dividing 12,
    /// and an exact multiple of `exp(pi Im lambda)` when only the real part qualifies.
    pub fn rotation(lambda: &Gauss) -> Cx {
        let twelve = &lambda.re * q(12);
        if twelve.is_integer() {
            let k = (-twelve.to_integer()).rem_euclid(&BigInt::from(24)).to_i64().unwrap_or(0);
            return Cx::exp_scaled(lambda.im.clone(), ExactC::unit_root(k));
        }
        // reduce the angle exactly before going to floating point
        let two = q(2);
        let r = &lambda.re - (&lambda.re / &two).floor() * &two;
        let ang = -std::f64::consts::PI * r.to_f64().unwrap_or(f64::NAN);
        let phase = Cx::Approx(IComplex { re: Interval::around(ang.cos(), 8.0), im: Interval::around(ang.sin(), 8.0) });
        if lambda.im.is_zero() {
            phase
        } else {
            &phase * &Cx::Approx(ExpSum::scale_factor(&lambda.im).into_real())
        }
    }
    /// `exp(pi y)` as a real enclosure.
    pub fn exp_pi(y: f64) -> Cx {
        Cx::Approx(IComplex { re: Interval::around((std::f64::consts::PI * y).exp(), 8.0), im: Interval::ZERO })
    }
}

impl Interval {
    fn into_real(self) -> IComplex {
        IComplex { re: self, im: Interval::ZERO }
    }
}

fn precision(what: &str, a: &IComplex) -> MstabError {
    MstabError::Precision(format!(
        "{what} undecidable for [{:e}, {:e}] + i[{:e}, {:e}]",
        a.re.lo, a.re.hi, a.im.lo, a.im.hi
    ))
}

impl<'a> Add<&'a Cx> for &'a Cx {
    type Output = Cx;
    fn add(self, o: &Cx) -> Cx {
        match (self, o) {
            (Cx::Exact(a), Cx::Exact(b)) => Cx::Exact(a + b),
            _ => match (exp_terms(self), exp_terms(o)) {
                (Some(a), Some(b)) => ExpSum::from_terms(a.into_iter().chain(b)),
                _ => Cx::Approx(self.enclose().add(&o.enclose())),
            },
        }
    }
}

impl<'a> Sub<&'a Cx> for &'a Cx {
    type Output = Cx;
    fn sub(self, o: &Cx) -> Cx {
        self + &(-o)
    }
}

impl<'a> Mul<&'a Cx> for &'a Cx {
    type Output = Cx;
    fn mul(self, o: &Cx) -> Cx {
        match (self, o) {
            (Cx::Exact(a), Cx::Exact(b)) => Cx::Exact(a * b),
            _ => match (exp_terms(self), exp_terms(o)) {
                (Some(a), Some(b)) => {
                    ExpSum::from_terms(a.iter().flat_map(|(y, x)| b.iter().map(move |(z, w)| (y + z, x * w))))
                }
                _ => Cx::Approx(self.enclose().mul(&o.enclose())),
            },
        }
    }
}

impl Neg for &Cx {
    type Output = Cx;
    fn neg(self) -> Cx {
        match self {
            Cx::Exact(e) => Cx::Exact(ExactC { re: -&e.re, im: -&e.im }),
            Cx::Exp(t) => Cx::Exp(ExpSum {
                terms: t.terms.iter().map(|(y, a)| (y.clone(), ExactC { re: -&a.re, im: -&a.im })).collect(),
            }),
            Cx::Approx(a) => Cx::Approx(a.neg()),
        }
    }
}

fn fmt_exact(e: &ExactC) -> String {
    if e.im.is_zero() {
        format!("{}", e.re)
    } else if e.re.is_zero() {
        format!("({})i", e.im)
    } else {
        format!("{} + ({})i", e.re, e.im)
    }
}

impl fmt::Display for Cx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cx::Exact(e) => write!(f, "{}", fmt_exact(e)),
            Cx::Exp(t) => {
                let parts: Vec<String> = t.terms.iter().map(|(y, a)| format!("exp(pi*{y})*({})", fmt_exact(a))).collect();
                write!(f, "{}", parts.join(" + "))
            }
            Cx::Approx(_) => {
                let (a, b) = self.to_f64();
                write!(f, "{a:.17e} + {b:.17e}i")
            }
        }
    }
}
