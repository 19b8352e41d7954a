//! JSON encodings of charges, hearts, stability conditions, multi-scale data and
//! Laurent families. Errors name the offending field as a JSON pointer.
//!
//! Charges: a Gaussian rational is `[re_num, re_den, im_num, im_den]`; other exact
//! values are `{"re": [..4], "im": [..4]}` with rational coefficients of
//! `1, sqrt2, sqrt3, sqrt6`; enclosures are `{"re": x, "im": y, "rad": r}`. A string
//! such as `"1/2-3i"` is accepted on input.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde_json::{json, Map, Value};

use crate::error::{MstabError, Result};
use crate::hearts::Heart;
use crate::limits::{Laurent, LaurentCharge};
use crate::multiscale::MultiScaleStab;
use crate::number::{parse_q, Cx, ExactC, Gauss, IComplex, Interval, Real, Q};
use crate::stability::StabilityCondition;

pub const SCHEMA: u64 = 1;

/// Output precision: exact encodings, or floating point rounded to `digits`
/// significant digits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Encoding {
    Exact,
    Numeric { digits: usize },
}

/// `x` rounded to `digits` significant digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", digits.clamp(1, 17) - 1, x).parse().unwrap_or(x)
}

fn err(ptr: &str, what: impl std::fmt::Display) -> MstabError {
    MstabError::Parse(format!("at {}: {what}", if ptr.is_empty() { "/" } else { ptr }))
}

fn int_value(x: &BigInt) -> Value {
    match x.to_i64() {
        Some(v) => json!(v),
        None => json!(x.to_string()),
    }
}

fn q_parts(x: &Q) -> [Value; 2] {
    [int_value(x.numer()), int_value(x.denom())]
}

fn q_string(x: &Q) -> Value {
    Value::String(x.to_string())
}

pub fn gauss_to_json(g: &Gauss) -> Value {
    let [a, b] = q_parts(&g.re);
    let [c, d] = q_parts(&g.im);
    json!([a, b, c, d])
}

pub fn charge_to_json(z: &Cx) -> Value {
    encode_charge(z, Encoding::Exact)
}

pub fn encode_charge(z: &Cx, enc: Encoding) -> Value {
    if let Encoding::Numeric { digits } = enc {
        let (re, im) = z.to_f64();
        return json!({ "re": round_sig(re, digits), "im": round_sig(im, digits) });
    }
    match z {
        Cx::Exact(e) => match e.as_gaussian() {
            Some((re, im)) => gauss_to_json(&Gauss::new(re.clone(), im.clone())),
            None => json!({
                "re": e.re.coeffs().iter().map(q_string).collect::<Vec<_>>(),
                "im": e.im.coeffs().iter().map(q_string).collect::<Vec<_>>(),
            }),
        },
        Cx::Exp(t) => {
            let terms: Vec<Value> = t
                .terms()
                .iter()
                .map(|(y, a)| json!({ "y": q_string(y), "c": encode_charge(&Cx::Exact(a.clone()), enc) }))
                .collect();
            json!({ "exp": terms })
        }
        Cx::Approx(a) => json!({ "re": a.re.mid(), "im": a.im.mid(), "rad": a.re.rad().max(a.im.rad()) }),
    }
}

fn int_from(v: &Value, ptr: &str) -> Result<BigInt> {
    match v {
        Value::Number(n) if n.is_i64() => Ok(BigInt::from(n.as_i64().unwrap_or(0))),
        Value::String(s) => s.parse().map_err(|_| err(ptr, format!("'{s}' is not an integer"))),
        _ => Err(err(ptr, "expected an integer")),
    }
}

fn q_from(v: &Value, ptr: &str) -> Result<Q> {
    match v {
        Value::Number(n) => parse_q(&n.to_string()).map_err(|e| err(ptr, e)),
        Value::String(s) => parse_q(s).map_err(|e| err(ptr, e)),
        _ => Err(err(ptr, "expected a rational")),
    }
}

fn ratio(num: &Value, den: &Value, ptr: &str) -> Result<Q> {
    let (a, b) = (int_from(num, ptr)?, int_from(den, ptr)?);
    if b.is_zero() {
        return Err(err(ptr, "zero denominator"));
    }
    Ok(Q::new(a, b))
}

pub fn gauss_from_json(v: &Value, ptr: &str) -> Result<Gauss> {
    match v {
        Value::String(s) => Gauss::parse(s).map_err(|e| err(ptr, e)),
        Value::Number(_) => Ok(Gauss::real(q_from(v, ptr)?)),
        Value::Array(a) if a.len() == 4 => Ok(Gauss::new(ratio(&a[0], &a[1], ptr)?, ratio(&a[2], &a[3], ptr)?)),
        _ => Err(err(ptr, "expected [re_num, re_den, im_num, im_den] or a string like \"1/2-3i\"")),
    }
}

pub fn charge_from_json(v: &Value, ptr: &str) -> Result<Cx> {
    match v {
        Value::Object(o) if o.contains_key("exp") => {
            let Some(Value::Array(terms)) = o.get("exp") else {
                return Err(err(ptr, "'exp' must be a list of {y, c} terms"));
            };
            let mut acc = Cx::zero();
            for (k, t) in terms.iter().enumerate() {
                let p = format!("{ptr}/exp/{k}");
                let y = q_from(t.get("y").ok_or_else(|| err(&p, "missing 'y'"))?, &format!("{p}/y"))?;
                let c = charge_from_json(t.get("c").ok_or_else(|| err(&p, "missing 'c'"))?, &format!("{p}/c"))?;
                let Cx::Exact(c) = c else {
                    return Err(err(&format!("{p}/c"), "coefficient must be exact"));
                };
                acc = &acc + &Cx::exp_scaled(y, c);
            }
            Ok(acc)
        }
        Value::Object(o) => {
            let re = o.get("re").ok_or_else(|| err(ptr, "missing 're'"))?;
            let im = o.get("im").ok_or_else(|| err(ptr, "missing 'im'"))?;
            match (re, im) {
                (Value::Array(a), Value::Array(b)) => {
                    let real = |xs: &Vec<Value>, p: &str| -> Result<Real> {
                        if xs.len() != 4 {
                            return Err(err(p, "expected four coefficients"));
                        }
                        let c: Vec<Q> = xs.iter().enumerate().map(|(k, x)| q_from(x, &format!("{p}/{k}"))).collect::<Result<_>>()?;
                        Ok(Real::from_coeffs([c[0].clone(), c[1].clone(), c[2].clone(), c[3].clone()]))
                    };
                    Ok(Cx::Exact(ExactC::new(real(a, &format!("{ptr}/re"))?, real(b, &format!("{ptr}/im"))?)))
                }
                (Value::Number(x), Value::Number(y)) => {
                    let rad = o.get("rad").and_then(Value::as_f64).unwrap_or(0.0);
                    let (x, y) = (x.as_f64().unwrap_or(f64::NAN), y.as_f64().unwrap_or(f64::NAN));
                    let iv = |m: f64| Interval { lo: (m - rad).next_down(), hi: (m + rad).next_up() };
                    Ok(Cx::Approx(IComplex { re: iv(x), im: iv(y) }))
                }
                _ => Err(err(ptr, "expected exact coefficient arrays or numeric re/im")),
            }
        }
        _ => Ok(gauss_from_json(v, ptr)?.to_cx()),
    }
}

fn label_key(k: &str, ptr: &str) -> Result<u32> {
    k.parse().map_err(|_| err(ptr, format!("'{k}' is not a simple label")))
}

pub fn values_to_json(values: &BTreeMap<u32, Cx>, enc: Encoding) -> Value {
    Value::Object(values.iter().map(|(l, z)| (l.to_string(), encode_charge(z, enc))).collect())
}

pub fn values_from_json(v: &Value, ptr: &str) -> Result<BTreeMap<u32, Cx>> {
    let o = v.as_object().ok_or_else(|| err(ptr, "expected an object keyed by simple labels"))?;
    o.iter()
        .map(|(k, x)| {
            let p = format!("{ptr}/{k}");
            Ok((label_key(k, &p)?, charge_from_json(x, &p)?))
        })
        .collect()
}

/// `A<n>` names the standard heart; anything else must be a heart object.
pub fn heart_from_json(v: &Value, ptr: &str) -> Result<Heart> {
    if let Value::String(s) = v {
        return heart_from_name(s).map_err(|e| err(ptr, e));
    }
    let h: Heart = serde_json::from_value(v.clone()).map_err(|e| err(ptr, e))?;
    h.check_invariants().map_err(|e| err(ptr, e))?;
    Ok(h)
}

pub fn heart_from_name(s: &str) -> Result<Heart> {
    let n: usize = s
        .strip_prefix('A')
        .or_else(|| s.strip_prefix('a'))
        .and_then(|x| x.parse().ok())
        .ok_or_else(|| MstabError::Parse(format!("unknown heart '{s}', expected A<n>")))?;
    Heart::standard(n)
}

pub fn heart_to_json(h: &Heart) -> Value {
    h.to_json()
}

pub fn stab_to_json(s: &StabilityCondition, enc: Encoding) -> Result<Value> {
    Ok(json!({ "schema": SCHEMA, "heart": heart_to_json(&s.heart), "charge": values_to_json(&s.values()?, enc) }))
}

pub fn stab_from_json(v: &Value) -> Result<StabilityCondition> {
    let h = heart_from_json(v.get("heart").ok_or_else(|| err("", "missing 'heart'"))?, "/heart")?;
    let vals = values_from_json(v.get("charge").ok_or_else(|| err("", "missing 'charge'"))?, "/charge")?;
    StabilityCondition::from_values(h, &vals)
}

pub fn msc_to_json(m: &MultiScaleStab, enc: Encoding) -> Result<Value> {
    let mut levels = vec![];
    for (i, lvl) in m.levels.iter().enumerate() {
        levels.push(json!({ "simples": lvl.labels, "charge": values_to_json(&m.level_values(i)?, enc) }));
    }
    Ok(json!({
        "schema": SCHEMA,
        "top_heart": heart_to_json(&m.top),
        "levels": levels,
        "type_rho": m.type_rho(),
    }))
}

/// Reads `{top_heart, levels: [{charge: {label: value}}]}` and validates it.
pub fn msc_from_json(v: &Value) -> Result<MultiScaleStab> {
    let top = heart_from_json(v.get("top_heart").ok_or_else(|| err("", "missing 'top_heart'"))?, "/top_heart")?;
    let levels = v.get("levels").and_then(Value::as_array).ok_or_else(|| err("/levels", "expected an array"))?;
    let values: Vec<BTreeMap<u32, Cx>> = levels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let p = format!("/levels/{i}/charge");
            values_from_json(l.get("charge").ok_or_else(|| err(&p, "missing"))?, &p)
        })
        .collect::<Result<_>>()?;
    MultiScaleStab::validate(top, &values)
}

pub fn laurent_to_json(p: &Laurent) -> Value {
    Value::Array(
        p.terms()
            .iter()
            .map(|(k, c)| {
                let [a, b] = q_parts(&c.re);
                let [x, y] = q_parts(&c.im);
                json!([k, a, b, x, y])
            })
            .collect(),
    )
}

pub fn laurent_charge_to_json(zc: &LaurentCharge) -> Value {
    Value::Object(zc.values.iter().map(|(l, p)| (l.to_string(), laurent_to_json(p))).collect::<Map<_, _>>())
}

/// A polynomial is a list of `[power, re_num, re_den, im_num, im_den]` or a string
/// such as `"-1+it"`.
pub fn laurent_from_json(v: &Value, ptr: &str) -> Result<Laurent> {
    match v {
        Value::String(s) => Laurent::parse(s).map_err(|e| err(ptr, e)),
        Value::Array(terms) => {
            let mut out = vec![];
            for (k, t) in terms.iter().enumerate() {
                let p = format!("{ptr}/{k}");
                let a = t.as_array().filter(|a| a.len() == 5).ok_or_else(|| err(&p, "expected [power, re_num, re_den, im_num, im_den]"))?;
                let power = a[0].as_i64().and_then(|x| i32::try_from(x).ok()).ok_or_else(|| err(&format!("{p}/0"), "bad power"))?;
                out.push((power, Gauss::new(ratio(&a[1], &a[2], &p)?, ratio(&a[3], &a[4], &p)?)));
            }
            Ok(Laurent::new(out))
        }
        _ => Err(err(ptr, "expected a term list or a string")),
    }
}

pub fn laurent_charge_from_json(h: &Heart, v: &Value, ptr: &str) -> Result<LaurentCharge> {
    let o = v.as_object().ok_or_else(|| err(ptr, "expected an object keyed by simple labels"))?;
    let values = o
        .iter()
        .map(|(k, x)| {
            let p = format!("{ptr}/{k}");
            Ok((label_key(k, &p)?, laurent_from_json(x, &p)?))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    LaurentCharge::new(h, values)
}

/// A family written as `(p_1, ..., p_n)`, one polynomial per simple in label order.
pub fn parse_family_tuple(h: &Heart, s: &str) -> Result<LaurentCharge> {
    let t = s.trim();
    let inner = t.strip_prefix('(').and_then(|x| x.strip_suffix(')')).unwrap_or(t);
    let mut parts = vec![];
    let mut depth = 0;
    let mut cur = String::new();
    for c in inner.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(std::mem::take(&mut cur));
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    parts.push(cur);
    let labels = h.labels();
    if parts.len() != labels.len() {
        return Err(MstabError::Parse(format!("family has {} entries, heart has {} simples", parts.len(), labels.len())));
    }
    let values = labels.into_iter().zip(parts).map(|(l, p)| Ok((l, Laurent::parse(&p)?))).collect::<Result<_>>()?;
    LaurentCharge::new(h, values)
}
