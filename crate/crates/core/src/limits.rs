//! Limits of one-parameter families of central charges `Z_t` as `t -> 0+`.
//!
//! Families are Laurent polynomials in `t` with Gaussian-rational coefficients, one
//! per simple of a fixed heart. Valuations give the levels; leading coefficients give
//! the level charges. A leading coefficient on the positive real axis is handled by
//! rotating the whole family by a small `lambda` first.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{MstabError, Result};
use crate::hearts::{Direction, Heart};
use crate::multiscale::MultiScaleStab;
use crate::number::{q, qf, Cx, Gauss, Q};
use crate::stability::tilt_loop;

/// Denominators tried for the rotation `lambda = 1/q`, in order.
pub const ROTATION_SCHEDULE: [i64; 6] = [64, 32, 16, 8, 4, 2];

/// Distance in phase units a leading phase must keep from the chosen rotation.
const WALL_MARGIN: f64 = 1e-9;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Laurent {
    /// Nonzero coefficients by power of `t`.
    terms: BTreeMap<i32, Gauss>,
}

impl Laurent {
    pub fn new(terms: impl IntoIterator<Item = (i32, Gauss)>) -> Laurent {
        let mut out = Laurent::default();
        for (p, c) in terms {
            out.add_term(p, &c);
        }
        out
    }

    pub fn monomial(power: i32, c: Gauss) -> Laurent {
        Laurent::new([(power, c)])
    }

    pub fn constant(c: Gauss) -> Laurent {
        Laurent::monomial(0, c)
    }

    fn add_term(&mut self, p: i32, c: &Gauss) {
        let e = self.terms.entry(p).or_insert_with(Gauss::zero);
        *e = e.add(c);
        if e.re.is_zero() && e.im.is_zero() {
            self.terms.remove(&p);
        }
    }

    pub fn terms(&self) -> &BTreeMap<i32, Gauss> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn valuation(&self) -> Option<i32> {
        self.terms.keys().next().copied()
    }

    pub fn leading(&self) -> Option<&Gauss> {
        self.terms.values().next()
    }

    pub fn coeff(&self, p: i32) -> Gauss {
        self.terms.get(&p).cloned().unwrap_or_else(Gauss::zero)
    }

    pub fn add(&self, o: &Laurent) -> Laurent {
        let mut out = self.clone();
        for (p, c) in &o.terms {
            out.add_term(*p, c);
        }
        out
    }

    pub fn scale_q(&self, k: &Q) -> Laurent {
        Laurent::new(self.terms.iter().map(|(p, c)| (*p, Gauss::new(&c.re * k, &c.im * k))))
    }

    /// True when `Z(t)` lies in the semi-closed upper half-plane for all small `t > 0`.
    pub fn eventually_in_hbar(&self) -> bool {
        if let Some(c) = self.terms.values().find(|c| !c.im.is_zero()) {
            return c.im.is_positive();
        }
        self.terms.values().find(|c| !c.re.is_zero()).is_some_and(|c| c.re.is_negative())
    }

    /// Parses sums of terms `c`, `c t`, `c t^k`, e.g. `-1+it`, `2i - 3/2 t^2`, `(1+i)t^-1`.
    pub fn parse(s: &str) -> Result<Laurent> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if s.is_empty() {
            return Err(MstabError::Parse("empty Laurent polynomial".into()));
        }
        let mut terms = vec![];
        let mut depth = 0i32;
        let mut start = 0;
        let bytes = s.as_bytes();
        for (i, &b) in bytes.iter().enumerate() {
            match b {
                b'(' => depth += 1,
                b')' => depth -= 1,
                b'+' | b'-' if depth == 0 && i > start && bytes[i - 1] != b'^' => {
                    terms.push(&s[start..i]);
                    start = i;
                }
                _ => {}
            }
        }
        terms.push(&s[start..]);
        let mut out = Laurent::default();
        for t in terms {
            let (p, c) = parse_term(t).map_err(|e| MstabError::Parse(format!("term '{t}' in '{s}': {e}")))?;
            out.add_term(p, &c);
        }
        Ok(out)
    }
}

fn parse_term(t: &str) -> std::result::Result<(i32, Gauss), String> {
    let (sign, body) = match t.as_bytes().first() {
        Some(b'-') => (-1, &t[1..]),
        Some(b'+') => (1, &t[1..]),
        _ => (1, t),
    };
    let (coef, power) = match body.find('t') {
        Some(k) => {
            let rest = &body[k + 1..];
            let p = if rest.is_empty() {
                1
            } else {
                rest.strip_prefix('^').ok_or("expected '^' after t")?.parse::<i32>().map_err(|e| e.to_string())?
            };
            (body[..k].trim_end_matches('*'), p)
        }
        None => (body, 0),
    };
    let c = match coef {
        "" => Gauss::real(q(1)),
        "i" => Gauss::new(q(0), q(1)),
        _ => {
            let inner = coef.strip_prefix('(').and_then(|x| x.strip_suffix(')')).unwrap_or(coef);
            Gauss::parse(inner).map_err(|e| e.to_string())?
        }
    };
    let c = if sign < 0 { Gauss::zero().sub(&c) } else { c };
    Ok((power, c))
}

impl fmt::Display for Laurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (p, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match p {
                0 => write!(f, "({c})")?,
                1 => write!(f, "({c})t")?,
                _ => write!(f, "({c})t^{p}")?,
            }
        }
        Ok(())
    }
}

/// A family of central charges given on the simples of a heart.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LaurentCharge {
    pub values: BTreeMap<u32, Laurent>,
}

impl LaurentCharge {
    pub fn new(h: &Heart, values: BTreeMap<u32, Laurent>) -> Result<LaurentCharge> {
        let got: Vec<u32> = values.keys().copied().collect();
        if got != h.labels() {
            return Err(MstabError::Invalid(format!("family given on {got:?}, heart has simples {:?}", h.labels())));
        }
        if let Some((l, _)) = values.iter().find(|(_, p)| p.is_zero()) {
            return Err(MstabError::Invalid(format!("family vanishes identically on simple {l}")));
        }
        Ok(LaurentCharge { values })
    }

    /// The family on an arbitrary class, through its coordinates in `h`.
    pub fn eval(&self, h: &Heart, class: &[i64]) -> Result<Laurent> {
        let coords = h.coordinates(class)?;
        let mut out = Laurent::default();
        for (s, c) in h.simples.iter().zip(coords) {
            if !c.is_zero() {
                out = out.add(&self.values[&s.label].scale_q(&c));
            }
        }
        Ok(out)
    }

    /// The same family written on the simples of another heart of the same lattice.
    pub fn transport(&self, from: &Heart, to: &Heart) -> Result<LaurentCharge> {
        let values = to.simples.iter().map(|s| Ok((s.label, self.eval(from, &s.class)?))).collect::<Result<_>>()?;
        LaurentCharge::new(to, values)
    }

    pub fn check_admissible(&self) -> Result<()> {
        let bad: Vec<u32> = self.values.iter().filter(|(_, p)| !p.eventually_in_hbar()).map(|(l, _)| *l).collect();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(MstabError::InvalidStability {
                offending: bad,
                reason: "family leaves the semi-closed upper half-plane as t -> 0".into(),
            })
        }
    }
}

/// Level of each simple: simples of equal valuation share a level, levels ordered by
/// increasing valuation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelAssignment {
    pub level_of: BTreeMap<u32, usize>,
    pub valuations: Vec<i32>,
}

impl LevelAssignment {
    pub fn sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.valuations.len()];
        for &i in self.level_of.values() {
            out[i] += 1;
        }
        out
    }
}

pub fn order_relation(h: &Heart, zc: &LaurentCharge) -> Result<LevelAssignment> {
    if zc.values.keys().copied().collect::<Vec<_>>() != h.labels() {
        return Err(MstabError::Invalid("family and heart have different simples".into()));
    }
    zc.check_admissible()?;
    Ok(levels_by_valuation(zc))
}

fn levels_by_valuation(zc: &LaurentCharge) -> LevelAssignment {
    let mut valuations: Vec<i32> = zc.values.values().filter_map(|p| p.valuation()).collect();
    valuations.sort_unstable();
    valuations.dedup();
    let level_of = zc
        .values
        .iter()
        .map(|(l, p)| (*l, valuations.binary_search(&p.valuation().unwrap_or(0)).unwrap_or(0)))
        .collect();
    LevelAssignment { level_of, valuations }
}

#[derive(Clone, Debug)]
pub struct ExtractedLimit {
    pub msc: MultiScaleStab,
    /// Rotation applied to the family before taking leading terms (0 if none).
    pub lambda: Q,
    /// The unrotated family on the simples of `msc.top`.
    pub family: LaurentCharge,
    /// The limit with the rotation undone, when that is itself valid.
    pub unrotated: Option<MultiScaleStab>,
}

fn leading_phase(p: &Laurent) -> f64 {
    let c = p.leading().expect("nonzero family");
    let (x, y) = c.to_f64();
    let v = y.atan2(x) / std::f64::consts::PI;
    if v <= -1.0 + 1e-300 {
        1.0
    } else {
        v
    }
}

fn limit_msc(h: &Heart, fam: &LaurentCharge, factor: &Cx) -> Result<MultiScaleStab> {
    let la = levels_by_valuation(fam);
    let mut levels = vec![];
    for (i, &v) in la.valuations.iter().enumerate() {
        let vals: BTreeMap<u32, Cx> = la
            .level_of
            .iter()
            .filter(|(_, &k)| k >= i)
            .map(|(l, _)| (*l, factor * &fam.values[l].coeff(v).to_cx()))
            .collect();
        levels.push(vals);
    }
    MultiScaleStab::validate(h.clone(), &levels)
}

/// Picks the first `lambda = 1/q` of the schedule keeping clear of the leading phases
/// of all indecomposables.
pub fn choose_rotation(h: &Heart, zc: &LaurentCharge) -> Result<Q> {
    let walls: Vec<f64> =
        h.indecomposable_classes()?.iter().map(|c| Ok(leading_phase(&zc.eval(h, c)?))).collect::<Result<_>>()?;
    for d in ROTATION_SCHEDULE {
        let lam = 1.0 / d as f64;
        if walls.iter().all(|w| (w - lam).abs() > WALL_MARGIN) {
            return Ok(qf(1, d));
        }
    }
    Err(MstabError::NoRotation(format!("every rotation in {ROTATION_SCHEDULE:?} meets a wall {walls:?}")))
}

/// The multi-scale limit of the family as `t -> 0+`.
pub fn extract_limit(h: &Heart, zc: &LaurentCharge) -> Result<ExtractedLimit> {
    order_relation(h, zc)?;
    // a simple's level charge is its leading coefficient
    let needs_rotation = zc.values.values().filter_map(|p| p.leading()).any(|c| c.im.is_zero() && c.re.is_positive());
    if !needs_rotation {
        let msc = limit_msc(h, zc, &Cx::one())?;
        return Ok(ExtractedLimit { unrotated: Some(msc.clone()), msc, lambda: Q::zero(), family: zc.clone() });
    }
    let lambda = choose_rotation(h, zc)?;
    let factor = Cx::rotation(&Gauss::real(lambda.clone()));
    let h2 = tilt_loop(
        h.clone(),
        &h.labels(),
        Direction::Forward,
        |hh, l| Ok(&factor * &zc.eval(h, hh.class_of(l)?)?.leading().expect("nonzero").to_cx()),
        |hh, l| hh.forward_tilt(l),
    )?;
    let family = zc.transport(h, &h2)?;
    let msc = limit_msc(&h2, &family, &factor)?;
    let unrotated = limit_msc(&h2, &family, &Cx::one()).ok();
    Ok(ExtractedLimit { msc, lambda, family, unrotated })
}

/// The family `sum_i t^i Z_i` through a multi-scale datum with Gaussian-rational
/// charges: the plumbing ray with `exp(-pi i tau) = t`.
pub fn plumbing_ray(m: &MultiScaleStab) -> Result<LaurentCharge> {
    plumbing_ray_with(m, &(0..=m.depth() as i32).collect::<Vec<_>>())
}

/// As [`plumbing_ray`] with level `i` scaled by `t^powers[i]` (strictly increasing).
pub fn plumbing_ray_with(m: &MultiScaleStab, powers: &[i32]) -> Result<LaurentCharge> {
    if powers.len() != m.levels.len() || powers.windows(2).any(|w| w[0] >= w[1]) {
        return Err(MstabError::Invalid(format!("need {} strictly increasing powers", m.levels.len())));
    }
    let mut values = BTreeMap::new();
    for (i, &p) in powers.iter().enumerate() {
        for (l, z) in m.level_values(i)? {
            if m.levels.get(i + 1).is_some_and(|d| d.labels.contains(&l)) {
                continue;
            }
            let g = z
                .as_exact()
                .and_then(|e| e.as_gaussian())
                .ok_or_else(|| MstabError::Invalid(format!("charge {z} of simple {l} is not Gaussian rational")))?;
            values.insert(l, Laurent::monomial(p, Gauss::new(g.0.clone(), g.1.clone())));
        }
    }
    LaurentCharge::new(&m.top, values)
}

/// Evaluates the family at a positive rational `t` (for spot checks).
pub fn evaluate_at(p: &Laurent, t: &Q) -> Gauss {
    let mut out = Gauss::zero();
    for (k, c) in p.terms() {
        let mut pow = Q::one();
        for _ in 0..k.unsigned_abs() {
            pow *= t;
        }
        if *k < 0 {
            pow = Q::one() / pow;
        }
        out = out.add(&Gauss::new(&c.re * &pow, &c.im * &pow));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(h: &Heart, s: &[&str]) -> LaurentCharge {
        let values = h.labels().into_iter().zip(s).map(|(l, x)| (l, Laurent::parse(x).unwrap())).collect();
        LaurentCharge::new(h, values).unwrap()
    }

    #[test]
    fn parse_terms() {
        let p = Laurent::parse("-1 + it").unwrap();
        assert_eq!(p.valuation(), Some(0));
        assert_eq!(p.coeff(1), Gauss::new(q(0), q(1)));
        let p = Laurent::parse("(1+2i)t^-1 - 3/2t^2").unwrap();
        assert_eq!(p.valuation(), Some(-1));
        assert_eq!(p.coeff(2), Gauss::real(qf(-3, 2)));
        assert!(Laurent::parse("it - it").unwrap().is_zero());
        assert!(Laurent::parse("t^x").is_err());
    }

    #[test]
    fn orders() {
        let h = Heart::standard(2).unwrap();
        let la = order_relation(&h, &fam(&h, &["-1+it", "1+it"])).unwrap();
        assert_eq!(la.sizes(), vec![2]);
        let la = order_relation(&h, &fam(&h, &["i", "it"])).unwrap();
        assert_eq!(la.level_of[&2], 1);
        let h3 = Heart::standard(3).unwrap();
        let la = order_relation(&h3, &fam(&h3, &["i", "it", "it^2"])).unwrap();
        assert_eq!(la.sizes(), vec![1, 1, 1]);
        assert!(order_relation(&h, &fam(&h, &["-i", "i"])).is_err());
    }

    #[test]
    fn a2_degeneration() {
        let h = Heart::standard(2).unwrap();
        let out = extract_limit(&h, &fam(&h, &["-1+it", "1+it"])).unwrap();
        assert_eq!(out.lambda, qf(1, 64));
        let m = &out.msc;
        assert_eq!(m.depth(), 1);
        assert_eq!(m.top.class_of(2).unwrap(), &vec![0, -1]);
        assert_eq!(m.top.class_of(1).unwrap(), &vec![1, 1]);
        assert_eq!(m.vanishing_labels(1), vec![1]);
        let u = out.unrotated.unwrap();
        let v0 = u.level_values(0).unwrap();
        assert!(v0[&2].approx_eq(&Cx::from_i64(-1, 0), 0.0));
        assert!(u.level_values(1).unwrap()[&1].approx_eq(&Cx::from_i64(0, 2), 0.0));
    }

    #[test]
    fn honest_family_is_constant() {
        let h = Heart::standard(2).unwrap();
        let out = extract_limit(&h, &fam(&h, &["-1+i", "i"])).unwrap();
        assert_eq!(out.msc.depth(), 0);
        assert!(out.lambda.is_zero());
    }

    #[test]
    fn evaluation() {
        let p = Laurent::parse("1 + 2t^-1").unwrap();
        assert_eq!(evaluate_at(&p, &qf(1, 2)), Gauss::real(q(5)));
    }
}
