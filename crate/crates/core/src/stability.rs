//! Central charges, stability conditions on finite hearts, and the C-action.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_traits::{ToPrimitive, Zero};

use crate::anquiver::KClass;
use crate::error::{MstabError, Result};
use crate::hearts::{Direction, Heart};
use crate::linalg;
use crate::number::{q, qf, Cx, ExactC, Gauss, Real, Q};

/// A group homomorphism from a sublattice of `Z^n` to `C`, stored by its values on a basis.
#[derive(Clone, Debug)]
pub struct Charge {
    basis: Vec<KClass>,
    values: Vec<Cx>,
}

impl Charge {
    pub fn new(basis: Vec<KClass>, values: Vec<Cx>) -> Result<Charge> {
        if basis.len() != values.len() {
            return Err(MstabError::LengthMismatch { expected: basis.len(), got: values.len() });
        }
        if linalg::rank(&basis) != basis.len() {
            return Err(MstabError::Invalid("charge basis is not linearly independent".into()));
        }
        Ok(Charge { basis, values })
    }

    /// Charge given by its values on simples of `h` with the listed labels.
    pub fn on_labels(h: &Heart, values: &BTreeMap<u32, Cx>) -> Result<Charge> {
        let mut basis = vec![];
        let mut vals = vec![];
        for (&l, v) in values {
            basis.push(h.class_of(l)?.clone());
            vals.push(v.clone());
        }
        Charge::new(basis, vals)
    }

    pub fn basis(&self) -> &[KClass] {
        &self.basis
    }

    pub fn values(&self) -> &[Cx] {
        &self.values
    }

    pub fn contains(&self, class: &[i64]) -> bool {
        linalg::coordinates(&self.basis, class).is_some()
    }

    pub fn eval(&self, class: &[i64]) -> Result<Cx> {
        let coords = linalg::coordinates(&self.basis, class)
            .ok_or_else(|| MstabError::Invalid(format!("class {class:?} is outside the domain of the charge")))?;
        let mut acc = Cx::zero();
        for (c, v) in coords.iter().zip(&self.values) {
            if !c.is_zero() {
                acc = &acc + &v.scale_q(c);
            }
        }
        Ok(acc)
    }

    pub fn scale(&self, c: &Cx) -> Charge {
        Charge { basis: self.basis.clone(), values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn is_exact(&self) -> bool {
        self.values.iter().all(|v| v.is_exact())
    }

    /// Values on the simples of `h` whose label is in `labels`.
    pub fn on_simples(&self, h: &Heart, labels: &[u32]) -> Result<BTreeMap<u32, Cx>> {
        labels.iter().map(|&l| Ok((l, self.eval(h.class_of(l)?)?))).collect()
    }

    /// Is the charge identically zero on its domain?
    pub fn is_zero(&self) -> Result<bool> {
        for v in &self.values {
            if !v.is_zero()? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Phase in `(-1, 1]` (in `(0, 1]` for values in the closed upper half-plane),
/// with an exact rational when the direction is a multiple of `pi/12`.
#[derive(Clone, Debug, PartialEq)]
pub struct Phase {
    pub value: f64,
    pub exact: Option<Q>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mass {
    /// `|Z|^2` when the charge is exact.
    pub squared: Option<Real>,
    pub value: f64,
}

pub fn phase_of(z: &Cx) -> Result<Phase> {
    if z.is_zero()? {
        return Err(MstabError::Invalid("phase of zero charge".into()));
    }
    let (x, y) = z.to_f64();
    let mut value = y.atan2(x) / std::f64::consts::PI;
    if value <= -1.0 {
        value = 1.0;
    }
    let mut exact = None;
    let single = match z {
        Cx::Exact(e) => Some(e),
        Cx::Exp(t) if t.terms().len() == 1 => t.terms().values().next(),
        _ => None,
    };
    if let Some(e) = single {
        for k in -11..=12 {
            let u = ExactC::unit_root(k);
            let cross = &(&u.re * &e.im) - &(&u.im * &e.re);
            let dot = &(&u.re * &e.re) + &(&u.im * &e.im);
            if cross.is_zero() && dot.signum() > 0 {
                exact = Some(qf(k, 12));
                value = k as f64 / 12.0;
                break;
            }
        }
    }
    Ok(Phase { value, exact })
}

pub fn mass_of(z: &Cx) -> Mass {
    Mass { squared: z.as_exact().map(|e| e.norm_sqr()), value: z.abs_f64() }
}

#[derive(Clone, Debug)]
pub struct StabilityCondition {
    pub heart: Heart,
    pub z: Charge,
}

#[derive(Clone, Debug)]
pub struct SpectrumEntry {
    pub class: KClass,
    pub charge: Cx,
    pub phase: Phase,
    pub mass: Mass,
}

/// Checks that every listed simple has nonzero charge in the semi-closed upper half-plane.
pub(crate) fn check_simples(values: &BTreeMap<u32, Cx>) -> Result<()> {
    let mut zero = vec![];
    let mut outside = vec![];
    for (&l, v) in values {
        if v.is_zero()? {
            zero.push(l);
        } else if !v.in_hbar()? {
            outside.push(l);
        }
    }
    if !zero.is_empty() {
        return Err(MstabError::InvalidStability { offending: zero, reason: "zero charge".into() });
    }
    if !outside.is_empty() {
        return Err(MstabError::InvalidStability {
            offending: outside,
            reason: "charge outside the semi-closed upper half-plane".into(),
        });
    }
    Ok(())
}

impl StabilityCondition {
    pub fn validate(heart: Heart, z: Charge) -> Result<StabilityCondition> {
        if z.basis().len() != heart.rank() {
            return Err(MstabError::Invalid("charge must be defined on the whole lattice".into()));
        }
        check_simples(&z.on_simples(&heart, &heart.labels())?)?;
        Ok(StabilityCondition { heart, z })
    }

    /// Stability condition from values on the simples.
    pub fn from_values(heart: Heart, values: &BTreeMap<u32, Cx>) -> Result<StabilityCondition> {
        if values.len() != heart.rank() {
            return Err(MstabError::LengthMismatch { expected: heart.rank(), got: values.len() });
        }
        let z = Charge::on_labels(&heart, values)?;
        StabilityCondition::validate(heart, z)
    }

    pub fn values(&self) -> Result<BTreeMap<u32, Cx>> {
        self.z.on_simples(&self.heart, &self.heart.labels())
    }

    pub fn charge(&self, class: &[i64]) -> Result<Cx> {
        self.z.eval(class)
    }

    pub fn phase(&self, class: &[i64]) -> Result<Phase> {
        phase_of(&self.z.eval(class)?)
    }

    pub fn mass(&self, class: &[i64]) -> Result<Mass> {
        Ok(mass_of(&self.z.eval(class)?))
    }

    /// Charges, phases and masses of all indecomposables of the heart.
    pub fn indecomposable_spectrum(&self) -> Result<Vec<SpectrumEntry>> {
        self.heart
            .indecomposable_classes()?
            .into_iter()
            .map(|class| {
                let charge = self.z.eval(&class)?;
                Ok(SpectrumEntry { phase: phase_of(&charge)?, mass: mass_of(&charge), class, charge })
            })
            .collect()
    }

    /// `lambda . (A, Z) = (tilt of A at F_lambda, exp(-pi i lambda) Z)`.
    pub fn c_act(&self, lambda: &Gauss) -> Result<StabilityCondition> {
        let k = lambda.re.floor();
        let frac = &lambda.re - &k;
        let k_int = k.to_integer().to_i64().ok_or_else(|| MstabError::Invalid("rotation too large".into()))?;
        let mut heart = self.heart.shift(k_int);
        let labels = heart.labels();
        for r in chunk_points(&Q::zero(), &frac) {
            let factor = Cx::rotation(&Gauss::real(&k + &r));
            let z = &self.z;
            heart = tilt_loop(
                heart,
                &labels,
                Direction::Forward,
                |h, l| Ok(&factor * &z.eval(h.class_of(l)?)?),
                |h, l| h.forward_tilt(l),
            )?;
        }
        let decide = Cx::rotation(&Gauss::real(lambda.re.clone()));
        let check = self.z.scale(&decide);
        check_simples(&check.on_simples(&heart, &labels)?)?;
        let z = self.z.scale(&Cx::rotation(lambda));
        Ok(StabilityCondition { heart, z })
    }
}

/// Intermediate rotation amounts from `from` to `to` in steps of at most 1/2,
/// excluding `from` and including `to` (empty when equal).
pub(crate) fn chunk_points(from: &Q, to: &Q) -> Vec<Q> {
    let half = qf(1, 2);
    let mut out = vec![];
    let mut cur = from.clone();
    if to > from {
        while &cur < to {
            cur = (&cur + &half).min(to.clone());
            out.push(cur.clone());
        }
    } else {
        while &cur > to {
            cur = (&cur - &half).max(to.clone());
            out.push(cur.clone());
        }
    }
    out
}

/// Tilts at the active simples until all their values lie in the semi-closed upper
/// half-plane. Forward: tilt at the simple of least phase below the real axis.
/// Backward: tilt at the one of greatest phase.
pub(crate) fn tilt_loop(
    mut h: Heart,
    active: &[u32],
    dir: Direction,
    value: impl Fn(&Heart, u32) -> Result<Cx>,
    mut tilt: impl FnMut(&Heart, u32) -> Result<Heart>,
) -> Result<Heart> {
    let cap = 4 * h.rank() * h.rank() + 16;
    for _ in 0..cap {
        let mut best: Option<(u32, Cx)> = None;
        for &l in active {
            let z = value(&h, l)?;
            if z.is_zero()? {
                return Err(MstabError::WallHit(format!("simple {l} has zero charge")));
            }
            if z.in_hbar()? {
                continue;
            }
            let w = -&z;
            best = match best {
                None => Some((l, w)),
                Some((bl, bw)) => {
                    let ord = w.phase_cmp(&bw)?;
                    let better = match dir {
                        Direction::Forward => ord == Ordering::Less,
                        Direction::Backward => ord == Ordering::Greater,
                    };
                    if better {
                        Some((l, w))
                    } else {
                        Some((bl, bw))
                    }
                }
            };
        }
        match best {
            None => return Ok(h),
            Some((l, _)) => h = tilt(&h, l)?,
        }
    }
    Err(MstabError::WallHit("tilt loop did not terminate".into()))
}

/// Exact rotation support check: `exp(-pi i lambda)` is exact iff `lambda` is real
/// with `12 lambda` integral.
pub fn rotation_is_exact(lambda: &Gauss) -> bool {
    lambda.im.is_zero() && (&lambda.re * q(12)).is_integer()
}

/// Gaussian-rational values convenience: `(re, im)` pairs to a label map.
pub fn gauss_values(vals: &[(u32, Gauss)]) -> BTreeMap<u32, Cx> {
    vals.iter().map(|(l, g)| (*l, g.to_cx())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a2(z1: (i64, i64, i64), z2: (i64, i64, i64)) -> StabilityCondition {
        let h = Heart::standard(2).unwrap();
        let v = BTreeMap::from([
            (1, Cx::from_gauss(q(z1.0), qf(z1.1, z1.2))),
            (2, Cx::from_gauss(q(z2.0), qf(z2.1, z2.2))),
        ]);
        StabilityCondition::from_values(h, &v).unwrap()
    }

    #[test]
    fn validation_examples() {
        a2((0, 1, 1), (0, 1, 1));
        a2((-1, 1, 3), (1, 1, 3));
        let h = Heart::standard(2).unwrap();
        let v = BTreeMap::from([(1, Cx::from_i64(1, 0)), (2, Cx::i())]);
        let err = StabilityCondition::from_values(h, &v).unwrap_err();
        assert!(matches!(err, MstabError::InvalidStability { ref offending, .. } if offending == &vec![1]));
    }

    #[test]
    fn phases() {
        let s = a2((-1, 1, 1), (1, 1, 1));
        let p = s.phase(&[1, 1]).unwrap();
        assert_eq!(p.exact, Some(qf(1, 2)));
        assert_eq!(s.mass(&[1, 1]).unwrap().squared, Some(Real::from_i64(4)));
        assert_eq!(s.phase(&[1, 0]).unwrap().exact, Some(qf(3, 4)));
        let s = a2((-1, 0, 1), (0, 1, 1));
        assert_eq!(s.phase(&[1, 0]).unwrap().exact, Some(q(1)));
        assert_eq!(s.indecomposable_spectrum().unwrap().len(), 3);
    }

    #[test]
    fn quarter_turn_example() {
        let s = a2((-2, 1, 1), (1, 1, 1));
        let t = s.c_act(&Gauss::real(qf(1, 2))).unwrap();
        assert_eq!(t.heart.class_of(2).unwrap(), &vec![0, -1]);
        assert_eq!(t.heart.class_of(1).unwrap(), &vec![1, 1]);
        let v = t.values().unwrap();
        assert!(v[&2].approx_eq(&Cx::from_i64(-1, 1), 0.0));
        assert!(v[&1].approx_eq(&Cx::from_i64(2, 1), 0.0));
    }

    #[test]
    fn shift_by_one() {
        let s = a2((-1, 1, 1), (1, 1, 1));
        let t = s.c_act(&Gauss::real(q(1))).unwrap();
        assert!(t.heart.same_as(&s.heart.shift(1)));
        let t2 = s.c_act(&Gauss::real(q(2))).unwrap();
        assert!(t2.heart.same_as(&s.heart));
        assert_eq!(t2.heart.provenance.shift, 2);
    }
}
