//! Multi-scale stability conditions: nested simple-generated hearts with one
//! charge per level, the C-action, plumbing, equivalence, the commutation
//! defect, neighborhoods and chart coordinates.
//!
//! Levels are tracked by simple labels. Tilts inside a vanishing subcategory and
//! lifted quotient tilts never move a label between levels.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::anquiver::KClass;
use crate::error::{MstabError, Result};
use crate::hearts::{lift_quotient_tilt, Direction, Heart};
use crate::linalg;
use crate::number::{q, Cx, Gauss, Q};
use crate::stability::{check_simples, chunk_points, tilt_loop, Charge, StabilityCondition};

#[derive(Clone, Debug)]
pub struct Level {
    /// Labels of the simples of this level's heart, sorted.
    pub labels: Vec<u32>,
    /// Defined on the span of those simples.
    pub charge: Charge,
}

#[derive(Clone, Debug)]
pub struct MultiScaleStab {
    pub top: Heart,
    pub levels: Vec<Level>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VanishingLevel {
    pub labels: Vec<u32>,
    pub components: Vec<Vec<u32>>,
    pub rho: Vec<usize>,
}

/// Levels `1..=L` of the vanishing chain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VanishingChain {
    pub levels: Vec<VanishingLevel>,
}

impl VanishingChain {
    pub fn rho(&self) -> Vec<Vec<usize>> {
        self.levels.iter().map(|l| l.rho.clone()).collect()
    }
}

/// The constraint on vanishing subsets: inside each component `C` of the enclosing
/// level, the new components `D` satisfy `sum (|D|+1) <= |C|+1`, with equality only
/// for two or more parts. Components that vanish entirely are passed through.
fn check_vanishing_shape(top: &Heart, outer: &[u32], inner: &[u32]) -> Result<()> {
    let inner_set: BTreeSet<u32> = inner.iter().copied().collect();
    let inner_comps = top.serre_components(inner);
    for c in top.serre_components(outer) {
        let parts: Vec<&Vec<u32>> = inner_comps.iter().filter(|d| c.contains(&d[0])).collect();
        if parts.is_empty() || c.iter().all(|l| inner_set.contains(l)) {
            continue;
        }
        let total: usize = parts.iter().map(|d| d.len() + 1).sum();
        let bound = c.len() + 1;
        if total > bound || (total == bound && parts.len() < 2) {
            return Err(MstabError::InvalidMsc(format!(
                "vanishing simples {inner:?} inside component {c:?} violate sum(n_j+1) <= n+1"
            )));
        }
    }
    Ok(())
}

/// Checks level values given per label and returns the next level's label set.
fn check_level(values: &BTreeMap<u32, Cx>, level: usize) -> Result<Vec<u32>> {
    let mut zeros = vec![];
    let mut rest = BTreeMap::new();
    for (&l, v) in values {
        if v.is_zero()? {
            zeros.push(l);
        } else {
            rest.insert(l, v.clone());
        }
    }
    if rest.is_empty() {
        return Err(MstabError::InvalidMsc(format!("charge of level {level} vanishes identically")));
    }
    check_simples(&rest).map_err(|e| match e {
        MstabError::InvalidStability { offending, reason } => {
            MstabError::InvalidMsc(format!("level {level}: {reason} at simples {offending:?}"))
        }
        other => other,
    })?;
    Ok(zeros)
}

impl MultiScaleStab {
    /// Validates charges given per level on simple labels of `top`. Level 0 must list
    /// every simple; level `i+1` exactly the simples on which level `i` vanishes.
    pub fn validate(top: Heart, level_values: &[BTreeMap<u32, Cx>]) -> Result<MultiScaleStab> {
        if level_values.is_empty() {
            return Err(MstabError::InvalidMsc("no levels given".into()));
        }
        let mut expected = top.labels();
        let mut levels = vec![];
        for (i, vals) in level_values.iter().enumerate() {
            let got: Vec<u32> = vals.keys().copied().collect();
            if got != expected {
                return Err(MstabError::InvalidMsc(format!(
                    "level {i} must be given on simples {expected:?}, got {got:?}"
                )));
            }
            let zeros = check_level(vals, i)?;
            if i > 0 {
                check_vanishing_shape(&top, &levels.iter().map(|l: &Level| l.labels.clone()).last().unwrap(), &got)?;
            }
            levels.push(Level { labels: got.clone(), charge: Charge::on_labels(&top, vals)? });
            expected = zeros;
            if expected.is_empty() {
                if i + 1 != level_values.len() {
                    return Err(MstabError::InvalidMsc(format!("level {i} has no zeros but deeper levels were given")));
                }
            } else if i + 1 == level_values.len() {
                return Err(MstabError::InvalidMsc(format!(
                    "level {i} vanishes on {expected:?} but no charge for level {} was given",
                    i + 1
                )));
            }
        }
        Ok(MultiScaleStab { top, levels })
    }

    /// Honest stability condition as a multi-scale one with no levels below zero.
    pub fn from_honest(s: &StabilityCondition) -> MultiScaleStab {
        MultiScaleStab {
            top: s.heart.clone(),
            levels: vec![Level { labels: s.heart.labels(), charge: s.z.clone() }],
        }
    }

    pub fn to_honest(&self) -> Option<StabilityCondition> {
        if self.depth() == 0 {
            Some(StabilityCondition { heart: self.top.clone(), z: self.levels[0].charge.clone() })
        } else {
            None
        }
    }

    /// Number of levels below zero.
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn rank(&self) -> usize {
        self.top.rank()
    }

    pub fn level_values(&self, i: usize) -> Result<BTreeMap<u32, Cx>> {
        self.levels[i].charge.on_simples(&self.top, &self.levels[i].labels)
    }

    /// Labels of `V_i \ V_{i+1}`.
    pub fn quotient_labels(&self, i: usize) -> Vec<u32> {
        let deeper: BTreeSet<u32> =
            self.levels.get(i + 1).map(|l| l.labels.iter().copied().collect()).unwrap_or_default();
        self.levels[i].labels.iter().copied().filter(|l| !deeper.contains(l)).collect()
    }

    pub fn vanishing_labels(&self, i: usize) -> Vec<u32> {
        self.levels.get(i).map(|l| l.labels.clone()).unwrap_or_default()
    }

    /// Re-checks every defining condition on the stored data.
    pub fn check(&self) -> Result<()> {
        let values: Vec<BTreeMap<u32, Cx>> = (0..self.levels.len()).map(|i| self.level_values(i)).collect::<Result<_>>()?;
        let again = MultiScaleStab::validate(self.top.clone(), &values)?;
        for (a, b) in again.levels.iter().zip(&self.levels) {
            if a.labels != b.labels {
                return Err(MstabError::Internal("level labels drifted".into()));
            }
        }
        Ok(())
    }

    pub fn vanishing_chain(&self) -> VanishingChain {
        let levels = self.levels[1..]
            .iter()
            .map(|lvl| {
                let components = self.top.serre_components(&lvl.labels);
                let rho = components.iter().map(|c| c.len()).collect();
                VanishingLevel { labels: lvl.labels.clone(), components, rho }
            })
            .collect();
        VanishingChain { levels }
    }

    pub fn type_rho(&self) -> Vec<Vec<usize>> {
        self.vanishing_chain().rho()
    }

    fn span(&self, i: usize) -> Result<Vec<KClass>> {
        self.vanishing_labels(i).iter().map(|&l| self.top.class_of(l).cloned()).collect()
    }

    /// Scale the charge of level `i` by `c`.
    pub fn scale_level(&self, i: usize, c: &Cx) -> MultiScaleStab {
        let mut m = self.clone();
        m.levels[i].charge = m.levels[i].charge.scale(c);
        m
    }

    /// The C-action restricted to the sub-datum of levels `j..=L`: every level from
    /// `j` down is rotated and its quotient heart tilted; the tilts are lifted to the
    /// top heart. Charges of levels `>= j` are multiplied by `exp(-pi i lambda)`.
    pub fn act_from_level(&self, j: usize, lambda: &Gauss) -> Result<MultiScaleStab> {
        let depth = self.depth();
        if j > depth {
            return Err(MstabError::Invalid(format!("level {j} does not exist")));
        }
        let mut top = self.top.clone();
        let mut base = Q::zero();
        if j == 0 {
            base = lambda.re.floor();
            let k = base.to_integer();
            let k: i64 = k.try_into().map_err(|_| MstabError::Invalid("rotation too large".into()))?;
            top = top.shift(k);
        }
        let mut prev = base.clone();
        for r in chunk_points(&base, &lambda.re) {
            let dir = if r > prev { Direction::Forward } else { Direction::Backward };
            let factor = Cx::rotation(&Gauss::real(r.clone()));
            for i in (j..=depth).rev() {
                let active = self.quotient_labels(i);
                let v = self.vanishing_labels(i + 1);
                let z = &self.levels[i].charge;
                top = tilt_loop(
                    top,
                    &active,
                    dir,
                    |h, l| Ok(&factor * &z.eval(h.class_of(l)?)?),
                    |h, l| lift_quotient_tilt(h, &v, l, dir),
                )?;
            }
            prev = r;
        }
        let rot = Cx::rotation(lambda);
        let mut levels = self.levels.clone();
        for lvl in levels.iter_mut().skip(j) {
            lvl.charge = lvl.charge.scale(&rot);
        }
        let out = MultiScaleStab { top, levels };
        out.check_rotated(j, &lambda.re)?;
        Ok(out)
    }

    /// Validity check that ignores the real rescaling `exp(pi Im lambda)` so that only
    /// exact data enter the half-plane decisions when possible.
    fn check_rotated(&self, j: usize, re: &Q) -> Result<()> {
        let undo = Cx::rotation(&Gauss::real(-re.clone()));
        let decide = Cx::rotation(&Gauss::real(re.clone()));
        let mut m = self.clone();
        for i in j..self.levels.len() {
            let orig = self.levels[i].charge.scale(&undo);
            if orig.is_exact() {
                m.levels[i].charge = orig.scale(&decide);
            }
        }
        m.check()
    }

    pub fn c_act(&self, lambda: &Gauss) -> Result<MultiScaleStab> {
        self.act_from_level(0, lambda)
    }

    /// Merges level `j` into level `j - 1` on the simple decomposition.
    fn merge(&self, j: usize) -> Result<MultiScaleStab> {
        let deeper: BTreeSet<u32> = self.levels[j].labels.iter().copied().collect();
        let mut values = BTreeMap::new();
        for &l in &self.levels[j - 1].labels {
            let c = self.top.class_of(l)?;
            let z = if deeper.contains(&l) { self.levels[j].charge.eval(c)? } else { self.levels[j - 1].charge.eval(c)? };
            values.insert(l, z);
        }
        let mut levels = self.levels.clone();
        levels[j - 1].charge = Charge::on_labels(&self.top, &values)?;
        levels.remove(j);
        Ok(MultiScaleStab { top: self.top.clone(), levels })
    }

    /// Plumbing with parameters `tau_1..tau_L` (`None` is `-i infinity`).
    pub fn plumb(&self, taus: &[Option<Gauss>]) -> Result<MultiScaleStab> {
        if taus.len() != self.depth() {
            return Err(MstabError::LengthMismatch { expected: self.depth(), got: taus.len() });
        }
        for t in taus.iter().flatten() {
            if !t.im.is_negative() {
                return Err(MstabError::Invalid(format!("plumbing parameter {t} must have negative imaginary part")));
            }
        }
        let mut cur = self.clone();
        for j in (1..=self.depth()).rev() {
            if let Some(t) = &taus[j - 1] {
                cur = cur.act_from_level(j, t)?.merge(j)?;
            }
        }
        cur.check().map_err(|e| MstabError::Internal(format!("plumbing produced invalid data: {e}")))?;
        Ok(cur)
    }

    /// Same vanishing subcategories and the same quotient hearts: quotient simple
    /// classes agree up to classes of the next vanishing level.
    pub fn same_combinatorics(&self, other: &MultiScaleStab) -> Result<bool> {
        if self.rank() != other.rank() || self.depth() != other.depth() {
            return Ok(false);
        }
        for i in 0..self.levels.len() {
            let (a, b) = (self.span(i)?, other.span(i)?);
            if a.len() != b.len() || !linalg::same_span(&a, &b) {
                return Ok(false);
            }
        }
        for i in 0..self.levels.len() {
            let deeper = self.span(i + 1)?;
            let qa: Vec<KClass> =
                self.quotient_labels(i).iter().map(|&l| self.top.class_of(l).cloned()).collect::<Result<_>>()?;
            let qb: Vec<KClass> =
                other.quotient_labels(i).iter().map(|&l| other.top.class_of(l).cloned()).collect::<Result<_>>()?;
            if qa.len() != qb.len() {
                return Ok(false);
            }
            let mut used = vec![false; qb.len()];
            for ca in &qa {
                let hit = qb.iter().enumerate().find(|(k, cb)| {
                    !used[*k] && {
                        let d: Vec<i64> = ca.iter().zip(cb.iter()).map(|(x, y)| x - y).collect();
                        d.iter().all(|x| *x == 0) || (!deeper.is_empty() && linalg::coordinates(&deeper, &d).is_some())
                    }
                });
                match hit {
                    Some((k, _)) => used[k] = true,
                    None => return Ok(false),
                }
            }
        }
        Ok(true)
    }

    /// Equivalence: same vanishing subcategories, same quotient hearts, equal level-0
    /// charge and proportional lower charges. With `projective` the level-0 charge may
    /// also differ by a scalar. Numeric charges compare at relative tolerance `tol`.
    pub fn equivalent_tol(&self, other: &MultiScaleStab, projective: bool, tol: f64) -> Result<bool> {
        if !self.same_combinatorics(other)? {
            return Ok(false);
        }
        for i in 0..self.levels.len() {
            let basis = self.span(i)?;
            let za: Vec<Cx> = basis.iter().map(|c| self.levels[i].charge.eval(c)).collect::<Result<_>>()?;
            let zb: Vec<Cx> = basis.iter().map(|c| other.levels[i].charge.eval(c)).collect::<Result<_>>()?;
            let ok = if i == 0 && !projective {
                za.iter().zip(&zb).all(|(x, y)| x.approx_eq(y, tol))
            } else {
                proportional(&za, &zb, tol)
            };
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn equivalent(&self, other: &MultiScaleStab) -> Result<bool> {
        self.equivalent_tol(other, false, 1e-9)
    }

    pub fn projectively_equivalent(&self, other: &MultiScaleStab) -> Result<bool> {
        self.equivalent_tol(other, true, 1e-9)
    }
}

/// Output of [`MultiScaleStab::commutation_defect`].
#[derive(Clone, Debug)]
pub struct DefectReport {
    /// `lambda . (tau * m)`.
    pub tilde: StabilityCondition,
    /// `tau * (lambda . m)`.
    pub hat: StabilityCondition,
    pub max_simple_defect: f64,
    pub bound: f64,
    pub within_bound: bool,
    /// Number of nonzero indecomposable classes of the level-0 quotient.
    pub ell: usize,
    /// Both hearts have every simple in the top heart or its shift.
    pub intermediate: bool,
    /// Every charge difference encloses zero.
    pub zero_certified: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NeighborhoodSpec {
    /// Per base level `1..=L`: bound on `|exp(-pi i tau)|`.
    pub delta: Vec<f64>,
    /// Per level of the candidate; the last entry is reused for deeper levels.
    pub epsilon: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Witness {
    /// Per base level `1..=L`; `None` for levels left unplumbed.
    pub tau: Vec<Option<Complex64>>,
    pub plumbed: MultiScaleStab,
    /// Charge distance per candidate level.
    pub distances: Vec<f64>,
    /// Operator norm of the change between the two simple bases (and its inverse).
    pub norm_constant: f64,
}

#[derive(Clone, Debug)]
pub enum NeighborhoodVerdict {
    Inside(Box<Witness>),
    Outside(String),
}

impl NeighborhoodVerdict {
    pub fn is_inside(&self) -> bool {
        matches!(self, NeighborhoodVerdict::Inside(_))
    }
    pub fn witness(&self) -> Option<&Witness> {
        match self {
            NeighborhoodVerdict::Inside(w) => Some(w),
            NeighborhoodVerdict::Outside(_) => None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChartCoords {
    pub tau: Vec<Option<(f64, f64)>>,
    pub ell: Vec<u64>,
    /// `exp(2 pi i tau / ell)` per level, 0 where nothing is plumbed.
    pub t: Vec<(f64, f64)>,
    /// Pivot simple label per level `1..=L`; its normalized charge is 1.
    pub pivots: Vec<u32>,
    /// Non-pivot charges divided by the pivot charge, per level `1..=L`.
    pub nonpivot_charges: Vec<BTreeMap<u32, (f64, f64)>>,
    /// Charges of the level-0 quotient simples.
    pub level0: BTreeMap<u32, (f64, f64)>,
}

fn c64(z: &Cx) -> Complex64 {
    let (re, im) = z.to_f64();
    Complex64::new(re, im)
}

fn gauss_of(z: Complex64) -> Result<Gauss> {
    let conv = |x: f64| Q::from_float(x).ok_or_else(|| MstabError::Invalid(format!("non-finite parameter {x}")));
    Ok(Gauss::new(conv(z.re)?, conv(z.im)?))
}

/// Largest singular value by power iteration on `m^T m`.
fn operator_norm(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    if n == 0 {
        return 0.0;
    }
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut sigma = 0.0;
    for _ in 0..200 {
        let w: Vec<f64> = (0..n).map(|i| (0..n).map(|j| m[i][j] * v[j]).sum()).collect();
        let u: Vec<f64> = (0..n).map(|j| (0..n).map(|i| m[i][j] * w[i]).sum()).collect();
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let next = norm.sqrt();
        v = u.iter().map(|x| x / norm).collect();
        if (next - sigma).abs() <= 1e-14 * next {
            return next;
        }
        sigma = next;
    }
    sigma
}

impl MultiScaleStab {
    /// Distinct nonzero classes of indecomposables of the top heart modulo the first
    /// vanishing level.
    pub fn quotient_indecomposable_count(&self) -> Result<usize> {
        let v = self.span(1)?;
        let mut reps: Vec<KClass> = vec![];
        for c in self.top.indecomposable_classes()? {
            if !v.is_empty() && linalg::coordinates(&v, &c).is_some() {
                continue;
            }
            let same = |r: &KClass| {
                let d: Vec<i64> = r.iter().zip(&c).map(|(x, y)| x - y).collect();
                d.iter().all(|x| *x == 0) || (!v.is_empty() && linalg::coordinates(&v, &d).is_some())
            };
            if !reps.iter().any(same) {
                reps.push(c);
            }
        }
        Ok(reps.len())
    }

    /// Compares `lambda . (tau * m)` with `tau * (lambda . m)` on the top simples.
    pub fn commutation_defect(&self, lambda: &Gauss, tau: &Gauss) -> Result<DefectReport> {
        if self.depth() != 1 {
            return Err(MstabError::Invalid("commutation defect needs exactly one level below zero".into()));
        }
        let sum = lambda.add(tau);
        if lambda.re.is_negative() || tau.re.is_negative() || sum.re.is_negative() || sum.re >= q(1) {
            return Err(MstabError::Invalid(format!(
                "need 0 <= Re lambda, 0 <= Re tau and Re(lambda + tau) < 1, got lambda = {lambda}, tau = {tau}"
            )));
        }
        let honest = |m: MultiScaleStab| {
            m.to_honest().ok_or_else(|| MstabError::Internal("plumbing left a lower level".into()))
        };
        let tilde = honest(self.plumb(&[Some(tau.clone())])?)?.c_act(lambda)?;
        let hat = honest(self.c_act(lambda)?.plumb(&[Some(tau.clone())])?)?;
        let mut max = 0f64;
        let mut zero_certified = true;
        for s in &self.top.simples {
            let d = &hat.charge(&s.class)? - &tilde.charge(&s.class)?;
            let e = d.enclose();
            zero_certified &= e.re.lo <= 0.0 && e.re.hi >= 0.0 && e.im.lo <= 0.0 && e.im.hi >= 0.0;
            max = max.max(d.abs_f64());
        }
        let ell = self.quotient_indecomposable_count()?;
        let lower: f64 = self.level_values(1)?.values().map(|z| z.abs_f64()).sum();
        let (_, sim) = sum.to_f64();
        let bound = ell as f64 * (std::f64::consts::PI * sim).exp() * lower;
        let within_bound = max <= bound * (1.0 + 1e-9) + 1e-300;
        let intermediate = [&tilde.heart, &hat.heart].iter().all(|h| {
            h.simples.iter().all(|s| match self.top.coordinates(&s.class) {
                Ok(c) => c.iter().all(|x| !x.is_negative()) || c.iter().all(|x| !x.is_positive()),
                Err(_) => false,
            })
        });
        if !intermediate {
            return Err(MstabError::Internal("a heart left the interval of the top heart".into()));
        }
        Ok(DefectReport { tilde, hat, max_simple_defect: max, bound, within_bound, ell, intermediate, zero_certified })
    }

    /// Index of the candidate level whose vanishing span equals this level's span.
    fn matching_level(&self, i: usize, other: &MultiScaleStab) -> Result<Option<usize>> {
        let a = self.span(i)?;
        for k in 0..other.levels.len() {
            let b = other.span(k)?;
            if a.len() == b.len() && linalg::same_span(&a, &b) {
                return Ok(Some(k));
            }
        }
        Ok(None)
    }

    /// Value of the candidate's charge on `class`, from the deepest level whose
    /// span contains it.
    fn deepest_value(&self, class: &[i64]) -> Result<Cx> {
        for lvl in self.levels.iter().rev() {
            if lvl.charge.contains(class) {
                return lvl.charge.eval(class);
            }
        }
        Err(MstabError::Internal("class outside every level".into()))
    }

    /// Smallest label among the quotient simples of level `i`.
    pub fn pivot(&self, i: usize) -> Result<u32> {
        self.quotient_labels(i)
            .first()
            .copied()
            .ok_or_else(|| MstabError::Internal(format!("level {i} has no quotient simple")))
    }

    /// Decides whether `candidate` arises from this datum by plumbing of size at most
    /// `spec.delta` followed by a perturbation of the charges within `spec.epsilon`.
    pub fn in_neighborhood(&self, candidate: &MultiScaleStab, spec: &NeighborhoodSpec) -> Result<NeighborhoodVerdict> {
        let depth = self.depth();
        if spec.delta.len() != depth {
            return Err(MstabError::LengthMismatch { expected: depth, got: spec.delta.len() });
        }
        if spec.epsilon.is_empty() {
            return Err(MstabError::Invalid("no epsilon given".into()));
        }
        if candidate.rank() != self.rank() {
            return Ok(NeighborhoodVerdict::Outside("different rank".into()));
        }
        // which base levels survive, and where they sit in the candidate
        let mut kept = vec![];
        for j in 0..=depth {
            if let Some(k) = self.matching_level(j, candidate)? {
                kept.push((j, k));
            }
        }
        if kept.len() != candidate.levels.len() || kept.first() != Some(&(0, 0)) {
            return Ok(NeighborhoodVerdict::Outside("vanishing chain is not obtained by merging levels".into()));
        }
        let level_in_candidate = |j: usize| kept.iter().rev().find(|(b, _)| *b <= j).map(|&(_, k)| k).unwrap_or(0);
        let mut u = vec![];
        for j in 0..=depth {
            let pivot = self.top.class_of(self.pivot(j)?)?.clone();
            let k = level_in_candidate(j);
            let num = c64(&candidate.levels[k].charge.eval(&pivot)?);
            let den = c64(&self.levels[j].charge.eval(&pivot)?);
            u.push(num / den);
        }
        let mut taus: Vec<Option<Complex64>> = vec![None; depth];
        let mut plumbed = vec![];
        for j in 1..=depth {
            if kept.iter().any(|&(b, _)| b == j) {
                continue;
            }
            let r = u[j] / u[j - 1];
            if !(r.norm() > 0.0) || r.norm() >= 1.0 {
                return Ok(NeighborhoodVerdict::Outside(format!("level {j}: ratio {r} is not a plumbing factor")));
            }
            if r.norm() > spec.delta[j - 1] {
                return Ok(NeighborhoodVerdict::Outside(format!(
                    "level {j}: plumbing size {} exceeds delta {}",
                    r.norm(),
                    spec.delta[j - 1]
                )));
            }
            taus[j - 1] = Some(Complex64::i() * r.ln() / std::f64::consts::PI);
            plumbed.push(j);
        }
        // real translates by even integers give the same charge
        const SHIFTS: [i64; 7] = [0, 1, -1, 2, -2, 3, -3];
        let combos = SHIFTS.len().pow(plumbed.len() as u32);
        let mut best: Option<Witness> = None;
        let mut last_reason = String::from("no real translate of the recovered parameters matches");
        for code in 0..combos {
            let mut t = taus.clone();
            let mut c = code;
            for &j in &plumbed {
                let m = SHIFTS[c % SHIFTS.len()];
                c /= SHIFTS.len();
                t[j - 1] = t[j - 1].map(|z| z + Complex64::new(2.0 * m as f64, 0.0));
            }
            let gt: Vec<Option<Gauss>> = t.iter().map(|z| z.map(gauss_of).transpose()).collect::<Result<_>>()?;
            let p = match self.plumb(&gt) {
                Ok(p) => p,
                Err(MstabError::Precision(e)) | Err(MstabError::WallHit(e)) => {
                    last_reason = e;
                    continue;
                }
                Err(e) => return Err(e),
            };
            if !p.same_combinatorics(candidate)? {
                continue;
            }
            let distances = charge_distances(&p, candidate, &self.top)?;
            let ok = distances
                .iter()
                .enumerate()
                .all(|(k, d)| *d <= spec.epsilon[k.min(spec.epsilon.len() - 1)]);
            if !ok {
                last_reason = format!("charge distances {distances:?} exceed epsilon");
                continue;
            }
            best = Some(Witness { tau: t, plumbed: p, distances, norm_constant: basis_change_norm(&self.top, &candidate.top)? });
            break;
        }
        Ok(match best {
            Some(w) => NeighborhoodVerdict::Inside(Box::new(w)),
            None => NeighborhoodVerdict::Outside(last_reason),
        })
    }

    /// Chart coordinates of `point` around this datum.
    pub fn chart_coords(&self, point: &MultiScaleStab, spec: &NeighborhoodSpec) -> Result<ChartCoords> {
        let w = match self.in_neighborhood(point, spec)? {
            NeighborhoodVerdict::Inside(w) => w,
            NeighborhoodVerdict::Outside(r) => {
                return Err(MstabError::Invalid(format!("point is outside the neighborhood: {r}")))
            }
        };
        let ell: Vec<u64> = if self.depth() == 0 {
            vec![]
        } else {
            crate::klattice::simple_twist_data(&self.type_rho())?.levels.iter().map(|l| l.ell).collect()
        };
        let t = w
            .tau
            .iter()
            .zip(&ell)
            .map(|(tau, &l)| match tau {
                Some(tau) => {
                    let z = (Complex64::new(0.0, 2.0 * std::f64::consts::PI) * tau / l as f64).exp();
                    (z.re, z.im)
                }
                None => (0.0, 0.0),
            })
            .collect();
        let value = |l: u32| -> Result<Complex64> { Ok(c64(&point.deepest_value(self.top.class_of(l)?)?)) };
        let mut level0 = BTreeMap::new();
        for l in self.quotient_labels(0) {
            let z = value(l)?;
            level0.insert(l, (z.re, z.im));
        }
        let mut pivots = vec![];
        let mut nonpivot_charges = vec![];
        for i in 1..=self.depth() {
            let p = self.pivot(i)?;
            let zp = value(p)?;
            let mut m = BTreeMap::new();
            for l in self.quotient_labels(i).into_iter().filter(|&l| l != p) {
                let z = value(l)? / zp;
                m.insert(l, (z.re, z.im));
            }
            pivots.push(p);
            nonpivot_charges.push(m);
        }
        Ok(ChartCoords {
            tau: w.tau.iter().map(|z| z.map(|z| (z.re, z.im))).collect(),
            ell,
            t,
            pivots,
            nonpivot_charges,
            level0,
        })
    }
}

/// Per level of `a`: distance of the charges of `a` and `b` on the simples of
/// `reference` lying in that level. Level 0 compares on the nose, deeper levels after
/// the best complex rescaling of `b`.
fn charge_distances(a: &MultiScaleStab, b: &MultiScaleStab, reference: &Heart) -> Result<Vec<f64>> {
    let mut out = vec![];
    for (k, lvl) in a.levels.iter().enumerate() {
        let mut za = vec![];
        let mut zb = vec![];
        for &l in &lvl.labels {
            let c = reference.class_of(l)?;
            za.push(c64(&lvl.charge.eval(c)?));
            zb.push(c64(&b.levels[k].charge.eval(c)?));
        }
        let s = if k == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            let num: Complex64 = za.iter().zip(&zb).map(|(x, y)| x * y.conj()).sum();
            let den: f64 = zb.iter().map(|y| y.norm_sqr()).sum();
            if den == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                num / den
            }
        };
        let d: f64 = za.iter().zip(&zb).map(|(x, y)| (x - s * y).norm_sqr()).sum::<f64>().sqrt();
        out.push(d);
    }
    Ok(out)
}

/// `max(|M|, |M^-1|)` for the matrix expressing the simples of `b` in those of `a`.
fn basis_change_norm(a: &Heart, b: &Heart) -> Result<f64> {
    let cols: Vec<Vec<Q>> = b.simples.iter().map(|s| a.coordinates(&s.class)).collect::<Result<_>>()?;
    let n = cols.len();
    let to_f = |x: &Q| x.to_f64().unwrap_or(f64::NAN);
    let m: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| to_f(&cols[j][i])).collect()).collect();
    let back: Vec<Vec<Q>> = a.simples.iter().map(|s| b.coordinates(&s.class)).collect::<Result<_>>()?;
    let mi: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| to_f(&back[j][i])).collect()).collect();
    Ok(operator_norm(&m).max(operator_norm(&mi)))
}

/// `a = s * b` for one nonzero complex `s`.
fn proportional(a: &[Cx], b: &[Cx], tol: f64) -> bool {
    let Some(k) = (0..a.len()).max_by(|&x, &y| b[x].abs_f64().total_cmp(&b[y].abs_f64())) else {
        return true;
    };
    if b[k].abs_f64() == 0.0 || a[k].abs_f64() == 0.0 {
        return false;
    }
    if a.iter().chain(b).all(|z| z.is_symbolic()) {
        return (0..a.len()).all(|t| (&(&a[t] * &b[k]) - &(&a[k] * &b[t])).is_zero().unwrap_or(false));
    }
    let (ar, ai) = a[k].to_f64();
    let (br, bi) = b[k].to_f64();
    let d = br * br + bi * bi;
    let s = ((ar * br + ai * bi) / d, (ai * br - ar * bi) / d);
    let sc = Cx::from_f64(s.0, s.1);
    (0..a.len()).all(|t| a[t].approx_eq(&(&sc * &b[t]), tol))
}

/// `Some(tau)` for every level.
pub fn finite_taus(taus: &[Gauss]) -> Vec<Option<Gauss>> {
    taus.iter().cloned().map(Some).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::number::qf;

    fn gauss_i(re: i64, im: i64) -> Gauss {
        Gauss::new(q(re), q(im))
    }

    /// The A2 limit datum with Z_1(E) = -1.
    fn a2_limit() -> MultiScaleStab {
        let top = Heart::standard(2).unwrap().forward_tilt(2).unwrap();
        let l0 = BTreeMap::from([(2, Cx::from_i64(-1, 0)), (1, Cx::zero())]);
        let l1 = BTreeMap::from([(1, Cx::from_i64(-1, 0))]);
        MultiScaleStab::validate(top, &[l0, l1]).unwrap()
    }

    #[test]
    fn a2_limit_validates() {
        let m = a2_limit();
        assert_eq!(m.depth(), 1);
        assert_eq!(m.type_rho(), vec![vec![1]]);
    }

    #[test]
    fn positive_real_lowest_level_is_rejected() {
        let top = Heart::standard(2).unwrap().forward_tilt(2).unwrap();
        let l0 = BTreeMap::from([(2, Cx::from_i64(-1, 0)), (1, Cx::zero())]);
        let l1 = BTreeMap::from([(1, Cx::from_i64(1, 0))]);
        assert!(MultiScaleStab::validate(top, &[l0, l1]).is_err());
    }

    #[test]
    fn missing_level_is_rejected() {
        let h = Heart::standard(2).unwrap();
        let l0 = BTreeMap::from([(1, Cx::zero()), (2, Cx::i())]);
        assert!(MultiScaleStab::validate(h.clone(), &[l0.clone()]).is_err());
        let l1 = BTreeMap::from([(1, Cx::i())]);
        assert!(MultiScaleStab::validate(h, &[l0, l1]).is_ok());
    }

    #[test]
    fn plumb_imaginary() {
        let m = a2_limit();
        let p = m.plumb(&[Some(gauss_i(0, -2))]).unwrap();
        assert_eq!(p.depth(), 0);
        let v = p.level_values(0).unwrap();
        assert!(v[&2].approx_eq(&Cx::from_i64(-1, 0), 0.0));
        let e = (-2.0 * std::f64::consts::PI).exp();
        assert!(v[&1].approx_eq(&Cx::from_f64(-e, 0.0), 1e-12));
    }

    #[test]
    fn plumb_with_shift() {
        let m = a2_limit();
        let p = m.plumb(&[Some(gauss_i(1, -2))]).unwrap();
        assert_eq!(p.top.class_of(1).unwrap(), &vec![-1, -1]);
        let v = p.level_values(0).unwrap();
        let e = (-2.0 * std::f64::consts::PI).exp();
        assert!(v[&1].approx_eq(&Cx::from_f64(-e, 0.0), 1e-12));
        assert!(v[&2].approx_eq(&Cx::from_i64(-1, 0), 0.0));
    }

    #[test]
    fn equivalence_scalars() {
        let m = a2_limit();
        let m2 = m.scale_level(1, &Cx::from_i64(2, 0));
        assert!(m.equivalent(&m2).unwrap());
        let m3 = m.scale_level(0, &Cx::from_i64(2, 0));
        assert!(!m.equivalent(&m3).unwrap());
        assert!(m.projectively_equivalent(&m3).unwrap());
    }

    #[test]
    fn shift_action() {
        let m = a2_limit();
        let s = m.c_act(&Gauss::real(q(1))).unwrap();
        assert!(s.top.same_as(&m.top.shift(1)));
        let half = m.c_act(&Gauss::real(qf(1, 2))).unwrap();
        assert_eq!(half.vanishing_labels(1), vec![1]);
        half.check().unwrap();
    }

    #[test]
    fn defect_within_bound() {
        let m = a2_limit();
        let r = m.commutation_defect(&Gauss::real(qf(1, 4)), &Gauss::new(qf(1, 4), q(-3))).unwrap();
        assert!(r.within_bound, "{} > {}", r.max_simple_defect, r.bound);
        assert_eq!(r.ell, 1);
        let r = m.commutation_defect(&Gauss::new(q(0), qf(1, 2)), &Gauss::new(qf(1, 3), q(-1))).unwrap();
        assert!(r.zero_certified);
        assert!(m.commutation_defect(&Gauss::real(qf(3, 4)), &Gauss::new(qf(1, 2), q(-1))).is_err());
    }

    #[test]
    fn defect_decays() {
        let m = a2_limit();
        let lam = Gauss::real(qf(1, 3));
        let d: Vec<f64> = [-1, -10, -20]
            .iter()
            .map(|&y| m.commutation_defect(&lam, &Gauss::new(qf(1, 2), q(y))).unwrap().max_simple_defect)
            .collect();
        assert!(d[1] <= d[0] && d[2] <= d[1]);
    }

    fn loose() -> NeighborhoodSpec {
        NeighborhoodSpec { delta: vec![0.5], epsilon: vec![1e-9] }
    }

    #[test]
    fn neighborhood_roundtrip() {
        let m = a2_limit();
        let tau = Gauss::new(qf(1, 3), q(-2));
        let p = m.plumb(&[Some(tau)]).unwrap();
        let v = m.in_neighborhood(&p, &loose()).unwrap();
        let w = v.witness().expect("inside");
        let t = w.tau[0].unwrap();
        assert!((t.im + 2.0).abs() < 1e-9);
        let k = (t.re - 1.0 / 3.0) / 2.0;
        assert!((k - k.round()).abs() < 1e-9);
        assert!(w.plumbed.equivalent(&p).unwrap());
        assert!(m.in_neighborhood(&m, &loose()).unwrap().witness().unwrap().tau[0].is_none());
        let tight = NeighborhoodSpec { delta: vec![1e-4], epsilon: vec![1e-9] };
        assert!(!m.in_neighborhood(&p, &tight).unwrap().is_inside());
        let other = StabilityCondition::from_values(
            Heart::standard(2).unwrap(),
            &BTreeMap::from([(1, Cx::i()), (2, Cx::i())]),
        )
        .unwrap();
        assert!(!m.in_neighborhood(&MultiScaleStab::from_honest(&other), &loose()).unwrap().is_inside());
    }

    #[test]
    fn chart_of_plumbed_point() {
        let m = a2_limit();
        let c = m.chart_coords(&m, &loose()).unwrap();
        assert_eq!(c.t, vec![(0.0, 0.0)]);
        assert_eq!(c.ell, vec![2]);
        let p = m.plumb(&[Some(gauss_i(0, -2))]).unwrap();
        let c = m.chart_coords(&p, &loose()).unwrap();
        let e = (2.0 * std::f64::consts::PI).exp();
        assert!((c.t[0].0 - e).abs() < 1e-9 * e && c.t[0].1.abs() < 1e-9 * e);
    }
}
