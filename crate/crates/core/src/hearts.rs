//! Finite hearts as combinatorial data: simple labels with K-classes, the
//! ext-quiver on the labels, and the tilt word that produced them.
//!
//! A simple keeps its label through tilts, so `S_2[1]` still has label 2.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::anquiver::{make_linear, KClass, QuiverWithPotential};
use crate::error::{MstabError, Result};
use crate::linalg;
use crate::number::Q;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Simple {
    pub label: u32,
    pub class: KClass,
}

/// Signed labels (`+s` forward tilt at `s`, `-s` backward) and a global shift.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub word: Vec<i64>,
    pub shift: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn opposite(self) -> Direction {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Heart {
    /// Sorted by label.
    pub simples: Vec<Simple>,
    pub extquiver: QuiverWithPotential,
    pub provenance: Provenance,
}

/// Simple classes in sorted order plus the ext-quiver transported to positions in that order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalKey {
    pub classes: Vec<KClass>,
    pub arrows: Vec<(usize, usize)>,
    pub cycles: Vec<[usize; 3]>,
}

impl fmt::Display for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cs: Vec<String> = self
            .classes
            .iter()
            .map(|c| c.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
            .collect();
        write!(f, "{}", cs.join("|"))
    }
}

impl Heart {
    /// Standard heart of the linear `A_n` quiver.
    pub fn standard(n: usize) -> Result<Heart> {
        Ok(Heart::standard_from(&make_linear(n)?))
    }

    /// Standard heart of `mod J(Q, W)`: simples `e_v` in the vertex order of `q`.
    pub fn standard_from(q: &QuiverWithPotential) -> Heart {
        let n = q.rank();
        let simples = q
            .vertices
            .iter()
            .enumerate()
            .map(|(i, &v)| Simple { label: v, class: crate::klattice::unit(n, i) })
            .collect();
        Heart { simples, extquiver: q.clone(), provenance: Provenance::default() }
    }

    pub fn rank(&self) -> usize {
        self.simples.len()
    }

    pub fn labels(&self) -> Vec<u32> {
        self.simples.iter().map(|s| s.label).collect()
    }

    fn index(&self, label: u32) -> Result<usize> {
        self.simples.binary_search_by_key(&label, |s| s.label).map_err(|_| MstabError::UnknownLabel(label))
    }

    pub fn class_of(&self, label: u32) -> Result<&KClass> {
        Ok(&self.simples[self.index(label)?].class)
    }

    pub fn label_of_class(&self, class: &[i64]) -> Option<u32> {
        self.simples.iter().find(|s| s.class == class).map(|s| s.label)
    }

    /// `dim Ext^1(S_a, S_b)`.
    pub fn ext1(&self, a: u32, b: u32) -> i64 {
        self.extquiver.has_arrow(a, b) as i64
    }

    fn arrow(&self, dir: Direction, a: u32, b: u32) -> bool {
        match dir {
            Direction::Forward => self.extquiver.has_arrow(a, b),
            Direction::Backward => self.extquiver.has_arrow(b, a),
        }
    }

    /// Simple tilt. Forward at `s`: `s` becomes `s[1]`, every `t` with `Ext^1(t, s) != 0`
    /// becomes the extension of `t` by `s`. Backward is the mirror image.
    pub fn tilt(&self, s: u32, dir: Direction) -> Result<Heart> {
        let i = self.index(s)?;
        let cs = self.simples[i].class.clone();
        let mut simples = self.simples.clone();
        for t in simples.iter_mut() {
            if t.label == s {
                for x in t.class.iter_mut() {
                    *x = -*x;
                }
            } else if self.arrow(dir, t.label, s) {
                for (x, y) in t.class.iter_mut().zip(&cs) {
                    *x += y;
                }
            }
        }
        let mut provenance = self.provenance.clone();
        provenance.word.push(match dir {
            Direction::Forward => s as i64,
            Direction::Backward => -(s as i64),
        });
        Ok(Heart { simples, extquiver: self.extquiver.mutate(s)?, provenance })
    }

    pub fn forward_tilt(&self, s: u32) -> Result<Heart> {
        self.tilt(s, Direction::Forward)
    }

    pub fn backward_tilt(&self, s: u32) -> Result<Heart> {
        self.tilt(s, Direction::Backward)
    }

    /// Applies a signed tilt word.
    pub fn apply_word(&self, word: &[i64]) -> Result<Heart> {
        let mut h = self.clone();
        for &w in word {
            if w == 0 {
                return Err(MstabError::Invalid("tilt word letter 0".into()));
            }
            let dir = if w > 0 { Direction::Forward } else { Direction::Backward };
            h = h.tilt(w.unsigned_abs() as u32, dir)?;
        }
        Ok(h)
    }

    /// The heart `h[k]`.
    pub fn shift(&self, k: i64) -> Heart {
        let mut h = self.clone();
        if k % 2 != 0 {
            for s in h.simples.iter_mut() {
                for x in s.class.iter_mut() {
                    *x = -*x;
                }
            }
        }
        h.provenance.shift += k;
        h
    }

    /// Successive forward tilts at simples of the listed classes.
    pub fn tilt_torsion_free(&self, gens: &[KClass]) -> Result<Heart> {
        let mut h = self.clone();
        for (step, g) in gens.iter().enumerate() {
            let s = h.label_of_class(g).ok_or(MstabError::NotSimpleAtStep { step })?;
            h = h.forward_tilt(s)?;
        }
        Ok(h)
    }

    pub fn canonical_key(&self) -> CanonicalKey {
        let mut order: Vec<usize> = (0..self.rank()).collect();
        order.sort_by(|&a, &b| self.simples[a].class.cmp(&self.simples[b].class));
        let pos: BTreeMap<u32, usize> =
            order.iter().enumerate().map(|(p, &i)| (self.simples[i].label, p)).collect();
        let mut arrows: Vec<(usize, usize)> =
            self.extquiver.arrows.iter().map(|(a, b)| (pos[a], pos[b])).collect();
        arrows.sort_unstable();
        let mut cycles: Vec<[usize; 3]> = self
            .extquiver
            .cycles
            .iter()
            .map(|c| {
                let m = [pos[&c[0]], pos[&c[1]], pos[&c[2]]];
                let k = (0..3).min_by_key(|&i| m[i]).unwrap();
                [m[k], m[(k + 1) % 3], m[(k + 2) % 3]]
            })
            .collect();
        cycles.sort_unstable();
        CanonicalKey { classes: order.iter().map(|&i| self.simples[i].class.clone()).collect(), arrows, cycles }
    }

    /// Equality of canonical forms (provenance is ignored).
    pub fn same_as(&self, other: &Heart) -> bool {
        self.canonical_key() == other.canonical_key()
    }

    /// Coordinates of `class` in the basis of simple classes.
    pub fn coordinates(&self, class: &[i64]) -> Result<Vec<Q>> {
        let basis: Vec<KClass> = self.simples.iter().map(|s| s.class.clone()).collect();
        linalg::coordinates(&basis, class)
            .ok_or_else(|| MstabError::Internal(format!("class {class:?} outside the span of the simples")))
    }

    /// True when `class` is a nonnegative combination of the simple classes.
    pub fn in_positive_cone(&self, class: &[i64]) -> Result<bool> {
        use num_traits::Signed;
        Ok(self.coordinates(class)?.iter().all(|c| !c.is_negative()))
    }

    /// Classes of all indecomposables of the heart.
    pub fn indecomposable_classes(&self) -> Result<Vec<KClass>> {
        let n = self.rank();
        let strings = self.extquiver.enumerate_strings()?;
        let mut out = vec![];
        for s in strings {
            let mut c = vec![0i64; n];
            for (p, &d) in s.dimension_vector.iter().enumerate() {
                if d != 0 {
                    let cls = self.class_of(self.extquiver.vertices[p])?;
                    for (x, y) in c.iter_mut().zip(cls) {
                        *x += d * y;
                    }
                }
            }
            out.push(c);
        }
        Ok(out)
    }

    /// The Euler form in the ambient basis, computed from this heart's ext-quiver.
    /// Independent of the heart.
    pub fn euler_form(&self) -> Result<Vec<Vec<Q>>> {
        let n = self.rank();
        let cols: Vec<Vec<i64>> = (0..n).map(|r| self.simples.iter().map(|s| s.class[r]).collect()).collect();
        let cinv = linalg::inverse(&cols).ok_or_else(|| MstabError::Internal("simple classes not a basis".into()))?;
        let x: Vec<Vec<i64>> = self
            .simples
            .iter()
            .map(|a| self.simples.iter().map(|b| self.extquiver.chi(a.label, b.label)).collect())
            .collect();
        let mut g = vec![vec![Q::default(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = Q::default();
                for a in 0..n {
                    for b in 0..n {
                        if x[a][b] != 0 {
                            acc += &cinv[a][i] * &cinv[b][j] * crate::number::q(x[a][b]);
                        }
                    }
                }
                g[i][j] = acc;
            }
        }
        Ok(g)
    }

    /// Structural checks: classes form a Z-basis, ext-quiver lives on the labels,
    /// and no simple has more than two incoming or outgoing extensions.
    pub fn check_invariants(&self) -> Result<()> {
        let rows: Vec<Vec<i64>> = self.simples.iter().map(|s| s.class.clone()).collect();
        if linalg::det_i64(&rows).abs() != 1 {
            return Err(MstabError::Internal("simple classes do not form a Z-basis".into()));
        }
        if self.extquiver.vertices != self.labels() {
            return Err(MstabError::Internal("ext-quiver vertices differ from labels".into()));
        }
        for &l in &self.extquiver.vertices {
            if self.extquiver.in_neighbors(l).len() > 2 || self.extquiver.out_neighbors(l).len() > 2 {
                return Err(MstabError::Internal(format!("simple {l} has more than two extensions")));
            }
        }
        Ok(())
    }

    /// Connected components of the ext-quiver restricted to `labels`.
    pub fn serre_components(&self, labels: &[u32]) -> Vec<Vec<u32>> {
        self.extquiver.restrict(labels).components()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }
}

/// Hearts reachable by forward tilts, breadth first.
#[derive(Clone, Debug)]
pub struct ExchangeGraph {
    pub hearts: Vec<Heart>,
    /// `(from, to, label)`
    pub edges: Vec<(usize, usize, u32)>,
}

impl ExchangeGraph {
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph exchange {\n");
        for (i, h) in self.hearts.iter().enumerate() {
            s.push_str(&format!("  h{i} [label=\"{}\"];\n", h.canonical_key()));
        }
        for (a, b, l) in &self.edges {
            s.push_str(&format!("  h{a} -> h{b} [label=\"{l}\"];\n"));
        }
        s.push_str("}\n");
        s
    }
}

/// Closure of `h0` under forward tilts up to `radius` steps. Edges leaving the
/// last layer are included when their target is already known.
pub fn exchange_graph(h0: &Heart, radius: usize) -> Result<ExchangeGraph> {
    let mut index: BTreeMap<CanonicalKey, usize> = BTreeMap::new();
    let mut hearts = vec![h0.clone()];
    index.insert(h0.canonical_key(), 0);
    let mut edges = vec![];
    let mut frontier = vec![0usize];
    for _ in 0..radius {
        let mut next = vec![];
        for &i in &frontier {
            for l in hearts[i].labels() {
                let t = hearts[i].forward_tilt(l)?;
                let key = t.canonical_key();
                let j = match index.get(&key) {
                    Some(&j) => j,
                    None => {
                        hearts.push(t);
                        index.insert(key, hearts.len() - 1);
                        next.push(hearts.len() - 1);
                        hearts.len() - 1
                    }
                };
                edges.push((i, j, l));
            }
        }
        frontier = next;
    }
    Ok(ExchangeGraph { hearts, edges })
}

/// All hearts between `h` and `h[1]`: forward tilts at simples lying in `h`.
pub fn interval_hearts(h: &Heart) -> Result<Vec<Heart>> {
    let mut seen = BTreeSet::from([h.canonical_key()]);
    let mut out = vec![h.clone()];
    let mut queue = VecDeque::from([h.clone()]);
    let cap = 10_000;
    while let Some(cur) = queue.pop_front() {
        for s in &cur.simples {
            if !h.in_positive_cone(&s.class)? {
                continue;
            }
            let t = cur.forward_tilt(s.label)?;
            if seen.insert(t.canonical_key()) {
                out.push(t.clone());
                queue.push_back(t);
                if out.len() > cap {
                    return Err(MstabError::CapExceeded("interval of hearts too large".into()));
                }
            }
        }
    }
    Ok(out)
}

/// Result of making a heart convenient for a tilt at `s0` relative to a Serre subset.
#[derive(Clone, Debug)]
pub struct Convenient {
    pub heart: Heart,
    /// Labels tilted at, in order.
    pub word: Vec<u32>,
    /// Classes tilted at, in order (`S_1, S_12, ..., S_1..m`, then the second chain).
    pub generators: Vec<KClass>,
}

/// Tilts inside `v` along the chains `S_1, S_12, ..., S_1..m` until no simple of `v`
/// extends `s0` (for `Forward`: no arrow `T -> s0`; for `Backward`: no arrow `s0 -> T`).
pub fn convenient_representative_dir(h: &Heart, v: &[u32], s0: u32, dir: Direction) -> Result<Convenient> {
    if v.contains(&s0) {
        return Err(MstabError::Invalid(format!("simple {s0} lies in the Serre subset")));
    }
    h.class_of(s0)?;
    for &l in v {
        h.class_of(l)?;
    }
    let vset: BTreeSet<u32> = v.iter().copied().collect();
    let mut cur = h.clone();
    let mut word = vec![];
    let mut generators = vec![];
    for _round in 0..=h.rank() {
        let first = vset.iter().copied().find(|&t| cur.arrow(dir, t, s0));
        let Some(s1) = first else {
            return Ok(Convenient { heart: cur, word, generators });
        };
        let mut chain = vec![s1];
        let (mut prev2, mut prev) = (s0, s1);
        while let Some(next) = vset
            .iter()
            .copied()
            .find(|&t| !chain.contains(&t) && cur.arrow(dir, t, prev) && !cur.arrow(dir, t, prev2))
        {
            chain.push(next);
            prev2 = prev;
            prev = next;
        }
        let original: Vec<KClass> = chain.iter().map(|&c| cur.class_of(c).cloned()).collect::<Result<_>>()?;
        let mut expected = vec![0i64; h.simples[0].class.len()];
        for (k, &c) in chain.iter().enumerate() {
            for (x, y) in expected.iter_mut().zip(&original[k]) {
                *x += y;
            }
            if cur.class_of(c)? != &expected {
                return Err(MstabError::Internal(format!("chain element {c} does not carry the expected class")));
            }
            generators.push(expected.clone());
            cur = cur.tilt(c, dir)?;
            word.push(c);
        }
    }
    Err(MstabError::CapExceeded("convenient representative did not stabilise".into()))
}

/// Shortest sequence of simple tilts inside `v` (either direction) reaching a heart in
/// which no simple of `v` extends `s0` in direction `dir`.
fn convenient_by_search(h: &Heart, v: &[u32], s0: u32, dir: Direction) -> Result<Vec<(u32, Direction)>> {
    let done = |c: &Heart| !v.iter().any(|&t| c.arrow(dir, t, s0));
    let mut seen = BTreeSet::from([h.canonical_key()]);
    let mut queue = VecDeque::from([(h.clone(), vec![])]);
    let cap = 20_000;
    while let Some((cur, path)) = queue.pop_front() {
        if done(&cur) {
            return Ok(path);
        }
        for &t in v {
            for d in [Direction::Forward, Direction::Backward] {
                let next = cur.tilt(t, d)?;
                if seen.insert(next.canonical_key()) {
                    if seen.len() > cap {
                        return Err(MstabError::CapExceeded(format!("no convenient heart for {s0} relative to {v:?}")));
                    }
                    let mut p = path.clone();
                    p.push((t, d));
                    queue.push_back((next, p));
                }
            }
        }
    }
    Err(MstabError::CapExceeded(format!("no convenient heart for {s0} relative to {v:?}")))
}

pub fn convenient_representative(h: &Heart, v: &[u32], s0: u32) -> Result<Convenient> {
    convenient_representative_dir(h, v, s0, Direction::Forward)
}

/// Lifts the simple tilt at `s0` of the quotient by `v` to a tilt of `h` that leaves
/// the simples of `v` unchanged: make convenient, tilt at `s0`, then undo the chain.
pub fn lift_quotient_tilt(h: &Heart, v: &[u32], s0: u32, dir: Direction) -> Result<Heart> {
    let steps = match convenient_representative_dir(h, v, s0, dir) {
        Ok(conv) => conv.word.iter().map(|&c| (c, dir)).collect(),
        // the chain construction needs the ext-quiver on `v` to be acyclic near `s0`
        Err(MstabError::Internal(_)) => convenient_by_search(h, v, s0, dir)?,
        Err(e) => return Err(e),
    };
    let mut cur = h.clone();
    for &(c, d) in &steps {
        cur = cur.tilt(c, d)?;
    }
    cur = cur.tilt(s0, dir)?;
    for &(c, d) in steps.iter().rev() {
        cur = cur.tilt(c, d.opposite())?;
    }
    for &l in v {
        if cur.class_of(l)? != h.class_of(l)? {
            return Err(MstabError::Internal(format!("lifted tilt at {s0} moved vanishing simple {l}")));
        }
    }
    Ok(cur)
}
