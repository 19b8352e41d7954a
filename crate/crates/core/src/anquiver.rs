//! Quivers with potential of A_n type.
//!
//! An arrow `v -> w` records `dim Ext^1(S_v, S_w) = 1`. The potential is kept
//! as its set of oriented 3-cycles; in A_n type nothing else can occur.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{MstabError, Result};

pub type KClass = Vec<i64>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QuiverWithPotential {
    pub vertices: Vec<u32>,
    pub arrows: Vec<(u32, u32)>,
    pub cycles: Vec<[u32; 3]>,
}

/// Rotate a cycle so that its smallest vertex comes first.
fn normalize_cycle(c: [u32; 3]) -> [u32; 3] {
    let k = (0..3).min_by_key(|&i| c[i]).unwrap();
    [c[k], c[(k + 1) % 3], c[(k + 2) % 3]]
}

fn cycle_arrows(c: &[u32; 3]) -> [(u32, u32); 3] {
    [(c[0], c[1]), (c[1], c[2]), (c[2], c[0])]
}

impl QuiverWithPotential {
    pub fn new(vertices: Vec<u32>, arrows: Vec<(u32, u32)>, cycles: Vec<[u32; 3]>) -> Result<Self> {
        let vset: BTreeSet<u32> = vertices.iter().copied().collect();
        if vset.len() != vertices.len() {
            return Err(MstabError::Invalid("repeated vertex".into()));
        }
        let mut aset = BTreeSet::new();
        for &(s, t) in &arrows {
            for v in [s, t] {
                if !vset.contains(&v) {
                    return Err(MstabError::UnknownVertex(v));
                }
            }
            if s == t {
                return Err(MstabError::Invalid(format!("loop at {s}")));
            }
            if !aset.insert((s, t)) {
                return Err(MstabError::Invalid(format!("multiple arrow {s}->{t}")));
            }
        }
        for &(s, t) in &arrows {
            if aset.contains(&(t, s)) {
                return Err(MstabError::Invalid(format!("2-cycle between {s} and {t}")));
            }
        }
        let mut used = BTreeSet::new();
        let mut cset = BTreeSet::new();
        for c in &cycles {
            for a in cycle_arrows(c) {
                if !aset.contains(&a) {
                    return Err(MstabError::Invalid(format!("cycle {c:?} uses missing arrow {}->{}", a.0, a.1)));
                }
                if !used.insert(a) {
                    return Err(MstabError::Invalid(format!("arrow {}->{} lies in two cycles", a.0, a.1)));
                }
            }
            cset.insert(normalize_cycle(*c));
        }
        Ok(QuiverWithPotential {
            vertices: vset.into_iter().collect(),
            arrows: aset.into_iter().collect(),
            cycles: cset.into_iter().collect(),
        })
    }

    pub fn empty() -> Self {
        QuiverWithPotential { vertices: vec![], arrows: vec![], cycles: vec![] }
    }

    pub fn rank(&self) -> usize {
        self.vertices.len()
    }

    pub fn has_vertex(&self, v: u32) -> bool {
        self.vertices.binary_search(&v).is_ok()
    }

    pub fn position(&self, v: u32) -> Result<usize> {
        self.vertices.binary_search(&v).map_err(|_| MstabError::UnknownVertex(v))
    }

    pub fn has_arrow(&self, s: u32, t: u32) -> bool {
        self.arrows.binary_search(&(s, t)).is_ok()
    }

    pub fn out_neighbors(&self, v: u32) -> Vec<u32> {
        self.arrows.iter().filter(|a| a.0 == v).map(|a| a.1).collect()
    }

    pub fn in_neighbors(&self, v: u32) -> Vec<u32> {
        self.arrows.iter().filter(|a| a.1 == v).map(|a| a.0).collect()
    }

    /// True when `a -> b -> c` is a path of two arrows inside one potential cycle.
    pub fn is_relation(&self, a: u32, b: u32, c: u32) -> bool {
        self.cycles.binary_search(&normalize_cycle([a, b, c])).is_ok()
    }

    /// Mutation at `k` with 2-cycle cancellation.
    pub fn mutate(&self, k: u32) -> Result<Self> {
        if !self.has_vertex(k) {
            return Err(MstabError::UnknownVertex(k));
        }
        let ins = self.in_neighbors(k);
        let outs = self.out_neighbors(k);
        let mut arrows: BTreeSet<(u32, u32)> = self.arrows.iter().copied().collect();
        let mut cycles: BTreeSet<[u32; 3]> =
            self.cycles.iter().filter(|c| !c.contains(&k)).copied().collect();
        for &i in &ins {
            for &j in &outs {
                if arrows.contains(&(j, i)) {
                    arrows.remove(&(j, i));
                    cycles.retain(|c| !cycle_arrows(c).contains(&(j, i)));
                } else if arrows.contains(&(i, j)) {
                    return Err(MstabError::Invalid(format!(
                        "mutation at {k} creates a double arrow {i}->{j}; not of A_n type"
                    )));
                } else {
                    arrows.insert((i, j));
                    cycles.insert(normalize_cycle([i, j, k]));
                }
            }
        }
        let arrows: Vec<(u32, u32)> = arrows
            .into_iter()
            .map(|(s, t)| if s == k || t == k { (t, s) } else { (s, t) })
            .collect();
        QuiverWithPotential::new(self.vertices.clone(), arrows, cycles.into_iter().collect())
    }

    /// Full subquiver on `keep`, with the cycles lying inside it.
    pub fn restrict(&self, keep: &[u32]) -> Self {
        let ks: BTreeSet<u32> = keep.iter().copied().collect();
        QuiverWithPotential {
            vertices: self.vertices.iter().copied().filter(|v| ks.contains(v)).collect(),
            arrows: self.arrows.iter().copied().filter(|(s, t)| ks.contains(s) && ks.contains(t)).collect(),
            cycles: self.cycles.iter().copied().filter(|c| c.iter().all(|v| ks.contains(v))).collect(),
        }
    }

    /// Connected components of the underlying graph, each sorted, in order of smallest vertex.
    pub fn components(&self) -> Vec<Vec<u32>> {
        let mut adj: BTreeMap<u32, Vec<u32>> = self.vertices.iter().map(|&v| (v, vec![])).collect();
        for &(s, t) in &self.arrows {
            adj.get_mut(&s).unwrap().push(t);
            adj.get_mut(&t).unwrap().push(s);
        }
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &v in &self.vertices {
            if seen.contains(&v) {
                continue;
            }
            let mut comp = vec![];
            let mut queue = VecDeque::from([v]);
            seen.insert(v);
            while let Some(x) = queue.pop_front() {
                comp.push(x);
                for &y in &adj[&x] {
                    if seen.insert(y) {
                        queue.push_back(y);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// `chi(e_i, e_j) = #(j -> i) - #(i -> j)`.
    pub fn chi(&self, i: u32, j: u32) -> i64 {
        self.has_arrow(j, i) as i64 - self.has_arrow(i, j) as i64
    }

    /// Euler pairing of classes written in the vertex order of `self`.
    pub fn euler_pairing(&self, a: &[i64], b: &[i64]) -> Result<i64> {
        let n = self.rank();
        for v in [a, b] {
            if v.len() != n {
                return Err(MstabError::LengthMismatch { expected: n, got: v.len() });
            }
        }
        let mut total = 0;
        for &(s, t) in &self.arrows {
            let (ps, pt) = (self.position(s)?, self.position(t)?);
            // arrow s->t contributes -1 to chi(e_s, e_t) and +1 to chi(e_t, e_s)
            total += b[ps] * a[pt] - a[ps] * b[pt];
        }
        Ok(total)
    }

    /// Rename vertices through `f` (which must be injective on the vertex set).
    pub fn relabel(&self, f: impl Fn(u32) -> u32) -> Result<Self> {
        QuiverWithPotential::new(
            self.vertices.iter().map(|&v| f(v)).collect(),
            self.arrows.iter().map(|&(s, t)| (f(s), f(t))).collect(),
            self.cycles.iter().map(|c| [f(c[0]), f(c[1]), f(c[2])]).collect(),
        )
    }

    /// Canonical form under vertex relabeling by `0..n`: the lexicographically least
    /// (arrows, cycles) over all orderings. Exhaustive, so meant for small ranks.
    pub fn canonical_form(&self) -> (Vec<(u32, u32)>, Vec<[u32; 3]>) {
        let n = self.rank();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best: Option<(Vec<(u32, u32)>, Vec<[u32; 3]>)> = None;
        loop {
            let map: BTreeMap<u32, u32> =
                self.vertices.iter().zip(&perm).map(|(&v, &p)| (v, p as u32)).collect();
            let mut arrows: Vec<(u32, u32)> = self.arrows.iter().map(|(s, t)| (map[s], map[t])).collect();
            arrows.sort_unstable();
            let better = match &best {
                None => true,
                Some(b) => arrows <= b.0,
            };
            if better {
                let mut cycles: Vec<[u32; 3]> =
                    self.cycles.iter().map(|c| normalize_cycle([map[&c[0]], map[&c[1]], map[&c[2]]])).collect();
                cycles.sort_unstable();
                let cand = (arrows, cycles);
                if best.as_ref().map_or(true, |b| cand < *b) {
                    best = Some(cand);
                }
            }
            if !next_permutation(&mut perm) {
                break;
            }
        }
        best.unwrap_or_default()
    }

    pub fn is_isomorphic(&self, other: &Self) -> bool {
        self.rank() == other.rank()
            && self.arrows.len() == other.arrows.len()
            && self.cycles.len() == other.cycles.len()
            && self.canonical_form() == other.canonical_form()
    }

    /// Strings (indecomposables of the Jacobian algebra), one per inversion pair.
    pub fn enumerate_strings(&self) -> Result<Vec<StringObject>> {
        let n = self.rank();
        let cap = 10 * n * n.max(1);
        let mut seen: BTreeSet<Vec<u32>> = BTreeSet::new();
        let mut out = Vec::new();
        let mut stack: Vec<Vec<u32>> = self.vertices.iter().map(|&v| vec![v]).collect();
        let mut neighbors: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for &v in &self.vertices {
            let mut nb = self.out_neighbors(v);
            nb.extend(self.in_neighbors(v));
            nb.sort_unstable();
            neighbors.insert(v, nb);
        }
        while let Some(walk) = stack.pop() {
            let mut rev = walk.clone();
            rev.reverse();
            let key = walk.clone().min(rev);
            if seen.insert(key.clone()) {
                out.push(StringObject::from_walk(self, key)?);
                if out.len() > cap {
                    return Err(MstabError::CapExceeded(format!(
                        "more than {cap} strings; quiver is not of A_n type"
                    )));
                }
            }
            let last = *walk.last().unwrap();
            for &w in &neighbors[&last] {
                if walk.len() >= 2 {
                    let prev = walk[walk.len() - 2];
                    if w == prev {
                        continue;
                    }
                    let d1 = self.has_arrow(prev, last);
                    let d2 = self.has_arrow(last, w);
                    if d1 && d2 && self.is_relation(prev, last, w) {
                        continue;
                    }
                    if !d1 && !d2 && self.is_relation(w, last, prev) {
                        continue;
                    }
                }
                let mut next = walk.clone();
                next.push(w);
                stack.push(next);
            }
        }
        out.sort_by(|a, b| a.walk.len().cmp(&b.walk.len()).then(a.walk.cmp(&b.walk)));
        Ok(out)
    }

    /// Every quiver reachable from `self` by at most `depth` mutations, deduplicated
    /// on the nose (vertex labels are kept).
    pub fn mutation_ball(&self, depth: usize) -> Result<Vec<QuiverWithPotential>> {
        let mut seen = BTreeSet::from([self.clone()]);
        let mut frontier = vec![self.clone()];
        for _ in 0..depth {
            let mut next = vec![];
            for q in &frontier {
                for &k in &q.vertices {
                    let m = q.mutate(k)?;
                    if seen.insert(m.clone()) {
                        next.push(m);
                    }
                }
            }
            frontier = next;
        }
        Ok(seen.into_iter().collect())
    }

    /// DOT rendering; potential cycles are listed in a comment.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph quiver {\n");
        for v in &self.vertices {
            s.push_str(&format!("  {v};\n"));
        }
        for (a, b) in &self.arrows {
            s.push_str(&format!("  {a} -> {b};\n"));
        }
        for c in &self.cycles {
            s.push_str(&format!("  // cycle {} {} {}\n", c[0], c[1], c[2]));
        }
        s.push_str("}\n");
        s
    }
}

/// The linear quiver `1 -> 2 -> ... -> n`.
pub fn make_linear(n: usize) -> Result<QuiverWithPotential> {
    if n == 0 {
        return Err(MstabError::Invalid("rank must be positive".into()));
    }
    let vertices: Vec<u32> = (1..=n as u32).collect();
    let arrows = (1..n as u32).map(|i| (i, i + 1)).collect();
    QuiverWithPotential::new(vertices, arrows, vec![])
}

/// One letter of a string: an arrow traversed forwards or backwards.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Letter {
    pub source: u32,
    pub target: u32,
    pub inverse: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StringObject {
    /// Vertices visited, in order.
    pub walk: Vec<u32>,
    pub letters: Vec<Letter>,
    pub dimension_vector: KClass,
}

impl StringObject {
    fn from_walk(q: &QuiverWithPotential, walk: Vec<u32>) -> Result<Self> {
        let mut dim = vec![0; q.rank()];
        for &v in &walk {
            dim[q.position(v)?] += 1;
        }
        let letters = walk
            .windows(2)
            .map(|w| {
                if q.has_arrow(w[0], w[1]) {
                    Letter { source: w[0], target: w[1], inverse: false }
                } else {
                    Letter { source: w[1], target: w[0], inverse: true }
                }
            })
            .collect();
        Ok(StringObject { walk, letters, dimension_vector: dim })
    }
}

pub(crate) fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_small() {
        let q = make_linear(1).unwrap();
        assert_eq!(q.vertices, vec![1]);
        assert!(q.arrows.is_empty());
        let q = make_linear(3).unwrap();
        assert_eq!(q.arrows, vec![(1, 2), (2, 3)]);
        assert!(make_linear(0).is_err());
    }

    #[test]
    fn mutation_at_middle_of_a3() {
        let q = make_linear(3).unwrap().mutate(2).unwrap();
        assert_eq!(q.arrows, vec![(1, 3), (2, 1), (3, 2)]);
        assert_eq!(q.cycles, vec![[1, 3, 2]]);
        assert_eq!(q.mutate(2).unwrap(), make_linear(3).unwrap());
        assert_eq!(q.chi(1, 3), -1);
    }

    #[test]
    fn rejects_bad_quivers() {
        assert!(QuiverWithPotential::new(vec![1, 2], vec![(1, 2), (2, 1)], vec![]).is_err());
        assert!(QuiverWithPotential::new(vec![1], vec![(1, 1)], vec![]).is_err());
        assert!(QuiverWithPotential::new(vec![1, 2, 3], vec![(1, 2), (2, 3)], vec![[1, 2, 3]]).is_err());
        assert!(make_linear(2).unwrap().mutate(5).is_err());
    }

    #[test]
    fn strings_of_a_three_cycle() {
        let q = make_linear(3).unwrap().mutate(2).unwrap();
        let s = q.enumerate_strings().unwrap();
        assert_eq!(s.len(), 6);
    }

    #[test]
    fn permutations() {
        let mut p = vec![0, 1, 2];
        let mut count = 1;
        while next_permutation(&mut p) {
            count += 1;
        }
        assert_eq!(count, 6);
    }
}
