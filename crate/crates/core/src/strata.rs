//! Enhanced level graphs of the genus-zero strata of quadratic differentials with
//! `n + 1` simple zeros and one pole of order `n + 5`: enumeration, undegeneration,
//! double covers, prong counts, and the graph of a multi-scale stability condition.
//!
//! Every graph here is a tree rooted at the vertex carrying the pole, with all edges
//! pointing downwards. The enhancement of an edge is forced: it is the number of
//! zeros below it plus two.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{MstabError, Result};
use crate::multiscale::MultiScaleStab;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Vertex {
    /// 0 for the top level, negative below.
    pub level: i32,
    /// Labels of the simple zeros on this vertex, sorted.
    pub zeros: Vec<u32>,
    pub pole: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub upper: usize,
    pub lower: usize,
    pub kappa: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnhancedLevelGraph {
    /// Rank of the quiver; the stratum has `n + 1` zeros.
    pub n: usize,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
}

pub fn pole_order(n: usize) -> i64 {
    -(n as i64 + 5)
}

/// Nested zero sets, one per vertex: `(level, own zeros, children)`.
#[derive(Clone, Debug)]
struct Node {
    level: i32,
    zeros: Vec<u32>,
    children: Vec<Node>,
}

impl Node {
    fn zero_count(&self) -> usize {
        self.zeros.len() + self.children.iter().map(Node::zero_count).sum::<usize>()
    }

    fn shape(&self) -> String {
        let mut kids: Vec<String> = self.children.iter().map(Node::shape).collect();
        kids.sort();
        format!("({}:{}[{}])", self.level, self.zeros.len(), kids.join(""))
    }

    fn labeled(&self) -> String {
        let mut kids: Vec<String> = self.children.iter().map(Node::labeled).collect();
        kids.sort();
        let z: Vec<String> = self.zeros.iter().map(|z| z.to_string()).collect();
        format!("({}:{}[{}])", self.level, z.join(","), kids.join(""))
    }
}

impl EnhancedLevelGraph {
    /// The smooth stratum: one vertex carrying everything.
    pub fn smooth(n: usize) -> EnhancedLevelGraph {
        EnhancedLevelGraph {
            n,
            vertices: vec![Vertex { level: 0, zeros: (1..=n as u32 + 1).collect(), pole: true }],
            edges: vec![],
        }
    }

    fn from_node(n: usize, root: &Node) -> EnhancedLevelGraph {
        let mut g = EnhancedLevelGraph { n, vertices: vec![], edges: vec![] };
        fn walk(g: &mut EnhancedLevelGraph, node: &Node, parent: Option<usize>) {
            let id = g.vertices.len();
            g.vertices.push(Vertex { level: node.level, zeros: node.zeros.clone(), pole: parent.is_none() });
            if let Some(p) = parent {
                g.edges.push(Edge { upper: p, lower: id, kappa: node.zero_count() as u32 + 2 });
            }
            for c in &node.children {
                walk(g, c, Some(id));
            }
        }
        walk(&mut g, root, None);
        g
    }

    fn root(&self) -> Option<usize> {
        self.vertices.iter().position(|v| v.pole)
    }

    fn to_node(&self) -> Result<Node> {
        let root = self.root().ok_or_else(|| MstabError::Invalid("no vertex carries the pole".into()))?;
        let mut kids: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for e in &self.edges {
            kids.entry(e.upper).or_default().push(e.lower);
        }
        fn build(g: &EnhancedLevelGraph, v: usize, kids: &BTreeMap<usize, Vec<usize>>, depth: usize) -> Result<Node> {
            if depth > g.vertices.len() {
                return Err(MstabError::Invalid("edges contain a cycle".into()));
            }
            let children = kids.get(&v).map(|k| k.iter().map(|&c| build(g, c, kids, depth + 1)).collect()).unwrap_or(Ok(vec![]))?;
            Ok(Node { level: g.vertices[v].level, zeros: g.vertices[v].zeros.clone(), children })
        }
        build(self, root, &kids, 0)
    }

    /// Number of levels below zero.
    pub fn depth(&self) -> usize {
        self.vertices.iter().map(|v| (-v.level) as usize).max().unwrap_or(0)
    }

    /// Order of each special point of vertex `v`: zeros, the pole, then edge ends.
    pub fn vertex_orders(&self, v: usize) -> Vec<i64> {
        let vx = &self.vertices[v];
        let mut out = vec![1; vx.zeros.len()];
        if vx.pole {
            out.push(pole_order(self.n));
        }
        for e in &self.edges {
            if e.upper == v {
                out.push(e.kappa as i64 - 2);
            }
            if e.lower == v {
                out.push(-(e.kappa as i64) - 2);
            }
        }
        out
    }

    /// Checks tree shape, strict level drops, the degree count `-4` at every vertex,
    /// stability, and that levels `0..=-L` are all occupied.
    pub fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        if nv == 0 || self.edges.len() + 1 != nv {
            return Err(MstabError::Invalid("not a tree".into()));
        }
        if self.vertices.iter().filter(|v| v.pole).count() != 1 {
            return Err(MstabError::Invalid("exactly one vertex must carry the pole".into()));
        }
        let root = self.root().unwrap_or(0);
        if self.vertices[root].level != 0 {
            return Err(MstabError::Invalid("the pole must sit on level 0".into()));
        }
        let mut seen: Vec<u32> = self.vertices.iter().flat_map(|v| v.zeros.iter().copied()).collect();
        seen.sort_unstable();
        if seen != (1..=self.n as u32 + 1).collect::<Vec<_>>() {
            return Err(MstabError::Invalid(format!("zero labels {seen:?} are not 1..={}", self.n + 1)));
        }
        for e in &self.edges {
            if e.upper >= nv || e.lower >= nv {
                return Err(MstabError::Invalid("edge endpoint out of range".into()));
            }
            if self.vertices[e.upper].level <= self.vertices[e.lower].level {
                return Err(MstabError::Invalid(format!("edge {}-{} is not strictly downward", e.upper, e.lower)));
            }
            if e.kappa == 0 {
                return Err(MstabError::Invalid("enhancement must be positive".into()));
            }
        }
        let node = self.to_node()?;
        let mut count = 0;
        fn size(n: &Node) -> usize {
            1 + n.children.iter().map(size).sum::<usize>()
        }
        count += size(&node);
        if count != nv {
            return Err(MstabError::Invalid("graph is not connected".into()));
        }
        for v in 0..nv {
            let orders = self.vertex_orders(v);
            let sum: i64 = orders.iter().sum();
            if sum != -4 {
                return Err(MstabError::Invalid(format!("orders at vertex {v} sum to {sum}, not -4")));
            }
            if orders.len() < 3 {
                return Err(MstabError::Invalid(format!("vertex {v} has fewer than three special points")));
            }
        }
        let levels: BTreeSet<i32> = self.vertices.iter().map(|v| v.level).collect();
        let want: BTreeSet<i32> = (0..=self.depth() as i32).map(|k| -k).collect();
        if levels != want {
            return Err(MstabError::Invalid(format!("occupied levels {levels:?} have gaps")));
        }
        Ok(())
    }

    /// Key identifying the graph with its zero labels.
    pub fn labeled_key(&self) -> String {
        self.to_node().map(|n| n.labeled()).unwrap_or_default()
    }

    /// Key identifying the graph up to relabeling the zeros.
    pub fn unlabeled_key(&self) -> String {
        self.to_node().map(|n| n.shape()).unwrap_or_default()
    }

    /// `rho_i` for each level passage `i = 1..=L`: sizes `z - 1` of the subtrees hanging
    /// below the edges that cross the passage, where `z` counts their zeros.
    pub fn rho(&self) -> Vec<Vec<usize>> {
        let below = self.zeros_below();
        (1..=self.depth() as i32)
            .map(|i| {
                let mut r: Vec<usize> = self
                    .edges
                    .iter()
                    .filter(|e| self.vertices[e.upper].level > -i && self.vertices[e.lower].level <= -i)
                    .map(|e| below[e.lower] - 1)
                    .collect();
                r.sort_unstable();
                r
            })
            .collect()
    }

    /// Zeros in the subtree of each vertex.
    pub fn zeros_below(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.vertices.iter().map(|v| v.zeros.len()).collect();
        // process vertices from the bottom up
        let mut order: Vec<usize> = (0..self.vertices.len()).collect();
        order.sort_by_key(|&v| self.vertices[v].level);
        for v in order {
            if let Some(e) = self.edges.iter().find(|e| e.lower == v) {
                out[e.upper] += out[v];
            }
        }
        out
    }

    pub fn prong_count(&self) -> u64 {
        self.edges.iter().map(|e| e.kappa as u64).product()
    }

    pub fn kappas(&self) -> Vec<u32> {
        let mut k: Vec<u32> = self.edges.iter().map(|e| e.kappa).collect();
        k.sort_unstable();
        k
    }

    /// Contracts every edge crossing the level passages in `passages` (numbered from
    /// 1, passage `i` lying between levels `-(i-1)` and `-i`).
    pub fn undegenerate(&self, passages: &BTreeSet<usize>) -> Result<EnhancedLevelGraph> {
        let depth = self.depth();
        if passages.is_empty() || passages.iter().any(|&i| i == 0 || i > depth) {
            return Err(MstabError::Invalid(format!("passages {passages:?} not within 1..={depth}")));
        }
        let new_level = |l: i32| -> i32 {
            let k = (-l) as usize;
            -((1..=k).filter(|i| !passages.contains(i)).count() as i32)
        };
        // union-find over vertices joined by contracted edges
        let mut rep: Vec<usize> = (0..self.vertices.len()).collect();
        fn find(rep: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while rep[r] != r {
                r = rep[r];
            }
            rep[x] = r;
            r
        }
        for e in &self.edges {
            if new_level(self.vertices[e.upper].level) == new_level(self.vertices[e.lower].level) {
                let (a, b) = (find(&mut rep, e.upper), find(&mut rep, e.lower));
                // keep the upper representative
                rep[b] = a;
            }
        }
        let mut index: BTreeMap<usize, usize> = BTreeMap::new();
        let mut vertices: Vec<Vertex> = vec![];
        for v in 0..self.vertices.len() {
            let r = find(&mut rep, v);
            let id = *index.entry(r).or_insert_with(|| {
                vertices.push(Vertex { level: new_level(self.vertices[r].level), zeros: vec![], pole: false });
                vertices.len() - 1
            });
            vertices[id].zeros.extend(self.vertices[v].zeros.iter().copied());
            vertices[id].pole |= self.vertices[v].pole;
        }
        for v in vertices.iter_mut() {
            v.zeros.sort_unstable();
        }
        let mut edges = vec![];
        for e in &self.edges {
            let (a, b) = (find(&mut rep, e.upper), find(&mut rep, e.lower));
            if a != b {
                edges.push(Edge { upper: index[&a], lower: index[&b], kappa: e.kappa });
            }
        }
        let g = EnhancedLevelGraph { n: self.n, vertices, edges };
        g.validate().map_err(|e| MstabError::Internal(format!("undegeneration produced an invalid graph: {e}")))?;
        Ok(g)
    }

    pub fn double_cover(&self) -> DoubleCover {
        let nv = self.vertices.len();
        let mut vertices = vec![];
        let mut vertex_map = vec![];
        for v in 0..nv {
            let orders = self.vertex_orders(v);
            let ramified = orders.iter().any(|m| m % 2 != 0);
            let mut cover_orders = vec![];
            for &m in &orders {
                if m % 2 != 0 {
                    cover_orders.push(m + 1);
                } else {
                    cover_orders.push(m / 2);
                    if ramified {
                        cover_orders.push(m / 2);
                    }
                }
            }
            // 2g - 2 = sum of orders on each preimage
            let sum: i64 = cover_orders.iter().sum();
            let genus = (sum + 2) / 2;
            let copies = if ramified { 1 } else { 2 };
            let mut ids = vec![];
            for _ in 0..copies {
                ids.push(vertices.len());
                vertices.push(CoverVertex { level: self.vertices[v].level, genus: genus as u32, orders: cover_orders.clone() });
            }
            vertex_map.push(ids);
        }
        let mut edges = vec![];
        for (k, e) in self.edges.iter().enumerate() {
            let pick = |v: usize, a: usize| vertex_map[v][a.min(vertex_map[v].len() - 1)];
            if e.kappa % 2 == 0 {
                for a in 0..2 {
                    edges.push(CoverEdge { upper: pick(e.upper, a), lower: pick(e.lower, a), kappa_hat: e.kappa / 2, over: k });
                }
            } else {
                edges.push(CoverEdge { upper: pick(e.upper, 0), lower: pick(e.lower, 0), kappa_hat: e.kappa, over: k });
            }
        }
        DoubleCover { vertices, edges, vertex_map }
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph levelgraph {\n  rankdir=TB;\n");
        let mut by_level: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
        for (i, v) in self.vertices.iter().enumerate() {
            by_level.entry(v.level).or_default().push(i);
            let z: Vec<String> = v.zeros.iter().map(|z| z.to_string()).collect();
            let pole = if v.pole { format!(" pole {}", pole_order(self.n)) } else { String::new() };
            s += &format!("  v{i} [label=\"L{} z{{{}}}{pole}\"];\n", v.level, z.join(","));
        }
        for vs in by_level.values() {
            let names: Vec<String> = vs.iter().map(|v| format!("v{v}")).collect();
            s += &format!("  {{ rank=same; {} }}\n", names.join("; "));
        }
        for e in &self.edges {
            s += &format!("  v{} -> v{} [label=\"{}\"];\n", e.upper, e.lower, e.kappa);
        }
        s += "}\n";
        s
    }

    /// The level graph of a multi-scale stability condition: one vertex per component
    /// of the vanishing chain, placed at the deepest level where it is a component,
    /// with the top vertex carrying the pole. Zeros are labeled in traversal order.
    pub fn from_msc(m: &MultiScaleStab) -> Result<EnhancedLevelGraph> {
        let n = m.rank();
        let chain = m.vanishing_chain();
        // component sets per level, 1-based
        let comps: Vec<Vec<BTreeSet<u32>>> =
            chain.levels.iter().map(|l| l.components.iter().map(|c| c.iter().copied().collect()).collect()).collect();
        // (level, set) of each vertex
        let mut verts: Vec<(usize, BTreeSet<u32>)> = vec![];
        for (i, cs) in comps.iter().enumerate() {
            for c in cs {
                let persists = comps.get(i + 1).is_some_and(|next| next.contains(c));
                if !persists {
                    verts.push((i + 1, c.clone()));
                }
            }
        }
        fn build(level: usize, set: &BTreeSet<u32>, verts: &[(usize, BTreeSet<u32>)], next: &mut u32, total: usize) -> Node {
            // children: maximal vertex sets strictly inside at deeper levels
            let inside: Vec<&(usize, BTreeSet<u32>)> =
                verts.iter().filter(|(l, s)| *l > level && s.is_subset(set) && s != set).collect();
            let children: Vec<&(usize, BTreeSet<u32>)> = inside
                .iter()
                .copied()
                .filter(|(l, s)| !inside.iter().any(|(l2, s2)| l2 < l && s.is_subset(s2) && s2 != s))
                .collect();
            let kids: Vec<Node> = children.iter().map(|(l, s)| build(*l, s, verts, next, total)).collect();
            let below: usize = kids.iter().map(Node::zero_count).sum();
            let own = if level == 0 { total - below } else { set.len() + 1 - below };
            let zeros = (0..own)
                .map(|_| {
                    *next += 1;
                    *next
                })
                .collect();
            Node { level: -(level as i32), zeros, children: kids }
        }
        let all: BTreeSet<u32> = m.top.labels().into_iter().collect();
        let mut next = 0;
        let root = build(0, &all, &verts, &mut next, n + 1);
        let g = EnhancedLevelGraph::from_node(n, &root);
        g.validate()?;
        Ok(g)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverVertex {
    pub level: i32,
    pub genus: u32,
    /// Orders of the abelian differential at the special points of one preimage.
    pub orders: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverEdge {
    pub upper: usize,
    pub lower: usize,
    pub kappa_hat: u32,
    /// Index of the edge downstairs.
    pub over: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoubleCover {
    pub vertices: Vec<CoverVertex>,
    pub edges: Vec<CoverEdge>,
    /// Preimages of each vertex downstairs.
    pub vertex_map: Vec<Vec<usize>>,
}

/// Collections of pairwise disjoint subsets of `pool`, each of size at least 2,
/// in a canonical order (every collection once).
fn disjoint_families(pool: &[u32]) -> Vec<Vec<Vec<u32>>> {
    let mut out = vec![];
    fn rec(pool: &[u32], start: usize, used: u64, cur: &mut Vec<Vec<u32>>, out: &mut Vec<Vec<Vec<u32>>>) {
        out.push(cur.clone());
        // the next subset must have its smallest element after the previous one's
        for first in start..pool.len() {
            if used >> first & 1 == 1 {
                continue;
            }
            let rest: Vec<usize> = (first + 1..pool.len()).filter(|&k| used >> k & 1 == 0).collect();
            for mask in 1u64..(1u64 << rest.len()) {
                let mut set = vec![pool[first]];
                let mut u = used | 1 << first;
                for (b, &k) in rest.iter().enumerate() {
                    if mask >> b & 1 == 1 {
                        set.push(pool[k]);
                        u |= 1 << k;
                    }
                }
                cur.push(set);
                rec(pool, first + 1, u, cur, out);
                cur.pop();
            }
        }
    }
    rec(pool, 0, 0, &mut vec![], &mut out);
    out
}

/// Collections of disjoint subsets of size at least two, up to relabelling the pool:
/// child sizes form a partition and each child takes the next consecutive run.
fn size_families(pool: &[u32]) -> Vec<Vec<Vec<u32>>> {
    let mut out = vec![];
    fn rec(pool: &[u32], used: usize, max: usize, cur: &mut Vec<Vec<u32>>, out: &mut Vec<Vec<Vec<u32>>>) {
        out.push(cur.clone());
        for size in (2..=max.min(pool.len() - used)).rev() {
            cur.push(pool[used..used + size].to_vec());
            rec(pool, used + size, size, cur, out);
            cur.pop();
        }
    }
    rec(pool, 0, pool.len(), &mut vec![], &mut out);
    out
}

/// All labeled boundary graphs with `1..=max_levels` levels below zero.
pub fn enumerate_graphs(n: usize, max_levels: usize) -> Vec<EnhancedLevelGraph> {
    generate(n, max_levels, disjoint_families, |g| g.labeled_key())
}

/// One representative per unlabeled boundary graph with `1..=max_levels` levels,
/// generated directly rather than by quotienting the labeled list.
pub fn enumerate_unlabeled(n: usize, max_levels: usize) -> Vec<EnhancedLevelGraph> {
    generate(n, max_levels, size_families, |g| g.unlabeled_key())
}

type Families = fn(&[u32]) -> Vec<Vec<Vec<u32>>>;

fn generate(
    n: usize,
    max_levels: usize,
    families: Families,
    key: impl Fn(&EnhancedLevelGraph) -> String,
) -> Vec<EnhancedLevelGraph> {
    let zeros: Vec<u32> = (1..=n as u32 + 1).collect();
    let mut out = vec![];
    let mut seen = BTreeSet::new();
    for depth in 1..=max_levels {
        // pending components: (path of the parent node, zero set), placed level by level
        let mut states: Vec<(Node, Vec<(Vec<usize>, Vec<u32>)>)> = vec![];
        for fam in families(&zeros) {
            let own: Vec<u32> = zeros.iter().copied().filter(|z| !fam.iter().any(|d| d.contains(z))).collect();
            if fam.is_empty() || 1 + own.len() + fam.len() < 3 {
                continue;
            }
            let root = Node { level: 0, zeros: own, children: vec![] };
            let pending = fam.into_iter().map(|d| (vec![], d)).collect();
            states.push((root, pending));
        }
        for level in 1..=depth as i32 {
            let mut next_states = vec![];
            for (root, pending) in states {
                let step = Step { level, depth: depth as i32, families };
                expand(&root, &pending, 0, &step, &mut vec![], false, &mut next_states);
            }
            states = next_states;
        }
        for (root, pending) in states {
            if !pending.is_empty() {
                continue;
            }
            let g = EnhancedLevelGraph::from_node(n, &root);
            if g.depth() == depth && seen.insert(key(&g)) {
                debug_assert!(g.validate().is_ok());
                out.push(g);
            }
        }
    }
    out
}

/// Decides the fate of each pending component at `level`: it persists (if deeper
/// levels remain) or becomes a vertex whose own pending children are chosen here.
struct Step {
    level: i32,
    depth: i32,
    families: Families,
}

fn expand(
    root: &Node,
    pending: &[(Vec<usize>, Vec<u32>)],
    k: usize,
    st: &Step,
    next_pending: &mut Vec<(Vec<usize>, Vec<u32>)>,
    placed: bool,
    out: &mut Vec<(Node, Vec<(Vec<usize>, Vec<u32>)>)>,
) {
    if k == pending.len() {
        if placed {
            out.push((root.clone(), next_pending.clone()));
        }
        return;
    }
    let (level, depth) = (st.level, st.depth);
    let (path, set) = &pending[k];
    if level < depth {
        next_pending.push((path.clone(), set.clone()));
        expand(root, pending, k + 1, st, next_pending, placed, out);
        next_pending.pop();
    }
    for fam in (st.families)(set) {
        let own: Vec<u32> = set.iter().copied().filter(|z| !fam.iter().any(|d| d.contains(z))).collect();
        // stability: own zeros + children + the edge up
        if own.len() + fam.len() + 1 < 3 {
            continue;
        }
        if level == depth && !fam.is_empty() {
            continue;
        }
        let mut r = root.clone();
        let parent = node_at(&mut r, path);
        parent.children.push(Node { level: -level, zeros: own, children: vec![] });
        let mut child_path = path.clone();
        child_path.push(parent.children.len() - 1);
        let added = fam.len();
        for d in fam {
            next_pending.push((child_path.clone(), d));
        }
        expand(&r, pending, k + 1, st, next_pending, true, out);
        for _ in 0..added {
            next_pending.pop();
        }
    }
}

fn node_at<'a>(root: &'a mut Node, path: &[usize]) -> &'a mut Node {
    let mut cur = root;
    for &i in path {
        cur = &mut cur.children[i];
    }
    cur
}

/// One unlabeled graph with the number of its labelings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusEntry {
    pub key: String,
    pub levels: usize,
    pub labeled_count: usize,
    pub rho: Vec<Vec<usize>>,
    pub kappas: Vec<u32>,
    pub prongs: u64,
    pub representative: EnhancedLevelGraph,
}

/// Unlabeled classes of `enumerate_graphs(n, max_levels)`, ordered by depth and key.
pub fn census(n: usize, max_levels: usize) -> Vec<CensusEntry> {
    let mut map: BTreeMap<(usize, String), CensusEntry> = BTreeMap::new();
    for g in enumerate_graphs(n, max_levels) {
        let key = g.unlabeled_key();
        map.entry((g.depth(), key.clone()))
            .and_modify(|e| e.labeled_count += 1)
            .or_insert_with(|| CensusEntry {
                key,
                levels: g.depth(),
                labeled_count: 1,
                rho: g.rho(),
                kappas: g.kappas(),
                prongs: g.prong_count(),
                representative: g.clone(),
            });
    }
    map.into_values().collect()
}

/// `(i, j, passages)`: undegenerating graph `i` at `passages` gives graph `j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Poset {
    pub ranks: Vec<usize>,
    pub relations: Vec<(usize, usize, Vec<usize>)>,
}

impl Poset {
    /// Graphs reachable from `i` by one passage contraction.
    pub fn covers(&self, i: usize) -> BTreeSet<usize> {
        self.relations.iter().filter(|r| r.0 == i && r.2.len() == 1).map(|r| r.1).collect()
    }
}

/// The degeneration order on `graphs`, comparing unlabeled keys when `unlabeled`.
pub fn adjacency_poset(graphs: &[EnhancedLevelGraph], unlabeled: bool) -> Result<Poset> {
    let key = |g: &EnhancedLevelGraph| if unlabeled { g.unlabeled_key() } else { g.labeled_key() };
    let index: BTreeMap<String, usize> = graphs.iter().enumerate().map(|(i, g)| (key(g), i)).collect();
    let mut relations = vec![];
    for (i, g) in graphs.iter().enumerate() {
        let depth = g.depth();
        for mask in 1u32..(1 << depth) {
            let passages: BTreeSet<usize> = (1..=depth).filter(|p| mask >> (p - 1) & 1 == 1).collect();
            let h = g.undegenerate(&passages)?;
            let hk = key(&h);
            if let Some(&j) = index.get(&hk) {
                let r = (i, j, passages.into_iter().collect());
                if !relations.contains(&r) {
                    relations.push(r);
                }
            }
        }
    }
    Ok(Poset { ranks: graphs.iter().map(|g| g.depth()).collect(), relations })
}

/// Types `rho` allowed for a single vanishing level of an `A_n` quiver: component
/// sizes with `sum (n_j + 1) <= n + 1`, equality only for two or more parts.
pub fn single_level_types(n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![];
    fn rec(n: usize, max: usize, budget: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if !cur.is_empty() {
            let used: usize = cur.iter().map(|s| s + 1).sum();
            if used < n + 1 || (used == n + 1 && cur.len() >= 2) {
                let mut v = cur.clone();
                v.sort_unstable();
                out.push(v);
            }
        }
        for s in (1..=max.min(budget.saturating_sub(1))).rev() {
            cur.push(s);
            rec(n, s, budget - s - 1, cur, out);
            cur.pop();
        }
    }
    rec(n, n, n + 1, &mut vec![], &mut out);
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a2_boundary() {
        let gs = enumerate_graphs(2, 2);
        assert_eq!(gs.len(), 3);
        assert!(gs.iter().all(|g| g.depth() == 1 && g.kappas() == vec![4] && g.prong_count() == 4));
        assert_eq!(census(2, 2).len(), 1);
    }

    #[test]
    fn a3_counts() {
        let c = census(3, 3);
        let l1: Vec<(Vec<u32>, usize)> = c.iter().filter(|e| e.levels == 1).map(|e| (e.kappas.clone(), e.labeled_count)).collect();
        assert_eq!(l1.len(), 3);
        assert!(l1.contains(&(vec![5], 4)));
        assert!(l1.contains(&(vec![4], 6)));
        assert!(l1.contains(&(vec![4, 4], 3)));
        let l2: Vec<usize> = c.iter().filter(|e| e.levels == 2).map(|e| e.labeled_count).collect();
        assert_eq!(l2.len(), 2);
        assert_eq!(l2.iter().sum::<usize>(), 18);
        assert!(c.iter().all(|e| e.levels <= 2));
    }

    #[test]
    fn contraction_to_smooth() {
        for g in enumerate_graphs(3, 2) {
            let all: BTreeSet<usize> = (1..=g.depth()).collect();
            let s = g.undegenerate(&all).unwrap();
            assert_eq!(s.vertices.len(), 1);
            assert_eq!(s.labeled_key(), EnhancedLevelGraph::smooth(3).labeled_key());
        }
    }

    #[test]
    fn covers_of_collisions() {
        let g = enumerate_graphs(3, 1).into_iter().find(|g| g.kappas() == vec![5]).unwrap();
        let c = g.double_cover();
        let bottom = g.vertices.iter().position(|v| v.level == -1).unwrap();
        assert_eq!(c.vertices[c.vertex_map[bottom][0]].genus, 1);
        assert_eq!(c.edges.len(), 1);
        let g = enumerate_graphs(2, 1).remove(0);
        let c = g.double_cover();
        assert_eq!(c.edges.len(), 2);
        assert!(c.edges.iter().all(|e| e.kappa_hat == 2));
        let bottom = g.vertices.iter().position(|v| v.level == -1).unwrap();
        assert_eq!(c.vertex_map[bottom].len(), 1);
        let mut zs: Vec<i64> = c.vertices[c.vertex_map[bottom][0]].orders.iter().copied().filter(|&o| o > 0).collect();
        zs.sort();
        assert_eq!(zs, vec![2, 2]);
    }

    #[test]
    fn types_match_single_level_census() {
        for n in 1..=6 {
            assert_eq!(census(n, 1).len(), single_level_types(n).len(), "n = {n}");
        }
    }
}
