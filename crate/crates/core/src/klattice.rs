//! K-theory of the CY3 category: spherical twists acting on classes, braid
//! words, theta elements and the simple twist group data.

use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::anquiver::{KClass, QuiverWithPotential};
use crate::error::{MstabError, Result};

/// Square integer matrix acting on column vectors, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TwistMatrix {
    pub rows: Vec<Vec<i64>>,
}

impl TwistMatrix {
    pub fn identity(n: usize) -> Self {
        TwistMatrix { rows: (0..n).map(|i| (0..n).map(|j| (i == j) as i64).collect()).collect() }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn mul(&self, o: &TwistMatrix) -> TwistMatrix {
        let n = self.dim();
        let mut rows = vec![vec![0i64; n]; n];
        for i in 0..n {
            for k in 0..n {
                let a = self.rows[i][k];
                if a == 0 {
                    continue;
                }
                for j in 0..n {
                    rows[i][j] += a * o.rows[k][j];
                }
            }
        }
        TwistMatrix { rows }
    }

    pub fn apply(&self, v: &[i64]) -> KClass {
        self.rows.iter().map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn pow(&self, e: u32) -> TwistMatrix {
        (0..e).fold(TwistMatrix::identity(self.dim()), |acc, _| acc.mul(self))
    }

    pub fn neg(&self) -> TwistMatrix {
        TwistMatrix { rows: self.rows.iter().map(|r| r.iter().map(|x| -x).collect()).collect() }
    }

    pub fn transpose(&self) -> TwistMatrix {
        let n = self.dim();
        TwistMatrix { rows: (0..n).map(|i| (0..n).map(|j| self.rows[j][i]).collect()).collect() }
    }

    pub fn det(&self) -> i64 {
        crate::linalg::det_i64(&self.rows)
    }

    /// True when `chi(M a, M b) = chi(a, b)` on all basis pairs.
    pub fn preserves_pairing(&self, q: &QuiverWithPotential) -> bool {
        let n = self.dim();
        let basis: Vec<KClass> = (0..n).map(|i| unit(n, i)).collect();
        let images: Vec<KClass> = basis.iter().map(|b| self.apply(b)).collect();
        for i in 0..n {
            for j in 0..n {
                if q.euler_pairing(&basis[i], &basis[j]).ok() != q.euler_pairing(&images[i], &images[j]).ok() {
                    return false;
                }
            }
        }
        true
    }
}

pub(crate) fn unit(n: usize, i: usize) -> KClass {
    let mut v = vec![0; n];
    v[i] = 1;
    v
}

/// The K-theory action of the twist at the simple of vertex `i`:
/// `gamma -> gamma - sign * chi(e_i, gamma) e_i`.
pub fn twist_matrix(q: &QuiverWithPotential, i: u32, sign: i8) -> Result<TwistMatrix> {
    let p = q.position(i)?;
    let n = q.rank();
    twist_by_class(q, &unit(n, p), sign)
}

/// Twist at a spherical object of class `s`: `gamma -> gamma - sign * chi(s, gamma) s`.
pub fn twist_by_class(q: &QuiverWithPotential, s: &[i64], sign: i8) -> Result<TwistMatrix> {
    if sign != 1 && sign != -1 {
        return Err(MstabError::Invalid(format!("twist sign must be +1 or -1, got {sign}")));
    }
    let n = q.rank();
    if s.len() != n {
        return Err(MstabError::LengthMismatch { expected: n, got: s.len() });
    }
    let mut m = TwistMatrix::identity(n);
    for j in 0..n {
        let c = q.euler_pairing(s, &unit(n, j))?;
        for r in 0..n {
            m.rows[r][j] -= sign as i64 * c * s[r];
        }
    }
    Ok(m)
}

/// A word in the braid generators, each letter `(vertex, +1 | -1)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BraidWord {
    pub letters: Vec<(u32, i8)>,
}

impl BraidWord {
    pub fn new(letters: Vec<(u32, i8)>) -> Self {
        BraidWord { letters }
    }

    pub fn generator(i: u32) -> Self {
        BraidWord { letters: vec![(i, 1)] }
    }

    pub fn inverse(&self) -> Self {
        BraidWord { letters: self.letters.iter().rev().map(|&(i, e)| (i, -e)).collect() }
    }

    pub fn concat(&self, o: &BraidWord) -> Self {
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&o.letters);
        BraidWord { letters }
    }

    pub fn pow(&self, e: i64) -> Self {
        let base = if e < 0 { self.inverse() } else { self.clone() };
        let mut letters = Vec::new();
        for _ in 0..e.unsigned_abs() {
            letters.extend_from_slice(&base.letters);
        }
        BraidWord { letters }
    }

    /// Parses words like `(1 2)^3`, `1 -2 1`, `2^-1 (1 3)^2`. A negative index is an
    /// inverse letter.
    pub fn parse(s: &str) -> Result<BraidWord> {
        let toks = tokenize(s)?;
        let mut pos = 0;
        let w = parse_seq(&toks, &mut pos)?;
        if pos != toks.len() {
            return Err(MstabError::Parse(format!("unexpected '{:?}' in braid word '{s}'", toks[pos])));
        }
        Ok(w)
    }
}

impl fmt::Display for BraidWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> =
            self.letters.iter().map(|&(i, e)| if e < 0 { format!("-{i}") } else { i.to_string() }).collect();
        write!(f, "{}", parts.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(i64),
    Open,
    Close,
    Caret,
}

fn tokenize(s: &str) -> Result<Vec<Tok>> {
    let cs: Vec<char> = s.chars().collect();
    let mut out = vec![];
    let mut i = 0;
    while i < cs.len() {
        let c = cs[i];
        match c {
            ' ' | ',' | '*' | '\t' => i += 1,
            '(' => {
                out.push(Tok::Open);
                i += 1
            }
            ')' => {
                out.push(Tok::Close);
                i += 1
            }
            '^' => {
                out.push(Tok::Caret);
                i += 1
            }
            '-' | '0'..='9' => {
                let st = i;
                i += 1;
                while i < cs.len() && cs[i].is_ascii_digit() {
                    i += 1;
                }
                let t: String = cs[st..i].iter().collect();
                out.push(Tok::Int(t.parse().map_err(|_| MstabError::Parse(format!("bad integer '{t}'")))?));
            }
            _ => return Err(MstabError::Parse(format!("unexpected character '{c}' in braid word"))),
        }
    }
    Ok(out)
}

fn parse_seq(toks: &[Tok], pos: &mut usize) -> Result<BraidWord> {
    let mut w = BraidWord::default();
    while *pos < toks.len() && toks[*pos] != Tok::Close {
        let atom = match &toks[*pos] {
            Tok::Int(k) => {
                *pos += 1;
                if *k == 0 {
                    return Err(MstabError::Parse("generator index 0".into()));
                }
                BraidWord::new(vec![(k.unsigned_abs() as u32, if *k < 0 { -1 } else { 1 })])
            }
            Tok::Open => {
                *pos += 1;
                let inner = parse_seq(toks, pos)?;
                if toks.get(*pos) != Some(&Tok::Close) {
                    return Err(MstabError::Parse("unbalanced parenthesis".into()));
                }
                *pos += 1;
                inner
            }
            t => return Err(MstabError::Parse(format!("unexpected token {t:?}"))),
        };
        let atom = if toks.get(*pos) == Some(&Tok::Caret) {
            *pos += 1;
            match toks.get(*pos) {
                Some(Tok::Int(e)) => {
                    *pos += 1;
                    atom.pow(*e)
                }
                _ => return Err(MstabError::Parse("exponent expected after '^'".into())),
            }
        } else {
            atom
        };
        w = w.concat(&atom);
    }
    Ok(w)
}

/// Product of the generator matrices in word order.
pub fn word_matrix(q: &QuiverWithPotential, w: &BraidWord) -> Result<TwistMatrix> {
    let mut m = TwistMatrix::identity(q.rank());
    for &(i, e) in &w.letters {
        m = m.mul(&twist_matrix(q, i, e)?);
    }
    Ok(m)
}

/// `(tau_{i1} ... tau_{ir})^{r+1}` for a run of consecutive vertices of the linear quiver.
pub fn theta_word(interval: &[u32], n: usize) -> Result<BraidWord> {
    let mut iv = interval.to_vec();
    iv.sort_unstable();
    iv.dedup();
    if iv.is_empty() {
        return Err(MstabError::Invalid("empty vertex set".into()));
    }
    if iv.windows(2).any(|w| w[1] != w[0] + 1) {
        return Err(MstabError::Invalid(format!("vertex set {iv:?} is not connected")));
    }
    if iv[0] == 0 || *iv.last().unwrap() as usize > n {
        return Err(MstabError::UnknownVertex(if iv[0] == 0 { 0 } else { *iv.last().unwrap() }));
    }
    let base = BraidWord::new(iv.iter().map(|&i| (i, 1)).collect());
    Ok(base.pow(iv.len() as i64 + 1))
}

/// Checks every defining relation of the braid group of `q` on twist matrices.
/// Returns the list of failed relations (empty on success).
pub fn check_braid_relations(q: &QuiverWithPotential) -> Result<Vec<String>> {
    let mut failures = vec![];
    let vs = &q.vertices;
    let m = |i: u32| twist_matrix(q, i, 1);
    for (a, &i) in vs.iter().enumerate() {
        for &j in &vs[a + 1..] {
            let (ti, tj) = (m(i)?, m(j)?);
            if q.has_arrow(i, j) || q.has_arrow(j, i) {
                if ti.mul(&tj).mul(&ti) != tj.mul(&ti).mul(&tj) {
                    failures.push(format!("braid({i},{j})"));
                }
            } else if ti.mul(&tj) != tj.mul(&ti) {
                failures.push(format!("commute({i},{j})"));
            }
        }
    }
    // cyclic relation for an oriented triangle a -> b -> c -> a:
    // t_a t_b t_c t_a = t_b t_c t_a t_b = t_c t_a t_b t_c
    for c in &q.cycles {
        let r = |k: usize| -> Result<TwistMatrix> {
            let w = BraidWord::new((0..4).map(|t| (c[(k + t) % 3], 1)).collect());
            word_matrix(q, &w)
        };
        let (r0, r1, r2) = (r(0)?, r(1)?, r(2)?);
        if r0 != r1 || r1 != r2 {
            failures.push(format!("cycle{c:?}"));
        }
    }
    Ok(failures)
}

/// Twist data of one level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelTwistData {
    pub sizes: Vec<usize>,
    pub kappa: Vec<u64>,
    pub kappa_hat: Vec<u64>,
    pub ell: u64,
    pub exponents: Vec<u64>,
    /// `c_{i,j}` is `theta_I` raised to this power (1 for odd size, 2 for even).
    pub theta_powers: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwistGroupData {
    pub levels: Vec<LevelTwistData>,
}

pub fn kappa_hat(size: usize) -> u64 {
    let k = size as u64 + 3;
    if size % 2 == 1 {
        k / 2
    } else {
        k
    }
}

/// `kappa`, `kappa_hat`, `ell = lcm kappa_hat` and exponents `ell / kappa_hat` per level.
pub fn simple_twist_data(rho: &[Vec<usize>]) -> Result<TwistGroupData> {
    let mut levels = vec![];
    for sizes in rho {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(MstabError::Invalid(format!("bad component sizes {sizes:?}")));
        }
        let kappa: Vec<u64> = sizes.iter().map(|&s| s as u64 + 3).collect();
        let kh: Vec<u64> = sizes.iter().map(|&s| kappa_hat(s)).collect();
        let ell = kh.iter().fold(1u64, |a, &b| a.lcm(&b));
        let mut exponents = vec![];
        for &k in &kh {
            if ell % k != 0 {
                return Err(MstabError::Internal(format!("non-integral exponent {ell}/{k}")));
            }
            exponents.push(ell / k);
        }
        let theta_powers = sizes.iter().map(|&s| if s % 2 == 1 { 1 } else { 2 }).collect();
        levels.push(LevelTwistData { sizes: sizes.clone(), kappa, kappa_hat: kh, ell, exponents, theta_powers });
    }
    Ok(TwistGroupData { levels })
}

/// The word of `c_i = prod_j c_{i,j}^{ell / kappa_hat_j}` for components given as
/// vertex runs of the linear quiver.
pub fn simple_twist_word(components: &[Vec<u32>], n: usize) -> Result<BraidWord> {
    let sizes: Vec<usize> = components.iter().map(|c| c.len()).collect();
    let data = simple_twist_data(&[sizes])?;
    let lvl = &data.levels[0];
    let mut w = BraidWord::default();
    for (j, comp) in components.iter().enumerate() {
        let theta = theta_word(comp, n)?;
        w = w.concat(&theta.pow(lvl.theta_powers[j] as i64 * lvl.exponents[j] as i64));
    }
    Ok(w)
}
