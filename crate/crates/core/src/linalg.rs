//! Small exact linear algebra over the rationals.

use num_traits::{ToPrimitive, Zero};

use crate::number::{q, Q};

/// Row-reduces `m` in place; returns the pivot columns.
fn rref(m: &mut [Vec<Q>]) -> Vec<usize> {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut pivots = vec![];
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, p);
        let inv = q(1) / &m[r][c];
        for x in m[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let d = &f * &m[r][j];
                    m[i][j] -= d;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn det_i64(rows: &[Vec<i64>]) -> i64 {
    let n = rows.len();
    let mut m: Vec<Vec<Q>> = rows.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect();
    let mut det = q(1);
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !m[i][c].is_zero()) else { return 0 };
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        det *= &m[c][c];
        for i in c + 1..n {
            if m[i][c].is_zero() {
                continue;
            }
            let f = &m[i][c] / &m[c][c];
            for j in c..n {
                let d = &f * &m[c][j];
                m[i][j] -= d;
            }
        }
    }
    det.to_integer().to_i64().unwrap_or(0)
}

/// Rank of a family of integer vectors.
pub fn rank(vectors: &[Vec<i64>]) -> usize {
    let mut m: Vec<Vec<Q>> = vectors.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect();
    rref(&mut m).len()
}

/// Coordinates of `v` in terms of the (independent) `basis`, if `v` lies in its span.
pub fn coordinates(basis: &[Vec<i64>], v: &[i64]) -> Option<Vec<Q>> {
    let n = v.len();
    let k = basis.len();
    let mut m: Vec<Vec<Q>> = (0..n)
        .map(|i| {
            let mut row: Vec<Q> = basis.iter().map(|b| q(b[i])).collect();
            row.push(q(v[i]));
            row
        })
        .collect();
    let pivots = rref(&mut m);
    if pivots.contains(&k) {
        return None;
    }
    let mut x = vec![Q::zero(); k];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = m[r][k].clone();
    }
    Some(x)
}

/// Inverse of a square integer matrix given by rows, if it is invertible.
pub fn inverse(rows: &[Vec<i64>]) -> Option<Vec<Vec<Q>>> {
    let n = rows.len();
    let mut m: Vec<Vec<Q>> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row: Vec<Q> = r.iter().map(|&x| q(x)).collect();
            row.extend((0..n).map(|j| q((i == j) as i64)));
            row
        })
        .collect();
    let pivots = rref(&mut m);
    if pivots.len() < n || pivots[n - 1] != n - 1 {
        return None;
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// True if every vector of `a` lies in the span of `b` and vice versa.
pub fn same_span(a: &[Vec<i64>], b: &[Vec<i64>]) -> bool {
    let ra = rank(a);
    let rb = rank(b);
    let mut both = a.to_vec();
    both.extend_from_slice(b);
    ra == rb && rank(&both) == ra
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::number::qf;

    #[test]
    fn determinant_and_inverse() {
        let m = vec![vec![2, 1], vec![1, 1]];
        assert_eq!(det_i64(&m), 1);
        let inv = inverse(&m).unwrap();
        assert_eq!(inv, vec![vec![q(1), q(-1)], vec![q(-1), q(2)]]);
        assert_eq!(det_i64(&[vec![1, 2], vec![2, 4]]), 0);
        assert!(inverse(&[vec![1, 2], vec![2, 4]]).is_none());
    }

    #[test]
    fn coordinates_in_span() {
        let basis = vec![vec![1, 1, 0], vec![0, 2, 0]];
        assert_eq!(coordinates(&basis, &[1, 2, 0]).unwrap(), vec![q(1), qf(1, 2)]);
        assert!(coordinates(&basis, &[0, 0, 1]).is_none());
        assert!(same_span(&basis, &[vec![1, 0, 0], vec![0, 1, 0]]));
    }
}
