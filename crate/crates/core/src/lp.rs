//! Exact linear programming by vertex enumeration.
//!
//! The feasible sets that arise here are pointed bounded polytopes of the
//! form { x : A x >= 0, e . x = 1 } in dimension at most a dozen, so
//! enumerating basic feasible solutions over exact rationals is both simple
//! and fast. No floating point anywhere.

use num_traits::{One, Signed, Zero};

use crate::rational::BigRational;

/// maximize obj . x subject to row . x >= 0 for every row of `inequalities`
/// and `normalizer` . x = 1.
///
/// Returns the optimum and the lexicographically largest optimal vertex, or
/// `None` when the polytope is empty. Correct whenever the feasible set is a
/// bounded polytope (its optimum then sits at a vertex).
pub fn maximize_on_polytope(
    inequalities: &[Vec<BigRational>],
    normalizer: &[BigRational],
    objective: &[BigRational],
) -> Option<(BigRational, Vec<BigRational>)> {
    let dim = normalizer.len();
    debug_assert!(inequalities.iter().all(|r| r.len() == dim));
    debug_assert_eq!(objective.len(), dim);
    if dim == 0 {
        return None;
    }

    let mut best: Option<(BigRational, Vec<BigRational>)> = None;
    // A vertex is determined by dim-1 active inequalities plus the
    // normalizing equality.
    for active in combinations(inequalities.len(), dim - 1) {
        let mut system: Vec<Vec<BigRational>> = Vec::with_capacity(dim);
        let mut rhs: Vec<BigRational> = Vec::with_capacity(dim);
        for &i in &active {
            system.push(inequalities[i].clone());
            rhs.push(BigRational::zero());
        }
        system.push(normalizer.to_vec());
        rhs.push(BigRational::one());

        let Some(point) = solve_square(system, rhs) else {
            continue;
        };
        if !inequalities
            .iter()
            .all(|row| !dot(row, &point).is_negative())
        {
            continue;
        }
        let value = dot(objective, &point);
        let better = match &best {
            None => true,
            Some((bv, bx)) => value > *bv || (value == *bv && lex_gt(&point, bx)),
        };
        if better {
            best = Some((value, point));
        }
    }
    best
}

fn dot(a: &[BigRational], b: &[BigRational]) -> BigRational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn lex_gt(a: &[BigRational], b: &[BigRational]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x != y {
            return x > y;
        }
    }
    false
}

/// Gaussian elimination with exact rationals; `None` on singular systems.
#[allow(clippy::needless_range_loop)]
fn solve_square(
    mut m: Vec<Vec<BigRational>>,
    mut rhs: Vec<BigRational>,
) -> Option<Vec<BigRational>> {
    let n = m.len();
    debug_assert!(m.iter().all(|r| r.len() == n));
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        let inv = m[col][col].recip();
        for v in m[col].iter_mut() {
            *v *= &inv;
        }
        rhs[col] *= &inv;
        for row in 0..n {
            if row == col || m[row][col].is_zero() {
                continue;
            }
            let factor = m[row][col].clone();
            for c in col..n {
                let sub = &factor * &m[col][c];
                m[row][c] -= sub;
            }
            let sub = &factor * &rhs[col];
            rhs[row] -= sub;
        }
    }
    Some(rhs)
}

/// All k-element subsets of {0, .., n-1} in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        // advance
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
        }
        if idx[i] == i + n - k {
            return out;
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn simple_polytope_maximum() {
        // maximize x + y on { x >= 0, y >= x, x + 2y = 1 }:
        // vertices (0, 1/2) and (1/3, 1/3); optimum 2/3 at the latter.
        let ineqs = vec![vec![rat(1, 1), rat(0, 1)], vec![rat(-1, 1), rat(1, 1)]];
        let norm = vec![rat(1, 1), rat(2, 1)];
        let obj = vec![rat(1, 1), rat(1, 1)];
        let (value, point) = maximize_on_polytope(&ineqs, &norm, &obj).unwrap();
        assert_eq!(value, rat(2, 3));
        assert_eq!(point, vec![rat(1, 3), rat(1, 3)]);
    }

    #[test]
    fn tie_break_takes_lexicographically_largest_vertex() {
        // maximize the constant functional x + y on the segment from
        // (0, 1/2) to (1/4, 1/4)... on { x >= 0, y >= x, 2x + 2y = 1 } the
        // objective x + y is 1/2 everywhere; witness must be (1/4, 1/4).
        let ineqs = vec![vec![rat(1, 1), rat(0, 1)], vec![rat(-1, 1), rat(1, 1)]];
        let norm = vec![rat(2, 1), rat(2, 1)];
        let obj = vec![rat(1, 1), rat(1, 1)];
        let (value, point) = maximize_on_polytope(&ineqs, &norm, &obj).unwrap();
        assert_eq!(value, rat(1, 2));
        assert_eq!(point, vec![rat(1, 4), rat(1, 4)]);
    }

    #[test]
    fn empty_polytope() {
        // x >= 0 and -x - 1 ... normalizer -x = 1 forces x = -1, infeasible.
        let ineqs = vec![vec![rat(1, 1)]];
        let norm = vec![rat(-1, 1)];
        let obj = vec![rat(1, 1)];
        assert!(maximize_on_polytope(&ineqs, &norm, &obj).is_none());
    }

    #[test]
    fn combinations_enumerate_all_subsets() {
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
        assert!(combinations(2, 3).is_empty());
    }
}
