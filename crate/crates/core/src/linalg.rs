//! Exact Gaussian elimination over the rationals.

use crate::rational::Q;
use num::Zero;

/// Solves `a x = b`; `None` when `a` is singular.
pub fn solve_exact(mut a: Vec<Vec<Q>>, mut b: Vec<Q>) -> Option<Vec<Q>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &a[col][col];
            for c in col..n {
                let v = &f * &a[col][c];
                a[r][c] -= v;
            }
            let v = &f * &b[col];
            b[r] -= v;
        }
    }
    let mut x = vec![Q::zero(); n];
    for r in (0..n).rev() {
        let mut s = b[r].clone();
        for c in r + 1..n {
            s -= &a[r][c] * &x[c];
        }
        x[r] = s / &a[r][r];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qi;

    #[test]
    fn small_system() {
        let a = vec![vec![qi(0), qi(1)], vec![qi(2), qi(1)]];
        let x = solve_exact(a, vec![qi(3), qi(5)]).unwrap();
        assert_eq!(x, vec![qi(1), qi(3)]);
        let s = vec![vec![qi(1), qi(2)], vec![qi(2), qi(4)]];
        assert!(solve_exact(s, vec![qi(1), qi(1)]).is_none());
    }
}
