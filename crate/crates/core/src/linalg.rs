//! Exact rational linear algebra: Gaussian elimination over `BigRational`
//! with an augmented multiplier tableau, so that an inconsistent system
//! yields a checkable certificate (a row combination of the original
//! equations summing to 0 = nonzero).

use num::rational::BigRational;
use num::Zero;

/// Outcome of solving `A x = b`.
#[derive(Debug, Clone)]
pub enum Solve {
    /// One solution (free variables set to zero).
    Solution(Vec<BigRational>),
    /// Coefficients `c` with `c^T A = 0` but `c^T b != 0`.
    Inconsistent(Vec<BigRational>),
}

/// Solve the (possibly over- or under-determined) system exactly.
///
/// `rows` are the coefficient rows of `A`; `rhs` the right-hand sides.
pub fn solve(rows: &[Vec<BigRational>], rhs: &[BigRational]) -> Solve {
    assert_eq!(rows.len(), rhs.len());
    let m = rows.len();
    let n = if m == 0 { 0 } else { rows[0].len() };
    // Working matrix [A | b | I]; the identity block tracks row operations so
    // an inconsistent row directly reads off its certificate.
    let mut w: Vec<Vec<BigRational>> = (0..m)
        .map(|i| {
            let mut r = rows[i].clone();
            assert_eq!(r.len(), n);
            r.push(rhs[i].clone());
            for j in 0..m {
                r.push(if i == j {
                    BigRational::from_integer(1.into())
                } else {
                    BigRational::zero()
                });
            }
            r
        })
        .collect();

    let mut pivot_of_col: Vec<Option<usize>> = vec![None; n];
    let mut row = 0usize;
    for col in 0..n {
        // Partial pivoting by simplest nonzero entry keeps numbers small.
        let pick = (row..m)
            .filter(|&r| !w[r][col].is_zero())
            .min_by_key(|&r| w[r][col].numer().magnitude().bits() + w[r][col].denom().magnitude().bits());
        let Some(p) = pick else { continue };
        w.swap(row, p);
        let inv = w[row][col].recip();
        for v in w[row].iter_mut() {
            *v *= &inv;
        }
        for r in 0..m {
            if r != row && !w[r][col].is_zero() {
                let f = w[r][col].clone();
                let (head, tail) = w.split_at_mut(r.max(row));
                let (src, dst) = if r < row {
                    (&tail[0], &mut head[r])
                } else {
                    (&head[row], &mut tail[0])
                };
                for (d, s) in dst.iter_mut().zip(src.iter()) {
                    *d -= &f * s;
                }
            }
        }
        pivot_of_col[col] = Some(row);
        row += 1;
        if row == m {
            break;
        }
    }

    // Any remaining row with zero coefficients but nonzero rhs is a certificate.
    for r in 0..m {
        if w[r][..n].iter().all(|v| v.is_zero()) && !w[r][n].is_zero() {
            return Solve::Inconsistent(w[r][n + 1..].to_vec());
        }
    }

    let mut x = vec![BigRational::zero(); n];
    for (col, p) in pivot_of_col.iter().enumerate() {
        if let Some(r) = p {
            x[col] = w[*r][n].clone();
        }
    }
    Solve::Solution(x)
}

/// Verify an inconsistency certificate against the original system.
pub fn certificate_holds(
    rows: &[Vec<BigRational>],
    rhs: &[BigRational],
    cert: &[BigRational],
) -> bool {
    let m = rows.len();
    if cert.len() != m || m == 0 {
        return false;
    }
    let n = rows[0].len();
    let mut lhs = vec![BigRational::zero(); n];
    let mut b = BigRational::zero();
    for i in 0..m {
        if cert[i].is_zero() {
            continue;
        }
        for j in 0..n {
            lhs[j] += &cert[i] * &rows[i][j];
        }
        b += &cert[i] * &rhs[i];
    }
    lhs.iter().all(|v| v.is_zero()) && !b.is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::rat;

    fn r(n: i64) -> BigRational {
        rat(n, 1)
    }

    #[test]
    fn solves_square_system() {
        // x + y = 3, x - y = 1  =>  x = 2, y = 1
        let rows = vec![vec![r(1), r(1)], vec![r(1), r(-1)]];
        match solve(&rows, &[r(3), r(1)]) {
            Solve::Solution(x) => assert_eq!(x, vec![r(2), r(1)]),
            _ => panic!("expected solution"),
        }
    }

    #[test]
    fn reports_certified_inconsistency() {
        // x + y = 1, x + y = 2
        let rows = vec![vec![r(1), r(1)], vec![r(1), r(1)]];
        let rhs = [r(1), r(2)];
        match solve(&rows, &rhs) {
            Solve::Inconsistent(c) => assert!(certificate_holds(&rows, &rhs, &c)),
            _ => panic!("expected inconsistency"),
        }
    }

    #[test]
    fn underdetermined_picks_zero_free_vars() {
        let rows = vec![vec![r(1), r(1), r(0)]];
        match solve(&rows, &[r(5)]) {
            Solve::Solution(x) => {
                assert_eq!(&x[0] + &x[1], r(5));
                assert_eq!(x[2], r(0));
            }
            _ => panic!("expected solution"),
        }
    }
}
