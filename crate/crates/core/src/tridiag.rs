//! Thomas algorithm for tridiagonal systems.

use crate::error::{Error, Result};

/// Solve `A x = rhs` where `A` has sub-diagonal `lower` (length n-1),
/// diagonal `diag` (length n) and super-diagonal `upper` (length n-1).
pub fn tridiagonal_solve(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let factor = TridiagFactor::new(lower, diag, upper)?;
    let mut out = rhs.to_vec();
    factor.solve_in_place(&mut out)?;
    Ok(out)
}

/// Forward-elimination coefficients of a fixed matrix, reused across
/// right-hand sides.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagFactor {
    lower: Vec<f64>,
    /// Eliminated super-diagonal `c'_i`.
    upper_elim: Vec<f64>,
    /// Reciprocal pivots.
    inv_pivot: Vec<f64>,
}

impl TridiagFactor {
    pub fn new(lower: &[f64], diag: &[f64], upper: &[f64]) -> Result<Self> {
        let n = diag.len();
        if n == 0 {
            return Err(Error::Input("empty tridiagonal system".into()));
        }
        if lower.len() + 1 != n || upper.len() + 1 != n {
            return Err(Error::Input(format!(
                "band lengths {}/{}/{} do not form a tridiagonal system",
                lower.len(),
                n,
                upper.len()
            )));
        }
        let mut upper_elim = vec![0.0; n.saturating_sub(1)];
        let mut inv_pivot = vec![0.0; n];
        let mut prev_c = 0.0;
        for i in 0..n {
            let l = if i > 0 { lower[i - 1] } else { 0.0 };
            let pivot = diag[i] - l * prev_c;
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::Numerical(format!("zero pivot in row {i}")));
            }
            inv_pivot[i] = 1.0 / pivot;
            if i + 1 < n {
                prev_c = upper[i] * inv_pivot[i];
                upper_elim[i] = prev_c;
            }
        }
        Ok(TridiagFactor {
            lower: lower.to_vec(),
            upper_elim,
            inv_pivot,
        })
    }

    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    /// Overwrite `rhs` with the solution.
    pub fn solve_in_place(&self, rhs: &mut [f64]) -> Result<()> {
        let n = self.len();
        if rhs.len() != n {
            return Err(Error::Input(format!(
                "right-hand side has length {}, system has {n}",
                rhs.len()
            )));
        }
        rhs[0] *= self.inv_pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i - 1] * rhs[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.upper_elim[i] * rhs[i + 1];
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity() {
        let v = vec![3.0, -1.0, 2.5, 7.0];
        let x = tridiagonal_solve(&[0.0; 3], &[1.0; 4], &[0.0; 3], &v).unwrap();
        assert_eq!(x, v);
    }

    #[test]
    fn three_by_three() {
        let x = tridiagonal_solve(&[-1.0, -1.0], &[2.0, 2.0, 2.0], &[-1.0, -1.0], &[1.0, 0.0, 1.0]).unwrap();
        for xi in x {
            assert!((xi - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn singleton_and_errors() {
        assert_eq!(tridiagonal_solve(&[], &[4.0], &[], &[2.0]).unwrap(), vec![0.5]);
        assert!(matches!(tridiagonal_solve(&[], &[0.0], &[], &[1.0]), Err(Error::Numerical(_))));
        assert!(matches!(tridiagonal_solve(&[1.0], &[1.0], &[], &[1.0]), Err(Error::Input(_))));
    }
}
