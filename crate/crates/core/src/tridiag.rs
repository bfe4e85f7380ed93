//! Thomas algorithm for the tridiagonal systems of the signal solver.

use crate::error::{check_len, Error, Result};

/// Tridiagonal system `sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]`.
///
/// `sub[0]` and `sup[N-1]` are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagSystem {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl TridiagSystem {
    pub fn zeros(n: usize) -> Self {
        TridiagSystem {
            sub: vec![0.0; n],
            diag: vec![0.0; n],
            sup: vec![0.0; n],
            rhs: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `A x` for the stored bands.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.sub[i] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.sup[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// Forward elimination and back substitution without pivoting.
    ///
    /// Valid for the diagonally dominant systems assembled in [`crate::signal`].
    pub fn solve(&self) -> Result<Vec<f64>> {
        let n = self.len();
        check_len(n, self.sub.len())?;
        check_len(n, self.sup.len())?;
        check_len(n, self.rhs.len())?;
        if n == 0 {
            return Ok(Vec::new());
        }
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut den = self.diag[0];
        if den == 0.0 || !den.is_finite() {
            return Err(Error::Domain("singular tridiagonal system".into()));
        }
        c[0] = self.sup[0] / den;
        d[0] = self.rhs[0] / den;
        for i in 1..n {
            den = self.diag[i] - self.sub[i] * c[i - 1];
            if den == 0.0 || !den.is_finite() {
                return Err(Error::Domain("singular tridiagonal system".into()));
            }
            c[i] = self.sup[i] / den;
            d[i] = (self.rhs[i] - self.sub[i] * d[i - 1]) / den;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        if d.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("tridiagonal solve"));
        }
        Ok(d)
    }
}
