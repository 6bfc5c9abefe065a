//! Tridiagonal matrices, the Thomas algorithm, and the two 1D operators
//! built on them: `I - cΔ` with Neumann closure (Helmholtz prox) and with
//! homogeneous Dirichlet conditions (implicit diffusion).

use ndarray::{Array1, ArrayView1, ArrayViewMut1};

use crate::error::{Error, Result};
use crate::grids::SpaceGrid;

#[derive(Clone, Debug, PartialEq)]
pub struct TridiagMatrix {
    /// Sub-diagonal, `lower[j]` sits at row `j + 1`, column `j`.
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    /// Super-diagonal, `upper[j]` sits at row `j`, column `j + 1`.
    pub upper: Vec<f64>,
}

impl TridiagMatrix {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 || lower.len() + 1 != n || upper.len() + 1 != n {
            return Err(Error::Shape(format!(
                "tridiagonal bands of lengths {}/{}/{}",
                lower.len(),
                n,
                upper.len()
            )));
        }
        Ok(Self { lower, diag, upper })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            lower: vec![0.0; n.saturating_sub(1)],
            diag: vec![1.0; n],
            upper: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `|diag_j| > |lower_{j-1}| + |upper_j|` for every row.
    pub fn is_strictly_dominant(&self) -> bool {
        (0..self.len()).all(|j| {
            let off = if j > 0 { self.lower[j - 1].abs() } else { 0.0 }
                + if j + 1 < self.len() { self.upper[j].abs() } else { 0.0 };
            self.diag[j].abs() > off
        })
    }

    pub fn apply(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let n = self.len();
        Array1::from_shape_fn(n, |j| {
            let mut s = self.diag[j] * x[j];
            if j > 0 {
                s += self.lower[j - 1] * x[j - 1];
            }
            if j + 1 < n {
                s += self.upper[j] * x[j + 1];
            }
            s
        })
    }

    /// Thomas forward elimination, reusable for many right-hand sides.
    pub fn factor(&self) -> Result<TridiagLu> {
        let n = self.len();
        let mut inv_pivot = vec![0.0; n];
        let mut upper = vec![0.0; n.saturating_sub(1)];
        let mut pivot = self.diag[0];
        for j in 0..n {
            if j > 0 {
                pivot = self.diag[j] - self.lower[j - 1] * upper[j - 1];
            }
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::Singular { row: j });
            }
            inv_pivot[j] = 1.0 / pivot;
            if j + 1 < n {
                upper[j] = self.upper[j] * inv_pivot[j];
            }
        }
        Ok(TridiagLu { lower: self.lower.clone(), upper, inv_pivot })
    }
}

/// Factored form of a [`TridiagMatrix`].
#[derive(Clone, Debug)]
pub struct TridiagLu {
    lower: Vec<f64>,
    upper: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl TridiagLu {
    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    /// Solves in place; `x` holds the right-hand side on entry.
    pub fn solve_in_place(&self, mut x: ArrayViewMut1<f64>) {
        let n = self.len();
        x[0] *= self.inv_pivot[0];
        for j in 1..n {
            x[j] = (x[j] - self.lower[j - 1] * x[j - 1]) * self.inv_pivot[j];
        }
        for j in (0..n - 1).rev() {
            x[j] -= self.upper[j] * x[j + 1];
        }
    }

    pub fn solve(&self, rhs: ArrayView1<f64>) -> Result<Array1<f64>> {
        if rhs.len() != self.len() {
            return Err(Error::Shape(format!(
                "right-hand side of length {} for a {}x{} system",
                rhs.len(),
                self.len(),
                self.len()
            )));
        }
        let mut x = rhs.to_owned();
        self.solve_in_place(x.view_mut());
        Ok(x)
    }
}

pub fn solve_tridiag(m: &TridiagMatrix, rhs: ArrayView1<f64>) -> Result<Array1<f64>> {
    m.factor()?.solve(rhs)
}

fn check_coeff(c: f64) -> Result<()> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::Domain(format!("diffusion coefficient must be finite and >= 0, got {c}")));
    }
    Ok(())
}

/// `I - cΔ_h` on all `n_x` nodes with homogeneous Neumann conditions imposed
/// through mirrored ghost nodes.
pub fn assemble_helmholtz_neumann(c: f64, grid: &SpaceGrid) -> Result<TridiagMatrix> {
    check_coeff(c)?;
    let n = grid.len();
    let r = c / (grid.h() * grid.h());
    let diag = vec![1.0 + 2.0 * r; n];
    let mut lower = vec![-r; n - 1];
    let mut upper = vec![-r; n - 1];
    upper[0] = -2.0 * r;
    lower[n - 2] = -2.0 * r;
    TridiagMatrix::new(lower, diag, upper)
}

/// `I - cΔ_h` on the `n_x - 2` interior nodes with homogeneous Dirichlet
/// conditions (boundary unknowns eliminated).
pub fn assemble_dirichlet_diffusion(c: f64, grid: &SpaceGrid) -> Result<TridiagMatrix> {
    check_coeff(c)?;
    let n = grid.len() - 2;
    let r = c / (grid.h() * grid.h());
    TridiagMatrix::new(vec![-r; n - 1], vec![1.0 + 2.0 * r; n], vec![-r; n - 1])
}
