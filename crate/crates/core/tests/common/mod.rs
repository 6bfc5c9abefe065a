//! Small finite-dimensional problems with known solutions.

#![allow(dead_code, clippy::needless_range_loop)]

use std::cell::Cell;

use lavrentiev::grids::{SpaceGrid, TimeGrid, TrajectoryField};
use lavrentiev::pde::{forward, manufactured, ForwardConfig, Source};
use lavrentiev::pdsolver::ProblemBindings;
use lavrentiev::Result;
use ndarray::{Array1, Array2, ArrayView2};

/// `T(u) = Au − b`, `f = λ‖·‖₁` on first differences, `g = 0`, with plain
/// Euclidean inner products. Fields are stored as `n × 1` arrays.
pub struct Toy {
    pub a: Array2<f64>,
    pub b: Array1<f64>,
    pub lambda: f64,
    pub t_calls: Cell<usize>,
}

impl Toy {
    pub fn standard() -> Self {
        let a = ndarray::array![
            [4.0, 1.0, 0.0, 0.5, 0.0],
            [1.0, 3.0, 1.0, 0.0, 0.0],
            [0.0, 1.0, 5.0, 1.0, 0.0],
            [0.5, 0.0, 1.0, 2.5, 0.5],
            [0.0, 0.0, 0.0, 0.5, 2.0],
        ];
        let b = ndarray::array![1.0, 2.0, -1.0, 0.5, 3.0];
        Self::new(a, b, 0.6)
    }

    pub fn new(a: Array2<f64>, b: Array1<f64>, lambda: f64) -> Self {
        Self { a, b, lambda, t_calls: Cell::new(0) }
    }

    pub fn n(&self) -> usize {
        self.b.len()
    }

    /// `1/λ_max(A)` by power iteration.
    pub fn cocoercivity(&self) -> f64 {
        let mut x = Array1::from_elem(self.n(), 1.0);
        let mut lam = 0.0;
        for _ in 0..2000 {
            let y = self.a.dot(&x);
            lam = y.dot(&y).sqrt() / x.dot(&x).sqrt();
            x = &y / y.dot(&y).sqrt();
        }
        1.0 / lam
    }

    /// `‖L‖² = 2 + 2cos(π/n)` for the `(n−1) × n` difference matrix.
    pub fn l_norm_sq(&self) -> f64 {
        2.0 + 2.0 * (std::f64::consts::PI / self.n() as f64).cos()
    }

    pub fn zeros_u(&self) -> Array2<f64> {
        Array2::zeros((self.n(), 1))
    }

    pub fn zeros_v(&self) -> Array2<f64> {
        Array2::zeros((self.n() - 1, 1))
    }

    /// Exact primal-dual solution by enumerating the sign patterns of `Lu`
    /// in the optimality system `Au + Lᵀξ = b`, `ξ_i ∈ λ ∂|·|((Lu)_i)`.
    pub fn exact_solution(&self) -> (Array2<f64>, Array2<f64>) {
        let n = self.n();
        let m = n - 1;
        let patterns = 3usize.pow(m as u32);
        for p in 0..patterns {
            let signs: Vec<i32> = (0..m).map(|i| (p / 3usize.pow(i as u32) % 3) as i32 - 1).collect();
            let free: Vec<usize> = (0..m).filter(|&i| signs[i] == 0).collect();
            let dim = n + free.len();
            let mut mat = Array2::<f64>::zeros((dim, dim));
            let mut rhs = Array1::<f64>::zeros(dim);
            // A u + Lᵀ ξ = b
            for r in 0..n {
                for c in 0..n {
                    mat[[r, c]] = self.a[[r, c]];
                }
                rhs[r] = self.b[r];
                for i in 0..m {
                    // (Lᵀξ)_r = ξ_{r−1} − ξ_r
                    let coef = if r == i + 1 { 1.0 } else if r == i { -1.0 } else { 0.0 };
                    if coef == 0.0 {
                        continue;
                    }
                    match free.iter().position(|&f| f == i) {
                        Some(k) => mat[[r, n + k]] = coef,
                        None => rhs[r] -= coef * self.lambda * signs[i] as f64,
                    }
                }
            }
            for (k, &i) in free.iter().enumerate() {
                mat[[n + k, i + 1]] = 1.0;
                mat[[n + k, i]] = -1.0;
            }
            let Some(sol) = gauss_solve(mat, rhs) else { continue };
            let u = sol.slice(ndarray::s![..n]).to_owned();
            let mut xi = Array1::<f64>::zeros(m);
            let mut ok = true;
            for i in 0..m {
                let d = u[i + 1] - u[i];
                if signs[i] == 0 {
                    let k = free.iter().position(|&f| f == i).unwrap();
                    xi[i] = sol[n + k];
                    ok &= xi[i].abs() <= self.lambda * (1.0 + 1e-12);
                } else {
                    xi[i] = self.lambda * signs[i] as f64;
                    ok &= d * signs[i] as f64 > 0.0;
                }
            }
            if ok {
                return (u.insert_axis(ndarray::Axis(1)), xi.insert_axis(ndarray::Axis(1)));
            }
        }
        panic!("no sign pattern satisfies the optimality system");
    }
}

pub fn gauss_solve(mut a: Array2<f64>, mut b: Array1<f64>) -> Option<Array1<f64>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[[i, k]].abs().total_cmp(&a[[j, k]].abs()))?;
        if a[[p, k]].abs() < 1e-13 {
            return None;
        }
        if p != k {
            for c in 0..n {
                a.swap([k, c], [p, c]);
            }
            b.swap(k, p);
        }
        for r in k + 1..n {
            let f = a[[r, k]] / a[[k, k]];
            for c in k..n {
                a[[r, c]] -= f * a[[k, c]];
            }
            b[r] -= f * b[k];
        }
    }
    let mut x = Array1::<f64>::zeros(n);
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|c| a[[k, c]] * x[c]).sum();
        x[k] = (b[k] - s) / a[[k, k]];
    }
    Some(x)
}

fn diff(u: ArrayView2<f64>) -> Array2<f64> {
    let n = u.nrows();
    Array2::from_shape_fn((n - 1, u.ncols()), |(i, j)| u[[i + 1, j]] - u[[i, j]])
}

fn diff_adjoint(v: ArrayView2<f64>) -> Array2<f64> {
    let m = v.nrows();
    Array2::from_shape_fn((m + 1, v.ncols()), |(i, j)| {
        let left = if i > 0 { v[[i - 1, j]] } else { 0.0 };
        let right = if i < m { v[[i, j]] } else { 0.0 };
        left - right
    })
}

impl ProblemBindings for Toy {
    fn operator(&self, u: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.t_calls.set(self.t_calls.get() + 1);
        let au = self.a.dot(&u.column(0)) - &self.b;
        Ok(au.insert_axis(ndarray::Axis(1)))
    }

    fn apply_l(&self, u: ArrayView2<f64>) -> Array2<f64> {
        diff(u)
    }

    fn apply_l_adjoint(&self, v: ArrayView2<f64>) -> Array2<f64> {
        diff_adjoint(v)
    }

    fn prox_g(&self, x: Array2<f64>, _alpha: f64) -> Result<Array2<f64>> {
        Ok(x)
    }

    fn prox_fstar(&self, v: Array2<f64>, _step: f64) -> Array2<f64> {
        v.mapv(|x| x.clamp(-self.lambda, self.lambda))
    }

    fn primal_dot(&self, a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64 {
        (&a * &b).sum()
    }

    fn dual_dot(&self, a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64 {
        (&a * &b).sum()
    }
}

pub fn dist(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    (a - b).mapv(|x| x * x).sum().sqrt()
}

pub fn solve_manufactured(nx: usize, nt: usize) -> Array2<f64> {
    let space = SpaceGrid::new(nx).unwrap();
    let time = TimeGrid::new(nt).unwrap();
    let f = Array2::from_shape_fn((nt, nx), |(m, j)| manufactured::source(time.node(m), space.node(j)));
    let mut y0 = Array1::from_shape_fn(nx, |j| manufactured::solution(0.0, space.node(j)));
    y0[0] = 0.0;
    y0[nx - 1] = 0.0;
    let cfg = ForwardConfig::new(space, time, y0).unwrap();
    forward(Source::Nodal(&TrajectoryField::new(f).unwrap()), &cfg).unwrap().into_inner()
}

/// Max over time of the discrete `L²(Ω)` distance between two solutions,
/// sampled on the coarser of the two meshes.
pub fn distance(coarse: &Array2<f64>, fine: &Array2<f64>) -> f64 {
    let (nt_c, nx_c) = coarse.dim();
    let (nt_f, nx_f) = fine.dim();
    let st = (nt_f - 1) / (nt_c - 1);
    let sx = (nx_f - 1) / (nx_c - 1);
    let h = 1.0 / (nx_c - 1) as f64;
    (0..nt_c)
        .map(|m| {
            let s: f64 = (0..nx_c).map(|j| (coarse[[m, j]] - fine[[m * st, j * sx]]).powi(2)).sum();
            (h * s).sqrt()
        })
        .fold(0.0, f64::max)
}

pub fn orders(sols: &[Array2<f64>]) -> Vec<f64> {
    let diffs: Vec<f64> = sols.windows(2).map(|w| distance(&w[0], &w[1])).collect();
    diffs.windows(2).map(|d| (d[0] / d[1]).log2()).collect()
}

