//! Forward operator `A: u ↦ y` for
//!
//! ```text
//! y_t + y³ − Δy = u   in (0,1) × Ω,   y = 0 on ∂Ω,   y(0,·) = y0,
//! ```
//!
//! discretized with a linearly implicit Crank–Nicolson scheme: diffusion is
//! averaged over the step, and the cubic is written as `ŷ² · (y^m + y^{m+1})/2`
//! with the coefficient `ŷ = (3y^m − y^{m−1})/2` extrapolated to the step
//! midpoint (`ŷ = y^0` on the first step). Every step is a single
//! tridiagonal solve on the interior nodes.

use ndarray::{s, Array1, Array2, ArrayView1, Zip};

use crate::error::{Error, Result};
use crate::grids::{
    prolong_raw, restrict_raw, trajectory_dot_raw, GammaGrid, PrimalField, SpaceGrid, TimeGrid,
    TrajectoryField,
};
use crate::tridiag::TridiagMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct ForwardConfig {
    pub space: SpaceGrid,
    pub time: TimeGrid,
    y0: Array1<f64>,
}

impl ForwardConfig {
    pub fn new(space: SpaceGrid, time: TimeGrid, y0: Array1<f64>) -> Result<Self> {
        if y0.len() != space.len() {
            return Err(Error::Shape(format!(
                "initial condition has {} entries, grid has {} nodes",
                y0.len(),
                space.len()
            )));
        }
        if y0[0] != 0.0 || y0[y0.len() - 1] != 0.0 {
            return Err(Error::Config("initial condition must vanish at x = 0 and x = 1".into()));
        }
        if y0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("initial condition"));
        }
        Ok(Self { space, time, y0 })
    }

    pub fn with_zero_initial(space: SpaceGrid, time: TimeGrid) -> Self {
        Self { space, time, y0: Array1::zeros(space.len()) }
    }

    pub fn y0(&self) -> ArrayView1<'_, f64> {
        self.y0.view()
    }
}

/// Right-hand side of the PDE.
#[derive(Clone, Copy, Debug)]
pub enum Source<'a> {
    /// Piecewise constant in time; step `m` uses the profile of the
    /// Γ-interval containing `[t_m, t_{m+1})`.
    Primal(&'a PrimalField, &'a GammaGrid),
    /// Sampled at the fine nodes; step `m` uses `(f_m + f_{m+1}) / 2`.
    Nodal(&'a TrajectoryField),
}

impl Source<'_> {
    fn check(&self, cfg: &ForwardConfig) -> Result<()> {
        match self {
            Source::Primal(u, gamma) => {
                gamma.check_time(&cfg.time)?;
                u.check(gamma, &cfg.space)
            }
            Source::Nodal(f) => f.check(&cfg.time, &cfg.space),
        }
    }
}

/// Runs the time stepper on a raw source array.
///
/// `primal` selects how `src` is read: as `(N, n_x)` interval profiles
/// (with `gamma`) or as `(n_t, n_x)` nodal samples.
fn step_all(
    cfg: &ForwardConfig,
    src: ndarray::ArrayView2<f64>,
    gamma: Option<&GammaGrid>,
) -> Result<Array2<f64>> {
    let nx = cfg.space.len();
    let nt = cfg.time.len();
    let tau = cfg.time.tau();
    let h = cfg.space.h();
    let r = 0.5 * tau / (h * h);
    let ni = nx - 2;

    let mut y = Array2::<f64>::zeros((nt, nx));
    y.row_mut(0).assign(&cfg.y0);

    let mut diag = vec![0.0; ni];
    let mut rhs = vec![0.0; ni];
    let mut cprime = vec![0.0; ni];
    let mut step_src = Array1::<f64>::zeros(nx);

    for m in 0..nt - 1 {
        match gamma {
            Some(g) => step_src.assign(&src.row(g.interval_of_node(m))),
            None => {
                Zip::from(&mut step_src)
                    .and(src.row(m))
                    .and(src.row(m + 1))
                    .for_each(|s, &a, &b| *s = 0.5 * (a + b));
            }
        }
        {
            let cur = y.row(m);
            let prev = if m > 0 { y.row(m - 1) } else { y.row(0) };
            for k in 0..ni {
                let j = k + 1;
                let yhat = if m == 0 { cur[j] } else { 1.5 * cur[j] - 0.5 * prev[j] };
                let q = 0.5 * tau * yhat * yhat;
                diag[k] = 1.0 + 2.0 * r + q;
                rhs[k] = (1.0 - 2.0 * r - q) * cur[j] + r * (cur[j - 1] + cur[j + 1]) + tau * step_src[j];
            }
        }
        // Thomas sweep with constant off-diagonals -r.
        let mut pivot = diag[0];
        cprime[0] = -r / pivot;
        rhs[0] /= pivot;
        for k in 1..ni {
            pivot = diag[k] + r * cprime[k - 1];
            if pivot == 0.0 {
                return Err(Error::Singular { row: k });
            }
            cprime[k] = -r / pivot;
            rhs[k] = (rhs[k] + r * rhs[k - 1]) / pivot;
        }
        for k in (0..ni.saturating_sub(1)).rev() {
            rhs[k] -= cprime[k] * rhs[k + 1];
        }
        let mut next = y.row_mut(m + 1);
        for k in 0..ni {
            next[k + 1] = rhs[k];
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("forward solution"));
    }
    Ok(y)
}

/// Solves the semilinear parabolic problem for the given source.
pub fn forward(source: Source<'_>, cfg: &ForwardConfig) -> Result<TrajectoryField> {
    source.check(cfg)?;
    let y = match source {
        Source::Primal(u, gamma) => {
            if u.values().iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("source"));
            }
            step_all(cfg, u.view(), Some(gamma))?
        }
        Source::Nodal(f) => {
            if f.values().iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("source"));
            }
            step_all(cfg, f.view(), None)?
        }
    };
    Ok(TrajectoryField::from_array_unchecked(y))
}

/// `A(u)` for a Γ-piecewise-constant source on raw arrays.
pub(crate) fn forward_primal_raw(
    u: ndarray::ArrayView2<f64>,
    gamma: &GammaGrid,
    cfg: &ForwardConfig,
) -> Result<Array2<f64>> {
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("source"));
    }
    step_all(cfg, u, Some(gamma))
}

/// `T(u) = restrict(A(u) − y^δ)`: the cocoercive operator of the inclusion.
pub fn apply_t(
    u: &PrimalField,
    y_delta: &TrajectoryField,
    cfg: &ForwardConfig,
    gamma: &GammaGrid,
) -> Result<PrimalField> {
    y_delta.check(&cfg.time, &cfg.space)?;
    let y = forward(Source::Primal(u, gamma), cfg)?;
    let diff = y.values() - y_delta.values();
    Ok(PrimalField::from_array_unchecked(restrict_raw(diff.view(), gamma)))
}

/// `⟨Au − Av, u − v⟩ / ‖Au − Av‖²` with space-time inner products on the
/// fine mesh.
pub fn cocoercivity_ratio(
    u: &PrimalField,
    v: &PrimalField,
    cfg: &ForwardConfig,
    gamma: &GammaGrid,
) -> Result<f64> {
    let yu = forward(Source::Primal(u, gamma), cfg)?;
    let yv = forward(Source::Primal(v, gamma), cfg)?;
    let dy = yu.values() - yv.values();
    let du = u.values() - v.values();
    let du_fine = prolong_raw(du.view(), gamma, &cfg.time);
    let num = trajectory_dot_raw(dy.view(), du_fine.view(), &cfg.time, &cfg.space);
    let den = trajectory_dot_raw(dy.view(), dy.view(), &cfg.time, &cfg.space);
    if den <= 0.0 {
        return Err(Error::Domain("A(u) = A(v): cocoercivity ratio undefined".into()));
    }
    Ok(num / den)
}

/// `−Δ_h y` on the interior nodes, with `y` zero at both ends.
pub fn neg_laplacian_interior(y: ArrayView1<f64>, grid: &SpaceGrid) -> Array1<f64> {
    let n = grid.len();
    let ih2 = 1.0 / (grid.h() * grid.h());
    Array1::from_shape_fn(n - 2, |k| {
        let j = k + 1;
        (2.0 * y[j] - y[j - 1] - y[j + 1]) * ih2
    })
}

/// Steady state `y³ − Δ_h y = c` with homogeneous Dirichlet data, by damped
/// Newton iteration. Returns the full profile including the zero ends.
pub fn steady_state(c: ArrayView1<f64>, grid: &SpaceGrid, tol: f64, max_iter: usize) -> Result<Array1<f64>> {
    let n = grid.len();
    if c.len() != n {
        return Err(Error::Shape("steady-state source length".into()));
    }
    let ih2 = 1.0 / (grid.h() * grid.h());
    let interior = c.slice(s![1..n - 1]);
    let residual = |y: &Array1<f64>| -> Array1<f64> {
        let lap = neg_laplacian_interior(y.view(), grid);
        Array1::from_shape_fn(n - 2, |k| y[k + 1].powi(3) + lap[k] - interior[k])
    };
    let norm = |r: &Array1<f64>| r.iter().fold(0.0f64, |a, v| a.max(v.abs()));

    let mut y = Array1::<f64>::zeros(n);
    let mut res = residual(&y);
    for _ in 0..max_iter {
        let rn = norm(&res);
        if rn <= tol {
            return Ok(y);
        }
        let jac = TridiagMatrix::new(
            vec![-ih2; n - 3],
            (0..n - 2).map(|k| 3.0 * y[k + 1] * y[k + 1] + 2.0 * ih2).collect(),
            vec![-ih2; n - 3],
        )?;
        let dy = jac.factor()?.solve(res.view())?;
        let mut step = 1.0;
        loop {
            let mut trial = y.clone();
            for k in 0..n - 2 {
                trial[k + 1] -= step * dy[k];
            }
            let tres = residual(&trial);
            if norm(&tres) < rn || step < 1e-8 {
                y = trial;
                res = tres;
                break;
            }
            step *= 0.5;
        }
    }
    if norm(&res) <= tol {
        Ok(y)
    } else {
        Err(Error::Divergence { iteration: max_iter, reason: "steady-state Newton did not converge".into() })
    }
}

/// Manufactured solution `y*(t,x) = e^{−t} sin(πx)` and its source.
pub mod manufactured {
    use std::f64::consts::PI;

    pub fn solution(t: f64, x: f64) -> f64 {
        (-t).exp() * (PI * x).sin()
    }

    /// `y*_t + (y*)³ − y*_xx`.
    pub fn source(t: f64, x: f64) -> f64 {
        let s = (PI * x).sin();
        let e = (-t).exp();
        e * s * (PI * PI - 1.0) + (e * s).powi(3)
    }
}
