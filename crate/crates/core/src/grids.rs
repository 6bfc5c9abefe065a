//! Space and time meshes, the coarse knot grid Γ, and the three field
//! containers used throughout the crate.
//!
//! Quadrature conventions:
//!
//! * space: composite trapezoidal rule on the uniform mesh of `[0, 1]`
//!   (weights `h/2, h, …, h, h/2`);
//! * time: left-endpoint rectangle rule on the fine mesh, i.e. node `t_m`
//!   carries weight `τ` for `m = 0..n_t-1` and the final node `t = 1` carries
//!   no weight.
//!
//! With these rules restriction to Γ (interval means) and prolongation
//! (piecewise-constant extension) are exact adjoints, and the Neumann
//! Helmholtz matrix is self-adjoint.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Uniform mesh `x_j = j h` on `[0, 1]`, `j = 0..n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpaceGrid {
    n: usize,
    h: f64,
}

impl SpaceGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Config(format!("space grid needs at least 3 nodes, got {n}")));
        }
        Ok(Self { n, h: 1.0 / (n - 1) as f64 })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn node(&self, j: usize) -> f64 {
        if j + 1 == self.n {
            1.0
        } else {
            j as f64 * self.h
        }
    }

    pub fn nodes(&self) -> Array1<f64> {
        Array1::from_shape_fn(self.n, |j| self.node(j))
    }

    /// Quadrature weight of node `j`.
    #[inline]
    pub fn weight(&self, j: usize) -> f64 {
        if j == 0 || j + 1 == self.n {
            0.5 * self.h
        } else {
            self.h
        }
    }

    /// `⟨a, b⟩_{L²(Ω)}` without length checks.
    #[inline]
    pub(crate) fn dot_unchecked(&self, a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
        let n = self.n;
        let mut interior = 0.0;
        for j in 1..n - 1 {
            interior += a[j] * b[j];
        }
        self.h * (interior + 0.5 * (a[0] * b[0] + a[n - 1] * b[n - 1]))
    }

    /// Discrete `L²(Ω)` inner product of two spatial profiles.
    pub fn dot(&self, a: ArrayView1<f64>, b: ArrayView1<f64>) -> Result<f64> {
        if a.len() != self.n || b.len() != self.n {
            return Err(Error::Shape(format!(
                "profiles of length {} and {} on a grid with {} nodes",
                a.len(),
                b.len(),
                self.n
            )));
        }
        Ok(self.dot_unchecked(a, b))
    }

    pub fn norm(&self, a: ArrayView1<f64>) -> Result<f64> {
        self.dot(a, a).map(f64::sqrt)
    }
}

/// Free-function form of [`SpaceGrid::dot`].
pub fn inner_product_space(a: ArrayView1<f64>, b: ArrayView1<f64>, grid: &SpaceGrid) -> Result<f64> {
    grid.dot(a, b)
}

/// Uniform fine time mesh `t_m = m τ` on `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    n: usize,
    tau: f64,
}

impl TimeGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Config(format!("time grid needs at least 3 nodes, got {n}")));
        }
        Ok(Self { n, tau: 1.0 / (n - 1) as f64 })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn steps(&self) -> usize {
        self.n - 1
    }

    pub fn node(&self, m: usize) -> f64 {
        if m + 1 == self.n {
            1.0
        } else {
            m as f64 * self.tau
        }
    }
}

/// Knot set `0 = t_0 < t_1 < … < t_N = 1`, aligned with a [`TimeGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct GammaGrid {
    knots: Vec<f64>,
    /// Fine-grid index of each knot.
    nodes: Vec<usize>,
    time_nodes: usize,
}

impl GammaGrid {
    /// `intervals` equal intervals. `n_t - 1` must be divisible by `intervals`.
    pub fn uniform(intervals: usize, time: &TimeGrid) -> Result<Self> {
        if intervals == 0 {
            return Err(Error::Config("Γ needs at least one interval".into()));
        }
        let knots: Vec<f64> = (0..=intervals).map(|i| i as f64 / intervals as f64).collect();
        Self::from_knots(&knots, time)
    }

    pub fn from_knots(knots: &[f64], time: &TimeGrid) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::Config("Γ needs at least two knots".into()));
        }
        if knots[0] != 0.0 || knots[knots.len() - 1] != 1.0 {
            return Err(Error::Config("Γ must start at 0 and end at 1".into()));
        }
        let steps = time.steps() as f64;
        let mut nodes = Vec::with_capacity(knots.len());
        for &t in knots {
            let pos = t * steps;
            let m = pos.round();
            if (pos - m).abs() > 1e-9 * steps.max(1.0) {
                return Err(Error::Config(format!(
                    "knot {t} is not a node of the time grid with {} nodes",
                    time.len()
                )));
            }
            nodes.push(m as usize);
        }
        if nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("Γ knots must be strictly increasing".into()));
        }
        let knots = nodes
            .iter()
            .map(|&m| time.node(m))
            .collect();
        Ok(Self { knots, nodes, time_nodes: time.len() })
    }

    /// Number of intervals `N`.
    pub fn intervals(&self) -> usize {
        self.knots.len() - 1
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Length `t_i - t_{i-1}` of interval `i` (zero-based).
    #[inline]
    pub fn width(&self, i: usize) -> f64 {
        self.knots[i + 1] - self.knots[i]
    }

    pub fn widths(&self) -> Vec<f64> {
        (0..self.intervals()).map(|i| self.width(i)).collect()
    }

    /// Fine-grid node range `[start, end)` covered by interval `i`.
    pub fn node_range(&self, i: usize) -> std::ops::Range<usize> {
        self.nodes[i]..self.nodes[i + 1]
    }

    /// Interval containing fine node `m` (right-open, last interval closed).
    pub fn interval_of_node(&self, m: usize) -> usize {
        match self.nodes.binary_search(&m) {
            Ok(k) => k.min(self.intervals() - 1),
            Err(k) => k - 1,
        }
    }

    pub fn midpoint(&self, i: usize) -> f64 {
        0.5 * (self.knots[i] + self.knots[i + 1])
    }

    pub(crate) fn check_time(&self, time: &TimeGrid) -> Result<()> {
        if self.time_nodes != time.len() {
            return Err(Error::Config(format!(
                "Γ was aligned with {} time nodes but the time grid has {}",
                self.time_nodes,
                time.len()
            )));
        }
        Ok(())
    }

    pub fn time_nodes(&self) -> usize {
        self.time_nodes
    }
}

fn check_finite(values: &Array2<f64>, what: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

macro_rules! field {
    ($(#[$meta:meta])* $name:ident, $what:literal) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq)]
        pub struct $name(Array2<f64>);

        impl $name {
            pub fn new(values: Array2<f64>) -> Result<Self> {
                check_finite(&values, $what)?;
                Ok(Self(values))
            }

            pub fn zeros(rows: usize, cols: usize) -> Self {
                Self(Array2::zeros((rows, cols)))
            }

            pub fn values(&self) -> &Array2<f64> {
                &self.0
            }

            pub fn view(&self) -> ArrayView2<'_, f64> {
                self.0.view()
            }

            pub fn into_inner(self) -> Array2<f64> {
                self.0
            }

            pub fn rows(&self) -> usize {
                self.0.nrows()
            }

            pub fn cols(&self) -> usize {
                self.0.ncols()
            }

            pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
                self.0.row(i)
            }

            pub(crate) fn from_array_unchecked(values: Array2<f64>) -> Self {
                Self(values)
            }
        }
    };
}

field!(
    /// `u ∈ L²_Γ(I×Ω)`: one spatial profile per Γ-interval, shape `(N, n_x)`.
    PrimalField,
    "primal field"
);
field!(
    /// Space-time field sampled on the fine mesh, shape `(n_t, n_x)`.
    TrajectoryField,
    "trajectory field"
);
field!(
    /// `v ∈ L²(Ω)^{N-1}`, shape `(N-1, n_x)`.
    DualField,
    "dual field"
);

fn expect_shape(view: ArrayView2<f64>, rows: usize, cols: usize, what: &str) -> Result<()> {
    if view.dim() != (rows, cols) {
        return Err(Error::Shape(format!(
            "{what} has shape {:?}, expected ({rows}, {cols})",
            view.dim()
        )));
    }
    Ok(())
}

impl PrimalField {
    pub fn check(&self, gamma: &GammaGrid, space: &SpaceGrid) -> Result<()> {
        expect_shape(self.view(), gamma.intervals(), space.len(), "primal field")
    }
}

impl TrajectoryField {
    pub fn check(&self, time: &TimeGrid, space: &SpaceGrid) -> Result<()> {
        expect_shape(self.view(), time.len(), space.len(), "trajectory field")
    }
}

impl DualField {
    pub fn check(&self, gamma: &GammaGrid, space: &SpaceGrid) -> Result<()> {
        expect_shape(
            self.view(),
            gamma.intervals().saturating_sub(1),
            space.len(),
            "dual field",
        )
    }
}

/// `Σ_i (t_i - t_{i-1}) ⟨u_i, w_i⟩_{L²(Ω)}` on raw arrays.
pub(crate) fn primal_dot_raw(
    u: ArrayView2<f64>,
    w: ArrayView2<f64>,
    gamma: &GammaGrid,
    space: &SpaceGrid,
) -> f64 {
    (0..gamma.intervals())
        .map(|i| gamma.width(i) * space.dot_unchecked(u.row(i), w.row(i)))
        .sum()
}

/// `Σ_i ⟨v_i, w_i⟩_{L²(Ω)}` on raw arrays.
pub(crate) fn dual_dot_raw(v: ArrayView2<f64>, w: ArrayView2<f64>, space: &SpaceGrid) -> f64 {
    v.outer_iter()
        .zip(w.outer_iter())
        .map(|(a, b)| space.dot_unchecked(a, b))
        .sum()
}

/// Space-time inner product on the fine mesh.
pub(crate) fn trajectory_dot_raw(
    y: ArrayView2<f64>,
    z: ArrayView2<f64>,
    time: &TimeGrid,
    space: &SpaceGrid,
) -> f64 {
    let steps = time.steps();
    time.tau()
        * (0..steps)
            .map(|m| space.dot_unchecked(y.row(m), z.row(m)))
            .sum::<f64>()
}

pub fn primal_dot(u: &PrimalField, w: &PrimalField, gamma: &GammaGrid, space: &SpaceGrid) -> Result<f64> {
    u.check(gamma, space)?;
    w.check(gamma, space)?;
    Ok(primal_dot_raw(u.view(), w.view(), gamma, space))
}

/// `‖u‖_{L²(I×Ω)}` for `u ∈ L²_Γ`.
pub fn norm_primal(u: &PrimalField, gamma: &GammaGrid, space: &SpaceGrid) -> Result<f64> {
    primal_dot(u, u, gamma, space).map(f64::sqrt)
}

pub fn dual_dot(v: &DualField, w: &DualField, space: &SpaceGrid) -> Result<f64> {
    if v.view().dim() != w.view().dim() || v.cols() != space.len() {
        return Err(Error::Shape("dual fields of different shapes".into()));
    }
    Ok(dual_dot_raw(v.view(), w.view(), space))
}

pub fn trajectory_dot(
    y: &TrajectoryField,
    z: &TrajectoryField,
    time: &TimeGrid,
    space: &SpaceGrid,
) -> Result<f64> {
    y.check(time, space)?;
    z.check(time, space)?;
    Ok(trajectory_dot_raw(y.view(), z.view(), time, space))
}

pub fn norm_trajectory(y: &TrajectoryField, time: &TimeGrid, space: &SpaceGrid) -> Result<f64> {
    trajectory_dot(y, y, time, space).map(f64::sqrt)
}

/// Interval means of a fine-mesh field, raw-array form.
pub(crate) fn restrict_raw(y: ArrayView2<f64>, gamma: &GammaGrid) -> Array2<f64> {
    let mut out = Array2::zeros((gamma.intervals(), y.ncols()));
    for (i, mut row) in out.outer_iter_mut().enumerate() {
        let range = gamma.node_range(i);
        let count = range.len() as f64;
        for m in range {
            row += &y.row(m);
        }
        row /= count;
    }
    out
}

/// Time average of `y` over each Γ-interval under the fine-grid quadrature.
pub fn restrict_to_gamma(y: &TrajectoryField, gamma: &GammaGrid) -> Result<PrimalField> {
    if y.rows() != gamma.time_nodes() {
        return Err(Error::Config(format!(
            "trajectory has {} time rows but Γ is aligned with {} nodes",
            y.rows(),
            gamma.time_nodes()
        )));
    }
    Ok(PrimalField(restrict_raw(y.view(), gamma)))
}

pub(crate) fn prolong_raw(u: ArrayView2<f64>, gamma: &GammaGrid, time: &TimeGrid) -> Array2<f64> {
    let mut out = Array2::zeros((time.len(), u.ncols()));
    for (m, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
        row.assign(&u.row(gamma.interval_of_node(m)));
    }
    out
}

/// Piecewise-constant-in-time extension of `u` to the fine mesh.
pub fn prolong_from_gamma(u: &PrimalField, gamma: &GammaGrid, time: &TimeGrid) -> Result<TrajectoryField> {
    gamma.check_time(time)?;
    if u.rows() != gamma.intervals() {
        return Err(Error::Shape(format!(
            "primal field has {} rows, Γ has {} intervals",
            u.rows(),
            gamma.intervals()
        )));
    }
    Ok(TrajectoryField(prolong_raw(u.view(), gamma, time)))
}
