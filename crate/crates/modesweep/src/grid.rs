//! Collocation grids on a truncated half-line or the unit interval:
//! nodes, quadrature, differentiation matrices, and the nonlocal integral
//! operators, all materialized as dense matrices.
//!
//! Nodes are Chebyshev–Gauss–Lobatto points pushed through a cubic
//! stretching map `y = Y (a u + (1 - a) u^3)`, `u = (1 + x)/2`, which
//! clusters nodes near the wall for `a < 1` while keeping the map
//! polynomial, so differentiation of the node vector and quadrature of
//! constants stay exact to roundoff. Differentiation uses barycentric
//! formulas with trigonometric differences and the negative-sum trick;
//! the second-derivative matrix comes from the dedicated second-order
//! recursion rather than squaring the first. Cumulative integration is
//! exact on interpolants via coefficient-space antidifferentiation, which
//! makes the integral operators spectrally accurate dense matrices.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linsolve::C64;

/// Which one-dimensional domain a grid discretizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    /// `[0, Y_max]`, truncating the half-line; decay is imposed at the
    /// right endpoint.
    HalfLine,
    /// `[0, 1]` channel.
    UnitInterval,
}

impl std::fmt::Display for Domain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Domain::HalfLine => write!(f, "half-line"),
            Domain::UnitInterval => write!(f, "unit-interval"),
        }
    }
}

/// Dense row-major real matrix.
#[derive(Clone, Debug)]
pub struct RMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Real matrix, real vector product.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Real matrix, complex vector product.
    pub fn mul_vec_c(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.cols, "dimension mismatch");
        (0..self.rows)
            .map(|i| {
                let mut re = 0.0;
                let mut im = 0.0;
                for (a, b) in self.row(i).iter().zip(x) {
                    re += a * b.re;
                    im += a * b.im;
                }
                Complex64::new(re, im)
            })
            .collect()
    }

    pub fn mul_mat(&self, other: &RMatrix) -> RMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = RMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for kk in 0..self.cols {
                let a = self.data[i * self.cols + kk];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(kk);
                let dst = out.row_mut(i);
                for j in 0..other.cols {
                    dst[j] += a * src[j];
                }
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for RMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Immutable collocation grid with precomputed operator matrices.
pub struct Grid {
    domain: Domain,
    degree: usize,
    y_max: f64,
    stretch: f64,
    nodes: Vec<f64>,
    quad: Vec<f64>,
    d1: RMatrix,
    d2: RMatrix,
    cumint: RMatrix,
    tail_mat: RMatrix,
    vy_mat: Option<RMatrix>,
    vym_mat: Option<RMatrix>,
    mean_v_row: Option<Vec<f64>>,
    poisson_mat: Option<RMatrix>,
    trace_rows: Option<(Vec<f64>, Vec<f64>)>,
}

impl Grid {
    /// Build a grid of polynomial degree `n` (so `n + 1` nodes).
    ///
    /// On the half-line, `y_max` truncates the domain and `stretch` in
    /// `(0, 1.5]` sets the wall clustering (1 = plain cubic-free map,
    /// smaller values cluster harder at `y = 0`). On the unit interval
    /// the map is linear and `y_max`/`stretch` are ignored.
    pub fn build(domain: Domain, n: usize, y_max: f64, stretch: f64) -> Result<Self> {
        if n < 16 {
            return Err(Error::Config(format!(
                "grid degree must be at least 16, got {n}"
            )));
        }
        let (y_max, stretch) = match domain {
            Domain::HalfLine => {
                if !(y_max >= 20.0) {
                    return Err(Error::Config(format!(
                        "half-line truncation must satisfy Y_max >= 20, got {y_max}"
                    )));
                }
                if !(stretch > 0.0 && stretch <= 1.5) {
                    return Err(Error::Config(format!(
                        "stretch must lie in (0, 1.5], got {stretch}"
                    )));
                }
                (y_max, stretch)
            }
            Domain::UnitInterval => (1.0, 1.0),
        };

        let theta: Vec<f64> = (0..=n).map(|j| std::f64::consts::PI * j as f64 / n as f64).collect();
        // u = (1 - cos theta)/2 = sin^2(theta/2), ascending from 0 to 1.
        let u: Vec<f64> = theta.iter().map(|t| (0.5 * t).sin().powi(2)).collect();
        let a = stretch;
        let (nodes, y_x, y_xx): (Vec<f64>, Vec<f64>, Vec<f64>) = match domain {
            Domain::HalfLine => {
                let nodes = u.iter().map(|&u| y_max * (a * u + (1.0 - a) * u * u * u)).collect();
                let y_x = u
                    .iter()
                    .map(|&u| y_max * (a + 3.0 * (1.0 - a) * u * u) / 2.0)
                    .collect();
                let y_xx = u.iter().map(|&u| y_max * 6.0 * (1.0 - a) * u / 4.0).collect();
                (nodes, y_x, y_xx)
            }
            Domain::UnitInterval => (u.clone(), vec![0.5; n + 1], vec![0.0; n + 1]),
        };

        // Barycentric first derivative on the Chebyshev points, with
        // trigonometric differences and negative-sum diagonals. Rows in
        // the lower half (theta <= pi/2) are well conditioned, since the
        // half-angle sines stay away from pi; the upper half is filled by
        // the reflection x -> -x, under which the first derivative matrix
        // is antisymmetric about the center and the second symmetric.
        let diff = |i: usize, j: usize| -> f64 {
            2.0 * (0.5 * (theta[i] + theta[j])).sin() * (0.5 * (theta[i] - theta[j])).sin()
        };
        let bary = |j: usize| -> f64 {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n {
                0.5 * sign
            } else {
                sign
            }
        };
        let half = n / 2;
        let mut dx = RMatrix::zeros(n + 1, n + 1);
        for i in 0..=half {
            let mut diag = 0.0;
            for j in 0..=n {
                if i == j {
                    continue;
                }
                let v = (bary(j) / bary(i)) / diff(i, j);
                dx[(i, j)] = v;
                diag -= v;
            }
            dx[(i, i)] = diag;
        }
        for i in half + 1..=n {
            for j in 0..=n {
                dx[(i, j)] = -dx[(n - i, n - j)];
            }
        }
        let mut dx2 = RMatrix::zeros(n + 1, n + 1);
        for i in 0..=half {
            let mut diag = 0.0;
            for j in 0..=n {
                if i == j {
                    continue;
                }
                let v = 2.0 * dx[(i, j)] * (dx[(i, i)] - 1.0 / diff(i, j));
                dx2[(i, j)] = v;
                diag -= v;
            }
            dx2[(i, i)] = diag;
        }
        for i in half + 1..=n {
            for j in 0..=n {
                dx2[(i, j)] = dx2[(n - i, n - j)];
            }
        }
        let d1 = RMatrix::from_fn(n + 1, n + 1, |i, j| dx[(i, j)] / y_x[i]);
        let d2 = RMatrix::from_fn(n + 1, n + 1, |i, j| {
            dx2[(i, j)] / (y_x[i] * y_x[i]) - y_xx[i] / y_x[i].powi(3) * dx[(i, j)]
        });

        // Clenshaw-Curtis weights on [-1, 1], then the map Jacobian.
        let wcc = clenshaw_curtis(n);
        let quad: Vec<f64> = wcc.iter().zip(&y_x).map(|(w, yx)| w * yx).collect();

        // Cumulative integration from the left endpoint, built in
        // Chebyshev coefficient space: analyze, antidifferentiate with
        // the constant pinned at x = -1, evaluate back at the nodes.
        let analyze = RMatrix::from_fn(n + 1, n + 1, |m, j| {
            let cm = if m == 0 || m == n { 2.0 } else { 1.0 };
            let cj = if j == 0 || j == n { 2.0 } else { 1.0 };
            2.0 / (n as f64 * cm * cj)
                * (m as f64 * (n - j) as f64 * std::f64::consts::PI / n as f64).cos()
        });
        let mut anti = RMatrix::zeros(n + 2, n + 1);
        anti[(1, 0)] = 1.0;
        if n >= 2 {
            anti[(1, 2)] = -0.5;
        }
        for m in 2..=n + 1 {
            anti[(m, m - 1)] = 1.0 / (2.0 * m as f64);
            if m + 1 <= n {
                anti[(m, m + 1)] = -1.0 / (2.0 * m as f64);
            }
        }
        for j in 0..=n {
            let mut acc = 0.0;
            for m in 1..=n + 1 {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                acc -= sign * anti[(m, j)];
            }
            anti[(0, j)] = acc;
        }
        let eval = RMatrix::from_fn(n + 1, n + 2, |j, m| {
            (m as f64 * (n - j) as f64 * std::f64::consts::PI / n as f64).cos()
        });
        let qx = eval.mul_mat(&anti.mul_mat(&analyze));
        let cumint = RMatrix::from_fn(n + 1, n + 1, |i, j| qx[(i, j)] * y_x[j]);
        let tail_mat = RMatrix::from_fn(n + 1, n + 1, |i, j| quad[j] - cumint[(i, j)]);

        let (vy_mat, vym_mat, mean_v_row, poisson_mat, trace_rows) = match domain {
            Domain::HalfLine => {
                let mut vy = cumint.mul_mat(&tail_mat);
                for v in vy.data.iter_mut() {
                    *v = -*v;
                }
                let vym = tail_mat.mul_mat(&tail_mat);
                let v_row = vy.row(n).to_vec();
                (Some(vy), Some(vym), Some(v_row), None, None)
            }
            Domain::UnitInterval => {
                let poisson = dirichlet_inverse(&d2, n)?;
                let t0 = row_times_mat(d1.row(0), &poisson);
                let t1 = row_times_mat(d1.row(n), &poisson);
                (None, None, None, Some(poisson), Some((t0, t1)))
            }
        };

        Ok(Self {
            domain,
            degree: n,
            y_max,
            stretch,
            nodes,
            quad,
            d1,
            d2,
            cumint,
            tail_mat,
            vy_mat,
            vym_mat,
            mean_v_row,
            poisson_mat,
            trace_rows,
        })
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Polynomial degree; the grid has `degree() + 1` nodes.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn node_count(&self) -> usize {
        self.degree + 1
    }

    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn stretch(&self) -> f64 {
        self.stretch
    }

    /// Ascending nodes, `nodes()[0] = 0`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn quad_weights(&self) -> &[f64] {
        &self.quad
    }

    pub fn d1(&self) -> &RMatrix {
        &self.d1
    }

    pub fn d2(&self) -> &RMatrix {
        &self.d2
    }

    /// Quadrature of a complex grid function over the whole domain.
    pub fn integrate(&self, f: &[C64]) -> C64 {
        assert_eq!(f.len(), self.node_count(), "profile length mismatch");
        let mut re = 0.0;
        let mut im = 0.0;
        for (w, v) in self.quad.iter().zip(f) {
            re += w * v.re;
            im += w * v.im;
        }
        Complex64::new(re, im)
    }

    /// Quadrature of a real grid function.
    pub fn integrate_re(&self, f: &[f64]) -> f64 {
        assert_eq!(f.len(), self.node_count(), "profile length mismatch");
        self.quad.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// Mean operator: integral of the profile over the half-line.
    pub fn mean_u(&self, f: &[C64]) -> C64 {
        self.assert_half_line("mean_u");
        self.integrate(f)
    }

    /// Tail integral `y -> integral from y to Y_max` of the profile.
    pub fn tail_integral(&self, f: &[C64]) -> Vec<C64> {
        self.assert_half_line("tail_integral");
        self.tail_mat.mul_vec_c(f)
    }

    /// Double integral `y -> integral from 0 to y of (integral from
    /// infinity to y')`, i.e. minus the running integral of the tail.
    pub fn vy(&self, f: &[C64]) -> Vec<C64> {
        self.assert_half_line("vy");
        self.vy_mat.as_ref().unwrap().mul_vec_c(f)
    }

    /// Outward variant `y -> integral from y to infinity of the tail`.
    pub fn vy_minus(&self, f: &[C64]) -> Vec<C64> {
        self.assert_half_line("vy_minus");
        self.vym_mat.as_ref().unwrap().mul_vec_c(f)
    }

    /// Scalar mean `V`: the value of [`Grid::vy`] at `Y_max`, which by
    /// exchanging the integration order equals minus the first moment.
    pub fn mean_v(&self, f: &[C64]) -> C64 {
        self.assert_half_line("mean_v");
        let row = self.mean_v_row.as_ref().unwrap();
        let mut re = 0.0;
        let mut im = 0.0;
        for (w, v) in row.iter().zip(f) {
            re += w * v.re;
            im += w * v.im;
        }
        Complex64::new(re, im)
    }

    /// Row vector realizing [`Grid::mean_v`].
    pub fn mean_v_row(&self) -> &[f64] {
        self.assert_half_line("mean_v_row");
        self.mean_v_row.as_ref().unwrap()
    }

    /// Running integral from the left endpoint, as a matrix action.
    pub fn cumulative(&self, f: &[C64]) -> Vec<C64> {
        self.cumint.mul_vec_c(f)
    }

    pub fn cumint_matrix(&self) -> &RMatrix {
        &self.cumint
    }

    pub fn tail_matrix(&self) -> &RMatrix {
        self.assert_half_line("tail_matrix");
        &self.tail_mat
    }

    pub fn vy_matrix(&self) -> &RMatrix {
        self.assert_half_line("vy_matrix");
        self.vy_mat.as_ref().unwrap()
    }

    pub fn vy_minus_matrix(&self) -> &RMatrix {
        self.assert_half_line("vy_minus_matrix");
        self.vym_mat.as_ref().unwrap()
    }

    /// Stream function of a channel vorticity: solves the two-point
    /// Dirichlet problem `Phi'' = f`, `Phi(0) = Phi(1) = 0` by the
    /// collocation inverse.
    pub fn poisson_dirichlet(&self, f: &[C64]) -> Vec<C64> {
        self.assert_unit_interval("poisson_dirichlet");
        self.poisson_mat.as_ref().unwrap().mul_vec_c(f)
    }

    pub fn poisson_matrix(&self) -> &RMatrix {
        self.assert_unit_interval("poisson_matrix");
        self.poisson_mat.as_ref().unwrap()
    }

    /// Stream function by the explicit Green kernel, as a cross-check of
    /// the collocation path.
    pub fn poisson_green(&self, f: &[C64]) -> Vec<C64> {
        self.assert_unit_interval("poisson_green");
        let y = &self.nodes;
        let inner: Vec<C64> = f.iter().zip(y).map(|(v, &yy)| v * yy).collect();
        let first = self.cumint.mul_vec_c(&inner);
        let outer: Vec<C64> = f.iter().zip(y).map(|(v, &yy)| v * (yy - 1.0)).collect();
        let second = self.tail_mat.mul_vec_c(&outer);
        (0..f.len())
            .map(|i| first[i] * (y[i] - 1.0) + second[i] * y[i])
            .collect()
    }

    /// Dense matrix of [`Grid::poisson_green`]: entry `(i, j)` is the
    /// Green kernel of the two-point Dirichlet problem times the
    /// quadrature weight at node `j`.
    pub fn poisson_green_matrix(&self) -> RMatrix {
        self.assert_unit_interval("poisson_green_matrix");
        let y = &self.nodes;
        RMatrix::from_fn(self.node_count(), self.node_count(), |i, j| {
            (y[i] - 1.0) * self.cumint[(i, j)] * y[j]
                + y[i] * self.tail_mat[(i, j)] * (y[j] - 1.0)
        })
    }

    /// Boundary derivative traces of the stream function,
    /// `(Phi'(0), Phi'(1))`.
    pub fn stream_traces(&self, f: &[C64]) -> (C64, C64) {
        self.assert_unit_interval("stream_traces");
        let (t0, t1) = self.trace_rows.as_ref().unwrap();
        let dot = |row: &[f64]| {
            let mut re = 0.0;
            let mut im = 0.0;
            for (w, v) in row.iter().zip(f) {
                re += w * v.re;
                im += w * v.im;
            }
            Complex64::new(re, im)
        };
        (dot(t0), dot(t1))
    }

    /// Rows realizing [`Grid::stream_traces`].
    pub fn trace_rows(&self) -> (&[f64], &[f64]) {
        self.assert_unit_interval("trace_rows");
        let (t0, t1) = self.trace_rows.as_ref().unwrap();
        (t0, t1)
    }

    fn assert_half_line(&self, op: &str) {
        assert_eq!(
            self.domain,
            Domain::HalfLine,
            "{op} is a half-line operator"
        );
    }

    fn assert_unit_interval(&self, op: &str) {
        assert_eq!(
            self.domain,
            Domain::UnitInterval,
            "{op} is a unit-interval operator"
        );
    }
}

/// Clenshaw-Curtis quadrature weights on `[-1, 1]` for degree `n`,
/// indexed to match ascending nodes (the weights are symmetric).
fn clenshaw_curtis(n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n + 1];
    let nf = n as f64;
    let end = if n % 2 == 0 {
        1.0 / (nf * nf - 1.0)
    } else {
        1.0 / (nf * nf)
    };
    w[0] = end;
    w[n] = end;
    for j in 1..n {
        let theta = std::f64::consts::PI * j as f64 / nf;
        let mut v = 1.0;
        let half = n / 2;
        for k in 1..=half {
            let term = (2.0 * k as f64 * theta).cos() / (4.0 * (k * k) as f64 - 1.0);
            if n % 2 == 0 && k == half {
                v -= term;
            } else {
                v -= 2.0 * term;
            }
        }
        w[j] = 2.0 * v / nf;
    }
    w
}

/// Invert the second-derivative operator with Dirichlet rows at both
/// endpoints, returning the solution map for zero boundary data.
fn dirichlet_inverse(d2: &RMatrix, n: usize) -> Result<RMatrix> {
    let mut m = d2.clone();
    for j in 0..=n {
        m[(0, j)] = 0.0;
        m[(n, j)] = 0.0;
    }
    m[(0, 0)] = 1.0;
    m[(n, n)] = 1.0;
    let lu = RealLu::factor(m)?;
    let mut inv = RMatrix::zeros(n + 1, n + 1);
    let mut col = vec![0.0; n + 1];
    for j in 1..n {
        col.iter_mut().for_each(|v| *v = 0.0);
        col[j] = 1.0;
        let x = lu.solve(&col);
        for i in 0..=n {
            inv[(i, j)] = x[i];
        }
    }
    Ok(inv)
}

fn row_times_mat(row: &[f64], m: &RMatrix) -> Vec<f64> {
    let mut out = vec![0.0; m.cols()];
    for (i, &a) in row.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        for (o, &b) in out.iter_mut().zip(m.row(i)) {
            *o += a * b;
        }
    }
    out
}

/// Minimal real LU with partial pivoting, used once per grid to build
/// the stream-function solve.
struct RealLu {
    lu: RMatrix,
    perm: Vec<usize>,
}

impl RealLu {
    fn factor(mut a: RMatrix) -> Result<Self> {
        let n = a.rows();
        assert_eq!(n, a.cols());
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let mut best = col;
            let mut best_mag = a[(col, col)].abs();
            for i in col + 1..n {
                if a[(i, col)].abs() > best_mag {
                    best = i;
                    best_mag = a[(i, col)].abs();
                }
            }
            if !(best_mag > 0.0) || !best_mag.is_finite() {
                return Err(Error::Singular {
                    condition: f64::INFINITY,
                });
            }
            if best != col {
                for j in 0..n {
                    let tmp = a[(col, j)];
                    a[(col, j)] = a[(best, j)];
                    a[(best, j)] = tmp;
                }
                perm.swap(col, best);
            }
            let pivot = a[(col, col)];
            for i in col + 1..n {
                let m = a[(i, col)] / pivot;
                a[(i, col)] = m;
                if m != 0.0 {
                    for j in col + 1..n {
                        let v = a[(col, j)];
                        a[(i, j)] -= m * v;
                    }
                }
            }
        }
        Ok(Self { lu: a, perm })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows();
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            let row = self.lu.row(i);
            let mut acc = x[i];
            for j in 0..i {
                acc -= row[j] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= row[j] * x[j];
            }
            x[i] = acc / row[i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cvec(f: impl Fn(f64) -> f64, grid: &Grid) -> Vec<C64> {
        grid.nodes().iter().map(|&y| Complex64::new(f(y), 0.0)).collect()
    }

    #[test]
    fn quadrature_of_one_is_exact() {
        for (n, stretch) in [(16, 1.0), (64, 0.12), (128, 0.4), (512, 1.0)] {
            let g = Grid::build(Domain::HalfLine, n, 40.0, stretch).unwrap();
            let total: f64 = g.quad_weights().iter().sum();
            assert_relative_eq!(total, 40.0, max_relative = 1e-12);
        }
        let g = Grid::build(Domain::UnitInterval, 64, 1.0, 1.0).unwrap();
        let total: f64 = g.quad_weights().iter().sum();
        assert_relative_eq!(total, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn derivative_of_nodes_is_one() {
        for (n, stretch) in [(64, 0.12), (512, 1.0), (1024, 0.12)] {
            let g = Grid::build(Domain::HalfLine, n, 40.0, stretch).unwrap();
            let ones = g.d1().mul_vec(g.nodes());
            for (i, v) in ones.iter().enumerate() {
                assert!(
                    (v - 1.0).abs() < 1e-10,
                    "n = {n}, stretch = {stretch}: D1 y at node {i} was {v}"
                );
            }
        }
    }

    #[test]
    fn endpoints_and_monotonicity() {
        let g = Grid::build(Domain::HalfLine, 96, 40.0, 0.12).unwrap();
        assert_eq!(g.nodes()[0], 0.0);
        assert_relative_eq!(*g.nodes().last().unwrap(), 40.0, max_relative = 1e-14);
        for w in g.nodes().windows(2) {
            assert!(w[1] > w[0], "nodes must be strictly increasing");
        }
        let u = Grid::build(Domain::UnitInterval, 64, 1.0, 1.0).unwrap();
        assert_eq!(u.nodes()[0], 0.0);
        assert_relative_eq!(*u.nodes().last().unwrap(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn invalid_parameters_are_config_errors() {
        assert!(matches!(
            Grid::build(Domain::HalfLine, 8, 40.0, 1.0),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            Grid::build(Domain::HalfLine, 64, 10.0, 1.0),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            Grid::build(Domain::HalfLine, 64, 40.0, 0.0),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            Grid::build(Domain::HalfLine, 64, 40.0, 2.0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn quadrature_of_decaying_exponential() {
        let g = Grid::build(Domain::HalfLine, 512, 40.0, 1.0).unwrap();
        let f = cvec(|y| (-y).exp(), &g);
        let expected = 1.0 - (-40.0_f64).exp();
        assert!((g.integrate(&f).re - expected).abs() < 1e-10);
    }

    #[test]
    fn integral_operators_on_exponential() {
        let g = Grid::build(Domain::HalfLine, 256, 40.0, 0.3).unwrap();
        let f = cvec(|y| (-y).exp(), &g);
        assert!((g.mean_u(&f).re - 1.0).abs() < 1e-9);
        let tail = g.tail_integral(&f);
        let vy = g.vy(&f);
        let vym = g.vy_minus(&f);
        for (i, &y) in g.nodes().iter().enumerate() {
            let e = (-y).exp();
            assert!((tail[i].re - e).abs() < 1e-9, "tail at y = {y}");
            assert!((vy[i].re - (e - 1.0)).abs() < 1e-9, "vy at y = {y}");
            assert!((vym[i].re - e).abs() < 1e-9, "vy_minus at y = {y}");
        }
        assert!((g.mean_v(&f).re + 1.0).abs() < 1e-9);
    }

    #[test]
    fn mean_v_stable_under_doubling() {
        let f1 = {
            let g = Grid::build(Domain::HalfLine, 256, 40.0, 0.3).unwrap();
            g.mean_v(&cvec(|y| (-y).exp(), &g))
        };
        let f2 = {
            let g = Grid::build(Domain::HalfLine, 512, 40.0, 0.3).unwrap();
            g.mean_v(&cvec(|y| (-y).exp(), &g))
        };
        assert!((f1 - f2).norm() < 1e-10, "doubling moved mean_v by {}", (f1 - f2).norm());
    }

    #[test]
    fn zero_profile_maps_to_zero() {
        let g = Grid::build(Domain::HalfLine, 64, 40.0, 0.5).unwrap();
        let z = vec![Complex64::new(0.0, 0.0); g.node_count()];
        assert_eq!(g.mean_u(&z).norm(), 0.0);
        assert_eq!(g.mean_v(&z).norm(), 0.0);
        assert!(g.vy(&z).iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn second_derivative_is_exact_on_cubics() {
        let g = Grid::build(Domain::HalfLine, 48, 40.0, 0.25).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|&y| y * y * y - 2.0 * y * y + 5.0).collect();
        let d2f = g.d2().mul_vec(&f);
        for (&y, v) in g.nodes().iter().zip(&d2f) {
            assert!((v - (6.0 * y - 4.0)).abs() < 1e-7, "at y = {y}: {v}");
        }
    }

    #[test]
    fn poisson_constant_and_eigenfunction() {
        let g = Grid::build(Domain::UnitInterval, 64, 1.0, 1.0).unwrap();
        let one = vec![Complex64::new(1.0, 0.0); g.node_count()];
        let phi = g.poisson_dirichlet(&one);
        for (&y, v) in g.nodes().iter().zip(&phi) {
            assert!((v.re - 0.5 * y * (y - 1.0)).abs() < 1e-12, "at y = {y}");
        }
        let pi = std::f64::consts::PI;
        let s = cvec(|y| (pi * y).sin(), &g);
        let phi_s = g.poisson_dirichlet(&s);
        for (&y, v) in g.nodes().iter().zip(&phi_s) {
            assert!((v.re + (pi * y).sin() / (pi * pi)).abs() < 1e-10, "at y = {y}");
        }
        let z = vec![Complex64::new(0.0, 0.0); g.node_count()];
        assert!(g.poisson_dirichlet(&z).iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn poisson_green_agrees_with_collocation() {
        let g = Grid::build(Domain::UnitInterval, 96, 1.0, 1.0).unwrap();
        let f: Vec<C64> = g
            .nodes()
            .iter()
            .map(|&y| Complex64::new((3.0 * y).cos(), (2.0 * y).sin()))
            .collect();
        let a = g.poisson_dirichlet(&f);
        let b = g.poisson_green(&f);
        let diff: f64 = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let scale: f64 = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        assert!(diff <= 1e-8 * scale.max(1e-30), "paths differ by {diff}");

        let mat = g.poisson_green_matrix();
        let c = mat.mul_vec_c(&f);
        let mat_diff: f64 = b
            .iter()
            .zip(&c)
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(mat_diff <= 1e-12 * scale.max(1e-30));
    }

    #[test]
    fn stream_traces_of_known_profiles() {
        let g = Grid::build(Domain::UnitInterval, 64, 1.0, 1.0).unwrap();
        let one = vec![Complex64::new(1.0, 0.0); g.node_count()];
        let (t0, t1) = g.stream_traces(&one);
        assert!((t0.re + 0.5).abs() < 1e-11 && (t1.re - 0.5).abs() < 1e-11);
        let pi = std::f64::consts::PI;
        let s = cvec(|y| (pi * y).sin(), &g);
        let (s0, s1) = g.stream_traces(&s);
        assert!((s0.re + 1.0 / pi).abs() < 1e-10);
        assert!((s1.re - 1.0 / pi).abs() < 1e-10);
        let z = vec![Complex64::new(0.0, 0.0); g.node_count()];
        let (z0, z1) = g.stream_traces(&z);
        assert_eq!((z0.norm(), z1.norm()), (0.0, 0.0));
    }

    #[test]
    fn summation_by_parts_residual_decays_at_second_order() {
        // <D1 f, g> + <f, D1 g> - [f g] should vanish with the grid; the
        // measured order must be at least 2.
        let mut errs = Vec::new();
        let ns = [16usize, 24, 32, 48];
        for &n in &ns {
            let g = Grid::build(Domain::HalfLine, n, 20.0, 1.0).unwrap();
            let f: Vec<f64> = g.nodes().iter().map(|&y| (-y).exp()).collect();
            let h: Vec<f64> = g.nodes().iter().map(|&y| (-0.5 * y).exp()).collect();
            let df = g.d1().mul_vec(&f);
            let dh = g.d1().mul_vec(&h);
            let inner: f64 = g
                .quad_weights()
                .iter()
                .enumerate()
                .map(|(i, w)| w * (df[i] * h[i] + f[i] * dh[i]))
                .sum();
            let boundary = f[n] * h[n] - f[0] * h[0];
            errs.push((inner - boundary).abs().max(1e-16));
        }
        let slope = fit_log_slope(&ns, &errs);
        assert!(slope <= -2.0, "measured order {} too low: {:?}", -slope, errs);
    }

    #[test]
    fn interpolation_inequality_scaled_by_two() {
        let g = Grid::build(Domain::HalfLine, 256, 40.0, 0.3).unwrap();
        for f in [
            cvec(|y| (-y).exp(), &g),
            cvec(|y| (-(y - 2.0) * (y - 2.0)).exp(), &g),
            cvec(|y| 1.0 / (1.0 + y).powi(4), &g),
        ] {
            let abs: Vec<f64> = f.iter().map(|c| c.norm()).collect();
            let lhs = g.integrate_re(&abs);
            let l2: f64 = g
                .quad_weights()
                .iter()
                .zip(&abs)
                .map(|(w, a)| w * a * a)
                .sum::<f64>()
                .sqrt();
            let yl2: f64 = g
                .quad_weights()
                .iter()
                .zip(g.nodes())
                .zip(&abs)
                .map(|((w, &y), a)| w * y * y * a * a)
                .sum::<f64>()
                .sqrt();
            assert!(
                lhs <= 2.0 * (1.0 + 1e-6) * l2.sqrt() * yl2.sqrt(),
                "lhs {lhs} vs {}",
                2.0 * l2.sqrt() * yl2.sqrt()
            );
        }
    }

    #[test]
    #[should_panic(expected = "half-line operator")]
    fn half_line_ops_panic_on_channel_grids() {
        let g = Grid::build(Domain::UnitInterval, 32, 1.0, 1.0).unwrap();
        let z = vec![Complex64::new(0.0, 0.0); g.node_count()];
        let _ = g.mean_u(&z);
    }

    #[test]
    #[should_panic(expected = "unit-interval operator")]
    fn channel_ops_panic_on_half_line_grids() {
        let g = Grid::build(Domain::HalfLine, 32, 40.0, 1.0).unwrap();
        let z = vec![Complex64::new(0.0, 0.0); g.node_count()];
        let _ = g.poisson_dirichlet(&z);
    }

    fn fit_log_slope(ns: &[usize], errs: &[f64]) -> f64 {
        let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
        let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
        let n = xs.len() as f64;
        let sx: f64 = xs.iter().sum();
        let sy: f64 = ys.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    }
}
