//! Tensor-product grids on intervals and rectangles, difference stencils and
//! the quadrature pair used by the range functional.

use crate::error::{Error, Result};
use crate::operator::DiscreteOperator;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub a: f64,
    pub b: f64,
    pub n: usize,
    pub h: f64,
}

impl Axis {
    pub fn coord(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.b
        } else {
            self.a + i as f64 * self.h
        }
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }
}

/// Outward normal attached to a boundary node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normal {
    /// Along `axis`, pointing to `sign` (`-1` at the lower end, `+1` at the upper).
    Axis { axis: usize, sign: i8 },
    /// Rectangle corner; the boundary row uses the average of both edge normals.
    Corner { sx: i8, sy: i8 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryNode {
    pub node: usize,
    pub normal: Normal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    axes: Vec<Axis>,
    boundary: Vec<BoundaryNode>,
    interior: Vec<usize>,
    /// `Some(k)` if the node is `boundary[k]`.
    boundary_slot: Vec<Option<usize>>,
}

impl Grid {
    /// Builds a grid in `dim` dimensions from per-axis extents and node counts.
    pub fn new(dim: usize, extents: &[(f64, f64)], n: &[usize]) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Config(format!("dim must be 1 or 2 (got {dim})")));
        }
        if extents.len() != dim || n.len() != dim {
            return Err(Error::Config(format!(
                "expected {dim} extents and node counts, got {} and {}",
                extents.len(),
                n.len()
            )));
        }
        let mut axes = Vec::with_capacity(dim);
        for (k, (&(a, b), &nk)) in extents.iter().zip(n).enumerate() {
            if nk < 3 {
                return Err(Error::Config(format!("axis {k}: need at least 3 nodes (got {nk})")));
            }
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(Error::Config(format!("axis {k}: degenerate extent [{a}, {b}]")));
            }
            axes.push(Axis {
                a,
                b,
                n: nk,
                h: (b - a) / (nk - 1) as f64,
            });
        }

        let total: usize = axes.iter().map(|ax| ax.n).product();
        let mut boundary = Vec::new();
        let mut interior = Vec::new();
        let mut boundary_slot = vec![None; total];
        for node in 0..total {
            match Self::classify(&axes, node) {
                Some(normal) => {
                    boundary_slot[node] = Some(boundary.len());
                    boundary.push(BoundaryNode { node, normal });
                }
                None => interior.push(node),
            }
        }
        Ok(Self {
            axes,
            boundary,
            interior,
            boundary_slot,
        })
    }

    pub fn interval(a: f64, b: f64, n: usize) -> Result<Self> {
        Self::new(1, &[(a, b)], &[n])
    }

    pub fn rectangle(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        Self::new(2, &[x, y], &[nx, ny])
    }

    fn classify(axes: &[Axis], node: usize) -> Option<Normal> {
        let side = |i: usize, n: usize| -> i8 {
            if i == 0 {
                -1
            } else if i + 1 == n {
                1
            } else {
                0
            }
        };
        match axes {
            [ax] => match side(node, ax.n) {
                0 => None,
                s => Some(Normal::Axis { axis: 0, sign: s }),
            },
            [ax, ay] => {
                let (ix, iy) = (node % ax.n, node / ax.n);
                match (side(ix, ax.n), side(iy, ay.n)) {
                    (0, 0) => None,
                    (sx, 0) => Some(Normal::Axis { axis: 0, sign: sx }),
                    (0, sy) => Some(Normal::Axis { axis: 1, sign: sy }),
                    (sx, sy) => Some(Normal::Corner { sx, sy }),
                }
            }
            _ => unreachable!("grid dimension is validated at construction"),
        }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, k: usize) -> &Axis {
        &self.axes[k]
    }

    pub fn node_count(&self) -> usize {
        self.boundary_slot.len()
    }

    pub fn boundary(&self) -> &[BoundaryNode] {
        &self.boundary
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary_slot[node].is_some()
    }

    /// Per-axis index of a node.
    pub fn index(&self, node: usize) -> [usize; 2] {
        let nx = self.axes[0].n;
        [node % nx, node / nx]
    }

    pub fn node_at(&self, ix: usize, iy: usize) -> usize {
        ix + self.axes[0].n * iy
    }

    /// Physical coordinates; the second entry is 0 in 1D.
    pub fn coords(&self, node: usize) -> [f64; 2] {
        let [ix, iy] = self.index(node);
        let x = self.axes[0].coord(ix);
        let y = self.axes.get(1).map_or(0.0, |ay| ay.coord(iy));
        [x, y]
    }

    /// Evaluates `f(x, y)` at every node.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        (0..self.node_count())
            .map(|k| {
                let [x, y] = self.coords(k);
                f(x, y)
            })
            .collect()
    }

    /// Index distance from the node to the nearest boundary node.
    pub fn depth(&self, node: usize) -> usize {
        let idx = self.index(node);
        self.axes
            .iter()
            .enumerate()
            .map(|(k, ax)| idx[k].min(ax.n - 1 - idx[k]))
            .min()
            .unwrap_or(0)
    }

    fn stride(&self, axis: usize) -> usize {
        if axis == 0 {
            1
        } else {
            self.axes[0].n
        }
    }

    /// Standard second-order central Laplacian on interior rows. Boundary rows
    /// are absent (zero); the boundary condition owns them.
    pub fn laplacian(&self) -> Stencil {
        let rows = self
            .interior
            .iter()
            .map(|&node| {
                let mut terms = Vec::with_capacity(2 * self.dim());
                for (k, ax) in self.axes.iter().enumerate() {
                    let w = 1.0 / (ax.h * ax.h);
                    let s = self.stride(k);
                    terms.push((node - s, w));
                    terms.push((node + s, w));
                }
                StencilRow { node, terms }
            })
            .collect();
        Stencil {
            nodes: self.node_count(),
            rows,
        }
    }

    /// One-sided second-order outward normal derivative on boundary rows,
    /// `(3 f_0 - 4 f_1 + f_2) / (2h)` stepping inward. Corners average the
    /// two edge stencils.
    pub fn normal_derivative(&self) -> Stencil {
        let rows = self
            .boundary
            .iter()
            .map(|b| {
                let terms = match b.normal {
                    Normal::Axis { axis, sign } => self.one_sided(b.node, axis, sign, 1.0),
                    Normal::Corner { sx, sy } => {
                        let mut t = self.one_sided(b.node, 0, sx, 0.5);
                        t.extend(self.one_sided(b.node, 1, sy, 0.5));
                        t
                    }
                };
                StencilRow { node: b.node, terms }
            })
            .collect();
        Stencil {
            nodes: self.node_count(),
            rows,
        }
    }

    fn one_sided(&self, node: usize, axis: usize, sign: i8, scale: f64) -> Vec<(usize, f64)> {
        let h = self.axes[axis].h;
        let s = self.stride(axis);
        let (n1, n2) = if sign < 0 {
            (node + s, node + 2 * s)
        } else {
            (node - s, node - 2 * s)
        };
        vec![(n1, -2.0 * scale / h), (n2, 0.5 * scale / h)]
    }

    fn axis_interior_weight(ax: &Axis, i: usize) -> f64 {
        if i == 0 || i + 1 == ax.n {
            0.0
        } else if ax.n == 3 {
            2.0 * ax.h
        } else if i == 1 || i + 2 == ax.n {
            1.5 * ax.h
        } else {
            ax.h
        }
    }

    /// Interior quadrature weights. Trapezoidal weights with each boundary
    /// half-cell lumped onto the adjacent interior node, which makes
    /// `Σ q (Δf) = Σ σ (∂_ν f)` hold exactly for the stencils above.
    pub fn interior_weights(&self) -> Vec<f64> {
        (0..self.node_count())
            .map(|node| {
                let idx = self.index(node);
                self.axes
                    .iter()
                    .enumerate()
                    .map(|(k, ax)| Self::axis_interior_weight(ax, idx[k]))
                    .product()
            })
            .collect()
    }

    /// Boundary quadrature weights (nodal; zero on interior nodes). Counting
    /// measure in 1D; along rectangle edges the lumped trapezoidal weight of
    /// the tangential axis, with corners carrying no weight.
    pub fn boundary_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.node_count()];
        for b in &self.boundary {
            w[b.node] = match (self.dim(), b.normal) {
                (1, _) => 1.0,
                (_, Normal::Axis { axis, .. }) => {
                    let t = 1 - axis;
                    Self::axis_interior_weight(&self.axes[t], self.index(b.node)[t])
                }
                (_, Normal::Corner { .. }) => 0.0,
            };
        }
        w
    }

    /// Plain trapezoidal weights over all nodes.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        (0..self.node_count())
            .map(|node| {
                let idx = self.index(node);
                self.axes
                    .iter()
                    .enumerate()
                    .map(|(k, ax)| {
                        if idx[k] == 0 || idx[k] + 1 == ax.n {
                            0.5 * ax.h
                        } else {
                            ax.h
                        }
                    })
                    .product()
            })
            .collect()
    }

    fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.node_count() {
            return Err(Error::LengthMismatch {
                expected: self.node_count(),
                got: f.len(),
            });
        }
        Ok(())
    }

    /// `∫_Ω h dx` for a nodal field.
    pub fn interior_integral(&self, h: &[f64]) -> Result<f64> {
        self.check_len(h)?;
        Ok(dot(&self.interior_weights(), h))
    }

    /// `∫_∂Ω g dσ` for a nodal field (values at interior nodes are ignored).
    pub fn boundary_integral(&self, g: &[f64]) -> Result<f64> {
        self.check_len(g)?;
        Ok(dot(&self.boundary_weights(), g))
    }

    /// Discrete `|Ω|`.
    pub fn volume(&self) -> f64 {
        self.interior_weights().iter().sum()
    }

    /// Discrete `|∂Ω|`.
    pub fn boundary_measure(&self) -> f64 {
        self.boundary_weights().iter().sum()
    }

    /// Quadrature mean of a nodal field, taken relative to `f[0]` so that
    /// constant fields come back exactly.
    pub fn mean(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f)?;
        let base = f.first().copied().unwrap_or(0.0);
        let shifted: Vec<f64> = f.iter().map(|x| x - base).collect();
        Ok(base + self.interior_integral(&shifted)? / self.volume())
    }

    /// `Σ |∇f|²` over grid edges (forward differences, trapezoidal in the
    /// transverse direction).
    pub fn gradient_norm_sq(&self, f: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (k, ax) in self.axes.iter().enumerate() {
            let s = self.stride(k);
            for node in 0..self.node_count() {
                let idx = self.index(node);
                if idx[k] + 1 == ax.n {
                    continue;
                }
                let d = (f[node + s] - f[node]) / ax.h;
                let transverse = match self.axes.get(1 - k).filter(|_| self.dim() == 2) {
                    Some(t) => {
                        let j = idx[1 - k];
                        if j == 0 || j + 1 == t.n {
                            0.5 * t.h
                        } else {
                            t.h
                        }
                    }
                    None => 1.0,
                };
                acc += d * d * ax.h * transverse;
            }
        }
        acc
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One row of a consistent stencil: `(Lf)_node = Σ w_j (f_j - f_node)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilRow {
    pub node: usize,
    pub terms: Vec<(usize, f64)>,
}

impl StencilRow {
    #[inline]
    pub fn apply(&self, f: &[f64]) -> f64 {
        let c = f[self.node];
        self.terms.iter().map(|&(j, w)| w * (f[j] - c)).sum()
    }
}

/// A difference operator whose rows all annihilate constants. Rows are
/// evaluated in difference form so constants map to exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    nodes: usize,
    rows: Vec<StencilRow>,
}

impl Stencil {
    pub fn rows(&self) -> &[StencilRow] {
        &self.rows
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    /// Nodal result; nodes without a row get 0.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nodes];
        for row in &self.rows {
            out[row.node] = row.apply(f);
        }
        out
    }

    /// Assembled `nodes × nodes` matrix. The diagonal is stored last as the
    /// negated running sum of the off-diagonal entries, so row sums are
    /// exactly zero in floating point.
    pub fn to_operator(&self) -> DiscreteOperator {
        let mut op = DiscreteOperator::zeros(self.nodes, self.nodes);
        for row in &self.rows {
            op.push_stencil_row(row.node, 0, row, 1.0);
        }
        op
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn build_grid_examples() {
        let g = Grid::interval(0.0, 1.0, 5).unwrap();
        assert_eq!(g.axis(0).h, 0.25);
        let b: Vec<usize> = g.boundary().iter().map(|b| b.node).collect();
        assert_eq!(b, vec![0, 4]);
        assert_eq!(g.interior(), &[1, 2, 3]);

        let g2 = Grid::rectangle((0.0, 1.0), (0.0, 1.0), 4, 4).unwrap();
        assert_eq!(g2.node_count(), 16);
        assert_eq!(g2.boundary().len(), 12);
        assert_eq!(g2.interior().len(), 4);
        let corners = g2
            .boundary()
            .iter()
            .filter(|b| matches!(b.normal, Normal::Corner { .. }))
            .count();
        assert_eq!(corners, 4);

        assert!(matches!(Grid::interval(0.0, 1.0, 2), Err(Error::Config(_))));
        assert!(Grid::interval(1.0, 1.0, 5).is_err());
        assert!(Grid::new(3, &[(0.0, 1.0); 3], &[3; 3]).is_err());
    }

    #[test]
    fn every_node_is_interior_or_boundary() {
        let g = Grid::rectangle((0.0, 2.0), (-1.0, 1.0), 5, 7).unwrap();
        let mut seen = vec![0; g.node_count()];
        for &i in g.interior() {
            seen[i] += 1;
        }
        for b in g.boundary() {
            seen[b.node] += 1;
        }
        assert!(seen.iter().all(|&s| s == 1));
    }

    #[test]
    fn laplacian_exact_on_quadratics() {
        let g = Grid::interval(0.0, 1.0, 5).unwrap();
        let lap = g.laplacian().apply(&g.sample(|x, _| x * x));
        for &i in g.interior() {
            assert!((lap[i] - 2.0).abs() < 1e-12);
        }
        let g2 = Grid::rectangle((0.0, 1.0), (0.0, 1.0), 6, 5).unwrap();
        let lap2 = g2.laplacian().apply(&g2.sample(|x, y| x * x + y * y));
        for &i in g2.interior() {
            assert!((lap2[i] - 4.0).abs() < 1e-11);
        }
        for b in g2.boundary() {
            assert_eq!(lap2[b.node], 0.0);
        }
    }

    #[test]
    fn stencils_annihilate_constants_exactly() {
        let g = Grid::rectangle((0.0, 1.0), (0.0, 0.7), 9, 11).unwrap();
        let f = vec![0.123_456_789; g.node_count()];
        assert!(g.laplacian().apply(&f).iter().all(|&x| x == 0.0));
        assert!(g.normal_derivative().apply(&f).iter().all(|&x| x == 0.0));
        let ones = vec![1.0; g.node_count()];
        assert!(g.laplacian().to_operator().apply(&ones).iter().all(|&x| x == 0.0));
        assert!(g
            .normal_derivative()
            .to_operator()
            .apply(&ones)
            .iter()
            .all(|&x| x == 0.0));
    }

    #[test]
    fn normal_derivative_examples() {
        let g = Grid::interval(0.0, 1.0, 5).unwrap();
        let d = g.normal_derivative().apply(&g.sample(|x, _| x));
        assert!((d[0] + 1.0).abs() < 1e-14);
        assert!((d[4] - 1.0).abs() < 1e-14);
        assert_eq!(&d[1..4], &[0.0; 3]);
        let d2 = g.normal_derivative().apply(&g.sample(|x, _| x * x));
        assert!((d2[4] - 2.0).abs() < 1e-13);
        assert!(d2[0].abs() < 1e-13);
    }

    #[test]
    fn quadrature_examples() {
        let g = Grid::interval(0.0, 1.0, 9).unwrap();
        let ones = vec![1.0; g.node_count()];
        assert_eq!(g.boundary_integral(&ones).unwrap(), 2.0);
        assert!((g.interior_integral(&ones).unwrap() - 1.0).abs() < 1e-14);
        let lin = g.sample(|x, _| 3.0 * x - 1.0);
        assert!((g.interior_integral(&lin).unwrap() - 0.5).abs() < 1e-12);

        let g2 = Grid::rectangle((0.0, 1.0), (0.0, 1.0), 7, 7).unwrap();
        let ones2 = vec![1.0; g2.node_count()];
        assert!((g2.boundary_integral(&ones2).unwrap() - 4.0).abs() < 1e-14);
        assert!((g2.interior_integral(&ones2).unwrap() - 1.0).abs() < 1e-14);
        let lin2 = g2.sample(|x, y| x + 2.0 * y);
        assert!((g2.interior_integral(&lin2).unwrap() - 1.5).abs() < 1e-12);
        // ∫_∂Ω x dσ over the unit square = 0 + 1 + 1/2 + 1/2
        let bx = g2.sample(|x, _| x);
        assert!((g2.boundary_integral(&bx).unwrap() - 2.0).abs() < 1e-12);
        assert!(g2.interior_integral(&[1.0]).is_err());

        let trap: f64 = g2.trapezoid_weights().iter().sum();
        assert!((trap - 1.0).abs() < 1e-14);
    }

    #[test]
    fn small_grids_keep_quadrature_exact() {
        for n in [3, 4, 5] {
            let g = Grid::interval(0.0, 2.0, n).unwrap();
            assert!((g.volume() - 2.0).abs() < 1e-14, "n = {n}");
        }
    }

    #[test]
    fn green_identity_is_exact() {
        for g in [
            Grid::interval(0.0, 1.0, 4).unwrap(),
            Grid::interval(-1.0, 2.0, 17).unwrap(),
            Grid::rectangle((0.0, 1.0), (0.0, 2.0), 5, 9).unwrap(),
            Grid::rectangle((0.0, 1.0), (0.0, 1.0), 3, 3).unwrap(),
        ] {
            let f = g.sample(|x, y| (2.3 * x).sin() * (1.0 + y * y) + (0.7 * y).exp());
            let lhs = g.interior_integral(&g.laplacian().apply(&f)).unwrap();
            let rhs = g.boundary_integral(&g.normal_derivative().apply(&f)).unwrap();
            assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
        }
    }

    fn order(e1: f64, e2: f64) -> f64 {
        (e1 / e2).log2()
    }

    #[test]
    fn stencil_refinement_orders() {
        let f = |x: f64, y: f64| (PI * x).sin() * (0.5 * PI * y).cos() + x * x * y;
        let lap_exact = |x: f64, y: f64| -1.25 * PI * PI * (PI * x).sin() * (0.5 * PI * y).cos() + 2.0 * y;
        let dx = |x: f64, y: f64| PI * (PI * x).cos() * (0.5 * PI * y).cos() + 2.0 * x * y;
        let dy = |x: f64, y: f64| -0.5 * PI * (PI * x).sin() * (0.5 * PI * y).sin() + x * x;

        let errors = |n: usize| {
            let g = Grid::rectangle((0.0, 1.0), (0.0, 1.0), n, n).unwrap();
            let u = g.sample(f);
            let lap = g.laplacian().apply(&u);
            let dn = g.normal_derivative().apply(&u);
            let el = g
                .interior()
                .iter()
                .map(|&k| {
                    let [x, y] = g.coords(k);
                    (lap[k] - lap_exact(x, y)).abs()
                })
                .fold(0.0, f64::max);
            let ed = g
                .boundary()
                .iter()
                .map(|b| {
                    let [x, y] = g.coords(b.node);
                    let exact = match b.normal {
                        Normal::Axis { axis: 0, sign } => sign as f64 * dx(x, y),
                        Normal::Axis { sign, .. } => sign as f64 * dy(x, y),
                        Normal::Corner { sx, sy } => 0.5 * (sx as f64 * dx(x, y) + sy as f64 * dy(x, y)),
                    };
                    (dn[b.node] - exact).abs()
                })
                .fold(0.0, f64::max);
            (el, ed)
        };
        let (l1, d1) = errors(17);
        let (l2, d2) = errors(33);
        let (l3, d3) = errors(65);
        for o in [order(l1, l2), order(l2, l3), order(d1, d2), order(d2, d3)] {
            assert!((1.8..=2.2).contains(&o), "order {o}");
        }
    }
}
