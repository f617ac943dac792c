//! Structured grid on the unit cube `[0,1]^d` with nodal vector fields,
//! finite-difference gradient operators and quadrature.
//!
//! Nodes are numbered lexicographically with the first axis fastest. Field
//! values are stored node by node, component fastest, so that interior
//! unknown `k·d + i` is component `i` at the `k`-th interior node.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Mat, Tensor3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    d: usize,
    n: usize,
}

/// What a field represents; carried into serialized state headers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Deformation,
    Displacement,
    Velocity,
    Force,
    Functional,
}

impl Role {
    pub fn tag(self) -> u32 {
        match self {
            Role::Deformation => 1,
            Role::Displacement => 2,
            Role::Velocity => 3,
            Role::Force => 4,
            Role::Functional => 5,
        }
    }

    pub fn from_tag(tag: u32) -> Option<Self> {
        Some(match tag {
            1 => Role::Deformation,
            2 => Role::Displacement,
            3 => Role::Velocity,
            4 => Role::Force,
            5 => Role::Functional,
            _ => return None,
        })
    }
}

/// One term of a second-difference stencil: neighbour offset and the
/// coefficients `c[j][k]` it contributes to `∂_j ∂_k`.
#[derive(Clone, Copy, Debug)]
pub struct HessianStencilEntry {
    pub offset: [isize; 3],
    pub coef: Mat,
}

impl Grid {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::Config(format!("dimension {d} not in 1..=3")));
        }
        if n < 3 {
            return Err(Error::Config(format!("need at least 3 nodes per axis, got {n}")));
        }
        Ok(Self { d, n })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn nodes_per_axis(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        1.0 / (self.n - 1) as f64
    }

    /// Volume element `Δx^d`.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.d as i32)
    }

    pub fn num_nodes(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn num_cells(&self) -> usize {
        (self.n - 1).pow(self.d as u32)
    }

    pub fn num_interior(&self) -> usize {
        (self.n - 2).pow(self.d as u32)
    }

    /// Number of unknowns (interior nodes times components).
    pub fn num_dofs(&self) -> usize {
        self.num_interior() * self.d
    }

    pub fn node_multi(&self, node: usize) -> [usize; 3] {
        let mut m = [0; 3];
        let mut r = node;
        for a in 0..self.d {
            m[a] = r % self.n;
            r /= self.n;
        }
        m
    }

    pub fn node_index(&self, m: &[usize; 3]) -> usize {
        (0..self.d).rev().fold(0, |acc, a| acc * self.n + m[a])
    }

    pub fn node_coords(&self, node: usize) -> [f64; 3] {
        let m = self.node_multi(node);
        let mut x = [0.0; 3];
        for a in 0..self.d {
            x[a] = m[a] as f64 * self.dx();
        }
        x
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        let m = self.node_multi(node);
        (0..self.d).any(|a| m[a] == 0 || m[a] == self.n - 1)
    }

    /// Interior numbering of a node, `None` on the boundary.
    pub fn interior_of(&self, node: usize) -> Option<usize> {
        let m = self.node_multi(node);
        if (0..self.d).any(|a| m[a] == 0 || m[a] == self.n - 1) {
            return None;
        }
        Some((0..self.d).rev().fold(0, |acc, a| acc * (self.n - 2) + (m[a] - 1)))
    }

    /// Global node index of the `k`-th interior node.
    pub fn interior_node(&self, k: usize) -> usize {
        let mut m = [0; 3];
        let mut r = k;
        for a in 0..self.d {
            m[a] = r % (self.n - 2) + 1;
            r /= self.n - 2;
        }
        self.node_index(&m)
    }

    pub fn cell_multi(&self, cell: usize) -> [usize; 3] {
        let mut m = [0; 3];
        let mut r = cell;
        for a in 0..self.d {
            m[a] = r % (self.n - 1);
            r /= self.n - 1;
        }
        m
    }

    pub fn cell_center(&self, cell: usize) -> [f64; 3] {
        let m = self.cell_multi(cell);
        let mut x = [0.0; 3];
        for a in 0..self.d {
            x[a] = (m[a] as f64 + 0.5) * self.dx();
        }
        x
    }

    /// The `2^d` corner nodes of a cell with the gradient weights of each
    /// corner per axis: `∂_a f(center) ≈ Σ_corners w[a] f(corner)`.
    pub fn cell_stencil(&self, cell: usize) -> Vec<(usize, [f64; 3])> {
        let m = self.cell_multi(cell);
        let scale = 1.0 / ((1usize << (self.d - 1)) as f64 * self.dx());
        (0..1usize << self.d)
            .map(|bits| {
                let mut corner = m;
                let mut w = [0.0; 3];
                for a in 0..self.d {
                    let b = (bits >> a) & 1;
                    corner[a] += b;
                    w[a] = if b == 1 { scale } else { -scale };
                }
                (self.node_index(&corner), w)
            })
            .collect()
    }

    /// Offsets and coefficients of the central second-difference stencil.
    pub fn hessian_stencil(&self) -> Vec<HessianStencilEntry> {
        let d = self.d;
        let inv = 1.0 / (self.dx() * self.dx());
        let count = 3usize.pow(d as u32);
        let mut out = Vec::new();
        for code in 0..count {
            let mut off = [0isize; 3];
            let mut r = code;
            for o in off.iter_mut().take(d) {
                *o = (r % 3) as isize - 1;
                r /= 3;
            }
            let nz: Vec<usize> = (0..d).filter(|&a| off[a] != 0).collect();
            let coef = Mat::from_fn(d, |j, k| {
                if j == k {
                    match nz.as_slice() {
                        [] => -2.0 * inv,
                        [a] if *a == j => inv,
                        _ => 0.0,
                    }
                } else if nz.len() == 2 && nz.contains(&j) && nz.contains(&k) {
                    (off[j] * off[k]) as f64 * 0.25 * inv
                } else {
                    0.0
                }
            });
            if coef.max_abs() > 0.0 {
                out.push(HessianStencilEntry { offset: off, coef });
            }
        }
        out
    }

    /// Node reached from an interior node by a stencil offset.
    pub fn offset_node(&self, node: usize, off: &[isize; 3]) -> usize {
        let mut m = self.node_multi(node);
        for a in 0..self.d {
            m[a] = (m[a] as isize + off[a]) as usize;
        }
        self.node_index(&m)
    }

    /// Midpoint rule over cells.
    pub fn integrate_cells(&self, vals: &[f64]) -> Result<f64> {
        check_len(self.num_cells(), vals.len())?;
        Ok(vals.iter().sum::<f64>() * self.cell_volume())
    }

    /// Nodal rule over interior nodes.
    pub fn integrate_nodes(&self, vals: &[f64]) -> Result<f64> {
        check_len(self.num_interior(), vals.len())?;
        Ok(vals.iter().sum::<f64>() * self.cell_volume())
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::SizeMismatch { expected, got });
    }
    Ok(())
}

/// A nodal vector field with `d` components per node.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    role: Role,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid, role: Role) -> Self {
        Self {
            grid,
            role,
            values: vec![0.0; grid.num_nodes() * grid.dim()],
        }
    }

    /// The identity deformation `y(x) = x`.
    pub fn identity(grid: Grid) -> Self {
        Self::from_fn(grid, Role::Deformation, |x| *x)
    }

    pub fn from_fn(grid: Grid, role: Role, f: impl Fn(&[f64; 3]) -> [f64; 3]) -> Self {
        let d = grid.dim();
        let mut values = Vec::with_capacity(grid.num_nodes() * d);
        for node in 0..grid.num_nodes() {
            let v = f(&grid.node_coords(node));
            values.extend_from_slice(&v[..d]);
        }
        Self { grid, role, values }
    }

    pub fn from_values(grid: Grid, role: Role, values: Vec<f64>) -> Result<Self> {
        check_len(grid.num_nodes() * grid.dim(), values.len())?;
        Ok(Self { grid, role, values })
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn role(&self) -> Role {
        self.role
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn at(&self, node: usize, comp: usize) -> f64 {
        self.values[node * self.grid.dim() + comp]
    }

    #[inline]
    pub fn set(&mut self, node: usize, comp: usize, v: f64) {
        let d = self.grid.dim();
        self.values[node * d + comp] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }

    /// Interior unknowns in DOF order.
    pub fn interior_values(&self) -> Vec<f64> {
        let g = self.grid;
        let d = g.dim();
        let mut out = Vec::with_capacity(g.num_dofs());
        for k in 0..g.num_interior() {
            let node = g.interior_node(k);
            out.extend_from_slice(&self.values[node * d..node * d + d]);
        }
        out
    }

    pub fn set_interior_values(&mut self, dofs: &[f64]) -> Result<()> {
        let g = self.grid;
        check_len(g.num_dofs(), dofs.len())?;
        let d = g.dim();
        for k in 0..g.num_interior() {
            let node = g.interior_node(k);
            self.values[node * d..node * d + d].copy_from_slice(&dofs[k * d..k * d + d]);
        }
        Ok(())
    }

    /// `self + s·dofs` on the interior, boundary unchanged.
    pub fn add_interior(&self, s: f64, dofs: &[f64]) -> Self {
        let g = self.grid;
        let d = g.dim();
        let mut out = self.clone();
        for k in 0..g.num_interior() {
            let node = g.interior_node(k);
            for i in 0..d {
                out.values[node * d + i] += s * dofs[k * d + i];
            }
        }
        out
    }

    pub fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Misaligned(format!(
                "grid {:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    /// `a·self + b·other`.
    pub fn lin_comb(&self, a: f64, other: &Field, b: f64) -> Self {
        assert_eq!(self.grid, other.grid, "fields on different grids");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Self {
            grid: self.grid,
            role: self.role,
            values,
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            grid: self.grid,
            role: self.role,
            values: self.values.iter().map(|x| s * x).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Vector at a node as a fixed array.
    pub fn node_vec(&self, node: usize) -> [f64; 3] {
        let d = self.grid.dim();
        let mut v = [0.0; 3];
        v[..d].copy_from_slice(&self.values[node * d..node * d + d]);
        v
    }
}

/// Gradient of the multilinear interpolant at each cell center.
pub fn cell_gradient(f: &Field) -> Vec<Mat> {
    let g = f.grid();
    (0..g.num_cells()).map(|c| cell_gradient_at(f, c)).collect()
}

pub fn cell_gradient_at(f: &Field, cell: usize) -> Mat {
    let g = f.grid();
    let d = g.dim();
    let mut m = Mat::zeros(d);
    for (node, w) in g.cell_stencil(cell) {
        for i in 0..d {
            let v = f.at(node, i);
            for a in 0..d {
                m[(i, a)] += w[a] * v;
            }
        }
    }
    m
}

/// Central second differences at every interior node (interior numbering).
pub fn node_hessian(f: &Field) -> Vec<Tensor3> {
    let g = f.grid();
    let stencil = g.hessian_stencil();
    (0..g.num_interior())
        .map(|k| node_hessian_at(f, g.interior_node(k), &stencil))
        .collect()
}

pub fn node_hessian_at(f: &Field, node: usize, stencil: &[HessianStencilEntry]) -> Tensor3 {
    let g = f.grid();
    let d = g.dim();
    let mut t = Tensor3::zeros(d);
    for e in stencil {
        let nb = g.offset_node(node, &e.offset);
        for i in 0..d {
            let v = f.at(nb, i);
            for j in 0..d {
                for k in 0..d {
                    t[(i, j, k)] += e.coef[(j, k)] * v;
                }
            }
        }
    }
    t
}

/// Sets boundary nodes of a deformation to their coordinates.
pub fn apply_dirichlet_identity(y: &mut Field) {
    let g = y.grid();
    for node in 0..g.num_nodes() {
        if g.is_boundary(node) {
            let x = g.node_coords(node);
            for i in 0..g.dim() {
                y.set(node, i, x[i]);
            }
        }
    }
}

/// Sets boundary nodes of a displacement-like field to zero.
pub fn apply_dirichlet_zero(u: &mut Field) {
    let g = u.grid();
    for node in 0..g.num_nodes() {
        if g.is_boundary(node) {
            for i in 0..g.dim() {
                u.set(node, i, 0.0);
            }
        }
    }
}

/// Largest boundary deviation from the identity (zero for admissible deformations).
pub fn boundary_defect_identity(y: &Field) -> f64 {
    let g = y.grid();
    let mut worst = 0.0_f64;
    for node in 0..g.num_nodes() {
        if g.is_boundary(node) {
            let x = g.node_coords(node);
            for i in 0..g.dim() {
                worst = worst.max((y.at(node, i) - x[i]).abs());
            }
        }
    }
    worst
}

/// Largest boundary value of a field that should vanish on the boundary.
pub fn boundary_defect_zero(u: &Field) -> f64 {
    let g = u.grid();
    let mut worst = 0.0_f64;
    for node in 0..g.num_nodes() {
        if g.is_boundary(node) {
            for i in 0..g.dim() {
                worst = worst.max(u.at(node, i).abs());
            }
        }
    }
    worst
}

/// Smallest cell-gradient determinant.
pub fn min_det(y: &Field) -> f64 {
    let g = y.grid();
    (0..g.num_cells())
        .map(|c| cell_gradient_at(y, c).det())
        .fold(f64::INFINITY, f64::min)
}

/// Discrete norms of a field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteNorms {
    /// Nodal L² norm over interior nodes.
    pub l2: f64,
    /// L² norm of the cell gradients.
    pub h1_semi: f64,
    /// Largest Frobenius norm of a cell gradient.
    pub linf_grad: f64,
}

impl DiscreteNorms {
    pub fn h1(&self) -> f64 {
        (self.l2 * self.l2 + self.h1_semi * self.h1_semi).sqrt()
    }
}

pub fn discrete_norms(u: &Field) -> DiscreteNorms {
    let g = u.grid();
    let d = g.dim();
    let vol = g.cell_volume();
    let mut l2 = 0.0;
    for k in 0..g.num_interior() {
        let node = g.interior_node(k);
        for i in 0..d {
            l2 += u.at(node, i).powi(2);
        }
    }
    let mut semi = 0.0;
    let mut linf = 0.0_f64;
    for c in 0..g.num_cells() {
        let n2 = cell_gradient_at(u, c).norm_sq();
        semi += n2;
        linf = linf.max(n2.sqrt());
    }
    DiscreteNorms {
        l2: (l2 * vol).sqrt(),
        h1_semi: (semi * vol).sqrt(),
        linf_grad: linf,
    }
}

/// Discrete H¹ distance between two fields on the same grid.
pub fn h1_distance(a: &Field, b: &Field) -> Result<f64> {
    a.check_same_grid(b)?;
    Ok(discrete_norms(&a.lin_comb(1.0, b, -1.0)).h1())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g2(n: usize) -> Grid {
        Grid::new(2, n).unwrap()
    }

    #[test]
    fn numbering_round_trips() {
        for d in 1..=3 {
            let g = Grid::new(d, 5).unwrap();
            for node in 0..g.num_nodes() {
                assert_eq!(g.node_index(&g.node_multi(node)), node);
                if let Some(k) = g.interior_of(node) {
                    assert_eq!(g.interior_node(k), node);
                }
            }
            let interior = (0..g.num_nodes()).filter(|&n| !g.is_boundary(n)).count();
            assert_eq!(interior, g.num_interior());
        }
        let g = g2(4);
        assert_eq!(g.node_coords(1), [1.0 / 3.0, 0.0, 0.0]);
        assert_eq!(g.node_coords(4), [0.0, 1.0 / 3.0, 0.0]);
    }

    #[test]
    fn gradient_is_exact_on_affine_fields() {
        for d in 1..=3 {
            let g = Grid::new(d, 5).unwrap();
            let a = Mat::from_fn(d, |i, j| 0.3 * i as f64 - 0.7 * j as f64 + 1.1);
            let f = Field::from_fn(g, Role::Deformation, |x| {
                let mut v = [0.0; 3];
                for i in 0..d {
                    v[i] = 0.25 + (0..d).map(|j| a[(i, j)] * x[j]).sum::<f64>();
                }
                v
            });
            for m in cell_gradient(&f) {
                assert!((m - a).max_abs() < 1e-13);
            }
            for t in node_hessian(&f) {
                assert!(t.norm() < 1e-10);
            }
        }
        for m in cell_gradient(&Field::identity(g2(6))) {
            assert!((m - Mat::identity(2)).max_abs() < 1e-14);
        }
    }

    #[test]
    fn gradient_of_parabola_at_centers() {
        let g = g2(7);
        let f = Field::from_fn(g, Role::Displacement, |x| [x[0] * x[0], 0.0, 0.0]);
        for (c, m) in cell_gradient(&f).iter().enumerate() {
            let xc = g.cell_center(c);
            assert!((m[(0, 0)] - 2.0 * xc[0]).abs() < 1e-13);
            assert!(m[(0, 1)].abs() < 1e-13 && m[(1, 0)].abs() < 1e-13);
        }
    }

    #[test]
    fn second_differences_are_exact_on_quadratics() {
        let g = g2(6);
        let f = Field::from_fn(g, Role::Displacement, |x| [x[0] * x[0], 0.0, 0.0]);
        for t in node_hessian(&f) {
            assert!((t[(0, 0, 0)] - 2.0).abs() < 1e-10);
        }
        let f = Field::from_fn(g, Role::Displacement, |x| [x[0] * x[1], 0.0, 0.0]);
        for t in node_hessian(&f) {
            assert!((t[(0, 0, 1)] - 1.0).abs() < 1e-10);
            assert!((t[(0, 1, 0)] - 1.0).abs() < 1e-10);
            assert!(t[(0, 0, 0)].abs() < 1e-10);
        }
        let g3 = Grid::new(3, 5).unwrap();
        let f = Field::from_fn(g3, Role::Displacement, |x| [0.0, 0.0, x[1] * x[2] + x[0] * x[0]]);
        for t in node_hessian(&f) {
            assert!((t[(2, 1, 2)] - 1.0).abs() < 1e-10);
            assert!((t[(2, 0, 0)] - 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn quadrature_examples() {
        let g = g2(9);
        let ones = vec![1.0; g.num_cells()];
        assert!((g.integrate_cells(&ones).unwrap() - 1.0).abs() < 1e-14);
        let inner = vec![1.0; g.num_interior()];
        let expect = (7.0_f64 / 8.0).powi(2);
        assert!((g.integrate_nodes(&inner).unwrap() - expect).abs() < 1e-14);
        let lin: Vec<f64> = (0..g.num_cells()).map(|c| g.cell_center(c)[0]).collect();
        assert!((g.integrate_cells(&lin).unwrap() - 0.5).abs() < 1e-14);
        assert!(matches!(g.integrate_cells(&inner), Err(Error::SizeMismatch { .. })));
    }

    #[test]
    fn dirichlet_conditions() {
        let g = g2(5);
        let id = Field::identity(g);
        let mut y = id.clone();
        apply_dirichlet_identity(&mut y);
        assert_eq!(y, id);
        let mut u = Field::from_fn(g, Role::Displacement, |x| [x[0] + 1.0, x[1] - 3.0, 0.0]);
        let interior = u.interior_values();
        apply_dirichlet_zero(&mut u);
        assert_eq!(u.interior_values(), interior);
        for node in 0..g.num_nodes() {
            if g.is_boundary(node) {
                assert_eq!(u.node_vec(node), [0.0; 3]);
            }
        }
        let mut z = Field::zeros(g, Role::Displacement);
        apply_dirichlet_zero(&mut z);
        assert_eq!(z, Field::zeros(g, Role::Displacement));
    }

    #[test]
    fn determinant_monitor() {
        let g = g2(9);
        assert!((min_det(&Field::identity(g)) - 1.0).abs() < 1e-14);
        let eps = 1e-3;
        let y = Field::from_fn(g, Role::Deformation, |x| {
            let b = (std::f64::consts::PI * x[0]).sin() * (std::f64::consts::PI * x[1]).sin();
            [x[0] + eps * b, x[1], 0.0]
        });
        assert!((min_det(&y) - 1.0).abs() < 4.0 * eps);
        let mut folded = Field::identity(g);
        let centre = g.node_index(&[4, 4, 0]);
        folded.set(centre, 0, 0.9);
        assert!(min_det(&folded) <= 0.0);
    }

    #[test]
    fn norm_examples() {
        let g = g2(9);
        let z = discrete_norms(&Field::zeros(g, Role::Displacement));
        assert_eq!((z.l2, z.h1_semi, z.linf_grad), (0.0, 0.0, 0.0));
        let mut c = Field::from_fn(g, Role::Displacement, |_| [3.0, 4.0, 0.0]);
        apply_dirichlet_zero(&mut c);
        let measure = g.num_interior() as f64 * g.cell_volume();
        assert!((discrete_norms(&c).l2 - 5.0 * measure.sqrt()).abs() < 1e-13);
        let a = Field::from_fn(g, Role::Displacement, |x| [x[0] - 2.0 * x[1], 0.5 * x[0], 0.0]);
        let expect = (1.0_f64 + 4.0 + 0.25).sqrt();
        let nrm = discrete_norms(&a);
        assert!((nrm.h1_semi - expect).abs() < 1e-13);
        assert!((nrm.linf_grad - expect).abs() < 1e-13);
    }

    #[test]
    fn gradient_error_is_second_order() {
        let errs: Vec<f64> = [9usize, 17, 33]
            .iter()
            .map(|&n| {
                let g = g2(n);
                let f = Field::from_fn(g, Role::Displacement, |x| {
                    [(2.0 * x[0]).sin() * x[1].exp(), (x[0] * x[1]).cos(), 0.0]
                });
                cell_gradient(&f)
                    .iter()
                    .enumerate()
                    .map(|(c, m)| {
                        let x = g.cell_center(c);
                        let exact = Mat::from_rows(
                            2,
                            &[
                                2.0 * (2.0 * x[0]).cos() * x[1].exp(),
                                (2.0 * x[0]).sin() * x[1].exp(),
                                -x[1] * (x[0] * x[1]).sin(),
                                -x[0] * (x[0] * x[1]).sin(),
                            ],
                        );
                        (*m - exact).max_abs()
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order > 1.9, "order {order}");
        }
    }

    #[test]
    fn interior_round_trip() {
        let g = g2(6);
        let mut f = Field::zeros(g, Role::Velocity);
        let dofs: Vec<f64> = (0..g.num_dofs()).map(|i| i as f64).collect();
        f.set_interior_values(&dofs).unwrap();
        assert_eq!(f.interior_values(), dofs);
        let k = 5;
        let node = g.interior_node(k);
        assert_eq!(f.at(node, 1), (k * 2 + 1) as f64);
    }
}
