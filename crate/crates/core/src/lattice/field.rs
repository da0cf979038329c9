use serde::{Deserialize, Serialize};

use super::grid::Grid2D;
use crate::error::{Error, Result};

/// Tolerance on `| |u| - 1 |` for constrained fields.
pub const UNIT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    /// Values anywhere in the plane (Ginzburg–Landau relaxation).
    Relaxed,
    /// Unit-modulus values at every active node.
    Constrained,
}

/// Two-component field on the nodes of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct S1Field {
    values: Vec<[f64; 2]>,
    kind: FieldKind,
}

impl S1Field {
    pub fn new(grid: &Grid2D, values: Vec<[f64; 2]>, kind: FieldKind) -> Result<Self> {
        if values.len() != grid.num_nodes() {
            return Err(Error::ShapeMismatch { expected: grid.num_nodes(), got: values.len() });
        }
        for (n, v) in values.iter().enumerate() {
            if !grid.node_active(n) {
                continue;
            }
            if !(v[0].is_finite() && v[1].is_finite()) {
                return Err(Error::InvalidField(format!("non-finite value at node {n}")));
            }
            if kind == FieldKind::Constrained && (v[0].hypot(v[1]) - 1.0).abs() > UNIT_TOL {
                return Err(Error::InvalidField(format!("|u| != 1 at node {n} of a constrained field")));
            }
        }
        Ok(Self { values, kind })
    }

    /// Samples `f` at every node position. Exterior nodes are sampled too.
    pub fn from_fn(grid: &Grid2D, kind: FieldKind, f: impl Fn([f64; 2]) -> [f64; 2]) -> Result<Self> {
        let values = (0..grid.num_nodes()).map(|n| f(grid.node_pos_of(n))).collect();
        Self::new(grid, values, kind)
    }

    /// Samples a phase function and stores `e^{i phase}` as a constrained field.
    pub fn from_phase(grid: &Grid2D, phase: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.num_nodes())
            .map(|n| {
                let t = phase(grid.node_pos_of(n));
                [t.cos(), t.sin()]
            })
            .collect();
        Self { values, kind: FieldKind::Constrained }
    }

    pub fn constant(grid: &Grid2D, value: [f64; 2], kind: FieldKind) -> Result<Self> {
        Self::new(grid, vec![value; grid.num_nodes()], kind)
    }

    pub fn values(&self) -> &[[f64; 2]] {
        &self.values
    }
    pub fn kind(&self) -> FieldKind {
        self.kind
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn values_mut(&mut self) -> &mut [[f64; 2]] {
        &mut self.values
    }

    pub(crate) fn from_parts(values: Vec<[f64; 2]>, kind: FieldKind) -> Self {
        Self { values, kind }
    }

    /// Same values, relabelled as relaxed.
    pub fn into_relaxed(self) -> Self {
        Self { values: self.values, kind: FieldKind::Relaxed }
    }

    pub fn check_grid(&self, grid: &Grid2D) -> Result<()> {
        if self.values.len() != grid.num_nodes() {
            return Err(Error::ShapeMismatch { expected: grid.num_nodes(), got: self.values.len() });
        }
        Ok(())
    }

    /// Pointwise product of complex values (`u * v`). Winding numbers add.
    pub fn multiply(&self, other: &S1Field) -> Result<S1Field> {
        if self.len() != other.len() {
            return Err(Error::ShapeMismatch { expected: self.len(), got: other.len() });
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| cmul(*a, *b)).collect();
        let kind = if self.kind == FieldKind::Constrained && other.kind == FieldKind::Constrained {
            FieldKind::Constrained
        } else {
            FieldKind::Relaxed
        };
        Ok(Self { values, kind })
    }

    /// Rotate every value by the fixed angle `alpha`.
    pub fn rotate(&self, alpha: f64) -> S1Field {
        let r = [alpha.cos(), alpha.sin()];
        Self { values: self.values.iter().map(|v| cmul(r, *v)).collect(), kind: self.kind }
    }
}

#[inline]
pub(crate) fn cmul(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0]]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Location {
    Node,
    Cell,
}

/// Scalar values on nodes or on cells.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub location: Location,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn nodes(values: Vec<f64>) -> Self {
        Self { location: Location::Node, values }
    }
    pub fn cells(values: Vec<f64>) -> Self {
        Self { location: Location::Cell, values }
    }

    pub fn node_fn(grid: &Grid2D, f: impl Fn([f64; 2]) -> f64) -> Self {
        Self::nodes((0..grid.num_nodes()).map(|n| f(grid.node_pos_of(n))).collect())
    }

    pub fn cell_fn(grid: &Grid2D, f: impl Fn([f64; 2]) -> f64) -> Self {
        let (cx, cy) = grid.cell_dims();
        let mut v = Vec::with_capacity(cx * cy);
        for cj in 0..cy {
            for ci in 0..cx {
                v.push(f(grid.cell_center(ci, cj)));
            }
        }
        Self::cells(v)
    }

    pub fn check(&self, grid: &Grid2D, location: Location) -> Result<()> {
        let expected = match location {
            Location::Node => grid.num_nodes(),
            Location::Cell => grid.num_cells(),
        };
        if self.location != location || self.values.len() != expected {
            return Err(Error::ShapeMismatch { expected, got: self.values.len() });
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Discrete one-form: one value per oriented edge, in units of 1/length.
#[derive(Clone, Debug, PartialEq)]
pub struct OneForm2D {
    pub ax: Vec<f64>,
    pub ay: Vec<f64>,
}

impl OneForm2D {
    pub fn zeros(grid: &Grid2D) -> Self {
        let (hx, vy) = grid.edge_counts();
        Self { ax: vec![0.0; hx], ay: vec![0.0; vy] }
    }

    pub fn constant(grid: &Grid2D, a: [f64; 2]) -> Self {
        let (hx, vy) = grid.edge_counts();
        Self { ax: vec![a[0]; hx], ay: vec![a[1]; vy] }
    }

    pub fn check(&self, grid: &Grid2D) -> Result<()> {
        let (hx, vy) = grid.edge_counts();
        if self.ax.len() != hx {
            return Err(Error::ShapeMismatch { expected: hx, got: self.ax.len() });
        }
        if self.ay.len() != vy {
            return Err(Error::ShapeMismatch { expected: vy, got: self.ay.len() });
        }
        Ok(())
    }

    pub fn sub(&self, other: &OneForm2D) -> OneForm2D {
        OneForm2D {
            ax: self.ax.iter().zip(&other.ax).map(|(a, b)| a - b).collect(),
            ay: self.ay.iter().zip(&other.ay).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn add(&self, other: &OneForm2D) -> OneForm2D {
        OneForm2D {
            ax: self.ax.iter().zip(&other.ax).map(|(a, b)| a + b).collect(),
            ay: self.ay.iter().zip(&other.ay).map(|(a, b)| a + b).collect(),
        }
    }

    /// Edge inner product `h^2 sum a_e b_e`.
    pub fn dot(&self, other: &OneForm2D, grid: &Grid2D) -> f64 {
        let h2 = grid.h() * grid.h();
        let sx: f64 = self.ax.iter().zip(&other.ax).map(|(a, b)| a * b).sum();
        let sy: f64 = self.ay.iter().zip(&other.ay).map(|(a, b)| a * b).sum();
        h2 * (sx + sy)
    }

    pub fn l2_norm(&self, grid: &Grid2D) -> f64 {
        self.dot(self, grid).sqrt()
    }

    /// Squared magnitude per cell, averaging the two edges of each direction.
    pub fn cell_magnitude_sq(&self, grid: &Grid2D) -> Vec<f64> {
        let (cx, cy) = grid.cell_dims();
        let mut out = vec![0.0; cx * cy];
        for cj in 0..cy {
            for ci in 0..cx {
                let ([b, t], [l, r]) = grid.cell_edges(ci, cj);
                out[grid.cell(ci, cj)] = 0.5
                    * (self.ax[b] * self.ax[b] + self.ax[t] * self.ax[t] + self.ay[l] * self.ay[l] + self.ay[r] * self.ay[r]);
            }
        }
        out
    }

    /// Discrete `L^q` norm, `(h^2 sum_cells |a|_cell^q)^{1/q}` over active cells.
    pub fn lq_norm(&self, grid: &Grid2D, q: f64) -> f64 {
        let h2 = grid.h() * grid.h();
        let s: f64 = self
            .cell_magnitude_sq(grid)
            .iter()
            .enumerate()
            .filter(|(c, _)| grid.cell_active(*c))
            .map(|(_, m)| m.powf(0.5 * q))
            .sum();
        (h2 * s).powf(1.0 / q)
    }
}
