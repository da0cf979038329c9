use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Topology {
    Torus,
    Rectangle,
    Disk { center: [f64; 2], radius: f64 },
}

impl Topology {
    pub fn code(&self) -> u8 {
        match self {
            Topology::Torus => 0,
            Topology::Rectangle => 1,
            Topology::Disk { .. } => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Topology::Torus => "torus",
            Topology::Rectangle => "rectangle",
            Topology::Disk { .. } => "disk",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeRole {
    Interior,
    Boundary,
    Exterior,
}

/// Uniform lattice with nodes at `origin + (i h, j h)`.
///
/// Fields live on nodes, one-forms on edges and densities on cells
/// (plaquettes). Horizontal edge `(i, j)` joins node `(i, j)` to `(i+1, j)`,
/// vertical edge `(i, j)` joins `(i, j)` to `(i, j+1)`; cell `(i, j)` has
/// lower-left corner `(i, j)`. On the torus all indices wrap.
#[derive(Clone, Debug)]
pub struct Grid2D {
    nx: usize,
    ny: usize,
    h: f64,
    origin: [f64; 2],
    topology: Topology,
    roles: Vec<NodeRole>,
    cell_active: Vec<bool>,
}

impl Grid2D {
    fn check_dims(nx: usize, ny: usize, h: f64) -> Result<()> {
        if nx < 8 || ny < 8 {
            return Err(Error::InvalidGrid(format!("need nx, ny >= 8, got {nx} x {ny}")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {h}")));
        }
        Ok(())
    }

    /// Periodic `nx x ny` lattice covering `[0, nx h) x [0, ny h)`.
    pub fn torus(nx: usize, ny: usize, h: f64) -> Result<Self> {
        Self::check_dims(nx, ny, h)?;
        Ok(Self {
            nx,
            ny,
            h,
            origin: [0.0, 0.0],
            topology: Topology::Torus,
            roles: vec![NodeRole::Interior; nx * ny],
            cell_active: vec![true; nx * ny],
        })
    }

    /// Unit-period square torus with `n` nodes per side.
    pub fn unit_torus(n: usize) -> Result<Self> {
        Self::torus(n, n, 1.0 / n as f64)
    }

    /// Rectangle whose outer ring of nodes is the boundary.
    pub fn rectangle(nx: usize, ny: usize, h: f64, origin: [f64; 2]) -> Result<Self> {
        Self::check_dims(nx, ny, h)?;
        let mut roles = vec![NodeRole::Interior; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                if i == 0 || j == 0 || i == nx - 1 || j == ny - 1 {
                    roles[j * nx + i] = NodeRole::Boundary;
                }
            }
        }
        let cell_active = vec![true; (nx - 1) * (ny - 1)];
        Ok(Self { nx, ny, h, origin, topology: Topology::Rectangle, roles, cell_active })
    }

    /// Square grid of `n x n` cells covering `[-1/2, 1/2]^2`. For odd `n`
    /// the origin is a cell center.
    pub fn centered_unit_square(n: usize) -> Result<Self> {
        let h = 1.0 / n as f64;
        Self::rectangle(n + 1, n + 1, h, [-0.5, -0.5])
    }

    /// Disk of the given radius centered at the origin, realized as a mask on
    /// a square grid. The center sits at a cell center so that no node
    /// coincides with it.
    pub fn disk(radius: f64, h: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidGrid(format!("disk radius must be positive, got {radius}")));
        }
        let m = (radius / h).ceil() as usize + 2;
        let n = 2 * m;
        Self::check_dims(n, n, h)?;
        let origin = [-(m as f64 - 0.5) * h, -(m as f64 - 0.5) * h];
        let center = [0.0, 0.0];
        let mut roles = vec![NodeRole::Exterior; n * n];
        for j in 0..n {
            for i in 0..n {
                let x = origin[0] + i as f64 * h - center[0];
                let y = origin[1] + j as f64 * h - center[1];
                if (x * x + y * y).sqrt() <= radius {
                    roles[j * n + i] = NodeRole::Interior;
                }
            }
        }
        for j in 0..n {
            for i in 0..n {
                if roles[j * n + i] != NodeRole::Exterior {
                    continue;
                }
                let touches = [(1isize, 0isize), (-1, 0), (0, 1), (0, -1)].iter().any(|&(di, dj)| {
                    let (a, b) = (i as isize + di, j as isize + dj);
                    a >= 0
                        && b >= 0
                        && (a as usize) < n
                        && (b as usize) < n
                        && roles[b as usize * n + a as usize] == NodeRole::Interior
                });
                if touches {
                    roles[j * n + i] = NodeRole::Boundary;
                }
            }
        }
        let mut cell_active = vec![false; (n - 1) * (n - 1)];
        for cj in 0..n - 1 {
            for ci in 0..n - 1 {
                let corners = [j_i(n, ci, cj), j_i(n, ci + 1, cj), j_i(n, ci + 1, cj + 1), j_i(n, ci, cj + 1)];
                cell_active[cj * (n - 1) + ci] = corners.iter().all(|&c| roles[c] != NodeRole::Exterior);
            }
        }
        Ok(Self {
            nx: n,
            ny: n,
            h,
            origin,
            topology: Topology::Disk { center, radius },
            roles,
            cell_active,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }
    pub fn topology(&self) -> Topology {
        self.topology
    }
    pub fn is_torus(&self) -> bool {
        matches!(self.topology, Topology::Torus)
    }
    pub fn num_nodes(&self) -> usize {
        self.nx * self.ny
    }

    /// Number of cells along x and y.
    pub fn cell_dims(&self) -> (usize, usize) {
        if self.is_torus() {
            (self.nx, self.ny)
        } else {
            (self.nx - 1, self.ny - 1)
        }
    }
    pub fn num_cells(&self) -> usize {
        let (a, b) = self.cell_dims();
        a * b
    }
    /// Number of horizontal and vertical edges.
    pub fn edge_counts(&self) -> (usize, usize) {
        let (cx, cy) = self.cell_dims();
        (cx * self.ny, self.nx * cy)
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
    #[inline]
    pub fn node_ij(&self, n: usize) -> (usize, usize) {
        (n % self.nx, n / self.nx)
    }
    #[inline]
    pub fn next_i(&self, i: usize) -> usize {
        if i + 1 == self.nx {
            0
        } else {
            i + 1
        }
    }
    #[inline]
    pub fn next_j(&self, j: usize) -> usize {
        if j + 1 == self.ny {
            0
        } else {
            j + 1
        }
    }
    #[inline]
    pub fn cell(&self, ci: usize, cj: usize) -> usize {
        cj * self.cell_dims().0 + ci
    }
    #[inline]
    pub fn cell_ij(&self, c: usize) -> (usize, usize) {
        let cx = self.cell_dims().0;
        (c % cx, c / cx)
    }
    #[inline]
    pub fn hedge(&self, i: usize, j: usize) -> usize {
        j * self.cell_dims().0 + i
    }
    #[inline]
    pub fn vedge(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Corners of a cell in counter-clockwise order starting at the lower left.
    #[inline]
    pub fn cell_corners(&self, ci: usize, cj: usize) -> [usize; 4] {
        let i1 = self.next_i(ci);
        let j1 = self.next_j(cj);
        [self.node(ci, cj), self.node(i1, cj), self.node(i1, j1), self.node(ci, j1)]
    }

    /// Bottom, top, left and right edge indices of a cell.
    #[inline]
    pub fn cell_edges(&self, ci: usize, cj: usize) -> ([usize; 2], [usize; 2]) {
        let i1 = self.next_i(ci);
        let j1 = self.next_j(cj);
        ([self.hedge(ci, cj), self.hedge(ci, j1)], [self.vedge(ci, cj), self.vedge(i1, cj)])
    }

    pub fn hedge_nodes(&self, e: usize) -> (usize, usize) {
        let cx = self.cell_dims().0;
        let (i, j) = (e % cx, e / cx);
        (self.node(i, j), self.node(self.next_i(i), j))
    }

    pub fn vedge_nodes(&self, e: usize) -> (usize, usize) {
        let (i, j) = (e % self.nx, e / self.nx);
        (self.node(i, j), self.node(i, self.next_j(j)))
    }

    pub fn role(&self, n: usize) -> NodeRole {
        self.roles[n]
    }
    pub fn roles(&self) -> &[NodeRole] {
        &self.roles
    }
    #[inline]
    pub fn node_active(&self, n: usize) -> bool {
        self.roles[n] != NodeRole::Exterior
    }
    #[inline]
    pub fn cell_active(&self, c: usize) -> bool {
        self.cell_active[c]
    }

    pub fn node_pos(&self, i: usize, j: usize) -> [f64; 2] {
        [self.origin[0] + i as f64 * self.h, self.origin[1] + j as f64 * self.h]
    }

    pub fn node_pos_of(&self, n: usize) -> [f64; 2] {
        let (i, j) = self.node_ij(n);
        self.node_pos(i, j)
    }

    pub fn cell_center(&self, ci: usize, cj: usize) -> [f64; 2] {
        [
            self.origin[0] + (ci as f64 + 0.5) * self.h,
            self.origin[1] + (cj as f64 + 0.5) * self.h,
        ]
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.num_nodes()).filter(|&n| self.roles[n] == NodeRole::Boundary).collect()
    }

    /// Period lengths of the torus.
    pub fn periods(&self) -> [f64; 2] {
        [self.nx as f64 * self.h, self.ny as f64 * self.h]
    }

    /// Displacement `b - a`, taken to the nearest periodic image on the torus.
    pub fn displacement(&self, a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
        let mut d = [b[0] - a[0], b[1] - a[1]];
        if self.is_torus() {
            let per = self.periods();
            for k in 0..2 {
                d[k] -= per[k] * (d[k] / per[k]).round();
            }
        }
        d
    }

    pub fn distance(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        let d = self.displacement(a, b);
        d[0].hypot(d[1])
    }

    /// Whether the closed ball lies inside the domain, geometrically.
    pub fn contains_ball(&self, x: [f64; 2], r: f64) -> bool {
        match self.topology {
            Topology::Torus => {
                let per = self.periods();
                2.0 * r < per[0].min(per[1])
            }
            Topology::Rectangle => {
                let lo = self.origin;
                let hi = self.node_pos(self.nx - 1, self.ny - 1);
                x[0] - r >= lo[0] && x[0] + r <= hi[0] && x[1] - r >= lo[1] && x[1] + r <= hi[1]
            }
            Topology::Disk { center, radius } => {
                (x[0] - center[0]).hypot(x[1] - center[1]) + r <= radius * (1.0 + 1e-12)
            }
        }
    }

    /// Cell indices whose centers lie in the closed ball `B_r(x)`.
    ///
    /// Errors when the ball leaves the domain or covers an inactive cell.
    pub fn cells_in_ball(&self, x: [f64; 2], r: f64) -> Result<Vec<usize>> {
        if !(r >= 0.0) || !self.contains_ball(x, r) {
            return Err(Error::BallOutsideDomain { x: x[0], y: x[1], radius: r });
        }
        let (cx, cy) = self.cell_dims();
        let h = self.h;
        let mut out = Vec::new();
        let r2 = r * r;
        if self.is_torus() {
            let span_i = (r / h).ceil() as isize + 1;
            let ci0 = ((x[0] - self.origin[0]) / h - 0.5).round() as isize;
            let cj0 = ((x[1] - self.origin[1]) / h - 0.5).round() as isize;
            for dj in -span_i..=span_i {
                for di in -span_i..=span_i {
                    let ci = (ci0 + di).rem_euclid(cx as isize) as usize;
                    let cj = (cj0 + dj).rem_euclid(cy as isize) as usize;
                    let d = self.displacement(x, self.cell_center(ci, cj));
                    if d[0] * d[0] + d[1] * d[1] <= r2 {
                        out.push(self.cell(ci, cj));
                    }
                }
            }
            out.sort_unstable();
            out.dedup();
            return Ok(out);
        }
        let lo_i = (((x[0] - r - self.origin[0]) / h - 0.5).floor().max(0.0)) as usize;
        let hi_i = ((((x[0] + r - self.origin[0]) / h - 0.5).ceil()).max(0.0) as usize).min(cx - 1);
        let lo_j = (((x[1] - r - self.origin[1]) / h - 0.5).floor().max(0.0)) as usize;
        let hi_j = ((((x[1] + r - self.origin[1]) / h - 0.5).ceil()).max(0.0) as usize).min(cy - 1);
        for cj in lo_j..=hi_j {
            for ci in lo_i..=hi_i {
                let c = self.cell_center(ci, cj);
                let (dx, dy) = (c[0] - x[0], c[1] - x[1]);
                if dx * dx + dy * dy <= r2 {
                    let idx = self.cell(ci, cj);
                    if !self.cell_active[idx] {
                        return Err(Error::BallOutsideDomain { x: x[0], y: x[1], radius: r });
                    }
                    out.push(idx);
                }
            }
        }
        Ok(out)
    }

    /// Cell containing a point, if any.
    pub fn locate_cell(&self, x: [f64; 2]) -> Option<(usize, usize)> {
        let (cx, cy) = self.cell_dims();
        let fi = ((x[0] - self.origin[0]) / self.h).floor() as isize;
        let fj = ((x[1] - self.origin[1]) / self.h).floor() as isize;
        if self.is_torus() {
            return Some((fi.rem_euclid(cx as isize) as usize, fj.rem_euclid(cy as isize) as usize));
        }
        if fi < 0 || fj < 0 || fi as usize >= cx || fj as usize >= cy {
            None
        } else {
            Some((fi as usize, fj as usize))
        }
    }
}

#[inline]
fn j_i(n: usize, i: usize, j: usize) -> usize {
    j * n + i
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_or_degenerate_grids() {
        assert!(Grid2D::torus(4, 16, 0.1).is_err());
        assert!(Grid2D::torus(16, 16, 0.0).is_err());
        assert!(Grid2D::rectangle(16, 16, -1.0, [0.0, 0.0]).is_err());
    }

    #[test]
    fn disk_interior_nodes_have_active_neighbors() {
        let g = Grid2D::disk(1.0, 1.0 / 32.0).unwrap();
        let n = g.nx();
        for j in 0..n {
            for i in 0..n {
                if g.role(g.node(i, j)) != NodeRole::Interior {
                    continue;
                }
                assert!(i > 0 && j > 0 && i + 1 < n && j + 1 < n);
                for (a, b) in [(i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)] {
                    assert!(g.node_active(g.node(a, b)));
                }
            }
        }
        // the disk center is a cell center
        let (ci, cj) = g.locate_cell([0.0, 0.0]).unwrap();
        let c = g.cell_center(ci, cj);
        assert!(c[0].abs() < 1e-12 && c[1].abs() < 1e-12);
    }

    #[test]
    fn torus_has_no_boundary() {
        let g = Grid2D::unit_torus(16).unwrap();
        assert!(g.boundary_nodes().is_empty());
        assert_eq!(g.edge_counts(), (256, 256));
    }

    #[test]
    fn ball_outside_domain_is_an_error() {
        let g = Grid2D::disk(1.0, 1.0 / 32.0).unwrap();
        assert!(g.cells_in_ball([0.5, 0.0], 0.6).is_err());
        assert!(g.cells_in_ball([0.5, 0.0], 0.4).is_ok());
        let r = Grid2D::rectangle(16, 16, 0.1, [0.0, 0.0]).unwrap();
        assert!(r.cells_in_ball([0.2, 0.2], 0.3).is_err());
    }
}
