//! Quantitative checks on computed fields: the density `theta_p`, its
//! monotonicity in the radius, the Pohozaev identity, the inner-variation
//! residual, quantization of the energy measure, the constant `c(n, p)`,
//! and closed-form vortex oracles.
//!
//! Densities integrate `|du|^p` over cells. In a cell that carries a
//! nonzero plaquette winding the lattice value is replaced by the exact
//! cell average of the tangent cone `|kappa|^p |z - c|^{-p}` (see
//! [`CoreQuadrature`]); away from cores the two agree.

use std::f64::consts::PI;

use serde::Serialize;

use crate::energy::cell_grad_sq;
use crate::error::{Error, Result};
use crate::lattice::{current, plaquette_windings, FieldKind, Grid2D, Location, S1Field, ScalarField, VortexSet};

/// How the cell containing a vortex is integrated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoreQuadrature {
    /// Plain lattice value `|du|^p` from the four edge differences.
    Lattice,
    /// Cell average of the cone `|kappa|^p |z - c|^{-p}` about the cell center.
    Cone,
}

/// Smallest radius at which finite-radius densities are trusted, in cells.
pub const MIN_RADIUS_CELLS: f64 = 5.0;

/// Adaptive Simpson quadrature on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `int_{[-1/2, 1/2]^2} |w|^{-p} dw`, finite for `p < 2`.
pub fn unit_cell_cone_integral(p: f64) -> f64 {
    // polar coordinates over the eight triangles of the square
    let g = |t: f64| (2.0 * t.cos()).powf(p - 2.0);
    8.0 / (2.0 - p) * adaptive_simpson(&g, 0.0, PI / 4.0, 1e-13)
}

/// `int_{[0, a] x [0, b]} |w|^{-p} dw` for `a, b >= 0`.
fn corner_cone_integral(a: f64, b: f64, p: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let e = 2.0 - p;
    let phi = b.atan2(a);
    let f1 = |t: f64| (a / t.cos()).powf(e);
    let f2 = |t: f64| (b / t.sin()).powf(e);
    let tol = 1e-12 * (a * b).powf(0.5 * e);
    (adaptive_simpson(&f1, 0.0, phi, tol) + adaptive_simpson(&f2, phi, PI / 2.0, tol)) / e
}

/// `int_{[x0, x1] x [y0, y1]} |w|^{-p} dw`, exact by inclusion-exclusion of
/// rectangles with a corner at the singular point.
pub fn rect_cone_integral(x: [f64; 2], y: [f64; 2], p: f64) -> f64 {
    let f = |a: f64, b: f64| a.signum() * b.signum() * corner_cone_integral(a.abs(), b.abs(), p);
    f(x[1], y[1]) - f(x[0], y[1]) - f(x[1], y[0]) + f(x[0], y[0])
}

fn require_constrained(u: &S1Field) -> Result<()> {
    if u.kind() != FieldKind::Constrained {
        return Err(Error::InvalidField("diagnostics need a constrained field (project first)".into()));
    }
    Ok(())
}

/// Cell density `|du|^p`.
pub fn p_density(u: &S1Field, grid: &Grid2D, p: f64, quad: CoreQuadrature) -> Result<ScalarField> {
    require_constrained(u)?;
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::InvalidParams(format!("p = {p} outside (1, 2]")));
    }
    let sq = centered_grad_sq(u, grid)?;
    let mut vals: Vec<f64> =
        sq.iter().enumerate().map(|(c, s)| if grid.cell_active(c) { s.powf(0.5 * p) } else { 0.0 }).collect();
    if quad == CoreQuadrature::Cone && p < 2.0 {
        apply_cone_cores(u, grid, p, &mut vals);
    }
    Ok(ScalarField::cells(vals))
}

/// Replaces the density in every winding cluster (8-connected plaquettes
/// with nonzero winding) by the cell averages of the cone of the net winding
/// about the cluster centroid. A single plaquette of winding `kappa` gets
/// `|kappa|^p h^{-p} int_{[-1/2,1/2]^2} |w|^{-p}`. Clusters with zero net
/// winding keep their lattice values.
fn apply_cone_cores(u: &S1Field, grid: &Grid2D, p: f64, vals: &mut [f64]) {
    let w = plaquette_windings(u, grid);
    let (cx, cy) = grid.cell_dims();
    let h = grid.h();
    let mut seen = vec![false; w.len()];
    for start in 0..w.len() {
        if w[start] == 0 || seen[start] {
            continue;
        }
        let mut cluster = vec![start];
        seen[start] = true;
        let mut k = 0;
        while k < cluster.len() {
            let (ci, cj) = grid.cell_ij(cluster[k]);
            k += 1;
            for dj in -1isize..=1 {
                for di in -1isize..=1 {
                    let (ni, nj) = (ci as isize + di, cj as isize + dj);
                    let (ni, nj) = if grid.is_torus() {
                        (ni.rem_euclid(cx as isize), nj.rem_euclid(cy as isize))
                    } else if ni < 0 || nj < 0 || ni >= cx as isize || nj >= cy as isize {
                        continue;
                    } else {
                        (ni, nj)
                    };
                    let c = grid.cell(ni as usize, nj as usize);
                    if w[c] != 0 && !seen[c] {
                        seen[c] = true;
                        cluster.push(c);
                    }
                }
            }
        }
        let net: i32 = cluster.iter().map(|&c| w[c]).sum();
        if net == 0 {
            continue;
        }
        let center_of = |c: usize| {
            let (ci, cj) = grid.cell_ij(c);
            grid.cell_center(ci, cj)
        };
        let anchor = center_of(cluster[0]);
        let mut acc = [0.0; 2];
        let mut wsum = 0.0;
        for &c in &cluster {
            let d = grid.displacement(anchor, center_of(c));
            let m = w[c].unsigned_abs() as f64;
            acc = [acc[0] + m * d[0], acc[1] + m * d[1]];
            wsum += m;
        }
        let a = [anchor[0] + acc[0] / wsum, anchor[1] + acc[1] / wsum];
        let scale = (net.unsigned_abs() as f64).powf(p) * h.powf(-p);
        for &c in &cluster {
            // the cone integral in units of h, about the centroid
            let d = grid.displacement(a, center_of(c));
            let (x, y) = (d[0] / h, d[1] / h);
            vals[c] = scale * rect_cone_integral([x - 0.5, x + 0.5], [y - 0.5, y + 0.5], p);
        }
    }
}

/// Cell-centered current (gradient of the bilinear interpolant at the center).
pub fn centered_current(u: &S1Field, grid: &Grid2D) -> Result<Vec<[f64; 2]>> {
    let j = current(u, grid)?;
    let (cx, cy) = grid.cell_dims();
    let mut jc = vec![[0.0; 2]; grid.num_cells()];
    for cj in 0..cy {
        for ci in 0..cx {
            let c = grid.cell(ci, cj);
            if grid.cell_active(c) {
                let ([eb, et], [el, er]) = grid.cell_edges(ci, cj);
                jc[c] = [0.5 * (j.ax[eb] + j.ax[et]), 0.5 * (j.ay[el] + j.ay[er])];
            }
        }
    }
    Ok(jc)
}

fn centered_grad_sq(u: &S1Field, grid: &Grid2D) -> Result<Vec<f64>> {
    Ok(centered_current(u, grid)?.iter().map(|j| j[0] * j[0] + j[1] * j[1]).collect())
}

/// Energy-measure density `(2 - p)|du|^p` with cone cores.
pub fn measure_density(u: &S1Field, grid: &Grid2D, p: f64) -> Result<ScalarField> {
    let mut d = p_density(u, grid, p, CoreQuadrature::Cone)?;
    d.values.iter_mut().for_each(|v| *v *= 2.0 - p);
    Ok(d)
}

/// `int_0^x int_0^y 1{X^2 + Y^2 <= r^2}`, signed by the quadrant of `(x, y)`.
fn disk_corner_area(x: f64, y: f64, r: f64) -> f64 {
    let (ax, ay) = (x.abs(), y.abs());
    let sign = x.signum() * y.signum();
    if ax * ax + ay * ay <= r * r {
        return sign * ax * ay;
    }
    // primitive of sqrt(r^2 - X^2)
    let prim = |t: f64| {
        let t = t.min(r);
        0.5 * (t * (r * r - t * t).max(0.0).sqrt() + r * r * (t / r).asin())
    };
    let xs = if ay < r { (r * r - ay * ay).sqrt() } else { 0.0 };
    let flat = ay * ax.min(xs);
    let curved = if ax > xs { prim(ax) - prim(xs) } else { 0.0 };
    sign * (flat + curved)
}

/// Area of `[x0, x1] x [y0, y1]` inside the disk of radius `r` about the origin.
pub fn rect_disk_area(x: [f64; 2], y: [f64; 2], r: f64) -> f64 {
    let near = |a: [f64; 2]| if a[0] > 0.0 { a[0] } else if a[1] < 0.0 { -a[1] } else { 0.0 };
    let far = |a: [f64; 2]| a[0].abs().max(a[1].abs());
    if near(x).hypot(near(y)) >= r {
        return 0.0;
    }
    if far(x).hypot(far(y)) <= r {
        return (x[1] - x[0]) * (y[1] - y[0]);
    }
    let g = |a: f64, b: f64| disk_corner_area(a, b, r);
    (g(x[1], y[1]) - g(x[0], y[1]) - g(x[1], y[0]) + g(x[0], y[0])).max(0.0)
}

/// Cells meeting `B_r(x)` with the covered fraction of each cell.
///
/// Errors when the ball leaves the domain or meets an inactive cell.
pub fn ball_weights(grid: &Grid2D, x: [f64; 2], r: f64) -> Result<Vec<(usize, f64)>> {
    let h = grid.h();
    // every cell meeting the disk has its center within r + h/sqrt(2)
    let reach = r + h * std::f64::consts::FRAC_1_SQRT_2;
    let outside = || Error::BallOutsideDomain { x: x[0], y: x[1], radius: r };
    if !grid.contains_ball(x, r) {
        return Err(outside());
    }
    let candidates = if grid.is_torus() {
        grid.cells_in_ball(x, reach.min(0.5 * grid.periods()[0].min(grid.periods()[1]) * 0.999))?
    } else {
        cells_near(grid, x, reach)
    };
    let (cx, _) = grid.cell_dims();
    let mut out = Vec::with_capacity(candidates.len());
    for c in candidates {
        let d = grid.displacement(x, grid.cell_center(c % cx, c / cx));
        let f = rect_disk_area([d[0] - 0.5 * h, d[0] + 0.5 * h], [d[1] - 0.5 * h, d[1] + 0.5 * h], r) / (h * h);
        if f > 0.0 {
            if !grid.cell_active(c) {
                return Err(outside());
            }
            out.push((c, f.min(1.0)));
        }
    }
    Ok(out)
}

fn cells_near(grid: &Grid2D, x: [f64; 2], reach: f64) -> Vec<usize> {
    let (cx, cy) = grid.cell_dims();
    let h = grid.h();
    let o = grid.node_pos(0, 0);
    let lo = |v: f64, o: f64| (((v - reach - o) / h - 0.5).floor().max(0.0)) as usize;
    let hi = |v: f64, o: f64, n: usize| ((((v + reach - o) / h - 0.5).ceil()).max(0.0) as usize).min(n - 1);
    let mut out = Vec::new();
    for cj in lo(x[1], o[1])..=hi(x[1], o[1], cy) {
        for ci in lo(x[0], o[0])..=hi(x[0], o[0], cx) {
            out.push(grid.cell(ci, cj));
        }
    }
    out
}

/// `int_{B_r(x)} f` with exact cell coverage fractions.
fn ball_sum(dens: &ScalarField, grid: &Grid2D, x: [f64; 2], r: f64) -> Result<f64> {
    dens.check(grid, Location::Cell)?;
    let w = ball_weights(grid, x, r)?;
    Ok(grid.h() * grid.h() * w.iter().map(|&(c, f)| f * dens.values[c]).sum::<f64>())
}

/// `int_{r1 < |z - x| <= r2} f` with exact cell coverage fractions.
pub fn annulus_integral(f: &ScalarField, grid: &Grid2D, x: [f64; 2], r1: f64, r2: f64) -> Result<f64> {
    if !(0.0 <= r1 && r1 < r2) {
        return Err(Error::InvalidParams(format!("annulus radii {r1}, {r2}")));
    }
    let outer = ball_sum(f, grid, x, r2)?;
    let inner = if r1 > 0.0 { ball_sum(f, grid, x, r1)? } else { 0.0 };
    Ok(outer - inner)
}

fn check_radius(grid: &Grid2D, r: f64) -> Result<()> {
    if r < MIN_RADIUS_CELLS * grid.h() * (1.0 - 1e-9) {
        return Err(Error::InvalidParams(format!("radius {r} below {MIN_RADIUS_CELLS} cells")));
    }
    Ok(())
}

fn theta_from(dens: &ScalarField, grid: &Grid2D, x: [f64; 2], r: f64, p: f64) -> Result<f64> {
    check_radius(grid, r)?;
    Ok(r.powf(p - 2.0) * ball_sum(dens, grid, x, r)?)
}

/// `theta_p(u, x, r) = r^{p-2} int_{B_r(x)} |du|^p`.
pub fn theta_p(u: &S1Field, grid: &Grid2D, x: [f64; 2], r: f64, p: f64) -> Result<f64> {
    let dens = p_density(u, grid, p, CoreQuadrature::Cone)?;
    theta_from(&dens, grid, x, r, p)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityProfile {
    pub center: [f64; 2],
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// Largest `(theta(r_j) - theta(r_{j+1}))^+ / theta(r_{j+1})`.
    pub max_violation: f64,
}

pub fn monotonicity_profile(u: &S1Field, grid: &Grid2D, x: [f64; 2], radii: &[f64], p: f64) -> Result<DensityProfile> {
    if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams("radii must be nonempty and strictly increasing".into()));
    }
    let dens = p_density(u, grid, p, CoreQuadrature::Cone)?;
    let values = radii.iter().map(|&r| theta_from(&dens, grid, x, r, p)).collect::<Result<Vec<_>>>()?;
    let max_violation = values
        .windows(2)
        .map(|w| if w[1] > 0.0 { ((w[0] - w[1]) / w[1]).max(0.0) } else { 0.0 })
        .fold(0.0, f64::max);
    Ok(DensityProfile { center: x, radii: radii.to_vec(), values, max_violation })
}

/// `n` radii from `r0` to `r1`, evenly spaced.
pub fn linear_radii(r0: f64, r1: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| r0 + (r1 - r0) * k as f64 / (n - 1).max(1) as f64).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PohozaevReport {
    /// `int_{r1}^{r2} mu(D_r(a)) dr`.
    pub lhs: f64,
    /// Annulus integral of `|z-a| (|du|^p - p |du|^{p-2} |du(nu)|^2)`.
    pub rhs: f64,
    pub residual: f64,
}

impl PohozaevReport {
    pub fn relative(&self) -> f64 {
        if self.rhs == 0.0 {
            self.residual
        } else {
            self.residual / self.rhs.abs()
        }
    }
}

/// Number of radii in the trapezoid rule for the left side.
pub const POHOZAEV_RADII: usize = 32;

pub fn pohozaev_residual(u: &S1Field, grid: &Grid2D, a: [f64; 2], r1: f64, r2: f64, p: f64) -> Result<PohozaevReport> {
    if !(0.0 < r1 && r1 < r2) {
        return Err(Error::InvalidParams(format!("annulus radii {r1}, {r2}")));
    }
    let dens = p_density(u, grid, p, CoreQuadrature::Cone)?;
    // fail early if the annulus leaves the domain
    grid.cells_in_ball(a, r2)?;

    let radii = linear_radii(r1, r2, POHOZAEV_RADII);
    let dr = (r2 - r1) / (POHOZAEV_RADII - 1) as f64;
    let mut lhs = 0.0;
    for (k, &r) in radii.iter().enumerate() {
        let w = if k == 0 || k + 1 == radii.len() { 0.5 } else { 1.0 };
        lhs += w * (2.0 - p) * ball_sum(&dens, grid, a, r)?;
    }
    lhs *= dr;

    let j = current(u, grid)?;
    let sq = cell_grad_sq(u, grid)?;
    let (cx, cy) = grid.cell_dims();
    let mut rhs_cells = vec![0.0; grid.num_cells()];
    for cj in 0..cy {
        for ci in 0..cx {
            let c = grid.cell(ci, cj);
            if !grid.cell_active(c) {
                continue;
            }
            let z = grid.displacement(a, grid.cell_center(ci, cj));
            let rho = z[0].hypot(z[1]);
            if rho == 0.0 {
                continue;
            }
            let ([eb, et], [el, er]) = grid.cell_edges(ci, cj);
            let jv = [0.5 * (j.ax[eb] + j.ax[et]), 0.5 * (j.ay[el] + j.ay[er])];
            let radial = (jv[0] * z[0] + jv[1] * z[1]) / rho;
            let s = sq[c];
            let term = if s > 0.0 { s.powf(0.5 * p) - p * s.powf(0.5 * p - 1.0) * radial * radial } else { 0.0 };
            rhs_cells[c] = rho * term;
        }
    }
    let rhs = annulus_integral(&ScalarField::cells(rhs_cells), grid, a, r1, r2)?;
    Ok(PohozaevReport { lhs, rhs, residual: (lhs - rhs).abs() })
}

/// Test vector fields for the inner-variation residual.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TestFamily {
    /// Tensor-product bumps `phi(x - c_x) phi(y - c_y) e_k`, `phi(s) = (1 - (s/rho)^2)^3`,
    /// at every center in both coordinate directions.
    Bumps { centers: Vec<[f64; 2]>, radius: f64 },
    /// The two constant fields `e_1`, `e_2` (torus only).
    Constant,
}

impl TestFamily {
    /// Nine bumps on a 3 x 3 pattern well inside the domain.
    pub fn standard(grid: &Grid2D) -> Self {
        use crate::lattice::Topology;
        let (c0, half) = match grid.topology() {
            Topology::Disk { center, radius } => (center, 0.4 * radius),
            _ => {
                let (cx, cy) = grid.cell_dims();
                let h = grid.h();
                let lo = grid.node_pos(0, 0);
                let w = [cx as f64 * h, cy as f64 * h];
                ([lo[0] + 0.5 * w[0], lo[1] + 0.5 * w[1]], w[0].min(w[1]) / 3.0)
            }
        };
        let mut centers = Vec::with_capacity(9);
        for dj in [-1.0, 0.0, 1.0] {
            for di in [-1.0, 0.0, 1.0] {
                centers.push([c0[0] + di * half, c0[1] + dj * half]);
            }
        }
        TestFamily::Bumps { centers, radius: 0.5 * half }
    }
}

fn bump(s: f64, rho: f64) -> (f64, f64) {
    let t = s / rho;
    if t.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let q = 1.0 - t * t;
    (q * q * q, -6.0 * t / rho * q * q)
}

/// Discrete inner variation `int |du|^p div X - p |du|^{p-2} <du^* du, grad X>`
/// for one test field given by its value and Jacobian at each cell center.
fn inner_variation(
    grid: &Grid2D,
    jc: &[[f64; 2]],
    p: f64,
    field: &dyn Fn([f64; 2]) -> ([f64; 2], [[f64; 2]; 2]),
) -> f64 {
    let (cx, cy) = grid.cell_dims();
    let mut total = 0.0;
    for cj in 0..cy {
        for ci in 0..cx {
            let c = grid.cell(ci, cj);
            if !grid.cell_active(c) {
                continue;
            }
            let (_, dx) = field(grid.cell_center(ci, cj));
            // dx[a][b] = d_a X^b
            let div = dx[0][0] + dx[1][1];
            if div == 0.0 && dx[0][1] == 0.0 && dx[1][0] == 0.0 {
                continue;
            }
            let j = jc[c];
            let s = j[0] * j[0] + j[1] * j[1];
            if s == 0.0 {
                continue;
            }
            let sp = s.powf(0.5 * p);
            let mut contr = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    contr += j[a] * j[b] * dx[a][b];
                }
            }
            total += sp * div - p * sp / s * contr;
        }
    }
    total * grid.h() * grid.h()
}

/// Largest inner-variation integral over the family, normalized by
/// `||X||_inf E_p(u)`.
pub fn stationarity_residual(u: &S1Field, grid: &Grid2D, p: f64, family: &TestFamily) -> Result<f64> {
    require_constrained(u)?;
    let j = current(u, grid)?;
    let (cx, cy) = grid.cell_dims();
    let mut jc = vec![[0.0; 2]; grid.num_cells()];
    let mut energy = 0.0;
    for cj in 0..cy {
        for ci in 0..cx {
            let c = grid.cell(ci, cj);
            if !grid.cell_active(c) {
                continue;
            }
            let ([eb, et], [el, er]) = grid.cell_edges(ci, cj);
            jc[c] = [0.5 * (j.ax[eb] + j.ax[et]), 0.5 * (j.ay[el] + j.ay[er])];
            energy += (jc[c][0] * jc[c][0] + jc[c][1] * jc[c][1]).powf(0.5 * p);
        }
    }
    energy *= grid.h() * grid.h();
    if energy == 0.0 {
        return Ok(0.0);
    }
    let mut worst = 0.0f64;
    match family {
        TestFamily::Constant => {
            if !grid.is_torus() {
                return Err(Error::InvalidParams("constant test fields need a torus".into()));
            }
            for k in 0..2 {
                let f = move |_: [f64; 2]| {
                    let mut v = [0.0; 2];
                    v[k] = 1.0;
                    (v, [[0.0; 2]; 2])
                };
                worst = worst.max(inner_variation(grid, &jc, p, &f).abs());
            }
        }
        TestFamily::Bumps { centers, radius } => {
            for &c in centers {
                if !grid.contains_ball(c, radius * std::f64::consts::SQRT_2) {
                    return Err(Error::BallOutsideDomain { x: c[0], y: c[1], radius: *radius });
                }
                for k in 0..2 {
                    let f = move |z: [f64; 2]| {
                        let d = grid.displacement(c, z);
                        let (bx, dbx) = bump(d[0], *radius);
                        let (by, dby) = bump(d[1], *radius);
                        let mut v = [0.0; 2];
                        v[k] = bx * by;
                        let mut jac = [[0.0; 2]; 2];
                        jac[0][k] = dbx * by;
                        jac[1][k] = bx * dby;
                        (v, jac)
                    };
                    worst = worst.max(inner_variation(grid, &jc, p, &f).abs());
                }
            }
        }
    }
    Ok(worst / energy)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuantizationEntry {
    pub position: [f64; 2],
    pub winding: i32,
    /// `mu(D_{r_ref}(a))`.
    pub mass: f64,
    /// `2 pi kappa^2`.
    pub predicted: f64,
    pub distance_to_lattice: f64,
    pub distance_to_predicted: f64,
    /// `(2 - p) theta_p(u, a, r_ref) / (2 pi c(2, p))`; the density lower bound asks for at least 1.
    pub density_bound_ratio: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct QuantizationReport {
    pub p: f64,
    pub r_ref: f64,
    pub entries: Vec<QuantizationEntry>,
}

/// A quarter of the smallest vortex separation, or `fallback` for fewer than two vortices.
pub fn reference_radius(vortices: &VortexSet, grid: &Grid2D, fallback: f64) -> f64 {
    vortices.min_separation(grid).map_or(fallback, |d| 0.25 * d)
}

pub fn quantization_report(u: &S1Field, grid: &Grid2D, p: f64, vortices: &VortexSet, r_ref: f64) -> Result<QuantizationReport> {
    let vs = &vortices.vortices;
    for a in 0..vs.len() {
        for b in a + 1..vs.len() {
            if 2.0 * r_ref >= grid.distance(vs[a].position, vs[b].position) {
                return Err(Error::OverlappingBalls { a, b });
            }
        }
    }
    let mut report = QuantizationReport { p, r_ref, entries: Vec::new() };
    if vs.is_empty() {
        return Ok(report);
    }
    let dens = measure_density(u, grid, p)?;
    let two_pi = 2.0 * PI;
    for v in vs {
        let mass = ball_sum(&dens, grid, v.position, r_ref)?;
        let predicted = two_pi * (v.winding * v.winding) as f64;
        let theta = r_ref.powf(p - 2.0) * mass / (2.0 - p);
        report.entries.push(QuantizationEntry {
            position: v.position,
            winding: v.winding,
            mass,
            predicted,
            distance_to_lattice: (mass - two_pi * (mass / two_pi).round()).abs(),
            distance_to_predicted: (mass - predicted).abs(),
            density_bound_ratio: (2.0 - p) * theta / two_pi,
        });
    }
    Ok(report)
}

/// `c(n, p) = int_{B_1^{n-2}} (1 - |y|^2)^{(2-p)/2} dy`, with `c(2, p) = 1`.
pub fn c_np(n: usize, p: f64) -> Result<f64> {
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::InvalidParams(format!("p = {p} outside (1, 2]")));
    }
    let m = match n {
        2 => return Ok(1.0),
        3..=6 => n - 2,
        _ => return Err(Error::Unsupported(format!("c(n, p) for n = {n}"))),
    };
    // surface area of the unit (m-1)-sphere
    let sphere = match m {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => 2.0 * PI * PI,
    };
    // rho = sin t removes the endpoint singularity of (1 - rho^2)^{(2-p)/2}
    let e = 2.0 - p;
    let f = |t: f64| t.cos().powf(e + 1.0) * t.sin().powi(m as i32 - 1);
    Ok(sphere * adaptive_simpson(&f, 0.0, PI / 2.0, 1e-12))
}

/// `(z/|z|)^kappa` about `center`, sampled at every node.
pub fn exact_vortex_field(kappa: i32, center: [f64; 2], grid: &Grid2D) -> S1Field {
    S1Field::from_phase(grid, |x| {
        let d = grid.displacement(center, x);
        if d == [0.0, 0.0] {
            0.0
        } else {
            kappa as f64 * d[1].atan2(d[0])
        }
    })
}

/// `int_{r < |z| < R} |d (z/|z|)^kappa|^p = 2 pi |kappa|^p (R^{2-p} - r^{2-p}) / (2-p)`.
pub fn oracle_vortex_energy(kappa: i32, p: f64, r: f64, big_r: f64) -> f64 {
    let k = (kappa.unsigned_abs() as f64).powf(p);
    if p == 2.0 {
        return 2.0 * PI * k * (big_r / r).ln();
    }
    2.0 * PI * k * (big_r.powf(2.0 - p) - r.powf(2.0 - p)) / (2.0 - p)
}

/// `sup_{B_r(x)} |du|^p r^2 / int_{B_{2r}(x)} |du|^p`.
pub fn gradient_bound_ratio(u: &S1Field, grid: &Grid2D, x: [f64; 2], r: f64, p: f64) -> Result<f64> {
    let dens = p_density(u, grid, p, CoreQuadrature::Lattice)?;
    let outer = grid.cells_in_ball(x, 2.0 * r)?;
    let w = plaquette_windings(u, grid);
    if outer.iter().any(|&c| w[c] != 0) {
        return Err(Error::VortexInBall);
    }
    let inner = grid.cells_in_ball(x, r)?;
    let sup = inner.iter().map(|&c| dens.values[c]).fold(0.0, f64::max);
    let total = grid.h() * grid.h() * outer.iter().map(|&c| dens.values[c]).sum::<f64>();
    if total == 0.0 {
        return Err(Error::InsufficientData("zero energy in B_2r".into()));
    }
    Ok(sup * r * r / total)
}
