//! Discrete Hodge decomposition of one-forms on the periodic torus,
//! `j = d phi + rot psi + h`, and the experiments built on it.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{curl, detect_vortices, div, grad_scalar, FieldKind, Grid2D, Location, OneForm2D, S1Field, ScalarField};
use crate::spectral::{laplacian_symbol, Fft2};

#[derive(Clone, Debug, PartialEq)]
pub struct HodgeParts {
    /// Exact potential on nodes, zero mean.
    pub phi: ScalarField,
    /// Coexact stream function on cells, zero mean.
    pub psi: ScalarField,
    /// Harmonic part: the edge means of `j`.
    pub hconst: [f64; 2],
    /// `||j - d phi - rot psi - h||_2 / ||j||_2` (absolute when `j = 0`).
    pub residual: f64,
}

impl HodgeParts {
    pub fn exact(&self, grid: &Grid2D) -> OneForm2D {
        grad_scalar(&self.phi, grid).expect("phi lives on nodes")
    }

    pub fn coexact(&self, grid: &Grid2D) -> OneForm2D {
        rot(&self.psi, grid)
    }

    pub fn harmonic(&self, grid: &Grid2D) -> OneForm2D {
        OneForm2D::constant(grid, self.hconst)
    }
}

/// Rotated gradient of a cell function: `curl(rot psi) = Laplacian psi`.
pub fn rot(psi: &ScalarField, grid: &Grid2D) -> OneForm2D {
    let (cx, cy) = grid.cell_dims();
    let inv_h = 1.0 / grid.h();
    let mut out = OneForm2D::zeros(grid);
    let v = &psi.values;
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            // horizontal edge (i, j) is the bottom of cell (i, j) and the top of (i, j-1)
            let below = (j + cy - 1) % cy;
            let left = (i + cx - 1) % cx;
            out.ax[grid.hedge(i, j)] = -(v[grid.cell(i, j)] - v[grid.cell(i, below)]) * inv_h;
            out.ay[grid.vedge(i, j)] = (v[grid.cell(i, j)] - v[grid.cell(left, j)]) * inv_h;
        }
    }
    out
}

/// Solves `Laplacian x = f` on the periodic lattice, zero-mean gauge.
fn poisson(f: &[f64], nx: usize, ny: usize, h: f64) -> Vec<f64> {
    let mut fft = Fft2::new(nx, ny);
    let sym = laplacian_symbol(nx, ny, h);
    let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.forward(&mut buf);
    let n = (nx * ny) as f64;
    for (b, &l) in buf.iter_mut().zip(&sym) {
        *b = if l == 0.0 { Complex64::new(0.0, 0.0) } else { *b / (l * n) };
    }
    fft.inverse(&mut buf);
    buf.iter().map(|c| c.re).collect()
}

pub fn hodge_decompose(j: &OneForm2D, grid: &Grid2D) -> Result<HodgeParts> {
    if !grid.is_torus() {
        return Err(Error::Unsupported("Hodge decomposition is implemented on the torus only".into()));
    }
    j.check(grid)?;
    let (nx, ny, h) = (grid.nx(), grid.ny(), grid.h());
    let d = div(j, grid)?;
    let phi = ScalarField::nodes(poisson(&d.values, nx, ny, h));
    let c = curl(j, grid)?;
    let psi = ScalarField::cells(poisson(&c.values, nx, ny, h));
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let hconst = [mean(&j.ax), mean(&j.ay)];

    let recon = grad_scalar(&phi, grid)?.add(&rot(&psi, grid)).add(&OneForm2D::constant(grid, hconst));
    let rem = j.sub(&recon).l2_norm(grid);
    let norm = j.l2_norm(grid);
    let residual = if norm > 0.0 { rem / norm } else { rem };
    Ok(HodgeParts { phi, psi, hconst, residual })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingRow {
    pub p: f64,
    /// `||d phi||_{L^q}`.
    pub exact_norm: f64,
    /// `||rot psi||_{L^q}`.
    pub coexact_norm: f64,
    pub current_norm: f64,
    /// `(2-p)^{1-1/p} |log(2-p)|`.
    pub rate: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingTable {
    pub q: f64,
    pub rows: Vec<ScalingRow>,
    /// Largest over smallest exact-part ratio.
    pub band: f64,
    /// Largest over smallest coexact norm.
    pub coexact_band: f64,
}

pub fn scaling_rate(p: f64) -> f64 {
    (2.0 - p).powf(1.0 - 1.0 / p) * (2.0 - p).ln().abs()
}

/// Tabulates `||d phi||_{L^q}` against `(2-p)^{1-1/p}|log(2-p)|` for a set
/// of torus fields, one per `p`. Only boundedness of the ratio is reported;
/// no constants are fitted.
pub fn exact_part_scaling(solutions: &[(f64, S1Field)], grid: &Grid2D, q: f64) -> Result<ScalingTable> {
    if solutions.len() < 3 {
        return Err(Error::InsufficientData(format!("{} p-values, need at least 3", solutions.len())));
    }
    if !(q >= 1.0) {
        return Err(Error::InvalidParams(format!("q = {q}")));
    }
    let mut rows = Vec::new();
    for (p, u) in solutions {
        if q >= *p {
            return Err(Error::InvalidParams(format!("q = {q} must be below p = {p}")));
        }
        let j = crate::lattice::current(u, grid)?;
        let parts = hodge_decompose(&j, grid)?;
        let exact_norm = parts.exact(grid).lq_norm(grid, q);
        let rate = scaling_rate(*p);
        rows.push(ScalingRow {
            p: *p,
            exact_norm,
            coexact_norm: parts.coexact(grid).lq_norm(grid, q),
            current_norm: j.lq_norm(grid, q),
            rate,
            ratio: exact_norm / rate,
        });
    }
    let spread = |f: &dyn Fn(&ScalingRow) -> f64| {
        let (lo, hi) = rows.iter().map(f).fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if lo > 0.0 {
            hi / lo
        } else {
            f64::INFINITY
        }
    };
    let band = spread(&|r| r.ratio);
    let coexact_band = spread(&|r| r.coexact_norm);
    Ok(ScalingTable { q, rows, band, coexact_band })
}

/// Jacobi theta function `theta_1(w | tau = i)`.
fn theta1(w: Complex64) -> Complex64 {
    let q = (-PI).exp();
    let mut s = Complex64::new(0.0, 0.0);
    for n in 0..12 {
        let k = n as f64 + 0.5;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        s += sign * q.powf(k * k) * ((2.0 * n as f64 + 1.0) * w).sin();
    }
    2.0 * s
}

/// Harmonic-phase map on the unit torus with a `+1` vortex at `a` and a
/// `-1` vortex at `b`: the argument of `theta_1(pi(z-a)) / theta_1(pi(z-b))`
/// plus the linear term that restores periodicity in `y`.
///
/// Requires `a` and `b` at the same height.
pub fn torus_vortex_pair(grid: &Grid2D, a: [f64; 2], b: [f64; 2]) -> Result<S1Field> {
    if !grid.is_torus() || grid.periods() != [1.0, 1.0] {
        return Err(Error::Unsupported("vortex pair field needs the unit torus".into()));
    }
    if a[1] != b[1] {
        return Err(Error::InvalidParams("vortex pair must share the same y".into()));
    }
    let d = b[0] - a[0];
    Ok(S1Field::from_phase(grid, |x| {
        let z = Complex64::new(x[0], x[1]);
        let num = theta1(PI * (z - Complex64::new(a[0], a[1])));
        let den = theta1(PI * (z - Complex64::new(b[0], b[1])));
        (num / den).arg() + 2.0 * PI * d * x[1]
    }))
}

/// Standard symmetric pair on the `n x n` unit torus: cell centers half a
/// period apart in `x`, so that translation by half a period combined with
/// conjugation maps the configuration to itself and the forces balance.
pub fn symmetric_pair_positions(grid: &Grid2D) -> ([f64; 2], [f64; 2]) {
    let n = grid.nx();
    let a = grid.cell_center(n / 4, grid.ny() / 2);
    let b = grid.cell_center(n / 4 + n / 2, grid.ny() / 2);
    (a, b)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiffuseRow {
    pub p: f64,
    pub m: i64,
    /// Lattice total of `(2-p)|du|^p`.
    pub mass: f64,
    /// `(2-p)(2 pi m)^p`.
    pub closed_form: f64,
    pub relative_error: f64,
    /// `|h_bar|^2` with `h_bar = (2-p)^{1/p} h`, the `p -> 2` form of the mass.
    pub h_bar_sq: f64,
    pub vortices: usize,
}

/// `m_p = max(1, round((2 pi)^{-1} (2-p)^{-1/p}))`.
pub fn diffuse_winding(p: f64) -> i64 {
    (((2.0 - p).powf(-1.0 / p) / (2.0 * PI)).round() as i64).max(1)
}

/// Plane waves `e^{2 pi i m x}` on the unit torus: no vortices, and all of
/// the energy measure sits in the harmonic part.
pub fn diffuse_measure_experiment(grid: &Grid2D, ps: &[f64], m: Option<&[i64]>) -> Result<Vec<DiffuseRow>> {
    if !grid.is_torus() || grid.periods() != [1.0, 1.0] {
        return Err(Error::Unsupported("diffuse experiment needs the unit torus".into()));
    }
    if let Some(ms) = m {
        if ms.len() != ps.len() {
            return Err(Error::InvalidParams("one winding per p".into()));
        }
    }
    let mut rows = Vec::new();
    for (k, &p) in ps.iter().enumerate() {
        let m = m.map_or_else(|| diffuse_winding(p), |ms| ms[k]);
        let u = S1Field::from_phase(grid, |x| 2.0 * PI * m as f64 * x[0]);
        debug_assert_eq!(u.kind(), FieldKind::Constrained);
        let dens = crate::energy::mu_density(&u, grid, p)?;
        dens.check(grid, Location::Cell)?;
        let mass = grid.h() * grid.h() * dens.values.iter().sum::<f64>();
        let hm = 2.0 * PI * m as f64;
        let closed_form = (2.0 - p) * hm.abs().powf(p);
        let relative_error = if closed_form > 0.0 { (mass - closed_form).abs() / closed_form } else { mass.abs() };
        let vortices = detect_vortices(&u, grid, 2.0 * grid.h()).len();
        rows.push(DiffuseRow {
            p,
            m,
            mass,
            closed_form,
            relative_error,
            h_bar_sq: ((2.0 - p).powf(1.0 / p) * hm).powi(2),
            vortices,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{boundary_degree, plaquette_windings, Contour};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_form(grid: &Grid2D, seed: u64) -> OneForm2D {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = OneForm2D::zeros(grid);
        f.ax.iter_mut().chain(f.ay.iter_mut()).for_each(|v| *v = rng.gen_range(-1.0..1.0));
        f
    }

    #[test]
    fn exact_form_decomposes_to_its_potential() {
        let g = Grid2D::unit_torus(32).unwrap();
        let f = ScalarField::node_fn(&g, |x| (2.0 * PI * x[0]).sin() * (4.0 * PI * x[1]).cos() + 3.0);
        let parts = hodge_decompose(&grad_scalar(&f, &g).unwrap(), &g).unwrap();
        let mean = f.mean();
        for (a, b) in parts.phi.values.iter().zip(&f.values) {
            assert!((a - (b - mean)).abs() < 1e-10);
        }
        assert!(parts.psi.values.iter().all(|v| v.abs() < 1e-10));
        assert!(parts.hconst[0].abs() < 1e-14 && parts.hconst[1].abs() < 1e-14);
        assert!(parts.residual < 1e-10);
    }

    #[test]
    fn constant_form_is_harmonic() {
        let g = Grid2D::unit_torus(16).unwrap();
        let parts = hodge_decompose(&OneForm2D::constant(&g, [0.3, -1.2]), &g).unwrap();
        assert!((parts.hconst[0] - 0.3).abs() < 1e-14 && (parts.hconst[1] + 1.2).abs() < 1e-14);
        assert!(parts.phi.values.iter().chain(&parts.psi.values).all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn random_forms_reconstruct_orthogonally() {
        let g = Grid2D::torus(24, 20, 0.05).unwrap();
        for seed in 0..5 {
            let j = random_form(&g, seed);
            let p = hodge_decompose(&j, &g).unwrap();
            assert!(p.residual < 1e-10);
            let (e, c, hm) = (p.exact(&g), p.coexact(&g), p.harmonic(&g));
            let n = j.l2_norm(&g).powi(2);
            assert!(e.dot(&c, &g).abs() < 1e-10 * n);
            assert!(e.dot(&hm, &g).abs() < 1e-10 * n);
            assert!(c.dot(&hm, &g).abs() < 1e-10 * n);
            // idempotence on the exact part
            let again = hodge_decompose(&e, &g).unwrap();
            for (a, b) in again.phi.values.iter().zip(&p.phi.values) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn non_torus_is_unsupported() {
        let g = Grid2D::disk(1.0, 0.1).unwrap();
        assert!(matches!(hodge_decompose(&OneForm2D::zeros(&g), &g), Err(Error::Unsupported(_))));
    }

    #[test]
    fn vortex_pair_field_is_periodic_with_opposite_windings() {
        let g = Grid2D::unit_torus(64).unwrap();
        let (a, b) = symmetric_pair_positions(&g);
        let u = torus_vortex_pair(&g, a, b).unwrap();
        let w = plaquette_windings(&u, &g);
        let ca = g.locate_cell(a).unwrap();
        let cb = g.locate_cell(b).unwrap();
        assert_eq!(w[g.cell(ca.0, ca.1)], 1);
        assert_eq!(w[g.cell(cb.0, cb.1)], -1);
        assert_eq!(w.iter().map(|v| v.abs()).sum::<i32>(), 2);
        // smooth across the periodic seams: no large jumps anywhere else
        let j = crate::lattice::current(&u, &g).unwrap();
        let big = j.ax.iter().chain(&j.ay).filter(|v| v.abs() * g.h() > 1.0).count();
        assert!(big <= 8, "{big}");
        assert_eq!(boundary_degree(&u, &Contour::circle(&g, a, 0.2)), 1);
        // harmonic phase: the exact part vanishes up to discretization
        let parts = hodge_decompose(&j, &g).unwrap();
        assert!(parts.exact(&g).l2_norm(&g) < 0.05 * parts.coexact(&g).l2_norm(&g));
    }

    #[test]
    fn diffuse_mass_matches_closed_form() {
        let g = Grid2D::unit_torus(64).unwrap();
        let rows = diffuse_measure_experiment(&g, &[1.5, 1.9], None).unwrap();
        for r in &rows {
            assert!(r.relative_error < 1e-12, "{r:?}");
            assert_eq!(r.vortices, 0);
        }
        let zero = diffuse_measure_experiment(&g, &[1.7], Some(&[0])).unwrap();
        assert_eq!(zero[0].mass, 0.0);
        assert_eq!(diffuse_winding(1.9), 1);
    }

    #[test]
    fn scaling_needs_three_values() {
        let g = Grid2D::unit_torus(16).unwrap();
        let u = S1Field::constant(&g, [1.0, 0.0], FieldKind::Constrained).unwrap();
        assert!(matches!(
            exact_part_scaling(&[(1.5, u.clone()), (1.7, u)], &g, 1.4),
            Err(Error::InsufficientData(_))
        ));
    }
}
