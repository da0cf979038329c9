//! Exterior derivative, current, divergence, curl and ball quadrature.

use std::f64::consts::PI;

use super::field::{FieldKind, Location, OneForm2D, S1Field, ScalarField};
use super::grid::Grid2D;
use crate::error::{Error, Result};

/// Moduli below this make the relaxed current undefined.
pub const MIN_MODULUS: f64 = 1e-8;

/// `arg(conj(a) b)` in `[-pi, pi]`.
#[inline]
pub fn phase_diff(a: [f64; 2], b: [f64; 2]) -> f64 {
    let cross = a[0] * b[1] - a[1] * b[0];
    let dot = a[0] * b[0] + a[1] * b[1];
    cross.atan2(dot)
}

/// Wrap an angle into `(-pi, pi]`.
#[inline]
pub fn wrap_angle(t: f64) -> f64 {
    let w = t - 2.0 * PI * (t / (2.0 * PI)).round();
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// Forward-difference exterior derivative of a node scalar.
///
/// Edges with an exterior endpoint carry zero.
pub fn grad_scalar(f: &ScalarField, grid: &Grid2D) -> Result<OneForm2D> {
    f.check(grid, Location::Node)?;
    let inv_h = 1.0 / grid.h();
    let mut out = OneForm2D::zeros(grid);
    for e in 0..out.ax.len() {
        let (a, b) = grid.hedge_nodes(e);
        if grid.node_active(a) && grid.node_active(b) {
            out.ax[e] = (f.values[b] - f.values[a]) * inv_h;
        }
    }
    for e in 0..out.ay.len() {
        let (a, b) = grid.vedge_nodes(e);
        if grid.node_active(a) && grid.node_active(b) {
            out.ay[e] = (f.values[b] - f.values[a]) * inv_h;
        }
    }
    Ok(out)
}

#[inline]
fn edge_current(kind: FieldKind, a: [f64; 2], b: [f64; 2]) -> f64 {
    match kind {
        FieldKind::Constrained => phase_diff(a, b),
        FieldKind::Relaxed => a[0] * b[1] - a[1] * b[0],
    }
}

/// The current `j u = u^1 du^2 - u^2 du^1` as an edge form.
///
/// Constrained fields use the wrapped phase difference, relaxed fields the
/// midpoint rule `Im(conj(u_a) u_b) / h`.
pub fn current(u: &S1Field, grid: &Grid2D) -> Result<OneForm2D> {
    u.check_grid(grid)?;
    let vals = u.values();
    if u.kind() == FieldKind::Relaxed {
        for (n, v) in vals.iter().enumerate() {
            if grid.node_active(n) && v[0].hypot(v[1]) < MIN_MODULUS {
                return Err(Error::DegenerateModulus { node: n });
            }
        }
    }
    let inv_h = 1.0 / grid.h();
    let mut out = OneForm2D::zeros(grid);
    for e in 0..out.ax.len() {
        let (a, b) = grid.hedge_nodes(e);
        if grid.node_active(a) && grid.node_active(b) {
            out.ax[e] = edge_current(u.kind(), vals[a], vals[b]) * inv_h;
        }
    }
    for e in 0..out.ay.len() {
        let (a, b) = grid.vedge_nodes(e);
        if grid.node_active(a) && grid.node_active(b) {
            out.ay[e] = edge_current(u.kind(), vals[a], vals[b]) * inv_h;
        }
    }
    Ok(out)
}

/// Winding number of `u` around one plaquette.
///
/// The sum of the four wrapped phase differences is a multiple of `2 pi`;
/// only the phases of the corner values matter.
pub fn winding(u: &S1Field, grid: &Grid2D, ci: usize, cj: usize) -> i32 {
    let v = u.values();
    let [a, b, c, d] = grid.cell_corners(ci, cj);
    let total = phase_diff(v[a], v[b]) + phase_diff(v[b], v[c]) + phase_diff(v[c], v[d]) + phase_diff(v[d], v[a]);
    (total / (2.0 * PI)).round() as i32
}

/// Winding number of every active cell (zero on inactive cells).
pub fn plaquette_windings(u: &S1Field, grid: &Grid2D) -> Vec<i32> {
    let (cx, cy) = grid.cell_dims();
    let mut w = vec![0; cx * cy];
    for cj in 0..cy {
        for ci in 0..cx {
            let c = grid.cell(ci, cj);
            if grid.cell_active(c) {
                w[c] = winding(u, grid, ci, cj);
            }
        }
    }
    w
}

/// Discrete curl (circulation per unit area) on cells.
pub fn curl(form: &OneForm2D, grid: &Grid2D) -> Result<ScalarField> {
    form.check(grid)?;
    let (cx, cy) = grid.cell_dims();
    let inv_h = 1.0 / grid.h();
    let mut out = vec![0.0; cx * cy];
    for cj in 0..cy {
        for ci in 0..cx {
            let c = grid.cell(ci, cj);
            if !grid.cell_active(c) {
                continue;
            }
            let ([b, t], [l, r]) = grid.cell_edges(ci, cj);
            out[c] = (form.ax[b] + form.ay[r] - form.ax[t] - form.ay[l]) * inv_h;
        }
    }
    Ok(ScalarField::cells(out))
}

/// Discrete divergence on nodes, the negative adjoint of [`grad_scalar`].
pub fn div(form: &OneForm2D, grid: &Grid2D) -> Result<ScalarField> {
    form.check(grid)?;
    let inv_h = 1.0 / grid.h();
    let mut out = vec![0.0; grid.num_nodes()];
    for (e, &v) in form.ax.iter().enumerate() {
        let (a, b) = grid.hedge_nodes(e);
        out[a] += v * inv_h;
        out[b] -= v * inv_h;
    }
    for (e, &v) in form.ay.iter().enumerate() {
        let (a, b) = grid.vedge_nodes(e);
        out[a] += v * inv_h;
        out[b] -= v * inv_h;
    }
    Ok(ScalarField::nodes(out))
}

/// Quadrature of a cell density over a ball: `h^2 * sum f` over cells whose
/// centers lie in `B_r(x)`.
pub fn ball_integral(f: &ScalarField, grid: &Grid2D, x: [f64; 2], r: f64) -> Result<f64> {
    f.check(grid, Location::Cell)?;
    let cells = grid.cells_in_ball(x, r)?;
    let h2 = grid.h() * grid.h();
    Ok(h2 * cells.iter().map(|&c| f.values[c]).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::field::FieldKind;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gradient_of_constant_vanishes() {
        let g = Grid2D::rectangle(12, 10, 0.1, [0.0, 0.0]).unwrap();
        let f = ScalarField::nodes(vec![3.5; g.num_nodes()]);
        let d = grad_scalar(&f, &g).unwrap();
        assert!(d.ax.iter().chain(&d.ay).all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_of_linear_function() {
        let g = Grid2D::rectangle(12, 10, 0.125, [-0.3, 0.2]).unwrap();
        let f = ScalarField::node_fn(&g, |p| p[0]);
        let d = grad_scalar(&f, &g).unwrap();
        assert!(d.ax.iter().all(|&v| (v - 1.0).abs() < 1e-12));
        assert!(d.ay.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn curl_of_gradient_vanishes_on_torus() {
        let g = Grid2D::unit_torus(16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = ScalarField::nodes((0..g.num_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let d = grad_scalar(&f, &g).unwrap();
        // independent oracle: walk each plaquette's boundary directly from node values
        let (cx, cy) = g.cell_dims();
        for cj in 0..cy {
            for ci in 0..cx {
                let [a, b, c, e] = g.cell_corners(ci, cj);
                let v = &f.values;
                let circ = (v[b] - v[a]) + (v[c] - v[b]) + (v[e] - v[c]) + (v[a] - v[e]);
                assert!(circ.abs() < 1e-14);
            }
        }
        let k = curl(&d, &g).unwrap();
        assert!(k.values.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn div_is_negative_adjoint_of_grad() {
        let g = Grid2D::unit_torus(12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = ScalarField::nodes((0..g.num_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let mut a = OneForm2D::zeros(&g);
        a.ax.iter_mut().chain(a.ay.iter_mut()).for_each(|v| *v = rng.gen_range(-1.0..1.0));
        let lhs = grad_scalar(&f, &g).unwrap().dot(&a, &g);
        let d = div(&a, &g).unwrap();
        let rhs = -g.h() * g.h() * f.values.iter().zip(&d.values).map(|(x, y)| x * y).sum::<f64>();
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn current_of_constant_map_is_zero() {
        let g = Grid2D::unit_torus(16).unwrap();
        let u = S1Field::constant(&g, [1.0, 0.0], FieldKind::Constrained).unwrap();
        let j = current(&u, &g).unwrap();
        assert!(j.ax.iter().chain(&j.ay).all(|&v| v == 0.0));
    }

    #[test]
    fn current_of_plane_wave() {
        let g = Grid2D::rectangle(20, 20, 0.05, [0.0, 0.0]).unwrap();
        let alpha = 7.0;
        let u = S1Field::from_phase(&g, |p| alpha * p[0]);
        let j = current(&u, &g).unwrap();
        assert!(j.ax.iter().all(|&v| (v - alpha).abs() < 1e-9));
        assert!(j.ay.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn relaxed_current_rejects_zero_modulus() {
        let g = Grid2D::unit_torus(8).unwrap();
        let mut vals = vec![[1.0, 0.0]; g.num_nodes()];
        vals[5] = [0.0, 0.0];
        let u = S1Field::new(&g, vals, FieldKind::Relaxed).unwrap();
        assert!(matches!(current(&u, &g), Err(Error::DegenerateModulus { node: 5 })));
    }

    #[test]
    fn vortex_current_is_tangential() {
        let g = Grid2D::disk(1.0, 1.0 / 64.0).unwrap();
        let u = S1Field::from_phase(&g, |p| p[1].atan2(p[0]));
        let j = current(&u, &g).unwrap();
        let h = g.h();
        // compare the cell-averaged current vector with dtheta = (-y, x)/|z|^2 at cell centers
        let (cx, cy) = g.cell_dims();
        for cj in 0..cy {
            for ci in 0..cx {
                let c = g.cell(ci, cj);
                let z = g.cell_center(ci, cj);
                let r = z[0].hypot(z[1]);
                if !g.cell_active(c) || r < 0.25 {
                    continue;
                }
                let ([b, t], [l, rr]) = g.cell_edges(ci, cj);
                let jx = 0.5 * (j.ax[b] + j.ax[t]);
                let jy = 0.5 * (j.ay[l] + j.ay[rr]);
                let ex = -z[1] / (r * r);
                let ey = z[0] / (r * r);
                assert!((jx - ex).abs() + (jy - ey).abs() < 4.0 * h / (r * r), "cell {ci},{cj}");
            }
        }
    }

    #[test]
    fn ball_integral_of_unit_density_is_area() {
        let g = Grid2D::disk(1.0, 1.0 / 128.0).unwrap();
        let one = ScalarField::cells(vec![1.0; g.num_cells()]);
        let a = ball_integral(&one, &g, [0.0, 0.0], 0.5).unwrap();
        assert!((a - PI / 4.0).abs() < 4.0 * g.h(), "{a}");
        let zero = ScalarField::cells(vec![0.0; g.num_cells()]);
        assert_eq!(ball_integral(&zero, &g, [0.1, 0.0], 0.5).unwrap(), 0.0);
    }

    #[test]
    fn ball_integral_of_vortex_density_over_annulus() {
        let g = Grid2D::disk(1.0, 1.0 / 128.0).unwrap();
        // zeroed near the origin, which both balls contain and the difference cancels
        let dens = ScalarField::cell_fn(&g, |z| {
            let r2 = z[0] * z[0] + z[1] * z[1];
            if r2 < 0.01 { 0.0 } else { 1.0 / r2 }
        });
        let (r1, r2) = (0.2, 0.8);
        let val = ball_integral(&dens, &g, [0.0, 0.0], r2).unwrap() - ball_integral(&dens, &g, [0.0, 0.0], r1).unwrap();
        let exact = 2.0 * PI * (r2 / r1).ln();
        assert!((val - exact).abs() < 10.0 * g.h(), "{val} vs {exact}");
    }

    #[test]
    fn wrap_angle_range() {
        for t in [-10.0, -PI, -3.0, 0.0, 3.0, PI, 10.0] {
            let w = wrap_angle(t);
            assert!(w > -PI && w <= PI);
            assert!(((t - w) / (2.0 * PI)).fract().abs() < 1e-12);
        }
    }
}
