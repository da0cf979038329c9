use std::f64::consts::PI;

use serde::Serialize;

use super::calculus::{phase_diff, plaquette_windings};
use super::field::S1Field;
use super::grid::Grid2D;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Vortex {
    pub position: [f64; 2],
    pub winding: i32,
    /// Largest distance from `position` to a member plaquette.
    pub extent: f64,
    /// Number of nonzero plaquettes merged into this vortex.
    pub plaquettes: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct VortexSet {
    pub vortices: Vec<Vortex>,
    pub cluster_radius: f64,
    /// Clusters that absorbed more than one nonzero plaquette.
    pub merged_clusters: usize,
    /// Total winding of clusters whose windings cancelled (dropped from the set).
    pub cancelled_plaquettes: usize,
}

impl VortexSet {
    pub fn len(&self) -> usize {
        self.vortices.len()
    }
    pub fn is_empty(&self) -> bool {
        self.vortices.is_empty()
    }
    pub fn total_winding(&self) -> i32 {
        self.vortices.iter().map(|v| v.winding).sum()
    }
    pub fn min_separation(&self, grid: &Grid2D) -> Option<f64> {
        let mut best: Option<f64> = None;
        for (a, va) in self.vortices.iter().enumerate() {
            for vb in &self.vortices[a + 1..] {
                let d = grid.distance(va.position, vb.position);
                best = Some(best.map_or(d, |b: f64| b.min(d)));
            }
        }
        best
    }
}

/// Groups nonzero-winding plaquettes into vortices.
///
/// Plaquettes closer than `cluster_radius` end up in the same cluster
/// (single linkage); the cluster winding is the sum of its members and its
/// position the |winding|-weighted centroid. Clusters with zero net winding
/// are dropped, so the total winding of the set equals the plaquette sum.
pub fn detect_vortices(u: &S1Field, grid: &Grid2D, cluster_radius: f64) -> VortexSet {
    let windings = plaquette_windings(u, grid);
    let sites: Vec<(usize, i32)> = windings.iter().enumerate().filter(|(_, w)| **w != 0).map(|(c, w)| (c, *w)).collect();
    let centers: Vec<[f64; 2]> = sites
        .iter()
        .map(|&(c, _)| {
            let (ci, cj) = grid.cell_ij(c);
            grid.cell_center(ci, cj)
        })
        .collect();

    // union-find over nonzero sites
    let mut parent: Vec<usize> = (0..sites.len()).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for a in 0..sites.len() {
        for b in a + 1..sites.len() {
            if grid.distance(centers[a], centers[b]) <= cluster_radius {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_slot = vec![usize::MAX; sites.len()];
    for s in 0..sites.len() {
        let r = find(&mut parent, s);
        if root_slot[r] == usize::MAX {
            root_slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_slot[r]].push(s);
    }

    let mut set = VortexSet { cluster_radius, ..Default::default() };
    for members in groups {
        let net: i32 = members.iter().map(|&s| sites[s].1).sum();
        if members.len() > 1 {
            set.merged_clusters += 1;
            log::warn!("merged {} nonzero plaquettes within radius {cluster_radius} (net winding {net})", members.len());
        }
        if net == 0 {
            set.cancelled_plaquettes += members.len();
            continue;
        }
        // centroid relative to the first member so that torus wrap-around is handled
        let anchor = centers[members[0]];
        let mut wsum = 0.0;
        let mut acc = [0.0, 0.0];
        for &s in &members {
            let d = grid.displacement(anchor, centers[s]);
            let w = sites[s].1.unsigned_abs() as f64;
            acc[0] += w * d[0];
            acc[1] += w * d[1];
            wsum += w;
        }
        let position = [anchor[0] + acc[0] / wsum, anchor[1] + acc[1] / wsum];
        let extent = members.iter().map(|&s| grid.distance(position, centers[s])).fold(0.0, f64::max);
        set.vortices.push(Vortex { position, winding: net, extent, plaquettes: members.len() });
    }
    set
}

/// A closed lattice 1-chain given as oriented node pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Contour {
    pub edges: Vec<(usize, usize)>,
}

impl Contour {
    /// Oriented boundary of a set of cells, counter-clockwise around the set.
    ///
    /// Interior edges cancel, so the degree of `u` along the chain equals the
    /// total plaquette winding inside.
    pub fn cell_set_boundary(grid: &Grid2D, include: impl Fn(usize) -> bool) -> Self {
        let (cx, cy) = grid.cell_dims();
        let inside = |ci: isize, cj: isize| -> bool {
            let (ci, cj) = if grid.is_torus() {
                (ci.rem_euclid(cx as isize), cj.rem_euclid(cy as isize))
            } else {
                if ci < 0 || cj < 0 || ci >= cx as isize || cj >= cy as isize {
                    return false;
                }
                (ci, cj)
            };
            include(grid.cell(ci as usize, cj as usize))
        };
        let mut edges = Vec::new();
        for cj in 0..cy {
            for ci in 0..cx {
                if !include(grid.cell(ci, cj)) {
                    continue;
                }
                let [a, b, c, d] = grid.cell_corners(ci, cj);
                let (i, j) = (ci as isize, cj as isize);
                if !inside(i, j - 1) {
                    edges.push((a, b));
                }
                if !inside(i + 1, j) {
                    edges.push((b, c));
                }
                if !inside(i, j + 1) {
                    edges.push((c, d));
                }
                if !inside(i - 1, j) {
                    edges.push((d, a));
                }
            }
        }
        Contour { edges }
    }

    /// Outer boundary of all active cells. Empty on the torus.
    pub fn domain_boundary(grid: &Grid2D) -> Self {
        Self::cell_set_boundary(grid, |c| grid.cell_active(c))
    }

    /// Boundary of the cells whose centers lie in `B_r(x)`.
    pub fn circle(grid: &Grid2D, x: [f64; 2], r: f64) -> Self {
        let (cx, _) = grid.cell_dims();
        Self::cell_set_boundary(grid, |c| {
            let center = grid.cell_center(c % cx, c / cx);
            grid.distance(x, center) <= r && grid.cell_active(c)
        })
    }

    /// Boundary of the index rectangle of cells `[i0, i1) x [j0, j1)`.
    pub fn cell_rectangle(grid: &Grid2D, i0: usize, j0: usize, i1: usize, j1: usize) -> Self {
        let (cx, _) = grid.cell_dims();
        Self::cell_set_boundary(grid, |c| {
            let (ci, cj) = (c % cx, c / cx);
            ci >= i0 && ci < i1 && cj >= j0 && cj < j1
        })
    }
}

/// Degree of `u` along a closed chain: total wrapped phase change over `2 pi`.
pub fn boundary_degree(u: &S1Field, contour: &Contour) -> i32 {
    let v = u.values();
    let total: f64 = contour.edges.iter().map(|&(a, b)| phase_diff(v[a], v[b])).sum();
    (total / (2.0 * PI)).round() as i32
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::field::FieldKind;
    use crate::lattice::field::S1Field;

    fn vortex(g: &Grid2D, a: [f64; 2], k: i32) -> S1Field {
        S1Field::from_phase(g, move |p| k as f64 * (p[1] - a[1]).atan2(p[0] - a[0]))
    }

    #[test]
    fn constant_field_has_no_vortices() {
        let g = Grid2D::disk(1.0, 1.0 / 32.0).unwrap();
        let u = S1Field::constant(&g, [0.0, 1.0], FieldKind::Constrained).unwrap();
        assert!(plaquette_windings(&u, &g).iter().all(|&w| w == 0));
        assert!(detect_vortices(&u, &g, 4.0 * g.h()).is_empty());
        assert_eq!(boundary_degree(&u, &Contour::domain_boundary(&g)), 0);
    }

    #[test]
    fn single_vortex_located_within_one_cell() {
        let g = Grid2D::disk(1.0, 1.0 / 32.0).unwrap();
        let h = g.h();
        let c = [0.2 + 0.5 * h, -0.1 + 0.5 * h];
        let u = vortex(&g, c, 1);
        let set = detect_vortices(&u, &g, 3.0 * h);
        assert_eq!(set.len(), 1);
        assert_eq!(set.vortices[0].winding, 1);
        assert!(g.distance(set.vortices[0].position, c) <= h);
    }

    #[test]
    fn plaquette_winding_of_model_maps() {
        let g = Grid2D::disk(1.0, 1.0 / 32.0).unwrap();
        for k in [-1, 1] {
            let u = vortex(&g, [0.0, 0.0], k);
            let (ci, cj) = g.locate_cell([0.0, 0.0]).unwrap();
            assert_eq!(crate::lattice::winding(&u, &g, ci, cj), k);
            // away from the origin the lifting is smooth: exact phase differences sum to zero
            let (ci, cj) = g.locate_cell([0.4, 0.3]).unwrap();
            assert_eq!(crate::lattice::winding(&u, &g, ci, cj), 0);
        }
        // a single plaquette cannot resolve |k| = 2; a loop around the core can
        for k in [-2, 2] {
            let u = vortex(&g, [0.0, 0.0], k);
            assert_eq!(boundary_degree(&u, &Contour::circle(&g, [0.0, 0.0], 0.1)), k);
        }
    }

    #[test]
    fn vortex_pair_and_degree_additivity() {
        let g = Grid2D::disk(1.0, 1.0 / 32.0).unwrap();
        let h = g.h();
        let a = [-0.4 + 0.5 * h, 0.5 * h];
        let b = [0.4 + 0.5 * h, 0.5 * h];
        let u = vortex(&g, a, 1).multiply(&vortex(&g, b, -1)).unwrap();
        let set = detect_vortices(&u, &g, 3.0 * h);
        let mut w: Vec<i32> = set.vortices.iter().map(|v| v.winding).collect();
        w.sort();
        assert_eq!(w, vec![-1, 1]);

        let v = vortex(&g, a, 2).multiply(&vortex(&g, b, -1)).unwrap();
        assert_eq!(boundary_degree(&v, &Contour::domain_boundary(&g)), 1);
        let total: i32 = plaquette_windings(&v, &g).iter().sum();
        assert_eq!(total, 1);
        // a loop around only the first vortex sees degree 2
        assert_eq!(boundary_degree(&v, &Contour::circle(&g, a, 0.2)), 2);
    }

    #[test]
    fn disk_boundary_degree_of_g() {
        let g = Grid2D::disk(1.0, 1.0 / 32.0).unwrap();
        for k in -3..=3 {
            let u = S1Field::from_phase(&g, |p| k as f64 * p[1].atan2(p[0]));
            assert_eq!(boundary_degree(&u, &Contour::domain_boundary(&g)), k);
        }
    }

    #[test]
    fn clusters_closer_than_radius_merge() {
        let g = Grid2D::disk(1.0, 1.0 / 32.0).unwrap();
        let h = g.h();
        let a = [0.5 * h, 0.5 * h];
        let b = [2.5 * h, 0.5 * h];
        let u = vortex(&g, a, 1).multiply(&vortex(&g, b, 1)).unwrap();
        let set = detect_vortices(&u, &g, 4.0 * h);
        assert_eq!(set.len(), 1);
        assert_eq!(set.vortices[0].winding, 2);
        assert_eq!(set.merged_clusters, 1);
    }
}
