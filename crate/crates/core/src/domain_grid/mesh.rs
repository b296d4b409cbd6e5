use std::f64::consts::PI;
use std::sync::OnceLock;

use super::geometry::{dist, Domain, Point};
use crate::tolerances::NODE_BUDGET;
use crate::{Error, Result};

/// Precomputed per-cell geometry: area and gradients of the three P1 basis functions.
#[derive(Debug, Clone, Copy)]
pub struct CellGeom {
    pub area: f64,
    pub basis_grad: [[f64; 2]; 3],
    pub diameter: f64,
}

/// Conforming triangulation. Cells are stored counter-clockwise.
#[derive(Debug, Clone)]
pub struct Mesh {
    nodes: Vec<Point>,
    cells: Vec<[usize; 3]>,
    boundary: Vec<usize>,
    geom: Vec<CellGeom>,
    h: f64,
    locator: OnceLock<Locator>,
}

impl Mesh {
    /// Builds a mesh from raw parts, orienting cells counter-clockwise.
    pub fn new(
        nodes: Vec<Point>,
        mut cells: Vec<[usize; 3]>,
        mut boundary: Vec<usize>,
    ) -> Result<Self> {
        let mut geom = Vec::with_capacity(cells.len());
        let mut h: f64 = 0.0;
        for (ci, c) in cells.iter_mut().enumerate() {
            if c.iter().any(|&i| i >= nodes.len()) {
                return Err(Error::Parameter(format!(
                    "cell {ci} references a missing node"
                )));
            }
            let mut g = cell_geom(&nodes, c);
            if g.area < 0.0 {
                c.swap(1, 2);
                g = cell_geom(&nodes, c);
            }
            let scale = g.diameter * g.diameter;
            if !(g.area > 1e-14 * scale) {
                return Err(Error::Geometry {
                    cell: ci,
                    area: g.area,
                });
            }
            h = h.max(g.diameter);
            geom.push(g);
        }
        boundary.sort_unstable();
        boundary.dedup();
        Ok(Self {
            nodes,
            cells,
            boundary,
            geom,
            h,
            locator: OnceLock::new(),
        })
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary
    }

    pub fn geom(&self) -> &[CellGeom] {
        &self.geom
    }

    /// Maximum cell diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn volume(&self) -> f64 {
        super::sum::ordered_sum(self.geom.iter().map(|g| g.area))
    }

    pub fn is_boundary_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.nodes.len()];
        for &b in &self.boundary {
            mask[b] = true;
        }
        mask
    }

    pub fn cell_points(&self, c: usize) -> [Point; 3] {
        let [a, b, d] = self.cells[c];
        [self.nodes[a], self.nodes[b], self.nodes[d]]
    }

    pub fn centroid(&self, c: usize) -> Point {
        let p = self.cell_points(c);
        [
            (p[0][0] + p[1][0] + p[2][0]) / 3.0,
            (p[0][1] + p[1][1] + p[2][1]) / 3.0,
        ]
    }

    /// Finds the cell containing `x` and its barycentric coordinates; `None` outside the mesh.
    pub fn locate(&self, x: &Point) -> Option<(usize, [f64; 3])> {
        self.locator
            .get_or_init(|| Locator::new(self))
            .locate(self, x)
    }

    /// Same mesh with node `i` renamed to `perm[i]`.
    pub fn renumbered(&self, perm: &[usize]) -> Result<Mesh> {
        if perm.len() != self.nodes.len() {
            return Err(Error::Parameter(
                "permutation length does not match node count".into(),
            ));
        }
        let mut nodes = vec![[0.0; 2]; self.nodes.len()];
        let mut seen = vec![false; self.nodes.len()];
        for (i, &j) in perm.iter().enumerate() {
            if j >= nodes.len() || seen[j] {
                return Err(Error::Parameter("not a permutation".into()));
            }
            seen[j] = true;
            nodes[j] = self.nodes[i];
        }
        let cells = self
            .cells
            .iter()
            .map(|c| [perm[c[0]], perm[c[1]], perm[c[2]]])
            .collect();
        let boundary = self.boundary.iter().map(|&b| perm[b]).collect();
        Mesh::new(nodes, cells, boundary)
    }
}

fn cell_geom(nodes: &[Point], c: &[usize; 3]) -> CellGeom {
    let p = [nodes[c[0]], nodes[c[1]], nodes[c[2]]];
    let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let mut basis_grad = [[0.0; 2]; 3];
    for (i, g) in basis_grad.iter_mut().enumerate() {
        let j = (i + 1) % 3;
        let k = (i + 2) % 3;
        *g = [(p[j][1] - p[k][1]) / det, (p[k][0] - p[j][0]) / det];
    }
    let diameter = dist(&p[0], &p[1])
        .max(dist(&p[1], &p[2]))
        .max(dist(&p[2], &p[0]));
    CellGeom {
        area: 0.5 * det,
        basis_grad,
        diameter,
    }
}

/// Uniform bucket grid over cell bounding boxes.
#[derive(Debug, Clone)]
struct Locator {
    origin: Point,
    size: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl Locator {
    fn new(mesh: &Mesh) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &mesh.nodes {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-300);
        let size = mesh.h.max(extent / 4096.0);
        let nx = ((hi[0] - lo[0]) / size).floor() as usize + 1;
        let ny = ((hi[1] - lo[1]) / size).floor() as usize + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        for c in 0..mesh.cells.len() {
            let pts = mesh.cell_points(c);
            let bx0 = pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let bx1 = pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            let by0 = pts.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
            let by1 = pts.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
            let i0 = ((bx0 - lo[0]) / size).floor().max(0.0) as usize;
            let i1 = (((bx1 - lo[0]) / size).floor() as usize).min(nx - 1);
            let j0 = ((by0 - lo[1]) / size).floor().max(0.0) as usize;
            let j1 = (((by1 - lo[1]) / size).floor() as usize).min(ny - 1);
            for i in i0..=i1 {
                for j in j0..=j1 {
                    buckets[i * ny + j].push(c as u32);
                }
            }
        }
        Self {
            origin: lo,
            size,
            nx,
            ny,
            buckets,
        }
    }

    fn locate(&self, mesh: &Mesh, x: &Point) -> Option<(usize, [f64; 3])> {
        let fi = (x[0] - self.origin[0]) / self.size;
        let fj = (x[1] - self.origin[1]) / self.size;
        if !(fi >= 0.0 && fj >= 0.0) {
            return None;
        }
        let (i, j) = (fi as usize, fj as usize);
        if i >= self.nx || j >= self.ny {
            return None;
        }
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &c in &self.buckets[i * self.ny + j] {
            let c = c as usize;
            let lam = barycentric(mesh, c, x);
            let worst = lam.iter().cloned().fold(f64::INFINITY, f64::min);
            if worst >= 0.0 {
                return Some((c, lam));
            }
            if best.as_ref().is_none_or(|b| worst > b.2) {
                best = Some((c, lam, worst));
            }
        }
        // points on a shared edge may round to a tiny negative coordinate
        match best {
            Some((c, lam, worst)) if worst > -1e-12 => Some((c, lam)),
            _ => None,
        }
    }
}

fn barycentric(mesh: &Mesh, c: usize, x: &Point) -> [f64; 3] {
    let g = &mesh.geom[c];
    let p0 = mesh.nodes[mesh.cells[c][0]];
    let d = [x[0] - p0[0], x[1] - p0[1]];
    let l1 = g.basis_grad[1][0] * d[0] + g.basis_grad[1][1] * d[1];
    let l2 = g.basis_grad[2][0] * d[0] + g.basis_grad[2][1] * d[1];
    [1.0 - l1 - l2, l1, l2]
}

/// Concentric-ring triangulation of a disk of the given radius centred at the origin.
pub fn build_disk_mesh(radius: f64, h: f64) -> Result<Mesh> {
    if !(radius > 0.0) || !(h > 0.0 && h < radius) {
        return Err(Error::Parameter(format!(
            "need radius > 0 and 0 < h < radius, got ({radius}, {h})"
        )));
    }
    build_mesh(&Domain::ball([0.0, 0.0], radius)?, h)
}

/// Concentric-ring triangulation of a ball or a star-shaped polygon.
///
/// Rings are equispaced in the radial fraction; ring `i` carries a multiple of
/// eight nodes starting at angle zero, so every ray at angle `kπ/4` from the
/// star center is a union of mesh edges.
pub fn build_mesh(domain: &Domain, h: f64) -> Result<Mesh> {
    build_mesh_with_budget(domain, h, NODE_BUDGET)
}

pub fn build_mesh_with_budget(domain: &Domain, h: f64, budget: usize) -> Result<Mesh> {
    if !(h > 0.0) {
        return Err(Error::Parameter(format!(
            "mesh size must be positive, got {h}"
        )));
    }
    let c = domain.star_center;
    let samples = 720;
    let rmax = (0..samples)
        .map(|k| domain.boundary_radius(2.0 * PI * k as f64 / samples as f64))
        .fold(0.0, f64::max);
    if h >= rmax {
        return Err(Error::Parameter(format!(
            "h = {h} is not below the domain radius {rmax}"
        )));
    }
    // spacing s keeps the cross diagonal sqrt(dr² + s²) below h
    let s = h / 1.5;
    let rings = (rmax / s).ceil() as usize;
    let counts: Vec<usize> = (1..=rings)
        .map(|i| {
            let r = rmax * i as f64 / rings as f64;
            8 * ((2.0 * PI * r / (8.0 * s)).ceil() as usize).max(1)
        })
        .collect();
    let needed = 1 + counts.iter().sum::<usize>();
    if needed > budget {
        return Err(Error::Resource { needed, budget });
    }

    let mut nodes = Vec::with_capacity(needed);
    nodes.push(c);
    let mut offsets = Vec::with_capacity(rings);
    for (i, &m) in counts.iter().enumerate() {
        offsets.push(nodes.len());
        let frac = (i + 1) as f64 / rings as f64;
        for k in 0..m {
            let th = 2.0 * PI * k as f64 / m as f64;
            let rb = domain.boundary_radius(th);
            let (sn, cs) = th.sin_cos();
            let r = frac * rb;
            nodes.push([c[0] + r * cs, c[1] + r * sn]);
        }
    }

    let mut cells = Vec::new();
    let m1 = counts[0];
    for k in 0..m1 {
        cells.push([0, offsets[0] + k, offsets[0] + (k + 1) % m1]);
    }
    for i in 1..rings {
        let (na, nb) = (counts[i - 1], counts[i]);
        let (oa, ob) = (offsets[i - 1], offsets[i]);
        let (mut ia, mut ib) = (0usize, 0usize);
        while ia < na || ib < nb {
            let next_a = (ia + 1) as f64 / na as f64;
            let next_b = (ib + 1) as f64 / nb as f64;
            if ia < na && (ib == nb || next_a < next_b) {
                cells.push([oa + ia, oa + (ia + 1) % na, ob + ib % nb]);
                ia += 1;
            } else {
                cells.push([oa + ia % na, ob + ib, ob + (ib + 1) % nb]);
                ib += 1;
            }
        }
    }
    let last = *offsets.last().unwrap();
    let boundary = (last..last + counts[rings - 1]).collect();
    Mesh::new(nodes, cells, boundary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coarse_disk_volume() {
        let m = build_disk_mesh(1.0, 0.5).unwrap();
        let v = m.volume();
        assert!(v > PI - 1.0 && v <= PI, "{v}");
        assert!(m.h() <= 0.5);
    }

    #[test]
    fn fine_disk_volume() {
        let m = build_disk_mesh(1.0, 1.0 / 64.0).unwrap();
        assert!((m.volume() - PI).abs() < 0.05);
        assert!(m.h() <= 1.0 / 64.0);
    }

    #[test]
    fn scaled_disk_volume() {
        let m = build_disk_mesh(2.0, 1.0 / 16.0).unwrap();
        let v = m.volume();
        assert!((v - 4.0 * PI).abs() < 0.2, "{v}");
        assert!((v - 4.0 * PI).abs() < 2.0 * m.h() * 4.0 * PI);
    }

    #[test]
    fn boundary_on_circle() {
        let m = build_disk_mesh(1.0, 0.05).unwrap();
        for &b in m.boundary_nodes() {
            let r = m.nodes()[b][0].hypot(m.nodes()[b][1]);
            assert!((r - 1.0).abs() <= m.h() * m.h());
        }
    }

    #[test]
    fn cone_rays_are_mesh_edges() {
        let m = build_disk_mesh(1.0, 0.1).unwrap();
        // no cell centroid may sit on the ray while its vertices straddle it
        for c in 0..m.num_cells() {
            let signs: Vec<f64> = m
                .cell_points(c)
                .iter()
                .map(|p| p[1] * p[1] - p[0] * p[0])
                .filter(|v| v.abs() > 1e-12)
                .collect();
            assert!(
                signs.iter().all(|&s| s > 0.0) || signs.iter().all(|&s| s < 0.0),
                "cell {c} straddles"
            );
        }
    }

    #[test]
    fn budget_is_enforced() {
        let d = Domain::unit_disk();
        assert!(matches!(
            build_mesh_with_budget(&d, 1e-3, 1000),
            Err(Error::Resource { .. })
        ));
    }

    #[test]
    fn locate_finds_interior_points() {
        let m = build_disk_mesh(1.0, 0.1).unwrap();
        let (c, lam) = m.locate(&[0.31, -0.2]).unwrap();
        let p = m.cell_points(c);
        let x = lam[0] * p[0][0] + lam[1] * p[1][0] + lam[2] * p[2][0];
        assert!((x - 0.31).abs() < 1e-12);
        assert!(m.locate(&[1.01, 0.0]).is_none());
    }

    #[test]
    fn polygon_mesh_covers_square() {
        let sq = vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
        let d = Domain::star_polygon(sq, [0.0, 0.0], 0.9).unwrap();
        let m = build_mesh(&d, 0.05).unwrap();
        assert!((m.volume() - 4.0).abs() < 0.02, "{}", m.volume());
    }
}
