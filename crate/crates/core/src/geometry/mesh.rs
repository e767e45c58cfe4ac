//! Constrained Delaunay meshing of charted domains.

use serde::{Deserialize, Serialize};
use spade::{ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};
use std::collections::{HashMap, HashSet};
use std::io::Write;

use super::domain::{BoundaryPiece, ChartedDomain, DomainKind};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeTag {
    Chart,
    Other,
}

/// A boundary edge, oriented counterclockwise.
#[derive(Clone, Debug)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub length: f64,
    pub tag: EdgeTag,
    pub piece: BoundaryPiece,
    /// Arclength of the first node along the boundary cycle.
    pub arc_start: f64,
    /// Reference coordinates of the two end nodes.
    pub ref_start: f64,
    pub ref_end: f64,
}

#[derive(Clone, Debug)]
pub struct TriMesh {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    /// One closed counterclockwise cycle, starting at the first polyline vertex.
    pub boundary_edges: Vec<BoundaryEdge>,
    pub h: f64,
    pub total_boundary_length: f64,
    pub ref_period: f64,
}

/// Refinement zone of uniform size `h` hugging the chart, `depth` deep.
#[derive(Clone, Copy, Debug)]
pub struct RefinementBand {
    pub depth: f64,
    pub h: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct MeshOptions {
    /// Target size along the boundary.
    pub h: f64,
    /// Size cap away from the boundary; defaults to `8h` clamped to `[h, 1/16]`.
    pub interior_h: Option<f64>,
    pub min_angle_deg: f64,
    pub band: Option<RefinementBand>,
}

impl MeshOptions {
    pub fn new(h: f64) -> Self {
        Self { h, interior_h: None, min_angle_deg: 25.0, band: None }
    }

    pub fn with_band(mut self, band: RefinementBand) -> Self {
        self.band = Some(band);
        self
    }

    pub fn with_interior(mut self, size: f64) -> Self {
        self.interior_h = Some(size);
        self
    }

    fn interior(&self) -> f64 {
        self.interior_h.unwrap_or((8.0 * self.h).min(0.0625).max(self.h))
    }
}

pub fn generate_mesh(domain: &ChartedDomain, h: f64) -> Result<TriMesh> {
    generate_mesh_with(domain, &MeshOptions::new(h))
}

pub fn generate_mesh_with(domain: &ChartedDomain, opts: &MeshOptions) -> Result<TriMesh> {
    let h = opts.h;
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::config("h", format!("mesh size must be positive, got {h}")));
    }
    if let Some(eps) = domain.eps() {
        if h > eps / 8.0 * (1.0 + 1e-9) {
            return Err(Error::config("h", format!("h = {h} does not resolve the period {eps}; need h <= eps/8")));
        }
    }
    let resampled;
    let domain = if domain.resolution > h * (1.0 + 1e-12) {
        resampled = domain.resampled(h)?;
        &resampled
    } else {
        domain
    };

    let n_poly = domain.polyline.len();
    let mut vertices: Vec<Point2<f64>> = domain.polyline.iter().map(|p| Point2::new(p[0], p[1])).collect();
    if let Some(band) = opts.band {
        vertices.extend(band_points(domain, band).into_iter().map(|p| Point2::new(p[0], p[1])));
    }
    let n_input = vertices.len();
    let edges: Vec<[usize; 2]> = (0..n_poly).map(|i| [i, (i + 1) % n_poly]).collect();
    let mut cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::bulk_load_cdt(vertices, edges)
        .map_err(|e| Error::Geometry(format!("triangulation failed: {e:?}")))?;
    if cdt.num_vertices() != n_input {
        return Err(Error::Geometry("duplicate boundary vertices".into()));
    }

    let hi = opts.interior().max(h);
    let max_area = 3f64.sqrt() / 4.0 * hi * hi;
    let area = domain.polygon_area().abs();
    let budget = 50 * cdt.num_vertices() + (8.0 * area / max_area) as usize + 10_000;
    let params = RefinementParameters::<f64>::new()
        .with_angle_limit(spade::AngleLimit::from_deg(opts.min_angle_deg))
        .with_max_allowed_area(max_area)
        .exclude_outer_faces(true)
        .with_max_additional_vertices(budget);
    let result = cdt.refine(params);
    if !result.refinement_complete {
        return Err(Error::Geometry("mesh refinement did not complete within its vertex budget".into()));
    }
    let excluded: HashSet<_> = result.excluded_faces.into_iter().collect();

    let positions: Vec<[f64; 2]> = cdt.vertices().map(|v| [v.position().x, v.position().y]).collect();
    let mut raw_tris = Vec::new();
    for face in cdt.inner_faces() {
        if excluded.contains(&face.fix()) {
            continue;
        }
        let [a, b, c] = face.vertices().map(|v| v.fix().index());
        let t = if signed_area(&positions, [a, b, c]) > 0.0 { [a, b, c] } else { [a, c, b] };
        raw_tris.push(t);
    }
    build_trimesh(domain, positions, raw_tris, h)
}

/// Lattice points strictly inside the domain within `depth` below the chart.
fn band_points(domain: &ChartedDomain, band: RefinementBand) -> Vec<[f64; 2]> {
    if domain.kind != DomainKind::SquareTopChart || band.depth <= 0.0 {
        return Vec::new();
    }
    let hb = band.h;
    let dy = hb * 3f64.sqrt() / 2.0;
    let nx = (1.0 / hb).round().max(1.0) as usize;
    let rows = (band.depth / dy).ceil() as usize;
    let mut pts = Vec::new();
    for j in 1..=rows {
        let shift = if j % 2 == 1 { 0.5 } else { 0.0 };
        for i in 0..=nx {
            let x = (i as f64 + shift) / nx as f64;
            if x < 0.5 * hb || x > 1.0 - 0.5 * hb {
                continue;
            }
            let top = domain.top_height(x);
            let y = domain.phi.value(x) - j as f64 * dy;
            if y < 0.5 * hb || y > top - 0.5 * hb || domain.phi.value(x) - y > band.depth {
                continue;
            }
            pts.push([x, y]);
        }
    }
    pts
}

fn signed_area(nodes: &[[f64; 2]], t: [usize; 3]) -> f64 {
    let [a, b, c] = t.map(|i| nodes[i]);
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

fn build_trimesh(
    domain: &ChartedDomain,
    positions: Vec<[f64; 2]>,
    raw_tris: Vec<[usize; 3]>,
    h: f64,
) -> Result<TriMesh> {
    if raw_tris.is_empty() {
        return Err(Error::Geometry("triangulation produced no interior triangles".into()));
    }
    let mut used = vec![false; positions.len()];
    for t in &raw_tris {
        for &v in t {
            used[v] = true;
        }
    }
    let mut remap = vec![usize::MAX; positions.len()];
    let mut nodes = Vec::new();
    for (i, p) in positions.iter().enumerate() {
        if used[i] {
            remap[i] = nodes.len();
            nodes.push(*p);
        }
    }
    let triangles: Vec<[usize; 3]> = raw_tris.iter().map(|t| t.map(|v| remap[v])).collect();
    for (i, t) in triangles.iter().enumerate() {
        if signed_area(&nodes, *t) <= 0.0 {
            return Err(Error::Geometry(format!("triangle {i} is degenerate")));
        }
    }

    let n_poly = domain.polyline.len();
    let poly_node: Vec<usize> = (0..n_poly).map(|i| remap[i]).collect();
    if poly_node.contains(&usize::MAX) {
        return Err(Error::Geometry("a boundary vertex is not part of the mesh".into()));
    }
    let boundary_edges = walk_boundary(domain, &nodes, &triangles, &poly_node)?;
    let total_boundary_length = boundary_edges.iter().map(|e| e.length).sum();
    Ok(TriMesh { nodes, triangles, boundary_edges, h, total_boundary_length, ref_period: domain.ref_period() })
}

fn walk_boundary(
    domain: &ChartedDomain,
    nodes: &[[f64; 2]],
    triangles: &[[usize; 3]],
    poly_node: &[usize],
) -> Result<Vec<BoundaryEdge>> {
    let mut count: HashMap<(usize, usize), u32> = HashMap::with_capacity(triangles.len() * 3);
    for t in triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            *count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    let mut next = vec![usize::MAX; nodes.len()];
    let mut n_boundary = 0;
    for t in triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if count[&(a.min(b), a.max(b))] == 1 {
                if next[a] != usize::MAX {
                    return Err(Error::Geometry("boundary is not a single cycle (pinched vertex)".into()));
                }
                next[a] = b;
                n_boundary += 1;
            }
        }
    }

    let n_poly = poly_node.len();
    let mut edges = Vec::with_capacity(n_boundary);
    let mut seg = 0;
    let mut cur = poly_node[0];
    let mut tau_cur = domain.ref_coords[0];
    let mut arc = 0.0;
    while edges.len() < n_boundary {
        let b = next[cur];
        if b == usize::MAX {
            return Err(Error::Geometry("boundary cycle is broken".into()));
        }
        let (p0, p1) = domain.segment(seg);
        let seg_end_node = poly_node[(seg + 1) % n_poly];
        let tau_b = if b == seg_end_node {
            domain.ref_coords[seg + 1]
        } else {
            let q = nodes[b];
            let len = (p1[0] - p0[0]).hypot(p1[1] - p0[1]);
            let along = ((q[0] - p0[0]) * (p1[0] - p0[0]) + (q[1] - p0[1]) * (p1[1] - p0[1])) / len;
            let off = ((q[0] - p0[0]) * (p1[1] - p0[1]) - (q[1] - p0[1]) * (p1[0] - p0[0])).abs() / len;
            if off > 1e-9 * len.max(1e-3) || along < -1e-12 || along > len * (1.0 + 1e-12) {
                return Err(Error::Geometry(format!("boundary node {b} is off polyline segment {seg}")));
            }
            let (t0, t1) = (domain.ref_coords[seg], domain.ref_coords[seg + 1]);
            t0 + (t1 - t0) * (along / len)
        };
        let piece = domain.pieces[seg];
        let (a, c) = (nodes[cur], nodes[b]);
        let length = (c[0] - a[0]).hypot(c[1] - a[1]);
        edges.push(BoundaryEdge {
            nodes: [cur, b],
            length,
            tag: if piece == BoundaryPiece::Chart { EdgeTag::Chart } else { EdgeTag::Other },
            piece,
            arc_start: arc,
            ref_start: tau_cur,
            ref_end: tau_b,
        });
        arc += length;
        cur = b;
        tau_cur = tau_b;
        if b == seg_end_node {
            seg += 1;
            if seg == n_poly {
                break;
            }
        }
    }
    if edges.len() != n_boundary || cur != poly_node[0] || seg != n_poly {
        return Err(Error::Geometry("boundary edges do not form one closed cycle".into()));
    }
    Ok(edges)
}

impl TriMesh {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        signed_area(&self.nodes, self.triangles[t])
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Gradients of the three P1 hat functions on triangle `t`, and its area.
    pub fn hat_gradients(&self, t: usize) -> ([[f64; 2]; 3], f64) {
        let [a, b, c] = self.triangles[t].map(|i| self.nodes[i]);
        let area = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]));
        let inv = 0.5 / area;
        (
            [
                [(b[1] - c[1]) * inv, (c[0] - b[0]) * inv],
                [(c[1] - a[1]) * inv, (a[0] - c[0]) * inv],
                [(a[1] - b[1]) * inv, (b[0] - a[0]) * inv],
            ],
            area,
        )
    }

    /// Lumped vertex masses: a third of each adjacent triangle's area.
    pub fn lumped_masses(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.nodes.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            let a = self.triangle_area(t) / 3.0;
            for &v in tri {
                m[v] += a;
            }
        }
        m
    }

    pub fn boundary_node_flags(&self) -> Vec<bool> {
        let mut f = vec![false; self.nodes.len()];
        for e in &self.boundary_edges {
            f[e.nodes[0]] = true;
            f[e.nodes[1]] = true;
        }
        f
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        self.boundary_edges.iter().map(|e| e.length).collect()
    }

    /// Uniform red refinement: every triangle split into four. The coarse
    /// P1 space is contained in the refined one.
    pub fn refined(&self) -> TriMesh {
        let mut nodes = self.nodes.clone();
        let mut mids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, nodes: &mut Vec<[f64; 2]>| -> usize {
            *mids.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let (p, q) = (nodes[a], nodes[b]);
                nodes.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
                nodes.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for &[a, b, c] in &self.triangles {
            let ab = mid(a, b, &mut nodes);
            let bc = mid(b, c, &mut nodes);
            let ca = mid(c, a, &mut nodes);
            triangles.extend_from_slice(&[[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        let mut boundary_edges = Vec::with_capacity(2 * self.boundary_edges.len());
        let mut arc = 0.0;
        for e in &self.boundary_edges {
            let m = mid(e.nodes[0], e.nodes[1], &mut nodes);
            let tm = 0.5 * (e.ref_start + e.ref_end);
            for (pair, (r0, r1)) in [([e.nodes[0], m], (e.ref_start, tm)), ([m, e.nodes[1]], (tm, e.ref_end))] {
                let (p, q) = (nodes[pair[0]], nodes[pair[1]]);
                let length = (q[0] - p[0]).hypot(q[1] - p[1]);
                boundary_edges.push(BoundaryEdge {
                    nodes: pair,
                    length,
                    tag: e.tag,
                    piece: e.piece,
                    arc_start: arc,
                    ref_start: r0,
                    ref_end: r1,
                });
                arc += length;
            }
        }
        let total_boundary_length = boundary_edges.iter().map(|e| e.length).sum();
        TriMesh {
            nodes,
            triangles,
            boundary_edges,
            h: 0.5 * self.h,
            total_boundary_length,
            ref_period: self.ref_period,
        }
    }

    /// OFF-like text export: header, counts, node lines, triangle lines.
    pub fn write_off<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "OFF")?;
        writeln!(w, "{} {} 0", self.nodes.len(), self.triangles.len())?;
        for p in &self.nodes {
            writeln!(w, "{:.17e} {:.17e} 0", p[0], p[1])?;
        }
        for t in &self.triangles {
            writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }

    /// Largest boundary edge length.
    pub fn max_boundary_edge(&self) -> f64 {
        self.boundary_edges.iter().map(|e| e.length).fold(0.0, f64::max)
    }
}

/// Bucket grid for locating points in a mesh.
pub struct PointLocator<'m> {
    mesh: &'m TriMesh,
    lo: [f64; 2],
    cell: [f64; 2],
    dims: [usize; 2],
    buckets: Vec<Vec<u32>>,
}

impl<'m> PointLocator<'m> {
    pub fn new(mesh: &'m TriMesh) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &mesh.nodes {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let side = ((mesh.triangles.len() as f64).sqrt().ceil() as usize).clamp(1, 2048);
        let dims = [side, side];
        let cell = [((hi[0] - lo[0]) / side as f64).max(1e-12), ((hi[1] - lo[1]) / side as f64).max(1e-12)];
        let mut loc = Self { mesh, lo, cell, dims, buckets: vec![Vec::new(); side * side] };
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let ps = tri.map(|i| mesh.nodes[i]);
            let (x0, y0) = loc.cell_of([ps[0][0].min(ps[1][0]).min(ps[2][0]), ps[0][1].min(ps[1][1]).min(ps[2][1])]);
            let (x1, y1) = loc.cell_of([ps[0][0].max(ps[1][0]).max(ps[2][0]), ps[0][1].max(ps[1][1]).max(ps[2][1])]);
            for gy in y0..=y1 {
                for gx in x0..=x1 {
                    loc.buckets[gy * dims[0] + gx].push(t as u32);
                }
            }
        }
        loc
    }

    fn cell_of(&self, p: [f64; 2]) -> (usize, usize) {
        let gx = ((p[0] - self.lo[0]) / self.cell[0]).floor().clamp(0.0, (self.dims[0] - 1) as f64) as usize;
        let gy = ((p[1] - self.lo[1]) / self.cell[1]).floor().clamp(0.0, (self.dims[1] - 1) as f64) as usize;
        (gx, gy)
    }

    fn barycentric(&self, t: usize, p: [f64; 2]) -> [f64; 3] {
        let [a, b, c] = self.mesh.triangles[t].map(|i| self.mesh.nodes[i]);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
        let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (p[1] - a[1]) * (c[0] - a[0])) / det;
        let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])) / det;
        [1.0 - l1 - l2, l1, l2]
    }

    /// Triangle containing `p` and barycentric coordinates.
    pub fn locate(&self, p: [f64; 2]) -> Option<(usize, [f64; 3])> {
        let (gx, gy) = self.cell_of(p);
        self.buckets[gy * self.dims[0] + gx].iter().find_map(|&t| {
            let l = self.barycentric(t as usize, p);
            (l.iter().all(|&v| v >= -1e-12)).then_some((t as usize, l))
        })
    }

    /// Like [`locate`](Self::locate), but points slightly outside the mesh
    /// (a curved boundary approximated by chords) snap to the closest
    /// triangle nearby, with clamped barycentric coordinates.
    pub fn locate_or_nearest(&self, p: [f64; 2]) -> Option<(usize, [f64; 3])> {
        if let Some(hit) = self.locate(p) {
            return Some(hit);
        }
        let (gx, gy) = self.cell_of(p);
        let mut best: Option<(f64, usize, [f64; 3])> = None;
        for ring in 0..3usize {
            let (x0, x1) = (gx.saturating_sub(ring), (gx + ring).min(self.dims[0] - 1));
            let (y0, y1) = (gy.saturating_sub(ring), (gy + ring).min(self.dims[1] - 1));
            for yy in y0..=y1 {
                for xx in x0..=x1 {
                    for &t in &self.buckets[yy * self.dims[0] + xx] {
                        let l = self.barycentric(t as usize, p);
                        let deficit = l.iter().map(|v| (-v).max(0.0)).sum::<f64>();
                        if best.as_ref().is_none_or(|b| deficit < b.0) {
                            best = Some((deficit, t as usize, l));
                        }
                    }
                }
            }
            if best.is_some() {
                break;
            }
        }
        best.map(|(_, t, l)| {
            let c = l.map(|v| v.max(0.0));
            let s: f64 = c.iter().sum();
            (t, c.map(|v| v / s))
        })
    }

    /// Interpolates a nodal field at `p`.
    pub fn interpolate(&self, u: &[f64], p: [f64; 2]) -> Option<f64> {
        self.locate_or_nearest(p).map(|(t, l)| {
            let tri = self.mesh.triangles[t];
            l[0] * u[tri[0]] + l[1] * u[tri[1]] + l[2] * u[tri[2]]
        })
    }
}
