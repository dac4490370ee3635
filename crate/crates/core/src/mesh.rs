//! Triangle surface meshes: the refined unit cube family, normals and
//! orientation checks, and the P0/P1 degree-of-freedom maps with
//! Dirichlet/Neumann boundary partitions.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // f64 math through libm in no_std builds
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geom::{Triangle, V3};

/// Closed triangle surface mesh with consistent outward orientation.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    pub vertices: Vec<V3>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<V3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = TriangleMesh { vertices, triangles };
        mesh.validate()?;
        Ok(mesh)
    }

    fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        for (e, t) in self.triangles.iter().enumerate() {
            if t.iter().any(|&i| i >= nv) {
                return Err(Error::Invalid("triangle references a missing vertex"));
            }
            let tri = Triangle::new(self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]);
            if tri.area() <= 1e-14 {
                let _ = e;
                return Err(Error::Invalid("degenerate triangle (area below 1e-14)"));
            }
        }
        Ok(())
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle(&self, e: usize) -> Triangle {
        let [a, b, c] = self.triangles[e];
        Triangle::new(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn normal(&self, e: usize) -> V3 {
        self.triangle(e).unit_normal()
    }

    pub fn centroid(&self, e: usize) -> V3 {
        self.triangle(e).centroid()
    }

    pub fn area(&self, e: usize) -> f64 {
        self.triangle(e).area()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|e| self.area(e)).sum()
    }

    /// Largest edge length over all elements.
    pub fn mesh_width(&self) -> f64 {
        (0..self.n_triangles())
            .map(|e| self.triangle(e).max_edge())
            .fold(0.0, f64::max)
    }

    /// Triangles incident to each vertex.
    pub fn vertex_rings(&self) -> Vec<Vec<usize>> {
        let mut rings = vec![Vec::new(); self.n_vertices()];
        for (e, t) in self.triangles.iter().enumerate() {
            for &v in t {
                rings[v].push(e);
            }
        }
        rings
    }

    /// Every edge of a closed orientable mesh is shared by exactly two
    /// triangles with opposite traversal.
    pub fn check_closed_oriented(&self) -> Result<()> {
        let mut edges: BTreeMap<(usize, usize), i32> = BTreeMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let a = t[k];
                let b = t[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                let dir = if a < b { 1 } else { -1 };
                *edges.entry(key).or_insert(0) += dir;
                let count = edges
                    .get(&key)
                    .copied()
                    .unwrap_or_default();
                if count.abs() > 1 {
                    return Err(Error::Invalid("edge traversed twice in the same direction"));
                }
            }
        }
        // each undirected edge must have been visited exactly twice, once in
        // each direction, leaving a zero counter; track visits separately
        let mut visits: BTreeMap<(usize, usize), u32> = BTreeMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let a = t[k];
                let b = t[(k + 1) % 3];
                *visits.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        if visits.values().any(|&c| c != 2) {
            return Err(Error::Invalid("mesh is not closed (boundary or non-manifold edge)"));
        }
        if edges.values().any(|&c| c != 0) {
            return Err(Error::Invalid("inconsistent orientation across an edge"));
        }
        Ok(())
    }

    /// Flip triangles until the orientation is consistent (breadth-first over
    /// the edge graph); errors on non-orientable input. Outwardness is then
    /// fixed globally by the signed volume.
    pub fn reorient(&mut self) -> Result<()> {
        let n = self.n_triangles();
        let mut edge_map: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (e, t) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let a = t[k];
                let b = t[(k + 1) % 3];
                edge_map.entry((a.min(b), a.max(b))).or_default().push(e);
            }
        }
        if edge_map.values().any(|v| v.len() != 2) {
            return Err(Error::Invalid("mesh is not closed (boundary or non-manifold edge)"));
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(e) = stack.pop() {
            let te = self.triangles[e];
            for k in 0..3 {
                let a = te[k];
                let b = te[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                for &f in &edge_map[&key].clone() {
                    if f == e || seen[f] {
                        continue;
                    }
                    let tf = self.triangles[f];
                    // consistent orientation means f traverses (b, a)
                    let same_dir = (0..3).any(|j| tf[j] == a && tf[(j + 1) % 3] == b);
                    if same_dir {
                        self.triangles[f].swap(1, 2);
                    }
                    seen[f] = true;
                    stack.push(f);
                }
            }
        }
        if !seen.iter().all(|&s| s) {
            return Err(Error::Invalid("mesh has more than one connected component"));
        }
        self.check_closed_oriented()
            .map_err(|_| Error::Invalid("mesh is non-orientable"))?;
        if self.signed_volume() < 0.0 {
            for t in self.triangles.iter_mut() {
                t.swap(1, 2);
            }
        }
        Ok(())
    }

    /// Signed enclosed volume (positive for outward normals).
    pub fn signed_volume(&self) -> f64 {
        let mut v = 0.0;
        for e in 0..self.n_triangles() {
            let t = self.triangle(e);
            v += t.v[0].dot(&t.v[1].cross(&t.v[2])) / 6.0;
        }
        v
    }
}

/// Surface mesh of the cube [-0.5, 0.5]^3. Each face carries a grid of
/// 2^level x 2^level squares, each split into four triangles around its
/// center; refinement bisects the catheti of the previous level.
pub fn unit_cube(level: u32) -> Result<TriangleMesh> {
    if !(1..=6).contains(&level) {
        return Err(Error::Domain("cube refinement level must be in 1..=6"));
    }
    let n = 1usize << level; // squares per face edge
    let scale = 1.0 / (2 * n) as f64; // lattice unit: half a square edge
    // integer lattice keys (coordinates in units of scale, range 0..=2n)
    let mut key_to_index: BTreeMap<[i64; 3], usize> = BTreeMap::new();
    let mut vertices: Vec<V3> = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    let mut vertex = |key: [i64; 3], vertices: &mut Vec<V3>| -> usize {
        *key_to_index.entry(key).or_insert_with(|| {
            let p = V3::new(
                key[0] as f64 * scale - 0.5,
                key[1] as f64 * scale - 0.5,
                key[2] as f64 * scale - 0.5,
            );
            vertices.push(p);
            vertices.len() - 1
        })
    };
    let two_n = (2 * n) as i64;
    // faces: (fixed axis, fixed lattice value, outward sign)
    for axis in 0..3usize {
        for &(fixed, sign) in &[(0i64, -1.0f64), (two_n, 1.0)] {
            let (u_axis, v_axis) = match axis {
                0 => (1, 2),
                1 => (2, 0),
                _ => (0, 1),
            };
            for iu in 0..n as i64 {
                for iv in 0..n as i64 {
                    // square corners and center in lattice units
                    let mk = |du: i64, dv: i64| -> [i64; 3] {
                        let mut key = [0i64; 3];
                        key[axis] = fixed;
                        key[u_axis] = 2 * iu + du;
                        key[v_axis] = 2 * iv + dv;
                        key
                    };
                    let c00 = vertex(mk(0, 0), &mut vertices);
                    let c10 = vertex(mk(2, 0), &mut vertices);
                    let c11 = vertex(mk(2, 2), &mut vertices);
                    let c01 = vertex(mk(0, 2), &mut vertices);
                    let cc = vertex(mk(1, 1), &mut vertices);
                    let quads = [[c00, c10], [c10, c11], [c11, c01], [c01, c00]];
                    for [a, b] in quads {
                        // orient so the normal points outward
                        let t = Triangle::new(vertices[cc], vertices[a], vertices[b]);
                        let mut outward = V3::ZERO;
                        outward.0[axis] = sign;
                        if t.unit_normal().dot(&outward) > 0.0 {
                            triangles.push([cc, a, b]);
                        } else {
                            triangles.push([cc, b, a]);
                        }
                    }
                }
            }
        }
    }
    TriangleMesh::new(vertices, triangles)
}

/// Function space kinds of the Cauchy data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    /// Piecewise constant, discontinuous; one dof per triangle.
    P0,
    /// Piecewise linear, continuous; one dof per vertex.
    P1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryPart {
    Dirichlet,
    Neumann,
}

/// Partition of elements and vertices into the Dirichlet and Neumann parts.
/// A vertex on the interface belongs to the Neumann side (it carries the
/// unknown pressure there).
#[derive(Debug, Clone)]
pub struct BoundaryPartition {
    pub triangle_part: Vec<BoundaryPart>,
    pub vertex_part: Vec<BoundaryPart>,
}

impl BoundaryPartition {
    pub fn triangles_of(&self, part: BoundaryPart) -> Vec<usize> {
        self.triangle_part
            .iter()
            .enumerate()
            .filter(|(_, &p)| p == part)
            .map(|(e, _)| e)
            .collect()
    }

    pub fn vertices_of(&self, part: BoundaryPart) -> Vec<usize> {
        self.vertex_part
            .iter()
            .enumerate()
            .filter(|(_, &p)| p == part)
            .map(|(v, _)| v)
            .collect()
    }
}

/// Tag each triangle by a predicate, then tag vertices: any vertex touching a
/// Neumann triangle is Neumann.
pub fn boundary_partition(
    mesh: &TriangleMesh,
    mut is_dirichlet: impl FnMut(usize) -> bool,
) -> BoundaryPartition {
    let triangle_part: Vec<BoundaryPart> = (0..mesh.n_triangles())
        .map(|e| {
            if is_dirichlet(e) {
                BoundaryPart::Dirichlet
            } else {
                BoundaryPart::Neumann
            }
        })
        .collect();
    let mut vertex_part = vec![BoundaryPart::Dirichlet; mesh.n_vertices()];
    for (e, t) in mesh.triangles.iter().enumerate() {
        if triangle_part[e] == BoundaryPart::Neumann {
            for &v in t {
                vertex_part[v] = BoundaryPart::Neumann;
            }
        }
    }
    BoundaryPartition { triangle_part, vertex_part }
}

/// Default mixed split of the cube: the three faces whose outward normal has
/// positive component sum are Dirichlet.
pub fn cube_mixed_split(mesh: &TriangleMesh) -> BoundaryPartition {
    let normals: Vec<V3> = (0..mesh.n_triangles()).map(|e| mesh.normal(e)).collect();
    boundary_partition(mesh, |e| {
        let n = normals[e];
        n.x() + n.y() + n.z() > 0.0
    })
}

/// Degree-of-freedom map for one function space on (a part of) the surface.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub kind: SpaceKind,
    /// P0: triangle indices; P1: vertex indices (into the mesh).
    pub support: Vec<usize>,
}

impl DofMap {
    pub fn p0_all(mesh: &TriangleMesh) -> Self {
        DofMap { kind: SpaceKind::P0, support: (0..mesh.n_triangles()).collect() }
    }

    pub fn p1_all(mesh: &TriangleMesh) -> Self {
        DofMap { kind: SpaceKind::P1, support: (0..mesh.n_vertices()).collect() }
    }

    pub fn p0_part(partition: &BoundaryPartition, part: BoundaryPart) -> Self {
        DofMap { kind: SpaceKind::P0, support: partition.triangles_of(part) }
    }

    pub fn p1_part(partition: &BoundaryPartition, part: BoundaryPart) -> Self {
        DofMap { kind: SpaceKind::P1, support: partition.vertices_of(part) }
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Geometric anchor of each dof: triangle centroid (P0) or vertex (P1).
    pub fn anchors(&self, mesh: &TriangleMesh) -> Vec<V3> {
        match self.kind {
            SpaceKind::P0 => self.support.iter().map(|&e| mesh.centroid(e)).collect(),
            SpaceKind::P1 => self.support.iter().map(|&v| mesh.vertices[v]).collect(),
        }
    }
}
