//! Black-box multi-level FMM with tensorized Chebyshev interpolation.
//!
//! The octree, the interpolation operators (P2M/M2M/L2L/L2P) and the
//! near-field layout depend only on the geometry; the M2L translation
//! matrices (kernel evaluations between box grids) and the near-field blocks
//! carry the frequency dependence. Source elements are assigned to boxes by
//! centroid, so every triangle contributes either exact near-field entries
//! or interpolated moments, never both for the same target box.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)] // f64 math through libm in no_std builds
use num_traits::Float;

use crate::assemble::Assembler;
use crate::error::{Error, Result};
use crate::geom::V3;
use crate::linalg::CMat;
use crate::mesh::{DofMap, SpaceKind, TriangleMesh};
use crate::quad::gauss_triangle;

/// Which kernel trace the moments carry. The double layer shifts the normal
/// derivative onto the interpolation polynomials, so M2L data is shared.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentKind {
    SingleLayer,
    DoubleLayerShifted,
}

#[derive(Debug, Clone)]
pub struct FmmBox {
    pub level: usize,
    pub coords: [i64; 3],
    pub center: V3,
    pub width: f64,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// target point indices (finest level only)
    pub targets: Vec<usize>,
    /// source element indices (finest level only)
    pub elems: Vec<usize>,
    pub has_sources: bool,
    pub has_targets: bool,
}

/// Uniform sparse octree over the mesh bounding cube.
#[derive(Debug)]
pub struct FmmTree {
    pub boxes: Vec<FmmBox>,
    pub levels: usize,
    pub origin: V3,
    pub root_width: f64,
    index: BTreeMap<(usize, [i64; 3]), usize>,
    /// M2L pairs (target box, source box) grouped by translation class.
    pub m2l_pairs: Vec<(usize, usize, usize)>,
    /// Unique (level, offset) translation classes.
    pub m2l_classes: Vec<(usize, [i64; 3])>,
    /// Near-field pairs (target box, source box) at the finest level.
    pub near_pairs: Vec<(usize, usize)>,
}

fn chebyshev_distance(a: &[i64; 3], b: &[i64; 3]) -> i64 {
    (0..3).map(|d| (a[d] - b[d]).abs()).max().unwrap()
}

impl FmmTree {
    pub fn box_id(&self, level: usize, coords: [i64; 3]) -> Option<usize> {
        self.index.get(&(level, coords)).copied()
    }

    /// Build the tree for target points and source triangles (by centroid);
    /// `hull` are additional geometry points the root box must cover (mesh
    /// vertices, so elements stay inside their boxes).
    pub fn build(targets: &[V3], source_centroids: &[V3], hull: &[V3], levels: usize) -> Result<Self> {
        if levels < 1 {
            return Err(Error::Domain("FMM needs at least one level"));
        }
        let mut bb = crate::geom::Aabb::empty();
        for p in targets.iter().chain(source_centroids.iter()).chain(hull.iter()) {
            bb.insert(p);
        }
        let span = bb.hi - bb.lo;
        let root_width = span.0.iter().cloned().fold(0.0, f64::max) * (1.0 + 1e-12) + 1e-300;
        let origin = bb.lo;
        let nf = 1i64 << levels;
        let wf = root_width / nf as f64;
        let coords_of = |p: &V3| -> [i64; 3] {
            let mut c = [0i64; 3];
            for d in 0..3 {
                c[d] = (((p.0[d] - origin.0[d]) / wf).floor() as i64).clamp(0, nf - 1);
            }
            c
        };
        let mut index: BTreeMap<(usize, [i64; 3]), usize> = BTreeMap::new();
        let mut boxes: Vec<FmmBox> = Vec::new();
        let make_box = |level: usize,
                            coords: [i64; 3],
                            boxes: &mut Vec<FmmBox>,
                            index: &mut BTreeMap<(usize, [i64; 3]), usize>|
         -> usize {
            if let Some(&b) = index.get(&(level, coords)) {
                return b;
            }
            let w = root_width / (1i64 << level) as f64;
            let center = V3::new(
                origin.x() + (coords[0] as f64 + 0.5) * w,
                origin.y() + (coords[1] as f64 + 0.5) * w,
                origin.z() + (coords[2] as f64 + 0.5) * w,
            );
            boxes.push(FmmBox {
                level,
                coords,
                center,
                width: w,
                parent: None,
                children: Vec::new(),
                targets: Vec::new(),
                elems: Vec::new(),
                has_sources: false,
                has_targets: false,
            });
            index.insert((level, coords), boxes.len() - 1);
            boxes.len() - 1
        };
        // finest-level occupancy
        for (i, p) in targets.iter().enumerate() {
            let b = make_box(levels, coords_of(p), &mut boxes, &mut index);
            boxes[b].targets.push(i);
            boxes[b].has_targets = true;
        }
        for (e, p) in source_centroids.iter().enumerate() {
            let b = make_box(levels, coords_of(p), &mut boxes, &mut index);
            boxes[b].elems.push(e);
            boxes[b].has_sources = true;
        }
        // ancestors
        let mut level_boxes: Vec<usize> = (0..boxes.len()).collect();
        for level in (1..=levels).rev() {
            let mut next = Vec::new();
            for &b in &level_boxes {
                if boxes[b].level != level {
                    continue;
                }
                let pc = [boxes[b].coords[0] >> 1, boxes[b].coords[1] >> 1, boxes[b].coords[2] >> 1];
                let pid = make_box(level - 1, pc, &mut boxes, &mut index);
                boxes[b].parent = Some(pid);
                if !boxes[pid].children.contains(&b) {
                    boxes[pid].children.push(b);
                }
                let (hs, ht) = (boxes[b].has_sources, boxes[b].has_targets);
                boxes[pid].has_sources |= hs;
                boxes[pid].has_targets |= ht;
                next.push(pid);
            }
            level_boxes = next;
        }
        // interaction lists: children of the parent's neighbors that are not
        // neighbors themselves; near field at the finest level only
        let mut m2l_pairs = Vec::new();
        let mut class_index: BTreeMap<(usize, [i64; 3]), usize> = BTreeMap::new();
        let mut m2l_classes = Vec::new();
        let mut near_pairs = Vec::new();
        for t in 0..boxes.len() {
            if !boxes[t].has_targets || boxes[t].level < 2 {
                continue;
            }
            let level = boxes[t].level;
            let tc = boxes[t].coords;
            let parent = boxes[t].parent.expect("levels >= 2 have parents");
            let pc = boxes[parent].coords;
            // scan candidate sources among children of parent's neighborhood
            for dx in -3i64..=3 {
                for dy in -3i64..=3 {
                    for dz in -3i64..=3 {
                        let sc = [tc[0] + dx, tc[1] + dy, tc[2] + dz];
                        if chebyshev_distance(&tc, &sc) <= 1 {
                            continue; // neighbor: near field or subdivided
                        }
                        let spc = [sc[0] >> 1, sc[1] >> 1, sc[2] >> 1];
                        if chebyshev_distance(&pc, &spc) > 1 {
                            continue; // parents not neighbors: handled higher up
                        }
                        let Some(s) = index.get(&(level, sc)).copied() else {
                            continue;
                        };
                        if !boxes[s].has_sources {
                            continue;
                        }
                        let off = [dx, dy, dz];
                        let class = *class_index.entry((level, off)).or_insert_with(|| {
                            m2l_classes.push((level, off));
                            m2l_classes.len() - 1
                        });
                        m2l_pairs.push((t, s, class));
                    }
                }
            }
        }
        for t in 0..boxes.len() {
            if boxes[t].level != levels || boxes[t].targets.is_empty() {
                continue;
            }
            let tc = boxes[t].coords;
            for dx in -1i64..=1 {
                for dy in -1i64..=1 {
                    for dz in -1i64..=1 {
                        let sc = [tc[0] + dx, tc[1] + dy, tc[2] + dz];
                        if let Some(&s) = index.get(&(levels, sc)) {
                            if !boxes[s].elems.is_empty() {
                                near_pairs.push((t, s));
                            }
                        }
                    }
                }
            }
        }
        Ok(FmmTree {
            boxes,
            levels,
            origin,
            root_width,
            index,
            m2l_pairs,
            m2l_classes,
            near_pairs,
        })
    }
}

/// Tensorized Chebyshev interpolation basis of order p per dimension.
#[derive(Debug, Clone)]
pub struct ChebBasis {
    pub p: usize,
    pub nodes1d: Vec<f64>,
}

impl ChebBasis {
    /// Chebyshev grid of the first kind with `p` nodes per dimension
    /// (a polynomial order of p-1).
    pub fn new(p: usize) -> Result<Self> {
        if !(1..=11).contains(&p) {
            return Err(Error::Domain("node count per dimension must be in 1..=11"));
        }
        let nodes1d = (0..p)
            .map(|j| (core::f64::consts::PI * (2.0 * j as f64 + 1.0) / (2.0 * p as f64)).cos())
            .collect();
        Ok(ChebBasis { p, nodes1d })
    }

    pub fn n_nodes(&self) -> usize {
        self.p * self.p * self.p
    }

    fn bary_weight(&self, j: usize) -> f64 {
        // barycentric weights of first-kind Chebyshev nodes
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        sign * (core::f64::consts::PI * (2.0 * j as f64 + 1.0) / (2.0 * self.p as f64)).sin()
    }

    /// Cardinal values s_j(x) (barycentric form).
    fn cardinal_1d(&self, x: f64, out: &mut [f64]) {
        let p = self.p;
        if p == 1 {
            out[0] = 1.0;
            return;
        }
        // exactly (or nearly) at a node
        for j in 0..p {
            if (x - self.nodes1d[j]).abs() < 1e-13 {
                for (k, o) in out.iter_mut().enumerate() {
                    *o = if k == j { 1.0 } else { 0.0 };
                }
                return;
            }
        }
        let mut denom = 0.0;
        for (j, o) in out.iter_mut().enumerate() {
            let q = self.bary_weight(j) / (x - self.nodes1d[j]);
            *o = q;
            denom += q;
        }
        for o in out.iter_mut() {
            *o /= denom;
        }
    }

    /// d/dx of the cardinal functions.
    fn cardinal_deriv_1d(&self, x: f64, out: &mut [f64]) {
        let p = self.p;
        if p == 1 {
            out[0] = 0.0;
            return;
        }
        // at a node: differentiation-matrix row
        for m in 0..p {
            if (x - self.nodes1d[m]).abs() < 1e-13 {
                let wm = self.bary_weight(m);
                let mut sum = 0.0;
                for j in 0..p {
                    if j == m {
                        continue;
                    }
                    let v = (self.bary_weight(j) / wm) / (self.nodes1d[m] - self.nodes1d[j]);
                    out[j] = v;
                    sum += v;
                }
                out[m] = -sum;
                return;
            }
        }
        let mut q = vec![0.0; p];
        let mut denom = 0.0;
        let mut dden = 0.0;
        for j in 0..p {
            let d = x - self.nodes1d[j];
            q[j] = self.bary_weight(j) / d;
            denom += q[j];
            dden -= q[j] / d;
        }
        for (j, o) in out.iter_mut().enumerate() {
            let d = x - self.nodes1d[j];
            let qp = -q[j] / d;
            *o = (qp * denom - q[j] * dden) / (denom * denom);
        }
    }

    /// Physical positions of the p^3 grid nodes of a box.
    pub fn box_nodes(&self, center: &V3, width: f64) -> Vec<V3> {
        let h = 0.5 * width;
        let mut nodes = Vec::with_capacity(self.n_nodes());
        for iz in 0..self.p {
            for iy in 0..self.p {
                for ix in 0..self.p {
                    nodes.push(V3::new(
                        center.x() + h * self.nodes1d[ix],
                        center.y() + h * self.nodes1d[iy],
                        center.z() + h * self.nodes1d[iz],
                    ));
                }
            }
        }
        nodes
    }

    /// Tensorized cardinal values of a point in box-local coordinates.
    pub fn values(&self, center: &V3, width: f64, x: &V3) -> Vec<f64> {
        let h = 0.5 * width;
        let p = self.p;
        let mut cx = vec![0.0; p];
        let mut cy = vec![0.0; p];
        let mut cz = vec![0.0; p];
        self.cardinal_1d((x.x() - center.x()) / h, &mut cx);
        self.cardinal_1d((x.y() - center.y()) / h, &mut cy);
        self.cardinal_1d((x.z() - center.z()) / h, &mut cz);
        let mut out = Vec::with_capacity(self.n_nodes());
        for iz in 0..p {
            for iy in 0..p {
                for ix in 0..p {
                    out.push(cx[ix] * cy[iy] * cz[iz]);
                }
            }
        }
        out
    }

    /// Gradient of each tensorized cardinal at a point.
    pub fn gradients(&self, center: &V3, width: f64, x: &V3) -> Vec<V3> {
        let h = 0.5 * width;
        let p = self.p;
        let mut cx = vec![0.0; p];
        let mut cy = vec![0.0; p];
        let mut cz = vec![0.0; p];
        let mut dx = vec![0.0; p];
        let mut dy = vec![0.0; p];
        let mut dz = vec![0.0; p];
        self.cardinal_1d((x.x() - center.x()) / h, &mut cx);
        self.cardinal_1d((x.y() - center.y()) / h, &mut cy);
        self.cardinal_1d((x.z() - center.z()) / h, &mut cz);
        self.cardinal_deriv_1d((x.x() - center.x()) / h, &mut dx);
        self.cardinal_deriv_1d((x.y() - center.y()) / h, &mut dy);
        self.cardinal_deriv_1d((x.z() - center.z()) / h, &mut dz);
        let inv = 1.0 / h;
        let mut out = Vec::with_capacity(self.n_nodes());
        for iz in 0..p {
            for iy in 0..p {
                for ix in 0..p {
                    out.push(V3::new(
                        dx[ix] * cy[iy] * cz[iz] * inv,
                        cx[ix] * dy[iy] * cz[iz] * inv,
                        cx[ix] * cy[iy] * dz[iz] * inv,
                    ));
                }
            }
        }
        out
    }
}

/// Near-field block: exact entries of target points in one box against the
/// dofs touched by the source box's elements.
#[derive(Debug, Clone)]
pub struct NearLayout {
    pub tbox: usize,
    pub sbox: usize,
    /// global target indices (rows)
    pub rows: Vec<usize>,
    /// global dof indices (columns)
    pub cols: Vec<usize>,
    /// per column: which of the source box elements support it
    pub col_elems: Vec<Vec<usize>>,
}

/// Frequency-independent FMM data for one operator (tree + basis +
/// interpolation operators + near-field layout).
pub struct FmmStructure {
    pub tree: FmmTree,
    pub basis: ChebBasis,
    pub kind: MomentKind,
    pub n_targets: usize,
    pub n_cols: usize,
    /// per box: moments matrix p^3 x local source dofs (finest source boxes)
    p2m: Vec<Option<(Vec<usize>, CMat)>>,
    /// per box: target interpolation matrix (targets x p^3)
    l2p: Vec<Option<CMat>>,
    /// per octant: child-to-parent translation (p^3 x p^3)
    m2m: Vec<CMat>,
    pub near: Vec<NearLayout>,
}

impl FmmStructure {
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        mesh: &TriangleMesh,
        space: &DofMap,
        kind: MomentKind,
        targets: &[V3],
        levels: usize,
        p: usize,
        moment_quad_order: usize,
    ) -> Result<Self> {
        Self::build_with_hull(mesh, space, kind, targets, levels, p, moment_quad_order, &[])
    }

    #[allow(clippy::too_many_arguments)]
    pub fn build_with_hull(
        mesh: &TriangleMesh,
        space: &DofMap,
        kind: MomentKind,
        targets: &[V3],
        levels: usize,
        p: usize,
        moment_quad_order: usize,
        extra_hull: &[V3],
    ) -> Result<Self> {
        match (space.kind, kind) {
            (SpaceKind::P0, MomentKind::SingleLayer) | (SpaceKind::P1, MomentKind::DoubleLayerShifted) => {}
            _ => return Err(Error::Invalid("space kind does not match the moment kind")),
        }
        let basis = ChebBasis::new(p)?;
        // per-element dof scatter within the space
        let n_cols = space.len();
        let (elem_list, col_of_vertex, col_of_elem): (Vec<usize>, Vec<usize>, Vec<usize>) = match space.kind {
            SpaceKind::P0 => {
                let mut col_of_elem = vec![usize::MAX; mesh.n_triangles()];
                for (j, &e) in space.support.iter().enumerate() {
                    col_of_elem[e] = j;
                }
                (space.support.clone(), Vec::new(), col_of_elem)
            }
            SpaceKind::P1 => {
                let mut col_of_vertex = vec![usize::MAX; mesh.n_vertices()];
                for (j, &v) in space.support.iter().enumerate() {
                    col_of_vertex[v] = j;
                }
                let elems: Vec<usize> = (0..mesh.n_triangles())
                    .filter(|&e| mesh.triangles[e].iter().any(|&v| col_of_vertex[v] != usize::MAX))
                    .collect();
                (elems, col_of_vertex, Vec::new())
            }
        };
        let centroids: Vec<V3> = elem_list.iter().map(|&e| mesh.centroid(e)).collect();
        let mut hull = mesh.vertices.clone();
        hull.extend_from_slice(extra_hull);
        let tree = FmmTree::build(targets, &centroids, &hull, levels)?;
        let rule = gauss_triangle(moment_quad_order)?;
        let nn = basis.n_nodes();
        // P2M per finest source box
        let mut p2m: Vec<Option<(Vec<usize>, CMat)>> = vec![None; tree.boxes.len()];
        for (bi, b) in tree.boxes.iter().enumerate() {
            if b.level != tree.levels || b.elems.is_empty() {
                continue;
            }
            // local column set of this box
            let mut cols: Vec<usize> = Vec::new();
            let mut local_of: BTreeMap<usize, usize> = BTreeMap::new();
            for &le in &b.elems {
                let e = elem_list[le];
                match space.kind {
                    SpaceKind::P0 => {
                        let c = col_of_elem[e];
                        local_of.entry(c).or_insert_with(|| {
                            cols.push(c);
                            cols.len() - 1
                        });
                    }
                    SpaceKind::P1 => {
                        for &v in &mesh.triangles[e] {
                            let c = col_of_vertex[v];
                            if c != usize::MAX {
                                local_of.entry(c).or_insert_with(|| {
                                    cols.push(c);
                                    cols.len() - 1
                                });
                            }
                        }
                    }
                }
            }
            let mut m = CMat::zeros(nn, cols.len());
            for &le in &b.elems {
                let e = elem_list[le];
                let tri = mesh.triangle(e);
                let normal = tri.unit_normal();
                let area2 = 2.0 * tri.area();
                for ((xi, eta), w) in rule.points.iter().zip(rule.weights.iter()) {
                    let y = tri.map_ref(*xi, *eta);
                    let wq = w * area2;
                    match (space.kind, kind) {
                        (SpaceKind::P0, MomentKind::SingleLayer) => {
                            let vals = basis.values(&b.center, b.width, &y);
                            let c = local_of[&col_of_elem[e]];
                            for (n, v) in vals.iter().enumerate() {
                                let cur = m.get(n, c);
                                m.set(n, c, cur + Complex64::new(v * wq, 0.0));
                            }
                        }
                        (SpaceKind::P1, MomentKind::DoubleLayerShifted) => {
                            // moments of grad(S).n against the vertex hats
                            let grads = basis.gradients(&b.center, b.width, &y);
                            let lam = [1.0 - xi - eta, *xi, *eta];
                            for (local, &v) in mesh.triangles[e].iter().enumerate() {
                                let c = col_of_vertex[v];
                                if c == usize::MAX {
                                    continue;
                                }
                                let cl = local_of[&c];
                                let hw = lam[local] * wq;
                                for (n, g) in grads.iter().enumerate() {
                                    let cur = m.get(n, cl);
                                    m.set(n, cl, cur + Complex64::new(g.dot(&normal) * hw, 0.0));
                                }
                            }
                        }
                        _ => unreachable!(),
                    }
                }
            }
            p2m[bi] = Some((cols, m));
        }
        // L2P per finest target box
        let mut l2p: Vec<Option<CMat>> = vec![None; tree.boxes.len()];
        for (bi, b) in tree.boxes.iter().enumerate() {
            if b.level != tree.levels || b.targets.is_empty() {
                continue;
            }
            let mut m = CMat::zeros(b.targets.len(), nn);
            for (r, &ti) in b.targets.iter().enumerate() {
                let vals = basis.values(&b.center, b.width, &targets[ti]);
                for (n, v) in vals.iter().enumerate() {
                    m.set(r, n, Complex64::new(*v, 0.0));
                }
            }
            l2p[bi] = Some(m);
        }
        // M2M per octant in normalized coordinates (level independent)
        let mut m2m = Vec::with_capacity(8);
        for oct in 0..8usize {
            let off = V3::new(
                if oct & 1 == 1 { 0.25 } else { -0.25 },
                if oct & 2 == 2 { 0.25 } else { -0.25 },
                if oct & 4 == 4 { 0.25 } else { -0.25 },
            );
            // child node positions within a unit parent box centered at 0
            let child_nodes = basis.box_nodes(&off, 0.5);
            let mut t = CMat::zeros(nn, nn);
            for (mchild, y) in child_nodes.iter().enumerate() {
                let vals = basis.values(&V3::ZERO, 1.0, y);
                for (nparent, v) in vals.iter().enumerate() {
                    t.set(nparent, mchild, Complex64::new(*v, 0.0));
                }
            }
            m2m.push(t);
        }
        // near-field layout
        let mut near = Vec::with_capacity(tree.near_pairs.len());
        for &(tb, sb) in &tree.near_pairs {
            let rows = tree.boxes[tb].targets.clone();
            let mut cols: Vec<usize> = Vec::new();
            let mut col_elems: Vec<Vec<usize>> = Vec::new();
            let mut local_of: BTreeMap<usize, usize> = BTreeMap::new();
            for &le in &tree.boxes[sb].elems {
                let e = elem_list[le];
                match space.kind {
                    SpaceKind::P0 => {
                        let c = col_of_elem[e];
                        let idx = *local_of.entry(c).or_insert_with(|| {
                            cols.push(c);
                            col_elems.push(Vec::new());
                            cols.len() - 1
                        });
                        col_elems[idx].push(e);
                    }
                    SpaceKind::P1 => {
                        for &v in &mesh.triangles[e] {
                            let c = col_of_vertex[v];
                            if c == usize::MAX {
                                continue;
                            }
                            let idx = *local_of.entry(c).or_insert_with(|| {
                                cols.push(c);
                                col_elems.push(Vec::new());
                                cols.len() - 1
                            });
                            col_elems[idx].push(e);
                        }
                    }
                }
            }
            near.push(NearLayout { tbox: tb, sbox: sb, rows, cols, col_elems });
        }
        Ok(FmmStructure {
            tree,
            basis,
            kind,
            n_targets: targets.len(),
            n_cols,
            p2m,
            l2p,
            m2m,
            near,
        })
    }

    /// Kernel matrix of one translation class at frequency s:
    /// M2L[n, m] = U(node_n(target), node_m(source), s).
    pub fn m2l_matrix(&self, class: usize, s: Complex64, wave_speed: f64) -> CMat {
        let (level, off) = self.tree.m2l_classes[class];
        let w = self.tree.root_width / (1i64 << level) as f64;
        let tcenter = V3::ZERO;
        let scenter = V3::new(off[0] as f64 * w, off[1] as f64 * w, off[2] as f64 * w);
        let tn = self.basis.box_nodes(&tcenter, w);
        let sn = self.basis.box_nodes(&scenter, w);
        CMat::from_fn(tn.len(), sn.len(), |n, m| {
            crate::assemble::kernel_slp(&tn[n], &sn[m], s, wave_speed)
        })
    }

    /// Exact near-field blocks at frequency s, in the order of `self.near`.
    pub fn near_blocks(
        &self,
        asm: &Assembler<'_>,
        space: &DofMap,
        targets: &[V3],
        s: Complex64,
    ) -> Result<Vec<CMat>> {
        let mut out = Vec::with_capacity(self.near.len());
        for nl in &self.near {
            out.push(self.near_block(nl, asm, space, targets, s)?);
        }
        Ok(out)
    }

    pub fn near_block(
        &self,
        nl: &NearLayout,
        asm: &Assembler<'_>,
        space: &DofMap,
        targets: &[V3],
        s: Complex64,
    ) -> Result<CMat> {
        let mut m = CMat::zeros(nl.rows.len(), nl.cols.len());
        for (r, &ti) in nl.rows.iter().enumerate() {
            let x = &targets[ti];
            for (cidx, elems) in nl.col_elems.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                match self.kind {
                    MomentKind::SingleLayer => {
                        for &e in elems {
                            acc += asm.slp_entry(x, e, s);
                        }
                    }
                    MomentKind::DoubleLayerShifted => {
                        let vtx = space.support[nl.cols[cidx]];
                        for &e in elems {
                            let local = asm
                                .mesh
                                .triangles[e]
                                .iter()
                                .position(|&v| v == vtx)
                                .expect("column vertex belongs to its support element");
                            acc += asm.dlp_tri_entries(x, e, s)[local];
                        }
                    }
                }
                m.set(r, cidx, acc);
            }
        }
        Ok(m)
    }

    /// Upward pass (P2M at the finest level, M2M to level 2): moments per box.
    pub fn upward(&self, x: &[Complex64]) -> Result<Vec<Option<Vec<Complex64>>>> {
        if x.len() != self.n_cols {
            return Err(Error::Dimension("FMM matvec length mismatch"));
        }
        let nn = self.basis.n_nodes();
        let nb = self.tree.boxes.len();
        let zero = Complex64::new(0.0, 0.0);
        let mut moments: Vec<Option<Vec<Complex64>>> = vec![None; nb];
        for (bi, entry) in self.p2m.iter().enumerate() {
            let Some((cols, m)) = entry else { continue };
            let xl: Vec<Complex64> = cols.iter().map(|&c| x[c]).collect();
            moments[bi] = Some(m.matvec(&xl));
        }
        for level in (2..=self.tree.levels.saturating_sub(1)).rev() {
            for bi in 0..nb {
                if self.tree.boxes[bi].level != level || !self.tree.boxes[bi].has_sources {
                    continue;
                }
                let mut acc = vec![zero; nn];
                let mut any = false;
                for &ch in &self.tree.boxes[bi].children.clone() {
                    if let Some(cm) = &moments[ch] {
                        let oct = octant_of(&self.tree.boxes[ch].coords);
                        self.m2m[oct].matvec_acc(cm, Complex64::new(1.0, 0.0), &mut acc);
                        any = true;
                    }
                }
                if any {
                    moments[bi] = Some(acc);
                }
            }
        }
        Ok(moments)
    }

    /// Translate moments to locals with the given per-class M2L matrices.
    pub fn translate(
        &self,
        moments: &[Option<Vec<Complex64>>],
        m2l: &[CMat],
        locals: &mut [Option<Vec<Complex64>>],
    ) {
        let nn = self.basis.n_nodes();
        let zero = Complex64::new(0.0, 0.0);
        for &(tb, sb, class) in &self.tree.m2l_pairs {
            let Some(src) = &moments[sb] else { continue };
            let loc = locals[tb].get_or_insert_with(|| vec![zero; nn]);
            m2l[class].matvec_acc(src, Complex64::new(1.0, 0.0), loc);
        }
    }

    /// Downward pass (L2L + L2P): far-field target values from locals.
    pub fn downward(&self, mut locals: Vec<Option<Vec<Complex64>>>) -> Vec<Complex64> {
        let nn = self.basis.n_nodes();
        let nb = self.tree.boxes.len();
        let zero = Complex64::new(0.0, 0.0);
        for level in 2..self.tree.levels {
            for bi in 0..nb {
                if self.tree.boxes[bi].level != level {
                    continue;
                }
                let Some(parent_loc) = locals[bi].clone() else { continue };
                for &ch in &self.tree.boxes[bi].children.clone() {
                    if !self.tree.boxes[ch].has_targets {
                        continue;
                    }
                    let oct = octant_of(&self.tree.boxes[ch].coords);
                    let child_loc = locals[ch].get_or_insert_with(|| vec![zero; nn]);
                    // L2L = M2M transposed
                    let t = &self.m2m[oct];
                    for mchild in 0..nn {
                        let mut acc = zero;
                        for nparent in 0..nn {
                            acc += t.get(nparent, mchild) * parent_loc[nparent];
                        }
                        child_loc[mchild] += acc;
                    }
                }
            }
        }
        let mut y = vec![zero; self.n_targets];
        for (bi, entry) in self.l2p.iter().enumerate() {
            let Some(m) = entry else { continue };
            if let Some(loc) = &locals[bi] {
                let yl = m.matvec(loc);
                for (&ti, v) in self.tree.boxes[bi].targets.iter().zip(yl.iter()) {
                    y[ti] += v;
                }
            }
        }
        y
    }

    /// y += near blocks applied to x.
    pub fn near_apply(&self, x: &[Complex64], near: &[CMat], y: &mut [Complex64]) {
        let zero = Complex64::new(0.0, 0.0);
        for (nl, block) in self.near.iter().zip(near.iter()) {
            let xl: Vec<Complex64> = nl.cols.iter().map(|&c| x[c]).collect();
            let mut yl = vec![zero; nl.rows.len()];
            block.matvec_acc(&xl, Complex64::new(1.0, 0.0), &mut yl);
            for (&ti, v) in nl.rows.iter().zip(yl.iter()) {
                y[ti] += v;
            }
        }
    }

    /// Multi-level matvec: upward pass, translation with the provided M2L
    /// matrices (indexed by class), downward pass, plus exact near blocks.
    pub fn matvec(&self, x: &[Complex64], m2l: &[CMat], near: &[CMat]) -> Result<Vec<Complex64>> {
        if m2l.len() != self.tree.m2l_classes.len() || near.len() != self.near.len() {
            return Err(Error::Dimension("frequency data does not match the tree"));
        }
        let moments = self.upward(x)?;
        let mut locals: Vec<Option<Vec<Complex64>>> = vec![None; self.tree.boxes.len()];
        self.translate(&moments, m2l, &mut locals);
        let mut y = self.downward(locals);
        self.near_apply(x, near, &mut y);
        Ok(y)
    }

    /// Bytes of one frequency slice (M2L matrices + near blocks).
    pub fn frequency_bytes(&self, m2l: &[CMat], near: &[CMat]) -> usize {
        let m: usize = m2l.iter().map(|c| c.data.len()).sum();
        let n: usize = near.iter().map(|c| c.data.len()).sum();
        (m + n) * core::mem::size_of::<Complex64>()
    }
}

fn octant_of(coords: &[i64; 3]) -> usize {
    ((coords[0] & 1) | ((coords[1] & 1) << 1) | ((coords[2] & 1) << 2)) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vec_norm;
    use crate::mesh::unit_cube;

    fn splitmix(state: &mut u64) -> f64 {
        *state = state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = *state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z = z ^ (z >> 31);
        (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    }

    fn random_cvec(n: usize, seed: u64) -> Vec<Complex64> {
        let mut s = seed;
        (0..n).map(|_| Complex64::new(splitmix(&mut s), splitmix(&mut s))).collect()
    }

    fn rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
        let mut e = 0.0;
        for (x, y) in a.iter().zip(b.iter()) {
            e += (x - y).norm_sqr();
        }
        e.sqrt() / vec_norm(b)
    }

    #[test]
    fn interpolation_reproduces_polynomials() {
        let basis = ChebBasis::new(4).unwrap();
        let center = V3::new(0.3, -0.1, 0.5);
        let w = 1.7;
        let nodes = basis.box_nodes(&center, w);
        // cubic polynomial (degree < p per dimension)
        let f = |p: &V3| p.x().powi(3) - 2.0 * p.y() * p.y() + 0.5 * p.z() + p.x() * p.y() * p.z();
        for &probe in &[V3::new(0.1, 0.2, 0.9), V3::new(-0.4, -0.7, 0.1), V3::new(0.9, 0.6, 1.2)] {
            let vals = basis.values(&center, w, &probe);
            let interp: f64 = vals.iter().zip(nodes.iter()).map(|(s, n)| s * f(n)).sum();
            assert!((interp - f(&probe)).abs() < 1e-12, "{} vs {}", interp, f(&probe));
        }
        // gradient consistency by finite differences
        let g = basis.gradients(&center, w, &V3::new(0.2, 0.1, 0.3));
        let eps = 1e-6;
        for n in [0usize, 17, 43] {
            let fd = (basis.values(&center, w, &V3::new(0.2 + eps, 0.1, 0.3))[n]
                - basis.values(&center, w, &V3::new(0.2 - eps, 0.1, 0.3))[n])
                / (2.0 * eps);
            assert!((g[n].x() - fd).abs() < 1e-6, "node {n}: {} vs {fd}", g[n].x());
        }
    }

    #[test]
    fn single_level_gets_everything_near() {
        let mesh = unit_cube(1).unwrap();
        let targets: Vec<V3> = (0..mesh.n_triangles()).map(|e| mesh.centroid(e)).collect();
        let space = DofMap::p0_all(&mesh);
        let fs =
            FmmStructure::build(&mesh, &space, MomentKind::SingleLayer, &targets, 1, 2, 4).unwrap();
        assert!(fs.tree.m2l_pairs.is_empty());
        let asm = Assembler::new(&mesh, 1.0).unwrap();
        let s = Complex64::new(0.8, 1.1);
        let near = fs.near_blocks(&asm, &space, &targets, s).unwrap();
        let x = random_cvec(space.len(), 4);
        let y = fs.matvec(&x, &[], &near).unwrap();
        let dense = asm.assemble_slp(&targets, &space, s).unwrap();
        let yd = dense.matvec(&x);
        assert!(rel_err(&y, &yd) < 1e-13, "rel {}", rel_err(&y, &yd));
    }

    #[test]
    fn interaction_lists_cover_all_pairs_once() {
        // structural audit: every (target box, source element) combination is
        // either a finest-level near pair or exactly one M2L pair along the
        // ancestor chains
        let mesh = unit_cube(2).unwrap();
        let targets: Vec<V3> = (0..mesh.n_triangles()).map(|e| mesh.centroid(e)).collect();
        let space = DofMap::p0_all(&mesh);
        for levels in [2usize, 3] {
            let fs = FmmStructure::build(&mesh, &space, MomentKind::SingleLayer, &targets, levels, 2, 4)
                .unwrap();
            let tree = &fs.tree;
            use alloc::collections::BTreeSet;
            let near: BTreeSet<(usize, usize)> = tree.near_pairs.iter().cloned().collect();
            let m2l: BTreeSet<(usize, usize)> =
                tree.m2l_pairs.iter().map(|&(t, s, _)| (t, s)).collect();
            let finest: Vec<usize> = (0..tree.boxes.len())
                .filter(|&b| tree.boxes[b].level == levels)
                .collect();
            for &tb in finest.iter().filter(|&&b| !tree.boxes[b].targets.is_empty()) {
                for &sb in finest.iter().filter(|&&b| !tree.boxes[b].elems.is_empty()) {
                    // walk up the chains
                    let mut count = 0;
                    if near.contains(&(tb, sb)) {
                        count += 1;
                    }
                    let (mut a, mut b) = (tb, sb);
                    loop {
                        if m2l.contains(&(a, b)) {
                            count += 1;
                        }
                        match (tree.boxes[a].parent, tree.boxes[b].parent) {
                            (Some(pa), Some(pb)) => {
                                a = pa;
                                b = pb;
                            }
                            _ => break,
                        }
                    }
                    assert_eq!(count, 1, "pair ({tb},{sb}) covered {count} times");
                }
            }
        }
    }

    #[test]
    fn separated_octants_interact() {
        let targets = vec![V3::new(0.05, 0.05, 0.05), V3::new(0.95, 0.95, 0.95)];
        let sources = vec![V3::new(0.05, 0.05, 0.05), V3::new(0.95, 0.95, 0.95)];
        let tree = FmmTree::build(&targets, &sources, &[], 2).unwrap();
        assert!(
            !tree.m2l_pairs.is_empty(),
            "well separated finest boxes must appear in interaction lists"
        );
    }

    #[test]
    fn fmm_matches_dense_and_improves_with_order() {
        let mesh = unit_cube(2).unwrap();
        let asm = Assembler::new(&mesh, 1.0).unwrap();
        let targets: Vec<V3> = (0..mesh.n_triangles()).map(|e| mesh.centroid(e)).collect();
        let space = DofMap::p0_all(&mesh);
        let s = Complex64::new(1.0, 2.0);
        let dense = asm.assemble_slp(&targets, &space, s).unwrap();
        let x = random_cvec(space.len(), 9);
        let yd = dense.matvec(&x);
        let mut errs = Vec::new();
        // interpolation orders 2..5 use order+1 nodes per dimension
        for order in [2usize, 3, 4, 5] {
            let fs = FmmStructure::build(&mesh, &space, MomentKind::SingleLayer, &targets, 2, order + 1, 6)
                .unwrap();
            let m2l: Vec<CMat> = (0..fs.tree.m2l_classes.len())
                .map(|c| fs.m2l_matrix(c, s, 1.0))
                .collect();
            let near = fs.near_blocks(&asm, &space, &targets, s).unwrap();
            let y = fs.matvec(&x, &m2l, &near).unwrap();
            errs.push(rel_err(&y, &yd));
        }
        assert!(errs[2] <= 1e-4, "order-4 error too large: {errs:?}");
        // monotone non-increasing, one 10% inversion allowed for roundoff
        let mut inversions = 0;
        for w in errs.windows(2) {
            if w[1] > w[0] * 1.1 {
                inversions += 1;
            }
        }
        assert!(inversions == 0, "errors {errs:?}");
    }

    #[test]
    fn dlp_shares_m2l_with_slp() {
        let mesh = unit_cube(2).unwrap();
        let asm = Assembler::new(&mesh, 1.0).unwrap();
        let targets: Vec<V3> = (0..mesh.n_triangles()).map(|e| mesh.centroid(e)).collect();
        let space = DofMap::p1_all(&mesh);
        let s = Complex64::new(1.0, 2.0);
        let fs =
            FmmStructure::build(&mesh, &space, MomentKind::DoubleLayerShifted, &targets, 2, 6, 6)
                .unwrap();
        let m2l: Vec<CMat> = (0..fs.tree.m2l_classes.len())
            .map(|c| fs.m2l_matrix(c, s, 1.0))
            .collect();
        let near = fs.near_blocks(&asm, &space, &targets, s).unwrap();
        let x = random_cvec(space.len(), 31);
        let y = fs.matvec(&x, &m2l, &near).unwrap();
        let dense = asm.assemble_dlp(&targets, &space, s).unwrap();
        let yd = dense.matvec(&x);
        let rel = rel_err(&y, &yd);
        assert!(rel < 2e-3, "DLP rel err {rel}");
    }

    #[test]
    fn frequency_swap_reuses_structure() {
        let mesh = unit_cube(2).unwrap();
        let asm = Assembler::new(&mesh, 1.0).unwrap();
        let targets: Vec<V3> = (0..mesh.n_triangles()).map(|e| mesh.centroid(e)).collect();
        let space = DofMap::p0_all(&mesh);
        let fs =
            FmmStructure::build(&mesh, &space, MomentKind::SingleLayer, &targets, 2, 5, 6).unwrap();
        let x = random_cvec(space.len(), 8);
        for s in [Complex64::new(0.5, 1.0), Complex64::new(2.0, -3.0)] {
            let m2l: Vec<CMat> = (0..fs.tree.m2l_classes.len())
                .map(|c| fs.m2l_matrix(c, s, 1.0))
                .collect();
            let near = fs.near_blocks(&asm, &space, &targets, s).unwrap();
            let y = fs.matvec(&x, &m2l, &near).unwrap();
            let dense = asm.assemble_slp(&targets, &space, s).unwrap();
            let yd = dense.matvec(&x);
            let rel = rel_err(&y, &yd);
            assert!(rel < 2e-4, "rel err {rel} at s={s}");
        }
    }
}
