//! Laplace-domain kernels of the wave equation and dense collocation
//! assembly of the single-/double-layer operators and the integral-free
//! term.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)] // f64 math through libm in no_std builds
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geom::{Triangle, V3};
use crate::linalg::CMat;
use crate::mesh::{DofMap, SpaceKind, TriangleMesh};
use crate::quad::{duffy_singular, locate_on_triangle, select_order, RuleTable};

/// Fundamental solution in Laplace domain: exp(-s r / c) / (4 pi r).
#[inline]
pub fn kernel_slp(x: &V3, y: &V3, s: Complex64, c: f64) -> Complex64 {
    let r = x.dist(y);
    (-s * (r / c)).exp() / (4.0 * core::f64::consts::PI * r)
}

/// Conormal derivative of the fundamental solution with respect to y:
/// exp(-s r/c) (1 + s r/c) ((x-y).n_y) / (4 pi r^3).
#[inline]
pub fn kernel_dlp(x: &V3, y: &V3, n_y: &V3, s: Complex64, c: f64) -> Complex64 {
    let d = *x - *y;
    let r = d.norm();
    let src = s * (r / c);
    (-src).exp() * (Complex64::new(1.0, 0.0) + src) * (d.dot(n_y) / (4.0 * core::f64::consts::PI * r * r * r))
}

/// Geometry cached per element for the assembly loops.
#[derive(Debug, Clone)]
struct ElemGeom {
    tri: Triangle,
    normal: V3,
    centroid: V3,
    area2: f64,
    h: f64,
}

/// Assembly engine for one mesh: quadrature tables plus element geometry.
pub struct Assembler<'m> {
    pub mesh: &'m TriangleMesh,
    pub wave_speed: f64,
    rules: RuleTable,
    duffy_points: usize,
    elems: Vec<ElemGeom>,
}

impl<'m> Assembler<'m> {
    pub fn new(mesh: &'m TriangleMesh, wave_speed: f64) -> Result<Self> {
        if !(wave_speed > 0.0) {
            return Err(Error::Domain("wave speed must be positive"));
        }
        let rules = RuleTable::new(6)?;
        let elems = (0..mesh.n_triangles())
            .map(|e| {
                let tri = mesh.triangle(e);
                ElemGeom {
                    tri,
                    normal: tri.unit_normal(),
                    centroid: tri.centroid(),
                    area2: 2.0 * tri.area(),
                    h: tri.max_edge(),
                }
            })
            .collect();
        Ok(Assembler { mesh, wave_speed, rules, duffy_points: 28, elems })
    }

    /// Single-layer integral of the P0 basis of one element:
    /// int_tri exp(-s r/c)/(4 pi r) ds_y.
    pub fn slp_entry(&self, x: &V3, elem: usize, s: Complex64) -> Complex64 {
        let mut out = [Complex64::new(0.0, 0.0)];
        self.slp_entry_multi(x, elem, &[s], &mut out);
        out[0]
    }

    /// Same integral at several frequencies sharing the geometry pass.
    pub fn slp_entry_multi(&self, x: &V3, elem: usize, s_list: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(s_list.len(), out.len());
        let g = &self.elems[elem];
        let c = self.wave_speed;
        if let Some(site) = locate_on_triangle(&g.tri, x) {
            for (sk, o) in s_list.iter().zip(out.iter_mut()) {
                *o = duffy_singular(&g.tri, x, site, self.duffy_points, |y| kernel_slp(x, y, *sk, c));
            }
            return;
        }
        let dist = x.dist(&g.centroid);
        let rule = self.rules.rule(select_order(dist, g.h, self.rules.base));
        for o in out.iter_mut() {
            *o = Complex64::new(0.0, 0.0);
        }
        for ((xi, eta), w) in rule.points.iter().zip(rule.weights.iter()) {
            let y = g.tri.map_ref(*xi, *eta);
            let r = x.dist(&y);
            let base = w * g.area2 / (4.0 * core::f64::consts::PI * r);
            let rc = r / c;
            for (sk, o) in s_list.iter().zip(out.iter_mut()) {
                *o += (-sk * rc).exp() * base;
            }
        }
    }

    /// Double-layer integrals of the three vertex hat functions of one
    /// element (zero when the collocation point lies in the element plane,
    /// which covers every singular configuration on flat triangles).
    pub fn dlp_tri_entries(&self, x: &V3, elem: usize, s: Complex64) -> [Complex64; 3] {
        let mut out = [[Complex64::new(0.0, 0.0)]; 3];
        let mut flat: [&mut [Complex64]; 3] = {
            let [a, b, c] = &mut out;
            [a, b, c]
        };
        self.dlp_tri_entries_multi(x, elem, &[s], &mut flat);
        [out[0][0], out[1][0], out[2][0]]
    }

    /// Multi-frequency variant; `out[v][k]` is the hat-function-v integral
    /// at frequency `s_list[k]`.
    pub fn dlp_tri_entries_multi(
        &self,
        x: &V3,
        elem: usize,
        s_list: &[Complex64],
        out: &mut [&mut [Complex64]; 3],
    ) {
        let g = &self.elems[elem];
        let c = self.wave_speed;
        for v in 0..3 {
            for o in out[v].iter_mut() {
                *o = Complex64::new(0.0, 0.0);
            }
        }
        // (x - y).n is constant over a flat element; if it vanishes the
        // whole integral does, which disposes of all singular cases
        let d_plane = (*x - g.tri.v[0]).dot(&g.normal);
        if d_plane.abs() < 1e-12 * g.h {
            return;
        }
        let dist = x.dist(&g.centroid);
        let rule = self.rules.rule(select_order(dist, g.h, self.rules.base));
        for ((xi, eta), w) in rule.points.iter().zip(rule.weights.iter()) {
            let y = g.tri.map_ref(*xi, *eta);
            let d = *x - y;
            let r = d.norm();
            let geom = d.dot(&g.normal) / (4.0 * core::f64::consts::PI * r * r * r) * (w * g.area2);
            let lam = [1.0 - xi - eta, *xi, *eta];
            let rc = r / c;
            for (k, sk) in s_list.iter().enumerate() {
                let src = sk * rc;
                let kern = (-src).exp() * (Complex64::new(1.0, 0.0) + src) * geom;
                for v in 0..3 {
                    out[v][k] += kern * lam[v];
                }
            }
        }
    }

    /// Double-layer integral against the hat function of one vertex (sums the
    /// vertex ring; used by the compression entry oracles).
    pub fn dlp_entry(&self, x: &V3, vertex: usize, ring: &[usize], s: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &e in ring {
            let local = self.mesh.triangles[e].iter().position(|&v| v == vertex).unwrap();
            acc += self.dlp_tri_entries(x, e, s)[local];
        }
        acc
    }

    pub fn dlp_entry_multi(
        &self,
        x: &V3,
        vertex: usize,
        ring: &[usize],
        s_list: &[Complex64],
        out: &mut [Complex64],
    ) {
        for o in out.iter_mut() {
            *o = Complex64::new(0.0, 0.0);
        }
        let mut b0 = vec![Complex64::new(0.0, 0.0); s_list.len()];
        let mut b1 = vec![Complex64::new(0.0, 0.0); s_list.len()];
        let mut b2 = vec![Complex64::new(0.0, 0.0); s_list.len()];
        for &e in ring {
            let local = self.mesh.triangles[e].iter().position(|&v| v == vertex).unwrap();
            {
                let mut flat: [&mut [Complex64]; 3] = [&mut b0, &mut b1, &mut b2];
                self.dlp_tri_entries_multi(x, e, s_list, &mut flat);
            }
            let contrib = match local {
                0 => &b0,
                1 => &b1,
                _ => &b2,
            };
            for (o, v) in out.iter_mut().zip(contrib.iter()) {
                *o += v;
            }
        }
    }

    /// Dense single-layer block: rows are collocation points, columns the P0
    /// dofs of `space`.
    pub fn assemble_slp(&self, points: &[V3], space: &DofMap, s: Complex64) -> Result<CMat> {
        if space.kind != SpaceKind::P0 {
            return Err(Error::Invalid("single-layer columns require a P0 space"));
        }
        let mut a = CMat::zeros(points.len(), space.len());
        for (i, x) in points.iter().enumerate() {
            let row = a.row_mut(i);
            for (j, &e) in space.support.iter().enumerate() {
                row[j] = self.slp_entry(x, e, s);
            }
        }
        Ok(a)
    }

    /// Dense double-layer block: rows are collocation points, columns the P1
    /// dofs of `space`. Hat functions are integrated element-wise over their
    /// full supports and scattered into the listed columns.
    pub fn assemble_dlp(&self, points: &[V3], space: &DofMap, s: Complex64) -> Result<CMat> {
        if space.kind != SpaceKind::P1 {
            return Err(Error::Invalid("double-layer columns require a P1 space"));
        }
        let mut col_of = vec![usize::MAX; self.mesh.n_vertices()];
        for (j, &v) in space.support.iter().enumerate() {
            col_of[v] = j;
        }
        let touched: Vec<usize> = (0..self.mesh.n_triangles())
            .filter(|&e| self.mesh.triangles[e].iter().any(|&v| col_of[v] != usize::MAX))
            .collect();
        let mut a = CMat::zeros(points.len(), space.len());
        for (i, x) in points.iter().enumerate() {
            for &e in &touched {
                let vals = self.dlp_tri_entries(x, e, s);
                for (local, &v) in self.mesh.triangles[e].iter().enumerate() {
                    let j = col_of[v];
                    if j != usize::MAX {
                        let cur = a.get(i, j);
                        a.set(i, j, cur + vals[local]);
                    }
                }
            }
        }
        Ok(a)
    }

    /// Integral-free term by the static row-sum identity on a closed mesh:
    /// c_i = -(K_0 1)_i, so that C 1 + K_0 1 = 0 holds discretely.
    pub fn integral_free_term(&self, points: &[V3]) -> Result<Vec<f64>> {
        self.mesh.check_closed_oriented()?;
        let s0 = Complex64::new(0.0, 0.0);
        let mut c = vec![0.0; points.len()];
        for (i, x) in points.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for e in 0..self.mesh.n_triangles() {
                let vals = self.dlp_tri_entries(x, e, s0);
                acc += vals[0] + vals[1] + vals[2];
            }
            c[i] = -acc.re;
        }
        Ok(c)
    }
}

/// Evaluate the P1 hat function of `vertex` at a point of element `elem`
/// given its barycentric coordinates.
pub fn hat_value(mesh: &TriangleMesh, elem: usize, vertex: usize, lam: &[f64; 3]) -> f64 {
    mesh.triangles[elem]
        .iter()
        .position(|&v| v == vertex)
        .map(|local| lam[local])
        .unwrap_or(0.0)
}
