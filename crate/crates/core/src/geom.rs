//! Small 3D vector/triangle primitives used by the mesh, quadrature and
//! assembly modules.

#[allow(unused_imports)] // f64 math through libm in no_std builds
use num_traits::Float;

/// 3D point/vector in Cartesian coordinates (meters).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct V3(pub [f64; 3]);

impl V3 {
    pub const ZERO: V3 = V3([0.0; 3]);

    #[inline]
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        V3([x, y, z])
    }
    #[inline]
    pub fn x(&self) -> f64 {
        self.0[0]
    }
    #[inline]
    pub fn y(&self) -> f64 {
        self.0[1]
    }
    #[inline]
    pub fn z(&self) -> f64 {
        self.0[2]
    }
    #[inline]
    pub fn dot(&self, o: &V3) -> f64 {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }
    #[inline]
    pub fn cross(&self, o: &V3) -> V3 {
        V3([
            self.0[1] * o.0[2] - self.0[2] * o.0[1],
            self.0[2] * o.0[0] - self.0[0] * o.0[2],
            self.0[0] * o.0[1] - self.0[1] * o.0[0],
        ])
    }
    #[inline]
    pub fn norm2(&self) -> f64 {
        self.dot(self)
    }
    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm2().sqrt()
    }
    #[inline]
    pub fn scale(&self, s: f64) -> V3 {
        V3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
    #[inline]
    pub fn normalized(&self) -> V3 {
        self.scale(1.0 / self.norm())
    }
    #[inline]
    pub fn dist(&self, o: &V3) -> f64 {
        (*self - *o).norm()
    }
}

impl core::ops::Add for V3 {
    type Output = V3;
    #[inline]
    fn add(self, o: V3) -> V3 {
        V3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl core::ops::Sub for V3 {
    type Output = V3;
    #[inline]
    fn sub(self, o: V3) -> V3 {
        V3([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

/// A triangle given by its three corner points, with cached geometry.
#[derive(Debug, Clone, Copy)]
pub struct Triangle {
    pub v: [V3; 3],
}

impl Triangle {
    pub fn new(a: V3, b: V3, c: V3) -> Self {
        Triangle { v: [a, b, c] }
    }

    /// Twice the (signed-direction) area vector; points along the normal.
    #[inline]
    pub fn area_vector(&self) -> V3 {
        (self.v[1] - self.v[0]).cross(&(self.v[2] - self.v[0]))
    }

    #[inline]
    pub fn area(&self) -> f64 {
        0.5 * self.area_vector().norm()
    }

    #[inline]
    pub fn unit_normal(&self) -> V3 {
        self.area_vector().normalized()
    }

    #[inline]
    pub fn centroid(&self) -> V3 {
        (self.v[0] + self.v[1] + self.v[2]).scale(1.0 / 3.0)
    }

    /// Map reference coordinates (ξ, η) with ξ,η ≥ 0, ξ+η ≤ 1 to a point.
    #[inline]
    pub fn map_ref(&self, xi: f64, eta: f64) -> V3 {
        self.v[0] + (self.v[1] - self.v[0]).scale(xi) + (self.v[2] - self.v[0]).scale(eta)
    }

    /// Longest edge length; the local mesh width of the element.
    pub fn max_edge(&self) -> f64 {
        let e0 = self.v[1].dist(&self.v[0]);
        let e1 = self.v[2].dist(&self.v[1]);
        let e2 = self.v[0].dist(&self.v[2]);
        e0.max(e1).max(e2)
    }

    /// Barycentric coordinates of the in-plane projection of `p`,
    /// plus the signed off-plane distance.
    pub fn barycentric(&self, p: &V3) -> ([f64; 3], f64) {
        let n = self.unit_normal();
        let d_plane = (*p - self.v[0]).dot(&n);
        let q = *p - n.scale(d_plane);
        let e1 = self.v[1] - self.v[0];
        let e2 = self.v[2] - self.v[0];
        let w = q - self.v[0];
        let d11 = e1.dot(&e1);
        let d12 = e1.dot(&e2);
        let d22 = e2.dot(&e2);
        let dw1 = w.dot(&e1);
        let dw2 = w.dot(&e2);
        let det = d11 * d22 - d12 * d12;
        let l1 = (d22 * dw1 - d12 * dw2) / det;
        let l2 = (d11 * dw2 - d12 * dw1) / det;
        ([1.0 - l1 - l2, l1, l2], d_plane)
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy)]
pub struct Aabb {
    pub lo: V3,
    pub hi: V3,
}

impl Aabb {
    pub fn empty() -> Self {
        Aabb {
            lo: V3([f64::INFINITY; 3]),
            hi: V3([f64::NEG_INFINITY; 3]),
        }
    }

    pub fn insert(&mut self, p: &V3) {
        for d in 0..3 {
            self.lo.0[d] = self.lo.0[d].min(p.0[d]);
            self.hi.0[d] = self.hi.0[d].max(p.0[d]);
        }
    }

    pub fn from_points<'a>(pts: impl Iterator<Item = &'a V3>) -> Self {
        let mut b = Self::empty();
        for p in pts {
            b.insert(p);
        }
        b
    }

    /// Box diagonal length.
    pub fn diameter(&self) -> f64 {
        (self.hi - self.lo).norm()
    }

    /// Distance between two boxes (0 if they overlap).
    pub fn distance(&self, o: &Aabb) -> f64 {
        let mut s = 0.0;
        for d in 0..3 {
            let gap = (self.lo.0[d] - o.hi.0[d]).max(o.lo.0[d] - self.hi.0[d]).max(0.0);
            s += gap * gap;
        }
        s.sqrt()
    }
}
