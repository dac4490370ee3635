//! PCA-based balanced cluster tree and the admissibility-partitioned block
//! cluster tree shared by the H-matrix compression.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // f64 math through libm in no_std builds
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geom::{Aabb, V3};

#[derive(Debug, Clone)]
pub struct ClusterNode {
    /// Contiguous range into the permutation array.
    pub begin: usize,
    pub end: usize,
    pub bbox: Aabb,
    /// Indices of the two children, or None for a leaf.
    pub children: Option<(usize, usize)>,
}

impl ClusterNode {
    pub fn len(&self) -> usize {
        self.end - self.begin
    }

    pub fn is_empty(&self) -> bool {
        self.begin == self.end
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

/// Balanced binary cluster tree over a point set; `perm[begin..end]` lists
/// the original point indices of each node.
#[derive(Debug, Clone)]
pub struct ClusterTree {
    pub nodes: Vec<ClusterNode>,
    pub perm: Vec<usize>,
    pub b_min: usize,
    pub depth: usize,
}

impl ClusterTree {
    pub fn root(&self) -> &ClusterNode {
        &self.nodes[0]
    }

    pub fn indices(&self, node: &ClusterNode) -> &[usize] {
        &self.perm[node.begin..node.end]
    }

    pub fn leaves(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].is_leaf()).collect()
    }
}

/// Dominant eigenvector of the covariance of `pts` (power iteration with a
/// coordinate-axis fallback for degenerate spreads).
fn principal_axis(pts: &[V3]) -> V3 {
    let n = pts.len() as f64;
    let mut mean = V3::ZERO;
    for p in pts {
        mean = mean + *p;
    }
    mean = mean.scale(1.0 / n);
    let mut cov = [[0.0f64; 3]; 3];
    for p in pts {
        let d = *p - mean;
        for i in 0..3 {
            for j in 0..3 {
                cov[i][j] += d.0[i] * d.0[j];
            }
        }
    }
    let trace = cov[0][0] + cov[1][1] + cov[2][2];
    if trace <= 1e-300 {
        return V3::new(1.0, 0.0, 0.0);
    }
    // start along the coordinate of largest variance; ties by coordinate order
    let mut start = 0;
    for d in 1..3 {
        if cov[d][d] > cov[start][start] {
            start = d;
        }
    }
    let mut v = V3::ZERO;
    v.0[start] = 1.0;
    for _ in 0..60 {
        let w = V3::new(
            cov[0][0] * v.0[0] + cov[0][1] * v.0[1] + cov[0][2] * v.0[2],
            cov[1][0] * v.0[0] + cov[1][1] * v.0[1] + cov[1][2] * v.0[2],
            cov[2][0] * v.0[0] + cov[2][1] * v.0[1] + cov[2][2] * v.0[2],
        );
        let nw = w.norm();
        if nw <= 1e-300 {
            break;
        }
        let w = w.scale(1.0 / nw);
        if (w - v).norm() < 1e-14 || (w + v).norm() < 1e-14 {
            v = w;
            break;
        }
        v = w;
    }
    v
}

/// Recursive median split along the dominant PCA axis; leaves hold at most
/// `b_min` points and sibling sizes differ by at most one.
pub fn build_cluster_tree(points: &[V3], b_min: usize) -> Result<ClusterTree> {
    if b_min == 0 {
        return Err(Error::Domain("b_min must be at least 1"));
    }
    if points.is_empty() {
        return Err(Error::Invalid("cluster tree needs at least one point"));
    }
    let mut perm: Vec<usize> = (0..points.len()).collect();
    let mut nodes: Vec<ClusterNode> = Vec::new();
    nodes.push(ClusterNode {
        begin: 0,
        end: points.len(),
        bbox: Aabb::from_points(points.iter()),
        children: None,
    });
    let mut stack = vec![(0usize, 0usize)]; // (node, depth)
    let mut depth_max = 1;
    while let Some((ni, depth)) = stack.pop() {
        depth_max = depth_max.max(depth + 1);
        let (begin, end) = (nodes[ni].begin, nodes[ni].end);
        if end - begin <= b_min {
            continue;
        }
        let pts: Vec<V3> = perm[begin..end].iter().map(|&i| points[i]).collect();
        let axis = principal_axis(&pts);
        // sort the slice by projection, ties broken by coordinate order
        perm[begin..end].sort_by(|&a, &b| {
            let pa = points[a].dot(&axis);
            let pb = points[b].dot(&axis);
            pa.partial_cmp(&pb)
                .unwrap()
                .then_with(|| {
                    points[a].0
                        .partial_cmp(&points[b].0)
                        .unwrap_or(core::cmp::Ordering::Equal)
                })
        });
        let mid = begin + (end - begin) / 2;
        let left = ClusterNode {
            begin,
            end: mid,
            bbox: Aabb::from_points(perm[begin..mid].iter().map(|&i| &points[i])),
            children: None,
        };
        let right = ClusterNode {
            begin: mid,
            end,
            bbox: Aabb::from_points(perm[mid..end].iter().map(|&i| &points[i])),
            children: None,
        };
        let li = nodes.len();
        nodes.push(left);
        let ri = nodes.len();
        nodes.push(right);
        nodes[ni].children = Some((li, ri));
        stack.push((li, depth + 1));
        stack.push((ri, depth + 1));
    }
    Ok(ClusterTree { nodes, perm, b_min, depth: depth_max })
}

/// One block of the partition: a pair of cluster-node indices.
#[derive(Debug, Clone, Copy)]
pub struct Block {
    pub row_node: usize,
    pub col_node: usize,
    pub admissible: bool,
}

/// Partition of the full index product into admissible (far-field) blocks and
/// inadmissible (near-field) leaves.
#[derive(Debug, Clone)]
pub struct BlockClusterTree {
    pub blocks: Vec<Block>,
    pub eta: f64,
}

impl BlockClusterTree {
    pub fn n_admissible(&self) -> usize {
        self.blocks.iter().filter(|b| b.admissible).count()
    }
}

/// Admissibility by bounding boxes: min(diam, diam) <= eta * dist.
pub fn is_admissible(a: &Aabb, b: &Aabb, eta: f64) -> bool {
    let d = a.diameter().min(b.diameter());
    d <= eta * a.distance(b)
}

/// Recursive block partition; a block is admissible by the distance
/// criterion, a near-field leaf when both clusters are leaves, otherwise it
/// is subdivided (the larger cluster splits when only one has children).
pub fn build_block_tree(rows: &ClusterTree, cols: &ClusterTree, eta: f64) -> Result<BlockClusterTree> {
    if !(eta > 0.0) {
        return Err(Error::Domain("eta must be positive"));
    }
    let mut blocks = Vec::new();
    let mut stack = vec![(0usize, 0usize)];
    while let Some((ri, ci)) = stack.pop() {
        let rn = &rows.nodes[ri];
        let cn = &cols.nodes[ci];
        if is_admissible(&rn.bbox, &cn.bbox, eta) {
            blocks.push(Block { row_node: ri, col_node: ci, admissible: true });
            continue;
        }
        match (rn.children, cn.children) {
            (None, None) => blocks.push(Block { row_node: ri, col_node: ci, admissible: false }),
            (Some((l, r)), None) => {
                stack.push((l, ci));
                stack.push((r, ci));
            }
            (None, Some((l, r))) => {
                stack.push((ri, l));
                stack.push((ri, r));
            }
            (Some((rl, rr)), Some((cl, cr))) => {
                stack.push((rl, cl));
                stack.push((rl, cr));
                stack.push((rr, cl));
                stack.push((rr, cr));
            }
        }
    }
    Ok(BlockClusterTree { blocks, eta })
}
