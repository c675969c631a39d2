//! Uniform nested triangulations of axis-aligned rectangles.
//!
//! Level `k` splits each side into `n = 2^k` cells and every cell into two
//! triangles along its lower-left to upper-right diagonal. Nodes are numbered
//! lexicographically with `x` running fastest. Boundary nodes carry no degree
//! of freedom (homogeneous Dirichlet condition), interior nodes are numbered in
//! the same lexicographic order.

use alloc::vec::Vec;

use crate::field::FeField;
use crate::math::sqrt;
use crate::{Error, Result, C64};

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        let r = Self { x0, y0, x1, y1 };
        r.validate()?;
        Ok(r)
    }

    /// The square `[-half, half]²`.
    pub fn centered_square(half: f64) -> Result<Self> {
        Self::new(-half, -half, half, half)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x0, self.y0, self.x1, self.y1]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x1 <= self.x0 || self.y1 <= self.y0 {
            return Err(Error::InvalidDomain);
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> [f64; 2] {
        [0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1)]
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    domain: Rect,
    level: u32,
    cells: usize,
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    node_to_dof: Vec<Option<usize>>,
    dof_to_node: Vec<usize>,
    h: f64,
}

impl Mesh {
    pub fn uniform(domain: Rect, level: u32) -> Result<Self> {
        domain.validate()?;
        if level > 12 {
            return Err(Error::param("level", "at most 12"));
        }
        let n = 1usize << level;
        let hx = domain.width() / n as f64;
        let hy = domain.height() / n as f64;

        let mut nodes = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                nodes.push([domain.x0 + i as f64 * hx, domain.y0 + j as f64 * hy]);
            }
        }

        let idx = |i: usize, j: usize| j * (n + 1) + i;
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (v00, v10, v01, v11) = (idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1));
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }

        let mut node_to_dof = alloc::vec![None; nodes.len()];
        let mut dof_to_node = Vec::with_capacity(n.saturating_sub(1).pow(2));
        for j in 1..n {
            for i in 1..n {
                node_to_dof[idx(i, j)] = Some(dof_to_node.len());
                dof_to_node.push(idx(i, j));
            }
        }

        Ok(Self {
            domain,
            level,
            cells: n,
            nodes,
            triangles,
            node_to_dof,
            dof_to_node,
            h: sqrt(hx * hx + hy * hy),
        })
    }

    pub fn domain(&self) -> Rect {
        self.domain
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Cells per side, `2^level`.
    pub fn cells_per_side(&self) -> usize {
        self.cells
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_dofs(&self) -> usize {
        self.dof_to_node.len()
    }

    pub fn dof_of_node(&self, node: usize) -> Option<usize> {
        self.node_to_dof[node]
    }

    pub fn node_of_dof(&self, dof: usize) -> usize {
        self.dof_to_node[dof]
    }

    /// Element diameter (cell diagonal).
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Mesh size relative to `√2 · side`, i.e. `2^-level` on squares.
    pub fn h_rel(&self) -> f64 {
        1.0 / self.cells as f64
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.cells + 1) + i
    }

    pub fn triangle_coords(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    /// Degrees of freedom of the vertices of triangle `t`.
    pub fn triangle_dofs(&self, t: usize) -> [Option<usize>; 3] {
        let [a, b, c] = self.triangles[t];
        [self.node_to_dof[a], self.node_to_dof[b], self.node_to_dof[c]]
    }

    pub fn is_nested_in(&self, fine: &Mesh) -> bool {
        self.domain == fine.domain && self.level <= fine.level
    }

    /// Nodal values of a function at the interior nodes.
    pub fn interpolate<F: Fn([f64; 2]) -> C64>(&self, f: F) -> FeField {
        let coeffs = self.dof_to_node.iter().map(|&n| f(self.nodes[n])).collect();
        FeField::from_coeffs(self, coeffs)
    }

    /// Value of the piecewise linear function with the given full nodal
    /// values at an arbitrary point of the domain.
    pub fn evaluate_nodal(&self, nodal: &[C64], p: [f64; 2]) -> C64 {
        let n = self.cells;
        let sx = (p[0] - self.domain.x0) / self.domain.width() * n as f64;
        let sy = (p[1] - self.domain.y0) / self.domain.height() * n as f64;
        let i = (crate::math::floor(sx).max(0.0) as usize).min(n - 1);
        let j = (crate::math::floor(sy).max(0.0) as usize).min(n - 1);
        let xi = sx - i as f64;
        let eta = sy - j as f64;
        let v00 = nodal[self.node_index(i, j)];
        let v10 = nodal[self.node_index(i + 1, j)];
        let v01 = nodal[self.node_index(i, j + 1)];
        let v11 = nodal[self.node_index(i + 1, j + 1)];
        if xi >= eta {
            v00 * (1.0 - xi) + v10 * (xi - eta) + v11 * eta
        } else {
            v00 * (1.0 - eta) + v01 * (eta - xi) + v11 * xi
        }
    }
}

/// Represents a coarse field exactly on a finer nested mesh.
pub fn prolongate(coarse_mesh: &Mesh, coarse: &FeField, fine: &Mesh) -> Result<FeField> {
    coarse.check_mesh(coarse_mesh)?;
    if coarse_mesh.domain != fine.domain {
        return Err(Error::IncompatibleMesh("different domains"));
    }
    if fine.level < coarse_mesh.level {
        return Err(Error::IncompatibleMesh("target mesh is coarser than the source"));
    }
    if fine.level == coarse_mesh.level {
        return Ok(coarse.clone());
    }
    let nodal = coarse.nodal_values(coarse_mesh);
    let ratio = 1usize << (fine.level - coarse_mesh.level);
    let nc = coarse_mesh.cells;
    let coeffs = fine
        .dof_to_node
        .iter()
        .map(|&node| {
            let fi = node % (fine.cells + 1);
            let fj = node / (fine.cells + 1);
            let (i, j) = ((fi / ratio).min(nc - 1), (fj / ratio).min(nc - 1));
            // local coordinates are dyadic, hence exact
            let xi = (fi - i * ratio) as f64 / ratio as f64;
            let eta = (fj - j * ratio) as f64 / ratio as f64;
            let v00 = nodal[coarse_mesh.node_index(i, j)];
            let v10 = nodal[coarse_mesh.node_index(i + 1, j)];
            let v01 = nodal[coarse_mesh.node_index(i, j + 1)];
            let v11 = nodal[coarse_mesh.node_index(i + 1, j + 1)];
            if xi >= eta {
                v00 * (1.0 - xi) + v10 * (xi - eta) + v11 * eta
            } else {
                v00 * (1.0 - eta) + v01 * (eta - xi) + v11 * xi
            }
        })
        .collect();
    Ok(FeField::from_coeffs(fine, coeffs))
}
