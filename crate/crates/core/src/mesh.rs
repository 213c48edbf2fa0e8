//! Periodic polar quadrilateral mesh of the unit disc.
//!
//! The grid is uniform in `(r, θ)`: `r_i = i/m_r`, `θ_j = 2πj/n_θ`. All nodes
//! on `r = 0` are merged into one origin node, so the innermost ring holds
//! degenerate quadrilaterals whose inner edge collapses to a point. Column
//! `n_θ − 1` wraps onto column 0.
//!
//! Node numbering puts the origin first and the boundary ring last:
//! node `(i, j)` with `i >= 1` has id `1 + (i − 1)·n_θ + j`. Eliminating the
//! Dirichlet boundary therefore just truncates to the first [`Mesh::n_dof`]
//! ids, and the degree-of-freedom index of an unknown equals its node id.

use core::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::point::PolarPoint;

/// Three-point Gauss-Legendre rule on `[−1, 1]` as `(node, weight)`.
pub const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

/// Bilinear shape functions on the reference square, corners ordered
/// `(−1,−1), (1,−1), (1,1), (−1,1)`.
pub fn shape(xi: f64, eta: f64) -> [f64; 4] {
    [
        0.25 * (1.0 - xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 + eta),
        0.25 * (1.0 - xi) * (1.0 + eta),
    ]
}

/// `(∂N/∂ξ, ∂N/∂η)` for each corner.
pub fn shape_grad(xi: f64, eta: f64) -> [[f64; 2]; 4] {
    [
        [-0.25 * (1.0 - eta), -0.25 * (1.0 - xi)],
        [0.25 * (1.0 - eta), -0.25 * (1.0 + xi)],
        [0.25 * (1.0 + eta), 0.25 * (1.0 + xi)],
        [-0.25 * (1.0 + eta), 0.25 * (1.0 - xi)],
    ]
}

/// Element containing a point together with its reference coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    pub element: usize,
    pub xi: f64,
    pub eta: f64,
}

impl Location {
    /// Distance to the nearest element edge in reference coordinates.
    pub fn edge_distance(&self) -> f64 {
        (1.0 - libm::fabs(self.xi)).min(1.0 - libm::fabs(self.eta))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    m_r: usize,
    n_theta: usize,
}

pub fn build_mesh(m_r: usize, n_theta: usize) -> Result<Mesh> {
    if m_r < 2 {
        return Err(Error::InvalidMesh("need at least 2 radial subdivisions"));
    }
    if n_theta < 4 {
        return Err(Error::InvalidMesh("need at least 4 angular subdivisions"));
    }
    Ok(Mesh { m_r, n_theta })
}

impl Mesh {
    pub fn m_r(&self) -> usize {
        self.m_r
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn dr(&self) -> f64 {
        1.0 / self.m_r as f64
    }

    pub fn dtheta(&self) -> f64 {
        TAU / self.n_theta as f64
    }

    pub fn n_nodes(&self) -> usize {
        self.m_r * self.n_theta + 1
    }

    pub fn n_elements(&self) -> usize {
        self.m_r * self.n_theta
    }

    /// Unknowns left after removing the boundary ring.
    pub fn n_dof(&self) -> usize {
        (self.m_r - 1) * self.n_theta + 1
    }

    pub const ORIGIN: usize = 0;

    /// Id of the node at ring `i`, column `j` (columns wrap).
    pub fn node(&self, i: usize, j: usize) -> usize {
        if i == 0 {
            Self::ORIGIN
        } else {
            1 + (i - 1) * self.n_theta + j % self.n_theta
        }
    }

    pub fn node_position(&self, id: usize) -> PolarPoint {
        if id == Self::ORIGIN {
            return PolarPoint { r: 0.0, theta: 0.0 };
        }
        let i = (id - 1) / self.n_theta + 1;
        let j = (id - 1) % self.n_theta;
        PolarPoint {
            r: i as f64 * self.dr(),
            theta: j as f64 * self.dtheta(),
        }
    }

    pub fn is_boundary(&self, id: usize) -> bool {
        id >= self.n_dof()
    }

    pub fn boundary_nodes(&self) -> core::ops::Range<usize> {
        self.n_dof()..self.n_nodes()
    }

    /// Degree-of-freedom index of a node, `None` on the Dirichlet boundary.
    pub fn dof(&self, id: usize) -> Option<usize> {
        (id < self.n_dof()).then_some(id)
    }

    pub fn element_id(&self, i: usize, j: usize) -> usize {
        i * self.n_theta + j
    }

    /// `(ring, column)` of an element.
    pub fn element_index(&self, e: usize) -> (usize, usize) {
        (e / self.n_theta, e % self.n_theta)
    }

    /// Corner node ids in reference order. For ring 0 the first and last
    /// corners are both the origin.
    pub fn element_nodes(&self, e: usize) -> [usize; 4] {
        let (i, j) = self.element_index(e);
        [self.node(i, j), self.node(i + 1, j), self.node(i + 1, j + 1), self.node(i, j + 1)]
    }

    /// Isoparametric map of an element. Angles are not wrapped, so the last
    /// column maps onto `[θ_{n−1}, 2π]`.
    pub fn map_to_physical(&self, e: usize, xi: f64, eta: f64) -> (f64, f64) {
        let (i, j) = self.element_index(e);
        let r = (i as f64 + 0.5 * (1.0 + xi)) * self.dr();
        let theta = (j as f64 + 0.5 * (1.0 + eta)) * self.dtheta();
        (r, theta)
    }

    /// Element containing `p`. Points on an interior edge belong to the
    /// element with the lower ring (then column) index.
    pub fn locate(&self, p: PolarPoint) -> Result<Location> {
        if !(p.r >= 0.0 && p.r < 1.0) {
            return Err(Error::OutOfDomain { r: p.r, theta: p.theta });
        }
        let theta = crate::point::wrap_angle(p.theta);
        let ring = (libm::ceil(p.r * self.m_r as f64) as usize).saturating_sub(1).min(self.m_r - 1);
        let col = (libm::ceil(theta / self.dtheta()) as usize).saturating_sub(1).min(self.n_theta - 1);
        let xi = 2.0 * (p.r * self.m_r as f64 - ring as f64) - 1.0;
        let eta = 2.0 * (theta / self.dtheta() - col as f64) - 1.0;
        Ok(Location {
            element: self.element_id(ring, col),
            xi: xi.clamp(-1.0, 1.0),
            eta: eta.clamp(-1.0, 1.0),
        })
    }

    /// `∫∫ r dr dθ` over one element by 3×3 Gauss quadrature.
    pub fn element_area(&self, e: usize) -> f64 {
        let jac = 0.25 * self.dr() * self.dtheta();
        let mut area = 0.0;
        for &(xi, wx) in &GAUSS3 {
            for &(eta, we) in &GAUSS3 {
                let (r, _) = self.map_to_physical(e, xi, eta);
                area += wx * we * r * jac;
            }
        }
        area
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{FRAC_PI_4, PI};

    #[test]
    fn smallest_mesh_counts() {
        let m = build_mesh(2, 4).unwrap();
        assert_eq!(m.n_nodes(), 9);
        assert_eq!(m.n_elements(), 8);
        assert_eq!(m.boundary_nodes().len(), 4);
        assert_eq!(m.n_dof(), 5);
    }

    #[test]
    fn rejects_small_parameters() {
        assert!(build_mesh(1, 8).is_err());
        assert!(build_mesh(4, 3).is_err());
    }

    #[test]
    fn inner_elements_collapse_to_origin() {
        let m = build_mesh(3, 6).unwrap();
        for j in 0..6 {
            let nodes = m.element_nodes(m.element_id(0, j));
            assert_eq!(nodes[0], Mesh::ORIGIN);
            assert_eq!(nodes[3], Mesh::ORIGIN);
        }
    }

    #[test]
    fn last_column_wraps() {
        let m = build_mesh(3, 6).unwrap();
        let nodes = m.element_nodes(m.element_id(1, 5));
        assert_eq!(nodes[2], m.node(2, 0));
        assert_eq!(nodes[3], m.node(1, 0));
    }

    #[test]
    fn shape_corners_and_centre() {
        assert_eq!(shape(-1.0, -1.0), [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(shape(1.0, -1.0), [0.0, 1.0, 0.0, 0.0]);
        assert_eq!(shape(1.0, 1.0), [0.0, 0.0, 1.0, 0.0]);
        assert_eq!(shape(-1.0, 1.0), [0.0, 0.0, 0.0, 1.0]);
        assert_eq!(shape(0.0, 0.0), [0.25; 4]);
    }

    #[test]
    fn locate_cell_midpoint() {
        let m = build_mesh(2, 4).unwrap();
        let loc = m.locate(PolarPoint::new(0.25, FRAC_PI_4).unwrap()).unwrap();
        assert_eq!(loc.element, 0);
        assert!(loc.xi.abs() < 1e-15 && loc.eta.abs() < 1e-15);
    }

    #[test]
    fn locate_ties_go_to_lower_index() {
        let m = build_mesh(4, 8).unwrap();
        let loc = m.locate(PolarPoint::new(0.5, PI / 4.0).unwrap()).unwrap();
        assert_eq!(m.element_index(loc.element), (1, 0));
        assert_eq!((loc.xi, loc.eta), (1.0, 1.0));
        assert!(m.locate(PolarPoint::new(1.0, 0.0).unwrap()).is_err());
    }

    #[test]
    fn node_positions() {
        let m = build_mesh(4, 8).unwrap();
        let p = m.node_position(m.node(3, 5));
        assert!((p.r - 0.75).abs() < 1e-15 && (p.theta - 5.0 * PI / 4.0).abs() < 1e-15);
        assert!(m.is_boundary(m.node(4, 0)));
        assert!(!m.is_boundary(m.node(3, 7)));
    }
}
