use crate::transform::{cross3, det3, Matrix3, Point3};

/// Affine data of one tetrahedron of the reference mesh.
#[derive(Debug, Clone, Copy)]
pub struct TetGeometry {
    pub origin: Point3,
    /// Columns are `p1 - p0`, `p2 - p0`, `p3 - p0`.
    pub edges: Matrix3,
    pub volume: f64,
    /// Gradients of the four barycentric coordinates.
    pub grads: [Point3; 4],
}

impl TetGeometry {
    pub fn new(p: &[Point3; 4]) -> Self {
        let e = [0, 1, 2].map(|k| [p[k + 1][0] - p[0][0], p[k + 1][1] - p[0][1], p[k + 1][2] - p[0][2]]);
        let edges = [
            [e[0][0], e[1][0], e[2][0]],
            [e[0][1], e[1][1], e[2][1]],
            [e[0][2], e[1][2], e[2][2]],
        ];
        let det = det3(&edges);
        // rows of edges^{-1}: the reciprocal basis
        let g1 = cross3(&e[1], &e[2]).map(|v| v / det);
        let g2 = cross3(&e[2], &e[0]).map(|v| v / det);
        let g3 = cross3(&e[0], &e[1]).map(|v| v / det);
        let g0 = [0, 1, 2].map(|i| -(g1[i] + g2[i] + g3[i]));
        Self {
            origin: p[0],
            edges,
            volume: det.abs() / 6.0,
            grads: [g0, g1, g2, g3],
        }
    }

    /// Map a point of the unit reference simplex into the tetrahedron.
    pub fn map(&self, xi: &Point3) -> Point3 {
        let mut x = self.origin;
        for (r, xr) in x.iter_mut().enumerate() {
            *xr += self.edges[r][0] * xi[0] + self.edges[r][1] * xi[1] + self.edges[r][2] * xi[2];
        }
        x
    }
}

pub fn barycentric(xi: &Point3) -> [f64; 4] {
    [1.0 - xi[0] - xi[1] - xi[2], xi[0], xi[1], xi[2]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::dot3;

    #[test]
    fn gradients_are_dual_to_vertices() {
        let p = [
            [0.1, -0.2, 0.0],
            [1.0, 0.1, 0.2],
            [0.0, 0.9, -0.1],
            [0.2, 0.3, 1.1],
        ];
        let geo = TetGeometry::new(&p);
        for (a, ga) in geo.grads.iter().enumerate() {
            for (b, pb) in p.iter().enumerate() {
                let value = dot3(ga, &[pb[0] - p[0][0], pb[1] - p[0][1], pb[2] - p[0][2]])
                    + if a == 0 { 1.0 } else { 0.0 };
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((value - expected).abs() < 1e-14, "{a} {b} {value}");
            }
        }
        let mapped = geo.map(&[0.0, 0.0, 1.0]);
        for k in 0..3 {
            assert!((mapped[k] - p[3][k]).abs() < 1e-15);
        }
    }
}
