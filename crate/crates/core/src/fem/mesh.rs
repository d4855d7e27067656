use crate::error::{Error, Result};
use crate::transform::{cross3, det3, norm3, sub3, Point3};

/// Kuhn split of the unit cube: the six monotone lattice paths from corner
/// `000` to corner `111`, one per axis permutation.
const KUHN_PATHS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// Local vertex pairs of the six tetrahedron edges.
pub const TET_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

const TET_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFace {
    pub vertices: [usize; 3],
    pub normal: Point3,
    /// `0..6` for the faces `x1 = -1, x1 = +1, x2 = -1, x2 = +1, x3 = -1, x3 = +1`.
    pub face_id: u8,
}

/// Tetrahedral mesh of the reference cube `(-1, 1)^3`.
///
/// Edges are stored once, oriented from the lower to the higher global vertex
/// index, and numbered in lexicographic order of that pair.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub n: usize,
    pub vertices: Vec<Point3>,
    pub tets: Vec<[usize; 4]>,
    pub boundary_faces: Vec<BoundaryFace>,
    pub edges: Vec<[usize; 2]>,
    /// Global edge index of each local edge in [`TET_EDGES`] order.
    pub tet_edges: Vec<[usize; 6]>,
    pub boundary_edge: Vec<bool>,
}

pub fn build_cube_mesh(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "mesh needs at least one cell per side".into(),
        ));
    }
    let np = n + 1;
    let index = |i: usize, j: usize, k: usize| i + np * (j + np * k);
    let coord = |i: usize| -1.0 + 2.0 * i as f64 / n as f64;

    let mut vertices = Vec::with_capacity(np * np * np);
    for k in 0..np {
        for j in 0..np {
            for i in 0..np {
                vertices.push([coord(i), coord(j), coord(k)]);
            }
        }
    }

    let mut tets = Vec::with_capacity(6 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                for path in KUHN_PATHS {
                    let mut corner = [i, j, k];
                    let mut tet = [index(i, j, k), 0, 0, 0];
                    for (step, axis) in path.iter().enumerate() {
                        corner[*axis] += 1;
                        tet[step + 1] = index(corner[0], corner[1], corner[2]);
                    }
                    if signed_volume(&vertices, &tet) < 0.0 {
                        tet.swap(2, 3);
                    }
                    tets.push(tet);
                }
            }
        }
    }
    Mesh::from_parts(n, vertices, tets)
}

fn signed_volume(vertices: &[Point3], tet: &[usize; 4]) -> f64 {
    let p0 = vertices[tet[0]];
    let m = [
        sub3(&vertices[tet[1]], &p0),
        sub3(&vertices[tet[2]], &p0),
        sub3(&vertices[tet[3]], &p0),
    ];
    det3(&m) / 6.0
}

impl Mesh {
    /// Derive edges and boundary faces from vertices and tetrahedra. The
    /// vertices must discretize the reference cube.
    pub fn from_parts(n: usize, vertices: Vec<Point3>, tets: Vec<[usize; 4]>) -> Result<Mesh> {
        let mut edges: Vec<[usize; 2]> = tets
            .iter()
            .flat_map(|t| TET_EDGES.map(|[a, b]| ordered_pair(t[a], t[b])))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        let edge_id = |a: usize, b: usize| {
            edges
                .binary_search(&ordered_pair(a, b))
                .expect("edge collected from the same tetrahedra")
        };
        let tet_edges = tets
            .iter()
            .map(|t| TET_EDGES.map(|[a, b]| edge_id(t[a], t[b])))
            .collect();

        let mut faces: Vec<[usize; 3]> = tets
            .iter()
            .flat_map(|t| {
                TET_FACES.map(|f| {
                    let mut tri = [t[f[0]], t[f[1]], t[f[2]]];
                    tri.sort_unstable();
                    tri
                })
            })
            .collect();
        faces.sort_unstable();
        let mut boundary_faces = Vec::new();
        let mut i = 0;
        while i < faces.len() {
            let mut j = i + 1;
            while j < faces.len() && faces[j] == faces[i] {
                j += 1;
            }
            match j - i {
                1 => boundary_faces.push(classify_face(&vertices, faces[i])?),
                2 => {}
                count => {
                    return Err(Error::InvalidArgument(format!(
                        "face {:?} shared by {count} tetrahedra",
                        faces[i]
                    )))
                }
            }
            i = j;
        }

        let mut boundary_edge = vec![false; edges.len()];
        for face in &boundary_faces {
            let [a, b, c] = face.vertices;
            for (p, q) in [(a, b), (a, c), (b, c)] {
                boundary_edge[edge_id(p, q)] = true;
            }
        }

        Ok(Mesh {
            n,
            vertices,
            tets,
            boundary_faces,
            edges,
            tet_edges,
            boundary_edge,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn tet_vertices(&self, t: usize) -> [Point3; 4] {
        self.tets[t].map(|v| self.vertices[v])
    }

    pub fn tet_volume(&self, t: usize) -> f64 {
        signed_volume(&self.vertices, &self.tets[t]).abs()
    }

    pub fn face_area(&self, face: &BoundaryFace) -> f64 {
        let [a, b, c] = face.vertices.map(|v| self.vertices[v]);
        0.5 * norm3(&cross3(&sub3(&b, &a), &sub3(&c, &a)))
    }

    /// Vertices lying strictly inside the cube.
    pub fn interior_vertices(&self) -> Vec<usize> {
        (0..self.vertices.len())
            .filter(|&v| self.vertices[v].iter().all(|c| c.abs() < 1.0))
            .collect()
    }
}

fn ordered_pair(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

fn classify_face(vertices: &[Point3], tri: [usize; 3]) -> Result<BoundaryFace> {
    let pts = tri.map(|v| vertices[v]);
    for axis in 0..3 {
        for (side, sign) in [(0u8, -1.0), (1u8, 1.0)] {
            if pts.iter().all(|p| p[axis] == sign) {
                let mut normal = [0.0; 3];
                normal[axis] = sign;
                return Ok(BoundaryFace {
                    vertices: tri,
                    normal,
                    face_id: 2 * axis as u8 + side,
                });
            }
        }
    }
    Err(Error::InvalidArgument(format!(
        "unshared face {tri:?} does not lie on the cube boundary"
    )))
}
