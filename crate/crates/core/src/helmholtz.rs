//! Helmholtz impedance problem pulled back to the reference cube and
//! discretized with continuous piecewise-linear elements.
//!
//! On the deformed domain `D(y)` the problem reads
//! `-Δu - κ²u = f` with `∂u/∂ν - iκu = g` on the boundary. After the change
//! of variables the system matrix is `A = S - κ²M - iκB` with
//!
//! * `S_ij = ∫ J (G∇φ_j)·(G∇φ_i)` where `G = dT^{-T}`,
//! * `M_ij = ∫ J φ_j φ_i`,
//! * `B_ij = ∫_Γ J_S φ_j φ_i`,
//!
//! and load `b_i = ∫ J f(T) φ_i + ∫_Γ J_S g(T, ν) φ_i`. All three matrices
//! are real symmetric, so `A` is complex symmetric.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fem::{
    barycentric, build_cube_mesh, check_param_dim, map_blocks, sparse::linear_combination,
    tet_quadrature, triangle_quadrature, DofKind, DofVector, FullOrderModel, LinearSystem, Mesh,
    RealSparseMatrix, TetGeometry, TetRule, TriangleRule, TripletBuilder,
};
use crate::transform::{dot3, mat_vec, norm3, sub3, DecaySpec, Deformation, DeformedMap, ParamPoint, Point3};

pub type ScalarField = Arc<dyn Fn(&Point3) -> Complex64 + Send + Sync>;
/// Boundary datum evaluated at a physical point with the physical outward
/// unit normal.
pub type BoundaryField = Arc<dyn Fn(&Point3, &Point3) -> Complex64 + Send + Sync>;

/// Source and impedance data, given on the physical domain.
#[derive(Clone)]
pub enum HelmholtzData {
    Constant { f: Complex64, g: Complex64 },
    /// Data matched to the plane wave `exp(iκ d·x)`: `f = 0` and
    /// `g = iκ(d·ν - 1) u`.
    PlaneWave { direction: Point3 },
    /// Data matched to `u = x₁²`.
    Quadratic,
    Custom { f: ScalarField, g: BoundaryField },
}

impl Default for HelmholtzData {
    fn default() -> Self {
        HelmholtzData::Constant {
            f: Complex64::new(1.0, 0.0),
            g: Complex64::new(0.0, 0.0),
        }
    }
}

impl fmt::Debug for HelmholtzData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HelmholtzData::Constant { f: fv, g } => {
                f.debug_struct("Constant").field("f", fv).field("g", g).finish()
            }
            HelmholtzData::PlaneWave { direction } => f
                .debug_struct("PlaneWave")
                .field("direction", direction)
                .finish(),
            HelmholtzData::Quadratic => f.write_str("Quadratic"),
            HelmholtzData::Custom { .. } => f.write_str("Custom"),
        }
    }
}

impl HelmholtzData {
    fn source(&self, kappa: f64, x: &Point3) -> Complex64 {
        match self {
            HelmholtzData::Constant { f, .. } => *f,
            HelmholtzData::PlaneWave { .. } => Complex64::new(0.0, 0.0),
            HelmholtzData::Quadratic => Complex64::new(-2.0 - kappa * kappa * x[0] * x[0], 0.0),
            HelmholtzData::Custom { f, .. } => f(x),
        }
    }

    fn boundary(&self, kappa: f64, x: &Point3, normal: &Point3) -> Complex64 {
        let i = Complex64::new(0.0, 1.0);
        match self {
            HelmholtzData::Constant { g, .. } => *g,
            HelmholtzData::PlaneWave { direction } => {
                let (u, _) = plane_wave(kappa, direction, x);
                i * kappa * (dot3(direction, normal) - 1.0) * u
            }
            HelmholtzData::Quadratic => {
                Complex64::new(2.0 * x[0] * normal[0], 0.0) - i * kappa * x[0] * x[0]
            }
            HelmholtzData::Custom { g, .. } => g(x, normal),
        }
    }

    /// The exact solution matched by this data, when there is one.
    pub fn exact_solution(&self, kappa: f64) -> Option<ExactField> {
        match self {
            HelmholtzData::PlaneWave { direction } => {
                let d = *direction;
                Some(Arc::new(move |x: &Point3| plane_wave(kappa, &d, x)))
            }
            HelmholtzData::Quadratic => Some(Arc::new(|x: &Point3| {
                let zero = Complex64::new(0.0, 0.0);
                (
                    Complex64::new(x[0] * x[0], 0.0),
                    [Complex64::new(2.0 * x[0], 0.0), zero, zero],
                )
            })),
            _ => None,
        }
    }
}

/// Value and gradient of a scalar field.
pub type ExactField = Arc<dyn Fn(&Point3) -> (Complex64, [Complex64; 3]) + Send + Sync>;

/// `exp(iκ d·x)` and its gradient. `d` must have unit length.
pub fn plane_wave(kappa: f64, direction: &Point3, x: &Point3) -> (Complex64, [Complex64; 3]) {
    let u = Complex64::from_polar(1.0, kappa * dot3(direction, x));
    let iku = Complex64::new(0.0, kappa) * u;
    (u, direction.map(|d| iku * d))
}

#[derive(Debug, Clone)]
pub struct HelmholtzProblem {
    pub kappa: f64,
    pub n: usize,
    pub spec: DecaySpec,
    pub data: HelmholtzData,
    /// Order of the volume and face quadrature rules.
    pub quadrature_order: usize,
}

impl HelmholtzProblem {
    pub fn new(kappa: f64, n: usize, spec: DecaySpec) -> Self {
        Self {
            kappa,
            n,
            spec,
            data: HelmholtzData::default(),
            quadrature_order: 2,
        }
    }

    pub fn with_data(mut self, data: HelmholtzData) -> Self {
        self.data = data;
        self
    }

    pub fn with_quadrature_order(mut self, order: usize) -> Self {
        self.quadrature_order = order;
        self
    }
}

/// The real operators and load of one parameter point.
#[derive(Debug, Clone)]
pub struct HelmholtzOperators {
    pub stiffness: RealSparseMatrix,
    pub mass: RealSparseMatrix,
    pub boundary_mass: RealSparseMatrix,
    pub load: Vec<Complex64>,
}

/// A [`HelmholtzProblem`] bound to its mesh and quadrature.
#[derive(Debug, Clone)]
pub struct HelmholtzModel {
    problem: HelmholtzProblem,
    mesh: Mesh,
    deformation: Deformation,
    geometry: Vec<TetGeometry>,
    volume_rule: TetRule,
    face_rule: TriangleRule,
}

impl HelmholtzModel {
    pub fn new(problem: HelmholtzProblem) -> Result<Self> {
        if !(problem.kappa > 0.0 && problem.kappa.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "wave number must be positive, got {}",
                problem.kappa
            )));
        }
        let mesh = build_cube_mesh(problem.n)?;
        let deformation = Deformation::new(problem.spec)?;
        let geometry = (0..mesh.tets.len())
            .map(|t| TetGeometry::new(&mesh.tet_vertices(t)))
            .collect();
        let volume_rule = tet_quadrature(problem.quadrature_order)?;
        let face_rule = triangle_quadrature(problem.quadrature_order)?;
        Ok(Self {
            problem,
            mesh,
            deformation,
            geometry,
            volume_rule,
            face_rule,
        })
    }

    pub fn problem(&self) -> &HelmholtzProblem {
        &self.problem
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn map_at(&self, y: &ParamPoint) -> Result<DeformedMap> {
        self.deformation.at(y)
    }

    pub fn assemble_operators(&self, y: &ParamPoint) -> Result<HelmholtzOperators> {
        let map = self.deformation.at(y)?;
        let kappa = self.problem.kappa;
        let data = &self.problem.data;
        let nv = self.mesh.num_vertices();

        let volume_blocks = map_blocks(self.mesh.tets.len(), |range| {
            let mut s = Vec::with_capacity(range.len() * 16);
            let mut m = Vec::with_capacity(range.len() * 16);
            let mut load = Vec::with_capacity(range.len() * 4);
            for t in range {
                let tet = self.mesh.tets[t];
                let geo = &self.geometry[t];
                let mut ks = [[0.0; 4]; 4];
                let mut km = [[0.0; 4]; 4];
                let mut kb = [Complex64::new(0.0, 0.0); 4];
                for (xi, w) in self.volume_rule.points.iter().zip(&self.volume_rule.weights) {
                    let xhat = geo.map(xi);
                    let jac = map.jacobian(&xhat);
                    let weight = w * 6.0 * geo.volume * jac.det;
                    let lam = barycentric(xi);
                    let grads = geo.grads.map(|g| mat_vec(&jac.inv_transpose, &g));
                    let f = data.source(kappa, &map.map_point(&xhat));
                    for a in 0..4 {
                        for b in 0..4 {
                            ks[a][b] += weight * dot3(&grads[a], &grads[b]);
                            km[a][b] += weight * (lam[a] * lam[b]);
                        }
                        kb[a] += weight * lam[a] * f;
                    }
                }
                for a in 0..4 {
                    for b in 0..4 {
                        s.push((tet[a], tet[b], ks[a][b]));
                        m.push((tet[a], tet[b], km[a][b]));
                    }
                    load.push((tet[a], kb[a]));
                }
            }
            (s, m, load)
        });

        let faces = &self.mesh.boundary_faces;
        let face_blocks = map_blocks(faces.len(), |range| {
            let mut bm = Vec::with_capacity(range.len() * 9);
            let mut load = Vec::with_capacity(range.len() * 3);
            for face in &faces[range] {
                let p = face.vertices.map(|v| self.mesh.vertices[v]);
                let e1 = sub3(&p[1], &p[0]);
                let e2 = sub3(&p[2], &p[0]);
                let area2 = 2.0 * self.mesh.face_area(face);
                let mut kbm = [[0.0; 3]; 3];
                let mut kb = [Complex64::new(0.0, 0.0); 3];
                for (st, w) in self.face_rule.points.iter().zip(&self.face_rule.weights) {
                    let xhat = [0, 1, 2].map(|k| p[0][k] + st[0] * e1[k] + st[1] * e2[k]);
                    let jac = map.jacobian(&xhat);
                    let scaled = mat_vec(&jac.inv_transpose, &face.normal);
                    let scaled_norm = norm3(&scaled);
                    let weight = w * area2 * jac.det * scaled_norm;
                    let normal = scaled.map(|v| v / scaled_norm);
                    let g = data.boundary(kappa, &map.map_point(&xhat), &normal);
                    let phi = [1.0 - st[0] - st[1], st[0], st[1]];
                    for a in 0..3 {
                        for b in 0..3 {
                            kbm[a][b] += weight * (phi[a] * phi[b]);
                        }
                        kb[a] += weight * phi[a] * g;
                    }
                }
                for a in 0..3 {
                    for b in 0..3 {
                        bm.push((face.vertices[a], face.vertices[b], kbm[a][b]));
                    }
                    load.push((face.vertices[a], kb[a]));
                }
            }
            (bm, load)
        });

        let mut s = TripletBuilder::with_capacity(nv, nv, 16 * self.mesh.tets.len());
        let mut m = TripletBuilder::with_capacity(nv, nv, 16 * self.mesh.tets.len());
        let mut bm = TripletBuilder::with_capacity(nv, nv, 9 * faces.len());
        let mut load = vec![Complex64::new(0.0, 0.0); nv];
        for (bs, bms, bl) in volume_blocks {
            bs.into_iter().for_each(|(r, c, v)| s.push(r, c, v));
            bms.into_iter().for_each(|(r, c, v)| m.push(r, c, v));
            bl.into_iter().for_each(|(r, v)| load[r] += v);
        }
        for (bb, bl) in face_blocks {
            bb.into_iter().for_each(|(r, c, v)| bm.push(r, c, v));
            bl.into_iter().for_each(|(r, v)| load[r] += v);
        }
        Ok(HelmholtzOperators {
            stiffness: s.build(),
            mass: m.build(),
            boundary_mass: bm.build(),
            load,
        })
    }

    pub fn system_from_operators(&self, ops: &HelmholtzOperators) -> Result<LinearSystem> {
        let k = self.problem.kappa;
        let matrix = linear_combination(&[
            (Complex64::new(1.0, 0.0), &ops.stiffness),
            (Complex64::new(-k * k, 0.0), &ops.mass),
            (Complex64::new(0.0, -k), &ops.boundary_mass),
        ])?;
        Ok(LinearSystem {
            matrix,
            rhs: DofVector::new(DofKind::NodalH1, ops.load.clone()),
        })
    }

    /// Nodal interpolant of a field given on the physical domain `D(y)`.
    pub fn interpolate(&self, y: &ParamPoint, u: impl Fn(&Point3) -> Complex64) -> Result<DofVector> {
        let map = self.deformation.at(y)?;
        let values = self.mesh.vertices.iter().map(|x| u(&map.map_point(x))).collect();
        Ok(DofVector::new(DofKind::NodalH1, values))
    }

    /// L2 and full H1 norms of `u_h - u` on the reference cube, by order-4
    /// quadrature.
    pub fn h1_error(
        &self,
        u_h: &DofVector,
        exact: impl Fn(&Point3) -> (Complex64, [Complex64; 3]),
    ) -> Result<(f64, f64)> {
        if u_h.kind != DofKind::NodalH1 || u_h.len() != self.mesh.num_vertices() {
            return Err(Error::InvalidArgument(format!(
                "expected {} nodal values, got {} ({:?})",
                self.mesh.num_vertices(),
                u_h.len(),
                u_h.kind
            )));
        }
        let rule = tet_quadrature(4)?;
        let mut l2 = 0.0;
        let mut semi = 0.0;
        for (t, tet) in self.mesh.tets.iter().enumerate() {
            let geo = &self.geometry[t];
            let coeffs = tet.map(|v| u_h.values[v]);
            let mut grad_h = [Complex64::new(0.0, 0.0); 3];
            for (c, g) in coeffs.iter().zip(&geo.grads) {
                for k in 0..3 {
                    grad_h[k] += c * g[k];
                }
            }
            for (xi, w) in rule.points.iter().zip(&rule.weights) {
                let weight = w * 6.0 * geo.volume;
                let lam = barycentric(xi);
                let value_h: Complex64 = coeffs.iter().zip(lam).map(|(c, l)| c * l).sum();
                let (value, grad) = exact(&geo.map(xi));
                l2 += weight * (value_h - value).norm_sqr();
                semi += weight
                    * (0..3)
                        .map(|k| (grad_h[k] - grad[k]).norm_sqr())
                        .sum::<f64>();
            }
        }
        Ok((l2.sqrt(), (l2 + semi).sqrt()))
    }
}

impl FullOrderModel for HelmholtzModel {
    fn num_dofs(&self) -> usize {
        self.mesh.num_vertices()
    }

    fn param_dim(&self) -> usize {
        self.problem.spec.dim()
    }

    fn dof_kind(&self) -> DofKind {
        DofKind::NodalH1
    }

    fn assemble(&self, y: &ParamPoint) -> Result<LinearSystem> {
        check_param_dim(y, self.param_dim())?;
        let ops = self.assemble_operators(y)?;
        self.system_from_operators(&ops)
    }
}
