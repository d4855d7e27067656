//! Time-harmonic lossy cavity problem with perfectly conducting walls,
//! pulled back to the reference cube and discretized with lowest-order
//! first-kind edge elements.
//!
//! The physical problem is `curl μ⁻¹ curl E - ΛE = -iω J` with `n × E = 0`
//! on the boundary, `Λ = ω²ε - iωσ`. With `G = dT^{-T}` the pulled-back
//! system is `A = μ⁻¹K - ΛM`,
//!
//! * `K_ij = ∫ J⁻¹ (dT curl φ_j)·(dT curl φ_i)`,
//! * `M_ij = ∫ J (Gφ_j)·(Gφ_i)`,
//! * `b_i = -iω ∫ J (J_src ∘ T)·(Gφ_i)`.
//!
//! Boundary edges keep their rows and columns but carry an identity block
//! and a zero load, so the solution vanishes there.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fem::mesh::TET_EDGES;
use crate::fem::{
    barycentric, build_cube_mesh, check_param_dim, map_blocks, sparse::linear_combination,
    tet_quadrature, DofKind, DofVector, FullOrderModel, LinearSystem, Mesh, RealSparseMatrix,
    TetGeometry, TetRule, TripletBuilder,
};
use crate::transform::{
    cross3, dot3, mat_vec, DecaySpec, Deformation, DeformedMap, Matrix3, ParamPoint, Point3,
};

pub type VectorField = Arc<dyn Fn(&Point3) -> [Complex64; 3] + Send + Sync>;

/// Current density on the physical domain.
#[derive(Clone, Default)]
pub enum MaxwellSource {
    /// `(0, 0, 1) exp(-|x|²)`.
    #[default]
    Gaussian,
    Zero,
    /// The current that makes [`manufactured_field`] an exact solution.
    Manufactured,
    Custom(VectorField),
}

impl fmt::Debug for MaxwellSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaxwellSource::Gaussian => f.write_str("Gaussian"),
            MaxwellSource::Zero => f.write_str("Zero"),
            MaxwellSource::Manufactured => f.write_str("Manufactured"),
            MaxwellSource::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// Polynomial field with vanishing tangential trace on the cube boundary,
/// returned as `(E, curl E)`.
pub fn manufactured_field(x: &Point3) -> ([f64; 3], [f64; 3]) {
    let [a, b, c] = x.map(|t| 1.0 - t * t);
    let e = [b * c, a * c, a * b];
    let curl = [
        2.0 * a * (x[2] - x[1]),
        2.0 * b * (x[0] - x[2]),
        2.0 * c * (x[1] - x[0]),
    ];
    (e, curl)
}

fn manufactured_curl_curl(x: &Point3) -> [f64; 3] {
    let [a, b, c] = x.map(|t| 1.0 - t * t);
    [2.0 * (c + b), 2.0 * (a + c), 2.0 * (b + a)]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaScan {
    pub theta: f64,
    pub mu_b: f64,
    pub lambda_b: f64,
}

impl ThetaScan {
    /// `min(μ_b, Λ_b)`, the coercivity constant relative to the H(curl) norm.
    pub fn bound(&self) -> f64 {
        self.mu_b.min(self.lambda_b)
    }
}

pub const THETA_GRID: usize = 1024;

/// Maximize `min(Re(e^{iϑ}/μ), Re(-e^{iϑ}Λ))` over an equispaced grid on
/// `[0, 2π)`.
pub fn theta_scan(mu: Complex64, lambda: Complex64) -> ThetaScan {
    let inv_mu = mu.inv();
    (0..THETA_GRID)
        .map(|k| {
            let theta = 2.0 * PI * k as f64 / THETA_GRID as f64;
            let rot = Complex64::from_polar(1.0, theta);
            ThetaScan {
                theta,
                mu_b: (rot * inv_mu).re,
                lambda_b: (-rot * lambda).re,
            }
        })
        .fold(None, |best: Option<ThetaScan>, s| match best {
            Some(b) if b.bound() >= s.bound() => Some(b),
            _ => Some(s),
        })
        .expect("grid is nonempty")
}

#[derive(Debug, Clone)]
pub struct MaxwellProblem {
    pub omega: f64,
    pub mu: Complex64,
    pub lambda: Complex64,
    pub source: MaxwellSource,
    pub spec: DecaySpec,
    pub n: usize,
    pub quadrature_order: usize,
}

impl MaxwellProblem {
    /// Constants `ω = 1`, `μ = 1`, `Λ = 1 - i` and the Gaussian source.
    pub fn new(n: usize, spec: DecaySpec) -> Self {
        Self {
            omega: 1.0,
            mu: Complex64::new(1.0, 0.0),
            lambda: Complex64::new(1.0, -1.0),
            source: MaxwellSource::default(),
            spec,
            n,
            quadrature_order: 2,
        }
    }

    pub fn with_constants(mut self, omega: f64, mu: Complex64, lambda: Complex64) -> Self {
        self.omega = omega;
        self.mu = mu;
        self.lambda = lambda;
        self
    }

    pub fn with_source(mut self, source: MaxwellSource) -> Self {
        self.source = source;
        self
    }

    fn current(&self, x: &Point3) -> [Complex64; 3] {
        let zero = Complex64::new(0.0, 0.0);
        match &self.source {
            MaxwellSource::Gaussian => {
                [zero, zero, Complex64::new((-dot3(x, x)).exp(), 0.0)]
            }
            MaxwellSource::Zero => [zero; 3],
            MaxwellSource::Manufactured => {
                let (e, _) = manufactured_field(x);
                let cc = manufactured_curl_curl(x);
                let inv_mu = self.mu.inv();
                let scale = Complex64::new(0.0, -self.omega).inv();
                [0, 1, 2].map(|k| (inv_mu * cc[k] - self.lambda * e[k]) * scale)
            }
            MaxwellSource::Custom(f) => f(x),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MaxwellOperators {
    pub curl_curl: RealSparseMatrix,
    pub mass: RealSparseMatrix,
    /// Load before the boundary rows are cleared.
    pub load: Vec<Complex64>,
}

#[derive(Debug, Clone)]
pub struct MaxwellModel {
    problem: MaxwellProblem,
    scan: ThetaScan,
    mesh: Mesh,
    deformation: Deformation,
    geometry: Vec<TetGeometry>,
    /// Sign of each local edge relative to the global orientation.
    orientation: Vec<[f64; 6]>,
    rule: TetRule,
}

/// Local basis `λ_a∇λ_b - λ_b∇λ_a` at barycentric point `lam` and its
/// (constant) curl `2∇λ_a × ∇λ_b`, for every local edge `(a, b)`.
fn whitney(grads: &[Point3; 4], lam: &[f64; 4]) -> ([Point3; 6], [Point3; 6]) {
    let mut values = [[0.0; 3]; 6];
    let mut curls = [[0.0; 3]; 6];
    for (e, [a, b]) in TET_EDGES.iter().enumerate() {
        for k in 0..3 {
            values[e][k] = lam[*a] * grads[*b][k] - lam[*b] * grads[*a][k];
        }
        curls[e] = cross3(&grads[*a], &grads[*b]).map(|v| 2.0 * v);
    }
    (values, curls)
}

fn transpose(m: &Matrix3) -> Matrix3 {
    [
        [m[0][0], m[1][0], m[2][0]],
        [m[0][1], m[1][1], m[2][1]],
        [m[0][2], m[1][2], m[2][2]],
    ]
}

/// Three-point Gauss-Legendre rule on `[0, 1]`.
const EDGE_RULE: [(f64, f64); 3] = [
    (0.112_701_665_379_258_31, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

impl MaxwellModel {
    pub fn new(problem: MaxwellProblem) -> Result<Self> {
        let mesh = build_cube_mesh(problem.n)?;
        Self::with_mesh(problem, mesh)
    }

    /// Use a prebuilt mesh of the reference cube; `problem.n` is ignored.
    pub fn with_mesh(problem: MaxwellProblem, mesh: Mesh) -> Result<Self> {
        if !(problem.omega > 0.0 && problem.omega.is_finite()) {
            return Err(Error::Config(format!(
                "angular frequency must be positive, got {}",
                problem.omega
            )));
        }
        if problem.mu.norm() == 0.0 || !problem.mu.is_finite() || !problem.lambda.is_finite() {
            return Err(Error::Config(format!(
                "invalid material constants mu = {}, Lambda = {}",
                problem.mu, problem.lambda
            )));
        }
        let scan = theta_scan(problem.mu, problem.lambda);
        if scan.bound() <= 0.0 {
            return Err(Error::Config(format!(
                "no rotation makes the form coercive for mu = {}, Lambda = {} (best min(mu_b, Lambda_b) = {:.3e})",
                problem.mu,
                problem.lambda,
                scan.bound()
            )));
        }
        let deformation = Deformation::new(problem.spec)?;
        let geometry = (0..mesh.tets.len())
            .map(|t| TetGeometry::new(&mesh.tet_vertices(t)))
            .collect();
        let orientation = mesh
            .tets
            .iter()
            .map(|t| TET_EDGES.map(|[a, b]| if t[a] < t[b] { 1.0 } else { -1.0 }))
            .collect();
        let rule = tet_quadrature(problem.quadrature_order)?;
        Ok(Self {
            problem,
            scan,
            mesh,
            deformation,
            geometry,
            orientation,
            rule,
        })
    }

    pub fn problem(&self) -> &MaxwellProblem {
        &self.problem
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn theta_scan(&self) -> ThetaScan {
        self.scan
    }

    pub fn map_at(&self, y: &ParamPoint) -> Result<DeformedMap> {
        self.deformation.at(y)
    }

    pub fn assemble_operators(&self, y: &ParamPoint) -> Result<MaxwellOperators> {
        let map = self.deformation.at(y)?;
        let ne = self.mesh.num_edges();
        let blocks = map_blocks(self.mesh.tets.len(), |range| {
            let mut k = Vec::with_capacity(range.len() * 36);
            let mut m = Vec::with_capacity(range.len() * 36);
            let mut load = Vec::with_capacity(range.len() * 6);
            for t in range {
                let geo = &self.geometry[t];
                let sign = &self.orientation[t];
                let dofs = &self.mesh.tet_edges[t];
                let mut kk = [[0.0; 6]; 6];
                let mut km = [[0.0; 6]; 6];
                let mut kb = [Complex64::new(0.0, 0.0); 6];
                for (xi, w) in self.rule.points.iter().zip(&self.rule.weights) {
                    let xhat = geo.map(xi);
                    let jac = map.jacobian(&xhat);
                    let weight = w * 6.0 * geo.volume;
                    let (values, curls) = whitney(&geo.grads, &barycentric(xi));
                    let phys: [Point3; 6] = [0, 1, 2, 3, 4, 5]
                        .map(|e| mat_vec(&jac.inv_transpose, &values[e]).map(|v| v * sign[e]));
                    let phys_curl: [Point3; 6] =
                        [0, 1, 2, 3, 4, 5].map(|e| mat_vec(&jac.dt, &curls[e]).map(|v| v * sign[e]));
                    let current = self.problem.current(&map.map_point(&xhat));
                    for a in 0..6 {
                        for b in 0..6 {
                            kk[a][b] += (weight / jac.det) * dot3(&phys_curl[a], &phys_curl[b]);
                            km[a][b] += (weight * jac.det) * dot3(&phys[a], &phys[b]);
                        }
                        let proj: Complex64 = (0..3).map(|c| current[c] * phys[a][c]).sum();
                        kb[a] += weight * jac.det * proj;
                    }
                }
                let scale = Complex64::new(0.0, -self.problem.omega);
                for a in 0..6 {
                    for b in 0..6 {
                        k.push((dofs[a], dofs[b], kk[a][b]));
                        m.push((dofs[a], dofs[b], km[a][b]));
                    }
                    load.push((dofs[a], scale * kb[a]));
                }
            }
            (k, m, load)
        });
        let mut k = TripletBuilder::with_capacity(ne, ne, 36 * self.mesh.tets.len());
        let mut m = TripletBuilder::with_capacity(ne, ne, 36 * self.mesh.tets.len());
        let mut load = vec![Complex64::new(0.0, 0.0); ne];
        for (bk, bm, bl) in blocks {
            bk.into_iter().for_each(|(r, c, v)| k.push(r, c, v));
            bm.into_iter().for_each(|(r, c, v)| m.push(r, c, v));
            bl.into_iter().for_each(|(r, v)| load[r] += v);
        }
        Ok(MaxwellOperators {
            curl_curl: k.build(),
            mass: m.build(),
            load,
        })
    }

    /// `μ⁻¹K - ΛM` without boundary conditions.
    pub fn unconstrained_matrix(&self, ops: &MaxwellOperators) -> Result<crate::fem::ComplexSparseMatrix> {
        linear_combination(&[
            (self.problem.mu.inv(), &ops.curl_curl),
            (-self.problem.lambda, &ops.mass),
        ])
    }

    pub fn system_from_operators(&self, ops: &MaxwellOperators) -> Result<LinearSystem> {
        let matrix = self
            .unconstrained_matrix(ops)?
            .with_identity_block(&self.mesh.boundary_edge, Complex64::new(1.0, 0.0));
        let rhs = ops
            .load
            .iter()
            .zip(&self.mesh.boundary_edge)
            .map(|(v, boundary)| if *boundary { Complex64::new(0.0, 0.0) } else { *v })
            .collect();
        Ok(LinearSystem {
            matrix,
            rhs: DofVector::new(DofKind::EdgeHcurl, rhs),
        })
    }

    /// Edge interpolant `∫_e Ê·t ds` of a physical field, with `Ê` the
    /// covariant pullback `dTᵀ (E ∘ T)` and `t` the unnormalized edge vector.
    pub fn interpolate(
        &self,
        y: &ParamPoint,
        field: impl Fn(&Point3) -> [Complex64; 3],
    ) -> Result<DofVector> {
        let map = self.deformation.at(y)?;
        let values = self
            .mesh
            .edges
            .iter()
            .map(|[lo, hi]| {
                let p = self.mesh.vertices[*lo];
                let q = self.mesh.vertices[*hi];
                let t = [q[0] - p[0], q[1] - p[1], q[2] - p[2]];
                EDGE_RULE
                    .iter()
                    .map(|(s, w)| {
                        let xhat = [0, 1, 2].map(|k| p[k] + s * t[k]);
                        let dt_t = transpose(&map.jacobian(&xhat).dt);
                        let e = field(&map.map_point(&xhat));
                        let pulled: [Complex64; 3] =
                            [0, 1, 2].map(|r| (0..3).map(|c| e[c] * dt_t[r][c]).sum());
                        *w * (0..3).map(|k| pulled[k] * t[k]).sum::<Complex64>()
                    })
                    .sum()
            })
            .collect();
        Ok(DofVector::new(DofKind::EdgeHcurl, values))
    }

    /// L2 and H(curl) norms of `E_h - E` on the reference cube. `exact`
    /// returns the field and its curl.
    pub fn hcurl_error(
        &self,
        e_h: &DofVector,
        exact: impl Fn(&Point3) -> ([Complex64; 3], [Complex64; 3]),
    ) -> Result<(f64, f64)> {
        if e_h.kind != DofKind::EdgeHcurl || e_h.len() != self.mesh.num_edges() {
            return Err(Error::InvalidArgument(format!(
                "expected {} edge values, got {} ({:?})",
                self.mesh.num_edges(),
                e_h.len(),
                e_h.kind
            )));
        }
        let rule = tet_quadrature(4)?;
        let mut l2 = 0.0;
        let mut curl_part = 0.0;
        for t in 0..self.mesh.tets.len() {
            let geo = &self.geometry[t];
            let coeffs: [Complex64; 6] =
                [0, 1, 2, 3, 4, 5].map(|e| e_h.values[self.mesh.tet_edges[t][e]] * self.orientation[t][e]);
            for (xi, w) in rule.points.iter().zip(&rule.weights) {
                let weight = w * 6.0 * geo.volume;
                let (values, curls) = whitney(&geo.grads, &barycentric(xi));
                let mut field = [Complex64::new(0.0, 0.0); 3];
                let mut curl = [Complex64::new(0.0, 0.0); 3];
                for e in 0..6 {
                    for k in 0..3 {
                        field[k] += coeffs[e] * values[e][k];
                        curl[k] += coeffs[e] * curls[e][k];
                    }
                }
                let (ex, cx) = exact(&geo.map(xi));
                l2 += weight * (0..3).map(|k| (field[k] - ex[k]).norm_sqr()).sum::<f64>();
                curl_part += weight * (0..3).map(|k| (curl[k] - cx[k]).norm_sqr()).sum::<f64>();
            }
        }
        Ok((l2.sqrt(), (l2 + curl_part).sqrt()))
    }
}

impl FullOrderModel for MaxwellModel {
    fn num_dofs(&self) -> usize {
        self.mesh.num_edges()
    }

    fn param_dim(&self) -> usize {
        self.problem.spec.dim()
    }

    fn dof_kind(&self) -> DofKind {
        DofKind::EdgeHcurl
    }

    fn assemble(&self, y: &ParamPoint) -> Result<LinearSystem> {
        check_param_dim(y, self.param_dim())?;
        let ops = self.assemble_operators(y)?;
        self.system_from_operators(&ops)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::SplitMix64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn spec() -> DecaySpec {
        DecaySpec::algebraic(2.0, 0.1, 3).unwrap()
    }

    fn random_point(rng: &mut SplitMix64) -> ParamPoint {
        ParamPoint::new((0..3).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap()
    }

    #[test]
    fn theta_scan_for_lossy_constants() {
        let scan = theta_scan(c(1.0, 0.0), c(1.0, -1.0));
        // maximize min(cos ϑ, -cos ϑ - sin ϑ): optimum where both are 1/√5;
        // the grid spacing limits the accuracy to about 2π/1024
        assert!(scan.bound() <= 1.0 / 5f64.sqrt());
        assert!((scan.bound() - 1.0 / 5f64.sqrt()).abs() < 5e-3, "{scan:?}");
        assert!(scan.mu_b > 0.0 && scan.lambda_b > 0.0);
        // a lossless medium with positive Λ has no coercive rotation
        assert!(theta_scan(c(1.0, 0.0), c(1.0, 0.0)).bound() <= 0.0);
        let problem = MaxwellProblem::new(1, spec()).with_constants(1.0, c(1.0, 0.0), c(1.0, 0.0));
        assert!(matches!(MaxwellModel::new(problem), Err(Error::Config(_))));
    }

    #[test]
    fn curl_curl_plus_mass_is_positive_definite() {
        let problem = MaxwellProblem::new(2, spec()).with_constants(1.0, c(1.0, 0.0), c(-1.0, 0.0));
        let model = MaxwellModel::new(problem).unwrap();
        let system = model.assemble(&ParamPoint::zeros(3)).unwrap();
        let dense = system.matrix.to_dense();
        let n = dense.nrows();
        let real = nalgebra::DMatrix::from_fn(n, n, |r, col| dense[(r, col)].re);
        assert!(dense.iter().all(|z| z.im == 0.0));
        assert!((&real - real.transpose()).amax() < 1e-14);
        let eig = real.symmetric_eigen();
        assert!(eig.eigenvalues.min() > 0.0, "{}", eig.eigenvalues.min());
    }

    #[test]
    fn gradients_lie_in_curl_kernel() {
        let model = MaxwellModel::new(MaxwellProblem::new(3, spec())).unwrap();
        let mut rng = SplitMix64::new(2);
        let ops = model.assemble_operators(&random_point(&mut rng)).unwrap();
        for p in model.mesh().interior_vertices() {
            let v: Vec<Complex64> = model
                .mesh()
                .edges
                .iter()
                .map(|[lo, hi]| {
                    c(if *hi == p { 1.0 } else if *lo == p { -1.0 } else { 0.0 }, 0.0)
                })
                .collect();
            let curl_energy = ops.curl_curl.quadratic_form(&v);
            assert!(curl_energy.norm() <= 1e-12, "{curl_energy}");
            assert!(ops.mass.quadratic_form(&v).re > 0.0);
        }
    }

    #[test]
    fn coercivity_bound_on_random_fields() {
        let model = MaxwellModel::new(MaxwellProblem::new(2, spec())).unwrap();
        let bound = model.theta_scan().bound();
        let mut rng = SplitMix64::new(17);
        let mut points = vec![ParamPoint::zeros(3)];
        points.extend((0..5).map(|_| random_point(&mut rng)));
        for y in &points {
            let ops = model.assemble_operators(y).unwrap();
            let a = model.unconstrained_matrix(&ops).unwrap();
            for _ in 0..100 {
                let v: Vec<Complex64> = model
                    .mesh()
                    .boundary_edge
                    .iter()
                    .map(|b| {
                        if *b {
                            c(0.0, 0.0)
                        } else {
                            c(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0))
                        }
                    })
                    .collect();
                let norm2 = ops.curl_curl.quadratic_form(&v).re + ops.mass.quadratic_form(&v).re;
                let form = a.quadratic_form(&v).norm();
                assert!(form >= 0.9 * bound * norm2, "{form} < {bound} * {norm2}");
            }
        }
    }

    #[test]
    fn zero_source_gives_zero_solution() {
        let problem = MaxwellProblem::new(2, spec()).with_source(MaxwellSource::Zero);
        let model = MaxwellModel::new(problem).unwrap();
        let e = model.solve_hf(&ParamPoint::new(vec![0.5, 0.5, -0.5]).unwrap()).unwrap();
        assert!(e.values.iter().all(|z| *z == c(0.0, 0.0)));
    }

    #[test]
    fn conjugated_data_conjugates_solution() {
        let source: VectorField = Arc::new(|x: &Point3| {
            [c(x[1], 1.0), c(0.5, -x[0]), c((-dot3(x, x)).exp(), x[2])]
        });
        let mu = c(1.0, 0.2);
        let lambda = c(0.8, -1.1);
        let base = MaxwellProblem::new(2, spec())
            .with_constants(1.3, mu, lambda)
            .with_source(MaxwellSource::Custom(source.clone()));
        // the load carries a factor -iω, so the conjugate system uses -conj(J)
        let mirrored = MaxwellProblem::new(2, spec())
            .with_constants(1.3, mu.conj(), lambda.conj())
            .with_source(MaxwellSource::Custom(Arc::new(move |x: &Point3| {
                source(x).map(|z| -z.conj())
            })));
        let y = ParamPoint::new(vec![0.2, -0.9, 0.4]).unwrap();
        let e = MaxwellModel::new(base).unwrap().solve_hf(&y).unwrap();
        let e_conj = MaxwellModel::new(mirrored).unwrap().solve_hf(&y).unwrap();
        let diff: f64 = e
            .values
            .iter()
            .zip(&e_conj.values)
            .map(|(a, b)| (a.conj() - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(diff <= 1e-12 * e.norm(), "{diff}");
    }

    #[test]
    fn vertex_order_does_not_change_the_matrix() {
        let mesh = build_cube_mesh(2).unwrap();
        let mut rng = SplitMix64::new(4);
        let permuted: Vec<[usize; 4]> = mesh
            .tets
            .iter()
            .map(|t| {
                let mut t = *t;
                rng.shuffle(&mut t);
                t
            })
            .collect();
        let other = Mesh::from_parts(2, mesh.vertices.clone(), permuted).unwrap();
        assert_eq!(mesh.edges, other.edges);
        let y = random_point(&mut rng);
        let a = MaxwellModel::with_mesh(MaxwellProblem::new(2, spec()), mesh)
            .unwrap()
            .assemble(&y)
            .unwrap();
        let b = MaxwellModel::with_mesh(MaxwellProblem::new(2, spec()), other)
            .unwrap()
            .assemble(&y)
            .unwrap();
        for (r, col, v) in a.matrix.triplets() {
            assert!((v - b.matrix.get(r, col)).norm() < 1e-13);
        }
        assert_eq!(a.matrix.nnz(), b.matrix.nnz());
        for (p, q) in a.rhs.values.iter().zip(&b.rhs.values) {
            assert!((p - q).norm() < 1e-14);
        }
    }

    #[test]
    fn curl_transforms_with_the_jacobian() {
        // û is a polynomial field on the reference cube; its covariant
        // pushforward w = dT^{-T} û ∘ T^{-1} must satisfy curl w ∘ T = dT curl û / J.
        let u_hat = |p: &Point3| [p[1] * p[2], p[0] * p[0] - p[2], p[0] * p[1] * p[2]];
        let curl_u_hat = |p: &Point3| [p[0] * p[2] + 1.0, p[1] - p[1] * p[2], 2.0 * p[0] - p[2]];
        let deformation = Deformation::new(spec()).unwrap();
        let mut rng = SplitMix64::new(6);
        let rule = tet_quadrature(2).unwrap();
        let mesh = build_cube_mesh(2).unwrap();
        for _ in 0..3 {
            let map = deformation.at(&random_point(&mut rng)).unwrap();
            let pushed = |x: &Point3| {
                let p = map.pull_point(x);
                mat_vec(&map.jacobian(&p).inv_transpose, &u_hat(&p))
            };
            for t in [0, 17, 40] {
                let geo = TetGeometry::new(&mesh.tet_vertices(t));
                for xi in &rule.points {
                    let xhat = geo.map(xi);
                    let x = map.map_point(&xhat);
                    let h = 1e-5;
                    // d[i][j] = ∂w_i/∂x_j by central differences
                    let mut d = [[0.0; 3]; 3];
                    for j in 0..3 {
                        let mut xp = x;
                        let mut xm = x;
                        xp[j] += h;
                        xm[j] -= h;
                        let (wp, wm) = (pushed(&xp), pushed(&xm));
                        for i in 0..3 {
                            d[i][j] = (wp[i] - wm[i]) / (2.0 * h);
                        }
                    }
                    let direct = [d[2][1] - d[1][2], d[0][2] - d[2][0], d[1][0] - d[0][1]];
                    let jac = map.jacobian(&xhat);
                    let mapped = mat_vec(&jac.dt, &curl_u_hat(&xhat)).map(|v| v / jac.det);
                    for k in 0..3 {
                        assert!((direct[k] - mapped[k]).abs() < 1e-8, "{direct:?} vs {mapped:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn interpolation_of_constants_and_linear_fields() {
        let model = MaxwellModel::new(MaxwellProblem::new(2, spec())).unwrap();
        let y0 = ParamPoint::zeros(3);
        let constant = [c(1.0, -0.5), c(0.3, 0.0), c(-2.0, 1.0)];
        let e_h = model.interpolate(&y0, |_| constant).unwrap();
        let (l2, hcurl) = model.hcurl_error(&e_h, |_| (constant, [c(0.0, 0.0); 3])).unwrap();
        assert!(l2 < 1e-12 && hcurl < 1e-12, "{l2} {hcurl}");

        let zero = DofVector::zeros(DofKind::EdgeHcurl, model.num_dofs());
        let unit = [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        let (l2, _) = model.hcurl_error(&zero, |_| (unit, [c(0.0, 0.0); 3])).unwrap();
        assert!((l2 - 8f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn interpolation_error_of_linear_field_halves() {
        // E = (x2, x3, x1) is divergence free with curl (-1, -1, -1)
        let field = |x: &Point3| [c(x[1], 0.0), c(x[2], 0.0), c(x[0], 0.0)];
        let curl = [c(-1.0, 0.0); 3];
        let errors: Vec<f64> = [2, 4]
            .iter()
            .map(|&n| {
                let model = MaxwellModel::new(MaxwellProblem::new(n, spec())).unwrap();
                let e_h = model.interpolate(&ParamPoint::zeros(3), field).unwrap();
                model.hcurl_error(&e_h, |x| (field(x), curl)).unwrap().1
            })
            .collect();
        let ratio = errors[0] / errors[1];
        assert!((ratio - 2.0).abs() < 0.15, "{errors:?}");
    }

    #[test]
    fn manufactured_solution_converges() {
        let exact = |x: &Point3| {
            let (e, curl) = manufactured_field(x);
            (e.map(|v| c(v, 0.0)), curl.map(|v| c(v, 0.0)))
        };
        let errors: Vec<f64> = [2, 4]
            .iter()
            .map(|&n| {
                let problem = MaxwellProblem::new(n, spec()).with_source(MaxwellSource::Manufactured);
                let model = MaxwellModel::new(problem).unwrap();
                let e_h = model.solve_hf(&ParamPoint::zeros(3)).unwrap();
                model.hcurl_error(&e_h, exact).unwrap().1
            })
            .collect();
        let order = (errors[0] / errors[1]).log2();
        assert!(order > 0.8, "{errors:?}");
    }
}
