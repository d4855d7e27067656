//! Galerkin projection of the full-order system onto a POD basis.
//!
//! The operator is reassembled for every query; neither problem has an
//! affine parameter dependence to exploit.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fem::{solve_dense, DofVector, FullOrderModel, LinearSystem};
use crate::pod::ReducedBasis;
use crate::transform::ParamPoint;

/// `V^H A V` and `V^H (b - A ū)` for the full basis. Because the POD modes
/// are nested, the system for the first `l` modes is the leading `l × l`
/// block.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub matrix: DMatrix<Complex64>,
    pub rhs: DVector<Complex64>,
}

impl ReducedSystem {
    pub fn new(system: &LinearSystem, basis: &ReducedBasis) -> Result<Self> {
        let n = basis.num_dofs();
        if system.matrix.nrows() != n || system.rhs.len() != n {
            return Err(Error::InvalidArgument(format!(
                "system of size {} does not match basis dimension {n}",
                system.matrix.nrows()
            )));
        }
        let l = basis.num_modes();
        let mut av = DMatrix::zeros(n, l);
        for j in 0..l {
            let col: Vec<Complex64> = basis.basis.column(j).iter().copied().collect();
            av.set_column(j, &DVector::from_vec(system.matrix.mul_vec(&col)));
        }
        let mean: Vec<Complex64> = basis.mean.iter().copied().collect();
        let a_mean = system.matrix.mul_vec(&mean);
        let shifted = DVector::from_iterator(
            n,
            system.rhs.values.iter().zip(&a_mean).map(|(b, am)| b - am),
        );
        Ok(Self {
            matrix: basis.basis.ad_mul(&av),
            rhs: basis.basis.ad_mul(&shifted),
        })
    }

    pub fn max_modes(&self) -> usize {
        self.rhs.len()
    }

    /// Solve the leading `l × l` block.
    pub fn solve(&self, l: usize) -> Result<DVector<Complex64>> {
        if l > self.max_modes() {
            return Err(Error::InvalidArgument(format!(
                "requested {l} modes from a reduced system with {}",
                self.max_modes()
            )));
        }
        let a = self.matrix.view((0, 0), (l, l)).into_owned();
        let b = self.rhs.rows(0, l).into_owned();
        solve_dense(&a, &b).map_err(|e| match e {
            Error::Solver {
                reason,
                residual,
                condition_estimate,
            } => Error::Solver {
                reason: format!("{reason} (reduced system with L = {l})"),
                residual,
                condition_estimate,
            },
            other => other,
        })
    }
}

#[derive(Debug, Clone)]
pub struct GalerkinSolution {
    pub coefficients: DVector<Complex64>,
    pub lifted: DofVector,
}

/// Assemble the full-order system at `y`, project it onto `basis` and solve
/// the reduced problem.
pub fn galerkin_pod_solve<M: FullOrderModel + ?Sized>(
    model: &M,
    y: &ParamPoint,
    basis: &ReducedBasis,
) -> Result<GalerkinSolution> {
    let system = model.assemble(y)?;
    let reduced = ReducedSystem::new(&system, basis)?;
    let coefficients = reduced.solve(basis.num_modes())?;
    let lifted = basis.reconstruct(&coefficients)?;
    Ok(GalerkinSolution {
        coefficients,
        lifted,
    })
}

/// `‖u - v‖ / ‖u‖` in the Euclidean norm on coefficient vectors.
pub fn relative_error(reference: &DofVector, candidate: &DofVector) -> Result<f64> {
    if reference.len() != candidate.len() {
        return Err(Error::InvalidArgument(format!(
            "vectors of length {} and {}",
            reference.len(),
            candidate.len()
        )));
    }
    let norm = reference.norm();
    if norm == 0.0 {
        return Err(Error::Measure(
            "high-fidelity solution has zero norm".into(),
        ));
    }
    let diff: f64 = reference
        .values
        .iter()
        .zip(&candidate.values)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(diff / norm)
}

/// Mean G-POD error over `test_points` for every `L` in `ls`, using the
/// high-fidelity solutions `reference` (one per test point).
pub fn gpod_error_curve<M: FullOrderModel + ?Sized>(
    model: &M,
    basis: &ReducedBasis,
    test_points: &[ParamPoint],
    reference: &[DofVector],
    ls: &[usize],
) -> Result<Vec<(usize, f64)>> {
    use rayon::prelude::*;
    if test_points.len() != reference.len() || test_points.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{} test points with {} reference solutions",
            test_points.len(),
            reference.len()
        )));
    }
    let max_l = ls.iter().copied().max().unwrap_or(0);
    let basis = basis.truncated(max_l)?;
    let per_point: Vec<Result<Vec<f64>>> = test_points
        .par_iter()
        .zip(reference)
        .map(|(y, u)| {
            let reduced = ReducedSystem::new(&model.assemble(y)?, &basis)?;
            ls.iter()
                .map(|&l| {
                    let c = reduced.solve(l)?;
                    let lifted = basis.truncated(l)?.reconstruct(&c)?;
                    relative_error(u, &lifted)
                })
                .collect()
        })
        .collect();
    let mut sums = vec![0.0; ls.len()];
    for errors in per_point {
        for (s, e) in sums.iter_mut().zip(errors?) {
            *s += e;
        }
    }
    let count = test_points.len() as f64;
    Ok(ls.iter().zip(sums).map(|(l, s)| (*l, s / count)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::DofKind;
    use crate::helmholtz::{HelmholtzModel, HelmholtzProblem};
    use crate::pod::{assemble_snapshots, centered_pod, Truncation};
    use crate::sampling::halton;
    use crate::transform::DecaySpec;

    fn model() -> HelmholtzModel {
        let spec = DecaySpec::algebraic(2.0, 0.1, 3).unwrap();
        HelmholtzModel::new(HelmholtzProblem::new(1.0, 2, spec)).unwrap()
    }

    #[test]
    fn full_identity_basis_reproduces_the_full_solve() {
        let model = model();
        let y = ParamPoint::new(vec![0.4, -0.2, 0.9]).unwrap();
        let basis = ReducedBasis::identity(DofKind::NodalH1, model.num_dofs());
        let g = galerkin_pod_solve(&model, &y, &basis).unwrap();
        let hf = model.solve_hf(&y).unwrap();
        assert!(relative_error(&hf, &g.lifted).unwrap() < 1e-10);
    }

    #[test]
    fn empty_basis_returns_the_mean_and_training_points_are_reproduced() {
        let model = model();
        let samples = halton(8, 3, 0);
        let snaps = assemble_snapshots(&model, &samples, [0; 32]).unwrap();
        let basis = centered_pod(&snaps, Truncation::Full).unwrap();
        assert_eq!(basis.num_modes(), 7);

        let empty = basis.truncated(0).unwrap();
        let g = galerkin_pod_solve(&model, &samples.points[2], &empty).unwrap();
        assert_eq!(g.lifted.values, empty.mean.iter().copied().collect::<Vec<_>>());

        // every snapshot lies in mean + range(V) when L = rank
        for (i, y) in samples.points.iter().enumerate() {
            let g = galerkin_pod_solve(&model, y, &basis).unwrap();
            assert!(relative_error(&snaps.column(i), &g.lifted).unwrap() < 1e-8);
        }
    }

    #[test]
    fn galerkin_orthogonality_and_nestedness() {
        let model = model();
        let samples = halton(10, 3, 0);
        let snaps = assemble_snapshots(&model, &samples, [0; 32]).unwrap();
        let basis = centered_pod(&snaps, Truncation::Rank(5)).unwrap();
        let y = ParamPoint::new(vec![-0.3, 0.6, 0.1]).unwrap();
        let system = model.assemble(&y).unwrap();
        let reduced = ReducedSystem::new(&system, &basis).unwrap();
        for l in 0..=5 {
            let sub = basis.truncated(l).unwrap();
            let c = reduced.solve(l).unwrap();
            let direct = galerkin_pod_solve(&model, &y, &sub).unwrap();
            assert!((&c - &direct.coefficients).norm() <= 1e-12 * (1.0 + c.norm()));
            let u = sub.reconstruct(&c).unwrap();
            let r: Vec<Complex64> = system
                .matrix
                .mul_vec(&u.values)
                .iter()
                .zip(&system.rhs.values)
                .map(|(au, b)| b - au)
                .collect();
            let residual = sub.basis.ad_mul(&DVector::from_vec(r));
            assert!(residual.norm() <= 1e-10 * system.rhs.norm(), "L={l}");
        }
        assert!(reduced.solve(6).is_err());
    }

    #[test]
    fn error_curve_is_bounded_below_by_projection() {
        let model = model();
        let train = halton(12, 3, 0);
        let snaps = assemble_snapshots(&model, &train, [0; 32]).unwrap();
        let basis = centered_pod(&snaps, Truncation::Full).unwrap();
        let test = halton(4, 3, 50);
        let reference: Vec<DofVector> = test.points.iter().map(|y| model.solve_hf(y).unwrap()).collect();
        let ls = [0, 1, 3, 6];
        let curve = gpod_error_curve(&model, &basis, &test.points, &reference, &ls).unwrap();
        for (l, mean_g) in &curve {
            let sub = basis.truncated(*l).unwrap();
            let mean_v: f64 = reference
                .iter()
                .map(|u| relative_error(u, &sub.project_onto(u).unwrap()).unwrap())
                .sum::<f64>()
                / reference.len() as f64;
            assert!(mean_v <= mean_g + 1e-12);
        }
        assert!(curve.last().unwrap().1 < curve[0].1);
    }

    #[test]
    fn relative_error_edge_cases() {
        let u = DofVector::new(DofKind::NodalH1, vec![Complex64::new(3.0, 4.0)]);
        let zero = DofVector::zeros(DofKind::NodalH1, 1);
        assert_eq!(relative_error(&u, &u).unwrap(), 0.0);
        assert_eq!(relative_error(&u, &zero).unwrap(), 1.0);
        assert!(matches!(relative_error(&zero, &u), Err(Error::Measure(_))));
    }
}
