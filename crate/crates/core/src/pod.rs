//! Snapshot matrices and (centered) proper orthogonal decomposition.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{DofKind, DofVector, FullOrderModel};
use crate::sampling::SampleSet;

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    /// One column per parameter point.
    pub data: DMatrix<Complex64>,
    pub params: SampleSet,
    pub kind: DofKind,
    /// Hash of the configuration that produced the snapshots.
    pub fingerprint: [u8; 32],
}

impl SnapshotMatrix {
    pub fn num_dofs(&self) -> usize {
        self.data.nrows()
    }

    pub fn num_snapshots(&self) -> usize {
        self.data.ncols()
    }

    pub fn column(&self, i: usize) -> DofVector {
        DofVector::new(self.kind, self.data.column(i).iter().copied().collect())
    }
}

/// Solve the full-order model at every sample point. Columns follow the
/// sample order regardless of how the work is scheduled; the first failing
/// point (by index) is reported.
pub fn assemble_snapshots<M: FullOrderModel + ?Sized>(
    model: &M,
    params: &SampleSet,
    fingerprint: [u8; 32],
) -> Result<SnapshotMatrix> {
    if !params.is_empty() && params.dim() != model.param_dim() {
        return Err(Error::InvalidArgument(format!(
            "sample dimension {} does not match the model's {}",
            params.dim(),
            model.param_dim()
        )));
    }
    let results: Vec<Result<DofVector>> = params
        .points
        .par_iter()
        .map(|y| model.solve_hf(y))
        .collect();
    let n = model.num_dofs();
    let mut data = DMatrix::zeros(n, params.len());
    for (index, result) in results.into_iter().enumerate() {
        let column = result.map_err(|e| Error::Snapshot {
            index,
            source: Box::new(e),
        })?;
        data.set_column(index, &DVector::from_vec(column.values));
    }
    Ok(SnapshotMatrix {
        data,
        params: params.clone(),
        kind: model.dof_kind(),
        fingerprint,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// Keep this many modes (clamped to the rank).
    Rank(usize),
    /// Keep the fewest modes whose discarded energy is at most `τ²` of the
    /// total.
    Tolerance(f64),
    /// Keep every mode with a nonzero singular value.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SvdMethod {
    /// Thin SVD of the snapshot block.
    #[default]
    Direct,
    /// Eigendecomposition of the `N_s × N_s` Gram matrix. Cheaper for very
    /// tall blocks but squares the condition number.
    Gram,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PodOptions {
    pub centered: bool,
    pub truncation: Truncation,
    pub method: SvdMethod,
}

impl Default for PodOptions {
    fn default() -> Self {
        Self {
            centered: true,
            truncation: Truncation::Full,
            method: SvdMethod::Direct,
        }
    }
}

/// Affine reduced space `mean + range(basis)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedBasis {
    pub mean: DVector<Complex64>,
    /// Orthonormal columns, ordered by decreasing singular value.
    pub basis: DMatrix<Complex64>,
    /// Every positive singular value of the (centered) snapshot block.
    pub singular_values: Vec<f64>,
    pub kind: DofKind,
}

fn column_mean(data: &DMatrix<Complex64>) -> DVector<Complex64> {
    let ns = data.ncols();
    let mut mean = DVector::zeros(data.nrows());
    for c in 0..ns {
        mean += data.column(c);
    }
    if ns > 0 {
        mean /= Complex64::new(ns as f64, 0.0);
    }
    mean
}

/// Scale each column so that its largest-magnitude entry (first on ties) is
/// real and positive.
fn fix_phases(basis: &mut DMatrix<Complex64>) {
    for mut col in basis.column_iter_mut() {
        let mut pivot = Complex64::new(0.0, 0.0);
        for z in col.iter() {
            if z.norm() > pivot.norm() {
                pivot = *z;
            }
        }
        if pivot.norm() > 0.0 {
            let phase = pivot.conj() / pivot.norm();
            col.iter_mut().for_each(|z| *z *= phase);
        }
    }
}

/// Two passes of modified Gram-Schmidt; removes the loss of orthogonality
/// the Gram route picks up for small singular values.
fn reorthonormalize(u: &mut DMatrix<Complex64>) {
    for _ in 0..2 {
        for j in 0..u.ncols() {
            for i in 0..j {
                let proj = u.column(i).dotc(&u.column(j));
                let qi = u.column(i).clone_owned();
                u.column_mut(j).axpy(-proj, &qi, Complex64::new(1.0, 0.0));
            }
            let norm = u.column(j).norm();
            u.column_mut(j).unscale_mut(norm);
        }
    }
}

/// Left singular vectors and singular values, sorted by decreasing value and
/// restricted to the numerically nonzero part.
fn left_singular_pairs(
    x: &DMatrix<Complex64>,
    method: SvdMethod,
    zero_threshold: f64,
) -> Result<(DMatrix<Complex64>, Vec<f64>)> {
    let (n, ns) = x.shape();
    if n == 0 || ns == 0 {
        return Ok((DMatrix::zeros(n, 0), Vec::new()));
    }
    let xf = faer::Mat::<Complex64>::from_fn(n, ns, |r, c| x[(r, c)]);
    let (u, sigma) = match method {
        SvdMethod::Direct => {
            let svd = xf
                .thin_svd()
                .map_err(|e| Error::NumericDomain(format!("SVD did not converge: {e:?}")))?;
            let u = DMatrix::from_fn(n, svd.U().ncols(), |r, c| svd.U()[(r, c)]);
            let sigma = svd.S().column_vector().iter().map(|z| z.re).collect::<Vec<f64>>();
            (u, sigma)
        }
        SvdMethod::Gram => {
            let gram = xf.adjoint() * &xf;
            let eig = gram
                .self_adjoint_eigen(faer::Side::Lower)
                .map_err(|e| Error::NumericDomain(format!("eigensolver did not converge: {e:?}")))?;
            let sigma: Vec<f64> = eig
                .S()
                .column_vector()
                .iter()
                .map(|l| l.re.max(0.0).sqrt())
                .collect();
            // eigenvalues of the Gram matrix are only accurate to eps * lambda_max,
            // so singular values below sqrt(eps) * sigma_max are noise
            let top = sigma.iter().cloned().fold(0.0, f64::max);
            let floor = top * (ns as f64 * f64::EPSILON).sqrt();
            let sigma: Vec<f64> = sigma.into_iter().map(|s| if s > floor { s } else { 0.0 }).collect();
            let vecs = DMatrix::from_fn(ns, ns, |r, c| eig.U()[(r, c)]);
            let mut u = x * vecs;
            for (j, s) in sigma.iter().enumerate() {
                if *s > 0.0 {
                    u.column_mut(j).iter_mut().for_each(|z| *z /= *s);
                }
            }
            (u, sigma)
        }
    };
    if sigma.iter().any(|s| !s.is_finite()) {
        return Err(Error::NumericDomain("non-finite singular value".into()));
    }
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|a, b| sigma[*b].total_cmp(&sigma[*a]).then(a.cmp(b)));
    let kept: Vec<usize> = order.into_iter().filter(|j| sigma[*j] > zero_threshold).collect();
    let mut basis = DMatrix::zeros(n, kept.len());
    for (dst, src) in kept.iter().enumerate() {
        basis.set_column(dst, &u.column(*src));
    }
    if method == SvdMethod::Gram {
        reorthonormalize(&mut basis);
    }
    Ok((basis, kept.iter().map(|j| sigma[*j]).collect()))
}

/// Number of modes needed so that `Σ_{j>L} σ_j² ≤ τ² Σ_j σ_j²`.
pub fn rank_for_tolerance(singular_values: &[f64], tolerance: f64) -> usize {
    let total: f64 = singular_values.iter().map(|s| s * s).sum();
    let budget = tolerance * tolerance * total;
    let mut tail = total;
    for (l, s) in singular_values.iter().enumerate() {
        if tail <= budget {
            return l;
        }
        tail -= s * s;
    }
    singular_values.len()
}

pub fn pod(snapshots: &SnapshotMatrix, options: &PodOptions) -> Result<ReducedBasis> {
    let data = &snapshots.data;
    if options.centered && data.ncols() < 2 {
        return Err(Error::InvalidArgument(
            "centered POD needs at least two snapshots".into(),
        ));
    }
    let mean = if options.centered {
        column_mean(data)
    } else {
        DVector::zeros(data.nrows())
    };
    let mut centered = data.clone();
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }
    let scale = data.norm().max(f64::MIN_POSITIVE);
    let threshold = scale * (data.nrows().max(data.ncols()) as f64) * f64::EPSILON;
    let (mut modes, singular_values) = left_singular_pairs(&centered, options.method, threshold)?;
    let rank = singular_values.len();
    let keep = match options.truncation {
        Truncation::Full => rank,
        Truncation::Rank(l) => {
            if l > rank {
                log::warn!("requested {l} modes but the snapshot rank is {rank}; keeping {rank}");
            }
            l.min(rank)
        }
        Truncation::Tolerance(tau) => {
            if !(tau >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "truncation tolerance must be nonnegative, got {tau}"
                )));
            }
            rank_for_tolerance(&singular_values, tau)
        }
    };
    modes = modes.columns(0, keep).into_owned();
    fix_phases(&mut modes);
    Ok(ReducedBasis {
        mean,
        basis: modes,
        singular_values,
        kind: snapshots.kind,
    })
}

/// Centered POD: SVD of the mean-shifted snapshot block.
pub fn centered_pod(snapshots: &SnapshotMatrix, truncation: Truncation) -> Result<ReducedBasis> {
    pod(
        snapshots,
        &PodOptions {
            centered: true,
            truncation,
            method: SvdMethod::Direct,
        },
    )
}

impl ReducedBasis {
    /// Identity basis of `C^n` with zero mean.
    pub fn identity(kind: DofKind, n: usize) -> Self {
        Self {
            mean: DVector::zeros(n),
            basis: DMatrix::identity(n, n),
            singular_values: vec![1.0; n],
            kind,
        }
    }

    pub fn num_dofs(&self) -> usize {
        self.mean.len()
    }

    /// Number of retained modes `L`.
    pub fn num_modes(&self) -> usize {
        self.basis.ncols()
    }

    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// The nested basis made of the first `l` modes.
    pub fn truncated(&self, l: usize) -> Result<ReducedBasis> {
        if l > self.num_modes() {
            return Err(Error::InvalidArgument(format!(
                "cannot keep {l} of {} modes",
                self.num_modes()
            )));
        }
        Ok(ReducedBasis {
            mean: self.mean.clone(),
            basis: self.basis.columns(0, l).into_owned(),
            singular_values: self.singular_values.clone(),
            kind: self.kind,
        })
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.num_dofs() {
            return Err(Error::InvalidArgument(format!(
                "vector of length {len} does not match basis dimension {}",
                self.num_dofs()
            )));
        }
        Ok(())
    }

    /// Reduced coefficients `V^H (u - ū)`.
    pub fn project(&self, u: &DofVector) -> Result<DVector<Complex64>> {
        self.check_len(u.len())?;
        let shifted = DVector::from_iterator(
            u.len(),
            u.values.iter().zip(self.mean.iter()).map(|(a, m)| a - m),
        );
        Ok(self.basis.ad_mul(&shifted))
    }

    /// Lift `c` back to `V c + ū`.
    pub fn reconstruct(&self, c: &DVector<Complex64>) -> Result<DofVector> {
        if c.len() != self.num_modes() {
            return Err(Error::InvalidArgument(format!(
                "{} coefficients for a basis with {} modes",
                c.len(),
                self.num_modes()
            )));
        }
        let u = &self.basis * c + &self.mean;
        Ok(DofVector::new(self.kind, u.iter().copied().collect()))
    }

    /// `reconstruct(project(u))`, the closest point of the affine space.
    pub fn project_onto(&self, u: &DofVector) -> Result<DofVector> {
        self.reconstruct(&self.project(u)?)
    }

    /// `‖V^H V - I‖_max`.
    pub fn orthonormality_defect(&self) -> f64 {
        let gram = self.basis.ad_mul(&self.basis);
        let l = self.num_modes();
        (&gram - DMatrix::<Complex64>::identity(l, l)).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `Σ_{j>L} σ_j²`.
    pub fn tail_energy(&self) -> f64 {
        self.singular_values.iter().skip(self.num_modes()).map(|s| s * s).sum()
    }

    pub fn total_energy(&self) -> f64 {
        self.singular_values.iter().map(|s| s * s).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{halton, SplitMix64};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn snapshots(data: DMatrix<Complex64>) -> SnapshotMatrix {
        let ns = data.ncols();
        SnapshotMatrix {
            data,
            params: halton(ns, 1, 0),
            kind: DofKind::NodalH1,
            fingerprint: [0; 32],
        }
    }

    fn random_matrix(rng: &mut SplitMix64, rows: usize, cols: usize) -> DMatrix<Complex64> {
        DMatrix::from_fn(rows, cols, |_, _| c(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)))
    }

    #[test]
    fn identical_columns_have_rank_zero() {
        let col = DVector::from_vec(vec![c(1.0, 2.0), c(-0.5, 0.0), c(3.0, -1.0)]);
        let data = DMatrix::from_columns(&[col.clone(), col.clone(), col.clone()]);
        let basis = centered_pod(&snapshots(data), Truncation::Full).unwrap();
        assert_eq!(basis.rank(), 0);
        assert_eq!(basis.num_modes(), 0);
        assert!((&basis.mean - &col).norm() < 1e-15);
    }

    #[test]
    fn antipodal_pair() {
        let col = DVector::from_vec(vec![c(3.0, 0.0), c(0.0, 4.0)]);
        let data = DMatrix::from_columns(&[col.clone(), -col.clone()]);
        let basis = centered_pod(&snapshots(data), Truncation::Full).unwrap();
        assert!(basis.mean.norm() < 1e-15);
        assert_eq!(basis.rank(), 1);
        assert!((basis.singular_values[0] - 5.0 * 2f64.sqrt()).abs() < 1e-12);
        // largest entry 4i becomes real positive: v = (3/5)(-i, ...)·... up to that phase
        let v = basis.basis.column(0);
        assert!((v[1] - c(0.8, 0.0)).norm() < 1e-14, "{v}");
        assert!((v[0] - c(0.0, -0.6)).norm() < 1e-14, "{v}");
    }

    #[test]
    fn eckart_young_identity_and_orthonormality() {
        let mut rng = SplitMix64::new(3);
        let data = random_matrix(&mut rng, 40, 10);
        let s = snapshots(data);
        let full = centered_pod(&s, Truncation::Full).unwrap();
        assert_eq!(full.rank(), 9);
        assert!(full.singular_values.windows(2).all(|w| w[0] >= w[1]));
        let total = full.total_energy();
        for l in 0..=full.rank() {
            let basis = full.truncated(l).unwrap();
            assert!(basis.orthonormality_defect() < 1e-10);
            let residual: f64 = (0..s.num_snapshots())
                .map(|i| {
                    let u = s.column(i);
                    let p = basis.project_onto(&u).unwrap();
                    u.values.iter().zip(&p.values).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>()
                })
                .sum();
            assert!((residual - basis.tail_energy()).abs() <= 1e-9 * total, "L={l}");
        }
    }

    #[test]
    fn gram_route_agrees_with_direct_svd() {
        let mut rng = SplitMix64::new(21);
        let s = snapshots(random_matrix(&mut rng, 60, 12));
        let direct = centered_pod(&s, Truncation::Full).unwrap();
        let gram = pod(
            &s,
            &PodOptions {
                method: SvdMethod::Gram,
                ..PodOptions::default()
            },
        )
        .unwrap();
        assert_eq!(direct.rank(), gram.rank());
        for (a, b) in direct.singular_values.iter().zip(&gram.singular_values) {
            assert!((a - b).abs() <= 1e-8 * direct.singular_values[0]);
        }
        assert!((&direct.basis - &gram.basis).camax() < 1e-8);
    }

    #[test]
    fn tolerance_truncation() {
        let sv = [4.0, 2.0, 1.0, 0.5];
        let total: f64 = sv.iter().map(|s| s * s).sum();
        assert_eq!(rank_for_tolerance(&sv, 0.0), 4);
        assert_eq!(rank_for_tolerance(&sv, 1.0), 0);
        // tail after 2 modes: 1.25
        let tau = (1.25 / total).sqrt();
        assert_eq!(rank_for_tolerance(&sv, tau), 2);
        assert_eq!(rank_for_tolerance(&sv, tau * 0.999), 3);
    }

    #[test]
    fn project_and_reconstruct() {
        let mut rng = SplitMix64::new(9);
        let s = snapshots(random_matrix(&mut rng, 30, 8));
        let basis = centered_pod(&s, Truncation::Rank(4)).unwrap();
        let mean = DofVector::new(DofKind::NodalH1, basis.mean.iter().copied().collect());
        assert!(basis.project(&mean).unwrap().norm() < 1e-14);
        for k in 0..4 {
            let mut e = DVector::zeros(4);
            e[k] = c(1.0, 0.0);
            let u = basis.reconstruct(&e).unwrap();
            assert!((basis.project(&u).unwrap() - &e).norm() < 1e-12);
        }
        let u = DofVector::new(
            DofKind::NodalH1,
            (0..30).map(|_| c(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0))).collect(),
        );
        let best = basis.project_onto(&u).unwrap();
        let dist = |v: &DofVector| -> f64 {
            u.values.iter().zip(&v.values).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
        };
        for _ in 0..100 {
            let other = DVector::from_fn(4, |_, _| c(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)));
            assert!(dist(&best) <= dist(&basis.reconstruct(&other).unwrap()) + 1e-12);
        }
        assert!(basis.project(&DofVector::zeros(DofKind::NodalH1, 3)).is_err());
        assert!(basis.reconstruct(&DVector::zeros(3)).is_err());
    }

    #[test]
    fn rank_request_is_clamped() {
        let mut rng = SplitMix64::new(1);
        let s = snapshots(random_matrix(&mut rng, 10, 4));
        let basis = centered_pod(&s, Truncation::Rank(50)).unwrap();
        assert_eq!(basis.num_modes(), 3);
        assert!(centered_pod(&snapshots(random_matrix(&mut rng, 5, 1)), Truncation::Full).is_err());
    }

    #[test]
    fn uncentered_leading_value_dominates() {
        let mut rng = SplitMix64::new(13);
        let data = random_matrix(&mut rng, 20, 6).add_scalar(c(2.0, 1.0));
        let s = snapshots(data);
        let centered = centered_pod(&s, Truncation::Full).unwrap();
        let plain = pod(
            &s,
            &PodOptions {
                centered: false,
                ..PodOptions::default()
            },
        )
        .unwrap();
        assert!(plain.mean.iter().all(|z| *z == c(0.0, 0.0)));
        assert!(plain.singular_values[0] >= centered.singular_values[0]);
    }
}
