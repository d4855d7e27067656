//! Affine-parametric deformation of the reference cube `(-1, 1)^3`.
//!
//! The map is `T(x; y) = x + sum_j y_j mu_j (0, 0, sin(pi j x_1))`: only the
//! third coordinate moves, and the size of the `j`-th mode is set by a decay
//! family for the coefficients `mu_j`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point3 = [f64; 3];
pub type Matrix3 = [[f64; 3]; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayFamily {
    /// `mu_j = theta * j^-(r + 1)`.
    Algebraic { r: f64, theta: f64 },
    /// Matérn-like covariance eigenvalue decay with smoothness `nu` and
    /// length scale `l`.
    Matern { nu: f64, l: f64, theta: f64 },
}

/// Decay family plus truncation dimension `J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DecaySpecRepr", into = "DecaySpecRepr")]
pub struct DecaySpec {
    family: DecayFamily,
    dim: usize,
}

impl DecaySpec {
    pub fn algebraic(r: f64, theta: f64, dim: usize) -> Result<Self> {
        Self::new(DecayFamily::Algebraic { r, theta }, dim)
    }

    pub fn matern(nu: f64, l: f64, theta: f64, dim: usize) -> Result<Self> {
        Self::new(DecayFamily::Matern { nu, l, theta }, dim)
    }

    pub fn new(family: DecayFamily, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "parameter dimension J must be positive".into(),
            ));
        }
        match family {
            DecayFamily::Algebraic { r, theta } => {
                if !(r > 1.0 && r.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "algebraic decay needs r > 1, got {r}"
                    )));
                }
                check_theta(theta)?;
            }
            DecayFamily::Matern { nu, l, theta } => {
                if !(nu > 0.0 && nu.is_finite()) || !(l > 0.0 && l.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "Matérn decay needs nu > 0 and l > 0, got nu={nu}, l={l}"
                    )));
                }
                check_theta(theta)?;
            }
        }
        Ok(Self { family, dim })
    }

    pub fn family(&self) -> DecayFamily {
        self.family
    }

    /// Truncation dimension `J`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// All `J` coefficients `mu_1, ..., mu_J`.
    pub fn coefficients(&self) -> Result<Vec<f64>> {
        (1..=self.dim).map(|j| coefficient(j, self)).collect()
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "scaling theta must be positive, got {theta}"
        )))
    }
}

/// Flat JSON representation: `{"family": "algebraic", "r": .., "theta": .., "J": ..}`
/// or `{"family": "matern", "nu": .., "l": .., "theta": .., "J": ..}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DecaySpecRepr {
    family: FamilyTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    l: Option<f64>,
    theta: f64,
    #[serde(rename = "J")]
    dim: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum FamilyTag {
    Algebraic,
    Matern,
}

impl TryFrom<DecaySpecRepr> for DecaySpec {
    type Error = Error;

    fn try_from(repr: DecaySpecRepr) -> Result<Self> {
        let family = match repr.family {
            FamilyTag::Algebraic => {
                if repr.nu.is_some() || repr.l.is_some() {
                    return Err(Error::Config(
                        "algebraic decay takes `r` and `theta` only".into(),
                    ));
                }
                let r = repr
                    .r
                    .ok_or_else(|| Error::Config("algebraic decay needs `r`".into()))?;
                DecayFamily::Algebraic {
                    r,
                    theta: repr.theta,
                }
            }
            FamilyTag::Matern => {
                if repr.r.is_some() {
                    return Err(Error::Config("Matérn decay does not take `r`".into()));
                }
                let nu = repr
                    .nu
                    .ok_or_else(|| Error::Config("Matérn decay needs `nu`".into()))?;
                let l = repr
                    .l
                    .ok_or_else(|| Error::Config("Matérn decay needs `l`".into()))?;
                DecayFamily::Matern {
                    nu,
                    l,
                    theta: repr.theta,
                }
            }
        };
        DecaySpec::new(family, repr.dim)
    }
}

impl From<DecaySpec> for DecaySpecRepr {
    fn from(spec: DecaySpec) -> Self {
        match spec.family {
            DecayFamily::Algebraic { r, theta } => DecaySpecRepr {
                family: FamilyTag::Algebraic,
                r: Some(r),
                nu: None,
                l: None,
                theta,
                dim: spec.dim,
            },
            DecayFamily::Matern { nu, l, theta } => DecaySpecRepr {
                family: FamilyTag::Matern,
                r: None,
                nu: Some(nu),
                l: Some(l),
                theta,
                dim: spec.dim,
            },
        }
    }
}

/// The deformation coefficient `mu_j` (1-based `j`).
pub fn coefficient(j: usize, spec: &DecaySpec) -> Result<f64> {
    if j == 0 || j > spec.dim {
        return Err(Error::InvalidArgument(format!(
            "coefficient index {j} outside 1..={}",
            spec.dim
        )));
    }
    let jf = j as f64;
    let value = match spec.family {
        DecayFamily::Algebraic { r, theta } => theta * jf.powf(-(r + 1.0)),
        DecayFamily::Matern { nu, l, theta } => {
            let a = 2.0 * nu / (l * l);
            let ratio = gamma(nu + 0.5) / gamma(nu);
            theta * a.powf(nu) / (a + PI * PI * jf * jf).powf(nu + 0.5) * ratio
        }
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NumericDomain(format!(
            "coefficient mu_{j} is not finite for {:?}",
            spec.family
        )))
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function via the Lanczos approximation (g = 7, 9 terms) with
/// reflection for `x < 1/2`.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS_COEFFS[0];
        for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        // split the power to delay overflow for large arguments
        let half = t.powf(0.5 * (x + 0.5));
        (2.0 * PI).sqrt() * half * (half * (-t).exp()) * acc
    }
}

/// Point `y` of the truncated parameter cube `[-1, 1]^J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamPoint(Vec<f64>);

impl ParamPoint {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(-1.0..=1.0).contains(*v))
        {
            return Err(Error::InvalidArgument(format!(
                "parameter component {i} = {v} outside [-1, 1]"
            )));
        }
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    /// Unit vector `e_k` (0-based `k`).
    pub fn unit(dim: usize, k: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[k] = 1.0;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianData {
    pub dt: Matrix3,
    pub det: f64,
    pub inv_transpose: Matrix3,
}

/// The coefficient sequence of a [`DecaySpec`], evaluated once and reused
/// for many parameter points.
#[derive(Debug, Clone)]
pub struct Deformation {
    spec: DecaySpec,
    coefficients: Vec<f64>,
}

impl Deformation {
    pub fn new(spec: DecaySpec) -> Result<Self> {
        let coefficients = spec.coefficients()?;
        let amplitude: f64 = coefficients.iter().sum();
        if amplitude > 1.0 {
            log::warn!(
                "deformation amplitude sum(mu_j) = {amplitude:.3} exceeds 1; deformed faces may self-intersect"
            );
        }
        Ok(Self { spec, coefficients })
    }

    pub fn spec(&self) -> &DecaySpec {
        &self.spec
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Bind a parameter point, producing the concrete map `T(.; y)`.
    pub fn at(&self, y: &ParamPoint) -> Result<DeformedMap> {
        if y.dim() != self.spec.dim {
            return Err(Error::InvalidArgument(format!(
                "parameter has dimension {}, deformation expects {}",
                y.dim(),
                self.spec.dim
            )));
        }
        let amplitudes = y
            .as_slice()
            .iter()
            .zip(&self.coefficients)
            .map(|(yj, mu)| yj * mu)
            .collect();
        Ok(DeformedMap { amplitudes })
    }
}

/// `T(.; y)` with the products `y_j mu_j` folded in.
#[derive(Debug, Clone)]
pub struct DeformedMap {
    amplitudes: Vec<f64>,
}

impl DeformedMap {
    pub fn identity() -> Self {
        Self {
            amplitudes: Vec::new(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.amplitudes.iter().all(|a| *a == 0.0)
    }

    fn displacement(&self, x1: f64) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| a * (PI * (i + 1) as f64 * x1).sin())
            .sum()
    }

    /// `d/dx_1` of the third component.
    fn slope(&self, x1: f64) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let k = PI * (i + 1) as f64;
                a * k * (k * x1).cos()
            })
            .sum()
    }

    pub fn map_point(&self, xhat: &Point3) -> Point3 {
        [xhat[0], xhat[1], xhat[2] + self.displacement(xhat[0])]
    }

    /// `T^{-1}`: the reference point mapped to `x`.
    pub fn pull_point(&self, x: &Point3) -> Point3 {
        [x[0], x[1], x[2] - self.displacement(x[0])]
    }

    pub fn jacobian(&self, xhat: &Point3) -> JacobianData {
        let c = self.slope(xhat[0]);
        let dt = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [c, 0.0, 1.0]];
        let inv_transpose = [[1.0, 0.0, -c], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        JacobianData {
            dt,
            det: det3(&dt),
            inv_transpose,
        }
    }

    pub fn surface_jacobian(&self, xhat: &Point3, normal: &Point3) -> f64 {
        let jac = self.jacobian(xhat);
        jac.det * norm3(&mat_vec(&jac.inv_transpose, normal))
    }
}

pub fn map_point(xhat: &Point3, y: &ParamPoint, spec: &DecaySpec) -> Result<Point3> {
    Ok(Deformation::new(*spec)?.at(y)?.map_point(xhat))
}

pub fn jacobian(xhat: &Point3, y: &ParamPoint, spec: &DecaySpec) -> Result<JacobianData> {
    Ok(Deformation::new(*spec)?.at(y)?.jacobian(xhat))
}

pub fn surface_jacobian(
    xhat: &Point3,
    normal: &Point3,
    y: &ParamPoint,
    spec: &DecaySpec,
) -> Result<f64> {
    Ok(Deformation::new(*spec)?
        .at(y)?
        .surface_jacobian(xhat, normal))
}

pub(crate) fn det3(m: &Matrix3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub(crate) fn mat_vec(m: &Matrix3, v: &Point3) -> Point3 {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

pub(crate) fn dot3(a: &Point3, b: &Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm3(a: &Point3) -> f64 {
    dot3(a, a).sqrt()
}

pub(crate) fn cross3(a: &Point3, b: &Point3) -> Point3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn sub3(a: &Point3, b: &Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}
