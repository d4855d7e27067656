//! JSON experiment configuration.
//!
//! Unknown keys are rejected everywhere. Each pipeline stage is keyed by a
//! SHA-256 digest of the configuration sections it depends on, so changing
//! only the network settings invalidates the network artifact and nothing
//! upstream.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fem::FullOrderModel;
use crate::helmholtz::{HelmholtzData, HelmholtzModel, HelmholtzProblem};
use crate::maxwell::{MaxwellModel, MaxwellProblem, MaxwellSource};
use crate::pod::{PodOptions, SvdMethod, Truncation};
use crate::sampling::{halton, latin_hypercube, SampleSet};
use crate::surrogate::{Architecture, TrainConfig};
use crate::transform::{DecaySpec, Point3};

/// A complex number written as `[re, im]`.
pub type ComplexRepr = [f64; 2];

fn complex(c: ComplexRepr) -> Complex64 {
    Complex64::new(c[0], c[1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum HelmholtzDataConfig {
    Constant { f: ComplexRepr, g: ComplexRepr },
    PlaneWave { direction: Point3 },
}

impl Default for HelmholtzDataConfig {
    fn default() -> Self {
        Self::Constant {
            f: [1.0, 0.0],
            g: [0.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxwellSourceConfig {
    #[default]
    Gaussian,
    Zero,
    Manufactured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    Helmholtz {
        kappa: f64,
        n: usize,
        #[serde(default)]
        data: HelmholtzDataConfig,
    },
    Maxwell {
        n: usize,
        #[serde(default = "one")]
        omega: f64,
        #[serde(default = "unit_mu")]
        mu: ComplexRepr,
        #[serde(default = "default_lambda")]
        lambda: ComplexRepr,
        #[serde(default)]
        source: MaxwellSourceConfig,
    },
}

fn one() -> f64 {
    1.0
}
fn unit_mu() -> ComplexRepr {
    [1.0, 0.0]
}
fn default_lambda() -> ComplexRepr {
    [1.0, -1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    /// Halton training points.
    pub train: usize,
    #[serde(default)]
    pub train_skip: u64,
    /// Latin hypercube test points.
    pub test: usize,
    pub test_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PodConfig {
    #[serde(default = "yes")]
    pub centered: bool,
    pub truncation: Truncation,
    #[serde(default)]
    pub method: SvdMethod,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NnConfig {
    pub architecture: Architecture,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub separate_networks: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub decay: DecaySpec,
    pub sampling: SamplingConfig,
    pub pod: PodConfig,
    pub nn: NnConfig,
    /// Basis sizes `L` at which errors are reported. One network is trained
    /// per nonzero entry.
    pub modes: Vec<usize>,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Desk-scale Helmholtz setting: κ = 1, n = 8, Matérn ν = 0.5, l = 0.1,
    /// θ = 0.1, J = 10, 128 Halton / 64 LHS points, two hidden layers of 30.
    pub fn desk_helmholtz(output_dir: impl Into<PathBuf>) -> Self {
        Self {
            problem: ProblemConfig::Helmholtz {
                kappa: 1.0,
                n: 8,
                data: HelmholtzDataConfig::default(),
            },
            decay: DecaySpec::matern(0.5, 0.1, 0.1, 10).expect("valid decay"),
            sampling: SamplingConfig {
                train: 128,
                train_skip: 0,
                test: 64,
                test_seed: 2024,
            },
            pod: PodConfig {
                centered: true,
                truncation: Truncation::Rank(10),
                method: SvdMethod::Direct,
            },
            nn: NnConfig {
                architecture: Architecture::default(),
                train: TrainConfig::default(),
                separate_networks: false,
            },
            modes: vec![0, 1, 2, 4, 6, 8, 10],
            output_dir: output_dir.into(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match &self.problem {
            ProblemConfig::Helmholtz { kappa, n, .. } => {
                if !(*kappa > 0.0 && kappa.is_finite()) {
                    return bad(format!("kappa must be positive, got {kappa}"));
                }
                if *n == 0 {
                    return bad("mesh size n must be positive".into());
                }
            }
            ProblemConfig::Maxwell { n, omega, .. } => {
                if !(*omega > 0.0 && omega.is_finite()) {
                    return bad(format!("omega must be positive, got {omega}"));
                }
                if *n == 0 {
                    return bad("mesh size n must be positive".into());
                }
            }
        }
        if self.sampling.train < 2 {
            return bad("at least two training points are needed".into());
        }
        if self.sampling.test == 0 {
            return bad("the test set is empty".into());
        }
        if let Truncation::Tolerance(t) = self.pod.truncation {
            if !(t >= 0.0) {
                return bad(format!("truncation tolerance must be nonnegative, got {t}"));
            }
        }
        if self.modes.is_empty() {
            return bad("`modes` is empty".into());
        }
        if self.modes.windows(2).any(|w| w[0] >= w[1]) {
            return bad("`modes` must be strictly increasing".into());
        }
        if let Truncation::Rank(l) = self.pod.truncation {
            if self.max_modes() > l {
                return bad(format!(
                    "modes go up to {} but the basis keeps only {l}",
                    self.max_modes()
                ));
            }
        }
        self.nn.train.validate()
    }

    pub fn max_modes(&self) -> usize {
        self.modes.last().copied().unwrap_or(0)
    }

    pub fn param_dim(&self) -> usize {
        self.decay.dim()
    }

    pub fn pod_options(&self) -> PodOptions {
        PodOptions {
            centered: self.pod.centered,
            truncation: self.pod.truncation,
            method: self.pod.method,
        }
    }

    pub fn train_set(&self) -> SampleSet {
        halton(self.sampling.train, self.param_dim(), self.sampling.train_skip)
    }

    pub fn test_set(&self) -> Result<SampleSet> {
        latin_hypercube(self.sampling.test, self.param_dim(), self.sampling.test_seed)
    }

    pub fn build_model(&self) -> Result<Box<dyn FullOrderModel>> {
        match &self.problem {
            ProblemConfig::Helmholtz { kappa, n, data } => {
                let data = match data {
                    HelmholtzDataConfig::Constant { f, g } => HelmholtzData::Constant {
                        f: complex(*f),
                        g: complex(*g),
                    },
                    HelmholtzDataConfig::PlaneWave { direction } => HelmholtzData::PlaneWave {
                        direction: *direction,
                    },
                };
                let problem = HelmholtzProblem::new(*kappa, *n, self.decay.clone()).with_data(data);
                Ok(Box::new(HelmholtzModel::new(problem)?))
            }
            ProblemConfig::Maxwell {
                n,
                omega,
                mu,
                lambda,
                source,
            } => {
                let source = match source {
                    MaxwellSourceConfig::Gaussian => MaxwellSource::Gaussian,
                    MaxwellSourceConfig::Zero => MaxwellSource::Zero,
                    MaxwellSourceConfig::Manufactured => MaxwellSource::Manufactured,
                };
                let problem = MaxwellProblem::new(*n, self.decay.clone())
                    .with_constants(*omega, complex(*mu), complex(*lambda))
                    .with_source(source);
                Ok(Box::new(MaxwellModel::new(problem)?))
            }
        }
    }

    /// Digest of everything the snapshot stage depends on.
    pub fn snapshot_hash(&self) -> [u8; 32] {
        digest(&[
            b"snapshots",
            &canonical(&self.problem),
            &canonical(&self.decay),
            &canonical(&(self.sampling.train, self.sampling.train_skip)),
        ])
    }

    pub fn pod_hash(&self) -> [u8; 32] {
        digest(&[b"pod", &self.snapshot_hash(), &canonical(&self.pod)])
    }

    pub fn nn_hash(&self) -> [u8; 32] {
        digest(&[b"nn", &self.pod_hash(), &canonical(&self.nn), &canonical(&self.modes)])
    }
}

fn canonical<T: Serialize>(value: &T) -> Vec<u8> {
    serde_json::to_vec(value).expect("configuration serializes")
}

fn digest(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().into()
}

pub fn hex(hash: &[u8; 32]) -> String {
    hash.iter().map(|b| format!("{b:02x}")).collect()
}
