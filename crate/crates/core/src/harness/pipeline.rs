//! The staged offline/online pipeline: snapshots → pod → train → eval.
//!
//! Every stage persists its result under the output directory together with
//! the digest of the configuration sections it depends on. A stage whose
//! artifact exists with a matching digest is loaded instead of recomputed.

use std::path::PathBuf;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::archive::Archive;
use super::config::{hex, ExperimentConfig};
use super::metrics::{error_measures, ErrorMeasures, ErrorReport};
use crate::error::{Error, Result};
use crate::fem::FullOrderModel;
use crate::pod::{assemble_snapshots, pod, ReducedBasis, SnapshotMatrix};
use crate::rom::ReducedSystem;
use crate::surrogate::{Mlp, PodNn, TrainingSet};

pub const SNAPSHOTS_FILE: &str = "snapshots.wrom";
pub const POD_FILE: &str = "pod.wrom";
pub const NN_FILE: &str = "nn.wrom";
pub const ERRORS_FILE: &str = "errors.csv";
pub const POINT_ERRORS_FILE: &str = "errors_points.csv";

/// Trained networks, one per nonzero `L` in the configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Surrogates {
    pub by_modes: Vec<(usize, PodNn)>,
}

impl Surrogates {
    pub fn get(&self, l: usize) -> Option<&PodNn> {
        self.by_modes.iter().find(|(m, _)| *m == l).map(|(_, n)| n)
    }
}

pub struct Pipeline {
    config: ExperimentConfig,
    model: Box<dyn FullOrderModel>,
    computed: Vec<&'static str>,
}

impl std::fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Pipeline")
            .field("output_dir", &self.config.output_dir)
            .field("computed", &self.computed)
            .finish()
    }
}

impl Pipeline {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let model = config.build_model().map_err(|e| e.in_stage("setup"))?;
        std::fs::create_dir_all(&config.output_dir)?;
        Ok(Self {
            config,
            model,
            computed: Vec::new(),
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn model(&self) -> &dyn FullOrderModel {
        self.model.as_ref()
    }

    /// Stages that were computed (rather than loaded) by this instance.
    pub fn computed_stages(&self) -> &[&'static str] {
        &self.computed
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.config.output_dir.join(file)
    }

    /// Load `file` if its digest matches `hash`, otherwise compute and save.
    fn cached<T>(
        &mut self,
        stage: &'static str,
        file: &str,
        hash: [u8; 32],
        decode: impl FnOnce(&Self, &Archive) -> Result<T>,
        compute: impl FnOnce(&Self) -> Result<T>,
        encode: impl FnOnce(&T, &mut Archive),
    ) -> Result<T> {
        let path = self.path(file);
        if path.exists() {
            match Archive::peek_hash(&path) {
                Ok(h) if h == hash => {
                    log::info!("{stage}: loading {}", path.display());
                    let archive = Archive::load(&path, Some(&hash)).map_err(|e| e.in_stage(stage))?;
                    return decode(self, &archive).map_err(|e| e.in_stage(stage));
                }
                Ok(h) => log::info!("{stage}: {} is stale ({} != {}); recomputing", path.display(), hex(&h), hex(&hash)),
                Err(e) => log::warn!("{stage}: ignoring unreadable artifact: {e}"),
            }
        }
        let start = Instant::now();
        let value = compute(self).map_err(|e| e.in_stage(stage))?;
        log::info!("{stage}: computed in {:.2?}", start.elapsed());
        let mut archive = Archive::new(hash);
        encode(&value, &mut archive);
        archive.save(&path).map_err(|e| e.in_stage(stage))?;
        self.computed.push(stage);
        Ok(value)
    }

    pub fn snapshots(&mut self) -> Result<SnapshotMatrix> {
        let hash = self.config.snapshot_hash();
        self.cached(
            "snapshots",
            SNAPSHOTS_FILE,
            hash,
            |p, a| {
                let data = a.complex("snapshots")?.clone();
                let params = p.config.train_set();
                if data.nrows() != p.model.num_dofs() || data.ncols() != params.len() {
                    return Err(Error::Archive {
                        path: p.path(SNAPSHOTS_FILE),
                        reason: format!("snapshot block has shape {:?}", data.shape()),
                    });
                }
                Ok(SnapshotMatrix {
                    data,
                    params,
                    kind: p.model.dof_kind(),
                    fingerprint: hash,
                })
            },
            |p| assemble_snapshots(p.model.as_ref(), &p.config.train_set(), hash),
            |s, a| {
                a.insert("snapshots", s.data.clone());
                let j = s.params.dim();
                a.insert(
                    "params",
                    DMatrix::from_iterator(j, s.params.len(), s.params.points.iter().flat_map(|p| p.as_slice().to_vec())),
                );
            },
        )
    }

    pub fn basis(&mut self) -> Result<ReducedBasis> {
        let hash = self.config.pod_hash();
        let snapshots = if self.path(POD_FILE).exists() && Archive::peek_hash(&self.path(POD_FILE)).ok() == Some(hash) {
            None
        } else {
            Some(self.snapshots()?)
        };
        let kind = self.model.dof_kind();
        self.cached(
            "pod",
            POD_FILE,
            hash,
            |_, a| {
                Ok(ReducedBasis {
                    mean: a.complex("mean")?.column(0).into_owned(),
                    basis: a.complex("basis")?.clone(),
                    singular_values: a.real("singular_values")?.iter().copied().collect(),
                    kind,
                })
            },
            |p| pod(snapshots.as_ref().expect("snapshots computed"), &p.config.pod_options()),
            |b, a| {
                a.insert("mean", DMatrix::from_column_slice(b.mean.len(), 1, b.mean.as_slice()));
                a.insert("basis", b.basis.clone());
                a.insert("singular_values", DMatrix::from_column_slice(b.singular_values.len(), 1, &b.singular_values));
            },
        )
    }

    pub fn surrogates(&mut self) -> Result<Surrogates> {
        let hash = self.config.nn_hash();
        let fresh = self.path(NN_FILE).exists() && Archive::peek_hash(&self.path(NN_FILE)).ok() == Some(hash);
        let inputs = if fresh {
            None
        } else {
            let snapshots = self.snapshots()?;
            let basis = self.basis()?;
            Some((snapshots, basis))
        };
        self.cached(
            "train",
            NN_FILE,
            hash,
            |p, a| decode_networks(a, &p.config),
            |p| {
                let (snapshots, basis) = inputs.as_ref().expect("inputs computed");
                train_networks(&p.config, snapshots, basis)
            },
            encode_networks,
        )
    }

    pub fn evaluate(&mut self) -> Result<ErrorReport> {
        let basis = self.basis()?;
        let nets = self.surrogates()?;
        let start = Instant::now();
        let report = evaluate(self.model.as_ref(), &self.config, &basis, &nets).map_err(|e| e.in_stage("eval"))?;
        log::info!("eval: {} test points in {:.2?}", report.num_points(), start.elapsed());
        let write = |file: &str, text: String| -> Result<()> {
            std::fs::write(self.path(file), text).map_err(|e| Error::from(e).in_stage("eval"))
        };
        write(ERRORS_FILE, report.to_csv())?;
        write(POINT_ERRORS_FILE, report.points_csv())?;
        self.computed.push("eval");
        Ok(report)
    }
}

/// Run every stage, reusing valid artifacts.
pub fn run_pipeline(config: &ExperimentConfig) -> Result<ErrorReport> {
    Pipeline::new(config.clone())?.evaluate()
}

fn train_networks(config: &ExperimentConfig, snapshots: &SnapshotMatrix, basis: &ReducedBasis) -> Result<Surrogates> {
    let max_l = config.max_modes();
    if basis.num_modes() < max_l {
        return Err(Error::Config(format!(
            "modes go up to {max_l} but the basis has only {} (snapshot rank {})",
            basis.num_modes(),
            basis.rank()
        )));
    }
    let basis = basis.truncated(max_l)?;
    let full = TrainingSet::from_snapshots(snapshots, &basis)?;
    let nonzero: Vec<usize> = config.modes.iter().copied().filter(|&l| l > 0).collect();
    let trained: Vec<Result<(usize, PodNn)>> = nonzero
        .par_iter()
        .map(|&l| {
            let cols: Vec<usize> = (0..l).chain(max_l..max_l + l).collect();
            let set = full.select_outputs(&cols);
            let mut train = config.nn.train.clone();
            train.seed = train.seed.wrapping_add(1000 * l as u64);
            let start = Instant::now();
            let (net, history) = PodNn::fit(&set, config.nn.architecture, &train, config.nn.separate_networks)?;
            let last: Vec<f64> = history.iter().map(|h| *h.last().unwrap()).collect();
            log::info!("train: L = {l} final loss {last:?} in {:.2?}", start.elapsed());
            Ok((l, net))
        })
        .collect();
    Ok(Surrogates {
        by_modes: trained.into_iter().collect::<Result<_>>()?,
    })
}

fn encode_networks(s: &Surrogates, a: &mut Archive) {
    for (l, model) in &s.by_modes {
        let layout = [model.networks().len() as f64, if model.is_separate() { 1.0 } else { 0.0 }];
        a.insert(format!("L{l}.layout"), DMatrix::from_row_slice(1, 2, &layout));
        for (k, net) in model.networks().iter().enumerate() {
            for i in 0..net.num_layers() {
                let (w, b) = net.layer(i);
                let (n_in, n_out) = (net.widths()[i], net.widths()[i + 1]);
                a.insert(format!("L{l}.net{k}.W{i}"), DMatrix::from_row_slice(n_out, n_in, w));
                a.insert(format!("L{l}.net{k}.b{i}"), DMatrix::from_column_slice(n_out, 1, b));
            }
        }
    }
}

fn decode_networks(a: &Archive, config: &ExperimentConfig) -> Result<Surrogates> {
    let mut by_modes = Vec::new();
    for &l in config.modes.iter().filter(|&&l| l > 0) {
        let layout = a.real(&format!("L{l}.layout"))?;
        let (count, separate) = (layout[(0, 0)] as usize, layout[(0, 1)] != 0.0);
        let mut nets = Vec::with_capacity(count);
        for k in 0..count {
            let mut widths = Vec::new();
            let mut params = Vec::new();
            let mut i = 0;
            while let Ok(w) = a.real(&format!("L{l}.net{k}.W{i}")) {
                let b = a.real(&format!("L{l}.net{k}.b{i}"))?;
                if widths.is_empty() {
                    widths.push(w.ncols());
                }
                widths.push(w.nrows());
                // the flat layout is row-major
                params.extend(w.transpose().iter().copied());
                params.extend(b.iter().copied());
                i += 1;
            }
            nets.push(Mlp::from_params(widths, params)?);
        }
        let model = if separate { PodNn::separate(nets)? } else { PodNn::joint(nets.into_iter().next().ok_or_else(|| Error::Config(format!("no network stored for L = {l}")))?)? };
        by_modes.push((l, model));
    }
    Ok(Surrogates { by_modes })
}

/// Errors at every configured `L` for every test point.
pub fn evaluate(
    model: &dyn FullOrderModel,
    config: &ExperimentConfig,
    basis: &ReducedBasis,
    nets: &Surrogates,
) -> Result<ErrorReport> {
    let max_l = config.max_modes();
    let basis = basis.truncated(max_l.min(basis.num_modes()))?;
    if basis.num_modes() < max_l {
        return Err(Error::Config(format!("basis has only {} modes", basis.num_modes())));
    }
    let subs: Vec<ReducedBasis> = config.modes.iter().map(|&l| basis.truncated(l)).collect::<Result<_>>()?;
    let test = config.test_set()?;
    let per_point: Vec<Result<Vec<ErrorMeasures>>> = test
        .points
        .par_iter()
        .map(|y| {
            let system = model.assemble(y)?;
            let hf = system.solve()?;
            let reduced = ReducedSystem::new(&system, &basis)?;
            config
                .modes
                .iter()
                .zip(&subs)
                .map(|(&l, sub)| {
                    let galerkin = sub.reconstruct(&reduced.solve(l)?)?;
                    let network = match nets.get(l) {
                        Some(net) => net.predict_solution(y, sub)?,
                        None if l == 0 => sub.reconstruct(&DVector::zeros(0))?,
                        None => return Err(Error::Config(format!("no network trained for L = {l}"))),
                    };
                    error_measures(&hf, &galerkin, &network, &sub.project_onto(&hf)?)
                })
                .collect()
        })
        .collect();
    let per_point = per_point.into_iter().collect::<Result<Vec<_>>>()?;
    let by_modes = (0..config.modes.len())
        .map(|k| per_point.iter().map(|p| p[k]).collect())
        .collect();
    ErrorReport::new(config.modes.clone(), by_modes)
}
