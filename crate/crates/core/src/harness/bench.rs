//! Online query timings for the three solvers.

use std::time::Instant;

use serde::Serialize;

use super::pipeline::Pipeline;
use crate::error::{Error, Result};
use crate::rom::ReducedSystem;
use crate::sampling::latin_hypercube;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchReport {
    pub modes: usize,
    pub queries: usize,
    /// Median seconds per query.
    pub t_hf: f64,
    pub t_gpod: f64,
    pub t_podnn: f64,
}

impl BenchReport {
    pub fn hf_over_podnn(&self) -> f64 {
        self.t_hf / self.t_podnn
    }

    pub fn gpod_over_podnn(&self) -> f64 {
        self.t_gpod / self.t_podnn
    }

    pub fn to_csv(&self) -> String {
        format!(
            "L,queries,t_HF,t_GPOD,t_PODNN,HF_over_PODNN,GPOD_over_PODNN\n{},{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}\n",
            self.modes,
            self.queries,
            self.t_hf,
            self.t_gpod,
            self.t_podnn,
            self.hf_over_podnn(),
            self.gpod_over_podnn()
        )
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median wall-clock time per query at `modes` basis functions over
/// `queries` fresh parameter points. The full-order and Galerkin timings
/// include assembly; the network timing covers the forward pass and the
/// lift to the full space only.
pub fn bench_speedup(pipeline: &mut Pipeline, queries: usize, modes: usize) -> Result<BenchReport> {
    if queries == 0 {
        return Err(Error::InvalidArgument("no benchmark queries requested".into()));
    }
    let basis = pipeline.basis()?.truncated(modes)?;
    let nets = pipeline.surrogates()?;
    let net = nets
        .get(modes)
        .ok_or_else(|| Error::Config(format!("no network trained for L = {modes}")))?
        .clone();
    let cfg = pipeline.config();
    let points = latin_hypercube(queries, cfg.param_dim(), cfg.sampling.test_seed ^ 0xB3AC_0FF5)?.points;
    let model = pipeline.model();

    let time = |f: &mut dyn FnMut() -> Result<()>| -> Result<f64> {
        let start = Instant::now();
        f()?;
        Ok(start.elapsed().as_secs_f64())
    };
    // warm caches and thread pools once
    model.solve_hf(&points[0])?;

    let mut t_hf = Vec::with_capacity(queries);
    let mut t_gpod = Vec::with_capacity(queries);
    let mut t_nn = Vec::with_capacity(queries);
    for y in &points {
        t_hf.push(time(&mut || model.solve_hf(y).map(drop))?);
        t_gpod.push(time(&mut || {
            let reduced = ReducedSystem::new(&model.assemble(y)?, &basis)?;
            basis.reconstruct(&reduced.solve(modes)?).map(drop)
        })?);
        t_nn.push(time(&mut || net.predict_solution(y, &basis).map(drop))?);
    }
    Ok(BenchReport {
        modes,
        queries,
        t_hf: median(t_hf),
        t_gpod: median(t_gpod),
        t_podnn: median(t_nn),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 3.0, 2.0]), 2.5);
    }
}
