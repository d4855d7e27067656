//! Relative error measures and the CSV report.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::DofVector;
use crate::rom::relative_error;

/// Relative errors of the Galerkin, network and projection solutions
/// against one high-fidelity solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorMeasures {
    pub e_g: f64,
    pub e_nn: f64,
    pub e_v: f64,
}

pub fn error_measures(
    hf: &DofVector,
    galerkin: &DofVector,
    network: &DofVector,
    projection: &DofVector,
) -> Result<ErrorMeasures> {
    Ok(ErrorMeasures {
        e_g: relative_error(hf, galerkin)?,
        e_nn: relative_error(hf, network)?,
        e_v: relative_error(hf, projection)?,
    })
}

pub const CSV_HEADER: &str = "L,mean_E_G,mean_E_V,mean_E_NN";
pub const POINTS_CSV_HEADER: &str = "L,point,E_G,E_V,E_NN";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub modes: Vec<usize>,
    /// `per_point[k][i]` holds the errors at `modes[k]` for test point `i`.
    pub per_point: Vec<Vec<ErrorMeasures>>,
}

impl ErrorReport {
    pub fn new(modes: Vec<usize>, per_point: Vec<Vec<ErrorMeasures>>) -> Result<Self> {
        if modes.len() != per_point.len() || per_point.iter().any(|p| p.is_empty()) {
            return Err(Error::InvalidArgument("malformed error report".into()));
        }
        Ok(Self { modes, per_point })
    }

    pub fn num_points(&self) -> usize {
        self.per_point[0].len()
    }

    /// Arithmetic means over the test set at every `L`.
    pub fn means(&self) -> Vec<(usize, ErrorMeasures)> {
        self.modes
            .iter()
            .zip(&self.per_point)
            .map(|(&l, pts)| {
                let n = pts.len() as f64;
                let sum = pts.iter().fold((0.0, 0.0, 0.0), |acc, e| (acc.0 + e.e_g, acc.1 + e.e_nn, acc.2 + e.e_v));
                (
                    l,
                    ErrorMeasures {
                        e_g: sum.0 / n,
                        e_nn: sum.1 / n,
                        e_v: sum.2 / n,
                    },
                )
            })
            .collect()
    }

    pub fn mean_at(&self, l: usize) -> Option<ErrorMeasures> {
        self.means().into_iter().find(|(m, _)| *m == l).map(|(_, e)| e)
    }

    /// Entries `(L, point)` where the projection error exceeds the Galerkin
    /// or network error by more than `slack`.
    pub fn ordering_violations(&self, slack: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (&l, pts) in self.modes.iter().zip(&self.per_point) {
            for (i, e) in pts.iter().enumerate() {
                if e.e_v > e.e_g + slack || e.e_v > e.e_nn + slack {
                    out.push((l, i));
                }
            }
        }
        out
    }

    /// Mean errors, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for (l, e) in self.means() {
            writeln!(s, "{l},{:.16e},{:.16e},{:.16e}", e.e_g, e.e_v, e.e_nn).unwrap();
        }
        s
    }

    pub fn points_csv(&self) -> String {
        let mut s = String::from(POINTS_CSV_HEADER);
        s.push('\n');
        for (&l, pts) in self.modes.iter().zip(&self.per_point) {
            for (i, e) in pts.iter().enumerate() {
                writeln!(s, "{l},{i},{:.16e},{:.16e},{:.16e}", e.e_g, e.e_v, e.e_nn).unwrap();
            }
        }
        s
    }
}
