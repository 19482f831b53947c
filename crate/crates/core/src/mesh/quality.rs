use rayon::prelude::*;
use serde::Serialize;

use super::Mesh;
use crate::error::Result;

/// Element quality summary. Angles in degrees.
#[derive(Clone, Debug, Serialize)]
pub struct QualityReport {
    pub min_v_angle: f64,
    /// Element attaining `min_v_angle` (lowest index on ties).
    pub worst_element: usize,
    pub max_shape_ratio: f64,
    /// `theta_K` per element, in element order.
    pub v_angles: Vec<f64>,
}

impl QualityReport {
    /// Elements with `theta_K < threshold`, ascending.
    pub fn offending(&self, threshold: f64) -> Vec<usize> {
        self.v_angles.iter().enumerate().filter(|(_, &a)| a < threshold).map(|(e, _)| e).collect()
    }

    pub fn passes(&self, threshold: f64) -> bool {
        self.min_v_angle >= threshold
    }

    /// Counts of `theta_K` in `bins` equal slices of `[0, 60]` degrees.
    pub fn histogram(&self, bins: usize) -> Vec<usize> {
        let mut out = vec![0; bins.max(1)];
        let n = out.len();
        for &a in &self.v_angles {
            let b = ((a / 60.0) * n as f64) as usize;
            out[b.min(n - 1)] += 1;
        }
        out
    }
}

pub fn audit(mesh: &Mesh) -> Result<QualityReport> {
    let per: Vec<(f64, f64)> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let g = mesh.element_geometry(e)?;
            Ok((g.min_v_angle().to_degrees(), g.h / g.rho))
        })
        .collect::<Result<_>>()?;
    // Sequential reduction keeps ties deterministic.
    let (mut worst, mut min_v, mut max_ratio) = (0, f64::INFINITY, 0.0f64);
    for (e, &(v, r)) in per.iter().enumerate() {
        if v < min_v {
            min_v = v;
            worst = e;
        }
        max_ratio = max_ratio.max(r);
    }
    Ok(QualityReport {
        min_v_angle: min_v,
        worst_element: worst,
        max_shape_ratio: max_ratio,
        v_angles: per.into_iter().map(|(v, _)| v).collect(),
    })
}
