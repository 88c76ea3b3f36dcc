use std::io::Write;
use std::str::FromStr;

use super::{evaluate_metrics, train, TrainConfig};
use crate::geometry::TriangleMesh;
use crate::io::{normalize_curves, perturb_curves, CurveSet};
use crate::{Error, Result};

/// The desk-scale ablation sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    /// Smoothness weight.
    WeightSweep,
    /// Number of zero-set samples.
    QzeroSweep,
    /// Gaussian input noise.
    NoiseSweep,
    /// Genus at every refresh of a single run.
    GenusCurve,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "weight_sweep" => Ok(Suite::WeightSweep),
            "qzero_sweep" => Ok(Suite::QzeroSweep),
            "noise_sweep" => Ok(Suite::NoiseSweep),
            "genus_curve" => Ok(Suite::GenusCurve),
            other => Err(Error::Config(format!(
                "unknown suite {other:?} (expected weight_sweep, qzero_sweep, noise_sweep, genus_curve)"
            ))),
        }
    }
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::WeightSweep => "weight_sweep",
            Suite::QzeroSweep => "qzero_sweep",
            Suite::NoiseSweep => "noise_sweep",
            Suite::GenusCurve => "genus_curve",
        }
    }

    fn parameter(self) -> &'static str {
        match self {
            Suite::WeightSweep => "lambda_smooth",
            Suite::QzeroSweep => "n_qzero",
            Suite::NoiseSweep => "sigma",
            Suite::GenusCurve => "iteration",
        }
    }

    /// Default settings swept by [`run_experiment_suite`].
    pub fn default_values(self) -> Vec<f64> {
        match self {
            Suite::WeightSweep => vec![5e-6, 5e-5, 5e-4, 5e-2],
            Suite::QzeroSweep => vec![200.0, 500.0, 1000.0, 2000.0],
            Suite::NoiseSweep => vec![0.0, 0.05, 0.1],
            Suite::GenusCurve => Vec::new(),
        }
    }
}

/// One setting of a sweep. Failed runs keep their error and leave the metrics empty.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRow {
    pub suite: &'static str,
    pub parameter: &'static str,
    pub value: f64,
    pub genus: Option<i64>,
    pub mean_abs_f: Option<f64>,
    pub eikonal: Option<f64>,
    pub hausdorff: Option<f64>,
    pub error: Option<String>,
}

impl ExperimentRow {
    fn empty(suite: Suite, value: f64) -> Self {
        ExperimentRow {
            suite: suite.name(),
            parameter: suite.parameter(),
            value,
            genus: None,
            mean_abs_f: None,
            eikonal: None,
            hausdorff: None,
            error: None,
        }
    }
}

/// Runs `suite` over its default settings.
pub fn run_experiment_suite(
    suite: Suite,
    base: &TrainConfig,
    curves: &CurveSet,
    gt: Option<&TriangleMesh>,
) -> Result<Vec<ExperimentRow>> {
    run_sweep(suite, &suite.default_values(), base, curves, gt)
}

fn train_and_measure(
    suite: Suite,
    value: f64,
    config: &TrainConfig,
    curves: &CurveSet,
    gt: Option<&TriangleMesh>,
) -> ExperimentRow {
    let mut row = ExperimentRow::empty(suite, value);
    let result = train(config, curves)
        .and_then(|(params, _)| evaluate_metrics(&params, curves, gt, config.mc_export_resolution));
    match result {
        Ok(m) => {
            row.genus = m.genus;
            row.mean_abs_f = Some(m.mean_abs_f);
            row.eikonal = Some(m.eikonal_mean);
            row.hausdorff = m.deviation_max;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Runs `suite` over `values`, one training run per value (the genus curve
/// trains once and reports one row per refresh).
pub fn run_sweep(
    suite: Suite,
    values: &[f64],
    base: &TrainConfig,
    curves: &CurveSet,
    gt: Option<&TriangleMesh>,
) -> Result<Vec<ExperimentRow>> {
    base.validate()?;
    let mut rows = Vec::new();
    match suite {
        Suite::GenusCurve => {
            let (_, log) = train(base, curves)?;
            for r in &log.refreshes {
                let mut row = ExperimentRow::empty(suite, r.iteration as f64);
                row.genus = r.genus;
                if !r.succeeded {
                    row.error = Some(Error::EmptyLevelSet.to_string());
                }
                rows.push(row);
            }
        }
        Suite::WeightSweep => {
            for &v in values {
                let mut config = base.clone();
                config.weights.smooth = v;
                rows.push(train_and_measure(suite, v, &config, curves, gt));
            }
        }
        Suite::QzeroSweep => {
            for &v in values {
                if !(v >= 1.0) {
                    return Err(Error::Config(format!("zero-set sample count must be >= 1, got {v}")));
                }
                let config = TrainConfig {
                    n_qzero: v as usize,
                    ..base.clone()
                };
                rows.push(train_and_measure(suite, v, &config, curves, gt));
            }
        }
        Suite::NoiseSweep => {
            for &v in values {
                // Noise is added in normalized units, then the input is renormalized.
                let noisy = perturb_curves(curves, v, base.seed).and_then(|c| normalize_curves(&c));
                match noisy {
                    Ok((noisy, _)) => rows.push(train_and_measure(suite, v, base, &noisy, gt)),
                    Err(e) => {
                        let mut row = ExperimentRow::empty(suite, v);
                        row.error = Some(e.to_string());
                        rows.push(row);
                    }
                }
            }
        }
    }
    Ok(rows)
}

/// Writes rows with header `suite,parameter,value,genus,mean_abs_f,eikonal,hausdorff,error`.
pub fn write_experiment_csv<W: Write>(rows: &[ExperimentRow], out: W) -> Result<()> {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["suite", "parameter", "value", "genus", "mean_abs_f", "eikonal", "hausdorff", "error"])?;
    for r in rows {
        w.write_record([
            r.suite.to_string(),
            r.parameter.to_string(),
            r.value.to_string(),
            r.genus.map(|g| g.to_string()).unwrap_or_default(),
            opt(r.mean_abs_f),
            opt(r.eikonal),
            opt(r.hausdorff),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in [Suite::WeightSweep, Suite::QzeroSweep, Suite::NoiseSweep, Suite::GenusCurve] {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!(matches!("bogus".parse::<Suite>(), Err(Error::Config(_))));
    }

    #[test]
    fn weight_sweep_has_one_row_per_setting() {
        let base = TrainConfig {
            iterations: 2,
            n_p: 32,
            n_q: 32,
            n_qzero: 32,
            mc_train_resolution: 16,
            mc_export_resolution: 16,
            network: crate::field::NetworkConfig {
                width: 16,
                depth: 2,
                ..Default::default()
            },
            ..TrainConfig::desk()
        };
        let rows = run_experiment_suite(Suite::WeightSweep, &base, &crate::fixtures::circle(32), None).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.error.is_none() && r.genus.is_some()));
        let mut buf = Vec::new();
        write_experiment_csv(&rows, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 5);
    }
}
