use std::io::Write;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::TrainConfig;
use crate::energy::{
    dirichlet_off_with_adjoint, dirichlet_on_with_adjoint, eikonal_with_adjoint, smooth_with_adjoint, total_loss,
    FeatureIndex, LossBreakdown, LossComponents,
};
use crate::field::{init_geometric_with, AdamConfig, AdamState, BatchAdjoint, JetOrder, MlpParams, ParamGrads};
use crate::geometry::mesh_genus;
use crate::io::CurveSet;
use crate::sampling::{project_once, refresh_zero_samples, sample_box_uniform, sample_curve_batch, PROJECTION_BOUND};
use crate::{Error, Result, Vec3};

/// Tolerance below which a projected value counts as on the zero set.
const ON_SURFACE: f64 = 1e-12;

/// Slack allowed on the unit-box precondition for the input curves.
const BOX_SLACK: f64 = 1e-9;

/// One completed iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogRow {
    pub iter: usize,
    pub loss: LossBreakdown,
    /// Wall-clock time of the iteration in milliseconds.
    pub ms: f64,
}

/// A scheduled zero-set re-extraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RefreshEvent {
    pub iteration: usize,
    /// `false` when the level set was empty and the previous samples were kept.
    pub succeeded: bool,
    pub samples: usize,
    pub genus: Option<i64>,
}

/// Effect of the per-iteration projection of the zero-set samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectionEvent {
    pub iteration: usize,
    pub points: usize,
    pub discarded: usize,
    /// Fraction of surviving points whose `|f|` decreased (or reached zero).
    pub reduced_fraction: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    pub rows: Vec<LogRow>,
    pub refreshes: Vec<RefreshEvent>,
    pub projections: Vec<ProjectionEvent>,
}

impl TrainLog {
    /// Rows with the timing column zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> TrainLog {
        TrainLog {
            rows: self.rows.iter().map(|r| LogRow { ms: 0.0, ..*r }).collect(),
            ..self.clone()
        }
    }

    /// Genus after every successful refresh, in iteration order.
    pub fn genus_history(&self) -> Vec<(usize, Option<i64>)> {
        self.refreshes.iter().filter(|r| r.succeeded).map(|r| (r.iteration, r.genus)).collect()
    }
}

/// Result of a training run.
#[derive(Clone, Debug)]
pub struct TrainOutput {
    pub params: MlpParams,
    pub adam: AdamState,
    pub log: TrainLog,
}

pub fn train(config: &TrainConfig, curves: &CurveSet) -> Result<(MlpParams, TrainLog)> {
    let out = train_with(config, curves, |_| {})?;
    Ok((out.params, out.log))
}

fn scaled(adjoints: impl Iterator<Item = crate::field::JetAdjoint>, c: f64) -> BatchAdjoint {
    BatchAdjoint {
        adjoints: adjoints
            .map(|mut a| {
                a.value *= c;
                a.grad = a.grad.map(|g| g * c);
                a.hess = a.hess.map(|h| h * c);
                a
            })
            .collect(),
    }
}

/// Runs the full training loop, reporting every completed row to `observer`.
pub fn train_with(config: &TrainConfig, curves: &CurveSet, mut observer: impl FnMut(&LogRow)) -> Result<TrainOutput> {
    config.validate()?;
    curves.validate()?;
    if !curves.within_box(0.5 + BOX_SLACK) {
        return Err(Error::Input("curves must be normalized to [-0.5, 0.5]^3".into()));
    }
    let mut params = init_geometric_with(&config.network, config.init_radius, config.seed)?;
    let mut adam = AdamState::new(&params, AdamConfig::default());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let flat = curves.flat_points();
    let features = FeatureIndex::new(&curves.feature_points());
    let w = config.weights;

    let mut log = TrainLog::default();
    let mut q_zero: Vec<Vec3> = Vec::new();
    for it in 0..config.iterations {
        let start = Instant::now();
        let p_batch: Vec<Vec3> = sample_curve_batch(&flat, config.n_p, &mut rng)?.into_iter().map(|(p, _)| p).collect();
        let q_box = sample_box_uniform(config.n_q, &mut rng)?;

        let mut abs_before = None;
        if it % config.refresh_period == 0 {
            match refresh_zero_samples(&params, config.mc_train_resolution, config.n_qzero, &mut rng) {
                Ok((points, mesh)) => {
                    q_zero = points;
                    log.refreshes.push(RefreshEvent {
                        iteration: it,
                        succeeded: true,
                        samples: q_zero.len(),
                        genus: mesh_genus(&mesh).ok(),
                    });
                }
                Err(Error::EmptyLevelSet) if it == 0 => {
                    return Err(Error::Initialization("the initial field has no zero-level set".into()));
                }
                Err(Error::EmptyLevelSet) => log.refreshes.push(RefreshEvent {
                    iteration: it,
                    succeeded: false,
                    samples: q_zero.len(),
                    genus: None,
                }),
                Err(e) => return Err(e),
            }
        } else if !q_zero.is_empty() {
            let projection = project_once(&params, &q_zero, Some(PROJECTION_BOUND));
            q_zero = projection.points;
            log.projections.push(ProjectionEvent {
                iteration: it,
                points: q_zero.len(),
                discarded: projection.discarded,
                reduced_fraction: 0.0,
            });
            abs_before = Some(projection.abs_before);
        }

        let (jp, tape_p) = params.forward(&p_batch, JetOrder::Value);
        let (dm, adj_dm) = dirichlet_on_with_adjoint(jp.values())?;

        let (jq, tape_q) = params.forward(&q_box, JetOrder::Gradient);
        let (eik, adj_eik) = eikonal_with_adjoint(jq.grads())?;
        let (dnm, adj_dnm) = dirichlet_off_with_adjoint(jq.values(), w.alpha)?;

        let mut smooth = 0.0;
        let mut smooth_pass = None;
        if !q_zero.is_empty() {
            let (jz, tape_z) = params.forward(&q_zero, JetOrder::Hessian);
            if let (Some(before), Some(event)) = (&abs_before, log.projections.last_mut()) {
                let reduced = jz
                    .values()
                    .iter()
                    .zip(before)
                    .filter(|(after, before)| after.abs() < **before || after.abs() <= ON_SURFACE)
                    .count();
                event.reduced_fraction = reduced as f64 / before.len().max(1) as f64;
            }
            match smooth_with_adjoint(&jz.jets(), &q_zero, &features) {
                Ok((value, adjoints)) => {
                    smooth = value;
                    smooth_pass = Some((tape_z, adjoints));
                }
                Err(Error::DegenerateBatch) => {}
                Err(e) => return Err(e),
            }
        }

        let components = LossComponents {
            eikonal: eik,
            dirichlet_on: dm,
            dirichlet_off: dnm,
            smooth,
        };
        let loss = match total_loss(&components, &w, it) {
            Ok(l) if l.total.is_finite() => l,
            Ok(_) | Err(Error::Contract(_)) => {
                return Err(Error::NumericalAbort {
                    iteration: it,
                    last_good: Box::new(params),
                })
            }
            Err(e) => return Err(e),
        };

        let mut grads = ParamGrads::zeros_like(&params);
        let on = scaled(adj_dm.iter().map(|&v| crate::field::JetAdjoint { value: v, ..Default::default() }), w.dirichlet_on);
        params.backward(&tape_p, &on, &mut grads)?;
        let box_adjoint = BatchAdjoint {
            adjoints: adj_eik
                .iter()
                .zip(&adj_dnm)
                .map(|(g, &v)| crate::field::JetAdjoint {
                    value: w.dirichlet_off * v,
                    grad: g.map(|x| w.eikonal * x),
                    hess: [0.0; 6],
                })
                .collect(),
        };
        params.backward(&tape_q, &box_adjoint, &mut grads)?;
        let smooth_scale = loss.tau * w.smooth;
        if let (Some((tape_z, adjoints)), true) = (smooth_pass, smooth_scale != 0.0) {
            params.backward(&tape_z, &scaled(adjoints.into_iter(), smooth_scale), &mut grads)?;
        }

        // The update validates the gradients before touching the parameters.
        match adam.step(&mut params, &grads, config.lr) {
            Ok(()) => {}
            Err(Error::NonFiniteGradient { .. }) => {
                return Err(Error::NumericalAbort {
                    iteration: it,
                    last_good: Box::new(params),
                })
            }
            Err(e) => return Err(e),
        }

        let row = LogRow {
            iter: it,
            loss,
            ms: start.elapsed().as_secs_f64() * 1e3,
        };
        observer(&row);
        log.rows.push(row);
    }
    Ok(TrainOutput { params, adam, log })
}

/// Writes the loss log with header `iter,eikonal,dirichlet_on,dirichlet_off,smooth,tau,total,ms`.
pub fn write_log_csv<W: Write>(log: &TrainLog, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iter", "eikonal", "dirichlet_on", "dirichlet_off", "smooth", "tau", "total", "ms"])?;
    for r in &log.rows {
        let l = &r.loss;
        w.write_record([
            r.iter.to_string(),
            l.eikonal.to_string(),
            l.dirichlet_on.to_string(),
            l.dirichlet_off.to_string(),
            l.smooth.to_string(),
            l.tau.to_string(),
            l.total.to_string(),
            format!("{:.3}", r.ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}
