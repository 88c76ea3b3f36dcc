//! The signed-distance network: parameters, analytic jets, reverse-mode
//! parameter gradients, Adam, and checkpoint files.

mod adam;
mod checkpoint;
mod gemm;
mod jet;
mod mlp;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint};
pub use jet::{
    forward_jet, loss_param_grads, BatchAdjoint, BatchJets, Jet3, JetAdjoint, JetOrder, Tape,
    HESS_PAIRS,
};
pub use mlp::{init_geometric, init_geometric_with, Activation, Layer, MlpParams, NetworkConfig, ParamGrads};

use crate::Vec3;

/// Anything that can be evaluated as an implicit field over a batch of points.
pub trait ScalarField {
    /// Jets at `points`; components above `order` may be left zero.
    fn jets(&self, points: &[Vec3], order: JetOrder) -> Vec<Jet3>;

    fn values(&self, points: &[Vec3]) -> Vec<f64> {
        self.jets(points, JetOrder::Value).iter().map(|j| j.value).collect()
    }
}

impl ScalarField for MlpParams {
    fn jets(&self, points: &[Vec3], order: JetOrder) -> Vec<Jet3> {
        self.eval_batch(points, order).jets()
    }

    fn values(&self, points: &[Vec3]) -> Vec<f64> {
        MlpParams::values(self, points)
    }
}

/// Closed-form field given by a pointwise jet function.
#[derive(Clone, Copy, Debug)]
pub struct AnalyticField<F>(pub F);

impl<F: Fn(&Vec3) -> Jet3> ScalarField for AnalyticField<F> {
    fn jets(&self, points: &[Vec3], _order: JetOrder) -> Vec<Jet3> {
        points.iter().map(&self.0).collect()
    }
}
