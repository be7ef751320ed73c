//! Leaky integrate-and-fire network on a fixed circuit topology, trained on
//! one-step-ahead Lorenz prediction with surrogate-gradient BPTT.

mod checkpoint;
mod data;
mod metrics;
mod model;
mod network;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, Tensor};
pub use data::{lorenz_dataset, LorenzDataset, Normalizer, Window};
pub use metrics::{evaluate, mean_squared_error, regression_metrics, EvalMetrics, EvalMode};
pub use model::{build_model, node_sign, ModelConfig, Params, SnnModel, STATE_DIM};
pub use network::{forward, free_run, sse_and_grad, ForwardOutput, SpikeFn};
pub use train::{batch_gradient, train, Adam, EpochRecord, TrainConfig, TrainOutcome};
