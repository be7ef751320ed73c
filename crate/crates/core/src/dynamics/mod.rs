//! Numerical kernels: the Lorenz generator, LIF membranes, exponential
//! synapses and the pathway propagation check built from them.

mod lorenz;
mod neuron;
mod propagation;

pub use lorenz::{lorenz_trajectory, LorenzParams};
pub use neuron::{
    first_spike_time, lif_step, synapse_step, LifParams, NetworkState, SynapseParams,
};
pub use propagation::{
    propagation_check, write_trace_csv, FeasibilityReport, PulseConfig, TraceRow,
    CURRENT_THRESHOLD,
};
