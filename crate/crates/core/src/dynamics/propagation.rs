use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{lif_step, synapse_step, LifParams, NetworkState, SynapseParams};
use crate::circuit::{Circuit, GroupConfig, Port};
use crate::error::{Error, Result};

/// Current peak that counts as propagation when spiking is not used.
pub const CURRENT_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PulseConfig {
    /// Current injected into every source node while the pulse is on.
    pub amplitude: f64,
    /// Pulse length in steps, starting at step 0.
    pub duration: usize,
    /// Total simulated steps.
    pub window: usize,
    /// Judge propagation by target spikes, falling back to peak target
    /// current when no node outside the source group spikes. `false` always
    /// uses the current.
    pub spike_mode: bool,
}

impl Default for PulseConfig {
    fn default() -> Self {
        Self {
            amplitude: 2.0,
            duration: 20,
            window: 100,
            spike_mode: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub pathway: String,
    pub source_group: String,
    pub target_group: String,
    /// Spikes emitted by the target group over the window.
    pub target_activity: f64,
    pub peak_target_current: f64,
    pub first_target_spike: Option<usize>,
    pub total_spikes: usize,
    /// `spikes` or `current`: which test decided `propagated`.
    pub criterion: String,
    pub propagated: bool,
}

/// One row per node per step of a simulated run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub step: usize,
    pub node: String,
    pub v: f64,
    pub i: f64,
    pub spike: u8,
}

pub fn write_trace_csv<W: Write>(rows: &[TraceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::parse("trace csv", e))?;
    }
    w.flush().map_err(|e| Error::io("trace csv", e))
}

/// Injects a square current pulse into the source group of a resting
/// network and reports how much activity reaches the target group.
/// Circuit entries are used directly as synaptic weights.
pub fn propagation_check(
    c: &Circuit,
    gc: &GroupConfig,
    pathway: &str,
    source: &str,
    target: &str,
    pulse: &PulseConfig,
    lif: &LifParams,
    syn: &SynapseParams,
) -> Result<(FeasibilityReport, Vec<TraceRow>)> {
    lif.validate()?;
    syn.validate()?;
    if gc.port(source)? != Port::Input {
        return Err(Error::InvalidParameter(format!(
            "source group {source:?} is not an input port"
        )));
    }
    let src = gc.indices(source, c)?;
    let tgt = gc.indices(target, c)?;
    let n = c.n();

    let mut state = NetworkState::at_rest(n, lif);
    let mut drive = vec![0.0; n];
    let mut trace = Vec::with_capacity(n * pulse.window);
    let (mut activity, mut peak, mut total, mut from_source) = (0usize, 0.0f64, 0usize, 0usize);
    let mut first = None;

    for step in 0..pulse.window {
        let amp = if step < pulse.duration { pulse.amplitude } else { 0.0 };
        for &s in &src {
            drive[s] = amp;
        }
        state = lif_step(&state, &drive, lif);
        for &t in &tgt {
            peak = peak.max(state.i_syn[t].abs());
            if state.spikes[t] {
                activity += 1;
                first.get_or_insert(step);
            }
        }
        total += state.spike_count();
        from_source += src.iter().filter(|&&s| state.spikes[s]).count();
        for (k, name) in c.node_names().iter().enumerate() {
            trace.push(TraceRow {
                step,
                node: name.clone(),
                v: state.v[k],
                i: state.i_syn[k] + drive[k],
                spike: state.spikes[k] as u8,
            });
        }
        state.i_syn = synapse_step(&state.i_syn, &state.spikes, c.matrix(), syn);
    }

    let by_spikes = pulse.spike_mode && total > from_source;
    let propagated = if by_spikes {
        activity > 0
    } else {
        peak > CURRENT_THRESHOLD
    };
    Ok((
        FeasibilityReport {
            pathway: pathway.to_string(),
            source_group: source.to_string(),
            target_group: target.to_string(),
            target_activity: activity as f64,
            peak_target_current: peak,
            first_target_spike: first,
            total_spikes: total,
            criterion: if by_spikes { "spikes" } else { "current" }.to_string(),
            propagated,
        },
        trace,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    /// RGC -> TIN -> TPN with weight `w` on both hops.
    fn chain(w: f64) -> (Circuit, GroupConfig) {
        let names = ["rgc", "tin", "tpn"].map(String::from).to_vec();
        let rows = vec![vec![0.0, 0.0, 0.0], vec![w, 0.0, 0.0], vec![0.0, w, 0.0]];
        let c = Circuit::new(names, rows, BTreeMap::new()).unwrap();
        let mut gc = GroupConfig::new();
        gc.insert("src", ["rgc"], Port::Input)
            .insert("mid", ["tin"], Port::Internal)
            .insert("dst", ["tpn"], Port::Output);
        (c, gc)
    }

    fn run(c: &Circuit, gc: &GroupConfig, pulse: &PulseConfig) -> FeasibilityReport {
        propagation_check(
            c,
            gc,
            "chain",
            "src",
            "dst",
            pulse,
            &LifParams::default(),
            &SynapseParams::default(),
        )
        .unwrap()
        .0
    }

    #[test]
    fn chain_with_suprathreshold_weights_propagates() {
        // tau_m = 1, v_th = 0.5, tau_s = 0.2. Pulse 2.0 for one step takes rgc
        // to 2(1 - e^-1) = 1.26 at step 0 (spike). Weight 1 hands tin a current
        // of 1 at step 1, giving V = 1 - e^-1 = 0.632 >= 0.5 (spike); the
        // current then decays by e^-5 per step, so each node fires once and
        // tpn fires exactly at step 2.
        let (c, gc) = chain(1.0);
        let lif = LifParams {
            tau_m: 1.0,
            v_th: 0.5,
            ..Default::default()
        };
        let pulse = PulseConfig {
            amplitude: 2.0,
            duration: 1,
            window: 10,
            spike_mode: true,
        };
        let syn = SynapseParams { tau_s: 0.2, dt: 1.0 };
        let (r, _) = propagation_check(&c, &gc, "chain", "src", "dst", &pulse, &lif, &syn).unwrap();
        assert!(r.propagated, "{r:?}");
        assert_eq!(r.first_target_spike, Some(2));
        assert_eq!(r.target_activity, 1.0);
        assert_eq!(r.total_spikes, 3);
        assert_eq!(r.criterion, "spikes");
    }

    #[test]
    fn silent_downstream_falls_back_to_current() {
        // only rgc fires; tin receives a sub-threshold current
        let (c, gc) = chain(0.01);
        let (r, _) = propagation_check(
            &c,
            &gc,
            "hop",
            "src",
            "mid",
            &PulseConfig::default(),
            &LifParams::default(),
            &SynapseParams::default(),
        )
        .unwrap();
        assert_eq!(r.criterion, "current");
        assert!(r.propagated && r.target_activity == 0.0);
        assert!(!run(&c, &gc, &PulseConfig::default()).propagated);
    }

    #[test]
    fn no_path_means_no_propagation() {
        let (c, gc) = chain(0.0);
        let r = run(&c, &gc, &PulseConfig::default());
        assert!(!r.propagated);
        assert_eq!(r.target_activity, 0.0);
        let r = run(
            &c,
            &gc,
            &PulseConfig {
                spike_mode: false,
                ..Default::default()
            },
        );
        assert!(!r.propagated);
    }

    #[test]
    fn current_mode_sees_subthreshold_transmission() {
        let (c, gc) = chain(0.01);
        let pulse = PulseConfig {
            spike_mode: false,
            ..Default::default()
        };
        let r = run(&c, &gc, &pulse);
        // rgc fires, tin is driven but never reaches threshold, so tpn sees nothing
        assert!(!r.propagated);
        // ask about tin directly
        let (rep, _) = propagation_check(
            &c,
            &gc,
            "hop",
            "src",
            "mid",
            &pulse,
            &LifParams::default(),
            &SynapseParams::default(),
        )
        .unwrap();
        assert!(rep.propagated && rep.target_activity == 0.0);
    }

    #[test]
    fn source_must_be_input_port() {
        let (c, gc) = chain(1.0);
        let err = propagation_check(
            &c,
            &gc,
            "x",
            "mid",
            "dst",
            &PulseConfig::default(),
            &LifParams::default(),
            &SynapseParams::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn deterministic_and_traced() {
        let (c, gc) = chain(1.0);
        let pulse = PulseConfig::default();
        let a = propagation_check(&c, &gc, "p", "src", "dst", &pulse, &LifParams::default(), &SynapseParams::default()).unwrap();
        let b = propagation_check(&c, &gc, "p", "src", "dst", &pulse, &LifParams::default(), &SynapseParams::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.1.len(), 3 * pulse.window);
        let mut buf = Vec::new();
        write_trace_csv(&a.1[..3], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("step,node,v,i,spike\n0,rgc,"));
    }
}
