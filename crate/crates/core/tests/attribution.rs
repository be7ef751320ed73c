use std::collections::BTreeMap;

use proptest::prelude::*;
use tectal::attribution::*;
use tectal::circuit::{Circuit, GroupConfig, Port};
use tectal::dynamics::LorenzParams;
use tectal::snn::*;

fn record(group: String, esi: f64, rsi: f64, delta_mse: f64, input: bool) -> AblationRecord {
    AblationRecord {
        group,
        nodes: 1,
        mse_before: 1.0,
        mse_after: 1.0 + delta_mse,
        spikes_before: 10.0,
        spikes_after: 9.0,
        delta_mse,
        delta_mse_pct: 100.0 * delta_mse,
        delta_spike_pct: -10.0,
        esi,
        rsi,
        is_input_port: input,
    }
}

fn records() -> impl Strategy<Value = Vec<AblationRecord>> {
    prop::collection::vec((-2.0..2.0f64, -1.0..1.0f64, -0.5..0.5f64, any::<bool>()), 0..12).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(k, (e, r, d, i))| record(format!("g{k:02}"), e, r, d, i))
            .collect()
    })
}

proptest! {
    #[test]
    fn esi_vanishes_without_spike_change(d in -1e3..1e3f64, eps in 1e-9..1.0f64) {
        prop_assert_eq!(esi(0.0, d, eps), 0.0);
    }

    #[test]
    fn esi_magnitude_symmetric_under_joint_sign_flip(a in -1e3..1e3f64, b in -1e3..1e3f64) {
        prop_assert_eq!(esi(-a, -b, 1e-6).abs(), esi(a, b, 1e-6).abs());
    }

    #[test]
    fn rsi_is_scale_invariant(after in 0.0..10.0f64, base in 0.01..10.0f64, k in 0.01..100.0f64) {
        let a = rsi(after, base).unwrap();
        let b = rsi(k * after, k * base).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn esi_ranking_is_a_filtered_subset(rs in records(), exclude in any::<bool>()) {
        let ranked = rank_esi(&rs, exclude);
        for r in &ranked {
            prop_assert!(rs.contains(r));
            prop_assert!(r.delta_mse > 0.0);
            prop_assert!(!(exclude && r.is_input_port));
        }
        for w in ranked.windows(2) {
            prop_assert!(w[0].esi.abs() <= w[1].esi.abs());
        }
    }

    #[test]
    fn removing_a_record_keeps_relative_order(rs in records(), drop in 0usize..12) {
        prop_assume!(!rs.is_empty());
        let drop = drop % rs.len();
        let gone = rs[drop].group.clone();
        let mut fewer = rs.clone();
        fewer.remove(drop);
        for (full, part) in [
            (rank_esi(&rs, false), rank_esi(&fewer, false)),
            (rank_rsi(&rs), rank_rsi(&fewer)),
        ] {
            let kept: Vec<_> = full.into_iter().filter(|r| r.group != gone).collect();
            prop_assert_eq!(kept, part);
        }
    }

    #[test]
    fn rsi_ranking_is_a_permutation(rs in records()) {
        let ranked = rank_rsi(&rs);
        prop_assert_eq!(ranked.len(), rs.len());
        for w in ranked.windows(2) {
            prop_assert!(w[0].rsi >= w[1].rsi);
        }
    }
}

/// Four connected nodes plus one node with no incident edges.
fn model_with_isolated_node() -> (SnnModel, GroupConfig, Vec<Window>) {
    let names: Vec<String> = ["in", "mid", "i_mid", "out", "lone"].iter().map(|s| s.to_string()).collect();
    let rows = vec![
        vec![0.0, 0.0, 0.0, 0.0, 0.0],
        vec![0.5, 0.0, 0.2, 0.0, 0.0],
        vec![0.3, 0.4, 0.0, 0.0, 0.0],
        vec![0.0, 0.6, 0.3, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0, 0.0],
    ];
    let c = Circuit::new(names, rows, BTreeMap::new()).unwrap();
    let mut gc = GroupConfig::new();
    gc.insert("input", ["in"], Port::Input)
        .insert("output", ["out"], Port::Output)
        .insert("middle", ["mid", "i_mid"], Port::Internal)
        .insert("lone", ["lone"], Port::Internal);
    let cfg = ModelConfig { init_gain: 8.0, ..Default::default() };
    let m = build_model(&c, &gc, &cfg, 11).unwrap();
    let tc = TrainConfig { horizon: 60, train_windows: 0, val_windows: 0, test_windows: 4, ..Default::default() };
    let d = lorenz_dataset(&LorenzParams::default(), &tc).unwrap();
    (m, gc, d.test)
}

#[test]
fn empty_sweep_is_empty() {
    let (m, gc, w) = model_with_isolated_node();
    let s = run_ablation_sweep::<&str>(&m, &gc, &w, &[], 1e-6).unwrap();
    assert!(s.records.is_empty());
}

#[test]
fn isolated_group_is_a_no_op() {
    let (m, gc, w) = model_with_isolated_node();
    let s = run_ablation_sweep(&m, &gc, &w, &["lone"], 1e-6).unwrap();
    let r = &s.records[0];
    assert_eq!(r.delta_mse, 0.0);
    assert_eq!(r.delta_spike_pct, 0.0);
    assert_eq!(r.rsi, 0.0);
    assert_eq!(r.esi, 0.0);
}

#[test]
fn sweep_records_share_the_baseline() {
    let (m, gc, w) = model_with_isolated_node();
    let s = run_ablation_sweep(&m, &gc, &w, &["input", "middle", "output", "lone"], 1e-6).unwrap();
    assert!(s.baseline.spikes_per_sample > 0.0);
    for r in &s.records {
        assert_eq!(r.mse_before, s.baseline.mse);
        assert_eq!(r.spikes_before, s.baseline.spikes_per_sample);
        r.check(1e-6).unwrap();
    }
    assert!(s.records[0].is_input_port);
    assert_eq!(s.records[0].spikes_after, 0.0);
    assert_eq!(s.records[1].nodes, 2);
    let again = run_ablation_sweep(&m, &gc, &w, &["input", "middle", "output", "lone"], 1e-6).unwrap();
    assert_eq!(s, again);
}

#[test]
fn unknown_group_and_bad_epsilon_are_errors() {
    let (m, gc, w) = model_with_isolated_node();
    assert!(run_ablation_sweep(&m, &gc, &w, &["nope"], 1e-6).is_err());
    assert!(run_ablation_sweep(&m, &gc, &w, &["lone"], 0.0).is_err());
}
