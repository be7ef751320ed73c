//! Built-in 52-category node layout and substructure groups.
//!
//! Only some category and group names are fixed by the published
//! description (RGC input types, `e_ns_TIN`/`i_ns_TIN`, `TPN-O`, `TPN-E`,
//! the mesoscopic group names and the sizes of `ns_TIN` (2) and
//! `superficial_TIN` (22)). The remaining category names are placeholders
//! chosen to fill those groups; supply a real node list and group file via
//! `--matrix` / `--groups` to replace them.

use super::{GroupConfig, Port, SynthesisSpec};

const RGC: [(&str, u8); 6] = [
    ("RGC_SO_A", 1),
    ("RGC_SO_B", 1),
    ("RGC_SFGS_A", 2),
    ("RGC_SFGS_B", 2),
    ("RGC_SGC_SAC_P", 4),
    ("RGC_SAC_D", 5),
];

/// Superficial TIN subtypes with their tectal layer (S1..S4).
const SUPERFICIAL_TIN: [(&str, u8); 11] = [
    ("SO_a", 1),
    ("SO_b", 1),
    ("SFGS_a", 2),
    ("SFGS_b", 2),
    ("SFGS_c", 2),
    ("SFGS_d", 3),
    ("SFGS_e", 3),
    ("SFGS_f", 3),
    ("SGC_a", 4),
    ("SGC_b", 4),
    ("SGC_c", 4),
];

/// Deep TIN subtypes (S5..S6).
const DEEP_TIN: [(&str, u8); 4] = [("SAC_a", 5), ("SAC_b", 5), ("SPV_a", 6), ("SPV_b", 6)];

const TPN: [&str; 3] = ["TPN-O", "TPN-E", "TPN-A"];
const SIN: [&str; 2] = ["i_SIN_a", "i_SIN_b"];
const MOTOR: [&str; 9] = [
    "motor_nMLF",
    "motor_MiV1",
    "motor_MiD2",
    "motor_MiD3",
    "motor_RoV3",
    "motor_Mauthner",
    "motor_RS_ventral",
    "motor_RS_dorsal",
    "motor_output",
];

pub const NODE_COUNT: usize = 52;

fn tin_pair(kind: &str) -> [String; 2] {
    [format!("e_{kind}_TIN"), format!("i_{kind}_TIN")]
}

pub fn node_names() -> Vec<String> {
    let mut out: Vec<String> = RGC.iter().map(|(n, _)| n.to_string()).collect();
    out.extend(tin_pair("ns"));
    for (kind, _) in SUPERFICIAL_TIN.iter().chain(DEEP_TIN.iter()) {
        out.extend(tin_pair(kind));
    }
    out.extend(TPN.iter().map(|s| s.to_string()));
    out.extend(SIN.iter().map(|s| s.to_string()));
    out.extend(MOTOR.iter().map(|s| s.to_string()));
    debug_assert_eq!(out.len(), NODE_COUNT);
    out
}

fn tins_in_layers(layers: std::ops::RangeInclusive<u8>) -> Vec<String> {
    SUPERFICIAL_TIN
        .iter()
        .chain(DEEP_TIN.iter())
        .filter(|(_, l)| layers.contains(l))
        .flat_map(|(k, _)| tin_pair(k))
        .collect()
}

fn containing(token: &str) -> Vec<String> {
    node_names()
        .into_iter()
        .filter(|n| n.contains(token))
        .collect()
}

pub fn group_config() -> GroupConfig {
    let names = node_names();
    let mut gc = GroupConfig::new();
    gc.insert("RGC_input", RGC.iter().map(|(n, _)| *n), Port::Input)
        .insert("TPN_output", TPN, Port::Output)
        .insert("TPN_O", ["TPN-O"], Port::Internal)
        .insert("TPN_E", ["TPN-E"], Port::Internal)
        .insert("ns_TIN", tin_pair("ns"), Port::Internal)
        .insert(
            "excitatory_TIN",
            names.iter().filter(|n| n.starts_with("e_") && n.ends_with("_TIN")),
            Port::Internal,
        )
        .insert(
            "inhibitory_TIN",
            names.iter().filter(|n| n.starts_with("i_") && n.ends_with("_TIN")),
            Port::Internal,
        )
        .insert("S12_group", tins_in_layers(1..=2), Port::Internal)
        .insert("S34_group", tins_in_layers(3..=4), Port::Internal)
        .insert(
            "S56_group",
            tins_in_layers(5..=6)
                .into_iter()
                .chain(TPN.iter().map(|s| s.to_string())),
            Port::Internal,
        )
        .insert("superficial_TIN", tins_in_layers(1..=4), Port::Internal)
        .insert("deep_TIN", tins_in_layers(5..=6), Port::Internal)
        .insert("SGC_group", containing("SGC"), Port::Internal)
        .insert("SAC_group", containing("SAC"), Port::Internal)
        .insert("SIN_hub", SIN, Port::Internal)
        .insert("TPN_hub", TPN, Port::Internal)
        .insert(
            "integration_hubs",
            SIN.iter().chain(TPN.iter()).copied(),
            Port::Internal,
        )
        .insert("motor_units", MOTOR, Port::Internal);
    gc
}

/// Substructures swept by default.
pub fn sweep_groups() -> Vec<String> {
    [
        "RGC_input",
        "ns_TIN",
        "S12_group",
        "TPN_output",
        "superficial_TIN",
        "deep_TIN",
        "SGC_group",
        "motor_units",
    ]
    .map(String::from)
    .to_vec()
}

/// Every mesoscopic group, without the single-node pathway targets.
pub fn ablation_groups() -> Vec<String> {
    group_config()
        .names()
        .filter(|n| !matches!(*n, "TPN_O" | "TPN_E"))
        .map(String::from)
        .collect()
}

/// Named retinotectal pathways as (name, source group, target group).
pub fn pathways() -> Vec<(String, String, String)> {
    [("R2O", "RGC_input", "TPN_O"), ("R2E", "RGC_input", "TPN_E")]
        .iter()
        .map(|(a, b, c)| (a.to_string(), b.to_string(), c.to_string()))
        .collect()
}

/// Surrogate targets matching the published graph statistics: 52 nodes,
/// 938 positive entries, probabilities in [0.000271, 0.285035] before
/// rescaling, spectral radius 1.5173.
pub fn synthesis_spec(seed: u64) -> SynthesisSpec {
    SynthesisSpec {
        n: NODE_COUNT,
        nonzero_edges: 938,
        prob_range: (0.000271, 0.285035),
        target_spectral_radius: 1.5173,
        seed,
        node_names: node_names(),
        no_self_loops: (0..RGC.len()).collect(),
    }
}
