//! Scenario configs shipped with the binary.

/// (file name, contents) of every bundled config.
pub const BUNDLED: [(&str, &str); 14] = [
    (
        "mapping_ideal.json",
        include_str!("../fixtures/mapping_ideal.json"),
    ),
    (
        "mapping_impaired.json",
        include_str!("../fixtures/mapping_impaired.json"),
    ),
    (
        "hopping_csa1.json",
        include_str!("../fixtures/hopping_csa1.json"),
    ),
    (
        "hopping_csa1_lossy.json",
        include_str!("../fixtures/hopping_csa1_lossy.json"),
    ),
    (
        "hopping_csa2.json",
        include_str!("../fixtures/hopping_csa2.json"),
    ),
    (
        "hopping_csa2_lossy.json",
        include_str!("../fixtures/hopping_csa2_lossy.json"),
    ),
    (
        "optimization_skewed.json",
        include_str!("../fixtures/optimization_skewed.json"),
    ),
    (
        "optimization_uniform.json",
        include_str!("../fixtures/optimization_uniform.json"),
    ),
    (
        "latency_default.json",
        include_str!("../fixtures/latency_default.json"),
    ),
    (
        "latency_laptop.json",
        include_str!("../fixtures/latency_laptop.json"),
    ),
    (
        "throughput.json",
        include_str!("../fixtures/throughput.json"),
    ),
    (
        "connection.json",
        include_str!("../fixtures/connection.json"),
    ),
    (
        "connection_full_map.json",
        include_str!("../fixtures/connection_full_map.json"),
    ),
    (
        "connection_lossy_downlink.json",
        include_str!("../fixtures/connection_lossy_downlink.json"),
    ),
];

/// Bundled config for each scenario kind, in `config::KINDS` order.
pub const BY_KIND: [(&str, &str); 6] = [
    ("mapping", "mapping_ideal.json"),
    ("hop_algorithm", "hopping_csa1.json"),
    ("optimization", "optimization_skewed.json"),
    ("latency", "latency_default.json"),
    ("throughput", "throughput.json"),
    ("connection", "connection.json"),
];

pub fn get(file_name: &str) -> Option<&'static str> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == file_name)
        .map(|(_, text)| *text)
}
