//! Scenario fixtures shared by unit tests, integration tests and benchmarks.

use crate::scenario::{load_scenario, ScenarioConfig};

fn render(
    sns: &str,
    aps: &str,
    bs: ([f64; 2], [f64; 2], f64),
    ap: ([f64; 2], [f64; 2], f64),
    period: f64,
    slots: usize,
    beta2: f64,
) -> String {
    format!(
        r#"sns = {sns}
aps = {aps}

[uav_bs]
q_i = [{:.1}, {:.1}]
q_f = [{:.1}, {:.1}]
h_i = {:.1}
h_f = {:.1}

[uav_ap]
q_i = [{:.1}, {:.1}]
q_f = [{:.1}, {:.1}]
h_i = {:.1}
h_f = {:.1}

[time]
T = {period:.1}
N = {slots}

[limits]
v_xy = 50.0
v_z = 30.0
h_min = 100.0
h_max = 600.0
d_min = 10.0

[power]
p_max_uav = 0.1
p_max_sn = 0.1

[channel]
beta0_db = -60.0
kappa_a = 2.0
kappa_s = 2.0
kappa_u = 2.0
alpha = 3.0
K_a_db = 3.0
K_s_db = 3.0
K_u_db = 3.0
noise_dbm = -110.0

[objective]
beta1 = 1.0
beta2 = {beta2}
penalty_M = 1e5
bandwidth_hz = 1e6
"#,
        bs.0[0],
        bs.0[1],
        bs.1[0],
        bs.1[1],
        bs.2,
        bs.2,
        ap.0[0],
        ap.0[1],
        ap.1[0],
        ap.1[1],
        ap.2,
        ap.2,
    )
}

/// Single SN / single AP geometry at full scale, `beta2 = 1/3`.
pub fn single_pair_toml(period: f64, slots: usize) -> String {
    render(
        "[[500.0, 550.0]]",
        "[[500.0, 450.0]]",
        ([0.0, 700.0], [1000.0, 700.0], 600.0),
        ([0.0, 300.0], [1000.0, 300.0], 500.0),
        period,
        slots,
        1.0 / 3.0,
    )
}

/// Single-pair geometry halved so a 20 s horizon leaves room to manoeuvre.
pub fn single_pair_desk(period: f64, slots: usize) -> ScenarioConfig<f64> {
    load_scenario(&render(
        "[[250.0, 275.0]]",
        "[[250.0, 225.0]]",
        ([0.0, 350.0], [500.0, 350.0], 600.0),
        ([0.0, 150.0], [500.0, 150.0], 500.0),
        period,
        slots,
        1.0 / 3.0,
    ))
    .expect("fixture scenario is valid")
}

/// Four SNs and four APs; both aircraft start and end above their node centroid.
pub fn multi_node_desk(period: f64, slots: usize, beta2: f64) -> ScenarioConfig<f64> {
    load_scenario(&render(
        "[[-1000.0, 0.0], [-100.0, 700.0], [0.0, 0.0], [-500.0, -500.0]]",
        "[[1000.0, 0.0], [0.0, 700.0], [100.0, 0.0], [700.0, -400.0]]",
        ([-400.0, 50.0], [-400.0, 50.0], 600.0),
        ([450.0, 75.0], [450.0, 75.0], 500.0),
        period,
        slots,
        beta2,
    ))
    .expect("fixture scenario is valid")
}

/// Small fixed-trajectory instance with `k` SNs and `l` APs on a 400 m square.
pub fn small_instance(k: usize, l: usize, slots: usize) -> ScenarioConfig<f64> {
    let sn: Vec<String> = (0..k)
        .map(|i| format!("[{:.1}, {:.1}]", 60.0 * i as f64, 260.0))
        .collect();
    let ap: Vec<String> = (0..l)
        .map(|i| format!("[{:.1}, {:.1}]", 60.0 * i as f64 + 30.0, 140.0))
        .collect();
    let period = slots as f64 * 0.5;
    let reach = 25.0 * slots as f64;
    load_scenario(&render(
        &format!("[{}]", sn.join(", ")),
        &format!("[{}]", ap.join(", ")),
        ([0.0, 300.0], [reach.min(200.0), 300.0], 150.0),
        ([0.0, 100.0], [reach.min(200.0), 100.0], 120.0),
        period,
        slots,
        1.0,
    ))
    .expect("fixture scenario is valid")
}
