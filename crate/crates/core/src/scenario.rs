//! Static problem data, the plan data model and the constraint validator.
//!
//! Slot indexing: UAV positions are stored for `n = 0..=N` with index 0 the
//! take-off point. Schedules, powers and rates are stored for slots `1..=N`
//! at vector index `n - 1`.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rates::RateBreakdown;
use crate::scalar::{db_to_linear, dbm_to_watts, dist2_sq, Real};

/// Which of the two aircraft.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Uav {
    /// Uplink base station collecting from the sensor nodes.
    Bs,
    /// Downlink access point serving the ground access points.
    Ap,
}

impl fmt::Display for Uav {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Uav::Bs => f.write_str("uav-bs"),
            Uav::Ap => f.write_str("uav-ap"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavEndpoints<T> {
    pub q_initial: [T; 2],
    pub q_final: [T; 2],
    pub h_initial: T,
    pub h_final: T,
}

/// All static problem data. Powers and gains are linear (W, dimensionless).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig<T> {
    pub sn_positions: Vec<[T; 2]>,
    pub ap_positions: Vec<[T; 2]>,
    pub uav_bs: UavEndpoints<T>,
    pub uav_ap: UavEndpoints<T>,
    pub period: T,
    pub slots: usize,
    pub slot_delta: T,
    pub v_xy_max: T,
    pub v_z_max: T,
    pub h_min: T,
    pub h_max: T,
    pub d_min: T,
    pub p_max_uav: T,
    pub p_max_sn: T,
    pub beta0: T,
    pub kappa_a: T,
    pub kappa_s: T,
    pub kappa_u: T,
    pub alpha_g2g: T,
    pub rician_ka: T,
    pub rician_ks: T,
    pub rician_ku: T,
    pub noise_power: T,
    pub weight_beta1: T,
    pub weight_beta2: T,
    pub penalty_m: T,
    pub bandwidth_hz: T,
}

impl<T: Real> ScenarioConfig<T> {
    pub fn num_sns(&self) -> usize {
        self.sn_positions.len()
    }

    pub fn num_aps(&self) -> usize {
        self.ap_positions.len()
    }

    pub fn endpoints(&self, uav: Uav) -> &UavEndpoints<T> {
        match uav {
            Uav::Bs => &self.uav_bs,
            Uav::Ap => &self.uav_ap,
        }
    }

    /// Per-slot horizontal step bound `V_xy * delta`.
    pub fn max_step_xy(&self) -> T {
        self.v_xy_max * self.slot_delta
    }

    pub fn max_step_z(&self) -> T {
        self.v_z_max * self.slot_delta
    }

    /// Returns a copy with a different period, keeping the slot duration.
    pub fn with_period(&self, period: T) -> Result<Self> {
        let n = (period / self.slot_delta).round();
        let slots = n.to_usize().filter(|&n| n >= 1).ok_or_else(|| {
            Error::InvalidScenario(format!("period {period} gives no whole slots"))
        })?;
        let mut out = self.clone();
        out.period = period;
        out.slots = slots;
        out.slot_delta = period / T::lit(slots as f64);
        out.validate()?;
        Ok(out)
    }

    pub fn cast<U: Real>(&self) -> ScenarioConfig<U> {
        let c = |x: T| U::lit(x.as_f64());
        let p = |v: [T; 2]| [c(v[0]), c(v[1])];
        let e = |e: &UavEndpoints<T>| UavEndpoints {
            q_initial: p(e.q_initial),
            q_final: p(e.q_final),
            h_initial: c(e.h_initial),
            h_final: c(e.h_final),
        };
        ScenarioConfig {
            sn_positions: self.sn_positions.iter().copied().map(p).collect(),
            ap_positions: self.ap_positions.iter().copied().map(p).collect(),
            uav_bs: e(&self.uav_bs),
            uav_ap: e(&self.uav_ap),
            period: c(self.period),
            slots: self.slots,
            slot_delta: c(self.slot_delta),
            v_xy_max: c(self.v_xy_max),
            v_z_max: c(self.v_z_max),
            h_min: c(self.h_min),
            h_max: c(self.h_max),
            d_min: c(self.d_min),
            p_max_uav: c(self.p_max_uav),
            p_max_sn: c(self.p_max_sn),
            beta0: c(self.beta0),
            kappa_a: c(self.kappa_a),
            kappa_s: c(self.kappa_s),
            kappa_u: c(self.kappa_u),
            alpha_g2g: c(self.alpha_g2g),
            rician_ka: c(self.rician_ka),
            rician_ks: c(self.rician_ks),
            rician_ku: c(self.rician_ku),
            noise_power: c(self.noise_power),
            weight_beta1: c(self.weight_beta1),
            weight_beta2: c(self.weight_beta2),
            penalty_m: c(self.penalty_m),
            bandwidth_hz: c(self.bandwidth_hz),
        }
    }

    /// Checks every static invariant; the error names the first violation.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        if self.num_sns() == 0 {
            return bad("at least one sensor node is required (K >= 1)".into());
        }
        if self.num_aps() == 0 {
            return bad("at least one access point is required (L >= 1)".into());
        }
        if self.slots == 0 {
            return bad("slot count N must be >= 1".into());
        }
        let scalars = [
            ("T", self.period),
            ("delta", self.slot_delta),
            ("v_xy", self.v_xy_max),
            ("v_z", self.v_z_max),
            ("h_min", self.h_min),
            ("h_max", self.h_max),
            ("d_min", self.d_min),
            ("p_max_uav", self.p_max_uav),
            ("p_max_sn", self.p_max_sn),
            ("beta0", self.beta0),
            ("kappa_a", self.kappa_a),
            ("kappa_s", self.kappa_s),
            ("kappa_u", self.kappa_u),
            ("alpha", self.alpha_g2g),
            ("K_a", self.rician_ka),
            ("K_s", self.rician_ks),
            ("K_u", self.rician_ku),
            ("noise", self.noise_power),
            ("beta1", self.weight_beta1),
            ("beta2", self.weight_beta2),
            ("penalty_M", self.penalty_m),
            ("bandwidth", self.bandwidth_hz),
        ];
        for (name, v) in scalars {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        let points = self.sn_positions.iter().chain(&self.ap_positions).chain([
            &self.uav_bs.q_initial,
            &self.uav_bs.q_final,
            &self.uav_ap.q_initial,
            &self.uav_ap.q_final,
        ]);
        for p in points {
            if !p[0].is_finite() || !p[1].is_finite() {
                return bad("node and endpoint coordinates must be finite".into());
            }
        }
        let n = T::lit(self.slots as f64);
        if ((self.slot_delta * n - self.period) / self.period).abs() > T::lit(1e-9) {
            return bad(format!(
                "slot duration times slot count ({}) must equal the period {}",
                self.slot_delta * n,
                self.period
            ));
        }
        let strictly_positive = [
            ("T", self.period),
            ("v_xy", self.v_xy_max),
            ("v_z", self.v_z_max),
            ("h_min", self.h_min),
            ("p_max_uav", self.p_max_uav),
            ("p_max_sn", self.p_max_sn),
            ("beta0", self.beta0),
            ("noise", self.noise_power),
            ("penalty_M", self.penalty_m),
            ("kappa_a", self.kappa_a),
            ("kappa_s", self.kappa_s),
            ("kappa_u", self.kappa_u),
            ("alpha", self.alpha_g2g),
            ("bandwidth", self.bandwidth_hz),
        ];
        for (name, v) in strictly_positive {
            if v <= T::zero() {
                return bad(format!("{name} must be strictly positive (got {v})"));
            }
        }
        let non_negative = [
            ("beta1", self.weight_beta1),
            ("beta2", self.weight_beta2),
            ("d_min", self.d_min),
            ("K_a", self.rician_ka),
            ("K_s", self.rician_ks),
            ("K_u", self.rician_ku),
        ];
        for (name, v) in non_negative {
            if v < T::zero() {
                return bad(format!("{name} must be non-negative (got {v})"));
            }
        }
        if self.h_min > self.h_max {
            return bad(format!("h_min {} exceeds h_max {}", self.h_min, self.h_max));
        }
        for uav in [Uav::Bs, Uav::Ap] {
            let e = self.endpoints(uav);
            for (which, h) in [("initial", e.h_initial), ("final", e.h_final)] {
                if h < self.h_min || h > self.h_max {
                    return bad(format!(
                        "{uav} {which} altitude {h} outside [{}, {}]",
                        self.h_min, self.h_max
                    ));
                }
            }
            let span_xy = dist2_sq(e.q_initial, e.q_final).sqrt();
            let reach_xy = n * self.max_step_xy();
            if span_xy > reach_xy * (T::one() + T::lit(1e-12)) {
                return bad(format!(
                    "{uav} endpoints {span_xy} m apart but only {reach_xy} m reachable in {} slots",
                    self.slots
                ));
            }
            let span_z = (e.h_final - e.h_initial).abs();
            let reach_z = n * self.max_step_z();
            if span_z > reach_z * (T::one() + T::lit(1e-12)) {
                return bad(format!(
                    "{uav} altitude change {span_z} m exceeds the reachable {reach_z} m"
                ));
            }
        }
        let d2 = self.d_min * self.d_min;
        for (which, b, a) in [
            (
                "initial",
                (self.uav_bs.q_initial, self.uav_bs.h_initial),
                (self.uav_ap.q_initial, self.uav_ap.h_initial),
            ),
            (
                "final",
                (self.uav_bs.q_final, self.uav_bs.h_final),
                (self.uav_ap.q_final, self.uav_ap.h_final),
            ),
        ] {
            let dz = b.1 - a.1;
            if dist2_sq(b.0, a.0) + dz * dz < d2 {
                return bad(format!("{which} UAV positions are closer than d_min"));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Scenario file schema

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EndpointsFile {
    q_i: [f64; 2],
    q_f: [f64; 2],
    h_i: f64,
    h_f: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TimeFile {
    #[serde(rename = "T")]
    period: f64,
    #[serde(rename = "N", default)]
    slots: Option<usize>,
    #[serde(default)]
    delta: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LimitsFile {
    v_xy: f64,
    v_z: f64,
    h_min: f64,
    h_max: f64,
    d_min: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PowerFile {
    p_max_uav: f64,
    p_max_sn: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelFile {
    #[serde(default)]
    beta0_db: Option<f64>,
    #[serde(default)]
    beta0: Option<f64>,
    kappa_a: f64,
    kappa_s: f64,
    kappa_u: f64,
    alpha: f64,
    #[serde(rename = "K_a_db", default)]
    k_a_db: Option<f64>,
    #[serde(rename = "K_s_db", default)]
    k_s_db: Option<f64>,
    #[serde(rename = "K_u_db", default)]
    k_u_db: Option<f64>,
    #[serde(rename = "K_a", default)]
    k_a: Option<f64>,
    #[serde(rename = "K_s", default)]
    k_s: Option<f64>,
    #[serde(rename = "K_u", default)]
    k_u: Option<f64>,
    #[serde(default)]
    noise_dbm: Option<f64>,
    #[serde(default)]
    noise_w: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectiveFile {
    beta1: f64,
    beta2: f64,
    #[serde(rename = "penalty_M")]
    penalty_m: f64,
    bandwidth_hz: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    sns: Vec<[f64; 2]>,
    aps: Vec<[f64; 2]>,
    uav_bs: EndpointsFile,
    uav_ap: EndpointsFile,
    time: TimeFile,
    limits: LimitsFile,
    power: PowerFile,
    channel: ChannelFile,
    objective: ObjectiveFile,
}

fn pick(name: &str, db: Option<f64>, lin: Option<f64>, conv: fn(f64) -> f64) -> Result<f64> {
    match (db, lin) {
        (Some(d), None) => Ok(conv(d)),
        (None, Some(l)) => Ok(l),
        (Some(_), Some(_)) => Err(Error::Parse(format!(
            "give either the dB or the linear form of {name}, not both"
        ))),
        (None, None) => Err(Error::Parse(format!("missing channel field {name}"))),
    }
}

impl ScenarioFile {
    fn into_config(self) -> Result<ScenarioConfig<f64>> {
        let ch = self.channel;
        let (slots, delta) = match (self.time.slots, self.time.delta) {
            (Some(n), None) => (n, self.time.period / n.max(1) as f64),
            (None, Some(d)) => {
                let n = (self.time.period / d).round();
                if !(n >= 1.0) {
                    return Err(Error::InvalidScenario("time.delta leaves no slots".into()));
                }
                (n as usize, d)
            }
            (Some(n), Some(d)) => (n, d),
            (None, None) => return Err(Error::Parse("time needs N or delta".into())),
        };
        let ends = |e: EndpointsFile| UavEndpoints {
            q_initial: e.q_i,
            q_final: e.q_f,
            h_initial: e.h_i,
            h_final: e.h_f,
        };
        let cfg = ScenarioConfig {
            sn_positions: self.sns,
            ap_positions: self.aps,
            uav_bs: ends(self.uav_bs),
            uav_ap: ends(self.uav_ap),
            period: self.time.period,
            slots,
            slot_delta: delta,
            v_xy_max: self.limits.v_xy,
            v_z_max: self.limits.v_z,
            h_min: self.limits.h_min,
            h_max: self.limits.h_max,
            d_min: self.limits.d_min,
            p_max_uav: self.power.p_max_uav,
            p_max_sn: self.power.p_max_sn,
            beta0: pick("beta0", ch.beta0_db, ch.beta0, db_to_linear)?,
            kappa_a: ch.kappa_a,
            kappa_s: ch.kappa_s,
            kappa_u: ch.kappa_u,
            alpha_g2g: ch.alpha,
            rician_ka: pick("K_a", ch.k_a_db, ch.k_a, db_to_linear)?,
            rician_ks: pick("K_s", ch.k_s_db, ch.k_s, db_to_linear)?,
            rician_ku: pick("K_u", ch.k_u_db, ch.k_u, db_to_linear)?,
            noise_power: pick("noise", ch.noise_dbm, ch.noise_w, dbm_to_watts)?,
            weight_beta1: self.objective.beta1,
            weight_beta2: self.objective.beta2,
            penalty_m: self.objective.penalty_m,
            bandwidth_hz: self.objective.bandwidth_hz,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn from_config(cfg: &ScenarioConfig<f64>) -> Self {
        let ends = |e: &UavEndpoints<f64>| EndpointsFile {
            q_i: e.q_initial,
            q_f: e.q_final,
            h_i: e.h_initial,
            h_f: e.h_final,
        };
        ScenarioFile {
            sns: cfg.sn_positions.clone(),
            aps: cfg.ap_positions.clone(),
            uav_bs: ends(&cfg.uav_bs),
            uav_ap: ends(&cfg.uav_ap),
            time: TimeFile {
                period: cfg.period,
                slots: Some(cfg.slots),
                delta: None,
            },
            limits: LimitsFile {
                v_xy: cfg.v_xy_max,
                v_z: cfg.v_z_max,
                h_min: cfg.h_min,
                h_max: cfg.h_max,
                d_min: cfg.d_min,
            },
            power: PowerFile {
                p_max_uav: cfg.p_max_uav,
                p_max_sn: cfg.p_max_sn,
            },
            channel: ChannelFile {
                beta0_db: None,
                beta0: Some(cfg.beta0),
                kappa_a: cfg.kappa_a,
                kappa_s: cfg.kappa_s,
                kappa_u: cfg.kappa_u,
                alpha: cfg.alpha_g2g,
                k_a_db: None,
                k_s_db: None,
                k_u_db: None,
                k_a: Some(cfg.rician_ka),
                k_s: Some(cfg.rician_ks),
                k_u: Some(cfg.rician_ku),
                noise_dbm: None,
                noise_w: Some(cfg.noise_power),
            },
            objective: ObjectiveFile {
                beta1: cfg.weight_beta1,
                beta2: cfg.weight_beta2,
                penalty_m: cfg.penalty_m,
                bandwidth_hz: cfg.bandwidth_hz,
            },
        }
    }
}

/// Parses and validates a scenario. JSON is accepted when the text starts
/// with `{`, TOML otherwise.
pub fn load_scenario(source: &str) -> Result<ScenarioConfig<f64>> {
    let file: ScenarioFile = if source.trim_start().starts_with('{') {
        serde_json::from_str(source).map_err(|e| Error::Parse(e.to_string()))?
    } else {
        toml::from_str(source).map_err(|e| Error::Parse(e.to_string()))?
    };
    file.into_config()
}

pub fn load_scenario_file(path: impl AsRef<Path>) -> Result<ScenarioConfig<f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    load_scenario(&text)
}

/// Serializes a config back to the scenario schema (linear channel fields).
pub fn scenario_to_toml(cfg: &ScenarioConfig<f64>) -> String {
    toml::to_string(&ScenarioFile::from_config(cfg)).expect("scenario serializes")
}

// ---------------------------------------------------------------------------
// Plan data model

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavPath<T> {
    /// Horizontal positions for `n = 0..=N`.
    pub q: Vec<[T; 2]>,
    /// Altitudes for `n = 0..=N`.
    pub h: Vec<T>,
}

impl<T: Real> UavPath<T> {
    pub fn position(&self, n: usize) -> [T; 3] {
        [self.q[n][0], self.q[n][1], self.h[n]]
    }

    fn straight(e: &UavEndpoints<T>, slots: usize) -> Self {
        let total = T::lit(slots as f64);
        let mut q = Vec::with_capacity(slots + 1);
        let mut h = Vec::with_capacity(slots + 1);
        for n in 0..=slots {
            let s = T::lit(n as f64) / total;
            q.push([
                e.q_initial[0] + s * (e.q_final[0] - e.q_initial[0]),
                e.q_initial[1] + s * (e.q_final[1] - e.q_initial[1]),
            ]);
            h.push(e.h_initial + s * (e.h_final - e.h_initial));
        }
        // exact boundary values
        q[slots] = e.q_final;
        h[slots] = e.h_final;
        UavPath { q, h }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<T> {
    pub uav_bs: UavPath<T>,
    pub uav_ap: UavPath<T>,
}

impl<T: Real> Trajectory<T> {
    /// Number of slots `N` (positions are stored for `0..=N`).
    pub fn slots(&self) -> usize {
        self.uav_bs.q.len().saturating_sub(1)
    }

    pub fn path(&self, uav: Uav) -> &UavPath<T> {
        match uav {
            Uav::Bs => &self.uav_bs,
            Uav::Ap => &self.uav_ap,
        }
    }

    pub fn path_mut(&mut self, uav: Uav) -> &mut UavPath<T> {
        match uav {
            Uav::Bs => &mut self.uav_bs,
            Uav::Ap => &mut self.uav_ap,
        }
    }

    /// Constant-speed straight line between the configured endpoints.
    pub fn straight_line(cfg: &ScenarioConfig<T>) -> Self {
        Trajectory {
            uav_bs: UavPath::straight(&cfg.uav_bs, cfg.slots),
            uav_ap: UavPath::straight(&cfg.uav_ap, cfg.slots),
        }
    }

    /// Squared 3D separation of the two aircraft at position index `n`.
    pub fn separation_sq(&self, n: usize) -> T {
        let b = self.uav_bs.position(n);
        let a = self.uav_ap.position(n);
        (0..3).fold(T::zero(), |acc, i| acc + (a[i] - b[i]) * (a[i] - b[i]))
    }

    pub fn cast<U: Real>(&self) -> Trajectory<U> {
        let c = |p: &UavPath<T>| UavPath {
            q: p.q
                .iter()
                .map(|v| [U::lit(v[0].as_f64()), U::lit(v[1].as_f64())])
                .collect(),
            h: p.h.iter().map(|v| U::lit(v.as_f64())).collect(),
        };
        Trajectory {
            uav_bs: c(&self.uav_bs),
            uav_ap: c(&self.uav_ap),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    Relaxed,
    Binary,
}

/// Scheduling variables; `x[l][n-1]` for access points, `y[k][n-1]` for sensor nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule<T> {
    pub x: Vec<Vec<T>>,
    pub y: Vec<Vec<T>>,
    pub mode: ScheduleMode,
}

impl<T: Real> Schedule<T> {
    pub fn zeros(k: usize, l: usize, slots: usize, mode: ScheduleMode) -> Self {
        Schedule {
            x: vec![vec![T::zero(); slots]; l],
            y: vec![vec![T::zero(); slots]; k],
            mode,
        }
    }

    /// Uniform relaxed schedule `y = 1/K`, `x = 1/L`.
    pub fn uniform(k: usize, l: usize, slots: usize) -> Self {
        Schedule {
            x: vec![vec![T::one() / T::lit(l as f64); slots]; l],
            y: vec![vec![T::one() / T::lit(k as f64); slots]; k],
            mode: ScheduleMode::Relaxed,
        }
    }

    pub fn slots(&self) -> usize {
        self.x.first().or(self.y.first()).map_or(0, Vec::len)
    }
}

/// Transmit powers in watts; `p_u[n-1]` for the UAV-AP, `p_s[k][n-1]` for the sensor nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation<T> {
    pub p_u: Vec<T>,
    pub p_s: Vec<Vec<T>>,
}

impl<T: Real> PowerAllocation<T> {
    pub fn full(cfg: &ScenarioConfig<T>) -> Self {
        PowerAllocation {
            p_u: vec![cfg.p_max_uav; cfg.slots],
            p_s: vec![vec![cfg.p_max_sn; cfg.slots]; cfg.num_sns()],
        }
    }

    pub fn zeros(k: usize, slots: usize) -> Self {
        PowerAllocation {
            p_u: vec![T::zero(); slots],
            p_s: vec![vec![T::zero(); slots]; k],
        }
    }
}

/// Solver bookkeeping carried with every solution.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub solver: String,
    pub iterations: usize,
    /// Termination criterion met (BCD) or optimality certified (polyblock).
    pub converged: bool,
    /// Objective after each outer iteration, starting with the initial point.
    pub history: Vec<f64>,
    /// Relaxed-schedule objective before rounding, when applicable.
    pub relaxed_objective: Option<f64>,
    /// Certified upper bound on the optimum, when available.
    pub upper_bound: Option<f64>,
    /// Largest constraint residual of the returned plan.
    pub max_residual: f64,
    #[serde(default)]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution<T> {
    pub trajectory: Trajectory<T>,
    pub schedule: Schedule<T>,
    pub power: PowerAllocation<T>,
    /// Weighted sum of per-slot spectral efficiencies (bit/s/Hz summed over slots).
    pub objective: T,
    pub rates: RateBreakdown<T>,
    pub diagnostics: Diagnostics,
}

impl<T: Real> Solution<T> {
    /// Total delivered data in Mbit: objective scaled by `B * delta`.
    pub fn total_mbit(&self, cfg: &ScenarioConfig<T>) -> T {
        self.objective * cfg.bandwidth_hz * cfg.slot_delta / T::lit(1e6)
    }
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    Boundary,
    HorizontalSpeed,
    VerticalSpeed,
    Altitude,
    Collision,
    ScheduleSum,
    ScheduleRange,
    ScheduleBinary,
    PowerBound,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Constraint::Boundary => "boundary",
            Constraint::HorizontalSpeed => "horizontal-speed",
            Constraint::VerticalSpeed => "vertical-speed",
            Constraint::Altitude => "altitude",
            Constraint::Collision => "collision",
            Constraint::ScheduleSum => "schedule-sum",
            Constraint::ScheduleRange => "schedule-range",
            Constraint::ScheduleBinary => "schedule-binary",
            Constraint::PowerBound => "power-bound",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: Constraint,
    /// Position index for trajectory constraints, slot number `1..=N` otherwise.
    pub slot: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uav: Option<Uav>,
    /// Node index (SN or AP) for schedule and power constraints.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<usize>,
    /// Amount by which the constraint is exceeded, in its native unit.
    pub magnitude: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} violated at slot {}", self.constraint, self.slot)?;
        if let Some(u) = self.uav {
            write!(f, " ({u})")?;
        }
        if let Some(k) = self.node {
            write!(f, " (node {k})")?;
        }
        write!(f, " by {:.6e}", self.magnitude)
    }
}

fn check_dims<T: Real>(
    cfg: &ScenarioConfig<T>,
    traj: &Trajectory<T>,
    sched: &Schedule<T>,
    power: &PowerAllocation<T>,
) -> Result<()> {
    let n = cfg.slots;
    let (k, l) = (cfg.num_sns(), cfg.num_aps());
    let mut errs = Vec::new();
    for uav in [Uav::Bs, Uav::Ap] {
        let p = traj.path(uav);
        if p.q.len() != n + 1 || p.h.len() != n + 1 {
            errs.push(format!("{uav} path needs {} positions", n + 1));
        }
    }
    if sched.x.len() != l || sched.x.iter().any(|r| r.len() != n) {
        errs.push(format!("x must be {l} x {n}"));
    }
    if sched.y.len() != k || sched.y.iter().any(|r| r.len() != n) {
        errs.push(format!("y must be {k} x {n}"));
    }
    if power.p_u.len() != n {
        errs.push(format!("p_u must have {n} entries"));
    }
    if power.p_s.len() != k || power.p_s.iter().any(|r| r.len() != n) {
        errs.push(format!("p_s must be {k} x {n}"));
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(Error::Dimension(errs.join("; ")))
    }
}

/// Checks boundary, speed, altitude and collision constraints of a trajectory.
pub fn validate_trajectory<T: Real>(
    cfg: &ScenarioConfig<T>,
    traj: &Trajectory<T>,
    tol: f64,
) -> Result<Vec<Violation>> {
    let n_slots = cfg.slots;
    for uav in [Uav::Bs, Uav::Ap] {
        let p = traj.path(uav);
        if p.q.len() != n_slots + 1 || p.h.len() != n_slots + 1 {
            return Err(Error::Dimension(format!(
                "{uav} path needs {} positions",
                n_slots + 1
            )));
        }
    }
    let mut out = Vec::new();
    let mut push = |constraint, slot, uav, magnitude: f64| {
        if magnitude > tol {
            out.push(Violation {
                constraint,
                slot,
                uav,
                node: None,
                magnitude,
            });
        }
    };
    let step_xy = cfg.max_step_xy().as_f64();
    let step_z = cfg.max_step_z().as_f64();
    let (h_min, h_max) = (cfg.h_min.as_f64(), cfg.h_max.as_f64());
    for uav in [Uav::Bs, Uav::Ap] {
        let e = cfg.endpoints(uav);
        let p = traj.path(uav);
        let q0 = dist2_sq(p.q[0], e.q_initial).as_f64().sqrt();
        let qn = dist2_sq(p.q[n_slots], e.q_final).as_f64().sqrt();
        let h0 = (p.h[0] - e.h_initial).abs().as_f64();
        let hn = (p.h[n_slots] - e.h_final).abs().as_f64();
        push(Constraint::Boundary, 0, Some(uav), q0.max(h0));
        push(Constraint::Boundary, n_slots, Some(uav), qn.max(hn));
        for n in 0..=n_slots {
            let h = p.h[n].as_f64();
            push(
                Constraint::Altitude,
                n,
                Some(uav),
                (h_min - h).max(h - h_max),
            );
            if n >= 1 {
                let d = dist2_sq(p.q[n], p.q[n - 1]).as_f64().sqrt();
                push(Constraint::HorizontalSpeed, n, Some(uav), d - step_xy);
                let dz = (p.h[n] - p.h[n - 1]).abs().as_f64();
                push(Constraint::VerticalSpeed, n, Some(uav), dz - step_z);
            }
        }
    }
    let d2 = (cfg.d_min * cfg.d_min).as_f64();
    for n in 0..=n_slots {
        push(
            Constraint::Collision,
            n,
            None,
            d2 - traj.separation_sq(n).as_f64(),
        );
    }
    Ok(out)
}

/// Lists every violated constraint of a plan; empty iff the plan is feasible within `tol`.
pub fn validate_plan<T: Real>(
    cfg: &ScenarioConfig<T>,
    traj: &Trajectory<T>,
    sched: &Schedule<T>,
    power: &PowerAllocation<T>,
    tol: f64,
) -> Result<Vec<Violation>> {
    check_dims(cfg, traj, sched, power)?;
    let mut out = validate_trajectory(cfg, traj, tol)?;
    let mut push = |constraint, slot, node, magnitude: f64| {
        if magnitude > tol {
            out.push(Violation {
                constraint,
                slot,
                uav: None,
                node,
                magnitude,
            });
        }
    };
    let binary = sched.mode == ScheduleMode::Binary;
    for n in 0..cfg.slots {
        for (rows, _side) in [(&sched.x, "x"), (&sched.y, "y")] {
            let mut sum = 0.0;
            for (i, row) in rows.iter().enumerate() {
                let v = row[n].as_f64();
                sum += v;
                push(Constraint::ScheduleRange, n + 1, Some(i), (-v).max(v - 1.0));
                if binary {
                    push(
                        Constraint::ScheduleBinary,
                        n + 1,
                        Some(i),
                        v.abs().min((v - 1.0).abs()),
                    );
                }
            }
            push(Constraint::ScheduleSum, n + 1, None, sum - 1.0);
        }
        let pu = power.p_u[n].as_f64();
        let pmax_u = cfg.p_max_uav.as_f64();
        push(Constraint::PowerBound, n + 1, None, (-pu).max(pu - pmax_u));
        let pmax_s = cfg.p_max_sn.as_f64();
        for (k, row) in power.p_s.iter().enumerate() {
            let p = row[n].as_f64();
            push(Constraint::PowerBound, n + 1, Some(k), (-p).max(p - pmax_s));
        }
    }
    Ok(out)
}

pub fn validate_solution<T: Real>(
    cfg: &ScenarioConfig<T>,
    sol: &Solution<T>,
    tol: f64,
) -> Result<Vec<Violation>> {
    validate_plan(cfg, &sol.trajectory, &sol.schedule, &sol.power, tol)
}

/// Largest constraint excess of a plan (zero or negative when feasible).
pub fn max_residual<T: Real>(
    cfg: &ScenarioConfig<T>,
    traj: &Trajectory<T>,
    sched: &Schedule<T>,
    power: &PowerAllocation<T>,
) -> Result<f64> {
    Ok(validate_plan(cfg, traj, sched, power, f64::NEG_INFINITY)?
        .into_iter()
        .map(|v| v.magnitude)
        .fold(f64::NEG_INFINITY, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::single_pair_toml;

    #[test]
    fn loads_single_pair_scenario() {
        let cfg = load_scenario(&single_pair_toml(50.0, 100)).unwrap();
        assert_eq!(cfg.slots, 100);
        assert!((cfg.slot_delta - 0.5).abs() < 1e-15);
        assert_eq!(cfg.num_sns(), 1);
        assert_eq!(cfg.num_aps(), 1);
        assert_eq!(cfg.uav_ap.q_initial, [0.0, 300.0]);
        assert!((cfg.beta0 - 1e-6).abs() < 1e-18);
        assert!((cfg.noise_power - 1e-14).abs() < 1e-26);
    }

    #[test]
    fn rejects_zero_min_altitude() {
        let text = single_pair_toml(50.0, 100).replace("h_min = 100.0", "h_min = 0.0");
        let err = load_scenario(&text).unwrap_err();
        assert!(
            matches!(err, Error::InvalidScenario(ref m) if m.contains("h_min")),
            "{err}"
        );
    }

    #[test]
    fn rejects_unreachable_endpoints() {
        // 10 km apart with N * V_xy * delta = 20 * 50 * 1 = 1000 m
        let text =
            single_pair_toml(20.0, 20).replace("q_f = [1000.0, 700.0]", "q_f = [10000.0, 700.0]");
        let err = load_scenario(&text).unwrap_err();
        assert!(
            matches!(err, Error::InvalidScenario(ref m) if m.contains("reachable")),
            "{err}"
        );
    }

    #[test]
    fn rejects_malformed_text() {
        assert!(matches!(load_scenario("sns = [[1"), Err(Error::Parse(_))));
        let missing = single_pair_toml(50.0, 100).replace("noise_dbm = -110.0", "");
        assert!(matches!(load_scenario(&missing), Err(Error::Parse(_))));
    }

    #[test]
    fn json_and_toml_agree() {
        let cfg = load_scenario(&single_pair_toml(50.0, 100)).unwrap();
        let again = load_scenario(&scenario_to_toml(&cfg)).unwrap();
        assert_eq!(cfg, again);
        let json = serde_json::to_string(&ScenarioFile::from_config(&cfg)).unwrap();
        assert_eq!(load_scenario(&json).unwrap(), cfg);
    }

    fn hover_scenario() -> ScenarioConfig<f64> {
        let text = single_pair_toml(10.0, 20)
            .replace("q_f = [1000.0, 700.0]", "q_f = [0.0, 700.0]")
            .replace("q_f = [1000.0, 300.0]", "q_f = [0.0, 300.0]");
        load_scenario(&text).unwrap()
    }

    fn hover_plan(
        cfg: &ScenarioConfig<f64>,
    ) -> (Trajectory<f64>, Schedule<f64>, PowerAllocation<f64>) {
        let traj = Trajectory::straight_line(cfg);
        let sched = Schedule::zeros(1, 1, cfg.slots, ScheduleMode::Binary);
        let power = PowerAllocation::zeros(1, cfg.slots);
        (traj, sched, power)
    }

    #[test]
    fn hover_plan_is_feasible() {
        let cfg = hover_scenario();
        let (t, s, p) = hover_plan(&cfg);
        assert!(validate_plan(&cfg, &t, &s, &p, 1e-9).unwrap().is_empty());
    }

    #[test]
    fn detects_single_speed_violation() {
        let cfg = hover_scenario();
        let (mut t, s, p) = hover_plan(&cfg);
        // hover, then one jump of 2 * V_xy * delta back to the start region is
        // not possible without a second violation; instead move the final
        // approach: slots 0..=9 at origin, slots 10..=20 at +2*step, with the
        // endpoint relocated so the boundary still holds.
        let step = cfg.max_step_xy();
        let mut cfg2 = cfg.clone();
        cfg2.uav_bs.q_final = [2.0 * step, 700.0];
        for n in 10..=cfg.slots {
            t.uav_bs.q[n] = [2.0 * step, 700.0];
        }
        let v = validate_plan(&cfg2, &t, &s, &p, 1e-6).unwrap();
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].constraint, Constraint::HorizontalSpeed);
        assert_eq!(v[0].slot, 10);
        assert!((v[0].magnitude - step).abs() < 1e-9);
    }

    #[test]
    fn detects_collision_with_magnitude() {
        let mut cfg = hover_scenario();
        cfg.d_min = 10.0;
        let (mut t, s, p) = hover_plan(&cfg);
        // put both aircraft at the same point in slot 3 without breaking speed
        // limits: move the UAV-AP path to coincide for all interior slots is
        // overkill, so relax speeds for this check.
        cfg.v_xy_max = 1e6;
        cfg.v_z_max = 1e6;
        t.uav_ap.q[3] = t.uav_bs.q[3];
        t.uav_ap.h[3] = t.uav_bs.h[3];
        let v = validate_plan(&cfg, &t, &s, &p, 1e-6).unwrap();
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].constraint, Constraint::Collision);
        assert_eq!(v[0].slot, 3);
        assert!((v[0].magnitude - 100.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let cfg = hover_scenario();
        let (t, mut s, p) = hover_plan(&cfg);
        s.y[0].pop();
        assert!(matches!(
            validate_plan(&cfg, &t, &s, &p, 1e-6),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn schedule_constraints() {
        let cfg = hover_scenario();
        let (t, mut s, p) = hover_plan(&cfg);
        s.y[0][4] = 0.5;
        let v = validate_plan(&cfg, &t, &s, &p, 1e-6).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].constraint, Constraint::ScheduleBinary);
        assert_eq!(v[0].slot, 5);
        s.mode = ScheduleMode::Relaxed;
        assert!(validate_plan(&cfg, &t, &s, &p, 1e-6).unwrap().is_empty());
    }

    #[test]
    fn with_period_keeps_slot_duration() {
        let cfg = load_scenario(&single_pair_toml(50.0, 100)).unwrap();
        let c2 = cfg.with_period(40.0).unwrap();
        assert_eq!(c2.slots, 80);
        assert!((c2.slot_delta - 0.5).abs() < 1e-15);
    }
}
