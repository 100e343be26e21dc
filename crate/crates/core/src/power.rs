//! Slot and frame power budgets, Active/TR power splitting, throughput and
//! Shannon-inversion power per application.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::mode::{allowed_applications, UeMode};

/// Application classes in increasing order of rate demand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AppId {
    /// Text.
    A1,
    /// Conversational voice.
    A2,
    /// Conversational video.
    A3,
}

impl AppId {
    pub const ALL: [AppId; 3] = [AppId::A1, AppId::A2, AppId::A3];

    pub fn label(self) -> &'static str {
        match self {
            AppId::A1 => "A1",
            AppId::A2 => "A2",
            AppId::A3 => "A3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApplicationClass {
    pub id: AppId,
    /// Target rate [bit/s].
    pub target_rate: f64,
    /// Available bandwidth [Hz].
    pub bandwidth: f64,
}

/// Default demands: text 10 kb/s, voice 64 kb/s, video 2 Mb/s.
pub fn default_applications(bandwidth: f64) -> [ApplicationClass; 3] {
    [
        ApplicationClass { id: AppId::A1, target_rate: 10e3, bandwidth },
        ApplicationClass { id: AppId::A2, target_rate: 64e3, bandwidth },
        ApplicationClass { id: AppId::A3, target_rate: 2e6, bandwidth },
    ]
}

/// Split of a slot's power between the TR and Active circuitry of one handset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSplit {
    /// Splitting ratio α ∈ [0, 1].
    pub alpha: f64,
    /// RF-to-DC conversion rate γ ∈ (0, 1].
    pub gamma: f64,
    /// Downlink portion of the slot power [W].
    pub p_dl: f64,
    /// Total slot power [W].
    pub p_total: f64,
}

impl PowerSplit {
    pub fn new(alpha: f64, gamma: f64, p_dl: f64, p_total: f64) -> Result<Self> {
        let s = Self { alpha, gamma, p_dl, p_total };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(invalid("alpha", format!("must lie in [0, 1], got {}", self.alpha)));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(invalid("gamma", format!("must lie in (0, 1], got {}", self.gamma)));
        }
        if !(self.p_dl >= 0.0) {
            return Err(invalid("p_dl", "must be >= 0"));
        }
        if self.p_dl > self.p_total {
            return Err(invalid(
                "p_dl",
                format!("downlink portion {} exceeds total {}", self.p_dl, self.p_total),
            ));
        }
        Ok(())
    }

    pub fn p_ul(&self) -> f64 {
        self.p_total - self.p_dl
    }
}

/// Returns `(p_tr, p_am)`: the TR-circuit and Active-circuit portions.
pub fn split_power(s: &PowerSplit, h_gain: f64) -> Result<(f64, f64)> {
    s.validate()?;
    if !(h_gain >= 0.0) {
        return Err(invalid("h_gain", "must be >= 0"));
    }
    let p_tr = s.gamma * h_gain * (1.0 - s.alpha) * s.p_dl;
    let p_am = s.alpha * h_gain * s.p_ul();
    Ok((p_tr, p_am))
}

/// Per-slot, per-user downlink allocations of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePlan {
    pub n_slots: usize,
    pub n_users: usize,
    /// Per-slot limit [W].
    pub p_max: f64,
    /// Per-frame average limit [W].
    pub p_avg: f64,
    /// `allocations[slot][user]` [W].
    pub allocations: Vec<Vec<f64>>,
}

impl FramePlan {
    pub fn zeros(n_slots: usize, n_users: usize, p_max: f64, p_avg: f64) -> Self {
        Self {
            n_slots,
            n_users,
            p_max,
            p_avg,
            allocations: vec![vec![0.0; n_users]; n_slots],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameReport {
    /// First slot whose sum exceeds `p_max`.
    pub slot_violation: Option<usize>,
    /// Whether the frame total stays within `n_slots · p_avg`.
    pub frame_ok: bool,
    /// First `(slot, user)` with a negative or non-finite allocation.
    pub negative: Option<(usize, usize)>,
    /// Set when the allocation matrix does not match `n_slots × n_users`.
    pub shape_mismatch: bool,
    pub frame_total: f64,
}

impl FrameReport {
    pub fn passed(&self) -> bool {
        self.slot_violation.is_none() && self.frame_ok && self.negative.is_none() && !self.shape_mismatch
    }
}

pub fn check_frame(plan: &FramePlan) -> FrameReport {
    let shape_mismatch = plan.allocations.len() != plan.n_slots
        || plan.allocations.iter().any(|s| s.len() != plan.n_users);
    let mut slot_violation = None;
    let mut negative = None;
    let mut frame_total = 0.0;
    for (i, slot) in plan.allocations.iter().enumerate() {
        let sum: f64 = slot.iter().sum();
        if slot_violation.is_none() && sum > plan.p_max {
            slot_violation = Some(i);
        }
        if negative.is_none() {
            negative = slot
                .iter()
                .position(|p| !(*p >= 0.0) || !p.is_finite())
                .map(|j| (i, j));
        }
        frame_total += sum;
    }
    FrameReport {
        slot_violation,
        frame_ok: frame_total <= plan.n_slots as f64 * plan.p_avg,
        negative,
        shape_mismatch,
        frame_total,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThroughputMode {
    DownlinkActive,
    UplinkActive,
    /// Downlink-only throughput of a TR handset; same form as the downlink.
    Thermal,
}

/// One assigned subcarrier: transmit power and channel gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Subcarrier {
    pub power: f64,
    pub gain: f64,
}

/// Spectral efficiency summed over subcarriers [bit/s/Hz].
///
/// For the downlink and TR variants the caller passes the downlink power
/// portion; for the uplink variant the uplink portion and uplink gain.
pub fn throughput(_mode: ThroughputMode, subcarriers: &[Subcarrier], noise_var: f64) -> Result<f64> {
    if !(noise_var > 0.0) {
        return Err(invalid("noise_var", format!("must be > 0, got {noise_var}")));
    }
    Ok(subcarriers
        .iter()
        .map(|s| (1.0 + s.power * s.gain / noise_var).log2())
        .sum())
}

/// Shannon rate `B·log2(1 + P·h/σ²)` [bit/s].
pub fn achievable_rate(power: f64, h_gain: f64, noise_var: f64, bandwidth: f64) -> f64 {
    bandwidth * (power * h_gain / noise_var).ln_1p() / std::f64::consts::LN_2
}

/// Smallest transmit power reaching `app.target_rate` over a channel of gain `h_gain`.
pub fn optimum_power(app: &ApplicationClass, h_gain: f64, noise_var: f64) -> Result<f64> {
    if !(h_gain > 0.0) {
        return Err(invalid("h_gain", "deep fade: no finite power reaches the target rate"));
    }
    if !(app.bandwidth > 0.0) {
        return Err(invalid("bandwidth", "must be > 0"));
    }
    if !(noise_var > 0.0) {
        return Err(invalid("noise_var", "must be > 0"));
    }
    if !(app.target_rate >= 0.0) {
        return Err(invalid("target_rate", "must be >= 0"));
    }
    // exp_m1 keeps precision for rates far below the bandwidth
    let factor = (app.target_rate / app.bandwidth * std::f64::consts::LN_2).exp_m1();
    Ok(noise_var / h_gain * factor)
}

/// Sum of optimum powers over the applications `mode` serves.
pub fn total_power(
    mode: UeMode,
    apps: &[ApplicationClass],
    h_gain: f64,
    noise_var: f64,
) -> Result<f64> {
    if apps.is_empty() {
        return Err(invalid("apps", "empty application set"));
    }
    let served = allowed_applications(mode);
    apps.iter()
        .filter(|a| served.contains(&a.id))
        .map(|a| optimum_power(a, h_gain, noise_var))
        .sum()
}

pub fn power_saved(am_cell: f64, mixed_cell: f64) -> f64 {
    am_cell - mixed_cell
}

/// Delivered rate per consumed power [bit/J].
pub fn energy_efficiency(rate: f64, radiated_powers: &[f64], p_ckt: f64) -> Result<f64> {
    if !(p_ckt > 0.0) {
        return Err(invalid("p_ckt", format!("must be > 0, got {p_ckt}")));
    }
    Ok(rate / (radiated_powers.iter().sum::<f64>() + p_ckt))
}
