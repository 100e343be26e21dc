//! Paired AM-only / TR-mixed cell simulation.

use crate::bioheat::{self, IncidentPower, TemperatureSummary};
use crate::channel::{self, ChannelProcess, DelayProfile, Direction, LinkSet};
use crate::data;
use crate::error::{Error, Result};
use crate::exposure::{
    self, comparative_report, default_skin, depth_grid, layer_absorption, pd_depth_profile,
    power_density_far_field, sar_depth_profile, sar_point, ComparativeReport, ExposureProfile,
    LayerBudget, ProfileLabel, SarAmVariant, W_M2_PER_MW_CM2,
};
use crate::mode::{emitted_links, transition, AdaptiveSwitch, RrcEvent, RrcState, SlotRecord, UeMode};
use crate::power::{achievable_rate, check_frame, optimum_power, split_power, AppId, FramePlan, PowerSplit};
use crate::rng;

use super::config::{ModePolicy, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CellKind {
    /// Every handset in Active mode.
    AllActive,
    /// TR-capable handsets follow the configured mode policy.
    Mixed,
}

impl CellKind {
    pub fn label(self) -> &'static str {
        match self {
            CellKind::AllActive => "am",
            CellKind::Mixed => "mixed",
        }
    }
}

/// Per-user, per-slot total channel gain (path gain times fading).
#[derive(Debug, Clone, PartialEq)]
pub struct IterationDraws {
    pub gains: Vec<Vec<f64>>,
}

/// FNV-1a over the bit patterns of every value read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct DrawLog(u64);

impl DrawLog {
    fn new() -> Self {
        Self(0xcbf2_9ce4_8422_2325)
    }

    fn read(&mut self, v: f64) -> f64 {
        for b in v.to_bits().to_le_bytes() {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
        v
    }
}

pub fn draw_iteration(cfg: &ScenarioConfig, iteration: usize) -> Result<IterationDraws> {
    use rand::Rng;
    let process = ChannelProcess {
        min_taps: cfg.radio.min_taps,
        max_taps: cfg.radio.max_taps,
        profile: DelayProfile::default(),
    };
    let gains = (0..cfg.n_users)
        .map(|u| {
            let user_seed = rng::derive_seed(cfg.seed, &[iteration as u64, u as u64]);
            let mut r = rng::stream(user_seed, &[u64::MAX]);
            let (lo, hi) = (cfg.radio.path_gain_db_min, cfg.radio.path_gain_db_max);
            let path_db = if hi > lo { r.random_range(lo..hi) } else { lo };
            let path = 10f64.powf(path_db / 10.0);
            (0..cfg.frame.n_slots)
                .map(|s| {
                    let ch = process.realize(user_seed, s as u64, 1.0)?;
                    Ok(path * channel::snapshot(&ch, Direction::Downlink).gain)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IterationDraws { gains })
}

/// TR-capable users of an `n`-user cell. Users are ranked by the golden-ratio
/// sequence, so the sets are nested in `tr` and spread evenly over indices.
pub fn tr_mask(n: usize, tr: usize) -> Vec<bool> {
    const PHI: f64 = 0.618_033_988_749_894_8;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let key = |i: usize| (i as f64 * PHI).fract();
        key(a).total_cmp(&key(b)).then(a.cmp(&b))
    });
    let mut mask = vec![false; n];
    for &i in order.iter().take(tr) {
        mask[i] = true;
    }
    mask
}

/// Received signal strength [dBm].
pub fn signal_strength_dbm(bs_power: f64, gain: f64) -> f64 {
    10.0 * (bs_power * gain).log10() + 30.0
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UserStats {
    /// Slot-mean handset radiated power [W].
    pub power: f64,
    pub sar: f64,
    /// [W/m²]
    pub pd: f64,
    pub ee: f64,
    /// Slot-mean per-application EE, `None` when the app was never served.
    pub app_ee: [Option<f64>; 3],
    pub links: usize,
    pub tr_slots: usize,
}

/// One cell over one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct CellIteration {
    pub iteration: usize,
    pub users: Vec<UserStats>,
    pub total_power: f64,
    pub aggregate_sar: f64,
    pub aggregate_pd: f64,
    pub mean_ee: f64,
    pub complexity: usize,
    pub frame_ok: bool,
    /// Power harvested by TR circuitry over the frame [W·slot].
    pub harvested: f64,
    /// Slots in which a handset hit the optional power ceiling.
    pub outages: usize,
    pub draw_hash: u64,
}

fn connected(a3_downlink: bool) -> RrcState {
    let s = transition(RrcState::idle(a3_downlink), RrcEvent::SetupRequest).expect("idle accepts setup");
    transition(s, RrcEvent::SetupComplete).expect("setup completes")
}

fn enter_tr(s: RrcState) -> Result<RrcState> {
    let s = transition(s, RrcEvent::ModeIdentified(UeMode::Thermal))?;
    transition(s, RrcEvent::EnterLowActivity)
}

/// Runs one cell over the shared draws.
pub fn simulate_cell(cfg: &ScenarioConfig, draws: &IterationDraws, kind: CellKind, iteration: usize) -> Result<CellIteration> {
    let apps = cfg.applications();
    let n = cfg.n_users;
    let slots = cfg.frame.n_slots;
    let ig = 10f64.powf(cfg.radio.interferer_gain_db / 10.0);
    let mut log = DrawLog::new();
    let mut plan = FramePlan::zeros(slots, n, cfg.frame.p_max, cfg.frame.p_avg);
    let mut users = Vec::with_capacity(n);
    let mut harvested = 0.0;
    let mut outages = 0;
    let mask = tr_mask(n, cfg.tr_users);

    for (u, &in_mask) in mask.iter().enumerate() {
        let capable = kind == CellKind::Mixed && in_mask;
        let mut state = connected(cfg.radio.a3_downlink);
        if capable && cfg.mode_policy == ModePolicy::Fixed {
            state = enter_tr(state)?;
        }
        let mut switch = AdaptiveSwitch::new(cfg.decision);
        let mut st = UserStats::default();
        let mut app_ee_sum = [0.0; 3];
        let mut app_ee_n = [0usize; 3];

        for s in 0..slots {
            let g = log.read(draws.gains[u][s]);
            if !(g > 0.0) {
                return Err(Error::InvalidArgument { name: "gain", reason: "zero channel gain".into() });
            }
            let ss = signal_strength_dbm(cfg.radio.bs_power, g);

            if capable && cfg.mode_policy == ModePolicy::Adaptive {
                let noise = cfg.noise_var;
                let rec = SlotRecord {
                    snr: cfg.radio.bs_power * g / noise,
                    sinr: cfg.radio.bs_power * g / noise,
                    ss_dbm: ss,
                };
                let demand = AppId::ALL.into_iter().collect();
                let was = state.mode();
                let now = switch.observe(s, rec, &demand, cfg.app_rates.a3).mode;
                state = match (was, now) {
                    (UeMode::Active, UeMode::Thermal) => enter_tr(state)?,
                    (UeMode::Thermal, UeMode::Active) => transition(state, RrcEvent::SignalRecovered)?,
                    _ => state,
                };
            }

            let links: LinkSet = emitted_links(&state, &AppId::ALL);
            st.links += links.len();
            if state.mode() == UeMode::Thermal {
                st.tr_slots += 1;
            }
            let budget = channel::interference(cfg.radio.bs_power, cfg.radio.ue_power, ig, ig, &links);
            let noise = cfg.noise_var + budget.total;

            let mut ul = [0.0; 3];
            let mut dl = 0.0;
            for l in &links {
                let p = optimum_power(&apps[l.app as usize], g, noise)?;
                match l.direction {
                    Direction::Uplink => ul[l.app as usize] = p,
                    Direction::Downlink => dl += p,
                }
            }
            let raw: f64 = ul.iter().sum();
            let scale = match cfg.radio.power_cap {
                Some(cap) if raw > cap => {
                    outages += 1;
                    cap / raw
                }
                _ => 1.0,
            };
            ul.iter_mut().for_each(|p| *p *= scale);
            let p_dev = raw * scale;
            plan.allocations[s][u] = dl;

            let split = PowerSplit::new(cfg.frame.alpha, cfg.frame.gamma, dl, dl + p_dev)?;
            harvested += split_power(&split, g)?.0;

            let rate = |a: AppId| achievable_rate(ul[a as usize], g, noise, cfg.bandwidth);
            st.power += p_dev;
            st.sar += sar_point(p_dev, cfg.exposure.mass)?;
            st.pd += power_density_far_field(cfg.exposure.antenna_gain, p_dev, cfg.exposure.distance)?;
            st.ee += (rate(AppId::A1) + rate(AppId::A2)) / (p_dev + cfg.p_ckt);
            for a in AppId::ALL {
                if ul[a as usize] > 0.0 {
                    app_ee_sum[a as usize] += rate(a) / (ul[a as usize] + cfg.p_ckt);
                    app_ee_n[a as usize] += 1;
                }
            }
        }

        let m = slots as f64;
        st.power /= m;
        st.sar /= m;
        st.pd /= m;
        st.ee /= m;
        for a in 0..3 {
            st.app_ee[a] = (app_ee_n[a] > 0).then(|| app_ee_sum[a] / app_ee_n[a] as f64);
        }
        users.push(st);
    }

    let complexity = users.iter().map(|s| s.links).sum();
    let total_power = users.iter().map(|s| s.power).sum();
    let aggregate_sar = users.iter().map(|s| s.sar).sum();
    let aggregate_pd = users.iter().map(|s| s.pd).sum();
    let mean_ee = if n == 0 { 0.0 } else { users.iter().map(|s| s.ee).sum::<f64>() / n as f64 };
    Ok(CellIteration {
        iteration,
        users,
        total_power,
        aggregate_sar,
        aggregate_pd,
        mean_ee,
        complexity,
        frame_ok: check_frame(&plan).passed(),
        harvested,
        outages,
        draw_hash: log.0,
    })
}

/// Per-iteration metrics of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMetrics {
    pub kind: CellKind,
    pub iterations: Vec<CellIteration>,
    /// Saving relative to the AM-only cell, per iteration [W].
    pub power_saved: Vec<f64>,
}

impl CellMetrics {
    fn mean(&self, f: impl Fn(&CellIteration) -> f64) -> f64 {
        self.iterations.iter().map(f).sum::<f64>() / self.iterations.len() as f64
    }

    pub fn mean_total_power(&self) -> f64 {
        self.mean(|i| i.total_power)
    }

    pub fn mean_ee(&self) -> f64 {
        self.mean(|i| i.mean_ee)
    }

    pub fn mean_sar(&self) -> f64 {
        self.mean(|i| i.aggregate_sar)
    }

    pub fn mean_pd(&self) -> f64 {
        self.mean(|i| i.aggregate_pd)
    }

    pub fn total_complexity(&self) -> usize {
        self.iterations.iter().map(|i| i.complexity).sum()
    }

    pub fn mean_power_saved(&self) -> f64 {
        self.power_saved.iter().sum::<f64>() / self.power_saved.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintRow {
    pub iteration: usize,
    /// `P_AM − P_mixed` [W]
    pub power_margin: f64,
    pub sar_margin: f64,
    pub pd_margin: f64,
}

impl ConstraintRow {
    pub fn holds(&self) -> bool {
        self.power_margin > 0.0 && self.sar_margin > 0.0 && self.pd_margin > 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintReport {
    pub rows: Vec<ConstraintRow>,
}

impl ConstraintReport {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| !r.holds()).count()
    }

    pub fn passed(&self) -> bool {
        self.violations() == 0
    }

    pub fn min_margins(&self) -> (f64, f64, f64) {
        self.rows.iter().fold((f64::INFINITY, f64::INFINITY, f64::INFINITY), |m, r| {
            (m.0.min(r.power_margin), m.1.min(r.sar_margin), m.2.min(r.pd_margin))
        })
    }
}

/// Strict-dominance margins of the mixed cell over the AM-only cell.
pub fn check_constraints(am: &CellMetrics, mixed: &CellMetrics) -> ConstraintReport {
    let rows = am
        .iterations
        .iter()
        .zip(&mixed.iterations)
        .map(|(a, m)| ConstraintRow {
            iteration: a.iteration,
            power_margin: a.total_power - m.total_power,
            sar_margin: a.aggregate_sar - m.aggregate_sar,
            pd_margin: a.aggregate_pd - m.aggregate_pd,
        })
        .collect();
    ConstraintReport { rows }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkResults {
    pub am: CellMetrics,
    pub mixed: CellMetrics,
}

fn iteration_pair(cfg: &ScenarioConfig, it: usize) -> Result<(CellIteration, CellIteration)> {
    let draws = draw_iteration(cfg, it)?;
    Ok((
        simulate_cell(cfg, &draws, CellKind::AllActive, it)?,
        simulate_cell(cfg, &draws, CellKind::Mixed, it)?,
    ))
}

/// Both cells over every iteration, sharing channel draws per iteration.
pub fn run_network(cfg: &ScenarioConfig) -> Result<NetworkResults> {
    cfg.validate()?;
    #[cfg(feature = "parallel")]
    let pairs: Vec<Result<(CellIteration, CellIteration)>> = {
        use rayon::prelude::*;
        (0..cfg.iterations).into_par_iter().map(|it| iteration_pair(cfg, it)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let pairs: Vec<Result<(CellIteration, CellIteration)>> =
        (0..cfg.iterations).map(|it| iteration_pair(cfg, it)).collect();

    let (am, mixed): (Vec<_>, Vec<_>) = pairs.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();
    let saved: Vec<f64> = am.iter().zip(&mixed).map(|(a, m)| a.total_power - m.total_power).collect();
    Ok(NetworkResults {
        am: CellMetrics { kind: CellKind::AllActive, power_saved: vec![0.0; am.len()], iterations: am },
        mixed: CellMetrics { kind: CellKind::Mixed, power_saved: saved, iterations: mixed },
    })
}

/// Points of the active-user axis: multiples of `step`, then `n` itself.
pub fn user_axis(n: usize, step: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (1..=n / step).map(|k| k * step).collect();
    if v.last() != Some(&n) && n > 0 {
        v.push(n);
    }
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct EeRow {
    pub iteration: usize,
    pub active_users: usize,
    pub cell: CellKind,
    pub ee: f64,
    pub app_ee: [Option<f64>; 3],
}

fn prefix_app_ee(users: &[UserStats], a: usize) -> Option<f64> {
    let v: Vec<f64> = users.iter().filter_map(|u| u.app_ee[a]).collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// EE against the number of active users (the first `k` users of each cell).
pub fn ee_series(cfg: &ScenarioConfig, net: &NetworkResults) -> Vec<EeRow> {
    let axis = user_axis(cfg.n_users, cfg.user_step);
    let mut rows = Vec::new();
    for (a, m) in net.am.iterations.iter().zip(&net.mixed.iterations) {
        for &k in &axis {
            for it in [a, m] {
                let users = &it.users[..k];
                rows.push(EeRow {
                    iteration: it.iteration,
                    active_users: k,
                    cell: if std::ptr::eq(it, a) { CellKind::AllActive } else { CellKind::Mixed },
                    ee: users.iter().map(|u| u.ee).sum::<f64>() / k as f64,
                    app_ee: [0, 1, 2].map(|x| prefix_app_ee(users, x)),
                });
            }
        }
    }
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComplexityRow {
    pub iteration: usize,
    pub active_users: usize,
    pub am: usize,
    pub mixed: usize,
}

/// Links evaluated per slot, summed over the frame, for the first `k` users.
pub fn complexity_series(cfg: &ScenarioConfig) -> Result<Vec<ComplexityRow>> {
    Ok(complexity_rows(cfg, &run_network(cfg)?))
}

/// Exposure and heating of a representative handset.
#[derive(Debug, Clone, PartialEq)]
pub struct ExposureResults {
    /// Representative radiated power of a TR-capable handset in each cell [W].
    pub p_am: f64,
    pub p_tr: f64,
    /// Incident power density [mW/cm²].
    pub incident_am: f64,
    pub incident_tr: f64,
    pub profiles: Vec<ExposureProfile>,
    pub budget: LayerBudget,
    pub temperature: [TemperatureSummary; 2],
    pub pattern: Vec<[f64; 4]>,
}

/// Median slot-mean power of the TR-capable handsets in each cell (all
/// handsets when none is TR-capable). The median keeps deep fades, whose
/// inverted power is unbounded, from dominating.
pub fn representative_powers(cfg: &ScenarioConfig, net: &NetworkResults) -> (f64, f64) {
    let mask = tr_mask(cfg.n_users, cfg.tr_users);
    let pick = |u: usize| cfg.tr_users == 0 || mask[u];
    let median = |m: &CellMetrics| {
        let mut v: Vec<f64> = m
            .iterations
            .iter()
            .flat_map(|it| it.users.iter().enumerate().filter(|(u, _)| pick(*u)).map(|(_, s)| s.power))
            .collect();
        if v.is_empty() {
            return 0.0;
        }
        v.sort_by(f64::total_cmp);
        let k = v.len();
        if k % 2 == 1 { v[k / 2] } else { 0.5 * (v[k / 2 - 1] + v[k / 2]) }
    };
    (median(&net.am), median(&net.mixed))
}

pub fn exposure_results(cfg: &ScenarioConfig, p_am: f64, p_tr: f64) -> Result<ExposureResults> {
    let e = &cfg.exposure;
    let skin = default_skin();
    let inc = |p| -> Result<f64> { Ok(power_density_far_field(e.antenna_gain, p, e.distance)? / W_M2_PER_MW_CM2) };
    let (incident_am, incident_tr) = (inc(p_am)?, inc(p_tr)?);
    let z = depth_grid(e.depth_max_mm, e.depth_step_mm);
    let profiles = [(incident_am, ProfileLabel::Am), (incident_tr, ProfileLabel::Tr)]
        .into_iter()
        .map(|(pd, label)| {
            let p = pd_depth_profile(&skin, pd, cfg.frequency, &z, label)?;
            sar_depth_profile(&p, &skin)
        })
        .collect::<Result<Vec<_>>>()?;
    let budget = layer_absorption(&skin, 1.0, cfg.frequency)?;

    let grid = cfg.bioheat.grid.build()?;
    let solver = &cfg.bioheat.solver;
    let am = bioheat::solve(
        &grid,
        solver,
        IncidentPower::Active { p_total: p_am, p_dl: 0.0, variant: SarAmVariant::Printed },
        e.mass,
    )?;
    let tr = bioheat::solve(&grid, solver, IncidentPower::Thermal { p_dl: p_tr }, e.mass)?;
    let temperature = [bioheat::summary(&am, solver), bioheat::summary(&tr, solver)];
    let pattern = bioheat::radiation_pattern(&cfg.bioheat.pattern, temperature[0].peak, temperature[1].peak)?;
    Ok(ExposureResults { p_am, p_tr, incident_am, incident_tr, profiles, budget, temperature, pattern })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResults {
    pub config: ScenarioConfig,
    pub network: NetworkResults,
    pub constraints: ConstraintReport,
    pub ee: Vec<EeRow>,
    pub complexity: Vec<ComplexityRow>,
    pub exposure: ExposureResults,
    pub table4: ComparativeReport,
}

/// Reduction depth used for the bundled reference table [mm].
pub const TABLE4_DEPTH_MM: f64 = 0.4;

pub fn table4_report() -> Result<ComparativeReport> {
    comparative_report(&exposure::profiles_from_table(&data::table4()), TABLE4_DEPTH_MM)
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunResults> {
    let network = run_network(cfg)?;
    let constraints = check_constraints(&network.am, &network.mixed);
    let ee = ee_series(cfg, &network);
    let complexity = complexity_rows(cfg, &network);
    let (p_am, p_tr) = representative_powers(cfg, &network);
    let exposure = exposure_results(cfg, p_am, p_tr)?;
    Ok(RunResults {
        config: cfg.clone(),
        network,
        constraints,
        ee,
        complexity,
        exposure,
        table4: table4_report()?,
    })
}

/// Complexity series from per-user link counts already gathered by the run.
fn complexity_rows(cfg: &ScenarioConfig, net: &NetworkResults) -> Vec<ComplexityRow> {
    let axis = user_axis(cfg.n_users, cfg.user_step);
    let mut rows = Vec::new();
    for (a, m) in net.am.iterations.iter().zip(&net.mixed.iterations) {
        for &k in &axis {
            rows.push(ComplexityRow {
                iteration: a.iteration,
                active_users: k,
                am: a.users[..k].iter().map(|u| u.links).sum(),
                mixed: m.users[..k].iter().map(|u| u.links).sum(),
            });
        }
    }
    rows
}
