//! Browser bindings for the trmode simulator. Every export returns a flat
//! `Float64Array` so the page can plot it without any glue code.

use wasm_bindgen::prelude::*;

use trmode::bioheat::{self, Boundary, SolverConfig, TemperatureField, TissueGrid, TissueProps};
use trmode::channel::{self, ChannelProcess, DelayProfile, Direction};
use trmode::exposure::{default_skin, depth_grid, pd_depth_profile, sar_depth_profile, ProfileLabel};
use trmode::mode::{AdaptiveSwitch, DecisionConfig, SlotRecord, UeMode};
use trmode::power::{default_applications, total_power, AppId};
use trmode::scenario::signal_strength_dbm;

fn js_err(e: trmode::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Rows of `[depth_mm, pd_am, pd_tr, sar_am, sar_tr]` for the default skin stack.
pub fn skin_profiles_native(
    incident_am: f64,
    incident_tr: f64,
    frequency_ghz: f64,
    depth_max_mm: f64,
    step_mm: f64,
) -> trmode::Result<Vec<f64>> {
    let skin = default_skin();
    let z = depth_grid(depth_max_mm, step_mm);
    let f = frequency_ghz * 1e9;
    let am = sar_depth_profile(&pd_depth_profile(&skin, incident_am, f, &z, ProfileLabel::Am)?, &skin)?;
    let tr = sar_depth_profile(&pd_depth_profile(&skin, incident_tr, f, &z, ProfileLabel::Tr)?, &skin)?;
    let mut out = Vec::with_capacity(z.len() * 5);
    for (i, depth) in z.iter().enumerate() {
        out.extend_from_slice(&[*depth, am.pd[i], tr.pd[i], am.sar[i], tr.sar[i]]);
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn skin_profiles(
    incident_am: f64,
    incident_tr: f64,
    frequency_ghz: f64,
    depth_max_mm: f64,
    step_mm: f64,
) -> Result<Vec<f64>, JsError> {
    skin_profiles_native(incident_am, incident_tr, frequency_ghz, depth_max_mm, step_mm).map_err(js_err)
}

/// Rows of `[ss_dbm, is_tr, power_w]`, one per slot, for one handset whose
/// mean path gain puts its signal strength near `mean_ss_dbm`.
pub fn mode_trace_native(
    seed: u64,
    n_slots: usize,
    mean_ss_dbm: f64,
    threshold_dbm: f64,
    hysteresis_db: f64,
) -> trmode::Result<Vec<f64>> {
    const BS_POWER: f64 = 20.0;
    const NOISE: f64 = 1e-13;
    let cfg = DecisionConfig { ss_threshold: threshold_dbm, hysteresis_db, ..DecisionConfig::default() };
    let apps = default_applications(cfg.bandwidth);
    let path = 10f64.powf((mean_ss_dbm - 30.0) / 10.0) / BS_POWER;
    let process = ChannelProcess { min_taps: 4, max_taps: 12, profile: DelayProfile::default() };
    let demand = AppId::ALL.into_iter().collect();
    let mut sw = AdaptiveSwitch::new(cfg);
    let mut out = Vec::with_capacity(n_slots * 3);
    for s in 0..n_slots {
        let ch = process.realize(seed, s as u64, 1.0)?;
        let g = path * channel::snapshot(&ch, Direction::Downlink).gain;
        let ss = signal_strength_dbm(BS_POWER, g);
        let snr = BS_POWER * g / NOISE;
        let e = sw.observe(s, SlotRecord { snr, sinr: snr, ss_dbm: ss }, &demand, apps[2].target_rate);
        let p = total_power(e.mode, &apps, g, NOISE)?;
        out.extend_from_slice(&[ss, f64::from(u8::from(e.mode == UeMode::Thermal)), p]);
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn mode_trace(
    seed: u32,
    n_slots: usize,
    mean_ss_dbm: f64,
    threshold_dbm: f64,
    hysteresis_db: f64,
) -> Result<Vec<f64>, JsError> {
    mode_trace_native(u64::from(seed), n_slots, mean_ss_dbm, threshold_dbm, hysteresis_db).map_err(js_err)
}

/// `max|u|` after each step on an 8³ periodic grid with a checkerboard-rich
/// start, at `dt_ratio` times the stability limit. The first entry is the
/// limit itself [s]; the second is the largest Fourier amplification.
pub fn stability_explorer_native(dt_ratio: f64, perfusion: f64, steps: usize) -> trmode::Result<Vec<f64>> {
    let dims = [8, 8, 8];
    let grid = TissueGrid::uniform(dims, 1e-3, TissueProps { perfusion, ..TissueProps::default() })?;
    let limit = bioheat::stability_limit(&grid);
    let cfg = SolverConfig {
        dt: dt_ratio * limit,
        boundary: Boundary::Periodic,
        unstable_ok: true,
        ..SolverConfig::default()
    };
    let w = bioheat::max_amplification(&grid, &cfg)?;
    let mut f = TemperatureField::from_fn(dims, |x, y, z| {
        let checker = if (x + y + z) % 2 == 0 { 1.0 } else { -1.0 };
        checker * 1e-3 + ((x * 3 + y * 5 + z * 7) % 11) as f64 / 11.0
    });
    let mut out = vec![limit, w, f.max_abs()];
    for _ in 0..steps {
        f = bioheat::evolve(f, &grid, &cfg, 1)?;
        let m = f.max_abs();
        out.push(m);
        if !m.is_finite() || m > 1e12 {
            break;
        }
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn stability_explorer(dt_ratio: f64, perfusion: f64, steps: usize) -> Result<Vec<f64>, JsError> {
    stability_explorer_native(dt_ratio, perfusion, steps).map_err(js_err)
}
