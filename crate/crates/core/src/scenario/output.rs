//! CSV and manifest emission. Every number goes through [`sig9`] so output
//! is locale-independent and byte-stable.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use crate::bioheat::write_pattern_csv;
use crate::error::{Error, Result};
use crate::exposure::write_profiles_csv;
use crate::format::sig9;

use super::run::{CellMetrics, RunResults};

pub const OUTPUT_FILES: [&str; 12] = [
    "cell_metrics.csv",
    "constraints.csv",
    "ee_series.csv",
    "complexity_series.csv",
    "pd_profile.csv",
    "sar_profile.csv",
    "layer_absorption.csv",
    "table4_report.csv",
    "table4_reduction.csv",
    "temperature_summary.csv",
    "radiation_pattern.csv",
    "run_manifest.txt",
];

fn with_path(path: &Path, e: io::Error) -> Error {
    Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn write_file(dir: &Path, name: &str, body: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut buf = Vec::new();
    body(&mut buf)?;
    fs::write(&path, buf).map_err(|e| with_path(&path, e))?;
    Ok(path)
}

fn opt(v: Option<f64>) -> String {
    v.map(sig9).unwrap_or_default()
}

fn cell_rows(out: &mut Vec<u8>, m: &CellMetrics) -> io::Result<()> {
    for (it, saved) in m.iterations.iter().zip(&m.power_saved) {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{:016x}",
            it.iteration,
            m.kind.label(),
            sig9(it.total_power),
            sig9(*saved),
            sig9(it.aggregate_sar),
            sig9(it.aggregate_pd),
            sig9(it.mean_ee),
            it.complexity,
            u8::from(it.frame_ok),
            sig9(it.harvested),
            it.outages,
            it.draw_hash
        )?;
    }
    Ok(())
}

fn manifest(r: &RunResults, files: &[&str]) -> String {
    let net = &r.network;
    let mut s = String::new();
    let _ = writeln!(s, "trmode {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "seed = {}", r.config.seed);
    let _ = writeln!(s, "iterations = {}", r.config.iterations);
    let _ = writeln!(s, "constraint_violations = {}", r.constraints.violations());
    let (pm, sm, dm) = r.constraints.min_margins();
    let _ = writeln!(s, "min_power_margin_w = {}", sig9(pm));
    let _ = writeln!(s, "min_sar_margin_w_kg = {}", sig9(sm));
    let _ = writeln!(s, "min_pd_margin_w_m2 = {}", sig9(dm));
    let _ = writeln!(s, "mean_power_am_w = {}", sig9(net.am.mean_total_power()));
    let _ = writeln!(s, "mean_power_mixed_w = {}", sig9(net.mixed.mean_total_power()));
    let _ = writeln!(s, "mean_power_saved_w = {}", sig9(net.mixed.mean_power_saved()));
    let _ = writeln!(s, "mean_ee_am_bit_j = {}", sig9(net.am.mean_ee()));
    let _ = writeln!(s, "mean_ee_mixed_bit_j = {}", sig9(net.mixed.mean_ee()));
    let _ = writeln!(s, "complexity_am = {}", net.am.total_complexity());
    let _ = writeln!(s, "complexity_mixed = {}", net.mixed.total_complexity());
    let _ = writeln!(s, "files:");
    for f in files {
        let _ = writeln!(s, "  {f}");
    }
    let _ = writeln!(s, "\n# configuration");
    s.push_str(&r.config.to_toml_string());
    s
}

/// Writes every output file into `out_dir`, creating it if needed.
pub fn emit_outputs(r: &RunResults, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| with_path(out_dir, e))?;
    let mut paths = Vec::new();

    paths.push(write_file(out_dir, "cell_metrics.csv", |o| {
        writeln!(
            o,
            "iteration,cell,total_power_w,power_saved_w,aggregate_sar_w_kg,aggregate_pd_w_m2,mean_ee_bit_j,complexity,frame_ok,harvested_w,outages,draw_hash"
        )?;
        cell_rows(o, &r.network.am)?;
        cell_rows(o, &r.network.mixed)?;
        Ok(())
    })?);

    paths.push(write_file(out_dir, "constraints.csv", |o| {
        writeln!(o, "iteration,power_margin_w,sar_margin_w_kg,pd_margin_w_m2,holds")?;
        for c in &r.constraints.rows {
            writeln!(
                o,
                "{},{},{},{},{}",
                c.iteration,
                sig9(c.power_margin),
                sig9(c.sar_margin),
                sig9(c.pd_margin),
                u8::from(c.holds())
            )?;
        }
        Ok(())
    })?);

    paths.push(write_file(out_dir, "ee_series.csv", |o| {
        writeln!(o, "iteration,active_users,cell,ee_bit_j,a1_bit_j,a2_bit_j,a3_bit_j")?;
        for e in &r.ee {
            writeln!(
                o,
                "{},{},{},{},{},{},{}",
                e.iteration,
                e.active_users,
                e.cell.label(),
                sig9(e.ee),
                opt(e.app_ee[0]),
                opt(e.app_ee[1]),
                opt(e.app_ee[2])
            )?;
        }
        Ok(())
    })?);

    paths.push(write_file(out_dir, "complexity_series.csv", |o| {
        writeln!(o, "iteration,active_users,am,mixed")?;
        for c in &r.complexity {
            writeln!(o, "{},{},{},{}", c.iteration, c.active_users, c.am, c.mixed)?;
        }
        Ok(())
    })?);

    let ex = &r.exposure;
    paths.push(write_file(out_dir, "pd_profile.csv", |o| write_profiles_csv(&ex.profiles, false, o))?);
    paths.push(write_file(out_dir, "sar_profile.csv", |o| write_profiles_csv(&ex.profiles, true, o))?);

    paths.push(write_file(out_dir, "layer_absorption.csv", |o| {
        writeln!(o, "layer,absorbed_fraction")?;
        let skin = crate::exposure::default_skin();
        for (l, a) in skin.iter().zip(&ex.budget.absorbed) {
            let n = &l.name;
            writeln!(o, "{n},{}", sig9(*a))?;
        }
        Ok(())
    })?);

    paths.push(write_file(out_dir, "table4_report.csv", |o| Ok(r.table4.write_csv(o)?))?);
    paths.push(write_file(out_dir, "table4_reduction.csv", |o| Ok(r.table4.write_reductions_csv(o)?))?);

    paths.push(write_file(out_dir, "temperature_summary.csv", |o| {
        writeln!(o, "cell,power_w,incident_pd_mw_cm2,peak_k,mean_k,min_k,peak_abs_k,warm_sensation,steps")?;
        let rows = [("am", ex.p_am, ex.incident_am, ex.temperature[0]), ("tr", ex.p_tr, ex.incident_tr, ex.temperature[1])];
        for (label, p, inc, t) in rows {
            writeln!(
                o,
                "{label},{},{},{},{},{},{},{},{}",
                sig9(p),
                sig9(inc),
                sig9(t.peak),
                sig9(t.mean),
                sig9(t.min),
                sig9(t.peak_abs),
                u8::from(t.warm_sensation),
                t.steps
            )?;
        }
        Ok(())
    })?);

    paths.push(write_file(out_dir, "radiation_pattern.csv", |o| Ok(write_pattern_csv(&ex.pattern, o)?))?);
    paths.push(write_file(out_dir, "run_manifest.txt", |o| {
        o.extend_from_slice(manifest(r, &OUTPUT_FILES).as_bytes());
        Ok(())
    })?);
    Ok(paths)
}
