//! SAR and power-density metrics and layered-skin depth profiles.
//!
//! Power density inside the skin decays layer by layer as
//! `PD(z) = PD(z_entry)·exp(-2(z - z_entry)/δ)`, with `δ` the plane-wave
//! penetration depth of the layer at the carrier frequency. Interface
//! reflections are not modelled, so the profile is continuous. Local SAR is
//! the absorbed power per unit mass, `-(1/ρ)·dPD/dz`.
//!
//! Depths are in millimetres and power densities in mW/cm² throughout this
//! module; SAR is in W/kg.

use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::PdTable;
use crate::dielectric::{penetration_depth, DielectricParams};
use crate::error::{invalid, Error, Result};

/// 1 mW/cm² = 10 W/m².
pub const W_M2_PER_MW_CM2: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TissueLayer {
    pub name: String,
    /// [mm]; the innermost layer may be `f64::INFINITY`.
    pub thickness_mm: f64,
    /// [kg/m³]
    pub density: f64,
    pub dielectric: DielectricParams,
}

impl TissueLayer {
    pub fn new(
        name: impl Into<String>,
        thickness_mm: f64,
        density: f64,
        dielectric: DielectricParams,
    ) -> Result<Self> {
        if !(thickness_mm > 0.0) {
            return Err(invalid("thickness_mm", "must be > 0"));
        }
        if !(density > 0.0) || !density.is_finite() {
            return Err(invalid("density", "must be > 0"));
        }
        dielectric.validate()?;
        Ok(Self {
            name: name.into(),
            thickness_mm,
            density,
            dielectric,
        })
    }
}

/// Epidermis+dermis 1.5 mm, subcutaneous fat 3.0 mm, semi-infinite muscle.
pub fn default_skin() -> Vec<TissueLayer> {
    vec![
        TissueLayer::new("epidermis+dermis", 1.5, 1109.0, DielectricParams::skin_cole_cole()).unwrap(),
        TissueLayer::new("sat", 3.0, 911.0, DielectricParams::fat()).unwrap(),
        TissueLayer::new("muscle", f64::INFINITY, 1090.0, DielectricParams::muscle()).unwrap(),
    ]
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProfileLabel {
    Am,
    Tr,
    AlekseevRef,
    ChahatRef,
    Other(String),
}

impl fmt::Display for ProfileLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileLabel::Am => f.write_str("am"),
            ProfileLabel::Tr => f.write_str("tr"),
            ProfileLabel::AlekseevRef => f.write_str("alekseev"),
            ProfileLabel::ChahatRef => f.write_str("chahat"),
            ProfileLabel::Other(s) => f.write_str(s),
        }
    }
}

impl ProfileLabel {
    pub fn parse(s: &str) -> Self {
        match s {
            "am" => ProfileLabel::Am,
            "tr" => ProfileLabel::Tr,
            "alekseev" => ProfileLabel::AlekseevRef,
            "chahat" => ProfileLabel::ChahatRef,
            other => ProfileLabel::Other(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExposureProfile {
    pub depths_mm: Vec<f64>,
    /// [mW/cm²]
    pub pd: Vec<f64>,
    /// [W/kg]; empty until computed.
    pub sar: Vec<f64>,
    pub label: ProfileLabel,
}

/// Which power enters the Active-mode point SAR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SarAmVariant {
    /// Uplink portion only, `(p_t − p_DL)/M`.
    #[default]
    Printed,
    /// Uplink and downlink, `p_t/M`.
    Total,
}

pub fn sar_point(power: f64, mass: f64) -> Result<f64> {
    if !(mass > 0.0) {
        return Err(invalid("mass", format!("must be > 0, got {mass}")));
    }
    if !(power >= 0.0) {
        return Err(invalid("power", "must be >= 0"));
    }
    Ok(power / mass)
}

/// Point SAR of a TR-mode handset, driven by the downlink portion only.
pub fn sar_tr(p_dl: f64, mass: f64) -> Result<f64> {
    sar_point(p_dl, mass)
}

pub fn sar_am(p_total: f64, p_dl: f64, mass: f64, variant: SarAmVariant) -> Result<f64> {
    if p_dl > p_total {
        return Err(invalid("p_dl", "exceeds p_total"));
    }
    match variant {
        SarAmVariant::Printed => sar_point(p_total - p_dl, mass),
        SarAmVariant::Total => sar_point(p_total, mass),
    }
}

/// Far-field power density `G·P/(4πd²)` [W/m²].
pub fn power_density_far_field(gain: f64, p_total: f64, distance: f64) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(invalid("distance", format!("must be > 0, got {distance}")));
    }
    Ok(gain * p_total / (4.0 * PI * distance * distance))
}

fn layer_depths_mm(skin: &[TissueLayer], frequency: f64) -> Result<Vec<f64>> {
    skin.iter()
        .map(|l| penetration_depth(&l.dielectric, frequency).map(|d| d * 1e3))
        .collect()
}

fn check_skin(skin: &[TissueLayer]) -> Result<()> {
    if skin.is_empty() {
        return Err(invalid("skin", "empty layer list"));
    }
    if skin[..skin.len() - 1].iter().any(|l| !l.thickness_mm.is_finite()) {
        return Err(invalid("skin", "only the innermost layer may be semi-infinite"));
    }
    Ok(())
}

/// Index of the layer containing depth `z`, with its entry depth.
fn locate(skin: &[TissueLayer], z: f64) -> (usize, f64) {
    let mut entry = 0.0;
    for (i, l) in skin.iter().enumerate() {
        if z < entry + l.thickness_mm || i == skin.len() - 1 {
            return (i, entry);
        }
        entry += l.thickness_mm;
    }
    unreachable!("skin is non-empty")
}

pub fn pd_depth_profile(
    skin: &[TissueLayer],
    incident_pd: f64,
    frequency: f64,
    depths_mm: &[f64],
    label: ProfileLabel,
) -> Result<ExposureProfile> {
    check_skin(skin)?;
    if !(incident_pd >= 0.0) {
        return Err(invalid("incident_pd", "must be >= 0"));
    }
    if depths_mm.iter().any(|z| !(*z >= 0.0)) || depths_mm.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("depths_mm", "must be non-negative and strictly increasing"));
    }
    let deltas = layer_depths_mm(skin, frequency)?;

    // PD at each layer entry
    let mut entry_pd = Vec::with_capacity(skin.len());
    let mut pd = incident_pd;
    for (l, d) in skin.iter().zip(&deltas) {
        entry_pd.push(pd);
        pd *= (-2.0 * l.thickness_mm / d).exp();
    }

    let pd = depths_mm
        .iter()
        .map(|&z| {
            let (i, entry) = locate(skin, z);
            entry_pd[i] * (-2.0 * (z - entry) / deltas[i]).exp()
        })
        .collect();
    Ok(ExposureProfile {
        depths_mm: depths_mm.to_vec(),
        pd,
        sar: Vec::new(),
        label,
    })
}

/// Power density absorbed in each layer and the part leaving the last finite layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerBudget {
    pub absorbed: Vec<f64>,
    pub exit: f64,
}

impl LayerBudget {
    pub fn fractions(&self, incident: f64) -> Vec<f64> {
        self.absorbed.iter().map(|a| a / incident).collect()
    }
}

pub fn layer_absorption(skin: &[TissueLayer], incident_pd: f64, frequency: f64) -> Result<LayerBudget> {
    check_skin(skin)?;
    let deltas = layer_depths_mm(skin, frequency)?;
    let mut pd = incident_pd;
    let mut absorbed = Vec::with_capacity(skin.len());
    for (l, d) in skin.iter().zip(&deltas) {
        let out = if l.thickness_mm.is_finite() {
            pd * (-2.0 * l.thickness_mm / d).exp()
        } else {
            0.0
        };
        absorbed.push(pd - out);
        pd = out;
    }
    Ok(LayerBudget { absorbed, exit: pd })
}

/// Fills `sar` from the numerical depth derivative of `pd`.
pub fn sar_depth_profile(profile: &ExposureProfile, skin: &[TissueLayer]) -> Result<ExposureProfile> {
    check_skin(skin)?;
    let z = &profile.depths_mm;
    let pd = &profile.pd;
    let n = z.len();
    if n < 2 {
        return Err(invalid("depths_mm", "need at least 2 depth points"));
    }
    if pd.len() != n {
        return Err(invalid("pd", "length differs from the depth grid"));
    }

    let derivative = |i: usize| -> f64 {
        if n == 2 {
            return (pd[1] - pd[0]) / (z[1] - z[0]);
        }
        // second-order three-point stencils on a possibly non-uniform grid
        let (a, b, c) = match i {
            0 => (0, 1, 2),
            i if i == n - 1 => (n - 3, n - 2, n - 1),
            i => (i - 1, i, i + 1),
        };
        let (za, zb, zc) = (z[a], z[b], z[c]);
        let x = z[i];
        let wa = (2.0 * x - zb - zc) / ((za - zb) * (za - zc));
        let wb = (2.0 * x - za - zc) / ((zb - za) * (zb - zc));
        let wc = (2.0 * x - za - zb) / ((zc - za) * (zc - zb));
        wa * pd[a] + wb * pd[b] + wc * pd[c]
    };

    // (mW/cm²)/mm = 10 W/m² / 1e-3 m = 1e4 W/m³
    let sar = (0..n)
        .map(|i| {
            let (layer, _) = locate(skin, z[i]);
            let dpd = derivative(i) * W_M2_PER_MW_CM2 * 1e3;
            (-dpd / skin[layer].density).max(0.0)
        })
        .collect();
    Ok(ExposureProfile {
        sar,
        ..profile.clone()
    })
}

/// PD columns on a shared grid plus TR reductions at one depth.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparativeReport {
    pub depths_mm: Vec<f64>,
    pub columns: Vec<(ProfileLabel, Vec<f64>)>,
    pub comparison_depth_mm: f64,
    /// `(other, (other − TR)/other × 100)` at the comparison depth.
    pub reductions: Vec<(ProfileLabel, f64)>,
}

pub fn comparative_report(profiles: &[ExposureProfile], comparison_depth_mm: f64) -> Result<ComparativeReport> {
    let first = profiles
        .first()
        .ok_or_else(|| invalid("profiles", "no profiles"))?;
    for p in profiles {
        let same = p.depths_mm.len() == first.depths_mm.len()
            && p.depths_mm.iter().zip(&first.depths_mm).all(|(a, b)| (a - b).abs() < 1e-9);
        if !same || p.pd.len() != p.depths_mm.len() {
            return Err(invalid("profiles", format!("grid of `{}` does not match", p.label)));
        }
    }
    let row = first
        .depths_mm
        .iter()
        .position(|z| (z - comparison_depth_mm).abs() < 1e-9)
        .ok_or_else(|| invalid("comparison_depth", format!("{comparison_depth_mm} mm is not on the grid")))?;
    let tr = profiles
        .iter()
        .find(|p| p.label == ProfileLabel::Tr)
        .ok_or_else(|| invalid("profiles", "no TR profile"))?;
    let tr_val = tr.pd[row];

    let reductions = profiles
        .iter()
        .filter(|p| p.label != ProfileLabel::Tr)
        .map(|p| {
            let other = p.pd[row];
            (p.label.clone(), (other - tr_val) / other * 100.0)
        })
        .collect();
    Ok(ComparativeReport {
        depths_mm: first.depths_mm.clone(),
        columns: profiles.iter().map(|p| (p.label.clone(), p.pd.clone())).collect(),
        comparison_depth_mm,
        reductions,
    })
}

/// Profiles from a reference PD table, one per value column.
pub fn profiles_from_table(table: &PdTable) -> Vec<ExposureProfile> {
    table
        .header
        .iter()
        .skip(1)
        .zip(&table.columns)
        .map(|(h, col)| ExposureProfile {
            depths_mm: table.depths_mm.clone(),
            pd: col.clone(),
            sar: Vec::new(),
            label: ProfileLabel::parse(h),
        })
        .collect()
}

impl ComparativeReport {
    /// Table rows: depth with one decimal, power densities with two.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header: Vec<String> = std::iter::once("depth_mm".to_string())
            .chain(self.columns.iter().map(|(l, _)| l.to_string()))
            .collect();
        writeln!(out, "{}", header.join(","))?;
        for (i, z) in self.depths_mm.iter().enumerate() {
            let mut line = format!("{z:.1}");
            for (_, col) in &self.columns {
                write!(line, ",{:.2}", col[i]).unwrap();
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn write_reductions_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "reference,depth_mm,pd_reduction_pct")?;
        for (l, r) in &self.reductions {
            writeln!(out, "{l},{:.1},{}", self.comparison_depth_mm, crate::format::sig9(*r))?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        write!(s, "{:>10}", "depth_mm").unwrap();
        for (l, _) in &self.columns {
            write!(s, " {:>10}", l.to_string()).unwrap();
        }
        s.push('\n');
        for (i, z) in self.depths_mm.iter().enumerate() {
            write!(s, "{z:>10.1}").unwrap();
            for (_, col) in &self.columns {
                write!(s, " {:>10.2}", col[i]).unwrap();
            }
            s.push('\n');
        }
        writeln!(s, "\nTR power-density reduction at {:.1} mm:", self.comparison_depth_mm).unwrap();
        for (l, r) in &self.reductions {
            writeln!(s, "  vs {:<10} {r:>8.3} %", l.to_string()).unwrap();
        }
        s
    }
}

/// Writes `depth_mm,<label>...` for each profile's PD (or SAR) column.
pub fn write_profiles_csv<W: Write>(profiles: &[ExposureProfile], sar: bool, mut out: W) -> Result<()> {
    let first = profiles.first().ok_or_else(|| invalid("profiles", "no profiles"))?;
    let header: Vec<String> = std::iter::once("depth_mm".to_string())
        .chain(profiles.iter().map(|p| p.label.to_string()))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for (i, z) in first.depths_mm.iter().enumerate() {
        let mut line = crate::format::sig9(*z);
        for p in profiles {
            let col = if sar { &p.sar } else { &p.pd };
            let v = col.get(i).ok_or_else(|| Error::InvalidArgument {
                name: "profiles",
                reason: format!("`{}` is missing values", p.label),
            })?;
            line.push(',');
            line.push_str(&crate::format::sig9(*v));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Uniform grid `0, step, ..., max` [mm].
pub fn depth_grid(max_mm: f64, step_mm: f64) -> Vec<f64> {
    let n = (max_mm / step_mm).round() as usize;
    (0..=n).map(|i| i as f64 * step_mm).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data;
    use crate::dielectric::{Pole, RelaxationModel};
    use proptest::prelude::*;

    /// Lossy medium whose penetration depth is found numerically and then
    /// used as the layer thickness.
    fn single_layer() -> (Vec<TissueLayer>, f64) {
        let d = DielectricParams::skin_debye();
        let delta_mm = penetration_depth(&d, 30e9).unwrap() * 1e3;
        (vec![TissueLayer::new("slab", delta_mm, 1000.0, d).unwrap()], delta_mm)
    }

    #[test]
    fn point_sar_examples() {
        assert_eq!(sar_point(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(sar_point(0.0, 1.0).unwrap(), 0.0);
        assert!(sar_point(1.0, 0.0).is_err());
        assert!((sar_tr(0.4, 0.01).unwrap() - 40.0).abs() < 1e-12);
        assert!((sar_am(1.0, 0.4, 0.01, SarAmVariant::Printed).unwrap() - 60.0).abs() < 1e-12);
        assert!((sar_am(1.0, 0.4, 0.01, SarAmVariant::Total).unwrap() - 100.0).abs() < 1e-12);
    }

    #[test]
    fn far_field_examples() {
        assert!((power_density_far_field(1.0, 4.0 * PI, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let a = power_density_far_field(1.5, 2.0, 0.3).unwrap();
        let b = power_density_far_field(1.5, 2.0, 0.6).unwrap();
        assert!((a / b - 4.0).abs() < 1e-12);
        let c = power_density_far_field(2.0, 20.0, 10.0).unwrap();
        assert!((c - 0.0318).abs() < 5e-5);
        assert!(power_density_far_field(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn zero_incident_gives_zero_profile() {
        let p = pd_depth_profile(&default_skin(), 0.0, 30e9, &depth_grid(1.0, 0.1), ProfileLabel::Tr).unwrap();
        assert!(p.pd.iter().all(|&v| v == 0.0));
        assert!(pd_depth_profile(&[], 1.0, 30e9, &[0.0], ProfileLabel::Tr).is_err());
    }

    #[test]
    fn exit_after_one_penetration_depth() {
        let (skin, delta) = single_layer();
        let b = layer_absorption(&skin, 1.0, 30e9).unwrap();
        assert!((b.exit - (-2f64).exp()).abs() < 1e-12);
        let p = pd_depth_profile(&skin, 1.0, 30e9, &[0.0, delta * 0.999_999_999], ProfileLabel::Am).unwrap();
        assert!((p.pd[1] - 0.1353).abs() < 1e-4);
    }

    #[test]
    fn profile_is_continuous_at_interfaces() {
        let skin = default_skin();
        let eps = 1e-9;
        let p = pd_depth_profile(&skin, 1.0, 30e9, &[1.5 - eps, 1.5, 4.5 - eps, 4.5], ProfileLabel::Am).unwrap();
        assert!((p.pd[0] - p.pd[1]).abs() < 1e-8);
        assert!((p.pd[2] - p.pd[3]).abs() < 1e-8);
    }

    #[test]
    fn surface_layer_absorbs_most() {
        let b = layer_absorption(&default_skin(), 1.0, 30e9).unwrap();
        assert!(b.fractions(1.0)[0] >= 0.85, "{b:?}");
        let total: f64 = b.absorbed.iter().sum::<f64>() + b.exit;
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_pd_gives_zero_sar() {
        let p = ExposureProfile {
            depths_mm: depth_grid(1.0, 0.1),
            pd: vec![0.3; 11],
            sar: vec![],
            label: ProfileLabel::Am,
        };
        let s = sar_depth_profile(&p, &default_skin()).unwrap();
        assert!(s.sar.iter().all(|&v| v.abs() < 1e-9));
        let short = ExposureProfile { depths_mm: vec![0.0], pd: vec![1.0], ..p };
        assert!(sar_depth_profile(&short, &default_skin()).is_err());
    }

    #[test]
    fn exponential_sar_matches_analytic_derivative() {
        // oracle: d/dz [P0 e^{-2z/δ}] = -(2/δ) PD, so SAR = 2·PD/(δ·ρ)
        let lossy = DielectricParams {
            model: RelaxationModel::Debye,
            eps_inf: 4.0,
            poles: vec![Pole { delta_eps: 30.0, tau: 7e-12, alpha: 0.0 }],
            sigma: 1.0,
        };
        let rho = 1050.0;
        let skin = vec![TissueLayer::new("slab", f64::INFINITY, rho, lossy.clone()).unwrap()];
        let delta_m = penetration_depth(&lossy, 30e9).unwrap();
        let z = depth_grid(1.0, 0.001);
        let p = pd_depth_profile(&skin, 0.5, 30e9, &z, ProfileLabel::Am).unwrap();
        let s = sar_depth_profile(&p, &skin).unwrap();
        for (pd, sar) in p.pd.iter().zip(&s.sar) {
            let exact = 2.0 * pd * W_M2_PER_MW_CM2 / (delta_m * rho);
            assert!((sar - exact).abs() <= 1e-5 * exact, "{sar} vs {exact}");
        }
    }

    #[test]
    fn integrated_sar_recovers_absorbed_power() {
        let skin = default_skin();
        let z = depth_grid(1.0, 0.001);
        let p = pd_depth_profile(&skin, 0.5, 30e9, &z, ProfileLabel::Am).unwrap();
        let s = sar_depth_profile(&p, &skin).unwrap();
        // trapezoid of ρ·SAR [W/m³] over depth [m] → W/m², then to mW/cm²
        let integral: f64 = (1..z.len())
            .map(|i| {
                let f = |k: usize| skin[locate(&skin, z[k]).0].density * s.sar[k];
                0.5 * (f(i) + f(i - 1)) * (z[i] - z[i - 1]) * 1e-3
            })
            .sum::<f64>()
            / W_M2_PER_MW_CM2;
        let absorbed = p.pd[0] - p.pd[z.len() - 1];
        assert!((integral - absorbed).abs() <= 0.01 * absorbed);
    }

    #[test]
    fn table4_report() {
        let t = data::table4();
        let r = comparative_report(&profiles_from_table(&t), 0.4).unwrap();
        let get = |l: ProfileLabel| r.reductions.iter().find(|x| x.0 == l).unwrap().1;
        assert!((get(ProfileLabel::Am) - 50.0).abs() < 1e-9);
        assert!((get(ProfileLabel::AlekseevRef) - 31.25).abs() < 1e-9);
        assert!((get(ProfileLabel::ChahatRef) - 6.0 / 17.0 * 100.0).abs() < 1e-9);

        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), data::TABLE4_CSV);
    }

    #[test]
    fn report_rejects_mismatched_grids() {
        let mut ps = profiles_from_table(&data::table4());
        assert!(comparative_report(&ps, 0.5).is_err());
        ps[0].depths_mm[1] = 0.25;
        assert!(comparative_report(&ps, 0.4).is_err());
    }

    #[test]
    fn identical_profiles_give_zero_reduction() {
        let mut ps = profiles_from_table(&data::table4());
        let tr = ps[3].pd.clone();
        ps[2].pd = tr;
        let r = comparative_report(&ps, 0.4).unwrap();
        assert_eq!(r.reductions.iter().find(|x| x.0 == ProfileLabel::Am).unwrap().1, 0.0);
    }

    proptest! {
        #[test]
        fn attenuation_is_monotone_and_mode_ordered(inc in 1e-6f64..10.0, ratio in 0.01f64..0.99) {
            let skin = default_skin();
            let z = depth_grid(3.0, 0.05);
            let am = pd_depth_profile(&skin, inc, 30e9, &z, ProfileLabel::Am).unwrap();
            let tr = pd_depth_profile(&skin, inc * ratio, 30e9, &z, ProfileLabel::Tr).unwrap();
            prop_assert!(am.pd.windows(2).all(|w| w[1] < w[0]));
            let sa = sar_depth_profile(&am, &skin).unwrap();
            let st = sar_depth_profile(&tr, &skin).unwrap();
            prop_assert!(sa.sar.iter().zip(&st.sar).all(|(a, t)| t < a));
            prop_assert!(sa.sar.iter().all(|&s| s >= 0.0));
        }

        #[test]
        fn layer_budget_conserves(inc in 1e-6f64..10.0, t1 in 0.1f64..3.0, t2 in 0.1f64..5.0, f in 1e9f64..1e11) {
            let skin = vec![
                TissueLayer::new("a", t1, 1100.0, DielectricParams::skin_cole_cole()).unwrap(),
                TissueLayer::new("b", t2, 900.0, DielectricParams::fat()).unwrap(),
            ];
            let b = layer_absorption(&skin, inc, f).unwrap();
            let total: f64 = b.absorbed.iter().sum::<f64>() + b.exit;
            prop_assert!((total - inc).abs() <= 1e-9 * inc);
        }
    }
}
