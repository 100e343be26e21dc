//! Explicit finite-difference Pennes bioheat solver.
//!
//! The unknown is the elevation over blood temperature, `u = T − T_bl`, so
//! perfusion is a pure decay term. One step on a cell of spacing `δ` is
//!
//! ```text
//! u' = u − (δt·b/(ρC))·u + (δt·k/(ρC·δ²))·(Σ₆ u_nb − 6u) + (δt/C)·SAR
//! ```
//!
//! Boundary neighbours come from ghost cells: periodic wrap, or the
//! convective condition `k·∂u/∂n = −h·(u − u_am)` eliminated to first order.
//! `h = 0` is the insulated wall.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exposure::{sar_am, sar_tr, SarAmVariant};

/// Temperature elevation that counts as a perceptible warm sensation [K].
pub const WARM_SENSATION_K: f64 = 0.1;

/// Bulk material constants of one tissue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TissueProps {
    /// [kg/m³]
    pub density: f64,
    /// [J/(kg·K)]
    pub heat_capacity: f64,
    /// [W/(m·K)]
    pub conductivity: f64,
    /// [W/(m³·K)]
    pub perfusion: f64,
}

impl Default for TissueProps {
    fn default() -> Self {
        Self {
            density: 1109.0,
            heat_capacity: 3391.0,
            conductivity: 0.37,
            perfusion: 9100.0,
        }
    }
}

impl TissueProps {
    fn validate(&self) -> Result<()> {
        let pos = |name, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("must be > 0, got {v}")))
            }
        };
        pos("density", self.density)?;
        pos("heat_capacity", self.heat_capacity)?;
        pos("conductivity", self.conductivity)?;
        if !(self.perfusion >= 0.0) || !self.perfusion.is_finite() {
            return Err(invalid("perfusion", "must be >= 0"));
        }
        Ok(())
    }
}

/// Cell fields on a uniform Cartesian grid, x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct TissueGrid {
    dims: [usize; 3],
    spacing: f64,
    pub density: Vec<f64>,
    pub heat_capacity: Vec<f64>,
    pub conductivity: Vec<f64>,
    pub perfusion: Vec<f64>,
    /// [W/kg]
    pub sar: Vec<f64>,
    /// Relative deposition weights used to spread a point SAR over the grid.
    pub deposition: Vec<f64>,
}

impl TissueGrid {
    pub fn uniform(dims: [usize; 3], spacing: f64, props: TissueProps) -> Result<Self> {
        if dims.iter().any(|&d| d < 2) {
            return Err(invalid("dims", format!("need at least 2 cells per axis, got {dims:?}")));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(invalid("spacing", "must be > 0"));
        }
        props.validate()?;
        let n = dims.iter().product();
        Ok(Self {
            dims,
            spacing,
            density: vec![props.density; n],
            heat_capacity: vec![props.heat_capacity; n],
            conductivity: vec![props.conductivity; n],
            perfusion: vec![props.perfusion; n],
            sar: vec![0.0; n],
            deposition: vec![1.0; n],
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.density.len()
    }

    pub fn is_empty(&self) -> bool {
        self.density.is_empty()
    }

    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dims.iter().product::<usize>();
        let fields = [
            ("density", &self.density),
            ("heat_capacity", &self.heat_capacity),
            ("conductivity", &self.conductivity),
            ("perfusion", &self.perfusion),
            ("sar", &self.sar),
            ("deposition", &self.deposition),
        ];
        for (name, f) in fields {
            if f.len() != n {
                return Err(invalid(name, format!("expected {n} cells, got {}", f.len())));
            }
            let strict = matches!(name, "density" | "heat_capacity" | "conductivity");
            let ok = f
                .iter()
                .all(|&v| v.is_finite() && if strict { v > 0.0 } else { v >= 0.0 });
            if !ok {
                return Err(invalid(name, "non-finite or out-of-range cell value"));
            }
        }
        Ok(())
    }

    pub fn with_uniform_sar(mut self, sar: f64) -> Self {
        self.sar.iter_mut().for_each(|s| *s = sar);
        self
    }

    /// Weights `exp(-2z/δ_p)` along z for a field entering at the `z = 0` face.
    pub fn with_depth_deposition(mut self, penetration_depth: f64) -> Self {
        let [nx, ny, nz] = self.dims;
        for z in 0..nz {
            let w = (-2.0 * (z as f64 + 0.5) * self.spacing / penetration_depth).exp();
            for y in 0..ny {
                for x in 0..nx {
                    let i = x + nx * (y + ny * z);
                    self.deposition[i] = w;
                }
            }
        }
        self
    }

    /// Material constants if every cell agrees, else `None`.
    pub fn uniform_props(&self) -> Option<TissueProps> {
        let same = |f: &[f64]| f.iter().all(|&v| v == f[0]);
        (same(&self.density) && same(&self.heat_capacity) && same(&self.conductivity) && same(&self.perfusion))
            .then(|| TissueProps {
                density: self.density[0],
                heat_capacity: self.heat_capacity[0],
                conductivity: self.conductivity[0],
                perfusion: self.perfusion[0],
            })
    }
}

/// Serializable grid description for scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub dims: [usize; 3],
    /// [m]
    pub spacing: f64,
    #[serde(flatten)]
    pub props: TissueProps,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            dims: [40, 40, 40],
            spacing: 1e-4,
            props: TissueProps::default(),
        }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<TissueGrid> {
        TissueGrid::uniform(self.dims, self.spacing, self.props)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureField {
    pub dims: [usize; 3],
    /// Elevation over blood temperature [K].
    pub u: Vec<f64>,
    pub iteration: u64,
}

impl TemperatureField {
    pub fn zeros(dims: [usize; 3]) -> Self {
        Self {
            dims,
            u: vec![0.0; dims.iter().product()],
            iteration: 0,
        }
    }

    pub fn from_fn(dims: [usize; 3], mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut u = Vec::with_capacity(dims.iter().product());
        for z in 0..dims[2] {
            for y in 0..dims[1] {
                for x in 0..dims[0] {
                    u.push(f(x, y, z));
                }
            }
        }
        Self { dims, u, iteration: 0 }
    }

    pub fn max_abs(&self) -> f64 {
        self.u.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn peak(&self) -> f64 {
        self.u.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.u.iter().sum::<f64>() / self.u.len() as f64
    }

    /// `Σ ρ·C·u·δ³` [J].
    pub fn heat_content(&self, grid: &TissueGrid) -> f64 {
        let v = grid.spacing.powi(3);
        self.u
            .iter()
            .zip(grid.density.iter().zip(&grid.heat_capacity))
            .map(|(u, (r, c))| r * c * u * v)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Ghost cells wrap around; used for Fourier analysis.
    Periodic,
    #[default]
    Convective,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// [s]
    pub dt: f64,
    /// [s]
    pub total_time: f64,
    /// Surface heat-transfer coefficient [W/(m²·K)].
    pub boundary_h: f64,
    /// [K]
    pub ambient_temp: f64,
    /// [K]
    pub blood_temp: f64,
    pub boundary: Boundary,
    /// Skip the stability guard. Only meant for divergence experiments.
    pub unstable_ok: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            total_time: 10.0,
            boundary_h: 10.0,
            ambient_temp: 310.15,
            blood_temp: 310.15,
            boundary: Boundary::Convective,
            unstable_ok: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(invalid("dt", "must be > 0"));
        }
        if !(self.total_time > 0.0) || !self.total_time.is_finite() {
            return Err(invalid("total_time", "must be > 0"));
        }
        if !(self.boundary_h >= 0.0) {
            return Err(invalid("boundary_h", "must be >= 0"));
        }
        if !self.ambient_temp.is_finite() || !self.blood_temp.is_finite() {
            return Err(invalid("ambient_temp", "temperatures must be finite"));
        }
        Ok(())
    }

    /// Number of steps covering `total_time`; must be a whole number.
    pub fn n_steps(&self) -> Result<u64> {
        self.validate()?;
        let n = self.total_time / self.dt;
        let r = n.round();
        if r < 1.0 || (n - r).abs() > 1e-9 * r.max(1.0) {
            return Err(invalid(
                "total_time",
                format!("total_time/dt = {n} is not a positive integer"),
            ));
        }
        Ok(r as u64)
    }

    fn ambient_elevation(&self) -> f64 {
        self.ambient_temp - self.blood_temp
    }
}

/// Largest stable time step, `min 2ρCδ²/(12k + bδ²)` over cells.
pub fn stability_limit(grid: &TissueGrid) -> f64 {
    let d2 = grid.spacing * grid.spacing;
    (0..grid.len())
        .map(|i| {
            2.0 * grid.density[i] * grid.heat_capacity[i] * d2
                / (12.0 * grid.conductivity[i] + grid.perfusion[i] * d2)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Field padded with one ghost layer on each face, x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GhostedField {
    pub dims: [usize; 3],
    pub data: Vec<f64>,
}

impl GhostedField {
    fn padded(&self) -> [usize; 3] {
        [self.dims[0] + 2, self.dims[1] + 2, self.dims[2] + 2]
    }

    /// Value at padded coordinates; interior cell `(x, y, z)` lives at `(x+1, y+1, z+1)`.
    pub fn at(&self, x: usize, y: usize, z: usize) -> f64 {
        let [px, py, _] = self.padded();
        self.data[x + px * (y + py * z)]
    }
}

pub fn apply_boundary(field: &TemperatureField, grid: &TissueGrid, config: &SolverConfig) -> GhostedField {
    let [nx, ny, nz] = field.dims;
    let (px, py, pz) = (nx + 2, ny + 2, nz + 2);
    let mut data = vec![0.0; px * py * pz];
    let pi = |x: usize, y: usize, z: usize| x + px * (y + py * z);
    let ci = |x: usize, y: usize, z: usize| x + nx * (y + ny * z);

    for z in 0..nz {
        for y in 0..ny {
            let src = ci(0, y, z);
            let dst = pi(1, y + 1, z + 1);
            data[dst..dst + nx].copy_from_slice(&field.u[src..src + nx]);
        }
    }

    let u_am = config.ambient_elevation();
    let h = config.boundary_h;
    let d = grid.spacing;
    // ghost value given the adjacent boundary cell and the wrap-around cell
    let ghost = |b: usize, wrap: usize| -> f64 {
        match config.boundary {
            Boundary::Periodic => field.u[wrap],
            Boundary::Convective => {
                let ub = field.u[b];
                ub - d * h / grid.conductivity[b] * (ub - u_am)
            }
        }
    };

    for z in 0..nz {
        for y in 0..ny {
            data[pi(0, y + 1, z + 1)] = ghost(ci(0, y, z), ci(nx - 1, y, z));
            data[pi(nx + 1, y + 1, z + 1)] = ghost(ci(nx - 1, y, z), ci(0, y, z));
        }
    }
    for z in 0..nz {
        for x in 0..nx {
            data[pi(x + 1, 0, z + 1)] = ghost(ci(x, 0, z), ci(x, ny - 1, z));
            data[pi(x + 1, ny + 1, z + 1)] = ghost(ci(x, ny - 1, z), ci(x, 0, z));
        }
    }
    for y in 0..ny {
        for x in 0..nx {
            data[pi(x + 1, y + 1, 0)] = ghost(ci(x, y, 0), ci(x, y, nz - 1));
            data[pi(x + 1, y + 1, nz + 1)] = ghost(ci(x, y, nz - 1), ci(x, y, 0));
        }
    }
    GhostedField { dims: field.dims, data }
}

fn check_shapes(field: &TemperatureField, grid: &TissueGrid) -> Result<()> {
    if field.dims != grid.dims || field.u.len() != grid.len() {
        return Err(invalid("field", "dimensions differ from the grid"));
    }
    Ok(())
}

fn guard(grid: &TissueGrid, config: &SolverConfig) -> Result<()> {
    config.validate()?;
    let limit = stability_limit(grid);
    if config.dt > limit && !config.unstable_ok {
        return Err(Error::Unstable { dt: config.dt, limit });
    }
    Ok(())
}

/// Advances one time step.
pub fn step(field: &TemperatureField, grid: &TissueGrid, config: &SolverConfig) -> Result<TemperatureField> {
    check_shapes(field, grid)?;
    guard(grid, config)?;
    Ok(step_unchecked(field, grid, config))
}

fn update_plane(out: &mut [f64], z: usize, g: &GhostedField, grid: &TissueGrid, dt: f64) {
    let [nx, ny, _] = grid.dims;
    let (px, py) = (nx + 2, ny + 2);
    let d2 = grid.spacing * grid.spacing;
    let plane = px * py;
    for y in 0..ny {
        for x in 0..nx {
            let c = grid.index(x, y, z);
            let p = (x + 1) + px * ((y + 1) + py * (z + 1));
            let u = g.data[p];
            let lap = g.data[p - 1] + g.data[p + 1] + g.data[p - px] + g.data[p + px] + g.data[p - plane]
                + g.data[p + plane]
                - 6.0 * u;
            let rc = grid.density[c] * grid.heat_capacity[c];
            out[x + nx * y] = u - dt * grid.perfusion[c] * u / rc
                + dt * grid.conductivity[c] / (rc * d2) * lap
                + dt * grid.sar[c] / grid.heat_capacity[c];
        }
    }
}

fn step_unchecked(field: &TemperatureField, grid: &TissueGrid, config: &SolverConfig) -> TemperatureField {
    let g = apply_boundary(field, grid, config);
    let plane = grid.dims[0] * grid.dims[1];
    let mut u = vec![0.0; field.u.len()];

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        u.par_chunks_mut(plane)
            .enumerate()
            .for_each(|(z, out)| update_plane(out, z, &g, grid, config.dt));
    }
    #[cfg(not(feature = "parallel"))]
    for (z, out) in u.chunks_mut(plane).enumerate() {
        update_plane(out, z, &g, grid, config.dt);
    }

    TemperatureField {
        dims: field.dims,
        u,
        iteration: field.iteration + 1,
    }
}

/// Runs `n` steps from `field`, checking stability once.
pub fn evolve(field: TemperatureField, grid: &TissueGrid, config: &SolverConfig, n: u64) -> Result<TemperatureField> {
    check_shapes(&field, grid)?;
    guard(grid, config)?;
    let mut f = field;
    for _ in 0..n {
        f = step_unchecked(&f, grid, config);
    }
    Ok(f)
}

/// Radiated power driving the SAR source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IncidentPower {
    Active { p_total: f64, p_dl: f64, variant: SarAmVariant },
    Thermal { p_dl: f64 },
}

impl IncidentPower {
    pub fn sar(&self, mass: f64) -> Result<f64> {
        match *self {
            IncidentPower::Active { p_total, p_dl, variant } => sar_am(p_total, p_dl, mass, variant),
            IncidentPower::Thermal { p_dl } => sar_tr(p_dl, mass),
        }
    }
}

/// Solves from `u ≡ 0` over `total_time` with SAR = deposition × P/mass.
pub fn solve(grid: &TissueGrid, config: &SolverConfig, incident: IncidentPower, mass: f64) -> Result<TemperatureField> {
    let s = incident.sar(mass)?;
    let mut g = grid.clone();
    g.sar = grid.deposition.iter().map(|w| w * s).collect();
    g.validate()?;
    solve_from(TemperatureField::zeros(grid.dims), &g, config)
}

/// Solves from an initial field with the grid's own SAR field.
pub fn solve_from(field: TemperatureField, grid: &TissueGrid, config: &SolverConfig) -> Result<TemperatureField> {
    let n = config.n_steps()?;
    evolve(field, grid, config, n)
}

/// Amplification factor of Fourier mode `(λ, μ, γ)` on a uniform grid.
pub fn fourier_amplification(mode: [i64; 3], grid: &TissueGrid, config: &SolverConfig) -> Result<f64> {
    let p = grid
        .uniform_props()
        .ok_or_else(|| invalid("grid", "Fourier analysis needs uniform material"))?;
    let rc = p.density * p.heat_capacity;
    let s: f64 = mode
        .iter()
        .zip(grid.dims)
        .map(|(&m, n)| (PI * m as f64 / n as f64).sin().powi(2))
        .sum();
    Ok(1.0 - config.dt * p.perfusion / rc - 4.0 * config.dt * p.conductivity / (rc * grid.spacing.powi(2)) * s)
}

/// Largest `|w|` over every resolvable mode of the grid.
pub fn max_amplification(grid: &TissueGrid, config: &SolverConfig) -> Result<f64> {
    let [nx, ny, nz] = grid.dims;
    let mut worst: f64 = 0.0;
    for l in 0..nx as i64 {
        for m in 0..ny as i64 {
            for g in 0..nz as i64 {
                worst = worst.max(fourier_amplification([l, m, g], grid, config)?.abs());
            }
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemperatureSummary {
    /// [K] elevation
    pub peak: f64,
    pub mean: f64,
    pub min: f64,
    /// Absolute peak temperature [K].
    pub peak_abs: f64,
    pub warm_sensation: bool,
    pub steps: u64,
}

pub fn summary(field: &TemperatureField, config: &SolverConfig) -> TemperatureSummary {
    let peak = field.peak();
    TemperatureSummary {
        peak,
        mean: field.mean(),
        min: field.u.iter().copied().fold(f64::INFINITY, f64::min),
        peak_abs: peak + config.blood_temp,
        warm_sensation: peak >= WARM_SENSATION_K,
        steps: field.iteration,
    }
}

/// Writes the `z`-plane as `x,y,z,u` rows with coordinates in millimetres.
pub fn write_slice_csv<W: Write>(field: &TemperatureField, spacing: f64, z: usize, mut out: W) -> Result<()> {
    let [nx, ny, nz] = field.dims;
    if z >= nz {
        return Err(invalid("z", format!("slice {z} outside 0..{nz}")));
    }
    let fmt = crate::format::sig9;
    writeln!(out, "x,y,z,u")?;
    let mm = spacing * 1e3;
    for y in 0..ny {
        for x in 0..nx {
            let u = field.u[x + nx * (y + ny * z)];
            writeln!(
                out,
                "{},{},{},{}",
                fmt(x as f64 * mm),
                fmt(y as f64 * mm),
                fmt(z as f64 * mm),
                fmt(u)
            )?;
        }
    }
    Ok(())
}

/// Visualization template `cos^n(el)·((1 + cos az)/2)^m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PatternTemplate {
    pub elevation_exponent: i32,
    pub azimuth_exponent: i32,
    pub azimuth_step_deg: f64,
    pub elevation_step_deg: f64,
}

impl Default for PatternTemplate {
    fn default() -> Self {
        Self {
            elevation_exponent: 2,
            azimuth_exponent: 1,
            azimuth_step_deg: 15.0,
            elevation_step_deg: 15.0,
        }
    }
}

impl PatternTemplate {
    pub fn gain(&self, az_deg: f64, el_deg: f64) -> f64 {
        let el = el_deg.to_radians().cos().max(0.0).powi(self.elevation_exponent);
        let az = ((1.0 + az_deg.to_radians().cos()) / 2.0).powi(self.azimuth_exponent);
        el * az
    }
}

/// Rows `(azimuth, elevation, am, tr)`, scaling the template by each peak.
pub fn radiation_pattern(template: &PatternTemplate, peak_am: f64, peak_tr: f64) -> Result<Vec<[f64; 4]>> {
    if !(template.azimuth_step_deg > 0.0) || !(template.elevation_step_deg > 0.0) {
        return Err(invalid("pattern", "angle steps must be > 0"));
    }
    let n_az = (360.0 / template.azimuth_step_deg).round() as usize;
    let n_el = (180.0 / template.elevation_step_deg).round() as usize;
    let mut rows = Vec::with_capacity(n_az * (n_el + 1));
    for i in 0..n_az {
        let az = -180.0 + i as f64 * template.azimuth_step_deg;
        for j in 0..=n_el {
            let el = -90.0 + j as f64 * template.elevation_step_deg;
            let g = template.gain(az, el);
            rows.push([az, el, g * peak_am, g * peak_tr]);
        }
    }
    Ok(rows)
}

pub fn write_pattern_csv<W: Write>(rows: &[[f64; 4]], mut out: W) -> std::io::Result<()> {
    writeln!(out, "azimuth_deg,elevation_deg,am_peak_k,tr_peak_k")?;
    for r in rows {
        let s: Vec<String> = r.iter().map(|v| crate::format::sig9(*v)).collect();
        writeln!(out, "{}", s.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn props(rho_c: f64, k: f64, b: f64) -> TissueProps {
        TissueProps { density: 1.0, heat_capacity: rho_c, conductivity: k, perfusion: b }
    }

    fn insulated(dt: f64) -> SolverConfig {
        SolverConfig { dt, total_time: dt, boundary_h: 0.0, ..SolverConfig::default() }
    }

    fn periodic(dt: f64) -> SolverConfig {
        SolverConfig { boundary: Boundary::Periodic, ..insulated(dt) }
    }

    fn random_field(dims: [usize; 3], seed: u64) -> TemperatureField {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        TemperatureField::from_fn(dims, |_, _, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn stability_limit_examples() {
        let g = TissueGrid::uniform([3, 3, 3], 1.0, props(2.0, 1.0, 0.0)).unwrap();
        assert!((stability_limit(&g) - 1.0 / 3.0).abs() < 1e-15);
        let hot = TissueGrid::uniform([3, 3, 3], 1.0, props(2.0, 1.0, 1e12)).unwrap();
        assert!(stability_limit(&hot) < 1e-11);
    }

    #[test]
    fn heterogeneous_limit_is_cell_minimum() {
        let mut g = TissueGrid::uniform([4, 3, 2], 1e-3, TissueProps::default()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for i in 0..g.len() {
            g.conductivity[i] = rng.random_range(0.1..1.0);
            g.perfusion[i] = rng.random_range(0.0..2e4);
        }
        let d2 = 1e-6;
        let mut expect = f64::INFINITY;
        for i in 0..g.len() {
            let l = 2.0 * g.density[i] * g.heat_capacity[i] * d2 / (12.0 * g.conductivity[i] + g.perfusion[i] * d2);
            expect = expect.min(l);
        }
        assert_eq!(stability_limit(&g), expect);
    }

    #[test]
    fn rejects_unstable_step() {
        let g = TissueGrid::uniform([3, 3, 3], 1.0, props(2.0, 1.0, 0.0)).unwrap();
        let f = TemperatureField::zeros([3, 3, 3]);
        assert!(matches!(step(&f, &g, &insulated(0.34)), Err(Error::Unstable { .. })));
        let ok = SolverConfig { unstable_ok: true, ..insulated(0.34) };
        assert!(step(&f, &g, &ok).is_ok());
        assert!(TissueGrid::uniform([1, 3, 3], 1.0, TissueProps::default()).is_err());
    }

    #[test]
    fn constant_field_is_stationary_when_insulated() {
        let g = TissueGrid::uniform([4, 4, 4], 1.0, props(2.0, 1.0, 0.0)).unwrap();
        let f = TemperatureField::from_fn([4, 4, 4], |_, _, _| 0.7);
        let next = step(&f, &g, &insulated(0.3)).unwrap();
        assert!(next.u.iter().all(|&u| (u - 0.7).abs() < 1e-15));
        assert_eq!(next.iteration, 1);
    }

    #[test]
    fn source_only_step() {
        let tissue = TissueProps { perfusion: 0.0, ..TissueProps::default() };
        let g = TissueGrid::uniform([4, 4, 4], 1e-3, tissue).unwrap()
            .with_uniform_sar(5.0);
        let c = SolverConfig { dt: 0.01, ..SolverConfig::default() };
        let next = step(&TemperatureField::zeros([4, 4, 4]), &g, &c).unwrap();
        for u in next.u {
            assert!((u - 0.01 * 5.0 / 3391.0).abs() < 1e-18);
        }
    }

    #[test]
    fn ambient_equilibrium_is_stationary() {
        let g = TissueGrid::uniform([4, 4, 4], 1e-3, props(3e6, 0.4, 0.0)).unwrap();
        let c = SolverConfig { dt: 0.5, boundary_h: 50.0, ambient_temp: 305.0, blood_temp: 310.0, ..SolverConfig::default() };
        let f = TemperatureField::from_fn([4, 4, 4], |_, _, _| -5.0);
        let next = step(&f, &g, &c).unwrap();
        assert!(next.u.iter().all(|&u| (u + 5.0).abs() < 1e-14));
    }

    #[test]
    fn insulated_boundary_has_zero_gradient() {
        let f = random_field([3, 4, 5], 9);
        let g = TissueGrid::uniform([3, 4, 5], 1.0, TissueProps::default()).unwrap();
        let gh = apply_boundary(&f, &g, &insulated(1.0));
        for z in 0..5 {
            for y in 0..4 {
                assert_eq!(gh.at(0, y + 1, z + 1), gh.at(1, y + 1, z + 1));
                assert_eq!(gh.at(4, y + 1, z + 1), gh.at(3, y + 1, z + 1));
            }
        }
    }

    #[test]
    fn convective_cooling_is_monotone() {
        let g = TissueGrid::uniform([6, 6, 6], 1e-3, props(3.76e6, 0.37, 0.0)).unwrap();
        let c = SolverConfig { dt: 1.0, boundary_h: 200.0, ambient_temp: 300.0, blood_temp: 310.0, ..SolverConfig::default() };
        let mut f = TemperatureField::zeros([6, 6, 6]);
        let mut prev = f.u[0];
        for _ in 0..200 {
            f = step(&f, &g, &c).unwrap();
            assert!(f.u[0] < prev);
            prev = f.u[0];
        }
    }

    #[test]
    fn single_hot_cell_conserves_heat() {
        let g = TissueGrid::uniform([5, 5, 5], 1e-3, props(3.76e6, 0.37, 0.0)).unwrap();
        let c = insulated(stability_limit(&g));
        let mut f = TemperatureField::zeros([5, 5, 5]);
        f.u[g.index(2, 2, 2)] = 1.0;
        let q0 = f.heat_content(&g);
        for _ in 0..1000 {
            f = step(&f, &g, &c).unwrap();
        }
        assert!((f.heat_content(&g) - q0).abs() <= 1e-9 * q0);
    }

    #[test]
    fn fourier_examples() {
        let g = TissueGrid::uniform([8, 8, 8], 1.0, props(2.0, 1.0, 0.0)).unwrap();
        let lim = stability_limit(&g);
        assert_eq!(fourier_amplification([0, 0, 0], &g, &periodic(lim)).unwrap(), 1.0);
        assert!(max_amplification(&g, &periodic(lim)).unwrap() <= 1.0 + 1e-12);
        assert!(max_amplification(&g, &periodic(1.5 * lim)).unwrap() > 1.0);
        let mut het = g.clone();
        het.conductivity[0] = 2.0;
        assert!(fourier_amplification([1, 0, 0], &het, &periodic(lim)).is_err());
    }

    #[test]
    fn fourier_mode_is_an_eigenvector() {
        let dims = [8, 8, 8];
        let g = TissueGrid::uniform(dims, 1e-3, props(3.76e6, 0.37, 9100.0)).unwrap();
        let c = periodic(0.9 * stability_limit(&g));
        for mode in [[1, 0, 0], [2, 3, 1], [4, 4, 4], [3, 1, 2]] {
            let w = fourier_amplification(mode, &g, &c).unwrap();
            let mut f = TemperatureField::from_fn(dims, |x, y, z| {
                let th = 2.0 * PI * (mode[0] as f64 * x as f64 + mode[1] as f64 * y as f64 + mode[2] as f64 * z as f64) / 8.0;
                th.cos()
            });
            for _ in 0..20 {
                let next = step(&f, &g, &c).unwrap();
                for (a, b) in next.u.iter().zip(&f.u) {
                    assert!((a - w * b).abs() <= 1e-10 * f.max_abs(), "{mode:?}");
                }
                // continue from the exact mode so rounding does not seed other modes
                f.u.iter_mut().for_each(|v| *v *= w);
                f.iteration += 1;
            }
        }
    }

    #[test]
    fn zero_source_relaxes() {
        let g = TissueGrid::uniform([6, 6, 6], 1e-3, TissueProps::default()).unwrap();
        let lim = stability_limit(&g);
        let dt = lim * 0.5;
        let n = (8000.0 / dt).ceil();
        let c = SolverConfig { dt, total_time: dt * n, ..SolverConfig::default() };
        let f = solve_from(TemperatureField::from_fn([6, 6, 6], |_, _, _| 1.0), &g, &c).unwrap();
        assert!(f.max_abs() < 1e-6);
    }

    #[test]
    fn tr_source_heats_less() {
        let g = TissueGrid::uniform([5, 5, 5], 1e-3, TissueProps::default()).unwrap();
        let c = SolverConfig { dt: 1.0, total_time: 50.0, ..SolverConfig::default() };
        let am = solve(&g, &c, IncidentPower::Active { p_total: 1.0, p_dl: 0.0, variant: SarAmVariant::Total }, 0.01).unwrap();
        let tr = solve(&g, &c, IncidentPower::Thermal { p_dl: 0.5 }, 0.01).unwrap();
        assert!(tr.peak() < am.peak());
        assert!((tr.peak() / am.peak() - 0.5).abs() < 1e-12);
        let s = summary(&am, &c);
        assert_eq!(s.steps, 50);
        assert!((s.peak_abs - s.peak - 310.15).abs() < 1e-9);
    }

    #[test]
    fn warm_flag_threshold() {
        let c = SolverConfig::default();
        let f = TemperatureField::from_fn([2, 2, 2], |x, _, _| if x == 0 { 0.1 } else { 0.0 });
        assert!(summary(&f, &c).warm_sensation);
        let cool = TemperatureField::from_fn([2, 2, 2], |_, _, _| 0.099);
        assert!(!summary(&cool, &c).warm_sensation);
    }

    #[test]
    fn step_count_must_be_integral() {
        let c = SolverConfig { dt: 0.3, total_time: 1.0, ..SolverConfig::default() };
        assert!(c.n_steps().is_err());
        assert_eq!(SolverConfig::default().n_steps().unwrap(), 1000);
    }

    #[test]
    fn slice_and_pattern_csv() {
        let f = TemperatureField::from_fn([2, 2, 2], |x, y, z| (x + 2 * y + 4 * z) as f64);
        let mut buf = Vec::new();
        write_slice_csv(&f, 1e-4, 1, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().count(), 5);
        assert!(s.starts_with("x,y,z,u\n"));
        assert!(write_slice_csv(&f, 1e-4, 2, Vec::new()).is_err());

        let rows = radiation_pattern(&PatternTemplate::default(), 2.0, 1.0).unwrap();
        assert_eq!(rows.len(), 24 * 13);
        assert!(rows.iter().all(|r| r[3] <= r[2]));
        let peak = rows.iter().find(|r| r[0] == 0.0 && r[1] == 0.0).unwrap();
        assert_eq!(peak[2], 2.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn superposition(seed in any::<u64>(), a in -3.0f64..3.0) {
            let dims = [5, 4, 3];
            let base = TissueGrid::uniform(dims, 1e-3, TissueProps::default()).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let s1: Vec<f64> = (0..base.len()).map(|_| rng.random_range(0.0..10.0)).collect();
            let s2: Vec<f64> = (0..base.len()).map(|_| rng.random_range(0.0..10.0)).collect();
            let c = SolverConfig { dt: 0.5, total_time: 20.0, ..SolverConfig::default() };
            let run = |s: Vec<f64>| {
                let mut g = base.clone();
                g.sar = s;
                solve_from(TemperatureField::zeros(dims), &g, &c).unwrap()
            };
            let combo: Vec<f64> = s1.iter().zip(&s2).map(|(x, y)| a * x + y).collect();
            let (u1, u2, u12) = (run(s1), run(s2), run(combo));
            let scale = u12.max_abs().max(u1.max_abs()).max(u2.max_abs());
            for i in 0..u12.u.len() {
                prop_assert!((u12.u[i] - (a * u1.u[i] + u2.u[i])).abs() <= 1e-9 * scale);
            }
        }

        #[test]
        fn maximum_principle(seed in any::<u64>(), b in 0.0f64..2e4, frac in 0.1f64..1.0) {
            let dims = [5, 5, 5];
            let g = TissueGrid::uniform(dims, 1e-3, props(3.76e6, 0.37, b)).unwrap();
            // with b > 0 the centre weight is only non-negative below the b = 0 limit
            let d2 = 1e-6;
            let c = insulated(frac * 3.76e6 * d2 / (6.0 * 0.37 + b * d2));
            let mut f = random_field(dims, seed);
            let (mut hi, mut lo) = (f.peak(), f.u.iter().copied().fold(f64::INFINITY, f64::min));
            for _ in 0..50 {
                f = step(&f, &g, &c).unwrap();
                let (h, l) = (f.peak(), f.u.iter().copied().fold(f64::INFINITY, f64::min));
                prop_assert!(h <= hi.max(0.0) + 1e-14 && l >= lo.min(0.0) - 1e-14);
                hi = h;
                lo = l;
            }
        }
    }
}
