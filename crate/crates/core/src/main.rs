use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use trmode::bioheat::{self, IncidentPower, TemperatureField};
use trmode::channel::{self, envelope_ks, sample_channel};
use trmode::data;
use trmode::exposure::{
    default_skin, depth_grid, layer_absorption, pd_depth_profile, sar_depth_profile, write_profiles_csv,
    ProfileLabel, SarAmVariant,
};
use trmode::format::sig9;
use trmode::mode::{d2_decide, classify_signal, DecisionConfig, UeMode};
use trmode::power::{achievable_rate, default_applications, optimum_power};
use trmode::scenario::{self, parse_override, ScenarioConfig};
use trmode::{rng, Error, Result};

/// Thermal-radiation handset mode simulator.
#[derive(Parser)]
#[command(name = "trmode", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a scenario field, e.g. `--set radio.bs_power=10`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Full two-cell Monte Carlo scenario.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        iterations: Option<usize>,
        /// Exit with status 2 when a dominance constraint is violated.
        #[arg(long)]
        strict: bool,
    },
    /// Power-density and SAR depth profiles in layered skin.
    Exposure {
        #[command(flatten)]
        common: Common,
        /// Incident power density with every handset Active [mW/cm²].
        #[arg(long, default_value_t = 0.50)]
        incident_am: f64,
        /// Incident power density in TR mode [mW/cm²].
        #[arg(long, default_value_t = 0.41)]
        incident_tr: f64,
    },
    /// Bioheat solve for Active and TR sources with a stability check.
    Bioheat {
        #[command(flatten)]
        common: Common,
        /// Active-mode radiated power [W].
        #[arg(long, default_value_t = 0.2)]
        p_am: f64,
        /// TR-mode radiated power [W].
        #[arg(long, default_value_t = 0.1)]
        p_tr: f64,
        /// Override the solver time step [s].
        #[arg(long)]
        dt: Option<f64>,
        /// Run past the stability limit (divergence experiments only).
        #[arg(long)]
        unstable_ok: bool,
    },
    /// Reference power-density table and TR reductions.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Alternative table with `depth_mm,<label>...` columns.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Channel diagnostics: envelope KS test and power-delay profile.
    Channel {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 8)]
        taps: usize,
    },
    /// Quick property smoke run.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> Result<ScenarioConfig> {
    let overrides = common.set.iter().map(|s| parse_override(s)).collect::<Result<Vec<_>>>()?;
    let mut cfg = match &common.config {
        Some(p) => ScenarioConfig::load(p, &overrides)?,
        None => ScenarioConfig::with_overrides("", &overrides)?,
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn create(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", dir.display()))))
}

fn write(dir: &Path, name: &str, bytes: Vec<u8>) -> Result<()> {
    let p = dir.join(name);
    fs::write(&p, bytes).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", p.display()))))
}

fn run(common: Common, iterations: Option<usize>, strict: bool) -> Result<ExitCode> {
    let mut cfg = load(&common)?;
    if let Some(n) = iterations {
        cfg.iterations = n;
    }
    cfg.validate()?;
    let r = scenario::run_scenario(&cfg)?;
    scenario::emit_outputs(&r, &common.out)?;

    let net = &r.network;
    println!("iterations        {}", cfg.iterations);
    println!("P_AM   mean [W]   {}", sig9(net.am.mean_total_power()));
    println!("P_mix  mean [W]   {}", sig9(net.mixed.mean_total_power()));
    println!("saved  mean [W]   {}", sig9(net.mixed.mean_power_saved()));
    println!("EE AM  [bit/J]    {}", sig9(net.am.mean_ee()));
    println!("EE mix [bit/J]    {}", sig9(net.mixed.mean_ee()));
    println!("complexity        {} / {}", net.mixed.total_complexity(), net.am.total_complexity());
    let v = r.constraints.violations();
    println!("violations        {v}");
    println!("outputs           {}", common.out.display());
    Ok(if strict && v > 0 { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn exposure(common: Common, incident_am: f64, incident_tr: f64) -> Result<ExitCode> {
    let cfg = load(&common)?;
    let skin = default_skin();
    let z = depth_grid(cfg.exposure.depth_max_mm, cfg.exposure.depth_step_mm);
    let profiles = [(incident_am, ProfileLabel::Am), (incident_tr, ProfileLabel::Tr)]
        .into_iter()
        .map(|(pd, l)| sar_depth_profile(&pd_depth_profile(&skin, pd, cfg.frequency, &z, l)?, &skin))
        .collect::<Result<Vec<_>>>()?;
    create(&common.out)?;
    let mut pd = Vec::new();
    write_profiles_csv(&profiles, false, &mut pd)?;
    write(&common.out, "pd_profile.csv", pd)?;
    let mut sar = Vec::new();
    write_profiles_csv(&profiles, true, &mut sar)?;
    write(&common.out, "sar_profile.csv", sar)?;

    let b = layer_absorption(&skin, 1.0, cfg.frequency)?;
    println!("absorbed fraction at {} GHz:", cfg.frequency / 1e9);
    for (l, a) in skin.iter().zip(&b.absorbed) {
        println!("  {:<18} {:.4}", l.name, a);
    }
    Ok(ExitCode::SUCCESS)
}

fn bioheat_cmd(common: Common, p_am: f64, p_tr: f64, dt: Option<f64>, unstable_ok: bool) -> Result<ExitCode> {
    let cfg = load(&common)?;
    let grid = cfg.bioheat.grid.build()?;
    let mut solver = cfg.bioheat.solver;
    solver.unstable_ok = unstable_ok;
    if let Some(dt) = dt {
        solver.dt = dt;
        solver.total_time = (solver.total_time / dt).round().max(1.0) * dt;
    }
    let limit = bioheat::stability_limit(&grid);
    println!("stability limit   {} s (dt = {} s)", sig9(limit), sig9(solver.dt));

    let mass = cfg.exposure.mass;
    let am = bioheat::solve(
        &grid,
        &solver,
        IncidentPower::Active { p_total: p_am, p_dl: 0.0, variant: SarAmVariant::Printed },
        mass,
    )?;
    let tr = bioheat::solve(&grid, &solver, IncidentPower::Thermal { p_dl: p_tr }, mass)?;
    create(&common.out)?;
    let mut rows = Vec::new();
    for (label, f) in [("am", &am), ("tr", &tr)] {
        let s = bioheat::summary(f, &solver);
        println!(
            "{label:<3} peak {} K  mean {} K  warm={}",
            sig9(s.peak),
            sig9(s.mean),
            u8::from(s.warm_sensation)
        );
        rows.push(format!("{label},{},{},{},{}", sig9(s.peak), sig9(s.mean), sig9(s.peak_abs), u8::from(s.warm_sensation)));
        let mut slice = Vec::new();
        bioheat::write_slice_csv(f, grid.spacing(), 0, &mut slice)?;
        write(&common.out, &format!("temperature_slice_{label}.csv"), slice)?;
    }
    let body = format!("cell,peak_k,mean_k,peak_abs_k,warm_sensation\n{}\n", rows.join("\n"));
    write(&common.out, "temperature_summary.csv", body.into_bytes())?;
    let pattern = bioheat::radiation_pattern(&cfg.bioheat.pattern, am.peak(), tr.peak())?;
    let mut buf = Vec::new();
    bioheat::write_pattern_csv(&pattern, &mut buf)?;
    write(&common.out, "radiation_pattern.csv", buf)?;
    Ok(ExitCode::SUCCESS)
}

fn compare(common: Common, data_path: Option<PathBuf>) -> Result<ExitCode> {
    let table = match data_path {
        Some(p) => data::read_pd_table(fs::File::open(&p)?)?,
        None => data::table4(),
    };
    let report = trmode::exposure::comparative_report(
        &trmode::exposure::profiles_from_table(&table),
        scenario::TABLE4_DEPTH_MM,
    )?;
    print!("{}", report.to_text());
    create(&common.out)?;
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    write(&common.out, "table4_report.csv", buf)?;
    let mut buf = Vec::new();
    report.write_reductions_csv(&mut buf)?;
    write(&common.out, "table4_reduction.csv", buf)?;
    Ok(ExitCode::SUCCESS)
}

fn channel_cmd(common: Common, samples: usize, taps: usize) -> Result<ExitCode> {
    let cfg = load(&common)?;
    let env: Vec<f64> = (0..samples as u64)
        .map(|i| sample_channel(rng::derive_seed(cfg.seed, &[i]), taps, 1.0).map(|c| channel::snapshot(&c, channel::Direction::Downlink).coefficient.norm()))
        .collect::<Result<_>>()?;
    let ks = envelope_ks(&env, 1.0, 0.01)?;
    println!(
        "envelope KS       D = {}  critical = {}  n = {}  {}",
        sig9(ks.statistic),
        sig9(ks.critical),
        ks.samples,
        if ks.passed() { "pass" } else { "FAIL" }
    );
    let t5 = data::table5();
    let monotone = t5.windows(2).all(|w| w[1].gain < w[0].gain);
    println!("reference gains   {} rows, monotone decreasing: {monotone}", t5.len());

    create(&common.out)?;
    let ch = sample_channel(cfg.seed, taps, 1.0)?;
    let mut body = String::from("delay_s,power\n");
    for (d, p) in channel::power_delay_profile(&ch) {
        body.push_str(&format!("{},{}\n", sig9(d), sig9(p)));
    }
    write(&common.out, "power_delay_profile.csv", body.into_bytes())?;
    Ok(if ks.passed() && monotone { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn validate(common: Common) -> Result<ExitCode> {
    let cfg = load(&common)?;
    let mut ok = true;
    let mut report = |name: &str, pass: bool| {
        println!("{} {name}", if pass { "pass" } else { "FAIL" });
        ok &= pass;
    };

    let apps = default_applications(cfg.bandwidth);
    let mut r = rng::stream(cfg.seed, &[1]);
    let worst = (0..1000)
        .map(|_| {
            use rand::Rng;
            let h = 10f64.powf(r.random_range(-14.0..-8.0));
            let a = apps[r.random_range(0..3)];
            let p = optimum_power(&a, h, cfg.noise_var).unwrap();
            (achievable_rate(p, h, cfg.noise_var, a.bandwidth) - a.target_rate).abs() / a.target_rate
        })
        .fold(0.0, f64::max);
    report("shannon round trip", worst <= 1e-9);

    let env: Vec<f64> = (0..20_000u64)
        .map(|i| {
            let c = sample_channel(rng::derive_seed(cfg.seed, &[2, i]), 6, 1.0).unwrap();
            channel::snapshot(&c, channel::Direction::Downlink).coefficient.norm()
        })
        .collect();
    report("rayleigh envelope", envelope_ks(&env, 1.0, 0.01)?.passed());

    let dc = DecisionConfig::default();
    let sweep = (0..=700).all(|i| {
        let ss = -120.0 + i as f64 * 0.1;
        (d2_decide(ss, &dc, UeMode::Active) == UeMode::Thermal) == (ss < dc.ss_threshold)
    });
    report("d2 threshold sweep", sweep);
    let bands = data::operator_profiles()
        .iter()
        .all(|p| trmode::mode::SignalQuality::ALL.iter().all(|&q| classify_signal(p.edge(q), p) == q));
    report("operator bands", bands);

    let g = bioheat::TissueGrid::uniform([6, 6, 6], 1e-3, bioheat::TissueProps { perfusion: 0.0, ..Default::default() })?;
    let solver = bioheat::SolverConfig {
        dt: bioheat::stability_limit(&g),
        boundary: bioheat::Boundary::Periodic,
        ..Default::default()
    };
    let w = bioheat::max_amplification(&g, &solver)?;
    let mut f = TemperatureField::from_fn([6, 6, 6], |x, y, z| ((x * 7 + y * 3 + z) % 5) as f64 - 2.0);
    let m0 = f.max_abs();
    f = bioheat::evolve(f, &g, &solver, 200)?;
    report("von neumann bound", w <= 1.0 + 1e-12 && f.max_abs() <= m0 * (1.0 + 1e-12));

    let budget = layer_absorption(&default_skin(), 1.0, cfg.frequency)?;
    report("surface absorption", budget.absorbed[0] >= 0.85);

    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn exit_code(e: &Error) -> ExitCode {
    match e {
        Error::Unstable { .. } => ExitCode::from(3),
        _ => ExitCode::from(1),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { common, iterations, strict } => run(common, iterations, strict),
        Command::Exposure { common, incident_am, incident_tr } => exposure(common, incident_am, incident_tr),
        Command::Bioheat { common, p_am, p_tr, dt, unstable_ok } => bioheat_cmd(common, p_am, p_tr, dt, unstable_ok),
        Command::Compare { common, data } => compare(common, data),
        Command::Channel { common, samples, taps } => channel_cmd(common, samples, taps),
        Command::Validate { common } => validate(common),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
