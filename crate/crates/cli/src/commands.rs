use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use gyrocal::estimator::Calibration;
use gyrocal::session_io::{parse_csv_scaled, session_from_logs};
use gyrocal::simulator::{Distribution1, GridCell, SegmentRanges};
use gyrocal::{
    auto_segment, calibrate_detailed, load_session, monte_carlo, noise_grid, run_sweep, scale_table_csv,
    simulate_session, speed_table_csv, AccelModel, CalibrationResult, MonteCarloSummary, Quat, RedrawPolicy,
    ScenarioConfig, SessionManifest, SweepConfig, SweepReport, SweepSource, UnitScale, Vec3,
};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::output::{num, stamped_json, Meta, OutDir};
use crate::{CliConfig, CliError, Command, Format, Redraw};

pub const SEED_ENV: &str = "GYROCAL_SEED";

pub fn run(cli: &CliConfig) -> Result<(), CliError> {
    let log = |level: u8, msg: &str| {
        if cli.verbose >= level {
            eprintln!("{msg}");
        }
    };
    let out = match &cli.command {
        Command::Simulate { scenario, seed, out } => simulate(scenario, *seed, out)?,
        Command::Calibrate {
            manifest,
            auto_segment,
            speed,
            unit_scale,
            accel_model,
            out,
        } => {
            let input = match (manifest, auto_segment) {
                (Some(m), _) => CalibrateInput::Manifest(m.clone()),
                (None, Some(log)) => CalibrateInput::Log {
                    path: log.clone(),
                    speed: speed.ok_or_else(|| CliError::Config("--auto-segment needs --speed".into()))?,
                },
                (None, None) => return Err(CliError::Config("give a manifest or --auto-segment LOG".into())),
            };
            calibrate(input, *unit_scale, accel_model.as_deref(), out)?
        }
        Command::Sweep { sweep, seed, out } => self::sweep(sweep, *seed, out, &log)?,
        Command::Montecarlo {
            scenario,
            runs,
            seed,
            redraw,
            sigmas,
            speeds,
            format,
            out,
        } => {
            let grid = sigmas.as_deref().zip(speeds.as_deref());
            montecarlo(scenario, *runs, *seed, *redraw, grid, *format, out)?
        }
    };
    for p in &out.written {
        log(1, &format!("wrote {}", p.display()));
    }
    Ok(())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// `--seed`, then `GYROCAL_SEED`, then the seed in the config file.
pub fn resolve_seed(flag: Option<u64>, file_seed: u64) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|e| CliError::Config(format!("{SEED_ENV}={v:?}: {e}"))),
        Err(std::env::VarError::NotPresent) => Ok(file_seed),
        Err(e) => Err(CliError::Config(format!("{SEED_ENV}: {e}"))),
    }
}

#[derive(Serialize)]
struct GroundTruth<'a> {
    scenario: &'a ScenarioConfig,
    mount: Quat,
    true_speed: f64,
    pose_angles_deg: &'a [f64],
    segments: &'a SegmentRanges,
}

fn simulate(scenario: &Path, seed: Option<u64>, out: &Path) -> Result<OutDir, CliError> {
    let mut cfg: ScenarioConfig = read_json(scenario)?;
    cfg.seed = resolve_seed(seed, cfg.seed)?;
    cfg.validate()?;
    let sim = simulate_session(&cfg)?;
    let meta = Meta::new(Some(cfg.seed), &cfg);

    let mut dir = OutDir::create(out)?;
    dir.write_text("log.csv", &gyrocal::format_csv(&sim.log, Some(&meta.comment())))?;
    let manifest = SessionManifest::from_ranges("log.csv", &sim.segments, cfg.speed);
    dir.write_json("manifest.json", &meta, &manifest)?;
    let truth = GroundTruth {
        scenario: &sim.ground_truth,
        mount: sim.mount,
        true_speed: sim.true_speed,
        pose_angles_deg: &sim.pose_angles_deg,
        segments: &sim.segments,
    };
    dir.write_json("ground_truth.json", &meta, &truth)?;
    Ok(dir)
}

enum CalibrateInput {
    Manifest(PathBuf),
    Log { path: PathBuf, speed: f64 },
}

#[derive(Serialize)]
struct CalibrationReport<'a> {
    result: &'a CalibrationResult,
    speed_dps: f64,
    /// Mean gyro reading at rest, measured domain.
    gyro_offset: Vec3,
    /// Bias-removed mean rate during rotation, measured domain.
    g_mean: Vec3,
    accel_model: &'a AccelModel,
    pose_accel: &'a [Vec3],
}

fn dot_table(cal: &Calibration) -> String {
    let mut t = String::from("pose,dot_before,dot_after\n");
    for (i, (b, a)) in cal.dot_before().iter().zip(cal.dot_after()).enumerate() {
        let _ = writeln!(t, "{i},{b:?},{a:?}");
    }
    t
}

fn calibrate(
    input: CalibrateInput,
    unit_scale: Option<UnitScale>,
    accel_model: Option<&Path>,
    out: &Path,
) -> Result<OutDir, CliError> {
    let mut dir = OutDir::create(out)?;
    let (manifest, session, file_accel) = match input {
        CalibrateInput::Manifest(path) => {
            let mut manifest: SessionManifest = read_json(&path)?;
            if unit_scale.is_some() {
                manifest.unit_scale = unit_scale;
            }
            let loaded = load_session(&manifest, &base_dir(&path))?;
            (manifest, loaded.session, loaded.accel_model)
        }
        CalibrateInput::Log { path, speed } => {
            let samples = parse_csv_scaled(&path, unit_scale.unwrap_or_default())?;
            let seg = auto_segment(&samples)?;
            let file = fs::canonicalize(&path).unwrap_or(path);
            let mut manifest = seg.into_manifest(file, speed);
            manifest.unit_scale = unit_scale;
            // written before calibrating so a failed run can be corrected by hand
            dir.write_json("manifest.json", &Meta::new(None, &manifest), &manifest)?;
            let session = session_from_logs(&manifest, &[samples])?;
            (manifest, session, None)
        }
    };
    let accel = match accel_model {
        Some(p) => {
            let m: AccelModel = read_json(p)?;
            m.validate()?;
            Some(m)
        }
        None => file_accel,
    };
    let cal = calibrate_detailed(&session, accel.as_ref())?;
    let meta = Meta::new(None, &manifest);
    let report = CalibrationReport {
        result: &cal.result,
        speed_dps: session.commanded_speed,
        gyro_offset: cal.gyro_offset,
        g_mean: cal.g_mean,
        accel_model: &cal.accel_model,
        pose_accel: &cal.pose_accel,
    };
    dir.write_json("calibration.json", &meta, &report)?;
    dir.write_csv("dot_products.csv", &meta, &dot_table(&cal))?;
    println!("{}", serde_json::to_string(&cal.result).expect("result serializes"));
    Ok(dir)
}

fn raw_estimates_csv(report: &SweepReport) -> String {
    let mut t = String::from("speed,repeat,kx,ky,kz\n");
    for p in &report.points {
        for (i, k) in p.repeat_scales.iter().enumerate() {
            let _ = writeln!(t, "{:?},{i},{:?},{:?},{:?}", p.speed, k.x, k.y, k.z);
        }
    }
    t
}

fn sweep(path: &Path, seed: Option<u64>, out: &Path, log: &dyn Fn(u8, &str)) -> Result<OutDir, CliError> {
    let mut cfg: SweepConfig = read_json(path)?;
    let mut used_seed = None;
    if let SweepSource::Simulated { base, .. } = &mut cfg.source {
        base.seed = resolve_seed(seed, base.seed)?;
        used_seed = Some(base.seed);
    }
    cfg.validate()?;
    let report = run_sweep(&cfg, &base_dir(path))?;
    for p in report.points.iter().filter(|p| !p.ok) {
        log(
            0,
            &format!("{} deg/s: {}", p.speed, p.failure.as_deref().unwrap_or("failed")),
        );
    }
    let meta = Meta::new(used_seed, &cfg);
    let mut dir = OutDir::create(out)?;
    dir.write_json("sweep_report.json", &meta, &report)?;
    dir.write_csv("speed.csv", &meta, &speed_table_csv(&report))?;
    dir.write_csv("scale.csv", &meta, &scale_table_csv(&report))?;
    dir.write_csv("raw_estimates.csv", &meta, &raw_estimates_csv(&report))?;
    println!(
        "{} points, {} failed{}",
        report.points.len(),
        report.failures,
        report
            .linearity
            .map(|l| format!(
                ", max deviation from fit {:.3e}",
                l.axes().iter().map(|f| f.max_deviation).fold(0.0, f64::max)
            ))
            .unwrap_or_default()
    );
    Ok(dir)
}

fn csv_text(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

fn runs_csv(s: &MonteCarloSummary) -> String {
    let mut t = String::from("run,seed,true_kx,true_ky,true_kz,kx,ky,kz,err_x,err_y,err_z,failure\n");
    for r in &s.records {
        let k = r.estimated_scale.map(Vec3::to_array);
        let e = r.relative_error.map(Vec3::to_array);
        let _ = writeln!(
            t,
            "{},{},{:?},{:?},{:?},{},{},{},{},{},{},{}",
            r.run,
            r.seed,
            r.true_scale.x,
            r.true_scale.y,
            r.true_scale.z,
            num(k.map(|k| k[0])),
            num(k.map(|k| k[1])),
            num(k.map(|k| k[2])),
            num(e.map(|e| e[0])),
            num(e.map(|e| e[1])),
            num(e.map(|e| e[2])),
            r.failure.as_deref().map(csv_text).unwrap_or_default()
        );
    }
    t
}

fn boxplot_row(t: &mut String, quantity: &str, axis: &str, d: &Distribution1) {
    let _ = writeln!(
        t,
        "{quantity},{axis},{},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
        d.count, d.mean, d.std, d.min, d.q1, d.median, d.q3, d.max
    );
}

fn boxplot_csv(s: &MonteCarloSummary) -> String {
    let mut t = String::from("quantity,axis,count,mean,std,min,q1,median,q3,max\n");
    for (d, axis) in s.estimated_scale.iter().zip(["x", "y", "z"]) {
        boxplot_row(&mut t, "scale", axis, d);
    }
    for (d, axis) in s.relative_error.iter().zip(["x", "y", "z"]) {
        boxplot_row(&mut t, "relative_error", axis, d);
    }
    if let Some(d) = &s.dot_before {
        boxplot_row(&mut t, "dot_before", "", d);
    }
    if let Some(d) = &s.dot_after {
        boxplot_row(&mut t, "dot_after", "", d);
    }
    t
}

fn grid_csv(cells: &[GridCell]) -> String {
    let mut t = String::from("sigma,speed,runs,failures,std_x,std_y,std_z,var_x,var_y,var_z,mse_x,mse_y,mse_z\n");
    for c in cells {
        let _ = writeln!(
            t,
            "{:?},{:?},{},{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            c.sigma,
            c.speed,
            c.runs,
            c.failures,
            c.std.x,
            c.std.y,
            c.std.z,
            c.variance.x,
            c.variance.y,
            c.variance.z,
            c.mse.x,
            c.mse.y,
            c.mse.z
        );
    }
    t
}

fn grid_estimates_csv(cells: &[GridCell]) -> String {
    let mut t = String::from("sigma,speed,index,kx,ky,kz\n");
    for c in cells {
        for (i, k) in c.estimates.iter().enumerate() {
            let _ = writeln!(t, "{:?},{:?},{i},{:?},{:?},{:?}", c.sigma, c.speed, k.x, k.y, k.z);
        }
    }
    t
}

#[derive(Serialize)]
struct GridReport<'a> {
    runs_per_cell: usize,
    cells: &'a [GridCell],
}

#[derive(Serialize)]
struct CampaignConfig<'a> {
    scenario: &'a ScenarioConfig,
    runs: usize,
    policy: RedrawPolicy,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigmas: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    speeds: Option<&'a [f64]>,
}

fn montecarlo(
    scenario: &Path,
    runs: usize,
    seed: Option<u64>,
    redraw: Option<Redraw>,
    grid: Option<(&[f64], &[f64])>,
    format: Format,
    out: &Path,
) -> Result<OutDir, CliError> {
    let mut cfg: ScenarioConfig = read_json(scenario)?;
    cfg.seed = resolve_seed(seed, cfg.seed)?;
    cfg.validate()?;
    if runs == 0 {
        return Err(CliError::Config("--runs must be at least 1".into()));
    }
    let policy = match (redraw, grid) {
        (Some(Redraw::Models), Some(_)) => {
            return Err(CliError::Config(
                "the noise grid keeps models fixed; drop --redraw models".into(),
            ))
        }
        (Some(Redraw::Models), None) | (None, None) => RedrawPolicy::Models,
        (Some(Redraw::NoiseOnly), _) | (None, Some(_)) => RedrawPolicy::NoiseOnly,
    };
    let campaign = CampaignConfig {
        scenario: &cfg,
        runs,
        policy,
        sigmas: grid.map(|g| g.0),
        speeds: grid.map(|g| g.1),
    };
    let meta = Meta::new(Some(cfg.seed), &campaign);
    let mut dir = OutDir::create(out)?;

    match grid {
        None => {
            let summary = monte_carlo(&cfg, runs, policy)?;
            let boxplot = boxplot_csv(&summary);
            dir.write_json("montecarlo.json", &meta, &summary)?;
            dir.write_csv("runs.csv", &meta, &runs_csv(&summary))?;
            dir.write_csv("boxplot.csv", &meta, &boxplot)?;
            match format {
                Format::Json => println!("{}", stamped_json(&meta, &summary)),
                Format::Csv => print!("{boxplot}"),
            }
        }
        Some((sigmas, speeds)) => {
            if sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
                return Err(CliError::Config("--sigmas must be non-negative".into()));
            }
            if speeds.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
                return Err(CliError::Config("--speeds must be positive".into()));
            }
            let cells = noise_grid(&cfg, sigmas, speeds, runs)?;
            let table = grid_csv(&cells);
            let report = GridReport {
                runs_per_cell: runs,
                cells: &cells,
            };
            dir.write_json("noise_grid.json", &meta, &report)?;
            dir.write_csv("noise_grid.csv", &meta, &table)?;
            dir.write_csv("grid_estimates.csv", &meta, &grid_estimates_csv(&cells))?;
            match format {
                Format::Json => println!("{}", stamped_json(&meta, &report)),
                Format::Csv => print!("{table}"),
            }
        }
    }
    Ok(dir)
}
