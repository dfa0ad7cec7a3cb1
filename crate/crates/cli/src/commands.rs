use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use cs_stap::cube_io::{read_cube, write_cube};
use cs_stap::eval::{angle_scan, apply_filter, range_scan, scr_improvement, write_pgm, ScanResult};
use cs_stap::filters::argmax;
use cs_stap::scene::ScenarioConfig;
use cs_stap::{build_dictionary, matched_filter_map, solve, synthesize_cube, DataCube, FilterOutput, SteeringDictionary};

use crate::args::CommonArgs;
use crate::config::{parse_json, parse_scene, read_config_text, Method, RunConfig, ScanKind};
use crate::error::{CliError, CliResult};
use crate::manifest::{as_manifest, tool_version, CommandKind, RunManifest};

pub const CUBE_FILE: &str = "cube.csc1";
pub const SCENARIO_FILE: &str = "scenario.json";

fn create_out_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> CliResult<()> {
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))
}

fn config_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{}: {e}", path.display()))
}

pub fn run_simulate(args: &CommonArgs) -> CliResult<()> {
    let text = read_config_text(&args.config)?;
    let mut trace = args.trace;
    let mut grid = args.grid;
    let mut scene = match as_manifest(&text, &args.config)? {
        Some(m) => {
            if m.command != CommandKind::Simulate {
                return Err(config_error(&args.config, format!("manifest is for `{}`", m.command.name())));
            }
            trace |= m.trace;
            grid = grid.or(m.grid);
            serde_json::from_value::<ScenarioConfig>(m.config).map_err(|e| config_error(&args.config, e))?
        }
        None => parse_scene(&text, &args.config)?,
    };
    if let Some(seed) = args.seed {
        scene.seed = seed;
    }
    if let Some(grid) = args.grid {
        scene = scene.snapped_to_grid(&grid.build()?);
    }
    scene.validate().map_err(|e| config_error(&args.config, e))?;

    create_out_dir(&args.out)?;
    let resolved = serde_json::to_value(&scene).map_err(|e| CliError::Io(e.to_string()))?;
    RunManifest {
        command: CommandKind::Simulate,
        tool_version: tool_version(),
        seed: scene.seed,
        trace,
        method: None,
        grid,
        config_path: args.config.clone(),
        output_dir: args.out.clone(),
        config: resolved,
    }
    .write(&args.out)?;
    let echo = serde_json::to_string_pretty(&scene).map_err(|e| CliError::Io(e.to_string()))? + "\n";
    write_file(&args.out, SCENARIO_FILE, echo.as_bytes())?;

    let cube: DataCube<f64> = synthesize_cube(&scene)?;
    let path = args.out.join(CUBE_FILE);
    let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
    write_cube(&cube, BufWriter::new(file)).map_err(|e| CliError::io(&path, e))?;
    println!(
        "wrote {} (N={}, L={}, M={}, seed={})",
        path.display(),
        scene.geometry.n_elements,
        scene.geometry.n_pulses,
        scene.n_range_cells,
        scene.seed
    );
    Ok(())
}

/// Loaded inputs shared by the processing commands.
struct Session {
    cfg: RunConfig,
    cube: DataCube<f64>,
    dict: SteeringDictionary<f64>,
    trace: bool,
}

fn load_session(args: &CommonArgs, kind: CommandKind) -> CliResult<Session> {
    let text = read_config_text(&args.config)?;
    let (mut cfg, mut trace, mut seed, recorded) = match as_manifest(&text, &args.config)? {
        Some(m) => {
            if m.command != kind {
                return Err(config_error(&args.config, format!("manifest is for `{}`", m.command.name())));
            }
            let cfg = serde_json::from_value::<RunConfig>(m.config).map_err(|e| config_error(&args.config, e))?;
            (cfg, m.trace, m.seed, (m.method, m.grid))
        }
        None => (parse_json::<RunConfig>(&text, &args.config)?, false, 0, (None, None)),
    };
    // overrides already applied in a manifest's config stay on record
    let method_override = args.method.or(recorded.0);
    let grid_override = args.grid.or(recorded.1);
    trace |= args.trace;
    if let Some(s) = args.seed {
        seed = s;
    }
    if let Some(m) = args.method {
        cfg.method = m;
        cfg.methods = vec![m];
    }
    if let Some(g) = args.grid {
        cfg.grid = g;
    }
    let mut cfg = cfg.resolve_cube_path(&args.config)?;

    let cube_path = cfg.cube_path().to_path_buf();
    let file = File::open(&cube_path).map_err(|e| CliError::io(&cube_path, e))?;
    let cube: DataCube<f64> = read_cube(BufReader::new(file), cfg.element_spacing_wavelengths)?;
    cfg = cfg.fill_defaults(cube.geometry.snapshot_len())?;
    let m = cube.snapshots.len();
    for &c in cfg.cells.iter().flatten().chain([&cfg.target_cell]) {
        if c >= m {
            return Err(config_error(&args.config, format!("range cell {c} outside the cube's {m} cells")));
        }
    }
    let grid = cfg.grid.build()?;
    if let Some([s, d]) = cfg.target_bin {
        if s >= grid.n_spatial() || d >= grid.n_doppler() {
            return Err(config_error(&args.config, format!("target_bin [{s}, {d}] outside the {} grid", cfg.grid)));
        }
    }
    let dict = build_dictionary(&cube.geometry, &grid)?;

    create_out_dir(&args.out)?;
    RunManifest {
        command: kind,
        tool_version: tool_version(),
        seed,
        trace,
        method: method_override,
        grid: grid_override,
        config_path: args.config.clone(),
        output_dir: args.out.clone(),
        config: serde_json::to_value(&cfg).map_err(|e| CliError::Io(e.to_string()))?,
    }
    .write(&args.out)?;
    Ok(Session { cfg, cube, dict, trace })
}

fn write_map_files(out: &Path, stem: &str, output: &FilterOutput<f64>, dict: &SteeringDictionary<f64>) -> CliResult<()> {
    write_file(out, &format!("{stem}_map.csv"), output.map_csv(dict.grid()).as_bytes())?;
    write_file(out, &format!("{stem}_map.pgm"), &write_pgm(&output.magnitude_map, dict.grid())?)?;
    Ok(())
}

fn is_sparse(m: Method) -> bool {
    matches!(m, Method::AnnihilateSingle | Method::AnnihilateMulti | Method::Sidelobe)
}

pub fn run_filter(args: &CommonArgs) -> CliResult<()> {
    let s = load_session(args, CommandKind::Filter)?;
    let method = s.cfg.method;
    let filter = s.cfg.filter_for(method);
    for &cell in s.cfg.cells.as_deref().unwrap_or_default() {
        let output = apply_filter(&s.dict, &s.cube, cell, &filter)?;
        let stem = format!("{}_cell{cell}", method.label());
        write_map_files(&args.out, &stem, &output, &s.dict)?;
        write_file(&args.out, &format!("{stem}_diagnostics.csv"), output.diagnostics_csv().as_bytes())?;
        if s.trace && is_sparse(method) {
            let traced = solve(&s.dict, s.cube.snapshot(cell), &s.cfg.solver().clone().with_trace(true))?;
            write_file(&args.out, &format!("{stem}_trace.csv"), traced.trace_csv().as_bytes())?;
        }
        for w in &output.warnings {
            eprintln!("warning: cell {cell}: {w}");
        }
        let peak = output.argmax();
        let (sb, db) = s.dict.grid().cell(peak);
        println!(
            "cell {cell} {}: argmax spatial_bin={sb} doppler_bin={db} flat_index={peak} magnitude={}",
            method.name(),
            output.magnitude_map[peak]
        );
    }
    Ok(())
}

fn outputs_at(s: &Session, cell: usize) -> CliResult<Vec<(Method, FilterOutput<f64>)>> {
    s.cfg
        .methods
        .iter()
        .map(|&m| Ok((m, apply_filter(&s.dict, &s.cube, cell, &s.cfg.filter_for(m))?)))
        .collect()
}

fn reference_bin(s: &Session, first: &FilterOutput<f64>) -> (usize, usize) {
    match s.cfg.target_bin {
        Some([sb, db]) => (sb, db),
        None => s.dict.grid().cell(first.argmax()),
    }
}

fn angle_scan_of(s: &Session, outputs: &[(Method, FilterOutput<f64>)]) -> CliResult<(ScanResult, (usize, usize))> {
    let (sb, db) = reference_bin(s, &outputs[0].1);
    let labels: Vec<String> = outputs.iter().map(|(m, _)| m.label()).collect();
    let maps: Vec<(&str, &[f64])> = labels
        .iter()
        .zip(outputs)
        .map(|(l, (_, o))| (l.as_str(), o.magnitude_map.as_slice()))
        .collect();
    Ok((angle_scan(&maps, &s.dict, db, sb)?, (sb, db)))
}

pub fn run_scan(args: &CommonArgs) -> CliResult<()> {
    let s = load_session(args, CommandKind::Scan)?;
    let (name, scan) = match s.cfg.scan {
        ScanKind::Angle => {
            let outputs = outputs_at(&s, s.cfg.target_cell)?;
            ("scan_angle.csv", angle_scan_of(&s, &outputs)?.0)
        }
        ScanKind::Range => {
            let mut merged: Option<ScanResult> = None;
            for &m in &s.cfg.methods {
                let mut r = range_scan(&s.dict, &s.cube, &s.cfg.filter_for(m), s.cfg.target_cell)?;
                r.method_labels = vec![m.label()];
                merged = Some(match merged {
                    None => r,
                    Some(mut acc) => {
                        acc.method_labels.extend(r.method_labels);
                        acc.responses_db.extend(r.responses_db);
                        acc
                    }
                });
            }
            ("scan_range.csv", merged.expect("methods is nonempty"))
        }
    };
    write_file(&args.out, name, scan.to_csv().as_bytes())?;
    println!("wrote {} ({} rows)", args.out.join(name).display(), scan.axis_values.len());
    Ok(())
}

pub fn run_compare(args: &CommonArgs) -> CliResult<()> {
    let s = load_session(args, CommandKind::Compare)?;
    let cell = s.cfg.target_cell;
    let outputs = outputs_at(&s, cell)?;
    let (scan, (sb, db)) = angle_scan_of(&s, &outputs)?;
    let grid = s.dict.grid();
    let target = grid.flat_index(sb, db);
    let unfiltered = matched_filter_map(&s.dict, s.cube.snapshot(cell))?;

    let mut report = String::from("method,argmax_spatial,argmax_doppler,target_magnitude,peak_magnitude,scr_improvement_db\n");
    for (m, o) in &outputs {
        let (ps, pd) = grid.cell(o.argmax());
        let scr = scr_improvement(&unfiltered, &o.magnitude_map, target)
            .map(|v| v.to_string())
            .unwrap_or_else(|_| "nan".into());
        let _ = writeln!(
            report,
            "{},{ps},{pd},{},{},{scr}",
            m.name(),
            o.magnitude_map[target],
            o.magnitude_map[o.argmax()]
        );
        write_map_files(&args.out, &format!("{}_cell{cell}", m.label()), o, &s.dict)?;
        println!("{}: argmax spatial_bin={ps} doppler_bin={pd} scr_improvement_db={scr}", m.name());
    }
    write_file(&args.out, "compare.csv", report.as_bytes())?;
    write_file(&args.out, "compare_angle.csv", scan.to_csv().as_bytes())?;
    let mf_peak = argmax(&unfiltered);
    let (us, ud) = grid.cell(mf_peak);
    println!("unfiltered: argmax spatial_bin={us} doppler_bin={ud}; reference bin spatial={sb} doppler={db}");
    Ok(())
}
