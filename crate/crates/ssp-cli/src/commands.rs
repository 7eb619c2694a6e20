//! The five subcommands: mesh tables, discretisation diagnostics, a
//! single-path observer run, Monte Carlo convergence studies, and
//! mushy-region sweeps.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ssp_core::disc::{build_hmm, build_mlp1, DiscError};
use ssp_core::experiments::{
    energy, mesh_size, mushy_area, run_ensemble, steps_for, EnsembleSpec, ExperimentsError,
    LevelReport, LevelSpec, NoiseKind, ReferenceKind,
};
use ssp_core::gdm::diagnostics::{
    coercivity_constant, probe_phi, probe_phi_grad, probe_psi, probe_psi_div, s_defect,
    w_defect,
};
use ssp_core::gdm::{assemble_stiffness, DiffusionTensor, GdmError, GradientDiscretisation};
use ssp_core::mesh::{DualMesh, GeometryCache, PolytopalMesh};
use ssp_core::model::StefanModel;
use ssp_core::noise::BrownianDriver;
use ssp_core::stepper::{NewtonConfig, Stepper};

use crate::config::{
    family_mesh, level_list, nf_token, reference_choice, scheme_list, single_mesh,
    single_scheme, Common, KeyMap, ReferenceChoice, SchemeChoice,
};
use crate::output::{ensure_dir, sig15, write_plot, write_table, Cell, PlotSpec};
use crate::CliError;

/// A mesh with its derived geometry, ready for either scheme.
struct LoadedMesh {
    path: PathBuf,
    stem: String,
    mesh: PolytopalMesh,
    geom: GeometryCache,
    h: f64,
}

fn load_mesh(path: &Path) -> Result<LoadedMesh, CliError> {
    let mesh = PolytopalMesh::load(path)
        .map_err(|e| CliError::Config(format!("mesh {}: {e}", path.display())))?;
    let geom = GeometryCache::new(&mesh)
        .map_err(|e| CliError::Config(format!("mesh {}: {e}", path.display())))?;
    let h = mesh_size(&mesh);
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "mesh".to_string());
    Ok(LoadedMesh {
        path: path.to_path_buf(),
        stem,
        mesh,
        geom,
        h,
    })
}

fn build_gd(loaded: &LoadedMesh, scheme: SchemeChoice, r: f64) -> Result<GradientDiscretisation, CliError> {
    let on = |e: DiscError| {
        CliError::Config(format!("{} on {}: {e}", scheme, loaded.path.display()))
    };
    match scheme {
        SchemeChoice::Mlp1 => {
            let dual = DualMesh::new(&loaded.mesh, &loaded.geom)
                .map_err(|e| CliError::Config(format!("mesh {}: {e}", loaded.path.display())))?;
            build_mlp1(&loaded.mesh, &loaded.geom, &dual).map_err(on)
        }
        SchemeChoice::Hmm => build_hmm(&loaded.mesh, &loaded.geom, r).map_err(on),
    }
}

fn model_for(test: u32, nf: f64, t_final: f64) -> StefanModel {
    let model = match test {
        1 => StefanModel::test1(nf),
        _ => StefanModel::test2(nf),
    };
    model.with_t_final(t_final)
}

/// Mushy interval: explicit override, else the model's own plateau.
fn plateau_for(common: &Common, model: &StefanModel) -> Result<(f64, f64), CliError> {
    common
        .plateau
        .or_else(|| model.zeta().plateau())
        .ok_or_else(|| CliError::Config("plateau: model has none, set `plateau = lo, hi`".into()))
}

fn gdm_err(e: GdmError) -> CliError {
    match e {
        GdmError::NoInteriorDofs => CliError::Config(format!("{e}")),
        other => CliError::Numerics(format!("{other}")),
    }
}

fn experiments_err(e: ExperimentsError) -> CliError {
    match e {
        ExperimentsError::PathFailed { .. } => CliError::Numerics(format!("{e}")),
        other => CliError::Config(format!("{other}")),
    }
}

/// `mesh-info`: one row per mesh with the size and entity counts.
pub fn mesh_info(meshes: &[PathBuf]) -> Result<String, CliError> {
    if meshes.is_empty() {
        return Err(CliError::Config("mesh-info needs at least one mesh file".into()));
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:>22} {:>10} {:>10} {:>13}",
        "Mesh", "Size", "Nb. Cells", "Nb. Edges", "Nb. Vertices"
    );
    for path in meshes {
        let loaded = load_mesh(path)?;
        let _ = writeln!(
            out,
            "{:<12} {:>22} {:>10} {:>10} {:>13}",
            loaded.stem,
            sig15(loaded.h),
            loaded.mesh.n_cells(),
            loaded.mesh.n_edges(),
            loaded.mesh.n_vertices()
        );
    }
    Ok(out)
}

/// `diagnostics`: defect and Poincaré table per mesh and scheme.
pub fn diagnostics(map: &KeyMap) -> Result<String, CliError> {
    let common = Common::from_map(map)?;
    let schemes = scheme_list(map)?;
    let meshes = mesh_set(map)?;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:<6} {:>22} {:>22} {:>22} {:>22}",
        "Mesh", "Scheme", "h", "rho", "SD", "WD"
    );
    for path in &meshes {
        let loaded = load_mesh(path)?;
        for &scheme in &schemes {
            let gd = build_gd(&loaded, scheme, common.r)?;
            let rho = coercivity_constant(&gd).map_err(gdm_err)?;
            let sd = s_defect(&gd, probe_phi, probe_phi_grad).map_err(gdm_err)?;
            let wd = w_defect(&gd, probe_psi, probe_psi_div).map_err(gdm_err)?;
            let _ = writeln!(
                out,
                "{:<12} {:<6} {:>22} {:>22} {:>22} {:>22}",
                loaded.stem,
                scheme.to_string(),
                sig15(loaded.h),
                sig15(rho.rho),
                sig15(sd),
                sig15(wd)
            );
        }
    }
    Ok(out)
}

/// Meshes for table commands: a single `mesh =`, else `family` + `levels`.
fn mesh_set(map: &KeyMap) -> Result<Vec<PathBuf>, CliError> {
    if map.get_path("mesh").is_some() {
        return Ok(vec![single_mesh(map)?]);
    }
    level_list(map)?
        .into_iter()
        .map(|level| family_mesh(map, level))
        .collect()
}

/// `run`: one path of one scheme on one mesh, with a per-step CSV.
pub fn run(map: &KeyMap) -> Result<Vec<PathBuf>, CliError> {
    let common = Common::from_map(map)?;
    let scheme = single_scheme(map)?;
    let nf = run_nf(map)?;
    let path_index = map.get_u32("path")?.unwrap_or(0);
    let loaded = load_mesh(&single_mesh(map)?)?;
    let gd = build_gd(&loaded, scheme, common.r)?;
    let model = model_for(common.test, nf, common.t_final);
    let plateau = plateau_for(&common, &model)?;
    let n_steps = common.steps.unwrap_or_else(|| steps_for(common.t_final, loaded.h));
    let stiffness = assemble_stiffness(&gd, &DiffusionTensor::Identity).map_err(gdm_err)?;
    let driver = BrownianDriver::generate(common.seed, path_index, n_steps, common.t_final)
        .map_err(|e| CliError::Config(format!("{e}")))?;
    let mut stepper = Stepper::new(&gd, &stiffness, &model, NewtonConfig::default());
    let mut csv = String::from("t,energy,mushy_area,newton_its,relaxations\n");
    let observe = |s: &ssp_core::stepper::SchemeState| {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            sig15(s.time),
            sig15(energy(&gd, model.zeta(), &s.u)),
            sig15(mushy_area(&gd, &s.u, plateau)),
            s.newton_iterations,
            s.relaxations
        );
    };
    stepper
        .run_path(&driver, n_steps, observe)
        .map_err(|e| CliError::Numerics(format!("path {path_index}: {e}")))?;
    ensure_dir(&common.out)?;
    let file = common.out.join(format!(
        "run_test{}_{}_{}_nf{}_seed{}_p{}.csv",
        common.test,
        scheme,
        loaded.stem,
        nf_token(nf),
        common.seed,
        path_index
    ));
    crate::output::write_text(&file, &csv)?;
    Ok(vec![file])
}

/// `run` takes a single noise factor; a sweep list is rejected by name.
fn run_nf(map: &KeyMap) -> Result<f64, CliError> {
    match map.get_f64_list("nf")? {
        None => Ok(1.0),
        Some(list) if list.len() == 1 => Ok(list[0]),
        Some(list) => Err(CliError::Config(format!(
            "run uses a single nf, got {} values",
            list.len()
        ))),
    }
}

fn check_nf(nf: f64) -> Result<(), CliError> {
    if nf < 0.0 {
        return Err(CliError::Config(format!("nf must be nonnegative, got {nf}")));
    }
    Ok(())
}

/// `convergence`: Monte Carlo error study of a level family against a
/// finer reference level or the exact solution.
pub fn convergence(map: &KeyMap) -> Result<Vec<PathBuf>, CliError> {
    let common = Common::from_map(map)?;
    let schemes = scheme_list(map)?;
    let nf_list = map.get_f64_list("nf")?.unwrap_or_else(|| vec![1.0]);
    let paths = map.get_u32("paths")?.unwrap_or(100);
    let levels = level_list(map)?;
    let reference = reference_choice(map)?;
    if let ReferenceChoice::Level(ref_level) = reference {
        if ref_level <= *levels.last().expect("levels nonempty") {
            return Err(CliError::Config(format!(
                "reference level {ref_level} must exceed the finest study level {}",
                levels.last().expect("levels nonempty")
            )));
        }
    }
    let family = map.get_string("family").unwrap_or_else(|| "mesh".into());
    let cache = map.get_path("cache");
    if let Some(dir) = &cache {
        ensure_dir(dir)?;
    }

    let mut written = Vec::new();
    for &scheme in &schemes {
        for &nf in &nf_list {
            check_nf(nf)?;
            let model = model_for(common.test, nf, common.t_final);
            let plateau = plateau_for(&common, &model)?;
            let mut level_specs = Vec::new();
            let mut triangulation = true;
            for &level in &levels {
                let loaded = load_mesh(&family_mesh(map, level)?)?;
                triangulation = loaded.mesh.is_triangulation();
                level_specs.push(LevelSpec {
                    label: loaded.stem.clone(),
                    mesh: loaded.path.clone(),
                    scheme: scheme.to_scheme(),
                    r: common.r,
                    n_steps: steps_for(common.t_final, loaded.h),
                });
            }
            let kind = match reference {
                ReferenceChoice::Exact => ReferenceKind::ExactSolution,
                ReferenceChoice::Level(ref_level) => {
                    let loaded = load_mesh(&family_mesh(map, ref_level)?)?;
                    let n_steps = common
                        .steps
                        .unwrap_or_else(|| steps_for(common.t_final, loaded.h));
                    level_specs.push(LevelSpec {
                        label: loaded.stem.clone(),
                        mesh: loaded.path.clone(),
                        scheme: scheme.to_scheme(),
                        r: common.r,
                        n_steps,
                    });
                    ReferenceKind::FinestLevel
                }
            };
            let tag = format!(
                "{family}_test{}_nf{}_{}",
                common.test,
                nf_token(nf),
                scheme
            );
            let spec = EnsembleSpec {
                levels: level_specs,
                paths,
                seed: common.seed,
                model,
                noise: NoiseKind::Scalar,
                plateau,
                newton: NewtonConfig::default(),
                reference: kind,
                cache_dir: cache.clone(),
                cache_tag: format!(
                    "{tag}_r{}_T{}_seed{}",
                    common.r, common.t_final, common.seed
                ),
            };
            let report = run_ensemble(&spec).map_err(experiments_err)?;
            log_levels(&report.levels);

            let combo = scheme.column_tag(triangulation);
            let error_rows: &[LevelReport] = match kind {
                ReferenceKind::FinestLevel => {
                    &report.levels[..report.levels.len().saturating_sub(1)]
                }
                ReferenceKind::ExactSolution => &report.levels,
            };
            ensure_dir(&common.out)?;
            let file_tag = format!("{combo}_{tag}");
            written.extend(emit_errors(&common, &file_tag, combo, error_rows)?);
            written.extend(emit_values(&common, &file_tag, combo, &report.levels)?);
        }
    }
    Ok(written)
}

/// Per-level stdout log line with the Newton statistics.
fn log_levels(levels: &[LevelReport]) {
    for level in levels {
        println!(
            "level {}: h={} ndofs={} steps={} newton_mean={} newton_max={} relaxations={}",
            level.label,
            sig15(level.h),
            level.n_dofs,
            level.n_steps,
            sig15(level.mean_newton_per_step),
            level.max_newton_iterations,
            level.total_relaxations
        );
    }
}

fn emit_errors(
    common: &Common,
    file_tag: &str,
    combo: &str,
    rows: &[LevelReport],
) -> Result<Vec<PathBuf>, CliError> {
    let data = common.out.join(format!("errors_{file_tag}.dat"));
    let columns = vec![
        "h".to_string(),
        "ndofs".to_string(),
        format!("{combo}_EL2z"),
        format!("{combo}_EH1z"),
        format!("{combo}_EL1Xi"),
    ];
    let table: Vec<Vec<Cell>> = rows
        .iter()
        .map(|l| {
            vec![
                Cell::Num(l.h),
                Cell::Int(l.n_dofs),
                Cell::Num(l.errors.l2_zeta),
                Cell::Num(l.errors.h1_zeta),
                Cell::Num(l.errors.l1_xi_final),
            ]
        })
        .collect();
    write_table(&data, &columns, &table)?;
    let mut written = vec![data.clone()];
    if common.plot {
        for (script, x_col, x_label) in [
            (format!("errors_h_{file_tag}.gp"), "h", "h"),
            (format!("errors_ndofs_{file_tag}.gp"), "ndofs", "degrees of freedom"),
        ] {
            let script = common.out.join(script);
            write_plot(&PlotSpec {
                script: script.clone(),
                data: &data,
                title: "relative errors",
                x_label,
                y_label: "relative error",
                x_column: x_col,
                y_columns: &columns[2..],
                logscale: true,
                slope_guide: x_col == "h",
            })?;
            written.push(script);
        }
    }
    Ok(written)
}

fn emit_values(
    common: &Common,
    file_tag: &str,
    combo: &str,
    rows: &[LevelReport],
) -> Result<Vec<PathBuf>, CliError> {
    let data = common.out.join(format!("values_{file_tag}.dat"));
    let columns = vec![
        "h".to_string(),
        "ndofs".to_string(),
        format!("{combo}_L2z"),
        format!("{combo}_H1z"),
        format!("{combo}_L1Xi"),
    ];
    let table: Vec<Vec<Cell>> = rows
        .iter()
        .map(|l| {
            vec![
                Cell::Num(l.h),
                Cell::Int(l.n_dofs),
                Cell::Num(l.norm_l2_zeta),
                Cell::Num(l.norm_h1_zeta),
                Cell::Num(l.norm_xi_final),
            ]
        })
        .collect();
    write_table(&data, &columns, &table)?;
    let mut written = vec![data.clone()];
    if common.plot {
        let script = common.out.join(format!("values_h_{file_tag}.gp"));
        write_plot(&PlotSpec {
            script: script.clone(),
            data: &data,
            title: "solution norms",
            x_label: "h",
            y_label: "norm",
            x_column: "h",
            y_columns: &columns[2..],
            logscale: false,
            slope_guide: false,
        })?;
        written.push(script);
    }
    Ok(written)
}

/// `mushy`: expectation and standard deviation of the mushy-region area
/// over time, swept over the `nf` list, one table per mesh.
pub fn mushy(map: &KeyMap) -> Result<Vec<PathBuf>, CliError> {
    let common = Common::from_map(map)?;
    let scheme = single_scheme(map)?;
    let nf_list = map.get_f64_list("nf")?.unwrap_or_else(|| vec![1.0]);
    let paths = map.get_u32("paths")?.unwrap_or(100);
    if paths < 2 {
        return Err(CliError::Config(format!(
            "mushy statistics need paths >= 2, got {paths}"
        )));
    }
    let cache = map.get_path("cache");
    if let Some(dir) = &cache {
        ensure_dir(dir)?;
    }
    let mut written = Vec::new();
    for mesh_path in mesh_set(map)? {
        let loaded = load_mesh(&mesh_path)?;
        let n_steps = common.steps.unwrap_or_else(|| steps_for(common.t_final, loaded.h));
        let mut columns = vec!["idt".to_string()];
        let mut series = Vec::new();
        let mut times: Option<Vec<f64>> = None;
        for &nf in &nf_list {
            check_nf(nf)?;
            let model = model_for(common.test, nf, common.t_final);
            let plateau = plateau_for(&common, &model)?;
            let spec = EnsembleSpec {
                levels: vec![LevelSpec {
                    label: loaded.stem.clone(),
                    mesh: loaded.path.clone(),
                    scheme: scheme.to_scheme(),
                    r: common.r,
                    n_steps,
                }],
                paths,
                seed: common.seed,
                model,
                noise: NoiseKind::Scalar,
                plateau,
                newton: NewtonConfig::default(),
                reference: ReferenceKind::FinestLevel,
                cache_dir: cache.clone(),
                cache_tag: format!(
                    "mushy_{}_{}_test{}_nf{}_r{}_T{}_N{}_seed{}",
                    loaded.stem,
                    scheme,
                    common.test,
                    nf_token(nf),
                    common.r,
                    common.t_final,
                    n_steps,
                    common.seed
                ),
            };
            let report = run_ensemble(&spec).map_err(experiments_err)?;
            log_levels(&report.levels);
            let level = &report.levels[0];
            match &times {
                None => times = Some(level.mushy.times.clone()),
                Some(t) => assert_eq!(t, &level.mushy.times, "shared time grid"),
            }
            columns.push(format!("nf{}_Exp", nf_token(nf)));
            columns.push(format!("nf{}_SD", nf_token(nf)));
            series.push(level.mushy.clone());
        }
        let times = times.expect("nf list is nonempty");
        let rows: Vec<Vec<Cell>> = times
            .iter()
            .enumerate()
            .map(|(n, &t)| {
                let mut row = vec![Cell::Num(t)];
                for s in &series {
                    row.push(Cell::Num(s.expectation[n]));
                    row.push(Cell::Num(s.std_dev[n]));
                }
                row
            })
            .collect();
        ensure_dir(&common.out)?;
        let data = common
            .out
            .join(format!("mushy_{}_test{}_{}.dat", loaded.stem, common.test, scheme));
        write_table(&data, &columns, &rows)?;
        written.push(data.clone());
        if common.plot {
            let script = common
                .out
                .join(format!("mushy_{}_test{}_{}.gp", loaded.stem, common.test, scheme));
            write_plot(&PlotSpec {
                script: script.clone(),
                data: &data,
                title: "mushy-region statistics",
                x_label: "t",
                y_label: "area",
                x_column: "idt",
                y_columns: &columns[1..],
                logscale: false,
                slope_guide: false,
            })?;
            written.push(script);
        }
    }
    Ok(written)
}
