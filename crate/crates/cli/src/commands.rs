use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use stochmap_core::decomposition::decompose_with;
use stochmap_core::linalg::unitarity_residual;
use stochmap_core::maps::convex_combine;
use stochmap_core::parameterization::parameterize;
use stochmap_core::states::DensityReport;
use stochmap_core::{
    CMatrix, CanonicalDecomposition, DensityMatrix, DilationRegistry, DynamicalMap,
    SamplerOptions, SamplerRegistry, Tolerances,
};

use crate::error::CliError;
use crate::format::{to_grid, Kind, MatrixFile};
use crate::Command;

pub struct Outcome {
    pub report: Value,
    pub summary: String,
    pub exit: i32,
}

impl Outcome {
    fn ok(report: Value, summary: impl Into<String>) -> Self {
        Self {
            report,
            summary: summary.into(),
            exit: 0,
        }
    }
}

pub fn dispatch(command: &Command, tol: &Tolerances) -> Result<Outcome, CliError> {
    match command {
        Command::Validate { path } => validate(path, tol),
        Command::Classify {
            path,
            restarts,
            seed,
        } => classify(path, *restarts, *seed, tol),
        Command::Decompose { path, out } => decompose_cmd(path, out.as_deref(), tol),
        Command::Parameterize { path, out } => parameterize_cmd(path, out.as_deref(), tol),
        Command::Dilate {
            path,
            strategy,
            out,
        } => dilate(path, strategy.as_deref(), out.as_deref(), tol),
        Command::Contract { dilation, state } => contract(dilation, state, tol),
        Command::Mix {
            paths,
            weights,
            out,
        } => mix(paths, weights, out.as_deref(), tol),
        Command::Apply { map, state, out } => apply(map, state, out.as_deref(), tol),
        Command::Random {
            dim,
            kind,
            seed,
            out,
            rank,
            negative_rank,
            retries,
        } => {
            let mut opts = SamplerOptions::new(*dim, *seed);
            opts.rank = *rank;
            opts.negative_rank = *negative_rank;
            opts.retries = *retries;
            random(kind, &opts, out.as_deref())
        }
    }
}

/// `‖X − Y‖_F / max(1, ‖Y‖_F)`.
fn relative(x: &CMatrix, y: &CMatrix) -> f64 {
    (x - y).norm() / y.norm().max(1.0)
}

fn out_path(out: &Path, default_name: &str) -> PathBuf {
    if out.is_dir() {
        out.join(default_name)
    } else {
        out.to_path_buf()
    }
}

fn density_json(report: &DensityReport) -> Value {
    json!({
        "trace": report.trace,
        "trace_residual": report.trace_residual,
        "trace_ok": report.trace_ok,
        "hermiticity_residual": report.hermiticity_residual,
        "hermitian_ok": report.hermitian_ok,
        "min_eigenvalue": report.min_eigenvalue,
        "positive_ok": report.positive_ok,
    })
}

fn validate(path: &Path, tol: &Tolerances) -> Result<Outcome, CliError> {
    let file = MatrixFile::read(path)?;
    let (report, passed) = match file.kind {
        Kind::Density => {
            let r = DensityReport::evaluate(&file.matrix()?, tol)?;
            (density_json(&r), r.all_ok())
        }
        Kind::MapA | Kind::MapB => {
            let map = file.to_map()?;
            let (hp, hp_res) = map.check_hermiticity_preserving_with(tol);
            let (tp, tp_res) = map.check_trace_preserving_with(tol);
            let cp = if hp {
                let (cp, min) = map.is_completely_positive_with(tol)?;
                json!({ "cp": cp, "choi_min": min })
            } else {
                json!({ "cp": false, "choi_min": null })
            };
            let report = json!({
                "hermiticity_preserving": hp,
                "hermiticity_residual": hp_res,
                "trace_preserving": tp,
                "trace_residual": tp_res,
                "classification": cp,
            });
            (report, hp && tp)
        }
        Kind::Unitary => {
            let u = file.matrix()?;
            let residual = unitarity_residual(&u);
            let ok = residual <= tol.structural * u.norm().max(1.0);
            (json!({ "unitarity_residual": residual, "unitary": ok }), ok)
        }
        Kind::Dilation => {
            let dil = file.to_dilation()?;
            (
                json!({
                    "isometry_residual": dil.isometry_residual(),
                    "unitary": dil.is_unitary(),
                    "dim_reservoir": dil.dim_reservoir(),
                }),
                true,
            )
        }
        Kind::Decomposition => {
            let tc = file.to_decomposition()?.verify_trace_condition();
            (
                json!({ "trace_condition_residual": tc.residual, "trace_condition": tc.satisfied }),
                true,
            )
        }
        Kind::Parameters => (json!({}), true),
    };
    let report = json!({ "kind": file.kind, "dim": file.dim, "passed": passed, "checks": report });
    Ok(Outcome {
        summary: format!(
            "{}: {:?} file, {}",
            path.display(),
            file.kind,
            if passed { "all constraints pass" } else { "constraint violated" }
        ),
        report,
        exit: if passed { 0 } else { 2 },
    })
}

fn classify(path: &Path, restarts: usize, seed: u64, tol: &Tolerances) -> Result<Outcome, CliError> {
    let map = MatrixFile::read(path)?.to_map()?;
    let cls = map.classify_with(restarts, seed, tol);
    let summary = format!("{}: {}", path.display(), cls.label());
    Ok(Outcome::ok(
        serde_json::to_value(&cls).expect("classification serializes"),
        summary,
    ))
}

/// A map file is decomposed; a decomposition file is used as is.
fn load_decomposition(
    path: &Path,
    tol: &Tolerances,
) -> Result<(CanonicalDecomposition, DynamicalMap), CliError> {
    let file = MatrixFile::read(path)?;
    if file.kind == Kind::Decomposition {
        let dec = file.to_decomposition()?;
        let map = dec.reconstruct();
        return Ok((dec, map));
    }
    let map = file.to_map()?;
    Ok((decompose_with(&map, tol)?, map))
}

fn decompose_cmd(path: &Path, out: Option<&Path>, tol: &Tolerances) -> Result<Outcome, CliError> {
    let map = MatrixFile::read(path)?.to_map()?;
    let dec = decompose_with(&map, tol)?;
    let tc = dec.verify_trace_condition();
    let roundtrip = relative(dec.reconstruct().b_form(), map.b_form());
    let mut report = json!({
        "m": dec.m(),
        "n": dec.n(),
        "zero_count": dec.zero_count,
        "eigenvalues": dec.eigenvalues,
        "trace_condition_residual": tc.residual,
        "trace_condition": tc.satisfied,
        "roundtrip_residual": roundtrip,
    });
    if let Some(out) = out {
        let target = out_path(out, "decomposition.json");
        MatrixFile::from_decomposition(&dec).write(&target)?;
        report["path"] = json!(target.display().to_string());
    }
    Ok(Outcome::ok(
        report,
        format!(
            "m = {}, n = {}, trace-condition residual {:.3e}, round-trip residual {:.3e}",
            dec.m(),
            dec.n(),
            tc.residual,
            roundtrip
        ),
    ))
}

fn parameterize_cmd(path: &Path, out: Option<&Path>, tol: &Tolerances) -> Result<Outcome, CliError> {
    let (dec, map) = load_decomposition(path, tol)?;
    let (tp, residual) = map.check_trace_preserving_with(tol);
    if !tp {
        return Err(CliError::Constraint(format!(
            "map is not trace preserving (residual {residual:.3e})"
        )));
    }
    let params = parameterize(&dec)?;
    let recon = relative(params.reconstruct_map().b_form(), map.b_form());
    let count = params.free_parameter_count();
    let bound = params.bound().ok();
    let report = json!({
        "dim": params.dim,
        "m": params.m,
        "n": params.n,
        "phi": params.phi,
        "theta_m": params.theta_stages_m(),
        "theta_n": params.theta_stages_n(),
        "n_support": params.n_support,
        "free_parameters": count,
        "bound": bound,
        "within_bound": bound.map(|b| count as i64 <= b),
        "reconstruction_residual": recon,
        "resolution_residual": params.max_resolution_residual,
        "hyperbolic_residual": params.hyperbolic_residual,
        "stages_m": params.m_stages,
        "stages_n": params.n_stages,
    });
    if let Some(out) = out {
        let mut file = MatrixFile::new(Kind::Parameters, params.dim, &CMatrix::zeros(0, 0));
        file.parameters = Some(report.clone());
        file.write(&out_path(out, "parameters.json"))?;
    }
    let bound_text = bound.map_or("undefined".to_string(), |b| b.to_string());
    Ok(Outcome::ok(
        report,
        format!(
            "m = {}, n = {}, {count} free parameters (bound {bound_text}), reconstruction residual {recon:.3e}",
            params.m, params.n
        ),
    ))
}

fn dilate(
    path: &Path,
    strategy: Option<&str>,
    out: Option<&Path>,
    tol: &Tolerances,
) -> Result<Outcome, CliError> {
    let (dec, map) = load_decomposition(path, tol)?;
    let registry = DilationRegistry::default();
    let strategy = match strategy {
        Some(name) => registry.get(name)?,
        None => registry.select(&dec)?,
    };
    let dil = strategy.dilate(&dec)?;
    let roundtrip = relative(dil.induced_map().b_form(), map.b_form());
    let mut report = json!({
        "strategy": strategy.name(),
        "dim_system": dil.dim_system(),
        "dim_reservoir": dil.dim_reservoir(),
        "reservoir_signature": dil.reservoir().signature().signs(),
        "isometry_residual": dil.isometry_residual(),
        "roundtrip_residual": roundtrip,
    });
    if let Some(out) = out {
        let target = out_path(out, "dilation.json");
        MatrixFile::from_dilation(&dil, strategy.name()).write(&target)?;
        report["path"] = json!(target.display().to_string());
    }
    Ok(Outcome::ok(
        report,
        format!(
            "{} dilation, reservoir dimension {}, round-trip residual {roundtrip:.3e}",
            strategy.name(),
            dil.dim_reservoir()
        ),
    ))
}

fn read_state(path: &Path, tol: &Tolerances) -> Result<DensityMatrix, CliError> {
    let m = MatrixFile::read(path)?.to_density_matrix()?;
    Ok(DensityMatrix::with_tolerances(m, tol)?)
}

fn result_report(m: &CMatrix, tol: &Tolerances) -> Result<(Value, bool), CliError> {
    let check = DensityReport::evaluate(m, tol)?;
    Ok((
        json!({
            "matrix": to_grid(m),
            "valid_density": check.all_ok(),
            "density_checks": density_json(&check),
        }),
        check.all_ok(),
    ))
}

fn contract(dilation: &Path, state: &Path, tol: &Tolerances) -> Result<Outcome, CliError> {
    let dil = MatrixFile::read(dilation)?.to_dilation()?;
    let rho = read_state(state, tol)?;
    let reduced = dil.contract(&rho)?;
    let (report, valid) = result_report(&reduced, tol)?;
    Ok(Outcome::ok(
        report,
        format!("contracted state is {}a valid density matrix", if valid { "" } else { "not " }),
    ))
}

fn apply(map: &Path, state: &Path, out: Option<&Path>, tol: &Tolerances) -> Result<Outcome, CliError> {
    let map = MatrixFile::read(map)?.to_map()?;
    let rho = read_state(state, tol)?;
    let image = map.apply(&rho)?;
    let (report, valid) = result_report(&image, tol)?;
    if let Some(out) = out {
        MatrixFile::new(Kind::Density, image.nrows(), &image).write(out)?;
    }
    Ok(Outcome::ok(
        report,
        format!("image is {}a valid density matrix", if valid { "" } else { "not " }),
    ))
}

fn mix(paths: &[PathBuf], weights: &[f64], out: Option<&Path>, tol: &Tolerances) -> Result<Outcome, CliError> {
    let maps = paths
        .iter()
        .map(|p| MatrixFile::read(p)?.to_map())
        .collect::<Result<Vec<_>, _>>()?;
    let mixture = convex_combine(&maps, weights)?;
    let (hp, _) = mixture.map.check_hermiticity_preserving_with(tol);
    let (tp, _) = mixture.map.check_trace_preserving_with(tol);
    let (cp, choi_min) = if hp {
        let (cp, min) = mixture.map.is_completely_positive_with(tol)?;
        (cp, Some(min))
    } else {
        (false, None)
    };
    let file = MatrixFile::from_map(&mixture.map).with_meta("weights", format!("{weights:?}"));
    let mut report = json!({
        "terms": mixture.terms,
        "exceeds_term_bound": mixture.exceeds_term_bound,
        "hermiticity_preserving": hp,
        "trace_preserving": tp,
        "cp": cp,
        "choi_min": choi_min,
    });
    match out {
        Some(out) => file.write(out)?,
        None => report["map"] = serde_json::to_value(&file).expect("file serializes"),
    }
    Ok(Outcome::ok(
        report,
        format!("mixed {} maps{}", mixture.terms, if cp { ", completely positive" } else { "" }),
    ))
}

fn random(kind: &str, opts: &SamplerOptions, out: Option<&Path>) -> Result<Outcome, CliError> {
    let map = SamplerRegistry::default().sample(kind, opts)?;
    let file = MatrixFile::from_map(&map)
        .with_meta("sampler", kind)
        .with_meta("seed", opts.seed);
    let report = match out {
        Some(out) => {
            file.write(out)?;
            json!({ "kind": kind, "dim": opts.dim, "seed": opts.seed, "path": out.display().to_string() })
        }
        None => serde_json::to_value(&file).expect("file serializes"),
    };
    Ok(Outcome::ok(
        report,
        format!("sampled a {kind} map on dimension {}", opts.dim),
    ))
}
