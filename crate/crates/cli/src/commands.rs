use crate::failure::{code, CliResult, Failure};
use crate::manifest::{parent_dir, Metadata, Recorder};
use crate::{
    DecomposeArgs, EmbedArgs, EmbedMethod, GenArgs, Generator, KnnArgs, MatrixInput, RelerrArgs,
    SolverArgs, SweepArgs,
};
use edmkit::decomp::{decomposition_table, first_increase};
use edmkit::eval::{self, knn_classify, run_sweep, sweep_embeddings, Method, SweepConfig};
use edmkit::io;
use edmkit::linalg::edm_status;
use edmkit::lower::embed_projection;
use edmkit::metrics::{self, MaskedPointCloud, PointCloud};
use edmkit::sstress::{solve_sstress, SstressConfig};
use edmkit::{cmds, project_onto_kappa, SquaredDissimilarityMatrix};
use serde_json::json;
use std::path::{Path, PathBuf};

type Matrix = SquaredDissimilarityMatrix<f64>;

fn read_matrix_file(path: &Path, sqrt_input: bool, rec: &mut Recorder) -> CliResult<Matrix> {
    rec.input(path);
    let mut m = io::read_matrix::<f64>(path)?;
    if sqrt_input {
        m = m.map(|x| x * x);
    }
    Ok(SquaredDissimilarityMatrix::new(m)?)
}

fn load(input: &MatrixInput, rec: &mut Recorder) -> CliResult<Matrix> {
    read_matrix_file(&input.matrix, input.sqrt_input, rec)
}

fn require<'a, T>(value: &'a Option<T>, flag: &str, generator: &str) -> CliResult<&'a T> {
    value
        .as_ref()
        .ok_or_else(|| Failure::usage(format!("gen {generator} requires {flag}")))
}

fn seed_or_draw(seed: Option<u64>, rec: &mut Recorder) -> u64 {
    let s = seed.unwrap_or_else(rand::random);
    rec.seed(s);
    s
}

fn solver_config(s: &SolverArgs) -> CliResult<SstressConfig> {
    let cfg = SstressConfig::default()
        .with_tolerance(s.tolerance)
        .with_max_iterations(s.max_iter);
    cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
    Ok(cfg)
}

/// Parses `A:B` or a single `A`.
pub fn parse_dims(spec: Option<&str>, n: usize) -> CliResult<(usize, usize)> {
    let Some(spec) = spec else {
        return Ok(eval::default_range(n));
    };
    let bad = || Failure::usage(format!("--dims expects A:B, got '{spec}'"));
    let (a, b) = match spec.split_once(':') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (spec.trim(), spec.trim()),
    };
    let a: usize = a.parse().map_err(|_| bad())?;
    let b: usize = b.parse().map_err(|_| bad())?;
    if a < 1 || a > b {
        return Err(bad());
    }
    Ok((a, b))
}

fn parse_methods(names: &[String]) -> CliResult<Vec<Method>> {
    names
        .iter()
        .map(|s| s.trim().parse::<Method>().map_err(|e| Failure::usage(e.to_string())))
        .collect()
}

fn status_json(d: &Matrix) -> CliResult<serde_json::Value> {
    let s = edm_status(d)?;
    Ok(json!({
        "min_eigenvalue": s.min_eigenvalue,
        "max_eigenvalue": s.max_eigenvalue,
        "positive_count": s.positive_count,
        "negative_count": s.negative_count,
        "threshold": s.threshold,
        "is_edm": s.is_edm,
    }))
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    out.with_file_name(name)
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Failure::new(code::OTHER, format!("{}: {e}", dir.display())))
}

pub fn gen(a: &GenArgs) -> CliResult<()> {
    let mut rec = Recorder::new("gen", a)?;
    let name = a.generator.to_possible_value_name();
    let mut meta = Metadata::new();
    meta.insert("generator".into(), json!(name));

    let read_points = |rec: &mut Recorder| -> CliResult<PointCloud<f64>> {
        let p = require(&a.points, "--points", &name)?;
        rec.input(p);
        Ok(PointCloud::new(io::read_points(p)?, None)?)
    };
    let perturb_input = |rec: &mut Recorder| -> CliResult<(Matrix, f64)> {
        let m = require(&a.matrix, "--matrix", &name)?;
        let snr = *require(&a.snr, "--snr", &name)?;
        Ok((read_matrix_file(m, a.sqrt_input, rec)?, snr))
    };

    let d = match a.generator {
        Generator::Euclidean => metrics::euclidean_metric(&read_points(&mut rec)?)?,
        Generator::Graph => {
            let e = require(&a.edges, "--edges", &name)?;
            rec.input(e);
            let (edges, n) = io::read_edges(e)?;
            meta.insert("nodes".into(), json!(n));
            metrics::graph_metric(&edges, n)?
        }
        Generator::Geodesic => {
            meta.insert("k".into(), json!(a.k));
            metrics::knn_geodesic_metric(&read_points(&mut rec)?, a.k)?
        }
        Generator::Missing => {
            let pc = read_points(&mut rec)?;
            let seed = seed_or_draw(a.seed, &mut rec);
            let mask = metrics::random_mask(pc.len(), pc.dim(), a.drop_fraction, seed)?;
            let observed = mask.iter().filter(|&&b| b).count();
            meta.insert("seed".into(), json!(seed));
            meta.insert("drop_fraction".into(), json!(a.drop_fraction));
            meta.insert("observed_fraction".into(), json!(observed as f64 / mask.len() as f64));
            metrics::missing_data_metric(&MaskedPointCloud::new(pc, mask)?)?
        }
        Generator::PerturbPost | Generator::PerturbPre => {
            let (d, snr) = perturb_input(&mut rec)?;
            let seed = seed_or_draw(a.seed, &mut rec);
            let p = if a.generator == Generator::PerturbPost {
                metrics::perturb_post_square(&d, snr, seed)?
            } else {
                metrics::perturb_pre_square(&d, snr, seed)?
            };
            meta.insert("seed".into(), json!(seed));
            meta.insert("snr_target".into(), json!(snr));
            meta.insert("snr_achieved".into(), json!(p.achieved_snr));
            p.matrix
        }
    };
    meta.insert("n".into(), json!(d.n()));
    meta.insert("negative_entries".into(), json!(d.negative_entries()));
    meta.insert("edm_status".into(), status_json(&d)?);
    meta.insert("parameters".into(), serde_json::to_value(a)?);

    rec.write(&a.out, io::format_table(d.matrix()).as_bytes())?;
    rec.write_json(&sidecar_path(&a.out), &meta)?;
    rec.finish(&parent_dir(&a.out))
}

trait ValueName {
    fn to_possible_value_name(&self) -> String;
}

impl<T: clap::ValueEnum> ValueName for T {
    fn to_possible_value_name(&self) -> String {
        self.to_possible_value()
            .map(|v| v.get_name().to_string())
            .unwrap_or_default()
    }
}

pub fn embed(a: &EmbedArgs) -> CliResult<()> {
    let mut rec = Recorder::new("embed", a)?;
    let d = load(&a.input, &mut rec)?;
    let r = a.dim;
    let mut summary = Metadata::new();
    summary.insert("method".into(), json!(a.method.to_possible_value_name()));
    summary.insert("r".into(), json!(r));
    summary.insert("n".into(), json!(d.n()));

    let mut extra: Vec<(&str, nalgebra::DMatrix<f64>)> = Vec::new();
    let result = match a.method {
        EmbedMethod::Cmds => cmds(&d, r)?,
        EmbedMethod::LowerCmds => {
            let p = project_onto_kappa(&d, r)?;
            summary.insert("lower_bound".into(), json!(p.objective));
            extra.push(("d_l.csv", p.d_l.clone()));
            embed_projection(&p, r)?
        }
        EmbedMethod::Sstress => {
            let t = solve_sstress(&d, r, &solver_config(&a.solver)?)?;
            summary.insert("iterations".into(), json!(t.iterations));
            summary.insert("converged".into(), json!(t.converged));
            if !t.converged && !a.allow_unconverged {
                return Err(Failure::new(
                    code::NOT_CONVERGED,
                    format!(
                        "SSTRESS solver did not reach tolerance {} in {} rounds (pass --allow-unconverged to keep the result)",
                        a.solver.tolerance, t.iterations
                    ),
                ));
            }
            edmkit::cmds_symmetric(&t.d_t, r)?
        }
    };
    let objective = result.sstress(d.matrix());
    summary.insert("objective".into(), json!(objective));
    summary.insert(
        "relative_error".into(),
        json!(objective / d.frobenius_norm().powi(2)),
    );
    summary.insert("kept_count".into(), json!(result.kept_count));

    ensure_dir(&a.out)?;
    rec.write(
        &a.out.join("embedding.csv"),
        io::format_table(result.embedding.coords()).as_bytes(),
    )?;
    rec.write(&a.out.join("edm.csv"), io::format_table(result.d_cmds.matrix()).as_bytes())?;
    for (name, m) in &extra {
        rec.write(&a.out.join(name), io::format_table(m).as_bytes())?;
    }
    rec.write_json(&a.out.join("summary.json"), &summary)?;
    println!("objective {objective}");
    rec.finish(&a.out)
}

pub fn decompose(a: &DecomposeArgs) -> CliResult<()> {
    let mut rec = Recorder::new("decompose", a)?;
    let d = load(&a.input, &mut rec)?;
    let (lo, hi) = parse_dims(a.dims.as_deref(), d.n())?;
    let rows = decomposition_table(&d, lo, hi)?;
    rec.write(&a.out, io::format_decomposition(&rows).as_bytes())?;
    let totals: Vec<_> = rows.iter().map(|r| r.decomposition).collect();
    let tol = 1e-9 * (1.0 + d.frobenius_norm().powi(2));
    match first_increase(&totals, tol) {
        Some(r) => println!("{r}"),
        None => println!("no increase detected"),
    }
    rec.finish(&parent_dir(&a.out))
}

pub fn relerr(a: &RelerrArgs) -> CliResult<()> {
    let mut rec = Recorder::new("eval relerr", a)?;
    let other = load(&a.input, &mut rec)?;
    let reference = read_matrix_file(&a.reference, a.input.sqrt_input, &mut rec)?;
    let e = eval::relative_error(reference.matrix(), other.matrix())?;
    rec.write(&a.out, format!("relative_error\n{e}\n").as_bytes())?;
    println!("{e}");
    rec.finish(&parent_dir(&a.out))
}

pub fn sweep(a: &SweepArgs) -> CliResult<()> {
    let mut rec = Recorder::new("eval sweep", a)?;
    let d = load(&a.input, &mut rec)?;
    let original = a
        .original
        .as_ref()
        .map(|p| read_matrix_file(p, a.input.sqrt_input, &mut rec))
        .transpose()?;
    let methods = parse_methods(&a.method)?;
    let (lo, hi) = parse_dims(a.dims.as_deref(), d.n())?;
    let cfg = SweepConfig {
        sstress: solver_config(&a.solver)?,
        sstress_max_n: a.sstress_max_n,
        parallel: true,
    };
    let report = run_sweep(&d, &methods, lo, hi, original.as_ref(), &cfg)?;
    for row in report.rows.iter().filter(|r| r.error.is_some()) {
        log::warn!("{} at r = {}: {}", row.method, row.r, row.error.as_deref().unwrap_or(""));
    }
    rec.write(&a.out, io::format_sweep(&report).as_bytes())?;
    rec.finish(&parent_dir(&a.out))
}

pub fn knn(a: &KnnArgs) -> CliResult<()> {
    let mut rec = Recorder::new("eval knn", a)?;
    let d = load(&a.input, &mut rec)?;
    rec.input(&a.labels);
    let labels = io::read_labels(&a.labels)?;
    if labels.len() != d.n() {
        return Err(Failure::domain(format!(
            "labels file {} has {} labels but the matrix has {} points",
            a.labels.display(),
            labels.len(),
            d.n()
        )));
    }
    if let Some(s) = a.seed {
        rec.seed(s);
    }
    let methods = parse_methods(&a.method)?;
    if let Some(m) = methods.iter().find(|m| !m.embeds()) {
        return Err(Failure::usage(format!("{m} does not produce an embedding")));
    }
    let (lo, hi) = parse_dims(a.dims.as_deref(), d.n())?;
    let cfg = SweepConfig {
        sstress: solver_config(&a.solver)?,
        ..SweepConfig::default()
    };
    let embeddings = sweep_embeddings(&d, &methods, lo, hi, &cfg)?;
    let report = knn_classify(&embeddings, &labels, a.seed, a.train_fraction)?;
    rec.write(&a.out, io::format_knn(&report).as_bytes())?;
    rec.finish(&parent_dir(&a.out))
}
