use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use rayon::prelude::*;
use serde_json::{json, Value};

use qprelax::analysis::fmt_sig12;
use qprelax::conic::CertificateOutcome;
use qprelax::generators::{horn_certificate, horn_integer_data, GeneratedInstance};
use qprelax::{
    analyze_recession_cone, check_copositivity_desk_scale, check_psd_on_nullspace, compare_report, detect_unbounded,
    global_solve, horn_family, load_vector, random_instance, recession_certificate_search, sample_envelope,
    verify_certificate, verify_local_minimizer, write_envelope_csv, CertificateMode, ConeKind, HornFamilyParams,
    LoadOptions, OracleOptions, QpError, QpInstance, RandomKind, RelaxationContext, SolveOptions,
};

#[derive(Parser, Debug)]
#[command(name = "qprelax", version, about = "Conic relaxations of nonconvex quadratic programs")]
struct Cli {
    /// Solver tolerance (primal and dual residuals); also used by localmin.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Iteration limit for the splitting solver.
    #[arg(long, global = true)]
    max_iter: Option<usize>,

    /// Emit machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,

    /// Worker threads for batch directories.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    /// Replace an asymmetric Q by (Q + Q')/2 instead of rejecting it.
    #[arg(long, global = true)]
    symmetrize: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Structural analysis: recession cone, nullspace curvature, copositivity.
    Analyze { path: PathBuf },
    /// Solve the lifted relaxation, optionally pinned at a point.
    Solve {
        #[arg(long, default_value = "dnn")]
        cone: ConeKind,
        /// JSON array with the point at which to evaluate the underestimator.
        #[arg(long)]
        at: Option<PathBuf>,
        path: PathBuf,
    },
    /// Search for a recession certificate of the lifted feasible set.
    Certificate {
        #[arg(long, default_value = "dnn")]
        cone: ConeKind,
        #[arg(long, default_value = "objective")]
        mode: CertificateMode,
        path: PathBuf,
    },
    /// Exact global optimum by face enumeration.
    Oracle { path: PathBuf },
    /// First- and second-order local minimality test.
    Localmin {
        #[arg(long)]
        at: PathBuf,
        path: PathBuf,
    },
    /// Write generated instances and their metadata.
    Generate(GenerateArgs),
    /// Sample the underestimator along a segment as CSV.
    Envelope {
        #[arg(long, default_value = "dnn")]
        cone: ConeKind,
        #[arg(long)]
        from: PathBuf,
        #[arg(long)]
        to: PathBuf,
        #[arg(long, default_value_t = 11)]
        samples: usize,
        path: PathBuf,
    },
    /// Full comparison report.
    Compare { path: PathBuf },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
#[allow(clippy::enum_variant_names)]
enum Family {
    Horn,
    HornFamily,
    Random,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    family: Family,
    #[arg(long, default_value_t = 5)]
    n: usize,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "bounded")]
    kind: RandomKind,
    #[arg(long)]
    out: PathBuf,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Input(String),
    DeskScale(String),
    Numeric(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::DeskScale(_) => 3,
            Failure::Numeric(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::DeskScale(m) | Failure::Numeric(m) => m,
        }
    }
}

impl From<QpError> for Failure {
    fn from(e: QpError) -> Self {
        let msg = e.to_string();
        match e {
            QpError::DeskScaleLimit { .. } => Failure::DeskScale(msg),
            QpError::NonFinite(_) | QpError::GenerationFailed { .. } => Failure::Numeric(msg),
            _ => Failure::Input(msg),
        }
    }
}

type Outcome = std::result::Result<(String, Value), Failure>;

struct Ctx {
    solve: SolveOptions,
    oracle: OracleOptions,
    load: LoadOptions,
    tol: Option<f64>,
}

impl Ctx {
    fn load(&self, path: &Path) -> std::result::Result<QpInstance, Failure> {
        let inst = QpInstance::load(path, self.load).map_err(|e| Failure::Input(e.to_string()))?;
        for w in inst.warnings() {
            log::warn!("{}: {w}", path.display());
        }
        Ok(inst)
    }

    fn load_point(&self, path: &Path, inst: &QpInstance) -> std::result::Result<DVector<f64>, Failure> {
        let x = load_vector(path).map_err(|e| Failure::Input(e.to_string()))?;
        if x.len() != inst.n() {
            return Err(Failure::Input(format!(
                "{} has length {} but the instance has n = {}",
                path.display(),
                x.len(),
                inst.n()
            )));
        }
        Ok(x)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let mut solve = SolveOptions::default();
    if let Some(t) = cli.tol {
        solve.tol_primal = t;
        solve.tol_dual = t;
    }
    if let Some(k) = cli.max_iter {
        solve.max_iterations = k;
    }
    let ctx = Ctx {
        solve,
        oracle: solve.oracle,
        load: LoadOptions {
            symmetrize: cli.symmetrize,
        },
        tol: cli.tol,
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.max(1)).build();
    let result = match pool {
        Ok(pool) => pool.install(|| dispatch(&cli, &ctx)),
        Err(e) => Err(Failure::Numeric(e.to_string())),
    };
    match result {
        Ok(outputs) => {
            let mut worst = 0u8;
            for (file, out) in &outputs {
                match out {
                    Ok((text, value)) => emit(cli.json, file.as_deref(), text, value),
                    Err(f) => {
                        worst = worst.max(f.code());
                        match file {
                            Some(p) => eprintln!("error: {}: {}", p.display(), f.message()),
                            None => eprintln!("error: {}", f.message()),
                        }
                    }
                }
            }
            ExitCode::from(worst)
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn emit(json_mode: bool, file: Option<&Path>, text: &str, value: &Value) {
    if json_mode {
        let mut v = value.clone();
        if let (Some(p), Value::Object(map)) = (file, &mut v) {
            map.insert("file".into(), json!(p.display().to_string()));
        }
        println!("{}", serde_json::to_string_pretty(&v).unwrap_or_default());
    } else {
        if let Some(p) = file {
            println!("== {}", p.display());
        }
        print!("{text}");
        if !text.ends_with('\n') {
            println!();
        }
    }
}

type Batch = Vec<(Option<PathBuf>, Outcome)>;

/// Runs `f` on a single file, or on every instance file of a directory.
fn per_instance(path: &Path, f: impl Fn(&Path) -> Outcome + Sync) -> std::result::Result<Batch, Failure> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension().is_some_and(|x| x == "json")
                    && !p.file_name().is_some_and(|n| n.to_string_lossy().ends_with(".meta.json"))
            })
            .collect();
        files.sort();
        Ok(files.par_iter().map(|p| (Some(p.clone()), f(p))).collect())
    } else {
        Ok(vec![(None, f(path))])
    }
}

fn dispatch(cli: &Cli, ctx: &Ctx) -> std::result::Result<Batch, Failure> {
    match &cli.command {
        Command::Analyze { path } => per_instance(path, |p| analyze(ctx, p)),
        Command::Oracle { path } => per_instance(path, |p| oracle(ctx, p)),
        Command::Compare { path } => per_instance(path, |p| compare(ctx, p)),
        Command::Solve { cone, at, path } => Ok(vec![(None, solve(ctx, *cone, at.as_deref(), path))]),
        Command::Certificate { cone, mode, path } => Ok(vec![(None, certificate(ctx, *cone, *mode, path))]),
        Command::Localmin { at, path } => Ok(vec![(None, localmin(ctx, at, path))]),
        Command::Generate(args) => Ok(vec![(None, generate(args))]),
        Command::Envelope {
            cone,
            from,
            to,
            samples,
            path,
        } => Ok(vec![(None, envelope(ctx, *cone, from, to, *samples, path))]),
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> std::result::Result<Value, Failure> {
    serde_json::to_value(v).map_err(|e| Failure::Numeric(e.to_string()))
}

fn fmt_vec(v: &DVector<f64>) -> String {
    let parts: Vec<String> = v.iter().map(|x| fmt_sig12(*x)).collect();
    format!("[{}]", parts.join(", "))
}

fn analyze(ctx: &Ctx, path: &Path) -> Outcome {
    let inst = ctx.load(path)?;
    let nullspace = check_psd_on_nullspace(&inst, 1e-9)?;
    let recession = analyze_recession_cone(&inst, &ctx.oracle)?;
    let unbounded = detect_unbounded(&inst, &ctx.oracle)?;
    let copositivity = check_copositivity_desk_scale(inst.q(), &ctx.oracle)?;
    let mut text = format!("instance {} (n = {}, m = {})\n", inst.name(), inst.n(), inst.m());
    text += &format!(
        "Q psd on nullspace of A: {} (min eigenvalue {}, tol {:.1e})\n",
        nullspace.holds,
        fmt_sig12(nullspace.min_eigenvalue),
        nullspace.tolerance
    );
    if let Some(w) = &nullspace.witness {
        text += &format!("  negative-curvature direction {}\n", fmt_vec(w));
    }
    text += &format!(
        "recession cone nontrivial: {}; min curvature {} (tol {:.1e})\n",
        recession.l_nontrivial,
        recession.min_curvature.map_or("n/a".into(), fmt_sig12),
        recession.tolerance
    );
    text += &format!("unboundedness below: {:?}\n", unbounded.status);
    if let Some(d) = &unbounded.direction {
        text += &format!("  direction {}\n", fmt_vec(d));
    }
    text += &format!(
        "Q copositive: {} (simplex minimum {}, tol {:.1e})\n",
        copositivity.copositive,
        fmt_sig12(copositivity.min_value),
        copositivity.tolerance
    );
    let value = json!({
        "instance": {"name": inst.name(), "n": inst.n(), "m": inst.m()},
        "nullspace": to_value(&nullspace)?,
        "recession": to_value(&recession)?,
        "unboundedness": to_value(&unbounded)?,
        "copositivity": to_value(&copositivity)?,
    });
    Ok((text, value))
}

fn oracle(ctx: &Ctx, path: &Path) -> Outcome {
    let inst = ctx.load(path)?;
    let r = global_solve(&inst, &ctx.oracle)?;
    let mut text = format!(
        "l* = {} ({:?}, attained: {}, faces explored: {}, tol {:.1e})\n",
        fmt_sig12(r.value),
        r.status,
        r.attained,
        r.faces_explored,
        ctx.oracle.tol
    );
    if let Some(f) = &r.finiteness {
        text += &format!("finiteness: {}\n", serde_json::to_string(f).unwrap_or_default());
    }
    if let Some(u) = &r.unboundedness {
        text += &format!("unboundedness below: {:?}\n", u.status);
    }
    for x in &r.minimizers {
        text += &format!("minimizer {}\n", fmt_vec(x));
    }
    Ok((text, to_value(&r)?))
}

fn solve(ctx: &Ctx, cone: ConeKind, at: Option<&Path>, path: &Path) -> Outcome {
    let inst = ctx.load(path)?;
    let rctx = RelaxationContext::new(&inst, cone, &ctx.solve)?;
    let r = match at {
        Some(p) => {
            let x = ctx.load_point(p, &inst)?;
            rctx.evaluate(&x)?
        }
        None => rctx.solve()?,
    };
    let mut text = format!(
        "{} relaxation{}: {} value {} (iterations {}, primal residual {:.2e}, dual residual {:.2e}, tol {:.1e})\n",
        cone,
        if at.is_some() { " at point" } else { "" },
        r.status,
        fmt_sig12(r.value),
        r.iterations,
        r.primal_residual,
        r.dual_residual,
        ctx.solve.tol_primal
    );
    text += &format!("certificate search: {}\n", r.certificate_search);
    if let Some(c) = &r.certificate {
        let check = verify_certificate(&inst, cone, &c.d, 1e-6)?;
        text += &format!(
            "certificate rate {} (trace {}, verified: {}, tol {:.1e})\n",
            fmt_sig12(c.objective_rate),
            fmt_sig12(c.trace_norm),
            check.valid(),
            check.tolerance
        );
    }
    if let Some(p) = &r.point {
        text += &format!("x = {}\n", fmt_vec(&p.x()));
    }
    Ok((text, to_value(&r)?))
}

fn certificate(ctx: &Ctx, cone: ConeKind, mode: CertificateMode, path: &Path) -> Outcome {
    let inst = ctx.load(path)?;
    let outcome = recession_certificate_search(&inst, cone, mode, &ctx.solve)?;
    let mut value = to_value(&outcome)?;
    let text = match &outcome {
        CertificateOutcome::Found { certificate, iterations } => {
            let check = verify_certificate(&inst, cone, &certificate.d, 1e-6)?;
            if let Value::Object(map) = &mut value {
                map.insert("verification".into(), to_value(&check)?);
            }
            format!(
                "certificate found after {iterations} iterations: rate {}, trace {}, verified: {} (tol {:.1e})\n",
                fmt_sig12(certificate.objective_rate),
                fmt_sig12(certificate.trace_norm),
                check.valid(),
                check.tolerance
            )
        }
        CertificateOutcome::None { reason, iterations } => {
            format!("no certificate ({reason}; {iterations} iterations)\n")
        }
        CertificateOutcome::Inconclusive { iterations, residual } => {
            format!("inconclusive after {iterations} iterations (residual {residual:.2e})\n")
        }
    };
    Ok((text, value))
}

fn localmin(ctx: &Ctx, at: &Path, path: &Path) -> Outcome {
    let inst = ctx.load(path)?;
    let x = ctx.load_point(at, &inst)?;
    let tol = ctx.tol.unwrap_or(1e-9);
    let v = verify_local_minimizer(&inst, &x, tol, &ctx.oracle)?;
    let mut text = format!(
        "local minimizer: {} (second-order minimum {}, tol {:.1e})\n",
        v.is_local_min,
        fmt_sig12(v.second_order_min),
        tol
    );
    match &v.kkt {
        Some(k) => {
            text += &format!("KKT multipliers y = {}, s = {}\n", fmt_vec(&k.y), fmt_vec(&k.s));
        }
        None => text += "KKT conditions fail\n",
    }
    Ok((text, to_value(&v)?))
}

fn write_generated(out: &Path, g: &GeneratedInstance) -> std::result::Result<(PathBuf, PathBuf), Failure> {
    fs::create_dir_all(out).map_err(|e| Failure::Input(format!("{}: {e}", out.display())))?;
    let file = out.join(format!("{}.json", g.instance.name()));
    let meta = out.join(format!("{}.meta.json", g.instance.name()));
    g.instance.save(&file)?;
    let text = serde_json::to_string_pretty(&g.metadata).map_err(|e| Failure::Numeric(e.to_string()))?;
    fs::write(&meta, text + "\n").map_err(|e| Failure::Input(format!("{}: {e}", meta.display())))?;
    Ok((file, meta))
}

fn generate(args: &GenerateArgs) -> Outcome {
    let g = match args.family {
        Family::Horn => {
            let data = horn_integer_data();
            let d = horn_certificate();
            let (qd, aad) = data.certificate_products(&d);
            let instance = data.to_instance("horn5")?;
            GeneratedInstance {
                metadata: json!({
                    "kind": "horn",
                    "n": 5,
                    "m": 1,
                    "certificate": {
                        "D": d,
                        "Q_dot_D": qd,
                        "A_D": data.a_times(&d),
                        "AtA_dot_D": aad,
                    },
                    "feasible_point": qprelax::generators::HORN_POINT,
                }),
                instance,
                integer: Some(data),
            }
        }
        Family::HornFamily => horn_family(&HornFamilyParams::new(args.n, args.seed))?,
        Family::Random => {
            let m = args.m.unwrap_or(match args.kind {
                RandomKind::ConvexOnNullspace => 2,
                _ => 1,
            });
            random_instance(args.kind, args.n, m, args.seed)?
        }
    };
    let (file, meta) = write_generated(&args.out, &g)?;
    let mut text = format!("wrote {} and {}\n", file.display(), meta.display());
    if let Some(cert) = g.metadata.get("certificate") {
        text += &format!("certificate {cert}\n");
    }
    Ok((text, json!({"instance": file.display().to_string(), "metadata": g.metadata})))
}

fn envelope(ctx: &Ctx, cone: ConeKind, from: &Path, to: &Path, samples: usize, path: &Path) -> Outcome {
    let inst = ctx.load(path)?;
    let a = ctx.load_point(from, &inst)?;
    let b = ctx.load_point(to, &inst)?;
    let rows = sample_envelope(&inst, cone, &a, &b, samples, &ctx.solve)?;
    let mut buf = Vec::new();
    write_envelope_csv(&rows, &mut buf)?;
    let text = String::from_utf8(buf).map_err(|e| Failure::Numeric(e.to_string()))?;
    Ok((text, json!({"cone": cone, "tolerance": ctx.solve.tol_primal, "rows": to_value(&rows)?})))
}

fn compare(ctx: &Ctx, path: &Path) -> Outcome {
    let inst = ctx.load(path)?;
    let report = compare_report(&inst, &ctx.solve)?;
    Ok((report.to_text(), to_value(&report)?))
}
