//! `symred`: batch verification front end. JSON in, JSON or CSV out.
//!
//! Exit codes: 0 pass, 1 criterion failure, 2 input error, 3 unsupported input.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use symred::bohr::{leq_z, transition, BohrElement, FreqModule, FreqTuple};
use symred::conn::{pullback_residual, to_gauge_field, wang_reduce, InvariantConnection};
use symred::curve::{classify, Curve, Gen, Symmetry};
use symred::hom::{classify_type, HomError};
use symred::measure::{factor_moments, lag_sample, LagFactorSpec, MeasureError};
use symred::rbar::image_table;
use symred::su2::{haar2, GroupElement2};
use symred::transport::{transport, transport_ode};
use symred::verify::{run_all, Config};

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Unsupported(_) => 3,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "symred", version, about = "Holonomies, Bohr data and measures for symmetry-reduced SU(2) connections")]
struct Cli {
    #[command(flatten)]
    run: RunFlags,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct RunFlags {
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Residual bound (caps the per-criterion bounds of verify-all).
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    /// Monte Carlo sample count.
    #[arg(long, global = true, default_value_t = 100_000)]
    samples: usize,
    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Holonomy of a connection along a curve, as a 2×2 complex matrix.
    Transport {
        #[arg(long)]
        conn: PathBuf,
        #[arg(long)]
        curve: PathBuf,
        /// `ode` adds the RK4 result and its distance to the reported holonomy.
        #[arg(long)]
        oracle: Option<String>,
        #[arg(long, default_value_t = 4096)]
        steps: usize,
    },
    /// Run every acceptance suite and report measured values against bounds.
    VerifyAll,
    /// Pullback residual of a connection under random elements of its symmetry group.
    Invariance {
        #[arg(long)]
        conn: PathBuf,
        #[arg(long, default_value_t = 200)]
        n: usize,
    },
    /// The reduced linear map of a connection at the origin.
    Wang {
        #[arg(long)]
        conn: PathBuf,
    },
    /// Curve class, or type of an orbit generator, under a symmetry.
    Classify {
        #[arg(long)]
        input: PathBuf,
    },
    /// Projections of a Bohr element, and the transition from a finer tuple.
    Bohr {
        #[arg(long)]
        input: PathBuf,
    },
    /// CSV of the circle-image data: n, a_n, dist_to_center, merge_bound.
    RbarImage {
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        nmax: i64,
    },
    /// CSV of sampled factor coordinates of an orbit-curve measure.
    MeasureSample {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        n: usize,
    },
}

/// `classify` input: a curve, or a base point with a generator.
#[derive(Deserialize)]
struct ClassifyInput {
    symmetry: Symmetry,
    #[serde(default)]
    curve: Option<Curve>,
    #[serde(default)]
    x: Option<[f64; 3]>,
    #[serde(default)]
    gen: Option<Gen>,
}

#[derive(Deserialize)]
struct BohrInput {
    module: FreqModule,
    element: Value,
    coarse: FreqTuple,
    #[serde(default)]
    fine: Option<FreqTuple>,
}

#[derive(Serialize)]
struct MatrixOut {
    /// Rows of [re, im] pairs.
    matrix: [[[f64; 2]; 2]; 2],
    element: [f64; 4],
}

fn matrix_out(g: &GroupElement2) -> MatrixOut {
    let m = g.to_matrix();
    MatrixOut { matrix: m.map(|row| row.map(|z| [z.re, z.im])), element: g.quat() }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn read_conn(path: &Path) -> Result<InvariantConnection> {
    let w: InvariantConnection = read_json(path)?;
    w.validate().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(w)
}

fn pretty(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("output values serialize") + "\n"
}

fn csv_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn hom_error(e: HomError) -> CliError {
    match e {
        HomError::UnverifiedStability(_) | HomError::UnsupportedPair(_) => CliError::Unsupported(e.to_string()),
        _ => CliError::Input(e.to_string()),
    }
}

/// The output text and whether the command's checks passed.
fn run(cli: &Cli) -> Result<(String, bool)> {
    let f = &cli.run;
    match &cli.cmd {
        Cmd::Transport { conn, curve, oracle, steps } => {
            let w = read_conn(conn)?;
            let c: Curve = read_json(curve)?;
            c.validate().map_err(|e| CliError::Input(e.to_string()))?;
            let h = transport(&w, &w.symmetry(), &c, *steps).map_err(|e| CliError::Unsupported(e.to_string()))?;
            let mut out = serde_json::to_value(matrix_out(&h)).expect("matrix serializes");
            let mut pass = true;
            match oracle.as_deref() {
                None => {}
                Some("ode") => {
                    let field = to_gauge_field(&w).map_err(|e| CliError::Unsupported(e.to_string()))?;
                    let ode = transport_ode(&field, &c, *steps);
                    let residual = h.max_entry_diff(&ode);
                    pass = residual <= f.tol;
                    out["ode"] = serde_json::to_value(matrix_out(&ode)).expect("matrix serializes");
                    out["ode_residual"] = json!(residual);
                }
                Some(other) => return Err(CliError::Input(format!("unknown oracle {other}"))),
            }
            Ok((pretty(&out), pass))
        }
        Cmd::VerifyAll => {
            if f.tol <= 0.0 || f.samples < 1000 {
                return Err(CliError::Input("need tol > 0 and samples ≥ 1000".into()));
            }
            let reports = run_all(&Config { seed: f.seed, tol: f.tol, samples: f.samples });
            let pass = reports.iter().all(|r| r.pass);
            Ok((pretty(&json!({ "pass": pass, "seed": f.seed, "criteria": reports })), pass))
        }
        Cmd::Invariance { conn, n } => {
            let w = read_conn(conn)?;
            let sym = w.symmetry();
            let mut rng = ChaCha8Rng::seed_from_u64(f.seed);
            let mut worst: f64 = 0.0;
            for _ in 0..*n {
                let g = sym.sample_element(&mut rng, 3.0);
                let [x, v, body] = [(); 3].map(|_| haar2(&mut rng).b);
                worst = worst.max(pullback_residual(&w, &g, x, &haar2(&mut rng), v, body));
            }
            let pass = worst <= f.tol;
            Ok((pretty(&json!({ "samples": n, "max_residual": worst, "bound": f.tol, "pass": pass })), pass))
        }
        Cmd::Wang { conn } => {
            let w = read_conn(conn)?;
            let psi = wang_reduce(&w, &w.symmetry()).map_err(|e| CliError::Unsupported(e.to_string()))?;
            let rows: Vec<Vec<f64>> = psi.row_iter().map(|r| r.iter().copied().collect()).collect();
            Ok((pretty(&json!({ "psi": rows })), true))
        }
        Cmd::Classify { input } => {
            let q: ClassifyInput = read_json(input)?;
            q.symmetry.validate().map_err(|e| CliError::Input(e.to_string()))?;
            let out = match (&q.curve, q.x, q.gen) {
                (Some(c), None, None) => {
                    c.validate().map_err(|e| CliError::Input(e.to_string()))?;
                    json!({ "class": classify(&q.symmetry, c) })
                }
                (None, Some(x), Some(g)) => json!({ "type": classify_type(&q.symmetry, x, &g).map_err(hom_error)? }),
                _ => return Err(CliError::Input("give either `curve` or both `x` and `gen`".into())),
            };
            Ok((pretty(&out), true))
        }
        Cmd::Bohr { input } => {
            let q: BohrInput = read_json(input)?;
            q.module.validate().map_err(|e| CliError::Input(e.to_string()))?;
            let psi = BohrElement::from_json(&q.module, &q.element).map_err(|e| CliError::Input(e.to_string()))?;
            let pairs = |zs: Vec<num_complex::Complex64>| zs.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>();
            let proj = psi.project(&q.coarse).map_err(|e| CliError::Unsupported(e.to_string()))?;
            let mut out = json!({ "projection": pairs(proj) });
            if let Some(fine) = &q.fine {
                let n = leq_z(&q.coarse, fine).ok_or_else(|| CliError::Unsupported("coarse tuple is not in the span of the fine one".into()))?;
                let via = transition(&n, &psi.project(fine).map_err(|e| CliError::Unsupported(e.to_string()))?);
                out["transition"] = json!(n);
                out["via_fine"] = json!(pairs(via));
            }
            Ok((pretty(&out), true))
        }
        Cmd::RbarImage { tau, r, nmax } => {
            if !(tau.is_finite() && *tau > 0.0 && r.is_finite() && *r > 0.0 && *nmax >= 1) {
                return Err(CliError::Input("need tau > 0, r > 0 and nmax ≥ 1".into()));
            }
            let mut s = String::from("n,a_n,dist_to_center,merge_bound\n");
            for row in image_table(*tau, *r, *nmax) {
                s += &format!("{},{},{},{}\n", row.n, csv_float(row.a_n), csv_float(row.dist_to_center), csv_float(row.merge_bound));
            }
            Ok((s, true))
        }
        Cmd::MeasureSample { spec, n } => {
            let spec: LagFactorSpec = read_json(spec)?;
            spec.sym.validate().map_err(|e| CliError::Input(e.to_string()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(f.seed);
            let measure_err = |e: MeasureError| match e {
                MeasureError::Hom(h) => hom_error(h),
                other => CliError::Input(other.to_string()),
            };
            let tags = spec.tags().map_err(measure_err)?;
            let mut header = vec!["sample".to_string()];
            for (j, t) in tags.iter().enumerate() {
                let width = match t {
                    symred::hom::TypeTag::T1 => 0,
                    symred::hom::TypeTag::T2 { .. } => 4,
                    symred::hom::TypeTag::T3 { .. } => 4,
                    symred::hom::TypeTag::T4 => 5,
                };
                header.extend((0..width).map(|k| format!("f{j}_{k}")));
            }
            let mut s = header.join(",") + "\n";
            for i in 0..*n {
                let pts = lag_sample(&spec, &mut rng).map_err(measure_err)?;
                let mut row = vec![i.to_string()];
                row.extend(pts.iter().flat_map(factor_moments).map(csv_float));
                s += &(row.join(",") + "\n");
            }
            Ok((s, true))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((text, pass)) => {
            let written = match &cli.run.out {
                Some(p) => fs::write(p, &text).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
                None => {
                    print!("{text}");
                    Ok(())
                }
            };
            match written {
                Ok(()) if pass => ExitCode::SUCCESS,
                Ok(()) => ExitCode::from(1),
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.code())
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
