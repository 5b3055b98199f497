use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use mpx_core::{
    check_condition, generate, implies_structure, pinv_block, pinv_oracle, pinv_xn, pinv_xny, pinv_xny_baseline,
    pinv_xny_hermitian, pinv_xny_oracle, pinv_ny, structure_report_x, structure_report_y, svd, CMatrix,
    ConditionId, ConditionSearch, Error, Flavor, InstanceSpec, Method, Mode, PinvOptions, PinvResult, Side,
    SvdFactors, Tolerance,
};
use serde::Serialize;

use crate::mmio::{read_matrix, write_matrix, write_matrix_with_comments, MmError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_HYPOTHESIS: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "mpx", version, about = "Moore-Penrose inverses of structured products X N Y")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute a pseudo-inverse by the chosen method.
    Pinv(PinvArgs),
    /// Check the structural conditions for X or Y.
    Check(CheckArgs),
    /// Generate a seeded instance (N, X, Y) as Matrix Market files.
    Gen(GenArgs),
    /// Time the two-sided formula against the SVD oracle.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct PinvArgs {
    #[arg(long = "n", value_name = "FILE")]
    n: PathBuf,
    /// Defaults to the identity.
    #[arg(long = "x", value_name = "FILE")]
    x: Option<PathBuf>,
    /// Defaults to the identity.
    #[arg(long = "y", value_name = "FILE")]
    y: Option<PathBuf>,
    /// oracle | lemma21 | thm31-xn | thm31-ny | thm33 | cor34 | cgms11
    #[arg(long, default_value = "thm33")]
    method: String,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, overrides_with = "permissive")]
    strict: bool,
    /// Report failed hypothesis checks instead of aborting.
    #[arg(long, overrides_with = "strict")]
    permissive: bool,
    /// Block cut `ROWS,COLS` splitting `--n` into [[A, C], [B, D]] (lemma21).
    #[arg(long, value_name = "ROWS,COLS")]
    cut: Option<String>,
    /// Rank cutoff for N relative to its largest singular value.
    #[arg(long)]
    rank_tol: Option<f64>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Report destination; stdout when absent.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
    /// Also compute the SVD oracle and report the relative distance to it.
    #[arg(long)]
    verify: bool,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("side").required(true).args(["x", "y"])))]
struct CheckArgs {
    #[arg(long = "n", value_name = "FILE")]
    n: PathBuf,
    #[arg(long = "x", value_name = "FILE")]
    x: Option<PathBuf>,
    #[arg(long = "y", value_name = "FILE")]
    y: Option<PathBuf>,
    /// Comma-separated ids such as `C1,C6`; all seven of the side by default.
    #[arg(long, value_delimiter = ',')]
    conditions: Vec<String>,
    #[arg(long, default_value_t = 8)]
    k_max: u32,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long)]
    rank_tol: Option<f64>,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long = "m")]
    m: usize,
    #[arg(long = "n")]
    n: usize,
    #[arg(long = "r")]
    r: usize,
    #[arg(long, default_value_t = 10.0)]
    cond: f64,
    /// a1a2 | hermitian_fix | projector_fix | condition:C3 | violate_a1 | violate_a2
    #[arg(long)]
    flavor: String,
    #[arg(long, env = "MPX_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "32,64,128")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    trials: usize,
    #[arg(long, env = "MPX_SEED", default_value_t = 0)]
    seed: u64,
    /// sigma_1 / sigma_r of the generated N.
    #[arg(long, default_value_t = 100.0)]
    cond: f64,
    #[arg(long, value_name = "FILE")]
    csv: PathBuf,
}

/// A failure carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<MmError> for Failure {
    fn from(e: MmError) -> Self {
        Self {
            code: EXIT_IO,
            message: e.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::HypothesisViolation { .. } | Error::Singular { .. } => EXIT_HYPOTHESIS,
            Error::Infeasible(_) => EXIT_INFEASIBLE,
            Error::InvalidArgument(_) => EXIT_USAGE,
            _ => EXIT_IO,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_IO,
        message: format!("{}: {e}", path.display()),
    }
}

fn tolerance(v: f64, flag: &str) -> Result<Tolerance, Failure> {
    Tolerance::try_new(v).map_err(|_| Failure::usage(format!("{flag} must be finite and nonnegative, got {v}")))
}

fn factor(n: &CMatrix, rank_tol: Option<f64>) -> Result<SvdFactors, Failure> {
    let over = rank_tol.map(|t| tolerance(t, "--rank-tol")).transpose()?;
    Ok(svd(n, over)?)
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| io_failure(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code. Messages go to stdout and stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let outcome = match cli.command {
        Command::Pinv(a) => cmd_pinv(a),
        Command::Check(a) => cmd_check(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("mpx: error: {}", f.message);
            f.code
        }
    }
}

fn parse_cut(s: &str) -> Result<(usize, usize), Failure> {
    let bad = || Failure::usage(format!("--cut expects ROWS,COLS, got `{s}`"));
    let (r, c) = s.split_once(',').ok_or_else(bad)?;
    Ok((r.trim().parse().map_err(|_| bad())?, c.trim().parse().map_err(|_| bad())?))
}

fn off_block_summary(x: Option<&CMatrix>, y: Option<&CMatrix>, n_svd: &SvdFactors, tol: Tolerance) -> String {
    let mut s = String::new();
    if let Some(x) = x {
        if let Ok(rep) = structure_report_x(x, n_svd, tol) {
            let _ = write!(s, "\nX off-block norm: {:.6e} (relative {:.3e})", rep.off_block_norm, rep.relative_off_block());
        }
    }
    if let Some(y) = y {
        if let Ok(rep) = structure_report_y(y, n_svd, tol) {
            let _ = write!(s, "\nY off-block norm: {:.6e} (relative {:.3e})", rep.off_block_norm, rep.relative_off_block());
        }
    }
    s
}

fn cmd_pinv(a: PinvArgs) -> Result<(), Failure> {
    let method: Method = a
        .method
        .parse()
        .map_err(|_| Failure::usage(format!("unknown method `{}`", a.method)))?;
    let tol = tolerance(a.tol, "--tol")?;
    let opts = PinvOptions {
        tol,
        mode: if a.permissive { Mode::Permissive } else { Mode::Strict },
    };
    let n = read_matrix(&a.n)?;
    let x = a.x.as_ref().map(read_matrix).transpose()?;
    let y = a.y.as_ref().map(read_matrix).transpose()?;

    if method == Method::Block {
        if x.is_some() || y.is_some() {
            return Err(Failure::usage("lemma21 takes the block matrix through --n only"));
        }
        let cut = a.cut.as_deref().ok_or_else(|| Failure::usage("lemma21 needs --cut ROWS,COLS"))?;
        let (rc, cc) = parse_cut(cut)?;
        let b = n.block_split(rc, cc)?;
        let res = pinv_block(&b.a11, &b.a21, &b.a12, &b.a22, &opts)?;
        return finish_pinv(&a, &res, &n);
    }
    match method {
        Method::LeftProduct if y.is_some() => return Err(Failure::usage("thm31-xn does not take --y")),
        Method::RightProduct if x.is_some() => return Err(Failure::usage("thm31-ny does not take --x")),
        _ => {}
    }
    if a.cut.is_some() {
        return Err(Failure::usage("--cut applies to lemma21 only"));
    }
    let x = x.unwrap_or_else(|| CMatrix::identity(n.rows()));
    let y = y.unwrap_or_else(|| CMatrix::identity(n.cols()));
    let n_svd = factor(&n, a.rank_tol)?;

    let computed = match method {
        Method::Oracle => pinv_xny_oracle(&x, &n, &y),
        Method::LeftProduct => pinv_xn(&x, &n, &n_svd, &opts),
        Method::RightProduct => pinv_ny(&n, &y, &n_svd, &opts),
        Method::TwoSided => pinv_xny(&x, &n, &y, &n_svd, &opts),
        Method::TwoSidedHermitian => pinv_xny_hermitian(&x, &n, &y, &n_svd, &opts),
        Method::ProjectorFixing => pinv_xny_baseline(&x, &n, &y, &n_svd, &opts),
        Method::Block => unreachable!("handled above"),
    };
    let res = computed.map_err(|e| {
        let hypothesis = matches!(e, Error::HypothesisViolation { .. });
        let mut f = Failure::from(e);
        if hypothesis {
            let xs = matches!(method, Method::LeftProduct | Method::TwoSided).then_some(&x);
            let ys = matches!(method, Method::RightProduct | Method::TwoSided).then_some(&y);
            f.message.push_str(&off_block_summary(xs, ys, &n_svd, tol));
        }
        f
    })?;
    let source = match method {
        Method::LeftProduct => &x * &n,
        Method::RightProduct => &n * &y,
        _ => &(&x * &n) * &y,
    };
    finish_pinv(&a, &res, &source)
}

fn finish_pinv(a: &PinvArgs, res: &PinvResult, source: &CMatrix) -> Result<(), Failure> {
    let mut report = String::new();
    let _ = writeln!(report, "method: {}", res.method.tag());
    let _ = writeln!(report, "shape: {} {}", res.z.rows(), res.z.cols());
    for c in &res.hypothesis_checks {
        let verdict = if c.passed { "passed" } else { "failed" };
        let _ = writeln!(report, "check: {verdict} {:.6e} {}", c.residual, c.name);
    }
    let r = &res.residuals;
    let _ = writeln!(report, "res_a: {:.6e}", r.r_a);
    let _ = writeln!(report, "res_b: {:.6e}", r.r_b);
    let _ = writeln!(report, "res_c: {:.6e}", r.r_c);
    let _ = writeln!(report, "res_d: {:.6e}", r.r_d);
    if a.verify {
        let oracle = pinv_oracle(source, None)?;
        let _ = writeln!(report, "oracle_distance: {:.6e}", res.z.rel_distance(&oracle)?);
    }
    if let Some(out) = &a.out {
        write_matrix(out, &res.z)?;
    }
    write_text(a.report.as_deref(), &report)
}

fn cmd_check(a: CheckArgs) -> Result<(), Failure> {
    let tol = tolerance(a.tol, "--tol")?;
    if a.k_max < 1 {
        return Err(Failure::usage("--k-max must be at least 1"));
    }
    let (side, path) = match (&a.x, &a.y) {
        (Some(p), None) => (Side::X, p),
        (None, Some(p)) => (Side::Y, p),
        _ => return Err(Failure::usage("give exactly one of --x, --y")),
    };
    let ids: Vec<ConditionId> = if a.conditions.is_empty() {
        ConditionId::for_side(side).to_vec()
    } else {
        a.conditions
            .iter()
            .map(|s| s.parse::<ConditionId>().map_err(|_| Failure::usage(format!("unknown condition `{s}`"))))
            .collect::<Result<_, _>>()?
    };
    if let Some(bad) = ids.iter().find(|id| id.side() != side) {
        return Err(Failure::usage(format!("condition {bad} does not apply to {}", side.name())));
    }

    let n = read_matrix(&a.n)?;
    let m = read_matrix(path)?;
    let n_svd = factor(&n, a.rank_tol)?;
    let report = match side {
        Side::X => structure_report_x(&m, &n_svd, tol)?,
        Side::Y => structure_report_y(&m, &n_svd, tol)?,
    };
    let search = ConditionSearch { k_max: a.k_max, tol };
    let mut out = String::new();
    for id in ids {
        let v = check_condition(id, &m, &n_svd, &search)?;
        let (k, l, c) = match v.witness {
            Some(w) => (
                w.k.to_string(),
                w.l.map_or("-".into(), |l| l.to_string()),
                w.c.map_or("-".into(), |c| format!("{:.6e}{:+.6e}i", c.re, c.im)),
            ),
            None => ("-".into(), "-".into(), "-".into()),
        };
        let consistent = implies_structure(&v, &report)?;
        let _ = writeln!(
            out,
            "{id} holds={} residual={:.6e} k={k} l={l} c={c} implies_structure={consistent}",
            v.holds, v.residual
        );
    }
    let _ = writeln!(
        out,
        "structure side={} off_block_norm={:.6e} relative={:.6e} satisfied={}",
        side.name(),
        report.off_block_norm,
        report.relative_off_block(),
        report.satisfied
    );
    print!("{out}");
    Ok(())
}

fn cmd_gen(a: GenArgs) -> Result<(), Failure> {
    let flavor: Flavor = a.flavor.parse().map_err(|e: Error| Failure::usage(e.to_string()))?;
    let spec = InstanceSpec::new(a.m, a.n, a.r, a.cond, flavor, a.seed);
    let inst = generate(&spec)?;
    fs::create_dir_all(&a.out_dir).map_err(|e| io_failure(&a.out_dir, e))?;

    let sidecar = toml::to_string(&spec).map_err(|e| io_failure(&a.out_dir, e))?;
    let comments: Vec<String> = sidecar.lines().map(|l| format!("spec {l}")).collect();
    write_matrix_with_comments(a.out_dir.join("N.mtx"), &inst.n_matrix, &comments)?;
    write_matrix_with_comments(a.out_dir.join("X.mtx"), &inst.x, &comments)?;
    write_matrix_with_comments(a.out_dir.join("Y.mtx"), &inst.y, &comments)?;
    let spec_path = a.out_dir.join("spec.toml");
    fs::write(&spec_path, sidecar).map_err(|e| io_failure(&spec_path, e))?;

    for w in &inst.warnings {
        eprintln!("mpx: warning: {w}");
    }
    println!("wrote N.mtx, X.mtx, Y.mtx, spec.toml to {}", a.out_dir.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct BenchRecord {
    method: &'static str,
    m: usize,
    n: usize,
    r: usize,
    wall_time_s: f64,
    res_a: f64,
    res_b: f64,
    res_c: f64,
    res_d: f64,
    oracle_distance: f64,
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64().max(1e-9))
}

fn cmd_bench(a: BenchArgs) -> Result<(), Failure> {
    if a.trials == 0 {
        return Err(Failure::usage("--trials must be at least 1"));
    }
    if a.sizes.is_empty() || a.sizes.contains(&0) {
        return Err(Failure::usage("--sizes must list positive sizes"));
    }
    let mut writer = csv::Writer::from_path(&a.csv).map_err(|e| io_failure(&a.csv, e))?;
    let opts = PinvOptions::default();
    for (si, &size) in a.sizes.iter().enumerate() {
        let r = size.div_ceil(2);
        let mut times = [0.0f64; 2];
        let mut worst = 0.0f64;
        for t in 0..a.trials {
            let seed = a.seed.wrapping_mul(1_000_003).wrapping_add((si * a.trials + t) as u64);
            let inst = generate(&InstanceSpec::new(size, size, r, a.cond, Flavor::A1A2, seed))?;
            let (oracle, t_oracle) = timed(|| pinv_xny_oracle(&inst.x, &inst.n_matrix, &inst.y));
            let oracle = oracle?;
            let (fast, t_fast) = timed(|| {
                let n_svd = svd(&inst.n_matrix, None)?;
                pinv_xny(&inst.x, &inst.n_matrix, &inst.y, &n_svd, &opts)
            });
            let fast = fast?;
            let dist = fast.z.rel_distance(&oracle.z)?;
            worst = worst.max(dist);
            times[0] += t_fast;
            times[1] += t_oracle;
            for (res, time, d) in [(&fast, t_fast, dist), (&oracle, t_oracle, 0.0)] {
                writer
                    .serialize(BenchRecord {
                        method: res.method.tag(),
                        m: size,
                        n: size,
                        r,
                        wall_time_s: time,
                        res_a: res.residuals.r_a,
                        res_b: res.residuals.r_b,
                        res_c: res.residuals.r_c,
                        res_d: res.residuals.r_d,
                        oracle_distance: d,
                    })
                    .map_err(|e| io_failure(&a.csv, e))?;
            }
        }
        let k = a.trials as f64;
        println!(
            "size={size} thm33_mean_wall_time_s={:.6e} oracle_mean_wall_time_s={:.6e} max_oracle_distance={worst:.3e}",
            times[0] / k,
            times[1] / k
        );
    }
    writer.flush().map_err(|e| io_failure(&a.csv, e))?;
    Ok(())
}
