//! Argument parsing and dispatch for the `tscale` binary.
//!
//! Exit codes: 0 on SCALED/IN (or a successful check), 1 on
//! NOT_IN_POLYTOPE/EPS_FAR (or a failed check), 2 on usage and input
//! errors, 3 on numeric failures.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};
use tensor_scaling::hwv::{self, EvalBudget};
use tensor_scaling::io::{self, num};
use tensor_scaling::oracle::{self, KroneckerQuery, MembershipVerdict};
use tensor_scaling::partition::Partition;
use tensor_scaling::reduction;
use tensor_scaling::scaling::{
    self, IdentityParam, Mode, MpsParam, OrbitParam, Parametrization, RandRange, ScalingConfig, ScalingReport,
    DEFAULT_RAND_RANGE,
};
use tensor_scaling::{Error, GroupTuple, TargetSpectrum, TensorFormat};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "tscale", version, about = "Tensor scaling to prescribed marginal spectra")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Scale a tensor to target marginal spectra.
    Scale(ScaleArgs),
    /// Scale a random point of a parametrized family.
    GeneralScale(GeneralArgs),
    /// Promise membership of the target in the moment polytope of a tensor.
    Membership(MembershipArgs),
    /// One-body quantum marginal problem for pure states.
    Qmp(QmpArgs),
    /// Asymptotic support of Kronecker coefficients.
    Kronecker(KroneckerArgs),
    /// Expand a tensor into the uniform-scaling reduction.
    Reduce(ReduceArgs),
    /// Evaluate a highest weight vector and check its transformation law.
    VerifyHwv(HwvArgs),
    /// Classical matrix scaling.
    Sinkhorn(SinkhornArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Borel,
    Parabolic,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, allow_negative_numbers = true)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// An integer range, `theoretical`, or `none`.
    #[arg(long, default_value_t = DEFAULT_RAND_RANGE.to_string())]
    rand_range: String,
    #[arg(long, value_enum, default_value_t = ModeArg::Borel)]
    mode: ModeArg,
    #[arg(long)]
    max_iters: Option<u64>,
    /// Omit per-iteration records from the report.
    #[arg(long)]
    no_trace: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScaleArgs {
    #[arg(long)]
    tensor: PathBuf,
    /// Spectrum file or `uniform`.
    #[arg(long)]
    target: String,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args)]
struct GeneralArgs {
    /// Matrix product state shape file `{"sites", "physical", "bond"}`.
    #[arg(long, conflicts_with_all = ["tensor", "dims"])]
    mps: Option<PathBuf>,
    /// Use the orbit of this tensor as the family.
    #[arg(long, conflicts_with = "dims")]
    tensor: Option<PathBuf>,
    /// Party dimensions of the full tensor space, e.g. `2,2,2`.
    #[arg(long)]
    dims: Option<String>,
    #[arg(long)]
    target: String,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args)]
struct MembershipArgs {
    #[arg(long)]
    tensor: PathBuf,
    #[arg(long)]
    target: String,
    #[arg(long, default_value_t = oracle::DEFAULT_REPEATS)]
    repeats: usize,
    /// Constant `C` of the gap threshold; the threshold is used as ε when
    /// `--epsilon` is absent.
    #[arg(long)]
    gap_constant_c: Option<f64>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args)]
struct QmpArgs {
    #[arg(long)]
    dims: String,
    #[arg(long)]
    target: String,
    #[arg(long, default_value_t = oracle::DEFAULT_REPEATS)]
    repeats: usize,
    #[arg(long)]
    gap_constant_c: Option<f64>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args)]
struct KroneckerArgs {
    #[arg(long)]
    lambda: String,
    #[arg(long)]
    mu: String,
    #[arg(long)]
    nu: String,
    /// Pad every partition to this many parts.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = oracle::DEFAULT_REPEATS)]
    repeats: usize,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args)]
struct ReduceArgs {
    #[arg(long)]
    tensor: PathBuf,
    /// One partition per party, separated by `;`, e.g. `2,1;3,1`.
    #[arg(long)]
    lambda: String,
    /// Apply `Λ^{-1/2}` on every party before expanding.
    #[arg(long)]
    normalized: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct HwvArgs {
    #[arg(long)]
    tensor: PathBuf,
    #[arg(long)]
    hwv: PathBuf,
    /// Random triangular elements for the transformation law check.
    #[arg(long, default_value_t = 20)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SinkhornArgs {
    /// `{"matrix": [[…]], "rows": […], "cols": […]}`; targets default to ones.
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    epsilon: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iters: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `argv` (including the program name) and runs the command.
pub fn parse_and_dispatch(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Singular(_) | Error::Numeric(_) => EXIT_NUMERIC,
        _ => EXIT_USAGE,
    }
}

type CliResult = tensor_scaling::Result<i32>;

fn dispatch(cmd: Command) -> CliResult {
    match cmd {
        Command::Scale(a) => scale(a),
        Command::GeneralScale(a) => general_scale(a),
        Command::Membership(a) => membership(a),
        Command::Qmp(a) => qmp(a),
        Command::Kronecker(a) => kronecker(a),
        Command::Reduce(a) => reduce(a),
        Command::VerifyHwv(a) => verify_hwv(a),
        Command::Sinkhorn(a) => sinkhorn(a),
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn emit(out: Option<&Path>, v: &Value) -> tensor_scaling::Result<()> {
    match out {
        Some(p) => io::write_json(p, v),
        None => {
            print!("{}", io::to_string(v));
            Ok(())
        }
    }
}

fn parse_rand_range(s: &str) -> tensor_scaling::Result<RandRange> {
    match s {
        "theoretical" => Ok(RandRange::Theoretical),
        "none" => Ok(RandRange::Disabled),
        _ => s
            .parse::<u64>()
            .map(RandRange::Practical)
            .map_err(|_| usage(format!("--rand-range expects an integer, `theoretical` or `none`, got {s:?}"))),
    }
}

fn config(run: &RunArgs, epsilon: Option<f64>) -> tensor_scaling::Result<ScalingConfig> {
    let epsilon = epsilon.ok_or_else(|| usage("--epsilon is required"))?;
    let mut cfg = ScalingConfig::new(epsilon)
        .with_seed(run.seed)
        .with_rand_range(parse_rand_range(&run.rand_range)?)
        .with_mode(match run.mode {
            ModeArg::Borel => Mode::Borel,
            ModeArg::Parabolic => Mode::Parabolic,
        });
    if let Some(m) = run.max_iters {
        cfg = cfg.with_max_iters(m);
    }
    if run.no_trace {
        cfg = cfg.without_trace();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_list(s: &str, what: &str) -> tensor_scaling::Result<Vec<usize>> {
    s.split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|_| usage(format!("{what}: bad entry {x:?} in {s:?}"))))
        .collect()
}

fn parse_partition(s: &str, what: &str) -> tensor_scaling::Result<Partition> {
    Partition::new(parse_list(s, what)?)
}

fn target_for(spec: &str, dims: &[usize]) -> tensor_scaling::Result<TargetSpectrum> {
    let p = if spec == "uniform" {
        TargetSpectrum::uniform(dims)
    } else {
        io::load_spectrum(Path::new(spec))?
    };
    if p.dims() != dims {
        return Err(Error::ShapeMismatch(format!("target dims {:?} do not match {:?}", p.dims(), dims)));
    }
    Ok(p)
}

fn report_code(r: &ScalingReport) -> i32 {
    if r.is_scaled() {
        EXIT_OK
    } else {
        EXIT_NEGATIVE
    }
}

fn scale(a: ScaleArgs) -> CliResult {
    let x = io::load_tensor(&a.tensor)?;
    let p = target_for(&a.target, x.format().dims())?;
    let cfg = config(&a.run, a.run.epsilon)?;
    let report = scaling::run_scaling(&x, &p, &cfg)?;
    emit(a.run.out.as_deref(), &io::report_to_json(&report))?;
    Ok(report_code(&report))
}

fn general_scale(a: GeneralArgs) -> CliResult {
    let phi: Box<dyn Parametrization> = if let Some(path) = &a.mps {
        let v = io::read_json(path)?;
        let get = |k: &str| {
            v.get(k)
                .and_then(Value::as_u64)
                .map(|x| x as usize)
                .ok_or_else(|| Error::Parse(format!("mps: missing integer field {k:?}")))
        };
        Box::new(MpsParam::new(get("sites")?, get("physical")?, get("bond")?)?)
    } else if let Some(path) = &a.tensor {
        Box::new(OrbitParam::new(io::load_tensor(path)?))
    } else if let Some(d) = &a.dims {
        Box::new(IdentityParam::new(TensorFormat::new(1, parse_list(d, "--dims")?)?))
    } else {
        return Err(usage("one of --mps, --tensor or --dims is required"));
    };
    let p = target_for(&a.target, phi.format().dims())?;
    let cfg = config(&a.run, a.run.epsilon)?;
    let (report, sample) = scaling::run_general_scaling(phi.as_ref(), &p, &cfg)?;
    let out = json!({
        "parametrization": phi.description(),
        "sample": io::tensor_to_json(&sample),
        "report": io::report_to_json(&report),
    });
    emit(a.run.out.as_deref(), &out)?;
    Ok(report_code(&report))
}

fn verdict_code(v: &MembershipVerdict) -> i32 {
    if v.is_in() {
        EXIT_OK
    } else {
        EXIT_NEGATIVE
    }
}

/// ε from `--epsilon`, or the gap threshold when only `C` is given.
fn epsilon_with_gap(
    run: &RunArgs,
    c: Option<f64>,
    dims: &[usize],
    p: &TargetSpectrum,
) -> tensor_scaling::Result<(Option<f64>, Option<f64>)> {
    let gap = c.map(|c| oracle::gap_constant(dims, p.lcm() as u64, c)).transpose()?;
    Ok((run.epsilon.or(gap), gap))
}

fn with_gap(mut v: Value, gap: Option<f64>) -> Value {
    if let Some(g) = gap {
        v["gapConstant"] = num(g);
    }
    v
}

fn membership(a: MembershipArgs) -> CliResult {
    let x = io::load_tensor(&a.tensor)?;
    let p = target_for(&a.target, x.format().dims())?;
    let (eps, gap) = epsilon_with_gap(&a.run, a.gap_constant_c, x.format().dims(), &p)?;
    let cfg = config(&a.run, eps)?;
    let v = oracle::membership(&x, &p, &cfg, a.repeats)?;
    emit(a.run.out.as_deref(), &with_gap(io::verdict_to_json(&v), gap))?;
    Ok(verdict_code(&v))
}

fn qmp(a: QmpArgs) -> CliResult {
    let dims = parse_list(&a.dims, "--dims")?;
    let p = target_for(&a.target, &dims)?;
    let (eps, gap) = epsilon_with_gap(&a.run, a.gap_constant_c, &dims, &p)?;
    let cfg = config(&a.run, eps)?;
    let v = oracle::qmp(&p, &cfg, a.repeats)?;
    emit(a.run.out.as_deref(), &with_gap(io::verdict_to_json(&v), gap))?;
    Ok(verdict_code(&v))
}

fn kronecker(a: KroneckerArgs) -> CliResult {
    let q = KroneckerQuery::new(
        parse_partition(&a.lambda, "--lambda")?,
        parse_partition(&a.mu, "--mu")?,
        parse_partition(&a.nu, "--nu")?,
        a.n,
    )?;
    let cfg = config(&a.run, a.run.epsilon)?;
    let v = oracle::kronecker_support(&q, &cfg, a.repeats)?;
    let mut out = io::verdict_to_json(&v);
    out["point"] = io::spectrum_to_json(&q.normalized_point()?);
    emit(a.run.out.as_deref(), &out)?;
    Ok(verdict_code(&v))
}

fn reduce(a: ReduceArgs) -> CliResult {
    let x = io::load_tensor(&a.tensor)?;
    let lambdas = a
        .lambda
        .split(';')
        .map(|s| parse_partition(s, "--lambda"))
        .collect::<tensor_scaling::Result<Vec<_>>>()?;
    let y = if a.normalized {
        reduction::reduce_tensor_normalized(&x, &lambdas)?
    } else {
        reduction::reduce_tensor(&x, &lambdas)?
    };
    emit(a.out.as_deref(), &io::tensor_to_json(&y))?;
    Ok(EXIT_OK)
}

fn random_triangular(dims: &[usize], rng: &mut rand_chacha::ChaCha8Rng) -> tensor_scaling::Result<GroupTuple> {
    let factors = dims
        .iter()
        .map(|&n| {
            tensor_scaling::linalg::CMatrix::from_fn(n, n, |i, j| {
                if i > j {
                    tensor_scaling::linalg::ZERO
                } else if i == j {
                    num_complex::Complex64::new(rng.random_range(0.5..2.0), rng.random_range(-0.5..0.5))
                } else {
                    num_complex::Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                }
            })
        })
        .collect();
    GroupTuple::new(factors)
}

fn verify_hwv(a: HwvArgs) -> CliResult {
    let x = io::load_tensor(&a.tensor)?;
    let spec = io::load_hwv_spec(&a.hwv)?;
    let budget = EvalBudget::default();
    let value = hwv::eval_hwv(&spec, &x, &budget)?;
    let bound = hwv::evaluation_bound(&x, spec.degree());
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(a.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..a.samples {
        let r = random_triangular(x.format().dims(), &mut rng)?;
        worst = worst.max(hwv::transform_residual(&spec, &x, &r, &budget)?);
    }
    let within_bound = value.norm() <= bound * (1.0 + 1e-12);
    let law_holds = worst <= 1e-8;
    let out = json!({
        "value": { "re": num(value.re), "im": num(value.im) },
        "abs": num(value.norm()),
        "bound": num(bound),
        "withinBound": within_bound,
        "nonvanishing": value.norm() > 1e-9 * bound,
        "transformSamples": a.samples,
        "maxTransformResidual": num(worst),
        "transformLawHolds": law_holds,
    });
    emit(a.out.as_deref(), &out)?;
    Ok(if within_bound && law_holds { EXIT_OK } else { EXIT_NEGATIVE })
}

fn sinkhorn(a: SinkhornArgs) -> CliResult {
    let v = io::read_json(&a.matrix)?;
    let m = io::matrix_from_json(v.get("matrix").ok_or_else(|| Error::Parse("matrix: missing field \"matrix\"".into()))?, "matrix")?;
    if m.iter().any(|z| z.im != 0.0) {
        return Err(usage("sinkhorn needs a real nonnegative matrix"));
    }
    let a_real = m.map(|z| z.re);
    let targets = |key: &str, len: usize| -> tensor_scaling::Result<Vec<f64>> {
        match v.get(key) {
            None => Ok(vec![1.0; len]),
            Some(t) => t
                .as_array()
                .ok_or_else(|| Error::Parse(format!("{key}: expected an array")))?
                .iter()
                .enumerate()
                .map(|(k, x)| x.as_f64().ok_or_else(|| Error::Parse(format!("{key}[{k}]: expected a number"))))
                .collect(),
        }
    };
    let rows = targets("rows", a_real.nrows())?;
    let mut cols = targets("cols", a_real.ncols())?;
    if v.get("cols").is_none() {
        let total: f64 = rows.iter().sum();
        cols.iter_mut().for_each(|c| *c = total / a_real.ncols() as f64);
    }
    let res = oracle::sinkhorn(&a_real, &rows, &cols, a.epsilon, a.max_iters)?;
    let status = match res.status {
        oracle::SinkhornStatus::Converged => "CONVERGED",
        oracle::SinkhornStatus::NotConverged => "NOT_CONVERGED",
        oracle::SinkhornStatus::NotScalable => "NOT_SCALABLE",
    };
    let real_rows = |m: &nalgebra::DMatrix<f64>| -> Value {
        Value::Array((0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| num(m[(i, j)])).collect())).collect())
    };
    let out = json!({
        "status": status,
        "converged": res.converged(),
        "iterations": res.iterations,
        "rowError": num(res.row_error),
        "colError": num(res.col_error),
        "matrix": real_rows(&res.matrix),
        "rowScaling": res.row_scaling.iter().map(|&x| num(x)).collect::<Vec<_>>(),
        "colScaling": res.col_scaling.iter().map(|&x| num(x)).collect::<Vec<_>>(),
    });
    emit(a.out.as_deref(), &out)?;
    Ok(if res.converged() { EXIT_OK } else { EXIT_NEGATIVE })
}
