//! Command-line driver.
//!
//! ```text
//! commutclass gamow --resonance 2,0.5 --family asymmetric --tmax 20
//! commutclass scatter --grid 8,256 --rho-offdiag "exp(-(E-2)^2-(Ep-3)^2)" ...
//! commutclass timereversal --a 1 --b 0 --resonance 2,0.5
//! commutclass selfcheck --seed 7
//! ```
//!
//! Every subcommand also takes `--config FILE` (JSON; flags win over file
//! values) and `--out FILE` (default stdout). Exit codes: 0 success, 1
//! configuration or validation error, 2 failed numerical check.
//! `COMMUTCLASS_THREADS` caps the worker pool.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::json;

use crate::energy::{
    curve_to_csv, decay_curve, decay_curve_unchecked, make_grid, AlgebraTag, EnergyGrid,
    OperatorKernel,
};
use crate::evolution::{
    decay_scan, fmt_num, linspace, EvolutionFamily, Resonance, ScanMode, DEFAULT_SAMPLES,
};
use crate::expr::{eval_constant, parse, sample, sample_functional, Expr};
use crate::krein::{GamowOperator, KetSymbol};
use crate::selfcheck;
use crate::time_reversal::{invariance_gap, swap_residual};

/// Residual allowed for the `T|D) = |G)` swap checks.
pub const SWAP_TOLERANCE: f64 = 1e-12;

pub const THREADS_ENV: &str = "COMMUTCLASS_THREADS";

#[derive(Debug)]
enum Failure {
    Config(String),
    Check(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => 1,
            Failure::Check(_) => 2,
        }
    }
}

fn config<T: std::fmt::Display>(field: &str) -> impl FnOnce(T) -> Failure + '_ {
    move |e| Failure::Config(format!("{field}: {e}"))
}

#[derive(Parser, Debug)]
#[command(
    name = "commutclass",
    version,
    about = "Commutator decay in Gamow and energy-kernel algebras"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Commutator norm sweep on the Gamow algebra (CSV).
    Gamow(GamowArgs),
    /// Expectation of an evolved kernel commutator on the energy grid (CSV).
    Scatter(ScatterArgs),
    /// Time-reversal swap checks and the invariance gap for one resonance (JSON).
    Timereversal(TimeReversalArgs),
    /// Run every numerical invariant and print a table.
    Selfcheck(SelfcheckArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// JSON file with the same fields as the flags.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Write output here instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GamowArgs {
    #[command(flatten)]
    common: Common,
    /// Resonance as `E_R,Gamma`; repeat for several.
    #[arg(long = "resonance", value_name = "E,GAMMA", allow_hyphen_values = true)]
    resonances: Vec<String>,
    /// decaying | growing | full | asymmetric
    #[arg(long)]
    family: Option<String>,
    /// End of the time window (default 10/Gamma_min).
    #[arg(long, allow_hyphen_values = true)]
    tmax: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    /// commute-then-evolve | evolve-then-commute
    #[arg(long)]
    mode: Option<String>,
    /// First operator, e.g. `D1:D1=1; D1:G1=0.5-0.2i`.
    #[arg(long)]
    o1: Option<String>,
    /// Second operator in the same syntax.
    #[arg(long)]
    o2: Option<String>,
}

#[derive(Args, Debug)]
struct ScatterArgs {
    #[command(flatten)]
    common: Common,
    /// `E_max,M`
    #[arg(long, value_name = "E_MAX,M")]
    grid: Option<String>,
    /// free | in | out
    #[arg(long)]
    tag: Option<String>,
    #[arg(long)]
    rho_diag: Option<String>,
    #[arg(long)]
    rho_offdiag: Option<String>,
    #[arg(long)]
    o1_diag: Option<String>,
    #[arg(long)]
    o1_offdiag: Option<String>,
    #[arg(long)]
    o2_diag: Option<String>,
    #[arg(long)]
    o2_offdiag: Option<String>,
    /// `auto` (the Nyquist bound) or a number.
    #[arg(long, allow_hyphen_values = true)]
    tmax: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    /// Allow times past the Nyquist bound.
    #[arg(long)]
    force: bool,
}

#[derive(Args, Debug)]
struct TimeReversalArgs {
    #[command(flatten)]
    common: Common,
    /// First component of ψ (constant expression).
    #[arg(long, allow_hyphen_values = true)]
    a: Option<String>,
    /// Second component of ψ.
    #[arg(long, allow_hyphen_values = true)]
    b: Option<String>,
    #[arg(long, value_name = "E,GAMMA", allow_hyphen_values = true)]
    resonance: Option<String>,
}

#[derive(Args, Debug)]
struct SelfcheckArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    seed: Option<u64>,
    /// List invariant names and exit.
    #[arg(long)]
    list: bool,
    #[arg(long, hide = true, value_name = "NAME")]
    inject_fault: Option<String>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct TimeWindow {
    t_max: Option<serde_json::Value>,
    samples: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct GamowFile {
    resonances: Option<Vec<Resonance>>,
    family: Option<EvolutionFamily>,
    mode: Option<ScanMode>,
    time: Option<TimeWindow>,
    o1: Option<String>,
    o2: Option<String>,
    out: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ScatterFile {
    grid: Option<EnergyGrid>,
    tag: Option<AlgebraTag>,
    rho_diag: Option<String>,
    rho_offdiag: Option<String>,
    o1_diag: Option<String>,
    o1_offdiag: Option<String>,
    o2_diag: Option<String>,
    o2_offdiag: Option<String>,
    time: Option<TimeWindow>,
    force: Option<bool>,
    out: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct TimeReversalFile {
    a: Option<String>,
    b: Option<String>,
    resonance: Option<Resonance>,
    out: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SelfcheckFile {
    seed: Option<u64>,
    out: Option<PathBuf>,
}

fn load<T: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> Result<T, Failure> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let field = format!("--config {}", path.display());
    let text = std::fs::read_to_string(path).map_err(config(&field))?;
    serde_json::from_str(&text).map_err(config(&field))
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the exit code.
pub fn run(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = out.write_all(text.as_bytes());
                0
            } else {
                let _ = err.write_all(text.as_bytes());
                1
            };
        }
    };
    let outcome = with_pool(|| dispatch(cli.command));
    match outcome {
        Ok((text, path)) => match emit(&text, path.as_deref(), out) {
            Ok(()) => 0,
            Err(f) => report(f, err),
        },
        Err((f, partial)) => {
            if let Some((text, path)) = partial {
                let _ = emit(&text, path.as_deref(), out);
            }
            report(f, err)
        }
    }
}

fn report(f: Failure, err: &mut dyn Write) -> i32 {
    let msg = match &f {
        Failure::Config(m) => format!("error: {m}\n"),
        Failure::Check(m) => format!("check failed: {m}\n"),
    };
    let _ = err.write_all(msg.as_bytes());
    f.code()
}

fn emit(text: &str, path: Option<&Path>, out: &mut dyn Write) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(config(&format!("--out {}", p.display()))),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Config(format!("stdout: {e}"))),
    }
}

type Output = (String, Option<PathBuf>);
type Outcome = Result<Output, (Failure, Option<Output>)>;

fn with_pool(job: impl FnOnce() -> Outcome + Send) -> Outcome {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Some(n),
            _ => {
                return Err((
                    Failure::Config(format!(
                        "{THREADS_ENV}: expected a positive integer, got `{v}`"
                    )),
                    None,
                ))
            }
        },
        Err(_) => None,
    };
    match threads {
        None => job(),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(job),
            Err(e) => Err((Failure::Config(format!("{THREADS_ENV}: {e}")), None)),
        },
    }
}

fn dispatch(cmd: Command) -> Outcome {
    match cmd {
        Command::Gamow(a) => gamow(a).map_err(|f| (f, None)),
        Command::Scatter(a) => scatter(a),
        Command::Timereversal(a) => timereversal(a),
        Command::Selfcheck(a) => run_selfcheck(a),
    }
}

fn parse_pair(text: &str, field: &str) -> Result<(f64, f64), Failure> {
    let bad = || Failure::Config(format!("{field}: expected two numbers `x,y`, got `{text}`"));
    let (x, y) = text.split_once(',').ok_or_else(bad)?;
    let x: f64 = x.trim().parse().map_err(|_| bad())?;
    let y: f64 = y.trim().parse().map_err(|_| bad())?;
    if !x.is_finite() || !y.is_finite() {
        return Err(Failure::Config(format!("{field}: values must be finite")));
    }
    Ok((x, y))
}

fn parse_resonance(text: &str, field: &str) -> Result<Resonance, Failure> {
    let (e, g) = parse_pair(text, field)?;
    Resonance::new(e, g).map_err(config(field))
}

/// Parses `KET:BRA=coefficient` entries separated by `;`.
pub fn parse_operator(text: &str, n: usize) -> Result<GamowOperator, String> {
    let mut entries: Vec<((KetSymbol, KetSymbol), Complex64)> = Vec::new();
    for item in text.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let (pair, coeff) = item
            .split_once('=')
            .ok_or_else(|| format!("entry `{item}` lacks `=coefficient`"))?;
        let (ket, bra) = pair
            .split_once(':')
            .ok_or_else(|| format!("entry `{item}` should look like D1:G1=..."))?;
        let ket: KetSymbol = ket.parse().map_err(|e| format!("{e}"))?;
        let bra: KetSymbol = bra.parse().map_err(|e| format!("{e}"))?;
        let c = eval_constant(coeff.trim())
            .map_err(|e| format!("coefficient `{}`: {e}", coeff.trim()))?;
        if entries.iter().any(|(k, _)| *k == (ket, bra)) {
            return Err(format!("entry {ket}:{bra} given twice"));
        }
        entries.push(((ket, bra), c));
    }
    GamowOperator::from_entries(n, entries).map_err(|e| e.to_string())
}

fn positive_samples(samples: usize, field: &str) -> Result<usize, Failure> {
    if samples < 2 {
        return Err(Failure::Config(format!(
            "{field}: need at least 2 samples, got {samples}"
        )));
    }
    Ok(samples)
}

fn window_tmax(w: &Option<TimeWindow>, field: &str) -> Result<Option<String>, Failure> {
    match w.as_ref().and_then(|w| w.t_max.as_ref()) {
        None => Ok(None),
        Some(serde_json::Value::Number(x)) => Ok(Some(x.to_string())),
        Some(serde_json::Value::String(s)) => Ok(Some(s.clone())),
        Some(other) => Err(Failure::Config(format!(
            "{field}: expected a number or \"auto\", got {other}"
        ))),
    }
}

fn gamow(args: GamowArgs) -> Result<Output, Failure> {
    let file: GamowFile = load(args.common.config.as_deref())?;
    let res = if args.resonances.is_empty() {
        file.resonances.unwrap_or_default()
    } else {
        args.resonances
            .iter()
            .map(|r| parse_resonance(r, "--resonance"))
            .collect::<Result<_, _>>()?
    };
    if res.is_empty() {
        return Err(Failure::Config(
            "--resonance: at least one resonance is required".into(),
        ));
    }
    let n = res.len();
    let family = match args.family {
        Some(f) => f.parse().map_err(config("--family"))?,
        None => file.family.unwrap_or(EvolutionFamily::Asymmetric),
    };
    let mode = match args.mode {
        Some(m) => m.parse().map_err(config("--mode"))?,
        None => file.mode.unwrap_or(ScanMode::CommuteThenEvolve),
    };
    let gmin = res.iter().map(|r| r.width()).fold(f64::INFINITY, f64::min);
    let tmax = match (args.tmax, window_tmax(&file.time, "time.t_max")?) {
        (Some(t), _) => t,
        (None, Some(s)) => s
            .parse()
            .map_err(|_| Failure::Config(format!("time.t_max: `{s}` is not a number")))?,
        (None, None) => 10.0 / gmin,
    };
    if !tmax.is_finite() || tmax <= 0.0 {
        return Err(Failure::Config(format!(
            "--tmax: must be finite and > 0, got {tmax}"
        )));
    }
    let samples = args
        .samples
        .or(file.time.as_ref().and_then(|w| w.samples))
        .unwrap_or(DEFAULT_SAMPLES);
    let samples = positive_samples(samples, "--samples")?;
    let o1_text = args.o1.or(file.o1).unwrap_or_else(|| "D1:D1=1".into());
    let o2_text = args.o2.or(file.o2).unwrap_or_else(|| "D1:G1=1".into());
    let o1 = parse_operator(&o1_text, n).map_err(config("--o1"))?;
    let o2 = parse_operator(&o2_text, n).map_err(config("--o2"))?;

    let times = linspace(0.0, tmax, samples);
    let scan = decay_scan(&o1, &o2, &res, family, &times, mode).map_err(config("gamow"))?;
    let mut text = scan.to_csv();
    text.push_str(&format!("# family={family}\n# mode={mode}\n"));
    for (i, r) in res.iter().enumerate() {
        text.push_str(&format!(
            "# resonance{}=E_R:{},Gamma:{}\n",
            i + 1,
            fmt_num(r.energy()),
            fmt_num(r.width())
        ));
    }
    text.push_str(&format!("# o1={o1}\n# o2={o2}\n"));
    let rate = scan
        .fitted_rate
        .map_or_else(|| "undefined".to_string(), fmt_num);
    text.push_str(&format!("# fitted_rate={rate}\n"));
    Ok((text, args.common.out.or(file.out)))
}

struct Profile {
    diag: Expr,
    offdiag: Option<Expr>,
}

fn profile(diag: String, offdiag: Option<String>, name: &str) -> Result<Profile, Failure> {
    let dfield = format!("--{name}-diag");
    let ofield = format!("--{name}-offdiag");
    Ok(Profile {
        diag: parse(&diag).map_err(config(&dfield))?,
        offdiag: offdiag
            .map(|s| parse(&s).map_err(config(&ofield)))
            .transpose()?,
    })
}

fn kernel(
    p: &Profile,
    grid: &EnergyGrid,
    tag: AlgebraTag,
    name: &str,
) -> Result<OperatorKernel, Failure> {
    sample(&p.diag, p.offdiag.as_ref(), grid, tag)
        .map_err(config(&format!("--{name}-diag/--{name}-offdiag")))
}

fn scatter(args: ScatterArgs) -> Outcome {
    let no_partial = |f| (f, None);
    let file: ScatterFile = load(args.common.config.as_deref()).map_err(no_partial)?;
    let grid = match args.grid {
        Some(g) => {
            let (e, m) = parse_pair(&g, "--grid").map_err(no_partial)?;
            if m.fract() != 0.0 || m < 0.0 {
                return Err(no_partial(Failure::Config(format!(
                    "--grid: M must be an integer, got {m}"
                ))));
            }
            make_grid(e, m as usize)
                .map_err(config("--grid"))
                .map_err(no_partial)?
        }
        None => file
            .grid
            .ok_or_else(|| Failure::Config("--grid: required".into()))
            .and_then(|g| make_grid(g.e_max(), g.len()).map_err(config("grid")))
            .map_err(no_partial)?,
    };
    if grid.len() < 2 {
        return Err(no_partial(Failure::Config(format!(
            "--grid: M must be at least 2, got {}",
            grid.len()
        ))));
    }
    let tag = match args.tag {
        Some(t) => t.parse().map_err(config("--tag")).map_err(no_partial)?,
        None => file.tag.unwrap_or(AlgebraTag::Free),
    };
    let rho = profile(
        args.rho_diag
            .or(file.rho_diag)
            .unwrap_or_else(|| "1".into()),
        args.rho_offdiag.or(file.rho_offdiag),
        "rho",
    )
    .map_err(no_partial)?;
    let p1 = profile(
        args.o1_diag.or(file.o1_diag).unwrap_or_else(|| "0".into()),
        args.o1_offdiag.or(file.o1_offdiag),
        "o1",
    )
    .map_err(no_partial)?;
    let p2 = profile(
        args.o2_diag.or(file.o2_diag).unwrap_or_else(|| "0".into()),
        args.o2_offdiag.or(file.o2_offdiag),
        "o2",
    )
    .map_err(no_partial)?;
    let force = args.force || file.force.unwrap_or(false);
    let bound = grid.nyquist_tmax();
    let tmax_text = match args.tmax {
        Some(t) => Some(t),
        None => window_tmax(&file.time, "time.t_max").map_err(no_partial)?,
    };
    let tmax = match tmax_text.as_deref().map(str::trim) {
        None | Some("auto") => bound,
        Some(s) => s
            .parse::<f64>()
            .ok()
            .filter(|t| t.is_finite() && *t > 0.0)
            .ok_or_else(|| {
                no_partial(Failure::Config(format!(
                    "--tmax: expected `auto` or a positive number, got `{s}`"
                )))
            })?,
    };
    if tmax > bound * (1.0 + 1e-12) && !force {
        return Err(no_partial(Failure::Config(format!(
            "--tmax: {tmax} exceeds the Nyquist bound {bound} of this grid (pass --force to override)"
        ))));
    }
    let samples = args
        .samples
        .or(file.time.as_ref().and_then(|w| w.samples))
        .unwrap_or(DEFAULT_SAMPLES);
    let samples = positive_samples(samples, "--samples").map_err(no_partial)?;

    let rho = sample_functional(&rho.diag, rho.offdiag.as_ref(), &grid, tag)
        .map_err(config("--rho-diag/--rho-offdiag"))
        .map_err(no_partial)?;
    let o1 = kernel(&p1, &grid, tag, "o1").map_err(no_partial)?;
    let o2 = kernel(&p2, &grid, tag, "o2").map_err(no_partial)?;
    let times = linspace(0.0, tmax, samples);
    let curve = if force {
        decay_curve_unchecked(&rho, &o1, &o2, &times)
    } else {
        decay_curve(&rho, &o1, &o2, &times)
    }
    .map_err(config("scatter"))
    .map_err(no_partial)?;

    let weak = o1
        .weak_limit()
        .commutator(&o2.weak_limit())
        .map_err(config("scatter"))
        .map_err(no_partial)?;
    let weak_norm = weak.max_deviation(&OperatorKernel::zero(grid, tag));
    let weak_pair = rho
        .pair(&weak, 0.0)
        .map_err(config("scatter"))
        .map_err(no_partial)?;
    let initial = curve.first().map_or(0.0, |p| p.abs());
    let last = curve.last().map_or(0.0, |p| p.abs());
    let peak = curve.iter().map(|p| p.abs()).fold(0.0, f64::max);
    let ratio = if initial > 0.0 {
        fmt_num(last / initial)
    } else {
        "undefined".into()
    };

    let mut text = curve_to_csv(&curve);
    text.push_str(&format!(
        "# grid=E_max:{},M:{}\n# tag={tag}\n# nyquist_tmax={}\n",
        fmt_num(grid.e_max()),
        grid.len(),
        fmt_num(bound)
    ));
    if tmax > bound {
        text.push_str("# warning=times past the Nyquist bound are aliased\n");
    }
    text.push_str(&format!(
        "# weak_limit_commutator_norm={}\n# weak_limit_pair={},{}\n# initial_abs={}\n# final_abs={}\n# peak_abs={}\n# final_over_initial={ratio}\n",
        fmt_num(weak_norm),
        fmt_num(weak_pair.re),
        fmt_num(weak_pair.im),
        fmt_num(initial),
        fmt_num(last),
        fmt_num(peak),
    ));
    let output = (text, args.common.out.or(file.out));
    if weak_norm != 0.0 {
        return Err((
            Failure::Check(format!(
                "commutator of weak-limit kernels has norm {weak_norm}"
            )),
            Some(output),
        ));
    }
    Ok(output)
}

fn complex(c: Complex64) -> serde_json::Value {
    json!({ "re": c.re, "im": c.im })
}

fn timereversal(args: TimeReversalArgs) -> Outcome {
    let no_partial = |f| (f, None);
    let file: TimeReversalFile = load(args.common.config.as_deref()).map_err(no_partial)?;
    let a_text = args.a.or(file.a).unwrap_or_else(|| "1".into());
    let b_text = args.b.or(file.b).unwrap_or_else(|| "0".into());
    let a = eval_constant(&a_text)
        .map_err(config("--a"))
        .map_err(no_partial)?;
    let b = eval_constant(&b_text)
        .map_err(config("--b"))
        .map_err(no_partial)?;
    let res = match args.resonance {
        Some(r) => parse_resonance(&r, "--resonance").map_err(no_partial)?,
        None => file
            .resonance
            .ok_or_else(|| no_partial(Failure::Config("--resonance: required".into())))?,
    };
    let report = invariance_gap(a, b, &res);
    let swaps: Vec<serde_json::Value> = (1..=5)
        .map(|n| {
            let r = swap_residual(n).unwrap_or(f64::INFINITY);
            json!({ "N": n, "residual": r, "passed": r <= SWAP_TOLERANCE })
        })
        .collect();
    let passed = swaps.iter().all(|s| s["passed"] == json!(true));
    let doc = json!({
        "a": complex(a),
        "b": complex(b),
        "resonance": res,
        "report": report,
        "gap_abs": report.gap.norm(),
        "swap_checks": { "tolerance": SWAP_TOLERANCE, "cases": swaps, "passed": passed },
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
    text.push('\n');
    let output = (text, args.common.out.or(file.out));
    if !passed {
        return Err((
            Failure::Check("T does not swap decaying and growing vectors".into()),
            Some(output),
        ));
    }
    Ok(output)
}

fn run_selfcheck(args: SelfcheckArgs) -> Outcome {
    let no_partial = |f| (f, None);
    let file: SelfcheckFile = load(args.common.config.as_deref()).map_err(no_partial)?;
    let out_path = args.common.out.or(file.out);
    if args.list {
        let mut text = String::new();
        for inv in selfcheck::INVARIANTS {
            text.push_str(&format!("{:<28} {}\n", inv.name, inv.summary));
        }
        return Ok((text, out_path));
    }
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let report = selfcheck::run(seed, args.inject_fault.as_deref())
        .map_err(config("--inject-fault"))
        .map_err(no_partial)?;
    let text = report.table();
    match report.failure() {
        None => Ok((text, out_path)),
        Some(o) => {
            let why = o.error.clone().unwrap_or_else(|| {
                let m = o.measure.expect("measured");
                format!("measured {:e} exceeds {:e}", m.value, m.limit)
            });
            Err((
                Failure::Check(format!("invariant `{}`: {why}", o.name)),
                Some((text, out_path)),
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let argv: Vec<String> = std::iter::once("commutclass")
            .chain(args.iter().copied())
            .map(String::from)
            .collect();
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(&argv, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn operator_syntax() {
        let op = parse_operator("D1:D1=1; D1:G1=0.5-0.2i;", 1).unwrap();
        assert_eq!(
            op.get(KetSymbol::d(1), KetSymbol::g(1)),
            Complex64::new(0.5, -0.2)
        );
        assert!(parse_operator("D2:G1=1", 1).is_err());
        assert!(parse_operator("D1:G1", 1).is_err());
        assert!(parse_operator("D1=1", 1).is_err());
        assert!(parse_operator("D1:G1=1;D1:G1=2", 1).is_err());
        assert!(parse_operator("D1:G1=foo", 1).is_err());
    }

    #[test]
    fn gamow_rate_footer() {
        let (code, out, _) = call(&[
            "gamow",
            "--resonance",
            "2,0.5",
            "--family",
            "asymmetric",
            "--tmax",
            "20",
            "--samples",
            "64",
            "--mode",
            "commute-then-evolve",
        ]);
        assert_eq!(code, 0);
        assert!(out.starts_with("t,norm,log_norm\n"));
        let rate: f64 = out
            .lines()
            .find_map(|l| l.strip_prefix("# fitted_rate="))
            .unwrap()
            .parse()
            .unwrap();
        assert!((rate + 0.5).abs() < 0.005, "{rate}");
    }

    #[test]
    fn validation_errors_exit_one() {
        for args in [
            &["gamow", "--resonance", "2,-0.5"][..],
            &["gamow"],
            &["gamow", "--resonance", "2,0.5", "--family", "sideways"],
            &["gamow", "--resonance", "2,0.5", "--o1", "D3:D1=1"],
            &["scatter", "--grid", "8,1"],
            &["scatter", "--grid", "8,64", "--tmax", "1000"],
            &["scatter", "--grid", "8,64", "--o1-diag", "Ep"],
            &["timereversal", "--resonance", "2,0"],
            &["selfcheck", "--inject-fault", "no_such_invariant"],
            &["frobnicate"],
        ] {
            let (code, _, err) = call(args);
            assert_eq!(code, 1, "{args:?}: {err}");
            assert!(!err.is_empty());
        }
    }

    #[test]
    fn error_names_field() {
        let (_, _, err) = call(&["gamow", "--resonance", "2,0.5", "--tmax", "-1"]);
        assert!(err.contains("--tmax"), "{err}");
        let (_, _, err) = call(&["scatter", "--grid", "8,64", "--rho-offdiag", "exp(E"]);
        assert!(err.contains("--rho-offdiag"), "{err}");
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("gamow"));
    }

    #[test]
    fn timereversal_json() {
        let (code, out, _) = call(&[
            "timereversal",
            "--a",
            "1",
            "--b",
            "0",
            "--resonance",
            "2,0.5",
        ]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(v["gap_abs"].as_f64().unwrap() > 1.0);
        assert_eq!(v["swap_checks"]["passed"], json!(true));
    }

    #[test]
    fn selfcheck_fault_exits_two() {
        let (code, out, err) = call(&["selfcheck", "--seed", "3", "--inject-fault", "gram_table"]);
        assert_eq!(code, 2);
        assert!(err.contains("gram_table"));
        assert!(out.contains("FAIL"));
    }
}
