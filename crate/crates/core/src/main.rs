use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};

use ncsms::io::{read_mfld, write_mfld};
use ncsms::lattice::{GridSpec, MatrixField};
use ncsms::meansop::{fio_apply, FioSpec, SpatialCutoff};
use ncsms::ncspace::{
    maximal_norm_general_upper, maximal_norm_positive, maximal_norm_selfadjoint, read_family_json, FamilyKind,
    SolverOptions,
};
use ncsms::special::bessel_j;
use ncsms::verify::{
    admissibility_json, admissibility_table, convergence_experiment, decay_experiment, dyadic_split_check,
    envelope_domination_check, fio_growth_probe, format_exponent, json_hash, kernel_l1_experiment, p4_experiment,
    parse_exponent, phi0_envelope_check, selftest, sobolev_bound_check, split_family_from_config, ConvergenceConfig,
    ExperimentConfig, ExponentReport, KernelConfig, TestFunction, Verdict,
};

#[derive(Parser)]
#[command(
    name = "ncsms",
    version,
    about = "Operator-valued spherical means: experiments and operators"
)]
struct Cli {
    /// Worker threads (falls back to NCSMS_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON config merged under the explicit flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Maximal norms of the dyadic pieces and their decay slope.
    Decay(DecayArgs),
    /// Decay at p = 4 with the gain exponent estimated from the wave operator.
    P4(P4Args),
    /// L1 norms of the rescaled dyadic kernels.
    KernelL1(KernelArgs),
    /// Radial envelope of the low-frequency kernel.
    Phi0Envelope(KernelArgs),
    /// Maximal norm of a family given as JSON.
    MaximalNorm(MaximalNormArgs),
    /// Sobolev-type bound for the maximal norm over t in [1, t_end].
    SobolevCheck(SobolevArgs),
    /// Splitting of the maximal norm over dyadic t blocks.
    SplitCheck(SplitArgs),
    /// Domination of the means by the decreasing envelope.
    EnvelopeCheck(EnvelopeArgs),
    /// Convergence of the normalized means as t -> 0.
    Converge(ConvergeArgs),
    /// Apply the frequency-localized wave operator to a field.
    Fio(FioArgs),
    /// Evaluate the Bessel function J_nu(r).
    Bessel(BesselArgs),
    /// Admissible alpha thresholds and exponent boundaries.
    Admissible(AdmissibleArgs),
    /// Run the fast invariant suite.
    Selftest,
}

#[derive(Clone, Copy, ValueEnum)]
enum TestFunctionKind {
    Gaussian,
    WhiteBand,
    MatrixRandom,
    BandLimited,
    Checkerboard,
    Constant,
    Zero,
}

#[derive(Args, Default)]
struct FieldArgs {
    #[arg(long, value_enum)]
    test_function: Option<TestFunctionKind>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    width: Option<f64>,
    #[arg(long)]
    cell: Option<f64>,
    #[arg(long)]
    value: Option<f64>,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    n: Option<usize>,
    /// Points per axis (power of two).
    #[arg(long)]
    grid: Option<usize>,
    /// Box side length.
    #[arg(long)]
    length: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    jmin: Option<u32>,
    #[arg(long)]
    jmax: Option<u32>,
    /// Number of t samples on [1, 2].
    #[arg(long)]
    t_samples: Option<usize>,
    #[arg(long)]
    slack: Option<f64>,
    #[command(flatten)]
    field: FieldArgs,
}

#[derive(Args)]
struct OutputArgs {
    /// CSV output; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Verdict JSON; defaults to the CSV path with a .json extension.
    #[arg(long)]
    verdict: Option<PathBuf>,
    /// Record wall times in the CSV.
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct DecayArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    #[arg(long, value_parser = parse_exponent)]
    p: Option<f64>,
    /// Gain exponent used in the prediction.
    #[arg(long)]
    u: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct P4Args {
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Write the wave-operator probe as JSON.
    #[arg(long)]
    probe_out: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct KernelArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    jmax: Option<u32>,
    /// Comma-separated radii.
    #[arg(long, value_delimiter = ',')]
    ts: Option<Vec<f64>>,
    #[arg(long)]
    bound: Option<f64>,
    /// Report JSON; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MaximalNormArgs {
    /// Family JSON.
    #[arg(long)]
    family: PathBuf,
    #[arg(long, value_parser = parse_exponent)]
    p: f64,
    /// Write the dominating field as .mfld.
    #[arg(long)]
    dominator: Option<PathBuf>,
}

#[derive(Args)]
struct SobolevArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    #[arg(long, default_value_t = 1)]
    m: u32,
    #[arg(long, default_value_t = 2.0)]
    t_end: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SplitArgs {
    /// Positive family JSON; built from the config when absent.
    #[arg(long)]
    family: Option<PathBuf>,
    #[command(flatten)]
    exp: ExperimentArgs,
    #[arg(long, value_parser = parse_exponent, default_value = "2")]
    p: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EnvelopeArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    #[arg(long, value_parser = parse_exponent, default_value = "2")]
    p: f64,
    /// Largest accepted drift between two resolutions.
    #[arg(long, default_value_t = 1.5)]
    bound: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConvergeArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    d: Option<usize>,
    #[command(flatten)]
    field: FieldArgs,
    /// Comma-separated decreasing radii.
    #[arg(long, value_delimiter = ',')]
    schedule: Option<Vec<f64>>,
    #[arg(long)]
    target: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CutoffKind {
    One,
    Bump,
}

#[derive(Args)]
struct FioArgs {
    /// Input field (.mfld); a test field is built when absent.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 256)]
    grid: usize,
    #[arg(long, default_value_t = 4.0)]
    length: f64,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[command(flatten)]
    field: FieldArgs,
    #[arg(long)]
    j: u32,
    #[arg(long, default_value_t = 1.5)]
    t: f64,
    #[arg(long, value_enum, default_value = "bump")]
    cutoff: CutoffKind,
    /// Output field (.mfld).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BesselArgs {
    #[arg(long)]
    nu: f64,
    #[arg(long)]
    r: f64,
}

#[derive(Args)]
struct AdmissibleArgs {
    #[arg(long)]
    n: usize,
    /// Comma-separated exponents, `inf` allowed.
    #[arg(long, value_delimiter = ',', value_parser = parse_exponent, default_value = "2,4,inf")]
    p: Vec<f64>,
    /// Print JSON instead of a table.
    #[arg(long)]
    json: bool,
}

/// Outcome classes mapped onto exit codes.
enum Failure {
    Usage(String),
    Verdict(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Verdict(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Verdict(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<ncsms::Error> for Failure {
    fn from(e: ncsms::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn set<T: Serialize>(map: &mut Map<String, Value>, key: &str, value: Option<T>) {
    if let Some(v) = value {
        map.insert(key.into(), json!(v));
    }
}

/// Defaults, then the config file, then the flags.
fn resolve<T: Serialize + DeserializeOwned>(
    defaults: T,
    file: Option<&Path>,
    flags: Map<String, Value>,
) -> Result<T, Failure> {
    let mut value = serde_json::to_value(defaults)?;
    if let Some(path) = file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let file_value: Value =
            serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("config {}: {e}", path.display())))?;
        if !file_value.is_object() {
            return Err(Failure::Usage("config file must hold a JSON object".into()));
        }
        merge(&mut value, file_value);
    }
    apply_field_flags(&mut value, &flags);
    let mut rest = flags;
    rest.remove("test_function");
    merge(&mut value, Value::Object(rest));
    serde_json::from_value(value).map_err(|e| Failure::Usage(format!("config: {e}")))
}

/// A new kind replaces the test function; bare parameters patch the current one.
fn apply_field_flags(value: &mut Value, flags: &Map<String, Value>) {
    let Some(Value::Object(patch)) = flags.get("test_function") else {
        return;
    };
    let Some(obj) = value.as_object_mut() else {
        return;
    };
    if let Some(kind) = patch.get("kind") {
        let mut fresh = Map::new();
        fresh.insert("kind".into(), kind.clone());
        let default_param = match kind.as_str().unwrap_or("") {
            "gaussian" => Some(("width", json!(0.5))),
            "white_band" | "matrix_random" | "band_limited" => Some(("seed", json!(7))),
            "checkerboard" => Some(("cell", json!(0.25))),
            "constant" => Some(("value", json!(1.0))),
            _ => None,
        };
        if let Some((k, v)) = default_param {
            fresh.insert(k.into(), v);
        }
        obj.insert("test_function".into(), Value::Object(fresh));
    }
    let target = obj.entry("test_function").or_insert_with(|| json!({}));
    for (k, v) in patch {
        if k != "kind" {
            if let Some(t) = target.as_object_mut() {
                t.insert(k.clone(), v.clone());
            }
        }
    }
}

impl FieldArgs {
    fn insert(&self, map: &mut Map<String, Value>) {
        let mut patch = Map::new();
        if let Some(kind) = self.test_function {
            let name = match kind {
                TestFunctionKind::Gaussian => "gaussian",
                TestFunctionKind::WhiteBand => "white_band",
                TestFunctionKind::MatrixRandom => "matrix_random",
                TestFunctionKind::BandLimited => "band_limited",
                TestFunctionKind::Checkerboard => "checkerboard",
                TestFunctionKind::Constant => "constant",
                TestFunctionKind::Zero => "zero",
            };
            patch.insert("kind".into(), json!(name));
        }
        set(&mut patch, "seed", self.seed);
        set(&mut patch, "width", self.width);
        set(&mut patch, "cell", self.cell);
        set(&mut patch, "value", self.value);
        if !patch.is_empty() {
            map.insert("test_function".into(), Value::Object(patch));
        }
    }

    fn build(&self, defaults: TestFunction) -> Result<TestFunction, Failure> {
        let mut map = Map::new();
        self.insert(&mut map);
        let mut value = json!({ "test_function": defaults });
        apply_field_flags(&mut value, &map);
        Ok(serde_json::from_value(value["test_function"].take())?)
    }
}

impl GridArgs {
    fn insert(&self, map: &mut Map<String, Value>) {
        set(map, "n", self.n);
        set(map, "grid", self.grid);
        set(map, "length", self.length);
        set(map, "alpha", self.alpha);
    }
}

impl ExperimentArgs {
    fn flags(&self) -> Map<String, Value> {
        let mut map = Map::new();
        self.grid.insert(&mut map);
        set(&mut map, "d", self.d);
        set(&mut map, "j_min", self.jmin);
        set(&mut map, "j_max", self.jmax);
        set(&mut map, "t_samples", self.t_samples);
        if let Some(s) = self.slack {
            map.insert("tolerances".into(), json!({ "slack": s }));
        }
        self.field.insert(&mut map);
        map
    }
}

impl OutputArgs {
    fn insert(&self, map: &mut Map<String, Value>) {
        let mut out = Map::new();
        set(&mut out, "csv", self.out.clone());
        set(&mut out, "verdict", self.verdict.clone());
        if self.timings {
            out.insert("timings".into(), json!(true));
        }
        if !out.is_empty() {
            map.insert("output".into(), Value::Object(out));
        }
    }
}

fn experiment_config(
    exp: &ExperimentArgs,
    output: Option<&OutputArgs>,
    extra: Map<String, Value>,
    defaults: ExperimentConfig,
    file: Option<&Path>,
) -> Result<ExperimentConfig, Failure> {
    let mut flags = exp.flags();
    if let Some(o) = output {
        o.insert(&mut flags);
    }
    flags.extend(extra);
    let cfg: ExperimentConfig = resolve(defaults, file, flags)?;
    eprintln!("config_hash {}", cfg.hash());
    Ok(cfg)
}

fn p_value(v: f64) -> Value {
    if v.is_infinite() {
        json!("inf")
    } else {
        json!(v)
    }
}

fn emit_json(value: &Value, out: Option<&Path>) -> Outcome {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn pass_or_verdict(pass: bool, what: &str) -> Outcome {
    if pass {
        Ok(())
    } else {
        Err(Failure::Verdict(format!("{what} failed")))
    }
}

fn finish_exponent_report(report: &ExponentReport, cfg: &ExperimentConfig) -> Outcome {
    let csv = cfg.output.csv.as_deref();
    let verdict = cfg
        .output
        .verdict
        .clone()
        .or_else(|| csv.map(|p| p.with_extension("json")));
    match csv {
        Some(_) => report.write_outputs(csv, verdict.as_deref(), cfg.output.timings)?,
        None => {
            print!("{}", report.to_csv(cfg.output.timings));
            report.write_outputs(None, verdict.as_deref(), false)?;
        }
    }
    eprintln!(
        "{}: predicted {:.4}, fitted {}, slack {}, verdict {:?}",
        report.label,
        report.predicted,
        report.fitted.map_or("none".into(), |s| format!("{s:.4}")),
        report.slack,
        report.verdict,
    );
    match report.verdict {
        Verdict::Pass | Verdict::DegenerateInput => Ok(()),
        Verdict::Fail => Err(Failure::Verdict("fitted slope above prediction + slack".into())),
        Verdict::InsufficientRows => Err(Failure::Usage("fewer than two rows in the fit range".into())),
        Verdict::NumericalFailure => Err(Failure::Numerical(
            report.failure.clone().unwrap_or_else(|| "numerical failure".into()),
        )),
    }
}

fn run_decay(args: &DecayArgs, file: Option<&Path>) -> Outcome {
    let mut extra = Map::new();
    if let Some(p) = args.p {
        extra.insert("p".into(), p_value(p));
    }
    set(&mut extra, "u", args.u);
    let cfg = experiment_config(&args.exp, Some(&args.output), extra, ExperimentConfig::default(), file)?;
    let report = decay_experiment(&cfg)?;
    finish_exponent_report(&report, &cfg)
}

fn run_p4(args: &P4Args, file: Option<&Path>) -> Outcome {
    let mut extra = Map::new();
    extra.insert("p".into(), json!(4.0));
    let cfg = experiment_config(&args.exp, Some(&args.output), extra, ExperimentConfig::default(), file)?;
    let probe = fio_growth_probe(&cfg)?;
    eprintln!(
        "u_hat {} (stderr {})",
        probe.u_hat.map_or("none".into(), |u| format!("{u:.4}")),
        probe.u_stderr.map_or("none".into(), |e| format!("{e:.4}")),
    );
    if let Some(path) = &args.probe_out {
        emit_json(&serde_json::to_value(&probe)?, Some(path))?;
    }
    let report = p4_experiment(&cfg, &probe)?;
    finish_exponent_report(&report, &cfg)
}

fn kernel_config(args: &KernelArgs, defaults: KernelConfig, file: Option<&Path>) -> Result<KernelConfig, Failure> {
    let mut flags = Map::new();
    args.grid.insert(&mut flags);
    set(&mut flags, "j_max", args.jmax);
    set(&mut flags, "ts", args.ts.clone());
    set(&mut flags, "bound", args.bound);
    let cfg: KernelConfig = resolve(defaults, file, flags)?;
    eprintln!("config_hash {}", cfg.hash());
    Ok(cfg)
}

fn run_kernel_l1(args: &KernelArgs, file: Option<&Path>) -> Outcome {
    let cfg = kernel_config(args, KernelConfig::default(), file)?;
    let report = kernel_l1_experiment(&cfg)?;
    eprintln!("sup ratio {:.4} (bound {})", report.sup_ratio, report.bound);
    emit_json(
        &json!({ "schema": "ncsms.kernel_l1/1", "report": report }),
        args.out.as_deref(),
    )?;
    pass_or_verdict(report.pass, "kernel L1 bound")
}

fn run_phi0(args: &KernelArgs, file: Option<&Path>) -> Outcome {
    let cfg = kernel_config(args, KernelConfig::phi0_default(), file)?;
    let report = phi0_envelope_check(&cfg)?;
    emit_json(
        &json!({ "schema": "ncsms.phi0_envelope/1", "report": report }),
        args.out.as_deref(),
    )?;
    pass_or_verdict(report.pass, "Phi_0 envelope")
}

fn run_maximal_norm(args: &MaximalNormArgs) -> Outcome {
    let fam = read_family_json(&args.family)?;
    let tol = SolverOptions::default().tol_psd;
    let (value, dominator) = match fam.kind() {
        FamilyKind::Positive => {
            let r = maximal_norm_positive(&fam, args.p)?;
            (r.value, Some(r.dominator))
        }
        FamilyKind::Selfadjoint => {
            let r = maximal_norm_selfadjoint(&fam, args.p)?;
            (r.value, Some(r.dominator))
        }
        FamilyKind::General => (maximal_norm_general_upper(&fam, args.p)?, None),
    };
    let min_slack = dominator.as_ref().map(|d| d.min_slack());
    emit_json(
        &json!({
            "schema": "ncsms.maximal_norm/1",
            "kind": fam.kind(),
            "p": p_value(args.p),
            "value": value,
            "upper_bound_only": dominator.is_none(),
            "min_slack": min_slack,
        }),
        None,
    )?;
    if let (Some(path), Some(d)) = (&args.dominator, &dominator) {
        write_mfld(&d.a, path)?;
    }
    match dominator {
        Some(d) if !d.is_valid(tol) => Err(Failure::Numerical(format!(
            "certificate slack {:e} below -{tol:e}",
            d.min_slack()
        ))),
        _ => Ok(()),
    }
}

fn run_sobolev(args: &SobolevArgs, file: Option<&Path>) -> Outcome {
    let defaults = ExperimentConfig {
        grid: 64,
        j_max: Some(3),
        t_samples: 9,
        test_function: TestFunction::MatrixRandom { seed: 7 },
        ..Default::default()
    };
    let cfg = experiment_config(&args.exp, None, Map::new(), defaults, file)?;
    let report = sobolev_bound_check(&cfg, args.m, args.t_end)?;
    emit_json(
        &json!({ "schema": "ncsms.sobolev/1", "report": report }),
        args.out.as_deref(),
    )?;
    pass_or_verdict(report.pass, "Sobolev-type bound")
}

fn run_split(args: &SplitArgs, file: Option<&Path>) -> Outcome {
    let fam = match &args.family {
        Some(path) => read_family_json(path)?,
        None => {
            let defaults = ExperimentConfig {
                grid: 32,
                length: 4.0,
                t_samples: 3,
                test_function: TestFunction::BandLimited { seed: 7 },
                ..Default::default()
            };
            let cfg = experiment_config(&args.exp, None, Map::new(), defaults, file)?;
            split_family_from_config(&cfg)?
        }
    };
    let report = dyadic_split_check(&fam, args.p, &SolverOptions::default())?;
    emit_json(
        &json!({ "schema": "ncsms.split/1", "report": report }),
        args.out.as_deref(),
    )?;
    pass_or_verdict(report.pass, "dyadic split")
}

fn run_envelope(args: &EnvelopeArgs, file: Option<&Path>) -> Outcome {
    let defaults = ExperimentConfig {
        grid: 64,
        length: 4.0,
        test_function: TestFunction::Gaussian { width: 0.5 },
        ..Default::default()
    };
    let cfg = experiment_config(&args.exp, None, Map::new(), defaults, file)?;
    let report = envelope_domination_check(&cfg, args.p, args.bound)?;
    emit_json(
        &json!({ "schema": "ncsms.envelope/1", "report": report }),
        args.out.as_deref(),
    )?;
    pass_or_verdict(report.pass, "envelope domination")
}

fn run_converge(args: &ConvergeArgs, file: Option<&Path>) -> Outcome {
    let mut flags = Map::new();
    args.grid.insert(&mut flags);
    set(&mut flags, "d", args.d);
    set(&mut flags, "schedule", args.schedule.clone());
    set(&mut flags, "target", args.target);
    args.field.insert(&mut flags);
    let cfg: ConvergenceConfig = resolve(ConvergenceConfig::default(), file, flags)?;
    eprintln!("config_hash {}", json_hash(&cfg));
    let report = convergence_experiment(&cfg)?;
    for row in &report.rows {
        eprintln!("t = {:<10} error {:e}", row.t, row.error);
    }
    emit_json(
        &json!({ "schema": "ncsms.converge/1", "report": report }),
        args.out.as_deref(),
    )?;
    pass_or_verdict(report.pass, "convergence")
}

fn run_fio(args: &FioArgs) -> Outcome {
    let f: MatrixField = match &args.input {
        Some(path) => read_mfld(path)?,
        None => {
            let grid = GridSpec::new(args.n, args.grid, args.length)?;
            let tf = args.field.build(TestFunction::WhiteBand { seed: 7 })?;
            eprintln!(
                "config_hash {}",
                json_hash(&(&tf, args.n, args.grid, args.length, args.d))
            );
            tf.build(&grid, args.d)?
        }
    };
    let mut spec = FioSpec::new(args.j);
    spec.cutoff = match args.cutoff {
        CutoffKind::One => SpatialCutoff::One,
        CutoffKind::Bump => SpatialCutoff::default(),
    };
    let g = fio_apply(&f, &spec, args.t)?;
    println!("{:e}", g.l2_norm());
    if let Some(path) = &args.out {
        write_mfld(&g, path)?;
    }
    Ok(())
}

fn run_admissible(args: &AdmissibleArgs) -> Outcome {
    let rows = admissibility_table(args.n, &args.p);
    if args.json {
        return emit_json(&admissibility_json(&rows), None);
    }
    println!("n\tp\talpha_threshold\tu_floor\tmu_boundary");
    for r in &rows {
        println!(
            "{}\t{}\t{}\t{}\t{}",
            r.n,
            format_exponent(r.p),
            r.alpha_threshold,
            r.u_floor,
            r.mu_boundary
        );
    }
    Ok(())
}

fn run_selftest() -> Outcome {
    let lines = selftest();
    for l in &lines {
        println!(
            "{} {:<40} {:e} (tol {:e})",
            if l.pass { "PASS" } else { "FAIL" },
            l.name,
            l.value,
            l.tolerance
        );
    }
    let failed = lines.iter().filter(|l| !l.pass).count();
    pass_or_verdict(failed == 0, &format!("{failed} selftest checks"))
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, Failure> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("NCSMS_THREADS") {
        Ok(text) => text
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::Usage(format!("NCSMS_THREADS={text:?} is not a thread count"))),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Outcome {
    if let Some(k) = thread_count(cli.threads)? {
        if k == 0 {
            return Err(Failure::Usage("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let file = cli.config.as_deref();
    let config_free = |name: &str| -> Outcome {
        match file {
            Some(_) => Err(Failure::Usage(format!("{name} takes no --config"))),
            None => Ok(()),
        }
    };
    match &cli.command {
        Command::Decay(a) => run_decay(a, file),
        Command::P4(a) => run_p4(a, file),
        Command::KernelL1(a) => run_kernel_l1(a, file),
        Command::Phi0Envelope(a) => run_phi0(a, file),
        Command::MaximalNorm(a) => {
            config_free("maximal-norm")?;
            run_maximal_norm(a)
        }
        Command::SobolevCheck(a) => run_sobolev(a, file),
        Command::SplitCheck(a) => run_split(a, file),
        Command::EnvelopeCheck(a) => run_envelope(a, file),
        Command::Converge(a) => run_converge(a, file),
        Command::Fio(a) => {
            config_free("fio")?;
            run_fio(a)
        }
        Command::Bessel(a) => {
            config_free("bessel")?;
            println!("{}", bessel_j(a.nu, a.r)?);
            Ok(())
        }
        Command::Admissible(a) => {
            config_free("admissible")?;
            run_admissible(a)
        }
        Command::Selftest => run_selftest(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
