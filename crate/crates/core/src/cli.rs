//! Fan files and command dispatch for the `fantastack` binary.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::arcs::{beta_fiber, j_w, TropPoint};
use crate::cone::{self, Cone};
use crate::error::{Error, Result};
use crate::jets::jet_fiber_data;
use crate::lattice::{content, format_vector, primitive, IntVector};
use crate::measures::{stringy_rational, stringy_series_fan, verify_identities, CheckStatus};
use crate::motivic::TruncatedSeries;
use crate::stacky_fan::{build_fantastack, has_special_stabilizers, AffineToricData, Fantastack, StackyFanInput};

/// On-disk description of a stacky fan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FanFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub lattice_rank: usize,
    pub rays: Vec<Vec<i64>>,
    pub cones: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<Vec<Vec<i64>>>,
}

impl FanFile {
    pub fn to_input(&self) -> StackyFanInput {
        let big = |vs: &[Vec<i64>]| -> Vec<IntVector> {
            vs.iter()
                .map(|v| v.iter().map(|&x| BigInt::from(x)).collect())
                .collect()
        };
        StackyFanInput {
            ambient_rank: self.lattice_rank,
            rays: big(&self.rays),
            maximal_cones: self.cones.clone(),
            nu: self.nu.as_deref().map(big),
        }
    }
}

/// Parses and validates a fan file. Non-primitive rays are divided by their
/// content; each such fix produces a warning.
pub fn parse_fan_file(text: &str) -> Result<(FanFile, Vec<String>)> {
    let mut fan: FanFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let d = fan.lattice_rank;
    if d == 0 {
        return Err(Error::Parse("field `lattice_rank`: must be positive".into()));
    }
    let check_lengths = |field: &str, vs: &[Vec<i64>]| -> Result<()> {
        match vs.iter().position(|v| v.len() != d) {
            Some(i) => Err(Error::Parse(format!(
                "field `{field}`[{i}]: expected {d} coordinates, got {}",
                vs[i].len()
            ))),
            None => Ok(()),
        }
    };
    check_lengths("rays", &fan.rays)?;
    if let Some(nu) = &fan.nu {
        check_lengths("nu", nu)?;
    }
    if fan.cones.is_empty() {
        return Err(Error::Parse("field `cones`: at least one cone is required".into()));
    }
    for (k, c) in fan.cones.iter().enumerate() {
        if let Some(&i) = c.iter().find(|&&i| i >= fan.rays.len()) {
            return Err(Error::Parse(format!(
                "field `cones`[{k}]: ray index {i} out of range ({} rays)",
                fan.rays.len()
            )));
        }
    }
    let mut warnings = Vec::new();
    for (i, ray) in fan.rays.iter_mut().enumerate() {
        if ray.iter().all(|&x| x == 0) {
            return Err(Error::Parse(format!("field `rays`[{i}]: ray is zero")));
        }
        let big: IntVector = ray.iter().map(|&x| BigInt::from(x)).collect();
        let g = content(&big);
        if g > BigInt::from(1) {
            let fixed: Vec<i64> = primitive(&big)
                .iter()
                .map(|x| x.to_i64().expect("divides an i64"))
                .collect();
            warnings.push(format!(
                "warning: ray {i} {} is not primitive; using {}",
                format_vector(&big),
                format_vector(&primitive(&big))
            ));
            *ray = fixed;
        }
    }
    Ok((fan, warnings))
}

pub fn render_fan_file(fan: &FanFile) -> String {
    serde_json::to_string_pretty(fan).expect("fan files always serialize")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandResult {
    /// 0 on success, 1 on usage or input errors, 2 when a verification
    /// check fails.
    pub exit_code: i32,
    pub payload: String,
    pub diagnostics: Vec<String>,
}

#[derive(Parser, Debug)]
#[command(
    name = "fantastack",
    version,
    about = "Combinatorial invariants of fantastacks over toric varieties"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Args, Debug)]
struct Common {
    /// Fan file (JSON).
    #[arg(long)]
    fan: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Args, Debug)]
struct PointArgs {
    #[command(flatten)]
    common: Common,
    /// Lattice point as comma-separated integers, e.g. 1,1 or -1,2.
    #[arg(long, allow_hyphen_values = true)]
    point: String,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Flags, Gorenstein data, crepancy and stabilizers of a stacky fan.
    Analyze(Common),
    /// Hilbert basis of each maximal cone, or of its dual with --dual.
    HilbertBasis {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dual: bool,
    },
    /// Number of lifts of a lattice point along beta.
    Sep(PointArgs),
    /// All lifts of a lattice point along beta.
    BetaFiber(PointArgs),
    /// Contact order of the Gorenstein ideal along a trop fiber.
    Jw(PointArgs),
    /// Motivic class of the jet fiber over a lattice point.
    Theta(PointArgs),
    /// Stringy series of the fan.
    Stringy {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 12)]
        precision: u64,
        /// Closed form instead of a truncated series (single-cone fans).
        #[arg(long)]
        rational: bool,
    },
    /// Whether every stabilizer group is special.
    Stabilizers(Common),
    /// Checks the measure identities on every maximal cone.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 8)]
        grade_bound: u64,
        #[arg(long, default_value_t = 12)]
        precision: u64,
    },
}

struct Output {
    table: String,
    json: Value,
    failed: bool,
}

impl Output {
    fn ok(table: String, json: Value) -> Self {
        Self {
            table,
            json,
            failed: false,
        }
    }
}

pub fn run_command<I, T>(argv: I) -> CommandResult
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                CommandResult {
                    exit_code: 1,
                    payload: String::new(),
                    diagnostics: vec![text.trim_end().to_string()],
                }
            } else {
                CommandResult {
                    exit_code: 0,
                    payload: text,
                    diagnostics: Vec::new(),
                }
            };
        }
    };
    let mut diagnostics = Vec::new();
    let format = cli.command.common().format;
    match dispatch(&cli.command, &mut diagnostics) {
        Ok(out) => {
            let mut payload = match format {
                Format::Table => out.table,
                Format::Json => serde_json::to_string_pretty(&out.json).expect("json values serialize"),
            };
            if !payload.ends_with('\n') {
                payload.push('\n');
            }
            CommandResult {
                exit_code: if out.failed { 2 } else { 0 },
                payload,
                diagnostics,
            }
        }
        Err(e) => {
            diagnostics.push(format!("error: {e}"));
            CommandResult {
                exit_code: 1,
                payload: String::new(),
                diagnostics,
            }
        }
    }
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Analyze(c) | Command::Stabilizers(c) => c,
            Command::HilbertBasis { common, .. } | Command::Stringy { common, .. } | Command::Verify { common, .. } => {
                common
            }
            Command::Sep(p) | Command::BetaFiber(p) | Command::Jw(p) | Command::Theta(p) => &p.common,
        }
    }
}

fn load_fan(path: &Path, diagnostics: &mut Vec<String>) -> Result<FanFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    let (fan, warnings) = parse_fan_file(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    diagnostics.extend(warnings);
    Ok(fan)
}

fn parse_point(text: &str) -> Result<IntVector> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<BigInt>()
                .map_err(|_| Error::Parse(format!("bad point coordinate {s:?} in {text:?}")))
        })
        .collect()
}

fn json_int(x: &BigInt) -> Value {
    match x.to_i64() {
        Some(v) => json!(v),
        None => json!(x.to_string()),
    }
}

fn json_vector(v: &[BigInt]) -> Value {
    Value::Array(v.iter().map(json_int).collect())
}

fn json_series<C: crate::motivic::Coefficient>(s: &TruncatedSeries<C>) -> Value {
    json!({
        "root_order": s.root_order(),
        "precision": s.precision(),
        "series": s.to_string(),
        "coefficients": s.terms().map(|(k, c)| json!([k, c.to_string()])).collect::<Vec<_>>(),
    })
}

fn dispatch(command: &Command, diagnostics: &mut Vec<String>) -> Result<Output> {
    let fan = load_fan(&command.common().fan, diagnostics)?;
    let input = fan.to_input();
    match command {
        Command::Analyze(_) => analyze(&fan, input),
        Command::HilbertBasis { dual, .. } => hilbert(input, *dual),
        Command::Sep(p) => point_command(input, &p.point, PointQuery::Sep),
        Command::BetaFiber(p) => point_command(input, &p.point, PointQuery::Fiber),
        Command::Jw(p) => point_command(input, &p.point, PointQuery::Jw),
        Command::Theta(p) => point_command(input, &p.point, PointQuery::Theta),
        Command::Stringy {
            precision, rational, ..
        } => stringy(input, *precision, *rational),
        Command::Stabilizers(_) => stabilizers(input),
        Command::Verify {
            grade_bound, precision, ..
        } => verify(input, *grade_bound, *precision),
    }
}

fn opt_bool(b: Option<bool>) -> String {
    b.map_or_else(|| "unknown".to_string(), |b| b.to_string())
}

fn analyze(fan: &FanFile, input: StackyFanInput) -> Result<Output> {
    let f = build_fantastack(input)?;
    let flags = f.flags();
    let stabilizers = has_special_stabilizers(&f).ok();
    let mut table = String::new();
    if let Some(name) = &fan.name {
        writeln!(table, "name: {name}").unwrap();
    }
    writeln!(table, "lattice rank: {}", f.ambient_rank()).unwrap();
    writeln!(table, "rays: {}", f.input().rays.len()).unwrap();
    writeln!(table, "maximal cones: {}", f.maximal_cones().len()).unwrap();
    writeln!(table, "columns: {}", f.r()).unwrap();
    writeln!(table, "canonical: {}", f.is_canonical()).unwrap();
    writeln!(table, "gms iso over torus: {}", flags.gms_iso_over_torus).unwrap();
    writeln!(
        table,
        "combinatorially crepant: {}",
        opt_bool(flags.combinatorially_crepant)
    )
    .unwrap();
    writeln!(table, "special stabilizers: {}", opt_bool(flags.special_stabilizers)).unwrap();
    if let Some((_, Some(witness))) = &stabilizers {
        writeln!(table, "  non-special subset: {witness:?}").unwrap();
    }
    let mut cones_json = Vec::new();
    for (k, c) in f.maximal_cones().iter().enumerate() {
        let rays: Vec<String> = c.generators().iter().map(|g| format_vector(g)).collect();
        let qm = if c.is_full_dimensional() {
            crate::stacky_fan::q_gorenstein(c)?
        } else {
            None
        };
        match &qm {
            Some((q, m)) => writeln!(table, "cone {k}: {}  q = {}, m = {m}", rays.join(" "), format_vector(q)),
            None => writeln!(table, "cone {k}: {}  not Q-Gorenstein", rays.join(" ")),
        }
        .unwrap();
        cones_json.push(json!({
            "rays": c.generators().iter().map(|g| json_vector(g)).collect::<Vec<_>>(),
            "columns": f.orthant_cones()[k],
            "q": qm.as_ref().map(|(q, _)| json_vector(q)),
            "m": qm.as_ref().map(|(_, m)| *m),
        }));
    }
    let json = json!({
        "name": fan.name,
        "lattice_rank": f.ambient_rank(),
        "r": f.r(),
        "canonical": f.is_canonical(),
        "gms_iso_over_torus": flags.gms_iso_over_torus,
        "combinatorially_crepant": flags.combinatorially_crepant,
        "special_stabilizers": flags.special_stabilizers,
        "stabilizer_witness": stabilizers.and_then(|(_, w)| w),
        "cones": cones_json,
    });
    Ok(Output::ok(table, json))
}

fn maximal_cones(input: &StackyFanInput) -> Result<Vec<Cone>> {
    input
        .maximal_cones
        .iter()
        .map(|idx| Cone::new(input.ambient_rank, idx.iter().map(|&i| input.rays[i].clone()).collect()))
        .collect()
}

fn hilbert(input: StackyFanInput, dual: bool) -> Result<Output> {
    let mut table = String::new();
    let mut cones_json = Vec::new();
    for (k, c) in maximal_cones(&input)?.into_iter().enumerate() {
        let target = if dual { cone::dual_cone(&c)? } else { c };
        let basis = cone::hilbert_basis(&target)?;
        let shown: Vec<String> = basis.iter().map(|b| format_vector(b)).collect();
        writeln!(table, "cone {k}: {}", shown.join(" ")).unwrap();
        cones_json.push(json!({
            "cone": k,
            "hilbert_basis": basis.iter().map(|b| json_vector(b)).collect::<Vec<_>>(),
        }));
    }
    let json = json!({
        "lattice": if dual { "M" } else { "N" },
        "cones": cones_json,
    });
    Ok(Output::ok(table, json))
}

enum PointQuery {
    Sep,
    Fiber,
    Jw,
    Theta,
}

/// The first maximal cone containing `w`, with its toric data.
fn locate(f: &Fantastack, w: &IntVector) -> Result<(usize, AffineToricData, TropPoint)> {
    if w.len() != f.ambient_rank() {
        return Err(Error::DimensionMismatch {
            expected: f.ambient_rank(),
            got: w.len(),
        });
    }
    for (k, c) in f.maximal_cones().iter().enumerate() {
        if c.contains(w)? {
            let sigma = AffineToricData::new(c.clone())?;
            let point = TropPoint::new(&sigma, w.clone())?;
            return Ok((k, sigma, point));
        }
    }
    Err(Error::OutsideCone {
        point: format_vector(w),
    })
}

fn point_command(input: StackyFanInput, point: &str, query: PointQuery) -> Result<Output> {
    let w = parse_point(point)?;
    let f = build_fantastack(input)?;
    let (k, sigma, point) = locate(&f, &w)?;
    let base = |extra: Value| -> Value {
        let mut obj = json!({ "point": json_vector(&w), "cone": k });
        if let (Value::Object(o), Value::Object(e)) = (&mut obj, extra) {
            o.extend(e);
        }
        obj
    };
    Ok(match query {
        PointQuery::Sep => {
            let fiber = beta_fiber(&f, &sigma, &point)?;
            Output::ok(fiber.sep().to_string(), base(json!({ "sep": fiber.sep() })))
        }
        PointQuery::Fiber => {
            let fiber = beta_fiber(&f, &sigma, &point)?;
            let table = if fiber.lifts.is_empty() {
                "(no lifts)".to_string()
            } else {
                fiber
                    .lifts
                    .iter()
                    .map(|l| format_vector(l))
                    .collect::<Vec<_>>()
                    .join("\n")
            };
            let json = base(json!({
                "sep": fiber.sep(),
                "lifts": fiber.lifts.iter().map(|l| json_vector(l)).collect::<Vec<_>>(),
            }));
            Output::ok(table, json)
        }
        PointQuery::Jw => {
            let j = j_w(&sigma, &point)?;
            Output::ok(j.to_string(), base(json!({ "j_w": json_int(&j) })))
        }
        PointQuery::Theta => {
            let data = jet_fiber_data(&f, &sigma, &point)?;
            let table = format!(
                "{}\nj' = {}, stable from level {}",
                data.theta, data.j_prime, data.threshold
            );
            let json = base(json!({
                "theta": data.theta.to_string(),
                "j_prime": data.j_prime,
                "threshold": data.threshold,
            }));
            Output::ok(table, json)
        }
    })
}

fn stringy(input: StackyFanInput, precision: u64, rational: bool) -> Result<Output> {
    if rational {
        if input.maximal_cones.len() != 1 {
            return Err(Error::InvalidInput(
                "--rational needs a fan with a single maximal cone".into(),
            ));
        }
        let c = maximal_cones(&input)?.remove(0);
        let closed = stringy_rational(&AffineToricData::new(c)?)?;
        let json = json!({
            "root_order": closed.root_order(),
            "rational": closed.to_string(),
        });
        return Ok(Output::ok(closed.to_string(), json));
    }
    let series = stringy_series_fan(&input, precision)?;
    Ok(Output::ok(series.to_string(), json_series(&series)))
}

fn stabilizers(input: StackyFanInput) -> Result<Output> {
    let f = build_fantastack(input)?;
    let (special, witness) = has_special_stabilizers(&f)?;
    let mut table = format!("special: {special}");
    if let Some(w) = &witness {
        let vectors: Vec<String> = w.iter().map(|&i| format_vector(f.column(i))).collect();
        write!(table, "\nwitness columns: {w:?} {}", vectors.join(" ")).unwrap();
    }
    Ok(Output::ok(table, json!({ "special": special, "witness": witness })))
}

fn verify(input: StackyFanInput, grade_bound: u64, precision: u64) -> Result<Output> {
    let f = build_fantastack(input)?;
    let mut table = String::new();
    let mut reports = Vec::new();
    let mut failed = false;
    for (k, c) in f.maximal_cones().iter().enumerate() {
        let sigma = AffineToricData::new(c.clone())?;
        let report = verify_identities(&f, &sigma, grade_bound, precision);
        failed |= !report.passed();
        writeln!(table, "cone {k} (grade bound {grade_bound}, precision {precision})").unwrap();
        for check in &report.checks {
            let status = match check.status {
                CheckStatus::Pass => "PASS",
                CheckStatus::Fail => "FAIL",
                CheckStatus::Skipped => "SKIP",
            };
            write!(table, "  {:<22} {status}", check.name).unwrap();
            if let Some(note) = &check.note {
                write!(table, "  ({note})").unwrap();
            }
            table.push('\n');
            if let Some(wit) = &check.witness {
                if let Some(w) = &wit.w {
                    writeln!(table, "    w = {w}").unwrap();
                }
                writeln!(table, "    lhs = {}", wit.lhs).unwrap();
                writeln!(table, "    rhs = {}", wit.rhs).unwrap();
            }
        }
        reports.push(json!({ "cone": k, "report": report }));
    }
    let json = json!({ "passed": !failed, "cones": reports });
    Ok(Output { table, json, failed })
}
