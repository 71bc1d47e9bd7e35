//! `torsion` — exact torsion-growth invariants for products of elliptic
//! curves, with a verification harness for the underlying group model.
//!
//! Exit codes: 0 success, 1 check failure under `verify` (or a degree
//! cross-check mismatch), 2 usage or input validation error, 3 infeasible
//! computation (enumeration budget, dimension caps, modulus overflow).

mod report;
mod spec;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::Value;

use report::{val, Format, Report};
use spec::{parse_spec, SpecDocument};
use torsion_core::enumerate::enumerate_degree_oracle;
use torsion_core::galois::{
    product_degree, FactorKind, FactorModel, GaloisError, ProductModel, SubgroupShape,
    DEFAULT_BUDGET,
};
use torsion_core::invariants::{
    achieved_ratio, alpha, m_invariant, m_invariant_grid, worst_case_profile, InvariantError,
    VarietySpec,
};
use torsion_core::modular::{AlgebraError, Modulus};
use torsion_core::rational::{rat_decimal, rat_string, rat_to_f64};
use torsion_core::verify::{
    check_alpha_convergence, check_alpha_eq_m, check_gammamn, check_parallelogram,
    check_property_mu, CheckReport, VerifyError,
};

#[derive(Parser)]
#[command(
    name = "torsion",
    version,
    about = "Torsion-growth invariants of products of elliptic curves"
)]
struct Cli {
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Table)]
    format: FormatArg,
    /// Enumeration cap (default 10000000; TORSION_BUDGET overrides the default)
    #[arg(long, global = true)]
    budget: Option<u64>,
    /// Write the report to a file (atomically) instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum FormatArg {
    Table,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal torsion-growth exponent of a declared product
    Alpha {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Fractional-program invariant with its achieving ray
    Minv {
        #[arg(long)]
        spec: PathBuf,
        /// Also run the integer grid oracle up to this bound
        #[arg(long)]
        grid_bound: Option<u32>,
    },
    /// Exact torsion-field degree of a shape assignment in the group model
    Degree {
        #[arg(long)]
        ell: u64,
        #[arg(long)]
        level: u32,
        /// Comma-separated factor kinds: noncm, cmsplit, cmnonsplit
        #[arg(long)]
        model: String,
        /// Semicolon-separated exponent pairs, e.g. `1,1;0,2`
        #[arg(long)]
        shapes: String,
    },
    /// Worst-case integral exponent profile at a scale, with achieved ratio
    Worst {
        #[arg(long)]
        spec: PathBuf,
        /// Prime for the group model (falls back to the spec file's `ell`)
        #[arg(long)]
        ell: Option<u64>,
        #[arg(long, default_value_t = 1)]
        scale: u32,
    },
    /// Verification harness
    Verify {
        #[command(subcommand)]
        check: VerifyCommand,
    },
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Set identity: shape fixer times SL2 equals the det-congruence set
    Gammamn {
        #[arg(long)]
        ell: u64,
        #[arg(long)]
        level: u32,
    },
    /// Multiplier coset exponents of every shape fixer
    Mu {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        ell: u64,
        #[arg(long)]
        level: u32,
    },
    /// Degree-calculus ratio band and its stability across levels
    Parallelogram {
        #[arg(long)]
        ell: u64,
        /// Comma-separated factor kinds
        #[arg(long)]
        kinds: String,
    },
    /// Achieved-ratio convergence toward alpha along the worst-case ray
    Convergence {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        ell: Option<u64>,
        #[arg(long, default_value_t = 12)]
        t_max: u32,
        #[arg(long, default_value_t = 0.05)]
        tolerance: f64,
    },
    /// Exact equality of the two invariants over a spec universe
    AlphaEqM {
        #[arg(long, default_value_t = 3)]
        max_classes: usize,
        #[arg(long, default_value_t = 2)]
        max_mult: u32,
        #[arg(long, default_value_t = 4)]
        grid_bound: u32,
    },
}

enum CliError {
    /// Bad input: exit 2.
    Usage(Vec<String>),
    /// Computation cannot be carried out at this scale: exit 3.
    Infeasible(String),
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(vec![msg.into()])
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::Galois(g) => g.into(),
            VerifyError::Invariant(i) => i.into(),
            VerifyError::Algebra(a) => a.into(),
        }
    }
}

impl From<GaloisError> for CliError {
    fn from(e: GaloisError) -> Self {
        match e {
            GaloisError::BudgetExceeded { .. } => CliError::Infeasible(e.to_string()),
            other => CliError::usage(other.to_string()),
        }
    }
}

impl From<InvariantError> for CliError {
    fn from(e: InvariantError) -> Self {
        match e {
            InvariantError::DimensionTooLarge { .. } => CliError::Infeasible(e.to_string()),
            InvariantError::Galois(g) => g.into(),
            InvariantError::Algebra(a) => a.into(),
            other => CliError::usage(other.to_string()),
        }
    }
}

impl From<AlgebraError> for CliError {
    fn from(e: AlgebraError) -> Self {
        match e {
            AlgebraError::ModulusOverflow(..) => CliError::Infeasible(e.to_string()),
            other => CliError::usage(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = match cli.format {
        FormatArg::Table => Format::Table,
        FormatArg::Json => Format::Json,
    };
    let budget = match resolve_budget(cli.budget) {
        Ok(b) => b,
        Err(e) => return fail(e),
    };
    match dispatch(&cli.command, budget) {
        Ok((report, ok)) => {
            if let Err(e) = report.emit(format, cli.out.as_deref()) {
                eprintln!("error: cannot write report: {e}");
                return ExitCode::from(3);
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => fail(e),
    }
}

fn fail(e: CliError) -> ExitCode {
    match e {
        CliError::Usage(msgs) => {
            for m in msgs {
                eprintln!("error: {m}");
            }
            ExitCode::from(2)
        }
        CliError::Infeasible(msg) => {
            eprintln!("error: infeasible: {msg}");
            ExitCode::from(3)
        }
    }
}

fn resolve_budget(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(b) = flag {
        return Ok(b);
    }
    match std::env::var("TORSION_BUDGET") {
        Ok(s) => s
            .parse::<u64>()
            .map_err(|_| CliError::usage(format!("TORSION_BUDGET `{s}` is not an integer"))),
        Err(_) => Ok(DEFAULT_BUDGET),
    }
}

fn dispatch(command: &Command, budget: u64) -> Result<(Report, bool), CliError> {
    match command {
        Command::Alpha { spec } => cmd_alpha(spec),
        Command::Minv { spec, grid_bound } => cmd_minv(spec, *grid_bound),
        Command::Degree {
            ell,
            level,
            model,
            shapes,
        } => cmd_degree(*ell, *level, model, shapes, budget),
        Command::Worst { spec, ell, scale } => cmd_worst(spec, *ell, *scale),
        Command::Verify { check } => cmd_verify(check, budget),
    }
}

fn load_spec(path: &Path) -> Result<(SpecDocument, VarietySpec), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let doc = parse_spec(&text).map_err(CliError::Usage)?;
    let variety = doc.to_variety();
    Ok((doc, variety))
}

fn spec_input(doc: &SpecDocument) -> Value {
    val(doc
        .factors
        .iter()
        .map(|f| {
            let mut m = BTreeMap::new();
            m.insert("label", val(&f.label));
            m.insert("cm", val(f.cm));
            m.insert("multiplicity", val(f.multiplicity));
            m
        })
        .collect::<Vec<_>>())
}

fn cmd_alpha(path: &Path) -> Result<(Report, bool), CliError> {
    let (doc, variety) = load_spec(path)?;
    let witness = alpha(&variety)?;
    let mut report = Report::new("alpha");
    report
        .inputs
        .insert("spec_file".into(), val(path.display().to_string()));
    report.inputs.insert("factors".into(), spec_input(&doc));
    report
        .results
        .insert("alpha".into(), val(rat_string(&witness.value)));
    report
        .results
        .insert("alpha_decimal".into(), val(rat_decimal(&witness.value, 10)));
    report
        .witnesses
        .insert("subset".into(), val(&witness.labels));
    Ok((report, true))
}

fn cmd_minv(path: &Path, grid_bound: Option<u32>) -> Result<(Report, bool), CliError> {
    let (doc, variety) = load_spec(path)?;
    let witness = m_invariant(&variety)?;
    let mut report = Report::new("minv");
    report
        .inputs
        .insert("spec_file".into(), val(path.display().to_string()));
    report.inputs.insert("factors".into(), spec_input(&doc));
    report
        .results
        .insert("m".into(), val(rat_string(&witness.value)));
    report
        .results
        .insert("m_decimal".into(), val(rat_decimal(&witness.value, 10)));
    report
        .results
        .insert("active_case".into(), val(witness.active_case));
    report
        .witnesses
        .insert("profile".into(), val(&witness.profile));
    let mut ok = true;
    if let Some(bound) = grid_bound {
        report.inputs.insert("grid_bound".into(), val(bound));
        let grid = m_invariant_grid(&variety, bound)?;
        report
            .results
            .insert("grid".into(), val(rat_string(&grid.value)));
        report
            .results
            .insert("grid_le_m".into(), val(grid.value <= witness.value));
        report
            .witnesses
            .insert("grid_profile".into(), val(&grid.profile));
        ok = grid.value <= witness.value;
    }
    Ok((report, ok))
}

fn parse_kinds(s: &str) -> Result<Vec<FactorKind>, CliError> {
    s.split(',')
        .map(|k| {
            k.trim()
                .parse::<FactorKind>()
                .map_err(|e| CliError::usage(e.to_string()))
        })
        .collect()
}

fn parse_shapes(s: &str) -> Result<Vec<SubgroupShape>, CliError> {
    s.split(';')
        .map(|pair| {
            let parts: Vec<&str> = pair.split(',').map(str::trim).collect();
            if parts.len() != 2 {
                return Err(CliError::usage(format!(
                    "shape `{pair}` must be two comma-separated exponents"
                )));
            }
            let lo: u32 = parts[0]
                .parse()
                .map_err(|_| CliError::usage(format!("bad exponent `{}`", parts[0])))?;
            let up: u32 = parts[1]
                .parse()
                .map_err(|_| CliError::usage(format!("bad exponent `{}`", parts[1])))?;
            SubgroupShape::new(lo, up).map_err(CliError::from)
        })
        .collect()
}

fn cmd_degree(
    ell: u64,
    level: u32,
    model: &str,
    shapes: &str,
    budget: u64,
) -> Result<(Report, bool), CliError> {
    let kinds = parse_kinds(model)?;
    let shapes = parse_shapes(shapes)?;
    if kinds.len() != shapes.len() {
        return Err(CliError::usage(format!(
            "{} kinds but {} shapes",
            kinds.len(),
            shapes.len()
        )));
    }
    let modulus = Modulus::new(ell, level)?;
    let factors: Vec<FactorModel> = kinds
        .iter()
        .enumerate()
        .map(|(i, &k)| FactorModel::new(k, 1, format!("f{}", i + 1)).expect("multiplicity 1"))
        .collect();
    let product = ProductModel::new(factors, modulus)?;
    let degree = product_degree(&product, &shapes)?;
    let mut report = Report::new("degree");
    report.inputs.insert("ell".into(), val(ell));
    report.inputs.insert("level".into(), val(level));
    report.inputs.insert(
        "model".into(),
        val(kinds.iter().map(|k| k.to_string()).collect::<Vec<_>>()),
    );
    report.inputs.insert(
        "shapes".into(),
        val(shapes.iter().map(|s| s.to_string()).collect::<Vec<_>>()),
    );
    report
        .results
        .insert("degree".into(), val(degree.degree.to_string()));
    report.results.insert(
        "per_factor_degrees".into(),
        val(degree
            .per_factor_degrees
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()),
    );
    report.results.insert(
        "cyclotomic_exponent".into(),
        val(degree.cyclotomic_exponent),
    );
    report
        .results
        .insert("ell_exponent".into(), val(degree.ell_exponent));
    report
        .results
        .insert("unit_part".into(), val(degree.unit_part.to_string()));
    // independent recount where the budget allows
    let gens: Vec<Vec<(u64, u64)>> = shapes
        .iter()
        .map(|s| s.standard_generators(&modulus))
        .collect();
    let mut ok = true;
    match enumerate_degree_oracle(&product, &gens, budget) {
        Ok(oracle) => {
            let agrees = oracle == degree.degree;
            report
                .results
                .insert("oracle_degree".into(), val(oracle.to_string()));
            report.results.insert("oracle_agrees".into(), val(agrees));
            ok = agrees;
        }
        Err(GaloisError::BudgetExceeded { .. }) => {
            report.results.insert(
                "oracle_degree".into(),
                val("skipped: over enumeration budget"),
            );
        }
        Err(e) => return Err(e.into()),
    }
    Ok((report, ok))
}

fn resolve_ell(flag: Option<u64>, doc: &SpecDocument) -> Result<u64, CliError> {
    flag.or(doc.ell)
        .ok_or_else(|| CliError::usage("no prime given: pass --ell or set `ell` in the spec file"))
}

fn cmd_worst(path: &Path, ell: Option<u64>, scale: u32) -> Result<(Report, bool), CliError> {
    let (doc, variety) = load_spec(path)?;
    let ell = resolve_ell(ell, &doc)?;
    if scale < 1 {
        return Err(CliError::usage("--scale must be at least 1"));
    }
    let m_witness = m_invariant(&variety)?;
    let alpha_witness = alpha(&variety)?;
    let profile = worst_case_profile(&variety, scale)?;
    let achieved = achieved_ratio(&variety, &profile, ell)?;
    let mut report = Report::new("worst");
    report
        .inputs
        .insert("spec_file".into(), val(path.display().to_string()));
    report.inputs.insert("factors".into(), spec_input(&doc));
    report.inputs.insert("ell".into(), val(ell));
    report.inputs.insert("scale".into(), val(scale));
    report
        .results
        .insert("alpha".into(), val(rat_string(&alpha_witness.value)));
    report
        .results
        .insert("m".into(), val(rat_string(&m_witness.value)));
    report.results.insert(
        "ratio_ell_part".into(),
        val(achieved.ell_part.as_ref().map(rat_string)),
    );
    report.results.insert(
        "ratio_corrected".into(),
        val(format!("{:.9}", achieved.corrected)),
    );
    report.results.insert(
        "gap".into(),
        val(format!(
            "{:.9}",
            (achieved.corrected - rat_to_f64(&alpha_witness.value)).abs()
        )),
    );
    report.results.insert(
        "degree_ell_exponent".into(),
        val(achieved.degree.ell_exponent),
    );
    report.results.insert(
        "degree_unit_part".into(),
        val(achieved.degree.unit_part.to_string()),
    );
    report.witnesses.insert("profile".into(), val(&profile));
    Ok((report, true))
}

fn check_to_report(name: &str, check: CheckReport) -> (Report, bool) {
    let mut report = Report::new(name);
    let passed = check.passed;
    report.results.insert("passed".into(), val(passed));
    report
        .results
        .insert("cells".into(), val(check.cells.len()));
    report
        .results
        .insert("failed_cells".into(), val(check.failures().count()));
    for (k, v) in &check.measured_constants {
        report.constants.insert(k.clone(), val(v));
    }
    let failures: Vec<_> = check.failures().take(5).cloned().collect();
    if !failures.is_empty() {
        report.witnesses.insert("failures".into(), val(failures));
    }
    (report, passed)
}

fn cmd_verify(check: &VerifyCommand, budget: u64) -> Result<(Report, bool), CliError> {
    match check {
        VerifyCommand::Gammamn { ell, level } => {
            let modulus = Modulus::new(*ell, *level)?;
            let rep = check_gammamn(&modulus, budget)?;
            let (mut report, ok) = check_to_report("verify gammamn", rep);
            report.inputs.insert("ell".into(), val(ell));
            report.inputs.insert("level".into(), val(level));
            Ok((report, ok))
        }
        VerifyCommand::Mu { kind, ell, level } => {
            let kind: FactorKind = kind.parse()?;
            let modulus = Modulus::new(*ell, *level)?;
            let rep = check_property_mu(kind, &modulus, budget)?;
            let (mut report, ok) = check_to_report("verify mu", rep);
            report.inputs.insert("kind".into(), val(kind.to_string()));
            report.inputs.insert("ell".into(), val(ell));
            report.inputs.insert("level".into(), val(level));
            Ok((report, ok))
        }
        VerifyCommand::Parallelogram { ell, kinds } => {
            let kinds = parse_kinds(kinds)?;
            let rep = check_parallelogram(*ell, &kinds, budget)?;
            let (mut report, ok) = check_to_report("verify parallelogram", rep);
            report.inputs.insert("ell".into(), val(ell));
            report.inputs.insert(
                "kinds".into(),
                val(kinds.iter().map(|k| k.to_string()).collect::<Vec<_>>()),
            );
            Ok((report, ok))
        }
        VerifyCommand::Convergence {
            spec,
            ell,
            t_max,
            tolerance,
        } => {
            let (doc, variety) = load_spec(spec)?;
            let ell = resolve_ell(*ell, &doc)?;
            let rep = check_alpha_convergence(&variety, ell, *t_max, *tolerance)?;
            let (mut report, ok) = check_to_report("verify convergence", rep);
            report
                .inputs
                .insert("spec_file".into(), val(spec.display().to_string()));
            report.inputs.insert("ell".into(), val(ell));
            report.inputs.insert("t_max".into(), val(t_max));
            report.inputs.insert("tolerance".into(), val(tolerance));
            Ok((report, ok))
        }
        VerifyCommand::AlphaEqM {
            max_classes,
            max_mult,
            grid_bound,
        } => {
            let rep = check_alpha_eq_m(*max_classes, *max_mult, *grid_bound)?;
            let (mut report, ok) = check_to_report("verify alpha-eq-m", rep);
            report.inputs.insert("max_classes".into(), val(max_classes));
            report.inputs.insert("max_mult".into(), val(max_mult));
            report.inputs.insert("grid_bound".into(), val(grid_bound));
            Ok((report, ok))
        }
    }
}
