//! Command-line front end. The binary only calls [`run`].

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::constructions::{
    dps_system, endo_space, extraspecial_rds, heisenberg_system, heisenberg_system_2r, linked_power, q8_system,
    q8_system_2r, theorem_1_2_rds, Bundle, LinkedAssembly,
};
use crate::ff::{Field, FieldElement};
use crate::groups::{FiniteGroup, GroupJson, Subgroup};
use crate::linked::{munu_branches, verify_linked};
use crate::rds::{cayley_graph, dev, find_forbidden, verify_pds, verify_rds};
use crate::schur::{verify_sring, SchurPartition};

#[derive(Parser, Debug)]
#[command(name = "linkrds", version, about = "Relative difference sets and linked systems in finite groups")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Include wall-clock timings in the report (makes output run-dependent).
    #[arg(long, global = true)]
    pub timings: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a construction, verify it, and write its JSON bundle.
    Construct(ConstructArgs),
    /// Verify sets against a group.
    Verify(VerifyArgs),
    /// Export a Cayley graph, a development, or structure constants.
    Export(ExportArgs),
    /// Compute the realized (mu, nu) of an assembled linked system.
    ResolveBranch(ResolveArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Heisenberg,
    Heisenberg2r,
    Extraspecial,
    Q8,
    #[value(name = "q8-2r")]
    Q82r,
    Dps,
    Thm12,
}

#[derive(Args, Debug)]
pub struct ConstructArgs {
    #[arg(value_enum)]
    pub family: Family,
    /// Field order for Heisenberg constructions.
    #[arg(long)]
    pub q: Option<u32>,
    /// Number of factors / half-dimension.
    #[arg(long)]
    pub r: Option<usize>,
    /// Odd prime for extraspecial and thm12.
    #[arg(long)]
    pub p: Option<u32>,
    /// Field order for dps.
    #[arg(long)]
    pub n: Option<u32>,
    /// |H| for dps.
    #[arg(long)]
    pub t: Option<usize>,
    /// |S| for dps.
    #[arg(long)]
    pub s: Option<usize>,
    /// Nonsquare used by the Heisenberg automorphisms (field element index).
    #[arg(long)]
    pub epsilon: Option<u32>,
    /// Line labels for dps, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub labeling: Option<Vec<usize>>,
    /// Automorphism of S ∪ {∞} used in products, as images of 0..=s.
    #[arg(long, value_delimiter = ',')]
    pub f: Option<Vec<usize>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerifyKind {
    Rds,
    Pds,
    Sring,
    Linked,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub kind: VerifyKind,
    /// Group JSON, or a bundle.
    #[arg(long)]
    pub group: PathBuf,
    /// JSON array of index arrays, or a bundle.
    #[arg(long)]
    pub sets: PathBuf,
    /// JSON index array, or a bundle.
    #[arg(long)]
    pub forbidden: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportWhat {
    Graph,
    Dev,
    Ctensor,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Adjlist,
    Dimacs,
    Json,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    #[arg(value_enum)]
    pub what: ExportWhat,
    #[arg(long)]
    pub group: PathBuf,
    #[arg(long)]
    pub sets: PathBuf,
    /// Which set to use for graph and dev.
    #[arg(long, default_value_t = 0)]
    pub index: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Heis2r,
    #[value(name = "q8-2r")]
    Q82r,
}

#[derive(Args, Debug)]
pub struct ResolveArgs {
    #[arg(long, value_enum)]
    pub target: Target,
    #[arg(long, default_value_t = 3)]
    pub q: u32,
    #[arg(long, default_value_t = 2)]
    pub r: usize,
}

/// What every command prints on stdout.
#[derive(Serialize, Debug)]
pub struct RunReport {
    pub command: String,
    pub inputs: BTreeMap<String, Value>,
    pub ok: bool,
    pub certificates: Vec<Value>,
    pub discrepancies: BTreeMap<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<BTreeMap<String, u128>>,
}

impl RunReport {
    fn new(command: &str) -> Self {
        RunReport {
            command: command.to_string(),
            inputs: BTreeMap::new(),
            ok: true,
            certificates: Vec::new(),
            discrepancies: BTreeMap::new(),
            error: None,
            timings_ms: None,
        }
    }

    fn fail(&mut self, e: impl std::fmt::Display) {
        self.ok = false;
        self.error = Some(e.to_string());
    }
}

fn read_json(path: &Path) -> anyhow::Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn is_bundle(v: &Value) -> bool {
    v.get("construction").is_some() && v.get("group").is_some()
}

fn load_group(path: &Path) -> anyhow::Result<FiniteGroup> {
    let v = read_json(path)?;
    let g = if is_bundle(&v) { v["group"].clone() } else { v };
    let json: GroupJson = serde_json::from_value(g).context("group JSON")?;
    Ok(FiniteGroup::from_json(&json)?)
}

fn load_sets(path: &Path) -> anyhow::Result<(Vec<Vec<usize>>, Option<Vec<usize>>)> {
    let v = read_json(path)?;
    if is_bundle(&v) {
        let b: Bundle = serde_json::from_value(v).context("bundle JSON")?;
        return Ok((b.set_indices(), Some(b.forbidden)));
    }
    Ok((serde_json::from_value(v).context("sets must be an array of index arrays")?, None))
}

fn load_forbidden(path: &Path) -> anyhow::Result<Vec<usize>> {
    let v = read_json(path)?;
    if is_bundle(&v) {
        return Ok(serde_json::from_value(v["forbidden"].clone())?);
    }
    serde_json::from_value(v).context("forbidden subgroup must be an index array")
}

fn to_json_string<T: Serialize>(x: &T) -> String {
    let mut s = serde_json::to_string_pretty(x).expect("serializable");
    s.push('\n');
    s
}

fn write_out(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => Ok(stdout.write_all(text.as_bytes())?),
    }
}

fn need<T: Copy>(x: Option<T>, name: &str) -> anyhow::Result<T> {
    x.ok_or_else(|| anyhow!("--{name} is required for this family"))
}

fn assembly_discrepancies(report: &mut RunReport, a: &LinkedAssembly) {
    report.discrepancies.insert("closed_formula".into(), json!([a.closed_formula.0, a.closed_formula.1]));
    report.discrepancies.insert("realized".into(), json!([a.realized().0, a.realized().1]));
    report.discrepancies.insert("matches_closed_formula".into(), json!(a.matches_closed_formula));
    report.discrepancies.insert("matches_recurrence".into(), json!(a.stages.iter().all(|s| s.matches_prediction)));
}

fn construct(args: &ConstructArgs, report: &mut RunReport) -> anyhow::Result<Bundle> {
    let epsilon = args.epsilon.map(FieldElement);
    let bundle = match args.family {
        Family::Heisenberg => {
            let q = need(args.q, "q")?;
            report.inputs.insert("q".into(), json!(q));
            let h = heisenberg_system(&Field::of_order(q)?, epsilon)?;
            if !h.psi_formula_holds {
                report.discrepancies.insert("psi_formula_holds".into(), json!(false));
            }
            if !h.eps_over_16_holds {
                report.discrepancies.insert("eps_over_16_holds".into(), json!(false));
            }
            h.bundle()
        }
        Family::Heisenberg2r => {
            let (q, r) = (need(args.q, "q")?, need(args.r, "r")?);
            report.inputs.insert("q".into(), json!(q));
            report.inputs.insert("r".into(), json!(r));
            let field = Field::of_order(q)?;
            let a = match &args.f {
                None => heisenberg_system_2r(&field, r, epsilon)?,
                Some(f) => {
                    report.inputs.insert("f".into(), json!(f));
                    let base = heisenberg_system(&field, epsilon)?;
                    let (piece, stages) = linked_power(&base.piece(), r, Some(f))?;
                    let closed = crate::constructions::heis2r_formula(q as i64, r as u32);
                    let mut a = heisenberg_system_2r(&field, 1, epsilon)?;
                    a.r = r;
                    a.piece = piece;
                    a.stages = stages;
                    a.closed_formula = closed;
                    a.matches_closed_formula = a.realized() == closed;
                    a
                }
            };
            assembly_discrepancies(report, &a);
            a.bundle()
        }
        Family::Extraspecial => {
            let p = need(args.p, "p")?;
            report.inputs.insert("p".into(), json!(p));
            extraspecial_rds(p)?.bundle()
        }
        Family::Q8 => {
            let a = q8_system_2r(1)?;
            a.bundle()
        }
        Family::Q82r => {
            let r = need(args.r, "r")?;
            report.inputs.insert("r".into(), json!(r));
            let a = match &args.f {
                None => q8_system_2r(r)?,
                Some(f) => {
                    report.inputs.insert("f".into(), json!(f));
                    let (piece, stages) = linked_power(&q8_system()?, r, Some(f))?;
                    let mut a = q8_system_2r(1)?;
                    a.r = r;
                    a.piece = piece;
                    a.stages = stages;
                    a.closed_formula = crate::constructions::heis2r_formula(2, r as u32);
                    a.matches_closed_formula = a.realized() == a.closed_formula;
                    a
                }
            };
            assembly_discrepancies(report, &a);
            a.bundle()
        }
        Family::Dps => {
            let (n, t, s) = (need(args.n, "n")?, need(args.t, "t")?, need(args.s, "s")?);
            report.inputs.insert("n".into(), json!(n));
            report.inputs.insert("t".into(), json!(t));
            report.inputs.insert("s".into(), json!(s));
            let field = Field::of_order(n)?;
            let p = field.characteristic() as usize;
            let log = |x: usize| -> anyhow::Result<u32> {
                let mut k = 0;
                let mut y = 1;
                while y < x {
                    y *= p;
                    k += 1;
                }
                if y != x {
                    bail!("{x} is not a power of {p}");
                }
                Ok(k)
            };
            let (j, i) = (log(t)?, log(s)?);
            let endo = endo_space(p as u32, j, i)?;
            dps_system(&field, t, &endo, args.labeling.as_deref())?.bundle()
        }
        Family::Thm12 => {
            let (p, r) = (need(args.p, "p")?, need(args.r, "r")?);
            report.inputs.insert("p".into(), json!(p));
            report.inputs.insert("r".into(), json!(r));
            theorem_1_2_rds(p, r)?.bundle()
        }
    };
    Ok(bundle)
}

/// Builds and verifies one construction without touching the filesystem.
pub fn construct_bundle(args: &ConstructArgs) -> anyhow::Result<Bundle> {
    construct(args, &mut RunReport::new("construct"))
}

fn verify(args: &VerifyArgs, report: &mut RunReport) -> anyhow::Result<()> {
    report.inputs.insert("kind".into(), json!(format!("{:?}", args.kind).to_lowercase()));
    let group = load_group(&args.group)?;
    let (sets, bundled_forbidden) = load_sets(&args.sets)?;
    let forbidden = match &args.forbidden {
        Some(p) => Some(load_forbidden(p)?),
        None => bundled_forbidden,
    };
    let subgroup = |f: &Option<Vec<usize>>| -> anyhow::Result<Option<Subgroup>> {
        f.as_ref().map(|els| Subgroup::new(&group, els).map_err(anyhow::Error::from)).transpose()
    };
    match args.kind {
        VerifyKind::Rds => {
            let given = subgroup(&forbidden)?;
            for (i, x) in sets.iter().enumerate() {
                let n = match &given {
                    Some(n) => n.clone(),
                    None => find_forbidden(&group, x)
                        .into_iter()
                        .next()
                        .ok_or_else(|| anyhow!("set {i}: no forbidden subgroup makes it an RDS"))?,
                };
                let c = verify_rds(&group, x, &n).with_context(|| format!("set {i}"))?;
                if c.symmetric_non_icommuting {
                    report.discrepancies.insert(format!("set_{i}_symmetric_non_icommuting"), json!(true));
                }
                report.certificates.push(serde_json::to_value(c)?);
            }
        }
        VerifyKind::Pds => {
            for (i, s) in sets.iter().enumerate() {
                let c = verify_pds(&group, s).with_context(|| format!("set {i}"))?;
                report.certificates.push(serde_json::to_value(c)?);
            }
        }
        VerifyKind::Sring => {
            let p = SchurPartition::new(&group, sets)?;
            let c = verify_sring(&group, &p)?;
            report.certificates.push(json!({
                "rank": c.rank,
                "class_sizes": c.class_sizes,
                "inverse_class": c.inverse_class,
                "structure_constants": c.cube(),
            }));
        }
        VerifyKind::Linked => {
            let n = subgroup(&forbidden)?.ok_or_else(|| anyhow!("--forbidden is required for linked"))?;
            let c = verify_linked(&group, &n, &sets)?;
            report.certificates.push(serde_json::to_value(c)?);
        }
    }
    Ok(())
}

fn export(args: &ExportArgs, report: &mut RunReport, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let group = load_group(&args.group)?;
    let (sets, _) = load_sets(&args.sets)?;
    let pick = || sets.get(args.index).ok_or_else(|| anyhow!("no set at index {}", args.index));
    let text = match (args.what, args.format) {
        (ExportWhat::Graph, fmt) => {
            let s: Vec<usize> = pick()?.iter().copied().filter(|&g| g != 0).collect();
            let g = cayley_graph(&group, &s)?;
            report.certificates.push(json!({"vertices": g.vertex_count(), "edges": g.edge_count(), "degree": s.len()}));
            match fmt {
                Format::Adjlist => g.to_adjlist(),
                Format::Dimacs => g.to_dimacs(),
                Format::Json => to_json_string(&g.to_json()),
            }
        }
        (ExportWhat::Dev, fmt) => {
            let blocks = dev(&group, pick()?);
            report.certificates.push(json!({"blocks": blocks.len()}));
            match fmt {
                Format::Adjlist => blocks
                    .iter()
                    .map(|b| b.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ") + "\n")
                    .collect(),
                Format::Json => to_json_string(&json!({"points": group.order(), "blocks": blocks})),
                Format::Dimacs => bail!("dev exports as adjlist or json"),
            }
        }
        (ExportWhat::Ctensor, Format::Json) => {
            let p = SchurPartition::new(&group, sets.clone())?;
            let c = verify_sring(&group, &p)?;
            report.certificates.push(json!({"rank": c.rank}));
            to_json_string(&json!({"classes": p.classes(), "structure_constants": c.cube()}))
        }
        (ExportWhat::Ctensor, _) => bail!("ctensor exports as json"),
    };
    write_out(args.out.as_deref(), &text, stdout)
}

fn resolve(args: &ResolveArgs, report: &mut RunReport) -> anyhow::Result<()> {
    report.inputs.insert("r".into(), json!(args.r));
    let a = match args.target {
        Target::Heis2r => {
            report.inputs.insert("q".into(), json!(args.q));
            heisenberg_system_2r(&Field::of_order(args.q)?, args.r, None)?
        }
        Target::Q82r => q8_system_2r(args.r)?,
    };
    let c = &a.piece.certificate;
    let branches = munu_branches(c.m, c.n, c.k)?;
    let realized = a.realized();
    let recurrence = a.stages.last().map(|s| s.predicted);
    report.certificates.push(json!({
        "parameters": [c.m, c.n, c.k, c.lambda, c.s, c.mu, c.nu],
        "branches": branches,
        "realized": [realized.0, realized.1],
        "recurrence": recurrence.map(|(m, n)| json!([m, n])),
        "closed_formula": [a.closed_formula.0, a.closed_formula.1],
    }));
    assembly_discrepancies(report, &a);
    if !branches.contains(&realized) {
        bail!("realized {realized:?} is not an admissible branch {branches:?}");
    }
    Ok(())
}

/// Runs one command, writing the report to `stdout`; returns the exit code.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> i32 {
    let start = Instant::now();
    let (name, result, mut report) = match &cli.command {
        Command::Construct(args) => {
            let mut report = RunReport::new("construct");
            report.inputs.insert("family".into(), json!(format!("{:?}", args.family).to_lowercase()));
            let r = construct(args, &mut report).and_then(|b| {
                report.certificates.push(b.certificate.clone());
                write_out(args.out.as_deref(), &to_json_string(&b), stdout)
            });
            ("construct", r, report)
        }
        Command::Verify(args) => {
            let mut report = RunReport::new("verify");
            let r = verify(args, &mut report);
            ("verify", r, report)
        }
        Command::Export(args) => {
            let mut report = RunReport::new("export");
            report.inputs.insert("what".into(), json!(format!("{:?}", args.what).to_lowercase()));
            let r = export(args, &mut report, stdout);
            ("export", r, report)
        }
        Command::ResolveBranch(args) => {
            let mut report = RunReport::new("resolve-branch");
            report.inputs.insert("target".into(), json!(format!("{:?}", args.target).to_lowercase()));
            let r = resolve(args, &mut report);
            ("resolve-branch", r, report)
        }
    };
    if let Err(e) = result {
        report.fail(format!("{e:#}"));
    }
    if cli.timings {
        report.timings_ms = Some(BTreeMap::from([(name.to_string(), start.elapsed().as_millis())]));
    }
    // construct/export without --out already used stdout for the payload
    let payload_on_stdout = match &cli.command {
        Command::Construct(a) => a.out.is_none(),
        Command::Export(a) => a.out.is_none(),
        _ => false,
    };
    let text = to_json_string(&report);
    if payload_on_stdout {
        eprint!("{text}");
    } else {
        let _ = stdout.write_all(text.as_bytes());
    }
    if report.ok {
        0
    } else {
        1
    }
}
