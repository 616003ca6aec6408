mod registry;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use planar_stopping::densities::{dynkin_check, Density, HarmonicTestFn};
use planar_stopping::error::Error;
use planar_stopping::geometry::{c, Complex, Domain};
use planar_stopping::identities::{self, coco_diagnostic};
use planar_stopping::montecarlo::{
    self, run_gate, samples_csv, simulate, summarize, PathConfig, Scheme, StoppingRule, GATE_IDS, GATE_PATHS,
};

const SCHEMA: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "pstop", version, about = "Exit and winding densities of planar Brownian motion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Args, Debug)]
struct Flags {
    /// RNG seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Number of paths.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Time increment of a Gaussian step.
    #[arg(long, global = true, default_value_t = 1e-4)]
    step: f64,
    /// Walk-on-spheres stopping distance.
    #[arg(long, global = true, default_value_t = 1e-6)]
    eps: f64,
    /// Verification tolerance.
    #[arg(long, global = true, default_value_t = identities::DEFAULT_TOL)]
    tol: f64,
    /// Series truncation.
    #[arg(long, global = true)]
    trunc: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Number of rows for tabulation.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Named parameter, `name=value`; repeatable.
    #[arg(long = "param", global = true, value_parser = parse_param)]
    params: Vec<(String, f64)>,
    /// Shorthand for `--param r=<value>`.
    #[arg(long, global = true)]
    r: Option<f64>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List catalog ids.
    List {
        #[arg(value_enum)]
        what: Option<Listing>,
    },
    /// Describe a density, or evaluate it at `--s` on `--curve`.
    Density {
        id: String,
        #[arg(long, default_value_t = 0)]
        curve: usize,
        #[arg(long, allow_hyphen_values = true)]
        s: Option<f64>,
    },
    /// Cumulative mass of a curve up to `--s`.
    Cdf {
        id: String,
        #[arg(long, default_value_t = 0)]
        curve: usize,
        #[arg(long, allow_hyphen_values = true)]
        s: f64,
    },
    /// Simulate stopped paths.
    Sample {
        #[arg(long, value_enum)]
        rule: RuleName,
        /// Region for `--rule exit`.
        #[arg(long, value_enum)]
        domain: Option<DomainName>,
        /// Start point `re,im`.
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        start: Option<Complex>,
        #[arg(long, value_enum, default_value_t = SchemeName::Euler)]
        scheme: SchemeName,
    },
    /// Simulate a gate and compare with its density by a KS test.
    VerifyDensity { id: String },
    /// Evaluate an identity and compare its sides.
    VerifyIdentity { id: String },
    /// Compare `h(start)` with the integral of `h` against a density.
    Dynkin {
        id: String,
        /// Test functions (`re_z1`, `im_z2`, `log_abs`, ...); repeatable.
        #[arg(long)]
        h: Vec<String>,
    },
    /// Tabulate `(s, value, cdf)` on one curve.
    Export {
        #[arg(long)]
        density: String,
        #[arg(long, default_value_t = 0)]
        curve: usize,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Listing {
    Densities,
    Identities,
    Gates,
    Harmonics,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum RuleName {
    Exit,
    WindingSym,
    WindingAsym,
    PrescribedArg,
    HitSegment,
    HitDoubleRay,
    HomotopySegment,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum DomainName {
    Disk,
    Halfplane,
    Strip,
    Halfstrip,
    Rectangle,
    Annulus,
    PuncturedDisk,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SchemeName {
    Euler,
    Wos,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("bad value in `{s}`: {e}"))?;
    Ok((k.trim().to_string(), v))
}

fn parse_complex(s: &str) -> Result<Complex, String> {
    let (re, im) = s.split_once(',').unwrap_or((s, "0"));
    let p = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("bad number `{t}`: {e}"));
    Ok(c(p(re)?, p(im)?))
}

/// Failure modes mapped to exit codes.
enum Fail {
    Usage(String),
    Compute(String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        match e {
            Error::OutOfRange(_)
            | Error::NotInterior { .. }
            | Error::StartOnBoundary
            | Error::Unknown(_)
            | Error::Unsupported(_) => Fail::Usage(e.to_string()),
            _ => Fail::Compute(e.to_string()),
        }
    }
}

/// Standard output text and whether every check passed.
struct Output {
    text: String,
    pass: bool,
}

impl Output {
    fn ok(text: String) -> Self {
        Output { text, pass: true }
    }
}

type Run = Result<Output, Fail>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            print!("{}", out.text);
            if out.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Fail::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("usage: pstop <list|density|cdf|sample|verify-density|verify-identity|dynkin|export> [flags]");
            ExitCode::from(2)
        }
        Err(Fail::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn params(f: &Flags) -> Result<BTreeMap<String, f64>, Fail> {
    let mut out = BTreeMap::new();
    for (k, v) in f.params.iter().cloned().chain(f.r.map(|r| ("r".to_string(), r))) {
        if out.insert(k.clone(), v).is_some() {
            return Err(Fail::Usage(format!("parameter `{k}` given twice")));
        }
    }
    Ok(out)
}

fn json_doc(command: &str, body: Value) -> String {
    let mut doc = json!({ "schema": SCHEMA, "command": command });
    if let (Value::Object(d), Value::Object(b)) = (&mut doc, body) {
        d.extend(b);
    }
    serde_json::to_string_pretty(&doc).expect("values serialize") + "\n"
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("values serialize")
}

fn csv(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut out = format!("{header}\n");
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    out
}

fn run(cli: &Cli) -> Run {
    let f = &cli.flags;
    if !(f.tol > 0.0) {
        return Err(Fail::Usage("--tol must be positive".into()));
    }
    if f.n == Some(0) || f.grid == Some(0) || f.trunc == Some(0) {
        return Err(Fail::Usage("--n, --grid and --trunc must be positive".into()));
    }
    match &cli.command {
        Command::List { what } => list(f, *what),
        Command::Density { id, curve, s } => density(f, id, *curve, *s),
        Command::Cdf { id, curve, s } => cdf(f, id, *curve, *s),
        Command::Sample { rule, domain, start, scheme } => sample(f, *rule, *domain, *start, *scheme),
        Command::VerifyDensity { id } => verify_density(f, id),
        Command::VerifyIdentity { id } => verify_identity(f, id),
        Command::Dynkin { id, h } => dynkin(f, id, h),
        Command::Export { density, curve } => export(f, density, *curve),
    }
}

fn list(f: &Flags, what: Option<Listing>) -> Run {
    let mut groups: BTreeMap<&str, Vec<(String, String)>> = BTreeMap::new();
    let want = |l: Listing| what.is_none_or(|w| w == l);
    if want(Listing::Densities) {
        let rows = registry::DENSITIES
            .iter()
            .map(|e| {
                let d = registry::build(e.id, &BTreeMap::new(), None)?;
                Ok((e.id.to_string(), d.equation_tag().to_string()))
            })
            .collect::<Result<Vec<_>, Error>>()?;
        groups.insert("densities", rows);
    }
    if want(Listing::Identities) {
        let mut ids: Vec<_> = identities::IDS.iter().map(|id| (id.to_string(), String::new())).collect();
        ids.sort();
        groups.insert("identities", ids);
    }
    if want(Listing::Gates) {
        groups.insert("gates", GATE_IDS.iter().map(|id| (id.to_string(), String::new())).collect());
    }
    if want(Listing::Harmonics) {
        let mut hs: Vec<_> = HarmonicTestFn::catalog().iter().map(|h| (h.label(), String::new())).collect();
        hs.sort();
        groups.insert("harmonics", hs);
    }
    let text = match f.format {
        Format::Csv => csv(
            "group,id,tag",
            groups.iter().flat_map(|(g, rows)| rows.iter().map(move |(id, tag)| format!("{g},{id},{tag}"))),
        ),
        Format::Json => {
            let body: serde_json::Map<String, Value> = groups
                .iter()
                .map(|(g, rows)| {
                    let items: Vec<Value> = rows
                        .iter()
                        .map(|(id, tag)| if tag.is_empty() { json!(id) } else { json!({ "id": id, "tag": tag }) })
                        .collect();
                    (g.to_string(), Value::Array(items))
                })
                .collect();
            json_doc("list", Value::Object(body))
        }
    };
    Ok(Output::ok(text))
}

fn build_density(f: &Flags, id: &str) -> Result<Density, Fail> {
    Ok(registry::build(id, &params(f)?, f.trunc)?)
}

fn density(f: &Flags, id: &str, curve: usize, s: Option<f64>) -> Run {
    let d = build_density(f, id)?;
    d.curve(curve)?;
    if let Some(s) = s {
        let v = d.value(curve, s)?;
        let text = match f.format {
            Format::Csv => csv("id,curve,s,value", [format!("{id},{curve},{s},{v}")]),
            Format::Json => json_doc("density", json!({ "id": id, "curve": curve, "s": s, "value": v })),
        };
        return Ok(Output::ok(text));
    }
    let curves = d
        .curves()
        .iter()
        .map(|cv| Ok((cv.id, cv.label, d.mass(cv.id)?)))
        .collect::<Result<Vec<_>, Error>>()?;
    let text = match f.format {
        Format::Csv => csv("id,curve,label,mass", curves.iter().map(|(i, l, m)| format!("{id},{i},{l},{m}"))),
        Format::Json => {
            let cs: Vec<Value> = curves.iter().map(|(i, l, m)| json!({ "id": i, "label": l, "mass": m })).collect();
            json_doc("density", json!({ "id": id, "description": to_value(&d.describe()), "curves": cs }))
        }
    };
    Ok(Output::ok(text))
}

fn cdf(f: &Flags, id: &str, curve: usize, s: f64) -> Run {
    let d = build_density(f, id)?;
    let v = d.cdf(curve, s)?;
    let text = match f.format {
        Format::Csv => csv("id,curve,s,cdf", [format!("{id},{curve},{s},{v}")]),
        Format::Json => json_doc("cdf", json!({ "id": id, "curve": curve, "s": s, "cdf": v })),
    };
    Ok(Output::ok(text))
}

fn path_config(f: &Flags, scheme: Scheme) -> PathConfig {
    PathConfig { step: f.step, boundary_tol: f.eps, seed: f.seed, scheme, ..PathConfig::default() }
}

fn sample(
    f: &Flags,
    rule: RuleName,
    domain: Option<DomainName>,
    start: Option<Complex>,
    scheme: SchemeName,
) -> Run {
    let mut p = params(f)?;
    let mut take = |name: &str, default: f64| p.remove(name).unwrap_or(default);
    if domain.is_some() && rule != RuleName::Exit {
        return Err(Fail::Usage("--domain applies to --rule exit only".into()));
    }
    let (rule, default_start) = match rule {
        RuleName::Exit => {
            let domain = domain.ok_or_else(|| Fail::Usage("--rule exit needs --domain".into()))?;
            let (d, z0) = match domain {
                DomainName::Disk => (Domain::disk(take("radius", 1.0)), c(0.0, 0.0)),
                DomainName::Halfplane => (Domain::upper_half_plane(), c(0.0, 1.0)),
                DomainName::Strip => (Domain::strip(take("half_width", 1.0)), c(0.0, 0.0)),
                DomainName::Halfstrip => (Domain::HalfStrip, c(0.0, 1.0)),
                DomainName::Rectangle => (Domain::rectangle(take("k", 1.0)), c(0.0, 0.0)),
                DomainName::Annulus => (Domain::annulus(take("r", 1.0)), c(1.0, 0.0)),
                DomainName::PuncturedDisk => (Domain::PuncturedDisk, c(0.5, 0.0)),
            };
            (StoppingRule::Exit { domain: d }, z0)
        }
        RuleName::WindingSym => (StoppingRule::WindingSym { r: take("r", 1.0) }, c(1.0, 0.0)),
        RuleName::WindingAsym => {
            (StoppingRule::WindingAsym { r1: take("r1", 1.0), r2: take("r2", 1.0) }, c(1.0, 0.0))
        }
        RuleName::PrescribedArg => (StoppingRule::PrescribedArg { r: take("r", 1.0) }, c(1.0, 0.0)),
        RuleName::HitSegment => (StoppingRule::HitSegment, c(0.0, 2.0)),
        RuleName::HitDoubleRay => (StoppingRule::HitDoubleRay, c(0.0, 0.0)),
        RuleName::HomotopySegment => (StoppingRule::HomotopySegment, c(0.0, 0.0)),
    };
    if let Some(k) = p.keys().next() {
        return Err(Fail::Usage(format!("parameter `{k}` does not apply to this rule")));
    }
    let scheme = match scheme {
        SchemeName::Euler => Scheme::Euler,
        SchemeName::Wos => Scheme::WalkOnSpheres,
    };
    let cfg = path_config(f, scheme);
    let start = start.unwrap_or(default_start);
    let sim = simulate(start, rule, &cfg, f.n.unwrap_or(1000))?;
    let text = match f.format {
        Format::Csv => samples_csv(&sim.samples),
        Format::Json => json_doc(
            "sample",
            json!({ "summary": to_value(&summarize(&sim, start, rule, &cfg)), "samples": to_value(&sim.samples) }),
        ),
    };
    Ok(Output::ok(text))
}

fn verify_density(f: &Flags, id: &str) -> Run {
    let ids: Vec<&str> = if id == "all" { GATE_IDS.to_vec() } else { vec![id] };
    if !f.params.is_empty() || f.r.is_some() || f.trunc.is_some() {
        return Err(Fail::Usage("gates have fixed parameters".into()));
    }
    let cfg = path_config(f, Scheme::Euler);
    let n = f.n.unwrap_or(GATE_PATHS);
    let reports = ids
        .iter()
        .map(|id| run_gate(&montecarlo::gate(id)?, &cfg, n))
        .collect::<Result<Vec<_>, Error>>()?;
    let pass = reports.iter().all(|r| r.pass);
    let text = match f.format {
        Format::Csv => csv(
            "id,n_used,ks,threshold,abandoned,pass",
            reports.iter().map(|r| format!("{},{},{},{},{},{}", r.id, r.n_used, r.ks, r.threshold, r.abandoned, r.pass)),
        ),
        Format::Json => json_doc("verify-density", json!({ "pass": pass, "results": to_value(&reports) })),
    };
    Ok(Output { text, pass })
}

fn verify_identity(f: &Flags, id: &str) -> Run {
    let given = params(f)?;
    if f.trunc.is_some() {
        return Err(Fail::Usage("identities choose their own truncation; use --tol".into()));
    }
    let mut ids: Vec<&str> = if id == "all" {
        if !given.is_empty() {
            return Err(Fail::Usage("parameters need a single identity id".into()));
        }
        identities::IDS.to_vec()
    } else {
        vec![id]
    };
    ids.sort();
    let mut results = Vec::new();
    let mut rows = Vec::new();
    let mut pass = true;
    for id in ids {
        if id == "coco_diagnostic" {
            let r = given.get("r").copied().unwrap_or(1.0);
            if let Some(k) = given.keys().find(|k| *k != "r") {
                return Err(Fail::Usage(format!("unknown parameter `{k}` for coco_diagnostic")));
            }
            let rep = coco_diagnostic(r)?;
            // pass means the divergence is certified
            let ok = !rep.terms_vanish && rep.left_side.is_finite();
            pass &= ok;
            rows.push(format!("{id},,,{},{ok}", rep.term_limit_gap));
            results.push(json!({ "id": id, "pass": ok, "diagnostic": to_value(&rep) }));
            continue;
        }
        let rep = identities::evaluate(id, &given, f.tol)?;
        pass &= rep.pass;
        rows.push(format!("{},{},{},{},{}", rep.id, rep.lhs, rep.rhs, rep.residual, rep.pass));
        results.push(to_value(&rep));
    }
    let text = match f.format {
        Format::Csv => csv("id,lhs,rhs,residual,pass", rows),
        Format::Json if results.len() == 1 => {
            let mut one = results.pop().expect("one result");
            if let Value::Object(m) = &mut one {
                m.insert("tol".into(), json!(f.tol));
            }
            json_doc("verify-identity", one)
        }
        Format::Json => json_doc("verify-identity", json!({ "pass": pass, "tol": f.tol, "results": results })),
    };
    Ok(Output { text, pass })
}

fn dynkin(f: &Flags, id: &str, hs: &[String]) -> Run {
    let d = build_density(f, id)?;
    let hs: Vec<HarmonicTestFn> = if hs.is_empty() {
        registry::default_harmonics(id)
    } else {
        hs.iter().map(|h| HarmonicTestFn::parse(h)).collect::<Result<_, _>>()?
    };
    let mut rows = Vec::new();
    for h in hs {
        let residual = dynkin_check(&d, h)?;
        rows.push((h.label(), residual, residual <= f.tol));
    }
    let pass = rows.iter().all(|r| r.2);
    let text = match f.format {
        Format::Csv => csv("id,h,residual,pass", rows.iter().map(|(h, r, p)| format!("{id},{h},{r},{p}"))),
        Format::Json => {
            let res: Vec<Value> = rows.iter().map(|(h, r, p)| json!({ "h": h, "residual": r, "pass": p })).collect();
            json_doc("dynkin", json!({ "id": id, "tol": f.tol, "pass": pass, "results": res }))
        }
    };
    Ok(Output { text, pass })
}

/// `n` interior grid points of `(lo, hi)`; unbounded ends are compactified.
fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let u = (i as f64 + 0.5) / n as f64;
            match (lo.is_finite(), hi.is_finite()) {
                (true, true) => lo + u * (hi - lo),
                (true, false) => lo + u / (1.0 - u),
                (false, true) => hi - (1.0 - u) / u,
                (false, false) => (PI * (u - 0.5)).tan(),
            }
        })
        .collect()
}

fn export(f: &Flags, id: &str, curve: usize) -> Run {
    let d = build_density(f, id)?;
    let n = f.grid.ok_or_else(|| Fail::Usage("export needs --grid".into()))?;
    let (lo, hi) = d.curve(curve)?.s_range();
    let rows = grid(lo, hi, n)
        .into_iter()
        .map(|s| Ok((s, d.value(curve, s)?, d.cdf(curve, s)?)))
        .collect::<Result<Vec<_>, Error>>()?;
    let text = match f.format {
        Format::Csv => {
            let mut out = String::from("s,value,cdf\n");
            for (s, v, cd) in &rows {
                writeln!(out, "{s},{v},{cd}").expect("string write");
            }
            out
        }
        Format::Json => {
            let rs: Vec<Value> = rows.iter().map(|(s, v, cd)| json!({ "s": s, "value": v, "cdf": cd })).collect();
            json_doc("export", json!({ "id": id, "curve": curve, "rows": rs }))
        }
    };
    Ok(Output::ok(text))
}
