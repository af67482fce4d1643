//! Command implementations behind the `copkit` binary.
//!
//! Every command writes its report to a caller-supplied writer and returns
//! the process exit code, so tests can drive them without spawning a process.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Value};

use copkit::bounds::{self, BoundReport, BoundValue};
use copkit::catalog;
use copkit::cones::{
    self, certificate_from_json, certificate_to_json, matrix_sha, ConeConfig, Decision, Verdict, VerifyMode,
    DECISION_TOL, SCHEMA,
};
use copkit::graphs::{self, Graph};
use copkit::rational::format_rational;
use copkit::sdpcore::SolverConfig;
use copkit::symlin::RatMat;
use copkit::{Error, Result};

pub const EXIT_YES: i32 = 0;
pub const EXIT_NO: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
/// Unreadable input or a certificate file that violates the schema.
pub const EXIT_INPUT: i32 = 3;
/// Any other library error (caps, numerical failure).
pub const EXIT_ERROR: i32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputMode {
    Text,
    Json,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub decision_tol: f64,
    pub sdp_tol: f64,
    pub max_iters: usize,
    /// Largest hierarchy order accepted by `check` and `bound`.
    pub max_order: u32,
    pub output: OutputMode,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { decision_tol: DECISION_TOL, sdp_tol: 1e-9, max_iters: 100, max_order: 8, output: OutputMode::Text, seed: 0 }
    }
}

impl RunConfig {
    /// Reads `COPKIT_TOL` as an override for the decision tolerance.
    pub fn from_env() -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Ok(v) = std::env::var("COPKIT_TOL") {
            cfg.decision_tol = v.trim().parse().map_err(|_| Error::Parse(format!("COPKIT_TOL={v:?} is not a number")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.decision_tol > 0.0 && self.sdp_tol > 0.0) {
            return Err(Error::Precondition("tolerances must be positive".into()));
        }
        Ok(())
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig { tol_gap: self.sdp_tol, tol_feas: self.sdp_tol, max_iters: self.max_iters, seed: self.seed }
    }

    pub fn cone(&self) -> ConeConfig {
        ConeConfig { decision_tol: self.decision_tol, solver: self.solver(), ..ConeConfig::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cone {
    C,
    Spn,
    K1,
    K,
    Q,
    Las,
}

impl Cone {
    pub fn parse(s: &str) -> Result<Cone> {
        Ok(match s {
            "c" | "polya" => Cone::C,
            "spn" | "k0" => Cone::Spn,
            "k1" => Cone::K1,
            "k" => Cone::K,
            "q" => Cone::Q,
            "las" => Cone::Las,
            _ => return Err(Error::Parse(format!("unknown cone {s:?} (expected c, spn, k1, k, q or las)"))),
        })
    }

    fn name(self) -> &'static str {
        match self {
            Cone::C => "c",
            Cone::Spn => "spn",
            Cone::K1 => "k1",
            Cone::K => "k",
            Cone::Q => "q",
            Cone::Las => "las",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HierarchyArg {
    Zeta,
    Theta,
    Lovasz,
}

impl HierarchyArg {
    pub fn parse(s: &str) -> Result<HierarchyArg> {
        match s {
            "zeta" => Ok(HierarchyArg::Zeta),
            "theta" => Ok(HierarchyArg::Theta),
            "lovasz" => Ok(HierarchyArg::Lovasz),
            _ => Err(Error::Parse(format!("unknown hierarchy {s:?} (expected zeta, theta or lovasz)"))),
        }
    }
}

/// Parses `R` or an inclusive range `A..B`.
pub fn parse_orders(s: &str) -> Result<Vec<u32>> {
    let num = |t: &str| t.trim().parse::<u32>().map_err(|_| Error::Parse(format!("bad order {t:?}")));
    match s.split_once("..") {
        Some((a, b)) => {
            let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
            if a > b {
                return Err(Error::Parse(format!("empty order range {s:?}")));
            }
            Ok((a..=b).collect())
        }
        None => Ok(vec![num(s)?]),
    }
}

/// A file path, `catalog:NAME`, or a bare catalog name.
pub fn load_matrix(source: &str) -> Result<RatMat> {
    if let Some(name) = source.strip_prefix("catalog:") {
        return catalog::matrix_by_name(name);
    }
    let path = Path::new(source);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| Error::Parse(format!("{source}: {e}")))?;
        return RatMat::parse(&text);
    }
    catalog::matrix_by_name(source)
        .map_err(|_| Error::Parse(format!("{source:?} is neither a readable file nor a catalog matrix")))
}

/// A file path or a generator such as `cycle:5` or `petersen`.
pub fn load_graph(source: &str) -> Result<Graph> {
    let path = Path::new(source);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| Error::Parse(format!("{source}: {e}")))?;
        return Graph::parse(&text);
    }
    Graph::from_spec(source)
}

fn error_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::Dimension(_) => EXIT_INPUT,
        _ => EXIT_ERROR,
    }
}

fn fail(out: &mut dyn Write, cfg: &RunConfig, command: &str, e: &Error) -> i32 {
    let code = error_code(e);
    let _ = match cfg.output {
        OutputMode::Text => writeln!(out, "error: {e}"),
        OutputMode::Json => writeln!(out, "{}", json!({"schema": SCHEMA, "command": command, "error": e.to_string(), "exit": code})),
    };
    code
}

fn margin_json(m: f64) -> Value {
    if m.is_finite() {
        json!(m)
    } else {
        json!(format!("{m}"))
    }
}

fn run_cone(m: &RatMat, cone: Cone, r: u32, cfg: &RunConfig) -> Result<Verdict> {
    if r > cfg.max_order {
        return Err(Error::Cap(format!("order {r} exceeds the order cap {}", cfg.max_order)));
    }
    let cc = cfg.cone();
    match cone {
        Cone::C => Ok(cones::c_membership(m, r)),
        Cone::Spn => cones::spn_membership(m, &cc),
        Cone::K1 => cones::k1_membership(m, &cc),
        Cone::K => cones::kr_membership(m, r, &cc),
        Cone::Q => cones::qr_membership(m, r, &cc),
        Cone::Las => cones::las_simplex_membership(m, r, &cc),
    }
}

fn default_cert_path(m: &RatMat, cone: Cone, r: u32) -> PathBuf {
    PathBuf::from(format!("copkit-{}-r{r}-{}.json", cone.name(), &matrix_sha(m)[..12]))
}

/// Decides membership of the matrix in `cone`; writes the certificate of a
/// YES verdict to `cert_path` (or a name derived from the matrix hash).
pub fn cmd_check(
    source: &str,
    cone: Cone,
    r: u32,
    cert_path: Option<&Path>,
    cfg: &RunConfig,
    out: &mut dyn Write,
) -> i32 {
    let m = match load_matrix(source) {
        Ok(m) => m,
        Err(e) => return fail(out, cfg, "check", &e),
    };
    let v = match run_cone(&m, cone, r, cfg) {
        Ok(v) => v,
        Err(e) => return fail(out, cfg, "check", &e),
    };
    let mut written = None;
    if let (Decision::Yes, Some(c)) = (v.decision, &v.certificate) {
        let path = cert_path.map(Path::to_path_buf).unwrap_or_else(|| default_cert_path(&m, cone, r));
        let text = serde_json::to_string_pretty(&certificate_to_json(&m, c)).expect("serializable");
        if let Err(e) = fs::write(&path, text) {
            return fail(out, cfg, "check", &Error::Parse(format!("cannot write {}: {e}", path.display())));
        }
        written = Some(path);
    }
    let code = match v.decision {
        Decision::Yes => EXIT_YES,
        Decision::No => EXIT_NO,
        Decision::Inconclusive => EXIT_INCONCLUSIVE,
    };
    let scalars = v.certificate.as_ref().map(|c| if c.is_exact() { "rational" } else { "float" });
    let _ = match cfg.output {
        OutputMode::Json => writeln!(
            out,
            "{}",
            json!({
                "schema": SCHEMA,
                "command": "check",
                "cone": cone.name(),
                "order": r,
                "matrix_sha": matrix_sha(&m),
                "decision": v.decision.to_string(),
                "margin": margin_json(v.margin),
                "certificate": written.as_ref().map(|p| p.display().to_string()),
                "scalars": scalars,
                "note": v.note,
                "exit": code,
            })
        ),
        OutputMode::Text => {
            let mut s = format!("cone      {} (r = {r})\ndecision  {}\nmargin    {:.3e}\n", cone.name(), v.decision, v.margin);
            if let Some(p) = &written {
                s += &format!("certificate {} ({})\n", p.display(), scalars.unwrap_or("-"));
            }
            if let Some(n) = &v.note {
                s += &format!("note      {n}\n");
            }
            write!(out, "{s}")
        }
    };
    code
}

fn bound_row(g: &Graph, h: HierarchyArg, r: u32, cfg: &RunConfig) -> Result<BoundReport> {
    match h {
        HierarchyArg::Zeta => Ok(bounds::zeta_report(g, r)),
        HierarchyArg::Theta => bounds::theta_r(g, r, &cfg.solver()),
        HierarchyArg::Lovasz => bounds::lovasz_report(g, &cfg.solver()),
    }
}

/// One row per order: value, floor, α and the gap `value - α`.
pub fn cmd_bound(source: &str, h: HierarchyArg, orders: &[u32], cfg: &RunConfig, out: &mut dyn Write) -> i32 {
    let g = match load_graph(source) {
        Ok(g) => g,
        Err(e) => return fail(out, cfg, "bound", &e),
    };
    if let Some(&r) = orders.iter().find(|&&r| r > cfg.max_order) {
        return fail(out, cfg, "bound", &Error::Cap(format!("order {r} exceeds the order cap {}", cfg.max_order)));
    }
    let orders: Vec<u32> = if h == HierarchyArg::Lovasz { vec![0] } else { orders.to_vec() };
    let rows: Result<Vec<BoundReport>> = orders.par_iter().map(|&r| bound_row(&g, h, r, cfg)).collect();
    let rows = match rows {
        Ok(r) => r,
        Err(e) => return fail(out, cfg, "bound", &e),
    };
    let gap = |b: &BoundReport| b.value.as_f64() - b.alpha as f64;
    let _ = match cfg.output {
        OutputMode::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|b| {
                    json!({
                        "order": b.order,
                        "value": b.value.to_string(),
                        "floor": b.floor.as_ref().map(|f| f.to_string()),
                        "alpha": b.alpha,
                        "gap": margin_json(gap(b)),
                        "notes": b.notes,
                    })
                })
                .collect();
            writeln!(
                out,
                "{}",
                json!({"schema": SCHEMA, "command": "bound", "graph": g.name(), "hierarchy": format!("{:?}", h).to_lowercase(), "rows": rows, "exit": 0})
            )
        }
        OutputMode::Text => {
            let mut s = format!("{:>3}  {:>14}  {:>5}  {:>5}  {:>12}\n", "r", "value", "floor", "alpha", "gap");
            for b in &rows {
                let floor = b.floor.as_ref().map_or("inf".to_string(), |f| f.to_string());
                let gap = match &b.value {
                    BoundValue::Infinite => "inf".to_string(),
                    _ => format!("{:.6}", if gap(b).abs() < 5e-7 { 0.0 } else { gap(b) }),
                };
                s += &format!("{:>3}  {:>14}  {:>5}  {:>5}  {:>12}\n", b.order, b.value.to_string(), floor, b.alpha, gap);
            }
            write!(out, "{s}")
        }
    };
    0
}

/// Stability number, maximum stable sets, critical edges and the zeros of `M_G`.
pub fn cmd_graph(source: &str, cfg: &RunConfig, out: &mut dyn Write) -> i32 {
    let g = match load_graph(source) {
        Ok(g) => g,
        Err(e) => return fail(out, cfg, "graph", &e),
    };
    let rep = graphs::report(&g);
    let zeros = graphs::graph_matrix_zeros(&g);
    let one_based = |v: &[usize]| v.iter().map(|i| i + 1).collect::<Vec<_>>();
    let _ = match cfg.output {
        OutputMode::Json => writeln!(
            out,
            "{}",
            json!({
                "schema": SCHEMA,
                "command": "graph",
                "graph": g.name(),
                "n": g.n(),
                "alpha": rep.alpha,
                "max_stable_sets": rep.max_stable_sets.iter().map(|s| one_based(s)).collect::<Vec<_>>(),
                "critical_edges": rep.critical_edges.iter().map(|&(i, j)| [i + 1, j + 1]).collect::<Vec<_>>(),
                "acritical": rep.acritical,
                "finite_zeros": zeros.finite_zeros.iter().map(|z| z.coords.iter().map(format_rational).collect::<Vec<_>>()).collect::<Vec<_>>(),
                "zero_families": zeros.infinite_families.iter().map(|f| json!({"support": one_based(&f.support), "dimension": f.dimension})).collect::<Vec<_>>(),
                "zeros_finite": zeros.is_finite,
                "truncated": zeros.truncated,
                "exit": 0,
            })
        ),
        OutputMode::Text => {
            let mut s = format!("graph            {} (n = {})\nalpha            {}\n", g.name(), g.n(), rep.alpha);
            s += &format!("max stable sets  {}\n", rep.max_stable_sets.len());
            for set in &rep.max_stable_sets {
                s += &format!("  {:?}\n", one_based(set));
            }
            let edges: Vec<String> = rep.critical_edges.iter().map(|(i, j)| format!("{}-{}", i + 1, j + 1)).collect();
            s += &format!("critical edges   {} [{}]\n", edges.len(), edges.join(" "));
            s += &format!("acritical        {}\n", rep.acritical);
            s += &format!("M_G zeros        {} finite, {} families{}\n", zeros.finite_zeros.len(), zeros.infinite_families.len(), if zeros.truncated { " (truncated)" } else { "" });
            for z in &zeros.finite_zeros {
                s += &format!("  {}\n", z.render());
            }
            for f in &zeros.infinite_families {
                s += &format!("  support {:?}, dimension {}\n", one_based(&f.support), f.dimension);
            }
            write!(out, "{s}")
        }
    };
    0
}

/// Re-verifies a certificate file against a matrix: exit 0 on pass, 1 on
/// failure (including a hash mismatch), 3 on schema violations.
pub fn cmd_verify(cert: &Path, source: &str, cfg: &RunConfig, out: &mut dyn Write) -> i32 {
    let text = match fs::read_to_string(cert) {
        Ok(t) => t,
        Err(e) => return fail(out, cfg, "verify", &Error::Parse(format!("{}: {e}", cert.display()))),
    };
    let value: Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => return fail(out, cfg, "verify", &Error::Parse(format!("invalid JSON: {e}"))),
    };
    let file = match certificate_from_json(&value) {
        Ok(f) => f,
        Err(e) => return fail(out, cfg, "verify", &e),
    };
    let m = match load_matrix(source) {
        Ok(m) => m,
        Err(e) => return fail(out, cfg, "verify", &e),
    };
    let sha_ok = file.matrix_sha == matrix_sha(&m);
    let mode = if file.certificate.is_exact() { VerifyMode::Exact } else { VerifyMode::Float(cones::VERIFY_TOL) };
    let report = match cones::verify_certificate(&m, &file.certificate, mode) {
        Ok(r) => Some(r),
        Err(Error::Certificate(msg)) => {
            let _ = writeln!(out, "shape mismatch: {msg}");
            None
        }
        Err(e) => return fail(out, cfg, "verify", &e),
    };
    let pass = sha_ok && report.as_ref().is_some_and(|r| r.pass);
    let code = if pass { 0 } else { 1 };
    let _ = match cfg.output {
        OutputMode::Json => writeln!(
            out,
            "{}",
            json!({
                "schema": SCHEMA,
                "command": "verify",
                "cone": file.certificate.cone(),
                "order": file.certificate.order(),
                "mode": if file.certificate.is_exact() { "exact" } else { "float" },
                "matrix_sha_match": sha_ok,
                "identity_residual": report.as_ref().map(|r| margin_json(r.identity_residual)),
                "psd_margin": report.as_ref().map(|r| margin_json(r.psd_margin)),
                "nonneg_margin": report.as_ref().map(|r| margin_json(r.nonneg_margin)),
                "pass": pass,
                "exit": code,
            })
        ),
        OutputMode::Text => {
            let mut s = format!(
                "certificate  {} r = {} ({})\nmatrix hash  {}\n",
                file.certificate.cone(),
                file.certificate.order(),
                if file.certificate.is_exact() { "exact" } else { "float" },
                if sha_ok { "match" } else { "MISMATCH" }
            );
            if let Some(r) = &report {
                s += &format!(
                    "residual     {:.3e}\npsd margin   {:.3e}\nsign margin  {:.3e}\n",
                    r.identity_residual, r.psd_margin, r.nonneg_margin
                );
            }
            s += &format!("result       {}\n", if pass { "PASS" } else { "FAIL" });
            write!(out, "{s}")
        }
    };
    code
}
