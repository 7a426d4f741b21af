//! The `tqm` command line.
//!
//! Indices are printed 1-based, multi-indices joined with `.` (`1.2` is
//! detector 1 on screen 1 and detector 2 on screen 2). Real numbers are
//! rounded to 10 decimals with trailing zeros dropped, so identical inputs
//! give identical bytes.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::arrangement::{
    build_arrangement, check_basis_invariance, check_factorization_invariance, power_of_action,
    transform_arrangement, BasisChange, DetectorBasis, DEFAULT_MAX_DIM,
};
use crate::contextuality::{contextuality_report, ValuationSearch};
use crate::isa::{intensity, power_graph, Power};
use crate::lab::{Lab, LabConfig, LabError, LabFile};
use crate::tensor::PREDICATE_TOL;

#[derive(Debug, Parser)]
#[command(
    name = "tqm",
    version,
    about = "Intensive states, experimental arrangements and basis transport"
)]
pub struct Cli {
    /// Tolerance for state validation, theorem checks, commutation and context sums.
    #[arg(long, global = true, default_value_t = PREDICATE_TOL)]
    pub tol: f64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Theorem {
    Basis,
    Factorization,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check every object in a lab file.
    Validate { lab: PathBuf },
    /// List the potentia of every basis power.
    Intensities {
        lab: PathBuf,
        #[arg(long)]
        basis: String,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Transport an arrangement from one basis to another.
    Transform {
        lab: PathBuf,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
    },
    /// Check basis or factorization invariance.
    Check {
        lab: PathBuf,
        #[arg(long, value_enum)]
        theorem: Theorem,
        #[arg(long)]
        b1: Option<String>,
        #[arg(long)]
        b2: Option<String>,
        #[arg(long)]
        small: Option<String>,
        #[arg(long)]
        big: Option<String>,
        /// Named embedding; derived from the dimensions when omitted.
        #[arg(long)]
        embedding: Option<String>,
    },
    /// Binary versus intensive valuations on a context family.
    Ks {
        lab: PathBuf,
        #[arg(long)]
        family: String,
        /// Exit with status 1 when no binary valuation exists.
        #[arg(long)]
        require_valuation: bool,
    },
    /// Emit the commutation graph of a set of powers as DOT.
    Graph {
        lab: PathBuf,
        /// Comma list of BASIS:k1.k2 items; `+` joins terms of a sum and
        /// BASIS:* takes every power of the basis.
        #[arg(long, default_value = "")]
        powers: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rewrite a lab file in canonical form.
    Fmt {
        lab: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Rounds to 10 decimals, drops trailing zeros, never prints `-0`.
pub fn format_real(x: f64) -> String {
    let s = format!("{x:.10}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_owned()
    } else {
        s.to_owned()
    }
}

/// 1-based, dot-joined.
pub fn format_index(indices: &[usize]) -> String {
    indices
        .iter()
        .map(|k| (k + 1).to_string())
        .collect::<Vec<_>>()
        .join(".")
}

fn io_err(source: std::io::Error) -> LabError {
    LabError::Io {
        path: "<output>".into(),
        source,
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit status. `max_dim` is the raw `TQM_MAX_DIM` value, if set.
pub fn run<I, T>(args: I, max_dim: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{text}");
            return e.exit_code();
        }
    };
    match execute(&cli, max_dim, out, err) {
        Ok(code) => code,
        Err(e) => {
            match &e {
                LabError::Parse(d) => {
                    let _ = writeln!(err, "{}", d.to_json());
                }
                LabError::Invalid(diags) => {
                    for d in diags {
                        let _ = writeln!(err, "{}", d.to_json());
                    }
                }
                other => {
                    let _ = writeln!(err, "error: {other}");
                }
            }
            e.exit_code()
        }
    }
}

fn config(cli: &Cli, max_dim: Option<&str>) -> Result<LabConfig, LabError> {
    if !(cli.tol.is_finite() && cli.tol >= 0.0) {
        return Err(LabError::Usage(format!(
            "--tol must be a non-negative number, got {}",
            cli.tol
        )));
    }
    let max_dim = match max_dim {
        None => DEFAULT_MAX_DIM,
        Some(raw) => raw
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&d| d > 0)
            .ok_or_else(|| {
                LabError::Usage(format!(
                    "TQM_MAX_DIM must be a positive integer, got {raw:?}"
                ))
            })?,
    };
    Ok(LabConfig {
        tol: cli.tol,
        max_dim,
    })
}

fn execute(
    cli: &Cli,
    max_dim: Option<&str>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, LabError> {
    let cfg = config(cli, max_dim)?;
    match &cli.command {
        Command::Validate { lab } => cmd_validate(lab, &cfg, out),
        Command::Intensities { lab, basis, format } => {
            cmd_intensities(&Lab::load(lab, &cfg)?, basis, *format, out)
        }
        Command::Transform { lab, from, to } => {
            cmd_transform(&Lab::load(lab, &cfg)?, from, to, out)
        }
        Command::Check {
            lab,
            theorem,
            b1,
            b2,
            small,
            big,
            embedding,
        } => {
            let lab = Lab::load(lab, &cfg)?;
            match theorem {
                Theorem::Basis => {
                    let (b1, b2) = both(b1, b2, "--theorem basis needs --b1 and --b2")?;
                    cmd_check_basis(&lab, b1, b2, cfg.tol, out)
                }
                Theorem::Factorization => {
                    let (small, big) = both(
                        small,
                        big,
                        "--theorem factorization needs --small and --big",
                    )?;
                    cmd_check_factorization(&lab, small, big, embedding.as_deref(), cfg.tol, out)
                }
            }
        }
        Command::Ks {
            lab,
            family,
            require_valuation,
        } => cmd_ks(
            &Lab::load(lab, &cfg)?,
            family,
            *require_valuation,
            cfg.tol,
            out,
        ),
        Command::Graph {
            lab,
            powers,
            out: path,
        } => {
            let lab = Lab::load(lab, &cfg)?;
            let dot = cmd_graph(&lab, powers, cfg.tol, err)?;
            emit(&dot, path.as_deref(), out)
        }
        Command::Fmt { lab, out: path } => emit(&LabFile::read(lab)?.emit(), path.as_deref(), out),
    }
}

fn both<'a>(
    a: &'a Option<String>,
    b: &'a Option<String>,
    message: &str,
) -> Result<(&'a str, &'a str), LabError> {
    match (a, b) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(LabError::Usage(message.into())),
    }
}

fn emit(text: &str, path: Option<&Path>, out: &mut dyn Write) -> Result<i32, LabError> {
    match path {
        Some(path) => std::fs::write(path, text).map_err(|source| LabError::Io {
            path: path.display().to_string(),
            source,
        })?,
        None => out.write_all(text.as_bytes()).map_err(io_err)?,
    }
    Ok(0)
}

fn names<T>(items: &[(String, T)]) -> String {
    if items.is_empty() {
        "(none)".into()
    } else {
        items
            .iter()
            .map(|(n, _)| n.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    }
}

fn cmd_validate(path: &Path, cfg: &LabConfig, out: &mut dyn Write) -> Result<i32, LabError> {
    let lab = Lab::load(path, cfg)?;
    let text = format!(
        "valid lab: dim {}\nfactorizations: {}\nbases: {}\ncontext families: {}\nembeddings: {}\n",
        lab.dim(),
        names(lab.factorizations()),
        names(lab.bases()),
        names(lab.families()),
        names(lab.embeddings()),
    );
    out.write_all(text.as_bytes()).map_err(io_err)?;
    Ok(0)
}

fn cmd_intensities(
    lab: &Lab,
    basis: &str,
    format: Format,
    out: &mut dyn Write,
) -> Result<i32, LabError> {
    let basis = lab.basis(basis)?;
    let ea = build_arrangement(lab.isa(), basis)?;
    let rows = ea.potentia_table();
    let mut text = String::new();
    match format {
        Format::Csv => {
            let header: Vec<String> = (1..=basis.factorization().screens())
                .map(|j| format!("k{j}"))
                .collect();
            text.push_str(&format!("{},potentia\n", header.join(",")));
            for (indices, p) in &rows {
                let cols: Vec<String> = indices.iter().map(|k| (k + 1).to_string()).collect();
                text.push_str(&format!("{},{}\n", cols.join(","), format_real(*p)));
            }
        }
        Format::Table => {
            let labels: Vec<String> = rows.iter().map(|(k, _)| format_index(k)).collect();
            let width = labels
                .iter()
                .map(String::len)
                .chain(["power".len(), "total".len()])
                .max()
                .unwrap_or(0);
            text.push_str(&format!("{:<width$}  potentia\n", "power"));
            for (label, (_, p)) in labels.iter().zip(&rows) {
                text.push_str(&format!("{label:<width$}  {}\n", format_real(*p)));
            }
            let total: f64 = rows.iter().map(|(_, p)| p).sum();
            text.push_str(&format!("{:<width$}  {}\n", "total", format_real(total)));
        }
    }
    out.write_all(text.as_bytes()).map_err(io_err)?;
    Ok(0)
}

fn cmd_transform(lab: &Lab, from: &str, to: &str, out: &mut dyn Write) -> Result<i32, LabError> {
    let source = lab.basis(from)?;
    let target = lab.basis(to)?;
    let change = BasisChange::between(source, target)?;
    let moved = transform_arrangement(&build_arrangement(lab.isa(), source)?, &change)?;
    let direct = build_arrangement(lab.isa(), target)?;
    let deviation = moved.coefficients().max_abs_diff(direct.coefficients())?;

    let mut text = format!(
        "from: {from}\nto: {to}\nshape: {:?}\nk,k',re,im\n",
        moved.coefficients().shape()
    );
    let alpha = moved.coefficient_matrix();
    let indices: Vec<Vec<usize>> = target.indices().collect();
    for (r, k) in indices.iter().enumerate() {
        for (c, k_bra) in indices.iter().enumerate() {
            let z = alpha.get(r, c);
            text.push_str(&format!(
                "{},{},{},{}\n",
                format_index(k),
                format_index(k_bra),
                format_real(z.re),
                format_real(z.im)
            ));
        }
    }
    text.push_str(&format!(
        "max deviation from direct build: {}\n",
        format_real(deviation)
    ));
    out.write_all(text.as_bytes()).map_err(io_err)?;
    Ok(0)
}

fn verdict(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

fn cmd_check_basis(
    lab: &Lab,
    b1: &str,
    b2: &str,
    tol: f64,
    out: &mut dyn Write,
) -> Result<i32, LabError> {
    let report = check_basis_invariance(&lab.quantum_lab(), lab.basis(b1)?, lab.basis(b2)?)?;
    let passed = report.passed_within(tol);
    let text = format!(
        "theorem: basis invariance\nb1: {b1}\nb2: {b2}\ndegree: {}\nmax deviation: {}\ntolerance: {tol:e}\nresult: {}\n",
        report.degree,
        format_real(report.deviation),
        verdict(passed)
    );
    out.write_all(text.as_bytes()).map_err(io_err)?;
    Ok(if passed { 0 } else { 1 })
}

fn cmd_check_factorization(
    lab: &Lab,
    small: &str,
    big: &str,
    embedding: Option<&str>,
    tol: f64,
    out: &mut dyn Write,
) -> Result<i32, LabError> {
    let small_basis = lab.basis(small)?;
    let big_basis = lab.basis(big)?;
    let named = embedding.map(|name| lab.embedding(name)).transpose()?;
    let report = check_factorization_invariance(&lab.quantum_lab(), small_basis, big_basis, named)?;
    let passed = report.passed_within(tol);
    let mut text = format!(
        "theorem: factorization invariance\nsmall: {small} (degree {})\nbig: {big} (degree {})\nembedding: {}\nsupport intensity: {}\nk,small,recovered\n",
        report.small_degree,
        report.big_degree,
        embedding.unwrap_or("derived"),
        format_real(report.support_intensity),
    );
    for row in &report.rows {
        text.push_str(&format!(
            "{},{},{}\n",
            format_index(&row.indices),
            format_real(row.small),
            format_real(row.recovered)
        ));
    }
    text.push_str(&format!(
        "max deviation: {}\ntolerance: {tol:e}\nresult: {}\n",
        format_real(report.deviation),
        verdict(passed)
    ));
    out.write_all(text.as_bytes()).map_err(io_err)?;
    Ok(if passed { 0 } else { 1 })
}

fn cmd_ks(
    lab: &Lab,
    name: &str,
    require_valuation: bool,
    tol: f64,
    out: &mut dyn Write,
) -> Result<i32, LabError> {
    let family = lab.family(name)?;
    let report = contextuality_report(family, lab.isa())?;
    let mut text = format!(
        "family: {name}\ndimension: {}\nvectors: {}\ncontexts: {}\n",
        family.dim(),
        family.vectors().len(),
        family.contexts().len()
    );
    let stats = report.binary.stats();
    let tree = format!(
        "{} nodes, {} dead ends, max depth {}",
        stats.nodes, stats.dead_ends, stats.max_depth
    );
    match &report.binary {
        ValuationSearch::Found { valuation, .. } => {
            let ones: Vec<String> = (0..family.vectors().len())
                .filter(|&i| valuation.value(i) == 1)
                .map(|i| (i + 1).to_string())
                .collect();
            text.push_str(&format!(
                "binary valuation: found\nvalued 1: {}\nsearch: {tree}\n",
                ones.join(" ")
            ));
        }
        ValuationSearch::Exhausted(_) => {
            text.push_str(&format!(
                "binary valuation: none\ncertificate: exhaustive search over {} contexts and {} vectors, {tree}\n",
                stats.contexts, stats.vectors
            ));
        }
    }
    if report.vacuous {
        text.push_str("note: no contexts, both valuations hold vacuously\n");
    }
    text.push_str("vector,intensity\n");
    for (i, psi) in report.table.intensities().iter().enumerate() {
        text.push_str(&format!("{},{}\n", i + 1, format_real(*psi)));
    }
    text.push_str("context,vectors,intensive sum\n");
    for (c, (ctx, sum)) in family
        .contexts()
        .iter()
        .zip(&report.context_sums)
        .enumerate()
    {
        let members: Vec<String> = ctx.iter().map(|i| (i + 1).to_string()).collect();
        text.push_str(&format!(
            "{},{},{}\n",
            c + 1,
            members.join(" "),
            format_real(*sum)
        ));
    }
    let consistent = report.intensive_consistent_within(tol);
    text.push_str(&format!(
        "max |sum - 1|: {}\nintensive valuation: {}\n",
        format_real(report.max_context_deviation),
        if consistent {
            "consistent"
        } else {
            "inconsistent"
        }
    ));
    out.write_all(text.as_bytes()).map_err(io_err)?;
    let failed = !consistent || (require_valuation && !report.binary_exists());
    Ok(if failed { 1 } else { 0 })
}

/// Resolves a power spec against the lab's bases into labelled powers.
pub fn resolve_powers(lab: &Lab, spec: &str) -> Result<Vec<(String, Power)>, LabError> {
    let mut powers = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let bad = |why: String| LabError::UnresolvablePowerSpec(format!("{item:?}: {why}"));
        let (name, terms) = item
            .rsplit_once(':')
            .ok_or_else(|| bad("expected BASIS:k1.k2".into()))?;
        let basis = lab
            .basis(name)
            .map_err(|_| bad(format!("no basis named {name:?}")))?;
        if basis.total_dim() != lab.dim() {
            return Err(bad(format!(
                "basis {name:?} spans {} dimensions, the lab has {}",
                basis.total_dim(),
                lab.dim()
            )));
        }
        if terms.trim() == "*" {
            for k in basis.indices() {
                let p = power_of_action(basis, &k)?;
                powers.push((format!("{name}:{}", format_index(&k)), p));
            }
            continue;
        }
        let mut seen = Vec::new();
        for term in terms.split('+').map(str::trim) {
            let k = parse_term(basis, term).map_err(bad)?;
            if seen.contains(&k) {
                return Err(bad(format!("term {term} repeats")));
            }
            seen.push(k);
        }
        let parts = seen
            .iter()
            .map(|k| power_of_action(basis, k))
            .collect::<Result<Vec<_>, _>>()?;
        let label = seen
            .iter()
            .map(|k| format_index(k))
            .collect::<Vec<_>>()
            .join("+");
        powers.push((
            format!("{name}:{label}"),
            Power::sum(basis.total_dim(), &parts)?,
        ));
    }
    Ok(powers)
}

fn parse_term(basis: &DetectorBasis, term: &str) -> Result<Vec<usize>, String> {
    let dims = basis.screen_dims();
    let parts: Vec<&str> = term.split('.').collect();
    if parts.len() != dims.len() {
        return Err(format!("term {term:?} needs {} indices", dims.len()));
    }
    parts
        .iter()
        .zip(dims)
        .map(|(p, &d)| match p.parse::<usize>() {
            Ok(k) if (1..=d).contains(&k) => Ok(k - 1),
            _ => Err(format!("index {p:?} in {term:?} is not in 1..={d}")),
        })
        .collect()
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// DOT text for the commutation graph; warns on `err` for an empty spec.
pub fn cmd_graph(lab: &Lab, spec: &str, tol: f64, err: &mut dyn Write) -> Result<String, LabError> {
    let labelled = resolve_powers(lab, spec)?;
    if labelled.is_empty() {
        writeln!(err, "warning: empty power spec, the graph has no vertices").map_err(io_err)?;
    }
    let powers: Vec<Power> = labelled.iter().map(|(_, p)| p.clone()).collect();
    let graph = power_graph(&powers, tol)?;
    let mut dot = String::from("graph powers {\n");
    for (i, (label, p)) in labelled.iter().enumerate() {
        let psi = intensity(lab.isa(), p)?;
        dot.push_str(&format!(
            "  p{} [label=\"{}\\npsi = {}\"];\n",
            i + 1,
            dot_escape(label),
            format_real(psi)
        ));
    }
    for (i, j) in graph.edges() {
        dot.push_str(&format!("  p{} -- p{};\n", i + 1, j + 1));
    }
    dot.push_str("}\n");
    Ok(dot)
}
