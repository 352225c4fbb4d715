//! `conleylab` command-line front end.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use conleylab::algebra::{cohomology, homology, PoincarePolynomial};
use conleylab::attractor::{analyze, ComponentLabel};
use conleylab::blocks::{build_block, conley_euler, section_components};
use conleylab::complex::{self, complex_from_json, complex_to_json, CellComplex, CATALOG, DEFAULT_RESOLUTION};
use conleylab::constructions::{catalog_flow, Expected, FLOW_CATALOG};
use conleylab::flow::FlowFile;
use conleylab::theorems::{run_all, TheoremVerdict};
use conleylab::{AttractorReport, CellSet, Classification, CombinatorialFlow, IsolatingBlock, Ring};
use serde::{Deserialize, Serialize};

const SCHEMA: &str = "1";
const CATALOG_ENV: &str = "CONLEYLAB_CATALOG";

#[derive(Parser)]
#[command(name = "conleylab", version, about = "Attractors, isolating blocks and cohomological obstructions on cell complexes")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the attractor pipeline on a flow.
    Analyze {
        /// Catalog flow (`catalog:NAME` or `NAME`) or flow file.
        input: String,
        #[command(flatten)]
        run: RunConfig,
    },
    /// Run the theorem checkers; exit status 0 iff every record passes.
    Verify {
        /// Run a single theorem id.
        #[arg(long)]
        only: Option<String>,
        #[command(flatten)]
        run: RunConfig,
    },
    /// Color top cells by role (SVG) or list the roles (CSV).
    Plot {
        input: String,
        #[command(flatten)]
        run: RunConfig,
    },
    /// Write a catalog flow (with its attractor) or a catalog complex as JSON.
    Construct {
        name: String,
        #[command(flatten)]
        run: RunConfig,
    },
    /// Homology of a catalog complex or complex file.
    Homology {
        input: String,
        #[command(flatten)]
        run: RunConfig,
    },
}

#[derive(Args, Clone)]
struct RunConfig {
    #[arg(long, default_value = "z2", value_parser = parse_ring)]
    ring: Ring,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION, value_parser = parse_resolution)]
    resolution: usize,
    /// How many times to double the resolution while the verdict is Unknown.
    #[arg(long, default_value_t = 0)]
    refine: usize,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Svg,
    Text,
}

fn parse_resolution(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("resolution must be at least 1".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_ring(s: &str) -> std::result::Result<Ring, String> {
    s.parse().map_err(|e: conleylab::Error| e.to_string())
}

/// Analysis output. Cell sets serialize as sorted id arrays.
#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct ReportFile {
    schema: String,
    flow: String,
    resolution: Option<usize>,
    refinements: usize,
    expected: Option<Expected>,
    report: AttractorReport,
    block: Option<IsolatingBlock>,
    block_error: Option<String>,
    /// Components of the exit and entrance sections.
    sections: Option<(usize, usize)>,
    conley_euler: Option<i64>,
}

struct Loaded {
    flow: CombinatorialFlow,
    k: CellSet,
    /// Catalog name and resolution when the flow can be rebuilt finer.
    catalog: Option<(String, usize)>,
    expected: Option<Expected>,
}

fn catalog_dir_file(name: &str) -> Option<PathBuf> {
    let dir = std::env::var_os(CATALOG_ENV)?;
    let p = Path::new(&dir).join(format!("{name}.json"));
    p.is_file().then_some(p)
}

fn load_flow_file(path: &Path) -> Result<Loaded> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let file: FlowFile = serde_json::from_str(&text).with_context(|| format!("{} is not a flow file", path.display()))?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("flow");
    let flow = file.build(name)?;
    let seeds = file.attractor.as_ref().with_context(|| format!("{} names no attractor", path.display()))?;
    let tops: Vec<usize> = seeds.iter().map(|&c| c as usize).collect();
    if let Some(&bad) = tops.iter().find(|&&c| c >= flow.complex.len() || !flow.complex.is_top(c)) {
        bail!("attractor cell {bad} is not a top cell");
    }
    let k = flow.complex.closure_of_cells(&tops);
    Ok(Loaded { flow, k, catalog: None, expected: None })
}

fn load_flow(input: &str, resolution: usize) -> Result<Loaded> {
    let name = input.strip_prefix("catalog:").unwrap_or(input);
    if let Some(p) = catalog_dir_file(name) {
        return load_flow_file(&p);
    }
    if FLOW_CATALOG.contains(&name) {
        let cf = catalog_flow(name, resolution)?;
        return Ok(Loaded { flow: cf.flow, k: cf.k, catalog: Some((name.to_string(), resolution)), expected: cf.expected });
    }
    let p = Path::new(input);
    if p.is_file() {
        return load_flow_file(p);
    }
    bail!("unknown flow '{input}' (catalog: {})", FLOW_CATALOG.join(", "))
}

fn load_complex(input: &str, resolution: usize) -> Result<CellComplex> {
    let name = input.strip_prefix("catalog:").unwrap_or(input);
    if let Some(p) = catalog_dir_file(name) {
        return Ok(complex_from_json(&std::fs::read_to_string(&p)?)?);
    }
    if CATALOG.contains(&name) {
        return Ok(complex::catalog(name, resolution)?);
    }
    let p = Path::new(input);
    if p.is_file() {
        let text = std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
        return Ok(complex_from_json(&text)?);
    }
    bail!("unknown complex '{input}' (catalog: {})", CATALOG.join(", "))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn run_analysis(input: &str, run: &RunConfig) -> Result<(Loaded, ReportFile)> {
    let mut loaded = load_flow(input, run.resolution)?;
    let mut refinements = 0;
    let mut report = analyze(&loaded.k, &loaded.flow)?;
    while report.classification == Classification::Unknown && refinements < run.refine {
        let Some((name, res)) = loaded.catalog.clone() else { break };
        loaded = load_flow(&name, res * 2)?;
        report = analyze(&loaded.k, &loaded.flow)?;
        refinements += 1;
    }
    let (block, block_error) = match build_block(&loaded.k, &loaded.flow, 1) {
        Ok(b) => (Some(b), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let sections = block.as_ref().and_then(|b| section_components(b, &loaded.flow).ok());
    let ce = block.as_ref().map(|b| conley_euler(b, &loaded.flow));
    let file = ReportFile {
        schema: SCHEMA.into(),
        flow: loaded.flow.name.clone(),
        resolution: loaded.catalog.as_ref().map(|c| c.1),
        refinements,
        expected: loaded.expected,
        report,
        block,
        block_error,
        sections,
        conley_euler: ce,
    };
    Ok((loaded, file))
}

fn cmd_analyze(input: &str, run: &RunConfig) -> Result<()> {
    let (_, file) = run_analysis(input, run)?;
    let text = match run.format.unwrap_or(Format::Json) {
        Format::Json => pretty(&file)?,
        Format::Text => {
            let r = &file.report;
            let mut s = String::new();
            writeln!(s, "flow            {}", file.flow)?;
            writeln!(s, "classification  {}", r.classification)?;
            writeln!(s, "r / s           {} / {}", r.r, r.s)?;
            writeln!(s, "global          {}", r.global)?;
            if let Some(w) = r.witness {
                writeln!(s, "witness         {w}")?;
            }
            match (&file.block, &file.block_error) {
                (Some(b), _) => writeln!(s, "block           {} top cells, regular {}", b.tops.len(), b.regular)?,
                (None, Some(e)) => writeln!(s, "block           {e}")?,
                _ => {}
            }
            if let Some(ce) = file.conley_euler {
                writeln!(s, "conley-euler    {ce}")?;
            }
            s
        }
        _ => bail!("analyze writes json or text"),
    };
    emit(&run.out, &text)
}

fn cmd_verify(only: Option<&str>, run: &RunConfig) -> Result<bool> {
    let verdicts: Vec<TheoremVerdict> = run_all(only, run.resolution)?;
    let all_pass = verdicts.iter().all(|v| v.pass);
    let mut table = String::new();
    for v in &verdicts {
        writeln!(table, "{:<5} {:<13} {}", if v.pass { "PASS" } else { "FAIL" }, v.id, v.inputs)?;
    }
    writeln!(table, "{} of {} records pass", verdicts.iter().filter(|v| v.pass).count(), verdicts.len())?;
    match run.format.unwrap_or(Format::Json) {
        Format::Json => {
            emit(&run.out, &pretty(&verdicts)?)?;
            eprint!("{table}");
        }
        Format::Text => emit(&run.out, &table)?,
        _ => bail!("verify writes json or text"),
    }
    Ok(all_pass)
}

fn roles(loaded: &Loaded, file: &ReportFile) -> Vec<(usize, &'static str)> {
    let r = &file.report;
    loaded
        .flow
        .top_cells()
        .into_iter()
        .map(|c| {
            let role = if loaded.k.contains(c) {
                "K"
            } else if let Some(comp) = r.components.iter().find(|comp| comp.cells.contains(c)) {
                match comp.label {
                    ComponentLabel::Homoclinic => "homoclinic",
                    ComponentLabel::Uniform => "uniform",
                }
            } else {
                "outside"
            };
            (c, role)
        })
        .collect()
}

fn fill(role: &str) -> &'static str {
    match role {
        "K" => "#2b2b2b",
        "homoclinic" => "#e0a030",
        "uniform" => "#5fa8d3",
        _ => "#f2f2f2",
    }
}

fn svg(loaded: &Loaded, file: &ReportFile) -> Result<String> {
    let cx = &loaded.flow.complex;
    if cx.top_dim() != 2 {
        bail!("svg output needs a surface, {} has dimension {}", cx.name, cx.top_dim());
    }
    let pts: Vec<[f64; 2]> = cx.top_cells().iter().flat_map(|&c| cx.geometry(c).unwrap_or(&[]).to_vec()).collect();
    if pts.is_empty() {
        bail!("{} has no stored embedding", cx.name);
    }
    let (x0, x1) = pts.iter().fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p[0]), b.max(p[0])));
    let (y0, y1) = pts.iter().fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p[1]), b.max(p[1])));
    let scale = 400.0;
    let margin = 20.0;
    let (w, h) = ((x1 - x0) * scale + 2.0 * margin, (y1 - y0) * scale + 2.0 * margin);
    // y grows upward in the embedding
    let map = |p: &[f64; 2]| ((p[0] - x0) * scale + margin, (y1 - p[1]) * scale + margin);
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.3}" height="{h:.3}" viewBox="0 0 {w:.3} {h:.3}">"#)?;
    writeln!(s, "<title>{} ({})</title>", file.flow, file.report.classification)?;
    for (c, role) in roles(loaded, file) {
        let Some(g) = cx.geometry(c) else { continue };
        let coords: Vec<String> = g.iter().map(|p| {
            let (x, y) = map(p);
            format!("{x:.3},{y:.3}")
        }).collect();
        writeln!(s, r##"<polygon data-cell="{c}" data-role="{role}" points="{}" fill="{}" stroke="#999999" stroke-width="0.5"/>"##, coords.join(" "), fill(role))?;
    }
    if let Some(b) = &file.block {
        for (set, role, color) in [(&b.nminus_sec, "nminus", "#c0392b"), (&b.nplus_sec, "nplus", "#2471a3")] {
            for e in set.iter().filter(|&e| cx.dim(e) == 1) {
                let Some(g) = cx.geometry(e) else { continue };
                if g.len() < 2 {
                    continue;
                }
                let (a, b) = (map(&g[0]), map(&g[g.len() - 1]));
                writeln!(
                    s,
                    r##"<line data-cell="{e}" data-role="{role}" x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="{color}" stroke-width="3"/>"##,
                    a.0, a.1, b.0, b.1
                )?;
            }
        }
    }
    writeln!(s, "</svg>")?;
    Ok(s)
}

fn cmd_plot(input: &str, run: &RunConfig) -> Result<()> {
    let (loaded, file) = run_analysis(input, run)?;
    let text = match run.format.unwrap_or(Format::Svg) {
        Format::Svg => svg(&loaded, &file)?,
        Format::Csv => {
            let mut s = String::from("cell_id,role\n");
            for (c, role) in roles(&loaded, &file) {
                writeln!(s, "{c},{role}")?;
            }
            s
        }
        _ => bail!("plot writes svg or csv"),
    };
    emit(&run.out, &text)
}

fn cmd_construct(name: &str, run: &RunConfig) -> Result<()> {
    if !matches!(run.format.unwrap_or(Format::Json), Format::Json) {
        bail!("construct writes json");
    }
    let name = name.strip_prefix("catalog:").unwrap_or(name);
    let text = if FLOW_CATALOG.contains(&name) {
        let cf = catalog_flow(name, run.resolution)?;
        let mut file = cf.flow.to_file();
        file.attractor = Some(cf.flow.complex.top_of(&cf.k).into_iter().map(|c| c as u64).collect());
        pretty(&file)?
    } else if CATALOG.contains(&name) {
        complex_to_json(&complex::catalog(name, run.resolution)?) + "\n"
    } else {
        bail!("unknown catalog entry '{name}'");
    };
    emit(&run.out, &text)
}

#[derive(Serialize)]
struct HomologyFile {
    schema: String,
    complex: String,
    ring: Ring,
    ranks: Vec<usize>,
    torsion: Vec<Vec<u64>>,
    euler: i64,
    poincare: String,
}

fn cmd_homology(input: &str, run: &RunConfig) -> Result<()> {
    let cx = load_complex(input, run.resolution)?;
    let h = homology(&cx, run.ring);
    let p = PoincarePolynomial::new(run.ring, cohomology(&cx, run.ring).ranks);
    let file = HomologyFile {
        schema: SCHEMA.into(),
        complex: cx.name.clone(),
        ring: run.ring,
        ranks: h.ranks.clone(),
        torsion: h.torsion.clone(),
        euler: cx.euler(),
        poincare: p.to_string(),
    };
    let text = match run.format.unwrap_or(Format::Json) {
        Format::Json => pretty(&file)?,
        Format::Text => {
            let mut s = String::new();
            for (k, r) in h.ranks.iter().enumerate() {
                let t = h.torsion_at(k);
                if t.is_empty() {
                    writeln!(s, "H_{k} rank {r}")?;
                } else {
                    writeln!(s, "H_{k} rank {r} torsion {t:?}")?;
                }
            }
            writeln!(s, "euler {}", file.euler)?;
            s
        }
        _ => bail!("homology writes json or text"),
    };
    emit(&run.out, &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Analyze { input, run } => cmd_analyze(input, run).map(|_| true),
        Cmd::Verify { only, run } => cmd_verify(only.as_deref(), run),
        Cmd::Plot { input, run } => cmd_plot(input, run).map(|_| true),
        Cmd::Construct { name, run } => cmd_construct(name, run).map(|_| true),
        Cmd::Homology { input, run } => cmd_homology(input, run).map(|_| true),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
