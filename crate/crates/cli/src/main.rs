//! `upg`: command-line front end for the polynomially growing automorphism
//! toolkit. Every command prints a JSON report with `"schema": "1"`.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Map, Value};

use upg_core::automorphism::Automorphism;
use upg_core::driver::{run, Generator, KolchinConfig};
use upg_core::free_factor::{free_factor_support_of_words, FreeFactorError, SupportSearch};
use upg_core::graph::{Filtration, MarkedGraph};
use upg_core::growth::{fit_query, limit_length_function, limit_lengths, GrowthConfig};
use upg_core::subgroup::SubgroupGraph;
use upg_core::tree::{Fixedness, SimplicialTree};
use upg_core::triangular::TriangularMap;
use upg_core::word::{CyclicWord, Word};

const SCHEMA: &str = "1";

#[derive(Parser)]
#[command(name = "upg", version, about = "Unipotent polynomially growing subgroups of Out(F_n)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format; text is a flattened rendering of the JSON report.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Fold a finitely generated subgroup and test membership.
    Fold(FoldArgs),
    /// Automorphism utilities.
    Auto {
        #[command(subcommand)]
        command: AutoCommand,
    },
    /// Fit eventually polynomial growth of translation lengths.
    Growth(GrowthArgs),
    /// Limit length function along an automorphism.
    Limit(GrowthArgs),
    /// Smallest free factor system carrying a list of conjugacy classes.
    Support(SupportArgs),
    /// Find a common fixed tree and a filtered graph for a set of generators.
    Kolchin(KolchinArgs),
}

#[derive(Subcommand)]
enum AutoCommand {
    /// Validate an automorphism and report unipotence on homology.
    Check(AutoArgs),
}

#[derive(Args)]
struct AutoArgs {
    #[arg(long)]
    rank: usize,
    /// Comma-separated generator images, e.g. `a,ba`.
    #[arg(long)]
    images: String,
    /// Comma-separated images under the inverse, e.g. `a,bA`.
    #[arg(long)]
    inverse: String,
}

#[derive(Args)]
struct FoldArgs {
    #[arg(long)]
    rank: usize,
    /// Comma-separated subgroup generators.
    #[arg(long)]
    gens: String,
    /// Words to test for membership.
    #[arg(long, value_delimiter = ',')]
    member: Vec<String>,
}

#[derive(Args, Clone, Copy)]
struct RunConfig {
    #[arg(long, default_value_t = 40, value_parser = clap::value_parser!(u32).range(1..))]
    window: u32,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
    margin: u32,
    /// Degree bound for fits; defaults to the rank.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    d_max: Option<u32>,
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u32).range(1..))]
    whitehead_depth: u32,
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..))]
    marking_length_bound: u32,
}

impl RunConfig {
    fn growth(&self, rank: usize) -> GrowthConfig {
        GrowthConfig {
            window: self.window as usize,
            margin: self.margin as usize,
            d_max: self.d_max.map_or(rank, |d| d as usize),
        }
    }
}

#[derive(Args)]
struct GrowthArgs {
    #[command(flatten)]
    auto: AutoArgs,
    /// Comma-separated query words.
    #[arg(long)]
    words: String,
    /// Petal markings of the host rose; defaults to the standard basis.
    #[arg(long)]
    petals: Option<String>,
    /// Indices of collapsed petals.
    #[arg(long, value_delimiter = ',')]
    collapse: Vec<usize>,
    #[command(flatten)]
    config: RunConfig,
}

#[derive(Args)]
struct SupportArgs {
    #[arg(long)]
    rank: usize,
    /// Comma-separated conjugacy classes.
    #[arg(long)]
    words: String,
    #[arg(long, default_value_t = 6)]
    whitehead_depth: usize,
}

#[derive(Args)]
struct KolchinArgs {
    /// JSON input file, or `-` for standard input.
    input: PathBuf,
}

/// Failure kinds mapped to exit codes.
enum Failure {
    Usage(String),
    Analytic { kind: &'static str, message: String },
}

impl Failure {
    fn analytic(kind: &'static str, e: impl ToString) -> Self {
        Failure::Analytic {
            kind,
            message: e.to_string(),
        }
    }
}

fn usage(e: impl ToString) -> Failure {
    Failure::Usage(e.to_string())
}

fn words(rank: usize, list: &str) -> Result<Vec<Word>, Failure> {
    list.split(',')
        .map(|s| Word::parse_in_rank(s.trim(), rank).map_err(usage))
        .collect()
}

fn automorphism(a: &AutoArgs) -> Result<Automorphism, Failure> {
    Automorphism::parse(a.rank, &a.images, &a.inverse).map_err(usage)
}

fn report(command: &str, body: Value) -> Value {
    let mut m = Map::new();
    m.insert("schema".into(), json!(SCHEMA));
    m.insert("command".into(), json!(command));
    if let Value::Object(b) = body {
        m.extend(b);
    }
    Value::Object(m)
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report values serialize")
}

fn triangular_json(f: &TriangularMap) -> Value {
    let h = f.host();
    let edges: Vec<Value> = (0..f.edge_count())
        .map(|e| {
            json!({
                "edge": e,
                "prefix": h.path_word(f.prefix(e)),
                "suffix": h.path_word(f.suffix(e)),
            })
        })
        .collect();
    json!({
        "filtration": f.filtration().order(),
        "ur": f.is_ur(),
        "edges": edges,
    })
}

fn cmd_fold(a: &FoldArgs) -> Result<Value, Failure> {
    let gens = words(a.rank, &a.gens)?;
    let h = SubgroupGraph::fold(a.rank, &gens);
    let mut members = Map::new();
    for m in &a.member {
        let w = Word::parse_in_rank(m, a.rank).map_err(usage)?;
        members.insert(w.to_string(), json!(h.contains(&w)));
    }
    Ok(report(
        "fold",
        json!({ "subgroup": to_value(&h), "rank_of_subgroup": h.rank(), "membership": members }),
    ))
}

fn cmd_auto_check(a: &AutoArgs) -> Result<Value, Failure> {
    let phi = automorphism(a)?;
    let m = phi.abelianization();
    let tri = upg_core::driver::rose_triangular(&phi);
    Ok(report(
        "auto check",
        json!({
            "automorphism": to_value(&phi),
            "abelianization": to_value(&m),
            "unipotent": m.is_unipotent(),
            "trivial_mod3": m.trivial_mod3(),
            "triangular": tri.as_ref().map(triangular_json),
        }),
    ))
}

fn tree_from(a: &GrowthArgs) -> Result<SimplicialTree, Failure> {
    let rank = a.auto.rank;
    let host = match &a.petals {
        Some(p) => MarkedGraph::rose(rank, words(rank, p)?).map_err(usage)?,
        None => MarkedGraph::standard_rose(rank),
    };
    let m = host.graph().edge_count();
    if let Some(&bad) = a.collapse.iter().find(|&&i| i >= m) {
        return Err(usage(format!("petal index {bad} out of range")));
    }
    let collapsed = (0..m).map(|e| a.collapse.contains(&e)).collect();
    SimplicialTree::new(host, collapsed).map_err(usage)
}

fn cmd_growth(a: &GrowthArgs) -> Result<Value, Failure> {
    let phi = automorphism(&a.auto)?;
    let tree = tree_from(a)?;
    let cfg = a.config.growth(a.auto.rank);
    let mut results = Vec::new();
    for w in words(a.auto.rank, &a.words)? {
        let fit = fit_query(&tree, &phi, &w, cfg).map_err(|e| Failure::analytic("NoPolynomialWithinWindow", e))?;
        results.push(json!({
            "query": w,
            "k0": fit.onset,
            "degree": fit.degree,
            "coefficients": to_value(&fit.coefficients.iter().map(|c| c.to_string()).collect::<Vec<_>>()),
        }));
    }
    Ok(report("growth", json!({ "tree": to_value(&tree), "results": results })))
}

fn cmd_limit(a: &GrowthArgs) -> Result<Value, Failure> {
    let phi = automorphism(&a.auto)?;
    let tree = tree_from(a)?;
    let cfg = a.config.growth(a.auto.rank);
    let queries = words(a.auto.rank, &a.words)?;
    let lf = match upg_core::driver::rose_triangular(&phi) {
        Some(f) => limit_length_function(&tree, &f, &queries, cfg),
        None => limit_lengths(&tree, &phi, &[], &queries, cfg),
    }
    .map_err(|e| Failure::analytic("NoPolynomialWithinWindow", e))?;
    let values: Map<String, Value> = queries
        .iter()
        .map(|q| (q.to_string(), json!(lf.get(q).map(|v| v.to_string()))))
        .collect();
    let elliptic: Vec<Word> = lf.elliptics().iter().map(CyclicWord::to_word).collect();
    Ok(report(
        "limit",
        json!({ "degree": lf.degree, "values": values, "elliptic": elliptic }),
    ))
}

fn cmd_support(a: &SupportArgs) -> Result<Value, Failure> {
    let ws: Vec<CyclicWord> = words(a.rank, &a.words)?.iter().map(CyclicWord::new).collect();
    let search = SupportSearch {
        depth: a.whitehead_depth,
        ..SupportSearch::default()
    };
    match free_factor_support_of_words(a.rank, &ws, search) {
        Ok(sys) => {
            let (basis, blocks) = sys.realization().cloned().unwrap_or_default();
            Ok(report(
                "support",
                json!({
                    "whole_group": false,
                    "factors": to_value(&sys),
                    "complexity": sys.complexity().0,
                    "basis": basis,
                    "blocks": blocks,
                }),
            ))
        }
        Err(FreeFactorError::SupportIsWholeGroup) => Ok(report(
            "support",
            json!({ "whole_group": true, "factors": Value::Null, "complexity": [a.rank] }),
        )),
        Err(e) => Err(usage(e)),
    }
}

#[derive(Deserialize)]
struct KolchinInput {
    rank: usize,
    generators: Vec<GeneratorInput>,
    #[serde(default)]
    config: ConfigInput,
}

#[derive(Deserialize)]
struct GeneratorInput {
    images: Vec<String>,
    inverse_images: Vec<String>,
    #[serde(default)]
    triangular: Option<TriangularInput>,
}

/// Triangular data on the standard rose.
#[derive(Deserialize)]
struct TriangularInput {
    order: Vec<usize>,
    prefixes: Vec<String>,
    suffixes: Vec<String>,
}

#[derive(Deserialize, Default)]
struct ConfigInput {
    window: Option<usize>,
    margin: Option<usize>,
    d_max: Option<usize>,
    whitehead_depth: Option<usize>,
    marking_length_bound: Option<usize>,
    max_cycles: Option<usize>,
}

fn parse_generator(rank: usize, g: &GeneratorInput) -> Result<Generator, Failure> {
    let parse = |v: &[String]| -> Result<Vec<Word>, Failure> {
        v.iter().map(|s| Word::parse_in_rank(s, rank).map_err(usage)).collect()
    };
    let phi = Automorphism::validate(parse(&g.images)?, parse(&g.inverse_images)?).map_err(usage)?;
    if phi.rank() != rank {
        return Err(usage("generator rank differs from declared rank"));
    }
    let mut generator = Generator::new(phi);
    if let Some(t) = &g.triangular {
        let filtration = Filtration::new(t.order.clone()).map_err(usage)?;
        let f = TriangularMap::from_words(
            MarkedGraph::standard_rose(rank),
            filtration,
            &parse(&t.prefixes)?,
            &parse(&t.suffixes)?,
        )
        .map_err(usage)?;
        let induced = f.induced_automorphism().map_err(usage)?;
        if !induced.same_outer_class(&generator.automorphism) {
            return Err(usage("triangular data does not represent the generator"));
        }
        generator.triangular = Some(f);
    }
    Ok(generator)
}

fn cmd_kolchin(a: &KolchinArgs) -> Result<Value, Failure> {
    let text = if a.input.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(usage)?;
        s
    } else {
        std::fs::read_to_string(&a.input).map_err(usage)?
    };
    let input: KolchinInput = serde_json::from_str(&text).map_err(usage)?;
    if input.rank == 0 {
        return Err(usage("rank must be positive"));
    }
    let gens = input
        .generators
        .iter()
        .map(|g| parse_generator(input.rank, g))
        .collect::<Result<Vec<_>, _>>()?;
    let d = KolchinConfig::default();
    let c = &input.config;
    let config = KolchinConfig {
        window: c.window.unwrap_or(d.window),
        margin: c.margin.unwrap_or(d.margin),
        d_max: c.d_max.or(d.d_max),
        whitehead_depth: c.whitehead_depth.unwrap_or(d.whitehead_depth),
        marking_length_bound: c.marking_length_bound.unwrap_or(d.marking_length_bound),
        max_cycles: c.max_cycles.unwrap_or(d.max_cycles),
    };
    let autos: Vec<Automorphism> = gens.iter().map(|g| g.automorphism.clone()).collect();
    let result = run(input.rank, gens, config).map_err(|e| {
        let kind = match e {
            upg_core::driver::KolchinError::NotUnipotentOnHomology { .. } => "NotUnipotentOnHomology",
            upg_core::driver::KolchinError::SupportSearchExhausted(_) => "SupportSearchExhausted",
            upg_core::driver::KolchinError::WindowExhausted(_) => "WindowExhausted",
            upg_core::driver::KolchinError::RestrictionNotCertified(_) => "RestrictionNotCertified",
            _ => "RealizationFailed",
        };
        Failure::analytic(kind, e)
    })?;
    let fixed = autos.iter().all(|g| {
        matches!(
            result.fixed_tree.is_fixed_by(g, Default::default()),
            Fixedness::Fixed { .. }
        )
    });
    let log: Vec<String> = result
        .history
        .iter()
        .map(|h| {
            format!(
                "cycle {} generator {}: {}{}",
                h.cycle,
                h.generator,
                h.outcome,
                if h.detail.is_empty() { String::new() } else { format!(" ({})", h.detail) }
            )
        })
        .collect();
    Ok(report(
        "kolchin",
        json!({
            "certified": fixed,
            "rank": result.rank,
            "free_factor_system": to_value(&result.system),
            "fixed_tree": to_value(&result.fixed_tree),
            "graph": to_value(&result.graph),
            "edge_count": result.graph.graph().edge_count(),
            "edge_bound": upg_core::driver::edge_bound(result.rank),
            "lifts": result.lifts.iter().map(triangular_json).collect::<Vec<_>>(),
            "aut_lifts": to_value(&result.aut_lifts),
            "solvability": to_value(&result.solvability),
            "history": to_value(&result.history),
            "log": log,
        }),
    ))
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<String>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&p, x, out);
            }
        }
        Value::Array(a) if a.iter().any(|x| x.is_object() || x.is_array()) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), x, out);
            }
        }
        other => out.push(format!("{prefix}: {other}")),
    }
}

fn dispatch(cli: &Cli) -> Result<Value, Failure> {
    match &cli.command {
        Command::Fold(a) => cmd_fold(a),
        Command::Auto { command: AutoCommand::Check(a) } => cmd_auto_check(a),
        Command::Growth(a) => cmd_growth(a),
        Command::Limit(a) => cmd_limit(a),
        Command::Support(a) => cmd_support(a),
        Command::Kolchin(a) => cmd_kolchin(a),
    }
}

/// Writes the report; a closed stdout (e.g. a pipe into `head`) is ignored.
fn emit(format: Format, v: &Value) {
    let text = match format {
        Format::Json => serde_json::to_string_pretty(v).expect("json"),
        Format::Text => {
            let mut lines = Vec::new();
            flatten("", v, &mut lines);
            lines.join("\n")
        }
    };
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(v) => {
            emit(cli.format, &v);
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Analytic { kind, message }) => {
            let command = match &cli.command {
                Command::Fold(_) => "fold",
                Command::Auto { .. } => "auto check",
                Command::Growth(_) => "growth",
                Command::Limit(_) => "limit",
                Command::Support(_) => "support",
                Command::Kolchin(_) => "kolchin",
            };
            emit(
                cli.format,
                &report(command, json!({ "error": { "kind": kind, "message": message } })),
            );
            ExitCode::from(2)
        }
    }
}
