//! Command-line front end. Every run echoes its configuration and the crate
//! version ahead of the results, so identical invocations produce identical bytes.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::energy::{comparability_report, TestFunction};
use crate::error::{Error, Result};
use crate::hypergraph::{build_augmented_tree, default_gamma, AugmentedTree};
use crate::model::ModelSpec;
use crate::network::Network;
use crate::partition::{build_tree, ROOT};
use crate::potential::{hitting_distribution, monte_carlo_hitting, Kernel, KernelPair};
use crate::resistance::{
    critical_lambda_sharp, critical_lambda_star, hull_boundary, parse_pair, resistance_curve, ClassifyOptions,
    CriticalMode, CriticalOptions,
};

#[derive(Parser, Debug, Serialize)]
#[command(name = "augtree", version, about = "Random walks and resistances on augmented trees of self-similar sets")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,

    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug, Serialize)]
enum Command {
    /// Index trees and their horizontal edges.
    #[command(subcommand)]
    Tree(TreeCmd),
    /// Conductance networks.
    #[command(subcommand)]
    Network(NetworkCmd),
    /// Hitting laws of the walk.
    #[command(subcommand)]
    Walk(WalkCmd),
    /// Green, Martin and Naïm kernels on a truncation.
    Kernel(KernelArgs),
    /// Level resistances and critical exponents.
    #[command(subcommand)]
    Resistance(ResistanceCmd),
    /// Energy of harmonic extensions against the Besov sum.
    #[command(subcommand)]
    Energy(EnergyCmd),
    /// Exact identities of the λ-walk.
    #[command(subcommand)]
    Verify(VerifyCmd),
}

#[derive(Subcommand, Debug, Serialize)]
enum TreeCmd {
    Build {
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 6)]
        levels: usize,
        /// Horizontal threshold; the model's value or r0/2 when absent.
        #[arg(long)]
        gamma: Option<f64>,
        /// Also write the horizontal edges (level, x_id, y_id).
        #[arg(long)]
        edges_csv: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug, Serialize)]
enum NetworkCmd {
    Build {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        lambda: f64,
        /// Also write the edge list (x, y, c).
        #[arg(long)]
        edges_csv: Option<PathBuf>,
    },
}

/// Where the network comes from: a saved network, or a model built on the fly.
#[derive(Args, Debug, Serialize)]
struct NetSource {
    #[arg(long, conflicts_with_all = ["model", "lambda"])]
    net: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Truncation depth when building from a model.
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
}

#[derive(Subcommand, Debug, Serialize)]
enum WalkCmd {
    /// Exact law of the first hit of level m from the root.
    Hitting {
        #[command(flatten)]
        source: NetSource,
        #[arg(long)]
        level: usize,
    },
    /// Monte Carlo law of the first hit of a level.
    Simulate {
        #[command(flatten)]
        source: NetSource,
        /// Start vertex, as a label or `#id`.
        #[arg(long, default_value = "o")]
        start: String,
        #[arg(long)]
        stop_level: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum KernelKind {
    Naim,
    Martin,
    Green,
    EverVisit,
}

#[derive(Args, Debug, Serialize)]
struct KernelArgs {
    #[arg(value_enum)]
    kind: KernelKind,
    #[command(flatten)]
    source: NetSource,
    /// CSV of vertex pairs `x,y` (labels or `#id`); other lines starting with `#` are comments.
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long)]
    trunc: usize,
}

#[derive(Subcommand, Debug, Serialize)]
enum ResistanceCmd {
    /// `R_n` between two sets for n = 1..nmax.
    Curve {
        #[arg(long)]
        model: String,
        #[arg(long)]
        lambda: f64,
        /// `A;B` with sets given as `w:<label>`, `#id` or `+`-joined points; `a,b` in one dimension.
        #[arg(long)]
        pair: String,
        #[arg(long, default_value_t = 8)]
        nmax: usize,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, default_value_t = 0.02)]
        tol: f64,
    },
    /// Bracket for the critical λ.
    Critical {
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 8)]
        nmax: usize,
        #[arg(long, default_value_t = 12)]
        iters: usize,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, default_value_t = 0.02)]
        tol: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Star,
    Sharp,
}

#[derive(Subcommand, Debug, Serialize)]
enum EnergyCmd {
    Compare {
        #[arg(long)]
        model: String,
        #[arg(long)]
        lambda: f64,
        /// `linear`, `indicator` or `distance:c1,c2,…`
        #[arg(long, default_value = "linear")]
        function: String,
        /// Inclusive range `a..b`.
        #[arg(long, default_value = "4..8")]
        levels: String,
        #[arg(long)]
        gamma: Option<f64>,
    },
}

#[derive(Subcommand, Debug, Serialize)]
enum VerifyCmd {
    /// Hitting distribution, return ratio and F(x, root) suites.
    All {
        #[arg(long)]
        model: String,
        #[arg(long)]
        lambda: f64,
        /// Deepest level checked.
        #[arg(long, default_value_t = 8)]
        levels: usize,
        #[arg(long)]
        gamma: Option<f64>,
        /// Truncation used for F(x, root).
        #[arg(long, default_value_t = 12)]
        trunc: usize,
    },
}

#[derive(Serialize, Deserialize)]
struct TreeFile {
    tree: AugmentedTree,
}

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    lambda: f64,
    tree: AugmentedTree,
}

/// A finished result, tabular or structured.
enum Report {
    Table { columns: Vec<&'static str>, rows: Vec<Vec<String>> },
    Document(Value),
}

struct Outcome {
    report: Report,
    /// Overrides the exit code (checks that ran but failed).
    failed: bool,
}

impl From<Report> for Outcome {
    fn from(report: Report) -> Self {
        Outcome { report, failed: false }
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run(args: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    let outcome = dispatch(cli)?;
    let config = serde_json::to_value(cli)?;
    let format = cli.format.unwrap_or(match outcome.report {
        Report::Table { .. } => Format::Csv,
        Report::Document(_) => Format::Json,
    });
    let text = render(&outcome.report, format, &config);
    match &cli.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(if outcome.failed { 2 } else { 0 })
}

fn render(report: &Report, format: Format, config: &Value) -> String {
    let version = crate::VERSION;
    match (report, format) {
        (Report::Table { columns, rows }, Format::Csv) => {
            let mut s = format!("# augtree {version}\n# config: {config}\n{}\n", columns.join(","));
            for r in rows {
                s.push_str(&r.join(","));
                s.push('\n');
            }
            s
        }
        (Report::Table { columns, rows }, Format::Json) => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|r| {
                    Value::Object(
                        columns
                            .iter()
                            .zip(r)
                            .map(|(c, v)| (c.to_string(), cell_value(v)))
                            .collect(),
                    )
                })
                .collect();
            document(json!({ "rows": rows }), version, config)
        }
        (Report::Document(v), Format::Json) => document(v.clone(), version, config),
        (Report::Document(v), Format::Csv) => {
            // structured results have no table form; emit the JSON under the header
            format!("# augtree {version}\n# config: {config}\n{v}\n")
        }
    }
}

fn cell_value(s: &str) -> Value {
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() => json!(x),
        _ => json!(s),
    }
}

fn document(mut body: Value, version: &str, config: &Value) -> String {
    let provenance = json!({ "version": version, "config": config });
    match body.as_object_mut() {
        Some(map) => {
            map.insert("provenance".into(), provenance);
        }
        None => body = json!({ "provenance": provenance, "result": body }),
    }
    let mut s = serde_json::to_string_pretty(&body).expect("values serialize");
    s.push('\n');
    s
}

fn write_csv(path: &Path, columns: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut s = format!("# augtree {}\n{}\n", crate::VERSION, columns.join(","));
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    std::fs::write(path, s)?;
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("lambda = {lambda} is outside (0, 1)")))
    }
}

fn augmented(model: &str, levels: usize, gamma: Option<f64>) -> Result<(ModelSpec, Arc<AugmentedTree>)> {
    let spec = ModelSpec::load(model)?;
    let tree = build_tree(&spec, levels)?;
    let gamma = gamma.or(spec.gamma()).unwrap_or_else(|| default_gamma(tree.r0));
    let aug = build_augmented_tree(tree, gamma)?;
    Ok((spec, Arc::new(aug)))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn network_from(src: &NetSource, min_levels: usize) -> Result<Network> {
    if let Some(path) = &src.net {
        let file: NetworkFile = read_json(path)?;
        check_lambda(file.lambda)?;
        return Network::build(Arc::new(file.tree), file.lambda);
    }
    let (Some(model), Some(lambda)) = (&src.model, src.lambda) else {
        return Err(Error::InvalidParameter("give --net, or --model with --lambda".into()));
    };
    check_lambda(lambda)?;
    let levels = src.levels.unwrap_or(min_levels).max(min_levels);
    let (_, tree) = augmented(model, levels, src.gamma)?;
    Network::build(tree, lambda)
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Tree(TreeCmd::Build {
            model,
            levels,
            gamma,
            edges_csv,
        }) => {
            let (_, tree) = augmented(model, *levels, *gamma)?;
            if let Some(path) = edges_csv {
                let rows = tree
                    .horizontal_edges()
                    .map(|(m, x, y)| vec![m.to_string(), x.to_string(), y.to_string()]);
                write_csv(path, &["level", "x_id", "y_id"], rows)?;
            }
            let file = TreeFile {
                tree: Arc::unwrap_or_clone(tree),
            };
            Ok(Report::Document(serde_json::to_value(file)?).into())
        }
        Command::Network(NetworkCmd::Build {
            tree,
            lambda,
            edges_csv,
        }) => {
            check_lambda(*lambda)?;
            let file: TreeFile = read_json(tree)?;
            let net = Network::build(Arc::new(file.tree), *lambda)?;
            if let Some(path) = edges_csv {
                let rows = net
                    .edge_rows()
                    .into_iter()
                    .map(|e| vec![e.x.to_string(), e.y.to_string(), num(e.conductance)]);
                write_csv(path, &["x", "y", "c"], rows)?;
            }
            let out = NetworkFile {
                lambda: *lambda,
                tree: Arc::unwrap_or_clone(net.tree.clone()),
            };
            Ok(Report::Document(serde_json::to_value(out)?).into())
        }
        Command::Walk(WalkCmd::Hitting { source, level }) => {
            let net = network_from(source, *level)?;
            let nu = hitting_distribution(&net, *level)?;
            let t = &net.tree.tree;
            let rows = t
                .level_range(*level)
                .zip(nu)
                .map(|(x, p)| vec![x.to_string(), t.label_string(x), num(p), num(t.measure[x])])
                .collect();
            Ok(Report::Table {
                columns: vec!["x_id", "label", "probability", "measure"],
                rows,
            }
            .into())
        }
        Command::Walk(WalkCmd::Simulate {
            source,
            start,
            stop_level,
            trials,
            seed,
        }) => {
            if *trials == 0 {
                return Err(Error::InvalidParameter("trials must be positive".into()));
            }
            let net = network_from(source, *stop_level)?;
            let t = &net.tree.tree;
            let x0 = t.resolve_vertex(start)?;
            let freq = monte_carlo_hitting(&net, x0, *stop_level, *trials, *seed)?;
            let exact = if x0 == ROOT {
                Some(hitting_distribution(&net, *stop_level)?)
            } else {
                None
            };
            let rows = t
                .level_range(*stop_level)
                .enumerate()
                .map(|(i, x)| {
                    vec![
                        x.to_string(),
                        t.label_string(x),
                        num(freq[i]),
                        exact.as_ref().map_or(String::new(), |e| num(e[i])),
                    ]
                })
                .collect();
            Ok(Report::Table {
                columns: vec!["x_id", "label", "frequency", "exact"],
                rows,
            }
            .into())
        }
        Command::Kernel(KernelArgs {
            kind,
            source,
            pairs,
            trunc,
        }) => {
            let net = network_from(source, *trunc)?;
            let t = &net.tree.tree;
            let text = std::fs::read_to_string(pairs)?;
            let mut queries = Vec::new();
            // `#` starts a comment unless it is a `#id`
            let comment = |l: &str| l.starts_with('#') && !l[1..].starts_with(|c: char| c.is_ascii_digit());
            for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !comment(l)) {
                let (a, b) = line
                    .split_once(',')
                    .ok_or_else(|| Error::InvalidParameter(format!("bad pair line `{line}`")))?;
                if a.trim() == "x" && b.trim() == "y" {
                    continue;
                }
                queries.push((t.resolve_vertex(a)?, t.resolve_vertex(b)?));
            }
            let kernels = KernelPair::new(&net, *trunc)?;
            let kernel = match kind {
                KernelKind::Naim => Kernel::Naim,
                KernelKind::Martin => Kernel::Martin,
                KernelKind::Green => Kernel::Green,
                KernelKind::EverVisit => Kernel::EverVisit,
            };
            let rows = queries
                .into_iter()
                .map(|(x, y)| {
                    let est = kernels.estimate(kernel, x, y)?;
                    Ok(vec![t.label_string(x), t.label_string(y), num(est.value), num(est.convergence_gap)])
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Report::Table {
                columns: vec!["x", "y", "value", "gap"],
                rows,
            }
            .into())
        }
        Command::Resistance(ResistanceCmd::Curve {
            model,
            lambda,
            pair,
            nmax,
            gamma,
            tol,
        }) => {
            check_lambda(*lambda)?;
            let (a, b) = parse_pair(pair)?;
            let (_, tree) = augmented(model, *nmax, *gamma)?;
            let net = Network::build(tree, *lambda)?;
            let opts = ClassifyOptions {
                tol: *tol,
                ..ClassifyOptions::default()
            };
            let curve = resistance_curve(&net, &a, &b, *nmax, opts)?;
            let scale = (-net.log_shift).exp();
            if cli.format == Some(Format::Json) {
                return Ok(Report::Document(serde_json::to_value(&curve)?).into());
            }
            let rows = curve
                .values
                .iter()
                .map(|p| vec![p.n.to_string(), num(p.resistance * scale), num(p.horizontal * scale)])
                .collect();
            Ok(Report::Table {
                columns: vec!["n", "R_n", "H_n"],
                rows,
            }
            .into())
        }
        Command::Resistance(ResistanceCmd::Critical {
            mode,
            model,
            nmax,
            iters,
            gamma,
            tol,
        }) => {
            let (spec, tree) = augmented(model, *nmax, *gamma)?;
            let ifs = spec
                .as_ifs()
                .ok_or_else(|| Error::Unsupported("critical search needs an IFS model".into()))?;
            let opts = CriticalOptions {
                n_max: *nmax,
                iters: *iters,
                classify: ClassifyOptions {
                    tol: *tol,
                    ..ClassifyOptions::default()
                },
                bracket: None,
            };
            let result = match mode {
                ModeArg::Sharp => critical_lambda_sharp(tree, ifs, opts)?,
                ModeArg::Star => {
                    let v0 = hull_boundary(&tree.tree)?;
                    critical_lambda_star(tree, ifs, &v0, opts)?
                }
            };
            debug_assert!(matches!(result.mode, CriticalMode::Star | CriticalMode::Sharp));
            Ok(Report::Document(serde_json::to_value(&result)?).into())
        }
        Command::Energy(EnergyCmd::Compare {
            model,
            lambda,
            function,
            levels,
            gamma,
        }) => {
            check_lambda(*lambda)?;
            let u = TestFunction::parse(function)?;
            let levels = parse_levels(levels)?;
            let deepest = *levels.last().unwrap();
            let (_, tree) = augmented(model, deepest, *gamma)?;
            let report = comparability_report(tree, *lambda, &u, &levels)?;
            let rows = report
                .iter()
                .map(|r| {
                    vec![
                        r.level.to_string(),
                        num(r.graph_energy),
                        num(r.besov),
                        r.ratio.map_or("degenerate".into(), num),
                    ]
                })
                .collect();
            Ok(Report::Table {
                columns: vec!["level", "graph_energy", "besov", "ratio"],
                rows,
            }
            .into())
        }
        Command::Verify(VerifyCmd::All {
            model,
            lambda,
            levels,
            gamma,
            trunc,
        }) => {
            check_lambda(*lambda)?;
            if *trunc < 2 || *levels < 1 {
                return Err(Error::InvalidParameter("need --levels >= 1 and --trunc >= 2".into()));
            }
            let depth = (*levels).max(*trunc);
            let (_, tree) = augmented(model, depth, *gamma)?;
            let net = Network::build(tree, *lambda)?;
            let rows = verify_suites(&net, *levels, *trunc)?;
            let failed = rows.iter().any(|r| r[5] == "false");
            Ok(Outcome {
                report: Report::Table {
                    columns: vec!["suite", "item", "value", "expected", "error", "pass"],
                    rows,
                },
                failed,
            })
        }
    }
}

fn parse_levels(text: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidParameter(format!("bad level range `{text}`"));
    let (a, b) = match text.split_once("..") {
        Some((a, b)) => (a, b.trim_start_matches('=')),
        None => (text, text),
    };
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a == 0 || a > b {
        return Err(bad());
    }
    Ok((a..=b).collect())
}

const HD_TOL: f64 = 1e-9;
const RATIO_TOL: f64 = 1e-12;
const EVER_TOL: f64 = 1e-3;

fn verify_suites(net: &Network, levels: usize, trunc: usize) -> Result<Vec<Vec<String>>> {
    let t = &net.tree.tree;
    let mut rows = Vec::new();
    let mut push = |suite: &str, item: String, value: f64, expected: f64, tol: f64| {
        let err = (value - expected).abs();
        rows.push(vec![
            suite.to_string(),
            item,
            num(value),
            num(expected),
            num(err),
            (err <= tol).to_string(),
        ]);
    };
    for m in 1..=levels {
        let nu = hitting_distribution(net, m)?;
        let worst = t
            .level_range(m)
            .zip(&nu)
            .max_by(|a, b| {
                let ea = (a.1 - t.measure[a.0]).abs();
                let eb = (b.1 - t.measure[b.0]).abs();
                ea.total_cmp(&eb)
            })
            .unwrap();
        push("hitting", format!("level {m}"), *worst.1, t.measure[worst.0], HD_TOL);
    }
    for m in 1..levels {
        let worst = t
            .level_range(m)
            .map(|x| Ok((x, net.return_ratio(x)?)))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .max_by(|a, b| (a.1 - net.lambda).abs().total_cmp(&(b.1 - net.lambda).abs()))
            .unwrap();
        push("return_ratio", format!("level {m}"), worst.1, net.lambda, RATIO_TOL);
    }
    let kernels = KernelPair::new(net, trunc)?;
    for m in 1..=levels.min(4).min(trunc - 1) {
        let mut worst: Option<(f64, f64)> = None;
        for x in t.level_range(m) {
            let f = kernels.estimate(Kernel::EverVisit, x, ROOT)?.value;
            let want = net.lambda.powi(m as i32);
            if worst.map_or(true, |(v, w)| (f - want).abs() > (v - w).abs()) {
                worst = Some((f, want));
            }
        }
        let (v, w) = worst.unwrap();
        push("ever_visit_root", format!("level {m}"), v, w, EVER_TOL);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(s: &str) -> Vec<String> {
        std::iter::once("augtree".to_string())
            .chain(s.split_whitespace().map(String::from))
            .collect()
    }

    #[test]
    fn level_ranges() {
        assert_eq!(parse_levels("4..8").unwrap(), vec![4, 5, 6, 7, 8]);
        assert_eq!(parse_levels("2..=3").unwrap(), vec![2, 3]);
        assert_eq!(parse_levels("5").unwrap(), vec![5]);
        assert!(parse_levels("8..4").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(&argv("--version")), 0);
        assert_eq!(run(&argv("tree frobnicate")), 1);
        assert_eq!(run(&argv("resistance curve --model builtin:interval --lambda 1.5 --pair 0,1")), 1);
    }
}
