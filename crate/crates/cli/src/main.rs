use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use flatsharp::backforth::{compute_f_infinity, TruncatedSystem};
use flatsharp::corpus;
use flatsharp::flat::{check_flat_axioms, flatten, hausdorff_check, FlatStructure};
use flatsharp::groups::{code_of, conjugacy_test, generate, is_sharp_code, Perm, PermGroup};
use flatsharp::reconstruct::{reconstruct_with, ChainOrder};
use flatsharp::reductions::{
    e_infinity_classes, exponent_experiment, fs_pipeline_check, quotient_coloring, build_cross_cut, CrossCutSpec,
    Graph,
};
use flatsharp::structures::{parse_json, parse_structure, serialize_structure, FinStructure};
use flatsharp::Error;

#[derive(Parser)]
#[command(name = "flatsharp", version, about = "Sharp systems, flat structures and the reductions between them")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Largest tuple length kept in systems and flat structures.
    #[arg(long, global = true, default_value_t = 3)]
    n_max: usize,
    /// Padding multiplicity for graph trees.
    #[arg(long, global = true, default_value_t = 3)]
    p: usize,
    /// Largest structure size, group degree or graph order accepted.
    #[arg(long, global = true, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    guard_size: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Seed for corpus sampling.
    #[arg(long, global = true, default_value_t = corpus::DEFAULT_SEED)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Chain {
    Least,
    Greatest,
}

#[derive(Subcommand)]
enum Command {
    /// The largest sharp system of a structure.
    Scott { structure: PathBuf },
    /// Flatten a structure under a system (default: the largest one).
    Flatten { structure: PathBuf, system: Option<PathBuf> },
    /// Check the flat axioms.
    Checkflat { flat: PathBuf },
    /// Recover the structure and system behind a flat structure.
    Reconstruct {
        flat: PathBuf,
        #[arg(long, value_enum, default_value_t = Chain::Least)]
        chain: Chain,
    },
    /// Decide whether formulas separate the points of a flat structure.
    Hausdorff { flat: PathBuf },
    /// The code of a permutation group.
    Code { group: String },
    /// Conjugacy of two subgroups inside a group.
    Conj { group: String, first: String, second: String },
    /// Compare graph isomorphism with conjugacy of the padded-tree codes.
    Fs { first: PathBuf, second: PathBuf },
    /// Cross-cutting equivalence relations: exponent and quotient reports.
    Th {
        /// Class counts, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        h: Vec<usize>,
        /// Cell multiplicities, comma separated (default: all 1).
        #[arg(long, value_delimiter = ',')]
        mult: Option<Vec<usize>>,
    },
    /// Write the deterministic instance corpus.
    Corpus {
        #[arg(long)]
        dir: PathBuf,
        /// Largest structure size included.
        #[arg(long, default_value_t = 4)]
        max_size: usize,
    },
}

enum Fail {
    Input(String),
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

impl Fail {
    fn code(&self) -> u8 {
        match self {
            Fail::Input(_) => 2,
            Fail::Core(Error::Guard { .. }) => 3,
            Fail::Core(
                Error::Syntax { .. }
                | Error::Semantic(_)
                | Error::LengthMismatch { .. }
                | Error::Scope { .. }
                | Error::InvalidSystem(_)
                | Error::Corrupt(_)
                | Error::DegreeMismatch(..)
                | Error::NotMember(_),
            ) => 2,
            Fail::Core(_) => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            Fail::Input(m) => m.clone(),
            Fail::Core(e) => e.to_string(),
        }
    }
}

/// A command result: the JSON report, its text rendering and the exit code.
struct Out {
    json: Value,
    text: String,
    exit: u8,
}

impl Out {
    /// Artifacts print as JSON in either format.
    fn artifact(json: Value) -> Self {
        let text = serde_json::to_string_pretty(&json).expect("json prints");
        Out { json, text, exit: 0 }
    }
}

fn read(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| Fail::Input(format!("cannot read {}: {e}", path.display())))
}

fn read_json(path: &Path) -> Result<Value, Fail> {
    serde_json::from_str(&read(path)?).map_err(|e| Fail::Input(format!("{}: {e}", path.display())))
}

fn load_structure(path: &Path, guard: u64) -> Result<FinStructure, Fail> {
    let text = read(path)?;
    let m = if path.extension().is_some_and(|e| e == "json") {
        parse_json(&text)?
    } else {
        parse_structure(&text)?
    };
    guard_size(m.size, guard, "structure size")?;
    Ok(m)
}

fn load_flat(path: &Path) -> Result<FlatStructure, Fail> {
    Ok(FlatStructure::from_json(&read_json(path)?)?)
}

fn load_graph(path: &Path) -> Result<Graph, Fail> {
    Ok(Graph::parse(&read(path)?)?)
}

fn guard_size(value: usize, guard: u64, what: &'static str) -> Result<(), Fail> {
    if value as u64 > guard {
        return Err(Fail::Core(Error::Guard {
            what,
            value,
            limit: guard as usize,
        }));
    }
    Ok(())
}

/// `sN` is the symmetric group; anything else is a generator list for a
/// group of the given degree, generators separated by `;`.
fn parse_group(spec: &str, degree: Option<usize>) -> Result<PermGroup, Fail> {
    let spec = spec.trim();
    if let Some(n) = spec.strip_prefix('s').or_else(|| spec.strip_prefix('S')) {
        let n: usize = n.parse().map_err(|_| Fail::Input(format!("bad group `{spec}`")))?;
        if degree.is_some_and(|d| d != n) {
            return Err(Fail::Input(format!("`{spec}` has the wrong degree")));
        }
        return Ok(PermGroup::symmetric(n)?);
    }
    let degree = match degree {
        Some(d) => d,
        None => spec
            .split(|c: char| !c.is_ascii_digit())
            .filter_map(|n| n.parse::<usize>().ok())
            .max()
            .map_or(1, |d| d + 1),
    };
    let gens = spec
        .split(';')
        .map(str::trim)
        .filter(|g| !g.is_empty())
        .map(|g| Perm::parse_cycles(g, degree))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(generate(&gens, degree)?)
}

fn partition_text(s: &TruncatedSystem) -> String {
    (1..=s.n_max)
        .map(|k| {
            let classes: Vec<String> = s
                .members(k)
                .iter()
                .map(|c| {
                    let items: Vec<String> = c.iter().map(|t| t.iter().map(|x| x.to_string()).collect()).collect();
                    format!("{{{}}}", items.join(","))
                })
                .collect();
            format!("E_{k}: {}", classes.join(" "))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_file(root: &Path, rel: &str, body: &str, manifest: &mut BTreeMap<String, String>) -> Result<(), Fail> {
    let path = root.join(rel);
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Fail::Input(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(&path, body).map_err(|e| Fail::Input(format!("cannot write {}: {e}", path.display())))?;
    manifest.insert(rel.to_string(), sha256_hex(body.as_bytes()));
    Ok(())
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn run(cli: &Cli) -> Result<Out, Fail> {
    let n_max = cli.n_max;
    match &cli.command {
        Command::Scott { structure } => {
            let m = load_structure(structure, cli.guard_size)?;
            let s = compute_f_infinity(&m, n_max)?;
            Ok(Out {
                text: partition_text(&s),
                json: s.to_json(),
                exit: 0,
            })
        }
        Command::Flatten { structure, system } => {
            let m = load_structure(structure, cli.guard_size)?;
            let s = match system {
                Some(path) => TruncatedSystem::from_json(&read_json(path)?)?,
                None => compute_f_infinity(&m, n_max)?,
            };
            if s.size != m.size {
                return Err(Fail::Input(format!("system is on {} points, structure on {}", s.size, m.size)));
            }
            Ok(Out::artifact(flatten(&m, &s)?.to_json()))
        }
        Command::Checkflat { flat } => {
            let b = load_flat(flat)?;
            let report = check_flat_axioms(&b);
            let json = serde_json::to_value(&report).expect("report serializes");
            let json = json!({ "passed": report.passed(), "failure": json["failure"], "skipped": json["skipped"] });
            let skipped: Vec<String> = report.skipped.iter().map(|(k, v)| format!("{k}: {v}")).collect();
            let text = match &report.failure {
                None => format!("flat: yes ({} points; skipped {})", b.len(), skipped.join(", ")),
                Some(f) => format!("flat: no\naxiom {}: {}\nwitness: {:?}", f.axiom, f.message, f.witness),
            };
            Ok(Out {
                json,
                text,
                exit: u8::from(!report.passed()),
            })
        }
        Command::Reconstruct { flat, chain } => {
            let b = load_flat(flat)?;
            let order = match chain {
                Chain::Least => ChainOrder::Least,
                Chain::Greatest => ChainOrder::Greatest,
            };
            Ok(Out::artifact(reconstruct_with(&b, order)?.to_json()))
        }
        Command::Hausdorff { flat } => {
            let b = load_flat(flat)?;
            let r = hausdorff_check(&b)?;
            let text = match r.unseparated {
                None => format!("hausdorff: true ({} colours)", r.colors),
                Some((x, y)) => format!("hausdorff: false; points {x} and {y} are not separated"),
            };
            Ok(Out {
                json: serde_json::to_value(&r).expect("report serializes"),
                text,
                exit: 0,
            })
        }
        Command::Code { group } => {
            let g = parse_group(group, None)?;
            guard_size(g.degree, cli.guard_size, "group degree")?;
            let code = code_of(&g.elements, g.degree, n_max);
            let sharp = is_sharp_code(&code);
            Ok(Out::artifact(json!({ "group": g.to_json(), "sharp": sharp, "code": code.to_json() })))
        }
        Command::Conj { group, first, second } => {
            let g = parse_group(group, None)?;
            guard_size(g.degree, cli.guard_size, "group degree")?;
            let h1 = parse_group(first, Some(g.degree))?;
            let h2 = parse_group(second, Some(g.degree))?;
            let delta = conjugacy_test(&h1, &h2, &g)?;
            let text = match &delta {
                Some(d) => format!("conjugate: yes; delta = {d}"),
                None => "conjugate: no".to_string(),
            };
            Ok(Out {
                json: json!({ "conjugate": delta.is_some(), "delta": delta.map(|d| d.to_string()) }),
                text,
                exit: 0,
            })
        }
        Command::Fs { first, second } => {
            let (g, h) = (load_graph(first)?, load_graph(second)?);
            guard_size(g.k.max(h.k), cli.guard_size, "graph vertex count")?;
            let r = fs_pipeline_check(&g, &h, cli.p)?;
            let text = format!(
                "{}; {}; agreement: {}",
                if r.graphs_isomorphic { "isomorphic" } else { "not isomorphic" },
                if r.codes_conjugate { "codes conjugate" } else { "codes not conjugate" },
                yes(r.agree)
            );
            let mut json = serde_json::to_value(&r).expect("report serializes");
            json["first"] = json!(g.to_string());
            json["second"] = json!(h.to_string());
            Ok(Out {
                json,
                text,
                exit: u8::from(!r.agree || !r.orders_recovered),
            })
        }
        Command::Th { h, mult } => {
            let spec = match mult {
                Some(m) => CrossCutSpec::new(h.clone(), m.clone())?,
                None => CrossCutSpec::atomic(h.clone())?,
            };
            if spec.is_atomic() {
                let r = exponent_experiment(&spec)?;
                let text = format!(
                    "|Aut| = {}; exponent {} {} {} (K = {}); C_{} divides: {}",
                    r.order,
                    r.exponent,
                    if r.exponent_divides { "divides" } else { "does not divide" },
                    r.k_factorial,
                    r.k,
                    r.prime,
                    yes(r.cyclic_divides)
                );
                let exit = u8::from(!r.exponent_divides || r.cyclic_divides);
                return Ok(Out {
                    json: serde_json::to_value(&r).expect("report serializes"),
                    text,
                    exit,
                });
            }
            let m = build_cross_cut(&spec)?;
            let sizes: Vec<usize> = e_infinity_classes(&m)?.iter().map(Vec::len).collect();
            let q = quotient_coloring(&m)?;
            Ok(Out {
                text: format!("{} elements; class sizes {sizes:?}\n{}", m.size, serialize_structure(&q)),
                json: json!({
                    "h": spec.h,
                    "mult": spec.mult,
                    "size": m.size,
                    "class_sizes": sizes,
                    "quotient": serialize_structure(&q),
                }),
                exit: 0,
            })
        }
        Command::Corpus { dir, max_size } => {
            let mut manifest = BTreeMap::new();
            let mut instances = 0;
            for inst in corpus::structures(cli.seed).into_iter().filter(|i| i.structure.size <= *max_size) {
                write_file(dir, &format!("structures/{}.struct", inst.name), &serialize_structure(&inst.structure), &mut manifest)?;
                instances += 1;
                let n = inst.structure.size + 1;
                for s in corpus::sharp_systems(&inst, n)? {
                    let name = s.name.replace('/', "_");
                    let body = serde_json::to_string(&s.system.to_json()).expect("system prints");
                    write_file(dir, &format!("systems/{name}.json"), &body, &mut manifest)?;
                    instances += 1;
                }
            }
            for (i, g) in corpus::small_graphs().iter().enumerate() {
                write_file(dir, &format!("graphs/small{i:02}.graph"), &format!("{g}\n"), &mut manifest)?;
                instances += 1;
            }
            for (i, (g, h)) in corpus::sampled_graph_pairs(cli.seed, 20).iter().enumerate() {
                write_file(dir, &format!("graphs/pair{i:02}a.graph"), &format!("{g}\n"), &mut manifest)?;
                write_file(dir, &format!("graphs/pair{i:02}b.graph"), &format!("{h}\n"), &mut manifest)?;
                instances += 2;
            }
            let files: Vec<Value> = manifest.iter().map(|(p, h)| json!({ "path": p, "sha256": h })).collect();
            let body = serde_json::to_string_pretty(&json!({ "seed": cli.seed, "files": files })).expect("manifest prints");
            fs::write(dir.join("manifest.json"), &body)
                .map_err(|e| Fail::Input(format!("cannot write manifest: {e}")))?;
            let digest = sha256_hex(body.as_bytes());
            Ok(Out {
                text: format!("{instances} instances in {} files; manifest sha256 {digest}", manifest.len()),
                json: json!({ "seed": cli.seed, "instances": instances, "files": manifest.len(), "manifest_sha256": digest }),
                exit: 0,
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            let body = match cli.format {
                Format::Json => serde_json::to_string_pretty(&out.json).expect("json prints"),
                Format::Text => out.text,
            };
            // a closed pipe is not an error worth reporting
            let _ = writeln!(std::io::stdout().lock(), "{body}");
            ExitCode::from(out.exit)
        }
        Err(fail) => {
            match cli.format {
                Format::Json => println!("{}", json!({ "error": fail.message(), "exit": fail.code() })),
                Format::Text => eprintln!("error: {}", fail.message()),
            }
            ExitCode::from(fail.code())
        }
    }
}
