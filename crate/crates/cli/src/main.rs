use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use pseudorot::base_group::{check_condition_b1, check_condition_b2_with, compute_base_group};
use pseudorot::certify::{certify, render_table, Overrides, ProblemInstance};
use pseudorot::condition_a::{
    decide_condition_a, enumerate_components, search_condition_a_with, Status,
};
use pseudorot::dim4::{
    blacklist, component_index_residue_with, find_length3_with, predicted_residue, slope,
};
use pseudorot::exact_angle::format_rational;
use pseudorot::orbit::OrbitTable;
use pseudorot::partitions::{find_extremal_with, SearchOptions};
use pseudorot::quasimorphism::{hormander_defect, SymplecticMatrix, Tolerances};
use pseudorot::{Error, Result};

#[derive(Parser)]
#[command(
    name = "pseudorot",
    version,
    about = "Index calculus and quantum-product certificates for pseudo-rotation fixed points"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, value_enum, default_value_t = Output::Structured, global = true)]
    output: Output,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Structured,
    Table,
}

#[derive(Args, Clone)]
struct InstanceArgs {
    /// Instance file (TOML).
    instance: PathBuf,
    #[arg(long)]
    max_iterate: Option<u64>,
    #[arg(long)]
    precision_bits: Option<u32>,
    /// Product length, overriding product_length_r.
    #[arg(long)]
    r: Option<usize>,
    /// Minimal Chern number, overriding chern_min.
    #[arg(long)]
    chern: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Conley-Zehnder index, mean index and loop part over a range of iterates.
    Index {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long, default_value_t = 1)]
        from: u64,
        #[arg(long, default_value_t = 10)]
        to: u64,
    },
    /// Relation lattice, dimension and component count of the base group.
    BaseGroup {
        #[command(flatten)]
        inst: InstanceArgs,
    },
    /// Decide Condition A, searching iterates when undecided.
    ConditionA {
        #[command(flatten)]
        inst: InstanceArgs,
    },
    /// Least extremal partition of length r.
    FindPartitions {
        #[command(flatten)]
        inst: InstanceArgs,
        /// Drop the requirement mu != n mod 2N on the parts.
        #[arg(long)]
        no_residue: bool,
    },
    /// Slope, blacklist and length-three search for n = 2.
    Dim4 {
        #[command(flatten)]
        inst: InstanceArgs,
    },
    /// Defect mu(QP) - mu(Q) - mu(P) from two matrix grid files.
    Defect {
        p: PathBuf,
        q: PathBuf,
        /// Seed for the randomized Lagrangian complements.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Full certification pipeline.
    Certify {
        #[command(flatten)]
        inst: InstanceArgs,
        /// Also write the report to this file.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn read(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn load(a: &InstanceArgs) -> Result<ProblemInstance> {
    let ov = Overrides {
        max_iterate: a.max_iterate,
        precision_bits: a.precision_bits,
        r: a.r,
        chern_min: a.chern,
    };
    ProblemInstance::from_toml_with(&read(&a.instance)?, &ov)
}

fn table(v: &Value) -> String {
    fn flat(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
        match v {
            Value::Object(m) => {
                for (k, x) in m {
                    let key = if prefix.is_empty() {
                        k.clone()
                    } else {
                        format!("{prefix}.{k}")
                    };
                    flat(&key, x, out);
                }
            }
            Value::Array(xs) if xs.iter().any(|x| x.is_object()) => {
                for (i, x) in xs.iter().enumerate() {
                    flat(&format!("{prefix}[{i}]"), x, out);
                }
            }
            Value::String(s) => out.push((prefix.into(), s.clone())),
            other => out.push((prefix.into(), other.to_string())),
        }
    }
    let mut rows = Vec::new();
    flat("", v, &mut rows);
    let w = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    rows.iter()
        .map(|(k, v)| format!("{k:<w$}  {v}\n"))
        .collect()
}

fn to_value<T: serde::Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("serializable")
}

fn run(cli: &Cli) -> Result<String> {
    let value = match &cli.command {
        Command::Index { inst, from, to } => {
            let inst = load(inst)?;
            let p = &inst.path;
            let rows: Vec<Value> = (*from..=*to)
                .map(|k| {
                    let mean = p.mean_index(k);
                    json!({
                        "k": k,
                        "cz_index": p.cz_index(k).ok(),
                        "mean_index": mean.to_string(),
                        "mean_index_approx": mean.approx_f64(p.basis()).ok(),
                        "loop_part": p.loop_part(k).ok(),
                    })
                })
                .collect();
            json!({ "iterates": rows })
        }
        Command::BaseGroup { inst } => {
            let inst = load(inst)?;
            let g = compute_base_group(&inst.path)?;
            json!({
                "base_group": to_value(&g),
                "connected": g.is_connected(),
                "maslov_generator": g.maslov_generator(inst.chern_min),
            })
        }
        Command::ConditionA { inst } => {
            let inst = load(inst)?;
            let g = compute_base_group(&inst.path)?;
            let verdict = decide_condition_a(&g, inst.r)?;
            let mut out = json!({ "r": inst.r, "verdict": to_value(&verdict) });
            if verdict.status == Status::Unknown {
                let t = OrbitTable::build(&inst.path, inst.max_iterate)?;
                out["search"] = json!({
                    "max_iterate": inst.max_iterate,
                    "tuple": search_condition_a_with(&inst.path, &t, inst.r)?,
                });
            }
            out
        }
        Command::FindPartitions { inst, no_residue } => {
            let inst = load(inst)?;
            let t = OrbitTable::build(&inst.path, inst.max_iterate)?;
            let opts = SearchOptions::new(inst.max_iterate)
                .with_residue((!no_residue).then_some(inst.chern_min));
            json!({ "r": inst.r, "outcome": to_value(&find_extremal_with(&inst.path, &t, inst.r, &opts)?) })
        }
        Command::Dim4 { inst } => {
            let inst = load(inst)?;
            let g = compute_base_group(&inst.path)?;
            let t = OrbitTable::build(&inst.path, inst.max_iterate)?;
            let mut out =
                json!({ "length3": to_value(&find_length3_with(&inst.path, &t, inst.chern_min)?) });
            if g.dim == 1 {
                let s = slope(&g)?;
                out["blacklisted"] = match blacklist(&s, inst.chern_min) {
                    Ok(b) => json!(b),
                    Err(e) => json!(e.to_string()),
                };
                let b1 = check_condition_b1(&g, inst.chern_min);
                let b2 =
                    check_condition_b2_with(&inst.path, &g, &t, inst.chern_min, &inst.epsilon)?;
                out["condition_b1"] = to_value(&b1);
                out["condition_b2"] = to_value(&b2);
                let mut comps = Vec::new();
                for c in enumerate_components(&g)? {
                    let observed =
                        component_index_residue_with(&inst.path, &g, &t, &c, inst.chern_min);
                    let predicted = predicted_residue(&inst.path, &g, &c, inst.chern_min);
                    comps.push(json!({
                        "index": c.index,
                        "offset": c.offset.iter().map(|z| z.to_string()).collect::<Vec<_>>(),
                        "distance": format_rational(&c.distance),
                        "contains_vertex": c.contains_vertex,
                        "observed_residue": observed.map(|o| to_value(&o)).unwrap_or_else(|e| json!(e.to_string())),
                        "predicted_residue": predicted.map(|p| json!(p)).unwrap_or_else(|e| json!(e.to_string())),
                    }));
                }
                out["components"] = json!(comps);
            }
            out
        }
        Command::Defect { p, q, seed } => {
            let tol = Tolerances::default();
            let p = SymplecticMatrix::from_grid(&read(p)?, tol.symplectic)?;
            let q = SymplecticMatrix::from_grid(&read(q)?, tol.symplectic)?;
            let d = hormander_defect(&p, &q, tol, *seed)?;
            json!({ "n": p.n(), "defect": d, "bound_ok": d.abs() <= p.n() as i64, "seed": seed })
        }
        Command::Certify { inst, report } => {
            let inst = load(inst)?;
            let cert = certify(&inst)?;
            let text = match cli.output {
                Output::Structured => cert.to_json(),
                Output::Table => render_table(&cert),
            };
            if let Some(path) = report {
                fs::write(path, &text)
                    .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
            }
            return Ok(text);
        }
    };
    Ok(match cli.output {
        Output::Structured => serde_json::to_string_pretty(&value).expect("json") + "\n",
        Output::Table => table(&value),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
