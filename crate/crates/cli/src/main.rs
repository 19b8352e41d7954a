//! `mstab`: command-line driver for mstab-core.
//!
//! Exit status 0 on success, 1 when the input is well formed but fails validation or
//! a computation cannot be completed, 2 on usage errors and malformed input.

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use mstab_core::anquiver::{make_linear, QuiverWithPotential};
use mstab_core::hearts::{exchange_graph, Heart};
use mstab_core::io::{self, Encoding, SCHEMA};
use mstab_core::klattice::{simple_twist_data, word_matrix, BraidWord};
use mstab_core::limits::extract_limit;
use mstab_core::number::Gauss;
use mstab_core::strata::{adjacency_poset, census, enumerate_graphs};
use mstab_core::MstabError;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Dot,
    Table,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Precision {
    Exact,
    Numeric,
}

#[derive(Parser, Debug)]
#[command(name = "mstab", version, about = "Multi-scale stability conditions for CY3 A_n quivers")]
struct Cli {
    /// Output format; not every subcommand supports every format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Charges as exact values or floating point (overridden by MSTAB_PRECISION).
    #[arg(long, value_enum, default_value_t = Precision::Exact, global = true)]
    precision: Precision,
    /// Significant digits in numeric mode.
    #[arg(long, default_value_t = 17, global = true)]
    digits: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Apply a tilt word (signed simple labels) to a heart.
    Tilt {
        #[arg(long, default_value = "A2")]
        heart: String,
        /// Whitespace- or comma-separated signed labels; negative means backward.
        #[arg(long, allow_hyphen_values = true)]
        word: String,
    },
    /// Breadth-first exchange graph of forward tilts.
    ExchangeGraph {
        #[arg(long, default_value = "A2")]
        heart: String,
        #[arg(long, default_value_t = 2)]
        radius: usize,
    },
    /// Apply the C-action to a stability condition or a multi-scale datum.
    CAct {
        /// JSON text, a path, or '-' for stdin.
        #[arg(long)]
        input: String,
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
    },
    /// Validate a multi-scale datum and report its vanishing chain.
    MscValidate {
        #[arg(long)]
        input: String,
    },
    /// Plumb a multi-scale datum; one --tau per level, 'inf' for no plumbing.
    Plumb {
        #[arg(long)]
        input: String,
        #[arg(long = "tau", allow_hyphen_values = true, required = true)]
        taus: Vec<String>,
    },
    /// Commutation defect of plumbing and rotation over a grid of lambdas and taus.
    Defect {
        #[arg(long)]
        input: String,
        #[arg(long = "lambda", allow_hyphen_values = true, required = true)]
        lambdas: Vec<String>,
        #[arg(long = "tau", allow_hyphen_values = true, required = true)]
        taus: Vec<String>,
    },
    /// Limit of a Laurent family of central charges as t -> 0+.
    Limit {
        #[arg(long, default_value = "A2")]
        heart: String,
        /// Tuple such as '(-1+it, 1+it)', one entry per simple in label order, or a
        /// JSON object keyed by label.
        #[arg(long, allow_hyphen_values = true)]
        family: String,
    },
    /// Enumerate boundary level graphs.
    Strata {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        levels: usize,
        /// List every labeled graph instead of the unlabeled census.
        #[arg(long)]
        labeled: bool,
        /// Also report the undegeneration order.
        #[arg(long)]
        poset: bool,
    },
    /// K-theory matrix of a braid word on the linear A_n quiver.
    Braid {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        word: String,
        /// Quiver with potential as JSON (defaults to linear A_n).
        #[arg(long)]
        quiver: Option<String>,
    },
    /// Twist-group data of a type rho, levels separated by ';'.
    TwistData {
        #[arg(long)]
        rho: String,
    },
}

/// Errors with their exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<MstabError> for Failure {
    fn from(e: MstabError) -> Self {
        let code = match e {
            MstabError::Parse(_) => 2,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

type Out = Result<String, Failure>;

fn read_input(s: &str) -> Result<Value, Failure> {
    let text = if s == "-" {
        let mut buf = String::new();
        std::io::Read::read_to_string(&mut std::io::stdin(), &mut buf).map_err(|e| usage(format!("stdin: {e}")))?;
        buf
    } else if s.trim_start().starts_with('{') {
        s.to_string()
    } else {
        std::fs::read_to_string(s).map_err(|e| usage(format!("{s}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| usage(format!("malformed JSON at line {} column {}: {e}", e.line(), e.column())))
}

fn gauss_arg(s: &str) -> Result<Gauss, Failure> {
    Gauss::parse(s).map_err(|e| usage(e.to_string()))
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).unwrap_or_default()
}

fn reject_format(format: Format, allowed: &[Format], cmd: &str) -> Result<(), Failure> {
    if allowed.contains(&format) {
        Ok(())
    } else {
        Err(usage(format!("{cmd} does not support --format {format:?}")))
    }
}

fn heart_dot(h: &Heart) -> String {
    let mut s = String::from("digraph heart {\n");
    for sm in &h.simples {
        let c: Vec<String> = sm.class.iter().map(|x| x.to_string()).collect();
        s += &format!("  s{} [label=\"{}: ({})\"];\n", sm.label, sm.label, c.join(","));
    }
    for (a, b) in &h.extquiver.arrows {
        s += &format!("  s{a} -> s{b};\n");
    }
    s + "}\n"
}

fn run(cli: Cli) -> Out {
    let enc = match std::env::var("MSTAB_PRECISION").ok().as_deref() {
        Some("exact") => Encoding::Exact,
        Some("numeric") => Encoding::Numeric { digits: cli.digits },
        Some(other) => return Err(usage(format!("MSTAB_PRECISION must be 'exact' or 'numeric', got '{other}'"))),
        None => match cli.precision {
            Precision::Exact => Encoding::Exact,
            Precision::Numeric => Encoding::Numeric { digits: cli.digits },
        },
    };
    let format = cli.format;
    match cli.command {
        Command::Tilt { heart, word } => {
            reject_format(format, &[Format::Json, Format::Dot], "tilt")?;
            let h = io::heart_from_name(&heart)?;
            let w: Vec<i64> = word
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<i64>().map_err(|_| usage(format!("bad tilt letter '{t}'"))))
                .collect::<Result<_, _>>()?;
            let out = h.apply_word(&w)?;
            if format == Format::Dot {
                return Ok(heart_dot(&out));
            }
            Ok(pretty(&json!({ "schema": SCHEMA, "heart": out.to_json(), "key": out.canonical_key().to_string() })))
        }
        Command::ExchangeGraph { heart, radius } => {
            reject_format(format, &[Format::Json, Format::Dot], "exchange-graph")?;
            let g = exchange_graph(&io::heart_from_name(&heart)?, radius)?;
            if format == Format::Dot {
                return Ok(g.to_dot());
            }
            let hearts: Vec<Value> = g.hearts.iter().map(|h| json!(h.canonical_key().to_string())).collect();
            Ok(pretty(&json!({ "schema": SCHEMA, "hearts": hearts, "edges": g.edges })))
        }
        Command::CAct { input, lambda } => {
            reject_format(format, &[Format::Json], "c-act")?;
            let v = read_input(&input)?;
            let lam = gauss_arg(&lambda)?;
            if v.get("levels").is_some() {
                let m = io::msc_from_json(&v)?;
                Ok(pretty(&io::msc_to_json(&m.c_act(&lam)?, enc)?))
            } else {
                let s = io::stab_from_json(&v)?;
                Ok(pretty(&io::stab_to_json(&s.c_act(&lam)?, enc)?))
            }
        }
        Command::MscValidate { input } => {
            reject_format(format, &[Format::Json], "msc-validate")?;
            let m = io::msc_from_json(&read_input(&input)?)?;
            let mut out = io::msc_to_json(&m, enc)?;
            out["valid"] = json!(true);
            out["vanishing_chain"] = serde_json::to_value(m.vanishing_chain()).unwrap_or(Value::Null);
            Ok(pretty(&out))
        }
        Command::Plumb { input, taus } => {
            reject_format(format, &[Format::Json], "plumb")?;
            let m = io::msc_from_json(&read_input(&input)?)?;
            let taus: Vec<Option<Gauss>> = taus
                .iter()
                .map(|t| if t == "inf" || t == "-iinf" { Ok(None) } else { gauss_arg(t).map(Some) })
                .collect::<Result<_, _>>()?;
            Ok(pretty(&io::msc_to_json(&m.plumb(&taus)?, enc)?))
        }
        Command::Defect { input, lambdas, taus } => {
            reject_format(format, &[Format::Json, Format::Table], "defect")?;
            let m = io::msc_from_json(&read_input(&input)?)?;
            let mut rows = vec![];
            for l in &lambdas {
                for t in &taus {
                    let (lam, tau) = (gauss_arg(l)?, gauss_arg(t)?);
                    let r = m.commutation_defect(&lam, &tau)?;
                    rows.push((l.clone(), t.clone(), r));
                }
            }
            if format == Format::Table {
                let mut s = format!("{:<12} {:<12} {:>24} {:>24} {:>6} {:>4}\n", "lambda", "tau", "defect", "bound", "within", "ell");
                for (l, t, r) in &rows {
                    s += &format!(
                        "{:<12} {:<12} {:>24.16e} {:>24.16e} {:>6} {:>4}\n",
                        l, t, r.max_simple_defect, r.bound, r.within_bound, r.ell
                    );
                }
                return Ok(s);
            }
            let rows: Vec<Value> = rows
                .iter()
                .map(|(l, t, r)| {
                    json!({
                        "lambda": l,
                        "tau": t,
                        "max_simple_defect": io::round_sig(r.max_simple_defect, cli.digits),
                        "bound": io::round_sig(r.bound, cli.digits),
                        "within_bound": r.within_bound,
                        "ell": r.ell,
                        "zero_certified": r.zero_certified,
                    })
                })
                .collect();
            Ok(pretty(&json!({ "schema": SCHEMA, "rows": rows })))
        }
        Command::Limit { heart, family } => {
            reject_format(format, &[Format::Json], "limit")?;
            let h = io::heart_from_name(&heart)?;
            let zc = if family.trim_start().starts_with('{') {
                let v: Value = serde_json::from_str(&family).map_err(|e| usage(format!("malformed JSON: {e}")))?;
                io::laurent_charge_from_json(&h, &v, "")?
            } else {
                io::parse_family_tuple(&h, &family)?
            };
            let out = extract_limit(&h, &zc)?;
            let unrotated = match &out.unrotated {
                Some(u) => io::msc_to_json(u, Encoding::Exact)?,
                None => Value::Null,
            };
            Ok(pretty(&json!({
                "schema": SCHEMA,
                "msc": io::msc_to_json(&out.msc, enc)?,
                "lambda": out.lambda.to_string(),
                "unrotated": unrotated,
                "family": io::laurent_charge_to_json(&out.family),
            })))
        }
        Command::Strata { n, levels, labeled, poset } => {
            if n == 0 {
                return Err(usage("--n must be positive"));
            }
            if labeled {
                let gs = enumerate_graphs(n, levels);
                match format {
                    Format::Dot => return Ok(gs.iter().map(|g| g.to_dot()).collect::<Vec<_>>().join("\n")),
                    Format::Table => {
                        let mut s = format!("{:<6} {:<40} {:>8} {:>8}\n", "levels", "graph", "kappas", "prongs");
                        for g in &gs {
                            s += &format!("{:<6} {:<40} {:>8} {:>8}\n", g.depth(), g.labeled_key(), format!("{:?}", g.kappas()), g.prong_count());
                        }
                        return Ok(s);
                    }
                    Format::Json => {}
                }
                let mut out = json!({ "schema": SCHEMA, "n": n, "count": gs.len(), "graphs": gs });
                if poset {
                    out["poset"] = serde_json::to_value(adjacency_poset(&gs, false)?).unwrap_or(Value::Null);
                }
                return Ok(pretty(&out));
            }
            let c = census(n, levels);
            match format {
                Format::Dot => Ok(c.iter().map(|e| e.representative.to_dot()).collect::<Vec<_>>().join("\n")),
                Format::Table => {
                    let mut s = format!("{:<6} {:<40} {:>8} {:>10} {:>8}\n", "levels", "type", "labeled", "kappas", "prongs");
                    for e in &c {
                        s += &format!(
                            "{:<6} {:<40} {:>8} {:>10} {:>8}\n",
                            e.levels,
                            e.key,
                            e.labeled_count,
                            format!("{:?}", e.kappas),
                            e.prongs
                        );
                    }
                    Ok(s)
                }
                Format::Json => {
                    let mut out = json!({ "schema": SCHEMA, "n": n, "max_levels": levels, "census": c });
                    if poset {
                        let reps: Vec<_> = c.iter().map(|e| e.representative.clone()).collect();
                        out["poset"] = serde_json::to_value(adjacency_poset(&reps, true)?).unwrap_or(Value::Null);
                    }
                    Ok(pretty(&out))
                }
            }
        }
        Command::Braid { n, word, quiver } => {
            reject_format(format, &[Format::Json, Format::Table], "braid")?;
            let q = match quiver {
                Some(s) => {
                    let v = read_input(&s)?;
                    let q: QuiverWithPotential =
                        serde_json::from_value(v).map_err(|e| usage(format!("quiver: {e}")))?;
                    QuiverWithPotential::new(q.vertices, q.arrows, q.cycles)?
                }
                None => make_linear(n)?,
            };
            let w = BraidWord::parse(&word)?;
            let m = word_matrix(&q, &w)?;
            if format == Format::Table {
                return Ok(m.rows.iter().map(|r| r.iter().map(|x| format!("{x:>4}")).collect::<String>() + "\n").collect());
            }
            Ok(pretty(&json!({ "schema": SCHEMA, "word": w.to_string(), "matrix": m.rows })))
        }
        Command::TwistData { rho } => {
            reject_format(format, &[Format::Json], "twist-data")?;
            let rho: Vec<Vec<usize>> = rho
                .split(';')
                .map(|lvl| {
                    lvl.split(|c: char| c == ',' || c.is_whitespace())
                        .filter(|t| !t.is_empty())
                        .map(|t| t.parse::<usize>().map_err(|_| usage(format!("bad component size '{t}'"))))
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<_, _>>()?;
            let d = simple_twist_data(&rho)?;
            Ok(pretty(&json!({ "schema": SCHEMA, "levels": d.levels })))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(mut s) => {
            if !s.ends_with('\n') {
                s.push('\n');
            }
            // a closed pipe (e.g. `| head`) is not an error
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(s.as_bytes()).and_then(|_| out.flush());
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
