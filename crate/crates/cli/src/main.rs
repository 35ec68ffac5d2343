//! Command-line front end: JSON ingestion, one subcommand per operation
//! family, self-test suites, and deterministic report emission.
//!
//! Exit codes: 0 success, 1 a property or identity failed, 2 malformed input.

use clap::{Parser, Subcommand};
use semimeas::json as sj;
use semimeas::order_semilattice::GridPoint;
use semimeas::selftest::{suite_by_name, suite_names, suites, SuiteCtx};
use semimeas::semimodular::{
    certify_positive_bounded, deciders, extend_to_lattice, extend_to_ring, is_semiadditive,
    semiadditive_translation,
};
use semimeas::set_core::classify_family;
use semimeas::stoch::{
    self, chain_limit, doob_meyer, extend_filtration, extend_process, isometry_check, quasinorm,
    riesz, stopping_diagnostics, validate_model, SimpleStoppingTime,
};
use semimeas::value::{rat_from_str, rat_to_string};
use semimeas::Error;
use serde_json::{json, Value as Json};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "semimeas", version, about = "Exact semilattice measures and processes")]
struct Cli {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Report format.
    #[arg(long, global = true, default_value = "json")]
    format: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closure flags and semi-modularity verdicts for a family or set function.
    Check {
        input: PathBuf,
    },
    /// Extend a (product) set function to the generated lattice, ring or algebra.
    Extend {
        input: PathBuf,
        #[arg(long, default_value = "ring")]
        to: String,
        /// Value of the full ground set for the algebra extension ("p/q" per coordinate, comma separated).
        #[arg(long)]
        total: Option<String>,
        /// Treat the input as a product set function.
        #[arg(long)]
        product: bool,
    },
    /// Operations on a filtered process model.
    Process {
        input: PathBuf,
        #[arg(long)]
        op: String,
        /// Grid points for the chain operation, e.g. "(0,0);(1,0);(1,1)".
        #[arg(long)]
        points: Option<String>,
    },
    /// Demonstrations.
    Demo {
        #[command(subcommand)]
        which: DemoCommand,
    },
    /// Run the registered property suites.
    Selftest {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Run independent suites concurrently; reports merge in suite order.
        #[arg(long)]
        parallel: bool,
        /// Fault-injection hook: corrupt the sign weight and expect failures.
        #[arg(long, hide = true)]
        corrupt_nu: bool,
    },
}

#[derive(Subcommand)]
enum DemoCommand {
    /// Sample-maximum experiment design lower bounds.
    Experiment {
        #[arg(long, default_value_t = 4)]
        locations: usize,
        #[arg(long, default_value_t = 4)]
        horizon: usize,
        /// Comma-separated group counts.
        #[arg(long, default_value = "1,2,4")]
        groups: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Deterministic per-step increment "p/q"; omit for random increments.
        #[arg(long)]
        eta: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((report, ok)) => {
            emit(&cli, &report);
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            let code = match &e {
                Error::Internal(_) => 1u8,
                _ => 2u8,
            };
            let report = json!({
                "tool": "semimeas",
                "version": VERSION,
                "error": e.to_string(),
            });
            emit(&cli, &report);
            ExitCode::from(code)
        }
    }
}

fn emit(cli: &Cli, report: &Json) {
    let text = if cli.format == "text" {
        render_text(report)
    } else {
        serde_json::to_string_pretty(report).expect("serializable") + "\n"
    };
    match &cli.output {
        Some(path) => std::fs::write(path, text).expect("writable output path"),
        None => {
            let mut out = std::io::stdout();
            out.write_all(text.as_bytes()).expect("stdout");
        }
    }
}

fn render_text(v: &Json) -> String {
    let mut s = String::new();
    fn walk(v: &Json, indent: usize, s: &mut String) {
        let pad = "  ".repeat(indent);
        match v {
            Json::Object(m) => {
                for (k, vv) in m {
                    match vv {
                        Json::Object(_) | Json::Array(_) => {
                            s.push_str(&format!("{pad}{k}:\n"));
                            walk(vv, indent + 1, s);
                        }
                        _ => s.push_str(&format!("{pad}{k}: {vv}\n")),
                    }
                }
            }
            Json::Array(a) => {
                for vv in a {
                    match vv {
                        Json::Object(_) | Json::Array(_) => walk(vv, indent, s),
                        _ => s.push_str(&format!("{pad}- {vv}\n")),
                    }
                }
            }
            _ => s.push_str(&format!("{pad}{v}\n")),
        }
    }
    walk(v, 0, &mut s);
    s
}

fn read_json(path: &PathBuf) -> Result<Json, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Invalid(format!("malformed JSON: {e}")))
}

fn ledger_json(l: &semimeas::IdentityLedger) -> Json {
    json!(l
        .entries
        .iter()
        .map(|e| json!({"label": e.label, "lhs": e.lhs, "rhs": e.rhs, "equal": e.equal}))
        .collect::<Vec<_>>())
}

fn run(cli: &Cli) -> Result<(Json, bool), Error> {
    match &cli.command {
        Command::Check { input } => cmd_check(input),
        Command::Extend {
            input,
            to,
            total,
            product,
        } => cmd_extend(input, to, total.as_deref(), *product),
        Command::Process { input, op, points } => cmd_process(input, op, points.as_deref()),
        Command::Demo { which } => cmd_demo(which),
        Command::Selftest {
            suite,
            samples,
            seed,
            parallel,
            corrupt_nu,
        } => cmd_selftest(suite, *samples, *seed, *parallel, *corrupt_nu),
    }
}

fn cmd_check(input: &PathBuf) -> Result<(Json, bool), Error> {
    let raw = read_json(input)?;
    let has_values = raw.get("values").is_some();
    if !has_values {
        let family = sj::family_from_json(&raw)?;
        if !family.is_semilattice() {
            return Err(Error::NotSemilattice);
        }
        let c = classify_family(&family);
        let report = json!({
            "tool": "semimeas", "version": VERSION,
            "kind": "family",
            "cap_closed": c.cap_closed,
            "cup_closed": c.cup_closed,
            "union_membership_property": c.union_membership_property,
            "exhaustive": c.exhaustive,
        });
        return Ok((report, true));
    }
    let f = sj::setfunction_from_json(&raw)?;
    if !f.domain.is_semilattice() {
        return Err(Error::NotSemilattice);
    }
    let c = classify_family(&f.domain);
    let mut verdicts = Vec::new();
    let mut agreement = true;
    let mut last = None;
    for d in deciders() {
        let cert = d.decide(&f)?;
        if let Some(prev) = last {
            agreement &= prev == cert.semimodular;
        }
        last = Some(cert.semimodular);
        verdicts.push(json!({
            "method": d.name(),
            "semimodular": cert.semimodular,
            "incomplete": cert.incomplete,
            "witness": cert.witness.map(|w| json!({
                "collection": w.collection.iter().map(|m| f.domain.ground.labels_of_mask(*m)).collect::<Vec<_>>(),
                "lhs": w.lhs.to_strings(),
                "rhs": w.rhs.to_strings(),
            })),
            "infeasibility": cert.infeasibility.map(|w| json!({
                "coordinate": w.coordinate,
                "coefficients": w.coefficients.iter().map(rat_to_string).collect::<Vec<_>>(),
            })),
            "atoms": cert.solution.map(|s| json!({
                "atoms": s.atoms.iter().map(|a| f.domain.ground.labels_of_mask(*a)).collect::<Vec<_>>(),
                "values": s.atom_values.iter().map(|v| v.to_strings()).collect::<Vec<_>>(),
                "translation": s.c.to_strings(),
            })),
        }));
    }
    let semimodular = last.unwrap_or(false);
    let semiadditive = if semimodular {
        Some(is_semiadditive(&f)?.semiadditive)
    } else {
        None
    };
    let report = json!({
        "tool": "semimeas", "version": VERSION,
        "kind": "set_function",
        "cap_closed": c.cap_closed,
        "cup_closed": c.cup_closed,
        "union_membership_property": c.union_membership_property,
        "deciders": verdicts,
        "deciders_agree": agreement,
        "semiadditive": semiadditive,
    });
    Ok((report, agreement))
}

fn cmd_extend(
    input: &PathBuf,
    to: &str,
    total: Option<&str>,
    product: bool,
) -> Result<(Json, bool), Error> {
    let raw = read_json(input)?;
    if product {
        use semimeas::product_ext::*;
        let f = sj::product_from_json(&raw)?;
        let ext = product_extend_ring(&f)?;
        let report = json!({
            "tool": "semimeas", "version": VERSION,
            "kind": "product_ring_extension",
            "product_ground": ext.ground.labels(),
            "atoms": ext.atoms.iter().zip(&ext.atom_values).map(|(a, v)| json!({
                "atom": ext.ground.labels_of_mask(*a),
                "value": v.to_strings(),
            })).collect::<Vec<_>>(),
        });
        return Ok((report, true));
    }
    let f = sj::setfunction_from_json(&raw)?;
    match to {
        "lattice" => {
            let ext = extend_to_lattice(&f)?;
            let report = json!({
                "tool": "semimeas", "version": VERSION,
                "kind": "lattice_extension",
                "values": ext.domain.sets.iter().map(|s| json!({
                    "set": ext.domain.ground.labels_of_mask(*s),
                    "value": ext.value(*s).to_strings(),
                })).collect::<Vec<_>>(),
            });
            Ok((report, true))
        }
        "ring" | "algebra" => {
            let ext = extend_to_ring(&f)?;
            let (y, _) = semiadditive_translation(&f)?;
            let positivity = if f.dim == 1 {
                let rep = certify_positive_bounded(&f)?;
                Some(json!({
                    "positive": rep.positive,
                    "negative_atom": rep.negative_atom.map(|(a, v)| json!({
                        "atom": f.domain.ground.labels_of_mask(a),
                        "value": rat_to_string(&v),
                    })),
                    "total_variation": rat_to_string(&rep.total_variation),
                    "bounded": rep.bounded,
                    "ring_nonpositive_sup": rat_to_string(&rep.ring_nonpositive_sup),
                    "domain_nonpositive_sup": rep.domain_nonpositive_sup.as_ref().map(rat_to_string),
                    "domain_unit_sup": rep.domain_unit_sup.as_ref().map(rat_to_string),
                }))
            } else {
                None
            };
            let mut report = json!({
                "tool": "semimeas", "version": VERSION,
                "kind": "ring_extension",
                "translation": y.to_strings(),
                "restricts": ext.restricts,
                "atoms": ext.ring.atoms.iter().zip(&ext.atom_values).map(|(a, v)| json!({
                    "atom": f.domain.ground.labels_of_mask(*a),
                    "value": v.to_strings(),
                })).collect::<Vec<_>>(),
                "values": ext.ring.family.sets.iter().map(|s| json!({
                    "set": f.domain.ground.labels_of_mask(*s),
                    "value": ext.values[s].to_strings(),
                })).collect::<Vec<_>>(),
                "positivity": positivity,
            });
            if to == "algebra" {
                let t = match total {
                    Some(spec) => semimeas::Value(
                        spec.split(',')
                            .map(|s| rat_from_str(s.trim()))
                            .collect::<Result<Vec<_>, _>>()?,
                    ),
                    None => semimeas::Value::zero(f.dim),
                };
                let algebra = ext.extend_to_algebra(&t)?;
                report["algebra"] = json!(algebra.iter().map(|(s, v)| json!({
                    "set": f.domain.ground.labels_of_mask(*s),
                    "value": v.to_strings(),
                })).collect::<Vec<_>>());
                report["total"] = json!(t.to_strings());
            }
            Ok((report, true))
        }
        other => Err(Error::Invalid(format!("unknown extension target {other:?}"))),
    }
}

fn cmd_process(input: &PathBuf, op: &str, points: Option<&str>) -> Result<(Json, bool), Error> {
    let raw = read_json(input)?;
    let model = sj::model_from_json(&raw)?;
    let vm = validate_model(model)?;
    let flags = json!({
        "martingale": vm.flags.martingale,
        "strong_martingale": vm.flags.strong_martingale,
        "supermartingale": vm.flags.supermartingale,
        "submartingale": vm.flags.submartingale,
        "increasing": vm.flags.increasing,
    });
    let base = |extra: Json, ledger: Option<Json>| {
        let mut o = json!({
            "tool": "semimeas", "version": VERSION,
            "kind": format!("process_{op}"),
            "flags": flags,
            "atoms": vm.ring.atoms.len(),
        });
        if let Json::Object(m) = &mut o {
            if let Json::Object(e) = extra {
                for (k, v) in e {
                    m.insert(k, v);
                }
            }
            if let Some(l) = ledger {
                m.insert("ledger".into(), l);
            }
        }
        o
    };
    let region_key = |region: &semimeas::order_semilattice::CellSet| -> String {
        let idx: Vec<String> = vm
            .ring
            .atom_indices(region)
            .unwrap_or_default()
            .iter()
            .map(|i| i.to_string())
            .collect();
        format!("atoms[{}]", idx.join(","))
    };
    match op {
        "validate" => Ok((base(json!({}), None), true)),
        "extend" => {
            let (values, ledger) = extend_process(&vm)?;
            let (parts, ledger2) = extend_filtration(&vm)?;
            let ok = ledger.all_equal() && ledger2.all_equal();
            let mut merged = ledger;
            merged.merge(ledger2);
            Ok((
                base(
                    json!({
                        "regions": values.iter().map(|(r, v)| json!({
                            "region": region_key(r),
                            "value": v.to_strings(),
                            "blocks": parts[r].blocks.len(),
                        })).collect::<Vec<_>>(),
                    }),
                    Some(ledger_json(&merged)),
                ),
                ok,
            ))
        }
        "quasinorm" => {
            let q = quasinorm(&vm)?;
            Ok((base(json!({"quasinorm": rat_to_string(&q)}), None), true))
        }
        "riesz" => {
            let rz = riesz(&vm)?;
            let ok = rz.ledger.all_equal();
            Ok((
                base(
                    json!({
                        "martingale_part": rz.m.to_strings(),
                        "potential": rz.z.iter().map(|(r, v)| json!({
                            "region": region_key(r),
                            "value": v.to_strings(),
                        })).collect::<Vec<_>>(),
                    }),
                    Some(ledger_json(&rz.ledger)),
                ),
                ok,
            ))
        }
        "doob-meyer" => {
            let dm = doob_meyer(&vm)?;
            let ok = dm.ledger.all_equal();
            Ok((
                base(
                    json!({
                        "martingale_density": dm.m.to_strings(),
                        "compensator": dm.a.iter().map(|(r, v)| json!({
                            "region": region_key(r),
                            "value": v.to_strings(),
                        })).collect::<Vec<_>>(),
                        "monotone_pattern": dm.monotone_pattern,
                    }),
                    Some(ledger_json(&dm.ledger)),
                ),
                ok,
            ))
        }
        "isometry" => {
            let ledger = isometry_check(&vm)?;
            let ok = ledger.all_equal();
            Ok((base(json!({}), Some(ledger_json(&ledger))), ok))
        }
        "chain" => {
            let chain_points: Vec<GridPoint> = match points {
                Some(spec) => spec
                    .split(';')
                    .map(|p| sj::point_from_key(p.trim(), &vm.model.ambient))
                    .collect::<Result<Vec<_>, _>>()?,
                None => {
                    // canonical diagonal chain
                    let k = vm.model.ambient.k();
                    let maxes: Vec<usize> = vm
                        .model
                        .ambient
                        .levels
                        .iter()
                        .map(|a| a.len() - 1)
                        .collect();
                    vec![
                        GridPoint::Finite(vec![0; k]),
                        GridPoint::Finite(maxes),
                        GridPoint::Top,
                    ]
                }
            };
            let regions: Vec<_> = chain_points
                .iter()
                .map(|p| vm.ring.strict_upset_of(p).cloned())
                .collect::<Result<Vec<_>, _>>()?;
            let ledger = chain_limit(&vm, &regions)?;
            let ok = ledger.all_equal();
            Ok((base(json!({}), Some(ledger_json(&ledger))), ok))
        }
        "stopping" => {
            // one stopping time per generator region with the full event
            let sigmas: Vec<SimpleStoppingTime> = vm
                .ring
                .generator_regions
                .iter()
                .filter(|r| !r.is_empty())
                .map(|r| SimpleStoppingTime {
                    arms: vec![(r.clone(), vm.space().full_event())],
                })
                .collect();
            let rep = stopping_diagnostics(&vm, &sigmas)?;
            let ok = rep.ledger.all_equal();
            Ok((
                base(
                    json!({
                        "stopped_norms": rep.stopped_norms.iter().map(rat_to_string).collect::<Vec<_>>(),
                        "sup_norm": rat_to_string(&rep.sup_norm),
                    }),
                    Some(ledger_json(&rep.ledger)),
                ),
                ok,
            ))
        }
        other => Err(Error::Invalid(format!("unknown process op {other:?}"))),
    }
}

fn cmd_demo(which: &DemoCommand) -> Result<(Json, bool), Error> {
    match which {
        DemoCommand::Experiment {
            locations,
            horizon,
            groups,
            seed,
            eta,
        } => {
            let gs: Vec<usize> = groups
                .split(',')
                .map(|g| {
                    g.trim()
                        .parse()
                        .map_err(|_| Error::Invalid(format!("bad group count {g:?}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let eta = eta.as_deref().map(rat_from_str).transpose()?;
            let rows = stoch::experiment_demo(*locations, *horizon, &gs, *seed, eta.clone())?;
            let report = json!({
                "tool": "semimeas", "version": VERSION,
                "kind": "experiment_demo",
                "locations": locations,
                "horizon": horizon,
                "seed": seed,
                "eta": eta.as_ref().map(rat_to_string),
                "rows": rows.iter().map(|r| json!({
                    "groups": r.groups,
                    "group_bound": rat_to_string(&r.group_bound),
                    "variation_at_partition": rat_to_string(&r.variation_at_d),
                    "quasinorm": rat_to_string(&r.quasinorm),
                })).collect::<Vec<_>>(),
            });
            Ok((report, true))
        }
    }
}

fn cmd_selftest(
    suite: &str,
    samples: usize,
    seed: u64,
    parallel: bool,
    corrupt_nu: bool,
) -> Result<(Json, bool), Error> {
    let selected: Vec<Box<dyn semimeas::selftest::Suite>> = if suite == "all" {
        suites()
    } else if suite == "core" {
        suites()
            .into_iter()
            .filter(|s| s.name() != "stoch")
            .collect()
    } else {
        match suite_by_name(suite) {
            Some(s) => vec![s],
            None => {
                return Err(Error::Invalid(format!(
                    "unknown suite {suite:?}; available: all, core, {}",
                    suite_names().join(", ")
                )))
            }
        }
    };
    let run_one = |s: &dyn semimeas::selftest::Suite| {
        let mut ctx = SuiteCtx::new(seed, samples, corrupt_nu);
        eprintln!("running suite {} ...", s.name());
        s.run(&mut ctx)
    };
    // each suite owns an independent seeded generator, so concurrent runs
    // produce the same reports as sequential ones; merge order is fixed
    let raw: Vec<semimeas::selftest::SuiteReport> = if parallel {
        std::thread::scope(|scope| {
            let handles: Vec<_> = selected
                .iter()
                .map(|s| scope.spawn(|| run_one(s.as_ref())))
                .collect();
            handles.into_iter().map(|h| h.join().expect("suite thread")).collect()
        })
    } else {
        selected.iter().map(|s| run_one(s.as_ref())).collect()
    };
    let mut reports = Vec::new();
    let mut all_ok = true;
    for rep in raw {
        all_ok &= rep.passed;
        reports.push(serde_json::to_value(&rep).expect("serializable"));
    }
    let report = json!({
        "tool": "semimeas", "version": VERSION,
        "kind": "selftest",
        "seed": seed,
        "samples": samples,
        "corrupt_nu": corrupt_nu,
        "passed": all_ok,
        "suites": reports,
    });
    Ok((report, all_ok))
}
