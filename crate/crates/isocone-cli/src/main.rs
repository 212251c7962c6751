mod config;
mod emit;
mod verbs;

use clap::{value_parser, Arg, Command};
use config::RunConfig;
use emit::{Format, Manifest};
use std::path::PathBuf;
use std::process::ExitCode;
use verbs::{Failure, VERBS};

const ABOUT: &[(&str, &str)] = &[
    ("measure", "weighted volume, perimeter, deficit and asymmetry of one set"),
    ("couple", "envelope coupling of one set and its estimate ratios"),
    ("sweep", "stability ratio over a corpus of sets, or over cone openings"),
    ("sharpness", "asymmetry against deficit for a perturbed-ball family"),
    ("diag", "ball growth and shifted-weight separation along diagnostic directions"),
    ("check-amgm", "quantitative AM-GM bound on one input or on random samples"),
    ("check-1d", "one-dimensional stability on an interval set or a grid family"),
    ("check-fmp", "concave profile constants, Cheeger constants and trace bounds"),
    ("envelope", "the envelope and its gradient sampled on a grid"),
];

fn cli() -> Command {
    let mut cmd = Command::new("isocone")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Weighted isoperimetry in planar cones")
        .subcommand_required(true);
    for verb in VERBS {
        let about = ABOUT.iter().find(|(v, _)| *v == verb).map(|(_, a)| *a).unwrap_or_default();
        cmd = cmd.subcommand(
            Command::new(verb)
                .about(about)
                .arg(Arg::new("config").long("config").required(true).help("JSON run configuration"))
                .arg(Arg::new("out").long("out").help("output directory"))
                .arg(Arg::new("seed").long("seed").value_parser(value_parser!(u64)).help("overrides the config seed"))
                .arg(
                    Arg::new("format")
                        .long("format")
                        .value_parser(["csv", "json"])
                        .default_value("csv")
                        .help("table format"),
                ),
        );
    }
    cmd
}

fn main() -> ExitCode {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Ok(n) = std::env::var("ISOCONE_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: ISOCONE_THREADS must be a positive integer");
                return ExitCode::from(1);
            }
        }
    }
    let (verb, sub) = matches.subcommand().expect("subcommand required");
    match run(verb, sub) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

/// Runs one verb and writes its outputs; `Ok(false)` when a verification
/// failed.
fn run(verb: &str, sub: &clap::ArgMatches) -> Result<bool, String> {
    let path = sub.get_one::<String>("config").expect("required");
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {path}: {e}"))?;
    let cfg = RunConfig::parse(&text)?;
    if let Some(v) = &cfg.verb {
        if v != verb {
            return Err(format!("config is for '{v}', not '{verb}'"));
        }
    }
    let seed = sub.get_one::<u64>("seed").copied().unwrap_or(cfg.seed);
    let format = match sub.get_one::<String>("format").map(String::as_str) {
        Some("json") => Format::Json,
        _ => Format::Csv,
    };
    let dir = sub
        .get_one::<String>("out")
        .cloned()
        .or_else(|| cfg.output.clone())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out").join(verb));

    let (tables, verified, summary) = match verbs::run(verb, &cfg, seed) {
        Ok(o) => (o.tables, o.verified, o.summary),
        Err(Failure::Usage(m)) => return Err(m),
        Err(Failure::Verification(m)) => (vec![], false, serde_json::json!({ "failure": m })),
    };
    let mut manifest = Manifest {
        verb: verb.into(),
        config_hash: emit::sha256_hex(&cfg.canonical()),
        seed,
        version: env!("CARGO_PKG_VERSION").into(),
        resolutions: serde_json::to_value(&cfg.resolutions).expect("json"),
        files: vec![],
        verified,
        summary,
    };
    emit::write_all(&dir, &tables, format, &mut manifest)?;
    if !verified {
        eprintln!("verification failed; outputs in {}", dir.display());
    }
    Ok(verified)
}
