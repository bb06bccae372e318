//! Command-line front end: validate | integrate | hj | canonical |
//! example. Exit codes: 0 pass, 1 verification failure, 2 config/parse
//! error, 3 runtime singularity or inversion failure.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::canonical;
use crate::contact;
use crate::dynamics::{self, IntegrateOptions, Method, Rhs};
use crate::expr::{parse, EqualityPath, EqualityVerdict, ScalarExpr};
use crate::hamjac;
use crate::json::{self, CandidateDesc, SectionDesc};
use crate::sample;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

pub const SEED_ENV: &str = "LCS_MECH_SEED";
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Parser)]
#[command(
    name = "lcsmech",
    about = "Time-dependent Hamiltonian mechanics on locally conformal symplectic structures",
    version
)]
struct Cli {
    /// RNG seed for sampled checks (env LCS_MECH_SEED overrides the
    /// built-in default).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Tolerance for sampled checks.
    #[arg(long, global = true, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    /// Sample count for sampled checks.
    #[arg(long, global = true, default_value_t = 100)]
    samples: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate an lcs structure (built-in id, inline JSON, or file).
    Validate { structure: String },
    /// Integrate a Hamiltonian system or a built-in Lie system.
    Integrate {
        /// Structure reference; required with --hamiltonian.
        #[arg(long)]
        structure: Option<String>,
        /// Hamiltonian expression over the structure chart (t allowed).
        #[arg(long)]
        hamiltonian: Option<String>,
        /// Built-in Lie system id (g41-rep1, g41-rep2, g41-rep4).
        #[arg(long)]
        system: Option<String>,
        /// Comma-separated coefficient expressions a1(t),...,a4(t).
        #[arg(long)]
        coefficients: Option<String>,
        /// Comma-separated initial state.
        #[arg(long)]
        x0: String,
        #[arg(long, default_value_t = 0.0)]
        t0: f64,
        #[arg(long, default_value_t = 1.0)]
        t1: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        /// rk4 or euler.
        #[arg(long, default_value = "rk4")]
        method: String,
        /// csv or json.
        #[arg(long, default_value = "csv")]
        format: String,
        /// Record the per-sample defining-equation residual.
        #[arg(long)]
        diagnostics: bool,
        /// Trajectory output path (stdout when omitted).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Evaluate the Hamilton-Jacobi residual of a section.
    Hj {
        /// Cotangent structure reference ({"cotangent": ...}).
        #[arg(long)]
        structure: String,
        #[arg(long)]
        hamiltonian: String,
        /// Section descriptor {"components": [...]} (inline or file).
        #[arg(long)]
        section: String,
        /// Exit 1 when the section is not θ-closed.
        #[arg(long)]
        strict: bool,
    },
    /// Verify a canonical-transformation candidate.
    Canonical {
        /// Candidate descriptor (inline JSON or file).
        candidate: String,
        /// Optional Hamiltonian on the target for the theorem chain.
        #[arg(long)]
        hamiltonian: Option<String>,
    },
    /// Show the built-in example gallery (optionally one id).
    Example { id: Option<String> },
}

fn resolve_seed(cli_seed: Option<u64>) -> u64 {
    if let Some(s) = cli_seed {
        return s;
    }
    if let Ok(v) = std::env::var(SEED_ENV) {
        if let Ok(s) = v.parse() {
            return s;
        }
    }
    sample::DEFAULT_SEED
}

/// Inline JSON passes through; anything else that is not a built-in id
/// is read as a file.
fn resolve_text(reference: &str) -> Result<String, String> {
    let trimmed = reference.trim();
    if trimmed.starts_with('{') || contact::REPRESENTATION_IDS.contains(&trimmed) {
        return Ok(trimmed.to_string());
    }
    std::fs::read_to_string(trimmed).map_err(|e| format!("cannot read `{trimmed}`: {e}"))
}

fn verdict_json(v: &EqualityVerdict) -> Value {
    match &v.path {
        EqualityPath::Exact => json!({"equal": v.equal, "path": "exact"}),
        EqualityPath::Sampled {
            seed,
            samples,
            max_deviation,
        } => json!({
            "equal": v.equal,
            "path": "sampled",
            "seed": seed,
            "samples": samples,
            "max_deviation": max_deviation,
        }),
    }
}

fn print_report(report: &Value) {
    println!("{}", serde_json::to_string_pretty(report).expect("report"));
}

fn fail(code: i32, msg: &str) -> i32 {
    eprintln!("error: {msg}");
    code
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // clap handles --help/--version as "errors" with exit 0
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let seed = resolve_seed(cli.seed);
    let tolerance = cli.tolerance;
    let samples = cli.samples;
    match cli.command {
        Command::Validate { structure } => cmd_validate(&structure, seed, tolerance),
        Command::Integrate {
            structure,
            hamiltonian,
            system,
            coefficients,
            x0,
            t0,
            t1,
            dt,
            method,
            format,
            diagnostics,
            output,
        } => cmd_integrate(IntegrateConfig {
            structure,
            hamiltonian,
            system,
            coefficients,
            x0,
            t0,
            t1,
            dt,
            method,
            format,
            diagnostics,
            output,
            seed,
            tolerance,
        }),
        Command::Hj {
            structure,
            hamiltonian,
            section,
            strict,
        } => cmd_hj(&structure, &hamiltonian, &section, strict, seed, samples, tolerance),
        Command::Canonical {
            candidate,
            hamiltonian,
        } => cmd_canonical(&candidate, hamiltonian.as_deref(), seed, samples, tolerance),
        Command::Example { id } => cmd_example(id.as_deref(), seed, tolerance),
    }
}

fn cmd_validate(reference: &str, seed: u64, tolerance: f64) -> i32 {
    let text = match resolve_text(reference) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_CONFIG, &e),
    };
    match json::load_structure(&text, seed) {
        Ok(loaded) => {
            let r = loaded.structure.report();
            print_report(&json!({
                "command": "validate",
                "structure": loaded.label,
                "valid": true,
                "seed": seed,
                "tolerance": tolerance,
                "theta_closed": verdict_json(&r.theta_closed),
                "ldr_omega_zero": verdict_json(&r.ldr_omega_zero),
                "nondegeneracy": {
                    "seed": r.nondegeneracy.seed,
                    "samples": r.nondegeneracy.samples,
                    "min_abs_det": r.nondegeneracy.min_abs_det,
                },
            }));
            EXIT_OK
        }
        Err(json::DescriptorError::Lcs(e)) => {
            print_report(&json!({
                "command": "validate",
                "valid": false,
                "seed": seed,
                "tolerance": tolerance,
                "violation": e.to_string(),
            }));
            EXIT_FAILED
        }
        Err(e) => fail(EXIT_CONFIG, &e.to_string()),
    }
}

struct IntegrateConfig {
    structure: Option<String>,
    hamiltonian: Option<String>,
    system: Option<String>,
    coefficients: Option<String>,
    x0: String,
    t0: f64,
    t1: f64,
    dt: f64,
    method: String,
    format: String,
    diagnostics: bool,
    output: Option<PathBuf>,
    seed: u64,
    tolerance: f64,
}

fn parse_floats(src: &str) -> Result<Vec<f64>, String> {
    src.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad number `{s}`: {e}"))
        })
        .collect()
}

fn cmd_integrate(cfg: IntegrateConfig) -> i32 {
    let method: Method = match cfg.method.parse() {
        Ok(m) => m,
        Err(e) => return fail(EXIT_CONFIG, &e),
    };
    if cfg.dt <= 0.0 {
        return fail(EXIT_CONFIG, &format!("dt must be positive, got {}", cfg.dt));
    }
    if cfg.t1 <= cfg.t0 {
        return fail(
            EXIT_CONFIG,
            &format!("t1 ({}) must exceed t0 ({})", cfg.t1, cfg.t0),
        );
    }
    let x0 = match parse_floats(&cfg.x0) {
        Ok(v) => v,
        Err(e) => return fail(EXIT_CONFIG, &e),
    };
    let opts = IntegrateOptions {
        method,
        dt: cfg.dt,
        diagnostics: cfg.diagnostics,
    };

    // build the right-hand side: Hamiltonian system or Lie-system field
    enum Built {
        Sys(dynamics::HamiltonianSystem),
        Field(crate::exterior::VectorFieldExpr),
    }
    let built = match (&cfg.system, &cfg.structure, &cfg.hamiltonian) {
        (Some(id), _, _) => {
            let coeff_src = cfg.coefficients.as_deref().unwrap_or("1,1,1,1");
            let chart = crate::chart::Chart::standard(4);
            let mut coeffs = Vec::new();
            for s in coeff_src.split(',') {
                match parse(s.trim(), &chart, true) {
                    Ok(e) => coeffs.push(e),
                    Err(e) => return fail(EXIT_CONFIG, &format!("coefficient `{s}`: {e}")),
                }
            }
            let Ok(a): Result<[ScalarExpr; 4], _> = coeffs.try_into() else {
                return fail(EXIT_CONFIG, "need exactly four coefficients a1..a4");
            };
            match contact::lie_system_field(id, &a) {
                Ok(f) => Built::Field(f),
                Err(e) => return fail(EXIT_CONFIG, &e.to_string()),
            }
        }
        (None, Some(st), Some(h)) => {
            let text = match resolve_text(st) {
                Ok(t) => t,
                Err(e) => return fail(EXIT_CONFIG, &e),
            };
            let loaded = match json::load_structure(&text, cfg.seed) {
                Ok(s) => s,
                Err(e) => return fail(EXIT_CONFIG, &e.to_string()),
            };
            let h = match parse(h, loaded.structure.chart(), true) {
                Ok(h) => h,
                Err(e) => return fail(EXIT_CONFIG, &format!("hamiltonian: {e}")),
            };
            match dynamics::HamiltonianSystem::new(loaded.structure, h) {
                Ok(s) => Built::Sys(s),
                Err(e) => return fail(EXIT_CONFIG, &e.to_string()),
            }
        }
        _ => {
            return fail(
                EXIT_CONFIG,
                "need either --system or --structure with --hamiltonian",
            )
        }
    };
    let rhs = match &built {
        Built::Sys(s) => Rhs::System(s),
        Built::Field(f) => Rhs::Field(f),
    };

    let (traj, code, note) = match dynamics::integrate(&rhs, &x0, cfg.t0, cfg.t1, opts) {
        Ok(t) => (t, EXIT_OK, None),
        Err(dynamics::IntegrateError::Aborted { t, reason, partial }) => {
            (partial, EXIT_RUNTIME, Some(format!("aborted at t={t}: {reason}")))
        }
        Err(dynamics::IntegrateError::NonFiniteState { t, partial }) => {
            (partial, EXIT_RUNTIME, Some(format!("non-finite state at t={t}")))
        }
        Err(e) => return fail(EXIT_CONFIG, &e.to_string()),
    };

    let body = match cfg.format.as_str() {
        "csv" => traj.to_csv(),
        "json" => {
            let samples: Vec<Value> = traj
                .times
                .iter()
                .zip(&traj.states)
                .enumerate()
                .map(|(k, (t, x))| {
                    let mut o = json!({"t": t, "x": x});
                    if let Some(res) = &traj.residuals {
                        o["residual"] = json!(res[k]);
                    }
                    o
                })
                .collect();
            serde_json::to_string_pretty(&json!({
                "coords": traj.coords,
                "method": traj.method.id(),
                "dt": traj.dt,
                "samples": samples,
            }))
            .expect("trajectory json")
        }
        other => return fail(EXIT_CONFIG, &format!("unknown format `{other}`")),
    };
    if let Some(path) = &cfg.output {
        if let Err(e) = std::fs::write(path, &body) {
            return fail(EXIT_CONFIG, &format!("cannot write {}: {e}", path.display()));
        }
    } else {
        print!("{body}");
    }

    let mut summary = json!({
        "command": "integrate",
        "method": traj.method.id(),
        "dt": traj.dt,
        "seed": cfg.seed,
        "tolerance": cfg.tolerance,
        "steps": traj.times.len() - 1,
        "final_t": traj.times.last(),
        "final_state": traj.last_state(),
    });
    if let Some(res) = &traj.residuals {
        summary["max_residual"] = json!(res.iter().cloned().fold(0.0f64, f64::max));
    }
    if let Some(n) = note {
        summary["aborted"] = json!(n);
    }
    eprintln!("{}", serde_json::to_string_pretty(&summary).expect("summary"));
    code
}

fn cmd_hj(
    structure: &str,
    hamiltonian: &str,
    section: &str,
    strict: bool,
    seed: u64,
    samples: usize,
    tolerance: f64,
) -> i32 {
    let text = match resolve_text(structure) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_CONFIG, &e),
    };
    let loaded = match json::load_structure(&text, seed) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_CONFIG, &e.to_string()),
    };
    let Some(cot) = loaded.cotangent else {
        return fail(
            EXIT_CONFIG,
            "hj needs a cotangent structure ({\"cotangent\": ...})",
        );
    };
    let h = match parse(hamiltonian, cot.structure.chart(), true) {
        Ok(h) => h,
        Err(e) => return fail(EXIT_CONFIG, &format!("hamiltonian: {e}")),
    };
    let section_text = match resolve_text(section) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_CONFIG, &e),
    };
    let desc: SectionDesc = match serde_json::from_str(&section_text) {
        Ok(d) => d,
        Err(e) => return fail(EXIT_CONFIG, &format!("section: {e}")),
    };
    let gamma = match desc.to_section(&cot.base) {
        Ok(g) => g,
        Err(e) => return fail(EXIT_CONFIG, &e.to_string()),
    };

    let closed = hamjac::check_theta_closed(&gamma, &cot);
    let residual = hamjac::hj_residual(&cot, &h, &gamma);
    let rep = match hamjac::gamma_relatedness_seeded(&cot, &h, &gamma, samples, seed) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_RUNTIME, &e.to_string()),
    };
    let residual_strs: Vec<String> = residual.iter().map(|r| r.to_string()).collect();
    let solves = residual.iter().all(|r| r.is_zero());
    print_report(&json!({
        "command": "hj",
        "seed": seed,
        "samples": samples,
        "tolerance": tolerance,
        "theta_closed": closed.closed,
        "residual": residual_strs,
        "residual_is_zero": solves,
        "max_sampled_residual": rep.max_residual,
        "relatedness_max_mismatch": rep.max_mismatch,
        "equivalence_consistent": rep.equivalence_consistent,
    }));
    if strict && !closed.closed {
        return EXIT_FAILED;
    }
    EXIT_OK
}

fn cmd_canonical(
    candidate: &str,
    hamiltonian: Option<&str>,
    seed: u64,
    samples: usize,
    tolerance: f64,
) -> i32 {
    let text = match resolve_text(candidate) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_CONFIG, &e),
    };
    let desc: CandidateDesc = match serde_json::from_str(&text) {
        Ok(d) => d,
        Err(e) => return fail(EXIT_CONFIG, &format!("candidate: {e}")),
    };
    let loaded = match desc.to_candidate(seed) {
        Ok(l) => l,
        Err(e) => return fail(EXIT_CONFIG, &e.to_string()),
    };
    let vc = match canonical::check_canonical_seeded(loaded.candidate, samples, seed) {
        Ok(v) => v,
        Err(canonical::CanonicalError::NotInvertible(e)) => {
            return fail(EXIT_RUNTIME, &format!("inversion failed ({e:e})"))
        }
        Err(e) => return fail(EXIT_CONFIG, &e.to_string()),
    };
    let r = &vc.report;
    let mut report = json!({
        "command": "canonical",
        "seed": seed,
        "samples": samples,
        "tolerance": tolerance,
        "condition_ii_preserves_time": r.preserves_time,
        "condition_iii_theta": verdict_json(&r.theta_matches),
        "condition_iii_residual": r.theta_residual.to_string(),
        "condition_iv_omega": verdict_json(&r.omega_matches),
        "condition_iv_residual": r.omega_residual.to_string(),
        "max_roundtrip": r.max_roundtrip,
        "canonical": r.canonical,
    });
    let mut code = if r.canonical { EXIT_OK } else { EXIT_FAILED };
    if let Some(h_src) = hamiltonian {
        if r.canonical {
            let h = match parse(h_src, vc.candidate.ext2(), true) {
                Ok(h) => h,
                Err(e) => return fail(EXIT_CONFIG, &format!("hamiltonian: {e}")),
            };
            let pots = loaded
                .potentials
                .as_ref()
                .map(|(p1, p2)| (p1, p2));
            match canonical::verify_equivalences_seeded(&vc, &h, samples, pots, seed) {
                Ok(eq) => {
                    report["condition_1_omega_h"] = verdict_json(&eq.condition1);
                    report["condition_2_max_mismatch"] = json!(eq.condition2_max_mismatch);
                    report["condition_3"] = match &eq.condition3 {
                        Some(v) => verdict_json(v),
                        None => json!("skipped (no potentials supplied)"),
                    };
                    if !eq.condition1.equal || eq.condition2_max_mismatch > tolerance {
                        code = EXIT_FAILED;
                    }
                }
                Err(e) => return fail(EXIT_RUNTIME, &e.to_string()),
            }
        } else {
            report["equivalences"] = json!("skipped (candidate not canonical)");
        }
    }
    print_report(&report);
    code
}

fn cmd_example(id: Option<&str>, seed: u64, tolerance: f64) -> i32 {
    let ids: Vec<&str> = match id {
        Some(one) => {
            if !contact::REPRESENTATION_IDS.contains(&one) {
                return fail(EXIT_CONFIG, &format!("unknown example `{one}`"));
            }
            vec![one]
        }
        None => contact::REPRESENTATION_IDS.to_vec(),
    };
    let mut entries = Vec::new();
    for rid in ids {
        let rep = match contact::representation(rid) {
            Ok(r) => r,
            Err(e) => return fail(EXIT_RUNTIME, &e.to_string()),
        };
        let s = match rep.lcs() {
            Ok(s) => s,
            Err(e) => return fail(EXIT_FAILED, &e.to_string()),
        };
        let cp = match rep.contact_pair() {
            Ok(c) => c,
            Err(e) => return fail(EXIT_RUNTIME, &e.to_string()),
        };
        let pair_report = match contact::verify_contact_pair_seeded(&cp, 50, seed) {
            Ok(r) => r,
            Err(e) => return fail(EXIT_FAILED, &e.to_string()),
        };
        let duality_ok = rep
            .duality_residual()
            .map(|rows| rows.iter().flatten().all(|e| e.is_zero()))
            .unwrap_or(false);
        let bracket_mismatches: Vec<String> = contact::g41_bracket_mismatches(&rep)
            .into_iter()
            .map(|((i, j), d)| format!("[X{i},X{j}] = {d}"))
            .collect();
        entries.push(json!({
            "id": rid,
            "omega": rep.omega.to_string(),
            "theta": rep.theta.to_string(),
            "lcs_valid": true,
            "ldr_omega_zero": verdict_json(&s.report().ldr_omega_zero),
            "contact_pair_min_abs_top": pair_report.min_abs_top,
            "coframe_duality_exact": duality_ok,
            "reference_bracket_mismatches": bracket_mismatches,
        }));
    }
    print_report(&json!({
        "command": "example",
        "seed": seed,
        "tolerance": tolerance,
        "examples": entries,
    }));
    EXIT_OK
}
