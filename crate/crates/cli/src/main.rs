//! Single binary exposing the library through six subcommands.
//!
//! Exit codes: 0 success / verification passed, 1 usage or I/O error,
//! 2 verification or hard statistical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use ecdensity::arith::is_prime;
use ecdensity::count::BSGS_THRESHOLD;
use ecdensity::entangle::{
    enumerate_density, restricted_product_size, EntangleSpec, EnumerationStrategy,
};
use ecdensity::gl2::{
    centralizer_order_t, class_size_t, count_unipotent, det_character_sum, sign_character_sum,
    MAX_ENUM_ELL,
};
use ecdensity::survey::{emit_csv, emit_json, LocalVerdict, SurveyConfig};
use ecdensity::{conjectural_density, universal_constant, WeierstrassCurve};

#[derive(Parser)]
#[command(
    name = "ecdensity",
    version,
    about = "Density of primes p with gcd(#E(F_p), p-1) = 1 for an elliptic curve over Q"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn parse_curve(s: &str) -> Result<WeierstrassCurve, String> {
    WeierstrassCurve::parse(s)
}

#[derive(Subcommand)]
enum Command {
    /// Universal constant C = prod over primes of (1 - l/((l-1)^2(l+1))),
    /// truncated with a certified error bound
    Constant {
        /// Truncation prime bound for the Euler product
        #[arg(long, default_value_t = 1_000_000)]
        limit: u64,
    },
    /// Conjectural density for one curve: C when the fundamental
    /// discriminant D is 0 mod 4, C times the entanglement correction
    /// when D is 1 mod 4
    Conjecture {
        /// Integral model as "a1,a2,a3,a4,a6"
        #[arg(long, value_parser = parse_curve)]
        curve: WeierstrassCurve,
        /// Truncation prime bound for the Euler product
        #[arg(long, default_value_t = 1_000_000)]
        limit: u64,
    },
    /// Survey every good prime p <= limit: point counts, the gcd condition,
    /// anomalous primes, and per-l bad-event rates vs their predictions
    Survey {
        /// Integral model as "a1,a2,a3,a4,a6"
        #[arg(long, value_parser = parse_curve)]
        curve: WeierstrassCurve,
        /// Upper bound on surveyed primes
        #[arg(long)]
        limit: u64,
        /// Write one CSV row per surveyed prime to this path
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write the JSON summary to this path
        #[arg(long)]
        json: Option<PathBuf>,
        /// Seed for the deterministic point sampling
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads (0 = automatic); output bytes do not depend on it
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Exhaustively verify the GL2(F_l) counting identities behind the
    /// local densities: group order, unipotent count, centralizer and
    /// class of T = [[1,1],[0,1]], and the character sums
    VerifyGl2 {
        /// Prime l <= 13
        #[arg(long)]
        ell: u64,
    },
    /// Compare the closed-form density for a finite prime set against
    /// exhaustive enumeration over tuples of GL2(F_l) matrices
    VerifyEntangle {
        /// Fundamental discriminant D (0 or 1 mod 4)
        #[arg(long, allow_negative_numbers = true)]
        disc: i64,
        /// Comma-separated primes, e.g. 2,3,5
        #[arg(long, value_delimiter = ',')]
        set: Vec<u64>,
        /// Worker threads for the tuple enumeration (0 = automatic)
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Trace of Frobenius and #E(F_p) at a single prime
    Ap {
        /// Integral model as "a1,a2,a3,a4,a6"
        #[arg(long, value_parser = parse_curve)]
        curve: WeierstrassCurve,
        /// Prime of good reduction
        #[arg(long)]
        prime: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version print to stdout and succeed; everything else
            // is a usage error.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<ExitCode, String> {
    match command {
        Command::Constant { limit } => {
            check_truncation_limit(limit)?;
            let c = universal_constant(limit);
            print_json(&json!({
                "value": c.value,
                "error_bound": c.error_bound,
                "truncation_prime": c.truncation_prime,
            }));
            Ok(ExitCode::SUCCESS)
        }
        Command::Conjecture { curve, limit } => {
            check_truncation_limit(limit)?;
            let conj = conjectural_density(&curve, limit);
            if conj.non_serre {
                eprintln!(
                    "warning: the discriminant {} is a perfect square, so the adelic image \
                     cannot be maximal and the prediction does not apply",
                    conj.discriminant
                );
            }
            print_json(&json!({
                "value": conj.density.value,
                "error_bound": conj.density.error_bound,
                "truncation_prime": conj.density.truncation_prime,
                "discriminant": conj.discriminant,
                "fundamental_discriminant": conj.fundamental_discriminant,
                "correction_num": conj.correction.numerator() as i64,
                "correction_den": conj.correction.denominator() as i64,
                "serre_assumed": true,
            }));
            Ok(ExitCode::SUCCESS)
        }
        Command::Survey {
            curve,
            limit,
            csv,
            json,
            seed,
            threads,
        } => run_survey_command(curve, limit, csv, json, seed, threads),
        Command::VerifyGl2 { ell } => run_verify_gl2(ell),
        Command::VerifyEntangle { disc, set, threads } => run_verify_entangle(disc, set, threads),
        Command::Ap { curve, prime } => {
            if !is_prime(prime) {
                return Err(format!("{prime} is not prime"));
            }
            if prime > 1 << 32 {
                return Err("point counting supports primes up to 2^32".into());
            }
            let reduced = curve.reduce_mod_p(prime).map_err(|e| e.to_string())?;
            let tr = if prime > BSGS_THRESHOLD {
                ecdensity::count_points_bsgs(&reduced, 0)
            } else {
                ecdensity::count_points_naive(&reduced)
            };
            println!(
                "p={} ap={} cardinality={} method={}",
                tr.p, tr.ap, tr.cardinality, tr.method
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn check_truncation_limit(limit: u64) -> Result<(), String> {
    if limit < 100 {
        return Err("--limit must be at least 100".into());
    }
    if limit > 1 << 32 {
        return Err("--limit must be at most 2^32".into());
    }
    Ok(())
}

fn print_json(value: &serde_json::Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("valid json")
    );
}

fn run_verify_gl2(ell: u64) -> Result<ExitCode, String> {
    if !is_prime(ell) || ell > MAX_ENUM_ELL {
        return Err(format!("--ell must be a prime <= {MAX_ENUM_ELL}"));
    }
    let l = ell as i128;
    println!("GL2(F_{ell}) identities (closed form vs exhaustive count)");
    let mut all_ok = true;
    let mut row = |name: &str, closed: i128, brute: Result<u64, String>| {
        let (brute_text, ok) = match brute {
            Ok(v) => (v.to_string(), v as i128 == closed),
            Err(e) => (e, false),
        };
        all_ok &= ok;
        println!(
            "  {name:<28} {closed:>12} {brute_text:>12}   {}",
            if ok { "PASS" } else { "FAIL" }
        );
    };
    row(
        "group order",
        (l * l - 1) * (l * l - l),
        Ok(ecdensity::gl2::enumerate_gl2(ell).len() as u64),
    );
    row(
        "unipotent count",
        l * l,
        count_unipotent(ell).map_err(|e| e.to_string()),
    );
    row(
        "centralizer of T",
        l * l - l,
        centralizer_order_t(ell).map_err(|e| e.to_string()),
    );
    row(
        "class of T",
        l * l - 1,
        class_size_t(ell).map_err(|e| e.to_string()),
    );
    if ell == 2 {
        let s = sign_character_sum();
        let ok = s == 2;
        all_ok &= ok;
        println!(
            "  {:<28} {:>12} {s:>12}   {}",
            "sgn sum (non-unipotent)",
            2,
            if ok { "PASS" } else { "FAIL" }
        );
    } else {
        let s = det_character_sum(ell);
        let ok = s as i128 == -(l * l);
        all_ok &= ok;
        println!(
            "  {:<28} {:>12} {s:>12}   {}",
            "chi det sum (non-unipotent)",
            -(l * l),
            if ok { "PASS" } else { "FAIL" }
        );
    }
    Ok(if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn run_verify_entangle(disc: i64, set: Vec<u64>, threads: usize) -> Result<ExitCode, String> {
    let spec = EntangleSpec::new(set, disc).map_err(|e| e.to_string())?;
    let closed = spec.density().map_err(|e| e.to_string())?;
    println!(
        "S = {{{}}}, D = {disc}",
        spec.primes()
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join(", ")
    );
    println!("closed form: {closed}");

    with_pool(threads, || {
        let mut all_ok = true;
        let mut any_oracle = false;
        match enumerate_density(&spec, EnumerationStrategy::Cartesian) {
            Ok(v) => {
                any_oracle = true;
                let ok = v == closed;
                all_ok &= ok;
                println!(
                    "cartesian enumeration: {v}  {closed} = {v} {}",
                    if ok { "PASS" } else { "FAIL" }
                );
            }
            Err(e) => println!("cartesian enumeration: skipped ({e})"),
        }
        match enumerate_density(&spec, EnumerationStrategy::PerPrimeAggregation) {
            Ok(v) => {
                any_oracle = true;
                let ok = v == closed;
                all_ok &= ok;
                println!(
                    "per-prime aggregation: {v}  {closed} = {v} {}",
                    if ok { "PASS" } else { "FAIL" }
                );
            }
            Err(e) => println!("per-prime aggregation: skipped ({e})"),
        }
        if spec.covers_entanglement() {
            match restricted_product_size(&spec) {
                Ok((member, total)) => {
                    let ok = member * 2 == total;
                    all_ok &= ok;
                    println!(
                        "index-2 subgroup: {member} of {total} tuples {}",
                        if ok { "PASS" } else { "FAIL" }
                    );
                }
                Err(e) => println!("index-2 subgroup: skipped ({e})"),
            }
        }
        if !any_oracle {
            return Err("no oracle strategy could run for this spec".into());
        }
        Ok(if all_ok {
            ExitCode::SUCCESS
        } else {
            ExitCode::from(2)
        })
    })?
}

/// Run inside a dedicated rayon pool when a thread count is pinned.
fn with_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> Result<R, String> {
    if threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| e.to_string())?;
        Ok(pool.install(f))
    } else {
        Ok(f())
    }
}

fn run_survey_command(
    curve: WeierstrassCurve,
    limit: u64,
    csv: Option<PathBuf>,
    json_path: Option<PathBuf>,
    seed: u64,
    threads: usize,
) -> Result<ExitCode, String> {
    if limit < 100 {
        return Err("--limit must be at least 100".into());
    }
    if limit > 1 << 32 {
        return Err("--limit must be at most 2^32".into());
    }
    let config = SurveyConfig {
        seed,
        threads,
        ..SurveyConfig::default()
    };
    let report = ecdensity::run_survey(&curve, limit, &config);

    println!(
        "curve {} surveyed to {}: {} primes, {} good, {} skipped",
        curve.coefficients().map(|c| c.to_string()).join(","),
        report.x,
        report.total_primes,
        report.good_primes,
        report.skipped.len()
    );
    if report.conjecture.non_serre {
        eprintln!(
            "warning: square discriminant {}; the conjectural value does not apply",
            report.conjecture.discriminant
        );
    }
    println!(
        "gcd(p-1, #E) = 1: {} of {}  (empirical density {:.6})",
        report.gcd_ok_count,
        report.good_primes,
        report.empirical_density()
    );
    println!(
        "conjectural density: {:.8} (correction {}, D = {})",
        report.conjecture.density.value,
        report.conjecture.correction,
        report.conjecture.fundamental_discriminant
    );
    println!(
        "R_E members: {}, anomalous primes: {}",
        report.re_member_count, report.anomalous_count
    );
    println!("local bad events (p = 1 mod l and l | #E):");
    println!(
        "  {:>4} {:>10} {:>12} {:>12} {:>8}  verdict",
        "l", "observed", "rate", "predicted", "z"
    );
    let mut hard_fail = false;
    for row in &report.local_events {
        let verdict = match row.verdict() {
            LocalVerdict::Ok => "ok",
            LocalVerdict::LowStatistics => "low-stat",
            LocalVerdict::Warn => "WARN (>3 sigma)",
            LocalVerdict::Fail => {
                hard_fail = true;
                "FAIL (>4 sigma)"
            }
        };
        println!(
            "  {:>4} {:>10} {:>12.6} {:>12.6} {:>8.2}  {verdict}",
            row.ell,
            row.observed,
            row.observed_rate(),
            row.predicted.to_f64(),
            row.z_score()
        );
    }

    if let Some(path) = csv {
        emit_csv(&report, &path).map_err(|e| e.to_string())?;
        println!("wrote {}", path.display());
    }
    if let Some(path) = json_path {
        emit_json(&report, &path).map_err(|e| e.to_string())?;
        println!("wrote {}", path.display());
    }
    Ok(if hard_fail {
        println!("hard statistical failure: some local rate is over 4 sigma away");
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}
