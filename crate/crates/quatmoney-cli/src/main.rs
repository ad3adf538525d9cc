//! Command-line driver: orders, class sets, Brandt matrices, separation
//! tables, and the seeded protocol simulations.
//!
//! Exit codes: 0 success, 1 usage error, 2 invariant violation,
//! 3 verification reject.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use quatmoney::cache;
use quatmoney::encoding::Encoder;
use quatmoney::error::Error;
use quatmoney::orders::{build_maximal_order, reduced_discriminant};
use quatmoney::protocol::signature::KeyedHashSignature;
use quatmoney::protocol::{
    birthday_attack, lightning_storm, lightning_verify, mint, verify, Bill, MintOutcome,
    MoneyContext, ProtocolConfig, SimMode,
};
use quatmoney::rational::rat_to_string;
use quatmoney::spectral::{default_primes, separation, serre_diagnostic, Tolerances};

#[derive(Parser)]
#[command(
    name = "quatmoney",
    about = "Quantum money on definite quaternion algebras: exact ideal-class \
             encodings, Brandt spectra, and protocol simulation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Cache directory (default: $QUATMONEY_CACHE_DIR if set)
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,

    /// Disable the on-disk cache
    #[arg(long, global = true)]
    no_cache: bool,

    /// RNG seed for the protocol commands
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Tolerance overrides, comma separated (residual=..,symmetry=..,table=..)
    #[arg(long, global = true)]
    tolerance: Option<String>,

    /// Worker threads for multi-level commands
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct PrimeSelection {
    /// Explicit prime list, e.g. 2,3,5,7; "auto" = all primes below log2(N)
    #[arg(long, default_value = "auto")]
    primes: String,
}

impl PrimeSelection {
    fn resolve(&self, n: u64) -> Result<Vec<u64>, Error> {
        if self.primes == "auto" {
            default_primes(n)
        } else {
            let primes: Result<Vec<u64>, _> =
                self.primes.split(',').map(|s| s.trim().parse()).collect();
            let primes =
                primes.map_err(|_| Error::usage(format!("bad prime list {:?}", self.primes)))?;
            if primes.is_empty() || primes.iter().any(|&p| !quatmoney::orders::is_prime(p)) {
                return Err(Error::usage("prime list must contain primes"));
            }
            if primes.contains(&n) {
                return Err(Error::usage("prime list must not contain the level"));
            }
            Ok(primes)
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Construct the maximal order of level N and print its basis,
    /// discriminant, and norm-N extremality witness
    Order {
        #[arg(long = "N")]
        n: u64,
    },
    /// Enumerate the ideal class set (canonical triples, weights, mass)
    Classset {
        #[arg(long = "N")]
        n: u64,
        /// Write the class-set JSON here ("-" for stdout)
        #[arg(long)]
        out: Option<String>,
    },
    /// Compute the Brandt matrix T'(p) as sparse JSON
    Brandt {
        #[arg(long = "N")]
        n: u64,
        #[arg(long)]
        p: u64,
        #[arg(long)]
        out: Option<String>,
    },
    /// Joint spectrum separation: minimum pairwise distance of the unitary
    /// eigenvalue tuples
    Separation {
        #[arg(long = "N")]
        n: u64,
        #[command(flatten)]
        primes: PrimeSelection,
        /// Append "N,epsilon,primes" to this CSV file
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Output format for the report
        #[arg(long, value_parser = ["json", "csv"], default_value = "csv")]
        format: String,
    },
    /// Separation table over several levels, CSV columns N,epsilon
    Table {
        /// Comma-separated levels, e.g. 547,557,563
        #[arg(long = "N-list")]
        n_list: String,
        #[command(flatten)]
        primes: PrimeSelection,
        #[arg(long)]
        out: Option<String>,
        /// Output format for the table
        #[arg(long, value_parser = ["json", "csv"], default_value = "csv")]
        format: String,
    },
    /// Eigenvalue distribution diagnostic for one prime
    Serre {
        #[arg(long = "N")]
        n: u64,
        #[arg(long)]
        p: u64,
        #[command(flatten)]
        primes: PrimeSelection,
    },
    /// Mint a bill (JSON on stdout or --out)
    Mint {
        #[arg(long = "N")]
        n: u64,
        #[command(flatten)]
        primes: PrimeSelection,
        #[arg(long)]
        out: Option<String>,
        /// Carry the dense state vector instead of the eigenstate index
        #[arg(long)]
        state_vector: bool,
        /// Use a smaller separation parameter than the measured one
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Verify a bill read from --bill or stdin; exit 3 on reject
    Verify {
        #[arg(long = "N")]
        n: u64,
        #[command(flatten)]
        primes: PrimeSelection,
        /// Bill JSON file (defaults to stdin)
        #[arg(long)]
        bill: Option<PathBuf>,
        /// Use a smaller separation parameter than the measured one
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Quantum lightning demo: storm a bolt and verify it twice
    Lightning {
        #[arg(long = "N")]
        n: u64,
        #[command(flatten)]
        primes: PrimeSelection,
        /// Run the storm + double verification demo
        #[arg(long)]
        demo: bool,
        /// Override the grid margin delta
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Birthday attack: mint bills until serials collide
    Attack {
        #[arg(long = "N")]
        n: u64,
        #[command(flatten)]
        primes: PrimeSelection,
        /// Bills per run: an integer, or "sqrt*K" for K*sqrt(h)
        #[arg(long, default_value = "sqrt*10")]
        budget: String,
        #[arg(long, default_value_t = 200)]
        runs: usize,
        /// Write "run,first_collision_index" CSV here
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn parse_tolerances(spec: Option<&str>) -> Result<Tolerances, Error> {
    let mut tol = Tolerances::default();
    let Some(spec) = spec else { return Ok(tol) };
    for part in spec.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::usage(format!("bad tolerance override {part:?}")))?;
        let value: f64 = value
            .parse()
            .map_err(|_| Error::usage(format!("bad tolerance value {value:?}")))?;
        match key.trim() {
            "residual" => tol.residual = value,
            "symmetry" => tol.symmetry = value,
            "table" => tol.table = value,
            "orthonormal" => tol.orthonormal = value,
            "unit_norm" => tol.unit_norm = value,
            other => return Err(Error::usage(format!("unknown tolerance {other:?}"))),
        }
    }
    Ok(tol)
}

fn write_out(out: Option<&str>, content: &str) -> Result<(), Error> {
    match out {
        None | Some("-") => {
            println!("{content}");
            Ok(())
        }
        Some(path) => std::fs::write(path, content).map_err(|e| Error::Io(e.to_string())),
    }
}

fn context(
    cache_dir: Option<&std::path::Path>,
    n: u64,
    primes: &[u64],
    tol: &Tolerances,
    epsilon: Option<f64>,
) -> Result<MoneyContext, Error> {
    let pipe = cache::level_pipeline(cache_dir, n, primes, tol)?;
    let mut ctx = MoneyContext::from_parts(pipe.class_set, pipe.spectrum, *tol)?;
    if let Some(eps) = epsilon {
        if eps <= 0.0 || eps > ctx.epsilon {
            return Err(Error::usage(format!(
                "epsilon must lie in (0, {}], the measured separation",
                ctx.epsilon
            )));
        }
        ctx.epsilon = eps;
    }
    Ok(ctx)
}

fn run(cli: Cli) -> Result<(), Error> {
    let tol = parse_tolerances(cli.tolerance.as_deref())?;
    let cache_dir: Option<PathBuf> = if cli.no_cache {
        None
    } else {
        cli.cache_dir
            .clone()
            .or_else(|| std::env::var_os("QUATMONEY_CACHE_DIR").map(PathBuf::from))
    };
    let cache_ref = cache_dir.as_deref();

    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .ok();
    }

    match cli.command {
        Command::Order { n } => {
            let order = build_maximal_order(n)?;
            println!("N = {n}, algebra {}", order.params());
            for (i, b) in order.basis().iter().enumerate() {
                println!("  w{} = {}", i + 1, b);
            }
            let disc = reduced_discriminant(order.lattice())?;
            println!("reduced discriminant = {disc}");
            let witness = order
                .lattice()
                .vectors_with_norm_at_most(&quatmoney::rational::rat_int(n as i64))
                .into_iter()
                .find(|v| v.nrd() == quatmoney::rational::rat_int(n as i64))
                .ok_or_else(|| Error::invariant("no extremality witness"))?;
            println!("norm-{n} witness = {witness}");
            println!("unit pairs = {}", order.unit_pairs());
        }
        Command::Classset { n, out } => {
            let enc = Encoder::new(build_maximal_order(n)?);
            let set = cache::class_set(cache_ref, &enc)?;
            let json = serde_json::to_string(&set).map_err(|e| Error::Io(e.to_string()))?;
            if let Some(out) = out.as_deref() {
                write_out(Some(out), &json)?;
            }
            println!("N = {n}: h = {} classes", set.len());
            for c in &set.classes {
                println!("  (d,a,b) = ({},{},{})  w = {}", c.d, c.a, c.b, c.w);
            }
            println!("mass = {}", rat_to_string(&set.mass()));
        }
        Command::Brandt { n, p, out } => {
            let enc = Encoder::new(build_maximal_order(n)?);
            let set = cache::class_set(cache_ref, &enc)?;
            let b = cache::brandt(cache_ref, &enc, &set, p)?;
            let json = serde_json::to_string(&b).map_err(|e| Error::Io(e.to_string()))?;
            write_out(out.as_deref(), &json)?;
            eprintln!("T'({p}) at level {n}: {} x {}, column sums {}", b.h, b.h, p + 1);
        }
        Command::Separation {
            n,
            primes,
            csv,
            format,
        } => {
            let primes = primes.resolve(n)?;
            let pipe = cache::level_pipeline(cache_ref, n, &primes, &tol)?;
            let report = separation(&pipe.spectrum);
            if format == "json" {
                println!(
                    "{}",
                    serde_json::to_string(&report).map_err(|e| Error::Io(e.to_string()))?
                );
            } else {
                println!(
                    "N = {n}, primes = {:?}, epsilon = {:.16}",
                    report.primes, report.epsilon
                );
                // the empirical rule of thumb, checked rather than assumed
                let suggested = 1.0 / (4.0 * (n as f64).log2());
                let verdict = if report.epsilon >= suggested {
                    "holds"
                } else {
                    "fails"
                };
                println!(
                    "suggested threshold 1/(4 log2 N) = {suggested:.6}: {verdict} at this level"
                );
            }
            if let Some(path) = csv {
                let mut f = std::fs::OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(&path)
                    .map_err(|e| Error::Io(e.to_string()))?;
                let primes_str: Vec<String> =
                    report.primes.iter().map(|p| p.to_string()).collect();
                writeln!(
                    f,
                    "{n},{:.16},{}",
                    report.epsilon,
                    primes_str.join(" ")
                )
                .map_err(|e| Error::Io(e.to_string()))?;
            }
        }
        Command::Table {
            n_list,
            primes,
            out,
            format,
        } => {
            let levels: Result<Vec<u64>, _> =
                n_list.split(',').map(|s| s.trim().parse::<u64>()).collect();
            let levels = levels.map_err(|_| Error::usage("bad level list"))?;
            let rows: Result<Vec<(u64, f64)>, Error> = levels
                .par_iter()
                .map(|&n| {
                    let ps = primes.resolve(n)?;
                    let pipe = cache::level_pipeline(cache_ref, n, &ps, &tol)?;
                    Ok((n, separation(&pipe.spectrum).epsilon))
                })
                .collect();
            let mut rows = rows?;
            rows.sort_by_key(|r| r.0);
            if format == "json" {
                let arr: Vec<serde_json::Value> = rows
                    .iter()
                    .map(|(n, eps)| serde_json::json!({"N": n, "epsilon": eps}))
                    .collect();
                let text = serde_json::to_string(&arr).map_err(|e| Error::Io(e.to_string()))?;
                write_out(out.as_deref(), &text)?;
            } else {
                let mut csv = String::from("N,epsilon\n");
                for (n, eps) in rows {
                    csv.push_str(&format!("{n},{eps:.16}\n"));
                }
                write_out(out.as_deref(), csv.trim_end())?;
            }
        }
        Command::Serre { n, p, primes } => {
            let ps = primes.resolve(n)?;
            if !ps.contains(&p) {
                return Err(Error::usage("p must be among the spectrum primes"));
            }
            let pipe = cache::level_pipeline(cache_ref, n, &ps, &tol)?;
            let rep = serre_diagnostic(&pipe.spectrum, p)?;
            println!(
                "N = {n}, p = {p}: {} eigenvalues, sup-distance to the limit CDF = {:.4}",
                rep.samples.len(),
                rep.sup_distance
            );
            for (lo, hi, count) in rep.histogram {
                println!("  [{lo:+.2},{hi:+.2}) {}", "#".repeat(count.min(70)));
            }
        }
        Command::Mint {
            n,
            primes,
            out,
            state_vector,
            epsilon,
        } => {
            let ps = primes.resolve(n)?;
            let ctx = context(cache_ref, n, &ps, &tol, epsilon)?;
            let scheme = KeyedHashSignature::from_seed(n);
            let cfg = ProtocolConfig {
                mode: if state_vector {
                    SimMode::StateVector
                } else {
                    SimMode::Lossless
                },
                ..Default::default()
            };
            let mut rng = ChaCha20Rng::seed_from_u64(cli.seed);
            loop {
                match mint(&ctx, &cfg, &scheme, &mut rng)? {
                    MintOutcome::Bottom => {
                        eprintln!("distinguished outcome rejected; reminting");
                    }
                    MintOutcome::Bill(bill) => {
                        let json =
                            serde_json::to_string(&bill).map_err(|e| Error::Io(e.to_string()))?;
                        write_out(out.as_deref(), &json)?;
                        break;
                    }
                }
            }
        }
        Command::Verify {
            n,
            primes,
            bill,
            epsilon,
        } => {
            let ps = primes.resolve(n)?;
            let ctx = context(cache_ref, n, &ps, &tol, epsilon)?;
            let scheme = KeyedHashSignature::from_seed(n);
            let cfg = ProtocolConfig::default();
            let text = match bill {
                Some(path) => {
                    std::fs::read_to_string(path).map_err(|e| Error::Io(e.to_string()))?
                }
                None => {
                    let mut buf = String::new();
                    std::io::stdin()
                        .read_to_string(&mut buf)
                        .map_err(|e| Error::Io(e.to_string()))?;
                    buf
                }
            };
            let bill: Bill =
                serde_json::from_str(text.trim()).map_err(|e| Error::usage(e.to_string()))?;
            let mut rng = ChaCha20Rng::seed_from_u64(cli.seed.wrapping_add(1));
            let outcome = verify(&ctx, &cfg, &scheme, &bill, &mut rng)?;
            if outcome.accepted {
                println!("accept");
            } else {
                return Err(Error::Rejected(
                    outcome.reason.unwrap_or_else(|| "rejected".into()),
                ));
            }
        }
        Command::Lightning {
            n,
            primes,
            demo: _,
            delta,
        } => {
            let ps = primes.resolve(n)?;
            let ctx = context(cache_ref, n, &ps, &tol, None)?;
            let mut rng = ChaCha20Rng::seed_from_u64(cli.seed);
            let (mut bolt, attempts) = lightning_storm(&ctx, &mut rng)?;
            if let Some(d) = delta {
                if d <= 0.0 || d >= bolt.grid_epsilon / (10.0 * ctx.t() as f64) {
                    return Err(Error::usage(
                        "delta must be positive and below epsilon/(10 t)",
                    ));
                }
                bolt.delta = d;
            }
            println!(
                "bolt after {attempts} attempts: grid epsilon = {:.6}, delta = {:.6}",
                bolt.grid_epsilon, bolt.delta
            );
            let s1 = lightning_verify(&ctx, &bolt.candidate(), &mut rng)
                .ok_or_else(|| Error::Rejected("storm-produced bolt rejected".into()))?;
            let s2 = lightning_verify(&ctx, &bolt.candidate(), &mut rng)
                .ok_or_else(|| Error::Rejected("storm-produced bolt rejected".into()))?;
            println!("serial 1 = {s1:?}");
            println!("serial 2 = {s2:?}");
            if s1 != s2 {
                return Err(Error::invariant("serials differ between verifications"));
            }
            println!("serials identical");
        }
        Command::Attack {
            n,
            primes,
            budget,
            runs,
            csv,
        } => {
            let ps = primes.resolve(n)?;
            let ctx = context(cache_ref, n, &ps, &tol, None)?;
            let scheme = KeyedHashSignature::from_seed(n);
            let cfg = ProtocolConfig::default();
            let budget = parse_budget(&budget, ctx.h())?;
            let mut rng = ChaCha20Rng::seed_from_u64(cli.seed);
            let report = birthday_attack(&ctx, &cfg, &scheme, budget, runs, &mut rng)?;
            println!(
                "budget {budget}, runs {runs}: collision fraction {:.3}, mean first index {:?}",
                report.collision_fraction(),
                report.mean_first_collision()
            );
            if let Some(path) = csv {
                let mut text = String::from("run,first_collision_index\n");
                for (i, c) in report.first_collision.iter().enumerate() {
                    match c {
                        Some(idx) => text.push_str(&format!("{},{}\n", i + 1, idx)),
                        None => text.push_str(&format!("{},\n", i + 1)),
                    }
                }
                std::fs::write(path, text).map_err(|e| Error::Io(e.to_string()))?;
            }
        }
    }
    Ok(())
}

fn parse_budget(spec: &str, h: usize) -> Result<usize, Error> {
    if let Some(mult) = spec.strip_prefix("sqrt*") {
        let k: f64 = mult
            .parse()
            .map_err(|_| Error::usage(format!("bad budget {spec:?}")))?;
        Ok((k * (h as f64).sqrt()).ceil() as usize)
    } else {
        spec.parse()
            .map_err(|_| Error::usage(format!("bad budget {spec:?}")))
    }
}

fn main() -> ExitCode {
    // die quietly when a downstream pipe closes early
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are not errors
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Usage(_) => ExitCode::from(1),
                Error::Rejected(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
