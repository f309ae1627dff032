//! `ktuple`: reproducible experiments on prime k-tuples.

// `!(a > b)` is used on purpose so NaN inputs are rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod output;

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ktuple_core::averages::{self, AverageOptions};
use ktuple_core::hardy_littlewood::{hl_error, hl_error_lambda, hl_sweep, HlReport};
use ktuple_core::moments::{moment_report, tail_report};
use ktuple_core::primes::{sieve_range_with, window_counts_with, PrimalityTable, SieveConfig};
use ktuple_core::selberg::{gamma_cross_check, omega2_deviation, sieve_report, Level};
use ktuple_core::singular::{is_admissible, SingularSeries, DEFAULT_PRIME_LIMIT};
use ktuple_core::{Error, Tuple};

use output::{Emitter, Field, Format, Record};

#[derive(Parser, Debug)]
#[command(name = "ktuple", version, about = "Prime k-tuple statistics and sieve bounds")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Worker threads; results are reproducible for a fixed count.
    #[arg(long, default_value_t = 1, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    threads: u32,
    /// Primality cache written by `sieve-cache`, used instead of sieving.
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Singular series of a tuple.
    Singular {
        #[arg(long)]
        tuple: Tuple,
        /// Required absolute error.
        #[arg(long, default_value_t = 1e-10)]
        error: f64,
        /// Primes summed explicitly in the tail.
        #[arg(long, default_value_t = DEFAULT_PRIME_LIMIT)]
        prime_limit: u64,
    },
    /// Sum of the singular series over tuples in [1, h].
    Tkh {
        #[arg(long)]
        k: u64,
        #[arg(long)]
        h: u64,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Per-tuple error target.
        #[arg(long, default_value_t = averages::DEFAULT_TUPLE_ERROR)]
        error: f64,
        /// Largest number of subsets the exact mode enumerates.
        #[arg(long, default_value_t = averages::DEFAULT_ENUMERATION_BUDGET)]
        budget: u128,
    },
    /// Moments of the prime counts in windows (n, n + h].
    Moments {
        #[arg(long)]
        x: u64,
        #[command(flatten)]
        window: Window,
        #[arg(long)]
        r_max: u32,
    },
    /// Tail counts of the window distribution with Poisson comparisons.
    Tail {
        #[arg(long)]
        x: u64,
        #[command(flatten)]
        window: Window,
        #[arg(long)]
        k_max: u64,
    },
    /// Tuple counts against the Hardy–Littlewood prediction.
    Hl {
        #[arg(long)]
        tuple: Tuple,
        #[arg(long, required_unless_present = "sweep", conflicts_with = "sweep")]
        x: Option<u64>,
        /// start:stop:step
        #[arg(long)]
        sweep: Option<Sweep>,
        /// Also compute the von Mangoldt form of the error.
        #[arg(long)]
        lambda_form: bool,
    },
    /// Selberg sieve bound against the true tuple count.
    Selberg {
        #[arg(long)]
        tuple: Tuple,
        #[arg(long)]
        x: u64,
        #[command(flatten)]
        level: LevelArg,
        /// Emit G(z)W(z) and density diagnostics at z = 10^2 .. 10^5.
        #[arg(long)]
        cross_check: bool,
    },
    /// Sieve [0, limit] and write a primality cache.
    SieveCache {
        #[arg(long)]
        limit: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Pair,
    Mc,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct Window {
    /// Window length.
    #[arg(long)]
    h: Option<f64>,
    /// Window length in units of log x.
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct LevelArg {
    #[arg(long)]
    z: Option<u64>,
    /// Sieve level z = x^(1/(2+epsilon)).
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Sweep {
    start: u64,
    stop: u64,
    step: u64,
}

impl std::str::FromStr for Sweep {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts[..] else {
            return Err(format!("expected start:stop:step, got {s:?}"));
        };
        let num = |t: &str| t.trim().parse::<u64>().map_err(|e| format!("{t:?}: {e}"));
        let sw = Sweep {
            start: num(a)?,
            stop: num(b)?,
            step: num(c)?,
        };
        if sw.step == 0 || sw.stop < sw.start {
            return Err("sweep needs step >= 1 and stop >= start".into());
        }
        Ok(sw)
    }
}

type CliResult = Result<(), Failure>;

#[derive(Debug)]
enum Failure {
    Core(Error),
    Io(io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

fn exit_code(f: &Failure) -> u8 {
    match f {
        Failure::Core(
            Error::Domain(_)
            | Error::Precondition(_)
            | Error::TupleParse { .. }
            | Error::InadmissibleModulus { .. }
            | Error::InvalidRange { .. },
        ) => 2,
        Failure::Core(_) | Failure::Io(_) => 3,
    }
}

struct Ctx {
    format: Format,
    threads: usize,
    cache: Option<PathBuf>,
}

impl Ctx {
    fn config(&self, command: &str, mut params: Record) -> Record {
        let mut r: Record = vec![
            ("command", command.into()),
            ("version", env!("CARGO_PKG_VERSION").into()),
            ("format", format!("{:?}", self.format).to_lowercase().into()),
            ("threads", (self.threads as u64).into()),
            (
                "cache",
                self.cache.as_ref().map(|p| p.display().to_string()).into(),
            ),
        ];
        r.append(&mut params);
        r
    }

    fn emitter(&self, command: &str, params: Record) -> io::Result<Emitter<BufWriter<io::StdoutLock<'static>>>> {
        let out = BufWriter::new(io::stdout().lock());
        Emitter::new(out, self.format, &self.config(command, params))
    }

    /// Primality data on `[0, limit]`, from the cache when one is given.
    fn table(&self, limit: u64) -> Result<PrimalityTable, Failure> {
        let limit = limit.max(2);
        if let Some(path) = &self.cache {
            let t = PrimalityTable::read_cache(BufReader::new(File::open(path)?))?;
            t.ensure_covers(1, limit)?;
            return Ok(t);
        }
        let cfg = SieveConfig {
            threads: self.threads,
            ..Default::default()
        };
        Ok(sieve_range_with(0, limit, &cfg)?)
    }
}

fn window_length(x: u64, w: &Window) -> Result<f64, Failure> {
    if x < 2 {
        return Err(Error::Domain(format!("x must be at least 2, got {x}")).into());
    }
    let h = match (w.h, w.lambda) {
        (Some(h), _) => h,
        (None, Some(l)) => l * (x as f64).ln(),
        (None, None) => unreachable!("clap enforces one of --h/--lambda"),
    };
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Domain(format!("window length must be positive, got {h}")).into());
    }
    Ok(h)
}

fn window_params(x: u64, h: f64, w: &Window) -> Record {
    vec![
        ("x", x.into()),
        ("h", h.into()),
        ("lambda", (h / (x as f64).ln()).into()),
        ("lambda_given", w.lambda.is_some().into()),
    ]
}

fn run(cli: Cli) -> CliResult {
    let ctx = Ctx {
        format: cli.format,
        threads: cli.threads as usize,
        cache: cli.cache,
    };
    match cli.command {
        Command::Singular {
            tuple,
            error,
            prime_limit,
        } => {
            let ev = SingularSeries::<f64>::with_prime_limit(prime_limit)?;
            let v = ev.evaluate(&tuple, error)?;
            let mut e = ctx.emitter(
                "singular",
                vec![
                    ("tuple", tuple.to_string().into()),
                    ("error", error.into()),
                    ("prime_limit", prime_limit.into()),
                ],
            )?;
            e.record(&vec![
                ("tuple", tuple.to_string().into()),
                ("k", (tuple.k() as u64).into()),
                ("admissible", is_admissible(&tuple).into()),
                ("value", v.value.into()),
                ("error", v.error_radius.into()),
                ("prime_limit", v.prime_limit.into()),
            ])?;
            e.finish()?;
        }
        Command::Tkh {
            k,
            h,
            mode,
            samples,
            seed,
            error,
            budget,
        } => {
            let ev = ktuple_core::singular::shared_evaluator();
            let mode_name = format!("{mode:?}").to_lowercase();
            let mut params: Record = vec![
                ("k", k.into()),
                ("h", h.into()),
                ("mode", mode_name.clone().into()),
                ("error", error.into()),
            ];
            let hk = (h as f64).powi(k as i32);
            let rec: Record = match mode {
                Mode::Exact | Mode::Pair => {
                    let v = if matches!(mode, Mode::Exact) {
                        params.push(("budget", Field::Num(budget as f64)));
                        let opts = AverageOptions {
                            tuple_error: error,
                            budget,
                            threads: ctx.threads,
                        };
                        averages::tkh_exact(ev, k, h, &opts)?
                    } else {
                        if k != 2 {
                            return Err(Error::Precondition("pair mode needs k = 2".into()).into());
                        }
                        averages::tkh_pair_fast(ev, h, error)?
                    };
                    vec![
                        ("k", k.into()),
                        ("h", h.into()),
                        ("mode", mode_name.into()),
                        ("value_or_mean", v.value.into()),
                        ("error", v.error.into()),
                        ("samples", Field::Null),
                        ("seed", Field::Null),
                        ("normalized", (v.value / hk).into()),
                    ]
                }
                Mode::Mc => {
                    params.push(("samples", samples.into()));
                    params.push(("seed", seed.into()));
                    let est = averages::tkh_monte_carlo(ev, k, h, samples, seed, ctx.threads, error)?;
                    let ordered = averages::EstimateWithError::<f64>::ordered_tuple_count(k, h);
                    vec![
                        ("k", k.into()),
                        ("h", h.into()),
                        ("mode", mode_name.into()),
                        ("value_or_mean", est.mean.into()),
                        ("error", est.stderr.into()),
                        ("samples", est.samples.into()),
                        ("seed", est.seed.into()),
                        ("workers", (est.workers as u64).into()),
                        // T_k(h) = ordered_tuples * mean
                        ("ordered_tuples", ordered.into()),
                        ("normalized", (est.mean * ordered / hk).into()),
                    ]
                }
            };
            let mut e = ctx.emitter("tkh", params)?;
            e.record(&rec)?;
            e.finish()?;
        }
        Command::Moments { x, window, r_max } => {
            let h = window_length(x, &window)?;
            let mut params = window_params(x, h, &window);
            params.push(("r_max", u64::from(r_max).into()));
            let table = ctx.table(x + h.ceil() as u64)?;
            let hist = window_counts_with(&table, x, h, ctx.threads)?;
            let mut e = ctx.emitter("moments", params)?;
            for r in 1..=r_max {
                let m = moment_report(&hist, r)?;
                e.record(&vec![
                    ("x", m.x.into()),
                    ("h", m.h.into()),
                    ("lambda", m.lambda.into()),
                    ("lambda_eff", m.lambda_eff.into()),
                    ("r", u64::from(m.r).into()),
                    ("empirical", m.empirical.into()),
                    ("predicted", m.predicted.into()),
                    ("ratio", m.ratio.into()),
                    ("predicted_eff", m.predicted_eff.into()),
                    ("ratio_eff", m.ratio_eff.into()),
                ])?;
            }
            e.finish()?;
        }
        Command::Tail { x, window, k_max } => {
            let h = window_length(x, &window)?;
            let mut params = window_params(x, h, &window);
            params.push(("k_max", k_max.into()));
            let table = ctx.table(x + h.ceil() as u64)?;
            let hist = window_counts_with(&table, x, h, ctx.threads)?;
            let mut e = ctx.emitter("tail", params)?;
            for k in 1..=k_max {
                let t = tail_report(&hist, k)?;
                e.record(&vec![
                    ("x", t.x.into()),
                    ("h", t.h.into()),
                    ("lambda", t.lambda.into()),
                    ("lambda_eff", t.lambda_eff.into()),
                    ("k", t.k.into()),
                    ("i_count", t.i_count.into()),
                    ("pi_k_count", t.pi_k_count.into()),
                    ("poisson_tail", t.poisson_tail.into()),
                    ("poisson_tail_eff", t.poisson_tail_eff.into()),
                    ("corollary_bound", t.corollary_bound.into()),
                    ("corollary_bound_x", (t.corollary_bound * t.x as f64).into()),
                ])?;
            }
            e.finish()?;
        }
        Command::Hl {
            tuple,
            x,
            sweep,
            lambda_form,
        } => {
            let ev = ktuple_core::singular::shared_evaluator();
            let (start, stop, step) = match (x, sweep) {
                (_, Some(s)) => (s.start, s.stop, s.step),
                (Some(x), None) => (x, x, 1),
                (None, None) => unreachable!("clap enforces --x or --sweep"),
            };
            let top = stop
                .checked_add(tuple.max_offset().unwrap_or(0))
                .ok_or_else(|| Error::Domain("x + max offset overflows".into()))?;
            let table = ctx.table(top)?;
            let reports: Vec<HlReport> = if sweep.is_some() {
                hl_sweep(&table, ev, &tuple, start, stop, step)?
            } else {
                vec![hl_error(&table, ev, &tuple, start)?]
            };
            let mut e = ctx.emitter(
                "hl",
                vec![
                    ("tuple", tuple.to_string().into()),
                    ("start", start.into()),
                    ("stop", stop.into()),
                    ("step", step.into()),
                    ("lambda_form", lambda_form.into()),
                    ("li_lower_limit", 2.0.into()),
                ],
            )?;
            for r in reports {
                let mut rec: Record = vec![
                    ("x", r.x.into()),
                    ("hits", r.hits.into()),
                    ("prediction", r.prediction.into()),
                    ("abs_error", r.abs_error.into()),
                    ("normalized", r.normalized.into()),
                    ("normalized_alt", r.normalized_alt.into()),
                ];
                if lambda_form {
                    let l = hl_error_lambda(&table, ev, &tuple, r.x)?;
                    rec.push(("lambda_form_error", l.into()));
                }
                e.record(&rec)?;
            }
            e.finish()?;
        }
        Command::Selberg {
            tuple,
            x,
            level,
            cross_check,
        } => {
            let ev = ktuple_core::singular::shared_evaluator();
            let lvl = match (level.z, level.epsilon) {
                (Some(z), _) => Level::Z(z),
                (None, Some(eps)) => Level::Epsilon(eps),
                (None, None) => unreachable!("clap enforces --z or --epsilon"),
            };
            let top = x
                .checked_add(tuple.max_offset().unwrap_or(0))
                .ok_or_else(|| Error::Domain("x + max offset overflows".into()))?;
            let table = ctx.table(top)?;
            let r = sieve_report(&table, ev, &tuple, x, lvl, ctx.threads)?;
            let mut e = ctx.emitter(
                "selberg",
                vec![
                    ("tuple", tuple.to_string().into()),
                    ("x", x.into()),
                    ("z", level.z.into()),
                    ("epsilon", level.epsilon.into()),
                    ("cross_check", cross_check.into()),
                ],
            )?;
            e.record(&vec![
                ("kind", "report".into()),
                ("tuple", r.tuple.to_string().into()),
                ("x", r.x.into()),
                ("z", r.z.into()),
                ("G_z", r.g_z.into()),
                ("W_z", r.w_z.into()),
                ("excluded_moduli", r.excluded_moduli.into()),
                ("raw_bound", r.raw_bound.into()),
                ("theorem_bound", r.theorem_bound.into()),
                ("diagnostic", r.diagnostic.into()),
                ("actual", r.actual.into()),
                ("actual_above_z", r.actual_above_z.into()),
                ("sifted", r.sifted.into()),
                ("ratio_actual_over_bound", r.ratio_actual_over_bound.into()),
                ("alpha1", r.alpha1.into()),
                ("L_estimate", r.l_estimate.into()),
            ])?;
            if cross_check {
                for z in [100u64, 1_000, 10_000, 100_000] {
                    let g = gamma_cross_check::<f64>(&tuple, z, ctx.threads)?;
                    e.record(&vec![
                        ("kind", "cross_check".into()),
                        ("z", z.into()),
                        ("gamma_ratio", g.into()),
                        ("omega2_deviation", omega2_deviation(&tuple, 2, z)?.into()),
                    ])?;
                }
            }
            e.finish()?;
        }
        Command::SieveCache { limit, out } => {
            let table = ctx.table(limit)?;
            let mut w = BufWriter::new(File::create(&out)?);
            table.write_cache(&mut w)?;
            w.flush()?;
            let mut e = ctx.emitter(
                "sieve-cache",
                vec![("limit", limit.into()), ("out", out.display().to_string().into())],
            )?;
            e.record(&vec![
                ("base", table.base().into()),
                ("limit", table.limit().into()),
                ("primes", table.popcount().into()),
                ("bytes", (20 + 8 * table.words().len() as u64).into()),
            ])?;
            e.finish()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Core(e) => eprintln!("error: {e}"),
                Failure::Io(e) => eprintln!("error: {e}"),
            }
            ExitCode::from(exit_code(&f))
        }
    }
}
