//! Command-line front end. Parsing, dispatch, and report serialization
//! only — every computation lives in the library modules.
//!
//! Output contract: each command emits one artifact, JSON (default) or CSV,
//! to stdout or `--out`. Artifacts start with a fixed header (command,
//! version, seed, samples) and contain no timestamps or machine-specific
//! data, so reruns with the same arguments are byte-identical; `--threads`
//! changes only the degree of parallelism, never the bytes.
//!
//! Exit codes: 0 success, 2 usage or input errors, 3 when a requested
//! verification fails (`check` battery failure or `poly-verify` refuting
//! the claimed degree). A tester's reject verdict is data, not a failure.

use std::fmt::Display;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::affine::AffineMap;
use crate::check::{check_suite, CheckScale, Sabotage};
use crate::decompose::{decompose, DecomposeConfig, DecompositionReport};
use crate::error::{Error, Result};
use crate::factor::{AtomStats, PolynomialFactor, RankProxyReport};
use crate::function::FiniteFunction;
use crate::gowers::{gowers_norm_exact_complex, gowers_norm_exact_real};
use crate::mu::{mu_estimate, mu_exact, RestrictionDistribution};
use crate::pipeline::{soundness_pipeline, PipelineConfig};
use crate::poly::{NonClassicalPoly, VerifyMode};
use crate::property::{DeltaCloseOracle, EnumeratedOracle, PropertyOracle, ReedMullerOracle};
use crate::tester::{distance_tester, TesterConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "hofa",
    version,
    about = "Higher-order Fourier analysis toolkit over small prime fields"
)]
pub struct Cli {
    /// Master seed for every randomized choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads (0 = library default). Output bytes never depend on
    /// this.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    /// Artifact format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Write the artifact here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact uniformity norm of a function read from a file.
    Gowers {
        /// Function file (header `p n R` or `p n real`, then p^n values).
        #[arg(long)]
        function: PathBuf,
        /// Norm order d (computes U^d).
        #[arg(long)]
        order: usize,
        /// Lift finite values onto the unit circle before measuring.
        #[arg(long, default_value_t = false)]
        character: bool,
    },
    /// Restrict a function along an affine map.
    Restrict {
        #[arg(long)]
        function: PathBuf,
        /// Affine map file (header `p k n`, k column vectors, shift row).
        #[arg(long)]
        map: PathBuf,
    },
    /// Distance from a function to a property.
    Dist {
        #[arg(long)]
        function: PathBuf,
        /// Use the degree-<= D polynomial property on the function's space.
        #[arg(long, conflicts_with = "members")]
        rm_degree: Option<usize>,
        /// Use the property enumerated in this file (concatenated function
        /// blocks).
        #[arg(long)]
        members: Option<PathBuf>,
        /// Widen the property to its delta-neighborhood.
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Law of a random k-dimensional restriction of a function.
    Mu {
        #[arg(long)]
        function: PathBuf,
        /// Restriction dimension.
        #[arg(long)]
        k: usize,
        /// Sampled trials; 0 enumerates every embedding exactly.
        #[arg(long, default_value_t = 0)]
        trials: u64,
    },
    /// Statistical distance between two restriction laws.
    MuDist {
        #[arg(long)]
        function: PathBuf,
        #[arg(long)]
        other: PathBuf,
        #[arg(long)]
        k: usize,
        /// Sampled trials per function; 0 is exact.
        #[arg(long, default_value_t = 0)]
        trials: u64,
    },
    /// Evaluate a polynomial at one point, or tabulate it.
    PolyEval {
        /// Polynomial file (header line, then monomial lines).
        #[arg(long)]
        poly: PathBuf,
        /// Coordinates like "1,0,2"; omit to emit the full value table.
        #[arg(long)]
        point: Option<String>,
    },
    /// Verify a claimed degree bound by derivative checks.
    PolyVerify {
        #[arg(long)]
        poly: PathBuf,
        /// Claimed bound: every (degree+1)-fold derivative must vanish.
        #[arg(long)]
        degree: usize,
        /// Sampled direction tuples; 0 enumerates exhaustively.
        #[arg(long, default_value_t = 0)]
        tuples: u64,
    },
    /// Atom statistics (and optional rank proxy) of a polynomial factor.
    FactorStats {
        /// Factor file (concatenated polynomial blocks).
        #[arg(long)]
        factor: PathBuf,
        /// Also measure the rank proxy (largest combination bias).
        #[arg(long, default_value_t = false)]
        rank: bool,
        /// With --rank, also measure per-combination uniformity norms.
        #[arg(long, default_value_t = false)]
        norms: bool,
    },
    /// Energy-increment decomposition f = f1 + f2 + f3.
    Decompose {
        #[arg(long)]
        function: PathBuf,
        /// Order d: the residual is controlled in U^{d+1}.
        #[arg(long)]
        degree: usize,
        /// Stop once the residual norm is at most tau.
        #[arg(long)]
        tau: f64,
        /// Cap on factor complexity.
        #[arg(long)]
        max_complexity: Option<usize>,
        /// Write the final factor (input format) to this path.
        #[arg(long)]
        emit_factor: Option<PathBuf>,
    },
    /// Distance tester: restrict to random m-dimensional subspaces and
    /// compare restricted distances against delta + epsilon/2.
    Test {
        #[arg(long)]
        function: PathBuf,
        /// Property on the restriction space: degree-<= D polynomials...
        #[arg(long, conflicts_with = "members")]
        rm_degree: Option<usize>,
        /// ...or the members enumerated in this file.
        #[arg(long)]
        members: Option<PathBuf>,
        /// Restriction dimension m.
        #[arg(long)]
        m: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 100)]
        trials: u64,
    },
    /// Full soundness pipeline: decompose, check restriction events,
    /// transfer downstairs structure upstairs, repair, and round.
    Pipeline {
        #[arg(long)]
        function: PathBuf,
        /// Order d for both decompositions.
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        tau: f64,
        /// Restriction dimension m.
        #[arg(long)]
        m: usize,
        /// Property on the restriction space (defaults to degree-<= degree
        /// polynomials).
        #[arg(long)]
        members: Option<PathBuf>,
        /// Event-1 bound on the restricted rank proxy.
        #[arg(long, default_value_t = 0.9)]
        rank_threshold: f64,
        /// Embedding trials for the event statistics.
        #[arg(long, default_value_t = 1)]
        trials: usize,
    },
    /// Self-check battery of the library's identities and inequalities.
    Check {
        #[arg(long, default_value = "small")]
        scale: String,
        /// Deliberately corrupt one measurement ("gowers") to demonstrate
        /// detection.
        #[arg(long, default_value = "none")]
        sabotage: String,
    },
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    version: &'static str,
    seed: u64,
    samples: u64,
    report: T,
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn push_kv(body: &mut String, key: &str, value: impl Display) {
    let _ = writeln!(body, "{},{}", key, csv_escape(&value.to_string()));
}

struct Rendered {
    output: String,
    exit: i32,
}

fn render<T: Serialize>(
    cli: &Cli,
    command: &str,
    samples: u64,
    report: &T,
    csv_body: String,
    exit: i32,
) -> Result<Rendered> {
    let output = match cli.format {
        Format::Json => {
            let env = Envelope {
                command,
                version: env!("CARGO_PKG_VERSION"),
                seed: cli.seed,
                samples,
                report,
            };
            let mut s = serde_json::to_string_pretty(&env)?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut s = format!(
                "# command={command}\n# version={}\n# seed={}\n# samples={samples}\n",
                env!("CARGO_PKG_VERSION"),
                cli.seed
            );
            s.push_str(&csv_body);
            s
        }
    };
    Ok(Rendered { output, exit })
}

fn read(path: &PathBuf) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}

fn load_function(path: &PathBuf) -> Result<FiniteFunction> {
    FiniteFunction::from_text(&read(path)?)
}

/// Property handle used by dist/test: either degree-bounded polynomials on
/// the given space or an enumerated member list.
enum OracleChoice {
    Rm(ReedMullerOracle),
    Listed(EnumeratedOracle),
}

impl OracleChoice {
    fn build(
        space: crate::field::FieldParams,
        rm_degree: Option<usize>,
        members: &Option<PathBuf>,
    ) -> Result<OracleChoice> {
        match (rm_degree, members) {
            (Some(d), None) => Ok(OracleChoice::Rm(ReedMullerOracle::new(space, d)?)),
            (None, Some(path)) => Ok(OracleChoice::Listed(EnumeratedOracle::from_text(
                "listed",
                &read(path)?,
            )?)),
            _ => Err(Error::Config(
                "choose exactly one property: --rm-degree or --members".to_string(),
            )),
        }
    }

    fn name(&self) -> String {
        match self {
            OracleChoice::Rm(o) => o.name(),
            OracleChoice::Listed(o) => o.name(),
        }
    }
}

#[derive(Serialize)]
struct GowersPayload {
    p: u8,
    n: usize,
    order: usize,
    character: bool,
    norm: f64,
}

fn cmd_gowers(cli: &Cli, function: &PathBuf, order: usize, character: bool) -> Result<Rendered> {
    let f = load_function(function)?;
    let params = *f.params();
    let norm = if character {
        gowers_norm_exact_complex(&params, &f.character_table()?, order)?
    } else {
        gowers_norm_exact_real(&params, &f.real_table()?, order)?
    };
    let payload = GowersPayload {
        p: params.p(),
        n: params.n(),
        order,
        character,
        norm,
    };
    let mut body = String::new();
    push_kv(&mut body, "p", payload.p);
    push_kv(&mut body, "n", payload.n);
    push_kv(&mut body, "order", order);
    push_kv(&mut body, "character", character);
    push_kv(&mut body, "norm", norm);
    render(cli, "gowers", 0, &payload, body, 0)
}

#[derive(Serialize)]
struct RestrictPayload {
    p: u8,
    source_dim: usize,
    target_dim: usize,
    range: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    values_finite: Option<Vec<u8>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    values_real: Option<Vec<f64>>,
    /// The restricted function in the function file format.
    function_text: String,
}

fn cmd_restrict(cli: &Cli, function: &PathBuf, map: &PathBuf) -> Result<Rendered> {
    let f = load_function(function)?;
    let map = AffineMap::from_text(&read(map)?)?;
    let restricted = f.restrict(&map)?;
    let (values_finite, values_real) = match restricted.range() {
        crate::function::RangeKind::Finite(_) => (
            Some(
                restricted
                    .real_table()?
                    .iter()
                    .map(|&v| v as u8)
                    .collect::<Vec<u8>>(),
            ),
            None,
        ),
        _ => (None, Some(restricted.real_table()?)),
    };
    let payload = RestrictPayload {
        p: map.p(),
        source_dim: map.source_dim(),
        target_dim: map.target_dim(),
        range: format!("{:?}", restricted.range()),
        values_finite,
        values_real,
        function_text: restricted.to_text(),
    };
    let mut body = String::from("index,value\n");
    for (i, v) in restricted.real_table()?.iter().enumerate() {
        push_kv(&mut body, &i.to_string(), v);
    }
    render(cli, "restrict", 0, &payload, body, 0)
}

#[derive(Serialize)]
struct DistPayload {
    oracle: String,
    delta: Option<f64>,
    distance: f64,
    is_member: bool,
}

fn cmd_dist(
    cli: &Cli,
    function: &PathBuf,
    rm_degree: Option<usize>,
    members: &Option<PathBuf>,
    delta: Option<f64>,
) -> Result<Rendered> {
    let f = load_function(function)?;
    let choice = OracleChoice::build(*f.params(), rm_degree, members)?;
    let (name, distance, is_member) = match (&choice, delta) {
        (OracleChoice::Rm(o), None) => (o.name(), o.distance(&f)?, o.is_member(&f)?),
        (OracleChoice::Listed(o), None) => (o.name(), o.distance(&f)?, o.is_member(&f)?),
        (OracleChoice::Rm(o), Some(d)) => {
            let w = DeltaCloseOracle::new(o.clone(), d)?;
            (w.name(), w.distance(&f)?, w.is_member(&f)?)
        }
        (OracleChoice::Listed(o), Some(d)) => {
            let w = DeltaCloseOracle::new(o.clone(), d)?;
            (w.name(), w.distance(&f)?, w.is_member(&f)?)
        }
    };
    let payload = DistPayload {
        oracle: name,
        delta,
        distance,
        is_member,
    };
    let mut body = String::new();
    push_kv(&mut body, "oracle", &payload.oracle);
    if let Some(d) = delta {
        push_kv(&mut body, "delta", d);
    }
    push_kv(&mut body, "distance", distance);
    push_kv(&mut body, "is_member", is_member);
    render(cli, "dist", 0, &payload, body, 0)
}

fn mu_csv(dist: &RestrictionDistribution) -> String {
    let mut body = String::from("outcome,probability\n");
    for (key, prob) in &dist.probs {
        push_kv(&mut body, &key.to_string(), prob);
    }
    body
}

fn cmd_mu(cli: &Cli, function: &PathBuf, k: usize, trials: u64) -> Result<Rendered> {
    let f = load_function(function)?;
    let dist = if trials == 0 {
        mu_exact(&f, k)?
    } else {
        mu_estimate(&f, k, trials, cli.seed)?
    };
    let body = mu_csv(&dist);
    render(cli, "mu", trials, &dist, body, 0)
}

#[derive(Serialize)]
struct MuDistPayload {
    k: usize,
    exact: bool,
    distance: f64,
}

fn cmd_mu_dist(
    cli: &Cli,
    function: &PathBuf,
    other: &PathBuf,
    k: usize,
    trials: u64,
) -> Result<Rendered> {
    let f = load_function(function)?;
    let g = load_function(other)?;
    let (mf, mg) = if trials == 0 {
        (mu_exact(&f, k)?, mu_exact(&g, k)?)
    } else {
        (
            mu_estimate(&f, k, trials, cli.seed)?,
            mu_estimate(&g, k, trials, cli.seed ^ 0x9e3779b97f4a7c15)?,
        )
    };
    let payload = MuDistPayload {
        k,
        exact: trials == 0,
        distance: mf.stat_distance(&mg)?,
    };
    let mut body = String::new();
    push_kv(&mut body, "k", k);
    push_kv(&mut body, "exact", payload.exact);
    push_kv(&mut body, "distance", payload.distance);
    render(cli, "mu-dist", trials, &payload, body, 0)
}

#[derive(Serialize)]
struct PolyEvalPayload {
    p: u8,
    n: usize,
    degree: usize,
    depth: u8,
    modulus: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    point: Option<Vec<u8>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    numerator: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    numerators: Option<Vec<u64>>,
}

fn parse_point(s: &str, n: usize, p: u8) -> Result<Vec<u8>> {
    let coords: Vec<u8> = s
        .split([',', ' '])
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<u8>()
                .map_err(|_| Error::Config(format!("bad coordinate {t:?}")))
        })
        .collect::<Result<_>>()?;
    if coords.len() != n {
        return Err(Error::Config(format!(
            "point has {} coordinates, expected {n}",
            coords.len()
        )));
    }
    if let Some(&c) = coords.iter().find(|&&c| c >= p) {
        return Err(Error::Config(format!("coordinate {c} not below p={p}")));
    }
    Ok(coords)
}

fn cmd_poly_eval(cli: &Cli, poly: &PathBuf, point: &Option<String>) -> Result<Rendered> {
    let poly = NonClassicalPoly::from_text(&read(poly)?)?;
    let params = *poly.params();
    let table = poly.value_table();
    let modulus = table.modulus();
    let mut payload = PolyEvalPayload {
        p: params.p(),
        n: params.n(),
        degree: poly.degree(),
        depth: poly.depth(),
        modulus,
        point: None,
        numerator: None,
        value: None,
        numerators: None,
    };
    let mut body = String::new();
    push_kv(&mut body, "p", payload.p);
    push_kv(&mut body, "n", payload.n);
    push_kv(&mut body, "degree", payload.degree);
    push_kv(&mut body, "depth", payload.depth);
    push_kv(&mut body, "modulus", modulus);
    match point {
        Some(s) => {
            let coords = parse_point(s, params.n(), params.p())?;
            let v = poly.eval_coords(&coords);
            let num = v.numerator_at_level(poly.depth())?;
            payload.point = Some(coords);
            payload.numerator = Some(num);
            payload.value = Some(num as f64 / modulus as f64);
            push_kv(&mut body, "numerator", num);
            push_kv(&mut body, "value", payload.value.unwrap());
        }
        None => {
            let nums: Vec<u64> = table.nums().iter().map(|&v| v as u64).collect();
            body.push_str("index,numerator\n");
            for (i, v) in nums.iter().enumerate() {
                push_kv(&mut body, &i.to_string(), v);
            }
            payload.numerators = Some(nums);
        }
    }
    render(cli, "poly-eval", 0, &payload, body, 0)
}

#[derive(Serialize)]
struct PolyVerifyPayload {
    claimed_degree: usize,
    exhaustive: bool,
    holds: bool,
}

fn cmd_poly_verify(cli: &Cli, poly: &PathBuf, degree: usize, tuples: u64) -> Result<Rendered> {
    let poly = NonClassicalPoly::from_text(&read(poly)?)?;
    let mode = if tuples == 0 {
        VerifyMode::Exhaustive
    } else {
        VerifyMode::Sampled {
            tuples,
            seed: cli.seed,
        }
    };
    let holds = poly.verify_degree(degree, mode)?;
    let payload = PolyVerifyPayload {
        claimed_degree: degree,
        exhaustive: tuples == 0,
        holds,
    };
    let mut body = String::new();
    push_kv(&mut body, "claimed_degree", degree);
    push_kv(&mut body, "exhaustive", payload.exhaustive);
    push_kv(&mut body, "holds", holds);
    render(cli, "poly-verify", tuples, &payload, body, if holds { 0 } else { 3 })
}

#[derive(Serialize)]
struct FactorStatsPayload {
    degrees: Vec<usize>,
    depths: Vec<u8>,
    stats: AtomStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    rank: Option<RankProxyReport>,
}

fn cmd_factor_stats(cli: &Cli, factor: &PathBuf, rank: bool, norms: bool) -> Result<Rendered> {
    let factor = PolynomialFactor::from_text(&read(factor)?)?;
    let stats = factor.atom_stats();
    let rank = if rank {
        Some(factor.rank_proxy(norms)?)
    } else {
        None
    };
    let payload = FactorStatsPayload {
        degrees: factor.degrees(),
        depths: factor.depths(),
        stats,
        rank,
    };
    let mut body = String::new();
    push_kv(&mut body, "complexity", payload.stats.complexity);
    push_kv(&mut body, "order", payload.stats.order);
    push_kv(&mut body, "nonempty", payload.stats.nonempty);
    push_kv(&mut body, "min_count", payload.stats.min_count);
    push_kv(&mut body, "max_count", payload.stats.max_count);
    push_kv(&mut body, "uniform_measure", payload.stats.uniform_measure);
    push_kv(&mut body, "max_abs_deviation", payload.stats.max_abs_deviation);
    if let Some(r) = &payload.rank {
        push_kv(&mut body, "rank_combos", r.combos);
        push_kv(&mut body, "rank_max_bias", r.max_bias);
        if let Some(n) = r.max_norm {
            push_kv(&mut body, "rank_max_norm", n);
        }
    }
    body.push_str("atom,count\n");
    for (label, count) in &payload.stats.counts {
        push_kv(&mut body, &label.to_string(), count);
    }
    render(cli, "factor-stats", 0, &payload, body, 0)
}

fn decompose_csv(report: &DecompositionReport) -> String {
    let mut body = String::new();
    push_kv(&mut body, "complexity", report.complexity);
    push_kv(&mut body, "order", report.order);
    push_kv(&mut body, "degree", report.degree);
    push_kv(&mut body, "f2_l2", report.f2_l2);
    push_kv(&mut body, "f3_u", report.f3_u);
    push_kv(&mut body, "converged", report.converged);
    body.push_str("round,complexity,energy,residual_norm,adjoined_correlation\n");
    for (i, r) in report.rounds.iter().enumerate() {
        let corr = r
            .adjoined_correlation
            .map(|c| c.to_string())
            .unwrap_or_default();
        let _ = writeln!(
            body,
            "{},{},{},{},{}",
            i, r.complexity, r.energy, r.residual_norm, corr
        );
    }
    body
}

fn cmd_decompose(
    cli: &Cli,
    function: &PathBuf,
    degree: usize,
    tau: f64,
    max_complexity: Option<usize>,
    emit_factor: &Option<PathBuf>,
) -> Result<Rendered> {
    let f = load_function(function)?;
    let mut config = DecomposeConfig::for_degree(degree, tau, f.params().p());
    if let Some(c) = max_complexity {
        config.max_complexity = c;
    }
    let dec = decompose(&f, &config, None)?;
    if let Some(path) = emit_factor {
        std::fs::write(path, dec.factor.to_text()?)?;
    }
    let report = dec.report();
    let body = decompose_csv(&report);
    render(cli, "decompose", 0, &report, body, 0)
}

fn cmd_test(
    cli: &Cli,
    function: &PathBuf,
    rm_degree: Option<usize>,
    members: &Option<PathBuf>,
    m: usize,
    delta: f64,
    epsilon: f64,
    trials: u64,
) -> Result<Rendered> {
    let f = load_function(function)?;
    let small = crate::field::FieldParams::new(f.params().p(), m)?;
    let choice = OracleChoice::build(small, rm_degree, members)?;
    let config = TesterConfig {
        delta,
        epsilon,
        m,
        trials,
        seed: cli.seed,
    };
    let report = match &choice {
        OracleChoice::Rm(o) => distance_tester(&f, o, &config)?,
        OracleChoice::Listed(o) => distance_tester(&f, o, &config)?,
    };
    let mut body = String::new();
    push_kv(&mut body, "oracle", choice.name());
    push_kv(&mut body, "threshold", report.threshold);
    push_kv(&mut body, "mean_distance", report.mean_distance);
    push_kv(&mut body, "accept_fraction", report.accept_fraction);
    push_kv(&mut body, "accepted", report.accepted);
    body.push_str("trial,distance\n");
    for (i, d) in report.distances.iter().enumerate() {
        push_kv(&mut body, &i.to_string(), d);
    }
    render(cli, "test", trials, &report, body, 0)
}

fn cmd_pipeline(
    cli: &Cli,
    function: &PathBuf,
    degree: usize,
    tau: f64,
    m: usize,
    members: &Option<PathBuf>,
    rank_threshold: f64,
    trials: usize,
) -> Result<Rendered> {
    let f = load_function(function)?;
    let mut config = PipelineConfig::new(degree, tau, m, cli.seed);
    config.rank_threshold = rank_threshold;
    config.trials = trials;
    let small = crate::field::FieldParams::new(f.params().p(), m)?;
    let outcome = match members {
        Some(path) => {
            let oracle = EnumeratedOracle::from_text("listed", &read(path)?)?;
            soundness_pipeline(&f, &oracle, &config)?
        }
        None => {
            let oracle = ReedMullerOracle::new(small, degree)?;
            soundness_pipeline(&f, &oracle, &config)?
        }
    };
    let r = &outcome.report;
    let mut body = String::new();
    push_kv(&mut body, "gamma", r.gamma);
    push_kv(&mut body, "eta", r.eta);
    push_kv(&mut body, "h_distance", r.h_distance);
    push_kv(&mut body, "trials_all_hold", r.trials_all_hold);
    push_kv(&mut body, "restriction_consistent", r.restriction_consistent);
    push_kv(&mut body, "unrealized_points", r.transfer_unrealized_points);
    push_kv(&mut body, "unrealized_labels", r.transfer_unrealized_labels);
    push_kv(&mut body, "psi_identities_hold", r.psi.identities_hold);
    push_kv(&mut body, "rounding_l1", r.rounding_l1);
    push_kv(&mut body, "final_norm", r.final_norm);
    push_kv(&mut body, "final_bound", r.final_bound);
    push_kv(&mut body, "final_holds", r.final_holds);
    body.push_str("trial,event1,event2,event3,all\n");
    for t in &r.trial_reports {
        let _ = writeln!(
            body,
            "{},{},{},{},{}",
            t.trial, t.event1.holds, t.event2.holds, t.event3.holds, t.all_hold
        );
    }
    render(cli, "pipeline", trials as u64, r, body, 0)
}

fn cmd_check(cli: &Cli, scale: &str, sabotage: &str) -> Result<Rendered> {
    let scale: CheckScale = scale.parse()?;
    let sabotage: Sabotage = sabotage.parse()?;
    let report = check_suite(scale, sabotage, cli.seed)?;
    let mut body = String::from("check,instances,worst_gap,passed,detail\n");
    for c in &report.checks {
        let _ = writeln!(
            body,
            "{},{},{},{},{}",
            c.name,
            c.instances,
            c.worst_gap,
            c.passed,
            csv_escape(&c.detail)
        );
    }
    push_kv(&mut body, "passed", report.passed);
    let exit = if report.passed { 0 } else { 3 };
    render(cli, "check", 0, &report, body, exit)
}

fn execute(cli: &Cli) -> Result<Rendered> {
    match &cli.command {
        Command::Gowers {
            function,
            order,
            character,
        } => cmd_gowers(cli, function, *order, *character),
        Command::Restrict { function, map } => cmd_restrict(cli, function, map),
        Command::Dist {
            function,
            rm_degree,
            members,
            delta,
        } => cmd_dist(cli, function, *rm_degree, members, *delta),
        Command::Mu {
            function,
            k,
            trials,
        } => cmd_mu(cli, function, *k, *trials),
        Command::MuDist {
            function,
            other,
            k,
            trials,
        } => cmd_mu_dist(cli, function, other, *k, *trials),
        Command::PolyEval { poly, point } => cmd_poly_eval(cli, poly, point),
        Command::PolyVerify {
            poly,
            degree,
            tuples,
        } => cmd_poly_verify(cli, poly, *degree, *tuples),
        Command::FactorStats {
            factor,
            rank,
            norms,
        } => cmd_factor_stats(cli, factor, *rank, *norms),
        Command::Decompose {
            function,
            degree,
            tau,
            max_complexity,
            emit_factor,
        } => cmd_decompose(cli, function, *degree, *tau, *max_complexity, emit_factor),
        Command::Test {
            function,
            rm_degree,
            members,
            m,
            delta,
            epsilon,
            trials,
        } => cmd_test(
            cli, function, *rm_degree, members, *m, *delta, *epsilon, *trials,
        ),
        Command::Pipeline {
            function,
            degree,
            tau,
            m,
            members,
            rank_threshold,
            trials,
        } => cmd_pipeline(
            cli,
            function,
            *degree,
            *tau,
            *m,
            members,
            *rank_threshold,
            *trials,
        ),
        Command::Check { scale, sabotage } => cmd_check(cli, scale, sabotage),
    }
}

/// Parses arguments from the environment, runs one command, and returns
/// the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    if cli.threads > 0 {
        // Ignore failure: the global pool can only be installed once.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    match execute(&cli) {
        Ok(rendered) => {
            match &cli.out {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, &rendered.output) {
                        eprintln!("error: {e}");
                        return 2;
                    }
                }
                None => print!("{}", rendered.output),
            }
            rendered.exit
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
