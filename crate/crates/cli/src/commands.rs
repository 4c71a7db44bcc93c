use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use hullbound::markov::BOUND_TOL;
use hullbound::reference::{
    self, EX1_C_HAT_L, EX1_C_HAT_U, EX1_DOMAIN, EX1_FN, EX1_KINK, EX1_OBVIOUS_HI, EX1_OBVIOUS_LO, EX2_DOMAIN, EX2_FN,
};
use hullbound::rng::SplitMix64;
use hullbound::witness::TARGET_TOL;
use hullbound::{
    json, run_oracle, verify_conditional_bounds, verify_markov_bounds, Analysis, FiniteConditioning, MarkovOperator,
    OracleConfig, PlFunction, Point, VerificationReport,
};
use serde::{Deserialize, Serialize};

use crate::config::{Format, RunConfig};

pub const MARKOV_SHAPE: (usize, usize) = (8, 16);
pub const ATOMS: usize = 64;
pub const MAX_BLOCKS: usize = 16;

/// Missing or inconsistent user input; reported with exit code 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Usage(msg.into()).into())
}

/// What a command produced: text for stdout (or `--out`) and whether every
/// check it ran succeeded.
pub struct Outcome {
    pub text: String,
    pub ok: bool,
    /// Output files were already written; `text` is a note for stdout.
    pub written: bool,
}

impl Outcome {
    fn json<T: Serialize>(value: &T, ok: bool) -> Result<Self> {
        Ok(Self {
            text: json::to_string(value)? + "\n",
            ok,
            written: false,
        })
    }
}

fn analysis(cfg: &RunConfig) -> Result<Analysis> {
    let Some(f) = cfg.f.as_deref() else {
        return usage("missing --fn");
    };
    let Some(d) = cfg.domain.as_deref() else {
        return usage("missing --domain");
    };
    let res = cfg.resolution.expect("resolution has a default");
    Analysis::parse(f, d, res).with_context(|| format!("building hull of {f} on {d} at resolution {res}"))
}

#[derive(Serialize)]
struct EnvelopeOut<'a> {
    #[serde(rename = "fn")]
    f: &'a str,
    domain: String,
    resolution: usize,
    lower: &'a PlFunction,
    upper: &'a PlFunction,
    hull: &'a [Point],
}

fn curve_csv(rows: &[(&str, &[Point])]) -> String {
    let mut out = String::from("curve,x,y\n");
    for (name, pts) in rows {
        for &(x, y) in *pts {
            let _ = writeln!(out, "{name},{},{}", json::format_f64(x), json::format_f64(y));
        }
    }
    out
}

pub fn envelope(cfg: &RunConfig) -> Result<Outcome> {
    let a = analysis(cfg)?;
    let out = EnvelopeOut {
        f: cfg.f.as_deref().unwrap_or_default(),
        domain: a.domain().to_string(),
        resolution: a.graph.resolution,
        lower: a.lower(),
        upper: a.upper(),
        hull: a.hull.vertices(),
    };
    let body = json::to_string(&out)? + "\n";
    let csv = curve_csv(&[
        ("lower", a.lower().breakpoints()),
        ("upper", a.upper().breakpoints()),
        ("hull", a.hull.vertices()),
    ]);
    if let Some(dir) = &cfg.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        write(&dir.join("envelope.json"), &body)?;
        write(&dir.join("lower.csv"), &a.lower().to_csv())?;
        write(&dir.join("upper.csv"), &a.upper().to_csv())?;
        write(&dir.join("hull.csv"), &curve_csv(&[("hull", a.hull.vertices())]))?;
        return Ok(Outcome {
            text: format!(
                "wrote envelope.json, lower.csv, upper.csv, hull.csv to {}\n",
                dir.display()
            ),
            ok: true,
            written: true,
        });
    }
    Ok(Outcome {
        text: match cfg.format.unwrap_or_default() {
            Format::Json => body,
            Format::Csv => csv,
        },
        ok: true,
        written: false,
    })
}

pub fn bounds(cfg: &RunConfig) -> Result<Outcome> {
    let Some(mean) = cfg.mean else {
        return usage("missing --mean");
    };
    let a = analysis(cfg)?;
    Outcome::json(&a.bounds_at(mean)?, true)
}

pub fn constants(cfg: &RunConfig) -> Result<Outcome> {
    let a = analysis(cfg)?;
    Outcome::json(&a.constants(cfg.mean)?, true)
}

#[derive(Serialize)]
struct WitnessOut<'a> {
    target: [f64; 2],
    support: &'a [f64],
    weights: &'a [f64],
    atoms: &'a [Point],
    /// `(E[X], E[f(X)])` recomputed by evaluating f at the support.
    moments: [f64; 2],
    max_error: f64,
    verified: bool,
}

pub fn witness(cfg: &RunConfig) -> Result<Outcome> {
    let Some([x, y]) = cfg.at else {
        return usage("missing --at x,y");
    };
    let a = analysis(cfg)?;
    let w = a.witness((x, y))?;
    let (ex, efx) = w.distribution.moments(&a.f)?;
    let max_error = (ex - x).abs().max((efx - y).abs());
    let verified = max_error <= TARGET_TOL;
    let out = WitnessOut {
        target: [x, y],
        support: w.distribution.support(),
        weights: w.distribution.weights(),
        atoms: &w.atoms,
        moments: [ex, efx],
        max_error,
        verified,
    };
    Outcome::json(&out, verified)
}

#[derive(Serialize)]
struct VerifySummary {
    seed: u64,
    instances: usize,
    shape: [usize; 2],
    tolerance: f64,
    checked: usize,
    violations: usize,
    worst_margin: f64,
}

fn grid_states(a: &Analysis, n: usize, rng: &mut SplitMix64) -> Vec<f64> {
    (0..n).map(|_| a.graph.points[rng.below(a.graph.len())].0).collect()
}

fn read_input<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

#[derive(Deserialize)]
struct MarkovInput {
    matrix: Vec<Vec<f64>>,
    x: Vec<f64>,
}

#[derive(Deserialize)]
struct ConditionalInput {
    weights: Vec<f64>,
    partition: Vec<Vec<usize>>,
    x: Vec<f64>,
}

fn summarize(
    reports: impl Iterator<Item = Result<VerificationReport>>,
    seed: u64,
    instances: usize,
    shape: [usize; 2],
) -> Result<Outcome> {
    let mut s = VerifySummary {
        seed,
        instances,
        shape,
        tolerance: BOUND_TOL,
        checked: 0,
        violations: 0,
        worst_margin: f64::INFINITY,
    };
    for r in reports {
        let r = r?;
        s.checked += r.checked;
        s.violations += r.violations;
        s.worst_margin = s.worst_margin.min(r.worst_margin);
    }
    let ok = s.violations == 0;
    Outcome::json(&s, ok)
}

pub fn verify_markov(cfg: &RunConfig) -> Result<Outcome> {
    let a = analysis(cfg)?;
    if let Some(path) = &cfg.input {
        let input: MarkovInput = read_input(path)?;
        let m = MarkovOperator::from_rows(input.matrix)?;
        let r = verify_markov_bounds(&m, &input.x, &a.f, a.domain(), a.lower(), a.upper())?;
        let ok = r.all_pass();
        return Outcome::json(&r, ok);
    }
    let seed = cfg.seed.unwrap_or_default();
    let n = cfg.trials.unwrap_or_default();
    let mut rng = SplitMix64::for_stream(seed, 0);
    let reports = (0..n as u64).map(|k| {
        let m = MarkovOperator::random(MARKOV_SHAPE.0, MARKOV_SHAPE.1, seed.wrapping_add(k));
        let xs = grid_states(&a, MARKOV_SHAPE.1, &mut rng);
        Ok(verify_markov_bounds(&m, &xs, &a.f, a.domain(), a.lower(), a.upper())?)
    });
    summarize(reports, seed, n, [MARKOV_SHAPE.0, MARKOV_SHAPE.1])
}

pub fn verify_conditional(cfg: &RunConfig) -> Result<Outcome> {
    let a = analysis(cfg)?;
    if let Some(path) = &cfg.input {
        let input: ConditionalInput = read_input(path)?;
        let c = FiniteConditioning::new(input.weights, input.partition)?;
        let r = verify_conditional_bounds(&c, &input.x, &a.f, a.domain(), a.lower(), a.upper())?;
        let ok = r.all_pass();
        return Outcome::json(&r, ok);
    }
    let seed = cfg.seed.unwrap_or_default();
    let n = cfg.trials.unwrap_or_default();
    let mut rng = SplitMix64::for_stream(seed, 1);
    let reports = (0..n as u64).map(|k| {
        let c = FiniteConditioning::random(ATOMS, MAX_BLOCKS, seed.wrapping_add(k));
        let xs = grid_states(&a, ATOMS, &mut rng);
        Ok(verify_conditional_bounds(
            &c,
            &xs,
            &a.f,
            a.domain(),
            a.lower(),
            a.upper(),
        )?)
    });
    summarize(reports, seed, n, [ATOMS, ATOMS])
}

pub fn oracle(cfg: &RunConfig) -> Result<Outcome> {
    let a = analysis(cfg)?;
    let base = OracleConfig::default();
    let oc = OracleConfig {
        n_trials: cfg.trials.unwrap_or(base.n_trials),
        seed: cfg.seed.unwrap_or(base.seed),
        tolerance: cfg.tolerance.unwrap_or(base.tolerance),
        ..base
    };
    let s = run_oracle(&a.hull, &a.graph, &oc)?;
    let ok = s.passed == s.trials;
    Outcome::json(&s, ok)
}

struct Row {
    quantity: String,
    reference: f64,
    tolerance: f64,
    computed: Option<f64>,
}

impl Row {
    fn new(quantity: impl Into<String>, (reference, tolerance): (f64, f64), computed: Option<f64>) -> Self {
        Self {
            quantity: quantity.into(),
            reference,
            tolerance,
            computed,
        }
    }

    fn pass(&self) -> bool {
        self.computed
            .is_some_and(|c| (c - self.reference).abs() <= self.tolerance)
    }
}

fn table(title: &str, rows: &[Row]) -> (String, bool) {
    let mut out = format!(
        "{title}\n{:<22} {:>12} {:>10} {:>14}  status\n",
        "quantity", "reference", "tolerance", "computed"
    );
    for r in rows {
        let computed = r.computed.map_or("undefined".to_string(), |c| format!("{c:.8}"));
        let status = if r.pass() { "PASS" } else { "FAIL" };
        let reference = format!("{:.8}", r.reference);
        let reference = reference.trim_end_matches('0').trim_end_matches('.');
        let _ = writeln!(
            out,
            "{:<22} {reference:>12} {:>10.0e} {computed:>14}  {status}",
            r.quantity, r.tolerance
        );
    }
    (out, rows.iter().all(Row::pass))
}

pub fn example(name: &str, cfg: &RunConfig) -> Result<Outcome> {
    let res = cfg.resolution.expect("resolution has a default");
    let (text, ok) = match name {
        "ex1" => {
            let a = Analysis::parse(EX1_FN, EX1_DOMAIN, res)?;
            let c = a.constants(None)?;
            let b = a.bounds_at(0.5)?;
            let slope = reference::ex1_slope();
            let rows = [
                Row::new(
                    "x* (lower kink)",
                    EX1_KINK,
                    reference::first_interior_breakpoint(a.lower()),
                ),
                Row::new("c_hat_l", EX1_C_HAT_L, c.c_hat_l),
                Row::new("c_hat_u", EX1_C_HAT_U, c.c_hat_u),
                Row::new("obvious ratio (low)", EX1_OBVIOUS_LO, c.obvious_ratio_lo),
                Row::new("obvious ratio (high)", EX1_OBVIOUS_HI, c.obvious_ratio_hi),
                Row::new("g_l(0.5) = 2 - a/2", (2.0 - slope / 2.0, 1e-5), Some(b.lower)),
                Row::new("g_u(0.5) = 1 + a/2", (1.0 + slope / 2.0, 1e-5), Some(b.upper)),
            ];
            table(
                &format!("example ex1: f(x) = {EX1_FN} on {EX1_DOMAIN}, resolution {res}"),
                &rows,
            )
        }
        "ex2" => {
            let a = Analysis::parse(EX2_FN, EX2_DOMAIN, res)?;
            let mut rows = Vec::new();
            for x in [-1.5, 0.0, 1.5] {
                rows.push(Row::new(
                    format!("g_l({x})"),
                    (reference::ex2_lower(x), 1e-6),
                    a.lower().eval(x).ok(),
                ));
            }
            for x in [-1.5, 0.0, 1.5] {
                rows.push(Row::new(
                    format!("g_u({x})"),
                    (reference::ex2_upper(x), 1e-6),
                    a.upper().eval(x).ok(),
                ));
            }
            let (mut text, ok) = table(
                &format!("example ex2: f(x) = {EX2_FN} on {EX2_DOMAIN}, resolution {res}"),
                &rows,
            );
            text.push_str(
                "note: references are the chords (-3-x)/2, (x-1)/2 below and (x+1)/2, (3-x)/2 above; \
                 the upper-envelope formulas as usually printed for this example contain typos and \
                 disagree with the hull\n",
            );
            (text, ok)
        }
        other => bail!("unknown example {other:?}"),
    };
    Ok(Outcome {
        text,
        ok,
        written: false,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Sends output to `--out` when given, stdout otherwise.
pub fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
