use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use compatkit::compat::{
    compatibility_interval, fmt_sci, pvalue_function, CompatEngine, GridSpec, IntervalEngine, NormalMeanEngine,
};
use compatkit::glmgeom::{self, GlmFamily, GlmProblem, WaldAnchor};
use compatkit::hypotest::{
    bf_bound_uncapped, bf_lower_bound, coin_toss_equivalent, p_value_methods, svalue, GaussianSummary,
    HypothesisRegion,
};
use compatkit::serde_ext::extended_f64;
use compatkit::simlab::{self, PowerConfig, SimConfig, SizeGrid};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::*;
use crate::input::{parse_list, read_matrix, read_vector};

pub enum Output {
    Json(Value),
    Text(String),
}

fn to_value<T: Serialize>(v: &T) -> Result<Output> {
    Ok(Output::Json(serde_json::to_value(v)?))
}

fn summary(a: &SummaryArgs) -> Result<GaussianSummary> {
    Ok(GaussianSummary::new(a.mean, a.sigma, a.n)?)
}

/// Runs a command. It may fill in resolved values (such as the seed) so that
/// the echoed inputs replay to the same result.
pub fn run(command: &mut Command) -> Result<Output> {
    match command {
        Command::Point(a) => {
            let s = summary(&a.summary)?;
            to_value(&compatkit::hypotest::point_p(&s, a.m)?)
        }
        Command::Interval(a) => {
            let s = summary(&a.summary)?;
            let h = HypothesisRegion::interval(a.lo, a.hi)?;
            to_value(&p_value_methods().get(&a.method)?.p_value(&s, &h)?)
        }
        Command::Equivalence(a) => {
            let s = summary(&a.summary)?;
            let h = HypothesisRegion::nonequivalence(a.lo, a.hi)?;
            to_value(&p_value_methods().get(&a.method)?.p_value(&s, &h)?)
        }
        Command::Svalue(a) => svalue_cmd(a),
        Command::Bfbound(a) => {
            let bound = bf_lower_bound(a.p)?;
            Ok(Output::Json(json!({
                "p": a.p,
                "bf_lower_bound": bound,
                "uncapped": bf_bound_uncapped(a.p)?,
            })))
        }
        Command::Glm(GlmCommand::Fit(a)) => glm_fit(a),
        Command::Glm(GlmCommand::Compare(a)) => glm_compare(a),
        Command::Scheffe(a) => {
            let ybar = parse_list(&a.ybar)?;
            let sigma = read_matrix(&a.sigma)?;
            to_value(&glmgeom::scheffe_simultaneous(&ybar, &sigma, a.n)?)
        }
        Command::Curve(a) => curve(a),
        Command::Simulate(SimulateCommand::Pdist(a)) => {
            let mut cfg: SimConfig = read_json(&a.config)?;
            cfg.seed = resolve_seed(a, cfg.seed);
            let report = simlab::sample_p_distribution(&cfg)?;
            Ok(Output::Json(json!({ "config": cfg, "report": report })))
        }
        Command::Simulate(SimulateCommand::Size(a)) => {
            let mut grid: SizeGrid = read_json(&a.config)?;
            grid.base.seed = resolve_seed(a, grid.base.seed);
            let rows = simlab::size_power(&grid)?;
            Ok(Output::Json(json!({ "grid": grid, "rows": rows })))
        }
        Command::Simulate(SimulateCommand::Power(a)) => power(a),
    }
}

fn resolve_seed(a: &mut SimulateArgs, from_config: u64) -> u64 {
    let seed = a.seed.unwrap_or(from_config);
    a.seed = Some(seed);
    seed
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_reader(BufReader::new(file)).with_context(|| format!("{}: invalid config", path.display()))
}

#[derive(Serialize)]
struct SvalueResult {
    p: f64,
    base: f64,
    #[serde(with = "extended_f64")]
    s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    coin_tosses: Option<u64>,
}

fn svalue_cmd(a: &SvalueArgs) -> Result<Output> {
    let s = svalue(a.p, a.base)?;
    let coin_tosses = if a.base == 2.0 && s.is_finite() { Some(coin_toss_equivalent(s)?) } else { None };
    to_value(&SvalueResult { p: a.p, base: a.base, s, coin_tosses })
}

fn problem(f: &FamilyArgs, design: &Path) -> Result<GlmProblem> {
    let design = read_matrix(design)?;
    let response = read_vector(&f.response)?;
    let family = match f.family.as_str() {
        "gaussian" => {
            let cov = f.cov.as_ref().ok_or_else(|| anyhow!("--cov is required for the gaussian family"))?;
            GlmFamily::gaussian(read_matrix(cov)?)?
        }
        "poisson" => GlmFamily::PoissonLog,
        "binomial" => {
            let trials = f.trials.as_ref().ok_or_else(|| anyhow!("--trials is required for the binomial family"))?;
            GlmFamily::binomial(read_vector(trials)?.as_slice().to_vec())?
        }
        other => bail!("unknown family `{other}`"),
    };
    let mut p = GlmProblem::new(family, design, response)?;
    if let Some(offset) = &f.offset {
        p = p.with_offset(read_vector(offset)?)?;
    }
    Ok(p)
}

fn glm_fit(a: &GlmFitArgs) -> Result<Output> {
    let p = problem(&a.family, &a.design)?;
    let fit = glmgeom::fit(&p, &a.family.principle)?;
    let baseline = a.baseline.as_deref().map(read_vector).transpose()?;
    let stats = glmgeom::fit_statistics(&p, &fit, baseline.as_ref())?;
    Ok(Output::Json(json!({ "fit": fit, "statistics": stats })))
}

fn glm_compare(a: &GlmCompareArgs) -> Result<Output> {
    let p = problem(&a.family, &a.design_a)?;
    let design_m = read_matrix(&a.design_m)?;
    let anchor = match a.wald_anchor.as_str() {
        "restricted" => WaldAnchor::Restricted,
        _ => WaldAnchor::Embedding,
    };
    let (fit_a, fit_m, cmp) = glmgeom::fit_and_compare(&p, &design_m, &a.method, &a.family.principle, anchor)?;
    Ok(Output::Json(json!({ "fit_a": fit_a, "fit_m": fit_m, "comparison": cmp })))
}

fn curve(a: &CurveArgs) -> Result<Output> {
    let s = summary(&a.summary)?;
    let engine: Box<dyn CompatEngine> = match a.half_width {
        Some(w) => Box::new(IntervalEngine::new(s, w, &a.method)?),
        None => Box::new(NormalMeanEngine { summary: s }),
    };
    let curve = pvalue_function(engine.as_ref(), &GridSpec { lo: a.lo, hi: a.hi, steps: a.steps })?;
    let interval = a.pi.map(|pi| compatibility_interval(engine.as_ref(), pi)).transpose()?;
    if a.format == "json" {
        return Ok(Output::Json(json!({ "curve": curve, "interval": interval })));
    }
    let mut text = curve.to_csv();
    if let Some(ci) = interval {
        text.push_str(&format!("\npi,lo,hi,empty\n{},{},{},{}\n", fmt_sci(ci.pi), fmt_sci(ci.lo), fmt_sci(ci.hi), ci.empty));
    }
    Ok(Output::Text(text))
}

fn power(a: &mut PowerArgs) -> Result<Output> {
    let mut cfg: PowerConfig = read_json(&a.sim.config)?;
    cfg.seed = resolve_seed(&mut a.sim, cfg.seed);
    if let Some(target) = a.target_power {
        cfg.alt = simlab::calibrate_alt_for_hl_power(&cfg.interval, cfg.sigma, cfg.n, cfg.alpha, target)?;
    }
    let report = simlab::power_comparison(&cfg)?;
    let (hl, div) = simlab::analytic_power(cfg.alt, &cfg.interval, cfg.sigma, cfg.n, cfg.alpha)?;
    Ok(Output::Json(json!({
        "config": cfg,
        "report": report,
        "analytic": { "power_hl": hl, "power_divergence": div },
    })))
}
