use std::fs;
use std::path::Path;

use serde_json::{json, Value};
use symchain::bdjump::{
    avoiding_closed_form, figure1_traces, fpt_density_closed_form, hat_transition_probability, stationary_law,
    transition_probability, FIGURE1_AVOIDING_ALPHAS, FIGURE1_FPT_ALPHAS,
};
use symchain::passage::{
    avoiding_probabilities_renewal, avoiding_probabilities_symmetric, build_passage_problem, fpt_density_symmetric,
    fpt_density_volterra,
};
use symchain::similarity::{example2_family, verify_theorem5, SIMILARITY_TOL};
use symchain::simulate::{estimate_avoiding, estimate_fpt_histogram, estimate_transition, simulate_paths};
use symchain::symmetry::{detect_symmetry, DETECT_TOL};
use symchain::table::Table;
use symchain::transient::{stationary, transition_matrices};
use symchain::{
    truncate_bdjump, BdJumpModel, ChainDefinition, Error, GeneratorMatrix, SimilarityWeights, SimulationConfig,
};

use crate::{compare_report, Artifacts, CliError, CliResult, Outcome, RunSpec};

const DEFAULT_UNIFORMIZATION_TOL: f64 = 1e-12;
/// Chains up to this size get every `p_{k,n}` column when no `--k` is given.
const FULL_TABLE_LIMIT: usize = 16;

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|source| CliError::Parse { path: path.to_path_buf(), source })
}

fn model_from_flags(spec: &RunSpec) -> CliResult<BdJumpModel> {
    let o = &spec.options;
    let lambda = o.lambda.unwrap_or(1.0);
    let alpha = o.alpha.ok_or_else(|| CliError::Usage("--alpha is required".into()))?;
    Ok(BdJumpModel::new(lambda, o.mu.unwrap_or(lambda), alpha)?)
}

/// The chain from `--input`, or else the windowed model from the rate flags.
fn load_chain(spec: &RunSpec) -> CliResult<GeneratorMatrix> {
    let o = &spec.options;
    match &o.input {
        Some(path) => {
            let def: ChainDefinition = read_json(path)?;
            Ok(def.realize(o.window)?)
        }
        None if o.alpha.is_some() => Ok(truncate_bdjump(&model_from_flags(spec)?, -o.window, o.window)?),
        None => Err(CliError::Usage("pass --input or the model rates (--lambda, --mu, --alpha)".into())),
    }
}

fn require(value: Option<i64>, flag: &str) -> CliResult<i64> {
    value.ok_or_else(|| CliError::Usage(format!("{flag} is required")))
}

fn tolerance(spec: &RunSpec, default: f64) -> f64 {
    spec.options.tol.unwrap_or(default)
}

fn is_detection_failure(e: &Error) -> bool {
    matches!(e, Error::InconsistentRatios { .. } | Error::StructuralZeroMismatch { .. })
}

pub(crate) fn validate(spec: &RunSpec) -> CliResult<Value> {
    let q = load_chain(spec)?;
    let labels: Vec<i64> = q.space().labels().collect();
    Ok(json!({ "valid": true, "states": q.dim(), "first": labels[0], "last": labels[labels.len() - 1] }))
}

pub(crate) fn symmetry(spec: &RunSpec, out: &mut Artifacts) -> CliResult<Outcome> {
    let q = load_chain(spec)?;
    let tol = tolerance(spec, DETECT_TOL);
    let summary = match detect_symmetry(&q, tol) {
        Ok(det) => {
            out.json("certificate.json", &det.certificate)?;
            json!({
                "symmetric": true,
                "center": det.certificate.center,
                "weights": det.certificate.weights,
                "unconstrained": det.unconstrained,
            })
        }
        Err(e) if is_detection_failure(&e) => {
            let report =
                json!({ "symmetric": false, "reason": CliError::Core(e.clone()).kind(), "message": e.to_string() });
            out.json("violation.json", &report)?;
            report
        }
        Err(e) => return Err(e.into()),
    };
    Ok(Outcome {
        summary,
        parameters: json!({ "window": spec.options.window }),
        tolerances: json!({ "detect": tol }),
        failure: None,
    })
}

pub(crate) fn transient(spec: &RunSpec, out: &mut Artifacts) -> CliResult<Outcome> {
    let q = load_chain(spec)?;
    let tol = tolerance(spec, DEFAULT_UNIFORMIZATION_TOL);
    let p = transition_matrices(&q, spec.grid, tol)?;
    let space = *q.space();
    let rows: Vec<usize> = match spec.options.k {
        Some(k) => vec![space.index_of(k)?],
        None if q.dim() <= FULL_TABLE_LIMIT => (0..q.dim()).collect(),
        None => {
            return Err(CliError::Usage(format!("chain has {} states; pick a start row with --k", q.dim())));
        }
    };
    let mut table = Table::with_time(&spec.grid);
    for &k in &rows {
        for n in 0..q.dim() {
            table.push(format!("p_{}_{}", space.label(k), space.label(n)), p.entry_trace(k, n));
        }
    }
    out.csv("transient.csv", &table)?;

    let stationary_summary = match stationary(&q) {
        Ok(pi) => {
            let report = json!({ "labels": space.labels().collect::<Vec<_>>(), "probs": pi.probs });
            out.json("stationary.json", &report)?;
            report
        }
        Err(Error::Reducible { components }) => json!({ "reducible": components }),
        Err(e) => return Err(e.into()),
    };
    Ok(Outcome {
        summary: json!({ "states": q.dim(), "rows": rows.len(), "stationary": stationary_summary }),
        parameters: json!({ "t_max": spec.grid.t_max(), "steps": spec.grid.steps(), "k": spec.options.k, "window": spec.options.window }),
        tolerances: json!({ "uniformization": tol }),
        failure: None,
    })
}

pub(crate) fn passage(spec: &RunSpec, out: &mut Artifacts) -> CliResult<Outcome> {
    let q = load_chain(spec)?;
    let start = require(spec.options.k, "--k")?;
    let tol = tolerance(spec, DEFAULT_UNIFORMIZATION_TOL);
    let cert = match detect_symmetry(&q, DETECT_TOL) {
        Ok(det) => Some(det.certificate),
        Err(e) if is_detection_failure(&e) => None,
        Err(e) => return Err(e.into()),
    };
    let prob = build_passage_problem(&q, cert)?;
    let p = transition_matrices(&q, spec.grid, tol)?;
    let h = spec.grid.h();
    let compare_tol = 5.0 * h * h;
    let space = *q.space();
    let s = prob.center_index();
    let start_index = space.index_of(start)?;

    let volterra = fpt_density_volterra(&prob, &p, start)?;
    let mut fpt = Table::with_time(&spec.grid);
    fpt.push("g_volterra", volterra.values.clone());
    let mut failures = Vec::new();
    let mut fpt_report = Value::Null;
    if prob.certificate().is_some() {
        let sym = fpt_density_symmetric(&prob, &p, start)?;
        let r = compare_report(&volterra, &sym, compare_tol)?;
        if !r.pass {
            failures.push("fpt".to_string());
        }
        fpt_report = serde_json::to_value(r).expect("serializable");
        fpt.push("g_symmetric", sym.values);
    }
    out.csv("passage_fpt.csv", &fpt)?;

    let targets: Vec<i64> = match spec.options.n {
        Some(n) => vec![n],
        None => (0..q.dim()).filter(|&n| n != s && (n < s) == (start_index < s)).map(|n| space.label(n)).collect(),
    };
    let row = avoiding_probabilities_renewal(&prob, &p, &volterra, start)?;
    let mut avoiding = Table::with_time(&spec.grid);
    let mut avoiding_report = serde_json::Map::new();
    for &n in &targets {
        let renewal = row.trace(n).ok_or(Error::CenterState(n))?;
        avoiding.push(format!("pav_renewal_{n}"), renewal.values.clone());
        if prob.certificate().is_some() {
            let ni = space.index_of(n)?;
            if (ni < s) == (start_index < s) {
                let sym = avoiding_probabilities_symmetric(&prob, &p, start, n)?;
                let r = compare_report(renewal, &sym, compare_tol)?;
                if !r.pass {
                    failures.push(format!("avoiding {n}"));
                }
                avoiding_report.insert(n.to_string(), serde_json::to_value(r).expect("serializable"));
                avoiding.push(format!("pav_symmetric_{n}"), sym.values);
            } else {
                // opposite side: the renewal value must vanish
                let zero = symchain::DensityTrace::from_fn(spec.grid, |_| 0.0);
                let r = compare_report(renewal, &zero, compare_tol)?;
                if !r.pass {
                    failures.push(format!("avoiding {n}"));
                }
                avoiding_report.insert(n.to_string(), serde_json::to_value(r).expect("serializable"));
            }
        }
    }
    out.csv("passage_avoiding.csv", &avoiding)?;

    let report = json!({
        "center": prob.center_label(),
        "start": start,
        "certificate": prob.certificate(),
        "tolerance": compare_tol,
        "fpt": fpt_report,
        "avoiding": avoiding_report,
        "pass": failures.is_empty(),
    });
    out.json("passage_report.json", &report)?;
    Ok(Outcome {
        summary: report,
        parameters: json!({
            "t_max": spec.grid.t_max(), "steps": spec.grid.steps(), "k": start, "n": spec.options.n, "window": spec.options.window
        }),
        tolerances: json!({ "uniformization": tol, "compare": compare_tol, "detect": DETECT_TOL }),
        failure: (!failures.is_empty()).then(|| format!("methods disagree beyond 5h² for {}", failures.join(", "))),
    })
}

pub(crate) fn bdjump(spec: &RunSpec, out: &mut Artifacts) -> CliResult<Outcome> {
    let model = model_from_flags(spec)?;
    let o = &spec.options;
    let k = require(o.k, "--k")?;
    let n = require(o.n, "--n")?;
    let grid = spec.grid;
    let mut table = Table::with_time(&grid);
    let column =
        |f: &dyn Fn(f64) -> symchain::Result<f64>| grid.points().map(f).collect::<symchain::Result<Vec<f64>>>();
    table.push("p", column(&|t| transition_probability(&model, k, n, t, o.quad_tol))?);
    table.push("p_hat", column(&|t| hat_transition_probability(&BdJumpModel { alpha: 0.0, ..model }, k, n, t))?);
    let balanced = model.lambda == model.mu;
    if balanced && k != 0 {
        // the chain is symmetric about 0, so g from k equals g from −k
        table.push("g", column(&|t| fpt_density_closed_form(&model, k.abs(), t, o.series_tol))?);
    }
    if balanced && k != 0 && n != 0 && (k < 0) == (n < 0) {
        table.push("pav", column(&|t| avoiding_closed_form(&model, k, n, t))?);
    }
    out.csv("bdjump.csv", &table)?;
    if model.alpha > 0.0 {
        let labels: Vec<i64> = (-o.window..=o.window).collect();
        let probs = labels.iter().map(|&m| stationary_law(&model, m)).collect::<symchain::Result<Vec<f64>>>()?;
        out.json("stationary.json", &json!({ "labels": labels, "probs": probs }))?;
    }
    Ok(Outcome {
        summary: json!({ "columns": table.header, "rows": table.rows() }),
        parameters: json!({
            "lambda": model.lambda, "mu": model.mu, "alpha": model.alpha, "k": k, "n": n,
            "t_max": grid.t_max(), "steps": grid.steps(), "window": o.window
        }),
        tolerances: json!({ "quad": o.quad_tol, "series": o.series_tol }),
        failure: None,
    })
}

pub(crate) fn similarity(spec: &RunSpec, out: &mut Artifacts) -> CliResult<Outcome> {
    let o = &spec.options;
    if let Some(beta_path) = &o.beta {
        let q = load_chain(spec)?;
        let beta: SimilarityWeights = read_json(beta_path)?;
        let beta = SimilarityWeights::new(beta.beta)?;
        let cert = detect_symmetry(&q, tolerance(spec, DETECT_TOL))?.certificate;
        let (qt, xt) = verify_theorem5(&q, &cert, &beta)?;
        let transformed = ChainDefinition::Explicit { space: *qt.space(), q: qt.to_rows() };
        out.json("transformed.json", &transformed)?;
        out.json("certificate.json", &xt)?;
        return Ok(Outcome {
            summary: json!({ "certificate": xt, "states": qt.dim() }),
            parameters: json!({ "beta": beta_path.display().to_string(), "window": o.window }),
            tolerances: json!({ "detect": tolerance(spec, DETECT_TOL), "similarity": SIMILARITY_TOL }),
            failure: None,
        });
    }

    let lambda = o.lambda.unwrap_or(1.0);
    let mu = o.mu.unwrap_or(lambda);
    let eta =
        o.eta.ok_or_else(|| CliError::Usage("pass --beta with --input, or --eta for the birth-death family".into()))?;
    let fam = example2_family(lambda, mu, eta, o.window)?;
    let labels: Vec<i64> = fam.base.space().labels().collect();
    let symmetry_residual = fam.interior_symmetry()?;
    let report = json!({
        "lambda": lambda,
        "mu": mu,
        "eta": eta,
        "labels": labels,
        "beta": fam.beta.beta,
        "birth_rates": labels.iter().map(|&n| fam.birth_rate(n)).collect::<Vec<_>>(),
        "death_rates": labels.iter().map(|&n| fam.death_rate(n)).collect::<Vec<_>>(),
        "weights": fam.transformed_weights(),
        "boundary_rows": fam.boundary_rows,
        "interior_harmonic_residual": fam.interior_residual,
        "interior_symmetry_residual": symmetry_residual,
    });
    out.json("similarity.json", &report)?;
    let transformed = ChainDefinition::Explicit { space: *fam.transformed.space(), q: fam.transformed.to_rows() };
    out.json("transformed.json", &transformed)?;
    let ok = fam.interior_residual <= SIMILARITY_TOL && symmetry_residual <= SIMILARITY_TOL;
    Ok(Outcome {
        summary: json!({
            "interior_harmonic_residual": fam.interior_residual,
            "interior_symmetry_residual": symmetry_residual,
        }),
        parameters: json!({ "lambda": lambda, "mu": mu, "eta": eta, "window": o.window }),
        tolerances: json!({ "similarity": SIMILARITY_TOL }),
        failure: (!ok).then(|| "transformed chain is not symmetric in the interior".to_string()),
    })
}

pub(crate) fn simulate(spec: &RunSpec, out: &mut Artifacts) -> CliResult<Outcome> {
    let q = load_chain(spec)?;
    let o = &spec.options;
    let start = require(o.k, "--k")?;
    let target = require(o.n, "--n")?;
    let grid = spec.grid;
    let config = SimulationConfig::new(o.paths, grid.t_max(), o.seed, start)?;
    let paths = simulate_paths(&q, &config)?;

    let mut table = Table::with_time(&grid);
    let estimates =
        grid.points().map(|t| estimate_transition(&paths, target, t)).collect::<symchain::Result<Vec<_>>>()?;
    table.push("p_hat", estimates.iter().map(|e| e.value).collect());
    table.push("p_se", estimates.iter().map(|e| e.std_error).collect());

    // passage columns relative to the central state when there is one
    let space = *q.space();
    let center = (space.check_reflectable().is_ok() && q.dim() % 2 == 1).then(|| space.label(q.dim() / 2));
    let mut hit_fraction = None;
    if let Some(s) = center.filter(|&s| s != start) {
        if target != s {
            let est =
                grid.points().map(|t| estimate_avoiding(&paths, s, target, t)).collect::<symchain::Result<Vec<_>>>()?;
            table.push("pav_hat", est.iter().map(|e| e.value).collect());
            table.push("pav_se", est.iter().map(|e| e.std_error).collect());
        }
        let hist = estimate_fpt_histogram(&paths, s, grid)?;
        table.push("g_hat", hist.density.values);
        table.push("g_se", hist.std_error);
        hit_fraction = Some(hist.hit_fraction);
    }
    out.csv("simulate.csv", &table)?;
    Ok(Outcome {
        summary: json!({ "paths": paths.len(), "center": center, "hit_fraction": hit_fraction, "columns": table.header }),
        parameters: json!({
            "paths": o.paths, "k": start, "n": target, "t_max": grid.t_max(), "steps": grid.steps(), "window": o.window
        }),
        tolerances: json!({}),
        failure: None,
    })
}

pub(crate) fn figure1(spec: &RunSpec, out: &mut Artifacts) -> CliResult<Outcome> {
    let o = &spec.options;
    let lambda = o.lambda.unwrap_or(1.0);
    let k = o.k.unwrap_or(3);
    let n = o.n.unwrap_or(1);
    let traces = figure1_traces(lambda, k, n, spec.grid, &FIGURE1_FPT_ALPHAS, &FIGURE1_AVOIDING_ALPHAS, o.series_tol)?;
    out.csv("figure1_fpt.csv", &traces.fpt_table())?;
    out.csv("figure1_avoiding.csv", &traces.avoiding_table())?;
    Ok(Outcome {
        summary: json!({ "rows": spec.grid.len(), "files": ["figure1_fpt.csv", "figure1_avoiding.csv"] }),
        parameters: json!({
            "lambda": lambda, "k": k, "n": n, "t_max": spec.grid.t_max(), "steps": spec.grid.steps(),
            "fpt_alphas": FIGURE1_FPT_ALPHAS, "avoiding_alphas": FIGURE1_AVOIDING_ALPHAS
        }),
        tolerances: json!({ "series": o.series_tol }),
        failure: None,
    })
}
