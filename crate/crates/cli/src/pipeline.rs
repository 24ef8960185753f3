use std::fmt::Write as _;

use chrono::{Days, NaiveDate};
use leadtime::data::{order_raw_row, read_orders_path, write_orders, DiagnosticKind, ProductOrder, RawValue};
use leadtime::evaluation::{comparison_report, EvaluationReport};
use leadtime::model::{train, Family, TrainedModel};
use leadtime::planning::{
    build_load_profile, lanes_of, select_for, write_decisions_csv, write_load_profiles_csv, DateInputs, Horizon,
    LoadProfile, PlannedOrder, PlanningDecision,
};
use leadtime::preprocess::{column_meta, encode_features, encode_orders, split, SplitPlan};
use leadtime::seed::derive_seed;
use leadtime::synth::generate;
use leadtime::tree::FeatureImportance;
use leadtime::tuning::{random_grid_search, HyperGrid, TuneError, TuneResult};
use serde::Serialize;

use crate::artifacts::{ArtifactWriter, Manifest};
use crate::config::RunConfig;
use crate::CliError;

/// Pipeline stages in execution order. Running a stage runs everything
/// before it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Synth,
    Encode,
    Tune,
    Train,
    Evaluate,
    Predict,
    Plan,
    Report,
}

/// In-memory results of a run, next to what was written to disk.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub manifest: Manifest,
    pub n_orders: usize,
    pub n_labeled: usize,
    pub split: Option<SplitPlan>,
    pub tune: Vec<TuneResult>,
    pub models: Vec<TrainedModel>,
    pub report: Option<EvaluationReport>,
    pub importance: Vec<(Family, FeatureImportance)>,
    /// Families dropped because tuning or the final fit failed.
    pub failed: Vec<(Family, String)>,
    pub predictions: Vec<Prediction>,
    pub decisions: Vec<(String, PlanningDecision)>,
    pub profiles: Vec<LoadProfile>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub order_id: String,
    pub split: &'static str,
    pub model: String,
    pub predicted_days: f64,
    pub forecast_date: NaiveDate,
}

/// What the run used, minus machine-specific paths and the worker count.
#[derive(Serialize)]
struct RunRecord<'a> {
    seed: u64,
    input_sha256: Option<String>,
    ratio: f64,
    folds: usize,
    families: &'a [Family],
    candidates: usize,
    generator: Option<&'a leadtime::synth::GeneratorConfig>,
    max_bad_rows: usize,
    bins: usize,
    grid: &'a HyperGrid,
    plan: PlanRecord<'a>,
}

#[derive(Serialize)]
struct PlanRecord<'a> {
    as_of: Option<NaiveDate>,
    horizon: usize,
    granularity: leadtime::planning::Granularity,
    lanes: &'a leadtime::planning::LaneMap,
}

/// Seeds for the independent random streams of a run.
const SPLIT_STREAM: u64 = 1;
const TUNE_STREAM: u64 = 100;

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<(), csv::Error>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| CliError::Data(e.to_string()))?;
    Ok(buf)
}

/// Run every stage up to and including `upto` inside a pool of
/// `cfg.workers` threads.
pub fn run_pipeline(cfg: &RunConfig, upto: Stage) -> Result<RunOutput, CliError> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} workers: {e}", cfg.workers)))?;
    pool.install(|| run_stages(cfg, upto))
}

fn run_stages(cfg: &RunConfig, upto: Stage) -> Result<RunOutput, CliError> {
    let seed = cfg.seed()?;
    let grid = cfg.load_grid()?;
    let lanes = cfg.load_lanes()?;
    let mut out = ArtifactWriter::new(&cfg.out)?;
    let mut result = RunOutput::default();

    let use_generator = cfg.input.is_none() || upto == Stage::Synth;
    let input_sha256 = match (&cfg.input, use_generator) {
        (Some(p), false) => {
            let bytes = std::fs::read(p).map_err(|e| CliError::io(p, e))?;
            Some(hex::encode(<sha2::Sha256 as sha2::Digest>::digest(&bytes)))
        }
        _ => None,
    };
    let mut generator = cfg.generator.clone();
    generator.seed = seed;
    out.write_json(
        "run.json",
        &RunRecord {
            seed,
            input_sha256,
            ratio: cfg.ratio,
            folds: cfg.folds,
            families: &cfg.families,
            candidates: cfg.candidates,
            generator: use_generator.then_some(&generator),
            max_bad_rows: cfg.max_bad_rows,
            bins: cfg.bins,
            grid: &grid,
            plan: PlanRecord {
                as_of: cfg.plan.as_of,
                horizon: cfg.plan.horizon,
                granularity: cfg.plan.granularity,
                lanes: &lanes,
            },
        },
    )?;

    // Orders.
    let orders: Vec<ProductOrder> = if use_generator {
        let g = generate(&generator).map_err(|e| CliError::Usage(e.to_string()))?;
        let orders = g.dataset.into_orders();
        let mut buf = Vec::new();
        write_orders(&mut buf, &orders).map_err(|e| CliError::Data(e.to_string()))?;
        out.write("data/orders.csv", &buf)?;
        out.write("data/ground_truth.csv", &csv_bytes(|b| g.ground_truth.write_csv(b))?)?;
        orders
    } else {
        let path = cfg.input.as_ref().expect("input checked");
        let ingested = read_orders_path(path).map_err(|e| CliError::Data(e.to_string()))?;
        out.write(
            "data/diagnostics.csv",
            &csv_bytes(|b| {
                let mut w = csv::Writer::from_writer(b);
                w.write_record(["line", "kind", "order_id", "message"])?;
                for d in &ingested.diagnostics {
                    let kind = match d.kind {
                        DiagnosticKind::Malformed => "malformed",
                        DiagnosticKind::Dropped => "dropped",
                    };
                    w.write_record([
                        d.line.to_string(),
                        kind.into(),
                        d.order_id.clone().unwrap_or_default(),
                        d.message.clone(),
                    ])?;
                }
                w.flush()?;
                Ok(())
            })?,
        )?;
        let bad = ingested.malformed_rows();
        if bad > cfg.max_bad_rows {
            result.manifest = out.finish()?;
            return Err(CliError::Data(format!(
                "{bad} input rows could not be parsed (limit {}); see data/diagnostics.csv",
                cfg.max_bad_rows
            )));
        }
        ingested.dataset.into_orders()
    };
    result.n_orders = orders.len();
    if upto == Stage::Synth {
        result.manifest = out.finish()?;
        return Ok(result);
    }

    // Encode: labeled orders only; the schema is learned on training rows.
    let labeled: Vec<ProductOrder> = orders
        .iter()
        .filter(|o| o.availability_date.is_some())
        .cloned()
        .collect();
    result.n_labeled = labeled.len();
    let plan = split(labeled.len(), cfg.ratio, cfg.folds, derive_seed(seed, SPLIT_STREAM))
        .map_err(|e| CliError::Data(e.to_string()))?;
    let data = encode_orders(&labeled, &plan.train).map_err(|e| CliError::Data(e.to_string()))?;
    let train_set = data.select_rows(&plan.train);
    let test_set = data.select_rows(&plan.test);
    out.write_json("data/split.json", &plan)?;
    out.write_json("data/schema.json", data.schema())?;
    out.write_json(
        "data/columns.json",
        &serde_json::json!({ "fingerprint": data.fingerprint(), "columns": data.column_meta() }),
    )?;
    out.write("data/encoded_train.csv", &csv_bytes(|b| train_set.write_csv(b))?)?;
    out.write("data/encoded_test.csv", &csv_bytes(|b| test_set.write_csv(b))?)?;
    result.split = Some(plan.clone());
    if upto == Stage::Encode {
        result.manifest = out.finish()?;
        return Ok(result);
    }

    // Tune.
    for (i, &family) in cfg.families.iter().enumerate() {
        let tseed = derive_seed(seed, TUNE_STREAM + i as u64);
        match random_grid_search(family, &grid, cfg.candidates, &data, &plan, tseed) {
            Ok(r) => {
                out.write_json(&format!("tune/{family}.json"), &r)?;
                log::info!("{family}: best CV RMSE {:.4}", r.winner().mean_rmse.unwrap_or(f64::NAN));
                result.tune.push(r);
            }
            Err(e @ (TuneError::EmptyGrid { .. } | TuneError::InvalidGrid { .. })) => {
                return Err(CliError::Usage(e.to_string()));
            }
            Err(e) => {
                log::error!("{family}: tuning failed: {e}");
                result.failed.push((family, e.to_string()));
            }
        }
    }
    if result.tune.is_empty() {
        result.manifest = out.finish()?;
        return Err(CliError::Training("every model family failed to tune".into()));
    }
    if upto == Stage::Tune {
        result.manifest = out.finish()?;
        return Ok(result);
    }

    // Train winners on all training rows, then compare on the test split.
    for r in &result.tune {
        let w = r.winner();
        match train(&w.hyperparams, &train_set, w.seed) {
            Ok(m) => {
                out.write_json(&format!("models/{}.json", r.family), &m)?;
                result.models.push(m);
            }
            Err(e) => {
                log::error!("{}: final fit failed: {e}", r.family);
                result.failed.push((r.family, e.to_string()));
            }
        }
    }
    if result.models.is_empty() {
        result.manifest = out.finish()?;
        return Err(CliError::Training("no model could be fitted".into()));
    }
    let report = comparison_report(&result.models, &train_set, &test_set, cfg.bins)
        .map_err(|e| CliError::Training(e.to_string()))?;
    out.write_json("report/report.json", &report)?;
    result.report = Some(report);
    if upto == Stage::Train {
        result.manifest = out.finish()?;
        return Ok(result);
    }

    // Evaluate: plot payloads and importance.
    let report = result.report.as_ref().expect("report built");
    let dir = out.root().join("report");
    for path in report.write_artifacts(&dir).map_err(|e| CliError::io(&dir, e))? {
        out.adopt(&path)?;
    }
    for m in &result.models {
        if let Some(fi) = m.feature_importance(data.column_meta()) {
            out.write(
                &format!("importance/{}.csv", m.family),
                &csv_bytes(|b| fi.write_csv(b))?,
            )?;
            result.importance.push((m.family, fi));
        }
    }
    if upto == Stage::Evaluate {
        result.manifest = out.finish()?;
        return Ok(result);
    }

    // Predict every order, labeled or not, with the best-ranked model.
    let best_name = report.ranking[0].clone();
    let best_idx = report
        .models
        .iter()
        .position(|m| m.name == best_name)
        .expect("ranked model exists");
    let best = &result.models[best_idx];
    let raw: Vec<Vec<RawValue>> = orders.iter().map(order_raw_row).collect();
    let features = encode_features(data.schema(), &raw).map_err(|e| CliError::Data(e.to_string()))?;
    debug_assert_eq!(features.column_meta, column_meta(data.schema()));
    let predicted = best
        .predict_matrix(features.matrix.view())
        .map_err(|e| CliError::Training(e.to_string()))?;
    let mut role = std::collections::HashMap::new();
    for &i in &plan.train {
        role.insert(labeled[i].order_id.as_str(), "train");
    }
    for &i in &plan.test {
        role.insert(labeled[i].order_id.as_str(), "test");
    }
    result.predictions = orders
        .iter()
        .zip(predicted.iter())
        .map(|(o, &p)| Prediction {
            order_id: o.order_id.clone(),
            split: role.get(o.order_id.as_str()).copied().unwrap_or("unlabeled"),
            model: best_name.clone(),
            predicted_days: p,
            forecast_date: forecast_date(o.order_creation_date, p),
        })
        .collect();
    out.write(
        "predictions/predictions.csv",
        &csv_bytes(|b| {
            let mut w = csv::Writer::from_writer(b);
            for p in &result.predictions {
                w.serialize(p)?;
            }
            w.flush()?;
            Ok(())
        })?,
    )?;
    if upto == Stage::Predict {
        result.manifest = out.finish()?;
        return Ok(result);
    }

    // Plan the orders still open on the as-of date.
    let as_of = cfg
        .plan
        .as_of
        .or_else(|| orders.iter().map(|o| o.order_creation_date).max())
        .ok_or_else(|| CliError::Data("no orders to plan".into()))?;
    let mut planned = Vec::new();
    for (o, p) in orders.iter().zip(&result.predictions) {
        if o.order_creation_date > as_of || o.availability_date.is_some_and(|a| a <= as_of) {
            continue;
        }
        let inputs = known_dates(o, p.forecast_date, as_of);
        inputs
            .check(&o.order_id, o.order_creation_date)
            .map_err(|e| CliError::Data(e.to_string()))?;
        let decision = select_for(&o.order_id, &inputs).map_err(|e| CliError::Data(e.to_string()))?;
        result.decisions.push((o.order_id.clone(), decision));
        planned.push(PlannedOrder {
            order_id: o.order_id.clone(),
            origin: o.supplier_location(),
            amount: o.product_amount,
            decision,
        });
    }
    let horizon = Horizon {
        start: as_of,
        periods: cfg.plan.horizon,
        granularity: cfg.plan.granularity,
    };
    for lane in lanes_of(&planned, &lanes) {
        result
            .profiles
            .push(build_load_profile(&planned, &lane, &lanes, &horizon).map_err(|e| CliError::Usage(e.to_string()))?);
    }
    out.write(
        "planning/decisions.csv",
        &csv_bytes(|b| write_decisions_csv(b, &result.decisions))?,
    )?;
    out.write(
        "planning/load_profile.csv",
        &csv_bytes(|b| write_load_profiles_csv(b, &result.profiles))?,
    )?;
    out.write(
        "planning/overflow.csv",
        &csv_bytes(|b| {
            let mut w = csv::Writer::from_writer(b);
            w.write_record(["lane", "order_id"])?;
            for p in &result.profiles {
                for id in &p.overflow {
                    w.write_record([p.lane.to_string(), id.clone()])?;
                }
            }
            w.flush()?;
            Ok(())
        })?,
    )?;
    if upto == Stage::Plan {
        result.manifest = out.finish()?;
        return Ok(result);
    }

    out.write("report/summary.md", summary_markdown(&result, as_of).as_bytes())?;
    result.manifest = out.finish()?;
    Ok(result)
}

/// Creation date plus the prediction rounded half away from zero. Negative
/// predictions are clamped so the forecast never precedes the order.
pub fn forecast_date(pocd: NaiveDate, predicted_days: f64) -> NaiveDate {
    let days = predicted_days.round().max(0.0) as u64;
    pocd + Days::new(days)
}

/// Dates a planner would know on `as_of`: the pick-up notice arrives at
/// most two days ahead and the promise once the order is approved.
pub fn known_dates(order: &ProductOrder, forecast: NaiveDate, as_of: NaiveDate) -> DateInputs {
    DateInputs {
        pickup_date: order.availability_date.filter(|&a| a <= as_of + Days::new(2)),
        promised_date: (order.approval_date <= as_of).then_some(order.latest_promised_date),
        forecast_date: Some(forecast),
    }
}

fn summary_markdown(r: &RunOutput, as_of: NaiveDate) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Run summary\n");
    let _ = writeln!(s, "Orders: {} ({} labeled)\n", r.n_orders, r.n_labeled);
    if let Some(report) = &r.report {
        let _ = writeln!(s, "## Test ranking\n");
        let _ = writeln!(
            s,
            "| rank | model | test RMSE | test MAE | test R² | train RMSE | train R² |"
        );
        let _ = writeln!(s, "|---|---|---|---|---|---|---|");
        for (i, name) in report.ranking.iter().enumerate() {
            let m = report.get(name).expect("ranked model");
            let r2 = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.4}"));
            let _ = writeln!(
                s,
                "| {} | {} | {:.4} | {:.4} | {} | {:.4} | {} |",
                i + 1,
                name,
                m.test.rmse,
                m.test.mae,
                r2(m.test.r2),
                m.train.rmse,
                r2(m.train.r2)
            );
        }
        s.push('\n');
    }
    if !r.failed.is_empty() {
        let _ = writeln!(s, "## Failed families\n");
        for (f, e) in &r.failed {
            let _ = writeln!(s, "- {f}: {e}");
        }
        s.push('\n');
    }
    for (family, fi) in &r.importance {
        let _ = writeln!(s, "## {family} feature importance\n");
        for (name, pct) in fi.ranked().iter().take(5) {
            let _ = writeln!(s, "- {name}: {pct:.2}%");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "## Planning as of {as_of}\n");
    let count = |src| r.decisions.iter().filter(|(_, d)| d.source == src).count();
    use leadtime::planning::DateSource::*;
    let _ = writeln!(
        s,
        "{} open orders: {} short range, {} medium range, {} long range; {} lanes.",
        r.decisions.len(),
        count(ShortRange),
        count(MediumRange),
        count(LongRange),
        r.profiles.len()
    );
    s
}
