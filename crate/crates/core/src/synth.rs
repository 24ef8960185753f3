//! Synthetic order generator with a known availability function.
//!
//! Each supplier has a base lead time, a capacity and a delay incurred when
//! an order's amount exceeds that capacity; each part belongs to a product
//! family that stretches lead times multiplicatively. Suppliers quote a
//! promised date from their nominal lead time (base × family factor) minus
//! an optimism bias plus an order-level workload term, and ignore their own
//! capacity. The noiseless availability is
//!
//! ```text
//! nominal + capacity_delay·[amount > capacity] + PULL · (promised + optimism − nominal)
//! ```
//!
//! so the promised date is the strongest single predictor while the capacity
//! threshold and the supplier × family product stay out of reach of a
//! first-order linear model.
//!
//! Cost is log-normal per part times the amount, amounts are 1 + geometric.
//! Neither distribution is calibrated against real data.

use std::collections::BTreeMap;
use std::io::Write;

use chrono::{Datelike, Duration, NaiveDate};
use rand::Rng;
use rand_distr::{Distribution, Geometric, LogNormal, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{validate_order, Dataset, ProductOrder, Provenance};
use crate::seed::rng_from_seed;

/// Weight of the promised-date signal in the ground truth.
pub const PROMISE_PULL: f64 = 0.5;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid generator config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub n_orders: usize,
    pub n_suppliers: usize,
    pub n_parts: usize,
    pub n_locations: usize,
    pub missing_contract_rate: f64,
    pub batching_rate: f64,
    pub noise_std_days: f64,
    pub seed: u64,
    pub start_date: NaiveDate,
    /// Exclusive upper bound for creation dates.
    pub end_date: NaiveDate,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_orders: 2000,
            n_suppliers: 25,
            n_parts: 60,
            n_locations: 12,
            missing_contract_rate: 0.5,
            batching_rate: 0.2,
            noise_std_days: 3.0,
            seed: 0,
            start_date: NaiveDate::from_ymd_opt(2019, 7, 1).unwrap(),
            end_date: NaiveDate::from_ymd_opt(2022, 12, 31).unwrap(),
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let err = |m: &str| Err(SynthError::Config(m.into()));
        if self.n_orders == 0 || self.n_suppliers == 0 || self.n_parts == 0 || self.n_locations == 0 {
            return err("order, supplier, part and location counts must be positive");
        }
        for (name, r) in [
            ("missing_contract_rate", self.missing_contract_rate),
            ("batching_rate", self.batching_rate),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return Err(SynthError::Config(format!("{name} must lie in [0, 1], got {r}")));
            }
        }
        if !(self.noise_std_days >= 0.0 && self.noise_std_days.is_finite()) {
            return err("noise_std_days must be a finite value ≥ 0");
        }
        if self.start_date >= self.end_date {
            return err("date range is empty: start must precede end");
        }
        Ok(())
    }
}

/// Noiseless availability days per order, before batching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    pub order_ids: Vec<String>,
    pub true_days: Vec<i64>,
}

impl GroundTruth {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["order_id", "true_days"])?;
        for (id, d) in self.order_ids.iter().zip(&self.true_days) {
            wtr.write_record([id.as_str(), &d.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub dataset: Dataset,
    pub ground_truth: GroundTruth,
}

const LOCATIONS: &[(&str, &str)] = &[
    ("China", "Shanghai"),
    ("China", "Suzhou"),
    ("China", "Tianjin"),
    ("South Korea", "Busan"),
    ("South Korea", "Changwon"),
    ("Singapore", "Singapore"),
    ("Japan", "Osaka"),
    ("India", "Pune"),
    ("India", "Chennai"),
    ("Vietnam", "Hai Phong"),
    ("Malaysia", "Penang"),
    ("Thailand", "Rayong"),
    ("Belgium", "Waterloo"),
    ("Canada", "Waterloo"),
    ("Mexico", "Monterrey"),
    ("Germany", "Nuremberg"),
];

const FAMILIES: &[&str] = &[
    "Electronic Systems/Electrical",
    "Electronic Systems/Controls",
    "Mechanical/Valves",
    "Mechanical/Bearings",
    "Mechanical/Fasteners",
    "Castings/Turbine Blades",
    "Castings/Housings",
    "Piping/Flanges",
];

struct Supplier {
    code: String,
    location: usize,
    base_days: f64,
    capacity: u32,
    capacity_delay: f64,
    optimism: f64,
    contract_days: f64,
}

struct Part {
    number: String,
    family: usize,
    unit_cost: f64,
}

/// Generate orders and their ground truth. Deterministic in `config.seed`.
pub fn generate(config: &GeneratorConfig) -> Result<Generated, SynthError> {
    config.validate()?;
    let mut rng = rng_from_seed(config.seed);

    let locations: Vec<(String, String)> = (0..config.n_locations)
        .map(|i| match LOCATIONS.get(i) {
            Some((c, city)) => (c.to_string(), city.to_string()),
            None => (format!("Region {}", i / 4), format!("City {i}")),
        })
        .collect();
    let family_factor: Vec<f64> = FAMILIES.iter().map(|_| rng.random_range(0.6..1.6)).collect();
    let suppliers: Vec<Supplier> = (0..config.n_suppliers)
        .map(|i| {
            let base_days = rng.random_range(15.0..90.0);
            Supplier {
                code: format!("S{:04}", i + 1),
                location: rng.random_range(0..config.n_locations),
                base_days,
                capacity: rng.random_range(4..=12),
                capacity_delay: rng.random_range(15.0..40.0),
                optimism: rng.random_range(0.0..12.0),
                contract_days: base_days * rng.random_range(0.7..1.1),
            }
        })
        .collect();
    let cost_dist = LogNormal::new(200f64.ln(), 1.0).expect("valid log-normal");
    let parts: Vec<Part> = (0..config.n_parts)
        .map(|i| Part {
            number: format!("P{:05}", i + 1),
            family: rng.random_range(0..FAMILIES.len()),
            unit_cost: cost_dist.sample(&mut rng),
        })
        .collect();

    let amount_dist = Geometric::new(0.12).expect("valid geometric");
    let promise_noise = Normal::new(0.0, 6.0).expect("valid normal");
    let span = (config.end_date - config.start_date).num_days();

    let mut orders = Vec::with_capacity(config.n_orders);
    let mut true_days = Vec::with_capacity(config.n_orders);
    for i in 0..config.n_orders {
        let s = &suppliers[rng.random_range(0..suppliers.len())];
        let p = &parts[rng.random_range(0..parts.len())];
        let pocd = config.start_date + Duration::days(rng.random_range(0..span));
        let amount = 1 + amount_dist.sample(&mut rng).min(10_000) as u32;
        let cost = (p.unit_cost * f64::from(amount) * rng.random_range(0.9..1.1) * 100.0).round() / 100.0;

        let nominal = s.base_days * family_factor[p.family];
        let over_capacity = if amount > s.capacity { s.capacity_delay } else { 0.0 };
        let workload = promise_noise.sample(&mut rng);
        let promised_days = (nominal + workload - s.optimism).round().max(0.0);
        let noiseless = nominal + over_capacity + PROMISE_PULL * (promised_days + s.optimism - nominal);
        let noiseless = noiseless.max(0.0);
        let noise = if config.noise_std_days > 0.0 {
            Normal::new(0.0, config.noise_std_days)
                .expect("valid normal")
                .sample(&mut rng)
        } else {
            0.0
        };
        let observed_days = (noiseless + noise).round().max(0.0) as i64;
        let need_by_days = (nominal * rng.random_range(0.7..1.3) + rng.random_range(0.0..20.0))
            .round()
            .max(0.0);
        let approval_days = rng.random_range(0..=10i64);
        let contract = (rng.random::<f64>() >= config.missing_contract_rate).then(|| s.contract_days.round() as u32);

        let (country, city) = &locations[s.location];
        orders.push(ProductOrder {
            order_id: format!("PO-{:06}", i + 1),
            part_number: p.number.clone(),
            supplier_code: s.code.clone(),
            supplier_country: country.clone(),
            supplier_city: city.clone(),
            product_cost: cost,
            product_amount: amount,
            product_details: FAMILIES[p.family].to_string(),
            contract_delivery_time: contract,
            order_creation_date: pocd,
            latest_need_by_date: pocd + Duration::days(need_by_days as i64),
            latest_promised_date: pocd + Duration::days(promised_days as i64),
            approval_date: pocd + Duration::days(approval_days),
            availability_date: Some(pocd + Duration::days(observed_days)),
        });
        true_days.push(noiseless.round() as i64);
    }

    apply_batching(&mut orders, config.batching_rate, &mut rng);

    debug_assert!(orders.iter().all(|o| validate_order(o).is_ok()));
    let ground_truth = GroundTruth {
        order_ids: orders.iter().map(|o| o.order_id.clone()).collect(),
        true_days,
    };
    let dataset = Dataset::new(orders, Provenance::Synthetic).expect("generated ids are unique");
    Ok(Generated { dataset, ground_truth })
}

/// Orders from one supplier created in the same ISO week form a batch; with
/// probability `rate` the whole batch becomes available on its latest date.
fn apply_batching<R: Rng>(orders: &mut [ProductOrder], rate: f64, rng: &mut R) {
    let mut batches: BTreeMap<(String, i32, u32), Vec<usize>> = BTreeMap::new();
    for (i, o) in orders.iter().enumerate() {
        let week = o.order_creation_date.iso_week();
        batches
            .entry((o.supplier_code.clone(), week.year(), week.week()))
            .or_default()
            .push(i);
    }
    for members in batches.values() {
        if rng.random::<f64>() >= rate {
            continue;
        }
        let latest = members
            .iter()
            .filter_map(|&i| orders[i].availability_date)
            .max()
            .expect("generated orders are labeled");
        for &i in members {
            orders[i].availability_date = Some(latest);
        }
    }
}
