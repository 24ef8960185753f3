//! Planning-date selection (pick-up notice over supplier promise over
//! forecast) and per-lane load profiles.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use chrono::{Datelike, Months, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("order {order_id}: no pick-up, promised or forecast date")]
    NoDate { order_id: String },
    #[error("planning horizon has no periods")]
    EmptyHorizon,
    #[error("order {order_id}: {which} date {date} is before the order creation date {pocd}")]
    BeforeCreation {
        order_id: String,
        which: &'static str,
        date: NaiveDate,
        pocd: NaiveDate,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateInputs {
    pub pickup_date: Option<NaiveDate>,
    pub promised_date: Option<NaiveDate>,
    pub forecast_date: Option<NaiveDate>,
}

impl DateInputs {
    /// Every present date must be on or after the order creation date.
    pub fn check(&self, order_id: &str, pocd: NaiveDate) -> Result<(), PlanError> {
        for (which, d) in [
            ("pick-up", self.pickup_date),
            ("promised", self.promised_date),
            ("forecast", self.forecast_date),
        ] {
            if let Some(date) = d.filter(|d| *d < pocd) {
                return Err(PlanError::BeforeCreation {
                    order_id: order_id.to_string(),
                    which,
                    date,
                    pocd,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DateSource {
    ShortRange,
    MediumRange,
    LongRange,
}

impl DateSource {
    pub fn as_str(self) -> &'static str {
        match self {
            DateSource::ShortRange => "short_range",
            DateSource::MediumRange => "medium_range",
            DateSource::LongRange => "long_range",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanningDecision {
    pub chosen_date: NaiveDate,
    pub source: DateSource,
    /// Only a pick-up notice is final.
    pub subject_to_change: bool,
}

pub fn select_planning_date(inputs: &DateInputs) -> Result<PlanningDecision, PlanError> {
    select_for("", inputs)
}

/// Same as [`select_planning_date`] but names the order in the error.
pub fn select_for(order_id: &str, inputs: &DateInputs) -> Result<PlanningDecision, PlanError> {
    let (chosen_date, source) = if let Some(d) = inputs.pickup_date {
        (d, DateSource::ShortRange)
    } else if let Some(d) = inputs.promised_date {
        (d, DateSource::MediumRange)
    } else if let Some(d) = inputs.forecast_date {
        (d, DateSource::LongRange)
    } else {
        return Err(PlanError::NoDate {
            order_id: order_id.to_string(),
        });
    };
    Ok(PlanningDecision {
        chosen_date,
        source,
        subject_to_change: source != DateSource::ShortRange,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Lane {
    pub origin: String,
    pub destination: String,
}

impl fmt::Display for Lane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.origin, self.destination)
    }
}

/// Destination per supplier location, with a fallback for unlisted ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LaneMap {
    pub default_destination: String,
    pub destinations: BTreeMap<String, String>,
}

impl Default for LaneMap {
    fn default() -> Self {
        LaneMap {
            default_destination: "US".into(),
            destinations: BTreeMap::new(),
        }
    }
}

impl LaneMap {
    pub fn lane_for(&self, origin: &str) -> Lane {
        Lane {
            origin: origin.to_string(),
            destination: self
                .destinations
                .get(origin)
                .unwrap_or(&self.default_destination)
                .clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    #[default]
    Month,
    Week,
}

/// Contiguous periods starting with the one containing `start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Horizon {
    pub start: NaiveDate,
    pub periods: usize,
    pub granularity: Granularity,
}

impl Horizon {
    pub fn months(start: NaiveDate, periods: usize) -> Horizon {
        Horizon {
            start,
            periods,
            granularity: Granularity::Month,
        }
    }

    fn first_period(&self) -> NaiveDate {
        match self.granularity {
            Granularity::Month => self.start.with_day(1).expect("day 1 exists"),
            Granularity::Week => self.start.week(chrono::Weekday::Mon).first_day(),
        }
    }

    pub fn period_starts(&self) -> Vec<NaiveDate> {
        let first = self.first_period();
        (0..self.periods)
            .map(|i| match self.granularity {
                Granularity::Month => first + Months::new(i as u32),
                Granularity::Week => first + chrono::Days::new(7 * i as u64),
            })
            .collect()
    }

    /// Bucket index of `date`, if it falls inside the horizon.
    pub fn bucket_of(&self, date: NaiveDate) -> Option<usize> {
        let first = self.first_period();
        if date < first {
            return None;
        }
        let idx = match self.granularity {
            Granularity::Month => (date.year() - first.year()) as i64 * 12 + date.month() as i64 - first.month() as i64,
            Granularity::Week => (date - first).num_days() / 7,
        } as usize;
        (idx < self.periods).then_some(idx)
    }
}

/// An order ready for load planning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedOrder {
    pub order_id: String,
    pub origin: String,
    pub amount: u32,
    pub decision: PlanningDecision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadBucket {
    pub period_start: NaiveDate,
    pub order_count: usize,
    pub total_amount: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadProfile {
    pub lane: Lane,
    pub horizon: Horizon,
    pub buckets: Vec<LoadBucket>,
    /// Lane orders whose chosen date falls outside the horizon.
    pub overflow: Vec<String>,
}

/// Bucket the orders on `lane` by chosen date. Orders on other lanes are
/// ignored.
pub fn build_load_profile(
    orders: &[PlannedOrder],
    lane: &Lane,
    lanes: &LaneMap,
    horizon: &Horizon,
) -> Result<LoadProfile, PlanError> {
    if horizon.periods == 0 {
        return Err(PlanError::EmptyHorizon);
    }
    let mut buckets: Vec<LoadBucket> = horizon
        .period_starts()
        .into_iter()
        .map(|period_start| LoadBucket {
            period_start,
            order_count: 0,
            total_amount: 0,
        })
        .collect();
    let mut overflow = Vec::new();
    for o in orders.iter().filter(|o| &lanes.lane_for(&o.origin) == lane) {
        match horizon.bucket_of(o.decision.chosen_date) {
            Some(i) => {
                buckets[i].order_count += 1;
                buckets[i].total_amount += u64::from(o.amount);
            }
            None => overflow.push(o.order_id.clone()),
        }
    }
    Ok(LoadProfile {
        lane: lane.clone(),
        horizon: *horizon,
        buckets,
        overflow,
    })
}

/// Every lane used by `orders`, sorted.
pub fn lanes_of(orders: &[PlannedOrder], lanes: &LaneMap) -> Vec<Lane> {
    let mut out: Vec<Lane> = orders.iter().map(|o| lanes.lane_for(&o.origin)).collect();
    out.sort();
    out.dedup();
    out
}

impl LoadProfile {
    /// Component-wise sum of two profiles over the same lane and horizon.
    pub fn combine(&self, other: &LoadProfile) -> Option<LoadProfile> {
        if self.lane != other.lane || self.horizon != other.horizon {
            return None;
        }
        let buckets = self
            .buckets
            .iter()
            .zip(&other.buckets)
            .map(|(a, b)| LoadBucket {
                period_start: a.period_start,
                order_count: a.order_count + b.order_count,
                total_amount: a.total_amount + b.total_amount,
            })
            .collect();
        let mut overflow = self.overflow.clone();
        overflow.extend(other.overflow.iter().cloned());
        Some(LoadProfile {
            lane: self.lane.clone(),
            horizon: self.horizon,
            buckets,
            overflow,
        })
    }
}

/// `lane,period_start,order_count,total_amount` for each profile in turn.
pub fn write_load_profiles_csv<W: Write>(writer: W, profiles: &[LoadProfile]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["lane", "period_start", "order_count", "total_amount"])?;
    for p in profiles {
        for b in &p.buckets {
            w.write_record([
                p.lane.to_string(),
                b.period_start.to_string(),
                b.order_count.to_string(),
                b.total_amount.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `order_id,chosen_date,source,subject_to_change`.
pub fn write_decisions_csv<W: Write>(writer: W, decisions: &[(String, PlanningDecision)]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["order_id", "chosen_date", "source", "subject_to_change"])?;
    for (id, d) in decisions {
        w.write_record([
            id.clone(),
            d.chosen_date.to_string(),
            d.source.as_str().to_string(),
            d.subject_to_change.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
