use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::DataError;

/// One purchase-order line.
///
/// The supplier location is kept as its two parts; [`ProductOrder::supplier_location`]
/// gives the combined categorical value used for modelling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductOrder {
    pub order_id: String,
    pub part_number: String,
    pub supplier_code: String,
    pub supplier_country: String,
    pub supplier_city: String,
    pub product_cost: f64,
    pub product_amount: u32,
    pub product_details: String,
    pub contract_delivery_time: Option<u32>,
    pub order_creation_date: NaiveDate,
    pub latest_need_by_date: NaiveDate,
    pub latest_promised_date: NaiveDate,
    pub approval_date: NaiveDate,
    pub availability_date: Option<NaiveDate>,
}

/// Separator between country and city in the combined location category.
pub const LOCATION_SEPARATOR: char = '|';

/// Day offsets of the three dated features, counted from the creation date.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DateOffsets {
    pub need_by_days: i64,
    pub promised_days: i64,
    pub approval_days: i64,
}

impl ProductOrder {
    pub fn supplier_location(&self) -> String {
        format!("{}{}{}", self.supplier_country, LOCATION_SEPARATOR, self.supplier_city)
    }

    pub fn date_offsets(&self) -> DateOffsets {
        let pocd = self.order_creation_date;
        DateOffsets {
            need_by_days: days_between(pocd, self.latest_need_by_date),
            promised_days: days_between(pocd, self.latest_promised_date),
            approval_days: days_between(pocd, self.approval_date),
        }
    }

    /// Shift every date of the order by `days` (negative moves backwards).
    pub fn shifted(&self, days: i64) -> ProductOrder {
        let shift = |d: NaiveDate| d + chrono::Duration::days(days);
        ProductOrder {
            order_creation_date: shift(self.order_creation_date),
            latest_need_by_date: shift(self.latest_need_by_date),
            latest_promised_date: shift(self.latest_promised_date),
            approval_date: shift(self.approval_date),
            availability_date: self.availability_date.map(shift),
            ..self.clone()
        }
    }
}

/// Whole calendar days from `from` to `to`.
pub fn days_between(from: NaiveDate, to: NaiveDate) -> i64 {
    (to - from).num_days()
}

/// Days from order creation to availability: the regression target.
pub fn derive_target(order: &ProductOrder) -> Result<i64, DataError> {
    let available = order
        .availability_date
        .ok_or_else(|| DataError::TargetUnavailable(order.order_id.clone()))?;
    let days = days_between(order.order_creation_date, available);
    if days < 0 {
        return Err(DataError::InvalidRecord {
            order_id: order.order_id.clone(),
            reason: Violation::NegativeLeadTime.to_string(),
        });
    }
    Ok(days)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyOrderId,
    NegativeCost,
    NonFiniteCost,
    ZeroAmount,
    NeedByBeforeCreation,
    PromisedBeforeCreation,
    NegativeLeadTime,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            Violation::EmptyOrderId => "order id must not be empty",
            Violation::NegativeCost => "cost must be ≥ 0",
            Violation::NonFiniteCost => "cost must be finite",
            Violation::ZeroAmount => "amount must be ≥ 1",
            Violation::NeedByBeforeCreation => "need-by date before creation date",
            Violation::PromisedBeforeCreation => "promised date before creation date",
            Violation::NegativeLeadTime => "negative lead time",
        };
        f.write_str(msg)
    }
}

/// Every invariant the order breaks; `Ok(())` when there are none.
pub fn validate_order(order: &ProductOrder) -> Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    if order.order_id.is_empty() {
        violations.push(Violation::EmptyOrderId);
    }
    if !order.product_cost.is_finite() {
        violations.push(Violation::NonFiniteCost);
    } else if order.product_cost < 0.0 {
        violations.push(Violation::NegativeCost);
    }
    if order.product_amount < 1 {
        violations.push(Violation::ZeroAmount);
    }
    if order.latest_need_by_date < order.order_creation_date {
        violations.push(Violation::NeedByBeforeCreation);
    }
    if order.latest_promised_date < order.order_creation_date {
        violations.push(Violation::PromisedBeforeCreation);
    }
    if matches!(order.availability_date, Some(a) if a < order.order_creation_date) {
        violations.push(Violation::NegativeLeadTime);
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

#[cfg(test)]
pub(crate) fn sample_order() -> ProductOrder {
    let d = |s: &str| NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap();
    ProductOrder {
        order_id: "PO-1".into(),
        part_number: "P-100".into(),
        supplier_code: "S-7".into(),
        supplier_country: "China".into(),
        supplier_city: "Shanghai".into(),
        product_cost: 1250.5,
        product_amount: 3,
        product_details: "Electronic Systems/Electrical".into(),
        contract_delivery_time: Some(30),
        order_creation_date: d("2021-03-01"),
        latest_need_by_date: d("2021-04-10"),
        latest_promised_date: d("2021-03-20"),
        approval_date: d("2021-03-03"),
        availability_date: Some(d("2021-03-15")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn date(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    #[test]
    fn target_is_day_count() {
        let mut o = sample_order();
        assert_eq!(derive_target(&o).unwrap(), 14);
        o.availability_date = Some(date("2021-03-01"));
        assert_eq!(derive_target(&o).unwrap(), 0);
    }

    #[test]
    fn target_across_year_boundary() {
        // Dec 25 → Dec 31 is 6 days, plus 5 days into January.
        let expected = (31 - 25) + 5;
        let mut o = sample_order();
        o.order_creation_date = date("2020-12-25");
        o.latest_need_by_date = date("2021-01-20");
        o.latest_promised_date = date("2021-01-10");
        o.approval_date = date("2020-12-28");
        o.availability_date = Some(date("2021-01-05"));
        assert_eq!(derive_target(&o).unwrap(), expected);
    }

    #[test]
    fn target_errors() {
        let mut o = sample_order();
        o.availability_date = None;
        assert!(matches!(derive_target(&o), Err(DataError::TargetUnavailable(_))));
        o.availability_date = Some(date("2021-02-27"));
        assert!(matches!(derive_target(&o), Err(DataError::InvalidRecord { .. })));
    }

    #[test]
    fn offsets_count_from_creation() {
        let off = sample_order().date_offsets();
        assert_eq!(off.need_by_days, 40);
        assert_eq!(off.promised_days, 19);
        assert_eq!(off.approval_days, 2);
    }

    #[test]
    fn validation_reports_violations() {
        assert!(validate_order(&sample_order()).is_ok());

        let mut o = sample_order();
        o.product_amount = 0;
        let v = validate_order(&o).unwrap_err();
        assert_eq!(v, vec![Violation::ZeroAmount]);
        assert_eq!(v[0].to_string(), "amount must be ≥ 1");

        let mut o = sample_order();
        o.availability_date = Some(date("2021-02-01"));
        let v = validate_order(&o).unwrap_err();
        assert_eq!(v, vec![Violation::NegativeLeadTime]);
        assert_eq!(v[0].to_string(), "negative lead time");

        let mut o = sample_order();
        o.product_cost = -1.0;
        o.latest_promised_date = date("2021-01-01");
        assert_eq!(
            validate_order(&o).unwrap_err(),
            vec![Violation::NegativeCost, Violation::PromisedBeforeCreation]
        );
    }

    #[test]
    fn location_joins_country_and_city() {
        assert_eq!(sample_order().supplier_location(), "China|Shanghai");
    }

    proptest! {
        #[test]
        fn target_is_translation_invariant(shift in -2000i64..2000) {
            let o = sample_order();
            prop_assert_eq!(derive_target(&o.shifted(shift)).unwrap(), derive_target(&o).unwrap());
            prop_assert_eq!(o.shifted(shift).date_offsets(), o.date_offsets());
        }
    }
}
