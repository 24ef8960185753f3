use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{validate_order, DataError, Dataset, ProductOrder, Provenance};

/// One CSV line; the field order is the column order of the format.
#[derive(Debug, Serialize, Deserialize)]
struct OrderRow {
    order_id: String,
    part_number: String,
    supplier_code: String,
    supplier_country: String,
    supplier_city: String,
    product_cost: f64,
    product_amount: u32,
    product_details: String,
    contract_delivery_time: Option<u32>,
    order_creation_date: NaiveDate,
    latest_need_by_date: NaiveDate,
    latest_promised_date: NaiveDate,
    approval_date: NaiveDate,
    availability_date: Option<NaiveDate>,
}

impl From<OrderRow> for ProductOrder {
    fn from(r: OrderRow) -> Self {
        ProductOrder {
            order_id: r.order_id,
            part_number: r.part_number,
            supplier_code: r.supplier_code,
            supplier_country: r.supplier_country,
            supplier_city: r.supplier_city,
            product_cost: r.product_cost,
            product_amount: r.product_amount,
            product_details: r.product_details,
            contract_delivery_time: r.contract_delivery_time,
            order_creation_date: r.order_creation_date,
            latest_need_by_date: r.latest_need_by_date,
            latest_promised_date: r.latest_promised_date,
            approval_date: r.approval_date,
            availability_date: r.availability_date,
        }
    }
}

impl From<&ProductOrder> for OrderRow {
    fn from(o: &ProductOrder) -> Self {
        OrderRow {
            order_id: o.order_id.clone(),
            part_number: o.part_number.clone(),
            supplier_code: o.supplier_code.clone(),
            supplier_country: o.supplier_country.clone(),
            supplier_city: o.supplier_city.clone(),
            product_cost: o.product_cost,
            product_amount: o.product_amount,
            product_details: o.product_details.clone(),
            contract_delivery_time: o.contract_delivery_time,
            order_creation_date: o.order_creation_date,
            latest_need_by_date: o.latest_need_by_date,
            latest_promised_date: o.latest_promised_date,
            approval_date: o.approval_date,
            availability_date: o.availability_date,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    /// The line could not be parsed.
    Malformed,
    /// The line parsed but the record was dropped during cleaning.
    Dropped,
}

#[derive(Debug, Clone, Serialize)]
pub struct RowDiagnostic {
    /// 1-based line number in the source file (header is line 1).
    pub line: u64,
    pub kind: DiagnosticKind,
    pub order_id: Option<String>,
    pub message: String,
}

#[derive(Debug)]
pub struct Ingested {
    pub dataset: Dataset,
    pub diagnostics: Vec<RowDiagnostic>,
}

impl Ingested {
    pub fn malformed_rows(&self) -> usize {
        self.diagnostics
            .iter()
            .filter(|d| d.kind == DiagnosticKind::Malformed)
            .count()
    }
}

/// Parse orders, dropping unparseable lines, invalid records (including
/// negative lead times) and repeated ids. Each drop is logged and reported.
pub fn read_orders<R: Read>(reader: R, provenance: Provenance) -> Result<Ingested, DataError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let mut orders = Vec::new();
    let mut diagnostics = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, rec) in rdr.deserialize::<OrderRow>().enumerate() {
        let line = i as u64 + 2;
        let order: ProductOrder = match rec {
            Ok(row) => row.into(),
            Err(e) => {
                log::warn!("line {line}: malformed row: {e}");
                diagnostics.push(RowDiagnostic {
                    line,
                    kind: DiagnosticKind::Malformed,
                    order_id: None,
                    message: e.to_string(),
                });
                continue;
            }
        };
        if let Err(violations) = validate_order(&order) {
            let message = violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ");
            log::warn!("line {line}: dropping order {}: {message}", order.order_id);
            diagnostics.push(RowDiagnostic {
                line,
                kind: DiagnosticKind::Dropped,
                order_id: Some(order.order_id),
                message,
            });
            continue;
        }
        if !seen.insert(order.order_id.clone()) {
            log::warn!("line {line}: dropping repeated order id {}", order.order_id);
            diagnostics.push(RowDiagnostic {
                line,
                kind: DiagnosticKind::Dropped,
                order_id: Some(order.order_id),
                message: "repeated order id".into(),
            });
            continue;
        }
        orders.push(order);
    }
    Ok(Ingested {
        dataset: Dataset::new(orders, provenance)?,
        diagnostics,
    })
}

pub fn read_orders_path(path: &Path) -> Result<Ingested, DataError> {
    read_orders(File::open(path)?, Provenance::Ingested)
}

pub fn write_orders<W: Write>(writer: W, orders: &[ProductOrder]) -> Result<(), DataError> {
    let mut wtr = csv::Writer::from_writer(writer);
    for o in orders {
        wtr.serialize(OrderRow::from(o))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_orders_path(path: &Path, orders: &[ProductOrder]) -> Result<(), DataError> {
    write_orders(File::create(path)?, orders)
}
