use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hourly experimental prices and loads, in per-kWh and kWh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSeries {
    pub periods: usize,
    pub prices: Vec<f64>,
    pub loads: Vec<f64>,
    pub currency: String,
    pub population: usize,
}

impl ExperimentSeries {
    pub fn new(prices: Vec<f64>, loads: Vec<f64>, currency: impl Into<String>, population: usize) -> Result<Self> {
        if prices.len() != loads.len() {
            return Err(Error::Shape(format!(
                "{} prices but {} loads",
                prices.len(),
                loads.len()
            )));
        }
        if prices.is_empty() {
            return Err(Error::Shape("series is empty".into()));
        }
        if population == 0 {
            return Err(Error::NonPositiveInput("population"));
        }
        if let Some(t) = prices.iter().position(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::InvalidParameter(format!("price in period {} must be > 0", t + 1)));
        }
        if let Some(t) = loads.iter().position(|&l| !(l >= 0.0 && l.is_finite())) {
            return Err(Error::InvalidParameter(format!("load in period {} must be >= 0", t + 1)));
        }
        Ok(ExperimentSeries {
            periods: prices.len(),
            prices,
            loads,
            currency: currency.into(),
            population,
        })
    }

    pub fn total_load(&self) -> f64 {
        self.loads.iter().sum()
    }

    /// `sum_t p(t) load(t)`.
    pub fn billing(&self) -> f64 {
        self.prices.iter().zip(&self.loads).map(|(p, l)| p * l).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum EnergyUnit {
    Kwh,
    Mwh,
}

impl EnergyUnit {
    fn parse(s: &str, column: &str) -> Result<Self> {
        match s {
            "kwh" => Ok(EnergyUnit::Kwh),
            "mwh" => Ok(EnergyUnit::Mwh),
            _ => Err(Error::Unit(format!("column `{column}`: unknown energy unit `{s}`"))),
        }
    }

    fn to_kwh(self) -> f64 {
        match self {
            EnergyUnit::Kwh => 1.0,
            EnergyUnit::Mwh => 1000.0,
        }
    }
}

struct Layout {
    hour: usize,
    price: usize,
    load: usize,
    currency: String,
    price_unit: EnergyUnit,
    load_unit: EnergyUnit,
}

fn layout(headers: &csv::StringRecord) -> Result<Layout> {
    let mut hour = None;
    let mut price = None;
    let mut load = None;
    for (i, raw) in headers.iter().enumerate() {
        let name = raw.trim().to_ascii_lowercase();
        if name == "hour" {
            hour = Some(i);
        } else if let Some(rest) = name.strip_prefix("price_") {
            let (cur, unit) = rest
                .split_once("_per_")
                .ok_or_else(|| Error::Unit(format!("column `{raw}`: expected price_<currency>_per_<unit>")))?;
            if cur.is_empty() {
                return Err(Error::Unit(format!("column `{raw}`: missing currency")));
            }
            price = Some((i, cur.to_ascii_uppercase(), EnergyUnit::parse(unit, raw)?));
        } else if let Some(unit) = name.strip_prefix("load_") {
            load = Some((i, EnergyUnit::parse(unit, raw)?));
        } else if name == "load" || name == "price" {
            return Err(Error::Unit(format!("column `{raw}` declares no unit")));
        }
    }
    let missing = |what: &str| Error::Parse {
        line: 1,
        message: format!("missing `{what}` column"),
    };
    let hour = hour.ok_or_else(|| missing("hour"))?;
    let (price, currency, price_unit) = price.ok_or_else(|| missing("price_<currency>_per_<unit>"))?;
    let (load, load_unit) = load.ok_or_else(|| missing("load_<unit>"))?;
    Ok(Layout {
        hour,
        price,
        load,
        currency,
        price_unit,
        load_unit,
    })
}

/// Parses `hour,price_<cur>_per_<kwh|mwh>,load_<kwh|mwh>` CSV. Prices are
/// converted to per-kWh and loads to kWh. Line numbers in errors count the
/// header as line 1.
pub fn parse_case_data<R: Read>(input: R, population: usize) -> Result<ExperimentSeries> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let layout = layout(reader.headers()?)?;
    let mut prices = Vec::new();
    let mut loads = Vec::new();
    let mut last_hour: Option<f64> = None;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize, name: &str| -> Result<f64> {
            let text = record.get(i).unwrap_or("");
            text.parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!("{name} `{text}` is not a number"),
            })
        };
        let hour = field(layout.hour, "hour")?;
        if last_hour.is_some_and(|h| hour <= h) {
            return Err(Error::Parse {
                line,
                message: format!("hour {hour} does not increase"),
            });
        }
        last_hour = Some(hour);
        let price = field(layout.price, "price")?;
        if !(price > 0.0 && price.is_finite()) {
            return Err(Error::Parse {
                line,
                message: format!("price {price} must be > 0"),
            });
        }
        let load = field(layout.load, "load")?;
        if !(load >= 0.0 && load.is_finite()) {
            return Err(Error::Parse {
                line,
                message: format!("load {load} must be >= 0"),
            });
        }
        prices.push(price / layout.price_unit.to_kwh());
        loads.push(load * layout.load_unit.to_kwh());
    }
    if prices.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "no data rows".into(),
        });
    }
    ExperimentSeries::new(prices, loads, layout.currency, population)
}

pub fn load_case_data(path: impl AsRef<Path>, population: usize) -> Result<ExperimentSeries> {
    parse_case_data(std::fs::File::open(path)?, population)
}
