//! Tabular output with numbers printed to 12 significant digits.

use std::io::Write;

use serde_json::Value;

use crate::approx::BoundGap;
use crate::sim::{EnergyRecord, EnergyTable, InfeasibilityTable, Scheme};

/// Significant digits in every printed number.
pub const SIG_DIGITS: usize = 12;

/// `%.12g`: fixed notation for decimal exponents in `[-5, 12)`, scientific
/// otherwise, trailing zeros removed.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-4..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        let m = trim_zeros(mantissa.to_string());
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    t.to_string()
}

/// Rounds every float in a JSON tree to [`SIG_DIGITS`] significant digits.
/// Non-finite values become strings.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap();
            let r: f64 = fmt_sig(x).parse().unwrap();
            serde_json::Number::from_f64(r).map(Value::Number).unwrap_or_else(|| Value::String(fmt_sig(x)))
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".into(), fmt_sig)
}

/// Columns: `sweep_value,scheme,energy,feasible_fraction,seed`.
pub fn write_energy_csv<W: Write>(out: W, table: &EnergyTable) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sweep_value", "scheme", "energy", "feasible_fraction", "seed"])?;
    for r in &table.rows {
        w.write_record([
            fmt_sig(r.sweep_value),
            r.scheme.as_str().to_string(),
            opt(r.mean_energy),
            fmt_sig(r.feasible_fraction),
            table.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns: `sweep_value,scheme,infeasible_probability,std_error,realizations,seed`.
pub fn write_infeasibility_csv<W: Write>(out: W, table: &InfeasibilityTable) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sweep_value", "scheme", "infeasible_probability", "std_error", "realizations", "seed"])?;
    for r in &table.rows {
        w.write_record([
            fmt_sig(r.sweep_value),
            r.scheme.as_str().to_string(),
            fmt_sig(r.probability),
            fmt_sig(r.std_error),
            r.realizations.to_string(),
            table.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per realization and sweep point, one energy column per scheme.
pub fn write_records_csv<W: Write>(out: W, schemes: &[Scheme], records: &[EnergyRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["realization".to_string(), "sweep_value".into(), "h1".into(), "h2".into()];
    header.extend(schemes.iter().map(|s| s.as_str().to_string()));
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![r.realization.to_string(), fmt_sig(r.sweep_value), fmt_sig(r.h1), fmt_sig(r.h2)];
        row.extend(r.energies.iter().map(|e| opt(*e)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One approximation-gap grid cell.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GapRow {
    pub blocklength: f64,
    pub error_prob: f64,
    pub gap: Option<BoundGap>,
}

/// Columns: `blocklength,error_prob,at_sinr,upper_minus_lower_bits,exact_minus_lower_bits`.
pub fn write_gap_csv<W: Write>(out: W, rows: &[GapRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["blocklength", "error_prob", "at_sinr", "upper_minus_lower_bits", "exact_minus_lower_bits"])?;
    for r in rows {
        let g = r.gap;
        w.write_record([
            fmt_sig(r.blocklength),
            fmt_sig(r.error_prob),
            opt(g.map(|g| g.at_sinr)),
            opt(g.map(|g| g.upper_minus_lower_bits)),
            opt(g.map(|g| g.exact_minus_lower_bits)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Two-column `field,value` table from a flat JSON object; nested objects
/// are flattened with dotted keys.
pub fn write_fields_csv<W: Write>(out: W, doc: &Value) -> csv::Result<()> {
    fn walk(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
        match v {
            Value::Object(m) => {
                for (k, v) in m {
                    let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&key, v, rows);
                }
            }
            Value::Array(a) => {
                for (i, v) in a.iter().enumerate() {
                    walk(&format!("{prefix}.{i}"), v, rows);
                }
            }
            Value::Number(n) => {
                let s = match (n.as_u64(), n.as_i64()) {
                    (Some(u), _) => u.to_string(),
                    (_, Some(i)) => i.to_string(),
                    _ => fmt_sig(n.as_f64().unwrap()),
                };
                rows.push((prefix.to_string(), s));
            }
            Value::String(s) => rows.push((prefix.to_string(), s.clone())),
            Value::Bool(b) => rows.push((prefix.to_string(), b.to_string())),
            Value::Null => rows.push((prefix.to_string(), String::new())),
        }
    }
    let mut rows = Vec::new();
    walk("", doc, &mut rows);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["field", "value"])?;
    for (k, v) in rows {
        w.write_record([k, v])?;
    }
    w.flush()?;
    Ok(())
}
