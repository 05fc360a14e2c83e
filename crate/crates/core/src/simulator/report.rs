use std::collections::BTreeMap;

use super::{normalize_for_plot, SweepResult};
use crate::cost::Dimension;

/// Comma-separated table with a header: signature, model, scale, servers,
/// time/carbon/money of every query, daily totals, qualification.
pub fn to_csv(result: &SweepResult) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ["signature", "model", "scale", "servers"].map(String::from).to_vec();
    for q in &result.queries {
        for d in Dimension::ALL {
            header.push(format!("{q}_{}", d.name()));
        }
    }
    for d in Dimension::ALL {
        header.push(format!("total_{}", d.name()));
    }
    header.extend(["qualified", "violations", "error"].map(String::from));
    w.write_record(&header)?;

    for r in &result.rows {
        let mut rec = vec![r.signature.clone(), r.model.clone(), r.scale.to_string(), r.servers.to_string()];
        for q in &result.queries {
            let c = r.query_cost(q);
            for d in Dimension::ALL {
                rec.push(c.map_or(String::new(), |c| c.get(d).to_string()));
            }
        }
        for d in Dimension::ALL {
            rec.push(if r.error.is_some() { String::new() } else { r.total.get(d).to_string() });
        }
        rec.push(r.qualified.to_string());
        rec.push(r.violations.join("; "));
        rec.push(r.error.clone().unwrap_or_default());
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn to_json(result: &SweepResult) -> String {
    let mut s = serde_json::to_string_pretty(result).expect("sweep results serialize");
    s.push('\n');
    s
}

/// Normalized scores of two dimensions, one series per model with points
/// ordered by scale then servers. An empty sweep gives an empty string.
pub fn emit_plot_data(result: &SweepResult, x: Dimension, y: Dimension) -> String {
    let scores = normalize_for_plot(result);
    if scores.is_empty() {
        return String::new();
    }
    let mut series: BTreeMap<(&str, &str), Vec<_>> = BTreeMap::new();
    for s in &scores {
        series.entry((s.signature.as_str(), s.model.as_str())).or_default().push(s);
    }
    let mut out = format!("model\tsignature\tscale\tservers\t{}\t{}\n", x.name(), y.name());
    for ((signature, model), mut points) in series {
        points.sort_by_key(|p| (p.scale, p.servers));
        for p in points {
            out.push_str(&format!(
                "{model}\t{signature}\t{}\t{}\t{:.6}\t{:.6}\n",
                p.scale,
                p.servers,
                p.get(x),
                p.get(y)
            ));
        }
    }
    out
}
