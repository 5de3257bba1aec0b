//! JSON and CSV emitters. Both are byte-deterministic for a given result.

use serde_json::{json, Map, Value};

use crate::scenario::{Field, ScenarioResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Display options that never touch the computed values.
#[derive(Debug, Clone, Copy, Default)]
pub struct Display {
    pub degrees: bool,
}

impl Display {
    fn angle(&self, x: f64) -> f64 {
        if self.degrees {
            x.to_degrees()
        } else {
            x
        }
    }
}

fn json_field(f: Field, d: Display) -> Value {
    match f {
        Field::Index(k) => json!(k),
        Field::Real(x) => json!(x),
        Field::Angle(x) => json!(d.angle(x)),
        Field::Complex(z) => json!([z.re, z.im]),
        Field::Null => Value::Null,
    }
}

pub fn to_json_value(result: &ScenarioResult, d: Display) -> Value {
    let records: Vec<Value> = result
        .records
        .iter()
        .map(|r| {
            let mut m = Map::new();
            for (name, f) in &r.fields {
                m.insert((*name).to_string(), json_field(*f, d));
            }
            Value::Object(m)
        })
        .collect();
    json!({
        "metadata": {
            "library": "wvkit",
            "version": env!("CARGO_PKG_VERSION"),
            "kind": result.kind.name(),
            "tolerance": result.settings.tolerance,
            "grid_points": result.settings.grid_points,
            "angle_unit": if d.degrees { "degrees" } else { "radians" },
            "records": result.records.len(),
        },
        "records": records,
    })
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json(result: &ScenarioResult, d: Display) -> String {
    let mut s = serde_json::to_string_pretty(&to_json_value(result, d)).expect("values are finite");
    s.push('\n');
    s
}

fn number(x: f64) -> String {
    ryu::Buffer::new().format_finite(x).to_string()
}

/// Header row then one row per record; complex fields split into `_re` and
/// `_im` columns, nulls left empty.
pub fn to_csv(result: &ScenarioResult, d: Display) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    if let Some(first) = result.records.first() {
        let header: Vec<String> = first
            .fields
            .iter()
            .flat_map(|(name, f)| match f {
                Field::Complex(_) => vec![format!("{name}_re"), format!("{name}_im")],
                _ => vec![(*name).to_string()],
            })
            .collect();
        w.write_record(&header).expect("in-memory write");
    }
    for r in &result.records {
        let row: Vec<String> = r
            .fields
            .iter()
            .flat_map(|(_, f)| match *f {
                Field::Index(k) => vec![k.to_string()],
                Field::Real(x) => vec![number(x)],
                Field::Angle(x) => vec![number(d.angle(x))],
                Field::Complex(z) => vec![number(z.re), number(z.im)],
                Field::Null => vec![String::new()],
            })
            .collect();
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ASCII output")
}

pub fn render(result: &ScenarioResult, format: Format, d: Display) -> String {
    match format {
        Format::Json => to_json(result, d),
        Format::Csv => to_csv(result, d),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::demo_bitflip;
    use crate::scenario::{run_scenario, Settings};

    fn demo() -> ScenarioResult {
        run_scenario(&demo_bitflip(), &Settings::default()).unwrap()
    }

    #[test]
    fn json_reparse_is_idempotent() {
        let text = to_json(&demo(), Display::default());
        let value: Value = serde_json::from_str(&text).unwrap();
        let mut again = serde_json::to_string_pretty(&value).unwrap();
        again.push('\n');
        assert_eq!(text, again);
    }

    #[test]
    fn csv_columns_follow_schema() {
        let text = to_csv(&demo(), Display::default());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 12);
        assert_eq!(
            lines[0],
            "index,p,phi,phase,closed_form_phase,weak_value_re,weak_value_im"
        );
        assert!(lines.iter().all(|l| l.split(',').count() == 7));
        assert!(lines[1].starts_with("0,0.0,1.5707963267948966,"));
    }

    #[test]
    fn csv_numbers_round_trip() {
        let r = demo();
        let text = to_csv(&r, Display::default());
        let row: Vec<&str> = text.lines().nth(4).unwrap().split(',').collect();
        let Field::Angle(phase) = r.records[3].fields[3].1 else {
            panic!()
        };
        assert_eq!(row[3].parse::<f64>().unwrap(), phase);
    }

    #[test]
    fn degrees_only_change_display() {
        let r = demo();
        let rad = to_json_value(&r, Display::default());
        let deg = to_json_value(&r, Display { degrees: true });
        let phase = |v: &Value| v["records"][10]["phase"].as_f64().unwrap();
        assert!((phase(&deg) - phase(&rad).to_degrees()).abs() < 1e-12);
        assert!((phase(&deg) + 45.0).abs() < 1e-9);
        assert_eq!(deg["records"][10]["p"], rad["records"][10]["p"]);
        assert_eq!(deg["metadata"]["angle_unit"], "degrees");
    }

    #[test]
    fn single_point_gives_one_csv_row() {
        let mut cfg = demo_bitflip();
        cfg.sweep.as_mut().unwrap().steps = 1;
        let r = run_scenario(&cfg, &Settings::default()).unwrap();
        assert_eq!(to_csv(&r, Display::default()).lines().count(), 2);
    }
}
