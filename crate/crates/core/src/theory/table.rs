use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRow {
    pub s: usize,
    pub error: f64,
}

/// Experiment description carried in the CSV comment line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TableMetadata {
    pub quantity: Option<String>,
    pub norm: Option<String>,
    pub theta: Option<f64>,
    pub transform: Option<String>,
    pub n: Option<u64>,
    pub s_ref: Option<usize>,
    pub h: Option<f64>,
    pub seed: Option<u64>,
    /// Unrecognized keys, preserved on round trip.
    pub extra: BTreeMap<String, String>,
}

impl TableMetadata {
    fn to_line(&self) -> String {
        let mut pairs: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                pairs.push((k.to_string(), v));
            }
        };
        push("quantity", self.quantity.clone());
        push("norm", self.norm.clone());
        push("theta", self.theta.map(|v| v.to_string()));
        push("transform", self.transform.clone());
        push("n", self.n.map(|v| v.to_string()));
        push("s_ref", self.s_ref.map(|v| v.to_string()));
        push("h", self.h.map(|v| v.to_string()));
        push("seed", self.seed.map(|v| v.to_string()));
        for (k, v) in &self.extra {
            pairs.push((k.clone(), v.clone()));
        }
        let body: Vec<String> = pairs.into_iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("# {}", body.join(";"))
    }

    fn parse_line(line: &str) -> Result<Self> {
        let mut meta = TableMetadata::default();
        let body = line.trim_start_matches('#').trim();
        for pair in body.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = pair.split_once('=').ok_or_else(|| {
                Error::Format(format!("metadata entry '{pair}' is not key=value"))
            })?;
            let (k, v) = (k.trim(), v.trim());
            let num = |what: &str| Error::Format(format!("metadata {what}='{v}' is not a number"));
            match k {
                "quantity" => meta.quantity = Some(v.to_string()),
                "norm" => meta.norm = Some(v.to_string()),
                "theta" => meta.theta = Some(v.parse().map_err(|_| num(k))?),
                "transform" => meta.transform = Some(v.to_string()),
                "n" => meta.n = Some(v.parse().map_err(|_| num(k))?),
                "s_ref" => meta.s_ref = Some(v.parse().map_err(|_| num(k))?),
                "h" => meta.h = Some(v.parse().map_err(|_| num(k))?),
                "seed" => meta.seed = Some(v.parse().map_err(|_| num(k))?),
                _ => {
                    meta.extra.insert(k.to_string(), v.to_string());
                }
            }
        }
        Ok(meta)
    }
}

/// Truncation error per dimension `s`, with the experiment metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTable {
    rows: Vec<ErrorRow>,
    pub metadata: TableMetadata,
}

impl ErrorTable {
    pub fn new(rows: Vec<ErrorRow>, metadata: TableMetadata) -> Result<Self> {
        if let Some(w) = rows.windows(2).find(|w| w[0].s >= w[1].s) {
            return Err(Error::Format(format!(
                "dimensions must increase strictly: {} then {}",
                w[0].s, w[1].s
            )));
        }
        for row in &rows {
            if !row.error.is_finite() || row.error < 0.0 {
                return Err(Error::Format(format!(
                    "error {} at s = {} is not finite and nonnegative",
                    row.error, row.s
                )));
            }
            if row.error == 0.0 && metadata.s_ref.is_some_and(|r| r != row.s) {
                return Err(Error::Format(format!(
                    "zero error at s = {} below the reference dimension",
                    row.s
                )));
            }
        }
        Ok(Self { rows, metadata })
    }

    pub fn rows(&self) -> &[ErrorRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.metadata.to_line();
        out.push_str("\ns,error\n");
        for row in &self.rows {
            // `{:e}` prints the shortest round-tripping representation
            let _ = writeln!(out, "{},{:e}", row.s, row.error);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut metadata = TableMetadata::default();
        let mut header_seen = false;
        let mut rows = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('#') {
                metadata = TableMetadata::parse_line(line)?;
                continue;
            }
            if !header_seen {
                let cols: Vec<&str> = line.split(',').map(str::trim).collect();
                if cols != ["s", "error"] {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        message: format!("expected header 's,error', found '{line}'"),
                    });
                }
                header_seen = true;
                continue;
            }
            let bad = |msg: String| Error::Parse {
                line: lineno + 1,
                message: msg,
            };
            let (s, e) = line
                .split_once(',')
                .ok_or_else(|| bad(format!("expected two columns in '{line}'")))?;
            let s = s
                .trim()
                .parse()
                .map_err(|e| bad(format!("dimension: {e}")))?;
            let error = e
                .trim()
                .parse()
                .map_err(|e| bad(format!("error value: {e}")))?;
            rows.push(ErrorRow { s, error });
        }
        if !header_seen {
            return Err(Error::Format("missing 's,error' header".into()));
        }
        Self::new(rows, metadata)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn meta() -> TableMetadata {
        TableMetadata {
            quantity: Some("full_solution".into()),
            norm: Some("l2".into()),
            theta: Some(2.0),
            transform: Some("periodic".into()),
            n: Some(8192),
            s_ref: Some(512),
            h: Some(0.0625),
            seed: Some(1),
            extra: BTreeMap::new(),
        }
    }

    #[test]
    fn csv_layout() {
        let t = ErrorTable::new(
            vec![
                ErrorRow { s: 4, error: 0.5 },
                ErrorRow { s: 8, error: 0.125 },
            ],
            meta(),
        )
        .unwrap();
        let csv = t.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# quantity=full_solution;norm=l2;theta=2;"));
        assert_eq!(lines[1], "s,error");
        assert_eq!(lines[2], "4,5e-1");
    }

    #[test]
    fn invariants_enforced() {
        let rows = vec![ErrorRow { s: 8, error: 0.1 }, ErrorRow { s: 4, error: 0.2 }];
        assert!(ErrorTable::new(rows, TableMetadata::default()).is_err());
        let rows = vec![ErrorRow {
            s: 8,
            error: f64::NAN,
        }];
        assert!(ErrorTable::new(rows, TableMetadata::default()).is_err());
        let rows = vec![ErrorRow { s: 8, error: 0.0 }];
        assert!(ErrorTable::new(rows.clone(), meta()).is_err());
        let rows = vec![ErrorRow { s: 512, error: 0.0 }];
        assert!(ErrorTable::new(rows, meta()).is_ok());
    }

    #[test]
    fn header_required() {
        assert!(ErrorTable::from_csv("# theta=2\n4,0.1\n").is_err());
        assert!(ErrorTable::from_csv("s,err\n4,0.1\n").is_err());
        assert!(matches!(
            ErrorTable::from_csv("s,error\n4,abc\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    proptest! {
        #[test]
        fn csv_round_trip(
            errors in prop::collection::vec(1e-300f64..1e300, 1..20),
            theta in 1.01f64..5.0,
            key in "[a-z]{1,6}",
        ) {
            let rows: Vec<ErrorRow> = errors.iter().enumerate().map(|(i, &e)| ErrorRow { s: 2 * i + 1, error: e }).collect();
            let mut m = meta();
            m.theta = Some(theta);
            m.extra.insert(format!("x_{key}"), "v".into());
            let t = ErrorTable::new(rows, m).unwrap();
            prop_assert_eq!(ErrorTable::from_csv(&t.to_csv()).unwrap(), t);
        }
    }
}
