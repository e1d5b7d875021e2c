use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use indexmap::IndexSet;

use super::Dataset;
use crate::error::{Error, Result};

/// Which column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum LabelColumn {
    #[default]
    Last,
    /// Zero-based column index.
    Index(usize),
    /// Header name; requires `header = true`.
    Name(String),
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    /// `last`, a zero-based index, or a header name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(if s.eq_ignore_ascii_case("last") {
            LabelColumn::Last
        } else if let Ok(i) = s.parse() {
            LabelColumn::Index(i)
        } else {
            LabelColumn::Name(s.to_string())
        })
    }
}

#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub label_column: LabelColumn,
    pub delimiter: u8,
    pub header: bool,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema { label_column: LabelColumn::Last, delimiter: b',', header: true }
    }
}

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "NA" | "na" | "NaN" | "nan" | "?")
}

fn parse_cell(cell: &str, line: usize, column: usize) -> Result<f64> {
    let cell = cell.trim();
    if is_missing(cell) {
        return Err(Error::MissingValue { row: line, column });
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(Error::Parse { row: line, column, message: format!("non-finite value {cell:?}") }),
        Err(_) => Err(Error::Parse { row: line, column, message: format!("not a number: {cell:?}") }),
    }
}

struct RawTable {
    header: Option<Vec<String>>,
    records: Vec<(usize, Vec<String>)>,
}

fn read_table<R: Read>(reader: R, schema: &CsvSchema) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .has_headers(schema.header)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = if schema.header {
        Some(rdr.headers()?.iter().map(str::to_string).collect())
    } else {
        None
    };
    let mut records = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        records.push((line, record.iter().map(str::to_string).collect()));
    }
    Ok(RawTable { header, records })
}

fn resolve_label(schema: &CsvSchema, header: Option<&[String]>, width: usize) -> Result<usize> {
    let idx = match &schema.label_column {
        LabelColumn::Last => width.checked_sub(1),
        LabelColumn::Index(i) => Some(*i),
        LabelColumn::Name(name) => {
            let header = header.ok_or_else(|| {
                Error::InvalidConfig(format!("label column {name:?} given by name but the file has no header"))
            })?;
            Some(header.iter().position(|h| h == name).ok_or_else(|| {
                Error::InvalidConfig(format!("no column named {name:?}"))
            })?)
        }
    };
    match idx {
        Some(i) if i < width => Ok(i),
        _ => Err(Error::InvalidConfig(format!("label column {:?} does not exist", schema.label_column))),
    }
}

/// Reads a labelled dataset. Class ids are assigned in order of first
/// appearance.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<Dataset> {
    let table = read_table(reader, schema)?;
    let width = match (&table.header, table.records.first()) {
        (Some(h), _) => h.len(),
        (None, Some((_, r))) => r.len(),
        (None, None) => return Err(Error::EmptyInput),
    };
    if width < 2 {
        return Err(Error::InvalidDataset("need at least one feature column and a label column".into()));
    }
    let label_idx = resolve_label(schema, table.header.as_deref(), width)?;

    let mut classes: IndexSet<String> = IndexSet::new();
    let mut values = Vec::with_capacity(table.records.len() * (width - 1));
    let mut labels = Vec::with_capacity(table.records.len());
    for (line, record) in &table.records {
        if record.len() != width {
            return Err(Error::Parse {
                row: *line,
                column: record.len().min(width) + 1,
                message: format!("expected {width} fields, found {}", record.len()),
            });
        }
        for (col, cell) in record.iter().enumerate() {
            if col == label_idx {
                if is_missing(cell) {
                    return Err(Error::MissingValue { row: *line, column: col + 1 });
                }
                labels.push(match classes.get_index_of(cell.as_str()) {
                    Some(id) => id,
                    None => classes.insert_full(cell.clone()).0,
                });
            } else {
                values.push(parse_cell(cell, *line, col + 1)?);
            }
        }
    }
    if labels.is_empty() {
        return Err(Error::EmptyInput);
    }
    let class_names: Vec<String> = classes.into_iter().collect();
    if class_names.len() < 2 {
        return Err(Error::SingleClass);
    }
    let feature_names = table.header.map(|h| {
        h.into_iter()
            .enumerate()
            .filter(|&(i, _)| i != label_idx)
            .map(|(_, name)| name)
            .collect()
    });
    Dataset::with_names(values, width - 1, labels, class_names, feature_names)
}

/// Feature rows for prediction. If the file has `n_features + 1` columns, the
/// label column is split off and its raw text returned alongside.
pub fn load_feature_rows(
    path: impl AsRef<Path>,
    schema: &CsvSchema,
    n_features: usize,
) -> Result<(Vec<Vec<f64>>, Option<Vec<String>>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let table = read_table(file, schema)?;
    let width = match (&table.header, table.records.first()) {
        (Some(h), _) => h.len(),
        (None, Some((_, r))) => r.len(),
        (None, None) => return Err(Error::EmptyInput),
    };
    let label_idx = if width == n_features + 1 {
        Some(resolve_label(schema, table.header.as_deref(), width)?)
    } else if width == n_features {
        None
    } else {
        return Err(Error::FeatureCountMismatch { expected: n_features, got: width });
    };
    let mut rows = Vec::with_capacity(table.records.len());
    let mut labels = label_idx.map(|_| Vec::with_capacity(table.records.len()));
    for (line, record) in &table.records {
        if record.len() != width {
            return Err(Error::Parse {
                row: *line,
                column: record.len().min(width) + 1,
                message: format!("expected {width} fields, found {}", record.len()),
            });
        }
        let mut row = Vec::with_capacity(n_features);
        for (col, cell) in record.iter().enumerate() {
            if Some(col) == label_idx {
                labels.as_mut().unwrap().push(cell.clone());
            } else {
                row.push(parse_cell(cell, *line, col + 1)?);
            }
        }
        rows.push(row);
    }
    Ok((rows, labels))
}

/// Writes features then a trailing `label` column holding class names.
/// Values use the shortest representation that parses back to the same f64.
pub fn write_csv(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(std::io::BufWriter::new(file), data).map_err(|e| match e {
        Error::Csv(e) if e.is_io_error() => Error::io(path, std::io::Error::other(e.to_string())),
        other => other,
    })
}

pub fn write_csv_to<W: Write>(writer: W, data: &Dataset) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = match data.feature_names() {
        Some(names) => names.to_vec(),
        None => (0..data.n_features()).map(|i| format!("x{i}")).collect(),
    };
    header.push("label".into());
    wtr.write_record(&header)?;
    let mut record = Vec::with_capacity(data.n_features() + 1);
    for (row, &label) in data.rows().zip(data.labels()) {
        record.clear();
        record.extend(row.iter().map(|v| v.to_string()));
        record.push(data.class_names()[label].clone());
        wtr.write_record(&record)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn read(text: &str) -> Result<Dataset> {
        read_csv(text.as_bytes(), &CsvSchema::default())
    }

    #[test]
    fn first_appearance_label_ids() {
        let d = read("f1,f2,y\n1,2,a\n3,4,b\n5,6,a\n").unwrap();
        assert_eq!(d.n_classes(), 2);
        assert_eq!(d.labels(), &[0, 1, 0]);
        assert_eq!(d.class_names(), &["a".to_string(), "b".to_string()]);
        assert_eq!(d.feature_names().unwrap(), &["f1".to_string(), "f2".to_string()]);
        assert_eq!(d.values(), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn non_numeric_cell_reports_location() {
        let err = read("f1,f2,y\n1,2,a\n3,oops,b\n").unwrap_err();
        match err {
            Error::Parse { row, column, .. } => assert_eq!((row, column), (3, 2)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(err_string("f1,f2,y\n1,2,a\n3,oops,b\n").contains("row 3, column 2"));
    }

    fn err_string(text: &str) -> String {
        read(text).unwrap_err().to_string()
    }

    #[test]
    fn single_class_rejected() {
        assert!(matches!(read("f1,y\n1,a\n2,a\n"), Err(Error::SingleClass)));
    }

    #[test]
    fn missing_values_rejected() {
        assert!(matches!(read("f1,f2,y\n1,,a\n2,3,b\n"), Err(Error::MissingValue { row: 2, column: 2 })));
        assert!(matches!(read("f1,f2,y\n1,NA,a\n2,3,b\n"), Err(Error::MissingValue { .. })));
    }

    #[test]
    fn label_column_by_name_and_index() {
        let text = "y,f1\na,1\nb,2\n";
        let by_name = read_csv(
            text.as_bytes(),
            &CsvSchema { label_column: LabelColumn::Name("y".into()), ..Default::default() },
        )
        .unwrap();
        let by_index = read_csv(
            text.as_bytes(),
            &CsvSchema { label_column: LabelColumn::Index(0), ..Default::default() },
        )
        .unwrap();
        assert_eq!(by_name, by_index);
        assert_eq!(by_name.values(), &[1.0, 2.0]);
        assert!(read_csv(
            text.as_bytes(),
            &CsvSchema { label_column: LabelColumn::Name("zz".into()), ..Default::default() }
        )
        .is_err());
    }

    #[test]
    fn headerless_and_tab_delimited() {
        let d = read_csv(
            "1\t2\tx\n3\t4\ty\n".as_bytes(),
            &CsvSchema { header: false, delimiter: b'\t', ..Default::default() },
        )
        .unwrap();
        assert_eq!(d.n_rows(), 2);
        assert!(d.feature_names().is_none());
    }

    proptest! {
        #[test]
        fn write_then_read_reproduces_dataset(
            rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 3), 2..20),
            seed_labels in prop::collection::vec(0usize..3, 20),
        ) {
            let n = rows.len();
            let mut labels: Vec<usize> = seed_labels[..n].to_vec();
            // the first-appearance mapping must see class 0 first for ids to survive
            labels[0] = 0;
            labels[1] = 1;
            let d = Dataset::from_rows(&rows, labels, 2.max(*seed_labels[..n].iter().max().unwrap() + 1)).unwrap();
            let used: Vec<usize> = {
                let mut seen = Vec::new();
                for &l in d.labels() { if !seen.contains(&l) { seen.push(l); } }
                seen
            };
            let mut buf = Vec::new();
            write_csv_to(&mut buf, &d).unwrap();
            let back = read_csv(buf.as_slice(), &CsvSchema::default()).unwrap();
            prop_assert_eq!(back.values(), d.values());
            let names_back: Vec<&str> = back.labels().iter().map(|&l| back.class_names()[l].as_str()).collect();
            let names: Vec<&str> = d.labels().iter().map(|&l| d.class_names()[l].as_str()).collect();
            prop_assert_eq!(names_back, names);
            prop_assert_eq!(back.n_classes(), used.len());
        }
    }
}
