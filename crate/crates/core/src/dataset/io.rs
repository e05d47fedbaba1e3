//! JSONL embeddings and CSV identity metadata.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{index_identities, ingest, Dataset, DatasetError, DemographicScheme, EmbeddingRecord, Group, IdentityInfo, Result};

/// Loads `embeddings` (JSONL) and `identities` (CSV) against `scheme`.
pub fn load_dataset(
    embeddings: &Path,
    identities: &Path,
    scheme: DemographicScheme,
    normalize: bool,
) -> Result<Dataset> {
    let open = |p: &Path| {
        File::open(p).map_err(|source| DatasetError::Io {
            path: p.to_owned(),
            source,
        })
    };
    let emb = BufReader::new(open(embeddings)?);
    let ids = BufReader::new(open(identities)?);
    load_from_readers(scheme, emb, ids, normalize)
}

/// Same as [`load_dataset`] over arbitrary readers.
pub fn load_from_readers<E: BufRead, I: Read>(
    scheme: DemographicScheme,
    embeddings: E,
    identities: I,
    normalize: bool,
) -> Result<Dataset> {
    let infos = read_identities(identities, &scheme)?;
    let identities = index_identities(&scheme, infos)?;
    let records = read_numbered(embeddings)?;
    ingest(scheme, identities, records, normalize)
}

/// Parses JSONL records without checking them. Blank lines are skipped.
pub fn read_embeddings<R: BufRead>(reader: R) -> Result<Vec<EmbeddingRecord>> {
    Ok(read_numbered(reader)?.into_iter().map(|(_, r)| r).collect())
}

fn read_numbered<R: BufRead>(reader: R) -> Result<Vec<(usize, EmbeddingRecord)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| DatasetError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: EmbeddingRecord = serde_json::from_str(&line).map_err(|e| DatasetError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        out.push((line_no, rec));
    }
    Ok(out)
}

/// Reads `identity_id,<attr>,...` rows. Columns are matched by header name;
/// columns that are not scheme attributes are ignored.
pub fn read_identities<R: Read>(reader: R, scheme: &DemographicScheme) -> Result<Vec<IdentityInfo>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| DatasetError::Metadata(e.to_string()))?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DatasetError::Metadata(format!("header is missing column {name:?}")))
    };
    let id_col = column("identity_id")?;
    let attr_cols = scheme
        .attributes()
        .iter()
        .map(|a| column(&a.name))
        .collect::<Result<Vec<_>>>()?;

    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| DatasetError::Metadata(format!("row {row_no}: {e}")))?;
        let identity_id = row[id_col].to_owned();
        if identity_id.is_empty() {
            return Err(DatasetError::Metadata(format!("row {row_no}: empty identity_id")));
        }
        let group = Group::new(attr_cols.iter().map(|&c| row[c].to_owned()));
        if let Err((attribute, class)) = scheme.check_group(&group) {
            return Err(DatasetError::UnknownClass {
                identity_id,
                attribute,
                class,
                row: row_no,
            });
        }
        out.push(IdentityInfo { identity_id, group });
    }
    Ok(out)
}

/// Writes one JSON object per record, vectors at full `f64` precision.
pub fn write_embeddings<W: Write>(mut w: W, records: &[EmbeddingRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn write_identities<'a, W, I>(w: W, scheme: &DemographicScheme, identities: I) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a IdentityInfo>,
{
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["identity_id"];
    header.extend(scheme.attributes().iter().map(|a| a.name.as_str()));
    wtr.write_record(&header)?;
    for info in identities {
        let mut row = vec![info.identity_id.as_str()];
        row.extend(info.group.classes().iter().map(String::as_str));
        wtr.write_record(&row)?;
    }
    wtr.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::RangeTag;

    const IDS: &str = "identity_id,gender,ethnicity\nalice,Women,Asian\nbob,Men,Black\n";

    fn load(jsonl: &str, ids: &str) -> Result<Dataset> {
        load_from_readers(DemographicScheme::diveface(), jsonl.as_bytes(), ids.as_bytes(), true)
    }

    #[test]
    fn loads_records_and_normalizes() {
        let jsonl = concat!(
            r#"{"image_id":"a1","identity_id":"alice","range":"close","embedding":[3,4]}"#,
            "\n\n",
            r#"{"image_id":"b1","identity_id":"bob","range":"long","embedding":[0,2]}"#,
            "\n"
        );
        let ds = load(jsonl, IDS).unwrap();
        assert_eq!(ds.records.len(), 2);
        assert_eq!(ds.identities.len(), 2);
        assert_eq!(ds.records[0].vector, vec![0.6, 0.8]);
        assert_eq!(ds.records[1].range, RangeTag::Long);
        assert_eq!(ds.group_of("alice").unwrap().to_string(), "Women/Asian");
    }

    #[test]
    fn zero_vector_is_reported_with_image_id_and_line() {
        let jsonl = concat!(
            r#"{"image_id":"a1","identity_id":"alice","range":"close","embedding":[1,0,0,0]}"#,
            "\n",
            r#"{"image_id":"a2","identity_id":"alice","range":"close","embedding":[0,0,0,0]}"#,
            "\n",
            r#"{"image_id":"a3","identity_id":"alice","range":"close","embedding":[0,1,0,0]}"#,
            "\n"
        );
        let err = load(jsonl, IDS).unwrap_err();
        assert_eq!(err.to_string(), "zero-norm vector at image_id=a2 (line 2)");
    }

    #[test]
    fn malformed_and_nan_lines_are_parse_errors() {
        let err = load(r#"{"image_id":"a1","identity_id":"alice","range":"close","embedding":[NaN]}"#, IDS)
            .unwrap_err();
        assert!(matches!(err, DatasetError::Parse { line: 1, .. }));
        let err = load(r#"{"image_id":"a1","identity_id":"alice","range":"far","embedding":[1]}"#, IDS)
            .unwrap_err();
        assert!(matches!(err, DatasetError::Parse { line: 1, .. }));
    }

    #[test]
    fn unknown_identity_and_class_are_errors() {
        let jsonl = r#"{"image_id":"c1","identity_id":"carol","range":"close","embedding":[1]}"#;
        let err = load(jsonl, IDS).unwrap_err();
        assert!(err.to_string().contains("identity_id=carol"), "{err}");

        let err = load("", "identity_id,gender,ethnicity\nzed,Other,Asian\n").unwrap_err();
        assert!(matches!(err, DatasetError::UnknownClass { row: 1, .. }), "{err}");

        let err = load("", "identity_id,gender\nzed,Men\n").unwrap_err();
        assert!(err.to_string().contains("ethnicity"), "{err}");
    }

    #[test]
    fn metadata_columns_matched_by_name() {
        let ids = "ethnicity,notes,identity_id,gender\nAsian,x,alice,Women\n";
        let infos = read_identities(ids.as_bytes(), &DemographicScheme::diveface()).unwrap();
        assert_eq!(infos[0].group.to_string(), "Women/Asian");
    }

    #[test]
    fn writers_round_trip_through_loader() {
        let scheme = DemographicScheme::diveface();
        let infos = read_identities(IDS.as_bytes(), &scheme).unwrap();
        let records = vec![EmbeddingRecord {
            image_id: "a1".into(),
            identity_id: "alice".into(),
            range: RangeTag::Close,
            vector: vec![0.1, -0.2, 0.3],
        }];
        let mut emb = Vec::new();
        write_embeddings(&mut emb, &records).unwrap();
        let mut ids = Vec::new();
        write_identities(&mut ids, &scheme, &infos).unwrap();
        let ds = load_from_readers(scheme, emb.as_slice(), ids.as_slice(), false).unwrap();
        assert_eq!(ds.records, records);
        assert_eq!(ds.identities.len(), 2);
    }
}
