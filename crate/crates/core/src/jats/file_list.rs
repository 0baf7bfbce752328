use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::JatsError;

/// One data line of the archive file list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileListRow {
    pub archive_path: String,
    pub accession_id: String,
    pub license: String,
    pub last_updated: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RejectedRow {
    /// 1-based line number in the CSV (header is line 1).
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FileList {
    pub rows: Vec<FileListRow>,
    pub rejects: Vec<RejectedRow>,
}

fn normalize_header(h: &str) -> String {
    h.chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase).collect()
}

/// Parse a file-list CSV with columns `File, AccessionID, License, LastUpdated`
/// (matched case- and punctuation-insensitively; `LastUpdated` may carry a
/// suffix such as `(YYYY-MM-DD HH:MM:SS)`). Unusable lines go to `rejects`.
pub fn parse_file_list(csv_bytes: &[u8]) -> Result<FileList, JatsError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(csv_bytes);
    let headers: Vec<String> = reader.headers()?.iter().map(normalize_header).collect();
    let find = |pred: &dyn Fn(&str) -> bool, name: &'static str| {
        headers.iter().position(|h| pred(h)).ok_or(JatsError::MissingColumn(name))
    };
    let file_col = find(&|h| h == "file", "File")?;
    let acc_col = find(&|h| h == "accessionid", "AccessionID")?;
    let lic_col = find(&|h| h == "license", "License")?;
    let upd_col = find(&|h| h.starts_with("lastupdated"), "LastUpdated")?;

    let mut out = FileList::default();
    let mut data_lines = 0usize;
    for result in reader.records() {
        data_lines += 1;
        let record = match result {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                out.rejects.push(RejectedRow { line, reason: e.to_string() });
                continue;
            }
        };
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |col: usize| record.get(col).map(str::trim).filter(|s| !s.is_empty());
        let reject = |reason: String| RejectedRow { line, reason };

        let (Some(file), Some(acc)) = (field(file_col), field(acc_col)) else {
            out.rejects.push(reject("missing File or AccessionID".into()));
            continue;
        };
        let Some(license) = field(lic_col) else {
            out.rejects.push(reject("missing License".into()));
            continue;
        };
        let Some(updated) = field(upd_col) else {
            out.rejects.push(reject("missing LastUpdated".into()));
            continue;
        };
        let date_part = updated.get(..10).unwrap_or(updated);
        let Ok(last_updated) = NaiveDate::parse_from_str(date_part, "%Y-%m-%d") else {
            out.rejects.push(reject(format!("unparseable date `{updated}`")));
            continue;
        };
        out.rows.push(FileListRow {
            archive_path: file.to_string(),
            accession_id: acc.to_string(),
            license: license.to_string(),
            last_updated,
        });
    }
    if data_lines == 0 {
        return Err(JatsError::EmptyInput);
    }
    Ok(out)
}
