//! Loading the CWE catalog and requirement files.
//!
//! The catalog uses a normalized two-file CSV layout: a weakness file with
//! `ID,Name,Description` and a membership file with
//! `CategoryID,CategoryName,MemberID`, one row per (category, weakness) pair.
//! Converting MITRE's XML export into this layout is left to the user.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("{}: row {row}: {reason}", path.display())]
    MalformedRow {
        path: PathBuf,
        row: usize,
        reason: String,
    },
    #[error("{}: missing column {column:?}", path.display())]
    MissingColumn { path: PathBuf, column: String },
    #[error("{}: duplicate id {id}", path.display())]
    DuplicateId { path: PathBuf, id: u32 },
    #[error("category {category_id} references unknown weakness id {member_id}")]
    DanglingMembership { category_id: u32, member_id: u32 },
    #[error("{}: row {row}: requirement text is empty", path.display())]
    EmptyText { path: PathBuf, row: usize },
    #[error("unknown CWE id {0}")]
    UnknownCweId(u32),
    #[error("CWE-{0} belongs to no category")]
    Uncategorized(u32),
    #[error("i/o error on {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CweWeakness {
    pub id: u32,
    pub name: String,
    pub description: String,
    pub category_ids: BTreeSet<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CweCategory {
    pub id: u32,
    pub name: String,
    pub member_ids: BTreeSet<u32>,
}

/// Weaknesses and categories, both keyed by id. Iteration is in ascending id
/// order, which is the order the mapper aligns its weakness vectors to.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CweCatalog {
    weaknesses: BTreeMap<u32, CweWeakness>,
    categories: BTreeMap<u32, CweCategory>,
}

/// One membership row of the category file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Membership {
    pub category_id: u32,
    pub category_name: String,
    pub member_id: u32,
}

impl CweCatalog {
    /// Builds a catalog from weakness records and membership rows.
    ///
    /// Any `category_ids` already present on the weaknesses are discarded and
    /// rebuilt from `memberships`, so both directions always agree.
    pub fn from_parts(
        weaknesses: impl IntoIterator<Item = CweWeakness>,
        memberships: impl IntoIterator<Item = Membership>,
    ) -> Result<Self, CorpusError> {
        let mut catalog = CweCatalog::default();
        for mut w in weaknesses {
            w.category_ids.clear();
            let id = w.id;
            if catalog.weaknesses.insert(id, w).is_some() {
                return Err(CorpusError::DuplicateId {
                    path: PathBuf::new(),
                    id,
                });
            }
        }
        for m in memberships {
            catalog.add_membership(m, Path::new(""), 0)?;
        }
        Ok(catalog)
    }

    fn add_membership(
        &mut self,
        m: Membership,
        path: &Path,
        row: usize,
    ) -> Result<(), CorpusError> {
        let Some(w) = self.weaknesses.get_mut(&m.member_id) else {
            return Err(CorpusError::DanglingMembership {
                category_id: m.category_id,
                member_id: m.member_id,
            });
        };
        let cat = self
            .categories
            .entry(m.category_id)
            .or_insert_with(|| CweCategory {
                id: m.category_id,
                name: m.category_name.clone(),
                member_ids: BTreeSet::new(),
            });
        if cat.name != m.category_name {
            return Err(CorpusError::MalformedRow {
                path: path.to_path_buf(),
                row,
                reason: format!(
                    "category {} named both {:?} and {:?}",
                    m.category_id, cat.name, m.category_name
                ),
            });
        }
        cat.member_ids.insert(m.member_id);
        w.category_ids.insert(m.category_id);
        Ok(())
    }

    pub fn weaknesses(&self) -> impl ExactSizeIterator<Item = &CweWeakness> {
        self.weaknesses.values()
    }

    pub fn categories(&self) -> impl ExactSizeIterator<Item = &CweCategory> {
        self.categories.values()
    }

    pub fn weakness(&self, id: u32) -> Option<&CweWeakness> {
        self.weaknesses.get(&id)
    }

    pub fn category(&self, id: u32) -> Option<&CweCategory> {
        self.categories.get(&id)
    }

    pub fn len(&self) -> usize {
        self.weaknesses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weaknesses.is_empty()
    }

    /// The single category label of a weakness. Weaknesses filed under
    /// several categories resolve to the numerically smallest category id.
    pub fn resolve_category(&self, cwe_id: u32) -> Result<u32, CorpusError> {
        let w = self
            .weaknesses
            .get(&cwe_id)
            .ok_or(CorpusError::UnknownCweId(cwe_id))?;
        w.category_ids
            .iter()
            .next()
            .copied()
            .ok_or(CorpusError::Uncategorized(cwe_id))
    }

    /// SHA-256 of the canonical two-file serialization.
    pub fn content_hash(&self) -> String {
        let mut w = Vec::new();
        let mut c = Vec::new();
        self.write_csv(&mut w, &mut c)
            .expect("writing to memory cannot fail");
        let mut bytes = w;
        bytes.push(0);
        bytes.extend_from_slice(&c);
        crate::sha256_hex(&bytes)
    }

    fn write_csv<W1: Write, W2: Write>(&self, weaknesses: W1, categories: W2) -> csv::Result<()> {
        let mut ww = csv::Writer::from_writer(weaknesses);
        ww.write_record(["ID", "Name", "Description"])?;
        for w in self.weaknesses.values() {
            ww.write_record([w.id.to_string().as_str(), &w.name, &w.description])?;
        }
        ww.flush()?;
        let mut cw = csv::Writer::from_writer(categories);
        cw.write_record(["CategoryID", "CategoryName", "MemberID"])?;
        for c in self.categories.values() {
            for m in &c.member_ids {
                cw.write_record([c.id.to_string().as_str(), &c.name, &m.to_string()])?;
            }
        }
        cw.flush()?;
        Ok(())
    }

    /// Writes the catalog back out in the two-file layout `load_cwe_catalog` reads.
    pub fn save(&self, weakness_path: &Path, category_path: &Path) -> Result<(), CorpusError> {
        let open = |p: &Path| {
            File::create(p).map_err(|source| CorpusError::Io {
                path: p.to_path_buf(),
                source,
            })
        };
        let (wf, cf) = (open(weakness_path)?, open(category_path)?);
        self.write_csv(wf, cf).map_err(|e| CorpusError::Io {
            path: weakness_path.to_path_buf(),
            source: io::Error::other(e),
        })
    }
}

/// A single requirement row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Requirement {
    pub row_index: usize,
    pub project_id: String,
    pub text: String,
    pub original_class: String,
}

/// Header names for the three requirement columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub project_id: String,
    pub text: String,
    pub class: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            project_id: "ProjectID".into(),
            text: "RequirementText".into(),
            class: "Class".into(),
        }
    }
}

struct CsvTable {
    path: PathBuf,
    headers: csv::StringRecord,
    reader: csv::Reader<File>,
}

impl CsvTable {
    fn open(path: &Path) -> Result<Self, CorpusError> {
        let file = match File::open(path) {
            Ok(f) => f,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(CorpusError::MissingFile(path.to_path_buf()))
            }
            Err(source) => {
                return Err(CorpusError::Io {
                    path: path.to_path_buf(),
                    source,
                })
            }
        };
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(file);
        let headers = reader
            .headers()
            .map_err(|e| malformed(path, 0, &e))?
            .clone();
        if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
            return Err(CorpusError::MalformedRow {
                path: path.to_path_buf(),
                row: 0,
                reason: "missing header row".into(),
            });
        }
        Ok(CsvTable {
            path: path.to_path_buf(),
            headers,
            reader,
        })
    }

    fn column(&self, name: &str) -> Result<usize, CorpusError> {
        self.headers
            .iter()
            .position(|h| h.trim().trim_start_matches('\u{feff}') == name)
            .ok_or_else(|| CorpusError::MissingColumn {
                path: self.path.clone(),
                column: name.to_string(),
            })
    }

    /// Data rows with their 1-based row number (the header is row 0).
    fn rows(
        &mut self,
    ) -> impl Iterator<Item = Result<(usize, csv::StringRecord), CorpusError>> + '_ {
        let path = self.path.clone();
        self.reader.records().enumerate().map(move |(i, rec)| {
            rec.map(|r| (i + 1, r))
                .map_err(|e| malformed(&path, i + 1, &e))
        })
    }
}

fn malformed(path: &Path, row: usize, err: &csv::Error) -> CorpusError {
    let reason = match err.kind() {
        csv::ErrorKind::Utf8 { .. } => "invalid UTF-8".to_string(),
        _ => err.to_string(),
    };
    CorpusError::MalformedRow {
        path: path.to_path_buf(),
        row,
        reason,
    }
}

fn parse_id(path: &Path, row: usize, field: &str, what: &str) -> Result<u32, CorpusError> {
    match field.trim().parse::<u32>() {
        Ok(id) if id > 0 => Ok(id),
        _ => Err(CorpusError::MalformedRow {
            path: path.to_path_buf(),
            row,
            reason: format!("{what} {field:?} is not a positive integer"),
        }),
    }
}

fn nonempty(path: &Path, row: usize, field: &str, what: &str) -> Result<String, CorpusError> {
    if field.trim().is_empty() {
        return Err(CorpusError::MalformedRow {
            path: path.to_path_buf(),
            row,
            reason: format!("{what} is empty"),
        });
    }
    Ok(field.to_string())
}

pub fn load_cwe_catalog(
    weakness_path: &Path,
    category_path: &Path,
) -> Result<CweCatalog, CorpusError> {
    let mut catalog = CweCatalog::default();

    let mut wt = CsvTable::open(weakness_path)?;
    let (id_col, name_col, desc_col) = (
        wt.column("ID")?,
        wt.column("Name")?,
        wt.column("Description")?,
    );
    let path = wt.path.clone();
    for rec in wt.rows() {
        let (row, rec) = rec?;
        let field = |c: usize| rec.get(c).unwrap_or("");
        let id = parse_id(&path, row, field(id_col), "ID")?;
        let w = CweWeakness {
            id,
            name: nonempty(&path, row, field(name_col), "Name")?,
            description: nonempty(&path, row, field(desc_col), "Description")?,
            category_ids: BTreeSet::new(),
        };
        if catalog.weaknesses.insert(id, w).is_some() {
            return Err(CorpusError::DuplicateId { path, id });
        }
    }

    let mut ct = CsvTable::open(category_path)?;
    let (cid_col, cname_col, member_col) = (
        ct.column("CategoryID")?,
        ct.column("CategoryName")?,
        ct.column("MemberID")?,
    );
    let path = ct.path.clone();
    let mut memberships = Vec::new();
    for rec in ct.rows() {
        let (row, rec) = rec?;
        let field = |c: usize| rec.get(c).unwrap_or("");
        let m = Membership {
            category_id: parse_id(&path, row, field(cid_col), "CategoryID")?,
            category_name: nonempty(&path, row, field(cname_col), "CategoryName")?,
            member_id: parse_id(&path, row, field(member_col), "MemberID")?,
        };
        memberships.push((row, m));
    }
    for (row, m) in memberships {
        catalog.add_membership(m, &path, row)?;
    }
    Ok(catalog)
}

pub fn load_requirements(
    path: &Path,
    columns: &ColumnMap,
) -> Result<Vec<Requirement>, CorpusError> {
    let mut table = CsvTable::open(path)?;
    let pid = table.column(&columns.project_id)?;
    let txt = table.column(&columns.text)?;
    let cls = table.column(&columns.class)?;
    let path = table.path.clone();
    let mut out = Vec::new();
    for rec in table.rows() {
        let (row, rec) = rec?;
        let text = rec.get(txt).unwrap_or("");
        if text.trim().is_empty() {
            return Err(CorpusError::EmptyText { path, row });
        }
        out.push(Requirement {
            row_index: out.len(),
            project_id: rec.get(pid).unwrap_or("").to_string(),
            text: text.to_string(),
            original_class: rec.get(cls).unwrap_or("").to_string(),
        });
    }
    Ok(out)
}

/// Reads a plain-text SRS: one requirement per non-blank line.
///
/// Returns `(line_number, text)` pairs with 1-based line numbers.
pub fn read_srs_lines(path: &Path) -> Result<Vec<(usize, String)>, CorpusError> {
    let mut raw = Vec::new();
    match File::open(path) {
        Ok(mut f) => f.read_to_end(&mut raw).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?,
        Err(e) if e.kind() == io::ErrorKind::NotFound => {
            return Err(CorpusError::MissingFile(path.to_path_buf()))
        }
        Err(source) => {
            return Err(CorpusError::Io {
                path: path.to_path_buf(),
                source,
            })
        }
    };
    let text = String::from_utf8(raw).map_err(|e| CorpusError::MalformedRow {
        path: path.to_path_buf(),
        row: 0,
        reason: format!("invalid UTF-8: {e}"),
    })?;
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.trim().to_string()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;
    use tempfile::TempDir;

    fn write(dir: &TempDir, name: &str, body: &[u8]) -> PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        p
    }

    fn xss_sqli(dir: &TempDir) -> (PathBuf, PathBuf) {
        let w = write(
            dir,
            "w.csv",
            b"ID,Name,Description\n\
              79,XSS,Improper neutralization of input during web page generation\n\
              89,SQL Injection,Improper neutralization of special elements in SQL commands\n",
        );
        let c = write(
            dir,
            "c.csv",
            b"CategoryID,CategoryName,MemberID\n\
              137,Data Neutralization Issues,79\n\
              137,Data Neutralization Issues,89\n",
        );
        (w, c)
    }

    #[test]
    fn loads_two_weaknesses_one_category() {
        let dir = TempDir::new().unwrap();
        let (w, c) = xss_sqli(&dir);
        let cat = load_cwe_catalog(&w, &c).unwrap();
        assert_eq!(cat.len(), 2);
        assert_eq!(cat.categories().len(), 1);
        let c137 = cat.category(137).unwrap();
        assert_eq!(c137.member_ids, BTreeSet::from([79, 89]));
        for w in cat.weaknesses() {
            assert_eq!(w.category_ids, BTreeSet::from([137]));
        }
        assert_eq!(cat.resolve_category(79).unwrap(), 137);
    }

    #[test]
    fn header_only_weakness_file() {
        let dir = TempDir::new().unwrap();
        let w = write(&dir, "w.csv", b"ID,Name,Description\n");
        let empty_c = write(&dir, "c.csv", b"CategoryID,CategoryName,MemberID\n");
        let cat = load_cwe_catalog(&w, &empty_c).unwrap();
        assert!(cat.is_empty());

        let c = write(
            &dir,
            "c2.csv",
            b"CategoryID,CategoryName,MemberID\n137,X,79\n",
        );
        assert!(matches!(
            load_cwe_catalog(&w, &c),
            Err(CorpusError::DanglingMembership { member_id: 79, .. })
        ));
    }

    #[test]
    fn dangling_membership_names_the_id() {
        let dir = TempDir::new().unwrap();
        let (w, _) = xss_sqli(&dir);
        let c = write(
            &dir,
            "c.csv",
            b"CategoryID,CategoryName,MemberID\n999,X,12345\n",
        );
        let err = load_cwe_catalog(&w, &c).unwrap_err();
        assert!(matches!(
            err,
            CorpusError::DanglingMembership {
                category_id: 999,
                member_id: 12345
            }
        ));
        assert!(err.to_string().contains("12345"));
    }

    #[test]
    fn duplicate_and_malformed_rows() {
        let dir = TempDir::new().unwrap();
        let c = write(&dir, "c.csv", b"CategoryID,CategoryName,MemberID\n");
        let dup = write(&dir, "dup.csv", b"ID,Name,Description\n79,A,x\n79,B,y\n");
        assert!(matches!(
            load_cwe_catalog(&dup, &c),
            Err(CorpusError::DuplicateId { id: 79, .. })
        ));

        let bad_id = write(&dir, "bad.csv", b"ID,Name,Description\nCWE-79,A,x\n");
        assert!(matches!(
            load_cwe_catalog(&bad_id, &c),
            Err(CorpusError::MalformedRow { row: 1, .. })
        ));

        let blank = write(
            &dir,
            "blank.csv",
            b"ID,Name,Description\n79,A,x\n80,B,\"   \"\n",
        );
        assert!(matches!(
            load_cwe_catalog(&blank, &c),
            Err(CorpusError::MalformedRow { row: 2, .. })
        ));

        let bad_utf8 = write(&dir, "utf.csv", b"ID,Name,Description\n79,A,caf\xff\n");
        let err = load_cwe_catalog(&bad_utf8, &c).unwrap_err();
        assert!(
            matches!(err, CorpusError::MalformedRow { row: 1, .. }),
            "{err}"
        );
        assert!(err.to_string().contains("UTF-8"));

        let missing = dir.path().join("nope.csv");
        assert!(
            matches!(load_cwe_catalog(&missing, &c), Err(CorpusError::MissingFile(p)) if p == missing)
        );
    }

    #[test]
    fn multi_category_resolves_to_smallest_id() {
        let dir = TempDir::new().unwrap();
        let w = write(
            &dir,
            "w.csv",
            b"ID,Name,Description\n327,Weak Crypto,Use of a broken algorithm\n",
        );
        let c = write(
            &dir,
            "c.csv",
            b"CategoryID,CategoryName,MemberID\n310,Cryptographic Issues,327\n137,Other,327\n",
        );
        let cat = load_cwe_catalog(&w, &c).unwrap();
        assert_eq!(cat.resolve_category(327).unwrap(), 137);
        assert!(matches!(
            cat.resolve_category(424242),
            Err(CorpusError::UnknownCweId(424242))
        ));
    }

    #[test]
    fn uncategorized_weakness() {
        let dir = TempDir::new().unwrap();
        let w = write(&dir, "w.csv", b"ID,Name,Description\n1,A,desc\n");
        let c = write(&dir, "c.csv", b"CategoryID,CategoryName,MemberID\n");
        let cat = load_cwe_catalog(&w, &c).unwrap();
        assert!(matches!(
            cat.resolve_category(1),
            Err(CorpusError::Uncategorized(1))
        ));
    }

    #[test]
    fn catalog_round_trips_through_files() {
        let dir = TempDir::new().unwrap();
        let (w, c) = xss_sqli(&dir);
        let cat = load_cwe_catalog(&w, &c).unwrap();
        let (w2, c2) = (dir.path().join("w2.csv"), dir.path().join("c2.csv"));
        cat.save(&w2, &c2).unwrap();
        let again = load_cwe_catalog(&w2, &c2).unwrap();
        assert_eq!(cat, again);
        assert_eq!(cat.content_hash(), again.content_hash());
    }

    #[test]
    fn requirements_in_file_order() {
        let dir = TempDir::new().unwrap();
        let p = write(
            &dir,
            "r.csv",
            b"ProjectID,RequirementText,Class\n1,The system shall log in users,F\n1,\"Quoted, with comma\",SE\n2,Third,PE\n",
        );
        let reqs = load_requirements(&p, &ColumnMap::default()).unwrap();
        assert_eq!(reqs.len(), 3);
        for (i, r) in reqs.iter().enumerate() {
            assert_eq!(r.row_index, i);
        }
        assert_eq!(reqs[1].text, "Quoted, with comma");
        assert_eq!(reqs[2].original_class, "PE");
    }

    #[test]
    fn blank_requirement_text_is_rejected() {
        let dir = TempDir::new().unwrap();
        let p = write(
            &dir,
            "r.csv",
            b"ProjectID,RequirementText,Class\n1,ok,F\n1,\"  \",F\n",
        );
        assert!(matches!(
            load_requirements(&p, &ColumnMap::default()),
            Err(CorpusError::EmptyText { row: 2, .. })
        ));
    }

    #[test]
    fn custom_column_map() {
        let dir = TempDir::new().unwrap();
        let p = write(
            &dir,
            "r.csv",
            b"id,req,label\n7,The product shall be fast,PE\n",
        );
        let map = ColumnMap {
            project_id: "id".into(),
            text: "req".into(),
            class: "label".into(),
        };
        let reqs = load_requirements(&p, &map).unwrap();
        assert_eq!(reqs[0].project_id, "7");
        let err = load_requirements(&p, &ColumnMap::default()).unwrap_err();
        assert!(
            matches!(err, CorpusError::MissingColumn { ref column, .. } if column == "ProjectID")
        );
    }

    #[test]
    fn srs_lines_skip_blanks() {
        let dir = TempDir::new().unwrap();
        let p = write(&dir, "srs.txt", b"first\n\n  second  \n");
        assert_eq!(
            read_srs_lines(&p).unwrap(),
            vec![(1, "first".to_string()), (3, "second".to_string())]
        );
    }
}
