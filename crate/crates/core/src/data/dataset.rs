use std::collections::HashMap;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Categorical data matrix. Values are dense category indices per column,
/// stored column-major since scoring walks one variable at a time.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    names: Vec<String>,
    categories: Vec<Vec<String>>,
    columns: Vec<Vec<u16>>,
    rows: usize,
}

#[derive(Clone, Debug)]
pub struct LoadOptions {
    pub has_header: bool,
    pub missing_token: String,
    /// `None` sniffs the first line: tab if present, comma otherwise.
    pub delimiter: Option<char>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            has_header: false,
            missing_token: "?".to_string(),
            delimiter: None,
        }
    }
}

impl Dataset {
    /// Builds a dataset from string tokens, mapping categories to indices in
    /// order of first appearance.
    pub fn from_tokens<S: AsRef<str>>(names: Vec<String>, rows: &[Vec<S>]) -> Result<Self> {
        let n = names.len();
        let mut maps: Vec<HashMap<String, u16>> = vec![HashMap::new(); n];
        let mut categories = vec![Vec::new(); n];
        let mut columns = vec![Vec::with_capacity(rows.len()); n];
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Shape(format!(
                    "row {r} has {} values, expected {n}",
                    row.len()
                )));
            }
            for (v, tok) in row.iter().enumerate() {
                let tok = tok.as_ref();
                let next = maps[v].len();
                let idx = *maps[v].entry(tok.to_string()).or_insert_with(|| {
                    categories[v].push(tok.to_string());
                    next as u16
                });
                columns[v].push(idx);
            }
        }
        Ok(Self {
            names,
            categories,
            columns,
            rows: rows.len(),
        })
    }

    /// Builds a dataset from category indices with known arities. Category
    /// labels become the decimal index.
    pub fn from_indices(names: Vec<String>, arity: &[usize], rows: &[Vec<usize>]) -> Result<Self> {
        let n = arity.len();
        if names.len() != n {
            return Err(Error::Shape("names and arities differ in length".into()));
        }
        let mut columns = vec![Vec::with_capacity(rows.len()); n];
        for row in rows {
            if row.len() != n {
                return Err(Error::Shape("row length differs from arity count".into()));
            }
            for (v, &x) in row.iter().enumerate() {
                if x >= arity[v] {
                    return Err(Error::Shape(format!(
                        "value {x} out of range for variable {v} (arity {})",
                        arity[v]
                    )));
                }
                columns[v].push(x as u16);
            }
        }
        let categories = arity
            .iter()
            .map(|&r| (0..r).map(|c| c.to_string()).collect())
            .collect();
        Ok(Self {
            names,
            categories,
            columns,
            rows: rows.len(),
        })
    }

    pub fn n(&self) -> usize {
        self.columns.len()
    }

    pub fn m(&self) -> usize {
        self.rows
    }

    pub fn arity(&self, v: usize) -> usize {
        self.categories[v].len()
    }

    pub fn arities(&self) -> Vec<usize> {
        self.categories.iter().map(Vec::len).collect()
    }

    pub fn column(&self, v: usize) -> &[u16] {
        &self.columns[v]
    }

    pub fn value(&self, row: usize, v: usize) -> usize {
        self.columns[v][row] as usize
    }

    pub fn row(&self, row: usize) -> Vec<usize> {
        self.columns.iter().map(|c| c[row] as usize).collect()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn category(&self, v: usize, c: usize) -> &str {
        &self.categories[v][c]
    }

    /// Keeps only the given rows, in the given order. Category indices are
    /// reassigned by first appearance within the subset.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let tokens: Vec<Vec<&str>> = rows
            .iter()
            .map(|&r| {
                (0..self.n())
                    .map(|v| self.category(v, self.value(r, v)))
                    .collect()
            })
            .collect();
        Self::from_tokens(self.names.clone(), &tokens).expect("rows of a valid dataset")
    }

    /// SHA-256 over the shape, arities and index matrix.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n() as u64).to_le_bytes());
        h.update((self.m() as u64).to_le_bytes());
        for a in self.arities() {
            h.update((a as u64).to_le_bytes());
        }
        for col in &self.columns {
            for &x in col {
                h.update(x.to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }

    /// Comma-separated text with a header row of variable names.
    pub fn to_csv(&self) -> String {
        let mut out = self.names.join(",");
        out.push('\n');
        for r in 0..self.m() {
            for v in 0..self.n() {
                if v > 0 {
                    out.push(',');
                }
                out.push_str(self.category(v, self.value(r, v)));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Reads a comma- or tab-separated categorical data file.
pub fn load_dataset(path: &Path, opts: &LoadOptions) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text, path, opts)
}

pub fn parse_dataset(text: &str, path: &Path, opts: &LoadOptions) -> Result<Dataset> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());

    let delim = opts.delimiter.unwrap_or_else(|| {
        let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
        if first.contains('\t') {
            '\t'
        } else {
            ','
        }
    });
    let split = |l: &str| -> Vec<String> { l.split(delim).map(|t| t.trim().to_string()).collect() };

    let mut names = None;
    if opts.has_header {
        match lines.next() {
            Some((_, l)) => names = Some(split(l)),
            None => return Err(Error::EmptyInput(path.to_path_buf())),
        }
    }

    let mut rows = Vec::new();
    let mut width = names.as_ref().map(Vec::len);
    for (i, line) in lines {
        let toks = split(line);
        let expected = *width.get_or_insert(toks.len());
        if toks.len() != expected {
            return Err(Error::RaggedRow {
                path: path.to_path_buf(),
                line: i + 1,
                expected,
                found: toks.len(),
            });
        }
        if let Some(c) = toks.iter().position(|t| *t == opts.missing_token) {
            return Err(Error::MissingValue {
                path: path.to_path_buf(),
                line: i + 1,
                column: c,
                token: opts.missing_token.clone(),
            });
        }
        rows.push(toks);
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput(path.to_path_buf()));
    }
    let names = names.unwrap_or_else(|| (0..rows[0].len()).map(|v| format!("X{v}")).collect());
    Dataset::from_tokens(names, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, header: bool) -> Result<Dataset> {
        let opts = LoadOptions {
            has_header: header,
            ..Default::default()
        };
        parse_dataset(text, Path::new("mem"), &opts)
    }

    #[test]
    fn first_appearance_mapping() {
        let d = parse("a,x\nb,x\na,y\n", false).unwrap();
        assert_eq!((d.n(), d.m()), (2, 3));
        assert_eq!(d.arities(), vec![2, 2]);
        assert_eq!(d.row(0), vec![0, 0]);
        assert_eq!(d.row(1), vec![1, 0]);
        assert_eq!(d.row(2), vec![0, 1]);
        assert_eq!(d.category(1, 1), "y");
    }

    #[test]
    fn single_cell() {
        let d = parse("z\n", false).unwrap();
        assert_eq!((d.n(), d.m(), d.arities()), (1, 1, vec![1]));
    }

    #[test]
    fn header_and_tabs() {
        let d = parse("u\tv\n1\t2\n3\t2\n", true).unwrap();
        assert_eq!(d.names(), &["u".to_string(), "v".to_string()]);
        assert_eq!(d.arities(), vec![2, 1]);
    }

    #[test]
    fn errors() {
        assert!(matches!(parse("", false), Err(Error::EmptyInput(_))));
        assert!(matches!(parse("a,b\n", true), Err(Error::EmptyInput(_))));
        assert!(matches!(
            parse("a,b\nc\n", false),
            Err(Error::RaggedRow { line: 2, .. })
        ));
        assert!(matches!(
            parse("a,b\n?,c\n", false),
            Err(Error::MissingValue { column: 0, .. })
        ));
        let opts = LoadOptions {
            missing_token: "NA".into(),
            ..Default::default()
        };
        assert!(parse_dataset("a,?\n", Path::new("m"), &opts).is_ok());
    }

    #[test]
    fn csv_round_trip() {
        let d = parse("a,x\nb,x\na,y\n", false).unwrap();
        let back = parse(&d.to_csv(), true).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.digest(), d.digest());
    }
}
