//! On-disk dataset layout:
//!
//! ```text
//! <root>/<vertical>/keywords.tsv                  keyword  description  form|form|...
//! <root>/<vertical>/<website>/pages/<page_id>.htm
//! <root>/<vertical>/<website>/groundtruth.tsv     page_id  relation  value
//! <root>/<vertical>/<website>/layout/<page_id>.tsv  node_id  x  y  width  height
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::layout::{parse_sidecar, SidecarRow};
use super::RawPage;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    BadRow {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("text statistics need at least one page")]
    NoPages,
    #[error("pages from several websites: expected {expected}, found {found}")]
    MixedWebsites { expected: String, found: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Problems that skip part of a dataset without aborting the load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Diagnostic {
    MissingGroundTruth { path: PathBuf },
    DanglingAnnotation { path: PathBuf, line: usize, page_id: String },
    MalformedRow { path: PathBuf, line: usize, message: String },
    BadSidecar { path: PathBuf, message: String },
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Diagnostic::MissingGroundTruth { path } => {
                write!(f, "missing ground truth: {}", path.display())
            }
            Diagnostic::DanglingAnnotation { path, line, page_id } => write!(
                f,
                "{}:{line}: annotation for unknown page {page_id}",
                path.display()
            ),
            Diagnostic::MalformedRow { path, line, message } => {
                write!(f, "{}:{line}: {message}", path.display())
            }
            Diagnostic::BadSidecar { path, message } => {
                write!(f, "{}: {message}", path.display())
            }
        }
    }
}

/// One ground-truth tuple. `relation` is the surface form used on the page.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Annotation {
    pub page_id: String,
    pub relation: String,
    pub value: String,
}

/// A search keyword, its description, and the relation surface forms that
/// count as matches for it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordSpec {
    pub keyword: String,
    pub description: String,
    pub surface_forms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Website {
    pub id: String,
    pub vertical_id: String,
    pub pages: Vec<RawPage>,
    pub annotations: Vec<Annotation>,
    /// Layout sidecars by page id.
    pub sidecars: BTreeMap<String, Vec<SidecarRow>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertical {
    pub id: String,
    pub keywords: Vec<KeywordSpec>,
    pub websites: Vec<Website>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub verticals: Vec<Vertical>,
    pub diagnostics: Vec<Diagnostic>,
}

impl Dataset {
    pub fn page_count(&self) -> usize {
        self.websites().map(|w| w.pages.len()).sum()
    }

    pub fn websites(&self) -> impl Iterator<Item = &Website> {
        self.verticals.iter().flat_map(|v| v.websites.iter())
    }

    pub fn vertical(&self, id: &str) -> Option<&Vertical> {
        self.verticals.iter().find(|v| v.id == id)
    }
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>, DatasetError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        out.push(entry.map_err(io_err(dir))?.path());
    }
    out.sort();
    Ok(out)
}

fn dir_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Reads a keywords file: `keyword<TAB>description[<TAB>form|form|...]`.
/// The keyword itself always counts as a surface form.
pub fn read_keywords(path: &Path) -> Result<Vec<KeywordSpec>, DatasetError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_keywords(&text).map_err(|(line, message)| DatasetError::BadRow {
        path: path.to_path_buf(),
        line,
        message,
    })
}

pub(crate) fn parse_keywords(text: &str) -> Result<Vec<KeywordSpec>, (usize, String)> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let keyword = cols[0].trim();
        if keyword.is_empty() {
            return Err((i + 1, "empty keyword".into()));
        }
        let description = cols.get(1).map(|s| s.trim()).unwrap_or("");
        let mut forms: Vec<String> = vec![keyword.to_string()];
        if let Some(f) = cols.get(2) {
            for form in f.split('|').map(str::trim).filter(|s| !s.is_empty()) {
                if !forms.iter().any(|x| x == form) {
                    forms.push(form.to_string());
                }
            }
        }
        out.push(KeywordSpec {
            keyword: keyword.to_string(),
            description: description.to_string(),
            surface_forms: forms,
        });
    }
    Ok(out)
}

/// Loads every vertical under `root`. Per-website problems are collected as
/// [`Diagnostic`]s; only unreadable directories abort the load.
pub fn load_dataset(root: &Path) -> Result<Dataset, DatasetError> {
    let mut ds = Dataset::default();
    for vpath in sorted_entries(root)? {
        if !vpath.is_dir() {
            continue;
        }
        let vertical_id = dir_name(&vpath);
        let kw_path = vpath.join("keywords.tsv");
        let keywords = if kw_path.is_file() {
            read_keywords(&kw_path)?
        } else {
            Vec::new()
        };
        let mut websites = Vec::new();
        for wpath in sorted_entries(&vpath)? {
            if wpath.is_dir() {
                websites.push(load_website(&wpath, &vertical_id, &mut ds.diagnostics)?);
            }
        }
        ds.verticals.push(Vertical {
            id: vertical_id,
            keywords,
            websites,
        });
    }
    Ok(ds)
}

fn load_website(
    wpath: &Path,
    vertical_id: &str,
    diags: &mut Vec<Diagnostic>,
) -> Result<Website, DatasetError> {
    let website_id = dir_name(wpath);
    let mut pages = Vec::new();
    let pages_dir = wpath.join("pages");
    if pages_dir.is_dir() {
        for p in sorted_entries(&pages_dir)? {
            let is_page = matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("htm") | Some("html")
            );
            if !is_page || !p.is_file() {
                continue;
            }
            let html = fs::read(&p).map_err(io_err(&p))?;
            let page_id = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            pages.push(RawPage::new(page_id, website_id.clone(), vertical_id, html));
        }
    }
    let known: BTreeSet<&str> = pages.iter().map(|p| p.page_id.as_str()).collect();

    let mut annotations = Vec::new();
    let gt_path = wpath.join("groundtruth.tsv");
    if gt_path.is_file() {
        let text = fs::read_to_string(&gt_path).map_err(io_err(&gt_path))?;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                diags.push(Diagnostic::MalformedRow {
                    path: gt_path.clone(),
                    line: i + 1,
                    message: format!("expected 3 columns, found {}", cols.len()),
                });
                continue;
            }
            if i == 0 && cols == ["page_id", "relation", "value"] {
                continue;
            }
            if !known.contains(cols[0]) {
                diags.push(Diagnostic::DanglingAnnotation {
                    path: gt_path.clone(),
                    line: i + 1,
                    page_id: cols[0].to_string(),
                });
                continue;
            }
            annotations.push(Annotation {
                page_id: cols[0].to_string(),
                relation: cols[1].to_string(),
                value: cols[2].to_string(),
            });
        }
    } else {
        diags.push(Diagnostic::MissingGroundTruth { path: gt_path });
    }

    let mut sidecars = BTreeMap::new();
    let layout_dir = wpath.join("layout");
    if layout_dir.is_dir() {
        for p in sorted_entries(&layout_dir)? {
            if p.extension().and_then(|e| e.to_str()) != Some("tsv") {
                continue;
            }
            let page_id = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let text = fs::read_to_string(&p).map_err(io_err(&p))?;
            match parse_sidecar(&text) {
                Ok(rows) => {
                    sidecars.insert(page_id, rows);
                }
                Err(e) => diags.push(Diagnostic::BadSidecar {
                    path: p.clone(),
                    message: e.to_string(),
                }),
            }
        }
    }

    Ok(Website {
        id: website_id,
        vertical_id: vertical_id.to_string(),
        pages,
        annotations,
        sidecars,
    })
}

/// Writes `ds` in the layout [`load_dataset`] reads. Existing files with the
/// same names are overwritten.
pub fn write_dataset(root: &Path, ds: &Dataset) -> Result<(), DatasetError> {
    let mkdir = |p: &Path| fs::create_dir_all(p).map_err(io_err(p));
    let write = |p: &Path, bytes: &[u8]| fs::write(p, bytes).map_err(io_err(p));
    for v in &ds.verticals {
        let vdir = root.join(&v.id);
        mkdir(&vdir)?;
        let mut kw = String::new();
        for k in &v.keywords {
            let forms: Vec<&str> = k.surface_forms.iter().skip(1).map(String::as_str).collect();
            kw.push_str(&format!("{}\t{}\t{}\n", k.keyword, k.description, forms.join("|")));
        }
        write(&vdir.join("keywords.tsv"), kw.as_bytes())?;
        for w in &v.websites {
            let wdir = vdir.join(&w.id);
            let pdir = wdir.join("pages");
            mkdir(&pdir)?;
            for p in &w.pages {
                write(&pdir.join(format!("{}.htm", p.page_id)), &p.html)?;
            }
            let mut gt = String::from("page_id\trelation\tvalue\n");
            for a in &w.annotations {
                gt.push_str(&format!("{}\t{}\t{}\n", a.page_id, a.relation, a.value));
            }
            write(&wdir.join("groundtruth.tsv"), gt.as_bytes())?;
            if !w.sidecars.is_empty() {
                let ldir = wdir.join("layout");
                mkdir(&ldir)?;
                for (page_id, rows) in &w.sidecars {
                    let mut t = String::new();
                    for r in rows {
                        t.push_str(&format!(
                            "{}\t{}\t{}\t{}\t{}\n",
                            r.node_id, r.bbox.x, r.bbox.y, r.bbox.width, r.bbox.height
                        ));
                    }
                    write(&ldir.join(format!("{page_id}.tsv")), t.as_bytes())?;
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keywords_file() {
        let kws = parse_keywords(
            "# comment\nprice\tThe amount of money.\tPrice|MSRP| Starting MSRP \nengine\n",
        )
        .unwrap();
        assert_eq!(kws.len(), 2);
        assert_eq!(kws[0].surface_forms, vec!["price", "Price", "MSRP", "Starting MSRP"]);
        assert_eq!(kws[1].description, "");
        assert_eq!(kws[1].surface_forms, vec!["engine"]);
        assert!(parse_keywords("\tdesc\n").is_err());
    }
}
