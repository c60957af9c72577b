//! Canonical parsed-corpus directory:
//!
//! ```text
//! <dir>/<vertical>/<website>/textfreq.json
//! <dir>/<vertical>/<website>/docs/<page_id>.json
//! <dir>/<vertical>/<website>/graphs/<page_id>.json
//! ```
//!
//! All files are compact JSON with sorted map keys, so identical inputs give
//! byte-identical files.

use std::fs;
use std::path::Path;

use serde::{de::DeserializeOwned, Serialize};

use super::{DatasetError, PageDoc, TextFreqTable};
use crate::graph::PageGraph;

#[derive(Debug, Clone, PartialEq)]
pub struct StoredWebsite {
    pub vertical_id: String,
    pub website_id: String,
    pub freq: TextFreqTable,
    pub docs: Vec<PageDoc>,
    /// Parallel to `docs`; may be empty when graphs were not built.
    pub graphs: Vec<PageGraph>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), DatasetError> {
    let bytes = serde_json::to_vec(value).expect("corpus types serialize");
    fs::write(path, bytes).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, DatasetError> {
    let bytes = fs::read(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_slice(&bytes).map_err(|e| DatasetError::BadRow {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

fn mkdir(path: &Path) -> Result<(), DatasetError> {
    fs::create_dir_all(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_corpus_dir(dir: &Path, sites: &[StoredWebsite]) -> Result<(), DatasetError> {
    for site in sites {
        let base = dir.join(&site.vertical_id).join(&site.website_id);
        mkdir(&base.join("docs"))?;
        write_json(&base.join("textfreq.json"), &site.freq)?;
        for doc in &site.docs {
            write_json(&base.join("docs").join(format!("{}.json", doc.page.page_id)), doc)?;
        }
        if !site.graphs.is_empty() {
            mkdir(&base.join("graphs"))?;
            for g in &site.graphs {
                write_json(&base.join("graphs").join(format!("{}.json", g.page_id())), g)?;
            }
        }
    }
    Ok(())
}

pub fn read_corpus_dir(dir: &Path) -> Result<Vec<StoredWebsite>, DatasetError> {
    let mut out = Vec::new();
    let list = |p: &Path| -> Result<Vec<std::path::PathBuf>, DatasetError> {
        let mut v = Vec::new();
        for e in fs::read_dir(p).map_err(|source| DatasetError::Io {
            path: p.to_path_buf(),
            source,
        })? {
            let e = e.map_err(|source| DatasetError::Io {
                path: p.to_path_buf(),
                source,
            })?;
            v.push(e.path());
        }
        v.sort();
        Ok(v)
    };
    for vdir in list(dir)?.into_iter().filter(|p| p.is_dir()) {
        for wdir in list(&vdir)?.into_iter().filter(|p| p.is_dir()) {
            let freq: TextFreqTable = read_json(&wdir.join("textfreq.json"))?;
            let mut docs = Vec::new();
            for p in list(&wdir.join("docs"))? {
                docs.push(read_json::<PageDoc>(&p)?);
            }
            let mut graphs = Vec::new();
            let gdir = wdir.join("graphs");
            if gdir.is_dir() {
                for p in list(&gdir)? {
                    graphs.push(read_json::<PageGraph>(&p)?);
                }
            }
            out.push(StoredWebsite {
                vertical_id: vdir.file_name().unwrap().to_string_lossy().into_owned(),
                website_id: freq.website_id.clone(),
                freq,
                docs,
                graphs,
            });
        }
    }
    Ok(out)
}
