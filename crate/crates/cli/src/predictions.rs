//! Predictions TSV: `page_id keyword relation value k_node v_node score`,
//! where `page_id` is `vertical/website/page`.

use std::collections::BTreeMap;
use std::path::Path;

use relgraph_core::eval::UnitKey;
use relgraph_core::ExtractionTuple;

use crate::error::CliError;

pub const HEADER: &str = "page_id\tkeyword\trelation\tvalue\tk_node\tv_node\tscore";

/// Tabs and newlines inside page text would break the columns.
fn clean(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

pub fn to_tsv(preds: &BTreeMap<UnitKey, Vec<ExtractionTuple>>) -> String {
    let mut s = String::from(HEADER);
    s.push('\n');
    for (unit, tuples) in preds {
        for t in tuples {
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                unit.page,
                clean(&unit.keyword),
                clean(&t.relation),
                clean(&t.value),
                t.k_node,
                t.v_node,
                t.score
            ));
        }
    }
    s
}

pub fn parse_tsv(path: &Path, text: &str) -> Result<BTreeMap<UnitKey, Vec<ExtractionTuple>>, CliError> {
    let mut out: BTreeMap<UnitKey, Vec<ExtractionTuple>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || (i == 0 && line == HEADER) {
            continue;
        }
        let bad = |message: String| CliError::BadInput { path: path.to_path_buf(), line: i + 1, message };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 7 {
            return Err(bad(format!("expected 7 columns, found {}", cols.len())));
        }
        let num = |c: &str, what: &str| c.parse::<usize>().map_err(|e| bad(format!("{what}: {e}")));
        let tuple = ExtractionTuple {
            relation: cols[2].to_string(),
            value: cols[3].to_string(),
            k_node: num(cols[4], "k_node")?,
            v_node: num(cols[5], "v_node")?,
            score: cols[6].parse().map_err(|e| bad(format!("score: {e}")))?,
        };
        out.entry(UnitKey::new(cols[0], cols[1])).or_default().push(tuple);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let t = ExtractionTuple { relation: "Price".into(), value: "$1\t2".into(), k_node: 3, v_node: 4, score: 0.875 };
        let map = BTreeMap::from([(UnitKey::new("v/w/p", "price"), vec![t])]);
        let text = to_tsv(&map);
        let back = parse_tsv(Path::new("x"), &text).unwrap();
        assert_eq!(back[&UnitKey::new("v/w/p", "price")][0].value, "$1 2");
        assert_eq!(back[&UnitKey::new("v/w/p", "price")][0].score, 0.875);
        assert!(parse_tsv(Path::new("x"), "a\tb\n").is_err());
    }
}
