use std::path::Path;

use serde_json::json;

use netmix::analysis::rank_items;
use netmix::io::{read_id_column, write_rank_csv};

use super::{csv_bytes, num, out_dir};
use crate::artifacts::Artifacts;
use crate::error::{CliError, CliResult};
use crate::settings::{key, Key, Settings};

pub const KEYS: &[Key] = &[key("input", None), key("column", None), key("query", None)];

/// Ranks by descending value. Ids are sorted first so that tied items
/// come out in a fixed order whatever the input order.
pub fn run(s: &Settings) -> CliResult<()> {
    let out = out_dir(s)?;
    let input = Path::new(s.require("input")?);
    let map = read_id_column(input, s.get("column"))?;
    let mut art = Artifacts::default();
    art.input("input", input)?;
    let mut ids: Vec<String> = map.keys().cloned().collect();
    ids.sort();
    let values: Vec<f64> = ids.iter().map(|id| map[id]).collect();
    let table = rank_items(&ids, &values);
    art.write_with("ranks.csv", |b| write_rank_csv(&table, b))?;
    let query = s.list("query");
    if !query.is_empty() {
        let rows = query
            .iter()
            .map(|q| {
                let e = table
                    .entries
                    .iter()
                    .find(|e| &e.id == q)
                    .ok_or_else(|| CliError::data(format!("query id `{q}` not in {}", input.display())))?;
                Ok(vec![e.id.clone(), num(e.p_hat), e.rank.to_string()])
            })
            .collect::<CliResult<Vec<_>>>()?;
        art.add(
            "query.csv",
            csv_bytes(&["id", "p_hat", "rank"], rows).map_err(|e| CliError::data(e.to_string()))?,
        );
    }
    art.commit(
        &out,
        "rank",
        s,
        json!({ "items": ids.len(), "tied_at_one": table.tied_at_one }),
    )
}
