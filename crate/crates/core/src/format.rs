//! JSON instance file format.
//!
//! ```json
//! {
//!   "n": 2,
//!   "resources": [{"id": 0, "curve": [0.0, 1.0, 1.0]}],
//!   "action_sets": [[[], [0]], [[0]]],
//!   "utility": ["mc", "es"],
//!   "compromise": ["normal", "blind"]
//! }
//! ```
//!
//! Tabulated welfare lists resources without curves and adds a top-level
//! `"table": [{"subset": [0, 1], "value": 2.5}, ...]`. The empty action is
//! implied in every action set when omitted.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};
use crate::game::{Action, CompromiseLabel, GameInstance, ResourceId, UtilityKind, WelfareSpec};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    n: usize,
    resources: Vec<ResourceDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    table: Option<Vec<TableEntry>>,
    action_sets: Vec<Vec<Vec<u32>>>,
    utility: Vec<UtilityKind>,
    compromise: Vec<CompromiseLabel>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResourceDoc {
    id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    curve: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableEntry {
    subset: Vec<u32>,
    value: f64,
}

/// Pretty-printed instance document. Identical games give identical bytes.
pub fn serialize(game: &GameInstance) -> String {
    let (resources, table) = match game.welfare() {
        WelfareSpec::Separable { curves } => (
            curves
                .iter()
                .enumerate()
                .map(|(r, c)| ResourceDoc {
                    id: r as u32,
                    curve: Some(c.clone()),
                })
                .collect(),
            None,
        ),
        WelfareSpec::Tabulated { table } => (
            (0..game.num_resources())
                .map(|r| ResourceDoc {
                    id: r as u32,
                    curve: None,
                })
                .collect(),
            Some(
                table
                    .iter()
                    .map(|(s, &value)| TableEntry {
                        subset: s.iter().map(|r| r.0).collect(),
                        value,
                    })
                    .collect(),
            ),
        ),
    };
    let doc = InstanceDoc {
        n: game.n(),
        resources,
        table,
        action_sets: game
            .action_sets()
            .iter()
            .map(|set| {
                set.iter()
                    .map(|a| a.resources().iter().map(|r| r.0).collect())
                    .collect()
            })
            .collect(),
        utility: game.utilities().to_vec(),
        compromise: game.compromise().to_vec(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("instance documents always serialize");
    s.push('\n');
    s
}

/// Parses and validates an instance document.
pub fn parse(text: &str) -> Result<GameInstance> {
    let doc: InstanceDoc = serde_json::from_str(text).map_err(|e| GameError::Parse {
        location: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    let invalid = |msg: String| GameError::Invalid(msg);

    let n = doc.n;
    if doc.action_sets.len() != n || doc.utility.len() != n || doc.compromise.len() != n {
        return Err(invalid(format!(
            "n = {n} but action_sets/utility/compromise have {}/{}/{} entries",
            doc.action_sets.len(),
            doc.utility.len(),
            doc.compromise.len()
        )));
    }

    let m = doc.resources.len();
    let mut by_id: Vec<Option<&ResourceDoc>> = vec![None; m];
    for r in &doc.resources {
        let slot = by_id
            .get_mut(r.id as usize)
            .ok_or_else(|| invalid(format!("resource ids must be 0..{m}; found {}", r.id)))?;
        if slot.is_some() {
            return Err(invalid(format!("resource id {} listed twice", r.id)));
        }
        *slot = Some(r);
    }
    let resources: Vec<&ResourceDoc> = by_id
        .into_iter()
        .map(|r| r.expect("ids are a permutation"))
        .collect();

    let with_curve = resources.iter().filter(|r| r.curve.is_some()).count();
    let welfare = match (&doc.table, with_curve) {
        (None, c) if c == m => WelfareSpec::Separable {
            curves: resources.iter().map(|r| r.curve.clone().unwrap()).collect(),
        },
        (Some(entries), 0) => {
            let mut table = BTreeMap::new();
            for e in entries {
                let key = Action::from_ids(e.subset.iter().copied())
                    .resources()
                    .to_vec();
                if key.len() != e.subset.len() {
                    return Err(invalid(format!(
                        "table subset {:?} repeats a resource",
                        e.subset
                    )));
                }
                if table.insert(key, e.value).is_some() {
                    return Err(invalid(format!("table lists subset {:?} twice", e.subset)));
                }
            }
            WelfareSpec::Tabulated { table }
        }
        (None, _) => {
            return Err(invalid(
                "every resource needs a curve when no table is given".into(),
            ))
        }
        (Some(_), _) => {
            return Err(invalid(
                "give either per-resource curves or a table, not both".into(),
            ))
        }
    };

    let action_sets = doc
        .action_sets
        .iter()
        .map(|set| {
            set.iter()
                .map(|ids| Action::new(ids.iter().map(|&r| ResourceId(r))))
                .collect()
        })
        .collect();
    GameInstance::new(m, action_sets, welfare, doc.utility, doc.compromise)
}
