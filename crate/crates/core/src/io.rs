//! JSON system files.
//!
//! ```json
//! {
//!   "contents": [{"id": "q1", "values": ["0", "1"]}],
//!   "contexts": [{"id": "c1", "measures": ["q1"],
//!                 "distribution": [{"state": {"q1": "0"}, "p": "1/2"},
//!                                  {"state": {"q1": "1"}, "p": ".5"}]}]
//! }
//! ```
//!
//! Probabilities are strings holding either `a/b` or a decimal; omitted
//! states have mass zero.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CbdError, Result};
use crate::rational::{format_rational, parse_rational};
use crate::system::{BunchDistribution, System, ValueSet};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemFile {
    contents: Vec<ContentEntry>,
    contexts: Vec<ContextEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ContentEntry {
    id: String,
    values: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ContextEntry {
    id: String,
    measures: Vec<String>,
    distribution: Vec<StateEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateEntry {
    state: BTreeMap<String, String>,
    p: String,
}

/// Parses a system file. The result is not validated; run
/// [`crate::system::validate_system`] on it.
pub fn system_from_json(text: &str) -> Result<System> {
    let file: SystemFile =
        serde_json::from_str(text).map_err(|e| CbdError::Parse(e.to_string()))?;

    let mut contents = Vec::with_capacity(file.contents.len());
    let mut ids = BTreeSet::new();
    for c in file.contents {
        if !ids.insert(c.id.clone()) {
            return Err(CbdError::Parse(format!(
                "content `{}` declared twice",
                c.id
            )));
        }
        let vs = ValueSet::new(c.values)
            .map_err(|e| CbdError::Parse(format!("content `{}`: {e}", c.id)))?;
        contents.push((c.id, vs));
    }

    let mut bunches = Vec::with_capacity(file.contexts.len());
    let mut ctx_ids = BTreeSet::new();
    for ctx in file.contexts {
        if !ctx_ids.insert(ctx.id.clone()) {
            return Err(CbdError::Parse(format!(
                "context `{}` declared twice",
                ctx.id
            )));
        }
        let mut masses = Vec::with_capacity(ctx.distribution.len());
        let mut seen = BTreeSet::new();
        for entry in ctx.distribution {
            let keys: BTreeSet<&String> = entry.state.keys().collect();
            let expected: BTreeSet<&String> = ctx.measures.iter().collect();
            if keys != expected {
                return Err(CbdError::Parse(format!(
                    "context `{}`: state keys {:?} do not match measured contents {:?}",
                    ctx.id, keys, ctx.measures
                )));
            }
            let state: Vec<String> = ctx
                .measures
                .iter()
                .map(|q| entry.state[q].clone())
                .collect();
            if !seen.insert(state.clone()) {
                return Err(CbdError::Parse(format!(
                    "context `{}`: state {:?} listed twice",
                    ctx.id, state
                )));
            }
            let p = parse_rational(&entry.p)
                .map_err(|e| CbdError::Parse(format!("context `{}`: {e}", ctx.id)))?;
            masses.push((state, p));
        }
        bunches.push(BunchDistribution::new(ctx.id, ctx.measures, masses));
    }
    Ok(System::new(contents, bunches))
}

pub fn load_system_file(path: impl AsRef<Path>) -> Result<System> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| CbdError::Parse(format!("{}: {e}", path.display())))?;
    system_from_json(&text)
}

/// Serializes a system in the same file format; ids in lexicographic order.
pub fn system_to_json(sys: &System) -> String {
    let file = SystemFile {
        contents: sys
            .contents()
            .iter()
            .map(|(id, vs)| ContentEntry {
                id: id.clone(),
                values: vs.labels().to_vec(),
            })
            .collect(),
        contexts: sys
            .bunches()
            .values()
            .map(|b| ContextEntry {
                id: b.context().to_string(),
                measures: b.contents().to_vec(),
                distribution: b
                    .masses()
                    .iter()
                    .map(|(state, p)| StateEntry {
                        state: b
                            .contents()
                            .iter()
                            .cloned()
                            .zip(state.iter().cloned())
                            .collect(),
                        p: format_rational(p),
                    })
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("system file serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;
    use crate::system::validate_system;

    const TWO: &str = r#"{
      "contents": [{"id": "q1", "values": ["0","1"]}, {"id": "q2", "values": ["0","1"]}],
      "contexts": [
        {"id": "c1", "measures": ["q1","q2"], "distribution": [
          {"state": {"q1":"0","q2":"0"}, "p": "1/2"},
          {"state": {"q1":"1","q2":"1"}, "p": ".5"}]},
        {"id": "c2", "measures": ["q1","q2"], "distribution": [
          {"state": {"q1":"0","q2":"1"}, "p": "0.5"},
          {"state": {"q1":"1","q2":"0"}, "p": "1/2"},
          {"state": {"q1":"1","q2":"1"}, "p": "0"}]}
      ]}"#;

    #[test]
    fn parses_and_round_trips() {
        let sys = system_from_json(TWO).unwrap();
        assert!(validate_system(&sys).is_ok());
        assert_eq!(sys.bunches().len(), 2);
        assert_eq!(sys.bunch("c2").unwrap().support_size(), 2);
        assert_eq!(
            sys.bunch("c1")
                .unwrap()
                .mass_of(&["1".to_string(), "1".to_string()]),
            ratio(1, 2)
        );
        let again = system_from_json(&system_to_json(&sys)).unwrap();
        assert_eq!(again, sys);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(system_from_json(""), Err(CbdError::Parse(_))));
        let err = system_from_json("{\n \"contents\": [,]}").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let missing_key = TWO.replace(r#"{"q1":"0","q2":"0"}"#, r#"{"q1":"0"}"#);
        assert!(system_from_json(&missing_key).is_err());
        let bad_p = TWO.replace(r#""p": ".5""#, r#""p": "half""#);
        assert!(system_from_json(&bad_p).is_err());
    }
}
