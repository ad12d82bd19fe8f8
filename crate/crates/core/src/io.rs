//! JSON documents for instances and divisions. Rationals are `"p/q"` strings.
//!
//! ```json
//! { "label": "intro", "n": 2, "params": { "eps": "1/50" },
//!   "players": [ { "segments": [ { "left": "0/1", "right": "1/1", "mass": "1/1" } ] } ] }
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{CakeError, Result};
use crate::model::{make_valuation, Division, Instance, Interval, Segment};
use crate::rational::{format_rational, parse_rational, Rational};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub label: String,
    pub n: usize,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
    pub players: Vec<PlayerDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerDoc {
    pub segments: Vec<SegmentDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentDoc {
    pub left: String,
    pub right: String,
    pub mass: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DivisionDoc {
    pub pieces: Vec<PieceDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceDoc {
    pub left: String,
    pub right: String,
}

fn schema(location: impl Into<String>, message: impl Into<String>) -> CakeError {
    CakeError::Schema {
        location: location.into(),
        message: message.into(),
    }
}

fn field(location: String, text: &str) -> Result<Rational> {
    parse_rational(text).map_err(|e| schema(location, e.to_string()))
}

/// Re-labels model errors with the player they came from.
fn locate(player: usize, err: CakeError) -> CakeError {
    match err {
        CakeError::InvalidSegment { index, reason } => schema(format!("players[{player}].segments[{index}]"), reason),
        CakeError::OverlappingSegments { first, second } => schema(
            format!("players[{player}].segments"),
            format!("segments {first} and {second} overlap"),
        ),
        CakeError::NotNormalized { total } => schema(
            format!("players[{player}]"),
            format!("mass sums to {} instead of 1", format_rational(&total)),
        ),
        other => other,
    }
}

impl InstanceDoc {
    pub fn from_instance(instance: &Instance) -> Self {
        Self {
            label: instance.label.clone(),
            n: instance.n(),
            params: instance
                .params
                .iter()
                .map(|(k, v)| (k.clone(), format_rational(v)))
                .collect(),
            players: instance
                .players()
                .iter()
                .map(|v| PlayerDoc {
                    segments: v
                        .segments()
                        .map(|(l, r, m)| SegmentDoc {
                            left: format_rational(l),
                            right: format_rational(r),
                            mass: format_rational(m),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    /// Validates the document. Mass errors are reported as
    /// [`CakeError::NotNormalized`]; everything else as a located
    /// [`CakeError::Schema`].
    pub fn to_instance(&self) -> Result<Instance> {
        if self.n != self.players.len() {
            return Err(schema(
                "n",
                format!("n = {} but {} players are listed", self.n, self.players.len()),
            ));
        }
        if self.players.is_empty() {
            return Err(schema("players", "at least one player is required"));
        }
        let mut players = Vec::with_capacity(self.players.len());
        for (i, player) in self.players.iter().enumerate() {
            let segments = player
                .segments
                .iter()
                .enumerate()
                .map(|(j, s)| -> Result<Segment> {
                    let at = |name: &str| format!("players[{i}].segments[{j}].{name}");
                    Ok((
                        field(at("left"), &s.left)?,
                        field(at("right"), &s.right)?,
                        field(at("mass"), &s.mass)?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            let valuation = make_valuation(&segments).map_err(|e| match e {
                e @ CakeError::NotNormalized { .. } => e,
                other => locate(i, other),
            })?;
            players.push(valuation);
        }
        let mut instance = Instance::new(players, self.label.clone())?;
        for (key, value) in &self.params {
            instance
                .params
                .insert(key.clone(), field(format!("params.{key}"), value)?);
        }
        Ok(instance)
    }
}

impl DivisionDoc {
    pub fn from_division(division: &Division) -> Self {
        Self {
            pieces: division
                .pieces()
                .iter()
                .map(|p| PieceDoc {
                    left: format_rational(p.left()),
                    right: format_rational(p.right()),
                })
                .collect(),
        }
    }

    /// Validates interval bounds and disjointness.
    pub fn to_division(&self) -> Result<Division> {
        let pieces = self
            .pieces
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let left = field(format!("pieces[{i}].left"), &p.left)?;
                let right = field(format!("pieces[{i}].right"), &p.right)?;
                Interval::new(left, right).map_err(|e| schema(format!("pieces[{i}]"), e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let division = Division::new(pieces);
        division.check_disjoint()?;
        Ok(division)
    }
}

fn json_error(err: serde_json::Error) -> CakeError {
    schema(format!("line {} column {}", err.line(), err.column()), err.to_string())
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let doc: InstanceDoc = serde_json::from_str(text).map_err(json_error)?;
    doc.to_instance()
}

pub fn serialize_instance(instance: &Instance) -> String {
    to_pretty(&InstanceDoc::from_instance(instance))
}

pub fn parse_division(text: &str) -> Result<Division> {
    let doc: DivisionDoc = serde_json::from_str(text).map_err(json_error)?;
    doc.to_division()
}

pub fn serialize_division(division: &Division) -> String {
    to_pretty(&DivisionDoc::from_division(division))
}

/// Pretty JSON with a trailing newline.
pub fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("documents serialize");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Valuation;
    use crate::rational::{int, rat};

    fn intro() -> Instance {
        let bob = make_valuation(&[(rat(99, 200), rat(101, 200), int(1))]).unwrap();
        Instance::new(vec![Valuation::uniform(), bob], "intro")
            .unwrap()
            .with_param("eps", rat(1, 50))
    }

    #[test]
    fn instance_round_trip() {
        let inst = intro();
        let text = serialize_instance(&inst);
        assert_eq!(parse_instance(&text).unwrap(), inst);
        assert!(text.find("\"label\"").unwrap() < text.find("\"n\"").unwrap());
        assert!(text.find("\"params\"").unwrap() < text.find("\"players\"").unwrap());
    }

    #[test]
    fn mass_deficit_is_not_normalized() {
        let text = r#"{"label":"x","n":1,"params":{},"players":[{"segments":[
            {"left":"0","right":"1","mass":"9/10"}]}]}"#;
        assert_eq!(
            parse_instance(text).unwrap_err(),
            CakeError::NotNormalized { total: rat(9, 10) }
        );
    }

    #[test]
    fn zero_denominator_is_schema_error() {
        let text = r#"{"label":"x","n":1,"params":{},"players":[{"segments":[
            {"left":"0","right":"1/0","mass":"1"}]}]}"#;
        match parse_instance(text).unwrap_err() {
            CakeError::Schema { location, .. } => {
                assert_eq!(location, "players[0].segments[0].right")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn player_count_must_match() {
        let text = r#"{"label":"x","n":2,"players":[{"segments":[
            {"left":"0","right":"1","mass":"1"}]}]}"#;
        assert!(matches!(parse_instance(text).unwrap_err(), CakeError::Schema { .. }));
    }

    #[test]
    fn overlapping_segments_are_located() {
        let text = r#"{"label":"x","n":1,"players":[{"segments":[
            {"left":"0","right":"2/3","mass":"1/2"},{"left":"1/3","right":"1","mass":"1/2"}]}]}"#;
        match parse_instance(text).unwrap_err() {
            CakeError::Schema { location, .. } => assert_eq!(location, "players[0].segments"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn division_round_trip_and_overlap() {
        let d = Division::new(vec![
            Interval::new(int(0), rat(1, 2)).unwrap(),
            Interval::new(rat(1, 2), rat(49, 50)).unwrap(),
        ]);
        let text = serialize_division(&d);
        assert!(text.contains("\"1/2\""));
        assert_eq!(parse_division(&text).unwrap(), d);

        let bad = r#"{"pieces":[{"left":"0","right":"3/5"},{"left":"1/2","right":"1"}]}"#;
        assert_eq!(
            parse_division(bad).unwrap_err(),
            CakeError::OverlappingPieces { first: 0, second: 1 }
        );
        assert!(parse_division("{\"pieces\": 3}").is_err());
    }
}
