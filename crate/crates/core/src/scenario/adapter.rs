//! Reference adapter from a long-format track table into a [`Scenario`].
//!
//! Vendor datasets differ in packaging but most can be flattened into rows of
//! `frame,agent_id,category,x,y,heading,speed,length,width`. The adapter
//! builds tracks from such rows; maps are left empty.

use std::collections::BTreeMap;
use std::io::Read;

use serde::Deserialize;

use super::format::{resolve_headings, RawState};
use super::{
    check_invariants, AgentCategory, AgentState, AgentTrack, MapData, Scenario, ScenarioError,
    ScenarioMeta,
};
use crate::geometry::Vec2;

#[derive(Debug, Clone, Deserialize)]
pub struct TrackCsvRow {
    pub frame: usize,
    pub agent_id: String,
    pub category: String,
    pub x: f64,
    pub y: f64,
    pub heading: Option<f64>,
    pub speed: Option<f64>,
    pub length: f64,
    pub width: f64,
}

#[derive(Debug, Clone)]
pub struct TrackCsvAdapter {
    pub dataset_name: String,
    pub city: String,
    pub frame_rate_hz: f64,
}

impl TrackCsvAdapter {
    pub fn read<R: Read>(&self, scenario_id: &str, reader: R) -> Result<Scenario, ScenarioError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut rows = Vec::new();
        for (i, rec) in rdr.deserialize::<TrackCsvRow>().enumerate() {
            let row = rec.map_err(|e| ScenarioError::Parse {
                path: format!("row {}", i + 1),
                message: e.to_string(),
            })?;
            rows.push(row);
        }
        self.from_rows(scenario_id, rows)
    }

    pub fn from_rows(
        &self,
        scenario_id: &str,
        rows: Vec<TrackCsvRow>,
    ) -> Result<Scenario, ScenarioError> {
        let frame_count = rows.iter().map(|r| r.frame + 1).max().unwrap_or(0);
        // first-seen order keeps agent ordering stable
        let mut order: Vec<String> = Vec::new();
        let mut by_agent: BTreeMap<String, Vec<TrackCsvRow>> = BTreeMap::new();
        for r in rows {
            if !by_agent.contains_key(&r.agent_id) {
                order.push(r.agent_id.clone());
            }
            by_agent.entry(r.agent_id.clone()).or_default().push(r);
        }

        let mut agents = Vec::with_capacity(order.len());
        for id in order {
            let rows = &by_agent[&id];
            let first = &rows[0];
            let mut raw: Vec<RawState> = (0..frame_count)
                .map(|_| RawState {
                    position: Vec2::ZERO,
                    heading: Some(0.0),
                    speed: None,
                })
                .collect();
            let mut valid = vec![false; frame_count];
            for r in rows {
                if valid[r.frame] {
                    return Err(ScenarioError::invariant(
                        format!("agent {id} frame {}", r.frame),
                        "duplicate row",
                    ));
                }
                valid[r.frame] = true;
                raw[r.frame] = RawState {
                    position: Vec2::new(r.x, r.y),
                    heading: r.heading,
                    speed: r.speed,
                };
            }
            let headings = resolve_headings(&raw, &valid);
            agents.push(AgentTrack {
                agent_id: id.clone(),
                category: AgentCategory::parse(&first.category),
                length: first.length,
                width: first.width,
                states: raw
                    .iter()
                    .zip(headings)
                    .map(|(r, heading)| AgentState {
                        position: r.position,
                        heading,
                        speed: r.speed,
                    })
                    .collect(),
                valid,
            });
        }

        let scenario = Scenario {
            meta: ScenarioMeta {
                scenario_id: scenario_id.to_owned(),
                dataset_name: self.dataset_name.clone(),
                city: self.city.clone(),
                frame_rate_hz: self.frame_rate_hz,
                time_of_day: None,
            },
            map: MapData::default(),
            agents,
            frame_count,
        };
        if let Some(v) = check_invariants(&scenario).into_iter().next() {
            return Err(v.into());
        }
        Ok(scenario)
    }
}
