//! File formats.
//!
//! * Games are JSON objects with the fields of [`MarkovGame`]; tensors are
//!   dense and row-major in the order `h, s, a_1, .., a_N` followed by the
//!   agent (rewards) or next state (transitions).
//! * Traces are JSON lines: a header, then one record per `(k, h)` in
//!   episode-major order, then a footer holding the final tables.
//! * Gap reports map each agent index to its bounds.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use marl_core::certify::GapReport;
use marl_core::pg::DirectPolicy;
use marl_core::vlearning::PolicyTrace;
use marl_core::MarkovGame;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

// Unreadable inputs are reported as bad input, not as runtime failures.
fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::format(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::format(path, e))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn load_game(path: &Path) -> Result<MarkovGame> {
    let game: MarkovGame = serde_json::from_reader(open(path)?).map_err(|e| Error::format(path, e))?;
    if game.n_agents != game.action_counts.len() {
        return Err(Error::format(path, format!("n_agents is {} but {} action counts are given", game.n_agents, game.action_counts.len())));
    }
    game.validate().map_err(|e| Error::format(path, e))?;
    Ok(game)
}

pub fn save_game(path: &Path, game: &MarkovGame) -> Result<()> {
    write_json(path, game)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum TraceLine {
    Header { n_agents: usize, horizon: usize, n_states: usize, action_counts: Vec<usize>, episodes: usize },
    Step { k: usize, h: usize, state: usize, stage_count: usize, joint_action: usize, dists: Vec<Vec<f64>> },
    Footer { final_tables: Vec<Vec<f64>> },
}

pub fn write_trace(path: &Path, trace: &PolicyTrace) -> Result<()> {
    let mut w = create(path)?;
    let mut line = |value: &TraceLine| -> Result<()> {
        serde_json::to_writer(&mut w, value).map_err(|e| Error::format(path, e))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))
    };
    line(&TraceLine::Header {
        n_agents: trace.n_agents(),
        horizon: trace.horizon,
        n_states: trace.n_states,
        action_counts: trace.action_counts.clone(),
        episodes: trace.episodes,
    })?;
    for k in 0..trace.episodes {
        for h in 0..trace.horizon {
            let at = k * trace.horizon + h;
            line(&TraceLine::Step {
                k,
                h,
                state: trace.states[at],
                stage_count: trace.stage_counts[at],
                joint_action: trace.joint_actions[at],
                dists: (0..trace.n_agents()).map(|i| trace.dist(i, k, h).to_vec()).collect(),
            })?;
        }
    }
    line(&TraceLine::Footer { final_tables: trace.final_tables.clone() })?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_trace(path: &Path) -> Result<PolicyTrace> {
    let mut lines = open(path)?.lines().enumerate();
    let mut next = || -> Result<Option<(usize, TraceLine)>> {
        match lines.next() {
            None => Ok(None),
            Some((n, l)) => {
                let l = l.map_err(|e| Error::io(path, e))?;
                let parsed = serde_json::from_str(&l).map_err(|e| Error::format(path, format!("line {}: {e}", n + 1)))?;
                Ok(Some((n + 1, parsed)))
            }
        }
    };
    let mut trace = match next()? {
        Some((_, TraceLine::Header { n_agents, horizon, n_states, action_counts, episodes })) => {
            if n_agents != action_counts.len() || horizon == 0 {
                return Err(Error::format(path, "inconsistent header"));
            }
            PolicyTrace {
                horizon,
                n_states,
                action_counts,
                episodes,
                states: Vec::new(),
                stage_counts: Vec::new(),
                joint_actions: Vec::new(),
                dists: vec![Vec::new(); n_agents],
                final_tables: Vec::new(),
            }
        }
        _ => return Err(Error::format(path, "missing header")),
    };
    let mut expected = 0;
    loop {
        match next()? {
            Some((n, TraceLine::Step { k, h, state, stage_count, joint_action, dists })) => {
                if (k, h) != (expected / trace.horizon, expected % trace.horizon) {
                    return Err(Error::format(path, format!("line {n}: record ({k}, {h}) out of order")));
                }
                if dists.len() != trace.n_agents() {
                    return Err(Error::format(path, format!("line {n}: expected {} distributions", trace.n_agents())));
                }
                trace.states.push(state);
                trace.stage_counts.push(stage_count);
                trace.joint_actions.push(joint_action);
                for (all, d) in trace.dists.iter_mut().zip(dists) {
                    all.extend(d);
                }
                expected += 1;
            }
            Some((_, TraceLine::Footer { final_tables })) => {
                trace.final_tables = final_tables;
                break;
            }
            Some((n, TraceLine::Header { .. })) => return Err(Error::format(path, format!("line {n}: second header"))),
            None => return Err(Error::format(path, "missing footer")),
        }
    }
    if next()?.is_some() {
        return Err(Error::format(path, "data after footer"));
    }
    trace.validate().map_err(|e| Error::format(path, e))?;
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentGap {
    pub cce_bound: f64,
    pub ce_bound: f64,
    pub certified_value: f64,
}

/// Normalized units; keys are agent indices.
pub fn gap_report_json(report: &GapReport) -> BTreeMap<String, AgentGap> {
    (0..report.certified_value.len())
        .map(|i| {
            let gap = AgentGap { cce_bound: report.cce_bound[i], ce_bound: report.ce_bound[i], certified_value: report.certified_value[i] };
            (i.to_string(), gap)
        })
        .collect()
}

pub fn write_gap_report(path: &Path, report: &GapReport) -> Result<()> {
    write_json(path, &gap_report_json(report))
}

pub fn read_gap_report(path: &Path) -> Result<BTreeMap<String, AgentGap>> {
    serde_json::from_reader(open(path)?).map_err(|e| Error::format(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySnapshot {
    pub last: DirectPolicy,
    pub sampled: DirectPolicy,
    /// Iteration the sampled iterate was taken from.
    pub tau: usize,
}
