//! Trajectory files: one JSON object per transition, plus a `.meta.json`
//! sidecar describing where the data came from.
//!
//! ```text
//! {"episode_id":0,"t":0,"state":3,"action":1,"next_state":8,"done":false}
//! ```
//!
//! Expert files never carry the reward column.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::env::{Action, ObservedTransition, State, Trajectory};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Row {
    episode_id: usize,
    t: usize,
    state: State,
    action: Action,
    next_state: State,
    done: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    true_reward: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub env: String,
    pub seed: u64,
    pub n_trajectories: usize,
    pub noise_epsilon: f64,
    pub includes_true_reward: bool,
}

pub fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Writes trajectories without rewards (or with them, for evaluation dumps)
/// together with the sidecar.
pub fn write_trajectories(path: &Path, trajectories: &[Trajectory], meta: &TrajectoryMeta) -> Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    for (episode_id, traj) in trajectories.iter().enumerate() {
        for (t, tr) in traj.transitions.iter().enumerate() {
            let row = Row {
                episode_id,
                t,
                state: tr.state,
                action: tr.action,
                next_state: tr.next_state,
                done: tr.done,
                true_reward: meta.includes_true_reward.then_some(tr.true_reward),
            };
            serde_json::to_writer(&mut out, &row)?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()?;
    std::fs::write(meta_path(path), serde_json::to_string_pretty(meta)? + "\n")?;
    Ok(())
}

/// Reads a trajectory file back as reward-free episodes, in file order.
pub fn read_trajectories(path: &Path) -> Result<(Vec<Vec<ObservedTransition>>, TrajectoryMeta)> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    let meta_file = meta_path(path);
    let meta_text = std::fs::read_to_string(&meta_file)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", meta_file.display()))))?;
    let meta: TrajectoryMeta = serde_json::from_str(&meta_text)?;
    let mut episodes: Vec<Vec<ObservedTransition>> = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Row = serde_json::from_str(&line)
            .map_err(|e| Error::Format(format!("{} line {}: {e}", path.display(), lineno + 1)))?;
        if row.episode_id == episodes.len() && row.t == 0 {
            episodes.push(Vec::new());
        }
        let current = episodes.len();
        let Some(ep) = episodes.last_mut().filter(|_| row.episode_id + 1 == current) else {
            return Err(Error::Format(format!("{} line {}: episodes out of order", path.display(), lineno + 1)));
        };
        if row.t != ep.len() {
            return Err(Error::Format(format!("{} line {}: step index out of order", path.display(), lineno + 1)));
        }
        ep.push(ObservedTransition { state: row.state, action: row.action, next_state: row.next_state, done: row.done });
    }
    Ok((episodes, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{rollout, MdpSpec, UniformPolicy};

    fn meta(includes_true_reward: bool) -> TrajectoryMeta {
        TrajectoryMeta { env: "gridworld".into(), seed: 3, n_trajectories: 4, noise_epsilon: 0.0, includes_true_reward }
    }

    #[test]
    fn round_trip_strips_rewards() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("expert.jsonl");
        let spec = MdpSpec::default_gridworld();
        let trajs = rollout(&spec, &UniformPolicy, 4, 3).unwrap();
        write_trajectories(&path, &trajs, &meta(false)).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(!text.contains("reward"));
        let (eps, m) = read_trajectories(&path).unwrap();
        assert_eq!(m, meta(false));
        let expected: Vec<_> = trajs.iter().map(|t| t.observed()).collect();
        assert_eq!(eps, expected);
    }

    #[test]
    fn continuous_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pm.jsonl");
        let spec = MdpSpec::default_point_mass();
        let trajs = rollout(&spec, &UniformPolicy, 2, 0).unwrap();
        write_trajectories(&path, &trajs, &meta(true)).unwrap();
        let (eps, _) = read_trajectories(&path).unwrap();
        assert_eq!(eps, trajs.iter().map(|t| t.observed()).collect::<Vec<_>>());
    }

    #[test]
    fn missing_file_names_the_path() {
        let err = read_trajectories(Path::new("/nonexistent/expert.jsonl")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/expert.jsonl"), "{err}");
    }

    #[test]
    fn malformed_rows_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(meta_path(&path), serde_json::to_string(&meta(false)).unwrap()).unwrap();
        std::fs::write(&path, "{\"episode_id\":0,\"t\":1,\"state\":0,\"action\":0,\"next_state\":1,\"done\":false}\n").unwrap();
        assert!(read_trajectories(&path).is_err());
        std::fs::write(&path, "not json\n").unwrap();
        assert!(matches!(read_trajectories(&path), Err(Error::Format(_))));
    }
}
