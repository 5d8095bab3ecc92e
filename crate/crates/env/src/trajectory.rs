//! Line-delimited trajectory records for the plotting pipeline.
//!
//! One JSON object per line: `(episode, step, agent, state, action, cost)`,
//! where `cost` is the stage cost of the agent's team at that step.

use std::io::Write;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrajectoryRecord {
    pub episode: u64,
    pub step: usize,
    pub agent: usize,
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub cost: f64,
}

pub fn write_records<W: Write>(
    mut out: W,
    records: &[TrajectoryRecord],
) -> std::io::Result<()> {
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_records(text: &str) -> Result<Vec<TrajectoryRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let records = vec![TrajectoryRecord {
            episode: 1,
            step: 2,
            agent: 0,
            state: vec![0.5, -0.25],
            action: vec![1.0],
            cost: 0.125,
        }];
        let mut buf = Vec::new();
        write_records(&mut buf, &records).unwrap();
        let back = read_records(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, records);
    }
}
