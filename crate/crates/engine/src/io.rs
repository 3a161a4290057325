//! Trajectory dumps: one CSV row per (replica, vertex, time).

use std::io::Write;

use pca_core::{StateSpace, Sym};

use crate::{EngineError, SystemState};

pub fn write_symbol_trajectories(
    states: &[SystemState<Sym>],
    space: &StateSpace,
    w: impl Write,
) -> Result<(), EngineError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["replica", "vertex", "time", "state"])?;
    for (r, s) in states.iter().enumerate() {
        for (v, t) in s.trajectories().iter().enumerate() {
            for (time, &x) in t.iter().enumerate() {
                out.write_record([r.to_string(), v.to_string(), time.to_string(), space.symbol_name(x)])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_real_trajectories(states: &[SystemState<f64>], w: impl Write) -> Result<(), EngineError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["replica", "vertex", "time", "state"])?;
    for (r, s) in states.iter().enumerate() {
        for (v, t) in s.trajectories().iter().enumerate() {
            for (time, &x) in t.iter().enumerate() {
                out.write_record([r.to_string(), v.to_string(), time.to_string(), format!("{x:.17e}")])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows() {
        let s = SystemState::from_trajectories(vec![vec![0u8, 1], vec![1, 1]]).unwrap();
        let mut buf = vec![];
        write_symbol_trajectories(&[s], &StateSpace::binary(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert_eq!(text.lines().nth(2).unwrap(), "0,0,1,1");
    }
}
