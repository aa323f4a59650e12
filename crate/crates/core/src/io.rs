//! Text serialisation of episodes and numeric tables.
//!
//! Floats are always written with 17 significant digits so that a round trip
//! through text reproduces the same bits.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::mdp::{Episode, Transition};

pub const EPISODE_HEADER: [&str; 5] = ["t", "s", "a", "r", "s_next"];

/// Formats a float with 17 significant digits.
///
/// ```
/// use chaotic_rl::io::fmt_f64;
/// let x = 0.1 + 0.2;
/// assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
/// assert_eq!(fmt_f64(-21.0), "-2.1000000000000000e1");
/// ```
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn format_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}

/// Writes one transition per line under the header `t,s,a,r,s_next`.
pub fn write_episode<W: Write>(episode: &Episode, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EPISODE_HEADER).map_err(format_err)?;
    for (t, tr) in episode.transitions.iter().enumerate() {
        w.write_record([
            t.to_string(),
            tr.state.to_string(),
            tr.action.to_string(),
            fmt_f64(tr.reward),
            tr.next_state.to_string(),
        ])
        .map_err(format_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses the format written by [`write_episode`].
///
/// The text does not record how the episode ended, so the caller supplies
/// `terminated`. An empty body needs `start_state` to be meaningful; otherwise
/// the start state is read from the first row.
pub fn read_episode<R: Read>(input: R, start_state: usize, terminated: bool) -> Result<Episode> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(format_err)?.clone();
    if header.iter().ne(EPISODE_HEADER) {
        return Err(Error::Format(format!("unexpected episode header {header:?}")));
    }
    let mut transitions = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(format_err)?;
        let field = |i: usize| rec.get(i).unwrap_or_default();
        let int = |i: usize| {
            field(i)
                .parse::<usize>()
                .map_err(|e| Error::Format(format!("row {row}, column {i}: {e}")))
        };
        if int(0)? != row {
            return Err(Error::Format(format!("row {row} carries time index {}", field(0))));
        }
        let reward = field(3)
            .parse::<f64>()
            .map_err(|e| Error::Format(format!("row {row}, reward: {e}")))?;
        transitions.push(Transition { state: int(1)?, action: int(2)?, reward, next_state: int(4)? });
    }
    let start_state = transitions.first().map_or(start_state, |t| t.state);
    let episode = Episode { start_state, transitions, terminated };
    episode.validate()?;
    Ok(episode)
}

/// Writes a header row then one row per matrix row.
pub fn write_matrix_csv<W: Write>(header: &[String], rows: &[Vec<f64>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(format_err)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::Format(format!(
                "row of width {} under a header of width {}",
                row.len(),
                header.len()
            )));
        }
        w.write_record(row.iter().map(|&x| fmt_f64(x))).map_err(format_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a rectangular numeric CSV with a header row.
pub fn read_matrix_csv<R: Read>(input: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let header: Vec<String> = rdr.headers().map_err(format_err)?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(format_err)?;
        if rec.len() != header.len() {
            return Err(Error::Format(format!(
                "row {i} has {} fields, header has {}",
                rec.len(),
                header.len()
            )));
        }
        let row = rec
            .iter()
            .map(|f| f.trim().parse::<f64>().map_err(|e| Error::Format(format!("row {i}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_episode() -> Episode {
        Episode {
            start_state: 2,
            transitions: vec![
                Transition { state: 2, action: 1, reward: 0.1 + 0.2, next_state: 0 },
                Transition { state: 0, action: 0, reward: -21.0, next_state: 3 },
            ],
            terminated: true,
        }
    }

    #[test]
    fn episode_text_layout() {
        let mut buf = Vec::new();
        write_episode(&sample_episode(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,s,a,r,s_next"));
        assert_eq!(lines.next(), Some("0,2,1,3.0000000000000004e-1,0"));
        assert_eq!(lines.next(), Some("1,0,0,-2.1000000000000000e1,3"));
        assert_eq!(lines.next(), None);
    }

    #[test]
    fn episode_round_trip() {
        let ep = sample_episode();
        let mut buf = Vec::new();
        write_episode(&ep, &mut buf).unwrap();
        assert_eq!(read_episode(buf.as_slice(), 0, true).unwrap(), ep);
    }

    #[test]
    fn broken_chain_rejected() {
        let text = "t,s,a,r,s_next\n0,0,0,1.0,1\n1,0,0,1.0,1\n";
        assert!(read_episode(text.as_bytes(), 0, false).is_err());
    }

    #[test]
    fn ragged_matrix_rejected() {
        let text = "a,b\n1,2\n3\n";
        assert!(matches!(read_matrix_csv(text.as_bytes()), Err(Error::Format(_))));
    }

    proptest! {
        #[test]
        fn matrix_round_trip_is_bit_exact(
            rows in prop::collection::vec(prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 3), 0..6)
        ) {
            let header: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
            let mut buf = Vec::new();
            write_matrix_csv(&header, &rows, &mut buf).unwrap();
            let (h, back) = read_matrix_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(h, header);
            prop_assert_eq!(back.len(), rows.len());
            for (r, b) in rows.iter().zip(&back) {
                for (x, y) in r.iter().zip(b) {
                    prop_assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
    }
}
