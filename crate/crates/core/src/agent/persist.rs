//! Q-table file format.
//!
//! ```text
//! offset  size      field
//! 0       8         magic "KDNSIMQT"
//! 8       4         format version, u32 little-endian (currently 1)
//! 12      4         header length H in bytes, u32 little-endian
//! 16      H         header, UTF-8 JSON object (see `TableHeader`)
//! 16+H    8·S·A     action values, f64 little-endian, row-major (state, action)
//! ...     8·S·A     visit counts, u64 little-endian, same order
//! ```
//!
//! The file must end exactly after the visit counts. A short or long file is a
//! format error and no table is returned.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Action, Feature, HyperParams, QTable, StateBins};
use crate::error::{Error, Result};

pub const QTABLE_MAGIC: &[u8; 8] = b"KDNSIMQT";
pub const QTABLE_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableHeader {
    pub states: usize,
    pub actions: usize,
    pub feature_order: Vec<String>,
    pub action_set: Vec<String>,
    pub bins: Option<StateBins>,
    pub hyperparams: Option<HyperParams>,
}

impl TableHeader {
    /// Header for the network agent's table.
    pub fn for_agent(bins: &StateBins, hp: &HyperParams) -> Self {
        TableHeader {
            states: bins.state_count(),
            actions: Action::COUNT,
            feature_order: Feature::ORDER.iter().map(|f| f.name().to_owned()).collect(),
            action_set: Action::ALL.iter().map(|a| a.name().to_owned()).collect(),
            bins: Some(bins.clone()),
            hyperparams: Some(*hp),
        }
    }

    /// Checks that a table with this header can drive an agent using `bins`.
    pub fn check_compatible(&self, bins: &StateBins) -> Result<()> {
        let expected = TableHeader::for_agent(bins, &HyperParams::default());
        if self.states != expected.states {
            return Err(Error::IncompatibleTable(format!(
                "table has {} states, bins need {}",
                self.states, expected.states
            )));
        }
        if self.actions != expected.actions || self.action_set != expected.action_set {
            return Err(Error::IncompatibleTable(format!(
                "action set {:?} does not match {:?}",
                self.action_set, expected.action_set
            )));
        }
        if self.feature_order != expected.feature_order {
            return Err(Error::IncompatibleTable(format!(
                "feature order {:?} does not match {:?}",
                self.feature_order, expected.feature_order
            )));
        }
        if self.bins.as_ref() != Some(bins) {
            return Err(Error::IncompatibleTable("bin boundaries differ".into()));
        }
        Ok(())
    }
}

pub fn write_qtable<W: Write>(mut w: W, q: &QTable, header: &TableHeader) -> Result<()> {
    if header.states != q.states() || header.actions != q.actions() {
        return Err(Error::IncompatibleTable(format!(
            "header says {}x{}, table is {}x{}",
            header.states,
            header.actions,
            q.states(),
            q.actions()
        )));
    }
    let json = serde_json::to_vec(header)?;
    let header_len =
        u32::try_from(json.len()).map_err(|_| Error::TableFormat("header too large".into()))?;
    let mut buf = Vec::with_capacity(16 + json.len() + 16 * q.values().len());
    buf.extend_from_slice(QTABLE_MAGIC);
    buf.extend_from_slice(&QTABLE_VERSION.to_le_bytes());
    buf.extend_from_slice(&header_len.to_le_bytes());
    buf.extend_from_slice(&json);
    for v in q.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for c in q.visit_counts() {
        buf.extend_from_slice(&c.to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

fn take<'a>(bytes: &mut &'a [u8], n: usize, what: &str) -> Result<&'a [u8]> {
    if bytes.len() < n {
        return Err(Error::TableFormat(format!(
            "truncated while reading {what}"
        )));
    }
    let (head, rest) = bytes.split_at(n);
    *bytes = rest;
    Ok(head)
}

fn take_u32(bytes: &mut &[u8], what: &str) -> Result<u32> {
    let raw = take(bytes, 4, what)?;
    Ok(u32::from_le_bytes(raw.try_into().expect("4 bytes")))
}

pub fn read_qtable<R: Read>(mut r: R) -> Result<(QTable, TableHeader)> {
    let mut data = Vec::new();
    r.read_to_end(&mut data)?;
    let mut bytes = data.as_slice();

    if take(&mut bytes, 8, "magic")? != QTABLE_MAGIC {
        return Err(Error::TableFormat("bad magic".into()));
    }
    let version = take_u32(&mut bytes, "version")?;
    if version != QTABLE_VERSION {
        return Err(Error::IncompatibleTable(format!(
            "unsupported format version {version}"
        )));
    }
    let header_len = take_u32(&mut bytes, "header length")? as usize;
    let header: TableHeader = serde_json::from_slice(take(&mut bytes, header_len, "header")?)
        .map_err(|e| Error::TableFormat(format!("header: {e}")))?;

    let cells = header
        .states
        .checked_mul(header.actions)
        .filter(|c| c.checked_mul(16).is_some())
        .ok_or_else(|| Error::TableFormat("table dimensions overflow".into()))?;
    let expected = cells * 16;
    if bytes.len() != expected {
        return Err(Error::TableFormat(format!(
            "body has {} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    let (value_bytes, visit_bytes) = bytes.split_at(cells * 8);
    let values = value_bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let visits = visit_bytes
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let q = QTable::from_parts(header.states, header.actions, values, visits)?;
    Ok((q, header))
}

pub fn save_qtable(path: &Path, q: &QTable, header: &TableHeader) -> Result<()> {
    let mut buf = Vec::new();
    write_qtable(&mut buf, q, header)?;
    fs::write(path, buf).map_err(|e| Error::path_io(path, e))
}

/// Loads a table and checks it against the bins the caller will use.
pub fn load_qtable(path: &Path, bins: &StateBins) -> Result<(QTable, TableHeader)> {
    let file = fs::File::open(path).map_err(|e| Error::path_io(path, e))?;
    let (q, header) = read_qtable(std::io::BufReader::new(file))?;
    header.check_compatible(bins)?;
    Ok((q, header))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_table() -> (QTable, TableHeader) {
        let bins = StateBins::default();
        let hp = HyperParams::default();
        let mut q = QTable::zeros(bins.state_count(), Action::COUNT);
        q.update(17, 3, 2.5, 40, &hp);
        q.set(485, 5, -1.0 / 3.0);
        (q, TableHeader::for_agent(&bins, &hp))
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let (q, header) = sample_table();
        let mut buf = Vec::new();
        write_qtable(&mut buf, &q, &header).unwrap();
        let (back, back_header) = read_qtable(buf.as_slice()).unwrap();
        assert_eq!(back_header, header);
        assert_eq!(back.visit_counts(), q.visit_counts());
        assert!(back
            .values()
            .iter()
            .zip(q.values())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn truncated_file_fails() {
        let (q, header) = sample_table();
        let mut buf = Vec::new();
        write_qtable(&mut buf, &q, &header).unwrap();
        for cut in [0, 7, 12, 40, buf.len() - 1] {
            assert!(matches!(
                read_qtable(&buf[..cut]),
                Err(Error::TableFormat(_))
            ));
        }
        buf.push(0);
        assert!(read_qtable(buf.as_slice()).is_err());
    }

    #[test]
    fn mismatched_bins_are_incompatible() {
        let (_, header) = sample_table();
        let other = StateBins {
            speed_mps: vec![2.0, 8.0],
            ..StateBins::default()
        };
        assert!(matches!(
            header.check_compatible(&other),
            Err(Error::IncompatibleTable(_))
        ));
        assert!(header.check_compatible(&StateBins::default()).is_ok());
    }
}
