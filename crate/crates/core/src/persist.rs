//! Versioned binary dump of a trained network.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic          8 bytes   "HEBBNET\n"
//! version        u32       1
//! examples_seen  u64
//! config_len     u64
//! config         config_len bytes of UTF-8 JSON (NetworkConfig)
//! layer_count    u32
//! per layer:     rows u32, cols u32, rows*cols f64 (IEEE-754 bits), row-major
//! ```
//!
//! Floats are written as raw bits, so a save/load cycle is exact.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::WeightMatrix;
use crate::network::{Network, NetworkConfig};

pub const MAGIC: &[u8; 8] = b"HEBBNET\n";
pub const VERSION: u32 = 1;

pub fn write_network<W: Write>(net: &Network, mut out: W) -> Result<()> {
    let config = serde_json::to_vec(net.config())
        .map_err(|e| Error::invalid(format!("cannot encode config: {e}")))?;
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&net.examples_seen().to_le_bytes())?;
    out.write_all(&(config.len() as u64).to_le_bytes())?;
    out.write_all(&config)?;
    out.write_all(&(net.weights().len() as u32).to_le_bytes())?;
    for m in net.weights() {
        out.write_all(&(m.rows() as u32).to_le_bytes())?;
        out.write_all(&(m.cols() as u32).to_le_bytes())?;
        let mut buf = Vec::with_capacity(m.as_slice().len() * 8);
        for w in m.as_slice() {
            buf.extend_from_slice(&w.to_bits().to_le_bytes());
        }
        out.write_all(&buf)?;
    }
    out.flush()?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::format(
                self.pos as u64,
                format!("truncated network dump while reading {what}"),
            )),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub fn read_network<R: Read>(mut input: R) -> Result<Network> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    decode(&bytes)
}

fn decode(bytes: &[u8]) -> Result<Network> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(MAGIC.len(), "magic")? != MAGIC {
        return Err(Error::format(0, "not a network dump (bad magic)"));
    }
    let version = cur.u32("version")?;
    if version != VERSION {
        return Err(Error::format(
            8,
            format!("unsupported dump version {version}"),
        ));
    }
    let examples_seen = cur.u64("examples_seen")?;
    let config_len = cur.u64("config length")? as usize;
    let config_at = cur.pos as u64;
    let config: NetworkConfig = serde_json::from_slice(cur.take(config_len, "config")?)
        .map_err(|e| Error::format(config_at, format!("bad config: {e}")))?;
    let count = cur.u32("layer count")? as usize;
    let mut weights = Vec::with_capacity(count.min(64));
    for l in 0..count {
        let at = cur.pos as u64;
        let rows = cur.u32("rows")? as usize;
        let cols = cur.u32("cols")? as usize;
        let n = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(8))
            .ok_or_else(|| Error::format(at, format!("layer {l} shape overflows")))?;
        let data = cur
            .take(n, "weights")?
            .chunks_exact(8)
            .map(|b| f64::from_bits(u64::from_le_bytes(b.try_into().unwrap())))
            .collect();
        weights.push(WeightMatrix::from_vec(rows, cols, data).expect("length checked"));
    }
    if cur.pos != bytes.len() {
        return Err(Error::format(
            cur.pos as u64,
            "trailing bytes after last layer",
        ));
    }
    Network::from_parts(config, weights, examples_seen)
        .map_err(|e| Error::format(config_at, format!("inconsistent dump: {e}")))
}

pub fn save_network(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_network(net, std::io::BufWriter::new(file))
}

pub fn load_network(path: impl AsRef<Path>) -> Result<Network> {
    read_network(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{resolve_preset, Preset};

    fn trained() -> Network {
        let mut net = Network::new(resolve_preset(Preset::Medium)).unwrap();
        for k in 0..5 {
            let input: Vec<f64> = (0..784)
                .map(|i| ((i * 13 + k * 7) % 256) as f64 / 255.0)
                .collect();
            let mut t = vec![0.0; 10];
            t[k] = 1.0;
            net.train_on_example(&input, &t).unwrap();
        }
        net
    }

    #[test]
    fn round_trip_is_exact() {
        let net = trained();
        let mut buf = Vec::new();
        write_network(&net, &mut buf).unwrap();
        let back = read_network(&buf[..]).unwrap();
        assert_eq!(back.config(), net.config());
        assert_eq!(back.examples_seen(), net.examples_seen());
        for (a, b) in net.weights().iter().zip(back.weights()) {
            assert_eq!(a.rows(), b.rows());
            assert!(a
                .as_slice()
                .iter()
                .zip(b.as_slice())
                .all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        let mut again = Vec::new();
        write_network(&back, &mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn corrupt_dumps_are_rejected() {
        let mut buf = Vec::new();
        write_network(&trained(), &mut buf).unwrap();

        let mut bad_magic = buf.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            read_network(&bad_magic[..]),
            Err(Error::Format { offset: 0, .. })
        ));

        let truncated = &buf[..buf.len() - 3];
        assert!(matches!(read_network(truncated), Err(Error::Format { .. })));

        let mut bad_version = buf.clone();
        bad_version[8] = 9;
        assert!(matches!(
            read_network(&bad_version[..]),
            Err(Error::Format { offset: 8, .. })
        ));

        let mut trailing = buf.clone();
        trailing.push(0);
        assert!(read_network(&trailing[..]).is_err());

        // push a weight outside [-1, 1] into the last layer
        let mut out_of_range = buf.clone();
        let n = out_of_range.len();
        out_of_range[n - 8..].copy_from_slice(&2.0f64.to_bits().to_le_bytes());
        assert!(read_network(&out_of_range[..]).is_err());
    }
}
