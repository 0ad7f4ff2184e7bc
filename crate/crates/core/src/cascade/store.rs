//! Binary chain database.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic      b"TSDB"
//! u32        header length H
//! H bytes    JSON header (version, fingerprints, seed, line_count, d_max,
//!            initiation, chains_per_state)
//! per chain, states in order, chains in id order:
//!   u32 state, u32 id, f64 load loss (MW), u32 record count R
//!   per record: u32 n_new, n_new x u32 line position, line_count x f64 flow (MW)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BuildOptions, CascadeError, ChainDatabase, FailureChain, GenerationRecord, InitiationMode};

pub const DATABASE_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"TSDB";

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    network_fingerprint: String,
    params_fingerprint: String,
    seed: u64,
    line_count: usize,
    d_max: usize,
    initiation: InitiationMode,
    chains_per_state: Vec<usize>,
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CascadeError + '_ {
    move |source| CascadeError::Io { path: path.display().to_string(), source }
}

pub fn write_database(db: &ChainDatabase, path: impl AsRef<Path>) -> Result<(), CascadeError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    encode(db, &mut w).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

fn encode(db: &ChainDatabase, w: &mut impl Write) -> std::io::Result<()> {
    let header = Header {
        version: DATABASE_VERSION,
        network_fingerprint: db.network_fingerprint.clone(),
        params_fingerprint: db.params_fingerprint.clone(),
        seed: db.seed,
        line_count: db.line_count,
        d_max: db.d_max,
        initiation: db.initiation,
        chains_per_state: db.states.iter().map(Vec::len).collect(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    w.write_all(MAGIC)?;
    w.write_all(&(json.len() as u32).to_le_bytes())?;
    w.write_all(&json)?;
    for c in db.states.iter().flatten() {
        w.write_all(&(c.state as u32).to_le_bytes())?;
        w.write_all(&c.id.to_le_bytes())?;
        w.write_all(&c.load_loss_mw.to_le_bytes())?;
        w.write_all(&(c.records.len() as u32).to_le_bytes())?;
        for r in &c.records {
            w.write_all(&(r.new_failures.len() as u32).to_le_bytes())?;
            for e in &r.new_failures {
                w.write_all(&e.to_le_bytes())?;
            }
            for f in &r.flows_mw {
                w.write_all(&f.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

struct Cursor<R> {
    inner: R,
}

impl<R: Read> Cursor<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N], CascadeError> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|e| CascadeError::Format(format!("truncated file: {e}")))?;
        Ok(buf)
    }

    fn u32(&mut self) -> Result<u32, CascadeError> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn f64(&mut self) -> Result<f64, CascadeError> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
}

pub fn read_database(path: impl AsRef<Path>) -> Result<ChainDatabase, CascadeError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    decode(BufReader::new(file))
}

fn decode(reader: impl Read) -> Result<ChainDatabase, CascadeError> {
    let mut r = Cursor { inner: reader };
    if &r.bytes::<4>()? != MAGIC {
        return Err(CascadeError::Format("not a chain database (bad magic)".into()));
    }
    let len = r.u32()? as usize;
    let mut json = vec![0u8; len];
    r.inner
        .read_exact(&mut json)
        .map_err(|e| CascadeError::Format(format!("truncated header: {e}")))?;
    let value: serde_json::Value =
        serde_json::from_slice(&json).map_err(|e| CascadeError::Format(format!("header: {e}")))?;
    let version = value.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
    if version != DATABASE_VERSION {
        return Err(CascadeError::Version { found: version, expected: DATABASE_VERSION });
    }
    let header: Header = serde_json::from_value(value).map_err(|e| CascadeError::Format(format!("header: {e}")))?;

    let n = header.line_count;
    let mut states = Vec::with_capacity(header.chains_per_state.len());
    for (l, &count) in header.chains_per_state.iter().enumerate() {
        let mut chains = Vec::with_capacity(count);
        for _ in 0..count {
            let state = r.u32()? as usize;
            if state != l {
                return Err(CascadeError::Format(format!("chain filed under state {l} claims state {state}")));
            }
            let id = r.u32()?;
            let y = r.f64()?;
            let records_len = r.u32()? as usize;
            let mut records = Vec::with_capacity(records_len);
            for _ in 0..records_len {
                let n_new = r.u32()? as usize;
                let mut new = Vec::with_capacity(n_new);
                for _ in 0..n_new {
                    let e = r.u32()?;
                    if e as usize >= n {
                        return Err(CascadeError::Format(format!("line position {e} out of range")));
                    }
                    new.push(e);
                }
                let flows = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
                records.push(GenerationRecord::new(new, flows));
            }
            if records.is_empty() {
                return Err(CascadeError::Format(format!("chain {id} has no records")));
            }
            chains.push(FailureChain::from_records(id, state, records, y));
        }
        states.push(chains);
    }
    let mut trailing = [0u8; 1];
    if r.inner.read(&mut trailing).map_err(|e| CascadeError::Format(e.to_string()))? != 0 {
        return Err(CascadeError::Format("trailing bytes after last chain".into()));
    }
    let options = BuildOptions { seed: header.seed, d_max: header.d_max, initiation: header.initiation };
    ChainDatabase::new(header.network_fingerprint, header.params_fingerprint, &options, n, states)
}
