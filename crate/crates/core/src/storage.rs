//! Byte payloads spread over shard files with XOR-only encoding.
//!
//! A payload is cut into one fragment per generator row (zero-padded to a
//! common length) and shard `j` is the XOR of the fragments whose row has a
//! 1 in column `j`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::codes::{um_simplex, CodeId, ConvCode, LinearCode};
use crate::error::{Error, Result};
use crate::gf2::{BitMatrix, BitVector};
use crate::repair::{ErasurePattern, PlanMode, RepairEngine, RepairPlan, RepairStep};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShardManifest {
    pub format_version: u32,
    pub code: String,
    pub n: usize,
    /// Message dimension per time step for UM codes.
    pub k: usize,
    pub s: Option<usize>,
    pub payload_length: usize,
    pub fragment_length: usize,
    pub checksums: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shard {
    pub index: usize,
    pub data: Vec<u8>,
}

pub fn checksum(data: &[u8]) -> String {
    format!("{:08x}", crc32fast::hash(data))
}

pub fn shard_file_name(index: usize) -> String {
    format!("shard_{index:04}.bin")
}

impl ShardManifest {
    /// Rebuilds the code and checks that the recorded shape matches it.
    pub fn code(&self) -> Result<LinearCode> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Manifest(format!(
                "unsupported format_version {}",
                self.format_version
            )));
        }
        let id: CodeId = self.code.parse()?;
        let code = id.build()?;
        let (k, s) = shape(&id, &code);
        if code.n() != self.n || k != self.k || s != self.s {
            return Err(Error::Manifest(format!(
                "code {} has n={} k={} s={:?}, manifest says n={} k={} s={:?}",
                self.code,
                code.n(),
                k,
                s,
                self.n,
                self.k,
                self.s
            )));
        }
        if self.checksums.len() != self.n {
            return Err(Error::Manifest(format!(
                "{} checksums for {} shards",
                self.checksums.len(),
                self.n
            )));
        }
        let fragments = code.k();
        if self.fragment_length != self.payload_length.div_ceil(fragments) {
            return Err(Error::Manifest(format!(
                "fragment_length {} does not match payload_length {} over {fragments} fragments",
                self.fragment_length, self.payload_length
            )));
        }
        Ok(code)
    }

    /// Checks that a shard has the recorded index range, length and CRC.
    pub fn check(&self, shard: &Shard) -> Result<()> {
        if shard.index >= self.n {
            return Err(Error::IndexOutOfRange {
                index: shard.index,
                n: self.n,
            });
        }
        if shard.data.len() != self.fragment_length {
            return Err(Error::LengthMismatch {
                index: shard.index,
                expected: self.fragment_length,
                actual: shard.data.len(),
            });
        }
        if checksum(&shard.data) != self.checksums[shard.index] {
            return Err(Error::ChecksumMismatch(shard.index));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        if m.checksums
            .iter()
            .any(|c| c.len() != 8 || !c.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b)))
        {
            return Err(Error::Manifest("checksums must be 8 lowercase hex digits".into()));
        }
        Ok(m)
    }
}

fn shape(id: &CodeId, code: &LinearCode) -> (usize, Option<usize>) {
    match *id {
        CodeId::Um { base_k, s } => (base_k, Some(s)),
        _ => (code.k(), None),
    }
}

fn split(payload: &[u8], fragments: usize) -> (usize, Vec<&[u8]>) {
    let len = payload.len().div_ceil(fragments);
    let parts = (0..fragments)
        .map(|i| {
            let start = (i * len).min(payload.len());
            let end = ((i + 1) * len).min(payload.len());
            &payload[start..end]
        })
        .collect();
    (len, parts)
}

/// Column rule over byte fragments. Short fragments read as zero-padded.
fn encode_fragments(generator: &BitMatrix, fragments: &[&[u8]], len: usize) -> Vec<Shard> {
    (0..generator.cols())
        .map(|j| {
            let mut data = vec![0u8; len];
            for (i, frag) in fragments.iter().enumerate() {
                if generator.get(i, j) {
                    for (d, b) in data.iter_mut().zip(frag.iter()) {
                        *d ^= b;
                    }
                }
            }
            Shard { index: j, data }
        })
        .collect()
}

pub fn encode_object(code: &LinearCode, payload: &[u8]) -> Result<(ShardManifest, Vec<Shard>)> {
    if payload.is_empty() {
        return Err(Error::EmptyPayload);
    }
    let (len, fragments) = split(payload, code.k());
    let shards = encode_fragments(&code.generator, &fragments, len);
    let (k, s) = shape(&code.id, code);
    let manifest = ShardManifest {
        format_version: FORMAT_VERSION,
        code: code.id.to_string(),
        n: code.n(),
        k,
        s,
        payload_length: payload.len(),
        fragment_length: len,
        checksums: shards.iter().map(|sh| checksum(&sh.data)).collect(),
    };
    Ok((manifest, shards))
}

/// Encodes over the sliding generator with horizon `s`. Only UM simplex codes
/// have a code id a manifest can name.
pub fn encode_stream(c: &ConvCode, payload: &[u8], s: usize) -> Result<(ShardManifest, Vec<Shard>)> {
    if um_simplex(c.base_k).ok().as_ref() != Some(c) {
        return Err(Error::Manifest("only UM simplex codes can be stored".into()));
    }
    let code = CodeId::Um { base_k: c.base_k, s }.build()?;
    encode_object(&code, payload)
}

/// Validates shards and returns them indexed by node, keeping the first copy
/// of any duplicate index.
fn collect_live(manifest: &ShardManifest, available: &[Shard]) -> Result<Vec<Option<Vec<u8>>>> {
    let mut slots: Vec<Option<Vec<u8>>> = vec![None; manifest.n];
    for shard in available {
        manifest.check(shard)?;
        if slots[shard.index].is_none() {
            slots[shard.index] = Some(shard.data.clone());
        }
    }
    Ok(slots)
}

fn decode_slots(manifest: &ShardManifest, code: &LinearCode, slots: &[Option<Vec<u8>>]) -> Result<Vec<u8>> {
    let live: Vec<usize> = (0..manifest.n).filter(|&i| slots[i].is_some()).collect();
    let sub = code.generator.select_columns(&live);
    if !sub.is_right_invertible() {
        return Err(Error::NotCorrectable);
    }
    let sub_t = sub.transpose();
    let m = code.k();
    let mut payload = Vec::with_capacity(m * manifest.fragment_length);
    for i in 0..m {
        let recipe = sub_t.solve_right(&BitVector::unit(m, i))?;
        let mut frag = vec![0u8; manifest.fragment_length];
        for pos in recipe.ones() {
            let src = slots[live[pos]].as_ref().expect("live shard");
            for (d, b) in frag.iter_mut().zip(src) {
                *d ^= b;
            }
        }
        payload.extend_from_slice(&frag);
    }
    payload.truncate(manifest.payload_length);
    Ok(payload)
}

pub fn decode_object(manifest: &ShardManifest, available: &[Shard]) -> Result<Vec<u8>> {
    let code = manifest.code()?;
    let slots = collect_live(manifest, available)?;
    decode_slots(manifest, &code, &slots)
}

struct RepairSetup {
    code: LinearCode,
    slots: Vec<Option<Vec<u8>>>,
    wanted: Vec<usize>,
    pattern: ErasurePattern,
}

/// Checks `missing` against the live set and collects the live slots and
/// the full erasure pattern.
fn prepare_repair(manifest: &ShardManifest, available: &[Shard], missing: &[usize]) -> Result<RepairSetup> {
    let code = manifest.code()?;
    let slots = collect_live(manifest, available)?;
    let mut wanted: Vec<usize> = missing.to_vec();
    wanted.sort_unstable();
    wanted.dedup();
    for &t in &wanted {
        if t >= manifest.n {
            return Err(Error::IndexOutOfRange {
                index: t,
                n: manifest.n,
            });
        }
        if slots[t].is_some() {
            return Err(Error::InvalidBound(format!("shard {t} is present, not missing")));
        }
    }
    let erased: Vec<usize> = (0..manifest.n).filter(|&i| slots[i].is_none()).collect();
    let pattern = ErasurePattern::new(manifest.n, erased)?;
    Ok(RepairSetup {
        code,
        slots,
        wanted,
        pattern,
    })
}

fn take_repaired(slots: &mut [Option<Vec<u8>>], wanted: &[usize]) -> Vec<Shard> {
    wanted
        .iter()
        .map(|&t| Shard {
            index: t,
            data: slots[t].take().expect("repaired shard"),
        })
        .collect()
}

/// Rebuilds the `missing` shards. Every node without a shard in `available`
/// counts as erased; easy repair is tried first and, when it stalls, the
/// object is decoded and the missing shards re-encoded.
pub fn repair_shards(
    manifest: &ShardManifest,
    available: &[Shard],
    missing: &[usize],
) -> Result<(Vec<Shard>, RepairPlan)> {
    let RepairSetup {
        code,
        mut slots,
        wanted,
        pattern,
    } = prepare_repair(manifest, available, missing)?;
    let engine = RepairEngine::new(&code)?;
    if !engine.is_correctable(&pattern)? {
        return Err(Error::NotCorrectable);
    }
    if wanted.is_empty() {
        return Ok((Vec::new(), RepairPlan::empty(PlanMode::Sequential)));
    }
    match engine.easy_repair_plan(&pattern)? {
        Ok(plan) => {
            plan.replay(&mut slots, manifest.fragment_length)?;
            Ok((take_repaired(&mut slots, &wanted), plan))
        }
        Err(_) => reencode_shards(manifest, available, &wanted),
    }
}

/// Rebuilds the `missing` shards by decoding the object and encoding it
/// again. The plan lists one `decode` step per target.
pub fn reencode_shards(
    manifest: &ShardManifest,
    available: &[Shard],
    missing: &[usize],
) -> Result<(Vec<Shard>, RepairPlan)> {
    let RepairSetup {
        code,
        mut slots,
        wanted,
        ..
    } = prepare_repair(manifest, available, missing)?;
    let payload = decode_slots(manifest, &code, &slots)?;
    let (_, shards) = encode_object(&code, &payload)?;
    for &t in &wanted {
        slots[t] = Some(shards[t].data.clone());
    }
    let plan = RepairPlan {
        mode: PlanMode::Reencode,
        steps: wanted
            .iter()
            .enumerate()
            .map(|(order, &target)| RepairStep {
                order,
                target,
                helpers: Vec::new(),
            })
            .collect(),
    };
    Ok((take_repaired(&mut slots, &wanted), plan))
}

fn write_atomic(path: &Path, data: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("shard");
    let tmp: PathBuf = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(data)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_shard(dir: &Path, shard: &Shard) -> Result<()> {
    write_atomic(&dir.join(shard_file_name(shard.index)), &shard.data)
}

pub fn write_manifest(dir: &Path, manifest: &ShardManifest) -> Result<()> {
    write_atomic(&dir.join(MANIFEST_FILE), manifest.to_json()?.as_bytes())
}

/// Writes the manifest and every shard into `dir`, creating it if needed.
pub fn write_dir(dir: &Path, manifest: &ShardManifest, shards: &[Shard]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for shard in shards {
        write_shard(dir, shard)?;
    }
    write_manifest(dir, manifest)
}

pub fn read_manifest(dir: &Path) -> Result<ShardManifest> {
    ShardManifest::from_json(&fs::read_to_string(dir.join(MANIFEST_FILE))?)
}

/// Reads every shard file present in `dir`. Absent files are skipped; nothing
/// is validated here.
pub fn read_shards(dir: &Path, n: usize) -> Result<Vec<Shard>> {
    let mut out = Vec::new();
    for index in 0..n {
        match fs::read(dir.join(shard_file_name(index))) {
            Ok(data) => out.push(Shard { index, data }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}
