//! Monte Carlo sampling of detection events with per-shot random streams.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circuit::{Circuit, Instruction};
use crate::error::{Error, Result};
use crate::frame::{Frames, LANES};

/// Dense row-major bit matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words = cols.div_ceil(64).max(1);
        BitMatrix { rows, cols, words, data: vec![0; rows * words] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.data[r * self.words + c / 64] >> (c % 64) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        let w = &mut self.data[r * self.words + c / 64];
        if v {
            *w |= 1 << (c % 64);
        } else {
            *w &= !(1 << (c % 64));
        }
    }

    pub fn row_words(&self, r: usize) -> &[u64] {
        &self.data[r * self.words..(r + 1) * self.words]
    }

    /// Column indices of the set bits in row `r`.
    pub fn row_ones(&self, r: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for (w, &word) in self.row_words(r).iter().enumerate() {
            crate::circuit::for_each_bit(word, |b| out.push(w * 64 + b));
        }
        out
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// Sampled detection events and observable flips, one row per shot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotBatch {
    pub detection_events: BitMatrix,
    pub observable_flips: BitMatrix,
}

impl ShotBatch {
    pub fn shots(&self) -> usize {
        self.detection_events.rows()
    }

    pub fn num_detectors(&self) -> usize {
        self.detection_events.cols()
    }

    pub fn num_observables(&self) -> usize {
        self.observable_flips.cols()
    }

    pub fn defects(&self, shot: usize) -> Vec<usize> {
        self.detection_events.row_ones(shot)
    }

    /// Observable flips of one shot as a bit mask.
    pub fn observable_mask(&self, shot: usize) -> u64 {
        self.observable_flips.row_words(shot)[0]
    }

    /// SHA-256 over dimensions and packed rows; used to pair decoders on identical data.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for v in [self.shots(), self.num_detectors(), self.num_observables()] {
            h.update((v as u64).to_le_bytes());
        }
        for s in 0..self.shots() {
            h.update(pack_row(&self.detection_events, s));
            h.update(pack_row(&self.observable_flips, s));
        }
        hex::encode(h.finalize())
    }
}

/// Per-shot stream: the seed picks the key, the shot index picks the stream,
/// so any shot can be regenerated independently of how shots are partitioned.
pub fn shot_rng(seed: u64, shot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot);
    rng
}

/// Pauli-frame sampling of `shots` shots.
pub fn simulate(circuit: &Circuit, shots: usize, seed: u64) -> ShotBatch {
    let batches = shots.div_ceil(LANES);
    let words = crate::exec::map_indexed(batches, |b| {
        let lanes = (shots - b * LANES).min(LANES);
        simulate_batch(circuit, (b * LANES) as u64, lanes, seed)
    });
    let mut out = ShotBatch {
        detection_events: BitMatrix::zeros(shots, circuit.num_detectors()),
        observable_flips: BitMatrix::zeros(shots, circuit.num_observables()),
    };
    for (b, (dets, obs)) in words.into_iter().enumerate() {
        for (matrix, cols) in [(&mut out.detection_events, dets), (&mut out.observable_flips, obs)] {
            for (c, word) in cols.into_iter().enumerate() {
                crate::circuit::for_each_bit(word, |lane| matrix.set(b * LANES + lane, c, true));
            }
        }
    }
    out
}

fn simulate_batch(circuit: &Circuit, first_shot: u64, lanes: usize, seed: u64) -> (Vec<u64>, Vec<u64>) {
    let mut rngs: Vec<ChaCha8Rng> = (0..lanes as u64).map(|l| shot_rng(seed, first_shot + l)).collect();
    let mut frames = Frames::for_circuit(circuit);
    crate::frame::propagate(circuit, 0, &mut frames, |_, inst, fr| match *inst {
        Instruction::Noise { targets, channel, .. } => {
            let dist = &circuit.channels[channel];
            for (lane, rng) in rngs.iter_mut().enumerate() {
                if let Some(term) = dist.sample(rng) {
                    fr.apply_term(&targets, term, 1 << lane);
                }
            }
        }
        Instruction::Measure { record, flip, .. } if flip > 0.0 => {
            for (lane, rng) in rngs.iter_mut().enumerate() {
                if rng.random::<f64>() < flip {
                    fr.records[record] ^= 1 << lane;
                }
            }
        }
        _ => {}
    });
    (frames.detector_words(circuit), frames.observable_words(circuit))
}

/// Header line of a shot file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotFileHeader {
    pub format: String,
    pub shots: usize,
    pub num_detectors: usize,
    pub num_observables: usize,
    pub seed: u64,
    #[serde(default)]
    pub config: serde_json::Value,
}

pub const SHOT_FORMAT: &str = "compass-shots-v1";

fn pack_row(m: &BitMatrix, r: usize) -> Vec<u8> {
    let bytes = m.cols().div_ceil(8);
    let mut out = vec![0u8; bytes];
    for c in 0..m.cols() {
        if m.get(r, c) {
            out[c / 8] |= 1 << (c % 8);
        }
    }
    out
}

/// Writes a JSON header line followed by, per shot, the packed detector bits
/// then the packed observable bits (LSB-first within each byte).
pub fn write_shots<W: Write>(mut w: W, batch: &ShotBatch, seed: u64, config: serde_json::Value) -> Result<()> {
    let header = ShotFileHeader {
        format: SHOT_FORMAT.into(),
        shots: batch.shots(),
        num_detectors: batch.num_detectors(),
        num_observables: batch.num_observables(),
        seed,
        config,
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for s in 0..batch.shots() {
        w.write_all(&pack_row(&batch.detection_events, s))?;
        w.write_all(&pack_row(&batch.observable_flips, s))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_shots<R: BufRead>(mut r: R) -> Result<(ShotFileHeader, ShotBatch)> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: ShotFileHeader = serde_json::from_str(line.trim_end())?;
    if header.format != SHOT_FORMAT {
        return Err(Error::Parse(format!("unknown shot file format `{}`", header.format)));
    }
    let mut batch = ShotBatch {
        detection_events: BitMatrix::zeros(header.shots, header.num_detectors),
        observable_flips: BitMatrix::zeros(header.shots, header.num_observables),
    };
    let (db, ob) = (header.num_detectors.div_ceil(8), header.num_observables.div_ceil(8));
    let mut buf = vec![0u8; db + ob];
    for s in 0..header.shots {
        r.read_exact(&mut buf).map_err(|e| Error::Parse(format!("truncated shot file at shot {s}: {e}")))?;
        for c in 0..header.num_detectors {
            batch.detection_events.set(s, c, buf[c / 8] >> (c % 8) & 1 == 1);
        }
        for c in 0..header.num_observables {
            batch.observable_flips.set(s, c, buf[db + c / 8] >> (c % 8) & 1 == 1);
        }
    }
    Ok((header, batch))
}
