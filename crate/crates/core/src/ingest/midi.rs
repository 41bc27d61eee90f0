//! Standard MIDI File reader.
//!
//! Reads format 0 and 1 files into a flat, onset-sorted list of
//! [`PerformanceNote`]s. Tick times are converted to milliseconds through the
//! merged tempo map of all tracks (metrical division) or directly from the
//! SMPTE frame rate. Only note events and tempo meta-events are interpreted;
//! everything else is skipped.

use std::collections::{HashMap, VecDeque};

use super::PerformanceNote;
use crate::error::{Error, Result};

/// Tempo assumed until the first Set Tempo meta-event (120 bpm).
pub const DEFAULT_TEMPO_US_PER_QUARTER: u32 = 500_000;

#[derive(Debug, Clone, PartialEq)]
pub struct MidiWarning {
    pub track: usize,
    pub tick: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedMidi {
    pub notes: Vec<PerformanceNote>,
    pub warnings: Vec<MidiWarning>,
}

#[derive(Debug, Clone, Copy)]
enum Division {
    Metrical(u16),
    /// Frames per second and ticks per frame.
    Timecode(f64, f64),
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Midi {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn u8(&mut self) -> Result<u8> {
        let b = *self
            .bytes
            .get(self.pos)
            .ok_or_else(|| self.err("unexpected end of data"))?;
        self.pos += 1;
        Ok(b)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(self.err(format!(
                "need {n} bytes, only {} remain",
                self.remaining()
            )));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u16(&mut self) -> Result<u16> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn vlq(&mut self) -> Result<u32> {
        let start = self.pos;
        let mut value: u32 = 0;
        for _ in 0..4 {
            let b = self.u8()?;
            value = (value << 7) | u32::from(b & 0x7f);
            if b & 0x80 == 0 {
                return Ok(value);
            }
        }
        Err(Error::Midi {
            offset: start,
            message: "variable-length quantity longer than 4 bytes".into(),
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct RawNote {
    track: usize,
    channel: u8,
    pitch: u8,
    velocity: u8,
    on_tick: u64,
    off_tick: u64,
}

#[derive(Default)]
struct TrackEvents {
    tempos: Vec<(u64, u32)>,
    notes: Vec<RawNote>,
    warnings: Vec<MidiWarning>,
}

fn parse_track(reader: &mut Reader<'_>, end: usize, track: usize) -> Result<TrackEvents> {
    let mut out = TrackEvents::default();
    let mut tick: u64 = 0;
    let mut running: Option<u8> = None;
    let mut open: HashMap<(u8, u8), VecDeque<(u64, u8)>> = HashMap::new();

    while reader.pos < end {
        tick += u64::from(reader.vlq()?);
        let status_pos = reader.pos;
        let first = reader.u8()?;
        let (status, first_data) = if first & 0x80 != 0 {
            (first, None)
        } else {
            let status = running.ok_or_else(|| Error::Midi {
                offset: status_pos,
                message: "data byte without running status".into(),
            })?;
            (status, Some(first))
        };

        match status {
            0xff => {
                running = None;
                let kind = reader.u8()?;
                let len = reader.vlq()? as usize;
                let data = reader.take(len)?;
                match kind {
                    0x51 => {
                        if len != 3 {
                            return Err(Error::Midi {
                                offset: status_pos,
                                message: format!("tempo event with length {len}"),
                            });
                        }
                        let tempo = u32::from_be_bytes([0, data[0], data[1], data[2]]);
                        if tempo == 0 {
                            return Err(Error::Midi {
                                offset: status_pos,
                                message: "tempo of zero microseconds per quarter".into(),
                            });
                        }
                        out.tempos.push((tick, tempo));
                    }
                    0x2f => break,
                    _ => {}
                }
            }
            0xf0 | 0xf7 => {
                running = None;
                let len = reader.vlq()? as usize;
                reader.take(len)?;
            }
            0x80..=0xef => {
                running = Some(status);
                let kind = status >> 4;
                let channel = status & 0x0f;
                let d1 = match first_data {
                    Some(b) => b,
                    None => reader.u8()?,
                };
                let d2 = if matches!(kind, 0xc | 0xd) {
                    0
                } else {
                    reader.u8()?
                };
                if d1 > 0x7f || d2 > 0x7f {
                    return Err(Error::Midi {
                        offset: status_pos,
                        message: "data byte with high bit set".into(),
                    });
                }
                match (kind, d2) {
                    (0x9, v) if v > 0 => {
                        open.entry((channel, d1)).or_default().push_back((tick, v));
                    }
                    (0x8, _) | (0x9, _) => match open.get_mut(&(channel, d1)).and_then(VecDeque::pop_front) {
                        Some((on_tick, velocity)) => out.notes.push(RawNote {
                            track,
                            channel,
                            pitch: d1,
                            velocity,
                            on_tick,
                            off_tick: tick,
                        }),
                        None => out.warnings.push(MidiWarning {
                            track,
                            tick,
                            message: format!("note-off for pitch {d1} on channel {channel} without note-on"),
                        }),
                    },
                    _ => {}
                }
            }
            other => {
                return Err(Error::Midi {
                    offset: status_pos,
                    message: format!("unexpected status byte 0x{other:02x}"),
                })
            }
        }
    }

    if reader.pos > end {
        return Err(reader.err("event runs past end of track chunk"));
    }

    let mut dangling: Vec<_> = open
        .into_iter()
        .flat_map(|((channel, pitch), q)| q.into_iter().map(move |(t, v)| (channel, pitch, t, v)))
        .collect();
    dangling.sort_unstable_by_key(|&(c, p, t, _)| (t, p, c));
    for (channel, pitch, on_tick, velocity) in dangling {
        out.warnings.push(MidiWarning {
            track,
            tick,
            message: format!(
                "note-on for pitch {pitch} on channel {channel} at tick {on_tick} never released; closed at end of track"
            ),
        });
        out.notes.push(RawNote {
            track,
            channel,
            pitch,
            velocity,
            on_tick,
            off_tick: tick,
        });
    }
    Ok(out)
}

/// Piecewise-linear tick to millisecond conversion.
#[derive(Debug, Clone)]
pub struct TempoMap {
    /// (start tick, start ms, rate numerator), sorted by start tick; one tick
    /// lasts `numerator / denominator` ms.
    segments: Vec<(u64, f64, f64)>,
    denominator: f64,
}

impl TempoMap {
    /// Builds the map from `(tick, microseconds per quarter)` changes.
    pub fn metrical(ticks_per_quarter: u16, changes: &[(u64, u32)]) -> Self {
        let denominator = f64::from(ticks_per_quarter) * 1000.0;
        let mut sorted = changes.to_vec();
        sorted.sort_by_key(|&(t, _)| t);

        let mut map = Self {
            segments: vec![(0, 0.0, f64::from(DEFAULT_TEMPO_US_PER_QUARTER))],
            denominator,
        };
        for (tick, tempo) in sorted {
            let start_ms = map.ticks_to_ms(tick);
            if map.segments.last().is_some_and(|&(t, _, _)| t == tick) {
                // later event at the same tick wins
                map.segments.pop();
            }
            map.segments.push((tick, start_ms, f64::from(tempo)));
        }
        map
    }

    fn timecode(frames_per_second: f64, ticks_per_frame: f64) -> Self {
        Self {
            segments: vec![(0, 0.0, 1000.0)],
            denominator: frames_per_second * ticks_per_frame,
        }
    }

    pub fn ticks_to_ms(&self, tick: u64) -> f64 {
        let idx = self.segments.partition_point(|&(t, _, _)| t <= tick) - 1;
        let (t0, ms0, numerator) = self.segments[idx];
        ms0 + (tick - t0) as f64 * numerator / self.denominator
    }
}

/// Parses a Standard MIDI File (format 0 or 1) into performance notes.
///
/// Notes are sorted by onset, then pitch, and numbered `p0`, `p1`, ... in
/// that order. A note-on that is never released is closed at the end of its
/// track and reported in [`ParsedMidi::warnings`]; so are notes whose release
/// falls on the same tick as their onset, which are dropped.
pub fn parse_midi(bytes: &[u8]) -> Result<ParsedMidi> {
    let mut reader = Reader::new(bytes);
    if reader.take(4).map_err(|_| reader.err("missing MThd header"))? != b"MThd" {
        return Err(Error::Midi {
            offset: 0,
            message: "missing MThd header".into(),
        });
    }
    let header_len = reader.u32()? as usize;
    if header_len < 6 {
        return Err(Error::Midi {
            offset: 4,
            message: format!("header length {header_len} < 6"),
        });
    }
    let format_pos = reader.pos;
    let format = reader.u16()?;
    let track_count = reader.u16()?;
    let division_raw = reader.u16()?;
    reader.take(header_len - 6)?;

    if format > 1 {
        return Err(Error::Midi {
            offset: format_pos,
            message: format!("unsupported SMF format {format}"),
        });
    }
    let division = if division_raw & 0x8000 == 0 {
        if division_raw == 0 {
            return Err(Error::Midi {
                offset: format_pos + 4,
                message: "zero ticks per quarter note".into(),
            });
        }
        Division::Metrical(division_raw)
    } else {
        let fps = match -((division_raw >> 8) as u8 as i8) {
            24 => 24.0,
            25 => 25.0,
            29 => 29.97,
            30 => 30.0,
            other => {
                return Err(Error::Midi {
                    offset: format_pos + 4,
                    message: format!("invalid SMPTE frame rate {other}"),
                })
            }
        };
        Division::Timecode(fps, f64::from(division_raw & 0xff))
    };

    let mut tracks = Vec::new();
    while tracks.len() < usize::from(track_count) && reader.remaining() > 0 {
        let chunk_pos = reader.pos;
        let id = reader.take(4)?;
        let len = reader.u32()? as usize;
        if reader.remaining() < len {
            return Err(Error::Midi {
                offset: chunk_pos,
                message: format!("chunk length {len} exceeds file size"),
            });
        }
        if id != b"MTrk" {
            reader.take(len)?;
            continue;
        }
        let end = reader.pos + len;
        let events = parse_track(&mut reader, end, tracks.len())?;
        reader.pos = end;
        tracks.push(events);
    }

    let tempo_map = match division {
        Division::Metrical(tpq) => {
            let changes: Vec<_> = tracks.iter().flat_map(|t| t.tempos.iter().copied()).collect();
            TempoMap::metrical(tpq, &changes)
        }
        Division::Timecode(fps, tpf) => TempoMap::timecode(fps, tpf),
    };

    let mut warnings = Vec::new();
    let mut raw = Vec::new();
    for track in tracks {
        warnings.extend(track.warnings);
        raw.extend(track.notes);
    }
    raw.retain(|n| {
        if n.off_tick > n.on_tick {
            true
        } else {
            warnings.push(MidiWarning {
                track: n.track,
                tick: n.on_tick,
                message: format!("zero-length note (pitch {}) dropped", n.pitch),
            });
            false
        }
    });
    raw.sort_by_key(|n| (n.on_tick, n.pitch, n.off_tick, n.channel, n.track, n.velocity));

    let notes = raw
        .iter()
        .enumerate()
        .map(|(i, n)| PerformanceNote {
            note_id: format!("p{i}"),
            onset_ms: tempo_map.ticks_to_ms(n.on_tick),
            offset_ms: tempo_map.ticks_to_ms(n.off_tick),
            pitch: n.pitch,
            velocity: n.velocity,
        })
        .collect();
    Ok(ParsedMidi { notes, warnings })
}

/// Writes notes as a format 0 file with 1000 ticks per quarter at 1 s per
/// quarter, so one tick is one millisecond. Onsets and offsets are rounded to
/// whole milliseconds.
pub fn write_midi(notes: &[PerformanceNote]) -> Vec<u8> {
    const TPQ: u16 = 1000;
    const TEMPO: u32 = 1_000_000;

    // (tick, is_on, pitch, velocity); offs sort before ons at equal ticks
    let mut events: Vec<(u64, bool, u8, u8)> = Vec::with_capacity(notes.len() * 2);
    for n in notes {
        let on = n.onset_ms.max(0.0).round() as u64;
        let off = (n.offset_ms.round() as u64).max(on + 1);
        events.push((on, true, n.pitch, n.velocity.max(1)));
        events.push((off, false, n.pitch, 0));
    }
    events.sort_unstable();

    let mut track = Vec::new();
    push_vlq(&mut track, 0);
    track.extend_from_slice(&[0xff, 0x51, 0x03]);
    track.extend_from_slice(&TEMPO.to_be_bytes()[1..]);
    let mut last = 0u64;
    for (tick, is_on, pitch, velocity) in events {
        push_vlq(&mut track, (tick - last) as u32);
        last = tick;
        if is_on {
            track.extend_from_slice(&[0x90, pitch, velocity]);
        } else {
            track.extend_from_slice(&[0x80, pitch, 0x40]);
        }
    }
    push_vlq(&mut track, 0);
    track.extend_from_slice(&[0xff, 0x2f, 0x00]);

    let mut out = Vec::with_capacity(track.len() + 22);
    out.extend_from_slice(b"MThd");
    out.extend_from_slice(&6u32.to_be_bytes());
    out.extend_from_slice(&0u16.to_be_bytes());
    out.extend_from_slice(&1u16.to_be_bytes());
    out.extend_from_slice(&TPQ.to_be_bytes());
    out.extend_from_slice(b"MTrk");
    out.extend_from_slice(&(track.len() as u32).to_be_bytes());
    out.extend_from_slice(&track);
    out
}

fn push_vlq(buf: &mut Vec<u8>, mut value: u32) {
    let mut stack = [0u8; 5];
    let mut n = 0;
    loop {
        stack[n] = (value & 0x7f) as u8;
        n += 1;
        value >>= 7;
        if value == 0 {
            break;
        }
    }
    for i in (0..n).rev() {
        let cont = if i > 0 { 0x80 } else { 0 };
        buf.push(stack[i] | cont);
    }
}
