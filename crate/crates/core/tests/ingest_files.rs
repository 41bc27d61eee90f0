use continuo::features::{dataset_profiles, Representation};
use continuo::griff::GriffOptions;
use continuo::ingest::{load_dataset_from_path, parse_midi};
use continuo::synth::{export, generate, SynthConfig};
use midly::num::{u15, u24, u28, u4, u7};
use midly::{Format, Header, MetaMessage, MidiMessage, Smf, Timing, TrackEvent, TrackEventKind};
use proptest::prelude::*;

#[test]
fn exported_synth_corpus_loads_back_identically() {
    let cfg = SynthConfig {
        scores: 2,
        players: 3,
        takes: 2,
        score_length: 15,
        jitter_ms: 5.0,
        deletion_prob: 0.05,
        overlap: 0.25,
        seed: 21,
        ..SynthConfig::default()
    };
    let corpus = generate(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let manifest = export(&corpus, dir.path()).unwrap();
    let loaded = load_dataset_from_path(&manifest).unwrap();
    assert_eq!(loaded, corpus.dataset);
    for repr in Representation::STANDARD {
        assert_eq!(
            dataset_profiles(&loaded, None, repr, GriffOptions::default()).unwrap(),
            dataset_profiles(&corpus.dataset, None, repr, GriffOptions::default()).unwrap()
        );
    }
}

struct Planned {
    on: u32,
    off: u32,
    key: u8,
}

/// Note times from an independent walk over the tempo events.
fn reference_ms(tempos: &[(u32, u32)], tpq: u16, tick: u32) -> f64 {
    let mut ms = 0.0;
    let mut last_tick = 0;
    let mut us_per_quarter = 500_000.0;
    for &(t, tempo) in tempos.iter().filter(|(t, _)| *t <= tick) {
        ms += f64::from(t - last_tick) * us_per_quarter / f64::from(tpq) / 1000.0;
        last_tick = t;
        us_per_quarter = f64::from(tempo);
    }
    ms + f64::from(tick - last_tick) * us_per_quarter / f64::from(tpq) / 1000.0
}

fn events_to_track(mut events: Vec<(u32, TrackEventKind<'static>)>) -> Vec<TrackEvent<'static>> {
    events.sort_by_key(|(t, k)| (*t, matches!(k, TrackEventKind::Midi { message: MidiMessage::NoteOn { .. }, .. })));
    let mut last = 0;
    let mut track: Vec<TrackEvent> = events
        .into_iter()
        .map(|(t, kind)| {
            let delta = u28::new(t - last);
            last = t;
            TrackEvent { delta, kind }
        })
        .collect();
    track.push(TrackEvent {
        delta: u28::new(0),
        kind: TrackEventKind::Meta(MetaMessage::EndOfTrack),
    });
    track
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn note_times_match_reference_reader(
        tpq in prop::sample::select(vec![96u16, 480, 960]),
        tempos in prop::collection::vec((0u32..20_000, 200_000u32..1_500_000), 0..6),
        notes in prop::collection::vec((0u32..20_000, 1u32..3_000), 1..40),
    ) {
        let mut tempos = tempos;
        tempos.sort_unstable();
        tempos.dedup_by_key(|t| t.0);
        let planned: Vec<Planned> = notes
            .iter()
            .enumerate()
            .map(|(i, &(on, dur))| Planned { on, off: on + dur, key: 30 + i as u8 })
            .collect();

        let conductor = events_to_track(
            tempos.iter().map(|&(t, us)| (t, TrackEventKind::Meta(MetaMessage::Tempo(u24::new(us))))).collect(),
        );
        let channel = u4::new(0);
        let music = events_to_track(
            planned
                .iter()
                .flat_map(|p| {
                    [
                        (p.on, TrackEventKind::Midi { channel, message: MidiMessage::NoteOn { key: u7::new(p.key), vel: u7::new(90) } }),
                        (p.off, TrackEventKind::Midi { channel, message: MidiMessage::NoteOff { key: u7::new(p.key), vel: u7::new(0) } }),
                    ]
                })
                .collect(),
        );
        let smf = Smf {
            header: Header::new(Format::Parallel, Timing::Metrical(u15::new(tpq))),
            tracks: vec![conductor, music],
        };
        let mut bytes = Vec::new();
        smf.write_std(&mut bytes).unwrap();

        // midly must read back what it wrote before it can serve as the reference.
        let reread = Smf::parse(&bytes).unwrap();
        prop_assert_eq!(reread.tracks.len(), 2);

        let parsed = parse_midi(&bytes).unwrap();
        prop_assert!(parsed.warnings.is_empty());
        prop_assert_eq!(parsed.notes.len(), planned.len());
        for p in &planned {
            let n = parsed.notes.iter().find(|n| n.pitch == p.key).unwrap();
            prop_assert!((n.onset_ms - reference_ms(&tempos, tpq, p.on)).abs() < 1e-6);
            prop_assert!((n.offset_ms - reference_ms(&tempos, tpq, p.off)).abs() < 1e-6);
            prop_assert_eq!(n.velocity, 90);
        }
    }
}
