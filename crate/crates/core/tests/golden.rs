mod common;

use signlink::service::script::{format_stream, render, Script};
use signlink::service::{format_log, replay, Outbound, Speed};
use signlink::synth::SynthSpec;

const SCRIPT: &str = "start,blood:3,not_signing:6,generate";

fn close(a: &Outbound, b: &Outbound) -> bool {
    match (a, b) {
        (
            Outbound::Prediction {
                t,
                label,
                confidence,
                window_full,
            },
            Outbound::Prediction {
                t: t2,
                label: l2,
                confidence: c2,
                window_full: w2,
            },
        ) => t == t2 && label == l2 && window_full == w2 && (confidence - c2).abs() <= 1e-9,
        _ => a == b,
    }
}

#[test]
fn recorded_stream_is_reproducible() {
    let script: Script = SCRIPT.parse().unwrap();
    let text = format_stream(&render(&SynthSpec::default(), &script, 30.0).unwrap());
    let path = common::fixture("blood_episode.jsonl");
    if common::blessing() {
        std::fs::write(&path, &text).unwrap();
    }
    assert!(text == std::fs::read_to_string(&path).unwrap(), "stream differs from fixture");
}

#[test]
fn replay_log_matches_fixture() {
    let log = replay(
        common::reference_engine(),
        &common::fixture("blood_episode.jsonl"),
        Speed::Max,
    )
    .unwrap();
    let path = common::fixture("blood_episode.log");
    if common::blessing() {
        std::fs::write(&path, format_log(&log)).unwrap();
    }
    let frozen: Vec<Outbound> = std::fs::read_to_string(&path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(log.len(), frozen.len());
    for (i, (a, b)) in log.iter().zip(&frozen).enumerate() {
        assert!(close(a, b), "record {i}: {a:?} vs {b:?}");
    }
}

#[test]
fn reference_distribution_is_frozen() {
    let text = std::fs::read_to_string(common::fixture("blood_episode.jsonl")).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter_map(|l| match signlink::service::parse_inbound(l).unwrap() {
            signlink::service::Inbound::Frame { coords, .. } => Some(coords),
            _ => None,
        })
        .take(30)
        .collect();
    let window = signlink::WindowMatrix::from_rows(&rows).unwrap();
    let dist = common::reference_model().forward(&window).unwrap();
    let got = serde_json::to_string(dist.probabilities()).unwrap() + "\n";
    let path = common::fixture("blood_window.probs.json");
    if common::blessing() {
        std::fs::write(&path, &got).unwrap();
    }
    let frozen: Vec<f64> = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(dist.probabilities(), &frozen[..]);
    assert!((frozen.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    assert_eq!(dist.argmax().0, 1, "blood");
}
