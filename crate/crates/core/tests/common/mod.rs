//! Shared fixtures, independent oracles, and a minimal HTTP mock for the
//! integration tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

use dialogaug_core::corpus::{load_corpus, Corpus, DomainGoal, Goal, SourceFormat};
use dialogaug_core::extrinsic::{EpisodeTrace, FramePrediction, VenueDatabase, VenueRecord};
use dialogaug_core::random::SeededRng;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub fn sample_dialogs() -> Corpus {
    load_corpus(&fixture("sample_dialogs.json"), SourceFormat::Canonical).expect("sample dialog fixture loads")
}

pub fn synthetic_100() -> Corpus {
    load_corpus(&fixture("synthetic_100.json"), SourceFormat::Canonical).expect("synthetic fixture loads")
}

/// Compares `actual` with the golden file, or rewrites it when
/// `UPDATE_GOLDENS` is set.
pub fn check_golden(name: &str, actual: &str) {
    let path = golden_dir().join(name);
    if std::env::var_os("UPDATE_GOLDENS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("missing golden {}: {e} (run with UPDATE_GOLDENS=1)", path.display()));
    assert_eq!(actual, expected, "golden mismatch for {name}");
}

// ---------------------------------------------------------------------------
// BLEU oracle: explicit n-gram lists, linear-scan counting, explicit clipping.

pub struct OracleBleu {
    pub precisions: [f64; 4],
    pub brevity_penalty: f64,
    pub bleu: [f64; 4],
    pub average: f64,
}

fn all_ngrams(tokens: &[u32], n: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut start = 0;
    while start + n <= tokens.len() {
        out.push(tokens[start..start + n].to_vec());
        start += 1;
    }
    out
}

fn occurrences(list: &[Vec<u32>], gram: &[u32]) -> usize {
    list.iter().filter(|g| g.as_slice() == gram).count()
}

pub fn oracle_bleu(hyp: &[u32], reference: &[u32]) -> OracleBleu {
    let mut precisions = [0.0; 4];
    for n in 1..=4 {
        let hyp_grams = all_ngrams(hyp, n);
        let ref_grams = all_ngrams(reference, n);
        if hyp_grams.is_empty() && ref_grams.is_empty() {
            precisions[n - 1] = 1.0;
            continue;
        }
        let mut distinct: Vec<Vec<u32>> = Vec::new();
        for g in &hyp_grams {
            if !distinct.contains(g) {
                distinct.push(g.clone());
            }
        }
        let mut clipped = 0usize;
        for g in &distinct {
            let in_hyp = occurrences(&hyp_grams, g);
            let in_ref = occurrences(&ref_grams, g);
            clipped += if in_hyp < in_ref { in_hyp } else { in_ref };
        }
        let denom = if hyp_grams.is_empty() { 1 } else { hyp_grams.len() };
        precisions[n - 1] = clipped as f64 / denom as f64;
    }
    let c = hyp.len();
    let r = reference.len();
    let brevity_penalty = if c == 0 {
        0.0
    } else if c > r {
        1.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    };
    let mut bleu = [0.0; 4];
    for n in 1..=4 {
        let mut positive = true;
        let mut log_sum = 0.0;
        for &p in &precisions[..n] {
            if p <= 0.0 {
                positive = false;
                break;
            }
            log_sum += (1.0 / n as f64) * p.ln();
        }
        if positive {
            bleu[n - 1] = brevity_penalty * log_sum.exp();
        }
    }
    let average = (bleu[0] + bleu[1] + bleu[2] + bleu[3]) / 4.0;
    OracleBleu {
        precisions,
        brevity_penalty,
        bleu,
        average,
    }
}

// ---------------------------------------------------------------------------
// BERTScore oracle: explicit double loop over token pairs.

pub fn oracle_bertscore(hyp: &[Vec<f64>], reference: &[Vec<f64>]) -> (f64, f64, f64) {
    fn cosine(a: &[f64], b: &[f64]) -> f64 {
        let mut ab = 0.0;
        let mut aa = 0.0;
        let mut bb = 0.0;
        for i in 0..a.len() {
            ab += a[i] * b[i];
            aa += a[i] * a[i];
            bb += b[i] * b[i];
        }
        ab / (aa.sqrt() * bb.sqrt())
    }
    let mut p = 0.0;
    for h in hyp {
        let mut best = f64::MIN;
        for r in reference {
            best = best.max(cosine(h, r));
        }
        p += best;
    }
    p /= hyp.len() as f64;
    let mut r_sum = 0.0;
    for r in reference {
        let mut best = f64::MIN;
        for h in hyp {
            best = best.max(cosine(h, r));
        }
        r_sum += best;
    }
    let recall = r_sum / reference.len() as f64;
    let f1 = if p + recall > 0.0 {
        2.0 * p * recall / (p + recall)
    } else {
        0.0
    };
    (p, recall, f1)
}

// ---------------------------------------------------------------------------
// Filtering example: candidates in listed order with average-BLEU scores
// against the input turn, computed offline by an independent implementation.

pub const FILTERING_REFERENCE: &str = "that train is leaving from cambridge on sunday, correct?";
pub const FILTERING_SELECTED: &str = "I need to leave on Sunday from Cambridge";
pub const FILTERING_RECORDED: [(&str, f64); 7] = [
    ("I need to go from cambridge to ely", 0.07542694618232597),
    ("I need to arrive in Ely by 19:30", 0.0),
    ("I would like to leave on Sunday", 0.07114490800548119),
    ("I need to leave on Sunday from Cambridge", 0.15085389236465194),
    ("I would like to depart from cambridge", 0.07114490800548119),
    ("The train should depart from cambridge", 0.0886827812111631),
    ("I need to arrive by 19:30 in Cambridge", 0.022620935450898993),
];

// ---------------------------------------------------------------------------
// 12-episode MultiWoZ suite with hand-assigned outcomes.

fn strings(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn pairs(items: &[(&str, &str)]) -> BTreeMap<String, String> {
    items.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

pub fn suite_db() -> VenueDatabase {
    let rec = |id: &str, food: &str, area: &str| VenueRecord {
        id: id.into(),
        attributes: pairs(&[("food", food), ("area", area)]),
    };
    VenueDatabase {
        domains: BTreeMap::from([(
            "restaurant".to_string(),
            vec![
                rec("e1", "indian", "centre"),
                rec("e2", "indian", "north"),
                rec("e3", "chinese", "centre"),
            ],
        )]),
    }
}

pub fn suite_goal() -> Goal {
    Goal {
        domains: BTreeMap::from([(
            "restaurant".to_string(),
            DomainGoal {
                constraints: pairs(&[("food", "indian")]),
                requestables: strings(&["phone", "postcode"]),
            },
        )]),
    }
}

/// `(trace, expected inform, expected success)`; 7 inform, 4 success.
pub fn suite_episodes() -> Vec<(EpisodeTrace, bool, bool)> {
    let trace = |i: usize, offered: &[&str], fin: Option<&[(&str, &str)]>, mentioned: &[&str]| EpisodeTrace {
        dialog_id: format!("ep{i:02}"),
        final_constraints: fin
            .map(|f| BTreeMap::from([("restaurant".to_string(), pairs(f))]))
            .unwrap_or_default(),
        offered_entity_ids: if offered.is_empty() {
            BTreeMap::new()
        } else {
            BTreeMap::from([("restaurant".to_string(), strings(offered))])
        },
        mentioned_slots: strings(mentioned),
    };
    let all = &["phone", "postcode"];
    vec![
        (trace(1, &["e1"], None, all), true, true),
        (trace(2, &["e2"], None, &["phone", "postcode", "address"]), true, true),
        (trace(3, &["e1", "e2"], None, all), true, true),
        (
            trace(4, &[], Some(&[("food", "indian"), ("area", "centre")]), all),
            true,
            true,
        ),
        (trace(5, &["e1"], None, &["phone"]), true, false),
        (trace(6, &["e2"], None, &[]), true, false),
        (trace(7, &[], Some(&[("food", "indian")]), &["postcode"]), true, false),
        (trace(8, &["e3"], None, all), false, false),
        (trace(9, &["e1", "e3"], None, all), false, false),
        (trace(10, &[], Some(&[("food", "thai")]), all), false, false),
        (trace(11, &[], None, all), false, false),
        (trace(12, &[], Some(&[("food", "chinese")]), all), false, false),
    ]
}

/// A trace over the suite DB with random offers, final belief and mentions.
pub fn random_trace(rng: &mut SeededRng, i: usize) -> EpisodeTrace {
    let ids = ["e1", "e2", "e3"];
    let offered: Vec<&str> = ids.iter().copied().filter(|_| rng.below(3) == 0).collect();
    let values = ["indian", "chinese", "thai", "centre", "north", "dontcare"];
    let final_constraints = if rng.below(2) == 0 {
        BTreeMap::new()
    } else {
        let mut c = BTreeMap::new();
        for slot in ["food", "area"] {
            if rng.below(2) == 0 {
                c.insert(slot.to_string(), values[rng.index(values.len())].to_string());
            }
        }
        BTreeMap::from([("restaurant".to_string(), c)])
    };
    let mentioned: Vec<&str> = ["phone", "postcode", "address"]
        .into_iter()
        .filter(|_| rng.below(2) == 0)
        .collect();
    EpisodeTrace {
        dialog_id: format!("rand{i}"),
        final_constraints,
        offered_entity_ids: if offered.is_empty() {
            BTreeMap::new()
        } else {
            BTreeMap::from([("restaurant".to_string(), strings(&offered))])
        },
        mentioned_slots: strings(&mentioned),
    }
}

// ---------------------------------------------------------------------------
// SGD hand cases and random aligned sets.

pub fn frame(turn: usize, intent: &str, requested: &[&str], slots: &[(&str, &str)]) -> FramePrediction {
    FramePrediction {
        dialog_id: "d".into(),
        turn_index: turn,
        active_intent: intent.into(),
        requested_slots: strings(requested),
        slot_values: pairs(slots),
    }
}

pub type FrameSet = (Vec<FramePrediction>, Vec<FramePrediction>);

/// `(predictions, golds)` for the goal-accuracy case (joint 0.5, average 0.75).
pub fn sgd_goal_case() -> FrameSet {
    (
        vec![
            frame(0, "Find", &[], &[("food", "indian")]),
            frame(1, "Find", &[], &[("food", "indian"), ("area", "north")]),
        ],
        vec![
            frame(0, "Find", &[], &[("food", "indian")]),
            frame(1, "Find", &[], &[("food", "indian"), ("area", "centre")]),
        ],
    )
}

/// One turn, requested-slot F1 0.5.
pub fn sgd_requested_case() -> FrameSet {
    (
        vec![frame(0, "Find", &["phone", "area"], &[])],
        vec![frame(0, "Find", &["phone", "postcode"], &[])],
    )
}

/// Three turns, intent accuracy 2/3.
pub fn sgd_intent_case() -> FrameSet {
    (
        vec![
            frame(0, "A", &[], &[]),
            frame(1, "B", &[], &[]),
            frame(2, "X", &[], &[]),
        ],
        vec![
            frame(0, "A", &[], &[]),
            frame(1, "B", &[], &[]),
            frame(2, "C", &[], &[]),
        ],
    )
}

/// A random aligned set in which every gold turn has at least one slot.
pub fn random_sgd_set(rng: &mut SeededRng) -> FrameSet {
    let slots = ["food", "area", "price", "day"];
    let values = ["a", "b", "c"];
    let turns = rng.inclusive(1, 8) as usize;
    let mut preds = Vec::new();
    let mut golds = Vec::new();
    for t in 0..turns {
        let mut gold = BTreeMap::new();
        while gold.is_empty() {
            for s in slots {
                if rng.below(2) == 0 {
                    gold.insert(s.to_string(), values[rng.index(3)].to_string());
                }
            }
        }
        let mut pred = BTreeMap::new();
        for s in slots {
            match rng.below(3) {
                0 => {}
                1 => {
                    if let Some(v) = gold.get(s) {
                        pred.insert(s.to_string(), v.clone());
                    }
                }
                _ => {
                    pred.insert(s.to_string(), values[rng.index(3)].to_string());
                }
            }
        }
        golds.push(FramePrediction {
            dialog_id: "r".into(),
            turn_index: t,
            slot_values: gold,
            ..Default::default()
        });
        preds.push(FramePrediction {
            dialog_id: "r".into(),
            turn_index: t,
            slot_values: pred,
            ..Default::default()
        });
    }
    (preds, golds)
}

// ---------------------------------------------------------------------------
// Mock HTTP server. The handler sees (request number, path, body) and returns
// a (status, body) response, or `None` to drop the connection unanswered.

pub type Handler = dyn Fn(usize, &str, &str) -> Option<(u16, String)> + Send + Sync;

pub struct MockServer {
    pub url: String,
    hits: Arc<AtomicUsize>,
}

impl MockServer {
    pub fn start(handler: impl Fn(usize, &str, &str) -> Option<(u16, String)> + Send + Sync + 'static) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let counter = hits.clone();
        let handler: Arc<Handler> = Arc::new(handler);
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                let n = counter.fetch_add(1, Ordering::SeqCst);
                let handler = handler.clone();
                thread::spawn(move || serve(stream, n, handler.as_ref()));
            }
        });
        MockServer { url, hits }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

fn serve(stream: TcpStream, n: usize, handler: &Handler) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut request_line = String::new();
    if reader.read_line(&mut request_line).is_err() {
        return;
    }
    let path = request_line.split_whitespace().nth(1).unwrap_or("/").to_string();
    let mut length = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap_or(0) == 0 {
            break;
        }
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            if name.eq_ignore_ascii_case("content-length") {
                length = value.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; length];
    let _ = reader.read_exact(&mut body);
    let body = String::from_utf8_lossy(&body).to_string();
    let Some((status, payload)) = handler(n, &path, &body) else {
        return;
    };
    let mut stream = stream;
    let response = format!(
        "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{payload}",
        payload.len()
    );
    let _ = stream.write_all(response.as_bytes());
}
