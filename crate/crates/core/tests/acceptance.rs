//! Acceptance suite. Prints one line per criterion and exits non-zero if
//! any criterion fails. A criterion that needs the real corpus reports
//! BLOCKED when `PIG_DATASET_DIR` is unset.

mod support;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use piano_fingering::augment::{collect_stats, generate, GenerateConfig};
use piano_fingering::encoding::{compute_pd, note_combinations, PdToken};
use piano_fingering::harness::{
    cross_validate, cv_split, evaluate_folds, score_evals, train_hand, Checkpoint, Dataset,
    DecodeOptions, FingeringModel, RunConfig,
};
use piano_fingering::harness::baselines::{MajorityBaseline, TokenBaseline};
use piano_fingering::encoding::InputMode;
use piano_fingering::metrics::{evaluate_scores, AnnotationEval, Fingering, ScoreEval};
use piano_fingering::pig::{Hand, NoteEvent, Piece};
use piano_fingering::prior::{decision_t, pruned_forward, psi};
use piano_fingering::rnn::ModelParams;
use piano_fingering::transition::{classify_steps, constrained_forward, StepKind, TransitionMatrices};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Status {
    Pass,
    Fail,
    Blocked,
}

struct Outcome {
    status: Status,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome {
        status: Status::Pass,
        detail: detail.into(),
    }
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome {
        status: Status::Fail,
        detail: detail.into(),
    }
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn within(elapsed: Duration, budget_s: f64) -> bool {
    elapsed.as_secs_f64() < budget_s
}

// ---------------------------------------------------------------- 1

/// The published grid for right-hand descending / left-hand ascending,
/// `x` = impossible without moving the hand.
const GRID: [&str; 5] = ["oooox", "ooxxx", "oooxx", "oooox", "ooooo"];

fn grid_cell(prev: usize, next: usize) -> bool {
    GRID[prev].as_bytes()[next] == b'o'
}

fn feasibility_tables() -> Outcome {
    let start = Instant::now();
    let mut agree = 0;
    let mut literal_only = Vec::new();
    for (hand, step) in [
        (Hand::Right, StepKind::SingleDown),
        (Hand::Right, StepKind::SingleUp),
        (Hand::Left, StepKind::SingleUp),
        (Hand::Left, StepKind::SingleDown),
    ] {
        let reference = matches!(
            (hand, step),
            (Hand::Right, StepKind::SingleDown) | (Hand::Left, StepKind::SingleUp)
        );
        for a in 0..5 {
            for b in 0..5 {
                let literal = if reference { grid_cell(a, b) } else { grid_cell(b, a) };
                // left hand: the 5.5 threshold admits the 1/5 crossing
                let relaxed = hand == Hand::Left && a * b == 0 && a + b == 4 && a != b;
                let expected = literal || relaxed;
                let got = decision_t(hand, step, a as u8 + 1, b as u8 + 1) == 1;
                if got == expected {
                    agree += 1;
                }
                if got != literal {
                    literal_only.push(format!("{} {:?} {}->{}", hand.name(), step, a + 1, b + 1));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        agree == 100 && within(elapsed, 1.0),
        format!(
            "{agree}/100 cases; differs from the unrelaxed grid only at [{}]",
            literal_only.join(", ")
        ),
    )
}

// ---------------------------------------------------------------- 2

fn all_refs(ds: &Dataset) -> Vec<&Piece> {
    ds.pieces.iter().collect()
}

fn flagged_steps(ds: &Dataset, model: &FingeringModel, opts: DecodeOptions) -> (usize, f64) {
    let mut flagged = 0;
    let mut evals = Vec::new();
    for (score, pieces) in ds.by_score() {
        let mut annotations = Vec::new();
        for p in pieces {
            let pred = model.predict(p, opts).unwrap();
            let ann = AnnotationEval::from_pieces(p, &pred).unwrap();
            for hand in Hand::BOTH {
                let steps = match hand {
                    Hand::Left => &ann.left_steps,
                    Hand::Right => &ann.right_steps,
                };
                let f = pred.hand(hand);
                for t in 1..f.len() {
                    flagged += psi(hand, steps[t], f[t - 1], f[t]) as usize;
                }
            }
            annotations.push(ann);
        }
        evals.push(ScoreEval {
            score_id: score.to_string(),
            annotations,
        });
    }
    let report = evaluate_scores("playability", &evals).unwrap();
    (flagged, report.ifr)
}

/// A model whose transition scores push hard toward forbidden moves.
fn adversarial_model(trained: &FingeringModel) -> FingeringModel {
    let mut m = trained.clone();
    for hand in Hand::BOTH {
        let slot = match hand {
            Hand::Left => m.left.as_mut(),
            Hand::Right => m.right.as_mut(),
        };
        let Some(hm) = slot else { continue };
        for (step, w) in [
            (StepKind::SingleUp, &mut hm.params.transitions.up),
            (StepKind::SingleDown, &mut hm.params.transitions.down),
        ] {
            for i in 0..5 {
                for j in 0..5 {
                    let bad = psi(hand, step, i as u8 + 1, j as u8 + 1) == 1;
                    w.set(i, j, if bad { 40.0 } else { -40.0 });
                }
            }
        }
    }
    m
}

fn playability() -> Outcome {
    let start = Instant::now();
    let corpus = support::corpus(60, 21);
    let ds = &corpus.dataset;
    let cfg = RunConfig {
        hidden_size: 16,
        epochs: 2,
        augment: false,
        lr: 5e-3,
        ..Default::default()
    };
    let refs = all_refs(ds);
    let mut model = FingeringModel::default();
    for hand in Hand::BOTH {
        let trained = train_hand(hand, &refs, &[], &cfg, 5).unwrap().map(|(m, _)| m);
        match hand {
            Hand::Left => model.left = trained,
            Hand::Right => model.right = trained,
        }
    }
    let opts = DecodeOptions::default();
    let (flagged, ifr) = flagged_steps(ds, &model, opts);
    let (adv_flagged, adv_ifr) = flagged_steps(ds, &adversarial_model(&model), opts);
    let (raw_flagged, _) = flagged_steps(
        ds,
        &adversarial_model(&model),
        DecodeOptions {
            use_prior: false,
            ..opts
        },
    );
    let elapsed = start.elapsed();
    let label = if corpus.is_proxy { "proxy corpus" } else { "dataset" };
    verdict(
        flagged == 0 && adv_flagged == 0 && ifr == 0.0 && adv_ifr == 0.0 && within(elapsed, 300.0),
        format!(
            "{label}, {} annotations: trained IFR {ifr}, adversarial IFR {adv_ifr}, flagged {flagged}/{adv_flagged} (adversarial without pruning: {raw_flagged})",
            ds.pieces.len()
        ),
    )
}

// ---------------------------------------------------------------- 3

fn vocabulary_compression() -> Outcome {
    let Some(ds) = support::real_corpus() else {
        return Outcome {
            status: Status::Blocked,
            detail: "needs the real corpus; set PIG_DATASET_DIR".into(),
        };
    };
    let mut parts = Vec::new();
    let mut ok = true;
    for (hand, want_tokens, want_combos) in [(Hand::Right, 108.0, 555.0), (Hand::Left, 101.0, 564.0)] {
        let mut tokens = BTreeSet::new();
        for p in &ds.pieces {
            let notes = p.hand(hand);
            if !notes.is_empty() {
                tokens.extend(compute_pd(notes).unwrap().iter().map(|t| t.d));
            }
        }
        let combos = note_combinations(ds.pieces.iter().map(|p| p.hand(hand))).len();
        let t_ok = (tokens.len() as f64 - want_tokens).abs() <= 0.15 * want_tokens;
        let c_ok = (combos as f64 - want_combos).abs() <= 0.05 * want_combos;
        ok &= t_ok && c_ok;
        parts.push(format!(
            "{} {} tokens vs {} combinations",
            hand.name(),
            tokens.len(),
            combos
        ));
    }
    verdict(ok, parts.join("; "))
}

// ---------------------------------------------------------------- 4

fn random_model(rng: &mut ChaCha8Rng, input: usize, hidden: usize, depth: usize) -> ModelParams {
    let mut p = ModelParams::init(input, hidden, depth, rng);
    for t in p.tensors_mut() {
        for v in t.iter_mut() {
            *v = rng.gen_range(-0.8..0.8);
        }
    }
    p
}

fn random_steps(rng: &mut ChaCha8Rng, n: usize) -> Vec<StepKind> {
    let kinds = [
        StepKind::SingleUp,
        StepKind::SingleDown,
        StepKind::Polyphonic,
        StepKind::Leap,
        StepKind::Repeat,
    ];
    let mut steps = vec![StepKind::Start];
    for _ in 1..n {
        // favour single-tone steps so the transition matrices get gradient
        let k = if rng.gen_bool(0.7) { rng.gen_range(0..2) } else { rng.gen_range(2..5) };
        steps.push(kinds[k]);
    }
    steps
}

fn relative_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
}

fn gradient_check() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut instances = 0;
    let mut checked = 0;
    for depth in [1, 1, 1, 1, 2] {
        for _ in 0..5 {
            let (input, hidden, n) = (3, 4, 6);
            let params = random_model(&mut rng, input, hidden, depth);
            let inputs: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..input).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let steps = random_steps(&mut rng, n);
            let gold: Vec<u8> = (0..n).map(|_| rng.gen_range(1..=5)).collect();
            let (_, grads) = params.loss_and_gradients(&inputs, &steps, &gold, true).unwrap();
            let analytic: Vec<f64> = grads.tensors().iter().flat_map(|t| t.iter().copied()).collect();
            let mut probe = params.clone();
            let mut k = 0;
            let n_tensors = probe.tensors().len();
            for ti in 0..n_tensors {
                let len = probe.tensors()[ti].len();
                for i in 0..len {
                    let orig = probe.tensors()[ti][i];
                    probe.tensors_mut()[ti][i] = orig + h;
                    let up = probe.loss_and_gradients(&inputs, &steps, &gold, true).unwrap().0;
                    probe.tensors_mut()[ti][i] = orig - h;
                    let down = probe.loss_and_gradients(&inputs, &steps, &gold, true).unwrap().0;
                    probe.tensors_mut()[ti][i] = orig;
                    let numeric = (up - down) / (2.0 * h);
                    worst = worst.max(relative_error(analytic[k], numeric));
                    k += 1;
                }
            }
            checked += k;
            instances += 1;
        }
    }
    let elapsed = start.elapsed();
    verdict(
        instances >= 20 && worst < 1e-4 && within(elapsed, 30.0),
        format!("{instances} instances, {checked} components, worst relative error {worst:.2e}"),
    )
}

// ---------------------------------------------------------------- 5

/// Random hand part: single notes, chords, repeats and leaps.
fn random_notes(rng: &mut ChaCha8Rng, events: usize) -> Vec<NoteEvent> {
    let mut notes = Vec::new();
    let mut pitch: i32 = 64;
    let mut k = 0;
    while notes.len() < events {
        let size = if rng.gen_bool(0.2) { rng.gen_range(2..=3) } else { 1 };
        let jump = if rng.gen_bool(0.1) { rng.gen_range(12..=15) } else { rng.gen_range(0..=5) };
        pitch = (pitch + if rng.gen() { jump } else { -jump }).clamp(40, 90);
        let mut p = pitch;
        for _ in 0..size.min(events - notes.len()) {
            notes.push(NoteEvent::new(notes.len() as u32, k as f64, k as f64 + 1.0, p as u8, Hand::Right, 1));
            p += rng.gen_range(3..=5);
        }
        k += 1;
    }
    notes
}

/// Step class read straight off the coded values.
fn oracle_kind(prev: Option<&PdToken>, cur: &PdToken) -> i32 {
    match prev {
        Some(p) if p.n == 0 && cur.n == 0 && cur.d != 0 && cur.d.abs() < 12 => cur.d.signum(),
        _ => 0,
    }
}

fn oracle_allowed(hand: Hand, dir: i32, a: usize, b: usize) -> bool {
    if dir == 0 {
        return true;
    }
    let product = ((a + 1) * (b + 1)) as f64;
    let movement = dir * (b as i32 - a as i32);
    match hand {
        Hand::Right => !(movement < 0 && product > 4.5),
        Hand::Left => !(movement > 0 && product > 5.5),
    }
}

fn oracle_flagged(hand: Hand, dir: i32, a: usize, b: usize) -> bool {
    let movement = dir * (b as i32 - a as i32);
    let crossing = match hand {
        Hand::Right => movement < 0,
        Hand::Left => movement > 0,
    };
    dir != 0 && crossing && ((a + 1) * (b + 1)) as f64 > 4.5
}

fn oracle_softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

/// Unrolled recurrence; with `prune`, forbidden edges contribute nothing
/// and successors of the decoded finger that are forbidden or flagged get
/// probability zero.
fn oracle_unroll(
    up: &[[f64; 5]; 5],
    down: &[[f64; 5]; 5],
    lambdas: &[Vec<f64>],
    dirs: &[i32],
    hand: Hand,
    prune: bool,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut probs: Vec<Vec<f64>> = Vec::new();
    let mut path: Vec<usize> = Vec::new();
    for t in 0..lambdas.len() {
        let mut y = lambdas[t].clone();
        if t > 0 {
            let w = match dirs[t] {
                1 => Some(up),
                -1 => Some(down),
                _ => None,
            };
            if let Some(w) = w {
                for j in 0..5 {
                    for i in 0..5 {
                        if !prune || oracle_allowed(hand, dirs[t], i, j) {
                            y[j] += probs[t - 1][i] * w[i][j];
                        }
                    }
                }
            }
        }
        let p = if t > 0 && prune {
            let prev = path[t - 1];
            let keep: Vec<bool> = (0..5)
                .map(|j| oracle_allowed(hand, dirs[t], prev, j) && !oracle_flagged(hand, dirs[t], prev, j))
                .collect();
            let sub: Vec<f64> = (0..5).filter(|&j| keep[j]).map(|j| y[j]).collect();
            let sp = oracle_softmax(&sub);
            let mut full = vec![0.0; 5];
            let mut it = sp.into_iter();
            for j in 0..5 {
                if keep[j] {
                    full[j] = it.next().unwrap();
                }
            }
            full
        } else {
            oracle_softmax(&y)
        };
        let mut best = 0;
        for j in 1..5 {
            if p[j] > p[best] {
                best = j;
            }
        }
        path.push(best);
        probs.push(p);
    }
    (probs, path)
}

/// Every finger sequence of length `n` with no forbidden or flagged step.
fn feasible_paths(hand: Hand, dirs: &[i32]) -> BTreeSet<Vec<usize>> {
    let n = dirs.len();
    let mut out = BTreeSet::new();
    let total = 5usize.pow(n as u32);
    'seq: for code in 0..total {
        let mut seq = Vec::with_capacity(n);
        let mut c = code;
        for _ in 0..n {
            seq.push(c % 5);
            c /= 5;
        }
        for t in 1..n {
            if !oracle_allowed(hand, dirs[t], seq[t - 1], seq[t])
                || oracle_flagged(hand, dirs[t], seq[t - 1], seq[t])
            {
                continue 'seq;
            }
        }
        out.insert(seq);
    }
    out
}

fn decoder_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst: f64 = 0.0;
    let mut bad_paths = 0;
    let mut flagged = 0;
    let mut adversarial = 0;
    for trial in 0..1000 {
        let n = rng.gen_range(1..=8);
        let hand = if rng.gen() { Hand::Left } else { Hand::Right };
        let notes = random_notes(&mut rng, n);
        let tokens = compute_pd(&notes).unwrap();
        let steps = classify_steps(&tokens);
        let dirs: Vec<i32> = (0..n)
            .map(|t| oracle_kind(t.checked_sub(1).map(|p| &tokens[p]), &tokens[t]))
            .collect();
        let mut up = [[0.0; 5]; 5];
        let mut down = [[0.0; 5]; 5];
        let mut matrices = TransitionMatrices::zeros();
        let strong = trial % 2 == 1;
        for i in 0..5 {
            for j in 0..5 {
                let (a, b) = if strong {
                    // push toward the moves the decoder must refuse
                    let scale = |dir| if oracle_flagged(hand, dir, i, j) || !oracle_allowed(hand, dir, i, j) { 30.0 } else { -5.0 };
                    (scale(1), scale(-1))
                } else {
                    (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0))
                };
                up[i][j] = a;
                down[i][j] = b;
                matrices.up.set(i, j, a);
                matrices.down.set(i, j, b);
            }
        }
        let lambdas: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..5).map(|_| rng.gen_range(-4.0..4.0)).collect())
            .collect();
        if strong {
            adversarial += 1;
        }

        let plain = constrained_forward(&matrices, &lambdas, &steps).unwrap();
        let (plain_oracle, _) = oracle_unroll(&up, &down, &lambdas, &dirs, hand, false);
        let pruned = pruned_forward(&matrices, &lambdas, &steps, hand, true).unwrap();
        let (pruned_oracle, path) = oracle_unroll(&up, &down, &lambdas, &dirs, hand, true);
        for (a, b) in plain.iter().flatten().zip(plain_oracle.iter().flatten()) {
            worst = worst.max((a - b).abs());
        }
        for (a, b) in pruned.probs.iter().flatten().zip(pruned_oracle.iter().flatten()) {
            worst = worst.max((a - b).abs());
        }
        let decoded: Vec<usize> = pruned.fingers.iter().map(|&f| f as usize - 1).collect();
        if decoded != path || !feasible_paths(hand, &dirs).contains(&decoded) {
            bad_paths += 1;
        }
        for t in 1..n {
            flagged += psi(hand, steps[t], pruned.fingers[t - 1], pruned.fingers[t]) as usize;
        }
    }
    verdict(
        worst <= 1e-10 && bad_paths == 0 && flagged == 0,
        format!(
            "1000 trials ({adversarial} adversarial), max deviation {worst:.1e}, paths outside the feasible set {bad_paths}, flagged steps {flagged}"
        ),
    )
}

// ---------------------------------------------------------------- 6

fn ann(left: (&[StepKind], &[u8], &[u8]), right: (&[StepKind], &[u8], &[u8]), id: &str) -> AnnotationEval {
    AnnotationEval {
        annotator_id: id.into(),
        left_steps: left.0.to_vec(),
        right_steps: right.0.to_vec(),
        gold: Fingering {
            left: left.1.to_vec(),
            right: right.1.to_vec(),
        },
        pred: Fingering {
            left: left.2.to_vec(),
            right: right.2.to_vec(),
        },
    }
}

fn score(id: &str, annotations: Vec<AnnotationEval>) -> ScoreEval {
    ScoreEval {
        score_id: id.into(),
        annotations,
    }
}

fn metric_fixtures() -> Outcome {
    use StepKind::*;
    const E: (&[StepKind], &[u8], &[u8]) = (&[], &[], &[]);
    let sd5 = [Start, SingleDown, SingleDown, SingleDown, SingleDown];
    let poly10 = [Start, Polyphonic, Polyphonic, Polyphonic, Polyphonic, Polyphonic, Polyphonic, Polyphonic, Polyphonic, Polyphonic];
    // (name, scores, m_gen, m_high, ifr)
    let cases: Vec<(&str, Vec<ScoreEval>, f64, f64, f64)> = vec![
        (
            "identical",
            vec![score("a", vec![ann(E, (&poly10[..5], &[1, 2, 3, 4, 5], &[1, 2, 3, 4, 5]), "1")])],
            1.0,
            1.0,
            0.0,
        ),
        (
            "all different",
            vec![score("a", vec![ann(E, (&poly10[..5], &[1, 2, 3, 4, 5], &[2, 3, 4, 5, 1]), "1")])],
            0.0,
            0.0,
            0.0,
        ),
        (
            "ten notes two mismatches",
            vec![score(
                "a",
                vec![ann(E, (&poly10, &[1, 2, 3, 4, 5, 1, 2, 3, 4, 5], &[1, 2, 3, 4, 5, 1, 2, 3, 5, 4]), "1")],
            )],
            0.8,
            0.8,
            0.0,
        ),
        (
            "both hands pooled",
            vec![score(
                "a",
                vec![ann(
                    (&poly10[..4], &[1, 2, 3, 4], &[1, 2, 3, 5]),
                    (&poly10[..6], &[1, 2, 3, 4, 5, 1], &[1, 2, 3, 4, 1, 2]),
                    "1",
                )],
            )],
            0.7,
            0.7,
            0.0,
        ),
        (
            "two ground truths",
            vec![score(
                "a",
                vec![
                    ann(E, (&poly10, &[1; 10], &[1, 1, 1, 1, 1, 1, 1, 1, 2, 2]), "1"),
                    ann(E, (&poly10, &[1; 10], &[1, 1, 1, 1, 1, 1, 2, 2, 2, 2]), "2"),
                ],
            )],
            0.7,
            0.8,
            0.0,
        ),
        (
            "best per score",
            vec![
                score("a", vec![ann(E, (&poly10[..2], &[1, 2], &[1, 2]), "1")]),
                score("b", vec![ann(E, (&poly10[..2], &[1, 2], &[1, 3]), "1")]),
            ],
            0.75,
            0.75,
            0.0,
        ),
        (
            "one flagged step",
            vec![score("a", vec![ann(E, (&sd5, &[5, 4, 2, 1, 1], &[5, 4, 2, 3, 1]), "1")])],
            0.8,
            0.8,
            0.2,
        ),
        (
            "flagged step matching ground truth",
            vec![score("a", vec![ann(E, (&sd5, &[5, 4, 2, 3, 1], &[5, 4, 2, 3, 1]), "1")])],
            1.0,
            1.0,
            0.0,
        ),
        (
            "correction uses the nearest ground truth",
            vec![score(
                "a",
                vec![
                    ann(E, (&sd5, &[5, 4, 1, 1, 1], &[5, 4, 2, 3, 1]), "1"),
                    ann(E, (&sd5, &[5, 4, 2, 3, 1], &[5, 4, 2, 3, 1]), "2"),
                ],
            )],
            0.8,
            1.0,
            0.0,
        ),
        (
            "averaged over scores",
            vec![
                score("a", vec![ann(E, (&sd5, &[5, 4, 2, 1, 1], &[5, 4, 2, 3, 1]), "1")]),
                score(
                    "b",
                    vec![ann((&[Start, SingleUp, SingleDown, Leap], &[1, 1, 1, 1], &[2, 3, 2, 3]), E, "1")],
                ),
            ],
            0.4,
            0.4,
            0.35,
        ),
        (
            "left 1 to 5 is flagged",
            vec![score("a", vec![ann((&[Start, SingleUp], &[1, 4], &[1, 5]), E, "1")])],
            0.5,
            0.5,
            0.5,
        ),
        (
            "chords are never flagged",
            vec![score("a", vec![ann(E, (&poly10[..3], &[2, 3, 2], &[2, 3, 4]), "1")])],
            2.0 / 3.0,
            2.0 / 3.0,
            0.0,
        ),
    ];
    let mut failures = Vec::new();
    let total = cases.len();
    for (name, scores, m_gen, m_high, ifr) in cases {
        let r = evaluate_scores(name, &scores).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
        if !(close(r.m_gen, m_gen) && close(r.m_high, m_high) && close(r.ifr, ifr)) {
            failures.push(format!("{name}: got {} {} {}", r.m_gen, r.m_high, r.ifr));
        }
    }
    // the left-hand crossing case is where the two thresholds part ways
    let r = evaluate_scores(
        "discrepancy",
        &[score("a", vec![ann((&[Start, SingleUp], &[1, 4], &[1, 5]), E, "1")])],
    )
    .unwrap();
    if r.psi_t_discrepancies != 1 {
        failures.push("discrepancy count".into());
    }
    verdict(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{total} fixtures exact to 1e-12")
        } else {
            failures.join("; ")
        },
    )
}

// ---------------------------------------------------------------- 7

fn augmentor_contract() -> Outcome {
    let corpus = support::corpus(60, 22);
    let ds = &corpus.dataset;
    let stats = collect_stats(&ds.pieces, 0.05).unwrap();
    let cfg = GenerateConfig {
        seed: 9,
        ..Default::default()
    };
    let a = generate(&stats, &cfg).unwrap();
    let b = generate(&stats, &cfg).unwrap();
    let c = generate(&stats, &GenerateConfig { seed: 10, ..cfg }).unwrap();

    let mut vocab: BTreeMap<Hand, BTreeSet<i32>> = BTreeMap::new();
    for p in &ds.pieces {
        for hand in Hand::BOTH {
            if !p.hand(hand).is_empty() {
                vocab
                    .entry(hand)
                    .or_default()
                    .extend(compute_pd(p.hand(hand)).unwrap().iter().map(|t| t.d));
            }
        }
    }
    let mut infeasible = 0;
    let mut flagged = 0;
    let mut oov = 0;
    let mut bad_len = 0;
    let mut per_hand = BTreeMap::new();
    for s in &a {
        *per_hand.entry(s.hand).or_insert(0) += 1;
        if !(150..=300).contains(&s.fingers.len()) {
            bad_len += 1;
        }
        let steps = classify_steps(&s.tokens);
        for t in 1..s.fingers.len() {
            infeasible += 1 - decision_t(s.hand, steps[t], s.fingers[t - 1], s.fingers[t]) as usize;
            flagged += psi(s.hand, steps[t], s.fingers[t - 1], s.fingers[t]) as usize;
        }
        oov += s.tokens.iter().filter(|t| !vocab[&s.hand].contains(&t.d)).count();
    }
    let same = a.iter().zip(&b).all(|(x, y)| x.piece == y.piece);
    let differs = a.iter().zip(&c).any(|(x, y)| x.piece != y.piece);
    let counts_ok = per_hand.values().all(|&n| n == 50) && per_hand.len() == 2;
    let label = if corpus.is_proxy { "proxy corpus" } else { "dataset" };
    verdict(
        counts_ok && bad_len == 0 && infeasible == 0 && flagged == 0 && oov == 0 && same && differs,
        format!(
            "{label}: {per_hand:?} sequences, lengths {}..{}, infeasible {infeasible}, flagged {flagged}, unknown tokens {oov}, seed-stable {same}",
            a.iter().map(|s| s.fingers.len()).min().unwrap_or(0),
            a.iter().map(|s| s.fingers.len()).max().unwrap_or(0),
        ),
    )
}

// ---------------------------------------------------------------- 8

fn first_scores(ds: &Dataset, n: usize) -> Dataset {
    let keep: BTreeSet<&str> = ds.score_ids().into_iter().take(n).collect();
    Dataset {
        pieces: ds
            .pieces
            .iter()
            .filter(|p| keep.contains(p.score_id.as_str()))
            .cloned()
            .collect(),
    }
}

fn efficacy_config() -> RunConfig {
    RunConfig {
        hidden_size: 32,
        lr: 5e-3,
        epochs: 40,
        patience: 8,
        folds: 3,
        seed: 3,
        augment: false,
        ..Default::default()
    }
}

fn training_efficacy() -> Outcome {
    let start = Instant::now();
    let corpus = support::corpus(30, 23);
    let ds = first_scores(&corpus.dataset, 30);
    let cfg = efficacy_config();

    let full = cross_validate(&ds, &cfg, "pd+transition+prior", None).unwrap();
    let folds: Vec<(&FingeringModel, &[String])> = full
        .folds
        .iter()
        .map(|f| (&f.model, f.test_scores.as_slice()))
        .collect();
    let no_prior = evaluate_folds(
        "pd+transition",
        &ds,
        &folds,
        DecodeOptions {
            use_prior: false,
            use_transition: true,
        },
    )
    .unwrap();
    let plain_cfg = RunConfig {
        use_transition: false,
        use_prior: false,
        ..cfg.clone()
    };
    let plain = cross_validate(&ds, &plain_cfg, "pd", None).unwrap().report;
    let raw_cfg = RunConfig {
        input_mode: InputMode::RawNote,
        use_transition: false,
        use_prior: false,
        ..cfg.clone()
    };
    let raw = cross_validate(&ds, &raw_cfg, "raw", None).unwrap().report;

    let split = cv_split(ds.score_ids(), 3, cfg.seed).unwrap();
    let mut majority_evals = Vec::new();
    let mut token_evals = Vec::new();
    for (i, test) in split.iter().enumerate() {
        let train_ids: Vec<String> = split
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .flat_map(|(_, f)| f.iter().cloned())
            .collect();
        let train = ds.select(&train_ids);
        let maj = MajorityBaseline::fit(&train);
        let tok = TokenBaseline::fit(&train).unwrap();
        majority_evals.extend(score_evals(&ds, test, |p| Ok(maj.predict(p))).unwrap());
        token_evals.extend(score_evals(&ds, test, |p| tok.predict(p)).unwrap());
    }
    let majority = evaluate_scores("majority", &majority_evals).unwrap();
    let token = evaluate_scores("per-token", &token_evals).unwrap();

    let m = full.report.m_gen;
    let beats_majority = m - majority.m_gen >= 0.10;
    let beats_token = m - token.m_gen >= 0.10;
    let pd_over_raw = plain.m_gen > raw.m_gen;
    let transition_helps = no_prior.m_gen >= plain.m_gen;
    let prior_zero = full.report.ifr == 0.0;
    let elapsed = start.elapsed();
    let label = if corpus.is_proxy { "proxy corpus" } else { "dataset" };
    verdict(
        beats_majority && beats_token && pd_over_raw && transition_helps && prior_zero && within(elapsed, 7200.0),
        format!(
            "{label}, {} scores: M_gen model {m:.4} majority {:.4} per-token {:.4}; raw {:.4} < pd {:.4} <= pd+transition {:.4}; IFR with prior {} (without {:.5})",
            ds.score_ids().len(),
            majority.m_gen,
            token.m_gen,
            raw.m_gen,
            plain.m_gen,
            no_prior.m_gen,
            full.report.ifr,
            no_prior.ifr,
        ),
    )
}

// ---------------------------------------------------------------- 9

fn determinism() -> Outcome {
    let corpus = support::corpus(9, 24);
    let ds = first_scores(&corpus.dataset, 9);
    let cfg = RunConfig {
        hidden_size: 8,
        epochs: 3,
        folds: 3,
        seed: 11,
        augment: true,
        augment_count: 4,
        ..Default::default()
    };
    let run = || {
        let r = cross_validate(&ds, &cfg, "det", Some(&[0])).unwrap();
        let ck = Checkpoint::new(cfg.clone(), 0, r.folds[0].test_scores.clone(), r.folds[0].model.clone());
        (ck.to_json(), r.report.to_json())
    };
    let (ck_a, rep_a) = run();
    let (ck_b, rep_b) = run();
    let reloaded = Checkpoint::from_json(&ck_a).unwrap().to_json();
    verdict(
        ck_a == ck_b && rep_a == rep_b && reloaded == ck_a,
        format!(
            "checkpoint {} bytes identical {}, report identical {}, reload round-trip identical {}",
            ck_a.len(),
            ck_a == ck_b,
            rep_a == rep_b,
            reloaded == ck_a
        ),
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 9] = [
        (1, "feasibility tables", feasibility_tables),
        (2, "playability guarantee", playability),
        (3, "vocabulary compression", vocabulary_compression),
        (4, "gradient check", gradient_check),
        (5, "decoder oracle", decoder_oracle),
        (6, "metric fixtures", metric_fixtures),
        (7, "augmentor contract", augmentor_contract),
        (8, "training efficacy", training_efficacy),
        (9, "determinism", determinism),
    ];
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, name, f) in criteria {
        if !wanted.is_empty() && !wanted.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            fail(format!("panicked: {msg}"))
        });
        let status = match outcome.status {
            Status::Pass => "PASS",
            Status::Fail => {
                failed += 1;
                "FAIL"
            }
            Status::Blocked => "BLOCKED",
        };
        println!(
            "criterion {n} [PRIMARY] {name}: {status} ({}; {:.1}s)",
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
