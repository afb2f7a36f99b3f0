#![allow(dead_code)]

use std::io::Write;
use std::path::Path;

use fraudgan::nn::{backward, forward, loss, LossKind, Matrix, Mode, NetworkSpec, NetworkState};
use fraudgan::seeded_rng;
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Header of the synthetic stand-in for the transaction file.
pub fn header() -> String {
    let mut cols = vec!["Time".to_string()];
    cols.extend((1..=28).map(|i| format!("V{i}")));
    cols.push("Amount".into());
    cols.push("Class".into());
    cols.join(",")
}

/// Two overlapping Gaussians clipped to [0, 1]: negatives centred at 0.45 and
/// positives at 0.55 on every feature, std 0.15, `positive_rate` of rows positive.
pub fn write_synthetic_csv(path: &Path, rows: usize, positive_rate: f64, seed: u64) {
    let mut rng = seeded_rng(seed);
    let noise = Normal::new(0.0, 0.15).unwrap();
    let positives = (rows as f64 * positive_rate).round() as usize;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).unwrap());
    writeln!(out, "{}", header()).unwrap();
    // positives interleaved at a fixed stride so no block ordering leaks into the split
    let stride = rows / positives.max(1);
    let mut emitted = 0;
    for r in 0..rows {
        let label = u8::from(emitted < positives && r % stride == 0);
        emitted += label as usize;
        let centre = if label == 1 { 0.55 } else { 0.45 };
        let mut fields: Vec<String> = (0..30)
            .map(|_| {
                let v: f64 = centre + noise.sample(&mut rng);
                format!("{}", v.clamp(0.0, 1.0))
            })
            .collect();
        fields.push(label.to_string());
        writeln!(out, "{}", fields.join(",")).unwrap();
    }
}

fn train_forward(
    spec: &NetworkSpec,
    state: &NetworkState,
    x: &Matrix,
    mask_seed: u64,
) -> (Matrix, fraudgan::nn::ForwardCache) {
    // a fresh generator per pass replays the same dropout mask
    let mut rng = seeded_rng(mask_seed);
    forward(spec, state, x, Mode::Train, Some(&mut rng)).unwrap()
}

/// Central-difference gradient of the mean loss with respect to every
/// parameter, in the canonical parameter order.
pub fn numeric_gradient(
    spec: &NetworkSpec,
    state: &NetworkState,
    x: &Matrix,
    targets: &Matrix,
    kind: LossKind,
    h: f64,
    mask_seed: u64,
) -> Vec<f64> {
    let eval = |s: &NetworkState| {
        let (out, _) = train_forward(spec, s, x, mask_seed);
        loss(kind, &out, targets).unwrap()
    };
    let mut probe = state.clone();
    let sizes: Vec<usize> = probe.params().iter().map(|p| p.len()).collect();
    let mut grad = Vec::new();
    for (t, &len) in sizes.iter().enumerate() {
        for i in 0..len {
            let orig = probe.params()[t][i];
            probe.params_mut()[t][i] = orig + h;
            let up = eval(&probe);
            probe.params_mut()[t][i] = orig - h;
            let down = eval(&probe);
            probe.params_mut()[t][i] = orig;
            grad.push((up - down) / (2.0 * h));
        }
    }
    grad
}

pub fn analytic_gradient(
    spec: &NetworkSpec,
    state: &NetworkState,
    x: &Matrix,
    targets: &Matrix,
    kind: LossKind,
    mask_seed: u64,
) -> Vec<f64> {
    let (_, cache) = train_forward(spec, state, x, mask_seed);
    backward(spec, state, &cache, kind, targets)
        .unwrap()
        .flatten()
}

/// Largest `|a - n| / max(|a| + |n|, floor)` over all entries.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / (a.abs() + n.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// AUC as the fraction of (positive, negative) pairs ordered correctly, ties half.
pub fn pair_counting_auc(labels: &[u8], scores: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut pairs = 0usize;
    for (i, &li) in labels.iter().enumerate() {
        if li != 1 {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj != 0 {
                continue;
            }
            pairs += 1;
            if scores[i] > scores[j] {
                num += 1.0;
            } else if scores[i] == scores[j] {
                num += 0.5;
            }
        }
    }
    num / pairs as f64
}

/// Exhaustive root split: every feature, every midpoint between distinct sorted
/// values; Gini decrease in exact rationals; ties to the lowest feature, then the
/// lowest threshold. `None` when no split exists.
pub fn brute_force_root_split(x: &[Vec<f64>], labels: &[u8]) -> Option<(usize, f64)> {
    let n = labels.len();
    let features = x.first().map_or(0, Vec::len);
    // weighted child gini * n = n - sum_children (sum_k c_k^2 / n_child);
    // maximize S = sum_children sum_k c_k^2 / n_child, compared as fractions
    let mut best: Option<(u128, u128, usize, f64)> = None;
    for f in 0..features {
        let mut values: Vec<f64> = x.iter().map(|r| r[f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let t = w[0] + (w[1] - w[0]) / 2.0;
            let mut l = [0u128; 2];
            let mut r = [0u128; 2];
            for i in 0..n {
                let side = if x[i][f] <= t { &mut l } else { &mut r };
                side[labels[i] as usize] += 1;
            }
            let (nl, nr) = (l[0] + l[1], r[0] + r[1]);
            let num = (l[0] * l[0] + l[1] * l[1]) * nr + (r[0] * r[0] + r[1] * r[1]) * nl;
            let den = nl * nr;
            let better = match best {
                None => true,
                Some((bn, bd, _, _)) => num * bd > bn * den,
            };
            if better {
                best = Some((num, den, f, t));
            }
        }
    }
    best.map(|(_, _, f, t)| (f, t))
}

pub fn random_labels(n: usize, rng: &mut impl Rng) -> Vec<u8> {
    (0..n).map(|_| u8::from(rng.random_bool(0.5))).collect()
}
