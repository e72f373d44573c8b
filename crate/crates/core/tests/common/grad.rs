//! Finite-difference harnesses for the tape primitives, the full model
//! and the REINFORCE estimator.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use refresh_core::corpus::PAD_ID;
use refresh_core::nn::{
    finite_difference_check, GradBuffer, GradCheck, NnError, ParamId, ParameterStore, Tape, Tensor, Var,
};
use refresh_core::oracle::{Extract, ScoredExtract};
use refresh_core::train::{ce_loss_and_grads, reinforce_loss_and_grads};
use refresh_core::{ModelConfig, PaddedDocView, RefreshModel, Reward};

pub type Build = fn(&mut Tape<'_>, &[ParamId]) -> Result<Var, NnError>;

/// (name, parameter shapes, graph builder) for every primitive.
pub fn primitive_cases() -> Vec<(&'static str, Vec<Vec<usize>>, Build)> {
    vec![
        ("embed", vec![vec![6, 3]], |t, p| t.embed(p[0], &[2, 5, 2, 1])),
        ("matvec", vec![vec![4, 3], vec![3]], |t, p| {
            let (w, x) = (t.param(p[0]), t.param(p[1]));
            t.matvec(w, x)
        }),
        ("add", vec![vec![5], vec![5]], |t, p| {
            let (a, b) = (t.param(p[0]), t.param(p[1]));
            t.add(a, b)
        }),
        ("mul", vec![vec![5], vec![5]], |t, p| {
            let (a, b) = (t.param(p[0]), t.param(p[1]));
            t.mul(a, b)
        }),
        ("scale_by", vec![vec![5], vec![1]], |t, p| {
            let (a, s) = (t.param(p[0]), t.param(p[1]));
            t.scale_by(a, s)
        }),
        ("scale", vec![vec![5]], |t, p| {
            let a = t.param(p[0]);
            Ok(t.scale(a, -1.7))
        }),
        ("sigmoid", vec![vec![6]], |t, p| {
            let a = t.param(p[0]);
            Ok(t.sigmoid(a))
        }),
        ("tanh", vec![vec![6]], |t, p| {
            let a = t.param(p[0]);
            Ok(t.tanh(a))
        }),
        ("concat", vec![vec![2], vec![3]], |t, p| {
            let (a, b) = (t.param(p[0]), t.param(p[1]));
            Ok(t.concat(&[a, b, a]))
        }),
        ("slice", vec![vec![7]], |t, p| {
            let a = t.param(p[0]);
            t.slice(a, 2, 3)
        }),
        ("conv1d", vec![vec![6, 4], vec![3, 2, 4], vec![3]], |t, p| {
            let (x, f, b) = (t.param(p[0]), t.param(p[1]), t.param(p[2]));
            t.conv1d(x, f, b)
        }),
        ("conv1d+maxpool", vec![vec![7, 3], vec![4, 3, 3], vec![4]], |t, p| {
            let (x, f, b) = (t.param(p[0]), t.param(p[1]), t.param(p[2]));
            let map = t.conv1d(x, f, b)?;
            t.maxpool_time(map)
        }),
        ("softmax", vec![vec![5]], |t, p| {
            let a = t.param(p[0]);
            Ok(t.softmax(a))
        }),
        ("log_softmax", vec![vec![5]], |t, p| {
            let a = t.param(p[0]);
            Ok(t.log_softmax(a))
        }),
        ("pick+sum", vec![vec![4], vec![3]], |t, p| {
            let (a, b) = (t.param(p[0]), t.param(p[1]));
            let parts = [t.pick(a, 1)?, t.pick(b, 2)?, t.pick(a, 3)?];
            t.sum(&parts)
        }),
        ("dense+softmax+ce", vec![vec![2, 5], vec![2], vec![5]], |t, p| {
            let (w, b, x) = (t.param(p[0]), t.param(p[1]), t.param(p[2]));
            let z = t.matvec(w, x)?;
            let z = t.add(z, b)?;
            let lp = t.log_softmax(z);
            let picked = t.pick(lp, 1)?;
            Ok(t.scale(picked, -1.0))
        }),
    ]
}

fn seeded_store(shapes: &[Vec<usize>], rng: &mut StdRng) -> (ParameterStore, Vec<ParamId>) {
    let mut store = ParameterStore::new();
    let ids = shapes
        .iter()
        .enumerate()
        .map(|(i, s)| store.add_uniform(format!("p{i}"), s.clone(), 1.0, rng).unwrap())
        .collect();
    (store, ids)
}

/// Loss `sum_k c_k * out_k` for fixed random weights `c`: the analytic
/// gradient comes from seeding backward with `c`.
fn weighted_output(store: &ParameterStore, ids: &[ParamId], build: Build, c: &[f64]) -> Result<f64, NnError> {
    let mut tape = Tape::new(store);
    let out = build(&mut tape, ids)?;
    Ok(tape.value(out).data().iter().zip(c).map(|(a, b)| a * b).sum())
}

/// Max relative error of one primitive; `corrupt` flips the analytic
/// gradient's sign first.
pub fn check_primitive(build: Build, shapes: &[Vec<usize>], seed: u64, corrupt: bool) -> f64 {
    let mut rng = StdRng::seed_from_u64(seed);
    let (mut store, ids) = seeded_store(shapes, &mut rng);
    let mut grads = GradBuffer::for_store(&store);
    let c: Vec<f64> = {
        let mut tape = Tape::new(&store);
        let out = build(&mut tape, &ids).unwrap();
        let len = tape.value(out).len();
        let c: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let shape = tape.value(out).shape().to_vec();
        tape.backward_with(out, &Tensor::new(shape, c.clone()).unwrap(), &mut grads)
            .unwrap();
        c
    };
    if corrupt {
        for &id in &ids {
            for g in grads.slot(id).data_mut() {
                *g = -*g;
            }
        }
    }
    let report = finite_difference_check(
        &mut store,
        &grads,
        |s| weighted_output(s, &ids, build, &c),
        &GradCheck::default(),
    )
    .unwrap();
    report.max_rel_error
}

pub fn tiny_model(seed: u64) -> RefreshModel {
    RefreshModel::new(ModelConfig { seed, ..ModelConfig::tiny() }, None).unwrap()
}

/// A random document view of at most 5 sentences of at most 10 tokens.
pub fn random_view(config: &ModelConfig, rng: &mut StdRng, n: usize) -> PaddedDocView {
    let mut ids = vec![PAD_ID; config.max_doc_len * config.max_sent_len];
    let mut lengths = Vec::new();
    for row in 0..n.min(config.max_doc_len) {
        let len = rng.gen_range(1..=config.max_sent_len);
        for col in 0..len {
            ids[row * config.max_sent_len + col] = rng.gen_range(1..config.vocab_size as u32);
        }
        lengths.push(len);
    }
    PaddedDocView {
        max_doc_len: config.max_doc_len,
        max_sent_len: config.max_sent_len,
        ids,
        lengths,
    }
}

fn random_labels(rng: &mut StdRng, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.gen_range(0..2)).collect()
}

/// End-to-end finite-difference check of the label cross-entropy through
/// the whole network, padding row excluded.
pub fn check_end_to_end(seed: u64, samples_per_param: Option<usize>) -> f64 {
    let mut rng = StdRng::seed_from_u64(1000 + seed);
    let mut model = tiny_model(seed);
    let dim = model.config().embedding_dim;
    // the zero unknown row would tie with padding windows under max-pooling
    let table = model.embedding_id();
    for v in &mut model.params_mut().get_mut(table).value.data_mut()[dim..2 * dim] {
        *v = rng.gen_range(-0.1..0.1);
    }
    let n = rng.gen_range(1..=5);
    let view = random_view(model.config(), &mut rng, n);
    let labels = random_labels(&mut rng, n);
    let mut grads = GradBuffer::for_store(model.params());
    ce_loss_and_grads(&model, &view, &labels, &mut grads).unwrap();
    let check = GradCheck {
        samples_per_param,
        seed,
        exclude: vec![(model.embedding_id(), 0..dim)],
        ..GradCheck::default()
    };
    let probe = model.clone();
    let report = finite_difference_check(
        model.params_mut(),
        &grads,
        |store| {
            let mut g = GradBuffer::for_store(store);
            let m = RefreshModel::from_parts(probe.config().clone(), store.clone()).unwrap();
            Ok(ce_loss_and_grads(&m, &view, &labels, &mut g).unwrap())
        },
        &check,
    )
    .unwrap();
    report.max_rel_error
}

fn flat(store: &ParameterStore, grads: &GradBuffer) -> Vec<f64> {
    store
        .iter()
        .flat_map(|(id, p)| (0..p.value.len()).map(move |i| (id, i)))
        .map(|(id, i)| grads.at(id, i))
        .collect()
}

/// Largest |reinforce gradient - r * CE gradient| over a few random
/// documents and extracts.
pub fn reinforce_vs_ce(seed: u64) -> f64 {
    let mut rng = StdRng::seed_from_u64(2000 + seed);
    let model = tiny_model(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..4 {
        let n = rng.gen_range(1..=5);
        let view = random_view(model.config(), &mut rng, n);
        let mut indices: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
        if indices.is_empty() {
            indices.push(rng.gen_range(0..n));
        }
        let extract = Extract::new(indices, n).unwrap();
        let r: f64 = rng.gen_range(0.0..1.0);
        let sampled = ScoredExtract { extract: extract.clone(), reward: Reward::default() };

        let mut rl = GradBuffer::for_store(model.params());
        let loss = reinforce_loss_and_grads(&model, &view, &sampled, r, &mut rl).unwrap();
        let mut ce = GradBuffer::for_store(model.params());
        let ce_loss = ce_loss_and_grads(&model, &view, &extract.labels(n), &mut ce).unwrap();
        worst = worst.max((loss - r * ce_loss).abs());
        for (a, b) in flat(model.params(), &rl).iter().zip(flat(model.params(), &ce)) {
            worst = worst.max((a - r * b).abs());
        }
    }
    worst
}

/// Norm of `sum_y P(y) * c * grad log P(y)` over all 2^n label sequences,
/// where `P(y) = prod_i p_i(y_i)` is the model's label distribution.
pub fn constant_reward_expectation(seed: u64, n: usize, c: f64) -> f64 {
    let mut rng = StdRng::seed_from_u64(3000 + seed);
    let config = ModelConfig { max_doc_len: n, seed, ..ModelConfig::tiny() };
    let model = RefreshModel::new(config, None).unwrap();
    let view = random_view(model.config(), &mut rng, n);
    let p = model.extract_scores(&view).unwrap().0;
    let mut total = vec![0.0; flat(model.params(), &GradBuffer::for_store(model.params())).len()];
    for mask in 0u32..(1 << n) {
        let labels: Vec<u8> = (0..n).map(|i| ((mask >> i) & 1) as u8).collect();
        let prob: f64 = labels
            .iter()
            .zip(&p)
            .map(|(&y, &pi)| if y == 1 { pi } else { 1.0 - pi })
            .product();
        let mut g = GradBuffer::for_store(model.params());
        ce_loss_and_grads(&model, &view, &labels, &mut g).unwrap();
        // CE gradients are -grad log P(y)
        for (t, v) in total.iter_mut().zip(flat(model.params(), &g)) {
            *t -= prob * c * v;
        }
    }
    total.iter().map(|v| v * v).sum::<f64>().sqrt()
}
