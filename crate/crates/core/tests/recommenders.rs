use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use topocf::evaluation::{evaluate, random_recall_baseline};
use topocf::recommenders::{
    split_dataset, top_k, train_model, Embeddings, ModelConfig, ModelExtras, ModelKind, Split, TrainedModel,
};
use topocf::seed::rng_from_seed;
use topocf::synthetic::TwoBlock;

fn two_block_split(seed: u64) -> Split {
    let g = TwoBlock::default().generate(&mut rng_from_seed(seed));
    split_dataset(&g, &mut rng_from_seed(seed + 1)).unwrap()
}

fn quick(kind: ModelKind) -> ModelConfig {
    let mut cfg = ModelConfig::new(kind);
    cfg.max_epochs = 8;
    cfg
}

fn random_model(split: &Split, dim: usize, seed: u64) -> TrainedModel {
    let mut rng = rng_from_seed(seed);
    let mut table = |rows: usize| {
        let data = (0..rows * dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        Embeddings::from_data(rows, dim, data)
    };
    TrainedModel {
        kind: ModelKind::LightGcn,
        user_embeddings: table(split.num_users()),
        item_embeddings: table(split.num_items()),
        extras: ModelExtras::None,
        epochs_trained: 0,
        stopped_early: false,
        best_valid_recall: f64::NAN,
        loss_history: Vec::new(),
    }
}

#[test]
fn training_replays_exactly() {
    let split = two_block_split(3);
    for kind in ModelKind::ALL {
        let a = train_model(&split, &quick(kind), &mut rng_from_seed(5)).unwrap();
        let b = train_model(&split, &quick(kind), &mut rng_from_seed(5)).unwrap();
        assert_eq!(a, b, "{kind}");
        let c = train_model(&split, &quick(kind), &mut rng_from_seed(6)).unwrap();
        assert_ne!(a.user_embeddings, c.user_embeddings, "{kind} ignores its seed");
    }
}

#[test]
fn training_lowers_the_loss() {
    let split = two_block_split(4);
    for kind in ModelKind::ALL {
        let mut cfg = ModelConfig::new(kind);
        cfg.max_epochs = 30;
        cfg.patience = usize::MAX;
        let m = train_model(&split, &cfg, &mut rng_from_seed(1)).unwrap();
        let h = &m.loss_history;
        assert!(h.len() >= 10, "{kind}: {} epochs", h.len());
        assert!(h.iter().all(|l| l.is_finite()), "{kind}");
        let head = h[..3].iter().sum::<f64>() / 3.0;
        let tail = h[h.len() - 3..].iter().sum::<f64>() / 3.0;
        assert!(tail < head, "{kind}: loss {head} -> {tail}");
        assert!(m.user_embeddings.is_finite() && m.item_embeddings.is_finite());
    }
}

#[test]
fn ranking_matches_a_full_sort() {
    let split = two_block_split(5);
    let model = random_model(&split, 8, 9);
    let mut rng = rng_from_seed(10);
    for u in 0..split.num_users() {
        let mut exclude: Vec<u32> = (0..split.num_items() as u32).filter(|_| rng.random_bool(0.2)).collect();
        exclude.sort_unstable();
        let scores = model.scores(u);
        let mut all: Vec<u32> = (0..split.num_items() as u32)
            .filter(|i| exclude.binary_search(i).is_err())
            .collect();
        all.sort_by(|&a, &b| scores[b as usize].total_cmp(&scores[a as usize]).then(a.cmp(&b)));
        for k in [1, 5, 20, all.len() + 3] {
            let want: Vec<u32> = all.iter().copied().take(k).collect();
            assert_eq!(model.rank_items(u, &exclude, k), want);
        }
    }
}

#[test]
fn ties_go_to_the_lower_index() {
    assert_eq!(top_k(&[1.0, 2.0, 2.0, 0.5, 2.0], &[], 2), vec![1, 2]);
    assert_eq!(top_k(&[1.0, 2.0, 2.0, 0.5, 2.0], &[1], 3), vec![2, 4, 0]);
    assert_eq!(top_k(&[0.0; 4], &[0, 1, 2, 3], 2), Vec::<u32>::new());
}

#[test]
fn random_embeddings_score_near_the_baseline() {
    let split = two_block_split(6);
    let base = random_recall_baseline(&split, 20);
    let mean = (0..20)
        .map(|s| evaluate(&random_model(&split, 16, 100 + s), &split, 20).unwrap().recall)
        .sum::<f64>()
        / 20.0;
    assert!((mean - base).abs() < 0.25 * base, "random recall {mean} vs baseline {base}");
}

#[test]
fn an_oracle_ranking_has_full_recall() {
    let split = two_block_split(7);
    let (nu, ni) = (split.num_users(), split.num_items());
    // user u scores 1 on its test items and 0 elsewhere
    let mut user = Embeddings::zeros(nu, ni);
    for u in 0..nu {
        for &i in &split.test_by_user[u] {
            user.row_mut(u)[i as usize] = 1.0;
        }
    }
    let mut item = Embeddings::zeros(ni, ni);
    for i in 0..ni {
        item.row_mut(i)[i] = 1.0;
    }
    let mut model = random_model(&split, 1, 0);
    model.user_embeddings = user;
    model.item_embeddings = item;
    let r = evaluate(&model, &split, 20).unwrap();
    for m in &r.per_user {
        let want = split.test_by_user[m.user].len().min(20) as f64 / split.test_by_user[m.user].len() as f64;
        assert!((m.recall - want).abs() < 1e-12);
    }
    assert_eq!(r.evaluated_users(), split.evaluated_users().count());
}
