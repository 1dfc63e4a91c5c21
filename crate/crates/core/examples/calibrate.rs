//! Scratch calibration harness (not part of the deliverable surface):
//! generates a 10-class blob dataset in IDX form, partitions it at several
//! similarity levels, and prints median rounds-to-target per walker.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use walklearn::data::{load_idx, partition_by_similarity, save_partition, save_points, shuffle_split_pool};
use walklearn::engine::{run, GraphSpec, RunConfig, WalkerSpec};
use walklearn::model::LossKind;

fn env_f64(name: &str, default: f64) -> f64 {
    std::env::var(name).ok().and_then(|v| v.parse().ok()).unwrap_or(default)
}
fn env_u64(name: &str, default: u64) -> u64 {
    std::env::var(name).ok().and_then(|v| v.parse().ok()).unwrap_or(default)
}

fn write_blob_idx(dir: &Path, num_points: usize, num_classes: usize, side: usize, noise: f64, seed: u64) -> (PathBuf, PathBuf) {
    let d = side * side;
    let modes = std::env::var("MODES").ok().and_then(|v| v.parse().ok()).unwrap_or(1usize);
    let spread = env_f64("MODE_SPREAD", 0.35);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    use rand_distr::Distribution;
    let offset_dist = rand_distr::Normal::new(0.0, spread).unwrap();
    let means: Vec<Vec<Vec<f64>>> = (0..num_classes)
        .map(|_| {
            let base: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..0.8)).collect();
            (0..modes)
                .map(|_| {
                    base.iter()
                        .map(|b| (b + offset_dist.sample(&mut rng)).clamp(0.0, 1.0))
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut pixels = Vec::with_capacity(num_points * d);
    let mut labels = Vec::with_capacity(num_points);
    let normal = rand_distr::Normal::new(0.0, noise).unwrap();
    for i in 0..num_points {
        let class = i % num_classes;
        let mode = (i / num_classes) % modes;
        labels.push(class as u8);
        for j in 0..d {
            let v: f64 = means[class][mode][j] + normal.sample(&mut rng);
            pixels.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    let mut im = Vec::new();
    im.extend(0x0000_0803u32.to_be_bytes());
    im.extend((num_points as u32).to_be_bytes());
    im.extend((side as u32).to_be_bytes());
    im.extend((side as u32).to_be_bytes());
    im.extend(&pixels);
    let mut lb = Vec::new();
    lb.extend(0x0000_0801u32.to_be_bytes());
    lb.extend((num_points as u32).to_be_bytes());
    lb.extend(&labels);
    let ip = dir.join("images.idx");
    let lp = dir.join("labels.idx");
    std::fs::write(&ip, im).unwrap();
    std::fs::write(&lp, lb).unwrap();
    (ip, lp)
}

fn median(mut v: Vec<u64>) -> Option<u64> {
    if v.is_empty() { return None; }
    v.sort_unstable();
    Some(v[v.len() / 2])
}

fn main() {
    let dir = PathBuf::from("/tmp/calibrate");
    std::fs::create_dir_all(&dir).unwrap();
    let pool_size = env_u64("POOL", 8000) as usize;
    let noise = env_f64("NOISE", 0.15);
    let side = env_u64("SIDE", 6) as usize;
    let (ip, lp) = write_blob_idx(&dir, pool_size, 10, side, noise, 424242);
    let pool = load_idx::<f64>(&ip, &lp).unwrap();
    let (train, test) = shuffle_split_pool(pool, 0.2, 7).unwrap();
    println!("train {} test {} d {}", train.len(), test.len(), train[0].features.len());

    let horizon = env_u64("T", 4000);
    let gamma0 = env_f64("GAMMA0", 0.1);
    let radius = env_f64("RADIUS", 10.0);
    let subsample = env_u64("SUBSAMPLE", 1500) as usize;
    let eval_every = env_u64("EVAL_EVERY", 10);
    let base = env_u64("SEED_BASE", 1);
    let seeds: Vec<u64> = (base..base + env_u64("SEEDS", 5)).collect();
    let nodes = 100;

    let sims: Vec<u8> = std::env::var("SIMS").unwrap_or("0,10,100".into())
        .split(',').map(|s| s.parse().unwrap()).collect();
    let exp3_bound = std::env::var("EXP3_BOUND").ok().and_then(|v| v.parse().ok());
    let exp3_eta = std::env::var("EXP3_ETA").ok().and_then(|v| v.parse().ok());
    let walkers: Vec<(&str, WalkerSpec)> = vec![
        ("uniform", WalkerSpec::Uniform),
        ("exp3", WalkerSpec::Exp3 {
            exploration_const: None,
            paper_exploration: false,
            eta: exp3_eta,
            cost_bound: exp3_bound,
            neighbor_only_availability: false,
        }),
        ("weighted", WalkerSpec::Weighted),
        ("exploit", WalkerSpec::Exploit),
    ];

    let per_run_graph = std::env::var("GSEED_PER_RUN").is_ok();
    let graph_spec = |run_seed: u64| match std::env::var("GRAPH").as_deref() {
        Ok("er") => GraphSpec::ErdosRenyi {
            n: nodes,
            p: env_f64("P", 0.12),
            seed: if per_run_graph { run_seed } else { env_u64("GSEED", 99) },
        },
        _ => GraphSpec::Margulis { n: 10 },
    };

    for &sim in &sims {
        let partition = partition_by_similarity(&train, nodes, sim, 7).unwrap();
        let ppath = dir.join(format!("part_s{sim}.json"));
        let tpath = dir.join("test.json");
        save_partition(&partition, &ppath).unwrap();
        save_points(&test, partition.meta.num_classes, &tpath).unwrap();
        for (name, walker) in &walkers {
            let mut rounds = Vec::new();
            let mut finals = Vec::new();
            for &seed in &seeds {
                let cfg = RunConfig {
                    graph: graph_spec(seed),
                    partition_path: ppath.clone(),
                    test_path: Some(tpath.clone()),
                    model: LossKind::MulticlassLogistic,
                    walker: walker.clone(),
                    step_exponent: 0.75,
                    step_scale: gamma0,
                    horizon,
                    seed,
                    eval_every,
                    exact_cost_metrics: false,
                    target_accuracy: 0.45,
                    feasible_radius: radius,
                    eval_subsample: Some(subsample),
                    log_iterates: false,
                };
                let out = run::<f64>(&cfg).unwrap();
                rounds.push(out.summary.rounds_to_target);
                finals.push(out.summary.final_accuracy.unwrap());
            }
            let reached: Vec<u64> = rounds.iter().filter_map(|r| *r).collect();
            println!(
                "sim {sim:3} walker {name:8} reached {}/{} median_rounds {:?} rounds {:?} final_acc {:?}",
                reached.len(), seeds.len(), median(reached.clone()), rounds,
                finals.iter().map(|a| (a * 1000.0).round() / 1000.0).collect::<Vec<_>>()
            );
        }
    }
}
