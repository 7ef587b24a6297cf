use std::time::Instant;

use archzoo::{scale_database, Objective};
use bench_cli::config::experiment_preset;
use bench_cli::experiment::ensure_dataset;
use trainer::Method;

fn rss_mb() -> f64 {
    let status = std::fs::read_to_string("/proc/self/status").unwrap();
    let line = status.lines().find(|l| l.starts_with("VmRSS:")).unwrap();
    let kb: f64 = line.split_whitespace().nth(1).unwrap().parse().unwrap();
    kb / 1024.0
}

#[test]
#[ignore]
fn probe_objective_memory() {
    let out = tempfile::tempdir().unwrap();
    for (preset, n_seqs) in [("v1-rnn-xipsi", 10usize), ("p2-rnn-sigma", 10)] {
        let cfg = experiment_preset(preset).unwrap();
        let (db, scaling, _) = ensure_dataset(out.path(), cfg.material, &cfg.data).unwrap();
        let mut db = db;
        db.sequences.truncate(n_seqs);
        let seqs = scale_database(&db, &scaling);
        let before = rss_mb();
        let obj = match preset {
            "v1-rnn-xipsi" => Objective::rnn_xipsi(&cfg.arch, &seqs).unwrap(),
            _ => Objective::rnn_sigma(&cfg.arch, &seqs).unwrap(),
        };
        let after = rss_mb();
        println!(
            "{preset}: {n_seqs} seqs -> {:.0} MB ({:.1} MB/seq)",
            after - before,
            (after - before) / n_seqs as f64
        );
        drop(obj);
    }

    let cfg = experiment_preset("v2-fnn-psiphixi").unwrap();
    let (db, scaling, _) = ensure_dataset(out.path(), cfg.material, &cfg.data).unwrap();
    let seqs = scale_database(&db, &scaling);
    let before = rss_mb();
    let obj = Objective::fnn_psiphixi(&cfg.arch, &seqs).unwrap();
    println!("v2-fnn-psiphixi: spline objective -> {:.0} MB", rss_mb() - before);
    drop(obj);
}

#[test]
#[ignore]
fn probe_rnn_xipsi_iteration_cost() {
    let out = tempfile::tempdir().unwrap();
    let mut cfg = experiment_preset("v1-rnn-xipsi").unwrap();
    cfg.optim.max_iters = 10;
    cfg.optim.method = Method::AdaptiveFirstOrder;
    cfg.optim.grad_check_samples = 0;
    cfg.optim.target = None;
    let start = Instant::now();
    let arts = bench_cli::experiment::train_experiment(&cfg, out.path()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    println!(
        "v1-rnn-xipsi: {} iters in {secs:.1}s -> {:.3}s/iter, loss {:.3e}",
        arts.model.iterations,
        secs / arts.model.iterations.max(1) as f64,
        arts.report().final_loss
    );
}
