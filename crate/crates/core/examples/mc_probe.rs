fn main() {
    let mut cfg = servoland::ExperimentConfig::default();
    cfg.scenario.n_runs = std::env::var("RUNS").map(|v| v.parse().unwrap()).unwrap_or(50);
    cfg.detection.pixel_noise_sigma = 0.5;
    cfg.detection.dropout_burst_rate = std::env::var("BRATE").map(|v| v.parse().unwrap()).unwrap_or(0.1);
    cfg.detection.dropout_burst_len = std::env::var("BLEN").map(|v| v.parse().unwrap()).unwrap_or(0.3);
    cfg.sim.truck_speed_noise_sigma = 0.2;
    cfg.lasers.noise_sigma = 0.02;
    cfg.scenario.uav_offset_range = 0.5;
    cfg.scenario.truck_start_jitter = 2.0;
    let t0 = std::time::Instant::now();
    let report = servoland::run_monte_carlo(&cfg).unwrap();
    let a = &report.aggregate;
    println!(
        "n={} landed={} missed={} lost={} timeout={} landing_rate={:.3} approach_rate={:.3} d2t mean={:?} [{:?},{:?}] elapsed={:.1}s",
        a.n_runs, a.landed, a.missed_deck, a.lost_target, a.timed_out,
        a.landing_rate, a.approach_rate,
        a.detection_to_touchdown_mean, a.detection_to_touchdown_min, a.detection_to_touchdown_max,
        t0.elapsed().as_secs_f64()
    );
    for r in &report.records {
        if r.summary.outcome.result != servoland::MissionResult::Landed {
            println!(
                "  run {} seed {}: {:?} final={:?} min_dist={:.2} end={:.1}",
                r.summary.run_index, r.summary.seed, r.summary.outcome.result,
                r.summary.final_phase, r.summary.min_deck_distance, r.summary.end_time
            );
        }
    }
}
