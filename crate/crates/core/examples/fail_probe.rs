fn main() {
    let mut cfg = servoland::ExperimentConfig::default();
    cfg.detection.pixel_noise_sigma = 0.5;
    cfg.detection.dropout_burst_rate = 0.1;
    cfg.detection.dropout_burst_len = 0.3;
    cfg.sim.truck_speed_noise_sigma = 0.2;
    cfg.lasers.noise_sigma = 0.02;
    cfg.scenario.uav_offset_range = 0.5;
    cfg.scenario.truck_start_jitter = 2.0;
    let seed: u64 = std::env::var("SEED").map(|v| v.parse().unwrap()).unwrap_or(19);
    let r = servoland::run_scenario(&cfg, seed).unwrap();
    println!("outcome {:?}", r.summary.outcome.result);
    for row in r.rows.iter().rev().take(80).collect::<Vec<_>>().into_iter().rev() {
        let gap = row.truck_x - row.uav_x;
        let h = row.truck_z - row.uav_z;
        println!(
            "t={:6.2} {:12} gap={:6.3} lat={:6.3} h={:6.3} laser0={:6.3} det={} ferr={:8.3} vz={:5.2}",
            row.t, row.phase.name(), gap, row.truck_y - row.uav_y, h, row.lasers[0],
            u8::from(row.detected), row.feature_error.unwrap_or(f64::NAN), row.actual.vz
        );
    }
}
