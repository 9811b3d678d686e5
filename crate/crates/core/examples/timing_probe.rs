// quick probe binary
fn main() {
    let mut cfg = servoland::ExperimentConfig::default();
    if let Ok(l) = std::env::var("LAMBDA") { cfg.servo.lambda = l.parse().unwrap(); }
    if let Ok(k) = std::env::var("KGIMBAL") { cfg.servo.gimbal_gain = k.parse().unwrap(); }
    if let Ok(p) = std::env::var("SEARCH_PITCH") { cfg.mission.search_gimbal_pitch = p.parse::<f64>().unwrap().to_radians(); }
    let r = servoland::run_scenario(&cfg, 1).unwrap();
    let s = &r.summary;
    println!(
        "seed 1: outcome={:?} trigger={:?} first_det={:?} end={:.2} d2t={:?} offset={:?} min_dist={:.3}",
        s.outcome.result, s.trigger_time, s.first_detection_time, s.end_time,
        s.outcome.detection_to_touchdown, s.outcome.touchdown_offset, s.min_deck_distance
    );
    for row in &r.rows {
        let gap = row.truck_x - row.uav_x;
        let h = row.truck_z - row.uav_z;
        if row.event.is_some() || (row.t * 30.0).round() as i64 % 15 == 0 {
            println!(
                "t={:6.2} phase={:12} event={:22} gap={:7.3} h_above={:6.3} act=({:5.2},{:5.2},{:5.2}) det={} ferr={:7.3} gp={:6.3}",
                row.t, format!("{:?}", row.phase), row.event.clone().unwrap_or_default(),
                gap, h, row.actual.vx, row.actual.vy, row.actual.vz,
                u8::from(row.detected), row.feature_error.unwrap_or(f64::NAN), row.gimbal_pitch
            );
        }
    }
}
