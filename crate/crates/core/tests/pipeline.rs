use radar_eot::config::PipelineConfig;
use radar_eot::eval::{read_recording, run_frames, run_scenario, write_recording, Recording, RunOptions};
use radar_eot::flow::FlowField;
use radar_eot::pipeline::Pipeline;
use radar_eot::simulator::{generate, scenario_b, traffic, Scenario};
use radar_eot::tracker::TrackStatus;

#[test]
fn approaching_target_is_tracked() {
    let sc = scenario_b();
    let run = run_scenario(&sc, &PipelineConfig::default(), FlowField::undefined(), 3, &RunOptions::default()).unwrap();
    let rmse = run.report.tracking.pos_rmse.expect("a valid track matched the target");
    assert!(rmse < 1.0, "position rmse {rmse}");
    assert!(run.report.tracking.matched_samples > run.report.frames / 2);
    let rls = run.report.algorithms["rls"].unwrap();
    assert!(rls.mean.abs() < 0.5 && rls.samples > 50);
    assert!(!run.report.exceeds_degeneracy());
}

#[test]
fn replayed_recording_gives_the_same_report() {
    let mut sc = scenario_b();
    sc.duration = 4.0;
    let rec = Recording { label: "b".into(), seed: 11, frame_rate: sc.sensor.frame_rate, mounts: sc.mounts.clone(), frames: generate(&sc, 11).collect() };
    let mut buf = Vec::new();
    write_recording(&mut buf, &rec).unwrap();
    let back = read_recording(buf.as_slice()).unwrap();

    let cfg = PipelineConfig::default();
    let opts = RunOptions::default();
    let direct = run_scenario(&sc, &cfg, FlowField::undefined(), 11, &opts).unwrap();
    let replay = run_frames(back.frames, "b", back.mounts, &cfg, FlowField::undefined(), 11, 1.0 / back.frame_rate, &opts).unwrap();
    assert_eq!(direct.report.to_json().unwrap(), replay.report.to_json().unwrap());
}

#[test]
fn lane_flow_keeps_parallel_vehicles_apart() {
    let sc = traffic(12, 2.0);
    let flow = FlowField::constant(0.0);
    let mut pipeline = Pipeline::new(PipelineConfig::default(), sc.mounts.clone(), flow, 0).unwrap();
    let mut last = None;
    for sim in generate(&sc, 0) {
        last = Some(pipeline.process(&sim.frame).unwrap());
    }
    let out = last.unwrap();
    let valid = out.tracks.iter().filter(|t| t.status == TrackStatus::Valid).count();
    assert!(valid >= 8, "{valid} valid tracks for 12 vehicles");
}

#[test]
fn config_and_scenario_survive_toml() {
    let cfg = PipelineConfig::default();
    assert_eq!(PipelineConfig::parse(&cfg.to_toml().unwrap()).unwrap(), cfg);
    let sc = scenario_b();
    assert_eq!(Scenario::parse_toml(&sc.to_toml().unwrap()).unwrap(), sc);
}

#[test]
fn out_of_order_frames_are_rejected() {
    let sc = scenario_b();
    let frames: Vec<_> = generate(&sc, 0).take(3).collect();
    let mut pipeline = Pipeline::new(PipelineConfig::default(), sc.mounts.clone(), FlowField::undefined(), 0).unwrap();
    pipeline.process(&frames[2].frame).unwrap();
    assert!(pipeline.process(&frames[1].frame).is_err());
}
