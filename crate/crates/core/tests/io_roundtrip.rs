//! File formats survive a write/read cycle.

use emvqm::io::config::Config;
use emvqm::io::fixtures::{make_fixture, FixtureKind, FixtureParams};
use emvqm::io::manifest::{Manifest, ManifestEntry};
use emvqm::io::video::{ingest, write_png_sequence, write_y4m, VideoFormat};
use emvqm::motion::{FileFlow, FlowField, Stream};
use emvqm::Error;

fn small() -> FixtureParams {
    FixtureParams {
        width: 48,
        height: 40,
        frames: 16,
        ..FixtureParams::default()
    }
}

#[test]
fn y4m_and_png_agree() {
    let dir = tempfile::tempdir().unwrap();
    let v = make_fixture(FixtureKind::LocalWarp, &small(), 3).unwrap().synthesized;
    let y4m = dir.path().join("v.y4m");
    let png = dir.path().join("frames");
    write_y4m(&y4m, &v).unwrap();
    write_png_sequence(&png, &v).unwrap();
    let a = ingest(&y4m, None).unwrap();
    let b = ingest(&png, None).unwrap();
    assert_eq!(VideoFormat::detect(&png), VideoFormat::PngSequence);
    assert_eq!((a.width, a.height, a.frame_count()), (48, 40, 16));
    assert_eq!(a.luma_planes(), v.luma_planes());
    assert_eq!(b.luma_planes(), v.luma_planes());
    assert!(matches!(ingest(&dir.path().join("none.y4m"), None), Err(Error::MissingPath(_))));
}

#[test]
fn manifest_keeps_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    let v = make_fixture(FixtureKind::Identical, &small(), 1).unwrap().reference;
    let sub = dir.path().join("videos");
    std::fs::create_dir(&sub).unwrap();
    write_y4m(&sub.join("a.y4m"), &v).unwrap();
    let m = Manifest {
        entries: vec![
            ManifestEntry {
                video_id: "a".into(),
                ref_path: sub.join("a.y4m"),
                syn_path: sub.join("a.y4m"),
                group: "g1".into(),
                dmos: 2.5,
                dmos_stderr: Some(0.2),
            },
            ManifestEntry {
                video_id: "b".into(),
                ref_path: sub.join("a.y4m"),
                syn_path: sub.join("a.y4m"),
                group: "g2".into(),
                dmos: -1.0,
                dmos_stderr: None,
            },
        ],
    };
    let path = dir.path().join("m.csv");
    m.save(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("videos/a.y4m") && !text.contains(dir.path().to_str().unwrap()), "{text}");
    let back = Manifest::load(&path).unwrap();
    assert_eq!(back, m);
    assert_eq!(back.stderrs(), None);
}

#[test]
fn flow_files_resample_to_level() {
    let dir = tempfile::tempdir().unwrap();
    let f = FlowField::constant(64, 48, 4.0, -2.0);
    let p = FileFlow::path_for(dir.path(), "vid", Stream::Synthesized, 3);
    std::fs::create_dir_all(p.parent().unwrap()).unwrap();
    f.save(&p).unwrap();
    assert!(p.ends_with("vid/syn/000003.flo"));
    let back = FlowField::load(&p).unwrap();
    assert_eq!(back.u.data(), f.u.data());
    let half = back.resized(32, 24);
    assert!((half.u.get(10, 10) - 2.0).abs() < 1e-6 && (half.v.get(10, 10) + 1.0).abs() < 1e-6);
}

#[test]
fn config_render_parses_back() {
    let mut c = Config::default();
    c.set("trajectory_length", "12").unwrap();
    c.set("svr_c", "4").unwrap();
    c.set("t_test", "pooled").unwrap();
    let back = Config::parse(&c.render()).unwrap();
    assert_eq!(back, c);
    assert_ne!(back.extract.digest(), Config::default().extract.digest());
    let mut d = Config::default();
    d.set("svr_c", "4").unwrap();
    // Training settings do not touch the extraction digest.
    assert_eq!(d.extract.digest(), Config::default().extract.digest());
    assert!(matches!(Config::parse("scales = 9"), Err(Error::Config { line: 1, .. })));
    assert!(matches!(Config::parse("\n\nbogus = 1"), Err(Error::Config { line: 3, .. })));
}
