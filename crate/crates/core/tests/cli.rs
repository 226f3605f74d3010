//! End-to-end checks of the command-line interface.

use std::process::Command;

fn tcmimo() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tcmimo"))
}

#[test]
fn csv_output_is_byte_identical_for_fixed_seed() {
    let run = || -> Vec<u8> {
        let out = tcmimo()
            .args([
                "heatmap",
                "--n-list",
                "2",
                "--m-list",
                "2,3",
                "--set",
                "channel=rayleigh",
                "--set",
                "draws=2",
                "--set",
                "grid.band_points=8",
                "--seed",
                "7",
                "--no-timestamp",
            ])
            .output()
            .expect("run tcmimo");
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    let first = run();
    let second = run();
    assert_eq!(first, second, "fixed seed must reproduce byte-identical CSV");
    let text = String::from_utf8(first).unwrap();
    assert!(text.contains("# seed = 7"));
    assert!(text.contains("# override: draws = 2"));
    assert!(!text.contains("timestamp"));
}

#[test]
fn timestamp_line_appears_unless_suppressed() {
    let out = tcmimo()
        .args(["tight-coupling", "--counts", "4", "--set", "grid.band_points=8"])
        .output()
        .expect("run tcmimo");
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("# timestamp = "));
}

#[test]
fn validate_subcommand_reports_pass() {
    let out = tcmimo()
        .args(["validate", "--cases", "20"])
        .output()
        .expect("run tcmimo");
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 6);
    assert_eq!(text.lines().filter(|l| l.starts_with("FAIL")).count(), 0);
}

#[test]
fn bad_config_key_fails_with_key_listing() {
    let out = tcmimo()
        .args(["tight-coupling", "--set", "tx.cnt=4"])
        .output()
        .expect("run tcmimo");
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("unknown key"), "{err}");
    assert!(err.contains("tx.count"), "{err}");
}

#[test]
fn impedance_export_and_check_round_trip() {
    let dir = std::env::temp_dir().join(format!("tcmimo-imp-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("ztx.txt");
    let status = tcmimo()
        .args([
            "impedance",
            "--frequency",
            "2.5e9",
            "--array",
            "tx",
            "--set",
            "tx.count=3",
            "--out",
            path.to_str().unwrap(),
        ])
        .status()
        .expect("run tcmimo");
    assert!(status.success());
    let out = tcmimo()
        .args(["impedance", "--check", path.to_str().unwrap()])
        .output()
        .expect("run tcmimo");
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("OK 3x3 impedance table"), "{text}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_file_round_trips_through_metadata_echo() {
    let dir = std::env::temp_dir().join(format!("tcmimo-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let config_path = dir.join("scenario.conf");
    std::fs::write(&config_path, "tx.count = 3\nrx.count = 2\ngrid.band_points = 8\nseed = 11\n")
        .unwrap();
    let out_path = dir.join("table.csv");
    let status = tcmimo()
        .args([
            "heatmap",
            "--n-list",
            "2",
            "--m-list",
            "2",
            "--config",
            config_path.to_str().unwrap(),
            "--out",
            out_path.to_str().unwrap(),
            "--no-timestamp",
        ])
        .status()
        .expect("run tcmimo");
    assert!(status.success());
    let text = std::fs::read_to_string(&out_path).unwrap();
    // the echoed config lines are enough to re-run without the file
    let echoed: String = text
        .lines()
        .filter_map(|l| l.strip_prefix("# config: "))
        .map(|l| format!("{l}\n"))
        .collect();
    let reparsed = tcmimo::scenario::parse_scenario(&echoed).unwrap();
    assert_eq!(reparsed.seed, 11);
    assert_eq!(reparsed.tx.count, 3);
    assert_eq!(reparsed.band_points, 8);
    std::fs::remove_dir_all(&dir).ok();
}
