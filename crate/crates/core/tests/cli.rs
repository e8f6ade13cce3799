use std::path::Path;
use std::process::{Command, Output};

use noisemorph::eval::{gen_signal, SignalKind};
use noisemorph::io::{read_wav, write_wav, BitDepth};

fn stretch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stretch"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn input(dir: &Path) -> String {
    let x = gen_signal(SignalKind::ClickPlusHiss, 1.0, 44100, 2).unwrap();
    let p = dir.join("in.wav");
    write_wav(&x, &p, BitDepth::Pcm16).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn stretches_by_alpha_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let inp = input(dir.path());
    let out = dir.path().join("out.wav");
    let o = stretch(&[&inp, out.to_str().unwrap(), "--alpha", "4", "--mode", "nm", "--seed", "7"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let y = read_wav(&out).unwrap();
    assert_eq!(y.audio.len(), 4 * 44100);
    assert_eq!(y.bit_depth, BitDepth::Pcm16);
    let stdout = String::from_utf8(o.stdout).unwrap();
    let line = stdout.lines().find(|l| l.starts_with("RESULT:")).unwrap();
    for field in ["input_samples=44100", "alpha=4", "output_samples=176400", "mode=nm", "seed=7", "wall_s="] {
        assert!(line.contains(field), "{line}");
    }
}

#[test]
fn same_command_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let inp = input(dir.path());
    for mode in ["nm", "ni", "nd", "an"] {
        let a = dir.path().join(format!("a_{mode}.wav"));
        let b = dir.path().join(format!("b_{mode}.wav"));
        for p in [&a, &b] {
            let o = stretch(&[&inp, p.to_str().unwrap(), "--alpha", "2.5", "--mode", mode, "--seed", "3"]);
            assert!(o.status.success());
        }
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap(), "{mode}");
    }
}

#[test]
fn zero_alpha_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let inp = input(dir.path());
    let out = dir.path().join("out.wav");
    for bad in ["0", "-2", "nan", "abc"] {
        let o = stretch(&[&inp, out.to_str().unwrap(), "--alpha", bad]);
        assert_eq!(o.status.code(), Some(2), "{bad}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("--alpha"), "{bad}");
    }
    assert!(!out.exists());
}

#[test]
fn missing_and_malformed_inputs_are_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.wav");
    let missing = dir.path().join("missing.wav");
    let o = stretch(&[missing.to_str().unwrap(), out.to_str().unwrap(), "--alpha", "2"]);
    assert_eq!(o.status.code(), Some(1));
    let junk = dir.path().join("junk.wav");
    std::fs::write(&junk, b"not a wav file at all").unwrap();
    let o = stretch(&[junk.to_str().unwrap(), out.to_str().unwrap(), "--alpha", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn config_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let inp = input(dir.path());
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# stretch settings\nalpha = 3\nmode = nd\nseed = 9\n").unwrap();
    let out = dir.path().join("out.wav");
    let o = stretch(&[&inp, out.to_str().unwrap(), "--config", cfg.to_str().unwrap(), "--seed", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("alpha=3 ") && stdout.contains("mode=nd") && stdout.contains("seed=1 "), "{stdout}");

    std::fs::write(&cfg, "alpha = 2\nunknown.key = 1\n").unwrap();
    let o = stretch(&[&inp, out.to_str().unwrap(), "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn stems_and_onsets_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let inp = input(dir.path());
    let out = dir.path().join("out.wav");
    let stems = dir.path().join("stems");
    let onsets = dir.path().join("onsets.csv");
    let o = stretch(&[
        &inp,
        out.to_str().unwrap(),
        "--alpha",
        "2",
        "--stems",
        stems.to_str().unwrap(),
        "--onsets",
        onsets.to_str().unwrap(),
        "--bit-depth",
        "float32",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let y = read_wav(&out).unwrap().audio;
    let mut sum = vec![0.0; y.len()];
    for name in ["sines", "transients", "noise"] {
        let orig = read_wav(&stems.join(format!("{name}.wav"))).unwrap().audio;
        assert_eq!(orig.len(), 44100);
        let st = read_wav(&stems.join(format!("{name}_stretched.wav"))).unwrap().audio;
        assert_eq!(st.len(), y.len());
        sum.iter_mut().zip(st.samples()).for_each(|(s, v)| *s += v);
    }
    // float32 stems: the sum matches the output up to single-precision rounding
    let err = sum.iter().zip(y.samples()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-6, "{err}");

    let csv = std::fs::read_to_string(&onsets).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("input_sample,output_sample"));
    let rows: Vec<(i64, i64)> = lines
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert!(rows.len() >= 4, "{csv}");
    for (i, o) in rows {
        assert_eq!(o, 2 * i);
    }
}
