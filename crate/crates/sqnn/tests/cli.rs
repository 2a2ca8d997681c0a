use std::path::Path;
use std::process::{Command, Output};

fn sqnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqnn"))
        .args(args)
        .env_remove("SQNN_DATA_DIR")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn idx(magic: u32, dims: &[u32], payload: &[u8]) -> Vec<u8> {
    let mut v: Vec<u8> = std::iter::once(magic)
        .chain(dims.iter().copied())
        .flat_map(u32::to_be_bytes)
        .collect();
    v.extend_from_slice(payload);
    v
}

/// Tiny 28x28 digit files: "3"s are bright on the left half, "6"s on the
/// right, with a few 1s mixed in that the filter must drop.
fn write_digits(dir: &Path, prefix: &str, count: usize) {
    let mut pixels = Vec::new();
    let mut labels = Vec::new();
    for i in 0..count {
        let label = [3u8, 6, 1][i % 3];
        for _r in 0..28 {
            for c in 0..28 {
                let bright = match label {
                    3 => c < 14,
                    6 => c >= 14,
                    _ => true,
                };
                let noise = ((i * 7 + c * 13) % 40) as u8;
                pixels.push(if bright { 200 + noise } else { noise });
            }
        }
        labels.push(label);
    }
    std::fs::write(
        dir.join(format!("{prefix}-images-idx3-ubyte")),
        idx(0x803, &[count as u32, 28, 28], &pixels),
    )
    .unwrap();
    std::fs::write(
        dir.join(format!("{prefix}-labels-idx1-ubyte")),
        idx(0x801, &[count as u32], &labels),
    )
    .unwrap();
}

fn dataset() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    write_digits(dir.path(), "train", 60);
    write_digits(dir.path(), "t10k", 30);
    dir
}

fn train(data: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "train",
        "--preset",
        "4qb_3blk",
        "--no-timing",
        "--data-dir",
        data.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    if !extra.contains(&"--epochs") {
        args.extend(["--epochs", "3"]);
    }
    sqnn(&args)
}

#[test]
fn lists_presets() {
    let out = sqnn(&["presets"]);
    assert_eq!(code(&out), 0);
    let names: Vec<String> = stdout(&out).lines().map(str::to_string).collect();
    assert_eq!(names.len(), 10);
    assert!(names.contains(&"16qb_uneven_sqnn".to_string()));
}

#[test]
fn trains_then_evaluates_the_best_checkpoint() {
    let data = dataset();
    let runs = tempfile::tempdir().unwrap();
    let out_dir = runs.path().join("run");
    let out = train(data.path(), &out_dir, &[]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = std::fs::read_to_string(out_dir.join("metrics.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "epoch,mean_train_loss,val_accuracy,seconds");
    assert_eq!(lines.len(), 4);
    assert!(lines[1..].iter().all(|l| l.ends_with(",0.000")));

    let best: f64 = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap())
        .fold(f64::MIN, f64::max);
    let eval = sqnn(&[
        "eval",
        "--checkpoint",
        out_dir.join("best.json").to_str().unwrap(),
        "--data-dir",
        data.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&eval), 0, "{}", stderr(&eval));
    assert!(
        stdout(&eval).starts_with(&format!("accuracy {best:.4} (")),
        "{}",
        stdout(&eval)
    );
    assert!(stdout(&eval).contains("/20 samples"), "{}", stdout(&eval));
}

#[test]
fn metrics_do_not_depend_on_threads_or_interruption() {
    let data = dataset();
    let runs = tempfile::tempdir().unwrap();
    let one = runs.path().join("one");
    let two = runs.path().join("two");
    assert_eq!(code(&train(data.path(), &one, &["--threads", "1"])), 0);
    assert_eq!(code(&train(data.path(), &two, &["--threads", "2"])), 0);
    let a = std::fs::read(one.join("metrics.csv")).unwrap();
    assert_eq!(a, std::fs::read(two.join("metrics.csv")).unwrap());

    let part = runs.path().join("part");
    assert_eq!(code(&train(data.path(), &part, &["--epochs", "1"])), 0);
    let resumed = runs.path().join("resumed");
    let out = sqnn(&[
        "train",
        "--resume",
        part.join("last.json").to_str().unwrap(),
        "--epochs",
        "3",
        "--data-dir",
        data.path().to_str().unwrap(),
        "--out-dir",
        resumed.to_str().unwrap(),
        "--no-timing",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(a, std::fs::read(resumed.join("metrics.csv")).unwrap());
}

#[test]
fn data_problems_exit_3() {
    let runs = tempfile::tempdir().unwrap();
    let out = train(&runs.path().join("nowhere"), &runs.path().join("r"), &[]);
    assert_eq!(code(&out), 3);

    let data = dataset();
    let images = data.path().join("train-images-idx3-ubyte");
    let bytes = std::fs::read(&images).unwrap();
    std::fs::write(&images, &bytes[..1000]).unwrap();
    let out = train(data.path(), &runs.path().join("r"), &[]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("byte 1000"), "{}", stderr(&out));
}

#[test]
fn tampered_checkpoint_exits_4() {
    let data = dataset();
    let runs = tempfile::tempdir().unwrap();
    let out_dir = runs.path().join("run");
    assert_eq!(code(&train(data.path(), &out_dir, &["--epochs", "1"])), 0);
    let path = out_dir.join("last.json");
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replacen("\"epochs_done\": 1", "\"epochs_done\": 0", 1)).unwrap();
    let out = sqnn(&[
        "eval",
        "--checkpoint",
        path.to_str().unwrap(),
        "--data-dir",
        data.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 4);
    assert!(stderr(&out).contains("hash mismatch"), "{}", stderr(&out));
    let out = sqnn(&["train", "--resume", path.to_str().unwrap()]);
    assert_eq!(code(&out), 4);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(
        &config,
        "name = \"x\"\n[model]\nkind = \"qnn\"\nimage = [2, 2]\ncircuit = { blocks = 1, axes = [\"Y\"], readout = \"PlusState\" }\n[training]\nbatch_size = 0\n",
    )
    .unwrap();
    let out = sqnn(&["train", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("`training`"), "{}", stderr(&out));

    assert_eq!(code(&sqnn(&["train", "--preset", "nope"])), 2);
    assert_eq!(code(&sqnn(&["train"])), 2);
    assert_eq!(code(&sqnn(&["gradcheck", "--trials", "0"])), 2);
    assert_eq!(code(&sqnn(&["train", "--preset", "4qb_3blk", "--threads", "0"])), 2);
}

#[test]
fn gradcheck_reports_and_fails_on_impossible_tolerance() {
    let out = sqnn(&["gradcheck", "--trials", "2"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("2 trials"), "{}", stdout(&out));
    let out = sqnn(&["gradcheck", "--trials", "1", "--tolerance", "1e-15"]);
    assert_eq!(code(&out), 5);
    assert!(stderr(&out).contains("exceeds tolerance"), "{}", stderr(&out));
}

#[test]
fn partition_preview() {
    let out = sqnn(&["partition-preview", "--preset", "16qb_sqnn"]);
    assert_eq!(stdout(&out), "0011\n0011\n2233\n2233\n");
    let out = sqnn(&[
        "partition-preview",
        "--image",
        "4x4",
        "--capacities",
        "8,4,4",
        "--strategy",
        "uneven",
    ]);
    assert_eq!(stdout(&out), "0000\n0000\n1122\n1122\n");
    let out = sqnn(&["partition-preview", "--image", "4x4", "--capacities", "5,5,5,5"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("cannot tile"), "{}", stderr(&out));
}
