use std::process::{Command, Output};

use carpet_quant::{fixtures, words, Carpet64, SplitWord};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_carpet-quant")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn tmp(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("carpet-quant-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn closed_form_within_partition_band() {
    let closed = data_rows(&stdout(&bin(&["--fixture", "three_column", "dimension", "--r", "2", "--method", "closed"])));
    let part = data_rows(&stdout(&bin(&["--fixture", "three_column", "dimension", "--r", "2", "--method", "partition", "--lmax", "12"])));
    let s_closed: f64 = closed[0][3].parse().unwrap();
    let fit = part.iter().find(|r| r[0] == "partition").unwrap();
    let (s_part, band): (f64, f64) = (fit[3].parse().unwrap(), fit[4].parse().unwrap());
    assert_eq!(part.iter().filter(|r| r[0] == "level").count(), 12);
    assert!((s_closed - s_part).abs() <= band, "{s_closed} vs {s_part} ± {band}");
}

#[test]
fn bm_route_on_grid() {
    let bm = data_rows(&stdout(&bin(&["--fixture", "grid_4x2", "dimension", "--r", "1", "--method", "bm"])));
    let closed = data_rows(&stdout(&bin(&["--fixture", "grid_4x2", "dimension", "--r", "1", "--method", "closed"])));
    let (a, b): (f64, f64) = (bm[0][3].parse().unwrap(), closed[0][3].parse().unwrap());
    assert!((a - b).abs() < 1e-10);
}

#[test]
fn tau_at_one_is_zero() {
    let rows = data_rows(&stdout(&bin(&["--fixture", "mixed", "spectrum", "--q-grid", "1:1:1"])));
    assert_eq!(rows.len(), 1);
    let tau: f64 = rows[0][2].parse().unwrap();
    assert!(tau.abs() < 1e-12);
}

#[test]
fn spectrum_grid_is_inclusive() {
    let rows = data_rows(&stdout(&bin(&["--fixture", "grid_4x2", "spectrum", "--q-grid", "0:2:0.5"])));
    let qs: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(qs, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    let tau0: f64 = rows[0][2].parse().unwrap();
    assert!((tau0 - (1.0 + 1.5f64.ln() / 4f64.ln())).abs() < 1e-10);
}

#[test]
fn antichain_check_passes_on_fixtures() {
    for f in ["grid_4x2", "grid_3x2", "mixed", "two_strip", "sparse_pair"] {
        let out = stdout(&bin(&["--fixture", f, "antichain", "--n", "3", "--r", "2", "--check"]));
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        let flags = v["certified"].as_object().unwrap();
        assert!(!flags.is_empty() && flags.values().all(|b| b == true), "{f}: {flags:?}");
    }
    let out = stdout(&bin(&["--fixture", "sparse_pair", "--exact", "antichain", "--n", "3", "--r", "2", "--check"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["card"], 128);
}

#[test]
fn antichain_words_file_round_trips() {
    let path = tmp("words.txt");
    stdout(&bin(&["--fixture", "two_strip", "antichain", "--n", "2", "--r", "2", "--words", path.to_str().unwrap()]));
    let text = std::fs::read_to_string(&path).unwrap();
    let ws: Vec<SplitWord> = text.lines().map(|l| l.parse().unwrap()).collect();
    let spec: Carpet64 = fixtures::two_strip();
    let direct = carpet_quant::antichain::build_lambda(&spec, 2, 2.0, 1_000_000).unwrap();
    assert_eq!(ws, direct.words);
}

#[test]
fn error_json_and_exit_codes() {
    let o = bin(&["--fixture", "mixed", "validate", "--r=-1"]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["code"], "precondition");

    let o = bin(&["--fixture", "three_column", "antichain", "--n", "4", "--r", "2", "--budget", "100"]);
    assert_eq!(o.status.code(), Some(3));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["code"], "budget_exceeded");

    let o = bin(&["--fixture", "mixed", "dimension", "--r", "2", "--method", "bm"]);
    assert_eq!(o.status.code(), Some(2));

    let bad = tmp("bad.json");
    std::fs::write(&bad, r#"{"columns": [{"b": 0.5, "d": 0, "cells": [{"a": 0.7, "c": 0, "p": 1}]}]}"#).unwrap();
    let o = bin(&["--spec", bad.to_str().unwrap(), "validate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn spec_file_header_and_constants() {
    let path = tmp("grid.json");
    let text = r#"{"n0": 4, "m0": 2, "cells": [[0, 0], [1, 0], [0, 1]]}"#;
    std::fs::write(&path, text).unwrap();
    let out = stdout(&bin(&["--spec", path.to_str().unwrap(), "enumerate", "--level", "2"]));
    assert!(out.lines().any(|l| l.starts_with("# spec_sha256: ")));
    assert!(out.lines().any(|l| l.starts_with("# carpet-quant ")));
    assert!(out.lines().any(|l| l.starts_with("# T2 = ")));
    let rows = data_rows(&out);
    let mass: f64 = rows.iter().map(|r| r[6].parse::<f64>().unwrap()).sum();
    assert!((mass - 1.0).abs() < 1e-12);

    let v: serde_json::Value = serde_json::from_str(&stdout(&bin(&["--spec", path.to_str().unwrap(), "validate"]))).unwrap();
    assert_eq!(v["valid"], true);
    assert_eq!(v["maps"], 3);
    assert!(v["header"]["constants"]["t1"].is_i64());
}

#[test]
fn rendered_rectangles_match_geometry() {
    let path = tmp("squares.svg");
    stdout(&bin(&["--fixture", "mixed", "render", "--what", "squares", "--level", "2", "--out", path.to_str().unwrap()]));
    let svg = std::fs::read_to_string(&path).unwrap();
    assert!(svg.contains("version=\"1.1\"") && svg.contains("matrix(1 0 0 -1 0 1)"));
    let spec: Carpet64 = fixtures::mixed();
    let mut seen = 0;
    for line in svg.lines().filter(|l| l.starts_with("<rect x=") && l.contains("<title>")) {
        let attr = |k: &str| -> f64 {
            let s = &line[line.find(&format!(" {k}=\"")).unwrap() + k.len() + 3..];
            s[..s.find('"').unwrap()].parse().unwrap()
        };
        let title = &line[line.find("<title>").unwrap() + 7..line.find("</title>").unwrap()];
        let w: SplitWord = title.parse().unwrap();
        let rc = words::rectangle(&spec, &w);
        assert!((attr("x") - rc.x_lo).abs() < 1e-9 && (attr("y") - rc.y_lo).abs() < 1e-9);
        assert!((attr("x") + attr("width") - rc.x_hi).abs() < 1e-9 && (attr("y") + attr("height") - rc.y_hi).abs() < 1e-9);
        seen += 1;
    }
    assert_eq!(seen, words::enumerate_psi(&spec, 2, 1_000_000).unwrap().len());
}

#[test]
fn outputs_are_deterministic() {
    let args = ["--fixture", "grid_3x2", "quantize", "--r", "2", "--ngrid", "4,8,16", "--samples", "4000", "--seed", "7"];
    let a = stdout(&bin(&args));
    assert_eq!(a, stdout(&bin(&args)));
    assert!(a.lines().any(|l| l == "# seed: 7"));
    assert_eq!(data_rows(&a).len(), 3);

    let p1 = tmp("cb1.svg");
    let p2 = tmp("cb2.svg");
    for p in [&p1, &p2] {
        stdout(&bin(&["--fixture", "grid_3x2", "render", "--what", "codebook", "--n", "8", "--samples", "3000", "--out", p.to_str().unwrap()]));
    }
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
}

#[test]
fn thread_cap_does_not_change_results() {
    let args = ["--fixture", "mixed", "quantize", "--r", "2", "--ngrid", "4,8", "--samples", "3000", "--seed", "1"];
    let one = Command::new(env!("CARGO_BIN_EXE_carpet-quant")).args(args).env("CARPET_QUANT_THREADS", "1").output().unwrap();
    let two = Command::new(env!("CARGO_BIN_EXE_carpet-quant")).args(args).env("CARPET_QUANT_THREADS", "2").output().unwrap();
    assert_eq!(stdout(&one), stdout(&two));
}
