use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use tbd_core::analysis::curves::{error_curves, CurvePoint};
use tbd_core::analysis::edge_stats::{
    collect_edge_samples, convergence_criterion, estimate_edge_stats, EdgeSamples,
};
use tbd_core::analysis::metrics::{confusion, m_precision};
use tbd_core::io::{load_sequence, pgm_files, read_mask_pgm, write_mask_pgm, RawWriter};
use tbd_core::pipeline::{FrameStatus, Pipeline};
use tbd_core::space::StateSpace;
use tbd_core::synth::{generate, sigma_for_snr, Background, SceneSpec, TargetSpec};
use tbd_core::{Error, Result};

use crate::config::Config;

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

fn file_hash(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path).map_err(|e| Error::io(path, e))?))
}

/// Writes `manifest.txt`: seed, scene hash and the hash of every listed file
/// (paths relative to `out`).
fn write_manifest(out: &Path, seed: u64, scene_hash: &str, files: &[PathBuf]) -> Result<()> {
    let mut text = format!("seed = {seed}\nscene_sha256 = {scene_hash}\n");
    for f in files {
        let rel = f.strip_prefix(out).unwrap_or(f);
        let _ = writeln!(text, "{} {}", file_hash(f)?, rel.display());
    }
    write_file(&out.join("manifest.txt"), &text)
}

fn echo_config(cfg: &Config, out: &Path) -> Result<PathBuf> {
    let path = out.join("config.resolved");
    write_file(&path, &cfg.resolved())?;
    Ok(path)
}

pub fn synth(cfg: &Config) -> Result<()> {
    let spec = cfg.scene()?;
    let out = cfg.out_dir();
    let masks_dir = out.join("masks");
    create_dir(&masks_dir)?;
    let scene = generate(&spec)?;
    // The resolved config names the output directory, so it stays out of the
    // manifest; the scene hash covers its content.
    echo_config(cfg, &out)?;

    let mut files = Vec::new();
    let frames = out.join("frames.tbd");
    tbd_core::io::write_raw(&frames, &scene.sequence)?;
    files.push(frames);
    for (t, mask) in scene.masks.iter().enumerate() {
        let p = masks_dir.join(format!("mask_{t:04}.pgm"));
        write_mask_pgm(&p, spec.height, spec.width, mask)?;
        files.push(p);
    }
    let mut csv = String::from("t,target,row,col\n");
    for t in 0..spec.frames {
        for (n, tr) in scene.trajectories.iter().enumerate() {
            let (r, c) = tr.states[t];
            let _ = writeln!(csv, "{t},{n},{r},{c}");
        }
    }
    let traj = out.join("trajectories.csv");
    write_file(&traj, &csv)?;
    files.push(traj);
    write_manifest(
        &out,
        spec.seed,
        &sha256_hex(cfg.scene_text().as_bytes()),
        &files,
    )?;
    eprintln!(
        "wrote {} frames of {}x{} to {}",
        spec.frames,
        spec.height,
        spec.width,
        out.display()
    );
    Ok(())
}

pub fn detect(cfg: &Config) -> Result<()> {
    let pcfg = cfg.pipeline()?;
    let input = cfg
        .path("io.input")
        .ok_or_else(|| Error::Config("io.input is required for detect".into()))?;
    if !input.exists() {
        return Err(Error::io(
            &input,
            std::io::Error::new(std::io::ErrorKind::NotFound, "input sequence not found"),
        ));
    }
    let seq = load_sequence(&input, cfg.format()?)?;
    let (h, w) = (seq.height(), seq.width());
    let out = cfg.out_dir();
    let det_dir = out.join("detections");
    create_dir(&det_dir)?;
    let mut files = vec![echo_config(cfg, &out)?];
    let dump = cfg.get::<bool>("io.dump_fields")?;
    let mut fields = if dump {
        Some(RawWriter::create(&out.join("fields.tbd"), h, w)?)
    } else {
        None
    };

    let mut pipeline = Pipeline::new(&pcfg, h, w)?;
    let mut segments = String::from("t,segment,size,peak_value,peak_row,peak_col,delta\n");
    let mut status = String::from("t,status,positives,drift\n");
    let mut skipped = 0;
    for t in 1..seq.len() {
        let o = pipeline.step(&seq, t)?;
        let positives = o.detection.as_ref().map_or(0, |d| d.positives().count());
        let drift = o.drift.map_or(String::new(), |d| d.to_string());
        let name = match o.status {
            FrameStatus::Warmup => "warmup",
            FrameStatus::NotReady => "not-ready",
            FrameStatus::Detected => "detected",
            FrameStatus::Degenerate => "degenerate",
        };
        let _ = writeln!(status, "{t},{name},{positives},{drift}");
        match (&o.detection, o.status) {
            (Some(d), _) => {
                for (n, s) in d.segments.iter().enumerate() {
                    let _ = writeln!(
                        segments,
                        "{t},{n},{},{},{},{},{}",
                        s.size,
                        s.peak_value,
                        s.peak_state / w,
                        s.peak_state % w,
                        s.delta
                    );
                }
                let p = det_dir.join(format!("mask_{t:04}.pgm"));
                write_mask_pgm(&p, h, w, &d.positive)?;
                files.push(p);
            }
            (None, FrameStatus::Degenerate) => {
                eprintln!(
                    "frame {t}: no background states above the lower limit; raise detect.limit"
                );
            }
            _ => skipped += 1,
        }
        if let (Some(wr), Some(f)) = (&mut fields, &o.field) {
            wr.push_f64(f)?;
        }
    }
    if let Some(wr) = fields {
        wr.finish()?;
        files.push(out.join("fields.tbd"));
    }
    if skipped > 0 {
        eprintln!(
            "notice: {skipped} of {} frames skipped (warmup or fewer than k = {} edge fields)",
            seq.len() - 1,
            pcfg.engine.k
        );
    }
    if skipped == seq.len() - 1 {
        eprintln!("warning: no frame produced detections");
    }
    for (name, text) in [("segments.csv", &segments), ("frames.csv", &status)] {
        let p = out.join(name);
        write_file(&p, text)?;
        files.push(p);
    }
    write_manifest(
        &out,
        cfg.seed()?,
        &sha256_hex(cfg.resolved().as_bytes()),
        &files,
    )
}

fn curves_csv(points: &[CurvePoint]) -> String {
    let mut s = String::from("k,fp,fp_lo,fp_hi,fn,fn_lo,fn_hi,radius_mean,radius_p90,radius_p99\n");
    for p in points {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            p.k,
            p.fp_rate,
            p.fp_lo,
            p.fp_hi,
            p.fn_rate,
            p.fn_lo,
            p.fn_hi,
            p.radius.mean,
            p.radius.p90,
            p.radius.p99
        );
    }
    s
}

fn stats_samples(cfg: &Config) -> Result<(StateSpace, EdgeSamples)> {
    let curves = cfg.curves()?;
    let space = StateSpace::position(
        curves.height,
        curves.width,
        curves.v1,
        tbd_core::space::Metric::Chebyshev,
    )?;
    let scenes: u64 = cfg.get("analysis.stats_scenes")?;
    let frames: usize = cfg.get("analysis.stats_frames")?;
    let per_frame: usize = cfg.get("analysis.stats_per_frame")?;
    let mut all = EdgeSamples::default();
    for s in 0..scenes {
        let seed = curves.seed.wrapping_add(0x5EED_0000).wrapping_add(s);
        let spec = SceneSpec {
            height: curves.height,
            width: curves.width,
            frames,
            background: Background::Constant(curves.background),
            targets: vec![TargetSpec {
                size: curves.target_size,
                amplitude: curves.amplitude,
                start: None,
                motion_seed: None,
            }],
            sigma: sigma_for_snr(curves.amplitude, curves.snr),
            v1: curves.v1,
            seed,
            ..Default::default()
        };
        all.merge(collect_edge_samples(
            &generate(&spec)?,
            &space,
            &curves.edge,
            per_frame,
            seed,
        )?);
    }
    Ok((space, all))
}

pub fn analyze(cfg: &Config) -> Result<()> {
    let curves = cfg.curves()?;
    let out = cfg.out_dir();
    create_dir(&out)?;
    let mut files = vec![echo_config(cfg, &out)?];

    let (space, samples) = stats_samples(cfg)?;
    let m = space.interior_neighborhood_size();
    let stats = estimate_edge_stats(&samples, m, cfg.estimator()?, cfg.get("analysis.safety")?)?;
    let mut text = String::from("mu1,mu2,mu2_near,mu2_far,C,C_raw,M,dp_snr,n,criterion,margin\n");
    for n in cfg.list::<f64>("analysis.margin_n")? {
        let (ok, margin) = convergence_criterion(&stats, n);
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{},{},{n},{ok},{margin}",
            stats.mu1,
            stats.mu2,
            stats.mu2_near,
            stats.mu2_far,
            stats.c,
            stats.c_raw,
            stats.m,
            stats.dp_snr
        );
    }
    let p = out.join("stats.csv");
    write_file(&p, &text)?;
    files.push(p);

    let points = error_curves(&curves)?;
    let p = out.join("curves.csv");
    write_file(&p, &curves_csv(&points))?;
    files.push(p);
    write_manifest(
        &out,
        curves.seed,
        &sha256_hex(cfg.resolved().as_bytes()),
        &files,
    )
}

/// Height, width and pixels of a binary mask.
type Mask = (usize, usize, Vec<bool>);

/// Masks of a directory keyed by file name.
fn mask_dir(dir: &Path) -> Result<Vec<(String, Mask)>> {
    pgm_files(dir)?
        .into_iter()
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            Ok((name, read_mask_pgm(&p)?))
        })
        .collect()
}

pub fn eval(cfg: &Config) -> Result<()> {
    let dirs: Vec<PathBuf> = cfg
        .list::<String>("eval.detections")?
        .into_iter()
        .map(PathBuf::from)
        .collect();
    if dirs.is_empty() {
        return Err(Error::Config(
            "eval.detections needs at least one directory".into(),
        ));
    }
    let truth_dir = cfg
        .path("eval.truth")
        .ok_or_else(|| Error::Config("eval.truth is required for eval".into()))?;
    let mut methods: Vec<String> = cfg.list("eval.methods")?;
    if methods.is_empty() {
        methods = (0..dirs.len()).map(|i| format!("run{i}")).collect();
    }
    if methods.len() != dirs.len() {
        return Err(Error::Config(format!(
            "eval.methods names {} methods for {} detection directories",
            methods.len(),
            dirs.len()
        )));
    }
    let radii: Vec<f64> = cfg.list("eval.m")?;
    let truth: std::collections::BTreeMap<String, Mask> =
        mask_dir(&truth_dir)?.into_iter().collect();

    let mut csv = String::from("method,Re");
    for m in &radii {
        let _ = write!(csv, ",{m}-Pr");
    }
    csv.push('\n');
    for (method, dir) in methods.iter().zip(&dirs) {
        let detected = mask_dir(dir)?;
        let (mut det, mut tru) = (Vec::new(), Vec::new());
        let mut width = 0;
        for (name, (h, w, mask)) in detected {
            let Some((th, tw, tmask)) = truth.get(&name) else {
                return Err(Error::Domain(format!(
                    "{}: detection frame {name} has no truth mask in {}",
                    method,
                    truth_dir.display()
                )));
            };
            if (h, w) != (*th, *tw) {
                return Err(Error::Domain(format!(
                    "{method}: {name} is {h}x{w} but the truth mask is {th}x{tw}"
                )));
            }
            width = w;
            det.push(mask);
            tru.push(tmask.clone());
        }
        let re = confusion(&det, &tru)?.recall();
        let _ = write!(csv, "{method},{re}");
        for &m in &radii {
            let _ = write!(csv, ",{}", m_precision(&det, &tru, width, m)?);
        }
        csv.push('\n');
    }
    let out = cfg.out_dir();
    create_dir(&out)?;
    echo_config(cfg, &out)?;
    write_file(&out.join("metrics.csv"), &csv)
}
