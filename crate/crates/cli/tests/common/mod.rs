//! Shared fixtures for the CLI integration tests: synthetic scenes, a
//! binary runner and output parsing.
#![allow(dead_code)] // each test binary uses a different subset

use std::path::{Path, PathBuf};
use std::process::Output;

use despeckle_core::Image;
use despeckle_foe::io::{write_image, BitDepth};

/// Ramp background with flat disks and a bright bar.
pub fn scene_disks(n: usize) -> Image {
    Image::from_fn(n, n, |x, y| {
        let xf = x as f64 / n as f64;
        let yf = y as f64 / n as f64;
        let mut v = 60.0 + 120.0 * xf + 30.0 * yf;
        if ((xf - 0.3).powi(2) + (yf - 0.35).powi(2)).sqrt() < 0.18 {
            v = 210.0;
        }
        if ((xf - 0.72).powi(2) + (yf - 0.7).powi(2)).sqrt() < 0.12 {
            v = 40.0;
        }
        if xf > 0.6 && xf < 0.63 {
            v = 230.0;
        }
        v.clamp(10.0, 245.0)
    })
}

/// Piecewise-constant blocks separated by thin dark lines.
pub fn scene_blocks(n: usize) -> Image {
    Image::from_fn(n, n, |x, y| {
        let bx = x / 48;
        let by = y / 40;
        let levels = [40.0, 90.0, 140.0, 190.0, 235.0, 70.0];
        let mut v = levels[(bx * 3 + by * 5) % 6];
        if x % 48 < 2 || y % 40 < 2 {
            v = 25.0;
        }
        v
    })
}

/// Strong oriented texture on the left, homogeneous bright/dark on the right.
pub fn scene_texture(n: usize) -> Image {
    Image::from_fn(n, n, |x, y| {
        let xf = x as f64 / n as f64;
        let yf = y as f64 / n as f64;
        let v = if xf < 0.5 {
            if yf < 0.5 {
                130.0 + 45.0 * (0.55 * x as f64 + 0.2 * y as f64).sin()
            } else {
                130.0
                    + 45.0
                        * (0.35 * (x as f64 - 0.8 * y as f64)).sin()
                        * (0.25 * (y as f64 + 0.3 * x as f64)).cos()
            }
        } else if yf < 0.45 {
            225.0
        } else if yf < 0.55 {
            130.0
        } else {
            55.0
        };
        v.clamp(10.0, 245.0)
    })
}

/// Fresh per-test scratch directory under the target dir.
pub fn scratch_dir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    if dir.exists() {
        std::fs::remove_dir_all(&dir).unwrap();
    }
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

pub fn write_png(path: &Path, image: &Image) {
    write_image(path, image, BitDepth::Eight).unwrap();
}

/// Runs the despeckle-foe binary with the given arguments.
pub fn run_cli(args: &[&str]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_despeckle-foe"))
        .args(args)
        .output()
        .expect("failed to launch despeckle-foe")
}

pub fn stdout_str(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr_str(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Extracts the last `PSNR/SSIM` pair printed on stdout.
pub fn parse_quality(out: &Output) -> (f64, f64) {
    let text = stdout_str(out);
    let token = text
        .split_whitespace()
        .rev()
        .find(|t| t.contains('/'))
        .unwrap_or_else(|| panic!("no PSNR/SSIM token in output: {text}"));
    let (p, s) = token.split_once('/').unwrap();
    (
        p.parse().unwrap_or(f64::INFINITY),
        s.parse().expect("ssim parse"),
    )
}

/// Asserts a successful exit and returns the output.
#[track_caller]
pub fn run_ok(args: &[&str]) -> Output {
    let out = run_cli(args);
    assert!(
        out.status.success(),
        "command {:?} failed with {:?}\nstderr: {}",
        args,
        out.status.code(),
        stderr_str(&out)
    );
    out
}
