//! The `verify`, `render` and `implode` commands. Each returns the process
//! exit status: 0 success, 1 scientific failure or inconclusive scene,
//! 2 usage or configuration error.

use std::path::Path;
use std::time::Instant;

use implab::{Error, C64};

use crate::config::RunConfig;
use crate::suite::{self, Artifact};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

pub fn write_artifacts(out: &Path, artifacts: &[Artifact]) -> std::io::Result<()> {
    std::fs::create_dir_all(out)?;
    for a in artifacts {
        std::fs::write(out.join(&a.name), &a.bytes)?;
    }
    Ok(())
}

fn write_or_usage(out: &Path, artifacts: &[Artifact]) -> Result<(), u8> {
    write_artifacts(out, artifacts).map_err(|e| {
        eprintln!("error: cannot write to {}: {e}", out.display());
        EXIT_USAGE
    })
}

/// Runs criteria 1–7 and writes one CSV per criterion plus a summary.
pub fn cmd_verify(cfg: &RunConfig, out: &Path) -> u8 {
    let mut summary = String::new();
    let mut all = true;
    let mut artifacts = Vec::new();
    let checks: [fn(&RunConfig) -> suite::Outcome; 7] = [
        suite::fatou_equation,
        suite::almost_fatou,
        suite::lavaurs_line,
        suite::lavaurs_plane,
        suite::orbit_estimates,
        suite::telescoping,
        suite::entry_exit,
    ];
    for check in checks {
        let t = Instant::now();
        let o = check(cfg);
        let line = format!("{} [{:.1} s]", o.line(), t.elapsed().as_secs_f64());
        println!("{line}");
        summary.push_str(&o.line());
        summary.push('\n');
        all &= o.passed;
        artifacts.extend(o.artifacts);
    }
    artifacts.push(Artifact { name: "verify_summary.txt".into(), bytes: summary.into_bytes() });
    if let Err(code) = write_or_usage(out, &artifacts) {
        return code;
    }
    if all {
        EXIT_OK
    } else {
        EXIT_FAILURE
    }
}

/// Renders the K-slice at `eps` (default 0) with its boundary.
pub fn cmd_render(cfg: &RunConfig, out: &Path, eps: Option<C64>) -> u8 {
    let eps = eps.unwrap_or_default();
    if !eps.is_finite() {
        eprintln!("error: eps must be finite");
        return EXIT_USAGE;
    }
    let t = Instant::now();
    let artifacts = match suite::render_artifacts(cfg, eps) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if let Err(code) = write_or_usage(out, &artifacts) {
        return code;
    }
    for a in &artifacts {
        println!("wrote {}", out.join(&a.name).display());
    }
    println!("rendered {}x{} in {:.1} s", cfg.grid.nx, cfg.grid.ny, t.elapsed().as_secs_f64());
    EXIT_OK
}

/// Runs the discontinuity scene; succeeds when a jump witness is certified
/// and both grid-scale inclusions hold.
pub fn cmd_implode(cfg: &RunConfig, out: &Path) -> u8 {
    let t = Instant::now();
    match suite::implode(cfg) {
        Ok((rep, artifacts)) => {
            if let Err(code) = write_or_usage(out, &artifacts) {
                return code;
            }
            print!("{}", rep.summary());
            let o = suite::discontinuity_outcome(&rep, Vec::new());
            println!("{} [{:.1} s]", o.line(), t.elapsed().as_secs_f64());
            if o.passed {
                EXIT_OK
            } else {
                EXIT_FAILURE
            }
        }
        Err(Error::InconclusiveScene(why)) => {
            eprintln!("inconclusive scene: {why}");
            EXIT_FAILURE
        }
        Err(e @ (Error::InvalidInput(_) | Error::SectorViolation(_) | Error::InvalidGrid(_))) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}
