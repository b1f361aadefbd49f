//! Fine reference flows for the fluid cases.
//!
//! File layout (text, UTF-8):
//!
//! ```text
//! amr-reference 1
//! case FC1
//! level 3
//! mu 0.001
//! speed 0.3
//! picard_tol 1e-8
//! solver_tol 1e-10
//! coarser_difference 0.0012
//! mesh
//! <MSH 2 block, $MeshFormat .. $EndElements>
//! fields <n_nodes>
//! <u> <v> <p>      one line per node
//! ```
//!
//! `coarser_difference` is the relative L2 velocity difference between the
//! stored solution and the one a level below; it bounds the bias of the
//! error metric. Floats are written in shortest round-trip form, so a
//! rebuild with the same inputs is byte-identical.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use amr_core::driver::Problem;
use amr_core::fluid::l2_velocity_error;
use amr_core::mesh::{parse_msh, refine, write_msh, Mesh};
use amr_core::{Error, Result, SolutionField};
use serde::Serialize;

use crate::cases::{CaseId, FlowSettings, FluidCase};

const MAGIC: &str = "amr-reference";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceMeta {
    pub case: CaseId,
    pub level: usize,
    pub settings: FlowSettings,
    pub picard_tol: f64,
    pub solver_tol: f64,
    pub coarser_difference: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct FlowReference {
    pub meta: ReferenceMeta,
    pub mesh: Mesh,
    pub velocity: Vec<[f64; 2]>,
    pub pressure: Vec<f64>,
}

/// Default file name inside a reference directory.
pub fn file_name(case: CaseId, level: usize) -> String {
    format!("{}-L{level}.ref", case.name().to_ascii_lowercase())
}

/// Solves on `level` uniform refinements of the case's reference base mesh,
/// seeding each level with the previous one.
pub fn build(case: CaseId, level: usize, settings: FlowSettings) -> Result<FlowReference> {
    let problem = FluidCase::new(case, settings)?;
    let mut mesh = case.reference_base_mesh()?;
    let mut solution: SolutionField = problem.solve(&mesh, None)?;
    let mut previous: Option<(Mesh, Vec<[f64; 2]>)> = None;
    for _ in 0..level {
        let all: Vec<usize> = (0..mesh.n_elements()).collect();
        let r = refine(&mesh, &all)?;
        let guess = SolutionField {
            vector: r.prolongate(&solution.vector, |a, b| {
                [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
            }),
            pressure: solution
                .pressure
                .as_ref()
                .map(|p| r.prolongate(p, |a, b| 0.5 * (a + b))),
        };
        previous = Some((mesh, solution.vector));
        mesh = r.mesh;
        solution = problem.solve(&mesh, Some(&guess))?;
    }
    let coarser_difference = match &previous {
        Some((m, u)) => Some(l2_velocity_error(m, u, &mesh, &solution.vector)?),
        None => None,
    };
    let pressure = solution
        .pressure
        .unwrap_or_else(|| vec![0.0; mesh.n_nodes()]);
    Ok(FlowReference {
        meta: ReferenceMeta {
            case,
            level,
            settings,
            picard_tol: problem.solver.picard_tol,
            solver_tol: problem.solver.solver.tol,
            coarser_difference,
        },
        mesh,
        velocity: solution.vector,
        pressure,
    })
}

impl FlowReference {
    pub fn to_text(&self) -> String {
        let m = &self.meta;
        let mut s = format!("{MAGIC} {VERSION}\n");
        let _ = writeln!(s, "case {}", m.case);
        let _ = writeln!(s, "level {}", m.level);
        let _ = writeln!(s, "mu {:?}", m.settings.mu);
        let _ = writeln!(s, "speed {:?}", m.settings.speed);
        let _ = writeln!(s, "picard_tol {:?}", m.picard_tol);
        let _ = writeln!(s, "solver_tol {:?}", m.solver_tol);
        match m.coarser_difference {
            Some(d) => {
                let _ = writeln!(s, "coarser_difference {d:?}");
            }
            None => s.push_str("coarser_difference none\n"),
        }
        s.push_str("mesh\n");
        s.push_str(&write_msh(&self.mesh));
        let _ = writeln!(s, "fields {}", self.velocity.len());
        for (u, p) in self.velocity.iter().zip(&self.pressure) {
            let _ = writeln!(s, "{:?} {:?} {:?}", u[0], u[1], p);
        }
        s
    }

    pub fn parse(text: &str, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let err = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let lines: Vec<&str> = text.lines().collect();
        let header = lines.first().copied().unwrap_or("");
        if header != format!("{MAGIC} {VERSION}") {
            return Err(err(
                1,
                format!("expected header \"{MAGIC} {VERSION}\", found {header:?}"),
            ));
        }
        let mut i = 1;
        let mut field = |key: &str| -> Result<&str> {
            let l = lines.get(i).copied().unwrap_or("");
            i += 1;
            l.strip_prefix(key)
                .and_then(|v| v.strip_prefix(' '))
                .ok_or_else(|| err(i, format!("expected {key:?}, found {l:?}")))
        };
        let num = |v: &str, line: usize| {
            v.parse::<f64>()
                .map_err(|_| err(line, format!("bad number {v:?}")))
        };
        let case: CaseId = field("case")?.parse()?;
        let level = field("level")?
            .parse::<usize>()
            .map_err(|_| err(3, "bad level".into()))?;
        let mu = num(field("mu")?, 4)?;
        let speed = num(field("speed")?, 5)?;
        let picard_tol = num(field("picard_tol")?, 6)?;
        let solver_tol = num(field("solver_tol")?, 7)?;
        let coarser_difference = match field("coarser_difference")? {
            "none" => None,
            v => Some(num(v, 8)?),
        };
        if lines.get(8) != Some(&"mesh") {
            return Err(err(9, "expected \"mesh\"".into()));
        }
        let end = lines
            .iter()
            .position(|l| *l == "$EndElements")
            .ok_or_else(|| err(lines.len(), "mesh block has no $EndElements".into()))?;
        let mesh = parse_msh(&lines[9..=end].join("\n"), path)?;
        let count = lines
            .get(end + 1)
            .and_then(|l| l.strip_prefix("fields "))
            .and_then(|v| v.parse::<usize>().ok())
            .ok_or_else(|| err(end + 2, "expected \"fields <count>\"".into()))?;
        if count != mesh.n_nodes() {
            return Err(err(
                end + 2,
                format!("{count} field rows for {} nodes", mesh.n_nodes()),
            ));
        }
        let mut velocity = Vec::with_capacity(count);
        let mut pressure = Vec::with_capacity(count);
        for k in 0..count {
            let line = end + 3 + k;
            let l = lines
                .get(line - 1)
                .ok_or_else(|| err(line, "missing field row".into()))?;
            let v: Vec<f64> = l
                .split_whitespace()
                .map(|t| num(t, line))
                .collect::<Result<_>>()?;
            if v.len() != 3 {
                return Err(err(line, format!("expected 3 values, found {}", v.len())));
            }
            velocity.push([v[0], v[1]]);
            pressure.push(v[2]);
        }
        let mesh = match case {
            CaseId::Fc1 => mesh.with_curves(vec![crate::meshgen::cylinder_curve()]),
            _ => mesh,
        };
        Ok(Self {
            meta: ReferenceMeta {
                case,
                level,
                settings: FlowSettings { mu, speed },
                picard_tol,
                solver_tol,
                coarser_difference,
            },
            mesh,
            velocity,
            pressure,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }
}

/// Loads the reference for `case` from `dir`, or explains how to build it.
pub fn load_for(
    case: CaseId,
    level: usize,
    dir: &Path,
    settings: FlowSettings,
) -> Result<FlowReference> {
    let path: PathBuf = dir.join(file_name(case, level));
    if !path.exists() {
        return Err(Error::Input(format!(
            "no reference solution at {}; build it with `amr-bench build-reference --case {case} --level {level} --out {}`",
            path.display(),
            dir.display()
        )));
    }
    let r = FlowReference::load(&path)?;
    if r.meta.case != case || r.meta.level != level {
        return Err(Error::Input(format!(
            "{} holds {} level {}",
            path.display(),
            r.meta.case,
            r.meta.level
        )));
    }
    if r.meta.settings != settings {
        return Err(Error::Input(format!(
            "{} was built with mu = {}, speed = {}; this run uses mu = {}, speed = {}",
            path.display(),
            r.meta.settings.mu,
            r.meta.settings.speed,
            settings.mu,
            settings.speed
        )));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip_is_exact() {
        let settings = FlowSettings::default_for(CaseId::Fc0);
        let r = build(CaseId::Fc0, 0, settings).unwrap();
        let text = r.to_text();
        let back = FlowReference::parse(&text, "x.ref").unwrap();
        assert_eq!(back.meta, r.meta);
        assert_eq!(back.velocity, r.velocity);
        assert_eq!(back.pressure, r.pressure);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn wrong_header_is_rejected() {
        let e = FlowReference::parse("amr-reference 0\n", "x.ref").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn missing_file_names_the_command() {
        let dir = tempfile::tempdir().unwrap();
        let e = load_for(
            CaseId::Fc1,
            2,
            dir.path(),
            FlowSettings::default_for(CaseId::Fc1),
        )
        .unwrap_err();
        assert!(e
            .to_string()
            .contains("build-reference --case FC1 --level 2"));
    }
}
