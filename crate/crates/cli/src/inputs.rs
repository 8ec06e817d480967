//! Parsing of instance and prior arguments.

use std::fs;
use std::path::Path;

use mrlab_core::bounds::prior_grid;
use mrlab_core::env_model::{build_contextual_bandit, build_finite_mab, load_instance};
use mrlab_core::generator::two_state_example;
use mrlab_core::{MdpClass, Prior};

use crate::status::{input_error, CliResult};

pub const BUILTINS: &[&str] = &["det2x2-T<n>", "bernoulli2-T<n>", "contextual2-T<n>", "two-state"];

/// A loaded instance and the label used for it in output rows.
pub struct Named {
    pub name: String,
    pub instance: MdpClass,
}

pub fn load_instances(text: Option<&str>) -> CliResult<Vec<Named>> {
    let text = text.ok_or_else(|| input_error("--instance is required for this command"))?;
    if let Some(name) = text.strip_prefix("builtin:") {
        return Ok(vec![Named {
            name: text.to_string(),
            instance: builtin(name)?,
        }]);
    }
    if let Some(rest) = text.strip_prefix("mab:") {
        return Ok(vec![Named {
            name: text.to_string(),
            instance: mab_text(rest)?,
        }]);
    }
    let path = Path::new(text);
    if path.is_dir() {
        let mut files: Vec<_> = fs::read_dir(path)
            .map_err(|e| input_error(format!("{text}: {e}")))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension().is_some_and(|x| x == "json")
                    && p.file_stem().is_some_and(|s| s != "manifest")
            })
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(input_error(format!("{text}: no instance files")));
        }
        return files.iter().map(|p| load_file(p)).collect();
    }
    Ok(vec![load_file(path)?])
}

fn load_file(path: &Path) -> CliResult<Named> {
    let instance = load_instance(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    Ok(Named { name, instance })
}

fn horizon_suffix(name: &str, prefix: &str) -> Option<CliResult<usize>> {
    let t = name.strip_prefix(prefix)?;
    Some(
        t.parse::<usize>()
            .ok()
            .filter(|&t| t > 0)
            .ok_or_else(|| input_error(format!("bad horizon in builtin `{name}`"))),
    )
}

pub fn builtin(name: &str) -> CliResult<MdpClass> {
    let core = |r: mrlab_core::Result<MdpClass>| r.map_err(|e| input_error(e.to_string()));
    if let Some(t) = horizon_suffix(name, "det2x2-T") {
        return core(build_finite_mab(&[vec![1.0, 0.0], vec![0.0, 1.0]], t?));
    }
    if let Some(t) = horizon_suffix(name, "bernoulli2-T") {
        return core(build_finite_mab(&[vec![0.7, 0.3], vec![0.3, 0.7]], t?));
    }
    if let Some(t) = horizon_suffix(name, "contextual2-T") {
        let means = [
            vec![vec![0.9, 0.2], vec![0.1, 0.8]],
            vec![vec![0.3, 0.6], vec![0.7, 0.2]],
        ];
        return core(build_contextual_bandit(&[0.4, 0.6], &means, t?));
    }
    if name == "two-state" {
        return Ok(two_state_example());
    }
    Err(input_error(format!(
        "unknown builtin `{name}` (known: {})",
        BUILTINS.join(", ")
    )))
}

/// `T:m00,m01/m10,m11`: Bernoulli arm means per parameter.
fn mab_text(rest: &str) -> CliResult<MdpClass> {
    let (t, means) = rest
        .split_once(':')
        .ok_or_else(|| input_error("mab instance is `mab:T:MEANS`"))?;
    let horizon: usize = t.parse().map_err(|_| input_error(format!("bad horizon `{t}`")))?;
    let means = means
        .split('/')
        .map(parse_floats)
        .collect::<CliResult<Vec<_>>>()?;
    build_finite_mab(&means, horizon).map_err(|e| input_error(e.to_string()))
}

fn parse_floats(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| input_error(format!("bad number `{x}`")))
        })
        .collect()
}

pub fn parse_priors(text: &str, n_params: usize) -> CliResult<Vec<Prior>> {
    let bad = |msg: String| input_error(format!("prior `{text}`: {msg}"));
    if text == "uniform" {
        return Ok(vec![Prior::uniform(n_params)]);
    }
    if let Some(i) = text.strip_prefix("point:") {
        let i: usize = i.parse().map_err(|_| bad("index is not an integer".into()))?;
        if i >= n_params {
            return Err(bad(format!("index {i} with {n_params} parameters")));
        }
        return Ok(vec![Prior::point(n_params, i)]);
    }
    if let Some(res) = text.strip_prefix("grid:") {
        let res: usize = res.parse().map_err(|_| bad("resolution is not an integer".into()))?;
        if res == 0 {
            return Err(bad("resolution must be positive".into()));
        }
        return Ok(prior_grid(n_params, res));
    }
    let w = parse_floats(text)?;
    if w.len() != n_params {
        return Err(bad(format!("{} weights for {n_params} parameters", w.len())));
    }
    Prior::new(w).map(|p| vec![p]).map_err(|e| bad(e.to_string()))
}

pub fn parse_range(name: &str, s: &str) -> CliResult<(usize, usize)> {
    let bad = || input_error(format!("--{name} `{s}` is not `LO-HI` or a positive integer"));
    let (lo, hi) = match s.split_once('-') {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
        None => {
            let v = s.trim().parse().map_err(|_| bad())?;
            (v, v)
        }
    };
    if lo == 0 || lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn priors() {
        assert_eq!(parse_priors("uniform", 4).unwrap()[0].weights(), &[0.25; 4]);
        assert_eq!(parse_priors("point:1", 2).unwrap()[0].weights(), &[0.0, 1.0]);
        assert_eq!(parse_priors("0.2,0.8", 2).unwrap()[0].weights(), &[0.2, 0.8]);
        assert_eq!(parse_priors("grid:4", 2).unwrap().len(), 5);
        assert!(parse_priors("0.2,0.7", 2).is_err());
        assert!(parse_priors("point:2", 2).is_err());
        assert!(parse_priors("0.5,0.5", 3).is_err());
    }

    #[test]
    fn builtins_and_mab_texts() {
        assert_eq!(builtin("det2x2-T2").unwrap().horizon, 2);
        assert_eq!(builtin("two-state").unwrap().n_states, 2);
        assert!(builtin("contextual2-T1").unwrap().is_contextual());
        assert!(builtin("det2x2-T0").is_err());
        assert!(builtin("nope").is_err());
        let m = mab_text("3:0.1,0.9/0.9,0.1").unwrap();
        assert_eq!((m.n_params, m.n_actions, m.horizon), (2, 2, 3));
        assert!(mab_text("3:0.1,x").is_err());
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("states", "1-2").unwrap(), (1, 2));
        assert_eq!(parse_range("states", "3").unwrap(), (3, 3));
        assert!(parse_range("states", "2-1").is_err());
        assert!(parse_range("states", "0").is_err());
    }
}
