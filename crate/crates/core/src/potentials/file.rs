use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{metric_matrix, Grid, PotentialSpec, Profile};
use crate::error::{Error, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PotentialFile {
    kind: String,
    dimension: usize,
    #[serde(rename = "range_R0")]
    range_r0: Option<f64>,
    #[serde(default)]
    params: toml::Table,
}

/// Reads a potential description from a TOML file. Relative grid paths are
/// resolved against the file's directory.
pub fn load_potential(path: &Path) -> Result<PotentialSpec> {
    let text = std::fs::read_to_string(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_potential(&text, &base)
}

pub fn parse_potential(text: &str, base_dir: &Path) -> Result<PotentialSpec> {
    let file: PotentialFile =
        toml::from_str(text).map_err(|e| Error::InvalidInput(format!("potential file: {e}")))?;
    let d = file.dimension;
    let spec = match file.kind.as_str() {
        "radial-euclidean" => PotentialSpec::radial(profile(&file.params, base_dir)?, d)?,
        "radial-metric" => {
            if d % 2 != 0 {
                return Err(Error::InvalidInput(
                    "radial-metric needs an even dimension".into(),
                ));
            }
            PotentialSpec::radial_in_metric(
                profile(&file.params, base_dir)?,
                metric_matrix().with_factor_dim(d / 2),
            )?
        }
        "pair-product" => {
            if d != 6 {
                return Err(Error::InvalidInput(
                    "pair-product potentials live on ℝ⁶".into(),
                ));
            }
            PotentialSpec::pair_product(profile(&file.params, base_dir)?)?
        }
        "tabulated" => {
            let grid = Grid::read(&grid_path(&file.params, base_dir)?)?;
            if grid.dim() != d {
                return Err(Error::InvalidInput(format!(
                    "grid has dimension {}, file declares {d}",
                    grid.dim()
                )));
            }
            PotentialSpec::tabulated(grid)?
        }
        "annulus-indicator" => {
            let mut p = file.params.clone();
            p.insert("profile".into(), "annulus".into());
            PotentialSpec::radial(decode_profile(p)?, d)?
        }
        "gaussian-truncated" => {
            let mut p = file.params.clone();
            p.insert("profile".into(), "gaussian".into());
            PotentialSpec::radial(decode_profile(p)?, d)?
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown potential kind `{other}`"
            )))
        }
    };
    match file.range_r0 {
        Some(r) if r < spec.range_r0 * (1.0 - 1e-12) => Err(Error::InvalidInput(format!(
            "declared range_R0 = {r} is smaller than the computed support radius {}",
            spec.range_r0
        ))),
        Some(r) => Ok(PotentialSpec {
            range_r0: r,
            ..spec
        }),
        None => Ok(spec),
    }
}

fn grid_path(params: &toml::Table, base: &Path) -> Result<PathBuf> {
    let p = params
        .get("grid_file")
        .and_then(|v| v.as_str())
        .ok_or_else(|| Error::InvalidInput("`params.grid_file` is required".into()))?;
    let p = PathBuf::from(p);
    Ok(if p.is_absolute() { p } else { base.join(p) })
}

fn profile(params: &toml::Table, base: &Path) -> Result<Profile> {
    if params.get("profile").and_then(|v| v.as_str()) == Some("tabulated")
        && params.contains_key("grid_file")
    {
        let grid = Grid::read(&grid_path(params, base)?)?;
        if grid.dim() != 1 || grid.origin[0] != 0.0 {
            return Err(Error::InvalidInput(
                "radial tables need a 1D grid starting at r = 0".into(),
            ));
        }
        let p = Profile::Tabulated {
            dr: grid.spacing[0],
            values: grid.data,
        };
        p.validate()?;
        return Ok(p);
    }
    decode_profile(params.clone())
}

fn decode_profile(params: toml::Table) -> Result<Profile> {
    let p: Profile = toml::Value::Table(params)
        .try_into()
        .map_err(|e| Error::InvalidInput(format!("profile parameters: {e}")))?;
    p.validate()?;
    Ok(p)
}
