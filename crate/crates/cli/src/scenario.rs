//! TOML scenario files.

use std::path::Path;

use infreg::fixtures;
use infreg::geom::Polyhedron;
use infreg::lgsolve::LgParams;
use infreg::perturb::Bump;
use infreg::regmod::RadiusMode;
use infreg::{InfinityWindow, SetValuedMap};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: Option<String>,
    pub map: MapSpec,
    pub ybar: Vec<f64>,
    #[serde(default)]
    pub window: WindowSpec,
    #[serde(default)]
    pub query: Option<Query>,
    #[serde(default)]
    pub perturb: PerturbSection,
    #[serde(default)]
    pub radius: RadiusSection,
    #[serde(default)]
    pub solve: Option<SolveSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MapSpec {
    /// One of the built-in maps, see [`build_fixture`].
    Fixture {
        name: String,
        #[serde(default)]
        params: Vec<f64>,
    },
    /// Explicit pieces; each row is `[a₁, …, a_{n+m}, b]` for `a·(x, y) ≤ b`
    /// (or `=` in `eq`).
    Pieces { n: usize, m: usize, pieces: Vec<PieceSpec> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceSpec {
    #[serde(default)]
    pub le: Vec<Vec<f64>>,
    #[serde(default)]
    pub eq: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub radius: f64,
    pub output_radius: f64,
    pub residual_cap: f64,
}

impl Default for WindowSpec {
    fn default() -> Self {
        let w = InfinityWindow::default();
        Self { radius: w.radius, output_radius: w.output_radius, residual_cap: w.residual_cap }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Query {
    #[serde(default)]
    pub x: Option<Vec<f64>>,
    #[serde(default)]
    pub y: Option<Vec<f64>>,
    #[serde(default)]
    pub ystar: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbSection {
    pub bumps: usize,
}

impl Default for PerturbSection {
    fn default() -> Self {
        Self { bumps: 8 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiusSection {
    pub mode: RadiusMode,
}

impl Default for RadiusSection {
    fn default() -> Self {
        Self { mode: RadiusMode::Plain }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    pub kappa: f64,
    pub lambda: f64,
    pub epsilon: f64,
    #[serde(default = "default_iters")]
    pub max_iters: usize,
    /// Random starts drawn from the box `center ± spread`.
    pub starts: usize,
    pub center: Vec<f64>,
    pub spread: Vec<f64>,
    /// Targets are drawn from `ȳ ± target_spread`.
    pub target_spread: f64,
    /// The perturbation; `f ≡ 0` when absent.
    #[serde(default)]
    pub bump: Option<BumpSpec>,
}

fn default_iters() -> usize {
    500
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub rgplus: f64,
    pub center: Vec<f64>,
    pub xstar: Vec<f64>,
    pub ystar: Vec<f64>,
    pub radius: f64,
}

impl BumpSpec {
    pub fn to_bump(&self, partner: Vec<f64>) -> Bump {
        let xn = self.xstar.iter().map(|v| v * v).sum::<f64>().sqrt();
        Bump {
            k: 1,
            center: self.center.clone(),
            partner,
            xstar: self.xstar.clone(),
            ystar: self.ystar.clone(),
            direction: self.ystar.clone(),
            radius: self.radius,
            scale: 0.5 * self.rgplus / xn,
            exponent: 2.0,
        }
    }
}

impl SolveSection {
    pub fn params(&self) -> LgParams {
        LgParams { kappa: self.kappa, lambda: self.lambda, epsilon: self.epsilon, max_iters: self.max_iters }
    }
}

/// Parse or validation failure with the offending location.
#[derive(Debug)]
pub struct ParseError(pub String);

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn load(path: &Path) -> Result<Scenario, ParseError> {
    let text = std::fs::read_to_string(path).map_err(|e| ParseError(format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|e| ParseError(format!("{}: {}", path.display(), e.0)))
}

pub fn parse(text: &str) -> Result<Scenario, ParseError> {
    let s: Scenario = toml::from_str(text).map_err(|e| ParseError(e.to_string()))?;
    s.check()?;
    Ok(s)
}

impl Scenario {
    fn check(&self) -> Result<(), ParseError> {
        let (n, m) = self.dims()?;
        let bad = |field: &str, msg: String| Err(ParseError(format!("field `{field}`: {msg}")));
        if self.ybar.len() != m {
            return bad("ybar", format!("expected {m} entries, got {}", self.ybar.len()));
        }
        if let MapSpec::Pieces { pieces, .. } = &self.map {
            if pieces.is_empty() {
                return bad("map.pieces", "at least one piece is required".into());
            }
            for (i, p) in pieces.iter().enumerate() {
                for (kind, rows) in [("le", &p.le), ("eq", &p.eq)] {
                    for (j, r) in rows.iter().enumerate() {
                        if r.len() != n + m + 1 {
                            return bad(
                                &format!("map.pieces[{i}].{kind}[{j}]"),
                                format!("expected {} entries, got {}", n + m + 1, r.len()),
                            );
                        }
                    }
                }
            }
        }
        if let Err(e) = self.infinity_window() {
            return bad("window", e.to_string());
        }
        if let Some(q) = &self.query {
            for (field, v, len) in [("query.x", &q.x, n), ("query.y", &q.y, m), ("query.ystar", &q.ystar, m)] {
                if let Some(v) = v {
                    if v.len() != len {
                        return bad(field, format!("expected {len} entries, got {}", v.len()));
                    }
                }
            }
        }
        if let Some(s) = &self.solve {
            if s.center.len() != n || s.spread.len() != n {
                return bad("solve.center", format!("center and spread need {n} entries"));
            }
            if let Some(b) = &s.bump {
                if b.center.len() != n || b.xstar.len() != n || b.ystar.len() != m {
                    return bad("solve.bump", format!("center and xstar need {n} entries, ystar {m}"));
                }
            }
        }
        Ok(())
    }

    fn dims(&self) -> Result<(usize, usize), ParseError> {
        match &self.map {
            MapSpec::Pieces { n, m, .. } => Ok((*n, *m)),
            MapSpec::Fixture { .. } => {
                let f = self.build_map()?;
                Ok((f.n(), f.m()))
            }
        }
    }

    pub fn infinity_window(&self) -> infreg::Result<InfinityWindow> {
        InfinityWindow::new(self.window.radius, self.window.output_radius, self.window.residual_cap)
    }

    pub fn build_map(&self) -> Result<SetValuedMap, ParseError> {
        match &self.map {
            MapSpec::Fixture { name, params } => build_fixture(name, params),
            MapSpec::Pieces { n, m, pieces } => {
                let mut polys = Vec::with_capacity(pieces.len());
                for (i, p) in pieces.iter().enumerate() {
                    let mut b = Polyhedron::builder(n + m);
                    for r in &p.le {
                        b = b.le(r[..n + m].to_vec(), r[n + m]);
                    }
                    for r in &p.eq {
                        b = b.eq(r[..n + m].to_vec(), r[n + m]);
                    }
                    polys.push(b.build().map_err(|e| ParseError(format!("field `map.pieces[{i}]`: {e}")))?);
                }
                SetValuedMap::from_pieces(*n, *m, polys).map_err(|e| ParseError(format!("field `map`: {e}")))
            }
        }
    }
}

fn build_fixture(name: &str, params: &[f64]) -> Result<SetValuedMap, ParseError> {
    let want = |k: usize| {
        if params.len() == k {
            Ok(())
        } else {
            Err(ParseError(format!("field `map.params`: fixture `{name}` takes {k} parameters, got {}", params.len())))
        }
    };
    match name {
        "identity" => want(0).map(|_| fixtures::identity_1d()),
        "horizontal-ray" => want(0).map(|_| fixtures::horizontal_ray()),
        "projection" => want(1).map(|_| fixtures::coordinate_projection(params[0])),
        "piecewise-three" => want(0).map(|_| fixtures::piecewise_three()),
        "diagonal" => want(2).map(|_| fixtures::diagonal_scaling(params[0], params[1])),
        "inverse-chain" => want(0).map(|_| fixtures::inverse_like_chain()),
        _ => Err(ParseError(format!(
            "field `map.name`: unknown fixture `{name}` (identity, horizontal-ray, projection, piecewise-three, diagonal, inverse-chain)"
        ))),
    }
}
