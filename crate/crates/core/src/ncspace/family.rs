//! Families of matrix fields and their `L_p(l_inf)` maximal norms.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::norms::{field_lp_norm, lambda_min};
use super::sdp::{solve_scaled, trace_power, SolverOptions, Workspace};
use crate::error::{Error, Result};
use crate::io::{read_mfld, FieldJson};
use crate::lattice::{GridSpec, MatrixField};
use crate::linalg::{max_eigenvalue, min_eigenvalue, singular_values, CMat, C64};

pub const FAMILY_JSON_SCHEMA: &str = "ncsms.family/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Positive,
    Selfadjoint,
    General,
}

/// An ordered family `{x_t}` of fields on one grid.
#[derive(Clone, Debug)]
pub struct MaximalFamily {
    kind: FamilyKind,
    ts: Vec<f64>,
    members: Vec<MatrixField>,
}

impl MaximalFamily {
    pub fn new(kind: FamilyKind, members: Vec<(f64, MatrixField)>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidArgument("empty family".into()));
        }
        let grid = *members[0].1.grid();
        let d = members[0].1.matrix_dim();
        for w in members.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidArgument(
                    "family t values must be strictly increasing".into(),
                ));
            }
        }
        for (t, f) in &members {
            if *f.grid() != grid || f.matrix_dim() != d {
                return Err(Error::ShapeMismatch(format!("member t={t} has a different grid or d")));
            }
        }
        if kind != FamilyKind::General {
            for (t, f) in &members {
                let tol = 1e-12 * f.max_abs().max(1.0);
                let defect = f.hermitian_defect();
                if defect > tol {
                    return Err(Error::InfeasibleFamily(format!(
                        "member t={t} is not Hermitian (defect {defect:e})"
                    )));
                }
            }
        }
        if kind == FamilyKind::Positive {
            for (t, f) in &members {
                let worst = (0..f.num_sites())
                    .into_par_iter()
                    .map(|s| lambda_min(&CMat::from_slice(d, f.site_slice(s))))
                    .reduce(|| f64::INFINITY, f64::min);
                if worst < -1e-10 {
                    return Err(Error::InfeasibleFamily(format!(
                        "member t={t} has eigenvalue {worst:e} < 0"
                    )));
                }
            }
        }
        let (ts, members) = members.into_iter().unzip();
        Ok(Self { kind, ts, members })
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn grid(&self) -> &GridSpec {
        self.members[0].grid()
    }

    pub fn matrix_dim(&self) -> usize {
        self.members[0].matrix_dim()
    }

    pub fn ts(&self) -> &[f64] {
        &self.ts
    }

    pub fn members(&self) -> &[MatrixField] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Members with indices in `range`, keeping the kind.
    pub fn subfamily(&self, indices: &[usize]) -> Result<Self> {
        Self::new(
            self.kind,
            indices.iter().map(|&i| (self.ts[i], self.members[i].clone())).collect(),
        )
    }

    /// Every member multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            kind: self.kind,
            ts: self.ts.clone(),
            members: self.members.iter().map(|m| m.scale(c)).collect(),
        }
    }
}

/// Dominating field `a` with its slacks.
#[derive(Clone, Debug)]
pub struct Dominator {
    pub a: MatrixField,
    /// Member-major: `slack[k * sites + x]` is the smallest eigenvalue of
    /// `a(x) - x_k(x)` (positive) or of `a(x) -+ x_k(x)` (self-adjoint).
    pub slack: Vec<f64>,
    pub norm: f64,
}

impl Dominator {
    pub fn min_slack(&self) -> f64 {
        self.slack.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.min_slack() >= -tol
    }
}

#[derive(Clone, Debug)]
pub struct MaximalNorm {
    pub value: f64,
    pub dominator: Dominator,
}

fn validate_p(p: f64) -> Result<()> {
    if p >= 1.0 || p == f64::INFINITY {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("p = {p} outside [1, inf]")))
    }
}

fn compute_slack(fam: &MaximalFamily, a: &MatrixField, two_sided: bool) -> Vec<f64> {
    let d = fam.matrix_dim();
    let sites = a.num_sites();
    fam.members
        .iter()
        .flat_map(|x| {
            (0..sites)
                .into_par_iter()
                .map(|s| {
                    let am = CMat::from_slice(d, a.site_slice(s));
                    let xm = CMat::from_slice(d, x.site_slice(s)).hermitian_part();
                    let upper = lambda_min(&(&am - &xm));
                    if two_sided {
                        upper.min(lambda_min(&(&am + &xm)))
                    } else {
                        upper
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

fn solve_family(fam: &MaximalFamily, p: f64, two_sided: bool, opts: &SolverOptions) -> Result<MaximalNorm> {
    validate_p(p)?;
    let d = fam.matrix_dim();
    let grid = *fam.grid();
    let sites = grid.num_sites();
    let a_values: Vec<C64> = if p.is_infinite() {
        (0..sites)
            .into_par_iter()
            .flat_map_iter(|s| {
                let lam = fam
                    .members
                    .iter()
                    .map(|x| {
                        let m = CMat::from_slice(d, x.site_slice(s));
                        if two_sided {
                            singular_values(&m.hermitian_part())[0]
                        } else {
                            max_eigenvalue(&m).max(0.0)
                        }
                    })
                    .fold(0.0, f64::max);
                CMat::scalar(d, lam).as_slice().to_vec()
            })
            .collect()
    } else {
        let per_site: Vec<Result<CMat>> = (0..sites)
            .into_par_iter()
            .map_init(
                || Workspace::new(d),
                |ws, s| {
                    let factor = if two_sided { 2 } else { 1 };
                    let mut flat = Vec::with_capacity((1 + factor * fam.len()) * d * d);
                    flat.extend(std::iter::repeat_n(C64::new(0.0, 0.0), d * d));
                    for x in &fam.members {
                        let m = CMat::from_slice(d, x.site_slice(s)).hermitian_part();
                        flat.extend_from_slice(m.as_slice());
                        if two_sided {
                            flat.extend(m.as_slice().iter().map(|z| -z));
                        }
                    }
                    solve_scaled(ws, &mut flat, p, opts, s).map(|(a, _)| a)
                },
            )
            .collect();
        let mut values = Vec::with_capacity(sites * d * d);
        for r in per_site {
            values.extend_from_slice(r?.as_slice());
        }
        values
    };
    let a = MatrixField::from_values(grid, d, a_values)?;
    let norm = field_lp_norm(&a, p)?;
    let slack = compute_slack(fam, &a, two_sided);
    Ok(MaximalNorm {
        value: norm,
        dominator: Dominator { a, slack, norm },
    })
}

/// `inf ||a||_p` over `a >= x_t` for every member (positive families).
pub fn maximal_norm_positive(fam: &MaximalFamily, p: f64) -> Result<MaximalNorm> {
    maximal_norm_positive_with(fam, p, &SolverOptions::default())
}

pub fn maximal_norm_positive_with(fam: &MaximalFamily, p: f64, opts: &SolverOptions) -> Result<MaximalNorm> {
    if fam.kind != FamilyKind::Positive {
        return Err(Error::InfeasibleFamily(
            "positive solver needs a positive family".into(),
        ));
    }
    solve_family(fam, p, false, opts)
}

/// `inf ||a||_p` over `-a <= x_t <= a` (self-adjoint or positive families).
pub fn maximal_norm_selfadjoint(fam: &MaximalFamily, p: f64) -> Result<MaximalNorm> {
    maximal_norm_selfadjoint_with(fam, p, &SolverOptions::default())
}

pub fn maximal_norm_selfadjoint_with(fam: &MaximalFamily, p: f64, opts: &SolverOptions) -> Result<MaximalNorm> {
    if fam.kind == FamilyKind::General {
        return Err(Error::InfeasibleFamily(
            "self-adjoint solver needs Hermitian members".into(),
        ));
    }
    solve_family(fam, p, true, opts)
}

/// Upper bound `2 ||sup Re x_t|| + 2 ||sup Im x_t||` for arbitrary families,
/// with the factor 2 dropped when one of the parts vanishes identically.
/// This bounds, but does not compute, the factorization norm.
pub fn maximal_norm_general_upper(fam: &MaximalFamily, p: f64) -> Result<f64> {
    maximal_norm_general_upper_with(fam, p, &SolverOptions::default())
}

pub fn maximal_norm_general_upper_with(fam: &MaximalFamily, p: f64, opts: &SolverOptions) -> Result<f64> {
    validate_p(p)?;
    let part = |skew: bool| -> Result<Option<f64>> {
        let members: Vec<(f64, MatrixField)> = fam
            .ts
            .iter()
            .zip(&fam.members)
            .map(|(&t, x)| {
                (
                    t,
                    x.map_sites(|_, m| if skew { m.skew_part() } else { m.hermitian_part() }),
                )
            })
            .collect();
        let scale = fam.members.iter().map(|m| m.max_abs()).fold(0.0, f64::max);
        if members.iter().all(|(_, m)| m.max_abs() <= 1e-14 * scale) {
            return Ok(None);
        }
        let sub = MaximalFamily::new(FamilyKind::Selfadjoint, members)?;
        Ok(Some(solve_family(&sub, p, true, opts)?.value))
    };
    match (part(false)?, part(true)?) {
        (None, None) => Ok(0.0),
        (Some(v), None) | (None, Some(v)) => Ok(v),
        (Some(r), Some(i)) => Ok(2.0 * r + 2.0 * i),
    }
}

/// Maximal norm of a family of single matrices: `min (tr a^p)^{1/p}`.
pub fn maximal_norm_matrices(kind: FamilyKind, members: &[CMat], p: f64, opts: &SolverOptions) -> Result<(f64, CMat)> {
    validate_p(p)?;
    let d = members
        .first()
        .map(|m| m.dim())
        .ok_or_else(|| Error::InvalidArgument("empty family".into()))?;
    let two_sided = match kind {
        FamilyKind::Positive => {
            for m in members {
                if min_eigenvalue(m) < -1e-10 {
                    return Err(Error::InfeasibleFamily("member is not PSD".into()));
                }
            }
            false
        }
        FamilyKind::Selfadjoint => true,
        FamilyKind::General => {
            return Err(Error::InvalidArgument(
                "general families only have the upper bound".into(),
            ))
        }
    };
    if p.is_infinite() {
        let lam = members
            .iter()
            .map(|m| {
                if two_sided {
                    singular_values(&m.hermitian_part())[0]
                } else {
                    max_eigenvalue(m).max(0.0)
                }
            })
            .fold(0.0, f64::max);
        return Ok((lam, CMat::scalar(d, lam)));
    }
    let mut flat = vec![C64::new(0.0, 0.0); d * d];
    for m in members {
        let h = m.hermitian_part();
        flat.extend_from_slice(h.as_slice());
        if two_sided {
            flat.extend(h.as_slice().iter().map(|z| -z));
        }
    }
    let mut ws = Workspace::new(d);
    let (a, _) = solve_scaled(&mut ws, &mut flat, p, opts, 0)?;
    Ok((trace_power(&a, p).powf(1.0 / p), a))
}

/// Where a member's field comes from in the JSON format.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum FieldSource {
    /// Path to an `.mfld` file, relative to the JSON document.
    Ref(PathBuf),
    Inline(FieldJson),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MemberJson {
    pub t: f64,
    pub field: FieldSource,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridJson {
    pub n: usize,
    #[serde(rename = "N")]
    pub size: usize,
    #[serde(rename = "L")]
    pub length: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FamilyJson {
    pub schema: String,
    pub grid: GridJson,
    pub d: usize,
    pub kind: FamilyKind,
    pub members: Vec<MemberJson>,
}

impl FamilyJson {
    /// Resolves field references relative to `base`.
    pub fn into_family(self, base: &Path) -> Result<MaximalFamily> {
        if self.schema != FAMILY_JSON_SCHEMA {
            return Err(Error::Format {
                path: None,
                reason: format!("unknown schema {:?}", self.schema),
            });
        }
        let grid = GridSpec::new(self.grid.n, self.grid.size, self.grid.length)?;
        let mut members = Vec::with_capacity(self.members.len());
        for m in self.members {
            let field: MatrixField = match m.field {
                FieldSource::Ref(p) => read_mfld(base.join(p))?,
                FieldSource::Inline(j) => j.into_field()?,
            };
            if *field.grid() != grid || field.matrix_dim() != self.d {
                return Err(Error::ShapeMismatch(format!(
                    "member t={} does not match the declared grid/d",
                    m.t
                )));
            }
            members.push((m.t, field));
        }
        MaximalFamily::new(self.kind, members)
    }

    pub fn inline(fam: &MaximalFamily) -> Self {
        let g = fam.grid();
        Self {
            schema: FAMILY_JSON_SCHEMA.into(),
            grid: GridJson {
                n: g.dim(),
                size: g.size(),
                length: g.length(),
            },
            d: fam.matrix_dim(),
            kind: fam.kind(),
            members: fam
                .ts
                .iter()
                .zip(&fam.members)
                .map(|(&t, f)| MemberJson {
                    t,
                    field: FieldSource::Inline(FieldJson::from_field(f)),
                })
                .collect(),
        }
    }
}

pub fn read_family_json(path: impl AsRef<Path>) -> Result<MaximalFamily> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let json: FamilyJson = serde_json::from_str(&text)?;
    json.into_family(path.parent().unwrap_or(Path::new(".")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::new(1, 8, 8.0).unwrap()
    }

    fn constant(m: &CMat) -> MatrixField {
        let g = grid();
        MatrixField::from_values(g, m.dim(), (0..8).flat_map(|_| m.as_slice().to_vec()).collect()).unwrap()
    }

    #[test]
    fn rejects_bad_families() {
        let p = constant(&CMat::from_real_diag(&[1.0, 0.0]));
        let n = constant(&CMat::from_real_diag(&[-1.0, 0.0]));
        assert!(MaximalFamily::new(FamilyKind::Positive, vec![]).is_err());
        assert!(MaximalFamily::new(FamilyKind::Positive, vec![(1.0, p.clone()), (1.0, p.clone())]).is_err());
        assert!(MaximalFamily::new(FamilyKind::Positive, vec![(1.0, n.clone())]).is_err());
        assert!(MaximalFamily::new(FamilyKind::Selfadjoint, vec![(1.0, n)]).is_ok());
        let mut skew = CMat::zeros(2);
        skew[(0, 1)] = C64::new(1.0, 0.0);
        assert!(MaximalFamily::new(FamilyKind::Selfadjoint, vec![(1.0, constant(&skew))]).is_err());
    }

    #[test]
    fn commuting_field_family() {
        let fam = MaximalFamily::new(
            FamilyKind::Positive,
            vec![
                (1.0, constant(&CMat::from_real_diag(&[1.0, 0.0]))),
                (2.0, constant(&CMat::from_real_diag(&[0.0, 1.0]))),
            ],
        )
        .unwrap();
        // a = I on a box of length 8
        let v2 = maximal_norm_positive(&fam, 2.0).unwrap();
        assert!((v2.value - 16f64.sqrt()).abs() < 1e-6);
        assert!(v2.dominator.is_valid(1e-8));
        let vinf = maximal_norm_positive(&fam, f64::INFINITY).unwrap();
        assert_eq!(vinf.value, 1.0);
    }

    #[test]
    fn general_upper_on_hermitian_family_is_selfadjoint_value() {
        let x = CMat::from_real_rows(&[&[1.0, 0.5], &[0.5, -2.0]]);
        let fam = MaximalFamily::new(FamilyKind::General, vec![(1.0, constant(&x))]).unwrap();
        let sa = MaximalFamily::new(FamilyKind::Selfadjoint, vec![(1.0, constant(&x))]).unwrap();
        let u = maximal_norm_general_upper(&fam, 2.0).unwrap();
        let s = maximal_norm_selfadjoint(&sa, 2.0).unwrap().value;
        assert!((u - s).abs() < 1e-9);
    }

    #[test]
    fn json_roundtrip_inline() {
        let fam = MaximalFamily::new(FamilyKind::Positive, vec![(1.0, constant(&CMat::identity(2)))]).unwrap();
        let text = serde_json::to_string(&FamilyJson::inline(&fam)).unwrap();
        let back = serde_json::from_str::<FamilyJson>(&text)
            .unwrap()
            .into_family(Path::new("."))
            .unwrap();
        assert_eq!(back.members()[0], fam.members()[0]);
        assert!(serde_json::from_str::<FamilyJson>(&text.replace("\"kind\"", "\"bogus\":1,\"kind\"")).is_err());
    }
}
