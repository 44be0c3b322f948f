//! The `quantum` run: gradewise unitarity and field identities under
//! quadrature refinement, plus the flipped-sign control.

use kgseries::fit::SlopeFit;
use kgseries::quantum::{
    field_identity_check, field_identity_shortcut, unitarity_check, DysonSign, NodeGrid,
    QuantumLatticeSpec, RefinementLevel, SafeSubspace,
};
use serde::Serialize;

use crate::config::{RawConfig, Reader};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SignChoice {
    Minus,
    Plus,
}

impl std::str::FromStr for SignChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "minus" | "-" => Ok(SignChoice::Minus),
            "plus" | "+" => Ok(SignChoice::Plus),
            other => Err(format!("unknown sign {other:?} (minus, plus)")),
        }
    }
}

impl SignChoice {
    fn dyson(self) -> DysonSign {
        match self {
            SignChoice::Minus => DysonSign::Minus,
            SignChoice::Plus => DysonSign::Plus,
        }
    }

    fn flipped(self) -> Self {
        match self {
            SignChoice::Minus => SignChoice::Plus,
            SignChoice::Plus => SignChoice::Minus,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuantumSettings {
    pub spec: QuantumLatticeSpec,
    pub p: usize,
    pub t: f64,
    pub x: f64,
    pub order: usize,
    pub dtau: f64,
    /// Number of refinement levels, each halving `dtau`.
    pub refine: usize,
    pub sign: SignChoice,
}

impl QuantumSettings {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, CliError> {
        let mut r = Reader::new(raw);
        let spec = QuantumLatticeSpec {
            dims: r.value("dims", 1),
            modes: r.value("modes", 1),
            n_max: r.value("nmax", 6),
            box_len: r.value("box_L", 1.0),
            mass: r.value("mass", 1.0),
            t0: r.value("t0", 0.0),
        };
        let s = Self {
            spec,
            p: r.value("p", 2),
            t: r.value("t", 0.5),
            x: r.value("x", 0.3),
            order: r.value("order", 2),
            dtau: r.value("dtau", 0.025),
            refine: r.value("refine", 3),
            sign: r.value("sign", SignChoice::Minus),
        };
        if let Err(e) = s.spec.validate() {
            match e {
                kgseries::quantum::QuantumError::Config(list) => r.problems(list),
                other => r.problem(other.to_string()),
            }
        }
        if s.p < 2 {
            r.problem(format!("p must be >= 2, got {}", s.p));
        }
        if s.order > 4 {
            r.problem(format!("order must be at most 4, got {}", s.order));
        }
        if s.refine == 0 || s.refine > 6 {
            r.problem(format!(
                "refine must be between 1 and 6 levels, got {}",
                s.refine
            ));
        }
        if !(s.t.is_finite() && s.t >= s.spec.t0) {
            r.problem(format!(
                "t must be finite and at least t0={}, got {}",
                s.spec.t0, s.t
            ));
        } else if s.dtau.is_nan() || s.dtau <= 0.0 {
            r.problem(format!("dtau must be positive, got {}", s.dtau));
        } else {
            let ratio = (s.t - s.spec.t0) / s.dtau;
            if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
                r.problem(format!(
                    "dtau={} does not divide t - t0 = {}",
                    s.dtau,
                    s.t - s.spec.t0
                ));
            }
        }
        if !s.x.is_finite() {
            r.problem(format!("x must be finite, got {}", s.x));
        }
        r.finish()?;
        // cutoff check after the config is known to be sound
        let space = s.spec.space()?;
        SafeSubspace::for_factors(&space, (s.p + 1) * s.order + 1)?;
        Ok(s)
    }

    pub fn levels(&self) -> Vec<f64> {
        (0..self.refine)
            .map(|i| self.dtau / f64::from(1u32 << i))
            .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Refinement {
    pub n_safe: usize,
    pub levels: Vec<RefinementLevel>,
    pub fit: Option<SlopeFit>,
    pub exact: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuantumOrder {
    pub m: usize,
    /// Order-`m` tree sum against the order-`m` conjugated field.
    pub field: Refinement,
    /// Order-`m` pieces of `U U^dag` and `U^dag U` against `delta_{0m} Id`.
    pub unitarity: Refinement,
}

#[derive(Clone, Debug, Serialize)]
pub struct SignCheck {
    pub sign: SignChoice,
    /// First order with the commutator in closed form, finest step.
    pub shortcut_m1: f64,
    pub field_m1: Vec<RefinementLevel>,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuantumReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub config: QuantumSettings,
    pub fock_dimension: usize,
    pub orders: Vec<QuantumOrder>,
    pub chosen_sign: Option<SignCheck>,
    pub negative_control: Option<SignCheck>,
    /// The sign whose first-order check is closer to exact.
    pub consistent_sign: Option<SignChoice>,
}

impl QuantumReport {
    pub fn scalars(&self) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        for o in &self.orders {
            out.push((format!("field_dev_{}", o.m), o.field.levels[0].deviation));
            out.push((
                format!("unitarity_dev_{}", o.m),
                o.unitarity.levels[0].deviation,
            ));
        }
        if let Some(c) = &self.chosen_sign {
            out.push(("shortcut_m1".into(), c.shortcut_m1));
        }
        if let Some(c) = &self.negative_control {
            out.push(("control_shortcut_m1".into(), c.shortcut_m1));
        }
        out
    }
}

fn sign_check(
    s: &QuantumSettings,
    sign: SignChoice,
    levels: &[f64],
) -> Result<SignCheck, CliError> {
    let finest = *levels.last().expect("at least one level");
    Ok(SignCheck {
        sign,
        shortcut_m1: field_identity_shortcut(&s.spec, s.p, s.t, s.x, finest, sign.dyson())?,
        field_m1: field_identity_check(&s.spec, s.p, s.t, s.x, 1, levels, sign.dyson())?.levels,
    })
}

pub fn run_quantum(s: &QuantumSettings) -> Result<QuantumReport, CliError> {
    let levels = s.levels();
    // fails early on a step that does not divide the interval
    NodeGrid::new(&s.spec, s.p, s.t, *levels.last().expect("refine >= 1"))?;
    let sign = s.sign.dyson();
    let mut orders = Vec::new();
    for m in 0..=s.order {
        let field = field_identity_check(&s.spec, s.p, s.t, s.x, m, &levels, sign)?;
        let unitarity = unitarity_check(&s.spec, s.p, s.t, m, &levels, sign)?;
        orders.push(QuantumOrder {
            m,
            field: Refinement {
                n_safe: field.n_safe,
                fit: field.fit,
                exact: field.at_machine_floor,
                levels: field.levels,
            },
            unitarity: Refinement {
                n_safe: unitarity.n_safe,
                fit: unitarity.fit,
                exact: unitarity.at_machine_floor,
                levels: unitarity.levels,
            },
        });
    }
    let (chosen_sign, negative_control, consistent_sign) = if s.order >= 1 {
        let chosen = sign_check(s, s.sign, &levels)?;
        let control = sign_check(s, s.sign.flipped(), &levels)?;
        let consistent = if chosen.shortcut_m1 <= control.shortcut_m1 {
            s.sign
        } else {
            s.sign.flipped()
        };
        (Some(chosen), Some(control), Some(consistent))
    } else {
        (None, None, None)
    };
    Ok(QuantumReport {
        schema_version: crate::SCHEMA_VERSION,
        command: "quantum",
        config: s.clone(),
        fock_dimension: s.spec.space()?.dim(),
        orders,
        chosen_sign,
        negative_control,
        consistent_sign,
    })
}
