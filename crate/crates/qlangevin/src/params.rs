//! Physical inputs and their normalization.
//!
//! Internal units: ħ = 1, and after [`validate`] also `mass_x = 1`, `lambda_x = 1`.
//! Every downstream routine accepts general (unnormalized) parameters as well.

use crate::error::{Error, Result};

/// Reduced Planck constant in internal units.
pub const HBAR: f64 = 1.0;

/// Relative tolerance for the `m_x ω_cx = m_y ω_cy` consistency check.
pub const FIELD_CONSISTENCY_TOL: f64 = 1e-12;

/// Relative factor applied to `lambda_y` by [`SystemParams::nudged`].
pub const NUDGE_FACTOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub mass_x: f64,
    pub mass_y: f64,
    pub lambda_x: f64,
    pub lambda_y: f64,
    pub gamma: f64,
    pub omega_cx: f64,
    pub omega_cy: f64,
    pub temperature: f64,
    pub carrier_density: f64,
    pub charge: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            mass_x: 1.0,
            mass_y: 1.0,
            lambda_x: 1.0,
            lambda_y: 1.0,
            gamma: 12.0,
            omega_cx: 0.0,
            omega_cy: 0.0,
            temperature: 0.0,
            carrier_density: 1.0,
            charge: 1.0,
        }
    }
}

/// Derived scalar quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derived {
    pub omega_c: f64,
}

impl SystemParams {
    /// Axial-field constructor: `omega_cx`, `omega_cy` follow from `omega_c` and the masses.
    pub fn axial(mass_y: f64, lambda_y: f64, gamma: f64, omega_c: f64, temperature: f64) -> Self {
        let r = mass_y.sqrt();
        Self {
            mass_y,
            lambda_y,
            gamma,
            omega_cx: omega_c * r,
            omega_cy: omega_c / r,
            temperature,
            ..Self::default()
        }
    }

    pub fn omega_c(&self) -> f64 {
        (self.omega_cx * self.omega_cy).sqrt()
    }

    /// ω_c² = ω_cx·ω_cy.
    pub fn omega_c2(&self) -> f64 {
        self.omega_cx * self.omega_cy
    }

    /// λ_xλ_y + ω_c².
    pub fn q(&self) -> f64 {
        self.lambda_x * self.lambda_y + self.omega_c2()
    }

    /// Parameters with the roles of x and y exchanged.
    pub fn swap_xy(&self) -> Self {
        Self {
            mass_x: self.mass_y,
            mass_y: self.mass_x,
            lambda_x: self.lambda_y,
            lambda_y: self.lambda_x,
            omega_cx: self.omega_cy,
            omega_cy: self.omega_cx,
            ..*self
        }
    }

    /// Multiplies `lambda_y` by `1 + 1e-6` to lift exact root degeneracies.
    pub fn nudged(&self) -> Self {
        Self { lambda_y: self.lambda_y * (1.0 + NUDGE_FACTOR), ..*self }
    }

    pub fn is_axial(&self) -> bool {
        (self.mass_x - self.mass_y).abs() <= 1e-12 * self.mass_x.max(self.mass_y)
    }

    pub fn with_temperature(&self, temperature: f64) -> Self {
        Self { temperature, ..*self }
    }

    /// Parses the flat `key=value` config format.
    ///
    /// Unspecified keys keep their [`Default`] values.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut p = Self::default();
        let mut omega_c = None;
        let mut omega_cx = None;
        let mut omega_cy = None;
        let mut seen = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", lineno + 1)))?;
            let key = key.trim();
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("line {}: bad number for {key}", lineno + 1)))?;
            if seen.contains(&key.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key {key}", lineno + 1)));
            }
            seen.push(key.to_string());
            match key {
                "mass_y" => p.mass_y = value,
                "lambda_y" => p.lambda_y = value,
                "gamma" => p.gamma = value,
                "omega_c" => omega_c = Some(value),
                "omega_cx" => omega_cx = Some(value),
                "omega_cy" => omega_cy = Some(value),
                "temperature" => p.temperature = value,
                "carrier_density" => p.carrier_density = value,
                "charge" => p.charge = value,
                other => return Err(Error::Config(format!("unknown key {other}"))),
            }
        }
        match (omega_c, omega_cx, omega_cy) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                return Err(Error::Config("omega_c cannot be combined with omega_cx/omega_cy".into()))
            }
            (Some(w), None, None) => {
                let r = (p.mass_y / p.mass_x).sqrt();
                p.omega_cx = w * r;
                p.omega_cy = w / r;
            }
            (None, Some(wx), Some(wy)) => {
                p.omega_cx = wx;
                p.omega_cy = wy;
            }
            (None, Some(wx), None) => {
                p.omega_cx = wx;
                p.omega_cy = wx * p.mass_x / p.mass_y;
            }
            (None, None, Some(wy)) => {
                p.omega_cy = wy;
                p.omega_cx = wy * p.mass_y / p.mass_x;
            }
            (None, None, None) => {}
        }
        Ok(p)
    }

    /// Inverse of [`SystemParams::from_config_str`] for normalized params.
    pub fn to_config_string(&self) -> String {
        format!(
            "mass_y={:.17e}\nlambda_y={:.17e}\ngamma={:.17e}\nomega_cx={:.17e}\nomega_cy={:.17e}\ntemperature={:.17e}\ncarrier_density={:.17e}\ncharge={:.17e}\n",
            self.mass_y,
            self.lambda_y,
            self.gamma,
            self.omega_cx,
            self.omega_cy,
            self.temperature,
            self.carrier_density,
            self.charge
        )
    }
}

fn positive(v: f64, name: &'static str) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::NotFinite(name));
    }
    if v <= 0.0 {
        return Err(Error::NonPositive(name));
    }
    Ok(())
}

fn nonnegative(v: f64, name: &'static str) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::NotFinite(name));
    }
    if v < 0.0 {
        return Err(Error::Negative(name));
    }
    Ok(())
}

/// Checks field signs and consistency, then rescales to `mass_x = lambda_x = 1`.
pub fn validate(raw: &SystemParams) -> Result<SystemParams> {
    positive(raw.mass_x, "mass_x")?;
    positive(raw.mass_y, "mass_y")?;
    positive(raw.lambda_x, "lambda_x")?;
    positive(raw.lambda_y, "lambda_y")?;
    positive(raw.gamma, "gamma")?;
    nonnegative(raw.omega_cx, "omega_cx")?;
    nonnegative(raw.omega_cy, "omega_cy")?;
    nonnegative(raw.temperature, "temperature")?;
    positive(raw.carrier_density, "carrier_density")?;
    positive(raw.charge, "charge")?;

    let bx = raw.omega_cx * raw.mass_x;
    let by = raw.omega_cy * raw.mass_y;
    if (bx - by).abs() > FIELD_CONSISTENCY_TOL * bx.abs().max(by.abs()) {
        return Err(Error::InconsistentField(format!(
            "omega_cx*mass_x = {bx} but omega_cy*mass_y = {by}"
        )));
    }

    let m = raw.mass_x;
    let f = raw.lambda_x;
    Ok(SystemParams {
        mass_x: 1.0,
        mass_y: raw.mass_y / m,
        lambda_x: 1.0,
        lambda_y: raw.lambda_y / f,
        gamma: raw.gamma / f,
        omega_cx: raw.omega_cx / f,
        omega_cy: raw.omega_cy / f,
        temperature: raw.temperature / (HBAR * f),
        carrier_density: raw.carrier_density,
        charge: raw.charge,
    })
}

pub fn derived(params: &SystemParams) -> Derived {
    Derived { omega_c: params.omega_c() }
}
