use std::fmt;
use std::str::FromStr;

use crate::bytes::{Reader, Writer};
use crate::error::{Error, Result};
use crate::predict::DEFAULT_BLOCK_EDGE;
use crate::quant::{BASIS_STEP_EXP, WEIGHT_STEP_EXP};

pub const QP_RANGE: std::ops::RangeInclusive<u8> = 5..=50;
pub const N_REF_RANGE: std::ops::RangeInclusive<u8> = 1..=3;
pub const N_C_RANGE: std::ops::RangeInclusive<u8> = 1..=10;
pub(crate) const PARAMS_LEN: usize = 10;

const FLAG_INTERCEPT: u8 = 1;
const FLAG_RGB_ONLY: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum Scheme {
    Plain = 1,
    Pca = 2,
    Hpcls = 3,
    HpclsRgb = 4,
}

impl Scheme {
    pub fn from_u8(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Scheme::Plain),
            2 => Ok(Scheme::Pca),
            3 => Ok(Scheme::Hpcls),
            4 => Ok(Scheme::HpclsRgb),
            _ => Err(Error::UnsupportedScheme(v)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Plain => "plain",
            Scheme::Pca => "pca",
            Scheme::Hpcls => "hpcls",
            Scheme::HpclsRgb => "hpcls-rgb",
        }
    }

    pub const ALL: [Scheme; 4] = [Scheme::Plain, Scheme::Pca, Scheme::Hpcls, Scheme::HpclsRgb];
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s.to_ascii_lowercase().replace('_', "-"))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown scheme {s:?}")))
    }
}

/// Parameters of one encoder configuration. Fields a scheme does not use
/// stay zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SchemeParams {
    pub scheme: Scheme,
    pub qp: u8,
    pub n_c: u8,
    pub n_ref: u8,
    pub q_ref: u8,
    pub qp_rgb: u8,
    /// Prediction block edge `S_p`.
    pub block_edge: u16,
    pub weight_exp: i8,
    pub basis_exp: i8,
    pub intercept: bool,
    /// Predict bands from the decoded RGB channels only (scalable scheme).
    pub rgb_only: bool,
}

impl SchemeParams {
    fn base(scheme: Scheme, qp: u8) -> Self {
        Self {
            scheme,
            qp,
            n_c: 0,
            n_ref: 0,
            q_ref: 0,
            qp_rgb: 0,
            block_edge: 0,
            weight_exp: 0,
            basis_exp: 0,
            intercept: false,
            rgb_only: false,
        }
    }

    pub fn plain(qp: u8) -> Self {
        Self::base(Scheme::Plain, qp)
    }

    pub fn pca(n_c: u8, qp: u8) -> Self {
        Self {
            n_c,
            basis_exp: BASIS_STEP_EXP,
            ..Self::base(Scheme::Pca, qp)
        }
    }

    pub fn hpcls(n_ref: u8, q_ref: u8, n_c: u8, qp: u8) -> Self {
        Self {
            n_c,
            n_ref,
            q_ref,
            block_edge: DEFAULT_BLOCK_EDGE as u16,
            weight_exp: WEIGHT_STEP_EXP,
            basis_exp: BASIS_STEP_EXP,
            intercept: true,
            ..Self::base(Scheme::Hpcls, qp)
        }
    }

    pub fn hpcls_rgb(n_ref: u8, q_ref: u8, n_c: u8, qp: u8, qp_rgb: u8) -> Self {
        Self {
            scheme: Scheme::HpclsRgb,
            qp_rgb,
            ..Self::hpcls(n_ref, q_ref, n_c, qp)
        }
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, v: u8, r: std::ops::RangeInclusive<u8>| {
            if r.contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} = {v} outside [{}, {}]",
                    r.start(),
                    r.end()
                )))
            }
        };
        check("qp", self.qp, QP_RANGE)?;
        if self.scheme != Scheme::Plain {
            check("n_c", self.n_c, N_C_RANGE)?;
            if !(-24..=0).contains(&self.basis_exp) {
                return Err(Error::InvalidParameter(format!(
                    "basis step exponent {}",
                    self.basis_exp
                )));
            }
        }
        if matches!(self.scheme, Scheme::Hpcls | Scheme::HpclsRgb) {
            check("n_ref", self.n_ref, N_REF_RANGE)?;
            check("q_ref", self.q_ref, QP_RANGE)?;
            if self.block_edge == 0 {
                return Err(Error::InvalidParameter("block edge 0".into()));
            }
            if !(-24..=0).contains(&self.weight_exp) {
                return Err(Error::InvalidParameter(format!(
                    "weight step exponent {}",
                    self.weight_exp
                )));
            }
        }
        if self.scheme == Scheme::HpclsRgb {
            check("qp_rgb", self.qp_rgb, QP_RANGE)?;
        }
        Ok(())
    }

    pub(crate) fn write(&self, w: &mut Writer) {
        let flags = (self.intercept as u8 * FLAG_INTERCEPT) | (self.rgb_only as u8 * FLAG_RGB_ONLY);
        w.u8(self.n_ref)
            .u8(self.q_ref)
            .u8(self.n_c)
            .u8(self.qp)
            .u16(self.block_edge)
            .u8(self.qp_rgb)
            .i8(self.weight_exp)
            .i8(self.basis_exp)
            .u8(flags);
    }

    pub(crate) fn read(scheme: Scheme, r: &mut Reader) -> Result<Self> {
        let n_ref = r.u8()?;
        let q_ref = r.u8()?;
        let n_c = r.u8()?;
        let qp = r.u8()?;
        let block_edge = r.u16()?;
        let qp_rgb = r.u8()?;
        let weight_exp = r.i8()?;
        let basis_exp = r.i8()?;
        let flags = r.u8()?;
        Ok(Self {
            scheme,
            qp,
            n_c,
            n_ref,
            q_ref,
            qp_rgb,
            block_edge,
            weight_exp,
            basis_exp,
            intercept: flags & FLAG_INTERCEPT != 0,
            rgb_only: flags & FLAG_RGB_ONLY != 0,
        })
    }
}

impl fmt::Display for SchemeParams {
    /// Space-separated `key=value` pairs of the fields the scheme uses.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.scheme)?;
        if matches!(self.scheme, Scheme::Hpcls | Scheme::HpclsRgb) {
            write!(f, " n_ref={} q_ref={}", self.n_ref, self.q_ref)?;
        }
        if self.scheme != Scheme::Plain {
            write!(f, " n_c={}", self.n_c)?;
        }
        write!(f, " qp={}", self.qp)?;
        if self.scheme == Scheme::HpclsRgb {
            write!(f, " qp_rgb={}", self.qp_rgb)?;
            if self.rgb_only {
                f.write_str(" rgb_only")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scheme_names() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
            assert_eq!(Scheme::from_u8(s as u8).unwrap(), s);
        }
        assert_eq!("HPCLS_RGB".parse::<Scheme>().unwrap(), Scheme::HpclsRgb);
        assert!("jpeg".parse::<Scheme>().is_err());
        assert!(matches!(
            Scheme::from_u8(0),
            Err(Error::UnsupportedScheme(0))
        ));
    }

    #[test]
    fn ranges() {
        assert!(SchemeParams::plain(5).validate().is_ok());
        assert!(SchemeParams::plain(51).validate().is_err());
        assert!(SchemeParams::pca(0, 20).validate().is_err());
        assert!(SchemeParams::pca(10, 20).validate().is_ok());
        assert!(SchemeParams::hpcls(4, 20, 2, 20).validate().is_err());
        assert!(SchemeParams::hpcls(3, 4, 2, 20).validate().is_err());
        assert!(SchemeParams::hpcls_rgb(1, 20, 2, 20, 0).validate().is_err());
        assert!(SchemeParams::hpcls_rgb(1, 20, 2, 20, 30).validate().is_ok());
    }

    #[test]
    fn record_roundtrip() {
        let mut p = SchemeParams::hpcls_rgb(2, 17, 3, 40, 22);
        p.rgb_only = true;
        let mut w = Writer::new();
        p.write(&mut w);
        let bytes = w.finish();
        assert_eq!(bytes.len(), PARAMS_LEN);
        let back = SchemeParams::read(Scheme::HpclsRgb, &mut Reader::new(&bytes, "t")).unwrap();
        assert_eq!(back, p);
        assert_eq!(
            p.to_string(),
            "hpcls-rgb n_ref=2 q_ref=17 n_c=3 qp=40 qp_rgb=22 rgb_only"
        );
    }
}
