use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::legendre::{LegendreOrder, L_MAX};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Spin {
    /// `s = +1/2`
    Up,
    /// `s = -1/2`
    Down,
}

impl Spin {
    pub fn twice(self) -> i8 {
        match self {
            Spin::Up => 1,
            Spin::Down => -1,
        }
    }

    pub fn value(self) -> f64 {
        0.5 * self.twice() as f64
    }

    pub fn from_twice(twice: i8) -> Result<Self> {
        match twice {
            1 => Ok(Spin::Up),
            -1 => Ok(Spin::Down),
            _ => Err(Error::InvalidChannel {
                l: 0,
                twice_s: twice,
                reason: "spin must be +1/2 or -1/2",
            }),
        }
    }
}

impl FromStr for Spin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1/2" | "+1/2" | "0.5" | "+0.5" | "+" | "up" => Ok(Spin::Up),
            "-1/2" | "-0.5" | "-" | "down" => Ok(Spin::Down),
            other => Err(Error::Config(format!("unrecognized spin `{other}`"))),
        }
    }
}

/// Partial-wave label `(l, s)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawChannel", into = "RawChannel")]
pub struct Channel {
    l: u32,
    spin: Spin,
}

impl Channel {
    /// Requires `l + 2s >= 0` (which excludes `(0, -1/2)`) and both Legendre
    /// orders `l` and `l + 2s` within [`L_MAX`].
    pub fn new(l: u32, spin: Spin) -> Result<Self> {
        let twice_s = spin.twice();
        if l == 0 && spin == Spin::Down {
            return Err(Error::InvalidChannel {
                l,
                twice_s,
                reason: "l + 2s must be nonnegative; (0, -1/2) has no spherical spinor",
            });
        }
        if l > L_MAX || (spin == Spin::Up && l + 1 > L_MAX) {
            return Err(Error::InvalidChannel {
                l,
                twice_s,
                reason: "Legendre order exceeds the supported maximum",
            });
        }
        Ok(Self { l, spin })
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn spin(&self) -> Spin {
        self.spin
    }

    /// Order of `Q` in `k¹`.
    pub fn k1_order(&self) -> LegendreOrder {
        LegendreOrder::new(self.l).expect("validated at construction")
    }

    /// Order `l + 2s` of `Q` in `k²`.
    pub fn k2_order(&self) -> LegendreOrder {
        let order = (self.l as i64 + self.spin.twice() as i64) as u32;
        LegendreOrder::new(order).expect("validated at construction")
    }

    /// Channels where the form is not essentially self-adjoint above `Z_c'`.
    pub fn is_strongly_coupled(&self) -> bool {
        matches!((self.l, self.spin), (0, Spin::Up) | (1, Spin::Down))
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.spin == Spin::Up { "+" } else { "-" };
        write!(f, "({}, {}1/2)", self.l, sign)
    }
}

/// Parses `L,S` such as `0,1/2` or `1,-0.5`.
impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim().trim_start_matches('(').trim_end_matches(')');
        let (l, spin) = trimmed
            .split_once(',')
            .ok_or_else(|| Error::Config(format!("channel must be `L,S`, got `{s}`")))?;
        let l: u32 = l
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad channel l in `{s}`")))?;
        Channel::new(l, spin.parse()?)
    }
}

#[derive(Serialize, Deserialize)]
struct RawChannel {
    l: u32,
    twice_s: i8,
}

impl TryFrom<RawChannel> for Channel {
    type Error = Error;

    fn try_from(raw: RawChannel) -> Result<Self> {
        Channel::new(raw.l, Spin::from_twice(raw.twice_s)?)
    }
}

impl From<Channel> for RawChannel {
    fn from(c: Channel) -> Self {
        RawChannel {
            l: c.l,
            twice_s: c.spin.twice(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validity_rules() {
        assert!(Channel::new(0, Spin::Down).is_err());
        assert!(Channel::new(0, Spin::Up).is_ok());
        assert!(Channel::new(12, Spin::Down).is_ok());
        assert!(Channel::new(12, Spin::Up).is_err());
        let c = Channel::new(1, Spin::Down).unwrap();
        assert_eq!(c.k2_order().get(), 0);
        assert_eq!(c.k1_order().get(), 1);
        assert_eq!(Channel::new(2, Spin::Up).unwrap().k2_order().get(), 3);
    }

    #[test]
    fn parse_and_display() {
        let c: Channel = "1,-1/2".parse().unwrap();
        assert_eq!(c, Channel::new(1, Spin::Down).unwrap());
        assert_eq!(c.to_string(), "(1, -1/2)");
        assert_eq!("(0, 0.5)".parse::<Channel>().unwrap().spin(), Spin::Up);
        assert!("0,-1/2".parse::<Channel>().is_err());
        assert!("0;1/2".parse::<Channel>().is_err());
        assert!("x,1/2".parse::<Channel>().is_err());
    }

    #[test]
    fn serde_round_trip_validates() {
        let c = Channel::new(3, Spin::Up).unwrap();
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(json, r#"{"l":3,"twice_s":1}"#);
        assert_eq!(serde_json::from_str::<Channel>(&json).unwrap(), c);
        assert!(serde_json::from_str::<Channel>(r#"{"l":0,"twice_s":-1}"#).is_err());
    }
}
