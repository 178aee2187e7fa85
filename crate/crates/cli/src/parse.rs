//! Value parsers for command-line arguments.

use std::f64::consts::PI;

use melab::capacity::CompactSet;
use melab::grid::Shape;

/// A point with a weight, written `x,y[,z]:w`.
pub type WeightedPoint = (Vec<f64>, f64);

/// Parse `3`, `1e-3`, `1/32`, `pi`, `8pi` or `-0.5`.
pub fn number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let (a, b) = (number(a)?, number(b)?);
        if b == 0.0 {
            return Err(format!("division by zero in `{s}`"));
        }
        return Ok(a / b);
    }
    if let Some(head) = s.strip_suffix("pi") {
        let head = head.trim_end_matches('*');
        return match head {
            "" => Ok(PI),
            "-" => Ok(-PI),
            h => Ok(number(h)? * PI),
        };
    }
    s.parse::<f64>().map_err(|_| format!("not a number: `{s}`"))
}

/// Comma-separated numbers as one argument value.
#[derive(Debug, Clone, PartialEq)]
pub struct Numbers(pub Vec<f64>);

pub fn list(s: &str) -> Result<Numbers, String> {
    Ok(Numbers(numbers(s)?))
}

fn numbers(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(number).collect()
}

pub fn weighted_point(s: &str) -> Result<WeightedPoint, String> {
    let (x, w) = s.split_once(':').ok_or_else(|| format!("expected `x,y[,z]:weight`, got `{s}`"))?;
    Ok((numbers(x)?, number(w)?))
}

/// `disk`, `ball` or `rectangle:lo1,lo2[,lo3]:hi1,hi2[,hi3]`.
pub fn shape(s: &str) -> Result<Shape, String> {
    let mut parts = s.split(':');
    match parts.next().map(str::trim) {
        Some("disk") if parts.next().is_none() => Ok(Shape::Disk),
        Some("ball") if parts.next().is_none() => Ok(Shape::Ball),
        Some("rectangle") => {
            let (Some(lo), Some(hi), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(format!("expected `rectangle:lo:hi`, got `{s}`"));
            };
            let (lo, hi) = (numbers(lo)?, numbers(hi)?);
            if lo.len() != hi.len() || lo.iter().zip(&hi).any(|(a, b)| a >= b) {
                return Err(format!("rectangle corners must satisfy lo < hi componentwise in `{s}`"));
            }
            Ok(Shape::Rectangle { lo, hi })
        }
        _ => Err(format!("unknown shape `{s}`; use disk, ball or rectangle:lo:hi")),
    }
}

/// Target set description; `point` and `ball:r` are centred at the origin
/// unless followed by `@x,y,..`. The dimension is filled in later.
#[derive(Debug, Clone, PartialEq)]
pub enum SetSpec {
    Point(Option<Vec<f64>>),
    Ball(f64, Option<Vec<f64>>),
}

impl SetSpec {
    pub fn build(&self, n: usize) -> Result<CompactSet, String> {
        let centre = |c: &Option<Vec<f64>>| -> Result<Vec<f64>, String> {
            match c {
                Some(x) if x.len() != n => Err(format!("set centre has {} coordinates, expected {n}", x.len())),
                Some(x) => Ok(x.clone()),
                None => Ok(vec![0.0; n]),
            }
        };
        Ok(match self {
            SetSpec::Point(c) => CompactSet::Point { x: centre(c)? },
            SetSpec::Ball(r, c) => CompactSet::Ball { center: centre(c)?, radius: *r },
        })
    }
}

pub fn set(s: &str) -> Result<SetSpec, String> {
    let (body, centre) = match s.split_once('@') {
        Some((b, c)) => (b, Some(numbers(c)?)),
        None => (s, None),
    };
    match body.split_once(':') {
        None if body.trim() == "point" => Ok(SetSpec::Point(centre)),
        Some(("ball", r)) => {
            let r = number(r)?;
            if !(r > 0.0) {
                return Err(format!("ball radius must be positive in `{s}`"));
            }
            Ok(SetSpec::Ball(r, centre))
        }
        _ => Err(format!("unknown set `{s}`; use point[@x,..] or ball:r[@x,..]")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers() {
        assert_eq!(number("1/32").unwrap(), 1.0 / 32.0);
        assert_eq!(number(" 1e-3 ").unwrap(), 1e-3);
        assert_eq!(number("8pi").unwrap(), 8.0 * PI);
        assert_eq!(number("2*pi").unwrap(), 2.0 * PI);
        assert_eq!(number("-pi").unwrap(), -PI);
        assert!(number("1/0").is_err());
        assert!(number("x").is_err());
        assert_eq!(list("1/8,1/16").unwrap(), Numbers(vec![0.125, 0.0625]));
        assert!(list("1,,2").is_err());
    }

    #[test]
    fn shapes_and_points() {
        assert_eq!(shape("disk").unwrap(), Shape::Disk);
        assert_eq!(
            shape("rectangle:-1,0:1,2").unwrap(),
            Shape::Rectangle { lo: vec![-1.0, 0.0], hi: vec![1.0, 2.0] }
        );
        assert!(shape("rectangle:1,0:0,2").is_err());
        assert!(shape("cube").is_err());
        assert_eq!(weighted_point("0.5,0:2").unwrap(), (vec![0.5, 0.0], 2.0));
        assert!(weighted_point("0.5,0").is_err());
    }

    #[test]
    fn sets() {
        assert_eq!(set("point").unwrap().build(3).unwrap(), CompactSet::point(3));
        assert_eq!(
            set("ball:1/4@0.1,0").unwrap().build(2).unwrap(),
            CompactSet::Ball { center: vec![0.1, 0.0], radius: 0.25 }
        );
        assert!(set("point@1,2").unwrap().build(3).is_err());
        assert!(set("ball:-1").is_err());
    }
}
