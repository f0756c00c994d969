//! Named members of the policy family.

use crate::error::{Error, Result};
use crate::model::PolicyParams;

/// Static locking parameter recommended for three machines.
pub const M3_ALPHA: f64 = 0.07066;

/// Ratio minus one guaranteed for three machines without dynamic locking.
pub const M3_GAMMA: f64 = 0.482;

/// Dynamic locking base, fixed by `λ^0.24 = 4`.
pub fn dynamic_lambda() -> f64 {
    4f64.powf(25.0 / 6.0)
}

/// Plain online LPT: no locking.
pub fn lpt() -> PolicyParams {
    PolicyParams { alpha: 0.0, lambda: 1.0 }
}

/// The two-machine SLEEPY policy, `α = (3 − √5)/2`.
pub fn sleepy_two() -> PolicyParams {
    PolicyParams { alpha: (3.0 - 5f64.sqrt()) / 2.0, lambda: 1.0 }
}

/// Recommended Generalized SLEEPY parameters for `m` machines.
///
/// One machine needs no locking, two machines use [`sleepy_two`]. For three
/// machines the static variant uses [`M3_ALPHA`]; otherwise `α = 1/(4m²)`,
/// with `λ = 4^(25/6)` when `dynamic` is set.
pub fn gsleepy(m: usize, dynamic: bool) -> Result<PolicyParams> {
    match m {
        0 => Err(Error::InvalidArgument("machine count must be at least 1".into())),
        1 => Ok(lpt()),
        2 => Ok(sleepy_two()),
        3 if !dynamic => Ok(PolicyParams { alpha: M3_ALPHA, lambda: 1.0 }),
        _ => {
            let alpha = 1.0 / (4.0 * (m * m) as f64);
            let lambda = if dynamic { dynamic_lambda() } else { 1.0 };
            Ok(PolicyParams { alpha, lambda })
        }
    }
}

/// Target competitive ratio minus one for `m` machines.
pub fn target_gamma(m: usize) -> Result<f64> {
    match m {
        0 => Err(Error::InvalidArgument("machine count must be at least 1".into())),
        1 => Ok(0.0),
        2 => Ok((3.0 - 5f64.sqrt()) / 2.0),
        3 => Ok(M3_GAMMA),
        _ => Ok(0.5 - 4f64.powi(-20) / (m * m) as f64),
    }
}

/// Resolves a CLI policy name.
pub fn by_name(name: &str, m: usize) -> Result<PolicyParams> {
    match name {
        "lpt" => Ok(lpt()),
        "sleepy2" => Ok(sleepy_two()),
        "gsleepy-static" => gsleepy(m, false),
        "gsleepy-dynamic" => gsleepy(m, true),
        other => Err(Error::InvalidArgument(format!(
            "unknown policy `{other}` (expected lpt, sleepy2, gsleepy-static or gsleepy-dynamic)"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{alpha_of, simulate};
    use crate::model::Instance;

    #[test]
    fn named_values() {
        assert_eq!(lpt(), PolicyParams { alpha: 0.0, lambda: 1.0 });
        assert!((sleepy_two().alpha - 0.381966).abs() < 1e-6);
        let p = gsleepy(4, true).unwrap();
        assert_eq!(p.alpha, 1.0 / 64.0);
        assert_eq!(p.lambda, 4f64.powf(25.0 / 6.0));
        assert_eq!(gsleepy(1, true).unwrap(), lpt());
        assert_eq!(gsleepy(1, false).unwrap(), lpt());
        assert_eq!(gsleepy(2, true).unwrap(), sleepy_two());
        assert_eq!(gsleepy(3, false).unwrap(), PolicyParams { alpha: 0.07066, lambda: 1.0 });
        assert_eq!(gsleepy(5, false).unwrap(), PolicyParams { alpha: 0.01, lambda: 1.0 });
        assert!(gsleepy(0, true).is_err());
    }

    #[test]
    fn lambda_quarter_power_is_four() {
        assert!((dynamic_lambda().powf(0.24) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn gamma_targets() {
        assert!((target_gamma(2).unwrap() - 0.381966).abs() < 1e-6);
        assert_eq!(target_gamma(3).unwrap(), 0.482);
        assert_eq!(target_gamma(4).unwrap(), 0.5 - 4f64.powi(-20) / 16.0);
        assert!(target_gamma(4).unwrap() < 0.5);
        assert_eq!(target_gamma(1).unwrap(), 0.0);
        assert!(target_gamma(0).is_err());
    }

    #[test]
    fn alpha_never_exceeds_gamma() {
        for m in 1..200 {
            for dynamic in [false, true] {
                assert!(gsleepy(m, dynamic).unwrap().alpha <= target_gamma(m).unwrap(), "m={m}");
            }
        }
    }

    #[test]
    fn dynamic_alpha_nonincreasing_in_ratio() {
        let p = gsleepy(6, true).unwrap();
        assert_eq!(alpha_of(&p, 0.0, 1.0).unwrap(), p.alpha);
        let mut prev = f64::INFINITY;
        for k in 0..200 {
            let a = alpha_of(&p, k as f64 * 0.05, 1.0).unwrap();
            assert!(a <= prev);
            prev = a;
        }
    }

    #[test]
    fn lpt_examples() {
        let inst = Instance::from_pairs(2, &[(0.0, 1.0), (0.0, 1.0), (1e-6, 2.0)]);
        assert_eq!(simulate(&inst, &lpt()).unwrap().makespan, 3.0);
        let single = Instance::from_pairs(3, &[(2.5, 1.25)]);
        assert_eq!(simulate(&single, &lpt()).unwrap().makespan, 3.75);
    }

    #[test]
    fn names() {
        assert_eq!(by_name("lpt", 4).unwrap(), lpt());
        assert_eq!(by_name("sleepy2", 7).unwrap(), sleepy_two());
        assert_eq!(by_name("gsleepy-dynamic", 4).unwrap(), gsleepy(4, true).unwrap());
        assert!(by_name("greedy", 4).is_err());
    }
}
