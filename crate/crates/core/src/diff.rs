//! Mixed partial derivatives of scalar fields: exact (jets) and a
//! central-difference oracle.

use crate::error::{Error, Result};
use crate::field::{check_dims, ChartPoint, ScalarField, TangentVector};
use crate::jet::{Jet, MAX_ORDER};

/// Differentiation slot: an `x` or a `y` coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Slot {
    X(usize),
    Y(usize),
}

fn slots(x_indices: &[usize], y_indices: &[usize]) -> Vec<Slot> {
    x_indices
        .iter()
        .map(|&k| Slot::X(k))
        .chain(y_indices.iter().map(|&k| Slot::Y(k)))
        .collect()
}

fn validate(
    f: &dyn ScalarField,
    x: &ChartPoint,
    y: &TangentVector,
    order: &[Slot],
) -> Result<()> {
    let n = f.dim();
    check_dims(n, x, Some(y))?;
    y.ensure_nonzero()?;
    if order.len() > MAX_ORDER {
        return Err(Error::UnsupportedOrder { requested: order.len(), max: MAX_ORDER });
    }
    for s in order {
        let (Slot::X(k) | Slot::Y(k)) = *s;
        if k >= n {
            return Err(Error::InvalidParameter(format!("coordinate index {k} out of range for n = {n}")));
        }
    }
    Ok(())
}

/// Exact mixed partial of `f` at `(x, y)` with respect to the listed `x`
/// and `y` coordinates (repetitions allowed, order irrelevant).
///
/// Slots are sorted before directions are assigned, so permuted index lists
/// return bitwise identical values; relabelling jet directions alone moves
/// third-order results by rounding (~1e-11 relative near the Funk boundary).
pub fn jet_derivative(
    f: &dyn ScalarField,
    x: &ChartPoint,
    y: &TangentVector,
    x_indices: &[usize],
    y_indices: &[usize],
) -> Result<f64> {
    let mut order = slots(x_indices, y_indices);
    validate(f, x, y, &order)?;
    order.sort_unstable();
    let mut xs = x.jets();
    let mut ys = y.jets();
    for (dir, slot) in order.iter().enumerate() {
        match *slot {
            Slot::X(k) => xs[k] += Jet::variable(0.0, dir),
            Slot::Y(k) => ys[k] += Jet::variable(0.0, dir),
        }
    }
    let v = f.eval(&xs, &ys);
    let d = if order.is_empty() { v.value() } else { v.coeff((1 << order.len()) - 1) };
    if !v.is_finite() {
        return Err(Error::NonFinite { x: x.coords().to_vec(), y: y.coords().to_vec() });
    }
    Ok(d)
}

/// Default initial step of the extrapolation tableau for a derivative of
/// the given total order. Round-off in a nested central difference grows like
/// `eps / h^order`, so higher orders start wider.
pub fn default_fd_step(order: usize) -> f64 {
    match order {
        0 | 1 => 1e-2,
        2 => 2e-2,
        3 => 4e-2,
        _ => 6e-2,
    }
}

const TABLEAU: usize = 16;

/// Central-difference estimate of the same partial as [`jet_derivative`].
///
/// Richardson extrapolation is iterated over a halving sequence of steps
/// starting at `step` (Ridders' tableau); the entry with the smallest
/// estimated error is returned, and the sweep stops once round-off makes the
/// estimates diverge. Steps are scaled by the coordinate magnitude and rounded
/// to powers of two. Steps whose stencil leaves the domain of `f` (non-finite
/// values) are skipped.
pub fn fd_derivative(
    f: &dyn ScalarField,
    x: &ChartPoint,
    y: &TangentVector,
    x_indices: &[usize],
    y_indices: &[usize],
    step: f64,
) -> Result<f64> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidParameter(format!("finite-difference step must be positive, got {step}")));
    }
    let order = slots(x_indices, y_indices);
    validate(f, x, y, &order)?;
    let eval = |h: f64| {
        let steps: Vec<f64> = order
            .iter()
            .map(|s| match *s {
                Slot::X(k) => pow2_step(h, x.coords()[k]),
                Slot::Y(k) => pow2_step(h, y.coords()[k]),
            })
            .collect();
        nested(f, x.coords().to_vec(), y.coords().to_vec(), &order, &steps)
    };
    if order.is_empty() {
        return Ok(eval(step));
    }
    let mut h = step;
    let mut first = eval(h);
    let mut tries = 0;
    while !first.is_finite() && tries < 20 {
        h /= 2.0;
        first = eval(h);
        tries += 1;
    }
    let mut prev = vec![first];
    let mut best = (first, f64::INFINITY);
    let floor = f64::EPSILON.powf(1.0 / (order.len() + 2) as f64);
    for _ in 1..TABLEAU {
        h /= 2.0;
        if h < floor {
            break;
        }
        let mut row = vec![eval(h)];
        let mut fac = 4.0;
        for j in 1..=prev.len() {
            let v = (row[j - 1] * fac - prev[j - 1]) / (fac - 1.0);
            fac *= 4.0;
            let err = (v - row[j - 1]).abs().max((v - prev[j - 1]).abs());
            if err <= best.1 {
                best = (v, err);
            }
            row.push(v);
        }
        prev = row;
    }
    if !best.0.is_finite() {
        return Err(Error::NonFinite { x: x.coords().to_vec(), y: y.coords().to_vec() });
    }
    Ok(best.0)
}

fn pow2_step(step: f64, coord: f64) -> f64 {
    let raw = step * coord.abs().max(1.0);
    2f64.powi(raw.log2().round() as i32)
}

/// Nested central difference; `steps[k]` is the step of slot `k`, fixed from
/// the base point so that repeated slots share one stencil.
fn nested(f: &dyn ScalarField, x: Vec<f64>, y: Vec<f64>, order: &[Slot], steps: &[f64]) -> f64 {
    let Some((&first, rest)) = order.split_first() else {
        let xs: Vec<Jet> = x.iter().map(|&v| Jet::constant(v)).collect();
        let ys: Vec<Jet> = y.iter().map(|&v| Jet::constant(v)).collect();
        return f.eval(&xs, &ys).value();
    };
    let h = steps[0];
    let shifted = |sign: f64| {
        let (mut xp, mut yp) = (x.clone(), y.clone());
        match first {
            Slot::X(k) => xp[k] += sign * h,
            Slot::Y(k) => yp[k] += sign * h,
        }
        nested(f, xp, yp, rest, &steps[1..])
    };
    (shifted(1.0) - shifted(-1.0)) / (2.0 * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FnField;
    use crate::jet::dot;

    fn pt(v: &[f64]) -> ChartPoint {
        ChartPoint::new(v.to_vec()).unwrap()
    }
    fn tv(v: &[f64]) -> TangentVector {
        TangentVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn quadratic_form_second_derivative() {
        let f = FnField::new(2, |_x: &[Jet], y: &[Jet]| dot(y, y));
        let d = jet_derivative(&f, &pt(&[0.4, -2.0]), &tv(&[0.3, 0.9]), &[], &[0, 0]).unwrap();
        assert_eq!(d, 2.0);
    }

    #[test]
    fn polynomial_mixed_partial() {
        // <x,y>^2 ; d^2/dx^2 dy^1 = 2 y_2 x_1 at x=(1,0), y=(0,1)
        let f = FnField::new(2, |x: &[Jet], y: &[Jet]| {
            let s = dot(x, y);
            s * s
        });
        let d = jet_derivative(&f, &pt(&[1.0, 0.0]), &tv(&[0.0, 1.0]), &[1], &[0]).unwrap();
        assert_eq!(d, 2.0);
    }

    #[test]
    fn order_limit_enforced() {
        let f = FnField::new(2, |_x: &[Jet], y: &[Jet]| dot(y, y));
        let err = jet_derivative(&f, &pt(&[0.0, 0.0]), &tv(&[1.0, 0.0]), &[0, 1, 0], &[0, 1]);
        assert_eq!(err.unwrap_err(), Error::UnsupportedOrder { requested: 5, max: 4 });
    }

    #[test]
    fn non_finite_reports_probe() {
        let f = FnField::new(2, |x: &[Jet], _y: &[Jet]| x[0].ln());
        let err = jet_derivative(&f, &pt(&[-1.0, 0.0]), &tv(&[1.0, 0.0]), &[0], &[]).unwrap_err();
        assert_eq!(err, Error::NonFinite { x: vec![-1.0, 0.0], y: vec![1.0, 0.0] });
    }

    #[test]
    fn fd_on_quadratic_and_linear() {
        let f = FnField::new(2, |_x: &[Jet], y: &[Jet]| dot(y, y));
        let d = fd_derivative(&f, &pt(&[0.0, 0.0]), &tv(&[1.0, 2.0]), &[], &[0], 1e-5).unwrap();
        assert!((d - 2.0).abs() < 1e-9);

        let g = FnField::new(2, |x: &[Jet], y: &[Jet]| dot(x, y));
        let d = fd_derivative(&g, &pt(&[0.0, 0.0]), &tv(&[3.0, 4.0]), &[0], &[], 1e-5).unwrap();
        assert_eq!(d, 3.0);
    }

    #[test]
    fn fd_matches_jets_on_funk_mixed_partial() {
        let funk = crate::catalog::funk(2, crate::catalog::Sign::Plus).unwrap();
        let f = crate::field::Energy(&funk);
        let (x, y) = (pt(&[0.3, 0.1]), tv(&[0.5, -0.2]));
        let ad = jet_derivative(&f, &x, &y, &[0], &[1]).unwrap();
        let fd = fd_derivative(&f, &x, &y, &[0], &[1], default_fd_step(2)).unwrap();
        assert!((ad - fd).abs() < 1e-6 * ad.abs(), "{ad} {fd}");
    }

    #[test]
    fn repeated_slot_keeps_one_stencil() {
        // step * |x0| sits on a power-of-two rounding boundary
        let f = FnField::new(2, |x: &[Jet], _y: &[Jet]| x[0].powi(3));
        let x0 = 2f64.powf(-8.5) / 2.5e-3;
        let d = fd_derivative(&f, &pt(&[x0, 0.0]), &tv(&[1.0, 0.0]), &[0, 0, 0], &[], 5e-3).unwrap();
        assert!((d - 6.0).abs() < 1e-8, "{d}");
    }

    #[test]
    fn fd_rejects_bad_step() {
        let f = FnField::new(2, |_x: &[Jet], y: &[Jet]| dot(y, y));
        assert!(fd_derivative(&f, &pt(&[0.0, 0.0]), &tv(&[1.0, 2.0]), &[], &[0], 0.0).is_err());
    }
}
